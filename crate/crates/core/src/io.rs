//! Result documents and report tables.

use crate::generator::Truth;
use crate::inference::{FitConfig, FitResult};
use crate::likelihood::{ClusterParams, RateParams};
use crate::uncertainty::BandTable;
use crate::vocab::{InitialAction, Outcome};
use crate::{CsbmError, Result};
use serde::{Deserialize, Serialize};
use std::fmt::Write as _;
use std::fs;
use std::path::Path;

/// Serde adapter for `f64` values that may be infinite or NaN: finite values
/// stay JSON numbers, the rest become `"inf"`, `"-inf"` or `"nan"`.
pub mod extended_f64 {
    use serde::{Deserialize, Deserializer, Serialize, Serializer};

    #[derive(Serialize, Deserialize)]
    #[serde(untagged)]
    enum Repr {
        Number(f64),
        Text(String),
    }

    fn to_repr(v: f64) -> Repr {
        match v {
            v if v.is_finite() => Repr::Number(v),
            v if v.is_nan() => Repr::Text("nan".into()),
            v if v > 0.0 => Repr::Text("inf".into()),
            _ => Repr::Text("-inf".into()),
        }
    }

    fn from_repr<E: serde::de::Error>(repr: Repr) -> Result<f64, E> {
        match repr {
            Repr::Number(v) => Ok(v),
            Repr::Text(t) => match t.as_str() {
                "inf" => Ok(f64::INFINITY),
                "-inf" => Ok(f64::NEG_INFINITY),
                "nan" => Ok(f64::NAN),
                other => Err(E::custom(format!("not a number: {other}"))),
            },
        }
    }

    pub fn serialize<S: Serializer>(v: &f64, s: S) -> Result<S::Ok, S::Error> {
        to_repr(*v).serialize(s)
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> Result<f64, D::Error> {
        from_repr(Repr::deserialize(d)?)
    }

    pub mod vec {
        use super::*;

        pub fn serialize<S: Serializer>(v: &[f64], s: S) -> Result<S::Ok, S::Error> {
            v.iter().map(|&x| to_repr(x)).collect::<Vec<_>>().serialize(s)
        }

        pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> Result<Vec<f64>, D::Error> {
            Vec::<Repr>::deserialize(d)?.into_iter().map(from_repr).collect()
        }
    }

    pub mod option {
        use super::*;

        pub fn serialize<S: Serializer>(v: &Option<f64>, s: S) -> Result<S::Ok, S::Error> {
            v.map(to_repr).serialize(s)
        }

        pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> Result<Option<f64>, D::Error> {
            Option::<Repr>::deserialize(d)?.map(from_repr).transpose()
        }
    }
}

pub const FIT_FORMAT: &str = "csbm-fit";
pub const FIT_FORMAT_VERSION: u32 = 1;

/// Serialized fit: provenance, the configuration echo, the player roster
/// (in label order) and the result.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct FitDocument {
    pub format: String,
    pub format_version: u32,
    pub tool_version: String,
    pub config: FitConfig,
    pub players: Vec<String>,
    pub result: FitResult,
}

impl FitDocument {
    pub fn new(config: FitConfig, players: Vec<String>, result: FitResult) -> Self {
        FitDocument {
            format: FIT_FORMAT.into(),
            format_version: FIT_FORMAT_VERSION,
            tool_version: env!("CARGO_PKG_VERSION").into(),
            config,
            players,
            result,
        }
    }

    pub fn to_json(&self) -> Result<String> {
        let mut text = serde_json::to_string_pretty(self)?;
        text.push('\n');
        Ok(text)
    }

    pub fn from_json(text: &str) -> Result<Self> {
        let doc: FitDocument = serde_json::from_str(text)?;
        if doc.format != FIT_FORMAT || doc.format_version != FIT_FORMAT_VERSION {
            return Err(CsbmError::Config(format!("unsupported fit document {} v{}", doc.format, doc.format_version)));
        }
        doc.result.params.validate()?;
        Ok(doc)
    }
}

pub fn truth_to_json(truth: &Truth) -> Result<String> {
    let mut text = serde_json::to_string_pretty(truth)?;
    text.push('\n');
    Ok(text)
}

pub fn truth_from_json(text: &str) -> Result<Truth> {
    let truth: Truth = serde_json::from_str(text)?;
    truth.params.validate()?;
    if truth.labels.len() != truth.players.len() || truth.labels.iter().any(|&e| e >= truth.params.k) {
        return Err(CsbmError::InvalidParams("truth labels do not match players or K".into()));
    }
    Ok(truth)
}

/// Writes `contents` to a sibling temporary file and renames it into place,
/// so `path` is either complete or untouched.
pub fn atomic_write(path: &Path, contents: &[u8]) -> Result<()> {
    let dir = path.parent().filter(|d| !d.as_os_str().is_empty()).unwrap_or(Path::new("."));
    let name = path.file_name().ok_or_else(|| CsbmError::Config(format!("not a file path: {}", path.display())))?;
    let tmp = dir.join(format!(".{}.tmp-{}", name.to_string_lossy(), std::process::id()));
    let result = fs::write(&tmp, contents).and_then(|_| fs::rename(&tmp, path));
    if result.is_err() {
        let _ = fs::remove_file(&tmp);
    }
    Ok(result?)
}

/// `player,cluster` with 1-based clusters.
pub fn labels_csv(players: &[String], labels: &[usize]) -> String {
    let mut out = String::from("player,cluster\n");
    for (p, e) in players.iter().zip(labels) {
        let _ = writeln!(out, "{p},{}", e + 1);
    }
    out
}

fn cluster_header(k: usize) -> String {
    (1..=k).map(|c| format!("C{c}")).collect::<Vec<_>>().join(",")
}

fn join(values: impl IntoIterator<Item = f64>) -> String {
    values.into_iter().map(|v| format!("{v}")).collect::<Vec<_>>().join(",")
}

/// `P_sk`: one row per initial action, one column per cluster.
pub fn initial_csv(params: &ClusterParams) -> String {
    let mut out = format!("action,{}\n", cluster_header(params.k));
    for action in InitialAction::ALL {
        let _ = writeln!(out, "{action},{}", join(params.p_init[action.index()].iter().copied()));
    }
    out
}

/// Transition table: originating cluster rows; receiving cluster and
/// outcome columns. In general mode the entries are each rate's share of
/// the cluster's total integrated hazard over the play clock.
pub fn transitions_csv(params: &ClusterParams) -> String {
    let k = params.k;
    let outcomes: Vec<&str> = Outcome::ALL.iter().map(|a| a.token()).collect();
    let mut out = format!("from,{},{}\n", cluster_header(k), outcomes.join(","));
    let rows: Vec<Vec<f64>> = match &params.rates {
        RateParams::Simplified { transitions, .. } => transitions.clone(),
        RateParams::General { rho, eta } => {
            let full = params.basis.full_integrals();
            let mass = |r: &crate::spline::RateCoeffs| r.weights().iter().zip(&full).map(|(w, i)| w * i).sum::<f64>();
            (0..k)
                .map(|c| {
                    let row: Vec<f64> = rho[c].iter().chain(&eta[c]).map(mass).collect();
                    let total: f64 = row.iter().sum();
                    row.iter().map(|v| v / total).collect()
                })
                .collect()
        }
    };
    for (c, row) in rows.iter().enumerate() {
        let _ = writeln!(out, "C{},{}", c + 1, join(row.iter().copied()));
    }
    out
}

/// `cluster,t,rate,se_lower,se_upper`.
pub fn bands_csv(table: &BandTable) -> String {
    let mut out = String::from("cluster,t,rate,se_lower,se_upper\n");
    for row in &table.rows {
        let _ = writeln!(out, "{},{},{},{},{}", row.name, row.t, row.rate, row.lower, row.upper);
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::likelihood::Mode;
    use crate::spline::SplineBasis;

    #[test]
    fn table_shapes() {
        let params = ClusterParams::uniform(2, SplineBasis::default(), Mode::Simplified, 1.0);
        let init = initial_csv(&params);
        assert_eq!(init.lines().next().unwrap(), "action,C1,C2");
        assert_eq!(init.lines().count(), 4);
        let trans = transitions_csv(&params);
        assert_eq!(trans.lines().next().unwrap(), "from,C1,C2,MAKE2,MISS2,MAKE3,MISS3,FOULED,TO");
        assert_eq!(trans.lines().count(), 3);
        assert_eq!(labels_csv(&["A".into()], &[1]), "player,cluster\nA,2\n");
    }

    #[test]
    fn non_finite_values_round_trip() {
        #[derive(Serialize, Deserialize)]
        struct Row {
            #[serde(with = "extended_f64")]
            a: f64,
            #[serde(with = "extended_f64::vec")]
            b: Vec<f64>,
            #[serde(with = "extended_f64::option")]
            c: Option<f64>,
        }
        let row = Row { a: f64::NEG_INFINITY, b: vec![1.5, f64::INFINITY], c: Some(f64::NAN) };
        let text = serde_json::to_string(&row).unwrap();
        assert_eq!(text, r#"{"a":"-inf","b":[1.5,"inf"],"c":"nan"}"#);
        let back: Row = serde_json::from_str(&text).unwrap();
        assert_eq!(back.a, f64::NEG_INFINITY);
        assert_eq!(back.b, vec![1.5, f64::INFINITY]);
        assert!(back.c.unwrap().is_nan());
        assert!(serde_json::from_str::<Row>(r#"{"a":"x","b":[],"c":null}"#).is_err());
    }

    #[test]
    fn atomic_write_replaces_file() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("out.csv");
        atomic_write(&path, b"one").unwrap();
        atomic_write(&path, b"two").unwrap();
        assert_eq!(fs::read_to_string(&path).unwrap(), "two");
        assert_eq!(fs::read_dir(dir.path()).unwrap().count(), 1);
    }
}
