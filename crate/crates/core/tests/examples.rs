macro_rules! example {
    ($name:ident) => {
        mod $name {
            include!(concat!(env!("CARGO_MANIFEST_DIR"), "/examples/", stringify!($name), ".rs"));
        }
    };
}

example!(parse_log);
example!(spline_rates);
example!(likelihood);
example!(simulate);
example!(fit);
example!(bands);
example!(gibbs_vs_exact);
example!(pipeline);

#[test]
fn parse_log_runs() {
    parse_log::run_example(None).expect("parse_log example should run");
}

#[test]
fn spline_rates_runs() {
    spline_rates::run_example().expect("spline_rates example should run");
}

#[test]
fn likelihood_runs() {
    likelihood::run_example().expect("likelihood example should run");
}

#[test]
fn simulate_runs() {
    simulate::run_example(Some("3".into())).expect("simulate example should run");
}

#[test]
fn fit_runs() {
    fit::run_example().expect("fit example should run");
}

#[test]
fn bands_runs() {
    bands::run_example().expect("bands example should run");
}

#[test]
fn gibbs_vs_exact_runs() {
    gibbs_vs_exact::run_example().expect("gibbs_vs_exact example should run");
}

#[test]
fn pipeline_runs() {
    let dir = tempfile::tempdir().unwrap();
    pipeline::run_example(Some(dir.path().to_string_lossy().into_owned())).expect("pipeline example should run");
    assert!(dir.path().join("fit.json").exists());
}
