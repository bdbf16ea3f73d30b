//! Initial-action and outcome vocabularies.

use serde::{Deserialize, Serialize};
use std::fmt;
use std::str::FromStr;

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub enum InitialAction {
    Inbound,
    Rebound,
    Steal,
}

impl InitialAction {
    pub const ALL: [InitialAction; 3] = [Self::Inbound, Self::Rebound, Self::Steal];
    pub const COUNT: usize = 3;

    pub fn index(self) -> usize {
        self as usize
    }

    pub fn token(self) -> &'static str {
        match self {
            Self::Inbound => "INBOUND",
            Self::Rebound => "REBOUND",
            Self::Steal => "STEAL",
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub enum Outcome {
    Make2,
    Miss2,
    Make3,
    Miss3,
    Fouled,
    Turnover,
}

impl Outcome {
    pub const ALL: [Outcome; 6] = [Self::Make2, Self::Miss2, Self::Make3, Self::Miss3, Self::Fouled, Self::Turnover];
    pub const COUNT: usize = 6;

    pub fn index(self) -> usize {
        self as usize
    }

    pub fn token(self) -> &'static str {
        match self {
            Self::Make2 => "MAKE2",
            Self::Miss2 => "MISS2",
            Self::Make3 => "MAKE3",
            Self::Miss3 => "MISS3",
            Self::Fouled => "FOULED",
            Self::Turnover => "TO",
        }
    }
}

impl FromStr for InitialAction {
    type Err = ();

    fn from_str(s: &str) -> Result<Self, ()> {
        Self::ALL.into_iter().find(|a| a.token() == s).ok_or(())
    }
}

impl FromStr for Outcome {
    type Err = ();

    fn from_str(s: &str) -> Result<Self, ()> {
        Self::ALL.into_iter().find(|a| a.token() == s).ok_or(())
    }
}

impl fmt::Display for InitialAction {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.token())
    }
}

impl fmt::Display for Outcome {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.token())
    }
}

/// Heuristic for "this looks like an event token rather than a player id":
/// upper-case ASCII letters and underscores only.
pub(crate) fn looks_like_token(s: &str) -> bool {
    s.len() >= 2 && s.bytes().all(|b| b.is_ascii_uppercase() || b == b'_')
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn tokens_round_trip() {
        for a in InitialAction::ALL {
            assert_eq!(a.token().parse::<InitialAction>(), Ok(a));
        }
        for o in Outcome::ALL {
            assert_eq!(o.token().parse::<Outcome>(), Ok(o));
        }
        assert!("JUMPBALL".parse::<Outcome>().is_err());
    }

    #[test]
    fn token_heuristic() {
        assert!(looks_like_token("JUMP_BALL"));
        assert!(!looks_like_token("C9"));
        assert!(!looks_like_token("H#3"));
    }
}
