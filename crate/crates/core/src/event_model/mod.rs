//! Transaction logs: parsing, validation, and the derived possession statistics
//! that every likelihood term consumes.

mod parse;
mod stats;

pub use parse::{parse_transactions, parse_transactions_with_report, ParseOptions, ParseReport};
pub use stats::{
    cluster_counts, derive_stats, derive_stats_with, eligible_count, Eligibility, EventRef, IncompletePolicy,
    Initiation, OutcomeEvent, PassEvent, Possession, Release, StatsOptions, SufficientStats,
};

use crate::vocab::{InitialAction, Outcome};
use crate::Result;
use std::io::Write;

/// Index of a player in [`TransactionLog::players`].
pub type PlayerIdx = usize;

#[derive(Clone, Copy, Debug, PartialEq)]
pub enum Source {
    Initial(InitialAction),
    Player(PlayerIdx),
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub enum Target {
    Player(PlayerIdx),
    Outcome(Outcome),
}

#[derive(Clone, Debug, PartialEq)]
pub struct Event {
    pub from: Source,
    pub to: Target,
    /// Seconds on the play clock.
    pub time: f64,
    /// Offensive players on court, sorted by roster index.
    pub oncourt: Vec<PlayerIdx>,
}

#[derive(Clone, Debug, PartialEq)]
pub struct Play {
    pub game_id: String,
    pub play_id: String,
    /// Connected component of the on-court co-membership graph.
    pub team: usize,
    pub events: Vec<Event>,
}

impl Play {
    /// A play is complete when its last event ends in an outcome.
    pub fn is_complete(&self) -> bool {
        matches!(self.events.last(), Some(Event { to: Target::Outcome(_), .. }))
    }
}

#[derive(Clone, Debug, Default, PartialEq)]
pub struct TransactionLog {
    /// Roster in order of first appearance.
    pub players: Vec<String>,
    pub plays: Vec<Play>,
}

pub const CSV_HEADER: [&str; 6] = ["game_id", "play_id", "from", "to", "time", "oncourt"];

impl TransactionLog {
    pub fn n_players(&self) -> usize {
        self.players.len()
    }

    pub fn n_events(&self) -> usize {
        self.plays.iter().map(|p| p.events.len()).sum()
    }

    pub fn player_index(&self, id: &str) -> Option<PlayerIdx> {
        self.players.iter().position(|p| p == id)
    }

    pub fn n_teams(&self) -> usize {
        self.plays.iter().map(|p| p.team + 1).max().unwrap_or(0)
    }

    /// Writes the log in the CSV wire format.
    pub fn write_csv<W: Write>(&self, writer: W) -> Result<()> {
        let mut w = csv::WriterBuilder::new().terminator(csv::Terminator::Any(b'\n')).from_writer(writer);
        w.write_record(CSV_HEADER)?;
        for play in &self.plays {
            for ev in &play.events {
                let from = match ev.from {
                    Source::Initial(a) => a.token().to_string(),
                    Source::Player(i) => self.players[i].clone(),
                };
                let to = match ev.to {
                    Target::Player(j) => self.players[j].clone(),
                    Target::Outcome(o) => o.token().to_string(),
                };
                let oncourt = ev.oncourt.iter().map(|&i| self.players[i].as_str()).collect::<Vec<_>>().join("|");
                w.write_record([
                    play.game_id.as_str(),
                    play.play_id.as_str(),
                    &from,
                    &to,
                    &format_time(ev.time),
                    &oncourt,
                ])?;
            }
        }
        w.flush()?;
        Ok(())
    }

    pub fn to_csv_string(&self) -> String {
        let mut buf = Vec::new();
        self.write_csv(&mut buf).expect("writing to a Vec cannot fail");
        String::from_utf8(buf).expect("log ids are UTF-8")
    }
}

/// Shortest representation that parses back to the same `f64`.
pub(crate) fn format_time(t: f64) -> String {
    format!("{t}")
}
