use super::{Event, Play, PlayerIdx, Source, Target, TransactionLog, CSV_HEADER};
use crate::vocab::{looks_like_token, InitialAction, Outcome};
use crate::{CsbmError, Result, PLAY_CLOCK};
use std::collections::{HashMap, HashSet};
use std::io::Read;

#[derive(Clone, Debug, Default)]
pub struct ParseOptions {
    /// Drop the enclosing play when a row carries an unknown event token
    /// (jump balls and other rare events) instead of failing.
    pub skip_unknown: bool,
}

#[derive(Clone, Debug, Default, PartialEq)]
pub struct ParseReport {
    /// `(game_id, play_id)` of every play dropped for an unknown token.
    pub skipped_plays: Vec<(String, String)>,
}

#[derive(Debug)]
enum RawNode {
    Initial(InitialAction),
    Outcome(Outcome),
    Player(String),
}

#[derive(Debug)]
struct RawEvent {
    from: RawNode,
    to: RawNode,
    time: f64,
    oncourt: Vec<String>,
}

struct PendingPlay {
    key: (String, String),
    events: Vec<RawEvent>,
    last_time: f64,
    dropped: bool,
}

pub fn parse_transactions<R: Read>(text: R, options: &ParseOptions) -> Result<TransactionLog> {
    parse_transactions_with_report(text, options).map(|(log, _)| log)
}

pub fn parse_transactions_with_report<R: Read>(
    text: R,
    options: &ParseOptions,
) -> Result<(TransactionLog, ParseReport)> {
    let mut reader = csv::ReaderBuilder::new().has_headers(false).comment(Some(b'#')).flexible(true).from_reader(text);

    let mut builder = Builder::default();
    let mut report = ParseReport::default();
    let mut pending: Option<PendingPlay> = None;
    let mut seen_keys: HashSet<(String, String)> = HashSet::new();
    let mut header_seen = false;

    for record in reader.records() {
        let record = record?;
        let line = record.position().map(|p| p.line()).unwrap_or(0);
        if !header_seen {
            let fields: Vec<&str> = record.iter().map(str::trim).collect();
            if fields != CSV_HEADER {
                return Err(CsbmError::Parse { line, message: format!("expected header `{}`", CSV_HEADER.join(",")) });
            }
            header_seen = true;
            continue;
        }
        if record.len() != CSV_HEADER.len() {
            return Err(CsbmError::Parse {
                line,
                message: format!("expected {} fields, found {}", CSV_HEADER.len(), record.len()),
            });
        }
        let key = (record[0].trim().to_string(), record[1].trim().to_string());
        let same_play = pending.as_ref().is_some_and(|p| p.key == key);
        if !same_play {
            if let Some(done) = pending.take() {
                builder.commit(done, &mut report);
            }
            if !seen_keys.insert(key.clone()) {
                return Err(CsbmError::Parse {
                    line,
                    message: format!("rows of play {}/{} are not contiguous", key.0, key.1),
                });
            }
            pending = Some(PendingPlay { key, events: Vec::new(), last_time: f64::NEG_INFINITY, dropped: false });
        }
        let play = pending.as_mut().expect("pending play was just set");

        match parse_row(&record, line) {
            Ok(ev) => {
                if ev.time < play.last_time {
                    return Err(CsbmError::Parse {
                        line,
                        message: format!("time {} precedes previous event at {}", ev.time, play.last_time),
                    });
                }
                play.last_time = ev.time;
                play.events.push(ev);
            }
            Err(CsbmError::UnknownToken { .. }) if options.skip_unknown => play.dropped = true,
            Err(e) => return Err(e),
        }
    }
    if let Some(done) = pending.take() {
        builder.commit(done, &mut report);
    }
    Ok((builder.finish(), report))
}

fn parse_row(record: &csv::StringRecord, line: u64) -> Result<RawEvent> {
    let time_field = record[4].trim();
    let time: f64 = time_field
        .parse()
        .map_err(|_| CsbmError::Parse { line, message: format!("unparsable time `{time_field}`") })?;
    if !time.is_finite() {
        return Err(CsbmError::Parse { line, message: format!("unparsable time `{time_field}`") });
    }
    if !(0.0..=PLAY_CLOCK).contains(&time) {
        return Err(CsbmError::TimeOutOfRange { line, time });
    }

    let mut oncourt: Vec<String> = Vec::new();
    for id in record[5].split('|').map(str::trim) {
        if id.is_empty() {
            return Err(CsbmError::Parse { line, message: "empty player id in on-court set".into() });
        }
        if oncourt.iter().any(|o| o == id) {
            return Err(CsbmError::Parse { line, message: format!("duplicate on-court player `{id}`") });
        }
        oncourt.push(id.to_string());
    }

    let from_field = record[2].trim();
    let to_field = record[3].trim();
    let from = if let Ok(a) = from_field.parse::<InitialAction>() {
        RawNode::Initial(a)
    } else {
        resolve_player(from_field, &oncourt, line, "sender")?
    };
    let to = if let Ok(o) = to_field.parse::<Outcome>() {
        RawNode::Outcome(o)
    } else {
        resolve_player(to_field, &oncourt, line, "receiver")?
    };

    match (&from, &to) {
        (RawNode::Initial(_), RawNode::Outcome(_)) => {
            return Err(CsbmError::Parse { line, message: "neither end of the event is a player".into() })
        }
        (RawNode::Player(a), RawNode::Player(b)) if a == b => {
            return Err(CsbmError::Parse { line, message: format!("player `{a}` passes to itself") })
        }
        _ => {}
    }
    Ok(RawEvent { from, to, time, oncourt })
}

fn resolve_player(field: &str, oncourt: &[String], line: u64, role: &'static str) -> Result<RawNode> {
    if oncourt.iter().any(|o| o == field) {
        return Ok(RawNode::Player(field.to_string()));
    }
    let misplaced = field.parse::<InitialAction>().is_ok() || field.parse::<Outcome>().is_ok();
    if misplaced {
        return Err(CsbmError::Parse { line, message: format!("token `{field}` is not valid as {role}") });
    }
    if looks_like_token(field) {
        return Err(CsbmError::UnknownToken { line, token: field.to_string() });
    }
    Err(CsbmError::NotOnCourt { line, role, player: field.to_string() })
}

#[derive(Default)]
struct Builder {
    players: Vec<String>,
    index: HashMap<String, PlayerIdx>,
    plays: Vec<Play>,
}

impl Builder {
    fn intern(&mut self, id: &str) -> PlayerIdx {
        if let Some(&i) = self.index.get(id) {
            return i;
        }
        let i = self.players.len();
        self.players.push(id.to_string());
        self.index.insert(id.to_string(), i);
        i
    }

    fn commit(&mut self, pending: PendingPlay, report: &mut ParseReport) {
        if pending.dropped {
            report.skipped_plays.push(pending.key);
            return;
        }
        let mut events = Vec::with_capacity(pending.events.len());
        for raw in pending.events {
            let from = match raw.from {
                RawNode::Initial(a) => Source::Initial(a),
                RawNode::Player(ref p) => Source::Player(self.intern(p)),
                RawNode::Outcome(_) => unreachable!("outcomes are rejected in the sender column"),
            };
            let to = match raw.to {
                RawNode::Outcome(o) => Target::Outcome(o),
                RawNode::Player(ref p) => Target::Player(self.intern(p)),
                RawNode::Initial(_) => unreachable!("initial actions are rejected in the receiver column"),
            };
            let mut oncourt: Vec<PlayerIdx> = raw.oncourt.iter().map(|p| self.intern(p)).collect();
            oncourt.sort_unstable();
            events.push(Event { from, to, time: raw.time, oncourt });
        }
        self.plays.push(Play { game_id: pending.key.0, play_id: pending.key.1, team: 0, events });
    }

    fn finish(mut self) -> TransactionLog {
        assign_teams(self.players.len(), &mut self.plays);
        TransactionLog { players: self.players, plays: self.plays }
    }
}

/// Labels each play with the connected component of the "shared the court"
/// relation, numbered by first appearance.
fn assign_teams(n: usize, plays: &mut [Play]) {
    let mut parent: Vec<usize> = (0..n).collect();
    fn find(parent: &mut [usize], mut x: usize) -> usize {
        while parent[x] != x {
            parent[x] = parent[parent[x]];
            x = parent[x];
        }
        x
    }
    for play in plays.iter() {
        for ev in &play.events {
            if let Some((&first, rest)) = ev.oncourt.split_first() {
                for &other in rest {
                    let (a, b) = (find(&mut parent, first), find(&mut parent, other));
                    if a != b {
                        parent[a.max(b)] = a.min(b);
                    }
                }
            }
        }
    }
    let mut team_of_root: HashMap<usize, usize> = HashMap::new();
    for play in plays.iter_mut() {
        let Some(&anchor) = play.events.first().and_then(|e| e.oncourt.first()) else {
            continue;
        };
        let root = find(&mut parent, anchor);
        let next = team_of_root.len();
        play.team = *team_of_root.entry(root).or_insert(next);
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    const SAMPLE: &str = include_str!("../../data/sample.csv");

    fn parse(text: &str) -> Result<TransactionLog> {
        parse_transactions(text.as_bytes(), &ParseOptions::default())
    }

    #[test]
    fn sample_parses() {
        let log = parse(SAMPLE).unwrap();
        assert_eq!(log.plays.len(), 2);
        assert_eq!(log.n_events(), 9);
        let mut roster = log.players.clone();
        roster.sort();
        let mut expected: Vec<String> =
            ["C5", "C9", "C20", "C30", "C34", "H3", "H6", "H15", "H21", "H31"].iter().map(|s| s.to_string()).collect();
        expected.sort();
        assert_eq!(roster, expected);
        assert_eq!(log.plays[0].team, 0);
        assert_eq!(log.plays[1].team, 1);
        assert!(log.plays.iter().all(Play::is_complete));
    }

    #[test]
    fn empty_stream_is_empty_log() {
        let log = parse("").unwrap();
        assert_eq!(log.plays.len(), 0);
        assert_eq!(log.n_players(), 0);
        let log = parse("game_id,play_id,from,to,time,oncourt\n# nothing\n").unwrap();
        assert_eq!(log.plays.len(), 0);
    }

    #[test]
    fn time_outside_limit_reports_line() {
        let text = "game_id,play_id,from,to,time,oncourt\n1,1,INBOUND,A1,0,A1|A2\n1,1,A1,A2,25.0,A1|A2\n";
        match parse(text) {
            Err(CsbmError::TimeOutOfRange { line, time }) => {
                assert_eq!(line, 3);
                assert_eq!(time, 25.0);
            }
            other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn malformed_rows() {
        let wrong_arity = "game_id,play_id,from,to,time,oncourt\n1,1,INBOUND,A1,0\n";
        assert!(matches!(parse(wrong_arity), Err(CsbmError::Parse { line: 2, .. })));
        let bad_time = "game_id,play_id,from,to,time,oncourt\n1,1,INBOUND,A1,abc,A1|A2\n";
        assert!(matches!(parse(bad_time), Err(CsbmError::Parse { line: 2, .. })));
        let bad_header = "a,b,c\n";
        assert!(matches!(parse(bad_header), Err(CsbmError::Parse { line: 1, .. })));
        let receiver_off = "game_id,play_id,from,to,time,oncourt\n1,1,INBOUND,A1,0,A1|A2\n1,1,A1,A9,2,A1|A2\n";
        assert!(matches!(parse(receiver_off), Err(CsbmError::NotOnCourt { line: 3, role: "receiver", .. })));
        let backwards = "game_id,play_id,from,to,time,oncourt\n1,1,INBOUND,A1,5,A1|A2\n1,1,A1,A2,2,A1|A2\n";
        assert!(matches!(parse(backwards), Err(CsbmError::Parse { line: 3, .. })));
        let both_tokens = "game_id,play_id,from,to,time,oncourt\n1,1,INBOUND,MAKE2,5,A1|A2\n";
        assert!(matches!(parse(both_tokens), Err(CsbmError::Parse { line: 2, .. })));
    }

    #[test]
    fn unknown_tokens_fail_or_skip_the_play() {
        let text = "\
game_id,play_id,from,to,time,oncourt
1,1,INBOUND,A1,0,A1|A2
1,1,A1,JUMPBALL,3,A1|A2
1,2,REBOUND,A2,0,A1|A2|A3
1,2,A2,MAKE2,4,A1|A2|A3
";
        assert!(matches!(parse(text), Err(CsbmError::UnknownToken { line: 3, .. })));
        let (log, report) =
            parse_transactions_with_report(text.as_bytes(), &ParseOptions { skip_unknown: true }).unwrap();
        assert_eq!(log.plays.len(), 1);
        assert_eq!(log.plays[0].play_id, "2");
        assert_eq!(report.skipped_plays, vec![("1".to_string(), "1".to_string())]);
        // players are registered in first-appearance order of the kept plays
        assert_eq!(log.players, vec!["A2", "A1", "A3"]);
    }

    #[test]
    fn comments_and_decimal_times() {
        let text = "# header comment\ngame_id,play_id,from,to,time,oncourt\n# a play\ng,p,STEAL,X1,0.5,X1|X2\ng,p,X1,TO,1.25,X1|X2\n";
        let log = parse(text).unwrap();
        assert_eq!(log.plays[0].events[1].time, 1.25);
    }

    #[test]
    fn sample_round_trips() {
        let log = parse(SAMPLE).unwrap();
        let again = parse(&log.to_csv_string()).unwrap();
        assert_eq!(log, again);
    }
}
