// Parse a transaction log and print the derived possession statistics.
//
// `cargo run --example parse_log [path.csv]` (defaults to the bundled sample).

use csbm::{derive_stats, parse_transactions, ParseOptions};

pub fn run_example(arg: Option<String>) -> csbm::Result<()> {
    let text = match arg {
        Some(path) => std::fs::read_to_string(path)?,
        None => include_str!("../data/sample.csv").to_string(),
    };
    let log = parse_transactions(text.as_bytes(), &ParseOptions::default())?;
    let stats = derive_stats(&log)?;
    println!(
        "{} players, {} plays, {} events, {} teams",
        log.n_players(),
        log.plays.len(),
        log.n_events(),
        log.n_teams()
    );
    println!(
        "initiations {}, passes {}, outcomes {}",
        stats.initiations.len(),
        stats.passes.len(),
        stats.outcomes.len()
    );
    for poss in &stats.possessions {
        println!(
            "{:>6} holds [{:5.2}, {:5.2}] with {} others on court",
            log.players[poss.player],
            poss.start,
            poss.end,
            poss.oncourt.len() - 1
        );
    }
    print!("\nre-serialized:\n{}", log.to_csv_string());
    Ok(())
}

#[allow(dead_code)]
fn main() -> csbm::Result<()> {
    run_example(std::env::args().nth(1))
}
