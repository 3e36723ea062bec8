//! Regenerates the 1976-2018 vote and profile fixture and prints its NO-vote share.
//!
//! ```text
//! cargo run --example vote_fixture -- crates/core/fixtures
//! ```

use std::path::PathBuf;

use hidden_dissent::corpus::{load_votes, no_vote_share};
use hidden_dissent::synthetic::{vote_history, write_profiles, write_votes, VoteSpec};

fn main() -> hidden_dissent::Result<()> {
    let dir = PathBuf::from(std::env::args().nth(1).unwrap_or_else(|| "fixtures".into()));
    std::fs::create_dir_all(&dir).expect("create fixture directory");
    let (meetings, profiles) = vote_history(&VoteSpec::historical())?;
    write_votes(&dir.join("votes.csv"), &meetings)?;
    write_profiles(&dir.join("profiles.csv"), &profiles)?;
    let reloaded = load_votes(&dir.join("votes.csv"))?;
    let votes: usize = reloaded.iter().map(|m| m.attendees.len()).sum();
    println!(
        "{} meetings, {} votes, {} members, NO share {:.4}%",
        reloaded.len(),
        votes,
        profiles.len(),
        100.0 * no_vote_share(&reloaded)
    );
    Ok(())
}
