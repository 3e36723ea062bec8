//! Ingestion and validation of every local input: embeddings, votes, member
//! profiles, staff forecasts, SEP projections, prices and OPP series.

mod embedding;
mod join;
mod lexicon;
mod records;

pub use embedding::{
    decode_embeddings, encode_embeddings, load_embeddings, write_embeddings, EmbeddedTranscript,
    EMBEDDING_MAGIC, EMBED_DIM, MAX_SENTENCES,
};
pub use join::{join_panel, JoinWarning, JoinedPanel, Observation, Reject, RejectReason};
pub use lexicon::{filter_econ_sentences, Lexicon, DEFAULT_LEXICON};
pub use records::{
    load_minutes_releases, load_opp, load_prices, load_profiles, load_sep, load_tealbook,
    load_votes, meeting_date, meeting_on_or_before, Gender, Horizon, MeetingRecord,
    MemberProfile, MinutesRelease, OppObservation, Party, PolicyAction, PriceBar, PriceSeries,
    Region, Role, SepSnapshot, SepVariable, TealbookSeries, TealbookVariable, Vote,
    CORE_CPI_START,
};

/// Share of NO votes over every recorded vote, chairs included.
pub fn no_vote_share(meetings: &[MeetingRecord]) -> f64 {
    let (no, total) = meetings
        .iter()
        .flat_map(|m| m.attendees.iter())
        .fold((0usize, 0usize), |(no, total), (_, v)| {
            (no + usize::from(*v == Vote::No), total + 1)
        });
    if total == 0 {
        0.0
    } else {
        no as f64 / total as f64
    }
}
