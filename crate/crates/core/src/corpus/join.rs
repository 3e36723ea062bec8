//! Pairs member transcripts with their votes and their meeting's chair transcript.

use std::collections::{BTreeMap, BTreeSet};
use std::sync::Arc;

use super::embedding::EmbeddedTranscript;
use super::records::{MeetingRecord, MemberProfile, Vote};

/// One labeled classifier observation.
#[derive(Debug, Clone)]
pub struct Observation {
    /// Position in the joined panel; stable for identical inputs.
    pub id: usize,
    pub meeting_id: String,
    pub member_id: String,
    pub vote: Vote,
    pub member: Arc<EmbeddedTranscript>,
    pub chair: Arc<EmbeddedTranscript>,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum JoinWarning {
    MissingChairEmbedding { meeting_id: String, dropped_members: usize },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum RejectReason {
    /// Embedding for a meeting or member absent from the vote records.
    OrphanEmbedding,
    /// Second embedding for the same meeting/member pair.
    DuplicateEmbedding,
    /// Voting member with an embedding but no profile.
    MissingProfile,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Reject {
    pub meeting_id: String,
    pub member_id: String,
    pub reason: RejectReason,
}

#[derive(Debug, Clone, Default)]
pub struct JoinedPanel {
    pub observations: Vec<Observation>,
    pub warnings: Vec<JoinWarning>,
    pub rejects: Vec<Reject>,
    /// Voting non-chair members for whom no transcript was found.
    pub members_without_embedding: usize,
}

/// Joins vote records, profiles and embeddings into the labeled dataset.
///
/// Output order follows the meeting order given, then attendee order. A
/// meeting without a chair transcript contributes no observations.
pub fn join_panel(
    meetings: &[MeetingRecord],
    profiles: &BTreeMap<String, MemberProfile>,
    embeddings: impl IntoIterator<Item = EmbeddedTranscript>,
) -> JoinedPanel {
    let mut out = JoinedPanel::default();
    let attendees: BTreeSet<(&str, &str)> = meetings
        .iter()
        .flat_map(|m| m.attendees.iter().map(move |(a, _)| (m.meeting_id.as_str(), a.as_str())))
        .collect();

    let mut index: BTreeMap<(String, String), Arc<EmbeddedTranscript>> = BTreeMap::new();
    for emb in embeddings {
        let key = (emb.meeting_id().to_owned(), emb.member_id().to_owned());
        if !attendees.contains(&(key.0.as_str(), key.1.as_str())) {
            out.rejects.push(Reject {
                meeting_id: key.0,
                member_id: key.1,
                reason: RejectReason::OrphanEmbedding,
            });
            continue;
        }
        if index.contains_key(&key) {
            out.rejects.push(Reject {
                meeting_id: key.0,
                member_id: key.1,
                reason: RejectReason::DuplicateEmbedding,
            });
            continue;
        }
        index.insert(key, Arc::new(emb));
    }

    for meeting in meetings {
        let lookup = |member: &str| index.get(&(meeting.meeting_id.clone(), member.to_owned()));
        let Some(chair) = lookup(&meeting.chair_id) else {
            out.warnings.push(JoinWarning::MissingChairEmbedding {
                meeting_id: meeting.meeting_id.clone(),
                dropped_members: meeting.member_votes().filter(|(m, _)| lookup(m).is_some()).count(),
            });
            continue;
        };
        for (member_id, vote) in meeting.member_votes() {
            let Some(member) = lookup(member_id) else {
                out.members_without_embedding += 1;
                continue;
            };
            if !profiles.contains_key(member_id) {
                out.rejects.push(Reject {
                    meeting_id: meeting.meeting_id.clone(),
                    member_id: member_id.to_owned(),
                    reason: RejectReason::MissingProfile,
                });
                continue;
            }
            out.observations.push(Observation {
                id: out.observations.len(),
                meeting_id: meeting.meeting_id.clone(),
                member_id: member_id.to_owned(),
                vote,
                member: Arc::clone(member),
                chair: Arc::clone(chair),
            });
        }
    }
    out
}
