use alloc::collections::BTreeMap;
use alloc::vec::Vec;

use super::types::{ActionKind, DedupPolicy, RoundEvent, SessionId};
use super::MechanismError;

/// Recomputes canonical flags over a raw event list.
///
/// A session's first event fixes its kind. A non-vote event is canonical only
/// if it is that first event. If the session began by voting, exactly one of
/// its votes is canonical: the earliest under `CountFirst`, the latest under
/// `CountLast`; `Reject` fails on the second vote. Votes from sessions that
/// began with another kind are never canonical. Events are never removed.
pub fn canonicalize_votes(
    events: &[RoundEvent],
    policy: DedupPolicy,
) -> Result<Vec<RoundEvent>, MechanismError> {
    let mut first: BTreeMap<&SessionId, (usize, ActionKind)> = BTreeMap::new();
    let mut chosen_vote: BTreeMap<&SessionId, usize> = BTreeMap::new();

    for (i, event) in events.iter().enumerate() {
        let kind = event.action.kind();
        let (_, first_kind) = *first.entry(&event.session).or_insert((i, kind));
        if kind != ActionKind::Vote || first_kind != ActionKind::Vote {
            continue;
        }
        match (chosen_vote.get(&event.session), policy) {
            (None, _) | (Some(_), DedupPolicy::CountLast) => {
                chosen_vote.insert(&event.session, i);
            }
            (Some(_), DedupPolicy::CountFirst) => {}
            (Some(_), DedupPolicy::Reject) => {
                return Err(MechanismError::DuplicateVote(event.session.clone()))
            }
        }
    }

    Ok(events
        .iter()
        .enumerate()
        .map(|(i, event)| {
            let canonical = match event.action.kind() {
                ActionKind::Vote => chosen_vote.get(&event.session) == Some(&i),
                _ => first.get(&event.session).map(|&(f, _)| f) == Some(i),
            };
            RoundEvent {
                canonical,
                ..event.clone()
            }
        })
        .collect())
}
