//! Stage 2 cross-examination: who asks whom for which option, and the
//! asker-side checks A, B and C.

use std::collections::BTreeMap;

use crate::ballot::{BallotIdx, BallotPool, BallotSet};
use crate::protocol::node::NodeState;
use crate::protocol::report::{CollisionKind, CollisionReport};

/// Option imposed by each ring position: position `i` asks for `i mod ao`.
pub fn assign_query_options(sc: usize, ao: usize) -> Vec<usize> {
    (0..sc).map(|i| i % ao).collect()
}

/// Positions queried by `asker`: the next `fanout` nodes around the ring,
/// which is everyone else when `fanout = sc - 1`.
pub fn query_targets(asker: usize, sc: usize, fanout: usize) -> Vec<usize> {
    let mut t: Vec<usize> = (1..=fanout.min(sc - 1)).map(|d| (asker + d) % sc).collect();
    t.sort_unstable();
    t
}

/// Run checks A, B and C over the responses one asker collected.
pub fn check_responses(
    asker: &NodeState,
    pool: &BallotPool,
    remaining: &BallotSet,
    imposed: usize,
    responses: &[(usize, BallotIdx)],
) -> Vec<CollisionReport> {
    let me = asker.position;
    let mut reports = Vec::new();
    let mut by_ballot: BTreeMap<BallotIdx, Vec<usize>> = BTreeMap::new();
    for &(responder, b) in responses {
        if b.get() >= pool.len() || pool.option_of(b) != imposed {
            let id = (b.get() < pool.len()).then(|| pool.id(b));
            reports.push(CollisionReport::new(me, CollisionKind::InvalidBallot, [responder], id));
            continue;
        }
        let id = Some(pool.id(b));
        if remaining.contains(b) {
            reports.push(CollisionReport::new(me, CollisionKind::InRemaining, [responder], id));
        }
        if asker.holds(b) {
            reports.push(CollisionReport::new(me, CollisionKind::OwnSelected, [responder], id));
        }
        by_ballot.entry(b).or_default().push(responder);
    }
    for (b, responders) in by_ballot {
        if responders.len() > 1 {
            reports.push(CollisionReport::new(
                me,
                CollisionKind::DuplicateResponse,
                responders,
                Some(pool.id(b)),
            ));
        }
    }
    reports
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn options_follow_ring_position() {
        assert_eq!(assign_query_options(4, 2), vec![0, 1, 0, 1]);
        let opts = assign_query_options(15, 3);
        for o in 0..3 {
            assert_eq!(opts.iter().filter(|&&x| x == o).count(), 5);
        }
    }

    #[test]
    fn targets_wrap_and_exclude_asker() {
        assert_eq!(query_targets(2, 4, 3), vec![0, 1, 3]);
        assert_eq!(query_targets(3, 5, 2), vec![0, 4]);
        for a in 0..7 {
            let t = query_targets(a, 7, 6);
            assert_eq!(t.len(), 6);
            assert!(!t.contains(&a));
        }
    }
}
