//! Drawing a cluster roster and its ring order from the census.

use std::collections::BTreeSet;

use rand::seq::SliceRandom;
use rand::Rng;

use crate::error::SimError;
use crate::sim::ledger::WarningLedger;
use crate::sim::VoterId;

/// Draw `cs` unpunished voters uniformly at random, in random ring order.
/// A roster whose member set appears in `avoid` is redrawn, so voters of a
/// cancelled cluster are never reunited as the same cluster.
pub fn form_cluster<R: Rng + ?Sized>(
    census: &[VoterId],
    cs: usize,
    ledger: &WarningLedger,
    avoid: &[BTreeSet<VoterId>],
    rng: &mut R,
) -> Result<Vec<VoterId>, SimError> {
    let mut eligible: Vec<VoterId> = census
        .iter()
        .copied()
        .filter(|&v| !ledger.is_punished(v))
        .collect();
    if eligible.len() < cs {
        return Err(SimError::InsufficientVoters {
            needed: cs,
            available: eligible.len(),
        });
    }
    // With only one possible member set, avoiding it is impossible.
    let forced = eligible.len() == cs;
    loop {
        let (roster, _) = eligible.partial_shuffle(rng, cs);
        let roster = roster.to_vec();
        let members: BTreeSet<VoterId> = roster.iter().copied().collect();
        if forced || !avoid.contains(&members) {
            return Ok(roster);
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::protocol::report::CollisionKind;
    use crate::sim::ledger::Warning;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn census(n: u64) -> Vec<VoterId> {
        (0..n).map(VoterId).collect()
    }

    #[test]
    fn distinct_unpunished_members() {
        let mut ledger = WarningLedger::new(3);
        for e in 0..3 {
            ledger.warn(Warning {
                voter: VoterId(7),
                election: e,
                report: 0,
                kind: CollisionKind::Timeout,
            });
        }
        let mut rng = ChaCha8Rng::seed_from_u64(0);
        for _ in 0..200 {
            let r = form_cluster(&census(100), 25, &ledger, &[], &mut rng).unwrap();
            let set: BTreeSet<_> = r.iter().collect();
            assert_eq!(set.len(), 25);
            assert!(!set.contains(&VoterId(7)));
        }
    }

    #[test]
    fn avoids_previous_roster() {
        let ledger = WarningLedger::new(3);
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let prev: BTreeSet<VoterId> = census(4).into_iter().collect();
        for _ in 0..50 {
            let r = form_cluster(&census(5), 4, &ledger, std::slice::from_ref(&prev), &mut rng).unwrap();
            let set: BTreeSet<VoterId> = r.into_iter().collect();
            assert_ne!(set, prev);
        }
    }

    #[test]
    fn too_few_voters() {
        let ledger = WarningLedger::new(3);
        let mut rng = ChaCha8Rng::seed_from_u64(2);
        assert_eq!(
            form_cluster(&census(3), 4, &ledger, &[], &mut rng),
            Err(SimError::InsufficientVoters {
                needed: 4,
                available: 3
            })
        );
    }
}
