use crate::ballot::{BallotIdx, BallotSet};

/// Why a received remaining list was rejected.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Inconsistency {
    /// A ballot this node extracted is back in the list.
    OwnSelected(BallotIdx),
    /// A ballot that was already gone has reappeared.
    Reappeared(BallotIdx),
    Duplicate(BallotIdx),
    WrongCount { expected: usize, found: usize },
}

impl Inconsistency {
    pub fn ballot(&self) -> Option<BallotIdx> {
        match *self {
            Inconsistency::OwnSelected(b)
            | Inconsistency::Reappeared(b)
            | Inconsistency::Duplicate(b) => Some(b),
            Inconsistency::WrongCount { .. } => None,
        }
    }
}

/// Check that `incoming` can follow from the node's last view of the list.
///
/// Views are nested, so being a subset of the most recent one implies no id
/// absent from any earlier view has come back.
pub fn verify_list_consistency(
    previous: &BallotSet,
    selected: &BallotSet,
    incoming: &[BallotIdx],
    expected_removed: usize,
) -> Result<(), Inconsistency> {
    let mut seen = BallotSet::with_capacity(previous.capacity());
    for &b in incoming {
        if selected.contains(b) {
            return Err(Inconsistency::OwnSelected(b));
        }
        if !previous.contains(b) {
            return Err(Inconsistency::Reappeared(b));
        }
        if !seen.insert(b) {
            return Err(Inconsistency::Duplicate(b));
        }
    }
    let expected = previous.len().saturating_sub(expected_removed);
    if previous.len() < expected_removed || incoming.len() != expected {
        return Err(Inconsistency::WrongCount {
            expected,
            found: incoming.len(),
        });
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    fn ids(v: &[u32]) -> Vec<BallotIdx> {
        v.iter().map(|&i| BallotIdx(i)).collect()
    }

    #[test]
    fn exact_removal_is_ok() {
        let prev = BallotSet::from_slice(16, &ids(&[0, 1, 2, 3, 4, 5]));
        let sel = BallotSet::with_capacity(16);
        assert_eq!(verify_list_consistency(&prev, &sel, &ids(&[0, 2, 5]), 3), Ok(()));
    }

    #[test]
    fn never_seen_id_is_rejected() {
        let prev = BallotSet::from_slice(16, &ids(&[0, 1, 2, 3]));
        let sel = BallotSet::with_capacity(16);
        assert_eq!(
            verify_list_consistency(&prev, &sel, &ids(&[0, 1, 9]), 1),
            Err(Inconsistency::Reappeared(BallotIdx(9)))
        );
    }

    #[test]
    fn own_selection_reappearing_is_rejected() {
        let prev = BallotSet::from_slice(16, &ids(&[0, 1, 2, 3]));
        let sel = BallotSet::from_slice(16, &ids(&[7]));
        assert_eq!(
            verify_list_consistency(&prev, &sel, &ids(&[0, 7]), 2),
            Err(Inconsistency::OwnSelected(BallotIdx(7)))
        );
    }

    #[test]
    fn count_and_duplicates() {
        let prev = BallotSet::from_slice(16, &ids(&[0, 1, 2, 3]));
        let sel = BallotSet::with_capacity(16);
        assert_eq!(
            verify_list_consistency(&prev, &sel, &ids(&[0, 1, 2]), 2),
            Err(Inconsistency::WrongCount {
                expected: 2,
                found: 3
            })
        );
        assert_eq!(
            verify_list_consistency(&prev, &sel, &ids(&[1, 1]), 2),
            Err(Inconsistency::Duplicate(BallotIdx(1)))
        );
    }
}
