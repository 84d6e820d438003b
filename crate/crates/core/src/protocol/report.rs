use std::collections::BTreeSet;
use std::fmt;

use serde::{Deserialize, Serialize};

use crate::ballot::VBallotId;

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "SCREAMING_SNAKE_CASE")]
pub enum CollisionKind {
    /// Check A: the response is still in the published remaining list.
    InRemaining,
    /// Check B: the response is one the asker extracted itself.
    OwnSelected,
    /// Check C: two responders returned the same ballot.
    DuplicateResponse,
    /// A received list does not follow from the previous one.
    ListInconsistency,
    Timeout,
    /// The response is not a pool ballot of the imposed option.
    InvalidBallot,
}

impl CollisionKind {
    pub const ALL: [CollisionKind; 6] = [
        CollisionKind::InRemaining,
        CollisionKind::OwnSelected,
        CollisionKind::DuplicateResponse,
        CollisionKind::ListInconsistency,
        CollisionKind::Timeout,
        CollisionKind::InvalidBallot,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            CollisionKind::InRemaining => "IN_REMAINING",
            CollisionKind::OwnSelected => "OWN_SELECTED",
            CollisionKind::DuplicateResponse => "DUPLICATE_RESPONSE",
            CollisionKind::ListInconsistency => "LIST_INCONSISTENCY",
            CollisionKind::Timeout => "TIMEOUT",
            CollisionKind::InvalidBallot => "INVALID_BALLOT",
        }
    }
}

impl fmt::Display for CollisionKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

/// A reported protocol violation. Any report cancels the cluster election.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct CollisionReport {
    pub reporter: usize,
    pub kind: CollisionKind,
    pub implicated: BTreeSet<usize>,
    pub ballot: Option<VBallotId>,
}

impl CollisionReport {
    pub fn new(
        reporter: usize,
        kind: CollisionKind,
        implicated: impl IntoIterator<Item = usize>,
        ballot: Option<VBallotId>,
    ) -> Self {
        CollisionReport {
            reporter,
            kind,
            implicated: implicated.into_iter().collect(),
            ballot,
        }
    }

    /// Positions that receive a warning for this report. The reporter is
    /// warned too since it could be lying, except for timeouts, which the
    /// intermediary observes directly.
    pub fn warned(&self) -> BTreeSet<usize> {
        let mut w = self.implicated.clone();
        if self.kind != CollisionKind::Timeout {
            w.insert(self.reporter);
        }
        w
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn reporter_is_warned_alongside_implicated() {
        let r = CollisionReport::new(2, CollisionKind::DuplicateResponse, [0, 3], None);
        assert_eq!(r.warned(), BTreeSet::from([0, 2, 3]));
        let t = CollisionReport::new(2, CollisionKind::Timeout, [1], None);
        assert_eq!(t.warned(), BTreeSet::from([1]));
    }
}
