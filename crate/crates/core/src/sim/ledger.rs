//! Warnings per real voter across elections, and the punishment rule.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use crate::protocol::report::CollisionKind;
use crate::sim::VoterId;

/// One warning, traceable to the report that caused it.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Warning {
    pub voter: VoterId,
    pub election: u64,
    /// Index of the report in the cancelled result.
    pub report: usize,
    pub kind: CollisionKind,
}

#[derive(Clone, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct VoterRecord {
    pub warnings: u32,
    pub punished: bool,
    pub events: Vec<Warning>,
}

/// A voter is punished, and excluded from later clusters, once it holds
/// `threshold` warnings.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct WarningLedger {
    threshold: u32,
    records: BTreeMap<VoterId, VoterRecord>,
}

impl WarningLedger {
    pub fn new(threshold: u32) -> Self {
        WarningLedger {
            threshold,
            records: BTreeMap::new(),
        }
    }

    pub fn threshold(&self) -> u32 {
        self.threshold
    }

    /// Record a warning. Returns true if it made the voter punished.
    pub fn warn(&mut self, w: Warning) -> bool {
        let r = self.records.entry(w.voter).or_default();
        r.warnings += 1;
        r.events.push(w);
        if !r.punished && r.warnings >= self.threshold {
            r.punished = true;
            return true;
        }
        false
    }

    pub fn warnings(&self, voter: VoterId) -> u32 {
        self.records.get(&voter).map_or(0, |r| r.warnings)
    }

    pub fn is_punished(&self, voter: VoterId) -> bool {
        self.records.get(&voter).is_some_and(|r| r.punished)
    }

    pub fn record(&self, voter: VoterId) -> Option<&VoterRecord> {
        self.records.get(&voter)
    }

    pub fn punished(&self) -> impl Iterator<Item = VoterId> + '_ {
        self.records.iter().filter(|(_, r)| r.punished).map(|(&v, _)| v)
    }

    pub fn total_warnings(&self) -> u64 {
        self.records.values().map(|r| r.warnings as u64).sum()
    }

    pub fn events(&self) -> impl Iterator<Item = &Warning> + '_ {
        self.records.values().flat_map(|r| r.events.iter())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn w(v: u64, election: u64) -> Warning {
        Warning {
            voter: VoterId(v),
            election,
            report: 0,
            kind: CollisionKind::OwnSelected,
        }
    }

    #[test]
    fn punished_exactly_at_threshold() {
        let mut l = WarningLedger::new(3);
        assert!(!l.warn(w(1, 0)));
        assert!(!l.warn(w(1, 1)));
        assert!(!l.is_punished(VoterId(1)));
        assert!(l.warn(w(1, 2)));
        assert!(l.is_punished(VoterId(1)));
        assert!(!l.warn(w(1, 3)));
        assert_eq!(l.warnings(VoterId(1)), 4);
        assert_eq!(l.punished().collect::<Vec<_>>(), vec![VoterId(1)]);
        assert_eq!(l.total_warnings(), 4);
        assert!(!l.is_punished(VoterId(2)));
    }
}
