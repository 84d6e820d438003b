//! Per-node secret state and the honest Stage 1 / Stage 2 actions.

use rand::seq::{IndexedRandom, SliceRandom};
use rand::Rng;

use crate::ballot::{BallotIdx, BallotPool, BallotSet};
use crate::config::ClusterConfig;
use crate::error::ProtocolError;
use crate::protocol::consistency::{verify_list_consistency, Inconsistency};

/// A participant's private view of one cluster election.
#[derive(Clone, Debug)]
pub struct NodeState {
    pub position: usize,
    pub vote: usize,
    /// Option to extract in each round.
    pub plan: Vec<usize>,
    pool_len: usize,
    selected: Vec<BallotIdx>,
    selected_set: BallotSet,
    held_by_option: Vec<Vec<BallotIdx>>,
    /// The list as this node last forwarded it (initially the whole pool).
    snapshot: BallotSet,
    /// The snapshot before the most recently accepted list.
    previous: BallotSet,
    /// Ballots known to be held by coalition partners.
    pub intel: BallotSet,
}

impl NodeState {
    pub fn new(position: usize, vote: usize, plan: Vec<usize>, pool: &BallotPool) -> Self {
        NodeState {
            position,
            vote,
            plan,
            pool_len: pool.len(),
            selected: Vec::new(),
            selected_set: BallotSet::with_capacity(pool.len()),
            held_by_option: vec![Vec::new(); pool.ao()],
            snapshot: BallotSet::full(pool.len()),
            previous: BallotSet::full(pool.len()),
            intel: BallotSet::with_capacity(pool.len()),
        }
    }

    pub fn selected(&self) -> &[BallotIdx] {
        &self.selected
    }

    pub fn selected_set(&self) -> &BallotSet {
        &self.selected_set
    }

    pub fn holds(&self, b: BallotIdx) -> bool {
        self.selected_set.contains(b)
    }

    /// Selected ballots of one option.
    pub fn held(&self, option: usize) -> &[BallotIdx] {
        &self.held_by_option[option]
    }

    pub fn snapshot(&self) -> &BallotSet {
        &self.snapshot
    }

    /// Ballots that vanished between this node's previous pass and the list
    /// it accepted last, i.e. extracted by others in between.
    pub fn recently_extracted(&self) -> impl Iterator<Item = BallotIdx> + '_ {
        self.previous.iter().filter(|&b| !self.snapshot.contains(b))
    }

    /// Verify an incoming list and adopt it as the current view.
    pub fn accept_list(
        &mut self,
        incoming: &[BallotIdx],
        expected_removed: usize,
    ) -> Result<(), Inconsistency> {
        self.check_list(incoming, expected_removed)?;
        self.adopt_list(incoming);
        Ok(())
    }

    /// Adopt a list without checking it (a suppressed report).
    pub fn adopt_list(&mut self, incoming: &[BallotIdx]) {
        std::mem::swap(&mut self.previous, &mut self.snapshot);
        self.snapshot = BallotSet::from_slice(self.pool_len, incoming);
    }

    /// Check a list without adopting it (published-list verification).
    pub fn check_list(
        &self,
        incoming: &[BallotIdx],
        expected_removed: usize,
    ) -> Result<(), Inconsistency> {
        verify_list_consistency(&self.snapshot, &self.selected_set, incoming, expected_removed)
    }

    /// Overwrite the view with the list this node actually forwarded.
    pub fn note_forwarded(&mut self, list: &[BallotIdx]) {
        self.snapshot = BallotSet::from_slice(self.pool_len, list);
    }

    fn record(&mut self, pool: &BallotPool, b: BallotIdx) {
        self.selected.push(b);
        self.selected_set.insert(b);
        self.held_by_option[pool.option_of(b)].push(b);
        self.snapshot.remove(b);
    }

    /// Stage 1 step for `round`: extract one ballot of the planned option.
    ///
    /// If the planned option is exhausted, a later round's option is pulled
    /// forward. Exhaustion of every option left in the plan means someone
    /// has already deviated from the protocol.
    pub fn extract_planned<R: Rng + ?Sized>(
        &mut self,
        pool: &mut BallotPool,
        round: usize,
        rng: &mut R,
    ) -> Result<BallotIdx, ProtocolError> {
        let swap_with = (round..self.plan.len())
            .find(|&r| pool.remaining_count(self.plan[r]) > 0)
            .ok_or(ProtocolError::OptionExhausted(self.plan[round]))?;
        self.plan.swap(round, swap_with);
        extract(self, pool, round, self.plan[round], rng)
    }
}

/// RULE A: `k` extractions of every option plus one extra of `vote`, in a
/// random round order.
pub fn rule_a_plan<R: Rng + ?Sized>(
    vote: usize,
    config: &ClusterConfig,
    rng: &mut R,
) -> Result<Vec<usize>, ProtocolError> {
    if vote >= config.ao {
        return Err(ProtocolError::BadVote {
            vote,
            ao: config.ao,
        });
    }
    let mut plan = Vec::with_capacity(config.rounds());
    for option in 0..config.ao {
        plan.extend(std::iter::repeat_n(option, config.k));
    }
    plan.push(vote);
    plan.shuffle(rng);
    Ok(plan)
}

/// Remove a uniformly random remaining ballot of `option` from the list and
/// add it to the node's secret selection.
pub fn extract<R: Rng + ?Sized>(
    node: &mut NodeState,
    pool: &mut BallotPool,
    round: usize,
    option: usize,
    rng: &mut R,
) -> Result<BallotIdx, ProtocolError> {
    let n = pool.remaining_count(option);
    if n == 0 {
        return Err(ProtocolError::OptionExhausted(option));
    }
    let pick = pool
        .remaining_of(option)
        .nth(rng.random_range(0..n))
        .expect("index within count");
    take_specific(node, pool, round, pick);
    Ok(pick)
}

/// Extract a specific ballot (scripted runs). Returns false if it is not in
/// the list.
pub fn take_specific(node: &mut NodeState, pool: &mut BallotPool, round: usize, b: BallotIdx) -> bool {
    if !pool.take(round, node.position, b) {
        return false;
    }
    node.record(pool, b);
    true
}

/// Honest Stage 2 answer: a uniformly random selected ballot of the imposed
/// option, drawn afresh for every asker.
pub fn respond_query<R: Rng + ?Sized>(
    node: &NodeState,
    imposed: usize,
    rng: &mut R,
) -> Result<BallotIdx, ProtocolError> {
    node.held(imposed)
        .choose(rng)
        .copied()
        .ok_or(ProtocolError::NothingToReturn {
            node: node.position,
            option: imposed,
        })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::ballot::create_pool;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn plan_counts_follow_rule_a() {
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let c = ClusterConfig::new(4, 2).unwrap().with_k(2).unwrap();
        let mut plan = rule_a_plan(0, &c, &mut rng).unwrap();
        plan.sort();
        assert_eq!(plan, vec![0, 0, 0, 1, 1]);
        assert!(rule_a_plan(2, &c, &mut rng).is_err());
    }

    #[test]
    fn forced_choice_when_one_id_left() {
        let c = ClusterConfig::new(2, 2).unwrap();
        let mut pool = create_pool(&c, 3);
        let mut node = NodeState::new(0, 0, vec![0, 0, 1], &pool);
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let zeros: Vec<_> = pool.remaining_of(0).collect();
        for &b in &zeros[..3] {
            pool.take(0, 1, b);
        }
        let got = extract(&mut node, &mut pool, 0, 0, &mut rng).unwrap();
        assert_eq!(got, zeros[3]);
        assert_eq!(
            extract(&mut node, &mut pool, 1, 0, &mut rng),
            Err(ProtocolError::OptionExhausted(0))
        );
    }

    #[test]
    fn exhausted_plan_entry_is_pulled_forward() {
        let c = ClusterConfig::new(2, 2).unwrap();
        let mut pool = create_pool(&c, 3);
        let mut node = NodeState::new(0, 1, vec![0, 1, 1], &pool);
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let zeros: Vec<_> = pool.remaining_of(0).collect();
        for &b in &zeros {
            pool.take(0, 1, b);
        }
        let got = node.extract_planned(&mut pool, 0, &mut rng).unwrap();
        assert_eq!(pool.option_of(got), 1);
        assert_eq!(node.plan, vec![1, 0, 1]);
    }

    #[test]
    fn respond_returns_only_held_ids() {
        let c = ClusterConfig::new(2, 2).unwrap();
        let mut pool = create_pool(&c, 5);
        let mut node = NodeState::new(0, 0, vec![0, 0, 1], &pool);
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        for r in 0..3 {
            node.extract_planned(&mut pool, r, &mut rng).unwrap();
        }
        let ones = node.held(1).to_vec();
        assert_eq!(ones.len(), 1);
        for _ in 0..20 {
            assert_eq!(respond_query(&node, 1, &mut rng).unwrap(), ones[0]);
            assert!(node.held(0).contains(&respond_query(&node, 0, &mut rng).unwrap()));
        }
    }
}
