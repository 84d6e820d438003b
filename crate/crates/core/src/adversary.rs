//! Node behaviours for every analysed attack, pluggable per ring position.
//!
//! - CHEAT 1: extract an extra ballot of the favoured option in place of
//!   one of another option, then lie in Stage 2 when asked for the option
//!   that is now missing.
//! - CHEAT 2: when forwarding the list, drop a remaining ballot of the
//!   favoured option and put back one that was already extracted.
//! - Coalitions: coordinated attackers share selections and do not report
//!   collisions that only implicate partners. Passive members vote and
//!   extract honestly.
//! - Privacy colluders pool Stage 2 answers to find nodes that returned
//!   more distinct ballots of one option than RULE A gives a non-voter.

use std::collections::{BTreeMap, BTreeSet};

use rand::seq::{IndexedRandom, SliceRandom};
use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::ballot::{BallotIdx, BallotPool, BallotSet, VBallotId};
use crate::config::ClusterConfig;
use crate::error::{ConfigError, ProtocolError};
use crate::protocol::node::{respond_query, rule_a_plan, NodeState};
use crate::protocol::report::CollisionReport;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "SCREAMING_SNAKE_CASE")]
pub enum StrategyKind {
    Honest,
    Cheat1,
    Cheat2,
    CoalitionMember,
    PrivacyColluder,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Strategy {
    pub kind: StrategyKind,
    /// Favoured option of vote-altering strategies.
    pub target: Option<usize>,
    pub coalition: Option<u32>,
    /// Coalition members only: does this member cheat or just inform?
    pub active: bool,
    /// CHEAT 2 swaps per tamper.
    pub swaps: usize,
    /// Never answers in time.
    pub stalls: bool,
}

impl Strategy {
    pub fn honest() -> Self {
        Strategy {
            kind: StrategyKind::Honest,
            target: None,
            coalition: None,
            active: false,
            swaps: 0,
            stalls: false,
        }
    }

    pub fn cheat1(target: usize) -> Self {
        Strategy {
            kind: StrategyKind::Cheat1,
            target: Some(target),
            ..Self::honest()
        }
    }

    pub fn cheat2(target: usize, swaps: usize) -> Self {
        Strategy {
            kind: StrategyKind::Cheat2,
            target: Some(target),
            swaps,
            ..Self::honest()
        }
    }

    pub fn coalition_member(coalition: u32, target: usize, active: bool) -> Self {
        Strategy {
            kind: StrategyKind::CoalitionMember,
            target: Some(target),
            coalition: Some(coalition),
            active,
            ..Self::honest()
        }
    }

    pub fn privacy_colluder() -> Self {
        Strategy {
            kind: StrategyKind::PrivacyColluder,
            ..Self::honest()
        }
    }

    pub fn staller() -> Self {
        Strategy {
            stalls: true,
            ..Self::honest()
        }
    }

    /// Breaks RULE A in Stage 1 and lies in Stage 2.
    pub fn cheats_extraction(&self) -> bool {
        match self.kind {
            StrategyKind::Cheat1 => true,
            StrategyKind::CoalitionMember => self.active,
            _ => false,
        }
    }

    pub fn tampers_list(&self) -> bool {
        self.kind == StrategyKind::Cheat2
    }

    /// Any behaviour other than plain honesty.
    pub fn is_adversarial(&self) -> bool {
        self.kind != StrategyKind::Honest || self.stalls
    }

    /// Will this node alter the tally if it goes undetected?
    pub fn alters_tally(&self) -> bool {
        self.cheats_extraction() || self.tampers_list()
    }
}

/// Honest plan for `target` with one ballot of a displaced option swapped
/// for another of `target`. The displaced option is uniform among the rest.
pub fn cheat1_plan<R: Rng + ?Sized>(
    target: usize,
    config: &ClusterConfig,
    rng: &mut R,
) -> Result<(Vec<usize>, usize), ProtocolError> {
    let mut plan = rule_a_plan(target, config, rng)?;
    let others: Vec<usize> = (0..config.ao).filter(|&o| o != target).collect();
    let displaced = *others.choose(rng).expect("ao >= 2");
    let slots: Vec<usize> = (0..plan.len()).filter(|&i| plan[i] == displaced).collect();
    let slot = *slots.choose(rng).expect("k >= 1 copies of every option");
    plan[slot] = target;
    Ok((plan, displaced))
}

/// Stage 2 answer of a CHEAT 1 node.
///
/// Holding a ballot of the imposed option it answers honestly. Otherwise it
/// lies with an extracted ballot of that option that is not its own. To a
/// coalition partner it returns a partner-held ballot, since any collision
/// then implicates partners only. To anyone else it avoids partner-held
/// ballots: a partner holding a single ballot of the option returns that
/// same ballot to the same asker.
pub fn cheat1_respond<R: Rng + ?Sized>(
    node: &NodeState,
    pool: &BallotPool,
    imposed: usize,
    public_remaining: &BallotSet,
    asker_is_partner: bool,
    rng: &mut R,
) -> Option<BallotIdx> {
    if !node.held(imposed).is_empty() {
        return respond_query(node, imposed, rng).ok();
    }
    let extracted = |b: BallotIdx| {
        pool.option_of(b) == imposed && !public_remaining.contains(b) && !node.holds(b)
    };
    if asker_is_partner {
        let known: Vec<BallotIdx> = node.intel.iter().filter(|&b| extracted(b)).collect();
        if let Some(&b) = known.choose(rng) {
            return Some(b);
        }
    }
    let all: Vec<BallotIdx> = (0..pool.len() as u32)
        .map(BallotIdx)
        .filter(|&b| extracted(b))
        .collect();
    let unknown: Vec<BallotIdx> = all.iter().copied().filter(|&b| !node.intel.contains(b)).collect();
    unknown.choose(rng).or_else(|| all.choose(rng)).copied()
}

/// One CHEAT 2 swap: `removed` left the list unextracted, `inserted` came
/// back after having been extracted.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct Swap {
    pub removed: BallotIdx,
    pub inserted: BallotIdx,
}

/// Tamper with the list in flight before forwarding it.
///
/// Each swap drops a remaining ballot of the favoured option and re-inserts
/// an extracted ballot of another option, preferring ones extracted since
/// this node last forwarded the list: those still appear in the next
/// nodes' views. The list length is unchanged.
pub fn cheat2_tamper<R: Rng + ?Sized>(
    node: &NodeState,
    pool: &mut BallotPool,
    target: usize,
    swaps: usize,
    rng: &mut R,
) -> Vec<Swap> {
    let mut done = Vec::with_capacity(swaps);
    let mut fresh: Vec<BallotIdx> = node
        .recently_extracted()
        .filter(|&b| pool.option_of(b) != target && !node.holds(b))
        .collect();
    fresh.shuffle(rng);
    for _ in 0..swaps {
        let removable: Vec<BallotIdx> = pool.remaining_of(target).collect();
        let Some(&removed) = removable.choose(rng) else {
            break;
        };
        let inserted = match fresh.pop() {
            Some(b) => b,
            None => {
                let in_list = BallotSet::from_slice(pool.len(), pool.remaining());
                let stale: Vec<BallotIdx> = (0..pool.len() as u32)
                    .map(BallotIdx)
                    .filter(|&b| {
                        pool.option_of(b) != target && !in_list.contains(b) && !node.holds(b)
                    })
                    .collect();
                match stale.choose(rng) {
                    Some(&b) => b,
                    None => break,
                }
            }
        };
        pool.drop_silently(removed);
        pool.reinsert(inserted);
        done.push(Swap { removed, inserted });
    }
    done
}

/// Whether `reporter` passes on a collision it observed. Coordinated
/// partners keep quiet when every implicated node is in their coalition.
pub fn report_policy(reporter: &Strategy, report: &CollisionReport, strategies: &[Strategy]) -> bool {
    let Some(coalition) = reporter.coalition else {
        return true;
    };
    !report
        .implicated
        .iter()
        .all(|&p| strategies[p].coalition == Some(coalition))
}

/// Responses one colluding asker collected in Stage 2.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct ColluderView {
    pub asker: usize,
    pub imposed: usize,
    pub responses: Vec<(usize, VBallotId)>,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Serialize, Deserialize)]
pub struct Reveal {
    pub node: usize,
    pub option: usize,
}

/// Pool colluders' answers. A responder that showed more than `k` distinct
/// ballots of one option to colluders imposing that option must have voted
/// for it. Colluders' own answers are ignored.
pub fn privacy_colluder_analyze(views: &[ColluderView], k: usize) -> Vec<Reveal> {
    let colluders: BTreeSet<usize> = views.iter().map(|v| v.asker).collect();
    let mut seen: BTreeMap<(usize, usize), BTreeSet<VBallotId>> = BTreeMap::new();
    for v in views {
        for &(responder, id) in &v.responses {
            if colluders.contains(&responder) || id.option != v.imposed {
                continue;
            }
            seen.entry((responder, v.imposed)).or_default().insert(id);
        }
    }
    seen.into_iter()
        .filter(|(_, ids)| ids.len() > k)
        .map(|((node, option), _)| Reveal { node, option })
        .collect()
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Attack {
    #[default]
    Cheat1,
    Cheat2,
}

/// Counts and kinds of adversaries placed in each cluster.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct AdversaryMix {
    /// Dishonest (vote-altering) nodes.
    pub dn: usize,
    pub attack: Attack,
    /// Dishonest nodes share intel and suppress reports on each other.
    pub coordinated: bool,
    /// Coordinated CHEAT 1 only: a single member cheats, the rest inform.
    pub single_active: bool,
    pub swaps: usize,
    /// Favoured option; drawn per election when absent.
    pub target: Option<usize>,
    /// Privacy colluders.
    pub nt: usize,
    pub stallers: usize,
}

impl Default for AdversaryMix {
    fn default() -> Self {
        AdversaryMix {
            dn: 0,
            attack: Attack::Cheat1,
            coordinated: false,
            single_active: false,
            swaps: 1,
            target: None,
            nt: 0,
            stallers: 0,
        }
    }
}

impl AdversaryMix {
    pub fn honest() -> Self {
        Self::default()
    }

    pub fn validate(&self, config: &ClusterConfig) -> Result<(), ConfigError> {
        let needed = self.dn + self.nt + self.stallers;
        if needed > config.sc {
            return Err(ConfigError::MixTooLarge {
                needed,
                sc: config.sc,
            });
        }
        if let Some(t) = self.target {
            if t >= config.ao {
                return Err(ConfigError::OptionOutOfRange {
                    option: t,
                    ao: config.ao,
                });
            }
        }
        Ok(())
    }

    pub fn is_honest(&self) -> bool {
        self.dn == 0 && self.nt == 0 && self.stallers == 0
    }

    /// Assign a strategy to every ring position, adversaries at seeded
    /// random positions. The lowest-position coalition member is the active
    /// one when only one cheats.
    pub fn place<R: Rng + ?Sized>(
        &self,
        config: &ClusterConfig,
        rng: &mut R,
    ) -> Result<Vec<Strategy>, ConfigError> {
        self.validate(config)?;
        let mut strategies = vec![Strategy::honest(); config.sc];
        if self.is_honest() {
            return Ok(strategies);
        }
        let target = self.target.unwrap_or_else(|| rng.random_range(0..config.ao));
        let mut positions: Vec<usize> = (0..config.sc).collect();
        positions.shuffle(rng);
        let (attackers, rest) = positions.split_at(self.dn);
        let (colluders, rest) = rest.split_at(self.nt);
        let stallers = &rest[..self.stallers];

        let lowest = attackers.iter().copied().min();
        for &p in attackers {
            strategies[p] = match (self.attack, self.coordinated) {
                (Attack::Cheat1, false) => Strategy::cheat1(target),
                (Attack::Cheat1, true) => {
                    let active = !self.single_active || Some(p) == lowest;
                    Strategy::coalition_member(0, target, active)
                }
                (Attack::Cheat2, coordinated) => Strategy {
                    coalition: coordinated.then_some(0),
                    ..Strategy::cheat2(target, self.swaps)
                },
            };
        }
        for &p in colluders {
            strategies[p] = Strategy::privacy_colluder();
        }
        for &p in stallers {
            strategies[p] = Strategy::staller();
        }
        Ok(strategies)
    }
}
