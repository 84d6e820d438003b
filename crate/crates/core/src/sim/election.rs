//! One complete cluster election with pluggable node behaviour.
//!
//! Stage 1 passes the remaining list around the ring `ao * k + 1` times
//! through the intermediary; each receiver checks it against its previous
//! view before extracting. After the last round every node checks the
//! published list. Stage 2 runs the queries in ascending asker order. The
//! first Stage 1 report stops the election; Stage 2 collects every report.

use std::collections::{BTreeMap, BTreeSet};

use rand::seq::IndexedRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::adversary::{
    cheat1_plan, cheat1_respond, cheat2_tamper, privacy_colluder_analyze, report_policy,
    ColluderView, Reveal, Strategy, StrategyKind,
};
use crate::ballot::{create_pool, BallotIdx, BallotPool, BallotSet, VBallotId};
use crate::config::ClusterConfig;
use crate::crypto::{derive_seed, Sealer, ShadowId, SignatureScheme};
use crate::error::{ConfigError, SimError};
use crate::protocol::node::{respond_query, rule_a_plan, take_specific, NodeState};
use crate::protocol::report::{CollisionKind, CollisionReport};
use crate::protocol::result::{finalize, tally, ClusterResult, ResultPayload};
use crate::protocol::stage2::{assign_query_options, check_responses, query_targets};
use crate::protocol::transcript::{Actor, ClusterTranscript, EventKind};
use crate::sim::intermediary::{Endpoint, Intermediary, RelayStats};
use crate::sim::ledger::Warning;
use crate::sim::wire::Message;
use crate::sim::{LatencyModel, VoterId};

/// Fixed extraction choices, for replaying a known run.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Script {
    pub pool: Vec<VBallotId>,
    /// `extractions[position][round]`.
    pub extractions: Vec<Vec<VBallotId>>,
}

pub struct ElectionSetup<'a> {
    pub config: &'a ClusterConfig,
    pub cluster_id: u64,
    /// Ring order.
    pub roster: &'a [VoterId],
    pub votes: &'a [usize],
    pub strategies: &'a [Strategy],
    pub latency: LatencyModel,
    pub signer: &'a dyn SignatureScheme,
    pub sealer: &'a dyn Sealer,
    pub script: Option<&'a Script>,
    pub traced: bool,
}

impl<'a> ElectionSetup<'a> {
    pub fn new<S: SignatureScheme + Sealer>(
        config: &'a ClusterConfig,
        roster: &'a [VoterId],
        votes: &'a [usize],
        strategies: &'a [Strategy],
        scheme: &'a S,
    ) -> Self {
        ElectionSetup {
            config,
            cluster_id: 0,
            roster,
            votes,
            strategies,
            latency: LatencyModel::default(),
            signer: scheme,
            sealer: scheme,
            script: None,
            traced: false,
        }
    }

    fn validate(&self) -> Result<(), SimError> {
        let sc = self.config.sc;
        self.config.validate()?;
        self.latency.validate()?;
        for len in [self.roster.len(), self.votes.len(), self.strategies.len()] {
            if len != sc {
                return Err(SimError::RosterSize { roster: len, sc });
            }
        }
        let ao = self.config.ao;
        let targets = self.strategies.iter().filter_map(|s| s.target);
        for option in self.votes.iter().copied().chain(targets) {
            if option >= ao {
                return Err(ConfigError::OptionOutOfRange { option, ao }.into());
            }
        }
        if let Some(s) = self.script {
            let rounds = self.config.rounds();
            if s.extractions.len() != sc || s.extractions.iter().any(|e| e.len() != rounds) {
                return Err(SimError::Script("one extraction per node per round".into()));
            }
            if BallotPool::from_ids(ao, s.pool.clone()).is_none() {
                return Err(SimError::Script("pool ids must be unique and in range".into()));
            }
        }
        Ok(())
    }
}

#[derive(Clone, Debug)]
pub struct ElectionOutcome {
    pub transcript: ClusterTranscript,
    pub result: ClusterResult,
    /// At most one per voter per election.
    pub warnings: Vec<Warning>,
    /// Warned ring positions, parallel to `warnings`.
    pub warned_positions: Vec<usize>,
    pub shadows: Vec<ShadowId>,
    pub true_tally: Vec<usize>,
    /// Tally implied by the published list, if Stage 1 completed and the
    /// list was well formed.
    pub published_tally: Option<Vec<usize>>,
    pub reached_stage2: bool,
    pub reveals: Vec<Reveal>,
    pub false_reveals: usize,
    /// Non-colluder responders examined by colluders.
    pub exposures: usize,
    pub relay: RelayStats,
    pub timed_out: bool,
    /// The list after each completed round, when traced.
    pub list_history: Vec<Vec<BallotIdx>>,
    pub pool: BallotPool,
    /// Ballots each node extracted, by position.
    pub selections: Vec<Vec<BallotIdx>>,
}

impl ElectionOutcome {
    /// A VALID result whose tally differs from the votes cast.
    pub fn altered(&self) -> bool {
        self.result.is_valid() && self.result.tally != self.true_tally
    }

    /// Relayed message counts equal `sc*(ao*k+1) + 1` and `2*sc*fanout`.
    /// Only meaningful for elections that ran both stages without timeouts.
    pub fn messages_match_formula(&self, config: &ClusterConfig) -> bool {
        let c = self.transcript.counts();
        c.stage1 == config.sc * config.rounds() + 1
            && c.stage2 == 2 * config.sc * config.queried_per_asker()
    }
}

fn encode_id(id: VBallotId) -> Vec<u8> {
    let mut v = id.serial.0.to_be_bytes().to_vec();
    v.extend_from_slice(&(id.option as u32).to_be_bytes());
    v
}

fn random_of_option<R: Rng + ?Sized>(pool: &BallotPool, option: usize, rng: &mut R) -> BallotIdx {
    let ids: Vec<BallotIdx> = (0..pool.len() as u32)
        .map(BallotIdx)
        .filter(|&b| pool.option_of(b) == option)
        .collect();
    *ids.choose(rng).expect("every option has pool ids")
}

fn others(sc: usize, me: usize) -> impl Iterator<Item = usize> {
    (0..sc).filter(move |&p| p != me)
}

fn decode_list(bytes: &[u8]) -> Vec<BallotIdx> {
    match Message::decode(bytes) {
        Some(Message::Pool(l)) | Some(Message::Forward { list: l, .. }) | Some(Message::Publish(l)) => l,
        _ => unreachable!("relay is bit exact"),
    }
}

/// Run one cluster election. Deterministic given `seed`.
pub fn run_election(setup: &ElectionSetup<'_>, seed: u64) -> Result<ElectionOutcome, SimError> {
    setup.validate()?;
    let config = setup.config;
    let (sc, ao) = (config.sc, config.ao);
    let rounds = config.rounds();
    let strategies = setup.strategies;
    let mut rng = ChaCha8Rng::seed_from_u64(derive_seed(seed, 1));

    let mut pool = match setup.script {
        Some(s) => BallotPool::from_ids(ao, s.pool.clone()).expect("validated"),
        None => create_pool(config, derive_seed(seed, 0)),
    };
    let mut im = Intermediary::open(
        setup.roster,
        setup.sealer,
        setup.latency,
        config.timeout_ms,
        setup.traced,
        &mut rng,
    );
    let shadows = im.shadows().to_vec();
    let mut tx = ClusterTranscript::new(setup.traced, rounds);

    let mut nodes = Vec::with_capacity(sc);
    for (p, strategy) in strategies.iter().enumerate().take(sc) {
        let plan = match setup.script {
            Some(s) => s.extractions[p].iter().map(|id| id.option).collect(),
            None if strategy.cheats_extraction() => {
                let target = strategy.target.expect("cheater has a target");
                cheat1_plan(target, config, &mut rng).expect("validated").0
            }
            None => rule_a_plan(setup.votes[p], config, &mut rng).expect("validated"),
        };
        nodes.push(NodeState::new(p, setup.votes[p], plan, &pool));
    }
    let tamper_round: Vec<usize> = (0..sc).map(|_| rng.random_range(1..rounds)).collect();

    let mut reports: Vec<CollisionReport> = Vec::new();
    let mut timed_out = false;
    let mut list_history = Vec::new();

    // Pool delivery.
    let bytes = Message::Pool(pool.remaining().to_vec()).encode();
    tx.record(0, Actor::Intermediary, EventKind::Pool, || bytes.clone());
    let delivered = im
        .relay(Endpoint::Intermediary, Endpoint::Node(0), &bytes, false, &mut rng)
        .map_err(|_| SimError::Script("intermediary cannot stall".into()))?;
    pool.set_remaining(decode_list(&delivered));

    'stage1: for round in 0..rounds {
        for p in 0..sc {
            let expected_removed = if round == 0 { p } else { sc - 1 };
            if let Err(bad) = nodes[p].check_list(pool.remaining(), expected_removed) {
                let segment: Vec<usize> = if round == 0 {
                    (0..p).collect()
                } else {
                    others(sc, p).collect()
                };
                let ballot = bad.ballot().filter(|b| b.get() < pool.len()).map(|b| pool.id(b));
                let r = CollisionReport::new(p, CollisionKind::ListInconsistency, segment, ballot);
                if report_policy(&strategies[p], &r, strategies) {
                    reports.push(r);
                    break 'stage1;
                }
            }
            nodes[p].adopt_list(pool.remaining());

            let extracted = match setup.script {
                Some(s) => {
                    let id = s.extractions[p][round];
                    match pool.index_of(&id) {
                        Some(b) if take_specific(&mut nodes[p], &mut pool, round, b) => Ok(b),
                        _ => Err(()),
                    }
                }
                None => nodes[p].extract_planned(&mut pool, round, &mut rng).map_err(|_| ()),
            };
            match extracted {
                Ok(b) => tx.record(round, Actor::Node(p), EventKind::Extract, || encode_id(pool.id(b))),
                Err(()) => {
                    let r = CollisionReport::new(p, CollisionKind::ListInconsistency, others(sc, p), None);
                    if report_policy(&strategies[p], &r, strategies) {
                        reports.push(r);
                        break 'stage1;
                    }
                }
            }

            if strategies[p].tampers_list() && round == tamper_round[p] {
                let target = strategies[p].target.expect("tamperer has a target");
                cheat2_tamper(&nodes[p], &mut pool, target, strategies[p].swaps, &mut rng);
                nodes[p].note_forwarded(pool.remaining());
            }

            let list = pool.remaining().to_vec();
            let last = round + 1 == rounds && p + 1 == sc;
            let (to, kind, msg) = if last {
                (Endpoint::Intermediary, EventKind::Publish, Message::Publish(list))
            } else {
                let msg = Message::Forward {
                    round: round as u32,
                    list,
                };
                (Endpoint::Node((p + 1) % sc), EventKind::Forward, msg)
            };
            let bytes = msg.encode();
            tx.record(round, Actor::Node(p), kind, || bytes.clone());
            match im.relay(Endpoint::Node(p), to, &bytes, strategies[p].stalls, &mut rng) {
                Ok(delivered) => pool.set_remaining(decode_list(&delivered)),
                Err(_) => {
                    tx.record(round, Actor::Intermediary, EventKind::Timeout, Vec::new);
                    timed_out = true;
                    reports.push(CollisionReport::new((p + 1) % sc, CollisionKind::Timeout, [p], None));
                    break 'stage1;
                }
            }
        }
        if setup.traced {
            list_history.push(pool.remaining().to_vec());
        }
    }

    let mut published_tally = None;
    if reports.is_empty() {
        let published = pool.remaining().to_vec();
        for p in 0..sc {
            if let Err(bad) = nodes[p].check_list(&published, sc - 1 - p) {
                let segment: Vec<usize> = if p + 1 < sc {
                    (p + 1..sc).collect()
                } else {
                    others(sc, p).collect()
                };
                let ballot = bad.ballot().filter(|b| b.get() < pool.len()).map(|b| pool.id(b));
                let r = CollisionReport::new(p, CollisionKind::ListInconsistency, segment, ballot);
                if report_policy(&strategies[p], &r, strategies) {
                    reports.push(r);
                    break;
                }
            }
        }
        if reports.is_empty() {
            match tally(config, &pool.remaining_ids_sorted()) {
                Ok(t) => published_tally = Some(t),
                // A negative count: more ballots left of an option than voters.
                Err(_) => reports.push(CollisionReport::new(
                    0,
                    CollisionKind::ListInconsistency,
                    others(sc, 0),
                    None,
                )),
            }
        }
    }

    let reached_stage2 = reports.is_empty();
    let mut views = Vec::new();
    let stage2 = rounds;
    if reached_stage2 {
        let remaining = BallotSet::from_slice(pool.len(), pool.remaining());
        share_intel(&mut nodes, strategies, pool.len());
        let imposed = assign_query_options(sc, ao);
        let fanout = config.queried_per_asker();
        for a in 0..sc {
            let option = imposed[a];
            let mut responses = Vec::with_capacity(fanout);
            for t in query_targets(a, sc, fanout) {
                let q = Message::Query {
                    option: option as u32,
                }
                .encode();
                tx.record(stage2, Actor::Node(a), EventKind::Query, || q.clone());
                if im
                    .relay(Endpoint::Node(a), Endpoint::Node(t), &q, strategies[a].stalls, &mut rng)
                    .is_err()
                {
                    tx.record(stage2, Actor::Intermediary, EventKind::Timeout, Vec::new);
                    timed_out = true;
                    reports.push(CollisionReport::new(t, CollisionKind::Timeout, [a], None));
                    continue;
                }
                let s = &strategies[t];
                let answer = if s.cheats_extraction() {
                    let partner = s.coalition.is_some() && strategies[a].coalition == s.coalition;
                    cheat1_respond(&nodes[t], &pool, option, &remaining, partner, &mut rng)
                } else {
                    respond_query(&nodes[t], option, &mut rng).ok()
                };
                let ballot = answer.unwrap_or_else(|| random_of_option(&pool, option, &mut rng));
                let r = Message::Response { ballot }.encode();
                tx.record(stage2, Actor::Node(t), EventKind::Response, || r.clone());
                match im.relay(Endpoint::Node(t), Endpoint::Node(a), &r, s.stalls, &mut rng) {
                    Ok(bytes) => match Message::decode(&bytes) {
                        Some(Message::Response { ballot }) => responses.push((t, ballot)),
                        _ => unreachable!("relay is bit exact"),
                    },
                    Err(_) => {
                        tx.record(stage2, Actor::Intermediary, EventKind::Timeout, Vec::new);
                        timed_out = true;
                        reports.push(CollisionReport::new(a, CollisionKind::Timeout, [t], None));
                    }
                }
            }
            for r in check_responses(&nodes[a], &pool, &remaining, option, &responses) {
                if report_policy(&strategies[a], &r, strategies) {
                    reports.push(r);
                }
            }
            if strategies[a].kind == StrategyKind::PrivacyColluder {
                views.push(ColluderView {
                    asker: a,
                    imposed: option,
                    responses: responses
                        .iter()
                        .filter(|(_, b)| b.get() < pool.len())
                        .map(|&(t, b)| (t, pool.id(b)))
                        .collect(),
                });
            }
        }
    }

    let (reveals, false_reveals, exposures) = if views.is_empty() {
        (Vec::new(), 0, 0)
    } else {
        let reveals = privacy_colluder_analyze(&views, config.k);
        let wrong = reveals.iter().filter(|r| setup.votes[r.node] != r.option).count();
        (reveals, wrong, sc - views.len())
    };

    for r in &reports {
        tx.record(stage2, Actor::Node(r.reporter), EventKind::Report, || {
            serde_json::to_vec(r).expect("report serializes")
        });
    }
    let payload = ResultPayload::new(
        setup.cluster_id,
        pool.remaining_ids_sorted(),
        published_tally.clone().unwrap_or_default(),
    );
    let signers: Vec<(usize, ShadowId)> = shadows.iter().copied().enumerate().collect();
    let result = finalize(config, payload, reports, &signers, setup.signer)
        .expect("signers recompute the tally they were given");
    for s in &result.signatures {
        tx.record(stage2, Actor::Intermediary, EventKind::Sign, || s.signature.0.to_vec());
    }

    let mut warned: BTreeMap<usize, (usize, CollisionKind)> = BTreeMap::new();
    for (i, r) in result.reports().iter().enumerate() {
        for p in r.warned() {
            warned.entry(p).or_insert((i, r.kind));
        }
    }
    let warned_positions: Vec<usize> = warned.keys().copied().collect();
    let warnings = warned
        .into_iter()
        .map(|(p, (report, kind))| Warning {
            voter: setup.roster[p],
            election: setup.cluster_id,
            report,
            kind,
        })
        .collect();

    let mut true_tally = vec![0; ao];
    for &v in setup.votes {
        true_tally[v] += 1;
    }

    Ok(ElectionOutcome {
        transcript: tx,
        warnings,
        warned_positions,
        shadows,
        true_tally,
        published_tally,
        reached_stage2,
        reveals,
        false_reveals,
        exposures,
        relay: im.stats(),
        timed_out,
        list_history,
        selections: nodes.iter().map(|n| n.selected().to_vec()).collect(),
        pool,
        result,
    })
}

/// Coordinated coalition members learn each other's selections.
fn share_intel(nodes: &mut [NodeState], strategies: &[Strategy], pool_len: usize) {
    let mut by_coalition: BTreeMap<u32, BTreeSet<usize>> = BTreeMap::new();
    for (p, s) in strategies.iter().enumerate() {
        if let Some(c) = s.coalition {
            by_coalition.entry(c).or_default().insert(p);
        }
    }
    for members in by_coalition.values() {
        let mut union = BallotSet::with_capacity(pool_len);
        for &m in members {
            for &b in nodes[m].selected() {
                union.insert(b);
            }
        }
        for &m in members {
            let mut intel = union.clone();
            for &b in nodes[m].selected() {
                intel.remove(b);
            }
            nodes[m].intel = intel;
        }
    }
}
