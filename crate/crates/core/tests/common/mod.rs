//! Fixtures shared by the integration suites.
#![allow(dead_code)]

use std::collections::BTreeSet;

use clustervote::adversary::Strategy;
use clustervote::ballot::{BallotIdx, Serial, VBallotId};
use clustervote::crypto::KeyedHashScheme;
use clustervote::protocol::transcript::{Actor, EventKind};
use clustervote::sim::wire::Message;
use clustervote::sim::{run_election, ElectionOutcome, ElectionSetup, Script, VoterId};
use clustervote::ClusterConfig;

pub const N: usize = 0;
pub const R: usize = 1;

pub fn n(i: u128) -> VBallotId {
    VBallotId {
        option: N,
        serial: Serial(i),
    }
}

pub fn r(i: u128) -> VBallotId {
    VBallotId {
        option: R,
        serial: Serial(100 + i),
    }
}

/// Two options, four voters A B C D in ring order, k = 1.
pub fn case1_config() -> ClusterConfig {
    ClusterConfig::new(4, 2).unwrap()
}

/// The worked example's extraction sequence, one row per round.
pub fn case1_rounds() -> [[VBallotId; 4]; 3] {
    [
        [n(2), n(1), n(6), r(3)],
        [r(1), r(8), r(4), n(5)],
        [n(8), n(3), r(2), r(7)],
    ]
}

pub fn case1_votes() -> Vec<usize> {
    vec![N, N, R, R]
}

pub fn case1_script(rounds: [[VBallotId; 4]; 3]) -> Script {
    let pool = (1..=8).map(n).chain((1..=8).map(r)).collect();
    let extractions = (0..4).map(|p| rounds.iter().map(|row| row[p]).collect()).collect();
    Script { pool, extractions }
}

/// A keeps a third N ballot (N4) instead of R1.
pub fn case1_cheated_rounds() -> [[VBallotId; 4]; 3] {
    let mut rounds = case1_rounds();
    rounds[1][0] = n(4);
    rounds
}

pub fn run_scripted(script: &Script, strategies: &[Strategy], seed: u64) -> ElectionOutcome {
    let config = case1_config();
    let roster: Vec<VoterId> = (0..4).map(VoterId).collect();
    let votes = case1_votes();
    let scheme = KeyedHashScheme::default();
    let mut setup = ElectionSetup::new(&config, &roster, &votes, strategies, &scheme);
    setup.script = Some(script);
    setup.traced = true;
    run_election(&setup, seed).unwrap()
}

pub fn honest_run(config: &ClusterConfig, votes: &[usize], seed: u64, traced: bool) -> ElectionOutcome {
    let roster: Vec<VoterId> = (0..config.sc as u64).map(VoterId).collect();
    let strategies = vec![Strategy::honest(); config.sc];
    let scheme = KeyedHashScheme::default();
    let mut setup = ElectionSetup::new(config, &roster, votes, &strategies, &scheme);
    setup.traced = traced;
    run_election(&setup, seed).unwrap()
}

/// Responses `observer` received in Stage 2, read off a traced transcript.
pub fn responses_to(outcome: &ElectionOutcome, observer: usize) -> Vec<(usize, BallotIdx)> {
    let mut asker = None;
    let mut out = Vec::new();
    for e in outcome.transcript.events() {
        match (e.kind, e.actor) {
            (EventKind::Query, Actor::Node(a)) => asker = Some(a),
            (EventKind::Response, Actor::Node(t)) if asker == Some(observer) => {
                match Message::decode(&e.payload) {
                    Some(Message::Response { ballot }) => out.push((t, ballot)),
                    other => panic!("response event carries {other:?}"),
                }
            }
            _ => {}
        }
    }
    out
}

/// Count vote assignments to the other nodes that agree with everything
/// `observer` saw: its own extractions, the published list, and one
/// response per other node for its imposed option.
///
/// An assignment agrees when the published tally matches its vote counts
/// and every response could have come from a node with that vote: under
/// the extraction rule a node holds `k` ids of every option it did not
/// vote and `k + 1` of the one it did, and no response can be an id the
/// observer holds or one still on the published list.
pub fn consistent_assignments(outcome: &ElectionOutcome, config: &ClusterConfig, observer: usize, own_vote: usize) -> usize {
    let (sc, ao, k) = (config.sc, config.ao, config.k);
    let pool = &outcome.pool;
    let published: BTreeSet<VBallotId> = outcome.result.remaining_published.iter().copied().collect();
    let own: BTreeSet<BallotIdx> = outcome.selections[observer].iter().copied().collect();
    let mut left = vec![config.per_option(); ao];
    for id in &published {
        left[id.option] -= 1;
    }
    // Published tally as the observer computes it.
    let tally: Vec<i64> = left
        .iter()
        .map(|&removed| removed as i64 - (sc * k) as i64)
        .collect();
    let responses = responses_to(outcome, observer);
    let others: Vec<usize> = (0..sc).filter(|&p| p != observer).collect();
    let mut count = 0;
    let mut assignment = vec![0usize; others.len()];
    loop {
        let mut counts = vec![0i64; ao];
        counts[own_vote] += 1;
        for &v in &assignment {
            counts[v] += 1;
        }
        let fits = counts == tally
            && responses.iter().all(|&(t, b)| {
                let v = assignment[others.iter().position(|&p| p == t).unwrap()];
                let option = pool.option_of(b);
                let holds = k + usize::from(v == option);
                holds >= 1 && !own.contains(&b) && !published.contains(&pool.id(b))
            });
        count += usize::from(fits);
        // Odometer over ao^(sc-1) assignments.
        let mut i = 0;
        loop {
            if i == assignment.len() {
                return count;
            }
            assignment[i] += 1;
            if assignment[i] < ao {
                break;
            }
            assignment[i] = 0;
            i += 1;
        }
    }
}

/// Multinomial count of orderings of the other nodes' votes.
pub fn multinomial_oracle(votes: &[usize], observer: usize, ao: usize) -> usize {
    let mut counts = vec![0usize; ao];
    for (p, &v) in votes.iter().enumerate() {
        if p != observer {
            counts[v] += 1;
        }
    }
    let fact = |n: usize| (1..=n).product::<usize>();
    counts.iter().fold(fact(votes.len() - 1), |acc, &c| acc / fact(c))
}
