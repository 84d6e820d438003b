//! Monte Carlo for the attacker-concentration scenario: clusters where all
//! but a handful of voters are coordinated cheaters, one of them active,
//! over consecutive votings with the warning threshold in force.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::adversary::AdversaryMix;
use crate::config::ClusterConfig;
use crate::crypto::{derive_seed, KeyedHashScheme};
use crate::error::SimError;
use crate::sim::campaign::Rate;
use crate::sim::election::{run_election, ElectionSetup};
use crate::sim::{LatencyModel, VoteModel, VoterId};

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ScenarioSim {
    /// Attacked clusters simulated.
    pub slots: usize,
    /// Consecutive votings per slot.
    pub votings: usize,
    pub cluster: ClusterConfig,
    pub dn: usize,
    pub seed: u64,
    /// Number of attacked clusters the estimates are scaled to.
    pub scale_to: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ScenarioEstimate {
    pub slots: u64,
    pub elections: u64,
    /// Undetected alterations summed over all votings.
    pub altered_votes: u64,
    pub altered_votes_per_slot: f64,
    /// 95% normal interval on the per-slot mean.
    pub altered_votes_per_slot_ci: (f64, f64),
    /// Slots with at least one undetected alteration.
    pub slots_altered: Rate,
    /// Slots whose active cheater reached the warning threshold.
    pub punished: Rate,
    pub per_election_success: Rate,
    pub scale_to: f64,
    pub altered_votes_scaled: (f64, f64, f64),
    pub punished_scaled: (f64, f64, f64),
}

struct SlotOutcome {
    elections: u64,
    successes: u64,
    punished: bool,
}

fn run_slot(sim: &ScenarioSim, scheme: &KeyedHashScheme, slot: usize) -> Result<SlotOutcome, SimError> {
    let c = &sim.cluster;
    let mix = AdversaryMix {
        dn: sim.dn,
        coordinated: true,
        single_active: true,
        ..AdversaryMix::default()
    };
    let roster: Vec<VoterId> = (0..c.sc as u64).map(VoterId).collect();
    let mut warnings = 0u32;
    let mut out = SlotOutcome {
        elections: 0,
        successes: 0,
        punished: false,
    };
    for v in 0..sim.votings {
        let seed = derive_seed(derive_seed(sim.seed, slot as u64), v as u64);
        let mut rng = ChaCha8Rng::seed_from_u64(derive_seed(seed, 2));
        let strategies = mix.place(c, &mut rng)?;
        let votes: Vec<usize> = strategies
            .iter()
            .map(|s| s.target.unwrap_or_else(|| VoteModel::Uniform.draw(c.ao, &mut rng)))
            .collect();
        let active = strategies
            .iter()
            .position(|s| s.cheats_extraction())
            .expect("one active cheater");
        let mut setup = ElectionSetup::new(c, &roster, &votes, &strategies, scheme);
        setup.latency = LatencyModel::default();
        let e = run_election(&setup, seed)?;
        out.elections += 1;
        out.successes += e.altered() as u64;
        if e.warned_positions.contains(&active) {
            warnings += 1;
            if warnings >= c.warn_threshold {
                out.punished = true;
                break;
            }
        }
    }
    Ok(out)
}

pub fn run_scenario(sim: &ScenarioSim) -> Result<ScenarioEstimate, SimError> {
    sim.cluster.validate()?;
    let scheme = KeyedHashScheme::default();
    let slots: Vec<SlotOutcome> = (0..sim.slots)
        .into_par_iter()
        .map(|i| run_slot(sim, &scheme, i))
        .collect::<Result<_, _>>()?;
    let n = slots.len() as u64;
    let elections: u64 = slots.iter().map(|s| s.elections).sum();
    let altered: u64 = slots.iter().map(|s| s.successes).sum();
    let slots_altered = slots.iter().filter(|s| s.successes > 0).count() as u64;
    let punished = slots.iter().filter(|s| s.punished).count() as u64;

    let mean = if n == 0 { 0.0 } else { altered as f64 / n as f64 };
    let var = if n < 2 {
        0.0
    } else {
        slots
            .iter()
            .map(|s| (s.successes as f64 - mean).powi(2))
            .sum::<f64>()
            / (n - 1) as f64
    };
    let half = 1.96 * (var / n.max(1) as f64).sqrt();
    let punished_rate = Rate::new(punished, n);
    let k = sim.scale_to;
    Ok(ScenarioEstimate {
        slots: n,
        elections,
        altered_votes: altered,
        altered_votes_per_slot: mean,
        altered_votes_per_slot_ci: (mean - half, mean + half),
        slots_altered: Rate::new(slots_altered, n),
        punished: punished_rate,
        per_election_success: Rate::new(altered, elections),
        scale_to: k,
        altered_votes_scaled: (k * mean, k * (mean - half), k * (mean + half)),
        punished_scaled: (k * punished_rate.rate, k * punished_rate.lo, k * punished_rate.hi),
    })
}
