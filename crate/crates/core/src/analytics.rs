//! Closed-form risk analytics and the table generators built on them.
//!
//! All probabilities are plain `f64`. Displayed values are produced
//! separately from raw values so callers can compare at any precision.

use rand::seq::index::sample;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

/// Per-check survival probability the tables assume for a liar.
pub const P_NO_COLLISION: f64 = 0.5;

/// `p_nc^(sc/ao)`: a lone CHEAT 1 node survives every asker imposing the
/// option it lacks.
pub fn p_cheat_single(p_nc: f64, ao: usize, sc: usize) -> f64 {
    p_nc.powf(sc as f64 / ao as f64)
}

/// Variant where askers impose every option: no better for a cheater than a
/// two-option election.
pub fn p_cheat_ask_every_option(p_nc: f64, sc: usize) -> f64 {
    p_cheat_single(p_nc, 2, sc)
}

/// `dn` independent attackers all surviving.
pub fn p_cheat_independent(p_cheat: f64, dn: u32) -> f64 {
    p_cheat.powi(dn as i32)
}

/// One member of a coordinated group of `dn`: only the `sc - dn` honest
/// nodes check it.
pub fn p_cheat_coordinated(p_nc: f64, sc: usize, dn: usize, ao: usize) -> f64 {
    p_nc.powf((sc - dn) as f64 / ao as f64)
}

/// Detected on `threshold` consecutive attempts.
pub fn p_punished(p_detect: f64, threshold: u32) -> f64 {
    p_detect.powi(threshold as i32)
}

/// No two of `nt` colluders impose the same option, each option drawn
/// independently and uniformly: `((ao-1)!/(ao-nt)!) / ao^(nt-1)`.
pub fn p_nosame(ao: usize, nt: usize) -> f64 {
    if nt > ao {
        return 0.0;
    }
    (1..nt).map(|i| (ao - i) as f64 / ao as f64).product()
}

pub fn p_same(ao: usize, nt: usize) -> f64 {
    1.0 - p_nosame(ao, nt)
}

/// A voter asked by `nt` colluders for the option it voted returns at least
/// two distinct ballots (it holds two and picks each with probability 1/2).
pub fn p_diffids(nt: usize) -> f64 {
    if nt == 0 {
        return 0.0;
    }
    1.0 - 0.5f64.powi(nt as i32 - 1)
}

/// Probability that the option colluders impose is the one a given voter
/// picked: `Σ imposed[o] * shares[o]`.
pub fn p_match(imposed: &[f64], shares: &[f64]) -> f64 {
    imposed.iter().zip(shares).map(|(a, b)| a * b).sum()
}

pub fn p_match_uniform(ao: usize) -> f64 {
    1.0 / ao as f64
}

pub fn p_reveal(ao: usize, nt: usize) -> f64 {
    p_same(ao, nt) * p_diffids(nt) * p_match_uniform(ao)
}

/// Expected votes uncovered by `attackers` colluders spread over clusters
/// of `cs` in groups of `nt`.
pub fn discovered(ao: usize, nt: usize, cs: usize, attackers: f64) -> f64 {
    (attackers - attackers * (nt as f64 / cs as f64)) * p_reveal(ao, nt) / 2.0
}

/// `p_same` when the `nt` colluders hold distinct ring positions in a
/// cluster of `cs`, position `i` imposing `i mod ao`. Converges to
/// [`p_same`] as `cs` grows.
pub fn p_same_finite(ao: usize, nt: usize, cs: usize) -> f64 {
    if nt > ao {
        return 1.0;
    }
    if nt > cs {
        return f64::NAN;
    }
    let sizes: Vec<f64> = (0..ao).map(|r| ((cs + ao - 1 - r) / ao) as f64).collect();
    // e[j] = elementary symmetric polynomial of degree j over class sizes.
    let mut e = vec![0.0; nt + 1];
    e[0] = 1.0;
    for &s in &sizes {
        for j in (1..=nt).rev() {
            e[j] += e[j - 1] * s;
        }
    }
    let mut distinct = e[nt];
    let mut falling = 1.0;
    for i in 0..nt {
        distinct *= (i + 1) as f64;
        falling *= (cs - i) as f64;
    }
    1.0 - distinct / falling
}

/// Empirical `p_same`: draw `trials` random position sets for `nt`
/// colluders in a cluster of `cs`.
pub fn monte_carlo_p_same(ao: usize, nt: usize, cs: usize, trials: usize, seed: u64) -> f64 {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut hits = 0usize;
    let mut seen = vec![false; ao];
    for _ in 0..trials {
        seen.iter_mut().for_each(|s| *s = false);
        let same = sample(&mut rng, cs, nt).iter().any(|p| {
            let r = p % ao;
            std::mem::replace(&mut seen[r], true)
        });
        hits += same as usize;
    }
    hits as f64 / trials as f64
}

/// Inputs shared by the formulas.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RiskParams {
    pub p_no_collision: f64,
    pub ao: usize,
    pub sc: usize,
    pub dn: usize,
    pub nt: usize,
    pub attackers: f64,
    pub warn_threshold: u32,
}

impl RiskParams {
    pub fn new(ao: usize, sc: usize) -> Self {
        RiskParams {
            p_no_collision: P_NO_COLLISION,
            ao,
            sc,
            dn: 1,
            nt: 0,
            attackers: 0.0,
            warn_threshold: 3,
        }
    }

    pub fn p_cheat(&self) -> f64 {
        p_cheat_single(self.p_no_collision, self.ao, self.sc)
    }

    pub fn p_punished_single(&self) -> f64 {
        p_punished(1.0 - self.p_cheat(), self.warn_threshold)
    }

    pub fn p_cheat_coordinated(&self) -> f64 {
        p_cheat_coordinated(self.p_no_collision, self.sc, self.dn, self.ao)
    }

    pub fn discovered(&self) -> f64 {
        discovered(self.ao, self.nt, self.sc, self.attackers)
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct ConcentrationScenario {
    pub concurrent_voters: f64,
    pub required_concurrent_cheaters: f64,
}

/// Voters online at once for an election of `voters` over `window_minutes`
/// when each takes `minutes_per_vote`, and how many coordinated cheaters it
/// takes to fill every cluster of `cs` with `dn` of them.
pub fn concentration_scenario(
    voters: f64,
    window_minutes: f64,
    minutes_per_vote: f64,
    cs: usize,
    dn: usize,
) -> ConcentrationScenario {
    let concurrent = voters * minutes_per_vote / window_minutes;
    ConcentrationScenario {
        concurrent_voters: concurrent,
        required_concurrent_cheaters: concurrent * dn as f64 / (cs - dn) as f64,
    }
}

/// Four significant digits, scientific below 1e-3.
pub fn sig4(x: f64) -> String {
    if x == 0.0 {
        return "0".into();
    }
    if x.abs() < 1e-3 {
        return format!("{x:.3e}");
    }
    let digits = (3 - x.abs().log10().floor() as i32).max(0) as usize;
    format!("{x:.digits$}")
}

/// Two significant digits, scientific below 1e-3.
pub fn display2(x: f64) -> String {
    if x == 0.0 {
        return "0".into();
    }
    if x.abs() < 1e-3 {
        return format!("{x:.1e}");
    }
    let digits = (1 - x.abs().log10().floor() as i32).max(0) as usize;
    format!("{x:.digits$}")
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Table2Row {
    pub sc: usize,
    pub ao: usize,
    pub p_cheat: f64,
    pub display: String,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct OptionsRow {
    pub ao: usize,
    pub nt: usize,
    pub value: f64,
    pub display: String,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Table5Row {
    pub ao: usize,
    pub nt: usize,
    pub cs: usize,
    pub attackers: f64,
    pub p_reveal: f64,
    pub discovered: f64,
    pub discovered_rounded: i64,
}

pub const TABLE2_GRID: [(usize, usize); 15] = [
    (4, 2),
    (8, 2),
    (15, 2),
    (25, 2),
    (40, 2),
    (4, 3),
    (8, 3),
    (15, 3),
    (25, 3),
    (40, 3),
    (4, 5),
    (8, 5),
    (15, 5),
    (25, 5),
    (40, 5),
];

pub const TABLE34_GRID: [(usize, usize); 5] = [(3, 2), (3, 3), (5, 2), (5, 4), (5, 6)];

pub const TABLE5_GRID: [(usize, usize, usize); 8] = [
    (3, 2, 15),
    (3, 3, 15),
    (3, 4, 15),
    (5, 2, 35),
    (5, 3, 35),
    (5, 4, 35),
    (5, 5, 35),
    (5, 6, 35),
];

pub const TABLE5_ATTACKERS: f64 = 1000.0;

pub fn table2() -> Vec<Table2Row> {
    TABLE2_GRID
        .iter()
        .map(|&(sc, ao)| {
            let p = p_cheat_single(P_NO_COLLISION, ao, sc);
            Table2Row {
                sc,
                ao,
                p_cheat: p,
                display: display2(p),
            }
        })
        .collect()
}

fn options_table(f: fn(usize, usize) -> f64) -> Vec<OptionsRow> {
    TABLE34_GRID
        .iter()
        .map(|&(ao, nt)| {
            let v = f(ao, nt);
            OptionsRow {
                ao,
                nt,
                value: v,
                display: format!("{v:.2}"),
            }
        })
        .collect()
}

pub fn table3() -> Vec<OptionsRow> {
    options_table(p_same)
}

pub fn table4() -> Vec<OptionsRow> {
    options_table(p_reveal)
}

pub fn table5() -> Vec<Table5Row> {
    TABLE5_GRID
        .iter()
        .map(|&(ao, nt, cs)| {
            let d = discovered(ao, nt, cs, TABLE5_ATTACKERS);
            Table5Row {
                ao,
                nt,
                cs,
                attackers: TABLE5_ATTACKERS,
                p_reveal: p_reveal(ao, nt),
                discovered: d,
                discovered_rounded: d.round() as i64,
            }
        })
        .collect()
}
