//! Monte Carlo driver: cluster formation, the relaying intermediary, full
//! cluster elections with adversaries, warning bookkeeping and campaigns.

pub mod campaign;
pub mod cluster;
pub mod election;
pub mod intermediary;
pub mod ledger;
pub mod scenario;
pub mod wire;

use std::fmt;

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::ConfigError;

pub use campaign::{run_campaign, CampaignConfig, Rate, SimReport};
pub use cluster::form_cluster;
pub use election::{run_election, ElectionOutcome, ElectionSetup, Script};
pub use intermediary::{Intermediary, RelayStats, Timeout};
pub use ledger::{Warning, WarningLedger};
pub use scenario::{run_scenario, ScenarioEstimate, ScenarioSim};

/// Real identity of a voter in the census. Never published.
#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub struct VoterId(pub u64);

impl fmt::Display for VoterId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "v{}", self.0)
    }
}

/// Per-message delivery delay, uniform in `min_ms..=max_ms`.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct LatencyModel {
    pub min_ms: u64,
    pub max_ms: u64,
}

impl Default for LatencyModel {
    fn default() -> Self {
        LatencyModel {
            min_ms: 10,
            max_ms: 200,
        }
    }
}

impl LatencyModel {
    pub fn validate(&self) -> Result<(), ConfigError> {
        if self.min_ms > self.max_ms {
            return Err(ConfigError::Latency {
                min_ms: self.min_ms,
                max_ms: self.max_ms,
            });
        }
        Ok(())
    }

    pub fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> u64 {
        rng.random_range(self.min_ms..=self.max_ms)
    }
}

/// How honest voters choose their option.
#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(tag = "model", rename_all = "snake_case", deny_unknown_fields)]
pub enum VoteModel {
    #[default]
    Uniform,
    /// Relative weight per option.
    Shares { shares: Vec<f64> },
}

impl VoteModel {
    pub fn validate(&self, ao: usize) -> Result<(), ConfigError> {
        match self {
            VoteModel::Uniform => Ok(()),
            VoteModel::Shares { shares } => {
                if shares.len() != ao {
                    return Err(ConfigError::VoteModel(format!(
                        "{} shares for {ao} options",
                        shares.len()
                    )));
                }
                if shares.iter().any(|s| !s.is_finite() || *s < 0.0) || shares.iter().sum::<f64>() <= 0.0 {
                    return Err(ConfigError::VoteModel("shares must be non-negative with a positive sum".into()));
                }
                Ok(())
            }
        }
    }

    pub fn draw<R: Rng + ?Sized>(&self, ao: usize, rng: &mut R) -> usize {
        match self {
            VoteModel::Uniform => rng.random_range(0..ao),
            VoteModel::Shares { shares } => {
                let total: f64 = shares.iter().sum();
                let mut x = rng.random::<f64>() * total;
                for (o, &s) in shares.iter().enumerate() {
                    if x < s {
                        return o;
                    }
                    x -= s;
                }
                shares.iter().rposition(|&s| s > 0.0).unwrap_or(0)
            }
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn shares_never_pick_zero_weight() {
        let m = VoteModel::Shares {
            shares: vec![0.0, 1.0, 3.0],
        };
        m.validate(3).unwrap();
        assert!(m.validate(2).is_err());
        let mut rng = ChaCha8Rng::seed_from_u64(0);
        let mut counts = [0usize; 3];
        for _ in 0..4000 {
            counts[m.draw(3, &mut rng)] += 1;
        }
        assert_eq!(counts[0], 0);
        assert!(counts[2] > 2 * counts[1]);
    }

    #[test]
    fn latency_bounds() {
        let l = LatencyModel::default();
        let mut rng = ChaCha8Rng::seed_from_u64(0);
        for _ in 0..100 {
            let x = l.sample(&mut rng);
            assert!((10..=200).contains(&x));
        }
        assert!(LatencyModel { min_ms: 5, max_ms: 1 }.validate().is_err());
    }
}
