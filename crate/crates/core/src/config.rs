//! Parameters of a single cluster election.

use serde::{Deserialize, Serialize};

use crate::error::ConfigError;

/// Parameters for one cluster election.
///
/// `sc` voters, `ao` options (abstention, when offered, is just one of them)
/// and redundancy `k`. The ballot pool holds `sc * (k + 1)` ids per option and
/// Stage 1 runs `ao * k + 1` extraction rounds.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ClusterConfig {
    pub sc: usize,
    pub ao: usize,
    #[serde(default = "default_k")]
    pub k: usize,
    /// Nodes each asker queries in Stage 2. `None` queries every other node.
    #[serde(default)]
    pub fanout: Option<usize>,
    #[serde(default = "default_timeout")]
    pub timeout_ms: u64,
    #[serde(default = "default_warn_threshold")]
    pub warn_threshold: u32,
    /// Askers impose every option rather than one. Only consulted by the
    /// risk analytics; the engine always runs the single-option variant.
    #[serde(default)]
    pub ask_every_option: bool,
}

fn default_k() -> usize {
    1
}

fn default_timeout() -> u64 {
    1000
}

fn default_warn_threshold() -> u32 {
    3
}

impl ClusterConfig {
    pub fn new(sc: usize, ao: usize) -> Result<Self, ConfigError> {
        let config = ClusterConfig {
            sc,
            ao,
            k: default_k(),
            fanout: None,
            timeout_ms: default_timeout(),
            warn_threshold: default_warn_threshold(),
            ask_every_option: false,
        };
        config.validate()?;
        Ok(config)
    }

    pub fn with_k(mut self, k: usize) -> Result<Self, ConfigError> {
        self.k = k;
        self.validate()?;
        Ok(self)
    }

    pub fn with_fanout(mut self, fanout: usize) -> Result<Self, ConfigError> {
        self.fanout = Some(fanout);
        self.validate()?;
        Ok(self)
    }

    pub fn with_timeout_ms(mut self, timeout_ms: u64) -> Self {
        self.timeout_ms = timeout_ms;
        self
    }

    pub fn with_warn_threshold(mut self, threshold: u32) -> Result<Self, ConfigError> {
        self.warn_threshold = threshold;
        self.validate()?;
        Ok(self)
    }

    pub fn validate(&self) -> Result<(), ConfigError> {
        if self.sc < 2 {
            return Err(ConfigError::ClusterTooSmall(self.sc));
        }
        if self.ao < 2 {
            return Err(ConfigError::TooFewOptions(self.ao));
        }
        if self.k < 1 {
            return Err(ConfigError::ZeroRedundancy);
        }
        if let Some(f) = self.fanout {
            if f == 0 || f >= self.sc {
                return Err(ConfigError::BadFanout {
                    fanout: f,
                    sc: self.sc,
                });
            }
        }
        if self.warn_threshold == 0 {
            return Err(ConfigError::ZeroWarnThreshold);
        }
        Ok(())
    }

    /// Ids minted per option.
    pub fn per_option(&self) -> usize {
        self.sc * (self.k + 1)
    }

    pub fn pool_size(&self) -> usize {
        self.ao * self.per_option()
    }

    pub fn rounds(&self) -> usize {
        self.ao * self.k + 1
    }

    /// Effective Stage 2 fan-out.
    pub fn queried_per_asker(&self) -> usize {
        self.fanout.unwrap_or(self.sc - 1)
    }

    /// Length of the published remaining list after an honest Stage 1.
    pub fn final_remaining(&self) -> usize {
        self.pool_size() - self.sc * self.rounds()
    }

    /// Same parameters for a cluster of a different size. A fixed fan-out is
    /// clamped to the new cluster.
    pub fn resized(&self, sc: usize) -> Result<Self, ConfigError> {
        let mut c = self.clone();
        c.sc = sc;
        c.fanout = self.fanout.map(|f| f.min(sc.saturating_sub(1)).max(1));
        c.validate()?;
        Ok(c)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn pool_arithmetic() {
        let c = ClusterConfig::new(10, 2).unwrap();
        assert_eq!(c.per_option(), 20);
        assert_eq!(c.pool_size(), 40);
        assert_eq!(c.rounds(), 3);
        let c = ClusterConfig::new(4, 2).unwrap();
        assert_eq!(c.pool_size(), 16);
        assert_eq!(c.final_remaining(), 4);
        let c = ClusterConfig::new(25, 3).unwrap().with_k(2).unwrap();
        assert_eq!(c.rounds(), 7);
        assert_eq!(c.final_remaining(), 25 * 2);
    }

    #[test]
    fn rejects_degenerate_clusters() {
        assert_eq!(
            ClusterConfig::new(1, 2).unwrap_err(),
            ConfigError::ClusterTooSmall(1)
        );
        assert!(ClusterConfig::new(2, 1).is_err());
        assert!(ClusterConfig::new(2, 2).unwrap().with_k(0).is_err());
        assert!(ClusterConfig::new(4, 2).unwrap().with_fanout(4).is_err());
        assert!(ClusterConfig::new(4, 2).unwrap().with_fanout(0).is_err());
        assert!(ClusterConfig::new(2, 2).is_ok());
    }

    #[test]
    fn parses_with_defaults() {
        let c: ClusterConfig = serde_json::from_str(r#"{"sc":25,"ao":3}"#).unwrap();
        assert_eq!(c.k, 1);
        assert_eq!(c.timeout_ms, 1000);
        assert_eq!(c.warn_threshold, 3);
        assert_eq!(c.queried_per_asker(), 24);
    }
}
