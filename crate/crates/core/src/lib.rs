//! Cluster-based multi-party voting: the two-stage cluster protocol, the
//! attacks analysed against it, closed-form risk analytics, a Monte Carlo
//! harness with a relaying intermediary, and a verifiable bulletin board.

pub mod adversary;
pub mod analytics;
pub mod ballot;
pub mod bulletin;
pub mod config;
pub mod crypto;
pub mod error;
pub mod protocol;
pub mod sim;

pub use config::ClusterConfig;
pub use error::{BulletinError, ConfigError, ProtocolError, SimError};
