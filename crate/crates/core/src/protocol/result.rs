//! Tallying, the canonical result encoding, and result signing.

use serde::{Deserialize, Serialize};

use crate::ballot::VBallotId;
use crate::config::ClusterConfig;
use crate::crypto::{Principal, ShadowId, Signature, SignatureScheme};
use crate::error::ProtocolError;
use crate::protocol::report::CollisionReport;

/// Votes per option from the published remaining list:
/// `tally[o] = sc - |remaining of option o|`.
pub fn tally(config: &ClusterConfig, remaining: &[VBallotId]) -> Result<Vec<usize>, ProtocolError> {
    tally_for(config.sc, config.ao, remaining)
}

/// [`tally`] for a cluster described only by its size and option count. An
/// honest Stage 1 always leaves `sc * (ao - 1)` ballots regardless of `k`.
pub fn tally_for(sc: usize, ao: usize, remaining: &[VBallotId]) -> Result<Vec<usize>, ProtocolError> {
    let expected = sc * (ao - 1);
    if remaining.len() != expected {
        return Err(ProtocolError::MalformedRemaining {
            expected,
            found: remaining.len(),
        });
    }
    let mut left = vec![0usize; ao];
    for id in remaining {
        if id.option >= ao {
            return Err(ProtocolError::MalformedRemaining {
                expected,
                found: remaining.len(),
            });
        }
        left[id.option] += 1;
    }
    // More than sc left of one option would mean a negative vote count.
    if left.iter().any(|&n| n > sc) {
        return Err(ProtocolError::MalformedRemaining {
            expected,
            found: remaining.len(),
        });
    }
    Ok(left.into_iter().map(|n| sc - n).collect())
}

/// What every voter signs: cluster id, the remaining list and the tally.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct ResultPayload {
    pub cluster_id: u64,
    /// Sorted by serial.
    pub remaining: Vec<VBallotId>,
    pub tally: Vec<usize>,
}

impl ResultPayload {
    pub fn new(cluster_id: u64, mut remaining: Vec<VBallotId>, tally: Vec<usize>) -> Self {
        remaining.sort_by_key(|id| id.serial);
        ResultPayload {
            cluster_id,
            remaining,
            tally,
        }
    }

    /// Length-prefixed concatenation of the cluster id, the serial-sorted
    /// remaining ballots and the tally. Every field is preceded by its byte
    /// length as a big-endian u32; integers are big-endian.
    pub fn canonical_encoding(&self) -> Vec<u8> {
        let mut remaining = self.remaining.clone();
        remaining.sort_by_key(|id| id.serial);
        let mut ballots = Vec::with_capacity(remaining.len() * 20);
        for id in &remaining {
            ballots.extend_from_slice(&id.serial.0.to_be_bytes());
            ballots.extend_from_slice(&(id.option as u32).to_be_bytes());
        }
        let tally: Vec<u8> = self
            .tally
            .iter()
            .flat_map(|&t| (t as u64).to_be_bytes())
            .collect();

        let mut out = Vec::with_capacity(12 + 8 + ballots.len() + tally.len());
        for field in [&self.cluster_id.to_be_bytes()[..], &ballots, &tally] {
            out.extend_from_slice(&(field.len() as u32).to_be_bytes());
            out.extend_from_slice(field);
        }
        out
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct VoterSignature {
    pub signer: ShadowId,
    pub signature: Signature,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "status", content = "reports", rename_all = "SCREAMING_SNAKE_CASE")]
pub enum ResultStatus {
    Valid,
    Cancelled(Vec<CollisionReport>),
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct ClusterResult {
    pub cluster_id: u64,
    /// Empty when cancelled.
    pub tally: Vec<usize>,
    pub remaining_published: Vec<VBallotId>,
    pub signatures: Vec<VoterSignature>,
    pub status: ResultStatus,
}

impl ClusterResult {
    pub fn is_valid(&self) -> bool {
        self.status == ResultStatus::Valid
    }

    pub fn reports(&self) -> &[CollisionReport] {
        match &self.status {
            ResultStatus::Valid => &[],
            ResultStatus::Cancelled(r) => r,
        }
    }

    pub fn payload(&self) -> ResultPayload {
        ResultPayload::new(
            self.cluster_id,
            self.remaining_published.clone(),
            self.tally.clone(),
        )
    }

    pub fn cancelled(cluster_id: u64, reports: Vec<CollisionReport>) -> Self {
        ClusterResult {
            cluster_id,
            tally: Vec::new(),
            remaining_published: Vec::new(),
            signatures: Vec::new(),
            status: ResultStatus::Cancelled(reports),
        }
    }
}

/// Close the election. With no reports every signer recomputes the tally
/// from the remaining list and signs the canonical encoding; a mismatch is a
/// refusal. Any report cancels.
pub fn finalize(
    config: &ClusterConfig,
    payload: ResultPayload,
    reports: Vec<CollisionReport>,
    signers: &[(usize, ShadowId)],
    scheme: &dyn SignatureScheme,
) -> Result<ClusterResult, ProtocolError> {
    if !reports.is_empty() {
        return Ok(ClusterResult::cancelled(payload.cluster_id, reports));
    }
    let recomputed = tally(config, &payload.remaining);
    let message = payload.canonical_encoding();
    let mut signatures = Vec::with_capacity(signers.len());
    for &(position, shadow) in signers {
        if recomputed.as_ref().ok() != Some(&payload.tally) {
            return Err(ProtocolError::SignatureRefused(position));
        }
        signatures.push(VoterSignature {
            signer: shadow,
            signature: scheme.sign(Principal::Voter(shadow), &message),
        });
    }
    Ok(ClusterResult {
        cluster_id: payload.cluster_id,
        tally: payload.tally,
        remaining_published: payload.remaining,
        signatures,
        status: ResultStatus::Valid,
    })
}
