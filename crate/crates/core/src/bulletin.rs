//! Election-wide aggregation: partition the electorate into clusters,
//! publish signed cluster results, and audit the resulting board.
//!
//! The board is an append-only JSON-lines file, one [`BoardEntry`] per
//! line. The intermediary of each cluster publishes a [`BoardCensus`]
//! listing the shadow ids it admitted per cluster; auditors check entries
//! against it.

use std::collections::{BTreeMap, BTreeSet};

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::adversary::AdversaryMix;
use crate::ballot::VBallotId;
use crate::config::ClusterConfig;
use crate::crypto::{derive_seed, Principal, ShadowId, Signature, SignatureScheme};
use crate::error::BulletinError;
use crate::protocol::result::{tally_for, ClusterResult, ResultPayload, VoterSignature};
use crate::sim::election::{run_election, ElectionSetup};
use crate::sim::ledger::WarningLedger;
use crate::sim::{LatencyModel, VoteModel, VoterId};

/// Split the census into clusters of `cs` in a seeded random order. The
/// `census mod cs` leftover voters join the last cluster.
pub fn partition(census: &[VoterId], cs: usize, seed: u64) -> Result<Vec<Vec<VoterId>>, BulletinError> {
    if cs < 2 || census.len() < cs {
        return Err(BulletinError::CensusTooSmall {
            census: census.len(),
            cs,
        });
    }
    let mut order = census.to_vec();
    order.shuffle(&mut ChaCha8Rng::seed_from_u64(seed));
    let n = order.len() / cs;
    let mut clusters: Vec<Vec<VoterId>> = order[..n * cs].chunks(cs).map(<[VoterId]>::to_vec).collect();
    clusters[n - 1].extend_from_slice(&order[n * cs..]);
    Ok(clusters)
}

/// Shadow ids the intermediaries admitted, per cluster.
#[derive(Clone, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(transparent)]
pub struct BoardCensus {
    pub clusters: BTreeMap<u64, BTreeSet<ShadowId>>,
}

/// A published cluster result.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct BoardEntry {
    pub cluster_id: u64,
    pub tally: Vec<usize>,
    pub remaining: Vec<VBallotId>,
    pub signatures: Vec<VoterSignature>,
    /// The cluster's intermediary over the result and the signer list.
    pub countersignature: Signature,
}

impl BoardEntry {
    pub fn payload(&self) -> ResultPayload {
        ResultPayload::new(self.cluster_id, self.remaining.clone(), self.tally.clone())
    }

    pub fn signers(&self) -> impl Iterator<Item = ShadowId> + '_ {
        self.signatures.iter().map(|s| s.signer)
    }

    fn countersigned_bytes(payload: &ResultPayload, signatures: &[VoterSignature]) -> Vec<u8> {
        let mut m = payload.canonical_encoding();
        m.extend_from_slice(&(signatures.len() as u32).to_be_bytes());
        for s in signatures {
            m.extend_from_slice(&s.signer.0.to_be_bytes());
        }
        m
    }

    /// Intermediary countersignature for a result.
    pub fn countersign(result: &ClusterResult, scheme: &dyn SignatureScheme) -> Signature {
        let m = Self::countersigned_bytes(&result.payload(), &result.signatures);
        scheme.sign(Principal::Intermediary(result.cluster_id), &m)
    }

    pub fn from_result(
        result: &ClusterResult,
        countersignature: Signature,
    ) -> Result<BoardEntry, BulletinError> {
        if !result.is_valid() {
            return Err(BulletinError::NotValid(result.cluster_id));
        }
        let p = result.payload();
        Ok(BoardEntry {
            cluster_id: p.cluster_id,
            tally: p.tally,
            remaining: p.remaining,
            signatures: result.signatures.clone(),
            countersignature,
        })
    }

    /// Signers whose signature does not verify.
    pub fn bad_signers(&self, scheme: &dyn SignatureScheme) -> Vec<ShadowId> {
        let m = self.payload().canonical_encoding();
        self.signatures
            .iter()
            .filter(|s| !scheme.verify(Principal::Voter(s.signer), &m, &s.signature))
            .map(|s| s.signer)
            .collect()
    }

    pub fn countersignature_ok(&self, scheme: &dyn SignatureScheme) -> bool {
        let m = Self::countersigned_bytes(&self.payload(), &self.signatures);
        scheme.verify(Principal::Intermediary(self.cluster_id), &m, &self.countersignature)
    }

    /// Tally recomputed from the remaining list, for a cluster of `sc`.
    pub fn tally_ok(&self, sc: usize) -> bool {
        let ao = self.tally.len();
        ao >= 2 && tally_for(sc, ao, &self.remaining).is_ok_and(|t| t == self.tally)
    }

    fn check(&self, scheme: &dyn SignatureScheme) -> Result<(), BulletinError> {
        if let Some(s) = self.bad_signers(scheme).first() {
            return Err(BulletinError::BadSignature {
                cluster: self.cluster_id,
                signer: s.to_string(),
            });
        }
        if !self.countersignature_ok(scheme) {
            return Err(BulletinError::BadCountersignature(self.cluster_id));
        }
        if !self.tally_ok(self.signatures.len()) {
            return Err(BulletinError::TallyMismatch(self.cluster_id));
        }
        Ok(())
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum ResubmitOutcome {
    Appended,
    /// Identical entry already on the board; nothing written.
    AlreadyPresent,
    /// Different signed content for a published cluster; retained for audit.
    Conflict,
}

/// Append-only list of entries, in publication order.
#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct BulletinBoard {
    entries: Vec<BoardEntry>,
}

impl BulletinBoard {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn entries(&self) -> &[BoardEntry] {
        &self.entries
    }

    /// Publish a VALID result with its intermediary countersignature.
    pub fn publish(
        &mut self,
        result: &ClusterResult,
        countersignature: Signature,
        scheme: &dyn SignatureScheme,
    ) -> Result<&BoardEntry, BulletinError> {
        let entry = BoardEntry::from_result(result, countersignature)?;
        entry.check(scheme)?;
        if self.entries.iter().any(|e| e.cluster_id == entry.cluster_id) {
            return Err(BulletinError::Conflict(entry.cluster_id));
        }
        let mut seen = BTreeSet::new();
        let taken: BTreeSet<ShadowId> = self.entries.iter().flat_map(|e| e.signers()).collect();
        for s in entry.signers() {
            if taken.contains(&s) || !seen.insert(s) {
                return Err(BulletinError::DuplicateSigner(s.to_string()));
            }
        }
        self.entries.push(entry);
        Ok(self.entries.last().expect("just pushed"))
    }

    /// A voter of the cluster resubmits a result that went missing.
    pub fn resubmit(
        &mut self,
        entry: BoardEntry,
        scheme: &dyn SignatureScheme,
    ) -> Result<ResubmitOutcome, BulletinError> {
        entry.check(scheme)?;
        let same_cluster: Vec<&BoardEntry> =
            self.entries.iter().filter(|e| e.cluster_id == entry.cluster_id).collect();
        if same_cluster.iter().any(|e| **e == entry) {
            return Ok(ResubmitOutcome::AlreadyPresent);
        }
        let outcome = if same_cluster.is_empty() {
            ResubmitOutcome::Appended
        } else {
            ResubmitOutcome::Conflict
        };
        self.entries.push(entry);
        Ok(outcome)
    }

    /// Componentwise sum over the first entry of every cluster.
    pub fn global_tally(&self) -> Vec<usize> {
        let mut seen = BTreeSet::new();
        let mut total: Vec<usize> = Vec::new();
        for e in &self.entries {
            if !seen.insert(e.cluster_id) {
                continue;
            }
            if total.len() < e.tally.len() {
                total.resize(e.tally.len(), 0);
            }
            for (t, v) in total.iter_mut().zip(&e.tally) {
                *t += v;
            }
        }
        total
    }

    pub fn to_jsonl(&self) -> String {
        self.entries
            .iter()
            .map(|e| serde_json::to_string(e).expect("entry serializes") + "\n")
            .collect()
    }

    /// Strict parse; use [`audit_jsonl`] to audit untrusted text.
    pub fn from_jsonl(text: &str) -> Result<Self, serde_json::Error> {
        let entries = text
            .lines()
            .filter(|l| !l.is_empty())
            .map(serde_json::from_str)
            .collect::<Result<_, _>>()?;
        Ok(BulletinBoard { entries })
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "SCREAMING_SNAKE_CASE")]
pub enum FindingKind {
    MalformedEntry,
    BadSignature,
    BadCountersignature,
    UnknownCluster,
    UnknownSigner,
    MissingSignature,
    TallyMismatch,
    DuplicateSigner,
    DuplicateEntry,
    Conflict,
    MissingCluster,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Finding {
    pub kind: FindingKind,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub cluster: Option<u64>,
    /// 1-based board line, when auditing a file.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub line: Option<usize>,
    pub detail: String,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct AuditReport {
    pub entries: usize,
    pub clusters_published: usize,
    pub voters_counted: usize,
    pub global_tally: Vec<usize>,
    pub findings: Vec<Finding>,
}

impl AuditReport {
    pub fn is_clean(&self) -> bool {
        self.findings.is_empty()
    }

    pub fn has(&self, kind: FindingKind) -> bool {
        self.findings.iter().any(|f| f.kind == kind)
    }
}

/// Check every entry against the census: signatures, countersignature,
/// signer membership, one entry per voter, tally arithmetic, and clusters
/// with no published result.
pub fn verify_board(board: &BulletinBoard, census: &BoardCensus, scheme: &dyn SignatureScheme) -> AuditReport {
    let lines: Vec<(usize, &BoardEntry)> = board.entries.iter().enumerate().map(|(i, e)| (i + 1, e)).collect();
    audit_entries(&lines, Vec::new(), census, scheme)
}

/// Parse and audit a board file. Unparseable lines are findings, not errors.
pub fn audit_jsonl(text: &str, census: &BoardCensus, scheme: &dyn SignatureScheme) -> AuditReport {
    let mut parsed = Vec::new();
    let mut findings = Vec::new();
    for (i, line) in text.lines().enumerate() {
        if line.is_empty() {
            continue;
        }
        match serde_json::from_str::<BoardEntry>(line) {
            Ok(e) => parsed.push((i + 1, e)),
            Err(err) => findings.push(Finding {
                kind: FindingKind::MalformedEntry,
                cluster: None,
                line: Some(i + 1),
                detail: err.to_string(),
            }),
        }
    }
    let refs: Vec<(usize, &BoardEntry)> = parsed.iter().map(|(l, e)| (*l, e)).collect();
    audit_entries(&refs, findings, census, scheme)
}

fn audit_entries(
    entries: &[(usize, &BoardEntry)],
    mut findings: Vec<Finding>,
    census: &BoardCensus,
    scheme: &dyn SignatureScheme,
) -> AuditReport {
    let mut push = |kind, cluster: Option<u64>, line: Option<usize>, detail: String| {
        findings.push(Finding {
            kind,
            cluster,
            line,
            detail,
        })
    };
    let mut by_cluster: BTreeMap<u64, Vec<(usize, &BoardEntry)>> = BTreeMap::new();
    for &(line, e) in entries {
        by_cluster.entry(e.cluster_id).or_default().push((line, e));
    }
    let mut signer_home: BTreeMap<ShadowId, u64> = BTreeMap::new();
    let mut counted = BulletinBoard::new();
    let mut voters = 0;

    for (&cluster, group) in &by_cluster {
        let (line, e) = group[0];
        for &(l, other) in &group[1..] {
            if *other == *e {
                push(FindingKind::DuplicateEntry, Some(cluster), Some(l), format!("repeats line {line}"));
            } else {
                push(FindingKind::Conflict, Some(cluster), Some(l), format!("differs from line {line}"));
            }
        }
        let mut clean = true;
        for &(l, entry) in group {
            for s in entry.bad_signers(scheme) {
                clean = false;
                push(FindingKind::BadSignature, Some(cluster), Some(l), s.to_string());
            }
            if !entry.countersignature_ok(scheme) {
                clean = false;
                push(FindingKind::BadCountersignature, Some(cluster), Some(l), String::new());
            }
        }
        let members = census.clusters.get(&cluster);
        if members.is_none() {
            clean = false;
            push(FindingKind::UnknownCluster, Some(cluster), Some(line), String::new());
        }
        let sc = members.map_or(e.signatures.len(), BTreeSet::len);
        if !e.tally_ok(sc) {
            clean = false;
            push(
                FindingKind::TallyMismatch,
                Some(cluster),
                Some(line),
                format!("published {:?}", e.tally),
            );
        }
        let mut signed = BTreeSet::new();
        for s in e.signers() {
            if members.is_some_and(|m| !m.contains(&s)) {
                clean = false;
                push(FindingKind::UnknownSigner, Some(cluster), Some(line), s.to_string());
            }
            if !signed.insert(s) {
                clean = false;
                push(FindingKind::DuplicateSigner, Some(cluster), Some(line), s.to_string());
                continue;
            }
            if let Some(prev) = signer_home.insert(s, cluster) {
                clean = false;
                push(
                    FindingKind::DuplicateSigner,
                    Some(cluster),
                    Some(line),
                    format!("{s} also signed cluster {prev}"),
                );
            }
        }
        for m in members.into_iter().flat_map(|m| m.difference(&signed)) {
            clean = false;
            push(FindingKind::MissingSignature, Some(cluster), Some(line), m.to_string());
        }
        if clean {
            voters += signed.len();
            counted.entries.push(e.clone());
        }
    }
    for &cluster in census.clusters.keys() {
        if !by_cluster.contains_key(&cluster) {
            push(FindingKind::MissingCluster, Some(cluster), None, String::new());
        }
    }
    findings.sort_by_key(|f| (f.line.unwrap_or(usize::MAX), f.kind, f.cluster));
    AuditReport {
        entries: entries.len(),
        clusters_published: by_cluster.len(),
        voters_counted: voters,
        global_tally: counted.global_tally(),
        findings,
    }
}

/// Parameters for a whole election over a census.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ElectionPlan {
    /// Cluster parameters; `sc` is the target cluster size.
    pub cluster: ClusterConfig,
    #[serde(default)]
    pub mix: AdversaryMix,
    #[serde(default)]
    pub votes: VoteModel,
    #[serde(default)]
    pub latency: LatencyModel,
    pub seed: u64,
    /// Re-partition attempts for voters of cancelled clusters.
    pub max_rounds: usize,
}

pub struct ElectionRun {
    pub board: BulletinBoard,
    pub census: BoardCensus,
    pub ledger: WarningLedger,
    pub cancelled_clusters: usize,
    /// Voters never counted in a VALID cluster.
    pub uncounted: Vec<VoterId>,
    pub true_tally: Vec<usize>,
}

const MAX_REPARTITIONS: usize = 1000;

/// Partition, run every cluster, publish VALID results, and re-partition
/// the voters of cancelled clusters, never reuniting a cancelled roster.
pub fn run_full_election(
    voters: &[VoterId],
    plan: &ElectionPlan,
    scheme: &(impl SignatureScheme + crate::crypto::Sealer),
) -> Result<ElectionRun, BulletinError> {
    let cs = plan.cluster.sc;
    let mut rng = ChaCha8Rng::seed_from_u64(derive_seed(plan.seed, 0));
    let votes: BTreeMap<VoterId, usize> = voters
        .iter()
        .map(|&v| (v, plan.votes.draw(plan.cluster.ao, &mut rng)))
        .collect();
    let mut board = BulletinBoard::new();
    let mut census = BoardCensus::default();
    let mut ledger = WarningLedger::new(plan.cluster.warn_threshold);
    let mut avoid: Vec<BTreeSet<VoterId>> = Vec::new();
    let mut pending = voters.to_vec();
    let mut cancelled = 0;
    let mut next_id = 0u64;
    let mut true_tally = vec![0; plan.cluster.ao];

    for round in 0..plan.max_rounds.max(1) {
        pending.retain(|v| !ledger.is_punished(*v));
        if pending.len() < 2 {
            break;
        }
        let clusters = if pending.len() < cs {
            vec![pending.clone()]
        } else {
            let mut attempt = 0;
            loop {
                let seed = derive_seed(plan.seed, (round * MAX_REPARTITIONS + attempt) as u64 + 1);
                let c = partition(&pending, cs, seed)?;
                let reunited = c
                    .iter()
                    .any(|r| avoid.contains(&r.iter().copied().collect::<BTreeSet<_>>()));
                if !reunited || attempt + 1 == MAX_REPARTITIONS {
                    break c;
                }
                attempt += 1;
            }
        };
        let mut next = Vec::new();
        for roster in clusters {
            let config = plan.cluster.resized(roster.len()).map_err(crate::error::SimError::from)?;
            let cluster_id = next_id;
            next_id += 1;
            let seed = derive_seed(plan.seed, 1 << 32 | cluster_id);
            let mut crng = ChaCha8Rng::seed_from_u64(seed);
            let strategies = plan.mix.place(&config, &mut crng).map_err(crate::error::SimError::from)?;
            let cluster_votes: Vec<usize> = roster
                .iter()
                .zip(&strategies)
                .map(|(v, s)| s.target.unwrap_or(votes[v]))
                .collect();
            let mut setup = ElectionSetup::new(&config, &roster, &cluster_votes, &strategies, scheme);
            setup.cluster_id = cluster_id;
            setup.latency = plan.latency;
            let out = run_election(&setup, seed)?;
            if out.result.is_valid() {
                let cs = BoardEntry::countersign(&out.result, scheme);
                board.publish(&out.result, cs, scheme)?;
                census.clusters.insert(cluster_id, out.shadows.iter().copied().collect());
                for (t, v) in true_tally.iter_mut().zip(&out.true_tally) {
                    *t += v;
                }
            } else {
                cancelled += 1;
                for w in out.warnings {
                    ledger.warn(w);
                }
                avoid.push(roster.iter().copied().collect());
                next.extend(roster);
            }
        }
        pending = next;
        if pending.is_empty() {
            break;
        }
    }
    Ok(ElectionRun {
        board,
        census,
        ledger,
        cancelled_clusters: cancelled,
        uncounted: pending,
        true_tally,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::crypto::KeyedHashScheme;

    fn voters(n: u64) -> Vec<VoterId> {
        (0..n).map(VoterId).collect()
    }

    #[test]
    fn partition_folds_remainder() {
        let sizes = |n, cs| {
            partition(&voters(n), cs, 1)
                .unwrap()
                .iter()
                .map(Vec::len)
                .collect::<Vec<_>>()
        };
        assert_eq!(sizes(100, 25), vec![25; 4]);
        assert_eq!(sizes(103, 25), vec![25, 25, 25, 28]);
        assert!(matches!(
            partition(&voters(1), 25, 1),
            Err(BulletinError::CensusTooSmall { census: 1, cs: 25 })
        ));
        let p = partition(&voters(103), 25, 9).unwrap();
        let all: BTreeSet<VoterId> = p.iter().flatten().copied().collect();
        assert_eq!(all.len(), 103);
        assert_eq!(p, partition(&voters(103), 25, 9).unwrap());
    }

    fn small_run() -> (ElectionRun, KeyedHashScheme) {
        let scheme = KeyedHashScheme::default();
        let plan = ElectionPlan {
            cluster: ClusterConfig::new(5, 2).unwrap(),
            mix: AdversaryMix::honest(),
            votes: VoteModel::Uniform,
            latency: LatencyModel::default(),
            seed: 3,
            max_rounds: 3,
        };
        (run_full_election(&voters(20), &plan, &scheme).unwrap(), scheme)
    }

    #[test]
    fn honest_election_audits_clean() {
        let (run, scheme) = small_run();
        assert_eq!(run.board.entries().len(), 4);
        let report = verify_board(&run.board, &run.census, &scheme);
        assert!(report.is_clean(), "{:?}", report.findings);
        assert_eq!(report.global_tally, run.true_tally);
        assert_eq!(report.global_tally.iter().sum::<usize>(), 20);
        let text = run.board.to_jsonl();
        assert_eq!(audit_jsonl(&text, &run.census, &scheme), report);
        assert_eq!(BulletinBoard::from_jsonl(&text).unwrap(), run.board);
    }

    #[test]
    fn resubmission_outcomes() {
        let (run, scheme) = small_run();
        let entries = run.board.entries().to_vec();
        let mut board = BulletinBoard::new();
        for e in &entries[1..] {
            board.resubmit(e.clone(), &scheme).unwrap();
        }
        assert!(verify_board(&board, &run.census, &scheme).has(FindingKind::MissingCluster));
        assert_eq!(board.resubmit(entries[0].clone(), &scheme), Ok(ResubmitOutcome::Appended));
        assert_eq!(board.resubmit(entries[0].clone(), &scheme), Ok(ResubmitOutcome::AlreadyPresent));
        assert!(verify_board(&board, &run.census, &scheme).is_clean());

        let mut forged = entries[0].clone();
        forged.tally.swap(0, 1);
        assert!(board.resubmit(forged, &scheme).is_err());
    }

    #[test]
    fn publish_rejects_reused_signer_and_forgery() {
        let (run, scheme) = small_run();
        let e = &run.board.entries()[0];
        let result = ClusterResult {
            cluster_id: e.cluster_id,
            tally: e.tally.clone(),
            remaining_published: e.remaining.clone(),
            signatures: e.signatures.clone(),
            status: crate::protocol::result::ResultStatus::Valid,
        };
        let mut board = BulletinBoard::new();
        let cs = BoardEntry::countersign(&result, &scheme);
        board.publish(&result, cs, &scheme).unwrap();

        let mut again = result.clone();
        again.cluster_id = 999;
        let msg = again.payload().canonical_encoding();
        for s in &mut again.signatures {
            s.signature = scheme.sign(Principal::Voter(s.signer), &msg);
        }
        let cs = BoardEntry::countersign(&again, &scheme);
        assert!(matches!(board.publish(&again, cs, &scheme), Err(BulletinError::DuplicateSigner(_))));

        let mut forged = result.clone();
        forged.cluster_id = 1000;
        let cs = BoardEntry::countersign(&forged, &scheme);
        assert!(matches!(board.publish(&forged, cs, &scheme), Err(BulletinError::BadSignature { .. })));
    }
}
