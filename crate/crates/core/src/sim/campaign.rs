//! Many independent cluster elections under one adversary mix.
//!
//! Trial `i` draws everything from `derive_seed(seed, i)`, trials run in
//! parallel, and their summaries are folded in trial order, so the report
//! does not depend on scheduling. Each trial draws a fresh roster from the
//! whole census: warnings are tallied across the campaign but punishment
//! does not feed back into later trials.

use std::collections::BTreeMap;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::adversary::AdversaryMix;
use crate::config::ClusterConfig;
use crate::crypto::{derive_seed, KeyedHashScheme};
use crate::error::{ConfigError, SimError};
use crate::protocol::transcript::MessageCounts;
use crate::sim::cluster::form_cluster;
use crate::sim::election::{run_election, ElectionSetup};
use crate::sim::ledger::{Warning, WarningLedger};
use crate::sim::{LatencyModel, VoteModel, VoterId};

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CampaignConfig {
    pub trials: usize,
    pub seed: u64,
    pub cluster: ClusterConfig,
    #[serde(default)]
    pub mix: AdversaryMix,
    #[serde(default)]
    pub votes: VoteModel,
    #[serde(default)]
    pub latency: LatencyModel,
    /// Voters to draw rosters from; defaults to the cluster size.
    #[serde(default)]
    pub census: Option<usize>,
}

impl CampaignConfig {
    pub fn new(cluster: ClusterConfig, mix: AdversaryMix, trials: usize, seed: u64) -> Self {
        CampaignConfig {
            trials,
            seed,
            cluster,
            mix,
            votes: VoteModel::Uniform,
            latency: LatencyModel::default(),
            census: None,
        }
    }

    pub fn census_size(&self) -> usize {
        self.census.unwrap_or(self.cluster.sc)
    }

    pub fn validate(&self) -> Result<(), SimError> {
        self.cluster.validate()?;
        self.mix.validate(&self.cluster)?;
        self.votes.validate(self.cluster.ao)?;
        self.latency.validate()?;
        if self.census_size() < self.cluster.sc {
            return Err(ConfigError::CensusTooSmall {
                census: self.census_size(),
                sc: self.cluster.sc,
            }
            .into());
        }
        Ok(())
    }
}

/// A proportion with its Wilson 95% interval.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Rate {
    pub successes: u64,
    pub trials: u64,
    pub rate: f64,
    pub lo: f64,
    pub hi: f64,
}

const Z95: f64 = 1.959_963_984_540_054;

impl Rate {
    pub fn new(successes: u64, trials: u64) -> Self {
        if trials == 0 {
            return Rate {
                successes,
                trials,
                rate: 0.0,
                lo: 0.0,
                hi: 1.0,
            };
        }
        let n = trials as f64;
        let p = successes as f64 / n;
        let z2 = Z95 * Z95;
        let denom = 1.0 + z2 / n;
        let centre = (p + z2 / (2.0 * n)) / denom;
        let half = Z95 * (p * (1.0 - p) / n + z2 / (4.0 * n * n)).sqrt() / denom;
        Rate {
            successes,
            trials,
            rate: p,
            lo: (centre - half).max(0.0),
            hi: (centre + half).min(1.0),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct PrivacyStats {
    pub exposures: u64,
    pub reveals: u64,
    pub false_reveals: u64,
    pub reveal_rate: Rate,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct MessageStats {
    /// Elections that ran both stages without a timeout.
    pub complete_runs: u64,
    pub stage1_per_cluster: f64,
    pub stage2_per_cluster: f64,
    pub formula_mismatches: u64,
    pub opacity_violations: u64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SimReport {
    pub config: CampaignConfig,
    pub trials: u64,
    pub valid: u64,
    pub cancelled: u64,
    /// Trials containing a node that tries to alter the tally.
    pub attempts: u64,
    /// VALID results whose tally differs from the votes cast.
    pub undetected_alterations: u64,
    /// Cancelled attempts over attempts.
    pub detection: Rate,
    /// Undetected alterations over attempts.
    pub undetected: Rate,
    pub stage1_detections: u64,
    pub reports_by_kind: BTreeMap<String, u64>,
    pub warnings_issued: u64,
    pub honest_warnings: u64,
    /// Honest warnings per honest voter slot.
    pub honest_warning_rate: f64,
    pub punished: u64,
    pub privacy: PrivacyStats,
    pub messages: MessageStats,
}

impl SimReport {
    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("report serializes")
    }

    /// Flat `(metric, value)` pairs for tabular output.
    pub fn rows(&self) -> Vec<(String, String)> {
        let mut rows = vec![
            ("seed".to_string(), self.config.seed.to_string()),
            ("trials".into(), self.trials.to_string()),
            ("valid".into(), self.valid.to_string()),
            ("cancelled".into(), self.cancelled.to_string()),
            ("attempts".into(), self.attempts.to_string()),
            ("undetected_alterations".into(), self.undetected_alterations.to_string()),
        ];
        for (name, r) in [("detection", &self.detection), ("undetected", &self.undetected)] {
            rows.push((format!("{name}_rate"), r.rate.to_string()));
            rows.push((format!("{name}_lo"), r.lo.to_string()));
            rows.push((format!("{name}_hi"), r.hi.to_string()));
        }
        rows.push(("stage1_detections".into(), self.stage1_detections.to_string()));
        for (k, v) in &self.reports_by_kind {
            rows.push((format!("reports_{}", k.to_lowercase()), v.to_string()));
        }
        rows.extend([
            ("warnings_issued".to_string(), self.warnings_issued.to_string()),
            ("honest_warnings".into(), self.honest_warnings.to_string()),
            ("honest_warning_rate".into(), self.honest_warning_rate.to_string()),
            ("punished".into(), self.punished.to_string()),
            ("privacy_exposures".into(), self.privacy.exposures.to_string()),
            ("privacy_reveals".into(), self.privacy.reveals.to_string()),
            ("privacy_false_reveals".into(), self.privacy.false_reveals.to_string()),
            ("privacy_reveal_rate".into(), self.privacy.reveal_rate.rate.to_string()),
            ("messages_complete_runs".into(), self.messages.complete_runs.to_string()),
            ("messages_stage1_per_cluster".into(), self.messages.stage1_per_cluster.to_string()),
            ("messages_stage2_per_cluster".into(), self.messages.stage2_per_cluster.to_string()),
            ("messages_formula_mismatches".into(), self.messages.formula_mismatches.to_string()),
            ("opacity_violations".into(), self.messages.opacity_violations.to_string()),
        ]);
        rows
    }
}

/// What a campaign keeps from one election.
#[derive(Clone, Debug)]
struct TrialSummary {
    valid: bool,
    attempted: bool,
    altered: bool,
    stage1_detected: bool,
    report_kinds: Vec<&'static str>,
    /// Warning and whether the warned voter was honest.
    warnings: Vec<(Warning, bool)>,
    honest_slots: u64,
    complete: bool,
    counts: MessageCounts,
    formula_ok: bool,
    opacity_violations: usize,
    exposures: usize,
    reveals: usize,
    false_reveals: usize,
}

fn run_trial(cfg: &CampaignConfig, census: &[VoterId], scheme: &KeyedHashScheme, i: usize) -> Result<TrialSummary, SimError> {
    let seed = derive_seed(cfg.seed, i as u64);
    let mut rng = ChaCha8Rng::seed_from_u64(derive_seed(seed, 2));
    let c = &cfg.cluster;
    let roster = form_cluster(census, c.sc, &WarningLedger::new(c.warn_threshold), &[], &mut rng)?;
    let strategies = cfg.mix.place(c, &mut rng)?;
    let votes: Vec<usize> = strategies
        .iter()
        .map(|s| s.target.unwrap_or_else(|| cfg.votes.draw(c.ao, &mut rng)))
        .collect();
    let mut setup = ElectionSetup::new(c, &roster, &votes, &strategies, scheme);
    setup.cluster_id = i as u64;
    setup.latency = cfg.latency;
    let out = run_election(&setup, seed)?;
    let complete = out.reached_stage2 && !out.timed_out;
    Ok(TrialSummary {
        valid: out.result.is_valid(),
        attempted: strategies.iter().any(|s| s.alters_tally()),
        altered: out.altered(),
        stage1_detected: !out.reached_stage2,
        report_kinds: out.result.reports().iter().map(|r| r.kind.as_str()).collect(),
        warnings: out
            .warnings
            .iter()
            .cloned()
            .zip(out.warned_positions.iter().map(|&p| !strategies[p].is_adversarial()))
            .collect(),
        honest_slots: strategies.iter().filter(|s| !s.is_adversarial()).count() as u64,
        complete,
        counts: out.transcript.counts(),
        formula_ok: !complete || out.messages_match_formula(c),
        opacity_violations: out.relay.opacity_violations,
        exposures: out.exposures,
        reveals: out.reveals.len(),
        false_reveals: out.false_reveals,
    })
}

/// Run `cfg.trials` independent elections and aggregate them.
pub fn run_campaign(cfg: &CampaignConfig) -> Result<SimReport, SimError> {
    cfg.validate()?;
    let census: Vec<VoterId> = (0..cfg.census_size() as u64).map(VoterId).collect();
    let scheme = KeyedHashScheme::default();
    let summaries: Vec<TrialSummary> = (0..cfg.trials)
        .into_par_iter()
        .map(|i| run_trial(cfg, &census, &scheme, i))
        .collect::<Result<_, _>>()?;

    let mut ledger = WarningLedger::new(cfg.cluster.warn_threshold);
    let (mut valid, mut attempts, mut detected, mut altered, mut stage1) = (0u64, 0u64, 0u64, 0u64, 0u64);
    let mut by_kind: BTreeMap<String, u64> = BTreeMap::new();
    let (mut honest_warnings, mut honest_slots) = (0u64, 0u64);
    let (mut complete, mut s1, mut s2, mut mismatches, mut opacity) = (0u64, 0u64, 0u64, 0u64, 0u64);
    let (mut exposures, mut reveals, mut false_reveals) = (0u64, 0u64, 0u64);
    let mut punished = 0u64;
    for t in &summaries {
        valid += t.valid as u64;
        if t.attempted {
            attempts += 1;
            detected += !t.valid as u64;
        }
        altered += t.altered as u64;
        stage1 += (t.stage1_detected && !t.valid) as u64;
        for k in &t.report_kinds {
            *by_kind.entry((*k).to_string()).or_default() += 1;
        }
        for (w, honest) in &t.warnings {
            honest_warnings += *honest as u64;
            punished += ledger.warn(w.clone()) as u64;
        }
        honest_slots += t.honest_slots;
        if t.complete {
            complete += 1;
            s1 += t.counts.stage1 as u64;
            s2 += t.counts.stage2 as u64;
        }
        mismatches += !t.formula_ok as u64;
        opacity += t.opacity_violations as u64;
        exposures += t.exposures as u64;
        reveals += t.reveals as u64;
        false_reveals += t.false_reveals as u64;
    }
    let trials = summaries.len() as u64;
    let mean = |x: u64| if complete == 0 { 0.0 } else { x as f64 / complete as f64 };
    Ok(SimReport {
        config: cfg.clone(),
        trials,
        valid,
        cancelled: trials - valid,
        attempts,
        undetected_alterations: altered,
        detection: Rate::new(detected, attempts),
        undetected: Rate::new(altered, attempts),
        stage1_detections: stage1,
        reports_by_kind: by_kind,
        warnings_issued: ledger.total_warnings(),
        honest_warnings,
        honest_warning_rate: if honest_slots == 0 {
            0.0
        } else {
            honest_warnings as f64 / honest_slots as f64
        },
        punished,
        privacy: PrivacyStats {
            exposures,
            reveals,
            false_reveals,
            reveal_rate: Rate::new(reveals, exposures),
        },
        messages: MessageStats {
            complete_runs: complete,
            stage1_per_cluster: mean(s1),
            stage2_per_cluster: mean(s2),
            formula_mismatches: mismatches,
            opacity_violations: opacity,
        },
    })
}
