//! Scenario runner: seeded batches of scripted runs, statistics, and
//! transcripts.

pub mod audit;
pub mod scenarios;
pub mod stats;

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

pub use audit::{curiosity_audit, CuriosityRecord, PartyEstimate};
pub use scenarios::{RunOutcome, Scenario};
pub use stats::{BatchStats, Estimate};

use crate::commitment::CommitParams;
use crate::error::{Error, Result};
use crate::gcot::GcotParams;
use crate::netsim::Transcript;
use crate::ot::OtParams;
use crate::rng::derive_seed;
use crate::session::Session;
use crate::verdict::Outcome;

/// Attempts per run for commit scenarios that abort.
pub const MAX_ATTEMPTS: u64 = 8;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct ScenarioConfig {
    pub scenario: String,
    pub seed: u64,
    pub runs: usize,
    pub commit: CommitParams,
    pub ot: OtParams,
    pub gcot: GcotParams,
    pub bcx_rows: usize,
    /// Positions a lazy OT receiver leaves unmeasured.
    pub lazy_deferred: usize,
    /// Positions a cheating GCOT sender corrupts.
    pub corrupted: usize,
    pub reveal_private: bool,
}

impl Default for ScenarioConfig {
    fn default() -> Self {
        Self {
            scenario: Scenario::CommitHonest.name().to_string(),
            seed: 0,
            runs: 1,
            commit: CommitParams::default(),
            ot: OtParams::default(),
            gcot: GcotParams::default(),
            bcx_rows: crate::bcx::MIN_ROWS,
            lazy_deferred: 16,
            corrupted: 4,
            reveal_private: false,
        }
    }
}

fn parse<T: std::str::FromStr>(key: &str, value: &str) -> Result<T> {
    value
        .trim()
        .parse()
        .map_err(|_| Error::Config(format!("{key}: cannot parse {value:?}")))
}

/// Accepts `a/b` fractions as well as decimals.
fn parse_fraction(key: &str, value: &str) -> Result<f64> {
    match value.split_once('/') {
        Some((a, b)) => {
            let a: f64 = parse(key, a)?;
            let b: f64 = parse(key, b)?;
            if b == 0.0 {
                return Err(Error::Config(format!("{key}: zero denominator")));
            }
            Ok(a / b)
        }
        None => parse(key, value),
    }
}

impl ScenarioConfig {
    pub fn new(scenario: Scenario, seed: u64, runs: usize) -> Self {
        Self {
            scenario: scenario.name().to_string(),
            seed,
            runs,
            ..Self::default()
        }
    }

    pub fn from_json(s: &str) -> Result<Self> {
        serde_json::from_str(s).map_err(|e| Error::Config(format!("config file: {e}")))
    }

    pub fn scenario(&self) -> Result<Scenario> {
        self.scenario.parse()
    }

    /// Applies one `key=value` override.
    pub fn set_param(&mut self, assignment: &str) -> Result<()> {
        let (key, value) = assignment
            .split_once('=')
            .ok_or_else(|| Error::Config(format!("expected key=value, got {assignment:?}")))?;
        let key = key.trim();
        match key {
            "commit.l" => self.commit.l = parse(key, value)?,
            "commit.n" => self.commit.n = parse(key, value)?,
            "commit.tau" => self.commit.tau = parse_fraction(key, value)?,
            "ot.k" => self.ot.k = parse(key, value)?,
            "ot.check_fraction" => self.ot.check_fraction = parse_fraction(key, value)?,
            "ot.tau" => self.ot.tau = parse_fraction(key, value)?,
            "ot.commit_rows" => self.ot.commit_rows = parse(key, value)?,
            "ot.max_restarts" => self.ot.max_restarts = parse(key, value)?,
            "code.family" => self.gcot.code.set_family(value)?,
            "code.order" => self.gcot.code.order = parse(key, value)?,
            "code.m" => self.gcot.code.m = parse(key, value)?,
            "code.sigma" => self.gcot.code.sigma = parse_fraction(key, value)?,
            "gcot.l" => self.gcot.l = parse(key, value)?,
            "gcot.commit_rows" => self.gcot.commit_rows = parse(key, value)?,
            "gcot.proof_rows" => self.gcot.proof_rows = parse(key, value)?,
            "gcot.corrupted" => self.corrupted = parse(key, value)?,
            "lazy.deferred" => self.lazy_deferred = parse(key, value)?,
            "bcx.rows" => self.bcx_rows = parse(key, value)?,
            _ => return Err(Error::Config(format!("unknown parameter {key}"))),
        }
        Ok(())
    }

    pub fn validate(&self) -> Result<Scenario> {
        let scenario = self.scenario()?;
        if self.runs == 0 {
            return Err(Error::Config("runs must be positive".into()));
        }
        self.commit.validate()?;
        self.ot.validate()?;
        self.gcot.validate()?;
        if self.bcx_rows < crate::bcx::MIN_ROWS {
            return Err(Error::Config(format!(
                "bcx.rows must be at least {}",
                crate::bcx::MIN_ROWS
            )));
        }
        scenario.profile(self)?;
        Ok(scenario)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunRecord {
    pub index: usize,
    pub seed: u64,
    pub attempts: u64,
    pub outcome: Outcome,
    pub observations: BTreeMap<String, f64>,
}

#[derive(Debug, Clone)]
pub struct BatchResult {
    pub stats: BatchStats,
    pub records: Vec<RunRecord>,
    pub curiosity: Vec<CuriosityRecord>,
    /// SHA-256 over every transcript's JSON, in run order.
    pub transcript_digest: String,
}

impl BatchResult {
    /// Observation values of one metric, in run order.
    pub fn observations(&self, name: &str) -> Vec<f64> {
        self.records
            .iter()
            .filter_map(|r| r.observations.get(name).copied())
            .collect()
    }

    pub fn violations(&self) -> Result<Vec<String>> {
        Ok(self
            .stats
            .scenario
            .parse::<Scenario>()?
            .violations(&self.stats))
    }
}

pub fn run_scenario(config: &ScenarioConfig) -> Result<BatchResult> {
    run_scenario_with(config, |_| Ok(()))
}

/// Runs the batch, handing each finished transcript to `sink`.
pub fn run_scenario_with(
    config: &ScenarioConfig,
    mut sink: impl FnMut(&Transcript) -> Result<()>,
) -> Result<BatchResult> {
    let scenario = config.validate()?;
    let mut ctx = scenarios::RunContext::default();
    let mut stats = BatchStats::new(scenario.name(), config.seed);
    let mut samples: BTreeMap<String, Vec<f64>> = BTreeMap::new();
    let mut records = Vec::with_capacity(config.runs);
    let mut curiosity = Vec::new();
    let mut digest = Sha256::new();

    for index in 0..config.runs {
        let run_seed = derive_seed(config.seed, index as u64);
        let mut attempt = 0;
        let (outcome, transcript) = loop {
            let seed = if attempt == 0 {
                run_seed
            } else {
                derive_seed(run_seed, attempt)
            };
            let mut session = Session::new(scenario.name(), seed);
            session.net.set_reveal_private(config.reveal_private);
            let out = scenarios::run_once(scenario, &mut session, config, &mut ctx)?;
            attempt += 1;
            let aborted = matches!(out.verdict.outcome, Outcome::Aborted(_));
            if aborted && scenario.reruns_aborts() && attempt < MAX_ATTEMPTS {
                continue;
            }
            let t = session.finish(&out.verdict);
            break (out, t);
        };
        digest.update(
            serde_json::to_vec(&transcript)
                .map_err(|e| Error::MalformedTranscript(e.to_string()))?,
        );
        sink(&transcript)?;

        let label = outcome.verdict.outcome.label();
        *stats.verdicts.entry(label).or_default() += 1;
        for (name, v) in &outcome.observations {
            samples.entry(name.clone()).or_default().push(*v);
        }
        curiosity.extend(outcome.curiosity);
        records.push(RunRecord {
            index,
            seed: run_seed,
            attempts: attempt,
            outcome: outcome.verdict.outcome,
            observations: outcome.observations.into_iter().collect(),
        });
    }
    stats.runs = config.runs;
    stats.metrics = samples
        .iter()
        .map(|(k, xs)| (k.clone(), Estimate::from_samples(xs)))
        .collect();
    stats.check_counts()?;
    Ok(BatchResult {
        stats,
        records,
        curiosity,
        transcript_digest: hex::encode(digest.finalize()),
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn params_override_defaults() {
        let mut c = ScenarioConfig::default();
        c.set_param("commit.n=16").unwrap();
        c.set_param("code.sigma=1/8").unwrap();
        c.set_param("code.family=rm(1,4)").unwrap();
        assert_eq!(c.commit.n, 16);
        assert_eq!(c.gcot.code.sigma, 0.125);
        assert_eq!(c.gcot.code.m, 16);
        assert!(c.set_param("nonsense=1").is_err());
        assert!(c.set_param("commit.n").is_err());
    }

    #[test]
    fn config_file_fills_defaults() {
        let c = ScenarioConfig::from_json(r#"{"scenario":"ot-honest","seed":3,"runs":5}"#).unwrap();
        assert_eq!(c.validate().unwrap(), Scenario::OtHonest);
        assert_eq!(c.ot, OtParams::default());
        let bad = ScenarioConfig::from_json(r#"{"scenario":"nope"}"#).unwrap();
        assert!(matches!(bad.validate(), Err(Error::UnknownScenario(_))));
    }

    #[test]
    fn batches_are_reproducible() {
        let cfg = ScenarioConfig::new(Scenario::CommitHonest, 7, 5);
        let a = run_scenario(&cfg).unwrap();
        let b = run_scenario(&cfg).unwrap();
        assert_eq!(a.stats.to_csv().unwrap(), b.stats.to_csv().unwrap());
        assert_eq!(a.transcript_digest, b.transcript_digest);
        assert_eq!(a.stats.count("Accepted"), 5);
        assert!(a.violations().unwrap().is_empty());
    }

    #[test]
    fn every_scenario_runs() {
        for s in Scenario::ALL {
            let mut cfg = ScenarioConfig::new(s, 1, 2);
            cfg.gcot.l = 4;
            let r = run_scenario(&cfg).unwrap();
            assert_eq!(r.stats.runs, 2, "{s}");
        }
    }
}
