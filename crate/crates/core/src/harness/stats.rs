//! Batch aggregation: verdict counts and per-metric estimates with 95%
//! intervals (Wilson for proportions, normal for means).

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};
use statrs::distribution::{ContinuousCDF, Normal};

use crate::error::{Error, Result};

pub const CSV_HEADER: [&str; 9] = [
    "scenario", "seed", "runs", "verdict", "count", "metric", "value", "ci_low", "ci_high",
];

fn z95() -> f64 {
    Normal::standard().inverse_cdf(0.975)
}

/// Wilson score interval for `successes` out of `n`.
pub fn wilson(successes: usize, n: usize) -> (f64, f64) {
    if n == 0 {
        return (0.0, 1.0);
    }
    let z = z95();
    let n = n as f64;
    let p = successes as f64 / n;
    let denom = 1.0 + z * z / n;
    let centre = (p + z * z / (2.0 * n)) / denom;
    let half = z * (p * (1.0 - p) / n + z * z / (4.0 * n * n)).sqrt() / denom;
    ((centre - half).max(0.0), (centre + half).min(1.0))
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Estimate {
    pub n: usize,
    pub value: f64,
    pub ci_low: f64,
    pub ci_high: f64,
}

impl Estimate {
    pub fn from_samples(xs: &[f64]) -> Self {
        let n = xs.len();
        if n == 0 {
            return Self {
                n,
                value: f64::NAN,
                ci_low: f64::NAN,
                ci_high: f64::NAN,
            };
        }
        if xs.iter().all(|&x| x == 0.0 || x == 1.0) {
            let k = xs.iter().filter(|&&x| x == 1.0).count();
            let (lo, hi) = wilson(k, n);
            return Self {
                n,
                value: k as f64 / n as f64,
                ci_low: lo,
                ci_high: hi,
            };
        }
        let mean = xs.iter().sum::<f64>() / n as f64;
        let var = if n > 1 {
            xs.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / (n - 1) as f64
        } else {
            0.0
        };
        let half = z95() * (var / n as f64).sqrt();
        Self {
            n,
            value: mean,
            ci_low: mean - half,
            ci_high: mean + half,
        }
    }

    /// Whether `target` is within `tol` of the interval.
    pub fn near(&self, target: f64, tol: f64) -> bool {
        target >= self.ci_low - tol && target <= self.ci_high + tol
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BatchStats {
    pub scenario: String,
    pub seed: u64,
    pub runs: usize,
    pub verdicts: BTreeMap<String, usize>,
    pub metrics: BTreeMap<String, Estimate>,
}

impl BatchStats {
    pub fn new(scenario: &str, seed: u64) -> Self {
        Self {
            scenario: scenario.to_string(),
            seed,
            runs: 0,
            verdicts: BTreeMap::new(),
            metrics: BTreeMap::new(),
        }
    }

    pub fn count(&self, verdict: &str) -> usize {
        self.verdicts.get(verdict).copied().unwrap_or(0)
    }

    pub fn metric(&self, name: &str) -> Option<&Estimate> {
        self.metrics.get(name)
    }

    pub fn check_counts(&self) -> Result<()> {
        let total: usize = self.verdicts.values().sum();
        if total != self.runs {
            return Err(Error::Statistics(format!(
                "verdict counts sum to {total}, expected {}",
                self.runs
            )));
        }
        Ok(())
    }

    pub fn to_csv(&self) -> Result<String> {
        let mut w = csv::Writer::from_writer(Vec::new());
        let io = |e: csv::Error| Error::Resource(e.to_string());
        w.write_record(CSV_HEADER).map_err(io)?;
        let (seed, runs) = (self.seed.to_string(), self.runs.to_string());
        for (verdict, count) in &self.verdicts {
            w.write_record([
                &self.scenario,
                &seed,
                &runs,
                verdict,
                &count.to_string(),
                "",
                "",
                "",
                "",
            ])
            .map_err(io)?;
        }
        for (name, e) in &self.metrics {
            w.write_record([
                self.scenario.as_str(),
                &seed,
                &runs,
                "",
                &e.n.to_string(),
                name,
                &format!("{:.6}", e.value),
                &format!("{:.6}", e.ci_low),
                &format!("{:.6}", e.ci_high),
            ])
            .map_err(io)?;
        }
        let bytes = w.into_inner().map_err(|e| Error::Resource(e.to_string()))?;
        String::from_utf8(bytes).map_err(|e| Error::Resource(e.to_string()))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn wilson_matches_reference_values() {
        // 8 of 10: (0.4902, 0.9433) to four places
        let (lo, hi) = wilson(8, 10);
        assert!(
            (lo - 0.4902).abs() < 1e-4 && (hi - 0.9433).abs() < 1e-4,
            "{lo} {hi}"
        );
        let (lo, hi) = wilson(0, 50);
        assert_eq!(lo, 0.0);
        assert!(hi > 0.0 && hi < 0.1);
    }

    #[test]
    fn estimates_pick_the_interval_kind() {
        let p = Estimate::from_samples(&[1.0, 0.0, 1.0, 1.0]);
        assert_eq!(p.value, 0.75);
        assert!(p.ci_low > 0.0 && p.ci_high <= 1.0);
        let m = Estimate::from_samples(&[2.0, 4.0, 6.0]);
        assert_eq!(m.value, 4.0);
        assert!(m.ci_low < 4.0 && m.ci_high > 4.0);
    }

    #[test]
    fn csv_has_the_fixed_header() {
        let mut s = BatchStats::new("x", 7);
        s.runs = 2;
        s.verdicts.insert("Accepted".into(), 2);
        s.metrics
            .insert("m".into(), Estimate::from_samples(&[1.0, 1.0]));
        let csv = s.to_csv().unwrap();
        let mut lines = csv.lines();
        assert_eq!(
            lines.next(),
            Some("scenario,seed,runs,verdict,count,metric,value,ci_low,ci_high")
        );
        assert_eq!(lines.next(), Some("x,7,2,Accepted,2,,,,"));
        assert!(lines.next().unwrap().starts_with("x,7,2,,2,m,1.000000,"));
        s.check_counts().unwrap();
    }
}
