//! What honest-but-curious parties can infer about secrets they should not
//! learn, measured by scripted maximum-likelihood distinguishers.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use super::stats::wilson;
use crate::error::{Error, Result};
use crate::netsim::PlayerId;

pub const MIN_AUDIT_RUNS: usize = 500;

/// One party's guess of one secret in one run.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct CuriosityRecord {
    pub party: PlayerId,
    pub secret: String,
    pub truth: bool,
    pub guess: bool,
}

impl CuriosityRecord {
    pub fn new(party: PlayerId, secret: &str, truth: bool, guess: bool) -> Self {
        Self {
            party,
            secret: secret.to_string(),
            truth,
            guess,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PartyEstimate {
    pub party: PlayerId,
    pub secret: String,
    pub runs: usize,
    pub accuracy: f64,
    pub ci_low: f64,
    pub ci_high: f64,
}

/// Guess accuracy per (party, secret). Every group needs at least
/// [`MIN_AUDIT_RUNS`] runs.
pub fn curiosity_audit(records: &[CuriosityRecord]) -> Result<Vec<PartyEstimate>> {
    let mut groups: BTreeMap<(PlayerId, &str), (usize, usize)> = BTreeMap::new();
    for r in records {
        let g = groups.entry((r.party, r.secret.as_str())).or_default();
        g.0 += 1;
        g.1 += usize::from(r.truth == r.guess);
    }
    if groups.is_empty() {
        return Err(Error::Statistics("curiosity audit: no records".into()));
    }
    groups
        .into_iter()
        .map(|((party, secret), (runs, right))| {
            if runs < MIN_AUDIT_RUNS {
                return Err(Error::Statistics(format!(
                    "curiosity audit: {runs} runs for {party} on {secret}, need {MIN_AUDIT_RUNS}"
                )));
            }
            let (lo, hi) = wilson(right, runs);
            Ok(PartyEstimate {
                party,
                secret: secret.to_string(),
                runs,
                accuracy: right as f64 / runs as f64,
                ci_low: lo,
                ci_high: hi,
            })
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn too_few_runs_is_a_statistics_error() {
        let recs: Vec<_> = (0..10)
            .map(|i| CuriosityRecord::new(PlayerId::Bob, "b", i % 2 == 0, true))
            .collect();
        assert!(matches!(curiosity_audit(&recs), Err(Error::Statistics(_))));
        assert!(matches!(curiosity_audit(&[]), Err(Error::Statistics(_))));
    }

    #[test]
    fn groups_by_party_and_secret() {
        let mut recs = Vec::new();
        for i in 0..600 {
            recs.push(CuriosityRecord::new(
                PlayerId::Alice,
                "b",
                i % 2 == 0,
                i % 2 == 0,
            ));
            recs.push(CuriosityRecord::new(
                PlayerId::Bob,
                "b",
                i % 2 == 0,
                i % 3 == 0,
            ));
        }
        let est = curiosity_audit(&recs).unwrap();
        assert_eq!(est.len(), 2);
        assert_eq!(est[0].party, PlayerId::Alice);
        assert_eq!(est[0].accuracy, 1.0);
        assert!(est[1].accuracy < 0.7);
    }
}
