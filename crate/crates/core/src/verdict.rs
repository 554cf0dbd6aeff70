use std::fmt;

use serde::{Deserialize, Serialize};

use crate::netsim::PlayerId;

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "kind", content = "detail", rename_all = "kebab-case")]
pub enum Outcome {
    Accepted,
    Rejected,
    CheaterIdentified(PlayerId),
    Aborted(String),
}

impl Outcome {
    pub fn label(&self) -> String {
        match self {
            Outcome::Accepted => "Accepted".into(),
            Outcome::Rejected => "Rejected".into(),
            Outcome::CheaterIdentified(p) => format!("CheaterIdentified({p})"),
            Outcome::Aborted(why) => format!("Aborted({why})"),
        }
    }
}

impl fmt::Display for Outcome {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.label())
    }
}

/// Which consistency check produced a piece of evidence.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum CheckClass {
    /// Relay's own decoys against the receiver's published records.
    DecoyVsRelay,
    /// Committer's forwarded qubits against the receiver's published records.
    ForwardedVsCommitter,
    /// Committer's opening against the relay's retained measurements.
    RetainedVsOpening,
    /// Committer's opening against the receiver's published records.
    PublishedVsOpening,
    /// Committer's opening against the receiver's private records.
    ReceiverRecordsVsOpening,
    /// Bases declared at unveil against those opened to the relay.
    BasisReopen,
    /// A complaint that every accused party could refute.
    ComplaintRefuted,
    /// Cut-and-choose check of an OT receiver's measurement commitments.
    OtMeasurementCheck,
    /// A zero-knowledge linear proof.
    LinearProof,
    /// Codeword openings against values received through OT.
    CodewordConsistency,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Evidence {
    pub class: CheckClass,
    pub checked: usize,
    pub mismatches: usize,
    /// Largest per-round mismatch fraction seen in this class.
    pub worst_fraction: f64,
}

impl Evidence {
    pub fn exceeds(&self, tau: f64) -> bool {
        self.worst_fraction > tau
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Verdict {
    pub outcome: Outcome,
    pub evidence: Vec<Evidence>,
    /// Set when the observed pattern is only explicable by a collusion the
    /// adversary model excludes.
    #[serde(default)]
    pub collusion_flag: bool,
}

impl Verdict {
    pub fn accepted(evidence: Vec<Evidence>) -> Self {
        Self {
            outcome: Outcome::Accepted,
            evidence,
            collusion_flag: false,
        }
    }

    pub fn new(outcome: Outcome, evidence: Vec<Evidence>) -> Self {
        Self {
            outcome,
            evidence,
            collusion_flag: false,
        }
    }

    pub fn aborted(reason: impl Into<String>) -> Self {
        Self::new(Outcome::Aborted(reason.into()), Vec::new())
    }

    pub fn is_accepted(&self) -> bool {
        self.outcome == Outcome::Accepted
    }

    pub fn identified(&self) -> Option<PlayerId> {
        match self.outcome {
            Outcome::CheaterIdentified(p) => Some(p),
            _ => None,
        }
    }
}
