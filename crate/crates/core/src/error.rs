use thiserror::Error;

/// Faults that mean the simulator itself was driven incorrectly.
///
/// These never encode a protocol outcome; a run that hits one is halted.
#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum IntegrityFault {
    #[error("qubit at position {index} was already consumed")]
    DoubleMeasurement { index: usize },
    #[error("forwarding plan inconsistent with inputs: {0}")]
    InconsistentPlan(String),
    #[error("no privacy amplification function found after {attempts} resamples")]
    NoAmplificationFunction { attempts: usize },
    #[error("invariant violated: {0}")]
    Invariant(String),
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum Error {
    #[error("simulator integrity fault: {0}")]
    Integrity(#[from] IntegrityFault),
    #[error("malformed transcript: {0}")]
    MalformedTranscript(String),
    #[error("malformed message: {0}")]
    MalformedMessage(String),
    #[error("missing message for {receiver} with tag {tag}")]
    MissingMessage { receiver: String, tag: String },
    #[error("configuration error: {0}")]
    Config(String),
    #[error("state error: {0}")]
    State(String),
    #[error("resource error: {0}")]
    Resource(String),
    #[error("statistics error: {0}")]
    Statistics(String),
    #[error("unknown player: {0}")]
    UnknownPlayer(String),
    #[error("empty input: {0}")]
    EmptyInput(&'static str),
    #[error("run exceeded the cap of {cap} rounds")]
    NonTermination { cap: u64 },
    #[error("unknown scenario: {0}")]
    UnknownScenario(String),
}

pub type Result<T, E = Error> = std::result::Result<T, E>;
