//! Simulator for an anonymized three-party quantum commitment stack and the
//! primitives built on it.

pub mod advstruct;
pub mod bcx;
pub mod code;
pub mod commitment;
pub mod error;
pub mod gcot;
pub mod harness;
pub mod netsim;
pub mod ot;
pub mod qsim;
pub mod rng;
pub mod session;
pub mod strategy;
pub mod verdict;

pub use error::{Error, IntegrityFault, Result};
pub use netsim::PlayerId;
pub use verdict::{Outcome, Verdict};
