//! Classical simulation of single BB84 qubits.
//!
//! A qubit is a conjugate-coding state: a classical bit encoded in one of two
//! mutually unbiased bases. Measuring in the preparation basis returns the
//! bit; measuring in the other basis returns a fair coin. No amplitudes are
//! tracked because every state used by the protocols is one of these four.
//!
//! [`Qubit`] is deliberately not `Clone`: measurement takes it by value, so
//! the type system enforces single use. Code that holds qubits by position
//! uses [`QubitRegister`], which reports a second measurement of the same slot
//! as an [`IntegrityFault`].
//!
//! ```compile_fail
//! use triparty::qsim::{prepare, measure, Basis};
//! let mut rng = triparty::rng::Streams::new(1);
//! let q = prepare(true, Basis::Plus);
//! let _ = measure(q, Basis::Plus, rng.env());
//! let _ = measure(q, Basis::Plus, rng.env()); // use after move
//! ```

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, IntegrityFault, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum Basis {
    /// Rectilinear.
    Plus,
    /// Diagonal.
    Cross,
}

impl Basis {
    pub fn random<R: Rng + ?Sized>(rng: &mut R) -> Self {
        if rng.random::<bool>() {
            Basis::Cross
        } else {
            Basis::Plus
        }
    }

    pub fn conjugate(self) -> Self {
        match self {
            Basis::Plus => Basis::Cross,
            Basis::Cross => Basis::Plus,
        }
    }
}

#[derive(Debug, PartialEq, Eq, Serialize)]
pub struct Qubit {
    bit: bool,
    basis: Basis,
    disturbed: bool,
}

impl Qubit {
    /// Ground-truth state, for views and audits. Protocol code must measure.
    pub fn state(&self) -> (bool, Basis) {
        (self.bit, self.basis)
    }

    pub fn is_disturbed(&self) -> bool {
        self.disturbed
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct MeasurementRecord {
    pub index: usize,
    pub basis: Basis,
    pub outcome: bool,
}

pub fn prepare(bit: bool, basis: Basis) -> Qubit {
    Qubit {
        bit,
        basis,
        disturbed: false,
    }
}

/// Prepares a qubit with a uniformly random bit in a uniformly random basis.
pub fn prepare_random<R: Rng + ?Sized>(rng: &mut R) -> (Qubit, bool, Basis) {
    let bit = rng.random::<bool>();
    let basis = Basis::random(rng);
    (prepare(bit, basis), bit, basis)
}

pub fn measure<R: Rng + ?Sized>(q: Qubit, basis: Basis, rng: &mut R) -> bool {
    if basis == q.basis {
        q.bit
    } else {
        rng.random::<bool>()
    }
}

/// Measures `q` in `basis` and re-prepares the observed outcome in that basis.
pub fn intercept_resend<R: Rng + ?Sized>(q: Qubit, basis: Basis, rng: &mut R) -> Qubit {
    let disturbed = q.disturbed || basis != q.basis;
    let outcome = measure(q, basis, rng);
    Qubit {
        bit: outcome,
        basis,
        disturbed,
    }
}

/// Positions where the receiver measured in the sender's basis but saw a
/// different bit. Mismatched-basis positions carry no information and are
/// skipped.
pub fn sift(sent: &[(bool, Basis)], received: &[MeasurementRecord]) -> Result<Vec<usize>> {
    if sent.len() != received.len() {
        return Err(Error::MalformedTranscript(format!(
            "sift: {} sent states but {} measurement records",
            sent.len(),
            received.len()
        )));
    }
    Ok(sent
        .iter()
        .zip(received)
        .enumerate()
        .filter(|(_, ((bit, basis), rec))| rec.basis == *basis && rec.outcome != *bit)
        .map(|(i, _)| i)
        .collect())
}

/// Positionally addressed qubits with consumption tracking.
#[derive(Debug, Default)]
pub struct QubitRegister {
    slots: Vec<Option<Qubit>>,
}

impl QubitRegister {
    pub fn new(qubits: Vec<Qubit>) -> Self {
        Self {
            slots: qubits.into_iter().map(Some).collect(),
        }
    }

    pub fn len(&self) -> usize {
        self.slots.len()
    }

    pub fn is_empty(&self) -> bool {
        self.slots.is_empty()
    }

    pub fn is_live(&self, index: usize) -> bool {
        matches!(self.slots.get(index), Some(Some(_)))
    }

    pub fn take(&mut self, index: usize) -> Result<Qubit> {
        self.slots
            .get_mut(index)
            .and_then(Option::take)
            .ok_or_else(|| IntegrityFault::DoubleMeasurement { index }.into())
    }

    pub fn measure_at<R: Rng + ?Sized>(
        &mut self,
        index: usize,
        basis: Basis,
        rng: &mut R,
    ) -> Result<MeasurementRecord> {
        let q = self.take(index)?;
        Ok(MeasurementRecord {
            index,
            basis,
            outcome: measure(q, basis, rng),
        })
    }

    /// Measures every slot, each in a fresh uniform basis.
    pub fn measure_all_random<R: Rng + ?Sized>(
        &mut self,
        rng: &mut R,
    ) -> Result<Vec<MeasurementRecord>> {
        (0..self.len())
            .map(|i| {
                let basis = Basis::random(rng);
                self.measure_at(i, basis, rng)
            })
            .collect()
    }

    pub fn live_count(&self) -> usize {
        self.slots.iter().filter(|s| s.is_some()).count()
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng::Streams;

    #[test]
    fn prepare_is_definitional() {
        let q = prepare(false, Basis::Plus);
        assert_eq!(q.state(), (false, Basis::Plus));
        assert!(!q.is_disturbed());
        let q = prepare(true, Basis::Cross);
        assert_eq!(q.state(), (true, Basis::Cross));
        assert!(!q.is_disturbed());
    }

    #[test]
    fn same_seed_prepares_same_qubits() {
        let mut a = Streams::new(3);
        let mut b = Streams::new(3);
        for _ in 0..64 {
            let (qa, _, _) = prepare_random(a.env());
            let (qb, _, _) = prepare_random(b.env());
            assert_eq!(qa, qb);
        }
    }

    #[test]
    fn same_basis_measurement_is_exact() {
        let mut s = Streams::new(1);
        for bit in [false, true] {
            for basis in [Basis::Plus, Basis::Cross] {
                for _ in 0..100 {
                    assert_eq!(measure(prepare(bit, basis), basis, s.env()), bit);
                }
            }
        }
    }

    #[test]
    fn cross_basis_measurement_is_unbiased() {
        let mut s = Streams::new(2024);
        let n = 10_000;
        let ones = (0..n)
            .filter(|_| measure(prepare(false, Basis::Plus), Basis::Cross, s.env()))
            .count();
        let freq = ones as f64 / n as f64;
        assert!((freq - 0.5).abs() < 0.02, "freq {freq}");
    }

    #[test]
    fn same_basis_intercept_leaves_no_trace() {
        let mut s = Streams::new(5);
        let q = intercept_resend(prepare(false, Basis::Plus), Basis::Plus, s.env());
        assert_eq!(q, prepare(false, Basis::Plus));
    }

    #[test]
    fn cross_basis_intercept_marks_disturbance() {
        let mut s = Streams::new(5);
        let q = intercept_resend(prepare(true, Basis::Plus), Basis::Cross, s.env());
        assert!(q.is_disturbed());
        assert_eq!(q.state().1, Basis::Cross);
    }

    #[test]
    fn intercept_resend_mismatch_rate_is_a_quarter() {
        // Attacker guesses the basis uniformly; honest receiver measures in
        // the sender's basis, so every position is sifted.
        let mut s = Streams::new(77);
        let n = 10_000;
        let mut sent = Vec::with_capacity(n);
        let mut recs = Vec::with_capacity(n);
        for i in 0..n {
            let (q, bit, basis) = prepare_random(s.get(crate::rng::StreamId::Alice));
            let attack = Basis::random(s.get(crate::rng::StreamId::Helen));
            let q = intercept_resend(q, attack, s.get(crate::rng::StreamId::Helen));
            let outcome = measure(q, basis, s.get(crate::rng::StreamId::Bob));
            sent.push((bit, basis));
            recs.push(MeasurementRecord {
                index: i,
                basis,
                outcome,
            });
        }
        let rate = sift(&sent, &recs).unwrap().len() as f64 / n as f64;
        assert!((rate - 0.25).abs() < 0.03, "rate {rate}");
    }

    #[test]
    fn disturbed_qubit_remeasured_in_its_basis_mismatches_half() {
        let mut s = Streams::new(8);
        let n = 10_000;
        let mut mism = 0;
        for _ in 0..n {
            let bit = s.env().random::<bool>();
            let q = intercept_resend(prepare(bit, Basis::Plus), Basis::Cross, s.env());
            if measure(q, Basis::Cross, s.env()) != bit {
                mism += 1;
            }
        }
        let rate = mism as f64 / n as f64;
        assert!((rate - 0.5).abs() < 0.02, "rate {rate}");
    }

    #[test]
    fn sift_honest_and_single_flip() {
        let sent = vec![
            (false, Basis::Plus),
            (true, Basis::Cross),
            (true, Basis::Plus),
        ];
        let mut recs: Vec<_> = sent
            .iter()
            .enumerate()
            .map(|(i, &(bit, basis))| MeasurementRecord {
                index: i,
                basis,
                outcome: bit,
            })
            .collect();
        assert!(sift(&sent, &recs).unwrap().is_empty());
        recs[1].outcome = false;
        assert_eq!(sift(&sent, &recs).unwrap(), vec![1]);
        // a flipped bit at a mismatched basis is not checkable
        recs[2] = MeasurementRecord {
            index: 2,
            basis: Basis::Cross,
            outcome: false,
        };
        assert_eq!(sift(&sent, &recs).unwrap(), vec![1]);
    }

    #[test]
    fn sift_rejects_length_mismatch() {
        let err = sift(&[(true, Basis::Plus)], &[]).unwrap_err();
        assert!(matches!(err, Error::MalformedTranscript(_)));
    }

    #[test]
    fn register_rejects_double_measurement() {
        let mut s = Streams::new(1);
        let mut reg = QubitRegister::new(vec![prepare(true, Basis::Plus)]);
        reg.measure_at(0, Basis::Plus, s.env()).unwrap();
        let err = reg.measure_at(0, Basis::Plus, s.env()).unwrap_err();
        assert_eq!(
            err,
            Error::Integrity(IntegrityFault::DoubleMeasurement { index: 0 })
        );
    }

    #[test]
    fn intercept_through_register_consumes_original() {
        let mut s = Streams::new(1);
        let mut reg = QubitRegister::new(vec![prepare(false, Basis::Plus)]);
        let q = reg.take(0).unwrap();
        let _resent = intercept_resend(q, Basis::Cross, s.env());
        assert!(reg.take(0).is_err());
    }
}
