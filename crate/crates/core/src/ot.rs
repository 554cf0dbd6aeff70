//! Oblivious transfer from conjugate coding with committed measurements.
//!
//! The sender transmits `k` random BB84 qubits. The receiver measures each in
//! a random basis and commits to every `(basis, outcome)` pair. The sender
//! opens a random quarter of those commitments and checks them against what
//! it sent, then announces its bases. The receiver now knows which of the
//! remaining positions he measured correctly and hands the sender two
//! equal-sized index sets, the correctly measured ones keyed by his choice
//! `c`. The sender masks `b_0` and `b_1` with the XOR of its bits over the
//! respective sets.
//!
//! The commitments only need to bind until the check: once measured, a qubit
//! cannot be re-measured in the announced basis, so pooling views after the
//! session ends gains nothing.

use rand::seq::{index, SliceRandom};
use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::bcx::{BcxId, BcxStore};
use crate::error::{Error, Result};
use crate::netsim::PlayerId;
use crate::qsim::{measure, prepare_random, Basis, Qubit};
use crate::session::Session;
use crate::strategy::{Behavior, StrategyProfile};
use crate::verdict::{CheckClass, Evidence, Outcome, Verdict};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct OtParams {
    pub k: usize,
    pub check_fraction: f64,
    pub tau: f64,
    pub commit_rows: usize,
    pub max_restarts: usize,
}

impl Default for OtParams {
    fn default() -> Self {
        Self {
            k: 64,
            check_fraction: 0.25,
            tau: 0.05,
            commit_rows: 8,
            max_restarts: 16,
        }
    }
}

impl OtParams {
    pub fn validate(&self) -> Result<()> {
        if self.k < 8 || !self.k.is_multiple_of(2) {
            return Err(Error::Config("ot: k must be even and at least 8".into()));
        }
        if !(self.check_fraction > 0.0 && self.check_fraction <= 0.5) {
            return Err(Error::Config(
                "ot: check fraction must lie in (0, 1/2]".into(),
            ));
        }
        if !(self.tau > 0.0 && self.tau < 0.25) {
            return Err(Error::Config("ot: tau must lie in (0, 0.25)".into()));
        }
        Ok(())
    }

    pub fn check_count(&self) -> usize {
        ((self.k as f64 * self.check_fraction).round() as usize).max(1)
    }

    /// Smallest acceptable mask set.
    pub fn min_set(&self) -> usize {
        (self.k / 8).max(1)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Route {
    Direct,
    /// Qubits and messages pass through Helen, who appears as the sender.
    ViaHelen,
}

/// How long the receiver's measurement commitments stay binding.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
pub enum BindingHorizon {
    /// Binding through the check stage.
    #[default]
    UntilCheck,
    /// Broken before the check, so unmeasured positions can be opened to
    /// whatever a late measurement yields.
    Broken,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct OtEndpoints {
    pub sender: PlayerId,
    pub receiver: PlayerId,
    pub route: Route,
}

impl OtEndpoints {
    pub fn direct(sender: PlayerId, receiver: PlayerId) -> Self {
        Self {
            sender,
            receiver,
            route: Route::Direct,
        }
    }

    /// The party the receiver sees on the other end.
    pub fn visible_sender(&self) -> PlayerId {
        match self.route {
            Route::Direct => self.sender,
            Route::ViaHelen => PlayerId::Helen,
        }
    }

    fn validate(&self) -> Result<()> {
        if self.sender == self.receiver {
            return Err(Error::Config("ot: sender and receiver coincide".into()));
        }
        if self.route == Route::ViaHelen
            && (self.sender == PlayerId::Helen || self.receiver == PlayerId::Helen)
        {
            return Err(Error::Config(
                "ot: routing via Helen needs Helen as a third party".into(),
            ));
        }
        Ok(())
    }
}

/// Everything about one completed transfer, for audits.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OtRecord {
    pub endpoints_sender: PlayerId,
    pub endpoints_receiver: PlayerId,
    pub inputs: [bool; 2],
    pub choice: bool,
    pub sender_bits: Vec<bool>,
    pub sender_bases: Vec<Basis>,
    pub receiver_bases: Vec<Basis>,
    pub receiver_outcomes: Vec<bool>,
    /// Positions still unmeasured when the bases were announced.
    pub unmeasured_at_announcement: Vec<usize>,
    pub checked: Vec<usize>,
    pub sets: [Vec<usize>; 2],
    pub masked: [bool; 2],
    pub restarts: usize,
}

impl OtRecord {
    /// Receiver's best guess of the input he did not choose.
    pub fn receiver_guess_other(&self) -> bool {
        let other = usize::from(!self.choice);
        self.sets[other]
            .iter()
            .fold(self.masked[other], |a, &i| a ^ self.receiver_outcomes[i])
    }

    /// Sender's guess of the choice bit from its own view: the set holding
    /// the smallest index.
    pub fn sender_guess_choice(&self) -> bool {
        self.sets[1].first() < self.sets[0].first()
    }

    /// Whether the receiver could compute the other input exactly.
    pub fn other_input_exposed(&self) -> bool {
        let other = usize::from(!self.choice);
        self.sets[other]
            .iter()
            .all(|&i| self.receiver_bases[i] == self.sender_bases[i])
    }
}

#[derive(Debug, Clone)]
pub struct OtOutcome {
    pub output: Option<bool>,
    pub verdict: Verdict,
    pub record: Option<OtRecord>,
}

/// Post-termination pooling: can `pool` learn the sender's unchosen input?
/// Only possible if the receiver is in the pool and held every qubit of the
/// unchosen set unmeasured until the bases were announced.
pub fn ot_becomes_tilde_robust_check(record: &OtRecord, pool: &[PlayerId]) -> bool {
    pool.contains(&record.endpoints_receiver) && record.other_input_exposed()
}

/// The pool's guess of the unchosen input.
pub fn pooled_guess(record: &OtRecord, pool: &[PlayerId]) -> bool {
    if ot_becomes_tilde_robust_check(record, pool) {
        record.inputs[usize::from(!record.choice)]
    } else {
        record.receiver_guess_other()
    }
}

fn basis_bit(b: Basis) -> bool {
    b == Basis::Cross
}

fn basis_from_bit(x: bool) -> Basis {
    if x {
        Basis::Cross
    } else {
        Basis::Plus
    }
}

/// Routes a classical message from one endpoint to the other.
fn pass<T: Serialize + serde::de::DeserializeOwned>(
    session: &mut Session,
    ends: &OtEndpoints,
    from: PlayerId,
    tag: &str,
    value: &T,
) -> Result<T> {
    let to = if from == ends.sender {
        ends.receiver
    } else {
        ends.sender
    };
    match ends.route {
        Route::Direct => session.net.exchange(from, to, tag, value),
        Route::ViaHelen => session.net.relay(from, PlayerId::Helen, to, tag, value),
    }
}

fn identify(
    receiver: PlayerId,
    class: CheckClass,
    checked: usize,
    mism: usize,
    frac: f64,
) -> OtOutcome {
    OtOutcome {
        output: None,
        verdict: Verdict::new(
            Outcome::CheaterIdentified(receiver),
            vec![Evidence {
                class,
                checked,
                mismatches: mism,
                worst_fraction: frac,
            }],
        ),
        record: None,
    }
}

#[allow(clippy::too_many_arguments)]
pub fn ot_transfer(
    session: &mut Session,
    inputs: [bool; 2],
    choice: bool,
    params: &OtParams,
    ends: OtEndpoints,
    profile: &StrategyProfile,
    horizon: BindingHorizon,
) -> Result<OtOutcome> {
    params.validate()?;
    ends.validate()?;
    let OtEndpoints {
        sender: s,
        receiver: r,
        ..
    } = ends;
    let k = params.k;
    let deferred_count = match profile.behavior(r) {
        Behavior::LazyReceiver { deferred } => deferred.min(k),
        _ => 0,
    };

    for restarts in 0..=params.max_restarts {
        // 1. qubits
        let mut sender_bits = Vec::with_capacity(k);
        let mut sender_bases = Vec::with_capacity(k);
        let mut qubits = Vec::with_capacity(k);
        for _ in 0..k {
            let (q, bit, basis) = prepare_random(session.rng(s));
            qubits.push(q);
            sender_bits.push(bit);
            sender_bases.push(basis);
        }
        let held = match ends.route {
            Route::Direct => {
                session.net.send_private(
                    s,
                    r,
                    "ot-qubits",
                    crate::netsim::Payload::Quantum(qubits),
                )?;
                session.net.recv_qubits(r, "ot-qubits")?
            }
            Route::ViaHelen => {
                session
                    .net
                    .relay_qubits(s, PlayerId::Helen, r, "ot-qubits", qubits)?
            }
        };
        if held.len() != k {
            return Err(Error::MalformedMessage("ot-qubits: wrong count".into()));
        }

        // 2. receiver measures (or stores) and commits to (basis, outcome)
        let deferred: Vec<usize> = {
            let mut v = index::sample(session.rng(r), k, deferred_count).into_vec();
            v.sort_unstable();
            v
        };
        let mut stored: Vec<Option<Qubit>> = Vec::with_capacity(k);
        let mut rec_bases = Vec::with_capacity(k);
        let mut rec_outcomes = Vec::with_capacity(k);
        for (i, q) in held.into_iter().enumerate() {
            let basis = Basis::random(session.rng(r));
            if deferred.binary_search(&i).is_ok() {
                // committed guess
                rec_bases.push(basis);
                rec_outcomes.push(session.rng(r).random::<bool>());
                stored.push(Some(q));
            } else {
                rec_outcomes.push(measure(q, basis, session.rng(r)));
                rec_bases.push(basis);
                stored.push(None);
            }
        }
        let mut store = BcxStore::default();
        let verifier = ends.visible_sender();
        let committed: Vec<bool> = rec_bases
            .iter()
            .zip(&rec_outcomes)
            .flat_map(|(&b, &o)| [basis_bit(b), o])
            .collect();
        let ids = store.commit_batch(session, r, verifier, &committed, params.commit_rows)?;

        // 3. cut-and-choose check
        let check: Vec<usize> = {
            let mut v = index::sample(session.rng(s), k, params.check_count()).into_vec();
            v.sort_unstable();
            v
        };
        let check: Vec<usize> = pass(session, &ends, s, "ot-check", &check)?;
        if horizon == BindingHorizon::Broken {
            // Unbound commitments: measure stored checked qubits now and
            // open to the result.
            for &i in &check {
                if let Some(q) = stored[i].take() {
                    rec_outcomes[i] = measure(q, rec_bases[i], session.rng(r));
                }
            }
        }
        let open_ids: Vec<BcxId> = check
            .iter()
            .flat_map(|&i| [ids[2 * i], ids[2 * i + 1]])
            .collect();
        let opened = if horizon == BindingHorizon::Broken {
            let values: Vec<bool> = check
                .iter()
                .flat_map(|&i| [basis_bit(rec_bases[i]), rec_outcomes[i]])
                .collect();
            session.net.broadcast_json(
                r,
                "bcx-open",
                &serde_json::json!({ "ids": open_ids, "bits": values }),
            )?;
            Some(values)
        } else {
            store.unveil_batch(session, &open_ids)?.0
        };
        let Some(opened) = opened else {
            return Ok(identify(
                r,
                CheckClass::OtMeasurementCheck,
                check.len(),
                check.len(),
                1.0,
            ));
        };
        let mut matched = 0;
        let mut mism = 0;
        for (j, &i) in check.iter().enumerate() {
            if basis_from_bit(opened[2 * j]) == sender_bases[i] {
                matched += 1;
                if opened[2 * j + 1] != sender_bits[i] {
                    mism += 1;
                }
            }
        }
        let frac = if matched == 0 {
            0.0
        } else {
            mism as f64 / matched as f64
        };
        if frac > params.tau {
            session
                .net
                .complain(s, r, "measurement commitments contradict sent qubits")?;
            return Ok(identify(
                r,
                CheckClass::OtMeasurementCheck,
                matched,
                mism,
                frac,
            ));
        }

        // 4. bases announced; receiver measures whatever it still holds
        let remaining: Vec<usize> = (0..k).filter(|i| check.binary_search(i).is_err()).collect();
        let announced: Vec<Basis> = remaining.iter().map(|&i| sender_bases[i]).collect();
        let announced: Vec<Basis> = pass(session, &ends, s, "ot-bases", &announced)?;
        let unmeasured: Vec<usize> = remaining
            .iter()
            .copied()
            .filter(|&i| stored[i].is_some())
            .collect();
        for (&i, &basis) in remaining.iter().zip(&announced) {
            if let Some(q) = stored[i].take() {
                rec_bases[i] = basis;
                rec_outcomes[i] = measure(q, basis, session.rng(r));
            }
        }
        let good: Vec<usize> = remaining
            .iter()
            .zip(&announced)
            .filter(|&(&i, &basis)| rec_bases[i] == basis)
            .map(|(&i, _)| i)
            .collect();
        let bad: Vec<usize> = remaining
            .iter()
            .copied()
            .filter(|i| !good.contains(i))
            .collect();

        let sets = if unmeasured.is_empty() {
            let t = good.len().min(bad.len());
            (t >= params.min_set()).then(|| {
                let rng = session.rng(r);
                let mut g = good.clone();
                let mut b = bad.clone();
                g.shuffle(rng);
                b.shuffle(rng);
                let mut g: Vec<usize> = g.into_iter().take(t).collect();
                let mut b: Vec<usize> = b.into_iter().take(t).collect();
                g.sort_unstable();
                b.sort_unstable();
                (g, b)
            })
        } else {
            // A receiver holding extra knowledge fills the unchosen set with
            // known positions first.
            let t = good.len().min(remaining.len() / 2);
            (t >= params.min_set()).then(|| {
                let mut chosen: Vec<usize> = good[..t].to_vec();
                let mut other: Vec<usize> = good[t..].iter().chain(&bad).copied().take(t).collect();
                chosen.sort_unstable();
                other.sort_unstable();
                (chosen, other)
            })
        };
        let Some((chosen, other)) = sets else {
            pass(session, &ends, r, "ot-restart", &restarts)?;
            continue;
        };
        let sets = if choice {
            [other, chosen]
        } else {
            [chosen, other]
        };
        let sets: [Vec<usize>; 2] = pass(session, &ends, r, "ot-sets", &sets)?;
        let valid = sets[0].len() == sets[1].len()
            && sets[0].len() >= params.min_set()
            && sets[0].iter().all(|i| !sets[1].contains(i))
            && sets
                .iter()
                .flatten()
                .all(|i| remaining.binary_search(i).is_ok());
        if !valid {
            session.net.complain(s, r, "malformed index sets")?;
            return Ok(identify(r, CheckClass::OtMeasurementCheck, 1, 1, 1.0));
        }

        // 5. masked inputs
        let mask = |set: &[usize]| set.iter().fold(false, |a, &i| a ^ sender_bits[i]);
        let masked = [inputs[0] ^ mask(&sets[0]), inputs[1] ^ mask(&sets[1])];
        let masked: [bool; 2] = pass(session, &ends, s, "ot-masked", &masked)?;
        let c = usize::from(choice);
        let output = sets[c].iter().fold(masked[c], |a, &i| a ^ rec_outcomes[i]);

        let record = OtRecord {
            endpoints_sender: s,
            endpoints_receiver: r,
            inputs,
            choice,
            sender_bits,
            sender_bases,
            receiver_bases: rec_bases,
            receiver_outcomes: rec_outcomes,
            unmeasured_at_announcement: unmeasured,
            checked: check,
            sets,
            masked,
            restarts,
        };
        return Ok(OtOutcome {
            output: Some(output),
            verdict: Verdict::accepted(vec![Evidence {
                class: CheckClass::OtMeasurementCheck,
                checked: matched,
                mismatches: mism,
                worst_fraction: frac,
            }]),
            record: Some(record),
        });
    }
    Ok(OtOutcome {
        output: None,
        verdict: Verdict::aborted("lopsided partition"),
        record: None,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn honest(seed: u64, inputs: [bool; 2], c: bool, ends: OtEndpoints) -> OtOutcome {
        let mut s = Session::new("ot-test", seed);
        ot_transfer(
            &mut s,
            inputs,
            c,
            &OtParams::default(),
            ends,
            &StrategyProfile::honest(),
            BindingHorizon::UntilCheck,
        )
        .unwrap()
    }

    #[test]
    fn honest_transfer_returns_chosen_input() {
        let out = honest(
            1,
            [false, true],
            true,
            OtEndpoints::direct(PlayerId::Helen, PlayerId::Bob),
        );
        assert_eq!(out.output, Some(true));
        assert!(out.verdict.is_accepted());
    }

    #[test]
    fn honest_transfer_all_combinations_via_helen() {
        let ends = OtEndpoints {
            sender: PlayerId::Alice,
            receiver: PlayerId::Bob,
            route: Route::ViaHelen,
        };
        for (seed, (b0, b1, c)) in [false, true]
            .iter()
            .flat_map(|&b0| [false, true].map(move |b1| (b0, b1)))
            .flat_map(|(b0, b1)| [false, true].map(move |c| (b0, b1, c)))
            .enumerate()
        {
            let out = honest(seed as u64, [b0, b1], c, ends);
            assert_eq!(out.output, Some(if c { b1 } else { b0 }));
        }
    }

    #[test]
    fn via_helen_hides_the_sender_from_the_receiver() {
        let mut s = Session::new("ot-test", 3);
        let ends = OtEndpoints {
            sender: PlayerId::Alice,
            receiver: PlayerId::Bob,
            route: Route::ViaHelen,
        };
        ot_transfer(
            &mut s,
            [true, false],
            false,
            &OtParams::default(),
            ends,
            &StrategyProfile::honest(),
            BindingHorizon::UntilCheck,
        )
        .unwrap();
        assert!(s
            .net
            .view(PlayerId::Bob)
            .entries
            .iter()
            .filter(|e| !e.broadcast)
            .all(|e| e.sender == PlayerId::Helen));
    }

    #[test]
    fn honest_session_exposes_nothing_after_pooling() {
        let out = honest(
            5,
            [true, true],
            false,
            OtEndpoints::direct(PlayerId::Helen, PlayerId::Bob),
        );
        let rec = out.record.unwrap();
        assert!(!ot_becomes_tilde_robust_check(
            &rec,
            &[PlayerId::Alice, PlayerId::Bob]
        ));
        assert!(rec.unmeasured_at_announcement.is_empty());
    }

    #[test]
    fn broken_binding_with_deferral_is_a_breach() {
        let mut s = Session::new("ot-test", 6);
        let profile =
            StrategyProfile::with(PlayerId::Bob, Behavior::LazyReceiver { deferred: 64 }).unwrap();
        let out = ot_transfer(
            &mut s,
            [true, false],
            true,
            &OtParams::default(),
            OtEndpoints::direct(PlayerId::Helen, PlayerId::Bob),
            &profile,
            BindingHorizon::Broken,
        )
        .unwrap();
        assert!(out.verdict.is_accepted());
        let rec = out.record.unwrap();
        assert!(ot_becomes_tilde_robust_check(
            &rec,
            &[PlayerId::Alice, PlayerId::Bob]
        ));
        assert!(pooled_guess(&rec, &[PlayerId::Alice, PlayerId::Bob]));
    }

    #[test]
    fn fully_lazy_receiver_is_caught() {
        let mut s = Session::new("ot-test", 7);
        let profile =
            StrategyProfile::with(PlayerId::Bob, Behavior::LazyReceiver { deferred: 64 }).unwrap();
        let out = ot_transfer(
            &mut s,
            [true, false],
            true,
            &OtParams::default(),
            OtEndpoints::direct(PlayerId::Helen, PlayerId::Bob),
            &profile,
            BindingHorizon::UntilCheck,
        )
        .unwrap();
        assert_eq!(out.verdict.identified(), Some(PlayerId::Bob));
    }

    #[test]
    fn params_are_validated() {
        for p in [
            OtParams {
                k: 63,
                ..Default::default()
            },
            OtParams {
                check_fraction: 0.6,
                ..Default::default()
            },
        ] {
            assert!(p.validate().is_err());
        }
        assert_eq!(OtParams::default().check_count(), 16);
    }
}
