//! Anonymized quantum bit commitment through a relay.
//!
//! Each of `l` rounds: the committer hands the relay `n` BB84 qubits; the
//! relay forwards a random half to the receiver interleaved with as many
//! decoys of its own and tells the committer which merged positions are hers;
//! the receiver measures everything and, on a fair coin, publishes the
//! results; the committer then opens her bases to the relay, which measures
//! the half it kept. Rounds that were not published contribute their parity
//! to the committed bit, and a final flag links that parity to `b`.
//!
//! Published rounds are cross-checked by both the committer (forwarded
//! positions) and the relay (decoys). A relay complaint identifies the
//! receiver, since he cannot tell decoys from forwarded qubits. A committer
//! complaint alone is only explicable by a relay-receiver collusion and
//! yields a flagged rejection.

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::netsim::{
    anonymized_forward, ForwardingDisclosure, ForwardingPlan, Payload, PlayerId, TAG_COLLUSION_FLAG,
};
use crate::qsim::{
    intercept_resend, prepare_random, Basis, MeasurementRecord, Qubit, QubitRegister,
};
use crate::session::Session;
use crate::strategy::{Behavior, StrategyProfile};
use crate::verdict::{CheckClass, Evidence, Outcome, Verdict};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct CommitParams {
    pub l: usize,
    pub n: usize,
    pub publish_probability: f64,
    pub tau: f64,
}

impl Default for CommitParams {
    fn default() -> Self {
        Self {
            l: 16,
            n: 32,
            publish_probability: 0.5,
            tau: 0.05,
        }
    }
}

impl CommitParams {
    pub fn validate(&self) -> Result<()> {
        if self.l < 1 {
            return Err(Error::Config("commit: l must be at least 1".into()));
        }
        if self.n < 8 {
            return Err(Error::Config("commit: n must be at least 8".into()));
        }
        if !(self.tau > 0.0 && self.tau < 0.25) {
            return Err(Error::Config("commit: tau must lie in (0, 0.25)".into()));
        }
        if !(self.publish_probability > 0.0 && self.publish_probability < 1.0) {
            return Err(Error::Config(
                "commit: publish probability must lie in (0, 1)".into(),
            ));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct Roles {
    pub committer: PlayerId,
    pub relay: PlayerId,
    pub receiver: PlayerId,
}

impl Roles {
    pub const ALICE_TO_BOB: Roles = Roles {
        committer: PlayerId::Alice,
        relay: PlayerId::Helen,
        receiver: PlayerId::Bob,
    };
    pub const BOB_TO_ALICE: Roles = Roles {
        committer: PlayerId::Bob,
        relay: PlayerId::Helen,
        receiver: PlayerId::Alice,
    };

    pub fn validate(&self) -> Result<()> {
        if self.committer == self.relay
            || self.committer == self.receiver
            || self.relay == self.receiver
        {
            return Err(Error::Config(
                "commit: roles must be distinct players".into(),
            ));
        }
        Ok(())
    }
}

pub fn parity(bits: &[bool]) -> Result<bool> {
    if bits.is_empty() {
        return Err(Error::EmptyInput("parity of an empty string"));
    }
    Ok(bits.iter().fold(false, |acc, &b| acc ^ b))
}

#[derive(Debug, Clone, Serialize, Deserialize)]
struct Publication {
    round: usize,
    published: bool,
    records: Option<Vec<MeasurementRecord>>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RoundOpening {
    pub r: Vec<bool>,
    pub s: Vec<Basis>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Opening {
    pub bit: bool,
    pub rounds: Vec<RoundOpening>,
}

#[derive(Debug, Clone)]
struct CommitterRound {
    /// `None` when the committer deliberately kept no record.
    r: Option<Vec<bool>>,
    opened: Vec<Basis>,
}

#[derive(Debug, Clone)]
struct RelayRound {
    plan: ForwardingPlan,
    opened: Vec<Basis>,
    /// Measurements of kept source positions, in the opened bases.
    retained: Vec<MeasurementRecord>,
}

#[derive(Debug, Clone)]
struct ReceiverRound {
    records: Vec<MeasurementRecord>,
}

/// Per-class mismatch accounting over rounds.
#[derive(Debug, Clone, Copy, Default)]
struct Tally {
    checked: usize,
    mismatches: usize,
    worst: f64,
}

impl Tally {
    fn add_round(&mut self, checked: usize, mismatches: usize) {
        self.checked += checked;
        self.mismatches += mismatches;
        if checked > 0 {
            self.worst = self.worst.max(mismatches as f64 / checked as f64);
        }
    }

    fn evidence(&self, class: CheckClass) -> Evidence {
        Evidence {
            class,
            checked: self.checked,
            mismatches: self.mismatches,
            worst_fraction: self.worst,
        }
    }
}

/// Compares records against claimed `(bit, basis)` at the given
/// `(merged position, source index)` pairs, counting basis-matched positions.
fn sifted_mismatches(
    records: &[MeasurementRecord],
    pairs: &[(usize, usize)],
    bits: &[bool],
    bases: &[Basis],
) -> (usize, usize) {
    let mut checked = 0;
    let mut mism = 0;
    for &(m, src) in pairs {
        let rec = records[m];
        if rec.basis == bases[src] {
            checked += 1;
            if rec.outcome != bits[src] {
                mism += 1;
            }
        }
    }
    (checked, mism)
}

/// Public read-only summary of one round, for audits and oracles.
#[derive(Debug, Clone)]
pub struct RoundAudit {
    pub published: bool,
    pub forwarded: Vec<(usize, usize)>,
    pub retained: Vec<usize>,
    pub opened_bases: Vec<Basis>,
    pub receiver_bases: Vec<Basis>,
}

#[derive(Debug, Clone)]
pub struct CommitmentHandle {
    params: CommitParams,
    roles: Roles,
    accepted: bool,
    bit: bool,
    flag: bool,
    published: Vec<Option<Vec<MeasurementRecord>>>,
    contributing: Vec<usize>,
    committer: Vec<CommitterRound>,
    relay: Vec<RelayRound>,
    receiver: Vec<ReceiverRound>,
    deferred_round: Option<usize>,
}

impl CommitmentHandle {
    pub fn is_accepted(&self) -> bool {
        self.accepted
    }

    pub fn params(&self) -> &CommitParams {
        &self.params
    }

    pub fn roles(&self) -> Roles {
        self.roles
    }

    /// The bit the committer meant to commit to.
    pub fn committed_bit(&self) -> bool {
        self.bit
    }

    pub fn flag(&self) -> bool {
        self.flag
    }

    pub fn contributing_rounds(&self) -> &[usize] {
        &self.contributing
    }

    pub fn published_rounds(&self) -> usize {
        self.published.iter().filter(|p| p.is_some()).count()
    }

    /// The committer's true bit strings, where she kept them.
    pub fn committer_round_bits(&self, round: usize) -> Option<&[bool]> {
        self.committer.get(round)?.r.as_deref()
    }

    pub fn round_audit(&self, round: usize) -> RoundAudit {
        RoundAudit {
            published: self.published[round].is_some(),
            forwarded: self.relay[round].plan.disclosure().forwarded,
            retained: self.relay[round].plan.retained_positions(self.params.n),
            opened_bases: self.relay[round].opened.clone(),
            receiver_bases: self.receiver[round]
                .records
                .iter()
                .map(|r| r.basis)
                .collect(),
        }
    }

    /// Relay's best guess of `b`: the flag XOR the parity of everything it
    /// kept and measured in contributing rounds.
    pub fn relay_guess(&self) -> bool {
        self.contributing.iter().fold(self.flag, |acc, &i| {
            self.relay[i]
                .retained
                .iter()
                .fold(acc, |a, rec| a ^ rec.outcome)
        })
    }

    /// Receiver's best guess of `b`: the flag XOR the parity of all his
    /// outcomes in contributing rounds.
    pub fn receiver_guess(&self) -> bool {
        self.contributing.iter().fold(self.flag, |acc, &i| {
            self.receiver[i]
                .records
                .iter()
                .fold(acc, |a, rec| a ^ rec.outcome)
        })
    }
}

/// Runs the commit phase. The returned handle is usable for [`unveil`] only
/// when the verdict is `Accepted`.
pub fn commit(
    session: &mut Session,
    b: bool,
    params: &CommitParams,
    roles: Roles,
    profile: &StrategyProfile,
) -> Result<(CommitmentHandle, Verdict)> {
    params.validate()?;
    roles.validate()?;
    profile.validate()?;
    let Roles {
        committer: c,
        relay: h,
        receiver: r,
    } = roles;
    let n = params.n;
    let forward = n / 2;
    let decoy_count = n - forward;
    let deferred_round = (profile.behavior(c) == Behavior::BindingFlipAlice).then_some(0);
    let intercept = profile.behavior(h) == Behavior::InterceptResendHelen;
    let baseless = profile.behavior(r) == Behavior::BaselessComplainerBob;

    let mut committer_rounds = Vec::with_capacity(params.l);
    let mut relay_rounds = Vec::with_capacity(params.l);
    let mut receiver_rounds = Vec::with_capacity(params.l);
    let mut published_log = Vec::with_capacity(params.l);
    let mut forwarded_tally = Tally::default();
    let mut decoy_tally = Tally::default();
    let mut refuted = Tally::default();
    let mut receiver_complained = false;

    for round in 0..params.l {
        // 1. committer -> relay
        let mut r_bits = Vec::with_capacity(n);
        let mut s_bases = Vec::with_capacity(n);
        let mut qubits = Vec::with_capacity(n);
        for _ in 0..n {
            let (q, bit, basis) = prepare_random(session.rng(c));
            qubits.push(q);
            r_bits.push(bit);
            s_bases.push(basis);
        }
        session
            .net
            .send_private(c, h, "commit-qubits", Payload::Quantum(qubits))?;

        // 2. relay merges a random half with its decoys
        let incoming = session.net.recv_qubits(h, "commit-qubits")?;
        if incoming.len() != n {
            return Err(Error::MalformedMessage(format!(
                "commit-qubits: expected {n} qubits, got {}",
                incoming.len()
            )));
        }
        let plan = ForwardingPlan::random(n, forward, decoy_count, session.rng(h));
        let fwd = plan.source_positions();
        let incoming: Vec<Qubit> = if intercept {
            let rng = session.rng(h);
            incoming
                .into_iter()
                .enumerate()
                .map(|(j, q)| {
                    if fwd.binary_search(&j).is_ok() {
                        let basis = Basis::random(rng);
                        intercept_resend(q, basis, rng)
                    } else {
                        q
                    }
                })
                .collect()
        } else {
            incoming
        };
        let mut decoys = Vec::with_capacity(decoy_count);
        let mut decoy_qubits = Vec::with_capacity(decoy_count);
        for _ in 0..decoy_count {
            let (q, bit, basis) = prepare_random(session.rng(h));
            decoy_qubits.push(q);
            decoys.push((bit, basis));
        }
        let mut kept = QubitRegister::new(incoming);
        let merged = anonymized_forward(&plan, &mut kept, decoy_qubits)?;
        session
            .net
            .send_private(h, r, "commit-stream", Payload::Quantum(merged))?;
        session
            .net
            .send_json(h, c, "commit-disclosure", &plan.disclosure())?;

        // 3. receiver measures everything and may publish
        let stream = session.net.recv_qubits(r, "commit-stream")?;
        session
            .net
            .broadcast_json(r, "commit-received", &serde_json::json!({ "round": round }))?;
        let mut held = QubitRegister::new(stream);
        let records = held.measure_all_random(session.rng(r))?;
        let fake_complaint = baseless && round == 0;
        let published = fake_complaint || session.rng(r).random_bool(params.publish_probability);
        let shown = published.then(|| {
            let mut shown = records.clone();
            if fake_complaint {
                for rec in &mut shown {
                    rec.outcome = !rec.outcome;
                }
            }
            shown
        });
        if fake_complaint {
            session
                .net
                .complain(r, c, "received stream does not match")?;
            receiver_complained = true;
        }
        let publication: Publication = session.net.publish(
            r,
            "commit-publish",
            &Publication {
                round,
                published,
                records: shown,
            },
        )?;
        let disclosure: ForwardingDisclosure = session.net.recv_json(c, "commit-disclosure")?;
        if let Some(recs) = &publication.records {
            if recs.len() != plan.len() {
                return Err(Error::MalformedMessage(
                    "commit-publish: record count".into(),
                ));
            }
            if deferred_round != Some(round) {
                let (k, m) = sifted_mismatches(recs, &disclosure.forwarded, &r_bits, &s_bases);
                forwarded_tally.add_round(k, m);
            }
            let (dbits, dbases): (Vec<bool>, Vec<Basis>) = decoys.iter().copied().unzip();
            let (k, m) = sifted_mismatches(recs, &plan.decoy_positions(), &dbits, &dbases);
            decoy_tally.add_round(k, m);
            if fake_complaint {
                refuted.add_round(k, m);
            }
        }

        // 4. committer opens her bases to the relay, which measures what it kept
        let opened = if deferred_round == Some(round) {
            (0..n).map(|_| Basis::random(session.rng(c))).collect()
        } else {
            s_bases.clone()
        };
        let opened: Vec<Basis> = session.net.exchange(c, h, "commit-bases", &opened)?;
        if opened.len() != n {
            return Err(Error::MalformedMessage("commit-bases: length".into()));
        }
        let retained = plan
            .retained_positions(n)
            .into_iter()
            .map(|j| kept.measure_at(j, opened[j], session.rng(h)))
            .collect::<Result<Vec<_>>>()?;

        committer_rounds.push(CommitterRound {
            r: (deferred_round != Some(round)).then_some(r_bits),
            opened: opened.clone(),
        });
        relay_rounds.push(RelayRound {
            plan,
            opened,
            retained,
        });
        receiver_rounds.push(ReceiverRound { records });
        published_log.push(publication.records);
    }

    let tau = params.tau;
    let committer_complains = deferred_round.is_none() && forwarded_tally.worst > tau;
    let relay_complains = !intercept && decoy_tally.worst > tau;
    if committer_complains {
        session
            .net
            .complain(c, r, "published records contradict forwarded qubits")?;
    }
    if relay_complains {
        session
            .net
            .complain(h, r, "published records contradict decoys")?;
    }

    let mut evidence = vec![
        forwarded_tally.evidence(CheckClass::ForwardedVsCommitter),
        decoy_tally.evidence(CheckClass::DecoyVsRelay),
    ];
    if receiver_complained {
        evidence.push(refuted.evidence(CheckClass::ComplaintRefuted));
    }
    let contributing: Vec<usize> = (0..params.l)
        .filter(|&i| published_log[i].is_none())
        .collect();

    let mut handle = CommitmentHandle {
        params: *params,
        roles,
        accepted: false,
        bit: b,
        flag: false,
        published: published_log,
        contributing,
        committer: committer_rounds,
        relay: relay_rounds,
        receiver: receiver_rounds,
        deferred_round,
    };

    let verdict = if relay_complains {
        Verdict::new(Outcome::CheaterIdentified(r), evidence)
    } else if committer_complains {
        session.net.annotate(
            c,
            TAG_COLLUSION_FLAG,
            serde_json::json!({ "suspects": [h, r] }),
        )?;
        let mut v = Verdict::new(Outcome::Rejected, evidence);
        v.collusion_flag = true;
        v
    } else if receiver_complained {
        // unrefuted complaint
        Verdict::new(Outcome::Rejected, evidence)
    } else if handle.contributing.is_empty() {
        Verdict::new(Outcome::Aborted("no contributing rounds".into()), evidence)
    } else {
        // 5. announce whether the contributing parity equals b
        let known_parity = handle.contributing.iter().fold(false, |acc, &i| {
            acc ^ handle.committer[i]
                .r
                .as_ref()
                .is_some_and(|bits| bits.iter().fold(false, |a, &x| a ^ x))
        });
        let flag: bool = session.net.publish(c, "commit-flag", &(known_parity ^ b))?;
        handle.flag = flag;
        handle.accepted = true;
        Verdict::accepted(evidence)
    };
    Ok((handle, verdict))
}

/// The committer's declared opening. An honest committer reveals exactly
/// what she prepared; a deferred-choice committer invents the unrecorded
/// round so that the unveiled bit comes out flipped.
fn build_opening<R: Rng + ?Sized>(handle: &CommitmentHandle, rng: &mut R) -> Opening {
    let n = handle.params.n;
    let target = !handle.bit;
    let mut rounds: Vec<RoundOpening> = handle
        .committer
        .iter()
        .map(|cr| RoundOpening {
            r: cr.r.clone().unwrap_or_default(),
            s: cr.opened.clone(),
        })
        .collect();
    if let Some(d) = handle.deferred_round {
        let mut invented: Vec<bool> = (0..n).map(|_| rng.random::<bool>()).collect();
        if handle.contributing.contains(&d) {
            let others = handle
                .contributing
                .iter()
                .filter(|&&i| i != d)
                .fold(handle.flag, |acc, &i| {
                    acc ^ rounds[i].r.iter().fold(false, |a, &x| a ^ x)
                });
            let current = invented.iter().fold(false, |a, &x| a ^ x);
            if others ^ current != target {
                invented[n - 1] = !invented[n - 1];
            }
        }
        rounds[d].r = invented;
        return Opening {
            bit: target,
            rounds,
        };
    }
    Opening {
        bit: handle.bit,
        rounds,
    }
}

/// Opens an accepted commitment. Returns the unveiled bit, or `None` when the
/// opening is refused.
pub fn unveil(session: &mut Session, handle: &CommitmentHandle) -> Result<(Option<bool>, Verdict)> {
    if !handle.accepted {
        return Err(Error::State(
            "unveil of a commitment that was not accepted".into(),
        ));
    }
    let Roles {
        committer: c,
        relay: h,
        receiver: r,
    } = handle.roles;
    let n = handle.params.n;
    let tau = handle.params.tau;

    let opening = build_opening(handle, session.rng(c));
    let opening: Opening = session.net.publish(c, "unveil-opening", &opening)?;
    let disclosures: Vec<ForwardingDisclosure> =
        handle.relay.iter().map(|rr| rr.plan.disclosure()).collect();
    let disclosures: Vec<ForwardingDisclosure> =
        session.net.publish(h, "unveil-plans", &disclosures)?;

    let well_formed = opening.rounds.len() == handle.params.l
        && opening
            .rounds
            .iter()
            .all(|ro| ro.r.len() == n && ro.s.len() == n);
    if !well_formed {
        session.net.complain(h, c, "malformed opening")?;
        return Ok((
            None,
            Verdict::new(
                Outcome::CheaterIdentified(c),
                vec![Evidence {
                    class: CheckClass::BasisReopen,
                    checked: 1,
                    mismatches: 1,
                    worst_fraction: 1.0,
                }],
            ),
        ));
    }

    // relay's checks
    let mut reopen = Tally::default();
    let mut retained = Tally::default();
    let mut published = Tally::default();
    for (i, rr) in handle.relay.iter().enumerate() {
        let ro = &opening.rounds[i];
        let diff = rr.opened.iter().zip(&ro.s).filter(|(a, b)| a != b).count();
        reopen.add_round(n, diff);
        let mut k = 0;
        let mut m = 0;
        for rec in &rr.retained {
            if rec.basis == ro.s[rec.index] {
                k += 1;
                if rec.outcome != ro.r[rec.index] {
                    m += 1;
                }
            }
        }
        retained.add_round(k, m);
        if let Some(recs) = &handle.published[i] {
            let (k, m) = sifted_mismatches(recs, &disclosures[i].forwarded, &ro.r, &ro.s);
            published.add_round(k, m);
        }
    }
    // receiver's check on the rounds he kept private
    let mut private = Tally::default();
    for &i in &handle.contributing {
        let ro = &opening.rounds[i];
        let (k, m) = sifted_mismatches(
            &handle.receiver[i].records,
            &disclosures[i].forwarded,
            &ro.r,
            &ro.s,
        );
        private.add_round(k, m);
    }

    let unveiled = handle.contributing.iter().fold(handle.flag, |acc, &i| {
        acc ^ opening.rounds[i].r.iter().fold(false, |a, &x| a ^ x)
    });
    let bit_consistent = unveiled == opening.bit;

    let evidence = vec![
        reopen.evidence(CheckClass::BasisReopen),
        retained.evidence(CheckClass::RetainedVsOpening),
        published.evidence(CheckClass::PublishedVsOpening),
        private.evidence(CheckClass::ReceiverRecordsVsOpening),
    ];
    let relay_objects =
        reopen.worst > tau || retained.worst > tau || published.worst > tau || !bit_consistent;
    if relay_objects {
        session
            .net
            .complain(h, c, "opening contradicts retained data")?;
        return Ok((None, Verdict::new(Outcome::CheaterIdentified(c), evidence)));
    }
    if private.worst > tau {
        session
            .net
            .complain(r, c, "opening contradicts private records")?;
        return Ok((None, Verdict::new(Outcome::Rejected, evidence)));
    }
    Ok((Some(unveiled), Verdict::accepted(evidence)))
}
