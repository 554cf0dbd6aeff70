//! Committed oblivious transfer on bitwise commitments.
//!
//! One instance ("subGCOT") commits the sender to two random codewords,
//! moves them position by position through oblivious transfer, and lets the
//! receiver test a few positions, correct the rest and commit to the result.
//! Alice always plays through Helen, and Helen interleaves pretended
//! instances of her own, so Bob cannot tell whose data he is looking at. The
//! first successful Alice instance is completed with a parity-subset
//! privacy amplification; if none succeeds within `l` trials, Bob's
//! complaints decide who is cheating.

use rand::seq::index;
use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::bcx::{BcxId, BcxStore, GbcxCommitment, LinearRelationClaim, ProofRecord};
use crate::code::{bit, subset_parity, to_bits, CodeConfig, ReedMuller, Word};
use crate::error::{Error, IntegrityFault, Result};
use crate::netsim::{PlayerId, TAG_IDENTIFY};
use crate::ot::{ot_transfer, BindingHorizon, OtEndpoints, OtParams, OtRecord, Route};
use crate::session::Session;
use crate::strategy::{Behavior, StrategyProfile};
use crate::verdict::{CheckClass, Evidence, Outcome, Verdict};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct GcotParams {
    pub code: CodeConfig,
    /// Trials before the identification rule applies.
    pub l: usize,
    pub ot: OtParams,
    pub commit_rows: usize,
    pub proof_rows: usize,
    pub max_h_attempts: usize,
}

impl Default for GcotParams {
    fn default() -> Self {
        Self {
            code: CodeConfig::default(),
            l: 8,
            ot: OtParams::default(),
            commit_rows: 32,
            proof_rows: 8,
            max_h_attempts: 64,
        }
    }
}

impl GcotParams {
    pub fn validate(&self) -> Result<()> {
        self.code.build()?;
        self.ot.validate()?;
        if self.l < 2 {
            return Err(Error::Config("gcot: l must be at least 2".into()));
        }
        if self.proof_rows < crate::bcx::MIN_ROWS {
            return Err(Error::Config(format!(
                "gcot: proof_rows must be at least {}",
                crate::bcx::MIN_ROWS
            )));
        }
        if self.commit_rows < 3 * self.proof_rows {
            return Err(Error::Config(
                "gcot: commit_rows must cover three proofs".into(),
            ));
        }
        if self.max_h_attempts == 0 {
            return Err(Error::Config(
                "gcot: max_h_attempts must be positive".into(),
            ));
        }
        Ok(())
    }

    /// Number of Helen-origin instances among `l` trials.
    pub fn helen_slots(&self) -> usize {
        self.l.div_ceil(2)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum InstanceOrigin {
    Alice,
    /// Pretended by Helen.
    Helen,
}

impl InstanceOrigin {
    pub fn player(self) -> PlayerId {
        match self {
            InstanceOrigin::Alice => PlayerId::Alice,
            InstanceOrigin::Helen => PlayerId::Helen,
        }
    }

    /// Who verifies the sender's commitments and proofs.
    fn checker(self) -> PlayerId {
        match self {
            InstanceOrigin::Alice => PlayerId::Helen,
            InstanceOrigin::Helen => PlayerId::Alice,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum TrialOutcome {
    Success,
    ComplaintAboutAliceData,
    ComplaintAboutHelenData,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct TrialEntry {
    pub trial: usize,
    pub origin: InstanceOrigin,
    pub outcome: TrialOutcome,
}

#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct TrialLog {
    pub entries: Vec<TrialEntry>,
}

impl TrialLog {
    /// 1-based count of Alice-origin instances up to and including the
    /// first successful one.
    pub fn first_alice_success(&self) -> Option<usize> {
        let mut count = 0;
        for e in &self.entries {
            if e.origin == InstanceOrigin::Alice {
                count += 1;
                if e.outcome == TrialOutcome::Success {
                    return Some(count);
                }
            }
        }
        None
    }

    pub fn complained_about(&self, origin: InstanceOrigin) -> bool {
        let tag = match origin {
            InstanceOrigin::Alice => TrialOutcome::ComplaintAboutAliceData,
            InstanceOrigin::Helen => TrialOutcome::ComplaintAboutHelenData,
        };
        self.entries.iter().any(|e| e.outcome == tag)
    }

    /// After `l` failed trials: Bob if he complained about Helen's data,
    /// Alice if his complaints touched only hers.
    pub fn identify(&self) -> Option<PlayerId> {
        if self.complained_about(InstanceOrigin::Helen) {
            Some(PlayerId::Bob)
        } else if self.complained_about(InstanceOrigin::Alice) {
            Some(PlayerId::Alice)
        } else {
            None
        }
    }
}

/// State of one instance, kept for completion and audits.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GcotSession {
    pub origin: InstanceOrigin,
    pub codewords: [Word; 2],
    pub choice: bool,
    pub index_choices: Vec<bool>,
    pub i0: Vec<usize>,
    pub i1: Vec<usize>,
    pub i2: Vec<usize>,
    /// `(position, c_0^i, c_1^i)` for every opened position.
    pub opened: Vec<(usize, bool, bool)>,
    /// Word as delivered by the transfers.
    pub received: Word,
    /// Word after substitution and decoding.
    pub corrected: Option<Word>,
    pub ot_records: Vec<OtRecord>,
    pub amplification: Option<Word>,
    pub inputs: Option<[bool; 2]>,
    pub output: Option<bool>,
    #[serde(skip)]
    ids: InstanceIds,
}

#[derive(Debug, Clone, Default, PartialEq)]
struct InstanceIds {
    codewords: [Vec<BcxId>; 2],
    word: Vec<BcxId>,
    choice: Option<BcxId>,
}

impl GcotSession {
    pub fn test_set(&self) -> Vec<usize> {
        let mut i: Vec<usize> = self.i0.iter().chain(&self.i1).copied().collect();
        i.sort_unstable();
        i
    }

    fn opened_value(&self, pos: usize, j: usize) -> Option<bool> {
        self.opened
            .iter()
            .find(|o| o.0 == pos)
            .map(|&(_, c0, c1)| if j == 0 { c0 } else { c1 })
    }

    pub fn check_invariants(&self, sigma_m: usize) -> Result<()> {
        let fail = |msg: &str| Err(IntegrityFault::Invariant(format!("gcot: {msg}")).into());
        if self.i0.len() != sigma_m || self.i1.len() != sigma_m {
            return fail("test sets have the wrong size");
        }
        if !self.i2.is_empty() && self.i2.len() != sigma_m {
            return fail("I_2 has the wrong size");
        }
        if self.i0.iter().any(|i| self.i1.contains(i)) {
            return fail("I_0 and I_1 overlap");
        }
        if self
            .i2
            .iter()
            .any(|i| self.i0.contains(i) || self.i1.contains(i))
        {
            return fail("I_2 meets I");
        }
        for (i, &bi) in self.index_choices.iter().enumerate() {
            if bi != (self.choice ^ self.i0.contains(&i)) {
                return fail("per-index choice pattern broken");
            }
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum InstanceStatus {
    Completed,
    Complained,
    Identified(Verdict),
    Aborted(String),
}

/// Messages from Bob to the instance's sender, through Helen.
fn to_sender<T: Serialize + serde::de::DeserializeOwned>(
    session: &mut Session,
    origin: InstanceOrigin,
    tag: &str,
    value: &T,
) -> Result<T> {
    match origin {
        InstanceOrigin::Alice => {
            session
                .net
                .relay(PlayerId::Bob, PlayerId::Helen, PlayerId::Alice, tag, value)
        }
        InstanceOrigin::Helen => session
            .net
            .exchange(PlayerId::Bob, PlayerId::Helen, tag, value),
    }
}

fn proof_evidence(proofs: &[&ProofRecord]) -> Vec<Evidence> {
    proofs.iter().map(|p| p.evidence()).collect()
}

fn identified(p: PlayerId, evidence: Vec<Evidence>) -> InstanceStatus {
    InstanceStatus::Identified(Verdict::new(Outcome::CheaterIdentified(p), evidence))
}

/// Claims that the committed word lies in the code.
fn membership_claims(code: &ReedMuller, ids: &[BcxId]) -> Vec<LinearRelationClaim> {
    code.parity_checks()
        .into_iter()
        .map(|h| {
            let terms = (0..code.len())
                .filter(|&i| bit(h, i))
                .map(|i| ids[i])
                .collect();
            LinearRelationClaim::new(terms, false)
        })
        .collect()
}

fn random_codeword_pair(code: &ReedMuller, rng: &mut impl Rng) -> [Word; 2] {
    let k = code.dimension();
    let draw =
        |rng: &mut dyn rand::RngCore| code.encode_index(rng.random::<u64>() & ((1u64 << k) - 1));
    loop {
        let c0 = draw(rng);
        let c1 = draw(rng);
        if c0 != 0 && c1 != 0 && c0 != c1 {
            return [c0, c1];
        }
    }
}

/// Runs one instance up to and including the receiver's final proof.
/// `sender_store` must announce privately; `receiver_store` belongs to Bob.
#[allow(clippy::too_many_arguments)]
pub fn subgcot(
    session: &mut Session,
    sender_store: &mut BcxStore,
    receiver_store: &mut BcxStore,
    code: &ReedMuller,
    origin: InstanceOrigin,
    choice: bool,
    params: &GcotParams,
    profile: &StrategyProfile,
) -> Result<(GcotSession, InstanceStatus)> {
    let sender = origin.player();
    let checker = origin.checker();
    let bob = PlayerId::Bob;
    let m = code.len();
    let sm = params.code.sigma_m();

    // 2. codewords, bitwise commitments, membership proof
    let codewords = random_codeword_pair(code, session.rng(sender));
    let bits: Vec<bool> = to_bits(codewords[0], m)
        .into_iter()
        .chain(to_bits(codewords[1], m))
        .collect();
    let ids = sender_store.commit_batch(session, sender, checker, &bits, params.commit_rows)?;
    let c_ids = [ids[..m].to_vec(), ids[m..].to_vec()];
    let claims: Vec<LinearRelationClaim> = c_ids
        .iter()
        .flat_map(|w| membership_claims(code, w))
        .collect();
    let sender_proof =
        sender_store.prove_linear_system(session, &claims, Some(params.proof_rows))?;

    let mut inst = GcotSession {
        origin,
        codewords,
        choice,
        index_choices: Vec::new(),
        i0: Vec::new(),
        i1: Vec::new(),
        i2: Vec::new(),
        opened: Vec::new(),
        received: 0,
        corrected: None,
        ot_records: Vec::with_capacity(m),
        amplification: None,
        inputs: None,
        output: None,
        ids: InstanceIds {
            codewords: c_ids,
            ..InstanceIds::default()
        },
    };
    if !sender_proof.passed {
        return Ok((inst, identified(sender, proof_evidence(&[&sender_proof]))));
    }
    // Helen vouches for the sender's data in either case.
    session
        .net
        .exchange(PlayerId::Helen, bob, "gcot-codewords-ok", &true)?;

    // 3. receiver commits to b and picks the test sets
    let b_id = receiver_store.commit(session, bob, PlayerId::Helen, choice, params.commit_rows)?;
    inst.ids.choice = Some(b_id);
    let picks = index::sample(session.rng(bob), m, 2 * sm).into_vec();
    inst.i0 = picks[..sm].to_vec();
    inst.i1 = picks[sm..].to_vec();
    inst.i0.sort_unstable();
    inst.i1.sort_unstable();
    inst.index_choices = (0..m).map(|i| choice ^ inst.i0.contains(&i)).collect();

    // 4. one transfer per position
    let corrupted: Vec<usize> = match (origin, profile.behavior(sender)) {
        (InstanceOrigin::Alice, Behavior::CheatingAliceGcot { corrupted }) => {
            index::sample(session.rng(sender), m, corrupted.min(m)).into_vec()
        }
        _ => Vec::new(),
    };
    let ends = match origin {
        InstanceOrigin::Alice => OtEndpoints {
            sender: PlayerId::Alice,
            receiver: bob,
            route: Route::ViaHelen,
        },
        InstanceOrigin::Helen => OtEndpoints::direct(PlayerId::Helen, bob),
    };
    let honest = StrategyProfile::honest();
    let mut received = 0;
    for i in 0..m {
        let flip = corrupted.contains(&i);
        let inputs = [bit(codewords[0], i) ^ flip, bit(codewords[1], i) ^ flip];
        let out = ot_transfer(
            session,
            inputs,
            inst.index_choices[i],
            &params.ot,
            ends,
            &honest,
            BindingHorizon::UntilCheck,
        )?;
        match (&out.verdict.outcome, out.output) {
            (Outcome::Accepted, Some(w)) => {
                if w {
                    received |= 1 << i;
                }
            }
            (Outcome::Aborted(reason), _) => {
                let reason = format!("transfer {i}: {reason}");
                return Ok((inst, InstanceStatus::Aborted(reason)));
            }
            _ => return Ok((inst, InstanceStatus::Identified(out.verdict))),
        }
        if let Some(r) = out.record {
            inst.ot_records.push(r);
        }
    }
    inst.received = received;

    let test_set = inst.test_set();
    let test_set = to_sender(session, origin, "gcot-test-set", &test_set)?;
    let open_ids: Vec<BcxId> = test_set
        .iter()
        .flat_map(|&i| [inst.ids.codewords[0][i], inst.ids.codewords[1][i]])
        .collect();
    let (values, v) = sender_store.unveil_batch(session, &open_ids)?;
    let Some(values) = values else {
        return Ok((inst, InstanceStatus::Identified(v)));
    };
    let opened: Vec<(usize, bool, bool)> = test_set
        .iter()
        .enumerate()
        .map(|(j, &i)| (i, values[2 * j], values[2 * j + 1]))
        .collect();
    let opened: Vec<(usize, bool, bool)> =
        session
            .net
            .exchange(PlayerId::Helen, bob, "gcot-opened", &opened)?;
    inst.opened = opened;

    if profile.behavior(bob) == Behavior::DisruptiveBob {
        session
            .net
            .complain(bob, PlayerId::Helen, "inconsistent transfer data")?;
        return Ok((inst, InstanceStatus::Complained));
    }

    // 5. tests, substitution, decoding, commitment to w
    let c_of = |inst: &GcotSession, i: usize, j: bool| {
        inst.opened_value(i, usize::from(j)).expect("opened")
    };
    let bad_test = inst
        .i0
        .iter()
        .any(|&i| bit(received, i) != c_of(&inst, i, !choice))
        || inst
            .i1
            .iter()
            .any(|&i| bit(received, i) != c_of(&inst, i, choice));
    if bad_test {
        session.net.complain(
            bob,
            PlayerId::Helen,
            "transfer output contradicts opened codeword",
        )?;
        return Ok((inst, InstanceStatus::Complained));
    }
    let mut w = received;
    for &i in &inst.i0 {
        w = (w & !(1 << i)) | (Word::from(c_of(&inst, i, choice)) << i);
    }
    let Some(w) = code.decode(w) else {
        session
            .net
            .complain(bob, PlayerId::Helen, "received word does not decode")?;
        return Ok((inst, InstanceStatus::Complained));
    };
    inst.corrected = Some(w);
    let w_ids = receiver_store.commit_batch(
        session,
        bob,
        PlayerId::Helen,
        &to_bits(w, m),
        params.commit_rows,
    )?;
    inst.ids.word = w_ids.clone();
    let bob_membership = receiver_store.prove_linear_system(
        session,
        &membership_claims(code, &w_ids),
        Some(params.proof_rows),
    )?;
    if !bob_membership.passed {
        return Ok((
            inst,
            identified(bob, proof_evidence(&[&sender_proof, &bob_membership])),
        ));
    }

    // 6. public test set I_2, opened by the sender
    let outside: Vec<usize> = (0..m).filter(|i| !test_set.contains(i)).collect();
    let mut i2: Vec<usize> = index::sample(session.env(), outside.len(), sm)
        .into_iter()
        .map(|j| outside[j])
        .collect();
    i2.sort_unstable();
    let open_ids: Vec<BcxId> = i2
        .iter()
        .flat_map(|&i| [inst.ids.codewords[0][i], inst.ids.codewords[1][i]])
        .collect();
    let (values, v) = sender_store.unveil_batch(session, &open_ids)?;
    let Some(values) = values else {
        return Ok((inst, InstanceStatus::Identified(v)));
    };
    let opened2: Vec<(usize, bool, bool)> = i2
        .iter()
        .enumerate()
        .map(|(j, &i)| (i, values[2 * j], values[2 * j + 1]))
        .collect();
    let opened2 = session
        .net
        .publish(PlayerId::Helen, "gcot-opened-2", &opened2)?;
    inst.opened.extend(opened2.iter().copied());
    inst.i2 = i2;
    inst.check_invariants(sm)?;

    // 7. w agrees with c_b on I_2
    let claims = i2_claims(&inst, b_id);
    let bob_i2 = receiver_store.prove_linear_system(session, &claims, Some(params.proof_rows))?;
    if !bob_i2.passed {
        return Ok((
            inst,
            identified(
                bob,
                proof_evidence(&[&sender_proof, &bob_membership, &bob_i2]),
            ),
        ));
    }
    Ok((inst, InstanceStatus::Completed))
}

/// `w^i = c_b^i` with `c_0^i, c_1^i` public: either `w^i = c_0^i` or
/// `w^i ^ b = c_0^i`.
fn i2_claims(inst: &GcotSession, b_id: BcxId) -> Vec<LinearRelationClaim> {
    inst.i2
        .iter()
        .map(|&i| {
            let c0 = inst.opened_value(i, 0).expect("I_2 opened");
            let c1 = inst.opened_value(i, 1).expect("I_2 opened");
            let w = inst.ids.word[i];
            if c0 == c1 {
                LinearRelationClaim::new(vec![w], c0)
            } else {
                LinearRelationClaim::new(vec![w, b_id], c0)
            }
        })
        .collect()
}

/// Samples a parity subset `S` with `h(c_0) = a_0` and `h(c_1) = a_1`.
pub fn sample_amplification(
    codewords: [Word; 2],
    inputs: [bool; 2],
    len: usize,
    attempts: usize,
    rng: &mut impl Rng,
) -> Result<Word> {
    let mask = if len == 64 { Word::MAX } else { (1 << len) - 1 };
    for _ in 0..attempts {
        let s = rng.random::<u64>() & mask;
        if subset_parity(codewords[0], s) == inputs[0]
            && subset_parity(codewords[1], s) == inputs[1]
        {
            return Ok(s);
        }
    }
    Err(IntegrityFault::NoAmplificationFunction { attempts }.into())
}

/// Completes a successful instance: the sender commits to its inputs and
/// proves them equal to `h` of its codewords, the receiver commits to
/// `a = h(w)` toward both other players and proves it.
pub fn gcot_complete(
    session: &mut Session,
    sender_store: &mut BcxStore,
    receiver_store: &mut BcxStore,
    inst: &mut GcotSession,
    inputs: [bool; 2],
    params: &GcotParams,
) -> Result<(Option<GbcxCommitment>, Verdict)> {
    let sender = inst.origin.player();
    let checker = inst.origin.checker();
    let bob = PlayerId::Bob;
    let m = inst.index_choices.len();
    let w = inst
        .corrected
        .ok_or_else(|| Error::State("gcot_complete: instance did not succeed".into()))?;

    // 8. privacy amplification by the sender
    let s = sample_amplification(
        inst.codewords,
        inputs,
        m,
        params.max_h_attempts,
        session.rng(sender),
    )?;
    let s = session.net.publish(sender, "gcot-amplification", &s)?;
    inst.amplification = Some(s);
    inst.inputs = Some(inputs);
    let a_ids = sender_store.commit_batch(session, sender, checker, &inputs, params.commit_rows)?;
    let claims: Vec<LinearRelationClaim> = (0..2)
        .map(|j| {
            let mut terms = vec![a_ids[j]];
            let mut target = false;
            for i in (0..m).filter(|&i| bit(s, i)) {
                match inst.opened_value(i, j) {
                    Some(v) => target ^= v,
                    None => terms.push(inst.ids.codewords[j][i]),
                }
            }
            LinearRelationClaim::new(terms, target)
        })
        .collect();
    let sender_proof =
        sender_store.prove_linear_system(session, &claims, Some(params.proof_rows))?;
    if !sender_proof.passed {
        return Ok((
            None,
            Verdict::new(
                Outcome::CheaterIdentified(sender),
                vec![sender_proof.evidence()],
            ),
        ));
    }

    // 9. receiver's output
    let a = subset_parity(w, s);
    let gbcx = receiver_store.gbcx_commit_split(
        session,
        bob,
        &[PlayerId::Helen, PlayerId::Alice],
        &[a, a],
        params.commit_rows,
        Some(params.proof_rows),
    )?;
    let a_helen = gbcx.part(PlayerId::Helen).expect("helen part");
    let mut terms = vec![a_helen];
    terms.extend((0..m).filter(|&i| bit(s, i)).map(|i| inst.ids.word[i]));
    let bob_proof = receiver_store.prove_linear(
        session,
        &LinearRelationClaim::new(terms, false),
        Some(params.proof_rows),
    )?;
    let mut evidence = vec![sender_proof.evidence(), bob_proof.evidence()];
    evidence.extend(gbcx.proofs.iter().map(ProofRecord::evidence));
    if !gbcx.passed() || !bob_proof.passed {
        return Ok((
            None,
            Verdict::new(Outcome::CheaterIdentified(bob), evidence),
        ));
    }
    inst.output = Some(a);
    Ok((Some(gbcx), Verdict::accepted(evidence)))
}

#[derive(Debug, Clone)]
pub struct GcotOutcome {
    pub verdict: Verdict,
    /// Bob's committed output.
    pub output: Option<bool>,
    pub log: TrialLog,
    /// The completed Alice instance.
    pub instance: Option<GcotSession>,
    pub output_commitment: Option<GbcxCommitment>,
    /// Holds Bob's commitments, including the output.
    pub receiver_store: BcxStore,
}

fn helen_schedule(session: &mut Session, params: &GcotParams) -> Vec<InstanceOrigin> {
    let helen =
        index::sample(session.rng(PlayerId::Helen), params.l, params.helen_slots()).into_vec();
    (0..params.l)
        .map(|t| {
            if helen.contains(&t) {
                InstanceOrigin::Helen
            } else {
                InstanceOrigin::Alice
            }
        })
        .collect()
}

/// GCOT from Alice to Bob with Helen mediating: Alice's inputs `inputs`,
/// Bob's choice `choice`.
pub fn run_trials(
    session: &mut Session,
    inputs: [bool; 2],
    choice: bool,
    params: &GcotParams,
    profile: &StrategyProfile,
) -> Result<GcotOutcome> {
    params.validate()?;
    profile.validate()?;
    let code = params.code.build()?;
    let schedule = helen_schedule(session, params);
    let mut log = TrialLog::default();
    let finish = |verdict: Verdict, log: TrialLog, receiver_store: BcxStore| GcotOutcome {
        verdict,
        output: None,
        log,
        instance: None,
        output_commitment: None,
        receiver_store,
    };

    for (trial, &origin) in schedule.iter().enumerate() {
        let mut sender_store = BcxStore::default().private();
        let mut receiver_store = BcxStore::default();
        let (mut inst, status) = subgcot(
            session,
            &mut sender_store,
            &mut receiver_store,
            &code,
            origin,
            choice,
            params,
            profile,
        )?;
        match status {
            InstanceStatus::Identified(verdict) => {
                if let Some(p) = verdict.identified() {
                    session.net.annotate(
                        PlayerId::Helen,
                        TAG_IDENTIFY,
                        serde_json::json!({ "cheater": p, "trial": trial }),
                    )?;
                }
                return Ok(finish(verdict, log, receiver_store));
            }
            InstanceStatus::Aborted(reason) => {
                return Ok(finish(Verdict::aborted(reason), log, receiver_store));
            }
            InstanceStatus::Complained => log.entries.push(TrialEntry {
                trial,
                origin,
                outcome: match origin {
                    InstanceOrigin::Alice => TrialOutcome::ComplaintAboutAliceData,
                    InstanceOrigin::Helen => TrialOutcome::ComplaintAboutHelenData,
                },
            }),
            InstanceStatus::Completed => {
                log.entries.push(TrialEntry {
                    trial,
                    origin,
                    outcome: TrialOutcome::Success,
                });
                let real = origin == InstanceOrigin::Alice;
                session.net.publish(
                    PlayerId::Helen,
                    "gcot-instance",
                    &serde_json::json!({ "trial": trial, "real": real }),
                )?;
                if real {
                    let (gbcx, verdict) = gcot_complete(
                        session,
                        &mut sender_store,
                        &mut receiver_store,
                        &mut inst,
                        inputs,
                        params,
                    )?;
                    return Ok(GcotOutcome {
                        output: inst.output.filter(|_| verdict.is_accepted()),
                        verdict,
                        log,
                        instance: Some(inst),
                        output_commitment: gbcx,
                        receiver_store,
                    });
                }
            }
        }
    }

    session
        .net
        .publish(PlayerId::Helen, "gcot-schedule", &schedule)?;
    let complaints = log
        .entries
        .iter()
        .filter(|e| e.outcome != TrialOutcome::Success)
        .count();
    let evidence = vec![Evidence {
        class: CheckClass::CodewordConsistency,
        checked: params.l,
        mismatches: complaints,
        worst_fraction: complaints as f64 / params.l as f64,
    }];
    let verdict = match log.identify() {
        Some(p) => {
            session.net.annotate(
                PlayerId::Helen,
                TAG_IDENTIFY,
                serde_json::json!({ "cheater": p, "rule": "after-l-trials" }),
            )?;
            Verdict::new(Outcome::CheaterIdentified(p), evidence)
        }
        None => {
            return Err(IntegrityFault::Invariant(
                "l trials ended without success or complaint".into(),
            )
            .into())
        }
    };
    Ok(finish(verdict, log, BcxStore::default()))
}

/// Every codeword of a small code, for maximum-likelihood audits.
#[derive(Debug, Clone)]
pub struct CodewordList {
    words: Vec<Word>,
}

impl CodewordList {
    pub fn new(code: &ReedMuller) -> Result<Self> {
        if code.dimension() > 20 {
            return Err(Error::Resource(format!(
                "codeword list: dimension {} too large",
                code.dimension()
            )));
        }
        Ok(Self {
            words: code.codewords(),
        })
    }

    pub fn len(&self) -> usize {
        self.words.len()
    }

    pub fn is_empty(&self) -> bool {
        self.words.is_empty()
    }
}

/// Bob's maximum-likelihood guess of the input he did not choose: a
/// majority vote of `h` over all sender codewords consistent with what he
/// learned about `c_{1-b}`.
pub fn receiver_guess_other(list: &CodewordList, inst: &GcotSession) -> Result<bool> {
    let s = inst
        .amplification
        .ok_or_else(|| Error::State("audit needs a completed instance".into()))?;
    let other = usize::from(!inst.choice);
    let mut known_mask: Word = 0;
    let mut known: Word = 0;
    for &(i, c0, c1) in &inst.opened {
        known_mask |= 1 << i;
        if [c0, c1][other] {
            known |= 1 << i;
        }
    }
    let cb = inst.codewords[usize::from(inst.choice)];
    let (mut ones, mut total) = (0u64, 0u64);
    for &c in &list.words {
        if c == 0 || c == cb || (c ^ known) & known_mask != 0 {
            continue;
        }
        total += 1;
        ones += u64::from(subset_parity(c, s));
    }
    Ok(2 * ones > total)
}

/// A sender's guess of `b`: majority of its per-transfer choice guesses
/// outside the test set, where `b^i = b`.
pub fn sender_guess_choice(inst: &GcotSession) -> bool {
    let test = inst.test_set();
    let votes: Vec<bool> = inst
        .ot_records
        .iter()
        .enumerate()
        .filter(|(i, _)| !test.contains(i))
        .map(|(_, r)| r.sender_guess_choice())
        .collect();
    2 * votes.iter().filter(|&&v| v).count() > votes.len()
}
