//! Bit commitments with XOR shares, proofs of linear relations, copies, and
//! global (multi-verifier) commitments.
//!
//! A [`BcxCommitment`] to `b` is `m` rows of share pairs `(L_i, R_i)` with
//! `L_i ^ R_i = b`. A linear claim "XOR of these committed bits is `t`" is
//! proven by cut-and-choose: for each spent row slot the prover announces
//! `d` = XOR of the left shares, a public coin picks a side, and the prover
//! opens that side of the slot for every commitment involved. Left openings
//! must XOR to `d`, right openings to `d ^ t`. Several claims proven together
//! share row slots and coins, so each commitment spends its rows once per
//! proof regardless of how many claims mention it.

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::commitment::{self, CommitParams, CommitmentHandle, Roles};
use crate::error::{Error, Result};
use crate::netsim::PlayerId;
use crate::session::Session;
use crate::strategy::StrategyProfile;
use crate::verdict::{CheckClass, Evidence, Outcome, Verdict};

pub const MIN_ROWS: usize = 8;
pub const DEFAULT_ROWS: usize = 20;

/// How individual shares are held binding.
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub enum Sealing {
    /// Shares are recorded by the simulator at commit time and revealed
    /// verbatim.
    #[default]
    RecordAndReveal,
    /// Every share is itself a quantum commitment from the committer to the
    /// verifier, relayed through Helen.
    Quantum(CommitParams),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(transparent)]
pub struct BcxId(pub usize);

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct Row {
    pub left: bool,
    pub right: bool,
    pub live: bool,
}

#[derive(Debug, Clone)]
pub struct BcxCommitment {
    committer: PlayerId,
    verifier: PlayerId,
    /// The bit the committer believes she committed to.
    bit: bool,
    rows: Vec<Row>,
    seals: Option<Vec<[CommitmentHandle; 2]>>,
}

impl BcxCommitment {
    pub fn committer(&self) -> PlayerId {
        self.committer
    }

    pub fn verifier(&self) -> PlayerId {
        self.verifier
    }

    pub fn rows(&self) -> &[Row] {
        &self.rows
    }

    pub fn live_rows(&self) -> usize {
        self.rows.iter().filter(|r| r.live).count()
    }

    /// True when every row XORs to the same value.
    pub fn is_well_formed(&self) -> bool {
        self.rows.iter().all(|r| r.left ^ r.right == self.bit)
    }

    fn next_live(&self, count: usize) -> Option<Vec<usize>> {
        let v: Vec<usize> = self
            .rows
            .iter()
            .enumerate()
            .filter(|(_, r)| r.live)
            .map(|(i, _)| i)
            .take(count)
            .collect();
        (v.len() == count).then_some(v)
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct LinearRelationClaim {
    pub terms: Vec<BcxId>,
    pub target: bool,
}

impl LinearRelationClaim {
    pub fn new(terms: Vec<BcxId>, target: bool) -> Self {
        Self { terms, target }
    }

    pub fn equality(a: BcxId, b: BcxId) -> Self {
        Self::new(vec![a, b], false)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Side {
    Left,
    Right,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct SlotProof {
    /// `(commitment, row)` pairs spent in this slot.
    pub rows: Vec<(BcxId, usize)>,
    /// Announced `d`, one per claim.
    pub announced: Vec<bool>,
    pub challenge: Side,
    /// Opened share per entry of `rows`.
    pub opened: Vec<bool>,
    /// Which claims this slot refuted.
    pub failed: Vec<usize>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ProofRecord {
    pub prover: PlayerId,
    pub claims: Vec<LinearRelationClaim>,
    pub slots: Vec<SlotProof>,
    pub violation: Option<String>,
    pub passed: bool,
}

impl ProofRecord {
    pub fn evidence(&self) -> Evidence {
        let failed = self.slots.iter().filter(|s| !s.failed.is_empty()).count();
        let checked = self.slots.len().max(1);
        let worst = if self.passed { 0.0 } else { 1.0 };
        Evidence {
            class: CheckClass::LinearProof,
            checked,
            mismatches: failed.max(usize::from(!self.passed)),
            worst_fraction: worst,
        }
    }

    pub fn verdict(&self) -> Verdict {
        if self.passed {
            Verdict::accepted(vec![self.evidence()])
        } else {
            Verdict::new(
                Outcome::CheaterIdentified(self.prover),
                vec![self.evidence()],
            )
        }
    }
}

pub fn default_rows_to_spend(live: usize) -> usize {
    (live / 2).max(MIN_ROWS)
}

/// Arena of commitments for one run.
#[derive(Debug, Clone, Default)]
pub struct BcxStore {
    sealing: Sealing,
    items: Vec<BcxCommitment>,
    private: bool,
}

impl BcxStore {
    pub fn new(sealing: Sealing) -> Self {
        Self {
            sealing,
            items: Vec::new(),
            private: false,
        }
    }

    /// Sends announcements, proofs and openings to the verifier only,
    /// instead of broadcasting them.
    pub fn private(mut self) -> Self {
        self.private = true;
        self
    }

    fn announce<T: Serialize + serde::de::DeserializeOwned>(
        &self,
        session: &mut Session,
        from: PlayerId,
        verifier: PlayerId,
        tag: &str,
        value: &T,
    ) -> Result<()> {
        if self.private {
            session.net.exchange(from, verifier, tag, value)?;
            Ok(())
        } else {
            session.net.broadcast_json(from, tag, value)
        }
    }

    pub fn get(&self, id: BcxId) -> Result<&BcxCommitment> {
        self.items
            .get(id.0)
            .ok_or_else(|| Error::State(format!("no commitment {}", id.0)))
    }

    pub fn len(&self) -> usize {
        self.items.len()
    }

    pub fn is_empty(&self) -> bool {
        self.items.is_empty()
    }

    /// Commits `b` with `m_rows` uniformly random left shares.
    pub fn commit(
        &mut self,
        session: &mut Session,
        committer: PlayerId,
        verifier: PlayerId,
        b: bool,
        m_rows: usize,
    ) -> Result<BcxId> {
        if m_rows < MIN_ROWS {
            return Err(Error::Config(format!(
                "bcx: need at least {MIN_ROWS} rows, got {m_rows}"
            )));
        }
        let rng = session.rng(committer);
        let pairs = (0..m_rows)
            .map(|_| {
                let left = rng.random::<bool>();
                (left, left ^ b)
            })
            .collect();
        self.commit_shares(session, committer, verifier, b, pairs)
    }

    /// Commits arbitrary share pairs. Rows need not agree; `claimed` is the
    /// bit the committer acts as if she committed to.
    pub fn commit_shares(
        &mut self,
        session: &mut Session,
        committer: PlayerId,
        verifier: PlayerId,
        claimed: bool,
        pairs: Vec<(bool, bool)>,
    ) -> Result<BcxId> {
        if pairs.is_empty() {
            return Err(Error::EmptyInput("bcx rows"));
        }
        if committer == verifier {
            return Err(Error::Config("bcx: committer and verifier coincide".into()));
        }
        let id = BcxId(self.items.len());
        let seals = match self.sealing {
            Sealing::Quantum(params) => {
                Some(seal_quantum(session, committer, verifier, &params, &pairs)?)
            }
            Sealing::RecordAndReveal => None,
        };
        self.announce(
            session,
            committer,
            verifier,
            "bcx-commit",
            &serde_json::json!({ "id": id, "to": verifier, "rows": pairs.len() }),
        )?;
        self.items.push(BcxCommitment {
            committer,
            verifier,
            bit: claimed,
            rows: pairs
                .into_iter()
                .map(|(left, right)| Row {
                    left,
                    right,
                    live: true,
                })
                .collect(),
            seals,
        });
        Ok(id)
    }

    fn open_share(
        &self,
        session: &mut Session,
        id: BcxId,
        row: usize,
        side: Side,
    ) -> Result<Option<bool>> {
        let c = &self.items[id.0];
        let r = c.rows[row];
        let value = match side {
            Side::Left => r.left,
            Side::Right => r.right,
        };
        match &c.seals {
            None => Ok(Some(value)),
            Some(seals) => {
                let handle = &seals[row][usize::from(side == Side::Right)];
                let (bit, v) = commitment::unveil(session, handle)?;
                Ok(bit.filter(|_| v.is_accepted()))
            }
        }
    }

    fn validate_claims(&self, claims: &[LinearRelationClaim]) -> Result<(PlayerId, Vec<BcxId>)> {
        let first = claims
            .first()
            .and_then(|c| c.terms.first())
            .ok_or(Error::EmptyInput("linear claim"))?;
        let prover = self.get(*first)?.committer;
        let mut involved: Vec<BcxId> = Vec::new();
        for claim in claims {
            if claim.terms.is_empty() {
                return Err(Error::EmptyInput("linear claim terms"));
            }
            let mut seen = claim.terms.clone();
            seen.sort_unstable();
            seen.dedup();
            if seen.len() != claim.terms.len() {
                return Err(Error::Config("linear claim repeats a commitment".into()));
            }
            for &t in &claim.terms {
                if self.get(t)?.committer != prover {
                    return Err(Error::Config("linear claim spans several provers".into()));
                }
                if !involved.contains(&t) {
                    involved.push(t);
                }
            }
        }
        involved.sort_unstable();
        Ok((prover, involved))
    }

    /// Proves one claim, spending `rows_to_spend` rows (default: half the
    /// smallest live count, at least 8).
    pub fn prove_linear(
        &mut self,
        session: &mut Session,
        claim: &LinearRelationClaim,
        rows_to_spend: Option<usize>,
    ) -> Result<ProofRecord> {
        self.prove_linear_system(session, std::slice::from_ref(claim), rows_to_spend)
    }

    /// Proves several claims with shared row slots and challenges.
    pub fn prove_linear_system(
        &mut self,
        session: &mut Session,
        claims: &[LinearRelationClaim],
        rows_to_spend: Option<usize>,
    ) -> Result<ProofRecord> {
        let (_, involved) = self.validate_claims(claims)?;
        let min_live = involved
            .iter()
            .map(|&id| self.items[id.0].live_rows())
            .min()
            .unwrap_or(0);
        let k = rows_to_spend.unwrap_or_else(|| default_rows_to_spend(min_live));
        if k == 0 || min_live < k {
            return Err(Error::Resource(format!(
                "bcx proof needs {k} live rows, smallest commitment has {min_live}"
            )));
        }
        let rows: Vec<Vec<usize>> = involved
            .iter()
            .map(|&id| self.items[id.0].next_live(k).expect("live count checked"))
            .collect();
        let slots = (0..k)
            .map(|slot| {
                involved
                    .iter()
                    .zip(&rows)
                    .map(|(&id, r)| (id, r[slot]))
                    .collect()
            })
            .collect();
        self.prove_at(session, claims, slots)
    }

    /// Proves claims on explicitly chosen rows. Each slot lists one
    /// `(commitment, row)` per involved commitment. Naming a dead row is a
    /// protocol violation by the prover.
    pub fn prove_at(
        &mut self,
        session: &mut Session,
        claims: &[LinearRelationClaim],
        slots: Vec<Vec<(BcxId, usize)>>,
    ) -> Result<ProofRecord> {
        let (prover, involved) = self.validate_claims(claims)?;
        let mut record = ProofRecord {
            prover,
            claims: claims.to_vec(),
            slots: Vec::with_capacity(slots.len()),
            violation: None,
            passed: true,
        };
        for slot in &slots {
            let mut ids: Vec<BcxId> = slot.iter().map(|&(id, _)| id).collect();
            ids.sort_unstable();
            if ids != involved {
                return Err(Error::Config(
                    "proof slot does not cover the claimed commitments".into(),
                ));
            }
            for &(id, row) in slot {
                let live = self.items[id.0].rows.get(row).is_some_and(|r| r.live);
                if !live {
                    record.violation =
                        Some(format!("row {row} of commitment {} is not live", id.0));
                    record.passed = false;
                }
            }
        }
        let verifier = self.items[involved[0].0].verifier;
        if record.violation.is_some() {
            self.announce(session, prover, verifier, "bcx-proof", &record)?;
            return Ok(record);
        }

        for slot in slots {
            let row_of = |id: BcxId| slot.iter().find(|&&(c, _)| c == id).expect("covered").1;
            // prover announces one d per claim
            let announced: Vec<bool> = claims
                .iter()
                .map(|claim| {
                    let mut left = false;
                    let mut right = false;
                    for &t in &claim.terms {
                        let r = self.items[t.0].rows[row_of(t)];
                        left ^= r.left;
                        right ^= r.right;
                    }
                    // a false claim survives one challenge side; guess which
                    if left ^ right == claim.target || session.rng(prover).random::<bool>() {
                        left
                    } else {
                        right ^ claim.target
                    }
                })
                .collect();
            let challenge = if session.env().random::<bool>() {
                Side::Right
            } else {
                Side::Left
            };
            let mut opened = Vec::with_capacity(slot.len());
            let mut refused = false;
            for &(id, row) in &slot {
                match self.open_share(session, id, row, challenge)? {
                    Some(v) => opened.push(v),
                    None => {
                        refused = true;
                        opened.push(false);
                    }
                }
            }
            let value_of = |id: BcxId| {
                let pos = slot.iter().position(|&(c, _)| c == id).expect("covered");
                opened[pos]
            };
            let failed: Vec<usize> = claims
                .iter()
                .enumerate()
                .filter(|(ci, claim)| {
                    let x = claim.terms.iter().fold(false, |a, &t| a ^ value_of(t));
                    let expect = match challenge {
                        Side::Left => announced[*ci],
                        Side::Right => announced[*ci] ^ claim.target,
                    };
                    refused || x != expect
                })
                .map(|(ci, _)| ci)
                .collect();
            for &(id, row) in &slot {
                self.items[id.0].rows[row].live = false;
            }
            if !failed.is_empty() {
                record.passed = false;
            }
            record.slots.push(SlotProof {
                rows: slot,
                announced,
                challenge,
                opened,
                failed,
            });
        }
        self.announce(session, prover, verifier, "bcx-proof", &record)?;
        Ok(record)
    }

    /// Commits afresh to the same bit as `src` and proves equality.
    pub fn copy(
        &mut self,
        session: &mut Session,
        src: BcxId,
        rows_to_spend: Option<usize>,
    ) -> Result<(BcxId, ProofRecord)> {
        let c = self.get(src)?;
        let (committer, verifier, bit, m) = (c.committer, c.verifier, c.bit, c.rows.len());
        let live = c.live_rows();
        let k = rows_to_spend.unwrap_or_else(|| default_rows_to_spend(live));
        if live < k {
            return Err(Error::Resource(format!(
                "bcx copy needs {k} live rows, source has {live}"
            )));
        }
        let fresh = self.commit(session, committer, verifier, bit, m.max(MIN_ROWS))?;
        let proof =
            self.prove_linear(session, &LinearRelationClaim::equality(src, fresh), Some(k))?;
        Ok((fresh, proof))
    }

    /// Commits many bits to one verifier under a single announcement.
    pub fn commit_batch(
        &mut self,
        session: &mut Session,
        committer: PlayerId,
        verifier: PlayerId,
        bits: &[bool],
        m_rows: usize,
    ) -> Result<Vec<BcxId>> {
        if m_rows < MIN_ROWS {
            return Err(Error::Config(format!(
                "bcx: need at least {MIN_ROWS} rows, got {m_rows}"
            )));
        }
        if committer == verifier {
            return Err(Error::Config("bcx: committer and verifier coincide".into()));
        }
        if let Sealing::Quantum(_) = self.sealing {
            return bits
                .iter()
                .map(|&b| self.commit(session, committer, verifier, b, m_rows))
                .collect();
        }
        let first = self.items.len();
        for &b in bits {
            let rng = session.rng(committer);
            let rows = (0..m_rows)
                .map(|_| {
                    let left = rng.random::<bool>();
                    Row {
                        left,
                        right: left ^ b,
                        live: true,
                    }
                })
                .collect();
            self.items.push(BcxCommitment {
                committer,
                verifier,
                bit: b,
                rows,
                seals: None,
            });
        }
        self.announce(
            session,
            committer,
            verifier,
            "bcx-commit",
            &serde_json::json!({ "first": first, "count": bits.len(), "to": verifier, "rows": m_rows }),
        )?;
        Ok((first..self.items.len()).map(BcxId).collect())
    }

    /// Opens several commitments of one committer together. Returns the bits
    /// in order, or `None` for the batch if any commitment fails to open.
    pub fn unveil_batch(
        &mut self,
        session: &mut Session,
        ids: &[BcxId],
    ) -> Result<(Option<Vec<bool>>, Verdict)> {
        let (committer, verifier) = match ids.first() {
            Some(&id) => {
                let c = self.get(id)?;
                (c.committer, c.verifier)
            }
            None => return Err(Error::EmptyInput("bcx unveil batch")),
        };
        let mut bits = Vec::with_capacity(ids.len());
        let mut checked = 0;
        let mut bad = 0;
        for &id in ids {
            let c = self.get(id)?;
            if c.committer != committer {
                return Err(Error::Config(
                    "bcx unveil batch spans several committers".into(),
                ));
            }
            if c.seals.is_some() {
                let (bit, v) = self.unveil(session, id)?;
                checked += 1;
                match bit {
                    Some(b) if v.is_accepted() => bits.push(b),
                    _ => {
                        bad += 1;
                        bits.push(false);
                    }
                }
                continue;
            }
            let live: Vec<Row> = c.rows.iter().filter(|r| r.live).copied().collect();
            if live.is_empty() {
                return Err(Error::Resource("bcx unveil: no live rows".into()));
            }
            let first = live[0].left ^ live[0].right;
            checked += 1;
            if live.iter().any(|r| r.left ^ r.right != first) {
                bad += 1;
            }
            bits.push(first);
            for r in &mut self.items[id.0].rows {
                r.live = false;
            }
        }
        self.announce(
            session,
            committer,
            verifier,
            "bcx-open",
            &serde_json::json!({ "ids": ids, "bits": bits }),
        )?;
        let evidence = Evidence {
            class: CheckClass::LinearProof,
            checked,
            mismatches: bad,
            worst_fraction: bad as f64 / checked as f64,
        };
        if bad > 0 {
            return Ok((
                None,
                Verdict::new(Outcome::CheaterIdentified(committer), vec![evidence]),
            ));
        }
        Ok((Some(bits), Verdict::accepted(vec![evidence])))
    }

    /// Opens every live row. The verifier accepts when all rows agree.
    pub fn unveil(&mut self, session: &mut Session, id: BcxId) -> Result<(Option<bool>, Verdict)> {
        let c = self.get(id)?;
        let (committer, verifier) = (c.committer, c.verifier);
        let live: Vec<usize> = c
            .rows
            .iter()
            .enumerate()
            .filter(|(_, r)| r.live)
            .map(|(i, _)| i)
            .collect();
        if live.is_empty() {
            return Err(Error::Resource("bcx unveil: no live rows".into()));
        }
        let mut values = Vec::with_capacity(live.len());
        let mut refused = false;
        for &row in &live {
            let l = self.open_share(session, id, row, Side::Left)?;
            let r = self.open_share(session, id, row, Side::Right)?;
            match (l, r) {
                (Some(l), Some(r)) => values.push((l, r)),
                _ => refused = true,
            }
        }
        for &row in &live {
            self.items[id.0].rows[row].live = false;
        }
        self.announce(
            session,
            committer,
            verifier,
            "bcx-open",
            &serde_json::json!({ "id": id, "rows": values }),
        )?;
        let bit = values.first().map(|(l, r)| l ^ r);
        let disagreeing = values.iter().filter(|(l, r)| Some(l ^ r) != bit).count();
        let evidence = Evidence {
            class: CheckClass::LinearProof,
            checked: live.len(),
            mismatches: disagreeing + usize::from(refused),
            worst_fraction: if refused {
                1.0
            } else {
                disagreeing as f64 / live.len() as f64
            },
        };
        if refused || disagreeing > 0 {
            return Ok((
                None,
                Verdict::new(Outcome::CheaterIdentified(committer), vec![evidence]),
            ));
        }
        Ok((bit, Verdict::accepted(vec![evidence])))
    }
}

fn seal_quantum(
    session: &mut Session,
    committer: PlayerId,
    verifier: PlayerId,
    params: &CommitParams,
    pairs: &[(bool, bool)],
) -> Result<Vec<[CommitmentHandle; 2]>> {
    let relay = PlayerId::ALL
        .into_iter()
        .find(|&p| p != committer && p != verifier)
        .expect("three players");
    let roles = Roles {
        committer,
        relay,
        receiver: verifier,
    };
    let honest = StrategyProfile::honest();
    let seal_one = |session: &mut Session, bit: bool| -> Result<CommitmentHandle> {
        // A commitment that aborts for lack of contributing rounds is retried.
        for _ in 0..8 {
            let (h, v) = commitment::commit(session, bit, params, roles, &honest)?;
            match v.outcome {
                Outcome::Accepted => return Ok(h),
                Outcome::Aborted(_) => continue,
                other => return Err(Error::State(format!("share commitment ended {other}"))),
            }
        }
        Err(Error::State("share commitment aborted repeatedly".into()))
    };
    pairs
        .iter()
        .map(|&(l, r)| Ok([seal_one(session, l)?, seal_one(session, r)?]))
        .collect()
}

/// A commitment from one player to all the others, made of one BCX per
/// counterparty tied together by equality proofs.
#[derive(Debug, Clone)]
pub struct GbcxCommitment {
    pub committer: PlayerId,
    pub parts: Vec<(PlayerId, BcxId)>,
    pub proofs: Vec<ProofRecord>,
}

impl GbcxCommitment {
    pub fn part(&self, counterparty: PlayerId) -> Option<BcxId> {
        self.parts
            .iter()
            .find(|(p, _)| *p == counterparty)
            .map(|&(_, id)| id)
    }

    pub fn passed(&self) -> bool {
        self.proofs.iter().all(|p| p.passed)
    }

    pub fn verdict(&self) -> Verdict {
        let evidence: Vec<Evidence> = self.proofs.iter().map(ProofRecord::evidence).collect();
        if self.passed() {
            Verdict::accepted(evidence)
        } else {
            Verdict::new(Outcome::CheaterIdentified(self.committer), evidence)
        }
    }
}

impl BcxStore {
    /// Commits `bits[i]` to `counterparties[i]`; an honest committer passes
    /// the same bit everywhere. Consecutive parts are proven equal.
    pub fn gbcx_commit_split(
        &mut self,
        session: &mut Session,
        committer: PlayerId,
        counterparties: &[PlayerId],
        bits: &[bool],
        m_rows: usize,
        rows_to_spend: Option<usize>,
    ) -> Result<GbcxCommitment> {
        if counterparties.len() < 2 {
            return Err(Error::Config(
                "gbcx needs at least two counterparties".into(),
            ));
        }
        if bits.len() != counterparties.len() {
            return Err(Error::Config("gbcx: one bit per counterparty".into()));
        }
        let mut parts = Vec::with_capacity(counterparties.len());
        for (&p, &b) in counterparties.iter().zip(bits) {
            parts.push((p, self.commit(session, committer, p, b, m_rows)?));
        }
        let spend = rows_to_spend.unwrap_or(MIN_ROWS);
        let mut proofs = Vec::with_capacity(parts.len() - 1);
        for w in parts.windows(2) {
            let claim = LinearRelationClaim::equality(w[0].1, w[1].1);
            proofs.push(self.prove_linear(session, &claim, Some(spend))?);
        }
        Ok(GbcxCommitment {
            committer,
            parts,
            proofs,
        })
    }

    pub fn gbcx_commit(
        &mut self,
        session: &mut Session,
        committer: PlayerId,
        counterparties: &[PlayerId],
        b: bool,
        m_rows: usize,
    ) -> Result<GbcxCommitment> {
        let bits = vec![b; counterparties.len()];
        self.gbcx_commit_split(session, committer, counterparties, &bits, m_rows, None)
    }

    /// Copies every constituent.
    pub fn gbcx_copy(
        &mut self,
        session: &mut Session,
        src: &GbcxCommitment,
        rows_to_spend: Option<usize>,
    ) -> Result<GbcxCommitment> {
        let mut parts = Vec::with_capacity(src.parts.len());
        let mut proofs = Vec::with_capacity(src.parts.len());
        for &(p, id) in &src.parts {
            let (fresh, proof) = self.copy(session, id, Some(rows_to_spend.unwrap_or(MIN_ROWS)))?;
            parts.push((p, fresh));
            proofs.push(proof);
        }
        Ok(GbcxCommitment {
            committer: src.committer,
            parts,
            proofs,
        })
    }
}
