//! Deterministic message fabric for the three players.
//!
//! Messages are queued on send and handed out by a round-robin scheduler
//! (Alice, Bob, Helen, environment). Every send appends an event to the run's
//! [`Transcript`]; every delivery appends to the receiver's [`View`]. A party's
//! view is built only from envelopes addressed to it plus broadcasts.

use std::collections::VecDeque;
use std::fmt;
use std::str::FromStr;

use rand::seq::SliceRandom;
use rand::Rng;
use serde::de::DeserializeOwned;
use serde::{Deserialize, Serialize};
use serde_json::Value;
use sha2::{Digest, Sha256};

use crate::error::{Error, IntegrityFault, Result};
use crate::qsim::{Qubit, QubitRegister};
use crate::verdict::Verdict;

pub const DEFAULT_MAX_ROUNDS: u64 = 1_000_000;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum PlayerId {
    Alice,
    Bob,
    Helen,
}

impl PlayerId {
    pub const ALL: [PlayerId; 3] = [PlayerId::Alice, PlayerId::Bob, PlayerId::Helen];

    pub fn index(self) -> usize {
        match self {
            PlayerId::Alice => 0,
            PlayerId::Bob => 1,
            PlayerId::Helen => 2,
        }
    }

    pub fn name(self) -> &'static str {
        match self {
            PlayerId::Alice => "Alice",
            PlayerId::Bob => "Bob",
            PlayerId::Helen => "Helen",
        }
    }
}

impl fmt::Display for PlayerId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for PlayerId {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim() {
            "Alice" | "alice" => Ok(PlayerId::Alice),
            "Bob" | "bob" => Ok(PlayerId::Bob),
            "Helen" | "helen" => Ok(PlayerId::Helen),
            other => Err(Error::UnknownPlayer(other.to_string())),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Recipient {
    Player(PlayerId),
    Broadcast,
}

impl fmt::Display for Recipient {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Recipient::Player(p) => p.fmt(f),
            Recipient::Broadcast => f.write_str("broadcast"),
        }
    }
}

#[derive(Debug)]
pub enum Payload {
    Classical(Value),
    Quantum(Vec<Qubit>),
}

impl Payload {
    pub fn is_quantum(&self) -> bool {
        matches!(self, Payload::Quantum(_))
    }

    /// JSON rendering. Qubits render as their `(bit, basis)` states with no
    /// origin information.
    pub fn to_json(&self) -> Value {
        match self {
            Payload::Classical(v) => v.clone(),
            Payload::Quantum(qs) => Value::Array(
                qs.iter()
                    .map(|q| {
                        let (bit, basis) = q.state();
                        serde_json::json!([bit, basis])
                    })
                    .collect(),
            ),
        }
    }
}

pub fn digest_json(v: &Value) -> String {
    let bytes = serde_json::to_vec(v).expect("json values always serialize");
    hex::encode(Sha256::digest(&bytes))
}

#[derive(Debug)]
pub struct Envelope {
    pub sender: PlayerId,
    pub receiver: Recipient,
    pub round: u64,
    pub tag: String,
    pub payload: Payload,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EventRecord {
    pub round: u64,
    pub sender: String,
    pub receiver: String,
    pub tag: String,
    pub payload_digest: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub payload: Option<Value>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Complaint {
    pub by: PlayerId,
    pub accused: PlayerId,
}

pub const TAG_COMPLAINT: &str = "complaint";
pub const TAG_IDENTIFY: &str = "identify";
pub const TAG_COLLUSION_FLAG: &str = "collusion-flag";

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Transcript {
    pub run_id: String,
    pub scenario: String,
    pub seed: u64,
    pub events: Vec<EventRecord>,
    pub verdict: Option<Verdict>,
}

impl Transcript {
    pub fn new(run_id: impl Into<String>, scenario: impl Into<String>, seed: u64) -> Self {
        Self {
            run_id: run_id.into(),
            scenario: scenario.into(),
            seed,
            events: Vec::new(),
            verdict: None,
        }
    }

    pub fn to_json_string(&self) -> String {
        serde_json::to_string_pretty(self).expect("transcript serializes")
    }

    pub fn from_json_str(s: &str) -> Result<Self> {
        serde_json::from_str(s).map_err(|e| Error::MalformedTranscript(e.to_string()))
    }

    /// Complaint annotations in order of appearance.
    pub fn complaints(&self) -> Result<Vec<Complaint>> {
        self.events
            .iter()
            .filter(|e| e.tag == TAG_COMPLAINT)
            .map(|e| {
                let by: PlayerId = e.sender.parse()?;
                let payload = e.payload.as_ref().ok_or_else(|| {
                    Error::MalformedTranscript("complaint without payload".into())
                })?;
                let accused = payload
                    .get("accused")
                    .and_then(Value::as_str)
                    .ok_or_else(|| Error::MalformedTranscript("complaint without accused".into()))?
                    .parse()?;
                Ok(Complaint { by, accused })
            })
            .collect()
    }

    pub fn events_tagged<'a>(&'a self, tag: &'a str) -> impl Iterator<Item = &'a EventRecord> + 'a {
        self.events.iter().filter(move |e| e.tag == tag)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ViewEntry {
    pub round: u64,
    pub sender: PlayerId,
    pub broadcast: bool,
    pub tag: String,
    pub payload: Value,
}

/// Everything one party has received.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct View {
    pub entries: Vec<ViewEntry>,
}

impl View {
    pub fn to_json_string(&self) -> String {
        serde_json::to_string(self).expect("view serializes")
    }

    pub fn broadcasts(&self) -> impl Iterator<Item = &ViewEntry> {
        self.entries.iter().filter(|e| e.broadcast)
    }
}

#[derive(Debug)]
pub struct Delivered {
    pub round: u64,
    pub sender: PlayerId,
    pub tag: String,
    pub payload: Payload,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Activation {
    Party(PlayerId),
    Environment,
    Terminated,
}

#[derive(Debug)]
pub struct Network {
    round: u64,
    max_rounds: u64,
    steps: u64,
    cursor: usize,
    reveal_private: bool,
    queues: [VecDeque<Envelope>; 3],
    inbox: [VecDeque<Delivered>; 3],
    views: [View; 3],
    transcript: Transcript,
}

impl Network {
    pub fn new(transcript: Transcript) -> Self {
        Self {
            round: 0,
            max_rounds: DEFAULT_MAX_ROUNDS,
            steps: 0,
            cursor: 0,
            reveal_private: false,
            queues: Default::default(),
            inbox: Default::default(),
            views: Default::default(),
            transcript,
        }
    }

    pub fn with_max_rounds(mut self, cap: u64) -> Self {
        self.max_rounds = cap;
        self
    }

    pub fn set_reveal_private(&mut self, reveal: bool) {
        self.reveal_private = reveal;
    }

    pub fn round(&self) -> u64 {
        self.round
    }

    pub fn transcript(&self) -> &Transcript {
        &self.transcript
    }

    pub fn transcript_mut(&mut self) -> &mut Transcript {
        &mut self.transcript
    }

    pub fn into_transcript(self) -> Transcript {
        self.transcript
    }

    pub fn view(&self, p: PlayerId) -> &View {
        &self.views[p.index()]
    }

    fn next_round(&mut self) -> Result<u64> {
        self.round += 1;
        if self.round > self.max_rounds {
            return Err(Error::NonTermination {
                cap: self.max_rounds,
            });
        }
        Ok(self.round)
    }

    pub fn send_private(
        &mut self,
        from: PlayerId,
        to: PlayerId,
        tag: &str,
        payload: Payload,
    ) -> Result<()> {
        let round = self.next_round()?;
        let json = payload.to_json();
        self.transcript.events.push(EventRecord {
            round,
            sender: from.to_string(),
            receiver: to.to_string(),
            tag: tag.to_string(),
            payload_digest: digest_json(&json),
            payload: self.reveal_private.then_some(json),
        });
        self.queues[to.index()].push_back(Envelope {
            sender: from,
            receiver: Recipient::Player(to),
            round,
            tag: tag.to_string(),
            payload,
        });
        Ok(())
    }

    /// Sends one classical payload to every party, sender included. The
    /// single payload argument makes equivocation unrepresentable.
    pub fn broadcast(&mut self, from: PlayerId, tag: &str, payload: Payload) -> Result<()> {
        let Payload::Classical(value) = payload else {
            return Err(Error::MalformedMessage(format!(
                "broadcast '{tag}' carries qubits"
            )));
        };
        let round = self.next_round()?;
        self.transcript.events.push(EventRecord {
            round,
            sender: from.to_string(),
            receiver: Recipient::Broadcast.to_string(),
            tag: tag.to_string(),
            payload_digest: digest_json(&value),
            payload: Some(value.clone()),
        });
        for p in PlayerId::ALL {
            self.queues[p.index()].push_back(Envelope {
                sender: from,
                receiver: Recipient::Broadcast,
                round,
                tag: tag.to_string(),
                payload: Payload::Classical(value.clone()),
            });
        }
        Ok(())
    }

    pub fn send_json<T: Serialize>(
        &mut self,
        from: PlayerId,
        to: PlayerId,
        tag: &str,
        value: &T,
    ) -> Result<()> {
        let v = serde_json::to_value(value).map_err(|e| Error::MalformedMessage(e.to_string()))?;
        self.send_private(from, to, tag, Payload::Classical(v))
    }

    pub fn broadcast_json<T: Serialize>(
        &mut self,
        from: PlayerId,
        tag: &str,
        value: &T,
    ) -> Result<()> {
        let v = serde_json::to_value(value).map_err(|e| Error::MalformedMessage(e.to_string()))?;
        self.broadcast(from, tag, Payload::Classical(v))
    }

    /// Records an annotation (complaint, identification, flag) as a broadcast.
    pub fn annotate(&mut self, by: PlayerId, tag: &str, value: Value) -> Result<()> {
        self.broadcast(by, tag, Payload::Classical(value))
    }

    pub fn complain(&mut self, by: PlayerId, accused: PlayerId, reason: &str) -> Result<()> {
        self.annotate(
            by,
            TAG_COMPLAINT,
            serde_json::json!({ "accused": accused, "reason": reason }),
        )
    }

    /// Activates the next slot in round-robin order and delivers its queue.
    pub fn scheduler_step(&mut self) -> Result<Activation> {
        if self.queues.iter().all(VecDeque::is_empty) {
            return Ok(Activation::Terminated);
        }
        self.steps += 1;
        if self.steps > self.max_rounds {
            return Err(Error::NonTermination {
                cap: self.max_rounds,
            });
        }
        let slot = self.cursor;
        self.cursor = (self.cursor + 1) % 4;
        if slot == 3 {
            return Ok(Activation::Environment);
        }
        let player = PlayerId::ALL[slot];
        while let Some(env) = self.queues[slot].pop_front() {
            self.views[slot].entries.push(ViewEntry {
                round: env.round,
                sender: env.sender,
                broadcast: env.receiver == Recipient::Broadcast,
                tag: env.tag.clone(),
                payload: env.payload.to_json(),
            });
            self.inbox[slot].push_back(Delivered {
                round: env.round,
                sender: env.sender,
                tag: env.tag,
                payload: env.payload,
            });
        }
        Ok(Activation::Party(player))
    }

    pub fn flush(&mut self) -> Result<()> {
        while self.scheduler_step()? != Activation::Terminated {}
        Ok(())
    }

    pub fn recv(&mut self, to: PlayerId, tag: &str) -> Result<Delivered> {
        let find = |inbox: &VecDeque<Delivered>| inbox.iter().position(|d| d.tag == tag);
        let pos = match find(&self.inbox[to.index()]) {
            Some(p) => p,
            None => {
                self.flush()?;
                find(&self.inbox[to.index()]).ok_or_else(|| Error::MissingMessage {
                    receiver: to.to_string(),
                    tag: tag.to_string(),
                })?
            }
        };
        Ok(self.inbox[to.index()]
            .remove(pos)
            .expect("position is valid"))
    }

    pub fn recv_json<T: DeserializeOwned>(&mut self, to: PlayerId, tag: &str) -> Result<T> {
        match self.recv(to, tag)?.payload {
            Payload::Classical(v) => serde_json::from_value(v)
                .map_err(|e| Error::MalformedMessage(format!("{tag}: {e}"))),
            Payload::Quantum(_) => Err(Error::MalformedMessage(format!(
                "{tag}: expected classical payload"
            ))),
        }
    }

    pub fn recv_qubits(&mut self, to: PlayerId, tag: &str) -> Result<Vec<Qubit>> {
        match self.recv(to, tag)?.payload {
            Payload::Quantum(qs) => Ok(qs),
            Payload::Classical(_) => {
                Err(Error::MalformedMessage(format!("{tag}: expected qubits")))
            }
        }
    }

    /// Sends `value` from `from` to `to` and returns what `to` received.
    pub fn exchange<T: Serialize + DeserializeOwned>(
        &mut self,
        from: PlayerId,
        to: PlayerId,
        tag: &str,
        value: &T,
    ) -> Result<T> {
        self.send_json(from, to, tag, value)?;
        self.recv_json(to, tag)
    }

    /// Broadcasts `value` and returns the copy delivered to every party.
    /// Drains the copies from all inboxes so they do not linger.
    pub fn publish<T: Serialize + DeserializeOwned>(
        &mut self,
        from: PlayerId,
        tag: &str,
        value: &T,
    ) -> Result<T> {
        self.broadcast_json(from, tag, value)?;
        let mut out = None;
        for p in PlayerId::ALL {
            let got: T = self.recv_json(p, tag)?;
            out.get_or_insert(got);
        }
        Ok(out.expect("three parties"))
    }

    /// Routes a classical message through `via`, who re-sends it under its own
    /// name. The final receiver sees only `via` as the sender.
    pub fn relay<T: Serialize + DeserializeOwned>(
        &mut self,
        from: PlayerId,
        via: PlayerId,
        to: PlayerId,
        tag: &str,
        value: &T,
    ) -> Result<T> {
        if from == via {
            return self.exchange(from, to, tag, value);
        }
        let hop: T = self.exchange(from, via, tag, value)?;
        self.exchange(via, to, tag, &hop)
    }

    /// Qubit counterpart of [`Network::relay`].
    pub fn relay_qubits(
        &mut self,
        from: PlayerId,
        via: PlayerId,
        to: PlayerId,
        tag: &str,
        qubits: Vec<Qubit>,
    ) -> Result<Vec<Qubit>> {
        let mut qs = qubits;
        if from != via {
            self.send_private(from, via, tag, Payload::Quantum(qs))?;
            qs = self.recv_qubits(via, tag)?;
        }
        self.send_private(via, to, tag, Payload::Quantum(qs))?;
        self.recv_qubits(to, tag)
    }

    /// Drops undelivered inbox content for every party.
    pub fn drain_inboxes(&mut self) -> Result<()> {
        self.flush()?;
        for inbox in &mut self.inbox {
            inbox.clear();
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Origin {
    /// Position `i` of the source (Alice's) string.
    Source(usize),
    /// The relay's own decoy number `i`.
    Decoy(usize),
}

/// How the relay merges a substring of the source string with its own decoys.
/// Known to the relay only.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ForwardingPlan {
    slots: Vec<Origin>,
}

/// What the relay tells the source: which merged positions carry which of its
/// qubits. Everything else in the merged stream is a decoy.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ForwardingDisclosure {
    /// `(merged position, source index)` pairs.
    pub forwarded: Vec<(usize, usize)>,
}

impl ForwardingDisclosure {
    pub fn source_indices(&self) -> Vec<usize> {
        let mut v: Vec<usize> = self.forwarded.iter().map(|&(_, s)| s).collect();
        v.sort_unstable();
        v
    }
}

impl ForwardingPlan {
    pub fn new(slots: Vec<Origin>) -> Self {
        Self { slots }
    }

    /// Forwards `forward` uniformly chosen source positions and interleaves
    /// `decoys` decoys in a uniformly random order.
    pub fn random<R: Rng + ?Sized>(
        source_len: usize,
        forward: usize,
        decoys: usize,
        rng: &mut R,
    ) -> Self {
        let mut picked = rand::seq::index::sample(rng, source_len, forward).into_vec();
        picked.sort_unstable();
        let mut slots: Vec<Origin> = picked
            .into_iter()
            .map(Origin::Source)
            .chain((0..decoys).map(Origin::Decoy))
            .collect();
        slots.shuffle(rng);
        Self { slots }
    }

    pub fn slots(&self) -> &[Origin] {
        &self.slots
    }

    pub fn len(&self) -> usize {
        self.slots.len()
    }

    pub fn is_empty(&self) -> bool {
        self.slots.is_empty()
    }

    /// Source indices that were forwarded, ascending.
    pub fn source_positions(&self) -> Vec<usize> {
        let mut v: Vec<usize> = self
            .slots
            .iter()
            .filter_map(|o| match o {
                Origin::Source(i) => Some(*i),
                Origin::Decoy(_) => None,
            })
            .collect();
        v.sort_unstable();
        v
    }

    /// Source indices kept back by the relay, ascending.
    pub fn retained_positions(&self, source_len: usize) -> Vec<usize> {
        let fwd = self.source_positions();
        (0..source_len)
            .filter(|i| fwd.binary_search(i).is_err())
            .collect()
    }

    /// Merged positions occupied by decoys, with the decoy number.
    pub fn decoy_positions(&self) -> Vec<(usize, usize)> {
        self.slots
            .iter()
            .enumerate()
            .filter_map(|(m, o)| match o {
                Origin::Decoy(d) => Some((m, *d)),
                Origin::Source(_) => None,
            })
            .collect()
    }

    pub fn disclosure(&self) -> ForwardingDisclosure {
        ForwardingDisclosure {
            forwarded: self
                .slots
                .iter()
                .enumerate()
                .filter_map(|(m, o)| match o {
                    Origin::Source(s) => Some((m, *s)),
                    Origin::Decoy(_) => None,
                })
                .collect(),
        }
    }

    pub fn validate(&self, source_len: usize, decoy_len: usize) -> Result<()> {
        let mut seen_src = vec![false; source_len];
        let mut seen_decoy = vec![false; decoy_len];
        for o in &self.slots {
            let (seen, i, what) = match *o {
                Origin::Source(i) => (&mut seen_src, i, "source"),
                Origin::Decoy(i) => (&mut seen_decoy, i, "decoy"),
            };
            match seen.get_mut(i) {
                Some(s) if !*s => *s = true,
                Some(_) => {
                    return Err(IntegrityFault::InconsistentPlan(format!(
                        "{what} index {i} used twice"
                    ))
                    .into())
                }
                None => {
                    return Err(IntegrityFault::InconsistentPlan(format!(
                        "{what} index {i} out of range"
                    ))
                    .into())
                }
            }
        }
        if seen_decoy.iter().any(|s| !s) {
            return Err(IntegrityFault::InconsistentPlan("unused decoy".into()).into());
        }
        Ok(())
    }
}

/// Builds the merged stream the relay sends on. Forwarded qubits are taken
/// out of `source`; the retained ones stay there.
pub fn anonymized_forward(
    plan: &ForwardingPlan,
    source: &mut QubitRegister,
    decoys: Vec<Qubit>,
) -> Result<Vec<Qubit>> {
    plan.validate(source.len(), decoys.len())?;
    let mut decoys: Vec<Option<Qubit>> = decoys.into_iter().map(Some).collect();
    plan.slots
        .iter()
        .map(|o| match *o {
            Origin::Source(i) => source.take(i),
            Origin::Decoy(i) => Ok(decoys[i]
                .take()
                .expect("validated plan uses each decoy once")),
        })
        .collect()
}
