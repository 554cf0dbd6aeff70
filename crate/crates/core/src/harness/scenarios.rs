//! The scenario catalog: one scripted run per scenario, reporting a verdict
//! and named observations.

use std::fmt;
use std::str::FromStr;

use rand::Rng;

use super::audit::CuriosityRecord;
use super::stats::BatchStats;
use super::ScenarioConfig;
use crate::bcx::{BcxStore, LinearRelationClaim};
use crate::commitment::{commit, unveil, CommitmentHandle, Roles};
use crate::error::{Error, Result};
use crate::gcot::{receiver_guess_other, run_trials, sender_guess_choice, CodewordList};
use crate::netsim::{Payload, PlayerId};
use crate::ot::{
    ot_becomes_tilde_robust_check, ot_transfer, pooled_guess, BindingHorizon, OtEndpoints,
};
use crate::qsim::{intercept_resend, measure, prepare, prepare_random, Basis};
use crate::session::Session;
use crate::strategy::{Behavior, StrategyProfile};
use crate::verdict::{Outcome, Verdict};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Scenario {
    CommitHonest,
    CommitHelenIr,
    CommitAliceFlip,
    CommitBobBaseless,
    OtHonest,
    OtLazyReceiver,
    OtPostCollusion,
    GcotHonest,
    GcotDisruptiveBob,
    GcotCheatingAlice,
    QubitStats,
    BcxSoundness,
}

impl Scenario {
    pub const ALL: [Scenario; 12] = [
        Scenario::CommitHonest,
        Scenario::CommitHelenIr,
        Scenario::CommitAliceFlip,
        Scenario::CommitBobBaseless,
        Scenario::OtHonest,
        Scenario::OtLazyReceiver,
        Scenario::OtPostCollusion,
        Scenario::GcotHonest,
        Scenario::GcotDisruptiveBob,
        Scenario::GcotCheatingAlice,
        Scenario::QubitStats,
        Scenario::BcxSoundness,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Scenario::CommitHonest => "commit-honest",
            Scenario::CommitHelenIr => "commit-helen-ir",
            Scenario::CommitAliceFlip => "commit-alice-flip",
            Scenario::CommitBobBaseless => "commit-bob-baseless",
            Scenario::OtHonest => "ot-honest",
            Scenario::OtLazyReceiver => "ot-lazy-receiver",
            Scenario::OtPostCollusion => "ot-post-collusion",
            Scenario::GcotHonest => "gcot-honest",
            Scenario::GcotDisruptiveBob => "gcot-disruptive-bob",
            Scenario::GcotCheatingAlice => "gcot-cheating-alice",
            Scenario::QubitStats => "qubit-stats",
            Scenario::BcxSoundness => "bcx-soundness",
        }
    }

    pub fn description(self) -> &'static str {
        match self {
            Scenario::CommitHonest => {
                "honest commit and unveil of a uniform bit, with curiosity guesses"
            }
            Scenario::CommitHelenIr => "Helen intercepts and resends every forwarded qubit",
            Scenario::CommitAliceFlip => "Alice defers round 0 and tries to unveil the flipped bit",
            Scenario::CommitBobBaseless => "Bob publishes falsified records and complains",
            Scenario::OtHonest => "honest transfer from Helen to Bob",
            Scenario::OtLazyReceiver => "Bob leaves positions unmeasured and guesses at the check",
            Scenario::OtPostCollusion => "Alice and Bob pool views after a Helen-to-Bob transfer",
            Scenario::GcotHonest => "honest committed transfer from Alice to Bob via Helen",
            Scenario::GcotDisruptiveBob => "Bob complains about every instance",
            Scenario::GcotCheatingAlice => "Alice corrupts positions of her transfers",
            Scenario::QubitStats => {
                "single-qubit statistics: conjugate measurement and intercept-resend"
            }
            Scenario::BcxSoundness => "false and true equality proofs on bit commitments",
        }
    }

    pub fn profile(self, cfg: &ScenarioConfig) -> Result<StrategyProfile> {
        let (p, b) = match self {
            Scenario::CommitHelenIr => (PlayerId::Helen, Behavior::InterceptResendHelen),
            Scenario::CommitAliceFlip => (PlayerId::Alice, Behavior::BindingFlipAlice),
            Scenario::CommitBobBaseless => (PlayerId::Bob, Behavior::BaselessComplainerBob),
            Scenario::OtLazyReceiver => (
                PlayerId::Bob,
                Behavior::LazyReceiver {
                    deferred: cfg.lazy_deferred,
                },
            ),
            Scenario::OtPostCollusion => (
                PlayerId::Bob,
                Behavior::PostTerminationCollusion(PlayerId::Alice),
            ),
            Scenario::GcotDisruptiveBob => (PlayerId::Bob, Behavior::DisruptiveBob),
            Scenario::GcotCheatingAlice => (
                PlayerId::Alice,
                Behavior::CheatingAliceGcot {
                    corrupted: cfg.corrupted,
                },
            ),
            _ => return Ok(StrategyProfile::honest()),
        };
        StrategyProfile::with(p, b)
    }

    /// Commit scenarios re-run a run that aborted for lack of contributing
    /// rounds. The intercept-resend scenario keeps aborts: re-running them
    /// would discard exactly the runs where the attack went unnoticed.
    pub fn reruns_aborts(self) -> bool {
        matches!(
            self,
            Scenario::CommitHonest | Scenario::CommitAliceFlip | Scenario::CommitBobBaseless
        )
    }

    /// Batch-level expectations; each violation is described.
    pub fn violations(self, stats: &BatchStats) -> Vec<String> {
        let runs = stats.runs;
        let all = |label: &str| -> Option<String> {
            let c = stats.count(label);
            (c != runs).then(|| format!("{c}/{runs} runs ended {label}"))
        };
        let metric_at_least = |name: &str, floor: f64| -> Option<String> {
            match stats.metric(name) {
                Some(e) if e.value >= floor => None,
                Some(e) => Some(format!("{name} = {:.4} below {floor}", e.value)),
                None => Some(format!("{name} missing")),
            }
        };
        let metric_near = |name: &str, target: f64, tol: f64| -> Option<String> {
            match stats.metric(name) {
                Some(e) if e.near(target, tol) => None,
                Some(e) => Some(format!(
                    "{name} = {:.4} [{:.4}, {:.4}] not within {tol} of {target}",
                    e.value, e.ci_low, e.ci_high
                )),
                None => Some(format!("{name} missing")),
            }
        };
        let v: Vec<Option<String>> = match self {
            Scenario::CommitHonest => vec![all("Accepted"), metric_at_least("unveil_correct", 1.0)],
            Scenario::CommitHelenIr => vec![metric_at_least("detected", 0.95)],
            Scenario::CommitAliceFlip => vec![match stats.metric("flip_success") {
                Some(e) if e.value < 0.05 => None,
                Some(e) => Some(format!("flip_success = {:.4}", e.value)),
                None => Some("flip_success missing".into()),
            }],
            Scenario::CommitBobBaseless => vec![all("CheaterIdentified(Bob)")],
            Scenario::OtHonest => vec![all("Accepted"), metric_at_least("correct", 1.0)],
            Scenario::OtLazyReceiver => vec![],
            Scenario::OtPostCollusion => vec![
                metric_near("pooled_guess_correct", 0.5, 0.05),
                match stats.metric("breach_flagged") {
                    Some(e) if e.value == 0.0 => None,
                    _ => Some("post-termination breach flagged".into()),
                },
            ],
            Scenario::GcotHonest => vec![all("Accepted"), metric_at_least("output_correct", 1.0)],
            Scenario::GcotDisruptiveBob => vec![all("CheaterIdentified(Bob)")],
            Scenario::GcotCheatingAlice => vec![all("CheaterIdentified(Alice)")],
            Scenario::QubitStats => vec![
                metric_near("cross_basis_one", 0.5, 0.02),
                metric_near("ir_sifted_mismatch", 0.25, 0.03),
            ],
            Scenario::BcxSoundness => vec![
                metric_at_least("honest_claim_passed", 1.0),
                metric_near(
                    "false_claim_passed",
                    2f64.powi(-(stats_rows(stats) as i32)),
                    0.002,
                ),
            ],
        };
        v.into_iter().flatten().collect()
    }
}

fn stats_rows(stats: &BatchStats) -> f64 {
    stats.metric("rows").map_or(8.0, |e| e.value)
}

impl fmt::Display for Scenario {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Scenario {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Scenario::ALL
            .into_iter()
            .find(|sc| sc.name() == s.trim())
            .ok_or_else(|| Error::UnknownScenario(s.to_string()))
    }
}

/// Result of one scripted run.
#[derive(Debug, Clone)]
pub struct RunOutcome {
    pub verdict: Verdict,
    pub observations: Vec<(String, f64)>,
    pub curiosity: Vec<CuriosityRecord>,
}

impl RunOutcome {
    fn new(verdict: Verdict) -> Self {
        Self {
            verdict,
            observations: Vec::new(),
            curiosity: Vec::new(),
        }
    }

    fn obs(mut self, name: &str, value: impl Into<f64>) -> Self {
        self.observations.push((name.to_string(), value.into()));
        self
    }

    fn flag(self, name: &str, value: bool) -> Self {
        self.obs(name, u8::from(value))
    }
}

/// Per-batch caches shared by runs.
#[derive(Debug, Default)]
pub struct RunContext {
    codewords: Option<CodewordList>,
}

/// Basis-matched forwarded positions across published rounds: the checks
/// the committer makes against the receiver's published records.
pub fn published_sifted_checks(h: &CommitmentHandle) -> usize {
    (0..h.params().l)
        .map(|i| h.round_audit(i))
        .filter(|a| a.published)
        .map(|a| {
            a.forwarded
                .iter()
                .filter(|&&(merged, src)| a.receiver_bases[merged] == a.opened_bases[src])
                .count()
        })
        .sum()
}

/// Checks facing a deferred round 0 at unveil: Helen's retained positions
/// and the receiver's basis-matched forwarded positions.
pub fn round0_checks(h: &CommitmentHandle) -> (usize, usize) {
    let a = h.round_audit(0);
    let receiver = a
        .forwarded
        .iter()
        .filter(|&&(merged, src)| a.receiver_bases[merged] == a.opened_bases[src])
        .count();
    (a.retained.len(), receiver)
}

pub fn run_once(
    scenario: Scenario,
    session: &mut Session,
    cfg: &ScenarioConfig,
    ctx: &mut RunContext,
) -> Result<RunOutcome> {
    let profile = scenario.profile(cfg)?;
    match scenario {
        Scenario::CommitHonest => {
            let b: bool = session.env().random();
            let (h, v) = commit(session, b, &cfg.commit, Roles::ALICE_TO_BOB, &profile)?;
            if !v.is_accepted() {
                return Ok(RunOutcome::new(v));
            }
            let (bit, uv) = unveil(session, &h)?;
            let mut out = RunOutcome::new(uv).flag("unveil_correct", bit == Some(b));
            out.curiosity = vec![
                CuriosityRecord::new(PlayerId::Alice, "committed-bit", b, h.committed_bit()),
                CuriosityRecord::new(PlayerId::Helen, "committed-bit", b, h.relay_guess()),
                CuriosityRecord::new(PlayerId::Bob, "committed-bit", b, h.receiver_guess()),
            ];
            Ok(out
                .flag("helen_guess_correct", h.relay_guess() == b)
                .flag("bob_guess_correct", h.receiver_guess() == b))
        }
        Scenario::CommitHelenIr => {
            let b: bool = session.env().random();
            let (h, v) = commit(session, b, &cfg.commit, Roles::ALICE_TO_BOB, &profile)?;
            // an abort means every round was published and passed its checks
            let detected = matches!(v.outcome, Outcome::Rejected | Outcome::CheaterIdentified(_));
            Ok(RunOutcome::new(v)
                .flag("detected", detected)
                .obs("sifted_checks", published_sifted_checks(&h) as f64)
                .obs("published_rounds", h.published_rounds() as f64))
        }
        Scenario::CommitAliceFlip => {
            let b: bool = session.env().random();
            let (h, v) = commit(session, b, &cfg.commit, Roles::ALICE_TO_BOB, &profile)?;
            if !v.is_accepted() {
                return Ok(RunOutcome::new(v));
            }
            let (bit, uv) = unveil(session, &h)?;
            let success = uv.is_accepted() && bit == Some(!b);
            let (retained, receiver) = round0_checks(&h);
            Ok(RunOutcome::new(uv)
                .flag("flip_success", success)
                .flag("round0_contributing", h.contributing_rounds().contains(&0))
                .obs("retained_checks", retained as f64)
                .obs("receiver_checks", receiver as f64))
        }
        Scenario::CommitBobBaseless => {
            let b: bool = session.env().random();
            let (_, v) = commit(session, b, &cfg.commit, Roles::ALICE_TO_BOB, &profile)?;
            let bob = v.identified() == Some(PlayerId::Bob);
            Ok(RunOutcome::new(v).flag("identified_bob", bob))
        }
        Scenario::OtHonest | Scenario::OtLazyReceiver | Scenario::OtPostCollusion => {
            let inputs = [session.env().random(), session.env().random()];
            let c: bool = session.env().random();
            let out = ot_transfer(
                session,
                inputs,
                c,
                &cfg.ot,
                OtEndpoints::direct(PlayerId::Helen, PlayerId::Bob),
                &profile,
                BindingHorizon::UntilCheck,
            )?;
            let other = inputs[usize::from(!c)];
            let mut run = RunOutcome::new(out.verdict.clone());
            if scenario == Scenario::OtLazyReceiver {
                run = run.flag("detected", out.verdict.identified() == Some(PlayerId::Bob));
            }
            if let Some(rec) = &out.record {
                run = run
                    .flag("correct", out.output == Some(inputs[usize::from(c)]))
                    .flag(
                        "receiver_guess_correct",
                        rec.receiver_guess_other() == other,
                    )
                    .flag("sender_guess_correct", rec.sender_guess_choice() == c)
                    .obs("restarts", rec.restarts as f64);
                if scenario == Scenario::OtPostCollusion {
                    let pool = [PlayerId::Alice, PlayerId::Bob];
                    run = run
                        .flag("pooled_guess_correct", pooled_guess(rec, &pool) == other)
                        .flag("breach_flagged", ot_becomes_tilde_robust_check(rec, &pool));
                }
            }
            Ok(run)
        }
        Scenario::GcotHonest | Scenario::GcotDisruptiveBob | Scenario::GcotCheatingAlice => {
            let inputs = [session.env().random(), session.env().random()];
            let b: bool = session.env().random();
            let out = run_trials(session, inputs, b, &cfg.gcot, &profile)?;
            let mut run =
                RunOutcome::new(out.verdict.clone()).obs("trials", out.log.entries.len() as f64);
            match scenario {
                Scenario::GcotHonest => {
                    run = run
                        .flag("output_correct", out.output == Some(inputs[usize::from(b)]))
                        .flag(
                            "first_trial_success",
                            out.log.first_alice_success() == Some(1),
                        );
                    if let Some(inst) = &out.instance {
                        if ctx.codewords.is_none() {
                            ctx.codewords = Some(CodewordList::new(&cfg.gcot.code.build()?)?);
                        }
                        let list = ctx.codewords.as_ref().expect("just built");
                        let bob = receiver_guess_other(list, inst)?;
                        let sender = sender_guess_choice(inst);
                        let other = inputs[usize::from(!b)];
                        run.curiosity = vec![
                            CuriosityRecord::new(PlayerId::Bob, "unchosen-input", other, bob),
                            CuriosityRecord::new(PlayerId::Alice, "choice", b, sender),
                            // Helen relays the same index sets Alice sees.
                            CuriosityRecord::new(PlayerId::Helen, "choice", b, sender),
                        ];
                        run = run
                            .flag("bob_guess_other_correct", bob == other)
                            .flag("alice_guess_choice_correct", sender == b);
                    }
                }
                Scenario::GcotDisruptiveBob => {
                    run = run.flag(
                        "identified_bob",
                        out.verdict.identified() == Some(PlayerId::Bob),
                    );
                }
                _ => {
                    run = run.flag(
                        "identified_alice",
                        out.verdict.identified() == Some(PlayerId::Alice),
                    );
                }
            }
            Ok(run)
        }
        Scenario::QubitStats => {
            let bit: bool = session.rng(PlayerId::Alice).random();
            let q = prepare(bit, Basis::Plus);
            session.net.send_private(
                PlayerId::Alice,
                PlayerId::Bob,
                "qubit",
                Payload::Quantum(vec![q]),
            )?;
            let q = session.net.recv_qubits(PlayerId::Bob, "qubit")?.remove(0);
            let one = measure(q, Basis::Cross, session.rng(PlayerId::Bob));

            // intercept-resend until one position survives sifting
            let mismatch = loop {
                let (q, bit, basis) = prepare_random(session.rng(PlayerId::Alice));
                session.net.send_private(
                    PlayerId::Alice,
                    PlayerId::Helen,
                    "ir-qubit",
                    Payload::Quantum(vec![q]),
                )?;
                let q = session
                    .net
                    .recv_qubits(PlayerId::Helen, "ir-qubit")?
                    .remove(0);
                let eve = Basis::random(session.rng(PlayerId::Helen));
                let q = intercept_resend(q, eve, session.rng(PlayerId::Helen));
                session.net.send_private(
                    PlayerId::Helen,
                    PlayerId::Bob,
                    "ir-qubit",
                    Payload::Quantum(vec![q]),
                )?;
                let q = session
                    .net
                    .recv_qubits(PlayerId::Bob, "ir-qubit")?
                    .remove(0);
                let bob_basis = Basis::random(session.rng(PlayerId::Bob));
                let outcome = measure(q, bob_basis, session.rng(PlayerId::Bob));
                if bob_basis == basis {
                    break outcome != bit;
                }
            };
            Ok(RunOutcome::new(Verdict::accepted(Vec::new()))
                .flag("cross_basis_one", one)
                .flag("ir_sifted_mismatch", mismatch))
        }
        Scenario::BcxSoundness => {
            let rows = cfg.bcx_rows;
            let mut store = BcxStore::default();
            let (a, b) = (PlayerId::Alice, PlayerId::Bob);
            let x = store.commit(session, a, b, false, rows)?;
            let y = store.commit(session, a, b, true, rows)?;
            let false_proof =
                store.prove_linear(session, &LinearRelationClaim::equality(x, y), Some(rows))?;
            let u = store.commit(session, a, b, true, rows)?;
            let w = store.commit(session, a, b, true, rows)?;
            let true_proof =
                store.prove_linear(session, &LinearRelationClaim::equality(u, w), Some(rows))?;
            Ok(RunOutcome::new(false_proof.verdict())
                .flag("false_claim_passed", false_proof.passed)
                .flag("honest_claim_passed", true_proof.passed)
                .obs("rows", rows as f64))
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn names_round_trip() {
        for s in Scenario::ALL {
            assert_eq!(s.name().parse::<Scenario>().unwrap(), s);
        }
        assert!(matches!(
            "nope".parse::<Scenario>(),
            Err(Error::UnknownScenario(_))
        ));
    }

    #[test]
    fn profiles_are_valid() {
        let cfg = ScenarioConfig::default();
        for s in Scenario::ALL {
            s.profile(&cfg).unwrap().validate().unwrap();
        }
    }
}
