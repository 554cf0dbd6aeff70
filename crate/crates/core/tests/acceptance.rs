//! Acceptance criteria, one PASS/FAIL line each. Closed-form oracles are
//! computed here, independently of the library.

use std::collections::BTreeMap;
use std::process::ExitCode;
use std::time::Instant;

use rand::Rng;
use statrs::distribution::{ChiSquared, ContinuousCDF};
use triparty::advstruct::{classical_feasible, quantum_feasible, AdversaryStructure, PlayerSet};
use triparty::bcx::{BcxStore, LinearRelationClaim};
use triparty::code::ReedMuller;
use triparty::commitment::{commit, unveil, CommitParams, Roles};
use triparty::gcot::{run_trials, GcotParams};
use triparty::harness::{
    curiosity_audit, run_scenario, run_scenario_with, BatchResult, Scenario, ScenarioConfig,
};
use triparty::netsim::TAG_IDENTIFY;
use triparty::ot::{ot_transfer, BindingHorizon, OtEndpoints, OtParams, Route};
use triparty::qsim::{intercept_resend, measure, prepare, prepare_random, Basis};
use triparty::rng::derive_seed;
use triparty::session::Session;
use triparty::strategy::StrategyProfile;
use triparty::{PlayerId, Result};

const SEED: u64 = 20_240_601;

type Criterion = fn() -> Result<Report>;

struct Report {
    pass: bool,
    lines: Vec<String>,
}

impl Report {
    fn new() -> Self {
        Self {
            pass: true,
            lines: Vec::new(),
        }
    }

    fn check(&mut self, ok: bool, line: String) {
        self.pass &= ok;
        self.lines
            .push(format!("{} {line}", if ok { "ok  " } else { "FAIL" }));
    }
}

fn batch(scenario: Scenario, seed: u64, runs: usize, params: &[&str]) -> Result<BatchResult> {
    let mut cfg = ScenarioConfig::new(scenario, seed, runs);
    for p in params {
        cfg.set_param(p)?;
    }
    run_scenario(&cfg)
}

fn metric(r: &BatchResult, name: &str) -> f64 {
    r.stats.metric(name).map_or(f64::NAN, |e| e.value)
}

fn mean(xs: &[f64]) -> f64 {
    xs.iter().sum::<f64>() / xs.len() as f64
}

fn choose(n: u64, k: u64) -> f64 {
    (0..k).fold(1.0, |acc, i| acc * (n - i) as f64 / (i + 1) as f64)
}

/// P(Bin(k, 1/2) <= j).
fn half_binomial_cdf(k: u64, j: u64) -> f64 {
    (0..=j.min(k)).map(|i| choose(k, i)).sum::<f64>() / 2f64.powi(k as i32)
}

/// Largest mismatch count a check over `k` positions tolerates at `tau`.
fn tolerated(k: u64, tau: f64) -> u64 {
    (0..=k)
        .take_while(|&j| k == 0 || j as f64 / k as f64 <= tau)
        .last()
        .unwrap_or(0)
}

fn honest_completeness() -> Result<Report> {
    let mut rep = Report::new();
    let honest = StrategyProfile::honest();

    for roles in [Roles::ALICE_TO_BOB, Roles::BOB_TO_ALICE] {
        for b in [false, true] {
            let mut fails = 0;
            for i in 0..200 {
                let mut s = Session::new("acceptance-commit", derive_seed(SEED + u64::from(b), i));
                let (h, v) = commit(&mut s, b, &CommitParams::default(), roles, &honest)?;
                let good = v.is_accepted() && {
                    let (bit, uv) = unveil(&mut s, &h)?;
                    uv.is_accepted() && bit == Some(b)
                };
                fails += usize::from(!good);
            }
            rep.check(
                fails == 0,
                format!(
                    "commit/unveil {}->{} b={}: {fails} failures in 200",
                    roles.committer,
                    roles.receiver,
                    u8::from(b)
                ),
            );
        }
    }

    let routes = [
        OtEndpoints::direct(PlayerId::Helen, PlayerId::Bob),
        OtEndpoints {
            sender: PlayerId::Alice,
            receiver: PlayerId::Bob,
            route: Route::ViaHelen,
        },
    ];
    for ends in routes {
        let mut fails = 0;
        for combo in 0..8u64 {
            let (x, c) = ([combo & 1 == 1, combo & 2 == 2], combo & 4 == 4);
            for i in 0..200 {
                let mut s = Session::new("acceptance-ot", derive_seed(SEED + combo, i));
                let out = ot_transfer(
                    &mut s,
                    x,
                    c,
                    &OtParams::default(),
                    ends,
                    &honest,
                    BindingHorizon::UntilCheck,
                )?;
                fails += usize::from(
                    !(out.verdict.is_accepted() && out.output == Some(x[usize::from(c)])),
                );
            }
        }
        rep.check(
            fails == 0,
            format!(
                "OT {}->{} {:?}: {fails} failures in 8x200",
                ends.sender, ends.receiver, ends.route
            ),
        );
    }

    let mut fails = 0;
    for combo in 0..8u64 {
        let (a, b) = ([combo & 1 == 1, combo & 2 == 2], combo & 4 == 4);
        for i in 0..200 {
            let mut s = Session::new("acceptance-gcot", derive_seed(SEED + 100 + combo, i));
            let mut out = run_trials(&mut s, a, b, &GcotParams::default(), &honest)?;
            let want = a[usize::from(b)];
            let mut good = out.verdict.is_accepted() && out.output == Some(want);
            if good {
                let id = out
                    .output_commitment
                    .as_ref()
                    .and_then(|g| g.part(PlayerId::Helen))
                    .expect("accepted run commits its output");
                let (bit, v) = out.receiver_store.unveil(&mut s, id)?;
                good = v.is_accepted() && bit == Some(want);
            }
            fails += usize::from(!good);
        }
    }
    rep.check(
        fails == 0,
        format!("GCOT all 8 (a0,a1,b): {fails} failures in 8x200, output commitment unveiled"),
    );
    Ok(rep)
}

fn qubit_statistics() -> Result<Report> {
    let mut rep = Report::new();
    let mut s = Session::new("acceptance-qubit", SEED);
    let trials = 10_000;
    let ones = (0..trials)
        .filter(|_| {
            let bit: bool = s.rng(PlayerId::Alice).random();
            measure(
                prepare(bit, Basis::Plus),
                Basis::Cross,
                s.rng(PlayerId::Bob),
            )
        })
        .count();
    let f = ones as f64 / trials as f64;
    rep.check(
        (f - 0.5).abs() < 0.02,
        format!("cross-basis freq(1) = {f:.4} over {trials}, oracle 0.5 +- 0.02"),
    );

    let (mut sifted, mut mismatched) = (0, 0);
    while sifted < trials {
        let (q, bit, basis) = prepare_random(s.rng(PlayerId::Alice));
        let eve = Basis::random(s.rng(PlayerId::Helen));
        let q = intercept_resend(q, eve, s.rng(PlayerId::Helen));
        let bob = Basis::random(s.rng(PlayerId::Bob));
        let out = measure(q, bob, s.rng(PlayerId::Bob));
        if bob == basis {
            sifted += 1;
            mismatched += usize::from(out != bit);
        }
    }
    // wrong guess half the time, then a uniform outcome
    let oracle = 0.5 * 0.5;
    let rate = mismatched as f64 / sifted as f64;
    rep.check(
        (rate - oracle).abs() <= 0.03,
        format!(
            "intercept-resend sifted mismatch = {rate:.4} over {sifted}, oracle {oracle} +- 0.03"
        ),
    );
    let r = batch(Scenario::QubitStats, SEED, 2000, &[])?;
    let v = r.violations()?;
    rep.check(
        v.is_empty(),
        format!("qubit-stats scenario over network: {v:?}"),
    );
    Ok(rep)
}

fn concealing() -> Result<Report> {
    let mut rep = Report::new();
    let r = batch(Scenario::CommitHonest, SEED, 1000, &[])?;
    for e in curiosity_audit(&r.curiosity)? {
        let (target, tol) = if e.party == PlayerId::Alice {
            (1.0, 0.0)
        } else {
            (0.5, 0.05)
        };
        rep.check(
            (e.accuracy - target).abs() <= tol,
            format!(
                "{} guesses the committed bit with accuracy {:.4} [{:.4}, {:.4}] over {}, target {target} +- {tol}",
                e.party, e.accuracy, e.ci_low, e.ci_high, e.runs
            ),
        );
    }
    Ok(rep)
}

fn binding() -> Result<Report> {
    let mut rep = Report::new();
    let tau = CommitParams::default().tau;
    for n in [16usize, 32, 64] {
        let r = batch(
            Scenario::CommitAliceFlip,
            SEED + n as u64,
            400,
            &[&format!("commit.n={n}")],
        )?;
        let (mut success, mut oracle) = (Vec::new(), Vec::new());
        for rec in &r.records {
            let Some(&ok) = rec.observations.get("flip_success") else {
                continue;
            };
            let o = &rec.observations;
            let p = if o["round0_contributing"] == 1.0 {
                let kr = o["retained_checks"] as u64;
                let kb = o["receiver_checks"] as u64;
                half_binomial_cdf(kr, tolerated(kr, tau))
                    * half_binomial_cdf(kb, tolerated(kb, tau))
            } else {
                0.0
            };
            success.push(ok);
            oracle.push(p);
        }
        let (s, o) = (mean(&success), mean(&oracle));
        rep.check(
            !success.is_empty() && (s - o).abs() <= 0.05,
            format!(
                "n={n}: flip success {s:.4} vs oracle {o:.6} over {} runs",
                success.len()
            ),
        );
        if n == CommitParams::default().n {
            rep.check(s < 0.05, format!("defaults: flip success {s:.4} < 0.05"));
        }
    }
    Ok(rep)
}

fn disturbance_detection() -> Result<Report> {
    let mut rep = Report::new();
    let r = batch(Scenario::CommitHelenIr, SEED, 500, &[])?;
    let d = metric(&r, "detected");
    rep.check(
        d >= 0.95,
        format!("defaults: detected-or-rejected {d:.4} over 500 runs, need >= 0.95"),
    );

    for l in [1usize, 2, 3, 4, 6] {
        let r = batch(
            Scenario::CommitHelenIr,
            SEED + l as u64,
            400,
            &[&format!("commit.l={l}"), "commit.n=8"],
        )?;
        let (mut det, mut oracle, mut ks) = (Vec::new(), Vec::new(), Vec::new());
        for rec in &r.records {
            let Some(&d) = rec.observations.get("detected") else {
                continue;
            };
            let k = rec.observations["sifted_checks"];
            det.push(d);
            ks.push(k);
            oracle.push(1.0 - 0.75f64.powf(k));
        }
        let (d, o) = (mean(&det), mean(&oracle));
        rep.check(
            (d - o).abs() <= 0.05,
            format!(
                "n=8 l={l}: mean checks {:.2}, detected {d:.4} vs 1-(3/4)^k oracle {o:.4}",
                mean(&ks)
            ),
        );
    }
    Ok(rep)
}

fn cheater_identification() -> Result<Report> {
    let mut rep = Report::new();
    for (scenario, cheater) in [
        (Scenario::GcotDisruptiveBob, "CheaterIdentified(Bob)"),
        (Scenario::GcotCheatingAlice, "CheaterIdentified(Alice)"),
    ] {
        let mut identify_counts = Vec::new();
        let r = run_scenario_with(&ScenarioConfig::new(scenario, SEED, 200), |t| {
            identify_counts.push(t.events.iter().filter(|e| e.tag == TAG_IDENTIFY).count());
            Ok(())
        })?;
        let hits = r.stats.count(cheater);
        let bad = identify_counts.iter().filter(|&&c| c != 1).count();
        rep.check(hits == 200, format!("{scenario}: {hits}/200 {cheater}"));
        rep.check(
            bad == 0,
            format!("{scenario}: {bad} runs without exactly one identification"),
        );
    }
    Ok(rep)
}

fn ot_privacy() -> Result<Report> {
    let mut rep = Report::new();
    let near = |x: f64| (x - 0.5).abs() <= 0.05;
    let r = batch(Scenario::OtHonest, SEED, 1000, &[])?;
    for m in ["receiver_guess_correct", "sender_guess_correct"] {
        let v = metric(&r, m);
        rep.check(
            near(v),
            format!("OT {m} = {v:.4} over 1000, target 0.5 +- 0.05"),
        );
    }
    let r = batch(Scenario::OtPostCollusion, SEED, 1000, &[])?;
    let v = metric(&r, "pooled_guess_correct");
    rep.check(
        near(v),
        format!("post-termination Alice+Bob pooled guess = {v:.4} over 1000"),
    );
    let b = metric(&r, "breach_flagged");
    rep.check(
        b == 0.0,
        format!("post-termination breach flagged in {b:.4} of runs"),
    );

    let r = batch(Scenario::GcotHonest, SEED, 1000, &[])?;
    for e in curiosity_audit(&r.curiosity)? {
        rep.check(
            near(e.accuracy),
            format!(
                "GCOT {} on {} = {:.4} over {}",
                e.party, e.secret, e.accuracy, e.runs
            ),
        );
    }
    Ok(rep)
}

fn bcx_soundness() -> Result<Report> {
    let mut rep = Report::new();
    let rows = 8;
    let r = batch(
        Scenario::BcxSoundness,
        SEED,
        10_000,
        &[&format!("bcx.rows={rows}")],
    )?;
    // each slot's public coin exposes the inconsistent side with probability 1/2
    let oracle = 0.5f64.powi(rows);
    let f = metric(&r, "false_claim_passed");
    rep.check(
        (f - oracle).abs() <= 0.002,
        format!("false equality passes {f:.5} over 10^4, oracle {oracle:.5} +- 0.002"),
    );
    let h = metric(&r, "honest_claim_passed");
    rep.check(h == 1.0, format!("honest proofs pass {h:.4}"));

    // The verifier's view of an honest proof must not depend on the bit.
    let mut table: BTreeMap<(bool, Vec<bool>), [u64; 2]> = BTreeMap::new();
    for v in [false, true] {
        for i in 0..2000 {
            let mut s = Session::new("acceptance-zk", derive_seed(SEED + u64::from(v), i));
            let mut store = BcxStore::default();
            let x = store.commit(&mut s, PlayerId::Alice, PlayerId::Bob, v, rows as usize)?;
            let y = store.commit(&mut s, PlayerId::Alice, PlayerId::Bob, v, rows as usize)?;
            let proof = store.prove_linear(
                &mut s,
                &LinearRelationClaim::equality(x, y),
                Some(rows as usize),
            )?;
            for slot in &proof.slots {
                table
                    .entry((slot.announced[0], slot.opened.clone()))
                    .or_default()[usize::from(v)] += 1;
            }
        }
    }
    let totals = [0, 1].map(|c| table.values().map(|r| r[c]).sum::<u64>() as f64);
    let grand = totals[0] + totals[1];
    let stat: f64 = table
        .values()
        .flat_map(|row| {
            let rs = (row[0] + row[1]) as f64;
            (0..2).map(move |c| {
                let e = rs * totals[c] / grand;
                (row[c] as f64 - e).powi(2) / e
            })
        })
        .sum();
    let df = (table.len() - 1) as f64;
    let p = if df > 0.0 {
        1.0 - ChiSquared::new(df).expect("positive df").cdf(stat)
    } else {
        1.0
    };
    rep.check(
        p > 0.01,
        format!(
            "zero knowledge: chi-square {stat:.3} on {df} df over {} view cells, p = {p:.4}",
            table.len()
        ),
    );
    Ok(rep)
}

fn code_machinery() -> Result<Report> {
    let mut rep = Report::new();
    let rm = ReedMuller::new(1, 4)?;
    // affine functions on four variables, evaluated at every position
    let code: Vec<u64> = (0..32u64)
        .map(|f| {
            (0..16u64).fold(0, |w, p| {
                w | (((f >> 4) ^ u64::from((f & p).count_ones() % 2 == 1)) & 1) << p
            })
        })
        .collect();
    let mut lib = rm.codewords();
    lib.sort_unstable();
    let mut mine = code.clone();
    mine.sort_unstable();
    rep.check(
        lib == mine,
        "library codewords equal the affine-function code".into(),
    );

    let patterns: Vec<u64> = (0..1u64 << 16).filter(|e| e.count_ones() <= 3).collect();
    let nearest = |w: u64| {
        let best = code
            .iter()
            .map(|c| (c ^ w).count_ones())
            .min()
            .expect("nonempty");
        let hits: Vec<u64> = code
            .iter()
            .copied()
            .filter(|c| (c ^ w).count_ones() == best)
            .collect();
        (hits.len() == 1).then(|| hits[0])
    };
    let mut wrong = 0;
    for &c in &code {
        for &e in &patterns {
            let w = c ^ e;
            let got = rm.decode(w);
            if got != Some(c) || got != nearest(w) {
                wrong += 1;
            }
        }
    }
    rep.check(
        wrong == 0,
        format!(
            "{} words decoded ({} patterns x 32 codewords), {wrong} disagree with brute force",
            patterns.len() * 32,
            patterns.len()
        ),
    );
    Ok(rep)
}

/// Every antichain over `n` players.
fn antichains(n: usize) -> Vec<Vec<u16>> {
    let subsets = 1usize << n;
    let mut out = Vec::new();
    let mut stack: Vec<(usize, Vec<u16>)> = vec![(0, Vec::new())];
    while let Some((next, chosen)) = stack.pop() {
        if next == subsets {
            out.push(chosen);
            continue;
        }
        stack.push((next + 1, chosen.clone()));
        let s = next as u16;
        if chosen.iter().all(|&c| c & s != c && c & s != s) {
            let mut with = chosen;
            with.push(s);
            stack.push((next + 1, with));
        }
    }
    out
}

fn closure(max: &[u16], n: usize) -> Vec<u16> {
    (0..1u16 << n)
        .filter(|&s| max.iter().any(|&m| s & m == s))
        .collect()
}

fn feasibility_checkers() -> Result<Report> {
    let mut rep = Report::new();
    let names = ["P0", "P1", "P2", "P3"];
    for n in 1..=4 {
        let players = PlayerSet::new(&names[..n])?;
        let full = (1u16 << n) - 1;
        let (mut count, mut wrong) = (0, 0);
        for ac in antichains(n) {
            count += 1;
            let members = closure(&ac, n);
            let covers = |target: u16| {
                members
                    .iter()
                    .any(|&a| members.iter().any(|&b| a | b | target == full))
            };
            let classical = n == 2 || !(0..n).any(|i| covers(1 << i));
            let quantum = !covers(0);
            let a = AdversaryStructure::new(players.clone(), ac)?;
            if classical_feasible(&a).feasible != classical
                || quantum_feasible(&a).feasible != quantum
            {
                wrong += 1;
            }
        }
        rep.check(
            wrong == 0,
            format!("|P|={n}: {count} structures, {wrong} disagree with brute force"),
        );
    }
    let a = AdversaryStructure::singletons(PlayerSet::three_party());
    let (c, q) = (
        classical_feasible(&a).feasible,
        quantum_feasible(&a).feasible,
    );
    rep.check(
        !c && q,
        format!("three-party singletons: classical={c}, quantum={q}"),
    );
    Ok(rep)
}

fn reproducibility() -> Result<Report> {
    let mut rep = Report::new();
    for s in Scenario::ALL {
        let runs = if s.name().starts_with("gcot") { 10 } else { 50 };
        let cfg = ScenarioConfig::new(s, SEED, runs);
        let mut first = Vec::new();
        let a = run_scenario_with(&cfg, |t| {
            first.push(serde_json::to_vec(t).expect("serializable"));
            Ok(())
        })?;
        let mut i = 0;
        let mut same = true;
        let b = run_scenario_with(&cfg, |t| {
            same &= first.get(i) == Some(&serde_json::to_vec(t).expect("serializable"));
            i += 1;
            Ok(())
        })?;
        let csv = a.stats.to_csv()? == b.stats.to_csv()?;
        rep.check(
            same && csv && a.transcript_digest == b.transcript_digest,
            format!("{s}: {runs} runs, transcripts identical={same}, stats CSV identical={csv}"),
        );
    }
    Ok(rep)
}

fn main() -> ExitCode {
    let criteria: [(&str, Criterion); 11] = [
        ("honest completeness", honest_completeness),
        ("qubit statistics", qubit_statistics),
        ("concealing", concealing),
        ("binding", binding),
        ("disturbance detection", disturbance_detection),
        ("cheater identification", cheater_identification),
        ("OT privacy", ot_privacy),
        ("BCX proof soundness", bcx_soundness),
        ("code machinery", code_machinery),
        ("feasibility checkers", feasibility_checkers),
        ("reproducibility", reproducibility),
    ];
    let mut failed = 0;
    for (i, (name, f)) in criteria.iter().enumerate() {
        let start = Instant::now();
        let rep = f().unwrap_or_else(|e| Report {
            pass: false,
            lines: vec![format!("FAIL error: {e}")],
        });
        let secs = start.elapsed().as_secs_f64();
        println!(
            "[{}] {:>2}. {name} ({secs:.1}s)",
            if rep.pass { "PASS" } else { "FAIL" },
            i + 1
        );
        for l in &rep.lines {
            println!("       {l}");
        }
        failed += usize::from(!rep.pass);
    }
    println!(
        "acceptance: {} passed, {failed} failed",
        criteria.len() - failed
    );
    if failed == 0 {
        ExitCode::SUCCESS
    } else {
        ExitCode::FAILURE
    }
}
