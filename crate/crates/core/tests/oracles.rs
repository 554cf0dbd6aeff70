//! Detection rates of active cheaters against closed-form oracles.

use triparty::gcot::{run_trials, GcotParams, InstanceOrigin, TrialOutcome};
use triparty::harness::{run_scenario, Scenario, ScenarioConfig};
use triparty::rng::derive_seed;
use triparty::session::Session;
use triparty::strategy::{Behavior, StrategyProfile};
use triparty::PlayerId;

fn choose(n: u64, k: u64) -> f64 {
    (0..k).fold(1.0, |acc, i| acc * (n - i) as f64 / (i + 1) as f64)
}

/// P(X = j) for X hypergeometric: `draws` from `total` with `marked` marked.
fn hypergeometric(total: u64, marked: u64, draws: u64, j: u64) -> f64 {
    if j > marked || j > draws || draws - j > total - marked {
        return 0.0;
    }
    choose(marked, j) * choose(total - marked, draws - j) / choose(total, draws)
}

fn tolerance(p: f64, n: usize) -> f64 {
    4.0 * (p * (1.0 - p) / n as f64).sqrt() + 0.01
}

#[test]
fn lazy_receiver_detection_matches_hypergeometric_oracle() {
    let (k, checked) = (64, 16);
    for deferred in [4u64, 16, 32] {
        let mut cfg = ScenarioConfig::new(Scenario::OtLazyReceiver, 40 + deferred, 1000);
        cfg.lazy_deferred = deferred as usize;
        let r = run_scenario(&cfg).unwrap();
        let rate = r.stats.metric("detected").unwrap().value;
        // a checked deferred position is caught when the bases agree and the
        // committed guess is wrong
        let oracle = 1.0
            - (0..=checked)
                .map(|j| hypergeometric(k, deferred, checked, j) * 0.75f64.powi(j as i32))
                .sum::<f64>();
        let tol = tolerance(oracle, 1000);
        assert!(
            (rate - oracle).abs() <= tol,
            "deferred={deferred}: {rate} vs {oracle} +- {tol}"
        );
    }
}

#[test]
fn cheating_gcot_sender_detection_matches_oracle() {
    let params = GcotParams {
        l: 2,
        ..GcotParams::default()
    };
    let code = params.code.build().unwrap();
    let m = params.code.m as u64;
    let test = 2 * params.code.sigma_m() as u64;
    let runs = 300;
    for e in 1..=4u64 {
        let profile = StrategyProfile::with(
            PlayerId::Alice,
            Behavior::CheatingAliceGcot {
                corrupted: e as usize,
            },
        )
        .unwrap();
        let mut caught = 0;
        for i in 0..runs {
            let mut s = Session::new("oracle-gcot", derive_seed(e, i));
            let out = run_trials(&mut s, [true, false], i % 2 == 0, &params, &profile).unwrap();
            let first = out
                .log
                .entries
                .iter()
                .find(|t| t.origin == InstanceOrigin::Alice)
                .expect("every schedule has an Alice instance");
            caught += usize::from(first.outcome != TrialOutcome::Success);
        }
        let rate = caught as f64 / runs as f64;
        // missed by the test set, the corruption is corrected when e <= t
        let missed = hypergeometric(m, e, test, 0);
        let beyond = if e > code.t() as u64 { 1.0 } else { 0.0 };
        let oracle = (1.0 - missed) + missed * beyond;
        let tol = tolerance(oracle, runs as usize);
        assert!(
            (rate - oracle).abs() <= tol,
            "e={e}: {rate} vs {oracle} +- {tol}"
        );
    }
}

#[test]
fn baseless_complaints_always_identify_the_complainer() {
    let r = run_scenario(&ScenarioConfig::new(Scenario::CommitBobBaseless, 9, 200)).unwrap();
    assert_eq!(r.stats.count("CheaterIdentified(Bob)"), 200);
}
