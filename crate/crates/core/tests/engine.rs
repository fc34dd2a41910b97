mod common;

use common::{mixed_chain, small_scenario, uniform_chain};
use vanet_adapt::adaptation::{
    adapt, adapt_from, classify, AdaptationConfig, ClassificationRule, SafetyClass,
};
use vanet_adapt::channel::{packet_success, ChannelParams, Interferer, MacMode};
use vanet_adapt::montecarlo::{
    estimate, run_trial, slot_oracle_success, sweep_differentiated, sweep_equal, trial_rng,
    with_workers, AccessPlan, CommsModel, Highway, ScenarioConfig,
};

#[test]
fn oracle_matches_three_interferer_example() {
    let params = ChannelParams::new(3.0, 10f64.powf(0.8), MacMode::Ssp).unwrap();
    let field = [
        Interferer::new(10.0, 0.05),
        Interferer::new(20.0, 0.05),
        Interferer::new(30.0, 0.05),
    ];
    let exact = packet_success(5.0, &field, &params).unwrap();
    let sim = slot_oracle_success(5.0, &field, &params, 1_000_000, 21).unwrap();
    assert!(
        (sim.p - exact).abs() < 3.0 * sim.stderr,
        "{sim:?} vs {exact}"
    );
}

#[test]
fn huge_gaps_never_collide() {
    let mut s = small_scenario(6, 300);
    s.gap.min = 1e5;
    s.gap.max = 2e5;
    let e = estimate(&s, &AccessPlan::uniform(0.05, 6)).unwrap();
    assert_eq!(e.chain.p, 0.0);
    assert_eq!(e.chain.stderr, 0.0);
}

#[test]
fn instant_warning_is_a_lower_bound() {
    let s = small_scenario(8, 1);
    let plan = AccessPlan::uniform(0.05, 8);
    let ideal = ScenarioConfig {
        comms: CommsModel::Instant,
        ..s.clone()
    };
    for k in 0..300 {
        let h = Highway::draw(&s, &mut trial_rng(s.seed, k)).unwrap();
        let a = run_trial(&ideal, &plan, k).unwrap();
        assert_eq!(a.onsets[1..], h.taus[1..]);
        let b = run_trial(&s, &plan, k).unwrap();
        for (x, y) in a.onsets.iter().zip(&b.onsets) {
            assert!(x <= y);
        }
    }
}

#[test]
fn comms_rarely_add_collisions() {
    let s = small_scenario(10, 1);
    let off = ScenarioConfig {
        comms: CommsModel::Disabled,
        ..s.clone()
    };
    let plan = AccessPlan::uniform(0.05, 10);
    let trials = 2000;
    let mut worse = 0;
    for k in 0..trials {
        let on = run_trial(&s, &plan, k).unwrap();
        let base = run_trial(&off, &plan, k).unwrap();
        let count = |o: &[bool]| o.iter().filter(|c| **c).count();
        if count(&on.collided) > count(&base.collided) {
            worse += 1;
        }
    }
    assert!(
        (worse as f64) <= 0.01 * trials as f64,
        "{worse} of {trials} trials got worse"
    );
}

#[test]
fn comms_reduce_chain_collisions() {
    let s = small_scenario(8, 2000);
    let plan = AccessPlan::uniform(0.05, 8);
    let on = estimate(&s, &plan).unwrap();
    let off = estimate(
        &ScenarioConfig {
            comms: CommsModel::Disabled,
            ..s.clone()
        },
        &plan,
    )
    .unwrap();
    assert!(on.chain.p <= off.chain.p);
    let d = off.paired_difference(&on).unwrap();
    assert!(d.mean > 3.0 * d.stderr, "{d:?}");
}

#[test]
fn estimates_ignore_worker_count() {
    let s = small_scenario(7, 500);
    let plan = AccessPlan::uniform(0.03, 7);
    let one = with_workers(Some(1), || estimate(&s, &plan).unwrap());
    let four = with_workers(Some(4), || estimate(&s, &plan).unwrap());
    assert_eq!(one, four);
    assert_eq!(one.chain_hits, four.chain_hits);
}

#[test]
fn sap_mode_runs_and_is_not_better_at_high_load() {
    let mut s = small_scenario(8, 1500);
    let plan = AccessPlan::uniform(0.2, 8);
    let ssp = estimate(&s, &plan).unwrap();
    s.channel.mode = MacMode::Sap;
    let sap = estimate(&s, &plan).unwrap();
    let d = sap.paired_difference(&ssp).unwrap();
    assert!(d.mean >= -3.0 * d.stderr, "{d:?}");
}

#[test]
fn uniform_chain_converges_fast() {
    // Gaps large enough that nobody collides: every estimate is zero.
    let s = uniform_chain(6, 80.0, 1.0, 200);
    let out = adapt(
        &s,
        &AdaptationConfig {
            trials_per_round: 200,
            ..Default::default()
        },
    )
    .unwrap();
    assert!(out.assignment.converged);
    assert!(out.assignment.iterations <= 2);
    assert!(out.assignment.classes[1..]
        .iter()
        .all(|c| *c == SafetyClass::Safe));
    let followers = &out.assignment.p_access[1..];
    assert!(followers.windows(2).all(|w| w[0] == w[1]));
}

#[test]
fn two_vehicle_chain_ignores_access_probability() {
    let s = small_scenario(2, 2000);
    let a = estimate(&s, &AccessPlan::uniform(0.01, 2)).unwrap();
    let b = estimate(&s, &AccessPlan::uniform(0.4, 2)).unwrap();
    assert_eq!(a.chain_hits, b.chain_hits);
    let out = adapt(
        &s,
        &AdaptationConfig {
            trials_per_round: 500,
            ..Default::default()
        },
    )
    .unwrap();
    assert!(out.assignment.converged);
}

#[test]
fn mixed_chain_flags_slow_close_drivers() {
    // Nominal drivers keep enough distance that a pile-up behind a slow
    // driver stays rare, so brake-lights-only estimates separate the groups.
    let mut s = mixed_chain(9, 2000);
    s.gap.min = 40.0;
    s.gap.max = 60.0;
    let config = AdaptationConfig {
        trials_per_round: 2000,
        ..Default::default()
    };
    let out = adapt(&s, &config).unwrap();
    assert!(
        out.assignment.converged,
        "{:?}",
        out.trace.last().map(|t| &t.classes)
    );
    let expected: Vec<SafetyClass> = (1..9)
        .map(|i| {
            if i % 2 == 1 {
                SafetyClass::Unsafe
            } else {
                SafetyClass::Safe
            }
        })
        .collect();
    assert_eq!(out.assignment.classes[1..], expected[..]);

    // Single-shot classification from a brake-lights-only estimate.
    let off = ScenarioConfig {
        comms: CommsModel::Disabled,
        ..s.clone()
    };
    let est = estimate(&off, &AccessPlan::uniform(config.p_safe, 9)).unwrap();
    let probs: Vec<f64> = est.per_vehicle[1..].iter().map(|p| p.p).collect();
    assert_eq!(
        classify(&probs, ClassificationRule::Quantile(0.5)),
        expected
    );
}

#[test]
fn fixed_point_is_idempotent() {
    let s = mixed_chain(9, 1000);
    let config = AdaptationConfig {
        trials_per_round: 1500,
        ..Default::default()
    };
    let first = adapt(&s, &config).unwrap();
    assert!(first.assignment.converged);
    let again = adapt_from(&s, &config, Some(&first.assignment.classes[1..])).unwrap();
    assert_eq!(again.assignment.classes, first.assignment.classes);
    assert!(again.assignment.converged);
}

#[test]
fn trace_is_complete() {
    let s = small_scenario(8, 500);
    for max_iterations in [1, 3] {
        let config = AdaptationConfig {
            max_iterations,
            trials_per_round: 300,
            ..Default::default()
        };
        let out = adapt(&s, &config).unwrap();
        assert_eq!(out.trace.len(), out.assignment.iterations);
        assert!(out.trace.len() <= max_iterations);
        for (k, t) in out.trace.iter().enumerate() {
            assert_eq!(t.iteration, k);
            assert_eq!(t.classes.len(), 8);
            assert_eq!(t.collision_estimates.len(), 8);
            let from_estimates = classify(&t.collision_estimates[1..], config.rule);
            assert_eq!(t.classes[1..], from_estimates[..]);
        }
        let a = &out.assignment;
        let min_unsafe = a
            .p_access
            .iter()
            .zip(&a.classes)
            .filter(|(_, c)| **c == SafetyClass::Unsafe)
            .map(|(p, _)| *p)
            .fold(f64::INFINITY, f64::min);
        let max_safe = a
            .p_access
            .iter()
            .zip(&a.classes)
            .filter(|(_, c)| **c == SafetyClass::Safe)
            .map(|(p, _)| *p)
            .fold(f64::NEG_INFINITY, f64::max);
        assert!(min_unsafe >= max_safe);
    }
    let one = adapt(
        &s,
        &AdaptationConfig {
            max_iterations: 1,
            trials_per_round: 300,
            ..Default::default()
        },
    )
    .unwrap();
    assert_eq!(one.trace.len(), 1);
}

#[test]
fn degenerate_pair_matches_equal_baseline() {
    let s = small_scenario(8, 3000);
    let p0 = 0.05;
    let config = AdaptationConfig {
        trials_per_round: 300,
        max_iterations: 3,
        ..Default::default()
    };
    let out = adapt(&s, &config.with_pair(p0, p0)).unwrap();
    let adapted = estimate(&s, &out.assignment.plan()).unwrap();
    let equal = estimate(&s, &AccessPlan::uniform(p0, 8)).unwrap();
    assert_eq!(adapted.chain, equal.chain);

    let eq = sweep_equal(&s, &[p0]).unwrap();
    let d = sweep_differentiated(&s, &[p0], &[p0], &config, &eq).unwrap();
    let (x, y) = (d.grid.best().estimate.chain, eq.best().estimate.chain);
    assert!((x.p - y.p).abs() <= 3.0 * x.stderr.hypot(y.stderr));
}
