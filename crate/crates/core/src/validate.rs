//! Cross-checks of the analytic models against independent computations:
//! slot-level simulation for the success probability, geometric sampling for
//! the deadline formula, exhaustive path enumeration for the reception delay
//! and step-wise integration for the braking kinematics.

use rand::seq::IndexedRandom;
use rand::Rng;
use rand_chacha::rand_core::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Geometric};
use serde::{Deserialize, Serialize};

use crate::channel::{
    db_to_linear, packet_success, ChannelParams, Interferer, MacMode, SapRule, RATE_TABLE,
};
use crate::error::Result;
use crate::kinematics::{min_gap, min_gap_equal_decel, min_gap_two_vehicles, Trajectory};
use crate::montecarlo::{derive_seed, slot_oracle_success};
use crate::timing::{reception_delay, success_within_deadline};

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CaseResult {
    pub inputs: String,
    pub observed: f64,
    pub expected: f64,
    /// Allowed absolute deviation.
    pub tolerance: f64,
    pub pass: bool,
}

impl CaseResult {
    fn new(inputs: String, observed: f64, expected: f64, tolerance: f64) -> Self {
        let pass = (observed - expected).abs() <= tolerance || observed == expected;
        Self {
            inputs,
            observed,
            expected,
            tolerance,
            pass,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct BatteryReport {
    pub name: String,
    pub cases: Vec<CaseResult>,
    /// Cases that must pass for the battery to pass.
    pub required: usize,
}

impl BatteryReport {
    pub fn passed(&self) -> usize {
        self.cases.iter().filter(|c| c.pass).count()
    }

    pub fn ok(&self) -> bool {
        self.passed() >= self.required
    }

    pub fn failures(&self) -> impl Iterator<Item = &CaseResult> {
        self.cases.iter().filter(|c| !c.pass)
    }
}

/// Closed-form success probability against the slot simulation on random
/// fields of at most ten interferers. A case passes when the two agree within
/// three standard errors of a `slots`-slot Bernoulli mean.
pub fn channel_oracle_battery(
    mode: MacMode,
    rule: SapRule,
    configs: usize,
    slots: u64,
    required: usize,
    seed: u64,
) -> Result<BatteryReport> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut cases = Vec::with_capacity(configs);
    for k in 0..configs {
        let alpha = rng.random_range(2.0..=4.0);
        let entry = RATE_TABLE.choose(&mut rng).expect("non-empty table");
        let params =
            ChannelParams::new(alpha, db_to_linear(entry.beta_db), mode)?.with_sap_rule(rule);
        let r = rng.random_range(5.0..60.0);
        let count = rng.random_range(0..=10);
        let field: Vec<Interferer> = (0..count)
            .map(|_| Interferer::new(rng.random_range(5.0..150.0), rng.random_range(0.0..=0.2)))
            .collect();
        let exact = packet_success(r, &field, &params)?;
        let sim = slot_oracle_success(
            r,
            &field,
            &params,
            slots,
            derive_seed(seed, 0x0c1e, k as u64),
        )?;
        let se = (exact * (1.0 - exact) / slots as f64).sqrt();
        cases.push(CaseResult::new(
            format!(
                "r={r:.3} alpha={alpha:.3} beta_db={} field={:?}",
                entry.beta_db,
                field.iter().map(|i| (i.r, i.p)).collect::<Vec<_>>()
            ),
            sim.p,
            exact,
            3.0 * se,
        ));
    }
    let mode_name = match (mode, rule) {
        (MacMode::Ssp, _) => "ssp",
        (MacMode::Sap, SapRule::Exact) => "sap",
        (MacMode::Sap, SapRule::Approx) => "sap-approx",
    };
    Ok(BatteryReport {
        name: format!("channel oracle ({mode_name})"),
        cases,
        required,
    })
}

/// `1 - (1 - 1/s)^D` against the fraction of sampled geometric slot counts
/// that land within `D` opportunities.
pub fn deadline_battery(pairs: usize, trials: u64, seed: u64) -> Result<BatteryReport> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut cases = Vec::with_capacity(pairs);
    for _ in 0..pairs {
        let s: f64 = rng.random_range(1.0..60.0);
        let d: u64 = rng.random_range(1..=120);
        // Failures before the first success.
        let geo = Geometric::new(1.0 / s).expect("valid success probability");
        let hits = (0..trials).filter(|_| geo.sample(&mut rng) < d).count() as f64;
        let p = success_within_deadline(s, d);
        let se = (p * (1.0 - p) / trials as f64).sqrt();
        cases.push(CaseResult::new(
            format!("s={s:.6} D={d}"),
            hits / trials as f64,
            p,
            3.0 * se,
        ));
    }
    Ok(BatteryReport {
        name: "deadline success".into(),
        required: cases.len(),
        cases,
    })
}

/// Every path the model allows from the leader to vehicle `i`, as vehicle
/// sequences: the direct link and one relay through each `j` in `1..i`.
fn enumerate_paths(i: usize) -> Vec<Vec<usize>> {
    let mut paths = vec![vec![0, i]];
    if i > 2 {
        paths.extend((1..i).map(|j| vec![0, j, i]));
    }
    paths
}

fn path_cost(path: &[usize], slots: &[Vec<f64>], taus: &[f64], slot_seconds: f64) -> f64 {
    let mut total = 0.0;
    for (hop, w) in path.windows(2).enumerate() {
        let (tx, rx) = (w[0], w[1]);
        if hop > 0 {
            total += taus[tx];
        }
        if rx != tx + 1 {
            total += slot_seconds * slots[tx][rx];
        }
    }
    total
}

/// [`reception_delay`] against exhaustive path enumeration on every chain
/// length from 2 to `max_len`, with random per-link slot counts (some links
/// unavailable) and reaction times.
pub fn reception_delay_battery(
    max_len: usize,
    cases_per_len: usize,
    seed: u64,
) -> Result<BatteryReport> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut cases = Vec::new();
    for n in 2..=max_len {
        for _ in 0..cases_per_len {
            let slot_seconds = rng.random_range(1e-4..5e-3);
            let taus: Vec<f64> = (0..n).map(|_| rng.random_range(0.3..3.0)).collect();
            let slots: Vec<Vec<f64>> = (0..n)
                .map(|_| {
                    (0..n)
                        .map(|_| {
                            if rng.random_bool(0.15) {
                                f64::INFINITY
                            } else {
                                rng.random_range(1.0..2000.0)
                            }
                        })
                        .collect()
                })
                .collect();
            for i in 1..n {
                let expected = if i == 1 {
                    0.0
                } else {
                    enumerate_paths(i)
                        .iter()
                        .map(|p| path_cost(p, &slots, &taus, slot_seconds))
                        .fold(f64::INFINITY, f64::min)
                };
                let observed = reception_delay(
                    i,
                    |tx, rx| {
                        let s = slots[tx][rx];
                        if s.is_finite() {
                            Ok(s)
                        } else {
                            Err(crate::Error::InfeasibleLink)
                        }
                    },
                    &taus,
                    slot_seconds,
                )
                .unwrap_or(f64::INFINITY);
                cases.push(CaseResult::new(
                    format!("n={n} i={i} slot={slot_seconds:.3e}"),
                    observed,
                    expected,
                    1e-12 * expected.abs().max(1.0),
                ));
            }
        }
    }
    Ok(BatteryReport {
        name: "reception delay".into(),
        required: cases.len(),
        cases,
    })
}

/// Minimum bumper gap from explicit time stepping: velocities are evaluated
/// from the braking law and positions advanced with the trapezoid rule.
pub fn integrate_min_gap(gap: f64, v: f64, lead: (f64, f64), follow: (f64, f64), dt: f64) -> f64 {
    let speed = |t: f64, (onset, a): (f64, f64)| {
        if t <= onset {
            v
        } else {
            (v - a * (t - onset)).max(0.0)
        }
    };
    let horizon = (lead.0 + v / lead.1).max(follow.0 + v / follow.1) + 2.0 * dt;
    let steps = (horizon / dt).ceil() as u64;
    let (mut x_lead, mut x_follow) = (gap, 0.0);
    let mut best = gap;
    for k in 0..steps {
        let (t0, t1) = (k as f64 * dt, (k + 1) as f64 * dt);
        x_lead += 0.5 * (speed(t0, lead) + speed(t1, lead)) * dt;
        x_follow += 0.5 * (speed(t0, follow) + speed(t1, follow)) * dt;
        best = best.min(x_lead - x_follow);
    }
    best
}

/// Closed-form minimum gaps against [`integrate_min_gap`]. Every case checks
/// [`min_gap_two_vehicles`] and the `gap - vΔt` shortcut; a second set with
/// unequal decelerations checks the general [`min_gap`].
pub fn kinematics_battery(cases: usize, dt: f64, seed: u64) -> Result<BatteryReport> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut out = Vec::with_capacity(3 * cases);
    let tol = 1e-3;
    for _ in 0..cases {
        let v = rng.random_range(10.0..40.0);
        let gap = rng.random_range(5.0..60.0);
        let a = rng.random_range(3.0..9.0);
        let t_lead: f64 = rng.random_range(0.0..2.0);
        let t_follow = (t_lead + rng.random_range(-0.5..2.5f64)).max(0.0);
        let inputs =
            format!("v={v:.4} gap={gap:.4} a={a:.4} t_lead={t_lead:.4} t_follow={t_follow:.4}");
        let reference = integrate_min_gap(gap, v, (t_lead, a), (t_follow, a), dt);
        let closed = min_gap_two_vehicles(v, gap, t_lead, t_follow, a)?;
        out.push(CaseResult::new(inputs.clone(), closed, reference, tol));
        let shortcut = min_gap_equal_decel(v, gap, t_follow - t_lead);
        out.push(CaseResult::new(
            format!("{inputs} (gap - v dt)"),
            shortcut,
            reference,
            tol,
        ));

        let a_lead = rng.random_range(3.0..9.0);
        let a_follow = rng.random_range(3.0..9.0);
        let reference = integrate_min_gap(gap, v, (t_lead, a_lead), (t_follow, a_follow), dt);
        let general = min_gap(
            &Trajectory::new(gap, v, t_lead, a_lead),
            &Trajectory::new(0.0, v, t_follow, a_follow),
        );
        out.push(CaseResult::new(
            format!("v={v:.4} gap={gap:.4} a_lead={a_lead:.4} a_follow={a_follow:.4} t_lead={t_lead:.4} t_follow={t_follow:.4}"),
            general,
            reference,
            tol,
        ));
    }
    Ok(BatteryReport {
        name: "kinematics".into(),
        required: out.len(),
        cases: out,
    })
}

/// Settings of the full validation run.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct ValidationPlan {
    pub oracle_configs: usize,
    pub oracle_slots: u64,
    pub oracle_required: usize,
    pub deadline_pairs: usize,
    pub deadline_trials: u64,
    pub delay_max_len: usize,
    pub delay_cases_per_len: usize,
    pub kinematics_cases: usize,
    pub kinematics_dt: f64,
    pub seed: u64,
}

impl Default for ValidationPlan {
    fn default() -> Self {
        Self {
            oracle_configs: 50,
            oracle_slots: 100_000,
            oracle_required: 48,
            deadline_pairs: 10,
            deadline_trials: 1_000_000,
            delay_max_len: 8,
            delay_cases_per_len: 25,
            kinematics_cases: 100,
            kinematics_dt: 1e-4,
            seed: 1,
        }
    }
}

pub fn run_all(plan: &ValidationPlan) -> Result<Vec<BatteryReport>> {
    let s = plan.seed;
    Ok(vec![
        channel_oracle_battery(
            MacMode::Ssp,
            SapRule::Exact,
            plan.oracle_configs,
            plan.oracle_slots,
            plan.oracle_required,
            derive_seed(s, 1, 0),
        )?,
        channel_oracle_battery(
            MacMode::Sap,
            SapRule::Exact,
            plan.oracle_configs,
            plan.oracle_slots,
            plan.oracle_required,
            derive_seed(s, 1, 1),
        )?,
        deadline_battery(
            plan.deadline_pairs,
            plan.deadline_trials,
            derive_seed(s, 2, 0),
        )?,
        reception_delay_battery(
            plan.delay_max_len,
            plan.delay_cases_per_len,
            derive_seed(s, 3, 0),
        )?,
        kinematics_battery(
            plan.kinematics_cases,
            plan.kinematics_dt,
            derive_seed(s, 4, 0),
        )?,
    ])
}
