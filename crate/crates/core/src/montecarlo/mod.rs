//! Trial engine.
//!
//! A trial draws one realization of the highway (gaps, reaction times and
//! the interferer field in the other lanes), turns the access plan into
//! expected link delays with the closed-form channel and timing models, and
//! runs the braking chain. Trials are independent: trial `k` uses the ChaCha
//! stream `k` of the scenario seed, so any parallel schedule yields the same
//! numbers, and two runs with the same seed see the same highways whatever
//! their access plans (paired sampling).

mod oracle;
mod sweep;

pub use oracle::{slot_oracle_success, OracleEstimate};
pub use sweep::{
    sweep_differentiated, sweep_equal, DifferentiatedSweep, SweepCell, SweepGrid, SweepKind,
};

use rand::Rng;
use rand_chacha::rand_core::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, LogNormal};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::adaptation::SafetyClass;
use crate::channel::{
    db_to_linear, packet_success_iter, sir_threshold_for_rate, ChannelParams, Interferer, MacMode,
    SapRule,
};
use crate::error::{ensure, ensure_probability, Error, Result};
use crate::kinematics::{
    brake_onset_with_relays, simulate_chain_braking, BrakeSchedule, CollisionEvent, VehicleState,
};
use crate::timing::{
    expected_slots, reception_delay, success_within_deadline, transmission_opportunities,
    LinkBudget,
};

/// Interferers closer than this to a receiver (other lanes, same
/// longitudinal coordinate) are placed at this distance.
pub const MIN_SEPARATION: f64 = 1e-3;

/// SplitMix64 finalizer over `(master, stream, index)`; used to derive the
/// seeds of adaptation rounds and unpaired sweep cells.
pub fn derive_seed(master: u64, stream: u64, index: u64) -> u64 {
    let mut z = master ^ stream.rotate_left(32) ^ index.wrapping_mul(0x9E37_79B9_7F4A_7C15);
    z = z.wrapping_add(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// RNG for trial `index` under `master`.
pub fn trial_rng(master: u64, index: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(master);
    rng.set_stream(index);
    rng
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GapDistribution {
    pub min: f64,
    pub max: f64,
}

/// Lognormal reaction times truncated to `[min, max]` by rejection.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ReactionTimeDistribution {
    pub median: f64,
    pub sigma_log: f64,
    pub min: f64,
    pub max: f64,
}

/// Per-driver deviations from the nominal population.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct DriverProfile {
    /// Multiplies the drawn reaction time.
    pub tau_scale: f64,
    /// Multiplies the drawn gap to the predecessor.
    pub gap_scale: f64,
    /// Overrides the scenario deceleration.
    pub deceleration: Option<f64>,
}

impl Default for DriverProfile {
    fn default() -> Self {
        Self {
            tau_scale: 1.0,
            gap_scale: 1.0,
            deceleration: None,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct ChannelConfig {
    pub alpha: f64,
    /// SIR threshold in dB; `None` takes the rate table value.
    pub beta_db: Option<f64>,
    pub mode: MacMode,
    pub sap_rule: SapRule,
}

impl Default for ChannelConfig {
    fn default() -> Self {
        Self {
            alpha: 3.0,
            beta_db: None,
            mode: MacMode::Ssp,
            sap_rule: SapRule::Exact,
        }
    }
}

/// Source of the warning delays.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum CommsModel {
    /// Closed-form p-persistent channel.
    #[default]
    Channel,
    /// No vehicle-to-vehicle messages: brake lights only.
    Disabled,
    /// Every follower is warned at `t = 0`.
    Instant,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct ScenarioConfig {
    /// Vehicles in the braking chain, leader included.
    pub chain_length: usize,
    /// Vehicle count of each additional (interference-only) lane.
    pub other_lanes: Vec<usize>,
    pub speed: f64,
    pub deceleration: f64,
    pub gap: GapDistribution,
    pub reaction_time: ReactionTimeDistribution,
    /// Follower-indexed driver profiles; missing entries are nominal.
    pub drivers: Vec<DriverProfile>,
    pub link: LinkBudget,
    pub channel: ChannelConfig,
    /// Links whose success probability within the deadline falls below this
    /// are treated as unavailable.
    pub deadline_floor: f64,
    /// Let braked middle vehicles originate warnings for vehicles further
    /// back.
    pub relay_cascade: bool,
    pub comms: CommsModel,
    /// Reuse the scenario seed in every sweep cell.
    pub paired_seeds: bool,
    pub trials: usize,
    pub seed: u64,
}

impl Default for ScenarioConfig {
    fn default() -> Self {
        Self {
            chain_length: 10,
            other_lanes: vec![10, 10],
            speed: 30.0,
            deceleration: 6.0,
            gap: GapDistribution {
                min: 15.0,
                max: 40.0,
            },
            reaction_time: ReactionTimeDistribution {
                median: 1.0,
                sigma_log: 0.3,
                min: 0.3,
                max: 3.0,
            },
            drivers: Vec::new(),
            link: LinkBudget {
                packet_bits: 8000.0,
                rate_bps: 3e6,
                tolerable_delay: 1.0,
            },
            channel: ChannelConfig::default(),
            deadline_floor: 1e-3,
            relay_cascade: true,
            comms: CommsModel::Channel,
            paired_seeds: true,
            trials: 10_000,
            seed: 1,
        }
    }
}

impl ScenarioConfig {
    pub fn validate(&self) -> Result<()> {
        let bad = |msg: String| Err(Error::Scenario(msg));
        if self.chain_length < 2 {
            return bad(format!(
                "chain_length = {} (need at least 2)",
                self.chain_length
            ));
        }
        if self.trials < 1 {
            return bad("trials must be at least 1".into());
        }
        if self.drivers.len() > self.chain_length - 1 {
            return bad(format!(
                "{} driver profiles for {} followers",
                self.drivers.len(),
                self.chain_length - 1
            ));
        }
        ensure(
            self.speed.is_finite() && self.speed > 0.0,
            "speed",
            self.speed,
            "a positive speed",
        )?;
        ensure(
            self.deceleration.is_finite() && self.deceleration > 0.0,
            "deceleration",
            self.deceleration,
            "a positive deceleration",
        )?;
        let g = self.gap;
        ensure(
            g.min.is_finite() && g.min > 0.0,
            "gap.min",
            g.min,
            "a positive gap",
        )?;
        ensure(
            g.max.is_finite() && g.max >= g.min,
            "gap.max",
            g.max,
            "at least gap.min",
        )?;
        let r = self.reaction_time;
        ensure(
            r.median.is_finite() && r.median > 0.0,
            "reaction_time.median",
            r.median,
            "positive",
        )?;
        ensure(
            r.sigma_log.is_finite() && r.sigma_log >= 0.0,
            "reaction_time.sigma_log",
            r.sigma_log,
            "nonnegative",
        )?;
        ensure(
            r.min.is_finite() && r.min > 0.0,
            "reaction_time.min",
            r.min,
            "positive",
        )?;
        ensure(
            r.max.is_finite() && r.max >= r.min,
            "reaction_time.max",
            r.max,
            "at least reaction_time.min",
        )?;
        ensure(
            r.median >= r.min && r.median <= r.max,
            "reaction_time.median",
            r.median,
            "inside [min, max]",
        )?;
        for d in &self.drivers {
            ensure(
                d.tau_scale.is_finite() && d.tau_scale > 0.0,
                "drivers.tau_scale",
                d.tau_scale,
                "positive",
            )?;
            ensure(
                d.gap_scale.is_finite() && d.gap_scale > 0.0,
                "drivers.gap_scale",
                d.gap_scale,
                "positive",
            )?;
            if let Some(a) = d.deceleration {
                ensure(
                    a.is_finite() && a > 0.0,
                    "drivers.deceleration",
                    a,
                    "positive",
                )?;
            }
        }
        self.link.validate()?;
        self.channel_params()?;
        ensure_probability("deadline_floor", self.deadline_floor)?;
        Ok(())
    }

    pub fn channel_params(&self) -> Result<ChannelParams> {
        let beta_db = match self.channel.beta_db {
            Some(db) => db,
            None => sir_threshold_for_rate(self.link.rate_bps)?,
        };
        ensure(
            beta_db.is_finite(),
            "beta_db",
            beta_db,
            "a finite threshold",
        )?;
        Ok(
            ChannelParams::new(self.channel.alpha, db_to_linear(beta_db), self.channel.mode)?
                .with_sap_rule(self.channel.sap_rule),
        )
    }

    pub fn driver(&self, vehicle: usize) -> DriverProfile {
        vehicle
            .checked_sub(1)
            .and_then(|k| self.drivers.get(k))
            .copied()
            .unwrap_or_default()
    }

    pub fn total_vehicles(&self) -> usize {
        self.chain_length + self.other_lanes.iter().sum::<usize>()
    }
}

/// Access probabilities: one per chain vehicle plus a shared background
/// value for the other lanes.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AccessPlan {
    pub chain: Vec<f64>,
    pub background: f64,
}

impl AccessPlan {
    pub fn uniform(p: f64, chain_length: usize) -> Self {
        Self {
            chain: vec![p; chain_length],
            background: p,
        }
    }

    fn validate(&self, scenario: &ScenarioConfig) -> Result<()> {
        if self.chain.len() != scenario.chain_length {
            return Err(Error::Scenario(format!(
                "access plan covers {} vehicles, chain has {}",
                self.chain.len(),
                scenario.chain_length
            )));
        }
        for &p in &self.chain {
            ensure_probability("p_access", p)?;
        }
        ensure_probability("background p_access", self.background)
    }
}

/// One drawn highway.
#[derive(Debug, Clone, PartialEq)]
pub struct Highway {
    /// Chain positions, leader first, strictly decreasing.
    pub chain_positions: Vec<f64>,
    /// Gap of vehicle `i` to `i - 1`; entry 0 is unused.
    pub gaps: Vec<f64>,
    /// Reaction time of vehicle `i`; entry 0 (leader) is unused.
    pub taus: Vec<f64>,
    /// Positions of the interference-only vehicles.
    pub background_positions: Vec<f64>,
}

fn draw_tau<R: Rng>(
    rng: &mut R,
    dist: &ReactionTimeDistribution,
    lognormal: &LogNormal<f64>,
) -> f64 {
    loop {
        let t = lognormal.sample(rng);
        if (dist.min..=dist.max).contains(&t) {
            return t;
        }
    }
}

fn draw_gap<R: Rng>(rng: &mut R, dist: &GapDistribution) -> f64 {
    if dist.max > dist.min {
        rng.random_range(dist.min..dist.max)
    } else {
        dist.min
    }
}

impl Highway {
    pub fn draw<R: Rng>(scenario: &ScenarioConfig, rng: &mut R) -> Result<Self> {
        let n = scenario.chain_length;
        let rt = scenario.reaction_time;
        let lognormal = LogNormal::new(rt.median.ln(), rt.sigma_log)
            .map_err(|e| Error::Scenario(format!("reaction_time: {e}")))?;
        let mut chain_positions = vec![0.0; n];
        let mut gaps = vec![0.0; n];
        for i in 1..n {
            gaps[i] = draw_gap(rng, &scenario.gap) * scenario.driver(i).gap_scale;
            chain_positions[i] = chain_positions[i - 1] - gaps[i];
        }
        let mut taus = vec![0.0; n];
        for (i, tau) in taus.iter_mut().enumerate().skip(1) {
            *tau = draw_tau(rng, &rt, &lognormal) * scenario.driver(i).tau_scale;
        }
        let mut background_positions = Vec::with_capacity(scenario.total_vehicles() - n);
        for &count in &scenario.other_lanes {
            let mut x = rng.random_range(0.0..=scenario.gap.max);
            for _ in 0..count {
                background_positions.push(x);
                x -= draw_gap(rng, &scenario.gap);
            }
        }
        Ok(Self {
            chain_positions,
            gaps,
            taus,
            background_positions,
        })
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct TrialOutcome {
    pub collided: Vec<bool>,
    pub chain_collision: bool,
    pub onsets: Vec<f64>,
    /// Warning delay per vehicle from the single-relay model; infinite when
    /// no path is available.
    pub comm_delays: Vec<f64>,
    /// Vehicles (index ≥ 2) that fell back to brake lights only.
    pub infeasible: Vec<bool>,
    pub events: Vec<CollisionEvent>,
}

/// Closed-form success probability of the link `tx -> rx` on one highway.
/// Every other vehicle, in the chain or in another lane, interferes with its
/// planned access probability.
pub fn link_success(
    params: &ChannelParams,
    plan: &AccessPlan,
    highway: &Highway,
    tx: usize,
    rx: usize,
) -> Result<f64> {
    let x_rx = highway.chain_positions[rx];
    let r = (highway.chain_positions[tx] - x_rx).abs();
    let chain_field = highway
        .chain_positions
        .iter()
        .zip(&plan.chain)
        .enumerate()
        .filter(|(k, _)| *k != tx && *k != rx)
        .map(|(_, (&x, &p))| (x, p));
    let background = highway
        .background_positions
        .iter()
        .map(|&x| (x, plan.background));
    let field = chain_field
        .chain(background)
        .map(|(x, p)| Interferer::new((x - x_rx).abs().max(MIN_SEPARATION), p));
    packet_success_iter(r, field, params)
}

/// Expected-slot matrix of one highway: `slots[tx][rx]` for `tx < rx`,
/// zero for adjacent pairs and infinite for unavailable links.
pub fn link_slot_matrix(
    scenario: &ScenarioConfig,
    plan: &AccessPlan,
    highway: &Highway,
) -> Result<Vec<Vec<f64>>> {
    let n = scenario.chain_length;
    let params = scenario.channel_params()?;
    let opportunities = transmission_opportunities(&scenario.link);
    let mut slots = vec![vec![f64::INFINITY; n]; n];
    for rx in 1..n {
        slots[rx - 1][rx] = 0.0;
        let p_rx = params.effective_probability(plan.chain[rx])?;
        for tx in 0..rx.saturating_sub(1) {
            let success = link_success(&params, plan, highway, tx, rx)?;
            slots[tx][rx] = match expected_slots(success, plan.chain[tx], p_rx) {
                Ok(s) if success_within_deadline(s, opportunities) >= scenario.deadline_floor => s,
                Ok(_) | Err(Error::InfeasibleLink) => f64::INFINITY,
                Err(e) => return Err(e),
            };
        }
    }
    Ok(slots)
}

/// Runs one trial on an already drawn highway.
pub fn run_highway(
    scenario: &ScenarioConfig,
    plan: &AccessPlan,
    highway: &Highway,
) -> Result<TrialOutcome> {
    let n = scenario.chain_length;
    let slot_seconds = scenario.link.slot_seconds();
    let (comm_delays, legs) = match scenario.comms {
        CommsModel::Disabled => (vec![f64::INFINITY; n], None),
        CommsModel::Instant => (vec![0.0; n], None),
        CommsModel::Channel => {
            let slots = link_slot_matrix(scenario, plan, highway)?;
            let mut delays = vec![0.0; n];
            for (i, d) in delays.iter_mut().enumerate().skip(2) {
                let link = |tx: usize, rx: usize| {
                    let s = slots[tx][rx];
                    if s.is_finite() {
                        Ok(s)
                    } else {
                        Err(Error::InfeasibleLink)
                    }
                };
                *d = match reception_delay(i, link, &highway.taus, slot_seconds) {
                    Ok(v) => v,
                    Err(Error::InfeasibleLink) => f64::INFINITY,
                    Err(e) => return Err(e),
                };
            }
            (delays, scenario.relay_cascade.then_some(slots))
        }
    };
    let onsets =
        brake_onset_with_relays(&highway.taus[1..], &comm_delays[1..], |j, i| match &legs {
            Some(slots) => slot_seconds * slots[j][i],
            None => f64::INFINITY,
        });

    let chain: Vec<VehicleState> = (0..n)
        .map(|i| VehicleState {
            index: i,
            lane: 0,
            position: highway.chain_positions[i],
            speed: scenario.speed,
            gap_to_predecessor: if i == 0 {
                f64::INFINITY
            } else {
                highway.gaps[i]
            },
            tau: if i == 0 {
                scenario.reaction_time.median
            } else {
                highway.taus[i]
            },
            p_access: plan.chain[i],
            safety_class: SafetyClass::Safe,
        })
        .collect();
    let decel = (0..n)
        .map(|i| {
            scenario
                .driver(i)
                .deceleration
                .unwrap_or(scenario.deceleration)
        })
        .collect();
    let schedule = BrakeSchedule {
        onset: onsets.clone(),
        decel,
    };
    let report = simulate_chain_braking(&chain, &schedule)?;
    let infeasible = (0..n)
        .map(|i| i >= 2 && comm_delays[i].is_infinite())
        .collect();
    Ok(TrialOutcome {
        chain_collision: report.any(),
        collided: report.collided,
        onsets,
        comm_delays,
        infeasible,
        events: report.events,
    })
}

/// Draws the highway of trial `trial` from the scenario seed and runs it.
pub fn run_trial(scenario: &ScenarioConfig, plan: &AccessPlan, trial: u64) -> Result<TrialOutcome> {
    plan.validate(scenario)?;
    let mut rng = trial_rng(scenario.seed, trial);
    let highway = Highway::draw(scenario, &mut rng)?;
    run_highway(scenario, plan, &highway)
}

/// A Bernoulli proportion with its standard error `sqrt(p(1-p)/n)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Proportion {
    pub p: f64,
    pub stderr: f64,
    pub hits: u64,
    pub trials: u64,
}

impl Proportion {
    pub fn from_counts(hits: u64, trials: u64) -> Self {
        let p = hits as f64 / trials as f64;
        Self {
            p,
            stderr: (p * (1.0 - p) / trials as f64).sqrt(),
            hits,
            trials,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct EstimateResult {
    pub trials: u64,
    pub per_vehicle: Vec<Proportion>,
    pub chain: Proportion,
    pub mean_onset: Vec<f64>,
    /// Mean over trials with a finite warning delay; `None` if there were none.
    pub mean_comm_delay: Vec<Option<f64>>,
    pub infeasible_rate: Vec<f64>,
    /// Per-trial chain-collision indicators, in trial order.
    #[serde(skip)]
    pub chain_hits: Vec<bool>,
}

/// Paired difference `a - b` of two chain-collision estimates that share
/// their trial seeds.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct PairedDifference {
    pub mean: f64,
    pub stderr: f64,
}

impl EstimateResult {
    pub fn paired_difference(&self, other: &EstimateResult) -> Result<PairedDifference> {
        if self.chain_hits.len() != other.chain_hits.len() {
            return Err(Error::Scenario(
                "paired comparison needs equal trial counts".into(),
            ));
        }
        let n = self.chain_hits.len() as f64;
        let diffs: Vec<f64> = self
            .chain_hits
            .iter()
            .zip(&other.chain_hits)
            .map(|(&a, &b)| a as u8 as f64 - b as u8 as f64)
            .collect();
        let mean = diffs.iter().sum::<f64>() / n;
        let var = if n > 1.0 {
            diffs.iter().map(|d| (d - mean).powi(2)).sum::<f64>() / (n - 1.0)
        } else {
            0.0
        };
        Ok(PairedDifference {
            mean,
            stderr: (var / n).sqrt(),
        })
    }
}

/// Averages `scenario.trials` trials. The result does not depend on the
/// number of rayon workers.
pub fn estimate(scenario: &ScenarioConfig, plan: &AccessPlan) -> Result<EstimateResult> {
    scenario.validate()?;
    plan.validate(scenario)?;
    let outcomes: Vec<TrialOutcome> = (0..scenario.trials as u64)
        .into_par_iter()
        .map(|k| {
            let mut rng = trial_rng(scenario.seed, k);
            let highway = Highway::draw(scenario, &mut rng)?;
            run_highway(scenario, plan, &highway)
        })
        .collect::<Result<_>>()?;
    Ok(aggregate(scenario.chain_length, &outcomes))
}

fn aggregate(n: usize, outcomes: &[TrialOutcome]) -> EstimateResult {
    let trials = outcomes.len() as u64;
    let mut hits = vec![0u64; n];
    let mut onset_sum = vec![0.0; n];
    let mut delay_sum = vec![0.0; n];
    let mut delay_count = vec![0u64; n];
    let mut infeasible = vec![0u64; n];
    let mut chain_hits = Vec::with_capacity(outcomes.len());
    for o in outcomes {
        for i in 0..n {
            hits[i] += o.collided[i] as u64;
            onset_sum[i] += o.onsets[i];
            if o.comm_delays[i].is_finite() {
                delay_sum[i] += o.comm_delays[i];
                delay_count[i] += 1;
            }
            infeasible[i] += o.infeasible[i] as u64;
        }
        chain_hits.push(o.chain_collision);
    }
    let chain_count = chain_hits.iter().filter(|&&h| h).count() as u64;
    EstimateResult {
        trials,
        per_vehicle: hits
            .iter()
            .map(|&h| Proportion::from_counts(h, trials))
            .collect(),
        chain: Proportion::from_counts(chain_count, trials),
        mean_onset: onset_sum.iter().map(|s| s / trials as f64).collect(),
        mean_comm_delay: delay_sum
            .iter()
            .zip(&delay_count)
            .map(|(&s, &c)| (c > 0).then(|| s / c as f64))
            .collect(),
        infeasible_rate: infeasible
            .iter()
            .map(|&c| c as f64 / trials as f64)
            .collect(),
        chain_hits,
    }
}

/// Runs `f` on a dedicated pool with `workers` threads, or on the global
/// pool when `workers` is `None`.
pub fn with_workers<T: Send>(workers: Option<usize>, f: impl FnOnce() -> T + Send) -> T {
    match workers {
        Some(w) => rayon::ThreadPoolBuilder::new()
            .num_threads(w.max(1))
            .build()
            .expect("failed to build worker pool")
            .install(f),
        None => f(),
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn small() -> ScenarioConfig {
        ScenarioConfig {
            chain_length: 6,
            other_lanes: vec![6],
            trials: 200,
            ..Default::default()
        }
    }

    #[test]
    fn defaults_validate() {
        ScenarioConfig::default().validate().unwrap();
        let p = ScenarioConfig::default().channel_params().unwrap();
        assert_eq!(p.beta_db().round(), 5.0);
    }

    #[test]
    fn invalid_scenarios_rejected() {
        let bad = ScenarioConfig {
            chain_length: 1,
            ..Default::default()
        };
        assert!(bad.validate().is_err());
        let mut bad = ScenarioConfig::default();
        bad.channel.alpha = 0.5;
        assert!(bad.validate().is_err());
        let mut bad = ScenarioConfig::default();
        bad.link.rate_bps = 5e6;
        assert!(matches!(bad.validate(), Err(Error::UnknownRate { .. })));
    }

    #[test]
    fn highway_geometry() {
        let s = small();
        let h = Highway::draw(&s, &mut trial_rng(3, 0)).unwrap();
        assert_eq!(h.chain_positions[0], 0.0);
        for i in 1..s.chain_length {
            assert!(h.gaps[i] >= 15.0 && h.gaps[i] < 40.0);
            assert!((h.chain_positions[i - 1] - h.chain_positions[i] - h.gaps[i]).abs() < 1e-9);
            assert!(h.taus[i] >= 0.3 && h.taus[i] <= 3.0);
        }
        assert_eq!(h.background_positions.len(), 6);
    }

    #[test]
    fn trial_is_deterministic() {
        let s = small();
        let plan = AccessPlan::uniform(0.05, s.chain_length);
        assert_eq!(
            run_trial(&s, &plan, 17).unwrap(),
            run_trial(&s, &plan, 17).unwrap()
        );
    }

    #[test]
    fn silent_network_equals_brake_lights() {
        let s = small();
        let silent = AccessPlan::uniform(0.0, s.chain_length);
        let off = ScenarioConfig {
            comms: CommsModel::Disabled,
            ..s.clone()
        };
        for k in 0..50 {
            let a = run_trial(&s, &silent, k).unwrap();
            let b = run_trial(&off, &silent, k).unwrap();
            assert_eq!(a.onsets, b.onsets);
            assert_eq!(a.collided, b.collided);
        }
    }

    #[test]
    fn instant_warning_onsets() {
        let s = ScenarioConfig {
            comms: CommsModel::Instant,
            ..small()
        };
        let plan = AccessPlan::uniform(0.05, s.chain_length);
        let h = Highway::draw(&s, &mut trial_rng(s.seed, 4)).unwrap();
        let o = run_trial(&s, &plan, 4).unwrap();
        assert_eq!(o.onsets[1..], h.taus[1..]);
    }

    #[test]
    fn single_trial_estimate() {
        let s = ScenarioConfig {
            trials: 1,
            ..small()
        };
        let plan = AccessPlan::uniform(0.05, s.chain_length);
        let e = estimate(&s, &plan).unwrap();
        let o = run_trial(&s, &plan, 0).unwrap();
        for i in 0..s.chain_length {
            assert_eq!(e.per_vehicle[i].p, o.collided[i] as u8 as f64);
        }
        assert_eq!(e.chain.p, o.chain_collision as u8 as f64);
    }

    #[test]
    fn estimate_independent_of_workers() {
        let s = small();
        let plan = AccessPlan::uniform(0.08, s.chain_length);
        let a = with_workers(Some(1), || estimate(&s, &plan).unwrap());
        let b = with_workers(Some(3), || estimate(&s, &plan).unwrap());
        assert_eq!(a, b);
    }

    #[test]
    fn seeds_differ_by_stream_and_index() {
        assert_ne!(derive_seed(1, 0, 0), derive_seed(1, 0, 1));
        assert_ne!(derive_seed(1, 0, 0), derive_seed(1, 1, 0));
        assert_eq!(derive_seed(9, 2, 3), derive_seed(9, 2, 3));
    }
}
