//! Braking-chain kinematics.
//!
//! The leader brakes at `t = 0`. Without communications every follower reacts
//! to the brake lights of its predecessor, so onsets accumulate reaction
//! times. A received warning lets a driver start reacting earlier. Each
//! vehicle then travels at constant speed until its onset and decelerates at
//! a constant rate to a stop. A collision is a negative bumper-to-bumper gap
//! with the predecessor; the striking vehicle halts at the contact point.
//!
//! Vehicle lengths are folded into the gaps. `taus` and comm-delay slices in
//! this module are follower-indexed: element `k` belongs to vehicle `k + 1`.

use serde::{Deserialize, Serialize};

use crate::adaptation::SafetyClass;
use crate::error::{ensure, Error, Result};

/// Onsets `t_i = Σ_{j≤i} τ_j`, with the leader's `t_0 = 0` prepended.
pub fn brake_onset_no_comms(taus: &[f64]) -> Vec<f64> {
    let mut onsets = Vec::with_capacity(taus.len() + 1);
    onsets.push(0.0);
    let mut t = 0.0;
    for tau in taus {
        t += tau;
        onsets.push(t);
    }
    onsets
}

/// Onsets `t_i = τ_i + min(t_{i-1}, t_c(i))`: each driver reacts to whichever
/// comes first, the predecessor's brake lights or the warning.
pub fn brake_onset_with_comms(taus: &[f64], comm_delays: &[f64]) -> Vec<f64> {
    brake_onset_with_relays(taus, comm_delays, |_, _| f64::INFINITY)
}

/// Like [`brake_onset_with_comms`], plus warnings originated by vehicles that
/// have already braked: vehicle `i` may also hear vehicle `j ≤ i - 2` at
/// `t_j + relay_leg(j, i)` seconds. Indices passed to `relay_leg` are vehicle
/// indices (leader = 0).
pub fn brake_onset_with_relays<F>(taus: &[f64], comm_delays: &[f64], mut relay_leg: F) -> Vec<f64>
where
    F: FnMut(usize, usize) -> f64,
{
    assert_eq!(taus.len(), comm_delays.len(), "one comm delay per follower");
    let mut onsets: Vec<f64> = Vec::with_capacity(taus.len() + 1);
    onsets.push(0.0);
    for (k, (&tau, &tc)) in taus.iter().zip(comm_delays).enumerate() {
        let i = k + 1;
        let mut informed = onsets[i - 1].min(tc);
        for j in 1..i.saturating_sub(1) {
            informed = informed.min(onsets[j] + relay_leg(j, i));
        }
        onsets.push(tau + informed);
    }
    onsets
}

/// Constant speed, then constant deceleration to standstill. An optional halt
/// time freezes the vehicle in place (used after a collision).
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Trajectory {
    pub start: f64,
    pub speed: f64,
    pub brake_time: f64,
    pub decel: f64,
    pub halt_time: f64,
}

impl Trajectory {
    pub fn new(start: f64, speed: f64, brake_time: f64, decel: f64) -> Self {
        Self {
            start,
            speed,
            brake_time,
            decel,
            halt_time: f64::INFINITY,
        }
    }

    pub fn stop_time(&self) -> f64 {
        self.brake_time + self.speed / self.decel
    }

    pub fn position(&self, t: f64) -> f64 {
        let t = t.min(self.halt_time);
        if t <= self.brake_time {
            self.start + self.speed * t
        } else {
            let d = (t - self.brake_time).min(self.speed / self.decel);
            self.start + self.speed * self.brake_time + self.speed * d - 0.5 * self.decel * d * d
        }
    }

    pub fn velocity(&self, t: f64) -> f64 {
        if t >= self.halt_time || t >= self.stop_time() {
            0.0
        } else if t <= self.brake_time {
            self.speed
        } else {
            (self.speed - self.decel * (t - self.brake_time)).max(0.0)
        }
    }

    /// Acceleration on the open interval just after `t`.
    fn acceleration_after(&self, t: f64) -> f64 {
        if t >= self.halt_time || t < self.brake_time || t >= self.stop_time() {
            0.0
        } else {
            -self.decel
        }
    }

    fn breakpoints(&self) -> [f64; 3] {
        [self.brake_time, self.stop_time(), self.halt_time]
    }
}

/// Breakpoints of both trajectories, sorted, starting at zero. Past the last
/// one both velocities are constant.
fn merged_breakpoints(a: &Trajectory, b: &Trajectory) -> Vec<f64> {
    let mut ts: Vec<f64> = std::iter::once(0.0)
        .chain(a.breakpoints())
        .chain(b.breakpoints())
        .filter(|t| t.is_finite() && *t >= 0.0)
        .collect();
    ts.sort_by(f64::total_cmp);
    ts.dedup();
    ts
}

/// Minimum over `t ≥ 0` of `lead.position(t) - follow.position(t)`.
pub fn min_gap(lead: &Trajectory, follow: &Trajectory) -> f64 {
    let gap = |t: f64| lead.position(t) - follow.position(t);
    let ts = merged_breakpoints(lead, follow);
    let mut best = f64::INFINITY;
    for (k, &t0) in ts.iter().enumerate() {
        best = best.min(gap(t0));
        let t1 = ts.get(k + 1).copied().unwrap_or(f64::INFINITY);
        let rel_acc = lead.acceleration_after(t0) - follow.acceleration_after(t0);
        let rel_vel = lead.velocity(t0) - follow.velocity(t0);
        // Past the last breakpoint both vehicles stand still.
        if rel_acc != 0.0 {
            let t_star = t0 - rel_vel / rel_acc;
            if t_star > t0 && t_star < t1 {
                best = best.min(gap(t_star));
            }
        }
    }
    best
}

/// Earliest time at which the gap reaches zero, if it ever does.
pub fn first_contact(lead: &Trajectory, follow: &Trajectory) -> Option<f64> {
    let gap = |t: f64| lead.position(t) - follow.position(t);
    let ts = merged_breakpoints(lead, follow);
    for (k, &t0) in ts.iter().enumerate() {
        let g0 = gap(t0);
        if g0 <= 0.0 {
            return Some(t0);
        }
        let t1 = ts.get(k + 1).copied().unwrap_or(f64::INFINITY);
        let g1 = lead.velocity(t0) - follow.velocity(t0);
        let c = lead.acceleration_after(t0) - follow.acceleration_after(t0);
        // g0 + g1 u + c u²/2 = 0, smallest positive root within the segment.
        let root = if c == 0.0 {
            (g1 < 0.0).then(|| -g0 / g1)
        } else {
            let disc = g1 * g1 - 2.0 * c * g0;
            if disc < 0.0 {
                None
            } else {
                let sq = disc.sqrt();
                let mut roots = [(-g1 - sq) / c, (-g1 + sq) / c];
                roots.sort_by(f64::total_cmp);
                roots.into_iter().find(|u| *u > 0.0)
            }
        };
        if let Some(u) = root {
            if t0 + u <= t1 {
                return Some(t0 + u);
            }
        }
    }
    None
}

/// Minimum gap between a leader and its follower that start `gap` meters
/// apart at the same speed `v` and brake at the given onsets with the same
/// deceleration `a`. Negative values are collisions.
pub fn min_gap_two_vehicles(
    v: f64,
    gap: f64,
    lead_brake_time: f64,
    follow_brake_time: f64,
    a: f64,
) -> Result<f64> {
    ensure(v.is_finite() && v > 0.0, "v", v, "a positive speed")?;
    ensure(a.is_finite() && a > 0.0, "a", a, "a positive deceleration")?;
    ensure(gap.is_finite() && gap > 0.0, "gap", gap, "a positive gap")?;
    ensure(
        lead_brake_time.is_finite() && lead_brake_time >= 0.0,
        "lead_brake_time",
        lead_brake_time,
        "a nonnegative time",
    )?;
    ensure(
        follow_brake_time.is_finite() && follow_brake_time >= 0.0,
        "follow_brake_time",
        follow_brake_time,
        "a nonnegative time",
    )?;
    let lead = Trajectory::new(gap, v, lead_brake_time, a);
    let follow = Trajectory::new(0.0, v, follow_brake_time, a);
    Ok(min_gap(&lead, &follow))
}

/// Equal-deceleration shortcut: the gap closes by `v·Δt` when the follower
/// brakes `Δt` later and never closes when it brakes first.
pub fn min_gap_equal_decel(v: f64, gap: f64, dt: f64) -> f64 {
    gap - v * dt.max(0.0)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct VehicleState {
    pub index: usize,
    pub lane: u32,
    /// Front-bumper longitudinal coordinate, meters.
    pub position: f64,
    pub speed: f64,
    /// Bumper-to-bumper distance to the predecessor; unused for the leader.
    pub gap_to_predecessor: f64,
    pub tau: f64,
    pub p_access: f64,
    pub safety_class: SafetyClass,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BrakeSchedule {
    pub onset: Vec<f64>,
    pub decel: Vec<f64>,
}

impl BrakeSchedule {
    pub fn uniform(onset: Vec<f64>, decel: f64) -> Self {
        let n = onset.len();
        Self {
            onset,
            decel: vec![decel; n],
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct CollisionEvent {
    /// The striking vehicle; it hits vehicle `vehicle - 1`.
    pub vehicle: usize,
    pub time: f64,
    pub position: f64,
    pub closing_speed: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CollisionReport {
    pub collided: Vec<bool>,
    pub events: Vec<CollisionEvent>,
}

impl CollisionReport {
    pub fn any(&self) -> bool {
        !self.events.is_empty()
    }

    pub fn count(&self) -> usize {
        self.events.len()
    }
}

fn validate_chain(chain: &[VehicleState], schedule: &BrakeSchedule) -> Result<()> {
    if chain.is_empty() {
        return Err(Error::Chain("empty chain".into()));
    }
    if schedule.onset.len() != chain.len() || schedule.decel.len() != chain.len() {
        return Err(Error::Chain(format!(
            "schedule covers {} onsets / {} decelerations for {} vehicles",
            schedule.onset.len(),
            schedule.decel.len(),
            chain.len()
        )));
    }
    if schedule.onset[0] != 0.0 {
        return Err(Error::Chain(format!(
            "leader onset is {} s, expected 0",
            schedule.onset[0]
        )));
    }
    let v = chain[0].speed;
    for (i, vehicle) in chain.iter().enumerate() {
        ensure(
            vehicle.speed.is_finite() && vehicle.speed > 0.0,
            "speed",
            vehicle.speed,
            "a positive speed",
        )?;
        if vehicle.speed != v {
            return Err(Error::Chain(format!(
                "vehicle {i} speed {} differs from chain speed {v}",
                vehicle.speed
            )));
        }
        let t = schedule.onset[i];
        ensure(
            t.is_finite() && t >= 0.0,
            "onset",
            t,
            "a nonnegative finite brake time",
        )?;
        let a = schedule.decel[i];
        ensure(
            a.is_finite() && a > 0.0,
            "decel",
            a,
            "a positive deceleration",
        )?;
        if i > 0 {
            let gap = vehicle.gap_to_predecessor;
            ensure(
                gap.is_finite() && gap > 0.0,
                "gap_to_predecessor",
                gap,
                "a positive gap",
            )?;
            let spacing = chain[i - 1].position - vehicle.position;
            if spacing <= 0.0 || (spacing - gap).abs() > 1e-9 * spacing.max(1.0) {
                return Err(Error::Chain(format!(
                    "vehicle {i}: positions imply spacing {spacing} but gap_to_predecessor is {gap}"
                )));
            }
        }
    }
    Ok(())
}

/// Runs the chain front to back and reports every rear-end collision.
pub fn simulate_chain_braking(
    chain: &[VehicleState],
    schedule: &BrakeSchedule,
) -> Result<CollisionReport> {
    validate_chain(chain, schedule)?;
    let mut collided = vec![false; chain.len()];
    let mut events = Vec::new();
    let mut lead = Trajectory::new(chain[0].position, chain[0].speed, 0.0, schedule.decel[0]);
    for i in 1..chain.len() {
        let mut follow = Trajectory::new(
            chain[i].position,
            chain[i].speed,
            schedule.onset[i],
            schedule.decel[i],
        );
        if min_gap(&lead, &follow) < 0.0 {
            if let Some(t) = first_contact(&lead, &follow) {
                collided[i] = true;
                events.push(CollisionEvent {
                    vehicle: i,
                    time: t,
                    position: follow.position(t),
                    closing_speed: follow.velocity(t) - lead.velocity(t),
                });
                follow.halt_time = t;
            }
        }
        lead = follow;
    }
    Ok(CollisionReport { collided, events })
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;

    #[test]
    fn onsets_without_comms() {
        assert_eq!(
            brake_onset_no_comms(&[1.0, 1.0, 1.0]),
            vec![0.0, 1.0, 2.0, 3.0]
        );
        assert_eq!(brake_onset_no_comms(&[0.7])[1], 0.7);
        assert_eq!(brake_onset_no_comms(&[0.5, 1.5])[2], 2.0);
    }

    #[test]
    fn onsets_with_comms() {
        let taus = [1.0, 1.0, 1.0];
        assert_eq!(
            brake_onset_with_comms(&taus, &[1e9; 3]),
            brake_onset_no_comms(&taus)
        );
        assert_eq!(
            brake_onset_with_comms(&taus, &[0.0; 3]),
            vec![0.0, 1.0, 1.0, 1.0]
        );
        let t = brake_onset_with_comms(&taus, &[0.0, 0.3, 0.4]);
        assert_abs_diff_eq!(t[2], 1.3, epsilon = 1e-12);
        assert_abs_diff_eq!(t[3], 1.4, epsilon = 1e-12);
        assert_eq!(t[..2], [0.0, 1.0]);
    }

    #[test]
    fn relay_from_braked_vehicle() {
        // V₃ hears V₁ 0.2 s after V₁ brakes.
        let t = brake_onset_with_relays(&[1.0, 1.0, 1.0], &[0.0, 1e9, 1e9], |j, i| {
            if (j, i) == (1, 3) {
                0.2
            } else {
                f64::INFINITY
            }
        });
        assert_abs_diff_eq!(t[3], 2.2, epsilon = 1e-12);
    }

    #[test]
    fn two_vehicle_gaps() {
        assert_eq!(
            min_gap_two_vehicles(30.0, 25.0, 0.0, 0.0, 6.0).unwrap(),
            25.0
        );
        assert_abs_diff_eq!(
            min_gap_two_vehicles(30.0, 25.0, 0.0, 1.0, 6.0).unwrap(),
            -5.0,
            epsilon = 1e-9
        );
        assert_abs_diff_eq!(
            min_gap_two_vehicles(20.0, 30.0, 0.0, 1.0, 6.0).unwrap(),
            10.0,
            epsilon = 1e-9
        );
        // Follower braking first never closes the gap.
        assert_eq!(
            min_gap_two_vehicles(20.0, 30.0, 1.0, 0.0, 6.0).unwrap(),
            30.0
        );
        assert!(min_gap_two_vehicles(0.0, 30.0, 0.0, 1.0, 6.0).is_err());
        assert!(min_gap_two_vehicles(20.0, -1.0, 0.0, 1.0, 6.0).is_err());
        assert!(min_gap_two_vehicles(20.0, 30.0, 0.0, 1.0, 0.0).is_err());
    }

    #[test]
    fn unequal_deceleration_interior_minimum() {
        // Gentle leader, hard-braking follower: the closest approach happens
        // when the speeds match at t = 4/3, gap(t) = 40 - t² + 4(t - 1)².
        let lead = Trajectory::new(40.0, 20.0, 0.0, 2.0);
        let follow = Trajectory::new(0.0, 20.0, 1.0, 8.0);
        assert_abs_diff_eq!(min_gap(&lead, &follow), 40.0 - 4.0 / 3.0, epsilon = 1e-9);
    }

    #[test]
    fn contact_time() {
        let lead = Trajectory::new(25.0, 30.0, 0.0, 6.0);
        let follow = Trajectory::new(0.0, 30.0, 1.0, 6.0);
        let t = first_contact(&lead, &follow).unwrap();
        assert_abs_diff_eq!(lead.position(t), follow.position(t), epsilon = 1e-6);
        assert!(first_contact(&lead, &Trajectory::new(-100.0, 30.0, 1.0, 6.0)).is_none());
    }

    fn chain(gaps: &[f64], v: f64) -> Vec<VehicleState> {
        let mut x = 0.0;
        let mut out = vec![VehicleState {
            index: 0,
            lane: 0,
            position: 0.0,
            speed: v,
            gap_to_predecessor: f64::INFINITY,
            tau: 1.0,
            p_access: 0.05,
            safety_class: SafetyClass::Safe,
        }];
        for (k, g) in gaps.iter().enumerate() {
            x -= g;
            out.push(VehicleState {
                index: k + 1,
                position: x,
                gap_to_predecessor: *g,
                ..out[0].clone()
            });
        }
        out
    }

    #[test]
    fn far_apart_chain_never_collides() {
        let c = chain(&[1e6; 4], 30.0);
        let sched = BrakeSchedule::uniform(brake_onset_no_comms(&[1.0; 4]), 6.0);
        let report = simulate_chain_braking(&c, &sched).unwrap();
        assert!(!report.any());
    }

    #[test]
    fn single_pair_collision() {
        let c = chain(&[25.0], 30.0);
        let sched = BrakeSchedule::uniform(vec![0.0, 1.0], 6.0);
        let report = simulate_chain_braking(&c, &sched).unwrap();
        assert_eq!(report.collided, vec![false, true]);
        assert_eq!(report.count(), 1);
        assert_eq!(report.events[0].vehicle, 1);
    }

    #[test]
    fn invalid_chains_rejected() {
        let mut c = chain(&[20.0, 20.0], 30.0);
        let sched = BrakeSchedule::uniform(vec![0.0, 1.0, 2.0], 6.0);
        c[2].gap_to_predecessor = 5.0;
        assert!(simulate_chain_braking(&c, &sched).is_err());
        let c = chain(&[20.0, 20.0], 30.0);
        assert!(
            simulate_chain_braking(&c, &BrakeSchedule::uniform(vec![0.5, 1.0, 2.0], 6.0)).is_err()
        );
        assert!(simulate_chain_braking(&c, &BrakeSchedule::uniform(vec![0.0, 1.0], 6.0)).is_err());
    }
}
