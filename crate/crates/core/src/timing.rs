//! Delay model for warning dissemination along the chain.
//!
//! A link whose per-slot delivery probability is `q = P_s · p_tr · (1 - p_rx)`
//! needs a geometric number of slots with mean `s = 1/q`. The reception delay
//! of vehicle `i` is the best of the direct path from the leader, the path
//! through the brake lights of `i - 1`, and every single-relay path through a
//! vehicle `j` that first hears the leader, reacts for its perception-reaction
//! time and then re-broadcasts its own braking status. Expected slot counts of
//! the legs are added; the legs are not convolved as distributions.
//!
//! Two different times share a symbol in the usual notation: the tolerable
//! delay of a [`LinkBudget`] and the perception-reaction time of a driver.
//! They are kept as separate quantities here.

use serde::{Deserialize, Serialize};

use crate::error::{ensure, ensure_probability, Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct LinkBudget {
    /// Packet length `L` in bits.
    pub packet_bits: f64,
    /// Data rate `R` in bit/s.
    pub rate_bps: f64,
    /// Tolerable delay for informing the first vehicle that needs the
    /// network, in seconds.
    pub tolerable_delay: f64,
}

impl LinkBudget {
    pub fn new(packet_bits: f64, rate_bps: f64, tolerable_delay: f64) -> Result<Self> {
        let budget = Self {
            packet_bits,
            rate_bps,
            tolerable_delay,
        };
        budget.validate()?;
        Ok(budget)
    }

    pub fn validate(&self) -> Result<()> {
        ensure(
            self.packet_bits.is_finite() && self.packet_bits > 0.0,
            "packet_bits",
            self.packet_bits,
            "a positive packet length",
        )?;
        ensure(
            self.rate_bps.is_finite() && self.rate_bps > 0.0,
            "rate_bps",
            self.rate_bps,
            "a positive data rate",
        )?;
        ensure(
            self.tolerable_delay.is_finite() && self.tolerable_delay > 0.0,
            "tolerable_delay",
            self.tolerable_delay,
            "a positive deadline in seconds",
        )
    }

    /// Airtime of one packet, `L / R`.
    pub fn slot_seconds(&self) -> f64 {
        self.packet_bits / self.rate_bps
    }
}

/// Mean number of slots until the first successful reception.
pub fn expected_slots(success: f64, p_tr: f64, p_rx: f64) -> Result<f64> {
    ensure_probability("P_s", success)?;
    ensure_probability("p_tr", p_tr)?;
    ensure_probability("p_rx", p_rx)?;
    let q = success * p_tr * (1.0 - p_rx);
    if q <= 0.0 {
        return Err(Error::InfeasibleLink);
    }
    Ok(1.0 / q)
}

/// `⌊τ_tol · R / L⌋`, the number of packets that fit in the deadline.
pub fn transmission_opportunities(budget: &LinkBudget) -> u64 {
    (budget.tolerable_delay * budget.rate_bps / budget.packet_bits).floor() as u64
}

/// Probability of at least one success in `opportunities` slots when the
/// mean number of slots to success is `slots`.
pub fn success_within_deadline(slots: f64, opportunities: u64) -> f64 {
    if opportunities == 0 || slots.is_infinite() {
        return 0.0;
    }
    debug_assert!(slots >= 1.0, "expected slots below one: {slots}");
    let per_slot = (1.0 / slots).min(1.0);
    if per_slot >= 1.0 {
        return 1.0;
    }
    // 1 - (1 - q)^D, evaluated without cancellation for small q.
    -((opportunities as f64) * (-per_slot).ln_1p()).exp_m1()
}

/// Average reception delay (seconds) of vehicle `i`.
///
/// `link_slots(tx, rx)` returns the expected slots for `tx` to reach `rx`; an
/// `Err(Error::InfeasibleLink)` marks the link unavailable. Adjacent pairs
/// are never queried: they cost zero slots because the follower sees the
/// brake lights. `taus[j]` is driver `j`'s perception-reaction time.
///
/// Returns `InfeasibleLink` only when every candidate path is unavailable.
pub fn reception_delay<F>(
    i: usize,
    mut link_slots: F,
    taus: &[f64],
    slot_seconds: f64,
) -> Result<f64>
where
    F: FnMut(usize, usize) -> Result<f64>,
{
    ensure(
        slot_seconds.is_finite() && slot_seconds > 0.0,
        "slot_seconds",
        slot_seconds,
        "a positive slot duration",
    )?;
    if i <= 1 {
        return Ok(0.0);
    }
    ensure(
        taus.len() >= i,
        "taus.len()",
        taus.len() as f64,
        "one reaction time per vehicle up to i",
    )?;

    let mut leg = |tx: usize, rx: usize| -> Result<Option<f64>> {
        if rx == tx + 1 {
            return Ok(Some(0.0));
        }
        match link_slots(tx, rx) {
            Ok(s) => Ok(Some(slot_seconds * s)),
            Err(Error::InfeasibleLink) => Ok(None),
            Err(e) => Err(e),
        }
    };

    let mut best = leg(0, i)?;
    if i > 2 {
        let mut consider = |candidate: Option<f64>| {
            if let Some(c) = candidate {
                best = Some(best.map_or(c, |b| b.min(c)));
            }
        };
        for j in 1..i {
            // j = i - 1 is the brake-light branch: the last leg is free.
            let first = leg(0, j)?;
            let candidate = match first {
                Some(first) => leg(j, i)?.map(|last| first + taus[j] + last),
                None => None,
            };
            consider(candidate);
        }
    }
    best.ok_or(Error::InfeasibleLink)
}

/// [`reception_delay`] for a link model that depends only on the index
/// separation `k` between transmitter and receiver; `s[k]` is indexed by `k`
/// and `s[1]` must be zero.
pub fn reception_delay_by_separation(
    i: usize,
    s: &[f64],
    taus: &[f64],
    slot_seconds: f64,
) -> Result<f64> {
    if i <= 1 {
        return Ok(0.0);
    }
    ensure(
        s.len() > i,
        "s.len()",
        s.len() as f64,
        "an expected-slot entry for every separation up to i",
    )?;
    ensure(s[1] == 0.0, "s(1)", s[1], "zero for adjacent vehicles")?;
    reception_delay(
        i,
        |tx, rx| {
            let v = s[rx - tx];
            if v.is_finite() {
                Ok(v)
            } else {
                Err(Error::InfeasibleLink)
            }
        },
        taus,
        slot_seconds,
    )
}

/// Per-vehicle expected slots from the leader and reception delays for a
/// whole chain. Infeasible entries are `f64::INFINITY`.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ChainTiming {
    pub slots: Vec<f64>,
    pub taus: Vec<f64>,
    pub delays: Vec<f64>,
}

impl ChainTiming {
    pub fn compute<F>(mut link_slots: F, taus: &[f64], slot_seconds: f64) -> Result<Self>
    where
        F: FnMut(usize, usize) -> Result<f64>,
    {
        let n = taus.len();
        let mut slots = vec![0.0; n];
        let mut delays = vec![0.0; n];
        for i in 2..n {
            slots[i] = match link_slots(0, i) {
                Ok(s) => s,
                Err(Error::InfeasibleLink) => f64::INFINITY,
                Err(e) => return Err(e),
            };
            delays[i] = match reception_delay(i, &mut link_slots, taus, slot_seconds) {
                Ok(d) => d,
                Err(Error::InfeasibleLink) => f64::INFINITY,
                Err(e) => return Err(e),
            };
        }
        Ok(Self {
            slots,
            taus: taus.to_vec(),
            delays,
        })
    }
}
