//! Closed-form packet success under path loss, Rayleigh fading and
//! p-persistent interference.
//!
//! A transmitter at distance `r` delivers a packet when the received signal
//! power `h r^-α` exceeds `β` times the aggregate interference
//! `Σ b_i h_i r_i^-α`, where every fading power is unit-mean exponential and
//! every `b_i` is a Bernoulli indicator with the interferer's access
//! probability. Averaging over the fading and the indicators gives a product
//! with one factor per interferer:
//!
//! ```text
//! P_s = Π_i [ p_i / (1 + β r^α r_i^-α) + (1 - p_i) ]
//! ```
//!
//! Noise is ignored; the model is a pure SIR outage. Lateral lane offsets are
//! neglected, so `r_i` is the longitudinal distance to the receiver.

use serde::{Deserialize, Serialize};

use crate::error::{ensure, ensure_probability, Error, Result};

/// Slot discipline of the p-persistent MAC.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum MacMode {
    /// Slotted synchronous: slots are aligned (GPS timing).
    #[default]
    Ssp,
    /// Slotted asynchronous: an interferer may overlap two slots of a
    /// transmission.
    Sap,
}

/// How the two-slot overlap of SAP maps an access probability.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum SapRule {
    /// `2p - p²`, the probability of transmitting in either of two slots.
    #[default]
    Exact,
    /// `min(2p, 1)`, the small-p approximation.
    Approx,
}

/// Propagation and decoding constants for the success probability.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ChannelParams {
    alpha: f64,
    beta_linear: f64,
    mode: MacMode,
    sap_rule: SapRule,
}

impl ChannelParams {
    /// `alpha` is the path-loss exponent (> 1), `beta_linear` the SIR
    /// decoding threshold as a power ratio (> 0).
    pub fn new(alpha: f64, beta_linear: f64, mode: MacMode) -> Result<Self> {
        ensure(
            alpha.is_finite() && alpha > 1.0,
            "alpha",
            alpha,
            "a path-loss exponent > 1",
        )?;
        ensure(
            beta_linear.is_finite() && beta_linear > 0.0,
            "beta_linear",
            beta_linear,
            "a positive linear SIR threshold",
        )?;
        Ok(Self {
            alpha,
            beta_linear,
            mode,
            sap_rule: SapRule::Exact,
        })
    }

    /// Builds the parameters with the threshold paired with `rate_bps` in the rate table.
    pub fn for_rate(alpha: f64, rate_bps: f64, mode: MacMode) -> Result<Self> {
        let beta_db = sir_threshold_for_rate(rate_bps)?;
        Self::new(alpha, db_to_linear(beta_db), mode)
    }

    pub fn with_sap_rule(mut self, rule: SapRule) -> Self {
        self.sap_rule = rule;
        self
    }

    pub fn with_mode(mut self, mode: MacMode) -> Self {
        self.mode = mode;
        self
    }

    pub fn alpha(&self) -> f64 {
        self.alpha
    }

    pub fn beta_linear(&self) -> f64 {
        self.beta_linear
    }

    pub fn beta_db(&self) -> f64 {
        10.0 * self.beta_linear.log10()
    }

    pub fn mode(&self) -> MacMode {
        self.mode
    }

    pub fn sap_rule(&self) -> SapRule {
        self.sap_rule
    }

    /// Access probability an interferer (or listener) presents under the
    /// configured MAC mode.
    pub fn effective_probability(&self, p: f64) -> Result<f64> {
        match self.mode {
            MacMode::Ssp => {
                ensure_probability("p", p)?;
                Ok(p)
            }
            MacMode::Sap => match self.sap_rule {
                SapRule::Exact => sap_effective_probability(p),
                SapRule::Approx => sap_approx_probability(p),
            },
        }
    }
}

/// One potential interferer as seen from the receiver.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Interferer {
    /// Distance to the receiver in meters.
    pub r: f64,
    /// Channel-access probability.
    pub p: f64,
}

impl Interferer {
    pub fn new(r: f64, p: f64) -> Self {
        Self { r, p }
    }
}

/// IEEE 802.11p data rates and their SIR decoding thresholds: (Mbit/s, dB).
pub const RATE_TABLE: [RateEntry; 7] = [
    RateEntry::mbps(3.0, 5.0),
    RateEntry::mbps(4.5, 6.0),
    RateEntry::mbps(6.0, 8.0),
    RateEntry::mbps(9.0, 11.0),
    RateEntry::mbps(12.0, 15.0),
    RateEntry::mbps(18.0, 20.0),
    RateEntry::mbps(24.0, 25.0),
];

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RateEntry {
    pub rate_bps: f64,
    pub beta_db: f64,
}

impl RateEntry {
    const fn mbps(rate_mbps: f64, beta_db: f64) -> Self {
        Self {
            rate_bps: rate_mbps * 1e6,
            beta_db,
        }
    }
}

pub fn db_to_linear(x_db: f64) -> f64 {
    10f64.powf(x_db / 10.0)
}

/// SIR decoding threshold (dB) for one of the seven 802.11p rates.
pub fn sir_threshold_for_rate(rate_bps: f64) -> Result<f64> {
    RATE_TABLE
        .iter()
        .find(|e| (e.rate_bps - rate_bps).abs() < 0.5)
        .map(|e| e.beta_db)
        .ok_or_else(|| Error::UnknownRate {
            rate_bps,
            supported: RATE_TABLE
                .iter()
                .map(|e| format!("{}", e.rate_bps / 1e6))
                .collect::<Vec<_>>()
                .join(", "),
        })
}

/// `p + p - p·p`: the chance an unsynchronized node is on air during either
/// of the two slots it can overlap.
pub fn sap_effective_probability(p: f64) -> Result<f64> {
    ensure_probability("p", p)?;
    Ok((2.0 * p - p * p).min(1.0))
}

/// The `2p` approximation of [`sap_effective_probability`], clamped to 1.
pub fn sap_approx_probability(p: f64) -> Result<f64> {
    ensure_probability("p", p)?;
    Ok((2.0 * p).min(1.0))
}

/// Probability that a receiver at distance `r` decodes a packet, given that
/// the transmitter is on air. The interferer list excludes the transmitter
/// and the receiver themselves.
pub fn packet_success(r: f64, interferers: &[Interferer], params: &ChannelParams) -> Result<f64> {
    packet_success_iter(r, interferers.iter().copied(), params)
}

/// Iterator form of [`packet_success`], used when the interferer field is
/// derived on the fly from a scenario.
pub fn packet_success_iter<I>(r: f64, interferers: I, params: &ChannelParams) -> Result<f64>
where
    I: IntoIterator<Item = Interferer>,
{
    ensure(r.is_finite() && r > 0.0, "r", r, "a positive link distance")?;
    let signal_term = params.beta_linear * r.powf(params.alpha);
    let mut product = 1.0;
    for Interferer { r: r_i, p } in interferers {
        ensure(
            r_i.is_finite() && r_i > 0.0,
            "r_i",
            r_i,
            "a positive interferer distance",
        )?;
        let p = params.effective_probability(p)?;
        if p == 0.0 {
            continue;
        }
        product *= p / (1.0 + signal_term * r_i.powf(-params.alpha)) + (1.0 - p);
    }
    Ok(product)
}
