//! Slot-level simulation of the SIR success event, used to check the
//! closed-form product in [`crate::channel`].

use rand::Rng;
use rand_chacha::rand_core::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::Exp1;
use serde::Serialize;

use crate::channel::{ChannelParams, Interferer, MacMode};
use crate::error::{ensure, ensure_probability, Result};

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct OracleEstimate {
    pub p: f64,
    pub stderr: f64,
    pub slots: u64,
}

/// Empirical success fraction over `slots` independent slots.
///
/// Each slot draws one on/off indicator per interferer and unit-mean
/// exponential fading powers for the signal and every active interferer.
/// In SAP mode an interferer is active when it transmitted in the current
/// slot or in the previous one; both draws are fresh per slot so that slots
/// remain independent.
pub fn slot_oracle_success(
    r: f64,
    interferers: &[Interferer],
    params: &ChannelParams,
    slots: u64,
    seed: u64,
) -> Result<OracleEstimate> {
    ensure(slots >= 1, "slots", slots as f64, "at least one slot")?;
    ensure(r.is_finite() && r > 0.0, "r", r, "a positive link distance")?;
    for i in interferers {
        ensure(
            i.r.is_finite() && i.r > 0.0,
            "r_i",
            i.r,
            "a positive interferer distance",
        )?;
        ensure_probability("p_i", i.p)?;
    }
    let alpha = params.alpha();
    let beta = params.beta_linear();
    let gains: Vec<f64> = interferers.iter().map(|i| i.r.powf(-alpha)).collect();
    let signal_gain = r.powf(-alpha);
    let sap = params.mode() == MacMode::Sap;

    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut hits = 0u64;
    for _ in 0..slots {
        let mut interference = 0.0;
        for (i, g) in interferers.iter().zip(&gains) {
            let mut on = rng.random_bool(i.p);
            if sap {
                on |= rng.random_bool(i.p);
            }
            if on {
                let h: f64 = rng.sample(Exp1);
                interference += h * g;
            }
        }
        let h: f64 = rng.sample(Exp1);
        if interference == 0.0 || h * signal_gain > beta * interference {
            hits += 1;
        }
    }
    let p = hits as f64 / slots as f64;
    Ok(OracleEstimate {
        p,
        stderr: (p * (1.0 - p) / slots as f64).sqrt(),
        slots,
    })
}
