#![allow(dead_code)]

use vanet_adapt::montecarlo::{DriverProfile, ScenarioConfig};

/// Default scenario with a shorter chain and fewer trials.
pub fn small_scenario(chain_length: usize, trials: usize) -> ScenarioConfig {
    ScenarioConfig {
        chain_length,
        other_lanes: vec![chain_length, chain_length],
        trials,
        ..Default::default()
    }
}

/// Every driver identical and every gap identical.
pub fn uniform_chain(chain_length: usize, gap: f64, tau: f64, trials: usize) -> ScenarioConfig {
    let mut s = small_scenario(chain_length, trials);
    s.gap.min = gap;
    s.gap.max = gap;
    s.reaction_time.min = tau;
    s.reaction_time.max = tau;
    s.reaction_time.median = tau;
    s.reaction_time.sigma_log = 0.0;
    s
}

/// Odd followers react twice as slowly and follow at half the distance.
pub fn mixed_chain(chain_length: usize, trials: usize) -> ScenarioConfig {
    let mut s = small_scenario(chain_length, trials);
    s.drivers = (1..chain_length)
        .map(|i| {
            if i % 2 == 1 {
                DriverProfile {
                    tau_scale: 2.0,
                    gap_scale: 0.5,
                    deceleration: None,
                }
            } else {
                DriverProfile::default()
            }
        })
        .collect();
    s
}
