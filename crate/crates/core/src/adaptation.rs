//! Driver-based access adaptation.
//!
//! Followers are split into Safe and Unsafe classes by their estimated
//! probability of rear-ending the vehicle ahead; Unsafe drivers get the
//! larger access probability. The loop re-estimates collision probabilities
//! under the current assignment and re-classifies until the class vector
//! stops changing.
//!
//! The leader has no predecessor and is never classified. By default it is
//! given the Unsafe probability, since every warning in the chain starts with
//! its transmissions; [`LeaderPolicy::Safe`] reverts that. Vehicles in other
//! lanes never brake and always use the Safe probability.

use serde::{Deserialize, Serialize};

use crate::error::{ensure, Error, Result};
use crate::montecarlo::{derive_seed, estimate, AccessPlan, ScenarioConfig};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize, Default)]
#[serde(rename_all = "lowercase")]
pub enum SafetyClass {
    #[default]
    Safe,
    Unsafe,
}

impl SafetyClass {
    pub fn as_str(&self) -> &'static str {
        match self {
            SafetyClass::Safe => "safe",
            SafetyClass::Unsafe => "unsafe",
        }
    }
}

/// Cutoff used to split collision probabilities into two classes.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ClassificationRule {
    /// Unsafe iff the probability exceeds this absolute value.
    Threshold(f64),
    /// Unsafe iff the probability exceeds the chain's q-quantile
    /// (lower order statistic `⌈q·n⌉`).
    Quantile(f64),
}

impl Default for ClassificationRule {
    fn default() -> Self {
        ClassificationRule::Quantile(0.5)
    }
}

/// Class the unclassified leader transmits with.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum LeaderPolicy {
    #[default]
    Unsafe,
    Safe,
}

pub fn classify(collision_probs: &[f64], rule: ClassificationRule) -> Vec<SafetyClass> {
    let cutoff = match rule {
        ClassificationRule::Threshold(t) => t,
        ClassificationRule::Quantile(q) => {
            if collision_probs.is_empty() {
                return Vec::new();
            }
            let mut sorted = collision_probs.to_vec();
            sorted.sort_by(f64::total_cmp);
            let rank = ((q * sorted.len() as f64).ceil() as usize).clamp(1, sorted.len());
            sorted[rank - 1]
        }
    };
    collision_probs
        .iter()
        .map(|&p| {
            if p > cutoff {
                SafetyClass::Unsafe
            } else {
                SafetyClass::Safe
            }
        })
        .collect()
}

/// Per-vehicle access probabilities for the chain (leader first).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AccessAssignment {
    pub p_access: Vec<f64>,
    pub classes: Vec<SafetyClass>,
    /// Probability used by vehicles outside the chain.
    pub background_p: f64,
    pub iterations: usize,
    pub converged: bool,
}

impl AccessAssignment {
    pub fn plan(&self) -> AccessPlan {
        AccessPlan {
            chain: self.p_access.clone(),
            background: self.background_p,
        }
    }
}

fn check_pair(p_safe: f64, p_unsafe: f64) -> Result<()> {
    let open = |p: f64| p > 0.0 && p < 1.0;
    ensure(open(p_safe), "p_safe", p_safe, "a probability in (0, 1)")?;
    ensure(
        open(p_unsafe),
        "p_unsafe",
        p_unsafe,
        "a probability in (0, 1)",
    )?;
    if p_unsafe < p_safe {
        return Err(Error::AccessOrdering { p_safe, p_unsafe });
    }
    Ok(())
}

/// Maps classes to probabilities; vehicles outside `classes` get `p_safe`.
pub fn assign(classes: &[SafetyClass], p_safe: f64, p_unsafe: f64) -> Result<AccessAssignment> {
    check_pair(p_safe, p_unsafe)?;
    Ok(AccessAssignment {
        p_access: classes
            .iter()
            .map(|c| match c {
                SafetyClass::Safe => p_safe,
                SafetyClass::Unsafe => p_unsafe,
            })
            .collect(),
        classes: classes.to_vec(),
        background_p: p_safe,
        iterations: 0,
        converged: true,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct AdaptationConfig {
    pub p_safe: f64,
    pub p_unsafe: f64,
    pub rule: ClassificationRule,
    pub leader: LeaderPolicy,
    pub max_iterations: usize,
    /// Trials per estimation round; each round draws from its own sub-seed.
    pub trials_per_round: usize,
    /// Master seed for the estimation rounds; `None` uses the scenario seed.
    pub seed: Option<u64>,
}

impl Default for AdaptationConfig {
    fn default() -> Self {
        Self {
            p_safe: 0.02,
            p_unsafe: 0.1,
            rule: ClassificationRule::default(),
            leader: LeaderPolicy::default(),
            max_iterations: 10,
            trials_per_round: 2000,
            seed: None,
        }
    }
}

impl AdaptationConfig {
    pub fn validate(&self) -> Result<()> {
        check_pair(self.p_safe, self.p_unsafe)?;
        ensure(
            self.max_iterations >= 1,
            "max_iterations",
            self.max_iterations as f64,
            "at least 1",
        )?;
        ensure(
            self.trials_per_round >= 1,
            "trials_per_round",
            self.trials_per_round as f64,
            "at least 1",
        )?;
        match self.rule {
            ClassificationRule::Quantile(q) => {
                ensure((0.0..=1.0).contains(&q), "quantile", q, "a value in [0, 1]")
            }
            ClassificationRule::Threshold(t) => {
                ensure(t.is_finite(), "threshold", t, "a finite value")
            }
        }
    }

    pub fn with_pair(&self, p_safe: f64, p_unsafe: f64) -> Self {
        Self {
            p_safe,
            p_unsafe,
            ..self.clone()
        }
    }

    fn leader_class(&self) -> SafetyClass {
        match self.leader {
            LeaderPolicy::Unsafe => SafetyClass::Unsafe,
            LeaderPolicy::Safe => SafetyClass::Safe,
        }
    }
}

/// One estimation round of the adaptation loop.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct TraceEntry {
    /// Zero-based round index.
    pub iteration: usize,
    /// Collision estimates per chain vehicle that produced `classes`.
    pub collision_estimates: Vec<f64>,
    pub classes: Vec<SafetyClass>,
    /// Access probabilities implied by `classes`.
    pub p_access: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct AdaptationOutcome {
    pub assignment: AccessAssignment,
    pub trace: Vec<TraceEntry>,
    /// True when the loop stopped on a class vector seen before but not the
    /// immediately preceding one.
    pub cycled: bool,
}

/// Runs the classification loop from an all-Safe chain.
pub fn adapt(scenario: &ScenarioConfig, config: &AdaptationConfig) -> Result<AdaptationOutcome> {
    adapt_from(scenario, config, None)
}

/// Runs the loop from the given follower classes (leader excluded).
pub fn adapt_from(
    scenario: &ScenarioConfig,
    config: &AdaptationConfig,
    initial_followers: Option<&[SafetyClass]>,
) -> Result<AdaptationOutcome> {
    config.validate()?;
    scenario.validate()?;
    let n = scenario.chain_length;
    let mut followers = match initial_followers {
        Some(c) if c.len() == n - 1 => c.to_vec(),
        Some(c) => {
            return Err(Error::Scenario(format!(
                "initial classes cover {} followers, chain has {}",
                c.len(),
                n - 1
            )))
        }
        None => vec![SafetyClass::Safe; n - 1],
    };
    let with_leader = |f: &[SafetyClass]| {
        let mut v = Vec::with_capacity(n);
        v.push(config.leader_class());
        v.extend_from_slice(f);
        v
    };

    let master = config.seed.unwrap_or(scenario.seed);
    let mut history = vec![followers.clone()];
    let mut trace = Vec::new();
    let mut converged = false;
    let mut cycled = false;
    for iteration in 0..config.max_iterations {
        let current = assign(&with_leader(&followers), config.p_safe, config.p_unsafe)?;
        let round = ScenarioConfig {
            seed: derive_seed(master, 0xada9, iteration as u64),
            trials: config.trials_per_round,
            ..scenario.clone()
        };
        let est = estimate(&round, &current.plan())?;
        let probs: Vec<f64> = est.per_vehicle.iter().map(|e| e.p).collect();
        let next = classify(&probs[1..], config.rule);
        let next_all = with_leader(&next);
        trace.push(TraceEntry {
            iteration,
            collision_estimates: probs,
            p_access: assign(&next_all, config.p_safe, config.p_unsafe)?.p_access,
            classes: next_all,
        });
        if next == followers {
            converged = true;
            break;
        }
        if history.contains(&next) {
            cycled = true;
            followers = next;
            break;
        }
        history.push(next.clone());
        followers = next;
    }

    let mut assignment = assign(&with_leader(&followers), config.p_safe, config.p_unsafe)?;
    assignment.iterations = trace.len();
    assignment.converged = converged;
    Ok(AdaptationOutcome {
        assignment,
        trace,
        cycled,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use SafetyClass::*;

    #[test]
    fn threshold_rule() {
        assert_eq!(
            classify(&[0.0, 0.0, 0.0], ClassificationRule::Threshold(0.1)),
            vec![Safe; 3]
        );
        assert_eq!(
            classify(&[0.0, 0.5], ClassificationRule::Threshold(0.1)),
            vec![Safe, Unsafe]
        );
        // Ties at the cutoff stay Safe.
        assert_eq!(
            classify(&[0.1, 0.2], ClassificationRule::Threshold(0.1)),
            vec![Safe, Unsafe]
        );
    }

    #[test]
    fn median_rule_by_hand() {
        let c = classify(&[0.4, 0.1, 0.3, 0.2], ClassificationRule::Quantile(0.5));
        assert_eq!(c, vec![Unsafe, Safe, Unsafe, Safe]);
        let c = classify(
            &[0.4, 0.1, 0.3, 0.2, 0.5],
            ClassificationRule::Quantile(0.5),
        );
        assert_eq!(c, vec![Unsafe, Safe, Safe, Safe, Unsafe]);
        assert_eq!(
            classify(&[0.2; 4], ClassificationRule::Quantile(0.5)),
            vec![Safe; 4]
        );
        assert!(classify(&[], ClassificationRule::Quantile(0.5)).is_empty());
    }

    #[test]
    fn assignment_maps_classes() {
        let a = assign(&[Safe; 3], 0.03, 0.08).unwrap();
        assert_eq!(a.p_access, vec![0.03; 3]);
        let a = assign(&[Safe, Unsafe, Safe], 0.03, 0.08).unwrap();
        assert_eq!(a.p_access, vec![0.03, 0.08, 0.03]);
        assert_eq!(a.background_p, 0.03);
        let a = assign(&[Safe, Unsafe], 0.05, 0.05).unwrap();
        assert_eq!(a.p_access, vec![0.05, 0.05]);
        assert_eq!(
            assign(&[Safe], 0.08, 0.03).unwrap_err(),
            Error::AccessOrdering {
                p_safe: 0.08,
                p_unsafe: 0.03
            }
        );
        assert!(assign(&[Safe], 0.0, 0.03).is_err());
    }

    #[test]
    fn config_validation() {
        assert!(AdaptationConfig::default().validate().is_ok());
        let bad = AdaptationConfig {
            max_iterations: 0,
            ..Default::default()
        };
        assert!(bad.validate().is_err());
        assert!(AdaptationConfig::default()
            .with_pair(0.2, 0.1)
            .validate()
            .is_err());
    }
}
