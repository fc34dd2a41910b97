//! Access-probability sweeps: one uniform probability for every vehicle, or
//! a Safe/Unsafe pair chosen by the adaptation loop.

use serde::Serialize;

use super::{derive_seed, estimate, AccessPlan, EstimateResult, PairedDifference, ScenarioConfig};
use crate::adaptation::{adapt, AccessAssignment, AdaptationConfig};
use crate::error::{ensure, Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum SweepKind {
    Equal,
    Differentiated,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SweepCell {
    pub p_safe: f64,
    pub p_unsafe: f64,
    pub estimate: EstimateResult,
    /// Converged assignment of a differentiated cell.
    pub assignment: Option<AccessAssignment>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SweepGrid {
    pub kind: SweepKind,
    pub p_safe_axis: Vec<f64>,
    pub p_unsafe_axis: Vec<f64>,
    pub cells: Vec<SweepCell>,
    /// Index into `cells` of the lowest chain collision probability; the
    /// first such cell on ties.
    pub argmin: usize,
}

impl SweepGrid {
    fn new(
        kind: SweepKind,
        p_safe_axis: Vec<f64>,
        p_unsafe_axis: Vec<f64>,
        cells: Vec<SweepCell>,
    ) -> Result<Self> {
        let argmin = cells
            .iter()
            .enumerate()
            .min_by(|a, b| a.1.estimate.chain.p.total_cmp(&b.1.estimate.chain.p))
            .map(|(k, _)| k)
            .ok_or_else(|| Error::Scenario("sweep grid has no valid cell".into()))?;
        Ok(Self {
            kind,
            p_safe_axis,
            p_unsafe_axis,
            cells,
            argmin,
        })
    }

    pub fn best(&self) -> &SweepCell {
        &self.cells[self.argmin]
    }
}

fn check_axis(name: &'static str, axis: &[f64]) -> Result<()> {
    if axis.is_empty() {
        return Err(Error::Scenario(format!("{name} grid is empty")));
    }
    for &p in axis {
        ensure(p > 0.0 && p < 1.0, name, p, "grid values in (0, 1)")?;
    }
    Ok(())
}

fn cell_scenario(scenario: &ScenarioConfig, cell: usize) -> ScenarioConfig {
    let mut s = scenario.clone();
    if !scenario.paired_seeds {
        s.seed = derive_seed(scenario.seed, 0x5eed, cell as u64);
    }
    s
}

/// Estimates the chain collision probability at every uniform `p` in `grid`.
pub fn sweep_equal(scenario: &ScenarioConfig, grid: &[f64]) -> Result<SweepGrid> {
    scenario.validate()?;
    check_axis("p", grid)?;
    let cells = grid
        .iter()
        .enumerate()
        .map(|(k, &p)| {
            let s = cell_scenario(scenario, k);
            Ok(SweepCell {
                p_safe: p,
                p_unsafe: p,
                estimate: estimate(&s, &AccessPlan::uniform(p, s.chain_length))?,
                assignment: None,
            })
        })
        .collect::<Result<Vec<_>>>()?;
    SweepGrid::new(SweepKind::Equal, grid.to_vec(), grid.to_vec(), cells)
}

/// Result of a differentiated sweep and its comparison with the best
/// uniform probability.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct DifferentiatedSweep {
    pub grid: SweepGrid,
    pub equal_best_p: f64,
    pub equal_best_collision: f64,
    /// `equal - differentiated` at the two minima, with its paired standard
    /// error when the cells share trial seeds.
    pub improvement: PairedDifference,
    /// `improvement / equal_best_collision`.
    pub relative_reduction: f64,
}

/// Runs the adaptation loop for every `p_safe ≤ p_unsafe` pair and
/// estimates the chain collision probability at its final assignment.
/// Pairs with `p_unsafe < p_safe` are skipped.
pub fn sweep_differentiated(
    scenario: &ScenarioConfig,
    p_safe_grid: &[f64],
    p_unsafe_grid: &[f64],
    config: &AdaptationConfig,
    equal: &SweepGrid,
) -> Result<DifferentiatedSweep> {
    scenario.validate()?;
    check_axis("p_safe", p_safe_grid)?;
    check_axis("p_unsafe", p_unsafe_grid)?;
    let mut cells = Vec::new();
    for (a, &p_safe) in p_safe_grid.iter().enumerate() {
        for (b, &p_unsafe) in p_unsafe_grid.iter().enumerate() {
            if p_unsafe < p_safe {
                continue;
            }
            let s = cell_scenario(scenario, a * p_unsafe_grid.len() + b);
            let outcome = adapt(&s, &config.with_pair(p_safe, p_unsafe))?;
            let est = estimate(&s, &outcome.assignment.plan())?;
            cells.push(SweepCell {
                p_safe,
                p_unsafe,
                estimate: est,
                assignment: Some(outcome.assignment),
            });
        }
    }
    let grid = SweepGrid::new(
        SweepKind::Differentiated,
        p_safe_grid.to_vec(),
        p_unsafe_grid.to_vec(),
        cells,
    )?;

    let base = equal.best();
    let best = grid.best();
    let improvement = if scenario.paired_seeds && base.estimate.trials == best.estimate.trials {
        base.estimate.paired_difference(&best.estimate)?
    } else {
        let (x, y) = (&base.estimate.chain, &best.estimate.chain);
        PairedDifference {
            mean: x.p - y.p,
            stderr: x.stderr.hypot(y.stderr),
        }
    };
    let equal_best_collision = base.estimate.chain.p;
    Ok(DifferentiatedSweep {
        equal_best_p: base.p_safe,
        equal_best_collision,
        relative_reduction: if equal_best_collision > 0.0 {
            improvement.mean / equal_best_collision
        } else {
            0.0
        },
        improvement,
        grid,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn small() -> ScenarioConfig {
        ScenarioConfig {
            chain_length: 5,
            other_lanes: vec![5],
            trials: 100,
            ..Default::default()
        }
    }

    #[test]
    fn single_point_grid() {
        let g = sweep_equal(&small(), &[0.07]).unwrap();
        assert_eq!(g.cells.len(), 1);
        assert_eq!(g.best().p_safe, 0.07);
    }

    #[test]
    fn bad_grid_rejected() {
        assert!(sweep_equal(&small(), &[]).is_err());
        assert!(sweep_equal(&small(), &[0.0]).is_err());
        assert!(sweep_equal(&small(), &[1.0]).is_err());
    }

    #[test]
    fn argmin_is_minimum() {
        let g = sweep_equal(&small(), &[0.01, 0.05, 0.2]).unwrap();
        let best = g.best().estimate.chain.p;
        assert!(g.cells.iter().all(|c| c.estimate.chain.p >= best));
    }

    #[test]
    fn degenerate_pair_matches_equal_cell() {
        let s = small();
        let equal = sweep_equal(&s, &[0.05]).unwrap();
        let config = AdaptationConfig {
            trials_per_round: 50,
            max_iterations: 2,
            ..Default::default()
        };
        let d = sweep_differentiated(&s, &[0.05], &[0.05], &config, &equal).unwrap();
        assert_eq!(d.grid.cells.len(), 1);
        assert_eq!(d.grid.best().estimate, equal.best().estimate);
        assert_eq!(d.improvement.mean, 0.0);
    }
}
