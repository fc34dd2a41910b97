use std::fs;
use std::path::{Path, PathBuf};

use serde::Serialize;

use super::config::RunConfig;
use super::manifest::{RunManifest, MANIFEST_FILE};
use super::CliError;
use crate::adaptation::{adapt, AdaptationOutcome, SafetyClass};
use crate::error::Error;
use crate::montecarlo::{
    link_slot_matrix, link_success, sweep_differentiated, sweep_equal, AccessPlan,
    DifferentiatedSweep, Highway, SweepGrid,
};
use crate::timing::{
    expected_slots, reception_delay, success_within_deadline, transmission_opportunities,
};
use crate::validate::{run_all, BatteryReport};

/// Collects the files of one command and writes them with the manifest.
pub struct Outputs {
    dir: PathBuf,
    manifest: RunManifest,
}

impl Outputs {
    pub fn new(
        dir: &Path,
        command: &str,
        config: &RunConfig,
        workers: Option<usize>,
    ) -> Result<Self, CliError> {
        fs::create_dir_all(dir).map_err(|e| CliError::Io(format!("{}: {e}", dir.display())))?;
        Ok(Self {
            dir: dir.to_path_buf(),
            manifest: RunManifest::new(command, config, workers),
        })
    }

    fn write(&mut self, name: &str, contents: &[u8]) -> Result<(), CliError> {
        let path = self.dir.join(name);
        fs::write(&path, contents).map_err(|e| CliError::Io(format!("{}: {e}", path.display())))?;
        self.manifest.outputs.push(name.to_string());
        Ok(())
    }

    /// Writes a CSV whose first line names the manifest.
    fn csv(&mut self, name: &str, header: &[&str], rows: &[Vec<String>]) -> Result<(), CliError> {
        let mut buf = self.manifest.csv_comment().into_bytes();
        {
            let mut w = csv::Writer::from_writer(&mut buf);
            let io = |e: csv::Error| CliError::Io(e.to_string());
            w.write_record(header).map_err(io)?;
            for r in rows {
                w.write_record(r).map_err(io)?;
            }
            w.flush().map_err(|e| CliError::Io(e.to_string()))?;
        }
        self.write(name, &buf)
    }

    pub fn finish(mut self) -> Result<PathBuf, CliError> {
        self.manifest.outputs.push(MANIFEST_FILE.to_string());
        let json = serde_json::to_string_pretty(&self.manifest).expect("manifest serializes");
        let path = self.dir.join(MANIFEST_FILE);
        fs::write(&path, json + "\n")
            .map_err(|e| CliError::Io(format!("{}: {e}", path.display())))?;
        Ok(path)
    }
}

fn num(x: f64) -> String {
    format!("{x}")
}

/// One line of the closed-form report.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct AnalyzeRow {
    pub vehicle: usize,
    /// Distance to the leader.
    pub r: f64,
    /// Success probability of the leader's packet at this vehicle.
    pub ps: f64,
    /// Expected slots for the leader to reach this vehicle; 0 for the
    /// immediate follower.
    pub s: f64,
    pub opportunities: u64,
    pub ps_deadline: f64,
    pub delay: f64,
}

/// Deterministic highway of the `analyze` section.
pub fn analyze_highway(config: &RunConfig) -> Highway {
    let sc = &config.scenario;
    let a = &config.analyze;
    let n = sc.chain_length;
    let mean_gap = 0.5 * (sc.gap.min + sc.gap.max);
    let gaps: Vec<f64> = std::iter::once(0.0)
        .chain(a.gaps.clone().unwrap_or_else(|| vec![mean_gap; n - 1]))
        .collect();
    let taus: Vec<f64> = std::iter::once(0.0)
        .chain(
            a.taus
                .clone()
                .unwrap_or_else(|| vec![sc.reaction_time.median; n - 1]),
        )
        .collect();
    let mut chain_positions = vec![0.0; n];
    for i in 1..n {
        chain_positions[i] = chain_positions[i - 1] - gaps[i];
    }
    let lanes = sc.other_lanes.len();
    let offsets = a.lane_offsets.clone().unwrap_or_else(|| {
        (0..lanes)
            .map(|k| mean_gap * (k + 1) as f64 / (lanes + 1) as f64)
            .collect()
    });
    let background_positions = sc
        .other_lanes
        .iter()
        .zip(&offsets)
        .flat_map(|(&count, &x0)| (0..count).map(move |m| x0 - m as f64 * mean_gap))
        .collect();
    Highway {
        chain_positions,
        gaps,
        taus,
        background_positions,
    }
}

pub fn analyze_plan(config: &RunConfig) -> AccessPlan {
    let a = &config.analyze;
    AccessPlan {
        chain: a
            .p_access
            .clone()
            .unwrap_or_else(|| vec![a.p; config.scenario.chain_length]),
        background: a.background_p.unwrap_or(a.p),
    }
}

/// Closed-form per-vehicle link and delay figures on the fixed geometry.
/// Returns the rows and warnings for links the leader cannot use.
pub fn analyze_chain(config: &RunConfig) -> Result<(Vec<AnalyzeRow>, Vec<String>), Error> {
    let sc = &config.scenario;
    let highway = analyze_highway(config);
    let plan = analyze_plan(config);
    let params = sc.channel_params()?;
    let opportunities = transmission_opportunities(&sc.link);
    let slot_seconds = sc.link.slot_seconds();
    let matrix = link_slot_matrix(sc, &plan, &highway)?;
    let mut rows = Vec::new();
    let mut warnings = Vec::new();
    for i in 1..sc.chain_length {
        let ps = link_success(&params, &plan, &highway, 0, i)?;
        let (s, ps_deadline) = if i == 1 {
            (0.0, 1.0)
        } else {
            match expected_slots(
                ps,
                plan.chain[0],
                params.effective_probability(plan.chain[i])?,
            ) {
                Ok(s) => (s, success_within_deadline(s, opportunities)),
                Err(Error::InfeasibleLink) => (f64::INFINITY, 0.0),
                Err(e) => return Err(e),
            }
        };
        if i >= 2 && !matrix[0][i].is_finite() {
            warnings.push(format!(
                "vehicle {i}: direct link from the leader is unavailable (success within deadline {ps_deadline:.3e})"
            ));
        }
        let link = |tx: usize, rx: usize| {
            let v = matrix[tx][rx];
            if v.is_finite() {
                Ok(v)
            } else {
                Err(Error::InfeasibleLink)
            }
        };
        let delay = match reception_delay(i, link, &highway.taus, slot_seconds) {
            Ok(d) => d,
            Err(Error::InfeasibleLink) => {
                warnings.push(format!(
                    "vehicle {i}: no warning path; relies on brake lights"
                ));
                f64::INFINITY
            }
            Err(e) => return Err(e),
        };
        rows.push(AnalyzeRow {
            vehicle: i,
            r: highway.chain_positions[0] - highway.chain_positions[i],
            ps,
            s,
            opportunities,
            ps_deadline,
            delay,
        });
    }
    Ok((rows, warnings))
}

pub fn cmd_analyze(config: &RunConfig, out: &mut Outputs) -> Result<(), CliError> {
    let (rows, warnings) = analyze_chain(config)?;
    for w in &warnings {
        eprintln!("warning: {w}");
    }
    let params = config.scenario.channel_params()?;
    println!(
        "rate {} bit/s, beta {} dB, alpha {}, mode {:?}, slot {} s",
        config.scenario.link.rate_bps,
        params.beta_db(),
        params.alpha(),
        params.mode(),
        config.scenario.link.slot_seconds()
    );
    println!(
        "{:>7} {:>9} {:>10} {:>12} {:>6} {:>10} {:>10}",
        "vehicle", "r", "Ps", "s", "D", "PsD", "D(i) s"
    );
    for r in &rows {
        println!(
            "{:>7} {:>9.2} {:>10.6} {:>12.4} {:>6} {:>10.6} {:>10.6}",
            r.vehicle, r.r, r.ps, r.s, r.opportunities, r.ps_deadline, r.delay
        );
    }
    let table: Vec<Vec<String>> = rows
        .iter()
        .map(|r| {
            vec![
                r.vehicle.to_string(),
                num(r.r),
                num(r.ps),
                num(r.s),
                r.opportunities.to_string(),
                num(r.ps_deadline),
                num(r.delay),
            ]
        })
        .collect();
    out.csv(
        "analyze.csv",
        &[
            "vehicle",
            "r",
            "Ps",
            "s",
            "D_opportunities",
            "PsD",
            "D_delay_s",
        ],
        &table,
    )
}

const EQUAL_PLOT: &str = r#"# Chain collision probability against the uniform access probability.
set datafile separator ","
set xlabel "access probability p"
set ylabel "chain collision probability"
set key off
set grid
plot "sweep-equal.csv" skip 2 using 1:2:3 with yerrorlines pointtype 7
pause -1
"#;

const PAIR_PLOT: &str = r#"# Chain collision probability over the (p_safe, p_unsafe) grid.
set datafile separator ","
set xlabel "p_safe"
set ylabel "p_unsafe"
set cblabel "chain collision probability"
set logscale xy
set view map
set key off
splot "sweep-2d.csv" skip 2 using 1:2:3 with points pointtype 5 pointsize 2 palette
pause -1
"#;

fn equal_rows(grid: &SweepGrid) -> Vec<Vec<String>> {
    grid.cells
        .iter()
        .map(|c| {
            vec![
                num(c.p_safe),
                num(c.estimate.chain.p),
                num(c.estimate.chain.stderr),
                c.estimate.trials.to_string(),
            ]
        })
        .collect()
}

fn write_equal(grid: &SweepGrid, out: &mut Outputs) -> Result<(), CliError> {
    out.csv(
        "sweep-equal.csv",
        &["p", "collision_prob", "stderr", "trials"],
        &equal_rows(grid),
    )?;
    out.write("sweep-equal.gp", EQUAL_PLOT.as_bytes())
}

fn grid_values(config: &RunConfig) -> Result<(Vec<f64>, Vec<f64>, Vec<f64>), CliError> {
    let v = |g: &super::config::GridSpec| g.values().map_err(CliError::Config);
    Ok((
        v(&config.sweep.equal)?,
        v(&config.sweep.p_safe)?,
        v(&config.sweep.p_unsafe)?,
    ))
}

pub fn cmd_sweep_equal(config: &RunConfig, out: &mut Outputs) -> Result<SweepGrid, CliError> {
    let (grid, _, _) = grid_values(config)?;
    let sweep = sweep_equal(&config.scenario, &grid)?;
    write_equal(&sweep, out)?;
    let best = sweep.best();
    println!(
        "argmin p0* = {} collision_prob = {} (stderr {})",
        best.p_safe, best.estimate.chain.p, best.estimate.chain.stderr
    );
    let interior = sweep.argmin != 0 && sweep.argmin + 1 != sweep.cells.len();
    println!(
        "argmin is {}",
        if interior {
            "interior"
        } else {
            "at a grid endpoint"
        }
    );
    Ok(sweep)
}

pub fn cmd_sweep_differentiated(
    config: &RunConfig,
    out: &mut Outputs,
) -> Result<DifferentiatedSweep, CliError> {
    let (_, safe, unsafe_) = grid_values(config)?;
    let equal = cmd_sweep_equal(config, out)?;
    let d = sweep_differentiated(
        &config.scenario,
        &safe,
        &unsafe_,
        &config.adaptation,
        &equal,
    )?;
    let rows: Vec<Vec<String>> = d
        .grid
        .cells
        .iter()
        .map(|c| {
            vec![
                num(c.p_safe),
                num(c.p_unsafe),
                num(c.estimate.chain.p),
                num(c.estimate.chain.stderr),
                c.estimate.trials.to_string(),
            ]
        })
        .collect();
    out.csv(
        "sweep-2d.csv",
        &["p_safe", "p_unsafe", "collision_prob", "stderr", "trials"],
        &rows,
    )?;
    out.write("sweep-2d.gp", PAIR_PLOT.as_bytes())?;
    let best = d.grid.best();
    println!(
        "differentiated argmin p_safe = {} p_unsafe = {} collision_prob = {} (stderr {})",
        best.p_safe, best.p_unsafe, best.estimate.chain.p, best.estimate.chain.stderr
    );
    println!(
        "reduction vs equal-p minimum: {} ({:.2}%), paired stderr {}",
        d.improvement.mean,
        100.0 * d.relative_reduction,
        d.improvement.stderr
    );
    Ok(d)
}

pub fn cmd_adapt(config: &RunConfig, out: &mut Outputs) -> Result<AdaptationOutcome, CliError> {
    let outcome = adapt(&config.scenario, &config.adaptation)?;
    let mut rows = Vec::new();
    for t in &outcome.trace {
        for (i, ((est, class), p)) in t
            .collision_estimates
            .iter()
            .zip(&t.classes)
            .zip(&t.p_access)
            .enumerate()
        {
            let label = if i == 0 { "leader" } else { class.as_str() };
            rows.push(vec![
                t.iteration.to_string(),
                i.to_string(),
                num(*est),
                label.to_string(),
                num(*p),
            ]);
        }
    }
    out.csv(
        "adapt-trace.csv",
        &["iter", "vehicle", "collision_est", "class", "p_access"],
        &rows,
    )?;
    let a = &outcome.assignment;
    let unsafe_set: Vec<usize> = a
        .classes
        .iter()
        .enumerate()
        .skip(1)
        .filter(|(_, c)| **c == SafetyClass::Unsafe)
        .map(|(i, _)| i)
        .collect();
    println!(
        "iterations {} converged {}{}",
        a.iterations,
        a.converged,
        if outcome.cycled {
            " (cycle detected)"
        } else {
            ""
        }
    );
    println!("unsafe vehicles {unsafe_set:?}");
    if !a.converged {
        println!(
            "warning: class vector did not reach a fixed point; the last assignment is reported"
        );
    }
    Ok(outcome)
}

pub fn cmd_validate(config: &RunConfig, out: &mut Outputs) -> Result<Vec<BatteryReport>, CliError> {
    let reports = run_all(&config.validation)?;
    let mut rows = Vec::new();
    for r in &reports {
        let status = if r.ok() { "PASS" } else { "FAIL" };
        println!(
            "{status} {}: {}/{} cases (need {})",
            r.name,
            r.passed(),
            r.cases.len(),
            r.required
        );
        for c in r.failures() {
            println!(
                "  failing case: {} observed {} expected {} tolerance {}",
                c.inputs, c.observed, c.expected, c.tolerance
            );
        }
        for (k, c) in r.cases.iter().enumerate() {
            rows.push(vec![
                r.name.clone(),
                k.to_string(),
                c.inputs.clone(),
                num(c.observed),
                num(c.expected),
                num(c.tolerance),
                c.pass.to_string(),
            ]);
        }
    }
    out.csv(
        "validate.csv",
        &[
            "battery",
            "case",
            "inputs",
            "observed",
            "expected",
            "tolerance",
            "pass",
        ],
        &rows,
    )?;
    Ok(reports)
}
