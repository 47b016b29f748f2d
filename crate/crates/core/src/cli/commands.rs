use std::fs;
use std::path::Path;
use std::time::Instant;

use rand::Rng;
use serde::Serialize;

use super::config::ExperimentConfig;
use crate::analysis::{self, Jump};
use crate::error::{Error, Result};
use crate::io::{write_csv_file, write_json_file};
use crate::model::TheoryConstants;
use crate::scheme::{loss_at, simulate, LossCurve, ParticleState, SchemeKind};
use crate::stochastic::{particle_rng, Purpose, StreamedPaths};
use crate::study::{blowup_study, convergence_study};
use crate::theory::{theory_report, TheoryReport};

fn prepare_out(out: &Path) -> Result<()> {
    fs::create_dir_all(out)?;
    Ok(())
}

fn write_timing(out: &Path, started: Instant) -> Result<()> {
    #[derive(Serialize)]
    struct Timing {
        wall_time_seconds: f64,
    }
    let wall = started.elapsed().as_secs_f64();
    log::info!("finished in {wall:.3} s");
    write_json_file(&out.join("timing.json"), &Timing { wall_time_seconds: wall })
}

fn run_single(config: &ExperimentConfig) -> Result<(LossCurve, ParticleState, StreamedPaths)> {
    let n = config.single_n()?;
    let mesh = config.mesh_spec()?.build(n, config.model.horizon, &config.law)?;
    let paths = StreamedPaths::new(&config.law, &mesh, config.run.particles, config.run.seed)?;
    let (curve, state) = simulate(config.scheme.kind, &config.model, &paths)?;
    Ok((curve, state, paths))
}

#[derive(Debug, Serialize)]
pub struct SimulateSummary {
    pub scheme: SchemeKind,
    pub steps: usize,
    pub particles: usize,
    pub seed: u64,
    pub evaluation_time: f64,
    pub loss_at_evaluation: f64,
    pub terminal_loss: f64,
    pub jump: Jump,
    pub median_increment: f64,
}

/// Writes `loss.csv`, `loss_rate.csv` (when the mesh has at least 3 points),
/// `summary.json` and `timing.json`.
pub fn cmd_simulate(config: &ExperimentConfig, out: &Path) -> Result<SimulateSummary> {
    let started = Instant::now();
    prepare_out(out)?;
    let (curve, _, _) = run_single(config)?;
    curve.write_csv(fs::File::create(out.join("loss.csv"))?)?;
    if curve.mesh().times().len() >= 3 {
        let rate = analysis::loss_derivative(&curve)?;
        let (t, d): (Vec<f64>, Vec<f64>) = rate.into_iter().unzip();
        write_csv_file(&out.join("loss_rate.csv"), &["t", "dL"], &[&t, &d])?;
    } else {
        log::warn!("mesh too coarse for a loss rate; loss_rate.csv not written");
    }
    let t_eval = config.evaluation_time();
    let summary = SimulateSummary {
        scheme: config.scheme.kind,
        steps: curve.mesh().steps(),
        particles: config.run.particles,
        seed: config.run.seed,
        evaluation_time: t_eval,
        loss_at_evaluation: loss_at(&curve, t_eval)?,
        terminal_loss: curve.terminal(),
        jump: analysis::detect_jump(&curve),
        median_increment: analysis::median_increment(&curve),
    };
    write_json_file(&out.join("summary.json"), &summary)?;
    write_timing(out, started)?;
    Ok(summary)
}

/// Writes `errors.csv` and `order.json` for a paired refinement study at the
/// evaluation time.
pub fn cmd_converge(config: &ExperimentConfig, out: &Path) -> Result<crate::study::ConvergenceStudy> {
    let started = Instant::now();
    let setup = config.study_setup()?;
    prepare_out(out)?;
    let study = convergence_study(&setup)?;
    let sizes: Vec<f64> = study.sizes.iter().map(|&n| n as f64).collect();
    write_csv_file(&out.join("errors.csv"), &["n", "error"], &[&sizes, &study.errors])?;
    write_json_file(&out.join("order.json"), &study.report)?;
    write_timing(out, started)?;
    Ok(study)
}

/// Writes every level's loss curve, `metrics.csv` with the paired distances,
/// `jumps.csv` and `order.json` with one fit per distance.
pub fn cmd_blowup(config: &ExperimentConfig, out: &Path) -> Result<crate::study::BlowupStudy> {
    let started = Instant::now();
    let setup = config.study_setup()?;
    prepare_out(out)?;
    let study = blowup_study(&setup, config.run.d3_levels)?;
    for curve in &study.curves {
        let name = format!("loss_n{}.csv", curve.mesh().steps());
        curve.write_csv(fs::File::create(out.join(name))?)?;
    }
    let sizes: Vec<f64> = study.sizes.iter().map(|&n| n as f64).collect();
    write_csv_file(
        &out.join("metrics.csv"),
        &["n", "d1", "d2", "d3"],
        &[&sizes, &study.d1, &study.d2, &study.d3],
    )?;
    let levels: Vec<f64> = setup.levels().iter().map(|&n| n as f64).collect();
    let times: Vec<f64> = study.jumps.iter().map(|j| j.time).collect();
    let jump_sizes: Vec<f64> = study.jumps.iter().map(|j| j.size).collect();
    write_csv_file(
        &out.join("jumps.csv"),
        &["n", "time", "size", "median_increment"],
        &[&levels, &times, &jump_sizes, &study.median_increments],
    )?;
    write_json_file(&out.join("order.json"), &study.orders)?;
    write_timing(out, started)?;
    Ok(study)
}

/// Positive positions of the particles that survived to the end of the run.
///
/// Plain-scheme survival is an indicator. Bridge weights are thinned by an
/// independent Bernoulli draw per particle from its own stream.
pub fn surviving_positions(state: &ParticleState, scheme: SchemeKind, seed: u64) -> Vec<f64> {
    state
        .positions
        .iter()
        .zip(&state.survival)
        .enumerate()
        .filter(|&(k, (&y, &p))| {
            let alive = match scheme {
                SchemeKind::Plain => p > 0.5,
                SchemeKind::Bridge => {
                    let u: f64 = particle_rng(seed, Purpose::Survivor, k).random();
                    u < p
                }
            };
            alive && y > 0.0
        })
        .map(|(_, (&y, _))| y)
        .collect()
}

#[derive(Debug, Serialize)]
pub struct DensitySummary {
    pub survivors: usize,
    pub bandwidth: f64,
    pub terminal_loss: f64,
}

/// Writes `density.csv` with a kernel density estimate of the surviving
/// particles' terminal positions.
pub fn cmd_density(config: &ExperimentConfig, out: &Path) -> Result<DensitySummary> {
    let started = Instant::now();
    prepare_out(out)?;
    let (curve, state, _) = run_single(config)?;
    let mut survivors = surviving_positions(&state, config.scheme.kind, config.run.seed);
    if survivors.len() < 2 {
        return Err(Error::domain(format!(
            "no survivors to estimate a density from ({} left)",
            survivors.len()
        )));
    }
    let bandwidth = match config.run.bandwidth {
        Some(h) => h,
        None => analysis::silverman_bandwidth(&survivors)?,
    };
    survivors.sort_by(f64::total_cmp);
    // Heavy right tails would stretch the grid; stop at the 99.9% quantile.
    let hi_index = ((survivors.len() - 1) as f64 * 0.999).round() as usize;
    let lo = survivors[0] - 4.0 * bandwidth;
    let hi = survivors[hi_index] + 4.0 * bandwidth;
    let grid = analysis::linspace(lo, hi, config.run.grid_points);
    let est = analysis::kde_density(&survivors, &grid, Some(bandwidth))?;
    write_csv_file(&out.join("density.csv"), &["x", "density"], &[&est.grid, &est.values])?;
    let summary = DensitySummary {
        survivors: survivors.len(),
        bandwidth,
        terminal_loss: curve.terminal(),
    };
    write_json_file(&out.join("summary.json"), &summary)?;
    write_timing(out, started)?;
    Ok(summary)
}

/// `T*`, its residual and the extension condition.
pub fn cmd_theory(alpha: f64, consts: &TheoryConstants) -> Result<TheoryReport> {
    theory_report(alpha, consts)
}
