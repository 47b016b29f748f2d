//! Paired refinement studies: a scheme is run on a doubling sequence of
//! meshes with the same Brownian paths, and successive solutions are
//! compared.
//!
//! For each seed the paths are drawn once on the finest mesh (twice the
//! largest listed size) and observed on coarser meshes by coarsening, so the
//! difference between the `n` and `2n` solutions measures discretization
//! error only.

use serde::{Deserialize, Serialize};

use crate::analysis::{self, ConvergenceReport, Jump};
use crate::error::{ensure, Result};
use crate::model::{build_refined_mesh, build_uniform_mesh, InitialLaw, ModelParams, TimeMesh};
use crate::scheme::{loss_at, simulate, LossCurve, SchemeKind};
use crate::stochastic::StreamedPaths;

/// Mesh family of a study.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case")]
pub enum MeshSpec {
    Uniform,
    /// Refined mesh; `beta` defaults to the law's exponent.
    Refined { beta: Option<f64> },
}

impl MeshSpec {
    pub fn build(&self, n: usize, horizon: f64, law: &InitialLaw) -> Result<TimeMesh> {
        match *self {
            MeshSpec::Uniform => build_uniform_mesh(n, horizon),
            MeshSpec::Refined { beta } => {
                let beta = match beta.or_else(|| law.holder_beta()) {
                    Some(b) => b,
                    None => {
                        return Err(crate::Error::domain(format!(
                            "refined mesh needs mesh.beta: {law:?} has no exponent in (0, 1]"
                        )))
                    }
                };
                build_refined_mesh(n, horizon, beta)
            }
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct StudySetup {
    pub params: ModelParams,
    pub law: InitialLaw,
    pub scheme: SchemeKind,
    pub mesh: MeshSpec,
    /// Doubling sequence; each is compared with twice itself.
    pub sizes: Vec<usize>,
    pub particles: usize,
    pub seed: u64,
    /// Independent path sets; replicate `r` uses seed `seed + r`.
    pub replicates: usize,
    pub evaluation_time: Option<f64>,
}

/// Checks that every size is twice the previous one.
pub fn check_doubling(sizes: &[usize]) -> Result<()> {
    ensure!(!sizes.is_empty(), "mesh size list is empty");
    ensure!(sizes[0] >= 1, "mesh sizes must be >= 1");
    ensure!(
        sizes.windows(2).all(|w| w[1] == 2 * w[0]),
        "mesh sizes {sizes:?} are not a doubling sequence"
    );
    Ok(())
}

impl StudySetup {
    pub fn validate(&self) -> Result<()> {
        self.params.validate()?;
        self.law.validate()?;
        check_doubling(&self.sizes)?;
        ensure!(self.sizes.len() >= 3, "need at least 3 mesh sizes to fit an order");
        ensure!(self.particles >= 1, "number of particles must be >= 1");
        ensure!(self.replicates >= 1, "number of replicates must be >= 1");
        if let Some(t) = self.evaluation_time {
            ensure!(
                t > 0.0 && t <= self.params.horizon,
                "evaluation time {t} outside (0, {}]",
                self.params.horizon
            );
        }
        Ok(())
    }

    fn evaluation_time(&self) -> f64 {
        self.evaluation_time.unwrap_or(self.params.horizon)
    }

    /// Listed sizes followed by the finest size.
    pub fn levels(&self) -> Vec<usize> {
        let mut levels = self.sizes.clone();
        levels.push(2 * self.sizes.last().copied().unwrap_or(0));
        levels
    }
}

/// Solutions on every level for one path set, coarsest first.
pub fn paired_curves(setup: &StudySetup, seed: u64) -> Result<Vec<LossCurve>> {
    let levels = setup.levels();
    let finest = *levels.last().expect("nonempty");
    let mesh = setup.mesh.build(finest, setup.params.horizon, &setup.law)?;
    let fine = StreamedPaths::new(&setup.law, &mesh, setup.particles, seed)?;
    levels
        .iter()
        .map(|&n| {
            let paths = fine.coarsen(finest / n)?;
            Ok(simulate(setup.scheme, &setup.params, &paths)?.0)
        })
        .collect()
}

fn replicate_seed(setup: &StudySetup, r: usize) -> u64 {
    setup.seed.wrapping_add(r as u64)
}

/// Drops non-positive errors (possible with few particles) and fits the rest.
pub fn fit_positive(sizes: &[usize], errors: &[f64]) -> Result<ConvergenceReport> {
    let (kept_n, kept_e): (Vec<usize>, Vec<f64>) = sizes
        .iter()
        .zip(errors)
        .filter(|(_, &e)| e > 0.0)
        .map(|(&n, &e)| (n, e))
        .unzip();
    if kept_n.len() < sizes.len() {
        log::warn!(
            "dropping {} zero paired errors before regression",
            sizes.len() - kept_n.len()
        );
    }
    analysis::fit_order(&kept_n, &kept_e)
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ConvergenceStudy {
    pub sizes: Vec<usize>,
    /// `|L^{2n} - L^n|` at the evaluation time, averaged over replicates.
    pub errors: Vec<f64>,
    /// Per replicate, per size.
    pub replicate_errors: Vec<Vec<f64>>,
    pub evaluation_time: f64,
    pub report: ConvergenceReport,
}

pub fn convergence_study(setup: &StudySetup) -> Result<ConvergenceStudy> {
    setup.validate()?;
    let t = setup.evaluation_time();
    let mut replicate_errors = Vec::with_capacity(setup.replicates);
    for r in 0..setup.replicates {
        let curves = paired_curves(setup, replicate_seed(setup, r))?;
        let errs = curves
            .windows(2)
            .map(|w| Ok((loss_at(&w[1], t)? - loss_at(&w[0], t)?).abs()))
            .collect::<Result<Vec<f64>>>()?;
        replicate_errors.push(errs);
    }
    let errors = mean_columns(&replicate_errors);
    let report = fit_positive(&setup.sizes, &errors)?;
    Ok(ConvergenceStudy {
        sizes: setup.sizes.clone(),
        errors,
        replicate_errors,
        evaluation_time: t,
        report,
    })
}

fn mean_columns(rows: &[Vec<f64>]) -> Vec<f64> {
    let width = rows.first().map_or(0, Vec::len);
    (0..width)
        .map(|j| rows.iter().map(|r| r[j]).sum::<f64>() / rows.len() as f64)
        .collect()
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct MetricOrders {
    pub d1: Option<ConvergenceReport>,
    pub d2: Option<ConvergenceReport>,
    pub d3: Option<ConvergenceReport>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct BlowupStudy {
    pub sizes: Vec<usize>,
    /// Paired distances between the `n` and `2n` solutions, averaged over
    /// replicates.
    pub d1: Vec<f64>,
    pub d2: Vec<f64>,
    pub d3: Vec<f64>,
    /// Steepest step of every level of the first replicate, finest included.
    pub jumps: Vec<Jump>,
    pub median_increments: Vec<f64>,
    pub orders: MetricOrders,
    /// Solutions of the first replicate on every level, finest last.
    #[serde(skip)]
    pub curves: Vec<LossCurve>,
}

pub fn blowup_study(setup: &StudySetup, d3_levels: usize) -> Result<BlowupStudy> {
    setup.validate()?;
    let (mut d1, mut d2, mut d3) = (Vec::new(), Vec::new(), Vec::new());
    let mut first = None;
    for r in 0..setup.replicates {
        let curves = paired_curves(setup, replicate_seed(setup, r))?;
        let mut row = (Vec::new(), Vec::new(), Vec::new());
        for w in curves.windows(2) {
            row.0.push(analysis::metric_d1(&w[1], &w[0])?);
            row.1.push(analysis::metric_d2(&w[1], &w[0])?);
            row.2.push(analysis::metric_d3(&w[1], &w[0], d3_levels)?);
        }
        d1.push(row.0);
        d2.push(row.1);
        d3.push(row.2);
        first.get_or_insert(curves);
    }
    let curves = first.expect("at least one replicate");
    let (d1, d2, d3) = (mean_columns(&d1), mean_columns(&d2), mean_columns(&d3));
    let fit = |errors: &[f64]| match fit_positive(&setup.sizes, errors) {
        Ok(report) => Some(report),
        Err(e) => {
            log::warn!("no order fitted: {e}");
            None
        }
    };
    let orders = MetricOrders { d1: fit(&d1), d2: fit(&d2), d3: fit(&d3) };
    Ok(BlowupStudy {
        sizes: setup.sizes.clone(),
        jumps: curves.iter().map(analysis::detect_jump).collect(),
        median_increments: curves.iter().map(analysis::median_increment).collect(),
        d1,
        d2,
        d3,
        orders,
        curves,
    })
}
