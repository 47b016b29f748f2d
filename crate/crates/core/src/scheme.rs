//! Explicit particle schemes for the loss process.
//!
//! Both schemes advance all particles together through the mesh. At step `i`
//! the loss estimate is computed from information strictly before `t_i`, then
//! the positions at `t_i` are written with that loss:
//!
//! * [`simulate_plain`] counts particles whose position has been `<= 0` at a
//!   past mesh point.
//! * [`simulate_bridge`] carries a survival weight per particle, multiplied at
//!   every step by the probability that the Brownian bridge between the two
//!   observed endpoints stays positive.

use std::io::{BufRead, Write};

use serde::{Deserialize, Serialize};

use crate::error::{ensure, Error, Result};
use crate::model::{ModelParams, TimeMesh, MESH_TOL};
use crate::par;
use crate::stochastic::BrownianPaths;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum SchemeKind {
    /// Monitoring of the barrier at mesh points only.
    Plain,
    /// Brownian-bridge survival correction between mesh points.
    Bridge,
}

/// Estimate of `t -> L_t` on a mesh.
///
/// Between mesh points the curve takes the value of the mesh point to the
/// left.
#[derive(Debug, Clone, PartialEq)]
pub struct LossCurve {
    mesh: TimeMesh,
    values: Vec<f64>,
    scheme: Option<SchemeKind>,
}

impl LossCurve {
    /// Checks that `values` starts at zero, is nondecreasing and stays in
    /// `[0, 1]`.
    pub fn new(mesh: TimeMesh, values: Vec<f64>, scheme: Option<SchemeKind>) -> Result<Self> {
        ensure!(
            values.len() == mesh.times().len(),
            "{} loss values for {} mesh points",
            values.len(),
            mesh.times().len()
        );
        ensure!(values[0] == 0.0, "loss must start at 0, got {}", values[0]);
        ensure!(
            values.iter().all(|v| (0.0..=1.0).contains(v)),
            "loss values must lie in [0, 1]"
        );
        ensure!(
            values.windows(2).all(|w| w[1] >= w[0]),
            "loss values must be nondecreasing"
        );
        Ok(Self { mesh, values, scheme })
    }

    pub fn mesh(&self) -> &TimeMesh {
        &self.mesh
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn scheme(&self) -> Option<SchemeKind> {
        self.scheme
    }

    pub fn horizon(&self) -> f64 {
        self.mesh.horizon()
    }

    pub fn terminal(&self) -> f64 {
        *self.values.last().expect("curve is never empty")
    }

    /// Writes `t,L` rows with 17 significant digits.
    pub fn write_csv(&self, out: impl Write) -> Result<()> {
        crate::io::write_columns(out, &["t", "L"], &[self.mesh.times(), &self.values])
    }

    pub fn read_csv(input: impl BufRead) -> Result<Self> {
        let mut columns = crate::io::read_columns(input, &["t", "L"])?;
        let values = columns.pop().expect("two columns");
        let times = columns.pop().expect("two columns");
        let mesh = TimeMesh::from_times(times, crate::model::MeshKind::Uniform)?;
        Self::new(mesh, values, None)
    }
}

/// Left-continuous piecewise-constant evaluation of the curve at `t`.
pub fn loss_at(curve: &LossCurve, t: f64) -> Result<f64> {
    let horizon = curve.horizon();
    match curve.mesh.locate(t) {
        Some(i) => Ok(curve.values[i]),
        None => Err(Error::domain(format!("t = {t} outside [0, {horizon}]"))),
    }
}

/// Per-particle state at the end of a run.
#[derive(Debug, Clone, PartialEq)]
pub struct ParticleState {
    /// Positions at the last mesh point.
    pub positions: Vec<f64>,
    /// Survival weight: an indicator for the plain scheme, the product of
    /// bridge factors for the bridge scheme.
    pub survival: Vec<f64>,
    /// Minimum over all visited mesh points, `t_0` included.
    pub running_min: Vec<f64>,
}

#[derive(Debug, Clone, Copy)]
struct Particle {
    position: f64,
    survival: f64,
    running_min: f64,
}

/// One particle's absorption as plain monitoring sees it: the running minimum
/// has reached zero. Ties at exactly zero count as hits.
fn absorbed(p: &Particle) -> bool {
    p.running_min <= 0.0
}

/// Probability that a Brownian bridge from `a` to `b` over time `dt` stays
/// above zero.
pub fn bridge_survival_factor(a: f64, b: f64, dt: f64) -> f64 {
    let x = 2.0 * a.max(0.0) * b.max(0.0) / dt;
    -(-x).exp_m1()
}

fn check_inputs(params: &ModelParams, paths: &impl BrownianPaths) -> Result<()> {
    params.validate()?;
    ensure!(paths.particles() >= 1, "no particles");
    let horizon = paths.mesh().horizon();
    ensure!(
        (horizon - params.horizon).abs() <= MESH_TOL * params.horizon,
        "mesh horizon {horizon} differs from model horizon {}",
        params.horizon
    );
    ensure!(
        paths.initial_positions().iter().all(|y| y.is_finite() && *y > 0.0),
        "initial positions must be finite and > 0"
    );
    Ok(())
}

/// Runs `kind` over the first `steps` mesh steps.
pub(crate) fn run(
    kind: SchemeKind,
    params: &ModelParams,
    paths: &impl BrownianPaths,
    steps: usize,
) -> Result<(Vec<f64>, ParticleState)> {
    check_inputs(params, paths)?;
    let mesh = paths.mesh();
    ensure!(steps <= mesh.steps(), "asked for {steps} steps on a {}-step mesh", mesh.steps());
    let y0 = paths.initial_positions();
    let count = y0.len() as f64;
    let alpha = params.alpha;

    let mut particles: Vec<Particle> = y0
        .iter()
        .map(|&y| Particle { position: y, survival: 1.0, running_min: y })
        .collect();
    let mut losses = Vec::with_capacity(steps + 1);
    losses.push(0.0);
    let mut walker = paths.walker();

    for i in 1..=steps {
        let w = walker.advance();
        let loss = match kind {
            SchemeKind::Plain => {
                par::pairwise_sum_by(&particles, &|p| if absorbed(p) { 1.0 } else { 0.0 }) / count
            }
            SchemeKind::Bridge => {
                let dt = mesh.spacing(i);
                let level = alpha * losses[i - 1];
                par::for_each_chunk(&mut particles, |off, chunk| {
                    for (j, p) in chunk.iter_mut().enumerate() {
                        // Left limit at t_i: the loss is still the previous level.
                        let end = y0[off + j] + w[off + j] - level;
                        p.survival *= bridge_survival_factor(p.position, end, dt);
                    }
                });
                par::pairwise_sum_by(&particles, &|p| 1.0 - p.survival) / count
            }
        };
        let level = alpha * loss;
        par::for_each_chunk(&mut particles, |off, chunk| {
            for (j, p) in chunk.iter_mut().enumerate() {
                p.position = y0[off + j] + w[off + j] - level;
                p.running_min = p.running_min.min(p.position);
            }
        });
        losses.push(loss);
    }

    if kind == SchemeKind::Plain {
        for p in particles.iter_mut() {
            p.survival = if absorbed(p) { 0.0 } else { 1.0 };
        }
    }
    let state = ParticleState {
        positions: particles.iter().map(|p| p.position).collect(),
        survival: particles.iter().map(|p| p.survival).collect(),
        running_min: particles.iter().map(|p| p.running_min).collect(),
    };
    Ok((losses, state))
}

pub fn simulate(
    kind: SchemeKind,
    params: &ModelParams,
    paths: &impl BrownianPaths,
) -> Result<(LossCurve, ParticleState)> {
    let (values, state) = run(kind, params, paths, paths.mesh().steps())?;
    let curve = LossCurve::new(paths.mesh().clone(), values, Some(kind))?;
    Ok((curve, state))
}

/// Discrete-monitoring particle scheme.
pub fn simulate_plain(
    params: &ModelParams,
    paths: &impl BrownianPaths,
) -> Result<(LossCurve, ParticleState)> {
    simulate(SchemeKind::Plain, params, paths)
}

/// Particle scheme with Brownian-bridge survival weights.
pub fn simulate_bridge(
    params: &ModelParams,
    paths: &impl BrownianPaths,
) -> Result<(LossCurve, ParticleState)> {
    simulate(SchemeKind::Bridge, params, paths)
}
