//! Post-processing of loss curves and particle clouds: finite differences,
//! jump location, distances between curves, kernel density estimates,
//! convergence-order regression and an empirical check of the density bound
//! on the running minimum.

use serde::Serialize;
use statrs::distribution::{ContinuousCDF, StudentsT};

use crate::error::{ensure, Error, Result};
use crate::model::{ModelParams, TheoryConstants, MESH_TOL};
use crate::scheme::{self, LossCurve, SchemeKind};
use crate::stochastic::PathEnsemble;

/// `(t_i, L'(t_i))` by central differences inside the mesh and one-sided
/// differences at the two ends.
pub fn loss_derivative(curve: &LossCurve) -> Result<Vec<(f64, f64)>> {
    let t = curve.mesh().times();
    let l = curve.values();
    let n = t.len();
    ensure!(n >= 3, "derivative needs at least 3 mesh points, got {n}");
    let mut out = Vec::with_capacity(n);
    out.push((t[0], (l[1] - l[0]) / (t[1] - t[0])));
    for i in 1..n - 1 {
        out.push((t[i], (l[i + 1] - l[i - 1]) / (t[i + 1] - t[i - 1])));
    }
    out.push((t[n - 1], (l[n - 1] - l[n - 2]) / (t[n - 1] - t[n - 2])));
    Ok(out)
}

/// Location of the largest one-step increase of a loss curve.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Jump {
    /// Mesh index `j` maximizing `L_{t_j} - L_{t_{j-1}}`.
    pub index: usize,
    pub time: f64,
    pub size: f64,
}

/// Steepest step of the curve; ties go to the earliest index.
pub fn detect_jump(curve: &LossCurve) -> Jump {
    let l = curve.values();
    let mut best = Jump { index: 1, time: curve.mesh().times()[1], size: l[1] - l[0] };
    for j in 2..l.len() {
        let size = l[j] - l[j - 1];
        if size > best.size {
            best = Jump { index: j, time: curve.mesh().times()[j], size };
        }
    }
    best
}

/// Median of the one-step increments, a scale against which jumps are judged.
pub fn median_increment(curve: &LossCurve) -> f64 {
    let mut inc: Vec<f64> = curve.values().windows(2).map(|w| w[1] - w[0]).collect();
    inc.sort_by(f64::total_cmp);
    let m = inc.len();
    if m % 2 == 1 {
        inc[m / 2]
    } else {
        0.5 * (inc[m / 2 - 1] + inc[m / 2])
    }
}

fn check_same_horizon(a: &LossCurve, b: &LossCurve) -> Result<()> {
    let (ta, tb) = (a.horizon(), b.horizon());
    ensure!(
        (ta - tb).abs() <= MESH_TOL * ta.max(tb),
        "curves have different horizons {ta} and {tb}"
    );
    Ok(())
}

/// `int_0^T |a_t - b_t| dt` for the piecewise-constant curves, exact up to
/// rounding: the integrand is constant on each cell of the merged mesh.
pub fn metric_d1(a: &LossCurve, b: &LossCurve) -> Result<f64> {
    check_same_horizon(a, b)?;
    let (ta, tb) = (a.mesh().times(), b.mesh().times());
    let (va, vb) = (a.values(), b.values());
    let horizon = a.horizon().min(b.horizon());
    // Indices of the mesh points at or left of the current position.
    let (mut i, mut j) = (0, 0);
    let mut left = 0.0;
    let mut total = 0.0;
    while left < horizon {
        let next_a = ta.get(i + 1).copied().unwrap_or(f64::INFINITY);
        let next_b = tb.get(j + 1).copied().unwrap_or(f64::INFINITY);
        let right = next_a.min(next_b).min(horizon);
        total += (va[i] - vb[j]).abs() * (right - left);
        if next_a <= right {
            i += 1;
        }
        if next_b <= right {
            j += 1;
        }
        left = right;
    }
    Ok(total)
}

/// Distance between the steepest-step times of two curves.
pub fn metric_d2(a: &LossCurve, b: &LossCurve) -> Result<f64> {
    check_same_horizon(a, b)?;
    Ok((detect_jump(a).time - detect_jump(b).time).abs())
}

/// `inf { t : L_t >= level }`, or the horizon if the curve never gets there.
pub fn generalized_inverse(curve: &LossCurve, level: f64) -> f64 {
    let values = curve.values();
    // Values are nondecreasing, so the first index reaching the level is a
    // partition point.
    let j = values.partition_point(|&v| v < level);
    curve.mesh().times().get(j).copied().unwrap_or(curve.horizon())
}

/// Sup-distance between generalized inverses over `levels` equally spaced
/// levels from 0 to the smaller of the two terminal losses.
pub fn metric_d3(a: &LossCurve, b: &LossCurve, levels: usize) -> Result<f64> {
    check_same_horizon(a, b)?;
    ensure!(levels >= 1, "need at least one level");
    let cap = a.terminal().min(b.terminal());
    if cap <= 0.0 {
        return Ok(0.0);
    }
    let level_at = |m: usize| {
        if levels == 1 {
            cap
        } else {
            cap * m as f64 / (levels - 1) as f64
        }
    };
    Ok((0..levels)
        .map(|m| {
            let level = level_at(m);
            (generalized_inverse(a, level) - generalized_inverse(b, level)).abs()
        })
        .fold(0.0, f64::max))
}

/// Sample quantile with linear interpolation between order statistics.
fn quantile_sorted(sorted: &[f64], p: f64) -> f64 {
    let pos = p * (sorted.len() - 1) as f64;
    let lo = pos.floor() as usize;
    let hi = pos.ceil() as usize;
    sorted[lo] + (pos - lo as f64) * (sorted[hi] - sorted[lo])
}

fn mean_sd(xs: &[f64]) -> (f64, f64) {
    let n = xs.len() as f64;
    let mean = xs.iter().sum::<f64>() / n;
    let var = xs.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / (n - 1.0);
    (mean, var.sqrt())
}

/// Silverman's rule of thumb, `0.9 min(sd, IQR / 1.34) N^(-1/5)`.
///
/// Falls back to the standard deviation alone when the interquartile range is
/// zero.
pub fn silverman_bandwidth(samples: &[f64]) -> Result<f64> {
    ensure!(samples.len() >= 2, "need at least two samples");
    let (_, sd) = mean_sd(samples);
    ensure!(sd > 0.0 && sd.is_finite(), "samples have zero spread");
    let mut sorted = samples.to_vec();
    sorted.sort_by(f64::total_cmp);
    let iqr = quantile_sorted(&sorted, 0.75) - quantile_sorted(&sorted, 0.25);
    let spread = if iqr > 0.0 { sd.min(iqr / 1.34) } else { sd };
    Ok(0.9 * spread * (samples.len() as f64).powf(-0.2))
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct DensityEstimate {
    pub grid: Vec<f64>,
    pub values: Vec<f64>,
    pub bandwidth: f64,
}

/// Gaussian kernel density estimate evaluated on `grid`.
pub fn kde_density(samples: &[f64], grid: &[f64], bandwidth: Option<f64>) -> Result<DensityEstimate> {
    ensure!(samples.len() >= 2, "need at least two samples");
    let bandwidth = match bandwidth {
        Some(h) => {
            ensure!(h.is_finite() && h > 0.0, "bandwidth must be > 0, got {h}");
            let (_, sd) = mean_sd(samples);
            ensure!(sd > 0.0, "samples have zero spread");
            h
        }
        None => silverman_bandwidth(samples)?,
    };
    let norm = 1.0 / (samples.len() as f64 * bandwidth * (2.0 * std::f64::consts::PI).sqrt());
    let mut sorted = samples.to_vec();
    sorted.sort_by(f64::total_cmp);
    // Kernels further than this many bandwidths away contribute < 1e-32.
    let reach = 12.0 * bandwidth;
    let values = grid
        .iter()
        .map(|&x| {
            let lo = sorted.partition_point(|&s| s < x - reach);
            let hi = sorted.partition_point(|&s| s <= x + reach);
            let sum: f64 = sorted[lo..hi]
                .iter()
                .map(|&s| {
                    let u = (x - s) / bandwidth;
                    (-0.5 * u * u).exp()
                })
                .sum();
            sum * norm
        })
        .collect();
    Ok(DensityEstimate { grid: grid.to_vec(), values, bandwidth })
}

/// `count` equally spaced points from `lo` to `hi`.
pub fn linspace(lo: f64, hi: f64, count: usize) -> Vec<f64> {
    match count {
        0 => Vec::new(),
        1 => vec![lo],
        _ => (0..count)
            .map(|i| lo + (hi - lo) * i as f64 / (count - 1) as f64)
            .collect(),
    }
}

/// Least-squares fit of `log(error) = c + order * log(1/n)`.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ConvergenceReport {
    pub mesh_sizes: Vec<usize>,
    pub errors: Vec<f64>,
    pub fitted_order: f64,
    pub intercept: f64,
    pub std_error: f64,
    /// 95% confidence interval for the order.
    pub ci95: (f64, f64),
}

pub fn fit_order(mesh_sizes: &[usize], errors: &[f64]) -> Result<ConvergenceReport> {
    ensure!(
        mesh_sizes.len() == errors.len(),
        "{} mesh sizes but {} errors",
        mesh_sizes.len(),
        errors.len()
    );
    let m = errors.len();
    ensure!(m >= 3, "need at least 3 points to fit an order, got {m}");
    ensure!(
        errors.iter().all(|e| e.is_finite() && *e > 0.0),
        "errors must be finite and > 0"
    );
    ensure!(mesh_sizes.iter().all(|&n| n > 0), "mesh sizes must be > 0");

    let x: Vec<f64> = mesh_sizes.iter().map(|&n| -(n as f64).ln()).collect();
    let y: Vec<f64> = errors.iter().map(|e| e.ln()).collect();
    let mx = x.iter().sum::<f64>() / m as f64;
    let my = y.iter().sum::<f64>() / m as f64;
    let sxx: f64 = x.iter().map(|xi| (xi - mx).powi(2)).sum();
    ensure!(sxx > 0.0, "mesh sizes must not all be equal");
    let sxy: f64 = x.iter().zip(&y).map(|(xi, yi)| (xi - mx) * (yi - my)).sum();
    let slope = sxy / sxx;
    let intercept = my - slope * mx;
    let ssr: f64 = x
        .iter()
        .zip(&y)
        .map(|(xi, yi)| (yi - intercept - slope * xi).powi(2))
        .sum();
    let dof = (m - 2) as f64;
    let std_error = (ssr / dof / sxx).sqrt();
    let t = StudentsT::new(0.0, 1.0, dof)
        .map_err(|e| Error::Numeric(e.to_string()))?
        .inverse_cdf(0.975);
    let half = t * std_error;
    Ok(ConvergenceReport {
        mesh_sizes: mesh_sizes.to_vec(),
        errors: errors.to_vec(),
        fitted_order: slope,
        intercept,
        std_error,
        ci95: (slope - half, slope + half),
    })
}

/// Bound on the density of the running minimum at `z` after time `t`:
/// `B [ (z v 0) + sqrt(2t/pi) + alpha B_tilde t^((1+beta)/2) ]^beta`.
pub fn running_min_density_bound(alpha: f64, consts: &TheoryConstants, t: f64, z: f64) -> f64 {
    let beta = consts.beta;
    let inner = z.max(0.0)
        + (2.0 * t / std::f64::consts::PI).sqrt()
        + alpha * consts.b_tilde * t.powf((1.0 + beta) / 2.0);
    consts.b * inner.powf(beta)
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct DensityBoundRow {
    pub z: f64,
    pub empirical: f64,
    /// Binomial standard error of the histogram estimate.
    pub std_error: f64,
    pub bound: f64,
    pub violation: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct DensityBoundReport {
    pub time: f64,
    pub bin_width: f64,
    pub rows: Vec<DensityBoundRow>,
}

impl DensityBoundReport {
    pub fn violations(&self) -> usize {
        self.rows.iter().filter(|r| r.violation).count()
    }
}

/// Compares a histogram of `min_{j < i} Y_{t_j}` from the plain scheme with
/// the analytic bound at each `z`, `i = t_index`.
///
/// Bins follow the Freedman–Diaconis rule. A row is flagged when the
/// histogram exceeds the bound at the bin's right edge (the largest value of
/// the bound over the bin) by more than five standard errors.
pub fn check_density_bound(
    params: &ModelParams,
    consts: &TheoryConstants,
    ensemble: &PathEnsemble,
    t_index: usize,
    z_grid: &[f64],
) -> Result<DensityBoundReport> {
    match ensemble.law() {
        Some(law) if law.has_power_envelope() => {}
        Some(law) => {
            return Err(Error::domain(format!(
                "{law:?} does not have a density with a power envelope at zero"
            )))
        }
        None => return Err(Error::domain("ensemble does not record its initial law")),
    }
    let mesh = crate::stochastic::BrownianPaths::mesh(ensemble);
    ensure!(
        (1..=mesh.steps()).contains(&t_index),
        "t_index must lie in 1..={}, got {t_index}",
        mesh.steps()
    );
    let (_, state) = scheme::run(SchemeKind::Plain, params, ensemble, t_index - 1)?;
    let mut mins = state.running_min;
    mins.sort_by(f64::total_cmp);
    let count = mins.len() as f64;
    let iqr = quantile_sorted(&mins, 0.75) - quantile_sorted(&mins, 0.25);
    ensure!(iqr > 0.0, "running minimum has zero interquartile range");
    let width = 2.0 * iqr * count.powf(-1.0 / 3.0);
    let origin = mins[0];
    let t = mesh.times()[t_index];

    let rows = z_grid
        .iter()
        .map(|&z| {
            let bin = ((z - origin) / width).floor();
            let (lo, hi) = (origin + bin * width, origin + (bin + 1.0) * width);
            let inside = mins.partition_point(|&m| m < hi) - mins.partition_point(|&m| m < lo);
            let p = inside as f64 / count;
            let empirical = p / width;
            let std_error = (p * (1.0 - p) / count).sqrt() / width;
            let bound = running_min_density_bound(params.alpha, consts, t, z);
            let edge_bound = running_min_density_bound(params.alpha, consts, t, hi);
            DensityBoundRow {
                z,
                empirical,
                std_error,
                bound,
                violation: empirical - edge_bound > 5.0 * std_error,
            }
        })
        .collect();
    Ok(DensityBoundReport { time: t, bin_width: width, rows })
}
