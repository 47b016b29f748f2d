//! Domain types: model parameters, laws of the initial position, time meshes
//! and the constants entering the convergence theory.
//!
//! The system being simulated is
//!
//! ```text
//! Y_t = Y_0 + W_t - alpha * L_t,    L_t = P(tau <= t),    tau = inf{t : Y_t <= 0}
//! ```
//!
//! on `[0, T]`, with `Y_0 > 0` independent of the Brownian motion `W`.

use serde::{Deserialize, Serialize};
use statrs::function::gamma::ln_gamma;

use crate::error::{ensure, Error, Result};

/// Relative tolerance used when comparing mesh points against the horizon.
pub const MESH_TOL: f64 = 1e-12;

/// Feedback strength `alpha` and horizon `T`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ModelParams {
    pub alpha: f64,
    pub horizon: f64,
}

impl ModelParams {
    pub fn new(alpha: f64, horizon: f64) -> Result<Self> {
        let params = Self { alpha, horizon };
        params.validate()?;
        Ok(params)
    }

    pub fn validate(&self) -> Result<()> {
        ensure!(
            self.alpha.is_finite() && self.alpha >= 0.0,
            "alpha must be finite and >= 0, got {}",
            self.alpha
        );
        ensure!(
            self.horizon.is_finite() && self.horizon > 0.0,
            "horizon must be finite and > 0, got {}",
            self.horizon
        );
        Ok(())
    }
}

/// Law of the initial position `Y_0`. Every variant puts all of its mass on
/// `(0, inf)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case", deny_unknown_fields)]
pub enum InitialLaw {
    /// Point mass at `y0`. Has no density, so it is only useful for closed-form
    /// checks with `alpha = 0`.
    Dirac { y0: f64 },
    /// Gamma law in shape/scale parameterization: mean `shape * scale`.
    Gamma { shape: f64, scale: f64 },
    /// `1 / Y_0` is exponential with the given rate.
    ReciprocalExp { rate: f64 },
}

impl InitialLaw {
    pub fn dirac(y0: f64) -> Result<Self> {
        let law = InitialLaw::Dirac { y0 };
        law.validate()?;
        Ok(law)
    }

    pub fn gamma(shape: f64, scale: f64) -> Result<Self> {
        let law = InitialLaw::Gamma { shape, scale };
        law.validate()?;
        Ok(law)
    }

    pub fn reciprocal_exp(rate: f64) -> Result<Self> {
        let law = InitialLaw::ReciprocalExp { rate };
        law.validate()?;
        Ok(law)
    }

    pub fn validate(&self) -> Result<()> {
        let positive = |name: &str, v: f64| -> Result<()> {
            ensure!(v.is_finite() && v > 0.0, "{name} must be finite and > 0, got {v}");
            Ok(())
        };
        match *self {
            InitialLaw::Dirac { y0 } => positive("law.y0", y0),
            InitialLaw::Gamma { shape, scale } => {
                positive("law.shape", shape)?;
                positive("law.scale", scale)
            }
            InitialLaw::ReciprocalExp { rate } => positive("law.rate", rate),
        }
    }

    /// Exponent `beta` in the envelope `f(x) <= B x^beta` near zero.
    ///
    /// `None` for a Gamma law whose shape lies outside `(1, 2]`, where the
    /// exponent `shape - 1` is not in `(0, 1]`.
    pub fn holder_beta(&self) -> Option<f64> {
        match *self {
            InitialLaw::Dirac { .. } => Some(1.0),
            InitialLaw::Gamma { shape, .. } => {
                (shape > 1.0 && shape <= 2.0).then_some(shape - 1.0)
            }
            // The density vanishes faster than any power at zero.
            InitialLaw::ReciprocalExp { .. } => Some(1.0),
        }
    }

    /// Whether the law has a density with a power envelope at zero.
    pub fn has_power_envelope(&self) -> bool {
        !matches!(self, InitialLaw::Dirac { .. }) && self.holder_beta().is_some()
    }

    /// Probability density at `x`; `None` for the point mass.
    pub fn density(&self, x: f64) -> Option<f64> {
        match *self {
            InitialLaw::Dirac { .. } => None,
            _ if x <= 0.0 => Some(0.0),
            InitialLaw::Gamma { shape, scale } => {
                let log_f = (shape - 1.0) * x.ln() - x / scale - ln_gamma(shape) - shape * scale.ln();
                Some(log_f.exp())
            }
            InitialLaw::ReciprocalExp { rate } => Some(rate / (x * x) * (-rate / x).exp()),
        }
    }

    /// Smallest `B` with `f(x) <= B x^beta` for all `x > 0`, where `beta` is
    /// [`holder_beta`](Self::holder_beta).
    pub fn envelope_constant(&self) -> Option<f64> {
        let beta = self.holder_beta()?;
        match *self {
            InitialLaw::Dirac { .. } => None,
            // f(x) / x^(shape-1) is maximal as x -> 0.
            InitialLaw::Gamma { shape, scale } => {
                debug_assert!((beta - (shape - 1.0)).abs() < 1e-15);
                Some((-ln_gamma(shape) - shape * scale.ln()).exp())
            }
            // (rate / x^3) exp(-rate / x) peaks at x = rate / 3.
            InitialLaw::ReciprocalExp { rate } => Some(27.0 / (rate * rate) * (-3.0f64).exp()),
        }
    }

    pub fn mean(&self) -> f64 {
        match *self {
            InitialLaw::Dirac { y0 } => y0,
            InitialLaw::Gamma { shape, scale } => shape * scale,
            InitialLaw::ReciprocalExp { .. } => f64::INFINITY,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case")]
pub enum MeshKind {
    Uniform,
    /// Points `t_i = (i h)^(2 / (1 + beta))`, concentrated near zero.
    Refined { beta: f64 },
}

/// Strictly increasing grid `0 = t_0 < t_1 < ... < t_n = T`.
#[derive(Debug, Clone, PartialEq)]
pub struct TimeMesh {
    times: Vec<f64>,
    kind: MeshKind,
}

impl TimeMesh {
    /// Wraps an explicit grid after checking that it starts at zero and is
    /// strictly increasing.
    pub fn from_times(times: Vec<f64>, kind: MeshKind) -> Result<Self> {
        ensure!(times.len() >= 2, "a mesh needs at least two points");
        ensure!(times[0] == 0.0, "mesh must start at 0, got {}", times[0]);
        ensure!(
            times.iter().all(|t| t.is_finite()),
            "mesh points must be finite"
        );
        ensure!(
            times.windows(2).all(|w| w[1] > w[0]),
            "mesh must be strictly increasing"
        );
        Ok(Self { times, kind })
    }

    pub fn times(&self) -> &[f64] {
        &self.times
    }

    pub fn kind(&self) -> MeshKind {
        self.kind
    }

    /// Number of steps `n`; the mesh has `n + 1` points.
    pub fn steps(&self) -> usize {
        self.times.len() - 1
    }

    pub fn horizon(&self) -> f64 {
        *self.times.last().expect("mesh is never empty")
    }

    /// Length of step `i`, i.e. `t_i - t_{i-1}` for `1 <= i <= n`.
    pub fn spacing(&self, i: usize) -> f64 {
        self.times[i] - self.times[i - 1]
    }

    /// Keeps every `factor`-th point.
    pub fn subsample(&self, factor: usize) -> Result<Self> {
        ensure!(factor >= 1, "coarsening factor must be >= 1");
        ensure!(
            self.steps().is_multiple_of(factor),
            "mesh with {} steps is not divisible by {factor}",
            self.steps()
        );
        let times = self.times.iter().step_by(factor).copied().collect();
        Ok(Self { times, kind: self.kind })
    }

    /// Index of the largest mesh point `<= t`, if `t` lies in `[0, T]`.
    pub fn locate(&self, t: f64) -> Option<usize> {
        let horizon = self.horizon();
        if !(0.0..=horizon * (1.0 + MESH_TOL)).contains(&t) {
            return None;
        }
        // partition_point gives the count of points <= t.
        let count = self.times.partition_point(|&s| s <= t);
        Some(count.max(1) - 1)
    }
}

pub fn build_uniform_mesh(n: usize, horizon: f64) -> Result<TimeMesh> {
    ensure!(n >= 1, "number of steps must be >= 1");
    ensure!(
        horizon.is_finite() && horizon > 0.0,
        "horizon must be finite and > 0, got {horizon}"
    );
    let mut times: Vec<f64> = (0..=n).map(|i| horizon * i as f64 / n as f64).collect();
    times[n] = horizon;
    TimeMesh::from_times(times, MeshKind::Uniform)
}

/// Mesh `t_i = (i h)^(2 / (1 + beta))` with `h = T^((1 + beta) / 2) / n`.
/// The last point is pinned to exactly `T`.
pub fn build_refined_mesh(n: usize, horizon: f64, beta: f64) -> Result<TimeMesh> {
    ensure!(n >= 1, "number of steps must be >= 1");
    ensure!(
        horizon.is_finite() && horizon > 0.0,
        "horizon must be finite and > 0, got {horizon}"
    );
    ensure!(beta > 0.0 && beta <= 1.0, "beta must lie in (0, 1], got {beta}");
    let h = horizon.powf((1.0 + beta) / 2.0) / n as f64;
    let exponent = 2.0 / (1.0 + beta);
    let mut times: Vec<f64> = (0..=n).map(|i| (i as f64 * h).powf(exponent)).collect();
    times[n] = horizon;
    TimeMesh::from_times(times, MeshKind::Refined { beta })
}

/// Constants of the envelopes `f(x) <= B x^beta`, `L'_t <= B_hat t^(-(1-beta)/2)`
/// and `L_t <= B_tilde t^((1+beta)/2)`.
///
/// Nothing here estimates `B_hat`; it is an input. Larger constants only make
/// the derived horizon `T*` smaller.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TheoryConstants {
    pub beta: f64,
    pub b: f64,
    pub b_hat: f64,
    pub b_tilde: f64,
}

impl TheoryConstants {
    pub fn new(beta: f64, b: f64, b_hat: f64) -> Result<Self> {
        ensure!(beta > 0.0 && beta <= 1.0, "beta must lie in (0, 1], got {beta}");
        ensure!(b.is_finite() && b > 0.0, "B must be finite and > 0, got {b}");
        ensure!(
            b_hat.is_finite() && b_hat > 0.0,
            "B_hat must be finite and > 0, got {b_hat}"
        );
        Ok(Self { beta, b, b_hat, b_tilde: 2.0 * b_hat / (1.0 + beta) })
    }

    /// Builds the constants from the loss envelope `B_tilde` instead of the
    /// rate envelope.
    pub fn from_loss_bound(beta: f64, b: f64, b_tilde: f64) -> Result<Self> {
        ensure!(
            b_tilde.is_finite() && b_tilde > 0.0,
            "B_tilde must be finite and > 0, got {b_tilde}"
        );
        Self::new(beta, b, b_tilde * (1.0 + beta) / 2.0).map(|c| Self { b_tilde, ..c })
    }

    /// Constants for a law satisfying the envelope assumption, with `B` set to
    /// the law's sharp envelope coefficient.
    pub fn for_law(law: &InitialLaw, b_hat: f64) -> Result<Self> {
        if !law.has_power_envelope() {
            return Err(Error::domain(format!(
                "{law:?} has no density with a power envelope at zero"
            )));
        }
        let beta = law.holder_beta().expect("checked above");
        let b = law.envelope_constant().expect("checked above");
        Self::new(beta, b, b_hat)
    }
}
