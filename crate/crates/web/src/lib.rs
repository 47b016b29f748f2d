//! Browser bindings for the `hitsim` particle schemes.
//!
//! Every function returns a flat `Float64Array`; the layouts are documented
//! per function.

use hitsim::model::{InitialLaw, ModelParams, TheoryConstants};
use hitsim::scheme::{simulate, SchemeKind};
use hitsim::stochastic::StreamedPaths;
use hitsim::study::{convergence_study, MeshSpec, StudySetup};
use wasm_bindgen::prelude::*;

fn js(e: hitsim::Error) -> JsError {
    JsError::new(&e.to_string())
}

fn law(kind: &str, p0: f64, p1: f64) -> Result<InitialLaw, JsError> {
    match kind {
        "dirac" => InitialLaw::dirac(p0),
        "gamma" => InitialLaw::gamma(p0, p1),
        "reciprocal-exp" => InitialLaw::reciprocal_exp(p0),
        other => return Err(JsError::new(&format!("unknown law `{other}`"))),
    }
    .map_err(js)
}

fn scheme(kind: &str) -> Result<SchemeKind, JsError> {
    match kind {
        "plain" => Ok(SchemeKind::Plain),
        "bridge" => Ok(SchemeKind::Bridge),
        other => Err(JsError::new(&format!("unknown scheme `{other}`"))),
    }
}

fn mesh_spec(refined: bool) -> MeshSpec {
    if refined {
        MeshSpec::Refined { beta: None }
    } else {
        MeshSpec::Uniform
    }
}

/// Loss curve on `n` steps: `n + 1` times followed by `n + 1` losses.
#[wasm_bindgen]
#[allow(clippy::too_many_arguments)]
pub fn loss_curve(
    alpha: f64,
    horizon: f64,
    law_kind: &str,
    p0: f64,
    p1: f64,
    scheme_kind: &str,
    refined: bool,
    n: usize,
    particles: usize,
    seed: u64,
) -> Result<Vec<f64>, JsError> {
    let law = law(law_kind, p0, p1)?;
    let params = ModelParams::new(alpha, horizon).map_err(js)?;
    let mesh = mesh_spec(refined).build(n, horizon, &law).map_err(js)?;
    let paths = StreamedPaths::new(&law, &mesh, particles, seed).map_err(js)?;
    let (curve, _) = simulate(scheme(scheme_kind)?, &params, &paths).map_err(js)?;
    let mut out = curve.mesh().times().to_vec();
    out.extend_from_slice(curve.values());
    Ok(out)
}

/// `[T*, residual, extension condition (0 or 1), extension left-hand side]`.
#[wasm_bindgen]
pub fn theory(alpha: f64, beta: f64, b: f64, b_hat: f64) -> Result<Vec<f64>, JsError> {
    let consts = TheoryConstants::new(beta, b, b_hat).map_err(js)?;
    let r = hitsim::theory::theory_report(alpha, &consts).map_err(js)?;
    Ok(vec![r.t_star, r.residual, f64::from(u8::from(r.extension_condition)), r.extension_lhs])
}

/// Paired refinement study at the horizon over `levels` doublings of `n0`:
/// the sizes, then the paired errors, then `[order, ci_low, ci_high]`.
#[wasm_bindgen]
#[allow(clippy::too_many_arguments)]
pub fn refinement_study(
    alpha: f64,
    horizon: f64,
    law_kind: &str,
    p0: f64,
    p1: f64,
    scheme_kind: &str,
    refined: bool,
    n0: usize,
    levels: usize,
    particles: usize,
    seed: u64,
    replicates: usize,
) -> Result<Vec<f64>, JsError> {
    let setup = StudySetup {
        params: ModelParams::new(alpha, horizon).map_err(js)?,
        law: law(law_kind, p0, p1)?,
        scheme: scheme(scheme_kind)?,
        mesh: mesh_spec(refined),
        sizes: (0..levels).map(|i| n0 << i).collect(),
        particles,
        seed,
        replicates,
        evaluation_time: None,
    };
    let study = convergence_study(&setup).map_err(js)?;
    let mut out: Vec<f64> = study.sizes.iter().map(|&n| n as f64).collect();
    out.extend_from_slice(&study.errors);
    let r = &study.report;
    out.extend_from_slice(&[r.fitted_order, r.ci95.0, r.ci95.1]);
    Ok(out)
}
