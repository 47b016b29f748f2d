use hitsim::model::{build_uniform_mesh, InitialLaw, MeshKind, TimeMesh};
use hitsim::stochastic::{sample_increments, sample_initial, BrownianPaths, PathEnsemble};
use statrs::distribution::{ContinuousCDF, Gamma};

#[allow(clippy::too_many_arguments)]
fn simpson(f: &dyn Fn(f64) -> f64, a: f64, b: f64, fa: f64, fm: f64, fb: f64, whole: f64, tol: f64, depth: u32) -> f64 {
    let m = 0.5 * (a + b);
    let (lm, rm) = (0.5 * (a + m), 0.5 * (m + b));
    let (flm, frm) = (f(lm), f(rm));
    let left = (m - a) / 6.0 * (fa + 4.0 * flm + fm);
    let right = (b - m) / 6.0 * (fm + 4.0 * frm + fb);
    let delta = left + right - whole;
    if depth == 0 || delta.abs() <= 15.0 * tol {
        left + right + delta / 15.0
    } else {
        simpson(f, a, m, fa, flm, fm, left, tol / 2.0, depth - 1)
            + simpson(f, m, b, fm, frm, fb, right, tol / 2.0, depth - 1)
    }
}

fn integrate(f: &dyn Fn(f64) -> f64, a: f64, b: f64, tol: f64) -> f64 {
    let (fa, fm, fb) = (f(a), f(0.5 * (a + b)), f(b));
    let whole = (b - a) / 6.0 * (fa + 4.0 * fm + fb);
    simpson(f, a, b, fa, fm, fb, whole, tol, 50)
}

/// Integral over `(0, inf)`: `[0, 1]` directly, `[1, inf)` via `x = 1/u`.
fn integrate_half_line(f: &dyn Fn(f64) -> f64) -> f64 {
    let tail = |u: f64| if u == 0.0 { 0.0 } else { f(1.0 / u) / (u * u) };
    integrate(f, 0.0, 1.0, 1e-10) + integrate(&tail, 0.0, 1.0, 1e-10)
}

#[test]
fn densities_integrate_to_one() {
    let laws = [
        InitialLaw::gamma(1.5, 0.5).unwrap(),
        InitialLaw::gamma(2.0, 1.0).unwrap(),
        InitialLaw::gamma(1.2, 3.0).unwrap(),
        InitialLaw::reciprocal_exp(1.0).unwrap(),
        InitialLaw::reciprocal_exp(0.3).unwrap(),
    ];
    for law in laws {
        let total = integrate_half_line(&|x| law.density(x).unwrap());
        assert!((total - 1.0).abs() < 1e-6, "{law:?}: {total}");
    }
}

#[test]
fn envelope_holds_on_a_grid() {
    for law in [InitialLaw::gamma(1.5, 0.5).unwrap(), InitialLaw::reciprocal_exp(2.0).unwrap()] {
        let (beta, b) = (law.holder_beta().unwrap(), law.envelope_constant().unwrap());
        for j in 1..2000 {
            let x = j as f64 * 0.005;
            assert!(law.density(x).unwrap() <= b * x.powf(beta) * (1.0 + 1e-12), "{law:?} at {x}");
        }
    }
}

#[test]
fn gamma_sample_mean() {
    let n = 1_000_000;
    let y = sample_initial(&InitialLaw::gamma(1.5, 0.5).unwrap(), n, 42).unwrap();
    let mean = y.iter().sum::<f64>() / n as f64;
    let sd = 0.375f64.sqrt();
    assert!((mean - 0.75).abs() < 5.0 * sd / (n as f64).sqrt(), "{mean}");
}

#[test]
fn gamma_sample_passes_kolmogorov_smirnov() {
    let n = 100_000;
    let mut y = sample_initial(&InitialLaw::gamma(1.5, 0.5).unwrap(), n, 5).unwrap();
    y.sort_by(f64::total_cmp);
    // statrs parameterizes by rate.
    let cdf = Gamma::new(1.5, 2.0).unwrap();
    let d = y
        .iter()
        .enumerate()
        .map(|(i, &x)| {
            let f = cdf.cdf(x);
            (f - i as f64 / n as f64).max((i + 1) as f64 / n as f64 - f)
        })
        .fold(0.0, f64::max);
    // Asymptotic critical value at significance 0.001.
    let critical = 1.9495 / (n as f64).sqrt();
    assert!(d < critical, "D = {d}, critical {critical}");
}

#[test]
fn reciprocal_exponential_reciprocals_are_standard_exponential() {
    let n = 1_000_000;
    let y = sample_initial(&InitialLaw::reciprocal_exp(1.0).unwrap(), n, 8).unwrap();
    assert!(y.iter().all(|&v| v > 0.0 && v.is_finite()));
    let mean = y.iter().map(|v| 1.0 / v).sum::<f64>() / n as f64;
    assert!((mean - 1.0).abs() < 5.0 / (n as f64).sqrt(), "{mean}");
}

#[test]
fn point_mass_samples() {
    assert_eq!(sample_initial(&InitialLaw::dirac(1.0).unwrap(), 5, 99).unwrap(), vec![1.0; 5]);
}

fn moments(xs: impl Iterator<Item = f64>, n: usize) -> (f64, f64) {
    let v: Vec<f64> = xs.collect();
    let mean = v.iter().sum::<f64>() / n as f64;
    let var = v.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / (n as f64 - 1.0);
    (mean, var)
}

#[test]
fn unit_increments_are_standard_normal() {
    let n = 1_000_000;
    let mesh = TimeMesh::from_times(vec![0.0, 1.0], MeshKind::Uniform).unwrap();
    let dw = sample_increments(&mesh, n, 12).unwrap();
    let (mean, var) = moments(dw.into_iter(), n);
    assert!(mean.abs() < 5.0 / (n as f64).sqrt(), "{mean}");
    assert!((var - 1.0).abs() < 5.0 * (2.0 / n as f64).sqrt(), "{var}");
}

#[test]
fn increment_variance_equals_spacing() {
    let n = 100_000;
    let mesh = build_uniform_mesh(4, 2.0).unwrap();
    let dw = sample_increments(&mesh, n, 13).unwrap();
    for col in 0..4 {
        let (_, var) = moments(dw.iter().skip(col).step_by(4).copied(), n);
        let se = 0.5 * (2.0 / n as f64).sqrt();
        assert!((var - 0.5).abs() < 5.0 * se, "column {col}: {var}");
    }
}

#[test]
fn sampling_is_a_function_of_seed() {
    let mesh = TimeMesh::from_times(vec![0.0, 0.5, 1.0], MeshKind::Uniform).unwrap();
    assert_eq!(sample_increments(&mesh, 1, 3).unwrap(), sample_increments(&mesh, 1, 3).unwrap());
    assert_ne!(sample_increments(&mesh, 1, 3).unwrap(), sample_increments(&mesh, 1, 4).unwrap());
    let law = InitialLaw::gamma(1.5, 0.5).unwrap();
    let a = PathEnsemble::sample(&law, &mesh, 10, 1).unwrap();
    let b = PathEnsemble::sample(&law, &mesh, 10, 1).unwrap();
    assert_eq!(a, b);
}

#[test]
fn coarsening_keeps_terminal_value_bit_for_bit() {
    let law = InitialLaw::gamma(1.5, 0.5).unwrap();
    let mesh = build_uniform_mesh(3200, 1.0).unwrap();
    let fine = PathEnsemble::sample(&law, &mesh, 50, 21).unwrap();
    let coarse = fine.coarsen(2).unwrap();
    assert_eq!(coarse.mesh().steps(), 1600);
    for k in 0..50 {
        assert_eq!(coarse.brownian(k, 1600).to_bits(), fine.brownian(k, 3200).to_bits());
    }
    assert_eq!(fine.coarsen(1).unwrap(), fine);
}
