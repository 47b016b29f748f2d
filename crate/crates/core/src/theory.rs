//! Horizons and conditions from the convergence theory, computed from given
//! envelope constants.

use serde::Serialize;

use crate::error::{ensure, Error, Result};
use crate::model::TheoryConstants;

/// `alpha B [ sqrt(2T/pi) + alpha B_tilde T^((1+beta)/2) ]^beta`, strictly
/// increasing in `T` from 0.
pub fn t_star_lhs(alpha: f64, consts: &TheoryConstants, t: f64) -> f64 {
    let beta = consts.beta;
    let inner = (2.0 * t / std::f64::consts::PI).sqrt()
        + alpha * consts.b_tilde * t.powf((1.0 + beta) / 2.0);
    alpha * consts.b * inner.powf(beta)
}

/// Root `T*` of `t_star_lhs(alpha, consts, T) = 1`, by bisection.
pub fn solve_t_star(alpha: f64, consts: &TheoryConstants) -> Result<f64> {
    ensure!(alpha.is_finite() && alpha > 0.0, "alpha must be finite and > 0, got {alpha}");
    let f = |t: f64| t_star_lhs(alpha, consts, t) - 1.0;

    let mut hi = 1.0;
    while f(hi) <= 0.0 {
        hi *= 2.0;
        if !hi.is_finite() || !f(hi).is_finite() {
            return Err(Error::Numeric("T* bracket overflowed".into()));
        }
    }
    let mut lo = f64::EPSILON;
    while f(lo) > 0.0 {
        lo /= 2.0;
        if lo == 0.0 {
            return Err(Error::Numeric("T* bracket underflowed".into()));
        }
    }
    // Halve until the bracket cannot shrink any further.
    loop {
        let mid = 0.5 * (lo + hi);
        if mid <= lo || mid >= hi {
            break;
        }
        if f(mid) > 0.0 {
            hi = mid;
        } else {
            lo = mid;
        }
    }
    Ok(if f(lo).abs() <= f(hi).abs() { lo } else { hi })
}

/// `2 alpha (B_hat T*^(-(1-beta)/2) + 1/sqrt(T*)) < 1`.
pub fn check_extension_condition(alpha: f64, consts: &TheoryConstants, t_star: f64) -> Result<bool> {
    ensure!(t_star.is_finite() && t_star > 0.0, "T* must be finite and > 0, got {t_star}");
    Ok(extension_lhs(alpha, consts, t_star) < 1.0)
}

pub fn extension_lhs(alpha: f64, consts: &TheoryConstants, t_star: f64) -> f64 {
    let beta = consts.beta;
    2.0 * alpha * (consts.b_hat * t_star.powf(-(1.0 - beta) / 2.0) + 1.0 / t_star.sqrt())
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct TheoryReport {
    pub alpha: f64,
    pub constants: TheoryConstants,
    pub t_star: f64,
    pub residual: f64,
    pub extension_condition: bool,
    pub extension_lhs: f64,
}

pub fn theory_report(alpha: f64, consts: &TheoryConstants) -> Result<TheoryReport> {
    let t_star = solve_t_star(alpha, consts)?;
    Ok(TheoryReport {
        alpha,
        constants: *consts,
        t_star,
        residual: (t_star_lhs(alpha, consts, t_star) - 1.0).abs(),
        extension_condition: check_extension_condition(alpha, consts, t_star)?,
        extension_lhs: extension_lhs(alpha, consts, t_star),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;

    #[test]
    fn worked_example_root() {
        // sqrt(2T/pi) + T = 1.
        let c = TheoryConstants::from_loss_bound(1.0, 1.0, 1.0).unwrap();
        let t = solve_t_star(1.0, &c).unwrap();
        assert_abs_diff_eq!(t, 0.459_274_988_167_465, epsilon = 1e-12);
        assert!((t_star_lhs(1.0, &c, t) - 1.0).abs() < 1e-12);
    }

    #[test]
    fn t_star_shrinks_with_alpha() {
        let c = TheoryConstants::new(0.5, 3.19, 1.0).unwrap();
        let ts: Vec<f64> = [1.0, 2.0, 4.0, 8.0]
            .iter()
            .map(|&a| solve_t_star(a, &c).unwrap())
            .collect();
        assert!(ts.windows(2).all(|w| w[1] < w[0]), "{ts:?}");
        assert!(solve_t_star(0.0, &c).is_err());
    }

    #[test]
    fn extension_condition_examples() {
        let c = TheoryConstants::new(1.0, 1.0, 0.01).unwrap();
        assert!(check_extension_condition(0.1, &c, 100.0).unwrap());
        assert_abs_diff_eq!(extension_lhs(0.1, &c, 100.0), 0.022, epsilon = 1e-15);
        let c = TheoryConstants::new(1.0, 1.0, 1.0).unwrap();
        assert!(!check_extension_condition(1.0, &c, 1.0).unwrap());
        assert_eq!(extension_lhs(1.0, &c, 1.0), 4.0);
        assert!(check_extension_condition(1.0, &c, 0.0).is_err());
    }
}
