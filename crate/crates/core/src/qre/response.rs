//! Logit responses and the fixed-point objective.

use crate::error::QreError;
use crate::game::PayoffMatrix;

use super::payoffs::{conditional_payoffs, ConditionalPayoffs};

/// Iterates are pulled this far inside the square when a pinned chain degenerates.
pub const CLAMP_EPS: f64 = 1e-9;

/// Logit choice probability of option 1: `e^{l u1} / (e^{l u0} + e^{l u1})`.
///
/// Evaluated as `1 / (1 + e^{l (u0 - u1)})`, which never overflows.
pub fn logit_response(lambda: f64, u_choice1: f64, u_choice0: f64) -> f64 {
    if lambda == 0.0 {
        return 0.5;
    }
    1.0 / (1.0 + (lambda * (u_choice0 - u_choice1)).exp())
}

/// Logit responses `(sigma_alpha, sigma_gamma)` at a symmetric profile.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Response {
    pub sigma_alpha: f64,
    pub sigma_gamma: f64,
    /// The profile had to be pulled off a degenerate corner.
    pub clamped: bool,
}

impl Response {
    pub fn from_payoffs(lambda: f64, c: &ConditionalPayoffs) -> Self {
        Self {
            sigma_alpha: logit_response(lambda, c.u_alpha1, c.u_alpha0),
            sigma_gamma: logit_response(lambda, c.u_gamma1, c.u_gamma0),
            clamped: false,
        }
    }
}

/// The logit response map, with the corner policy applied.
///
/// Only the corners `(0, 1)` and `(1, 0)` zero a denominator; there the profile
/// is clamped into `[eps, 1 - eps]^2` and the clamp is reported.
pub fn response(matrix: &PayoffMatrix, lambda: f64, alpha: f64, gamma: f64) -> Response {
    match conditional_payoffs(alpha, gamma, matrix) {
        Ok(c) => Response::from_payoffs(lambda, &c),
        Err(_) => {
            let a = alpha.clamp(CLAMP_EPS, 1.0 - CLAMP_EPS);
            let g = gamma.clamp(CLAMP_EPS, 1.0 - CLAMP_EPS);
            // Off the exact corners every denominator is at least ~eps.
            let c = conditional_payoffs(a, g, matrix)
                .expect("clamped profile is non-degenerate");
            Response {
                clamped: true,
                ..Response::from_payoffs(lambda, &c)
            }
        }
    }
}

/// Fixed-point residual `(sigma_alpha - alpha, sigma_gamma - gamma)`.
pub(crate) fn residual(matrix: &PayoffMatrix, lambda: f64, x: [f64; 2]) -> ([f64; 2], bool) {
    let r = response(matrix, lambda, x[0], x[1]);
    ([r.sigma_alpha - x[0], r.sigma_gamma - x[1]], r.clamped)
}

/// Sum of squared fixed-point residuals; zero exactly at a QRE.
pub fn qre_objective(
    matrix: &PayoffMatrix,
    lambda: f64,
    alpha: f64,
    gamma: f64,
) -> Result<f64, QreError> {
    check_lambda(lambda)?;
    let c = conditional_payoffs(alpha, gamma, matrix)?;
    let r = Response::from_payoffs(lambda, &c);
    Ok((r.sigma_alpha - alpha).powi(2) + (r.sigma_gamma - gamma).powi(2))
}

pub(crate) fn check_lambda(lambda: f64) -> Result<(), QreError> {
    if lambda.is_finite() && lambda >= 0.0 {
        Ok(())
    } else {
        Err(QreError::InvalidLambda(lambda))
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn logit_examples() {
        assert_eq!(logit_response(0.0, 7.0, -3.0), 0.5);
        assert!((logit_response(1e6, 1.0, 0.0) - 1.0).abs() < 1e-12);
        assert_eq!(logit_response(1.0, 2.5, 2.5), 0.5);
        assert_eq!(logit_response(1e6, 0.0, 1.0), 0.0);
    }

    #[test]
    fn objective_examples() {
        let m = PayoffMatrix::default();
        assert_eq!(qre_objective(&m, 0.0, 0.5, 0.5).unwrap(), 0.0);
        assert!((qre_objective(&m, 0.0, 0.3, 0.8).unwrap() - 0.13).abs() < 1e-15);
        assert!(qre_objective(&m, -1.0, 0.5, 0.5).is_err());
        assert!(qre_objective(&m, 1.0, 0.0, 1.0).is_err());
    }

    #[test]
    fn objective_matches_independent_composition() {
        let m = PayoffMatrix::default();
        let c = conditional_payoffs(0.5, 0.5, &m).unwrap();
        let sa = (2.0 * c.u_alpha1).exp() / ((2.0 * c.u_alpha0).exp() + (2.0 * c.u_alpha1).exp());
        let sg = (2.0 * c.u_gamma1).exp() / ((2.0 * c.u_gamma0).exp() + (2.0 * c.u_gamma1).exp());
        let expected = (sa - 0.5).powi(2) + (sg - 0.5).powi(2);
        assert!((qre_objective(&m, 2.0, 0.5, 0.5).unwrap() - expected).abs() < 1e-15);
    }

    #[test]
    fn corner_is_clamped_not_nan() {
        let r = response(&PayoffMatrix::default(), 3.0, 0.0, 1.0);
        assert!(r.clamped);
        assert!(r.sigma_alpha.is_finite() && r.sigma_gamma.is_finite());
        assert!(!response(&PayoffMatrix::default(), 3.0, 0.2, 0.7).clamped);
    }

    proptest! {
        #[test]
        fn logit_is_bounded_without_overflow(l in 0.0..1e6f64, u1 in -1e3..1e3f64, u0 in -1e3..1e3f64) {
            let p = logit_response(l, u1, u0);
            prop_assert!(p.is_finite() && (0.0..=1.0).contains(&p));
        }

        #[test]
        fn logit_is_open_interval_for_moderate_arguments(l in 0.0..5.0f64, u1 in -3.0..3.0f64, u0 in -3.0..3.0f64) {
            let p = logit_response(l, u1, u0);
            prop_assert!(p > 0.0 && p < 1.0);
        }

        #[test]
        fn logit_matches_ratio_form(l in 0.0..5.0f64, u1 in -10.0..10.0f64, u0 in -10.0..10.0f64) {
            let ratio = (l * u1).exp() / ((l * u0).exp() + (l * u1).exp());
            prop_assert!((logit_response(l, u1, u0) - ratio).abs() < 1e-14);
        }

        #[test]
        fn logit_is_increasing_in_gain(l in 0.1..10.0f64, base in -1.0..1.0f64, gap in 0.01..1.0f64) {
            prop_assert!(logit_response(l, base + gap, 0.0) > logit_response(l, base, 0.0));
        }

        #[test]
        fn high_rationality_selects_argmax(u0 in -100.0..100.0f64, gain in 0.01..100.0f64) {
            prop_assert!(logit_response(1e4, u0 + gain, u0) > 0.999);
        }
    }
}
