//! Payoffs of a pure deviation in one Markov parameter against a symmetric opponent.
//!
//! Player 2 plays `(alpha, gamma)`. Player 1 keeps one of the two parameters
//! at the common value and sets the other to 0 or 1; only then are the two
//! players identified. Identifying them first would collapse every case onto
//! the corners of the strategy square.

use serde::{Deserialize, Serialize};

use crate::error::GameError;
use crate::game::{expected_payoff, PayoffMatrix, DEGENERACY_THRESHOLD};

/// Player 1's stationary payoff when one own parameter is pinned to 0 or 1.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct ConditionalPayoffs {
    /// Own `alpha = 0`, own `gamma` at the common value.
    pub u_alpha0: f64,
    /// Own `alpha = 1`.
    pub u_alpha1: f64,
    /// Own `gamma = 0`, own `alpha` at the common value.
    pub u_gamma0: f64,
    /// Own `gamma = 1`.
    pub u_gamma1: f64,
}

impl ConditionalPayoffs {
    /// Payoff gain of cooperating after a defection (`alpha = 1` over `alpha = 0`).
    pub fn alpha_gain(&self) -> f64 {
        self.u_alpha1 - self.u_alpha0
    }

    /// Payoff gain of cooperating after a cooperation.
    pub fn gamma_gain(&self) -> f64 {
        self.u_gamma1 - self.u_gamma0
    }
}

/// Stationary `(p1, p2)` for the pinned deviation as `numerator / denominator` pairs.
fn pinned(
    num1: f64,
    num2: f64,
    denom: f64,
) -> Result<(f64, f64), GameError> {
    if denom.abs() < DEGENERACY_THRESHOLD {
        return Err(GameError::DegenerateChain { denominator: denom });
    }
    Ok((num1 / denom, num2 / denom))
}

/// Closed-form conditional payoffs at the symmetric profile `(alpha, gamma)`.
pub fn conditional_payoffs(
    alpha: f64,
    gamma: f64,
    matrix: &PayoffMatrix,
) -> Result<ConditionalPayoffs, GameError> {
    let (a, g) = (alpha, gamma);
    let d = a - g;
    let shared = a - a * a + a * g;

    let (p1, p2) = pinned(a * g, a, 1.0 + g * d)?;
    let u_alpha0 = expected_payoff(matrix, p1, p2);

    let (p1, p2) = pinned(1.0 - a + a * g, g, 1.0 - (1.0 - g) * d)?;
    let u_alpha1 = expected_payoff(matrix, p1, p2);

    let (p1, p2) = pinned(a - a * a, shared, 1.0 - a * d)?;
    let u_gamma0 = expected_payoff(matrix, p1, p2);

    let (p1, p2) = pinned(2.0 * a - a * a, shared, 1.0 - (a - 1.0) * d)?;
    let u_gamma1 = expected_payoff(matrix, p1, p2);

    Ok(ConditionalPayoffs {
        u_alpha0,
        u_alpha1,
        u_gamma0,
        u_gamma1,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::game::{stationary_state, MarkovStrategy};
    use proptest::prelude::*;

    /// Pin the parameter in an asymmetric pair first, then evaluate.
    fn composed(alpha: f64, gamma: f64, m: &PayoffMatrix) -> [f64; 4] {
        let opp = MarkovStrategy::new(alpha, gamma).unwrap();
        let eval = |own: MarkovStrategy| {
            let st = stationary_state(&own, &opp).unwrap();
            expected_payoff(m, st.p1, st.p2)
        };
        [
            eval(MarkovStrategy::new(0.0, gamma).unwrap()),
            eval(MarkovStrategy::new(1.0, gamma).unwrap()),
            eval(MarkovStrategy::new(alpha, 0.0).unwrap()),
            eval(MarkovStrategy::new(alpha, 1.0).unwrap()),
        ]
    }

    /// U|alpha=0 and U|alpha=1 written out with the default-matrix coefficients.
    fn expanded_alpha_forms(a: f64, g: f64) -> (f64, f64) {
        let d0 = g * (a - g) + 1.0;
        let u0 = -4.0 * a * a * g / (d0 * d0) - a * g / d0 + 9.0 * a / d0 + 1.0;
        let d1 = -(a - g) * (1.0 - g) + 1.0;
        let u1 = -4.0 * g * (-a * (1.0 - g) + 1.0) / (d1 * d1) + 9.0 * g / d1
            - (-a * (1.0 - g) + 1.0) / d1
            + 1.0;
        (u0, u1)
    }

    #[test]
    fn centre_values() {
        let c = conditional_payoffs(0.5, 0.5, &PayoffMatrix::default()).unwrap();
        assert!((c.u_alpha0 - 4.75).abs() < 1e-12);
        assert!((c.u_alpha1 - 3.25).abs() < 1e-12);
        let oracle = composed(0.5, 0.5, &PayoffMatrix::default());
        let got = [c.u_alpha0, c.u_alpha1, c.u_gamma0, c.u_gamma1];
        for (x, y) in got.iter().zip(oracle) {
            assert!((x - y).abs() < 1e-12);
        }
    }

    #[test]
    fn corners_are_degenerate() {
        let m = PayoffMatrix::default();
        assert!(conditional_payoffs(0.0, 1.0, &m).is_err());
        assert!(conditional_payoffs(1.0, 0.0, &m).is_err());
        assert!(conditional_payoffs(0.0, 0.0, &m).is_ok());
        assert!(conditional_payoffs(1.0, 1.0, &m).is_ok());
    }

    #[test]
    fn defect_corner_values() {
        // Against all-defect, pinning alpha = 1 turns player 1 into all-cooperate.
        let c = conditional_payoffs(0.0, 0.0, &PayoffMatrix::default()).unwrap();
        assert_eq!(c.u_alpha0, 1.0);
        assert_eq!(c.u_alpha1, 0.0);
        assert_eq!(c.gamma_gain(), 0.0);
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(1000))]

        #[test]
        fn closed_form_matches_composition(a in 0.0..=1.0f64, g in 0.0..=1.0f64) {
            prop_assume!(!(a < 1e-3 && g > 1.0 - 1e-3) && !(a > 1.0 - 1e-3 && g < 1e-3));
            let m = PayoffMatrix::default();
            let c = conditional_payoffs(a, g, &m).unwrap();
            let oracle = composed(a, g, &m);
            let got = [c.u_alpha0, c.u_alpha1, c.u_gamma0, c.u_gamma1];
            for (x, y) in got.iter().zip(oracle) {
                prop_assert!((x - y).abs() < 1e-12, "{} vs {}", x, y);
            }
        }

        #[test]
        fn alpha_forms_match_expanded_polynomial(a in 0.0..=1.0f64, g in 0.0..=1.0f64) {
            prop_assume!(!(a < 1e-3 && g > 1.0 - 1e-3) && !(a > 1.0 - 1e-3 && g < 1e-3));
            let c = conditional_payoffs(a, g, &PayoffMatrix::default()).unwrap();
            let (u0, u1) = expanded_alpha_forms(a, g);
            prop_assert!((c.u_alpha0 - u0).abs() < 1e-10);
            prop_assert!((c.u_alpha1 - u1).abs() < 1e-10);
        }

        #[test]
        fn general_matrix_closed_form_matches_composition(
            a in 0.05..0.95f64, g in 0.05..0.95f64,
            r in -5.0..5.0f64, s in -5.0..5.0f64, t in -5.0..5.0f64, p in -5.0..5.0f64,
        ) {
            let m = PayoffMatrix::new(r, s, t, p).unwrap();
            let c = conditional_payoffs(a, g, &m).unwrap();
            let oracle = composed(a, g, &m);
            let got = [c.u_alpha0, c.u_alpha1, c.u_gamma0, c.u_gamma1];
            for (x, y) in got.iter().zip(oracle) {
                prop_assert!((x - y).abs() < 1e-11);
            }
        }
    }
}
