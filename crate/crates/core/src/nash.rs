//! Symmetric totally mixed Nash equilibria in Markov strategies.
//!
//! Two descriptions of the equilibrium locus live here side by side:
//!
//! * the printed quadratic `5a^2 + 9g^2 - 14ag - 10g + 1 = 0`, traced by an
//!   exact quadratic solve for each `gamma`;
//! * the stationarity locus, re-derived numerically: a symmetric profile is an
//!   interior best response when the payoff is flat in the player's own
//!   Markov parameters while the opponent is held fixed.
//!
//! The two agree on the `alpha = 0` edge and disagree elsewhere, so downstream
//! code selects one through [`NashCurve`].

use serde::{Deserialize, Serialize};

use crate::error::GameError;
use crate::game::{
    expected_payoff, expected_payoff_gradient, stationary_state, MarkovStrategy, PayoffMatrix,
    DEGENERACY_THRESHOLD,
};
use crate::roots::{bisect, sign_changes, solve_quadratic};

/// Bracketing grid spacing for root searches on residual functions.
pub const BRACKET_SPACING: f64 = 1e-3;
/// Bisection tolerance in the searched parameter.
pub const BISECTION_TOL: f64 = 1e-10;
/// Step for one-sided differences at the `alpha = 0` edge.
const EDGE_STEP: f64 = 1e-6;
/// Edge slopes this small count as a root at `alpha = 0`.
const EDGE_ZERO_TOL: f64 = 1e-9;

/// Which description of the Nash locus defines "the Nash curve".
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum NashCurve {
    /// The printed quadratic.
    Printed,
    /// Zero set of the own-payoff gradient (default).
    #[default]
    Stationarity,
}

impl NashCurve {
    pub fn name(&self) -> &'static str {
        match self {
            NashCurve::Printed => "printed",
            NashCurve::Stationarity => "stationarity",
        }
    }

    /// Residual of the selected curve at the symmetric profile `(alpha, gamma)`.
    pub fn residual(
        &self,
        matrix: &PayoffMatrix,
        alpha: f64,
        gamma: f64,
    ) -> Result<f64, GameError> {
        match self {
            NashCurve::Printed => Ok(eq4_residual(alpha, gamma)),
            NashCurve::Stationarity => stationarity_curve_residual(matrix, alpha, gamma),
        }
    }
}

/// Smaller or larger root of the per-`gamma` equation.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum CurveBranch {
    Lower,
    Upper,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct CurvePoint {
    pub alpha: f64,
    pub gamma: f64,
    pub branch: CurveBranch,
    pub eq4_residual: f64,
    /// `None` where the symmetric chain is degenerate.
    pub stationarity_residual: Option<f64>,
}

/// `5a^2 + 9g^2 - 14ag - 10g + 1`, exactly as printed.
pub fn eq4_residual(alpha: f64, gamma: f64) -> f64 {
    5.0 * alpha * alpha + 9.0 * gamma * gamma - 14.0 * alpha * gamma - 10.0 * gamma + 1.0
}

fn in_unit(x: f64) -> Option<f64> {
    // Roots that miss the square by rounding only are snapped onto it.
    const SLACK: f64 = 1e-12;
    if (-SLACK..=1.0 + SLACK).contains(&x) {
        Some(x.clamp(0.0, 1.0))
    } else {
        None
    }
}

/// Points of the printed curve for each `gamma`, by solving
/// `5a^2 - 14g a + (9g^2 - 10g + 1) = 0` for `alpha`.
///
/// Only roots inside the unit square are returned. No points exist where the
/// discriminant `16g^2 + 200g - 20` is negative (`gamma` below about 0.0991).
pub fn trace_eq4_curve(matrix: &PayoffMatrix, gamma_grid: &[f64]) -> Vec<CurvePoint> {
    let mut out = Vec::new();
    for &gamma in gamma_grid {
        let roots = solve_quadratic(5.0, -14.0 * gamma, 9.0 * gamma * gamma - 10.0 * gamma + 1.0);
        for (i, root) in roots.iter().enumerate() {
            let Some(alpha) = in_unit(*root) else {
                continue;
            };
            let branch = if i == 0 && roots.len() == 2 {
                CurveBranch::Lower
            } else {
                CurveBranch::Upper
            };
            out.push(CurvePoint {
                alpha,
                gamma,
                branch,
                eq4_residual: eq4_residual(alpha, gamma),
                stationarity_residual: stationarity_curve_residual(matrix, alpha, gamma).ok(),
            });
        }
    }
    out
}

/// Gradient of player 1's stationary payoff with respect to its own
/// `(alpha, gamma)`, holding the opponent fixed.
///
/// Analytic chain rule through the closed-form stationary state.
pub fn own_payoff_gradient(
    matrix: &PayoffMatrix,
    opponent: &MarkovStrategy,
    own: &MarkovStrategy,
) -> Result<(f64, f64), GameError> {
    let st = stationary_state(own, opponent)?;
    let (a1, g1) = (own.alpha(), own.gamma());
    let a2 = opponent.alpha();
    let d1 = a1 - g1;
    let d2 = opponent.alpha() - opponent.gamma();
    let denom = 1.0 - d1 * d2;
    let n1 = a1 - a2 * d1;
    let n2 = a2 - a1 * d2;
    let dd = denom * denom;

    let dp1_da = ((1.0 - a2) * denom + n1 * d2) / dd;
    let dp1_dg = (a2 * denom - n1 * d2) / dd;
    let dp2_da = d2 * (n2 - denom) / dd;
    let dp2_dg = -n2 * d2 / dd;

    let (du_dp1, du_dp2) = expected_payoff_gradient(matrix, st.p1, st.p2);
    Ok((
        du_dp1 * dp1_da + du_dp2 * dp2_da,
        du_dp1 * dp1_dg + du_dp2 * dp2_dg,
    ))
}

/// Player 1's stationary payoff for an arbitrary pair of Markov strategies.
pub fn stationary_payoff(
    matrix: &PayoffMatrix,
    own: &MarkovStrategy,
    opponent: &MarkovStrategy,
) -> Result<f64, GameError> {
    let st = stationary_state(own, opponent)?;
    Ok(expected_payoff(matrix, st.p1, st.p2))
}

fn symmetric(alpha: f64, gamma: f64) -> Result<MarkovStrategy, GameError> {
    MarkovStrategy::new(alpha, gamma)
}

/// The `gamma` component of [`own_payoff_gradient`] at the symmetric profile.
pub fn stationarity_curve_residual(
    matrix: &PayoffMatrix,
    alpha: f64,
    gamma: f64,
) -> Result<f64, GameError> {
    let s = symmetric(alpha, gamma)?;
    let d = alpha - gamma;
    if (1.0 - d * d).abs() < DEGENERACY_THRESHOLD {
        return Err(GameError::DegenerateChain {
            denominator: 1.0 - d * d,
        });
    }
    Ok(own_payoff_gradient(matrix, &s, &s)?.1)
}

/// One-sided slope of [`stationarity_curve_residual`] in `alpha` at `alpha = 0`.
///
/// The residual carries an overall factor `alpha`, so on the `alpha = 0` edge
/// its zero set is the whole edge; this slope is the reduced residual there.
/// Second-order difference: `(4 r(h) - r(2h)) / 2h`, using `r(0) = 0`.
pub fn stationarity_edge_slope(matrix: &PayoffMatrix, gamma: f64) -> Result<f64, GameError> {
    let r1 = stationarity_curve_residual(matrix, EDGE_STEP, gamma)?;
    let r2 = stationarity_curve_residual(matrix, 2.0 * EDGE_STEP, gamma)?;
    Ok((4.0 * r1 - r2) / (2.0 * EDGE_STEP))
}

/// Points of the stationarity locus for each `gamma`.
///
/// Roots in `alpha` are bracketed on a `1e-3` grid over `[0, 1]` and refined by
/// bisection. The sign at the `alpha = 0` end comes from the edge slope, which
/// removes the trivial factor `alpha`.
pub fn trace_stationarity_curve(matrix: &PayoffMatrix, gamma_grid: &[f64]) -> Vec<CurvePoint> {
    let steps = (1.0 / BRACKET_SPACING).round() as usize;
    let mut out = Vec::new();
    for &gamma in gamma_grid {
        let Ok(mut edge) = stationarity_edge_slope(matrix, gamma) else {
            continue;
        };
        if edge.abs() < EDGE_ZERO_TOL {
            edge = 0.0;
        }
        let mut samples = Vec::with_capacity(steps + 1);
        samples.push(edge);
        for k in 1..=steps {
            let alpha = k as f64 * BRACKET_SPACING;
            samples.push(stationarity_curve_residual(matrix, alpha, gamma).unwrap_or(f64::NAN));
        }
        let mut roots = Vec::new();
        if edge == 0.0 {
            roots.push(0.0);
        }
        for i in sign_changes(&samples) {
            let lo = i as f64 * BRACKET_SPACING;
            let hi = (i + 1) as f64 * BRACKET_SPACING;
            let sign_lo = samples[i];
            let root = bisect(
                |a| {
                    if a == lo && i == 0 {
                        sign_lo
                    } else {
                        stationarity_curve_residual(matrix, a, gamma).unwrap_or(f64::NAN)
                    }
                },
                lo,
                hi,
                BISECTION_TOL,
            );
            roots.push(root);
        }
        let n = roots.len();
        for (i, alpha) in roots.into_iter().enumerate() {
            let branch = if n == 2 && i == 0 {
                CurveBranch::Lower
            } else if n == 2 {
                CurveBranch::Upper
            } else {
                CurveBranch::Lower
            };
            out.push(CurvePoint {
                alpha,
                gamma,
                branch,
                eq4_residual: eq4_residual(alpha, gamma),
                stationarity_residual: stationarity_curve_residual(matrix, alpha, gamma).ok(),
            });
        }
    }
    out
}

/// Uniform grid `start, start + step, ..., end` (inclusive, up to rounding).
pub fn uniform_grid(start: f64, end: f64, step: f64) -> Vec<f64> {
    if !(step > 0.0) || end < start {
        return vec![];
    }
    let n = ((end - start) / step + 1e-9).floor() as usize;
    (0..=n).map(|k| start + k as f64 * step).collect()
}

/// Where the curves meet the `alpha = 0` edge: `gamma = 1/9` and `gamma = 1`.
pub const EDGE_ANCHORS: [f64; 2] = [1.0 / 9.0, 1.0];

/// `grid` with the [`EDGE_ANCHORS`] that fall inside its range merged in, sorted.
pub fn with_edge_anchors(grid: &[f64]) -> Vec<f64> {
    let mut out = grid.to_vec();
    let (Some(&lo), Some(&hi)) = (
        grid.iter().min_by(|a, b| a.total_cmp(b)),
        grid.iter().max_by(|a, b| a.total_cmp(b)),
    ) else {
        return out;
    };
    for a in EDGE_ANCHORS {
        // The anchor replaces a grid value within rounding of it.
        const SAME: f64 = 1e-12;
        if (lo - SAME..=hi + SAME).contains(&a) {
            match out.iter_mut().find(|g| (**g - a).abs() < SAME) {
                Some(g) => *g = a,
                None => out.push(a),
            }
        }
    }
    out.sort_by(f64::total_cmp);
    out
}
