//! Symmetric logit quantal response equilibria in Markov strategies.
//!
//! A symmetric profile `(alpha, gamma)` is an equilibrium at rationality
//! `lambda` when each parameter equals the logit probability of choosing 1 over
//! 0 for that parameter, given the payoffs of those pure deviations. Solutions
//! are found by minimizing the squared fixed-point residual.

mod intersect;
mod payoffs;
mod response;
mod solver;
mod sweep;

pub use intersect::{compare_curves, find_intersections, CurveComparison, Intersection};
pub use payoffs::{conditional_payoffs, ConditionalPayoffs};
pub use response::{logit_response, qre_objective, response, Response, CLAMP_EPS};
pub use solver::{
    damped_iteration, descent, local_solve, solve_qre, solve_qre_detailed, start_grid, Branch,
    BranchThresholds, LambdaSolution, LocalResult, QrePoint, RejectedMinimum, SolverConfig,
};
pub use sweep::{
    link_polylines, sweep_lambda, CentralStartPoint, LabelTransition, Sweep, SweepFailure,
    CENTRAL_START,
};

use serde::{Deserialize, Serialize};

use crate::game::PayoffMatrix;

/// One node of an objective mesh.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct ObjectiveSample {
    pub alpha: f64,
    pub gamma: f64,
    pub objective: f64,
    /// Evaluated at the clamped profile because the node sits on a degenerate corner.
    pub clamped: bool,
}

/// Objective values on the product mesh `alphas x gammas`, `alpha` outermost.
///
/// Nodes on a degenerate corner are evaluated at the clamped profile and flagged.
pub fn objective_grid(
    matrix: &PayoffMatrix,
    lambda: f64,
    alphas: &[f64],
    gammas: &[f64],
) -> Vec<ObjectiveSample> {
    let mut out = Vec::with_capacity(alphas.len() * gammas.len());
    for &alpha in alphas {
        for &gamma in gammas {
            let r = response(matrix, lambda, alpha, gamma);
            out.push(ObjectiveSample {
                alpha,
                gamma,
                objective: (r.sigma_alpha - alpha).powi(2) + (r.sigma_gamma - gamma).powi(2),
                clamped: r.clamped,
            });
        }
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn objective_grid_zero_at_centre_for_uniform_play() {
        let axis = crate::nash::uniform_grid(0.0, 1.0, 0.1);
        let g = objective_grid(&PayoffMatrix::default(), 0.0, &axis, &axis);
        assert_eq!(g.len(), 121);
        let c = g.iter().find(|s| s.alpha == 0.5 && s.gamma == 0.5).unwrap();
        assert!(g.iter().all(|s| s.objective.is_finite()));
        assert_eq!(c.objective, 0.0);
        assert!(g.iter().all(|s| s.objective >= 0.0));
        assert_eq!(g.iter().filter(|s| s.clamped).count(), 2);
    }
}
