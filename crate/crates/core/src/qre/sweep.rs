//! Continuation in rationality.
//!
//! The sweep solves at each grid value of `lambda` in ascending order, seeding
//! every solve with the equilibria accepted at the previous value. Accepted
//! points are then linked into polylines across consecutive grid values, and a
//! second, single-start trajectory is recorded: plain descent on the objective
//! from the uniform-play point `(0.5, 0.5)`. That trajectory is what a lone
//! local minimizer would report. Local minima of the objective that are not
//! equilibria are kept as well; past a threshold rationality one of them sits
//! near the defect corner, and its appearance marks the branch transition.

use serde::{Deserialize, Serialize};

use crate::error::QreError;

use super::solver::{
    descent, max_norm, solve_qre_detailed, Branch, QrePoint, RejectedMinimum, SolverConfig,
};

/// A grid value where no start reached the acceptance tolerance.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct SweepFailure {
    pub lambda: f64,
    pub best_objective: f64,
}

/// One point of the single-start descent trajectory.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct CentralStartPoint {
    pub lambda: f64,
    pub alpha: f64,
    pub gamma: f64,
    pub objective: f64,
    pub accepted: bool,
}

/// Label change along a polyline.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct LabelTransition {
    pub polyline: usize,
    pub lambda: f64,
    pub from: Branch,
    pub to: Branch,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Sweep {
    pub config: SolverConfig,
    pub lambdas: Vec<f64>,
    /// Ordered by `lambda`, then `(alpha, gamma)`.
    pub points: Vec<QrePoint>,
    /// Indices into `points`, one list per polyline, ordered by `lambda`.
    pub polylines: Vec<Vec<usize>>,
    pub failures: Vec<SweepFailure>,
    pub rejected: Vec<RejectedMinimum>,
    pub central_start: Vec<CentralStartPoint>,
}

/// Where descent from `(0.5, 0.5)` starts.
pub const CENTRAL_START: [f64; 2] = [0.5, 0.5];

/// Solve on every grid value with continuation.
pub fn sweep_lambda(lambda_grid: &[f64], config: &SolverConfig) -> Result<Sweep, QreError> {
    if lambda_grid.windows(2).any(|w| !(w[0] < w[1])) {
        return Err(QreError::UnsortedGrid);
    }
    let mut points: Vec<QrePoint> = Vec::new();
    let mut failures = Vec::new();
    let mut rejected = Vec::new();
    let mut central_start = Vec::new();
    let mut warm: Vec<[f64; 2]> = Vec::new();

    for &lambda in lambda_grid {
        let sol = solve_qre_detailed(lambda, config, &warm)?;
        if sol.accepted.is_empty() {
            failures.push(SweepFailure {
                lambda,
                best_objective: sol.best_objective,
            });
        } else {
            warm = sol.accepted.iter().map(QrePoint::coords).collect();
        }
        let c = descent(lambda, CENTRAL_START, config);
        central_start.push(CentralStartPoint {
            lambda,
            alpha: c.x[0],
            gamma: c.x[1],
            objective: c.objective,
            accepted: c.objective < config.accept_tol,
        });
        points.extend(sol.accepted);
        rejected.extend(sol.rejected);
    }
    let polylines = link_polylines(&points, config.continuity_tol);
    Ok(Sweep {
        config: *config,
        lambdas: lambda_grid.to_vec(),
        points,
        polylines,
        failures,
        rejected,
        central_start,
    })
}

/// Link points at consecutive grid values, nearest pairs first.
///
/// `points` must be grouped by ascending `lambda`.
pub fn link_polylines(points: &[QrePoint], continuity_tol: f64) -> Vec<Vec<usize>> {
    let mut groups: Vec<std::ops::Range<usize>> = Vec::new();
    let mut i = 0;
    while i < points.len() {
        let mut j = i + 1;
        while j < points.len() && points[j].lambda == points[i].lambda {
            j += 1;
        }
        groups.push(i..j);
        i = j;
    }

    let mut polylines: Vec<Vec<usize>> = Vec::new();
    // Polyline id currently ending at each point of the previous group.
    let mut tail_of: Vec<Option<usize>> = vec![None; points.len()];
    let mut prev: Option<std::ops::Range<usize>> = None;
    for g in groups {
        let mut taken_prev = Vec::new();
        let mut linked = vec![false; g.len()];
        if let Some(p) = &prev {
            let mut pairs: Vec<(f64, usize, usize)> = Vec::new();
            for a in p.clone() {
                for b in g.clone() {
                    let d = max_norm(points[a].coords(), points[b].coords());
                    if d < continuity_tol {
                        pairs.push((d, a, b));
                    }
                }
            }
            pairs.sort_by(|x, y| x.0.total_cmp(&y.0).then(x.1.cmp(&y.1)).then(x.2.cmp(&y.2)));
            for (_, a, b) in pairs {
                if taken_prev.contains(&a) || linked[b - g.start] {
                    continue;
                }
                if let Some(id) = tail_of[a] {
                    polylines[id].push(b);
                    tail_of[b] = Some(id);
                    taken_prev.push(a);
                    linked[b - g.start] = true;
                }
            }
        }
        for b in g.clone() {
            if !linked[b - g.start] {
                tail_of[b] = Some(polylines.len());
                polylines.push(vec![b]);
            }
        }
        prev = Some(g);
    }
    polylines
}

impl Sweep {
    /// Polyline id of each point.
    pub fn polyline_ids(&self) -> Vec<usize> {
        let mut ids = vec![0; self.points.len()];
        for (id, line) in self.polylines.iter().enumerate() {
            for &i in line {
                ids[i] = id;
            }
        }
        ids
    }

    pub fn polyline_points(&self, id: usize) -> Vec<QrePoint> {
        self.polylines[id].iter().map(|&i| self.points[i]).collect()
    }

    /// The polyline that starts at the first grid value, if any.
    pub fn continuation_branch(&self) -> Option<Vec<QrePoint>> {
        let first = *self.lambdas.first()?;
        let id = self
            .polylines
            .iter()
            .position(|line| self.points[line[0]].lambda == first)?;
        Some(self.polyline_points(id))
    }

    /// Points accepted at a given grid value.
    pub fn at(&self, lambda: f64) -> Vec<QrePoint> {
        self.points
            .iter()
            .copied()
            .filter(|p| p.lambda == lambda)
            .collect()
    }

    pub fn label_transitions(&self) -> Vec<LabelTransition> {
        let mut out = Vec::new();
        for (id, line) in self.polylines.iter().enumerate() {
            for w in line.windows(2) {
                let (a, b) = (self.points[w[0]], self.points[w[1]]);
                if a.branch != b.branch {
                    out.push(LabelTransition {
                        polyline: id,
                        lambda: b.lambda,
                        from: a.branch,
                        to: b.branch,
                    });
                }
            }
        }
        out.sort_by(|a, b| a.lambda.total_cmp(&b.lambda).then(a.polyline.cmp(&b.polyline)));
        out
    }

    /// First grid value at which descent from `(0.5, 0.5)` stops reaching an
    /// equilibrium after reaching one at the previous value.
    pub fn descent_transition_lambda(&self) -> Option<f64> {
        self.central_start
            .windows(2)
            .find(|w| w[0].accepted && !w[1].accepted)
            .map(|w| w[1].lambda)
    }

    /// Rejected local minima lying nearer the defect corner `(0, 0)` than every
    /// equilibrium accepted at the same `lambda`.
    pub fn defect_minima(&self) -> Vec<RejectedMinimum> {
        let norm = |a: f64, g: f64| a.hypot(g);
        self.rejected
            .iter()
            .copied()
            .filter(|r| {
                let d = norm(r.alpha, r.gamma);
                self.points
                    .iter()
                    .filter(|p| p.lambda == r.lambda)
                    .all(|p| norm(p.alpha, p.gamma) > d)
            })
            .collect()
    }

    /// Branch-transition rationality: the first grid value at which the
    /// objective grows a defect-side local minimum (see [`Sweep::defect_minima`]).
    pub fn defect_onset_lambda(&self) -> Option<f64> {
        self.defect_minima().first().map(|r| r.lambda)
    }

    /// Largest max-norm step between consecutive points of a polyline.
    pub fn max_jump(points: &[QrePoint]) -> f64 {
        points
            .windows(2)
            .map(|w| max_norm(w[0].coords(), w[1].coords()))
            .fold(0.0, f64::max)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::nash::uniform_grid;

    fn coarse() -> SolverConfig {
        SolverConfig {
            start_grid: 9,
            ..SolverConfig::default()
        }
    }

    #[test]
    fn rejects_unsorted_grid() {
        assert!(matches!(
            sweep_lambda(&[1.0, 0.5], &coarse()),
            Err(QreError::UnsortedGrid)
        ));
        assert!(sweep_lambda(&[1.0, 1.0], &coarse()).is_err());
    }

    #[test]
    fn smooth_branch_starts_at_centre_and_is_continuous() {
        let grid = uniform_grid(0.0, 5.0, 0.05);
        let s = sweep_lambda(&grid, &coarse()).unwrap();
        assert!(s.failures.is_empty());
        let branch = s.continuation_branch().unwrap();
        let first = branch[0];
        assert!((first.alpha - 0.5).abs() < 1e-9 && (first.gamma - 0.5).abs() < 1e-9);
        let smooth: Vec<_> = branch.into_iter().filter(|p| p.lambda < 5.0).collect();
        assert_eq!(smooth.len(), grid.iter().filter(|&&l| l < 5.0).count());
        assert!(Sweep::max_jump(&smooth) < 0.05);
    }

    #[test]
    fn halving_the_step_does_not_move_the_smooth_branch() {
        let a = sweep_lambda(&uniform_grid(0.0, 5.0, 0.1), &coarse()).unwrap();
        let b = sweep_lambda(&uniform_grid(0.0, 5.0, 0.05), &coarse()).unwrap();
        let (ba, bb) = (a.continuation_branch().unwrap(), b.continuation_branch().unwrap());
        for p in &ba {
            let q = bb
                .iter()
                .min_by(|x, y| (x.lambda - p.lambda).abs().total_cmp(&(y.lambda - p.lambda).abs()))
                .unwrap();
            assert!((q.lambda - p.lambda).abs() < 1e-9);
            assert!(max_norm(p.coords(), q.coords()) < 1e-3);
        }
    }

    #[test]
    fn sweep_is_deterministic() {
        let grid = uniform_grid(4.0, 7.5, 0.25);
        let a = sweep_lambda(&grid, &coarse()).unwrap();
        let b = sweep_lambda(&grid, &coarse()).unwrap();
        assert_eq!(a, b);
    }

    #[test]
    fn defect_minimum_appears_near_seven() {
        let s = sweep_lambda(&uniform_grid(6.9, 7.3, 0.02), &SolverConfig::default()).unwrap();
        let onset = s.defect_onset_lambda().unwrap();
        assert!((7.06..=7.1).contains(&onset), "{onset}");
        // Not an equilibrium: the residual stays well away from zero.
        assert!(s.defect_minima().iter().all(|r| r.objective > 0.01));
    }

    #[test]
    fn linking_respects_continuity() {
        let p = |lambda: f64, alpha: f64, gamma: f64| QrePoint {
            lambda,
            alpha,
            gamma,
            objective: 0.0,
            branch: Branch::Smooth,
            start_count: 1,
            nash_residual: None,
            clamped: false,
        };
        let pts = vec![
            p(0.0, 0.5, 0.5),
            p(1.0, 0.3, 0.9),
            p(1.0, 0.49, 0.5),
            p(2.0, 0.48, 0.5),
        ];
        let lines = link_polylines(&pts, 0.05);
        assert_eq!(lines, vec![vec![0, 2, 3], vec![1]]);
    }
}
