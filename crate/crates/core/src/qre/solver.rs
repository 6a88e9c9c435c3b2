//! Multi-start local solution of the logit fixed-point system at fixed rationality.
//!
//! Each start runs two local methods:
//!
//! 1. damped fixed-point iteration `x <- (1 - d) x + d sigma(x)`, which finds
//!    the attracting equilibria cheaply;
//! 2. projected Levenberg-Marquardt descent on the objective, which also
//!    reaches the repelling ones and, when it stalls, reports a local minimum
//!    of the objective that is not an equilibrium.
//!
//! Results within `merge_tol` of each other are merged. Everything is
//! sequential and ordered, so a solve is deterministic.

use serde::{Deserialize, Serialize};

use crate::error::QreError;
use crate::game::PayoffMatrix;
use crate::nash::NashCurve;

use super::response::{check_lambda, residual};

/// Thresholds of the branch classification rule.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct BranchThresholds {
    /// Points below this rationality belong to the smooth branch.
    pub lambda_lo: f64,
    /// `max(alpha, gamma)` below this is the defect branch.
    pub defect: f64,
    /// Nash-curve residual magnitude below this is the near-Nash branch.
    pub near_nash: f64,
}

impl Default for BranchThresholds {
    fn default() -> Self {
        Self {
            lambda_lo: 5.0,
            defect: 0.05,
            near_nash: 0.05,
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct SolverConfig {
    #[serde(default)]
    pub matrix: PayoffMatrix,
    /// Starts per axis of the uniform start grid (including both edges).
    pub start_grid: usize,
    pub accept_tol: f64,
    /// Max-norm distance under which two solutions are the same.
    pub merge_tol: f64,
    /// Max-norm jump allowed between consecutive points of one polyline.
    pub continuity_tol: f64,
    pub damping: f64,
    pub max_fixed_point_iters: usize,
    pub max_descent_iters: usize,
    /// Curve used for the near-Nash label and intersections.
    pub curve: NashCurve,
    pub thresholds: BranchThresholds,
    /// Bisection tolerance in rationality when refining intersections.
    pub bisection_tol: f64,
    /// Residual magnitude at which a polyline touching the curve counts as an intersection.
    pub intersection_tol: f64,
}

impl Default for SolverConfig {
    fn default() -> Self {
        Self {
            matrix: PayoffMatrix::default(),
            start_grid: 21,
            accept_tol: 1e-12,
            merge_tol: 1e-4,
            continuity_tol: 0.05,
            damping: 0.5,
            max_fixed_point_iters: 400,
            max_descent_iters: 200,
            curve: NashCurve::Stationarity,
            thresholds: BranchThresholds::default(),
            bisection_tol: 1e-8,
            intersection_tol: 1e-6,
        }
    }
}

/// The three rationality regimes, plus everything that fits none of them.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Branch {
    Smooth,
    NearNash,
    Defect,
    /// Accepted equilibria away from the Nash curve and the defect corner.
    Other,
}

impl Branch {
    pub fn name(&self) -> &'static str {
        match self {
            Branch::Smooth => "smooth",
            Branch::NearNash => "near-nash",
            Branch::Defect => "defect",
            Branch::Other => "other",
        }
    }

    pub fn parse(s: &str) -> Option<Self> {
        match s {
            "smooth" => Some(Branch::Smooth),
            "near-nash" => Some(Branch::NearNash),
            "defect" => Some(Branch::Defect),
            "other" => Some(Branch::Other),
            _ => None,
        }
    }

    /// Classification rule, applied in order: smooth, defect, near-Nash.
    pub fn classify(
        lambda: f64,
        alpha: f64,
        gamma: f64,
        nash_residual: Option<f64>,
        t: &BranchThresholds,
    ) -> Self {
        if lambda < t.lambda_lo {
            Branch::Smooth
        } else if alpha.max(gamma) < t.defect {
            Branch::Defect
        } else if nash_residual.is_some_and(|r| r.abs() < t.near_nash) {
            Branch::NearNash
        } else {
            Branch::Other
        }
    }
}

/// An accepted equilibrium.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct QrePoint {
    pub lambda: f64,
    pub alpha: f64,
    pub gamma: f64,
    pub objective: f64,
    pub branch: Branch,
    pub start_count: usize,
    /// Residual of the configured Nash curve; `None` on a degenerate corner.
    pub nash_residual: Option<f64>,
    pub clamped: bool,
}

impl QrePoint {
    pub fn coords(&self) -> [f64; 2] {
        [self.alpha, self.gamma]
    }
}

/// A local minimum of the objective that is not an equilibrium.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct RejectedMinimum {
    pub lambda: f64,
    pub alpha: f64,
    pub gamma: f64,
    pub objective: f64,
    pub start_count: usize,
}

/// Everything a multi-start solve found at one rationality.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct LambdaSolution {
    pub lambda: f64,
    /// Sorted by `(alpha, gamma)`.
    pub accepted: Vec<QrePoint>,
    pub rejected: Vec<RejectedMinimum>,
    /// Lowest objective reached by any start.
    pub best_objective: f64,
}

/// Outcome of one local method from one start.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct LocalResult {
    pub x: [f64; 2],
    pub objective: f64,
    /// The method stopped at a stationary point of the objective.
    pub stationary: bool,
    pub clamped: bool,
}

pub(crate) fn max_norm(a: [f64; 2], b: [f64; 2]) -> f64 {
    (a[0] - b[0]).abs().max((a[1] - b[1]).abs())
}

fn sq(r: [f64; 2]) -> f64 {
    r[0] * r[0] + r[1] * r[1]
}

fn project(x: [f64; 2]) -> [f64; 2] {
    [x[0].clamp(0.0, 1.0), x[1].clamp(0.0, 1.0)]
}

/// Damped fixed-point iteration; stops once the objective drops below `accept_tol`.
pub fn damped_iteration(lambda: f64, x0: [f64; 2], config: &SolverConfig) -> LocalResult {
    let m = &config.matrix;
    let d = config.damping;
    let mut x = project(x0);
    let mut clamped = false;
    let mut best = f64::INFINITY;
    let mut since_improved = 0;
    for _ in 0..config.max_fixed_point_iters {
        let (r, c) = residual(m, lambda, x);
        clamped |= c;
        let f = sq(r);
        if f < config.accept_tol {
            return LocalResult {
                x,
                objective: f,
                stationary: true,
                clamped,
            };
        }
        if f < 0.5 * best {
            best = f;
            since_improved = 0;
        } else {
            since_improved += 1;
            // Cycling or crawling; leave it to the descent method.
            if since_improved > 60 {
                break;
            }
        }
        x = project([x[0] + d * r[0], x[1] + d * r[1]]);
    }
    let (r, c) = residual(m, lambda, x);
    LocalResult {
        x,
        objective: sq(r),
        stationary: false,
        clamped: clamped | c,
    }
}

/// Forward-difference Jacobian of the residual.
fn jacobian(m: &PayoffMatrix, lambda: f64, x: [f64; 2], r: [f64; 2]) -> [[f64; 2]; 2] {
    const H: f64 = 1e-8;
    let mut j = [[0.0; 2]; 2];
    for k in 0..2 {
        let mut xp = x;
        // Step inward at the upper edge.
        let h = if x[k] + H > 1.0 { -H } else { H };
        xp[k] += h;
        let (rp, _) = residual(m, lambda, xp);
        j[0][k] = (rp[0] - r[0]) / h;
        j[1][k] = (rp[1] - r[1]) / h;
    }
    j
}

/// Projected Levenberg-Marquardt descent on the objective.
pub fn descent(lambda: f64, x0: [f64; 2], config: &SolverConfig) -> LocalResult {
    let m = &config.matrix;
    let mut x = project(x0);
    let (mut r, mut clamped) = residual(m, lambda, x);
    let mut f = sq(r);
    let mut mu = 1e-3;
    let mut stationary = false;
    // Polish well past acceptance so merging and reruns see the same digits.
    let polish = config.accept_tol * 1e-8;

    for _ in 0..config.max_descent_iters {
        if f < polish {
            stationary = true;
            break;
        }
        let j = jacobian(m, lambda, x, r);
        // Gradient of f / 2 and Gauss-Newton matrix.
        let g = [
            j[0][0] * r[0] + j[1][0] * r[1],
            j[0][1] * r[0] + j[1][1] * r[1],
        ];
        // Projected gradient: ignore components pushing out of the box.
        let pg: Vec<f64> = (0..2)
            .map(|k| {
                if (x[k] <= 0.0 && g[k] > 0.0) || (x[k] >= 1.0 && g[k] < 0.0) {
                    0.0
                } else {
                    g[k]
                }
            })
            .collect();
        if pg[0].abs().max(pg[1].abs()) < 1e-15 {
            stationary = true;
            break;
        }
        let a00 = j[0][0] * j[0][0] + j[1][0] * j[1][0];
        let a01 = j[0][0] * j[0][1] + j[1][0] * j[1][1];
        let a11 = j[0][1] * j[0][1] + j[1][1] * j[1][1];

        let mut improved = false;
        for _ in 0..30 {
            let (b00, b11) = (a00 + mu * (1.0 + a00), a11 + mu * (1.0 + a11));
            let det = b00 * b11 - a01 * a01;
            if det == 0.0 || !det.is_finite() {
                mu *= 10.0;
                continue;
            }
            let step = [
                -(b11 * g[0] - a01 * g[1]) / det,
                -(b00 * g[1] - a01 * g[0]) / det,
            ];
            let xn = project([x[0] + step[0], x[1] + step[1]]);
            let (rn, cn) = residual(m, lambda, xn);
            let fn_ = sq(rn);
            if fn_ < f {
                let moved = max_norm(xn, x);
                x = xn;
                r = rn;
                f = fn_;
                clamped |= cn;
                mu = (mu / 3.0).max(1e-12);
                improved = true;
                if moved < 1e-15 {
                    stationary = true;
                }
                break;
            }
            mu *= 4.0;
        }
        if !improved {
            // No descent direction at any damping: a local minimum up to rounding.
            stationary = true;
            break;
        }
        if stationary {
            break;
        }
    }
    LocalResult {
        x,
        objective: f,
        stationary,
        clamped,
    }
}

/// Refine a near-solution: damped iteration hands over to descent.
pub fn local_solve(lambda: f64, x0: [f64; 2], config: &SolverConfig) -> LocalResult {
    let fp = damped_iteration(lambda, x0, config);
    let start = if fp.objective < config.accept_tol { fp.x } else { x0 };
    let mut d = descent(lambda, start, config);
    d.clamped |= fp.clamped && fp.objective < config.accept_tol;
    if d.objective <= fp.objective {
        d
    } else {
        fp
    }
}

/// Uniform `n x n` grid of starts on the closed unit square.
pub fn start_grid(n: usize) -> Vec<[f64; 2]> {
    if n == 0 {
        return vec![];
    }
    if n == 1 {
        return vec![[0.5, 0.5]];
    }
    let step = 1.0 / (n - 1) as f64;
    let mut out = Vec::with_capacity(n * n);
    for i in 0..n {
        for j in 0..n {
            out.push([i as f64 * step, j as f64 * step]);
        }
    }
    out
}

struct Cluster {
    x: [f64; 2],
    objective: f64,
    clamped: bool,
    starts: Vec<usize>,
}

fn merge_into(clusters: &mut Vec<Cluster>, start: usize, r: &LocalResult, tol: f64) {
    if let Some(c) = clusters.iter_mut().find(|c| max_norm(c.x, r.x) < tol) {
        if !c.starts.contains(&start) {
            c.starts.push(start);
        }
        if r.objective < c.objective {
            c.x = r.x;
            c.objective = r.objective;
            c.clamped = r.clamped;
        }
    } else {
        clusters.push(Cluster {
            x: r.x,
            objective: r.objective,
            clamped: r.clamped,
            starts: vec![start],
        });
    }
}

fn sort_clusters(clusters: &mut [Cluster]) {
    clusters.sort_by(|a, b| {
        a.x[0]
            .total_cmp(&b.x[0])
            .then(a.x[1].total_cmp(&b.x[1]))
    });
}

pub(crate) fn make_point(lambda: f64, x: [f64; 2], objective: f64, starts: usize, clamped: bool, config: &SolverConfig) -> QrePoint {
    let nash_residual = config.curve.residual(&config.matrix, x[0], x[1]).ok();
    QrePoint {
        lambda,
        alpha: x[0],
        gamma: x[1],
        objective,
        branch: Branch::classify(lambda, x[0], x[1], nash_residual, &config.thresholds),
        start_count: starts,
        nash_residual,
        clamped,
    }
}

/// Multi-start solve at one rationality, with extra warm starts appended to the grid.
pub fn solve_qre_detailed(
    lambda: f64,
    config: &SolverConfig,
    warm_starts: &[[f64; 2]],
) -> Result<LambdaSolution, QreError> {
    check_lambda(lambda)?;
    let mut starts = start_grid(config.start_grid);
    starts.extend_from_slice(warm_starts);

    let mut accepted: Vec<Cluster> = Vec::new();
    let mut rejected: Vec<Cluster> = Vec::new();
    let mut best_objective = f64::INFINITY;

    for (i, &x0) in starts.iter().enumerate() {
        let fp = damped_iteration(lambda, x0, config);
        let mut results = Vec::with_capacity(2);
        if fp.objective < config.accept_tol {
            // Polish the attracting solution to full precision.
            let mut p = descent(lambda, fp.x, config);
            p.clamped |= fp.clamped;
            results.push(if p.objective <= fp.objective { p } else { fp });
        }
        results.push(descent(lambda, x0, config));

        for r in &results {
            best_objective = best_objective.min(r.objective);
            if r.objective < config.accept_tol {
                merge_into(&mut accepted, i, r, config.merge_tol);
            } else if r.stationary {
                merge_into(&mut rejected, i, r, config.merge_tol);
            }
        }
    }
    // A rejected minimum that coincides with an equilibrium is just slow convergence.
    rejected.retain(|c| !accepted.iter().any(|a| max_norm(a.x, c.x) < config.merge_tol));
    sort_clusters(&mut accepted);
    sort_clusters(&mut rejected);

    Ok(LambdaSolution {
        lambda,
        accepted: accepted
            .iter()
            .map(|c| make_point(lambda, c.x, c.objective, c.starts.len(), c.clamped, config))
            .collect(),
        rejected: rejected
            .iter()
            .map(|c| RejectedMinimum {
                lambda,
                alpha: c.x[0],
                gamma: c.x[1],
                objective: c.objective,
                start_count: c.starts.len(),
            })
            .collect(),
        best_objective,
    })
}

/// All distinct equilibria at `lambda` reachable from the start grid.
pub fn solve_qre(lambda: f64, config: &SolverConfig) -> Result<Vec<QrePoint>, QreError> {
    let sol = solve_qre_detailed(lambda, config, &[])?;
    if sol.accepted.is_empty() {
        return Err(QreError::NoSolution {
            lambda,
            best_objective: sol.best_objective,
        });
    }
    Ok(sol.accepted)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::qre::response::qre_objective;

    fn cfg() -> SolverConfig {
        SolverConfig::default()
    }

    #[test]
    fn start_grid_shape() {
        let g = start_grid(21);
        assert_eq!(g.len(), 441);
        assert_eq!(g[0], [0.0, 0.0]);
        assert_eq!(g[440], [1.0, 1.0]);
        assert!(g.contains(&[0.5, 0.5]));
    }

    #[test]
    fn zero_rationality_is_uniform_play() {
        let pts = solve_qre(0.0, &cfg()).unwrap();
        assert_eq!(pts.len(), 1);
        let p = pts[0];
        assert!((p.alpha - 0.5).abs() < 1e-9 && (p.gamma - 0.5).abs() < 1e-9);
        assert!(p.objective < 1e-18);
        assert_eq!(p.branch, Branch::Smooth);
        assert_eq!(p.start_count, 441);
    }

    #[test]
    fn accepted_points_are_fixed_points() {
        let c = cfg();
        for lambda in [1.0, 3.0, 6.0, 8.0] {
            for p in solve_qre(lambda, &c).unwrap() {
                let r = super::super::response::response(&c.matrix, lambda, p.alpha, p.gamma);
                assert!((r.sigma_alpha - p.alpha).abs() < 1e-6);
                assert!((r.sigma_gamma - p.gamma).abs() < 1e-6);
                let f = qre_objective(&c.matrix, lambda, p.alpha, p.gamma).unwrap();
                assert!(f < c.accept_tol);
            }
        }
    }

    #[test]
    fn moderate_rationality_reaches_stationarity_curve() {
        let pts = solve_qre(6.0, &cfg()).unwrap();
        assert!(pts
            .iter()
            .any(|p| p.nash_residual.is_some_and(|r| r.abs() < 0.05)));
    }

    #[test]
    fn merged_points_are_separated() {
        let c = cfg();
        let pts = solve_qre(7.5, &c).unwrap();
        for (i, a) in pts.iter().enumerate() {
            for b in &pts[i + 1..] {
                assert!(max_norm(a.coords(), b.coords()) >= c.merge_tol);
            }
        }
    }

    #[test]
    fn rejects_invalid_lambda() {
        assert!(matches!(
            solve_qre(-1.0, &cfg()),
            Err(QreError::InvalidLambda(_))
        ));
        assert!(solve_qre(f64::NAN, &cfg()).is_err());
    }

    #[test]
    fn no_solution_is_reported() {
        // A start grid of zero points cannot find anything.
        let c = SolverConfig {
            start_grid: 0,
            ..cfg()
        };
        assert!(matches!(solve_qre(1.0, &c), Err(QreError::NoSolution { .. })));
    }

    #[test]
    fn classification_order() {
        let t = BranchThresholds::default();
        assert_eq!(Branch::classify(4.9, 0.01, 0.01, Some(0.0), &t), Branch::Smooth);
        assert_eq!(Branch::classify(6.0, 0.01, 0.04, Some(0.0), &t), Branch::Defect);
        assert_eq!(Branch::classify(6.0, 0.2, 0.5, Some(-0.01), &t), Branch::NearNash);
        assert_eq!(Branch::classify(6.0, 0.3, 0.98, Some(-1.5), &t), Branch::Other);
        assert_eq!(Branch::classify(6.0, 0.3, 0.98, None, &t), Branch::Other);
        for b in [Branch::Smooth, Branch::NearNash, Branch::Defect, Branch::Other] {
            assert_eq!(Branch::parse(b.name()), Some(b));
        }
    }
}
