//! Crossings of the equilibrium polylines with a Nash curve.

use serde::{Deserialize, Serialize};

use crate::nash::NashCurve;

use super::solver::{local_solve, max_norm, QrePoint, SolverConfig};
use super::sweep::Sweep;

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Intersection {
    pub lambda: f64,
    pub alpha: f64,
    pub gamma: f64,
    pub nash_residual: f64,
    pub polyline: usize,
    /// Set on the lowest-rationality intersection.
    pub first: bool,
    /// Found as a sign change (as opposed to a touch below tolerance).
    pub crossing: bool,
}

fn residual_of(curve: NashCurve, config: &SolverConfig, x: [f64; 2]) -> Option<f64> {
    curve.residual(&config.matrix, x[0], x[1]).ok()
}

/// Bisection in `lambda` between two polyline points whose residuals differ in sign.
fn refine(curve: NashCurve, config: &SolverConfig, a: QrePoint, b: QrePoint) -> Option<Intersection> {
    let (mut lo, mut hi) = ((a.lambda, a.coords()), (b.lambda, b.coords()));
    let mut r_lo = residual_of(curve, config, lo.1)?;
    while hi.0 - lo.0 > config.bisection_tol {
        let mid = 0.5 * (lo.0 + hi.0);
        let guess = [0.5 * (lo.1[0] + hi.1[0]), 0.5 * (lo.1[1] + hi.1[1])];
        let sol = local_solve(mid, guess, config);
        if sol.objective >= config.accept_tol || max_norm(sol.x, guess) > config.continuity_tol {
            // Lost the branch between the grid points; keep the bracket.
            break;
        }
        let r_mid = residual_of(curve, config, sol.x)?;
        if r_mid == 0.0 {
            lo = (mid, sol.x);
            hi = lo;
            break;
        }
        if (r_mid < 0.0) == (r_lo < 0.0) {
            lo = (mid, sol.x);
            r_lo = r_mid;
        } else {
            hi = (mid, sol.x);
        }
    }
    let r_hi = residual_of(curve, config, hi.1)?;
    let (lambda, x, r) = if r_lo.abs() <= r_hi.abs() {
        (lo.0, lo.1, r_lo)
    } else {
        (hi.0, hi.1, r_hi)
    };
    Some(Intersection {
        lambda,
        alpha: x[0],
        gamma: x[1],
        nash_residual: r,
        polyline: 0,
        first: false,
        crossing: true,
    })
}

/// Intersections of every sweep polyline with `curve`, sorted by `lambda`.
pub fn find_intersections(sweep: &Sweep, curve: NashCurve, config: &SolverConfig) -> Vec<Intersection> {
    let mut out = Vec::new();
    for (id, line) in sweep.polylines.iter().enumerate() {
        let pts: Vec<QrePoint> = line.iter().map(|&i| sweep.points[i]).collect();
        let res: Vec<Option<f64>> = pts.iter().map(|p| residual_of(curve, config, p.coords())).collect();
        for k in 0..pts.len() {
            let Some(r) = res[k] else { continue };
            // Touch: a local minimum of |r| below tolerance without a sign change.
            let left = k.checked_sub(1).and_then(|j| res[j]);
            let right = res.get(k + 1).copied().flatten();
            let is_local_min = left.map_or(true, |l| r.abs() <= l.abs())
                && right.map_or(true, |q| r.abs() <= q.abs());
            let sign_change_next = right.is_some_and(|q| r != 0.0 && (q < 0.0) != (r < 0.0));
            if r.abs() < config.intersection_tol && is_local_min {
                out.push(Intersection {
                    lambda: pts[k].lambda,
                    alpha: pts[k].alpha,
                    gamma: pts[k].gamma,
                    nash_residual: r,
                    polyline: id,
                    first: false,
                    crossing: sign_change_next || left.is_some_and(|l| (l < 0.0) != (r < 0.0)),
                });
                continue;
            }
            if sign_change_next && right.is_some_and(|q| q.abs() >= config.intersection_tol) {
                if let Some(mut hit) = refine(curve, config, pts[k], pts[k + 1]) {
                    hit.polyline = id;
                    out.push(hit);
                }
            }
        }
    }
    out.sort_by(|a, b| a.lambda.total_cmp(&b.lambda).then(a.polyline.cmp(&b.polyline)));
    out.dedup_by(|b, a| a.polyline == b.polyline && (a.lambda - b.lambda).abs() < config.bisection_tol);
    if let Some(first) = out.first_mut() {
        first.first = true;
    }
    out
}

/// Side-by-side intersection results for both Nash curves.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CurveComparison {
    pub stationarity: Vec<Intersection>,
    pub printed: Vec<Intersection>,
    /// Smallest `|residual|` of the printed curve over all accepted points.
    pub printed_min_abs_residual: Option<f64>,
    /// Smallest `|residual|` of the stationarity curve over all accepted points.
    pub stationarity_min_abs_residual: Option<f64>,
}

pub fn compare_curves(sweep: &Sweep, config: &SolverConfig) -> CurveComparison {
    let min_abs = |curve: NashCurve| {
        sweep
            .points
            .iter()
            .filter_map(|p| residual_of(curve, config, p.coords()))
            .map(f64::abs)
            .reduce(f64::min)
    };
    CurveComparison {
        stationarity: find_intersections(sweep, NashCurve::Stationarity, config),
        printed: find_intersections(sweep, NashCurve::Printed, config),
        printed_min_abs_residual: min_abs(NashCurve::Printed),
        stationarity_min_abs_residual: min_abs(NashCurve::Stationarity),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::nash::uniform_grid;
    use crate::qre::sweep::sweep_lambda;

    fn coarse() -> SolverConfig {
        SolverConfig {
            start_grid: 9,
            ..SolverConfig::default()
        }
    }

    #[test]
    fn empty_sweep_has_no_intersections() {
        let s = sweep_lambda(&[], &coarse()).unwrap();
        assert!(find_intersections(&s, NashCurve::Stationarity, &coarse()).is_empty());
    }

    #[test]
    fn stationarity_crossing_is_refined() {
        let c = coarse();
        let s = sweep_lambda(&uniform_grid(5.0, 6.5, 0.1), &c).unwrap();
        let hits = find_intersections(&s, NashCurve::Stationarity, &c);
        assert!(!hits.is_empty());
        let h = hits[0];
        assert!(h.first);
        assert!(h.nash_residual.abs() < 1e-6, "{h:?}");
        assert!(hits.iter().skip(1).all(|x| !x.first));
    }
}
