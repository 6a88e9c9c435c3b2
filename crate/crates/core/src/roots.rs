//! Scalar root finding: grid bracketing, bisection and a stable quadratic solve.

/// Bisection on `[lo, hi]` where `f(lo)` and `f(hi)` have opposite signs (or one is zero).
///
/// Stops when the bracket is narrower than `tol` and returns its midpoint.
pub fn bisect<F>(mut f: F, mut lo: f64, mut hi: f64, tol: f64) -> f64
where
    F: FnMut(f64) -> f64,
{
    let mut f_lo = f(lo);
    if f_lo == 0.0 {
        return lo;
    }
    if f(hi) == 0.0 {
        return hi;
    }
    // 200 halvings exhaust f64 resolution for any bracket.
    for _ in 0..200 {
        if hi - lo <= tol {
            break;
        }
        let mid = 0.5 * (lo + hi);
        let f_mid = f(mid);
        if f_mid == 0.0 {
            return mid;
        }
        if (f_mid < 0.0) == (f_lo < 0.0) {
            lo = mid;
            f_lo = f_mid;
        } else {
            hi = mid;
        }
    }
    0.5 * (lo + hi)
}

/// Index pairs `(i, i + 1)` of consecutive samples whose values change sign.
///
/// An exact zero at an interior sample is reported once, as the bracket ending at it.
pub fn sign_changes(values: &[f64]) -> Vec<usize> {
    let mut out = Vec::new();
    for i in 0..values.len().saturating_sub(1) {
        let (a, b) = (values[i], values[i + 1]);
        if !a.is_finite() || !b.is_finite() {
            continue;
        }
        if a == 0.0 {
            continue;
        }
        if b == 0.0 || (a < 0.0) != (b < 0.0) {
            out.push(i);
        }
    }
    out
}

/// Real roots of `a x^2 + b x + c`, ascending. Empty when the discriminant is negative.
pub fn solve_quadratic(a: f64, b: f64, c: f64) -> Vec<f64> {
    if a == 0.0 {
        return if b == 0.0 { vec![] } else { vec![-c / b] };
    }
    let disc = b * b - 4.0 * a * c;
    if disc < 0.0 {
        return vec![];
    }
    let root = disc.sqrt();
    // Avoid cancellation: compute the larger-magnitude root first.
    let q = -0.5 * (b + b.signum() * root);
    let mut roots = if q == 0.0 {
        vec![0.0, 0.0]
    } else {
        vec![q / a, c / q]
    };
    roots.sort_by(|x, y| x.partial_cmp(y).unwrap());
    roots
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn bisection_finds_sqrt2() {
        let r = bisect(|x| x * x - 2.0, 0.0, 2.0, 1e-12);
        assert!((r - 2f64.sqrt()).abs() < 1e-12);
    }

    #[test]
    fn bisection_respects_exact_endpoint_zero() {
        assert_eq!(bisect(|x| x - 1.0, 1.0, 3.0, 1e-9), 1.0);
    }

    #[test]
    fn sign_changes_skip_leading_zero() {
        assert_eq!(sign_changes(&[0.0, 1.0, -1.0, -2.0, 0.0, 3.0]), vec![1, 3]);
        assert!(sign_changes(&[1.0]).is_empty());
    }

    #[test]
    fn quadratic_cases() {
        assert_eq!(solve_quadratic(5.0, -14.0, 0.0), vec![0.0, 2.8]);
        assert!(solve_quadratic(1.0, 0.0, 1.0).is_empty());
        let r = solve_quadratic(1.0, -1e8, 1.0);
        assert!((r[0] - 1e-8).abs() < 1e-20);
        assert_eq!(solve_quadratic(0.0, 2.0, -1.0), vec![0.5]);
    }
}
