//! Bracketing root finders.

use crate::error::{Error, Result};

/// Bisection on `[lo, hi]` where `f(lo)` and `f(hi)` differ in sign.
///
/// Stops once `|f(mid)| <= f_tol` and the bracket is narrower than `x_tol`,
/// or when `f(mid)` is exactly zero. Returns `(root, f(root))`.
pub fn bisect<F>(
    f: F,
    mut lo: f64,
    mut hi: f64,
    f_tol: f64,
    x_tol: f64,
    max_iter: usize,
) -> Result<(f64, f64)>
where
    F: Fn(f64) -> f64,
{
    let mut f_lo = f(lo);
    let f_hi = f(hi);
    if f_lo == 0.0 {
        return Ok((lo, 0.0));
    }
    if f_hi == 0.0 {
        return Ok((hi, 0.0));
    }
    if f_lo.signum() == f_hi.signum() {
        return Err(Error::Invalid {
            what: "bisection bracket",
            detail: format!("f({lo}) = {f_lo:e} and f({hi}) = {f_hi:e} share a sign"),
        });
    }

    let mut mid = 0.5 * (lo + hi);
    let mut f_mid = f(mid);
    for _ in 0..max_iter {
        if f_mid == 0.0 || (f_mid.abs() <= f_tol && (hi - lo).abs() <= x_tol) {
            return Ok((mid, f_mid));
        }
        if f_mid.signum() == f_lo.signum() {
            lo = mid;
            f_lo = f_mid;
        } else {
            hi = mid;
        }
        let next = 0.5 * (lo + hi);
        if next == mid {
            // bracket collapsed to adjacent floats
            break;
        }
        mid = next;
        f_mid = f(mid);
    }
    if f_mid.abs() <= f_tol {
        Ok((mid, f_mid))
    } else {
        Err(Error::NoConvergence {
            iterations: max_iter,
            residual: f_mid.abs(),
        })
    }
}

/// Sub-intervals of a uniform grid over `[lo, hi]` on which `f` changes sign
/// (or touches zero at the left end).
pub fn sign_changes<F>(f: F, lo: f64, hi: f64, steps: usize) -> Vec<(f64, f64)>
where
    F: Fn(f64) -> f64,
{
    let h = (hi - lo) / steps as f64;
    let xs: Vec<f64> = (0..=steps)
        .map(|i| if i == steps { hi } else { lo + i as f64 * h })
        .collect();
    let ys: Vec<f64> = xs.iter().map(|&x| f(x)).collect();
    xs.windows(2)
        .zip(ys.windows(2))
        .filter(|(_, y)| y[0] == 0.0 || y[0].signum() != y[1].signum() && y[1] != 0.0)
        .map(|(x, _)| (x[0], x[1]))
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn finds_sqrt_two() {
        let (x, fx) = bisect(|x| x * x - 2.0, 0.0, 2.0, 1e-14, 1e-14, 200).unwrap();
        assert!((x - std::f64::consts::SQRT_2).abs() < 1e-12);
        assert!(fx.abs() <= 1e-14);
    }

    #[test]
    fn rejects_non_bracket() {
        assert!(bisect(|x| x * x + 1.0, -1.0, 1.0, 1e-10, 1e-10, 100).is_err());
    }

    #[test]
    fn endpoint_root() {
        assert_eq!(
            bisect(|x| x, 0.0, 1.0, 1e-10, 1e-10, 10).unwrap(),
            (0.0, 0.0)
        );
    }

    #[test]
    fn scan_finds_all_roots_of_cubic() {
        let f = |x: f64| (x - 1.0) * (x + 0.5) * (x - 2.2);
        let brackets = sign_changes(f, -3.0, 3.0, 600);
        assert_eq!(brackets.len(), 3);
    }
}
