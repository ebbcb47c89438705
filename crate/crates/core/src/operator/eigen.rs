//! Symmetric tridiagonal eigenvalues by Sturm-sequence bisection.
//!
//! The negative-pivot count of the shifted LDL^T recurrence equals the
//! number of eigenvalues below the shift, so each eigenvalue can be boxed
//! by bisection with certified counts. Off-diagonals here are nonzero, so
//! the spectrum is simple.

use crate::error::{Error, Result};

/// Number of eigenvalues strictly below `x`, via the pivot recurrence
/// `d_i = a_i - x - b_{i-1}^2 / d_{i-1}`.
pub fn count_below(diag: &[f64], off2: &[f64], x: f64, pivmin: f64) -> usize {
    let mut count = 0usize;
    let mut d = 1.0f64;
    for (i, &a) in diag.iter().enumerate() {
        d = if i == 0 { a - x } else { a - x - off2[i - 1] / d };
        if d.abs() < pivmin {
            d = -pivmin;
        }
        if d < 0.0 {
            count += 1;
        }
    }
    count
}

/// All eigenvalues of the symmetric tridiagonal matrix with the given
/// diagonal and off-diagonal, each within absolute tolerance `tol`,
/// ascending.
pub fn eigenvalues_all(diag: &[f64], offdiag: &[f64], tol: f64) -> Result<Vec<f64>> {
    let n = diag.len();
    if n == 0 {
        return Ok(Vec::new());
    }
    assert_eq!(offdiag.len(), n.saturating_sub(1), "off-diagonal length");
    if !(tol > 0.0) {
        return Err(Error::Domain(format!("tol = {tol} must be positive")));
    }
    let off2: Vec<f64> = offdiag.iter().map(|b| b * b).collect();
    let max_off2 = off2.iter().cloned().fold(0.0f64, f64::max);
    let pivmin = (f64::EPSILON * f64::EPSILON * max_off2).max(f64::MIN_POSITIVE);

    // Gershgorin bounds
    let mut lo = f64::INFINITY;
    let mut hi = f64::NEG_INFINITY;
    for i in 0..n {
        let r = if n == 1 {
            0.0
        } else if i == 0 {
            offdiag[0].abs()
        } else if i == n - 1 {
            offdiag[n - 2].abs()
        } else {
            offdiag[i - 1].abs() + offdiag[i].abs()
        };
        lo = lo.min(diag[i] - r);
        hi = hi.max(diag[i] + r);
    }
    lo -= tol;
    hi += tol;

    let max_iter = 40 + ((hi - lo) / tol).log2().ceil().max(0.0) as usize;
    let mut out = Vec::with_capacity(n);
    for j in 0..n {
        // invariant: count(a) <= j < count(b)
        let mut a = lo;
        let mut b = hi;
        let mut iters = 0usize;
        while b - a > tol {
            let mid = 0.5 * (a + b);
            if count_below(diag, &off2, mid, pivmin) > j {
                b = mid;
            } else {
                a = mid;
            }
            iters += 1;
            if iters > max_iter {
                return Err(Error::ToleranceUnreachable(format!(
                    "bisection stagnated for eigenvalue {j} at width {}",
                    b - a
                )));
            }
        }
        out.push(0.5 * (a + b));
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;

    /// Eigenvalues of the free tridiagonal (zero diagonal, unit hopping):
    /// `2 cos(j pi / (n+1))`, j = 1..n.
    fn free_eigs(n: usize) -> Vec<f64> {
        let mut v: Vec<f64> = (1..=n)
            .map(|j| 2.0 * (std::f64::consts::PI * j as f64 / (n as f64 + 1.0)).cos())
            .collect();
        v.sort_by(|a, b| a.partial_cmp(b).unwrap());
        v
    }

    #[test]
    fn two_by_two_free() {
        let e = eigenvalues_all(&[0.0, 0.0], &[1.0], 1e-12).unwrap();
        assert!((e[0] + 1.0).abs() < 1e-10);
        assert!((e[1] - 1.0).abs() < 1e-10);
    }

    #[test]
    fn three_by_three_free() {
        let e = eigenvalues_all(&[0.0; 3], &[1.0; 2], 1e-12).unwrap();
        let s2 = 2.0f64.sqrt();
        assert!((e[0] + s2).abs() < 1e-10);
        assert!(e[1].abs() < 1e-10);
        assert!((e[2] - s2).abs() < 1e-10);
    }

    #[test]
    fn free_matches_closed_form() {
        for n in [1usize, 2, 5, 16, 33] {
            let e = eigenvalues_all(&vec![0.0; n], &vec![1.0; n.saturating_sub(1)], 1e-11).unwrap();
            let expect = free_eigs(n);
            for (a, b) in e.iter().zip(expect.iter()) {
                assert!((a - b).abs() < 1e-9, "n = {n}: {a} vs {b}");
            }
        }
    }

    #[test]
    fn count_is_monotone() {
        let diag = [0.3, -1.2, 0.7, 2.0, -0.5];
        let off2 = [1.0, 1.0, 1.0, 1.0];
        let mut prev = 0;
        for k in -40..=40 {
            let x = k as f64 * 0.1;
            let c = count_below(&diag, &off2, x, f64::MIN_POSITIVE);
            assert!(c >= prev, "count dropped at x = {x}");
            prev = c;
        }
        assert_eq!(prev, 5);
    }

    #[test]
    fn single_site() {
        let e = eigenvalues_all(&[0.37], &[], 1e-12).unwrap();
        assert!((e[0] - 0.37).abs() < 1e-10);
    }
}
