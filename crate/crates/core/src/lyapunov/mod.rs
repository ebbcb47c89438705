//! Transfer-matrix cocycles and finite-scale Lyapunov exponents.
//!
//! The one-step matrix is `A(E - V(n)) = [[E - V(n), -1], [1, 0]]`; n-step
//! products are accumulated with norm renormalization so that `3^12`-step
//! products never overflow. Norms of 2x2 unimodular matrices come from the
//! closed form `log |A| = g(x)` with `tr(A^T A) = 2 + x^2` and
//! `g(x) = (1/2) log(1 + x^2/2 + sqrt(x^2 + x^4/4))`.

pub mod avalanche;

use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::operator::{PotentialSource, Side};

/// Renormalize the running product whenever its local log-norm passes this.
const RENORM_THRESHOLD: f64 = 100.0;

/// 2x2 real matrix for transfer-operator products.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TransferMatrix {
    pub m: [[f64; 2]; 2],
}

impl TransferMatrix {
    pub fn identity() -> Self {
        Self {
            m: [[1.0, 0.0], [0.0, 1.0]],
        }
    }

    /// One-step transfer matrix `[[E - v, -1], [1, 0]]`.
    pub fn one_step(e: f64, v: f64) -> Self {
        Self {
            m: [[e - v, -1.0], [1.0, 0.0]],
        }
    }

    /// Exact inverse of a one-step matrix: `[[0, 1], [-1, E - v]]`.
    pub fn one_step_inverse(e: f64, v: f64) -> Self {
        Self {
            m: [[0.0, 1.0], [-1.0, e - v]],
        }
    }

    pub fn det(&self) -> f64 {
        self.m[0][0] * self.m[1][1] - self.m[0][1] * self.m[1][0]
    }

    pub fn mul(&self, rhs: &TransferMatrix) -> TransferMatrix {
        let a = &self.m;
        let b = &rhs.m;
        TransferMatrix {
            m: [
                [
                    a[0][0] * b[0][0] + a[0][1] * b[1][0],
                    a[0][0] * b[0][1] + a[0][1] * b[1][1],
                ],
                [
                    a[1][0] * b[0][0] + a[1][1] * b[1][0],
                    a[1][0] * b[0][1] + a[1][1] * b[1][1],
                ],
            ],
        }
    }

    pub fn scale(&self, s: f64) -> TransferMatrix {
        TransferMatrix {
            m: [
                [self.m[0][0] * s, self.m[0][1] * s],
                [self.m[1][0] * s, self.m[1][1] * s],
            ],
        }
    }

    /// Spectral norm via the closed form: `|A|^2` is the larger root of
    /// `s^2 - t s + det^2` with `t = tr(A^T A)`. The discriminant is
    /// evaluated as `t sqrt(1 - 4 (det/t)^2)` so that `t^2` never
    /// overflows for pre-renormalization products.
    pub fn norm(&self) -> f64 {
        let t: f64 = self
            .m
            .iter()
            .flat_map(|r| r.iter())
            .map(|x| x * x)
            .sum();
        if t == 0.0 {
            return 0.0;
        }
        let r = self.det() / t; // |det| <= t/2, so |r| <= 1/2
        let df = (1.0 - 4.0 * r * r).max(0.0).sqrt();
        (0.5 * t * (1.0 + df)).sqrt()
    }

    pub fn log_norm(&self) -> f64 {
        self.norm().ln()
    }
}

/// `g(x) = (1/2) log(1 + x^2/2 + sqrt(x^2 + x^4/4))`: the log-norm of the
/// one-step matrix with `tr(A^T A) = 2 + x^2`. Stable at both ends.
pub fn g_closed_form(x: f64) -> f64 {
    assert!(x >= 0.0, "g is used on x >= 0");
    if x == 0.0 {
        return 0.0;
    }
    if x < 1.0 {
        // sqrt(x^2 + x^4/4) = (x/2) sqrt(4 + x^2)
        let inner = 0.5 * x * x + 0.5 * x * (4.0 + x * x).sqrt();
        0.5 * inner.ln_1p()
    } else {
        let r = 1.0 / (x * x);
        x.ln() + 0.5 * (r + 0.5 + 0.5 * (1.0 + 4.0 * r).sqrt()).ln()
    }
}

/// `log |A(x) A(y)| = g(sqrt(x^2 y^2 + (x - y)^2))`.
pub fn pair_norm(x: f64, y: f64) -> f64 {
    let d = x - y;
    g_closed_form((x * x * y * y + d * d).sqrt())
}

/// A renormalized running product: the represented matrix is
/// `exp(acc_log) * mat` with `|mat|` kept within `[1, e^100]`.
#[derive(Debug, Clone)]
pub struct CocycleProduct {
    pub acc_log: f64,
    pub mat: TransferMatrix,
    /// Signed step count: positive for forward, negative for backward.
    pub n: i64,
}

impl CocycleProduct {
    pub fn identity() -> Self {
        Self {
            acc_log: 0.0,
            mat: TransferMatrix::identity(),
            n: 0,
        }
    }

    /// `log |A(E, n, omega)|`.
    pub fn log_norm(&self) -> f64 {
        self.acc_log + self.mat.log_norm()
    }

    fn renormalize(&mut self) {
        // keep the local norm inside [1, e^100]; products of normalized
        // factors drift downward, so both ends need rescaling
        let ln = self.mat.log_norm();
        if !(0.0..=RENORM_THRESHOLD).contains(&ln) {
            self.acc_log += ln;
            self.mat = self.mat.scale((-ln).exp());
        }
    }

    /// Left-multiply by one factor.
    pub fn apply(&mut self, step: &TransferMatrix, dn: i64) {
        self.mat = step.mul(&self.mat);
        self.n += dn;
        self.renormalize();
    }

    /// Left-multiply by `step^count` (binary powering, renormalized).
    pub fn apply_power(&mut self, step: &TransferMatrix, count: u128, dn_sign: i64) {
        if count == 0 {
            return;
        }
        let (acc, pw) = matrix_power(step, count);
        self.mat = pw.mul(&self.mat);
        self.acc_log += acc;
        self.n += dn_sign * count as i64;
        self.renormalize();
    }
}

/// `(log-scale, matrix)` factorization of `m^count`.
pub fn matrix_power(m: &TransferMatrix, mut count: u128) -> (f64, TransferMatrix) {
    let mut result_acc = 0.0f64;
    let mut result = TransferMatrix::identity();
    let mut base_acc = 0.0f64;
    let mut base = *m;
    loop {
        if count & 1 == 1 {
            result = base.mul(&result);
            result_acc += base_acc;
            let ln = result.log_norm();
            if !(0.0..=RENORM_THRESHOLD).contains(&ln) {
                result_acc += ln;
                result = result.scale((-ln).exp());
            }
        }
        count >>= 1;
        if count == 0 {
            break;
        }
        base = base.mul(&base);
        base_acc *= 2.0;
        let ln = base.log_norm();
        if !(0.0..=RENORM_THRESHOLD).contains(&ln) {
            base_acc += ln;
            base = base.scale((-ln).exp());
        }
    }
    (result_acc, result)
}

/// The n-step cocycle at energy `E`: forward products for `n > 0`, exact
/// inverse one-step factors for `n < 0`.
pub fn cocycle(e: f64, src: &PotentialSource, n: i64) -> Result<CocycleProduct> {
    if n == 0 {
        return Ok(CocycleProduct::identity());
    }
    let mut state = CocycleProduct::identity();
    extend_cocycle(&mut state, e, src, n)?;
    Ok(state)
}

/// Extend a running product from its current step count to `target`
/// (same sign, larger magnitude).
pub fn extend_cocycle(
    state: &mut CocycleProduct,
    e: f64,
    src: &PotentialSource,
    target: i64,
) -> Result<()> {
    if target == state.n {
        return Ok(());
    }
    if target > 0 {
        if state.n < 0 || target < state.n {
            return Err(Error::Domain("cocycle extension must move outward".into()));
        }
        // consume positions [state.n, target)
        let from = state.n;
        let count = (target - from) as u128;
        let runs = src.runs(from, count)?;
        for r in &runs {
            let step = TransferMatrix::one_step(e, r.value);
            state.apply_power(&step, r.len, 1);
        }
        Ok(())
    } else {
        if state.n > 0 || target > state.n {
            return Err(Error::Domain("cocycle extension must move outward".into()));
        }
        // consume positions [target, -|state.n| - 1] in decreasing order
        let lo = target;
        let hi = state.n - 1; // inclusive
        let count = (hi - lo + 1) as u128;
        let runs = src.runs(lo, count)?;
        for r in runs.iter().rev() {
            let step = TransferMatrix::one_step_inverse(e, r.value);
            state.apply_power(&step, r.len, -1);
        }
        Ok(())
    }
}

/// Finite-scale Lyapunov data: the per-scale series
/// `(1/3^s) log |A(E, +-3^s, omega)|` and tail min/max estimates over the
/// last half of the schedule.
#[derive(Debug, Clone)]
pub struct ExponentEstimates {
    pub e: f64,
    pub s_max: u32,
    pub lbar_plus: f64,
    pub lunder_plus: f64,
    pub lbar_minus: f64,
    pub lunder_minus: f64,
    pub series_plus: Vec<(u32, f64)>,
    pub series_minus: Vec<(u32, f64)>,
}

fn tail_min_max(series: &[(u32, f64)]) -> (f64, f64) {
    let s_max = series.last().map(|x| x.0).unwrap_or(0);
    let cut = s_max / 2;
    let tail: Vec<f64> = series
        .iter()
        .filter(|(s, _)| *s > cut)
        .map(|(_, v)| *v)
        .collect();
    let lo = tail.iter().cloned().fold(f64::INFINITY, f64::min);
    let hi = tail.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    (lo, hi)
}

/// Estimate the four exponents along the schedule `n = 3^s`, `s = 1..s_max`.
pub fn exponents(e: f64, src: &PotentialSource, s_max: u32) -> Result<ExponentEstimates> {
    if s_max < 4 {
        return Err(Error::Domain(format!("s_max = {s_max} must be >= 4")));
    }
    if s_max > 39 {
        return Err(Error::Domain(format!("s_max = {s_max} exceeds the i64 window range")));
    }
    let mut series_plus = Vec::with_capacity(s_max as usize);
    let mut series_minus = Vec::with_capacity(s_max as usize);

    let mut fwd = CocycleProduct::identity();
    let mut bwd = CocycleProduct::identity();
    for s in 1..=s_max {
        let n = 3i64.pow(s);
        extend_cocycle(&mut fwd, e, src, n)?;
        series_plus.push((s, fwd.log_norm() / n as f64));
        extend_cocycle(&mut bwd, e, src, -n)?;
        series_minus.push((s, bwd.log_norm() / n as f64));
    }

    let (lunder_plus, lbar_plus) = tail_min_max(&series_plus);
    let (lunder_minus, lbar_minus) = tail_min_max(&series_minus);
    Ok(ExponentEstimates {
        e,
        s_max,
        lbar_plus,
        lunder_plus,
        lbar_minus,
        lunder_minus,
        series_plus,
        series_minus,
    })
}

/// Forward-only variant for sources defined on the forward orbit.
pub fn exponents_forward_only(
    e: f64,
    src: &PotentialSource,
    s_max: u32,
) -> Result<(Vec<(u32, f64)>, f64, f64)> {
    if s_max < 2 {
        return Err(Error::Domain(format!("s_max = {s_max} must be >= 2")));
    }
    let mut series = Vec::with_capacity(s_max as usize);
    let mut fwd = CocycleProduct::identity();
    for s in 1..=s_max {
        let n = 3i64.pow(s);
        extend_cocycle(&mut fwd, e, src, n)?;
        series.push((s, fwd.log_norm() / n as f64));
    }
    let (lo, hi) = tail_min_max(&series);
    Ok((series, lo, hi))
}

/// Last-Simon style diagnostic: `(1/(N log^2 N)) sum_{n=1}^N |A(E, +-n)|^2`
/// accumulated in log space. `overflowed` marks a value past the f64 range.
#[derive(Debug, Clone, Copy)]
pub struct LastSimonValue {
    pub value: f64,
    pub overflowed: bool,
}

pub fn last_simon_diagnostic(
    e: f64,
    src: &PotentialSource,
    n_max: u64,
    side: Side,
) -> Result<LastSimonValue> {
    if n_max < 8 {
        return Err(Error::Domain(format!("N = {n_max} must be >= 8")));
    }
    let mut state = CocycleProduct::identity();
    let mut logs: Vec<f64> = Vec::with_capacity(n_max as usize);
    for i in 1..=n_max as i64 {
        let target = match side {
            Side::Plus => i,
            Side::Minus => -i,
        };
        extend_cocycle(&mut state, e, src, target)?;
        logs.push(2.0 * state.log_norm());
    }
    let m = logs.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    let sum: f64 = logs.iter().map(|l| (l - m).exp()).sum();
    let nf = n_max as f64;
    let log_total = m + sum.ln() - (nf * nf.ln() * nf.ln()).ln();
    if log_total > 700.0 {
        Ok(LastSimonValue {
            value: f64::INFINITY,
            overflowed: true,
        })
    } else {
        Ok(LastSimonValue {
            value: log_total.exp(),
            overflowed: false,
        })
    }
}

/// One row of an energy scan.
#[derive(Debug, Clone)]
pub struct ScanRow {
    pub e: f64,
    pub estimates: ExponentEstimates,
}

/// Exponent estimates across an energy grid (parallel, deterministic
/// ordering).
pub fn exponent_scan(src: &PotentialSource, e_grid: &[f64], s_max: u32) -> Result<Vec<ScanRow>> {
    e_grid
        .par_iter()
        .map(|&e| {
            exponents(e, src, s_max).map(|estimates| ScanRow { e, estimates })
        })
        .collect()
}

/// Energies where the smaller of the two upper-exponent estimates falls
/// below the threshold: a finite-scale stand-in for the set where one of
/// them vanishes.
pub fn ac_support_scan(
    src: &PotentialSource,
    e_grid: &[f64],
    s_max: u32,
    threshold: f64,
) -> Result<Vec<f64>> {
    if !(threshold > 0.0) {
        return Err(Error::Domain("threshold must be positive".into()));
    }
    let rows = exponent_scan(src, e_grid, s_max)?;
    Ok(rows
        .into_iter()
        .filter(|r| r.estimates.lbar_plus.min(r.estimates.lbar_minus) < threshold)
        .map(|r| r.e)
        .collect())
}
