//! The avalanche principle as a checked inequality, plus the two
//! exponent-gap demonstrations built on it.
//!
//! For unimodular matrices with `|A_j| >= mu` and pairwise defect
//! `|log|A_j| + log|A_{j+1}| - log|A_{j+1} A_j|| < gamma <= (1/2) log mu`,
//! the long product obeys
//! `log|A_N ... A_1| >= sum_{j=3}^{N} log|A_j| - (N-2) gamma - C1 N / mu`.

use std::sync::Arc;

use rug::Rational;
use serde::Serialize;

use crate::dynamics::thm2::Thm2Construction;
use crate::dynamics::BlockDecomposition;
use crate::error::{Error, Result};
use crate::operator::PotentialSource;

use super::{
    exponents, exponents_forward_only, g_closed_form, CocycleProduct, TransferMatrix,
};

/// Outcome of checking the hypotheses and the product lower bound on one
/// sequence of matrices.
#[derive(Debug, Clone, Serialize)]
pub struct AvalancheReport {
    pub n: usize,
    pub mu: f64,
    pub gamma: f64,
    pub c1: f64,
    /// `log |A_N ... A_1|` by renormalized accumulation.
    pub product_log_norm: f64,
    /// `sum_{j=3}^N log|A_j| - (N-2) gamma - C1 N / mu`.
    pub lower_bound: f64,
    /// `product_log_norm - lower_bound`.
    pub slack: f64,
    /// Largest pairwise defect observed.
    pub max_defect: f64,
}

/// Verify the hypotheses and evaluate both sides of the product bound.
pub fn avalanche_check(
    matrices: &[TransferMatrix],
    mu: f64,
    gamma: f64,
    c1: f64,
) -> Result<AvalancheReport> {
    let n = matrices.len();
    if n < 3 {
        return Err(Error::Domain(format!("need at least 3 matrices, got {n}")));
    }
    if !is_power_of_three(n) {
        return Err(Error::Domain(format!("N = {n} is not a power of 3")));
    }
    if !(gamma <= 0.5 * mu.ln()) {
        return Err(Error::Domain(format!(
            "gamma = {gamma} exceeds (1/2) log mu = {}",
            0.5 * mu.ln()
        )));
    }

    // unimodularity and the norm floor
    for (i, m) in matrices.iter().enumerate() {
        if (m.det() - 1.0).abs() > 1e-9 {
            return Err(Error::HypothesisViolated {
                index: i,
                reason: format!("determinant {} is not 1", m.det()),
            });
        }
        if m.norm() < mu {
            return Err(Error::HypothesisViolated {
                index: i,
                reason: format!("norm {} below mu = {mu}", m.norm()),
            });
        }
    }

    // pairwise non-cancellation
    let mut max_defect = 0.0f64;
    for i in 0..n - 1 {
        let a = &matrices[i];
        let b = &matrices[i + 1];
        let defect = (a.log_norm() + b.log_norm() - b.mul(a).log_norm()).abs();
        max_defect = max_defect.max(defect);
        if !(defect < gamma) {
            return Err(Error::HypothesisViolated {
                index: i,
                reason: format!("pairwise defect {defect} not below gamma = {gamma}"),
            });
        }
    }

    // product by renormalized accumulation, rightmost factor first
    let mut state = CocycleProduct::identity();
    for m in matrices {
        state.apply(m, 1);
    }
    let product_log_norm = state.log_norm();

    let sum_tail: f64 = matrices[2..].iter().map(|m| m.log_norm()).sum();
    let lower_bound = sum_tail - (n as f64 - 2.0) * gamma - c1 * n as f64 / mu;

    Ok(AvalancheReport {
        n,
        mu,
        gamma,
        c1,
        product_log_norm,
        lower_bound,
        slack: product_log_norm - lower_bound,
        max_defect,
    })
}

fn is_power_of_three(mut n: usize) -> bool {
    if n == 0 {
        return false;
    }
    while n % 3 == 0 {
        n /= 3;
    }
    n == 1
}

/// Which exponent gap a demonstration exhibits.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum GapVariant {
    UpperVsLower,
    ForwardVsBackward,
}

/// Gap demonstration data at one energy.
#[derive(Debug, Clone, Serialize)]
pub struct GapReport {
    pub variant: GapVariant,
    pub e: f64,
    pub delta: f64,
    pub c1: f64,
    pub mu: f64,
    pub gamma: f64,
    /// `(s, (1/3^s) log |A(E, 3^s)|)` forward.
    pub series_forward: Vec<(u32, f64)>,
    /// Backward series for the two-sided variant.
    pub series_backward: Option<Vec<(u32, f64)>>,
    pub forward_tail_max: f64,
    pub forward_tail_min: f64,
    pub backward_tail_max: Option<f64>,
    /// The observed gap for the variant's comparison.
    pub observed_gap: f64,
    /// `g(E + delta) - g(E - delta) - C1/mu - gamma`.
    pub theoretical_floor: f64,
    /// Density of the rarer potential value per scale (diagnostic).
    pub density_forward: Vec<(u32, f64)>,
}

fn rational_from(v: f64) -> Rational {
    Rational::from_f64(v).expect("finite")
}

/// Density of value `v1` among the first `3^s` forward sites.
fn density_series(src: &PotentialSource, v1: f64, s_max: u32) -> Result<Vec<(u32, f64)>> {
    let mut out = Vec::with_capacity(s_max as usize);
    for s in 1..=s_max {
        let n = 3i64.pow(s);
        let runs = src.runs(0, n as u128)?;
        let ones: u128 = runs
            .iter()
            .filter(|r| (r.value - v1).abs() < 1e-12)
            .map(|r| r.len)
            .sum();
        out.push((s, ones as f64 / n as f64));
    }
    Ok(out)
}

/// Upper-vs-lower forward gap on the shell construction: the potential
/// takes values `+delta` (on the 1-shells) and `-delta`, with
/// `delta = 2 C1`.
pub fn gap_demo_upper_vs_lower(
    e: f64,
    c1: f64,
    construction: Arc<Thm2Construction>,
    base_u: f64,
    s_max: u32,
) -> Result<GapReport> {
    let delta = 2.0 * c1;
    if !(e.abs() > delta + 2.0) {
        return Err(Error::Domain(format!(
            "|E| = {} must exceed delta + 2 = {}",
            e.abs(),
            delta + 2.0
        )));
    }
    let mu = e.abs() - delta;
    let gamma = 4.0 / (mu * mu);
    let src = PotentialSource::thm2_scaled(
        construction,
        base_u,
        rational_from(-delta),
        rational_from(delta),
    );
    let (series_forward, tail_min, tail_max) = exponents_forward_only(e, &src, s_max)?;
    let density_forward = density_series(&src, delta, s_max)?;

    // both density regimes must appear somewhere in the schedule
    let dmin = density_forward
        .iter()
        .map(|x| x.1)
        .fold(f64::INFINITY, f64::min);
    let dmax = density_forward
        .iter()
        .map(|x| x.1)
        .fold(f64::NEG_INFINITY, f64::max);
    if dmax - dmin < 0.3 {
        return Err(Error::InsufficientScale(format!(
            "potential density only moved {dmin:.3}..{dmax:.3} within the schedule"
        )));
    }

    let theoretical_floor =
        g_closed_form(e.abs() + delta) - g_closed_form(e.abs() - delta) - c1 / mu - gamma;
    Ok(GapReport {
        variant: GapVariant::UpperVsLower,
        e,
        delta,
        c1,
        mu,
        gamma,
        series_forward,
        series_backward: None,
        forward_tail_max: tail_max,
        forward_tail_min: tail_min,
        backward_tail_max: None,
        observed_gap: tail_max - tail_min,
        theoretical_floor,
        density_forward,
    })
}

/// Forward-vs-backward gap on the tower: the backward-dominant value 0 is
/// mapped to `+delta` (small one-step norm `g(E - delta)`), the
/// forward-recurrent value 1 to `-delta`, with `delta = 6 C1`.
pub fn gap_demo_forward_vs_backward(
    e: f64,
    c1: f64,
    blocks: Arc<BlockDecomposition>,
    s_max: u32,
) -> Result<GapReport> {
    let delta = 6.0 * c1;
    if !(e.abs() > delta + 2.0) {
        return Err(Error::Domain(format!(
            "|E| = {} must exceed delta + 2 = {}",
            e.abs(),
            delta + 2.0
        )));
    }
    let mu = e.abs() - delta;
    let gamma = 4.0 / (mu * mu);
    let src = PotentialSource::tower_scaled(
        blocks,
        rational_from(delta),
        rational_from(-delta),
    );
    let est = exponents(e, &src, s_max)?;
    let density_forward = density_series(&src, -delta, s_max)?;
    let dmax = density_forward
        .iter()
        .map(|x| x.1)
        .fold(f64::NEG_INFINITY, f64::max);
    if dmax < 2.0 / 3.0 {
        return Err(Error::InsufficientScale(format!(
            "forward density of the recurrent value peaked at {dmax:.3} within the schedule"
        )));
    }

    let theoretical_floor =
        g_closed_form(e.abs() + delta) - g_closed_form(e.abs() - delta) - c1 / mu - gamma;
    Ok(GapReport {
        variant: GapVariant::ForwardVsBackward,
        e,
        delta,
        c1,
        mu,
        gamma,
        series_forward: est.series_plus.clone(),
        series_backward: Some(est.series_minus.clone()),
        forward_tail_max: est.lbar_plus,
        forward_tail_min: est.lunder_plus,
        backward_tail_max: Some(est.lbar_minus),
        observed_gap: est.lbar_plus - est.lbar_minus,
        theoretical_floor,
        density_forward,
    })
}

/// Randomized calibration: generate hyperbolic sequences satisfying the
/// hypotheses and report the worst slack of the product bound.
#[derive(Debug, Clone, Serialize)]
pub struct CalibrationReport {
    pub sequences: usize,
    pub mu: f64,
    pub c1: f64,
    pub min_slack: f64,
    pub violations: usize,
}

pub fn calibrate_avalanche(
    sequences: usize,
    n: usize,
    mu: f64,
    c1: f64,
    seed: u64,
) -> Result<CalibrationReport> {
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    let gamma = 0.5 * mu.ln();
    let mut min_slack = f64::INFINITY;
    let mut violations = 0usize;
    for i in 0..sequences {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        rng.set_stream(i as u64);
        // one-step style matrices with x in [mu', mu'^2] have norm >= x
        let mats: Vec<TransferMatrix> = (0..n)
            .map(|_| {
                let t: f64 = rng.gen_range(0.0..1.0);
                let x = (mu * 1.05) * (mu.powf(t)).min(1e120);
                TransferMatrix::one_step(x, 0.0)
            })
            .collect();
        let rep = avalanche_check(&mats, mu, gamma, c1)?;
        min_slack = min_slack.min(rep.slack);
        if rep.slack < 0.0 {
            violations += 1;
        }
    }
    Ok(CalibrationReport {
        sequences,
        mu,
        c1,
        min_slack,
        violations,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::lyapunov::pair_norm;

    #[test]
    fn nine_copies_of_a_hundred() {
        let mats = vec![TransferMatrix::one_step(100.0, 0.0); 9];
        let mu: f64 = 100.0;
        let gamma = 0.5 * mu.ln();
        let rep = avalanche_check(&mats, mu, gamma, 10.0).unwrap();
        // pairwise defect is |2 g(100) - g(10^4 ... )|, about 2e-4
        assert!(rep.max_defect < 3e-4, "defect {}", rep.max_defect);
        assert!(rep.slack > 0.0, "slack {}", rep.slack);
        // defect from the closed form agrees
        let d = (2.0 * g_closed_form(100.0) - pair_norm(100.0, 100.0)).abs();
        assert!((rep.max_defect - d).abs() < 1e-12);
    }

    #[test]
    fn norm_floor_gate() {
        let mut mats = vec![TransferMatrix::one_step(50.0, 0.0); 9];
        mats[4] = TransferMatrix::one_step(3.0, 0.0); // norm ~3 < mu
        let err = avalanche_check(&mats, 20.0, 1.0, 10.0).unwrap_err();
        match err {
            Error::HypothesisViolated { index, .. } => assert_eq!(index, 4),
            other => panic!("wrong error {other:?}"),
        }
    }

    #[test]
    fn cancellation_gate() {
        // alternating A and A^{-1}-like matrices cancel in pairs
        let a = TransferMatrix::one_step(40.0, 0.0);
        let inv = TransferMatrix::one_step_inverse(40.0, 0.0);
        let mats = vec![a, inv, a, inv, a, inv, a, inv, a];
        let err = avalanche_check(&mats, 30.0, 1.0, 10.0).unwrap_err();
        assert!(matches!(err, Error::HypothesisViolated { .. }));
    }

    #[test]
    fn alternating_blocks_hold_bound() {
        // alternating A(E - delta), A(E + delta) at E = 20, delta = 2
        let e = 20.0;
        let delta = 2.0;
        let mats: Vec<TransferMatrix> = (0..27)
            .map(|i| {
                let v = if i % 2 == 0 { delta } else { -delta };
                TransferMatrix::one_step(e, v)
            })
            .collect();
        let mu = e - delta;
        let gamma = 4.0 / (mu * mu);
        let rep = avalanche_check(&mats, mu, gamma, 10.0).unwrap();
        assert!(rep.slack > 0.0, "slack {}", rep.slack);
    }

    #[test]
    fn power_of_three_gate() {
        let mats = vec![TransferMatrix::one_step(50.0, 0.0); 8];
        assert!(avalanche_check(&mats, 20.0, 1.0, 10.0).is_err());
    }

    #[test]
    fn calibration_runs_clean() {
        let rep = calibrate_avalanche(50, 9, 1e3, 10.0, 1234).unwrap();
        assert_eq!(rep.violations, 0, "min slack {}", rep.min_slack);
        assert!(rep.min_slack > 0.0);
    }
}
