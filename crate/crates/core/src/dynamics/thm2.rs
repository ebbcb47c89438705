//! Oscillating-average construction over the tower base.
//!
//! Starting from the base set `Y` (the bottom level of every column) a
//! sequence `N_1 < N_2 < ...` is found by Monte Carlo search so that the
//! time average of the previous stage's indicator over `N_k` steps is small
//! for most base points. The sampled potential is 0 on `Y` and alternates
//! 0/1 on the shells in between, which drives Birkhoff averages to
//! oscillate between 0 and 1 along the `N_k`.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

use super::RotationSystem;

/// Seeded Monte Carlo settings. The seed is mandatory; estimates carry a
/// Wilson score margin at the configured z value.
#[derive(Debug, Clone, Serialize, Deserialize, PartialEq)]
pub struct MonteCarloConfig {
    pub samples: usize,
    pub seed: u64,
    /// z value for the Wilson interval (1.96 is the 95% level).
    #[serde(default = "default_z")]
    pub confidence_z: f64,
    /// Maximum number of grid points a search may test.
    #[serde(default = "default_scan_budget")]
    pub scan_budget: usize,
}

fn default_z() -> f64 {
    1.96
}

fn default_scan_budget() -> usize {
    40
}

impl MonteCarloConfig {
    pub fn new(samples: usize, seed: u64) -> Self {
        Self {
            samples,
            seed,
            confidence_z: default_z(),
            scan_budget: default_scan_budget(),
        }
    }
}

/// Upper end of the Wilson score interval for `successes` out of `n`.
pub fn wilson_upper(successes: usize, n: usize, z: f64) -> f64 {
    if n == 0 {
        return 1.0;
    }
    let nf = n as f64;
    let p = successes as f64 / nf;
    let z2 = z * z;
    let denom = 1.0 + z2 / nf;
    let center = p + z2 / (2.0 * nf);
    let half = z * (p * (1.0 - p) / nf + z2 / (4.0 * nf * nf)).sqrt();
    (center + half) / denom
}

/// Half-width of the Wilson interval at the observed fraction.
pub fn wilson_halfwidth(successes: usize, n: usize, z: f64) -> f64 {
    if n == 0 {
        return 1.0;
    }
    let up = wilson_upper(successes, n, z);
    let p = successes as f64 / n as f64;
    (up - p).max(0.0)
}

/// `min(floor(h(u)), cap)` in fast f64 arithmetic: the Monte Carlo walker
/// only ever needs heights up to the remaining window length.
pub fn height_f64_capped(u: f64, cap: u64) -> u64 {
    debug_assert!(u > 0.0 && u <= 1.0);
    let e = (u + 1.0) / u;
    if e >= 63.0 {
        return cap;
    }
    let le = e.exp2();
    if le >= 63.0 {
        return cap;
    }
    let h = le.exp2().floor();
    if h >= cap as f64 {
        cap
    } else {
        h as u64
    }
}

/// Forward walk of the tower from the base point `(u, 1)` over `n` steps,
/// accumulating the time spent at levels `<= level_cap` per column.
/// Returns the accumulated count.
pub fn time_below_level(u0: f64, alpha: f64, n: u64, level_cap: u64) -> u64 {
    let mut count = 0u64;
    let mut remaining = n;
    let mut u = u0;
    while remaining > 0 {
        let p = height_f64_capped(u, remaining).max(1);
        let len = p.min(remaining);
        count += len.min(level_cap);
        remaining -= len;
        u += alpha;
        if u >= 1.0 {
            u -= 1.0;
        }
        if u <= 0.0 {
            u = 1.0;
        }
    }
    count
}

/// Scan grid for the search over window lengths.
#[derive(Debug, Clone, Copy, Serialize, Deserialize, PartialEq, Eq)]
#[serde(rename_all = "snake_case")]
pub enum ScanGrid {
    PowersOfThree,
    PowersOfTwo,
}

impl Default for ScanGrid {
    fn default() -> Self {
        ScanGrid::PowersOfThree
    }
}

impl ScanGrid {
    fn first_above(self, m: u64) -> u64 {
        let base = match self {
            ScanGrid::PowersOfThree => 3u64,
            ScanGrid::PowersOfTwo => 2u64,
        };
        let mut n = base;
        while n <= m {
            n = n.saturating_mul(base);
        }
        n
    }

    fn next(self, n: u64) -> u64 {
        match self {
            ScanGrid::PowersOfThree => n.saturating_mul(3),
            ScanGrid::PowersOfTwo => n.saturating_mul(2),
        }
    }
}

/// Smallest grid value `N > M` such that the Monte Carlo estimate of the
/// measure of base points with `A_N(omega, indicator, T) > epsilon` stays
/// below `epsilon` with the Wilson margin included.
///
/// The indicator is the level set `m <= level_cap` (the union of the first
/// `level_cap` forward images of the base).
pub fn phi_search(
    epsilon: f64,
    level_cap: u64,
    sys: &RotationSystem,
    big_m: u64,
    mc: &MonteCarloConfig,
    grid: ScanGrid,
) -> Result<u64> {
    if !(0.0 < epsilon && epsilon < 1.0) {
        return Err(Error::Domain(format!("epsilon = {epsilon} outside (0, 1)")));
    }
    let alpha = sys.alpha().to_f64();
    let mut rng = ChaCha8Rng::seed_from_u64(mc.seed);
    let mut n = grid.first_above(big_m);
    for _ in 0..mc.scan_budget {
        let mut violations = 0usize;
        for _ in 0..mc.samples {
            let u: f64 = loop {
                let v: f64 = rng.gen_range(0.0..1.0);
                if v > 0.0 {
                    break 1.0 - v; // uniform in (0, 1], independent of fp edge cases
                }
            };
            let a = time_below_level(u, alpha, n, level_cap) as f64 / n as f64;
            if a > epsilon {
                violations += 1;
            }
        }
        if wilson_upper(violations, mc.samples, mc.confidence_z) < epsilon {
            return Ok(n);
        }
        n = grid.next(n);
    }
    Err(Error::BudgetExhausted(format!(
        "no window length passed within {} grid points (epsilon = {epsilon})",
        mc.scan_budget
    )))
}

/// The constructed stage sequence together with the base system.
#[derive(Debug, Clone)]
pub struct Thm2Construction {
    sys: RotationSystem,
    /// `N_0 = 1 < N_1 < N_2 < ...`, grid-aligned.
    n_seq: Vec<u64>,
    grid: ScanGrid,
}

impl Thm2Construction {
    pub fn n_seq(&self) -> &[u64] {
        &self.n_seq
    }

    pub fn system(&self) -> &RotationSystem {
        &self.sys
    }

    pub fn grid(&self) -> ScanGrid {
        self.grid
    }

    pub fn shells(&self) -> usize {
        self.n_seq.len() - 1
    }

    /// Shell index of a tower level `m >= 1`: the least `k` with
    /// `m - 1 < N_k`. Level 1 is the base (`shell 0`). `None` when the
    /// level lies beyond the last constructed shell.
    pub fn shell_of_level(&self, m: u64) -> Option<usize> {
        self.n_seq.iter().position(|&nk| m - 1 < nk)
    }

    /// Sampled value at a level: 0 on the base, `(1 + (-1)^k)/2` on shell k.
    pub fn value_of_level(&self, m: u64) -> Option<u8> {
        let k = self.shell_of_level(m)?;
        if k == 0 {
            Some(0)
        } else {
            Some(if k % 2 == 0 { 1 } else { 0 })
        }
    }

    /// Exact Birkhoff average of the sampled value over `[0, n)` 
    /// the base point `(u, 1)`, via per-column shell overlap counts.
    pub fn average_from_base(&self, u0: f64, n: u64) -> Result<f64> {
        let alpha = self.sys.alpha().to_f64();
        let mut ones = 0u64;
        let mut remaining = n;
        let mut u = u0;
        let last_n = *self.n_seq.last().expect("nonempty");
        while remaining > 0 {
            let p = height_f64_capped(u, remaining).max(1);
            let len = p.min(remaining);
            if len > last_n {
                return Err(Error::RangeExceeded(format!(
                    "level {len} beyond constructed shell boundary {last_n}"
                )));
            }
            ones += self.ones_within_column(len);
            remaining -= len;
            u += alpha;
            if u >= 1.0 {
                u -= 1.0;
            }
            if u <= 0.0 {
                u = 1.0;
            }
        }
        Ok(ones as f64 / n as f64)
    }

    /// Count of value-1 levels among `1..=len` of one column: the even
    /// shells contribute `min(len, N_k) - N_{k-1}` when positive.
    fn ones_within_column(&self, len: u64) -> u64 {
        let mut ones = 0u64;
        for k in (2..self.n_seq.len()).step_by(2) {
            let lo = self.n_seq[k - 1]; // shell k covers levels [N_{k-1}+1, N_k]
            let hi = self.n_seq[k];
            if len > lo {
                ones += len.min(hi) - lo;
            }
        }
        ones
    }

    /// Run-length encoding of the sampled value along the forward orbit of
    /// `(u, 1)` over `[from, from + count)` with `from >= 0`.
    pub fn runs_from_base(&self, u0: f64, from: u64, count: u64) -> Result<Vec<(u8, u64)>> {
        let alpha = self.sys.alpha().to_f64();
        let mut runs: Vec<(u8, u64)> = Vec::new();
        let mut col_start = 0u64; // orbit position of the current column base
        let mut u = u0;
        let end = from
            .checked_add(count)
            .ok_or_else(|| Error::Domain("window end overflows u64".into()))?;
        let last_n = *self.n_seq.last().expect("nonempty");
        while col_start < end {
            let p = height_f64_capped(u, end - col_start).max(1) as u64;
            // the column occupies positions [col_start, col_start + p)
            let col_end = col_start.saturating_add(p).min(end);
            if col_end > from {
                let lo_pos = from.max(col_start);
                // levels are 1-based within the column
                let mut m = lo_pos - col_start + 1;
                let m_end = col_end - col_start; // inclusive last level
                while m <= m_end {
                    let k = self.shell_of_level(m).ok_or_else(|| {
                        Error::RangeExceeded(format!(
                            "level {m} beyond constructed shell boundary {last_n}"
                        ))
                    })?;
                    let v = if k == 0 || k % 2 == 1 { 0u8 } else { 1u8 };
                    // the run extends to the end of this shell or the column
                    let shell_hi = self.n_seq[k].min(m_end);
                    let len = shell_hi - m + 1;
                    push(&mut runs, v, len);
                    m = shell_hi + 1;
                }
            }
            col_start = col_start.saturating_add(p);
            u += alpha;
            if u >= 1.0 {
                u -= 1.0;
            }
            if u <= 0.0 {
                u = 1.0;
            }
        }
        Ok(runs)
    }
}

fn push(runs: &mut Vec<(u8, u64)>, v: u8, len: u64) {
    if len == 0 {
        return;
    }
    if let Some(last) = runs.last_mut() {
        if last.0 == v {
            last.1 += len;
            return;
        }
    }
    runs.push((v, len));
}

/// Build the stage sequence `N_1 < ... < N_{k_max}` by repeated search:
/// `N_k` handles `epsilon = 2^-k` against the indicator of the previous
/// stage's union of base images.
pub fn construct_thm2_potential(
    sys: &RotationSystem,
    k_max: usize,
    mc: &MonteCarloConfig,
    grid: ScanGrid,
) -> Result<Thm2Construction> {
    if k_max < 1 {
        return Err(Error::Domain(format!("k_max = {k_max} must be >= 1")));
    }
    let mut n_seq = vec![1u64];
    for k in 1..=k_max {
        let eps = 0.5f64.powi(k as i32);
        let stage_mc = MonteCarloConfig {
            seed: mc.seed.wrapping_add(k as u64),
            ..mc.clone()
        };
        let prev = *n_seq.last().unwrap();
        let n_k = phi_search(eps, prev, sys, prev, &stage_mc, grid)?;
        n_seq.push(n_k);
    }
    Ok(Thm2Construction {
        sys: sys.clone(),
        n_seq,
        grid,
    })
}

/// Brute-force shell index by explicit backward iteration of the tower:
/// the least `k` such that some `T^{-i}` image with `0 <= i < N_k` lies in
/// the base. Test oracle for `shell_of_level`.
pub fn shell_by_backward_iteration(n_seq: &[u64], m: u64) -> Option<usize> {
    // backward from level m the first base hit is after m-1 steps
    let first_hit = m - 1;
    n_seq.iter().position(|&nk| first_hit < nk)
}
