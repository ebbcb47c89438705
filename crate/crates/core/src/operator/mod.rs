//! The discrete Schrodinger operator `(H u)_n = u_{n-1} + u_{n+1} + V(n) u_n`,
//! its one-sided finite truncations, and windowed trace moments.
//!
//! Potentials are rational-valued sequences backed by a dynamical
//! construction (tower pattern, shell construction) or synthetic data, so
//! trace identities can be checked in exact arithmetic.

pub mod eigen;

use std::sync::Arc;

use rug::{Integer, Rational};
use serde::{Deserialize, Serialize};

use crate::dynamics::thm2::Thm2Construction;
use crate::dynamics::{tower_runs, BlockDecomposition};
use crate::error::{Error, Result};

/// Which half-line window a truncation lives on: `+` is `{0, ..., N-1}`,
/// `-` is `{-N, ..., -1}`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Side {
    Plus,
    Minus,
}

impl Side {
    /// Window `[from, to]` (inclusive) for size `n`.
    pub fn window(self, n: usize) -> (i64, i64) {
        match self {
            Side::Plus => (0, n as i64 - 1),
            Side::Minus => (-(n as i64), -1),
        }
    }
}

impl std::fmt::Display for Side {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            Side::Plus => write!(f, "+"),
            Side::Minus => write!(f, "-"),
        }
    }
}

/// Origin tag of a potential source.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Provenance {
    Thm2,
    Tower,
    Synthetic,
    Constant,
}

/// One constant-value stretch of a potential.
#[derive(Debug, Clone)]
pub struct PotRun {
    pub value: f64,
    pub exact: Rational,
    pub len: u128,
}

#[derive(Debug)]
enum Kind {
    Constant {
        value: Rational,
    },
    /// Deterministic per-site draw from a finite level set.
    Seeded {
        seed: u64,
        levels: Vec<Rational>,
    },
    /// Explicit values on `[offset, offset + values.len())`.
    Window {
        offset: i64,
        values: Vec<Rational>,
    },
    /// 0/1 tower pattern along the orbit of the block-0 base point,
    /// remapped to `{v0, v1}`.
    Tower {
        blocks: Arc<BlockDecomposition>,
        v0: Rational,
        v1: Rational,
    },
    /// Shell construction along the forward orbit of a base point `(u, 1)`,
    /// remapped to `{v0, v1}`.
    Thm2 {
        construction: Arc<Thm2Construction>,
        base_u: f64,
        v0: Rational,
        v1: Rational,
    },
}

/// A bounded potential `n -> V(n)`, rational-valued, cheaply cloneable.
#[derive(Debug, Clone)]
pub struct PotentialSource {
    kind: Arc<Kind>,
    bound: f64,
}

fn rat_to_f64(r: &Rational) -> f64 {
    r.to_f64()
}

fn splitmix64(mut x: u64) -> u64 {
    x = x.wrapping_add(0x9E37_79B9_7F4A_7C15);
    let mut z = x;
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

impl PotentialSource {
    pub fn constant(value: Rational) -> Self {
        let bound = rat_to_f64(&value).abs();
        Self {
            kind: Arc::new(Kind::Constant { value }),
            bound,
        }
    }

    pub fn constant_f64(value: f64) -> Self {
        Self::constant(Rational::from_f64(value).expect("finite value"))
    }

    pub fn seeded(seed: u64, levels: Vec<Rational>) -> Result<Self> {
        if levels.is_empty() {
            return Err(Error::Domain("seeded potential needs at least one level".into()));
        }
        let bound = levels
            .iter()
            .map(|r| rat_to_f64(r).abs())
            .fold(0.0, f64::max);
        Ok(Self {
            kind: Arc::new(Kind::Seeded { seed, levels }),
            bound,
        })
    }

    pub fn window(offset: i64, values: Vec<Rational>) -> Self {
        let bound = values
            .iter()
            .map(|r| rat_to_f64(r).abs())
            .fold(0.0, f64::max);
        Self {
            kind: Arc::new(Kind::Window { offset, values }),
            bound,
        }
    }

    pub fn tower(blocks: Arc<BlockDecomposition>) -> Self {
        Self::tower_scaled(blocks, Rational::new(), Rational::from(1))
    }

    pub fn tower_scaled(blocks: Arc<BlockDecomposition>, v0: Rational, v1: Rational) -> Self {
        let bound = rat_to_f64(&v0).abs().max(rat_to_f64(&v1).abs());
        Self {
            kind: Arc::new(Kind::Tower { blocks, v0, v1 }),
            bound,
        }
    }

    pub fn thm2(construction: Arc<Thm2Construction>, base_u: f64) -> Self {
        Self::thm2_scaled(construction, base_u, Rational::new(), Rational::from(1))
    }

    pub fn thm2_scaled(
        construction: Arc<Thm2Construction>,
        base_u: f64,
        v0: Rational,
        v1: Rational,
    ) -> Self {
        let bound = rat_to_f64(&v0).abs().max(rat_to_f64(&v1).abs());
        Self {
            kind: Arc::new(Kind::Thm2 {
                construction,
                base_u,
                v0,
                v1,
            }),
            bound,
        }
    }

    pub fn provenance(&self) -> Provenance {
        match &*self.kind {
            Kind::Constant { .. } => Provenance::Constant,
            Kind::Seeded { .. } | Kind::Window { .. } => Provenance::Synthetic,
            Kind::Tower { .. } => Provenance::Tower,
            Kind::Thm2 { .. } => Provenance::Thm2,
        }
    }

    /// Supremum bound on `|V|`.
    pub fn bound(&self) -> f64 {
        self.bound
    }

    pub fn value(&self, n: i64) -> Result<f64> {
        Ok(rat_to_f64(&self.value_exact(n)?))
    }

    pub fn value_exact(&self, n: i64) -> Result<Rational> {
        match &*self.kind {
            Kind::Constant { value } => Ok(value.clone()),
            Kind::Seeded { seed, levels } => {
                let h = splitmix64(seed ^ (n as u64).wrapping_mul(0x9E37_79B9_7F4A_7C15));
                Ok(levels[(h % levels.len() as u64) as usize].clone())
            }
            Kind::Window { offset, values } => {
                let idx = n - offset;
                if idx < 0 || idx as usize >= values.len() {
                    return Err(Error::RangeExceeded(format!(
                        "site {n} outside window [{offset}, {})",
                        offset + values.len() as i64
                    )));
                }
                Ok(values[idx as usize].clone())
            }
            Kind::Tower { blocks, v0, v1 } => {
                let runs = tower_runs(blocks, n, 1)?;
                Ok(if runs[0].one { v1.clone() } else { v0.clone() })
            }
            Kind::Thm2 {
                construction,
                base_u,
                v0,
                v1,
            } => {
                if n < 0 {
                    return Err(Error::RangeExceeded(
                        "shell construction is defined along the forward orbit".into(),
                    ));
                }
                let runs = construction.runs_from_base(*base_u, n as u64, 1)?;
                Ok(if runs[0].0 == 1 { v1.clone() } else { v0.clone() })
            }
        }
    }

    /// Run-length view over `[from, from + count)`.
    pub fn runs(&self, from: i64, count: u128) -> Result<Vec<PotRun>> {
        if count == 0 {
            return Ok(Vec::new());
        }
        match &*self.kind {
            Kind::Constant { value } => Ok(vec![PotRun {
                value: rat_to_f64(value),
                exact: value.clone(),
                len: count,
            }]),
            Kind::Seeded { .. } | Kind::Window { .. } => {
                let count_i = i64::try_from(count)
                    .map_err(|_| Error::Domain("window too long for sitewise source".into()))?;
                let mut runs: Vec<PotRun> = Vec::new();
                for n in from..from + count_i {
                    let exact = self.value_exact(n)?;
                    let value = rat_to_f64(&exact);
                    match runs.last_mut() {
                        Some(last) if last.exact == exact => last.len += 1,
                        _ => runs.push(PotRun {
                            value,
                            exact,
                            len: 1,
                        }),
                    }
                }
                Ok(runs)
            }
            Kind::Tower { blocks, v0, v1 } => {
                let raw = tower_runs(blocks, from, count)?;
                Ok(raw
                    .into_iter()
                    .map(|r| {
                        let exact = if r.one { v1.clone() } else { v0.clone() };
                        PotRun {
                            value: rat_to_f64(&exact),
                            exact,
                            len: r.len,
                        }
                    })
                    .collect())
            }
            Kind::Thm2 {
                construction,
                base_u,
                v0,
                v1,
            } => {
                if from < 0 {
                    return Err(Error::RangeExceeded(
                        "shell construction is defined along the forward orbit".into(),
                    ));
                }
                let count_u = u64::try_from(count)
                    .map_err(|_| Error::Domain("window too long".into()))?;
                let raw = construction.runs_from_base(*base_u, from as u64, count_u)?;
                Ok(raw
                    .into_iter()
                    .map(|(v, len)| {
                        let exact = if v == 1 { v1.clone() } else { v0.clone() };
                        PotRun {
                            value: rat_to_f64(&exact),
                            exact,
                            len: len as u128,
                        }
                    })
                    .collect())
            }
        }
    }
}

/// Potential values on the inclusive window `[from, to]`.
pub fn potential_window(src: &PotentialSource, from: i64, to: i64) -> Result<Vec<f64>> {
    Ok(potential_window_exact(src, from, to)?
        .iter()
        .map(rat_to_f64)
        .collect())
}

pub fn potential_window_exact(
    src: &PotentialSource,
    from: i64,
    to: i64,
) -> Result<Vec<Rational>> {
    if from > to {
        return Err(Error::Domain(format!("window [{from}, {to}] is empty")));
    }
    let count = (to - from + 1) as u128;
    let runs = src.runs(from, count)?;
    let mut out = Vec::with_capacity(count as usize);
    for r in runs {
        for _ in 0..r.len {
            out.push(r.exact.clone());
        }
    }
    debug_assert_eq!(out.len() as u128, count);
    Ok(out)
}

/// Finite restriction of the operator to a one-sided window: diagonal is
/// the potential, off-diagonals are 1.
#[derive(Debug, Clone)]
pub struct TridiagonalTruncation {
    pub side: Side,
    pub n: usize,
    pub diag: Vec<f64>,
    pub diag_exact: Vec<Rational>,
    pub bound: f64,
}

impl TridiagonalTruncation {
    /// Spectrum bound `[-2 - |V|, 2 + |V|]`.
    pub fn spectral_bound(&self) -> f64 {
        2.0 + self.bound
    }
}

/// Restrict the operator to the window of size `n` on the given side.
pub fn truncate(src: &PotentialSource, n: usize, side: Side) -> Result<TridiagonalTruncation> {
    if n == 0 {
        return Err(Error::Domain("truncation size must be >= 1".into()));
    }
    let (from, to) = side.window(n);
    let diag_exact = potential_window_exact(src, from, to)?;
    let diag: Vec<f64> = diag_exact.iter().map(rat_to_f64).collect();
    Ok(TridiagonalTruncation {
        side,
        n,
        diag,
        diag_exact,
        bound: src.bound(),
    })
}

/// All eigenvalues of the truncation, ascending, each within `tol`.
pub fn eigenvalues(tr: &TridiagonalTruncation, tol: f64) -> Result<Vec<f64>> {
    let off = vec![1.0f64; tr.n.saturating_sub(1)];
    eigen::eigenvalues_all(&tr.diag, &off, tol)
}

/// `<delta_c, H^m delta_c>` where `v` covers offsets `[-m, m]` around the
/// center site (index `m` in `v`).
fn diagonal_moment_exact(v: &[Rational], m: usize) -> Rational {
    let width = 2 * m + 1;
    debug_assert_eq!(v.len(), width);
    let mut cur = vec![Rational::new(); width];
    cur[m] = Rational::from(1);
    for _ in 0..m {
        let mut next = vec![Rational::new(); width];
        for i in 0..width {
            if cur[i] == 0 {
                continue;
            }
            if i > 0 {
                next[i - 1] += &cur[i];
            }
            if i + 1 < width {
                next[i + 1] += &cur[i];
            }
            let t = Rational::from(&cur[i] * &v[i]);
            next[i] += t;
        }
        cur = next;
    }
    cur[m].clone()
}

/// Same recursion with Dirichlet cutoff: sites outside `[lo, hi]`
/// (absolute indices) are projected away.
fn diagonal_moment_truncated_exact(
    v: &[Rational],
    m: usize,
    center_abs: i64,
    lo: i64,
    hi: i64,
) -> Rational {
    let width = 2 * m + 1;
    debug_assert_eq!(v.len(), width);
    let mut cur = vec![Rational::new(); width];
    cur[m] = Rational::from(1);
    for _ in 0..m {
        let mut next = vec![Rational::new(); width];
        for i in 0..width {
            if cur[i] == 0 {
                continue;
            }
            let abs = center_abs + i as i64 - m as i64;
            if abs < lo || abs > hi {
                continue;
            }
            if i > 0 {
                next[i - 1] += &cur[i];
            }
            if i + 1 < width {
                next[i + 1] += &cur[i];
            }
            let t = Rational::from(&cur[i] * &v[i]);
            next[i] += t;
        }
        // project away out-of-window amplitudes
        for i in 0..width {
            let abs = center_abs + i as i64 - m as i64;
            if abs < lo || abs > hi {
                next[i] = Rational::new();
            }
        }
        cur = next;
    }
    cur[m].clone()
}

/// `tr(P_{N,side} H^m P*)`: the window trace of the full operator's m-th
/// power, exact in rational arithmetic.
pub fn trace_moment_exact(
    src: &PotentialSource,
    n: usize,
    side: Side,
    m: usize,
) -> Result<Rational> {
    let (lo, hi) = side.window(n);
    let margin = m as i64;
    let values = potential_window_exact(src, lo - margin, hi + margin)?;
    let mut acc = Rational::new();
    for site in lo..=hi {
        // slot of `site - m` inside `values` is `site - lo`
        let start = (site - lo) as usize;
        let centered = &values[start..start + 2 * m + 1];
        acc += diagonal_moment_exact(centered, m);
    }
    Ok(acc)
}

/// `tr(P H^m P*)` as f64.
pub fn trace_moment(src: &PotentialSource, n: usize, side: Side, m: usize) -> Result<f64> {
    Ok(rat_to_f64(&trace_moment_exact(src, n, side, m)?))
}

/// `tr((P H P*)^m)`: trace of the m-th power of the truncated matrix,
/// exact in rational arithmetic.
pub fn truncated_trace_moment_exact(
    src: &PotentialSource,
    n: usize,
    side: Side,
    m: usize,
) -> Result<Rational> {
    let (lo, hi) = side.window(n);
    let margin = m as i64;
    let values = potential_window_exact(src, lo - margin, hi + margin)?;
    let mut acc = Rational::new();
    for site in lo..=hi {
        let start = (site - lo) as usize;
        let centered = &values[start..start + 2 * m + 1];
        acc += diagonal_moment_truncated_exact(centered, m, site, lo, hi);
    }
    Ok(acc)
}

pub fn truncated_trace_moment(
    src: &PotentialSource,
    n: usize,
    side: Side,
    m: usize,
) -> Result<f64> {
    Ok(rat_to_f64(&truncated_trace_moment_exact(src, n, side, m)?))
}

/// Helper for tests and probes: integer-valued potentials from a u64 seed.
pub fn seeded_rational_levels(seed: u64, count: usize, denom: u32) -> Vec<Rational> {
    (0..count)
        .map(|i| {
            let h = splitmix64(seed.wrapping_add(i as u64 * 0x9E37));
            let num = (h % (2 * denom as u64 + 1)) as i64 - denom as i64;
            Rational::from((Integer::from(num), Integer::from(denom)))
        })
        .collect()
}
