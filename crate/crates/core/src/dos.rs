//! Density-of-states notions for the operator family: ergodic space
//! averages over finite-measure regions, thermodynamic truncations (window
//! traces of the full operator versus spectra of truncated matrices), the
//! non-convergent counterexample families, and the almost-sure-spectrum
//! probe.

use std::cmp::Ordering;
use std::sync::Arc;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rug::{Integer, Rational};
use serde::Serialize;

use crate::birkhoff::birkhoff_forward_from;
use crate::dynamics::thm2::{height_f64_capped, MonteCarloConfig};
use crate::dynamics::RotationSystem;
use crate::error::{Error, Result};
use crate::operator::{
    eigenvalues, trace_moment_exact, truncate, truncated_trace_moment_exact, PotentialSource,
    Side,
};

/// Which density-of-states object an estimate describes.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum DosKind {
    /// Space average of `<delta_0, g(H) delta_0>` over a finite region.
    Spatial,
    /// Window trace of functions of the full operator.
    Truncation,
    /// Spectral measure of the truncated matrix.
    TruncationTilde,
}

#[derive(Debug, Clone, Serialize)]
pub struct Histogram {
    pub edges: Vec<f64>,
    pub masses: Vec<f64>,
}

impl Histogram {
    pub fn total_mass(&self) -> f64 {
        self.masses.iter().sum()
    }
}

/// Moment data (and optionally a histogram) for one density-of-states
/// object; degree 0 is always 1.
#[derive(Debug, Clone, Serialize)]
pub struct MeasureEstimate {
    pub kind: DosKind,
    /// Moments of degrees `0..=max_degree`.
    pub moments: Vec<f64>,
    #[serde(skip)]
    pub moments_exact: Option<Vec<Rational>>,
    pub histogram: Option<Histogram>,
    pub normalization: f64,
    /// Monte Carlo standard errors when the estimate is sampled.
    pub stderr: Option<Vec<f64>>,
}

/// Finite-measure region of the tower: all points with level at most
/// `max_level`.
#[derive(Debug, Clone, Copy, Serialize)]
pub struct SpatialRegion {
    pub max_level: u64,
}

/// Sampled spatial estimate together with the region measure estimate.
#[derive(Debug, Clone, Serialize)]
pub struct SpatialEstimate {
    pub estimate: MeasureEstimate,
    /// Monte Carlo estimate of the region measure.
    pub mu_region: f64,
    pub samples: usize,
}

/// Potential value at a level of the column over `u`: 1 exactly when the
/// level is at most `floor(sqrt(h(u)))`. Fast f64 path for sampling.
fn tower_value_at(u: f64, level: u64) -> f64 {
    let e = (u + 1.0) / u;
    if e >= 63.0 {
        // sqrt height is large; any sampled level is below it
        return 1.0;
    }
    let le = e.exp2();
    if le >= 126.0 {
        return 1.0;
    }
    let q = (le / 2.0).exp2().floor();
    if (level as f64) <= q {
        1.0
    } else {
        0.0
    }
}

/// Walk `steps` sites of the potential around the tower point `(u, m)`
/// and return the window `V(-half..=half)` in f64.
fn sample_window(sys_alpha: f64, u: f64, m: u64, half: usize) -> Vec<f64> {
    let width = 2 * half + 1;
    let mut out = vec![0.0f64; width];
    // current column height, capped well past anything we walk
    let cap = m + half as u64 + 2;
    let p = height_f64_capped(u, cap.max(1 << 40));
    // forward from the center
    let mut lev = m;
    let mut cu = u;
    let mut cp = p;
    for off in 0..=half {
        if off > 0 {
            lev += 1;
            if lev > cp {
                // climb into the next column
                cu += sys_alpha;
                if cu >= 1.0 {
                    cu -= 1.0;
                }
                if cu <= 0.0 {
                    cu = 1.0;
                }
                cp = height_f64_capped(cu, 1 << 40);
                lev = 1;
            }
        }
        out[half + off] = tower_value_at(cu, lev);
    }
    // backward from the center
    let mut lev_b = m;
    let mut ub = u;
    for off in 1..=half {
        if lev_b > 1 {
            lev_b -= 1;
            out[half - off] = tower_value_at(ub, lev_b);
        } else {
            // drop onto the top of the previous column: its top region is
            // all zeros (the ones sit within sqrt(h) of the bottom)
            ub -= sys_alpha;
            if ub <= 0.0 {
                ub += 1.0;
            }
            // represent the level abstractly; tops of columns are zeros
            // for any walk shorter than p - sqrt(p) >= 12 sites
            lev_b = 0;
            out[half - off] = 0.0;
        }
        if lev_b == 0 {
            out[half - off] = 0.0;
        }
    }
    out
}

/// `<delta_0, H^j delta_0>` for `j = 0..=degree` from a value window
/// covering offsets `[-half, half]`.
fn diagonal_moments_f64(window: &[f64], half: usize, degree: usize) -> Vec<f64> {
    let width = window.len();
    let mut cur = vec![0.0f64; width];
    cur[half] = 1.0;
    let mut out = Vec::with_capacity(degree + 1);
    out.push(1.0);
    for _ in 1..=degree {
        let mut next = vec![0.0f64; width];
        for i in 0..width {
            if cur[i] == 0.0 {
                continue;
            }
            if i > 0 {
                next[i - 1] += cur[i];
            }
            if i + 1 < width {
                next[i + 1] += cur[i];
            }
            next[i] += window[i] * cur[i];
        }
        cur = next;
        out.push(cur[half]);
    }
    out
}

/// Monte Carlo moments of the spatial density of states over the sampled
/// region: `int E^j dk^F = (1/mu(F)) int_F <delta_0, H^j delta_0> dmu`.
pub fn dos_spatial(
    sys: &RotationSystem,
    region: SpatialRegion,
    degree: usize,
    mc: &MonteCarloConfig,
) -> Result<SpatialEstimate> {
    if region.max_level == 0 {
        return Err(Error::Domain("region level cap must be >= 1".into()));
    }
    if mc.samples == 0 {
        return Err(Error::BudgetExhausted("no samples configured".into()));
    }
    let alpha = sys.alpha().to_f64();
    let l = region.max_level;
    let half = degree.div_ceil(2);
    let mut rng = ChaCha8Rng::seed_from_u64(mc.seed);
    let mut sums = vec![0.0f64; degree + 1];
    let mut sums2 = vec![0.0f64; degree + 1];
    let mut accepted = 0usize;
    let mut proposals = 0usize;
    while accepted < mc.samples {
        proposals += 1;
        if proposals > mc.samples.saturating_mul(1000) {
            return Err(Error::BudgetExhausted(
                "acceptance rate too low while sampling the region".into(),
            ));
        }
        let u: f64 = 1.0 - rng.gen_range(0.0..1.0);
        let cap = height_f64_capped(u, l);
        // accept with probability min(h, L)/L
        let accept: f64 = rng.gen_range(0.0..1.0);
        if accept >= cap as f64 / l as f64 {
            continue;
        }
        accepted += 1;
        let m = rng.gen_range(1..=cap);
        let window = sample_window(alpha, u, m, half.max(1));
        let moments = diagonal_moments_f64(&window, half.max(1), degree);
        for (j, v) in moments.iter().enumerate() {
            sums[j] += v;
            sums2[j] += v * v;
        }
    }
    let n = mc.samples as f64;
    let moments: Vec<f64> = sums.iter().map(|s| s / n).collect();
    let stderr: Vec<f64> = sums2
        .iter()
        .zip(moments.iter())
        .map(|(s2, m)| ((s2 / n - m * m).max(0.0) / n).sqrt())
        .collect();
    let mu_region = l as f64 * accepted as f64 / proposals as f64;
    Ok(SpatialEstimate {
        estimate: MeasureEstimate {
            kind: DosKind::Spatial,
            moments,
            moments_exact: None,
            histogram: None,
            normalization: 1.0,
            stderr: Some(stderr),
        },
        mu_region,
        samples: mc.samples,
    })
}

/// Which truncation functional to realize.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum TruncationVariant {
    /// `(1/N) tr(P g(H) P*)`: moment functional of the full operator.
    Dk,
    /// `(1/N) tr(g(P H P*))`: spectral measure of the truncated matrix.
    DkTilde,
}

/// Moments (exact, then f64) of one truncation object; for the tilde
/// variant, also the eigenvalue histogram.
pub fn dos_truncation(
    src: &PotentialSource,
    n: usize,
    side: Side,
    variant: TruncationVariant,
    max_degree: usize,
) -> Result<MeasureEstimate> {
    if n == 0 {
        return Err(Error::Domain("N must be >= 1".into()));
    }
    let nf = Rational::from(n as u64);
    let mut moments_exact = Vec::with_capacity(max_degree + 1);
    for m in 0..=max_degree {
        let tr = match variant {
            TruncationVariant::Dk => trace_moment_exact(src, n, side, m)?,
            TruncationVariant::DkTilde => truncated_trace_moment_exact(src, n, side, m)?,
        };
        moments_exact.push(tr / nf.clone());
    }
    let moments: Vec<f64> = moments_exact.iter().map(|r| r.to_f64()).collect();

    let histogram = match variant {
        TruncationVariant::Dk => None,
        TruncationVariant::DkTilde => {
            let tr = truncate(src, n, side)?;
            let evs = eigenvalues(&tr, 1e-10 * tr.spectral_bound().max(1.0))?;
            let bound = tr.spectral_bound() + 1e-6;
            let bins = 64.min(n.max(8));
            let mut edges = Vec::with_capacity(bins + 1);
            for i in 0..=bins {
                edges.push(-bound + 2.0 * bound * i as f64 / bins as f64);
            }
            let mut masses = vec![0.0f64; bins];
            for &e in &evs {
                let mut idx = ((e + bound) / (2.0 * bound) * bins as f64) as usize;
                if idx >= bins {
                    idx = bins - 1;
                }
                masses[idx] += 1.0 / n as f64;
            }
            Some(Histogram { edges, masses })
        }
    };

    Ok(MeasureEstimate {
        kind: match variant {
            TruncationVariant::Dk => DosKind::Truncation,
            TruncationVariant::DkTilde => DosKind::TruncationTilde,
        },
        moments,
        moments_exact: Some(moments_exact),
        histogram,
        normalization: 1.0,
        stderr: None,
    })
}

/// One row of the moment-gap series.
#[derive(Debug, Clone, Serialize)]
pub struct GapRow {
    pub n: usize,
    pub dk_moment: f64,
    pub dktilde_moment: f64,
    pub gap: f64,
    pub n_gap: f64,
}

/// `|int E^p dk - int E^p dktilde|` across a window schedule, with the
/// `N * gap` products that exhibit the `O(1/N)` decay.
pub fn moment_gap(
    src: &PotentialSource,
    schedule: &[usize],
    degree: usize,
    side: Side,
) -> Result<Vec<GapRow>> {
    let mut rows = Vec::with_capacity(schedule.len());
    for &n in schedule {
        if n == 0 {
            return Err(Error::Domain("window of size 0".into()));
        }
        let nf = Rational::from(n as u64);
        let full = trace_moment_exact(src, n, side, degree)? / nf.clone();
        let cut = truncated_trace_moment_exact(src, n, side, degree)? / nf;
        let gap_exact = Rational::from(&full - &cut).abs();
        let gap = gap_exact.to_f64();
        rows.push(GapRow {
            n,
            dk_moment: full.to_f64(),
            dktilde_moment: cut.to_f64(),
            gap,
            n_gap: gap * n as f64,
        });
    }
    Ok(rows)
}

/// Finite-scale running tails of `int g dk_{omega, N}` along a schedule.
#[derive(Debug, Clone, Serialize)]
pub struct LimitScan {
    pub series: Vec<(u64, f64)>,
    pub liminf_est: f64,
    pub limsup_est: f64,
}

/// Evaluate `int g dk^{side}_{omega, N}` for a polynomial `g` along an
/// increasing schedule; the tail min/max over the last half stand in for
/// the liminf/limsup.
pub fn dos_limit_scan(
    src: &PotentialSource,
    poly: &[f64],
    schedule: &[u64],
    side: Side,
) -> Result<LimitScan> {
    if schedule.windows(2).any(|w| w[1] <= w[0]) {
        return Err(Error::Domain("schedule must be strictly increasing".into()));
    }
    if poly.is_empty() {
        return Err(Error::Domain("empty polynomial".into()));
    }
    let mut series = Vec::with_capacity(schedule.len());
    for &n in schedule {
        let mut value = 0.0f64;
        for (p, &c) in poly.iter().enumerate() {
            if c == 0.0 {
                continue;
            }
            let moment = if p == 0 {
                1.0
            } else if p == 1 {
                // first moment is the plain Birkhoff average over the window
                let (from, _) = side.window(n as usize);
                birkhoff_forward_from(src, from, n)?.to_f64()
            } else {
                let nf = Rational::from(n);
                (trace_moment_exact(src, n as usize, side, p)? / nf).to_f64()
            };
            value += c * moment;
        }
        series.push((n, value));
    }
    let len = series.len();
    let tail = &series[len / 2..];
    let liminf_est = tail.iter().map(|x| x.1).fold(f64::INFINITY, f64::min);
    let limsup_est = tail.iter().map(|x| x.1).fold(f64::NEG_INFINITY, f64::max);
    Ok(LimitScan {
        series,
        liminf_est,
        limsup_est,
    })
}

/// Exhaustion family with designated shell masses and 0/1 shell values:
/// the first moments of the cutoff measures are the weighted Cesaro
/// averages `s_l = (a_1 + ... + a_l) / mu(F_l)`.
#[derive(Debug, Clone)]
pub struct SpatialFamily {
    /// `mu(F_l)`, strictly increasing.
    pub mu_cum: Vec<Rational>,
    /// Shell coefficients `a_l`.
    pub shell_values: Vec<Rational>,
    /// Densities `a_j / mu(F_j \ F_{j-1})` of the induced sampling function.
    pub densities: Vec<Rational>,
    /// First moments `s_l`.
    pub first_moments: Vec<Rational>,
}

pub fn build_spatial_counterexample(
    shell_values: &[Rational],
    shell_measures: &[Rational],
) -> Result<SpatialFamily> {
    if shell_values.len() != shell_measures.len() {
        return Err(Error::Domain("values and measures differ in count".into()));
    }
    if shell_measures
        .iter()
        .any(|m| m.cmp0() != Ordering::Greater)
    {
        return Err(Error::MonotonicityError(
            "shell measures must be strictly positive".into(),
        ));
    }
    let mut mu_cum = Vec::with_capacity(shell_measures.len());
    let mut densities = Vec::with_capacity(shell_measures.len());
    let mut first_moments = Vec::with_capacity(shell_measures.len());
    let mut total = Rational::new();
    let mut weighted = Rational::new();
    for (a, m) in shell_values.iter().zip(shell_measures.iter()) {
        total += m;
        weighted += a;
        mu_cum.push(total.clone());
        densities.push(Rational::from(a / m));
        first_moments.push(Rational::from(&weighted / &total));
    }
    Ok(SpatialFamily {
        mu_cum,
        shell_values: shell_values.to_vec(),
        densities,
        first_moments,
    })
}

/// Eigenvalue sets of the two-sided truncations for several sources, and
/// the pairwise Hausdorff distances of their fattened unions.
#[derive(Debug, Clone, Serialize)]
pub struct SpectrumProbe {
    /// Per-source sorted eigenvalues (union over both sides).
    pub eigensets: Vec<Vec<f64>>,
    /// `(i, j, hausdorff distance of the fattened sets)`.
    pub pairwise: Vec<(usize, usize, f64)>,
    pub fattening: f64,
}

/// Hausdorff distance between unions of intervals `[x - eps, x + eps]`.
pub fn hausdorff_fattened(a: &[f64], b: &[f64], eps: f64) -> f64 {
    fn directed(a: &[f64], b: &[f64], eps: f64) -> f64 {
        // candidates: endpoints of a's intervals
        let mut worst = 0.0f64;
        for &x in a {
            for cand in [x - eps, x + eps] {
                let d = b
                    .iter()
                    .map(|&y| (cand - y).abs())
                    .fold(f64::INFINITY, f64::min);
                worst = worst.max((d - eps).max(0.0));
            }
        }
        worst
    }
    if a.is_empty() || b.is_empty() {
        return if a.is_empty() && b.is_empty() {
            0.0
        } else {
            f64::INFINITY
        };
    }
    directed(a, b, eps).max(directed(b, a, eps))
}

pub fn spectrum_probe(
    sources: &[PotentialSource],
    n: usize,
    tol: f64,
    fattening: f64,
) -> Result<SpectrumProbe> {
    if sources.len() < 2 {
        return Err(Error::Domain("probe needs at least two sources".into()));
    }
    let mut eigensets = Vec::with_capacity(sources.len());
    for src in sources {
        let mut evs = Vec::new();
        for side in [Side::Plus, Side::Minus] {
            let tr = truncate(src, n, side)?;
            evs.extend(eigenvalues(&tr, tol)?);
        }
        evs.sort_by(|a, b| a.partial_cmp(b).unwrap());
        eigensets.push(evs);
    }
    let mut pairwise = Vec::new();
    for i in 0..eigensets.len() {
        for j in i + 1..eigensets.len() {
            pairwise.push((
                i,
                j,
                hausdorff_fattened(&eigensets[i], &eigensets[j], fattening),
            ));
        }
    }
    Ok(SpectrumProbe {
        eigensets,
        pairwise,
        fattening,
    })
}

/// Doubling-block 0/1 sequence values as rationals (shared by the Cesaro
/// and spatial counterexamples).
pub fn alternating_doubling(depth: usize) -> (Vec<Rational>, Vec<Rational>) {
    let values: Vec<Rational> = (0..depth)
        .map(|i| Rational::from(if i % 2 == 0 { 1 } else { 0 }))
        .collect();
    let measures: Vec<Rational> = (0..depth)
        .map(|i| Rational::from(Integer::from(1u64) << i as u32))
        .collect();
    (values, measures)
}
