//! Birkhoff averages along tower orbits: exact block-boundary formulas for
//! the forward witnesses `A_{t_n + q_n}`, the backward averages `a_{t'_k}`
//! with their Cauchy-Schwarz certificates, interior envelope checks, the
//! divergent Cesaro sequence, and Monte Carlo decay diagnostics.

use std::cmp::Ordering;

use rug::float::Round;
use rug::{Float, Integer, Rational};

use crate::dynamics::thm2::{time_below_level, MonteCarloConfig};
use crate::dynamics::{BlockDecomposition, RotationSystem};
use crate::error::{Error, Result};
use crate::numerics::{
    big_ratio, magnitude_sum, FloatInterval, HeightValue, RatioInterval,
};
use crate::operator::PotentialSource;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Direction {
    Forward,
    Backward,
}

impl std::fmt::Display for Direction {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            Direction::Forward => write!(f, "forward"),
            Direction::Backward => write!(f, "backward"),
        }
    }
}

/// One certified average in a series.
#[derive(Debug, Clone)]
pub struct SeriesEntry {
    pub index: HeightValue,
    pub value: RatioInterval,
    pub tag: String,
}

/// A tagged sequence of certified averages.
#[derive(Debug, Clone)]
pub struct AverageSeries {
    pub direction: Direction,
    pub entries: Vec<SeriesEntry>,
}

/// Exact Birkhoff average of the potential over `[from, from + n)`.
pub fn birkhoff_forward_from(src: &PotentialSource, from: i64, n: u64) -> Result<Rational> {
    if n == 0 {
        return Err(Error::Domain("average over an empty window".into()));
    }
    let runs = src.runs(from, n as u128)?;
    let mut sum = Rational::new();
    for r in &runs {
        sum += Rational::from(&r.exact * Rational::from(Integer::from(r.len as u64)));
    }
    Ok(sum / Rational::from(n))
}

/// Exact Birkhoff average from the orbit origin.
pub fn birkhoff_forward(src: &PotentialSource, n: u64) -> Result<Rational> {
    birkhoff_forward_from(src, 0, n)
}

/// The forward witness at a minima index `n`: the exact (or certified)
/// value of `A_{t_n + q_n}` together with the vanishing ratio `t_n / q_n`.
#[derive(Debug, Clone)]
pub struct ForwardWitness {
    pub n: i64,
    /// `t_n + q_n`.
    pub index: HeightValue,
    /// `A_{t_n + q_n} = (q_0 + ... + q_{n-1} + q_n) / (t_n + q_n)`.
    pub average: RatioInterval,
    /// `t_n / q_n`.
    pub tn_over_qn: RatioInterval,
    /// `q_n / (t_n + q_n) = 1 / (1 + t_n/q_n)`, a certified lower bound.
    pub lower_bound: RatioInterval,
}

/// Verify `n` is a minima index: `beta_n < beta_k` for all `0 <= k < n`.
fn check_in_s(blocks: &BlockDecomposition, n: i64) -> Result<()> {
    if n < 2 {
        return Err(Error::NotInS(n));
    }
    let beta_n = blocks.beta(n)?;
    for k in 0..n {
        if blocks.beta(k)? <= beta_n {
            return Err(Error::NotInS(n));
        }
    }
    Ok(())
}

/// Block-boundary average `A_{t_n + q_n}` for `n` in the minima set. The
/// orbit starts at the base of block 0.
pub fn block_average_forward(blocks: &BlockDecomposition, n: i64) -> Result<ForwardWitness> {
    check_in_s(blocks, n)?;
    let mut nums: Vec<HeightValue> = Vec::with_capacity(n as usize + 1);
    let mut dens: Vec<HeightValue> = Vec::with_capacity(n as usize + 1);
    for k in 0..n {
        nums.push(blocks.q(k)?.clone());
        dens.push(blocks.p(k)?.clone());
    }
    let q_n = blocks.q(n)?.clone();
    nums.push(q_n.clone());
    let p_list = dens.clone();
    dens.push(q_n.clone());

    let average = big_ratio(&nums, &dens)?;
    let tn_over_qn = big_ratio(&p_list, &[q_n.clone()])?;
    let lower_bound = big_ratio(&[q_n], &dens)?;
    let index = magnitude_sum(dens.iter());

    Ok(ForwardWitness {
        n,
        index,
        average,
        tn_over_qn,
        lower_bound,
    })
}

/// Backward boundary average `a_{t'_k}` with its Cauchy-Schwarz data.
#[derive(Debug, Clone)]
pub struct BackwardPoint {
    pub k: i64,
    /// `t'_k = p'_1 + ... + p'_k`.
    pub index: HeightValue,
    /// `a_{t'_k} = (q'_1 + ... + q'_k) / (p'_1 + ... + p'_k)`.
    pub average: RatioInterval,
    /// `sqrt(k / sum p'_j)`.
    pub cs_bound: RatioInterval,
    /// Certified `(a_{t'_k})^2 * sum p'_j <= k`.
    pub certificate_ok: bool,
}

pub fn block_average_backward(blocks: &BlockDecomposition, k: i64) -> Result<BackwardPoint> {
    if k < 1 {
        return Err(Error::Domain(format!("k = {k} must be >= 1")));
    }
    let mut nums = Vec::with_capacity(k as usize);
    let mut dens = Vec::with_capacity(k as usize);
    for j in 1..=k {
        nums.push(blocks.q_primed(j)?.clone());
        dens.push(blocks.p_primed(j)?.clone());
    }
    let average = big_ratio(&nums, &dens)?;
    let index = magnitude_sum(dens.iter());

    let prec = 192;
    let log_sum_p = index
        .log2_interval(prec)
        .expect("positive denominator sum");
    let log_k = FloatInterval::from_u64(prec, k as u64).log2(prec);
    let log_bound = log_k.sub(&log_sum_p, prec).halve();
    let cs_bound = ratio_from_log2(log_bound, prec);

    // certificate: 2 log2(a_hi) + log2((sum p)_hi) <= log2 k
    let certificate_ok = match &average.log2 {
        None => true, // a = 0
        Some(la) => {
            let (lhs, _) = Float::with_val_round(
                prec,
                Float::with_val(prec, la.hi() + la.hi()) + log_sum_p.hi(),
                Round::Up,
            );
            lhs <= *log_k.lo()
        }
    };

    Ok(BackwardPoint {
        k,
        index,
        average,
        cs_bound,
        certificate_ok,
    })
}

/// Wrap a certified `log2` enclosure as a ratio interval.
pub fn ratio_from_log2(log2: FloatInterval, prec: u32) -> RatioInterval {
    let value = log2.exp2(prec);
    let width = log2.width(64).to_f64_round(Round::Up);
    RatioInterval {
        value,
        log2: Some(log2),
        exact: None,
        rel_width: width * std::f64::consts::LN_2,
    }
}

/// Interior backward averages within block `k`: probes of `a_n` for
/// `n` in `(t'_{k-1}, t'_k]` against the envelope and the fall/rise
/// pattern around the minimum at `t'_k - q'_k`.
#[derive(Debug, Clone)]
pub struct EnvelopeReport {
    pub k: i64,
    /// Sampled `(n, a_n)` pairs, ascending in `n`.
    pub probes: Vec<(Integer, Rational)>,
    pub envelope_ok: bool,
    pub pattern_ok: bool,
    /// `t'_k - q'_k`, the interior minimum position.
    pub min_position: Integer,
}

/// Exact count of ones among backward positions `1..=n` (`n >= 0`); block
/// heights `1..=k_hint` must be exact.
fn backward_ones_upto(blocks: &BlockDecomposition, n: &Integer) -> Result<Rational> {
    let mut ones = Integer::new();
    let mut j = 1i64;
    loop {
        let t_prev = primed_t_exact(blocks, j - 1)?;
        let t_j = primed_t_exact(blocks, j)?;
        if *n <= t_prev {
            break;
        }
        let q_j = blocks
            .q_primed(j)?
            .as_exact()
            .ok_or(Error::InexactHeights(-j))?
            .clone();
        if *n >= t_j {
            ones += &q_j;
        } else {
            // partial block: ones occupy (t_j - q_j, t_j]
            let ones_start = Integer::from(&t_j - &q_j);
            if *n > ones_start {
                ones += Integer::from(n - &ones_start);
            }
            break;
        }
        j += 1;
    }
    Ok(Rational::from(ones))
}

fn primed_t_exact(blocks: &BlockDecomposition, k: i64) -> Result<Integer> {
    if k == 0 {
        return Ok(Integer::new());
    }
    let t = blocks.t_primed(k)?;
    t.as_exact().ok_or(Error::InexactHeights(-k))
}

/// Exact `a_n` by direct summation of the backward pattern.
pub fn backward_average_at(blocks: &BlockDecomposition, n: &Integer) -> Result<Rational> {
    if n.cmp0() != Ordering::Greater {
        return Err(Error::Domain("backward average needs n >= 1".into()));
    }
    let ones = backward_ones_upto(blocks, n)?;
    Ok(ones / Rational::from(n.clone()))
}

pub fn backward_envelope_check(
    blocks: &BlockDecomposition,
    k: i64,
    probes: usize,
) -> Result<EnvelopeReport> {
    if k < 2 {
        return Err(Error::Domain(format!("k = {k} must be >= 2")));
    }
    let t_prev = primed_t_exact(blocks, k - 1)?;
    let t_k = primed_t_exact(blocks, k)?;
    let q_k = blocks
        .q_primed(k)?
        .as_exact()
        .ok_or(Error::InexactHeights(-k))?
        .clone();
    let min_position = Integer::from(&t_k - &q_k);

    // probe positions: endpoints, run boundary, and a geometric ladder of
    // offsets into the block
    let mut positions: Vec<Integer> = vec![
        Integer::from(&t_prev + 1u32),
        min_position.clone(),
        t_k.clone(),
    ];
    let span = Integer::from(&t_k - &t_prev);
    let span_f = span.to_f64();
    let want = probes.max(4);
    for i in 1..want {
        let x = (span_f.max(2.0)).powf(i as f64 / want as f64);
        let off = Integer::from_f64(x.floor()).unwrap_or_else(|| Integer::from(1));
        let pos = Integer::from(&t_prev + &off);
        if pos > t_prev && pos <= t_k {
            positions.push(pos);
        }
    }
    positions.sort();
    positions.dedup();

    let mut samples: Vec<(Integer, Rational)> = Vec::with_capacity(positions.len());
    for p in positions {
        let a = backward_average_at(blocks, &p)?;
        samples.push((p, a));
    }

    // envelope: a_n <= max(a_{t'_{k-1}}, a_{t'_k})
    let a_prev = backward_average_at(blocks, &t_prev)?;
    let a_end = backward_average_at(blocks, &t_k)?;
    let cap = a_prev.clone().max(a_end.clone());
    let envelope_ok = samples.iter().all(|(_, a)| *a <= cap);

    // pattern: strictly decreasing before the minimum, strictly increasing
    // after it (with exact neighbor checks at the minimum)
    let mut pattern_ok = true;
    for w in samples.windows(2) {
        let (ref n1, ref a1) = w[0];
        let (ref n2, ref a2) = w[1];
        if *n2 <= min_position {
            if !(a2 < a1) {
                pattern_ok = false;
            }
        } else if *n1 >= min_position {
            if !(a2 > a1) {
                pattern_ok = false;
            }
        }
    }
    // neighbor steps at the minimum
    if min_position > Integer::from(&t_prev + 1u32) {
        let before = Integer::from(&min_position - 1u32);
        let a_before = backward_average_at(blocks, &before)?;
        let a_min = backward_average_at(blocks, &min_position)?;
        if !(a_min < a_before) {
            pattern_ok = false;
        }
    }
    if min_position < t_k {
        let after = Integer::from(&min_position + 1u32);
        let a_after = backward_average_at(blocks, &after)?;
        let a_min = backward_average_at(blocks, &min_position)?;
        if !(a_after > a_min) {
            pattern_ok = false;
        }
    }

    Ok(EnvelopeReport {
        k,
        probes: samples,
        envelope_ok,
        pattern_ok,
        min_position,
    })
}

/// The 0/1 sequence in blocks and its Cesaro averages at block boundaries.
#[derive(Debug, Clone)]
pub struct CesaroSeries {
    /// Cumulative boundary positions `l_1 < l_2 < ...`.
    pub boundaries: Vec<Integer>,
    /// Exact `s_l` at each boundary.
    pub s: Vec<Rational>,
}

pub fn cesaro_sequence(block_lengths: &[Integer], values: &[Rational]) -> Result<CesaroSeries> {
    if block_lengths.len() != values.len() {
        return Err(Error::Domain("lengths and values differ in count".into()));
    }
    if block_lengths.iter().any(|l| l.cmp0() != Ordering::Greater) {
        return Err(Error::Domain("block lengths must be positive".into()));
    }
    let mut boundaries = Vec::with_capacity(block_lengths.len());
    let mut s = Vec::with_capacity(block_lengths.len());
    let mut total = Integer::new();
    let mut weighted = Rational::new();
    for (len, v) in block_lengths.iter().zip(values.iter()) {
        total += len;
        weighted += Rational::from(v * Rational::from(len.clone()));
        boundaries.push(total.clone());
        s.push(Rational::from(&weighted / Rational::from(total.clone())));
    }
    Ok(CesaroSeries { boundaries, s })
}

/// Doubling block lengths `1, 2, 4, ...` with alternating values `1, 0, ...`.
pub fn doubling_blocks(depth: usize) -> (Vec<Integer>, Vec<Rational>) {
    let lengths = (0..depth).map(|i| Integer::from(1u64) << i as u32).collect();
    let values = (0..depth)
        .map(|i| Rational::from(if i % 2 == 0 { 1 } else { 0 }))
        .collect();
    (lengths, values)
}

/// Monte Carlo decay profile of `A_N(omega, theta_Y, T)` over sampled base
/// points, for each window length in the schedule.
#[derive(Debug, Clone)]
pub struct DecayRow {
    pub n: u64,
    pub mean: f64,
    /// Fraction of samples exceeding each epsilon, in input order.
    pub exceed: Vec<(f64, f64)>,
}

pub fn hopf_decay_check(
    level_cap: u64,
    sys: &RotationSystem,
    schedule: &[u64],
    epsilons: &[f64],
    mc: &MonteCarloConfig,
) -> Result<Vec<DecayRow>> {
    if schedule.is_empty() {
        return Err(Error::Domain("empty schedule".into()));
    }
    let alpha = sys.alpha().to_f64();
    let mut rows = Vec::with_capacity(schedule.len());
    for (si, &n) in schedule.iter().enumerate() {
        let mut rng = ChaCha8Rng::seed_from_u64(mc.seed);
        rng.set_stream(si as u64);
        let mut counts = vec![0usize; epsilons.len()];
        let mut sum = 0.0f64;
        for _ in 0..mc.samples {
            let u: f64 = 1.0 - rng.gen_range(0.0..1.0);
            let a = time_below_level(u, alpha, n, level_cap) as f64 / n as f64;
            sum += a;
            for (ei, &eps) in epsilons.iter().enumerate() {
                if a > eps {
                    counts[ei] += 1;
                }
            }
        }
        rows.push(DecayRow {
            n,
            mean: sum / mc.samples as f64,
            exceed: epsilons
                .iter()
                .zip(counts.iter())
                .map(|(&e, &c)| (e, c as f64 / mc.samples as f64))
                .collect(),
        });
    }
    Ok(rows)
}
