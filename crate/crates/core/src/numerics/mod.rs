//! Extended-precision arithmetic with directed rounding.
//!
//! Floors of doubly exponential quantities and ratios of huge sums are
//! certified, never guessed: the exact path raises precision until both
//! rounding directions agree on the floor, and everything past the exact
//! bit cap is carried as a certified bracket of its base-2 logarithm.

pub mod interval;
pub mod real;

use std::cmp::Ordering;
use std::sync::OnceLock;

use rug::float::Round;
use rug::{Float, Integer, Rational};

pub use interval::{interval_sum, ExtScalar, FloatInterval, Rounding};
pub use real::Real;

use crate::error::{Error, Result};

/// Arbitrary-precision nonnegative counter (tower heights, offsets, sums).
pub type BigCount = Integer;

/// Exact heights are kept as integers only up to this bit length.
pub const DEFAULT_BIT_CAP: u64 = 1 << 24;

/// Default relative tolerance for [`big_ratio`] brackets.
pub const DEFAULT_RATIO_TOL: f64 = 1.0 / ((1u64 << 20) as f64);

/// Log-bracket width guaranteed by the bracketed path of [`eval_height`].
pub const BRACKET_WIDTH_LOG2: f64 = 1.0 / ((1u64 << 32) as f64);

const DEFAULT_PRECISION_CEILING: u32 = 4096;
/// Hard sanity limit for bracket-path precision escalation.
const BRACKET_PRECISION_LIMIT: u32 = 1 << 26;

static PRECISION_CEILING: OnceLock<u32> = OnceLock::new();

/// Working-precision ceiling (bits) for floor-certification loops. Reads
/// `ERGODEQ_PRECISION_CEILING` once; defaults to 4096.
pub fn precision_ceiling() -> u32 {
    *PRECISION_CEILING.get_or_init(|| {
        std::env::var("ERGODEQ_PRECISION_CEILING")
            .ok()
            .and_then(|s| s.parse().ok())
            .unwrap_or(DEFAULT_PRECISION_CEILING)
    })
}

/// Certified bracket `[2^log2_lo, 2^log2_hi]` of a positive quantity.
#[derive(Debug, Clone)]
pub struct LogMagnitude {
    log2: FloatInterval,
}

impl LogMagnitude {
    pub fn new(log2: FloatInterval) -> Self {
        Self { log2 }
    }

    pub fn log2_interval(&self) -> &FloatInterval {
        &self.log2
    }

    pub fn log2_lo(&self) -> ExtScalar {
        self.log2.lo_scalar()
    }

    pub fn log2_hi(&self) -> ExtScalar {
        self.log2.hi_scalar()
    }
}

/// A tower height (or partial sum of heights): exact big integer when it
/// fits the configured bit cap, certified log bracket otherwise.
#[derive(Debug, Clone)]
pub enum HeightValue {
    Exact(BigCount),
    Bracketed(LogMagnitude),
}

impl HeightValue {
    pub fn zero() -> Self {
        HeightValue::Exact(Integer::new())
    }

    pub fn is_exact(&self) -> bool {
        matches!(self, HeightValue::Exact(_))
    }

    pub fn as_exact(&self) -> Option<&Integer> {
        match self {
            HeightValue::Exact(i) => Some(i),
            HeightValue::Bracketed(_) => None,
        }
    }

    pub fn is_zero(&self) -> bool {
        matches!(self, HeightValue::Exact(i) if i.cmp0() == Ordering::Equal)
    }

    /// Certified enclosure of `log2(value)`; `None` for exact zero.
    pub fn log2_interval(&self, prec: u32) -> Option<FloatInterval> {
        match self {
            HeightValue::Exact(i) => {
                if i.cmp0() == Ordering::Equal {
                    None
                } else {
                    Some(FloatInterval::from_integer(prec, i).log2(prec))
                }
            }
            HeightValue::Bracketed(lm) => Some(lm.log2.clone()),
        }
    }

    /// Compare against a small integer, certified. `None` when the bracket
    /// cannot decide.
    pub fn cmp_u64(&self, rhs: u64) -> Option<Ordering> {
        match self {
            HeightValue::Exact(i) => Some(i.cmp(&Integer::from(rhs))),
            HeightValue::Bracketed(lm) => {
                if rhs == 0 {
                    return Some(Ordering::Greater);
                }
                let r = Float::with_val(96, rhs);
                let l2 = r.log2();
                if *lm.log2.lo() > l2 {
                    Some(Ordering::Greater)
                } else if *lm.log2.hi() < l2 {
                    Some(Ordering::Less)
                } else {
                    None
                }
            }
        }
    }
}

/// `floor(h(u))` for `h(u) = 2^(2^((u+1)/u))`, exact below the bit cap,
/// bracketed above it.
///
/// The exact path escalates working precision until rounding down and
/// rounding up agree on the floor. The bracketed path returns an enclosure
/// of `log2 h(u) = 2^((u+1)/u)` with width at most `2^-32`.
///
/// The effective exact threshold is `min(bit_cap, ceiling - 64)`: an exact
/// floor of a b-bit integer needs more than b working bits, so heights the
/// ceiling cannot certify are carried as brackets instead.
pub fn eval_height(u: &Real, bit_cap: u64) -> Result<HeightValue> {
    eval_height_with_ceiling(u, bit_cap, precision_ceiling())
}

pub fn eval_height_with_ceiling(u: &Real, bit_cap: u64, ceiling: u32) -> Result<HeightValue> {
    if u.signum() != Ordering::Greater || *u > Real::one() {
        return Err(Error::Domain(format!("u = {u} outside (0, 1]")));
    }
    if bit_cap < 64 {
        return Err(Error::Domain(format!("bit_cap = {bit_cap} below 64")));
    }
    if ceiling < 192 {
        return Err(Error::Domain(format!("precision ceiling {ceiling} below 192")));
    }
    let effective_cap = bit_cap.min(ceiling.saturating_sub(64) as u64);
    let e = u.recip().add(&Real::one()); // (u+1)/u

    // Integer exponent: h = 2^(2^e) is exact by construction.
    if e.is_integer() {
        let e_int = e.floor();
        if e_int > (1u32 << 30) {
            return Err(Error::PrecisionExhausted {
                bits: 1 << 30,
                what: format!("2^(2^{e_int}) exceeds representable log range"),
            });
        }
        let e_u = e_int.to_u32().expect("checked range");
        if e_u <= 63 {
            let inner: u64 = 1u64 << e_u;
            if inner <= effective_cap {
                return Ok(HeightValue::Exact(Integer::from(1) << (inner as u32)));
            }
        }
        // log2 h = 2^e exactly, a point bracket
        let (l2, _) = Float::with_val_round(96, Float::i_exp(1, e_u as i32), Round::Down);
        return Ok(HeightValue::Bracketed(LogMagnitude::new(FloatInterval::point(l2))));
    }

    let cap_f = Float::with_val(96, effective_cap);
    let mut prec: u32 = 192;
    loop {
        let iv_inner = e.to_interval(prec).exp2(prec); // log2 h
        if *iv_inner.hi() <= cap_f {
            // Exact integer floor, certified by agreement of both directions.
            let bits = iv_inner.hi().to_f64_round(Round::Up).ceil() as u64 + 64;
            let mut p2 = (bits as u32).max(192);
            loop {
                let ivh = e.to_interval(p2).exp2(p2).exp2(p2);
                if let Some(f) = ivh.floor_certain() {
                    return Ok(HeightValue::Exact(f));
                }
                p2 = p2.saturating_mul(2);
                if p2 > ceiling.saturating_mul(2) {
                    return Err(Error::PrecisionExhausted {
                        bits: p2,
                        what: format!("floor of h({u}) not certified within ceiling"),
                    });
                }
            }
        } else if *iv_inner.lo() > cap_f {
            // Bracketed: widen precision until the log2 enclosure is tight.
            let ex = iv_inner.hi().get_exp().unwrap_or(64).max(64) as u32;
            let mut p2 = (ex + 96).max(192);
            loop {
                if p2 > BRACKET_PRECISION_LIMIT {
                    return Err(Error::PrecisionExhausted {
                        bits: p2,
                        what: format!("log bracket for u = {u} needs {p2} bits"),
                    });
                }
                let iv2 = e.to_interval(p2).exp2(p2);
                let w = iv2.width(64).to_f64_round(Round::Up);
                if w <= BRACKET_WIDTH_LOG2 {
                    return Ok(HeightValue::Bracketed(LogMagnitude::new(iv2)));
                }
                p2 = p2.saturating_mul(2);
            }
        } else {
            // Enclosure straddles the cap; resolve by escalation. The value
            // can only equal the cap in the integer-exponent family, which
            // was handled above.
            prec = prec.saturating_mul(2);
            if prec > BRACKET_PRECISION_LIMIT {
                return Err(Error::PrecisionExhausted {
                    bits: prec,
                    what: format!("cap comparison for u = {u} unresolved"),
                });
            }
        }
    }
}

/// `floor(sqrt(p))`, exact.
pub fn int_sqrt(p: &BigCount) -> BigCount {
    assert!(p.cmp0() != Ordering::Less, "int_sqrt of negative value");
    p.clone().sqrt()
}

/// `floor(sqrt(.))` of a height: exact integer square root, or a half-log
/// bracket. In the bracketed regime `p > 2^64`, so the loss from the floor
/// is below `2^-31` in `log2` and is absorbed by a `2^-25` margin.
pub fn height_sqrt(h: &HeightValue) -> HeightValue {
    match h {
        HeightValue::Exact(p) => HeightValue::Exact(int_sqrt(p)),
        HeightValue::Bracketed(lm) => {
            let half = lm.log2.halve();
            let margin = FloatInterval::from_f64(96, 1.0 / ((1u64 << 25) as f64));
            let lo_adj = half.sub(&margin, 96);
            let bracket = FloatInterval::new(lo_adj.lo().clone(), half.hi().clone());
            HeightValue::Bracketed(LogMagnitude::new(bracket))
        }
    }
}

/// Sum of nonnegative magnitudes: exact while every term is exact, log
/// bracket otherwise (outward-rounded log-sum-exp).
pub fn magnitude_sum<'a, I>(items: I) -> HeightValue
where
    I: IntoIterator<Item = &'a HeightValue>,
{
    let items: Vec<&HeightValue> = items.into_iter().collect();
    if items.iter().all(|h| h.is_exact()) {
        let mut acc = Integer::new();
        for h in &items {
            acc += h.as_exact().expect("checked exact");
        }
        return HeightValue::Exact(acc);
    }
    let prec = 192;
    let logs: Vec<FloatInterval> = items
        .iter()
        .filter_map(|h| h.log2_interval(prec))
        .collect();
    if logs.is_empty() {
        return HeightValue::zero();
    }
    let m_hi = logs
        .iter()
        .map(|l| l.hi().clone())
        .max_by(|a, b| a.partial_cmp(b).unwrap())
        .unwrap();
    let m_lo = logs
        .iter()
        .map(|l| l.lo().clone())
        .max_by(|a, b| a.partial_cmp(b).unwrap())
        .unwrap();

    let mut sum_hi = Float::with_val(prec, 0);
    let mut sum_lo = Float::with_val(prec, 0);
    for l in &logs {
        let (d_hi, _) = Float::with_val_round(prec, l.hi() - &m_hi, Round::Up);
        let (t_hi, _) = Float::with_val_round(prec, d_hi.exp2_ref(), Round::Up);
        let (s, _) = Float::with_val_round(prec, &sum_hi + &t_hi, Round::Up);
        sum_hi = s;

        let (d_lo, _) = Float::with_val_round(prec, l.lo() - &m_lo, Round::Down);
        let (t_lo, _) = Float::with_val_round(prec, d_lo.exp2_ref(), Round::Down);
        let (s, _) = Float::with_val_round(prec, &sum_lo + &t_lo, Round::Down);
        sum_lo = s;
    }
    let (lh, _) = Float::with_val_round(prec, sum_hi.log2_ref(), Round::Up);
    let (hi, _) = Float::with_val_round(prec, &m_hi + &lh, Round::Up);
    let (ll, _) = Float::with_val_round(prec, sum_lo.log2_ref(), Round::Down);
    let (lo, _) = Float::with_val_round(prec, &m_lo + &ll, Round::Down);
    HeightValue::Bracketed(LogMagnitude::new(FloatInterval::new(lo, hi)))
}

/// Certified ratio of two magnitude sums.
#[derive(Debug, Clone)]
pub struct RatioInterval {
    /// Enclosure of the ratio as a value (endpoints saturate when the ratio
    /// leaves the representable exponent range).
    pub value: FloatInterval,
    /// Enclosure of `log2(ratio)`; `None` when the ratio is exactly zero.
    pub log2: Option<FloatInterval>,
    /// Exact rational when every input was exact.
    pub exact: Option<Rational>,
    /// Upper bound on the relative bracket width.
    pub rel_width: f64,
}

impl RatioInterval {
    pub fn lo_f64(&self) -> f64 {
        self.value.lo_f64()
    }

    pub fn hi_f64(&self) -> f64 {
        self.value.hi_f64()
    }

    pub fn mid_f64(&self) -> f64 {
        self.value.mid_f64()
    }

    /// Strictly-less comparison of ratios, certified via log brackets when
    /// available (zero compares below any positive bracket).
    pub fn certainly_lt(&self, other: &RatioInterval) -> bool {
        match (&self.log2, &other.log2) {
            (None, None) => false,
            (None, Some(_)) => true,
            (Some(_), None) => false,
            (Some(a), Some(b)) => a.certainly_lt(b),
        }
    }
}

/// `(sum of numerators) / (sum of denominators)` with certified enclosure;
/// exact rational when every term is exact.
pub fn big_ratio(nums: &[HeightValue], dens: &[HeightValue]) -> Result<RatioInterval> {
    big_ratio_tol(nums, dens, DEFAULT_RATIO_TOL)
}

pub fn big_ratio_tol(
    nums: &[HeightValue],
    dens: &[HeightValue],
    rel_tol: f64,
) -> Result<RatioInterval> {
    if nums.is_empty() || dens.is_empty() {
        return Err(Error::Domain("big_ratio: empty input list".into()));
    }
    for d in dens {
        match d {
            HeightValue::Exact(i) if i.cmp0() != Ordering::Greater => {
                return Err(Error::Domain("big_ratio: non-positive denominator".into()));
            }
            _ => {}
        }
    }
    let num_sum = magnitude_sum(nums.iter());
    let den_sum = magnitude_sum(dens.iter());

    if num_sum.is_zero() {
        let zero = Float::with_val(64, 0);
        return Ok(RatioInterval {
            value: FloatInterval::new(zero.clone(), zero),
            log2: None,
            exact: Some(Rational::new()),
            rel_width: 0.0,
        });
    }

    match (&num_sum, &den_sum) {
        (HeightValue::Exact(a), HeightValue::Exact(b)) => {
            let exact = Rational::from((a.clone(), b.clone()));
            let value = FloatInterval::from_rational(128, &exact);
            let log2 = value.log2(128);
            Ok(RatioInterval {
                value,
                log2: Some(log2),
                exact: Some(exact),
                rel_width: 0.0,
            })
        }
        _ => {
            let prec = 192;
            let ln = num_sum.log2_interval(prec).expect("nonzero numerator");
            let ld = den_sum.log2_interval(prec).expect("positive denominator");
            let log_ratio = ln.sub(&ld, prec);
            let width = log_ratio.width(64).to_f64_round(Round::Up);
            let rel_width = width * std::f64::consts::LN_2;
            if rel_width > rel_tol {
                return Err(Error::MixedPrecisionLoss {
                    width: rel_width,
                    tol: rel_tol,
                });
            }
            let value = log_ratio.exp2(prec);
            Ok(RatioInterval {
                value,
                log2: Some(log_ratio),
                exact: None,
                rel_width,
            })
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn exact_u64(v: u64) -> HeightValue {
        HeightValue::Exact(Integer::from(v))
    }

    #[test]
    fn height_at_one_is_sixteen() {
        let h = eval_height(&Real::one(), DEFAULT_BIT_CAP).unwrap();
        assert_eq!(h.as_exact().unwrap(), &Integer::from(16));
    }

    #[test]
    fn height_closed_form_family() {
        // u = 1/2: exponent 3, h = 2^8 = 256; u = 1/3: exponent 4, h = 2^16
        let h2 = eval_height(&Real::from_ratio(1, 2), DEFAULT_BIT_CAP).unwrap();
        assert_eq!(h2.as_exact().unwrap(), &Integer::from(256));
        let h3 = eval_height(&Real::from_ratio(1, 3), DEFAULT_BIT_CAP).unwrap();
        assert_eq!(h3.as_exact().unwrap(), &Integer::from(65536));
    }

    #[test]
    fn height_bracket_small_u() {
        // u = 0.05: log2 h = 2^21 = 2097152, far beyond what the default
        // 4096-bit ceiling certifies, so the default path brackets it.
        let h = eval_height(&Real::from_ratio(1, 20), DEFAULT_BIT_CAP).unwrap();
        match h {
            HeightValue::Bracketed(lm) => {
                let lo = lm.log2_lo().to_f64();
                let hi = lm.log2_hi().to_f64();
                assert!((lo - 2097152.0).abs() < 1e-3, "lo = {lo}");
                assert!((hi - 2097152.0).abs() < 1e-3, "hi = {hi}");
                assert!(hi >= lo);
            }
            HeightValue::Exact(_) => panic!("expected bracket for u = 0.05"),
        }
        // with a raised ceiling the same height is an exact 2097153-bit integer
        let exact =
            eval_height_with_ceiling(&Real::from_ratio(1, 20), DEFAULT_BIT_CAP, 1 << 22).unwrap();
        assert_eq!(
            exact.as_exact().expect("within raised ceiling").significant_bits(),
            2097153
        );
    }

    #[test]
    fn height_exact_irrational_exponent() {
        // u = 0.3: (u+1)/u = 13/3, log2 h = 2^(13/3) = 20.158... so the
        // height is a 21-bit exact integer at any admissible cap.
        let e = eval_height(&Real::from_ratio(3, 10), 64).unwrap();
        let p = e.as_exact().unwrap();
        assert_eq!(p.significant_bits(), 21);
        let l2 = FloatInterval::from_integer(128, p).log2(128);
        assert!(l2.lo_f64() <= 20.158736798317971 && 20.158736798317971 <= l2.hi_f64() + 1e-6);
    }

    #[test]
    fn height_bracket_irrational_exponent() {
        // u = 0.03: (u+1)/u = 103/3 is not an integer; log2 h = 2^(103/3)
        // = 2.168...e10 lies far above any admissible cap.
        let h = eval_height(&Real::from_ratio(3, 100), DEFAULT_BIT_CAP).unwrap();
        match h {
            HeightValue::Bracketed(lm) => {
                let expect = 2.0f64.powf(103.0 / 3.0);
                let mid = 0.5 * (lm.log2_lo().to_f64() + lm.log2_hi().to_f64());
                assert!((mid / expect - 1.0).abs() < 1e-12, "mid = {mid}");
                let w = lm
                    .log2_interval()
                    .width(64)
                    .to_f64_round(rug::float::Round::Up);
                assert!(w <= BRACKET_WIDTH_LOG2, "bracket width {w}");
            }
            HeightValue::Exact(_) => panic!("expected bracket for u = 0.03"),
        }
    }

    #[test]
    fn height_domain_errors() {
        assert!(matches!(
            eval_height(&Real::from_ratio(3, 2), DEFAULT_BIT_CAP),
            Err(Error::Domain(_))
        ));
        assert!(matches!(
            eval_height(&Real::zero(), DEFAULT_BIT_CAP),
            Err(Error::Domain(_))
        ));
    }

    #[test]
    fn height_monotone_decreasing_on_grid() {
        // h is strictly decreasing in u; compare log2 enclosures pairwise
        let caps = DEFAULT_BIT_CAP;
        let grid: Vec<Real> = (1..=20).map(|k| Real::from_ratio(k, 20)).collect();
        let mut prev: Option<FloatInterval> = None;
        for u in grid.iter() {
            let h = eval_height(u, caps).unwrap();
            let l2 = h.log2_interval(128).unwrap();
            if let Some(prev_l2) = prev {
                // u increased, so the height must have strictly decreased
                assert!(
                    l2.certainly_lt(&prev_l2) || l2.hi() < prev_l2.lo(),
                    "monotonicity failed near u = {u}"
                );
            }
            prev = Some(l2);
        }
    }

    #[test]
    fn exact_value_lies_inside_forced_bracket() {
        // force the bracket path with a small cap and compare with exact
        for (num, den) in [(1i64, 10i64), (1, 9), (1, 7), (2, 13), (3, 20)] {
            let u = Real::from_ratio(num, den);
            let exact = eval_height(&u, DEFAULT_BIT_CAP).unwrap();
            let p = exact.as_exact().expect("grid chosen exact");
            let forced = eval_height(&u, 64).unwrap();
            match forced {
                HeightValue::Bracketed(lm) => {
                    // the bracket encloses log2 h(u) and p = floor(h(u)),
                    // so log2 p <= hi and lo <= log2 (p + 1)
                    let l2p = FloatInterval::from_integer(192, p).log2(192);
                    let p1 = Integer::from(p + 1u32);
                    let l2p1 = FloatInterval::from_integer(192, &p1).log2(192);
                    assert!(
                        l2p.lo() <= lm.log2_interval().hi()
                            && lm.log2_interval().lo() <= l2p1.hi(),
                        "exact floor inconsistent with bracket for u = {u}"
                    );
                }
                HeightValue::Exact(q) => assert_eq!(&q, p),
            }
        }
    }

    #[test]
    fn int_sqrt_floor_values() {
        assert_eq!(int_sqrt(&Integer::from(16)), 4);
        assert_eq!(int_sqrt(&Integer::from(15)), 3);
        assert_eq!(int_sqrt(&Integer::from(65536)), 256);
        assert_eq!(int_sqrt(&Integer::new()), 0);
    }

    #[test]
    fn big_ratio_exact_cases() {
        let r = big_ratio(&[exact_u64(4)], &[exact_u64(16)]).unwrap();
        assert_eq!(r.exact.as_ref().unwrap(), &Rational::from((1, 4)));
        assert_eq!(r.rel_width, 0.0);

        let z = big_ratio(&[exact_u64(0)], &[exact_u64(16)]).unwrap();
        assert_eq!(z.exact.as_ref().unwrap(), &Rational::new());
        assert_eq!(z.hi_f64(), 0.0);
    }

    #[test]
    fn big_ratio_bracketed_sqrt_scale() {
        // q / p with p bracketed at log2 = 2^21 and q = half-log bracket:
        // the ratio sits near 2^(-2^20)
        let u = Real::from_ratio(1, 20);
        let p = eval_height(&u, 64).unwrap();
        let q = height_sqrt(&p);
        let r = big_ratio(&[q], &[p]).unwrap();
        let l2 = r.log2.as_ref().unwrap();
        let expect = -(2.0f64.powi(20));
        assert!((l2.lo_f64() - expect).abs() < 1.0, "lo {}", l2.lo_f64());
        assert!((l2.hi_f64() - expect).abs() < 1.0, "hi {}", l2.hi_f64());
        assert!(r.rel_width <= DEFAULT_RATIO_TOL);
    }

    #[test]
    fn magnitude_sum_mixed_dominated_by_bracket() {
        let u = Real::from_ratio(1, 20);
        let p = eval_height(&u, 64).unwrap();
        let total = magnitude_sum([&p, &exact_u64(1000)]);
        let l2 = total.log2_interval(128).unwrap();
        // adding 1000 cannot move log2 of 2^(2^21) noticeably
        assert!((l2.lo_f64() - 2097152.0).abs() < 1e-3);
        assert!(l2.lo() <= l2.hi());
    }

    #[test]
    fn big_ratio_rejects_bad_inputs() {
        assert!(big_ratio(&[], &[exact_u64(1)]).is_err());
        assert!(big_ratio(&[exact_u64(1)], &[exact_u64(0)]).is_err());
    }
}
