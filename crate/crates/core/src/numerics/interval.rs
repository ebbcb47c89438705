//! Directed-rounding interval arithmetic over MPFR floats.
//!
//! Every operation rounds the lower endpoint down and the upper endpoint up,
//! so an interval always encloses the exact result. MPFR saturates on
//! overflow and underflow in the rounding direction (down to zero or the
//! largest finite value, up to the smallest positive value or infinity),
//! which keeps enclosures valid without special cases.

use rug::float::Round;
use rug::ops::Pow;
use rug::{Float, Integer, Rational};

/// Rounding direction tag carried by certified scalar values.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Rounding {
    Down,
    Up,
    Nearest,
}

impl Rounding {
    pub(crate) fn to_mpfr(self) -> Round {
        match self {
            Rounding::Down => Round::Down,
            Rounding::Up => Round::Up,
            Rounding::Nearest => Round::Nearest,
        }
    }
}

/// A real value carried at an explicit precision with a rounding-mode tag.
#[derive(Debug, Clone, PartialEq)]
pub struct ExtScalar {
    value: Float,
    rounding: Rounding,
}

impl ExtScalar {
    pub fn new(value: Float, rounding: Rounding) -> Self {
        Self { value, rounding }
    }

    pub fn value(&self) -> &Float {
        &self.value
    }

    pub fn precision_bits(&self) -> u32 {
        self.value.prec()
    }

    pub fn rounding(&self) -> Rounding {
        self.rounding
    }

    pub fn to_f64(&self) -> f64 {
        self.value.to_f64_round(self.rounding.to_mpfr())
    }
}

/// Closed interval `[lo, hi]` with outward-rounded endpoints.
#[derive(Debug, Clone)]
pub struct FloatInterval {
    lo: Float,
    hi: Float,
}

impl FloatInterval {
    pub fn new(lo: Float, hi: Float) -> Self {
        debug_assert!(lo <= hi, "inverted interval: {lo} > {hi}");
        Self { lo, hi }
    }

    pub fn point(v: Float) -> Self {
        Self { lo: v.clone(), hi: v }
    }

    pub fn from_f64(prec: u32, v: f64) -> Self {
        Self::point(Float::with_val(prec, v))
    }

    pub fn from_u64(prec: u32, v: u64) -> Self {
        Self::point(Float::with_val(prec, v))
    }

    pub fn from_rational(prec: u32, r: &Rational) -> Self {
        let (lo, _) = Float::with_val_round(prec, r, Round::Down);
        let (hi, _) = Float::with_val_round(prec, r, Round::Up);
        Self { lo, hi }
    }

    pub fn from_integer(prec: u32, i: &Integer) -> Self {
        let (lo, _) = Float::with_val_round(prec, i, Round::Down);
        let (hi, _) = Float::with_val_round(prec, i, Round::Up);
        Self { lo, hi }
    }

    pub fn lo(&self) -> &Float {
        &self.lo
    }

    pub fn hi(&self) -> &Float {
        &self.hi
    }

    pub fn lo_scalar(&self) -> ExtScalar {
        ExtScalar::new(self.lo.clone(), Rounding::Down)
    }

    pub fn hi_scalar(&self) -> ExtScalar {
        ExtScalar::new(self.hi.clone(), Rounding::Up)
    }

    /// Conservative f64 view of the lower endpoint.
    pub fn lo_f64(&self) -> f64 {
        self.lo.to_f64_round(Round::Down)
    }

    /// Conservative f64 view of the upper endpoint.
    pub fn hi_f64(&self) -> f64 {
        self.hi.to_f64_round(Round::Up)
    }

    pub fn mid_f64(&self) -> f64 {
        0.5 * (self.lo_f64() + self.hi_f64())
    }

    pub fn contains(&self, v: &Float) -> bool {
        self.lo <= *v && *v <= self.hi
    }

    pub fn contains_interval(&self, other: &FloatInterval) -> bool {
        self.lo <= other.lo && other.hi <= self.hi
    }

    /// Upper bound on `hi - lo`.
    pub fn width(&self, prec: u32) -> Float {
        let (w, _) = Float::with_val_round(prec, &self.hi - &self.lo, Round::Up);
        w
    }

    /// Whole interval strictly below `other`.
    pub fn certainly_lt(&self, other: &FloatInterval) -> bool {
        self.hi < other.lo
    }

    pub fn certainly_le(&self, other: &FloatInterval) -> bool {
        self.hi <= other.lo
    }

    pub fn is_positive(&self) -> bool {
        self.lo.is_sign_positive() && !self.lo.is_zero()
    }

    pub fn add(&self, other: &FloatInterval, prec: u32) -> FloatInterval {
        let (lo, _) = Float::with_val_round(prec, &self.lo + &other.lo, Round::Down);
        let (hi, _) = Float::with_val_round(prec, &self.hi + &other.hi, Round::Up);
        FloatInterval::new(lo, hi)
    }

    pub fn sub(&self, other: &FloatInterval, prec: u32) -> FloatInterval {
        let (lo, _) = Float::with_val_round(prec, &self.lo - &other.hi, Round::Down);
        let (hi, _) = Float::with_val_round(prec, &self.hi - &other.lo, Round::Up);
        FloatInterval::new(lo, hi)
    }

    pub fn neg(&self) -> FloatInterval {
        FloatInterval::new(
            Float::with_val(self.hi.prec(), -&self.hi),
            Float::with_val(self.lo.prec(), -&self.lo),
        )
    }

    pub fn mul(&self, other: &FloatInterval, prec: u32) -> FloatInterval {
        let pairs = [
            (&self.lo, &other.lo),
            (&self.lo, &other.hi),
            (&self.hi, &other.lo),
            (&self.hi, &other.hi),
        ];
        let mut lo: Option<Float> = None;
        let mut hi: Option<Float> = None;
        for (a, b) in pairs {
            let (down, _) = Float::with_val_round(prec, a * b, Round::Down);
            let (up, _) = Float::with_val_round(prec, a * b, Round::Up);
            lo = Some(match lo {
                Some(cur) => if down < cur { down } else { cur },
                None => down,
            });
            hi = Some(match hi {
                Some(cur) => if up > cur { up } else { cur },
                None => up,
            });
        }
        FloatInterval::new(lo.unwrap(), hi.unwrap())
    }

    /// Interval division. The divisor must not contain zero.
    pub fn div(&self, other: &FloatInterval, prec: u32) -> FloatInterval {
        assert!(
            other.lo.is_sign_positive() != other.hi.is_sign_negative()
                && !(other.lo.is_zero() || other.hi.is_zero())
                || (!other.lo.is_zero() && other.lo.is_sign_positive())
                || (!other.hi.is_zero() && other.hi.is_sign_negative()),
            "interval division by an interval containing zero"
        );
        let pairs = [
            (&self.lo, &other.lo),
            (&self.lo, &other.hi),
            (&self.hi, &other.lo),
            (&self.hi, &other.hi),
        ];
        let mut lo: Option<Float> = None;
        let mut hi: Option<Float> = None;
        for (a, b) in pairs {
            let (down, _) = Float::with_val_round(prec, a / b, Round::Down);
            let (up, _) = Float::with_val_round(prec, a / b, Round::Up);
            lo = Some(match lo {
                Some(cur) => if down < cur { down } else { cur },
                None => down,
            });
            hi = Some(match hi {
                Some(cur) => if up > cur { up } else { cur },
                None => up,
            });
        }
        FloatInterval::new(lo.unwrap(), hi.unwrap())
    }

    /// `2^x`, monotone increasing. Saturation on overflow or underflow keeps
    /// the enclosure valid.
    pub fn exp2(&self, prec: u32) -> FloatInterval {
        let (lo, _) = Float::with_val_round(prec, self.lo.exp2_ref(), Round::Down);
        let (hi, _) = Float::with_val_round(prec, self.hi.exp2_ref(), Round::Up);
        FloatInterval::new(lo, hi)
    }

    /// `log2 x`; requires a strictly positive interval.
    pub fn log2(&self, prec: u32) -> FloatInterval {
        assert!(self.is_positive(), "log2 of a non-positive interval");
        let (lo, _) = Float::with_val_round(prec, self.lo.log2_ref(), Round::Down);
        let (hi, _) = Float::with_val_round(prec, self.hi.log2_ref(), Round::Up);
        FloatInterval::new(lo, hi)
    }

    pub fn sqrt(&self, prec: u32) -> FloatInterval {
        assert!(!self.lo.is_sign_negative() || self.lo.is_zero(), "sqrt of negative interval");
        let (lo, _) = Float::with_val_round(prec, self.lo.sqrt_ref(), Round::Down);
        let (hi, _) = Float::with_val_round(prec, self.hi.sqrt_ref(), Round::Up);
        FloatInterval::new(lo, hi)
    }

    /// Integer square root of `d` as an interval: handy for surd evaluation.
    pub fn sqrt_u32(d: u32, prec: u32) -> FloatInterval {
        let base = Float::with_val(prec, d);
        let (lo, _) = Float::with_val_round(prec, base.sqrt_ref(), Round::Down);
        let (hi, _) = Float::with_val_round(prec, base.sqrt_ref(), Round::Up);
        FloatInterval::new(lo, hi)
    }

    /// `x^e` for a small non-negative integer exponent, on a non-negative interval.
    pub fn pow_u32(&self, e: u32, prec: u32) -> FloatInterval {
        assert!(!self.lo.is_sign_negative() || self.lo.is_zero());
        let (lo, _) = Float::with_val_round(prec, (&self.lo).pow(e), Round::Down);
        let (hi, _) = Float::with_val_round(prec, (&self.hi).pow(e), Round::Up);
        FloatInterval::new(lo, hi)
    }

    /// Widen this interval to the hull with another.
    pub fn hull(&self, other: &FloatInterval) -> FloatInterval {
        let lo = if self.lo <= other.lo { self.lo.clone() } else { other.lo.clone() };
        let hi = if self.hi >= other.hi { self.hi.clone() } else { other.hi.clone() };
        FloatInterval::new(lo, hi)
    }

    /// Scale by 1/2 (exact in binary floating point).
    pub fn halve(&self) -> FloatInterval {
        let mut lo = self.lo.clone();
        let mut hi = self.hi.clone();
        lo >>= 1;
        hi >>= 1;
        FloatInterval::new(lo, hi)
    }

    /// Certified floor when both endpoints floor to the same integer.
    pub fn floor_certain(&self) -> Option<Integer> {
        let flo = self.lo.clone().floor().to_integer()?;
        let fhi = self.hi.clone().floor().to_integer()?;
        if flo == fhi {
            Some(flo)
        } else {
            None
        }
    }
}

/// Sum a slice of intervals at the given precision.
pub fn interval_sum(items: &[FloatInterval], prec: u32) -> FloatInterval {
    let mut lo = Float::with_val(prec, 0);
    let mut hi = Float::with_val(prec, 0);
    for it in items {
        let (l, _) = Float::with_val_round(prec, &lo + &it.lo, Round::Down);
        lo = l;
        let (h, _) = Float::with_val_round(prec, &hi + &it.hi, Round::Up);
        hi = h;
    }
    FloatInterval::new(lo, hi)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn directed_division_brackets_exact_value() {
        let a = FloatInterval::from_u64(64, 1);
        let b = FloatInterval::from_u64(64, 3);
        let q = a.div(&b, 64);
        assert!(q.lo() < q.hi());
        let third = Float::with_val(256, Rational::from((1, 3)));
        assert!(q.contains(&third));
    }

    #[test]
    fn mul_sign_cases() {
        let a = FloatInterval::new(Float::with_val(64, -2), Float::with_val(64, 3));
        let b = FloatInterval::new(Float::with_val(64, -5), Float::with_val(64, 7));
        let p = a.mul(&b, 64);
        // candidates: 10, -14, -15, 21
        assert_eq!(p.lo().to_f64(), -15.0);
        assert_eq!(p.hi().to_f64(), 21.0);
    }

    #[test]
    fn exp2_saturates_conservatively() {
        let huge = FloatInterval::from_f64(64, 3.0e9);
        let e = huge.exp2(64);
        assert!(e.hi().is_infinite() || e.hi().get_exp().unwrap() > 1 << 30);
        let tiny = FloatInterval::from_f64(64, -3.0e9);
        let t = tiny.exp2(64);
        assert!(t.lo().is_zero());
        assert!(!t.hi().is_zero(), "upper endpoint must stay positive");
    }

    #[test]
    fn floor_certain_agrees_only_when_certain() {
        let iv = FloatInterval::new(Float::with_val(64, 15.2), Float::with_val(64, 15.8));
        assert_eq!(iv.floor_certain().unwrap(), 15);
        let straddle = FloatInterval::new(Float::with_val(64, 15.9), Float::with_val(64, 16.1));
        assert!(straddle.floor_certain().is_none());
    }
}
