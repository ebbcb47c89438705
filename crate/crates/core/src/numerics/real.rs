//! Exact computable reals: rationals and quadratic surds `a + b*sqrt(d)`.
//!
//! Rotation orbits `{u0 + k*alpha}` stay inside one quadratic field when
//! `alpha` is a surd (the golden mean lives in Q(sqrt 5)), so block base
//! points can be carried exactly and compared exactly. Every value can also
//! be evaluated to a certified interval at any precision.

use std::cmp::Ordering;
use std::fmt;

use rug::ops::{DivRounding, Pow};
use rug::{Integer, Rational};

use super::interval::FloatInterval;

/// Exact real number, closed under field operations within one `Q(sqrt d)`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Real {
    Rational(Rational),
    /// `a + b * sqrt(d)` with `b != 0` and `d` not a perfect square.
    Surd { a: Rational, b: Rational, d: u32 },
}

impl fmt::Display for Real {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Real::Rational(r) => write!(f, "{r}"),
            Real::Surd { a, b, d } => write!(f, "{a}+{b}*sqrt({d})"),
        }
    }
}

fn is_perfect_square(d: u32) -> bool {
    let r = (d as f64).sqrt().round() as u32;
    r.checked_mul(r) == Some(d)
}

impl Real {
    pub fn zero() -> Self {
        Real::Rational(Rational::new())
    }

    pub fn one() -> Self {
        Real::Rational(Rational::from(1))
    }

    pub fn from_rational(r: Rational) -> Self {
        Real::Rational(r)
    }

    pub fn from_ratio(num: i64, den: i64) -> Self {
        Real::Rational(Rational::from((num, den)))
    }

    pub fn from_integer(n: i64) -> Self {
        Real::Rational(Rational::from(n))
    }

    /// Build `a + b*sqrt(d)`, normalizing to a rational when `b = 0` or `d`
    /// is a perfect square.
    pub fn surd(a: Rational, b: Rational, d: u32) -> Self {
        if b == 0 {
            return Real::Rational(a);
        }
        if is_perfect_square(d) {
            let r = Integer::from((d as f64).sqrt().round() as u32);
            return Real::Rational(a + b * Rational::from(r));
        }
        Real::Surd { a, b, d }
    }

    /// The golden mean `(sqrt 5 - 1)/2 = 0.618...`, an exact surd.
    pub fn golden_mean() -> Self {
        Real::surd(Rational::from((-1, 2)), Rational::from((1, 2)), 5)
    }

    /// Parse a decimal string like "0.3" or a fraction like "3/10" into an
    /// exact rational.
    pub fn parse_rational(s: &str) -> Option<Self> {
        let s = s.trim();
        if let Some((n, d)) = s.split_once('/') {
            let num: Integer = n.trim().parse().ok()?;
            let den: Integer = d.trim().parse().ok()?;
            if den == 0 {
                return None;
            }
            return Some(Real::Rational(Rational::from((num, den))));
        }
        if let Some((int_part, frac_part)) = s.split_once('.') {
            let neg = int_part.trim_start().starts_with('-');
            let ip: Integer = if int_part.is_empty() || int_part == "-" {
                Integer::new()
            } else {
                int_part.parse().ok()?
            };
            if !frac_part.chars().all(|c| c.is_ascii_digit()) {
                return None;
            }
            let fp: Integer = if frac_part.is_empty() {
                Integer::new()
            } else {
                frac_part.parse().ok()?
            };
            let scale = Integer::from(10).pow(frac_part.len() as u32);
            let mut r = Rational::from((ip.abs(), Integer::from(1)))
                + Rational::from((fp, scale));
            if neg {
                r = -r;
            }
            return Some(Real::Rational(r));
        }
        let n: Integer = s.parse().ok()?;
        Some(Real::Rational(Rational::from(n)))
    }

    pub fn as_rational(&self) -> Option<&Rational> {
        match self {
            Real::Rational(r) => Some(r),
            Real::Surd { .. } => None,
        }
    }

    pub fn is_zero(&self) -> bool {
        matches!(self, Real::Rational(r) if *r == 0)
    }

    pub fn is_integer(&self) -> bool {
        matches!(self, Real::Rational(r) if r.is_integer())
    }

    fn parts(&self) -> (Rational, Rational, Option<u32>) {
        match self {
            Real::Rational(r) => (r.clone(), Rational::new(), None),
            Real::Surd { a, b, d } => (a.clone(), b.clone(), Some(*d)),
        }
    }

    fn join_d(x: Option<u32>, y: Option<u32>) -> Option<u32> {
        match (x, y) {
            (None, None) => None,
            (Some(d), None) | (None, Some(d)) => Some(d),
            (Some(d1), Some(d2)) => {
                assert_eq!(d1, d2, "mixed quadratic fields Q(sqrt {d1}) and Q(sqrt {d2})");
                Some(d1)
            }
        }
    }

    pub fn add(&self, other: &Real) -> Real {
        let (a1, b1, d1) = self.parts();
        let (a2, b2, d2) = other.parts();
        let d = Self::join_d(d1, d2);
        match d {
            None => Real::Rational(a1 + a2),
            Some(d) => Real::surd(a1 + a2, b1 + b2, d),
        }
    }

    pub fn sub(&self, other: &Real) -> Real {
        self.add(&other.neg())
    }

    pub fn neg(&self) -> Real {
        match self {
            Real::Rational(r) => Real::Rational(Rational::from(-r)),
            Real::Surd { a, b, d } => Real::Surd {
                a: Rational::from(-a),
                b: Rational::from(-b),
                d: *d,
            },
        }
    }

    pub fn mul(&self, other: &Real) -> Real {
        let (a1, b1, d1) = self.parts();
        let (a2, b2, d2) = other.parts();
        let d = Self::join_d(d1, d2);
        match d {
            None => Real::Rational(a1 * a2),
            Some(d) => {
                let dr = Rational::from(d);
                let a = Rational::from(&a1 * &a2) + Rational::from(&b1 * &b2) * dr;
                let b = a1 * b2 + a2 * b1;
                Real::surd(a, b, d)
            }
        }
    }

    pub fn mul_i64(&self, k: i64) -> Real {
        self.mul(&Real::from_integer(k))
    }

    /// Multiplicative inverse; panics on zero.
    pub fn recip(&self) -> Real {
        match self {
            Real::Rational(r) => {
                assert!(*r != 0, "division by zero");
                Real::Rational(r.clone().recip())
            }
            Real::Surd { a, b, d } => {
                // 1/(a + b sqrt d) = (a - b sqrt d) / (a^2 - b^2 d)
                let dr = Rational::from(*d);
                let denom = Rational::from(a * a) - Rational::from(b * b) * dr;
                assert!(denom != 0, "degenerate surd denominator");
                Real::surd(
                    Rational::from(a / &denom),
                    -Rational::from(b / &denom),
                    *d,
                )
            }
        }
    }

    pub fn div(&self, other: &Real) -> Real {
        self.mul(&other.recip())
    }

    /// Exact sign of the value.
    pub fn signum(&self) -> Ordering {
        match self {
            Real::Rational(r) => r.cmp0(),
            Real::Surd { a, b, d } => {
                let sa = a.cmp0();
                let sb = b.cmp0();
                match (sa, sb) {
                    (Ordering::Equal, s) | (s, Ordering::Equal) => s,
                    (Ordering::Greater, Ordering::Greater) => Ordering::Greater,
                    (Ordering::Less, Ordering::Less) => Ordering::Less,
                    // opposite signs: compare a^2 against b^2 d
                    (sa, _) => {
                        let a2 = Rational::from(a * a);
                        let b2d = Rational::from(b * b) * Rational::from(*d);
                        // value > 0 iff |larger-magnitude term| belongs to the positive part
                        match a2.cmp(&b2d) {
                            Ordering::Equal => Ordering::Equal, // cannot happen for non-square d
                            Ordering::Greater => sa,
                            Ordering::Less => sa.reverse(),
                        }
                    }
                }
            }
        }
    }

    /// Evaluate to a certified enclosure at the given precision.
    pub fn to_interval(&self, prec: u32) -> FloatInterval {
        match self {
            Real::Rational(r) => FloatInterval::from_rational(prec, r),
            Real::Surd { a, b, d } => {
                let ia = FloatInterval::from_rational(prec, a);
                let ib = FloatInterval::from_rational(prec, b);
                let sd = FloatInterval::sqrt_u32(*d, prec);
                ia.add(&ib.mul(&sd, prec), prec)
            }
        }
    }

    /// Nearest f64 approximation (for display and fast paths).
    pub fn to_f64(&self) -> f64 {
        self.to_interval(96).mid_f64()
    }

    /// Exact floor. Terminates because a surd with nonzero irrational part
    /// is never an integer; precision escalates until the enclosure
    /// separates from integer boundaries.
    pub fn floor(&self) -> Integer {
        match self {
            Real::Rational(r) => {
                let num = r.numer().clone();
                let den = r.denom().clone();
                num.div_floor(den)
            }
            Real::Surd { .. } => {
                let mut prec = 96;
                loop {
                    let iv = self.to_interval(prec);
                    if let Some(f) = iv.floor_certain() {
                        return f;
                    }
                    prec *= 2;
                    assert!(prec <= 1 << 22, "floor certification runaway for {self}");
                }
            }
        }
    }

    /// Fractional part in `[0, 1)`, exact.
    pub fn frac(&self) -> Real {
        let f = self.floor();
        self.sub(&Real::Rational(Rational::from(f)))
    }
}

impl PartialOrd for Real {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

impl Ord for Real {
    fn cmp(&self, other: &Self) -> Ordering {
        self.sub(other).signum()
    }
}
