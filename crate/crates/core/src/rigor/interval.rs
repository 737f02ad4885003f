//! Scalar interval arithmetic with outward rounding.
//!
//! Rounding direction is not taken from the floating-point environment.
//! Each operation computes the round-to-nearest result together with the
//! exact sign of its rounding error (`two_sum`, `fma`-based residuals) and
//! steps one ulp outward only when the nearest result lies on the wrong side.
//! Near the underflow threshold the residuals are no longer exact, so the
//! result is pushed outward unconditionally.

use std::fmt;
use std::ops::{Add, Mul, Neg, Sub};

use serde::Serialize;
use thiserror::Error;

#[derive(Debug, Error, Clone, Copy, PartialEq)]
pub enum IntervalError {
    #[error("division by an interval containing zero")]
    DivisionByZero,
    #[error("square root of an interval with negative part")]
    NegativeSqrt,
    #[error("invalid interval bounds [{0}, {1}]")]
    Invalid(f64, f64),
}

/// Below this magnitude the error-free transformations may lose exactness.
const TINY: f64 = 1.0e-290;

#[inline]
fn two_sum_err(a: f64, b: f64, s: f64) -> f64 {
    let bb = s - a;
    (a - (s - bb)) + (b - bb)
}

/// Round-down sum.
#[inline]
pub fn add_down(a: f64, b: f64) -> f64 {
    let s = a + b;
    if !s.is_finite() {
        return if s.is_nan() { s } else { s.next_down() };
    }
    if two_sum_err(a, b, s) < 0.0 {
        s.next_down()
    } else {
        s
    }
}

/// Round-up sum.
#[inline]
pub fn add_up(a: f64, b: f64) -> f64 {
    -add_down(-a, -b)
}

#[inline]
pub fn sub_down(a: f64, b: f64) -> f64 {
    add_down(a, -b)
}

#[inline]
pub fn sub_up(a: f64, b: f64) -> f64 {
    add_up(a, -b)
}

/// Round-down product.
#[inline]
pub fn mul_down(a: f64, b: f64) -> f64 {
    let p = a * b;
    if !p.is_finite() {
        return if p.is_nan() { p } else { p.next_down() };
    }
    if a == 0.0 || b == 0.0 {
        return 0.0;
    }
    if p.abs() < TINY {
        return p.next_down();
    }
    if a.mul_add(b, -p) < 0.0 {
        p.next_down()
    } else {
        p
    }
}

#[inline]
pub fn mul_up(a: f64, b: f64) -> f64 {
    -mul_down(-a, b)
}

/// Round-down quotient; `b` must be nonzero.
#[inline]
pub fn div_down(a: f64, b: f64) -> f64 {
    let q = a / b;
    if !q.is_finite() {
        return if q.is_nan() { q } else { q.next_down() };
    }
    if a == 0.0 {
        return 0.0;
    }
    if q.abs() < TINY || a.abs() < TINY {
        return q.next_down();
    }
    // exact remainder a - q*b; q too large iff remainder/b < 0
    let r = (-q).mul_add(b, a);
    if (r < 0.0) != (b < 0.0) && r != 0.0 {
        q.next_down()
    } else {
        q
    }
}

#[inline]
pub fn div_up(a: f64, b: f64) -> f64 {
    -div_down(-a, b)
}

/// Round-down square root of a nonnegative number.
#[inline]
pub fn sqrt_down(x: f64) -> f64 {
    let s = x.sqrt();
    if x == 0.0 || !s.is_finite() {
        return s;
    }
    if x < TINY {
        return s.next_down().max(0.0);
    }
    if (-s).mul_add(s, x) < 0.0 {
        s.next_down()
    } else {
        s
    }
}

#[inline]
pub fn sqrt_up(x: f64) -> f64 {
    let s = x.sqrt();
    if x == 0.0 || !s.is_finite() {
        return s;
    }
    if x < TINY {
        return s.next_up();
    }
    if (-s).mul_add(s, x) > 0.0 {
        s.next_up()
    } else {
        s
    }
}

/// A closed interval `[lo, hi]` of reals.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Interval {
    pub lo: f64,
    pub hi: f64,
}

impl Interval {
    pub fn new(lo: f64, hi: f64) -> Result<Self, IntervalError> {
        if lo.is_nan() || hi.is_nan() || lo > hi {
            return Err(IntervalError::Invalid(lo, hi));
        }
        Ok(Self { lo, hi })
    }

    pub const fn point(x: f64) -> Self {
        Self { lo: x, hi: x }
    }

    /// Enclosure of a real that `x` only approximates to within half an
    /// ulp, e.g. a decimal literal such as `0.1`.
    pub fn around(x: f64) -> Self {
        if x == 0.0 {
            return Self::point(0.0);
        }
        Self {
            lo: x.next_down(),
            hi: x.next_up(),
        }
    }

    pub fn pi() -> Self {
        // f64 PI is the double just below pi
        Self {
            lo: std::f64::consts::PI,
            hi: std::f64::consts::PI.next_up(),
        }
    }

    pub fn from_ratio(num: f64, den: f64) -> Self {
        Self::point(num).div(Self::point(den)).expect("nonzero denominator")
    }

    pub fn mid(&self) -> f64 {
        if self.lo == self.hi {
            self.lo
        } else {
            self.lo * 0.5 + self.hi * 0.5
        }
    }

    pub fn width(&self) -> f64 {
        sub_up(self.hi, self.lo)
    }

    pub fn mag(&self) -> f64 {
        self.lo.abs().max(self.hi.abs())
    }

    pub fn mig(&self) -> f64 {
        if self.lo > 0.0 {
            self.lo
        } else if self.hi < 0.0 {
            -self.hi
        } else {
            0.0
        }
    }

    pub fn contains(&self, x: f64) -> bool {
        self.lo <= x && x <= self.hi
    }

    pub fn contains_interval(&self, other: &Interval) -> bool {
        self.lo <= other.lo && other.hi <= self.hi
    }

    pub fn contains_zero(&self) -> bool {
        self.lo <= 0.0 && 0.0 <= self.hi
    }

    pub fn hull(&self, other: &Interval) -> Interval {
        Interval {
            lo: self.lo.min(other.lo),
            hi: self.hi.max(other.hi),
        }
    }

    pub fn div(self, rhs: Interval) -> Result<Interval, IntervalError> {
        if rhs.contains_zero() {
            return Err(IntervalError::DivisionByZero);
        }
        let c = [
            (self.lo, rhs.lo),
            (self.lo, rhs.hi),
            (self.hi, rhs.lo),
            (self.hi, rhs.hi),
        ];
        let lo = c.iter().map(|&(a, b)| div_down(a, b)).fold(f64::INFINITY, f64::min);
        let hi = c.iter().map(|&(a, b)| div_up(a, b)).fold(f64::NEG_INFINITY, f64::max);
        Ok(Interval { lo, hi })
    }

    pub fn sqrt(self) -> Result<Interval, IntervalError> {
        if self.lo < 0.0 {
            return Err(IntervalError::NegativeSqrt);
        }
        Ok(Interval {
            lo: sqrt_down(self.lo),
            hi: sqrt_up(self.hi),
        })
    }

    pub fn sqr(self) -> Interval {
        let lo = if self.contains_zero() {
            0.0
        } else {
            let m = self.mig();
            mul_down(m, m)
        };
        let m = self.mag();
        Interval { lo, hi: mul_up(m, m) }
    }
}

impl Add for Interval {
    type Output = Interval;
    fn add(self, rhs: Interval) -> Interval {
        Interval {
            lo: add_down(self.lo, rhs.lo),
            hi: add_up(self.hi, rhs.hi),
        }
    }
}

impl Sub for Interval {
    type Output = Interval;
    fn sub(self, rhs: Interval) -> Interval {
        Interval {
            lo: sub_down(self.lo, rhs.hi),
            hi: sub_up(self.hi, rhs.lo),
        }
    }
}

impl Neg for Interval {
    type Output = Interval;
    fn neg(self) -> Interval {
        Interval {
            lo: -self.hi,
            hi: -self.lo,
        }
    }
}

impl Mul for Interval {
    type Output = Interval;
    fn mul(self, rhs: Interval) -> Interval {
        let c = [
            (self.lo, rhs.lo),
            (self.lo, rhs.hi),
            (self.hi, rhs.lo),
            (self.hi, rhs.hi),
        ];
        let lo = c.iter().map(|&(a, b)| mul_down(a, b)).fold(f64::INFINITY, f64::min);
        let hi = c.iter().map(|&(a, b)| mul_up(a, b)).fold(f64::NEG_INFINITY, f64::max);
        Interval { lo, hi }
    }
}

impl fmt::Display for Interval {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "[{:e}, {:e}]", self.lo, self.hi)
    }
}

/// Whether a value is a certified enclosure or a bare floating-point estimate.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Mode {
    Fast,
    Rigorous,
}

impl fmt::Display for Mode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Mode::Fast => "fast",
            Mode::Rigorous => "rigorous",
        })
    }
}

/// A reported real quantity: either an estimate (`lo == hi`) or an interval
/// guaranteed to contain the exact value.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Enclosure {
    pub lo: f64,
    pub hi: f64,
    pub mode: Mode,
}

impl Enclosure {
    pub fn fast(x: f64) -> Self {
        Self {
            lo: x,
            hi: x,
            mode: Mode::Fast,
        }
    }

    pub fn rigorous(iv: Interval) -> Self {
        Self {
            lo: iv.lo,
            hi: iv.hi,
            mode: Mode::Rigorous,
        }
    }

    pub fn interval(&self) -> Interval {
        Interval {
            lo: self.lo,
            hi: self.hi,
        }
    }

    /// Midpoint, or the estimate itself in fast mode.
    pub fn value(&self) -> f64 {
        self.interval().mid()
    }

    pub fn width(&self) -> f64 {
        self.hi - self.lo
    }

    pub fn relative_width(&self) -> f64 {
        let v = self.value().abs();
        if v == 0.0 {
            self.width()
        } else {
            self.width() / v
        }
    }

    pub fn contains(&self, x: f64) -> bool {
        self.lo <= x && x <= self.hi
    }

    pub fn is_rigorous(&self) -> bool {
        self.mode == Mode::Rigorous
    }
}
