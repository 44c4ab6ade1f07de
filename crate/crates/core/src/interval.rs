//! Interval arithmetic with outward rounding.
//!
//! Every operation computes the round-to-nearest result and then nudges the
//! endpoints outward by one ulp, which contains the exact image because each
//! IEEE operation is correctly rounded to within half an ulp. Trigonometric
//! functions take their argument in *turns* (period 1), so `sin2pi(x)` is
//! `sin(2πx)`; argument reduction in turns is exact.

use std::fmt;
use std::ops::{Add, Mul, Neg, Sub};

use serde::{Deserialize, Deserializer, Serialize, Serializer};

use crate::error::{Error, Result};
use crate::hexfloat;

/// Closed interval `[lo, hi]` of reals.
#[derive(Clone, Copy, PartialEq)]
pub struct Interval {
    pub lo: f64,
    pub hi: f64,
}

/// Wire form: exact hex endpoints plus decimal mirrors for reading.
#[derive(Serialize, Deserialize)]
struct IntervalRepr {
    lo: String,
    hi: String,
    #[serde(default, skip_deserializing)]
    lo_dec: Option<f64>,
    #[serde(default, skip_deserializing)]
    hi_dec: Option<f64>,
}

impl Serialize for Interval {
    fn serialize<S: Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        IntervalRepr {
            lo: hexfloat::to_hex(self.lo),
            hi: hexfloat::to_hex(self.hi),
            lo_dec: Some(self.lo).filter(|v| v.is_finite()),
            hi_dec: Some(self.hi).filter(|v| v.is_finite()),
        }
        .serialize(s)
    }
}

impl<'de> Deserialize<'de> for Interval {
    fn deserialize<D: Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        let r = IntervalRepr::deserialize(d)?;
        let lo = hexfloat::from_hex(&r.lo).map_err(serde::de::Error::custom)?;
        let hi = hexfloat::from_hex(&r.hi).map_err(serde::de::Error::custom)?;
        if lo.is_nan() || hi.is_nan() || lo > hi {
            return Err(serde::de::Error::custom(format!("bad interval [{lo}, {hi}]")));
        }
        Ok(Interval { lo, hi })
    }
}

impl fmt::Debug for Interval {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "[{:e}, {:e}]", self.lo, self.hi)
    }
}

impl fmt::Display for Interval {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "[{}, {}]", self.lo, self.hi)
    }
}

#[inline]
fn down(x: f64) -> f64 {
    x.next_down()
}

#[inline]
fn up(x: f64) -> f64 {
    x.next_up()
}

/// Upper bound on the relative error of the point trig evaluations below,
/// counted in ulps: up to two from forming `2π·t`, one from libm, one spare.
const TRIG_ULPS: u32 = 4;

impl Interval {
    pub const ZERO: Interval = Interval { lo: 0.0, hi: 0.0 };
    pub const ONE: Interval = Interval { lo: 1.0, hi: 1.0 };
    pub const UNIT_DISK: Interval = Interval { lo: -1.0, hi: 1.0 };

    /// Builds `[lo, hi]`; panics in debug builds if `lo > hi`.
    #[inline]
    pub fn new(lo: f64, hi: f64) -> Self {
        debug_assert!(lo <= hi, "inverted interval [{lo}, {hi}]");
        Interval { lo, hi }
    }

    pub fn try_new(lo: f64, hi: f64) -> Result<Self> {
        if !lo.is_finite() || !hi.is_finite() {
            return Err(Error::NonFinite);
        }
        if lo > hi {
            return Err(Error::InvalidParams(format!("inverted interval [{lo}, {hi}]")));
        }
        Ok(Interval { lo, hi })
    }

    #[inline]
    pub fn point(x: f64) -> Self {
        Interval { lo: x, hi: x }
    }

    /// Symmetric interval `[-r, r]`.
    #[inline]
    pub fn symmetric(r: f64) -> Self {
        let r = r.abs();
        Interval { lo: -r, hi: r }
    }

    /// Encloses the rational `num / den` (both exactly representable).
    pub fn ratio(num: f64, den: f64) -> Self {
        let q = num / den;
        if q * den == num {
            Interval::point(q)
        } else {
            Interval::new(down(q), up(q))
        }
    }

    /// Widens a round-to-nearest point value by `ulps` in each direction.
    pub fn around(x: f64, ulps: u32) -> Self {
        let (mut lo, mut hi) = (x, x);
        for _ in 0..ulps {
            lo = down(lo);
            hi = up(hi);
        }
        Interval { lo, hi }
    }

    #[inline]
    pub fn width(&self) -> f64 {
        up(self.hi - self.lo)
    }

    #[inline]
    pub fn mid(&self) -> f64 {
        let m = 0.5 * self.lo + 0.5 * self.hi;
        m.clamp(self.lo, self.hi)
    }

    #[inline]
    pub fn radius(&self) -> f64 {
        let m = self.mid();
        (m - self.lo).max(self.hi - m).next_up()
    }

    /// Largest magnitude in the interval.
    #[inline]
    pub fn mag(&self) -> f64 {
        self.lo.abs().max(self.hi.abs())
    }

    /// The largest `m` with `|x| >= m` for every `x` in the interval.
    #[inline]
    pub fn abs_lower_bound(&self) -> f64 {
        if self.lo > 0.0 {
            self.lo
        } else if self.hi < 0.0 {
            -self.hi
        } else {
            0.0
        }
    }

    #[inline]
    pub fn contains(&self, x: f64) -> bool {
        self.lo <= x && x <= self.hi
    }

    #[inline]
    pub fn contains_interval(&self, other: &Interval) -> bool {
        self.lo <= other.lo && other.hi <= self.hi
    }

    #[inline]
    pub fn overlaps(&self, other: &Interval) -> bool {
        self.lo <= other.hi && other.lo <= self.hi
    }

    #[inline]
    pub fn hull(&self, other: &Interval) -> Interval {
        Interval { lo: self.lo.min(other.lo), hi: self.hi.max(other.hi) }
    }

    /// Intersection, or `None` when disjoint.
    pub fn intersect(&self, other: &Interval) -> Option<Interval> {
        let lo = self.lo.max(other.lo);
        let hi = self.hi.min(other.hi);
        (lo <= hi).then_some(Interval { lo, hi })
    }

    pub fn is_finite(&self) -> bool {
        self.lo.is_finite() && self.hi.is_finite()
    }

    /// Splits at the midpoint. Both halves share the midpoint.
    pub fn bisect(&self) -> Result<(Interval, Interval)> {
        if !self.is_finite() {
            return Err(Error::NonFinite);
        }
        let m = self.mid();
        if !(self.lo < m && m < self.hi) {
            return Err(Error::NoSplit);
        }
        Ok((Interval { lo: self.lo, hi: m }, Interval { lo: m, hi: self.hi }))
    }

    /// Adds `[-r, r]` with `r >= 0`.
    #[inline]
    pub fn widen(&self, r: f64) -> Interval {
        Interval { lo: down(self.lo - r), hi: up(self.hi + r) }
    }

    /// Multiplies by an exact scalar.
    #[inline]
    pub fn scale(&self, k: f64) -> Interval {
        let (a, b) = (self.lo * k, self.hi * k);
        Interval { lo: down(a.min(b)), hi: up(a.max(b)) }
    }

    /// Divides by an exact nonzero scalar.
    #[inline]
    pub fn div_scalar(&self, k: f64) -> Interval {
        let (a, b) = (self.lo / k, self.hi / k);
        Interval { lo: down(a.min(b)), hi: up(a.max(b)) }
    }

    /// Adds an exact scalar.
    #[inline]
    pub fn add_scalar(&self, k: f64) -> Interval {
        Interval { lo: down(self.lo + k), hi: up(self.hi + k) }
    }

    /// Integer power by repeated multiplication; `n = 0` gives `[1, 1]`.
    pub fn powi(&self, n: u32) -> Interval {
        let mut acc = Interval::ONE;
        for _ in 0..n {
            acc = acc * *self;
        }
        acc
    }

    pub fn sqr(&self) -> Interval {
        let a = self.abs_lower_bound();
        let b = self.mag();
        Interval { lo: down(a * a).max(0.0), hi: up(b * b) }
    }

    pub fn sqrt(&self) -> Interval {
        let lo = self.lo.max(0.0);
        let hi = self.hi.max(0.0);
        Interval { lo: down(lo.sqrt()).max(0.0), hi: up(hi.sqrt()) }
    }

    pub fn recip(&self) -> Result<Interval> {
        if self.contains(0.0) {
            return Err(Error::InvalidParams("reciprocal of interval containing 0".into()));
        }
        Ok(Interval { lo: down(1.0 / self.hi), hi: up(1.0 / self.lo) })
    }

    pub fn div(&self, other: &Interval) -> Result<Interval> {
        Ok(*self * other.recip()?)
    }

    /// Encloses `sin(2πx)` over the interval.
    pub fn sin2pi(&self) -> Interval {
        trig_turns(*self, 0.0)
    }

    /// Encloses `cos(2πx)` over the interval.
    pub fn cos2pi(&self) -> Interval {
        // cos(2πx) = sin(2π(x + 1/4)); the shift is applied to the critical
        // points rather than the argument, keeping endpoints exact.
        trig_turns(*self, 0.25)
    }

    pub fn checked_sin2pi(&self) -> Result<Interval> {
        if !self.is_finite() {
            return Err(Error::NonFinite);
        }
        Ok(self.sin2pi())
    }

    pub fn checked_cos2pi(&self) -> Result<Interval> {
        if !self.is_finite() {
            return Err(Error::NonFinite);
        }
        Ok(self.cos2pi())
    }
}

impl Add for Interval {
    type Output = Interval;
    #[inline]
    fn add(self, o: Interval) -> Interval {
        Interval { lo: down(self.lo + o.lo), hi: up(self.hi + o.hi) }
    }
}

impl Sub for Interval {
    type Output = Interval;
    #[inline]
    fn sub(self, o: Interval) -> Interval {
        Interval { lo: down(self.lo - o.hi), hi: up(self.hi - o.lo) }
    }
}

impl Neg for Interval {
    type Output = Interval;
    #[inline]
    fn neg(self) -> Interval {
        Interval { lo: -self.hi, hi: -self.lo }
    }
}

impl Mul for Interval {
    type Output = Interval;
    #[inline]
    fn mul(self, o: Interval) -> Interval {
        let p = [self.lo * o.lo, self.lo * o.hi, self.hi * o.lo, self.hi * o.hi];
        let lo = p.iter().copied().fold(f64::INFINITY, f64::min);
        let hi = p.iter().copied().fold(f64::NEG_INFINITY, f64::max);
        Interval { lo: down(lo), hi: up(hi) }
    }
}

/// Point enclosure of `sin(2πt)`.
///
/// Reduces `t` to `r ∈ [-1/8, 1/8]` using exact subtractions so that the
/// final libm call sees a small argument and has small relative error.
pub fn sin2pi_point(t: f64) -> Interval {
    let v = sin2pi_approx(t);
    if v == 0.0 && t == t.round() {
        return Interval::ZERO;
    }
    let iv = Interval::around(v, TRIG_ULPS);
    clamp_unit(iv)
}

/// Point enclosure of `cos(2πt)`.
pub fn cos2pi_point(t: f64) -> Interval {
    let v = cos2pi_approx(t);
    clamp_unit(Interval::around(v, TRIG_ULPS))
}

fn clamp_unit(iv: Interval) -> Interval {
    Interval { lo: iv.lo.max(-1.0), hi: iv.hi.min(1.0) }
}

/// `sin(2πt)` to a few ulps, with exact argument reduction in turns.
pub fn sin2pi_approx(t: f64) -> f64 {
    // r ∈ [-1/2, 1/2], exact
    let mut r = t - t.round();
    // fold onto [-1/4, 1/4]; 1/2 - r is exact for r ∈ [1/4, 1/2]
    if r > 0.25 {
        r = 0.5 - r;
    } else if r < -0.25 {
        r = -0.5 - r;
    }
    if r.abs() <= 0.125 {
        (std::f64::consts::TAU * r).sin()
    } else {
        // 1/4 - |r| exact (Sterbenz)
        let s = 0.25 - r.abs();
        r.signum() * (std::f64::consts::TAU * s).cos()
    }
}

/// `cos(2πt)` to a few ulps, with exact argument reduction in turns.
pub fn cos2pi_approx(t: f64) -> f64 {
    let r = (t - t.round()).abs();
    if r <= 0.125 {
        (std::f64::consts::TAU * r).cos()
    } else if r <= 0.375 {
        (std::f64::consts::TAU * (0.25 - r)).sin()
    } else {
        -(std::f64::consts::TAU * (0.5 - r)).cos()
    }
}

/// Encloses `sin(2π(x + phase))` for `phase ∈ {0, 1/4}` over `x`.
fn trig_turns(x: Interval, phase: f64) -> Interval {
    if !x.is_finite() || x.hi - x.lo >= 1.0 {
        return Interval::UNIT_DISK;
    }
    let eval = |t: f64| {
        if phase == 0.0 {
            sin2pi_point(t)
        } else {
            cos2pi_point(t)
        }
    };
    let mut out = eval(x.lo).hull(&eval(x.hi));
    // sin(2π(t + phase)) peaks at t ≡ 1/4 - phase and bottoms at 3/4 - phase.
    if contains_residue(x, 0.25 - phase) {
        out.hi = 1.0;
    }
    if contains_residue(x, 0.75 - phase) {
        out.lo = -1.0;
    }
    out
}

/// True if some `c + k` (k integer) may lie in `x`. Errs on the side of true.
fn contains_residue(x: Interval, c: f64) -> bool {
    // smallest c + k >= x.lo, with slack for rounding in the subtraction
    let k = (x.lo - c).ceil();
    let candidate = c + k;
    let slack = 4.0 * f64::EPSILON * (1.0 + x.lo.abs().max(x.hi.abs()));
    candidate <= x.hi + slack || (candidate - 1.0) >= x.lo - slack
}

/// Enclosure of π.
pub fn pi() -> Interval {
    Interval::around(std::f64::consts::PI, 1)
}

/// Enclosure of 2π.
pub fn tau() -> Interval {
    Interval::around(std::f64::consts::TAU, 1)
}
