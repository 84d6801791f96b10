use std::cmp::Ordering;
use std::fmt;

use crate::error::{Error, Result};

/// A non-negative or negative half-integer stored as twice its value.
///
/// Spins, quasispins and the sublevel degeneracy `Omega` are all of this form.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Default)]
pub struct HalfInt(i64);

impl HalfInt {
    pub const ZERO: HalfInt = HalfInt(0);
    pub const HALF: HalfInt = HalfInt(1);

    pub const fn from_twice(twice: i64) -> Self {
        HalfInt(twice)
    }

    pub const fn from_int(n: i64) -> Self {
        HalfInt(2 * n)
    }

    /// Accepts `x` only when `2x` is an integer (to within 1e-9).
    pub fn from_f64(x: f64) -> Result<Self> {
        let t = 2.0 * x;
        let r = t.round();
        if !x.is_finite() || (t - r).abs() > 1e-9 {
            return Err(Error::InvalidArgument(format!("{x} is not a half-integer")));
        }
        Ok(HalfInt(r as i64))
    }

    pub const fn twice(self) -> i64 {
        self.0
    }

    pub fn value(self) -> f64 {
        self.0 as f64 / 2.0
    }

    pub const fn is_integer(self) -> bool {
        self.0 % 2 == 0
    }

    /// Integer value, if this is an integer.
    pub const fn as_int(self) -> Option<i64> {
        if self.0 % 2 == 0 {
            Some(self.0 / 2)
        } else {
            None
        }
    }

    /// Multiplet dimension `2s + 1`.
    pub fn multiplet(self) -> usize {
        debug_assert!(self.0 >= 0);
        (self.0 + 1) as usize
    }

    /// Projections `s, s-1, ..., -s`, the basis order used everywhere.
    pub fn projections(self) -> impl Iterator<Item = HalfInt> {
        let s = self.0;
        (0..=s).map(move |i| HalfInt(s - 2 * i))
    }

    /// Values `0` or `1/2` (matching parity), ..., up to `self`.
    pub fn range_to(self, start: HalfInt) -> impl Iterator<Item = HalfInt> {
        (start.0..=self.0).step_by(2).map(HalfInt)
    }
}

impl std::ops::Add for HalfInt {
    type Output = HalfInt;
    fn add(self, rhs: HalfInt) -> HalfInt {
        HalfInt(self.0 + rhs.0)
    }
}

impl std::ops::Sub for HalfInt {
    type Output = HalfInt;
    fn sub(self, rhs: HalfInt) -> HalfInt {
        HalfInt(self.0 - rhs.0)
    }
}

impl PartialEq<f64> for HalfInt {
    fn eq(&self, other: &f64) -> bool {
        self.value() == *other
    }
}

impl PartialOrd<f64> for HalfInt {
    fn partial_cmp(&self, other: &f64) -> Option<Ordering> {
        self.value().partial_cmp(other)
    }
}

impl fmt::Display for HalfInt {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.0 % 2 == 0 {
            write!(f, "{}", self.0 / 2)
        } else {
            write!(f, "{}/2", self.0)
        }
    }
}
