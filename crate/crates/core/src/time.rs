//! Exact time arithmetic for the reporting grid.
//!
//! Every time value is an integer count of half time-units, so that the
//! half-tick offsets used by the socially optimal assignment (and the
//! `crossing / 2` shifts used everywhere else) stay exact. Nothing in the
//! crate touches floating point for times.

use std::fmt;
use std::ops::{Add, Neg, Sub};

use crate::error::{Error, Result};

/// A point (or a signed span) on the time axis, stored in half time-units.
///
/// A `GridTime` may lie off the reporting grid: allocated passing times can
/// exceed the upper reporting bound, and intermediate quantities such as the
/// socially optimal first-passer time can fall on a half tick.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Default)]
pub struct GridTime(i64);

impl GridTime {
    pub const ZERO: GridTime = GridTime(0);

    /// Whole time-units, as written in scenario files.
    pub const fn from_units(units: i64) -> Self {
        GridTime(units * 2)
    }

    pub const fn from_half_units(half_units: i64) -> Self {
        GridTime(half_units)
    }

    pub const fn half_units(self) -> i64 {
        self.0
    }

    /// `Some(units)` when the value sits on a whole time-unit.
    pub fn whole_units(self) -> Option<i64> {
        (self.0 % 2 == 0).then_some(self.0 / 2)
    }

    pub fn abs(self) -> Self {
        GridTime(self.0.abs())
    }

    /// Exact `(a + b) / 2`, or `None` when it would need quarter units.
    pub fn checked_midpoint(a: GridTime, b: GridTime) -> Option<GridTime> {
        let sum = a.0 + b.0;
        (sum % 2 == 0).then_some(GridTime(sum / 2))
    }

    /// Exact `(a + b) / 2`.
    ///
    /// Panics when the midpoint is not representable, which cannot happen
    /// for two whole-unit times.
    pub fn midpoint(a: GridTime, b: GridTime) -> GridTime {
        Self::checked_midpoint(a, b)
            .unwrap_or_else(|| panic!("midpoint of {a} and {b} needs quarter units"))
    }

    /// Exact half of a span; `None` when not representable.
    pub fn checked_half(self) -> Option<GridTime> {
        Self::checked_midpoint(self, GridTime::ZERO)
    }
}

impl Add for GridTime {
    type Output = GridTime;
    fn add(self, rhs: GridTime) -> GridTime {
        GridTime(self.0 + rhs.0)
    }
}

impl Sub for GridTime {
    type Output = GridTime;
    fn sub(self, rhs: GridTime) -> GridTime {
        GridTime(self.0 - rhs.0)
    }
}

impl Neg for GridTime {
    type Output = GridTime;
    fn neg(self) -> GridTime {
        GridTime(-self.0)
    }
}

/// Prints in time-units; half values as `n+1/2` with `n = floor(t)`.
impl fmt::Display for GridTime {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let whole = self.0.div_euclid(2);
        if self.0.rem_euclid(2) == 0 {
            write!(f, "{whole}")
        } else {
            write!(f, "{whole}+1/2")
        }
    }
}

/// The finite, totally ordered set of reportable times.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct TimeGrid {
    tick: GridTime,
    lower: GridTime,
    upper: GridTime,
}

impl TimeGrid {
    /// Builds a grid from whole time-units: tick size and inclusive bounds.
    ///
    /// Ticks are counted from `lower`, so `upper - lower` must be a whole
    /// number of ticks.
    pub fn new(tick_units: i64, lower_units: i64, upper_units: i64) -> Result<Self> {
        if tick_units <= 0 {
            return Err(Error::InvalidGrid(format!(
                "tick must be positive, got {tick_units}"
            )));
        }
        if lower_units > upper_units {
            return Err(Error::InvalidGrid(format!(
                "lower bound {lower_units} exceeds upper bound {upper_units}"
            )));
        }
        if (upper_units - lower_units) % tick_units != 0 {
            return Err(Error::InvalidGrid(format!(
                "bounds [{lower_units}, {upper_units}] are not a whole number of ticks of {tick_units}"
            )));
        }
        Ok(TimeGrid {
            tick: GridTime::from_units(tick_units),
            lower: GridTime::from_units(lower_units),
            upper: GridTime::from_units(upper_units),
        })
    }

    pub fn tick(&self) -> GridTime {
        self.tick
    }

    pub fn half_tick(&self) -> GridTime {
        // tick is an even number of half-units by construction
        GridTime(self.tick.0 / 2)
    }

    pub fn lower(&self) -> GridTime {
        self.lower
    }

    pub fn upper(&self) -> GridTime {
        self.upper
    }

    /// True iff `t` is a whole tick (counted from the lower bound).
    pub fn is_whole_tick(&self, t: GridTime) -> bool {
        (t.0 - self.lower.0).rem_euclid(self.tick.0) == 0
    }

    pub fn contains(&self, t: GridTime) -> bool {
        self.lower <= t && t <= self.upper && self.is_whole_tick(t)
    }

    pub fn len(&self) -> usize {
        ((self.upper.0 - self.lower.0) / self.tick.0) as usize + 1
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    /// Position of a member in `enumerate()`.
    pub fn index_of(&self, t: GridTime) -> Option<usize> {
        self.contains(t)
            .then(|| ((t.0 - self.lower.0) / self.tick.0) as usize)
    }

    pub fn at(&self, index: usize) -> GridTime {
        GridTime(self.lower.0 + index as i64 * self.tick.0)
    }

    pub fn iter(&self) -> impl DoubleEndedIterator<Item = GridTime> + ExactSizeIterator + '_ {
        (0..self.len()).map(move |k| self.at(k))
    }

    pub fn enumerate(&self) -> Vec<GridTime> {
        self.iter().collect()
    }

    /// Whole ticks in `[from, to]`, not restricted to the reporting bounds.
    pub fn ticks_between(&self, from: GridTime, to: GridTime) -> Vec<GridTime> {
        let tick = self.tick.0;
        let offset = (from.0 - self.lower.0).rem_euclid(tick);
        let first = if offset == 0 {
            from.0
        } else {
            from.0 + tick - offset
        };
        let mut out = Vec::new();
        let mut t = first;
        while t <= to.0 {
            out.push(GridTime(t));
            t += tick;
        }
        out
    }

    /// Grid members in the half-open interval `[from, to)`.
    pub fn members_in(&self, from: GridTime, to: GridTime) -> Vec<GridTime> {
        self.iter().filter(|&t| from <= t && t < to).collect()
    }
}

impl fmt::Display for TimeGrid {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "[{}, {}] step {}", self.lower, self.upper, self.tick)
    }
}
