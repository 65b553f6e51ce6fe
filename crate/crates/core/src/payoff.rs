//! Deviation costs, their expectation over tie lotteries, and social cost.

use std::cmp::Ordering;
use std::fmt;
use std::iter::Sum;
use std::ops::Add;
use std::str::FromStr;

use num_traits::{ToPrimitive, Zero};

use crate::error::{Error, Result};
use crate::fcfs::{Agent, Allocation, AllocationLottery, Scenario};
use crate::rational::{format_rational, Rational};
use crate::time::GridTime;

/// Largest integer exponent evaluated in exact arithmetic.
pub const MAX_EXACT_EXPONENT: u32 = 8;

/// Strictly increasing, strictly convex cost of a deviation `|t - desired|`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Default)]
pub enum CostModel {
    /// `c(x) = x^2`.
    #[default]
    Quadratic,
    /// `c(x) = x^(num/den)` with `num/den > 1`.
    Power { num: u32, den: u32 },
}

impl CostModel {
    pub fn power(exponent: u32) -> Result<CostModel> {
        CostModel::rational_power(exponent, 1)
    }

    pub fn rational_power(num: u32, den: u32) -> Result<CostModel> {
        if den == 0 || num <= den {
            return Err(Error::InvalidCostModel(format!(
                "exponent {num}/{den} must be greater than 1"
            )));
        }
        let g = num_integer::gcd(num, den);
        let (num, den) = (num / g, den / g);
        if den == 1 && num > MAX_EXACT_EXPONENT {
            return Err(Error::InvalidCostModel(format!(
                "integer exponent {num} above {MAX_EXACT_EXPONENT} is not supported"
            )));
        }
        Ok(CostModel::Power { num, den })
    }

    pub fn is_exact(&self) -> bool {
        match self {
            CostModel::Quadratic => true,
            CostModel::Power { den, .. } => *den == 1,
        }
    }

    /// Cost of a deviation given in time units (sign ignored).
    pub fn eval(&self, deviation: GridTime) -> CostValue {
        let half = deviation.abs().half_units() as i128;
        let exact = |p: u32| CostValue::Exact(Rational::new(half.pow(p), 2i128.pow(p)));
        match *self {
            CostModel::Quadratic => exact(2),
            CostModel::Power { num, den: 1 } => exact(num),
            CostModel::Power { num, den } => {
                let x = half as f64 / 2.0;
                CostValue::Approx(x.powf(num as f64 / den as f64))
            }
        }
    }
}

impl fmt::Display for CostModel {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            CostModel::Quadratic => f.write_str("quadratic"),
            CostModel::Power { num, den: 1 } => write!(f, "power:{num}"),
            CostModel::Power { num, den } => write!(f, "power:{num}/{den}"),
        }
    }
}

/// Parses `quadratic`, `power:<p>` with `p` an integer, `a/b` or a decimal.
impl FromStr for CostModel {
    type Err = Error;

    fn from_str(s: &str) -> Result<CostModel> {
        let s = s.trim();
        if s == "quadratic" {
            return Ok(CostModel::Quadratic);
        }
        let bad = || Error::InvalidCostModel(format!("unrecognised cost model `{s}`"));
        let exp = s.strip_prefix("power:").ok_or_else(bad)?.trim();
        let parse = |x: &str| x.trim().parse::<u32>().map_err(|_| bad());
        if let Some((n, d)) = exp.split_once('/') {
            return CostModel::rational_power(parse(n)?, parse(d)?);
        }
        if let Some((int, frac)) = exp.split_once('.') {
            let den = 10u32.checked_pow(frac.len() as u32).ok_or_else(bad)?;
            let num = parse(int)?
                .checked_mul(den)
                .and_then(|v| v.checked_add(parse(frac).ok()?))
                .ok_or_else(bad)?;
            return CostModel::rational_power(num, den);
        }
        CostModel::power(parse(exp)?)
    }
}

/// A cost value: exact rational, or an `f64` for non-integer exponents.
#[derive(Debug, Clone, Copy)]
pub enum CostValue {
    Exact(Rational),
    Approx(f64),
}

impl CostValue {
    pub fn zero() -> CostValue {
        CostValue::Exact(Rational::zero())
    }

    pub fn is_exact(&self) -> bool {
        matches!(self, CostValue::Exact(_))
    }

    pub fn exact(&self) -> Option<Rational> {
        match self {
            CostValue::Exact(r) => Some(*r),
            CostValue::Approx(_) => None,
        }
    }

    pub fn to_f64(&self) -> f64 {
        match self {
            CostValue::Exact(r) => r.to_f64().unwrap_or(f64::NAN),
            CostValue::Approx(x) => *x,
        }
    }

    pub fn is_zero(&self) -> bool {
        match self {
            CostValue::Exact(r) => r.is_zero(),
            CostValue::Approx(x) => *x == 0.0,
        }
    }

    pub fn scale(self, p: Rational) -> CostValue {
        match self {
            CostValue::Exact(r) => CostValue::Exact(r * p),
            CostValue::Approx(x) => CostValue::Approx(x * p.to_f64().unwrap_or(f64::NAN)),
        }
    }
}

impl Add for CostValue {
    type Output = CostValue;
    fn add(self, rhs: CostValue) -> CostValue {
        match (self, rhs) {
            (CostValue::Exact(a), CostValue::Exact(b)) => CostValue::Exact(a + b),
            (a, b) => CostValue::Approx(a.to_f64() + b.to_f64()),
        }
    }
}

impl Sum for CostValue {
    fn sum<I: Iterator<Item = CostValue>>(iter: I) -> CostValue {
        iter.fold(CostValue::zero(), Add::add)
    }
}

impl Ord for CostValue {
    fn cmp(&self, other: &Self) -> Ordering {
        match (self, other) {
            (CostValue::Exact(a), CostValue::Exact(b)) => a.cmp(b),
            (a, b) => a.to_f64().total_cmp(&b.to_f64()),
        }
    }
}

impl PartialOrd for CostValue {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

impl PartialEq for CostValue {
    fn eq(&self, other: &Self) -> bool {
        self.cmp(other) == Ordering::Equal
    }
}

impl Eq for CostValue {}

impl From<i64> for CostValue {
    fn from(v: i64) -> Self {
        CostValue::Exact(Rational::from_integer(v as i128))
    }
}

impl fmt::Display for CostValue {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            CostValue::Exact(r) => f.write_str(&format_rational(r)),
            CostValue::Approx(x) => write!(f, "~{x:.6}"),
        }
    }
}

pub fn agent_cost(
    model: CostModel,
    allocation: &Allocation,
    scenario: &Scenario,
    agent: Agent,
) -> CostValue {
    model.eval(allocation.time(agent) - scenario.profile(agent).desired)
}

pub fn expected_agent_cost(
    model: CostModel,
    lottery: &AllocationLottery,
    scenario: &Scenario,
    agent: Agent,
) -> CostValue {
    lottery
        .branches()
        .iter()
        .map(|(p, a)| agent_cost(model, a, scenario, agent).scale(*p))
        .sum()
}

pub fn allocation_social_cost(
    model: CostModel,
    allocation: &Allocation,
    scenario: &Scenario,
) -> CostValue {
    Agent::BOTH
        .iter()
        .map(|&a| agent_cost(model, allocation, scenario, a))
        .sum()
}

/// Sum of both agents' deviation costs, in expectation over the lottery.
pub fn social_cost(
    model: CostModel,
    lottery: &AllocationLottery,
    scenario: &Scenario,
) -> CostValue {
    lottery
        .branches()
        .iter()
        .map(|(p, a)| allocation_social_cost(model, a, scenario).scale(*p))
        .sum()
}

/// Checks `c(0) = 0`, strict monotonicity and strict midpoint convexity on
/// every whole-tick deviation in `0..=span`.
pub fn check_convexity(model: CostModel, tick: GridTime, span: GridTime) -> bool {
    let steps = span.half_units() / tick.half_units().max(1);
    let c = |k: i64| model.eval(GridTime::from_half_units(k * tick.half_units()));
    if !c(0).is_zero() {
        return false;
    }
    for x in 0..steps {
        if c(x + 1) <= c(x) {
            return false;
        }
    }
    for x in 1..=steps {
        for h in 1..=x.min(steps - x) {
            if c(x - h) + c(x + h) <= c(x) + c(x) {
                return false;
            }
        }
    }
    true
}
