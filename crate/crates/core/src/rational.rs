use num_integer::Integer;
use num_traits::{Signed, Zero};

/// Exact rational used for probabilities and cost values.
pub type Rational = num_rational::Ratio<i128>;

/// Canonical text form: integers as-is, dyadic fractions as exact decimals,
/// anything else as `num/den`.
pub fn format_rational(value: &Rational) -> String {
    let (num, den) = (*value.numer(), *value.denom());
    if den == 1 {
        return num.to_string();
    }
    if den.count_ones() != 1 {
        return format!("{num}/{den}");
    }
    let digits = den.trailing_zeros() as usize;
    // num/2^k == num*5^k / 10^k
    let scaled = num.abs() * 5i128.pow(digits as u32);
    let pow10 = 10i128.pow(digits as u32);
    let (int, frac) = scaled.div_rem(&pow10);
    let sign = if value.is_negative() { "-" } else { "" };
    let mut frac = format!("{frac:0digits$}");
    while frac.ends_with('0') {
        frac.pop();
    }
    if frac.is_empty() || value.is_zero() {
        format!("{sign}{int}")
    } else {
        format!("{sign}{int}.{frac}")
    }
}
