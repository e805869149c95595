//! Exact percentage arithmetic.
//!
//! Every coefficient in this crate is a ratio of machine integers, never a
//! binary float. [`Rational`] is the working scalar; [`Percent`] wraps a
//! rational confined to the closed interval [0, 100]. Rounding happens once,
//! at the display edge, and always half-up.

use std::fmt;

use num_rational::Ratio;
use num_traits::{Signed, Zero};
use serde::{Serialize, Serializer};

use crate::model::ModelError;

/// Exact scalar used throughout the engine. `i128` leaves ample headroom for
/// weighted sums over large cases.
pub type Rational = Ratio<i128>;

/// Nearest integer, halves rounded upward. Callers pass nonnegative values.
pub(crate) fn round_half_up(value: Rational) -> i128 {
    debug_assert!(!value.is_negative());
    let (p, q) = (*value.numer(), *value.denom());
    (2 * p + q).div_euclid(2 * q)
}

/// Nearest integer with halves away from zero, for signed display values
/// such as discrepancy deltas.
pub(crate) fn round_half_away(value: Rational) -> i128 {
    let magnitude = round_half_up(value.abs());
    if value.is_negative() {
        -magnitude
    } else {
        magnitude
    }
}

/// Renders a signed rational to two decimals (`"-30.79"`, `"0.88"`).
pub fn display_signed(value: Rational) -> String {
    let h = round_half_away(value * Rational::from_integer(100));
    let sign = if h < 0 { "-" } else { "" };
    format!("{}{}.{:02}", sign, h.abs() / 100, h.abs() % 100)
}

/// Parses a plain decimal literal (`"62.04"`, `"0.5"`, `"-3"`) into an exact
/// rational. Exponents, blank parts, and stray characters are rejected
/// rather than coerced.
pub fn parse_decimal(text: &str) -> Result<Rational, ModelError> {
    let malformed = || ModelError::MalformedNumber {
        text: text.to_string(),
    };
    let (negative, body) = match text.strip_prefix('-') {
        Some(rest) => (true, rest),
        None => (false, text),
    };
    let (int_part, frac_part) = match body.split_once('.') {
        Some((i, f)) => (i, f),
        None => (body, ""),
    };
    if int_part.is_empty() || !int_part.bytes().all(|b| b.is_ascii_digit()) {
        return Err(malformed());
    }
    if body.contains('.') && (frac_part.is_empty() || !frac_part.bytes().all(|b| b.is_ascii_digit()))
    {
        return Err(malformed());
    }
    if frac_part.len() > 18 {
        return Err(malformed());
    }
    let scale = 10i128.pow(frac_part.len() as u32);
    let int: i128 = int_part.parse().map_err(|_| malformed())?;
    let frac: i128 = if frac_part.is_empty() {
        0
    } else {
        frac_part.parse().map_err(|_| malformed())?
    };
    let numer = int
        .checked_mul(scale)
        .and_then(|v| v.checked_add(frac))
        .ok_or_else(malformed)?;
    Ok(Rational::new(if negative { -numer } else { numer }, scale))
}

/// Parses a decimal literal or a fraction literal (`"1/3"`).
pub fn parse_exact(text: &str) -> Result<Rational, ModelError> {
    let malformed = || ModelError::MalformedNumber {
        text: text.to_string(),
    };
    match text.split_once('/') {
        None => parse_decimal(text),
        Some((num, den)) => {
            let p: i128 = num.parse().map_err(|_| malformed())?;
            let q: i128 = den.parse().map_err(|_| malformed())?;
            if q <= 0 || den.starts_with('+') || num.starts_with('+') {
                return Err(malformed());
            }
            Ok(Rational::new(p, q))
        }
    }
}

/// Renders a rational losslessly: an integer when whole, the shortest
/// terminating decimal when one exists, `p/q` otherwise.
pub fn render_exact(value: Rational) -> String {
    let (p, q) = (*value.numer(), *value.denom());
    if q == 1 {
        return p.to_string();
    }
    let (mut twos, mut fives, mut rest) = (0u32, 0u32, q);
    while rest % 2 == 0 {
        rest /= 2;
        twos += 1;
    }
    while rest % 5 == 0 {
        rest /= 5;
        fives += 1;
    }
    let digits = twos.max(fives);
    let scaled = 10i128
        .checked_pow(digits)
        .and_then(|scale| p.checked_mul(scale))
        .map(|v| v / q);
    match (rest, scaled) {
        (1, Some(scaled)) => {
            let scale = 10i128.pow(digits);
            let sign = if scaled < 0 { "-" } else { "" };
            format!(
                "{}{}.{:0width$}",
                sign,
                scaled.abs() / scale,
                scaled.abs() % scale,
                width = digits as usize
            )
        }
        _ => format!("{p}/{q}"),
    }
}

/// A percentage held exactly, always within [0, 100].
#[derive(Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Debug)]
pub struct Percent(Rational);

impl Percent {
    pub const ZERO: Percent = Percent(Rational::new_raw(0, 1));

    /// Wraps a rational percentage, rejecting values outside [0, 100].
    pub fn new(value: Rational) -> Result<Self, ModelError> {
        if value.is_negative() || value > Rational::from_integer(100) {
            return Err(ModelError::PercentOutOfRange {
                text: render_exact(value),
            });
        }
        Ok(Percent(value))
    }

    /// Parses a decimal or fraction literal and range-checks it.
    pub fn parse(text: &str) -> Result<Self, ModelError> {
        let value = parse_exact(text)?;
        Percent::new(value).map_err(|_| ModelError::PercentOutOfRange {
            text: text.to_string(),
        })
    }

    /// Scales a mean of unit-interval values up to a percentage.
    pub(crate) fn from_unit(value: Rational) -> Self {
        debug_assert!(!value.is_negative() && value <= Rational::from_integer(1));
        Percent(value * Rational::from_integer(100))
    }

    /// The exact value, in percent units.
    pub fn value(self) -> Rational {
        self.0
    }

    /// The exact value divided back to the unit interval.
    pub fn unit(self) -> Rational {
        self.0 / Rational::from_integer(100)
    }

    /// Lossless literal for canonical serialization.
    pub fn render_exact(self) -> String {
        render_exact(self.0)
    }
}

/// Two decimals, half-up: the display convention for all percentages.
impl fmt::Display for Percent {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let h = round_half_up(self.0 * Rational::from_integer(100));
        write!(f, "{}.{:02}", h / 100, h % 100)
    }
}

impl Serialize for Percent {
    fn serialize<S: Serializer>(&self, serializer: S) -> Result<S::Ok, S::Error> {
        serializer.serialize_str(&self.render_exact())
    }
}

/// Exact mean of a nonempty sequence of percentages.
pub fn mean_percent<I: IntoIterator<Item = Percent>>(values: I) -> Option<Percent> {
    let mut sum = Rational::zero();
    let mut n = 0i128;
    for v in values {
        sum += v.value();
        n += 1;
    }
    if n == 0 {
        return None;
    }
    Some(Percent(sum / Rational::from_integer(n)))
}
