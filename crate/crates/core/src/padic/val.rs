use std::cmp::Ordering;
use std::fmt;

use num_rational::Ratio;
use num_traits::{ToPrimitive, Zero};
use serde::{Serialize, Serializer};

/// A valuation: either known exactly, or only bounded below because the
/// digits fell off the bottom of the working precision.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum Val {
    Exact(Ratio<i64>),
    AtLeast(Ratio<i64>),
}

impl Val {
    pub fn exact(v: i64) -> Self {
        Val::Exact(Ratio::from_integer(v))
    }

    pub fn at_least(b: i64) -> Self {
        Val::AtLeast(Ratio::from_integer(b))
    }

    pub fn is_exact(&self) -> bool {
        matches!(self, Val::Exact(_))
    }

    /// Exact value or the lower bound.
    pub fn bound(&self) -> Ratio<i64> {
        match *self {
            Val::Exact(v) | Val::AtLeast(v) => v,
        }
    }

    pub fn exact_value(&self) -> Option<Ratio<i64>> {
        match *self {
            Val::Exact(v) => Some(v),
            Val::AtLeast(_) => None,
        }
    }

    pub fn to_f64(&self) -> f64 {
        let b = self.bound();
        *b.numer() as f64 / *b.denom() as f64
    }

    /// Shift by a rational (valuation of a product with something of valuation `r`).
    pub fn shift(self, r: Ratio<i64>) -> Self {
        match self {
            Val::Exact(v) => Val::Exact(v + r),
            Val::AtLeast(v) => Val::AtLeast(v + r),
        }
    }

    /// Valuation of a sum of terms with these valuations, in the worst case.
    pub fn add(self, other: Val) -> Val {
        match (self, other) {
            (Val::Exact(a), Val::Exact(b)) => Val::Exact(a + b),
            (a, b) => Val::AtLeast(a.bound() + b.bound()),
        }
    }

    fn key(&self) -> (Ratio<i64>, u8) {
        match *self {
            Val::Exact(v) => (v, 0),
            Val::AtLeast(v) => (v, 1),
        }
    }
}

impl Ord for Val {
    fn cmp(&self, other: &Self) -> Ordering {
        self.key().cmp(&other.key())
    }
}

impl PartialOrd for Val {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

fn fmt_ratio(r: &Ratio<i64>) -> String {
    if r.is_integer() {
        r.numer().to_string()
    } else {
        format!("{}/{}", r.numer(), r.denom())
    }
}

impl fmt::Display for Val {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Val::Exact(v) => write!(f, "{}", fmt_ratio(v)),
            Val::AtLeast(v) => write!(f, ">={}", fmt_ratio(v)),
        }
    }
}

/// Exact integers become JSON numbers; everything else a string
/// ("3/2", ">=64").
impl Serialize for Val {
    fn serialize<S: Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        match self {
            Val::Exact(v) if v.is_integer() => s.serialize_i64(*v.numer()),
            _ => s.serialize_str(&self.to_string()),
        }
    }
}

pub fn ratio_to_f64(r: &Ratio<i64>) -> f64 {
    if r.is_zero() {
        0.0
    } else {
        r.numer().to_f64().unwrap_or(0.0) / r.denom().to_f64().unwrap_or(1.0)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn at_least_sorts_above_equal_exact() {
        assert!(Val::at_least(5) > Val::exact(5));
        assert!(Val::at_least(5) > Val::exact(4));
        assert!(Val::at_least(5) < Val::exact(6));
        assert!(Val::Exact(Ratio::new(7, 2)) < Val::at_least(4));
    }

    #[test]
    fn display_and_json() {
        assert_eq!(Val::exact(-3).to_string(), "-3");
        assert_eq!(Val::Exact(Ratio::new(3, 2)).to_string(), "3/2");
        assert_eq!(Val::at_least(64).to_string(), ">=64");
        assert_eq!(serde_json::to_string(&Val::exact(2)).unwrap(), "2");
        assert_eq!(serde_json::to_string(&Val::at_least(8)).unwrap(), "\">=8\"");
    }
}
