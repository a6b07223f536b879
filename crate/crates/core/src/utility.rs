//! The λ-parameterized utility family over pairs of metaclusters.
//!
//! `U(A, B)` scores the satisfaction of answering `A` when the truth is `B`.
//! Positive λ tolerates excessive coverage (`B ⊆ A`), negative λ tolerates
//! insufficient coverage (`A ⊆ B`); `λ = 0` only accepts exact answers.

use std::fmt;
use std::str::FromStr;

use serde::de::{self, Visitor};
use serde::{Deserialize, Deserializer, Serialize, Serializer};
use thiserror::Error;

use crate::belief::Subset;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum UtilityError {
    #[error("utility is undefined on the empty set")]
    EmptySubset,
    #[error("cannot parse {0:?} as lambda (expected a decimal, \"inf\" or \"-inf\")")]
    BadLambda(String),
    #[error("utility violates its axioms at ({a}, {b}): value {value}")]
    AxiomViolation { a: Subset, b: Subset, value: f64 },
}

/// Extended-real parameter λ ∈ ℝ ∪ {−∞, +∞}. Never NaN; `-0.0` is stored as `0.0`.
#[derive(Debug, Clone, Copy, PartialEq, PartialOrd)]
pub struct Lambda(f64);

impl Lambda {
    pub const NEG_INFINITY: Lambda = Lambda(f64::NEG_INFINITY);
    pub const ZERO: Lambda = Lambda(0.0);
    pub const INFINITY: Lambda = Lambda(f64::INFINITY);

    pub fn new(value: f64) -> Option<Self> {
        (!value.is_nan()).then_some(Lambda(value + 0.0))
    }

    pub fn value(self) -> f64 {
        self.0
    }

    pub fn kind(self) -> UtilityKind {
        match self.0 {
            v if v == f64::NEG_INFINITY => UtilityKind::LowerLimit,
            v if v == f64::INFINITY => UtilityKind::UpperLimit,
            v if v < 0.0 => UtilityKind::Underline,
            v if v > 0.0 => UtilityKind::Overline,
            _ => UtilityKind::Point,
        }
    }

    /// Parses a comma-separated list such as `"-inf,-1,0,1,inf"`.
    pub fn parse_list(text: &str) -> Result<Vec<Lambda>, UtilityError> {
        text.split(',').map(|t| t.trim().parse()).collect()
    }
}

impl FromStr for Lambda {
    type Err = UtilityError;

    /// Accepts decimals, `inf`, `+inf` and `-inf`; a leading `−` (U+2212)
    /// reads as a minus sign.
    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let t = s.trim().replace('\u{2212}', "-");
        let t = t.as_str();
        match t.to_ascii_lowercase().as_str() {
            "inf" | "+inf" => Ok(Lambda::INFINITY),
            "-inf" => Ok(Lambda::NEG_INFINITY),
            lower if lower.contains("inf") || lower.contains("nan") => Err(UtilityError::BadLambda(s.to_string())),
            _ => t
                .parse::<f64>()
                .ok()
                .and_then(Lambda::new)
                .ok_or_else(|| UtilityError::BadLambda(s.to_string())),
        }
    }
}

impl fmt::Display for Lambda {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self.kind() {
            UtilityKind::UpperLimit => f.write_str("inf"),
            UtilityKind::LowerLimit => f.write_str("-inf"),
            _ => write!(f, "{}", self.0),
        }
    }
}

impl Serialize for Lambda {
    fn serialize<S: Serializer>(&self, serializer: S) -> Result<S::Ok, S::Error> {
        serializer.collect_str(self)
    }
}

impl<'de> Deserialize<'de> for Lambda {
    fn deserialize<D: Deserializer<'de>>(deserializer: D) -> Result<Self, D::Error> {
        struct LambdaVisitor;
        impl Visitor<'_> for LambdaVisitor {
            type Value = Lambda;
            fn expecting(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
                f.write_str("a number or one of \"inf\", \"-inf\"")
            }
            fn visit_str<E: de::Error>(self, v: &str) -> Result<Lambda, E> {
                v.parse().map_err(E::custom)
            }
            fn visit_f64<E: de::Error>(self, v: f64) -> Result<Lambda, E> {
                Lambda::new(v).ok_or_else(|| E::custom("lambda is NaN"))
            }
            fn visit_i64<E: de::Error>(self, v: i64) -> Result<Lambda, E> {
                Ok(Lambda(v as f64))
            }
            fn visit_u64<E: de::Error>(self, v: u64) -> Result<Lambda, E> {
                Ok(Lambda(v as f64))
            }
        }
        deserializer.deserialize_any(LambdaVisitor)
    }
}

/// Which branch of the family a λ selects.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum UtilityKind {
    /// λ ∈ (−∞, 0)
    Underline,
    /// λ = 0
    Point,
    /// λ ∈ (0, ∞)
    Overline,
    /// λ = −∞
    LowerLimit,
    /// λ = +∞
    UpperLimit,
}

/// A utility over non-empty subsets.
///
/// Implementations must satisfy `U(A, A) = 1`, `A ∩ B = ∅ ⇒ U(A, B) = 0` and
/// range `[0, 1]`; [`UtilityTable::new`] checks this on the focal sets in use.
pub trait Utility {
    fn eval(&self, a: Subset, b: Subset) -> f64;
}

impl<U: Utility + ?Sized> Utility for &U {
    fn eval(&self, a: Subset, b: Subset) -> f64 {
        (**self).eval(a, b)
    }
}

/// Adapter turning a closure into a [`Utility`].
pub struct FnUtility<F>(pub F);

impl<F: Fn(Subset, Subset) -> f64> Utility for FnUtility<F> {
    fn eval(&self, a: Subset, b: Subset) -> f64 {
        (self.0)(a, b)
    }
}

/// `U^λ`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct UtilitySpec {
    lambda: Lambda,
    kind: UtilityKind,
}

impl UtilitySpec {
    pub fn new(lambda: Lambda) -> Self {
        Self { lambda, kind: lambda.kind() }
    }

    pub fn lambda(&self) -> Lambda {
        self.lambda
    }

    pub fn kind(&self) -> UtilityKind {
        self.kind
    }

    pub fn utility(&self, a: Subset, b: Subset) -> Result<f64, UtilityError> {
        if a.is_empty() || b.is_empty() {
            return Err(UtilityError::EmptySubset);
        }
        Ok(self.eval(a, b))
    }
}

impl From<Lambda> for UtilitySpec {
    fn from(lambda: Lambda) -> Self {
        Self::new(lambda)
    }
}

impl Utility for UtilitySpec {
    fn eval(&self, a: Subset, b: Subset) -> f64 {
        let indicator = |holds: bool| if holds { 1.0 } else { 0.0 };
        match self.kind {
            UtilityKind::Point => indicator(a == b),
            UtilityKind::UpperLimit => indicator(b.is_subset_of(a)),
            UtilityKind::LowerLimit => indicator(a.is_subset_of(b)),
            UtilityKind::Overline if b.is_subset_of(a) => jaccard_power(a, b, self.lambda.0),
            UtilityKind::Underline if a.is_subset_of(b) => jaccard_power(a, b, -self.lambda.0),
            _ => 0.0,
        }
    }
}

fn jaccard_power(a: Subset, b: Subset, exponent_inverse: f64) -> f64 {
    let inter = a.intersection(b).len();
    let union = a.union(b).len();
    if inter == union {
        return 1.0;
    }
    (inter as f64 / union as f64).powf(1.0 / exponent_inverse)
}

/// Utility values between every pair of focal sets, `table[a][b] = U(A_a, A_b)`.
#[derive(Debug, Clone, PartialEq)]
pub struct UtilityTable {
    k: usize,
    values: Vec<f64>,
}

impl UtilityTable {
    /// Evaluates `utility` on all pairs of `focal` and rejects it if any
    /// axiom fails on those pairs.
    pub fn new(utility: &dyn Utility, focal: &[Subset]) -> Result<Self, UtilityError> {
        let k = focal.len();
        let mut values = Vec::with_capacity(k * k);
        for &a in focal {
            if a.is_empty() {
                return Err(UtilityError::EmptySubset);
            }
            for &b in focal {
                let value = utility.eval(a, b);
                let ok = (0.0..=1.0).contains(&value)
                    && (a != b || value == 1.0)
                    && (a.intersects(b) || value == 0.0);
                if !ok {
                    return Err(UtilityError::AxiomViolation { a, b, value });
                }
                values.push(value);
            }
        }
        Ok(Self { k, values })
    }

    pub fn get(&self, a: usize, b: usize) -> f64 {
        self.values[a * self.k + b]
    }

    pub fn row(&self, a: usize) -> &[f64] {
        &self.values[a * self.k..(a + 1) * self.k]
    }

    pub fn len(&self) -> usize {
        self.k
    }

    pub fn is_empty(&self) -> bool {
        self.k == 0
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn u(lambda: f64) -> UtilitySpec {
        UtilitySpec::new(Lambda::new(lambda).unwrap())
    }

    fn w(i: usize) -> Subset {
        Subset::singleton(i)
    }

    const PAIR: Subset = Subset::from_bits(0b11);

    #[test]
    fn worked_values() {
        assert_eq!(u(1.0).utility(PAIR, w(0)).unwrap(), 0.5);
        assert_eq!(u(f64::INFINITY).utility(PAIR, w(0)).unwrap(), 1.0);
        assert_eq!(u(f64::NEG_INFINITY).utility(PAIR, w(0)).unwrap(), 0.0);
        assert!((u(2.0).utility(PAIR, w(0)).unwrap() - 0.5f64.sqrt()).abs() < 1e-15);
        assert_eq!(u(-1.0).utility(w(0), PAIR).unwrap(), 0.5);
        assert_eq!(u(1.0).utility(w(0), PAIR).unwrap(), 0.0);
        assert_eq!(u(0.5).utility(PAIR, w(0)).unwrap(), 0.25);
    }

    #[test]
    fn identity_axiom_for_every_branch() {
        for lambda in [f64::NEG_INFINITY, -3.0, -1.0, 0.0, 0.25, 1.0, 7.0, f64::INFINITY] {
            for bits in 1u16..16 {
                let a = Subset::from_bits(bits);
                assert_eq!(u(lambda).utility(a, a).unwrap(), 1.0, "lambda {lambda}, {a}");
            }
        }
    }

    #[test]
    fn empty_subsets_are_rejected() {
        assert_eq!(u(1.0).utility(Subset::EMPTY, w(0)), Err(UtilityError::EmptySubset));
        assert_eq!(u(1.0).utility(w(0), Subset::EMPTY), Err(UtilityError::EmptySubset));
    }

    #[test]
    fn lambda_kinds_and_parsing() {
        assert_eq!("inf".parse::<Lambda>().unwrap().kind(), UtilityKind::UpperLimit);
        assert_eq!("-inf".parse::<Lambda>().unwrap().kind(), UtilityKind::LowerLimit);
        assert_eq!("0".parse::<Lambda>().unwrap().kind(), UtilityKind::Point);
        assert_eq!("-0".parse::<Lambda>().unwrap().to_string(), "0");
        assert_eq!("-2.5".parse::<Lambda>().unwrap().kind(), UtilityKind::Underline);
        assert_eq!("1e3".parse::<Lambda>().unwrap().kind(), UtilityKind::Overline);
        assert!("nan".parse::<Lambda>().is_err());
        assert!("abc".parse::<Lambda>().is_err());
        assert!("infinity".parse::<Lambda>().is_err());
        let list = Lambda::parse_list("-inf,-1,0,1,inf").unwrap();
        let shown: Vec<String> = list.iter().map(Lambda::to_string).collect();
        assert_eq!(shown, ["-inf", "-1", "0", "1", "inf"]);
        assert_eq!(Lambda::parse_list("\u{2212}inf,\u{2212}1,0,1,inf").unwrap(), list);
        let json = serde_json::to_string(&list).unwrap();
        assert_eq!(json, r#"["-inf","-1","0","1","inf"]"#);
        let back: Vec<Lambda> = serde_json::from_str(&json).unwrap();
        assert_eq!(back, list);
        let numeric: Vec<Lambda> = serde_json::from_str("[0.5, 2, -1]").unwrap();
        assert_eq!(numeric[1], Lambda::new(2.0).unwrap());
    }

    #[test]
    fn table_rejects_broken_utilities() {
        let focal = [w(0), w(1), PAIR];
        assert!(UtilityTable::new(&u(1.0), &focal).is_ok());
        let always_one = FnUtility(|_, _| 1.0);
        assert!(matches!(
            UtilityTable::new(&always_one, &focal),
            Err(UtilityError::AxiomViolation { .. })
        ));
        let not_reflexive = FnUtility(|a: Subset, b: Subset| if a == b { 0.9 } else { 0.0 });
        assert!(UtilityTable::new(&not_reflexive, &focal).is_err());
        let out_of_range = FnUtility(|a: Subset, b: Subset| if a == b { 1.0 } else if a.intersects(b) { 1.5 } else { 0.0 });
        assert!(UtilityTable::new(&out_of_range, &focal).is_err());
        let t = UtilityTable::new(&u(1.0), &focal).unwrap();
        assert_eq!(t.get(2, 0), 0.5);
        assert_eq!(t.row(0), &[1.0, 0.0, 0.0]);
    }

    #[test]
    fn overline_monotone_in_lambda() {
        // for B ⊊ A the value rises with λ, mirrored for A ⊊ B on the negative side
        let grid = [0.01, 0.1, 0.5, 1.0, 2.0, 10.0, 100.0];
        for bits_a in 1u16..16 {
            for bits_b in 1u16..16 {
                let (a, b) = (Subset::from_bits(bits_a), Subset::from_bits(bits_b));
                if b.is_subset_of(a) && a != b {
                    let vals: Vec<f64> = grid.iter().map(|&l| u(l).eval(a, b)).collect();
                    assert!(vals.windows(2).all(|p| p[0] <= p[1]), "{a} {b} {vals:?}");
                }
                if a.is_subset_of(b) && a != b {
                    let vals: Vec<f64> = grid.iter().map(|&l| u(-l).eval(a, b)).collect();
                    assert!(vals.windows(2).all(|p| p[0] <= p[1]), "{a} {b} {vals:?}");
                }
            }
        }
    }
}
