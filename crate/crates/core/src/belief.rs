//! Frames of discernment, subsets and mass functions.
//!
//! A [`Subset`] is a bit pattern over the indices of a [`Frame`]; the frame
//! is capped at [`MAX_FRAME`] labels so every subset fits in a `u16` and the
//! full power set can be enumerated cheaply.

use std::collections::BTreeMap;
use std::fmt;

use serde::de::Error as _;
use serde::ser::SerializeMap;
use serde::{Deserialize, Deserializer, Serialize, Serializer};
use thiserror::Error;

/// Largest supported number of clusters in a frame.
pub const MAX_FRAME: usize = 16;

/// Tolerance on the total mass of a mass function or partition row.
pub const MASS_TOLERANCE: f64 = 1e-9;

/// Separator used when a subset is written as a string key, e.g. `"w1|w2"`.
pub const KEY_SEPARATOR: char = '|';

#[derive(Debug, Error, Clone, PartialEq)]
pub enum BeliefError {
    #[error("frame must contain between 1 and {MAX_FRAME} labels, got {0}")]
    FrameSize(usize),
    #[error("frame label {0:?} is empty or duplicated")]
    BadLabel(String),
    #[error("unknown label {label:?} in subset key {key:?}")]
    UnknownLabel { label: String, key: String },
    #[error("subset {bits:#06x} has indices outside a frame of {size} labels")]
    BadSubset { bits: u32, size: usize },
    #[error("masses sum to {sum}, expected 1 within {MASS_TOLERANCE}")]
    NonNormalized { sum: f64 },
    #[error("positive mass {0} assigned to the empty set")]
    EmptySetMass(f64),
    #[error("mass {0} is negative or not finite")]
    BadMass(f64),
    #[error("frame mismatch between mass function and query")]
    FrameMismatch,
}

/// Ordered list of distinct cluster names.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct Frame {
    labels: Vec<String>,
}

impl Frame {
    pub fn new<S: Into<String>>(labels: impl IntoIterator<Item = S>) -> Result<Self, BeliefError> {
        let labels: Vec<String> = labels.into_iter().map(Into::into).collect();
        if labels.is_empty() || labels.len() > MAX_FRAME {
            return Err(BeliefError::FrameSize(labels.len()));
        }
        for (i, label) in labels.iter().enumerate() {
            if label.is_empty() || label.contains(KEY_SEPARATOR) || labels[..i].contains(label) {
                return Err(BeliefError::BadLabel(label.clone()));
            }
        }
        Ok(Self { labels })
    }

    /// Frame `w1, …, wC`.
    pub fn numbered(size: usize) -> Result<Self, BeliefError> {
        Self::new((1..=size).map(|i| format!("w{i}")))
    }

    pub fn len(&self) -> usize {
        self.labels.len()
    }

    pub fn is_empty(&self) -> bool {
        self.labels.is_empty()
    }

    pub fn labels(&self) -> &[String] {
        &self.labels
    }

    pub fn label(&self, index: usize) -> &str {
        &self.labels[index]
    }

    pub fn index_of(&self, label: &str) -> Option<usize> {
        self.labels.iter().position(|l| l == label)
    }

    /// The whole frame Ω.
    pub fn omega(&self) -> Subset {
        Subset::full(self.len())
    }

    pub fn contains(&self, subset: Subset) -> bool {
        subset.bits() as u32 >> self.len() == 0
    }

    /// Every non-empty subset, ordered by cardinality then bit pattern.
    pub fn nonempty_subsets(&self) -> Vec<Subset> {
        let mut all: Vec<Subset> = (1..=self.omega().bits()).map(Subset).collect();
        all.sort_by_key(|s| (s.len(), s.bits()));
        all
    }

    /// Parses a key such as `"w1|w2"`. The empty string is the empty set.
    pub fn parse_subset(&self, key: &str) -> Result<Subset, BeliefError> {
        let mut subset = Subset::EMPTY;
        if key.is_empty() {
            return Ok(subset);
        }
        for part in key.split(KEY_SEPARATOR) {
            let index = self.index_of(part).ok_or_else(|| BeliefError::UnknownLabel {
                label: part.to_string(),
                key: key.to_string(),
            })?;
            subset = subset.with(index);
        }
        Ok(subset)
    }

    /// Labels joined by `|` in frame order.
    pub fn format_subset(&self, subset: Subset) -> String {
        subset
            .indices()
            .map(|i| self.labels[i].as_str())
            .collect::<Vec<_>>()
            .join("|")
    }

    pub fn check(&self, subset: Subset) -> Result<(), BeliefError> {
        if self.contains(subset) {
            Ok(())
        } else {
            Err(BeliefError::BadSubset { bits: subset.bits() as u32, size: self.len() })
        }
    }
}

impl Serialize for Frame {
    fn serialize<S: Serializer>(&self, serializer: S) -> Result<S::Ok, S::Error> {
        self.labels.serialize(serializer)
    }
}

impl<'de> Deserialize<'de> for Frame {
    fn deserialize<D: Deserializer<'de>>(deserializer: D) -> Result<Self, D::Error> {
        let labels = Vec::<String>::deserialize(deserializer)?;
        Frame::new(labels).map_err(D::Error::custom)
    }
}

/// A subset of a frame, as a bit pattern over frame indices.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Default)]
pub struct Subset(u16);

impl Subset {
    pub const EMPTY: Subset = Subset(0);

    pub const fn from_bits(bits: u16) -> Self {
        Subset(bits)
    }

    pub fn singleton(index: usize) -> Self {
        assert!(index < MAX_FRAME, "frame index {index} out of range");
        Subset(1 << index)
    }

    pub fn full(size: usize) -> Self {
        assert!(size <= MAX_FRAME, "frame size {size} out of range");
        Subset(((1u32 << size) - 1) as u16)
    }

    pub fn from_indices(indices: impl IntoIterator<Item = usize>) -> Self {
        indices.into_iter().fold(Subset::EMPTY, Subset::with)
    }

    pub const fn bits(self) -> u16 {
        self.0
    }

    #[must_use]
    pub fn with(self, index: usize) -> Self {
        Subset(self.0 | Subset::singleton(index).0)
    }

    pub fn len(self) -> usize {
        self.0.count_ones() as usize
    }

    pub fn is_empty(self) -> bool {
        self.0 == 0
    }

    pub fn is_singleton(self) -> bool {
        self.len() == 1
    }

    pub fn contains(self, index: usize) -> bool {
        index < MAX_FRAME && self.0 & (1 << index) != 0
    }

    /// Non-strict inclusion `self ⊆ other`.
    pub fn is_subset_of(self, other: Subset) -> bool {
        self.0 & !other.0 == 0
    }

    pub fn intersection(self, other: Subset) -> Subset {
        Subset(self.0 & other.0)
    }

    pub fn union(self, other: Subset) -> Subset {
        Subset(self.0 | other.0)
    }

    pub fn intersects(self, other: Subset) -> bool {
        self.0 & other.0 != 0
    }

    /// Member indices in increasing order.
    pub fn indices(self) -> impl Iterator<Item = usize> {
        (0..MAX_FRAME).filter(move |&i| self.contains(i))
    }

    /// Lowest member index, if any.
    pub fn first(self) -> Option<usize> {
        (!self.is_empty()).then(|| self.0.trailing_zeros() as usize)
    }
}

impl fmt::Display for Subset {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let names: Vec<String> = self.indices().map(|i| format!("w{}", i + 1)).collect();
        write!(f, "{{{}}}", names.join(","))
    }
}

/// Structural taxonomy of a mass function.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct MassKind {
    pub bayesian: bool,
    pub categorical: bool,
    pub vacuous: bool,
}

/// A normalized mass function with strictly positive focal elements.
#[derive(Debug, Clone, PartialEq)]
pub struct MassFunction {
    frame: Frame,
    // Sorted by subset bits, no zero masses, never the empty set.
    focal: Vec<(Subset, f64)>,
}

impl MassFunction {
    /// Builds a mass function. Duplicate subsets accumulate; zero entries
    /// are dropped; inputs within tolerance of 1 are rescaled to sum to one.
    pub fn new(
        frame: Frame,
        assignments: impl IntoIterator<Item = (Subset, f64)>,
    ) -> Result<Self, BeliefError> {
        let mut acc: BTreeMap<Subset, f64> = BTreeMap::new();
        for (subset, value) in assignments {
            frame.check(subset)?;
            if !value.is_finite() || value < 0.0 {
                return Err(BeliefError::BadMass(value));
            }
            if subset.is_empty() {
                if value > 0.0 {
                    return Err(BeliefError::EmptySetMass(value));
                }
                continue;
            }
            *acc.entry(subset).or_insert(0.0) += value;
        }
        let sum: f64 = acc.values().sum();
        if (sum - 1.0).abs() > MASS_TOLERANCE {
            return Err(BeliefError::NonNormalized { sum });
        }
        let focal = acc
            .into_iter()
            .filter(|&(_, v)| v > 0.0)
            .map(|(s, v)| (s, if sum == 1.0 { v } else { v / sum }))
            .collect();
        Ok(Self { frame, focal })
    }

    /// The vacuous mass function `m(Ω) = 1`.
    pub fn vacuous(frame: Frame) -> Self {
        let omega = frame.omega();
        Self { frame, focal: vec![(omega, 1.0)] }
    }

    pub fn frame(&self) -> &Frame {
        &self.frame
    }

    /// Focal elements with their masses, sorted by subset bits.
    pub fn focal_elements(&self) -> &[(Subset, f64)] {
        &self.focal
    }

    pub fn mass(&self, subset: Subset) -> f64 {
        self.focal
            .iter()
            .find(|(s, _)| *s == subset)
            .map_or(0.0, |&(_, v)| v)
    }

    /// `Bel(A) = Σ_{B ⊆ A} m(B)`.
    pub fn bel(&self, a: Subset) -> Result<f64, BeliefError> {
        self.frame.check(a).map_err(|_| BeliefError::FrameMismatch)?;
        Ok(self.focal.iter().filter(|(b, _)| b.is_subset_of(a)).map(|&(_, v)| v).sum())
    }

    /// `Pl(A) = Σ_{B ∩ A ≠ ∅} m(B)`.
    pub fn pl(&self, a: Subset) -> Result<f64, BeliefError> {
        self.frame.check(a).map_err(|_| BeliefError::FrameMismatch)?;
        Ok(self.focal.iter().filter(|(b, _)| b.intersects(a)).map(|&(_, v)| v).sum())
    }

    pub fn kind(&self) -> MassKind {
        let bayesian = self.focal.iter().all(|(s, _)| s.is_singleton());
        let categorical = self.focal.len() == 1;
        let vacuous = categorical && self.focal[0].0 == self.frame.omega();
        MassKind { bayesian, categorical, vacuous }
    }
}

impl Serialize for MassFunction {
    fn serialize<S: Serializer>(&self, serializer: S) -> Result<S::Ok, S::Error> {
        struct Masses<'a>(&'a MassFunction);
        impl Serialize for Masses<'_> {
            fn serialize<S: Serializer>(&self, serializer: S) -> Result<S::Ok, S::Error> {
                let mut map = serializer.serialize_map(Some(self.0.focal.len()))?;
                for &(subset, value) in &self.0.focal {
                    map.serialize_entry(&self.0.frame.format_subset(subset), &value)?;
                }
                map.end()
            }
        }
        #[derive(Serialize)]
        struct Repr<'a> {
            frame: &'a Frame,
            masses: Masses<'a>,
        }
        Repr { frame: &self.frame, masses: Masses(self) }.serialize(serializer)
    }
}

impl<'de> Deserialize<'de> for MassFunction {
    fn deserialize<D: Deserializer<'de>>(deserializer: D) -> Result<Self, D::Error> {
        #[derive(Deserialize)]
        #[serde(deny_unknown_fields)]
        struct Repr {
            frame: Frame,
            masses: BTreeMap<String, f64>,
        }
        let repr = Repr::deserialize(deserializer)?;
        let assignments = repr
            .masses
            .iter()
            .map(|(k, &v)| repr.frame.parse_subset(k).map(|s| (s, v)))
            .collect::<Result<Vec<_>, _>>()
            .map_err(D::Error::custom)?;
        MassFunction::new(repr.frame, assignments).map_err(D::Error::custom)
    }
}
