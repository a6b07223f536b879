//! Datasets, credal partitions, metacluster centroids and their file formats.
//!
//! A [`CredalPartition`] stores one mass function per observation as a dense
//! `N × K` row-major matrix over a shared list of `K` focal sets. Centroids
//! are indexed by focal-set position, see [`CentroidSet`].

use std::collections::BTreeMap;
use std::fs;
use std::io;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::belief::{BeliefError, Frame, MassFunction, Subset, MASS_TOLERANCE};

#[derive(Debug, Error)]
pub enum PartitionError {
    #[error("dataset must contain at least one observation and one feature")]
    EmptyDataset,
    #[error("row {row} has {got} values, expected {expected}")]
    RowLength { row: usize, got: usize, expected: usize },
    #[error("non-finite value at row {row}, column {col}")]
    NonFinite { row: usize, col: usize },
    #[error("focal set list contains the empty set")]
    EmptyFocalSet,
    #[error("focal set {0:?} is listed twice")]
    DuplicateFocalSet(String),
    #[error("at least one focal set is required")]
    NoFocalSets,
    #[error("row {row} of the mass matrix sums to {sum}")]
    NonNormalizedRow { row: usize, sum: f64 },
    #[error("negative or non-finite mass {value} at row {row}")]
    BadMass { row: usize, value: f64 },
    #[error("partition has {partition} rows but dataset has {dataset}")]
    RowCountMismatch { partition: usize, dataset: usize },
    #[error("no centroid for cluster {0:?}")]
    MissingSingletonCentroid(String),
    #[error("centroid for {key:?} has {got} coordinates, expected {expected}")]
    CentroidDimension { key: String, got: usize, expected: usize },
    #[error("centroid for {0:?} does not match a focal set")]
    UnknownCentroid(String),
    #[error("hard label {label} at row {row} is outside a frame of {size}")]
    BadLabel { row: usize, label: usize, size: usize },
    #[error("partition file has neither inline data nor a dataset path")]
    MissingData,
    #[error(transparent)]
    Belief(#[from] BeliefError),
    #[error("{path}: {source}")]
    Io { path: PathBuf, source: io::Error },
    #[error(transparent)]
    Csv(#[from] csv::Error),
    #[error("malformed partition file: {0}")]
    Json(#[from] serde_json::Error),
}

/// `N` observations of `D` finite numeric features.
#[derive(Debug, Clone, PartialEq)]
pub struct Dataset {
    feature_names: Vec<String>,
    n_features: usize,
    values: Vec<f64>,
}

impl Dataset {
    pub fn new(feature_names: Vec<String>, rows: &[Vec<f64>]) -> Result<Self, PartitionError> {
        let d = feature_names.len();
        if d == 0 || rows.is_empty() {
            return Err(PartitionError::EmptyDataset);
        }
        let mut values = Vec::with_capacity(rows.len() * d);
        for (row, r) in rows.iter().enumerate() {
            if r.len() != d {
                return Err(PartitionError::RowLength { row, got: r.len(), expected: d });
            }
            if let Some(col) = r.iter().position(|v| !v.is_finite()) {
                return Err(PartitionError::NonFinite { row, col });
            }
            values.extend_from_slice(r);
        }
        Ok(Self { feature_names, n_features: d, values })
    }

    /// Dataset with default feature names `x`, `y`, `z` (then `x3`, `x4`, …).
    pub fn from_rows(rows: &[Vec<f64>]) -> Result<Self, PartitionError> {
        let d = rows.first().map_or(0, Vec::len);
        Self::new(default_feature_names(d), rows)
    }

    pub fn len(&self) -> usize {
        self.values.len() / self.n_features
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    pub fn n_features(&self) -> usize {
        self.n_features
    }

    pub fn feature_names(&self) -> &[String] {
        &self.feature_names
    }

    pub fn row(&self, j: usize) -> &[f64] {
        &self.values[j * self.n_features..(j + 1) * self.n_features]
    }

    pub fn rows(&self) -> impl Iterator<Item = &[f64]> {
        self.values.chunks_exact(self.n_features)
    }

    pub fn to_rows(&self) -> Vec<Vec<f64>> {
        self.rows().map(<[f64]>::to_vec).collect()
    }

    /// Per-feature `(min, max)`.
    pub fn bounding_box(&self) -> Vec<(f64, f64)> {
        (0..self.n_features)
            .map(|i| {
                self.rows().fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), r| {
                    (lo.min(r[i]), hi.max(r[i]))
                })
            })
            .collect()
    }

    pub fn read_csv(reader: impl io::Read) -> Result<Self, PartitionError> {
        let mut rdr = csv::ReaderBuilder::new().has_headers(true).trim(csv::Trim::All).from_reader(reader);
        let names: Vec<String> = rdr.headers()?.iter().map(str::to_string).collect();
        let mut rows = Vec::new();
        for record in rdr.records() {
            let record = record?;
            let row = record
                .iter()
                .map(|v| v.parse::<f64>())
                .collect::<Result<Vec<_>, _>>()
                .map_err(|e| {
                    csv::Error::from(io::Error::new(
                        io::ErrorKind::InvalidData,
                        format!("line {}: {e}", record.position().map_or(0, |p| p.line())),
                    ))
                })?;
            rows.push(row);
        }
        Self::new(names, &rows)
    }

    pub fn load_csv(path: &Path) -> Result<Self, PartitionError> {
        let file = fs::File::open(path).map_err(|source| PartitionError::Io { path: path.into(), source })?;
        Self::read_csv(file)
    }

    pub fn write_csv(&self, writer: impl io::Write) -> Result<(), PartitionError> {
        let mut wtr = csv::Writer::from_writer(writer);
        wtr.write_record(&self.feature_names)?;
        for row in self.rows() {
            wtr.write_record(row.iter().map(|v| v.to_string()))?;
        }
        wtr.flush().map_err(|e| PartitionError::Csv(e.into()))?;
        Ok(())
    }
}

pub(crate) fn default_feature_names(d: usize) -> Vec<String> {
    (0..d)
        .map(|i| match i {
            0 => "x".to_string(),
            1 => "y".to_string(),
            2 => "z".to_string(),
            _ => format!("x{i}"),
        })
        .collect()
}

/// Structural taxonomy of a credal partition.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct PartitionKind {
    pub categorical: bool,
    pub bayesian: bool,
    pub quasi_bayesian: bool,
    pub hard: bool,
}

/// Hard labels, one frame index per observation.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct HardClustering {
    labels: Vec<usize>,
    n_clusters: usize,
}

impl HardClustering {
    pub fn new(labels: Vec<usize>, n_clusters: usize) -> Result<Self, PartitionError> {
        if let Some((row, &label)) = labels.iter().enumerate().find(|(_, &l)| l >= n_clusters) {
            return Err(PartitionError::BadLabel { row, label, size: n_clusters });
        }
        Ok(Self { labels, n_clusters })
    }

    pub fn labels(&self) -> &[usize] {
        &self.labels
    }

    pub fn n_clusters(&self) -> usize {
        self.n_clusters
    }

    pub fn len(&self) -> usize {
        self.labels.len()
    }

    pub fn is_empty(&self) -> bool {
        self.labels.is_empty()
    }
}

/// Per-observation masses over a shared focal-set list.
#[derive(Debug, Clone, PartialEq)]
pub struct CredalPartition {
    frame: Frame,
    focal_sets: Vec<Subset>,
    masses: Vec<f64>,
}

impl CredalPartition {
    /// Validates and builds a partition. Rows are checked, not rescaled, so
    /// values survive a save/load cycle bit for bit.
    pub fn new(frame: Frame, focal_sets: Vec<Subset>, rows: &[Vec<f64>]) -> Result<Self, PartitionError> {
        let k = focal_sets.len();
        if k == 0 {
            return Err(PartitionError::NoFocalSets);
        }
        for (i, &a) in focal_sets.iter().enumerate() {
            frame.check(a)?;
            if a.is_empty() {
                return Err(PartitionError::EmptyFocalSet);
            }
            if focal_sets[..i].contains(&a) {
                return Err(PartitionError::DuplicateFocalSet(frame.format_subset(a)));
            }
        }
        if rows.is_empty() {
            return Err(PartitionError::EmptyDataset);
        }
        let mut masses = Vec::with_capacity(rows.len() * k);
        for (row, r) in rows.iter().enumerate() {
            if r.len() != k {
                return Err(PartitionError::RowLength { row, got: r.len(), expected: k });
            }
            if let Some(&value) = r.iter().find(|v| !v.is_finite() || **v < 0.0) {
                return Err(PartitionError::BadMass { row, value });
            }
            let sum: f64 = r.iter().sum();
            if (sum - 1.0).abs() > MASS_TOLERANCE {
                return Err(PartitionError::NonNormalizedRow { row, sum });
            }
            masses.extend_from_slice(r);
        }
        Ok(Self { frame, focal_sets, masses })
    }

    /// Encodes a hard clustering as a categorical Bayesian partition whose
    /// focal sets are the singletons of the frame, in frame order.
    pub fn from_hard(frame: Frame, hard: &HardClustering) -> Result<Self, PartitionError> {
        let c = frame.len();
        if hard.n_clusters() != c {
            return Err(PartitionError::BadLabel { row: 0, label: hard.n_clusters(), size: c });
        }
        let focal = (0..c).map(Subset::singleton).collect();
        let rows: Vec<Vec<f64>> = hard
            .labels()
            .iter()
            .map(|&l| (0..c).map(|i| if i == l { 1.0 } else { 0.0 }).collect())
            .collect();
        Self::new(frame, focal, &rows)
    }

    pub fn frame(&self) -> &Frame {
        &self.frame
    }

    pub fn focal_sets(&self) -> &[Subset] {
        &self.focal_sets
    }

    pub fn n_focal(&self) -> usize {
        self.focal_sets.len()
    }

    pub fn len(&self) -> usize {
        self.masses.len() / self.focal_sets.len()
    }

    pub fn is_empty(&self) -> bool {
        self.masses.is_empty()
    }

    pub fn focal_index(&self, subset: Subset) -> Option<usize> {
        self.focal_sets.iter().position(|&a| a == subset)
    }

    /// Mass row of observation `j`, aligned with [`Self::focal_sets`].
    pub fn row(&self, j: usize) -> &[f64] {
        let k = self.focal_sets.len();
        &self.masses[j * k..(j + 1) * k]
    }

    pub fn rows(&self) -> impl Iterator<Item = &[f64]> {
        self.masses.chunks_exact(self.focal_sets.len())
    }

    pub fn mass_function(&self, j: usize) -> MassFunction {
        let pairs = self.focal_sets.iter().copied().zip(self.row(j).iter().copied());
        MassFunction::new(self.frame.clone(), pairs).expect("partition rows are validated")
    }

    /// Focal-set index carrying the largest mass in row `j` (lowest index on ties).
    pub fn dominant(&self, j: usize) -> usize {
        argmax_first(self.row(j))
    }

    pub fn kind(&self) -> PartitionKind {
        let categorical = self.rows().all(|r| r.iter().filter(|&&v| v > 0.0).count() == 1);
        let bayesian = self.focal_sets.iter().all(|a| a.is_singleton());
        let omega = self.frame.omega();
        let quasi_bayesian = self.focal_sets.iter().all(|a| a.is_singleton() || *a == omega);
        PartitionKind { categorical, bayesian, quasi_bayesian, hard: categorical && bayesian }
    }

    /// Max-plausibility decision per observation, lowest frame index on ties.
    pub fn to_hard(&self) -> HardClustering {
        let c = self.frame.len();
        let labels = self
            .rows()
            .map(|r| {
                let pl: Vec<f64> = (0..c)
                    .map(|w| {
                        self.focal_sets
                            .iter()
                            .zip(r)
                            .filter(|(a, _)| a.contains(w))
                            .map(|(_, &m)| m)
                            .sum()
                    })
                    .collect();
                argmax_first(&pl)
            })
            .collect();
        HardClustering { labels, n_clusters: c }
    }
}

fn argmax_first(values: &[f64]) -> usize {
    let mut best = 0;
    for (i, &v) in values.iter().enumerate() {
        if v > values[best] {
            best = i;
        }
    }
    best
}

/// One centroid per focal set, aligned with the partition's focal-set list.
#[derive(Debug, Clone, PartialEq)]
pub struct CentroidSet {
    points: Vec<Vec<f64>>,
}

impl CentroidSet {
    pub fn new(points: Vec<Vec<f64>>) -> Result<Self, PartitionError> {
        let d = points.first().map_or(0, Vec::len);
        for (i, p) in points.iter().enumerate() {
            if p.len() != d {
                return Err(PartitionError::CentroidDimension { key: format!("#{i}"), got: p.len(), expected: d });
            }
            if let Some(col) = p.iter().position(|v| !v.is_finite()) {
                return Err(PartitionError::NonFinite { row: i, col });
            }
        }
        Ok(Self { points })
    }

    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }

    pub fn get(&self, focal: usize) -> &[f64] {
        &self.points[focal]
    }

    pub fn points(&self) -> &[Vec<f64>] {
        &self.points
    }

    pub fn n_features(&self) -> usize {
        self.points.first().map_or(0, Vec::len)
    }
}

/// Builds a centroid for every focal set of `p`: singletons keep their own
/// centroid, larger sets take the unweighted mean of their members'.
pub fn metacluster_centroids(
    p: &CredalPartition,
    singleton_centroids: &BTreeMap<usize, Vec<f64>>,
) -> Result<CentroidSet, PartitionError> {
    let d = singleton_centroids.values().next().map_or(0, Vec::len);
    let points = p
        .focal_sets()
        .iter()
        .map(|a| {
            let mut acc = vec![0.0; d];
            for w in a.indices() {
                let v = singleton_centroids
                    .get(&w)
                    .ok_or_else(|| PartitionError::MissingSingletonCentroid(p.frame().label(w).to_string()))?;
                if v.len() != d {
                    return Err(PartitionError::CentroidDimension {
                        key: p.frame().label(w).to_string(),
                        got: v.len(),
                        expected: d,
                    });
                }
                for (s, x) in acc.iter_mut().zip(v) {
                    *s += x;
                }
            }
            if a.is_singleton() {
                return Ok(singleton_centroids[&a.first().unwrap()].clone());
            }
            let n = a.len() as f64;
            Ok(acc.into_iter().map(|s| s / n).collect())
        })
        .collect::<Result<Vec<_>, _>>()?;
    CentroidSet::new(points)
}

/// On-disk partition layout. `feature_names`/`data` carry the dataset inline;
/// alternatively `dataset` names a CSV file relative to the JSON file.
#[derive(Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct PartitionFile {
    frame: Vec<String>,
    focal_sets: Vec<String>,
    masses: Vec<Vec<f64>>,
    centroids: BTreeMap<String, Vec<f64>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    feature_names: Option<Vec<String>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    data: Option<Vec<Vec<f64>>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    dataset: Option<PathBuf>,
}

/// A dataset together with its credal partition and centroids.
#[derive(Debug, Clone, PartialEq)]
pub struct PartitionBundle {
    pub data: Dataset,
    pub partition: CredalPartition,
    pub centroids: CentroidSet,
}

impl PartitionBundle {
    pub fn new(data: Dataset, partition: CredalPartition, centroids: CentroidSet) -> Result<Self, PartitionError> {
        if partition.len() != data.len() {
            return Err(PartitionError::RowCountMismatch { partition: partition.len(), dataset: data.len() });
        }
        if centroids.len() != partition.n_focal() {
            return Err(PartitionError::MissingSingletonCentroid(format!(
                "{} centroids for {} focal sets",
                centroids.len(),
                partition.n_focal()
            )));
        }
        if let Some((i, p)) = centroids.points().iter().enumerate().find(|(_, p)| p.len() != data.n_features()) {
            return Err(PartitionError::CentroidDimension {
                key: partition.frame().format_subset(partition.focal_sets()[i]),
                got: p.len(),
                expected: data.n_features(),
            });
        }
        Ok(Self { data, partition, centroids })
    }

    /// Parses the partition JSON. `base` resolves a relative `dataset` path.
    pub fn from_json(text: &str, base: Option<&Path>) -> Result<Self, PartitionError> {
        let file: PartitionFile = serde_json::from_str(text)?;
        let frame = Frame::new(file.frame)?;
        let focal = file
            .focal_sets
            .iter()
            .map(|k| frame.parse_subset(k))
            .collect::<Result<Vec<_>, _>>()?;
        let partition = CredalPartition::new(frame.clone(), focal, &file.masses)?;
        let data = match (file.data, file.dataset) {
            (Some(rows), _) => {
                let names = file
                    .feature_names
                    .unwrap_or_else(|| default_feature_names(rows.first().map_or(0, Vec::len)));
                Dataset::new(names, &rows)?
            }
            (None, Some(path)) => {
                let path = match base {
                    Some(b) if path.is_relative() => b.join(path),
                    _ => path,
                };
                Dataset::load_csv(&path)?
            }
            (None, None) => return Err(PartitionError::MissingData),
        };

        let mut given: BTreeMap<Subset, Vec<f64>> = BTreeMap::new();
        for (key, point) in file.centroids {
            let s = frame.parse_subset(&key)?;
            if s.is_empty() {
                return Err(PartitionError::EmptyFocalSet);
            }
            if !s.is_singleton() && partition.focal_index(s).is_none() {
                return Err(PartitionError::UnknownCentroid(key));
            }
            given.insert(s, point);
        }
        let centroids = if partition.focal_sets().iter().all(|a| given.contains_key(a)) {
            CentroidSet::new(partition.focal_sets().iter().map(|a| given[a].clone()).collect())?
        } else {
            // Only singleton centroids supplied: fill metaclusters by barycenter,
            // keeping any metacluster centroid that was given explicitly.
            let singles: BTreeMap<usize, Vec<f64>> = given
                .iter()
                .filter(|(s, _)| s.is_singleton())
                .map(|(s, v)| (s.first().unwrap(), v.clone()))
                .collect();
            let derived = metacluster_centroids(&partition, &singles)?;
            let points = partition
                .focal_sets()
                .iter()
                .zip(derived.points())
                .map(|(a, v)| given.get(a).cloned().unwrap_or_else(|| v.clone()))
                .collect();
            CentroidSet::new(points)?
        };
        Self::new(data, partition, centroids)
    }

    pub fn to_json(&self) -> String {
        let frame = self.partition.frame();
        let file = PartitionFile {
            frame: frame.labels().to_vec(),
            focal_sets: self.partition.focal_sets().iter().map(|&a| frame.format_subset(a)).collect(),
            masses: self.partition.rows().map(<[f64]>::to_vec).collect(),
            centroids: self
                .partition
                .focal_sets()
                .iter()
                .zip(self.centroids.points())
                .map(|(&a, v)| (frame.format_subset(a), v.clone()))
                .collect(),
            feature_names: Some(self.data.feature_names().to_vec()),
            data: Some(self.data.to_rows()),
            dataset: None,
        };
        serde_json::to_string_pretty(&file).expect("partition file serializes")
    }

    pub fn load(path: &Path) -> Result<Self, PartitionError> {
        let text = fs::read_to_string(path).map_err(|source| PartitionError::Io { path: path.into(), source })?;
        Self::from_json(&text, path.parent())
    }

    pub fn save(&self, path: &Path) -> Result<(), PartitionError> {
        fs::write(path, self.to_json()).map_err(|source| PartitionError::Io { path: path.into(), source })
    }
}

/// Reads a partition file into its dataset, partition and centroids.
pub fn load_partition(path: &Path) -> Result<(Dataset, CredalPartition, CentroidSet), PartitionError> {
    let b = PartitionBundle::load(path)?;
    Ok((b.data, b.partition, b.centroids))
}

pub fn save_partition(
    path: &Path,
    data: &Dataset,
    partition: &CredalPartition,
    centroids: &CentroidSet,
) -> Result<(), PartitionError> {
    PartitionBundle::new(data.clone(), partition.clone(), centroids.clone())?.save(path)
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn frame2() -> Frame {
        Frame::numbered(2).unwrap()
    }

    fn s(i: usize) -> Subset {
        Subset::singleton(i)
    }

    #[test]
    fn hard_partition_kind_and_identity() {
        let hard = HardClustering::new(vec![0, 1, 1, 0], 2).unwrap();
        let p = CredalPartition::from_hard(frame2(), &hard).unwrap();
        assert!(p.kind().hard);
        assert_eq!(p.to_hard(), hard);
    }

    #[test]
    fn quasi_bayesian_focal_structure() {
        let f = Frame::numbered(3).unwrap();
        let focal = vec![s(0), s(1), s(2), f.omega()];
        let p = CredalPartition::new(f, focal, &[vec![0.25, 0.25, 0.25, 0.25]]).unwrap();
        let kind = p.kind();
        assert!(kind.quasi_bayesian);
        assert!(!kind.bayesian && !kind.categorical && !kind.hard);
    }

    #[test]
    fn mixed_rows_are_neither_categorical_nor_bayesian() {
        let p = CredalPartition::new(frame2(), vec![s(0), frame2().omega()], &[vec![0.4, 0.6]]).unwrap();
        let kind = p.kind();
        assert!(!kind.categorical && !kind.bayesian);
    }

    #[test]
    fn to_hard_uses_max_plausibility() {
        let p = CredalPartition::new(frame2(), vec![s(0), frame2().omega()], &[vec![0.3, 0.7], vec![0.0, 1.0]])
            .unwrap();
        // pl(w1) = 1.0, pl(w2) = 0.7; vacuous row ties and takes the lowest index
        assert_eq!(p.to_hard().labels(), &[0, 0]);
        let p = CredalPartition::new(frame2(), vec![s(1), frame2().omega()], &[vec![0.3, 0.7]]).unwrap();
        assert_eq!(p.to_hard().labels(), &[1]);
    }

    #[test]
    fn centroids_are_barycenters() {
        let f = frame2();
        let p = CredalPartition::new(f.clone(), vec![s(0), s(1), f.omega()], &[vec![1.0, 0.0, 0.0]]).unwrap();
        let singles = BTreeMap::from([(0, vec![0.0, 0.0]), (1, vec![2.0, 0.0])]);
        let c = metacluster_centroids(&p, &singles).unwrap();
        assert_eq!(c.get(0), &[0.0, 0.0]);
        assert_eq!(c.get(2), &[1.0, 0.0]);
        let singles = BTreeMap::from([(0, vec![3.0, 5.0]), (1, vec![5.0, 3.0])]);
        assert_eq!(metacluster_centroids(&p, &singles).unwrap().get(2), &[4.0, 4.0]);
        let missing = BTreeMap::from([(0, vec![3.0, 5.0])]);
        assert!(matches!(
            metacluster_centroids(&p, &missing),
            Err(PartitionError::MissingSingletonCentroid(_))
        ));
    }

    #[test]
    fn partition_validation() {
        let f = frame2();
        assert!(matches!(
            CredalPartition::new(f.clone(), vec![Subset::EMPTY, s(0)], &[vec![0.0, 1.0]]),
            Err(PartitionError::EmptyFocalSet)
        ));
        assert!(matches!(
            CredalPartition::new(f.clone(), vec![s(0), s(0)], &[vec![0.5, 0.5]]),
            Err(PartitionError::DuplicateFocalSet(_))
        ));
        assert!(matches!(
            CredalPartition::new(f.clone(), vec![s(0), s(1)], &[vec![0.5, 0.3]]),
            Err(PartitionError::NonNormalizedRow { row: 0, .. })
        ));
        assert!(matches!(
            CredalPartition::new(f, vec![s(0), s(1)], &[vec![1.5, -0.5]]),
            Err(PartitionError::BadMass { .. })
        ));
        assert!(Dataset::from_rows(&[vec![1.0, f64::NAN]]).is_err());
        assert!(Dataset::from_rows(&[]).is_err());
    }

    fn sample_bundle() -> PartitionBundle {
        let f = frame2();
        let data = Dataset::from_rows(&[vec![0.1, 0.2], vec![1.0 / 3.0, 2.5], vec![9.75, -1e-7]]).unwrap();
        let p = CredalPartition::new(
            f.clone(),
            vec![s(0), s(1), f.omega()],
            &[vec![0.7, 0.1, 0.2], vec![0.1, 0.2, 0.7], vec![1.0 / 3.0, 1.0 / 3.0, 1.0 - 2.0 / 3.0]],
        )
        .unwrap();
        let c = CentroidSet::new(vec![vec![0.0, 0.0], vec![10.0, 0.0], vec![5.0, 0.0]]).unwrap();
        PartitionBundle::new(data, p, c).unwrap()
    }

    #[test]
    fn json_round_trip_is_bit_exact() {
        let b = sample_bundle();
        let text = b.to_json();
        let back = PartitionBundle::from_json(&text, None).unwrap();
        assert_eq!(back, b);
        assert_eq!(back.to_json(), text);
    }

    #[test]
    fn file_errors() {
        let empty = r#"{"frame":["w1","w2"],"focal_sets":["","w1"],"masses":[[0.0,1.0]],
            "centroids":{"w1":[0.0]},"data":[[0.0]]}"#;
        assert!(matches!(PartitionBundle::from_json(empty, None), Err(PartitionError::EmptyFocalSet)));
        let short = r#"{"frame":["w1","w2"],"focal_sets":["w1","w2"],"masses":[[0.5,0.3]],
            "centroids":{"w1":[0.0],"w2":[1.0]},"data":[[0.0]]}"#;
        assert!(matches!(
            PartitionBundle::from_json(short, None),
            Err(PartitionError::NonNormalizedRow { .. })
        ));
        let no_data = r#"{"frame":["w1"],"focal_sets":["w1"],"masses":[[1.0]],"centroids":{"w1":[0.0]}}"#;
        assert!(matches!(PartitionBundle::from_json(no_data, None), Err(PartitionError::MissingData)));
        assert!(PartitionBundle::from_json("{}", None).is_err());
    }

    #[test]
    fn singleton_centroids_are_completed_on_load() {
        let text = r#"{"frame":["w1","w2"],"focal_sets":["w1","w2","w1|w2"],
            "masses":[[0.2,0.2,0.6]],"centroids":{"w1":[0.0,2.0],"w2":[4.0,0.0]},
            "data":[[1.0,1.0]]}"#;
        let b = PartitionBundle::from_json(text, None).unwrap();
        assert_eq!(b.centroids.get(2), &[2.0, 1.0]);
    }

    #[test]
    fn dataset_path_is_resolved_relative_to_the_file() {
        let dir = tempfile::tempdir().unwrap();
        let data = Dataset::from_rows(&[vec![1.5, 2.0], vec![-3.0, 0.25]]).unwrap();
        data.write_csv(fs::File::create(dir.path().join("d.csv")).unwrap()).unwrap();
        let text = r#"{"frame":["w1"],"focal_sets":["w1"],"masses":[[1.0],[1.0]],
            "centroids":{"w1":[0.0,0.0]},"dataset":"d.csv"}"#;
        let path = dir.path().join("p.json");
        fs::write(&path, text).unwrap();
        let (d, p, c) = load_partition(&path).unwrap();
        assert_eq!(d, data);
        assert_eq!(p.len(), 2);
        assert_eq!(c.len(), 1);
    }

    #[test]
    fn csv_round_trip() {
        let data = Dataset::new(vec!["a".into(), "b".into()], &[vec![0.1, 1e-300], vec![-2.5, 3.0]]).unwrap();
        let mut buf = Vec::new();
        data.write_csv(&mut buf).unwrap();
        assert!(String::from_utf8(buf.clone()).unwrap().starts_with("a,b\n"));
        assert_eq!(Dataset::read_csv(buf.as_slice()).unwrap(), data);
    }

    proptest! {
        #[test]
        fn barycenters_lie_in_the_member_hull(
            coords in proptest::collection::vec(proptest::collection::vec(-100.0f64..100.0, 2), 3)
        ) {
            let f = Frame::numbered(3).unwrap();
            let focal = f.nonempty_subsets();
            let row = vec![1.0 / 7.0; 7];
            let p = CredalPartition::new(f, focal.clone(), &[row]).unwrap();
            let singles: BTreeMap<usize, Vec<f64>> = coords.iter().cloned().enumerate().collect();
            let c = metacluster_centroids(&p, &singles).unwrap();
            for (a, v) in focal.iter().zip(c.points()) {
                for dim in 0..2 {
                    let lo = a.indices().map(|w| coords[w][dim]).fold(f64::INFINITY, f64::min);
                    let hi = a.indices().map(|w| coords[w][dim]).fold(f64::NEG_INFINITY, f64::max);
                    prop_assert!(v[dim] >= lo - 1e-9 && v[dim] <= hi + 1e-9);
                }
            }
        }

        #[test]
        fn hard_encoding_round_trips(labels in proptest::collection::vec(0usize..4, 1..40)) {
            let hard = HardClustering::new(labels, 4).unwrap();
            let p = CredalPartition::from_hard(Frame::numbered(4).unwrap(), &hard).unwrap();
            prop_assert!(p.kind().hard);
            prop_assert_eq!(p.to_hard(), hard);
        }
    }
}
