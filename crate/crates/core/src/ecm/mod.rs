//! Evidential c-means and synthetic data.
//!
//! The fitter minimizes
//! `J = Σ_j Σ_k |A_k|^α · m_jk^β · ‖x_j − v_k‖²`
//! by alternating closed-form mass updates with a `C × C` linear solve for the
//! singleton centroids. Metacluster centroids are barycenters of their
//! members' centroids. There is no empty-set (noise) column.
//!
//! Rows are processed in lexicographic order so that the result does not
//! depend on the order of the input rows.

mod synth;

pub use synth::{synth_generate, Component, Preset, SynthConfig};

use std::collections::BTreeMap;
use std::path::Path;
use std::str::FromStr;

use nalgebra::DMatrix;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::belief::{Frame, Subset};
use crate::partition::{load_partition, metacluster_centroids, CentroidSet, CredalPartition, Dataset, PartitionError};

/// Initializations tried before giving up with [`EcmError::DegenerateInit`].
pub const INIT_ATTEMPTS: usize = 10;

#[derive(Debug, Error)]
pub enum EcmError {
    #[error("invalid configuration: {0}")]
    InvalidConfig(String),
    #[error("{n} observations cannot support {c} clusters")]
    TooFewPoints { n: usize, c: usize },
    #[error("could not draw {0} distinct initial centroids")]
    DegenerateInit(usize),
    #[error("centroid system is singular")]
    SingularCentroidSystem,
    #[error(transparent)]
    Partition(#[from] PartitionError),
}

/// Which subsets of the frame carry mass.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
pub enum FocalPolicy {
    /// Every non-empty subset.
    #[default]
    #[serde(rename = "all", alias = "all_nonempty_subsets")]
    All,
    /// Singletons and the whole frame.
    #[serde(rename = "qb", alias = "singletons_plus_omega")]
    SingletonsPlusOmega,
}

impl FocalPolicy {
    pub fn focal_sets(self, frame: &Frame) -> Vec<Subset> {
        match self {
            FocalPolicy::All => frame.nonempty_subsets(),
            FocalPolicy::SingletonsPlusOmega => {
                let mut sets: Vec<Subset> = (0..frame.len()).map(Subset::singleton).collect();
                if frame.len() > 1 {
                    sets.push(frame.omega());
                }
                sets
            }
        }
    }
}

impl FromStr for FocalPolicy {
    type Err = EcmError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "all" | "all_nonempty_subsets" => Ok(FocalPolicy::All),
            "qb" | "singletons_plus_omega" => Ok(FocalPolicy::SingletonsPlusOmega),
            _ => Err(EcmError::InvalidConfig(format!("unknown focal policy {s:?} (expected all or qb)"))),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct EcmConfig {
    pub n_clusters: usize,
    pub alpha: f64,
    pub beta: f64,
    pub max_iter: usize,
    pub tol: f64,
    pub seed: u64,
    pub focal_policy: FocalPolicy,
}

impl Default for EcmConfig {
    fn default() -> Self {
        Self { n_clusters: 2, alpha: 1.0, beta: 2.0, max_iter: 100, tol: 1e-6, seed: 0, focal_policy: FocalPolicy::All }
    }
}

impl EcmConfig {
    pub fn new(n_clusters: usize) -> Self {
        Self { n_clusters, ..Self::default() }
    }

    pub fn validate(&self) -> Result<(), EcmError> {
        let bad = |m: &str| Err(EcmError::InvalidConfig(m.into()));
        if self.n_clusters < 2 || self.n_clusters > crate::belief::MAX_FRAME {
            return bad("n_clusters must be between 2 and 16");
        }
        if !self.alpha.is_finite() {
            return bad("alpha must be finite");
        }
        if !(self.beta > 1.0 && self.beta.is_finite()) {
            return bad("beta must be greater than 1");
        }
        if self.max_iter == 0 {
            return bad("max_iter must be at least 1");
        }
        if !(self.tol > 0.0) {
            return bad("tol must be positive");
        }
        Ok(())
    }
}

#[derive(Debug, Clone)]
pub struct EcmFit {
    pub partition: CredalPartition,
    /// One centroid per focal set.
    pub centroids: CentroidSet,
    pub singleton_centroids: Vec<Vec<f64>>,
    /// Objective after every iteration.
    pub objective: Vec<f64>,
    pub converged: bool,
}

/// Masses of one point given the squared distances to every focal centroid.
///
/// Points sitting on a centroid put all of their mass, evenly, on the focal
/// sets at distance zero.
pub fn mass_update(dist2: &[f64], focal: &[Subset], alpha: f64, beta: f64) -> Vec<f64> {
    let zeros = dist2.iter().filter(|&&d| d == 0.0).count();
    if zeros > 0 {
        let share = 1.0 / zeros as f64;
        return dist2.iter().map(|&d| if d == 0.0 { share } else { 0.0 }).collect();
    }
    let e = 1.0 / (beta - 1.0);
    let logw: Vec<f64> = dist2.iter().zip(focal).map(|(&d, a)| -e * (alpha * (a.len() as f64).ln() + d.ln())).collect();
    let top = logw.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let w: Vec<f64> = logw.iter().map(|l| (l - top).exp()).collect();
    let total: f64 = w.iter().sum();
    w.into_iter().map(|v| v / total).collect()
}

fn dist2(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y) * (x - y)).sum()
}

fn barycenters(focal: &[Subset], singles: &[Vec<f64>]) -> Vec<Vec<f64>> {
    let d = singles[0].len();
    focal
        .iter()
        .map(|a| {
            if a.is_singleton() {
                return singles[a.first().unwrap()].clone();
            }
            let mut acc = vec![0.0; d];
            for w in a.indices() {
                for (s, v) in acc.iter_mut().zip(&singles[w]) {
                    *s += v;
                }
            }
            let n = a.len() as f64;
            acc.into_iter().map(|s| s / n).collect()
        })
        .collect()
}

/// k-means++ seeding over `rows`; `None` when fewer than `c` distinct
/// points could be drawn.
fn seed_centroids(rows: &[&[f64]], c: usize, rng: &mut ChaCha8Rng) -> Option<Vec<Vec<f64>>> {
    let mut chosen: Vec<Vec<f64>> = vec![rows[rng.random_range(0..rows.len())].to_vec()];
    let mut nearest: Vec<f64> = rows.iter().map(|r| dist2(r, &chosen[0])).collect();
    while chosen.len() < c {
        let total: f64 = nearest.iter().sum();
        if !(total > 0.0) {
            return None;
        }
        let target = rng.random::<f64>() * total;
        let mut acc = 0.0;
        let mut pick = None;
        for (j, &w) in nearest.iter().enumerate() {
            if w > 0.0 {
                pick = Some(j);
                acc += w;
                if acc > target {
                    break;
                }
            }
        }
        let next = rows[pick?].to_vec();
        if chosen.contains(&next) {
            return None;
        }
        for (n, r) in nearest.iter_mut().zip(rows) {
            *n = n.min(dist2(r, &next));
        }
        chosen.push(next);
    }
    Some(chosen)
}

struct Solver<'a> {
    rows: Vec<&'a [f64]>,
    focal: Vec<Subset>,
    cfg: &'a EcmConfig,
}

impl Solver<'_> {
    fn masses(&self, singles: &[Vec<f64>]) -> Vec<Vec<f64>> {
        let cents = barycenters(&self.focal, singles);
        self.rows
            .iter()
            .map(|x| {
                let d: Vec<f64> = cents.iter().map(|v| dist2(x, v)).collect();
                mass_update(&d, &self.focal, self.cfg.alpha, self.cfg.beta)
            })
            .collect()
    }

    fn objective(&self, masses: &[Vec<f64>], singles: &[Vec<f64>]) -> f64 {
        let cents = barycenters(&self.focal, singles);
        let mut j = 0.0;
        for (x, m) in self.rows.iter().zip(masses) {
            for ((a, v), &mk) in self.focal.iter().zip(&cents).zip(m) {
                if mk > 0.0 {
                    j += (a.len() as f64).powf(self.cfg.alpha) * mk.powf(self.cfg.beta) * dist2(x, v);
                }
            }
        }
        j
    }

    fn centroids(&self, masses: &[Vec<f64>]) -> Result<Vec<Vec<f64>>, EcmError> {
        let c = self.cfg.n_clusters;
        let d = self.rows[0].len();
        let (alpha, beta) = (self.cfg.alpha, self.cfg.beta);
        let mut h = DMatrix::<f64>::zeros(c, c);
        let mut b = DMatrix::<f64>::zeros(c, d);
        for (x, m) in self.rows.iter().zip(masses) {
            for (a, &mk) in self.focal.iter().zip(m) {
                if mk == 0.0 {
                    continue;
                }
                let card = a.len() as f64;
                let mb = mk.powf(beta);
                let wb = card.powf(alpha - 1.0) * mb;
                let wh = card.powf(alpha - 2.0) * mb;
                for l in a.indices() {
                    for (q, &xq) in x.iter().enumerate() {
                        b[(l, q)] += xq * wb;
                    }
                    for k in a.indices() {
                        h[(l, k)] += wh;
                    }
                }
            }
        }
        let v = match h.clone().cholesky() {
            Some(ch) => ch.solve(&b),
            None => h.lu().solve(&b).ok_or(EcmError::SingularCentroidSystem)?,
        };
        if v.iter().any(|x| !x.is_finite()) {
            return Err(EcmError::SingularCentroidSystem);
        }
        Ok((0..c).map(|l| v.row(l).iter().copied().collect()).collect())
    }
}

pub fn ecm_fit(data: &Dataset, cfg: &EcmConfig) -> Result<EcmFit, EcmError> {
    cfg.validate()?;
    let (n, c) = (data.len(), cfg.n_clusters);
    if n < c {
        return Err(EcmError::TooFewPoints { n, c });
    }
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&i, &j| {
        data.row(i)
            .iter()
            .zip(data.row(j))
            .map(|(a, b)| a.total_cmp(b))
            .find(|o| o.is_ne())
            .unwrap_or(std::cmp::Ordering::Equal)
    });
    let frame = Frame::numbered(c).expect("cluster count checked");
    let solver = Solver { rows: order.iter().map(|&j| data.row(j)).collect(), focal: cfg.focal_policy.focal_sets(&frame), cfg };

    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    let mut singles = (0..INIT_ATTEMPTS)
        .find_map(|_| seed_centroids(&solver.rows, c, &mut rng))
        .ok_or(EcmError::DegenerateInit(c))?;

    let mut objective = Vec::new();
    let mut converged = false;
    for _ in 0..cfg.max_iter {
        let masses = solver.masses(&singles);
        singles = solver.centroids(&masses)?;
        let j = solver.objective(&masses, &singles);
        let done = objective.last().is_some_and(|&prev: &f64| prev - j < cfg.tol);
        objective.push(j);
        if done {
            converged = true;
            break;
        }
    }

    let sorted = solver.masses(&singles);
    let mut rows = vec![Vec::new(); n];
    for (rank, &j) in order.iter().enumerate() {
        rows[j] = sorted[rank].clone();
    }
    let partition = CredalPartition::new(frame, solver.focal.clone(), &rows)?;
    let by_index: BTreeMap<usize, Vec<f64>> = singles.iter().cloned().enumerate().collect();
    let centroids = metacluster_centroids(&partition, &by_index)?;
    Ok(EcmFit { partition, centroids, singleton_centroids: singles, objective, converged })
}

/// Reads a partition produced elsewhere.
pub fn ingest_external(path: &Path) -> Result<(Dataset, CredalPartition, CentroidSet), EcmError> {
    Ok(load_partition(path)?)
}
