//! Slow reference implementations used to cross-check the fast paths.
//!
//! Nothing here uses the precomputed gain tables of [`crate::mistakeness`]
//! or the sweep of [`crate::iemm`]; every quantity is recomputed from the
//! utility and the raw masses.

use std::collections::BTreeMap;

use rand::seq::{IndexedRandom, SliceRandom};
use rand::Rng;
use rand_distr::StandardNormal;
use thiserror::Error;

use crate::belief::{Frame, Subset};
use crate::iemm::{ExplainerTree, IemmError, SplitCandidate, TreeNode};
use crate::mistakeness::MistakenessMode;
use crate::partition::{metacluster_centroids, CentroidSet, CredalPartition, Dataset, HardClustering};
use crate::utility::Utility;

pub const TINY_MAX_POINTS: usize = 12;
pub const TINY_MAX_FEATURES: usize = 3;
pub const TINY_MAX_FOCAL: usize = 4;
pub const TINY_MAX_THRESHOLDS: usize = 16;

/// Residual bound for the affine identities.
pub const AFFINE_TOLERANCE: f64 = 1e-9;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum OracleError {
    #[error("instance too large for exhaustive search: {0}")]
    InstanceTooLarge(String),
    #[error("centroids of focal sets #{0} and #{1} coincide")]
    IndistinguishableCentroids(usize, usize),
    #[error(transparent)]
    Iemm(#[from] IemmError),
}

/// `|{x ∈ members : label(x) ∉ resident}|`.
pub fn count_mistakes(hard: &HardClustering, members: &[usize], resident: &[usize]) -> usize {
    members.iter().filter(|&&x| !resident.contains(&hard.labels()[x])).count()
}

/// Exhaustive argmin over `candidates`, preferring the earliest on ties.
/// Candidates are expected in (dimension, threshold) order.
pub fn brute_split_argmin(candidates: &[(usize, f64)], mut cost: impl FnMut(usize, f64) -> f64) -> Option<SplitCandidate> {
    let mut best: Option<SplitCandidate> = None;
    for &(dim, threshold) in candidates {
        let c = cost(dim, threshold);
        let better = match best {
            None => true,
            Some(b) => c < b.cost - 1e-12 * b.cost.abs().max(1.0),
        };
        if better {
            best = Some(SplitCandidate { dim, threshold, cost: c });
        }
    }
    best
}

/// Thresholds on `dim` separating at least one pair of resident centroids:
/// member and centroid coordinates in `[min, max)` of the resident ones.
pub fn node_thresholds(data: &Dataset, centroids: &[Vec<f64>], members: &[usize], resident: &[usize], dim: usize) -> Vec<f64> {
    let lo = resident.iter().map(|&a| centroids[a][dim]).fold(f64::INFINITY, f64::min);
    let hi = resident.iter().map(|&a| centroids[a][dim]).fold(f64::NEG_INFINITY, f64::max);
    let mut out: Vec<f64> = Vec::new();
    for v in members.iter().map(|&x| data.row(x)[dim]).chain(resident.iter().map(|&a| centroids[a][dim])) {
        if lo <= v && v < hi && !out.contains(&v) {
            out.push(v);
        }
    }
    out.sort_by(|a, b| a.partial_cmp(b).unwrap());
    out
}

fn all_candidates(data: &Dataset, centroids: &[Vec<f64>], members: &[usize], resident: &[usize]) -> Vec<(usize, f64)> {
    let mut out = Vec::new();
    for dim in 0..data.n_features() {
        for t in node_thresholds(data, centroids, members, resident, dim) {
            out.push((dim, t));
        }
    }
    out
}

fn split_sets(
    data: &Dataset,
    centroids: &[Vec<f64>],
    members: &[usize],
    resident: &[usize],
    dim: usize,
    t: f64,
) -> [(Vec<usize>, Vec<usize>); 2] {
    let mut left = (Vec::new(), Vec::new());
    let mut right = (Vec::new(), Vec::new());
    for &x in members {
        if data.row(x)[dim] <= t { left.0.push(x) } else { right.0.push(x) }
    }
    for &a in resident {
        if centroids[a][dim] <= t { left.1.push(a) } else { right.1.push(a) }
    }
    [left, right]
}

/// Tree produced by the reference IMM.
#[derive(Debug, Clone, PartialEq)]
pub enum ImmNode {
    Leaf(usize),
    Split { dim: usize, threshold: f64, mistakes: usize, left: Box<ImmNode>, right: Box<ImmNode> },
}

/// Greedy mistake minimization for a hard clustering with one centroid per
/// cluster. Each split records the points it separates from their centroid.
pub fn imm_fit(data: &Dataset, hard: &HardClustering, centroids: &[Vec<f64>]) -> Result<ImmNode, OracleError> {
    fn grow(data: &Dataset, hard: &HardClustering, cents: &[Vec<f64>], members: Vec<usize>, resident: Vec<usize>) -> Result<ImmNode, OracleError> {
        if resident.len() == 1 {
            return Ok(ImmNode::Leaf(resident[0]));
        }
        // points already cut off from their centroid higher up stay mistakes
        let inherited = count_mistakes(hard, &members, &resident);
        let mut best: Option<(usize, f64, usize)> = None;
        for (dim, t) in all_candidates(data, cents, &members, &resident) {
            let [l, r] = split_sets(data, cents, &members, &resident, dim, t);
            if l.1.is_empty() || r.1.is_empty() {
                continue;
            }
            let m = count_mistakes(hard, &l.0, &l.1) + count_mistakes(hard, &r.0, &r.1) - inherited;
            if best.is_none_or(|b| m < b.2) {
                best = Some((dim, t, m));
            }
        }
        let (dim, threshold, mistakes) = best.ok_or(OracleError::IndistinguishableCentroids(resident[0], resident[1]))?;
        let [l, r] = split_sets(data, cents, &members, &resident, dim, threshold);
        Ok(ImmNode::Split {
            dim,
            threshold,
            mistakes,
            left: Box::new(grow(data, hard, cents, l.0, l.1)?),
            right: Box::new(grow(data, hard, cents, r.0, r.1)?),
        })
    }
    grow(data, hard, centroids, (0..data.len()).collect(), (0..hard.n_clusters()).collect())
}

/// Whether an explainer tree makes the same choices as a reference IMM tree.
pub fn same_as_imm(tree: &TreeNode, imm: &ImmNode) -> bool {
    match (tree, imm) {
        (TreeNode::Leaf { focal }, ImmNode::Leaf(l)) => focal == l,
        (
            TreeNode::Split { dim, threshold, cost, left, right },
            ImmNode::Split { dim: d, threshold: t, mistakes, left: l, right: r },
        ) => dim == d && threshold == t && *cost == *mistakes as f64 && same_as_imm(left, l) && same_as_imm(right, r),
        _ => false,
    }
}

/// Leaf-level mistakeness evaluated straight from the utility.
pub fn leaf_mistakeness(p: &CredalPartition, utility: &dyn Utility, members: &[usize], leaf: usize, mode: MistakenessMode) -> f64 {
    let focal = p.focal_sets();
    let mut total = 0.0;
    for &x in members {
        for (b, &m) in focal.iter().zip(p.row(x)) {
            match mode {
                MistakenessMode::Up => {
                    for (a, &fa) in focal.iter().enumerate() {
                        if a != leaf {
                            total += utility.eval(fa, *b) * m;
                        }
                    }
                }
                MistakenessMode::Down => total += (1.0 - utility.eval(focal[leaf], *b)) * m,
            }
        }
    }
    total
}

/// A dataset small enough for exhaustive tree search.
#[derive(Debug, Clone)]
pub struct TinyInstance {
    pub data: Dataset,
    pub partition: CredalPartition,
    pub centroids: CentroidSet,
}

impl TinyInstance {
    pub fn new(data: Dataset, partition: CredalPartition, centroids: CentroidSet) -> Result<Self, OracleError> {
        let too_large = |m: String| Err(OracleError::InstanceTooLarge(m));
        if data.len() > TINY_MAX_POINTS {
            return too_large(format!("{} points", data.len()));
        }
        if data.n_features() > TINY_MAX_FEATURES {
            return too_large(format!("{} features", data.n_features()));
        }
        if partition.n_focal() > TINY_MAX_FOCAL {
            return too_large(format!("{} focal sets", partition.n_focal()));
        }
        let k = partition.n_focal();
        let all: Vec<usize> = (0..data.len()).collect();
        let res: Vec<usize> = (0..k).collect();
        for dim in 0..data.n_features() {
            let n = node_thresholds(&data, centroids.points(), &all, &res, dim).len();
            if n > TINY_MAX_THRESHOLDS {
                return too_large(format!("{n} thresholds on feature {dim}"));
            }
        }
        Ok(Self { data, partition, centroids })
    }
}

/// Minimal total mistakeness over every tree with one leaf per focal set
/// whose splits use the candidate thresholds. The witness records in each
/// split the optimal total of its subtree.
pub fn exhaustive_best_tree(
    inst: &TinyInstance,
    utility: &dyn Utility,
    mode: MistakenessMode,
) -> Result<(f64, ExplainerTree), OracleError> {
    let cents = inst.centroids.points();
    for a in 0..cents.len() {
        for b in a + 1..cents.len() {
            if cents[a] == cents[b] {
                return Err(OracleError::IndistinguishableCentroids(a, b));
            }
        }
    }
    fn search(inst: &TinyInstance, u: &dyn Utility, mode: MistakenessMode, members: &[usize], resident: &[usize]) -> (f64, TreeNode) {
        if resident.len() == 1 {
            return (leaf_mistakeness(&inst.partition, u, members, resident[0], mode), TreeNode::leaf(resident[0]));
        }
        let cents = inst.centroids.points();
        let mut best: Option<(f64, TreeNode)> = None;
        for (dim, t) in all_candidates(&inst.data, cents, members, resident) {
            let [l, r] = split_sets(&inst.data, cents, members, resident, dim, t);
            if l.1.is_empty() || r.1.is_empty() {
                continue;
            }
            let (cl, tl) = search(inst, u, mode, &l.0, &l.1);
            let (cr, tr) = search(inst, u, mode, &r.0, &r.1);
            let total = cl + cr;
            if best.as_ref().is_none_or(|b| total < b.0) {
                best = Some((total, TreeNode::split(dim, t, total, tl, tr)));
            }
        }
        best.expect("distinct centroids always admit a split")
    }
    let members: Vec<usize> = (0..inst.data.len()).collect();
    let resident: Vec<usize> = (0..inst.partition.n_focal()).collect();
    let (cost, root) = search(inst, utility, mode, &members, &resident);
    let p = &inst.partition;
    let tree = ExplainerTree::new(p.frame().clone(), p.focal_sets().to_vec(), inst.data.n_features(), root)?;
    Ok((cost, tree))
}

#[derive(Debug, Clone, PartialEq)]
pub struct AffineCheck {
    pub holds: bool,
    pub representativeness: f64,
    pub total_up: f64,
    pub total_down: f64,
    pub kappa: f64,
    /// `N·R + Σ up − κ`.
    pub residual_up: f64,
    /// `(Σ down − Σ up) − (N − κ)`.
    pub residual_down: f64,
}

/// `κ = Σ_x Σ_A Σ_B U(A, B)·m_x(B)` with `A` over the focal sets.
pub fn kappa_brute(p: &CredalPartition, utility: &dyn Utility) -> f64 {
    let focal = p.focal_sets();
    let mut k = 0.0;
    for x in 0..p.len() {
        for &a in focal {
            for (&b, &m) in focal.iter().zip(p.row(x)) {
                k += utility.eval(a, b) * m;
            }
        }
    }
    k
}

/// Checks both affine relations between representativeness, total up- and
/// down-mistakeness, for the leaf assignment `leaf_of`. `kappa` replaces the
/// computed constant when given.
pub fn verify_affine_identities(p: &CredalPartition, utility: &dyn Utility, leaf_of: &[usize], kappa: Option<f64>) -> AffineCheck {
    let n = p.len();
    let mut leaves: BTreeMap<usize, Vec<usize>> = BTreeMap::new();
    for (x, &a) in leaf_of.iter().enumerate() {
        leaves.entry(a).or_default().push(x);
    }
    let focal = p.focal_sets();
    let mut r = 0.0;
    for (x, &a) in leaf_of.iter().enumerate() {
        for (&b, &m) in focal.iter().zip(p.row(x)) {
            r += utility.eval(focal[a], b) * m;
        }
    }
    r /= n as f64;
    let total_up: f64 = leaves.iter().map(|(&a, xs)| leaf_mistakeness(p, utility, xs, a, MistakenessMode::Up)).sum();
    let total_down: f64 = leaves.iter().map(|(&a, xs)| leaf_mistakeness(p, utility, xs, a, MistakenessMode::Down)).sum();
    let kappa = kappa.unwrap_or_else(|| kappa_brute(p, utility));
    let residual_up = n as f64 * r + total_up - kappa;
    let residual_down = (total_down - total_up) - (n as f64 - kappa);
    AffineCheck {
        holds: residual_up.abs() < AFFINE_TOLERANCE && residual_down.abs() < AFFINE_TOLERANCE,
        representativeness: r,
        total_up,
        total_down,
        kappa,
        residual_up,
        residual_down,
    }
}

pub fn verify_tree_identities(
    p: &CredalPartition,
    utility: &dyn Utility,
    tree: &ExplainerTree,
    data: &Dataset,
    kappa: Option<f64>,
) -> Result<AffineCheck, OracleError> {
    let leaf_of = data.rows().map(|r| tree.predict_index(r)).collect::<Result<Vec<_>, _>>()?;
    Ok(verify_affine_identities(p, utility, &leaf_of, kappa))
}

/// A random tree with one leaf per focal set, each leaf holding its centroid.
pub fn random_imm_tree<R: Rng>(rng: &mut R, data: &Dataset, p: &CredalPartition, centroids: &CentroidSet) -> Result<ExplainerTree, OracleError> {
    fn grow<R: Rng>(rng: &mut R, data: &Dataset, cents: &[Vec<f64>], members: Vec<usize>, resident: Vec<usize>) -> Result<TreeNode, OracleError> {
        if resident.len() == 1 {
            return Ok(TreeNode::leaf(resident[0]));
        }
        let options: Vec<(usize, f64)> = all_candidates(data, cents, &members, &resident)
            .into_iter()
            .filter(|&(dim, t)| {
                let left = resident.iter().filter(|&&a| cents[a][dim] <= t).count();
                left > 0 && left < resident.len()
            })
            .collect();
        let &(dim, t) = options.choose(rng).ok_or(OracleError::IndistinguishableCentroids(resident[0], resident[1]))?;
        let [l, r] = split_sets(data, cents, &members, &resident, dim, t);
        Ok(TreeNode::split(dim, t, 0.0, grow(rng, data, cents, l.0, l.1)?, grow(rng, data, cents, r.0, r.1)?))
    }
    let root = grow(rng, data, centroids.points(), (0..data.len()).collect(), (0..p.n_focal()).collect())?;
    Ok(ExplainerTree::new(p.frame().clone(), p.focal_sets().to_vec(), data.n_features(), root)?)
}

/// Uniform points in `[0, 10)^d`.
pub fn random_dataset<R: Rng>(rng: &mut R, n: usize, d: usize) -> Dataset {
    let rows: Vec<Vec<f64>> = (0..n).map(|_| (0..d).map(|_| rng.random_range(0.0..10.0)).collect()).collect();
    Dataset::from_rows(&rows).expect("finite rows")
}

/// Random sparse masses over a random subset of the non-empty subsets of a
/// `c`-element frame. Singletons are always focal.
pub fn random_partition<R: Rng>(rng: &mut R, n: usize, c: usize) -> CredalPartition {
    let frame = Frame::numbered(c).expect("small frame");
    let mut focal: Vec<Subset> = frame.nonempty_subsets().into_iter().filter(|s| s.is_singleton() || rng.random_bool(0.5)).collect();
    focal.sort_by_key(|s| (s.len(), s.bits()));
    let rows: Vec<Vec<f64>> = (0..n)
        .map(|_| {
            let mut w: Vec<f64> = focal.iter().map(|_| if rng.random_bool(0.6) { rng.random::<f64>() } else { 0.0 }).collect();
            if w.iter().all(|&v| v == 0.0) {
                w[rng.random_range(0..focal.len())] = 1.0;
            }
            let t: f64 = w.iter().sum();
            w.into_iter().map(|v| v / t).collect()
        })
        .collect();
    CredalPartition::new(frame, focal, &rows).expect("normalized rows")
}

/// Random singleton centroids in the data range, with barycentric
/// metacluster centroids; `None` when two centroids coincide.
pub fn random_centroids<R: Rng>(rng: &mut R, p: &CredalPartition, d: usize) -> Option<CentroidSet> {
    let singles: BTreeMap<usize, Vec<f64>> =
        (0..p.frame().len()).map(|l| (l, (0..d).map(|_| rng.random_range(0.0..10.0)).collect())).collect();
    let cents = metacluster_centroids(p, &singles).ok()?;
    let pts = cents.points();
    let distinct = (0..pts.len()).all(|a| (a + 1..pts.len()).all(|b| pts[a] != pts[b]));
    distinct.then_some(cents)
}

/// Gaussian blobs around `c` random centers; labels are blob indices and
/// centroids the blob means.
pub fn random_hard_instance<R: Rng>(rng: &mut R, n: usize, c: usize, d: usize, spread: f64) -> (Dataset, HardClustering, CentroidSet) {
    loop {
        let centers: Vec<Vec<f64>> = (0..c).map(|_| (0..d).map(|_| rng.random_range(0.0..10.0)).collect()).collect();
        let mut labels: Vec<usize> = (0..n).map(|j| if j < c { j } else { rng.random_range(0..c) }).collect();
        labels.shuffle(rng);
        let rows: Vec<Vec<f64>> = labels
            .iter()
            .map(|&l| centers[l].iter().map(|&m| m + spread * rng.sample::<f64, _>(StandardNormal)).collect())
            .collect();
        let mut means = vec![vec![0.0; d]; c];
        let mut counts = vec![0usize; c];
        for (row, &l) in rows.iter().zip(&labels) {
            counts[l] += 1;
            for (s, v) in means[l].iter_mut().zip(row) {
                *s += v;
            }
        }
        for (m, &k) in means.iter_mut().zip(&counts) {
            m.iter_mut().for_each(|v| *v /= k as f64);
        }
        if (0..c).any(|a| (a + 1..c).any(|b| means[a] == means[b])) {
            continue;
        }
        let data = Dataset::from_rows(&rows).expect("finite rows");
        let hard = HardClustering::new(labels, c).expect("labels in range");
        return (data, hard, CentroidSet::new(means).expect("finite means"));
    }
}
