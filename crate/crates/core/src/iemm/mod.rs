//! Greedy construction of explainer trees by mistakeness minimization.
//!
//! Each node holds the observations routed to it and the focal sets whose
//! centroids it contains. A node with several resident centroids is split on
//! the axis-aligned threshold of least cost, until every leaf holds exactly
//! one centroid.
//!
//! Two split costs are available:
//!
//! * [`MistakenessMode::Up`]: the expected utility lost by the points on each
//!   side for the centroids sent to the other side. These increments add up
//!   over the whole tree to the sum of leaf up-mistakeness.
//! * [`MistakenessMode::Down`]: the down-mistakeness of both children.

mod tree;

pub use tree::{ExplainerTree, PathStep, TreeNode};

use thiserror::Error;

use crate::mistakeness::{Mistakeness, MistakenessError, MistakenessMode, NodeView};
use crate::partition::{CentroidSet, CredalPartition, Dataset};
use crate::utility::{Lambda, Utility, UtilitySpec};

/// Relative tolerance under which two split costs count as tied.
pub const COST_TIE_TOLERANCE: f64 = 1e-12;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum IemmError {
    #[error("centroids of focal sets #{0} and #{1} coincide; no split can separate them")]
    IndistinguishableCentroids(usize, usize),
    #[error("{centroids} centroids for {focal} focal sets")]
    CentroidCount { centroids: usize, focal: usize },
    #[error("expected {expected} features, got {got}")]
    DimensionMismatch { expected: usize, got: usize },
    #[error("dataset has {data} rows but the partition has {partition}")]
    RowCountMismatch { data: usize, partition: usize },
    #[error("malformed tree: {0}")]
    MalformedTree(String),
    #[error(transparent)]
    Mistakeness(#[from] MistakenessError),
}

/// Order in which equal-cost candidates are preferred.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum TieBreak {
    /// Lowest dimension, then lowest threshold.
    #[default]
    LowestDimThenThreshold,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct IemmConfig {
    pub lambda: Lambda,
    /// Overrides the mode implied by the sign of `lambda`.
    pub mode: Option<MistakenessMode>,
    pub tie_break: TieBreak,
}

impl IemmConfig {
    pub fn new(lambda: Lambda) -> Self {
        Self { lambda, mode: None, tie_break: TieBreak::default() }
    }

    pub fn with_mode(mut self, mode: MistakenessMode) -> Self {
        self.mode = Some(mode);
        self
    }

    pub fn mode(&self) -> MistakenessMode {
        self.mode.unwrap_or_else(|| MistakenessMode::for_lambda(self.lambda))
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SplitCandidate {
    pub dim: usize,
    pub threshold: f64,
    pub cost: f64,
}

/// `true` when `cost` beats `best` by more than the tie tolerance.
pub fn strictly_better(cost: f64, best: f64) -> bool {
    cost < best - COST_TIE_TOLERANCE * best.abs().max(1.0)
}

/// Fitting context: dataset, centroids and precomputed gains for one utility.
pub struct Iemm<'a> {
    data: &'a Dataset,
    centroids: &'a CentroidSet,
    model: Mistakeness<'a>,
    mode: MistakenessMode,
}

impl<'a> Iemm<'a> {
    pub fn new(
        data: &'a Dataset,
        p: &'a CredalPartition,
        centroids: &'a CentroidSet,
        utility: &'a dyn Utility,
        mode: MistakenessMode,
    ) -> Result<Self, IemmError> {
        if data.len() != p.len() {
            return Err(IemmError::RowCountMismatch { data: data.len(), partition: p.len() });
        }
        if centroids.len() != p.n_focal() {
            return Err(IemmError::CentroidCount { centroids: centroids.len(), focal: p.n_focal() });
        }
        if centroids.n_features() != data.n_features() {
            return Err(IemmError::DimensionMismatch { expected: data.n_features(), got: centroids.n_features() });
        }
        let pts = centroids.points();
        for a in 0..pts.len() {
            for b in a + 1..pts.len() {
                if pts[a] == pts[b] {
                    return Err(IemmError::IndistinguishableCentroids(a, b));
                }
            }
        }
        let model = Mistakeness::new(p, utility)?;
        Ok(Self { data, centroids, model, mode })
    }

    pub fn model(&self) -> &Mistakeness<'a> {
        &self.model
    }

    pub fn mode(&self) -> MistakenessMode {
        self.mode
    }

    pub fn root_view(&self) -> NodeView {
        let k = self.model.n_focal();
        NodeView::new((0..self.data.len()).collect(), (0..k).collect(), k).expect("root node is valid")
    }

    /// Candidate thresholds on `dim`: distinct member and resident-centroid
    /// coordinates in `[min, max)` of the resident centroids.
    pub fn thresholds(&self, node: &NodeView, dim: usize) -> Vec<f64> {
        let (lo, hi) = node
            .resident()
            .iter()
            .map(|&a| self.centroids.get(a)[dim])
            .fold((f64::INFINITY, f64::NEG_INFINITY), |(l, h), v| (l.min(v), h.max(v)));
        let mut values: Vec<f64> = node
            .members()
            .iter()
            .map(|&x| self.data.row(x)[dim])
            .chain(node.resident().iter().map(|&a| self.centroids.get(a)[dim]))
            .filter(|&t| lo <= t && t < hi)
            .collect();
        values.sort_by(f64::total_cmp);
        values.dedup();
        values
    }

    /// All valid `(dim, threshold)` candidates of a node, in tie-break order.
    pub fn candidates(&self, node: &NodeView) -> Vec<(usize, f64)> {
        (0..self.data.n_features())
            .flat_map(|i| self.thresholds(node, i).into_iter().map(move |t| (i, t)))
            .collect()
    }

    /// Split cost computed directly from its definition.
    pub fn split_cost(&self, node: &NodeView, dim: usize, threshold: f64) -> Result<f64, IemmError> {
        let (left, right) = self.partition_node(node, dim, threshold)?;
        Ok(match self.mode {
            MistakenessMode::Up => {
                let mut total = 0.0;
                for &x in left.members() {
                    for &a in right.resident() {
                        total += self.model.gain(x, a);
                    }
                }
                for &x in right.members() {
                    for &a in left.resident() {
                        total += self.model.gain(x, a);
                    }
                }
                total
            }
            MistakenessMode::Down => self.model.down(&left)? + self.model.down(&right)?,
        })
    }

    /// Children of a node under `x[dim] <= threshold`.
    pub fn partition_node(&self, node: &NodeView, dim: usize, threshold: f64) -> Result<(NodeView, NodeView), IemmError> {
        let k = self.model.n_focal();
        let (ml, mr): (Vec<usize>, Vec<usize>) = node.members().iter().partition(|&&x| self.data.row(x)[dim] <= threshold);
        let (rl, rr): (Vec<usize>, Vec<usize>) =
            node.resident().iter().partition(|&&a| self.centroids.get(a)[dim] <= threshold);
        Ok((NodeView::new(ml, rl, k)?, NodeView::new(mr, rr, k)?))
    }

    /// Least-cost split of a node with at least two resident centroids, or
    /// `None` when all resident centroids coincide on every feature.
    pub fn best_split(&self, node: &NodeView) -> Option<SplitCandidate> {
        let resident = node.resident();
        let r = resident.len();
        if r < 2 {
            return None;
        }
        let k = self.model.n_focal();
        let weights = |x: usize| match self.mode {
            MistakenessMode::Up => self.model.gains(x),
            MistakenessMode::Down => self.model.losses(x),
        };
        let mut best: Option<SplitCandidate> = None;
        let mut local = vec![usize::MAX; k];
        for (slot, &a) in resident.iter().enumerate() {
            local[a] = slot;
        }
        for dim in 0..self.data.n_features() {
            let thresholds = self.thresholds(node, dim);
            if thresholds.is_empty() {
                continue;
            }
            let mut members: Vec<(f64, usize)> = node.members().iter().map(|&x| (self.data.row(x)[dim], x)).collect();
            members.sort_by(|a, b| a.0.total_cmp(&b.0).then(a.1.cmp(&b.1)));
            let mut cents: Vec<(f64, usize)> = resident.iter().map(|&a| (self.centroids.get(a)[dim], a)).collect();
            cents.sort_by(|a, b| a.0.total_cmp(&b.0).then(a.1.cmp(&b.1)));

            // suffix[t*r + s]: weight of centroid slot s summed over members t..
            let n = members.len();
            let mut suffix = vec![0.0; (n + 1) * r];
            for t in (0..n).rev() {
                let w = weights(members[t].1);
                for (slot, &a) in resident.iter().enumerate() {
                    suffix[t * r + slot] = suffix[(t + 1) * r + slot] + w[a];
                }
            }
            let mut prefix = vec![0.0; r];
            let (mut pm, mut pc) = (0, 0);
            for &theta in &thresholds {
                while pm < n && members[pm].0 <= theta {
                    let w = weights(members[pm].1);
                    for (slot, &a) in resident.iter().enumerate() {
                        prefix[slot] += w[a];
                    }
                    pm += 1;
                }
                while pc < r && cents[pc].0 <= theta {
                    pc += 1;
                }
                if pc == 0 || pc == r {
                    continue;
                }
                let suf = &suffix[pm * r..(pm + 1) * r];
                let (fl, fr) = cents.split_at(pc);
                let cost = match self.mode {
                    MistakenessMode::Up => {
                        fr.iter().map(|&(_, a)| prefix[local[a]]).sum::<f64>()
                            + fl.iter().map(|&(_, a)| suf[local[a]]).sum::<f64>()
                    }
                    MistakenessMode::Down => {
                        fl.iter().map(|&(_, a)| prefix[local[a]]).sum::<f64>() / fl.len() as f64
                            + fr.iter().map(|&(_, a)| suf[local[a]]).sum::<f64>() / fr.len() as f64
                    }
                };
                if best.is_none_or(|b| strictly_better(cost, b.cost)) {
                    best = Some(SplitCandidate { dim, threshold: theta, cost });
                }
            }
        }
        best
    }

    fn grow(&self, node: NodeView) -> Result<TreeNode, IemmError> {
        match node.resident() {
            [a] => return Ok(TreeNode::leaf(*a)),
            [] => return Err(MistakenessError::ZeroResidentCentroids.into()),
            _ => {}
        }
        let split = self
            .best_split(&node)
            .ok_or_else(|| IemmError::IndistinguishableCentroids(node.resident()[0], node.resident()[1]))?;
        let (left, right) = self.partition_node(&node, split.dim, split.threshold)?;
        Ok(TreeNode::split(split.dim, split.threshold, split.cost, self.grow(left)?, self.grow(right)?))
    }

    pub fn fit(&self) -> Result<ExplainerTree, IemmError> {
        let p = self.model.partition();
        let root = self.grow(self.root_view())?;
        ExplainerTree::new(p.frame().clone(), p.focal_sets().to_vec(), self.data.n_features(), root)
    }

    /// Sum of leaf mistakeness of `tree` in this context's mode.
    pub fn total_mistakeness(&self, tree: &ExplainerTree) -> Result<f64, IemmError> {
        let k = self.model.n_focal();
        let mut total = 0.0;
        for (a, members) in tree.leaf_members(self.data)?.into_iter().enumerate() {
            total += self.model.node(&NodeView::new(members, vec![a], k)?, self.mode)?;
        }
        Ok(total)
    }
}

pub fn iemm_fit(
    data: &Dataset,
    p: &CredalPartition,
    centroids: &CentroidSet,
    cfg: &IemmConfig,
) -> Result<ExplainerTree, IemmError> {
    let spec = UtilitySpec::new(cfg.lambda);
    Iemm::new(data, p, centroids, &spec, cfg.mode())?.fit()
}

pub fn split_cost(
    data: &Dataset,
    p: &CredalPartition,
    node: &NodeView,
    centroids: &CentroidSet,
    cand: (usize, f64),
    cfg: &IemmConfig,
) -> Result<f64, IemmError> {
    let spec = UtilitySpec::new(cfg.lambda);
    Iemm::new(data, p, centroids, &spec, cfg.mode())?.split_cost(node, cand.0, cand.1)
}

/// Sum over leaves of the λ-mistakeness of the points routed there.
pub fn tree_total_mistakeness(
    tree: &ExplainerTree,
    data: &Dataset,
    p: &CredalPartition,
    cfg: &IemmConfig,
) -> Result<f64, IemmError> {
    if data.len() != p.len() {
        return Err(IemmError::RowCountMismatch { data: data.len(), partition: p.len() });
    }
    let spec = UtilitySpec::new(cfg.lambda);
    let model = Mistakeness::new(p, &spec)?;
    let k = p.n_focal();
    let mode = cfg.mode();
    let mut total = 0.0;
    for (a, members) in tree.leaf_members(data)?.into_iter().enumerate() {
        total += model.node(&NodeView::new(members, vec![a], k)?, mode)?;
    }
    Ok(total)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::belief::{Frame, Subset};
    use crate::partition::HardClustering;
    use proptest::prelude::*;

    fn hard_1d() -> (Dataset, CredalPartition, CentroidSet) {
        let data = Dataset::from_rows(&[vec![0.0], vec![1.0], vec![10.0], vec![11.0]]).unwrap();
        let hard = HardClustering::new(vec![0, 0, 1, 1], 2).unwrap();
        let p = CredalPartition::from_hard(Frame::numbered(2).unwrap(), &hard).unwrap();
        let c = CentroidSet::new(vec![vec![0.5], vec![10.5]]).unwrap();
        (data, p, c)
    }

    #[test]
    fn separable_1d_split() {
        let (data, p, c) = hard_1d();
        let cfg = IemmConfig::new(Lambda::ZERO);
        let tree = iemm_fit(&data, &p, &c, &cfg).unwrap();
        match tree.root() {
            TreeNode::Split { dim, threshold, cost, .. } => {
                assert_eq!(*dim, 0);
                assert!((0.5..10.5).contains(threshold));
                assert_eq!(*cost, 0.0);
            }
            _ => panic!("expected a split"),
        }
        assert_eq!(tree_total_mistakeness(&tree, &data, &p, &cfg).unwrap(), 0.0);
        assert_eq!(tree.predict(&[0.5]).unwrap(), Subset::singleton(0));
        assert_eq!(tree.predict(&[10.5]).unwrap(), Subset::singleton(1));
        // the lowest zero-cost threshold is the last point of the left blob
        assert_eq!(*tree.root(), TreeNode::split(0, 1.0, 0.0, TreeNode::leaf(0), TreeNode::leaf(1)));
        assert_eq!(tree.predict(&[5.0]).unwrap(), Subset::singleton(1));
    }

    #[test]
    fn boundary_goes_left() {
        let (data, p, c) = hard_1d();
        let tree = iemm_fit(&data, &p, &c, &IemmConfig::new(Lambda::ZERO)).unwrap();
        let TreeNode::Split { threshold, .. } = tree.root() else { panic!() };
        assert_eq!(tree.predict(&[*threshold]).unwrap(), Subset::singleton(0));
        assert!(matches!(tree.predict(&[1.0, 2.0]), Err(IemmError::DimensionMismatch { .. })));
    }

    #[test]
    fn single_focal_set_gives_leaf() {
        let data = Dataset::from_rows(&[vec![0.0, 1.0], vec![2.0, 3.0]]).unwrap();
        let f = Frame::numbered(1).unwrap();
        let p = CredalPartition::new(f, vec![Subset::singleton(0)], &[vec![1.0], vec![1.0]]).unwrap();
        let c = CentroidSet::new(vec![vec![1.0, 2.0]]).unwrap();
        let tree = iemm_fit(&data, &p, &c, &IemmConfig::new(Lambda::INFINITY)).unwrap();
        assert_eq!(tree.root(), &TreeNode::leaf(0));
        assert_eq!(tree.depth(), 0);
    }

    #[test]
    fn coincident_centroids_rejected() {
        let (data, p, _) = hard_1d();
        let c = CentroidSet::new(vec![vec![3.0], vec![3.0]]).unwrap();
        let err = iemm_fit(&data, &p, &c, &IemmConfig::new(Lambda::ZERO)).unwrap_err();
        assert_eq!(err, IemmError::IndistinguishableCentroids(0, 1));
    }

    #[test]
    fn mode_follows_lambda_sign() {
        assert_eq!(IemmConfig::new(Lambda::ZERO).mode(), MistakenessMode::Up);
        assert_eq!(IemmConfig::new(Lambda::new(-1.0).unwrap()).mode(), MistakenessMode::Down);
        let forced = IemmConfig::new(Lambda::INFINITY).with_mode(MistakenessMode::Down);
        assert_eq!(forced.mode(), MistakenessMode::Down);
    }

    #[test]
    fn hard_split_cost_counts_crossings() {
        let data = Dataset::from_rows(&[vec![0.0], vec![6.0], vec![10.0], vec![4.0]]).unwrap();
        let hard = HardClustering::new(vec![0, 0, 1, 1], 2).unwrap();
        let p = CredalPartition::from_hard(Frame::numbered(2).unwrap(), &hard).unwrap();
        let c = CentroidSet::new(vec![vec![1.0], vec![9.0]]).unwrap();
        let cfg = IemmConfig::new(Lambda::ZERO);
        let root = NodeView::new(vec![0, 1, 2, 3], vec![0, 1], 2).unwrap();
        // x ≤ 5: point 1 (label 0) goes right, point 3 (label 1) goes left
        assert_eq!(split_cost(&data, &p, &root, &c, (0, 5.0), &cfg).unwrap(), 2.0);
        assert_eq!(split_cost(&data, &p, &root, &c, (0, 4.0), &cfg).unwrap(), 2.0);
        assert_eq!(split_cost(&data, &p, &root, &c, (0, 1.0), &cfg).unwrap(), 1.0);
        assert_eq!(split_cost(&data, &p, &root, &c, (0, 6.0), &cfg).unwrap(), 1.0);
    }

    fn random_instance(seed_rows: &[(f64, f64, u8)], c: usize) -> Option<(Dataset, CredalPartition, CentroidSet)> {
        use crate::partition::metacluster_centroids;
        let frame = Frame::numbered(c).unwrap();
        let focal = frame.nonempty_subsets();
        let rows: Vec<Vec<f64>> = seed_rows.iter().map(|&(x, y, _)| vec![x, y]).collect();
        let masses: Vec<Vec<f64>> = seed_rows
            .iter()
            .enumerate()
            .map(|(j, &(_, _, s))| {
                let mut w: Vec<f64> = (0..focal.len()).map(|b| ((s as usize * 7 + b * 13 + j) % 5) as f64).collect();
                w[(s as usize) % focal.len()] += 1.0;
                let t: f64 = w.iter().sum();
                w.iter().map(|v| v / t).collect()
            })
            .collect();
        let data = Dataset::from_rows(&rows).ok()?;
        let p = CredalPartition::new(frame, focal, &masses).ok()?;
        let singles = (0..c).map(|l| (l, vec![rows[l % rows.len()][0] + l as f64, rows[l % rows.len()][1]])).collect();
        let cents = metacluster_centroids(&p, &singles).ok()?;
        Some((data, p, cents))
    }

    fn lambdas() -> impl Strategy<Value = Lambda> {
        prop::sample::select(vec![-f64::INFINITY, -2.0, -1.0, 0.0, 0.5, 1.0, 2.0, f64::INFINITY])
            .prop_map(|v| Lambda::new(v).unwrap())
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(64))]

        #[test]
        fn greedy_split_is_argmin(
            rows in prop::collection::vec((-5.0..5.0f64, -5.0..5.0f64, 0u8..16), 4..30),
            c in 2usize..4,
            lambda in lambdas(),
        ) {
            let Some((data, p, cents)) = random_instance(&rows, c) else { return Ok(()) };
            let spec = UtilitySpec::new(lambda);
            let iemm = match Iemm::new(&data, &p, &cents, &spec, MistakenessMode::for_lambda(lambda)) {
                Ok(i) => i,
                Err(IemmError::IndistinguishableCentroids(..)) => return Ok(()),
                Err(e) => panic!("{e}"),
            };
            let root = iemm.root_view();
            let best = iemm.best_split(&root).unwrap();
            let direct = iemm.split_cost(&root, best.dim, best.threshold).unwrap();
            prop_assert!((direct - best.cost).abs() < 1e-9);
            for (dim, t) in iemm.candidates(&root) {
                let (l, r) = iemm.partition_node(&root, dim, t).unwrap();
                if l.resident().is_empty() || r.resident().is_empty() {
                    continue;
                }
                prop_assert!(best.cost <= iemm.split_cost(&root, dim, t).unwrap() + 1e-9);
            }

            let tree = iemm.fit().unwrap();
            prop_assert_eq!(tree.leaf_count(), p.n_focal());
            prop_assert!(tree.depth() < p.n_focal());
            tree.check_centroids(&cents).unwrap();
            prop_assert_eq!(&tree, &iemm.fit().unwrap());

            if iemm.mode() == MistakenessMode::Up {
                let recorded: f64 = tree.split_costs().iter().sum();
                let total = iemm.total_mistakeness(&tree).unwrap();
                prop_assert!((recorded - total).abs() < 1e-9, "{recorded} vs {total}");
            }
        }
    }

    #[test]
    fn json_round_trip() {
        let (data, p, c) = hard_1d();
        let tree = iemm_fit(&data, &p, &c, &IemmConfig::new(Lambda::ZERO)).unwrap();
        let back = ExplainerTree::from_json(&tree.to_json()).unwrap();
        assert_eq!(back, tree);
        assert!(tree.to_json().contains("\"leaf\": \"w1\""));
    }

    #[test]
    fn malformed_trees_rejected() {
        let f = Frame::numbered(2).unwrap();
        let focal = vec![Subset::singleton(0), Subset::singleton(1)];
        let dup = TreeNode::split(0, 1.0, 0.0, TreeNode::leaf(0), TreeNode::leaf(0));
        assert!(ExplainerTree::new(f.clone(), focal.clone(), 1, dup).is_err());
        let bad_dim = TreeNode::split(3, 1.0, 0.0, TreeNode::leaf(0), TreeNode::leaf(1));
        assert!(ExplainerTree::new(f.clone(), focal.clone(), 1, bad_dim).is_err());
        let missing = TreeNode::leaf(0);
        assert!(ExplainerTree::new(f, focal, 1, missing).is_err());
    }

    #[test]
    fn dot_output_is_stable() {
        let (data, p, c) = hard_1d();
        let tree = iemm_fit(&data, &p, &c, &IemmConfig::new(Lambda::ZERO)).unwrap();
        let dot = tree.to_dot(data.feature_names());
        assert!(dot.starts_with("digraph explainer {"));
        assert!(dot.contains("x ≤ 1.00"));
        assert!(dot.contains("n0 -> n1 [label=\"true\"]"));
        assert_eq!(dot, tree.to_dot(data.feature_names()));
    }
}
