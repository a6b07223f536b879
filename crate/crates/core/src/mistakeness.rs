//! Explanation costs, evidential mistakeness and representativeness.
//!
//! Everything here is expressed through two `N × K` matrices computed once
//! per (partition, utility) pair:
//!
//! * `gain[x][A] = Σ_B U(A, B)·m_x(B)`, the expected utility of answering `A`;
//! * `loss[x][A] = Σ_B (1 − U(A, B))·m_x(B)`, the expected cost of answering `A`.
//!
//! The candidate metaclusters are the partition's focal sets. All sums run in
//! increasing index order.

use thiserror::Error;

use crate::belief::Subset;
use crate::partition::{CredalPartition, HardClustering};
use crate::utility::{Lambda, Utility, UtilityError, UtilitySpec, UtilityTable};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum MistakenessError {
    #[error("observation index {0} out of range")]
    InvalidObservation(usize),
    #[error("focal-set index {0} out of range")]
    InvalidFocal(usize),
    #[error("focal-set index {0} listed twice in a node")]
    DuplicateFocal(usize),
    #[error("node has no resident centroid")]
    ZeroResidentCentroids,
    #[error("length mismatch: {0} vs {1}")]
    LengthMismatch(usize, usize),
    #[error(transparent)]
    Utility(#[from] UtilityError),
}

/// Which mistakeness form a node is scored with.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum MistakenessMode {
    /// Cost of not assigning members to the metaclusters outside the node.
    Up,
    /// Expected cost of assigning members to a metacluster inside the node.
    Down,
}

impl MistakenessMode {
    /// `λ ≥ 0` selects [`MistakenessMode::Up`], `λ < 0` selects [`MistakenessMode::Down`].
    pub fn for_lambda(lambda: Lambda) -> Self {
        if lambda.value() >= 0.0 {
            MistakenessMode::Up
        } else {
            MistakenessMode::Down
        }
    }
}

/// A tree node seen from the partition: its member observations and the
/// focal sets whose centroids it contains.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct NodeView {
    members: Vec<usize>,
    resident: Vec<usize>,
    complement: Vec<usize>,
}

impl NodeView {
    pub fn new(members: Vec<usize>, mut resident: Vec<usize>, n_focal: usize) -> Result<Self, MistakenessError> {
        resident.sort_unstable();
        if let Some(&bad) = resident.iter().find(|&&a| a >= n_focal) {
            return Err(MistakenessError::InvalidFocal(bad));
        }
        if let Some(pair) = resident.windows(2).find(|p| p[0] == p[1]) {
            return Err(MistakenessError::DuplicateFocal(pair[0]));
        }
        let complement = (0..n_focal).filter(|a| resident.binary_search(a).is_err()).collect();
        Ok(Self { members, resident, complement })
    }

    pub fn members(&self) -> &[usize] {
        &self.members
    }

    pub fn resident(&self) -> &[usize] {
        &self.resident
    }

    pub fn complement(&self) -> &[usize] {
        &self.complement
    }
}

/// Focal-set index chosen for every observation.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Assignment(Vec<usize>);

impl Assignment {
    pub fn new(focal: Vec<usize>, n_focal: usize) -> Result<Self, MistakenessError> {
        if let Some(&bad) = focal.iter().find(|&&a| a >= n_focal) {
            return Err(MistakenessError::InvalidFocal(bad));
        }
        Ok(Self(focal))
    }

    pub fn as_slice(&self) -> &[usize] {
        &self.0
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }
}

/// Precomputed expected gains and losses of a partition under one utility.
pub struct Mistakeness<'a> {
    partition: &'a CredalPartition,
    utility: &'a dyn Utility,
    table: UtilityTable,
    gain: Vec<f64>,
    loss: Vec<f64>,
}

impl<'a> Mistakeness<'a> {
    pub fn new(partition: &'a CredalPartition, utility: &'a dyn Utility) -> Result<Self, MistakenessError> {
        let table = UtilityTable::new(utility, partition.focal_sets())?;
        let k = partition.n_focal();
        let n = partition.len();
        let mut gain = Vec::with_capacity(n * k);
        let mut loss = Vec::with_capacity(n * k);
        for row in partition.rows() {
            for a in 0..k {
                let u = table.row(a);
                let mut g = 0.0;
                let mut l = 0.0;
                for (b, &m) in row.iter().enumerate() {
                    g += u[b] * m;
                    l += (1.0 - u[b]) * m;
                }
                gain.push(g);
                loss.push(l);
            }
        }
        Ok(Self { partition, utility, table, gain, loss })
    }

    pub fn partition(&self) -> &CredalPartition {
        self.partition
    }

    pub fn table(&self) -> &UtilityTable {
        &self.table
    }

    pub fn n_focal(&self) -> usize {
        self.partition.n_focal()
    }

    /// `Σ_B U(A_a, B)·m_x(B)`.
    pub fn gain(&self, x: usize, a: usize) -> f64 {
        self.gain[x * self.n_focal() + a]
    }

    /// `Σ_B (1 − U(A_a, B))·m_x(B)`.
    pub fn loss(&self, x: usize, a: usize) -> f64 {
        self.loss[x * self.n_focal() + a]
    }

    pub fn gains(&self, x: usize) -> &[f64] {
        let k = self.n_focal();
        &self.gain[x * k..(x + 1) * k]
    }

    pub fn losses(&self, x: usize) -> &[f64] {
        let k = self.n_focal();
        &self.loss[x * k..(x + 1) * k]
    }

    fn check_observation(&self, x: usize) -> Result<(), MistakenessError> {
        if x < self.partition.len() {
            Ok(())
        } else {
            Err(MistakenessError::InvalidObservation(x))
        }
    }

    /// Sum over candidate metaclusters other than `assigned` of the expected
    /// utility of answering them at `x`.
    pub fn cost_up(&self, x: usize, assigned: Subset) -> Result<f64, MistakenessError> {
        self.check_observation(x)?;
        Ok(self
            .partition
            .focal_sets()
            .iter()
            .zip(self.gains(x))
            .filter(|(&a, _)| a != assigned)
            .map(|(_, &g)| g)
            .sum())
    }

    /// Expected cost of answering `assigned` at `x`.
    pub fn cost_down(&self, x: usize, assigned: Subset) -> Result<f64, MistakenessError> {
        self.check_observation(x)?;
        if assigned.is_empty() {
            return Err(UtilityError::EmptySubset.into());
        }
        if let Some(a) = self.partition.focal_index(assigned) {
            return Ok(self.loss(x, a));
        }
        Ok(self
            .partition
            .focal_sets()
            .iter()
            .zip(self.partition.row(x))
            .map(|(&b, &m)| (1.0 - self.utility.eval(assigned, b)) * m)
            .sum())
    }

    fn check_node(&self, node: &NodeView) -> Result<(), MistakenessError> {
        if node.resident.len() + node.complement.len() != self.n_focal() {
            return Err(MistakenessError::LengthMismatch(
                node.resident.len() + node.complement.len(),
                self.n_focal(),
            ));
        }
        node.members.iter().try_for_each(|&x| self.check_observation(x))
    }

    pub fn up(&self, node: &NodeView) -> Result<f64, MistakenessError> {
        self.check_node(node)?;
        let mut total = 0.0;
        for &x in &node.members {
            let g = self.gains(x);
            for &a in &node.complement {
                total += g[a];
            }
        }
        Ok(total)
    }

    pub fn down(&self, node: &NodeView) -> Result<f64, MistakenessError> {
        self.check_node(node)?;
        if node.resident.is_empty() {
            return Err(MistakenessError::ZeroResidentCentroids);
        }
        let mut total = 0.0;
        for &x in &node.members {
            let l = self.losses(x);
            for &a in &node.resident {
                total += l[a];
            }
        }
        Ok(total / node.resident.len() as f64)
    }

    pub fn node(&self, node: &NodeView, mode: MistakenessMode) -> Result<f64, MistakenessError> {
        match mode {
            MistakenessMode::Up => self.up(node),
            MistakenessMode::Down => self.down(node),
        }
    }

    /// Mean expected utility of the assignment.
    pub fn representativeness(&self, delta: &Assignment) -> Result<f64, MistakenessError> {
        let n = self.partition.len();
        if delta.len() != n {
            return Err(MistakenessError::LengthMismatch(delta.len(), n));
        }
        if let Some(&bad) = delta.0.iter().find(|&&a| a >= self.n_focal()) {
            return Err(MistakenessError::InvalidFocal(bad));
        }
        let total: f64 = delta.0.iter().enumerate().map(|(x, &a)| self.gain(x, a)).sum();
        Ok(total / n as f64)
    }

    /// κ with the focal sets as candidate metaclusters.
    pub fn kappa(&self) -> f64 {
        self.gain.iter().sum()
    }

    /// κ over an explicit candidate list.
    pub fn kappa_over(&self, candidates: &[Subset]) -> Result<f64, MistakenessError> {
        if candidates.iter().any(|c| c.is_empty()) {
            return Err(UtilityError::EmptySubset.into());
        }
        let focal = self.partition.focal_sets();
        let per_focal: Vec<f64> = focal
            .iter()
            .map(|&b| candidates.iter().map(|&c| self.utility.eval(c, b)).sum())
            .collect();
        let mut total = 0.0;
        for row in self.partition.rows() {
            for (m, s) in row.iter().zip(&per_focal) {
                total += m * s;
            }
        }
        Ok(total)
    }
}

pub fn cost_up(p: &CredalPartition, spec: &UtilitySpec, x: usize, assigned: Subset) -> Result<f64, MistakenessError> {
    Mistakeness::new(p, spec)?.cost_up(x, assigned)
}

pub fn cost_down(p: &CredalPartition, spec: &UtilitySpec, x: usize, assigned: Subset) -> Result<f64, MistakenessError> {
    Mistakeness::new(p, spec)?.cost_down(x, assigned)
}

pub fn mistakeness_up(p: &CredalPartition, spec: &UtilitySpec, node: &NodeView) -> Result<f64, MistakenessError> {
    Mistakeness::new(p, spec)?.up(node)
}

pub fn mistakeness_down(p: &CredalPartition, spec: &UtilitySpec, node: &NodeView) -> Result<f64, MistakenessError> {
    Mistakeness::new(p, spec)?.down(node)
}

/// Up-mistakeness with `U^λ` for `λ ≥ 0`, down-mistakeness otherwise.
pub fn lambda_mistakeness(p: &CredalPartition, lambda: Lambda, node: &NodeView) -> Result<f64, MistakenessError> {
    let spec = UtilitySpec::new(lambda);
    Mistakeness::new(p, &spec)?.node(node, MistakenessMode::for_lambda(lambda))
}

/// Fraction of observations on which two hard clusterings agree.
pub fn representativeness_hard(reference: &HardClustering, candidate: &HardClustering) -> Result<f64, MistakenessError> {
    if reference.len() != candidate.len() {
        return Err(MistakenessError::LengthMismatch(reference.len(), candidate.len()));
    }
    if reference.is_empty() {
        return Ok(1.0);
    }
    let agree = reference.labels().iter().zip(candidate.labels()).filter(|(a, b)| a == b).count();
    Ok(agree as f64 / reference.len() as f64)
}

pub fn representativeness_evidential(
    p: &CredalPartition,
    utility: &dyn Utility,
    delta: &Assignment,
) -> Result<f64, MistakenessError> {
    Mistakeness::new(p, utility)?.representativeness(delta)
}

pub fn kappa(p: &CredalPartition, utility: &dyn Utility, candidates: &[Subset]) -> Result<f64, MistakenessError> {
    Mistakeness::new(p, utility)?.kappa_over(candidates)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::belief::Frame;
    use proptest::prelude::*;

    fn lam(v: f64) -> UtilitySpec {
        UtilitySpec::new(Lambda::new(v).unwrap())
    }

    /// Ω = {w1, w2}, focal sets {w1}, {w2}, {w1,w2}; every point categorical on {w1}.
    fn table_one() -> CredalPartition {
        let f = Frame::numbered(2).unwrap();
        let focal = vec![Subset::singleton(0), Subset::singleton(1), f.omega()];
        CredalPartition::new(f, focal, &vec![vec![1.0, 0.0, 0.0]; 3]).unwrap()
    }

    #[test]
    fn table_one_costs() {
        let p = table_one();
        let (w1, w2, both) = (Subset::singleton(0), Subset::singleton(1), Subset::from_bits(0b11));
        // u = U({w1,w2},{w1}) = 0.5 under λ = 1
        let spec = lam(1.0);
        let m = Mistakeness::new(&p, &spec).unwrap();
        assert_eq!(m.cost_up(0, w1).unwrap(), 0.5);
        assert_eq!(m.cost_up(1, both).unwrap(), 1.0);
        assert_eq!(m.cost_up(2, w2).unwrap(), 1.5);
        assert_eq!(m.cost_down(0, w1).unwrap(), 0.0);
        assert_eq!(m.cost_down(1, both).unwrap(), 0.5);
        assert_eq!(m.cost_down(2, w2).unwrap(), 1.0);
        assert!(m.cost_up(5, w1).is_err());
    }

    #[test]
    fn cost_down_outside_focal_sets() {
        let f = Frame::numbered(3).unwrap();
        let p = CredalPartition::new(f, vec![Subset::singleton(0), Subset::singleton(1)], &[vec![0.5, 0.5]]).unwrap();
        let spec = lam(1.0);
        let m = Mistakeness::new(&p, &spec).unwrap();
        // U({w1,w2,w3}, {w1}) = 1/3 under λ = 1
        let omega = Subset::from_bits(0b111);
        assert!((m.cost_down(0, omega).unwrap() - 2.0 / 3.0).abs() < 1e-15);
    }

    #[test]
    fn node_mistakeness_single_terms() {
        let p = table_one();
        let spec = lam(1.0);
        let m = Mistakeness::new(&p, &spec).unwrap();
        let everything = NodeView::new(vec![0, 1, 2], vec![0, 1, 2], 3).unwrap();
        assert_eq!(m.up(&everything).unwrap(), 0.0);
        // one point, only {w1,w2} outside: U({w1,w2}, {w1}) = 0.5
        let node = NodeView::new(vec![0], vec![0, 1], 3).unwrap();
        assert_eq!(m.up(&node).unwrap(), 0.5);
        let leaf = NodeView::new(vec![0, 1], vec![0], 3).unwrap();
        assert_eq!(m.down(&leaf).unwrap(), 0.0);
        let all = NodeView::new(vec![0], vec![0, 1, 2], 3).unwrap();
        assert_eq!(m.down(&all).unwrap(), (0.0 + 1.0 + 0.5) / 3.0);
        let empty = NodeView::new(vec![0], vec![], 3).unwrap();
        assert_eq!(m.down(&empty), Err(MistakenessError::ZeroResidentCentroids));
        assert!(NodeView::new(vec![0], vec![3], 3).is_err());
        assert!(NodeView::new(vec![0], vec![1, 1], 3).is_err());
    }

    #[test]
    fn lambda_dispatch() {
        let p = table_one();
        let node = NodeView::new(vec![0, 1], vec![0, 1], 3).unwrap();
        let up = Mistakeness::new(&p, &lam(1.0)).unwrap().up(&node).unwrap();
        let down = Mistakeness::new(&p, &lam(-1.0)).unwrap().down(&node).unwrap();
        assert_eq!(lambda_mistakeness(&p, Lambda::new(1.0).unwrap(), &node).unwrap(), up);
        assert_eq!(lambda_mistakeness(&p, Lambda::new(-1.0).unwrap(), &node).unwrap(), down);
        // λ = +∞: outside {w1,w2} includes {w1} so each member pays 1
        assert_eq!(lambda_mistakeness(&p, Lambda::INFINITY, &node).unwrap(), 2.0);
        assert_eq!(MistakenessMode::for_lambda(Lambda::ZERO), MistakenessMode::Up);
    }

    #[test]
    fn hard_representativeness() {
        let a = HardClustering::new(vec![0, 1, 0, 1], 2).unwrap();
        let b = HardClustering::new(vec![1, 0, 1, 0], 2).unwrap();
        let c = HardClustering::new(vec![0, 1, 1, 0], 2).unwrap();
        assert_eq!(representativeness_hard(&a, &a).unwrap(), 1.0);
        assert_eq!(representativeness_hard(&a, &b).unwrap(), 0.0);
        assert_eq!(representativeness_hard(&a, &c).unwrap(), 0.5);
    }

    #[test]
    fn evidential_representativeness() {
        let p = table_one();
        let delta = Assignment::new(vec![0, 0, 0], 3).unwrap();
        for l in [f64::NEG_INFINITY, -1.0, 0.0, 2.0, f64::INFINITY] {
            assert_eq!(representativeness_evidential(&p, &lam(l), &delta).unwrap(), 1.0);
        }
        let f = Frame::numbered(2).unwrap();
        let p = CredalPartition::new(f, vec![Subset::singleton(0), Subset::singleton(1)], &[vec![0.5, 0.5]]).unwrap();
        let delta = Assignment::new(vec![0], 2).unwrap();
        assert_eq!(representativeness_evidential(&p, &lam(0.0), &delta).unwrap(), 0.5);
    }

    #[test]
    fn hard_representativeness_coincides_with_accuracy() {
        let f = Frame::numbered(3).unwrap();
        let truth = HardClustering::new(vec![0, 1, 2, 2, 1, 0, 0], 3).unwrap();
        let guess = HardClustering::new(vec![0, 1, 1, 2, 0, 0, 2], 3).unwrap();
        let p = CredalPartition::from_hard(f, &truth).unwrap();
        let delta = Assignment::new(guess.labels().to_vec(), 3).unwrap();
        let r = representativeness_evidential(&p, &lam(0.0), &delta).unwrap();
        assert_eq!(r, representativeness_hard(&truth, &guess).unwrap());
    }

    #[test]
    fn kappa_examples() {
        let f = Frame::numbered(3).unwrap();
        let hard = HardClustering::new(vec![0, 1, 2, 1], 3).unwrap();
        let p = CredalPartition::from_hard(f.clone(), &hard).unwrap();
        let singles: Vec<Subset> = (0..3).map(Subset::singleton).collect();
        assert_eq!(kappa(&p, &lam(0.0), &singles).unwrap(), 4.0);

        let pair = Subset::from_bits(0b011);
        let p = CredalPartition::new(f.clone(), vec![pair], &[vec![1.0], vec![1.0]]).unwrap();
        let candidates = f.nonempty_subsets();
        let supersets = candidates.iter().filter(|c| pair.is_subset_of(**c)).count() as f64;
        assert_eq!(kappa(&p, &lam(f64::INFINITY), &candidates).unwrap(), 2.0 * supersets);
    }

    fn random_partition(weights: &[Vec<f64>], c: usize) -> CredalPartition {
        let f = Frame::numbered(c).unwrap();
        let focal = f.nonempty_subsets();
        let rows: Vec<Vec<f64>> = weights
            .iter()
            .map(|w| {
                let w = &w[..focal.len()];
                let s: f64 = w.iter().sum();
                w.iter().map(|v| v / s).collect()
            })
            .collect();
        CredalPartition::new(f, focal, &rows).unwrap()
    }

    proptest! {
        #[test]
        fn down_cost_never_exceeds_up_cost(
            c in 1usize..=3,
            weights in proptest::collection::vec(proptest::collection::vec(0.01f64..1.0, 7), 1..6),
            lambda in prop_oneof![Just(f64::NEG_INFINITY), Just(f64::INFINITY), -5.0f64..5.0],
        ) {
            let p = random_partition(&weights, c);
            let spec = lam(lambda);
            let m = Mistakeness::new(&p, &spec).unwrap();
            for x in 0..p.len() {
                for &a in p.focal_sets() {
                    let down = m.cost_down(x, a).unwrap();
                    let up = m.cost_up(x, a).unwrap();
                    // both are bounded by Σ_{B ≠ a} m_x(B) from opposite sides
                    prop_assert!(down <= up + 1e-12);
                    prop_assert!((-1e-12..=1.0 + 1e-12).contains(&down));
                }
            }
        }

        #[test]
        fn kappa_equals_triple_sum(
            c in 1usize..=3,
            weights in proptest::collection::vec(proptest::collection::vec(0.01f64..1.0, 7), 1..8),
            lambda in -4.0f64..4.0,
        ) {
            let p = random_partition(&weights, c);
            let spec = lam(lambda);
            let mut brute = 0.0;
            for x in 0..p.len() {
                for (bi, &b) in p.focal_sets().iter().enumerate() {
                    for &cand in p.focal_sets() {
                        brute += p.row(x)[bi] * spec.utility(cand, b).unwrap();
                    }
                }
            }
            let m = Mistakeness::new(&p, &spec).unwrap();
            prop_assert!((m.kappa() - brute).abs() < 1e-9);
            prop_assert!((m.kappa_over(p.focal_sets()).unwrap() - brute).abs() < 1e-9);
        }
    }

    #[test]
    fn categorical_point_utility_costs_are_equal() {
        let f = Frame::numbered(3).unwrap();
        let focal = f.nonempty_subsets();
        let rows: Vec<Vec<f64>> = (0..7).map(|i| (0..7).map(|j| if i == j { 1.0 } else { 0.0 }).collect()).collect();
        let p = CredalPartition::new(f, focal.clone(), &rows).unwrap();
        let spec = lam(0.0);
        let m = Mistakeness::new(&p, &spec).unwrap();
        for x in 0..7 {
            for &a in &focal {
                assert_eq!(m.cost_down(x, a).unwrap(), m.cost_up(x, a).unwrap());
            }
        }
    }
}
