//! Axis-aligned explainer trees with one leaf per focal set.

use std::fmt::Write as _;

use serde::{Deserialize, Serialize};

use super::IemmError;
use crate::belief::{Frame, Subset};
use crate::mistakeness::Assignment;
use crate::partition::{CentroidSet, Dataset};

/// A node of an explainer tree. Internal nodes route `x[dim] <= threshold`
/// to the left child.
#[derive(Debug, Clone, PartialEq)]
pub enum TreeNode {
    Leaf {
        focal: usize,
    },
    Split {
        dim: usize,
        threshold: f64,
        /// Mistakeness of the chosen split.
        cost: f64,
        left: Box<TreeNode>,
        right: Box<TreeNode>,
    },
}

impl TreeNode {
    pub fn leaf(focal: usize) -> Self {
        TreeNode::Leaf { focal }
    }

    pub fn split(dim: usize, threshold: f64, cost: f64, left: TreeNode, right: TreeNode) -> Self {
        TreeNode::Split { dim, threshold, cost, left: Box::new(left), right: Box::new(right) }
    }

    fn depth(&self) -> usize {
        match self {
            TreeNode::Leaf { .. } => 0,
            TreeNode::Split { left, right, .. } => 1 + left.depth().max(right.depth()),
        }
    }

    fn collect_leaves(&self, out: &mut Vec<usize>) {
        match self {
            TreeNode::Leaf { focal } => out.push(*focal),
            TreeNode::Split { left, right, .. } => {
                left.collect_leaves(out);
                right.collect_leaves(out);
            }
        }
    }
}

/// One step on a root-to-leaf path.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PathStep {
    pub dim: usize,
    pub threshold: f64,
    /// `true` when the path takes the `<=` branch.
    pub left: bool,
}

/// A decision tree mapping points to focal sets.
#[derive(Debug, Clone, PartialEq)]
pub struct ExplainerTree {
    frame: Frame,
    focal_sets: Vec<Subset>,
    n_features: usize,
    root: TreeNode,
}

impl ExplainerTree {
    /// Checks that every focal set labels exactly one leaf and that splits
    /// reference valid features with finite thresholds.
    pub fn new(frame: Frame, focal_sets: Vec<Subset>, n_features: usize, root: TreeNode) -> Result<Self, IemmError> {
        let k = focal_sets.len();
        let mut leaves = Vec::new();
        root.collect_leaves(&mut leaves);
        let mut seen = vec![false; k];
        for &leaf in &leaves {
            if leaf >= k || seen[leaf] {
                return Err(IemmError::MalformedTree(format!("leaf #{leaf} is out of range or repeated")));
            }
            seen[leaf] = true;
        }
        if leaves.len() != k {
            return Err(IemmError::MalformedTree(format!("{} leaves for {k} focal sets", leaves.len())));
        }
        let mut stack = vec![&root];
        while let Some(node) = stack.pop() {
            if let TreeNode::Split { dim, threshold, left, right, .. } = node {
                if *dim >= n_features || !threshold.is_finite() {
                    return Err(IemmError::MalformedTree(format!("bad split x{dim} <= {threshold}")));
                }
                stack.push(left);
                stack.push(right);
            }
        }
        Ok(Self { frame, focal_sets, n_features, root })
    }

    pub fn frame(&self) -> &Frame {
        &self.frame
    }

    pub fn focal_sets(&self) -> &[Subset] {
        &self.focal_sets
    }

    pub fn n_features(&self) -> usize {
        self.n_features
    }

    pub fn root(&self) -> &TreeNode {
        &self.root
    }

    pub fn leaf_count(&self) -> usize {
        self.focal_sets.len()
    }

    pub fn depth(&self) -> usize {
        self.root.depth()
    }

    /// Leaf focal-set indices in left-to-right order.
    pub fn leaves(&self) -> Vec<usize> {
        let mut out = Vec::with_capacity(self.focal_sets.len());
        self.root.collect_leaves(&mut out);
        out
    }

    /// Focal-set index of the leaf containing `point`.
    pub fn predict_index(&self, point: &[f64]) -> Result<usize, IemmError> {
        if point.len() != self.n_features {
            return Err(IemmError::DimensionMismatch { expected: self.n_features, got: point.len() });
        }
        let mut node = &self.root;
        loop {
            match node {
                TreeNode::Leaf { focal } => return Ok(*focal),
                TreeNode::Split { dim, threshold, left, right, .. } => {
                    node = if point[*dim] <= *threshold { left } else { right };
                }
            }
        }
    }

    pub fn predict(&self, point: &[f64]) -> Result<Subset, IemmError> {
        self.predict_index(point).map(|a| self.focal_sets[a])
    }

    /// Leaf assignment of every observation.
    pub fn assign(&self, data: &Dataset) -> Result<Assignment, IemmError> {
        let focal = data.rows().map(|r| self.predict_index(r)).collect::<Result<Vec<_>, _>>()?;
        Ok(Assignment::new(focal, self.focal_sets.len())?)
    }

    /// Observations routed to each leaf, indexed by focal set.
    pub fn leaf_members(&self, data: &Dataset) -> Result<Vec<Vec<usize>>, IemmError> {
        let mut members = vec![Vec::new(); self.focal_sets.len()];
        for (j, row) in data.rows().enumerate() {
            members[self.predict_index(row)?].push(j);
        }
        Ok(members)
    }

    /// Root-to-leaf path of every leaf, indexed by focal set.
    pub fn paths(&self) -> Vec<Vec<PathStep>> {
        fn walk(node: &TreeNode, prefix: &mut Vec<PathStep>, out: &mut [Vec<PathStep>]) {
            match node {
                TreeNode::Leaf { focal } => out[*focal] = prefix.clone(),
                TreeNode::Split { dim, threshold, left, right, .. } => {
                    prefix.push(PathStep { dim: *dim, threshold: *threshold, left: true });
                    walk(left, prefix, out);
                    prefix.pop();
                    prefix.push(PathStep { dim: *dim, threshold: *threshold, left: false });
                    walk(right, prefix, out);
                    prefix.pop();
                }
            }
        }
        let mut out = vec![Vec::new(); self.focal_sets.len()];
        walk(&self.root, &mut Vec::new(), &mut out);
        out
    }

    /// Recorded split costs of all internal nodes, in pre-order.
    pub fn split_costs(&self) -> Vec<f64> {
        let mut out = Vec::new();
        let mut stack = vec![&self.root];
        while let Some(node) = stack.pop() {
            if let TreeNode::Split { cost, left, right, .. } = node {
                out.push(*cost);
                stack.push(right);
                stack.push(left);
            }
        }
        out
    }

    /// Verifies that every centroid is routed to its own leaf.
    pub fn check_centroids(&self, centroids: &CentroidSet) -> Result<(), IemmError> {
        if centroids.len() != self.focal_sets.len() {
            return Err(IemmError::CentroidCount { centroids: centroids.len(), focal: self.focal_sets.len() });
        }
        for (a, v) in centroids.points().iter().enumerate() {
            let got = self.predict_index(v)?;
            if got != a {
                return Err(IemmError::MalformedTree(format!(
                    "centroid of {} falls in the leaf of {}",
                    self.frame.format_subset(self.focal_sets[a]),
                    self.frame.format_subset(self.focal_sets[got])
                )));
            }
        }
        Ok(())
    }

    pub fn to_json(&self) -> String {
        let file = TreeFile {
            frame: self.frame.labels().to_vec(),
            focal_sets: self.focal_sets.iter().map(|&a| self.frame.format_subset(a)).collect(),
            n_features: self.n_features,
            root: NodeRepr::from_node(&self.root, self),
        };
        serde_json::to_string_pretty(&file).expect("tree serializes")
    }

    pub fn from_json(text: &str) -> Result<Self, IemmError> {
        let file: TreeFile = serde_json::from_str(text).map_err(|e| IemmError::MalformedTree(e.to_string()))?;
        let frame = Frame::new(file.frame).map_err(|e| IemmError::MalformedTree(e.to_string()))?;
        let focal_sets = file
            .focal_sets
            .iter()
            .map(|k| frame.parse_subset(k))
            .collect::<Result<Vec<_>, _>>()
            .map_err(|e| IemmError::MalformedTree(e.to_string()))?;
        let root = file.root.into_node(&frame, &focal_sets)?;
        Self::new(frame, focal_sets, file.n_features, root)
    }

    /// Graphviz rendering. Thresholds and costs use two decimals.
    pub fn to_dot(&self, feature_names: &[String]) -> String {
        fn emit(tree: &ExplainerTree, names: &[String], node: &TreeNode, next: &mut usize, out: &mut String) -> usize {
            let id = *next;
            *next += 1;
            match node {
                TreeNode::Leaf { focal } => {
                    let label = tree.frame.format_subset(tree.focal_sets[*focal]).replace('|', " ∪ ");
                    let _ = writeln!(out, "  n{id} [shape=ellipse, label=\"{label}\"];");
                }
                TreeNode::Split { dim, threshold, cost, left, right } => {
                    let name = names.get(*dim).cloned().unwrap_or_else(|| format!("x{dim}"));
                    let _ = writeln!(
                        out,
                        "  n{id} [shape=box, label=\"{} ≤ {threshold:.2}\\nmistakeness = {cost:.2}\"];",
                        escape(&name)
                    );
                    let l = emit(tree, names, left, next, out);
                    let _ = writeln!(out, "  n{id} -> n{l} [label=\"true\"];");
                    let r = emit(tree, names, right, next, out);
                    let _ = writeln!(out, "  n{id} -> n{r} [label=\"false\"];");
                }
            }
            id
        }
        let mut out = String::from("digraph explainer {\n  node [fontname=\"Helvetica\"];\n");
        emit(self, feature_names, &self.root, &mut 0, &mut out);
        out.push_str("}\n");
        out
    }
}

fn escape(s: &str) -> String {
    s.replace('\\', "\\\\").replace('"', "\\\"")
}

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct TreeFile {
    frame: Vec<String>,
    focal_sets: Vec<String>,
    n_features: usize,
    root: NodeRepr,
}

#[derive(Serialize, Deserialize)]
#[serde(untagged)]
enum NodeRepr {
    Split { dim: usize, threshold: f64, cost: f64, left: Box<NodeRepr>, right: Box<NodeRepr> },
    Leaf { leaf: String },
}

impl NodeRepr {
    fn from_node(node: &TreeNode, tree: &ExplainerTree) -> Self {
        match node {
            TreeNode::Leaf { focal } => NodeRepr::Leaf { leaf: tree.frame.format_subset(tree.focal_sets[*focal]) },
            TreeNode::Split { dim, threshold, cost, left, right } => NodeRepr::Split {
                dim: *dim,
                threshold: *threshold,
                cost: *cost,
                left: Box::new(Self::from_node(left, tree)),
                right: Box::new(Self::from_node(right, tree)),
            },
        }
    }

    fn into_node(self, frame: &Frame, focal_sets: &[Subset]) -> Result<TreeNode, IemmError> {
        Ok(match self {
            NodeRepr::Leaf { leaf } => {
                let s = frame.parse_subset(&leaf).map_err(|e| IemmError::MalformedTree(e.to_string()))?;
                let focal = focal_sets
                    .iter()
                    .position(|&a| a == s)
                    .ok_or_else(|| IemmError::MalformedTree(format!("leaf {leaf:?} is not a focal set")))?;
                TreeNode::Leaf { focal }
            }
            NodeRepr::Split { dim, threshold, cost, left, right } => TreeNode::split(
                dim,
                threshold,
                cost,
                left.into_node(frame, focal_sets)?,
                right.into_node(frame, focal_sets)?,
            ),
        })
    }
}
