//! Rule explanations extracted from explainer trees, and representativeness
//! reports.

mod render;

pub use render::{
    dnf_json, dnf_markdown, dnf_table_markdown, report_csv, report_json, report_markdown, svg_scatter,
    RenderFormat,
};

use std::fmt;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::belief::{Frame, Subset};
use crate::iemm::{iemm_fit, ExplainerTree, IemmConfig, IemmError};
use crate::mistakeness::{Mistakeness, MistakenessError};
use crate::partition::{default_feature_names, CentroidSet, CredalPartition, Dataset};
use crate::utility::{Lambda, Utility, UtilitySpec};

/// Tolerance for marking several maxima in one report column.
pub const BEST_TOLERANCE: f64 = 1e-12;

#[derive(Debug, Error)]
pub enum ExplainError {
    #[error("scatter plots need 2 features, got {0}")]
    UnsupportedDimension(usize),
    #[error("empty lambda list")]
    EmptyLambdaList,
    #[error("malformed explanation: {0}")]
    Malformed(String),
    #[error(transparent)]
    Iemm(#[from] IemmError),
    #[error(transparent)]
    Mistakeness(#[from] MistakenessError),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Op {
    #[serde(rename = "<=")]
    Le,
    #[serde(rename = ">")]
    Gt,
}

/// `x[feature] <= threshold` or `x[feature] > threshold`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Literal {
    pub feature: usize,
    pub op: Op,
    pub threshold: f64,
}

impl Literal {
    pub fn holds(&self, point: &[f64]) -> bool {
        match self.op {
            Op::Le => point[self.feature] <= self.threshold,
            Op::Gt => point[self.feature] > self.threshold,
        }
    }
}

/// A conjunction of literals, in root-to-leaf order.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct Conjunction {
    literals: Vec<Literal>,
}

impl Conjunction {
    pub fn new() -> Self {
        Self::default()
    }

    /// Adds a literal, tightening an existing bound of the same kind on the
    /// same feature in place.
    pub fn push(&mut self, lit: Literal) {
        match self.literals.iter_mut().find(|l| l.feature == lit.feature && l.op == lit.op) {
            Some(l) => {
                l.threshold = match lit.op {
                    Op::Le => l.threshold.min(lit.threshold),
                    Op::Gt => l.threshold.max(lit.threshold),
                }
            }
            None => self.literals.push(lit),
        }
    }

    pub fn literals(&self) -> &[Literal] {
        &self.literals
    }

    pub fn is_empty(&self) -> bool {
        self.literals.is_empty()
    }

    pub fn holds(&self, point: &[f64]) -> bool {
        self.literals.iter().all(|l| l.holds(point))
    }

    /// `(lower, upper]` bounds on a feature.
    pub fn interval(&self, feature: usize) -> (f64, f64) {
        let mut out = (f64::NEG_INFINITY, f64::INFINITY);
        for l in self.literals.iter().filter(|l| l.feature == feature) {
            match l.op {
                Op::Le => out.1 = out.1.min(l.threshold),
                Op::Gt => out.0 = out.0.max(l.threshold),
            }
        }
        out
    }

    /// At most one bound of each kind per feature, describing a non-empty interval.
    pub fn is_consistent(&self) -> bool {
        self.literals.iter().enumerate().all(|(i, a)| {
            let (lo, hi) = self.interval(a.feature);
            a.threshold.is_finite()
                && lo < hi
                && !self.literals[i + 1..].iter().any(|b| b.feature == a.feature && b.op == a.op)
        })
    }

    pub fn render(&self, names: &[String], decimals: usize) -> String {
        if self.literals.is_empty() {
            return "⊤".into();
        }
        self.literals
            .iter()
            .map(|l| {
                let op = if l.op == Op::Le { "≤" } else { ">" };
                format!("({} {op} {:.*})", names[l.feature], decimals, l.threshold)
            })
            .collect::<Vec<_>>()
            .join(" ∧ ")
    }
}

/// Disjunction of conjunctions for every focal set of a tree.
#[derive(Debug, Clone, PartialEq)]
pub struct DnfExplanation {
    frame: Frame,
    focal_sets: Vec<Subset>,
    feature_names: Vec<String>,
    terms: Vec<Vec<Conjunction>>,
}

impl DnfExplanation {
    pub fn new(
        frame: Frame,
        focal_sets: Vec<Subset>,
        feature_names: Vec<String>,
        terms: Vec<Vec<Conjunction>>,
    ) -> Result<Self, ExplainError> {
        if terms.len() != focal_sets.len() {
            return Err(ExplainError::Malformed(format!("{} terms for {} focal sets", terms.len(), focal_sets.len())));
        }
        let d = feature_names.len();
        if let Some(l) = terms.iter().flatten().flat_map(|c| c.literals()).find(|l| l.feature >= d || !l.threshold.is_finite()) {
            return Err(ExplainError::Malformed(format!("bad literal on feature {}", l.feature)));
        }
        Ok(Self { frame, focal_sets, feature_names, terms })
    }

    pub fn frame(&self) -> &Frame {
        &self.frame
    }

    pub fn focal_sets(&self) -> &[Subset] {
        &self.focal_sets
    }

    pub fn feature_names(&self) -> &[String] {
        &self.feature_names
    }

    pub fn conjunctions(&self, focal: usize) -> &[Conjunction] {
        &self.terms[focal]
    }

    /// Focal sets whose explanation holds at `point`.
    pub fn satisfied_by(&self, point: &[f64]) -> Vec<usize> {
        (0..self.terms.len()).filter(|&a| self.terms[a].iter().any(|c| c.holds(point))).collect()
    }

    pub fn render_term(&self, focal: usize, decimals: usize) -> String {
        match self.terms[focal].as_slice() {
            [] => "⊥".into(),
            [one] => one.render(&self.feature_names, decimals),
            many => many.iter().map(|c| format!("[{}]", c.render(&self.feature_names, decimals))).collect::<Vec<_>>().join(" ∨ "),
        }
    }
}

impl fmt::Display for DnfExplanation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for (a, &s) in self.focal_sets.iter().enumerate() {
            writeln!(f, "{}: {}", self.frame.format_subset(s), self.render_term(a, 2))?;
        }
        Ok(())
    }
}

/// One conjunction per leaf, built from its root path.
pub fn tree_to_dnf(tree: &ExplainerTree, feature_names: &[String]) -> DnfExplanation {
    let names = if feature_names.len() == tree.n_features() {
        feature_names.to_vec()
    } else {
        default_feature_names(tree.n_features())
    };
    let terms = tree
        .paths()
        .into_iter()
        .map(|path| {
            let mut c = Conjunction::new();
            for s in path {
                c.push(Literal { feature: s.dim, op: if s.left { Op::Le } else { Op::Gt }, threshold: s.threshold });
            }
            vec![c]
        })
        .collect();
    DnfExplanation { frame: tree.frame().clone(), focal_sets: tree.focal_sets().to_vec(), feature_names: names, terms }
}

#[derive(Debug, Clone, PartialEq)]
pub struct RepresentativeCheck {
    pub representative: bool,
    /// Observations whose assigned metacluster has utility below one for
    /// every focal set carrying their mass.
    pub violations: Vec<usize>,
    /// `true` when the partition is categorical, so that the check is the
    /// exact definition rather than its mass-support relaxation.
    pub exact: bool,
}

pub fn check_representative(
    tree: &ExplainerTree,
    data: &Dataset,
    p: &CredalPartition,
    utility: &dyn Utility,
) -> Result<RepresentativeCheck, ExplainError> {
    if data.len() != p.len() {
        return Err(IemmError::RowCountMismatch { data: data.len(), partition: p.len() }.into());
    }
    let mut violations = Vec::new();
    for (x, row) in data.rows().enumerate() {
        let assigned = tree.predict(row)?;
        let best = p
            .focal_sets()
            .iter()
            .zip(p.row(x))
            .filter(|(_, &m)| m > 0.0)
            .map(|(&b, _)| utility.eval(assigned, b))
            .fold(0.0, f64::max);
        if best < 1.0 {
            violations.push(x);
        }
    }
    Ok(RepresentativeCheck { representative: violations.is_empty(), violations, exact: p.kind().categorical })
}

/// Representativeness of trees trained under several λ, evaluated under
/// several utilities.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RepresentativenessReport {
    pub train: Vec<Lambda>,
    pub eval: Vec<Lambda>,
    /// `values[i][j]`: tree trained with `train[i]` scored with `eval[j]`.
    pub values: Vec<Vec<f64>>,
    pub best: Vec<Vec<bool>>,
}

impl RepresentativenessReport {
    pub fn new(train: Vec<Lambda>, eval: Vec<Lambda>, values: Vec<Vec<f64>>) -> Self {
        let best = column_maxima(&values);
        Self { train, eval, values, best }
    }

    pub fn get(&self, train: Lambda, eval: Lambda) -> Option<f64> {
        let i = self.train.iter().position(|&l| l == train)?;
        let j = self.eval.iter().position(|&l| l == eval)?;
        Some(self.values[i][j])
    }
}

fn column_maxima(values: &[Vec<f64>]) -> Vec<Vec<bool>> {
    let cols = values.first().map_or(0, Vec::len);
    let tops: Vec<f64> = (0..cols).map(|j| values.iter().map(|r| r[j]).fold(f64::NEG_INFINITY, f64::max)).collect();
    values.iter().map(|r| r.iter().zip(&tops).map(|(v, t)| t - v <= BEST_TOLERANCE).collect()).collect()
}

/// Fits one tree per training λ and scores each under every evaluation λ.
pub fn representativeness_matrix(
    data: &Dataset,
    p: &CredalPartition,
    centroids: &CentroidSet,
    train: &[Lambda],
    eval: &[Lambda],
) -> Result<RepresentativenessReport, ExplainError> {
    let trees = fit_trees(data, p, centroids, train)?;
    let specs: Vec<UtilitySpec> = eval.iter().map(|&l| UtilitySpec::new(l)).collect();
    if specs.is_empty() {
        return Err(ExplainError::EmptyLambdaList);
    }
    let models = specs.iter().map(|s| Mistakeness::new(p, s)).collect::<Result<Vec<_>, _>>()?;
    let mut values = Vec::with_capacity(trees.len());
    for tree in &trees {
        let delta = tree.assign(data)?;
        values.push(models.iter().map(|m| m.representativeness(&delta)).collect::<Result<Vec<_>, _>>()?);
    }
    Ok(RepresentativenessReport::new(train.to_vec(), eval.to_vec(), values))
}

/// One IEMM tree per λ, fitted in parallel.
pub fn fit_trees(
    data: &Dataset,
    p: &CredalPartition,
    centroids: &CentroidSet,
    lambdas: &[Lambda],
) -> Result<Vec<ExplainerTree>, ExplainError> {
    if lambdas.is_empty() {
        return Err(ExplainError::EmptyLambdaList);
    }
    let trees: Result<Vec<_>, IemmError> =
        lambdas.par_iter().map(|&l| iemm_fit(data, p, centroids, &IemmConfig::new(l))).collect();
    Ok(trees?)
}

/// `n` evenly spaced values from `lo` to `hi` inclusive.
pub fn linspace(lo: f64, hi: f64, n: usize) -> Vec<f64> {
    match n {
        0 => vec![],
        1 => vec![(lo + hi) / 2.0],
        _ => (0..n).map(|i| lo + (hi - lo) * i as f64 / (n - 1) as f64).collect(),
    }
}

/// All points of the regular grid with `n` values per axis over `bbox`.
pub fn grid(bbox: &[(f64, f64)], n: usize) -> Vec<Vec<f64>> {
    let axes: Vec<Vec<f64>> = bbox.iter().map(|&(lo, hi)| linspace(lo, hi, n)).collect();
    let mut out = vec![Vec::with_capacity(bbox.len())];
    for axis in &axes {
        out = out.into_iter().flat_map(|p| axis.iter().map(move |&v| [p.as_slice(), &[v]].concat())).collect();
    }
    out
}

/// Fraction of grid points routed to each leaf, indexed by focal set.
pub fn region_fractions(tree: &ExplainerTree, bbox: &[(f64, f64)], n: usize) -> Result<Vec<f64>, ExplainError> {
    let pts = grid(bbox, n);
    let mut counts = vec![0usize; tree.leaf_count()];
    for z in &pts {
        counts[tree.predict_index(z)?] += 1;
    }
    Ok(counts.into_iter().map(|c| c as f64 / pts.len() as f64).collect())
}
