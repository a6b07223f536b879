//! Text and graphics renderers for explanations and reports.

use std::fmt::Write as _;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use super::{Conjunction, DnfExplanation, ExplainError, Literal, Op, RepresentativenessReport};
use crate::belief::{Frame, Subset};
use crate::iemm::ExplainerTree;
use crate::partition::{CredalPartition, Dataset};
use crate::utility::Lambda;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum RenderFormat {
    Markdown,
    Csv,
    Json,
    Dot,
    Svg,
}

impl RenderFormat {
    pub fn extension(self) -> &'static str {
        match self {
            RenderFormat::Markdown => "md",
            RenderFormat::Csv => "csv",
            RenderFormat::Json => "json",
            RenderFormat::Dot => "dot",
            RenderFormat::Svg => "svg",
        }
    }

    /// Parses a comma-separated list, dropping duplicates.
    pub fn parse_list(text: &str) -> Result<Vec<RenderFormat>, ExplainError> {
        let mut out: Vec<RenderFormat> = text.split(',').map(|s| s.trim().parse()).collect::<Result<_, _>>()?;
        out.sort();
        out.dedup();
        Ok(out)
    }
}

impl FromStr for RenderFormat {
    type Err = ExplainError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        Ok(match s {
            "md" | "markdown" => RenderFormat::Markdown,
            "csv" => RenderFormat::Csv,
            "json" => RenderFormat::Json,
            "dot" => RenderFormat::Dot,
            "svg" | "svg-scatter" => RenderFormat::Svg,
            _ => return Err(ExplainError::Malformed(format!("unknown output format {s:?}"))),
        })
    }
}

fn pretty_subset(frame: &Frame, s: Subset) -> String {
    frame.format_subset(s).replace('|', " ∪ ")
}

/// Rows are training λ, columns evaluation λ; column maxima in bold.
pub fn report_markdown(r: &RepresentativenessReport) -> String {
    let mut out = String::from("| train \\ eval |");
    for l in &r.eval {
        let _ = write!(out, " U^{l} |");
    }
    out.push_str("\n|---|");
    out.push_str(&"---:|".repeat(r.eval.len()));
    out.push('\n');
    for (i, l) in r.train.iter().enumerate() {
        let _ = write!(out, "| M^{l} |");
        for (v, &b) in r.values[i].iter().zip(&r.best[i]) {
            if b {
                let _ = write!(out, " **{v:.6}** |");
            } else {
                let _ = write!(out, " {v:.6} |");
            }
        }
        out.push('\n');
    }
    out
}

/// Full-precision values, one row per training λ.
pub fn report_csv(r: &RepresentativenessReport) -> String {
    let mut out = String::from("train_lambda");
    for l in &r.eval {
        let _ = write!(out, ",{l}");
    }
    out.push('\n');
    for (l, row) in r.train.iter().zip(&r.values) {
        out.push_str(&l.to_string());
        for v in row {
            let _ = write!(out, ",{v}");
        }
        out.push('\n');
    }
    out
}

pub fn report_json(r: &RepresentativenessReport) -> String {
    serde_json::to_string_pretty(r).expect("report serializes")
}

impl RepresentativenessReport {
    pub fn from_json(text: &str) -> Result<Self, ExplainError> {
        serde_json::from_str(text).map_err(|e| ExplainError::Malformed(e.to_string()))
    }
}

/// One row per metacluster.
pub fn dnf_markdown(dnf: &DnfExplanation) -> String {
    let mut out = String::from("| metacluster | explanation |\n|---|---|\n");
    for (a, &s) in dnf.focal_sets().iter().enumerate() {
        let _ = writeln!(out, "| {} | {} |", pretty_subset(dnf.frame(), s), dnf.render_term(a, 2));
    }
    out
}

/// Rows are λ-mistakeness functions, columns metaclusters, cells the
/// explanations. All explanations must share their focal sets.
pub fn dnf_table_markdown(rows: &[(Lambda, &DnfExplanation)]) -> Result<String, ExplainError> {
    let Some((_, first)) = rows.first() else { return Err(ExplainError::EmptyLambdaList) };
    if rows.iter().any(|(_, d)| d.focal_sets() != first.focal_sets()) {
        return Err(ExplainError::Malformed("explanations use different focal sets".into()));
    }
    let mut out = String::from("| |");
    for &s in first.focal_sets() {
        let _ = write!(out, " {} |", pretty_subset(first.frame(), s));
    }
    out.push_str("\n|---|");
    out.push_str(&"---|".repeat(first.focal_sets().len()));
    out.push('\n');
    for (l, dnf) in rows {
        let _ = write!(out, "| M^{l} |");
        for a in 0..dnf.focal_sets().len() {
            let _ = write!(out, " {} |", dnf.render_term(a, 2));
        }
        out.push('\n');
    }
    Ok(out)
}

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct LiteralRepr {
    feature: usize,
    op: Op,
    threshold: f64,
}

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct DnfFile {
    frame: Vec<String>,
    feature_names: Vec<String>,
    focal_sets: Vec<String>,
    /// Aligned with `focal_sets`: a disjunction of conjunctions of literals.
    explanations: Vec<Vec<Vec<LiteralRepr>>>,
}

pub fn dnf_json(dnf: &DnfExplanation) -> String {
    let file = DnfFile {
        frame: dnf.frame.labels().to_vec(),
        feature_names: dnf.feature_names.clone(),
        focal_sets: dnf.focal_sets.iter().map(|&s| dnf.frame.format_subset(s)).collect(),
        explanations: dnf
            .terms
            .iter()
            .map(|t| {
                t.iter()
                    .map(|c| {
                        c.literals().iter().map(|l| LiteralRepr { feature: l.feature, op: l.op, threshold: l.threshold }).collect()
                    })
                    .collect()
            })
            .collect(),
    };
    serde_json::to_string_pretty(&file).expect("explanation serializes")
}

impl DnfExplanation {
    pub fn from_json(text: &str) -> Result<Self, ExplainError> {
        let bad = |e: String| ExplainError::Malformed(e);
        let file: DnfFile = serde_json::from_str(text).map_err(|e| bad(e.to_string()))?;
        let frame = Frame::new(file.frame).map_err(|e| bad(e.to_string()))?;
        let focal = file
            .focal_sets
            .iter()
            .map(|k| frame.parse_subset(k))
            .collect::<Result<Vec<_>, _>>()
            .map_err(|e| bad(e.to_string()))?;
        let terms = file
            .explanations
            .into_iter()
            .map(|t| {
                t.into_iter()
                    .map(|c| Conjunction {
                        literals: c.into_iter().map(|l| Literal { feature: l.feature, op: l.op, threshold: l.threshold }).collect(),
                    })
                    .collect()
            })
            .collect();
        DnfExplanation::new(frame, focal, file.feature_names, terms)
    }
}

const PALETTE: [&str; 10] =
    ["#1f77b4", "#ff7f0e", "#2ca02c", "#d62728", "#9467bd", "#8c564b", "#e377c2", "#7f7f7f", "#bcbd22", "#17becf"];

/// Leaf regions of a 2-D tree over the data, points colored by their
/// dominant focal set.
pub fn svg_scatter(tree: &ExplainerTree, data: &Dataset, p: &CredalPartition) -> Result<String, ExplainError> {
    if data.n_features() != 2 || tree.n_features() != 2 {
        return Err(ExplainError::UnsupportedDimension(data.n_features()));
    }
    const SIZE: f64 = 480.0;
    const MARGIN: f64 = 40.0;
    const LEGEND: f64 = 140.0;
    let bbox: Vec<(f64, f64)> = data
        .bounding_box()
        .into_iter()
        .map(|(lo, hi)| {
            let pad = ((hi - lo) * 0.05).max(0.5);
            (lo - pad, hi + pad)
        })
        .collect();
    let plot = SIZE - 2.0 * MARGIN;
    let sx = |x: f64| MARGIN + (x - bbox[0].0) / (bbox[0].1 - bbox[0].0) * plot;
    let sy = |y: f64| MARGIN + (bbox[1].1 - y) / (bbox[1].1 - bbox[1].0) * plot;
    let names = data.feature_names();
    let frame = tree.frame();

    let mut out = String::new();
    let _ = writeln!(
        out,
        "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"{w}\" height=\"{SIZE}\" viewBox=\"0 0 {w} {SIZE}\">",
        w = SIZE + LEGEND
    );
    let _ = writeln!(out, "<rect x=\"0\" y=\"0\" width=\"{}\" height=\"{SIZE}\" fill=\"white\"/>", SIZE + LEGEND);
    let dnf = super::tree_to_dnf(tree, names);
    for a in 0..tree.leaf_count() {
        for c in dnf.conjunctions(a) {
            let (x0, x1) = c.interval(0);
            let (y0, y1) = c.interval(1);
            let (x0, x1) = (x0.max(bbox[0].0), x1.min(bbox[0].1));
            let (y0, y1) = (y0.max(bbox[1].0), y1.min(bbox[1].1));
            if x0 >= x1 || y0 >= y1 {
                continue;
            }
            let _ = writeln!(
                out,
                "<rect x=\"{:.3}\" y=\"{:.3}\" width=\"{:.3}\" height=\"{:.3}\" fill=\"{}\" fill-opacity=\"0.18\" stroke=\"#444\" stroke-width=\"0.8\"/>",
                sx(x0),
                sy(y1),
                sx(x1) - sx(x0),
                sy(y0) - sy(y1),
                PALETTE[a % PALETTE.len()]
            );
        }
    }
    for (j, row) in data.rows().enumerate() {
        let a = p.dominant(j);
        let _ = writeln!(
            out,
            "<circle cx=\"{:.3}\" cy=\"{:.3}\" r=\"2.5\" fill=\"{}\"/>",
            sx(row[0]),
            sy(row[1]),
            PALETTE[a % PALETTE.len()]
        );
    }
    let _ = writeln!(
        out,
        "<text x=\"{:.1}\" y=\"{:.1}\" font-size=\"13\" text-anchor=\"middle\">{}</text>",
        MARGIN + plot / 2.0,
        SIZE - 10.0,
        xml_escape(&names[0])
    );
    let _ = writeln!(
        out,
        "<text x=\"14\" y=\"{:.1}\" font-size=\"13\" text-anchor=\"middle\" transform=\"rotate(-90 14 {:.1})\">{}</text>",
        MARGIN + plot / 2.0,
        MARGIN + plot / 2.0,
        xml_escape(&names[1])
    );
    for (a, &s) in tree.focal_sets().iter().enumerate() {
        let y = MARGIN + 18.0 * a as f64;
        let _ = writeln!(
            out,
            "<rect x=\"{:.1}\" y=\"{:.1}\" width=\"12\" height=\"12\" fill=\"{}\"/><text x=\"{:.1}\" y=\"{:.1}\" font-size=\"12\">{}</text>",
            SIZE,
            y,
            PALETTE[a % PALETTE.len()],
            SIZE + 18.0,
            y + 10.0,
            xml_escape(&pretty_subset(frame, s))
        );
    }
    out.push_str("</svg>\n");
    Ok(out)
}

fn xml_escape(s: &str) -> String {
    s.replace('&', "&amp;").replace('<', "&lt;").replace('>', "&gt;").replace('"', "&quot;")
}
