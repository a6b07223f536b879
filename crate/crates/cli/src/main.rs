//! `credex`: synthetic data, evidential clustering, tree explanations and
//! representativeness reports from the command line.

mod config;
mod failure;
mod output;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

use credex::ecm::{ecm_fit, ingest_external, synth_generate, FocalPolicy, Preset};
use credex::explain::{
    dnf_json, dnf_markdown, dnf_table_markdown, fit_trees, report_csv, report_json, report_markdown,
    representativeness_matrix, svg_scatter, tree_to_dnf, RenderFormat,
};
use credex::partition::{Dataset, PartitionBundle};
use credex::utility::Lambda;

use config::RunConfig;
use failure::{Failure, ResultExt};
use output::OutDir;

#[derive(Parser)]
#[command(name = "credex", version, about = "Evidential clustering and cautious decision-tree explanations")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Args, Clone)]
struct Common {
    /// JSON run configuration; command-line flags take precedence.
    #[arg(long)]
    config: Option<PathBuf>,
    /// Seed for every random choice.
    #[arg(long)]
    seed: Option<u64>,
    /// Output directory.
    #[arg(long, default_value = ".")]
    out: PathBuf,
}

#[derive(Subcommand)]
enum Command {
    /// Write a synthetic dataset as CSV.
    Synth {
        #[command(flatten)]
        common: Common,
        /// Built-in protocol: fig1, easy or full3.
        #[arg(long)]
        preset: Option<String>,
    },
    /// Fit an evidential c-means partition, or import one, and write it as JSON.
    Cluster {
        #[command(flatten)]
        common: Common,
        /// Dataset CSV with a header row.
        #[arg(long, conflicts_with = "ingest")]
        input: Option<PathBuf>,
        /// Existing partition JSON to validate and re-export.
        #[arg(long)]
        ingest: Option<PathBuf>,
        /// Number of clusters.
        #[arg(long)]
        clusters: Option<usize>,
        /// Focal sets: all (every non-empty subset) or qb (singletons and the frame).
        #[arg(long)]
        focal: Option<String>,
    },
    /// Fit one explainer tree per λ and write its explanations.
    Explain {
        #[command(flatten)]
        common: Common,
        /// Partition JSON produced by `cluster`.
        #[arg(long)]
        input: Option<PathBuf>,
        /// Comma-separated λ values, e.g. -inf,-1,0,1,inf.
        #[arg(long, allow_hyphen_values = true)]
        lambda: Option<String>,
        /// Comma-separated outputs among md, json, dot, svg.
        #[arg(long)]
        emit: Option<String>,
    },
    /// Score trees trained under each λ with every evaluation utility.
    Evaluate {
        #[command(flatten)]
        common: Common,
        #[arg(long)]
        input: Option<PathBuf>,
        /// Training λ values.
        #[arg(long, allow_hyphen_values = true)]
        lambda: Option<String>,
        /// Evaluation λ values; defaults to the training values.
        #[arg(long, allow_hyphen_values = true)]
        eval_lambda: Option<String>,
        /// Comma-separated outputs among md, csv, json.
        #[arg(long)]
        emit: Option<String>,
    },
}

const DEFAULT_LAMBDAS: &str = "-inf,-1,0,1,inf";

fn main() -> ExitCode {
    let cli = Cli::parse();
    if let Err(e) = configure_threads() {
        eprintln!("credex: {e}");
        return ExitCode::from(2);
    }
    match run(cli.command) {
        Ok(()) => ExitCode::SUCCESS,
        Err(f) => {
            eprintln!("credex: {:#}", f.error);
            ExitCode::from(f.code)
        }
    }
}

fn configure_threads() -> anyhow::Result<()> {
    let Ok(value) = std::env::var("CREDEX_THREADS") else { return Ok(()) };
    let n: usize = value.trim().parse().map_err(|_| anyhow::anyhow!("CREDEX_THREADS must be a positive integer, got {value:?}"))?;
    if n == 0 {
        anyhow::bail!("CREDEX_THREADS must be a positive integer");
    }
    rayon::ThreadPoolBuilder::new().num_threads(n).build_global()?;
    Ok(())
}

fn load_config(common: &Common) -> Result<RunConfig, Failure> {
    match &common.config {
        Some(path) => RunConfig::load(path).input(),
        None => Ok(RunConfig::default()),
    }
}

fn run(command: Command) -> Result<(), Failure> {
    match command {
        Command::Synth { common, preset } => cmd_synth(&common, preset),
        Command::Cluster { common, input, ingest, clusters, focal } => cmd_cluster(&common, input, ingest, clusters, focal),
        Command::Explain { common, input, lambda, emit } => cmd_explain(&common, input, lambda, emit),
        Command::Evaluate { common, input, lambda, eval_lambda, emit } => {
            cmd_evaluate(&common, input, lambda, eval_lambda, emit)
        }
    }
}

fn cmd_synth(common: &Common, preset: Option<String>) -> Result<(), Failure> {
    let cfg = load_config(common)?;
    let seed = common.seed.or(cfg.seed).unwrap_or(0);
    let (name, mut synth) = match (preset.or(cfg.preset), cfg.synth) {
        (Some(p), _) => {
            let p: Preset = p.parse().input()?;
            (p.name().to_string(), p.config(seed))
        }
        (None, Some(s)) => ("synth".to_string(), s),
        (None, None) => return Err(Failure::input(anyhow::anyhow!("synth needs --preset or a `synth` section in --config"))),
    };
    if common.seed.is_some() || cfg.seed.is_some() {
        synth.seed = seed;
    }
    let data = synth_generate(&synth).input()?;
    let mut csv = Vec::new();
    data.write_csv(&mut csv).input()?;
    let out = OutDir::create(&common.out)?;
    let path = out.write(&format!("{name}.csv"), &csv)?;
    println!("wrote {} ({} rows)", path.display(), data.len());
    Ok(())
}

fn cmd_cluster(
    common: &Common,
    input: Option<PathBuf>,
    ingest: Option<PathBuf>,
    clusters: Option<usize>,
    focal: Option<String>,
) -> Result<(), Failure> {
    let cfg = load_config(common)?;
    let bundle = if let Some(path) = ingest.or(cfg.ingest.clone()) {
        let (data, partition, centroids) = ingest_external(&path).map_err(failure::ecm)?;
        PartitionBundle::new(data, partition, centroids).input()?
    } else {
        let path = input.or(cfg.input.clone()).ok_or_else(|| Failure::input(anyhow::anyhow!("cluster needs --input or --ingest")))?;
        let data = Dataset::load_csv(&path).input()?;
        let mut ecm = cfg.ecm.clone().unwrap_or_default();
        if let Some(c) = clusters {
            ecm.n_clusters = c;
        }
        if let Some(f) = focal {
            ecm.focal_policy = f.parse::<FocalPolicy>().input()?;
        }
        if let Some(s) = common.seed.or(cfg.seed) {
            ecm.seed = s;
        }
        let fit = ecm_fit(&data, &ecm).map_err(failure::ecm)?;
        PartitionBundle::new(data, fit.partition, fit.centroids).input()?
    };
    let out = OutDir::create(&common.out)?;
    let path = out.write("partition.json", bundle.to_json().as_bytes())?;
    println!("wrote {} ({} rows, {} focal sets)", path.display(), bundle.partition.len(), bundle.partition.n_focal());
    Ok(())
}

fn load_bundle(input: Option<PathBuf>, cfg: &RunConfig) -> Result<PartitionBundle, Failure> {
    let path = input
        .or(cfg.input.clone())
        .ok_or_else(|| Failure::input(anyhow::anyhow!("--input <partition.json> is required")))?;
    PartitionBundle::load(&path).input()
}

fn lambdas(flag: Option<String>, fallback: Option<&str>) -> Result<Vec<Lambda>, Failure> {
    let text = flag.as_deref().or(fallback).unwrap_or(DEFAULT_LAMBDAS);
    Lambda::parse_list(text).input()
}

fn formats(flag: Option<String>, fallback: Option<&str>, default: &str, allowed: &[RenderFormat]) -> Result<Vec<RenderFormat>, Failure> {
    let list = RenderFormat::parse_list(flag.as_deref().or(fallback).unwrap_or(default)).input()?;
    if let Some(f) = list.iter().find(|f| !allowed.contains(f)) {
        return Err(Failure::input(anyhow::anyhow!("output format {} is not available here", f.extension())));
    }
    Ok(list)
}

fn cmd_explain(common: &Common, input: Option<PathBuf>, lambda: Option<String>, emit: Option<String>) -> Result<(), Failure> {
    use RenderFormat::*;
    let cfg = load_config(common)?;
    let bundle = load_bundle(input, &cfg)?;
    let lambdas = lambdas(lambda, cfg.lambda.as_deref())?;
    let emit = formats(emit, cfg.emit.as_deref(), "md,json", &[Markdown, Json, Dot, Svg])?;
    let PartitionBundle { data, partition, centroids } = &bundle;
    if emit.contains(&Svg) && data.n_features() != 2 {
        return Err(failure::explain(credex::explain::ExplainError::UnsupportedDimension(data.n_features())));
    }
    let trees = fit_trees(data, partition, centroids, &lambdas).map_err(failure::explain)?;
    let out = OutDir::create(&common.out)?;
    let mut written = Vec::new();
    let mut dnfs = Vec::new();
    for (lam, tree) in lambdas.iter().zip(&trees) {
        let stem = format!("lambda_{lam}");
        written.push(out.write(&format!("tree_{stem}.json"), tree.to_json().as_bytes())?);
        let dnf = tree_to_dnf(tree, data.feature_names());
        if emit.contains(&Markdown) {
            written.push(out.write(&format!("dnf_{stem}.md"), dnf_markdown(&dnf).as_bytes())?);
        }
        if emit.contains(&Json) {
            written.push(out.write(&format!("dnf_{stem}.json"), dnf_json(&dnf).as_bytes())?);
        }
        if emit.contains(&Dot) {
            written.push(out.write(&format!("tree_{stem}.dot"), tree.to_dot(data.feature_names()).as_bytes())?);
        }
        if emit.contains(&Svg) {
            let svg = svg_scatter(tree, data, partition).map_err(failure::explain)?;
            written.push(out.write(&format!("regions_{stem}.svg"), svg.as_bytes())?);
        }
        dnfs.push((*lam, dnf));
    }
    if emit.contains(&Markdown) {
        let rows: Vec<(Lambda, &_)> = dnfs.iter().map(|(l, d)| (*l, d)).collect();
        let table = dnf_table_markdown(&rows).map_err(failure::explain)?;
        written.push(out.write("explanations.md", table.as_bytes())?);
    }
    for p in written {
        println!("wrote {}", p.display());
    }
    Ok(())
}

fn cmd_evaluate(
    common: &Common,
    input: Option<PathBuf>,
    lambda: Option<String>,
    eval_lambda: Option<String>,
    emit: Option<String>,
) -> Result<(), Failure> {
    use RenderFormat::*;
    let cfg = load_config(common)?;
    let bundle = load_bundle(input, &cfg)?;
    let train = lambdas(lambda, cfg.lambda.as_deref())?;
    let eval = match eval_lambda.or(cfg.eval_lambda.clone()) {
        Some(text) => Lambda::parse_list(&text).input()?,
        None => train.clone(),
    };
    let emit = formats(emit, cfg.emit.as_deref(), "md,csv", &[Markdown, Csv, Json])?;
    let report = representativeness_matrix(&bundle.data, &bundle.partition, &bundle.centroids, &train, &eval)
        .map_err(failure::explain)?;
    let out = OutDir::create(&common.out)?;
    for f in emit {
        let text = match f {
            Markdown => report_markdown(&report),
            Csv => report_csv(&report),
            _ => report_json(&report),
        };
        let path = out.write(&format!("representativeness.{}", f.extension()), text.as_bytes())?;
        println!("wrote {}", path.display());
    }
    Ok(())
}
