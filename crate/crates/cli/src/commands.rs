use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand};
use serde::Serialize;
use unilogic::data::{load_csv, Dataset, DatasetSchema};
use unilogic::extract::{extract_all, render_with, ExtractionConfig, LogicExpr, OmitReason};
use unilogic::network::{build_network, LogicNetwork};
use unilogic::training::{evaluate, train};

use crate::benchmark::{self, Protocol};
use crate::curves::{squash_table, PLOT_BETAS};
use crate::manifest::{
    dataset_id, read_input, sha256_file, version, ModelFile, RunConfig, RunManifest,
};
use crate::{CliError, CliResult};

#[derive(Debug, Parser)]
#[command(
    name = "unilogic",
    version,
    about = "Interpretable fuzzy logic networks"
)]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Train a logic network on a dataset.
    Train(TrainArgs),
    /// Misclassification rate and confusion matrix of a model on a dataset.
    Eval(EvalArgs),
    /// Nearest logic expression of every model output.
    Extract(ExtractArgs),
    /// Benchmark table against the reference rates.
    Benchmark(BenchmarkArgs),
    /// Squashing-function curves as CSV.
    PlotSquash(PlotArgs),
}

#[derive(Debug, Args)]
pub struct TrainArgs {
    #[arg(long)]
    pub data: PathBuf,
    #[arg(long)]
    pub schema: PathBuf,
    #[arg(long)]
    pub out: PathBuf,
    /// Seed for initialization, splits and shuffling; overrides the config.
    #[arg(long)]
    pub seed: Option<u64>,
    /// JSON with optional `network`, `training` and `extraction` sections.
    #[arg(long, conflicts_with = "manifest_in")]
    pub config: Option<PathBuf>,
    /// Repeat the run recorded in a manifest.
    #[arg(long)]
    pub manifest_in: Option<PathBuf>,
    /// Training log CSV; defaults to `<out>.log.csv`.
    #[arg(long)]
    pub log: Option<PathBuf>,
    /// Manifest JSON; defaults to `<out>.manifest.json`.
    #[arg(long)]
    pub manifest: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct EvalArgs {
    #[arg(long)]
    pub model: PathBuf,
    #[arg(long)]
    pub data: PathBuf,
    #[arg(long)]
    pub schema: PathBuf,
    #[arg(long)]
    pub json: bool,
}

#[derive(Debug, Args)]
pub struct ExtractArgs {
    #[arg(long)]
    pub model: PathBuf,
    /// Measure faithfulness on this data instead of on sampled inputs.
    #[arg(long, requires = "schema")]
    pub data: Option<PathBuf>,
    #[arg(long, requires = "data")]
    pub schema: Option<PathBuf>,
    /// JSON with an `extraction` section.
    #[arg(long)]
    pub config: Option<PathBuf>,
    /// Show feature names instead of indices.
    #[arg(long)]
    pub leaf_names: bool,
    #[arg(long)]
    pub json: bool,
}

#[derive(Debug, Args)]
pub struct BenchmarkArgs {
    #[arg(long, env = "UNILOGIC_DATA_DIR", default_value = "data")]
    pub data_dir: PathBuf,
    #[arg(long, default_value_t = 5)]
    pub seeds: u64,
    #[arg(long, default_value_t = 0.3)]
    pub test_fraction: f64,
    #[arg(long)]
    pub config: Option<PathBuf>,
    /// Restrict to these dataset ids.
    #[arg(long, value_delimiter = ',')]
    pub datasets: Option<Vec<String>>,
    #[arg(long, default_value = "benchmark.csv")]
    pub csv: PathBuf,
}

#[derive(Debug, Args)]
pub struct PlotArgs {
    /// Output file; standard output when absent.
    #[arg(long)]
    pub out: Option<PathBuf>,
}

/// Runs a command and returns what it prints.
pub fn run(cli: Cli) -> CliResult<String> {
    match cli.command {
        Command::Train(a) => cmd_train(&a),
        Command::Eval(a) => cmd_eval(&a),
        Command::Extract(a) => cmd_extract(&a),
        Command::Benchmark(a) => cmd_benchmark(&a),
        Command::PlotSquash(a) => cmd_plot_squash(&a),
    }
}

fn require(path: &Path) -> CliResult<()> {
    if path.is_file() {
        Ok(())
    } else {
        Err(CliError::Input(format!(
            "{}: file not found",
            path.display()
        )))
    }
}

fn load_dataset(data: &Path, schema: &Path) -> CliResult<Dataset> {
    require(data)?;
    require(schema)?;
    let schema = DatasetSchema::load(schema)?;
    Ok(load_csv(data, &schema)?)
}

fn sibling(out: &Path, suffix: &str) -> PathBuf {
    let mut name = out.file_stem().unwrap_or_default().to_os_string();
    name.push(suffix);
    out.with_file_name(name)
}

fn write_file(path: &Path, contents: &str) -> CliResult<()> {
    fs::write(path, contents).map_err(|e| CliError::Other(format!("{}: {e}", path.display())))
}

pub fn cmd_train(a: &TrainArgs) -> CliResult<String> {
    require(&a.data)?;
    require(&a.schema)?;
    let data_sha256 = sha256_file(&a.data)?;
    let schema_sha256 = sha256_file(&a.schema)?;

    let (cfg, seed) = match (&a.manifest_in, &a.config) {
        (Some(m), _) => {
            let prior: RunManifest = serde_json::from_str(&read_input(m)?)
                .map_err(|e| CliError::Input(format!("{}: {e}", m.display())))?;
            if prior.data_sha256 != data_sha256 || prior.schema_sha256 != schema_sha256 {
                return Err(CliError::Mismatch(format!(
                    "{} was recorded for different data or schema",
                    m.display()
                )));
            }
            let cfg = RunConfig {
                network: prior.network,
                training: prior.training,
                extraction: prior.extraction,
            };
            (cfg, a.seed.unwrap_or(prior.seed))
        }
        (None, Some(c)) => {
            let cfg = RunConfig::load(c)?;
            let seed = a.seed.unwrap_or(cfg.training.seed);
            (cfg, seed)
        }
        (None, None) => (RunConfig::default(), a.seed.unwrap_or(0)),
    };
    let cfg = cfg.with_seed(seed);
    cfg.extraction.validate()?;

    let data = load_dataset(&a.data, &a.schema)?;
    let net = build_network(data.width(), data.class_count, &cfg.network)?;
    let outcome = train(net, &data, &cfg.training)?;
    let train_rate = evaluate(&outcome.model, &data)?.misclassification_rate;

    let model = ModelFile {
        network: outcome.model,
        feature_names: data.feature_names.clone(),
        class_names: data.class_names.clone(),
    };
    let manifest = RunManifest {
        dataset_id: dataset_id(&a.data),
        data_sha256,
        schema_sha256,
        network: cfg.network,
        training: cfg.training,
        extraction: cfg.extraction,
        seed,
        version: version(),
    };
    let log_path = a.log.clone().unwrap_or_else(|| sibling(&a.out, ".log.csv"));
    let manifest_path = a
        .manifest
        .clone()
        .unwrap_or_else(|| sibling(&a.out, ".manifest.json"));
    write_file(&a.out, &model.to_json()?)?;
    write_file(&log_path, &outcome.log.to_csv())?;
    write_file(
        &manifest_path,
        &(serde_json::to_string_pretty(&manifest)? + "\n"),
    )?;

    Ok(format!(
        "trained on {} rows: {} epochs, best epoch {}, validation misclassification {:.4}, training misclassification {:.4}\nwrote {}, {}, {}\n",
        data.len(),
        outcome.log.epochs.len(),
        outcome.log.best_epoch,
        outcome.log.best_val_misclassification,
        train_rate,
        a.out.display(),
        log_path.display(),
        manifest_path.display()
    ))
}

#[derive(Debug, Serialize)]
struct EvalReport<'a> {
    rows: usize,
    misclassification_rate: f64,
    class_names: &'a [String],
    /// Rows are true classes, columns predicted classes.
    per_class_confusion: Vec<Vec<usize>>,
}

pub fn cmd_eval(a: &EvalArgs) -> CliResult<String> {
    require(&a.model)?;
    let model = ModelFile::load(&a.model)?;
    let data = load_dataset(&a.data, &a.schema)?;
    let net = &model.network;
    if net.feature_count != data.width() || net.class_count != data.class_count {
        return Err(CliError::Mismatch(format!(
            "model expects {} features and {} classes, data has {} and {}",
            net.feature_count,
            net.class_count,
            data.width(),
            data.class_count
        )));
    }
    let metrics = evaluate(net, &data)?;
    if a.json {
        let report = EvalReport {
            rows: data.len(),
            misclassification_rate: metrics.misclassification_rate,
            class_names: &data.class_names,
            per_class_confusion: metrics.per_class_confusion,
        };
        return Ok(serde_json::to_string_pretty(&report)? + "\n");
    }
    let mut out = format!(
        "rows: {}\nmisclassification rate: {:.4}\nconfusion (rows true, columns predicted):\n",
        data.len(),
        metrics.misclassification_rate
    );
    for (name, row) in data.class_names.iter().zip(&metrics.per_class_confusion) {
        let cells: Vec<String> = row.iter().map(|c| format!("{c:>6}")).collect();
        let _ = writeln!(out, "  {name:<20}{}", cells.join(""));
    }
    Ok(out)
}

/// Inputs for faithfulness when no data is given: every Boolean corner of
/// the normalized input space for up to 12 features, otherwise 4096 seeded
/// uniform points. Rows are mapped back through the model's normalizer.
pub fn probe_inputs(net: &LogicNetwork) -> CliResult<(Dataset, &'static str)> {
    use rand::{Rng, SeedableRng};
    let n = net.feature_count;
    let signed: Vec<Vec<f64>> = if n <= 12 {
        (0..1usize << n)
            .map(|m| {
                (0..n)
                    .map(|i| if m >> i & 1 == 1 { 1.0 } else { -1.0 })
                    .collect()
            })
            .collect()
    } else {
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(0);
        (0..4096)
            .map(|_| (0..n).map(|_| rng.gen_range(-1.0..=1.0)).collect())
            .collect()
    };
    let raw: Vec<Vec<f64>> = signed
        .into_iter()
        .map(|s| {
            s.iter()
                .zip(&net.normalizer.bounds)
                .map(|(v, &(lo, hi))| {
                    if hi > lo {
                        lo + (v + 1.0) / 2.0 * (hi - lo)
                    } else {
                        lo
                    }
                })
                .collect()
        })
        .collect();
    let labels = vec![0; raw.len()];
    let classes = (0..net.class_count).map(|c| c.to_string()).collect();
    let names = (0..n).map(|i| format!("x{i}")).collect();
    let source = if n <= 12 {
        "boolean corners"
    } else {
        "4096 uniform samples"
    };
    Ok((Dataset::new(raw, labels, names, classes)?, source))
}

#[derive(Debug, Serialize)]
struct ExtractReport {
    output_index: usize,
    text: String,
    tree: LogicExpr,
    omitted: Option<OmitReason>,
    faithfulness: Option<f64>,
    faithfulness_source: String,
}

pub fn cmd_extract(a: &ExtractArgs) -> CliResult<String> {
    require(&a.model)?;
    let model = ModelFile::load(&a.model)?;
    let cfg = match &a.config {
        Some(c) => RunConfig::load(c)?.extraction,
        None => ExtractionConfig::default(),
    };
    cfg.validate()?;
    let net = &model.network;
    let (probe, source) = match (&a.data, &a.schema) {
        (Some(d), Some(s)) => {
            let data = load_dataset(d, s)?;
            if data.width() != net.feature_count {
                return Err(CliError::Mismatch(format!(
                    "model expects {} features, data has {}",
                    net.feature_count,
                    data.width()
                )));
            }
            (data, "data")
        }
        _ => probe_inputs(net)?,
    };
    let extractions = extract_all(net, &cfg, Some(&probe))?;
    let names =
        (a.leaf_names && !model.feature_names.is_empty()).then_some(model.feature_names.as_slice());
    let reports: Vec<ExtractReport> = extractions
        .into_iter()
        .map(|e| ExtractReport {
            output_index: e.output_index,
            text: render_with(&e.expression, names),
            tree: e.expression,
            omitted: e.omitted,
            faithfulness: e.faithfulness,
            faithfulness_source: source.to_string(),
        })
        .collect();
    if a.json {
        return Ok(serde_json::to_string_pretty(&reports)? + "\n");
    }
    let mut out = String::new();
    for r in &reports {
        match r.omitted {
            Some(reason) => {
                let _ = writeln!(out, "output {}: omitted: {reason}", r.output_index);
            }
            None => {
                let _ = writeln!(out, "output {}: {}", r.output_index, r.text);
            }
        }
        if let Some(f) = r.faithfulness {
            let _ = writeln!(out, "  faithfulness: {f:.4} ({})", r.faithfulness_source);
        }
    }
    Ok(out)
}

pub fn cmd_benchmark(a: &BenchmarkArgs) -> CliResult<String> {
    if a.seeds == 0 {
        return Err(CliError::Input("--seeds must be at least 1".into()));
    }
    if !(a.test_fraction > 0.0 && a.test_fraction < 1.0) {
        return Err(CliError::Input("--test-fraction must lie in (0, 1)".into()));
    }
    let cfg = match &a.config {
        Some(c) => RunConfig::load(c)?,
        None => RunConfig::default(),
    };
    let protocol = Protocol {
        seeds: (0..a.seeds).collect(),
        test_fraction: a.test_fraction,
        network: cfg.network,
        training: cfg.training,
        extraction: cfg.extraction,
    };
    let rows = benchmark::run_all(&a.data_dir, &protocol, a.datasets.as_deref())?;
    write_file(&a.csv, &benchmark::to_csv(&rows)?)?;
    let manifest = benchmark::manifest(&a.data_dir, &protocol, &rows)?;
    let manifest_path = sibling(&a.csv, ".manifest.json");
    write_file(
        &manifest_path,
        &(serde_json::to_string_pretty(&manifest)? + "\n"),
    )?;
    Ok(format!(
        "{}\nwrote {}, {}\n",
        benchmark::to_table(&rows),
        a.csv.display(),
        manifest_path.display()
    ))
}

pub fn cmd_plot_squash(a: &PlotArgs) -> CliResult<String> {
    let table = squash_table(&PLOT_BETAS)?;
    match &a.out {
        Some(path) => {
            write_file(path, &table)?;
            Ok(format!("wrote {}\n", path.display()))
        }
        None => Ok(table),
    }
}
