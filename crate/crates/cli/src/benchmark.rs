//! Side-by-side reproduction of the four UCI benchmark rows.
//!
//! Protocol per dataset: for each seed, a stratified train/test split at
//! `test_fraction`; the logic network and the mirrored dense baseline are
//! trained on the same training rows with that seed and scored on the test
//! rows. Rates are averaged over seeds. The expression comes from the seed
//! with the lowest logic-network test rate, and its faithfulness is measured
//! on that seed's test rows.

use std::fmt::Write as _;
use std::path::{Path, PathBuf};

use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use unilogic::data::{load_csv, split, Dataset, DatasetSchema};
use unilogic::extract::{extract_all, Extraction, ExtractionConfig};
use unilogic::network::{build_network, LogicNetwork, NetworkConfig};
use unilogic::training::{
    evaluate, evaluate_model, train, train_baseline, BaselineConfig, TrainConfig,
};

use crate::manifest::{sha256_file, version};
use crate::{CliError, CliResult};

/// One benchmark row and its reference rates.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct BenchmarkSpec {
    pub id: &'static str,
    pub name: &'static str,
    pub reference_fuzzy: f64,
    pub reference_dnn: f64,
}

pub const BENCHMARKS: [BenchmarkSpec; 4] = [
    BenchmarkSpec {
        id: "breast-cancer",
        name: "Breast cancer",
        reference_fuzzy: 0.25,
        reference_dnn: 0.23,
    },
    BenchmarkSpec {
        id: "pima-indians-diabetes",
        name: "Diabetes",
        reference_fuzzy: 0.28,
        reference_dnn: 0.26,
    },
    BenchmarkSpec {
        id: "kr-vs-kp",
        name: "King-Rook vs King-Pawn",
        reference_fuzzy: 0.07,
        reference_dnn: 0.06,
    },
    BenchmarkSpec {
        id: "house-votes-84",
        name: "Vote",
        reference_fuzzy: 0.29,
        reference_dnn: 0.05,
    },
];

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Protocol {
    pub seeds: Vec<u64>,
    pub test_fraction: f64,
    pub network: NetworkConfig,
    pub training: TrainConfig,
    pub extraction: ExtractionConfig,
}

impl Default for Protocol {
    fn default() -> Self {
        Protocol {
            seeds: (0..5).collect(),
            test_fraction: 0.3,
            network: NetworkConfig::default(),
            training: TrainConfig::default(),
            extraction: ExtractionConfig::default(),
        }
    }
}

#[derive(Debug, Clone)]
pub struct SeedResult {
    pub seed: u64,
    pub fuzzy_rate: f64,
    pub dnn_rate: f64,
    pub model: LogicNetwork,
    pub test: Dataset,
}

#[derive(Debug, Clone)]
pub struct DatasetResult {
    pub spec: BenchmarkSpec,
    pub seeds: Vec<SeedResult>,
    pub fuzzy_mean: f64,
    pub dnn_mean: f64,
    pub best_seed: u64,
    pub extractions: Vec<Extraction>,
    pub feature_names: Vec<String>,
}

impl DatasetResult {
    /// Expression column text: one entry per output, omitted outputs named
    /// with their reason.
    pub fn expression_text(&self) -> String {
        self.extractions
            .iter()
            .map(|e| match e.omitted {
                Some(reason) => format!("omitted: {reason}"),
                None => e.text.clone(),
            })
            .collect::<Vec<_>>()
            .join(" ; ")
    }

    /// Mean faithfulness over outputs.
    pub fn faithfulness(&self) -> Option<f64> {
        let f: Vec<f64> = self
            .extractions
            .iter()
            .filter_map(|e| e.faithfulness)
            .collect();
        (!f.is_empty()).then(|| f.iter().sum::<f64>() / f.len() as f64)
    }
}

#[derive(Debug, Clone)]
pub enum Row {
    Done(Box<DatasetResult>),
    Skipped { spec: BenchmarkSpec, reason: String },
}

impl Row {
    pub fn spec(&self) -> &BenchmarkSpec {
        match self {
            Row::Done(r) => &r.spec,
            Row::Skipped { spec, .. } => spec,
        }
    }
}

pub fn data_paths(dir: &Path, id: &str) -> (PathBuf, PathBuf) {
    (
        dir.join(format!("{id}.data")),
        dir.join(format!("{id}.schema.json")),
    )
}

/// Loads a benchmark dataset, `None` when either file is absent.
pub fn load_benchmark(dir: &Path, id: &str) -> CliResult<Option<Dataset>> {
    let (data, schema) = data_paths(dir, id);
    if !data.exists() || !schema.exists() {
        return Ok(None);
    }
    let schema = DatasetSchema::load(&schema)?;
    Ok(Some(load_csv(&data, &schema)?))
}

fn run_seed(data: &Dataset, seed: u64, protocol: &Protocol) -> CliResult<SeedResult> {
    let (train_set, test) = split(data, protocol.test_fraction, seed, true)?;
    let net_cfg = NetworkConfig {
        seed,
        ..protocol.network.clone()
    };
    let cfg = TrainConfig {
        seed,
        ..protocol.training.clone()
    };
    let net = build_network(data.width(), data.class_count, &net_cfg)?;
    let fuzzy = train(net, &train_set, &cfg)?;
    let bcfg = BaselineConfig::mirror(data.width(), data.class_count, &net_cfg);
    let dnn = train_baseline(&train_set, &bcfg, &cfg)?;
    Ok(SeedResult {
        seed,
        fuzzy_rate: evaluate(&fuzzy.model, &test)?.misclassification_rate,
        dnn_rate: evaluate_model(&dnn.model, &test)?.misclassification_rate,
        model: fuzzy.model,
        test,
    })
}

pub fn run_dataset(
    spec: BenchmarkSpec,
    data: &Dataset,
    protocol: &Protocol,
) -> CliResult<DatasetResult> {
    if protocol.seeds.is_empty() {
        return Err(CliError::Input("at least one seed is required".into()));
    }
    protocol.extraction.validate()?;
    let seeds = protocol
        .seeds
        .par_iter()
        .map(|&s| run_seed(data, s, protocol))
        .collect::<CliResult<Vec<_>>>()?;
    let n = seeds.len() as f64;
    let fuzzy_mean = seeds.iter().map(|s| s.fuzzy_rate).sum::<f64>() / n;
    let dnn_mean = seeds.iter().map(|s| s.dnn_rate).sum::<f64>() / n;
    // first seed wins ties
    let best = seeds.iter().fold(
        &seeds[0],
        |b, s| if s.fuzzy_rate < b.fuzzy_rate { s } else { b },
    );
    let extractions = extract_all(&best.model, &protocol.extraction, Some(&best.test))?;
    Ok(DatasetResult {
        spec,
        best_seed: best.seed,
        fuzzy_mean,
        dnn_mean,
        extractions,
        feature_names: data.feature_names.clone(),
        seeds,
    })
}

/// Runs every benchmark whose files exist under `dir`; `only` restricts
/// the set by id.
pub fn run_all(dir: &Path, protocol: &Protocol, only: Option<&[String]>) -> CliResult<Vec<Row>> {
    let mut rows = Vec::new();
    for spec in BENCHMARKS {
        if only.is_some_and(|ids| !ids.iter().any(|i| i == spec.id)) {
            continue;
        }
        match load_benchmark(dir, spec.id)? {
            None => rows.push(Row::Skipped {
                spec,
                reason: format!("{}.data not found in {}", spec.id, dir.display()),
            }),
            Some(data) => rows.push(Row::Done(Box::new(run_dataset(spec, &data, protocol)?))),
        }
    }
    Ok(rows)
}

pub const CSV_HEADER: [&str; 6] = [
    "dataset",
    "fuzzy_rate",
    "dnn_rate",
    "reference_fuzzy",
    "reference_dnn",
    "expression",
];

pub fn to_csv(rows: &[Row]) -> CliResult<String> {
    let mut w = csv::Writer::from_writer(Vec::new());
    let io = |e: csv::Error| CliError::Other(e.to_string());
    w.write_record(CSV_HEADER).map_err(io)?;
    for row in rows {
        let spec = row.spec();
        let (fuzzy, dnn, expr) = match row {
            Row::Done(r) => (
                format!("{:.4}", r.fuzzy_mean),
                format!("{:.4}", r.dnn_mean),
                r.expression_text(),
            ),
            Row::Skipped { .. } => ("SKIPPED".into(), "SKIPPED".into(), String::new()),
        };
        w.write_record([
            spec.id,
            &fuzzy,
            &dnn,
            &format!("{:.2}", spec.reference_fuzzy),
            &format!("{:.2}", spec.reference_dnn),
            &expr,
        ])
        .map_err(io)?;
    }
    let bytes = w.into_inner().map_err(|e| CliError::Other(e.to_string()))?;
    String::from_utf8(bytes).map_err(|e| CliError::Other(e.to_string()))
}

/// Human-readable table.
pub fn to_table(rows: &[Row]) -> String {
    let mut out = String::new();
    let _ = writeln!(
        out,
        "{:<24} {:>9} {:>9} {:>11} {:>9} {:>8}  expression",
        "dataset", "fuzzy", "dnn", "ref fuzzy", "ref dnn", "faithful"
    );
    for row in rows {
        let spec = row.spec();
        match row {
            Row::Done(r) => {
                let faith = r.faithfulness().map_or("-".into(), |f| format!("{f:.3}"));
                let _ = writeln!(
                    out,
                    "{:<24} {:>9.4} {:>9.4} {:>11.2} {:>9.2} {:>8}  {}",
                    spec.name,
                    r.fuzzy_mean,
                    r.dnn_mean,
                    spec.reference_fuzzy,
                    spec.reference_dnn,
                    faith,
                    r.expression_text()
                );
            }
            Row::Skipped { reason, .. } => {
                let _ = writeln!(
                    out,
                    "{:<24} {:>9} {:>9} {:>11.2} {:>9.2} {:>8}  ({reason})",
                    spec.name, "SKIPPED", "SKIPPED", spec.reference_fuzzy, spec.reference_dnn, "-"
                );
            }
        }
    }
    out
}

#[derive(Debug, Clone, Serialize)]
pub struct DatasetEntry {
    pub id: String,
    pub data_sha256: Option<String>,
    pub schema_sha256: Option<String>,
    pub fuzzy_rates: Vec<f64>,
    pub dnn_rates: Vec<f64>,
    pub best_seed: Option<u64>,
}

/// Record written next to the benchmark CSV.
#[derive(Debug, Clone, Serialize)]
pub struct BenchmarkManifest {
    pub version: String,
    pub protocol: Protocol,
    pub datasets: Vec<DatasetEntry>,
}

pub fn manifest(dir: &Path, protocol: &Protocol, rows: &[Row]) -> CliResult<BenchmarkManifest> {
    let datasets = rows
        .iter()
        .map(|row| {
            let id = row.spec().id;
            let (data, schema) = data_paths(dir, id);
            let (fuzzy_rates, dnn_rates, best_seed) = match row {
                Row::Done(r) => (
                    r.seeds.iter().map(|s| s.fuzzy_rate).collect(),
                    r.seeds.iter().map(|s| s.dnn_rate).collect(),
                    Some(r.best_seed),
                ),
                Row::Skipped { .. } => (Vec::new(), Vec::new(), None),
            };
            Ok(DatasetEntry {
                id: id.to_string(),
                data_sha256: data.exists().then(|| sha256_file(&data)).transpose()?,
                schema_sha256: schema.exists().then(|| sha256_file(&schema)).transpose()?,
                fuzzy_rates,
                dnn_rates,
                best_seed,
            })
        })
        .collect::<CliResult<Vec<_>>>()?;
    Ok(BenchmarkManifest {
        version: version(),
        protocol: protocol.clone(),
        datasets,
    })
}
