//! Loader checks against the vendored benchmark files. Each test is skipped
//! with a note when its file is absent.

use std::path::PathBuf;

use unilogic::data::{load_csv, split, ColumnKind, Dataset, DatasetSchema};
use unilogic::network::{build_network, NetworkConfig};
use unilogic::training::{train, TrainConfig};

fn data_dir() -> PathBuf {
    std::env::var_os("UNILOGIC_DATA_DIR")
        .map(PathBuf::from)
        .unwrap_or_else(|| PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("../../data"))
}

fn load(id: &str) -> Option<Dataset> {
    let dir = data_dir();
    let data = dir.join(format!("{id}.data"));
    let schema = dir.join(format!("{id}.schema.json"));
    if !data.exists() || !schema.exists() {
        eprintln!("skipping {id}: {} not found", data.display());
        return None;
    }
    let schema = DatasetSchema::load(&schema).unwrap();
    Some(load_csv(&data, &schema).unwrap())
}

fn check(id: &str, rows: usize, width: usize, counts: &[usize]) {
    let Some(ds) = load(id) else { return };
    assert_eq!(ds.len(), rows, "{id} rows");
    assert_eq!(ds.width(), width, "{id} width");
    assert_eq!(ds.class_counts(), counts, "{id} class counts");
    assert_eq!(ds.feature_names.len(), width);
    for row in &ds.features {
        assert!(row.iter().all(|v| v.is_finite()));
    }
}

#[test]
fn breast_cancer_shape() {
    check("breast-cancer", 286, 38, &[201, 85]);
    let Some(ds) = load("breast-cancer") else {
        return;
    };
    // one-hot groups contain exactly one hot column unless the value is missing
    let multi: Vec<_> = ds
        .encoding_report
        .iter()
        .filter(|e| e.kind == ColumnKind::MultiCategorical)
        .collect();
    assert!(!multi.is_empty());
    let mut offset = 0;
    for e in &ds.encoding_report {
        let w = e.outputs.len();
        if e.kind == ColumnKind::MultiCategorical {
            for row in &ds.features {
                let hot = row[offset..offset + w]
                    .iter()
                    .filter(|&&v| v == 1.0)
                    .count();
                assert!(hot <= 1);
            }
        }
        offset += w;
    }
}

#[test]
fn diabetes_shape() {
    check("pima-indians-diabetes", 768, 8, &[500, 268]);
}

#[test]
fn chess_shape() {
    check("kr-vs-kp", 3196, 38, &[1527, 1669]);
}

#[test]
fn votes_shape() {
    check("house-votes-84", 435, 16, &[267, 168]);
    let Some(ds) = load("house-votes-84") else {
        return;
    };
    let missing: usize = ds.encoding_report.iter().map(|e| e.missing).sum();
    assert!(missing > 0);
    assert!(ds
        .features
        .iter()
        .flatten()
        .all(|v| [-1.0, 0.0, 1.0].contains(v)));
}

#[test]
fn short_training_stays_finite_on_every_benchmark() {
    for id in [
        "breast-cancer",
        "pima-indians-diabetes",
        "kr-vs-kp",
        "house-votes-84",
    ] {
        let Some(ds) = load(id) else { continue };
        let (train_set, _) = split(&ds, 0.3, 0, true).unwrap();
        let net = build_network(ds.width(), ds.class_count, &NetworkConfig::default()).unwrap();
        let cfg = TrainConfig {
            max_epochs: 2,
            ..Default::default()
        };
        let out = train(net, &train_set, &cfg).unwrap();
        assert!(out.log.initial_loss.is_finite());
        assert!(
            out.log.epochs.iter().all(|e| e.train_loss.is_finite()),
            "{id}"
        );
    }
}
