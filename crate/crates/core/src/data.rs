//! Dataset loading, encoding, splitting and synthetic generation.
//!
//! Encodings use the signed convention of the network: binary categoricals
//! map to `-1`/`+1`, multi-categoricals expand one-hot with hot `+1` and
//! cold `-1`, missing categorical values map to `0` (binary) or all `-1`
//! (multi), and missing numeric values map to the middle of the observed
//! column range.

use std::collections::BTreeMap;
use std::fs;
use std::path::{Path, PathBuf};

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::extract::{evaluate_signed, LogicExpr};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ColumnKind {
    Numeric,
    BinaryCategorical,
    MultiCategorical,
    Label,
    Ignore,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ColumnSchema {
    pub name: String,
    pub kind: ColumnKind,
    /// Category order. For binary columns `[negative, positive]`; for labels
    /// the class order. Learned by first occurrence when absent.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub categories: Option<Vec<String>>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DatasetSchema {
    #[serde(default = "default_missing")]
    pub missing_token: String,
    #[serde(default)]
    pub has_header: bool,
    pub columns: Vec<ColumnSchema>,
}

fn default_missing() -> String {
    "?".into()
}

impl DatasetSchema {
    pub fn from_json(text: &str) -> Result<Self> {
        let schema: DatasetSchema = serde_json::from_str(text)?;
        schema.validate()?;
        Ok(schema)
    }

    pub fn load(path: &Path) -> Result<Self> {
        Self::from_json(&fs::read_to_string(path)?)
    }

    pub fn validate(&self) -> Result<()> {
        let labels = self
            .columns
            .iter()
            .filter(|c| c.kind == ColumnKind::Label)
            .count();
        if labels != 1 {
            return Err(Error::Config(format!(
                "schema needs exactly one label column, found {labels}"
            )));
        }
        for c in &self.columns {
            if let Some(cats) = &c.categories {
                if c.kind == ColumnKind::BinaryCategorical && cats.len() != 2 {
                    return Err(Error::Config(format!(
                        "binary column {} lists {} categories",
                        c.name,
                        cats.len()
                    )));
                }
            }
        }
        Ok(())
    }

    fn label_index(&self) -> usize {
        self.columns
            .iter()
            .position(|c| c.kind == ColumnKind::Label)
            .unwrap_or(0)
    }
}

/// What was done to one source column.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ColumnEncoding {
    pub column: String,
    pub kind: ColumnKind,
    /// Names of the produced feature columns.
    pub outputs: Vec<String>,
    pub categories: Vec<String>,
    pub missing: usize,
    /// Values not among the declared categories, mapped to 0.
    pub unknown: Vec<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Dataset {
    pub features: Vec<Vec<f64>>,
    pub labels: Vec<usize>,
    pub feature_names: Vec<String>,
    pub class_names: Vec<String>,
    pub class_count: usize,
    pub encoding_report: Vec<ColumnEncoding>,
}

impl Dataset {
    pub fn new(
        features: Vec<Vec<f64>>,
        labels: Vec<usize>,
        feature_names: Vec<String>,
        class_names: Vec<String>,
    ) -> Result<Self> {
        let ds = Dataset {
            class_count: class_names.len(),
            features,
            labels,
            feature_names,
            class_names,
            encoding_report: Vec::new(),
        };
        ds.validate()?;
        Ok(ds)
    }

    pub fn validate(&self) -> Result<()> {
        if self.class_count < 2 || self.class_names.len() != self.class_count {
            return Err(Error::Config(format!(
                "dataset needs at least 2 named classes, has {}",
                self.class_count
            )));
        }
        if self.features.len() != self.labels.len() {
            return Err(Error::Shape {
                expected: self.features.len(),
                actual: self.labels.len(),
            });
        }
        let width = self.feature_names.len();
        if let Some(row) = self.features.iter().find(|r| r.len() != width) {
            return Err(Error::Shape {
                expected: width,
                actual: row.len(),
            });
        }
        if let Some(l) = self.labels.iter().find(|l| **l >= self.class_count) {
            return Err(Error::Contract(format!("label {l} out of range")));
        }
        Ok(())
    }

    pub fn len(&self) -> usize {
        self.labels.len()
    }

    pub fn is_empty(&self) -> bool {
        self.labels.is_empty()
    }

    pub fn width(&self) -> usize {
        self.feature_names.len()
    }

    pub fn class_counts(&self) -> Vec<usize> {
        let mut counts = vec![0; self.class_count];
        for &l in &self.labels {
            counts[l] += 1;
        }
        counts
    }

    /// Rows at `indices`, in that order.
    pub fn subset(&self, indices: &[usize]) -> Dataset {
        Dataset {
            features: indices.iter().map(|&i| self.features[i].clone()).collect(),
            labels: indices.iter().map(|&i| self.labels[i]).collect(),
            feature_names: self.feature_names.clone(),
            class_names: self.class_names.clone(),
            class_count: self.class_count,
            encoding_report: self.encoding_report.clone(),
        }
    }

    /// Canonical CSV dump: encoded features then the class name.
    pub fn to_csv(&self) -> Result<String> {
        let mut w = csv::Writer::from_writer(Vec::new());
        let mut header = self.feature_names.clone();
        header.push("class".into());
        w.write_record(&header)?;
        for (row, &label) in self.features.iter().zip(&self.labels) {
            let mut rec: Vec<String> = row.iter().map(|v| v.to_string()).collect();
            rec.push(self.class_names[label].clone());
            w.write_record(&rec)?;
        }
        let bytes = w.into_inner().map_err(|e| Error::Io(e.into_error()))?;
        Ok(String::from_utf8_lossy(&bytes).into_owned())
    }
}

/// Reads a comma-separated file and encodes it according to `schema`.
pub fn load_csv(path: &Path, schema: &DatasetSchema) -> Result<Dataset> {
    let text = fs::read_to_string(path)?;
    parse_csv(&text, schema).map_err(|e| match e {
        Error::Load { line, message, .. } => Error::Load {
            path: path.to_path_buf(),
            line,
            message,
        },
        other => other,
    })
}

/// Same as [`load_csv`] on in-memory text.
pub fn parse_csv(text: &str, schema: &DatasetSchema) -> Result<Dataset> {
    schema.validate()?;
    let mut reader = csv::ReaderBuilder::new()
        .has_headers(schema.has_header)
        .flexible(true)
        .trim(csv::Trim::All)
        .from_reader(text.as_bytes());
    let mut rows: Vec<(usize, Vec<String>)> = Vec::new();
    for record in reader.records() {
        let record = record?;
        let line = record.position().map_or(0, |p| p.line() as usize);
        if record.iter().all(str::is_empty) {
            continue;
        }
        if record.len() != schema.columns.len() {
            return Err(Error::Load {
                path: PathBuf::new(),
                line,
                message: format!(
                    "expected {} columns, found {}",
                    schema.columns.len(),
                    record.len()
                ),
            });
        }
        rows.push((line, record.iter().map(str::to_owned).collect()));
    }
    if rows.is_empty() {
        return Err(Error::Load {
            path: PathBuf::new(),
            line: 0,
            message: "no data rows".into(),
        });
    }

    let missing = schema.missing_token.as_str();
    let mut columns: Vec<Vec<f64>> = Vec::new();
    let mut feature_names = Vec::new();
    let mut report = Vec::new();

    for (c, col) in schema.columns.iter().enumerate() {
        let values: Vec<&str> = rows.iter().map(|(_, r)| r[c].as_str()).collect();
        match col.kind {
            ColumnKind::Ignore | ColumnKind::Label => {}
            ColumnKind::Numeric => {
                let mut parsed = Vec::with_capacity(values.len());
                let mut n_missing = 0;
                for (v, (line, _)) in values.iter().zip(&rows) {
                    if *v == missing {
                        n_missing += 1;
                        parsed.push(None);
                        continue;
                    }
                    let x: f64 = v.parse().map_err(|_| Error::Load {
                        path: PathBuf::new(),
                        line: *line,
                        message: format!("column {}: cannot parse {v:?} as a number", col.name),
                    })?;
                    if !x.is_finite() {
                        return Err(Error::Load {
                            path: PathBuf::new(),
                            line: *line,
                            message: format!("column {}: non-finite value", col.name),
                        });
                    }
                    parsed.push(Some(x));
                }
                let present = parsed.iter().flatten();
                let lo = present.clone().copied().fold(f64::INFINITY, f64::min);
                let hi = present.copied().fold(f64::NEG_INFINITY, f64::max);
                let fill = if lo.is_finite() { 0.5 * (lo + hi) } else { 0.0 };
                columns.push(parsed.into_iter().map(|v| v.unwrap_or(fill)).collect());
                feature_names.push(col.name.clone());
                report.push(ColumnEncoding {
                    column: col.name.clone(),
                    kind: col.kind,
                    outputs: vec![col.name.clone()],
                    categories: Vec::new(),
                    missing: n_missing,
                    unknown: Vec::new(),
                });
            }
            ColumnKind::BinaryCategorical | ColumnKind::MultiCategorical => {
                let categories = match &col.categories {
                    Some(c) => c.clone(),
                    None => first_occurrence(&values, missing),
                };
                let binary = col.kind == ColumnKind::BinaryCategorical;
                if binary && categories.len() != 2 {
                    return Err(Error::Config(format!(
                        "binary column {} has {} categories",
                        col.name,
                        categories.len()
                    )));
                }
                let mut unknown = BTreeMap::new();
                let mut n_missing = 0;
                let codes: Vec<Option<Option<usize>>> = values
                    .iter()
                    .map(|v| {
                        if *v == missing {
                            n_missing += 1;
                            None
                        } else {
                            let idx = categories.iter().position(|c| c == v);
                            if idx.is_none() {
                                *unknown.entry(v.to_string()).or_insert(0usize) += 1;
                            }
                            Some(idx)
                        }
                    })
                    .collect();
                let outputs: Vec<String> = if binary {
                    vec![col.name.clone()]
                } else {
                    categories
                        .iter()
                        .map(|c| format!("{}={c}", col.name))
                        .collect()
                };
                if binary {
                    columns.push(
                        codes
                            .iter()
                            .map(|code| match code {
                                Some(Some(1)) => 1.0,
                                Some(Some(_)) => -1.0,
                                _ => 0.0,
                            })
                            .collect(),
                    );
                } else {
                    for k in 0..categories.len() {
                        columns.push(
                            codes
                                .iter()
                                .map(|code| match code {
                                    Some(Some(i)) if *i == k => 1.0,
                                    Some(Some(_)) | None => -1.0,
                                    Some(None) => 0.0,
                                })
                                .collect(),
                        );
                    }
                }
                feature_names.extend(outputs.iter().cloned());
                report.push(ColumnEncoding {
                    column: col.name.clone(),
                    kind: col.kind,
                    outputs,
                    categories,
                    missing: n_missing,
                    unknown: unknown.into_keys().collect(),
                });
            }
        }
    }

    let label_col = schema.label_index();
    let label_schema = &schema.columns[label_col];
    let label_values: Vec<&str> = rows.iter().map(|(_, r)| r[label_col].as_str()).collect();
    let class_names = match &label_schema.categories {
        Some(c) => c.clone(),
        None => first_occurrence(&label_values, "\u{0}"),
    };
    let mut labels = Vec::with_capacity(rows.len());
    for (v, (line, _)) in label_values.iter().zip(&rows) {
        let idx = class_names
            .iter()
            .position(|c| c == v)
            .ok_or_else(|| Error::Load {
                path: PathBuf::new(),
                line: *line,
                message: format!("unknown class label {v:?}"),
            })?;
        labels.push(idx);
    }

    let features = (0..rows.len())
        .map(|r| columns.iter().map(|c| c[r]).collect())
        .collect();
    let mut ds = Dataset::new(features, labels, feature_names, class_names)?;
    ds.encoding_report = report;
    Ok(ds)
}

fn first_occurrence(values: &[&str], missing: &str) -> Vec<String> {
    let mut seen: Vec<String> = Vec::new();
    for v in values {
        if *v != missing && !seen.iter().any(|s| s == v) {
            seen.push(v.to_string());
        }
    }
    seen
}

/// Seeded train/test split. `fraction` is the test share.
///
/// With `stratified`, each class contributes `round(fraction · n_c)` rows to
/// the test side; a class with a single row stays on the train side.
pub fn split(
    dataset: &Dataset,
    fraction: f64,
    seed: u64,
    stratified: bool,
) -> Result<(Dataset, Dataset)> {
    let (train, test) = split_indices(
        &dataset.labels,
        dataset.class_count,
        fraction,
        seed,
        stratified,
    )?;
    Ok((dataset.subset(&train), dataset.subset(&test)))
}

/// Index form of [`split`]; both index lists come back sorted.
pub fn split_indices(
    labels: &[usize],
    class_count: usize,
    fraction: f64,
    seed: u64,
    stratified: bool,
) -> Result<(Vec<usize>, Vec<usize>)> {
    if !(fraction > 0.0 && fraction < 1.0) {
        return Err(Error::Domain(format!(
            "split fraction {fraction} must lie in (0, 1)"
        )));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut train = Vec::new();
    let mut test = Vec::new();
    let groups: Vec<Vec<usize>> = if stratified {
        (0..class_count)
            .map(|c| (0..labels.len()).filter(|&i| labels[i] == c).collect())
            .collect()
    } else {
        vec![(0..labels.len()).collect()]
    };
    for mut group in groups {
        group.shuffle(&mut rng);
        let n_test = if stratified && group.len() < 2 {
            0
        } else {
            (fraction * group.len() as f64).round() as usize
        };
        test.extend_from_slice(&group[..n_test]);
        train.extend_from_slice(&group[n_test..]);
    }
    train.sort_unstable();
    test.sort_unstable();
    Ok((train, test))
}

/// Stratified fold id for every row: each class is shuffled and dealt
/// round-robin over the folds.
pub fn stratified_folds(
    labels: &[usize],
    class_count: usize,
    folds: usize,
    seed: u64,
) -> Result<Vec<usize>> {
    if folds < 2 {
        return Err(Error::Config(format!("need at least 2 folds, got {folds}")));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut assignment = vec![0; labels.len()];
    let mut offset = 0;
    for c in 0..class_count {
        let mut members: Vec<usize> = (0..labels.len()).filter(|&i| labels[i] == c).collect();
        if members.is_empty() {
            continue;
        }
        if members.len() < folds {
            return Err(Error::Stratification(format!(
                "class {c} has {} rows, fewer than {folds} folds",
                members.len()
            )));
        }
        members.shuffle(&mut rng);
        for (k, i) in members.into_iter().enumerate() {
            assignment[i] = (k + offset) % folds;
        }
        offset += 1;
    }
    Ok(assignment)
}

/// Samples `n` points uniformly on `[0, 1]^k`, labels each by the crisp
/// value of `expr` thresholded at 0.5, flips labels with probability
/// `noise`, and returns the features mapped to `[-1, 1]`.
pub fn generate_synthetic(
    expr: &LogicExpr,
    k: usize,
    n: usize,
    noise: f64,
    seed: u64,
) -> Result<Dataset> {
    if !(0.0..0.5).contains(&noise) {
        return Err(Error::Domain(format!("noise {noise} must lie in [0, 0.5)")));
    }
    if let Some(m) = expr.max_input() {
        if m >= k {
            return Err(Error::Contract(format!(
                "expression references input {m} but only {k} features exist"
            )));
        }
    }
    if k < 2 {
        return Err(Error::Config(
            "synthetic data needs at least 2 features".into(),
        ));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut features = Vec::with_capacity(n);
    let mut labels = Vec::with_capacity(n);
    for _ in 0..n {
        let unit: Vec<f64> = (0..k).map(|_| rng.gen::<f64>()).collect();
        let signed: Vec<f64> = unit.iter().map(|x| 2.0 * x - 1.0).collect();
        let mut label = usize::from(evaluate_signed(expr, &signed, false) >= 0.0);
        if noise > 0.0 && rng.gen::<f64>() < noise {
            label = 1 - label;
        }
        features.push(signed);
        labels.push(label);
    }
    Dataset::new(
        features,
        labels,
        (0..k).map(|i| format!("x{i}")).collect(),
        vec!["0".into(), "1".into()],
    )
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::ops::OperatorKind;

    fn vote_schema() -> DatasetSchema {
        DatasetSchema::from_json(
            r#"{"columns":[
                {"name":"party","kind":"label"},
                {"name":"a","kind":"binary_categorical","categories":["n","y"]},
                {"name":"b","kind":"multi_categorical","categories":["r","g","b"]},
                {"name":"c","kind":"numeric"}]}"#,
        )
        .unwrap()
    }

    #[test]
    fn encodes_columns() {
        let text = "dem,y,r,1.5\nrep,n,g,?\ndem,?,?,3.5\nrep,y,x,2\n";
        let ds = parse_csv(text, &vote_schema()).unwrap();
        assert_eq!(ds.class_names, vec!["dem", "rep"]);
        assert_eq!(ds.labels, vec![0, 1, 0, 1]);
        assert_eq!(ds.feature_names, vec!["a", "b=r", "b=g", "b=b", "c"]);
        assert_eq!(ds.features[0], vec![1.0, 1.0, -1.0, -1.0, 1.5]);
        assert_eq!(ds.features[1], vec![-1.0, -1.0, 1.0, -1.0, 2.5]);
        assert_eq!(ds.features[2], vec![0.0, -1.0, -1.0, -1.0, 3.5]);
        assert_eq!(ds.features[3], vec![1.0, 0.0, 0.0, 0.0, 2.0]);
        assert_eq!(ds.encoding_report[1].unknown, vec!["x"]);
        assert_eq!(ds.encoding_report[1].missing, 1);
        assert_eq!(ds.encoding_report[2].missing, 1);
    }

    #[test]
    fn wrong_column_count_names_line() {
        let err = parse_csv("dem,y,r,1\nrep,n,g\n", &vote_schema()).unwrap_err();
        assert!(matches!(err, Error::Load { line: 2, .. }), "{err:?}");
        let err = parse_csv("dem,y,r,1\nrep,n,g,abc\n", &vote_schema()).unwrap_err();
        assert!(matches!(err, Error::Load { line: 2, .. }), "{err:?}");
    }

    #[test]
    fn schema_needs_one_label() {
        let two = r#"{"columns":[{"name":"a","kind":"label"},{"name":"b","kind":"label"}]}"#;
        assert!(DatasetSchema::from_json(two).is_err());
        let none = r#"{"columns":[{"name":"a","kind":"numeric"}]}"#;
        assert!(DatasetSchema::from_json(none).is_err());
    }

    fn balanced(n: usize) -> Dataset {
        Dataset::new(
            (0..n).map(|i| vec![i as f64, 0.0]).collect(),
            (0..n).map(|i| i % 2).collect(),
            vec!["a".into(), "b".into()],
            vec!["0".into(), "1".into()],
        )
        .unwrap()
    }

    #[test]
    fn stratified_split_counts() {
        let ds = balanced(100);
        let (train, test) = split(&ds, 0.3, 7, true).unwrap();
        assert_eq!(test.len(), 30);
        assert_eq!(test.class_counts(), vec![15, 15]);
        assert_eq!(train.len(), 70);
        let again = split(&ds, 0.3, 7, true).unwrap();
        assert_eq!(again.1, test);
        assert!(split(&ds, 0.0, 7, true).is_err());
        assert!(split(&ds, 1.0, 7, true).is_err());
    }

    #[test]
    fn singleton_class_stays_in_train() {
        let ds = Dataset::new(
            vec![vec![0.0, 0.0]; 5],
            vec![0, 0, 0, 0, 1],
            vec!["a".into(), "b".into()],
            vec!["0".into(), "1".into()],
        )
        .unwrap();
        let (train, _) = split(&ds, 0.4, 1, true).unwrap();
        assert!(train.labels.contains(&1));
    }

    #[test]
    fn folds_are_stratified() {
        let ds = balanced(100);
        let folds = stratified_folds(&ds.labels, 2, 5, 3).unwrap();
        for f in 0..5 {
            let members: Vec<usize> = (0..100).filter(|&i| folds[i] == f).collect();
            assert_eq!(members.len(), 20);
            assert_eq!(members.iter().filter(|&&i| ds.labels[i] == 1).count(), 10);
        }
        let tiny = [0, 0, 0, 1, 1];
        assert!(matches!(
            stratified_folds(&tiny, 2, 3, 0),
            Err(Error::Stratification(_))
        ));
    }

    #[test]
    fn synthetic_conjunction_labels() {
        let expr = LogicExpr::binary(
            OperatorKind::Conjunction,
            LogicExpr::input(0),
            LogicExpr::input(1),
        );
        let ds = generate_synthetic(&expr, 3, 400, 0.0, 5).unwrap();
        for (row, &label) in ds.features.iter().zip(&ds.labels) {
            let x0 = (row[0] + 1.0) / 2.0;
            let x1 = (row[1] + 1.0) / 2.0;
            let crisp = (x0 + x1 - 1.0).clamp(0.0, 1.0);
            assert_eq!(label, usize::from(crisp >= 0.5));
        }
        assert_eq!(generate_synthetic(&expr, 3, 400, 0.0, 5).unwrap(), ds);
        assert!(generate_synthetic(&expr, 3, 10, 0.5, 5).is_err());
        assert!(generate_synthetic(&expr, 1, 10, 0.0, 5).is_err());
    }
}
