//! Minibatch SGD for the logic network and a dense tanh baseline.
//!
//! Loss is the squared error between `[0, 1]` scores and 0/1 targets,
//! averaged over the batch, plus a weight penalty: L1 on selector weights
//! for the logic network, L2 on weights for the baseline. Compensation
//! levels are not penalized and are projected back onto `[0, 1]` after
//! every step.

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::data::{split_indices, stratified_folds, Dataset};
use crate::error::{Error, Result};
use crate::network::{
    max_classify, output_width, pairing_count, Gradients, LogicNetwork, Matrix, NetworkConfig,
    Normalizer,
};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct TrainConfig {
    pub learning_rate: f64,
    /// Penalty coefficient: L1 for the logic network, L2 for the baseline.
    pub l1_regularization: f64,
    pub max_epochs: usize,
    pub patience: usize,
    pub batch_size: usize,
    pub seed: u64,
    /// Share of the training split held out for early stopping.
    pub validation_fraction: f64,
}

impl Default for TrainConfig {
    fn default() -> Self {
        TrainConfig {
            learning_rate: 0.01,
            l1_regularization: 1e-4,
            max_epochs: 200,
            patience: 20,
            batch_size: 16,
            seed: 0,
            validation_fraction: 0.15,
        }
    }
}

impl TrainConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.learning_rate > 0.0 && self.learning_rate.is_finite()) {
            return Err(Error::Config("learning_rate must be positive".into()));
        }
        if !(self.l1_regularization >= 0.0 && self.l1_regularization.is_finite()) {
            return Err(Error::Config(
                "l1_regularization must be non-negative".into(),
            ));
        }
        if !(self.validation_fraction > 0.0 && self.validation_fraction < 1.0) {
            return Err(Error::Config(
                "validation_fraction must lie in (0, 1)".into(),
            ));
        }
        if self.batch_size == 0 {
            return Err(Error::Config("batch_size must be at least 1".into()));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Metrics {
    pub misclassification_rate: f64,
    /// `confusion[true_class][predicted_class]`.
    pub per_class_confusion: Vec<Vec<usize>>,
}

impl Metrics {
    pub fn from_predictions(labels: &[usize], predicted: &[usize], class_count: usize) -> Self {
        let mut confusion = vec![vec![0; class_count]; class_count];
        for (&t, &p) in labels.iter().zip(predicted) {
            confusion[t][p] += 1;
        }
        let total = labels.len();
        let correct: usize = (0..class_count).map(|c| confusion[c][c]).sum();
        let rate = if total == 0 {
            0.0
        } else {
            1.0 - correct as f64 / total as f64
        };
        Metrics {
            misclassification_rate: rate,
            per_class_confusion: confusion,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EpochRecord {
    pub epoch: usize,
    pub train_loss: f64,
    pub val_misclassification: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrainingLog {
    /// Loss on the training part before the first update.
    pub initial_loss: f64,
    pub epochs: Vec<EpochRecord>,
    /// Epoch of the returned snapshot; 0 means the initial parameters.
    pub best_epoch: usize,
    pub best_val_misclassification: f64,
}

impl TrainingLog {
    pub fn to_csv(&self) -> String {
        let mut out = String::from("epoch,train_loss,val_misclassification\n");
        for e in &self.epochs {
            out.push_str(&format!(
                "{},{},{}\n",
                e.epoch, e.train_loss, e.val_misclassification
            ));
        }
        out
    }
}

#[derive(Debug, Clone)]
pub struct TrainOutcome<M> {
    pub model: M,
    pub log: TrainingLog,
}

/// What the shared SGD loop needs from a model.
pub trait Trainable: Clone {
    type Grads;

    fn feature_count(&self) -> usize;
    fn class_count(&self) -> usize;
    fn set_normalizer(&mut self, normalizer: Normalizer) -> Result<()>;
    fn zero_grads(&self) -> Self::Grads;
    fn clear_grads(grads: &mut Self::Grads);
    /// Adds the data-term gradient of one raw sample and returns its loss
    /// `Σ (score - target)²`.
    fn accumulate_sample(&self, raw: &[f64], label: usize, grads: &mut Self::Grads) -> Result<f64>;
    /// Multiplies the data term by `scale`, adds the penalty gradient and
    /// returns the penalty value.
    fn finish_grads(&self, grads: &mut Self::Grads, scale: f64, coefficient: f64) -> f64;
    fn step(&mut self, grads: &Self::Grads, learning_rate: f64);
    fn classify(&self, raw: &[f64]) -> Result<usize>;
}

/// Gradient of the batch loss with respect to the signed outputs, for one
/// sample, and the sample's squared error.
fn output_gradient(outputs: &[f64], label: usize) -> (Vec<f64>, f64) {
    let single = outputs.len() == 1;
    let mut loss = 0.0;
    let grad = outputs
        .iter()
        .enumerate()
        .map(|(o, z)| {
            let target = if single {
                label as f64
            } else {
                f64::from(u8::from(o == label))
            };
            let score = (z + 1.0) / 2.0;
            loss += (score - target).powi(2);
            // d/dz (score - t)² = (score - t)
            score - target
        })
        .collect();
    (grad, loss)
}

impl Trainable for LogicNetwork {
    type Grads = Gradients;

    fn feature_count(&self) -> usize {
        self.feature_count
    }

    fn class_count(&self) -> usize {
        self.class_count
    }

    fn set_normalizer(&mut self, normalizer: Normalizer) -> Result<()> {
        LogicNetwork::set_normalizer(self, normalizer)
    }

    fn zero_grads(&self) -> Gradients {
        Gradients::zeros_like(self)
    }

    fn clear_grads(grads: &mut Gradients) {
        grads.clear();
    }

    fn accumulate_sample(&self, raw: &[f64], label: usize, grads: &mut Gradients) -> Result<f64> {
        let (_, cache) = self.forward(raw)?;
        let (g, loss) = output_gradient(&cache.outputs, label);
        self.backward_accumulate(&cache, &g, grads)?;
        Ok(loss)
    }

    fn finish_grads(&self, grads: &mut Gradients, scale: f64, coefficient: f64) -> f64 {
        grads.scale(scale);
        let mut penalty = 0.0;
        for (part, g) in self.parts.iter().zip(&mut grads.selectors) {
            for (w, gw) in part.selector.data.iter().zip(&mut g.data) {
                penalty += w.abs();
                if *w != 0.0 {
                    *gw += coefficient * w.signum();
                }
            }
        }
        coefficient * penalty
    }

    fn step(&mut self, grads: &Gradients, learning_rate: f64) {
        self.apply_gradients(grads, learning_rate);
    }

    fn classify(&self, raw: &[f64]) -> Result<usize> {
        Ok(self.predict(raw)?.class)
    }
}

/// Training and validation row indices used for early stopping; identical
/// for the logic network and the baseline under the same seed.
pub fn validation_split(data: &Dataset, cfg: &TrainConfig) -> Result<(Vec<usize>, Vec<usize>)> {
    let (train, val) = split_indices(
        &data.labels,
        data.class_count,
        cfg.validation_fraction,
        cfg.seed,
        true,
    )?;
    if val.is_empty() {
        let all: Vec<usize> = (0..data.len()).collect();
        return Ok((all.clone(), all));
    }
    Ok((train, val))
}

fn error_rate<M: Trainable>(model: &M, data: &Dataset, rows: &[usize]) -> Result<f64> {
    let mut wrong = 0usize;
    for &i in rows {
        wrong += usize::from(model.classify(&data.features[i])? != data.labels[i]);
    }
    Ok(wrong as f64 / rows.len().max(1) as f64)
}

fn mean_loss<M: Trainable>(
    model: &M,
    data: &Dataset,
    rows: &[usize],
    coefficient: f64,
) -> Result<f64> {
    let mut grads = model.zero_grads();
    let mut total = 0.0;
    for &i in rows {
        total += model.accumulate_sample(&data.features[i], data.labels[i], &mut grads)?;
    }
    let penalty = model.finish_grads(&mut grads, 0.0, coefficient);
    Ok(total / rows.len().max(1) as f64 + penalty)
}

/// Shared SGD loop with early stopping on validation misclassification.
/// Returns the latest parameters attaining the best validation rate seen,
/// the initial parameters included.
pub fn fit<M: Trainable>(
    mut model: M,
    data: &Dataset,
    cfg: &TrainConfig,
) -> Result<TrainOutcome<M>> {
    cfg.validate()?;
    data.validate()?;
    if data.is_empty() {
        return Err(Error::Contract("training set is empty".into()));
    }
    if data.width() != model.feature_count() {
        return Err(Error::Shape {
            expected: model.feature_count(),
            actual: data.width(),
        });
    }
    if data.class_count != model.class_count() {
        return Err(Error::Shape {
            expected: model.class_count(),
            actual: data.class_count,
        });
    }
    let (train_rows, val_rows) = validation_split(data, cfg)?;
    model.set_normalizer(Normalizer::fit(&data.features)?)?;

    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed.wrapping_add(0x9e37_79b9_7f4a_7c15));
    let initial_loss = mean_loss(&model, data, &train_rows, cfg.l1_regularization)?;
    let mut best = model.clone();
    let mut best_val = error_rate(&model, data, &val_rows)?;
    let mut log = TrainingLog {
        initial_loss,
        epochs: Vec::new(),
        best_epoch: 0,
        best_val_misclassification: best_val,
    };
    let mut grads = model.zero_grads();
    let mut order = train_rows.clone();
    let mut stale = 0usize;

    for epoch in 1..=cfg.max_epochs {
        order.shuffle(&mut rng);
        let mut epoch_loss = 0.0;
        for (batch, rows) in order.chunks(cfg.batch_size).enumerate() {
            M::clear_grads(&mut grads);
            let mut loss = 0.0;
            for &i in rows {
                loss += model.accumulate_sample(&data.features[i], data.labels[i], &mut grads)?;
            }
            let m = rows.len() as f64;
            let penalty = model.finish_grads(&mut grads, 1.0 / m, cfg.l1_regularization);
            let batch_loss = loss / m + penalty;
            if !batch_loss.is_finite() {
                return Err(Error::NumericFailure { epoch, batch });
            }
            model.step(&grads, cfg.learning_rate);
            epoch_loss += batch_loss * m;
        }
        let train_loss = epoch_loss / order.len() as f64;
        let val = error_rate(&model, data, &val_rows)?;
        log.epochs.push(EpochRecord {
            epoch,
            train_loss,
            val_misclassification: val,
        });
        // ties refresh the snapshot; only strict improvement resets patience
        if val <= best_val {
            stale = if val < best_val { 0 } else { stale + 1 };
            best_val = val;
            best = model.clone();
            log.best_epoch = epoch;
            log.best_val_misclassification = val;
        } else {
            stale += 1;
        }
        if stale >= cfg.patience {
            break;
        }
    }
    Ok(TrainOutcome { model: best, log })
}

/// Trains the logic network on `data`.
pub fn train(
    net: LogicNetwork,
    data: &Dataset,
    cfg: &TrainConfig,
) -> Result<TrainOutcome<LogicNetwork>> {
    fit(net, data, cfg)
}

pub fn evaluate_model<M: Trainable>(model: &M, data: &Dataset) -> Result<Metrics> {
    if data.width() != model.feature_count() {
        return Err(Error::Shape {
            expected: model.feature_count(),
            actual: data.width(),
        });
    }
    if data.class_count != model.class_count() {
        return Err(Error::Shape {
            expected: model.class_count(),
            actual: data.class_count,
        });
    }
    let predicted = data
        .features
        .iter()
        .map(|x| model.classify(x))
        .collect::<Result<Vec<_>>>()?;
    Ok(Metrics::from_predictions(
        &data.labels,
        &predicted,
        data.class_count,
    ))
}

/// Misclassification rate and confusion matrix of `net` on `data`.
pub fn evaluate(net: &LogicNetwork, data: &Dataset) -> Result<Metrics> {
    evaluate_model(net, data)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CrossValidation {
    pub fold_rates: Vec<f64>,
    pub mean: f64,
    /// Sample standard deviation over folds.
    pub std_dev: f64,
}

/// Stratified k-fold estimate for the logic network.
pub fn cross_validate(
    dataset: &Dataset,
    folds: usize,
    net_cfg: &NetworkConfig,
    cfg: &TrainConfig,
) -> Result<CrossValidation> {
    let assignment = stratified_folds(&dataset.labels, dataset.class_count, folds, cfg.seed)?;
    let mut rates = Vec::with_capacity(folds);
    for f in 0..folds {
        let test: Vec<usize> = (0..dataset.len()).filter(|&i| assignment[i] == f).collect();
        let train: Vec<usize> = (0..dataset.len()).filter(|&i| assignment[i] != f).collect();
        let net = crate::network::build_network(dataset.width(), dataset.class_count, net_cfg)?;
        let out = fit(net, &dataset.subset(&train), cfg)?;
        rates.push(evaluate(&out.model, &dataset.subset(&test))?.misclassification_rate);
    }
    Ok(summarize(rates))
}

pub fn summarize(rates: Vec<f64>) -> CrossValidation {
    let n = rates.len() as f64;
    let mean = rates.iter().sum::<f64>() / n;
    let var = if rates.len() > 1 {
        rates.iter().map(|r| (r - mean).powi(2)).sum::<f64>() / (n - 1.0)
    } else {
        0.0
    };
    CrossValidation {
        fold_rates: rates,
        mean,
        std_dev: var.sqrt(),
    }
}

/// Layer widths of the dense baseline, input first.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BaselineConfig {
    pub widths: Vec<usize>,
    #[serde(default)]
    pub seed: u64,
}

impl BaselineConfig {
    /// Mirrors a logic network: one dense layer per FuzzyLogic layer (as wide
    /// as its pairing count) and one per FeatureSelector.
    pub fn mirror(feature_count: usize, class_count: usize, net_cfg: &NetworkConfig) -> Self {
        let mut widths = vec![feature_count];
        let mut width_in = feature_count;
        for part in 0..net_cfg.logic_parts {
            widths.push(pairing_count(width_in));
            let out = if part + 1 == net_cfg.logic_parts {
                output_width(class_count)
            } else {
                net_cfg.hidden_width
            };
            widths.push(out);
            width_in = out;
        }
        BaselineConfig {
            widths,
            seed: net_cfg.seed,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DenseLayer {
    /// `out × in`.
    pub weights: Matrix,
    pub bias: Vec<f64>,
}

/// Fully connected network with tanh on every layer, outputs read on
/// `[-1, 1]` like the logic network.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DenseNetwork {
    pub class_count: usize,
    pub normalizer: Normalizer,
    pub layers: Vec<DenseLayer>,
}

impl DenseNetwork {
    /// Xavier-uniform weights, zero biases.
    pub fn new(class_count: usize, cfg: &BaselineConfig) -> Result<Self> {
        if cfg.widths.len() < 2 || cfg.widths.contains(&0) {
            return Err(Error::Config(
                "baseline needs at least two positive widths".into(),
            ));
        }
        if *cfg.widths.last().unwrap_or(&0) != output_width(class_count) {
            return Err(Error::Config(
                "baseline output width does not match classes".into(),
            ));
        }
        let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
        let layers = cfg
            .widths
            .windows(2)
            .map(|w| {
                let limit = (6.0 / (w[0] + w[1]) as f64).sqrt();
                let mut weights = Matrix::zeros(w[1], w[0]);
                for v in &mut weights.data {
                    *v = rng.gen_range(-limit..=limit);
                }
                DenseLayer {
                    weights,
                    bias: vec![0.0; w[1]],
                }
            })
            .collect();
        Ok(DenseNetwork {
            class_count,
            normalizer: Normalizer::unit(cfg.widths[0]),
            layers,
        })
    }

    /// Activations of every layer, input first.
    fn activations(&self, raw: &[f64]) -> Result<Vec<Vec<f64>>> {
        let mut acts = vec![self.normalizer.apply(raw)?];
        for layer in &self.layers {
            let prev = acts.last().map_or(&[][..], Vec::as_slice);
            let next = layer
                .weights
                .mul_vec(prev)
                .into_iter()
                .zip(&layer.bias)
                .map(|(v, b)| (v + b).tanh())
                .collect();
            acts.push(next);
        }
        Ok(acts)
    }

    pub fn predict(&self, raw: &[f64]) -> Result<crate::network::Prediction> {
        let acts = self.activations(raw)?;
        Ok(max_classify(acts.last().map_or(&[][..], Vec::as_slice)))
    }
}

#[derive(Debug, Clone)]
pub struct DenseGrads {
    pub layers: Vec<DenseLayer>,
}

impl Trainable for DenseNetwork {
    type Grads = DenseGrads;

    fn feature_count(&self) -> usize {
        self.normalizer.bounds.len()
    }

    fn class_count(&self) -> usize {
        self.class_count
    }

    fn set_normalizer(&mut self, normalizer: Normalizer) -> Result<()> {
        if normalizer.bounds.len() != self.feature_count() {
            return Err(Error::Shape {
                expected: self.feature_count(),
                actual: normalizer.bounds.len(),
            });
        }
        self.normalizer = normalizer;
        Ok(())
    }

    fn zero_grads(&self) -> DenseGrads {
        DenseGrads {
            layers: self
                .layers
                .iter()
                .map(|l| DenseLayer {
                    weights: Matrix::zeros(l.weights.rows, l.weights.cols),
                    bias: vec![0.0; l.bias.len()],
                })
                .collect(),
        }
    }

    fn clear_grads(grads: &mut DenseGrads) {
        for l in &mut grads.layers {
            l.weights.data.iter_mut().for_each(|v| *v = 0.0);
            l.bias.iter_mut().for_each(|v| *v = 0.0);
        }
    }

    fn accumulate_sample(&self, raw: &[f64], label: usize, grads: &mut DenseGrads) -> Result<f64> {
        let acts = self.activations(raw)?;
        let out = acts.last().map_or(&[][..], Vec::as_slice);
        let (g, loss) = output_gradient(out, label);
        let mut delta: Vec<f64> = g.iter().zip(out).map(|(g, a)| g * (1.0 - a * a)).collect();
        for l in (0..self.layers.len()).rev() {
            let input = &acts[l];
            let gl = &mut grads.layers[l];
            for (r, &d) in delta.iter().enumerate() {
                gl.bias[r] += d;
                for (gw, x) in gl.weights.row_mut(r).iter_mut().zip(input) {
                    *gw += d * x;
                }
            }
            if l > 0 {
                let w = &self.layers[l].weights;
                let mut prev = vec![0.0; w.cols];
                for (r, &d) in delta.iter().enumerate() {
                    for (p, wv) in prev.iter_mut().zip(w.row(r)) {
                        *p += d * wv;
                    }
                }
                delta = prev
                    .into_iter()
                    .zip(input)
                    .map(|(p, a)| p * (1.0 - a * a))
                    .collect();
            }
        }
        Ok(loss)
    }

    fn finish_grads(&self, grads: &mut DenseGrads, scale: f64, coefficient: f64) -> f64 {
        let mut penalty = 0.0;
        for (layer, g) in self.layers.iter().zip(&mut grads.layers) {
            g.bias.iter_mut().for_each(|v| *v *= scale);
            for (w, gw) in layer.weights.data.iter().zip(&mut g.weights.data) {
                penalty += w * w;
                *gw = *gw * scale + 2.0 * coefficient * w;
            }
        }
        coefficient * penalty
    }

    fn step(&mut self, grads: &DenseGrads, learning_rate: f64) {
        for (layer, g) in self.layers.iter_mut().zip(&grads.layers) {
            for (w, gw) in layer.weights.data.iter_mut().zip(&g.weights.data) {
                *w -= learning_rate * gw;
            }
            for (b, gb) in layer.bias.iter_mut().zip(&g.bias) {
                *b -= learning_rate * gb;
            }
        }
    }

    fn classify(&self, raw: &[f64]) -> Result<usize> {
        Ok(self.predict(raw)?.class)
    }
}

/// Trains the dense baseline with the same loop, L2 in place of L1.
pub fn train_baseline(
    data: &Dataset,
    bcfg: &BaselineConfig,
    cfg: &TrainConfig,
) -> Result<TrainOutcome<DenseNetwork>> {
    if bcfg.widths.first() != Some(&data.width()) {
        return Err(Error::Shape {
            expected: bcfg.widths.first().copied().unwrap_or(0),
            actual: data.width(),
        });
    }
    let model = DenseNetwork::new(data.class_count, bcfg)?;
    fit(model, data, cfg)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn metrics_counting() {
        let m = Metrics::from_predictions(&[0, 1, 1, 0], &[0, 1, 0, 0], 2);
        assert_eq!(m.misclassification_rate, 0.25);
        assert_eq!(m.per_class_confusion, vec![vec![2, 0], vec![1, 1]]);
        let perfect = Metrics::from_predictions(&[0, 1, 2], &[0, 1, 2], 3);
        assert_eq!(perfect.misclassification_rate, 0.0);
        let constant = Metrics::from_predictions(&[0, 1, 0, 1, 0, 1], &[1; 6], 2);
        assert_eq!(constant.misclassification_rate, 0.5);
    }

    #[test]
    fn config_validation() {
        assert!(TrainConfig::default().validate().is_ok());
        let bad = [
            TrainConfig {
                learning_rate: 0.0,
                ..Default::default()
            },
            TrainConfig {
                l1_regularization: -1.0,
                ..Default::default()
            },
            TrainConfig {
                validation_fraction: 1.0,
                ..Default::default()
            },
            TrainConfig {
                batch_size: 0,
                ..Default::default()
            },
        ];
        for cfg in bad {
            assert!(cfg.validate().is_err());
        }
    }

    #[test]
    fn mirrored_baseline_widths() {
        let b = BaselineConfig::mirror(4, 2, &NetworkConfig::default());
        assert_eq!(b.widths, vec![4, 14, 8, 44, 1]);
        let net = DenseNetwork::new(2, &b).unwrap();
        assert_eq!(net.layers.len(), 4);
    }

    #[test]
    fn summary_statistics() {
        let s = summarize(vec![0.1, 0.2, 0.3]);
        assert!((s.mean - 0.2).abs() < 1e-15);
        assert!((s.std_dev - 0.1).abs() < 1e-12);
    }

    #[test]
    fn log_csv_header() {
        let log = TrainingLog {
            initial_loss: 1.0,
            epochs: vec![EpochRecord {
                epoch: 1,
                train_loss: 0.5,
                val_misclassification: 0.25,
            }],
            best_epoch: 1,
            best_val_misclassification: 0.25,
        };
        assert_eq!(
            log.to_csv(),
            "epoch,train_loss,val_misclassification\n1,0.5,0.25\n"
        );
    }
}
