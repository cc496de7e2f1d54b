//! The layered logic network.
//!
//! Layer order for `L` logic parts:
//!
//! ```text
//! Normalization
//! [AllPairings -> FuzzyLogic -> FeatureSelector]   logic part 1
//! TanhRemap
//! [AllPairings -> FuzzyLogic -> FeatureSelector]   logic part 2
//! ...
//! MaxClassifier
//! ```
//!
//! With the default two logic parts this is a nine-layer stack. Every value
//! passed between layers lives on the signed interval `[-1, 1]`; the
//! FuzzyLogic layer maps each operand pair to `[0, 1]` with
//! `z = (z̃ + 1) / 2`, applies `S(x + y - α)` and maps the result back with
//! `z̃ = 2z - 1`.
//!
//! Only the compensation levels `α` and the selector matrices are learned.
//! Normalization bounds are fitted on training data before training.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::ops::{signed_from_offset, slope_from_offset, SquashParams};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum LayerKind {
    Normalization,
    AllPairings,
    FuzzyLogic,
    FeatureSelector,
    TanhRemap,
    MaxClassifier,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct LayerSpec {
    pub kind: LayerKind,
    pub width_in: usize,
    pub width_out: usize,
}

/// Operand pair feeding one FuzzyLogic slot. `True` is `+1`, `False` is `-1`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum PairingIndex {
    Pair(usize, usize),
    WithTrue(usize),
    WithFalse(usize),
}

impl PairingIndex {
    /// Signed operand values for input vector `x`.
    #[inline]
    pub fn operands(self, x: &[f64]) -> (f64, f64) {
        match self {
            PairingIndex::Pair(i, j) => (x[i], x[j]),
            PairingIndex::WithTrue(i) => (x[i], 1.0),
            PairingIndex::WithFalse(i) => (x[i], -1.0),
        }
    }
}

/// Number of slots produced by AllPairings on `n` inputs: `n(n-1)/2 + 2n`.
pub fn pairing_count(n: usize) -> usize {
    n * n.saturating_sub(1) / 2 + 2 * n
}

/// Deterministic enumeration: every `Pair(i, j)` with `i < j` in
/// lexicographic order, then `WithTrue(0..n)`, then `WithFalse(0..n)`.
pub fn pairing_table(n: usize) -> Vec<PairingIndex> {
    let mut table = Vec::with_capacity(pairing_count(n));
    for i in 0..n {
        for j in i + 1..n {
            table.push(PairingIndex::Pair(i, j));
        }
    }
    table.extend((0..n).map(PairingIndex::WithTrue));
    table.extend((0..n).map(PairingIndex::WithFalse));
    table
}

/// Dense row-major matrix.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Matrix {
    pub rows: usize,
    pub cols: usize,
    pub data: Vec<f64>,
}

impl Matrix {
    pub fn zeros(rows: usize, cols: usize) -> Self {
        Matrix {
            rows,
            cols,
            data: vec![0.0; rows * cols],
        }
    }

    pub fn from_rows(rows: &[Vec<f64>]) -> Result<Self> {
        let cols = rows.first().map_or(0, Vec::len);
        if rows.iter().any(|r| r.len() != cols) {
            return Err(Error::Contract("ragged matrix rows".into()));
        }
        Ok(Matrix {
            rows: rows.len(),
            cols,
            data: rows.concat(),
        })
    }

    #[inline]
    pub fn get(&self, r: usize, c: usize) -> f64 {
        self.data[r * self.cols + c]
    }

    #[inline]
    pub fn set(&mut self, r: usize, c: usize, v: f64) {
        self.data[r * self.cols + c] = v;
    }

    #[inline]
    pub fn row(&self, r: usize) -> &[f64] {
        &self.data[r * self.cols..(r + 1) * self.cols]
    }

    #[inline]
    pub fn row_mut(&mut self, r: usize) -> &mut [f64] {
        &mut self.data[r * self.cols..(r + 1) * self.cols]
    }

    pub fn mul_vec(&self, x: &[f64]) -> Vec<f64> {
        (0..self.rows)
            .map(|r| self.row(r).iter().zip(x).map(|(w, v)| w * v).sum())
            .collect()
    }
}

/// Per-feature `(min, max)` bounds mapping raw features onto `[-1, 1]`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Normalizer {
    pub bounds: Vec<(f64, f64)>,
}

impl Normalizer {
    /// Identity map for inputs already on `[-1, 1]`.
    pub fn unit(width: usize) -> Self {
        Normalizer {
            bounds: vec![(-1.0, 1.0); width],
        }
    }

    /// Column-wise min and max over `rows`.
    pub fn fit(rows: &[Vec<f64>]) -> Result<Self> {
        let width = rows
            .first()
            .map(Vec::len)
            .ok_or_else(|| Error::Contract("cannot fit bounds on empty data".into()))?;
        let mut bounds = vec![(f64::INFINITY, f64::NEG_INFINITY); width];
        for row in rows {
            if row.len() != width {
                return Err(Error::Shape {
                    expected: width,
                    actual: row.len(),
                });
            }
            for (b, &v) in bounds.iter_mut().zip(row) {
                b.0 = b.0.min(v);
                b.1 = b.1.max(v);
            }
        }
        Ok(Normalizer { bounds })
    }

    pub fn apply(&self, raw: &[f64]) -> Result<Vec<f64>> {
        normalize_forward(raw, &self.bounds)
    }
}

/// Affine map sending each `(min, max)` to `(-1, 1)`; out-of-range values
/// are clamped and degenerate features (`min == max`) map to 0.
pub fn normalize_forward(raw: &[f64], bounds: &[(f64, f64)]) -> Result<Vec<f64>> {
    if raw.len() != bounds.len() {
        return Err(Error::Shape {
            expected: bounds.len(),
            actual: raw.len(),
        });
    }
    raw.iter()
        .zip(bounds)
        .map(|(&x, &(lo, hi))| {
            if !x.is_finite() {
                return Err(Error::Domain(format!("non-finite feature value {x}")));
            }
            let span = hi - lo;
            if !(span > 0.0) {
                return Ok(0.0);
            }
            Ok(((2.0 * x - (lo + hi)) / span).clamp(-1.0, 1.0))
        })
        .collect()
}

/// Operand pairs for every slot of `table`.
pub fn all_pairings_forward(x: &[f64], table: &[PairingIndex]) -> Vec<(f64, f64)> {
    table.iter().map(|p| p.operands(x)).collect()
}

/// Offset of the squashing argument from its center for signed operands
/// `u`, `v`: `x + y - α - a` with `x = (u+1)/2`, `y = (v+1)/2`.
///
/// Written as `(u + v)/2 + (1 - α - a)` so that `u = -v` gives exactly
/// `1 - α - a`.
#[inline]
fn slot_offset(u: f64, v: f64, alpha: f64, p: &SquashParams) -> f64 {
    0.5 * (u + v) + (1.0 - alpha - p.center)
}

/// Signed output `2·S(x + y - α) - 1` for each operand pair.
pub fn fuzzy_logic_forward(pairs: &[(f64, f64)], alphas: &[f64], p: &SquashParams) -> Vec<f64> {
    pairs
        .iter()
        .zip(alphas)
        .map(|(&(u, v), &a)| signed_from_offset(slot_offset(u, v, a, p), p))
        .collect()
}

/// Bias-free linear map followed by a clamp to `[-1, 1]`.
pub fn feature_selector_forward(x: &[f64], weights: &Matrix) -> Vec<f64> {
    weights
        .mul_vec(x)
        .into_iter()
        .map(|r| r.clamp(-1.0, 1.0))
        .collect()
}

pub fn tanh_remap_forward(x: &[f64]) -> Vec<f64> {
    x.iter().map(|v| v.tanh()).collect()
}

/// Decision of the final layer.
#[derive(Debug, Clone, PartialEq)]
pub struct Prediction {
    pub class: usize,
    /// Output values mapped to `[0, 1]`.
    pub scores: Vec<f64>,
}

/// Binary (one output): class 1 iff the `[0, 1]` score is at least 0.5,
/// i.e. iff the signed output is non-negative. Multi-class: argmax with
/// ties going to the lowest index.
pub fn max_classify(outputs: &[f64]) -> Prediction {
    let scores: Vec<f64> = outputs.iter().map(|z| (z + 1.0) / 2.0).collect();
    let class = if outputs.len() == 1 {
        usize::from(outputs[0] >= 0.0)
    } else {
        let mut best = 0;
        for (i, z) in outputs.iter().enumerate() {
            if *z > outputs[best] {
                best = i;
            }
        }
        best
    };
    Prediction { class, scores }
}

/// Learned parameters of one AllPairings → FuzzyLogic → FeatureSelector
/// triple.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LogicPart {
    pub pairings: Vec<PairingIndex>,
    /// One compensation level per slot, always in `[0, 1]`.
    pub alphas: Vec<f64>,
    /// `width_out × pairings.len()`.
    pub selector: Matrix,
}

impl LogicPart {
    pub fn input_width(&self) -> usize {
        self.pairings
            .iter()
            .map(|p| match *p {
                PairingIndex::Pair(_, j) => j + 1,
                PairingIndex::WithTrue(i) | PairingIndex::WithFalse(i) => i + 1,
            })
            .max()
            .unwrap_or(0)
    }

    pub fn output_width(&self) -> usize {
        self.selector.rows
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct NetworkConfig {
    /// Output width of every FeatureSelector except the last.
    pub hidden_width: usize,
    pub logic_parts: usize,
    pub squash: SquashParams,
    /// Upper bound on slots per AllPairings layer.
    pub max_pairings: usize,
    pub seed: u64,
}

impl Default for NetworkConfig {
    fn default() -> Self {
        NetworkConfig {
            hidden_width: 8,
            logic_parts: 2,
            squash: SquashParams::default(),
            max_pairings: 20_000,
            seed: 0,
        }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct LogicNetwork {
    pub feature_count: usize,
    pub class_count: usize,
    pub layers: Vec<LayerSpec>,
    pub normalizer: Normalizer,
    pub parts: Vec<LogicPart>,
    pub squash: SquashParams,
    /// Bumped on every parameter update; ties forward caches to the
    /// parameters they were computed with.
    #[serde(skip)]
    revision: u64,
}

impl PartialEq for LogicNetwork {
    /// Compares parameters and structure; the revision counter is ignored.
    fn eq(&self, other: &Self) -> bool {
        self.feature_count == other.feature_count
            && self.class_count == other.class_count
            && self.layers == other.layers
            && self.normalizer == other.normalizer
            && self.parts == other.parts
            && self.squash == other.squash
    }
}

/// Output width of the last selector: one unit for two classes.
pub fn output_width(class_count: usize) -> usize {
    if class_count == 2 {
        1
    } else {
        class_count
    }
}

/// Builds the layer chain and initializes parameters from `config.seed`.
///
/// `α` is drawn uniformly from `[0.25, 0.75]`; selector weights from
/// `U[-0.5, 0.5] / sqrt(width_in)`.
pub fn build_network(
    feature_count: usize,
    class_count: usize,
    config: &NetworkConfig,
) -> Result<LogicNetwork> {
    let widths = part_widths(feature_count, class_count, config)?;
    config.squash.validate()?;
    let mut rng = ChaCha8Rng::seed_from_u64(config.seed);
    let mut parts = Vec::with_capacity(config.logic_parts);
    for &(width_in, width_out) in &widths {
        let pairings = pairing_table(width_in);
        let alphas = (0..pairings.len())
            .map(|_| rng.gen_range(0.25..=0.75))
            .collect();
        let scale = 1.0 / (pairings.len() as f64).sqrt();
        let mut selector = Matrix::zeros(width_out, pairings.len());
        for w in &mut selector.data {
            *w = rng.gen_range(-0.5..=0.5) * scale;
        }
        parts.push(LogicPart {
            pairings,
            alphas,
            selector,
        });
    }
    LogicNetwork::from_parts(
        feature_count,
        class_count,
        Normalizer::unit(feature_count),
        parts,
        config.squash,
    )
}

fn part_widths(
    feature_count: usize,
    class_count: usize,
    config: &NetworkConfig,
) -> Result<Vec<(usize, usize)>> {
    if feature_count < 2 {
        return Err(Error::Config(format!(
            "at least 2 features are required, got {feature_count}"
        )));
    }
    if class_count < 2 {
        return Err(Error::Config(format!(
            "at least 2 classes are required, got {class_count}"
        )));
    }
    if config.logic_parts == 0 {
        return Err(Error::Config("logic_parts must be at least 1".into()));
    }
    if config.logic_parts > 1 && config.hidden_width < 2 {
        return Err(Error::Config("hidden_width must be at least 2".into()));
    }
    let mut widths = Vec::with_capacity(config.logic_parts);
    let mut width_in = feature_count;
    for part in 0..config.logic_parts {
        let slots = pairing_count(width_in);
        if slots > config.max_pairings {
            return Err(Error::Config(format!(
                "AllPairings over {width_in} inputs yields {slots} slots, above the cap of {}",
                config.max_pairings
            )));
        }
        let width_out = if part + 1 == config.logic_parts {
            output_width(class_count)
        } else {
            config.hidden_width
        };
        widths.push((width_in, width_out));
        width_in = width_out;
    }
    Ok(widths)
}

fn layer_chain(feature_count: usize, parts: &[LogicPart]) -> Vec<LayerSpec> {
    let mut layers = vec![LayerSpec {
        kind: LayerKind::Normalization,
        width_in: feature_count,
        width_out: feature_count,
    }];
    for (i, part) in parts.iter().enumerate() {
        if i > 0 {
            let w = parts[i - 1].output_width();
            layers.push(LayerSpec {
                kind: LayerKind::TanhRemap,
                width_in: w,
                width_out: w,
            });
        }
        let slots = part.pairings.len();
        let width_in = if i == 0 {
            feature_count
        } else {
            parts[i - 1].output_width()
        };
        layers.push(LayerSpec {
            kind: LayerKind::AllPairings,
            width_in,
            width_out: slots,
        });
        layers.push(LayerSpec {
            kind: LayerKind::FuzzyLogic,
            width_in: slots,
            width_out: slots,
        });
        layers.push(LayerSpec {
            kind: LayerKind::FeatureSelector,
            width_in: slots,
            width_out: part.output_width(),
        });
    }
    let last = parts.last().map_or(0, LogicPart::output_width);
    layers.push(LayerSpec {
        kind: LayerKind::MaxClassifier,
        width_in: last,
        width_out: 1,
    });
    layers
}

/// Everything computed by [`LogicNetwork::forward`] that backpropagation
/// needs.
#[derive(Debug, Clone)]
pub struct ForwardCache {
    revision: u64,
    pub parts: Vec<PartCache>,
    pub outputs: Vec<f64>,
}

#[derive(Debug, Clone)]
pub struct PartCache {
    /// Signed input of the AllPairings layer.
    pub input: Vec<f64>,
    /// Squashing argument minus its center, per slot.
    pub offsets: Vec<f64>,
    /// FuzzyLogic outputs.
    pub activations: Vec<f64>,
    /// Selector output before clamping.
    pub selector_raw: Vec<f64>,
    /// Selector output after clamping.
    pub output: Vec<f64>,
}

/// Gradients of a scalar loss with respect to the learnable parameters.
#[derive(Debug, Clone, PartialEq)]
pub struct Gradients {
    pub alphas: Vec<Vec<f64>>,
    pub selectors: Vec<Matrix>,
    /// Gradient with respect to each part's FuzzyLogic outputs.
    pub activations: Vec<Vec<f64>>,
}

impl Gradients {
    pub fn zeros_like(net: &LogicNetwork) -> Self {
        Gradients {
            alphas: net
                .parts
                .iter()
                .map(|p| vec![0.0; p.alphas.len()])
                .collect(),
            selectors: net
                .parts
                .iter()
                .map(|p| Matrix::zeros(p.selector.rows, p.selector.cols))
                .collect(),
            activations: net
                .parts
                .iter()
                .map(|p| vec![0.0; p.pairings.len()])
                .collect(),
        }
    }

    pub fn clear(&mut self) {
        self.alphas
            .iter_mut()
            .flatten()
            .chain(self.selectors.iter_mut().flat_map(|m| m.data.iter_mut()))
            .chain(self.activations.iter_mut().flatten())
            .for_each(|x| *x = 0.0);
    }

    pub fn accumulate(&mut self, other: &Gradients) {
        for (a, b) in self.alphas.iter_mut().zip(&other.alphas) {
            a.iter_mut().zip(b).for_each(|(x, y)| *x += y);
        }
        for (a, b) in self.selectors.iter_mut().zip(&other.selectors) {
            a.data.iter_mut().zip(&b.data).for_each(|(x, y)| *x += y);
        }
        for (a, b) in self.activations.iter_mut().zip(&other.activations) {
            a.iter_mut().zip(b).for_each(|(x, y)| *x += y);
        }
    }

    pub fn scale(&mut self, factor: f64) {
        self.alphas
            .iter_mut()
            .flatten()
            .chain(self.selectors.iter_mut().flat_map(|m| m.data.iter_mut()))
            .chain(self.activations.iter_mut().flatten())
            .for_each(|x| *x *= factor);
    }
}

impl LogicNetwork {
    /// Assembles a network from explicit parameters, checking that widths
    /// chain and every `α` lies in `[0, 1]`.
    pub fn from_parts(
        feature_count: usize,
        class_count: usize,
        normalizer: Normalizer,
        parts: Vec<LogicPart>,
        squash: SquashParams,
    ) -> Result<Self> {
        let net = LogicNetwork {
            feature_count,
            class_count,
            layers: layer_chain(feature_count, &parts),
            normalizer,
            parts,
            squash,
            revision: 0,
        };
        net.validate()?;
        Ok(net)
    }

    pub fn validate(&self) -> Result<()> {
        self.squash.validate()?;
        if self.feature_count < 2 || self.class_count < 2 {
            return Err(Error::Config(
                "need at least 2 features and 2 classes".into(),
            ));
        }
        if self.parts.is_empty() {
            return Err(Error::Config("network has no logic parts".into()));
        }
        if self.normalizer.bounds.len() != self.feature_count {
            return Err(Error::Shape {
                expected: self.feature_count,
                actual: self.normalizer.bounds.len(),
            });
        }
        let mut width_in = self.feature_count;
        for (i, part) in self.parts.iter().enumerate() {
            if part.pairings != pairing_table(width_in) {
                return Err(Error::Config(format!(
                    "logic part {i}: pairing table does not match input width {width_in}"
                )));
            }
            if part.alphas.len() != part.pairings.len() {
                return Err(Error::Shape {
                    expected: part.pairings.len(),
                    actual: part.alphas.len(),
                });
            }
            if let Some(a) = part.alphas.iter().find(|a| !(0.0..=1.0).contains(*a)) {
                return Err(Error::Domain(format!(
                    "logic part {i}: alpha {a} outside [0, 1]"
                )));
            }
            let sel = &part.selector;
            if sel.cols != part.pairings.len() || sel.data.len() != sel.rows * sel.cols {
                return Err(Error::Shape {
                    expected: part.pairings.len(),
                    actual: sel.cols,
                });
            }
            if sel.data.iter().any(|w| !w.is_finite()) {
                return Err(Error::Domain(format!(
                    "logic part {i}: non-finite selector weight"
                )));
            }
            width_in = sel.rows;
        }
        if width_in != output_width(self.class_count) {
            return Err(Error::Shape {
                expected: output_width(self.class_count),
                actual: width_in,
            });
        }
        if self.layers != layer_chain(self.feature_count, &self.parts) {
            return Err(Error::Config("layer specs do not match parameters".into()));
        }
        Ok(())
    }

    pub fn logic_parts(&self) -> usize {
        self.parts.len()
    }

    pub fn output_width(&self) -> usize {
        output_width(self.class_count)
    }

    pub fn revision(&self) -> u64 {
        self.revision
    }

    /// Marks the parameters as changed, invalidating earlier forward caches.
    pub fn touch(&mut self) {
        self.revision += 1;
    }

    pub fn set_normalizer(&mut self, normalizer: Normalizer) -> Result<()> {
        if normalizer.bounds.len() != self.feature_count {
            return Err(Error::Shape {
                expected: self.feature_count,
                actual: normalizer.bounds.len(),
            });
        }
        self.normalizer = normalizer;
        self.touch();
        Ok(())
    }

    /// Number of learnable scalars.
    pub fn parameter_count(&self) -> usize {
        self.parts
            .iter()
            .map(|p| p.alphas.len() + p.selector.data.len())
            .sum()
    }

    pub fn forward(&self, raw: &[f64]) -> Result<(Prediction, ForwardCache)> {
        let input = self.normalizer.apply(raw)?;
        Ok(self.forward_normalized(input))
    }

    pub fn predict(&self, raw: &[f64]) -> Result<Prediction> {
        self.forward(raw).map(|(p, _)| p)
    }

    /// Forward pass from inputs already on `[-1, 1]`.
    pub fn forward_normalized(&self, input: Vec<f64>) -> (Prediction, ForwardCache) {
        let p = &self.squash;
        let mut parts = Vec::with_capacity(self.parts.len());
        let mut x = input;
        for (i, part) in self.parts.iter().enumerate() {
            if i > 0 {
                x = tanh_remap_forward(&x);
            }
            let offsets: Vec<f64> = part
                .pairings
                .iter()
                .zip(&part.alphas)
                .map(|(pair, &a)| {
                    let (u, v) = pair.operands(&x);
                    slot_offset(u, v, a, p)
                })
                .collect();
            let activations: Vec<f64> = offsets.iter().map(|&d| signed_from_offset(d, p)).collect();
            let selector_raw = part.selector.mul_vec(&activations);
            let output: Vec<f64> = selector_raw.iter().map(|r| r.clamp(-1.0, 1.0)).collect();
            let next = output.clone();
            parts.push(PartCache {
                input: x,
                offsets,
                activations,
                selector_raw,
                output,
            });
            x = next;
        }
        let prediction = max_classify(&x);
        (
            prediction,
            ForwardCache {
                revision: self.revision,
                parts,
                outputs: x,
            },
        )
    }

    /// Exact gradients of a scalar loss given `dL/d(output)` on the signed
    /// output layer.
    pub fn backward(&self, cache: &ForwardCache, grad_output: &[f64]) -> Result<Gradients> {
        let mut grads = Gradients::zeros_like(self);
        self.backward_accumulate(cache, grad_output, &mut grads)?;
        Ok(grads)
    }

    /// Adds the gradients of one sample to `grads`.
    pub fn backward_accumulate(
        &self,
        cache: &ForwardCache,
        grad_output: &[f64],
        grads: &mut Gradients,
    ) -> Result<()> {
        if cache.revision != self.revision || cache.parts.len() != self.parts.len() {
            return Err(Error::Contract(
                "forward cache was computed with different parameters".into(),
            ));
        }
        if grad_output.len() != cache.outputs.len() {
            return Err(Error::Shape {
                expected: cache.outputs.len(),
                actual: grad_output.len(),
            });
        }
        let p = &self.squash;
        let mut upstream = grad_output.to_vec();
        for (idx, (part, pc)) in self.parts.iter().zip(&cache.parts).enumerate().rev() {
            // clamp
            let g_raw: Vec<f64> = upstream
                .iter()
                .zip(&pc.selector_raw)
                .map(|(g, r)| if (-1.0..=1.0).contains(r) { *g } else { 0.0 })
                .collect();
            let slots = part.pairings.len();
            let sel_grad = &mut grads.selectors[idx];
            let mut g_act = vec![0.0; slots];
            for (r, &gr) in g_raw.iter().enumerate() {
                if gr == 0.0 {
                    continue;
                }
                let w_row = part.selector.row(r);
                for ((gw, ga), (&w, &f)) in sel_grad
                    .row_mut(r)
                    .iter_mut()
                    .zip(g_act.iter_mut())
                    .zip(w_row.iter().zip(&pc.activations))
                {
                    *gw += gr * f;
                    *ga += gr * w;
                }
            }
            let mut g_input = vec![0.0; pc.input.len()];
            let g_alpha = &mut grads.alphas[idx];
            for (j, pair) in part.pairings.iter().enumerate() {
                let ga = g_act[j];
                if ga == 0.0 {
                    continue;
                }
                // f = 2 S - 1, offset = (u + v)/2 + 1 - α - a
                let slope = slope_from_offset(pc.offsets[j], p);
                g_alpha[j] += -2.0 * slope * ga;
                let g_operand = slope * ga;
                match *pair {
                    PairingIndex::Pair(a, b) => {
                        g_input[a] += g_operand;
                        g_input[b] += g_operand;
                    }
                    PairingIndex::WithTrue(a) | PairingIndex::WithFalse(a) => {
                        g_input[a] += g_operand;
                    }
                }
            }
            grads.activations[idx]
                .iter_mut()
                .zip(&g_act)
                .for_each(|(a, g)| *a += g);
            if idx > 0 {
                // input = tanh(previous output)
                upstream = g_input
                    .iter()
                    .zip(&pc.input)
                    .map(|(g, t)| g * (1.0 - t * t))
                    .collect();
            }
        }
        Ok(())
    }

    /// Plain gradient step `θ ← θ - lr·g` followed by projecting every `α`
    /// back onto `[0, 1]`.
    pub fn apply_gradients(&mut self, grads: &Gradients, learning_rate: f64) {
        for (part, (ga, gw)) in self
            .parts
            .iter_mut()
            .zip(grads.alphas.iter().zip(&grads.selectors))
        {
            for (a, g) in part.alphas.iter_mut().zip(ga) {
                *a = (*a - learning_rate * g).clamp(0.0, 1.0);
            }
            for (w, g) in part.selector.data.iter_mut().zip(&gw.data) {
                *w -= learning_rate * g;
            }
        }
        self.touch();
    }

    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(self)?)
    }

    pub fn from_json(text: &str) -> Result<Self> {
        let net: LogicNetwork = serde_json::from_str(text)?;
        net.validate()?;
        Ok(net)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn widths(net: &LogicNetwork) -> Vec<(LayerKind, usize, usize)> {
        net.layers
            .iter()
            .map(|l| (l.kind, l.width_in, l.width_out))
            .collect()
    }

    #[test]
    fn nine_layer_chain_for_four_features() {
        let net = build_network(4, 2, &NetworkConfig::default()).unwrap();
        use LayerKind::*;
        assert_eq!(
            widths(&net),
            vec![
                (Normalization, 4, 4),
                (AllPairings, 4, 14),
                (FuzzyLogic, 14, 14),
                (FeatureSelector, 14, 8),
                (TanhRemap, 8, 8),
                (AllPairings, 8, 44),
                (FuzzyLogic, 44, 44),
                (FeatureSelector, 44, 1),
                (MaxClassifier, 1, 1),
            ]
        );
    }

    #[test]
    fn config_errors() {
        let cfg = NetworkConfig::default();
        assert!(matches!(build_network(1, 2, &cfg), Err(Error::Config(_))));
        assert!(matches!(build_network(3, 1, &cfg), Err(Error::Config(_))));
        let tight = NetworkConfig {
            max_pairings: 10,
            ..NetworkConfig::default()
        };
        assert!(matches!(build_network(4, 2, &tight), Err(Error::Config(_))));
        let no_parts = NetworkConfig {
            logic_parts: 0,
            ..NetworkConfig::default()
        };
        assert!(build_network(4, 2, &no_parts).is_err());
    }

    #[test]
    fn initialization_ranges() {
        let net = build_network(5, 3, &NetworkConfig::default()).unwrap();
        for part in &net.parts {
            assert!(part.alphas.iter().all(|a| (0.25..=0.75).contains(a)));
            let bound = 0.5 / (part.pairings.len() as f64).sqrt();
            assert!(part.selector.data.iter().all(|w| w.abs() <= bound));
        }
        assert_eq!(net.parts[1].selector.rows, 3);
    }

    #[test]
    fn pairing_enumeration() {
        use PairingIndex::*;
        assert_eq!(
            pairing_table(3),
            vec![
                Pair(0, 1),
                Pair(0, 2),
                Pair(1, 2),
                WithTrue(0),
                WithTrue(1),
                WithTrue(2),
                WithFalse(0),
                WithFalse(1),
                WithFalse(2)
            ]
        );
        for n in 2..30 {
            assert_eq!(pairing_table(n).len(), n * (n - 1) / 2 + 2 * n);
        }
        let x = [0.3, -0.2, 0.9];
        let pairs = all_pairings_forward(&x, &pairing_table(3));
        assert_eq!(pairs[4], (-0.2, 1.0));
        assert_eq!(pairs[8], (0.9, -1.0));
    }

    #[test]
    fn normalization() {
        let b = [(0.0, 10.0)];
        assert_eq!(normalize_forward(&[5.0], &b).unwrap(), vec![0.0]);
        assert_eq!(normalize_forward(&[10.0], &b).unwrap(), vec![1.0]);
        assert_eq!(normalize_forward(&[0.0], &b).unwrap(), vec![-1.0]);
        assert_eq!(normalize_forward(&[12.0], &b).unwrap(), vec![1.0]);
        assert_eq!(normalize_forward(&[3.0], &[(3.0, 3.0)]).unwrap(), vec![0.0]);
        assert!(normalize_forward(&[1.0, 2.0], &b).is_err());
        assert!(normalize_forward(&[f64::NAN], &b).is_err());
    }

    #[test]
    fn fuzzy_logic_examples() {
        let p = SquashParams::default();
        let out = fuzzy_logic_forward(&[(0.0, 0.0), (1.0, -1.0), (1.0, 1.0)], &[0.5, 0.5, 1.0], &p);
        assert_eq!(out[0], 0.0);
        assert_eq!(out[1], 0.0);
        assert!((out[2] - 1.0).abs() < 0.02);
    }

    #[test]
    fn selector_examples() {
        let x = [0.4, -0.3, 0.8];
        let pick = Matrix::from_rows(&[vec![0.0, 0.0, 1.0], vec![1.0, 0.0, 0.0]]).unwrap();
        assert_eq!(feature_selector_forward(&x, &pick), vec![0.8, 0.4]);
        let neg = Matrix::from_rows(&[vec![-1.0, 0.0, 0.0]]).unwrap();
        assert_eq!(feature_selector_forward(&x, &neg), vec![-0.4]);
        assert_eq!(
            feature_selector_forward(&x, &Matrix::zeros(2, 3)),
            vec![0.0, 0.0]
        );
        let big = Matrix::from_rows(&[vec![3.0, 0.0, 0.0]]).unwrap();
        assert_eq!(feature_selector_forward(&x, &big), vec![1.0]);
    }

    #[test]
    fn tanh_remap() {
        assert_eq!(tanh_remap_forward(&[0.0]), vec![0.0]);
        assert!((tanh_remap_forward(&[50.0])[0] - 1.0).abs() < 1e-12);
        for x in [0.1, 0.7, 2.5] {
            assert_eq!(tanh_remap_forward(&[-x])[0], -tanh_remap_forward(&[x])[0]);
        }
    }

    #[test]
    fn classification_rule() {
        let p = max_classify(&[0.2]);
        assert_eq!(p.class, 1);
        assert!((p.scores[0] - 0.6).abs() < 1e-12);
        assert_eq!(max_classify(&[0.0]).class, 1);
        assert_eq!(max_classify(&[-0.0]).class, 1);
        assert_eq!(max_classify(&[-1e-12]).class, 0);
        assert_eq!(max_classify(&[0.1, 0.7, 0.7]).class, 1);
    }

    #[test]
    fn stale_cache_is_rejected() {
        let mut net = build_network(3, 2, &NetworkConfig::default()).unwrap();
        let (_, cache) = net.forward(&[0.1, 0.2, 0.3]).unwrap();
        let g = net.backward(&cache, &[1.0]).unwrap();
        net.apply_gradients(&g, 0.01);
        assert!(matches!(
            net.backward(&cache, &[1.0]),
            Err(Error::Contract(_))
        ));
        assert!(net.forward(&[0.1]).is_err());
    }

    #[test]
    fn zero_upstream_gives_zero_gradients() {
        let net = build_network(4, 3, &NetworkConfig::default()).unwrap();
        let (_, cache) = net.forward(&[0.1, -0.5, 0.3, 0.9]).unwrap();
        let g = net.backward(&cache, &[0.0, 0.0, 0.0]).unwrap();
        assert!(g.alphas.iter().flatten().all(|v| *v == 0.0));
        assert!(g.selectors.iter().flat_map(|m| &m.data).all(|v| *v == 0.0));
    }

    #[test]
    fn projection_keeps_alpha_in_range() {
        let mut net = build_network(3, 2, &NetworkConfig::default()).unwrap();
        let mut g = Gradients::zeros_like(&net);
        for (i, a) in g.alphas.iter_mut().flatten().enumerate() {
            *a = if i % 2 == 0 { 1e3 } else { -1e3 };
        }
        net.apply_gradients(&g, 1.0);
        for a in net.parts.iter().flat_map(|p| &p.alphas) {
            assert!(*a == 0.0 || *a == 1.0);
        }
    }

    #[test]
    fn json_round_trip_is_bit_exact() {
        let mut net = build_network(4, 2, &NetworkConfig::default()).unwrap();
        net.set_normalizer(Normalizer {
            bounds: vec![(0.0, 3.3), (-2.0, 7.1), (1.0, 1.0), (0.1, 0.2)],
        })
        .unwrap();
        let back = LogicNetwork::from_json(&net.to_json().unwrap()).unwrap();
        assert_eq!(back, net);
        let x = [1.234, 5.5, 1.0, 0.15];
        assert_eq!(back.predict(&x).unwrap(), net.predict(&x).unwrap());
    }

    #[test]
    fn corrupted_json_is_rejected() {
        let net = build_network(3, 2, &NetworkConfig::default()).unwrap();
        let mut v: serde_json::Value = serde_json::from_str(&net.to_json().unwrap()).unwrap();
        v["parts"][0]["alphas"][0] = serde_json::json!(1.5);
        assert!(LogicNetwork::from_json(&v.to_string()).is_err());
    }
}
