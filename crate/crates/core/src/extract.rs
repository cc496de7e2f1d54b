//! Logic expressions read off a trained network.
//!
//! Every learned `α` is snapped to the nearest named operator, and sparse
//! selector rows are traced back from an output unit into an expression
//! tree. Leaves are indices of the encoded input features, i.e. the
//! operands of the first AllPairings layer.

use std::fmt::Write as _;

use serde::{Deserialize, Serialize};

use crate::data::Dataset;
use crate::error::{Error, Result};
use crate::network::{pairing_table, LogicNetwork, LogicPart, Matrix, Normalizer, PairingIndex};
use crate::ops::{classify_alpha, Alpha, OperatorKind, SquashParams, DEFAULT_ALPHA_TOLERANCE};

/// Rendered negation prefix.
pub const NOT_PREFIX: &str = "1\u{2212}(";

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "node", rename_all = "snake_case")]
pub enum LogicExpr {
    Input {
        index: usize,
    },
    True,
    False,
    /// Output of an empty selector row: neither true nor false.
    Half,
    Binary {
        kind: OperatorKind,
        alpha: f64,
        left: Box<LogicExpr>,
        right: Box<LogicExpr>,
    },
    Not {
        child: Box<LogicExpr>,
    },
    /// Several terms kept by one selector row; their signed sum.
    Aggregate {
        terms: Vec<LogicExpr>,
    },
}

impl LogicExpr {
    pub fn input(index: usize) -> Self {
        LogicExpr::Input { index }
    }

    /// Binary node at the canonical `α` of a named kind.
    pub fn binary(kind: OperatorKind, left: LogicExpr, right: LogicExpr) -> Self {
        LogicExpr::Binary {
            kind,
            alpha: kind.canonical_alpha().unwrap_or(0.5),
            left: Box::new(left),
            right: Box::new(right),
        }
    }

    /// Binary node at an arbitrary `α`, classified with `tolerance`.
    pub fn binary_alpha(alpha: f64, tolerance: f64, left: LogicExpr, right: LogicExpr) -> Self {
        LogicExpr::Binary {
            kind: classify_alpha(Alpha::projected(alpha), tolerance),
            alpha,
            left: Box::new(left),
            right: Box::new(right),
        }
    }

    #[allow(clippy::should_implement_trait)]
    pub fn not(child: LogicExpr) -> Self {
        LogicExpr::Not {
            child: Box::new(child),
        }
    }

    pub fn is_leaf(&self) -> bool {
        matches!(
            self,
            LogicExpr::Input { .. } | LogicExpr::True | LogicExpr::False | LogicExpr::Half
        )
    }

    pub fn is_constant(&self) -> bool {
        self.max_input().is_none()
    }

    /// Largest input index referenced.
    pub fn max_input(&self) -> Option<usize> {
        match self {
            LogicExpr::Input { index } => Some(*index),
            LogicExpr::True | LogicExpr::False | LogicExpr::Half => None,
            LogicExpr::Binary { left, right, .. } => left.max_input().max(right.max_input()),
            LogicExpr::Not { child } => child.max_input(),
            LogicExpr::Aggregate { terms } => terms.iter().filter_map(LogicExpr::max_input).max(),
        }
    }

    pub fn leaf_count(&self) -> usize {
        match self {
            LogicExpr::Binary { left, right, .. } => left.leaf_count() + right.leaf_count(),
            LogicExpr::Not { child } => child.leaf_count(),
            LogicExpr::Aggregate { terms } => terms.iter().map(LogicExpr::leaf_count).sum(),
            _ => 1,
        }
    }

    /// Nesting depth counted in Binary nodes.
    pub fn binary_depth(&self) -> usize {
        match self {
            LogicExpr::Binary { left, right, .. } => {
                1 + left.binary_depth().max(right.binary_depth())
            }
            LogicExpr::Not { child } => child.binary_depth(),
            LogicExpr::Aggregate { terms } => {
                terms.iter().map(LogicExpr::binary_depth).max().unwrap_or(0)
            }
            _ => 0,
        }
    }

    /// Largest number of terms kept by a single Aggregate node.
    pub fn max_terms(&self) -> usize {
        match self {
            LogicExpr::Binary { left, right, .. } => left.max_terms().max(right.max_terms()),
            LogicExpr::Not { child } => child.max_terms(),
            LogicExpr::Aggregate { terms } => terms
                .iter()
                .map(LogicExpr::max_terms)
                .max()
                .unwrap_or(0)
                .max(terms.len()),
            _ => 1,
        }
    }

    /// Named kinds carry their canonical `α`; other kinds keep two decimals,
    /// the precision shown when rendered.
    pub fn canonical(&self) -> LogicExpr {
        match self {
            LogicExpr::Binary {
                kind,
                alpha,
                left,
                right,
            } => LogicExpr::Binary {
                kind: *kind,
                alpha: kind
                    .canonical_alpha()
                    .unwrap_or_else(|| (alpha * 100.0).round() / 100.0),
                left: Box::new(left.canonical()),
                right: Box::new(right.canonical()),
            },
            LogicExpr::Not { child } => LogicExpr::not(child.canonical()),
            LogicExpr::Aggregate { terms } => LogicExpr::Aggregate {
                terms: terms.iter().map(LogicExpr::canonical).collect(),
            },
            leaf => leaf.clone(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct ExtractionConfig {
    pub alpha_tolerance: f64,
    /// Keep selector inputs with `|w| >= ratio · max |w|` of their row.
    pub weight_keep_ratio: f64,
    pub max_terms_per_node: usize,
    pub max_rendered_length: usize,
    pub max_leaves: usize,
}

impl Default for ExtractionConfig {
    fn default() -> Self {
        ExtractionConfig {
            alpha_tolerance: DEFAULT_ALPHA_TOLERANCE,
            weight_keep_ratio: 0.5,
            max_terms_per_node: 4,
            max_rendered_length: 120,
            max_leaves: 4,
        }
    }
}

impl ExtractionConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.weight_keep_ratio > 0.0 && self.weight_keep_ratio <= 1.0) {
            return Err(Error::Config(format!(
                "weight_keep_ratio {} must lie in (0, 1]",
                self.weight_keep_ratio
            )));
        }
        if !(self.alpha_tolerance >= 0.0 && self.alpha_tolerance.is_finite()) {
            return Err(Error::Config("alpha_tolerance must be non-negative".into()));
        }
        Ok(())
    }
}

/// Operator kind of every FuzzyLogic slot, per logic part.
pub fn snap_operators(net: &LogicNetwork, cfg: &ExtractionConfig) -> Vec<Vec<OperatorKind>> {
    net.parts
        .iter()
        .map(|p| {
            p.alphas
                .iter()
                .map(|&a| classify_alpha(Alpha::projected(a), cfg.alpha_tolerance))
                .collect()
        })
        .collect()
}

/// Copy of `net` with every named-kind `α` moved to its canonical value.
pub fn snap_network(net: &LogicNetwork, cfg: &ExtractionConfig) -> LogicNetwork {
    let kinds = snap_operators(net, cfg);
    let mut out = net.clone();
    for (part, kinds) in out.parts.iter_mut().zip(kinds) {
        for (a, k) in part.alphas.iter_mut().zip(kinds) {
            if let Some(c) = k.canonical_alpha() {
                *a = c;
            }
        }
    }
    out.touch();
    out
}

/// Expression tree for one output unit.
pub fn trace_expression(
    net: &LogicNetwork,
    cfg: &ExtractionConfig,
    output_index: usize,
) -> Result<LogicExpr> {
    cfg.validate()?;
    let last = net.parts.len() - 1;
    if output_index >= net.parts[last].output_width() {
        return Err(Error::Contract(format!(
            "output index {output_index} out of range"
        )));
    }
    Ok(trace_row(net, cfg, last, output_index))
}

fn trace_row(net: &LogicNetwork, cfg: &ExtractionConfig, part: usize, row: usize) -> LogicExpr {
    let weights = net.parts[part].selector.row(row);
    let max = weights.iter().fold(0.0_f64, |m, w| m.max(w.abs()));
    if max < 1e-12 {
        return LogicExpr::Half;
    }
    let threshold = cfg.weight_keep_ratio * max;
    let mut terms: Vec<LogicExpr> = weights
        .iter()
        .enumerate()
        .filter(|(_, w)| w.abs() >= threshold)
        .map(|(j, &w)| {
            let slot = trace_slot(net, cfg, part, j);
            if w < 0.0 {
                LogicExpr::not(slot)
            } else {
                slot
            }
        })
        .collect();
    if terms.len() == 1 {
        terms.pop().unwrap_or(LogicExpr::Half)
    } else {
        LogicExpr::Aggregate { terms }
    }
}

fn trace_slot(net: &LogicNetwork, cfg: &ExtractionConfig, part: usize, slot: usize) -> LogicExpr {
    let p = &net.parts[part];
    let operand = |i: usize| {
        if part == 0 {
            LogicExpr::input(i)
        } else {
            trace_row(net, cfg, part - 1, i)
        }
    };
    let (left, right) = match p.pairings[slot] {
        PairingIndex::Pair(i, j) => (operand(i), operand(j)),
        PairingIndex::WithTrue(i) => (operand(i), LogicExpr::True),
        PairingIndex::WithFalse(i) => (operand(i), LogicExpr::False),
    };
    LogicExpr::binary_alpha(p.alphas[slot], cfg.alpha_tolerance, left, right)
}

/// Infix text with leaves rendered as `(index)`.
pub fn render(expr: &LogicExpr) -> String {
    render_with(expr, None)
}

/// Infix text; with `names`, leaves show feature names instead of indices.
pub fn render_with(expr: &LogicExpr, names: Option<&[String]>) -> String {
    let mut out = String::new();
    write_expr(&mut out, expr, names);
    out
}

fn write_expr(out: &mut String, expr: &LogicExpr, names: Option<&[String]>) {
    match expr {
        LogicExpr::Binary {
            kind,
            alpha,
            left,
            right,
        } => {
            write_operand(out, left, names);
            match kind.symbol() {
                Some(s) => {
                    let _ = write!(out, " {s} ");
                }
                None => {
                    let _ = write!(out, " op[{alpha:.2}] ");
                }
            }
            write_operand(out, right, names);
        }
        LogicExpr::Not { child } => {
            out.push_str(NOT_PREFIX);
            write_expr(out, child, names);
            out.push(')');
        }
        LogicExpr::Aggregate { terms } => {
            out.push('[');
            for (i, t) in terms.iter().enumerate() {
                if i > 0 {
                    out.push_str(" uni ");
                }
                write_operand(out, t, names);
            }
            out.push(']');
        }
        leaf => write_operand(out, leaf, names),
    }
}

fn write_operand(out: &mut String, expr: &LogicExpr, names: Option<&[String]>) {
    match expr {
        LogicExpr::Input { index } => match names.and_then(|n| n.get(*index)) {
            Some(name) => {
                let _ = write!(out, "({name})");
            }
            None => {
                let _ = write!(out, "({index})");
            }
        },
        LogicExpr::True => out.push('1'),
        LogicExpr::False => out.push('0'),
        LogicExpr::Half => out.push_str("0.5"),
        LogicExpr::Not { .. } | LogicExpr::Aggregate { .. } => write_expr(out, expr, names),
        LogicExpr::Binary { .. } => {
            out.push('(');
            write_expr(out, expr, names);
            out.push(')');
        }
    }
}

/// Reads text produced by [`render`] back into a tree. Accepts `-` or `−`
/// in the negation prefix.
pub fn parse(text: &str) -> Result<LogicExpr> {
    let mut p = Parser {
        chars: text.chars().collect(),
        pos: 0,
    };
    let expr = p.expr()?;
    if p.pos != p.chars.len() {
        return Err(p.error("trailing input"));
    }
    Ok(expr)
}

struct Parser {
    chars: Vec<char>,
    pos: usize,
}

impl Parser {
    fn error(&self, message: &str) -> Error {
        Error::Parse {
            position: self.pos,
            message: message.into(),
        }
    }

    fn peek(&self) -> Option<char> {
        self.chars.get(self.pos).copied()
    }

    fn starts_with(&self, s: &str) -> bool {
        s.chars()
            .enumerate()
            .all(|(i, c)| self.chars.get(self.pos + i) == Some(&c))
    }

    fn eat(&mut self, s: &str) -> Result<()> {
        if self.starts_with(s) {
            self.pos += s.chars().count();
            Ok(())
        } else {
            Err(self.error(&format!("expected {s:?}")))
        }
    }

    fn expr(&mut self) -> Result<LogicExpr> {
        let left = self.operand()?;
        if self.peek() != Some(' ') {
            return Ok(left);
        }
        self.eat(" ")?;
        let (kind, alpha) = self.operator()?;
        self.eat(" ")?;
        let right = self.operand()?;
        Ok(LogicExpr::Binary {
            kind,
            alpha,
            left: Box::new(left),
            right: Box::new(right),
        })
    }

    fn operator(&mut self) -> Result<(OperatorKind, f64)> {
        for kind in [
            OperatorKind::Disjunction,
            OperatorKind::Conjunction,
            OperatorKind::Aggregative,
        ] {
            let sym = kind.symbol().unwrap_or_default();
            if self.starts_with(sym) {
                self.pos += sym.len();
                return Ok((kind, kind.canonical_alpha().unwrap_or(0.5)));
            }
        }
        self.eat("op[")?;
        let alpha = self.number()?;
        self.eat("]")?;
        Ok((OperatorKind::Other, alpha))
    }

    fn number(&mut self) -> Result<f64> {
        let start = self.pos;
        while matches!(self.peek(), Some(c) if c.is_ascii_digit() || c == '.') {
            self.pos += 1;
        }
        let s: String = self.chars[start..self.pos].iter().collect();
        s.parse().map_err(|_| Error::Parse {
            position: start,
            message: format!("bad number {s:?}"),
        })
    }

    fn operand(&mut self) -> Result<LogicExpr> {
        if self.starts_with("1-(") || self.starts_with(NOT_PREFIX) {
            self.pos += 3;
            let child = self.expr()?;
            self.eat(")")?;
            return Ok(LogicExpr::not(child));
        }
        if self.starts_with("0.5") {
            self.pos += 3;
            return Ok(LogicExpr::Half);
        }
        match self.peek() {
            Some('1') => {
                self.pos += 1;
                Ok(LogicExpr::True)
            }
            Some('0') => {
                self.pos += 1;
                Ok(LogicExpr::False)
            }
            Some('[') => {
                self.pos += 1;
                let mut terms = vec![self.operand()?];
                while self.starts_with(" uni ") {
                    self.pos += 5;
                    terms.push(self.operand()?);
                }
                self.eat("]")?;
                if terms.len() < 2 {
                    return Err(self.error("aggregate needs at least two terms"));
                }
                Ok(LogicExpr::Aggregate { terms })
            }
            Some('(') => {
                self.pos += 1;
                if matches!(self.peek(), Some(c) if c.is_ascii_digit())
                    && self.chars[self.pos..]
                        .iter()
                        .take_while(|c| c.is_ascii_digit())
                        .count()
                        .checked_add(self.pos)
                        .and_then(|end| self.chars.get(end))
                        == Some(&')')
                {
                    let index = self.number()? as usize;
                    self.eat(")")?;
                    return Ok(LogicExpr::input(index));
                }
                let inner = self.expr()?;
                self.eat(")")?;
                Ok(inner)
            }
            _ => Err(self.error("expected an operand")),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum OmitReason {
    Constant,
    TooLong,
    TooManyTerms,
}

impl OmitReason {
    pub fn as_str(self) -> &'static str {
        match self {
            OmitReason::Constant => "constant",
            OmitReason::TooLong => "too long",
            OmitReason::TooManyTerms => "too many terms",
        }
    }
}

impl std::fmt::Display for OmitReason {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.as_str())
    }
}

/// `Some(reason)` when the expression should not be shown.
pub fn should_omit(expr: &LogicExpr, cfg: &ExtractionConfig) -> Option<OmitReason> {
    if expr.is_constant() {
        Some(OmitReason::Constant)
    } else if expr.max_terms() > cfg.max_terms_per_node {
        Some(OmitReason::TooManyTerms)
    } else if render(expr).chars().count() > cfg.max_rendered_length
        || expr.leaf_count() > cfg.max_leaves
    {
        Some(OmitReason::TooLong)
    } else {
        None
    }
}

/// Crisp value of `expr` on the signed interval.
///
/// A Binary node computes `[x + y - α]` in `[0, 1]` terms, i.e.
/// `clamp(l + r + 1 - 2α, -1, 1)` on signed values, using the canonical
/// `α` of its kind. With `remap`, composite operands pass through `tanh`
/// first, as hidden units do between logic parts.
pub fn evaluate_signed(expr: &LogicExpr, x: &[f64], remap: bool) -> f64 {
    match expr {
        LogicExpr::Input { index } => x[*index],
        LogicExpr::True => 1.0,
        LogicExpr::False => -1.0,
        LogicExpr::Half => 0.0,
        LogicExpr::Binary {
            kind,
            alpha,
            left,
            right,
        } => {
            let a = kind.canonical_alpha().unwrap_or(*alpha);
            let operand = |e: &LogicExpr| {
                let v = evaluate_signed(e, x, remap);
                if remap && !e.is_leaf() {
                    v.tanh()
                } else {
                    v
                }
            };
            let (l, r) = (operand(left), operand(right));
            (2.0 * (0.5 * (l + r) + 0.5 - a)).clamp(-1.0, 1.0)
        }
        LogicExpr::Not { child } => -evaluate_signed(child, x, remap),
        LogicExpr::Aggregate { terms } => terms
            .iter()
            .map(|t| evaluate_signed(t, x, remap))
            .sum::<f64>()
            .clamp(-1.0, 1.0),
    }
}

/// Share of rows where the thresholded crisp expression agrees with the
/// network. For a single-output network the expression's decision is
/// compared with the predicted class; otherwise with "predicted class is
/// `output_index`".
pub fn faithfulness(
    net: &LogicNetwork,
    expr: &LogicExpr,
    data: &Dataset,
    output_index: usize,
) -> Result<f64> {
    if data.is_empty() {
        return Err(Error::Contract("faithfulness on an empty split".into()));
    }
    if let Some(m) = expr.max_input() {
        if m >= net.feature_count {
            return Err(Error::Shape {
                expected: net.feature_count,
                actual: m + 1,
            });
        }
    }
    let single = net.output_width() == 1;
    let mut agree = 0usize;
    for row in &data.features {
        let x = net.normalizer.apply(row)?;
        let (pred, _) = net.forward_normalized(x.clone());
        let net_yes = if single {
            pred.class == 1
        } else {
            pred.class == output_index
        };
        let expr_yes = evaluate_signed(expr, &x, true) >= 0.0;
        agree += usize::from(net_yes == expr_yes);
    }
    Ok(agree as f64 / data.len() as f64)
}

/// One extracted expression with its verdict.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Extraction {
    pub output_index: usize,
    pub expression: LogicExpr,
    pub text: String,
    pub omitted: Option<OmitReason>,
    pub faithfulness: Option<f64>,
}

/// Traces every output unit; faithfulness is filled in when `data` is given.
pub fn extract_all(
    net: &LogicNetwork,
    cfg: &ExtractionConfig,
    data: Option<&Dataset>,
) -> Result<Vec<Extraction>> {
    (0..net.output_width())
        .map(|o| {
            let expression = trace_expression(net, cfg, o)?;
            let faithfulness = data
                .map(|d| faithfulness(net, &expression, d, o))
                .transpose()?;
            Ok(Extraction {
                output_index: o,
                text: render(&expression),
                omitted: should_omit(&expression, cfg),
                expression,
                faithfulness,
            })
        })
        .collect()
}

/// Builds a single-output network that computes `tree` with one-hot
/// selectors.
///
/// Depth-1 trees need a slot `Input(i) ⊛ Input(j)` with `i < j`, or
/// `Input(i) ⊛ 1` / `Input(i) ⊛ 0`. Depth-2 trees combine two depth-1
/// subtrees, or one subtree and a constant on the right, and use two logic
/// parts. Subtrees sharing a slot must agree on its operator. Inputs are
/// expected on `[-1, 1]`.
pub fn plant(tree: &LogicExpr, feature_count: usize, squash: SquashParams) -> Result<LogicNetwork> {
    let unsupported = || Error::Contract("tree shape cannot be planted".into());
    let LogicExpr::Binary { left, right, .. } = tree else {
        return Err(unsupported());
    };
    let parts = if tree.binary_depth() == 1 {
        vec![planted_part(feature_count, &[tree], 1)?]
    } else {
        let mut hidden: Vec<&LogicExpr> = vec![left];
        let top_right = match right.as_ref() {
            LogicExpr::True | LogicExpr::False => right.as_ref().clone(),
            sub if sub.binary_depth() == 1 => {
                hidden.push(sub);
                LogicExpr::input(1)
            }
            _ => return Err(unsupported()),
        };
        if left.binary_depth() != 1 {
            return Err(unsupported());
        }
        let first = planted_part(feature_count, &hidden, 2)?;
        let top = match tree {
            LogicExpr::Binary { kind, alpha, .. } => LogicExpr::Binary {
                kind: *kind,
                alpha: *alpha,
                left: Box::new(LogicExpr::input(0)),
                right: Box::new(top_right),
            },
            _ => return Err(unsupported()),
        };
        let second = planted_part(2, &[&top], 1)?;
        vec![first, second]
    };
    LogicNetwork::from_parts(
        feature_count,
        2,
        Normalizer::unit(feature_count),
        parts,
        squash,
    )
}

/// One logic part whose selector row `r` picks the slot computing
/// `rows[r]`. Remaining rows stay zero; other slots sit at `α = 0.5`.
fn planted_part(width_in: usize, rows: &[&LogicExpr], width_out: usize) -> Result<LogicPart> {
    let unsupported = || Error::Contract("tree shape cannot be planted".into());
    let pairings = pairing_table(width_in);
    let mut alphas = vec![0.5; pairings.len()];
    let mut used = vec![false; pairings.len()];
    let mut selector = Matrix::zeros(width_out, pairings.len());
    for (r, expr) in rows.iter().enumerate() {
        let LogicExpr::Binary {
            alpha, left, right, ..
        } = expr
        else {
            return Err(unsupported());
        };
        let wanted = match (left.as_ref(), right.as_ref()) {
            (LogicExpr::Input { index: i }, LogicExpr::Input { index: j }) if i < j => {
                PairingIndex::Pair(*i, *j)
            }
            (LogicExpr::Input { index: i }, LogicExpr::True) => PairingIndex::WithTrue(*i),
            (LogicExpr::Input { index: i }, LogicExpr::False) => PairingIndex::WithFalse(*i),
            _ => return Err(unsupported()),
        };
        let slot = pairings
            .iter()
            .position(|p| *p == wanted)
            .ok_or_else(unsupported)?;
        if !(0.0..=1.0).contains(alpha) {
            return Err(Error::Domain(format!("alpha {alpha} outside [0, 1]")));
        }
        if used[slot] && alphas[slot] != *alpha {
            return Err(Error::Contract(
                "two subtrees need the same slot with different operators".into(),
            ));
        }
        used[slot] = true;
        alphas[slot] = *alpha;
        selector.set(r, slot, 1.0);
    }
    Ok(LogicPart {
        pairings,
        alphas,
        selector,
    })
}
