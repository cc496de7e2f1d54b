//! Nilpotent fuzzy operators.
//!
//! Everything here works on the unit interval. The crisp operators are built
//! from the cutting function `[x]` (a clamp to `[0, 1]`); the smooth ones
//! replace it by the squashing function `S`, a difference of two softplus
//! terms that converges to `[x]` as the smoothness `beta` grows.
//!
//! The two-input operator `x ⊛α y = [x + y - α]` is a disjunction at
//! `α = 0`, the self-dual aggregative operator (`uni`) at `α = 0.5` and a
//! conjunction at `α = 1`. Its smooth form `S(x + y - α)` is the learnable
//! activation used by the network.

use std::fmt;
use std::sync::Arc;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// A truth value in `[0, 1]`.
#[derive(Debug, Clone, Copy, PartialEq, PartialOrd, Serialize, Deserialize)]
#[serde(try_from = "f64", into = "f64")]
pub struct UnitValue(f64);

impl UnitValue {
    pub const ZERO: UnitValue = UnitValue(0.0);
    pub const ONE: UnitValue = UnitValue(1.0);

    pub fn new(value: f64) -> Result<Self> {
        if (0.0..=1.0).contains(&value) {
            Ok(UnitValue(value))
        } else {
            Err(Error::Domain(format!("{value} is not in [0, 1]")))
        }
    }

    #[inline]
    pub fn get(self) -> f64 {
        self.0
    }

    /// Standard negation `1 - x`.
    #[inline]
    pub fn not(self) -> UnitValue {
        UnitValue(1.0 - self.0)
    }
}

impl TryFrom<f64> for UnitValue {
    type Error = Error;
    fn try_from(value: f64) -> Result<Self> {
        UnitValue::new(value)
    }
}

impl From<UnitValue> for f64 {
    fn from(v: UnitValue) -> f64 {
        v.0
    }
}

/// Compensation level of `x ⊛α y`: 0 is full compensation (disjunction),
/// 1 is none (conjunction), 1/2 the aggregative operator.
#[derive(Debug, Clone, Copy, PartialEq, PartialOrd, Serialize, Deserialize)]
#[serde(try_from = "f64", into = "f64")]
pub struct Alpha(f64);

impl Alpha {
    pub const DISJUNCTION: Alpha = Alpha(0.0);
    pub const AGGREGATIVE: Alpha = Alpha(0.5);
    pub const CONJUNCTION: Alpha = Alpha(1.0);

    pub fn new(value: f64) -> Result<Self> {
        if (0.0..=1.0).contains(&value) {
            Ok(Alpha(value))
        } else {
            Err(Error::Domain(format!("alpha {value} is not in [0, 1]")))
        }
    }

    /// Projects any finite real onto `[0, 1]`.
    pub fn projected(value: f64) -> Self {
        Alpha(value.clamp(0.0, 1.0))
    }

    #[inline]
    pub fn get(self) -> f64 {
        self.0
    }
}

impl TryFrom<f64> for Alpha {
    type Error = Error;
    fn try_from(value: f64) -> Result<Self> {
        Alpha::new(value)
    }
}

impl From<Alpha> for f64 {
    fn from(a: Alpha) -> f64 {
        a.0
    }
}

/// Parameters `(a, λ, β)` of the squashing function.
///
/// `center` is the midpoint of the ramp, `ramp_width` its length and
/// `smoothness` controls how sharp the two corners are.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SquashParams {
    pub center: f64,
    pub ramp_width: f64,
    pub smoothness: f64,
}

impl Default for SquashParams {
    /// `a = 1/2`, `λ = 1`, `β = 80`: a ramp from 0 to 1 matching `[x]`.
    fn default() -> Self {
        SquashParams {
            center: 0.5,
            ramp_width: 1.0,
            smoothness: 80.0,
        }
    }
}

impl SquashParams {
    pub fn new(center: f64, ramp_width: f64, smoothness: f64) -> Result<Self> {
        let p = SquashParams {
            center,
            ramp_width,
            smoothness,
        };
        p.validate()?;
        Ok(p)
    }

    /// Default ramp with a different `β`.
    pub fn with_smoothness(smoothness: f64) -> Result<Self> {
        SquashParams::new(0.5, 1.0, smoothness)
    }

    pub fn validate(&self) -> Result<()> {
        if !self.center.is_finite() {
            return Err(Error::Domain(format!(
                "center {} is not finite",
                self.center
            )));
        }
        if !(self.ramp_width.is_finite() && self.ramp_width > 0.0) {
            return Err(Error::Domain(format!(
                "ramp width {} must be positive",
                self.ramp_width
            )));
        }
        if !(self.smoothness.is_finite() && self.smoothness > 0.0) {
            return Err(Error::Domain(format!(
                "smoothness {} must be positive",
                self.smoothness
            )));
        }
        Ok(())
    }

    /// Left half of the squashing function, `S(center + d)` for `d <= 0`.
    ///
    /// Both softplus terms have non-positive arguments here except for the
    /// first near the center, so no cancellation between large numbers occurs.
    #[inline]
    fn left_branch(&self, d: f64) -> f64 {
        let half = 0.5 * self.ramp_width;
        let b = self.smoothness;
        (softplus(b * (d + half)) - softplus(b * (d - half))) / (self.ramp_width * b)
    }

    #[inline]
    fn left_slope(&self, d: f64) -> f64 {
        let half = 0.5 * self.ramp_width;
        let b = self.smoothness;
        (logistic(b * (d + half)) - logistic(b * (d - half))) / self.ramp_width
    }
}

/// `ln(1 + e^t)` without overflow.
#[inline]
pub(crate) fn softplus(t: f64) -> f64 {
    t.max(0.0) + (-t.abs()).exp().ln_1p()
}

/// Standard logistic `1 / (1 + e^{-t})` without overflow.
#[inline]
pub(crate) fn logistic(t: f64) -> f64 {
    if t >= 0.0 {
        1.0 / (1.0 + (-t).exp())
    } else {
        let e = t.exp();
        e / (1.0 + e)
    }
}

fn check_finite(x: f64) -> Result<()> {
    if x.is_finite() {
        Ok(())
    } else {
        Err(Error::Domain(format!("non-finite input {x}")))
    }
}

/// The cutting function `[x]`: 0 below 0, `x` on `[0, 1]`, 1 above 1.
pub fn cut(x: f64) -> Result<UnitValue> {
    check_finite(x)?;
    Ok(UnitValue(clamp_unit(x)))
}

#[inline]
pub(crate) fn clamp_unit(x: f64) -> f64 {
    x.clamp(0.0, 1.0)
}

/// The squashing function
/// `S(x) = 1/(λβ) · ln[(1 + e^{β(x-(a-λ/2))}) / (1 + e^{β(x-(a+λ/2))})]`.
///
/// Evaluated on the left of the center directly and on the right through
/// the symmetry `S(a + d) = 1 - S(a - d)`, which keeps every intermediate
/// small and makes the result exactly symmetric.
pub fn squash(x: f64, p: &SquashParams) -> Result<UnitValue> {
    check_finite(x)?;
    p.validate()?;
    Ok(UnitValue(squash_unchecked(x, p)))
}

#[inline]
pub(crate) fn squash_unchecked(x: f64, p: &SquashParams) -> f64 {
    let d = x - p.center;
    if d <= 0.0 {
        p.left_branch(d)
    } else {
        1.0 - p.left_branch(-d)
    }
}

/// `2·S(x) - 1`, the squashing function read on the signed interval
/// `[-1, 1]`. It is odd about the center: `f(a + d) = -f(a - d)` holds
/// bit for bit, so symmetric inputs land exactly on 0.
#[inline]
pub fn squash_signed(x: f64, p: &SquashParams) -> f64 {
    signed_from_offset(x - p.center, p)
}

/// Signed squash of an input already expressed as an offset from the center.
#[inline]
pub(crate) fn signed_from_offset(d: f64, p: &SquashParams) -> f64 {
    let m = 1.0 - 2.0 * p.left_branch(-d.abs());
    if d < 0.0 {
        -m
    } else {
        m
    }
}

/// Derivative `dS/dx = (1/λ)·[σ(β(x-(a-λ/2))) - σ(β(x-(a+λ/2)))]`.
pub fn squash_grad(x: f64, p: &SquashParams) -> Result<f64> {
    check_finite(x)?;
    p.validate()?;
    Ok(squash_grad_unchecked(x, p))
}

#[inline]
pub(crate) fn squash_grad_unchecked(x: f64, p: &SquashParams) -> f64 {
    slope_from_offset(x - p.center, p)
}

#[inline]
pub(crate) fn slope_from_offset(d: f64, p: &SquashParams) -> f64 {
    // S' is even about the center.
    p.left_slope(-d.abs())
}

/// Generator pair `(f, f⁻¹)` of the weighted general operator.
#[derive(Clone)]
pub struct Generator {
    forward: Arc<dyn Fn(f64) -> f64 + Send + Sync>,
    inverse: Arc<dyn Fn(f64) -> f64 + Send + Sync>,
}

impl Generator {
    pub fn identity() -> Self {
        Generator {
            forward: Arc::new(|t| t),
            inverse: Arc::new(|t| t),
        }
    }

    /// Builds a generator from a monotonically increasing bijection of
    /// `[0, 1]` and its inverse. Both properties are checked on a grid.
    pub fn new<F, G>(forward: F, inverse: G) -> Result<Self>
    where
        F: Fn(f64) -> f64 + Send + Sync + 'static,
        G: Fn(f64) -> f64 + Send + Sync + 'static,
    {
        const STEPS: usize = 1000;
        let mut prev = f64::NEG_INFINITY;
        for i in 0..=STEPS {
            let t = i as f64 / STEPS as f64;
            let ft = forward(t);
            if !(ft >= prev) {
                return Err(Error::Domain(format!(
                    "generator is not increasing near t = {t}"
                )));
            }
            prev = ft;
            let back = forward(inverse(t));
            if (back - t).abs() > 1e-9 {
                return Err(Error::Domain(format!(
                    "f(f_inverse({t})) = {back}, expected {t}"
                )));
            }
        }
        Ok(Generator {
            forward: Arc::new(forward),
            inverse: Arc::new(inverse),
        })
    }

    #[inline]
    pub fn apply(&self, t: f64) -> f64 {
        (self.forward)(t)
    }

    #[inline]
    pub fn invert(&self, t: f64) -> f64 {
        (self.inverse)(t)
    }
}

impl Default for Generator {
    fn default() -> Self {
        Generator::identity()
    }
}

impl fmt::Debug for Generator {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str("Generator(..)")
    }
}

/// Parameters of the weighted general operator
/// `a(x) = f⁻¹([Σ wᵢ(f(xᵢ) - f(ν)) + f(ν)])`.
///
/// Weights only need to be nonzero: a single weight of -1 with `ν = 1/2`
/// yields the standard negation.
#[derive(Debug, Clone)]
pub struct GeneralOpSpec {
    weights: Vec<f64>,
    neutral: f64,
    generator: Generator,
}

impl GeneralOpSpec {
    pub fn new(weights: Vec<f64>, neutral: f64) -> Result<Self> {
        Self::with_generator(weights, neutral, Generator::identity())
    }

    pub fn with_generator(weights: Vec<f64>, neutral: f64, generator: Generator) -> Result<Self> {
        if weights.is_empty() {
            return Err(Error::Domain("at least one weight is required".into()));
        }
        if let Some(w) = weights.iter().find(|w| !w.is_finite() || **w == 0.0) {
            return Err(Error::Domain(format!(
                "weight {w} must be finite and nonzero"
            )));
        }
        if !(0.0..=1.0).contains(&neutral) {
            return Err(Error::Domain(format!(
                "neutral level {neutral} is not in [0, 1]"
            )));
        }
        Ok(GeneralOpSpec {
            weights,
            neutral,
            generator,
        })
    }

    pub fn weights(&self) -> &[f64] {
        &self.weights
    }

    pub fn neutral(&self) -> f64 {
        self.neutral
    }

    pub fn generator(&self) -> &Generator {
        &self.generator
    }
}

/// The weighted general operator.
pub fn general_op(xs: &[UnitValue], spec: &GeneralOpSpec) -> Result<UnitValue> {
    if xs.is_empty() || xs.len() != spec.weights.len() {
        return Err(Error::Contract(format!(
            "{} inputs for {} weights",
            xs.len(),
            spec.weights.len()
        )));
    }
    let g = &spec.generator;
    let f_nu = g.apply(spec.neutral);
    let sum: f64 = xs
        .iter()
        .zip(&spec.weights)
        .map(|(x, w)| w * (g.apply(x.get()) - f_nu))
        .sum();
    let inner = clamp_unit(sum + f_nu);
    Ok(UnitValue(clamp_unit(g.invert(inner))))
}

/// Crisp two-input operator `x ⊛α y = [x + y - α]`.
#[inline]
pub fn binary_op_crisp(x: UnitValue, y: UnitValue, alpha: Alpha) -> UnitValue {
    UnitValue(clamp_unit(crisp_sum(x.0, y.0, alpha.0)))
}

/// `x + y - α`, subtracting `α` from the operand nearer to it first so that
/// neutral elements are exact; the operand order is symmetric in `x, y`.
#[inline]
fn crisp_sum(x: f64, y: f64, alpha: f64) -> f64 {
    let (dx, dy) = ((x - alpha).abs(), (y - alpha).abs());
    let (p, q) = if dx < dy || (dx == dy && x <= y) {
        (x, y)
    } else {
        (y, x)
    };
    (p - alpha) + q
}

/// Smooth two-input operator `S(x + y - α)`.
#[inline]
pub fn binary_op_smooth(x: UnitValue, y: UnitValue, alpha: Alpha, p: &SquashParams) -> UnitValue {
    UnitValue(squash_unchecked(x.0 + y.0 - alpha.0, p))
}

/// Partial derivatives of [`binary_op_smooth`] with respect to `x`, `y`
/// and `α`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BinaryGrads {
    pub dx: f64,
    pub dy: f64,
    pub dalpha: f64,
}

pub fn binary_op_smooth_grads(
    x: UnitValue,
    y: UnitValue,
    alpha: Alpha,
    p: &SquashParams,
) -> BinaryGrads {
    let s = squash_grad_unchecked(x.0 + y.0 - alpha.0, p);
    BinaryGrads {
        dx: s,
        dy: s,
        dalpha: -s,
    }
}

/// Preference operator `p_w(x, y) = [w(y - x) + 1/2]`: above 1/2 when `y`
/// is preferred to `x`, exactly 1/2 when they are equal.
pub fn preference_op(x: UnitValue, y: UnitValue, w: f64) -> Result<UnitValue> {
    check_finite(w)?;
    Ok(UnitValue(clamp_unit(w * (y.0 - x.0) + 0.5)))
}

/// Named special cases of `x ⊛α y`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum OperatorKind {
    Disjunction,
    Aggregative,
    Conjunction,
    Other,
}

impl OperatorKind {
    /// Canonical compensation level, `None` for [`OperatorKind::Other`].
    pub fn canonical_alpha(self) -> Option<f64> {
        match self {
            OperatorKind::Disjunction => Some(0.0),
            OperatorKind::Aggregative => Some(0.5),
            OperatorKind::Conjunction => Some(1.0),
            OperatorKind::Other => None,
        }
    }

    /// Short infix name; `None` for [`OperatorKind::Other`].
    pub fn symbol(self) -> Option<&'static str> {
        match self {
            OperatorKind::Disjunction => Some("or"),
            OperatorKind::Aggregative => Some("uni"),
            OperatorKind::Conjunction => Some("and"),
            OperatorKind::Other => None,
        }
    }
}

impl fmt::Display for OperatorKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.symbol().unwrap_or("op"))
    }
}

pub const DEFAULT_ALPHA_TOLERANCE: f64 = 0.15;

/// Snaps a compensation level to the nearest named operator within
/// `tolerance`; equidistant levels resolve to [`OperatorKind::Aggregative`].
pub fn classify_alpha(alpha: Alpha, tolerance: f64) -> OperatorKind {
    let a = alpha.0;
    let candidates = [
        (OperatorKind::Aggregative, (a - 0.5).abs()),
        (OperatorKind::Disjunction, a.abs()),
        (OperatorKind::Conjunction, (a - 1.0).abs()),
    ];
    // Aggregative is listed first so it wins exact ties.
    let mut best = candidates[0];
    for c in &candidates[1..] {
        if c.1 < best.1 {
            best = *c;
        }
    }
    if best.1 <= tolerance {
        best.0
    } else {
        OperatorKind::Other
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn u(x: f64) -> UnitValue {
        UnitValue::new(x).unwrap()
    }

    fn a(x: f64) -> Alpha {
        Alpha::new(x).unwrap()
    }

    #[test]
    fn cut_branches() {
        assert_eq!(cut(-0.5).unwrap().get(), 0.0);
        assert_eq!(cut(0.3).unwrap().get(), 0.3);
        assert_eq!(cut(1.7).unwrap().get(), 1.0);
        assert!(cut(f64::NAN).is_err());
        assert!(cut(f64::INFINITY).is_err());
    }

    #[test]
    fn squash_reference_values() {
        let p = SquashParams::default();
        assert_eq!(squash(0.5, &p).unwrap().get(), 0.5);
        let at_zero = squash(0.0, &p).unwrap().get();
        assert!(
            (at_zero - 0.008_664_339_756_999_316).abs() < 1e-15,
            "{at_zero}"
        );
        let at_two = squash(2.0, &p).unwrap().get();
        assert!((at_two - 1.0).abs() < 1e-12);
        // extreme arguments stay finite and bounded
        assert_eq!(squash(1e12, &p).unwrap().get(), 1.0);
        assert_eq!(squash(-1e12, &p).unwrap().get(), 0.0);
    }

    #[test]
    fn squash_rejects_bad_input() {
        let p = SquashParams::default();
        assert!(squash(f64::NAN, &p).is_err());
        let bad = SquashParams {
            center: 0.5,
            ramp_width: 0.0,
            smoothness: 80.0,
        };
        assert!(squash(0.1, &bad).is_err());
        assert!(SquashParams::new(0.5, 1.0, -1.0).is_err());
        assert!(squash_grad(0.1, &bad).is_err());
    }

    #[test]
    fn squash_grad_matches_central_difference_at_center() {
        let p = SquashParams::default();
        let h = 1e-5;
        let fd =
            (squash(0.5 + h, &p).unwrap().get() - squash(0.5 - h, &p).unwrap().get()) / (2.0 * h);
        let g = squash_grad(0.5, &p).unwrap();
        assert!(((g - fd) / fd).abs() < 1e-6, "{g} vs {fd}");
        assert!(squash_grad(-10.0, &p).unwrap().abs() < 1e-12);
    }

    #[test]
    fn squash_grad_is_symmetric() {
        let p = SquashParams::default();
        // dyadic offsets keep 0.5 ± d exact
        for i in 0..=256 {
            let d = i as f64 / 256.0;
            assert_eq!(
                squash_grad(0.5 + d, &p).unwrap(),
                squash_grad(0.5 - d, &p).unwrap(),
                "d = {d}"
            );
        }
    }

    #[test]
    fn signed_squash_is_odd() {
        let p = SquashParams::default();
        for i in -256..=256 {
            let d = i as f64 / 256.0;
            assert_eq!(squash_signed(0.5 + d, &p), -squash_signed(0.5 - d, &p));
            let two_s = 2.0 * squash(0.5 + d, &p).unwrap().get() - 1.0;
            assert!((squash_signed(0.5 + d, &p) - two_s).abs() < 1e-15);
        }
    }

    #[test]
    fn general_op_examples() {
        let conj = GeneralOpSpec::new(vec![1.0, 1.0], 1.0).unwrap();
        let r = general_op(&[u(0.9), u(0.8)], &conj).unwrap().get();
        assert!((r - 0.7).abs() < 1e-12);

        let disj = GeneralOpSpec::new(vec![1.0, 1.0], 0.0).unwrap();
        let r = general_op(&[u(0.3), u(0.4)], &disj).unwrap().get();
        assert!((r - 0.7).abs() < 1e-12);

        let neg = GeneralOpSpec::new(vec![-1.0], 0.5).unwrap();
        for i in 0..=20 {
            let x = i as f64 / 20.0;
            let r = general_op(&[u(x)], &neg).unwrap().get();
            assert!((r - (1.0 - x)).abs() < 1e-12);
        }
    }

    #[test]
    fn general_op_errors() {
        let spec = GeneralOpSpec::new(vec![1.0, 1.0], 0.5).unwrap();
        assert!(matches!(
            general_op(&[u(0.1)], &spec),
            Err(Error::Contract(_))
        ));
        assert!(GeneralOpSpec::new(vec![1.0, 0.0], 0.5).is_err());
        assert!(GeneralOpSpec::new(vec![], 0.5).is_err());
        assert!(GeneralOpSpec::new(vec![1.0], 1.5).is_err());
    }

    #[test]
    fn general_op_with_power_generator() {
        let g = Generator::new(|t: f64| t * t, |t: f64| t.sqrt()).unwrap();
        let spec = GeneralOpSpec::with_generator(vec![1.0, 1.0], 0.0, g).unwrap();
        let r = general_op(&[u(0.3), u(0.4)], &spec).unwrap().get();
        assert!((r - 0.5).abs() < 1e-12);
        assert!(Generator::new(|t: f64| 1.0 - t, |t: f64| 1.0 - t).is_err());
    }

    #[test]
    fn crisp_binary_examples() {
        assert!((binary_op_crisp(u(0.6), u(0.7), a(1.0)).get() - 0.3).abs() < 1e-12);
        assert_eq!(binary_op_crisp(u(1.0), u(0.0), a(0.5)).get(), 0.5);
        assert_eq!(binary_op_crisp(u(0.2), u(0.1), a(0.5)).get(), 0.0);
    }

    #[test]
    fn smooth_binary_examples() {
        let p = SquashParams::default();
        assert_eq!(binary_op_smooth(u(0.5), u(0.5), a(0.5), &p).get(), 0.5);
        let conj = binary_op_smooth(u(0.6), u(0.7), a(1.0), &p).get();
        assert!((conj - 0.3).abs() < 0.01);
        let disj = binary_op_smooth(u(0.3), u(0.4), a(0.0), &p).get();
        assert!((disj - 0.7).abs() < 0.01);
    }

    #[test]
    fn smooth_binary_grad_structure() {
        let p = SquashParams::default();
        let g = binary_op_smooth_grads(u(0.5), u(0.5), a(0.5), &p);
        assert_eq!(g.dx, -g.dalpha);
        assert_eq!(g.dx, g.dy);
        let g = binary_op_smooth_grads(u(0.9), u(0.9), a(0.0), &p);
        assert!(g.dx.abs() < 1e-6 && g.dy.abs() < 1e-6 && g.dalpha.abs() < 1e-6);
    }

    #[test]
    fn preference_examples() {
        assert!((preference_op(u(0.2), u(0.6), 1.0).unwrap().get() - 0.9).abs() < 1e-12);
        assert_eq!(preference_op(u(0.0), u(1.0), 1.0).unwrap().get(), 1.0);
        for w in [-3.0, 0.5, 7.0] {
            assert_eq!(preference_op(u(0.37), u(0.37), w).unwrap().get(), 0.5);
        }
        assert!(preference_op(u(0.1), u(0.2), f64::NAN).is_err());
    }

    #[test]
    fn classify_alpha_bands() {
        assert_eq!(classify_alpha(a(0.0), 0.1), OperatorKind::Disjunction);
        assert_eq!(classify_alpha(a(0.52), 0.1), OperatorKind::Aggregative);
        assert_eq!(classify_alpha(a(0.3), 0.1), OperatorKind::Other);
        assert_eq!(classify_alpha(a(0.97), 0.15), OperatorKind::Conjunction);
        assert_eq!(classify_alpha(a(0.49), 0.15), OperatorKind::Aggregative);
        // overlapping bands: nearest wins, midpoints go to Aggregative
        assert_eq!(classify_alpha(a(0.25), 0.3), OperatorKind::Aggregative);
        assert_eq!(classify_alpha(a(0.75), 0.3), OperatorKind::Aggregative);
        assert_eq!(classify_alpha(a(0.2), 0.3), OperatorKind::Disjunction);
        assert_eq!(classify_alpha(a(0.8), 0.3), OperatorKind::Conjunction);
    }

    #[test]
    fn newtypes_validate() {
        assert!(UnitValue::new(1.2).is_err());
        assert!(UnitValue::new(f64::NAN).is_err());
        assert!(Alpha::new(-0.1).is_err());
        assert_eq!(Alpha::projected(1.7).get(), 1.0);
        assert_eq!(Alpha::projected(-0.2).get(), 0.0);
        let v: std::result::Result<UnitValue, _> = serde_json::from_str("1.5");
        assert!(v.is_err());
    }
}
