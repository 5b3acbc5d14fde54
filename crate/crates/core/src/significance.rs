//! Discovery-significance measures and their convex-dual machinery.
//!
//! Every measure here has the shape `h(B · f(s / B))` where `s` is the
//! selected signal weight, `B = b + b_reg` the (regularized) selected
//! background weight, `f` a closed proper convex generator on `[0, ∞)` and
//! `h` an increasing outer transform. Writing `f` through its convex
//! conjugate turns `B · f(s / B)` into an infimum over a scalar dual weight
//! `u` of a quantity that is *linear* in the weighted counts. That linear
//! form is the weighted classification error the cascade minimizes.

use std::fmt;
use std::str::FromStr;
use std::sync::Arc;

use crate::data::{Label, WeightedDataset};
use crate::error::{Error, Result};

/// Smallest dual weight handed to a learner; keeps the signal cost positive.
pub const U_MIN: f64 = 1e-6;
/// Largest dual weight; caps `ln(s/B + 1)` when the background vanishes.
pub const U_MAX: f64 = 20.0;

const COUNT_TOLERANCE: f64 = 1e-9;

/// Weighted selection counts for one classifier on one dataset.
///
/// `b` holds only the false-positive weight; the additive regularizer is
/// carried separately in `b_reg` and folded in by [`background`](Self::background).
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ConfusionSummary {
    pub s: f64,
    pub b: f64,
    pub p: f64,
    pub s_tilde: f64,
    pub n: f64,
    pub b_reg: f64,
}

impl ConfusionSummary {
    pub fn new(s: f64, b: f64, p: f64, b_reg: f64) -> Result<Self> {
        let summary = ConfusionSummary {
            s,
            b,
            p,
            s_tilde: p - s,
            n: s + b,
            b_reg,
        };
        summary.validate()?;
        Ok(summary)
    }

    /// Effective background `b + b_reg` used by every formula.
    pub fn background(&self) -> f64 {
        self.b + self.b_reg
    }

    pub fn validate(&self) -> Result<()> {
        let finite = [self.s, self.b, self.p, self.s_tilde, self.n, self.b_reg]
            .iter()
            .all(|v| v.is_finite());
        if !finite {
            return Err(Error::Input(format!("non-finite count in {self:?}")));
        }
        if self.s < 0.0 || self.b < 0.0 || self.p < 0.0 || self.b_reg < 0.0 {
            return Err(Error::Input(format!("negative count in {self:?}")));
        }
        let scale = self.p.abs().max(1.0);
        if self.s > self.p + COUNT_TOLERANCE * scale {
            return Err(Error::Input(format!(
                "selected signal {} exceeds total signal {}",
                self.s, self.p
            )));
        }
        if (self.s_tilde - (self.p - self.s)).abs() > COUNT_TOLERANCE * scale {
            return Err(Error::Input("s_tilde != p - s".into()));
        }
        if (self.n - (self.s + self.b)).abs() > COUNT_TOLERANCE * (self.s + self.b).max(1.0) {
            return Err(Error::Input("n != s + b".into()));
        }
        Ok(())
    }
}

/// Weighted counts of a labelling `predictions` against `dataset`.
///
/// `b_reg` is stored alongside the raw false-positive weight.
pub fn confusion_summary(
    dataset: &WeightedDataset,
    predictions: &[Label],
    b_reg: f64,
) -> Result<ConfusionSummary> {
    if predictions.len() != dataset.len() {
        return Err(Error::Input(format!(
            "{} predictions for {} examples",
            predictions.len(),
            dataset.len()
        )));
    }
    if !(b_reg >= 0.0 && b_reg.is_finite()) {
        return Err(Error::Input(format!("b_reg must be finite and >= 0, got {b_reg}")));
    }
    let mut s = 0.0;
    let mut b = 0.0;
    let mut p = 0.0;
    for ((&label, &w), &pred) in dataset.labels().iter().zip(dataset.weights()).zip(predictions) {
        match (label, pred) {
            (Label::Signal, Label::Signal) => {
                s += w;
                p += w;
            }
            (Label::Signal, Label::Background) => p += w,
            (Label::Background, Label::Signal) => b += w,
            (Label::Background, Label::Background) => {}
        }
    }
    ConfusionSummary::new(s, b, p, b_reg)
}

/// Closed interval of admissible dual weights.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DualDomain {
    pub lo: f64,
    pub hi: f64,
}

impl DualDomain {
    pub const NONNEGATIVE: DualDomain = DualDomain {
        lo: 0.0,
        hi: f64::INFINITY,
    };

    pub fn contains(&self, u: f64) -> bool {
        u >= self.lo && u <= self.hi
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum MeasureKind {
    Ams2,
    Ams3,
    Custom,
}

impl FromStr for MeasureKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim().to_ascii_lowercase().as_str() {
            "ams2" => Ok(MeasureKind::Ams2),
            "ams3" => Ok(MeasureKind::Ams3),
            "custom" => Ok(MeasureKind::Custom),
            other => Err(Error::Config(format!("unknown measure '{other}'"))),
        }
    }
}

impl fmt::Display for MeasureKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            MeasureKind::Ams2 => "ams2",
            MeasureKind::Ams3 => "ams3",
            MeasureKind::Custom => "custom",
        })
    }
}

pub type ScalarFn = Arc<dyn Fn(f64) -> f64 + Send + Sync>;

/// User-supplied generator, conjugate, derivative and outer transform.
#[derive(Clone)]
pub struct CustomMeasure {
    name: String,
    f: ScalarFn,
    conjugate: ScalarFn,
    derivative: ScalarFn,
    outer: ScalarFn,
    domain: DualDomain,
}

impl fmt::Debug for CustomMeasure {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("CustomMeasure")
            .field("name", &self.name)
            .field("domain", &self.domain)
            .finish_non_exhaustive()
    }
}

/// A significance measure `h(B · f(s/B))` together with `f*` and `f'`.
#[derive(Debug, Clone)]
pub enum SignificanceMeasure {
    /// `f(t) = (1+t)ln(1+t) - t`, `h(x) = sqrt(2x)`.
    Ams2,
    /// `f(t) = t²/2`, `h(x) = sqrt(2x)`; reduces to `s / sqrt(B)`.
    Ams3,
    Custom(Arc<CustomMeasure>),
}

const FD_STEP: f64 = 1e-6;
const FD_TOLERANCE: f64 = 1e-4;
const FD_GRID: [f64; 8] = [0.05, 0.1, 0.5, 1.0, 2.0, 5.0, 10.0, 50.0];

impl SignificanceMeasure {
    pub fn from_kind(kind: MeasureKind) -> Result<Self> {
        match kind {
            MeasureKind::Ams2 => Ok(SignificanceMeasure::Ams2),
            MeasureKind::Ams3 => Ok(SignificanceMeasure::Ams3),
            MeasureKind::Custom => Err(Error::Config(
                "custom measures must be registered through SignificanceMeasure::custom".into(),
            )),
        }
    }

    /// Registers a custom measure.
    ///
    /// `derivative` is checked against a central difference of `f` on a
    /// fixed grid of ratios; a mismatch rejects the registration.
    pub fn custom(
        name: impl Into<String>,
        f: ScalarFn,
        conjugate: ScalarFn,
        derivative: ScalarFn,
        outer: ScalarFn,
        domain: DualDomain,
    ) -> Result<Self> {
        let name = name.into();
        if domain.lo.is_nan() || domain.hi.is_nan() || domain.lo > domain.hi {
            return Err(Error::Config(format!("measure '{name}': empty dual domain")));
        }
        for &t in &FD_GRID {
            let numeric = (f(t + FD_STEP) - f(t - FD_STEP)) / (2.0 * FD_STEP);
            let analytic = derivative(t);
            if !analytic.is_finite()
                || (numeric - analytic).abs() > FD_TOLERANCE * analytic.abs().max(1.0)
            {
                return Err(Error::Config(format!(
                    "measure '{name}': f'({t}) = {analytic} disagrees with finite difference {numeric}"
                )));
            }
        }
        Ok(SignificanceMeasure::Custom(Arc::new(CustomMeasure {
            name,
            f,
            conjugate,
            derivative,
            outer,
            domain,
        })))
    }

    pub fn kind(&self) -> MeasureKind {
        match self {
            SignificanceMeasure::Ams2 => MeasureKind::Ams2,
            SignificanceMeasure::Ams3 => MeasureKind::Ams3,
            SignificanceMeasure::Custom(_) => MeasureKind::Custom,
        }
    }

    pub fn name(&self) -> &str {
        match self {
            SignificanceMeasure::Ams2 => "ams2",
            SignificanceMeasure::Ams3 => "ams3",
            SignificanceMeasure::Custom(c) => &c.name,
        }
    }

    /// Generator `f(t)`.
    pub fn f(&self, t: f64) -> f64 {
        match self {
            SignificanceMeasure::Ams2 => ams2_generator(t),
            SignificanceMeasure::Ams3 => 0.5 * t * t,
            SignificanceMeasure::Custom(c) => (c.f)(t),
        }
    }

    /// Convex conjugate `f*(u) = sup_t { t·u - f(t) }`.
    pub fn conjugate(&self, u: f64) -> f64 {
        match self {
            SignificanceMeasure::Ams2 => ams2_conjugate(u),
            SignificanceMeasure::Ams3 => 0.5 * u * u,
            SignificanceMeasure::Custom(c) => (c.conjugate)(u),
        }
    }

    /// Derivative `f'(t)`; maps a ratio `s/B` to its optimal dual weight.
    pub fn derivative(&self, t: f64) -> f64 {
        match self {
            SignificanceMeasure::Ams2 => t.ln_1p(),
            SignificanceMeasure::Ams3 => t,
            SignificanceMeasure::Custom(c) => (c.derivative)(t),
        }
    }

    /// Outer transform `h`.
    pub fn outer(&self, x: f64) -> f64 {
        match self {
            SignificanceMeasure::Ams2 | SignificanceMeasure::Ams3 => (2.0 * x.max(0.0)).sqrt(),
            SignificanceMeasure::Custom(c) => (c.outer)(x),
        }
    }

    pub fn dual_domain(&self) -> DualDomain {
        match self {
            SignificanceMeasure::Ams2 | SignificanceMeasure::Ams3 => DualDomain::NONNEGATIVE,
            SignificanceMeasure::Custom(c) => c.domain,
        }
    }
}

/// `(1+t)ln(1+t) - t`, with a series near zero where the closed form cancels.
fn ams2_generator(t: f64) -> f64 {
    if t.abs() < 1e-3 {
        // sum_{k>=2} (-1)^k t^k / (k(k-1))
        let t2 = t * t;
        t2 * (0.5 - t / 6.0 + t2 / 12.0 - t2 * t / 20.0 + t2 * t2 / 30.0 - t2 * t2 * t / 42.0)
    } else {
        (1.0 + t) * t.ln_1p() - t
    }
}

/// `e^u - u - 1`, with a series near zero.
fn ams2_conjugate(u: f64) -> f64 {
    if u.abs() < 1e-3 {
        let u2 = u * u;
        u2 * (0.5 + u / 6.0 + u2 / 24.0 + u2 * u / 120.0 + u2 * u2 / 720.0)
    } else {
        u.exp_m1() - u
    }
}

/// `h(B · f(s/B))` with `B = b + b_reg`; zero when nothing signal-like is selected.
pub fn significance(summary: &ConfusionSummary, measure: &SignificanceMeasure) -> Result<f64> {
    if summary.s == 0.0 {
        return Ok(0.0);
    }
    let background = summary.background();
    if background <= 0.0 {
        return Err(Error::Degenerate(format!(
            "significance undefined for s = {} with zero background",
            summary.s
        )));
    }
    let inner = background * measure.f(summary.s / background);
    Ok(measure.outer(inner))
}

/// Dual risk `B·f*(u) + s̃·u - p·u`.
///
/// At `u = f'(s/B)` this equals `-B·f(s/B)`, i.e. `-significance²/2` for the
/// built-in measures; for any other `u` it is an upper bound on that value.
pub fn risk(summary: &ConfusionSummary, u: f64, measure: &SignificanceMeasure) -> Result<f64> {
    if !measure.dual_domain().contains(u) {
        return Err(Error::Input(format!(
            "dual weight {u} outside domain {:?} of {}",
            measure.dual_domain(),
            measure.name()
        )));
    }
    // s̃·u - p·u is -s·u by construction; evaluating it that way avoids
    // cancelling two large products when p >> s.
    Ok(summary.background() * measure.conjugate(u) - summary.s * u)
}

/// Unclamped minimizer `f'(s/B)` of [`risk`], or `None` when `B = 0`.
pub fn exact_dual(summary: &ConfusionSummary, measure: &SignificanceMeasure) -> Option<f64> {
    let background = summary.background();
    (background > 0.0).then(|| measure.derivative(summary.s / background))
}

/// A dual weight that has passed the floor check.
#[derive(Debug, Clone, Copy, PartialEq, PartialOrd)]
pub struct DualWeight(f64);

impl DualWeight {
    pub fn new(u: f64) -> Result<Self> {
        if !u.is_finite() || u < U_MIN {
            return Err(Error::Input(format!(
                "dual weight {u} must be finite and >= {U_MIN}"
            )));
        }
        Ok(DualWeight(u))
    }

    /// Clamps `u` into `[U_MIN, U_MAX]` (NaN maps to the floor).
    pub fn clamped(u: f64) -> Self {
        if u.is_nan() {
            DualWeight(U_MIN)
        } else {
            DualWeight(u.clamp(U_MIN, U_MAX))
        }
    }

    pub fn value(self) -> f64 {
        self.0
    }
}

impl fmt::Display for DualWeight {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.0)
    }
}

/// Closed-form minimizer of [`risk`] over `u`, clamped to `[U_MIN, U_MAX]`
/// and to the measure's dual domain.
pub fn optimal_u(summary: &ConfusionSummary, measure: &SignificanceMeasure) -> Result<DualWeight> {
    let raw = exact_dual(summary, measure).ok_or_else(|| {
        Error::Degenerate("optimal dual weight undefined with zero background".into())
    })?;
    let domain = measure.dual_domain();
    let lo = U_MIN.max(domain.lo);
    let hi = U_MAX.min(domain.hi);
    if lo > hi {
        return Err(Error::Degenerate(format!(
            "dual domain {domain:?} does not meet [{U_MIN}, {U_MAX}]"
        )));
    }
    let u = if raw.is_nan() { lo } else { raw.clamp(lo, hi) };
    Ok(DualWeight(u))
}

/// `a·f(c/a) - [c·f'(c/a) - a·f*(f'(c/a))]`, which vanishes for a correct
/// conjugate pair. Used as a numerical oracle.
pub fn fenchel_young_gap(measure: &SignificanceMeasure, a: f64, c: f64) -> Result<f64> {
    if !(a > 0.0 && a.is_finite()) {
        return Err(Error::Input(format!("a must be positive and finite, got {a}")));
    }
    if !(c >= 0.0 && c.is_finite()) {
        return Err(Error::Input(format!("c must be nonnegative and finite, got {c}")));
    }
    let t = c / a;
    let slope = measure.derivative(t);
    let primal = a * measure.f(t);
    let dual = c * slope - a * measure.conjugate(slope);
    Ok(primal - dual)
}
