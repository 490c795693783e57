//! Term-by-term evaluation of the change-of-variables formulas with local time on surfaces.
//!
//! Every report satisfies `lhs = F(t, A_t, X_t) − F(0, A_0, X_0)`,
//! `rhs = Σ terms` (in the listed order) and `residual = lhs − rhs`.
//!
//! Each step `(t_{k-1}, t_k]` is split into three moves: the drift segment from
//! `P_{k-1}` to `P̃ = P_{k-1} + (Δt, ΔA^c, ΔK^c)`, the martingale move `ΔM`, and
//! the jump at `t_k`. Integrals against `ds`, `dA^c` and `dK^c` are taken along
//! the drift segment, split where it crosses the surface; `∫F_x dM` and
//! `½∫F_xx d[X]^c` are evaluated at the predictable point `P̃`; jumps use the
//! pre-jump state. With `σ ≡ 0` every formula therefore closes to rounding error.

mod function;
mod verify;

use std::fmt;
use std::str::FromStr;
use std::sync::Arc;

use serde::{Deserialize, Serialize};
use thiserror::Error;

pub use function::{eval_F, fx_jump, PiecewiseSurfaceFunction, SmoothBranch, StateFn, SurfaceLimitFn};
pub use verify::{
    verify_general, verify_ito, verify_jump_ltc, verify_ltc_diffusion, verify_smooth_fit, verify_surfaces_strong,
    verify_tanaka,
};

use crate::calculus::{CalculusError, MeasureSpec, QvMeasure};
use crate::localtime::{LocalTimeError, MollifierSpec};
use crate::paths::{PathBundle, PathState};
use crate::surfaces::Branch;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum FormulaError {
    #[error("the bundle carries no M/K decomposition tags")]
    MissingDecomposition,
    #[error("this formula applies to continuous paths only, but the bundle has {0} jumps")]
    JumpsNotAllowed(usize),
    #[error("this formula needs a surface declared Lipschitz; '{0}' is not")]
    NotLipschitz(String),
    #[error("smooth fit fails: |F_x(b+) − F_x(b−)| reaches {0:e}")]
    SmoothFitViolated(f64),
    #[error("branches disagree on the surface by {0:e}")]
    Discontinuous(f64),
    #[error("one-sided derivative limits disagree with finite differences by {0:e}")]
    OneSidedLimits(f64),
    #[error("quadratic-variation measure has {found} entries for a grid of {expected} points")]
    Misaligned { expected: usize, found: usize },
    #[error(transparent)]
    LocalTime(#[from] LocalTimeError),
    #[error(transparent)]
    Calculus(#[from] CalculusError),
}

/// Formula identifiers.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Variant {
    Tanaka,
    LtcDiffusion,
    SurfacesStrong,
    JumpLtc,
    SmoothFit,
    General,
    Ito,
}

impl Variant {
    pub const ALL: [Variant; 7] = [
        Variant::Tanaka,
        Variant::LtcDiffusion,
        Variant::SurfacesStrong,
        Variant::JumpLtc,
        Variant::SmoothFit,
        Variant::General,
        Variant::Ito,
    ];

    pub fn name(&self) -> &'static str {
        match self {
            Variant::Tanaka => "tanaka",
            Variant::LtcDiffusion => "ltc_diffusion",
            Variant::SurfacesStrong => "surfaces_strong",
            Variant::JumpLtc => "jump_ltc",
            Variant::SmoothFit => "smooth_fit",
            Variant::General => "general",
            Variant::Ito => "ito",
        }
    }
}

impl fmt::Display for Variant {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Variant {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        Variant::ALL
            .into_iter()
            .find(|v| v.name() == s)
            .ok_or_else(|| format!("unknown formula variant '{s}'"))
    }
}

/// How `1{X_{s−} ≠ b_{s−}}` enters the dt, dB and d[X]^c integrals.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum IndicatorMode {
    /// Drop the integrand where the predictable point lies exactly on the surface.
    #[default]
    Strict,
    /// Replace the indicator by 1, taking the closed lower branch on the surface.
    One,
}

/// Per-step densities of the finite-variation and quadratic-variation parts,
/// frozen over the step: `ΔK^c/Δt`, `ΔA^c/Δt` and `Δ[X]^c/Δt`.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct StepRates {
    pub drift_x: f64,
    pub drift_a: f64,
    pub qv: f64,
}

pub type GeneratorFn = Arc<dyn Fn(PathState, Branch, &StepRates) -> f64 + Send + Sync>;

/// The pair `(H, λ)` of the general formula.
///
/// `H` may read the current step's [`StepRates`]; these are adapted, so `H`
/// remains a locally bounded adapted integrand.
#[derive(Clone)]
pub struct GeneratorSpec {
    pub h: GeneratorFn,
    pub lambda: MeasureSpec,
    /// Analytic justification of the domination hypothesis, recorded verbatim in reports.
    pub justification: String,
}

impl GeneratorSpec {
    pub fn new(
        h: impl Fn(PathState, Branch, &StepRates) -> f64 + Send + Sync + 'static,
        lambda: MeasureSpec,
        justification: impl Into<String>,
    ) -> Self {
        Self {
            h: Arc::new(h),
            lambda,
            justification: justification.into(),
        }
    }

    /// `H ≡ 0`, `λ ≡ 0`.
    pub fn zero() -> Self {
        Self::new(|_, _, _| 0.0, MeasureSpec::zero(), "H vanishes identically")
    }

    /// `H = F_t + μ_X F_x + μ_A F_a + ½ σ² F_xx` on each branch, `λ` Lebesgue.
    pub fn diffusion_generator(psf: &PiecewiseSurfaceFunction) -> Self {
        let f = psf.clone();
        Self::new(
            move |p, br, r| {
                f.d_t(br, p) + r.drift_x * f.d_x(br, p) + r.drift_a * f.d_a(br, p) + 0.5 * r.qv * f.d_xx(br, p)
            },
            MeasureSpec::lebesgue(),
            "H is the generator applied to F, bounded on the localisation box because every \
             sectional derivative is; the domination holds with λ = Lebesgue",
        )
    }
}

impl fmt::Debug for GeneratorSpec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("GeneratorSpec")
            .field("lambda", &self.lambda)
            .field("justification", &self.justification)
            .finish_non_exhaustive()
    }
}

/// Everything a formula evaluator reads besides `F`.
#[derive(Debug, Clone)]
pub struct FormulaInputs<'a> {
    pub bundle: &'a PathBundle,
    pub qv: &'a QvMeasure,
    /// `ε` for occupation estimators; the mollifier index is `n = 1/ε`.
    pub bandwidth: f64,
    pub mollifier: MollifierSpec,
    pub indicator: IndicatorMode,
}

impl<'a> FormulaInputs<'a> {
    pub fn new(bundle: &'a PathBundle, qv: &'a QvMeasure, bandwidth: f64) -> Self {
        Self {
            bundle,
            qv,
            bandwidth,
            mollifier: MollifierSpec::parabolic(),
            indicator: IndicatorMode::Strict,
        }
    }

    pub fn with_indicator(mut self, indicator: IndicatorMode) -> Self {
        self.indicator = indicator;
        self
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ReportMetadata {
    /// Largest grid step.
    pub dt: f64,
    pub bandwidth: f64,
    pub seed: Option<u64>,
    /// Estimator feeding the local-time term, if any.
    pub local_time: Option<String>,
    pub indicator: IndicatorMode,
    pub hypothesis: Option<String>,
    /// Diagnostics outside the term sum (alternative conventions, hit counts).
    pub aux: Vec<(String, f64)>,
}

/// Named term decomposition of one formula on one path.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FormulaReport {
    pub variant: Variant,
    pub lhs: f64,
    pub terms: Vec<(String, f64)>,
    pub rhs: f64,
    pub residual: f64,
    pub metadata: ReportMetadata,
}

impl FormulaReport {
    pub(crate) fn assemble(variant: Variant, lhs: f64, terms: Vec<(&str, f64)>, metadata: ReportMetadata) -> Self {
        let mut rhs = 0.0;
        for (_, v) in &terms {
            rhs += v;
        }
        Self {
            variant,
            lhs,
            terms: terms.into_iter().map(|(n, v)| (n.to_string(), v)).collect(),
            rhs,
            residual: lhs - rhs,
            metadata,
        }
    }

    pub fn term(&self, name: &str) -> Option<f64> {
        self.terms.iter().find(|(n, _)| n == name).map(|(_, v)| *v)
    }

    pub fn aux(&self, name: &str) -> Option<f64> {
        self.metadata.aux.iter().find(|(n, _)| n == name).map(|(_, v)| *v)
    }

    pub fn term_names(&self) -> impl Iterator<Item = &str> {
        self.terms.iter().map(|(n, _)| n.as_str())
    }
}
