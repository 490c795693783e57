use std::collections::BTreeMap;
use std::f64::consts::PI;

use serde::Serialize;

use super::HarnessError;
use crate::formulas::{GeneratorSpec, PiecewiseSurfaceFunction, SmoothBranch, Variant};
use crate::paths::{JumpLaw, SdeSpec};
use crate::surfaces::{SearchBox, Surface};

/// Named numeric scenario parameters.
pub type Params = BTreeMap<String, f64>;

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct ParamSpec {
    pub name: &'static str,
    pub default: f64,
    pub doc: &'static str,
}

const fn param(name: &'static str, default: f64, doc: &'static str) -> ParamSpec {
    ParamSpec { name, default, doc }
}

/// Everything needed to simulate and verify one scenario.
#[derive(Debug, Clone)]
pub struct ScenarioModel {
    pub spec: SdeSpec,
    pub psf: PiecewiseSurfaceFunction,
    /// `(H, λ)` for the general formula; the diffusion generator when absent.
    pub generator: Option<GeneratorSpec>,
    /// Level for the Tanaka variant.
    pub level: f64,
    /// Localisation box on which `F` and the surface are validated.
    pub test_box: SearchBox,
}

pub struct Scenario {
    pub name: &'static str,
    /// The change-of-variables statement the scenario exercises.
    pub theorem: &'static str,
    pub variant: Variant,
    pub params: &'static [ParamSpec],
    /// Overrides giving a `σ ≡ 0` path (pure drift plus jumps).
    pub degenerate: &'static [(&'static str, f64)],
    build: fn(&Params) -> ScenarioModel,
}

impl Scenario {
    /// Defaults overlaid with `given`; unknown keys are rejected.
    pub fn resolve_params(&self, given: &Params) -> Result<Params, HarnessError> {
        if let Some(k) = given.keys().find(|k| !self.params.iter().any(|p| p.name == k.as_str())) {
            let known: Vec<_> = self.params.iter().map(|p| p.name).collect();
            return Err(HarnessError::Config(format!(
                "scenario '{}' has no parameter '{k}' (known: {})",
                self.name,
                known.join(", ")
            )));
        }
        if let Some((k, v)) = given.iter().find(|(_, v)| !v.is_finite()) {
            return Err(HarnessError::Config(format!("parameter '{k}' must be finite, got {v}")));
        }
        let mut out: Params = self.params.iter().map(|p| (p.name.to_string(), p.default)).collect();
        out.extend(given.iter().map(|(k, v)| (k.clone(), *v)));
        Ok(out)
    }

    pub fn build(&self, given: &Params) -> Result<ScenarioModel, HarnessError> {
        let p = self.resolve_params(given)?;
        let model = (self.build)(&p);
        model.spec.validate()?;
        model.psf.validate(model.test_box, 21)?;
        Ok(model)
    }

    pub fn degenerate_params(&self) -> Params {
        self.degenerate.iter().map(|(k, v)| (k.to_string(), *v)).collect()
    }

    pub fn info(&self) -> ScenarioInfo {
        ScenarioInfo {
            name: self.name,
            theorem: self.theorem,
            variant: self.variant,
            params: self.params.to_vec(),
        }
    }
}

/// Serializable registry entry.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ScenarioInfo {
    pub name: &'static str,
    pub theorem: &'static str,
    pub variant: Variant,
    pub params: Vec<ParamSpec>,
}

fn get(p: &Params, k: &str) -> f64 {
    p[k]
}

fn unit_box() -> SearchBox {
    SearchBox::new((0.0, 1.0), (-2.0, 2.0))
}

const JUMP_PARAMS: [ParamSpec; 2] = [
    param("jump_rate", 0.0, "intensity of the compound-Poisson driver Y of X"),
    param("jump_size", 0.5, "Y jumps are ±jump_size with equal probability"),
];

fn with_x_jumps(spec: SdeSpec, p: &Params) -> SdeSpec {
    spec.with_lambda_x(|_, _, _| 1.0)
        .with_y_jumps(get(p, "jump_rate"), JumpLaw::symmetric(get(p, "jump_size")))
}

fn tanaka_bm(p: &Params) -> ScenarioModel {
    let (mu, sigma, level) = (get(p, "mu"), get(p, "sigma"), get(p, "level"));
    let spec = SdeSpec::new(get(p, "x0"), 0.0)
        .with_mu_x(move |_, _, _| mu)
        .with_sigma(move |_, _, _| sigma);
    ScenarioModel {
        spec: with_x_jumps(spec, p),
        psf: PiecewiseSurfaceFunction::abs_level(level),
        generator: None,
        level,
        test_box: unit_box(),
    }
}

fn smooth_quadratic(p: &Params) -> ScenarioModel {
    let (mu, sigma) = (get(p, "mu"), get(p, "sigma"));
    let spec = SdeSpec::new(get(p, "x0"), 0.0)
        .with_mu_x(move |_, _, _| mu)
        .with_sigma(move |_, _, _| sigma);
    ScenarioModel {
        spec: with_x_jumps(spec, p),
        psf: PiecewiseSurfaceFunction::smooth(
            Surface::level(0.0),
            SmoothBranch::of_x(|x| x * x, |x| 2.0 * x, |_| 2.0),
        ),
        generator: None,
        level: 0.0,
        test_box: unit_box(),
    }
}

/// OU diffusion around the curve `b(t) = amp·sin(2πt/period)`; `F = (x−b)²` below, `x−b` above.
fn wave_diffusion(p: &Params) -> ScenarioModel {
    let (theta, sigma, amp, period) = (get(p, "theta"), get(p, "sigma"), get(p, "amp"), get(p, "period"));
    let w = 2.0 * PI / period;
    let surface = Surface::lipschitz("wave", amp.abs() * w, move |t, _| amp * (w * t).sin());
    let b_t = move |t: f64, _| amp * w * (w * t).cos();
    let psf = PiecewiseSurfaceFunction::glued(
        surface.clone(),
        SmoothBranch::of_gap(&surface, b_t, |_, _| 0.0, |u| u * u, |u| 2.0 * u, |_| 2.0),
        SmoothBranch::of_gap(&surface, b_t, |_, _| 0.0, |u| u, |_| 1.0, |_| 0.0),
    );
    let spec = SdeSpec::new(get(p, "x0"), 0.0)
        .with_mu_x(move |_, _, x| -theta * x)
        .with_sigma(move |_, _, _| sigma);
    ScenarioModel {
        spec,
        psf,
        generator: None,
        level: 0.0,
        test_box: unit_box(),
    }
}

fn generator_lambda(p: &Params) -> ScenarioModel {
    let mut model = wave_diffusion(p);
    model.generator = Some(GeneratorSpec::diffusion_generator(&model.psf));
    model
}

fn glued_quadratic_jump(p: &Params) -> ScenarioModel {
    let surface = Surface::lipschitz("tilt", 0.5, |_, a| 1.0 + 0.5 * a);
    let psf = PiecewiseSurfaceFunction::glued(
        surface.clone(),
        SmoothBranch::of_gap(&surface, |_, _| 0.0, |_, _| 0.5, |u| u * u + u, |u| 2.0 * u + 1.0, |_| 2.0),
        SmoothBranch::of_gap(&surface, |_, _| 0.0, |_, _| 0.5, |u| 2.0 * u, |_| 2.0, |_| 0.0),
    );
    let (mu_x, sigma, mu_a) = (get(p, "mu_x"), get(p, "sigma"), get(p, "mu_a"));
    let spec = SdeSpec::new(get(p, "x0"), get(p, "a0"))
        .with_mu_x(move |_, _, _| mu_x)
        .with_sigma(move |_, _, _| sigma)
        .with_mu_a(move |_, _, _| mu_a);
    ScenarioModel {
        spec: with_x_jumps(spec, p),
        psf,
        generator: None,
        level: 0.0,
        test_box: unit_box(),
    }
}

fn signed_sqrt(a: f64) -> f64 {
    a.signum() * a.abs().sqrt()
}

fn smooth_fit_sqrt_surface(p: &Params) -> ScenarioModel {
    let surface = Surface::new("signed_sqrt", |_, a| signed_sqrt(a));
    // d/da sign(a)√|a| = 1/(2√|a|) off a = 0; A sits at 0 with probability zero.
    let b_a = |_, a: f64| if a == 0.0 { 0.0 } else { 0.5 / a.abs().sqrt() };
    let psf = PiecewiseSurfaceFunction::glued(
        surface.clone(),
        SmoothBranch::zero(),
        SmoothBranch::of_gap(&surface, |_, _| 0.0, b_a, |u| u * u, |u| 2.0 * u, |_| 2.0),
    );
    let (mu_x, sigma, mu_a) = (get(p, "mu_x"), get(p, "sigma"), get(p, "mu_a"));
    let spec = SdeSpec::new(get(p, "x0"), get(p, "a0"))
        .with_mu_x(move |_, _, _| mu_x)
        .with_sigma(move |_, _, _| sigma)
        .with_mu_a(move |_, _, _| mu_a)
        .with_lambda_a(|_, _, _| 1.0)
        .with_z_jumps(get(p, "a_jump_rate"), JumpLaw::symmetric(get(p, "a_jump_size")));
    ScenarioModel {
        spec: with_x_jumps(spec, p),
        psf,
        generator: None,
        level: 0.0,
        test_box: unit_box(),
    }
}

fn surfaces_strong(p: &Params) -> ScenarioModel {
    let surface = Surface::lipschitz("diagonal", 1.0, |_, a| a);
    let psf = PiecewiseSurfaceFunction::glued(
        surface.clone(),
        SmoothBranch::of_gap(&surface, |_, _| 0.0, |_, _| 1.0, |u| -u, |_| -1.0, |_| 0.0),
        SmoothBranch::of_gap(&surface, |_, _| 0.0, |_, _| 1.0, |u| u + 0.5 * u * u, |u| 1.0 + u, |_| 1.0),
    );
    let (mu_x, theta, sigma, mu_a) = (get(p, "mu_x"), get(p, "theta"), get(p, "sigma"), get(p, "mu_a"));
    let spec = SdeSpec::new(get(p, "x0"), get(p, "a0"))
        .with_mu_x(move |_, _, x| mu_x - theta * x)
        .with_sigma(move |_, _, _| sigma)
        .with_mu_a(move |_, _, _| mu_a)
        .with_lambda_a(|_, _, _| 1.0)
        .with_z_jumps(get(p, "a_jump_rate"), JumpLaw::symmetric(get(p, "a_jump_size")));
    ScenarioModel {
        spec: with_x_jumps(spec, p),
        psf,
        generator: None,
        level: 0.0,
        test_box: unit_box(),
    }
}

const TANAKA_PARAMS: &[ParamSpec] = &[
    param("level", 0.0, "level a of |X − a|"),
    param("x0", 0.0, "initial value of X"),
    param("mu", 0.0, "constant drift of X"),
    param("sigma", 1.0, "constant volatility of X"),
    JUMP_PARAMS[0],
    JUMP_PARAMS[1],
];

const QUADRATIC_PARAMS: &[ParamSpec] = &[
    param("x0", 0.0, "initial value of X"),
    param("mu", 0.0, "constant drift of X"),
    param("sigma", 1.0, "constant volatility of X"),
    JUMP_PARAMS[0],
    JUMP_PARAMS[1],
];

const WAVE_PARAMS: &[ParamSpec] = &[
    param("x0", 0.1, "initial value of X"),
    param("theta", 0.5, "mean-reversion speed, drift −θx"),
    param("sigma", 1.0, "constant volatility of X"),
    param("amp", 0.25, "amplitude of the curve b(t) = amp·sin(2πt/period)"),
    param("period", 1.0, "period of the curve"),
];

const GLUED_PARAMS: &[ParamSpec] = &[
    param("x0", 1.0, "initial value of X (on the surface when a0 = 0)"),
    param("a0", 0.0, "initial value of A"),
    param("mu_x", 0.0, "constant drift of X"),
    param("sigma", 1.0, "constant volatility of X"),
    param("mu_a", 0.5, "constant drift of A"),
    param("jump_rate", 1.0, "intensity of the compound-Poisson driver Y of X"),
    param("jump_size", 0.5, "Y jumps are ±jump_size with equal probability"),
];

const SQRT_PARAMS: &[ParamSpec] = &[
    param("x0", 1.0, "initial value of X (on the surface when a0 = 1)"),
    param("a0", 1.0, "initial value of A"),
    param("mu_x", 0.0, "constant drift of X"),
    param("sigma", 1.0, "constant volatility of X"),
    param("mu_a", 0.5, "constant drift of A"),
    param("a_jump_rate", 1.0, "intensity of the compound-Poisson driver Z of A"),
    param("a_jump_size", 0.3, "Z jumps are ±a_jump_size with equal probability"),
    param("jump_rate", 1.0, "intensity of the compound-Poisson driver Y of X"),
    param("jump_size", 0.5, "Y jumps are ±jump_size with equal probability"),
];

const STRONG_PARAMS: &[ParamSpec] = &[
    param("x0", 0.0, "initial value of X"),
    param("a0", 0.0, "initial value of A"),
    param("mu_x", 0.0, "constant part of the drift of X"),
    param("theta", 1.0, "mean-reversion speed, drift mu_x − θx"),
    param("sigma", 1.0, "constant volatility of X"),
    param("mu_a", 0.3, "constant drift of A"),
    param("a_jump_rate", 1.0, "intensity of the compound-Poisson driver Z of A"),
    param("a_jump_size", 0.2, "Z jumps are ±a_jump_size with equal probability"),
    param("jump_rate", 1.0, "intensity of the compound-Poisson driver Y of X"),
    param("jump_size", 0.4, "Y jumps are ±jump_size with equal probability"),
];

static REGISTRY: [Scenario; 7] = [
    Scenario {
        name: "tanaka_bm",
        theorem: "Tanaka's formula for |X − a| with right local time",
        variant: Variant::Tanaka,
        params: TANAKA_PARAMS,
        degenerate: &[("sigma", 0.0), ("mu", 1.0), ("x0", -0.5), ("jump_rate", 3.0)],
        build: tanaka_bm,
    },
    Scenario {
        name: "smooth_quadratic",
        theorem: "classical Itô formula for F = x²",
        variant: Variant::Ito,
        params: QUADRATIC_PARAMS,
        degenerate: &[("sigma", 0.0), ("mu", -1.0), ("x0", 0.3), ("jump_rate", 3.0)],
        build: smooth_quadratic,
    },
    Scenario {
        name: "peskir_diffusion",
        theorem: "local time on curves for a continuous diffusion, symmetric local time",
        variant: Variant::LtcDiffusion,
        params: WAVE_PARAMS,
        degenerate: &[("sigma", 0.0), ("x0", 0.2)],
        build: wave_diffusion,
    },
    Scenario {
        name: "glued_quadratic_jump",
        theorem: "jump-diffusion change of variables with a Lipschitz surface",
        variant: Variant::JumpLtc,
        params: GLUED_PARAMS,
        degenerate: &[("sigma", 0.0), ("mu_x", 0.8), ("jump_rate", 3.0)],
        build: glued_quadratic_jump,
    },
    Scenario {
        name: "smooth_fit_sqrt_surface",
        theorem: "smooth-fit change of variables with an arbitrary continuous surface",
        variant: Variant::SmoothFit,
        params: SQRT_PARAMS,
        degenerate: &[("sigma", 0.0), ("mu_x", -1.0), ("jump_rate", 3.0)],
        build: smooth_fit_sqrt_surface,
    },
    Scenario {
        name: "generator_lambda",
        theorem: "general semimartingale formula with a dominating pair (H, λ)",
        variant: Variant::General,
        params: WAVE_PARAMS,
        degenerate: &[("sigma", 0.0), ("x0", 0.2)],
        build: generator_lambda,
    },
    Scenario {
        name: "surfaces_strong",
        theorem: "strong-smoothness surfaces formula with averaged one-sided derivatives",
        variant: Variant::SurfacesStrong,
        params: STRONG_PARAMS,
        degenerate: &[("sigma", 0.0), ("mu_x", 1.0), ("x0", -0.3), ("jump_rate", 3.0)],
        build: surfaces_strong,
    },
];

/// Registry entries in a fixed order.
pub fn list_scenarios() -> &'static [Scenario] {
    &REGISTRY
}

pub fn find_scenario(name: &str) -> Result<&'static Scenario, HarnessError> {
    REGISTRY
        .iter()
        .find(|s| s.name == name)
        .ok_or_else(|| HarnessError::UnknownScenario(name.to_string()))
}
