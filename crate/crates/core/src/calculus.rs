//! Pathwise evaluation of the integrals appearing in the change-of-variables formulas.
//!
//! Every sum runs in increasing grid index and is never reassociated, so
//! results are bit-reproducible.

use std::fmt;
use std::sync::Arc;

use log::warn;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::localtime::LocalTimeSeries;
use crate::paths::{PathBundle, PathState, SdeSpec, TimeGrid};
use crate::surfaces::{Branch, Surface};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum CalculusError {
    #[error("series of length {found} does not match a grid of {expected} points")]
    Misaligned { expected: usize, found: usize },
    #[error("realized quadratic variation needs decomposition tags on the bundle")]
    MissingDecomposition,
    #[error("analytic quadratic variation needs the model's diffusion coefficient")]
    MissingModel,
    #[error("atom at t = {time} lies outside [0, {t_end}]")]
    AtomOutOfRange { time: f64, t_end: f64 },
}

fn aligned(expected: usize, found: usize) -> Result<(), CalculusError> {
    if expected == found {
        Ok(())
    } else {
        Err(CalculusError::Misaligned { expected, found })
    }
}

/// An integrand pre-evaluated on the grid.
///
/// `at[k]` is the value at `(t_k, A_{t_k}, X_{t_k})` and drives the step
/// `(t_k, t_{k+1}]`; `left[k]`, when present, is the value at the pre-jump
/// state `(t_k, A_{t_k-}, X_{t_k-})` and multiplies a jump at `t_k`.
#[derive(Debug, Clone, PartialEq)]
pub struct IntegrandSeries {
    at: Vec<f64>,
    left: Option<Vec<f64>>,
}

impl IntegrandSeries {
    pub fn new(at: Vec<f64>) -> Self {
        Self { at, left: None }
    }

    pub fn with_left(at: Vec<f64>, left: Vec<f64>) -> Result<Self, CalculusError> {
        aligned(at.len(), left.len())?;
        Ok(Self { at, left: Some(left) })
    }

    pub fn constant(c: f64, len: usize) -> Self {
        Self::new(vec![c; len])
    }

    /// `f(t_k)` on a grid.
    pub fn from_time_fn(grid: &TimeGrid, f: impl Fn(f64) -> f64) -> Self {
        Self::new(grid.times().iter().map(|&t| f(t)).collect())
    }

    /// `f` at every state of the bundle and at every pre-jump state.
    pub fn along(bundle: &PathBundle, f: impl Fn(PathState) -> f64) -> Self {
        let at: Vec<f64> = (0..bundle.len()).map(|k| f(bundle.state(k))).collect();
        let left = if bundle.has_jumps() {
            let mut left = at.clone();
            for j in bundle.jumps() {
                left[j.index] = f(bundle.left_state(j.index));
            }
            Some(left)
        } else {
            None
        };
        Self { at, left }
    }

    pub fn len(&self) -> usize {
        self.at.len()
    }

    pub fn is_empty(&self) -> bool {
        self.at.is_empty()
    }

    pub fn values(&self) -> &[f64] {
        &self.at
    }

    /// Value multiplying a jump at index `k`.
    #[inline]
    pub fn left(&self, k: usize) -> f64 {
        self.left.as_ref().map_or(self.at[k], |l| l[k])
    }
}

/// Left-point sum `Σ f(t_{k-1}) (g(t_k) − g(t_{k-1}))`.
pub fn stieltjes_integral(integrand: &IntegrandSeries, integrator: &[f64]) -> Result<f64, CalculusError> {
    aligned(integrand.len(), integrator.len())?;
    let f = integrand.values();
    let mut acc = 0.0;
    for k in 1..integrator.len() {
        acc += f[k - 1] * (integrator[k] - integrator[k - 1]);
    }
    Ok(acc)
}

/// Which part of a driver an Itô sum integrates against.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum DriverPart {
    Full,
    ContinuousOnly,
}

/// Left-point stochastic integral of `integrand` against `driver`.
///
/// `driver_jumps[k]` is the jump of the driver at `t_k` (zero elsewhere).
/// Its continuous increment is weighted by `f(t_{k-1})`; the jump, unless
/// excluded, by the pre-jump value `f(t_k-)`. Without `driver_jumps` this is
/// exactly [`stieltjes_integral`].
pub fn ito_integral(
    integrand: &IntegrandSeries,
    driver: &[f64],
    driver_jumps: Option<&[f64]>,
    part: DriverPart,
) -> Result<f64, CalculusError> {
    let Some(jumps) = driver_jumps else {
        return stieltjes_integral(integrand, driver);
    };
    aligned(integrand.len(), driver.len())?;
    aligned(driver.len(), jumps.len())?;
    let f = integrand.values();
    let mut acc = 0.0;
    for k in 1..driver.len() {
        let dj = jumps[k];
        acc += f[k - 1] * (driver[k] - driver[k - 1] - dj);
        if part == DriverPart::Full && dj != 0.0 {
            acc += integrand.left(k) * dj;
        }
    }
    Ok(acc)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum QvMode {
    /// `σ(t_{k-1}, A, X)² Δt` from the model coefficients.
    #[default]
    Analytic,
    /// Squared martingale increments of the bundle.
    Realized,
}

impl fmt::Display for QvMode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            QvMode::Analytic => "analytic",
            QvMode::Realized => "realized",
        })
    }
}

/// Increments of `[X, X]^c` per step; entry 0 is zero.
#[derive(Debug, Clone, PartialEq)]
pub struct QvMeasure {
    increments: Vec<f64>,
    mode: QvMode,
}

impl QvMeasure {
    pub fn from_increments(increments: Vec<f64>, mode: QvMode) -> Self {
        Self { increments, mode }
    }

    pub fn increments(&self) -> &[f64] {
        &self.increments
    }

    pub fn mode(&self) -> QvMode {
        self.mode
    }

    pub fn len(&self) -> usize {
        self.increments.len()
    }

    pub fn is_empty(&self) -> bool {
        self.increments.is_empty()
    }

    pub fn total(&self) -> f64 {
        self.increments.iter().sum()
    }

    pub fn cumulative(&self) -> Vec<f64> {
        let mut acc = 0.0;
        self.increments
            .iter()
            .map(|q| {
                acc += q;
                acc
            })
            .collect()
    }
}

/// The continuous quadratic-variation measure of `X` along a bundle.
///
/// Jumps never contribute: analytic increments only see `σ`, realized ones
/// only the martingale tags, which carry no jump part.
pub fn continuous_qv_measure(
    bundle: &PathBundle,
    spec: Option<&SdeSpec>,
    mode: QvMode,
) -> Result<QvMeasure, CalculusError> {
    let n = bundle.len();
    let mut inc = vec![0.0; n];
    match mode {
        QvMode::Analytic => {
            let spec = spec.ok_or(CalculusError::MissingModel)?;
            let g = bundle.grid();
            for k in 1..n {
                let p = bundle.state(k - 1);
                let s = (spec.sigma)(p.t, p.a, p.x);
                inc[k] = s * s * g.step(k);
            }
        }
        QvMode::Realized => {
            let d = bundle.decomposition().ok_or(CalculusError::MissingDecomposition)?;
            for k in 1..n {
                inc[k] = d.x_martingale[k] * d.x_martingale[k];
            }
        }
    }
    Ok(QvMeasure { increments: inc, mode })
}

/// `Σ f(t_{k-1}) (ℓ_{t_k} − ℓ_{t_{k-1}})`.
pub fn local_time_time_integral(integrand: &IntegrandSeries, lt: &LocalTimeSeries) -> Result<f64, CalculusError> {
    stieltjes_integral(integrand, lt.values())
}

/// Everything a jump-sum term may depend on at a jump index.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct JumpContext {
    pub index: usize,
    pub t: f64,
    pub a: f64,
    pub x: f64,
    pub a_minus: f64,
    pub x_minus: f64,
    pub dx: f64,
    pub da: f64,
    /// Martingale part of the jump; the tag layout puts every jump in `K`, so this is zero.
    pub dm: f64,
    pub dy: f64,
    pub dz: f64,
}

impl JumpContext {
    pub fn state(&self) -> PathState {
        PathState {
            t: self.t,
            a: self.a,
            x: self.x,
        }
    }

    pub fn left_state(&self) -> PathState {
        PathState {
            t: self.t,
            a: self.a_minus,
            x: self.x_minus,
        }
    }
}

/// Jump contexts of a bundle in time order.
pub fn jump_contexts(bundle: &PathBundle) -> impl Iterator<Item = JumpContext> + '_ {
    bundle.jumps().iter().map(move |j| {
        let k = j.index;
        JumpContext {
            index: k,
            t: bundle.grid().time(k),
            a: bundle.a()[k],
            x: bundle.x()[k],
            a_minus: j.a_minus,
            x_minus: j.x_minus,
            dx: bundle.x()[k] - j.x_minus,
            da: bundle.a()[k] - j.a_minus,
            dm: 0.0,
            dy: bundle.y()[k] - j.y_minus,
            dz: bundle.z()[k] - j.z_minus,
        }
    })
}

/// `Σ_{jumps} term(ctx)` over flagged indices only.
pub fn jump_sum(bundle: &PathBundle, term: impl Fn(&JumpContext) -> f64) -> f64 {
    let mut acc = 0.0;
    for ctx in jump_contexts(bundle) {
        acc += term(&ctx);
    }
    acc
}

pub type DensityFn = Arc<dyn Fn(f64) -> f64 + Send + Sync>;

/// A signed measure `λ(ds) = density(s) ds + Σ mass_i δ_{t_i}`.
#[derive(Clone, Default)]
pub struct MeasureSpec {
    density: Option<DensityFn>,
    atoms: Vec<(f64, f64)>,
}

impl MeasureSpec {
    pub fn zero() -> Self {
        Self::default()
    }

    pub fn lebesgue() -> Self {
        Self::with_density(|_| 1.0)
    }

    pub fn with_density(f: impl Fn(f64) -> f64 + Send + Sync + 'static) -> Self {
        Self {
            density: Some(Arc::new(f)),
            atoms: Vec::new(),
        }
    }

    /// Adds `mass · δ_time`.
    pub fn atom(mut self, time: f64, mass: f64) -> Self {
        self.atoms.push((time, mass));
        self
    }

    #[inline]
    pub fn density(&self, t: f64) -> f64 {
        self.density.as_ref().map_or(0.0, |d| d(t))
    }

    pub fn has_density(&self) -> bool {
        self.density.is_some()
    }

    pub fn atoms(&self) -> &[(f64, f64)] {
        &self.atoms
    }

    /// Grid index of each atom, snapped to the right.
    pub fn atom_indices(&self, grid: &TimeGrid) -> Result<Vec<(usize, f64)>, CalculusError> {
        let t_end = grid.t_end();
        self.atoms
            .iter()
            .map(|&(time, mass)| {
                if !(0.0..=t_end).contains(&time) {
                    return Err(CalculusError::AtomOutOfRange { time, t_end });
                }
                let k = grid.snap_right(time).expect("time lies within the grid");
                if grid.index_of(time).is_none() {
                    warn!("atom at t = {time} is off-grid; snapped right to t = {}", grid.time(k));
                }
                Ok((k, mass))
            })
            .collect()
    }
}

impl fmt::Debug for MeasureSpec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("MeasureSpec")
            .field("density", &self.density.as_ref().map(|_| "fn"))
            .field("atoms", &self.atoms)
            .finish()
    }
}

/// `∫ f(s−) λ(ds)`: left-point sum for the density, pre-jump values for atoms.
///
/// An atom at `t = 0` is weighted by the initial value.
pub fn measure_integral(
    integrand: &IntegrandSeries,
    lambda: &MeasureSpec,
    grid: &TimeGrid,
) -> Result<f64, CalculusError> {
    aligned(grid.len(), integrand.len())?;
    let f = integrand.values();
    let mut acc = 0.0;
    if lambda.has_density() {
        for k in 1..grid.len() {
            let t0 = grid.time(k - 1);
            acc += f[k - 1] * lambda.density(t0) * grid.step(k);
        }
    }
    for (k, mass) in lambda.atom_indices(grid)? {
        acc += integrand.left(k) * mass;
    }
    Ok(acc)
}

const GL_NODES: [f64; 5] = [
    -0.906_179_845_938_664,
    -0.538_469_310_105_683_1,
    0.0,
    0.538_469_310_105_683_1,
    0.906_179_845_938_664,
];
const GL_WEIGHTS: [f64; 5] = [
    0.236_926_885_056_189_08,
    0.478_628_670_499_366_47,
    0.568_888_888_888_888_9,
    0.478_628_670_499_366_47,
    0.236_926_885_056_189_08,
];

/// The straight segment `u ↦ p0 + u (p1 − p0)`, `u ∈ [0, 1]`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Segment {
    pub p0: PathState,
    pub p1: PathState,
}

impl Segment {
    #[inline]
    pub fn point(&self, u: f64) -> PathState {
        PathState {
            t: self.p0.t + u * (self.p1.t - self.p0.t),
            a: self.p0.a + u * (self.p1.a - self.p0.a),
            x: self.p0.x + u * (self.p1.x - self.p0.x),
        }
    }

    /// `∫_{u0}^{u1} f(point(u)) du` by 5-point Gauss–Legendre, componentwise.
    fn quad<const N: usize>(&self, u0: f64, u1: f64, f: &mut impl FnMut(PathState) -> [f64; N]) -> [f64; N] {
        let half = 0.5 * (u1 - u0);
        let mid = 0.5 * (u1 + u0);
        let mut acc = [0.0; N];
        for (x, w) in GL_NODES.iter().zip(GL_WEIGHTS) {
            let v = f(self.point(mid + half * x));
            for (a, v) in acc.iter_mut().zip(v) {
                *a += w * v;
            }
        }
        acc.map(|a| a * half)
    }

    /// Parameter of the surface crossing when the end points lie on opposite branches.
    pub fn crossing(&self, surface: &Surface) -> Option<f64> {
        let gap = |u: f64| {
            let p = self.point(u);
            p.x - surface.eval(p.t, p.a)
        };
        let lower0 = gap(0.0) <= 0.0;
        if lower0 == (gap(1.0) <= 0.0) {
            return None;
        }
        let (mut lo, mut hi) = (0.0, 1.0);
        for _ in 0..64 {
            let mid = 0.5 * (lo + hi);
            if (gap(mid) <= 0.0) == lower0 {
                lo = mid;
            } else {
                hi = mid;
            }
            if hi - lo <= f64::EPSILON {
                break;
            }
        }
        Some(0.5 * (lo + hi))
    }

    /// `∫_0^1 f(point(u), branch) du`, split where the segment crosses the surface.
    ///
    /// Each piece is integrated with the branch it lies in, so piecewise-smooth
    /// integrands are never sampled across the glue.
    pub fn integrate(&self, surface: &Surface, mut f: impl FnMut(PathState, Branch) -> f64) -> f64 {
        self.integrate_n(surface, |p, br| [f(p, br)])[0]
    }

    /// [`integrate`](Self::integrate) for several integrands sharing the same nodes.
    pub fn integrate_n<const N: usize>(
        &self,
        surface: &Surface,
        mut f: impl FnMut(PathState, Branch) -> [f64; N],
    ) -> [f64; N] {
        let b0 = surface.branch(self.p0.t, self.p0.a, self.p0.x);
        match self.crossing(surface) {
            None => self.quad(0.0, 1.0, &mut |p| f(p, b0)),
            Some(u) => {
                let b1 = match b0 {
                    Branch::Lower => Branch::Upper,
                    Branch::Upper => Branch::Lower,
                };
                let lo = self.quad(0.0, u, &mut |p| f(p, b0));
                let hi = self.quad(u, 1.0, &mut |p| f(p, b1));
                let mut out = lo;
                for (o, h) in out.iter_mut().zip(hi) {
                    *o += h;
                }
                out
            }
        }
    }
}
