//! Local time of `X − b` at zero by three independent estimators.

use std::fmt;
use std::sync::Arc;

use log::warn;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::calculus::QvMeasure;
use crate::paths::{PathBundle, TimeGrid};
use crate::surfaces::Surface;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum LocalTimeError {
    #[error("bandwidth must be positive and finite, got {0}")]
    NonPositiveBandwidth(f64),
    #[error("mollifier index n must be at least 1")]
    ZeroIndex,
    #[error("quadratic-variation measure has {found} entries for a grid of {expected} points")]
    Misaligned { expected: usize, found: usize },
    #[error("level grid needs at least two increasing levels")]
    BadLevelGrid,
}

pub type KernelFn = Arc<dyn Fn(f64) -> f64 + Send + Sync>;

/// A kernel `ρ` supported on `[0, 1]` with unit mass.
#[derive(Clone)]
pub struct MollifierSpec {
    name: String,
    rho: KernelFn,
    derivative: KernelFn,
}

impl MollifierSpec {
    /// Kernel given on `[0, 1]`; it is taken to be zero outside.
    pub fn new(
        name: impl Into<String>,
        rho: impl Fn(f64) -> f64 + Send + Sync + 'static,
        derivative: impl Fn(f64) -> f64 + Send + Sync + 'static,
    ) -> Self {
        Self {
            name: name.into(),
            rho: Arc::new(rho),
            derivative: Arc::new(derivative),
        }
    }

    /// `ρ(z) = 6 z (1 − z)`: nonnegative, `∫ρ = 1` in closed form.
    pub fn parabolic() -> Self {
        Self::new("parabolic", |z| 6.0 * z * (1.0 - z), |z| 6.0 - 12.0 * z)
    }

    pub fn name(&self) -> &str {
        &self.name
    }

    #[inline]
    pub fn eval(&self, z: f64) -> f64 {
        if (0.0..=1.0).contains(&z) {
            (self.rho)(z)
        } else {
            0.0
        }
    }

    #[inline]
    pub fn derivative(&self, z: f64) -> f64 {
        if (0.0..=1.0).contains(&z) {
            (self.derivative)(z)
        } else {
            0.0
        }
    }

    /// `∫_0^1 ρ` by composite Simpson on 1000 panels (exact for cubics).
    pub fn mass(&self) -> f64 {
        let n = 1000;
        let h = 1.0 / n as f64;
        let mut acc = self.eval(0.0) + self.eval(1.0);
        for i in 1..n {
            let w = if i % 2 == 1 { 4.0 } else { 2.0 };
            acc += w * self.eval(i as f64 * h);
        }
        acc * h / 3.0
    }
}

impl Default for MollifierSpec {
    fn default() -> Self {
        Self::parabolic()
    }
}

impl fmt::Debug for MollifierSpec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("MollifierSpec").field("name", &self.name).finish_non_exhaustive()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Side {
    /// Window `0 ≤ X − b < ε`.
    Right,
    /// Window `|X − b| < ε`, weight `1 / 2ε`.
    Symmetric,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Estimator {
    Occupation,
    Mollifier,
    Tanaka,
}

impl fmt::Display for Estimator {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Estimator::Occupation => "occupation",
            Estimator::Mollifier => "mollifier",
            Estimator::Tanaka => "tanaka",
        })
    }
}

/// A local-time path `t_k ↦ ℓ_{t_k}` of `X − b` at zero.
#[derive(Debug, Clone, PartialEq)]
pub struct LocalTimeSeries {
    grid: TimeGrid,
    values: Vec<f64>,
    level: f64,
    target: String,
    side: Side,
    estimator: Estimator,
    bandwidth: Option<f64>,
}

impl LocalTimeSeries {
    fn from_increments(
        grid: &TimeGrid,
        increments: impl Iterator<Item = f64>,
        target: &Surface,
        side: Side,
        estimator: Estimator,
        bandwidth: Option<f64>,
    ) -> Self {
        let mut values = Vec::with_capacity(grid.len());
        values.push(0.0);
        let mut acc = 0.0;
        for inc in increments {
            acc += inc;
            values.push(acc);
        }
        Self {
            grid: grid.clone(),
            values,
            level: target.eval(0.0, 0.0),
            target: target.name().to_string(),
            side,
            estimator,
            bandwidth,
        }
    }

    pub fn grid(&self) -> &TimeGrid {
        &self.grid
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn terminal(&self) -> f64 {
        *self.values.last().expect("series is never empty")
    }

    /// `b(0, A_0)`; the level itself for flat targets.
    pub fn level(&self) -> f64 {
        self.level
    }

    pub fn target(&self) -> &str {
        &self.target
    }

    pub fn side(&self) -> Side {
        self.side
    }

    pub fn estimator(&self) -> Estimator {
        self.estimator
    }

    pub fn bandwidth(&self) -> Option<f64> {
        self.bandwidth
    }

    pub fn increment(&self, k: usize) -> f64 {
        self.values[k] - self.values[k - 1]
    }

    pub fn is_nondecreasing(&self) -> bool {
        self.values.windows(2).all(|w| w[1] >= w[0])
    }
}

fn check_qv(bundle: &PathBundle, qv: &QvMeasure) -> Result<(), LocalTimeError> {
    if qv.len() == bundle.len() {
        Ok(())
    } else {
        Err(LocalTimeError::Misaligned {
            expected: bundle.len(),
            found: qv.len(),
        })
    }
}

/// Distance `X_{t_{k-1}} − b(t_{k-1}, A_{t_{k-1}})` governing step `k`.
#[inline]
fn gap(bundle: &PathBundle, surface: &Surface, k: usize) -> f64 {
    let p = bundle.state(k - 1);
    p.x - surface.eval(p.t, p.a)
}

/// ε-occupation estimator `(1/ε) ∫ 1{0 ≤ X−b < ε} d[X]^c` (right) or
/// `(1/2ε) ∫ 1{|X−b| < ε} d[X]^c` (symmetric).
pub fn local_time_occupation(
    bundle: &PathBundle,
    surface: &Surface,
    eps: f64,
    side: Side,
    qv: &QvMeasure,
) -> Result<LocalTimeSeries, LocalTimeError> {
    if !(eps > 0.0 && eps.is_finite()) {
        return Err(LocalTimeError::NonPositiveBandwidth(eps));
    }
    check_qv(bundle, qv)?;
    let q = qv.increments();
    let incs = (1..bundle.len()).map(|k| {
        let d = gap(bundle, surface, k);
        let hit = match side {
            Side::Right => (0.0..eps).contains(&d),
            Side::Symmetric => d.abs() < eps,
        };
        match (hit, side) {
            (false, _) => 0.0,
            (true, Side::Right) => q[k] / eps,
            (true, Side::Symmetric) => q[k] / (2.0 * eps),
        }
    });
    Ok(LocalTimeSeries::from_increments(
        bundle.grid(),
        incs,
        surface,
        side,
        Estimator::Occupation,
        Some(eps),
    ))
}

/// `J^n_t = ∫ n ρ(n (X−b)) d[X]^c`; a right local-time estimator with bandwidth `1/n`.
pub fn local_time_mollifier(
    bundle: &PathBundle,
    surface: &Surface,
    n: f64,
    rho: &MollifierSpec,
    qv: &QvMeasure,
) -> Result<LocalTimeSeries, LocalTimeError> {
    if !(n >= 1.0 && n.is_finite()) {
        return Err(LocalTimeError::ZeroIndex);
    }
    check_qv(bundle, qv)?;
    let q = qv.increments();
    let incs = (1..bundle.len()).map(|k| {
        let w = rho.eval(n * gap(bundle, surface, k));
        if w == 0.0 {
            0.0
        } else {
            n * w * q[k]
        }
    });
    Ok(LocalTimeSeries::from_increments(
        bundle.grid(),
        incs,
        surface,
        Side::Right,
        Estimator::Mollifier,
        Some(1.0 / n),
    ))
}

/// `sgn(x) = 1` for `x > 0`, `−1` otherwise.
#[inline]
pub fn sgn(x: f64) -> f64 {
    if x > 0.0 {
        1.0
    } else {
        -1.0
    }
}

/// Per-step pieces of `X`: start value, predictable point after the drift, and the
/// value just before any jump at the step end.
#[derive(Debug, Clone, Copy, PartialEq)]
pub(crate) struct StepSplit {
    pub x0: f64,
    pub x_pred: f64,
    pub x_minus: f64,
}

/// Splits step `k` into drift, martingale and jump moves.
///
/// Untagged bundles are read as pure martingale moves between grid points.
pub(crate) fn step_split(bundle: &PathBundle, k: usize) -> StepSplit {
    let x0 = bundle.x()[k - 1];
    let x_minus = bundle.x_left(k);
    let x_pred = match bundle.decomposition() {
        Some(d) => x0 + d.x_drift[k],
        None => x0,
    };
    StepSplit { x0, x_pred, x_minus }
}

/// Right local time at `level` read off Tanaka's formula:
/// `|X_t − a| − |X_0 − a| − ∫ sgn(X_{s−} − a) dX_s − Σ (|X_s−a| − |X_{s−}−a| − sgn(X_{s−}−a) ΔX_s)`.
///
/// Drift moves are integrated exactly and jumps cancel against their
/// correction, so each step contributes `|x̃ + ΔM − a| − |x̃ − a| − sgn(x̃ − a) ΔM`
/// with `x̃` the post-drift point; this is nonnegative by convexity.
pub fn local_time_tanaka_residual(bundle: &PathBundle, level: f64) -> LocalTimeSeries {
    let incs = (1..bundle.len()).map(|k| {
        let s = step_split(bundle, k);
        let (u, v) = (s.x_pred - level, s.x_minus - level);
        (v.abs() - u.abs() - sgn(u) * (v - u)).max(0.0)
    });
    LocalTimeSeries::from_increments(
        bundle.grid(),
        incs,
        &Surface::level(level),
        Side::Right,
        Estimator::Tanaka,
        None,
    )
}

/// Outcome of an occupation-time check.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct OccupationCheck {
    pub lhs: f64,
    pub rhs: f64,
    pub relative_error: f64,
}

/// `∫ g(X_s) d[X]^c_s` against `∫ g(a) ℓ^a_t da`, the latter by the
/// trapezoid rule over `levels` with right ε-occupation local times.
pub fn occupation_formula_check(
    bundle: &PathBundle,
    g: impl Fn(f64) -> f64,
    levels: &[f64],
    eps: f64,
    qv: &QvMeasure,
) -> Result<OccupationCheck, LocalTimeError> {
    if levels.len() < 2 || levels.windows(2).any(|w| !(w[1] > w[0])) {
        return Err(LocalTimeError::BadLevelGrid);
    }
    if !(eps > 0.0 && eps.is_finite()) {
        return Err(LocalTimeError::NonPositiveBandwidth(eps));
    }
    check_qv(bundle, qv)?;
    let q = qv.increments();
    let x = bundle.x();
    let mut lhs = 0.0;
    for k in 1..bundle.len() {
        lhs += g(x[k - 1]) * q[k];
    }
    let (lo, hi) = x[..x.len() - 1]
        .iter()
        .fold((f64::INFINITY, f64::NEG_INFINITY), |(l, h), &v| (l.min(v), h.max(v)));
    if levels[0] > lo - eps || *levels.last().unwrap() < hi {
        warn!(
            "level grid [{}, {}] does not cover the path range [{lo}, {hi}]",
            levels[0],
            levels.last().unwrap()
        );
    }
    let mut rhs = 0.0;
    for (i, &a) in levels.iter().enumerate() {
        let w = match i {
            0 => 0.5 * (levels[1] - levels[0]),
            _ if i + 1 == levels.len() => 0.5 * (levels[i] - levels[i - 1]),
            _ => 0.5 * (levels[i + 1] - levels[i - 1]),
        };
        let ga = g(a);
        if ga == 0.0 {
            continue;
        }
        let ell = local_time_occupation(bundle, &Surface::level(a), eps, Side::Right, qv)?.terminal();
        rhs += w * ga * ell;
    }
    let relative_error = if lhs == 0.0 && rhs == 0.0 {
        0.0
    } else {
        (lhs - rhs).abs() / lhs.abs().max(f64::MIN_POSITIVE)
    };
    Ok(OccupationCheck {
        lhs,
        rhs,
        relative_error,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::calculus::{continuous_qv_measure, QvMode};
    use crate::paths::{simulate_jump_diffusion, JumpLaw, SdeSpec};
    use crate::seed::derive_seed;

    const MEAN_ABS_NORMAL: f64 = 0.797_884_560_802_865_4;

    fn brownian(seed: u64, n: usize) -> (PathBundle, QvMeasure) {
        let spec = SdeSpec::brownian(0.0);
        let b = simulate_jump_diffusion(&spec, 1.0, n, seed).unwrap();
        let q = continuous_qv_measure(&b, Some(&spec), QvMode::Analytic).unwrap();
        (b, q)
    }

    #[test]
    fn parabolic_kernel_has_unit_mass() {
        let rho = MollifierSpec::parabolic();
        assert!((rho.mass() - 1.0).abs() < 1e-12);
        assert_eq!(rho.eval(-0.1), 0.0);
        assert_eq!(rho.eval(1.1), 0.0);
        assert!((0..=100).all(|i| rho.eval(i as f64 / 100.0) >= 0.0));
        assert_eq!(rho.derivative(0.5), 0.0);
    }

    #[test]
    fn drift_path_has_no_local_time() {
        let spec = SdeSpec::new(0.0, 0.0).with_mu_x(|_, _, _| 1.0);
        let b = simulate_jump_diffusion(&spec, 1.0, 1000, 0).unwrap();
        let q = continuous_qv_measure(&b, Some(&spec), QvMode::Analytic).unwrap();
        let lvl = Surface::level(0.5);
        for side in [Side::Right, Side::Symmetric] {
            let lt = local_time_occupation(&b, &lvl, 0.01, side, &q).unwrap();
            assert!(lt.values().iter().all(|&v| v == 0.0));
        }
        let j = local_time_mollifier(&b, &lvl, 100.0, &MollifierSpec::parabolic(), &q).unwrap();
        assert!(j.values().iter().all(|&v| v == 0.0));
    }

    #[test]
    fn drift_and_jumps_have_no_mollified_local_time() {
        let spec = SdeSpec::new(0.0, 0.0)
            .with_mu_x(|_, _, _| 0.3)
            .with_lambda_x(|_, _, _| 1.0)
            .with_y_jumps(4.0, JumpLaw::symmetric(0.2));
        let b = simulate_jump_diffusion(&spec, 1.0, 500, 5).unwrap();
        let q = continuous_qv_measure(&b, None, QvMode::Realized).unwrap();
        let j = local_time_mollifier(&b, &Surface::level(0.1), 50.0, &MollifierSpec::parabolic(), &q).unwrap();
        assert_eq!(j.terminal(), 0.0);
    }

    #[test]
    fn tanaka_residual_vanishes_on_deterministic_path() {
        let spec = SdeSpec::new(-0.5, 0.0).with_mu_x(|_, _, _| 1.0);
        let b = simulate_jump_diffusion(&spec, 1.0, 1000, 0).unwrap();
        let lt = local_time_tanaka_residual(&b, 0.0);
        assert!(lt.values().iter().all(|v| v.abs() < 1e-12));
    }

    #[test]
    fn tanaka_residual_far_below_path_vanishes() {
        let (b, _) = brownian(3, 1000);
        let lt = local_time_tanaka_residual(&b, -100.0);
        assert!(lt.values().iter().all(|v| v.abs() < 1e-12));
    }

    #[test]
    fn bounded_away_path_has_no_occupation() {
        let spec = SdeSpec::new(2.0, 0.0).with_sigma(|_, _, _| 0.01);
        let b = simulate_jump_diffusion(&spec, 1.0, 1000, 9).unwrap();
        let q = continuous_qv_measure(&b, Some(&spec), QvMode::Analytic).unwrap();
        let lt = local_time_occupation(&b, &Surface::level(0.0), 0.1, Side::Symmetric, &q).unwrap();
        assert_eq!(lt.terminal(), 0.0);
    }

    #[test]
    fn estimators_are_monotone_and_supported() {
        let (b, q) = brownian(11, 2000);
        let lvl = Surface::level(0.0);
        let eps = 0.05;
        let all = [
            local_time_occupation(&b, &lvl, eps, Side::Right, &q).unwrap(),
            local_time_occupation(&b, &lvl, eps, Side::Symmetric, &q).unwrap(),
            local_time_mollifier(&b, &lvl, 1.0 / eps, &MollifierSpec::parabolic(), &q).unwrap(),
            local_time_tanaka_residual(&b, 0.0),
        ];
        for lt in &all {
            assert_eq!(lt.values()[0], 0.0);
            assert!(lt.is_nondecreasing());
        }
        for lt in &all[..3] {
            for k in 1..b.len() {
                if b.x()[k - 1].abs() > eps {
                    assert_eq!(lt.increment(k), 0.0);
                }
            }
        }
    }

    #[test]
    fn rejects_bad_bandwidth() {
        let (b, q) = brownian(1, 10);
        assert_eq!(
            local_time_occupation(&b, &Surface::level(0.0), 0.0, Side::Right, &q).unwrap_err(),
            LocalTimeError::NonPositiveBandwidth(0.0)
        );
        assert_eq!(
            local_time_mollifier(&b, &Surface::level(0.0), 0.0, &MollifierSpec::parabolic(), &q).unwrap_err(),
            LocalTimeError::ZeroIndex
        );
    }

    #[test]
    fn brownian_local_time_means() {
        // E ℓ⁰_1 = E|B_1| = sqrt(2/π).
        let paths = 2_000;
        let mut sums = [0.0; 3];
        for i in 0..paths {
            let (b, q) = brownian(derive_seed(2024, i), 10_000);
            let lvl = Surface::level(0.0);
            sums[0] += local_time_occupation(&b, &lvl, 0.01, Side::Right, &q).unwrap().terminal();
            sums[1] += local_time_mollifier(&b, &lvl, 100.0, &MollifierSpec::parabolic(), &q).unwrap().terminal();
            sums[2] += local_time_tanaka_residual(&b, 0.0).terminal();
        }
        for s in sums {
            let mean = s / paths as f64;
            assert!((mean / MEAN_ABS_NORMAL - 1.0).abs() < 0.05, "mean {mean}");
        }
    }

    #[test]
    fn mollifier_tracks_occupation_in_median() {
        let paths = 400;
        let mut rel: Vec<f64> = (0..paths)
            .map(|i| {
                let (b, q) = brownian(derive_seed(77, i), 10_000);
                let lvl = Surface::level(0.0);
                let occ = local_time_occupation(&b, &lvl, 0.01, Side::Right, &q).unwrap().terminal();
                let mol = local_time_mollifier(&b, &lvl, 100.0, &MollifierSpec::parabolic(), &q).unwrap().terminal();
                (mol - occ).abs() / occ.max(1e-12)
            })
            .collect();
        rel.sort_by(f64::total_cmp);
        let median = rel[paths as usize / 2];
        assert!(median < 0.10, "median relative discrepancy {median}");
    }

    #[test]
    fn occupation_formula_examples() {
        let (b, q) = brownian(5, 10_000);
        let (lo, hi) = b.x().iter().fold((f64::INFINITY, f64::NEG_INFINITY), |(l, h), &v| (l.min(v), h.max(v)));
        let levels: Vec<f64> = (0..200).map(|i| lo - 0.01 + (hi - lo + 0.01) * i as f64 / 199.0).collect();
        let zero = occupation_formula_check(&b, |_| 0.0, &levels, 0.01, &q).unwrap();
        assert_eq!((zero.lhs, zero.rhs), (0.0, 0.0));
        let one = occupation_formula_check(&b, |_| 1.0, &levels, 0.01, &q).unwrap();
        assert!((one.lhs - 1.0).abs() < 1e-12);
        assert!(one.relative_error < 0.05, "{one:?}");
    }

    #[test]
    fn occupation_formula_gaussian_bump_in_mean() {
        let paths = 1_000;
        let (mut l, mut r) = (0.0, 0.0);
        let bump = |a: f64| (-a * a / 0.5).exp();
        let levels: Vec<f64> = (0..400).map(|i| -5.0 + 10.0 * i as f64 / 399.0).collect();
        for i in 0..paths {
            let (b, q) = brownian(derive_seed(6, i), 2_000);
            let c = occupation_formula_check(&b, bump, &levels, 0.05, &q).unwrap();
            l += c.lhs;
            r += c.rhs;
        }
        assert!(((l - r) / l).abs() < 0.05, "lhs {l} rhs {r}");
    }
}
