use super::{
    FormulaError, FormulaInputs, FormulaReport, GeneratorSpec, IndicatorMode, PiecewiseSurfaceFunction, ReportMetadata,
    StepRates, Variant,
};
use crate::calculus::Segment;
use crate::localtime::{local_time_mollifier, local_time_occupation, LocalTimeSeries, Side};
use crate::paths::{PathBundle, PathState};
use crate::surfaces::Branch;

/// Accumulated pieces of one pass over the path.
#[derive(Debug, Default, Clone, Copy)]
struct Sweep {
    lhs: f64,
    /// `∫ F_t ds` along the drift segments.
    seg_t: f64,
    /// `∫ F_a dA^c` along the drift segments.
    seg_a: f64,
    /// `∫ F_x dK^c` along the drift segments.
    seg_x: f64,
    /// `Σ F_x(P̃) ΔM` under the indicator mode.
    mart: f64,
    /// `Σ F_x(P̃) ΔM` with the closed lower branch and no indicator.
    mart_plain: f64,
    /// `Σ ½(F_x(P̃+) + F_x(P̃−)) ΔM`.
    mart_avg: f64,
    /// `½ Σ F_xx(P̃) Δ[X]^c` under the indicator mode.
    qv_term: f64,
    /// `Σ F(P_k) − F(L_k)`.
    jumps: f64,
    /// `Σ F_x(L_k) ΔX_k`, lower branch on the surface.
    jump_fx_dx: f64,
    /// `Σ ½(F_x(L+) + F_x(L−)) ΔX_k`.
    jump_avg_fx_dx: f64,
    /// `Σ ½(F_a(L+) + F_a(L−)) ΔA_k`.
    jump_avg_fa_da: f64,
    /// Steps whose predictable point lies exactly on the surface.
    hits: usize,
    /// Strict-indicator-dropped mass of the dB and d[X]^c integrands.
    dropped: f64,
}

fn predictable_point(bundle: &PathBundle, k: usize) -> (PathState, PathState) {
    let d = bundle.decomposition().expect("checked by caller");
    let p0 = bundle.state(k - 1);
    let pt = PathState {
        t: bundle.grid().time(k),
        a: p0.a + d.a_drift[k],
        x: p0.x + d.x_drift[k],
    };
    (p0, pt)
}

fn check_inputs(inputs: &FormulaInputs<'_>) -> Result<(), FormulaError> {
    if inputs.bundle.decomposition().is_none() {
        return Err(FormulaError::MissingDecomposition);
    }
    if inputs.qv.len() != inputs.bundle.len() {
        return Err(FormulaError::Misaligned {
            expected: inputs.bundle.len(),
            found: inputs.qv.len(),
        });
    }
    Ok(())
}

fn sweep(psf: &PiecewiseSurfaceFunction, inputs: &FormulaInputs<'_>) -> Result<Sweep, FormulaError> {
    check_inputs(inputs)?;
    let bundle = inputs.bundle;
    let d = bundle.decomposition().expect("checked above");
    let q = inputs.qv.increments();
    let grid = bundle.grid();
    let strict = inputs.indicator == IndicatorMode::Strict;
    let mut s = Sweep {
        lhs: psf.value(bundle.state(bundle.len() - 1)) - psf.value(bundle.state(0)),
        ..Sweep::default()
    };

    for k in 1..bundle.len() {
        let (p0, pt) = predictable_point(bundle, k);
        let (dt, da, dk) = (grid.step(k), d.a_drift[k], d.x_drift[k]);
        let seg = Segment { p0, p1: pt };
        let [it, ia, ix] = seg.integrate_n(&psf.surface, |p, br| {
            [
                psf.d_t(br, p),
                if da != 0.0 { psf.d_a(br, p) } else { 0.0 },
                if dk != 0.0 { psf.d_x(br, p) } else { 0.0 },
            ]
        });
        s.seg_t += it * dt;
        s.seg_a += ia * da;
        s.seg_x += ix * dk;

        let b = psf.surface.eval(pt.t, pt.a);
        let on = pt.x == b;
        let br = if pt.x <= b { Branch::Lower } else { Branch::Upper };
        let dm = d.x_martingale[k];
        let fx = psf.d_x(br, pt);
        let fxx = if q[k] != 0.0 { psf.d_xx(br, pt) } else { 0.0 };
        s.mart_plain += fx * dm;
        if on {
            s.hits += 1;
            s.mart_avg += 0.5 * (psf.d_x(Branch::Lower, pt) + psf.d_x(Branch::Upper, pt)) * dm;
        } else {
            s.mart_avg += fx * dm;
        }
        if on && strict {
            s.dropped += (fx * dm).abs() + (0.5 * fxx * q[k]).abs();
        } else {
            s.mart += fx * dm;
            s.qv_term += 0.5 * fxx * q[k];
        }

        if grid.is_jump(k) {
            let l = bundle.left_state(k);
            let p = bundle.state(k);
            let (dx, dav) = (p.x - l.x, p.a - l.a);
            s.jumps += psf.value(p) - psf.value(l);
            s.jump_fx_dx += psf.d_x(psf.branch(l), l) * dx;
            s.jump_avg_fx_dx += psf.averaged(l, |b| &b.d_x) * dx;
            s.jump_avg_fa_da += psf.averaged(l, |b| &b.d_a) * dav;
        }
    }
    Ok(s)
}

/// `Σ ½ fx_jump(t_{k-1}, A_{t_{k-1}}) Δℓ_k`; the estimator's support stands in for `1{X = b}`.
fn local_time_term(psf: &PiecewiseSurfaceFunction, bundle: &PathBundle, lt: &LocalTimeSeries) -> f64 {
    let mut acc = 0.0;
    for k in 1..bundle.len() {
        let dl = lt.increment(k);
        if dl != 0.0 {
            let p = bundle.state(k - 1);
            acc += 0.5 * psf.fx_jump(p.t, p.a) * dl;
        }
    }
    acc
}

fn right_local_time(psf: &PiecewiseSurfaceFunction, inputs: &FormulaInputs<'_>) -> Result<LocalTimeSeries, FormulaError> {
    Ok(local_time_mollifier(
        inputs.bundle,
        &psf.surface,
        1.0 / inputs.bandwidth,
        &inputs.mollifier,
        inputs.qv,
    )?)
}

fn symmetric_local_time(
    psf: &PiecewiseSurfaceFunction,
    inputs: &FormulaInputs<'_>,
) -> Result<LocalTimeSeries, FormulaError> {
    Ok(local_time_occupation(
        inputs.bundle,
        &psf.surface,
        inputs.bandwidth,
        Side::Symmetric,
        inputs.qv,
    )?)
}

fn metadata(inputs: &FormulaInputs<'_>, s: &Sweep, lt: Option<&LocalTimeSeries>) -> ReportMetadata {
    let grid = inputs.bundle.grid();
    let dt = (1..grid.len()).map(|k| grid.step(k)).fold(0.0, f64::max);
    let mut aux = vec![
        ("surface_hits".to_string(), s.hits as f64),
        ("indicator_dropped".to_string(), s.dropped),
    ];
    if let Some(lt) = lt {
        aux.push(("local_time_total".to_string(), lt.terminal()));
    }
    ReportMetadata {
        dt,
        bandwidth: inputs.bandwidth,
        seed: None,
        local_time: lt.map(|l| {
            let side = match l.side() {
                Side::Right => "right",
                Side::Symmetric => "symmetric",
            };
            format!("{}:{side}", l.estimator())
        }),
        indicator: inputs.indicator,
        hypothesis: None,
        aux,
    }
}

/// Tanaka's formula for `|X − level|` with the right mollifier local time:
/// `|X_t − a| − |X_0 − a| = ∫ sgn(X_{s−} − a) dX_s + Σ (Δ|X − a| − sgn ΔX) + ℓ^a_t`.
pub fn verify_tanaka(inputs: &FormulaInputs<'_>, level: f64) -> Result<FormulaReport, FormulaError> {
    let psf = PiecewiseSurfaceFunction::abs_level(level);
    let s = sweep(&psf, inputs)?;
    let lt = right_local_time(&psf, inputs)?;
    let terms = vec![
        ("sgn_integral", s.seg_x + s.mart_plain + s.jump_fx_dx),
        ("jump_correction", s.jumps - s.jump_fx_dx),
        ("local_time", local_time_term(&psf, inputs.bundle, &lt)),
    ];
    Ok(FormulaReport::assemble(Variant::Tanaka, s.lhs, terms, metadata(inputs, &s, Some(&lt))))
}

/// Local time on curves for a continuous diffusion: generator and `σF_x` integrals off
/// the surface plus `½ fx_jump` against the symmetric local time.
pub fn verify_ltc_diffusion(
    psf: &PiecewiseSurfaceFunction,
    inputs: &FormulaInputs<'_>,
) -> Result<FormulaReport, FormulaError> {
    if inputs.bundle.has_jumps() {
        return Err(FormulaError::JumpsNotAllowed(inputs.bundle.jumps().len()));
    }
    let s = sweep(psf, inputs)?;
    let lt = symmetric_local_time(psf, inputs)?;
    let terms = vec![
        ("generator", s.seg_t + s.seg_a + s.seg_x + s.qv_term),
        ("martingale", s.mart),
        ("local_time", local_time_term(psf, inputs.bundle, &lt)),
    ];
    Ok(FormulaReport::assemble(
        Variant::LtcDiffusion,
        s.lhs,
        terms,
        metadata(inputs, &s, Some(&lt)),
    ))
}

/// Strong-smoothness surfaces formula: averaged one-sided derivatives against
/// `ds`, `dA`, `dX`, the `d[X]^c` term, symmetric local time and the full jump
/// compensation.
pub fn verify_surfaces_strong(
    psf: &PiecewiseSurfaceFunction,
    inputs: &FormulaInputs<'_>,
) -> Result<FormulaReport, FormulaError> {
    let s = sweep(psf, inputs)?;
    let lt = symmetric_local_time(psf, inputs)?;
    let terms = vec![
        ("time", s.seg_t),
        ("surface_driver", s.seg_a + s.jump_avg_fa_da),
        ("finite_variation", s.seg_x + s.jump_avg_fx_dx),
        ("martingale", s.mart_avg),
        ("quadratic_variation", s.qv_term),
        ("local_time", local_time_term(psf, inputs.bundle, &lt)),
        ("jumps", s.jumps),
        ("jump_surface_driver", -s.jump_avg_fa_da),
        ("jump_finite_variation", -s.jump_avg_fx_dx),
    ];
    Ok(FormulaReport::assemble(
        Variant::SurfacesStrong,
        s.lhs,
        terms,
        metadata(inputs, &s, Some(&lt)),
    ))
}

/// Jump-diffusion formula with a Lipschitz surface: `σF_x dB` and generator
/// integrals off the surface, `½ fx_jump dℓ^b` (right local time) and bare jump increments of `F`.
pub fn verify_jump_ltc(psf: &PiecewiseSurfaceFunction, inputs: &FormulaInputs<'_>) -> Result<FormulaReport, FormulaError> {
    if !psf.surface.is_lipschitz() {
        return Err(FormulaError::NotLipschitz(psf.surface.name().to_string()));
    }
    let s = sweep(psf, inputs)?;
    let lt = right_local_time(psf, inputs)?;
    let terms = vec![
        ("martingale", s.mart),
        ("generator", s.seg_t + s.seg_a + s.seg_x + s.qv_term),
        ("local_time", local_time_term(psf, inputs.bundle, &lt)),
        ("jumps", s.jumps),
    ];
    let mut meta = metadata(inputs, &s, Some(&lt));
    // Jumps carry no martingale part, so the ΔM-compensated convention coincides.
    meta.aux.push(("jumps_dm_convention".to_string(), s.jumps));
    Ok(FormulaReport::assemble(Variant::JumpLtc, s.lhs, terms, meta))
}

/// Largest `|fx_jump|` over every state and pre-jump state of the path.
fn path_fx_jump(psf: &PiecewiseSurfaceFunction, bundle: &PathBundle) -> f64 {
    let states = (0..bundle.len()).map(|k| bundle.state(k));
    let lefts = bundle.jumps().iter().map(|j| bundle.left_state(j.index));
    states.chain(lefts).map(|p| psf.fx_jump(p.t, p.a).abs()).fold(0.0, f64::max)
}

/// Smooth-fit formula: no local-time term, `λ_X F_x dY` and the compensated jump sum.
pub fn verify_smooth_fit(
    psf: &PiecewiseSurfaceFunction,
    inputs: &FormulaInputs<'_>,
) -> Result<FormulaReport, FormulaError> {
    let gap = path_fx_jump(psf, inputs.bundle);
    if !(gap <= 1e-9) {
        return Err(FormulaError::SmoothFitViolated(gap));
    }
    let s = sweep(psf, inputs)?;
    let terms = vec![
        ("martingale", s.mart),
        ("jump_driver", s.jump_fx_dx),
        ("generator", s.seg_t + s.seg_a + s.seg_x + s.qv_term),
        ("jump_compensation", s.jumps - s.jump_fx_dx),
    ];
    let mut meta = metadata(inputs, &s, None);
    meta.aux.push(("max_fx_jump".to_string(), gap));
    Ok(FormulaReport::assemble(Variant::SmoothFit, s.lhs, terms, meta))
}

/// `∫ H(s−, A_{s−}, X_{s−}) dλ(s)` with the density integrated along drift segments
/// and atoms snapped right onto the grid and read at the pre-jump state.
fn generator_integral(
    psf: &PiecewiseSurfaceFunction,
    generator: &GeneratorSpec,
    inputs: &FormulaInputs<'_>,
) -> Result<f64, FormulaError> {
    let bundle = inputs.bundle;
    let d = bundle.decomposition().expect("checked by caller");
    let grid = bundle.grid();
    let q = inputs.qv.increments();
    let rates = |k: usize| {
        let k = k.max(1);
        let dt = grid.step(k);
        StepRates {
            drift_x: d.x_drift[k] / dt,
            drift_a: d.a_drift[k] / dt,
            qv: q[k] / dt,
        }
    };
    let mut acc = 0.0;
    if generator.lambda.has_density() {
        for k in 1..bundle.len() {
            let (p0, pt) = predictable_point(bundle, k);
            let r = rates(k);
            let seg = Segment { p0, p1: pt };
            acc += grid.step(k)
                * seg.integrate(&psf.surface, |p, br| (generator.h)(p, br, &r) * generator.lambda.density(p.t));
        }
    }
    for (k, mass) in generator.lambda.atom_indices(grid)? {
        let l = bundle.left_state(k);
        acc += (generator.h)(l, psf.branch(l), &rates(k)) * mass;
    }
    Ok(acc)
}

/// General formula for a semimartingale `X = X_0 + K + M`:
/// `∫H dλ + ∫F_x dM + ½∫fx_jump dℓ^b + Σ (ΔF − F_x ΔM)`.
pub fn verify_general(
    psf: &PiecewiseSurfaceFunction,
    generator: &GeneratorSpec,
    inputs: &FormulaInputs<'_>,
) -> Result<FormulaReport, FormulaError> {
    let s = sweep(psf, inputs)?;
    let h = generator_integral(psf, generator, inputs)?;
    let lt = right_local_time(psf, inputs)?;
    let terms = vec![
        ("h_lambda", h),
        ("martingale", s.mart_plain),
        ("local_time", local_time_term(psf, inputs.bundle, &lt)),
        ("jumps", s.jumps),
    ];
    let mut meta = metadata(inputs, &s, Some(&lt));
    meta.hypothesis = Some(format!("asserted by scenario author: {}", generator.justification));
    meta.aux.push(("jumps_bare_convention".to_string(), s.jumps));
    Ok(FormulaReport::assemble(Variant::General, s.lhs, terms, meta))
}

/// Classical Itô formula, meaningful when `F` is smooth across the surface.
pub fn verify_ito(psf: &PiecewiseSurfaceFunction, inputs: &FormulaInputs<'_>) -> Result<FormulaReport, FormulaError> {
    let s = sweep(psf, inputs)?;
    let terms = vec![
        ("generator", s.seg_t + s.seg_a + s.seg_x + s.qv_term),
        ("martingale", s.mart),
        ("jumps", s.jumps),
    ];
    Ok(FormulaReport::assemble(Variant::Ito, s.lhs, terms, metadata(inputs, &s, None)))
}

#[cfg(test)]
mod tests {
    use super::super::SmoothBranch;
    use super::*;
    use crate::calculus::{continuous_qv_measure, MeasureSpec, QvMeasure, QvMode};
    use crate::paths::{simulate_jump_diffusion, JumpLaw, JumpSource, SdeSpec};
    use crate::seed::derive_seed;
    use crate::surfaces::Surface;

    fn run(spec: &SdeSpec, n: usize, seed: u64) -> (PathBundle, QvMeasure) {
        let b = simulate_jump_diffusion(spec, 1.0, n, seed).unwrap();
        let q = continuous_qv_measure(&b, Some(spec), QvMode::Analytic).unwrap();
        (b, q)
    }

    fn median(mut v: Vec<f64>) -> f64 {
        v.sort_by(f64::total_cmp);
        v[v.len() / 2]
    }

    fn glued_quadratic() -> PiecewiseSurfaceFunction {
        let s = Surface::lipschitz("tilt", 0.5, |_, a| 1.0 + 0.5 * a);
        PiecewiseSurfaceFunction::glued(
            s.clone(),
            SmoothBranch::of_gap(&s, |_, _| 0.0, |_, _| 0.5, |u| u * u + u, |u| 2.0 * u + 1.0, |_| 2.0),
            SmoothBranch::of_gap(&s, |_, _| 0.0, |_, _| 0.5, |u| 2.0 * u, |_| 2.0, |_| 0.0),
        )
    }

    fn quadratic() -> PiecewiseSurfaceFunction {
        PiecewiseSurfaceFunction::smooth(Surface::level(0.0), SmoothBranch::of_x(|x| x * x, |x| 2.0 * x, |_| 2.0))
    }

    fn assert_rhs_is_sum(r: &FormulaReport) {
        let mut acc = 0.0;
        for (_, v) in &r.terms {
            acc += v;
        }
        assert_eq!(acc, r.rhs);
        assert_eq!(r.residual, r.lhs - r.rhs);
    }

    #[test]
    fn tanaka_exact_on_drift_path() {
        let spec = SdeSpec::new(-0.5, 0.0).with_mu_x(|_, _, _| 1.0);
        let (b, q) = run(&spec, 1000, 0);
        let r = verify_tanaka(&FormulaInputs::new(&b, &q, 0.01), 0.0).unwrap();
        assert!(r.residual.abs() < 1e-12, "{r:?}");
        assert_eq!(r.term("local_time"), Some(0.0));
        assert_rhs_is_sum(&r);
    }

    #[test]
    fn tanaka_exact_with_one_jump_and_drift() {
        let spec = SdeSpec::new(-0.3, 0.0)
            .with_mu_x(|_, _, _| 0.4)
            .with_lambda_x(|_, _, _| 1.0)
            .with_y_jumps(1.5, JumpLaw::symmetric(0.5));
        let seed = (0..200)
            .find(|&s| simulate_jump_diffusion(&spec, 1.0, 100, s).unwrap().jumps().len() == 1)
            .unwrap();
        let (b, q) = run(&spec, 100, seed);
        let r = verify_tanaka(&FormulaInputs::new(&b, &q, 0.1), 0.0).unwrap();
        assert!(r.residual.abs() < 1e-12, "{r:?}");
    }

    #[test]
    fn tanaka_brownian_median_residual() {
        // Tracks the Tanaka-vs-mollifier discrepancy; it shrinks like (dt-limited) n^{-1/2}.
        let spec = SdeSpec::brownian(0.0);
        let res: Vec<f64> = (0..300)
            .map(|i| {
                let (b, q) = run(&spec, 10_000, derive_seed(1, i));
                verify_tanaka(&FormulaInputs::new(&b, &q, 0.01), 0.0).unwrap().residual.abs()
            })
            .collect();
        let m = median(res);
        assert!(m < 0.15, "median |residual| {m}");
    }

    #[test]
    fn smooth_function_reduces_to_ito_in_every_variant() {
        let spec = SdeSpec::brownian(0.2)
            .with_mu_x(|_, _, x| -x)
            .with_lambda_x(|_, _, _| 1.0)
            .with_y_jumps(2.0, JumpLaw::symmetric(0.3));
        let (b, q) = run(&spec, 2000, 17);
        let psf = quadratic();
        let inputs = FormulaInputs::new(&b, &q, 0.05);
        let ito = verify_ito(&psf, &inputs).unwrap();
        let others = [
            verify_surfaces_strong(&psf, &inputs).unwrap(),
            verify_jump_ltc(&psf, &inputs).unwrap(),
            verify_smooth_fit(&psf, &inputs).unwrap(),
            verify_general(&psf, &GeneratorSpec::diffusion_generator(&psf), &inputs).unwrap(),
        ];
        for r in &others {
            assert_rhs_is_sum(r);
            assert!((r.residual - ito.residual).abs() < 1e-10, "{:?} vs {}", r.variant, ito.residual);
            if let Some(l) = r.term("local_time") {
                assert_eq!(l, 0.0);
            }
        }
    }

    #[test]
    fn degenerate_paths_close_exactly() {
        let spec = SdeSpec::new(0.6, 0.2)
            .with_mu_x(|t, _, x| 0.5 - x + t)
            .with_mu_a(|_, _, _| 0.3)
            .with_lambda_x(|_, a, _| 1.0 + 0.1 * a)
            .with_lambda_a(|_, _, x| 0.2 * x)
            .with_y_jumps(3.0, JumpLaw::symmetric(0.5))
            .with_a_driver(JumpSource::Y);
        let psf = glued_quadratic();
        for seed in 0..20 {
            let (b, q) = run(&spec, 200, seed);
            let inputs = FormulaInputs::new(&b, &q, 0.05);
            let reports = [
                verify_surfaces_strong(&psf, &inputs).unwrap(),
                verify_jump_ltc(&psf, &inputs).unwrap(),
                verify_general(&psf, &GeneratorSpec::diffusion_generator(&psf), &inputs).unwrap(),
            ];
            for r in reports {
                assert!(r.residual.abs() < 1e-10, "{:?}: {}", r.variant, r.residual);
            }
        }
    }

    #[test]
    fn surfaces_strong_has_nine_terms() {
        let (b, q) = run(&SdeSpec::brownian(0.0), 100, 1);
        let r = verify_surfaces_strong(&quadratic(), &FormulaInputs::new(&b, &q, 0.1)).unwrap();
        assert_eq!(r.terms.len(), 9);
    }

    #[test]
    fn variant_preconditions() {
        let spec = SdeSpec::brownian(0.0)
            .with_lambda_x(|_, _, _| 1.0)
            .with_y_jumps(5.0, JumpLaw::symmetric(0.2));
        let (b, q) = run(&spec, 100, 3);
        let inputs = FormulaInputs::new(&b, &q, 0.1);
        assert!(matches!(
            verify_ltc_diffusion(&quadratic(), &inputs),
            Err(FormulaError::JumpsNotAllowed(_))
        ));
        let curvy = Surface::new("root", |_, a: f64| a.abs().sqrt());
        let psf = PiecewiseSurfaceFunction::abs_level(0.0);
        let psf = PiecewiseSurfaceFunction { surface: curvy, ..psf };
        assert!(matches!(verify_jump_ltc(&psf, &inputs), Err(FormulaError::NotLipschitz(_))));
        assert!(matches!(
            verify_smooth_fit(&PiecewiseSurfaceFunction::abs_level(0.0), &inputs),
            Err(FormulaError::SmoothFitViolated(_))
        ));
        let g = b.grid().clone();
        let obs = PathBundle::observed(g, b.a().to_vec(), b.brownian().to_vec());
        assert!(obs.is_err() || {
            let obs = obs.unwrap();
            matches!(
                verify_ito(&quadratic(), &FormulaInputs::new(&obs, &q, 0.1)),
                Err(FormulaError::MissingDecomposition)
            )
        });
    }

    #[test]
    fn general_with_single_atom_and_linear_f_is_exact() {
        let spec = SdeSpec::brownian(0.5)
            .with_lambda_x(|_, _, _| 1.0)
            .with_y_jumps(3.0, JumpLaw::symmetric(0.4));
        let (b, q) = run(&spec, 500, 8);
        let lin = PiecewiseSurfaceFunction::smooth(Surface::level(0.0), SmoothBranch::of_x(|x| 2.0 * x + 1.0, |_| 2.0, |_| 0.0));
        let gen = GeneratorSpec::new(|_, _, _| 0.0, MeasureSpec::zero().atom(0.5, 2.0), "H vanishes");
        let r = verify_general(&lin, &gen, &FormulaInputs::new(&b, &q, 0.1)).unwrap();
        assert!(r.residual.abs() < 1e-12, "{r:?}");
    }

    #[test]
    fn variants_agree_on_brownian_abs() {
        let spec = SdeSpec::brownian(0.0);
        let abs = PiecewiseSurfaceFunction::abs_level(0.0);
        let mut d = [vec![], vec![], vec![]];
        for i in 0..200 {
            let (b, q) = run(&spec, 10_000, derive_seed(4, i));
            let inputs = FormulaInputs::new(&b, &q, 0.01);
            let t = verify_tanaka(&inputs, 0.0).unwrap();
            let l = verify_ltc_diffusion(&abs, &inputs).unwrap();
            let j = verify_jump_ltc(&abs, &inputs).unwrap();
            let g = verify_general(&abs, &GeneratorSpec::zero(), &inputs).unwrap();
            d[0].push((t.residual - l.residual).abs());
            d[1].push((t.residual - j.residual).abs());
            d[2].push((t.residual - g.residual).abs());
            assert!((t.residual - g.residual).abs() < 1e-12);
        }
        for v in d {
            let m = median(v);
            assert!(m < 0.05, "median discrepancy {m}");
        }
    }

    #[test]
    fn generator_path_matches_diffusion_report() {
        let spec = SdeSpec::brownian(0.1).with_mu_x(|_, _, x| -0.5 * x);
        let s = Surface::lipschitz("wave", 0.5 * std::f64::consts::PI, |t: f64, _| 0.25 * (2.0 * std::f64::consts::PI * t).sin());
        let b_t = |t: f64, _| 0.5 * std::f64::consts::PI * (2.0 * std::f64::consts::PI * t).cos();
        let psf = PiecewiseSurfaceFunction::glued(
            s.clone(),
            SmoothBranch::zero(),
            SmoothBranch::of_gap(&s, b_t, |_, _| 0.0, |u| u, |_| 1.0, |_| 0.0),
        );
        let gen = GeneratorSpec::diffusion_generator(&psf);
        let mut gaps = vec![];
        for i in 0..200 {
            let (b, q) = run(&spec, 2_000, derive_seed(10, i));
            let inputs = FormulaInputs::new(&b, &q, 3.0 * (1.0f64 / 2000.0).sqrt());
            let l = verify_ltc_diffusion(&psf, &inputs).unwrap();
            let g = verify_general(&psf, &gen, &inputs).unwrap();
            gaps.push((l.term("generator").unwrap() - g.term("h_lambda").unwrap()).abs());
            assert!((l.term("martingale").unwrap() - g.term("martingale").unwrap()).abs() < 1e-12);
        }
        assert!(median(gaps) < 1e-6);
    }
}
