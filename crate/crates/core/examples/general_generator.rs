//! The (H, λ) form of the formula with a user-supplied H, checked against the diffusion generator.

use ltsurf::calculus::{continuous_qv_measure, MeasureSpec, QvMode};
use ltsurf::formulas::{verify_general, FormulaInputs, GeneratorSpec};
use ltsurf::harness::{find_scenario, Params};
use ltsurf::paths::simulate_jump_diffusion;

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let model = find_scenario("generator_lambda")?.build(&Params::new())?;
    let psf = model.psf.clone();
    let f = psf.clone();
    // Same H as the diffusion generator, written out by hand.
    let h = GeneratorSpec::new(
        move |p, br, r| f.d_t(br, p) + r.drift_x * f.d_x(br, p) + r.drift_a * f.d_a(br, p) + 0.5 * r.qv * f.d_xx(br, p),
        MeasureSpec::lebesgue(),
        "sectional derivatives are bounded on the localisation box",
    );
    let reference = GeneratorSpec::diffusion_generator(&psf);

    let bundle = simulate_jump_diffusion(&model.spec, 1.0, 10_000, 3)?;
    let qv = continuous_qv_measure(&bundle, Some(&model.spec), QvMode::Analytic)?;
    let inputs = FormulaInputs::new(&bundle, &qv, 0.03);
    let mine = verify_general(&psf, &h, &inputs)?;
    let theirs = verify_general(&psf, &reference, &inputs)?;
    for (name, v) in &mine.terms {
        println!("{name:>12} {v:+.6}  (reference {:+.6})", theirs.term(name).unwrap_or(f64::NAN));
    }
    println!("residual {:+.3e}", mine.residual);
    println!("hypothesis: {}", mine.metadata.hypothesis.as_deref().unwrap_or("-"));
    Ok(())
}
