//! Gluing across a non-Lipschitz surface where F_x has no jump: no local-time term appears.

use ltsurf::harness::{convergence_study, find_scenario, run_scenario, Params, ScenarioConfig};

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let model = find_scenario("smooth_fit_sqrt_surface")?.build(&Params::new())?;
    println!(
        "surface {} Lipschitz: {}; max |F_x jump| on the test box: {:.2e}",
        model.psf.surface.name(),
        model.psf.surface.is_lipschitz(),
        model.psf.max_fx_jump(model.test_box, 201)
    );

    let base = ScenarioConfig::new("smooth_fit_sqrt_surface").with_paths(300).with_seed(5);
    let s = run_scenario(&base)?;
    let names: Vec<_> = s.terms.iter().map(|(n, _)| n.as_str()).collect();
    println!("terms: {names:?}");

    let table = convergence_study(&base, &[1e-2, 1e-3, 1e-4])?;
    for row in &table.rows {
        println!("dt {:.0e}: median |residual| {:.5}", row.dt, row.abs_residual_median);
    }
    Ok(())
}
