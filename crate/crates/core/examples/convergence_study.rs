//! Median |residual| as dt shrinks, for the smooth control and a glued function across a tilted surface.

use ltsurf::harness::{convergence_study, ScenarioConfig};

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let dts = [1e-2, 1e-3, 1e-4];
    for name in ["smooth_quadratic", "glued_quadratic_jump"] {
        let table = convergence_study(&ScenarioConfig::new(name).with_paths(500).with_seed(6), &dts)?;
        println!("{name}");
        for row in &table.rows {
            println!("  dt {:.0e}: {:.5}", row.dt, row.abs_residual_median);
        }
        println!("  successive ratios {:?}, nonincreasing: {}", table.ratios, table.nonincreasing);
    }
    Ok(())
}
