//! Three estimates of the Brownian local time at 0, whose mean at t = 1 is √(2/π).

use ltsurf::calculus::{continuous_qv_measure, QvMode};
use ltsurf::localtime::{local_time_mollifier, local_time_occupation, local_time_tanaka_residual, MollifierSpec, Side};
use ltsurf::paths::{simulate_jump_diffusion, SdeSpec};
use ltsurf::seed::derive_seed;
use ltsurf::surfaces::Surface;

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let spec = SdeSpec::brownian(0.0);
    let level = Surface::level(0.0);
    let (n_paths, eps) = (2000, 0.02);
    let mut sums = [0.0; 4];
    for i in 0..n_paths {
        let bundle = simulate_jump_diffusion(&spec, 1.0, 10_000, derive_seed(1, i as u64))?;
        let qv = continuous_qv_measure(&bundle, Some(&spec), QvMode::Analytic)?;
        sums[0] += local_time_occupation(&bundle, &level, eps, Side::Right, &qv)?.terminal();
        sums[1] += local_time_occupation(&bundle, &level, eps, Side::Symmetric, &qv)?.terminal();
        sums[2] += local_time_mollifier(&bundle, &level, 1.0 / eps, &MollifierSpec::parabolic(), &qv)?.terminal();
        sums[3] += local_time_tanaka_residual(&bundle, 0.0).terminal();
    }
    let names = ["occupation (right)", "occupation (symmetric)", "mollifier", "tanaka residual"];
    for (name, s) in names.iter().zip(sums) {
        println!("{name:>24}: {:.4}", s / n_paths as f64);
    }
    println!("{:>24}: {:.4}", "exact", (2.0 / std::f64::consts::PI).sqrt());
    Ok(())
}
