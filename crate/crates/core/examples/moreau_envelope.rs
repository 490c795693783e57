//! Moreau envelopes of the square-root surface increase to b as the penalty grows.

use ltsurf::surfaces::{moreau_envelope, SearchBox, Surface};

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let b = Surface::new("signed_sqrt", |_, a: f64| a.signum() * a.abs().sqrt());
    let bx = SearchBox::new((0.0, 1.0), (-2.0, 2.0));
    println!("{:>6} {:>10} {:>10} {:>10} {:>10}", "a", "b", "m=1", "m=10", "m=100");
    for a in [-1.0, -0.25, 0.0, 0.01, 0.25, 1.0] {
        let env: Vec<f64> = [1.0, 10.0, 100.0]
            .iter()
            .map(|&m| moreau_envelope(&b, m, (0.5, a), bx, 41))
            .collect::<Result<_, _>>()?;
        println!("{a:>6.2} {:>10.5} {:>10.5} {:>10.5} {:>10.5}", b.eval(0.5, a), env[0], env[1], env[2]);
    }
    Ok(())
}
