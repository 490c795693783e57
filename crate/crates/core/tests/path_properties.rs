use ltsurf::paths::{simulate_jump_diffusion, JumpLaw, JumpSource, SdeSpec};
use proptest::prelude::*;

fn spec(mu: f64, sigma: f64, lam: f64, rate: f64, size: f64, shared: bool) -> SdeSpec {
    let s = SdeSpec::new(0.2, -0.1)
        .with_mu_x(move |_, _, x| mu - 0.5 * x)
        .with_sigma(move |_, a, _| sigma * (1.0 + 0.1 * a.sin()))
        .with_lambda_x(move |_, _, x| lam + 0.1 * x.cos())
        .with_mu_a(|t, _, _| t)
        .with_lambda_a(|_, _, _| 0.5)
        .with_y_jumps(rate, JumpLaw::symmetric(size))
        .with_z_jumps(rate, JumpLaw::Uniform { low: -size, high: size });
    if shared {
        s.with_a_driver(JumpSource::Y)
    } else {
        s
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(48))]

    #[test]
    fn bundles_reconstruct_and_are_jump_consistent(
        mu in -1.0f64..1.0,
        sigma in 0.0f64..2.0,
        lam in -1.0f64..1.0,
        rate in 0.0f64..8.0,
        size in 0.0f64..1.0,
        shared in any::<bool>(),
        n in 1usize..300,
        seed in any::<u64>(),
    ) {
        let s = spec(mu, sigma, lam, rate, size, shared);
        let b = simulate_jump_diffusion(&s, 1.0, n, seed).unwrap();
        prop_assert_eq!(b.reconstruct_x().unwrap(), b.x().to_vec());
        prop_assert!(b.consistency_violations().is_empty(), "{:?}", b.consistency_violations());
        for j in b.jumps() {
            let k = j.index;
            let expected = (s.lambda_x)(b.grid().time(k), j.a_minus, j.x_minus) * (b.y()[k] - j.y_minus);
            prop_assert!((b.x()[k] - j.x_minus - expected).abs() <= 1e-12 * (1.0 + expected.abs()));
        }
    }

    #[test]
    fn bundles_are_deterministic(seed in any::<u64>(), n in 1usize..200) {
        let s = spec(0.3, 1.0, 0.5, 3.0, 0.4, false);
        let a = simulate_jump_diffusion(&s, 1.0, n, seed).unwrap();
        let b = simulate_jump_diffusion(&s, 1.0, n, seed).unwrap();
        prop_assert_eq!(a.x(), b.x());
        prop_assert_eq!(a.a(), b.a());
        prop_assert_eq!(a.grid().times(), b.grid().times());
    }
}
