use rand_distr::{Distribution, StandardNormal};

use super::TimeGrid;
use crate::seed;

/// Gaussian increments `ΔB_k ~ N(0, t_k - t_{k-1})`; entry 0 is zero.
pub(crate) fn brownian_increments(grid: &TimeGrid, seed: u64) -> Vec<f64> {
    let mut rng = seed::stream(seed);
    let mut inc = Vec::with_capacity(grid.len());
    inc.push(0.0);
    for k in 1..grid.len() {
        let z: f64 = StandardNormal.sample(&mut rng);
        inc.push(z * grid.step(k).sqrt());
    }
    inc
}

pub(crate) fn cumulative(increments: &[f64]) -> Vec<f64> {
    let mut acc = 0.0;
    increments
        .iter()
        .map(|d| {
            acc += d;
            acc
        })
        .collect()
}

/// Standard Brownian motion sampled on `grid`, starting at 0.
pub fn simulate_brownian(grid: &TimeGrid, seed: u64) -> Vec<f64> {
    cumulative(&brownian_increments(grid, seed))
}
