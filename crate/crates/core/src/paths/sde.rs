use std::fmt;
use std::sync::Arc;

use super::brownian::{brownian_increments, cumulative};
use super::{
    simulate_compound_poisson, Decomposition, JumpLaw, JumpRecord, JumpTrain, PathBundle, PathError,
    TimeGrid,
};
use crate::seed::derive_seed;

/// A coefficient `f(t, a, x)`.
pub type FnOfState = Arc<dyn Fn(f64, f64, f64) -> f64 + Send + Sync>;

/// Which pure-jump driver moves `A`.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum JumpSource {
    /// The same driver `Y` that moves `X`.
    Y,
    /// An independent driver `Z`.
    Z,
}

const STREAM_Y: u64 = 1;
const STREAM_Z: u64 = 2;
const STREAM_B: u64 = 3;

/// Coefficients of
///
/// ```text
/// dX = μ_X dt + σ dB + λ_X dY,    dA = μ_A dt + λ_A dZ   (or dY)
/// ```
///
/// all evaluated at `(t-, A_{t-}, X_{t-})`, with compound-Poisson `Y`, `Z`.
#[derive(Clone)]
pub struct SdeSpec {
    pub mu_x: FnOfState,
    pub sigma: FnOfState,
    pub lambda_x: FnOfState,
    pub mu_a: FnOfState,
    pub lambda_a: FnOfState,
    pub rate_y: f64,
    pub rate_z: f64,
    pub jump_law_y: JumpLaw,
    pub jump_law_z: JumpLaw,
    pub a_driver: JumpSource,
    pub x0: f64,
    pub a0: f64,
}

fn constant(c: f64) -> FnOfState {
    Arc::new(move |_, _, _| c)
}

impl SdeSpec {
    /// All coefficients zero and no jumps.
    pub fn new(x0: f64, a0: f64) -> Self {
        Self {
            mu_x: constant(0.0),
            sigma: constant(0.0),
            lambda_x: constant(0.0),
            mu_a: constant(0.0),
            lambda_a: constant(0.0),
            rate_y: 0.0,
            rate_z: 0.0,
            jump_law_y: JumpLaw::symmetric(1.0),
            jump_law_z: JumpLaw::symmetric(1.0),
            a_driver: JumpSource::Z,
            x0,
            a0,
        }
    }

    /// Standard Brownian motion started at `x0`.
    pub fn brownian(x0: f64) -> Self {
        Self::new(x0, 0.0).with_sigma(|_, _, _| 1.0)
    }

    pub fn with_mu_x(mut self, f: impl Fn(f64, f64, f64) -> f64 + Send + Sync + 'static) -> Self {
        self.mu_x = Arc::new(f);
        self
    }

    pub fn with_sigma(mut self, f: impl Fn(f64, f64, f64) -> f64 + Send + Sync + 'static) -> Self {
        self.sigma = Arc::new(f);
        self
    }

    pub fn with_lambda_x(mut self, f: impl Fn(f64, f64, f64) -> f64 + Send + Sync + 'static) -> Self {
        self.lambda_x = Arc::new(f);
        self
    }

    pub fn with_mu_a(mut self, f: impl Fn(f64, f64, f64) -> f64 + Send + Sync + 'static) -> Self {
        self.mu_a = Arc::new(f);
        self
    }

    pub fn with_lambda_a(mut self, f: impl Fn(f64, f64, f64) -> f64 + Send + Sync + 'static) -> Self {
        self.lambda_a = Arc::new(f);
        self
    }

    pub fn with_y_jumps(mut self, rate: f64, law: JumpLaw) -> Self {
        self.rate_y = rate;
        self.jump_law_y = law;
        self
    }

    pub fn with_z_jumps(mut self, rate: f64, law: JumpLaw) -> Self {
        self.rate_z = rate;
        self.jump_law_z = law;
        self
    }

    pub fn with_a_driver(mut self, source: JumpSource) -> Self {
        self.a_driver = source;
        self
    }

    pub fn validate(&self) -> Result<(), PathError> {
        for rate in [self.rate_y, self.rate_z] {
            if !(rate >= 0.0 && rate.is_finite()) {
                return Err(PathError::NegativeRate(rate));
            }
        }
        self.jump_law_y.validate()?;
        self.jump_law_z.validate()?;
        if !self.x0.is_finite() || !self.a0.is_finite() {
            return Err(PathError::NonFinite {
                quantity: "initial value",
                time: 0.0,
            });
        }
        Ok(())
    }

    /// True when neither driver can jump.
    pub fn is_continuous(&self) -> bool {
        self.rate_y == 0.0 && self.rate_z == 0.0
    }
}

impl fmt::Debug for SdeSpec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("SdeSpec")
            .field("rate_y", &self.rate_y)
            .field("rate_z", &self.rate_z)
            .field("jump_law_y", &self.jump_law_y)
            .field("jump_law_z", &self.jump_law_z)
            .field("a_driver", &self.a_driver)
            .field("x0", &self.x0)
            .field("a0", &self.a0)
            .finish_non_exhaustive()
    }
}

fn finite(v: f64, quantity: &'static str, time: f64) -> Result<f64, PathError> {
    if v.is_finite() {
        Ok(v)
    } else {
        Err(PathError::NonFinite { quantity, time })
    }
}

/// Per-index increments of a jump train on the grid (entry 0 is zero).
fn train_increments(train: &JumpTrain, grid: &TimeGrid) -> Vec<f64> {
    let mut inc = vec![0.0; grid.len()];
    for e in train.events() {
        let k = grid.index_of(e.time).expect("jump times are merged into the grid");
        inc[k] += e.size;
    }
    inc
}

/// Euler left-point simulation on a grid containing every jump time.
///
/// On each step the diffusion increment is applied first using coefficients
/// frozen at `(t_{k-1}, A_{t_{k-1}}, X_{t_{k-1}})`; at a flagged index the
/// resulting pre-jump values are recorded and the jumps
/// `ΔX = λ_X(t-, A_{t-}, X_{t-}) ΔY`, `ΔA = λ_A(..) ΔZ` are added.
pub fn simulate_jump_diffusion(
    spec: &SdeSpec,
    t_end: f64,
    n_steps: usize,
    seed: u64,
) -> Result<PathBundle, PathError> {
    spec.validate()?;
    let y_train = simulate_compound_poisson(spec.rate_y, spec.jump_law_y, t_end, derive_seed(seed, STREAM_Y))?;
    let z_train = match spec.a_driver {
        JumpSource::Z => simulate_compound_poisson(spec.rate_z, spec.jump_law_z, t_end, derive_seed(seed, STREAM_Z))?,
        JumpSource::Y => JumpTrain::default(),
    };
    let jump_times: Vec<f64> = y_train.times().chain(z_train.times()).collect();
    let grid = TimeGrid::build(t_end, n_steps, &jump_times)?;
    let n = grid.len();

    let dy = train_increments(&y_train, &grid);
    let dz = match spec.a_driver {
        JumpSource::Z => train_increments(&z_train, &grid),
        JumpSource::Y => dy.clone(),
    };
    let y = cumulative(&dy);
    let z = cumulative(&dz);
    let db = brownian_increments(&grid, derive_seed(seed, STREAM_B));
    let brownian = cumulative(&db);

    let mut x = Vec::with_capacity(n);
    let mut a = Vec::with_capacity(n);
    let mut d = Decomposition {
        x_drift: vec![0.0; n],
        x_martingale: vec![0.0; n],
        x_jump: vec![0.0; n],
        a_drift: vec![0.0; n],
        a_jump: vec![0.0; n],
    };
    let mut jumps = Vec::new();
    x.push(spec.x0);
    a.push(spec.a0);

    for k in 1..n {
        let t0 = grid.time(k - 1);
        let t1 = grid.time(k);
        let dt = t1 - t0;
        let (a_prev, x_prev) = (a[k - 1], x[k - 1]);

        let mu = finite((spec.mu_x)(t0, a_prev, x_prev), "drift of X", t0)?;
        let sig = finite((spec.sigma)(t0, a_prev, x_prev), "diffusion coefficient", t0)?;
        let mu_a = finite((spec.mu_a)(t0, a_prev, x_prev), "drift of A", t0)?;

        d.x_drift[k] = mu * dt;
        d.x_martingale[k] = sig * db[k];
        d.a_drift[k] = mu_a * dt;

        let x_minus = (x_prev + d.x_drift[k]) + d.x_martingale[k];
        let a_minus = a_prev + d.a_drift[k];
        finite(x_minus, "X", t1)?;
        finite(a_minus, "A", t1)?;

        let (mut x_new, mut a_new) = (x_minus, a_minus);
        if grid.is_jump(k) {
            let lx = finite((spec.lambda_x)(t1, a_minus, x_minus), "jump coefficient of X", t1)?;
            let la = finite((spec.lambda_a)(t1, a_minus, x_minus), "jump coefficient of A", t1)?;
            d.x_jump[k] = lx * dy[k];
            d.a_jump[k] = la * dz[k];
            x_new = x_minus + d.x_jump[k];
            a_new = a_minus + d.a_jump[k];
            finite(x_new, "X", t1)?;
            finite(a_new, "A", t1)?;
            jumps.push(JumpRecord {
                index: k,
                a_minus,
                x_minus,
                y_minus: y[k - 1],
                z_minus: z[k - 1],
            });
        }
        x.push(x_new);
        a.push(a_new);
    }

    PathBundle::from_parts(grid, brownian, y, z, a, x, jumps, Some(d))
}
