use rand::Rng;
use rand_distr::{Distribution, Exp, Normal, Poisson};
use serde::{Deserialize, Serialize};

use super::PathError;
use crate::seed;

/// Jump-size law of a compound-Poisson driver.
///
/// Every variant has a finite mean absolute size, so the driver has
/// bounded variation of jumps on compacts.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "law", rename_all = "snake_case")]
pub enum JumpLaw {
    /// `up` with probability `p_up`, otherwise `down`.
    TwoPoint { up: f64, down: f64, p_up: f64 },
    Uniform { low: f64, high: f64 },
    Gaussian { mean: f64, std_dev: f64 },
    /// Positive sizes with the given rate (mean `1 / rate`).
    Exponential { rate: f64 },
}

impl JumpLaw {
    /// Symmetric two-point law `±size`.
    pub fn symmetric(size: f64) -> Self {
        JumpLaw::TwoPoint {
            up: size,
            down: -size,
            p_up: 0.5,
        }
    }

    pub fn validate(&self) -> Result<(), PathError> {
        let ok = match *self {
            JumpLaw::TwoPoint { up, down, p_up } => {
                up.is_finite() && down.is_finite() && (0.0..=1.0).contains(&p_up)
            }
            JumpLaw::Uniform { low, high } => low.is_finite() && high.is_finite() && low <= high,
            JumpLaw::Gaussian { mean, std_dev } => mean.is_finite() && std_dev.is_finite() && std_dev >= 0.0,
            JumpLaw::Exponential { rate } => rate.is_finite() && rate > 0.0,
        };
        if ok {
            Ok(())
        } else {
            Err(PathError::InvalidJumpLaw(format!("{self:?}")))
        }
    }

    pub fn mean_abs(&self) -> f64 {
        match *self {
            JumpLaw::TwoPoint { up, down, p_up } => p_up * up.abs() + (1.0 - p_up) * down.abs(),
            JumpLaw::Uniform { low, high } => {
                if low >= 0.0 || high <= 0.0 {
                    0.5 * (low + high).abs()
                } else {
                    (low * low + high * high) / (2.0 * (high - low))
                }
            }
            JumpLaw::Gaussian { mean, std_dev } => {
                if std_dev == 0.0 {
                    return mean.abs();
                }
                let z = mean / std_dev;
                let pdf = (-0.5 * z * z).exp() / (2.0 * std::f64::consts::PI).sqrt();
                std_dev * 2.0 * pdf + mean * (1.0 - 2.0 * normal_cdf(-z))
            }
            JumpLaw::Exponential { rate } => 1.0 / rate,
        }
    }

    pub fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> f64 {
        match *self {
            JumpLaw::TwoPoint { up, down, p_up } => {
                if rng.random::<f64>() < p_up {
                    up
                } else {
                    down
                }
            }
            JumpLaw::Uniform { low, high } => low + (high - low) * rng.random::<f64>(),
            JumpLaw::Gaussian { mean, std_dev } => Normal::new(mean, std_dev)
                .expect("validated law")
                .sample(rng),
            JumpLaw::Exponential { rate } => Exp::new(rate).expect("validated law").sample(rng),
        }
    }
}

fn normal_cdf(x: f64) -> f64 {
    0.5 * erfc(-x / std::f64::consts::SQRT_2)
}

fn erfc(x: f64) -> f64 {
    // Numerical Recipes erfcc, relative error < 1.2e-7.
    let z = x.abs();
    let t = 1.0 / (1.0 + 0.5 * z);
    let r = t * (-z * z - 1.265_512_23
        + t * (1.000_023_68
            + t * (0.374_091_96
                + t * (0.096_784_18
                    + t * (-0.186_288_06
                        + t * (0.278_868_07
                            + t * (-1.135_203_98
                                + t * (1.488_515_87 + t * (-0.822_152_23 + t * 0.170_872_77)))))))))
        .exp();
    if x >= 0.0 {
        r
    } else {
        2.0 - r
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct JumpEvent {
    pub time: f64,
    pub size: f64,
}

/// Finitely many jumps of a pure-jump driver on `(0, t_end]`.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct JumpTrain {
    events: Vec<JumpEvent>,
}

impl JumpTrain {
    pub fn new(mut events: Vec<JumpEvent>, t_end: f64) -> Result<Self, PathError> {
        events.sort_by(|a, b| a.time.total_cmp(&b.time));
        for e in &events {
            if !(e.time > 0.0 && e.time <= t_end) {
                return Err(PathError::JumpTimeOutOfRange { time: e.time, t_end });
            }
            if !e.size.is_finite() {
                return Err(PathError::NonFinite {
                    quantity: "jump size",
                    time: e.time,
                });
            }
        }
        if events.windows(2).any(|w| w[1].time <= w[0].time) {
            return Err(PathError::Inconsistent("jump times must be distinct".into()));
        }
        Ok(Self { events })
    }

    pub fn events(&self) -> &[JumpEvent] {
        &self.events
    }

    pub fn len(&self) -> usize {
        self.events.len()
    }

    pub fn is_empty(&self) -> bool {
        self.events.is_empty()
    }

    pub fn times(&self) -> impl Iterator<Item = f64> + '_ {
        self.events.iter().map(|e| e.time)
    }

    /// `Σ |ΔY_s|` over the train.
    pub fn total_variation(&self) -> f64 {
        self.events.iter().map(|e| e.size.abs()).sum()
    }
}

/// Compound-Poisson path on `(0, t_end]`: Poisson count, uniform times, i.i.d. sizes.
pub fn simulate_compound_poisson(
    rate: f64,
    jump_law: JumpLaw,
    t_end: f64,
    seed: u64,
) -> Result<JumpTrain, PathError> {
    if !(rate >= 0.0 && rate.is_finite()) {
        return Err(PathError::NegativeRate(rate));
    }
    if !(t_end > 0.0 && t_end.is_finite()) {
        return Err(PathError::NonPositiveHorizon(t_end));
    }
    jump_law.validate()?;
    let mean = rate * t_end;
    if mean == 0.0 {
        return Ok(JumpTrain::default());
    }
    let mut rng = seed::stream(seed);
    let count = Poisson::new(mean)
        .map_err(|e| PathError::InvalidJumpLaw(e.to_string()))?
        .sample(&mut rng) as usize;
    let mut times: Vec<f64> = Vec::with_capacity(count);
    while times.len() < count {
        // (0, t_end]: 1 - U with U in [0, 1)
        let t = t_end * (1.0 - rng.random::<f64>());
        if !times.contains(&t) {
            times.push(t);
        }
    }
    times.sort_by(f64::total_cmp);
    let events = times
        .into_iter()
        .map(|time| JumpEvent {
            time,
            size: jump_law.sample(&mut rng),
        })
        .collect();
    JumpTrain::new(events, t_end)
}
