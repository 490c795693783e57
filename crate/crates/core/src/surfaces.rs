//! Moving surfaces `b(t, a)`, their Moreau envelopes and pathwise variation.

use std::fmt;
use std::sync::Arc;

use thiserror::Error;

use crate::paths::TimeGrid;

pub type SurfaceFn = Arc<dyn Fn(f64, f64) -> f64 + Send + Sync>;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum SurfaceError {
    #[error("penalty parameter must be positive, got {0}")]
    NonPositivePenalty(f64),
    #[error("search box is empty or not finite")]
    EmptySearchBox,
    #[error("query ({t}, {a}) lies outside the search box")]
    QueryOutsideBox { t: f64, a: f64 },
    #[error("envelope search needs at least 2 points per axis, got {0}")]
    GridTooCoarse(usize),
    #[error("path of {values} values does not match a grid of {points} points")]
    Misaligned { values: usize, points: usize },
}

/// Side of the surface: `Lower` is the closed region `x ≤ b(t, a)`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Branch {
    Lower,
    Upper,
}

/// A continuous surface `b(t, a)` with an optionally declared Lipschitz constant.
#[derive(Clone)]
pub struct Surface {
    b: SurfaceFn,
    lipschitz: Option<f64>,
    name: String,
}

impl Surface {
    pub fn new(name: impl Into<String>, b: impl Fn(f64, f64) -> f64 + Send + Sync + 'static) -> Self {
        Self {
            b: Arc::new(b),
            lipschitz: None,
            name: name.into(),
        }
    }

    /// A surface declared `L`-Lipschitz in `(t, a)`; the constant is trusted, not checked.
    pub fn lipschitz(
        name: impl Into<String>,
        constant: f64,
        b: impl Fn(f64, f64) -> f64 + Send + Sync + 'static,
    ) -> Self {
        assert!(constant >= 0.0, "Lipschitz constant must be nonnegative");
        Self {
            b: Arc::new(b),
            lipschitz: Some(constant),
            name: name.into(),
        }
    }

    /// The flat surface `b ≡ c`.
    pub fn level(c: f64) -> Self {
        Self::lipschitz(format!("level({c})"), 0.0, move |_, _| c)
    }

    #[inline]
    pub fn eval(&self, t: f64, a: f64) -> f64 {
        (self.b)(t, a)
    }

    #[inline]
    pub fn branch(&self, t: f64, a: f64, x: f64) -> Branch {
        if x <= self.eval(t, a) {
            Branch::Lower
        } else {
            Branch::Upper
        }
    }

    pub fn lipschitz_const(&self) -> Option<f64> {
        self.lipschitz
    }

    pub fn is_lipschitz(&self) -> bool {
        self.lipschitz.is_some()
    }

    pub fn name(&self) -> &str {
        &self.name
    }

    /// `b(t_k, a_k)` along a path.
    pub fn along(&self, grid: &TimeGrid, a_path: &[f64]) -> Vec<f64> {
        grid.times().iter().zip(a_path).map(|(&t, &a)| self.eval(t, a)).collect()
    }
}

impl fmt::Debug for Surface {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("Surface")
            .field("name", &self.name)
            .field("lipschitz", &self.lipschitz)
            .finish_non_exhaustive()
    }
}

/// Closed rectangle `[t.0, t.1] × [a.0, a.1]`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SearchBox {
    pub t: (f64, f64),
    pub a: (f64, f64),
}

impl SearchBox {
    pub fn new(t: (f64, f64), a: (f64, f64)) -> Self {
        Self { t, a }
    }

    pub fn is_valid(&self) -> bool {
        [self.t.0, self.t.1, self.a.0, self.a.1].iter().all(|v| v.is_finite())
            && self.t.0 <= self.t.1
            && self.a.0 <= self.a.1
    }

    pub fn contains(&self, t: f64, a: f64) -> bool {
        (self.t.0..=self.t.1).contains(&t) && (self.a.0..=self.a.1).contains(&a)
    }
}

/// Parameters of the nested grid search for the envelope infimum.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EnvelopeSearch {
    pub search_box: SearchBox,
    /// Points per axis on every level.
    pub grid_n: usize,
    /// Local refinements after the coarse pass.
    pub rounds: usize,
    /// Window reduction between consecutive refinements.
    pub shrink: f64,
}

impl EnvelopeSearch {
    pub fn new(search_box: SearchBox, grid_n: usize) -> Self {
        Self {
            search_box,
            grid_n,
            rounds: 3,
            shrink: 10.0,
        }
    }
}

fn linspace(lo: f64, hi: f64, n: usize) -> impl Iterator<Item = f64> {
    let step = if n > 1 { (hi - lo) / (n - 1) as f64 } else { 0.0 };
    (0..n).map(move |i| if i + 1 == n { hi } else { lo + step * i as f64 })
}

/// `inf_{(s,y) ∈ box} b(s,y) + (m/2)‖(t,a) − (s,y)‖²`.
///
/// Coarse `grid_n × grid_n` pass over the box, then `rounds` passes on
/// windows centred at the incumbent: the first spans the two adjacent coarse
/// cells per axis, each later one is `shrink` times narrower. The query point
/// is always a candidate, so the result never exceeds `b(query)`.
pub fn moreau_envelope_with(
    surface: &Surface,
    m: f64,
    query: (f64, f64),
    search: &EnvelopeSearch,
) -> Result<f64, SurfaceError> {
    if !(m > 0.0 && m.is_finite()) {
        return Err(SurfaceError::NonPositivePenalty(m));
    }
    let bx = search.search_box;
    if !bx.is_valid() {
        return Err(SurfaceError::EmptySearchBox);
    }
    let (t, a) = query;
    if !bx.contains(t, a) {
        return Err(SurfaceError::QueryOutsideBox { t, a });
    }
    let n = search.grid_n;
    if n < 2 {
        return Err(SurfaceError::GridTooCoarse(n));
    }
    let objective = |s: f64, y: f64| surface.eval(s, y) + 0.5 * m * ((t - s).powi(2) + (a - y).powi(2));

    let mut best = (t, a, surface.eval(t, a));
    let scan = |t_lo: f64, t_hi: f64, a_lo: f64, a_hi: f64, best: &mut (f64, f64, f64)| {
        for s in linspace(t_lo, t_hi, n) {
            for y in linspace(a_lo, a_hi, n) {
                let v = objective(s, y);
                if v < best.2 {
                    *best = (s, y, v);
                }
            }
        }
    };
    scan(bx.t.0, bx.t.1, bx.a.0, bx.a.1, &mut best);
    let mut half_t = (bx.t.1 - bx.t.0) / (n - 1) as f64;
    let mut half_a = (bx.a.1 - bx.a.0) / (n - 1) as f64;
    for _ in 0..search.rounds {
        let (cs, cy, _) = best;
        scan(
            (cs - half_t).max(bx.t.0),
            (cs + half_t).min(bx.t.1),
            (cy - half_a).max(bx.a.0),
            (cy + half_a).min(bx.a.1),
            &mut best,
        );
        half_t /= search.shrink;
        half_a /= search.shrink;
    }
    Ok(best.2)
}

/// Envelope with the default search schedule (3 refinements, shrink 10).
pub fn moreau_envelope(
    surface: &Surface,
    m: f64,
    query: (f64, f64),
    search_box: SearchBox,
    grid_n: usize,
) -> Result<f64, SurfaceError> {
    moreau_envelope_with(surface, m, query, &EnvelopeSearch::new(search_box, grid_n))
}

/// The envelope `b̃^m(t_k, A_{t_k})` along a path.
///
/// A surface declared Lipschitz is returned unchanged: `t ↦ b(t, A_t)` is
/// then already of bounded variation and `b̃^m = b` for every `m`.
pub fn envelope_path(
    surface: &Surface,
    m: f64,
    a_path: &[f64],
    grid: &TimeGrid,
    search: &EnvelopeSearch,
) -> Result<Vec<f64>, SurfaceError> {
    if a_path.len() != grid.len() {
        return Err(SurfaceError::Misaligned {
            values: a_path.len(),
            points: grid.len(),
        });
    }
    if surface.is_lipschitz() {
        return Ok(surface.along(grid, a_path));
    }
    grid.times()
        .iter()
        .zip(a_path)
        .map(|(&t, &a)| moreau_envelope_with(surface, m, (t, a), search))
        .collect()
}

/// `Σ |s_k − s_{k-1}|`.
pub fn pathwise_variation(series: &[f64]) -> f64 {
    series.windows(2).map(|w| (w[1] - w[0]).abs()).sum()
}
