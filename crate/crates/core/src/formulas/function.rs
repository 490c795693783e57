use std::fmt;
use std::sync::Arc;

use super::FormulaError;
use crate::paths::PathState;
use crate::surfaces::{Branch, SearchBox, Surface};

pub type StateFn = Arc<dyn Fn(f64, f64, f64) -> f64 + Send + Sync>;
pub type SurfaceLimitFn = Arc<dyn Fn(f64, f64) -> f64 + Send + Sync>;

/// A `C^{1,1,2}` function of `(t, a, x)` with its sectional derivatives.
#[derive(Clone)]
pub struct SmoothBranch {
    pub value: StateFn,
    pub d_t: StateFn,
    pub d_a: StateFn,
    pub d_x: StateFn,
    pub d_xx: StateFn,
}

impl SmoothBranch {
    pub fn new(
        value: impl Fn(f64, f64, f64) -> f64 + Send + Sync + 'static,
        d_t: impl Fn(f64, f64, f64) -> f64 + Send + Sync + 'static,
        d_a: impl Fn(f64, f64, f64) -> f64 + Send + Sync + 'static,
        d_x: impl Fn(f64, f64, f64) -> f64 + Send + Sync + 'static,
        d_xx: impl Fn(f64, f64, f64) -> f64 + Send + Sync + 'static,
    ) -> Self {
        Self {
            value: Arc::new(value),
            d_t: Arc::new(d_t),
            d_a: Arc::new(d_a),
            d_x: Arc::new(d_x),
            d_xx: Arc::new(d_xx),
        }
    }

    /// The zero function.
    pub fn zero() -> Self {
        Self::new(|_, _, _| 0.0, |_, _, _| 0.0, |_, _, _| 0.0, |_, _, _| 0.0, |_, _, _| 0.0)
    }

    /// `x ↦ g(x)` with no time or surface-driver dependence.
    pub fn of_x(
        g: impl Fn(f64) -> f64 + Send + Sync + 'static,
        g1: impl Fn(f64) -> f64 + Send + Sync + 'static,
        g2: impl Fn(f64) -> f64 + Send + Sync + 'static,
    ) -> Self {
        Self::new(
            move |_, _, x| g(x),
            |_, _, _| 0.0,
            |_, _, _| 0.0,
            move |_, _, x| g1(x),
            move |_, _, x| g2(x),
        )
    }

    /// `u ↦ g(u)` evaluated at `u = x − b(t, a)`, with the chain rule through `b`.
    ///
    /// `b_t`, `b_a` are the partial derivatives of the surface.
    pub fn of_gap(
        surface: &Surface,
        b_t: impl Fn(f64, f64) -> f64 + Send + Sync + 'static,
        b_a: impl Fn(f64, f64) -> f64 + Send + Sync + 'static,
        g: impl Fn(f64) -> f64 + Send + Sync + 'static,
        g1: impl Fn(f64) -> f64 + Send + Sync + 'static,
        g2: impl Fn(f64) -> f64 + Send + Sync + 'static,
    ) -> Self {
        let (s0, s1, s2, s3) = (surface.clone(), surface.clone(), surface.clone(), surface.clone());
        let g1 = Arc::new(g1);
        let (g1a, g1b, g1c) = (g1.clone(), g1.clone(), g1);
        Self::new(
            move |t, a, x| g(x - s0.eval(t, a)),
            move |t, a, x| -b_t(t, a) * g1a(x - s1.eval(t, a)),
            move |t, a, x| -b_a(t, a) * g1b(x - s2.eval(t, a)),
            move |t, a, x| g1c(x - s3.eval(t, a)),
            {
                let s = surface.clone();
                move |t, a, x| g2(x - s.eval(t, a))
            },
        )
    }

    #[inline]
    pub fn value_at(&self, p: PathState) -> f64 {
        (self.value)(p.t, p.a, p.x)
    }
}

impl fmt::Debug for SmoothBranch {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str("SmoothBranch")
    }
}

/// `F = F₁` on `x ≤ b(t, a)` and `F = F₂` on `x > b(t, a)`.
#[derive(Clone)]
pub struct PiecewiseSurfaceFunction {
    pub surface: Surface,
    pub f1: SmoothBranch,
    pub f2: SmoothBranch,
    /// `F_x(t, a, b(t, a)+)`.
    pub fx_plus: SurfaceLimitFn,
    /// `F_x(t, a, b(t, a)−)`.
    pub fx_minus: SurfaceLimitFn,
}

impl PiecewiseSurfaceFunction {
    pub fn new(
        surface: Surface,
        f1: SmoothBranch,
        f2: SmoothBranch,
        fx_minus: impl Fn(f64, f64) -> f64 + Send + Sync + 'static,
        fx_plus: impl Fn(f64, f64) -> f64 + Send + Sync + 'static,
    ) -> Self {
        Self {
            surface,
            f1,
            f2,
            fx_plus: Arc::new(fx_plus),
            fx_minus: Arc::new(fx_minus),
        }
    }

    /// One-sided limits taken from the branches' own `d_x` on the surface.
    pub fn glued(surface: Surface, f1: SmoothBranch, f2: SmoothBranch) -> Self {
        let (s1, s2) = (surface.clone(), surface.clone());
        let (d1, d2) = (f1.d_x.clone(), f2.d_x.clone());
        Self::new(
            surface,
            f1,
            f2,
            move |t, a| d1(t, a, s1.eval(t, a)),
            move |t, a| d2(t, a, s2.eval(t, a)),
        )
    }

    /// The same smooth function on both sides.
    pub fn smooth(surface: Surface, f: SmoothBranch) -> Self {
        Self::glued(surface, f.clone(), f)
    }

    /// `|x − level|`.
    pub fn abs_level(level: f64) -> Self {
        Self::new(
            Surface::level(level),
            SmoothBranch::of_x(move |x| level - x, |_| -1.0, |_| 0.0),
            SmoothBranch::of_x(move |x| x - level, |_| 1.0, |_| 0.0),
            |_, _| -1.0,
            |_, _| 1.0,
        )
    }

    #[inline]
    pub fn branch(&self, p: PathState) -> Branch {
        self.surface.branch(p.t, p.a, p.x)
    }

    #[inline]
    pub fn part(&self, branch: Branch) -> &SmoothBranch {
        match branch {
            Branch::Lower => &self.f1,
            Branch::Upper => &self.f2,
        }
    }

    #[inline]
    pub fn value(&self, p: PathState) -> f64 {
        self.part(self.branch(p)).value_at(p)
    }

    #[inline]
    pub fn d_t(&self, br: Branch, p: PathState) -> f64 {
        (self.part(br).d_t)(p.t, p.a, p.x)
    }

    #[inline]
    pub fn d_a(&self, br: Branch, p: PathState) -> f64 {
        (self.part(br).d_a)(p.t, p.a, p.x)
    }

    #[inline]
    pub fn d_x(&self, br: Branch, p: PathState) -> f64 {
        (self.part(br).d_x)(p.t, p.a, p.x)
    }

    #[inline]
    pub fn d_xx(&self, br: Branch, p: PathState) -> f64 {
        (self.part(br).d_xx)(p.t, p.a, p.x)
    }

    /// `½ (G(x+) + G(x−))` for a sectional derivative `G`; the branch value off the surface.
    pub fn averaged(&self, p: PathState, g: impl Fn(&SmoothBranch) -> &StateFn) -> f64 {
        if p.x == self.surface.eval(p.t, p.a) {
            0.5 * (g(&self.f1)(p.t, p.a, p.x) + g(&self.f2)(p.t, p.a, p.x))
        } else {
            g(self.part(self.branch(p)))(p.t, p.a, p.x)
        }
    }

    /// `F_x(t, a, b+) − F_x(t, a, b−)`.
    #[inline]
    pub fn fx_jump(&self, t: f64, a: f64) -> f64 {
        (self.fx_plus)(t, a) - (self.fx_minus)(t, a)
    }

    fn surface_points(&self, bx: SearchBox, n: usize) -> impl Iterator<Item = (f64, f64, f64)> + '_ {
        let n = n.max(2);
        let at = move |lo: f64, hi: f64, i: usize| lo + (hi - lo) * i as f64 / (n - 1) as f64;
        (0..n).flat_map(move |i| {
            (0..n).map(move |j| {
                let (t, a) = (at(bx.t.0, bx.t.1, i), at(bx.a.0, bx.a.1, j));
                (t, a, self.surface.eval(t, a))
            })
        })
    }

    /// `max |F₁ − F₂|` on the surface over an `n × n` grid of the box.
    pub fn continuity_defect(&self, bx: SearchBox, n: usize) -> f64 {
        self.surface_points(bx, n)
            .map(|(t, a, b)| ((self.f1.value)(t, a, b) - (self.f2.value)(t, a, b)).abs())
            .fold(0.0, f64::max)
    }

    /// Largest gap between the supplied one-sided limits and second-order
    /// one-sided differences of `F₂` (from above) and `F₁` (from below).
    pub fn one_sided_defect(&self, bx: SearchBox, n: usize) -> f64 {
        let h = 1e-4;
        self.surface_points(bx, n)
            .map(|(t, a, b)| {
                let f2 = |x: f64| (self.f2.value)(t, a, x);
                let f1 = |x: f64| (self.f1.value)(t, a, x);
                let up = (-3.0 * f2(b) + 4.0 * f2(b + h) - f2(b + 2.0 * h)) / (2.0 * h);
                let down = (3.0 * f1(b) - 4.0 * f1(b - h) + f1(b - 2.0 * h)) / (2.0 * h);
                ((self.fx_plus)(t, a) - up).abs().max(((self.fx_minus)(t, a) - down).abs())
            })
            .fold(0.0, f64::max)
    }

    /// `max |fx_jump|` over an `n × n` grid of the box.
    pub fn max_fx_jump(&self, bx: SearchBox, n: usize) -> f64 {
        self.surface_points(bx, n)
            .map(|(t, a, _)| self.fx_jump(t, a).abs())
            .fold(0.0, f64::max)
    }

    /// Continuity to `1e-9` and one-sided limits to `1e-4` on the test grid.
    pub fn validate(&self, bx: SearchBox, n: usize) -> Result<(), FormulaError> {
        let c = self.continuity_defect(bx, n);
        if !(c < 1e-9) {
            return Err(FormulaError::Discontinuous(c));
        }
        let d = self.one_sided_defect(bx, n);
        if !(d < 1e-4) {
            return Err(FormulaError::OneSidedLimits(d));
        }
        Ok(())
    }
}

impl fmt::Debug for PiecewiseSurfaceFunction {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("PiecewiseSurfaceFunction")
            .field("surface", &self.surface)
            .finish_non_exhaustive()
    }
}

/// `F(t, a, x)` with the closed lower branch `x ≤ b(t, a) → F₁`.
#[allow(non_snake_case)]
pub fn eval_F(psf: &PiecewiseSurfaceFunction, t: f64, a: f64, x: f64) -> f64 {
    psf.value(PathState { t, a, x })
}

/// `F_x(t, a, b(t, a)+) − F_x(t, a, b(t, a)−)`.
pub fn fx_jump(psf: &PiecewiseSurfaceFunction, t: f64, a: f64) -> f64 {
    psf.fx_jump(t, a)
}
