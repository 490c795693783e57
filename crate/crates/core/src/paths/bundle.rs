use super::{PathError, TimeGrid};

/// A point `(t, a, x)` of the time-space path.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PathState {
    pub t: f64,
    pub a: f64,
    pub x: f64,
}

/// Pre-jump values at a flagged grid index.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct JumpRecord {
    pub index: usize,
    pub a_minus: f64,
    pub x_minus: f64,
    pub y_minus: f64,
    pub z_minus: f64,
}

/// Per-increment split `X = X_0 + K + M` (and the drift/jump split of `A`).
///
/// Every vector has the grid's length; entry `k` is the increment over
/// `(t_{k-1}, t_k]` and entry 0 is zero. `X` is rebuilt by
/// `x[k] = ((x[k-1] + x_drift[k]) + x_martingale[k]) + x_jump[k]`, which is
/// the exact floating-point order of the simulator.
#[derive(Debug, Clone, PartialEq)]
pub struct Decomposition {
    pub x_drift: Vec<f64>,
    pub x_martingale: Vec<f64>,
    pub x_jump: Vec<f64>,
    pub a_drift: Vec<f64>,
    pub a_jump: Vec<f64>,
}

impl Decomposition {
    /// Tag every continuous increment of an observed path as finite variation.
    pub fn finite_variation(grid: &TimeGrid, a: &[f64], x: &[f64], jumps: &[JumpRecord]) -> Self {
        let n = grid.len();
        let mut d = Decomposition {
            x_drift: vec![0.0; n],
            x_martingale: vec![0.0; n],
            x_jump: vec![0.0; n],
            a_drift: vec![0.0; n],
            a_jump: vec![0.0; n],
        };
        let mut pending = jumps.iter().peekable();
        for k in 1..n {
            let (a_minus, x_minus) = match pending.peek() {
                Some(j) if j.index == k => {
                    let j = pending.next().unwrap();
                    (j.a_minus, j.x_minus)
                }
                _ => (a[k], x[k]),
            };
            d.x_drift[k] = x_minus - x[k - 1];
            d.a_drift[k] = a_minus - a[k - 1];
            d.x_jump[k] = x[k] - x_minus;
            d.a_jump[k] = a[k] - a_minus;
        }
        d
    }
}

/// An aligned realisation of `(t, B, Y, Z, A, X)` with left limits at jumps.
///
/// Immutable once built.
#[derive(Debug, Clone, PartialEq)]
pub struct PathBundle {
    grid: TimeGrid,
    brownian: Vec<f64>,
    y: Vec<f64>,
    z: Vec<f64>,
    a: Vec<f64>,
    x: Vec<f64>,
    jumps: Vec<JumpRecord>,
    decomposition: Option<Decomposition>,
    x0: f64,
}

impl PathBundle {
    #[allow(clippy::too_many_arguments)]
    pub fn from_parts(
        grid: TimeGrid,
        brownian: Vec<f64>,
        y: Vec<f64>,
        z: Vec<f64>,
        a: Vec<f64>,
        x: Vec<f64>,
        jumps: Vec<JumpRecord>,
        decomposition: Option<Decomposition>,
    ) -> Result<Self, PathError> {
        let n = grid.len();
        for (name, v) in [("B", &brownian), ("Y", &y), ("Z", &z), ("A", &a), ("X", &x)] {
            if v.len() != n {
                return Err(PathError::Inconsistent(format!(
                    "{name} has {} values for a grid of {n} points",
                    v.len()
                )));
            }
        }
        let flagged: Vec<usize> = grid.jump_indices().collect();
        if flagged.len() != jumps.len() || flagged.iter().zip(&jumps).any(|(&k, j)| k != j.index) {
            return Err(PathError::Inconsistent(
                "left limits must be given exactly at the flagged jump indices".into(),
            ));
        }
        if let Some(d) = &decomposition {
            for v in [&d.x_drift, &d.x_martingale, &d.x_jump, &d.a_drift, &d.a_jump] {
                if v.len() != n {
                    return Err(PathError::Inconsistent("decomposition length mismatch".into()));
                }
            }
        }
        let x0 = x[0];
        Ok(Self {
            grid,
            brownian,
            y,
            z,
            a,
            x,
            jumps,
            decomposition,
            x0,
        })
    }

    /// A continuous observed path `(A, X)` without drivers or decomposition tags.
    pub fn observed(grid: TimeGrid, a: Vec<f64>, x: Vec<f64>) -> Result<Self, PathError> {
        if grid.jump_indices().next().is_some() {
            return Err(PathError::Inconsistent(
                "observed continuous paths cannot carry jump flags".into(),
            ));
        }
        let n = grid.len();
        Self::from_parts(grid, vec![0.0; n], vec![0.0; n], vec![0.0; n], a, x, Vec::new(), None)
    }

    pub fn with_decomposition(mut self, decomposition: Decomposition) -> Result<Self, PathError> {
        let n = self.grid.len();
        for v in [
            &decomposition.x_drift,
            &decomposition.x_martingale,
            &decomposition.x_jump,
            &decomposition.a_drift,
            &decomposition.a_jump,
        ] {
            if v.len() != n {
                return Err(PathError::Inconsistent("decomposition length mismatch".into()));
            }
        }
        self.decomposition = Some(decomposition);
        Ok(self)
    }

    pub fn grid(&self) -> &TimeGrid {
        &self.grid
    }

    pub fn len(&self) -> usize {
        self.grid.len()
    }

    pub fn is_empty(&self) -> bool {
        self.grid.is_empty()
    }

    pub fn brownian(&self) -> &[f64] {
        &self.brownian
    }

    pub fn y(&self) -> &[f64] {
        &self.y
    }

    pub fn z(&self) -> &[f64] {
        &self.z
    }

    pub fn a(&self) -> &[f64] {
        &self.a
    }

    pub fn x(&self) -> &[f64] {
        &self.x
    }

    pub fn jumps(&self) -> &[JumpRecord] {
        &self.jumps
    }

    pub fn decomposition(&self) -> Option<&Decomposition> {
        self.decomposition.as_ref()
    }

    pub fn has_jumps(&self) -> bool {
        !self.jumps.is_empty()
    }

    pub fn jump_at(&self, k: usize) -> Option<&JumpRecord> {
        if !self.grid.is_jump(k) {
            return None;
        }
        self.jumps
            .binary_search_by_key(&k, |j| j.index)
            .ok()
            .map(|i| &self.jumps[i])
    }

    #[inline]
    pub fn state(&self, k: usize) -> PathState {
        PathState {
            t: self.grid.time(k),
            a: self.a[k],
            x: self.x[k],
        }
    }

    /// `(t_k, A_{t_k-}, X_{t_k-})`; equal to [`state`](Self::state) off jumps.
    pub fn left_state(&self, k: usize) -> PathState {
        match self.jump_at(k) {
            Some(j) => PathState {
                t: self.grid.time(k),
                a: j.a_minus,
                x: j.x_minus,
            },
            None => self.state(k),
        }
    }

    pub fn x_left(&self, k: usize) -> f64 {
        self.jump_at(k).map_or(self.x[k], |j| j.x_minus)
    }

    pub fn a_left(&self, k: usize) -> f64 {
        self.jump_at(k).map_or(self.a[k], |j| j.a_minus)
    }

    /// Left limits of `X` at every grid point.
    pub fn x_left_series(&self) -> Vec<f64> {
        let mut out = self.x.clone();
        for j in &self.jumps {
            out[j.index] = j.x_minus;
        }
        out
    }

    /// Replays `X_0 + K + M` from the decomposition tags.
    pub fn reconstruct_x(&self) -> Option<Vec<f64>> {
        let d = self.decomposition.as_ref()?;
        let mut out = Vec::with_capacity(self.len());
        let mut x = self.x0;
        out.push(x);
        for k in 1..self.len() {
            x = ((x + d.x_drift[k]) + d.x_martingale[k]) + d.x_jump[k];
            out.push(x);
        }
        Some(out)
    }

    /// Human-readable problems with the internal consistency of the bundle.
    pub fn consistency_violations(&self) -> Vec<String> {
        let mut problems = Vec::new();
        if let Some(rebuilt) = self.reconstruct_x() {
            if rebuilt != self.x {
                problems.push("X does not equal X0 + K + M".to_string());
            }
        }
        if let Some(d) = &self.decomposition {
            for j in &self.jumps {
                let k = j.index;
                let observed = self.x[k] - j.x_minus;
                if (observed - d.x_jump[k]).abs() > 1e-12 * (1.0 + self.x[k].abs()) {
                    problems.push(format!("jump increment of X at index {k} disagrees with its tag"));
                }
            }
            for k in 1..self.len() {
                if !self.grid.is_jump(k) && (d.x_jump[k] != 0.0 || d.a_jump[k] != 0.0) {
                    problems.push(format!("jump tag at non-jump index {k}"));
                }
            }
        }
        problems
    }
}
