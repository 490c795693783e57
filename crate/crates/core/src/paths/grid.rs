use super::PathError;

/// Relative tolerance under which a jump time is considered to coincide with
/// a uniform grid point (or with another jump time).
const COINCIDENCE_RTOL: f64 = 1e-12;

/// A strictly increasing partition of `[0, t_end]` with jump-time markers.
#[derive(Debug, Clone, PartialEq)]
pub struct TimeGrid {
    times: Vec<f64>,
    jump_flags: Vec<bool>,
}

impl TimeGrid {
    /// Uniform grid of `n_steps` intervals with the given jump times merged in.
    ///
    /// A jump time within `1e-12 * t_end` of a uniform point replaces that
    /// point, so no near-duplicate times are created.
    pub fn build(t_end: f64, n_steps: usize, jump_times: &[f64]) -> Result<Self, PathError> {
        if !(t_end > 0.0 && t_end.is_finite()) {
            return Err(PathError::NonPositiveHorizon(t_end));
        }
        if n_steps == 0 {
            return Err(PathError::NoSteps);
        }
        let tol = COINCIDENCE_RTOL * t_end;
        let mut jumps: Vec<f64> = Vec::with_capacity(jump_times.len());
        for &jt in jump_times {
            if !(jt > 0.0 && jt <= t_end + tol) || !jt.is_finite() {
                return Err(PathError::JumpTimeOutOfRange { time: jt, t_end });
            }
            jumps.push(jt.min(t_end));
        }
        jumps.sort_by(f64::total_cmp);
        jumps.dedup_by(|later, earlier| (*later - *earlier).abs() <= tol);

        let mut times = Vec::with_capacity(n_steps + 1 + jumps.len());
        let mut jump_flags = Vec::with_capacity(n_steps + 1 + jumps.len());
        let mut next_jump = jumps.iter().copied().peekable();
        for k in 0..=n_steps {
            let u = if k == n_steps {
                t_end
            } else {
                t_end * k as f64 / n_steps as f64
            };
            while let Some(&jt) = next_jump.peek() {
                if jt < u - tol {
                    times.push(jt);
                    jump_flags.push(true);
                    next_jump.next();
                } else {
                    break;
                }
            }
            match next_jump.peek() {
                Some(&jt) if k > 0 && (jt - u).abs() <= tol => {
                    times.push(if k == n_steps { t_end } else { jt });
                    jump_flags.push(true);
                    next_jump.next();
                }
                _ => {
                    times.push(u);
                    jump_flags.push(false);
                }
            }
        }
        Ok(Self { times, jump_flags })
    }

    pub fn uniform(t_end: f64, n_steps: usize) -> Result<Self, PathError> {
        Self::build(t_end, n_steps, &[])
    }

    /// Grid from explicit points; used when replaying externally produced paths.
    pub fn from_points(times: Vec<f64>, jump_flags: Vec<bool>) -> Result<Self, PathError> {
        if times.len() < 2 || times.len() != jump_flags.len() {
            return Err(PathError::Inconsistent(
                "grid needs at least two points and one flag per point".into(),
            ));
        }
        if times[0] != 0.0 {
            return Err(PathError::Inconsistent("grid must start at 0".into()));
        }
        if times.windows(2).any(|w| !(w[1] > w[0])) {
            return Err(PathError::Inconsistent("grid must be strictly increasing".into()));
        }
        if jump_flags[0] {
            return Err(PathError::JumpTimeOutOfRange {
                time: 0.0,
                t_end: *times.last().unwrap(),
            });
        }
        Ok(Self { times, jump_flags })
    }

    pub fn times(&self) -> &[f64] {
        &self.times
    }

    pub fn jump_flags(&self) -> &[bool] {
        &self.jump_flags
    }

    pub fn len(&self) -> usize {
        self.times.len()
    }

    /// A grid always has at least two points; kept for clippy's sake.
    pub fn is_empty(&self) -> bool {
        self.times.is_empty()
    }

    pub fn t_end(&self) -> f64 {
        *self.times.last().expect("grid is never empty")
    }

    #[inline]
    pub fn time(&self, k: usize) -> f64 {
        self.times[k]
    }

    #[inline]
    pub fn is_jump(&self, k: usize) -> bool {
        self.jump_flags[k]
    }

    /// Length of the step ending at index `k` (`k >= 1`).
    #[inline]
    pub fn step(&self, k: usize) -> f64 {
        self.times[k] - self.times[k - 1]
    }

    pub fn jump_indices(&self) -> impl Iterator<Item = usize> + '_ {
        self.jump_flags
            .iter()
            .enumerate()
            .filter_map(|(k, &f)| f.then_some(k))
    }

    /// Index of the grid point matching `t` within the coincidence tolerance.
    pub fn index_of(&self, t: f64) -> Option<usize> {
        let tol = COINCIDENCE_RTOL * self.t_end();
        let k = self.times.partition_point(|&s| s < t - tol);
        (k < self.times.len() && (self.times[k] - t).abs() <= tol).then_some(k)
    }

    /// Smallest index whose time is `>= t` (up to tolerance).
    pub fn snap_right(&self, t: f64) -> Option<usize> {
        let tol = COINCIDENCE_RTOL * self.t_end();
        let k = self.times.partition_point(|&s| s < t - tol);
        (k < self.times.len()).then_some(k)
    }
}

pub fn build_grid(t_end: f64, n_steps: usize, jump_times: &[f64]) -> Result<TimeGrid, PathError> {
    TimeGrid::build(t_end, n_steps, jump_times)
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn uniform_partition() {
        let g = build_grid(1.0, 4, &[]).unwrap();
        assert_eq!(g.times(), &[0.0, 0.25, 0.5, 0.75, 1.0]);
        assert!(g.jump_flags().iter().all(|f| !f));
    }

    #[test]
    fn jump_time_is_merged() {
        let g = build_grid(1.0, 4, &[0.3]).unwrap();
        assert_eq!(g.times(), &[0.0, 0.25, 0.3, 0.5, 0.75, 1.0]);
        assert_eq!(g.jump_indices().collect::<Vec<_>>(), vec![2]);
    }

    #[test]
    fn coincident_jump_replaces_uniform_point() {
        let g = build_grid(1.0, 4, &[0.5]).unwrap();
        assert_eq!(g.len(), 5);
        assert_eq!(g.times(), &[0.0, 0.25, 0.5, 0.75, 1.0]);
        assert_eq!(g.jump_indices().collect::<Vec<_>>(), vec![2]);
    }

    #[test]
    fn jump_at_horizon_is_flagged() {
        let g = build_grid(2.0, 2, &[2.0]).unwrap();
        assert_eq!(g.times(), &[0.0, 1.0, 2.0]);
        assert!(g.is_jump(2));
    }

    #[test]
    fn rejects_bad_inputs() {
        assert_eq!(
            build_grid(0.0, 4, &[]).unwrap_err(),
            PathError::NonPositiveHorizon(0.0)
        );
        assert!(matches!(
            build_grid(1.0, 4, &[0.0]),
            Err(PathError::JumpTimeOutOfRange { .. })
        ));
        assert!(matches!(
            build_grid(1.0, 4, &[1.5]),
            Err(PathError::JumpTimeOutOfRange { .. })
        ));
        assert_eq!(build_grid(1.0, 0, &[]).unwrap_err(), PathError::NoSteps);
    }

    proptest! {
        #[test]
        fn grid_invariants(
            t_end in 0.1f64..10.0,
            n in 1usize..200,
            raw in proptest::collection::vec(0.0f64..1.0, 0..30),
        ) {
            let jumps: Vec<f64> = raw.iter().map(|u| t_end * (1.0 - u)).collect();
            let g = build_grid(t_end, n, &jumps).unwrap();
            prop_assert_eq!(g.times()[0], 0.0);
            prop_assert_eq!(g.t_end(), t_end);
            prop_assert!(g.times().windows(2).all(|w| w[1] > w[0]));
            for &jt in &jumps {
                let k = g.index_of(jt);
                prop_assert!(k.is_some());
                prop_assert!(g.is_jump(k.unwrap()));
            }
        }
    }
}
