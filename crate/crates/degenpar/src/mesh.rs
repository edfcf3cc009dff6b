//! Uniform space-time grids on `(0,1) × (0,T)`, scalar fields on them and the
//! discrete norms and inner products shared by the solvers and studies.
//!
//! Conventions, fixed once here:
//! * space nodes `x_i = i·h`, `i = 0..n+1`, `h = 1/(n+1)`; slices store the
//!   `n` interior values, the Dirichlet boundary values are implicitly zero;
//! * time levels `t_k = k·dt`, `k = 0..m`, `dt = T/m`;
//! * spatial quadrature is the rectangle rule over interior nodes, which
//!   keeps the discrete duality identities of the solvers exact.

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::profile::DiffusionProfile;

#[derive(Debug, Error, PartialEq)]
pub enum GridError {
    #[error("grid needs n >= 3, m >= 3 and T > 0, got n={n}, m={m}, T={t_final}")]
    BadSize { n: usize, m: usize, t_final: f64 },
    #[error("size mismatch: expected {expected} values, got {got}")]
    ShapeMismatch { expected: usize, got: usize },
    #[error("window ({lo}, {hi}) is not a nonempty subinterval of (0, 1)")]
    BadWindow { lo: f64, hi: f64 },
}

/// An open interval `(lo, hi)`, used for control windows and observation
/// windows. Membership is strict, matching the open sets of the model.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Interval {
    lo: f64,
    hi: f64,
}

impl Interval {
    pub fn new(lo: f64, hi: f64) -> Self {
        Interval { lo, hi }
    }

    pub fn checked(lo: f64, hi: f64) -> Result<Self, GridError> {
        if lo.is_finite() && hi.is_finite() && lo < hi && lo >= 0.0 && hi <= 1.0 {
            Ok(Interval { lo, hi })
        } else {
            Err(GridError::BadWindow { lo, hi })
        }
    }

    pub fn lo(&self) -> f64 {
        self.lo
    }

    pub fn hi(&self) -> f64 {
        self.hi
    }

    pub fn contains(&self, x: f64) -> bool {
        self.lo < x && x < self.hi
    }
}

/// Uniform mesh for `Q = (0,1) × (0,T)`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Grid {
    n: usize,
    m: usize,
    t_final: f64,
    h: f64,
    dt: f64,
}

/// Uniform grid with `n` interior space nodes and `m` time steps.
pub fn build_grid(n: usize, m: usize, t_final: f64) -> Result<Grid, GridError> {
    if n < 3 || m < 3 || !(t_final > 0.0) || !t_final.is_finite() {
        return Err(GridError::BadSize { n, m, t_final });
    }
    Ok(Grid {
        n,
        m,
        t_final,
        h: 1.0 / (n + 1) as f64,
        dt: t_final / m as f64,
    })
}

impl Grid {
    pub fn n(&self) -> usize {
        self.n
    }

    pub fn m(&self) -> usize {
        self.m
    }

    pub fn t_final(&self) -> f64 {
        self.t_final
    }

    pub fn h(&self) -> f64 {
        self.h
    }

    pub fn dt(&self) -> f64 {
        self.dt
    }

    /// Position of node `i`, `i = 0..n+1` (0 and n+1 are the boundary).
    pub fn x(&self, i: usize) -> f64 {
        i as f64 * self.h
    }

    /// Position of the interior node backing slice entry `j`, `j = 0..n`.
    pub fn x_interior(&self, j: usize) -> f64 {
        (j + 1) as f64 * self.h
    }

    /// Half node `x_{i+1/2}` between nodes `i` and `i+1`, `i = 0..n+1`.
    pub fn x_half(&self, i: usize) -> f64 {
        (i as f64 + 0.5) * self.h
    }

    pub fn t(&self, k: usize) -> f64 {
        if k == self.m {
            self.t_final
        } else {
            k as f64 * self.dt
        }
    }

    pub fn x_nodes(&self) -> Vec<f64> {
        (0..=self.n + 1).map(|i| self.x(i)).collect()
    }

    pub fn t_nodes(&self) -> Vec<f64> {
        (0..=self.m).map(|k| self.t(k)).collect()
    }

    /// Indicator of the open window on interior nodes (slice indexing).
    pub fn window_mask(&self, window: Interval) -> Vec<bool> {
        (0..self.n)
            .map(|j| window.contains(self.x_interior(j)))
            .collect()
    }

    /// Coefficient samples at all half nodes `x_{1/2} .. x_{n+1/2}`.
    ///
    /// Sampling the analytic profile at half nodes (rather than averaging
    /// node values) keeps the diffusion flux exactly zero across every cell
    /// contained in the degeneracy interval.
    pub fn half_node_coefficients(&self, profile: &DiffusionProfile) -> Vec<f64> {
        (0..=self.n)
            .map(|i| profile.value(self.x_half(i)))
            .collect()
    }
}

/// Values of a scalar function at the interior nodes of a [`Grid`].
#[derive(Debug, Clone, PartialEq)]
pub struct SpaceSlice {
    values: Vec<f64>,
}

impl SpaceSlice {
    pub fn new(values: Vec<f64>) -> Self {
        SpaceSlice { values }
    }

    pub fn zeros(grid: &Grid) -> Self {
        SpaceSlice {
            values: vec![0.0; grid.n()],
        }
    }

    /// Samples `f(x)` at the interior nodes.
    pub fn from_fn(grid: &Grid, f: impl Fn(f64) -> f64) -> Self {
        SpaceSlice {
            values: (0..grid.n()).map(|j| f(grid.x_interior(j))).collect(),
        }
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn values_mut(&mut self) -> &mut [f64] {
        &mut self.values
    }

    pub fn conforms(&self, grid: &Grid) -> Result<(), GridError> {
        if self.values.len() == grid.n() {
            Ok(())
        } else {
            Err(GridError::ShapeMismatch {
                expected: grid.n(),
                got: self.values.len(),
            })
        }
    }

    pub fn scaled(&self, factor: f64) -> SpaceSlice {
        SpaceSlice {
            values: self.values.iter().map(|v| v * factor).collect(),
        }
    }
}

/// A function on the full space-time grid: `m + 1` rows of `n` interior
/// values, row `k` holding the slice at `t_k`.
#[derive(Debug, Clone, PartialEq)]
pub struct SpaceTimeField {
    n: usize,
    m: usize,
    data: Vec<f64>,
}

impl SpaceTimeField {
    pub fn zeros(grid: &Grid) -> Self {
        SpaceTimeField {
            n: grid.n(),
            m: grid.m(),
            data: vec![0.0; (grid.m() + 1) * grid.n()],
        }
    }

    /// Samples `f(x, t)` on the full grid.
    pub fn from_fn(grid: &Grid, f: impl Fn(f64, f64) -> f64) -> Self {
        let mut field = SpaceTimeField::zeros(grid);
        for k in 0..=grid.m() {
            let t = grid.t(k);
            let row = field.slice_mut(k);
            for (j, v) in row.iter_mut().enumerate() {
                *v = f(grid.x_interior(j), t);
            }
        }
        field
    }

    pub fn rows(&self) -> usize {
        self.m + 1
    }

    pub fn cols(&self) -> usize {
        self.n
    }

    pub fn slice(&self, k: usize) -> &[f64] {
        &self.data[k * self.n..(k + 1) * self.n]
    }

    pub fn slice_mut(&mut self, k: usize) -> &mut [f64] {
        &mut self.data[k * self.n..(k + 1) * self.n]
    }

    pub fn slice_at(&self, k: usize) -> SpaceSlice {
        SpaceSlice::new(self.slice(k).to_vec())
    }

    pub fn set_slice(&mut self, k: usize, slice: &SpaceSlice) {
        self.slice_mut(k).copy_from_slice(slice.values());
    }

    pub fn conforms(&self, grid: &Grid) -> Result<(), GridError> {
        if self.n == grid.n() && self.m == grid.m() {
            Ok(())
        } else {
            Err(GridError::ShapeMismatch {
                expected: (grid.m() + 1) * grid.n(),
                got: self.data.len(),
            })
        }
    }
}

/// Plain `h`-weighted inner product of two slices (zero boundary).
/// Panics on a shape mismatch.
pub fn slice_inner(a: &SpaceSlice, b: &SpaceSlice, grid: &Grid) -> f64 {
    assert_eq!(a.len(), grid.n(), "slice does not conform to the grid");
    assert_eq!(b.len(), grid.n(), "slice does not conform to the grid");
    grid.h()
        * a.values()
            .iter()
            .zip(b.values())
            .map(|(x, y)| x * y)
            .sum::<f64>()
}

/// Discrete `L²(0,1)` norm, rectangle rule with zero boundary contributions.
pub fn l2_norm(slice: &SpaceSlice, grid: &Grid) -> f64 {
    slice_inner(slice, slice, grid).sqrt()
}

/// Discrete `H¹_a` seminorm: `sqrt( h · Σ_i a(x_{i+1/2}) ((u_{i+1}-u_i)/h)² )`
/// with the coefficient sampled at half nodes and zero boundary values.
pub fn h1a_seminorm(slice: &SpaceSlice, profile: &DiffusionProfile, grid: &Grid) -> f64 {
    assert_eq!(slice.len(), grid.n(), "slice does not conform to the grid");
    let v = slice.values();
    let n = v.len();
    let h = grid.h();
    let mut acc = 0.0;
    for i in 0..=n {
        let left = if i == 0 { 0.0 } else { v[i - 1] };
        let right = if i == n { 0.0 } else { v[i] };
        let diff = (right - left) / h;
        acc += profile.value(grid.x_half(i)) * diff * diff;
    }
    (h * acc).sqrt()
}

/// Discrete `L²(Q)` inner product: rectangle rule in space (optionally
/// restricted to an open window) and the trapezoidal rule in time over all
/// levels `0..m`. Weighted integrands with a time singularity use the
/// interior-level quadratures of the Carleman module instead.
pub fn spacetime_inner(
    a: &SpaceTimeField,
    b: &SpaceTimeField,
    grid: &Grid,
    window: Option<Interval>,
) -> f64 {
    assert!(
        a.conforms(grid).is_ok() && b.conforms(grid).is_ok(),
        "fields do not conform to the grid"
    );
    let mask = window.map(|w| grid.window_mask(w));
    let mut acc = 0.0;
    for k in 0..=grid.m() {
        let weight = if k == 0 || k == grid.m() { 0.5 } else { 1.0 };
        let (ra, rb) = (a.slice(k), b.slice(k));
        let mut level = 0.0;
        match &mask {
            Some(mask) => {
                for j in 0..grid.n() {
                    if mask[j] {
                        level += ra[j] * rb[j];
                    }
                }
            }
            None => {
                for j in 0..grid.n() {
                    level += ra[j] * rb[j];
                }
            }
        }
        acc += weight * level;
    }
    grid.h() * grid.dt() * acc
}

/// `L²(Q)` norm from [`spacetime_inner`].
pub fn spacetime_norm(a: &SpaceTimeField, grid: &Grid, window: Option<Interval>) -> f64 {
    spacetime_inner(a, a, grid, window).sqrt()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::profile::{make_constant_profile, make_power_profile};
    use approx::assert_relative_eq;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn grid_spacing() {
        let g = build_grid(3, 4, 1.0).unwrap();
        assert_relative_eq!(g.h(), 0.25);
        assert_relative_eq!(g.dt(), 0.25);
        assert_eq!(g.x(0), 0.0);
        assert_relative_eq!(g.x(4), 1.0);
        assert_relative_eq!(g.t(4), 1.0);

        let g = build_grid(99, 200, 0.5).unwrap();
        assert_relative_eq!(g.h(), 0.01);
        assert_relative_eq!(g.dt(), 0.0025);
    }

    #[test]
    fn grid_rejects_bad_sizes() {
        assert!(build_grid(0, 4, 1.0).is_err());
        assert!(build_grid(3, 0, 1.0).is_err());
        assert!(build_grid(3, 4, 0.0).is_err());
        assert!(build_grid(3, 4, -1.0).is_err());
    }

    #[test]
    fn l2_norm_matches_analytic_values() {
        let g = build_grid(199, 10, 1.0).unwrap();
        let zero = SpaceSlice::zeros(&g);
        assert_eq!(l2_norm(&zero, &g), 0.0);

        let sine = SpaceSlice::from_fn(&g, |x| (std::f64::consts::PI * x).sin());
        assert_relative_eq!(l2_norm(&sine, &g), 0.5f64.sqrt(), epsilon = 1e-4);

        let g = build_grid(99, 10, 1.0).unwrap();
        let one = SpaceSlice::from_fn(&g, |_| 1.0);
        assert_relative_eq!(l2_norm(&one, &g), 0.99f64.sqrt(), epsilon = 1e-12);
    }

    #[test]
    fn l2_norm_squared_equals_self_inner() {
        let g = build_grid(31, 5, 1.0).unwrap();
        let s = SpaceSlice::from_fn(&g, |x| x * (1.0 - x));
        assert_relative_eq!(
            l2_norm(&s, &g).powi(2),
            slice_inner(&s, &s, &g),
            max_relative = 1e-14
        );
    }

    #[test]
    fn h1a_seminorm_analytic_and_degenerate() {
        let g = build_grid(199, 10, 1.0).unwrap();
        let one = make_constant_profile(1.0).unwrap();
        let sine = SpaceSlice::from_fn(&g, |x| (std::f64::consts::PI * x).sin());
        let expected = std::f64::consts::PI / 2.0f64.sqrt();
        assert_relative_eq!(h1a_seminorm(&sine, &one, &g), expected, epsilon = 1e-2);

        assert_eq!(h1a_seminorm(&SpaceSlice::zeros(&g), &one, &g), 0.0);

        // a vanishes on [0.4, 0.6]: a bump supported in [0.45, 0.55] has zero energy
        let degenerate = make_power_profile(0.4, 0.6, 2.0, 2.0).unwrap();
        let bump = SpaceSlice::from_fn(&g, |x| {
            if (0.45..=0.55).contains(&x) {
                ((x - 0.45) * (0.55 - x) * 400.0).max(0.0)
            } else {
                0.0
            }
        });
        assert_eq!(h1a_seminorm(&bump, &degenerate, &g), 0.0);
    }

    #[test]
    fn spacetime_inner_volume_and_window() {
        let g = build_grid(99, 100, 1.0).unwrap();
        let one = SpaceTimeField::from_fn(&g, |_, _| 1.0);
        let zero = SpaceTimeField::zeros(&g);
        assert_eq!(spacetime_inner(&zero, &one, &g, None), 0.0);
        assert_relative_eq!(spacetime_inner(&one, &one, &g, None), 0.99, epsilon = 1e-12);
        let windowed = spacetime_inner(&one, &one, &g, Some(Interval::new(0.3, 0.7)));
        assert_relative_eq!(windowed, 0.4, epsilon = 0.011);
    }

    proptest::proptest! {
        #[test]
        fn spacetime_inner_symmetric_bilinear(seed in 0u64..1000) {
            let g = build_grid(12, 9, 0.7).unwrap();
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let mut rand_field = || {
                let mut f = SpaceTimeField::zeros(&g);
                for k in 0..=g.m() {
                    for v in f.slice_mut(k) {
                        *v = rng.gen_range(-1.0..1.0);
                    }
                }
                f
            };
            let a = rand_field();
            let b = rand_field();
            let c = rand_field();
            let sym = (spacetime_inner(&a, &b, &g, None) - spacetime_inner(&b, &a, &g, None)).abs();
            proptest::prop_assert!(sym <= 1e-13 * spacetime_inner(&a, &a, &g, None).max(1.0));

            let mut a_plus_c = SpaceTimeField::zeros(&g);
            for k in 0..=g.m() {
                let row = a_plus_c.slice_mut(k);
                for (j, value) in row.iter_mut().enumerate() {
                    *value = a.slice(k)[j] + 2.5 * c.slice(k)[j];
                }
            }
            let lhs = spacetime_inner(&a_plus_c, &b, &g, None);
            let rhs = spacetime_inner(&a, &b, &g, None) + 2.5 * spacetime_inner(&c, &b, &g, None);
            let scale = lhs.abs().max(rhs.abs()).max(1.0);
            proptest::prop_assert!((lhs - rhs).abs() <= 1e-13 * scale);
        }
    }
}
