//! Forward and backward solvers for the degenerate parabolic problem
//!
//! ```text
//! u_t − (a(x) u_x)_x + c(x,t) u = f·1_ω,   u(0,t) = u(1,t) = 0,   u(x,0) = u₀
//! ```
//!
//! and its adjoint
//!
//! ```text
//! v_t + (a(x) v_x)_x − c(x,t) v = h,       v(x,T) = v_T .
//! ```
//!
//! The forward march is implicit Euler with the half-node-coefficient
//! diffusion stencil. The backward march is *defined* as the exact matrix
//! transpose of the forward step, not as a separate discretization: this
//! makes the discrete duality identity hold to rounding and the control
//! Gramian exactly symmetric. The transpose fixes the source staggering —
//! the forward source is consumed at level `k+1` on step `k → k+1`, the
//! adjoint source at level `k` — which [`duality_check`] states precisely.

use log::warn;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::mesh::{
    h1a_seminorm, l2_norm, slice_inner, Grid, GridError, Interval, SpaceSlice, SpaceTimeField,
};
use crate::profile::DiffusionProfile;

#[derive(Debug, Error, PartialEq)]
pub enum SolverError {
    #[error("singular tridiagonal system at time level {level}")]
    SingularSystem { level: usize },
    #[error(transparent)]
    Shape(#[from] GridError),
}

/// Bounded potentials `c(x, t)`, restricted to a small registered family.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Potential {
    Zero,
    Constant {
        value: f64,
    },
    /// `c(x,t) = sin(2πx)·cos(2πt/T)`.
    SinCos,
}

impl Potential {
    pub fn eval(&self, x: f64, t: f64, t_final: f64) -> f64 {
        use std::f64::consts::PI;
        match self {
            Potential::Zero => 0.0,
            Potential::Constant { value } => *value,
            Potential::SinCos => (2.0 * PI * x).sin() * (2.0 * PI * t / t_final).cos(),
        }
    }

    /// Supremum of `|c|` over the grid sample points. Constant potentials
    /// short-circuit to their value, which equals the sampled bound.
    pub fn sampled_sup(&self, grid: &Grid) -> f64 {
        match self {
            Potential::Zero => 0.0,
            Potential::Constant { value } => value.abs(),
            Potential::SinCos => {
                let mut sup: f64 = 0.0;
                for k in 0..=grid.m() {
                    for j in 0..grid.n() {
                        sup = sup.max(
                            self.eval(grid.x_interior(j), grid.t(k), grid.t_final())
                                .abs(),
                        );
                    }
                }
                sup
            }
        }
    }

    /// Minimum of `c` over the grid sample points, the bound that governs
    /// step-matrix invertibility when the potential goes negative.
    pub fn sampled_inf(&self, grid: &Grid) -> f64 {
        match self {
            Potential::Zero => 0.0,
            Potential::Constant { value } => *value,
            Potential::SinCos => {
                let mut inf = f64::INFINITY;
                for k in 0..=grid.m() {
                    for j in 0..grid.n() {
                        inf = inf.min(self.eval(grid.x_interior(j), grid.t(k), grid.t_final()));
                    }
                }
                inf
            }
        }
    }
}

/// The data of one controlled evolution: coefficient, potential, control
/// window, horizon and initial datum.
#[derive(Debug, Clone, PartialEq)]
pub struct ControlProblem {
    pub profile: DiffusionProfile,
    pub potential: Potential,
    pub omega: Interval,
    pub t_final: f64,
    pub u0: SpaceSlice,
}

impl ControlProblem {
    pub fn new(
        profile: DiffusionProfile,
        potential: Potential,
        omega: Interval,
        t_final: f64,
        u0: SpaceSlice,
    ) -> Self {
        ControlProblem {
            profile,
            potential,
            omega,
            t_final,
            u0,
        }
    }
}

/// Time integration scheme of the forward march. Implicit Euler is the
/// default; Crank–Nicolson exists for convergence studies only and has no
/// transpose-exact adjoint.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Scheme {
    ImplicitEuler,
    CrankNicolson,
}

/// The per-level tridiagonal step matrices `M_k = I + dt·(−D_a + C_k)`,
/// where `D_a` is the half-node-coefficient diffusion stencil and `C_k` the
/// diagonal potential at level `k`.
///
/// `M_k` is symmetric; off-diagonals are level-independent. With `c ≥ 0` the
/// matrix is strictly diagonally dominant for every `dt`.
pub struct DiscreteOperator {
    a_half: Vec<f64>,
    off: Vec<f64>,
    diag_base: Vec<f64>,
    potential: Potential,
    sup_c: f64,
    inf_c: f64,
    omega_mask: Vec<bool>,
    grid: Grid,
}

impl DiscreteOperator {
    pub fn new(problem: &ControlProblem, grid: &Grid) -> Self {
        let a_half = grid.half_node_coefficients(&problem.profile);
        let r = grid.dt() / (grid.h() * grid.h());
        let off: Vec<f64> = (1..=grid.n() - 1).map(|i| -r * a_half[i]).collect();
        let diag_base: Vec<f64> = (0..grid.n())
            .map(|j| 1.0 + r * (a_half[j] + a_half[j + 1]))
            .collect();
        let sup_c = problem.potential.sampled_sup(grid);
        let inf_c = problem.potential.sampled_inf(grid);
        if grid.dt() * sup_c > 0.5 {
            warn!(
                "dt*sup|c| = {:.3} > 0.5: potential under-resolved in time",
                grid.dt() * sup_c
            );
        }
        DiscreteOperator {
            a_half,
            off,
            diag_base,
            potential: problem.potential,
            sup_c,
            inf_c,
            omega_mask: grid.window_mask(problem.omega),
            grid: *grid,
        }
    }

    /// Recorded bound on `|c|` over the grid.
    pub fn sup_potential(&self) -> f64 {
        self.sup_c
    }

    /// Largest time step for which the step matrices are provably
    /// invertible: the diffusion part is positive semidefinite, so the
    /// diagonal stays positive for `dt < 1/|min c|` when the potential goes
    /// negative; unconditional (`∞`) for `c ≥ 0`.
    pub fn dt_invertibility_threshold(&self) -> f64 {
        if self.inf_c >= 0.0 {
            f64::INFINITY
        } else {
            -1.0 / self.inf_c
        }
    }

    pub fn a_half(&self) -> &[f64] {
        &self.a_half
    }

    pub fn omega_mask(&self) -> &[bool] {
        &self.omega_mask
    }

    /// Diagonal of `M_k` (the off-diagonals are [`Self::off`], symmetric).
    pub fn diag_at(&self, k: usize) -> Vec<f64> {
        let t = self.grid.t(k);
        let sup_c = match self.potential {
            Potential::Zero => 0.0,
            Potential::Constant { value } => value.abs(),
            Potential::SinCos => 1.0,
        };
        self.diag_base
            .iter()
            .enumerate()
            .map(|(j, d)| {
                let c = self
                    .potential
                    .eval(self.grid.x_interior(j), t, self.grid.t_final())
                    .clamp(-sup_c, sup_c);
                d + self.grid.dt() * c
            })
            .collect()
    }

    pub fn off(&self) -> &[f64] {
        &self.off
    }

    /// Solves `M_k y = rhs` in place.
    pub(crate) fn step_solve(&self, k: usize, rhs: &mut [f64]) -> Result<(), SolverError> {
        let diag = self.diag_at(k);
        solve_symmetric_tridiagonal(&diag, &self.off, rhs)
            .map_err(|_| SolverError::SingularSystem { level: k })
    }

    /// Applies `−D_a + C_k` (explicit part used by Crank–Nicolson).
    fn apply_spatial(&self, k: usize, v: &[f64], out: &mut [f64]) {
        let n = v.len();
        let r = 1.0 / (self.grid.h() * self.grid.h());
        let t = self.grid.t(k);
        for j in 0..n {
            let left = if j == 0 { 0.0 } else { v[j - 1] };
            let right = if j == n - 1 { 0.0 } else { v[j + 1] };
            let diffusion =
                r * (self.a_half[j + 1] * (right - v[j]) - self.a_half[j] * (v[j] - left));
            let c = self
                .potential
                .eval(self.grid.x_interior(j), t, self.grid.t_final());
            out[j] = -diffusion + c * v[j];
        }
    }
}

/// Marker error for a vanishing pivot in the tridiagonal elimination.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct SingularPivot;

/// Thomas elimination for a symmetric tridiagonal system, no pivoting.
/// The matrices assembled here are diagonally dominant for `c ≥ 0`, so the
/// plain recurrence is stable; a vanishing pivot is reported as singular.
pub fn solve_symmetric_tridiagonal(
    diag: &[f64],
    off: &[f64],
    rhs: &mut [f64],
) -> Result<(), SingularPivot> {
    let n = diag.len();
    debug_assert_eq!(off.len(), n - 1);
    debug_assert_eq!(rhs.len(), n);
    let mut scratch = vec![0.0; n - 1];
    let mut pivot = diag[0];
    if pivot.abs() < f64::MIN_POSITIVE {
        return Err(SingularPivot);
    }
    rhs[0] /= pivot;
    for i in 1..n {
        scratch[i - 1] = off[i - 1] / pivot;
        pivot = diag[i] - off[i - 1] * scratch[i - 1];
        if pivot.abs() < f64::MIN_POSITIVE {
            return Err(SingularPivot);
        }
        rhs[i] = (rhs[i] - off[i - 1] * rhs[i - 1]) / pivot;
    }
    for i in (0..n - 1).rev() {
        rhs[i] -= scratch[i] * rhs[i + 1];
    }
    Ok(())
}

/// Implicit-Euler march for the forward problem:
/// `M_{k+1} u^{k+1} = u^k + dt·(1_ω f)^{k+1}`, `u⁰ = u₀`.
///
/// Returns the full trajectory. The source field is consumed at rows
/// `1..m`; row 0 is never read.
pub fn solve_forward(
    problem: &ControlProblem,
    f: &SpaceTimeField,
    grid: &Grid,
) -> Result<SpaceTimeField, SolverError> {
    solve_forward_scheme(problem, f, grid, Scheme::ImplicitEuler)
}

pub fn solve_forward_scheme(
    problem: &ControlProblem,
    f: &SpaceTimeField,
    grid: &Grid,
    scheme: Scheme,
) -> Result<SpaceTimeField, SolverError> {
    problem.u0.conforms(grid)?;
    f.conforms(grid)?;
    let op = DiscreteOperator::new(problem, grid);
    match scheme {
        Scheme::ImplicitEuler => march_forward(&op, &problem.u0, f, grid),
        Scheme::CrankNicolson => march_forward_cn(&op, &problem.u0, f, grid),
    }
}

pub(crate) fn march_forward(
    op: &DiscreteOperator,
    u0: &SpaceSlice,
    f: &SpaceTimeField,
    grid: &Grid,
) -> Result<SpaceTimeField, SolverError> {
    let mut traj = SpaceTimeField::zeros(grid);
    traj.set_slice(0, u0);
    let mut state = u0.values().to_vec();
    let dt = grid.dt();
    for k in 0..grid.m() {
        let source = f.slice(k + 1);
        for (j, s) in state.iter_mut().enumerate() {
            if op.omega_mask[j] {
                *s += dt * source[j];
            }
        }
        op.step_solve(k + 1, &mut state)?;
        traj.slice_mut(k + 1).copy_from_slice(&state);
    }
    Ok(traj)
}

fn march_forward_cn(
    op: &DiscreteOperator,
    u0: &SpaceSlice,
    f: &SpaceTimeField,
    grid: &Grid,
) -> Result<SpaceTimeField, SolverError> {
    // (I + dt/2 L_{k+1}) u^{k+1} = (I − dt/2 L_k) u^k + dt/2 (1_ω(f^k + f^{k+1}))
    // with L = −D_a + C; used for convergence studies only.
    let n = grid.n();
    let dt = grid.dt();
    let mut traj = SpaceTimeField::zeros(grid);
    traj.set_slice(0, u0);
    let mut state = u0.values().to_vec();
    let mut spatial = vec![0.0; n];
    let half_off: Vec<f64> = op.off.iter().map(|o| 0.5 * o).collect();
    for k in 0..grid.m() {
        op.apply_spatial(k, &state, &mut spatial);
        let (fk, fk1) = (f.slice(k), f.slice(k + 1));
        let mut rhs: Vec<f64> = (0..n)
            .map(|j| {
                let src = if op.omega_mask[j] {
                    0.5 * (fk[j] + fk1[j])
                } else {
                    0.0
                };
                state[j] - 0.5 * dt * spatial[j] + dt * src
            })
            .collect();
        let diag: Vec<f64> = op.diag_at(k + 1).iter().map(|d| 0.5 * (d + 1.0)).collect();
        solve_symmetric_tridiagonal(&diag, &half_off, &mut rhs)
            .map_err(|_| SolverError::SingularSystem { level: k + 1 })?;
        state.copy_from_slice(&rhs);
        traj.slice_mut(k + 1).copy_from_slice(&state);
    }
    Ok(traj)
}

/// Backward march defined by transposing the forward step:
/// `M_{k+1} v^k = v^{k+1} − dt·h^k`, `v^m = v_T`.
///
/// The adjoint source is consumed at rows `0..m-1`; row `m` is never read.
pub fn solve_adjoint(
    problem: &ControlProblem,
    v_terminal: &SpaceSlice,
    h: &SpaceTimeField,
    grid: &Grid,
) -> Result<SpaceTimeField, SolverError> {
    v_terminal.conforms(grid)?;
    h.conforms(grid)?;
    let op = DiscreteOperator::new(problem, grid);
    march_adjoint(&op, v_terminal, h, grid)
}

pub(crate) fn march_adjoint(
    op: &DiscreteOperator,
    v_terminal: &SpaceSlice,
    h: &SpaceTimeField,
    grid: &Grid,
) -> Result<SpaceTimeField, SolverError> {
    let mut traj = SpaceTimeField::zeros(grid);
    traj.set_slice(grid.m(), v_terminal);
    let mut state = v_terminal.values().to_vec();
    let dt = grid.dt();
    for k in (0..grid.m()).rev() {
        let source = h.slice(k);
        for (j, s) in state.iter_mut().enumerate() {
            *s -= dt * source[j];
        }
        op.step_solve(k + 1, &mut state)?;
        traj.slice_mut(k).copy_from_slice(&state);
    }
    Ok(traj)
}

/// Residual of the discrete duality identity
///
/// ```text
/// ⟨u(T), v_T⟩_h − ⟨u₀, v(0)⟩_h = Σ_{k=1..m} dt·⟨(1_ω f)^k, v^{k−1}⟩_h
/// ```
///
/// where `u` solves the forward problem from `(u0, f)` and `v` the adjoint
/// from `v_T` with `h = 0`. The transpose construction makes this hold to
/// rounding; the return value is the absolute residual.
pub fn duality_check(
    problem: &ControlProblem,
    u0: &SpaceSlice,
    f: &SpaceTimeField,
    v_terminal: &SpaceSlice,
    grid: &Grid,
) -> Result<f64, SolverError> {
    duality_residual(problem, u0, f, v_terminal, grid).map(|(r, _)| r)
}

/// Absolute residual of the duality identity together with the magnitude
/// scale of its three terms, for relative comparisons.
pub fn duality_residual(
    problem: &ControlProblem,
    u0: &SpaceSlice,
    f: &SpaceTimeField,
    v_terminal: &SpaceSlice,
    grid: &Grid,
) -> Result<(f64, f64), SolverError> {
    let forward_problem = ControlProblem {
        u0: u0.clone(),
        ..problem.clone()
    };
    let u = solve_forward(&forward_problem, f, grid)?;
    let v = solve_adjoint(problem, v_terminal, &SpaceTimeField::zeros(grid), grid)?;
    let mask = grid.window_mask(problem.omega);

    let terminal = slice_inner(&u.slice_at(grid.m()), v_terminal, grid);
    let initial = slice_inner(u0, &v.slice_at(0), grid);
    let mut pairing = 0.0;
    for k in 1..=grid.m() {
        let fk = f.slice(k);
        let vk = v.slice(k - 1);
        let mut level = 0.0;
        for j in 0..grid.n() {
            if mask[j] {
                level += fk[j] * vk[j];
            }
        }
        pairing += grid.dt() * grid.h() * level;
    }
    let residual = (terminal - initial - pairing).abs();
    let scale = terminal.abs() + initial.abs() + pairing.abs();
    Ok((residual, scale))
}

/// Energy diagnostics for the forward problem, mirroring the a-priori
/// estimate `sup_t ‖u‖² + ∫‖u‖²_{H¹_a} ≤ C (‖f‖² + ‖u₀‖²)`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EnergyReport {
    /// `sup_k ‖u^k‖²`.
    pub sup_state_sq: f64,
    /// Trapezoidal `∫₀ᵀ ‖u(t)‖²_{H¹_a} dt` (full norm: L² part plus seminorm).
    pub h1a_integral: f64,
    /// `‖f‖²_{L²(Q)} + ‖u₀‖²` (source rows `1..m`, rectangle rule).
    pub data_sq: f64,
    /// `C_emp·(‖f‖² + ‖u₀‖²)` with the empirical quotient below.
    pub rhs_bound: f64,
    /// Empirical constant `(sup + integral) / data`, 0 for zero data.
    pub c_emp: f64,
}

/// Solves the forward problem and reports the discrete energy quotient.
pub fn energy_check(
    problem: &ControlProblem,
    f: &SpaceTimeField,
    grid: &Grid,
) -> Result<EnergyReport, SolverError> {
    let u = solve_forward(problem, f, grid)?;
    let report = energy_of_trajectory(
        &u,
        &problem.profile,
        grid,
        source_norm_sq(f, grid, None),
        &problem.u0,
    );
    Ok(report)
}

pub(crate) fn energy_of_trajectory(
    u: &SpaceTimeField,
    profile: &DiffusionProfile,
    grid: &Grid,
    source_sq: f64,
    initial: &SpaceSlice,
) -> EnergyReport {
    let mut sup_state_sq: f64 = 0.0;
    let mut h1a_integral = 0.0;
    for k in 0..=grid.m() {
        let slice = u.slice_at(k);
        let l2_sq = slice_inner(&slice, &slice, grid);
        sup_state_sq = sup_state_sq.max(l2_sq);
        let semi = h1a_seminorm(&slice, profile, grid);
        let weight = if k == 0 || k == grid.m() { 0.5 } else { 1.0 };
        h1a_integral += weight * grid.dt() * (l2_sq + semi * semi);
    }
    let data_sq = source_sq + l2_norm(initial, grid).powi(2);
    let c_emp = if data_sq > 0.0 {
        (sup_state_sq + h1a_integral) / data_sq
    } else {
        0.0
    };
    EnergyReport {
        sup_state_sq,
        h1a_integral,
        data_sq,
        rhs_bound: c_emp * data_sq,
        c_emp,
    }
}

/// Squared norm of a source field in the convention of the forward march:
/// rows `1..m`, rectangle rule in time, optionally restricted to a window.
pub fn source_norm_sq(f: &SpaceTimeField, grid: &Grid, window: Option<Interval>) -> f64 {
    let mask = window.map(|w| grid.window_mask(w));
    let mut acc = 0.0;
    for k in 1..=grid.m() {
        let row = f.slice(k);
        acc += match &mask {
            Some(mask) => row
                .iter()
                .zip(mask)
                .filter(|(_, &inside)| inside)
                .map(|(v, _)| v * v)
                .sum::<f64>(),
            None => row.iter().map(|v| v * v).sum::<f64>(),
        };
    }
    grid.h() * grid.dt() * acc
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::mesh::build_grid;
    use crate::profile::{make_constant_profile, make_power_profile};
    use approx::assert_relative_eq;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;
    use std::f64::consts::PI;

    fn heat_problem(grid: &Grid) -> ControlProblem {
        ControlProblem::new(
            make_constant_profile(1.0).unwrap(),
            Potential::Zero,
            Interval::new(0.0, 1.0),
            grid.t_final(),
            SpaceSlice::from_fn(grid, |x| (PI * x).sin()),
        )
    }

    fn degenerate_problem(grid: &Grid) -> ControlProblem {
        ControlProblem::new(
            make_power_profile(0.4, 0.6, 2.0, 2.0).unwrap(),
            Potential::Zero,
            Interval::new(0.3, 0.7),
            grid.t_final(),
            SpaceSlice::from_fn(grid, |x| (PI * x).sin()),
        )
    }

    fn random_slice(grid: &Grid, rng: &mut impl Rng) -> SpaceSlice {
        SpaceSlice::new((0..grid.n()).map(|_| rng.gen_range(-1.0..1.0)).collect())
    }

    fn random_field(grid: &Grid, rng: &mut impl Rng) -> SpaceTimeField {
        let mut f = SpaceTimeField::zeros(grid);
        for k in 0..=grid.m() {
            for v in f.slice_mut(k) {
                *v = rng.gen_range(-1.0..1.0);
            }
        }
        f
    }

    #[test]
    fn forward_matches_separable_heat_solution() {
        let grid = build_grid(199, 400, 0.1).unwrap();
        let problem = heat_problem(&grid);
        let u = solve_forward(&problem, &SpaceTimeField::zeros(&grid), &grid).unwrap();
        let decay = (-PI * PI * 0.1).exp();
        let peak = u
            .slice(grid.m())
            .iter()
            .cloned()
            .fold(f64::NEG_INFINITY, f64::max);
        assert_relative_eq!(peak, decay, epsilon = 2e-3);
        for (j, &v) in u.slice(grid.m()).iter().enumerate() {
            let exact = decay * (PI * grid.x_interior(j)).sin();
            assert!((v - exact).abs() < 2e-3);
        }
    }

    #[test]
    fn zero_data_gives_zero_solution() {
        let grid = build_grid(31, 16, 0.3).unwrap();
        let mut problem = degenerate_problem(&grid);
        problem.u0 = SpaceSlice::zeros(&grid);
        let u = solve_forward(&problem, &SpaceTimeField::zeros(&grid), &grid).unwrap();
        assert!(u.slice(grid.m()).iter().all(|&v| v == 0.0));
        let v = solve_adjoint(
            &problem,
            &SpaceSlice::zeros(&grid),
            &SpaceTimeField::zeros(&grid),
            &grid,
        )
        .unwrap();
        assert!(v.slice(0).iter().all(|&v| v == 0.0));
    }

    #[test]
    fn adjoint_matches_time_reversed_heat_decay() {
        let grid = build_grid(199, 400, 0.1).unwrap();
        let problem = heat_problem(&grid);
        let v_terminal = SpaceSlice::from_fn(&grid, |x| (PI * x).sin());
        let v = solve_adjoint(&problem, &v_terminal, &SpaceTimeField::zeros(&grid), &grid).unwrap();
        let decay = (-PI * PI * 0.1).exp();
        for (j, &val) in v.slice(0).iter().enumerate() {
            let exact = decay * (PI * grid.x_interior(j)).sin();
            assert!((val - exact).abs() < 2e-3);
        }
    }

    #[test]
    fn duality_exact_for_random_data() {
        // the transpose construction holds at any size; exercised here up to
        // n = m = 256
        for (n, m) in [(64, 64), (256, 256)] {
            let grid = build_grid(n, m, 0.5).unwrap();
            let mut rng = ChaCha8Rng::seed_from_u64(42);
            for problem in [heat_problem(&grid), degenerate_problem(&grid)] {
                let u0 = random_slice(&grid, &mut rng);
                let f = random_field(&grid, &mut rng);
                let vt = random_slice(&grid, &mut rng);
                let (residual, scale) = duality_residual(&problem, &u0, &f, &vt, &grid).unwrap();
                assert!(
                    residual <= 1e-12 * scale.max(1e-30),
                    "residual {residual} vs scale {scale} at n={n}, m={m}"
                );
            }
        }
    }

    #[test]
    fn duality_zero_for_zero_data() {
        let grid = build_grid(16, 8, 0.2).unwrap();
        let problem = degenerate_problem(&grid);
        let r = duality_check(
            &problem,
            &SpaceSlice::zeros(&grid),
            &SpaceTimeField::zeros(&grid),
            &SpaceSlice::zeros(&grid),
            &grid,
        )
        .unwrap();
        assert_eq!(r, 0.0);
    }

    #[test]
    fn norm_non_increasing_without_source() {
        let grid = build_grid(48, 60, 0.4).unwrap();
        let mut problem = degenerate_problem(&grid);
        problem.potential = Potential::Constant { value: 0.7 };
        let u = solve_forward(&problem, &SpaceTimeField::zeros(&grid), &grid).unwrap();
        let mut prev = f64::INFINITY;
        for k in 0..=grid.m() {
            let norm = l2_norm(&u.slice_at(k), &grid);
            assert!(norm <= prev * (1.0 + 1e-14));
            prev = norm;
        }
    }

    #[test]
    fn degenerate_interior_nodes_stay_frozen() {
        let grid = build_grid(99, 40, 0.5).unwrap();
        let mut problem = degenerate_problem(&grid);
        // bump supported strictly inside (0.4, 0.6)
        problem.u0 = SpaceSlice::from_fn(&grid, |x| {
            if (0.45..=0.55).contains(&x) {
                (x - 0.45) * (0.55 - x)
            } else {
                0.0
            }
        });
        let op = DiscreteOperator::new(&problem, &grid);
        let u = solve_forward(&problem, &SpaceTimeField::zeros(&grid), &grid).unwrap();
        let a_half = op.a_half();
        let mut frozen = 0;
        for j in 0..grid.n() {
            if a_half[j] == 0.0 && a_half[j + 1] == 0.0 {
                frozen += 1;
                for k in 0..=grid.m() {
                    assert_eq!(u.slice(k)[j], problem.u0.values()[j]);
                }
            }
        }
        assert!(frozen > 5, "expected a decoupled block inside [0.4, 0.6]");
    }

    #[test]
    fn energy_report_for_decaying_state() {
        let grid = build_grid(199, 200, 0.1).unwrap();
        let problem = heat_problem(&grid);
        let report = energy_check(&problem, &SpaceTimeField::zeros(&grid), &grid).unwrap();
        assert_relative_eq!(report.sup_state_sq, 0.5, epsilon = 1e-3);
        assert!(report.c_emp.is_finite() && report.c_emp > 0.0);

        let mut zero = problem.clone();
        zero.u0 = SpaceSlice::zeros(&grid);
        let report = energy_check(&zero, &SpaceTimeField::zeros(&grid), &grid).unwrap();
        assert_eq!(report.sup_state_sq, 0.0);
        assert_eq!(report.c_emp, 0.0);
    }

    #[test]
    fn energy_quotient_bounded_over_random_samples() {
        let grid = build_grid(48, 48, 0.5).unwrap();
        let problem = degenerate_problem(&grid);
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        let mut quotients = Vec::new();
        for _ in 0..10 {
            let mut p = problem.clone();
            p.u0 = random_slice(&grid, &mut rng);
            let f = random_field(&grid, &mut rng);
            quotients.push(energy_check(&p, &f, &grid).unwrap().c_emp);
        }
        let max = quotients.iter().cloned().fold(0.0, f64::max);
        assert!(max.is_finite() && max > 0.0);
    }

    #[test]
    fn crank_nicolson_beats_implicit_euler() {
        let grid = build_grid(199, 50, 0.1).unwrap();
        let problem = heat_problem(&grid);
        let zero = SpaceTimeField::zeros(&grid);
        let exact = |x: f64| (-PI * PI * 0.1).exp() * (PI * x).sin();
        let err = |traj: &SpaceTimeField| {
            let diff = SpaceSlice::new(
                traj.slice(grid.m())
                    .iter()
                    .enumerate()
                    .map(|(j, &v)| v - exact(grid.x_interior(j)))
                    .collect(),
            );
            l2_norm(&diff, &grid)
        };
        let ie = solve_forward_scheme(&problem, &zero, &grid, Scheme::ImplicitEuler).unwrap();
        let cn = solve_forward_scheme(&problem, &zero, &grid, Scheme::CrankNicolson).unwrap();
        assert!(err(&cn) < err(&ie));
    }

    #[test]
    fn singular_system_reports_offending_level() {
        let grid = build_grid(16, 8, 0.4).unwrap();
        // a = 0 at every half node of this coarse grid, and 1 + dt*c = 0
        let profile = make_power_profile(0.01, 0.99, 2.0, 2.0).unwrap();
        let problem = ControlProblem::new(
            profile,
            Potential::Constant {
                value: -1.0 / grid.dt(),
            },
            Interval::new(0.2, 0.8),
            grid.t_final(),
            SpaceSlice::from_fn(&grid, |x| x),
        );
        let err = solve_forward(&problem, &SpaceTimeField::zeros(&grid), &grid).unwrap_err();
        assert_eq!(err, SolverError::SingularSystem { level: 1 });
        // the failing dt sits exactly at the recorded threshold
        let op = DiscreteOperator::new(&problem, &grid);
        assert_relative_eq!(op.dt_invertibility_threshold(), grid.dt());

        let benign = ControlProblem {
            potential: Potential::Constant { value: 0.7 },
            ..problem
        };
        let op = DiscreteOperator::new(&benign, &grid);
        assert_eq!(op.dt_invertibility_threshold(), f64::INFINITY);
    }

    #[test]
    fn thomas_solves_reference_system() {
        // A = tridiag(-1, 4, -1), x = [1, 2, 3] -> b = [2, 4, 10]
        let diag = vec![4.0, 4.0, 4.0];
        let off = vec![-1.0, -1.0];
        let mut rhs = vec![2.0, 4.0, 10.0];
        solve_symmetric_tridiagonal(&diag, &off, &mut rhs).unwrap();
        assert_relative_eq!(rhs[0], 1.0, max_relative = 1e-14);
        assert_relative_eq!(rhs[1], 2.0, max_relative = 1e-14);
        assert_relative_eq!(rhs[2], 3.0, max_relative = 1e-14);
    }
}
