//! Penalized Hilbert Uniqueness Method on the dual problem.
//!
//! Minimising `J_ε(f) = ½∬|f|² + (1/2ε)∫|u^f(T)|²` is equivalent to solving
//! the symmetric positive definite system `(Λ + εI)φ_T = u_free(T)` for the
//! adjoint terminal datum, where `Λ` is the control Gramian: the terminal
//! trace of the state driven by the window-restricted adjoint trajectory of
//! `φ_T`. With the convention `f_ε = −1_ω φ_ε` the optimum satisfies
//! `u_ε(T) = ε·φ_T`, the discrete restatement of the optimality system.
//!
//! Source staggering: the forward march consumes the control at level `k+1`
//! on the step `k → k+1`, and the Gramian pairs it with the adjoint value at
//! level `k`. The control field is therefore assembled as
//! `f^{k+1} = −1_ω φ^k`, which is exactly what makes `Λ` the transpose
//! product `Σ_k dt·B_k 1_ω B_k` and hence symmetric — conjugate gradients
//! depend on it.

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::mesh::{l2_norm, Grid, SpaceSlice, SpaceTimeField};
use crate::solver::{
    march_adjoint, march_forward, solve_adjoint, solve_forward, source_norm_sq, ControlProblem,
    DiscreteOperator, SolverError,
};

#[derive(Debug, Error, PartialEq)]
pub enum HumError {
    #[error("penalty must be positive, got {eps}")]
    NonPositiveEps { eps: f64 },
    #[error("eps list must be strictly decreasing and positive")]
    BadEpsList,
    #[error(transparent)]
    Solver(#[from] SolverError),
}

/// Output of one penalized-HUM solve.
#[derive(Debug, Clone)]
pub struct HumResult {
    /// Dual minimizer `φ_T`.
    pub phi_terminal: SpaceSlice,
    /// Control `f_ε = −1_ω φ_ε`, staggered onto the source rows.
    pub f_eps: SpaceTimeField,
    /// Controlled state from `(u₀, f_ε)`.
    pub u_eps: SpaceTimeField,
    /// `∬_Q |f_ε|²` in the source convention.
    pub cost: f64,
    /// `‖u_ε(·,T)‖²`.
    pub terminal_sq: f64,
    /// Value of the penalized functional at the control.
    pub j_eps: f64,
    pub cg_iterations: usize,
    /// Final relative residual `‖b − (Λ+εI)φ_T‖ / ‖b‖`.
    pub cg_residual: f64,
    pub converged: bool,
    /// Dual quadratic `½⟨(Λ+εI)φ,φ⟩ − ⟨b,φ⟩` after each iteration.
    pub dual_history: Vec<f64>,
}

/// One row of an ε-sweep.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepRow {
    pub eps: f64,
    pub cost: f64,
    pub terminal_sq: f64,
    /// `terminal_sq / (ε·‖u₀‖²)`, 0 for zero data.
    pub terminal_ratio: f64,
    /// `cost / ‖u₀‖²`, 0 for zero data.
    pub cost_ratio: f64,
    pub cg_iterations: usize,
    pub converged: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepReport {
    pub rows: Vec<SweepRow>,
}

/// The Gramian and free dynamics of one problem, with the step operator
/// assembled once.
pub struct GramianOperator<'a> {
    op: DiscreteOperator,
    grid: &'a Grid,
}

impl<'a> GramianOperator<'a> {
    pub fn new(problem: &ControlProblem, grid: &'a Grid) -> Self {
        GramianOperator {
            op: DiscreteOperator::new(problem, grid),
            grid,
        }
    }

    /// `Λ φ_T`: backward solve from `φ_T`, then the forward march from zero
    /// driven by the window-restricted adjoint values.
    pub fn apply(&self, phi_terminal: &SpaceSlice) -> Result<SpaceSlice, SolverError> {
        let phi = march_adjoint(
            &self.op,
            phi_terminal,
            &SpaceTimeField::zeros(self.grid),
            self.grid,
        )?;
        let mask = self.op.omega_mask();
        let dt = self.grid.dt();
        let mut state = vec![0.0; self.grid.n()];
        for k in 0..self.grid.m() {
            let source = phi.slice(k);
            for (j, s) in state.iter_mut().enumerate() {
                if mask[j] {
                    *s += dt * source[j];
                }
            }
            self.op.step_solve(k + 1, &mut state)?;
        }
        Ok(SpaceSlice::new(state))
    }

    /// Terminal trace of the free evolution from `u₀` (no control).
    pub fn free_trace(&self, u0: &SpaceSlice) -> Result<SpaceSlice, SolverError> {
        let traj = march_forward(&self.op, u0, &SpaceTimeField::zeros(self.grid), self.grid)?;
        Ok(traj.slice_at(self.grid.m()))
    }
}

/// `Λ φ_T` for a single application; studies and solves go through
/// [`GramianOperator`] to reuse the assembled step matrices.
pub fn gramian_apply(
    problem: &ControlProblem,
    phi_terminal: &SpaceSlice,
    grid: &Grid,
) -> Result<SpaceSlice, SolverError> {
    GramianOperator::new(problem, grid).apply(phi_terminal)
}

struct CgOutcome {
    solution: Vec<f64>,
    iterations: usize,
    rel_residual: f64,
    converged: bool,
    dual_history: Vec<f64>,
}

/// Conjugate gradients on `(Λ + εI)x = b` in the `h`-weighted inner product,
/// stopping at `‖r‖/‖b‖ ≤ tol`. The dual quadratic value decreases by
/// `−½α⟨r,r⟩` per step, recorded for the monotonicity diagnostics.
fn conjugate_gradient(
    gramian: &GramianOperator,
    eps: f64,
    b: &[f64],
    start: Vec<f64>,
    tol: f64,
    max_iter: usize,
    grid: &Grid,
) -> Result<CgOutcome, SolverError> {
    let h = grid.h();
    let dot = |x: &[f64], y: &[f64]| h * x.iter().zip(y).map(|(a, b)| a * b).sum::<f64>();
    let norm_b = dot(b, b).sqrt();
    if norm_b == 0.0 {
        return Ok(CgOutcome {
            solution: vec![0.0; b.len()],
            iterations: 0,
            rel_residual: 0.0,
            converged: true,
            dual_history: Vec::new(),
        });
    }
    let apply = |x: &[f64]| -> Result<Vec<f64>, SolverError> {
        let lam = gramian.apply(&SpaceSlice::new(x.to_vec()))?;
        Ok(lam
            .values()
            .iter()
            .zip(x)
            .map(|(l, xi)| l + eps * xi)
            .collect())
    };

    let mut x = start;
    let ax = apply(&x)?;
    let mut r: Vec<f64> = b.iter().zip(&ax).map(|(bi, ai)| bi - ai).collect();
    let mut p = r.clone();
    let mut rs = dot(&r, &r);
    let mut dual = 0.5 * dot(&ax, &x) - dot(b, &x);
    let mut dual_history = Vec::new();
    let mut iterations = 0;

    while rs.sqrt() / norm_b > tol && iterations < max_iter {
        let ap = apply(&p)?;
        let alpha = rs / dot(&p, &ap);
        if !alpha.is_finite() {
            break;
        }
        for ((xi, pi), (ri, api)) in x.iter_mut().zip(&p).zip(r.iter_mut().zip(&ap)) {
            *xi += alpha * pi;
            *ri -= alpha * api;
        }
        dual -= 0.5 * alpha * rs;
        dual_history.push(dual);
        let rs_next = dot(&r, &r);
        let beta = rs_next / rs;
        rs = rs_next;
        for (pi, ri) in p.iter_mut().zip(&r) {
            *pi = ri + beta * *pi;
        }
        iterations += 1;
    }
    let rel_residual = rs.sqrt() / norm_b;
    Ok(CgOutcome {
        solution: x,
        iterations,
        rel_residual,
        converged: rel_residual <= tol,
        dual_history,
    })
}

/// Assembles the staggered control field `f^{k+1} = −1_ω φ^k` (row 0 unused
/// by the march and left zero).
fn control_from_adjoint(phi: &SpaceTimeField, mask: &[bool], grid: &Grid) -> SpaceTimeField {
    let mut f = SpaceTimeField::zeros(grid);
    for k in 1..=grid.m() {
        let source = phi.slice(k - 1);
        let row = f.slice_mut(k);
        for j in 0..grid.n() {
            if mask[j] {
                row[j] = -source[j];
            }
        }
    }
    f
}

/// Penalized HUM solve at penalty `eps`, conjugate gradient on the dual
/// system with optional warm start.
pub fn hum_solve(
    problem: &ControlProblem,
    eps: f64,
    tol: f64,
    max_iter: usize,
    grid: &Grid,
) -> Result<HumResult, HumError> {
    hum_solve_from(problem, eps, tol, max_iter, grid, None)
}

pub fn hum_solve_from(
    problem: &ControlProblem,
    eps: f64,
    tol: f64,
    max_iter: usize,
    grid: &Grid,
    warm_start: Option<&SpaceSlice>,
) -> Result<HumResult, HumError> {
    if !(eps > 0.0) {
        return Err(HumError::NonPositiveEps { eps });
    }
    let gramian = GramianOperator::new(problem, grid);
    let b = gramian.free_trace(&problem.u0)?;
    let start = warm_start
        .map(|s| s.values().to_vec())
        .unwrap_or_else(|| vec![0.0; grid.n()]);
    let cg = conjugate_gradient(&gramian, eps, b.values(), start, tol, max_iter, grid)?;

    let phi_terminal = SpaceSlice::new(cg.solution);
    let phi = solve_adjoint(problem, &phi_terminal, &SpaceTimeField::zeros(grid), grid)?;
    let mask = grid.window_mask(problem.omega);
    let f_eps = control_from_adjoint(&phi, &mask, grid);
    let u_eps = solve_forward(problem, &f_eps, grid)?;
    let cost = source_norm_sq(&f_eps, grid, None);
    let terminal_sq = l2_norm(&u_eps.slice_at(grid.m()), grid).powi(2);
    Ok(HumResult {
        phi_terminal,
        f_eps,
        u_eps,
        cost,
        terminal_sq,
        j_eps: 0.5 * cost + terminal_sq / (2.0 * eps),
        cg_iterations: cg.iterations,
        cg_residual: cg.rel_residual,
        converged: cg.converged,
        dual_history: cg.dual_history,
    })
}

/// The penalized functional `½∬|f|² + (1/2ε)‖u^f(T)‖²` at a given control,
/// in the discrete source convention of the forward march.
pub fn j_eps_value(
    problem: &ControlProblem,
    f: &SpaceTimeField,
    eps: f64,
    grid: &Grid,
) -> Result<f64, HumError> {
    if !(eps > 0.0) {
        return Err(HumError::NonPositiveEps { eps });
    }
    let u = solve_forward(problem, f, grid)?;
    let terminal_sq = l2_norm(&u.slice_at(grid.m()), grid).powi(2);
    Ok(0.5 * source_norm_sq(f, grid, None) + terminal_sq / (2.0 * eps))
}

/// Gradient field of the discrete functional: `g^k = f^k + 1_ω ψ^{k−1}` on
/// the source rows, where `ψ` is the adjoint trajectory from `u^f(T)/ε`.
/// Vanishes at the minimizer — the optimality relation restated.
pub fn j_eps_gradient(
    problem: &ControlProblem,
    f: &SpaceTimeField,
    eps: f64,
    grid: &Grid,
) -> Result<SpaceTimeField, HumError> {
    if !(eps > 0.0) {
        return Err(HumError::NonPositiveEps { eps });
    }
    let u = solve_forward(problem, f, grid)?;
    let psi_terminal = u.slice_at(grid.m()).scaled(1.0 / eps);
    let psi = solve_adjoint(problem, &psi_terminal, &SpaceTimeField::zeros(grid), grid)?;
    let mask = grid.window_mask(problem.omega);
    let mut g = SpaceTimeField::zeros(grid);
    for k in 1..=grid.m() {
        let frow = f.slice(k);
        let prow = psi.slice(k - 1);
        let grow = g.slice_mut(k);
        for j in 0..grid.n() {
            grow[j] = frow[j] + if mask[j] { prow[j] } else { 0.0 };
        }
    }
    Ok(g)
}

/// Runs [`hum_solve`] for each penalty in a strictly decreasing list,
/// warm-starting each conjugate-gradient solve from the previous minimizer.
pub fn eps_sweep(
    problem: &ControlProblem,
    eps_list: &[f64],
    tol: f64,
    max_iter: usize,
    grid: &Grid,
) -> Result<SweepReport, HumError> {
    if eps_list.is_empty()
        || eps_list.iter().any(|e| !(*e > 0.0))
        || eps_list.windows(2).any(|w| w[1] >= w[0])
    {
        return Err(HumError::BadEpsList);
    }
    let u0_sq = l2_norm(&problem.u0, grid).powi(2);
    let mut rows = Vec::with_capacity(eps_list.len());
    let mut warm: Option<SpaceSlice> = None;
    for &eps in eps_list {
        let result = hum_solve_from(problem, eps, tol, max_iter, grid, warm.as_ref())?;
        rows.push(SweepRow {
            eps,
            cost: result.cost,
            terminal_sq: result.terminal_sq,
            terminal_ratio: if u0_sq > 0.0 {
                result.terminal_sq / (eps * u0_sq)
            } else {
                0.0
            },
            cost_ratio: if u0_sq > 0.0 {
                result.cost / u0_sq
            } else {
                0.0
            },
            cg_iterations: result.cg_iterations,
            converged: result.converged,
        });
        warm = Some(result.phi_terminal);
    }
    Ok(SweepReport { rows })
}
