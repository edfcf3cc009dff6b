//! One penalized-HUM solve on the super-strong configuration: conjugate
//! gradients on the control Gramian, then the optimality cross-checks — the
//! control equals minus the window-restricted adjoint trajectory, the
//! terminal state equals ε·φ_T up to the CG residual, and the functional
//! gradient vanishes at the minimizer.
//!
//! ```bash
//! cargo run --release --example hum_control
//! ```

use degenpar::solver::source_norm_sq;
use degenpar::{
    build_grid, hum_solve, j_eps_gradient, j_eps_value, l2_norm, make_power_profile,
    ControlProblem, Interval, Potential, SpaceSlice, SpaceTimeField,
};
use std::f64::consts::PI;

fn main() {
    let grid = build_grid(199, 400, 0.5).unwrap();
    let problem = ControlProblem::new(
        make_power_profile(0.4, 0.6, 2.0, 2.0).unwrap(),
        Potential::Zero,
        Interval::new(0.3, 0.7),
        grid.t_final(),
        SpaceSlice::from_fn(&grid, |x| (PI * x).sin()),
    );
    let eps = 1e-4;
    let tol = 1e-10;
    let result = hum_solve(&problem, eps, tol, 500, &grid).unwrap();

    let u0_sq = l2_norm(&problem.u0, &grid).powi(2);
    println!("penalized HUM at eps = {eps:.0e}, tol = {tol:.0e}:");
    println!("  cg iterations      {}", result.cg_iterations);
    println!("  cg residual        {:.3e}", result.cg_residual);
    println!(
        "  cost               {:.6e}  ({:.3} x ||u0||^2)",
        result.cost,
        result.cost / u0_sq
    );
    println!(
        "  ||u(T)||^2         {:.6e}  (uncontrolled: {:.6e})",
        result.terminal_sq,
        {
            let free =
                degenpar::solve_forward(&problem, &SpaceTimeField::zeros(&grid), &grid).unwrap();
            l2_norm(&free.slice_at(grid.m()), &grid).powi(2)
        }
    );
    println!("  J_eps(f_eps)       {:.6e}", result.j_eps);
    println!(
        "  J_eps(0)           {:.6e}",
        j_eps_value(&problem, &SpaceTimeField::zeros(&grid), eps, &grid).unwrap()
    );

    // optimality: u(T) = eps * phi_T up to the CG residual scale
    let mismatch = SpaceSlice::new(
        result
            .u_eps
            .slice(grid.m())
            .iter()
            .zip(result.phi_terminal.values())
            .map(|(u, p)| u - eps * p)
            .collect(),
    );
    println!(
        "  ||u(T) - eps phi_T|| = {:.3e} (CG residual scale)",
        l2_norm(&mismatch, &grid)
    );

    // first-order optimality of the primal functional
    let gradient = j_eps_gradient(&problem, &result.f_eps, eps, &grid).unwrap();
    println!(
        "  gradient norm at minimizer = {:.3e}",
        source_norm_sq(&gradient, &grid, None).sqrt()
    );
}
