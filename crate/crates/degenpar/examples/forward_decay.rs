//! Forward solves: the non-degenerate baseline against the exact separable
//! heat solution, and the degenerate profile where nodes inside the
//! zero-diffusivity block stay frozen without a control.
//!
//! ```bash
//! cargo run --release --example forward_decay
//! ```

use std::f64::consts::PI;

use degenpar::{
    build_grid, energy_check, l2_norm, make_constant_profile, make_power_profile, solve_forward,
    ControlProblem, Interval, Potential, SpaceSlice, SpaceTimeField,
};

fn main() {
    let grid = build_grid(199, 400, 0.1).unwrap();
    let u0 = SpaceSlice::from_fn(&grid, |x| (PI * x).sin());

    // a = 1: u(x,t) = e^{-pi^2 t} sin(pi x)
    let heat = ControlProblem::new(
        make_constant_profile(1.0).unwrap(),
        Potential::Zero,
        Interval::new(0.0, 1.0),
        grid.t_final(),
        u0.clone(),
    );
    let u = solve_forward(&heat, &SpaceTimeField::zeros(&grid), &grid).unwrap();
    let decay = (-PI * PI * grid.t_final()).exp();
    let error = SpaceSlice::new(
        u.slice(grid.m())
            .iter()
            .enumerate()
            .map(|(j, &v)| v - decay * (PI * grid.x_interior(j)).sin())
            .collect(),
    );
    println!(
        "heat baseline: exact terminal peak {:.6}, L2 error {:.3e}",
        decay,
        l2_norm(&error, &grid)
    );
    let energy = energy_check(&heat, &SpaceTimeField::zeros(&grid), &grid).unwrap();
    println!(
        "energy estimate: sup ||u||^2 = {:.6} (= ||u0||^2 at t=0), C_emp = {:.4}",
        energy.sup_state_sq, energy.c_emp
    );

    // degenerate profile: no diffusion on [0.4, 0.6]
    let grid = build_grid(199, 400, 0.5).unwrap();
    let degenerate = ControlProblem::new(
        make_power_profile(0.4, 0.6, 2.0, 2.0).unwrap(),
        Potential::Zero,
        Interval::new(0.3, 0.7),
        grid.t_final(),
        SpaceSlice::from_fn(&grid, |x| (PI * x).sin()),
    );
    let u = solve_forward(&degenerate, &SpaceTimeField::zeros(&grid), &grid).unwrap();
    let mid = grid.n() / 2;
    println!(
        "degenerate run: u(0.5, 0) = {:.6}, u(0.5, T) = {:.6} (frozen: no diffusion reaches it)",
        u.slice(0)[mid],
        u.slice(grid.m())[mid]
    );
    println!(
        "               u(0.2, 0) = {:.6}, u(0.2, T) = {:.6} (diffuses through a > 0)",
        u.slice(0)[39],
        u.slice(grid.m())[39]
    );
}
