//! Self-convergence of the implicit-Euler march against the exact separable
//! heat solution: first order in dt at fixed h, second order in h under
//! dt ∝ h², plus the Crank–Nicolson flag for comparison.
//!
//! ```bash
//! cargo run --release --example convergence
//! ```

use degenpar::solver::{solve_forward_scheme, Scheme};
use degenpar::{
    build_grid, l2_norm, make_constant_profile, ControlProblem, Interval, Potential, SpaceSlice,
    SpaceTimeField,
};
use std::f64::consts::PI;

fn terminal_error(n: usize, m: usize, scheme: Scheme) -> f64 {
    let grid = build_grid(n, m, 0.1).unwrap();
    let problem = ControlProblem::new(
        make_constant_profile(1.0).unwrap(),
        Potential::Zero,
        Interval::new(0.0, 1.0),
        grid.t_final(),
        SpaceSlice::from_fn(&grid, |x| (PI * x).sin()),
    );
    let u = solve_forward_scheme(&problem, &SpaceTimeField::zeros(&grid), &grid, scheme).unwrap();
    let decay = (-PI * PI * grid.t_final()).exp();
    let diff = SpaceSlice::new(
        u.slice(grid.m())
            .iter()
            .enumerate()
            .map(|(j, &v)| v - decay * (PI * grid.x_interior(j)).sin())
            .collect(),
    );
    l2_norm(&diff, &grid)
}

fn main() {
    println!("temporal refinement at fixed n = 199 (implicit Euler, order -> 1):");
    let mut prev = f64::NAN;
    for m in [10, 20, 40, 80] {
        let e = terminal_error(199, m, Scheme::ImplicitEuler);
        print!("  m = {m:<4} error = {e:.6e}");
        if prev.is_finite() {
            print!("  order = {:.3}", (prev / e).log2());
        }
        println!();
        prev = e;
    }

    println!("spatial refinement with dt = h^2 (order -> 2):");
    let mut prev = f64::NAN;
    for np1 in [20usize, 40, 80, 160] {
        let (n, m) = (np1 - 1, np1 * np1 / 10);
        let e = terminal_error(n, m, Scheme::ImplicitEuler);
        print!("  n = {n:<4} m = {m:<5} error = {e:.6e}");
        if prev.is_finite() {
            print!("  order = {:.3}", (prev / e).log2());
        }
        println!();
        prev = e;
    }

    println!("Crank-Nicolson flag at n = 199, m = 50:");
    println!(
        "  implicit Euler  error = {:.6e}",
        terminal_error(199, 50, Scheme::ImplicitEuler)
    );
    println!(
        "  Crank-Nicolson  error = {:.6e}",
        terminal_error(199, 50, Scheme::CrankNicolson)
    );
}
