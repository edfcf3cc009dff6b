//! The transformed-equation identity: for z = e^{−sσ} v the operators
//! satisfy P⁺z + P⁻z = G exactly in the continuum. The discrete relative
//! residual measures how well the solver's trajectory and the analytic
//! weight derivatives reproduce it, and shrinks under refinement; at s = 0
//! it collapses to the plain equation residual.
//!
//! ```bash
//! cargo run --release --example z_identity
//! ```

use degenpar::carleman::pde_residual;
use degenpar::{
    build_grid, make_power_profile, solve_adjoint, z_transform_identity, CarlemanParams,
    ControlProblem, Interval, Potential, SpaceSlice, SpaceTimeField,
};
use std::f64::consts::PI;

fn main() {
    println!("s = 2, lambda = 1, c = 0, v_T = sin(pi x), h = 0:");
    println!("  n     m      relative residual");
    for (n, m) in [(32, 64), (64, 256), (128, 1024)] {
        let grid = build_grid(n, m, 0.5).unwrap();
        let problem = ControlProblem::new(
            make_power_profile(0.4, 0.6, 2.0, 2.0).unwrap(),
            Potential::Zero,
            Interval::new(0.3, 0.7),
            grid.t_final(),
            SpaceSlice::zeros(&grid),
        );
        let params = CarlemanParams::for_problem(&problem, 2.0, 1.0, 0.15).unwrap();
        let vt = SpaceSlice::from_fn(&grid, |x| (PI * x).sin());
        let h = SpaceTimeField::zeros(&grid);
        let v = solve_adjoint(&problem, &vt, &h, &grid).unwrap();
        let r = z_transform_identity(&v, &h, &params, &problem, &grid).unwrap();
        println!("  {n:<5} {m:<6} {r:.6e}");
    }

    // s = 0: weights collapse, the identity is the bare equation residual
    let grid = build_grid(64, 256, 0.5).unwrap();
    let problem = ControlProblem::new(
        make_power_profile(0.4, 0.6, 2.0, 2.0).unwrap(),
        Potential::Zero,
        Interval::new(0.3, 0.7),
        grid.t_final(),
        SpaceSlice::zeros(&grid),
    );
    let params = CarlemanParams::for_problem(&problem, 0.0, 1.0, 0.15).unwrap();
    let vt = SpaceSlice::from_fn(&grid, |x| (PI * x).sin());
    let h = SpaceTimeField::zeros(&grid);
    let v = solve_adjoint(&problem, &vt, &h, &grid).unwrap();
    let weighted = z_transform_identity(&v, &h, &params, &problem, &grid).unwrap();
    let plain = pde_residual(&v, &h, &problem, &grid).unwrap();
    println!(
        "\ns = 0 consistency: identity residual = {weighted:.6e}, plain residual = {plain:.6e}"
    );
}
