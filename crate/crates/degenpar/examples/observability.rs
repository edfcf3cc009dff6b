//! Observability quotients `‖v(0)‖² / ∬_ω e^{−2sσ}ξ³|v|²` for seeded random
//! terminal data. Runs at the weight-normalized `s` (observation weight
//! peaks at 1), where the quotient is representable; the sample maximum is
//! the empirical observability constant.
//!
//! ```bash
//! cargo run --release --example observability
//! ```

use degenpar::{
    build_grid, make_constant_profile, make_power_profile, normalized_s, observability_study,
    CarlemanParams, ControlProblem, Interval, Potential, SpaceSlice,
};
use std::f64::consts::PI;

fn main() {
    let grid = build_grid(199, 400, 0.5).unwrap();
    let s = normalized_s(1.0, grid.t_final(), 0.5);
    println!("weight-normalized s = {s:.6e} (lambda = 1, T = 0.5, x0 = 0.5)\n");

    let degenerate = ControlProblem::new(
        make_power_profile(0.4, 0.6, 2.0, 2.0).unwrap(),
        Potential::Zero,
        Interval::new(0.3, 0.7),
        grid.t_final(),
        SpaceSlice::from_fn(&grid, |x| (PI * x).sin()),
    );
    let params = CarlemanParams::for_problem(&degenerate, s, 1.0, 0.15).unwrap();
    let quotients = observability_study(&degenerate, &params, 20, 7, &grid).unwrap();
    let max = quotients.iter().cloned().fold(0.0f64, f64::max);
    let min = quotients.iter().cloned().fold(f64::INFINITY, f64::min);
    println!("super-strong profile, omega = (0.3, 0.7), 20 samples:");
    println!("  quotients in [{min:.4e}, {max:.4e}], empirical C = {max:.4e}");

    // full observation on the non-degenerate baseline: small quotients
    let full = ControlProblem::new(
        make_constant_profile(1.0).unwrap(),
        Potential::Zero,
        Interval::new(0.0, 1.0),
        grid.t_final(),
        SpaceSlice::zeros(&grid),
    );
    let params = CarlemanParams::new(s, 1.0, grid.t_final(), 0.5, 0.3).unwrap();
    let quotients = observability_study(&full, &params, 20, 7, &grid).unwrap();
    let max_full = quotients.iter().cloned().fold(0.0f64, f64::max);
    println!("a = 1 with full observation omega = (0, 1):");
    println!("  empirical C = {max_full:.4e}");
    println!(
        "\nfull observation sees more of v, so its constant is smaller: {}",
        max_full < max
    );
}
