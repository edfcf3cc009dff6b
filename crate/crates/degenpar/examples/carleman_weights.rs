//! The weight family θ, η, ξ, σ: midpoint values against direct evaluation,
//! the scale of the time singularity, and the endpoint decay that makes the
//! log-domain quadrature mandatory at desk scale.
//!
//! ```bash
//! cargo run --release --example carleman_weights
//! ```

use degenpar::{build_grid, build_weights, CarlemanParams};

fn main() {
    // unit-horizon table: the values quoted in the module contracts
    let grid = build_grid(99, 100, 1.0).unwrap();
    let params = CarlemanParams::new(1.0, 1.0, 1.0, 0.5, 0.15).unwrap();
    let weights = build_weights(&params, &grid).unwrap();
    println!("T = 1, lambda = 1, x0 = 0.5, s = 1:");
    println!(
        "  theta(0.5)      = {:.6}  (exact 256)",
        weights.theta_at(50)
    );
    println!(
        "  xi(0.5, 0.5)    = {:.6}  (exact 256 e^0.25 = {:.6})",
        weights.xi_at(50, 49),
        256.0 * 0.25f64.exp()
    );
    println!(
        "  sigma(0.5, 0.5) = {:.6}  (exact 256 (e^0.5 - e^0.25) = {:.6})",
        weights.sigma_at(50, 49),
        256.0 * (0.5f64.exp() - 0.25f64.exp())
    );
    println!(
        "  log e^(-2 s sigma)(0.5, 0.5) = {:.4}",
        weights.log_decay_at(50, 49)
    );

    // desk-scale horizon: theta is already 256/T^8 = 65536 at the midpoint,
    // so the linear-domain weight underflows everywhere for s of order one
    let grid = build_grid(199, 400, 0.5).unwrap();
    let params = CarlemanParams::new(1.0, 1.0, 0.5, 0.5, 0.15).unwrap();
    let weights = build_weights(&params, &grid).unwrap();
    let mid = grid.m() / 2;
    println!("\nT = 0.5, lambda = 1, s = 1:");
    println!("  theta(T/2) = {:.1}", weights.theta_at(mid));
    println!(
        "  log10 of e^(-2 s sigma) xi^3 at (x0, T/2): {:.1}",
        weights.log_weight_xi3(mid, 99) / std::f64::consts::LN_10
    );
    let first: f64 = (0..grid.n())
        .map(|j| weights.log_weight_xi3(1, j))
        .fold(f64::NEG_INFINITY, f64::max);
    println!(
        "  max log10 of e^(-2 s sigma) xi^3 at the first interior level: {:.3e}",
        first / std::f64::consts::LN_10
    );
    println!("  (the endpoint contract: below -30, i.e. weight < 1e-30)");
    assert!(first / std::f64::consts::LN_10 < -30.0);
}
