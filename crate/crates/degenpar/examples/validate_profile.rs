//! Structural hypothesis checks for degenerate diffusion coefficients:
//! a passing super-strong configuration, an integrable-inverse failure and
//! a control window that misses the degeneracy interval.
//!
//! ```bash
//! cargo run --release --example validate_profile
//! ```

use degenpar::{make_power_profile, validate_hypotheses, Interval};

fn print_report(label: &str, report: &degenpar::HypothesisReport) {
    println!("{label}");
    println!("  degeneracy_ok            {}", report.degeneracy_ok);
    println!(
        "  non_integrable_inverse   {}",
        report.non_integrable_inverse_ok
    );
    println!("  regularity_ok            {}", report.regularity_ok);
    println!("  geometry_ok              {}", report.geometry_ok);
    println!("  m_delta                  {:.6e}", report.m_delta);
    for msg in &report.messages {
        println!("  note: {msg}");
    }
    println!();
}

fn main() {
    let omega = Interval::new(0.3, 0.7);

    // the reference super-strong profile: zero on [0.4, 0.6], quadratic branches
    let profile = make_power_profile(0.4, 0.6, 2.0, 2.0).unwrap();
    let report = validate_hypotheses(&profile, omega, 0.15);
    print_report("power 0.4/0.6 alpha=2 beta=2, omega=(0.3,0.7):", &report);
    assert!(report.all_ok());

    // alpha = 1/2 makes 1/a integrable near A: the well-posedness hypothesis fails
    let weak = make_power_profile(0.4, 0.6, 0.5, 2.0).unwrap();
    print_report(
        "power 0.4/0.6 alpha=0.5 beta=2 (integrable inverse):",
        &validate_hypotheses(&weak, omega, 0.15),
    );

    // control window disjoint from the degeneracy interval
    let report = validate_hypotheses(&profile, Interval::new(0.75, 0.95), 0.05);
    print_report("omega=(0.75,0.95) misses [0.4,0.6]:", &report);
    assert!(!report.geometry_ok);

    // point degeneracy A = B is admitted
    let point = make_power_profile(0.5, 0.5, 3.0, 2.0).unwrap();
    print_report(
        "point degeneracy A=B=0.5:",
        &validate_hypotheses(&point, omega, 0.1),
    );
}
