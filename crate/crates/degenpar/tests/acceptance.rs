//! Acceptance suite: one test per criterion, each printing a single
//! pass/fail line (run with `-- --nocapture` to see them all). Tolerances
//! and runtime bounds are pinned in the assertions.

use std::f64::consts::PI;
use std::time::Instant;

use rand::Rng;

use degenpar::carleman::{
    build_weights, max_ratios, observability_study, ratio_study, z_transform_identity,
    CarlemanParams,
};
use degenpar::config::RunConfig;
use degenpar::harness;
use degenpar::hum::{eps_sweep, hum_solve, j_eps_gradient, j_eps_value, GramianOperator};
use degenpar::mesh::{
    build_grid, l2_norm, slice_inner, Grid, Interval, SpaceSlice, SpaceTimeField,
};
use degenpar::profile::{make_constant_profile, make_power_profile, DiffusionProfile};
use degenpar::sampling::sample_rng;
use degenpar::solver::{
    duality_residual, solve_adjoint, solve_forward, source_norm_sq, ControlProblem, Potential,
};

fn report(criterion: &str, pass: bool, detail: &str) -> bool {
    println!(
        "[criterion {criterion}] {}: {detail}",
        if pass { "PASS" } else { "FAIL" }
    );
    pass
}

fn super_strong_profile() -> DiffusionProfile {
    make_power_profile(0.4, 0.6, 2.0, 2.0).unwrap()
}

fn problem_with(profile: DiffusionProfile, omega: Interval, grid: &Grid) -> ControlProblem {
    ControlProblem::new(
        profile,
        Potential::Zero,
        omega,
        grid.t_final(),
        SpaceSlice::from_fn(grid, |x| (PI * x).sin()),
    )
}

fn default_problem(grid: &Grid) -> ControlProblem {
    problem_with(super_strong_profile(), Interval::new(0.3, 0.7), grid)
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
fn criterion_01_exact_discrete_duality() {
    let start = Instant::now();
    let grid = build_grid(64, 64, 0.5).unwrap();
    let mut worst: f64 = 0.0;
    for profile in [make_constant_profile(1.0).unwrap(), super_strong_profile()] {
        let problem = problem_with(profile, Interval::new(0.3, 0.7), &grid);
        for sample in 0..20u64 {
            let mut rng = sample_rng(101, sample);
            let u0 = random_slice(&grid, &mut rng);
            let f = random_field(&grid, &mut rng);
            let vt = random_slice(&grid, &mut rng);
            let (residual, scale) = duality_residual(&problem, &u0, &f, &vt, &grid).unwrap();
            worst = worst.max(residual / scale.max(1e-300));
        }
    }
    let elapsed = start.elapsed();
    let pass = worst <= 1e-12 && elapsed.as_secs_f64() < 5.0;
    let detail = format!(
        "worst relative duality residual {worst:.3e} (<= 1e-12), runtime {:.2}s (< 5s)",
        elapsed.as_secs_f64()
    );
    assert!(report("1 duality", pass, &detail), "{detail}");
}

#[test]
fn criterion_02_solver_convergence_orders() {
    let start = Instant::now();
    let terminal_error = |n: usize, m: usize| -> f64 {
        let grid = build_grid(n, m, 0.1).unwrap();
        let problem = problem_with(
            make_constant_profile(1.0).unwrap(),
            Interval::new(0.0, 1.0),
            &grid,
        );
        let u = solve_forward(&problem, &SpaceTimeField::zeros(&grid), &grid).unwrap();
        let decay = (-PI * PI * 0.1).exp();
        let diff = SpaceSlice::new(
            u.slice(grid.m())
                .iter()
                .enumerate()
                .map(|(j, &v)| v - decay * (PI * grid.x_interior(j)).sin())
                .collect(),
        );
        l2_norm(&diff, &grid)
    };

    let temporal: Vec<f64> = [10, 20, 40, 80]
        .iter()
        .map(|&m| terminal_error(199, m))
        .collect();
    let temporal_orders: Vec<f64> = temporal.windows(2).map(|w| (w[0] / w[1]).log2()).collect();

    // dt = h^2 exactly: m = T (n+1)^2 with T = 0.1
    let spatial: Vec<f64> = [20usize, 40, 80, 160]
        .iter()
        .map(|&np1| terminal_error(np1 - 1, np1 * np1 / 10))
        .collect();
    let spatial_orders: Vec<f64> = spatial.windows(2).map(|w| (w[0] / w[1]).log2()).collect();

    let elapsed = start.elapsed();
    let pass = temporal_orders.iter().all(|&o| o >= 0.9)
        && spatial_orders.iter().all(|&o| o >= 1.8)
        && elapsed.as_secs_f64() < 30.0;
    let detail = format!(
        "temporal orders {temporal_orders:.3?} (>= 0.9), spatial orders {spatial_orders:.3?} (>= 1.8), runtime {:.2}s (< 30s)",
        elapsed.as_secs_f64()
    );
    assert!(report("2 convergence", pass, &detail), "{detail}");
}

#[test]
fn criterion_03_weight_correctness() {
    // exact values on the unit horizon: t = 0.5 is level 50, x = 0.5 is slice index 49
    let grid = build_grid(99, 100, 1.0).unwrap();
    let params = CarlemanParams::new(1.0, 1.0, 1.0, 0.5, 0.15).unwrap();
    let weights = build_weights(&params, &grid).unwrap();
    let theta = weights.theta_at(50);
    let xi = weights.xi_at(50, 49);
    let sigma = weights.sigma_at(50, 49);
    let xi_exact = 256.0 * 0.25f64.exp();
    let sigma_exact = 256.0 * (0.5f64.exp() - 0.25f64.exp());
    let values_ok = (theta - 256.0).abs() <= 1e-10 * 256.0
        && (xi - xi_exact).abs() <= 1e-10 * xi_exact
        && (sigma - sigma_exact).abs() <= 1e-10 * sigma_exact;

    // positivity over the full default table for both default sharpness values
    let grid = build_grid(199, 400, 0.5).unwrap();
    let mut positive_ok = true;
    for lambda in [2.0, 4.0] {
        let params = CarlemanParams::new(4.0, lambda, 0.5, 0.5, 0.15).unwrap();
        let weights = build_weights(&params, &grid).unwrap();
        for k in weights.interior_levels() {
            for j in 0..grid.n() {
                positive_ok &= weights.xi_at(k, j) > 0.0 && weights.sigma_at(k, j) > 0.0;
            }
        }
    }

    // endpoint decay at the weakest default scale s = 1, lambda = 1
    let params = CarlemanParams::new(1.0, 1.0, 0.5, 0.5, 0.15).unwrap();
    let weights = build_weights(&params, &grid).unwrap();
    let bound = -30.0 * 10f64.ln();
    let endpoint_max = [1, grid.m() - 1]
        .iter()
        .flat_map(|&k| (0..grid.n()).map(move |j| (k, j)))
        .map(|(k, j)| weights.log_weight_xi3(k, j))
        .fold(f64::NEG_INFINITY, f64::max);
    let endpoint_ok = endpoint_max < bound;

    let pass = values_ok && positive_ok && endpoint_ok;
    let detail = format!(
        "theta(0.5)={theta:.6} xi={xi:.4} sigma={sigma:.4} (1e-10 rel), table positive: {positive_ok}, endpoint log10 weight {:.3e} (< -30)",
        endpoint_max / 10f64.ln()
    );
    assert!(report("3 weights", pass, &detail), "{detail}");
}

#[test]
fn criterion_04_transformed_equation_identity() {
    let residual_at = |n: usize, m: usize, s: f64| -> (f64, Grid, SpaceTimeField, ControlProblem) {
        let grid = build_grid(n, m, 0.5).unwrap();
        let mut problem = default_problem(&grid);
        problem.u0 = SpaceSlice::zeros(&grid);
        let params = CarlemanParams::for_problem(&problem, s, 1.0, 0.15).unwrap();
        let vt = SpaceSlice::from_fn(&grid, |x| (PI * x).sin());
        let h = SpaceTimeField::zeros(&grid);
        let v = solve_adjoint(&problem, &vt, &h, &grid).unwrap();
        let r = z_transform_identity(&v, &h, &params, &problem, &grid).unwrap();
        (r, grid, v, problem)
    };
    let (coarse, ..) = residual_at(32, 64, 2.0);
    let (fine, ..) = residual_at(128, 1024, 2.0);

    // s = 0 against a test-local centered-difference residual
    let (at_zero, grid, v, problem) = residual_at(64, 256, 0.0);
    let a_half = grid.half_node_coefficients(&problem.profile);
    let (mut num, mut nt, mut nd) = (0.0, 0.0, 0.0);
    for k in 1..grid.m() {
        let row = v.slice(k);
        for j in 0..grid.n() {
            let vt = (v.slice(k + 1)[j] - v.slice(k - 1)[j]) / (2.0 * grid.dt());
            let left = if j == 0 { 0.0 } else { row[j - 1] };
            let right = if j == grid.n() - 1 { 0.0 } else { row[j + 1] };
            let div = (a_half[j + 1] * (right - row[j]) - a_half[j] * (row[j] - left))
                / (grid.h() * grid.h());
            let r = vt + div;
            num += r * r;
            nt += vt * vt;
            nd += div * div;
        }
    }
    let oracle = num.sqrt() / (nt.sqrt() + nd.sqrt());
    let zero_ok = (at_zero - oracle).abs() <= 1e-12;

    let pass = fine < coarse && zero_ok;
    let detail = format!(
        "residual {coarse:.4e} (n=32,m=64) -> {fine:.4e} (n=128,m=1024) strictly decreasing: {}, s=0 vs plain residual diff {:.2e} (<= 1e-12)",
        fine < coarse,
        (at_zero - oracle).abs()
    );
    assert!(report("4 z-identity", pass, &detail), "{detail}");
}

#[test]
fn criterion_05_gramian_properties() {
    let start = Instant::now();
    let grid = build_grid(128, 128, 0.5).unwrap();
    let problem = default_problem(&grid);
    let gramian = GramianOperator::new(&problem, &grid);
    let mut worst_asym: f64 = 0.0;
    let mut min_quad = f64::INFINITY;
    for sample in 0..20u64 {
        let mut rng = sample_rng(55, sample);
        let p = random_slice(&grid, &mut rng);
        let q = random_slice(&grid, &mut rng);
        let lp = gramian.apply(&p).unwrap();
        let lq = gramian.apply(&q).unwrap();
        let left = slice_inner(&lp, &q, &grid);
        let right = slice_inner(&p, &lq, &grid);
        let scale = left.abs().max(right.abs()).max(1e-300);
        worst_asym = worst_asym.max((left - right).abs() / scale);
        min_quad = min_quad.min(slice_inner(&lp, &p, &grid));
    }
    let elapsed = start.elapsed();
    let pass = worst_asym <= 1e-12 && min_quad >= -1e-12 && elapsed.as_secs_f64() < 10.0;
    let detail = format!(
        "worst relative asymmetry {worst_asym:.3e} (<= 1e-12), min quadratic form {min_quad:.3e} (>= 0), runtime {:.2}s (< 10s)",
        elapsed.as_secs_f64()
    );
    assert!(report("5 gramian", pass, &detail), "{detail}");
}

#[test]
fn criterion_06_gradient_oracle() {
    let grid = build_grid(48, 40, 0.5).unwrap();
    let problem = default_problem(&grid);
    let eps = 1e-2;
    let mut rng = sample_rng(77, 0);
    let f = random_field(&grid, &mut rng);
    let g = j_eps_gradient(&problem, &f, eps, &grid).unwrap();
    let mut worst: f64 = 0.0;
    for _ in 0..5 {
        let d = random_field(&grid, &mut rng);
        let delta = 1e-5;
        let mut plus = f.clone();
        let mut minus = f.clone();
        for k in 0..=grid.m() {
            for j in 0..grid.n() {
                plus.slice_mut(k)[j] += delta * d.slice(k)[j];
                minus.slice_mut(k)[j] -= delta * d.slice(k)[j];
            }
        }
        let fd = (j_eps_value(&problem, &plus, eps, &grid).unwrap()
            - j_eps_value(&problem, &minus, eps, &grid).unwrap())
            / (2.0 * delta);
        let mut directional = 0.0;
        for k in 1..=grid.m() {
            for j in 0..grid.n() {
                directional += g.slice(k)[j] * d.slice(k)[j];
            }
        }
        directional *= grid.h() * grid.dt();
        worst = worst.max((fd - directional).abs() / directional.abs().max(1e-300));
    }
    let pass = worst <= 1e-5;
    let detail = format!("worst relative gradient error over 5 directions {worst:.3e} (<= 1e-5)");
    assert!(report("6 gradient", pass, &detail), "{detail}");
}

#[test]
fn criterion_07_optimality_relations() {
    let grid = build_grid(199, 400, 0.5).unwrap();
    let problem = default_problem(&grid);
    let eps = 1e-4;
    let tol = 1e-10;
    let result = hum_solve(&problem, eps, tol, 500, &grid).unwrap();

    let g = j_eps_gradient(&problem, &result.f_eps, eps, &grid).unwrap();
    let gradient_norm = source_norm_sq(&g, &grid, None).sqrt();
    let f_norm = source_norm_sq(&result.f_eps, &grid, None).sqrt();
    let gradient_ok = gradient_norm <= 1e-6 * (1.0 + f_norm);

    let gramian = GramianOperator::new(&problem, &grid);
    let b = gramian.free_trace(&problem.u0).unwrap();
    let scale = l2_norm(&b, &grid);
    let mismatch = SpaceSlice::new(
        result
            .u_eps
            .slice(grid.m())
            .iter()
            .zip(result.phi_terminal.values())
            .map(|(u, p)| u - eps * p)
            .collect(),
    );
    let terminal_error = l2_norm(&mismatch, &grid);
    let terminal_ok = terminal_error <= 10.0 * tol * scale;

    let pass = result.converged && gradient_ok && terminal_ok;
    let detail = format!(
        "gradient norm {gradient_norm:.3e} (<= {:.1e}), ||u(T) - eps phi|| {terminal_error:.3e} (<= {:.1e}), cg {} iters",
        1e-6 * (1.0 + f_norm),
        10.0 * tol * scale,
        result.cg_iterations
    );
    assert!(report("7 optimality", pass, &detail), "{detail}");
}

#[test]
fn criterion_08_default_sweep_bands() {
    let start = Instant::now();
    let grid = build_grid(199, 400, 0.5).unwrap();
    let problem = default_problem(&grid);
    let eps_list = [1e-1, 1e-2, 1e-3, 1e-4, 1e-5];
    let sweep = eps_sweep(&problem, &eps_list, 1e-8, 500, &grid).unwrap();
    let elapsed = start.elapsed();

    let ratios: Vec<f64> = sweep.rows.iter().map(|r| r.terminal_ratio).collect();
    let band = ratios.iter().cloned().fold(0.0f64, f64::max)
        / ratios.iter().cloned().fold(f64::INFINITY, f64::min);
    let band_ok = band <= 10.0;

    let cost_factor = sweep.rows[4].cost_ratio / sweep.rows[2].cost_ratio;
    let cost_ok = cost_factor < 2.0;

    let per_decade: Vec<f64> = (3..5)
        .map(|i| sweep.rows[i].cost_ratio / sweep.rows[i - 1].cost_ratio)
        .collect();

    let pass = band_ok && cost_ok && elapsed.as_secs_f64() < 120.0;
    let detail = format!(
        "(a) terminal_ratio band factor {band:.3} (<= 10): {band_ok}; (b) cost factor 1e-3->1e-5 {cost_factor:.4} (< 2): {cost_ok} [per-decade factors {per_decade:.3?}]; runtime {:.1}s (< 120s)",
        elapsed.as_secs_f64()
    );
    assert!(report("8 sweep bands", pass, &detail), "{detail}");
}

#[test]
fn criterion_09_geometry_sensitivity() {
    let grid = build_grid(199, 400, 0.5).unwrap();
    let eps_list = [1e-1, 1e-2, 1e-3, 1e-4, 1e-5];
    let covering = eps_sweep(&default_problem(&grid), &eps_list, 1e-8, 500, &grid).unwrap();
    let violating = eps_sweep(
        &problem_with(super_strong_profile(), Interval::new(0.75, 0.95), &grid),
        &eps_list,
        1e-8,
        500,
        &grid,
    )
    .unwrap();

    // growth of cost/||u0||^2 from eps = 1e-2 (row 1) to eps = 1e-5 (row 4)
    let growth = |rows: &degenpar::SweepReport| rows.rows[4].cost_ratio / rows.rows[1].cost_ratio;
    let violating_growth = growth(&violating);
    let covering_growth = growth(&covering);

    // the direction of the comparison is the assertion (exploratory tolerance)
    let pass = violating_growth >= 10.0 && violating_growth >= 10.0 * covering_growth;
    let detail = format!(
        "violating cost growth {violating_growth:.1}x (>= 10x), covering {covering_growth:.2}x, separation {:.1}x (>= 10x); covering < 2x would be {}",
        violating_growth / covering_growth,
        covering_growth < 2.0
    );
    assert!(report("9 geometry", pass, &detail), "{detail}");
}

#[test]
fn criterion_10_carleman_ratio_stability() {
    let start = Instant::now();
    let grid = build_grid(199, 400, 0.5).unwrap();
    let problem = default_problem(&grid);
    let base = CarlemanParams::for_problem(&problem, 4.0, 2.0, 0.15).unwrap();
    let reports = ratio_study(
        &problem,
        &base,
        &[4.0, 8.0, 16.0],
        &[2.0, 4.0],
        20,
        7,
        &grid,
    )
    .unwrap();
    let elapsed = start.elapsed();

    let finite = reports
        .iter()
        .filter(|r| !r.degenerate)
        .all(|r| r.ratio.is_finite());
    let table = max_ratios(&reports);
    let at = |s: f64, l: f64| {
        table
            .iter()
            .find(|(ts, tl, _)| *ts == s && *tl == l)
            .map(|(_, _, r)| *r)
            .unwrap()
    };
    let high = at(16.0, 4.0);
    let mid = at(8.0, 4.0);
    let bounded = high <= 1.2 * mid;

    let pass = finite && bounded && elapsed.as_secs_f64() < 60.0;
    let detail = format!(
        "all ratios finite: {finite}; max ratio (16,4) = {high:.4e} <= 1.2 x (8,4) = {:.4e}: {bounded}; runtime {:.1}s (< 60s)",
        1.2 * mid,
        elapsed.as_secs_f64()
    );
    assert!(report("10 ratio stability", pass, &detail), "{detail}");
}

#[test]
fn criterion_11_deterministic_artifacts() {
    let config = RunConfig::default_run();
    let run_all = |dir: &std::path::Path| {
        harness::cmd_carleman(&config, None, Some(dir)).unwrap();
        harness::cmd_sweep(&config, Some(dir)).unwrap();
        harness::cmd_observability(&config, None, Some(dir)).unwrap();
    };
    let dir_a = tempfile::tempdir().unwrap();
    let dir_b = tempfile::tempdir().unwrap();
    run_all(dir_a.path());
    run_all(dir_b.path());

    let mut pass = true;
    let mut detail = String::new();
    for name in ["ratio_study.csv", "sweep.csv", "observability.csv"] {
        let a = std::fs::read(dir_a.path().join(name)).unwrap();
        let b = std::fs::read(dir_b.path().join(name)).unwrap();
        let same = a == b;
        pass &= same;
        detail.push_str(&format!("{name}: {} bytes, identical: {same}; ", a.len()));
    }
    assert!(report("11 determinism", pass, &detail), "{detail}");
}

/// Cross-module consistency (module invariant, not a numbered criterion):
/// the sweep's cost column is bounded by the empirical observability
/// constant times ||u0||^2 within a factor of 5.
#[test]
fn cross_check_cost_against_observability_constant() {
    let grid = build_grid(199, 400, 0.5).unwrap();
    let problem = default_problem(&grid);
    let s = degenpar::normalized_s(1.0, grid.t_final(), 0.5);
    let params = CarlemanParams::for_problem(&problem, s, 1.0, 0.15).unwrap();
    let quotients = observability_study(&problem, &params, 20, 7, &grid).unwrap();
    let c_emp = quotients.iter().cloned().fold(0.0f64, f64::max);

    let sweep = eps_sweep(&problem, &[1e-1, 1e-2, 1e-3, 1e-4, 1e-5], 1e-8, 500, &grid).unwrap();
    let max_cost = sweep.rows.iter().map(|r| r.cost).fold(0.0f64, f64::max);
    let u0_sq = l2_norm(&problem.u0, &grid).powi(2);

    let pass = max_cost <= 5.0 * c_emp * u0_sq;
    let detail = format!(
        "max sweep cost {max_cost:.4e} <= 5 x C_emp x ||u0||^2 = {:.4e}",
        5.0 * c_emp * u0_sq
    );
    assert!(
        report("cost-observability cross-check", pass, &detail),
        "{detail}"
    );
}
