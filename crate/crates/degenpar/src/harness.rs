//! Batch experiment harness behind the CLI subcommands: each function runs
//! one study from a [`RunConfig`], writes its CSV/JSON artifacts into the
//! output directory and returns a summary for exit-status decisions.

use std::path::{Path, PathBuf};

use serde::Serialize;
use thiserror::Error;

use crate::carleman::{
    max_ratios, observability_study, pde_residual, ratio_study, z_transform_identity, CarlemanError,
};
use crate::config::{ConfigError, RunConfig};
use crate::hum::{eps_sweep, hum_solve, HumError};
use crate::io::{
    write_field_csv, write_json, write_observability_csv, write_ratio_csv, write_slice_csv,
    write_sweep_csv, IoError,
};
use crate::mesh::{build_grid, l2_norm, SpaceSlice, SpaceTimeField};
use crate::profile::{validate_hypotheses, HypothesisReport};
use crate::solver::{
    energy_check, solve_adjoint, solve_forward, ControlProblem, Potential, SolverError,
};

#[derive(Debug, Error)]
pub enum HarnessError {
    #[error(transparent)]
    Config(#[from] ConfigError),
    #[error(transparent)]
    Io(#[from] IoError),
    #[error(transparent)]
    Solver(#[from] SolverError),
    #[error(transparent)]
    Carleman(#[from] CarlemanError),
    #[error(transparent)]
    Hum(#[from] HumError),
    #[error("output directory {path}: {source}")]
    OutputDir {
        path: String,
        source: std::io::Error,
    },
}

fn ensure_dir(dir: &Path) -> Result<(), HarnessError> {
    std::fs::create_dir_all(dir).map_err(|e| HarnessError::OutputDir {
        path: dir.display().to_string(),
        source: e,
    })
}

fn out_dir(config: &RunConfig, override_dir: Option<&Path>) -> PathBuf {
    override_dir
        .map(Path::to_path_buf)
        .unwrap_or_else(|| PathBuf::from(&config.output_dir))
}

/// Hypothesis validation: prints a pass/fail table, writes `validate.json`.
/// The caller maps `all_ok` to the exit status.
pub fn cmd_validate(
    config: &RunConfig,
    override_dir: Option<&Path>,
) -> Result<HypothesisReport, HarnessError> {
    let report = validate_hypotheses(&config.profile, config.omega_interval(), config.delta);
    let dir = out_dir(config, override_dir);
    ensure_dir(&dir)?;
    write_json(&dir.join("validate.json"), &report)?;

    let flag = |ok: bool| if ok { "pass" } else { "FAIL" };
    println!("hypothesis check");
    println!("  degeneracy            {}", flag(report.degeneracy_ok));
    println!(
        "  non-integrable 1/a    {}",
        flag(report.non_integrable_inverse_ok)
    );
    println!("  regularity            {}", flag(report.regularity_ok));
    println!("  geometry [A,B] in w   {}", flag(report.geometry_ok));
    println!("  m_delta               {:.6e}", report.m_delta);
    for msg in &report.messages {
        println!("  note: {msg}");
    }
    Ok(report)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SolveMode {
    Forward,
    Adjoint,
}

#[derive(Debug, Serialize)]
pub struct SolveSummary {
    pub mode: String,
    pub trajectory_csv: String,
    pub energy: crate::solver::EnergyReport,
}

/// Forward or adjoint solve with optional data files; writes the trajectory
/// CSV and an energy report JSON.
pub fn cmd_solve(
    config: &RunConfig,
    mode: SolveMode,
    initial_file: Option<&Path>,
    source_file: Option<&Path>,
    override_dir: Option<&Path>,
) -> Result<SolveSummary, HarnessError> {
    let grid = config.build_grid()?;
    let mut problem = config.build_problem(&grid)?;
    let dir = out_dir(config, override_dir);
    ensure_dir(&dir)?;

    let source = match source_file {
        Some(path) => crate::io::read_field_csv(path, &grid)?,
        None => SpaceTimeField::zeros(&grid),
    };

    let (name, trajectory, energy) = match mode {
        SolveMode::Forward => {
            if let Some(path) = initial_file {
                problem.u0 = crate::io::read_slice_csv(path, &grid)?;
            }
            let energy = energy_check(&problem, &source, &grid)?;
            let trajectory = solve_forward(&problem, &source, &grid)?;
            ("forward_trajectory.csv", trajectory, energy)
        }
        SolveMode::Adjoint => {
            let v_terminal = match initial_file {
                Some(path) => crate::io::read_slice_csv(path, &grid)?,
                None => SpaceSlice::from_fn(&grid, |x| (std::f64::consts::PI * x).sin()),
            };
            let trajectory = solve_adjoint(&problem, &v_terminal, &source, &grid)?;
            let source_sq = crate::solver::source_norm_sq(&source, &grid, None);
            let energy = crate::solver::energy_of_trajectory(
                &trajectory,
                &problem.profile,
                &grid,
                source_sq,
                &v_terminal,
            );
            ("adjoint_trajectory.csv", trajectory, energy)
        }
    };
    let csv_path = dir.join(name);
    write_field_csv(&csv_path, &trajectory, &grid)?;
    write_json(&dir.join("energy.json"), &energy)?;
    println!(
        "{} written ({} levels), sup ||u||^2 = {:.6e}, C_emp = {:.6e}",
        csv_path.display(),
        trajectory.rows(),
        energy.sup_state_sq,
        energy.c_emp
    );
    Ok(SolveSummary {
        mode: match mode {
            SolveMode::Forward => "forward".into(),
            SolveMode::Adjoint => "adjoint".into(),
        },
        trajectory_csv: name.to_string(),
        energy,
    })
}

#[derive(Debug, Serialize)]
pub struct CellMax {
    pub s: f64,
    pub lambda: f64,
    pub max_ratio: f64,
}

#[derive(Debug, Serialize)]
pub struct CarlemanSummary {
    pub sample_count: usize,
    pub seed: u64,
    pub degenerate_samples: usize,
    pub max_ratios: Vec<CellMax>,
}

/// Ratio study over the configured `(s, λ)` grid; writes `ratio_study.csv`
/// and `carleman_summary.json`.
pub fn cmd_carleman(
    config: &RunConfig,
    seed_override: Option<u64>,
    override_dir: Option<&Path>,
) -> Result<CarlemanSummary, HarnessError> {
    let grid = config.build_grid()?;
    let problem = config.build_problem(&grid)?;
    let seed = seed_override.unwrap_or(config.carleman.seed);
    let base = config.carleman_params(config.carleman.s_list[0], config.carleman.lambda_list[0])?;
    let reports = ratio_study(
        &problem,
        &base,
        &config.carleman.s_list,
        &config.carleman.lambda_list,
        config.carleman.sample_count,
        seed,
        &grid,
    )?;
    let dir = out_dir(config, override_dir);
    ensure_dir(&dir)?;
    write_ratio_csv(&dir.join("ratio_study.csv"), &reports)?;
    let summary = CarlemanSummary {
        sample_count: config.carleman.sample_count,
        seed,
        degenerate_samples: reports.iter().filter(|r| r.degenerate).count(),
        max_ratios: max_ratios(&reports)
            .into_iter()
            .map(|(s, lambda, max_ratio)| CellMax {
                s,
                lambda,
                max_ratio,
            })
            .collect(),
    };
    write_json(&dir.join("carleman_summary.json"), &summary)?;
    println!(
        "ratio study: {} samples, seed {}",
        summary.sample_count, seed
    );
    for cell in &summary.max_ratios {
        println!(
            "  s = {:>6} lambda = {:>4}  max ratio = {:.6e}",
            cell.s, cell.lambda, cell.max_ratio
        );
    }
    Ok(summary)
}

#[derive(Debug, Serialize)]
pub struct ObservabilitySummary {
    pub s: f64,
    pub lambda: f64,
    pub sample_count: usize,
    pub seed: u64,
    /// Empirical observability constant: the max quotient over the samples.
    pub max_quotient: f64,
    pub finite_samples: usize,
}

/// Observability quotient study; writes `observability.csv` and
/// `observability_summary.json`.
pub fn cmd_observability(
    config: &RunConfig,
    seed_override: Option<u64>,
    override_dir: Option<&Path>,
) -> Result<ObservabilitySummary, HarnessError> {
    let grid = config.build_grid()?;
    let problem = config.build_problem(&grid)?;
    let params = config.observability_params()?;
    let seed = seed_override
        .or(config.observability.seed)
        .unwrap_or(config.carleman.seed);
    let quotients = observability_study(
        &problem,
        &params,
        config.observability.sample_count,
        seed,
        &grid,
    )?;
    let dir = out_dir(config, override_dir);
    ensure_dir(&dir)?;
    write_observability_csv(&dir.join("observability.csv"), &quotients)?;
    let summary = ObservabilitySummary {
        s: params.s,
        lambda: params.lambda,
        sample_count: quotients.len(),
        seed,
        max_quotient: quotients.iter().cloned().fold(0.0, f64::max),
        finite_samples: quotients.iter().filter(|q| q.is_finite()).count(),
    };
    write_json(&dir.join("observability_summary.json"), &summary)?;
    println!(
        "observability: s = {:.6e}, lambda = {}, empirical C = {:.6e} over {} samples",
        summary.s, summary.lambda, summary.max_quotient, summary.sample_count
    );
    Ok(summary)
}

#[derive(Debug, Serialize)]
pub struct HumSummary {
    pub eps: f64,
    pub cost: f64,
    pub terminal_sq: f64,
    pub terminal_ratio: f64,
    pub cost_ratio: f64,
    pub j_eps: f64,
    pub cg_iterations: usize,
    pub cg_residual: f64,
    pub converged: bool,
}

/// One penalized-HUM solve (smallest configured ε unless overridden);
/// writes `control.csv`, `terminal_state.csv` and `hum_summary.json`.
pub fn cmd_hum(
    config: &RunConfig,
    eps_override: Option<f64>,
    override_dir: Option<&Path>,
) -> Result<HumSummary, HarnessError> {
    let grid = config.build_grid()?;
    let problem = config.build_problem(&grid)?;
    let eps = eps_override.unwrap_or_else(|| *config.hum.eps_list.last().unwrap());
    let result = hum_solve(&problem, eps, config.hum.tol, config.hum.max_iter, &grid)?;
    let dir = out_dir(config, override_dir);
    ensure_dir(&dir)?;
    write_field_csv(&dir.join("control.csv"), &result.f_eps, &grid)?;
    write_slice_csv(
        &dir.join("terminal_state.csv"),
        &result.u_eps.slice_at(grid.m()),
        &grid,
    )?;
    let u0_sq = l2_norm(&problem.u0, &grid).powi(2);
    let summary = HumSummary {
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
        j_eps: result.j_eps,
        cg_iterations: result.cg_iterations,
        cg_residual: result.cg_residual,
        converged: result.converged,
    };
    write_json(&dir.join("hum_summary.json"), &summary)?;
    println!(
        "hum eps = {:.1e}: cost = {:.6e}, ||u(T)||^2 = {:.6e}, cg {} iters (residual {:.2e}{})",
        eps,
        summary.cost,
        summary.terminal_sq,
        summary.cg_iterations,
        summary.cg_residual,
        if summary.converged {
            ""
        } else {
            ", NOT CONVERGED"
        }
    );
    Ok(summary)
}

#[derive(Debug, Serialize)]
pub struct SweepSummary {
    pub rows: Vec<crate::hum::SweepRow>,
    pub all_converged: bool,
}

/// Full ε-sweep; writes `sweep.csv` and `sweep_summary.json`.
pub fn cmd_sweep(
    config: &RunConfig,
    override_dir: Option<&Path>,
) -> Result<SweepSummary, HarnessError> {
    let grid = config.build_grid()?;
    let problem = config.build_problem(&grid)?;
    let report = eps_sweep(
        &problem,
        &config.hum.eps_list,
        config.hum.tol,
        config.hum.max_iter,
        &grid,
    )?;
    let dir = out_dir(config, override_dir);
    ensure_dir(&dir)?;
    write_sweep_csv(&dir.join("sweep.csv"), &report)?;
    let all_converged = report.rows.iter().all(|r| r.converged);
    let summary = SweepSummary {
        rows: report.rows.clone(),
        all_converged,
    };
    write_json(&dir.join("sweep_summary.json"), &summary)?;
    println!("eps sweep ({} rows)", report.rows.len());
    println!("  eps        cost_ratio   terminal_ratio  cg");
    for row in &report.rows {
        println!(
            "  {:<9.1e} {:<12.4e} {:<15.4e} {}{}",
            row.eps,
            row.cost_ratio,
            row.terminal_ratio,
            row.cg_iterations,
            if row.converged { "" } else { "  NOT CONVERGED" }
        );
    }
    Ok(summary)
}

#[derive(Debug, Serialize)]
pub struct IdentityRow {
    pub n: usize,
    pub m: usize,
    pub residual: f64,
    pub residual_s_zero: f64,
    pub plain_pde_residual: f64,
}

#[derive(Debug, Serialize)]
pub struct IdentitySummary {
    pub s: f64,
    pub lambda: f64,
    pub rows: Vec<IdentityRow>,
}

/// Transformed-equation identity check across the configured refinement
/// levels (solved with `c = 0` and `v_T = sin(πx)`, `h = 0`); writes
/// `identity.json`.
pub fn cmd_identity_check(
    config: &RunConfig,
    override_dir: Option<&Path>,
) -> Result<IdentitySummary, HarnessError> {
    let mut rows = Vec::new();
    for &[n, m] in &config.identity.levels {
        let grid = build_grid(n, m, config.grid.t_final).map_err(|e| ConfigError::Invalid {
            field: "identity.levels".into(),
            reason: e.to_string(),
        })?;
        let problem = ControlProblem::new(
            config.profile.clone(),
            Potential::Zero,
            config.omega_interval(),
            config.grid.t_final,
            SpaceSlice::zeros(&grid),
        );
        let params = config.carleman_params(config.identity.s, config.identity.lambda)?;
        let v_terminal = SpaceSlice::from_fn(&grid, |x| (std::f64::consts::PI * x).sin());
        let h = SpaceTimeField::zeros(&grid);
        let v = solve_adjoint(&problem, &v_terminal, &h, &grid)?;
        let residual = z_transform_identity(&v, &h, &params, &problem, &grid)?;
        let params_zero = params.with_s_lambda(0.0, params.lambda);
        let residual_s_zero = z_transform_identity(&v, &h, &params_zero, &problem, &grid)?;
        let plain = pde_residual(&v, &h, &problem, &grid)?;
        rows.push(IdentityRow {
            n,
            m,
            residual,
            residual_s_zero,
            plain_pde_residual: plain,
        });
    }
    let summary = IdentitySummary {
        s: config.identity.s,
        lambda: config.identity.lambda,
        rows,
    };
    let dir = out_dir(config, override_dir);
    ensure_dir(&dir)?;
    write_json(&dir.join("identity.json"), &summary)?;
    println!(
        "transformed-equation identity (s = {}, lambda = {})",
        summary.s, summary.lambda
    );
    println!("  n     m      residual      s=0 residual  plain residual");
    for row in &summary.rows {
        println!(
            "  {:<5} {:<6} {:<13.6e} {:<13.6e} {:<13.6e}",
            row.n, row.m, row.residual, row.residual_s_zero, row.plain_pde_residual
        );
    }
    Ok(summary)
}
