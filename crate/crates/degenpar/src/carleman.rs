//! The Carleman weight family, both sides of the weighted estimate for the
//! adjoint problem, the observability quotient and the transformed-equation
//! identity used to cross-check the solver against the weight calculus.
//!
//! The time weight `θ(t) = 1/[t(T−t)]⁴` is singular at `t = 0, T` and is
//! already of order `256/T⁸` at the midpoint, so for desk-scale horizons the
//! pointwise weight `e^{−2sσ}` underflows `f64` for any `s` of order one.
//! Every weighted quadrature here therefore accumulates in the log domain
//! (a streaming log-sum-exp); linear-domain values are recovered at the end
//! and flush to exactly zero below `e^{-700}`, while ratios of integrals are
//! formed from the log values and stay finite and meaningful.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::mesh::{Grid, Interval, SpaceSlice, SpaceTimeField};
use crate::sampling::{fourier_field, fourier_slice, sample_rng};
use crate::solver::{solve_adjoint, ControlProblem, SolverError};

#[derive(Debug, Error, PartialEq)]
pub enum CarlemanError {
    #[error("parameters need s >= 0, lambda > 0, delta > 0, x0 in (0,1), T > 0")]
    BadParams,
    #[error("grid horizon {grid_t} does not match parameter horizon {param_t}")]
    HorizonMismatch { grid_t: f64, param_t: f64 },
    #[error("terminal datum must be nonzero")]
    ZeroTerminalDatum,
    #[error(transparent)]
    Solver(#[from] SolverError),
}

/// Parameters of the weight family: Carleman parameter `s`, sharpness
/// `lambda`, horizon, centre `x₀` of the inner window `ω_δ = (x₀−δ, x₀+δ)`
/// and the precomputed `|η|_∞ = max(x₀², (1−x₀)²)/2`.
///
/// `s = 0` is admitted solely so the transformed-equation identity can be
/// checked in its weightless limit.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CarlemanParams {
    pub s: f64,
    pub lambda: f64,
    pub t_final: f64,
    pub x0: f64,
    pub delta: f64,
    pub eta_inf: f64,
}

impl CarlemanParams {
    pub fn new(
        s: f64,
        lambda: f64,
        t_final: f64,
        x0: f64,
        delta: f64,
    ) -> Result<Self, CarlemanError> {
        if !(s >= 0.0 && lambda > 0.0 && delta > 0.0 && t_final > 0.0 && x0 > 0.0 && x0 < 1.0) {
            return Err(CarlemanError::BadParams);
        }
        Ok(CarlemanParams {
            s,
            lambda,
            t_final,
            x0,
            delta,
            eta_inf: (x0 * x0).max((1.0 - x0) * (1.0 - x0)) / 2.0,
        })
    }

    /// Parameters centred at the midpoint of the profile's degeneracy
    /// interval, the canonical choice for a given problem.
    pub fn for_problem(
        problem: &ControlProblem,
        s: f64,
        lambda: f64,
        delta: f64,
    ) -> Result<Self, CarlemanError> {
        let x0 = match problem.profile.degeneracy() {
            Some((a, b)) => 0.5 * (a + b),
            None => 0.5,
        };
        CarlemanParams::new(s, lambda, problem.t_final, x0, delta)
    }

    pub fn with_s_lambda(&self, s: f64, lambda: f64) -> Self {
        CarlemanParams { s, lambda, ..*self }
    }

    /// `η(x) = −(x−x₀)²/2`.
    pub fn eta(&self, x: f64) -> f64 {
        -(x - self.x0) * (x - self.x0) / 2.0
    }

    /// `η'(x) = x₀ − x`.
    pub fn eta_prime(&self, x: f64) -> f64 {
        self.x0 - x
    }

    /// `log θ(t) = −4[ln t + ln(T−t)]`, valid on `0 < t < T`.
    pub fn log_theta(&self, t: f64) -> f64 {
        -4.0 * (t.ln() + (self.t_final - t).ln())
    }

    /// `θ'(t)/θ(t) = −4(T−2t)/[t(T−t)]`.
    pub fn theta_log_derivative(&self, t: f64) -> f64 {
        -4.0 * (self.t_final - 2.0 * t) / (t * (self.t_final - t))
    }

    /// The spatial factor `g(x) = e^{4λ|η|∞} − e^{λ(2|η|∞+η(x))}` with
    /// `σ = θ·g`; strictly positive because `2|η|∞ + η < 4|η|∞`.
    pub fn sigma_spatial(&self, x: f64) -> f64 {
        (4.0 * self.lambda * self.eta_inf).exp()
            - (self.lambda * (2.0 * self.eta_inf + self.eta(x))).exp()
    }
}

/// The `s` for which the observation weight `e^{−2sσ}ξ³` peaks at exactly 1
/// at the centre `(x₀, T/2)`. Weighted observability quotients computed at
/// this scale stay representable; the weight decays from 1 away from the
/// centre instead of underflowing everywhere.
pub fn normalized_s(lambda: f64, t_final: f64, x0: f64) -> f64 {
    let eta_inf = (x0 * x0).max((1.0 - x0) * (1.0 - x0)) / 2.0;
    let log_theta_min = -8.0 * (t_final / 2.0).ln();
    let log_xi_peak = log_theta_min + 2.0 * lambda * eta_inf;
    let sigma_peak =
        log_theta_min.exp() * ((4.0 * lambda * eta_inf).exp() - (2.0 * lambda * eta_inf).exp());
    (1.5 * log_xi_peak / sigma_peak).max(f64::MIN_POSITIVE)
}

/// Precomputed weight tables on the interior time levels `1..m-1` and the
/// interior space nodes. `θ` is singular at `t ∈ {0, T}`; the endpoint
/// levels carry no quadrature weight because `e^{−2sσ}` vanishes there
/// faster than any power of `ξ` grows.
pub struct WeightTables {
    n: usize,
    m: usize,
    params: CarlemanParams,
    /// `θ(t_k)`, `k = 1..m-1`.
    theta: Vec<f64>,
    /// `η(x_i)`, all nodes `i = 0..n+1`.
    eta: Vec<f64>,
    /// `η'(x_i)`, all nodes.
    eta_prime: Vec<f64>,
    /// `log ξ` on interior levels × interior nodes, row-major.
    log_xi: Vec<f64>,
    /// `σ = θ·(e^{4λ|η|∞} − e^{λ(2|η|∞+η)})`, same layout.
    sigma: Vec<f64>,
    /// `−2sσ`, the log-domain decay weight (`−∞` where `σ` overflows).
    log_decay: Vec<f64>,
}

/// Builds the weight tables for `params` on `grid`.
pub fn build_weights(params: &CarlemanParams, grid: &Grid) -> Result<WeightTables, CarlemanError> {
    if (grid.t_final() - params.t_final).abs() > 1e-12 * params.t_final.max(1.0) {
        return Err(CarlemanError::HorizonMismatch {
            grid_t: grid.t_final(),
            param_t: params.t_final,
        });
    }
    let (n, m) = (grid.n(), grid.m());
    let theta: Vec<f64> = (1..m).map(|k| params.log_theta(grid.t(k)).exp()).collect();
    let eta: Vec<f64> = (0..=n + 1).map(|i| params.eta(grid.x(i))).collect();
    let eta_prime: Vec<f64> = (0..=n + 1).map(|i| params.eta_prime(grid.x(i))).collect();

    let mut log_xi = Vec::with_capacity((m - 1) * n);
    let mut sigma = Vec::with_capacity((m - 1) * n);
    let mut log_decay = Vec::with_capacity((m - 1) * n);
    for k in 1..m {
        let log_theta = params.log_theta(grid.t(k));
        for j in 0..n {
            let x = grid.x_interior(j);
            let lx = log_theta + params.lambda * (2.0 * params.eta_inf + params.eta(x));
            // sigma through the log domain so an overflowing theta turns the
            // weight into an exact zero instead of a NaN
            let sg = (log_theta + params.sigma_spatial(x).ln()).exp();
            log_xi.push(lx);
            sigma.push(sg);
            log_decay.push(-2.0 * params.s * sg);
        }
    }
    Ok(WeightTables {
        n,
        m,
        params: *params,
        theta,
        eta,
        eta_prime,
        log_xi,
        sigma,
        log_decay,
    })
}

impl WeightTables {
    fn idx(&self, k: usize, j: usize) -> usize {
        debug_assert!((1..self.m).contains(&k) && j < self.n);
        (k - 1) * self.n + j
    }

    pub fn params(&self) -> &CarlemanParams {
        &self.params
    }

    /// `θ(t_k)` for an interior level `k = 1..m-1`.
    pub fn theta_at(&self, k: usize) -> f64 {
        self.theta[k - 1]
    }

    /// `η(x_i)` for any node `i = 0..n+1`.
    pub fn eta_at(&self, i: usize) -> f64 {
        self.eta[i]
    }

    pub fn eta_prime_at(&self, i: usize) -> f64 {
        self.eta_prime[i]
    }

    /// `ξ(x, t)` at interior level `k` and slice index `j`.
    pub fn xi_at(&self, k: usize, j: usize) -> f64 {
        self.log_xi[self.idx(k, j)].exp()
    }

    pub fn log_xi_at(&self, k: usize, j: usize) -> f64 {
        self.log_xi[self.idx(k, j)]
    }

    pub fn sigma_at(&self, k: usize, j: usize) -> f64 {
        self.sigma[self.idx(k, j)]
    }

    /// `−2sσ` at interior level `k` and slice index `j`.
    pub fn log_decay_at(&self, k: usize, j: usize) -> f64 {
        self.log_decay[self.idx(k, j)]
    }

    /// `log(e^{−2sσ}ξ³)`, the observation weight in the log domain.
    pub fn log_weight_xi3(&self, k: usize, j: usize) -> f64 {
        self.log_decay[self.idx(k, j)] + 3.0 * self.log_xi[self.idx(k, j)]
    }

    /// Minimum of `σ` over the table, the reference used to rescale the
    /// transformed variable.
    pub fn sigma_min(&self) -> f64 {
        self.sigma.iter().cloned().fold(f64::INFINITY, f64::min)
    }

    pub fn interior_levels(&self) -> std::ops::Range<usize> {
        1..self.m
    }
}

/// Streaming log-sum-exp accumulator: represents `Σ exp(l_i)` without ever
/// leaving the log domain, so sums whose every term underflows linearly stay
/// comparable.
#[derive(Debug, Clone, Copy)]
pub struct LogSum {
    max: f64,
    scaled: f64,
}

impl LogSum {
    pub fn new() -> Self {
        LogSum {
            max: f64::NEG_INFINITY,
            scaled: 0.0,
        }
    }

    pub fn add(&mut self, log_term: f64) {
        if log_term == f64::NEG_INFINITY || log_term.is_nan() {
            return;
        }
        if self.scaled == 0.0 {
            self.max = log_term;
            self.scaled = 1.0;
        } else if log_term <= self.max {
            self.scaled += (log_term - self.max).exp();
        } else {
            self.scaled = self.scaled * (self.max - log_term).exp() + 1.0;
            self.max = log_term;
        }
    }

    /// Adds another accumulated sum through its representative log value.
    pub fn merge(&mut self, other: &LogSum) {
        if other.scaled == 0.0 {
            return;
        }
        self.add(other.log());
    }

    /// `ln(Σ exp(l_i))`, `−∞` for the empty sum.
    pub fn log(&self) -> f64 {
        if self.scaled == 0.0 {
            f64::NEG_INFINITY
        } else {
            self.max + self.scaled.ln()
        }
    }

    /// Linear value with the contract's flush: exactly 0 below `e^{-700}`.
    pub fn linear(&self) -> f64 {
        log_to_linear(self.log())
    }
}

impl Default for LogSum {
    fn default() -> Self {
        LogSum::new()
    }
}

/// Linear-domain realisation of a log value: anything below −700 is exactly 0.
pub fn log_to_linear(log_value: f64) -> f64 {
    if log_value < -700.0 {
        0.0
    } else {
        log_value.exp()
    }
}

fn log_sq(value: f64) -> f64 {
    if value == 0.0 {
        f64::NEG_INFINITY
    } else {
        2.0 * value.abs().ln()
    }
}

/// Centered time derivative of a trajectory at interior level `k`; the
/// neighbouring levels always exist for `k = 1..m-1`.
fn time_derivative(v: &SpaceTimeField, grid: &Grid, k: usize, j: usize) -> f64 {
    (v.slice(k + 1)[j] - v.slice(k - 1)[j]) / (2.0 * grid.dt())
}

/// Centered space derivative with the zero Dirichlet boundary.
fn space_derivative(row: &[f64], grid: &Grid, j: usize) -> f64 {
    let n = row.len();
    let left = if j == 0 { 0.0 } else { row[j - 1] };
    let right = if j == n - 1 { 0.0 } else { row[j + 1] };
    (right - left) / (2.0 * grid.h())
}

/// Half-node-coefficient divergence `(a w_x)_x` at slice index `j`.
fn diffusion_term(row: &[f64], a_half: &[f64], grid: &Grid, j: usize) -> f64 {
    let n = row.len();
    let left = if j == 0 { 0.0 } else { row[j - 1] };
    let right = if j == n - 1 { 0.0 } else { row[j + 1] };
    (a_half[j + 1] * (right - row[j]) - a_half[j] * (row[j] - left)) / (grid.h() * grid.h())
}

/// Left side of the Carleman estimate, per-term breakdown.
///
/// Terms in order: `s⁻¹λ⁻¹ξ⁻¹|v_t|²`, `s⁻¹λ⁻¹ξ⁻¹|(a v_x)_x|²`,
/// `s³λ⁴ξ³|v|²`, `sλ²ξ a|v_x|²`, all under `e^{−2sσ}` over `Q`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CarlemanLhs {
    pub terms: [f64; 4],
    pub terms_log: [f64; 4],
    pub total: f64,
    pub log_total: f64,
}

/// Weighted quadrature of the four left-side integrands on the interior
/// levels, each product formed as `exp(log_decay + p·log ξ + log coef +
/// log term²)`.
pub fn carleman_lhs(
    v: &SpaceTimeField,
    problem: &ControlProblem,
    params: &CarlemanParams,
    grid: &Grid,
) -> Result<CarlemanLhs, CarlemanError> {
    let weights = build_weights(params, grid)?;
    Ok(carleman_lhs_with(v, problem, &weights, grid))
}

/// [`carleman_lhs`] against prebuilt tables; studies reuse one table per
/// `(s, λ)` across their samples.
pub fn carleman_lhs_with(
    v: &SpaceTimeField,
    problem: &ControlProblem,
    weights: &WeightTables,
    grid: &Grid,
) -> CarlemanLhs {
    let params = weights.params();
    let a_half = grid.half_node_coefficients(&problem.profile);
    let a_node: Vec<f64> = (0..grid.n())
        .map(|j| problem.profile.value(grid.x_interior(j)))
        .collect();
    let log_cell = (grid.h() * grid.dt()).ln();
    let inv_coef = -(params.s.ln() + params.lambda.ln());
    let cube_coef = 3.0 * params.s.ln() + 4.0 * params.lambda.ln();
    let grad_coef_base = params.s.ln() + 2.0 * params.lambda.ln();

    let mut sums = [LogSum::new(), LogSum::new(), LogSum::new(), LogSum::new()];
    for k in weights.interior_levels() {
        let row = v.slice(k);
        for j in 0..grid.n() {
            let decay = weights.log_decay_at(k, j);
            if decay == f64::NEG_INFINITY {
                continue;
            }
            let log_xi = weights.log_xi_at(k, j);
            let vt = time_derivative(v, grid, k, j);
            let div = diffusion_term(row, &a_half, grid, j);
            let vx = space_derivative(row, grid, j);
            sums[0].add(decay - log_xi + inv_coef + log_sq(vt) + log_cell);
            sums[1].add(decay - log_xi + inv_coef + log_sq(div) + log_cell);
            sums[2].add(decay + 3.0 * log_xi + cube_coef + log_sq(row[j]) + log_cell);
            if a_node[j] > 0.0 {
                sums[3]
                    .add(decay + log_xi + grad_coef_base + a_node[j].ln() + log_sq(vx) + log_cell);
            }
        }
    }
    let terms_log = [sums[0].log(), sums[1].log(), sums[2].log(), sums[3].log()];
    let mut total = LogSum::new();
    for s in &sums {
        total.merge(s);
    }
    CarlemanLhs {
        terms: [
            sums[0].linear(),
            sums[1].linear(),
            sums[2].linear(),
            sums[3].linear(),
        ],
        terms_log,
        total: total.linear(),
        log_total: total.log(),
    }
}

/// Right side of the Carleman estimate: the weighted source norm
/// `‖e^{−sσ}h‖²` and the localized term `s³λ⁴∬_{ω_δ} e^{−2sσ}ξ³|v|²`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CarlemanRhs {
    pub source: f64,
    pub source_log: f64,
    pub local: f64,
    pub local_log: f64,
    pub total: f64,
    pub log_total: f64,
}

pub fn carleman_rhs(
    v: &SpaceTimeField,
    h: &SpaceTimeField,
    params: &CarlemanParams,
    grid: &Grid,
) -> Result<CarlemanRhs, CarlemanError> {
    let weights = build_weights(params, grid)?;
    Ok(carleman_rhs_with(v, h, &weights, grid))
}

/// [`carleman_rhs`] against prebuilt tables.
pub fn carleman_rhs_with(
    v: &SpaceTimeField,
    h: &SpaceTimeField,
    weights: &WeightTables,
    grid: &Grid,
) -> CarlemanRhs {
    let params = weights.params();
    let window = Interval::new(params.x0 - params.delta, params.x0 + params.delta);
    let mask = grid.window_mask(window);
    let log_cell = (grid.h() * grid.dt()).ln();
    let cube_coef = 3.0 * params.s.ln() + 4.0 * params.lambda.ln();

    let mut source = LogSum::new();
    let mut local = LogSum::new();
    for k in weights.interior_levels() {
        let vrow = v.slice(k);
        let hrow = h.slice(k);
        for j in 0..grid.n() {
            let decay = weights.log_decay_at(k, j);
            if decay == f64::NEG_INFINITY {
                continue;
            }
            source.add(decay + log_sq(hrow[j]) + log_cell);
            if mask[j] {
                let log_xi = weights.log_xi_at(k, j);
                local.add(decay + 3.0 * log_xi + cube_coef + log_sq(vrow[j]) + log_cell);
            }
        }
    }
    let mut total = LogSum::new();
    total.merge(&source);
    total.merge(&local);
    CarlemanRhs {
        source: source.linear(),
        source_log: source.log(),
        local: local.linear(),
        local_log: local.log(),
        total: total.linear(),
        log_total: total.log(),
    }
}

/// One sample's evaluation of the estimate. The `ratio` is formed from the
/// log-domain integrals, so it stays finite even when every linear field
/// underflows; a sample with identically zero right side is degenerate and
/// carries `ratio = 0`.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct CarlemanReport {
    pub s: f64,
    pub lambda: f64,
    pub sample_id: usize,
    pub lhs_terms: [f64; 4],
    pub lhs: f64,
    pub log_lhs: f64,
    pub rhs_source: f64,
    pub rhs_local: f64,
    pub log_rhs: f64,
    pub ratio: f64,
    pub degenerate: bool,
}

/// Evaluates both sides for one adjoint trajectory / source pair.
pub fn carleman_report(
    v: &SpaceTimeField,
    h: &SpaceTimeField,
    problem: &ControlProblem,
    weights: &WeightTables,
    grid: &Grid,
    sample_id: usize,
) -> CarlemanReport {
    let lhs = carleman_lhs_with(v, problem, weights, grid);
    let rhs = carleman_rhs_with(v, h, weights, grid);
    let degenerate = rhs.log_total == f64::NEG_INFINITY;
    let ratio = if degenerate {
        0.0
    } else {
        log_to_linear(lhs.log_total - rhs.log_total)
    };
    CarlemanReport {
        s: weights.params().s,
        lambda: weights.params().lambda,
        sample_id,
        lhs_terms: lhs.terms,
        lhs: lhs.total,
        log_lhs: lhs.log_total,
        rhs_source: rhs.source,
        rhs_local: rhs.local,
        log_rhs: rhs.log_total,
        ratio,
        degenerate,
    }
}

/// Sweeps the `(s, λ)` grid over seeded random samples `(v_T, h)`, solving
/// the adjoint problem once per sample and evaluating the estimate for every
/// parameter pair. Samples use independent generator streams (`seed + index`)
/// and identical samples are reused across the `(s, λ)` grid so the ratios
/// are comparable.
pub fn ratio_study(
    problem: &ControlProblem,
    params_base: &CarlemanParams,
    s_list: &[f64],
    lambda_list: &[f64],
    sample_count: usize,
    seed: u64,
    grid: &Grid,
) -> Result<Vec<CarlemanReport>, CarlemanError> {
    let samples: Vec<(SpaceTimeField, SpaceTimeField)> = (0..sample_count)
        .into_par_iter()
        .map(|j| {
            let mut rng = sample_rng(seed, j as u64);
            let v_terminal = fourier_slice(grid, &mut rng);
            let h = fourier_field(grid, &problem.profile, &mut rng);
            let v = solve_adjoint(problem, &v_terminal, &h, grid)?;
            Ok((v, h))
        })
        .collect::<Result<_, SolverError>>()?;

    let mut reports = Vec::with_capacity(s_list.len() * lambda_list.len() * sample_count);
    for &s in s_list {
        for &lambda in lambda_list {
            let params = params_base.with_s_lambda(s, lambda);
            let weights = build_weights(&params, grid)?;
            let mut cell: Vec<CarlemanReport> = samples
                .par_iter()
                .enumerate()
                .map(|(j, (v, h))| carleman_report(v, h, problem, &weights, grid, j))
                .collect();
            reports.append(&mut cell);
        }
    }
    Ok(reports)
}

/// Maximum finite ratio per `(s, λ)` cell, degenerate samples skipped.
pub fn max_ratios(reports: &[CarlemanReport]) -> Vec<(f64, f64, f64)> {
    let mut table: Vec<(f64, f64, f64)> = Vec::new();
    for r in reports {
        if r.degenerate {
            continue;
        }
        match table
            .iter_mut()
            .find(|(s, l, _)| *s == r.s && *l == r.lambda)
        {
            Some(entry) => entry.2 = entry.2.max(r.ratio),
            None => table.push((r.s, r.lambda, r.ratio)),
        }
    }
    table
}

/// Observability quotient `‖v(·,0)‖² / ∬_{ω×(0,T)} e^{−2sσ}ξ³|v|²` for the
/// adjoint solution from `v_T` with `h = 0`. Returns `+∞` when the weighted
/// observation vanishes (possible only if `v ≡ 0` on the window).
pub fn observability_quotient(
    problem: &ControlProblem,
    v_terminal: &SpaceSlice,
    params: &CarlemanParams,
    grid: &Grid,
) -> Result<f64, CarlemanError> {
    let norm0 = crate::mesh::l2_norm(v_terminal, grid);
    if norm0 == 0.0 {
        return Err(CarlemanError::ZeroTerminalDatum);
    }
    let weights = build_weights(params, grid)?;
    let v = solve_adjoint(problem, v_terminal, &SpaceTimeField::zeros(grid), grid)?;

    let mask = grid.window_mask(problem.omega);
    let log_cell = (grid.h() * grid.dt()).ln();
    let mut denom = LogSum::new();
    for k in weights.interior_levels() {
        let row = v.slice(k);
        for j in 0..grid.n() {
            if mask[j] {
                let decay = weights.log_decay_at(k, j);
                if decay == f64::NEG_INFINITY {
                    continue;
                }
                denom.add(decay + 3.0 * weights.log_xi_at(k, j) + log_sq(row[j]) + log_cell);
            }
        }
    }
    let numer = crate::mesh::l2_norm(&v.slice_at(0), grid).powi(2);
    let log_denom = denom.log();
    if log_denom == f64::NEG_INFINITY {
        return Ok(f64::INFINITY);
    }
    let log_q = numer.ln() - log_denom;
    Ok(if log_q > 709.0 {
        f64::INFINITY
    } else {
        log_to_linear(log_q)
    })
}

/// Seeded study of the observability quotient: returns the per-sample
/// quotients in sample order; the maximum is the empirical constant.
pub fn observability_study(
    problem: &ControlProblem,
    params: &CarlemanParams,
    sample_count: usize,
    seed: u64,
    grid: &Grid,
) -> Result<Vec<f64>, CarlemanError> {
    (0..sample_count)
        .into_par_iter()
        .map(|j| {
            let mut rng = sample_rng(seed, j as u64);
            let v_terminal = fourier_slice(grid, &mut rng);
            observability_quotient(problem, &v_terminal, params, grid)
        })
        .collect()
}

/// Relative residual of the transformed-equation identity `P⁺z + P⁻z = G`
/// for `z = e^{−sσ}v`, with
///
/// ```text
/// P⁻z = 2s(σ_x a)_x z + 2s σ_x a z_x + z_t
/// P⁺z = s²|σ_x|² a z + (a z_x)_x + s σ_t z
/// G   = e^{−sσ} h + s(σ_x a)_x z
/// ```
///
/// `σ_x = −λη'ξ` and `σ_t = (θ'/θ)σ` are evaluated analytically. The
/// computation rescales every weight by `e^{+s·min σ}`; both sides of the
/// identity scale identically, so the relative residual is unchanged while
/// the transformed variable stays representable. At `s = 0` the identity
/// collapses to the plain equation residual `v_t + (a v_x)_x − h`.
///
/// The trajectory must solve the discrete adjoint problem with `c = 0` for
/// the residual to measure only discretization error.
pub fn z_transform_identity(
    v: &SpaceTimeField,
    h: &SpaceTimeField,
    params: &CarlemanParams,
    problem: &ControlProblem,
    grid: &Grid,
) -> Result<f64, CarlemanError> {
    if params.s == 0.0 {
        return pde_residual(v, h, problem, grid);
    }
    let weights = build_weights(params, grid)?;
    let sigma_ref = weights.sigma_min();
    let (n, m) = (grid.n(), grid.m());
    let a_half = grid.half_node_coefficients(&problem.profile);
    let a_node: Vec<f64> = (0..n)
        .map(|j| problem.profile.value(grid.x_interior(j)))
        .collect();
    let a_prime: Vec<f64> = (0..n)
        .map(|j| problem.profile.eval(grid.x_interior(j), 1).unwrap_or(0.0))
        .collect();

    // z on all levels: zero at t = 0, T (the weight's exact limit), shifted
    // interior weights elsewhere
    let mut z = SpaceTimeField::zeros(grid);
    for k in 1..m {
        let vrow = v.slice(k);
        let zrow = z.slice_mut(k);
        for j in 0..n {
            let log_w = -params.s * (weights.sigma_at(k, j) - sigma_ref);
            zrow[j] = if log_w < -700.0 {
                0.0
            } else {
                log_w.exp() * vrow[j]
            };
        }
    }

    let s = params.s;
    let lambda = params.lambda;
    let mut num = 0.0;
    let mut norm_minus = 0.0;
    let mut norm_plus = 0.0;
    let mut norm_g = 0.0;
    for k in 1..m {
        let t = grid.t(k);
        let zrow = z.slice(k);
        let hrow = h.slice(k);
        let theta_ratio = params.theta_log_derivative(t);
        for j in 0..n {
            let xi = weights.xi_at(k, j);
            let sigma = weights.sigma_at(k, j);
            let etap = weights.eta_prime_at(j + 1);
            let sigma_x = -lambda * etap * xi;
            // (σ_x a)_x = −λξ[η″a + η'a' + λ(η')²a] with η″ = −1
            let sigma_x_a_div =
                -lambda * xi * (-a_node[j] + etap * a_prime[j] + lambda * etap * etap * a_node[j]);
            let sigma_t = theta_ratio * sigma;

            let zt = time_derivative(&z, grid, k, j);
            let zx = space_derivative(zrow, grid, j);
            let div = diffusion_term(zrow, &a_half, grid, j);
            let zval = zrow[j];

            let p_minus = 2.0 * s * guarded_mul(sigma_x_a_div, zval)
                + 2.0 * s * guarded_mul(sigma_x * a_node[j], zx)
                + zt;
            let p_plus = s * s * guarded_mul(sigma_x * sigma_x * a_node[j], zval)
                + div
                + s * guarded_mul(sigma_t, zval);
            let log_w = -s * (sigma - sigma_ref);
            let weighted_h = if log_w < -700.0 {
                0.0
            } else {
                log_w.exp() * hrow[j]
            };
            let g = weighted_h + s * guarded_mul(sigma_x_a_div, zval);

            let residual = p_plus + p_minus - g;
            num += residual * residual;
            norm_minus += p_minus * p_minus;
            norm_plus += p_plus * p_plus;
            norm_g += g * g;
        }
    }
    let cell = grid.h() * grid.dt();
    let denom = (cell * norm_g).sqrt() + (cell * norm_plus).sqrt() + (cell * norm_minus).sqrt();
    if denom == 0.0 {
        return Ok(0.0);
    }
    Ok((cell * num).sqrt() / denom)
}

/// Huge coefficient times an exactly-zero transformed value is an exact
/// zero: the weight decays faster than any power of the singular factors.
fn guarded_mul(coefficient: f64, z_value: f64) -> f64 {
    if z_value == 0.0 {
        0.0
    } else {
        coefficient * z_value
    }
}

/// Plain centered-difference residual of the adjoint equation with `c = 0`:
/// `‖v_t + (a v_x)_x − h‖ / (‖h‖ + ‖v_t‖ + ‖(a v_x)_x‖)` over the interior
/// levels. This is what the transformed identity degenerates to at `s = 0`.
pub fn pde_residual(
    v: &SpaceTimeField,
    h: &SpaceTimeField,
    problem: &ControlProblem,
    grid: &Grid,
) -> Result<f64, CarlemanError> {
    let m = grid.m();
    let a_half = grid.half_node_coefficients(&problem.profile);
    let mut num = 0.0;
    let mut norm_t = 0.0;
    let mut norm_div = 0.0;
    let mut norm_h = 0.0;
    for k in 1..m {
        let row = v.slice(k);
        let hrow = h.slice(k);
        for (j, &hval) in hrow.iter().enumerate() {
            let vt = time_derivative(v, grid, k, j);
            let div = diffusion_term(row, &a_half, grid, j);
            let r = vt + div - hval;
            num += r * r;
            norm_t += vt * vt;
            norm_div += div * div;
            norm_h += hval * hval;
        }
    }
    let cell = grid.h() * grid.dt();
    let denom = (cell * norm_h).sqrt() + (cell * norm_t).sqrt() + (cell * norm_div).sqrt();
    if denom == 0.0 {
        return Ok(0.0);
    }
    Ok((cell * num).sqrt() / denom)
}

/// Minimum of `|η'(x)|·a(x)` over interior grid nodes outside `ω_δ`; the
/// structural condition requires this to be strictly positive.
pub fn hip3_min(problem: &ControlProblem, params: &CarlemanParams, grid: &Grid) -> f64 {
    let window = Interval::new(params.x0 - params.delta, params.x0 + params.delta);
    (0..grid.n())
        .filter(|&j| !window.contains(grid.x_interior(j)))
        .map(|j| {
            let x = grid.x_interior(j);
            params.eta_prime(x).abs() * problem.profile.value(x)
        })
        .fold(f64::INFINITY, f64::min)
}
