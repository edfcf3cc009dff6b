//! Diffusion coefficients that vanish on an interval `[A, B] ⊂ (0, 1)`,
//! together with the structural checks the rest of the toolkit relies on:
//! non-integrability of `1/a` near the degeneracy, `W^{2,∞}` regularity of
//! the coefficient, and the geometric condition `[A, B] ⊂ ω`.

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::mesh::Interval;

/// Number of uniform sample points used for grid minimisation and the
/// heuristic checks on tabulated profiles.
const SAMPLE_POINTS: usize = 2001;

#[derive(Debug, Error, PartialEq)]
pub enum ProfileError {
    #[error("degeneracy interval must satisfy 0 < A <= B < 1, got A={a}, B={b}")]
    InvalidInterval { a: f64, b: f64 },
    #[error("exponents must be nonnegative, got alpha={alpha}, beta={beta}")]
    NegativeExponent { alpha: f64, beta: f64 },
    #[error("position {x} outside [0, 1]")]
    OutOfDomain { x: f64 },
    #[error("derivative order {order} not in {{0, 1, 2}}")]
    BadOrder { order: u32 },
    #[error("tabulated profile needs at least two strictly increasing nodes spanning [0, 1]")]
    BadTable,
}

/// A diffusion coefficient `a(x)` on `[0, 1]`.
///
/// The power-law variant is the reference family: `a = (A−x)^α` left of the
/// degeneracy interval, `0` on `[A, B]` and `(x−B)^β` to the right. `A = B`
/// (point degeneracy) is allowed. The constant variant serves as the
/// non-degenerate baseline and the tabulated variant interpolates measured
/// coefficients piecewise linearly.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum DiffusionProfile {
    PowerLaw {
        #[serde(rename = "A")]
        a: f64,
        #[serde(rename = "B")]
        b: f64,
        alpha: f64,
        beta: f64,
    },
    Constant {
        value: f64,
    },
    Tabulated {
        #[serde(rename = "A")]
        a: f64,
        #[serde(rename = "B")]
        b: f64,
        x: Vec<f64>,
        values: Vec<f64>,
    },
}

/// Power-law profile with `a(x) = (A−x)^alpha` on `[0, A)`, `0` on `[A, B]`
/// and `(x−B)^beta` on `(B, 1]`.
pub fn make_power_profile(
    a: f64,
    b: f64,
    alpha: f64,
    beta: f64,
) -> Result<DiffusionProfile, ProfileError> {
    if !(a > 0.0 && b < 1.0 && a <= b) || !a.is_finite() || !b.is_finite() {
        return Err(ProfileError::InvalidInterval { a, b });
    }
    if !(alpha >= 0.0 && beta >= 0.0) {
        return Err(ProfileError::NegativeExponent { alpha, beta });
    }
    Ok(DiffusionProfile::PowerLaw { a, b, alpha, beta })
}

/// Constant coefficient, the non-degenerate baseline (`a ≡ value`).
pub fn make_constant_profile(value: f64) -> Result<DiffusionProfile, ProfileError> {
    if !(value > 0.0) || !value.is_finite() {
        return Err(ProfileError::InvalidInterval { a: value, b: value });
    }
    Ok(DiffusionProfile::Constant { value })
}

impl DiffusionProfile {
    /// Degeneracy interval `[A, B]`, if the profile has one.
    pub fn degeneracy(&self) -> Option<(f64, f64)> {
        match self {
            DiffusionProfile::PowerLaw { a, b, .. } => Some((*a, *b)),
            DiffusionProfile::Constant { .. } => None,
            DiffusionProfile::Tabulated { a, b, .. } => Some((*a, *b)),
        }
    }

    /// `a(x)`, `a'(x)` or `a''(x)` with one-sided derivatives taken from the
    /// flat branch at `A` and `B`.
    pub fn eval(&self, x: f64, order: u32) -> Result<f64, ProfileError> {
        if !(0.0..=1.0).contains(&x) {
            return Err(ProfileError::OutOfDomain { x });
        }
        if order > 2 {
            return Err(ProfileError::BadOrder { order });
        }
        Ok(self.eval_raw(x, order))
    }

    /// `a(x)` without domain checking; callers pass grid-generated positions.
    pub fn value(&self, x: f64) -> f64 {
        self.eval_raw(x, 0)
    }

    fn eval_raw(&self, x: f64, order: u32) -> f64 {
        match self {
            DiffusionProfile::Constant { value } => {
                if order == 0 {
                    *value
                } else {
                    0.0
                }
            }
            DiffusionProfile::PowerLaw { a, b, alpha, beta } => {
                if x < *a {
                    power_branch(*a - x, *alpha, order, -1.0)
                } else if x > *b {
                    power_branch(x - *b, *beta, order, 1.0)
                } else {
                    0.0
                }
            }
            DiffusionProfile::Tabulated { x: xs, values, .. } => {
                tabulated_eval(xs, values, x, order)
            }
        }
    }
}

/// Derivatives of `d^order/dx^order (dist)^p` where `dist` grows in the
/// direction `sign` (so each derivative picks up a factor `sign`).
fn power_branch(dist: f64, p: f64, order: u32, sign: f64) -> f64 {
    match order {
        0 => dist.powf(p),
        1 => sign * p * dist.powf(p - 1.0),
        _ => p * (p - 1.0) * dist.powf(p - 2.0),
    }
}

fn tabulated_eval(xs: &[f64], values: &[f64], x: f64, order: u32) -> f64 {
    let seg = match xs.binary_search_by(|v| v.partial_cmp(&x).unwrap()) {
        Ok(i) => i.min(xs.len() - 2),
        Err(i) => i.saturating_sub(1).min(xs.len() - 2),
    };
    let (x0, x1) = (xs[seg], xs[seg + 1]);
    let (v0, v1) = (values[seg], values[seg + 1]);
    let slope = (v1 - v0) / (x1 - x0);
    match order {
        0 => v0 + slope * (x - x0),
        1 => slope,
        // piecewise linear: second derivative vanishes inside segments
        _ => 0.0,
    }
}

/// Builds a tabulated profile after checking the node list is a strictly
/// increasing cover of `[0, 1]` and that the values vanish exactly on the
/// declared degeneracy interval.
pub fn make_tabulated_profile(
    a: f64,
    b: f64,
    x: Vec<f64>,
    values: Vec<f64>,
) -> Result<DiffusionProfile, ProfileError> {
    if !(a > 0.0 && b < 1.0 && a <= b) {
        return Err(ProfileError::InvalidInterval { a, b });
    }
    if x.len() < 2 || x.len() != values.len() {
        return Err(ProfileError::BadTable);
    }
    if x[0] != 0.0 || *x.last().unwrap() != 1.0 {
        return Err(ProfileError::BadTable);
    }
    if x.windows(2).any(|w| w[1] <= w[0]) {
        return Err(ProfileError::BadTable);
    }
    Ok(DiffusionProfile::Tabulated { a, b, x, values })
}

/// Outcome of checking a profile/control-window pair against the structural
/// hypotheses. Failures are carried as flags, never as errors.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct HypothesisReport {
    /// `a = 0` exactly on `[A, B]` and `a > 0` outside.
    pub degeneracy_ok: bool,
    /// `1/a` fails to be integrable near `A` and `B`.
    pub non_integrable_inverse_ok: bool,
    /// `a ∈ W^{2,∞}` with `a·a_xx ∈ W^{1,∞}` (exact for power laws,
    /// heuristic for tables).
    pub regularity_ok: bool,
    /// `[A, B] ⊂ ω`.
    pub geometry_ok: bool,
    /// Sampled minimum of `a` over `[0,1] \ ω_δ`.
    pub m_delta: f64,
    pub messages: Vec<String>,
}

impl HypothesisReport {
    pub fn all_ok(&self) -> bool {
        self.degeneracy_ok
            && self.non_integrable_inverse_ok
            && self.regularity_ok
            && self.geometry_ok
    }
}

/// Checks the structural hypotheses for `profile` against the control window
/// `omega` and the inner window `ω_δ = (x₀−δ, x₀+δ)` centred at the midpoint
/// of the degeneracy interval.
pub fn validate_hypotheses(
    profile: &DiffusionProfile,
    omega: Interval,
    delta: f64,
) -> HypothesisReport {
    let mut messages = Vec::new();

    let (deg_lo, deg_hi, degeneracy_ok) = match profile.degeneracy() {
        Some((a, b)) => {
            let positive_outside = sampled_positive_outside(profile, a, b);
            if !positive_outside {
                messages.push("coefficient is not strictly positive off [A, B]".into());
            }
            (a, b, positive_outside)
        }
        None => {
            messages.push("profile has no degeneracy interval".into());
            (f64::NAN, f64::NAN, false)
        }
    };

    let non_integrable_inverse_ok = match profile {
        DiffusionProfile::PowerLaw { alpha, beta, .. } => {
            // exact criterion for power branches: the inverse integral
            // diverges near A, B iff both exponents are >= 1
            let ok = *alpha >= 1.0 && *beta >= 1.0;
            if !ok {
                messages.push(format!(
                    "1/a is integrable near the degeneracy (alpha={alpha}, beta={beta})"
                ));
            }
            ok
        }
        DiffusionProfile::Constant { .. } => {
            messages.push("constant coefficient has integrable inverse".into());
            false
        }
        DiffusionProfile::Tabulated { .. } => {
            let ok = inverse_integral_diverges(profile, deg_lo, deg_hi);
            if !ok {
                messages.push("refining quadrature of 1/a stayed bounded (heuristic check)".into());
            }
            ok
        }
    };

    let regularity_ok = match profile {
        DiffusionProfile::PowerLaw { alpha, beta, .. } => {
            let ok = *alpha >= 2.0 && *beta >= 2.0;
            if !ok {
                messages.push(format!(
                    "power branches need alpha, beta >= 2 for W^{{2,inf}} (got {alpha}, {beta})"
                ));
            }
            ok
        }
        DiffusionProfile::Constant { .. } => true,
        DiffusionProfile::Tabulated { x, values, .. } => {
            let ok = tabulated_regularity_bounded(x, values);
            if !ok {
                messages.push("finite-difference bound on a*a_xx exceeded (heuristic)".into());
            }
            ok
        }
    };

    let geometry_ok = if degeneracy_ok || profile.degeneracy().is_some() {
        let ok = omega.lo() < deg_lo && deg_hi < omega.hi();
        if !ok {
            messages.push(format!(
                "[{deg_lo}, {deg_hi}] not contained in omega = ({}, {})",
                omega.lo(),
                omega.hi()
            ));
        }
        ok
    } else {
        true
    };

    let x0 = if deg_lo.is_nan() {
        0.5
    } else {
        0.5 * (deg_lo + deg_hi)
    };
    let omega_delta = Interval::new(x0 - delta, x0 + delta);
    if delta <= 0.0 {
        messages.push("delta must be positive".into());
    }
    if omega_delta.lo() < omega.lo() || omega_delta.hi() > omega.hi() {
        messages.push("omega_delta is not contained in omega".into());
    }
    if !deg_lo.is_nan() && (omega_delta.lo() >= deg_lo || omega_delta.hi() <= deg_hi) {
        messages.push("omega_delta does not strictly cover [A, B]".into());
    }

    let m_delta = sampled_min_outside(profile, omega_delta);

    HypothesisReport {
        degeneracy_ok,
        non_integrable_inverse_ok,
        regularity_ok,
        geometry_ok,
        m_delta,
        messages,
    }
}

fn sample_positions() -> impl Iterator<Item = f64> {
    (0..SAMPLE_POINTS).map(|k| k as f64 / (SAMPLE_POINTS - 1) as f64)
}

fn sampled_positive_outside(profile: &DiffusionProfile, a: f64, b: f64) -> bool {
    sample_positions().all(|x| {
        let v = profile.value(x);
        if (a..=b).contains(&x) {
            v == 0.0
        } else {
            v > 0.0
        }
    })
}

/// Grid minimum of `a` over sample points outside the open window.
fn sampled_min_outside(profile: &DiffusionProfile, window: Interval) -> f64 {
    sample_positions()
        .filter(|&x| !window.contains(x))
        .map(|x| profile.value(x))
        .fold(f64::INFINITY, f64::min)
}

/// Divergence test for `∫ 1/a` near the degeneracy by refining midpoint
/// quadrature: flagged divergent when two successive refinements both exceed
/// the threshold. Heuristic for tabulated data.
fn inverse_integral_diverges(profile: &DiffusionProfile, a: f64, b: f64) -> bool {
    const THRESHOLD: f64 = 1e6;
    let estimate = |cells: usize| -> f64 {
        let mut total = 0.0;
        if a > 0.0 {
            let h = a / cells as f64;
            for i in 0..cells {
                let x = (i as f64 + 0.5) * h;
                let v = profile.value(x);
                total += if v > 0.0 { h / v } else { f64::INFINITY };
            }
        }
        if b < 1.0 {
            let h = (1.0 - b) / cells as f64;
            for i in 0..cells {
                let x = b + (i as f64 + 0.5) * h;
                let v = profile.value(x);
                total += if v > 0.0 { h / v } else { f64::INFINITY };
            }
        }
        total
    };
    let coarse = estimate(1 << 13);
    let fine = estimate(1 << 14);
    coarse > THRESHOLD && fine > THRESHOLD
}

/// Finite-difference boundedness of `(a·a_xx)'` at the sampling resolution.
fn tabulated_regularity_bounded(xs: &[f64], values: &[f64]) -> bool {
    const BOUND: f64 = 1e6;
    let n = xs.len();
    if n < 4 {
        return true;
    }
    let mut prod = Vec::with_capacity(n - 2);
    for i in 1..n - 1 {
        let hl = xs[i] - xs[i - 1];
        let hr = xs[i + 1] - xs[i];
        let second = 2.0 * (hl * values[i + 1] - (hl + hr) * values[i] + hr * values[i - 1])
            / (hl * hr * (hl + hr));
        prod.push(values[i] * second);
    }
    prod.windows(2)
        .zip(xs[1..].windows(2))
        .all(|(p, x)| ((p[1] - p[0]) / (x[1] - x[0])).abs() <= BOUND)
}
