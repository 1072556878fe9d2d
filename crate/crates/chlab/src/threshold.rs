//! Closed-form boundedness constants for the invasion system.
//!
//! Global boundedness of classical (and, for degenerate diffusion, weak)
//! solutions is guaranteed once the diffusion exponent clears
//!
//! ```text
//!   m_crit = 2N / (N + gamma_*),
//!   gamma_* = (mu_* + 1)(N + mu_* - 1) / N,
//!   mu_*    = A / (A - mu)_+,
//!   A       = sup_{s >= 1} lambda0^(1/(s+1)) * (chi + xi * sup w0),
//! ```
//!
//! where `lambda0` is the (non-computable) maximal-regularity constant,
//! taken here as a configuration input with default 1. The supremum over `s`
//! is resolved analytically: `s -> lambda0^(1/(s+1))` is monotone, so it is
//! `sqrt(lambda0)` for `lambda0 >= 1` (attained at `s = 1`) and `1`
//! otherwise (the `s -> inf` limit). When `mu >= A` the positive part in
//! `mu_*` vanishes, `mu_* = +inf`, and `m_crit = 0`: every `m > 0` works.
//!
//! `m_bar` is the diffusion threshold from the earlier comparison result
//! that this condition strictly improves on; `kappa` is the constant in the
//! one-sided tissue estimate `-lap w <= (sup w0) v + kappa` monitored by the
//! diagnostics module.

use crate::grid::{face_gradient, laplacian, CellField, Grid};
use std::fmt;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ThresholdInputs {
    /// Space dimension (independent of the simulation grid; the report can
    /// be evaluated for any N >= 1).
    pub n: u32,
    pub chi: f64,
    pub xi: f64,
    pub mu: f64,
    /// sup of the initial tissue density.
    pub w0_sup: f64,
    /// Maximal-regularity constant; user-supplied, default 1.
    pub lambda0: f64,
}

/// Every derived constant, plus the admissibility verdict for a candidate
/// exponent when one was supplied. Infinite values serialize as `"inf"`.
#[derive(Debug, Clone, PartialEq)]
pub struct ThresholdReport {
    /// The lambda0 supremum factor (called M in the report output).
    pub sup_lambda: f64,
    /// A = sup_lambda * (chi + xi * w0_sup).
    pub coeff: f64,
    pub mu_star: f64,
    pub gamma_star: f64,
    pub m_crit: f64,
    pub m_bar: f64,
    pub kappa: Option<f64>,
    pub candidate_m: Option<f64>,
    pub admissible: Option<bool>,
    /// m_crit recomputed with the alternative factor `max(1, lambda0)` that
    /// parts of the source analysis use in place of the supremum form. The
    /// two differ for lambda0 > 1.
    pub m_crit_alt: f64,
    /// Set when the candidate m is admissible under one form but not the
    /// other; the report prints a note in that case.
    pub alt_form_disagrees: bool,
}

#[derive(Debug, Clone, PartialEq)]
pub enum ThresholdError {
    NonPositiveLambda0 { value: f64 },
    MuStarBelowOne { value: f64 },
    InvalidDimension { n: u32 },
    NonPositiveTissue { min: f64 },
    InvalidInput { what: &'static str },
}

impl fmt::Display for ThresholdError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            ThresholdError::NonPositiveLambda0 { value } => {
                write!(f, "lambda0 must be positive, got {value}")
            }
            ThresholdError::MuStarBelowOne { value } => {
                write!(f, "mu_star must be >= 1, got {value}")
            }
            ThresholdError::InvalidDimension { n } => write!(f, "dimension N = {n} must be >= 1"),
            ThresholdError::NonPositiveTissue { min } => {
                write!(f, "initial tissue must be strictly positive (min {min})")
            }
            ThresholdError::InvalidInput { what } => write!(f, "invalid threshold input: {what}"),
        }
    }
}

impl std::error::Error for ThresholdError {}

/// `sup_{s >= 1} lambda0^(1/(s+1))`: `sqrt(lambda0)` when `lambda0 >= 1`,
/// else `1` (the limit as `s -> inf`).
pub fn sup_lambda_term(lambda0: f64) -> Result<f64, ThresholdError> {
    if !(lambda0 > 0.0) || !lambda0.is_finite() {
        return Err(ThresholdError::NonPositiveLambda0 { value: lambda0 });
    }
    Ok(if lambda0 >= 1.0 { lambda0.sqrt() } else { 1.0 })
}

/// `mu_* = A / (A - mu)_+` with `A = sup_lambda * (chi + xi * w0_sup)`;
/// `+inf` when `mu >= A`.
pub fn mu_star(inputs: &ThresholdInputs) -> Result<f64, ThresholdError> {
    validate(inputs)?;
    let a = coeff(inputs)?;
    Ok(mu_star_from(a, inputs.mu))
}

fn mu_star_from(a: f64, mu: f64) -> f64 {
    if mu < a {
        a / (a - mu)
    } else {
        f64::INFINITY
    }
}

/// `gamma_* = (mu_* + 1)(N + mu_* - 1) / N`; maps `+inf` to `+inf`.
pub fn gamma_star(mu_star: f64, n: u32) -> Result<f64, ThresholdError> {
    if n < 1 {
        return Err(ThresholdError::InvalidDimension { n });
    }
    if !(mu_star >= 1.0) {
        return Err(ThresholdError::MuStarBelowOne { value: mu_star });
    }
    if mu_star.is_infinite() {
        return Ok(f64::INFINITY);
    }
    let nf = n as f64;
    Ok((mu_star + 1.0) * (nf + mu_star - 1.0) / nf)
}

/// Diffusion threshold of the earlier two-branch comparison result.
///
/// The branch switch sits at N = 9 where the two expressions cross; the
/// second branch uses the denominator N(N+2), which keeps the function
/// continuous across the switch and strictly above 2N/(N+2) for N >= 9.
pub fn m_bar(n: u32) -> Result<f64, ThresholdError> {
    if n < 1 {
        return Err(ThresholdError::InvalidDimension { n });
    }
    let nf = n as f64;
    Ok(if n <= 8 {
        (2.0 * nf * nf + 4.0 * nf - 4.0) / (nf * (nf + 4.0))
    } else {
        (2.0 * nf * nf + 3.0 * nf + 2.0 - (8.0 * nf * (nf + 1.0)).sqrt()) / (nf * (nf + 2.0))
    })
}

/// Constant of the one-sided tissue estimate, evaluated discretely on the
/// grid carrying `w0`:
/// `kappa = max |lap w0| + 4 max |grad sqrt(w0)|^2 + (max w0) / e`.
///
/// Requires `w0 > 0` everywhere so the square root is differentiable.
pub fn kappa(grid: &Grid, w0: &CellField) -> Result<f64, ThresholdError> {
    let min = w0.min();
    if !(min > 0.0) {
        return Err(ThresholdError::NonPositiveTissue { min });
    }
    let lap = laplacian(grid, w0);
    let lap_max = lap.values().iter().fold(0.0f64, |acc, v| acc.max(v.abs()));
    let sqrt_w0 = CellField::from_values(grid, w0.values().iter().map(|v| v.sqrt()).collect());
    let mut grad_max = 0.0f64;
    for axis in 0..grid.dim() {
        let g = face_gradient(grid, &sqrt_w0, axis);
        for v in g.values() {
            grad_max = grad_max.max(v.abs());
        }
    }
    Ok(lap_max + 4.0 * grad_max * grad_max + w0.max() / std::f64::consts::E)
}

/// Full report: all constants plus the admissibility of `candidate_m` under
/// `m > m_crit` when a candidate is given.
pub fn m_critical(
    inputs: &ThresholdInputs,
    candidate_m: Option<f64>,
) -> Result<ThresholdReport, ThresholdError> {
    validate(inputs)?;
    let sup_lambda = sup_lambda_term(inputs.lambda0)?;
    let a = sup_lambda * (inputs.chi + inputs.xi * inputs.w0_sup);
    let mu_star = mu_star_from(a, inputs.mu);
    let gamma = gamma_star(mu_star, inputs.n)?;
    let m_crit = m_crit_from(gamma, inputs.n);
    let m_bar = m_bar(inputs.n)?;

    let a_alt = inputs.lambda0.max(1.0) * (inputs.chi + inputs.xi * inputs.w0_sup);
    let gamma_alt = gamma_star(mu_star_from(a_alt, inputs.mu), inputs.n)?;
    let m_crit_alt = m_crit_from(gamma_alt, inputs.n);

    let admissible = candidate_m.map(|m| m > m_crit);
    let alt_form_disagrees = match candidate_m {
        Some(m) => (m > m_crit) != (m > m_crit_alt),
        None => false,
    };
    Ok(ThresholdReport {
        sup_lambda,
        coeff: a,
        mu_star,
        gamma_star: gamma,
        m_crit,
        m_bar,
        kappa: None,
        candidate_m,
        admissible,
        m_crit_alt,
        alt_form_disagrees,
    })
}

fn m_crit_from(gamma_star: f64, n: u32) -> f64 {
    if gamma_star.is_infinite() {
        0.0
    } else {
        2.0 * n as f64 / (n as f64 + gamma_star)
    }
}

fn coeff(inputs: &ThresholdInputs) -> Result<f64, ThresholdError> {
    Ok(sup_lambda_term(inputs.lambda0)? * (inputs.chi + inputs.xi * inputs.w0_sup))
}

fn validate(inputs: &ThresholdInputs) -> Result<(), ThresholdError> {
    if inputs.n < 1 {
        return Err(ThresholdError::InvalidDimension { n: inputs.n });
    }
    if !(inputs.chi > 0.0) || !inputs.chi.is_finite() {
        return Err(ThresholdError::InvalidInput { what: "chi must be positive and finite" });
    }
    if !(inputs.xi > 0.0) || !inputs.xi.is_finite() {
        return Err(ThresholdError::InvalidInput { what: "xi must be positive and finite" });
    }
    if !(inputs.mu >= 0.0) || !inputs.mu.is_finite() {
        return Err(ThresholdError::InvalidInput { what: "mu must be nonnegative and finite" });
    }
    if !(inputs.w0_sup >= 0.0) || !inputs.w0_sup.is_finite() {
        return Err(ThresholdError::InvalidInput { what: "w0_sup must be nonnegative and finite" });
    }
    if !(inputs.lambda0 > 0.0) || !inputs.lambda0.is_finite() {
        return Err(ThresholdError::NonPositiveLambda0 { value: inputs.lambda0 });
    }
    Ok(())
}

impl ThresholdReport {
    /// Key=value text block, one constant per line; `inf` for infinities.
    pub fn text_block(&self) -> String {
        let mut s = String::new();
        s.push_str(&format!("M = {}\n", self.sup_lambda));
        s.push_str(&format!("A = {}\n", self.coeff));
        s.push_str(&format!("mu_star = {}\n", self.mu_star));
        s.push_str(&format!("gamma_star = {}\n", self.gamma_star));
        s.push_str(&format!("m_crit = {}\n", self.m_crit));
        s.push_str(&format!("m_bar = {}\n", self.m_bar));
        if let Some(k) = self.kappa {
            s.push_str(&format!("kappa = {k}\n"));
        }
        if let Some(m) = self.candidate_m {
            s.push_str(&format!("m = {m}\n"));
            s.push_str(&format!("admissible = {}\n", self.admissible.unwrap_or(false)));
        }
        if self.alt_form_disagrees {
            s.push_str(&format!(
                "note = admissibility differs under the max(1, lambda0) form (m_crit_alt = {})\n",
                self.m_crit_alt
            ));
        }
        s
    }

    /// One JSON object on a single line.
    pub fn json_line(&self) -> String {
        fn num(v: f64) -> String {
            if v.is_infinite() {
                "\"inf\"".to_string()
            } else {
                format!("{v}")
            }
        }
        let mut fields = vec![
            format!("\"M\":{}", num(self.sup_lambda)),
            format!("\"A\":{}", num(self.coeff)),
            format!("\"mu_star\":{}", num(self.mu_star)),
            format!("\"gamma_star\":{}", num(self.gamma_star)),
            format!("\"m_crit\":{}", num(self.m_crit)),
            format!("\"m_bar\":{}", num(self.m_bar)),
            format!("\"m_crit_alt\":{}", num(self.m_crit_alt)),
            format!("\"alt_form_disagrees\":{}", self.alt_form_disagrees),
        ];
        if let Some(k) = self.kappa {
            fields.push(format!("\"kappa\":{}", num(k)));
        }
        if let Some(m) = self.candidate_m {
            fields.push(format!("\"m\":{}", num(m)));
            fields.push(format!("\"admissible\":{}", self.admissible.unwrap_or(false)));
        }
        format!("{{{}}}", fields.join(","))
    }
}
