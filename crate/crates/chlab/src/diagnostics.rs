//! Runtime verification of the model's a-priori bounds, norm time series,
//! the weak-form residuals of the three equations, and the homogeneous ODE
//! oracle.
//!
//! Diagnostics never abort a run: hard violations (negativity, the tissue
//! ceiling) raise flags for the caller, soft estimates (the one-sided
//! `-lap w` bound, whose discrete form can be polluted near under-resolved
//! fronts) are reported as defects only.

use crate::grid::{face_gradient, laplacian, CellField, Grid};
use crate::physics::{DiffusivitySpec, Sensitivities};
use crate::solver::{Snapshot, State};
use std::fmt;

/// Which extra norms to track. `k_exponents` adds `L^k` norms of `u` beyond
/// the fixed 1, 2, inf set; `beta_exponents` adds `L^(2 beta)` norms of
/// `|grad v|`.
#[derive(Debug, Clone, PartialEq)]
pub struct DiagnosticsConfig {
    pub k_exponents: Vec<f64>,
    pub beta_exponents: Vec<f64>,
}

impl Default for DiagnosticsConfig {
    fn default() -> DiagnosticsConfig {
        DiagnosticsConfig { k_exponents: vec![4.0, 8.0], beta_exponents: vec![1.0, 2.0] }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct InvariantFlags {
    pub negative_u: bool,
    pub negative_v: bool,
    pub w_above_initial: bool,
    pub w_negative: bool,
    pub nonfinite: bool,
}

impl InvariantFlags {
    pub fn is_ok(&self) -> bool {
        !(self.negative_u
            || self.negative_v
            || self.w_above_initial
            || self.w_negative
            || self.nonfinite)
    }
}

impl fmt::Display for InvariantFlags {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.is_ok() {
            return write!(f, "ok");
        }
        let mut parts = Vec::new();
        if self.negative_u {
            parts.push("neg_u");
        }
        if self.negative_v {
            parts.push("neg_v");
        }
        if self.w_above_initial {
            parts.push("w_over");
        }
        if self.w_negative {
            parts.push("neg_w");
        }
        if self.nonfinite {
            parts.push("nonfinite");
        }
        write!(f, "{}", parts.join("|"))
    }
}

/// One row of the diagnostics time series.
#[derive(Debug, Clone, PartialEq)]
pub struct DiagnosticsRecord {
    pub t: f64,
    pub l1_u: f64,
    pub l2_u: f64,
    pub linf_u: f64,
    /// (k, ||u||_k) for each configured extra exponent.
    pub lk_u: Vec<(f64, f64)>,
    pub linf_grad_v: f64,
    /// (2 beta, ||grad v||_{2 beta}) for each configured beta.
    pub l2beta_grad_v: Vec<(f64, f64)>,
    pub linf_w: f64,
    pub linf_grad_w: f64,
    /// Max relative defect of the discrete mass identity since the last
    /// record (supplied by the solver loop; 0 for standalone evaluation).
    pub mass_residual: f64,
    /// Max over cells of the positive part of
    /// `-lap w - (sup w0) v - kappa`; soft, reported only.
    pub kappa_violation: f64,
    /// Max over cells of `|w - w0 exp(-int_v)|`.
    pub w_exactness_err: f64,
    pub flags: InvariantFlags,
}

/// Context the solver hands to [`check_invariants`].
pub struct InvariantContext<'a> {
    pub w0: &'a CellField,
    pub w0_sup: f64,
    pub kappa: f64,
    pub mass_residual: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub enum DiagnosticsError {
    TooFewSnapshots { have: usize },
    NonUniformCadence,
}

impl fmt::Display for DiagnosticsError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            DiagnosticsError::TooFewSnapshots { have } => {
                write!(f, "weak residual needs at least 3 snapshots, have {have}")
            }
            DiagnosticsError::NonUniformCadence => {
                write!(f, "weak residual needs snapshots at a uniform cadence")
            }
        }
    }
}

impl std::error::Error for DiagnosticsError {}

/// `(sum |f|^p vol)^(1/p)`; `p = inf` gives `max |f|`. Panics for `p < 1`.
pub fn lp_norm(grid: &Grid, f: &CellField, p: f64) -> f64 {
    assert!(p >= 1.0, "lp_norm needs p >= 1, got {p}");
    if p.is_infinite() {
        return f.values().iter().fold(0.0f64, |acc, v| acc.max(v.abs()));
    }
    let vol = grid.cell_volume();
    let sum: f64 = f.values().iter().map(|v| v.abs().powf(p) * vol).sum();
    sum.powf(1.0 / p)
}

/// Cell-centered gradient magnitude, face gradients averaged to centers.
pub fn gradient_magnitude(grid: &Grid, f: &CellField) -> CellField {
    let (gx, gy) = gradient_components(grid, f);
    let mag = gx
        .into_iter()
        .zip(gy)
        .map(|(a, b)| (a * a + b * b).sqrt())
        .collect();
    CellField::from_values(grid, mag)
}

/// Evaluate every tracked quantity on an immutable state. Never aborts;
/// violations are flagged, soft defects reported.
pub fn check_invariants(
    grid: &Grid,
    state: &State,
    ctx: &InvariantContext<'_>,
    cfg: &DiagnosticsConfig,
) -> DiagnosticsRecord {
    let u = &state.u;
    let v = &state.v;
    let w = &state.w;

    let lk_u: Vec<(f64, f64)> =
        cfg.k_exponents.iter().map(|&k| (k, lp_norm(grid, u, k))).collect();
    let grad_v = gradient_magnitude(grid, v);
    let l2beta_grad_v: Vec<(f64, f64)> = cfg
        .beta_exponents
        .iter()
        .map(|&b| (2.0 * b, lp_norm(grid, &grad_v, 2.0 * b)))
        .collect();
    let grad_w = gradient_magnitude(grid, w);

    let lap_w = laplacian(grid, w);
    let mut kappa_violation = 0.0f64;
    for (k, &lw) in lap_w.values().iter().enumerate() {
        let defect = -lw - ctx.w0_sup * v.values()[k] - ctx.kappa;
        kappa_violation = kappa_violation.max(defect);
    }
    kappa_violation = kappa_violation.max(0.0);

    let mut w_exactness_err = 0.0f64;
    for ((&wi, &w0i), &iv) in w.values().iter().zip(ctx.w0.values()).zip(state.int_v.values()) {
        w_exactness_err = w_exactness_err.max((wi - w0i * (-iv).exp()).abs());
    }

    let nonfinite = u.values().iter().any(|x| !x.is_finite())
        || v.values().iter().any(|x| !x.is_finite())
        || w.values().iter().any(|x| !x.is_finite());
    let flags = InvariantFlags {
        negative_u: u.min() < 0.0,
        negative_v: v.min() < 0.0,
        w_above_initial: w.max() > ctx.w0_sup + 1e-12,
        w_negative: w.min() < 0.0,
        nonfinite,
    };

    DiagnosticsRecord {
        t: state.t,
        l1_u: lp_norm(grid, u, 1.0),
        l2_u: lp_norm(grid, u, 2.0),
        linf_u: lp_norm(grid, u, f64::INFINITY),
        lk_u,
        linf_grad_v: lp_norm(grid, &grad_v, f64::INFINITY),
        l2beta_grad_v,
        linf_w: lp_norm(grid, w, f64::INFINITY),
        linf_grad_w: lp_norm(grid, &grad_w, f64::INFINITY),
        mass_residual: ctx.mass_residual,
        kappa_violation,
        w_exactness_err,
        flags,
    }
}

/// RK4 on the space-homogeneous reduction
/// `u' = mu u (1 - u - w), v' = u - v, w' = -v w`; ground truth for
/// homogeneous runs. Returns the full `(t, [u, v, w])` trajectory.
pub fn ode_oracle(sens: &Sensitivities, y0: [f64; 3], t_end: f64, dt: f64) -> Vec<(f64, [f64; 3])> {
    assert!(y0.iter().all(|&y| y >= 0.0), "oracle needs nonnegative initial data");
    assert!(dt > 0.0);
    let mu = sens.mu;
    let f =
        |y: [f64; 3]| -> [f64; 3] { [mu * y[0] * (1.0 - y[0] - y[2]), y[0] - y[1], -y[1] * y[2]] };
    let mut out = vec![(0.0, y0)];
    let mut t = 0.0;
    let mut y = y0;
    while t < t_end {
        let h = dt.min(t_end - t);
        let k1 = f(y);
        let k2 = f(add(y, scale(k1, h / 2.0)));
        let k3 = f(add(y, scale(k2, h / 2.0)));
        let k4 = f(add(y, scale(k3, h)));
        for i in 0..3 {
            y[i] += h / 6.0 * (k1[i] + 2.0 * k2[i] + 2.0 * k3[i] + k4[i]);
        }
        t += h;
        out.push((t, y));
    }
    out
}

fn add(a: [f64; 3], b: [f64; 3]) -> [f64; 3] {
    [a[0] + b[0], a[1] + b[1], a[2] + b[2]]
}

fn scale(a: [f64; 3], s: f64) -> [f64; 3] {
    [a[0] * s, a[1] * s, a[2] * s]
}

/// Separable Neumann-compatible test function
/// `phi(x, t) = psi(t) cos(jx pi x / Lx) [cos(jy pi y / Ly)]` with the
/// smooth window `psi(t) = (1 + cos(pi t / T)) / 2`, which vanishes (with
/// its derivative) at the final time.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct TestFunction {
    pub modes: [u32; 2],
}

impl TestFunction {
    pub fn id(&self) -> String {
        format!("j{}k{}", self.modes[0], self.modes[1])
    }
}

/// Defects of the three weak-form identities, each normalized by
/// `max(|lhs|, |rhs|, 1)`.
#[derive(Debug, Clone, PartialEq)]
pub struct WeakResidualReport {
    pub test_id: String,
    pub residual_u: f64,
    pub residual_v: f64,
    pub residual_w: f64,
    pub refinement: usize,
}

/// Evaluate both sides of the three weak-form identities on a snapshot
/// sequence with trapezoidal time quadrature and the grid operators.
///
/// The identities, for Neumann-compatible `phi` vanishing at the final
/// time, with `H` the primitive of the diffusivity:
///
/// ```text
/// -II u phi_t - I u0 phi(0) = II [ H(u) lap phi + chi u grad v . grad phi
///                                  + xi u grad w . grad phi
///                                  + mu u (1 - u - w) phi ]
/// -II v phi_t - I v0 phi(0) = II [ -grad v . grad phi - v phi + u phi ]
/// -II w phi_t - I w0 phi(0) = -II v w phi
/// ```
pub fn weak_residual(
    grid: &Grid,
    snaps: &[Snapshot],
    spec: &DiffusivitySpec,
    sens: &Sensitivities,
    tf: &TestFunction,
    refinement: usize,
) -> Result<WeakResidualReport, DiagnosticsError> {
    if snaps.len() < 3 {
        return Err(DiagnosticsError::TooFewSnapshots { have: snaps.len() });
    }
    let t_final = snaps.last().unwrap().t;
    let dt_snap = snaps[1].t - snaps[0].t;
    for pair in snaps.windows(2) {
        if ((pair[1].t - pair[0].t) - dt_snap).abs() > 1e-9 * t_final.max(1.0) {
            return Err(DiagnosticsError::NonUniformCadence);
        }
    }

    let vol = grid.cell_volume();
    let cells = grid.cells();
    let nx = grid.n(0);
    let pi = std::f64::consts::PI;
    let kx = tf.modes[0] as f64 * pi / grid.length(0);
    let ky = if grid.dim() == 2 { tf.modes[1] as f64 * pi / grid.length(1) } else { 0.0 };

    // spatial factor c, its Laplacian prefactor, and its gradient
    let mut c = vec![0.0; cells];
    let mut cx = vec![0.0; cells];
    let mut cy = vec![0.0; cells];
    for idx in 0..cells {
        let i = idx % nx;
        let j = idx / nx;
        let x = grid.center(0, i);
        let y = if grid.dim() == 2 { grid.center(1, j) } else { 0.0 };
        let (sx, cxv) = (kx * x).sin_cos();
        let (sy, cyv) = if grid.dim() == 2 { (ky * y).sin_cos() } else { (0.0, 1.0) };
        c[idx] = cxv * cyv;
        cx[idx] = -kx * sx * cyv;
        cy[idx] = -ky * cxv * sy;
    }
    let lap_c_factor = -(kx * kx + ky * ky);

    let psi = |t: f64| 0.5 * (1.0 + (pi * t / t_final).cos());
    let dpsi = |t: f64| -0.5 * pi / t_final * (pi * t / t_final).sin();

    // per-snapshot spatial integrals
    let n = snaps.len();
    let mut lhs_u_t = vec![0.0; n];
    let mut rhs_u_t = vec![0.0; n];
    let mut lhs_v_t = vec![0.0; n];
    let mut rhs_v_t = vec![0.0; n];
    let mut lhs_w_t = vec![0.0; n];
    let mut rhs_w_t = vec![0.0; n];
    for (s, snap) in snaps.iter().enumerate() {
        let ps = psi(snap.t);
        let dps = dpsi(snap.t);
        let gv = gradient_components(grid, &snap.v);
        let gw = gradient_components(grid, &snap.w);
        let uv = snap.u.values();
        let vv = snap.v.values();
        let wv = snap.w.values();
        let mut iu_phit = 0.0;
        let mut iv_phit = 0.0;
        let mut iw_phit = 0.0;
        let mut irhs_u = 0.0;
        let mut irhs_v = 0.0;
        let mut ivw = 0.0;
        for k in 0..cells {
            iu_phit += uv[k] * dps * c[k];
            iv_phit += vv[k] * dps * c[k];
            iw_phit += wv[k] * dps * c[k];
            let h_u = spec.eval_h(uv[k].max(0.0)).unwrap_or(f64::NAN);
            let grad_phi_dot_v = gv.0[k] * cx[k] + gv.1[k] * cy[k];
            let grad_phi_dot_w = gw.0[k] * cx[k] + gw.1[k] * cy[k];
            irhs_u += h_u * ps * lap_c_factor * c[k]
                + (sens.chi * grad_phi_dot_v + sens.xi * grad_phi_dot_w) * uv[k] * ps
                + sens.mu * uv[k] * (1.0 - uv[k] - wv[k]) * ps * c[k];
            irhs_v += (-grad_phi_dot_v - vv[k] * c[k] + uv[k] * c[k]) * ps;
            ivw += vv[k] * wv[k] * ps * c[k];
        }
        lhs_u_t[s] = iu_phit * vol;
        rhs_u_t[s] = irhs_u * vol;
        lhs_v_t[s] = iv_phit * vol;
        rhs_v_t[s] = irhs_v * vol;
        lhs_w_t[s] = iw_phit * vol;
        rhs_w_t[s] = -ivw * vol;
    }

    let init = |f0: &CellField| -> f64 {
        let p0 = psi(0.0);
        f0.values().iter().zip(&c).map(|(&f, &ck)| f * p0 * ck).sum::<f64>() * vol
    };
    let u0_term = init(&snaps[0].u);
    let v0_term = init(&snaps[0].v);
    let w0_term = init(&snaps[0].w);

    let residual = |lhs_t: &[f64], rhs_t: &[f64], init_term: f64| -> f64 {
        let lhs = -trapz(lhs_t, dt_snap) - init_term;
        let rhs = trapz(rhs_t, dt_snap);
        (lhs - rhs).abs() / lhs.abs().max(rhs.abs()).max(1.0)
    };

    Ok(WeakResidualReport {
        test_id: tf.id(),
        residual_u: residual(&lhs_u_t, &rhs_u_t, u0_term),
        residual_v: residual(&lhs_v_t, &rhs_v_t, v0_term),
        residual_w: residual(&lhs_w_t, &rhs_w_t, w0_term),
        refinement,
    })
}

/// Cell-centered gradient components (x, y); the y part is zero in 1D.
fn gradient_components(grid: &Grid, f: &CellField) -> (Vec<f64>, Vec<f64>) {
    let nx = grid.n(0);
    let ny = if grid.dim() == 2 { grid.n(1) } else { 1 };
    let mut gx = vec![0.0; grid.cells()];
    let mut gy = vec![0.0; grid.cells()];
    let g0 = face_gradient(grid, f, 0);
    for j in 0..ny {
        for i in 0..nx {
            gx[grid.idx(i, j)] =
                0.5 * (g0.values()[j * (nx + 1) + i] + g0.values()[j * (nx + 1) + i + 1]);
        }
    }
    if grid.dim() == 2 {
        let g1 = face_gradient(grid, f, 1);
        for j in 0..ny {
            for i in 0..nx {
                gy[grid.idx(i, j)] =
                    0.5 * (g1.values()[j * nx + i] + g1.values()[(j + 1) * nx + i]);
            }
        }
    }
    (gx, gy)
}

fn trapz(f: &[f64], dt: f64) -> f64 {
    if f.len() < 2 {
        return 0.0;
    }
    let inner: f64 = f[1..f.len() - 1].iter().sum();
    dt * (0.5 * (f[0] + f[f.len() - 1]) + inner)
}
