//! Explicit time integration of the three-field system.
//!
//! One step advances, in order: the tissue `w` by an exact exponential in
//! the frozen current signal, the cell density `u` by a conservative
//! finite-volume update plus the logistic source, and the signal `v` by an
//! explicit diffusion-decay-source update seeing the fresh `u`. The ordering
//! follows the triangular coupling of the system: `w` depends only on `v`,
//! and the haptotactic flux of `u` uses the freshest tissue field.
//!
//! The step size comes from the parabolic, advective, and reaction limits;
//! with the default safety factor the update preserves `u, v >= 0` and
//! `0 <= w <= max w0` cellwise, and the flux part of the `u` update
//! telescopes so cell mass changes only through the logistic term.

use crate::diagnostics::{check_invariants, DiagnosticsConfig, DiagnosticsRecord, InvariantContext};
use crate::grid::{divergence, face_gradient, CellField, FaceField, Grid};
use crate::physics::{assemble_flux_into, DiffusivitySpec, PhysicsError, Sensitivities};
use crate::threshold;
use std::fmt;

/// Roundoff negativity below this magnitude is clipped to zero; anything
/// larger is a scheme failure and faults the run.
pub const CLIP_TOLERANCE: f64 = 1e-14;

/// Simulation state: the three fields plus the accumulated signal integral
/// used by the exact-tissue oracle `w = w0 * exp(-int_v)`.
#[derive(Debug, Clone)]
pub struct State {
    pub t: f64,
    pub u: CellField,
    pub v: CellField,
    pub w: CellField,
    pub int_v: CellField,
}

impl State {
    pub fn new(grid: &Grid, u0: CellField, v0: CellField, w0: CellField) -> State {
        assert_eq!(u0.len(), grid.cells());
        assert_eq!(v0.len(), grid.cells());
        assert_eq!(w0.len(), grid.cells());
        State { t: 0.0, u: u0, v: v0, w: w0, int_v: CellField::zeros(grid) }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SolverConfig {
    pub t_end: f64,
    pub cfl_safety: f64,
    pub dt_max: f64,
    pub dt_min: f64,
    /// Diagnostics cadence (the final time is always recorded too).
    pub output_every: f64,
    /// Full field snapshot cadence; 0 keeps only the initial and final ones.
    pub snapshot_every: f64,
    /// Abort threshold on the sup norm of `u`.
    pub blowup_u_max: f64,
    /// Hold `v` fixed (its update is skipped); used by the exactness tests.
    pub freeze_v: bool,
}

impl Default for SolverConfig {
    fn default() -> SolverConfig {
        SolverConfig {
            t_end: 10.0,
            cfl_safety: 0.4,
            dt_max: 0.05,
            dt_min: 1e-9,
            output_every: 0.5,
            snapshot_every: 0.0,
            blowup_u_max: 1e6,
            freeze_v: false,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum SolverFault {
    NonFinite { t: f64 },
    NegativeDensity { t: f64, min_u: f64 },
    Physics { t: f64, error: PhysicsError },
}

impl fmt::Display for SolverFault {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            SolverFault::NonFinite { t } => write!(f, "non-finite field value at t = {t}"),
            SolverFault::NegativeDensity { t, min_u } => {
                write!(f, "cell density fell to {min_u} at t = {t} (beyond clip tolerance)")
            }
            SolverFault::Physics { t, error } => write!(f, "at t = {t}: {error}"),
        }
    }
}

impl std::error::Error for SolverFault {}

#[derive(Debug, Clone, PartialEq)]
pub enum RunStatus {
    Completed,
    AbortedBlowup { t: f64 },
    AbortedDtUnderflow { t: f64 },
    Faulted(SolverFault),
}

impl RunStatus {
    pub fn is_completed(&self) -> bool {
        matches!(self, RunStatus::Completed)
    }
}

/// Stability limits behind one step; `raw` is the safety-scaled minimum
/// before clamping to `[dt_min, dt_max]`.
#[derive(Debug, Clone, Copy)]
pub struct DtLimits {
    pub diffusive: f64,
    pub advective: f64,
    pub reaction: f64,
    pub raw: f64,
}

/// Parabolic / advective / reaction step limits from the current state:
/// `h^2 / (2 dim (max face D + 1))` (the `+1` covers the unit diffusion of
/// the signal equation), `h / max |face velocity|`, and
/// `1 / (mu (1 + max u + sup w0) + 1)`.
pub fn dt_limits(
    grid: &Grid,
    state: &State,
    spec: &DiffusivitySpec,
    sens: &Sensitivities,
    cfl_safety: f64,
    w0_sup: f64,
) -> Result<DtLimits, PhysicsError> {
    let dim = grid.dim();
    let nx = grid.n(0);
    let ny = if dim == 2 { grid.n(1) } else { 1 };
    let uv = state.u.values();
    let mut max_u = 0.0f64;
    let mut d_cell = vec![0.0; grid.cells()];
    for (d, &u) in d_cell.iter_mut().zip(uv.iter()) {
        *d = spec.eval_d(u)?;
        max_u = max_u.max(u);
    }
    // max face D over adjacent-cell means
    let mut max_face_d = if grid.cells() == 1 { d_cell[0] } else { 0.0 };
    for j in 0..ny {
        for i in 1..nx {
            let d = 0.5 * (d_cell[grid.idx(i - 1, j)] + d_cell[grid.idx(i, j)]);
            max_face_d = max_face_d.max(d);
        }
    }
    if dim == 2 {
        for j in 1..ny {
            for i in 0..nx {
                let d = 0.5 * (d_cell[grid.idx(i, j - 1)] + d_cell[grid.idx(i, j)]);
                max_face_d = max_face_d.max(d);
            }
        }
    }

    let mut h_min = grid.spacing(0);
    let mut advective = f64::INFINITY;
    for axis in 0..dim {
        let h = grid.spacing(axis);
        h_min = h_min.min(h);
        let gv = face_gradient(grid, &state.v, axis);
        let gw = face_gradient(grid, &state.w, axis);
        let mut vmax = 0.0f64;
        for (a, b) in gv.values().iter().zip(gw.values()) {
            vmax = vmax.max((sens.chi * a + sens.xi * b).abs());
        }
        advective = advective.min(h / (vmax + 1e-300));
    }
    let diffusive = h_min * h_min / (2.0 * dim as f64 * (max_face_d + 1.0));
    let reaction = 1.0 / (sens.mu * (1.0 + max_u + w0_sup) + 1.0);
    let raw = cfl_safety * diffusive.min(advective).min(reaction);
    Ok(DtLimits { diffusive, advective, reaction, raw })
}

/// Safety-scaled minimum of the three limits, clamped to `[dt_min, dt_max]`.
/// A raw value below `dt_min` signals imminent blow-up or a degenerate
/// configuration and is surfaced by [`run`] as an abort event, not here.
pub fn compute_dt(
    grid: &Grid,
    state: &State,
    spec: &DiffusivitySpec,
    sens: &Sensitivities,
    config: &SolverConfig,
    w0_sup: f64,
) -> Result<f64, PhysicsError> {
    let limits = dt_limits(grid, state, spec, sens, config.cfl_safety, w0_sup)?;
    Ok(limits.raw.clamp(config.dt_min, config.dt_max))
}

/// Per-step statistics, gathered inside the update passes.
#[derive(Debug, Clone, Copy)]
pub struct StepStats {
    /// Relative defect of the discrete mass identity over this step.
    pub mass_residual: f64,
    pub max_u: f64,
    pub min_v: f64,
    pub max_w: f64,
    pub all_finite: bool,
}

/// Scratch buffers reused across steps.
pub struct Workspace {
    d_cell: Vec<f64>,
    fluxes: Vec<FaceField>,
}

impl Workspace {
    pub fn new(grid: &Grid) -> Workspace {
        Workspace {
            d_cell: vec![0.0; grid.cells()],
            fluxes: (0..grid.dim()).map(|a| FaceField::zeros(grid, a)).collect(),
        }
    }
}

/// One forward step of size `dt`. Updates `state` in place and reports the
/// step statistics; faults on non-finite values or negativity beyond the
/// clip tolerance.
pub fn step(
    grid: &Grid,
    state: &mut State,
    dt: f64,
    spec: &DiffusivitySpec,
    sens: &Sensitivities,
    ws: &mut Workspace,
    freeze_v: bool,
) -> Result<StepStats, SolverFault> {
    let t = state.t;
    let vol = grid.cell_volume();

    // (1) tissue: exact in the frozen current signal
    let mut max_w = 0.0f64;
    for ((w, &v), iv) in state
        .w
        .values_mut()
        .iter_mut()
        .zip(state.v.values())
        .zip(state.int_v.values_mut())
    {
        let a = dt * v;
        *iv += a;
        *w *= (-a).exp();
        max_w = max_w.max(*w);
    }

    // (2) cells: conservative flux divergence plus logistic source
    assemble_flux_into(grid, &state.u, &state.v, &state.w, spec, sens, &mut ws.d_cell, &mut ws.fluxes)
        .map_err(|error| SolverFault::Physics { t, error })?;
    let div = divergence(grid, &ws.fluxes);

    let mut mass_old = 0.0;
    let mut mass_new = 0.0;
    let mut mass_react = 0.0;
    let mut max_u = 0.0f64;
    let mut min_u = 0.0f64;
    let mut all_finite = true;
    let wv = state.w.values();
    for (k, u) in state.u.values_mut().iter_mut().enumerate() {
        let u_old = *u;
        let react = sens.mu * u_old * (1.0 - u_old - wv[k]);
        mass_old += u_old;
        mass_react += react;
        let mut u_new = u_old + dt * (react - div.values()[k]);
        if u_new < 0.0 {
            if u_new > -CLIP_TOLERANCE {
                u_new = 0.0;
            } else {
                min_u = min_u.min(u_new);
            }
        }
        all_finite &= u_new.is_finite();
        max_u = max_u.max(u_new);
        mass_new += u_new;
        *u = u_new;
    }
    if min_u < 0.0 {
        return Err(SolverFault::NegativeDensity { t, min_u });
    }
    let mass_residual =
        ((mass_new - mass_old - dt * mass_react) * vol).abs() / (mass_old * vol).abs().max(1.0);

    // (3) signal: explicit diffusion - decay + fresh source
    let mut min_v = f64::INFINITY;
    if freeze_v {
        min_v = min_v.min(state.v.min());
    } else {
        let lap = crate::grid::laplacian(grid, &state.v);
        let uv = state.u.values();
        for (k, v) in state.v.values_mut().iter_mut().enumerate() {
            let v_new = *v + dt * (lap.values()[k] - *v + uv[k]);
            all_finite &= v_new.is_finite();
            min_v = min_v.min(v_new);
            *v = v_new;
        }
    }

    state.t = t + dt;
    Ok(StepStats { mass_residual, max_u, min_v, max_w, all_finite })
}

#[derive(Debug, Clone)]
pub struct Snapshot {
    pub step: u64,
    pub t: f64,
    pub u: CellField,
    pub v: CellField,
    pub w: CellField,
}

#[derive(Debug, Clone)]
pub struct RunResult {
    pub status: RunStatus,
    pub final_state: State,
    pub records: Vec<DiagnosticsRecord>,
    pub snapshots: Vec<Snapshot>,
    pub steps: u64,
    pub sup_linf_u: f64,
    pub w0_sup: f64,
    pub kappa: f64,
}

/// Integrate to `t_end` (or abort), recording diagnostics at the output
/// cadence and snapshots at the snapshot cadence. Diagnostics and snapshots
/// are always taken at `t = 0` and at the stopping time. Deterministic: the
/// same inputs produce the same records bit for bit.
pub fn run(
    grid: &Grid,
    mut state: State,
    spec: &DiffusivitySpec,
    sens: &Sensitivities,
    config: &SolverConfig,
    diag: &DiagnosticsConfig,
) -> RunResult {
    assert!(state.w.min() > 0.0, "initial tissue must be positive");
    let w0 = state.w.clone();
    let w0_sup = w0.max();
    let kappa = threshold::kappa(grid, &w0).expect("positive tissue");
    let mut ws = Workspace::new(grid);

    let mut records = Vec::new();
    let mut snapshots = Vec::new();
    let mut steps: u64 = 0;
    let mut sup_linf_u = state.u.max();
    let mut mass_acc = 0.0f64; // max step mass defect since the last record

    records.push(check_invariants(
        grid,
        &state,
        &InvariantContext { w0: &w0, w0_sup, kappa, mass_residual: 0.0 },
        diag,
    ));
    snapshots.push(Snapshot {
        step: 0,
        t: 0.0,
        u: state.u.clone(),
        v: state.v.clone(),
        w: state.w.clone(),
    });

    if config.t_end <= 0.0 {
        return RunResult {
            status: RunStatus::Completed,
            final_state: state,
            records,
            snapshots,
            steps,
            sup_linf_u,
            w0_sup,
            kappa,
        };
    }

    let mut rec_k: u64 = 1;
    let mut snap_k: u64 = 1;
    let status = loop {
        let limits = match dt_limits(grid, &state, spec, sens, config.cfl_safety, w0_sup) {
            Ok(l) => l,
            Err(error) => break RunStatus::Faulted(SolverFault::Physics { t: state.t, error }),
        };
        if limits.raw < config.dt_min {
            break RunStatus::AbortedDtUnderflow { t: state.t };
        }
        let dt_stab = limits.raw.min(config.dt_max);
        let next_rec = (rec_k as f64 * config.output_every).min(config.t_end);
        let next_snap = if config.snapshot_every > 0.0 {
            (snap_k as f64 * config.snapshot_every).min(config.t_end)
        } else {
            config.t_end
        };
        let next_event = next_rec.min(next_snap);
        let dt = dt_stab.min(next_event - state.t);
        let stats = match step(grid, &mut state, dt, spec, sens, &mut ws, config.freeze_v) {
            Ok(s) => s,
            Err(fault) => break RunStatus::Faulted(fault),
        };
        steps += 1;
        // snap onto the event time so cadences stay exact
        if (state.t - next_event).abs() <= 1e-12 * next_event.max(1.0) {
            state.t = next_event;
        }
        sup_linf_u = sup_linf_u.max(stats.max_u);
        mass_acc = mass_acc.max(stats.mass_residual);
        if !stats.all_finite {
            break RunStatus::Faulted(SolverFault::NonFinite { t: state.t });
        }
        let at_rec = state.t >= next_rec;
        if at_rec {
            records.push(check_invariants(
                grid,
                &state,
                &InvariantContext { w0: &w0, w0_sup, kappa, mass_residual: mass_acc },
                diag,
            ));
            mass_acc = 0.0;
            rec_k += 1;
        }
        if config.snapshot_every > 0.0 && state.t >= next_snap {
            snapshots.push(Snapshot {
                step: steps,
                t: state.t,
                u: state.u.clone(),
                v: state.v.clone(),
                w: state.w.clone(),
            });
            snap_k += 1;
        }
        if stats.max_u > config.blowup_u_max {
            break RunStatus::AbortedBlowup { t: state.t };
        }
        if state.t >= config.t_end {
            break RunStatus::Completed;
        }
    };

    // close the record and snapshot sequences at the stopping time
    if records.last().map(|r| r.t) != Some(state.t) {
        records.push(check_invariants(
            grid,
            &state,
            &InvariantContext { w0: &w0, w0_sup, kappa, mass_residual: mass_acc },
            diag,
        ));
    }
    if snapshots.last().map(|s| s.t) != Some(state.t) {
        snapshots.push(Snapshot {
            step: steps,
            t: state.t,
            u: state.u.clone(),
            v: state.v.clone(),
            w: state.w.clone(),
        });
    }
    RunResult { status, final_state: state, records, snapshots, steps, sup_linf_u, w0_sup, kappa }
}
