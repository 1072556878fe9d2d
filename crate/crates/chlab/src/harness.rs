//! Experiment orchestration: parameter sweeps with boundedness
//! classification, and dyadic convergence studies.
//!
//! Sweep rows are computed over the Cartesian product of the axes in
//! axis-major order and emitted strictly in row order even when workers run
//! in parallel, so result files are byte-identical across reruns and a
//! partial file can be resumed by skipping the rows it already has.

use crate::config::{ConfigError, ResolvedConfig};
use crate::diagnostics::lp_norm;
use crate::grid::{CellField, Grid};
use crate::output::emit_outputs;
use crate::solver::{run, RunStatus};
use crate::threshold::m_critical;
use std::collections::BTreeMap;
use std::fmt;
use std::io;
use std::path::PathBuf;
use std::sync::atomic::{AtomicBool, AtomicUsize, Ordering};
use std::sync::mpsc;

#[derive(Debug, Clone, PartialEq)]
pub struct SweepAxis {
    pub key: String,
    pub values: Vec<f64>,
}

/// Parse `sweep.axes`: semicolon-separated `key=v1,v2,...` entries.
pub fn parse_axes(text: &str) -> Result<Vec<SweepAxis>, ConfigError> {
    let mut axes = Vec::new();
    for part in text.split(';') {
        let part = part.trim();
        if part.is_empty() {
            continue;
        }
        let eq = part.find('=').ok_or_else(|| ConfigError::Value {
            key: "sweep.axes".into(),
            msg: format!("axis '{part}' is not of the form key=v1,v2"),
        })?;
        let key = part[..eq].trim().to_string();
        let values: Result<Vec<f64>, _> = part[eq + 1..]
            .split(',')
            .map(|v| {
                v.trim().parse::<f64>().map_err(|_| ConfigError::Value {
                    key: "sweep.axes".into(),
                    msg: format!("bad value '{}' for axis {key}", v.trim()),
                })
            })
            .collect();
        let values = values?;
        if values.is_empty() {
            return Err(ConfigError::Value {
                key: "sweep.axes".into(),
                msg: format!("axis {key} has no values"),
            });
        }
        axes.push(SweepAxis { key, values });
    }
    if axes.is_empty() {
        return Err(ConfigError::Value {
            key: "sweep.axes".into(),
            msg: "a sweep needs at least one axis".into(),
        });
    }
    Ok(axes)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum RowStatus {
    Bounded,
    AbortedBlowup,
    AbortedDt,
    Incomplete,
}

impl RowStatus {
    pub fn token(&self) -> &'static str {
        match self {
            RowStatus::Bounded => "bounded",
            RowStatus::AbortedBlowup => "aborted_blowup",
            RowStatus::AbortedDt => "aborted_dt",
            RowStatus::Incomplete => "incomplete",
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SweepRow {
    pub index: usize,
    pub values: Vec<f64>,
    pub m_crit: f64,
    pub sup_linf_u: f64,
    pub final_linf_u: f64,
    pub status: RowStatus,
}

#[derive(Debug, Clone, Default)]
pub struct SweepOptions {
    /// Rows already present in a partial result file; they are not rerun.
    pub skip_rows: usize,
    /// Stop after this many newly computed rows (used to test resuming).
    pub limit: Option<usize>,
    /// Worker count; 0 means the machine's available parallelism.
    pub parallelism: usize,
    /// When set, each row writes its full run artifacts to
    /// `<root>/run_<index>/`.
    pub per_run_root: Option<PathBuf>,
    pub deterministic: bool,
}

#[derive(Debug)]
pub enum HarnessError {
    Config(ConfigError),
    Run { detail: String },
    Io(io::Error),
}

impl fmt::Display for HarnessError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            HarnessError::Config(e) => write!(f, "{e}"),
            HarnessError::Run { detail } => write!(f, "run failed: {detail}"),
            HarnessError::Io(e) => write!(f, "io error: {e}"),
        }
    }
}

impl std::error::Error for HarnessError {}

impl From<ConfigError> for HarnessError {
    fn from(e: ConfigError) -> Self {
        HarnessError::Config(e)
    }
}

impl From<io::Error> for HarnessError {
    fn from(e: io::Error) -> Self {
        HarnessError::Io(e)
    }
}

/// Total row count of the Cartesian product.
pub fn sweep_size(axes: &[SweepAxis]) -> usize {
    axes.iter().map(|a| a.values.len()).product()
}

/// Axis values of row `index`, first axis slowest.
pub fn row_values(axes: &[SweepAxis], index: usize) -> Vec<f64> {
    let mut rem = index;
    let mut out = vec![0.0; axes.len()];
    for (a, axis) in axes.iter().enumerate().rev() {
        let n = axis.values.len();
        out[a] = axis.values[rem % n];
        rem /= n;
    }
    out
}

fn compute_row(
    base: &ResolvedConfig,
    axes: &[SweepAxis],
    index: usize,
    opts: &SweepOptions,
) -> Result<SweepRow, HarnessError> {
    let values = row_values(axes, index);
    let mut cfg = base.clone();
    for (axis, v) in axes.iter().zip(&values) {
        cfg.set_key(&axis.key, &v.to_string())?;
    }
    if cfg.sweep_t_end > 0.0 {
        cfg.t_end = cfg.sweep_t_end;
    }
    cfg.validate()?;

    let m_crit = m_critical(&cfg.threshold_inputs(), Some(cfg.m))
        .map_err(|e| HarnessError::Run { detail: e.to_string() })?
        .m_crit;

    let (grid, state) = cfg.build();
    let u0_linf = state.u.max();
    let result = run(
        &grid,
        state,
        &cfg.diffusivity(),
        &cfg.sensitivities(),
        &cfg.solver(),
        &cfg.diagnostics(),
    );
    if let Some(root) = &opts.per_run_root {
        emit_outputs(&root.join(format!("run_{index:04}")), &cfg, &grid, &result, opts.deterministic)?;
    }
    let final_linf_u = result.final_state.u.max();
    let status = match result.status {
        RunStatus::Completed => {
            if result.sup_linf_u <= cfg.sweep_bound_factor * u0_linf.max(1.0) {
                RowStatus::Bounded
            } else {
                RowStatus::Incomplete
            }
        }
        RunStatus::AbortedBlowup { .. } => RowStatus::AbortedBlowup,
        RunStatus::AbortedDtUnderflow { .. } => RowStatus::AbortedDt,
        RunStatus::Faulted(_) => RowStatus::Incomplete,
    };
    Ok(SweepRow {
        index,
        values,
        m_crit,
        sup_linf_u: result.sup_linf_u,
        final_linf_u,
        status,
    })
}

/// Run the sweep, emitting rows in index order as they become available.
/// Individual run aborts become row statuses; only configuration errors and
/// sink failures abort the sweep itself.
pub fn run_sweep(
    base: &ResolvedConfig,
    axes: &[SweepAxis],
    opts: &SweepOptions,
    mut emit: impl FnMut(&SweepRow) -> io::Result<()>,
) -> Result<Vec<SweepRow>, HarnessError> {
    let total = sweep_size(axes);
    let start = opts.skip_rows.min(total);
    let end = match opts.limit {
        Some(l) => (start + l).min(total),
        None => total,
    };
    let workers = if opts.parallelism == 0 {
        std::thread::available_parallelism().map(|n| n.get()).unwrap_or(1)
    } else {
        opts.parallelism
    };

    let mut rows = Vec::with_capacity(end - start);
    if workers <= 1 || end - start <= 1 {
        for index in start..end {
            let row = compute_row(base, axes, index, opts)?;
            emit(&row)?;
            rows.push(row);
        }
        return Ok(rows);
    }

    let next = AtomicUsize::new(start);
    let failed = AtomicBool::new(false);
    let (tx, rx) = mpsc::channel::<Result<SweepRow, HarnessError>>();
    let mut first_err: Option<HarnessError> = None;
    std::thread::scope(|scope| {
        for _ in 0..workers.min(end - start) {
            let tx = tx.clone();
            let next = &next;
            let failed = &failed;
            scope.spawn(move || loop {
                if failed.load(Ordering::Relaxed) {
                    break;
                }
                let index = next.fetch_add(1, Ordering::Relaxed);
                if index >= end {
                    break;
                }
                let row = compute_row(base, axes, index, opts);
                if row.is_err() {
                    failed.store(true, Ordering::Relaxed);
                }
                if tx.send(row).is_err() {
                    break;
                }
            });
        }
        drop(tx);
        // flush rows strictly in index order
        let mut pending: BTreeMap<usize, SweepRow> = BTreeMap::new();
        let mut expect = start;
        for item in rx {
            match item {
                Ok(row) => {
                    pending.insert(row.index, row);
                    while let Some(row) = pending.remove(&expect) {
                        if let Err(e) = emit(&row) {
                            failed.store(true, Ordering::Relaxed);
                            if first_err.is_none() {
                                first_err = Some(e.into());
                            }
                            break;
                        }
                        rows.push(row);
                        expect += 1;
                    }
                }
                Err(e) => {
                    if first_err.is_none() {
                        first_err = Some(e);
                    }
                }
            }
        }
    });
    match first_err {
        Some(e) => Err(e),
        None => Ok(rows),
    }
}

/// Sweep results CSV header for the given axes.
pub fn results_csv_header(axes: &[SweepAxis]) -> String {
    let mut s = String::from("schema,row");
    for a in axes {
        s.push(',');
        s.push_str(&a.key);
    }
    s.push_str(",m_crit,sup_linf_u,final_linf_u,status\n");
    s
}

/// One CSV row matching [`results_csv_header`].
pub fn results_csv_row(row: &SweepRow) -> String {
    let mut s = format!("{},{}", crate::output::CSV_SCHEMA_VERSION, row.index);
    for v in &row.values {
        s.push_str(&format!(",{v}"));
    }
    s.push_str(&format!(
        ",{},{},{},{}\n",
        row.m_crit,
        row.sup_linf_u,
        row.final_linf_u,
        row.status.token()
    ));
    s
}

#[derive(Debug, Clone)]
pub struct ConvergenceLevel {
    pub level: usize,
    pub nx: usize,
    pub h: f64,
    pub dt_max: f64,
    /// Errors against the finest level; absent on the finest level itself.
    pub err_l1: Option<f64>,
    pub err_linf: Option<f64>,
    /// `log2(err_this / err_next)`; absent on the last two levels.
    pub order_l1: Option<f64>,
    pub order_linf: Option<f64>,
    /// Raised when the error fails to decrease toward the next level.
    pub warning: bool,
}

/// Average a fine cell field down to a coarser dyadic grid.
pub fn restrict(fine_grid: &Grid, fine: &CellField, coarse_grid: &Grid) -> CellField {
    let factor = fine_grid.n(0) / coarse_grid.n(0);
    assert!(factor >= 1 && coarse_grid.n(0) * factor == fine_grid.n(0));
    let dim = coarse_grid.dim();
    let (cnx, cny) = (coarse_grid.n(0), if dim == 2 { coarse_grid.n(1) } else { 1 });
    let fnx = fine_grid.n(0);
    let mut out = vec![0.0; coarse_grid.cells()];
    let block = if dim == 2 { factor * factor } else { factor };
    for cj in 0..cny {
        for ci in 0..cnx {
            let mut acc = 0.0;
            if dim == 1 {
                for di in 0..factor {
                    acc += fine.values()[ci * factor + di];
                }
            } else {
                for dj in 0..factor {
                    for di in 0..factor {
                        acc += fine.values()[(cj * factor + dj) * fnx + ci * factor + di];
                    }
                }
            }
            out[cj * cnx + ci] = acc / block as f64;
        }
    }
    CellField::from_values(coarse_grid, out)
}

/// Dyadic refinement study: `levels` runs with cells doubled and `dt_max`
/// quartered per level, errors in L1 and Linf against the finest level at
/// the common final time. Non-monotone errors raise a warning, not a
/// failure.
pub fn convergence_study(
    base: &ResolvedConfig,
    levels: usize,
) -> Result<Vec<ConvergenceLevel>, HarnessError> {
    assert!(levels >= 3, "a convergence study needs at least 3 levels");
    base.validate()?;
    let mut finals: Vec<(Grid, CellField)> = Vec::new();
    let mut meta: Vec<(usize, f64, f64)> = Vec::new();
    for level in 0..levels {
        let mut cfg = base.clone();
        let scale = 1usize << level;
        cfg.nx = base.nx * scale;
        if cfg.dim == 2 {
            cfg.ny = base.ny * scale;
        }
        cfg.dt_max = base.dt_max / (scale * scale) as f64;
        cfg.snapshot_every = 0.0;
        cfg.validate()?;
        let (grid, state) = cfg.build();
        let result = run(
            &grid,
            state,
            &cfg.diffusivity(),
            &cfg.sensitivities(),
            &cfg.solver(),
            &cfg.diagnostics(),
        );
        if !result.status.is_completed() {
            return Err(HarnessError::Run {
                detail: format!("convergence level {level} did not complete: {:?}", result.status),
            });
        }
        meta.push((cfg.nx, grid.spacing(0), cfg.dt_max));
        finals.push((grid, result.final_state.u));
    }

    let (fine_grid, fine_u) = finals.last().unwrap();
    let mut errs: Vec<(f64, f64)> = Vec::new();
    for (grid, u) in finals.iter().take(levels - 1) {
        let restricted = restrict(fine_grid, fine_u, grid);
        let diff = CellField::from_values(
            grid,
            u.values().iter().zip(restricted.values()).map(|(a, b)| a - b).collect(),
        );
        errs.push((lp_norm(grid, &diff, 1.0), lp_norm(grid, &diff, f64::INFINITY)));
    }

    let mut out = Vec::new();
    for level in 0..levels {
        let (nx, h, dt_max) = meta[level];
        let (err_l1, err_linf) = match errs.get(level) {
            Some(&(a, b)) => (Some(a), Some(b)),
            None => (None, None),
        };
        let (order_l1, order_linf, warning) = if level + 1 < errs.len() {
            let (n1, ninf) = errs[level + 1];
            let o1 = (errs[level].0 / n1).log2();
            let oinf = (errs[level].1 / ninf).log2();
            (Some(o1), Some(oinf), n1 > errs[level].0)
        } else {
            (None, None, false)
        };
        out.push(ConvergenceLevel {
            level,
            nx,
            h,
            dt_max,
            err_l1,
            err_linf,
            order_l1,
            order_linf,
            warning,
        });
    }
    Ok(out)
}

/// Convergence table CSV.
pub fn convergence_csv(rows: &[ConvergenceLevel]) -> String {
    let mut s = String::from("schema,level,nx,h,dt_max,err_l1,err_linf,order_l1,order_linf,warn\n");
    let opt = |v: Option<f64>| v.map(|x| x.to_string()).unwrap_or_default();
    for r in rows {
        s.push_str(&format!(
            "{},{},{},{},{},{},{},{},{},{}\n",
            crate::output::CSV_SCHEMA_VERSION,
            r.level,
            r.nx,
            r.h,
            r.dt_max,
            opt(r.err_l1),
            opt(r.err_linf),
            opt(r.order_l1),
            opt(r.order_linf),
            r.warning
        ));
    }
    s
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::config::parse_config;

    fn short_base() -> ResolvedConfig {
        parse_config(
            "grid.nx = 32\ngrid.lx = 8\nsolver.t_end = 0.5\nsolver.output_every = 0.25\n",
        )
        .unwrap()
    }

    #[test]
    fn axis_parsing() {
        let axes = parse_axes("diffusivity.m=0.6,0.9; model.mu=1,2,3").unwrap();
        assert_eq!(axes.len(), 2);
        assert_eq!(axes[0].key, "diffusivity.m");
        assert_eq!(axes[0].values, vec![0.6, 0.9]);
        assert_eq!(sweep_size(&axes), 6);
        assert_eq!(row_values(&axes, 0), vec![0.6, 1.0]);
        assert_eq!(row_values(&axes, 2), vec![0.6, 3.0]);
        assert_eq!(row_values(&axes, 5), vec![0.9, 3.0]);
        assert!(parse_axes("").is_err());
        assert!(parse_axes("diffusivity.m").is_err());
        assert!(parse_axes("diffusivity.m=a,b").is_err());
    }

    #[test]
    fn single_point_sweep_matches_a_plain_run() {
        let base = short_base();
        let axes = parse_axes("diffusivity.m=2").unwrap();
        let rows =
            run_sweep(&base, &axes, &SweepOptions::default(), |_| Ok(())).unwrap();
        assert_eq!(rows.len(), 1);
        let row = &rows[0];
        assert_eq!(row.status, RowStatus::Bounded);

        let (grid, state) = base.build();
        let result = run(
            &grid,
            state,
            &base.diffusivity(),
            &base.sensitivities(),
            &base.solver(),
            &base.diagnostics(),
        );
        assert_eq!(row.final_linf_u, result.final_state.u.max());
        assert_eq!(row.sup_linf_u, result.sup_linf_u);
    }

    #[test]
    fn m_axis_rows_share_m_crit_and_supercritical_rows_are_bounded() {
        // m_crit depends on (mu, chi, xi, w0_sup, lambda0, N) only
        let base = short_base();
        let axes = parse_axes("diffusivity.m=0.6,0.9,1.2,1.5").unwrap();
        let rows = run_sweep(&base, &axes, &SweepOptions::default(), |_| Ok(())).unwrap();
        assert_eq!(rows.len(), 4);
        for row in &rows[1..] {
            assert_eq!(row.m_crit, rows[0].m_crit);
        }
        // every swept exponent clears the threshold here, so the theory
        // predicts (and the runs confirm) boundedness
        for row in &rows {
            assert!(row.values[0] > row.m_crit);
            assert_eq!(row.status, RowStatus::Bounded, "row {:?}", row);
        }
    }

    #[test]
    fn parallel_sweep_emits_rows_in_order() {
        let base = short_base();
        let axes = parse_axes("model.mu=0.25,0.5,0.75,1.0,1.25,1.5").unwrap();
        let opts = SweepOptions { parallelism: 3, ..Default::default() };
        let mut seen = Vec::new();
        let rows = run_sweep(&base, &axes, &opts, |r| {
            seen.push(r.index);
            Ok(())
        })
        .unwrap();
        assert_eq!(seen, vec![0, 1, 2, 3, 4, 5]);
        let serial = run_sweep(&base, &axes, &SweepOptions::default(), |_| Ok(())).unwrap();
        assert_eq!(rows, serial);
    }

    #[test]
    fn interrupted_sweep_resumes_to_the_same_table() {
        let base = short_base();
        let axes = parse_axes("model.mu=0.5,1.0,1.5").unwrap();
        let full = run_sweep(&base, &axes, &SweepOptions::default(), |_| Ok(())).unwrap();

        let first = run_sweep(
            &base,
            &axes,
            &SweepOptions { limit: Some(1), ..Default::default() },
            |_| Ok(()),
        )
        .unwrap();
        let rest = run_sweep(
            &base,
            &axes,
            &SweepOptions { skip_rows: 1, ..Default::default() },
            |_| Ok(()),
        )
        .unwrap();
        let mut stitched = first;
        stitched.extend(rest);
        assert_eq!(stitched, full);
    }

    #[test]
    fn run_aborts_become_row_statuses() {
        let mut base = short_base();
        base.blowup_u_max = 1.2; // below the initial bump peak
        let axes = parse_axes("diffusivity.m=1,2").unwrap();
        let rows = run_sweep(&base, &axes, &SweepOptions::default(), |_| Ok(())).unwrap();
        assert_eq!(rows.len(), 2);
        for row in &rows {
            assert_eq!(row.status, RowStatus::AbortedBlowup);
        }
    }

    #[test]
    fn sweep_horizon_override_applies_per_run() {
        let mut base = short_base();
        base.sweep_t_end = 0.25;
        let axes = parse_axes("diffusivity.m=2").unwrap();
        let rows = run_sweep(&base, &axes, &SweepOptions::default(), |_| Ok(())).unwrap();

        let mut direct = base.clone();
        direct.t_end = 0.25;
        let (grid, state) = direct.build();
        let result = run(
            &grid,
            state,
            &direct.diffusivity(),
            &direct.sensitivities(),
            &direct.solver(),
            &direct.diagnostics(),
        );
        assert_eq!(rows[0].final_linf_u, result.final_state.u.max());
    }

    #[test]
    fn csv_rows_match_the_header_arity() {
        let axes = parse_axes("diffusivity.m=1,2; model.mu=0.5").unwrap();
        let header = results_csv_header(&axes);
        assert_eq!(header.trim().split(',').count(), 2 + 2 + 4);
        let base = short_base();
        let rows = run_sweep(&base, &axes, &SweepOptions::default(), |_| Ok(())).unwrap();
        for row in &rows {
            assert_eq!(
                results_csv_row(row).trim().split(',').count(),
                header.trim().split(',').count()
            );
        }
    }

    #[test]
    fn restriction_of_identical_levels_is_exact() {
        let fine = Grid::line(32, 4.0);
        let f = CellField::from_fn(&fine, |x, _| (x * 0.7).sin());
        let same = restrict(&fine, &f, &fine);
        assert_eq!(same, f);
        // averaging a linear profile down one level is exact at centers
        let lin = CellField::from_fn(&fine, |x, _| 2.0 * x + 1.0);
        let coarse = Grid::line(16, 4.0);
        let down = restrict(&fine, &lin, &coarse);
        for (i, &v) in down.values().iter().enumerate() {
            assert!((v - (2.0 * coarse.center(0, i) + 1.0)).abs() < 1e-12);
        }
    }

    #[test]
    fn advection_dominated_study_shows_first_order() {
        // strong chemotaxis over weak diffusion with an initial signal
        // gradient: the donor-cell truncation dominates
        let base = parse_config(
            "grid.nx = 32\ngrid.lx = 8\nmodel.chi = 4\nmodel.xi = 0\nmodel.mu = 0\n\
             validation.mode = relaxed\ndiffusivity.m = 1\ndiffusivity.c_d = 0.05\n\
             solver.t_end = 0.5\nsolver.dt_max = 0.004\nsolver.output_every = 0.5\n\
             init.u0.kind = gaussian\ninit.u0.base = 0.2\ninit.u0.amp = 1\ninit.u0.width = 1\n\
             init.v0.kind = bump\ninit.v0.base = 1\ninit.v0.amp = 0.8\n",
        )
        .unwrap();
        let rows = convergence_study(&base, 3).unwrap();
        let order = rows[0].order_linf.unwrap();
        assert!((0.8..1.7).contains(&order), "upwind order {order}");
    }

    #[test]
    fn heat_limit_study_shows_second_order() {
        let base = parse_config(
            "grid.nx = 16\ngrid.lx = 4\nmodel.chi = 0\nmodel.xi = 0\nmodel.mu = 0\n\
             validation.mode = relaxed\ndiffusivity.m = 1\nsolver.t_end = 0.25\n\
             solver.dt_max = 0.002\nsolver.output_every = 0.25\n\
             init.u0.kind = gaussian\ninit.u0.base = 0.2\ninit.u0.amp = 1\ninit.u0.width = 0.5\n",
        )
        .unwrap();
        let rows = convergence_study(&base, 4).unwrap();
        let order = rows[0].order_linf.unwrap();
        assert!(order > 1.7, "heat-limit order {order}");
        assert!(!rows[0].warning);
    }
}
