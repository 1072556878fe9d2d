//! Run artifacts: manifest, diagnostics CSV, snapshot files, and gnuplot
//! scripts. Every CSV starts with a schema-version column; nothing written
//! here contains wall-clock content in deterministic mode, so reruns are
//! byte-identical.

use crate::config::ResolvedConfig;
use crate::diagnostics::DiagnosticsRecord;
use crate::grid::Grid;
use crate::solver::{RunResult, RunStatus, Snapshot};
use std::fs;
use std::io;
use std::path::{Path, PathBuf};

pub const CSV_SCHEMA_VERSION: u32 = 1;

/// Diagnostics CSV; the header enumerates the configured norm columns.
pub fn diagnostics_csv(records: &[DiagnosticsRecord]) -> String {
    let mut out = String::new();
    out.push_str("schema,t,l1_u,l2_u,linf_u");
    if let Some(first) = records.first() {
        for (k, _) in &first.lk_u {
            out.push_str(&format!(",l{k}_u"));
        }
        out.push_str(",linf_grad_v");
        for (p, _) in &first.l2beta_grad_v {
            out.push_str(&format!(",l{p}_grad_v"));
        }
    } else {
        out.push_str(",linf_grad_v");
    }
    out.push_str(",linf_w,linf_grad_w,mass_residual,kappa_violation,w_exactness_err,flags\n");
    for r in records {
        out.push_str(&format!(
            "{},{},{},{},{}",
            CSV_SCHEMA_VERSION, r.t, r.l1_u, r.l2_u, r.linf_u
        ));
        for (_, v) in &r.lk_u {
            out.push_str(&format!(",{v}"));
        }
        out.push_str(&format!(",{}", r.linf_grad_v));
        for (_, v) in &r.l2beta_grad_v {
            out.push_str(&format!(",{v}"));
        }
        out.push_str(&format!(
            ",{},{},{},{},{},{}\n",
            r.linf_w, r.linf_grad_w, r.mass_residual, r.kappa_violation, r.w_exactness_err, r.flags
        ));
    }
    out
}

/// Plain-text snapshot: header with time, dims, and spacings, then one row
/// per cell with `index x [y] u v w`.
pub fn snapshot_text(grid: &Grid, snap: &Snapshot) -> String {
    let mut out = String::new();
    out.push_str(&format!("# t = {}\n", snap.t));
    out.push_str(&format!("# dim = {}\n", grid.dim()));
    if grid.dim() == 1 {
        out.push_str(&format!("# cells = {}\n", grid.n(0)));
        out.push_str(&format!("# spacing = {}\n", grid.spacing(0)));
        out.push_str("# columns: index x u v w\n");
    } else {
        out.push_str(&format!("# cells = {} {}\n", grid.n(0), grid.n(1)));
        out.push_str(&format!("# spacing = {} {}\n", grid.spacing(0), grid.spacing(1)));
        out.push_str("# columns: index x y u v w\n");
    }
    let nx = grid.n(0);
    for k in 0..grid.cells() {
        let i = k % nx;
        let j = k / nx;
        let x = grid.center(0, i);
        if grid.dim() == 1 {
            out.push_str(&format!(
                "{k} {x} {} {} {}\n",
                snap.u.values()[k],
                snap.v.values()[k],
                snap.w.values()[k]
            ));
        } else {
            let y = grid.center(1, j);
            out.push_str(&format!(
                "{k} {x} {y} {} {} {}\n",
                snap.u.values()[k],
                snap.v.values()[k],
                snap.w.values()[k]
            ));
        }
        // blank line between rows helps gnuplot's pm3d in 2D
        if grid.dim() == 2 && i == nx - 1 {
            out.push('\n');
        }
    }
    out
}

fn status_token(status: &RunStatus) -> &'static str {
    match status {
        RunStatus::Completed => "completed",
        RunStatus::AbortedBlowup { .. } => "aborted_blowup",
        RunStatus::AbortedDtUnderflow { .. } => "aborted_dt",
        RunStatus::Faulted(_) => "fault",
    }
}

/// Manifest text: tool/version/hash block followed by the resolved config.
/// The timestamp is zeroed in deterministic mode and excluded from the hash
/// either way.
pub fn manifest_text(cfg: &ResolvedConfig, files: &[String], deterministic: bool) -> String {
    let created = if deterministic {
        0
    } else {
        std::time::SystemTime::now()
            .duration_since(std::time::UNIX_EPOCH)
            .map(|d| d.as_secs())
            .unwrap_or(0)
    };
    let mut out = String::new();
    out.push_str("manifest.version = 1\n");
    out.push_str(&format!("manifest.tool_version = {}\n", env!("CARGO_PKG_VERSION")));
    out.push_str(&format!("manifest.config_hash = {}\n", cfg.hash_hex()));
    out.push_str(&format!("manifest.deterministic = {deterministic}\n"));
    out.push_str(&format!("manifest.created_unix = {created}\n"));
    out.push_str(&format!("manifest.files = {}\n", files.join(",")));
    out.push_str("# resolved configuration\n");
    out.push_str(&cfg.serialize());
    out
}

/// Norm time-series script; column positions depend on the configured
/// exponents, so they are derived from the first record.
fn timeseries_plot_script(records: &[DiagnosticsRecord]) -> String {
    // fixed layout: schema, t, l1_u, l2_u, linf_u, lk..., linf_grad_v, ...
    let mut cols: Vec<(usize, String)> =
        vec![(3, "l1_u".into()), (4, "l2_u".into()), (5, "linf_u".into())];
    let mut next = 6;
    if let Some(first) = records.first() {
        for (k, _) in &first.lk_u {
            cols.push((next, format!("l{k}_u")));
            next += 1;
        }
    }
    cols.push((next, "linf_grad_v".into()));
    let plots: Vec<String> = cols
        .iter()
        .map(|(c, name)| format!("'diagnostics.csv' using 2:{c} with lines title '{name}'"))
        .collect();
    format!(
        "# gnuplot script: norm time series from diagnostics.csv\n\
         set datafile separator ','\n\
         set xlabel 't'\n\
         set logscale y\n\
         plot {}\n\
         pause -1\n",
        plots.join(", \\\n     ")
    )
}

fn profile_plot_script(grid: &Grid, snap_name: &str) -> String {
    if grid.dim() == 1 {
        format!(
            "# gnuplot script: final profiles\n\
             set xlabel 'x'\n\
             plot '{snap_name}' using 2:3 with lines title 'u', \\\n\
             \x20    '{snap_name}' using 2:4 with lines title 'v', \\\n\
             \x20    '{snap_name}' using 2:5 with lines title 'w'\n\
             pause -1\n"
        )
    } else {
        format!(
            "# gnuplot script: final cell-density heat map\n\
             set view map\n\
             set xlabel 'x'\n\
             set ylabel 'y'\n\
             splot '{snap_name}' using 2:3:4 with pm3d title 'u'\n\
             pause -1\n"
        )
    }
}

/// Write manifest, diagnostics CSV, snapshots, and plot scripts for one run.
/// Returns the emitted file names (as listed in the manifest).
pub fn emit_outputs(
    out_dir: &Path,
    cfg: &ResolvedConfig,
    grid: &Grid,
    result: &RunResult,
    deterministic: bool,
) -> io::Result<Vec<String>> {
    fs::create_dir_all(out_dir)?;
    let runid: String = cfg.hash_hex().chars().take(8).collect();
    let mut files: Vec<String> = Vec::new();

    let diag_name = "diagnostics.csv".to_string();
    fs::write(out_dir.join(&diag_name), diagnostics_csv(&result.records))?;
    files.push(diag_name);

    let mut last_snap_name = String::new();
    for snap in &result.snapshots {
        let name = format!("snap_{runid}_{:08}.dat", snap.step);
        fs::write(out_dir.join(&name), snapshot_text(grid, snap))?;
        last_snap_name = name.clone();
        files.push(name);
    }

    let plots = out_dir.join("plots");
    fs::create_dir_all(&plots)?;
    fs::write(plots.join("timeseries.gp"), timeseries_plot_script(&result.records))?;
    files.push("plots/timeseries.gp".into());
    fs::write(plots.join("profile.gp"), profile_plot_script(grid, &last_snap_name))?;
    files.push("plots/profile.gp".into());

    let status_name = "status.txt".to_string();
    fs::write(
        out_dir.join(&status_name),
        format!("status = {}\nsteps = {}\nsup_linf_u = {}\n", status_token(&result.status), result.steps, result.sup_linf_u),
    )?;
    files.push(status_name);

    let mut listed = files.clone();
    listed.push("manifest.txt".into());
    fs::write(out_dir.join("manifest.txt"), manifest_text(cfg, &listed, deterministic))?;
    Ok(listed)
}

/// Path of the manifest a run directory must contain exactly once.
pub fn manifest_path(out_dir: &Path) -> PathBuf {
    out_dir.join("manifest.txt")
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::config::parse_config;
    use crate::diagnostics::DiagnosticsConfig;
    use crate::solver::run;

    fn small_run() -> (ResolvedConfig, Grid, RunResult) {
        let cfg = parse_config(
            "grid.nx = 16\ngrid.lx = 4\nsolver.t_end = 0.5\nsolver.output_every = 0.25\n",
        )
        .unwrap();
        let (grid, state) = cfg.build();
        let result = run(
            &grid,
            state,
            &cfg.diffusivity(),
            &cfg.sensitivities(),
            &cfg.solver(),
            &DiagnosticsConfig::default(),
        );
        (cfg, grid, result)
    }

    #[test]
    fn csv_starts_with_the_schema_column() {
        let (_, _, result) = small_run();
        let csv = diagnostics_csv(&result.records);
        let mut lines = csv.lines();
        assert!(lines.next().unwrap().starts_with("schema,t,l1_u,l2_u,linf_u,l4_u,l8_u"));
        for line in lines {
            assert!(line.starts_with("1,"), "row missing schema version: {line}");
        }
    }

    #[test]
    fn snapshot_header_carries_grid_metadata() {
        let (_, grid, result) = small_run();
        let text = snapshot_text(&grid, &result.snapshots[0]);
        assert!(text.contains("# dim = 1"));
        assert!(text.contains("# cells = 16"));
        assert!(text.contains("# spacing = 0.25"));
        let rows: Vec<&str> = text.lines().filter(|l| !l.starts_with('#')).collect();
        assert_eq!(rows.len(), 16);
        assert!(rows[0].starts_with("0 0.125 "));
    }

    #[test]
    fn zero_step_run_emits_manifest_csv_and_initial_snapshot() {
        let cfg = parse_config("solver.t_end = 0\ngrid.nx = 8\n").unwrap();
        let (grid, state) = cfg.build();
        let result = run(
            &grid,
            state,
            &cfg.diffusivity(),
            &cfg.sensitivities(),
            &cfg.solver(),
            &DiagnosticsConfig::default(),
        );
        let dir = std::env::temp_dir().join(format!("chlab_out_test_{}", std::process::id()));
        let _ = fs::remove_dir_all(&dir);
        let files = emit_outputs(&dir, &cfg, &grid, &result, true).unwrap();
        assert!(manifest_path(&dir).exists());
        let csv = fs::read_to_string(dir.join("diagnostics.csv")).unwrap();
        assert_eq!(csv.lines().count(), 2); // header + single record
        let snaps: Vec<_> = files.iter().filter(|f| f.starts_with("snap_")).collect();
        assert_eq!(snaps.len(), 1);
        let manifest = fs::read_to_string(manifest_path(&dir)).unwrap();
        for f in &files {
            assert!(manifest.contains(f.as_str()), "manifest misses {f}");
        }
        assert!(manifest.contains("manifest.created_unix = 0"));
        fs::remove_dir_all(&dir).unwrap();
    }

    #[test]
    fn deterministic_outputs_are_byte_identical() {
        let (cfg, grid, result) = small_run();
        let dir1 = std::env::temp_dir().join(format!("chlab_det_a_{}", std::process::id()));
        let dir2 = std::env::temp_dir().join(format!("chlab_det_b_{}", std::process::id()));
        for d in [&dir1, &dir2] {
            let _ = fs::remove_dir_all(d);
        }
        emit_outputs(&dir1, &cfg, &grid, &result, true).unwrap();
        // fresh run of the same config
        let (grid2, state2) = cfg.build();
        let result2 = run(
            &grid2,
            state2,
            &cfg.diffusivity(),
            &cfg.sensitivities(),
            &cfg.solver(),
            &DiagnosticsConfig::default(),
        );
        emit_outputs(&dir2, &cfg, &grid2, &result2, true).unwrap();
        for name in ["diagnostics.csv", "manifest.txt"] {
            let a = fs::read(dir1.join(name)).unwrap();
            let b = fs::read(dir2.join(name)).unwrap();
            assert_eq!(a, b, "{name} differs between reruns");
        }
        fs::remove_dir_all(&dir1).unwrap();
        fs::remove_dir_all(&dir2).unwrap();
    }
}
