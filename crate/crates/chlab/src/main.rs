//! Command-line laboratory for the chemotaxis-haptotaxis invasion model.

use chlab::config::{apply_lines, ConfigError, ResolvedConfig};
use chlab::harness::{
    convergence_csv, convergence_study, parse_axes, results_csv_header, results_csv_row,
    run_sweep, sweep_size, SweepOptions,
};
use chlab::output::emit_outputs;
use chlab::solver::{run, RunStatus};
use chlab::threshold::{kappa, m_critical};
use chlab::verify::{run_verify, verify_csv};
use std::fs;
use std::io::Write;
use std::path::PathBuf;
use std::process::ExitCode;

const USAGE: &str = "\
usage: chlab <command> [options]

commands:
  threshold   evaluate the boundedness constants for the configured set
  simulate    integrate the system and write run artifacts
  sweep       run the configured parameter sweep (resumable)
  converge    dyadic refinement study
  verify      run the canned invariant suite

options:
  --config <path>      config file (key = value dialect)
  --out <dir>          output directory (default: out)
  --deterministic      zero timestamps, serial execution
  --override key=val   override one config key (repeatable)

exit codes: 0 success, 2 config error, 3 solver fault, 4 hypothesis violation
";

struct Args {
    command: String,
    config_path: Option<PathBuf>,
    out_dir: PathBuf,
    out_dir_given: bool,
    deterministic: bool,
    overrides: Vec<(String, String)>,
}

fn parse_args(argv: &[String]) -> Result<Args, String> {
    if argv.is_empty() {
        return Err("missing command".into());
    }
    let mut args = Args {
        command: argv[0].clone(),
        config_path: None,
        out_dir: PathBuf::from("out"),
        out_dir_given: false,
        deterministic: false,
        overrides: Vec::new(),
    };
    let mut it = argv[1..].iter();
    while let Some(flag) = it.next() {
        match flag.as_str() {
            "--config" => {
                let v = it.next().ok_or("--config needs a path")?;
                args.config_path = Some(PathBuf::from(v));
            }
            "--out" => {
                let v = it.next().ok_or("--out needs a directory")?;
                args.out_dir = PathBuf::from(v);
                args.out_dir_given = true;
            }
            "--deterministic" => args.deterministic = true,
            "--override" => {
                let v = it.next().ok_or("--override needs key=value")?;
                let eq = v.find('=').ok_or("--override needs key=value")?;
                args.overrides.push((v[..eq].trim().to_string(), v[eq + 1..].trim().to_string()));
            }
            other => return Err(format!("unknown flag '{other}'")),
        }
    }
    Ok(args)
}

fn load_config(args: &Args) -> Result<ResolvedConfig, ConfigError> {
    let mut cfg = ResolvedConfig::default();
    if let Some(path) = &args.config_path {
        let text = fs::read_to_string(path).map_err(|e| ConfigError::Syntax {
            line: 0,
            msg: format!("cannot read {}: {e}", path.display()),
        })?;
        apply_lines(&mut cfg, &text)?;
    }
    for (k, v) in &args.overrides {
        cfg.set_key(k, v)?;
    }
    cfg.validate()?;
    Ok(cfg)
}

fn main() -> ExitCode {
    let argv: Vec<String> = std::env::args().skip(1).collect();
    let args = match parse_args(&argv) {
        Ok(a) => a,
        Err(msg) => {
            eprintln!("error: {msg}\n{USAGE}");
            return ExitCode::from(2);
        }
    };
    let code = match args.command.as_str() {
        "threshold" => cmd_threshold(&args),
        "simulate" => cmd_simulate(&args),
        "sweep" => cmd_sweep(&args),
        "converge" => cmd_converge(&args),
        "verify" => cmd_verify(&args),
        other => {
            eprintln!("error: unknown command '{other}'\n{USAGE}");
            2
        }
    };
    ExitCode::from(code as u8)
}

fn config_or_exit(args: &Args) -> Result<ResolvedConfig, i32> {
    load_config(args).map_err(|e| {
        eprintln!("{e}");
        e.exit_code()
    })
}

fn cmd_threshold(args: &Args) -> i32 {
    let cfg = match config_or_exit(args) {
        Ok(c) => c,
        Err(code) => return code,
    };
    let inputs = cfg.threshold_inputs();
    let mut report = match m_critical(&inputs, Some(cfg.m)) {
        Ok(r) => r,
        Err(e) => {
            eprintln!("E_VALUE: {e}");
            return 2;
        }
    };
    let grid = cfg.grid();
    if let Ok(k) = kappa(&grid, &cfg.w0.sample(&grid)) {
        report.kappa = Some(k);
    }
    print!("N = {}\n{}", inputs.n, report.text_block());
    if args.out_dir_given {
        if let Err(e) = fs::create_dir_all(&args.out_dir) {
            eprintln!("cannot create {}: {e}", args.out_dir.display());
            return 2;
        }
        let path = args.out_dir.join("threshold.jsonl");
        let line = format!("{}\n", report.json_line());
        let res = fs::OpenOptions::new()
            .create(true)
            .append(true)
            .open(&path)
            .and_then(|mut f| f.write_all(line.as_bytes()));
        if let Err(e) = res {
            eprintln!("cannot write {}: {e}", path.display());
            return 2;
        }
    }
    0
}

fn cmd_simulate(args: &Args) -> i32 {
    let cfg = match config_or_exit(args) {
        Ok(c) => c,
        Err(code) => return code,
    };
    let (grid, state) = cfg.build();
    let result = run(
        &grid,
        state,
        &cfg.diffusivity(),
        &cfg.sensitivities(),
        &cfg.solver(),
        &cfg.diagnostics(),
    );
    if let Err(e) = emit_outputs(&args.out_dir, &cfg, &grid, &result, args.deterministic) {
        eprintln!("cannot write outputs: {e}");
        return 2;
    }
    let last = result.records.last().expect("at least one record");
    println!(
        "status = {:?}\nsteps = {}\nt = {}\nlinf_u = {}\nl1_u = {}\nsup_linf_u = {}\nout = {}",
        result.status,
        result.steps,
        result.final_state.t,
        last.linf_u,
        last.l1_u,
        result.sup_linf_u,
        args.out_dir.display()
    );
    match result.status {
        RunStatus::Completed => 0,
        _ => 3,
    }
}

fn cmd_sweep(args: &Args) -> i32 {
    let cfg = match config_or_exit(args) {
        Ok(c) => c,
        Err(code) => return code,
    };
    let axes = match parse_axes(&cfg.sweep_axes) {
        Ok(a) => a,
        Err(e) => {
            eprintln!("{e}");
            return 2;
        }
    };
    if let Err(e) = fs::create_dir_all(&args.out_dir) {
        eprintln!("cannot create {}: {e}", args.out_dir.display());
        return 2;
    }
    let csv_path = args.out_dir.join("results.csv");
    let header = results_csv_header(&axes);
    // resume: count rows already present under a matching header
    let mut skip_rows = 0usize;
    match fs::read_to_string(&csv_path) {
        Ok(existing) => {
            let mut lines = existing.lines();
            match lines.next() {
                Some(h) if format!("{h}\n") == header => skip_rows = lines.count(),
                Some(_) => {
                    eprintln!("E_VALUE: results.csv exists with a different sweep layout");
                    return 2;
                }
                None => {
                    if let Err(e) = fs::write(&csv_path, &header) {
                        eprintln!("cannot write {}: {e}", csv_path.display());
                        return 2;
                    }
                }
            }
        }
        Err(_) => {
            if let Err(e) = fs::write(&csv_path, &header) {
                eprintln!("cannot write {}: {e}", csv_path.display());
                return 2;
            }
        }
    }
    let mut file = match fs::OpenOptions::new().append(true).open(&csv_path) {
        Ok(f) => f,
        Err(e) => {
            eprintln!("cannot open {}: {e}", csv_path.display());
            return 2;
        }
    };
    let opts = SweepOptions {
        skip_rows,
        limit: None,
        parallelism: if args.deterministic { 1 } else { cfg.sweep_parallelism },
        per_run_root: Some(args.out_dir.clone()),
        deterministic: args.deterministic,
    };
    match run_sweep(&cfg, &axes, &opts, |row| {
        file.write_all(results_csv_row(row).as_bytes())?;
        file.flush()
    }) {
        Ok(rows) => {
            println!(
                "sweep complete: {} rows ({} new) -> {}",
                sweep_size(&axes),
                rows.len(),
                csv_path.display()
            );
            0
        }
        Err(e) => {
            eprintln!("sweep failed: {e}");
            3
        }
    }
}

fn cmd_converge(args: &Args) -> i32 {
    let cfg = match config_or_exit(args) {
        Ok(c) => c,
        Err(code) => return code,
    };
    let rows = match convergence_study(&cfg, cfg.converge_levels) {
        Ok(r) => r,
        Err(e) => {
            eprintln!("convergence study failed: {e}");
            return 3;
        }
    };
    println!("level nx h dt_max err_l1 err_linf order_l1 order_linf warn");
    for r in &rows {
        let opt = |v: Option<f64>| v.map(|x| format!("{x:.3e}")).unwrap_or_else(|| "-".into());
        let opt_o = |v: Option<f64>| v.map(|x| format!("{x:.2}")).unwrap_or_else(|| "-".into());
        println!(
            "{} {} {:.5} {:.3e} {} {} {} {} {}",
            r.level,
            r.nx,
            r.h,
            r.dt_max,
            opt(r.err_l1),
            opt(r.err_linf),
            opt_o(r.order_l1),
            opt_o(r.order_linf),
            if r.warning { "warn" } else { "-" }
        );
    }
    if args.out_dir_given {
        if let Err(e) = fs::create_dir_all(&args.out_dir)
            .and_then(|_| fs::write(args.out_dir.join("convergence.csv"), convergence_csv(&rows)))
        {
            eprintln!("cannot write convergence.csv: {e}");
            return 2;
        }
    }
    0
}

fn cmd_verify(args: &Args) -> i32 {
    let reports = run_verify();
    let mut all_ok = true;
    for r in &reports {
        if r.passed {
            println!(
                "PASS {} ({} records, {} steps, mass defect {:.2e}, kappa defect {:.2e})",
                r.name, r.records, r.steps, r.max_mass_residual, r.max_kappa_violation
            );
        } else {
            all_ok = false;
            println!("FAIL {}: {}", r.name, r.failures.join("; "));
        }
    }
    println!(
        "verify: {}/{} configurations passed",
        reports.iter().filter(|r| r.passed).count(),
        reports.len()
    );
    if args.out_dir_given {
        if let Err(e) = fs::create_dir_all(&args.out_dir)
            .and_then(|_| fs::write(args.out_dir.join("verify.csv"), verify_csv(&reports)))
        {
            eprintln!("cannot write verify.csv: {e}");
            return 2;
        }
    }
    if all_ok {
        0
    } else {
        3
    }
}
