//! Configuration dialect, schema, and validation.
//!
//! Configs are flat `key = value` text with dotted keys; `[section]` headers
//! prefix the keys that follow them, `#` starts a comment. Unknown keys are
//! errors. Serialization emits the fully resolved set (all defaults
//! materialized) in a fixed order, and `parse(serialize(c)) == c`. The
//! config hash is taken over the sorted pairs, so it is stable under key
//! reordering in the source file.
//!
//! Validation enforces the model's standing assumptions on top of plain
//! range checks: `u0 >= 0` and not identically zero, `v0 >= 0`, `w0 > 0`
//! everywhere, `chi > 0`, `xi > 0`, `m > 0`. Studies that need to switch
//! couplings off (heat-equation limits, chemotaxis-only runs) set
//! `validation.mode = relaxed`, which lowers the strict positivity of
//! `chi` and `xi` to nonnegativity; everything else still applies.
//!
//! Default table (also the output of `serialize` on a default config):
//!
//! | key | default | meaning |
//! |-----|---------|---------|
//! | grid.dim | 1 | space dimension (1 or 2) |
//! | grid.nx, grid.ny | 128, 128 | cells per axis (ny used in 2D) |
//! | grid.lx, grid.ly | 32, 32 | domain extent per axis |
//! | model.chi, model.xi | 1, 1 | chemotactic / haptotactic sensitivity |
//! | model.mu | 0.5 | logistic rate |
//! | model.lambda0 | 1 | maximal-regularity constant |
//! | diffusivity.law | power | power or power_regularized |
//! | diffusivity.m | 2 | diffusion exponent |
//! | diffusivity.c_d | 1 | diffusivity coefficient |
//! | diffusivity.epsilon | 0 | regularization (power_regularized) |
//! | init.u0.kind/base/amp/width | bump 1 0.5 4 | initial cell density |
//! | init.v0.kind/base/amp/width | constant 0 0 4 | initial signal |
//! | init.w0.kind/base/amp/width | constant 1 0 4 | initial tissue |
//! | solver.t_end | 10 | horizon |
//! | solver.cfl_safety | 0.4 | step-limit safety factor |
//! | solver.dt_max, solver.dt_min | 0.05, 1e-9 | step clamps |
//! | solver.output_every | 0.5 | diagnostics cadence |
//! | solver.snapshot_every | 0 | snapshot cadence (0: ends only) |
//! | solver.blowup_u_max | 1e6 | abort threshold |
//! | solver.freeze_v | false | hold the signal fixed |
//! | diagnostics.k_exponents | 4,8 | extra L^k norms of u |
//! | diagnostics.beta_exponents | 1,2 | L^(2 beta) norms of grad v |
//! | threshold.n | 0 | report dimension (0: grid.dim) |
//! | validation.mode | strict | strict or relaxed |
//! | run.seed | 0 | recorded in the manifest |
//! | sweep.axes | (empty) | e.g. `diffusivity.m=0.6,0.9; model.mu=1,2` |
//! | sweep.t_end | 0 | per-run horizon (0: solver.t_end) |
//! | sweep.bound_factor | 10 | boundedness envelope factor |
//! | sweep.parallelism | 0 | worker count (0: available cores) |
//! | converge.levels | 4 | refinement levels |

use crate::diagnostics::DiagnosticsConfig;
use crate::grid::{CellField, Grid};
use crate::physics::{DiffusivityLaw, DiffusivitySpec, Sensitivities};
use crate::solver::{SolverConfig, State};
use crate::threshold::ThresholdInputs;
use std::fmt;

const SECTIONS: [&str; 11] = [
    "grid",
    "model",
    "diffusivity",
    "init",
    "solver",
    "diagnostics",
    "threshold",
    "validation",
    "run",
    "sweep",
    "converge",
];

#[derive(Debug, Clone, PartialEq)]
pub enum ConfigError {
    Syntax { line: usize, msg: String },
    UnknownKey { key: String, line: usize },
    Value { key: String, msg: String },
    Hypothesis { name: String },
}

impl fmt::Display for ConfigError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            ConfigError::Syntax { line, msg } => write!(f, "E_SYNTAX (line {line}): {msg}"),
            ConfigError::UnknownKey { key, line } => {
                write!(f, "E_UNKNOWN_KEY (line {line}): {key}")
            }
            ConfigError::Value { key, msg } => write!(f, "E_VALUE: {key}: {msg}"),
            ConfigError::Hypothesis { name } => {
                write!(f, "E_HYPOTHESIS: standing assumption violated: {name}")
            }
        }
    }
}

impl std::error::Error for ConfigError {}

impl ConfigError {
    /// CLI exit code: hypothesis violations are distinguished from plain
    /// config errors.
    pub fn exit_code(&self) -> i32 {
        match self {
            ConfigError::Hypothesis { .. } => 4,
            _ => 2,
        }
    }
}

/// Shape of one initial field.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FieldInit {
    pub kind: InitKind,
    pub base: f64,
    pub amp: f64,
    pub width: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum InitKind {
    Constant,
    /// `base + amp cos(pi x / Lx) [cos(pi y / Ly)]`; Neumann-compatible.
    Bump,
    /// `base + amp exp(-r^2 / (2 width^2))` centered in the box.
    Gaussian,
}

impl FieldInit {
    pub fn sample(&self, grid: &Grid) -> CellField {
        let pi = std::f64::consts::PI;
        CellField::from_fn(grid, |x, y| match self.kind {
            InitKind::Constant => self.base,
            InitKind::Bump => {
                let mut v = (pi * x / grid.length(0)).cos();
                if grid.dim() == 2 {
                    v *= (pi * y / grid.length(1)).cos();
                }
                self.base + self.amp * v
            }
            InitKind::Gaussian => {
                let mut r2 = (x - 0.5 * grid.length(0)).powi(2);
                if grid.dim() == 2 {
                    r2 += (y - 0.5 * grid.length(1)).powi(2);
                }
                self.base + self.amp * (-r2 / (2.0 * self.width * self.width)).exp()
            }
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ValidationMode {
    Strict,
    Relaxed,
}

/// Fully resolved configuration; every field has a default.
#[derive(Debug, Clone, PartialEq)]
pub struct ResolvedConfig {
    pub dim: u32,
    pub nx: usize,
    pub ny: usize,
    pub lx: f64,
    pub ly: f64,
    pub chi: f64,
    pub xi: f64,
    pub mu: f64,
    pub lambda0: f64,
    pub law: DiffusivityLaw,
    pub m: f64,
    pub c_d: f64,
    pub epsilon: f64,
    pub u0: FieldInit,
    pub v0: FieldInit,
    pub w0: FieldInit,
    pub t_end: f64,
    pub cfl_safety: f64,
    pub dt_max: f64,
    pub dt_min: f64,
    pub output_every: f64,
    pub snapshot_every: f64,
    pub blowup_u_max: f64,
    pub freeze_v: bool,
    pub k_exponents: Vec<f64>,
    pub beta_exponents: Vec<f64>,
    pub threshold_n: u32,
    pub validation: ValidationMode,
    pub seed: u64,
    pub sweep_axes: String,
    pub sweep_t_end: f64,
    pub sweep_bound_factor: f64,
    pub sweep_parallelism: usize,
    pub converge_levels: usize,
}

impl Default for ResolvedConfig {
    fn default() -> ResolvedConfig {
        ResolvedConfig {
            dim: 1,
            nx: 128,
            ny: 128,
            lx: 32.0,
            ly: 32.0,
            chi: 1.0,
            xi: 1.0,
            mu: 0.5,
            lambda0: 1.0,
            law: DiffusivityLaw::Power,
            m: 2.0,
            c_d: 1.0,
            epsilon: 0.0,
            u0: FieldInit { kind: InitKind::Bump, base: 1.0, amp: 0.5, width: 4.0 },
            v0: FieldInit { kind: InitKind::Constant, base: 0.0, amp: 0.0, width: 4.0 },
            w0: FieldInit { kind: InitKind::Constant, base: 1.0, amp: 0.0, width: 4.0 },
            t_end: 10.0,
            cfl_safety: 0.4,
            dt_max: 0.05,
            dt_min: 1e-9,
            output_every: 0.5,
            snapshot_every: 0.0,
            blowup_u_max: 1e6,
            freeze_v: false,
            k_exponents: vec![4.0, 8.0],
            beta_exponents: vec![1.0, 2.0],
            threshold_n: 0,
            validation: ValidationMode::Strict,
            seed: 0,
            sweep_axes: String::new(),
            sweep_t_end: 0.0,
            sweep_bound_factor: 10.0,
            sweep_parallelism: 0,
            converge_levels: 4,
        }
    }
}

/// Parse the dialect, materialize defaults, validate ranges and the
/// standing assumptions.
pub fn parse_config(text: &str) -> Result<ResolvedConfig, ConfigError> {
    let mut cfg = ResolvedConfig::default();
    apply_lines(&mut cfg, text)?;
    cfg.validate()?;
    Ok(cfg)
}

/// Apply dialect lines without the final validation (overrides may follow).
pub fn apply_lines(cfg: &mut ResolvedConfig, text: &str) -> Result<(), ConfigError> {
    let mut section = String::new();
    for (lineno, raw) in text.lines().enumerate() {
        let line = raw.trim();
        let lineno = lineno + 1;
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        if let Some(rest) = line.strip_prefix('[') {
            let name = rest.strip_suffix(']').ok_or_else(|| ConfigError::Syntax {
                line: lineno,
                msg: "unterminated section header".into(),
            })?;
            let name = name.trim();
            if name.is_empty() || !name.chars().all(|c| c.is_ascii_alphanumeric() || c == '_') {
                return Err(ConfigError::Syntax {
                    line: lineno,
                    msg: format!("bad section name '{name}'"),
                });
            }
            section = name.to_string();
            continue;
        }
        let eq = line.find('=').ok_or_else(|| ConfigError::Syntax {
            line: lineno,
            msg: "expected 'key = value'".into(),
        })?;
        let key_part = line[..eq].trim();
        let value = line[eq + 1..].trim();
        if key_part.is_empty() {
            return Err(ConfigError::Syntax { line: lineno, msg: "empty key".into() });
        }
        // inside a section, keys are prefixed unless already fully
        // qualified by a top-level section name
        let first = key_part.split('.').next().unwrap_or("");
        let key = if section.is_empty() || SECTIONS.contains(&first) {
            key_part.to_string()
        } else {
            format!("{section}.{key_part}")
        };
        cfg.set_key(&key, value).map_err(|e| match e {
            ConfigError::UnknownKey { key, .. } => ConfigError::UnknownKey { key, line: lineno },
            other => other,
        })?;
    }
    Ok(())
}

fn parse_f64(key: &str, v: &str) -> Result<f64, ConfigError> {
    v.parse::<f64>().map_err(|_| ConfigError::Value {
        key: key.into(),
        msg: format!("expected a number, got '{v}'"),
    })
}

fn parse_usize(key: &str, v: &str) -> Result<usize, ConfigError> {
    v.parse::<usize>().map_err(|_| ConfigError::Value {
        key: key.into(),
        msg: format!("expected a nonnegative integer, got '{v}'"),
    })
}

fn parse_bool(key: &str, v: &str) -> Result<bool, ConfigError> {
    match v {
        "true" => Ok(true),
        "false" => Ok(false),
        _ => Err(ConfigError::Value {
            key: key.into(),
            msg: format!("expected true or false, got '{v}'"),
        }),
    }
}

fn parse_list(key: &str, v: &str) -> Result<Vec<f64>, ConfigError> {
    if v.is_empty() {
        return Ok(Vec::new());
    }
    v.split(',').map(|p| parse_f64(key, p.trim())).collect()
}

fn fmt_list(vals: &[f64]) -> String {
    vals.iter().map(|v| v.to_string()).collect::<Vec<_>>().join(",")
}

impl ResolvedConfig {
    /// Set one schema key from its text form. Unknown keys are errors.
    pub fn set_key(&mut self, key: &str, value: &str) -> Result<(), ConfigError> {
        match key {
            "grid.dim" => {
                self.dim = parse_usize(key, value)? as u32;
            }
            "grid.nx" => self.nx = parse_usize(key, value)?,
            "grid.ny" => self.ny = parse_usize(key, value)?,
            "grid.lx" => self.lx = parse_f64(key, value)?,
            "grid.ly" => self.ly = parse_f64(key, value)?,
            "model.chi" => self.chi = parse_f64(key, value)?,
            "model.xi" => self.xi = parse_f64(key, value)?,
            "model.mu" => self.mu = parse_f64(key, value)?,
            "model.lambda0" => self.lambda0 = parse_f64(key, value)?,
            "diffusivity.law" => {
                self.law = match value {
                    "power" => DiffusivityLaw::Power,
                    "power_regularized" => DiffusivityLaw::PowerRegularized,
                    _ => {
                        return Err(ConfigError::Value {
                            key: key.into(),
                            msg: format!("expected power or power_regularized, got '{value}'"),
                        })
                    }
                }
            }
            "diffusivity.m" => self.m = parse_f64(key, value)?,
            "diffusivity.c_d" => self.c_d = parse_f64(key, value)?,
            "diffusivity.epsilon" => self.epsilon = parse_f64(key, value)?,
            _ if key.starts_with("init.") => return self.set_init_key(key, value),
            "solver.t_end" => self.t_end = parse_f64(key, value)?,
            "solver.cfl_safety" => self.cfl_safety = parse_f64(key, value)?,
            "solver.dt_max" => self.dt_max = parse_f64(key, value)?,
            "solver.dt_min" => self.dt_min = parse_f64(key, value)?,
            "solver.output_every" => self.output_every = parse_f64(key, value)?,
            "solver.snapshot_every" => self.snapshot_every = parse_f64(key, value)?,
            "solver.blowup_u_max" => self.blowup_u_max = parse_f64(key, value)?,
            "solver.freeze_v" => self.freeze_v = parse_bool(key, value)?,
            "diagnostics.k_exponents" => self.k_exponents = parse_list(key, value)?,
            "diagnostics.beta_exponents" => self.beta_exponents = parse_list(key, value)?,
            "threshold.n" => self.threshold_n = parse_usize(key, value)? as u32,
            "validation.mode" => {
                self.validation = match value {
                    "strict" => ValidationMode::Strict,
                    "relaxed" => ValidationMode::Relaxed,
                    _ => {
                        return Err(ConfigError::Value {
                            key: key.into(),
                            msg: format!("expected strict or relaxed, got '{value}'"),
                        })
                    }
                }
            }
            "run.seed" => {
                self.seed = value.parse::<u64>().map_err(|_| ConfigError::Value {
                    key: key.into(),
                    msg: format!("expected a nonnegative integer, got '{value}'"),
                })?
            }
            "sweep.axes" => self.sweep_axes = value.to_string(),
            "sweep.t_end" => self.sweep_t_end = parse_f64(key, value)?,
            "sweep.bound_factor" => self.sweep_bound_factor = parse_f64(key, value)?,
            "sweep.parallelism" => self.sweep_parallelism = parse_usize(key, value)?,
            "converge.levels" => self.converge_levels = parse_usize(key, value)?,
            _ => return Err(ConfigError::UnknownKey { key: key.into(), line: 0 }),
        }
        Ok(())
    }

    fn set_init_key(&mut self, key: &str, value: &str) -> Result<(), ConfigError> {
        let mut parts = key.splitn(3, '.');
        let _ = parts.next(); // "init"
        let field = parts.next().unwrap_or("");
        let attr = parts.next().unwrap_or("");
        let init = match field {
            "u0" => &mut self.u0,
            "v0" => &mut self.v0,
            "w0" => &mut self.w0,
            _ => return Err(ConfigError::UnknownKey { key: key.into(), line: 0 }),
        };
        match attr {
            "kind" => {
                init.kind = match value {
                    "constant" => InitKind::Constant,
                    "bump" => InitKind::Bump,
                    "gaussian" => InitKind::Gaussian,
                    _ => {
                        return Err(ConfigError::Value {
                            key: key.into(),
                            msg: format!("expected constant, bump, or gaussian, got '{value}'"),
                        })
                    }
                }
            }
            "base" => init.base = parse_f64(key, value)?,
            "amp" => init.amp = parse_f64(key, value)?,
            "width" => init.width = parse_f64(key, value)?,
            _ => return Err(ConfigError::UnknownKey { key: key.into(), line: 0 }),
        }
        Ok(())
    }

    /// Canonical `(key, value)` pairs in the documented order.
    pub fn to_pairs(&self) -> Vec<(String, String)> {
        let kind = |k: InitKind| match k {
            InitKind::Constant => "constant",
            InitKind::Bump => "bump",
            InitKind::Gaussian => "gaussian",
        };
        let mut pairs: Vec<(String, String)> = Vec::new();
        let mut push = |k: &str, v: String| pairs.push((k.to_string(), v));
        push("grid.dim", self.dim.to_string());
        push("grid.nx", self.nx.to_string());
        push("grid.ny", self.ny.to_string());
        push("grid.lx", self.lx.to_string());
        push("grid.ly", self.ly.to_string());
        push("model.chi", self.chi.to_string());
        push("model.xi", self.xi.to_string());
        push("model.mu", self.mu.to_string());
        push("model.lambda0", self.lambda0.to_string());
        push(
            "diffusivity.law",
            match self.law {
                DiffusivityLaw::Power => "power".into(),
                DiffusivityLaw::PowerRegularized => "power_regularized".into(),
            },
        );
        push("diffusivity.m", self.m.to_string());
        push("diffusivity.c_d", self.c_d.to_string());
        push("diffusivity.epsilon", self.epsilon.to_string());
        for (name, init) in [("u0", &self.u0), ("v0", &self.v0), ("w0", &self.w0)] {
            push(&format!("init.{name}.kind"), kind(init.kind).to_string());
            push(&format!("init.{name}.base"), init.base.to_string());
            push(&format!("init.{name}.amp"), init.amp.to_string());
            push(&format!("init.{name}.width"), init.width.to_string());
        }
        push("solver.t_end", self.t_end.to_string());
        push("solver.cfl_safety", self.cfl_safety.to_string());
        push("solver.dt_max", self.dt_max.to_string());
        push("solver.dt_min", self.dt_min.to_string());
        push("solver.output_every", self.output_every.to_string());
        push("solver.snapshot_every", self.snapshot_every.to_string());
        push("solver.blowup_u_max", self.blowup_u_max.to_string());
        push("solver.freeze_v", self.freeze_v.to_string());
        push("diagnostics.k_exponents", fmt_list(&self.k_exponents));
        push("diagnostics.beta_exponents", fmt_list(&self.beta_exponents));
        push("threshold.n", self.threshold_n.to_string());
        push(
            "validation.mode",
            match self.validation {
                ValidationMode::Strict => "strict".into(),
                ValidationMode::Relaxed => "relaxed".into(),
            },
        );
        push("run.seed", self.seed.to_string());
        push("sweep.axes", self.sweep_axes.clone());
        push("sweep.t_end", self.sweep_t_end.to_string());
        push("sweep.bound_factor", self.sweep_bound_factor.to_string());
        push("sweep.parallelism", self.sweep_parallelism.to_string());
        push("converge.levels", self.converge_levels.to_string());
        pairs
    }

    /// Canonical text form; `parse_config(serialize(c)) == c`.
    pub fn serialize(&self) -> String {
        let mut out = String::new();
        for (k, v) in self.to_pairs() {
            out.push_str(&format!("{k} = {v}\n"));
        }
        out
    }

    /// FNV-1a over the sorted pairs; stable under key reordering of the
    /// source text.
    pub fn hash_hex(&self) -> String {
        let mut pairs = self.to_pairs();
        pairs.sort();
        let mut h: u64 = 0xcbf29ce484222325;
        for (k, v) in pairs {
            for b in k.bytes().chain(*b"=").chain(v.bytes()).chain(*b"\n") {
                h ^= b as u64;
                h = h.wrapping_mul(0x100000001b3);
            }
        }
        format!("{h:016x}")
    }

    /// Range checks, then the standing assumptions on the sampled initial
    /// data.
    pub fn validate(&self) -> Result<(), ConfigError> {
        let val = |key: &str, msg: &str| ConfigError::Value { key: key.into(), msg: msg.into() };
        if !(self.dim == 1 || self.dim == 2) {
            return Err(val("grid.dim", "must be 1 or 2"));
        }
        if self.nx == 0 || (self.dim == 2 && self.ny == 0) {
            return Err(val("grid.nx", "needs at least one cell per axis"));
        }
        if !(self.lx > 0.0) || !self.lx.is_finite() {
            return Err(val("grid.lx", "domain extents must be positive and finite"));
        }
        if self.dim == 2 && (!(self.ly > 0.0) || !self.ly.is_finite()) {
            return Err(val("grid.ly", "domain extents must be positive and finite"));
        }
        for (name, init) in [("u0", &self.u0), ("v0", &self.v0), ("w0", &self.w0)] {
            if !init.base.is_finite() || !init.amp.is_finite() || !init.width.is_finite() {
                return Err(val(&format!("init.{name}"), "parameters must be finite"));
            }
            if init.kind == InitKind::Gaussian && !(init.width > 0.0) {
                return Err(val(&format!("init.{name}.width"), "gaussian width must be positive"));
            }
        }
        if !(self.mu >= 0.0) || !self.mu.is_finite() {
            return Err(val("model.mu", "must be nonnegative and finite"));
        }
        if !(self.lambda0 > 0.0) || !self.lambda0.is_finite() {
            return Err(val("model.lambda0", "must be positive and finite"));
        }
        if !(self.c_d > 0.0) || !self.c_d.is_finite() {
            return Err(val("diffusivity.c_d", "must be positive and finite"));
        }
        if !(self.epsilon >= 0.0) || !self.epsilon.is_finite() {
            return Err(val("diffusivity.epsilon", "must be nonnegative and finite"));
        }
        if !(self.cfl_safety > 0.0 && self.cfl_safety <= 1.0) {
            return Err(val("solver.cfl_safety", "must lie in (0, 1]"));
        }
        if !(self.t_end >= 0.0) || !self.t_end.is_finite() {
            return Err(val("solver.t_end", "must be nonnegative and finite"));
        }
        if !(self.dt_min > 0.0) || !(self.dt_max > self.dt_min) {
            return Err(val("solver.dt_min", "need 0 < dt_min < dt_max"));
        }
        if !(self.output_every > 0.0) {
            return Err(val("solver.output_every", "must be positive"));
        }
        if !(self.snapshot_every >= 0.0) {
            return Err(val("solver.snapshot_every", "must be nonnegative"));
        }
        if !(self.blowup_u_max > 0.0) {
            return Err(val("solver.blowup_u_max", "must be positive"));
        }
        if self.k_exponents.iter().any(|&k| !(k >= 1.0) || !k.is_finite()) {
            return Err(val("diagnostics.k_exponents", "every k must be >= 1"));
        }
        if self.beta_exponents.iter().any(|&b| !(b >= 0.5) || !b.is_finite()) {
            return Err(val("diagnostics.beta_exponents", "every beta must be >= 0.5"));
        }
        if !(self.sweep_bound_factor > 0.0) {
            return Err(val("sweep.bound_factor", "must be positive"));
        }
        if !(self.sweep_t_end >= 0.0) {
            return Err(val("sweep.t_end", "must be nonnegative"));
        }
        if self.converge_levels < 3 {
            return Err(val("converge.levels", "needs at least 3 levels"));
        }

        // standing assumptions
        let strict = self.validation == ValidationMode::Strict;
        if strict && !(self.chi > 0.0) {
            return Err(ConfigError::Hypothesis { name: "chi > 0".into() });
        }
        if strict && !(self.xi > 0.0) {
            return Err(ConfigError::Hypothesis { name: "xi > 0".into() });
        }
        if !(self.chi >= 0.0) || !self.chi.is_finite() {
            return Err(val("model.chi", "must be nonnegative and finite"));
        }
        if !(self.xi >= 0.0) || !self.xi.is_finite() {
            return Err(val("model.xi", "must be nonnegative and finite"));
        }
        if !(self.m > 0.0) || !self.m.is_finite() {
            return Err(ConfigError::Hypothesis { name: "m > 0".into() });
        }
        let grid = self.grid();
        let u0 = self.u0.sample(&grid);
        if u0.min() < 0.0 {
            return Err(ConfigError::Hypothesis { name: "u0 >= 0 in the domain".into() });
        }
        if u0.max() <= 0.0 {
            return Err(ConfigError::Hypothesis { name: "u0 not identically zero".into() });
        }
        if self.v0.sample(&grid).min() < 0.0 {
            return Err(ConfigError::Hypothesis { name: "v0 >= 0 in the domain".into() });
        }
        if self.w0.sample(&grid).min() <= 0.0 {
            return Err(ConfigError::Hypothesis { name: "w0 > 0 in the closed domain".into() });
        }
        Ok(())
    }

    pub fn grid(&self) -> Grid {
        if self.dim == 1 {
            Grid::line(self.nx, self.lx)
        } else {
            Grid::rect(self.nx, self.ny, self.lx, self.ly)
        }
    }

    pub fn diffusivity(&self) -> DiffusivitySpec {
        DiffusivitySpec { law: self.law, m: self.m, c_d: self.c_d, epsilon: self.epsilon }
    }

    pub fn sensitivities(&self) -> Sensitivities {
        Sensitivities { chi: self.chi, xi: self.xi, mu: self.mu }
    }

    pub fn solver(&self) -> SolverConfig {
        SolverConfig {
            t_end: self.t_end,
            cfl_safety: self.cfl_safety,
            dt_max: self.dt_max,
            dt_min: self.dt_min,
            output_every: self.output_every,
            snapshot_every: self.snapshot_every,
            blowup_u_max: self.blowup_u_max,
            freeze_v: self.freeze_v,
        }
    }

    pub fn diagnostics(&self) -> DiagnosticsConfig {
        DiagnosticsConfig {
            k_exponents: self.k_exponents.clone(),
            beta_exponents: self.beta_exponents.clone(),
        }
    }

    /// Grid plus sampled initial state, ready to run.
    pub fn build(&self) -> (Grid, State) {
        let grid = self.grid();
        let state = State::new(
            &grid,
            self.u0.sample(&grid),
            self.v0.sample(&grid),
            self.w0.sample(&grid),
        );
        (grid, state)
    }

    /// Threshold inputs for this parameter set; `w0_sup` comes from the
    /// sampled tissue field, N from `threshold.n` or the grid dimension.
    pub fn threshold_inputs(&self) -> ThresholdInputs {
        let grid = self.grid();
        let w0_sup = self.w0.sample(&grid).max();
        ThresholdInputs {
            n: if self.threshold_n >= 1 { self.threshold_n } else { self.dim },
            chi: self.chi,
            xi: self.xi,
            mu: self.mu,
            w0_sup,
            lambda0: self.lambda0,
        }
    }
}
