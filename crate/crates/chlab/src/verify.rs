//! Canned-configuration invariant suite behind the `verify` subcommand.
//!
//! Each configuration runs to completion and every diagnostics record is
//! checked against the hard invariants: nonnegativity of `u` and `v`, the
//! tissue ceiling `0 <= w <= max w0`, the discrete mass identity, the
//! logistic L1 bound, and the exponential tissue representation. The soft
//! one-sided `-lap w` defect is reported but never asserted.

use crate::config::parse_config;
use crate::solver::run;

/// Name and config text of every canned verification run: a spread over
/// dimension, diffusivity law and exponent, coupling strengths, and initial
/// shapes, all at desk scale.
pub fn canned_configs() -> Vec<(&'static str, &'static str)> {
    vec![
        (
            "1d_default_short",
            "grid.nx = 128\ngrid.lx = 32\nsolver.t_end = 4\n",
        ),
        (
            "1d_linear_m1",
            "grid.nx = 96\ngrid.lx = 24\ndiffusivity.m = 1\nsolver.t_end = 4\n",
        ),
        (
            "1d_degenerate_m3",
            "grid.nx = 96\ngrid.lx = 24\ndiffusivity.m = 3\nsolver.t_end = 4\n",
        ),
        (
            "1d_singular_m06",
            "grid.nx = 96\ngrid.lx = 24\ndiffusivity.m = 0.6\nsolver.t_end = 4\n",
        ),
        (
            "1d_regularized_m06",
            "grid.nx = 96\ngrid.lx = 24\ndiffusivity.law = power_regularized\n\
             diffusivity.m = 0.6\ndiffusivity.epsilon = 1e-3\nsolver.t_end = 4\n",
        ),
        (
            "1d_regularized_m2",
            "grid.nx = 96\ngrid.lx = 24\ndiffusivity.law = power_regularized\n\
             diffusivity.m = 2\ndiffusivity.epsilon = 0.1\nsolver.t_end = 4\n",
        ),
        (
            "1d_chemo_strong",
            "grid.nx = 128\ngrid.lx = 32\nmodel.chi = 3\nsolver.t_end = 3\n",
        ),
        (
            "1d_hapto_strong",
            "grid.nx = 128\ngrid.lx = 32\nmodel.xi = 3\nsolver.t_end = 3\n",
        ),
        (
            "1d_logistic_strong",
            "grid.nx = 128\ngrid.lx = 32\nmodel.mu = 3\nsolver.t_end = 3\n",
        ),
        (
            "1d_mu_dominant",
            "grid.nx = 128\ngrid.lx = 32\nmodel.mu = 5\nsolver.t_end = 3\n",
        ),
        (
            "1d_gaussian_u0",
            "grid.nx = 128\ngrid.lx = 32\ninit.u0.kind = gaussian\ninit.u0.base = 0.1\n\
             init.u0.amp = 1\ninit.u0.width = 3\nsolver.t_end = 4\n",
        ),
        (
            "1d_bump_w0",
            "grid.nx = 128\ngrid.lx = 32\ninit.w0.kind = bump\ninit.w0.base = 1\n\
             init.w0.amp = 0.5\nsolver.t_end = 4\n",
        ),
        (
            "1d_v0_uniform",
            "grid.nx = 128\ngrid.lx = 32\ninit.v0.base = 0.5\nsolver.t_end = 4\n",
        ),
        (
            "1d_fine_grid",
            "grid.nx = 512\ngrid.lx = 32\nsolver.t_end = 1\n",
        ),
        (
            "1d_freeze_v",
            "grid.nx = 96\ngrid.lx = 24\ninit.v0.base = 0.4\nsolver.freeze_v = true\n\
             solver.t_end = 3\n",
        ),
        (
            "1d_chemotaxis_only",
            "grid.nx = 128\ngrid.lx = 32\nmodel.xi = 0\nvalidation.mode = relaxed\n\
             solver.t_end = 4\n",
        ),
        (
            "1d_haptotaxis_only",
            "grid.nx = 128\ngrid.lx = 32\nmodel.chi = 0\nvalidation.mode = relaxed\n\
             solver.t_end = 4\n",
        ),
        (
            "1d_no_logistic",
            "grid.nx = 96\ngrid.lx = 24\nmodel.mu = 0\nvalidation.mode = relaxed\n\
             solver.t_end = 3\n",
        ),
        (
            "2d_default",
            "grid.dim = 2\ngrid.nx = 16\ngrid.ny = 16\ngrid.lx = 6\ngrid.ly = 6\n\
             solver.t_end = 2\n",
        ),
        (
            "2d_anisotropic",
            "grid.dim = 2\ngrid.nx = 24\ngrid.ny = 12\ngrid.lx = 6\ngrid.ly = 3\n\
             solver.t_end = 2\n",
        ),
        (
            "2d_degenerate_m3",
            "grid.dim = 2\ngrid.nx = 16\ngrid.ny = 16\ngrid.lx = 6\ngrid.ly = 6\n\
             diffusivity.m = 3\nsolver.t_end = 2\n",
        ),
        (
            "2d_singular_m06",
            "grid.dim = 2\ngrid.nx = 16\ngrid.ny = 16\ngrid.lx = 6\ngrid.ly = 6\n\
             diffusivity.m = 0.6\nsolver.t_end = 2\n",
        ),
        (
            "2d_gaussian",
            "grid.dim = 2\ngrid.nx = 20\ngrid.ny = 20\ngrid.lx = 8\ngrid.ly = 8\n\
             init.u0.kind = gaussian\ninit.u0.base = 0.2\ninit.u0.amp = 1\n\
             init.u0.width = 1.5\nsolver.t_end = 2\n",
        ),
        (
            "2d_regularized",
            "grid.dim = 2\ngrid.nx = 16\ngrid.ny = 16\ngrid.lx = 6\ngrid.ly = 6\n\
             diffusivity.law = power_regularized\ndiffusivity.m = 0.7\n\
             diffusivity.epsilon = 1e-2\nsolver.t_end = 2\n",
        ),
        (
            "2d_strong_coupling",
            "grid.dim = 2\ngrid.nx = 16\ngrid.ny = 16\ngrid.lx = 6\ngrid.ly = 6\n\
             model.chi = 2\nmodel.xi = 2\nmodel.mu = 1\nsolver.t_end = 2\n",
        ),
    ]
}

#[derive(Debug, Clone)]
pub struct VerifyReport {
    pub name: &'static str,
    pub passed: bool,
    pub failures: Vec<String>,
    pub records: usize,
    pub steps: u64,
    pub max_mass_residual: f64,
    pub max_kappa_violation: f64,
}

/// Run every canned configuration and check the hard invariants on each
/// record. Returns one report per configuration.
pub fn run_verify() -> Vec<VerifyReport> {
    let mut reports = Vec::new();
    for (name, text) in canned_configs() {
        let cfg = match parse_config(text) {
            Ok(c) => c,
            Err(e) => {
                reports.push(VerifyReport {
                    name,
                    passed: false,
                    failures: vec![format!("config: {e}")],
                    records: 0,
                    steps: 0,
                    max_mass_residual: f64::NAN,
                    max_kappa_violation: f64::NAN,
                });
                continue;
            }
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
        let mut failures = Vec::new();
        if !result.status.is_completed() {
            failures.push(format!("run did not complete: {:?}", result.status));
        }
        let l1_bound = result.records[0].l1_u.max(grid.domain_volume()) * (1.0 + 1e-6);
        let w_bound = result.w0_sup + 1e-12;
        let w_exact_bound = 5.0 * cfg.dt_max;
        let mut max_mass = 0.0f64;
        let mut max_kappa = 0.0f64;
        for rec in &result.records {
            if !rec.flags.is_ok() {
                failures.push(format!("t = {}: hard invariant flags: {}", rec.t, rec.flags));
            }
            if rec.mass_residual > 1e-10 {
                failures.push(format!("t = {}: mass residual {}", rec.t, rec.mass_residual));
            }
            if rec.linf_w > w_bound {
                failures.push(format!("t = {}: linf_w {} above {}", rec.t, rec.linf_w, w_bound));
            }
            if rec.l1_u > l1_bound {
                failures.push(format!("t = {}: l1_u {} above {}", rec.t, rec.l1_u, l1_bound));
            }
            if rec.w_exactness_err > w_exact_bound {
                failures.push(format!(
                    "t = {}: w exactness defect {} above {}",
                    rec.t, rec.w_exactness_err, w_exact_bound
                ));
            }
            max_mass = max_mass.max(rec.mass_residual);
            max_kappa = max_kappa.max(rec.kappa_violation);
        }
        reports.push(VerifyReport {
            name,
            passed: failures.is_empty(),
            failures,
            records: result.records.len(),
            steps: result.steps,
            max_mass_residual: max_mass,
            max_kappa_violation: max_kappa,
        });
    }
    reports
}

/// Verify summary CSV.
pub fn verify_csv(reports: &[VerifyReport]) -> String {
    let mut s = String::from(
        "schema,name,passed,records,steps,max_mass_residual,max_kappa_violation,failures\n",
    );
    for r in reports {
        s.push_str(&format!(
            "{},{},{},{},{},{},{},{}\n",
            crate::output::CSV_SCHEMA_VERSION,
            r.name,
            r.passed,
            r.records,
            r.steps,
            r.max_mass_residual,
            r.max_kappa_violation,
            r.failures.join(" | ").replace(',', ";"),
        ));
    }
    s
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn suite_has_both_dimensions_and_enough_coverage() {
        let configs = canned_configs();
        assert!(configs.len() >= 20, "only {} canned configs", configs.len());
        let ones = configs.iter().filter(|(n, _)| n.starts_with("1d")).count();
        let twos = configs.iter().filter(|(n, _)| n.starts_with("2d")).count();
        assert!(ones >= 5 && twos >= 5);
        // names are unique
        let mut names: Vec<_> = configs.iter().map(|(n, _)| n).collect();
        names.sort();
        names.dedup();
        assert_eq!(names.len(), configs.len());
    }
}
