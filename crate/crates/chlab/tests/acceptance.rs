//! Acceptance suite: one test per criterion, each printing a PASS line with
//! the measured numbers when it holds.

mod common;

use chlab::config::parse_config;
use chlab::diagnostics::{ode_oracle, weak_residual, TestFunction};
use chlab::grid::Grid;
use chlab::harness::convergence_study;
use chlab::physics::Sensitivities;
use chlab::solver::run;
use chlab::threshold::{m_bar, m_critical, ThresholdInputs};
use chlab::verify::run_verify;
use common::SplitMix64;
use std::time::Instant;

fn random_inputs(rng: &mut SplitMix64, n: u32) -> ThresholdInputs {
    let chi = rng.uniform(0.05, 8.0);
    let xi = rng.uniform(0.05, 8.0);
    let w0_sup = rng.uniform(0.0, 4.0);
    let lambda0 = rng.uniform(0.05, 8.0);
    let sup_lambda = if lambda0 >= 1.0 { lambda0.sqrt() } else { 1.0 };
    let a = sup_lambda * (chi + xi * w0_sup);
    // mu strictly inside (0, A) so mu_star stays finite
    let mu = a * rng.uniform(1e-6, 1.0 - 1e-6);
    ThresholdInputs { n, chi, xi, mu, w0_sup, lambda0 }
}

#[test]
fn criterion_01_threshold_exactness() {
    let inputs = ThresholdInputs { n: 2, chi: 1.0, xi: 1.0, mu: 0.5, w0_sup: 1.0, lambda0: 1.0 };
    let report = m_critical(&inputs, None).unwrap();
    let rel = |got: f64, want: f64| (got - want).abs() / want.abs();
    assert!(rel(report.mu_star, 4.0 / 3.0) < 1e-12, "mu_star {}", report.mu_star);
    assert!(rel(report.gamma_star, 49.0 / 18.0) < 1e-12, "gamma_star {}", report.gamma_star);
    assert!(rel(report.m_crit, 72.0 / 85.0) < 1e-12, "m_crit {}", report.m_crit);

    let start = Instant::now();
    let mut sink = 0.0;
    for _ in 0..1000 {
        sink += m_critical(&inputs, Some(1.0)).unwrap().m_crit;
    }
    let per_eval = start.elapsed().as_secs_f64() / 1000.0;
    assert!(sink.is_finite());
    assert!(per_eval < 1e-3, "threshold evaluation took {per_eval:.2e} s");
    println!(
        "ACCEPTANCE 1 PASS threshold chain exact to 1e-12 (m_crit = {}), {:.1e} s/eval",
        report.m_crit, per_eval
    );
}

#[test]
fn criterion_02_m_crit_below_pure_chemotaxis_exponent() {
    // for mu > 0 with finite mu_star: gamma_star > 2 strictly, hence
    // m_crit < 2N/(N+2)
    let mut rng = SplitMix64::new(0x51ec);
    let mut violations = 0;
    for _ in 0..1000 {
        let n = rng.uniform_u32(1, 10);
        let inputs = random_inputs(&mut rng, n);
        let report = m_critical(&inputs, None).unwrap();
        assert!(report.mu_star.is_finite() && inputs.mu > 0.0);
        assert!(report.mu_star > 1.0, "mu_star must exceed 1 for mu > 0");
        let bound = 2.0 * n as f64 / (n as f64 + 2.0);
        if !(report.m_crit < bound) {
            violations += 1;
        }
    }
    assert_eq!(violations, 0);
    println!("ACCEPTANCE 2 PASS m_crit < 2N/(N+2) on 1000 random inputs, 0 violations");
}

#[test]
fn criterion_03_m_crit_below_prior_global_existence_threshold() {
    // the prior comparison result needs m > max(1, m_bar); the new
    // threshold always sits strictly below that whenever mu > 0
    let mut rng = SplitMix64::new(0xbeef);
    let mut violations = 0;
    for n in 1..=10u32 {
        let prior = m_bar(n).unwrap().max(1.0);
        for _ in 0..100 {
            let inputs = random_inputs(&mut rng, n);
            let report = m_critical(&inputs, None).unwrap();
            if !(report.m_crit < prior) {
                violations += 1;
            }
        }
    }
    assert_eq!(violations, 0);
    println!(
        "ACCEPTANCE 3 PASS m_crit < max(1, m_bar(N)) for N = 1..10, 100 draws each, 0 violations"
    );
}

#[test]
fn criterion_04_logistic_dominance_degenerates_the_threshold() {
    let mut rng = SplitMix64::new(0x0d0e);
    for _ in 0..200 {
        let n = rng.uniform_u32(1, 10);
        let mut inputs = random_inputs(&mut rng, n);
        // push mu to and beyond the coefficient
        let coeff = m_critical(&inputs, None).unwrap().coeff;
        inputs.mu = coeff * rng.uniform(1.0, 3.0);
        let report = m_critical(&inputs, Some(rng.uniform(1e-9, 3.0))).unwrap();
        assert!(report.mu_star.is_infinite(), "mu_star finite at mu >= A");
        assert_eq!(report.m_crit, 0.0);
        assert_eq!(report.admissible, Some(true));
    }
    println!("ACCEPTANCE 4 PASS mu >= A gives mu_star = inf, m_crit = 0, any m > 0 admissible");
}

/// Homogeneous benchmark used by criteria 5, 6, and 9.
fn homogeneous_benchmark(
    nx: usize,
    t_end: f64,
    dt_max: f64,
    snapshot_every: f64,
) -> (Grid, chlab::solver::RunResult) {
    let cfg = parse_config(&format!(
        "grid.nx = {nx}\ngrid.lx = 32\nmodel.mu = 1\nmodel.chi = 1\nmodel.xi = 1\n\
         diffusivity.m = 2\nsolver.t_end = {t_end}\nsolver.dt_max = {dt_max}\n\
         solver.output_every = 0.5\nsolver.snapshot_every = {snapshot_every}\n\
         init.u0.kind = constant\ninit.u0.base = 0.5\n\
         init.v0.kind = constant\ninit.v0.base = 0.2\n\
         init.w0.kind = constant\ninit.w0.base = 1\n"
    ))
    .unwrap();
    let (grid, state) = cfg.build();
    let result = run(
        &grid,
        state,
        &cfg.diffusivity(),
        &cfg.sensitivities(),
        &cfg.solver(),
        &cfg.diagnostics(),
    );
    assert!(result.status.is_completed());
    (grid, result)
}

fn ode_comparison_error(result: &chlab::solver::RunResult, oracle_dt: f64) -> f64 {
    let sens = Sensitivities { chi: 1.0, xi: 1.0, mu: 1.0 };
    let oracle = ode_oracle(&sens, [0.5, 0.2, 1.0], 10.0, oracle_dt);
    let mut sup_ref = [0.0f64; 3];
    for (_, y) in &oracle {
        for c in 0..3 {
            sup_ref[c] = sup_ref[c].max(y[c].abs());
        }
    }
    let mut worst = 0.0f64;
    for snap in &result.snapshots {
        let idx = (snap.t / oracle_dt).round() as usize;
        let (t_o, y_o) = oracle[idx.min(oracle.len() - 1)];
        assert!((t_o - snap.t).abs() < 1e-9);
        let got = [snap.u.values()[0], snap.v.values()[0], snap.w.values()[0]];
        for c in 0..3 {
            worst = worst.max((got[c] - y_o[c]).abs() / sup_ref[c]);
        }
    }
    worst
}

#[test]
fn criterion_05_homogeneous_run_matches_ode_oracle() {
    let start = Instant::now();
    let (_, base) = homogeneous_benchmark(128, 10.0, 2e-4, 0.5);
    let (_, half) = homogeneous_benchmark(128, 10.0, 1e-4, 0.5);
    let elapsed = start.elapsed().as_secs_f64();

    let e_base = ode_comparison_error(&base, 1e-5);
    let e_half = ode_comparison_error(&half, 1e-5);
    let order = (e_base / e_half).log2();
    assert!(e_base <= 1e-3, "baseline error {e_base}");
    assert!(order >= 1.0, "temporal order {order}");
    assert!(elapsed < 10.0, "runtime {elapsed} s");
    println!(
        "ACCEPTANCE 5 PASS ode-oracle error {e_base:.2e} at dt 2e-4, order {order:.2}, {elapsed:.1} s"
    );
}

#[test]
fn criterion_06_tissue_exactness() {
    // frozen signal: w(T) = w0 exp(-v T) to 1e-10 relative
    let v_bar = 0.7f64;
    let t_end = 2.0f64;
    let cfg = parse_config(&format!(
        "grid.nx = 64\ngrid.lx = 16\nsolver.freeze_v = true\nsolver.t_end = {t_end}\n\
         solver.dt_max = 2e-3\ninit.v0.kind = constant\ninit.v0.base = {v_bar}\n\
         init.w0.kind = bump\ninit.w0.base = 1\ninit.w0.amp = 0.3\n"
    ))
    .unwrap();
    let (grid, state) = cfg.build();
    let w0 = state.w.clone();
    let result = run(
        &grid,
        state,
        &cfg.diffusivity(),
        &cfg.sensitivities(),
        &cfg.solver(),
        &cfg.diagnostics(),
    );
    assert!(result.status.is_completed());
    let decay = (-v_bar * t_end).exp();
    let mut worst = 0.0f64;
    for (w, w0) in result.final_state.w.values().iter().zip(w0.values()) {
        worst = worst.max((w - w0 * decay).abs() / (w0 * decay));
    }
    assert!(worst <= 1e-10, "frozen-v exactness {worst}");

    // coupled run: |w - w0 exp(-int_v)| <= 5 dt
    let (_, coupled) = homogeneous_benchmark(64, 5.0, 2e-3, 0.0);
    let bound = 5.0 * 2e-3;
    let mut worst_coupled = 0.0f64;
    for rec in &coupled.records {
        worst_coupled = worst_coupled.max(rec.w_exactness_err);
        assert!(rec.w_exactness_err <= bound, "w drift {}", rec.w_exactness_err);
    }
    println!(
        "ACCEPTANCE 6 PASS frozen-v exactness {worst:.2e}, coupled drift {worst_coupled:.2e} <= {bound:.0e}"
    );
}

#[test]
fn criterion_07_hard_invariants_across_the_verify_suite() {
    let reports = run_verify();
    assert!(reports.len() >= 20, "only {} canned configurations", reports.len());
    let failed: Vec<_> = reports.iter().filter(|r| !r.passed).collect();
    assert!(failed.is_empty(), "failures: {failed:?}");
    let worst_mass =
        reports.iter().map(|r| r.max_mass_residual).fold(0.0f64, f64::max);
    println!(
        "ACCEPTANCE 7 PASS {} canned runs, zero invariant violations, worst mass defect {worst_mass:.2e}",
        reports.len()
    );
}

#[test]
fn criterion_08_logistic_l1_bound() {
    // the discrete mass identity plus the logistic comparison bound:
    // integral of u stays below max(integral of u0, |Omega|)
    let configs = [
        "grid.nx = 128\ngrid.lx = 32\nmodel.mu = 0.5\nsolver.t_end = 6\n",
        "grid.nx = 96\ngrid.lx = 24\nmodel.mu = 3\nsolver.t_end = 4\n",
        "grid.nx = 128\ngrid.lx = 32\nmodel.mu = 1\ninit.u0.kind = gaussian\n\
         init.u0.base = 1.5\ninit.u0.amp = 1\ninit.u0.width = 3\nsolver.t_end = 5\n",
        "grid.dim = 2\ngrid.nx = 16\ngrid.ny = 16\ngrid.lx = 6\ngrid.ly = 6\n\
         model.mu = 0.7\nsolver.t_end = 3\n",
    ];
    let mut worst_margin = 0.0f64;
    for text in configs {
        let cfg = parse_config(text).unwrap();
        assert!(cfg.mu > 0.0);
        let (grid, state) = cfg.build();
        let result = run(
            &grid,
            state,
            &cfg.diffusivity(),
            &cfg.sensitivities(),
            &cfg.solver(),
            &cfg.diagnostics(),
        );
        assert!(result.status.is_completed());
        let bound = result.records[0].l1_u.max(grid.domain_volume()) * (1.0 + 1e-6);
        for rec in &result.records {
            assert!(rec.l1_u <= bound, "t = {}: l1_u {} above {bound}", rec.t, rec.l1_u);
            worst_margin = worst_margin.max(rec.l1_u / bound);
        }
    }
    println!("ACCEPTANCE 8 PASS l1 bound held on all records (worst ratio {worst_margin:.6})");
}

#[test]
fn criterion_09_weak_residuals_shrink_under_refinement() {
    let spec = parse_config("diffusivity.m = 2\n").unwrap().diffusivity();
    let sens = Sensitivities { chi: 1.0, xi: 1.0, mu: 1.0 };
    // simultaneous dt / h / cadence refinement; dt sits well below the
    // snapshot cadence so the quadrature term dominates the defect
    let levels = [(32usize, 5e-5, 0.0625), (64, 2.5e-5, 0.03125), (128, 1.25e-5, 0.015625)];
    let mut residuals: Vec<[f64; 3]> = Vec::new();
    for (lvl, (nx, dt_max, cadence)) in levels.iter().enumerate() {
        let (grid, result) = homogeneous_benchmark(*nx, 10.0, *dt_max, *cadence);
        let report = weak_residual(
            &grid,
            &result.snapshots,
            &spec,
            &sens,
            &TestFunction { modes: [0, 0] },
            lvl,
        )
        .unwrap();
        residuals.push([report.residual_u, report.residual_v, report.residual_w]);
    }
    for (i, name) in ["u", "v", "w"].iter().enumerate() {
        let r0 = residuals[0][i];
        let r2 = residuals[2][i];
        assert!(r0 <= 1e-3, "{name} residual {r0} at baseline");
        let order = (r0 / r2).log2() / 2.0;
        assert!(order >= 1.0, "{name} residual order {order} ({residuals:?})");
    }
    println!(
        "ACCEPTANCE 9 PASS weak residuals (u, v, w) = ({:.1e}, {:.1e}, {:.1e}) at baseline, orders >= 1",
        residuals[0][0], residuals[0][1], residuals[0][2]
    );
}

#[test]
fn criterion_10_boundedness_at_desk_scale() {
    // N = 1, mu = 0.5, chi = xi = 1, w0 = 1, lambda0 = 1: m_crit = 18/37
    let inputs = ThresholdInputs { n: 1, chi: 1.0, xi: 1.0, mu: 0.5, w0_sup: 1.0, lambda0: 1.0 };
    let m_crit = m_critical(&inputs, None).unwrap().m_crit;
    assert!((m_crit - 18.0 / 37.0).abs() < 1e-12);
    let m = m_crit + 0.2;

    let cfg = parse_config(&format!(
        "grid.nx = 512\ngrid.lx = 32\nmodel.mu = 0.5\ndiffusivity.m = {m}\n\
         solver.t_end = 200\nsolver.output_every = 2\n"
    ))
    .unwrap();
    let (grid, state) = cfg.build();
    let u0_linf = state.u.max();
    let start = Instant::now();
    let result = run(
        &grid,
        state,
        &cfg.diffusivity(),
        &cfg.sensitivities(),
        &cfg.solver(),
        &cfg.diagnostics(),
    );
    let elapsed = start.elapsed().as_secs_f64();
    assert!(result.status.is_completed(), "status {:?}", result.status);
    let envelope = 10.0 * u0_linf.max(1.0);
    assert!(result.sup_linf_u <= envelope, "sup linf_u {}", result.sup_linf_u);
    assert!(elapsed < 60.0, "runtime {elapsed} s");
    println!(
        "ACCEPTANCE 10 PASS m = m_crit + 0.2 = {m:.4}: sup linf_u {:.3} <= {envelope:.1}, {} steps in {elapsed:.1} s",
        result.sup_linf_u, result.steps
    );
}

#[test]
fn criterion_11_convergence_orders() {
    let heat = parse_config(
        "grid.nx = 16\ngrid.lx = 4\nmodel.chi = 0\nmodel.xi = 0\nmodel.mu = 0\n\
         validation.mode = relaxed\ndiffusivity.m = 1\nsolver.t_end = 0.25\n\
         solver.dt_max = 0.002\nsolver.output_every = 0.25\n\
         init.u0.kind = gaussian\ninit.u0.base = 0.2\ninit.u0.amp = 1\ninit.u0.width = 0.5\n",
    )
    .unwrap();
    let rows = convergence_study(&heat, 4).unwrap();
    let heat_order = rows[0].order_linf.unwrap();
    assert!(heat_order >= 1.9, "heat-limit order {heat_order}");

    let coupled = parse_config(
        "grid.nx = 32\ngrid.lx = 8\nsolver.t_end = 0.5\nsolver.dt_max = 0.004\n\
         solver.output_every = 0.5\n",
    )
    .unwrap();
    let rows = convergence_study(&coupled, 4).unwrap();
    let coupled_order = rows[0].order_linf.unwrap();
    assert!(coupled_order >= 0.9, "full-coupling order {coupled_order}");
    println!(
        "ACCEPTANCE 11 PASS spatial orders: heat limit {heat_order:.2}, full coupling {coupled_order:.2}"
    );
}
