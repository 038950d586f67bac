use psge_core::config::ConfigMap;
use psge_core::estimates::{gronwall_envelope, t_epsilon, verify_order, LayerParams};
use psge_core::fd::{cross_validate, reduced_wave_error};
use psge_core::kernel::{
    k_time_grid, kernel_mass, kernel_mass_exact, pde_residual, verify_laplace_pair, KernelParams,
};
use psge_core::model::{MediumParams, SpaceTimeGrid};
use psge_core::quad::QuadratureSpec;
use psge_core::volterra::{picard_solve, PicardConfig};
use psge_core::waves::{reduced_residual, w_xxt_bound, ResidualMode, TravellingWave};
use psge_core::PsgeError;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::Serialize;

use crate::output::{fmt_f, report_check, CliError, CliResult, Sink};

pub const DEFAULT_SEED: u64 = 20_240_917;

fn quad_spec(cfg: &ConfigMap) -> CliResult<QuadratureSpec> {
    let d = QuadratureSpec::default();
    let q = QuadratureSpec {
        abs_tol: cfg.f64("abs_tol")?.unwrap_or(d.abs_tol),
        rel_tol: cfg.f64("rel_tol")?.unwrap_or(d.rel_tol),
        max_subdivisions: cfg.usize("max_subdivisions")?.unwrap_or(d.max_subdivisions),
        truncation_threshold: cfg
            .f64("truncation_threshold")?
            .unwrap_or(d.truncation_threshold),
    };
    q.validate()?;
    Ok(q)
}

fn picard_config(cfg: &ConfigMap) -> CliResult<PicardConfig> {
    let d = PicardConfig::default();
    Ok(PicardConfig {
        max_iters: cfg.usize("max_iters")?.unwrap_or(d.max_iters),
        fix_tol: cfg.f64("fix_tol")?.unwrap_or(d.fix_tol),
        window_len: cfg.f64("window_len")?,
        damping: cfg.f64("damping")?.unwrap_or(d.damping),
        initial: cfg.f64("initial")?.unwrap_or(d.initial),
    })
}

fn wave_for(cfg: &ConfigMap, medium: &MediumParams) -> CliResult<TravellingWave> {
    Ok(TravellingWave::new(
        medium.gamma,
        medium.a,
        cfg.f64("k")?.unwrap_or(0.0),
    )?)
}

/// `x_min` defaults to `−x_max`.
fn symmetric_default(cfg: &mut ConfigMap) -> CliResult<()> {
    let x_max = cfg.require_f64("x_max")?;
    cfg.set_default("x_min", (-x_max).to_string())?;
    Ok(())
}

fn check_failed(n: usize) -> CliResult<()> {
    if n == 0 {
        Ok(())
    } else {
        Err(CliError::Failed(format!("{n} check(s) failed")))
    }
}

// ---------------------------------------------------------------- kernel

pub fn kernel(
    cfg: &mut ConfigMap,
    sink_for: impl FnOnce(&ConfigMap) -> Sink,
    verify: bool,
) -> CliResult<()> {
    cfg.set_default("gamma", "0")?;
    cfg.set_default("x_max", "10")?;
    symmetric_default(cfg)?;
    cfg.set_default("nx", "41")?;
    cfg.set_default("t_max", "2")?;
    cfg.set_default("nt", "11")?;
    let medium = cfg.medium()?;
    let grid = cfg.grid()?;
    let quad = quad_spec(cfg)?;
    let p = KernelParams::new(medium)?;
    let sink = sink_for(cfg);

    let xs = grid.xs();
    let ts: Vec<f64> = grid.ts().into_iter().filter(|t| *t > 0.0).collect();
    let samples = k_time_grid(&xs, &ts, &p, &quad)?;
    sink.write(
        || {
            let mut s = String::from("x,t,k\n");
            for k in &samples {
                s.push_str(&format!("{},{},{}\n", fmt_f(k.x), fmt_f(k.t), fmt_f(k.k)));
            }
            s
        },
        &samples,
    )?;
    if !verify {
        return Ok(());
    }

    let mut failures = 0;
    let mut tally = |name: &str, pass: bool, detail: String| {
        report_check(name, pass, &detail);
        if !pass {
            failures += 1;
        }
    };

    // Laplace pair on a few (r, s).
    let s0 = p.abscissa().max(0.0);
    let ss = [s0 + 0.5, s0 + 1.0, s0 + 2.0];
    let mut worst = 0.0_f64;
    for r in [0.0, 0.5, 2.0] {
        worst = worst.max(verify_laplace_pair(r, &ss, &p, &quad)?);
    }
    tally(
        "laplace_pair",
        worst < 1e-6,
        format!("worst relative error {worst:.3e}"),
    );

    // Mass against (1/a)(1 − e^{−at}).
    let mut worst = 0.0_f64;
    let mut bounded = true;
    for f in [0.25, 0.5, 1.0] {
        let t = f * grid.t_max;
        let m = kernel_mass(t, &p, &quad)?;
        let exact = kernel_mass_exact(t, medium.a);
        worst = worst.max((m - exact).abs() / exact);
        bounded &= m <= 1.0 / medium.a + 1e-10;
    }
    tally(
        "mass",
        worst < 1e-5 && bounded,
        format!("worst relative error {worst:.3e}"),
    );

    // Second-order decay of the finite-difference residual.
    let tight = QuadratureSpec {
        abs_tol: 1e-15,
        rel_tol: 1e-14,
        ..quad
    };
    let mut ratios = Vec::new();
    for (fx, ft) in [(0.5, 0.5), (0.3, 0.75), (0.7, 1.0)] {
        let t = ft * grid.t_max;
        let x = fx * medium.c * t;
        let h = 0.1 * (medium.epsilon * t).sqrt().min(t / 4.0);
        let r1 = pde_residual(x, t, &p, h, &tight)?;
        let r2 = pde_residual(x, t, &p, 0.5 * h, &tight)?;
        if r1.is_conditioned() && r2.is_conditioned() {
            ratios.push(r1.value / r2.value);
        }
    }
    let ok = !ratios.is_empty() && ratios.iter().all(|r| (3.5..=4.5).contains(r));
    tally(
        "pde_residual",
        ok,
        format!("Richardson ratios {ratios:.3?}"),
    );

    // Nonnegativity in the dissipative regime.
    let min = samples.iter().map(|s| s.k).fold(f64::INFINITY, f64::min);
    if medium.dissipative_regime() {
        tally("nonnegativity", min >= -1e-10, format!("min K = {min:.3e}"));
    } else {
        tally(
            "nonnegativity",
            true,
            format!("skipped outside the dissipative regime, min K = {min:.3e}"),
        );
    }
    if failures == 0 {
        eprintln!("4 checks passed");
    }
    check_failed(failures)
}

// ---------------------------------------------------------------- wave

#[derive(Serialize)]
struct WaveRow {
    x: f64,
    t: f64,
    w: Option<f64>,
    w_t: Option<f64>,
    w_xxt: Option<f64>,
    singular: bool,
}

pub fn wave(
    cfg: &mut ConfigMap,
    sink_for: impl FnOnce(&ConfigMap) -> Sink,
    verify: bool,
    strict: bool,
) -> CliResult<()> {
    cfg.set_default("gamma", "0")?;
    cfg.set_default("a", "1")?;
    cfg.set_default("k", "0")?;
    cfg.set_default("x_max", "10")?;
    symmetric_default(cfg)?;
    cfg.set_default("nx", "41")?;
    cfg.set_default("t_max", "1")?;
    cfg.set_default("nt", "3")?;
    let gamma = cfg.f64("gamma")?.unwrap_or(0.0);
    let a = cfg.require_f64("a")?;
    let k = cfg.require_f64("k")?;
    let wave = TravellingWave::new(gamma, a, k)?;
    let grid = cfg.grid()?;
    if verify {
        cfg.set_default("seed", DEFAULT_SEED.to_string())?;
        cfg.set_default("samples", "1000")?;
    }
    let sink = sink_for(cfg);

    let mut rows = Vec::with_capacity(grid.nx * grid.nt);
    for n in 0..grid.nt {
        for i in 0..grid.nx {
            let (x, t) = (grid.x(i), grid.t(n));
            let row = match (wave.value(x, t), wave.derivatives(x, t)) {
                (Ok(w), Ok(d)) => WaveRow {
                    x,
                    t,
                    w: Some(w),
                    w_t: Some(d.w_t),
                    w_xxt: Some(d.w_xxt),
                    singular: false,
                },
                (Err(PsgeError::Domain(_)), _) | (_, Err(PsgeError::Domain(_))) => WaveRow {
                    x,
                    t,
                    w: None,
                    w_t: None,
                    w_xxt: None,
                    singular: true,
                },
                (Err(e), _) | (_, Err(e)) => return Err(e.into()),
            };
            rows.push(row);
        }
    }
    let singular = rows.iter().filter(|r| r.singular).count();
    sink.write(
        || {
            let mut s = String::from("x,t,w,w_t,w_xxt,singular\n");
            let o = |v: Option<f64>| fmt_f(v.unwrap_or(f64::NAN));
            for r in &rows {
                s.push_str(&format!(
                    "{},{},{},{},{},{}\n",
                    fmt_f(r.x),
                    fmt_f(r.t),
                    o(r.w),
                    o(r.w_t),
                    o(r.w_xxt),
                    u8::from(r.singular)
                ));
            }
            s
        },
        &rows,
    )?;
    if singular > 0 {
        eprintln!("warning: {singular} row(s) on the singular locus flagged");
    }

    let mut failures = usize::from(strict && singular > 0);
    if verify {
        let seed = cfg.u64("seed")?.unwrap_or(DEFAULT_SEED);
        let n = cfg.usize("samples")?.unwrap_or(1000);
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let (mut worst, mut skipped) = (0.0_f64, 0usize);
        for _ in 0..n {
            let x = rng.gen_range(grid.x_min..=grid.x_max);
            let t = rng.gen_range(0.0..=grid.t_max);
            match reduced_residual(&wave, x, t, ResidualMode::Analytic) {
                Ok(r) => worst = worst.max(r.abs()),
                Err(PsgeError::Domain(_)) => skipped += 1,
                Err(e) => return Err(e.into()),
            }
        }
        let pass = worst < 1e-8;
        report_check(
            "reduced_residual",
            pass,
            &format!(
                "max residual {worst:.3e} over {} points (seed {seed}, {skipped} singular)",
                n - skipped
            ),
        );
        failures += usize::from(!pass);
    }
    check_failed(failures)
}

// ---------------------------------------------------------------- solve

fn solve_defaults(cfg: &mut ConfigMap) -> CliResult<()> {
    cfg.set_default("a", "1")?;
    cfg.set_default("c", "1")?;
    cfg.set_default("gamma", "0")?;
    cfg.set_default("k", "0")?;
    cfg.set_default("x_max", "20")?;
    symmetric_default(cfg)?;
    cfg.set_default("nx", "401")?;
    Ok(())
}

pub fn solve(
    cfg: &mut ConfigMap,
    sink_for: impl FnOnce(&ConfigMap) -> Sink,
    verify: bool,
    strict: bool,
) -> CliResult<()> {
    solve_defaults(cfg)?;
    cfg.set_default("t_max", "2")?;
    cfg.set_default("nt", "201")?;
    let medium = cfg.medium()?;
    let grid = cfg.grid()?;
    let config = picard_config(cfg)?;
    let wave = wave_for(cfg, &medium)?;
    let sink = sink_for(cfg);

    let (v, report) = picard_solve(&wave, &medium, &grid, &config)?;
    sink.write(
        || {
            let mut s = String::from("x,t,v\n");
            for n in 0..grid.nt {
                for (i, val) in v.row(n).iter().enumerate() {
                    s.push_str(&format!(
                        "{},{},{}\n",
                        fmt_f(grid.x(i)),
                        fmt_f(grid.t(n)),
                        fmt_f(*val)
                    ));
                }
            }
            s
        },
        &report,
    )?;
    eprintln!(
        "converged in {:?} iterations per window, sup |v| = {:.6e}",
        report.iterations,
        report.sup_history.iter().fold(0.0_f64, |m, p| m.max(p[1]))
    );

    let mut failures = 0;
    if !report.truncation_ok {
        eprintln!(
            "warning: boundary truncation estimate {:.3e} exceeds fix_tol {:.1e}",
            report.boundary_truncation, config.fix_tol
        );
        failures += usize::from(strict);
    }
    if verify {
        let pass = report.a_priori_slack <= 1e-8;
        report_check(
            "a_priori_bound",
            pass,
            &format!("slack {:.3e}", report.a_priori_slack),
        );
        failures += usize::from(!pass);

        let bound = report.window_len / medium.a;
        let worst = report
            .contraction_ratios
            .iter()
            .fold(0.0_f64, |m, r| m.max(*r));
        let pass = worst <= bound + 1e-3;
        report_check(
            "contraction",
            pass,
            &format!("max ratio {worst:.3e} vs eta/a = {bound:.3e}"),
        );
        failures += usize::from(!pass);

        if wave.regime() == psge_core::waves::Regime::GammaZero {
            let beta = w_xxt_bound(medium.a)?;
            let env = gronwall_envelope(grid.t_max, beta, medium.a, medium.epsilon);
            let worst = report.sup_history.iter().fold(0.0_f64, |m, p| m.max(p[1]));
            let pass = worst <= env + config.fix_tol;
            report_check(
                "gronwall",
                pass,
                &format!("max r {worst:.3e} vs envelope {env:.3e}"),
            );
            failures += usize::from(!pass);
        }
    }
    check_failed(failures)
}

// ---------------------------------------------------------------- sweep

pub fn sweep(cfg: &mut ConfigMap, sink_for: impl FnOnce(&ConfigMap) -> Sink) -> CliResult<()> {
    cfg.set_default("epsilon_list", "1e-2,1e-3,1e-4")?;
    cfg.set_default("k_exp", "0.5")?;
    solve_defaults(cfg)?;
    if cfg.f64("gamma")? != Some(0.0) {
        return Err(CliError::Usage(
            "sweep uses the kink; gamma must be 0".into(),
        ));
    }
    let list = cfg.f64_list("epsilon_list")?.unwrap_or_default();
    let a = cfg.require_f64("a")?;
    let k_exp = cfg.require_f64("k_exp")?;
    let mut layer = LayerParams::for_kink(a, k_exp, list.clone())?;
    layer.horizon_cap = cfg.f64("horizon_cap")?;
    cfg.set_default("epsilon", list[0].to_string())?;
    let medium = cfg.medium()?;

    // Default window: long enough for every entry, at dt = 0.01.
    if !cfg.contains("t_max") {
        let horizon = list
            .iter()
            .filter_map(|&e| t_epsilon(a, layer.beta, e, k_exp).ok())
            .map(|t| t.min(layer.cap()))
            .fold(0.0_f64, f64::max);
        let t_max = ((horizon / 0.01).ceil() * 0.01).max(0.01);
        cfg.set("t_max", format!("{t_max:e}"))?;
        if !cfg.contains("nt") {
            cfg.set("nt", (((t_max / 0.01).round() as usize) + 1).to_string())?;
        }
    }
    if !cfg.contains("nt") {
        let t_max = cfg.require_f64("t_max")?;
        cfg.set(
            "nt",
            (((t_max / 0.01).ceil() as usize).max(1) + 1).to_string(),
        )?;
    }
    let grid: SpaceTimeGrid = cfg.grid()?;
    let config = picard_config(cfg)?;
    let wave = wave_for(cfg, &medium)?;
    let sink = sink_for(cfg);

    let report = verify_order(&medium, &wave, &grid, &layer, &config)?;
    sink.write(|| report.to_csv(), &report)?;
    if let Some(s) = report.slope {
        eprintln!(
            "fitted slope {s:.4} over [0, {:.4}]",
            report.slope_window.unwrap_or(f64::NAN)
        );
    }
    for e in &report.entries {
        if let psge_core::estimates::EntryStatus::HorizonNotReached(m) = &e.status {
            eprintln!("epsilon {:e}: horizon not reached ({m})", e.epsilon);
        }
        if let psge_core::estimates::EntryStatus::Failed(m) = &e.status {
            eprintln!("epsilon {:e}: failed ({m})", e.epsilon);
        }
    }
    if report.all_satisfied {
        Ok(())
    } else {
        Err(CliError::Failed(
            "some sweep entries violate their bounds".into(),
        ))
    }
}

// ---------------------------------------------------------------- oracle

#[derive(Serialize)]
struct ReducedCheck {
    epsilon: f64,
    max_error: f64,
    tolerance: f64,
    passed: bool,
}

pub fn oracle(cfg: &mut ConfigMap, sink_for: impl FnOnce(&ConfigMap) -> Sink) -> CliResult<()> {
    solve_defaults(cfg)?;
    cfg.set_default("t_max", "1")?;
    cfg.set_default("nt", "101")?;
    let epsilon = cfg.require_f64("epsilon")?;
    if epsilon == 0.0 {
        // Reduced problem against the closed-form wave; ε is only a placeholder here.
        let mut probe = cfg.clone();
        probe.set("epsilon", "1")?;
        let medium = probe.medium()?;
        let grid = cfg.grid()?;
        let wave = wave_for(cfg, &medium)?;
        let sink = sink_for(cfg);
        let max_error = reduced_wave_error(&medium, &wave, &grid)?;
        let check = ReducedCheck {
            epsilon,
            max_error,
            tolerance: 1e-3,
            passed: max_error < 1e-3,
        };
        sink.write(
            || {
                format!(
                    "epsilon,max_error,tolerance,passed\n{},{},{},{}\n",
                    fmt_f(0.0),
                    fmt_f(max_error),
                    fmt_f(1e-3),
                    check.passed
                )
            },
            &check,
        )?;
        report_check(
            "reduced_vs_closed_form",
            check.passed,
            &format!("max error {max_error:.3e}"),
        );
        return if check.passed {
            Ok(())
        } else {
            Err(CliError::Failed("reduced solution mismatch".into()))
        };
    }
    let medium = cfg.medium()?;
    let grid = cfg.grid()?;
    let config = picard_config(cfg)?;
    let wave = wave_for(cfg, &medium)?;
    let sink = sink_for(cfg);
    let cv = cross_validate(&medium, &wave, &grid, &config)?;
    sink.write(
        || {
            format!(
                "epsilon,discrepancy,fd_error_estimate,picard_error_estimate,tolerance,passed\n{},{},{},{},{},{}\n",
                fmt_f(epsilon),
                fmt_f(cv.discrepancy),
                fmt_f(cv.fd_error_estimate),
                fmt_f(cv.picard_error_estimate),
                fmt_f(cv.tolerance),
                cv.passed
            )
        },
        &cv,
    )?;
    report_check(
        "cross_validation",
        cv.passed,
        &format!(
            "sup |u_fd - (w + v)| = {:.3e}, tolerance {:.1e}",
            cv.discrepancy, cv.tolerance
        ),
    );
    if cv.passed {
        Ok(())
    } else {
        Err(CliError::Failed(
            "finite-difference and Picard pipelines disagree".into(),
        ))
    }
}
