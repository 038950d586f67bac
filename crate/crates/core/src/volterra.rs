//! Picard iteration for the remainder `v = u − w`.
//!
//! `v` solves `L v = F(x, t, v)` with zero initial data, so with `K` the
//! fundamental solution of `−L` it is the fixed point of
//!
//! `v = −∫₀^t ∫ K(x − ξ, t − τ) F(ξ, τ, v(ξ, τ)) dξ dτ`.
//!
//! The time axis is split into windows of length `η`; inside a window the
//! map is iterated on all levels at once (a contraction with ratio at most
//! `C_F η / a`), while contributions from earlier, converged windows are
//! summed once as a fixed history term.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{PsgeError, Result};
use crate::kernel::KernelParams;
use crate::model::{GridFunction, MediumParams, Source, SpaceTimeGrid, SuperconductiveSource};
use crate::table::{accumulate_row, KernelTable};
use crate::waves::TravellingWave;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PicardConfig {
    pub max_iters: usize,
    /// Stop when the sup-norm of an update falls below this.
    pub fix_tol: f64,
    /// Window length `η`; `None` means `min(a/2, t_max)`.
    pub window_len: Option<f64>,
    /// Relaxation factor in `(0, 1]`.
    pub damping: f64,
    /// Constant value of the first iterate on `t > 0`.
    pub initial: f64,
}

impl Default for PicardConfig {
    fn default() -> Self {
        PicardConfig {
            max_iters: 200,
            fix_tol: 1e-10,
            window_len: None,
            damping: 1.0,
            initial: 0.0,
        }
    }
}

impl PicardConfig {
    pub fn validate(&self, grid: &SpaceTimeGrid) -> Result<()> {
        if self.max_iters == 0 {
            return Err(PsgeError::invalid("max_iters", "must be at least 1"));
        }
        if !(self.fix_tol > 0.0 && self.fix_tol.is_finite()) {
            return Err(PsgeError::invalid(
                "fix_tol",
                format!("must be > 0, got {}", self.fix_tol),
            ));
        }
        if !(self.damping > 0.0 && self.damping <= 1.0) {
            return Err(PsgeError::invalid(
                "damping",
                format!("must lie in (0, 1], got {}", self.damping),
            ));
        }
        if let Some(w) = self.window_len {
            if !(w > 0.0 && w <= grid.t_max * (1.0 + 1e-12)) {
                return Err(PsgeError::invalid(
                    "window_len",
                    format!("must lie in (0, t_max = {}], got {w}", grid.t_max),
                ));
            }
        }
        if !self.initial.is_finite() {
            return Err(PsgeError::invalid("initial", "must be finite"));
        }
        Ok(())
    }

    pub fn resolved_window(&self, a: f64, grid: &SpaceTimeGrid) -> f64 {
        self.window_len.unwrap_or_else(|| (0.5 * a).min(grid.t_max))
    }
}

/// Per-window iteration trace.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct WindowReport {
    pub t_start: f64,
    pub t_end: f64,
    pub iterations: usize,
    /// `‖v^{k+1} − v^k‖ / ‖v^k − v^{k−1}‖` for each iteration after the first.
    pub contraction_ratios: Vec<f64>,
    pub final_update: f64,
    pub converged: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SolveReport {
    pub params: MediumParams,
    pub grid: SpaceTimeGrid,
    pub config: PicardConfig,
    pub window_len: f64,
    pub windows: Vec<WindowReport>,
    /// Iterations used in each window.
    pub iterations: Vec<usize>,
    /// All contraction ratios in order.
    pub contraction_ratios: Vec<f64>,
    /// `[t_n, r(t_n)]` with `r(t) = sup_x |v(x, t)|`.
    pub sup_history: Vec<[f64; 2]>,
    /// Largest `‖v^k‖_t − (t/a) ‖F(v^{k−1})‖_t` seen over all iterates and levels.
    pub a_priori_slack: f64,
    /// Largest `|F|` on the spatial edges times the kernel mass, per window.
    pub boundary_truncation: f64,
    pub truncation_ok: bool,
    pub converged: bool,
}

/// `max |v(x, t)|` over levels with `t ≤ up_to_t`.
pub fn sup_norm(v: &GridFunction, up_to_t: f64) -> f64 {
    let grid = v.grid();
    let tol = 1e-12 * grid.t_max;
    (0..grid.nt)
        .take_while(|&n| grid.t(n) <= up_to_t + tol)
        .flat_map(|n| v.row(n).iter())
        .fold(0.0_f64, |m, x| m.max(x.abs()))
}

fn sup_abs(xs: &[f64]) -> f64 {
    xs.iter().fold(0.0_f64, |m, x| m.max(x.abs()))
}

fn eval_row(
    source: &dyn Source,
    grid: &SpaceTimeGrid,
    n: usize,
    v: &[f64],
    out: &mut [f64],
) -> Result<()> {
    let t = grid.t(n);
    for (i, (o, vi)) in out.iter_mut().zip(v).enumerate() {
        let f = source.eval(grid.x(i), t, *vi);
        if !f.is_finite() {
            return Err(PsgeError::NonFinite(format!(
                "source at x = {}, t = {t}",
                grid.x(i)
            )));
        }
        *o = f;
    }
    Ok(())
}

/// The travelling waves solve the reduced equation with unit wave speed and
/// their own bias, so the remainder equation only makes sense when the
/// medium agrees.
pub fn check_wave_medium(wave: &TravellingWave, params: &MediumParams) -> Result<()> {
    if (params.c - 1.0).abs() > 1e-12 {
        return Err(PsgeError::invalid(
            "c",
            format!(
                "travelling waves solve the reduced equation only for c = 1, got {}",
                params.c
            ),
        ));
    }
    if (wave.a() - params.a).abs() > 1e-12 * params.a || wave.gamma() != params.gamma {
        return Err(PsgeError::invalid(
            "gamma",
            format!(
                "wave (a = {}, gamma = {}) does not match the medium (a = {}, gamma = {})",
                wave.a(),
                wave.gamma(),
                params.a,
                params.gamma
            ),
        ));
    }
    Ok(())
}

/// Picard solve with the superconductive source of `wave`.
pub fn picard_solve(
    wave: &TravellingWave,
    params: &MediumParams,
    grid: &SpaceTimeGrid,
    config: &PicardConfig,
) -> Result<(GridFunction, SolveReport)> {
    check_wave_medium(wave, params)?;
    let table = KernelTable::build(&KernelParams::new(*params)?, grid)?;
    let source = SuperconductiveSource::new(*wave, params);
    picard_solve_with(&source, &table, config)
}

/// Picard solve for an arbitrary source on a prebuilt table.
pub fn picard_solve_with(
    source: &dyn Source,
    table: &KernelTable,
    config: &PicardConfig,
) -> Result<(GridFunction, SolveReport)> {
    let grid = *table.grid();
    config.validate(&grid)?;
    let params = table.params().medium;
    let (nx, nt) = (grid.nx, grid.nt);
    let a = params.a;
    let eta = config.resolved_window(a, &grid);
    let steps = ((eta / grid.dt()).round() as usize).max(1);

    let mut v = vec![0.0; nx * nt];
    let mut f = vec![0.0; nx * nt];
    for x in v[nx..].iter_mut() {
        *x = config.initial;
    }
    eval_row(source, &grid, 0, &v[..nx], &mut f[..nx])?;
    // Running sup of |F| over levels 0..=n, for the a-priori check.
    let mut f_sup_prefix = vec![0.0; nt];
    f_sup_prefix[0] = sup_abs(&f[..nx]);

    let mut windows = Vec::new();
    let mut slack = f64::NEG_INFINITY;
    let mut boundary = 0.0_f64;
    let mut n0 = 0;
    while n0 + 1 < nt {
        let n1 = (n0 + steps).min(nt - 1);
        // History from converged levels 0..=n0.
        let history: Vec<Vec<f64>> = (n0 + 1..=n1)
            .into_par_iter()
            .map(|n| {
                let mut h = vec![0.0; nx];
                for m in 0..=n0 {
                    accumulate_row(table.row(n, m), &f[m * nx..(m + 1) * nx], &mut h);
                }
                h
            })
            .collect();

        let mut ratios = Vec::new();
        let mut prev_update = f64::NAN;
        let mut iterations = 0;
        let mut converged = false;
        let mut update = f64::INFINITY;
        let v_sup_before = sup_abs(&v[..(n0 + 1) * nx]);
        while iterations < config.max_iters {
            iterations += 1;
            for n in n0 + 1..=n1 {
                let (vr, fr) = (&v[n * nx..(n + 1) * nx], &mut f[n * nx..(n + 1) * nx]);
                eval_row(source, &grid, n, vr, fr)?;
            }
            let mapped: Vec<Vec<f64>> = (n0 + 1..=n1)
                .into_par_iter()
                .map(|n| {
                    let mut acc = history[n - n0 - 1].clone();
                    for m in n0 + 1..=n {
                        accumulate_row(table.row(n, m), &f[m * nx..(m + 1) * nx], &mut acc);
                    }
                    for x in acc.iter_mut() {
                        *x = -*x;
                    }
                    acc
                })
                .collect();

            // A-priori bound on the map's output, level by level.
            let mut f_run = f_sup_prefix[n0];
            let mut v_run = v_sup_before;
            for (j, row) in mapped.iter().enumerate() {
                let n = n0 + 1 + j;
                f_run = f_run.max(sup_abs(&f[n * nx..(n + 1) * nx]));
                v_run = v_run.max(sup_abs(row));
                slack = slack.max(v_run - grid.t(n) / a * f_run);
            }

            update = 0.0;
            for (j, row) in mapped.iter().enumerate() {
                let n = n0 + 1 + j;
                for (vi, mi) in v[n * nx..(n + 1) * nx].iter_mut().zip(row) {
                    let next = *vi + config.damping * (mi - *vi);
                    update = update.max((next - *vi).abs());
                    *vi = next;
                }
            }
            if !update.is_finite() {
                return Err(PsgeError::NonFinite(format!(
                    "Picard update in window starting at t = {}",
                    grid.t(n0)
                )));
            }
            if prev_update.is_finite() && prev_update > 0.0 {
                ratios.push(update / prev_update);
            }
            prev_update = update;
            if update < config.fix_tol {
                converged = true;
                break;
            }
        }
        if !converged {
            let tail = ratios.iter().rev().take(10).rev().copied().collect();
            return Err(PsgeError::Diverged {
                iterations,
                ratios: tail,
            });
        }
        // Refresh F on the converged levels for later windows.
        for n in n0 + 1..=n1 {
            let (vr, fr) = (&v[n * nx..(n + 1) * nx], &mut f[n * nx..(n + 1) * nx]);
            eval_row(source, &grid, n, vr, fr)?;
            f_sup_prefix[n] = f_sup_prefix[n - 1].max(sup_abs(fr));
        }
        let edge = (n0..=n1)
            .map(|n| f[n * nx].abs().max(f[n * nx + nx - 1].abs()))
            .fold(0.0_f64, f64::max);
        boundary = boundary.max(edge * table.mass_up_to(n1));
        windows.push(WindowReport {
            t_start: grid.t(n0),
            t_end: grid.t(n1),
            iterations,
            contraction_ratios: ratios,
            final_update: update,
            converged,
        });
        n0 = n1;
    }

    let v = GridFunction::from_values(grid, v)?;
    let sup_history = (0..nt).map(|n| [grid.t(n), sup_abs(v.row(n))]).collect();
    let report = SolveReport {
        params,
        grid,
        config: *config,
        window_len: eta,
        iterations: windows.iter().map(|w| w.iterations).collect(),
        contraction_ratios: windows
            .iter()
            .flat_map(|w| w.contraction_ratios.iter().copied())
            .collect(),
        converged: windows.iter().all(|w| w.converged),
        windows,
        sup_history,
        a_priori_slack: slack.max(0.0),
        boundary_truncation: boundary,
        truncation_ok: boundary < config.fix_tol,
    };
    Ok((v, report))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn sup_norm_of_time() {
        let grid = SpaceTimeGrid::new(0.0, 1.0, 5, 2.0, 11).unwrap();
        let v = GridFunction::from_fn(grid, |_, t| t).unwrap();
        assert!((sup_norm(&v, 1.0) - 1.0).abs() < 1e-15);
        assert!((sup_norm(&v, 2.0) - 2.0).abs() < 1e-15);
        assert_eq!(sup_norm(&GridFunction::zeros(grid), 2.0), 0.0);
    }

    #[test]
    fn config_validation() {
        let grid = SpaceTimeGrid::new(0.0, 1.0, 5, 2.0, 11).unwrap();
        assert!(PicardConfig::default().validate(&grid).is_ok());
        let bad = PicardConfig {
            damping: 0.0,
            ..Default::default()
        };
        assert!(bad.validate(&grid).is_err());
        let long = PicardConfig {
            window_len: Some(3.0),
            ..Default::default()
        };
        assert!(long.validate(&grid).is_err());
        assert_eq!(PicardConfig::default().resolved_window(1.0, &grid), 0.5);
    }
}
