//! Finite-difference oracle for `ε u_xxt + c² u_xx − u_tt − a u_t = f(x, t, u)`.
//!
//! Three-level scheme on the grid:
//!
//! * `u_tt`, `u_t` by central differences in time;
//! * `c² u_xx` explicit at level `n`;
//! * `ε u_xxt` as `ε D₂[θ (u^{n+1} − u^n) + (1−θ)(u^n − u^{n−1})] / dt`,
//!   which at `θ = ½` is the centred `ε D₂(u^{n+1} − u^{n−1}) / (2 dt)`;
//! * the source explicit at level `n`.
//!
//! Only `u^{n+1}` appears in `(1/dt² + a/(2dt)) − (εθ/dt) D₂`, a symmetric
//! tridiagonal system. With `θ = ½` a von Neumann analysis gives stability
//! for `c dt/dx ≤ 1` independently of ε; the scheme enforces `≤ 0.9`.
//! Edges are Dirichlet.

use serde::{Deserialize, Serialize};

use crate::error::{PsgeError, Result};
use crate::model::{GridFunction, MediumParams, SpaceTimeGrid};
use crate::volterra::{check_wave_medium, picard_solve, sup_norm, PicardConfig, SolveReport};
use crate::waves::TravellingWave;

pub const CFL_SAFETY: f64 = 0.9;
/// `sup |u|` beyond this aborts the run.
pub const INSTABILITY_THRESHOLD: f64 = 1e6;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FdScheme {
    pub dx: f64,
    pub dt: f64,
    /// Implicitness weight of the `ε u_xxt` term.
    pub theta: f64,
    /// `c dt / dx`.
    pub cfl: f64,
}

impl FdScheme {
    pub fn new(grid: &SpaceTimeGrid, c: f64, theta: f64) -> Result<Self> {
        grid.validate()?;
        if !(0.0..=1.0).contains(&theta) {
            return Err(PsgeError::invalid(
                "theta",
                format!("must lie in [0, 1], got {theta}"),
            ));
        }
        if !(c > 0.0 && c.is_finite()) {
            return Err(PsgeError::invalid("c", format!("must be > 0, got {c}")));
        }
        let (dx, dt) = (grid.dx(), grid.dt());
        let cfl = c * dt / dx;
        if cfl > CFL_SAFETY * (1.0 + 1e-12) {
            return Err(PsgeError::invalid(
                "dt",
                format!("c dt / dx = {cfl} exceeds the stability bound {CFL_SAFETY}"),
            ));
        }
        Ok(FdScheme { dx, dt, theta, cfl })
    }

    /// Centred scheme with the given grid.
    pub fn centered(grid: &SpaceTimeGrid, c: f64) -> Result<Self> {
        Self::new(grid, c, 0.5)
    }

    fn matches(&self, grid: &SpaceTimeGrid) -> bool {
        let close = |a: f64, b: f64| (a - b).abs() <= 1e-12 * a.abs().max(b.abs());
        close(self.dx, grid.dx()) && close(self.dt, grid.dt())
    }
}

/// Dirichlet data at `x_min` and `x_max`.
#[derive(Debug, Clone, Copy)]
pub enum Boundary {
    Constant {
        left: f64,
        right: f64,
    },
    /// Pin the edges to a travelling wave's trace.
    Trace(TravellingWave),
}

impl Boundary {
    /// The wave's far-field values, sampled well outside the grid at `t = 0`.
    pub fn far_field(wave: &TravellingWave, grid: &SpaceTimeGrid) -> Result<Self> {
        let reach = 1e3 * (grid.x_max - grid.x_min).max(wave.a());
        Ok(Boundary::Constant {
            left: wave.value(grid.x_min - reach, 0.0)?,
            right: wave.value(grid.x_max + reach, 0.0)?,
        })
    }

    fn values(&self, grid: &SpaceTimeGrid, t: f64) -> Result<(f64, f64)> {
        match self {
            Boundary::Constant { left, right } => Ok((*left, *right)),
            Boundary::Trace(w) => Ok((w.value(grid.x_min, t)?, w.value(grid.x_max, t)?)),
        }
    }
}

/// `sin u + γ`.
pub fn sine_gordon_source(gamma: f64) -> impl Fn(f64, f64, f64) -> f64 {
    move |_, _, u| u.sin() + gamma
}

/// Solves `(diag) x_i + off (x_{i−1} + x_{i+1}) = rhs_i` in place (Thomas).
fn thomas_symmetric(diag: f64, off: f64, rhs: &mut [f64], scratch: &mut Vec<f64>) {
    let n = rhs.len();
    if n == 0 {
        return;
    }
    if off == 0.0 {
        rhs.iter_mut().for_each(|r| *r /= diag);
        return;
    }
    scratch.clear();
    scratch.resize(n, 0.0);
    let mut denom = diag;
    rhs[0] /= denom;
    for i in 1..n {
        scratch[i] = off / denom;
        denom = diag - off * scratch[i];
        rhs[i] = (rhs[i] - off * rhs[i - 1]) / denom;
    }
    for i in (0..n - 1).rev() {
        rhs[i] -= scratch[i + 1] * rhs[i + 1];
    }
}

fn d2(u: &[f64], i: usize, inv_dx2: f64) -> f64 {
    (u[i - 1] - 2.0 * u[i] + u[i + 1]) * inv_dx2
}

#[allow(clippy::too_many_arguments)]
fn march(
    epsilon: f64,
    a: f64,
    c: f64,
    f0: &dyn Fn(f64) -> f64,
    f1: &dyn Fn(f64) -> f64,
    source: &dyn Fn(f64, f64, f64) -> f64,
    grid: &SpaceTimeGrid,
    scheme: &FdScheme,
    boundary: &Boundary,
) -> Result<GridFunction> {
    if !scheme.matches(grid) {
        return Err(PsgeError::Shape(
            "scheme steps differ from the grid spacing".into(),
        ));
    }
    if !(epsilon >= 0.0 && a > 0.0 && c > 0.0) {
        return Err(PsgeError::invalid(
            "params",
            "need epsilon >= 0, a > 0, c > 0",
        ));
    }
    let (nx, nt) = (grid.nx, grid.nt);
    if nx < 3 {
        return Err(PsgeError::invalid(
            "nx",
            "finite differences need at least 3 points",
        ));
    }
    let (dt, theta) = (scheme.dt, scheme.theta);
    let inv_dx2 = 1.0 / (scheme.dx * scheme.dx);
    let c2 = c * c;
    let mut u = vec![0.0; nx * nt];

    let (l0, r0) = boundary.values(grid, 0.0)?;
    for (i, ui) in u[..nx].iter_mut().enumerate() {
        *ui = f0(grid.x(i));
    }
    u[0] = l0;
    u[nx - 1] = r0;

    // Taylor start, with u_tt from the equation at t = 0.
    let v0: Vec<f64> = (0..nx).map(|i| f1(grid.x(i))).collect();
    let (l1, r1) = boundary.values(grid, grid.t(1))?;
    for i in 1..nx - 1 {
        let u_tt = epsilon * d2(&v0, i, inv_dx2) + c2 * d2(&u[..nx], i, inv_dx2)
            - a * v0[i]
            - source(grid.x(i), 0.0, u[i]);
        u[nx + i] = u[i] + dt * v0[i] + 0.5 * dt * dt * u_tt;
    }
    u[nx] = l1;
    u[2 * nx - 1] = r1;

    let alpha = 1.0 / (dt * dt) + a / (2.0 * dt);
    let implicit = epsilon * theta / dt;
    let diag = alpha + 2.0 * implicit * inv_dx2;
    let off = -implicit * inv_dx2;
    let mut rhs = vec![0.0; nx - 2];
    let mut scratch = Vec::with_capacity(nx);
    for n in 1..nt - 1 {
        let t = grid.t(n);
        let (prev, rest) = u.split_at_mut(n * nx);
        let (cur, next) = rest.split_at_mut(nx);
        let prev = &prev[(n - 1) * nx..];
        let next = &mut next[..nx];
        let (lb, rb) = boundary.values(grid, grid.t(n + 1))?;
        for i in 1..nx - 1 {
            let d2c = d2(cur, i, inv_dx2);
            let d2p = d2(prev, i, inv_dx2);
            rhs[i - 1] = epsilon / dt * ((1.0 - 2.0 * theta) * d2c - (1.0 - theta) * d2p)
                + c2 * d2c
                + (2.0 * cur[i] - prev[i]) / (dt * dt)
                + a * prev[i] / (2.0 * dt)
                - source(grid.x(i), t, cur[i]);
        }
        rhs[0] -= off * lb;
        rhs[nx - 3] -= off * rb;
        thomas_symmetric(diag, off, &mut rhs, &mut scratch);
        next[0] = lb;
        next[nx - 1] = rb;
        next[1..nx - 1].copy_from_slice(&rhs);
        let sup = next.iter().fold(0.0_f64, |m, x| m.max(x.abs()));
        if !sup.is_finite() || sup > INSTABILITY_THRESHOLD {
            return Err(PsgeError::Unstable {
                t: grid.t(n + 1),
                sup,
            });
        }
    }
    GridFunction::from_values(*grid, u)
}

/// Full third-order problem with `u(x,0) = f0`, `u_t(x,0) = f1`.
#[allow(clippy::too_many_arguments)]
pub fn fd_solve_full(
    params: &MediumParams,
    f0: &dyn Fn(f64) -> f64,
    f1: &dyn Fn(f64) -> f64,
    source: &dyn Fn(f64, f64, f64) -> f64,
    grid: &SpaceTimeGrid,
    scheme: &FdScheme,
    boundary: &Boundary,
) -> Result<GridFunction> {
    params.validate()?;
    march(
        params.epsilon,
        params.a,
        params.c,
        f0,
        f1,
        source,
        grid,
        scheme,
        boundary,
    )
}

/// Reduced telegraph problem `c² w_xx − w_tt − a w_t = f̄`; ε in `params` is ignored.
pub fn fd_solve_reduced(
    params: &MediumParams,
    f0: &dyn Fn(f64) -> f64,
    f1: &dyn Fn(f64) -> f64,
    source: &dyn Fn(f64, f64, f64) -> f64,
    grid: &SpaceTimeGrid,
    scheme: &FdScheme,
    boundary: &Boundary,
) -> Result<GridFunction> {
    march(
        0.0, params.a, params.c, f0, f1, source, grid, scheme, boundary,
    )
}

/// Discrete energy `E^{n+½} = ½ Σ [((u^{n+1} − u^n)/dt)² + c² D₊u^{n+1} D₊u^n] dx`
/// for `n = 0..nt−2`. Non-increasing for the source-free scheme with
/// time-independent Dirichlet data.
pub fn discrete_energy(u: &GridFunction, c: f64) -> Vec<f64> {
    let grid = u.grid();
    let (dx, dt) = (grid.dx(), grid.dt());
    (0..grid.nt - 1)
        .map(|n| {
            let (a, b) = (u.row(n), u.row(n + 1));
            let kinetic: f64 = a.iter().zip(b).map(|(p, q)| ((q - p) / dt).powi(2)).sum();
            let strain: f64 = (0..grid.nx - 1)
                .map(|i| (b[i + 1] - b[i]) * (a[i + 1] - a[i]) / (dx * dx))
                .sum();
            0.5 * (kinetic + c * c * strain) * dx
        })
        .collect()
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CrossValidation {
    pub params: MediumParams,
    pub grid: SpaceTimeGrid,
    /// Spatial refinement of the finite-difference grid relative to `grid`.
    pub fd_refinement: usize,
    /// `sup |u_fd − (w + v)|` on the shared nodes.
    pub discrepancy: f64,
    /// Richardson estimate of the finite-difference error.
    pub fd_error_estimate: f64,
    /// Richardson estimate of the Picard discretization error.
    pub picard_error_estimate: f64,
    /// `max(1e-3, 5 · (fd + picard estimates))`.
    pub tolerance: f64,
    pub passed: bool,
    /// `sup |v|`, for scale.
    pub v_sup: f64,
    pub solve: SolveReport,
}

const FD_REFINEMENT: usize = 5;

fn refined(grid: &SpaceTimeGrid, fx: usize, c: f64) -> Result<(SpaceTimeGrid, usize)> {
    let nx = fx * (grid.nx - 1) + 1;
    let dx = grid.dx() / fx as f64;
    let mut ft = 1;
    while c * grid.dt() / ft as f64 > CFL_SAFETY * dx {
        ft += 1;
    }
    let g = SpaceTimeGrid::new(
        grid.x_min,
        grid.x_max,
        nx,
        grid.t_max,
        ft * (grid.nt - 1) + 1,
    )?;
    Ok((g, ft))
}

fn fd_for_wave(
    params: &MediumParams,
    wave: &TravellingWave,
    grid: &SpaceTimeGrid,
    epsilon_zero: bool,
) -> Result<GridFunction> {
    let scheme = FdScheme::centered(grid, params.c)?;
    let f0 = |x: f64| wave.value(x, 0.0).unwrap_or(f64::NAN);
    let f1 = |x: f64| wave.derivatives(x, 0.0).map(|d| d.w_t).unwrap_or(f64::NAN);
    let src = sine_gordon_source(params.gamma);
    let bc = Boundary::Trace(*wave);
    if epsilon_zero {
        fd_solve_reduced(params, &f0, &f1, &src, grid, &scheme, &bc)
    } else {
        fd_solve_full(params, &f0, &f1, &src, grid, &scheme, &bc)
    }
}

/// `max |fine(i·fx, n·ft) − coarse(i, n)|`.
fn sup_diff_on(
    coarse: &GridFunction,
    fine: &GridFunction,
    fx: usize,
    ft: usize,
    shift: impl Fn(usize, usize) -> f64,
) -> f64 {
    let g = coarse.grid();
    let mut m = 0.0_f64;
    for n in 0..g.nt {
        for i in 0..g.nx {
            m = m.max((fine.get(i * fx, n * ft) - coarse.get(i, n) - shift(i, n)).abs());
        }
    }
    m
}

/// Compares a full finite-difference solve against `w + v` from the
/// Picard pipeline on the nodes of `grid`.
///
/// The finite-difference grid is `grid` refined five times in space (and in
/// time as the CFL bound requires); both error estimates come from a
/// second run at half resolution.
pub fn cross_validate(
    params: &MediumParams,
    wave: &TravellingWave,
    grid: &SpaceTimeGrid,
    config: &PicardConfig,
) -> Result<CrossValidation> {
    check_wave_medium(wave, params)?;
    let (fine, ft) = refined(grid, FD_REFINEMENT, params.c)?;
    let u_fd = fd_for_wave(params, wave, &fine, false)?;
    let (v, solve) = picard_solve(wave, params, grid, config)?;
    let w_on = |i: usize, n: usize| wave.value(grid.x(i), grid.t(n)).unwrap_or(f64::NAN);
    let discrepancy = sup_diff_on(&v, &u_fd, FD_REFINEMENT, ft, w_on);
    if !discrepancy.is_finite() {
        return Err(PsgeError::NonFinite("cross-validation discrepancy".into()));
    }

    // Error estimates from half-resolution runs (second order: diff / 3).
    let fd_error_estimate = if (fine.nx - 1).is_multiple_of(2) && (fine.nt - 1).is_multiple_of(2) {
        let half = SpaceTimeGrid::new(
            fine.x_min,
            fine.x_max,
            (fine.nx - 1) / 2 + 1,
            fine.t_max,
            (fine.nt - 1) / 2 + 1,
        )?;
        let u_half = fd_for_wave(params, wave, &half, false)?;
        sup_diff_on(&u_half, &u_fd, 2, 2, |_, _| 0.0) / 3.0
    } else {
        f64::NAN
    };
    let picard_error_estimate =
        if (grid.nx - 1).is_multiple_of(2) && (grid.nt - 1).is_multiple_of(2) {
            let half = SpaceTimeGrid::new(
                grid.x_min,
                grid.x_max,
                (grid.nx - 1) / 2 + 1,
                grid.t_max,
                (grid.nt - 1) / 2 + 1,
            )?;
            let cfg = PicardConfig {
                window_len: config.window_len.map(|w| w.min(half.t_max)),
                ..*config
            };
            let (v_half, _) = picard_solve(wave, params, &half, &cfg)?;
            sup_diff_on(&v_half, &v, 2, 2, |_, _| 0.0) / 3.0
        } else {
            f64::NAN
        };
    let combined = fd_error_estimate + picard_error_estimate;
    let tolerance = if combined.is_finite() {
        1e-3_f64.max(5.0 * combined)
    } else {
        1e-3
    };
    Ok(CrossValidation {
        params: *params,
        grid: *grid,
        fd_refinement: FD_REFINEMENT,
        discrepancy,
        fd_error_estimate,
        picard_error_estimate,
        tolerance,
        passed: discrepancy < tolerance,
        v_sup: sup_norm(&v, grid.t_max),
        solve,
    })
}

/// `sup |w_fd − w|` for the reduced problem started from the wave's own
/// initial data, with `w` the closed form.
pub fn reduced_wave_error(
    params: &MediumParams,
    wave: &TravellingWave,
    grid: &SpaceTimeGrid,
) -> Result<f64> {
    check_wave_medium(wave, params)?;
    let w_fd = fd_for_wave(params, wave, grid, true)?;
    let mut m = 0.0_f64;
    for n in 0..grid.nt {
        for i in 0..grid.nx {
            m = m.max((w_fd.get(i, n) - wave.value(grid.x(i), grid.t(n))?).abs());
        }
    }
    Ok(m)
}
