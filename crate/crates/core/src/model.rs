//! Shared parameter and grid types, and the source term of the remainder
//! problem.
//!
//! The full problem is
//!
//! ```text
//! ε u_xxt + c² u_xx − u_tt − a u_t = f(x, t, u),   u(x,0) = f0, u_t(x,0) = f1
//! ```
//!
//! Setting ε = 0 gives the damped telegraph equation for the reduced solution
//! `w`, and the remainder `v = u − w` solves the full linear operator with
//! zero initial data and the source `F_w(x,t,v) = f(w+v) − f̄(w) − ε w_xxt`.

use serde::{Deserialize, Serialize};

use crate::error::{PsgeError, Result};
use crate::waves::TravellingWave;

/// Physical and asymptotic constants of the perturbed operator.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MediumParams {
    pub epsilon: f64,
    pub a: f64,
    pub c: f64,
    pub gamma: f64,
}

impl MediumParams {
    pub fn new(epsilon: f64, a: f64, c: f64, gamma: f64) -> Result<Self> {
        let p = MediumParams {
            epsilon,
            a,
            c,
            gamma,
        };
        p.validate()?;
        Ok(p)
    }

    pub fn validate(&self) -> Result<()> {
        for (name, value) in [("epsilon", self.epsilon), ("a", self.a), ("c", self.c)] {
            if !(value.is_finite() && value > 0.0) {
                return Err(PsgeError::invalid(
                    name,
                    format!("must be finite and > 0, got {value}"),
                ));
            }
        }
        if !self.gamma.is_finite() {
            return Err(PsgeError::invalid("gamma", "must be finite"));
        }
        let b = self.b();
        if !(b.is_finite() && b > 0.0) {
            return Err(PsgeError::invalid(
                "epsilon",
                format!("c²/ε = {b} is not finite"),
            ));
        }
        Ok(())
    }

    /// `b = c² / ε`.
    pub fn b(&self) -> f64 {
        self.c * self.c / self.epsilon
    }

    /// `a < b`, i.e. `a ε < c²`. The boundary `a ε = c²` counts as
    /// non-dissipative.
    pub fn dissipative_regime(&self) -> bool {
        self.a * self.epsilon < self.c * self.c
    }

    pub fn with_epsilon(&self, epsilon: f64) -> Result<Self> {
        MediumParams::new(epsilon, self.a, self.c, self.gamma)
    }
}

/// Uniform rectangle `[x_min, x_max] × [0, t_max]`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SpaceTimeGrid {
    pub x_min: f64,
    pub x_max: f64,
    pub nx: usize,
    pub t_max: f64,
    pub nt: usize,
}

impl SpaceTimeGrid {
    pub fn new(x_min: f64, x_max: f64, nx: usize, t_max: f64, nt: usize) -> Result<Self> {
        let g = SpaceTimeGrid {
            x_min,
            x_max,
            nx,
            t_max,
            nt,
        };
        g.validate()?;
        Ok(g)
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.x_min.is_finite() && self.x_max.is_finite() && self.x_min < self.x_max) {
            return Err(PsgeError::invalid("x_max", "need finite x_min < x_max"));
        }
        if self.nx < 2 {
            return Err(PsgeError::invalid("nx", "need at least 2 samples"));
        }
        if !(self.t_max.is_finite() && self.t_max > 0.0) {
            return Err(PsgeError::invalid("t_max", "must be finite and > 0"));
        }
        if self.nt < 2 {
            return Err(PsgeError::invalid("nt", "need at least 2 samples"));
        }
        Ok(())
    }

    pub fn dx(&self) -> f64 {
        (self.x_max - self.x_min) / (self.nx - 1) as f64
    }

    pub fn dt(&self) -> f64 {
        self.t_max / (self.nt - 1) as f64
    }

    pub fn x(&self, i: usize) -> f64 {
        self.x_min + i as f64 * self.dx()
    }

    pub fn t(&self, n: usize) -> f64 {
        n as f64 * self.dt()
    }

    pub fn xs(&self) -> Vec<f64> {
        (0..self.nx).map(|i| self.x(i)).collect()
    }

    pub fn ts(&self) -> Vec<f64> {
        (0..self.nt).map(|n| self.t(n)).collect()
    }

    /// Same spacing, shorter horizon: the first `nt` time levels.
    pub fn truncated(&self, nt: usize) -> Result<Self> {
        let nt = nt.min(self.nt);
        SpaceTimeGrid::new(self.x_min, self.x_max, self.nx, self.t(nt - 1), nt)
    }

    pub fn same_shape(&self, other: &SpaceTimeGrid) -> bool {
        self.nx == other.nx
            && self.nt == other.nt
            && (self.dx() - other.dx()).abs() <= 1e-12 * self.dx()
            && (self.dt() - other.dt()).abs() <= 1e-12 * self.dt()
            && (self.x_min - other.x_min).abs() <= 1e-12 * self.dx()
    }
}

/// Samples on a [`SpaceTimeGrid`].
///
/// Each time level is stored as one contiguous spatial row, so the inner
/// convolution loop over `ξ` walks memory linearly.
#[derive(Debug, Clone, PartialEq)]
pub struct GridFunction {
    grid: SpaceTimeGrid,
    values: Vec<f64>,
}

impl GridFunction {
    pub fn zeros(grid: SpaceTimeGrid) -> Self {
        GridFunction {
            grid,
            values: vec![0.0; grid.nx * grid.nt],
        }
    }

    pub fn from_fn(grid: SpaceTimeGrid, f: impl Fn(f64, f64) -> f64) -> Result<Self> {
        let mut values = Vec::with_capacity(grid.nx * grid.nt);
        for n in 0..grid.nt {
            let t = grid.t(n);
            for i in 0..grid.nx {
                values.push(f(grid.x(i), t));
            }
        }
        GridFunction::from_values(grid, values)
    }

    /// `values[n * nx + i]` is the sample at `(x_i, t_n)`.
    pub fn from_values(grid: SpaceTimeGrid, values: Vec<f64>) -> Result<Self> {
        if values.len() != grid.nx * grid.nt {
            return Err(PsgeError::Shape(format!(
                "expected {}×{} = {} samples, got {}",
                grid.nx,
                grid.nt,
                grid.nx * grid.nt,
                values.len()
            )));
        }
        if let Some(k) = values.iter().position(|v| !v.is_finite()) {
            return Err(PsgeError::NonFinite(format!(
                "sample at (i={}, n={}) is {}",
                k % grid.nx,
                k / grid.nx,
                values[k]
            )));
        }
        Ok(GridFunction { grid, values })
    }

    pub fn grid(&self) -> &SpaceTimeGrid {
        &self.grid
    }

    pub fn get(&self, i: usize, n: usize) -> f64 {
        self.values[n * self.grid.nx + i]
    }

    pub fn row(&self, n: usize) -> &[f64] {
        let nx = self.grid.nx;
        &self.values[n * nx..(n + 1) * nx]
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn into_values(self) -> Vec<f64> {
        self.values
    }

    /// `sup_x |v(x, t_n)|` for every time level.
    pub fn sup_profile(&self) -> Vec<f64> {
        (0..self.grid.nt)
            .map(|n| self.row(n).iter().fold(0.0_f64, |m, v| m.max(v.abs())))
            .collect()
    }
}

/// Source term `F(x, t, v)` of the remainder problem.
pub trait Source: Sync {
    fn eval(&self, x: f64, t: f64, v: f64) -> f64;

    /// Lipschitz constant in `v`.
    fn lipschitz(&self) -> f64;
}

/// `F_w(x,t,v) = sin(v + w) − sin w − ε w_xxt` for a travelling wave `w`.
///
/// `forcing_epsilon` is the ε multiplying `w_xxt`; it normally equals the
/// medium's ε but can be set to zero to drop the diffusive forcing.
#[derive(Debug, Clone, Copy)]
pub struct SuperconductiveSource {
    pub wave: TravellingWave,
    pub forcing_epsilon: f64,
}

impl SuperconductiveSource {
    pub fn new(wave: TravellingWave, params: &MediumParams) -> Self {
        SuperconductiveSource {
            wave,
            forcing_epsilon: params.epsilon,
        }
    }
}

impl Source for SuperconductiveSource {
    fn eval(&self, x: f64, t: f64, v: f64) -> f64 {
        let w = self.wave.value(x, t).unwrap_or(f64::NAN);
        let w_xxt = self
            .wave
            .derivatives(x, t)
            .map(|d| d.w_xxt)
            .unwrap_or(f64::NAN);
        (v + w).sin() - w.sin() - self.forcing_epsilon * w_xxt
    }

    fn lipschitz(&self) -> f64 {
        1.0
    }
}

/// Evaluates [`SuperconductiveSource`] once, propagating wave-domain errors.
pub fn source_superconductive(
    x: f64,
    t: f64,
    v: f64,
    wave: &TravellingWave,
    params: &MediumParams,
) -> Result<f64> {
    let w = wave.value(x, t)?;
    let w_xxt = wave.derivatives(x, t)?.w_xxt;
    Ok((v + w).sin() - w.sin() - params.epsilon * w_xxt)
}

/// Worst observed ratio `|F(v1) − F(v2)| / |v1 − v2|` over the sample
/// tuples `(x, t, v1, v2)`. Tuples with `v1 == v2` are skipped.
pub fn lipschitz_bound_check(
    f: impl Fn(f64, f64, f64) -> f64,
    samples: &[(f64, f64, f64, f64)],
) -> Result<f64> {
    if samples.is_empty() {
        return Err(PsgeError::invalid("samples", "empty sample set"));
    }
    let mut worst: Option<f64> = None;
    for &(x, t, v1, v2) in samples {
        if v1 == v2 {
            continue;
        }
        let ratio = (f(x, t, v1) - f(x, t, v2)).abs() / (v1 - v2).abs();
        worst = Some(worst.map_or(ratio, |w: f64| w.max(ratio)));
    }
    worst.ok_or_else(|| PsgeError::invalid("samples", "every tuple has v1 == v2"))
}
