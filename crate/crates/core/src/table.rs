//! Product-integration weights for the space-time convolution with `K`.
//!
//! A grid function `F` is interpolated by hat functions, `Λ_j(ξ)` in space
//! and `φ_m(τ)` in time. Because `K` depends only on `(x − ξ, t − τ)`, the
//! weight of `F_j^m` in `(K ∗ F)(x_i, t_n)` depends on `|i − j|` and on
//! whether `φ_m` is the first half-hat (`m = n`), a full hat (lag `n − m`)
//! or the last half-hat (`m = 0`, a function of `n`).
//!
//! The weights are evaluated exactly from the spatial Fourier transform of
//! `K`, which solves `K̃'' + (a + εk²) K̃' + c²k² K̃ = δ(t)`:
//!
//! `K̃(k, s) = (e^{μ₊s} − e^{μ₋s}) / (μ₊ − μ₋)`, `μ² + (a + εk²) μ + c²k² = 0`.
//!
//! Time-hat integrals of `e^{μs}` are elementary; the spatial hat contributes
//! `h sinc²(kh/2)`; the inverse transform at `x = dh` is a folded cosine sum
//! over the wavenumbers `2πm/(Nh)` with period `N` chosen well beyond the
//! kernel's reach. This stays exact when `√(εt)` is far below the grid
//! spacing, where sampling `K` pointwise would not resolve it.

use std::f64::consts::PI;

use num_complex::Complex64;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{PsgeError, Result};
use crate::kernel::KernelParams;
use crate::model::{GridFunction, SpaceTimeGrid};

const SERIES_RADIUS: f64 = 0.5;
const MAX_FFT: usize = 1 << 15;
const MAX_WAVENUMBERS: usize = 20_000_000;
const TAIL_TOL: f64 = 1e-13;
const SUPPORT_TOL: f64 = 1e-14;
const ALIAS_TOL: f64 = 1e-13;

/// `(e^z − 1 − z)/z²`.
fn phi2(z: Complex64) -> Complex64 {
    if z.norm() < SERIES_RADIUS {
        let mut term = Complex64::new(0.5, 0.0);
        let mut sum = term;
        for j in 1..18 {
            term = term * z / (j as f64 + 2.0);
            sum += term;
        }
        sum
    } else {
        (z.exp() - 1.0 - z) / (z * z)
    }
}

/// `(2 sinh(z/2)/z)² = φ₂(z) + φ₂(−z)`.
fn hat_symbol(z: Complex64) -> Complex64 {
    let mut term = Complex64::new(1.0, 0.0);
    let mut sum = term;
    let z2 = z * z;
    for j in 1..12 {
        let jj = 2.0 * j as f64;
        term = term * z2 / ((jj + 1.0) * (jj + 2.0));
        sum += term;
    }
    sum
}

/// Which time hat a weight integrates against, in the lag variable
/// `s = t_n − τ`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub enum TimeHat {
    /// `1 − s/Δt` on `[0, Δt]`.
    Start,
    /// Full hat centred at `lag·Δt`, `lag ≥ 1`.
    Full { lag: usize },
    /// `(s − t_{n−1})/Δt` on `[t_{n−1}, t_n]`, `n ≥ 1`.
    End { n: usize },
}

impl TimeHat {
    /// `∫ ψ(s) e^{μs} ds`.
    fn transform(&self, mu: Complex64, dt: f64) -> Complex64 {
        let z = mu * dt;
        match *self {
            TimeHat::Start => phi2(z) * dt,
            TimeHat::Full { lag } => {
                let c = lag as f64 * dt;
                if z.norm() < SERIES_RADIUS {
                    (mu * c).exp() * hat_symbol(z) * dt
                } else {
                    ((mu * (c + dt)).exp() - 2.0 * (mu * c).exp() + (mu * (c - dt)).exp())
                        / (mu * z)
                }
            }
            TimeHat::End { n } => {
                let tn = n as f64 * dt;
                if z.norm() < SERIES_RADIUS {
                    (mu * tn).exp() * phi2(-z) * dt
                } else {
                    ((mu * (tn - dt)).exp() - (mu * tn).exp() * (1.0 - z)) / (mu * z)
                }
            }
        }
    }

    fn support_end(&self, dt: f64) -> f64 {
        match *self {
            TimeHat::Start => dt,
            TimeHat::Full { lag } => (lag + 1) as f64 * dt,
            TimeHat::End { n } => n as f64 * dt,
        }
    }

    /// `∫ ψ(s) (1 − e^{−as})/a ds`, the hat integral of the kernel mass.
    pub fn mass_integral(&self, a: f64, dt: f64) -> f64 {
        let h0 = self.transform(Complex64::new(0.0, 0.0), dt).re;
        let ha = self.transform(Complex64::new(-a, 0.0), dt).re;
        (h0 - ha) / a
    }
}

/// `∫ ψ(s) K̃(k, s) ds`.
fn time_integral(hat: TimeHat, k: f64, p: &KernelParams, dt: f64) -> f64 {
    let (a, c, eps) = (p.a(), p.c(), p.epsilon());
    let lam = a + eps * k * k;
    let ck = c * k.abs();
    let half = 0.5 * lam;
    let d = (half - ck) * (half + ck);
    let s_max = hat.support_end(dt);
    let im_over = |w: f64| hat.transform(Complex64::new(-half, w), dt).im / w;
    if d < 0.0 {
        return im_over((-d).sqrt());
    }
    let sd = d.sqrt();
    if sd * s_max < 1e-3 {
        let eta = 1e-20 / s_max;
        let at_zero = im_over(eta);
        return if sd == 0.0 {
            at_zero
        } else {
            2.0 * at_zero - im_over(sd)
        };
    }
    let mu_m = -half - sd;
    let mu_p = ck * ck / mu_m;
    let hp = hat.transform(Complex64::new(mu_p, 0.0), dt).re;
    let hm = hat.transform(Complex64::new(mu_m, 0.0), dt).re;
    (hp - hm) / (mu_p - mu_m)
}

fn sinc2(x: f64) -> f64 {
    if x.abs() < 1e-4 {
        1.0 - x * x / 3.0
    } else {
        let s = x.sin() / x;
        s * s
    }
}

/// `∫ Λ(dh − x) e^{−κ|x|}/(2κ) dx` for the hat `Λ` of half-width `h`.
fn hat_exponential(d: usize, h: f64, kappa: f64) -> f64 {
    let kh = kappa * h;
    let k3h = kappa.powi(3) * h;
    if d == 0 {
        // (κh − 1 + e^{−κh}) / (κ³h)
        (kh + (-kh).exp_m1()) / k3h
    } else {
        (-kappa * d as f64 * h).exp() * (kh.cosh() - 1.0) / k3h
    }
}

/// Spatial weights `W_d`, `d = 0..=N/2`, for one time hat, by the folded
/// cosine sum. Returns the weights, the number of wavenumbers used and the
/// estimated relative tail.
///
/// The cusp of `K` at `x = 0` makes `∫ψK̃ ~ α/k²` with `α = ∫ψ e^{−bs} ds / ε`;
/// that part is replaced by `α/(k² + κ²)`, whose weights are known in
/// closed form, so the summed remainder decays like `k⁻⁶`.
fn spatial_weights(
    hat: TimeHat,
    p: &KernelParams,
    h: f64,
    dt: f64,
    n_fft: usize,
) -> (Vec<f64>, usize, f64) {
    let dk = 2.0 * PI / (n_fft as f64 * h);
    let alpha = hat.transform(Complex64::new(-p.b(), 0.0), dt).re / p.epsilon();
    let kappa = 4.0 / h;
    let g = |m: usize| {
        let k = m as f64 * dk;
        let t = time_integral(hat, k, p, dt) - alpha / (k * k + kappa * kappa);
        h * sinc2(0.5 * k * h) * t
    };
    let g0 = g(0);
    let scale = dk / (2.0 * PI);
    // Weights are judged against the row's total mass.
    let reference = hat.mass_integral(p.a(), dt) / scale;
    let mut fold = vec![0.0; n_fft];
    let mut m = 1;
    let mut block = 0usize;
    let mut tail = f64::INFINITY;
    while m < MAX_WAVENUMBERS {
        let mut block_l1 = 0.0;
        let end = (block + 1) * n_fft;
        while m < end {
            let v = g(m);
            fold[m % n_fft] += v;
            block_l1 += v.abs();
            m += 1;
        }
        block += 1;
        // Conservative for a k⁻⁴ or faster decay of the remainder.
        tail = block_l1 * block as f64;
        if block >= 2 && tail <= TAIL_TOL * reference {
            break;
        }
    }
    let cos_table: Vec<f64> = (0..n_fft)
        .map(|j| (2.0 * PI * j as f64 / n_fft as f64).cos())
        .collect();
    let w = (0..=n_fft / 2)
        .map(|d| {
            let mut acc = g0 + 2.0 * fold[0];
            for (j, cj) in fold.iter().enumerate().skip(1) {
                acc += 2.0 * cj * cos_table[(j * d) % n_fft];
            }
            scale * acc + alpha * hat_exponential(d, h, kappa)
        })
        .collect();
    (w, m, tail / reference)
}

/// Weights for one time hat, truncated to their numerical support.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct WeightRow {
    pub hat: TimeHat,
    /// `W_d` for `d = 0, 1, …`; zero beyond.
    pub weights: Vec<f64>,
    /// Exact `∫ψ(s) (1 − e^{−as})/a ds`, which `Σ_{d∈ℤ} W_d` must equal.
    pub mass: f64,
}

impl WeightRow {
    pub fn get(&self, d: usize) -> f64 {
        self.weights.get(d).copied().unwrap_or(0.0)
    }

    /// `W_0 + 2 Σ_{d≥1} W_d`.
    pub fn line_sum(&self) -> f64 {
        self.weights
            .iter()
            .enumerate()
            .map(|(d, w)| if d == 0 { *w } else { 2.0 * w })
            .sum()
    }
}

/// Diagnostics of a table build.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TableInfo {
    pub n_fft: usize,
    pub max_wavenumbers: usize,
    /// Worst estimated relative tail of the wavenumber sums.
    pub tail_estimate: f64,
    /// Worst `|W_d|/max|W|` near the period edge.
    pub alias_ratio: f64,
    /// Worst relative deviation of a row's line sum from its exact mass.
    pub checksum_error: f64,
    /// Smallest weight across the table (negative values flag a problem
    /// when the kernel is nonnegative).
    pub min_weight: f64,
}

/// Convolution weights for a fixed `(params, grid)`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct KernelTable {
    grid: SpaceTimeGrid,
    params: KernelParams,
    start: WeightRow,
    /// `full[lag − 1]`, lag = 1..nt−1.
    full: Vec<WeightRow>,
    /// `end[n − 1]`, n = 1..nt−1.
    end: Vec<WeightRow>,
    info: TableInfo,
}

fn initial_fft_size(p: &KernelParams, grid: &SpaceTimeGrid) -> usize {
    let t = grid.t_max;
    let reach = p.c() * t + 12.0 * (p.epsilon() * t).sqrt() + 4.0 * grid.dx();
    let need = 2.0 * reach / grid.dx() + 16.0;
    (need.ceil() as usize).next_power_of_two().max(32)
}

impl KernelTable {
    pub fn build(params: &KernelParams, grid: &SpaceTimeGrid) -> Result<Self> {
        params.medium.validate()?;
        grid.validate()?;
        let mut n_fft = initial_fft_size(params, grid);
        loop {
            let table = Self::build_with(params, grid, n_fft)?;
            if table.info.alias_ratio <= ALIAS_TOL {
                return Ok(table);
            }
            if n_fft >= MAX_FFT {
                return Err(PsgeError::Truncation {
                    value: table.info.alias_ratio,
                    cut: n_fft as f64 * grid.dx() / 2.0,
                });
            }
            n_fft *= 2;
        }
    }

    fn build_with(params: &KernelParams, grid: &SpaceTimeGrid, n_fft: usize) -> Result<Self> {
        let (h, dt) = (grid.dx(), grid.dt());
        let nt = grid.nt;
        let mut hats = vec![TimeHat::Start];
        hats.extend((1..nt).map(|lag| TimeHat::Full { lag }));
        hats.extend((1..nt).map(|n| TimeHat::End { n }));

        let rows: Vec<(WeightRow, usize, f64, f64)> = hats
            .par_iter()
            .map(|&hat| {
                let (w, used, tail) = spatial_weights(hat, params, h, dt, n_fft);
                let peak = w.iter().fold(0.0_f64, |m, v| m.max(v.abs()));
                let edge = w[3 * n_fft / 8..]
                    .iter()
                    .fold(0.0_f64, |m, v| m.max(v.abs()));
                let alias = if peak > 0.0 { edge / peak } else { 0.0 };
                let keep = w
                    .iter()
                    .rposition(|v| v.abs() > SUPPORT_TOL * peak)
                    .map_or(1, |i| i + 1)
                    .min(grid.nx);
                let weights = w[..keep].to_vec();
                let mass = hat.mass_integral(params.a(), dt);
                (WeightRow { hat, weights, mass }, used, tail, alias)
            })
            .collect();

        let mut info = TableInfo {
            n_fft,
            max_wavenumbers: 0,
            tail_estimate: 0.0,
            alias_ratio: 0.0,
            checksum_error: 0.0,
            min_weight: f64::INFINITY,
        };
        for (row, used, tail, alias) in &rows {
            info.max_wavenumbers = info.max_wavenumbers.max(*used);
            info.tail_estimate = info.tail_estimate.max(*tail);
            info.alias_ratio = info.alias_ratio.max(*alias);
            let err = (row.line_sum() - row.mass).abs() / row.mass.abs();
            info.checksum_error = info.checksum_error.max(err);
            info.min_weight = row.weights.iter().fold(info.min_weight, |m, v| m.min(*v));
            if row.weights.iter().any(|v| !v.is_finite()) {
                return Err(PsgeError::NonFinite(format!(
                    "kernel weights for {:?}",
                    row.hat
                )));
            }
        }
        let mut it = rows.into_iter().map(|r| r.0);
        let start = it.next().expect("start row");
        let full: Vec<WeightRow> = it.by_ref().take(nt - 1).collect();
        let end: Vec<WeightRow> = it.collect();
        Ok(KernelTable {
            grid: *grid,
            params: *params,
            start,
            full,
            end,
            info,
        })
    }

    pub fn grid(&self) -> &SpaceTimeGrid {
        &self.grid
    }

    pub fn params(&self) -> &KernelParams {
        &self.params
    }

    pub fn info(&self) -> &TableInfo {
        &self.info
    }

    /// Weights coupling output level `n ≥ 1` to source level `m ≤ n`.
    pub fn row(&self, n: usize, m: usize) -> &WeightRow {
        assert!(
            n >= 1 && m <= n && n < self.grid.nt,
            "level pair ({n}, {m}) out of range"
        );
        if m == n {
            &self.start
        } else if m == 0 {
            &self.end[n - 1]
        } else {
            &self.full[n - m - 1]
        }
    }

    /// `∫∫ K(x_i − ξ, t_n − τ) Λ_j(ξ) φ_m(τ) dξ dτ` with `d = |i − j|`.
    pub fn weight(&self, n: usize, m: usize, d: usize) -> f64 {
        self.row(n, m).get(d)
    }

    /// Total kernel mass seen by output level `n`: `∫₀^{t_n} (1 − e^{−as})/a ds`.
    pub fn mass_up_to(&self, n: usize) -> f64 {
        let a = self.params.a();
        let t = self.grid.t(n);
        (t + (-a * t).exp_m1() / a) / a
    }
}

/// Adds `Σ_j W_{|i−j|} f_j` to `out_i` for every `i`.
pub(crate) fn accumulate_row(row: &WeightRow, f: &[f64], out: &mut [f64]) {
    let nx = f.len();
    let w = &row.weights;
    let supp = w.len();
    for (i, o) in out.iter_mut().enumerate() {
        let lo = i.saturating_sub(supp - 1);
        let hi = (i + supp).min(nx);
        let mut acc = 0.0;
        for (j, fj) in f.iter().enumerate().take(hi).skip(lo) {
            let d = i.abs_diff(j);
            acc += w[d] * fj;
        }
        *o += acc;
    }
}

/// `(K ∗ F)(x_i, t_n)` on the table's grid: product integration of the
/// piecewise-linear interpolant of `source`. Zero at `t = 0`.
pub fn convolve_kernel(source: &GridFunction, table: &KernelTable) -> Result<GridFunction> {
    let grid = *source.grid();
    if !grid.same_shape(table.grid()) {
        return Err(PsgeError::Shape(format!(
            "source grid {:?} does not match kernel table grid {:?}",
            grid,
            table.grid()
        )));
    }
    let nx = grid.nx;
    let rows: Vec<Vec<f64>> = (1..grid.nt)
        .into_par_iter()
        .map(|n| {
            let mut out = vec![0.0; nx];
            for m in 0..=n {
                accumulate_row(table.row(n, m), source.row(m), &mut out);
            }
            out
        })
        .collect();
    let mut values = vec![0.0; nx];
    for r in rows {
        values.extend(r);
    }
    GridFunction::from_values(grid, values)
}
