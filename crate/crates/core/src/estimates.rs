//! Boundary-layer estimates: Gronwall envelopes, the diffusion horizon
//! `T_ε`, and ε-sweeps that measure `r_ε(t) = sup_x |v|` against them.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{PsgeError, Result};
use crate::model::{MediumParams, SpaceTimeGrid};
use crate::volterra::{picard_solve, PicardConfig};
use crate::waves::{w_xxt_bound, TravellingWave};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LayerParams {
    /// Bound on `|w_xxt|`.
    pub beta: f64,
    pub a: f64,
    /// Order exponent `k ∈ (0, 1)`.
    pub k_exp: f64,
    /// Strictly positive, sorted descending.
    pub epsilon_list: Vec<f64>,
    /// Simulated window is `min(T_ε, cap)`; `None` means `4a`.
    pub horizon_cap: Option<f64>,
}

impl LayerParams {
    /// Layer parameters for the kink with damping `a`; `β` comes from
    /// [`w_xxt_bound`].
    pub fn for_kink(a: f64, k_exp: f64, epsilon_list: Vec<f64>) -> Result<Self> {
        let p = LayerParams {
            beta: w_xxt_bound(a)?,
            a,
            k_exp,
            epsilon_list,
            horizon_cap: None,
        };
        p.validate()?;
        Ok(p)
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.beta > 0.0 && self.beta.is_finite()) {
            return Err(PsgeError::invalid(
                "beta",
                format!("must be > 0, got {}", self.beta),
            ));
        }
        if !(self.a > 0.0 && self.a.is_finite()) {
            return Err(PsgeError::invalid(
                "a",
                format!("must be > 0, got {}", self.a),
            ));
        }
        if !(self.k_exp > 0.0 && self.k_exp < 1.0) {
            return Err(PsgeError::invalid(
                "k_exp",
                format!("must lie in (0, 1), got {}", self.k_exp),
            ));
        }
        if self.epsilon_list.is_empty() {
            return Err(PsgeError::invalid("epsilon_list", "must not be empty"));
        }
        if self
            .epsilon_list
            .iter()
            .any(|e| !(*e > 0.0 && e.is_finite()))
        {
            return Err(PsgeError::invalid(
                "epsilon_list",
                "entries must be finite and > 0",
            ));
        }
        if self.epsilon_list.windows(2).any(|w| w[1] >= w[0]) {
            return Err(PsgeError::invalid(
                "epsilon_list",
                "must be strictly descending",
            ));
        }
        if let Some(cap) = self.horizon_cap {
            if !(cap > 0.0 && cap.is_finite()) {
                return Err(PsgeError::invalid(
                    "horizon_cap",
                    format!("must be > 0, got {cap}"),
                ));
            }
        }
        Ok(())
    }

    pub fn cap(&self) -> f64 {
        self.horizon_cap.unwrap_or(4.0 * self.a)
    }
}

/// Uniform Gronwall bound `β (T/a) e^{T/a} ε`, valid for every `t ∈ [0, T]`.
pub fn gronwall_envelope(t_final: f64, beta: f64, a: f64, epsilon: f64) -> f64 {
    let x = t_final / a;
    beta * x * x.exp() * epsilon
}

/// Exact solution `β ε (e^{t/a} − 1)` of the equality case of
/// `r(t) = (1/a) ∫₀^t r + (β/a) ε t`.
pub fn gronwall_sharp(t: f64, beta: f64, a: f64, epsilon: f64) -> f64 {
    beta * epsilon * (t / a).exp_m1()
}

/// The bound `β e^{2T/a} ε` whose crossing with `ε^k` defines `T_ε`.
pub fn layer_bound(t_final: f64, beta: f64, a: f64, epsilon: f64) -> f64 {
    beta * (2.0 * t_final / a).exp() * epsilon
}

/// Diffusion horizon `T_ε = (a/2) ln(1 / (β ε^{1−k}))`.
///
/// Returns [`PsgeError::Horizon`] when `β ε^{1−k} > 1`, i.e. ε is not yet
/// small enough for the estimate to say anything. Exactly `1` gives `0`.
pub fn t_epsilon(a: f64, beta: f64, epsilon: f64, k_exp: f64) -> Result<f64> {
    if !(a > 0.0 && beta > 0.0 && epsilon > 0.0) {
        return Err(PsgeError::invalid(
            "t_epsilon",
            "a, beta and epsilon must be > 0",
        ));
    }
    if !(k_exp > 0.0 && k_exp < 1.0) {
        return Err(PsgeError::invalid(
            "k_exp",
            format!("must lie in (0, 1), got {k_exp}"),
        ));
    }
    let (lb, le) = (beta.ln(), (1.0 - k_exp) * epsilon.ln());
    let mut log_arg = -(lb + le);
    // Cancellation noise when β ε^{1−k} is 1 up to rounding.
    if log_arg.abs() <= 4.0 * f64::EPSILON * (lb.abs() + le.abs()) {
        log_arg = 0.0;
    }
    if log_arg < 0.0 {
        return Err(PsgeError::Horizon(format!(
            "beta * eps^(1-k) = {:e} > 1 for eps = {epsilon:e}",
            (-log_arg).exp()
        )));
    }
    Ok(0.5 * a * log_arg)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", content = "detail", rename_all = "snake_case")]
pub enum EntryStatus {
    Ok,
    /// `T_ε ≤ 0` (or a degenerate window): nothing to check, not a failure.
    HorizonNotReached(String),
    /// The solver or a precondition failed.
    Failed(String),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LayerEntry {
    pub epsilon: f64,
    /// `T_ε`, or NaN when the horizon is not reached.
    pub t_eps: f64,
    /// Checked window `min(T_ε, cap)`, rounded up to the grid.
    pub horizon: f64,
    pub capped: bool,
    /// `[t, r_ε(t)]` on the checked window.
    pub sup_history: Vec<[f64; 2]>,
    pub max_r: f64,
    /// `β (T/a) e^{T/a} ε` with `T` the checked window.
    pub gronwall: f64,
    /// `β e^{2T/a} ε` with `T` the checked window.
    pub layer_bound: f64,
    pub eps_k: f64,
    /// `|β e^{2T_ε/a} ε − ε^k| / ε^k`.
    pub identity_error: f64,
    pub bound_satisfied: bool,
    pub iterations: Vec<usize>,
    pub a_priori_slack: f64,
    pub status: EntryStatus,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LayerReport {
    pub layer: LayerParams,
    pub entries: Vec<LayerEntry>,
    /// Least-squares slope of `ln max_{t ≤ T_common} r_ε` against `ln ε`.
    pub slope: Option<f64>,
    /// Common window used for the slope fit.
    pub slope_window: Option<f64>,
    /// No failed entry and every checked entry satisfies its bounds.
    pub all_satisfied: bool,
}

impl LayerReport {
    /// CSV summary `epsilon,T_eps,max_r,gronwall,eps_k,pass`.
    pub fn to_csv(&self) -> String {
        let mut out = String::from("epsilon,T_eps,max_r,gronwall,eps_k,pass\n");
        for e in &self.entries {
            let pass = match e.status {
                EntryStatus::Ok => e.bound_satisfied.to_string(),
                EntryStatus::HorizonNotReached(_) => "horizon_not_reached".into(),
                EntryStatus::Failed(_) => "failed".into(),
            };
            let f = |x: f64| {
                if x.is_nan() {
                    "nan".to_string()
                } else {
                    format!("{x:.16e}")
                }
            };
            out.push_str(&format!(
                "{},{},{},{},{},{pass}\n",
                f(e.epsilon),
                f(e.t_eps),
                f(e.max_r),
                f(e.gronwall),
                f(e.eps_k)
            ));
        }
        out
    }
}

fn blank_entry(epsilon: f64, layer: &LayerParams, t_eps: f64, status: EntryStatus) -> LayerEntry {
    let eps_k = epsilon.powf(layer.k_exp);
    LayerEntry {
        epsilon,
        t_eps,
        horizon: 0.0,
        capped: false,
        sup_history: Vec::new(),
        max_r: f64::NAN,
        gronwall: f64::NAN,
        layer_bound: f64::NAN,
        eps_k,
        identity_error: f64::NAN,
        bound_satisfied: false,
        iterations: Vec::new(),
        a_priori_slack: f64::NAN,
        status,
    }
}

fn run_entry(
    base: &MediumParams,
    wave: &TravellingWave,
    grid: &SpaceTimeGrid,
    layer: &LayerParams,
    config: &PicardConfig,
    epsilon: f64,
) -> LayerEntry {
    let t_eps = match t_epsilon(layer.a, layer.beta, epsilon, layer.k_exp) {
        Ok(t) => t,
        Err(PsgeError::Horizon(msg)) => {
            return blank_entry(
                epsilon,
                layer,
                f64::NAN,
                EntryStatus::HorizonNotReached(msg),
            )
        }
        Err(e) => return blank_entry(epsilon, layer, f64::NAN, EntryStatus::Failed(e.to_string())),
    };
    let mut entry = blank_entry(epsilon, layer, t_eps, EntryStatus::Ok);
    let eps_k = entry.eps_k;
    entry.identity_error = (layer_bound(t_eps, layer.beta, layer.a, epsilon) - eps_k).abs() / eps_k;

    let target = t_eps.min(layer.cap());
    entry.capped = t_eps > layer.cap();
    let dt = grid.dt();
    // Smallest grid prefix covering the target window.
    let nt = ((target / dt) * (1.0 - 1e-12)).ceil() as usize + 1;
    if target < dt || nt < 2 {
        entry.status =
            EntryStatus::HorizonNotReached(format!("T_eps = {t_eps:e} is below one time step"));
        return entry;
    }
    if nt > grid.nt {
        entry.status = EntryStatus::Failed(format!(
            "grid t_max = {} does not cover min(T_eps, cap) = {target}",
            grid.t_max
        ));
        return entry;
    }
    let sub = match grid.truncated(nt) {
        Ok(g) => g,
        Err(e) => {
            entry.status = EntryStatus::Failed(e.to_string());
            return entry;
        }
    };
    let params = match base.with_epsilon(epsilon) {
        Ok(p) => p,
        Err(e) => {
            entry.status = EntryStatus::Failed(e.to_string());
            return entry;
        }
    };
    let cfg = PicardConfig {
        window_len: config.window_len.map(|w| w.min(sub.t_max)),
        ..*config
    };
    let (_, report) = match picard_solve(wave, &params, &sub, &cfg) {
        Ok(r) => r,
        Err(e) => {
            entry.status = EntryStatus::Failed(e.to_string());
            return entry;
        }
    };
    entry.horizon = sub.t_max;
    // Only levels inside [0, T_ε] are checked against the bounds.
    let check_until = target * (1.0 + 1e-12);
    entry.sup_history = report.sup_history.clone();
    entry.max_r = report
        .sup_history
        .iter()
        .filter(|p| p[0] <= check_until)
        .fold(0.0_f64, |m, p| m.max(p[1]));
    entry.gronwall = gronwall_envelope(target, layer.beta, layer.a, epsilon);
    entry.layer_bound = layer_bound(target, layer.beta, layer.a, epsilon);
    let slack = config.fix_tol;
    entry.bound_satisfied = report
        .sup_history
        .iter()
        .filter(|p| p[0] <= check_until)
        .all(|p| {
            p[1] <= entry.gronwall + slack
                && p[1] <= entry.layer_bound + slack
                && p[1] <= eps_k + slack
        });
    entry.iterations = report.iterations;
    entry.a_priori_slack = report.a_priori_slack;
    entry
}

/// Runs the Picard solver for each ε in the sweep and checks `r_ε` against
/// the Gronwall envelope, `β e^{2T/a} ε` and `ε^k` on `[0, min(T_ε, cap)]`.
///
/// `params_base` supplies `a`, `c`, `γ`; its ε is replaced per entry. The
/// grid's `t_max` must cover every entry's window; each entry solves on the
/// shortest prefix of the grid that does.
pub fn verify_order(
    params_base: &MediumParams,
    wave: &TravellingWave,
    grid: &SpaceTimeGrid,
    layer: &LayerParams,
    config: &PicardConfig,
) -> Result<LayerReport> {
    layer.validate()?;
    params_base.validate()?;
    grid.validate()?;
    config.validate(grid)?;
    if (layer.a - params_base.a).abs() > 1e-12 * params_base.a {
        return Err(PsgeError::invalid(
            "a",
            format!(
                "layer a = {} differs from medium a = {}",
                layer.a, params_base.a
            ),
        ));
    }
    let entries: Vec<LayerEntry> = layer
        .epsilon_list
        .par_iter()
        .map(|&eps| run_entry(params_base, wave, grid, layer, config, eps))
        .collect();

    let checked: Vec<&LayerEntry> = entries
        .iter()
        .filter(|e| e.status == EntryStatus::Ok)
        .collect();
    let common = checked
        .iter()
        .map(|e| e.t_eps.min(layer.cap()))
        .fold(f64::INFINITY, f64::min);
    let (slope, slope_window) = if checked.len() >= 2 {
        let pts: Vec<(f64, f64)> = checked
            .iter()
            .map(|e| {
                let m = e
                    .sup_history
                    .iter()
                    .filter(|p| p[0] <= common * (1.0 + 1e-12))
                    .fold(0.0_f64, |m, p| m.max(p[1]));
                (e.epsilon.ln(), m.ln())
            })
            .collect();
        (least_squares_slope(&pts), Some(common))
    } else {
        (None, None)
    };
    let all_satisfied = entries.iter().all(|e| match e.status {
        EntryStatus::Ok => e.bound_satisfied,
        EntryStatus::HorizonNotReached(_) => true,
        EntryStatus::Failed(_) => false,
    });
    Ok(LayerReport {
        layer: layer.clone(),
        entries,
        slope,
        slope_window,
        all_satisfied,
    })
}

fn least_squares_slope(pts: &[(f64, f64)]) -> Option<f64> {
    let n = pts.len() as f64;
    if pts.len() < 2 || pts.iter().any(|(x, y)| !x.is_finite() || !y.is_finite()) {
        return None;
    }
    let mx = pts.iter().map(|p| p.0).sum::<f64>() / n;
    let my = pts.iter().map(|p| p.1).sum::<f64>() / n;
    let sxx: f64 = pts.iter().map(|p| (p.0 - mx).powi(2)).sum();
    let sxy: f64 = pts.iter().map(|p| (p.0 - mx) * (p.1 - my)).sum();
    (sxx > 0.0).then(|| sxy / sxx)
}
