//! Monte Carlo ensembles over Brownian initial data.
//!
//! Each path draws `g'` as a two-sided Brownian motion pinned to 0 at the
//! origin, solves `w = g'(y*)` across the x-grid, and the ensemble
//! aggregates means and variances. Paths are independent work units with
//! per-path seeds split deterministically from the master seed, so runs are
//! bit-reproducible at any parallelism.

use crate::initial_data::InitialData;
use crate::pwl_convex::PwlConvex;
use crate::variational::{greatest_minimizer, Kernel, SearchConfig};
use crate::{Error, Result};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use std::io::Write;

/// One solved path: `w` row, `y*` row, and the pathwise monotonicity flag.
type PathRow = (Vec<f64>, Vec<f64>, bool);

/// Brownian path sampling parameters.
#[derive(Clone, Copy, Debug, Serialize, Deserialize)]
pub struct PathConfig {
    /// Sample spacing of `g'`.
    pub step: f64,
    /// Fractional widening of the auto-computed feasible window.
    pub margin_frac: f64,
    /// Explicit sampling window; must cover the feasible interval of every
    /// grid point (with margin) or the run is rejected.
    pub window: Option<(f64, f64)>,
}

impl Default for PathConfig {
    fn default() -> Self {
        PathConfig {
            step: 0.01,
            margin_frac: 0.1,
            window: None,
        }
    }
}

/// Ensemble statistics per grid point.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct EnsembleStats {
    pub x_grid: Vec<f64>,
    pub t: f64,
    pub n_paths: usize,
    pub seed: u64,
    pub mean_w: Vec<f64>,
    /// Sample variance of `w` (n - 1 normalization).
    pub var_w: Vec<f64>,
    pub mean_y_star: Vec<f64>,
    /// Three standard errors of `mean_w`.
    pub ci_half: Vec<f64>,
    /// Paths whose `y*` row failed the nondecreasing check.
    pub monotone_violations: usize,
    /// Sampling window actually used.
    pub path_window: (f64, f64),
    pub step: f64,
}

impl EnsembleStats {
    /// CSV rows `x,mean_w,var_w,mean_ystar,ci_half`.
    pub fn write_csv<W: Write>(
        &self,
        out: &mut W,
        header_comment: Option<&str>,
    ) -> std::io::Result<()> {
        if let Some(c) = header_comment {
            writeln!(out, "# {c}")?;
        }
        writeln!(out, "x,mean_w,var_w,mean_ystar,ci_half")?;
        for i in 0..self.x_grid.len() {
            writeln!(
                out,
                "{:.16e},{:.16e},{:.16e},{:.16e},{:.16e}",
                self.x_grid[i], self.mean_w[i], self.var_w[i], self.mean_y_star[i], self.ci_half[i]
            )?;
        }
        Ok(())
    }
}

fn required_window(
    h: &PwlConvex,
    x_grid: &[f64],
    t: f64,
    margin_frac: f64,
    step: f64,
) -> (f64, f64) {
    let (m_lo, m_hi) = h.slope_range();
    let x_min = x_grid.iter().copied().fold(f64::INFINITY, f64::min);
    let x_max = x_grid.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let lo = x_min - m_hi * t;
    let hi = x_max - m_lo * t;
    let pad = margin_frac * (hi - lo);
    // the sampler pins the path at the origin, so the window must span 0
    ((lo - pad).min(-step), (hi + pad).max(step))
}

/// Deterministic per-path seed stream (Weyl offsets of the master seed).
fn path_seed(master: u64, index: usize) -> u64 {
    master.wrapping_add((index as u64 + 1).wrapping_mul(0x9e37_79b9_7f4a_7c15))
}

/// Run the ensemble with a custom path sampler (`seed -> data`).
#[allow(clippy::too_many_arguments)]
pub fn ensemble_run_with<F>(
    h: &PwlConvex,
    sampler: F,
    x_grid: &[f64],
    t: f64,
    n_paths: usize,
    seed: u64,
    cfg: &SearchConfig,
    window: (f64, f64),
    step: f64,
) -> Result<EnsembleStats>
where
    F: Fn(u64) -> Result<InitialData> + Sync,
{
    if n_paths < 2 {
        return Err(Error::Config("n_paths must be at least 2".into()));
    }
    if !(t > 0.0) {
        return Err(Error::Domain(format!("t must be positive, got {t}")));
    }
    if x_grid.windows(2).any(|w| w[0] >= w[1]) || x_grid.is_empty() {
        return Err(Error::Config("x_grid must be strictly increasing".into()));
    }
    let kernel = Kernel::Sharp(h.conjugate());
    let rows: Result<Vec<PathRow>> = (0..n_paths)
        .into_par_iter()
        .map(|i| {
            let data = sampler(path_seed(seed, i))?;
            let mut ws = Vec::with_capacity(x_grid.len());
            let mut ys = Vec::with_capacity(x_grid.len());
            for &x in x_grid {
                let r = greatest_minimizer(&kernel, &data, x, t, cfg)?;
                ys.push(r.y_star);
                ws.push(data.eval_gprime(r.y_star));
            }
            // fp resolution of a quadratic minimum is sqrt(eps)-scale, so
            // the pathwise monotonicity slack sits just above it
            let monotone = ys
                .windows(2)
                .all(|w| w[1] >= w[0] - 1e-7 * (1.0 + w[0].abs()));
            Ok((ws, ys, monotone))
        })
        .collect();
    let rows = rows?;

    let n = x_grid.len();
    let nf = n_paths as f64;
    let mut mean_w = vec![0.0; n];
    let mut mean_y = vec![0.0; n];
    let mut violations = 0usize;
    for (ws, ys, monotone) in &rows {
        for i in 0..n {
            mean_w[i] += ws[i];
            mean_y[i] += ys[i];
        }
        if !monotone {
            violations += 1;
        }
    }
    for i in 0..n {
        mean_w[i] /= nf;
        mean_y[i] /= nf;
    }
    let mut var_w = vec![0.0; n];
    for (ws, _, _) in &rows {
        for i in 0..n {
            let d = ws[i] - mean_w[i];
            var_w[i] += d * d;
        }
    }
    for v in &mut var_w {
        *v /= nf - 1.0;
    }
    let ci_half = var_w.iter().map(|&v| 3.0 * (v / nf).sqrt()).collect();
    Ok(EnsembleStats {
        x_grid: x_grid.to_vec(),
        t,
        n_paths,
        seed,
        mean_w,
        var_w,
        mean_y_star: mean_y,
        ci_half,
        monotone_violations: violations,
        path_window: window,
        step,
    })
}

/// Brownian-data ensemble: per-path `g'` sampled over the feasible window
/// of the whole grid (widened by the configured margin), then solved
/// pathwise across the grid.
pub fn ensemble_run(
    h: &PwlConvex,
    path_cfg: &PathConfig,
    x_grid: &[f64],
    t: f64,
    n_paths: usize,
    seed: u64,
    cfg: &SearchConfig,
) -> Result<EnsembleStats> {
    let need = required_window(h, x_grid, t, path_cfg.margin_frac, path_cfg.step);
    let window = match path_cfg.window {
        Some(w) => {
            if w.0 > need.0 || w.1 < need.1 {
                return Err(Error::Config(format!(
                    "path window [{}, {}] too small; the run needs [{}, {}]",
                    w.0, w.1, need.0, need.1
                )));
            }
            w
        }
        None => need,
    };
    let step = path_cfg.step;
    ensemble_run_with(
        h,
        |s| InitialData::sample_brownian(window.0, window.1, step, s),
        x_grid,
        t,
        n_paths,
        seed,
        cfg,
        window,
        step,
    )
}

/// Variance trend summary: the solution variance must not decrease as |x|
/// grows, up to Monte Carlo bands. The pointwise relation between `var_w`
/// and the mean greatest minimizer is reported for inspection, not
/// asserted.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct VarianceProfile {
    pub x_grid: Vec<f64>,
    pub var_w: Vec<f64>,
    /// Gaussian-approximation standard error of each variance estimate.
    pub se_var: Vec<f64>,
    pub mean_y_star: Vec<f64>,
    /// Nondecreasing in |x| within 3-standard-error bands.
    pub trend_pass: bool,
}

pub fn variance_profile(stats: &EnsembleStats) -> VarianceProfile {
    let nf = stats.n_paths as f64;
    let se: Vec<f64> = stats
        .var_w
        .iter()
        .map(|&v| v * (2.0 / (nf - 1.0)).sqrt())
        .collect();
    // order by |x| and demand a nondecreasing trend within bands
    let mut order: Vec<usize> = (0..stats.x_grid.len()).collect();
    order.sort_by(|&a, &b| {
        stats.x_grid[a]
            .abs()
            .partial_cmp(&stats.x_grid[b].abs())
            .unwrap()
    });
    let mut pass = true;
    for pair in order.windows(2) {
        let (i, j) = (pair[0], pair[1]);
        let band = 3.0 * (se[i] + se[j]);
        if stats.var_w[j] < stats.var_w[i] - band {
            pass = false;
        }
    }
    VarianceProfile {
        x_grid: stats.x_grid.clone(),
        var_w: stats.var_w.clone(),
        se_var: se,
        mean_y_star: stats.mean_y_star.clone(),
        trend_pass: pass,
    }
}
