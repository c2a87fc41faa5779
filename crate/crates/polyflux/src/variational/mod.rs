//! The Hopf-Lax functional and the greatest-minimizer solver.
//!
//! For a kernel `L` (the conjugate of the flux) and initial data `g`, the
//! functional is
//!
//! ```text
//! Q(y; x, t) = t L((x - y)/t) + g(y),
//! ```
//!
//! finite exactly on the interval `[x - m_{N+1} t, x - m_1 t]`. The solver
//! evaluates `u(x, t) = min_y Q`, selects the greatest minimizer `y*(x, t)`
//! (the supremum of the minimizing set when the minimum is attained on
//! intervals), and produces the conservation-law solution
//! `w(x, t) = g'(y*(x, t))`.
//!
//! For piecewise-constant-derivative data the functional is piecewise
//! linear in `y` and the search reduces to exact enumeration over finitely
//! many breakpoints; see [`discrete`].

pub mod discrete;

use crate::extended::ExtReal;
use crate::initial_data::InitialData;
use crate::pwl_convex::ConjugateFn;
use crate::{Error, Result};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use std::fmt;
use std::io::Write;
use std::sync::Arc;

/// Smooth kernel backed by evaluator closures (produced by the mollifier).
#[derive(Clone)]
pub struct SmoothKernel {
    pub value: Arc<dyn Fn(f64) -> f64 + Send + Sync>,
    pub deriv: Arc<dyn Fn(f64) -> f64 + Send + Sync>,
    /// Slope range of the underlying polygonal flux; the search window pads
    /// it by one on each side, beyond which the kernel's growth forces the
    /// functional above its minimum.
    pub slope_range: (f64, f64),
}

impl fmt::Debug for SmoothKernel {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("SmoothKernel")
            .field("slope_range", &self.slope_range)
            .finish()
    }
}

/// The minimization kernel in `Q(y) = t * kernel((x - y)/t) + g(y)`.
#[derive(Clone, Debug)]
pub enum Kernel {
    /// Exact polygonal conjugate: +∞ outside its domain.
    Sharp(ConjugateFn),
    /// Smooth superlinear kernel (finite everywhere).
    Smooth(SmoothKernel),
    /// `z -> z^2`; with t = 1 this is the parabolic kernel `(x - y)^2`.
    TestQuadratic,
}

impl Kernel {
    pub fn eval(&self, z: f64) -> ExtReal {
        match self {
            Kernel::Sharp(l) => l.eval(z),
            Kernel::Smooth(k) => ExtReal::Finite((k.value)(z)),
            Kernel::TestQuadratic => ExtReal::Finite(z * z),
        }
    }

    pub fn as_sharp(&self) -> Option<&ConjugateFn> {
        match self {
            Kernel::Sharp(l) => Some(l),
            _ => None,
        }
    }
}

/// Search configuration for the continuous minimizer.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct SearchConfig {
    /// Grid samples per kernel segment image (M).
    pub samples_per_segment: usize,
    /// Relative tie tolerance η: candidates with
    /// `Q <= q_min + η (1 + |q_min|)` count as tied.
    pub tie_rel: f64,
    /// Golden-section interval width at which bracket refinement stops.
    pub golden_tol: f64,
    /// Relative tolerance for detecting flat (continuum-of-minimizers) runs
    /// and locating their right edge.
    pub flat_rel: f64,
    /// Explicit search window override (used by kernels without a finite
    /// feasibility interval).
    pub window: Option<(f64, f64)>,
}

impl Default for SearchConfig {
    fn default() -> Self {
        SearchConfig {
            samples_per_segment: 1024,
            tie_rel: 1e-9,
            golden_tol: 1e-12,
            flat_rel: 1e-12,
            window: None,
        }
    }
}

/// How the greatest minimizer sits relative to the kernel and the data.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum MinimizerKind {
    /// At a vertex of `L` (the feasible-interval endpoints included).
    VertexOfL,
    /// Interior to a segment of `L` where `g' = c_j`.
    FlatSegment,
    /// At a jump of `g'` (piecewise-constant-derivative data only).
    VertexOfG,
    /// A vertex of `L` and a jump of `g'` coincide (measure-zero case).
    Coincident,
}

impl fmt::Display for MinimizerKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let s = match self {
            MinimizerKind::VertexOfL => "vertex_of_l",
            MinimizerKind::FlatSegment => "flat_segment",
            MinimizerKind::VertexOfG => "vertex_of_g",
            MinimizerKind::Coincident => "coincident",
        };
        f.write_str(s)
    }
}

/// Output of the greatest-minimizer search.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct MinimizerResult {
    /// The greatest minimizer `y*(x, t)`.
    pub y_star: f64,
    /// Minimum value of the functional.
    pub q_min: f64,
    pub kind: MinimizerKind,
    /// True when at least two distinct candidates tie, or a whole interval
    /// of minimizers was detected.
    pub multiple: bool,
    /// The tied `(y, Q(y))` candidates (deduplicated, ascending in y).
    pub candidates: Vec<(f64, f64)>,
}

/// The Hopf-Lax functional `Q(y; x, t) = t * kernel((x-y)/t) + g(y)`.
/// +∞ where the kernel is infeasible.
pub fn functional_q(
    kernel: &Kernel,
    data: &InitialData,
    x: f64,
    t: f64,
    y: f64,
) -> Result<ExtReal> {
    if !(t > 0.0) {
        return Err(Error::Domain(format!("t must be positive, got {t}")));
    }
    Ok(match kernel.eval((x - y) / t) {
        ExtReal::Finite(v) => ExtReal::Finite(t * v + data.eval_g(y)),
        ExtReal::PosInf => ExtReal::PosInf,
    })
}

fn check_flux_signs(l: &ConjugateFn) -> Result<()> {
    let (lo, hi) = l.domain();
    if !(lo < 0.0 && 0.0 < hi) {
        return Err(Error::FluxSigns(format!(
            "kernel domain [{lo}, {hi}] must straddle 0"
        )));
    }
    Ok(())
}

/// Greatest minimizer of the Hopf-Lax functional.
///
/// Piecewise-constant-derivative data with a sharp kernel dispatches to the
/// exact combinatorial solver; otherwise the search samples every kernel
/// segment image, refines each local-minimum bracket by golden section,
/// keeps all kernel vertices and window endpoints as candidates, and scans
/// for flat runs whose right edge realizes the supremum of the minimizing
/// set.
pub fn greatest_minimizer(
    kernel: &Kernel,
    data: &InitialData,
    x: f64,
    t: f64,
    cfg: &SearchConfig,
) -> Result<MinimizerResult> {
    if !(t > 0.0) {
        return Err(Error::Domain(format!("t must be positive, got {t}")));
    }
    if let (Kernel::Sharp(l), Some(pcd)) = (kernel, data.as_piecewise_constant()) {
        check_flux_signs(l)?;
        return Ok(discrete::solve(l, pcd, x, t)?.result);
    }
    continuous_search(kernel, data, x, t, cfg)
}

/// Hopf-Lax value `u(x, t)`; `t = 0` returns `g(x)` directly.
pub fn eval_u(
    kernel: &Kernel,
    data: &InitialData,
    x: f64,
    t: f64,
    cfg: &SearchConfig,
) -> Result<f64> {
    if t == 0.0 {
        return Ok(data.eval_g(x));
    }
    Ok(greatest_minimizer(kernel, data, x, t, cfg)?.q_min)
}

/// Conservation-law solution `w(x, t) = g'(y*(x, t))`, with a flag set when
/// `y*` lands exactly on a non-differentiable point of the data (the value
/// is then the right limit).
pub fn eval_w_flagged(
    kernel: &Kernel,
    data: &InitialData,
    x: f64,
    t: f64,
    cfg: &SearchConfig,
) -> Result<(f64, bool)> {
    if let (Kernel::Sharp(l), Some(pcd)) = (kernel, data.as_piecewise_constant()) {
        check_flux_signs(l)?;
        let sol = discrete::solve(l, pcd, x, t)?;
        return Ok((sol.w, sol.flagged));
    }
    let res = greatest_minimizer(kernel, data, x, t, cfg)?;
    let (w, hit) = data.eval_gprime_flagged(res.y_star);
    Ok((w, hit))
}

pub fn eval_w(
    kernel: &Kernel,
    data: &InitialData,
    x: f64,
    t: f64,
    cfg: &SearchConfig,
) -> Result<f64> {
    eval_w_flagged(kernel, data, x, t, cfg).map(|(w, _)| w)
}

/// One-sided finite-difference estimates of `∂_x u(x, t)`.
#[derive(Clone, Copy, Debug)]
pub struct XDerivative {
    /// Forward-difference estimate at the smallest step (right-biased,
    /// consistent with the greatest-minimizer selection).
    pub estimate: f64,
    pub forward: f64,
    pub backward: f64,
    /// False when the one-sided quotients disagree (shock location).
    pub converged: bool,
}

/// Finite-difference `∂_x min_y Q` over a shrinking step sequence.
pub fn min_x_derivative(
    kernel: &Kernel,
    data: &InitialData,
    x: f64,
    t: f64,
    h_seq: &[f64],
    cfg: &SearchConfig,
) -> Result<XDerivative> {
    if h_seq.is_empty() || h_seq.iter().any(|&h| !(h > 0.0)) {
        return Err(Error::Domain("h_seq must be nonempty and positive".into()));
    }
    let u0 = eval_u(kernel, data, x, t, cfg)?;
    let mut forward = f64::NAN;
    let mut backward = f64::NAN;
    let mut prev_forward = f64::NAN;
    for &h in h_seq {
        prev_forward = forward;
        forward = (eval_u(kernel, data, x + h, t, cfg)? - u0) / h;
        backward = (u0 - eval_u(kernel, data, x - h, t, cfg)?) / h;
    }
    let scale = 1.0 + forward.abs().max(backward.abs());
    let sided_gap = (forward - backward).abs();
    let cauchy_gap = if prev_forward.is_nan() {
        0.0
    } else {
        (forward - prev_forward).abs()
    };
    let converged = sided_gap <= 0.02 * scale && cauchy_gap <= 0.02 * scale;
    Ok(XDerivative {
        estimate: forward,
        forward,
        backward,
        converged,
    })
}

/// Residual of the semigroup identity
/// `u(x, t) = min_y {(t-s) L((x-y)/(t-s)) + u(y, s)}`, evaluated with the
/// inner minimum taken over `n_points` midpoint samples of the feasible
/// interval for the time increment `t - s`.
pub fn semigroup_residual(
    kernel: &Kernel,
    data: &InitialData,
    x: f64,
    t: f64,
    s: f64,
    n_points: usize,
    cfg: &SearchConfig,
) -> Result<f64> {
    if !(0.0 < s && s < t) {
        return Err(Error::Domain(format!("need 0 < s < t, got s={s}, t={t}")));
    }
    let lhs = eval_u(kernel, data, x, t, cfg)?;
    let dt = t - s;
    let (z_lo, z_hi) = match kernel {
        Kernel::Sharp(l) => l.domain(),
        Kernel::Smooth(k) => (k.slope_range.0 - 1.0, k.slope_range.1 + 1.0),
        Kernel::TestQuadratic => {
            let w = cfg.window.unwrap_or_else(|| data.natural_window());
            ((x - w.1) / dt, (x - w.0) / dt)
        }
    };
    let (y_lo, y_hi) = (x - z_hi * dt, x - z_lo * dt);
    // midpoint sampling keeps the kernel argument strictly inside its domain
    let us: Vec<f64> = (0..n_points)
        .into_par_iter()
        .map(|i| {
            let y = y_lo + (y_hi - y_lo) * (i as f64 + 0.5) / n_points as f64;
            match kernel.eval((x - y) / dt) {
                ExtReal::Finite(v) => match eval_u(kernel, data, y, s, cfg) {
                    Ok(us) => dt * v + us,
                    Err(_) => f64::INFINITY,
                },
                ExtReal::PosInf => f64::INFINITY,
            }
        })
        .collect();
    let rhs = us.iter().copied().fold(f64::INFINITY, f64::min);
    Ok((lhs - rhs).abs())
}

/// A solved line `t = const`: Hopf-Lax values, conservation-law solution,
/// greatest minimizers, and minimizer classifications along an x-grid.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct SolutionField {
    pub x_grid: Vec<f64>,
    pub t: f64,
    pub u_values: Vec<f64>,
    pub w_values: Vec<f64>,
    pub y_star_values: Vec<f64>,
    pub kinds: Vec<MinimizerKind>,
}

impl SolutionField {
    /// CSV rows `x,u,w,y_star,kind` with 17-significant-digit formatting.
    /// `header_comment`, when given, is written first as a `#` line.
    pub fn write_csv<W: Write>(
        &self,
        out: &mut W,
        header_comment: Option<&str>,
    ) -> std::io::Result<()> {
        if let Some(c) = header_comment {
            writeln!(out, "# {c}")?;
        }
        writeln!(out, "x,u,w,y_star,kind")?;
        for i in 0..self.x_grid.len() {
            writeln!(
                out,
                "{:.16e},{:.16e},{:.16e},{:.16e},{}",
                self.x_grid[i],
                self.u_values[i],
                self.w_values[i],
                self.y_star_values[i],
                self.kinds[i]
            )?;
        }
        Ok(())
    }

    /// Shock-set flags: `x_i` is flagged when the greatest minimizer jumps
    /// across it, `|y*(x+h) - y*(x-h)| > 10 h` with `h` the grid step.
    /// Endpoints are never flagged.
    pub fn shock_flags(&self) -> Vec<bool> {
        let n = self.x_grid.len();
        let mut flags = vec![false; n];
        for (i, flag) in flags
            .iter_mut()
            .enumerate()
            .take(n.saturating_sub(1))
            .skip(1)
        {
            let h = 0.5 * (self.x_grid[i + 1] - self.x_grid[i - 1]);
            if (self.y_star_values[i + 1] - self.y_star_values[i - 1]).abs() > 10.0 * h {
                *flag = true;
            }
        }
        flags
    }
}

/// Solve along an x-grid for fixed `t`. Grid points are independent and
/// evaluated in parallel; outputs are ordered by grid index, so results are
/// deterministic for a fixed configuration.
pub fn solve_field(
    kernel: &Kernel,
    data: &InitialData,
    x_grid: &[f64],
    t: f64,
    cfg: &SearchConfig,
) -> Result<SolutionField> {
    let rows: Result<Vec<(f64, f64, f64, MinimizerKind)>> = x_grid
        .par_iter()
        .map(|&x| {
            let r = greatest_minimizer(kernel, data, x, t, cfg)?;
            let w = match (kernel, data.as_piecewise_constant()) {
                (Kernel::Sharp(l), Some(pcd)) => discrete::solve(l, pcd, x, t)?.w,
                _ => data.eval_gprime(r.y_star),
            };
            Ok((r.q_min, w, r.y_star, r.kind))
        })
        .collect();
    let rows = rows?;
    Ok(SolutionField {
        x_grid: x_grid.to_vec(),
        t,
        u_values: rows.iter().map(|r| r.0).collect(),
        w_values: rows.iter().map(|r| r.1).collect(),
        y_star_values: rows.iter().map(|r| r.2).collect(),
        kinds: rows.iter().map(|r| r.3).collect(),
    })
}

/// Uniform grid helper (inclusive endpoints).
pub fn linspace(lo: f64, hi: f64, n: usize) -> Vec<f64> {
    assert!(n >= 2, "need at least two grid points");
    (0..n)
        .map(|i| lo + (hi - lo) * i as f64 / (n - 1) as f64)
        .collect()
}

// ---------------------------------------------------------------------------
// continuous search internals
// ---------------------------------------------------------------------------

struct Probe {
    y: f64,
    q: f64,
}

fn continuous_search(
    kernel: &Kernel,
    data: &InitialData,
    x: f64,
    t: f64,
    cfg: &SearchConfig,
) -> Result<MinimizerResult> {
    let qf = |y: f64| -> f64 {
        match kernel.eval((x - y) / t) {
            ExtReal::Finite(v) => t * v + data.eval_g(y),
            ExtReal::PosInf => f64::INFINITY,
        }
    };

    // knots: exact vertex candidates (sharp) or window endpoints
    let mut knots: Vec<(f64, f64)> = Vec::new();
    let mut vertex_ys: Vec<f64> = Vec::new();
    let window: (f64, f64) = match kernel {
        Kernel::Sharp(l) => {
            check_flux_signs(l)?;
            let breaks = l.breaks();
            if l.segment_slopes().is_empty() {
                // point domain: the feasible set is the single point x - m t
                let y = x - breaks[0] * t;
                let q = t * l.eval(breaks[0]).expect_finite("L at point domain") + data.eval_g(y);
                return Ok(MinimizerResult {
                    y_star: y,
                    q_min: q,
                    kind: MinimizerKind::VertexOfL,
                    multiple: false,
                    candidates: vec![(y, q)],
                });
            }
            for &m in breaks.iter().rev() {
                let y = x - m * t;
                let q = t * l.eval(m).expect_finite("L at vertex") + data.eval_g(y);
                knots.push((y, q));
                vertex_ys.push(y);
            }
            (knots.first().unwrap().0, knots.last().unwrap().0)
        }
        Kernel::Smooth(k) => {
            let w = cfg.window.unwrap_or((
                x - (k.slope_range.1 + 1.0) * t,
                x - (k.slope_range.0 - 1.0) * t,
            ));
            knots.push((w.0, qf(w.0)));
            knots.push((w.1, qf(w.1)));
            w
        }
        Kernel::TestQuadratic => {
            let w = cfg.window.unwrap_or_else(|| data.natural_window());
            knots.push((w.0, qf(w.0)));
            knots.push((w.1, qf(w.1)));
            w
        }
    };

    let span = window.1 - window.0;
    let degenerate = span <= 64.0 * f64::EPSILON * (1.0 + x.abs() + t.abs());

    // grid probes: knots plus M interior samples per inter-knot interval
    let mut probes: Vec<Probe> = Vec::new();
    let mut knot_idx: Vec<usize> = Vec::new();
    if degenerate {
        for &(y, q) in &knots {
            knot_idx.push(probes.len());
            probes.push(Probe { y, q });
        }
    } else {
        let m = cfg.samples_per_segment.max(8);
        for pair in knots.windows(2) {
            let (a, b) = (pair[0], pair[1]);
            knot_idx.push(probes.len());
            probes.push(Probe { y: a.0, q: a.1 });
            for i in 1..=m {
                let y = a.0 + (b.0 - a.0) * i as f64 / (m + 1) as f64;
                probes.push(Probe { y, q: qf(y) });
            }
        }
        let last = *knots.last().unwrap();
        knot_idx.push(probes.len());
        probes.push(Probe {
            y: last.0,
            q: last.1,
        });
    }

    // refine every interior local-minimum bracket
    let mut candidates: Vec<(f64, f64)> = knots.clone();
    for i in 1..probes.len().saturating_sub(1) {
        if probes[i].q.is_finite()
            && probes[i].q <= probes[i - 1].q
            && probes[i].q <= probes[i + 1].q
        {
            let (y, q) = golden_min(&qf, probes[i - 1].y, probes[i + 1].y, cfg.golden_tol);
            candidates.push((y, q));
        }
    }
    // a minimum can hide inside a cell adjacent to a kink or window edge
    // without showing up as a grid local minimum; refine those cells, but
    // keep the result only when it genuinely dips below both cell ends
    // (on a monotone stretch the refinement hugs an endpoint and would
    // otherwise pollute the tie set)
    let mut knot_cell = |a: &Probe, b: &Probe| {
        let (y, q) = golden_min(&qf, a.y, b.y, cfg.golden_tol);
        if q < a.q.min(b.q) - 4.0 * f64::EPSILON * (1.0 + q.abs()) {
            candidates.push((y, q));
        }
    };
    for &k in &knot_idx {
        if k > 0 {
            knot_cell(&probes[k - 1], &probes[k]);
        }
        if k + 1 < probes.len() {
            knot_cell(&probes[k], &probes[k + 1]);
        }
    }

    let mut q_min = f64::INFINITY;
    for p in &probes {
        q_min = q_min.min(p.q);
    }
    for &(_, q) in &candidates {
        q_min = q_min.min(q);
    }
    if !q_min.is_finite() {
        return Err(Error::Divergence(format!(
            "functional not finite anywhere on the search window at x={x}, t={t}"
        )));
    }

    // flat runs: adjacent probes sitting at the minimum level
    let flat_tol = cfg.flat_rel * (1.0 + q_min.abs());
    let mut any_flat = false;
    let mut i = 0;
    while i < probes.len() {
        if probes[i].q <= q_min + flat_tol {
            let start = i;
            while i + 1 < probes.len() && probes[i + 1].q <= q_min + flat_tol {
                i += 1;
            }
            if i > start {
                any_flat = true;
                // right edge of the flat run: rightmost y with Q at the
                // minimum level, located by predicate bisection
                let edge = if i + 1 < probes.len() {
                    bisect_rightmost(&qf, q_min + flat_tol, probes[i].y, probes[i + 1].y)
                } else {
                    probes[i].y
                };
                candidates.push((edge, qf(edge).min(q_min + flat_tol)));
            }
        }
        i += 1;
    }

    // tie selection over refined candidates, knots, and flat edges
    let tie_tol = cfg.tie_rel * (1.0 + q_min.abs());
    let mut tied: Vec<(f64, f64)> = candidates
        .iter()
        .copied()
        .filter(|&(_, q)| q <= q_min + tie_tol)
        .collect();
    tied.sort_by(|a, b| a.0.partial_cmp(&b.0).unwrap());
    tied.dedup_by(|a, b| {
        if (a.0 - b.0).abs() <= 1e-9 * (1.0 + a.0.abs()) {
            b.1 = b.1.min(a.1);
            true
        } else {
            false
        }
    });
    let y_star = tied.last().expect("tie set contains the minimizer").0;
    let multiple = any_flat || tied.len() >= 2;

    if let Kernel::Smooth(_) = kernel {
        let vtol = 1e-7 * (1.0 + y_star.abs());
        if (y_star - window.0).abs() <= vtol || (y_star - window.1).abs() <= vtol {
            return Err(Error::Divergence(format!(
                "minimizer pinned to the search window edge at x={x}, t={t}"
            )));
        }
    }

    let kind = classify(kernel, data, &vertex_ys, y_star);
    Ok(MinimizerResult {
        y_star,
        q_min,
        kind,
        multiple,
        candidates: tied,
    })
}

fn classify(kernel: &Kernel, data: &InitialData, vertex_ys: &[f64], y_star: f64) -> MinimizerKind {
    let vtol = 1e-7 * (1.0 + y_star.abs());
    let at_vertex =
        matches!(kernel, Kernel::Sharp(_)) && vertex_ys.iter().any(|&v| (v - y_star).abs() <= vtol);
    let at_jump = data
        .as_piecewise_constant()
        .map(|p| p.jumps().iter().any(|&d| (d - y_star).abs() <= vtol))
        .unwrap_or(false);
    match (at_vertex, at_jump) {
        (true, true) => MinimizerKind::Coincident,
        (true, false) => MinimizerKind::VertexOfL,
        (false, true) => MinimizerKind::VertexOfG,
        (false, false) => MinimizerKind::FlatSegment,
    }
}

/// Golden-section refinement on a bracket; returns the best probed point.
fn golden_min(f: &impl Fn(f64) -> f64, a: f64, b: f64, tol: f64) -> (f64, f64) {
    const INVPHI: f64 = 0.618_033_988_749_894_9;
    let (mut lo, mut hi) = (a, b);
    let mut c = hi - INVPHI * (hi - lo);
    let mut d = lo + INVPHI * (hi - lo);
    let mut fc = f(c);
    let mut fd = f(d);
    let mut best = if fc <= fd { (c, fc) } else { (d, fd) };
    let mut iters = 0usize;
    while hi - lo > tol && iters < 200 {
        if fc <= fd {
            hi = d;
            d = c;
            fd = fc;
            c = hi - INVPHI * (hi - lo);
            fc = f(c);
        } else {
            lo = c;
            c = d;
            fc = fd;
            d = lo + INVPHI * (hi - lo);
            fd = f(d);
        }
        let probe = if fc <= fd { (c, fc) } else { (d, fd) };
        if probe.1 < best.1 {
            best = probe;
        }
        iters += 1;
    }
    best
}

/// Rightmost point where `f <= level`, bisecting between a point known to
/// satisfy the predicate and one known to violate it.
fn bisect_rightmost(f: &impl Fn(f64) -> f64, level: f64, mut inside: f64, mut outside: f64) -> f64 {
    for _ in 0..80 {
        let mid = 0.5 * (inside + outside);
        if f(mid) <= level {
            inside = mid;
        } else {
            outside = mid;
        }
        if outside - inside <= f64::EPSILON * (1.0 + inside.abs()) {
            break;
        }
    }
    inside
}
