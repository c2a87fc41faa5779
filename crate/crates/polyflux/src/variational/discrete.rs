//! Exact combinatorial solver for piecewise-constant-derivative data.
//!
//! With a polygonal kernel and piecewise-linear `g`, the functional
//! `Q(y) = t L((x-y)/t) + g(y)` is piecewise linear in `y` on the feasible
//! interval, so its minimum is attained at a breakpoint of `Q` — a vertex of
//! the kernel (`y = x - m_j t`) or a jump of `g'` — or along a flat segment
//! between two adjacent breakpoints. Enumeration over this finite candidate
//! set is exact: no tolerances, deterministic right-biased tie handling.
//!
//! The solution value splits by the type of the greatest minimizer:
//! `w = g'(y*)` at a vertex of the kernel, `w = L'((x - y*)/t)` (the active
//! segment slope) at a jump of `g'`, and the common value of both formulas
//! on a flat segment. When the data values are a subset of the flux break
//! points, every branch returns a stored member of that set, so the
//! computed solution stays in it exactly.

use crate::extended::ExtReal;
use crate::initial_data::PcdData;
use crate::pwl_convex::ConjugateFn;
use crate::{Error, Result};

use super::{MinimizerKind, MinimizerResult};

/// Result of the exact solve: the minimizer search output plus the
/// conservation-law value and the measure-zero-hit flag.
#[derive(Clone, Debug)]
pub struct DiscreteSolution {
    pub result: MinimizerResult,
    pub w: f64,
    /// Set when a vertex of the kernel coincides with a jump of `g'`
    /// (the value then follows the right-limit convention).
    pub flagged: bool,
}

#[derive(Clone, Copy)]
struct Cand {
    y: f64,
    /// Exact kernel argument for vertex candidates.
    z: Option<f64>,
    q: f64,
    is_vertex: bool,
    is_jump: bool,
}

/// Greatest minimizer by exact enumeration.
pub fn discrete_exact_minimizer(
    l: &ConjugateFn,
    g: &PcdData,
    x: f64,
    t: f64,
) -> Result<MinimizerResult> {
    solve(l, g, x, t).map(|s| s.result)
}

/// Conservation-law value `w(x, t)` with the coincident-vertex flag.
pub fn discrete_w(l: &ConjugateFn, g: &PcdData, x: f64, t: f64) -> Result<(f64, bool)> {
    solve(l, g, x, t).map(|s| (s.w, s.flagged))
}

pub(crate) fn solve(l: &ConjugateFn, g: &PcdData, x: f64, t: f64) -> Result<DiscreteSolution> {
    if !(t > 0.0) {
        return Err(Error::Domain(format!("t must be positive, got {t}")));
    }
    let (m_lo, m_hi) = l.domain();
    let (y_lo, y_hi) = (x - m_hi * t, x - m_lo * t);

    let mut cands: Vec<Cand> = Vec::with_capacity(l.breaks().len() + g.jumps().len());
    for &m in l.breaks().iter().rev() {
        cands.push(Cand {
            y: x - m * t,
            z: Some(m),
            q: 0.0,
            is_vertex: true,
            is_jump: false,
        });
    }
    for &d in g.jumps() {
        if d > y_lo && d < y_hi {
            cands.push(Cand {
                y: d,
                z: None,
                q: 0.0,
                is_vertex: false,
                is_jump: true,
            });
        }
    }
    cands.sort_by(|a, b| a.y.partial_cmp(&b.y).unwrap());
    cands.dedup_by(|a, b| {
        if a.y == b.y {
            b.is_vertex |= a.is_vertex;
            b.is_jump |= a.is_jump;
            b.z = b.z.or(a.z);
            true
        } else {
            false
        }
    });

    for c in &mut cands {
        let z = c.z.unwrap_or_else(|| snap_into((x - c.y) / t, m_lo, m_hi));
        c.q = match l.eval(z) {
            ExtReal::Finite(v) => t * v + g.g(c.y),
            ExtReal::PosInf => f64::INFINITY,
        };
    }

    let q_min = cands.iter().map(|c| c.q).fold(f64::INFINITY, f64::min);
    if !q_min.is_finite() {
        return Err(Error::Divergence(format!(
            "no finite candidate value at x={x}, t={t}"
        )));
    }

    // A segment between adjacent candidates is flat exactly when the active
    // kernel slope equals the data value there; if its level is the minimum,
    // the whole segment minimizes and its right endpoint is the supremum.
    let mut tie_idx: Vec<usize> = (0..cands.len()).filter(|&i| cands[i].q == q_min).collect();
    let mut any_flat = false;
    let mut flat_closes_at: Vec<usize> = Vec::new();
    for i in 0..cands.len().saturating_sub(1) {
        let (a, b) = (&cands[i], &cands[i + 1]);
        if a.y == b.y {
            continue;
        }
        let level = a.q.min(b.q);
        if level != q_min {
            continue;
        }
        let ym = 0.5 * (a.y + b.y);
        let c_seg = l.slope_at(snap_into((x - ym) / t, m_lo, m_hi));
        let v_seg = g.gprime_flagged(ym).0;
        if c_seg == Some(v_seg) {
            any_flat = true;
            flat_closes_at.push(i + 1);
            if !tie_idx.contains(&i) {
                tie_idx.push(i);
            }
            if !tie_idx.contains(&(i + 1)) {
                tie_idx.push(i + 1);
            }
        }
    }
    tie_idx.sort_unstable();

    let star = *tie_idx.last().expect("minimum is attained at a candidate");
    let yc = cands[star];
    let closes_flat = flat_closes_at.contains(&star);
    let multiple = any_flat || tie_idx.len() >= 2;

    let kind = match (yc.is_vertex, yc.is_jump) {
        (true, true) => MinimizerKind::Coincident,
        _ if closes_flat => MinimizerKind::FlatSegment,
        (true, false) => MinimizerKind::VertexOfL,
        (false, true) => MinimizerKind::VertexOfG,
        // candidates are vertices or jumps by construction
        (false, false) => MinimizerKind::FlatSegment,
    };

    let (w, flagged) = match kind {
        MinimizerKind::Coincident => {
            // right-limit convention: slope of the kernel segment to the
            // right (in p) of the coinciding vertex
            let z =
                yc.z.expect("coincident candidates carry an exact vertex argument");
            (
                l.slope_at(z).expect("vertex lies in the kernel domain"),
                true,
            )
        }
        MinimizerKind::FlatSegment => {
            // common value of both formulas, read off the run interior
            let left = if star > 0 { cands[star - 1].y } else { yc.y };
            (g.gprime_flagged(0.5 * (left + yc.y)).0, false)
        }
        MinimizerKind::VertexOfL => {
            let (v, hit) = g.gprime_flagged(yc.y);
            (v, hit)
        }
        MinimizerKind::VertexOfG => {
            let z = snap_into((x - yc.y) / t, m_lo, m_hi);
            (
                l.slope_at(z)
                    .expect("jump candidates lie strictly inside the feasible interval"),
                false,
            )
        }
    };

    let candidates: Vec<(f64, f64)> = tie_idx.iter().map(|&i| (cands[i].y, cands[i].q)).collect();
    Ok(DiscreteSolution {
        result: MinimizerResult {
            y_star: yc.y,
            q_min,
            kind,
            multiple,
            candidates,
        },
        w,
        flagged,
    })
}

/// Clamp a computed kernel argument back into the closed domain when it
/// strays by float roundoff only.
fn snap_into(z: f64, lo: f64, hi: f64) -> f64 {
    let mut z = z;
    let slack_lo = 4.0 * f64::EPSILON * (1.0 + lo.abs());
    let slack_hi = 4.0 * f64::EPSILON * (1.0 + hi.abs());
    if z < lo && z >= lo - slack_lo {
        z = lo;
    }
    if z > hi && z <= hi + slack_hi {
        z = hi;
    }
    z
}
