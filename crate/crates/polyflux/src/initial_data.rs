//! Initial data `(g, g')` for the variational solver.
//!
//! Three representations are supported:
//!
//! * closed-form differentiable data (paired `g`/`g'` evaluators with a
//!   declared Lipschitz window),
//! * piecewise-constant derivative with the exact piecewise-linear
//!   antiderivative anchored at `g(0) = 0`,
//! * sampled paths (Brownian initial data): `g'` interpolates the samples
//!   piecewise linearly, so `g` is an exact piecewise quadratic and stays
//!   differentiable everywhere.

use crate::{Error, Result};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha12Rng;
use rand_distr::{Distribution, StandardNormal};
use std::fmt;
use std::sync::Arc;

type ScalarFn = Arc<dyn Fn(f64) -> f64 + Send + Sync>;

/// Closed-form C¹ data: paired evaluators plus a declared Lipschitz window.
#[derive(Clone)]
pub struct ClosedFormData {
    g: ScalarFn,
    gprime: ScalarFn,
    /// Window on which the data is intended to be used (search default,
    /// Lipschitz estimation range).
    pub window: (f64, f64),
}

impl fmt::Debug for ClosedFormData {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("ClosedFormData")
            .field("window", &self.window)
            .finish()
    }
}

/// Piecewise-constant derivative: jump points `d_1 < ... < d_K`, values
/// `v_0, ..., v_K`, and `g(0) = 0`.
///
/// Serializes as `{"jumps":[...], "values":[...]}`.
#[derive(Clone, Debug, PartialEq, serde::Serialize, serde::Deserialize)]
#[serde(try_from = "PcdRepr", into = "PcdRepr")]
pub struct PcdData {
    jumps: Vec<f64>,
    values: Vec<f64>,
    /// g at each jump point, integrated exactly from g(0) = 0.
    jump_g: Vec<f64>,
}

#[derive(serde::Serialize, serde::Deserialize)]
struct PcdRepr {
    jumps: Vec<f64>,
    values: Vec<f64>,
}

impl TryFrom<PcdRepr> for PcdData {
    type Error = Error;
    fn try_from(r: PcdRepr) -> Result<Self> {
        PcdData::new(r.jumps, r.values)
    }
}

impl From<PcdData> for PcdRepr {
    fn from(d: PcdData) -> Self {
        PcdRepr {
            jumps: d.jumps,
            values: d.values,
        }
    }
}

/// Uniformly sampled path for `g'` with exact quadratic antiderivative.
#[derive(Clone, Debug, PartialEq)]
pub struct SampledPathData {
    x0: f64,
    step: f64,
    values: Vec<f64>,
    /// Integral of the interpolated g' from x0 to each node.
    prefix: Vec<f64>,
    /// Integral from x0 to 0 (so that g(0) = 0 exactly).
    at_zero: f64,
    seed: Option<u64>,
}

/// Problem data `(g, g')` in one of the supported representations.
#[derive(Clone, Debug)]
pub enum InitialData {
    ClosedForm(ClosedFormData),
    PiecewiseConstant(PcdData),
    Sampled(SampledPathData),
}

impl InitialData {
    /// Closed-form data from paired evaluators. The pairing is spot-checked
    /// by central differences at 64 deterministic points in the window
    /// (relative tolerance 1e-6).
    pub fn closed_form<G, D>(g: G, gprime: D, window: (f64, f64)) -> Result<Self>
    where
        G: Fn(f64) -> f64 + Send + Sync + 'static,
        D: Fn(f64) -> f64 + Send + Sync + 'static,
    {
        if !(window.0 < window.1) {
            return Err(Error::Domain("window must be a nonempty interval".into()));
        }
        let mut rng = ChaCha12Rng::seed_from_u64(0x9e37_79b9);
        let h = 1e-6 * (1.0 + window.1.abs().max(window.0.abs()));
        for _ in 0..64 {
            let y = rng.gen_range(window.0 + h..window.1 - h);
            let fd = (g(y + h) - g(y - h)) / (2.0 * h);
            let d = gprime(y);
            if (fd - d).abs() > 1e-6 * (1.0 + d.abs().max(fd.abs())) {
                return Err(Error::Domain(format!(
                    "gprime does not match finite differences of g at y={y}: {d} vs {fd}"
                )));
            }
        }
        Ok(InitialData::ClosedForm(ClosedFormData {
            g: Arc::new(g),
            gprime: Arc::new(gprime),
            window,
        }))
    }

    /// `g(y) = coeff * y^2` on the given window.
    pub fn quadratic(coeff: f64, window: (f64, f64)) -> Result<Self> {
        Self::closed_form(move |y| coeff * y * y, move |y| 2.0 * coeff * y, window)
    }

    /// `g ≡ 0`.
    pub fn zero(window: (f64, f64)) -> Result<Self> {
        Self::closed_form(|_| 0.0, |_| 0.0, window)
    }

    /// `g(y) = -y^2` on `[a, b]`, extended outside by steep C¹-matched
    /// upward parabolas with curvature `stiffness`. On `[a, b]` the values
    /// are computed as literally `-(y*y)` so that cancellation against a
    /// quadratic kernel is exact.
    pub fn neg_square_on_interval(a: f64, b: f64, stiffness: f64) -> Result<Self> {
        if !(a < b) || !(stiffness > 0.0) {
            return Err(Error::Domain("need a < b and stiffness > 0".into()));
        }
        let g = move |y: f64| {
            if y < a {
                -a * a - 2.0 * a * (y - a) + stiffness * (y - a) * (y - a)
            } else if y > b {
                -b * b - 2.0 * b * (y - b) + stiffness * (y - b) * (y - b)
            } else {
                -(y * y)
            }
        };
        let gp = move |y: f64| {
            if y < a {
                -2.0 * a + 2.0 * stiffness * (y - a)
            } else if y > b {
                -2.0 * b + 2.0 * stiffness * (y - b)
            } else {
                -2.0 * y
            }
        };
        Self::closed_form(g, gp, (a - 1.0, b + 1.0))
    }

    /// Piecewise-constant derivative data; `jumps` strictly increasing,
    /// one more value than jump.
    pub fn piecewise_constant(jumps: Vec<f64>, values: Vec<f64>) -> Result<Self> {
        Ok(InitialData::PiecewiseConstant(PcdData::new(jumps, values)?))
    }

    /// Brownian-motion samples for `g'` on a uniform grid covering
    /// `[grid_start, grid_end]`, pinned to 0 at the origin. Increments over
    /// each step are independent N(0, step); the negative axis uses draws
    /// from the same seeded stream, so paths are deterministic per seed.
    pub fn sample_brownian(grid_start: f64, grid_end: f64, step: f64, seed: u64) -> Result<Self> {
        if !(step > 0.0) {
            return Err(Error::Domain("step must be positive".into()));
        }
        if !(grid_start <= 0.0 && 0.0 <= grid_end) {
            return Err(Error::Domain("grid must span 0".into()));
        }
        let n_right = (grid_end / step).ceil() as usize;
        let n_left = (-grid_start / step).ceil() as usize;
        let mut rng = ChaCha12Rng::seed_from_u64(seed);
        let sd = step.sqrt();
        let mut right = Vec::with_capacity(n_right + 1);
        right.push(0.0);
        for k in 0..n_right {
            let z: f64 = StandardNormal.sample(&mut rng);
            right.push(right[k] + sd * z);
        }
        let mut left = Vec::with_capacity(n_left);
        let mut prev = 0.0;
        for _ in 0..n_left {
            let z: f64 = StandardNormal.sample(&mut rng);
            prev += sd * z;
            left.push(prev);
        }
        // nodes x0 = -n_left*step ... n_right*step with B(0) = 0
        let mut values = Vec::with_capacity(n_left + n_right + 1);
        values.extend(left.iter().rev());
        values.extend(right.iter());
        let x0 = -(n_left as f64) * step;
        Ok(InitialData::Sampled(SampledPathData::new(
            x0,
            step,
            values,
            Some(seed),
        )?))
    }

    /// Sampled-path data from explicit node values (testing, replay).
    pub fn sampled(x0: f64, step: f64, values: Vec<f64>) -> Result<Self> {
        Ok(InitialData::Sampled(SampledPathData::new(
            x0, step, values, None,
        )?))
    }

    /// C¹ mollification of piecewise-constant data: `g'` ramps linearly
    /// from one constant to the next over `[d_k - r, d_k + r]`, and `g` is
    /// the exact antiderivative with `g(0) = 0`.
    pub fn mollified_from_pcd(pcd: &PcdData, half_width: f64) -> Result<Self> {
        if !(half_width > 0.0) {
            return Err(Error::Domain("half_width must be positive".into()));
        }
        if pcd.jumps.is_empty() {
            let v = pcd.values[0];
            return Self::closed_form(move |y| v * y, move |_| v, (-1.0, 1.0));
        }
        for w in pcd.jumps.windows(2) {
            if 2.0 * half_width >= w[1] - w[0] {
                return Err(Error::Overlap(format!(
                    "ramp half-width {half_width} overlaps jumps at {} and {}",
                    w[0], w[1]
                )));
            }
        }
        let ramp = MollifiedPcd::new(pcd.clone(), half_width);
        let r2 = ramp.clone();
        let span = pcd
            .jumps
            .iter()
            .fold((f64::INFINITY, f64::NEG_INFINITY), |a, &d| {
                (a.0.min(d), a.1.max(d))
            });
        let window = (
            span.0 - 10.0 * half_width - 1.0,
            span.1 + 10.0 * half_width + 1.0,
        );
        Self::closed_form(move |y| ramp.g(y), move |y| r2.gprime(y), window)
    }

    pub fn eval_g(&self, y: f64) -> f64 {
        match self {
            InitialData::ClosedForm(d) => (d.g)(y),
            InitialData::PiecewiseConstant(d) => d.g(y),
            InitialData::Sampled(d) => d.g(y),
        }
    }

    /// `g'(y)`; at a jump of a piecewise-constant derivative this is the
    /// right limit.
    pub fn eval_gprime(&self, y: f64) -> f64 {
        self.eval_gprime_flagged(y).0
    }

    /// `g'(y)` plus a flag set when `y` hits a non-differentiable point
    /// exactly (the value is then the right limit).
    pub fn eval_gprime_flagged(&self, y: f64) -> (f64, bool) {
        match self {
            InitialData::ClosedForm(d) => ((d.gprime)(y), false),
            InitialData::PiecewiseConstant(d) => d.gprime_flagged(y),
            InitialData::Sampled(d) => (d.gprime(y), false),
        }
    }

    /// Largest |g'| over the window: exact for piecewise-constant and
    /// sampled data, a 4096-point supremum for closed-form data.
    pub fn lipschitz_estimate(&self, window: (f64, f64)) -> f64 {
        let (lo, hi) = window;
        match self {
            InitialData::ClosedForm(d) => {
                let n = 1 << 12;
                let mut best: f64 = 0.0;
                for i in 0..=n {
                    let y = lo + (hi - lo) * i as f64 / n as f64;
                    best = best.max((d.gprime)(y).abs());
                }
                best
            }
            InitialData::PiecewiseConstant(d) => {
                let mut best: f64 = 0.0;
                for (k, &v) in d.values.iter().enumerate() {
                    let seg_lo = if k == 0 {
                        f64::NEG_INFINITY
                    } else {
                        d.jumps[k - 1]
                    };
                    let seg_hi = if k == d.jumps.len() {
                        f64::INFINITY
                    } else {
                        d.jumps[k]
                    };
                    if seg_lo < hi && lo < seg_hi {
                        best = best.max(v.abs());
                    }
                }
                best
            }
            InitialData::Sampled(d) => {
                // piecewise-linear g' attains its extrema at nodes or window edges
                let mut best = d.gprime(lo).abs().max(d.gprime(hi).abs());
                for (k, &v) in d.values.iter().enumerate() {
                    let x = d.x0 + k as f64 * d.step;
                    if x >= lo && x <= hi {
                        best = best.max(v.abs());
                    }
                }
                best
            }
        }
    }

    /// The declared window for closed-form data, the sampled range for
    /// paths, or the jump span padded by 1 for piecewise data.
    pub fn natural_window(&self) -> (f64, f64) {
        match self {
            InitialData::ClosedForm(d) => d.window,
            InitialData::PiecewiseConstant(d) => {
                let lo = d.jumps.first().copied().unwrap_or(0.0);
                let hi = d.jumps.last().copied().unwrap_or(0.0);
                (lo - 1.0, hi + 1.0)
            }
            InitialData::Sampled(d) => (d.x0, d.x0 + d.step * (d.values.len() - 1) as f64),
        }
    }

    pub fn as_piecewise_constant(&self) -> Option<&PcdData> {
        match self {
            InitialData::PiecewiseConstant(d) => Some(d),
            _ => None,
        }
    }

    pub fn as_sampled(&self) -> Option<&SampledPathData> {
        match self {
            InitialData::Sampled(d) => Some(d),
            _ => None,
        }
    }
}

/// Piecewise-linear `g'` obtained by ramping a [`PcdData`] across each jump,
/// with the exact antiderivative anchored at `g(0) = 0`.
#[derive(Clone)]
struct MollifiedPcd {
    /// Ramp edges `d_k - r, d_k + r` in increasing order.
    knots: Vec<f64>,
    /// g' at each knot.
    gp: Vec<f64>,
    /// Integral of g' from the first knot to each knot (trapezoid, exact
    /// because g' is linear between knots).
    prefix: Vec<f64>,
    at_zero: f64,
}

impl MollifiedPcd {
    fn new(pcd: PcdData, r: f64) -> Self {
        let mut knots = Vec::with_capacity(2 * pcd.jumps.len());
        let mut gp = Vec::with_capacity(2 * pcd.jumps.len());
        for (k, &d) in pcd.jumps.iter().enumerate() {
            knots.push(d - r);
            gp.push(pcd.values[k]);
            knots.push(d + r);
            gp.push(pcd.values[k + 1]);
        }
        let mut prefix = vec![0.0; knots.len()];
        for k in 1..knots.len() {
            prefix[k] = prefix[k - 1] + 0.5 * (gp[k - 1] + gp[k]) * (knots[k] - knots[k - 1]);
        }
        let mut m = MollifiedPcd {
            knots,
            gp,
            prefix,
            at_zero: 0.0,
        };
        m.at_zero = m.integral_from_first(0.0);
        m
    }

    fn gprime(&self, y: f64) -> f64 {
        let n = self.knots.len();
        if y <= self.knots[0] {
            return self.gp[0];
        }
        if y >= self.knots[n - 1] {
            return self.gp[n - 1];
        }
        let k = match self.knots.binary_search_by(|v| v.partial_cmp(&y).unwrap()) {
            Ok(k) => return self.gp[k],
            Err(ins) => ins - 1,
        };
        let frac = (y - self.knots[k]) / (self.knots[k + 1] - self.knots[k]);
        self.gp[k] + (self.gp[k + 1] - self.gp[k]) * frac
    }

    fn integral_from_first(&self, y: f64) -> f64 {
        let n = self.knots.len();
        if y <= self.knots[0] {
            return self.gp[0] * (y - self.knots[0]);
        }
        if y >= self.knots[n - 1] {
            return self.prefix[n - 1] + self.gp[n - 1] * (y - self.knots[n - 1]);
        }
        let k = match self.knots.binary_search_by(|v| v.partial_cmp(&y).unwrap()) {
            Ok(k) => return self.prefix[k],
            Err(ins) => ins - 1,
        };
        let dy = y - self.knots[k];
        self.prefix[k] + 0.5 * (self.gp[k] + self.gprime(y)) * dy
    }

    fn g(&self, y: f64) -> f64 {
        self.integral_from_first(y) - self.at_zero
    }
}

impl PcdData {
    pub fn new(jumps: Vec<f64>, values: Vec<f64>) -> Result<Self> {
        if values.len() != jumps.len() + 1 {
            return Err(Error::Domain(format!(
                "need one more value than jump (got {} values, {} jumps)",
                values.len(),
                jumps.len()
            )));
        }
        for w in jumps.windows(2) {
            if !(w[0] < w[1]) {
                return Err(Error::Domain(format!(
                    "jumps must be strictly increasing, got {} >= {}",
                    w[0], w[1]
                )));
            }
        }
        // integrate from 0 to every jump point: g(0) = 0 anchors the constant
        let mut jump_g = vec![0.0; jumps.len()];
        if !jumps.is_empty() {
            let raw = {
                // antiderivative anchored at the first jump, fixed up below
                let mut acc = vec![0.0; jumps.len()];
                for k in 1..jumps.len() {
                    acc[k] = acc[k - 1] + values[k] * (jumps[k] - jumps[k - 1]);
                }
                acc
            };
            // value of the raw antiderivative at 0
            let seg = match jumps.binary_search_by(|d| d.partial_cmp(&0.0).unwrap()) {
                Ok(k) => k + 1,
                Err(k) => k,
            };
            let raw_at_zero = if seg == 0 {
                raw[0] + values[0] * (0.0 - jumps[0])
            } else {
                raw[seg - 1] + values[seg] * (0.0 - jumps[seg - 1])
            };
            for k in 0..jumps.len() {
                jump_g[k] = raw[k] - raw_at_zero;
            }
        }
        Ok(PcdData {
            jumps,
            values,
            jump_g,
        })
    }

    pub fn jumps(&self) -> &[f64] {
        &self.jumps
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    /// True when every derivative value is (exactly) one of the given break
    /// points — the matched regime in which solutions stay in the break set.
    pub fn matches_breaks(&self, flux_breaks: &[f64]) -> bool {
        self.values
            .iter()
            .all(|v| flux_breaks.iter().any(|c| c == v))
    }

    /// Index of the constancy interval containing `y`, right-biased at jumps.
    fn interval_index(&self, y: f64) -> usize {
        match self.jumps.binary_search_by(|d| d.partial_cmp(&y).unwrap()) {
            Ok(k) => k + 1,
            Err(k) => k,
        }
    }

    /// Exact antiderivative with g(0) = 0.
    pub fn g(&self, y: f64) -> f64 {
        if self.jumps.is_empty() {
            return self.values[0] * y;
        }
        let k = self.interval_index(y);
        if k == 0 {
            self.jump_g[0] + self.values[0] * (y - self.jumps[0])
        } else {
            self.jump_g[k - 1] + self.values[k] * (y - self.jumps[k - 1])
        }
    }

    pub fn gprime_flagged(&self, y: f64) -> (f64, bool) {
        let k = self.interval_index(y);
        let at_jump = k > 0 && self.jumps[k - 1] == y;
        (self.values[k], at_jump)
    }

    /// Total variation of g' restricted to a window: the sum of |jump
    /// heights| over jumps strictly inside the window.
    pub fn total_variation_on(&self, window: (f64, f64)) -> f64 {
        let mut tv = 0.0;
        for (k, &d) in self.jumps.iter().enumerate() {
            if d > window.0 && d < window.1 {
                tv += (self.values[k + 1] - self.values[k]).abs();
            }
        }
        tv
    }
}

impl SampledPathData {
    pub fn new(x0: f64, step: f64, values: Vec<f64>, seed: Option<u64>) -> Result<Self> {
        if values.len() < 2 {
            return Err(Error::Domain("need at least two samples".into()));
        }
        if !(step > 0.0) {
            return Err(Error::Domain("step must be positive".into()));
        }
        // exact prefix integrals of the piecewise-linear interpolant
        let mut prefix = Vec::with_capacity(values.len());
        prefix.push(0.0);
        for k in 1..values.len() {
            prefix.push(prefix[k - 1] + 0.5 * (values[k - 1] + values[k]) * step);
        }
        let mut path = SampledPathData {
            x0,
            step,
            values,
            prefix,
            at_zero: 0.0,
            seed,
        };
        path.at_zero = path.integral_from_x0(0.0);
        Ok(path)
    }

    pub fn seed(&self) -> Option<u64> {
        self.seed
    }

    pub fn nodes(&self) -> impl Iterator<Item = (f64, f64)> + '_ {
        self.values
            .iter()
            .enumerate()
            .map(move |(k, &v)| (self.x0 + k as f64 * self.step, v))
    }

    fn clamp_cell(&self, y: f64) -> (usize, f64) {
        let n = self.values.len();
        let s = (y - self.x0) / self.step;
        if s <= 0.0 {
            return (0, 0.0);
        }
        let k = (s.floor() as usize).min(n - 2);
        (k, (s - k as f64).min(1.0))
    }

    /// g'(y): piecewise-linear through the samples, clamped to the end
    /// values outside the sampled range.
    pub fn gprime(&self, y: f64) -> f64 {
        let (k, frac) = self.clamp_cell(y);
        self.values[k] + (self.values[k + 1] - self.values[k]) * frac
    }

    fn integral_from_x0(&self, y: f64) -> f64 {
        let n = self.values.len();
        if y <= self.x0 {
            return self.values[0] * (y - self.x0);
        }
        let end = self.x0 + (n - 1) as f64 * self.step;
        if y >= end {
            return self.prefix[n - 1] + self.values[n - 1] * (y - end);
        }
        let (k, frac) = self.clamp_cell(y);
        let dv = self.values[k + 1] - self.values[k];
        let dy = frac * self.step;
        self.prefix[k] + self.values[k] * dy + 0.5 * dv * frac * dy
    }

    /// Exact piecewise-quadratic antiderivative of g' with g(0) = 0.
    pub fn g(&self, y: f64) -> f64 {
        self.integral_from_x0(y) - self.at_zero
    }

    /// CSV rows `x,gprime`; the seed is recorded in the header comment when
    /// the path was drawn from a generator.
    pub fn write_csv<W: std::io::Write>(&self, out: &mut W) -> std::io::Result<()> {
        match self.seed {
            Some(s) => writeln!(out, "# seed={s}")?,
            None => writeln!(out, "# seed=none")?,
        }
        writeln!(out, "x,gprime")?;
        for (x, v) in self.nodes() {
            writeln!(out, "{x:.16e},{v:.16e}")?;
        }
        Ok(())
    }

    /// Total variation of the interpolated g' on a window (node increments,
    /// with exact partial cells at the edges).
    pub fn total_variation_on(&self, window: (f64, f64)) -> f64 {
        let (lo, hi) = window;
        if !(lo < hi) {
            return 0.0;
        }
        let a = self.gprime(lo);
        let b = self.gprime(hi);
        let mut tv = 0.0;
        let mut prev = a;
        for (x, v) in self.nodes() {
            if x > lo && x < hi {
                tv += (v - prev).abs();
                prev = v;
            }
        }
        tv + (b - prev).abs()
    }
}
