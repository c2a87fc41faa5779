//! Exact representation and Legendre-Fenchel conjugation of convex
//! piecewise-linear (polygonal) functions.
//!
//! A [`PwlConvex`] is stored as strictly increasing break points
//! `c_1 < ... < c_N`, strictly increasing segment slopes
//! `m_1 < ... < m_{N+1}`, and the anchor value `H(c_1)` fixing the additive
//! constant. Its conjugate `L(p) = sup_q { p q - H(q) }` is again polygonal:
//! finite exactly on `[m_1, m_{N+1}]`, with break points at the `m_j` and
//! segment slopes `c_1, ..., c_N`. On segment `j` one has
//! `L(p) = p c_j - H(c_j)`, so conjugation is closed form and the
//! biconjugate recovers `H` exactly.

use crate::extended::ExtReal;
use crate::{Error, Result};
use serde::{Deserialize, Serialize};

/// A convex piecewise-linear function on all of R.
///
/// When used as a flux the standing sign assumptions are
/// `m_1 < 0 < m_{N+1}` and `c_1 <= 0 <= c_N`; the relaxed constructor skips
/// them (useful for general conjugation, including the no-break linear
/// case), and solvers re-check the slope signs at entry.
#[derive(Clone, Debug, Serialize, Deserialize, PartialEq)]
#[serde(try_from = "PwlConvexRepr", into = "PwlConvexRepr")]
pub struct PwlConvex {
    breaks: Vec<f64>,
    slopes: Vec<f64>,
    anchor: f64,
    relaxed: bool,
    /// H evaluated at each break point (cumulative from the anchor).
    break_values: Vec<f64>,
}

/// Wire form: `{"breaks":[...], "slopes":[...], "anchor":v}`.
#[derive(Serialize, Deserialize)]
struct PwlConvexRepr {
    breaks: Vec<f64>,
    slopes: Vec<f64>,
    anchor: f64,
    #[serde(default)]
    relaxed: bool,
}

impl TryFrom<PwlConvexRepr> for PwlConvex {
    type Error = Error;
    fn try_from(r: PwlConvexRepr) -> Result<Self> {
        if r.relaxed {
            PwlConvex::new_relaxed(r.breaks, r.slopes, r.anchor)
        } else {
            PwlConvex::new(r.breaks, r.slopes, r.anchor)
        }
    }
}

impl From<PwlConvex> for PwlConvexRepr {
    fn from(h: PwlConvex) -> Self {
        PwlConvexRepr {
            breaks: h.breaks,
            slopes: h.slopes,
            anchor: h.anchor,
            relaxed: h.relaxed,
        }
    }
}

fn check_strictly_increasing(xs: &[f64], what: &str) -> Result<()> {
    for w in xs.windows(2) {
        if !(w[0] < w[1]) {
            return Err(if what == "slopes" {
                Error::Convexity(format!(
                    "{what} must be strictly increasing, got {} >= {}",
                    w[0], w[1]
                ))
            } else {
                Error::DegenerateSegment(format!(
                    "{what} must be strictly increasing, got {} >= {}",
                    w[0], w[1]
                ))
            });
        }
    }
    if xs.iter().any(|v| !v.is_finite()) {
        return Err(Error::Domain(format!("{what} must be finite")));
    }
    Ok(())
}

impl PwlConvex {
    /// Flux constructor: enforces the standing sign assumptions
    /// `m_1 < 0 < m_{N+1}` and `c_1 <= 0 <= c_N` in addition to validity.
    pub fn new(breaks: Vec<f64>, slopes: Vec<f64>, anchor: f64) -> Result<Self> {
        let h = Self::new_relaxed(breaks, slopes, anchor)?;
        if h.breaks.is_empty() {
            return Err(Error::DegenerateSegment(
                "flux needs at least one break point (use new_relaxed for linear functions)".into(),
            ));
        }
        let (m_lo, m_hi) = h.slope_range();
        if !(m_lo < 0.0 && 0.0 < m_hi) {
            return Err(Error::FluxSigns(format!(
                "flux slopes must satisfy m_1 < 0 < m_last, got [{m_lo}, {m_hi}]"
            )));
        }
        let (c_lo, c_hi) = (h.breaks[0], *h.breaks.last().unwrap());
        if !(c_lo <= 0.0 && 0.0 <= c_hi) {
            return Err(Error::FluxSigns(format!(
                "flux break points must straddle 0, got [{c_lo}, {c_hi}]"
            )));
        }
        Ok(h)
    }

    /// General constructor: only ordering and count invariants. Allows the
    /// no-break case (a single slope, anchored at `H(0) = anchor`).
    pub fn new_relaxed(breaks: Vec<f64>, slopes: Vec<f64>, anchor: f64) -> Result<Self> {
        if slopes.len() != breaks.len() + 1 {
            return Err(Error::DegenerateSegment(format!(
                "need exactly one more slope than break point (got {} slopes, {} breaks)",
                slopes.len(),
                breaks.len()
            )));
        }
        check_strictly_increasing(&breaks, "breaks")?;
        check_strictly_increasing(&slopes, "slopes")?;
        if !anchor.is_finite() {
            return Err(Error::Domain("anchor must be finite".into()));
        }
        let mut break_values = Vec::with_capacity(breaks.len());
        if !breaks.is_empty() {
            break_values.push(anchor);
            for j in 1..breaks.len() {
                let prev = break_values[j - 1];
                break_values.push(prev + slopes[j] * (breaks[j] - breaks[j - 1]));
            }
        }
        Ok(PwlConvex {
            breaks,
            slopes,
            anchor,
            relaxed: break_values.is_empty(),
            break_values,
        })
    }

    pub fn breaks(&self) -> &[f64] {
        &self.breaks
    }

    pub fn slopes(&self) -> &[f64] {
        &self.slopes
    }

    pub fn anchor(&self) -> f64 {
        self.anchor
    }

    /// `H` at each break point.
    pub fn break_values(&self) -> &[f64] {
        &self.break_values
    }

    /// Extreme slopes `(m_1, m_{N+1})` — the finiteness interval of the conjugate.
    pub fn slope_range(&self) -> (f64, f64) {
        (self.slopes[0], *self.slopes.last().unwrap())
    }

    /// Largest slope jump across a corner, divided by 4: the exact peak
    /// deviation per unit half-width of the quadratic corner blends.
    pub fn max_corner_constant(&self) -> f64 {
        self.slopes
            .windows(2)
            .map(|w| (w[1] - w[0]) / 4.0)
            .fold(0.0, f64::max)
    }

    /// Exact evaluation, continuous across break points.
    pub fn eval(&self, q: f64) -> f64 {
        if self.breaks.is_empty() {
            return self.anchor + self.slopes[0] * q;
        }
        if q <= self.breaks[0] {
            return self.break_values[0] + self.slopes[0] * (q - self.breaks[0]);
        }
        let n = self.breaks.len();
        if q >= self.breaks[n - 1] {
            return self.break_values[n - 1] + self.slopes[n] * (q - self.breaks[n - 1]);
        }
        // index of the last break <= q
        let j = match self.breaks.binary_search_by(|b| b.partial_cmp(&q).unwrap()) {
            Ok(j) => j,
            Err(ins) => ins - 1,
        };
        self.break_values[j] + self.slopes[j + 1] * (q - self.breaks[j])
    }

    /// Exact Legendre transform. For `p` on slope segment `[m_j, m_{j+1}]`
    /// the supremum of `p q - H(q)` is attained at the break `c_j`, so
    /// `L(p) = p c_j - H(c_j)`; the domain is the closed interval
    /// `[m_1, m_{N+1}]` with finite endpoint values.
    pub fn conjugate(&self) -> ConjugateFn {
        if self.breaks.is_empty() {
            return ConjugateFn {
                breaks: vec![self.slopes[0]],
                slopes: vec![],
                values: vec![-self.anchor],
            };
        }
        let n = self.breaks.len();
        let mut values = Vec::with_capacity(n + 1);
        for j in 0..n {
            values.push(self.slopes[j] * self.breaks[j] - self.break_values[j]);
        }
        values.push(self.slopes[n] * self.breaks[n - 1] - self.break_values[n - 1]);
        ConjugateFn {
            breaks: self.slopes.clone(),
            slopes: self.breaks.clone(),
            values,
        }
    }
}

/// The Legendre transform of a [`PwlConvex`]: polygonal and convex on the
/// closed interval `[m_1, m_{N+1}]`, +∞ outside.
#[derive(Clone, Debug, Serialize, Deserialize, PartialEq)]
#[serde(try_from = "ConjugateRepr", into = "ConjugateRepr")]
pub struct ConjugateFn {
    /// Break points `m_1 < ... < m_{N+1}` (domain endpoints included).
    breaks: Vec<f64>,
    /// Segment slopes `c_1, ..., c_N`.
    slopes: Vec<f64>,
    /// `L` at each break point.
    values: Vec<f64>,
}

#[derive(Serialize, Deserialize)]
struct ConjugateRepr {
    domain: [f64; 2],
    breaks: Vec<f64>,
    slopes: Vec<f64>,
    values: Vec<f64>,
    infinite_outside: bool,
}

impl TryFrom<ConjugateRepr> for ConjugateFn {
    type Error = Error;
    fn try_from(r: ConjugateRepr) -> Result<Self> {
        if r.breaks.len() != r.values.len() || r.breaks.len() != r.slopes.len() + 1 {
            return Err(Error::DegenerateSegment(
                "inconsistent conjugate table sizes".into(),
            ));
        }
        check_strictly_increasing(&r.breaks, "breaks")?;
        if !r.slopes.is_empty() {
            check_strictly_increasing(&r.slopes, "slopes")?;
        }
        Ok(ConjugateFn {
            breaks: r.breaks,
            slopes: r.slopes,
            values: r.values,
        })
    }
}

impl From<ConjugateFn> for ConjugateRepr {
    fn from(l: ConjugateFn) -> Self {
        let domain = [l.breaks[0], *l.breaks.last().unwrap()];
        ConjugateRepr {
            domain,
            breaks: l.breaks,
            slopes: l.slopes,
            values: l.values,
            infinite_outside: true,
        }
    }
}

impl ConjugateFn {
    /// Closed finiteness interval `[m_1, m_{N+1}]`.
    pub fn domain(&self) -> (f64, f64) {
        (self.breaks[0], *self.breaks.last().unwrap())
    }

    pub fn breaks(&self) -> &[f64] {
        &self.breaks
    }

    pub fn segment_slopes(&self) -> &[f64] {
        &self.slopes
    }

    pub fn values_at_breaks(&self) -> &[f64] {
        &self.values
    }

    /// Lipschitz constant on the domain: `max(|c_1|, |c_N|)`.
    pub fn lipschitz_constant(&self) -> f64 {
        self.slopes
            .first()
            .map(|c| c.abs())
            .unwrap_or(0.0)
            .max(self.slopes.last().map(|c| c.abs()).unwrap_or(0.0))
    }

    /// Exact value inside the closed domain, +∞ outside.
    pub fn eval(&self, p: f64) -> ExtReal {
        let (lo, hi) = self.domain();
        if p < lo || p > hi || p.is_nan() {
            return ExtReal::PosInf;
        }
        if self.slopes.is_empty() {
            return ExtReal::Finite(self.values[0]);
        }
        let j = self.segment_index(p);
        ExtReal::Finite(self.values[j] + (p - self.breaks[j]) * self.slopes[j])
    }

    /// Index `j` of the segment `[m_j, m_{j+1}]` containing `p` (must be in
    /// the domain; the right endpoint maps to the last segment).
    fn segment_index(&self, p: f64) -> usize {
        let n = self.slopes.len();
        let j = match self.breaks.binary_search_by(|b| b.partial_cmp(&p).unwrap()) {
            Ok(j) => j,
            Err(ins) => ins - 1,
        };
        j.min(n - 1)
    }

    /// Segment slope at `p` with right bias: for `p` in `[m_j, m_{j+1})`
    /// returns `c_j`; at the right domain endpoint returns `c_N`. `None`
    /// outside the domain or for a point domain.
    pub fn slope_at(&self, p: f64) -> Option<f64> {
        let (lo, hi) = self.domain();
        if p < lo || p > hi || self.slopes.is_empty() {
            return None;
        }
        Some(self.slopes[self.segment_index(p)])
    }

    /// Conjugating back recovers the original polygonal function exactly:
    /// for `q` between consecutive segment slopes `c_j <= q <= c_{j+1}` the
    /// supremum of `p q - L(p)` over the compact domain is attained at the
    /// break `m_{j+1}`.
    pub fn biconjugate(&self) -> PwlConvex {
        if self.slopes.is_empty() {
            // single-point domain [m, m]: L*(q) = m q - L(m)
            return PwlConvex::new_relaxed(vec![], vec![self.breaks[0]], -self.values[0])
                .expect("single-slope biconjugate is always valid");
        }
        let anchor = self.breaks[0] * self.slopes[0] - self.values[0];
        PwlConvex::new_relaxed(self.slopes.clone(), self.breaks.clone(), anchor)
            .expect("conjugate tables are already sorted")
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    pub(crate) fn abs_flux() -> PwlConvex {
        PwlConvex::new(vec![0.0], vec![-1.0, 1.0], 0.0).unwrap()
    }

    pub(crate) fn hinge_flux() -> PwlConvex {
        // max(0, |q| - 1)
        PwlConvex::new(vec![-1.0, 1.0], vec![-1.0, 0.0, 1.0], 0.0).unwrap()
    }

    /// Brute-force conjugate oracle: max of p q - H(q) over a dense grid
    /// that includes every break point.
    fn brute_conjugate(h: &PwlConvex, p: f64, q_lo: f64, q_hi: f64, n: usize) -> f64 {
        let mut best = f64::NEG_INFINITY;
        for i in 0..=n {
            let q = q_lo + (q_hi - q_lo) * i as f64 / n as f64;
            best = best.max(p * q - h.eval(q));
        }
        for &q in h.breaks() {
            best = best.max(p * q - h.eval(q));
        }
        best
    }

    #[test]
    fn eval_abs_and_hinge() {
        let h = abs_flux();
        assert_eq!(h.eval(-2.0), 2.0);
        assert_eq!(h.eval(0.0), 0.0);
        assert_eq!(h.eval(3.5), 3.5);
        let g = hinge_flux();
        assert_eq!(g.eval(0.5), 0.0);
        assert_eq!(g.eval(3.0), 2.0);
        assert_eq!(g.eval(-1.0), 0.0);
        assert_eq!(g.eval(-2.5), 1.5);
    }

    #[test]
    fn constructor_rejects_bad_input() {
        assert!(matches!(
            PwlConvex::new(vec![0.0], vec![1.0, -1.0], 0.0),
            Err(Error::Convexity(_))
        ));
        assert!(matches!(
            PwlConvex::new(vec![0.0, 0.0], vec![-1.0, 0.0, 1.0], 0.0),
            Err(Error::DegenerateSegment(_))
        ));
        // wrong slope count
        assert!(PwlConvex::new(vec![0.0], vec![-1.0], 0.0).is_err());
        // sign assumptions
        assert!(matches!(
            PwlConvex::new(vec![0.0], vec![1.0, 2.0], 0.0),
            Err(Error::FluxSigns(_))
        ));
        assert!(matches!(
            PwlConvex::new(vec![2.0], vec![-1.0, 1.0], 0.0),
            Err(Error::FluxSigns(_))
        ));
        // relaxed accepts what new rejects, as long as it is convex
        assert!(PwlConvex::new_relaxed(vec![2.0], vec![1.0, 3.0], 0.0).is_ok());
    }

    #[test]
    fn conjugate_of_abs_is_zero_on_unit_interval() {
        let l = abs_flux().conjugate();
        assert_eq!(l.domain(), (-1.0, 1.0));
        assert_eq!(l.eval(0.0), ExtReal::Finite(0.0));
        assert_eq!(l.eval(1.0), ExtReal::Finite(0.0));
        assert_eq!(l.eval(-1.0), ExtReal::Finite(0.0));
        assert_eq!(l.eval(1.5), ExtReal::PosInf);
        // brute-force agreement on the domain interior
        let h = abs_flux();
        for i in 0..=100 {
            let p = -0.999 + 1.998 * i as f64 / 100.0;
            let exact = l.eval(p).expect_finite("L");
            let brute = brute_conjugate(&h, p, -50.0, 50.0, 200_000);
            assert!((exact - brute).abs() < 1e-8, "p={p}: {exact} vs {brute}");
        }
    }

    #[test]
    fn conjugate_of_hinge_is_abs() {
        let l = hinge_flux().conjugate();
        assert_eq!(l.domain(), (-1.0, 1.0));
        assert_eq!(l.eval(-0.25), ExtReal::Finite(0.25));
        assert_eq!(l.eval(0.7), ExtReal::Finite(0.7));
        assert_eq!(l.eval(-1.0), ExtReal::Finite(1.0));
        assert_eq!(l.eval(2.0), ExtReal::PosInf);
    }

    #[test]
    fn linear_function_conjugate_is_point() {
        let h = PwlConvex::new_relaxed(vec![], vec![2.0], 0.0).unwrap();
        let l = h.conjugate();
        assert_eq!(l.domain(), (2.0, 2.0));
        assert_eq!(l.eval(2.0), ExtReal::Finite(0.0));
        assert_eq!(l.eval(1.999), ExtReal::PosInf);
        let back = l.biconjugate();
        for q in [-3.0, 0.0, 1.7] {
            assert_eq!(back.eval(q), h.eval(q));
        }
    }

    #[test]
    fn biconjugate_round_trips_exactly() {
        for h in [abs_flux(), hinge_flux()] {
            let back = h.conjugate().biconjugate();
            for q in [-2.0, -0.3, 0.0, 0.7, 5.0] {
                assert_eq!(back.eval(q), h.eval(q), "q={q}");
            }
        }
    }

    #[test]
    fn lipschitz_constant_matches_extreme_breaks() {
        assert_eq!(abs_flux().conjugate().lipschitz_constant(), 0.0);
        assert_eq!(hinge_flux().conjugate().lipschitz_constant(), 1.0);
    }

    #[test]
    fn json_wire_format() {
        let h = hinge_flux();
        let s = serde_json::to_string(&h).unwrap();
        assert!(s.contains("\"breaks\":[-1.0,1.0]"));
        assert!(s.contains("\"anchor\":0.0"));
        let back: PwlConvex = serde_json::from_str(&s).unwrap();
        assert_eq!(back, h);

        let l = h.conjugate();
        let s = serde_json::to_string(&l).unwrap();
        assert!(s.contains("\"domain\":[-1.0,1.0]"));
        assert!(s.contains("\"infinite_outside\":true"));
        let back: ConjugateFn = serde_json::from_str(&s).unwrap();
        assert_eq!(back, l);
    }

    /// Random valid flux with up to 8 breaks satisfying the sign assumptions.
    pub(crate) fn arb_flux() -> impl Strategy<Value = PwlConvex> {
        (2usize..=8, any::<u64>()).prop_map(|(n, seed)| crate::testutil::random_flux(n, seed))
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(48))]

        #[test]
        fn duality_round_trip_on_grid(h in arb_flux()) {
            let back = h.conjugate().biconjugate();
            let (c_lo, c_hi) = (h.breaks()[0], *h.breaks().last().unwrap());
            for i in 0..=1000 {
                let q = (c_lo - 5.0) + (c_hi - c_lo + 10.0) * i as f64 / 1000.0;
                let d = (back.eval(q) - h.eval(q)).abs();
                prop_assert!(d <= 1e-12 * (1.0 + h.eval(q).abs()), "q={q} diff={d}");
            }
        }

        #[test]
        fn conjugate_is_convex_and_lipschitz(h in arb_flux()) {
            let l = h.conjugate();
            // segment slopes strictly increasing
            for w in l.segment_slopes().windows(2) {
                prop_assert!(w[0] < w[1]);
            }
            let (lo, hi) = l.domain();
            let lip = l.lipschitz_constant();
            // clamp: lo + (hi - lo) * 1.0 can overshoot hi by one ulp
            let at = |s: f64| l.eval((lo + (hi - lo) * s).min(hi)).expect_finite("L");
            for i in 0..30 {
                for j in (i + 1)..31 {
                    let (s1, s2) = (i as f64 / 30.0, j as f64 / 30.0);
                    let (p1, p2) = (lo + (hi - lo) * s1, lo + (hi - lo) * s2);
                    // midpoint convexity
                    let mid = l.eval(0.5 * (p1 + p2)).expect_finite("L mid");
                    prop_assert!(mid <= 0.5 * (at(s1) + at(s2)) + 1e-10);
                    // Lipschitz bound
                    prop_assert!((at(s1) - at(s2)).abs() <= lip * (p1 - p2).abs() + 1e-10);
                }
            }
        }

        #[test]
        fn conjugate_matches_brute_force(h in arb_flux()) {
            let l = h.conjugate();
            let (lo, hi) = l.domain();
            for i in 1..20 {
                let p = lo + (hi - lo) * i as f64 / 20.0;
                let exact = l.eval(p).expect_finite("L");
                let brute = brute_conjugate(&h, p, h.breaks()[0] - 30.0, *h.breaks().last().unwrap() + 30.0, 400_000);
                prop_assert!((exact - brute).abs() < 1e-6, "p={p}: exact {exact} vs brute {brute}");
            }
        }
    }
}
