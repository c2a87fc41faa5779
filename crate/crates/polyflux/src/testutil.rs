//! Shared helpers for unit tests.

use crate::pwl_convex::PwlConvex;

/// Deterministic pseudo-random flux: `n_breaks` breaks straddling 0,
/// strictly increasing slopes with m_1 < 0 < m_last.
pub fn random_flux(n_breaks: usize, seed: u64) -> PwlConvex {
    use rand::{Rng, SeedableRng};
    let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(seed);
    let mut breaks: Vec<f64> = (0..n_breaks).map(|_| rng.gen_range(-5.0..5.0)).collect();
    breaks.sort_by(|a, b| a.partial_cmp(b).unwrap());
    breaks.dedup_by(|a, b| (*a - *b).abs() < 1e-3);
    // force the break span to straddle 0
    if breaks.len() == 1 {
        breaks[0] = 0.0;
    } else {
        breaks[0] = breaks[0].min(-0.1);
        let last = breaks.len() - 1;
        breaks[last] = breaks[last].max(0.1);
    }
    // strictly increasing slopes, then recenter so the extremes straddle 0
    let mut slopes = Vec::with_capacity(breaks.len() + 1);
    let mut m = 0.0;
    for _ in 0..=breaks.len() {
        m += rng.gen_range(0.05..2.0);
        slopes.push(m);
    }
    let shift = 0.5 * (slopes[0] + slopes[slopes.len() - 1]);
    for s in &mut slopes {
        *s -= shift;
    }
    let anchor = rng.gen_range(-2.0..2.0);
    PwlConvex::new(breaks, slopes, anchor).expect("generated flux is valid")
}
