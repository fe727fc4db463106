use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use super::{CdfTable, MeasureP};
use crate::exec;

/// Width at which inverse-CDF bisection stops.
pub const BISECTION_TOL: f64 = 1e-10;

/// `count` i.i.d. draws from `mu` by inverse-CDF bisection on `[-2, 2]`.
///
/// The uniforms come from a ChaCha8 stream seeded with `seed` and are drawn
/// serially; only the inversions run in parallel, so the output does not
/// depend on the thread count.
pub fn sample(mu: MeasureP, count: usize, seed: u64) -> Vec<f64> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let uniforms: Vec<f64> = (0..count).map(|_| rng.random::<f64>()).collect();
    let table = CdfTable::shared(mu);
    exec::map(&uniforms, |&u| invert(&table, u))
}

fn invert(table: &CdfTable, u: f64) -> f64 {
    let (mut lo, mut hi) = (-2.0f64, 2.0f64);
    while hi - lo > BISECTION_TOL {
        let mid = 0.5 * (lo + hi);
        if table.cdf(mid).expect("mid lies in [-2, 2]") < u {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    0.5 * (lo + hi)
}
