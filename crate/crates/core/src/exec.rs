//! Data-parallel helpers. With the `parallel` feature (default) they run on
//! the rayon global pool; without it they fall back to plain iterators.
//! Both paths produce bit-identical results: reductions are done over fixed
//! chunks whose partial results are combined in order.

/// Elements per partial sum in [`chunked_sum`].
pub const CHUNK: usize = 1024;

#[cfg(feature = "parallel")]
use rayon::prelude::*;

/// `items.iter().map(f).collect()`, in parallel when enabled.
pub fn map<T, U, F>(items: &[T], f: F) -> Vec<U>
where
    T: Sync,
    U: Send,
    F: Fn(&T) -> U + Sync + Send,
{
    #[cfg(feature = "parallel")]
    {
        items.par_iter().map(f).collect()
    }
    #[cfg(not(feature = "parallel"))]
    {
        items.iter().map(f).collect()
    }
}

/// `(start..end).map(f).collect()`, in parallel when enabled.
pub fn map_range<U, F>(start: u64, end: u64, f: F) -> Vec<U>
where
    U: Send,
    F: Fn(u64) -> U + Sync + Send,
{
    #[cfg(feature = "parallel")]
    {
        (start..end).into_par_iter().map(f).collect()
    }
    #[cfg(not(feature = "parallel"))]
    {
        (start..end).map(f).collect()
    }
}

/// Sum of `f` over `items`, taken as per-chunk partials added in order.
pub fn chunked_sum<T, F>(items: &[T], f: F) -> f64
where
    T: Sync,
    F: Fn(&[T]) -> f64 + Sync + Send,
{
    neumaier_sum(map_chunks(items, f))
}

/// `f` applied to consecutive chunks of `items`, results in chunk order.
pub fn map_chunks<T, U, F>(items: &[T], f: F) -> Vec<U>
where
    T: Sync,
    U: Send,
    F: Fn(&[T]) -> U + Sync + Send,
{
    #[cfg(feature = "parallel")]
    {
        items.par_chunks(CHUNK).map(f).collect()
    }
    #[cfg(not(feature = "parallel"))]
    {
        items.chunks(CHUNK).map(f).collect()
    }
}

/// Compensated (Neumaier) summation.
pub fn neumaier_sum(values: impl IntoIterator<Item = f64>) -> f64 {
    let (mut sum, mut comp) = (0.0f64, 0.0f64);
    for v in values {
        let t = sum + v;
        if sum.abs() >= v.abs() {
            comp += (sum - t) + v;
        } else {
            comp += (v - t) + sum;
        }
        sum = t;
    }
    sum + comp
}

/// Whether this build runs the parallel path.
pub const fn is_parallel() -> bool {
    cfg!(feature = "parallel")
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn neumaier_recovers_cancelled_terms() {
        assert_eq!(neumaier_sum([1.0, 1e100, 1.0, -1e100]), 2.0);
    }

    #[test]
    fn chunked_sum_matches_serial_chunks() {
        let xs: Vec<f64> = (0..5000).map(|i| (i as f64).sin()).collect();
        let expected = neumaier_sum(xs.chunks(CHUNK).map(|c| neumaier_sum(c.iter().copied())));
        let got = chunked_sum(&xs, |c| neumaier_sum(c.iter().copied()));
        assert_eq!(got.to_bits(), expected.to_bits());
    }
}
