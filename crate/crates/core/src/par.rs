//! Optional data parallelism.
//!
//! With the `parallel` feature the macros below expand to rayon parallel
//! iterators; without it they expand to the equivalent sequential iterators,
//! so call sites compile unchanged either way. Everything downstream is
//! written so that thread count never changes numerical results: parallel
//! units own disjoint output slots, and reductions are combined in a fixed
//! chunk order.

#[cfg(feature = "parallel")]
pub use rayon;

/// Iterate a collection, in parallel when the `parallel` feature is on.
#[macro_export]
macro_rules! par_iter {
    ($collection:expr) => {{
        #[cfg(feature = "parallel")]
        {
            $crate::par::rayon::iter::IntoParallelIterator::into_par_iter($collection)
        }
        #[cfg(not(feature = "parallel"))]
        {
            ::core::iter::IntoIterator::into_iter($collection)
        }
    }};
}

/// Mutable chunk iterator over a slice, parallel when the feature is on.
#[macro_export]
macro_rules! par_chunks_mut {
    ($slice:expr, $size:expr) => {{
        #[cfg(feature = "parallel")]
        {
            $crate::par::rayon::slice::ParallelSliceMut::par_chunks_mut($slice, $size)
        }
        #[cfg(not(feature = "parallel"))]
        {
            $slice.chunks_mut($size)
        }
    }};
}

/// Map `items` through `f` on a dedicated pool of `jobs` threads
/// (`jobs == 0` means the library default). Output order matches input
/// order regardless of scheduling, which keeps downstream file emission
/// byte-stable across thread counts.
#[cfg(feature = "parallel")]
pub fn run_with_jobs<T, R, F>(jobs: usize, items: Vec<T>, f: F) -> Vec<R>
where
    T: Send,
    R: Send,
    F: Fn(T) -> R + Sync + Send,
{
    use rayon::prelude::*;
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(jobs)
        .build()
        .expect("building a rayon pool cannot fail with these settings");
    pool.install(|| items.into_par_iter().map(f).collect())
}

#[cfg(not(feature = "parallel"))]
pub fn run_with_jobs<T, R, F>(_jobs: usize, items: Vec<T>, f: F) -> Vec<R>
where
    T: Send,
    R: Send,
    F: Fn(T) -> R + Sync + Send,
{
    items.into_iter().map(f).collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    #[cfg(feature = "parallel")]
    use rayon::prelude::*;

    #[test]
    fn run_with_jobs_preserves_input_order() {
        let items: Vec<usize> = (0..257).collect();
        let doubled = run_with_jobs(4, items.clone(), |x| 2 * x);
        assert_eq!(doubled, items.iter().map(|x| 2 * x).collect::<Vec<_>>());
    }

    #[test]
    fn par_iter_macro_collects_in_order() {
        let squares: Vec<u64> = par_iter!(0u64..100).map(|x| x * x).collect();
        assert_eq!(squares[99], 99 * 99);
        assert_eq!(squares.len(), 100);
    }
}
