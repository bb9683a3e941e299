//! Order-preserving maps over independent work items.
//!
//! Every per-run computation is sequential; parallelism is only applied across
//! runs, so results never depend on the thread count.

/// Sequential map, always available.
pub fn map_seq<T, R, F>(items: &[T], f: F) -> Vec<R>
where
    F: Fn(&T) -> R,
{
    items.iter().map(f).collect()
}

/// Parallel map when the `parallel` feature is on, sequential otherwise.
#[cfg(feature = "parallel")]
pub fn map_par<T, R, F>(items: &[T], f: F) -> Vec<R>
where
    T: Sync,
    R: Send,
    F: Fn(&T) -> R + Sync + Send,
{
    use rayon::prelude::*;
    items.par_iter().map(f).collect()
}

#[cfg(not(feature = "parallel"))]
pub fn map_par<T, R, F>(items: &[T], f: F) -> Vec<R>
where
    T: Sync,
    R: Send,
    F: Fn(&T) -> R + Sync + Send,
{
    map_seq(items, f)
}

/// Size the global pool. A no-op without the `parallel` feature.
pub fn configure_threads(n: usize) -> crate::Result<()> {
    #[cfg(feature = "parallel")]
    {
        if n > 0 {
            rayon::ThreadPoolBuilder::new()
                .num_threads(n)
                .build_global()
                .map_err(|e| crate::Error::Config(format!("thread pool: {e}")))?;
        }
    }
    #[cfg(not(feature = "parallel"))]
    let _ = n;
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn maps_agree_and_keep_order() {
        let xs: Vec<u64> = (0..100).collect();
        let a = map_seq(&xs, |x| x * x);
        let b = map_par(&xs, |x| x * x);
        assert_eq!(a, b);
        assert_eq!(a[7], 49);
    }
}
