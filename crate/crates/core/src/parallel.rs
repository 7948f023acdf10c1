//! Replicate-parallel execution.
//!
//! Replicate `i` always consumes stream `(master_seed, i)` and results are
//! collected in replicate order, so output never depends on the thread count.

use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::noise::{derive_stream, NoiseStream};

/// Environment variable read when no thread count is given.
pub const THREADS_ENV: &str = "KOLCOUPLE_THREADS";

/// Thread count from an explicit value, then the environment, then rayon's
/// default.
pub fn resolve_threads(explicit: Option<usize>) -> Result<usize> {
    if let Some(n) = explicit {
        return if n == 0 {
            Err(Error::InvalidArgument("thread count must be positive".into()))
        } else {
            Ok(n)
        };
    }
    if let Ok(s) = std::env::var(THREADS_ENV) {
        return match s.trim().parse::<usize>() {
            Ok(n) if n > 0 => Ok(n),
            _ => Err(Error::InvalidArgument(format!("{THREADS_ENV}={s:?} is not a positive integer"))),
        };
    }
    Ok(rayon::current_num_threads())
}

/// Runs `f` once per replicate on its own stream.
pub fn run_replicates<T, F>(reps: usize, master_seed: u64, threads: Option<usize>, f: F) -> Result<Vec<T>>
where
    T: Send,
    F: Fn(&mut NoiseStream) -> T + Sync + Send,
{
    let n = resolve_threads(threads)?;
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(n)
        .build()
        .map_err(|e| Error::InvalidArgument(format!("thread pool: {e}")))?;
    Ok(pool.install(|| {
        (0..reps as u64)
            .into_par_iter()
            .map(|r| f(&mut derive_stream(master_seed, r)))
            .collect()
    }))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::noise::GaussianSource;

    #[test]
    fn independent_of_thread_count() {
        let a = run_replicates(1000, 9, Some(1), |s| s.standard_normal()).unwrap();
        let b = run_replicates(1000, 9, Some(4), |s| s.standard_normal()).unwrap();
        assert_eq!(a, b);
        assert_eq!(a[17], derive_stream(9, 17).standard_normal());
    }

    #[test]
    fn zero_threads_rejected() {
        assert!(resolve_threads(Some(0)).is_err());
    }
}
