//! Data-parallel map with a sequential fallback.
//!
//! With the `parallel` feature the map runs on rayon; without it, or when
//! [`Execution::Sequential`] is requested, items are processed in order on the
//! calling thread. Output order always follows input order.

/// Environment variable capping the worker count (0 or unset = automatic).
pub const THREADS_ENV: &str = "LNA_FORGE_THREADS";

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum Execution {
    Sequential,
    /// Parallel map; `threads == 0` lets the pool pick.
    Parallel {
        threads: usize,
    },
    /// Parallel with the worker count taken from `LNA_FORGE_THREADS`.
    #[default]
    FromEnv,
}

impl Execution {
    pub fn resolve(self) -> Execution {
        match self {
            Execution::FromEnv => {
                let threads = std::env::var(THREADS_ENV)
                    .ok()
                    .and_then(|v| v.trim().parse::<usize>().ok())
                    .unwrap_or(0);
                Execution::Parallel { threads }
            }
            other => other,
        }
    }
}

/// Map over `items` using the global pool (or sequentially without `parallel`).
pub fn map<T, R, F>(items: &[T], f: F) -> Vec<R>
where
    T: Sync,
    R: Send,
    F: Fn(&T) -> R + Sync + Send,
{
    #[cfg(feature = "parallel")]
    {
        use rayon::prelude::*;
        items.par_iter().map(f).collect()
    }
    #[cfg(not(feature = "parallel"))]
    {
        items.iter().map(f).collect()
    }
}

/// Map over `items` under an explicit execution policy.
pub fn map_with<T, R, F>(items: &[T], exec: Execution, f: F) -> Vec<R>
where
    T: Sync,
    R: Send,
    F: Fn(&T) -> R + Sync + Send,
{
    match exec.resolve() {
        Execution::Sequential => items.iter().map(f).collect(),
        #[cfg(feature = "parallel")]
        Execution::Parallel { threads } => {
            use rayon::prelude::*;
            if threads == 0 {
                items.par_iter().map(f).collect()
            } else {
                match rayon::ThreadPoolBuilder::new().num_threads(threads).build() {
                    Ok(pool) => pool.install(|| items.par_iter().map(&f).collect()),
                    Err(_) => items.par_iter().map(f).collect(),
                }
            }
        }
        #[cfg(not(feature = "parallel"))]
        Execution::Parallel { .. } => items.iter().map(f).collect(),
        Execution::FromEnv => unreachable!("resolved above"),
    }
}
