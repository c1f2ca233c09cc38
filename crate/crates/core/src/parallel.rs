//! Order-preserving map over independent work items.
//!
//! With the `parallel` feature the work runs on a rayon pool whose size is
//! capped by the `QENT_THREADS` environment variable; without it every
//! request falls back to a plain sequential loop.

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum Execution {
    Sequential,
    #[default]
    Parallel,
}

/// Environment variable that caps worker threads.
pub const THREADS_ENV: &str = "QENT_THREADS";

#[cfg(feature = "parallel")]
fn pool() -> &'static rayon::ThreadPool {
    use std::sync::OnceLock;
    static POOL: OnceLock<rayon::ThreadPool> = OnceLock::new();
    POOL.get_or_init(|| {
        let mut builder = rayon::ThreadPoolBuilder::new();
        if let Some(n) = std::env::var(THREADS_ENV)
            .ok()
            .and_then(|v| v.trim().parse::<usize>().ok())
            .filter(|&n| n > 0)
        {
            builder = builder.num_threads(n);
        }
        builder.build().expect("could not spawn worker threads")
    })
}

/// Number of workers a parallel map will use.
pub fn worker_count(exec: Execution) -> usize {
    match exec {
        Execution::Sequential => 1,
        #[cfg(feature = "parallel")]
        Execution::Parallel => pool().current_num_threads(),
        #[cfg(not(feature = "parallel"))]
        Execution::Parallel => 1,
    }
}

/// Applies `f` to every item; the output order matches the input order
/// regardless of completion order.
pub fn map_ordered<T, R, F>(items: &[T], exec: Execution, f: F) -> Vec<R>
where
    T: Sync,
    R: Send,
    F: Fn(&T) -> R + Sync + Send,
{
    match exec {
        #[cfg(feature = "parallel")]
        Execution::Parallel => {
            use rayon::prelude::*;
            pool().install(|| items.par_iter().map(&f).collect())
        }
        _ => items.iter().map(f).collect(),
    }
}
