//! Runtime choice between the rayon pool and a plain sequential loop.
//!
//! Every parallel map in the crate collects results in input order, so the
//! two modes produce identical values. Without the `parallel` feature the
//! threaded variant silently runs sequentially.

use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
pub enum Parallelism {
    Sequential,
    /// Use the global rayon pool.
    #[default]
    Rayon,
}

impl Parallelism {
    pub fn from_jobs(jobs: usize) -> Self {
        if jobs <= 1 {
            Parallelism::Sequential
        } else {
            Parallelism::Rayon
        }
    }

    /// Order-preserving map over a slice.
    pub fn map<T, U, F>(self, items: &[T], f: F) -> Vec<U>
    where
        T: Sync,
        U: Send,
        F: Fn(&T) -> U + Sync + Send,
    {
        match self {
            Parallelism::Sequential => items.iter().map(f).collect(),
            #[cfg(feature = "parallel")]
            Parallelism::Rayon => {
                use rayon::prelude::*;
                items.par_iter().map(f).collect()
            }
            #[cfg(not(feature = "parallel"))]
            Parallelism::Rayon => items.iter().map(f).collect(),
        }
    }

    /// Order-preserving map over `0..n`.
    pub fn map_range<U, F>(self, n: usize, f: F) -> Vec<U>
    where
        U: Send,
        F: Fn(usize) -> U + Sync + Send,
    {
        match self {
            Parallelism::Sequential => (0..n).map(f).collect(),
            #[cfg(feature = "parallel")]
            Parallelism::Rayon => {
                use rayon::prelude::*;
                (0..n).into_par_iter().map(f).collect()
            }
            #[cfg(not(feature = "parallel"))]
            Parallelism::Rayon => (0..n).map(f).collect(),
        }
    }
}

/// Run `f` inside a dedicated pool of `jobs` threads when the feature is on.
pub fn with_jobs<R: Send>(jobs: usize, f: impl FnOnce(Parallelism) -> R + Send) -> R {
    let mode = Parallelism::from_jobs(jobs);
    #[cfg(feature = "parallel")]
    if mode == Parallelism::Rayon {
        if let Ok(pool) = rayon::ThreadPoolBuilder::new().num_threads(jobs).build() {
            return pool.install(|| f(mode));
        }
    }
    f(mode)
}
