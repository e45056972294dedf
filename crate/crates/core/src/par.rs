//! Index-ordered parallel map with a sequential fallback.
//!
//! With the `parallel` feature the work is spread over rayon's pool (or a
//! dedicated pool of the requested size); without it, or with one thread,
//! everything runs on the caller's thread. Output order is always the index
//! order, so reductions over the results are deterministic.

/// How many worker threads to use.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum Threads {
    /// rayon's global pool (all cores).
    #[default]
    Auto,
    /// Exactly this many threads; `Fixed(1)` is the sequential path.
    Fixed(usize),
}

impl Threads {
    pub fn from_option(threads: Option<usize>) -> Self {
        match threads {
            Some(t) => Threads::Fixed(t.max(1)),
            None => Threads::Auto,
        }
    }

    pub fn is_sequential(self) -> bool {
        matches!(self, Threads::Fixed(1)) || !cfg!(feature = "parallel")
    }
}

/// `(0..len).map(f).collect()`, possibly in parallel.
pub fn map_indexed<T, F>(len: usize, threads: Threads, f: F) -> Vec<T>
where
    T: Send,
    F: Fn(usize) -> T + Send + Sync,
{
    if threads.is_sequential() {
        return (0..len).map(f).collect();
    }
    #[cfg(feature = "parallel")]
    {
        use rayon::prelude::*;
        match threads {
            Threads::Auto => (0..len).into_par_iter().map(f).collect(),
            Threads::Fixed(t) => {
                let pool = rayon::ThreadPoolBuilder::new()
                    .num_threads(t)
                    .build()
                    .expect("failed to build thread pool");
                pool.install(|| (0..len).into_par_iter().map(f).collect())
            }
        }
    }
    #[cfg(not(feature = "parallel"))]
    unreachable!()
}

/// Map within whatever pool the caller is already running on. Used for inner
/// loops (bootstrap repetitions) nested inside [`map_indexed`].
pub fn map_nested<T, F>(len: usize, parallel: bool, f: F) -> Vec<T>
where
    T: Send,
    F: Fn(usize) -> T + Send + Sync,
{
    #[cfg(feature = "parallel")]
    if parallel {
        use rayon::prelude::*;
        return (0..len).into_par_iter().map(f).collect();
    }
    let _ = parallel;
    (0..len).map(f).collect()
}
