//! Replication-level execution: rayon when the `parallel` feature is on,
//! a plain loop otherwise.
//!
//! Results always come back in index order, so any reduction performed by the
//! caller over the returned vector is independent of the worker count.

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Execution {
    Sequential,
    /// `None` uses the global rayon pool; `Some(w)` runs on a dedicated pool of `w` threads.
    Parallel(Option<usize>),
}

impl Default for Execution {
    fn default() -> Self {
        Execution::Parallel(None)
    }
}

impl Execution {
    /// `Some(1)` is sequential; `None` means automatic.
    pub fn from_workers(workers: Option<usize>) -> Self {
        match workers {
            Some(0) | Some(1) => Execution::Sequential,
            w => Execution::Parallel(w),
        }
    }

    /// Evaluates `f(0), .., f(count - 1)` and returns the results in index order.
    pub fn map<T, F>(&self, count: usize, f: F) -> Vec<T>
    where
        T: Send,
        F: Fn(usize) -> T + Sync + Send,
    {
        match *self {
            Execution::Sequential => (0..count).map(f).collect(),
            Execution::Parallel(workers) => parallel_map(count, workers, f),
        }
    }
}

#[cfg(feature = "parallel")]
fn parallel_map<T, F>(count: usize, workers: Option<usize>, f: F) -> Vec<T>
where
    T: Send,
    F: Fn(usize) -> T + Sync + Send,
{
    use rayon::prelude::*;

    let run = || (0..count).into_par_iter().map(&f).collect();
    match workers {
        None => run(),
        Some(w) => match rayon::ThreadPoolBuilder::new().num_threads(w).build() {
            Ok(pool) => pool.install(run),
            Err(_) => run(),
        },
    }
}

#[cfg(not(feature = "parallel"))]
fn parallel_map<T, F>(count: usize, _workers: Option<usize>, f: F) -> Vec<T>
where
    T: Send,
    F: Fn(usize) -> T + Sync + Send,
{
    (0..count).map(f).collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn order_is_preserved() {
        let square = |i: usize| i * i;
        let expected: Vec<usize> = (0..1000).map(square).collect();
        for exec in [
            Execution::Sequential,
            Execution::Parallel(None),
            Execution::Parallel(Some(3)),
        ] {
            assert_eq!(exec.map(1000, square), expected);
        }
    }

    #[test]
    fn worker_mapping() {
        assert_eq!(Execution::from_workers(Some(1)), Execution::Sequential);
        assert_eq!(Execution::from_workers(None), Execution::Parallel(None));
        assert_eq!(Execution::from_workers(Some(4)), Execution::Parallel(Some(4)));
    }
}
