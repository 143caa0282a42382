//! Execution policy for the data-parallel kernels.
//!
//! Every hot loop in the crate (power-diagram cells, Lorenz-map grid
//! evaluations, Monte Carlo draws for the ILF) is an indexed map whose
//! results are collected in index order, so the sequential and parallel
//! paths produce bit-identical output. Building without the `parallel`
//! feature removes the rayon dependency; `Execution::Parallel` then runs
//! sequentially.

use serde::{Deserialize, Serialize};

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Execution {
    Sequential,
    #[default]
    Parallel,
}

impl Execution {
    /// Whether this build can actually run work on several threads.
    pub const fn parallel_available() -> bool {
        cfg!(feature = "parallel")
    }

    /// Computes `f(i)` for `i` in `0..n`, in index order.
    pub fn map<T, F>(self, n: usize, f: F) -> Vec<T>
    where
        T: Send,
        F: Fn(usize) -> T + Sync + Send,
    {
        match self {
            #[cfg(feature = "parallel")]
            Execution::Parallel => {
                use rayon::prelude::*;
                (0..n).into_par_iter().map(f).collect()
            }
            _ => (0..n).map(f).collect(),
        }
    }

    /// Like [`Execution::map`], with a per-worker scratch value built by `init`.
    pub fn map_init<S, T, I, F>(self, n: usize, init: I, f: F) -> Vec<T>
    where
        T: Send,
        I: Fn() -> S + Sync + Send,
        F: Fn(&mut S, usize) -> T + Sync + Send,
    {
        match self {
            #[cfg(feature = "parallel")]
            Execution::Parallel => {
                use rayon::prelude::*;
                (0..n).into_par_iter().map_init(init, f).collect()
            }
            _ => {
                let mut scratch = init();
                (0..n).map(|i| f(&mut scratch, i)).collect()
            }
        }
    }
}
