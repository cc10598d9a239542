//! Data-parallel execution with a sequential fallback. Every operation
//! writes each output element independently, so results are bitwise
//! identical for both strategies.

/// Execution strategy for grid-wide loops.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub enum Exec {
    #[cfg_attr(not(feature = "parallel"), default)]
    Sequential,
    #[cfg(feature = "parallel")]
    #[default]
    Parallel,
}

impl Exec {
    /// Fill `out` in rows of `row` elements; `f(start, chunk)` fills the
    /// chunk beginning at flat index `start`.
    pub fn for_rows<F>(self, out: &mut [f64], row: usize, f: F)
    where
        F: Fn(usize, &mut [f64]) + Sync + Send,
    {
        let row = row.max(1);
        match self {
            Exec::Sequential => out.chunks_mut(row).enumerate().for_each(|(k, c)| f(k * row, c)),
            #[cfg(feature = "parallel")]
            Exec::Parallel => {
                use rayon::prelude::*;
                out.par_chunks_mut(row).enumerate().for_each(|(k, c)| f(k * row, c))
            }
        }
    }

    /// `(0..n).map(f).collect()`.
    pub fn map<T, F>(self, n: usize, f: F) -> Vec<T>
    where
        T: Send,
        F: Fn(usize) -> T + Sync + Send,
    {
        match self {
            Exec::Sequential => (0..n).map(f).collect(),
            #[cfg(feature = "parallel")]
            Exec::Parallel => {
                use rayon::prelude::*;
                (0..n).into_par_iter().map(f).collect()
            }
        }
    }
}
