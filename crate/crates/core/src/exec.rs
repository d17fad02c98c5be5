//! Execution mode for the row-parallel kernels.
//!
//! Every parallel path computes each output row with the same sequential
//! code, so results are bitwise identical to [`Exec::Sequential`] whatever
//! the thread count.

use ndarray::{Array2, ArrayViewMut1, Axis};

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Exec {
    Sequential,
    /// Falls back to sequential when the `parallel` feature is disabled.
    Parallel,
}

impl Default for Exec {
    fn default() -> Self {
        if cfg!(feature = "parallel") {
            Exec::Parallel
        } else {
            Exec::Sequential
        }
    }
}

impl Exec {
    pub fn is_parallel(self) -> bool {
        cfg!(feature = "parallel") && self == Exec::Parallel
    }
}

/// Fill `out` row by row with `f(row_index, row)`.
pub(crate) fn for_each_row<F>(out: &mut Array2<f64>, exec: Exec, f: F)
where
    F: Fn(usize, ArrayViewMut1<'_, f64>) + Send + Sync,
{
    #[cfg(feature = "parallel")]
    if exec.is_parallel() {
        use ndarray::parallel::prelude::*;
        out.axis_iter_mut(Axis(0))
            .into_par_iter()
            .enumerate()
            .for_each(|(i, row)| f(i, row));
        return;
    }
    let _ = exec;
    for (i, row) in out.axis_iter_mut(Axis(0)).enumerate() {
        f(i, row);
    }
}

/// Map `f` over `0..len`, collecting in index order.
pub(crate) fn map_indices<T, F>(len: usize, exec: Exec, f: F) -> Vec<T>
where
    T: Send,
    F: Fn(usize) -> T + Send + Sync,
{
    #[cfg(feature = "parallel")]
    if exec.is_parallel() {
        use rayon::prelude::*;
        return (0..len).into_par_iter().map(f).collect();
    }
    let _ = exec;
    (0..len).map(f).collect()
}
