//! Execution policy for the data-parallel loops.
//!
//! Work is always cut into the same fixed-size blocks and the per-block
//! results are combined in block order, so the output is bitwise identical
//! whether the blocks ran on one thread or many. Without the `parallel`
//! feature every policy runs sequentially.

use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Exec {
    Sequential,
    #[default]
    Parallel,
}

impl Exec {
    /// Whether this build can actually run blocks concurrently.
    pub fn is_parallel(self) -> bool {
        cfg!(feature = "parallel") && self == Exec::Parallel
    }
}

/// Evaluates `f(0..count)` and returns the results in index order.
pub fn map_indexed<T, F>(exec: Exec, count: usize, f: F) -> Vec<T>
where
    T: Send,
    F: Fn(usize) -> T + Sync + Send,
{
    #[cfg(feature = "parallel")]
    if exec.is_parallel() {
        use rayon::prelude::*;
        return (0..count).into_par_iter().map(f).collect();
    }
    let _ = exec;
    (0..count).map(f).collect()
}

/// Splits `[0, len)` into blocks of `block` elements and maps each block
/// range. Results come back in block order.
pub fn map_blocks<T, F>(exec: Exec, len: usize, block: usize, f: F) -> Vec<T>
where
    T: Send,
    F: Fn(std::ops::Range<usize>) -> T + Sync + Send,
{
    let block = block.max(1);
    let count = len.div_ceil(block);
    map_indexed(exec, count, |i| {
        let start = i * block;
        f(start..(start + block).min(len))
    })
}

/// Sets the global worker count. Only meaningful with the `parallel` feature;
/// the first successful call wins.
pub fn configure_threads(threads: usize) -> bool {
    #[cfg(feature = "parallel")]
    {
        rayon::ThreadPoolBuilder::new()
            .num_threads(threads)
            .build_global()
            .is_ok()
    }
    #[cfg(not(feature = "parallel"))]
    {
        let _ = threads;
        false
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::sum::Neumaier;

    #[test]
    fn block_order_is_stable() {
        let seq = map_blocks(Exec::Sequential, 1003, 10, |r| r.start);
        let par = map_blocks(Exec::Parallel, 1003, 10, |r| r.start);
        assert_eq!(seq, par);
        assert_eq!(seq.len(), 101);
        assert_eq!(*seq.last().unwrap(), 1000);
    }

    #[test]
    fn reductions_are_bitwise_identical() {
        let f = |r: std::ops::Range<usize>| {
            r.map(|i| ((i as f64) * 0.37).sin() / (1.0 + i as f64))
                .collect::<Neumaier>()
        };
        let a: Neumaier = map_blocks(Exec::Sequential, 100_000, 512, f).into_iter().sum();
        let b: Neumaier = map_blocks(Exec::Parallel, 100_000, 512, f).into_iter().sum();
        assert_eq!(a.value().to_bits(), b.value().to_bits());
    }
}
