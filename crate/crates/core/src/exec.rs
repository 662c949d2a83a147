//! Execution policy for the data-parallel kernels.
//!
//! Every hot loop in the crate (collision per x-cell, transport per output
//! row, particle drift per agent, diagnostic reductions) goes through the
//! helpers here. With the `parallel` feature the `Parallel` policy runs on the
//! rayon pool; without it both policies run the same sequential loop, so the
//! results are identical either way.

#[cfg(feature = "parallel")]
use rayon::prelude::*;

/// How a kernel distributes its independent work items.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum Exec {
    Sequential,
    #[default]
    Parallel,
}

impl Exec {
    /// `true` when this policy actually runs on more than one thread.
    pub fn is_parallel(self) -> bool {
        cfg!(feature = "parallel") && self == Exec::Parallel
    }
}

/// Sets the global worker count. No-op without the `parallel` feature or if
/// the pool was already initialised.
pub fn init_threads(threads: usize) {
    #[cfg(feature = "parallel")]
    {
        let _ = rayon::ThreadPoolBuilder::new()
            .num_threads(threads)
            .build_global();
    }
    #[cfg(not(feature = "parallel"))]
    let _ = threads;
}

/// Number of workers the parallel policy will use.
pub fn current_threads() -> usize {
    #[cfg(feature = "parallel")]
    {
        rayon::current_num_threads()
    }
    #[cfg(not(feature = "parallel"))]
    {
        1
    }
}

/// Applies `op(index, chunk)` to consecutive `chunk`-sized pieces of `data`.
pub fn for_each_chunk<T, F>(exec: Exec, data: &mut [T], chunk: usize, op: F)
where
    T: Send,
    F: Fn(usize, &mut [T]) + Sync + Send,
{
    #[cfg(feature = "parallel")]
    if exec.is_parallel() {
        data.par_chunks_mut(chunk)
            .enumerate()
            .for_each(|(i, c)| op(i, c));
        return;
    }
    let _ = exec;
    data.chunks_mut(chunk).enumerate().for_each(|(i, c)| op(i, c));
}

/// Like [`for_each_chunk`] but each chunk may fail; the first error (lowest
/// index in sequential mode, any in parallel mode) is returned.
pub fn try_for_each_chunk<T, E, F>(exec: Exec, data: &mut [T], chunk: usize, op: F) -> Result<(), E>
where
    T: Send,
    E: Send,
    F: Fn(usize, &mut [T]) -> Result<(), E> + Sync + Send,
{
    #[cfg(feature = "parallel")]
    if exec.is_parallel() {
        return data
            .par_chunks_mut(chunk)
            .enumerate()
            .try_for_each(|(i, c)| op(i, c));
    }
    let _ = exec;
    data.chunks_mut(chunk)
        .enumerate()
        .try_for_each(|(i, c)| op(i, c))
}

/// Collects `op(i)` for `i in 0..n`, preserving order.
pub fn map_range<T, F>(exec: Exec, n: usize, op: F) -> Vec<T>
where
    T: Send,
    F: Fn(usize) -> T + Sync + Send,
{
    #[cfg(feature = "parallel")]
    if exec.is_parallel() {
        return (0..n).into_par_iter().map(op).collect();
    }
    let _ = exec;
    (0..n).map(op).collect()
}

/// Ordered sum of `op(i)`. The per-item values are collected first and then
/// summed left to right so the result does not depend on the policy.
pub fn sum_range<F>(exec: Exec, n: usize, op: F) -> f64
where
    F: Fn(usize) -> f64 + Sync + Send,
{
    map_range(exec, n, op).into_iter().sum()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn policies_agree() {
        let seq = map_range(Exec::Sequential, 1000, |i| (i as f64).sin());
        let par = map_range(Exec::Parallel, 1000, |i| (i as f64).sin());
        assert_eq!(seq, par);
        let a = sum_range(Exec::Sequential, 1000, |i| 1.0 / (1.0 + i as f64));
        let b = sum_range(Exec::Parallel, 1000, |i| 1.0 / (1.0 + i as f64));
        assert_eq!(a.to_bits(), b.to_bits());
    }

    #[test]
    fn chunks_visit_every_item_once() {
        let mut data = vec![0usize; 97];
        for_each_chunk(Exec::Parallel, &mut data, 10, |i, c| {
            for x in c.iter_mut() {
                *x += i + 1;
            }
        });
        assert!(data.iter().all(|&x| x >= 1));
        assert_eq!(data[96], 10);
    }
}
