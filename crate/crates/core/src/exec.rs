//! Data-parallel helpers for the grid scans that dominate a teaching session.
//!
//! Every helper takes an [`Execution`] mode. `Parallel` fans out over rayon
//! when the `parallel` feature is enabled and silently degrades to the
//! sequential path otherwise. Both paths produce bit-identical results: maps
//! are elementwise and the argmax reduction uses a total order with an index
//! tie-break, so no floating-point reassociation ever happens.

use serde::{Deserialize, Serialize};

#[cfg(feature = "parallel")]
use rayon::prelude::*;

/// Below this many elements the parallel path is not worth the fork/join.
#[cfg(feature = "parallel")]
const PAR_THRESHOLD: usize = 1024;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Execution {
    Sequential,
    #[default]
    Parallel,
}

impl Execution {
    /// True when this mode will actually run on the rayon pool.
    pub fn is_parallel(self) -> bool {
        cfg!(feature = "parallel") && self == Execution::Parallel
    }

    #[cfg(feature = "parallel")]
    fn use_pool(self, len: usize) -> bool {
        self.is_parallel() && len >= PAR_THRESHOLD
    }
}

/// `out[i] = f(i)` for `i in 0..n`.
pub fn map_indexed<F>(exec: Execution, n: usize, f: F) -> Vec<f64>
where
    F: Fn(usize) -> f64 + Sync + Send,
{
    #[cfg(feature = "parallel")]
    if exec.use_pool(n) {
        return (0..n).into_par_iter().map(f).collect();
    }
    let _ = exec;
    (0..n).map(f).collect()
}

/// Applies `f(i, &mut values[i])` to every element.
pub fn update_indexed<F>(exec: Execution, values: &mut [f64], f: F)
where
    F: Fn(usize, &mut f64) + Sync + Send,
{
    #[cfg(feature = "parallel")]
    if exec.use_pool(values.len()) {
        values.par_iter_mut().enumerate().for_each(|(i, v)| f(i, v));
        return;
    }
    let _ = exec;
    values.iter_mut().enumerate().for_each(|(i, v)| f(i, v));
}

/// Position in `candidates` of the largest key; ties go to the smallest
/// candidate value. Returns `None` for an empty slice.
pub fn argmax_by_key<F>(exec: Execution, candidates: &[usize], key: F) -> Option<usize>
where
    F: Fn(usize) -> f64 + Sync + Send,
{
    let better = |a: (usize, f64), b: (usize, f64)| -> (usize, f64) {
        if b.1 > a.1 || (b.1 == a.1 && candidates[b.0] < candidates[a.0]) {
            b
        } else {
            a
        }
    };
    #[cfg(feature = "parallel")]
    if exec.use_pool(candidates.len()) {
        return candidates
            .par_iter()
            .enumerate()
            .map(|(pos, &idx)| (pos, key(idx)))
            .reduce_with(better)
            .map(|(pos, _)| pos);
    }
    let _ = exec;
    candidates
        .iter()
        .enumerate()
        .map(|(pos, &idx)| (pos, key(idx)))
        .reduce(better)
        .map(|(pos, _)| pos)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn modes_agree_on_large_maps() {
        let n = 5000;
        let f = |i: usize| ((i as f64) * 0.37).sin();
        assert_eq!(
            map_indexed(Execution::Sequential, n, f),
            map_indexed(Execution::Parallel, n, f)
        );
    }

    #[test]
    fn argmax_tie_break_is_smallest_candidate() {
        let candidates: Vec<usize> = (0..4000).rev().collect();
        for exec in [Execution::Sequential, Execution::Parallel] {
            let pos = argmax_by_key(exec, &candidates, |_| 1.0).unwrap();
            assert_eq!(candidates[pos], 0);
        }
        assert_eq!(argmax_by_key(Execution::Sequential, &[], |_| 0.0), None);
    }

    #[test]
    fn update_matches_sequential() {
        let mut a: Vec<f64> = (0..3000).map(|i| i as f64).collect();
        let mut b = a.clone();
        update_indexed(Execution::Sequential, &mut a, |i, v| {
            *v += (i as f64).sqrt()
        });
        update_indexed(Execution::Parallel, &mut b, |i, v| *v += (i as f64).sqrt());
        assert_eq!(a, b);
    }
}
