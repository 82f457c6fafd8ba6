//! Deterministic reductions and worker-pool helpers.
//!
//! All sums and dot products are reduced over fixed-size chunks whose partials are
//! combined in index order, so results are bit-identical for any worker count.

use rayon::prelude::*;

/// Chunk length for fixed-order reductions. Must not depend on the worker count.
const CHUNK: usize = 4096;

/// Below this length parallel dispatch costs more than it saves.
const PAR_MIN: usize = 1 << 15;

fn chunk_sums<F: Fn(&[f64]) -> f64 + Sync>(xs: &[f64], f: F) -> f64 {
    if xs.len() >= PAR_MIN && rayon::current_num_threads() > 1 {
        let partials: Vec<f64> = xs.par_chunks(CHUNK).map(&f).collect();
        partials.iter().sum()
    } else {
        xs.chunks(CHUNK).map(&f).sum()
    }
}

pub fn sum(xs: &[f64]) -> f64 {
    chunk_sums(xs, |c| c.iter().sum())
}

pub fn dot(a: &[f64], b: &[f64]) -> f64 {
    debug_assert_eq!(a.len(), b.len());
    if a.len() >= PAR_MIN && rayon::current_num_threads() > 1 {
        let partials: Vec<f64> = a
            .par_chunks(CHUNK)
            .zip(b.par_chunks(CHUNK))
            .map(|(ca, cb)| ca.iter().zip(cb).map(|(x, y)| x * y).sum::<f64>())
            .collect();
        partials.iter().sum()
    } else {
        a.chunks(CHUNK)
            .zip(b.chunks(CHUNK))
            .map(|(ca, cb)| ca.iter().zip(cb).map(|(x, y)| x * y).sum::<f64>())
            .sum()
    }
}

pub fn sum_abs_powers(xs: &[f64], p: f64) -> f64 {
    chunk_sums(xs, |c| c.iter().map(|x| x.abs().powf(p)).sum())
}

pub fn sum_squares(xs: &[f64]) -> f64 {
    chunk_sums(xs, |c| c.iter().map(|x| x * x).sum())
}

pub fn max_abs(xs: &[f64]) -> f64 {
    xs.iter().fold(0.0, |m, x| m.max(x.abs()))
}

/// Runs `body` on `rows` output rows, in parallel when the problem is large enough.
/// Each row is written by exactly one closure call, so results never depend on scheduling.
pub fn for_each_row<F: Fn(usize, &mut [f64]) + Sync>(out: &mut [f64], row_len: usize, f: F) {
    debug_assert_eq!(out.len() % row_len, 0);
    if out.len() >= PAR_MIN && rayon::current_num_threads() > 1 {
        out.par_chunks_mut(row_len)
            .enumerate()
            .for_each(|(j, row)| f(j, row));
    } else {
        for (j, row) in out.chunks_mut(row_len).enumerate() {
            f(j, row);
        }
    }
}
