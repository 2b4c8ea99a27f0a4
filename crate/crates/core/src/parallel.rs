//! Deterministic parallel primitives.
//!
//! Reductions are computed over fixed-size contiguous chunks whose partial
//! results are combined in chunk order, so dot products and norms are
//! bit-identical for any thread count. Elementwise maps are embarrassingly
//! parallel and carry no reduction order at all.

use rayon::prelude::*;

use crate::real::Real;

/// Chunk length for deterministic reductions.
const CHUNK: usize = 4096;

/// Configure the global rayon pool. Call once, before any compute; returns
/// false if a pool was already installed (the existing pool is kept).
pub fn configure_threads(n: usize) -> bool {
    rayon::ThreadPoolBuilder::new()
        .num_threads(n)
        .build_global()
        .is_ok()
}

pub fn dot<T: Real>(a: &[T], b: &[T]) -> T {
    assert_eq!(a.len(), b.len());
    let partials: Vec<T> = a
        .par_chunks(CHUNK)
        .zip(b.par_chunks(CHUNK))
        .map(|(ca, cb)| {
            let mut s = T::zero();
            for (&x, &y) in ca.iter().zip(cb) {
                s = s + x * y;
            }
            s
        })
        .collect();
    partials.into_iter().fold(T::zero(), |acc, p| acc + p)
}

pub fn norm2<T: Real>(a: &[T]) -> T {
    dot(a, a).sqrt()
}

pub fn sum<T: Real>(a: &[T]) -> T {
    let partials: Vec<T> = a
        .par_chunks(CHUNK)
        .map(|c| c.iter().fold(T::zero(), |acc, &x| acc + x))
        .collect();
    partials.into_iter().fold(T::zero(), |acc, p| acc + p)
}

pub fn sup_abs<T: Real>(a: &[T]) -> T {
    a.par_chunks(CHUNK)
        .map(|c| c.iter().fold(T::zero(), |acc, &x| acc.max(x.abs())))
        .reduce(T::zero, |x, y| x.max(y))
}

/// y = a*x + y
pub fn axpy<T: Real>(alpha: T, x: &[T], y: &mut [T]) {
    y.par_chunks_mut(CHUNK)
        .zip(x.par_chunks(CHUNK))
        .for_each(|(cy, cx)| {
            for (yi, &xi) in cy.iter_mut().zip(cx) {
                *yi = *yi + alpha * xi;
            }
        });
}

/// Fill `out[i] = f(i)` in parallel over fixed chunks.
pub fn fill_indexed<T: Send, F: Fn(usize) -> T + Sync>(out: &mut [T], f: F) {
    out.par_chunks_mut(CHUNK)
        .enumerate()
        .for_each(|(ci, chunk)| {
            let base = ci * CHUNK;
            for (j, slot) in chunk.iter_mut().enumerate() {
                *slot = f(base + j);
            }
        });
}

/// Map every index to a value and reduce with an order-independent `max`.
pub fn max_indexed<T: Real, F: Fn(usize) -> T + Sync>(len: usize, f: F) -> T {
    (0..len)
        .into_par_iter()
        .fold(|| T::neg_infinity(), |acc, i| acc.max(f(i)))
        .reduce(T::neg_infinity, |a, b| a.max(b))
}
