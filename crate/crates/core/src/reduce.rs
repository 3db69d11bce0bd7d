//! Deterministic floating-point reductions.
//!
//! Every quadrature and inner product in the crate funnels through these
//! helpers: values are summed in fixed-size blocks and the block sums are
//! combined by a pairwise tree in index order. The result is independent of
//! worker count, so runs reproduce bitwise however the pool is sized.

use num_complex::Complex64;
use rayon::prelude::*;

/// Block length for the first reduction stage.
const BLOCK: usize = 4096;

/// Pairwise tree fold in index order.
fn tree_fold_f64(mut sums: Vec<f64>) -> f64 {
    if sums.is_empty() {
        return 0.0;
    }
    let mut n = sums.len();
    while n > 1 {
        let half = n / 2;
        for i in 0..half {
            sums[i] = sums[2 * i] + sums[2 * i + 1];
        }
        if n % 2 == 1 {
            sums[half] = sums[n - 1];
            n = half + 1;
        } else {
            n = half;
        }
    }
    sums[0]
}

fn tree_fold_c64(mut sums: Vec<Complex64>) -> Complex64 {
    if sums.is_empty() {
        return Complex64::new(0.0, 0.0);
    }
    let mut n = sums.len();
    while n > 1 {
        let half = n / 2;
        for i in 0..half {
            sums[i] = sums[2 * i] + sums[2 * i + 1];
        }
        if n % 2 == 1 {
            sums[half] = sums[n - 1];
            n = half + 1;
        } else {
            n = half;
        }
    }
    sums[0]
}

/// Deterministic sum of `f(i)` for `i in 0..len`.
pub fn sum_indexed<F>(len: usize, f: F) -> f64
where
    F: Fn(usize) -> f64 + Sync,
{
    let blocks = len.div_ceil(BLOCK);
    let sums: Vec<f64> = (0..blocks)
        .into_par_iter()
        .map(|b| {
            let lo = b * BLOCK;
            let hi = (lo + BLOCK).min(len);
            let mut acc = 0.0;
            for i in lo..hi {
                acc += f(i);
            }
            acc
        })
        .collect();
    tree_fold_f64(sums)
}

/// Deterministic complex sum of `f(i)` for `i in 0..len`.
pub fn sum_indexed_c64<F>(len: usize, f: F) -> Complex64
where
    F: Fn(usize) -> Complex64 + Sync,
{
    let blocks = len.div_ceil(BLOCK);
    let sums: Vec<Complex64> = (0..blocks)
        .into_par_iter()
        .map(|b| {
            let lo = b * BLOCK;
            let hi = (lo + BLOCK).min(len);
            let mut acc = Complex64::new(0.0, 0.0);
            for i in lo..hi {
                acc += f(i);
            }
            acc
        })
        .collect();
    tree_fold_c64(sums)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn matches_sequential_sum() {
        let v: Vec<f64> = (0..20_000).map(|i| (i as f64).sin()).collect();
        let seq: f64 = v.iter().sum();
        let det = sum_indexed(v.len(), |i| v[i]);
        assert!((seq - det).abs() < 1e-9);
    }

    #[test]
    fn deterministic_under_pool_sizes() {
        let v: Vec<f64> = (0..100_000).map(|i| 1.0 / (1.0 + i as f64)).collect();
        let a = sum_indexed(v.len(), |i| v[i]);
        let pool = rayon::ThreadPoolBuilder::new().num_threads(3).build().unwrap();
        let b = pool.install(|| sum_indexed(v.len(), |i| v[i]));
        assert_eq!(a.to_bits(), b.to_bits());
    }

    #[test]
    fn empty_sum_is_zero() {
        assert_eq!(sum_indexed(0, |_| 1.0), 0.0);
    }
}
