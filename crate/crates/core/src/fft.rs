//! Cached FFT plans and in-place 3D transforms.
//!
//! Layout is row-major with x fastest: `index = ix + n*(iy + n*iz)`.
//! Forward transforms are plain unnormalized DFT sums; the inverse divides
//! by `n³`, so `inverse(forward(f)) == f` to roundoff.

use num_complex::Complex64;
use rayon::prelude::*;
use rustfft::{Fft, FftDirection, FftPlanner};
use std::collections::HashMap;
use std::sync::{Arc, Mutex, OnceLock};

fn plan_cache() -> &'static Mutex<HashMap<(usize, bool), Arc<dyn Fft<f64>>>> {
    static CACHE: OnceLock<Mutex<HashMap<(usize, bool), Arc<dyn Fft<f64>>>>> = OnceLock::new();
    CACHE.get_or_init(|| Mutex::new(HashMap::new()))
}

/// Fetch (or plan) the 1D FFT of the given length and direction.
pub fn plan(len: usize, direction: FftDirection) -> Arc<dyn Fft<f64>> {
    let key = (len, direction == FftDirection::Forward);
    let mut cache = plan_cache().lock().unwrap();
    cache
        .entry(key)
        .or_insert_with(|| {
            let mut planner = FftPlanner::new();
            planner.plan_fft(len, direction)
        })
        .clone()
}

/// One pass of 1D FFTs along a strided axis.
///
/// Lines start at `base + j*line_spacing` for `j` in `0..n_lines` and step by
/// `stride`. Writes are disjoint per line, so the pass is order-independent.
fn axis_pass(
    data: &mut [Complex64],
    fft: &Arc<dyn Fft<f64>>,
    n: usize,
    n_lines: usize,
    line_start: impl Fn(usize) -> usize + Sync,
    stride: usize,
) {
    if stride == 1 {
        // Contiguous lines: process in place.
        let starts: Vec<usize> = (0..n_lines).map(line_start).collect();
        let data_ptr = SendPtr(data.as_mut_ptr());
        let data_ptr = &data_ptr;
        starts.par_iter().for_each_init(
            || vec![Complex64::default(); fft.get_inplace_scratch_len()],
            |scratch, &s| {
                // Safety: line ranges [s, s+n) are disjoint across starts.
                let line = unsafe { std::slice::from_raw_parts_mut(data_ptr.0.add(s), n) };
                fft.process_with_scratch(line, scratch);
            },
        );
    } else {
        let data_ptr = SendPtr(data.as_mut_ptr());
        let data_ptr = &data_ptr;
        (0..n_lines).into_par_iter().for_each_init(
            || {
                (
                    vec![Complex64::default(); n],
                    vec![Complex64::default(); fft.get_inplace_scratch_len()],
                )
            },
            |(buf, scratch), j| {
                let s = line_start(j);
                unsafe {
                    let p = data_ptr.0;
                    for i in 0..n {
                        buf[i] = *p.add(s + i * stride);
                    }
                    fft.process_with_scratch(buf, scratch);
                    for i in 0..n {
                        *p.add(s + i * stride) = buf[i];
                    }
                }
            },
        );
    }
}

#[derive(Clone, Copy)]
struct SendPtr(*mut Complex64);
unsafe impl Send for SendPtr {}
unsafe impl Sync for SendPtr {}

/// In-place 3D DFT on an `n³` cube.
pub fn fft3(data: &mut [Complex64], n: usize, direction: FftDirection) {
    assert_eq!(data.len(), n * n * n);
    let fft = plan(n, direction);
    let n2 = n * n;
    // x axis: contiguous lines, one per (iy, iz).
    axis_pass(data, &fft, n, n2, |j| j * n, 1);
    // y axis: stride n, line (ix, iz) starts at ix + iz*n².
    axis_pass(data, &fft, n, n2, |j| (j % n) + (j / n) * n2, n);
    // z axis: stride n², line (ix, iy) starts at ix + iy*n.
    axis_pass(data, &fft, n, n2, |j| j, n2);
    if direction == FftDirection::Inverse {
        let scale = 1.0 / (n2 * n) as f64;
        data.par_iter_mut().for_each(|v| *v *= scale);
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn idx(n: usize, ix: usize, iy: usize, iz: usize) -> usize {
        ix + n * (iy + n * iz)
    }

    #[test]
    fn plane_wave_transforms_to_single_mode() {
        let n = 8;
        let (kx, ky, kz) = (2usize, 5, 7);
        let mut data = vec![Complex64::default(); n * n * n];
        for iz in 0..n {
            for iy in 0..n {
                for ix in 0..n {
                    let phase = 2.0 * std::f64::consts::PI
                        * (kx * ix + ky * iy + kz * iz) as f64
                        / n as f64;
                    data[idx(n, ix, iy, iz)] = Complex64::new(phase.cos(), phase.sin());
                }
            }
        }
        fft3(&mut data, n, FftDirection::Forward);
        let hot = idx(n, kx, ky, kz);
        let total = n * n * n;
        for (i, v) in data.iter().enumerate() {
            if i == hot {
                assert!((v - Complex64::new(total as f64, 0.0)).norm() < 1e-9);
            } else {
                assert!(v.norm() < 1e-9, "leak at {i}: {v}");
            }
        }
    }

    #[test]
    fn round_trip_identity() {
        let n = 16;
        let mut rng = 1234567u64;
        let mut next = || {
            rng = rng.wrapping_mul(6364136223846793005).wrapping_add(1442695040888963407);
            (rng >> 11) as f64 / (1u64 << 53) as f64 - 0.5
        };
        let orig: Vec<Complex64> = (0..n * n * n)
            .map(|_| Complex64::new(next(), next()))
            .collect();
        let mut data = orig.clone();
        fft3(&mut data, n, FftDirection::Forward);
        fft3(&mut data, n, FftDirection::Inverse);
        let err: f64 = data
            .iter()
            .zip(&orig)
            .map(|(a, b)| (a - b).norm_sqr())
            .sum::<f64>()
            .sqrt();
        let norm: f64 = orig.iter().map(|v| v.norm_sqr()).sum::<f64>().sqrt();
        assert!(err <= 1e-12 * norm, "round trip error {err}");
    }
}
