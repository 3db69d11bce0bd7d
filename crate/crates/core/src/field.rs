//! One complex scalar field on a grid, in position or spectral space.
//!
//! Spectral values follow the plain DFT convention (no scaling on the
//! forward transform, `1/n³` on the inverse). Physical quadratures carry the
//! metric: position-space inner products weigh by `dV`, spectral-space sums
//! by `dV/n³`, which makes the two representations Parseval-consistent.

use crate::error::{Error, Result};
use crate::fft;
use crate::grid::Grid;
use crate::reduce;
use num_complex::Complex64;
use rayon::prelude::*;
use rustfft::FftDirection;

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Space {
    Position,
    Spectral,
}

#[derive(Clone)]
pub struct ComplexField {
    grid: Grid,
    space: Space,
    values: Vec<Complex64>,
}

impl std::fmt::Debug for ComplexField {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "ComplexField {{ grid: {:?}, space: {:?} }}", self.grid, self.space)
    }
}

impl ComplexField {
    pub fn zeros(grid: &Grid) -> ComplexField {
        ComplexField {
            grid: grid.clone(),
            space: Space::Position,
            values: vec![Complex64::default(); grid.len()],
        }
    }

    /// Sample a function of position onto the grid.
    pub fn from_fn(grid: &Grid, f: impl Fn([f64; 3]) -> Complex64 + Sync) -> ComplexField {
        let mut values = vec![Complex64::default(); grid.len()];
        values
            .par_iter_mut()
            .enumerate()
            .for_each(|(idx, v)| *v = f(grid.position(idx)));
        ComplexField {
            grid: grid.clone(),
            space: Space::Position,
            values,
        }
    }

    pub fn from_values(grid: &Grid, space: Space, values: Vec<Complex64>) -> Result<ComplexField> {
        if values.len() != grid.len() {
            return Err(Error::InvalidArgument(format!(
                "value count {} does not match grid {}",
                values.len(),
                grid.len()
            )));
        }
        Ok(ComplexField {
            grid: grid.clone(),
            space,
            values,
        })
    }

    pub fn grid(&self) -> &Grid {
        &self.grid
    }

    pub fn space(&self) -> Space {
        self.space
    }

    pub fn values(&self) -> &[Complex64] {
        &self.values
    }

    pub fn values_mut(&mut self) -> &mut [Complex64] {
        &mut self.values
    }

    /// Convert in place to the requested space (no-op if already there).
    pub fn to_space(&mut self, space: Space) {
        if self.space == space {
            return;
        }
        let n = self.grid.n();
        match space {
            Space::Spectral => fft::fft3(&mut self.values, n, FftDirection::Forward),
            Space::Position => fft::fft3(&mut self.values, n, FftDirection::Inverse),
        }
        self.space = space;
    }

    /// Copy of this field converted to the requested space.
    pub fn in_space(&self, space: Space) -> ComplexField {
        let mut f = self.clone();
        f.to_space(space);
        f
    }

    /// Apply a real Fourier-multiplier `s(k)`; the result is returned in the
    /// same space as the input. Rejects symbols with non-finite values.
    pub fn apply_multiplier(&self, symbol: impl Fn([f64; 3]) -> f64 + Sync) -> Result<ComplexField> {
        let mut f = self.in_space(Space::Spectral);
        let grid = f.grid.clone();
        let bad = std::sync::atomic::AtomicUsize::new(usize::MAX);
        f.values.par_iter_mut().enumerate().for_each(|(idx, v)| {
            let s = symbol(grid.wavenumber(idx));
            if !s.is_finite() {
                bad.store(idx, std::sync::atomic::Ordering::Relaxed);
            }
            *v *= s;
        });
        let bad = bad.load(std::sync::atomic::Ordering::Relaxed);
        if bad != usize::MAX {
            return Err(Error::NonFiniteSymbol {
                k: grid.wavenumber(bad),
            });
        }
        f.to_space(self.space);
        Ok(f)
    }

    /// Spectral derivative along one axis (multiplication by `i k_axis`).
    pub fn derivative(&self, axis: usize) -> ComplexField {
        assert!(axis < 3);
        let mut f = self.in_space(Space::Spectral);
        let grid = f.grid.clone();
        f.values.par_iter_mut().enumerate().for_each(|(idx, v)| {
            let k = grid.wavenumber(idx)[axis];
            *v *= Complex64::new(0.0, k);
        });
        f.to_space(self.space);
        f
    }

    /// `⟨self, other⟩ = ∫ conj(self) * other dV` by grid quadrature.
    pub fn inner(&self, other: &ComplexField) -> Complex64 {
        assert_eq!(self.grid, other.grid, "inner product across grids");
        assert_eq!(self.space, other.space, "inner product across spaces");
        let raw = reduce::sum_indexed_c64(self.values.len(), |i| {
            self.values[i].conj() * other.values[i]
        });
        let metric = match self.space {
            Space::Position => self.grid.dv(),
            Space::Spectral => self.grid.dv() / self.grid.len() as f64,
        };
        raw * metric
    }

    /// Squared L² norm.
    pub fn norm_sq(&self) -> f64 {
        let raw = reduce::sum_indexed(self.values.len(), |i| self.values[i].norm_sqr());
        let metric = match self.space {
            Space::Position => self.grid.dv(),
            Space::Spectral => self.grid.dv() / self.grid.len() as f64,
        };
        raw * metric
    }

    pub fn norm(&self) -> f64 {
        self.norm_sq().sqrt()
    }

    /// Homogeneous `H^{1/2}` seminorm squared, `⟨f, sqrt(-Δ) f⟩`.
    pub fn half_norm_sq(&self) -> f64 {
        let f = self.in_space(Space::Spectral);
        let grid = &f.grid;
        let metric = grid.dv() / grid.len() as f64;
        reduce::sum_indexed(f.values.len(), |i| {
            grid.k_norm(i) * f.values[i].norm_sqr()
        }) * metric
    }

    /// `self += a * other`.
    pub fn axpy(&mut self, a: Complex64, other: &ComplexField) {
        assert_eq!(self.grid, other.grid);
        assert_eq!(self.space, other.space);
        self.values
            .par_iter_mut()
            .zip(other.values.par_iter())
            .for_each(|(s, o)| *s += a * o);
    }

    pub fn scale(&mut self, a: Complex64) {
        self.values.par_iter_mut().for_each(|v| *v *= a);
    }

    /// Pointwise multiply by a real field (position space).
    pub fn mul_real_assign(&mut self, real: &[f64]) {
        assert_eq!(self.space, Space::Position);
        assert_eq!(self.values.len(), real.len());
        self.values
            .par_iter_mut()
            .zip(real.par_iter())
            .for_each(|(v, r)| *v *= *r);
    }

    /// L² distance to another field.
    pub fn l2_distance(&self, other: &ComplexField) -> f64 {
        assert_eq!(self.grid, other.grid);
        assert_eq!(self.space, other.space);
        let metric = match self.space {
            Space::Position => self.grid.dv(),
            Space::Spectral => self.grid.dv() / self.grid.len() as f64,
        };
        (reduce::sum_indexed(self.values.len(), |i| {
            (self.values[i] - other.values[i]).norm_sqr()
        }) * metric)
            .sqrt()
    }

    /// Band-limited dilation `x ↦ scale^{-3/2} f(x / scale)` by trigonometric
    /// interpolation of the spectral coefficients at stretched coordinates.
    ///
    /// For `scale < 1` the evaluation points leave the box and wrap around;
    /// the call is rejected when more than 1e-6 of the mass sits outside the
    /// contracted box that maps onto the output grid.
    pub fn resample(&self, scale: f64) -> Result<ComplexField> {
        if !(scale > 0.0) || !scale.is_finite() {
            return Err(Error::InvalidArgument(format!(
                "resample scale {scale} must be positive"
            )));
        }
        let grid = &self.grid;
        let n = grid.n();
        if scale < 1.0 {
            let pos = self.in_space(Space::Position);
            let lim = 0.5 * grid.length() * scale;
            let total = reduce::sum_indexed(pos.values.len(), |i| pos.values[i].norm_sqr());
            let outside = reduce::sum_indexed(pos.values.len(), |i| {
                let [x, y, z] = grid.position(i);
                if x.abs().max(y.abs()).max(z.abs()) > lim {
                    pos.values[i].norm_sqr()
                } else {
                    0.0
                }
            });
            if total > 0.0 && outside / total > 1e-6 {
                return Err(Error::ResampleAliasing {
                    scale,
                    fraction: outside / total,
                });
            }
        }

        // Per-axis interpolation matrix E[m][j] = exp(i k_j x_m / scale) *
        // (-1)^j / n; for scale = 1 this is exactly the inverse DFT matrix.
        let mut mat = vec![Complex64::default(); n * n];
        let inv_n = 1.0 / n as f64;
        for m in 0..n {
            let xm = grid.x_axis()[m] / scale;
            for j in 0..n {
                let sign = if j % 2 == 0 { inv_n } else { -inv_n };
                let phase = grid.k_axis()[j] * xm;
                mat[m * n + j] = Complex64::new(phase.cos() * sign, phase.sin() * sign);
            }
        }

        let mut work = self.in_space(Space::Spectral);
        let n2 = n * n;
        for axis in 0..3 {
            let (stride, line_start): (usize, Box<dyn Fn(usize) -> usize + Sync>) = match axis {
                0 => (1, Box::new(move |j: usize| j * n)),
                1 => (n, Box::new(move |j: usize| (j % n) + (j / n) * n2)),
                _ => (n2, Box::new(move |j: usize| j)),
            };
            apply_axis_matrix(&mut work.values, &mat, n, n2, &line_start, stride);
        }
        let amp = scale.powf(-1.5);
        work.values.par_iter_mut().for_each(|v| *v *= amp);
        work.space = Space::Position;
        work.to_space(self.space);
        Ok(work)
    }
}

fn apply_axis_matrix(
    data: &mut [Complex64],
    mat: &[Complex64],
    n: usize,
    n_lines: usize,
    line_start: &(dyn Fn(usize) -> usize + Sync),
    stride: usize,
) {
    struct SendPtr(*mut Complex64);
    unsafe impl Send for SendPtr {}
    unsafe impl Sync for SendPtr {}
    let ptr = SendPtr(data.as_mut_ptr());
    let ptr = &ptr;
    (0..n_lines).into_par_iter().for_each_init(
        || (vec![Complex64::default(); n], vec![Complex64::default(); n]),
        |(inbuf, outbuf), j| {
            let s = line_start(j);
            unsafe {
                let p = ptr.0;
                for i in 0..n {
                    inbuf[i] = *p.add(s + i * stride);
                }
                for (m, out) in outbuf.iter_mut().enumerate() {
                    let row = &mat[m * n..(m + 1) * n];
                    let mut acc = Complex64::default();
                    for (e, v) in row.iter().zip(inbuf.iter()) {
                        acc += e * v;
                    }
                    *out = acc;
                }
                for i in 0..n {
                    *p.add(s + i * stride) = outbuf[i];
                }
            }
        },
    );
}

#[cfg(test)]
mod tests {
    use super::*;

    fn gaussian(grid: &Grid, w: f64) -> ComplexField {
        let mut f = ComplexField::from_fn(grid, |[x, y, z]| {
            Complex64::new((-(x * x + y * y + z * z) / (2.0 * w * w)).exp(), 0.0)
        });
        let norm = f.norm();
        f.scale(Complex64::new(1.0 / norm, 0.0));
        f
    }

    #[test]
    fn round_trip_preserves_field() {
        let g = Grid::new(16, 10.0).unwrap();
        let f = gaussian(&g, 1.0);
        let rt = f.in_space(Space::Spectral).in_space(Space::Position);
        assert!(f.l2_distance(&rt) <= 1e-12 * f.norm());
    }

    #[test]
    fn identity_symbol_is_identity() {
        let g = Grid::new(16, 10.0).unwrap();
        let f = gaussian(&g, 1.2);
        let out = f.apply_multiplier(|_| 1.0).unwrap();
        assert!(f.l2_distance(&out) <= 1e-12 * f.norm());
    }

    #[test]
    fn plane_waves_are_multiplier_eigenvectors() {
        let g = Grid::new(16, 8.0).unwrap();
        let k0 = [g.k_axis()[3], g.k_axis()[14], g.k_axis()[1]];
        let f = ComplexField::from_fn(&g, |[x, y, z]| {
            let ph = k0[0] * x + k0[1] * y + k0[2] * z;
            Complex64::new(ph.cos(), ph.sin())
        });
        let m = 1.7f64;
        let out = f
            .apply_multiplier(|[kx, ky, kz]| (kx * kx + ky * ky + kz * kz + m * m).sqrt())
            .unwrap();
        let expect = (k0[0] * k0[0] + k0[1] * k0[1] + k0[2] * k0[2] + m * m).sqrt();
        let mut scaled = f.clone();
        scaled.scale(Complex64::new(expect, 0.0));
        assert!(out.l2_distance(&scaled) <= 1e-12 * scaled.norm());
    }

    #[test]
    fn multiplier_bounded_by_symbol_sup() {
        let g = Grid::new(12, 6.0).unwrap();
        let f = gaussian(&g, 0.8);
        let smax = g.nyquist_k() * 3f64.sqrt();
        let out = f.apply_multiplier(|[kx, ky, kz]| (kx * kx + ky * ky + kz * kz).sqrt()).unwrap();
        assert!(out.norm() <= smax * f.norm() * (1.0 + 1e-12));
    }

    #[test]
    fn multiplier_self_adjoint_for_real_symbols() {
        let g = Grid::new(12, 7.0).unwrap();
        let u = ComplexField::from_fn(&g, |[x, y, z]| {
            Complex64::new((x * 0.7).sin() * (-z * z / 4.0).exp(), (y * 0.3).cos())
        });
        let v = ComplexField::from_fn(&g, |[x, y, z]| {
            Complex64::new((-(x * x + 2.0 * y * y + z * z) / 5.0).exp(), (x * y * 0.1).sin())
        });
        let s = |[kx, ky, kz]: [f64; 3]| (kx * kx + ky * ky + kz * kz + 0.5).sqrt();
        let a = u.inner(&v.apply_multiplier(s).unwrap());
        let b = u.apply_multiplier(s).unwrap().inner(&v);
        assert!((a - b).norm() <= 1e-10 * u.norm() * v.norm());
    }

    #[test]
    fn rejects_non_finite_symbol() {
        let g = Grid::new(8, 1.0).unwrap();
        let f = gaussian(&g, 0.2);
        assert!(f.apply_multiplier(|[kx, _, _]| 1.0 / kx).is_err());
    }

    #[test]
    fn resample_identity_at_unit_scale() {
        let g = Grid::new(16, 12.0).unwrap();
        let f = gaussian(&g, 1.0);
        let r = f.resample(1.0).unwrap();
        assert!(f.l2_distance(&r) <= 1e-12 * f.norm());
    }

    #[test]
    fn resample_dilates_gaussian() {
        let g = Grid::new(40, 24.0).unwrap();
        let w = 1.4;
        let f = gaussian(&g, w);
        let amp0 = f.values()[g.ravel(20, 20, 20)].re;
        for scale in [1.5, 0.8] {
            let r = f.resample(scale).unwrap();
            // expected: scale^{-3/2} * A * exp(-|x|^2/(2 (scale w)^2))
            let mut max_err: f64 = 0.0;
            for idx in 0..g.len() {
                let [x, y, z] = g.position(idx);
                let r2 = x * x + y * y + z * z;
                if r2.sqrt() > 6.0 {
                    continue;
                }
                let expect = scale.powf(-1.5)
                    * amp0
                    * (-r2 / (2.0 * (scale * w).powi(2))).exp();
                max_err = max_err.max((r.values()[idx].re - expect).abs() / amp0);
            }
            assert!(max_err <= 1e-6, "scale {scale}: pointwise err {max_err}");
            assert!((r.norm() - f.norm()).abs() <= 1e-8 * f.norm());
        }
    }

    #[test]
    fn resample_rejects_escaping_support() {
        let g = Grid::new(16, 10.0).unwrap();
        // broad field filling the box
        let f = ComplexField::from_fn(&g, |_| Complex64::new(1.0, 0.0));
        match f.resample(0.25) {
            Err(Error::ResampleAliasing { .. }) => {}
            other => panic!("expected aliasing error, got {other:?}"),
        }
    }
}
