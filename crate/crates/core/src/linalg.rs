//! Dense Hermitian eigendecomposition for small orbital-space matrices.
//!
//! Cyclic Jacobi with complex rotations. Matrices here are N x N with N the
//! orbital count (desk scale, N ≤ ~30), and the routine is reused across the
//! crate: Löwdin G^{-1/2}, the per-cell Hartree-Fock generator exponential,
//! and Gram-hypothesis eigenvalue checks. Buffers can be reused through
//! [`HermEig`] to keep the per-grid-cell path allocation-free.

use crate::error::{Error, Result};
use num_complex::Complex64;
use rand::Rng;

/// Reusable workspace holding the results of one Hermitian eigensolve.
pub struct HermEig {
    pub n: usize,
    /// Eigenvalues, ascending.
    pub evals: Vec<f64>,
    /// Eigenvectors, column-major: column j is the eigenvector of `evals[j]`.
    pub vecs: Vec<Complex64>,
    work: Vec<Complex64>,
}

impl HermEig {
    pub fn new(n: usize) -> HermEig {
        HermEig {
            n,
            evals: vec![0.0; n],
            vecs: vec![Complex64::default(); n * n],
            work: vec![Complex64::default(); n * n],
        }
    }

    /// Diagonalize the Hermitian matrix `a` (row-major, length n²).
    /// Only the Hermitian part of `a` is used.
    pub fn factor(&mut self, a: &[Complex64]) {
        let n = self.n;
        assert_eq!(a.len(), n * n);
        let w = &mut self.work;
        w.copy_from_slice(a);
        let v = &mut self.vecs;
        v.fill(Complex64::default());
        for i in 0..n {
            v[i * n + i] = Complex64::new(1.0, 0.0);
        }
        if n == 1 {
            self.evals[0] = w[0].re;
            return;
        }

        let scale: f64 = a.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt().max(1e-300);
        let tol = 1e-15 * scale;
        for _sweep in 0..64 {
            let mut off = 0.0f64;
            for p in 0..n {
                for q in (p + 1)..n {
                    off += w[p * n + q].norm_sqr();
                }
            }
            if off.sqrt() <= tol {
                break;
            }
            for p in 0..n {
                for q in (p + 1)..n {
                    let z = w[p * n + q];
                    let zn = z.norm();
                    if zn <= 1e-300 {
                        continue;
                    }
                    let app = w[p * n + p].re;
                    let aqq = w[q * n + q].re;
                    // phase: e^{i alpha} = z/|z|; rotation angle from the
                    // real reduced 2x2 [[app, |z|], [|z|, aqq]]
                    let phase = z / zn;
                    let tau = (aqq - app) / (2.0 * zn);
                    let t = if tau >= 0.0 {
                        1.0 / (tau + (1.0 + tau * tau).sqrt())
                    } else {
                        -1.0 / (-tau + (1.0 + tau * tau).sqrt())
                    };
                    let c = 1.0 / (1.0 + t * t).sqrt();
                    let s = t * c;
                    // U columns: |p'> = c|p> - s*conj(phase)|q>,
                    //            |q'> = s*phase|p> + c|q>
                    let up = Complex64::new(c, 0.0);
                    let sq = phase * s;
                    // rows p, q of w (w <- U^H w U): first columns, then rows
                    for r in 0..n {
                        let wp = w[r * n + p];
                        let wq = w[r * n + q];
                        w[r * n + p] = wp * up - wq * sq.conj();
                        w[r * n + q] = wp * sq + wq * up;
                    }
                    for cidx in 0..n {
                        let wp = w[p * n + cidx];
                        let wq = w[q * n + cidx];
                        w[p * n + cidx] = wp * up - wq * sq;
                        w[q * n + cidx] = wp * sq.conj() + wq * up;
                    }
                    for r in 0..n {
                        let vp = v[r * n + p];
                        let vq = v[r * n + q];
                        v[r * n + p] = vp * up - vq * sq.conj();
                        v[r * n + q] = vp * sq + vq * up;
                    }
                }
            }
        }
        for i in 0..n {
            self.evals[i] = w[i * n + i].re;
        }
        // sort eigenpairs ascending (insertion sort keeps it deterministic)
        for i in 1..n {
            let mut j = i;
            while j > 0 && self.evals[j - 1] > self.evals[j] {
                self.evals.swap(j - 1, j);
                for r in 0..n {
                    v.swap(r * n + (j - 1), r * n + j);
                }
                j -= 1;
            }
        }
    }

    /// Apply `f(Λ)` through the factorization: `out = V f(Λ) V^H in`.
    /// `inb` and `out` are length-n vectors; `phases` holds `f(evals[j])`.
    pub fn apply_function(
        &self,
        phases: &[Complex64],
        inb: &[Complex64],
        out: &mut [Complex64],
        tmp: &mut [Complex64],
    ) {
        let n = self.n;
        // tmp = V^H inb
        for j in 0..n {
            let mut acc = Complex64::default();
            for r in 0..n {
                acc += self.vecs[r * n + j].conj() * inb[r];
            }
            tmp[j] = acc * phases[j];
        }
        for r in 0..n {
            let mut acc = Complex64::default();
            for j in 0..n {
                acc += self.vecs[r * n + j] * tmp[j];
            }
            out[r] = acc;
        }
    }
}

/// Eigenvalues and eigenvectors of a Hermitian matrix (row-major).
pub fn eigh(a: &[Complex64], n: usize) -> (Vec<f64>, Vec<Complex64>) {
    let mut solver = HermEig::new(n);
    solver.factor(a);
    (solver.evals, solver.vecs)
}

/// `G^{-1/2}` for a Hermitian positive-definite matrix, rejecting inputs with
/// condition number above 1e8 or non-positive spectrum.
pub fn herm_inv_sqrt(g: &[Complex64], n: usize) -> Result<Vec<Complex64>> {
    let (evals, vecs) = eigh(g, n);
    let lambda_min = evals[0];
    let lambda_max = evals[n - 1];
    if lambda_min <= 0.0 || lambda_max / lambda_min > 1e8 {
        return Err(Error::RankDeficient(lambda_min));
    }
    let mut out = vec![Complex64::default(); n * n];
    for r in 0..n {
        for c in 0..n {
            let mut acc = Complex64::default();
            for j in 0..n {
                acc += vecs[r * n + j] * vecs[c * n + j].conj() / evals[j].sqrt();
            }
            out[r * n + c] = acc;
        }
    }
    Ok(out)
}

/// Haar-ish random unitary via Gram-Schmidt on a complex Gaussian matrix.
pub fn random_unitary(n: usize, rng: &mut impl Rng) -> Vec<Complex64> {
    let mut cols: Vec<Vec<Complex64>> = (0..n)
        .map(|_| {
            (0..n)
                .map(|_| {
                    // Box-Muller pairs
                    let u1: f64 = rng.gen_range(1e-12..1.0);
                    let u2: f64 = rng.gen_range(0.0..std::f64::consts::TAU);
                    let r = (-2.0 * u1.ln()).sqrt();
                    Complex64::new(r * u2.cos(), r * u2.sin())
                })
                .collect()
        })
        .collect();
    for j in 0..n {
        for _pass in 0..2 {
            for i in 0..j {
                let proj: Complex64 = cols[i]
                    .iter()
                    .zip(cols[j].iter())
                    .map(|(a, b)| a.conj() * b)
                    .sum();
                for r in 0..n {
                    let c = cols[i][r];
                    cols[j][r] -= proj * c;
                }
            }
        }
        let norm: f64 = cols[j].iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt();
        for v in &mut cols[j] {
            *v /= norm;
        }
    }
    let mut out = vec![Complex64::default(); n * n];
    for r in 0..n {
        for c in 0..n {
            out[r * n + c] = cols[c][r];
        }
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn random_hermitian(n: usize, rng: &mut impl Rng) -> Vec<Complex64> {
        let mut a = vec![Complex64::default(); n * n];
        for r in 0..n {
            for c in r..n {
                let z = Complex64::new(rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0));
                if r == c {
                    a[r * n + c] = Complex64::new(z.re, 0.0);
                } else {
                    a[r * n + c] = z;
                    a[c * n + r] = z.conj();
                }
            }
        }
        a
    }

    #[test]
    fn reconstructs_matrix() {
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        for n in [1usize, 2, 3, 5, 8] {
            let a = random_hermitian(n, &mut rng);
            let (evals, vecs) = eigh(&a, n);
            for r in 0..n {
                for c in 0..n {
                    let mut acc = Complex64::default();
                    for j in 0..n {
                        acc += vecs[r * n + j] * evals[j] * vecs[c * n + j].conj();
                    }
                    assert!((acc - a[r * n + c]).norm() < 1e-12, "n={n} ({r},{c})");
                }
            }
            for w in evals.windows(2) {
                assert!(w[0] <= w[1]);
            }
        }
    }

    #[test]
    fn inv_sqrt_squares_to_inverse() {
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        let n = 4;
        // positive definite: A = B^H B + I
        let b = random_hermitian(n, &mut rng);
        let mut a = vec![Complex64::default(); n * n];
        for r in 0..n {
            for c in 0..n {
                let mut acc = Complex64::default();
                for j in 0..n {
                    acc += b[j * n + r].conj() * b[j * n + c];
                }
                a[r * n + c] = acc + if r == c { Complex64::new(1.0, 0.0) } else { Complex64::default() };
            }
        }
        let s = herm_inv_sqrt(&a, n).unwrap();
        // s * a * s should be identity
        let mut sa = vec![Complex64::default(); n * n];
        for r in 0..n {
            for c in 0..n {
                let mut acc = Complex64::default();
                for j in 0..n {
                    acc += s[r * n + j] * a[j * n + c];
                }
                sa[r * n + c] = acc;
            }
        }
        for r in 0..n {
            for c in 0..n {
                let mut acc = Complex64::default();
                for j in 0..n {
                    acc += sa[r * n + j] * s[j * n + c];
                }
                let expect = if r == c { 1.0 } else { 0.0 };
                assert!((acc - expect).norm() < 1e-10);
            }
        }
    }

    #[test]
    fn rejects_rank_deficient() {
        let n = 2;
        let a = vec![
            Complex64::new(1.0, 0.0),
            Complex64::new(1.0, 0.0),
            Complex64::new(1.0, 0.0),
            Complex64::new(1.0, 0.0),
        ];
        assert!(matches!(herm_inv_sqrt(&a, n), Err(Error::RankDeficient(_))));
    }

    #[test]
    fn random_unitary_is_unitary() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        for n in [1usize, 2, 5] {
            let u = random_unitary(n, &mut rng);
            for r in 0..n {
                for c in 0..n {
                    let mut acc = Complex64::default();
                    for j in 0..n {
                        acc += u[j * n + r].conj() * u[j * n + c];
                    }
                    let expect = if r == c { 1.0 } else { 0.0 };
                    assert!((acc - expect).norm() < 1e-12);
                }
            }
        }
    }

    #[test]
    fn against_two_by_two_closed_form() {
        // [[2, i], [-i, 2]] has eigenvalues 1 and 3
        let a = vec![
            Complex64::new(2.0, 0.0),
            Complex64::new(0.0, 1.0),
            Complex64::new(0.0, -1.0),
            Complex64::new(2.0, 0.0),
        ];
        let (evals, _) = eigh(&a, 2);
        assert!((evals[0] - 1.0).abs() < 1e-14);
        assert!((evals[1] - 3.0).abs() < 1e-14);
    }
}
