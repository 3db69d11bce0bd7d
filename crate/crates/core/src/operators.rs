//! Mean-field operators and energy functionals.
//!
//! The kinetic operator is the Fourier multiplier `sqrt(|k|² + m²)`. The
//! direct potential is `V = κ (1/|x| * ρ_Ψ)` and enters the equations as
//! `-V ψ_k`; the exchange term couples pairs through `κ (1/|x| * conj(ψ_l) ψ_k)`.
//! Energies follow the conserved functionals: the Hartree energy
//! `Σ ⟨ψ_k, sqrt(-Δ+m²) ψ_k⟩ - (κ/2) D(ρ,ρ)` and the Hartree-Fock energy,
//! which adds back half the exchange self-interaction.

use crate::coulomb;
use crate::error::{Error, Result};
use crate::field::{ComplexField, Space};
use crate::grid::Grid;
use crate::orbitals::OrbitalSet;
use crate::reduce;
use num_complex::Complex64;
use rayon::prelude::*;

/// Nonnegative particle density on a grid.
#[derive(Clone)]
pub struct RealDensity {
    grid: Grid,
    values: Vec<f64>,
}

impl RealDensity {
    pub fn new(grid: &Grid, values: Vec<f64>) -> Result<RealDensity> {
        if values.len() != grid.len() {
            return Err(Error::InvalidArgument("density length mismatch".into()));
        }
        if values.iter().any(|v| !v.is_finite() || *v < 0.0) {
            return Err(Error::InvalidArgument(
                "density must be finite and nonnegative".into(),
            ));
        }
        Ok(RealDensity {
            grid: grid.clone(),
            values,
        })
    }

    pub fn grid(&self) -> &Grid {
        &self.grid
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    /// `∫ ρ dV`.
    pub fn integral(&self) -> f64 {
        reduce::sum_indexed(self.values.len(), |i| self.values[i]) * self.grid.dv()
    }
}

/// `sqrt(-Δ + m²) f`.
pub fn kinetic_apply(f: &ComplexField, mass: f64) -> Result<ComplexField> {
    if !(mass >= 0.0) {
        return Err(Error::InvalidArgument(format!("mass {mass} must be >= 0")));
    }
    let m2 = mass * mass;
    f.apply_multiplier(move |[kx, ky, kz]| (kx * kx + ky * ky + kz * kz + m2).sqrt())
}

/// `⟨f, s(k) f⟩` evaluated directly in spectral space (one transform).
pub fn expect_multiplier(f: &ComplexField, symbol: impl Fn([f64; 3]) -> f64 + Sync) -> f64 {
    let spec = f.in_space(Space::Spectral);
    let grid = spec.grid();
    let metric = grid.dv() / grid.len() as f64;
    reduce::sum_indexed(spec.values().len(), |i| {
        symbol(grid.wavenumber(i)) * spec.values()[i].norm_sqr()
    }) * metric
}

/// `⟨f, sqrt(-Δ) f⟩`, the homogeneous H^{1/2} seminorm squared.
pub fn half_norm_sq(f: &ComplexField) -> f64 {
    f.half_norm_sq()
}

/// `ρ_Ψ(x) = Σ_k |ψ_k(x)|²`.
pub fn density(psi: &OrbitalSet) -> RealDensity {
    let grid = psi.grid().clone();
    let mut values = vec![0.0f64; grid.len()];
    let fields: Vec<ComplexField> = psi
        .orbitals()
        .iter()
        .map(|f| f.in_space(Space::Position))
        .collect();
    values.par_iter_mut().enumerate().for_each(|(i, v)| {
        let mut acc = 0.0;
        for f in &fields {
            acc += f.values()[i].norm_sqr();
        }
        *v = acc;
    });
    RealDensity { grid, values }
}

/// Free-space Coulomb potential `(1/|x| * ρ)(x)`.
pub fn coulomb_convolve(rho: &RealDensity) -> Vec<f64> {
    coulomb::convolve_real(&rho.grid, &rho.values)
}

/// Direct potential `V = κ (1/|x| * ρ_Ψ)` and the applied fields `-V ψ_k`.
pub fn hartree_term(psi: &OrbitalSet) -> (Vec<f64>, Vec<ComplexField>) {
    let rho = density(psi);
    let mut v = coulomb_convolve(&rho);
    let kappa = psi.kappa();
    v.par_iter_mut().for_each(|x| *x *= kappa);
    let applied = psi
        .orbitals()
        .iter()
        .map(|f| {
            let mut g = f.in_space(Space::Position);
            let vals = g.values_mut();
            vals.par_iter_mut()
                .zip(v.par_iter())
                .for_each(|(a, &p)| *a *= -p);
            g
        })
        .collect();
    (v, applied)
}

/// Exchange fields `output[k] = κ Σ_l ψ_l (1/|x| * conj(ψ_l) ψ_k)`.
///
/// Runs the `N(N+1)/2` pair convolutions of the upper triangle; the lower
/// triangle reuses them through `conv(conj(P)) = conj(conv(P))`.
pub fn exchange_term(psi: &OrbitalSet) -> Vec<ComplexField> {
    let grid = psi.grid().clone();
    let n_orb = psi.len();
    let kappa = psi.kappa();
    let fields: Vec<ComplexField> = psi
        .orbitals()
        .iter()
        .map(|f| f.in_space(Space::Position))
        .collect();

    // pair_conv[k][l] = (1/|x| * conj(ψ_l) ψ_k), stored for k <= l.
    let pairs: Vec<(usize, usize)> = (0..n_orb)
        .flat_map(|k| (k..n_orb).map(move |l| (k, l)))
        .collect();
    let convs: Vec<Vec<Complex64>> = pairs
        .par_iter()
        .map(|&(k, l)| {
            let prod: Vec<Complex64> = fields[l]
                .values()
                .iter()
                .zip(fields[k].values())
                .map(|(pl, pk)| pl.conj() * pk)
                .collect();
            coulomb::convolve_complex(&grid, &prod)
        })
        .collect();
    // slot of the stored pair (k, l) with k <= l in row-major triangle order
    let slot = |k: usize, l: usize| k * (2 * n_orb - k + 1) / 2 + (l - k);
    let conv_at = |k: usize, l: usize, i: usize| -> Complex64 {
        if k <= l {
            convs[slot(k, l)][i]
        } else {
            convs[slot(l, k)][i].conj()
        }
    };

    (0..n_orb)
        .map(|k| {
            let mut out = vec![Complex64::default(); grid.len()];
            out.par_iter_mut().enumerate().for_each(|(i, v)| {
                let mut acc = Complex64::default();
                for l in 0..n_orb {
                    acc += fields[l].values()[i] * conv_at(k, l, i);
                }
                *v = acc * kappa;
            });
            ComplexField::from_values(&grid, Space::Position, out).expect("length preserved")
        })
        .collect()
}

/// `D(ρ, ρ') = ∫∫ ρ(x) ρ'(y)/|x-y| dx dy`.
pub fn direct_energy(rho: &RealDensity, rho_other: &RealDensity) -> f64 {
    assert_eq!(rho.grid, rho_other.grid, "densities on different grids");
    coulomb::interaction_integral(&rho.grid, &rho.values, &rho_other.values)
}

/// `∫∫ |ρ_Ψ(x,y)|²/|x-y| dx dy = Σ_{k,l} ∫ conj(P_kl) (1/|x| * P_kl) dV`.
pub fn exchange_energy(psi: &OrbitalSet) -> f64 {
    let grid = psi.grid().clone();
    let n_orb = psi.len();
    let fields: Vec<ComplexField> = psi
        .orbitals()
        .iter()
        .map(|f| f.in_space(Space::Position))
        .collect();
    let pairs: Vec<(usize, usize)> = (0..n_orb)
        .flat_map(|k| (k..n_orb).map(move |l| (k, l)))
        .collect();
    let terms: Vec<f64> = pairs
        .par_iter()
        .map(|&(k, l)| {
            let prod: Vec<Complex64> = fields[l]
                .values()
                .iter()
                .zip(fields[k].values())
                .map(|(pl, pk)| pl.conj() * pk)
                .collect();
            let conv = coulomb::convolve_complex(&grid, &prod);
            let term = reduce::sum_indexed_c64(prod.len(), |i| prod[i].conj() * conv[i]).re
                * grid.dv();
            if k == l {
                term
            } else {
                2.0 * term
            }
        })
        .collect();
    terms.iter().sum()
}

/// Total kinetic energy `Σ_k ⟨ψ_k, sqrt(-Δ+m²) ψ_k⟩`.
pub fn kinetic_total(psi: &OrbitalSet) -> f64 {
    let m2 = psi.mass() * psi.mass();
    psi.orbitals()
        .iter()
        .map(|f| expect_multiplier(f, move |[kx, ky, kz]| (kx * kx + ky * ky + kz * kz + m2).sqrt()))
        .sum()
}

/// Hartree energy `E_H = Σ ⟨ψ, sqrt(-Δ+m²) ψ⟩ - (κ/2) D(ρ_Ψ, ρ_Ψ)`.
pub fn hartree_energy(psi: &OrbitalSet) -> f64 {
    let rho = density(psi);
    kinetic_total(psi) - 0.5 * psi.kappa() * direct_energy(&rho, &rho)
}

/// Hartree-Fock energy `E_HF = E_H + (κ/2) * exchange_energy`.
pub fn hartree_fock_energy(psi: &OrbitalSet) -> f64 {
    hartree_energy(psi) + 0.5 * psi.kappa() * exchange_energy(psi)
}

/// Particle number `N(Ψ) = ∫ ρ_Ψ dV = Σ_k ||ψ_k||²`.
pub fn particle_number(psi: &OrbitalSet) -> f64 {
    psi.orbitals().iter().map(|f| f.norm_sq()).sum()
}
