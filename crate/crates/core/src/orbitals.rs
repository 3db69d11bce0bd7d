//! An ordered family of orbitals sharing one grid, with the physical
//! parameters of the mean-field model.

use crate::error::{Error, Result};
use crate::field::{ComplexField, Space};
use crate::grid::Grid;
use num_complex::Complex64;

/// `Ψ = {ψ_k}` plus the rest mass `m` and coupling `κ = G m_Z²/Z²`.
///
/// `κ = 0` is accepted as the free-evolution surrogate (the potential
/// generator vanishes identically).
#[derive(Clone)]
pub struct OrbitalSet {
    orbitals: Vec<ComplexField>,
    mass: f64,
    kappa: f64,
}

impl OrbitalSet {
    pub fn new(orbitals: Vec<ComplexField>, mass: f64, kappa: f64) -> Result<OrbitalSet> {
        if orbitals.is_empty() {
            return Err(Error::InvalidArgument("orbital set needs N >= 1".into()));
        }
        if !(mass >= 0.0) {
            return Err(Error::InvalidArgument(format!("mass {mass} must be >= 0")));
        }
        if !(kappa >= 0.0) {
            return Err(Error::InvalidArgument(format!("kappa {kappa} must be >= 0")));
        }
        let grid = orbitals[0].grid().clone();
        if orbitals.iter().any(|f| *f.grid() != grid) {
            return Err(Error::GridMismatch);
        }
        Ok(OrbitalSet {
            orbitals,
            mass,
            kappa,
        })
    }

    pub fn grid(&self) -> &Grid {
        self.orbitals[0].grid()
    }

    pub fn len(&self) -> usize {
        self.orbitals.len()
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    pub fn mass(&self) -> f64 {
        self.mass
    }

    pub fn kappa(&self) -> f64 {
        self.kappa
    }

    pub fn set_kappa(&mut self, kappa: f64) {
        assert!(kappa >= 0.0);
        self.kappa = kappa;
    }

    pub fn orbitals(&self) -> &[ComplexField] {
        &self.orbitals
    }

    pub fn orbitals_mut(&mut self) -> &mut [ComplexField] {
        &mut self.orbitals
    }

    pub fn into_orbitals(self) -> Vec<ComplexField> {
        self.orbitals
    }

    /// Convert every orbital to the requested space in place.
    pub fn to_space(&mut self, space: Space) {
        for f in &mut self.orbitals {
            f.to_space(space);
        }
    }

    /// Replace `ψ_k` by `Σ_l T[k][l] ψ_l` (gauge transformation for unitary T).
    pub fn transform(&self, t: &[Complex64]) -> OrbitalSet {
        let n = self.len();
        assert_eq!(t.len(), n * n, "transform matrix must be N x N");
        let mut out = Vec::with_capacity(n);
        for k in 0..n {
            let mut acc = self.orbitals[0].clone();
            acc.scale(t[k * n]);
            for l in 1..n {
                acc.axpy(t[k * n + l], &self.orbitals[l]);
            }
            out.push(acc);
        }
        OrbitalSet {
            orbitals: out,
            mass: self.mass,
            kappa: self.kappa,
        }
    }
}
