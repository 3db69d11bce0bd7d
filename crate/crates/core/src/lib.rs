//! Pseudospectral toolkit for the pseudo-relativistic Hartree and
//! Hartree-Fock equations on a periodic box.
//!
//! The crate evolves `N` coupled orbitals under the dispersion `sqrt(-Δ + m²)`
//! with an attractive `1/|x|` self-interaction (direct term) and, for the
//! Hartree-Fock model, the pairwise exchange term. On top of the propagators
//! it provides the conserved-quantity and virial diagnostics used to monitor
//! gravitational-collapse runs, ground-state gradient flow with critical
//! coupling estimation, and numeric checks of the kinetic-energy and
//! Coulomb-energy inequalities that control the stability threshold.
//!
//! Module map:
//! - [`grid`], [`field`], [`fft`]: periodic grid, complex scalar fields,
//!   Fourier transforms and multiplier application.
//! - [`coulomb`]: free-space `1/|x|` convolution by zero padding.
//! - [`operators`]: densities, mean-field potentials, exchange, energies.
//! - [`dynamics`]: Strang and RK4 steppers, blow-up detectors, `evolve`.
//! - [`diagnostics`]: Gram matrix, `sigma`, virial quantities, records.
//! - [`initial_data`]: Dirichlet ball shells, Gaussian families, Löwdin.
//! - [`variational`]: gradient flow, critical coupling, inequality checks,
//!   the heuristic white-dwarf stability calculator.

pub mod coulomb;
pub mod diagnostics;
pub mod dynamics;
pub mod error;
pub mod fft;
pub mod field;
pub mod grid;
pub mod initial_data;
pub mod linalg;
pub mod operators;
pub mod orbitals;
pub mod reduce;
pub mod special;
pub mod variational;

pub use error::{Error, Result};
pub use field::{ComplexField, Space};
pub use grid::Grid;
pub use orbitals::OrbitalSet;
