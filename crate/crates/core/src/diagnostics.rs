//! Scalar observables: Gram matrix, σ, virial quantities, mass in balls,
//! the rescaled blow-up profile, and the massless energy functional.

use crate::error::{Error, Result};
use crate::field::Space;
use crate::operators;
use crate::orbitals::OrbitalSet;
use crate::reduce;
use num_complex::Complex64;

/// `G_kl = ⟨ψ_k, ψ_l⟩`, row-major, Hermitian by construction.
pub fn gram(psi: &OrbitalSet) -> Vec<Complex64> {
    let n = psi.len();
    let fields = psi.orbitals();
    let mut g = vec![Complex64::default(); n * n];
    for k in 0..n {
        for l in k..n {
            let v = fields[k].inner(&fields[l]);
            g[k * n + l] = v;
            g[l * n + k] = v.conj();
        }
    }
    // exact real diagonal
    for k in 0..n {
        g[k * n + k] = Complex64::new(g[k * n + k].re, 0.0);
    }
    g
}

/// Largest off-diagonal magnitude and largest diagonal deviation from 1.
pub fn gram_deviation(gram: &[Complex64], n: usize) -> (f64, f64) {
    let mut off: f64 = 0.0;
    let mut diag: f64 = 0.0;
    for k in 0..n {
        for l in 0..n {
            if k == l {
                diag = diag.max((gram[k * n + k].re - 1.0).abs());
            } else {
                off = off.max(gram[k * n + l].norm());
            }
        }
    }
    (off, diag)
}

/// `σ(Ψ) = Σ_k ||ψ_k||²_{Ḣ^{1/2}}`, the blow-up rescaling rate.
pub fn sigma(psi: &OrbitalSet) -> f64 {
    psi.orbitals().iter().map(|f| f.half_norm_sq()).sum()
}

/// Fraction of σ carried by the top spectral octave `|k| > k_nyquist / 2`.
pub fn spectral_tail_fraction(psi: &OrbitalSet) -> f64 {
    let grid = psi.grid().clone();
    let cut = 0.5 * grid.nyquist_k();
    let mut num = 0.0;
    let mut den = 0.0;
    for f in psi.orbitals() {
        let spec = f.in_space(Space::Spectral);
        let vals = spec.values();
        den += reduce::sum_indexed(vals.len(), |i| grid.k_norm(i) * vals[i].norm_sqr());
        num += reduce::sum_indexed(vals.len(), |i| {
            let k = grid.k_norm(i);
            if k > cut {
                k * vals[i].norm_sqr()
            } else {
                0.0
            }
        });
    }
    if den > 0.0 {
        num / den
    } else {
        0.0
    }
}

/// Fraction of the particle mass in the outer 10% shell of the box.
pub fn boundary_mass_fraction(psi: &OrbitalSet) -> f64 {
    let rho = operators::density(psi);
    let grid = rho.grid().clone();
    let vals = rho.values();
    let total = reduce::sum_indexed(vals.len(), |i| vals[i]);
    if total <= 0.0 {
        return 0.0;
    }
    let shell = reduce::sum_indexed(vals.len(), |i| {
        if grid.in_boundary_shell(i) {
            vals[i]
        } else {
            0.0
        }
    });
    shell / total
}

/// Expectation of the dilation generator `A = -(i/2)(x·∇ + ∇·x)`.
#[derive(Clone, Copy, Debug)]
pub struct DilationResult {
    /// `a = Σ_k ⟨ψ_k, A ψ_k⟩` (symmetrized over the two operator orderings).
    pub value: f64,
    /// Discrepancy between the `x·(∇ψ)` and `∇·(xψ)` orderings; grid sanity
    /// scalar, small only when the field is supported away from the boundary.
    pub ordering_deviation: f64,
}

/// `a(t) = Σ_k ⟨ψ_k, A ψ_k⟩` with spectral gradients and centered
/// coordinates. Both operator orderings are evaluated; their mean is the
/// returned value and their difference is reported for monitoring.
pub fn dilation_a(psi: &OrbitalSet) -> DilationResult {
    let grid = psi.grid().clone();
    let mut a_grad = 0.0; // Im <psi, x . grad psi>
    let mut a_div = 0.0; // Im <psi, div(x psi)>
    for f in psi.orbitals() {
        let pos = f.in_space(Space::Position);
        for axis in 0..3 {
            // x_j (d_j psi)
            let d = pos.derivative(axis);
            let ip1 = reduce::sum_indexed_c64(pos.values().len(), |i| {
                let x = grid.position(i)[axis];
                pos.values()[i].conj() * d.values()[i] * x
            }) * grid.dv();
            a_grad += ip1.im;
            // d_j (x_j psi)
            let mut xf = pos.clone();
            {
                let vals = xf.values_mut();
                for i in 0..vals.len() {
                    vals[i] *= grid.position(i)[axis];
                }
            }
            let dxf = xf.derivative(axis);
            let ip2 = pos.inner(&dxf);
            a_div += ip2.im;
        }
    }
    DilationResult {
        value: 0.5 * (a_grad + a_div),
        ordering_deviation: (a_grad - a_div).abs(),
    }
}

/// `m(t) = Σ_k Σ_j ⟨x_j ψ_k, sqrt(-Δ + m²) (x_j ψ_k)⟩`, nonnegative.
pub fn moment_m(psi: &OrbitalSet) -> f64 {
    let grid = psi.grid().clone();
    let m2 = psi.mass() * psi.mass();
    let mut total = 0.0;
    for f in psi.orbitals() {
        let pos = f.in_space(Space::Position);
        for axis in 0..3 {
            let mut xf = pos.clone();
            {
                let vals = xf.values_mut();
                for i in 0..vals.len() {
                    vals[i] *= grid.position(i)[axis];
                }
            }
            total += operators::expect_multiplier(&xf, move |[kx, ky, kz]| {
                (kx * kx + ky * ky + kz * kz + m2).sqrt()
            });
        }
    }
    total
}

/// `∫_{|x| < R} ρ_Ψ dx` by cell sums; rejects `R ≥ L/2`.
pub fn mass_in_ball(psi: &OrbitalSet, radius: f64) -> Result<f64> {
    let grid = psi.grid().clone();
    if !(radius > 0.0) || radius >= 0.5 * grid.length() {
        return Err(Error::InvalidArgument(format!(
            "ball radius {radius} must lie in (0, L/2)"
        )));
    }
    let rho = operators::density(psi);
    let vals = rho.values();
    Ok(reduce::sum_indexed(vals.len(), |i| {
        if grid.radius(i) < radius {
            vals[i]
        } else {
            0.0
        }
    }) * grid.dv())
}

/// Rescaled profile `ψ̃_k(x) = σ^{-3/2} ψ_k(σ^{-1} x)` with `σ = sigma(Ψ)`;
/// by construction `sigma(result) ≈ 1` up to resampling error.
pub fn rescaled_profile(psi: &OrbitalSet) -> Result<OrbitalSet> {
    let s = sigma(psi);
    if !(s > 0.0) {
        return Err(Error::InvalidArgument(format!(
            "sigma = {s} must be positive to rescale"
        )));
    }
    let mut orbitals = Vec::with_capacity(psi.len());
    for f in psi.orbitals() {
        orbitals.push(f.resample(s)?);
    }
    OrbitalSet::new(orbitals, psi.mass(), psi.kappa())
}

/// The massless functional `Ẽ(Ψ) = Σ ||ψ_k||²_{Ḣ^{1/2}} - (κ/2)(D - X)`;
/// differs from `E_HF` by at most `m * N` (the rest-energy sandwich).
pub fn e_tilde(psi: &OrbitalSet) -> f64 {
    let rho = operators::density(psi);
    let d = operators::direct_energy(&rho, &rho);
    let x = operators::exchange_energy(psi);
    sigma(psi) - 0.5 * psi.kappa() * (d - x)
}

/// One row of scalar diagnostics for a snapshot at time `t`.
#[derive(Clone, Debug)]
pub struct TimeSeriesRecord {
    pub t: f64,
    /// Model energy: `E_H` for Hartree runs, `E_HF` for Hartree-Fock runs.
    pub energy: f64,
    pub n_total: f64,
    pub sigma: f64,
    pub a_dilation: f64,
    pub m_moment: f64,
    pub gram_offdiag_max: f64,
    pub gram_diag_dev_max: f64,
    pub mass_in_ball: Vec<f64>,
    pub boundary_mass_fraction: f64,
    pub spectral_tail_fraction: f64,
    /// Grid sanity scalar for the dilation evaluation (not part of the CSV).
    pub dilation_ordering_dev: f64,
}

/// Default diagnostic radii `{0.25, 0.5, 1.0} * (L/4)`.
pub fn default_radii(grid: &crate::grid::Grid) -> Vec<f64> {
    let quarter = 0.25 * grid.length();
    vec![0.25 * quarter, 0.5 * quarter, quarter]
}

/// Evaluate every observable on a snapshot.
pub fn record(
    psi: &OrbitalSet,
    use_exchange: bool,
    t: f64,
    radii: &[f64],
) -> Result<TimeSeriesRecord> {
    let energy = if use_exchange {
        operators::hartree_fock_energy(psi)
    } else {
        operators::hartree_energy(psi)
    };
    let g = gram(psi);
    let (off, diag) = gram_deviation(&g, psi.len());
    let dil = dilation_a(psi);
    let mut balls = Vec::with_capacity(radii.len());
    for &r in radii {
        balls.push(mass_in_ball(psi, r)?);
    }
    Ok(TimeSeriesRecord {
        t,
        energy,
        n_total: operators::particle_number(psi),
        sigma: sigma(psi),
        a_dilation: dil.value,
        m_moment: moment_m(psi),
        gram_offdiag_max: off,
        gram_diag_dev_max: diag,
        mass_in_ball: balls,
        boundary_mass_fraction: boundary_mass_fraction(psi),
        spectral_tail_fraction: spectral_tail_fraction(psi),
        dilation_ordering_dev: dil.ordering_deviation,
    })
}
