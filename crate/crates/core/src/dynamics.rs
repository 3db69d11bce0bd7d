//! Time integration of the Hartree and Hartree-Fock equations.
//!
//! The default stepper is Strang splitting: a half step of the exact kinetic
//! phase `exp(-i dt/2 sqrt(|k|²+m²))`, a full potential step, and another
//! kinetic half step. For the Hartree model the potential step is exact: the
//! direct potential depends only on ρ, and the phase `exp(+i dt V)` leaves ρ
//! unchanged. For Hartree-Fock the orbital-space generator `-V δ_kl + W_kl`
//! is frozen at substep start and exponentiated per grid cell as an N x N
//! Hermitian matrix; the rotation is pointwise unitary, so ρ and the particle
//! number are conserved to roundoff (the Gram matrix drifts at the scheme
//! order, unlike the Hartree case where it is exact).
//!
//! A classical RK4 stepper over the full right side serves as cross-check.
//!
//! `evolve` advances with fixed dt, emits diagnostics on a fixed schedule,
//! and stops when a detector fires, mirroring the blow-up alternative: a
//! finite-grid surrogate (σ growth plus spectral-tail saturation) stands in
//! for divergence of the H^{1/2} norm.

use crate::coulomb;
use crate::diagnostics::{self, TimeSeriesRecord};
use crate::error::{Error, Result};
use crate::field::{ComplexField, Space};
use crate::grid::Grid;
use crate::linalg::HermEig;
use crate::operators;
use crate::orbitals::OrbitalSet;
use crate::reduce;
use num_complex::Complex64;
use rayon::prelude::*;

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Model {
    Hartree,
    HartreeFock,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Scheme {
    Strang,
    Rk4,
}

/// Evolving state: the orbitals, the model, and the global step counter.
#[derive(Clone)]
pub struct SimState {
    pub psi: OrbitalSet,
    pub model: Model,
    pub t: f64,
    pub step_index: u64,
}

impl SimState {
    pub fn new(psi: OrbitalSet, model: Model) -> SimState {
        SimState {
            psi,
            model,
            t: 0.0,
            step_index: 0,
        }
    }
}

/// Why a run stopped.
#[derive(Clone, Copy, Debug, PartialEq)]
pub enum TerminationReason {
    Completed,
    /// σ exceeded `sigma_factor * σ(0)` while the spectral tail saturated.
    BlowUpDetected { sigma_final: f64, t: f64 },
    /// The spectral tail alone exceeded `tail_max`.
    ResolutionLoss { tail_fraction: f64, t: f64 },
    /// Boundary-shell mass exceeded `boundary_max` of the total.
    BoundaryLeak { mass_fraction: f64, t: f64 },
}

/// Detector thresholds for `evolve`.
#[derive(Clone, Copy, Debug)]
pub struct BlowUpPolicy {
    /// BlowUp fires when σ > sigma_factor * σ(0) and the tail saturates.
    pub sigma_factor: f64,
    /// Spectral tail fraction treated as loss of resolution.
    pub tail_max: f64,
    /// Boundary-shell mass fraction treated as a leak.
    pub boundary_max: f64,
}

impl Default for BlowUpPolicy {
    fn default() -> Self {
        BlowUpPolicy {
            sigma_factor: 10.0,
            tail_max: 0.1,
            boundary_max: 1e-3,
        }
    }
}

/// Maximum Strang phase advance per step before the step is rejected.
const MAX_PHASE_PER_STEP: f64 = std::f64::consts::TAU;
/// Default RK4 stability constant in `dt <= c / (sqrt(k_max²+m²) + ||V||)`.
pub const RK4_STABILITY_CONSTANT: f64 = 2.8;

/// Reusable buffers and phase tables for stepping one state.
pub struct StepWorkspace {
    grid: Grid,
    mass: f64,
    dt: f64,
    /// `exp(-i dt/2 sqrt(|k|²+m²))` per spectral index.
    half_kinetic: Vec<Complex64>,
    /// `sqrt(|k|²+m²)` per spectral index (RK4 path).
    kinetic_symbol: Vec<f64>,
}

impl StepWorkspace {
    pub fn new(grid: &Grid, mass: f64, dt: f64) -> StepWorkspace {
        let len = grid.len();
        let mut half_kinetic = vec![Complex64::default(); len];
        let mut kinetic_symbol = vec![0.0f64; len];
        let m2 = mass * mass;
        half_kinetic
            .par_iter_mut()
            .zip(kinetic_symbol.par_iter_mut())
            .enumerate()
            .for_each(|(i, (h, s))| {
                let [kx, ky, kz] = grid.wavenumber(i);
                let w = (kx * kx + ky * ky + kz * kz + m2).sqrt();
                *s = w;
                let ph = -0.5 * dt * w;
                *h = Complex64::new(ph.cos(), ph.sin());
            });
        StepWorkspace {
            grid: grid.clone(),
            mass,
            dt,
            half_kinetic,
            kinetic_symbol,
        }
    }

    fn matches(&self, grid: &Grid, mass: f64, dt: f64) -> bool {
        self.grid == *grid && self.mass == mass && self.dt == dt
    }
}

fn half_kinetic_step(ws: &StepWorkspace, psi: &mut OrbitalSet) {
    for f in psi.orbitals_mut() {
        f.to_space(Space::Spectral);
        f.values_mut()
            .par_iter_mut()
            .zip(ws.half_kinetic.par_iter())
            .for_each(|(v, p)| *v *= p);
        f.to_space(Space::Position);
    }
}

/// Direct potential `V = κ (1/|x| * ρ)`, or `None` when κ = 0.
fn direct_potential(psi: &OrbitalSet) -> Option<Vec<f64>> {
    if psi.kappa() == 0.0 {
        return None;
    }
    let rho = operators::density(psi);
    let mut v = coulomb::convolve_real(psi.grid(), rho.values());
    let kappa = psi.kappa();
    v.par_iter_mut().for_each(|x| *x *= kappa);
    Some(v)
}

fn sup_norm(v: &[f64]) -> f64 {
    v.iter().fold(0.0f64, |acc, x| acc.max(x.abs()))
}

/// Exact Hartree potential phase `ψ_k <- exp(+i dt V) ψ_k`.
fn hartree_potential_step(psi: &mut OrbitalSet, v: &[f64], dt: f64) {
    let phases: Vec<Complex64> = v
        .par_iter()
        .map(|&p| {
            let ph = dt * p;
            Complex64::new(ph.cos(), ph.sin())
        })
        .collect();
    for f in psi.orbitals_mut() {
        f.to_space(Space::Position);
        f.values_mut()
            .par_iter_mut()
            .zip(phases.par_iter())
            .for_each(|(a, p)| *a *= p);
    }
}

/// Pair convolutions `W_kl = κ (1/|x| * conj(ψ_l) ψ_k)` for k ≤ l.
fn exchange_matrix(psi: &OrbitalSet) -> Vec<Vec<Complex64>> {
    let grid = psi.grid().clone();
    let n_orb = psi.len();
    let kappa = psi.kappa();
    let fields = psi.orbitals();
    let pairs: Vec<(usize, usize)> = (0..n_orb)
        .flat_map(|k| (k..n_orb).map(move |l| (k, l)))
        .collect();
    pairs
        .par_iter()
        .map(|&(k, l)| {
            let prod: Vec<Complex64> = fields[l]
                .values()
                .iter()
                .zip(fields[k].values())
                .map(|(pl, pk)| pl.conj() * pk)
                .collect();
            let mut c = coulomb::convolve_complex(&grid, &prod);
            c.par_iter_mut().for_each(|z| *z *= kappa);
            c
        })
        .collect()
}

/// Frozen-generator Hartree-Fock potential step: per grid cell, exponentiate
/// the Hermitian `-V δ_kl + W_kl` and rotate the orbital vector.
fn hartree_fock_potential_step(psi: &mut OrbitalSet, v: &[f64], dt: f64) {
    let n_orb = psi.len();
    psi.to_space(Space::Position);
    let w = exchange_matrix(psi);
    let slot = |k: usize, l: usize| k * (2 * n_orb - k + 1) / 2 + (l - k);
    let len = psi.grid().len();

    // gather per-cell orbital vectors, rotate, scatter back
    let mut cell_major: Vec<Complex64> = vec![Complex64::default(); len * n_orb];
    {
        let fields = psi.orbitals();
        cell_major
            .par_chunks_mut(n_orb)
            .enumerate()
            .for_each(|(i, cell)| {
                for (k, slotv) in cell.iter_mut().enumerate() {
                    *slotv = fields[k].values()[i];
                }
            });
    }
    cell_major
        .par_chunks_mut(n_orb)
        .enumerate()
        .for_each_init(
            || {
                (
                    HermEig::new(n_orb),
                    vec![Complex64::default(); n_orb * n_orb],
                    vec![Complex64::default(); n_orb],
                    vec![Complex64::default(); n_orb],
                    vec![Complex64::default(); n_orb],
                )
            },
            |(eig, gen, phases, out, tmp), (i, cell)| {
                for k in 0..n_orb {
                    for l in 0..n_orb {
                        let wkl = if k <= l {
                            w[slot(k, l)][i]
                        } else {
                            w[slot(l, k)][i].conj()
                        };
                        gen[k * n_orb + l] = if k == l {
                            Complex64::new(wkl.re - v[i], 0.0)
                        } else {
                            wkl
                        };
                    }
                }
                eig.factor(gen);
                for j in 0..n_orb {
                    let ph = -dt * eig.evals[j];
                    phases[j] = Complex64::new(ph.cos(), ph.sin());
                }
                eig.apply_function(phases, cell, out, tmp);
                cell.copy_from_slice(out);
            },
        );
    let fields = psi.orbitals_mut();
    for (k, f) in fields.iter_mut().enumerate() {
        let vals = f.values_mut();
        vals.par_iter_mut()
            .enumerate()
            .for_each(|(i, v)| *v = cell_major[i * n_orb + k]);
    }
}

fn check_strang_step_size(psi: &OrbitalSet, v: Option<&[f64]>, dt: f64, model: Model) -> Result<()> {
    let vmax = v.map(sup_norm).unwrap_or(0.0);
    // Gershgorin-style bound on the potential generator magnitude
    let bound = match model {
        Model::Hartree => vmax,
        Model::HartreeFock => 2.0 * vmax * psi.len() as f64,
    };
    if bound * dt > MAX_PHASE_PER_STEP {
        return Err(Error::StepSize {
            dt,
            max: MAX_PHASE_PER_STEP / bound,
        });
    }
    Ok(())
}

/// One Strang splitting step. Pure: returns the advanced state.
pub fn step_strang(state: &SimState, dt: f64) -> Result<SimState> {
    if !(dt > 0.0) {
        return Err(Error::InvalidArgument(format!("dt = {dt} must be positive")));
    }
    let ws = StepWorkspace::new(state.psi.grid(), state.psi.mass(), dt);
    let mut out = state.clone();
    strang_advance(&ws, &mut out, dt)?;
    out.t = state.t + dt;
    out.step_index = state.step_index + 1;
    Ok(out)
}

fn strang_advance(ws: &StepWorkspace, state: &mut SimState, dt: f64) -> Result<()> {
    debug_assert!(ws.matches(state.psi.grid(), state.psi.mass(), dt));
    half_kinetic_step(ws, &mut state.psi);
    let v = direct_potential(&state.psi);
    check_strang_step_size(&state.psi, v.as_deref(), dt, state.model)?;
    if let Some(v) = v {
        match state.model {
            Model::Hartree => hartree_potential_step(&mut state.psi, &v, dt),
            Model::HartreeFock => hartree_fock_potential_step(&mut state.psi, &v, dt),
        }
    }
    half_kinetic_step(ws, &mut state.psi);
    Ok(())
}

/// Right side `F_k = -i (T ψ_k - V ψ_k + X_k)` of the evolution equations.
fn rhs(ws: &StepWorkspace, psi: &OrbitalSet, model: Model) -> Vec<ComplexField> {
    let v = direct_potential(psi);
    let exchange = match (model, psi.kappa() == 0.0) {
        (Model::HartreeFock, false) => Some(operators::exchange_term(psi)),
        _ => None,
    };
    psi.orbitals()
        .iter()
        .enumerate()
        .map(|(k, f)| {
            let pos = f.in_space(Space::Position);
            // T psi via the cached symbol
            let mut t = pos.clone();
            t.to_space(Space::Spectral);
            t.values_mut()
                .par_iter_mut()
                .zip(ws.kinetic_symbol.par_iter())
                .for_each(|(z, s)| *z *= s);
            t.to_space(Space::Position);
            let mut acc: Vec<Complex64> = t.values().to_vec();
            if let Some(v) = &v {
                acc.par_iter_mut()
                    .zip(pos.values().par_iter())
                    .zip(v.par_iter())
                    .for_each(|((a, p), vv)| *a -= p * vv);
            }
            if let Some(x) = &exchange {
                acc.par_iter_mut()
                    .zip(x[k].values().par_iter())
                    .for_each(|(a, e)| *a += e);
            }
            let mi = Complex64::new(0.0, -1.0);
            acc.par_iter_mut().for_each(|a| *a *= mi);
            ComplexField::from_values(&ws.grid, Space::Position, acc).expect("len")
        })
        .collect()
}

/// Classical RK4 step over the full right side; conservation approximate.
pub fn step_rk4(state: &SimState, dt: f64) -> Result<SimState> {
    if !(dt > 0.0) {
        return Err(Error::InvalidArgument(format!("dt = {dt} must be positive")));
    }
    let ws = StepWorkspace::new(state.psi.grid(), state.psi.mass(), dt);
    let mut out = state.clone();
    rk4_advance(&ws, &mut out, dt)?;
    out.t = state.t + dt;
    out.step_index = state.step_index + 1;
    Ok(out)
}

fn rk4_advance(ws: &StepWorkspace, state: &mut SimState, dt: f64) -> Result<()> {
    // stability bound with the current potential
    let grid = &ws.grid;
    let kmax = 3f64.sqrt() * grid.nyquist_k();
    let vmax = direct_potential(&state.psi).map(|v| sup_norm(&v)).unwrap_or(0.0);
    let limit = RK4_STABILITY_CONSTANT / ((kmax * kmax + ws.mass * ws.mass).sqrt() + vmax);
    if dt > limit {
        return Err(Error::StepSize { dt, max: limit });
    }

    state.psi.to_space(Space::Position);
    let n_orb = state.psi.len();
    let k1 = rhs(ws, &state.psi, state.model);
    let stage = |base: &OrbitalSet, ks: &[ComplexField], c: f64| -> OrbitalSet {
        let mut s = base.clone();
        for (f, k) in s.orbitals_mut().iter_mut().zip(ks) {
            f.axpy(Complex64::new(c * dt, 0.0), k);
        }
        s
    };
    let k2 = rhs(ws, &stage(&state.psi, &k1, 0.5), state.model);
    let k3 = rhs(ws, &stage(&state.psi, &k2, 0.5), state.model);
    let k4 = rhs(ws, &stage(&state.psi, &k3, 1.0), state.model);
    let sixth = dt / 6.0;
    for i in 0..n_orb {
        let f = &mut state.psi.orbitals_mut()[i];
        let fv = f.values_mut();
        fv.par_iter_mut().enumerate().for_each(|(j, z)| {
            *z += sixth
                * (k1[i].values()[j]
                    + 2.0 * k2[i].values()[j]
                    + 2.0 * k3[i].values()[j]
                    + k4[i].values()[j]);
        });
    }
    Ok(())
}

/// Diagnostic schedule and detector policy for `evolve`.
#[derive(Clone, Debug)]
pub struct EvolveOptions {
    pub scheme: Scheme,
    pub dt: f64,
    pub t_end: f64,
    /// Spacing of diagnostic records; must be an integer multiple of dt.
    pub record_interval: f64,
    pub policy: BlowUpPolicy,
    pub radii: Vec<f64>,
}

/// Outcome of an `evolve` call.
pub struct EvolveOutcome {
    pub records: Vec<TimeSeriesRecord>,
    pub final_state: SimState,
    pub reason: TerminationReason,
}

/// Advance until `t >= t_end` or a detector fires, recording diagnostics
/// every `record_interval`.
pub fn evolve(state0: &SimState, opts: &EvolveOptions) -> Result<EvolveOutcome> {
    if !(opts.dt > 0.0) || !opts.dt.is_finite() {
        return Err(Error::InvalidArgument("dt must be positive".into()));
    }
    if opts.t_end < 0.0 {
        return Err(Error::InvalidArgument("t_end must be nonnegative".into()));
    }
    let steps_per_tick = (opts.record_interval / opts.dt).round() as u64;
    if steps_per_tick == 0
        || (steps_per_tick as f64 * opts.dt - opts.record_interval).abs()
            > 1e-9 * opts.record_interval
    {
        return Err(Error::InvalidArgument(format!(
            "record interval {} is not an integer multiple of dt {}",
            opts.record_interval, opts.dt
        )));
    }
    let radii = if opts.radii.is_empty() {
        diagnostics::default_radii(state0.psi.grid())
    } else {
        opts.radii.clone()
    };

    let mut state = state0.clone();
    state.psi.to_space(Space::Position);
    // Canonical time accounting: t(k) = k*dt + offset. For a fresh run the
    // offset is zero; for a same-dt restart it is exactly zero again because
    // the snapshot time was itself computed as step_index*dt, which keeps
    // restarted records bit-identical to the uninterrupted run.
    let t_offset = state.t - state.step_index as f64 * opts.dt;
    let ws = StepWorkspace::new(state.psi.grid(), state.psi.mass(), opts.dt);

    let use_exchange = state.model == Model::HartreeFock;
    let mut records = Vec::new();
    let rec0 = diagnostics::record(&state.psi, use_exchange, state.t, &radii)?;
    let sigma0 = rec0.sigma;
    records.push(rec0);
    if let Some(reason) = check_detectors(records.last().unwrap(), sigma0, &opts.policy) {
        return Ok(EvolveOutcome {
            records,
            final_state: state,
            reason,
        });
    }

    let remaining = opts.t_end - state.t;
    let total_steps = if remaining <= 0.0 {
        0
    } else {
        (remaining / opts.dt - 1e-9).ceil().max(0.0) as u64
    };

    let mut reason = TerminationReason::Completed;
    for step in 1..=total_steps {
        match opts.scheme {
            Scheme::Strang => strang_advance(&ws, &mut state, opts.dt)?,
            Scheme::Rk4 => rk4_advance(&ws, &mut state, opts.dt)?,
        }
        state.step_index += 1;
        state.t = state.step_index as f64 * opts.dt + t_offset;
        let at_tick = state.step_index % steps_per_tick == 0;
        if at_tick || step == total_steps {
            let rec = diagnostics::record(&state.psi, use_exchange, state.t, &radii)?;
            let fired = check_detectors(&rec, sigma0, &opts.policy);
            records.push(rec);
            if let Some(r) = fired {
                reason = r;
                break;
            }
        }
    }
    Ok(EvolveOutcome {
        records,
        final_state: state,
        reason,
    })
}

fn check_detectors(
    rec: &TimeSeriesRecord,
    sigma0: f64,
    policy: &BlowUpPolicy,
) -> Option<TerminationReason> {
    let tail_saturated = rec.spectral_tail_fraction > policy.tail_max;
    if tail_saturated && rec.sigma > policy.sigma_factor * sigma0 {
        return Some(TerminationReason::BlowUpDetected {
            sigma_final: rec.sigma,
            t: rec.t,
        });
    }
    if tail_saturated {
        return Some(TerminationReason::ResolutionLoss {
            tail_fraction: rec.spectral_tail_fraction,
            t: rec.t,
        });
    }
    if rec.boundary_mass_fraction > policy.boundary_max {
        return Some(TerminationReason::BoundaryLeak {
            mass_fraction: rec.boundary_mass_fraction,
            t: rec.t,
        });
    }
    None
}

/// Gram-matrix drift helper used by conservation tests.
pub fn gram_drift(psi: &OrbitalSet, reference: &[Complex64]) -> f64 {
    let g = diagnostics::gram(psi);
    let mut max = 0.0f64;
    for (a, b) in g.iter().zip(reference) {
        max = max.max((a - b).norm());
    }
    max
}

/// L² norm of the difference between two orbital sets.
pub fn orbital_set_distance(a: &OrbitalSet, b: &OrbitalSet) -> f64 {
    assert_eq!(a.len(), b.len());
    let mut acc = 0.0;
    for (fa, fb) in a.orbitals().iter().zip(b.orbitals()) {
        let pa = fa.in_space(Space::Position);
        let pb = fb.in_space(Space::Position);
        let d = reduce::sum_indexed(pa.values().len(), |i| {
            (pa.values()[i] - pb.values()[i]).norm_sqr()
        }) * pa.grid().dv();
        acc += d;
    }
    acc.sqrt()
}
