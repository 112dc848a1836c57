// SPDX-License-Identifier: Apache-2.0

//! Four-state atom-photon system driven by two counter-propagating beams.
//!
//! Basis, in order: |1> = |0 photons, h>, |2> = |beta photon, i>,
//! |3> = |-beta photon, i>, |4> = |both photons, g>. Indices in code are
//! zero-based.

use nalgebra::Matrix4;
use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::ode::{self, OdeOptions};
use crate::units::HBAR;

/// Atomic constants and the local coupling for one evaluation point.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct AtomParams {
    /// Lower-transition dipole moment (C m).
    pub d1: f64,
    /// Upper-transition dipole moment (C m).
    pub d2: f64,
    /// Population decay rate of the intermediate state (1/s).
    pub gamma1: f64,
    /// Population decay rate of the upper state (1/s).
    pub gamma2: f64,
    /// Detuning from the intermediate state (rad/s).
    pub delta: f64,
    /// Lower-transition matrix element (J).
    pub m1: f64,
    /// Upper-transition matrix element (J).
    pub m2: f64,
}

impl AtomParams {
    /// Uncoupled atom; set the couplings with [`AtomParams::with_field`] or
    /// [`AtomParams::with_couplings`].
    pub fn new(d1: f64, d2: f64, gamma1: f64, gamma2: f64, delta: f64) -> Result<Self> {
        for (name, v) in [("d1", d1), ("d2", d2)] {
            if !(v >= 0.0 && v.is_finite()) {
                return Err(Error::domain(name, v, "finite and >= 0"));
            }
        }
        for (name, v) in [("gamma1", gamma1), ("gamma2", gamma2)] {
            if !(v > 0.0 && v.is_finite()) {
                return Err(Error::domain(name, v, "finite and > 0"));
            }
        }
        if !delta.is_finite() {
            return Err(Error::domain("delta", delta, "finite"));
        }
        Ok(AtomParams {
            d1,
            d2,
            gamma1,
            gamma2,
            delta,
            m1: 0.0,
            m2: 0.0,
        })
    }

    /// Couplings m = d |E| for a local single-beam field magnitude `e_abs`.
    pub fn with_field(self, e_abs: f64) -> Self {
        AtomParams {
            m1: self.d1 * e_abs,
            m2: self.d2 * e_abs,
            ..self
        }
    }

    pub fn with_couplings(self, m1: f64, m2: f64) -> Self {
        AtomParams { m1, m2, ..self }
    }

    pub fn decay(&self) -> DecayMatrix {
        DecayMatrix::from(self)
    }

    /// Internal frequency unit: max(gamma1, gamma2, |delta|), falling back to
    /// the coupling strength and then to 1/s when those vanish.
    fn frequency_scale(&self) -> f64 {
        let w = self.gamma1.max(self.gamma2).max(self.delta.abs());
        if w > 0.0 {
            return w;
        }
        let m = self.m1.abs().max(self.m2.abs()) / HBAR;
        if m > 0.0 {
            m
        } else {
            1.0
        }
    }

    fn scaled(&self) -> Scaled {
        let w = self.frequency_scale();
        Scaled {
            omega: w,
            w1: self.m1 / (HBAR * w),
            w2: self.m2 / (HBAR * w),
            delta: self.delta / w,
            gamma: self.decay().gamma_diag.map(|g| g / w),
        }
    }
}

/// Population decay rates per basis state: (gamma2, gamma1, gamma1, 0).
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DecayMatrix {
    pub gamma_diag: [f64; 4],
}

impl From<&AtomParams> for DecayMatrix {
    fn from(p: &AtomParams) -> Self {
        DecayMatrix {
            gamma_diag: [p.gamma2, p.gamma1, p.gamma1, 0.0],
        }
    }
}

impl DecayMatrix {
    pub fn matrix(&self) -> Matrix4<Complex64> {
        Matrix4::from_diagonal(&self.gamma_diag.map(|g| Complex64::new(g, 0.0)).into())
    }
}

/// Amplitudes over the four basis states.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct AmplitudeVector4(pub [Complex64; 4]);

impl AmplitudeVector4 {
    /// Unit amplitude in basis state `index` (zero-based).
    pub fn basis(index: usize) -> Self {
        let mut a = [Complex64::new(0.0, 0.0); 4];
        a[index] = Complex64::new(1.0, 0.0);
        AmplitudeVector4(a)
    }

    /// Both photons present, atom in the ground state.
    pub fn ground() -> Self {
        Self::basis(3)
    }

    pub fn norm_sqr(&self) -> f64 {
        self.0.iter().map(|a| a.norm_sqr()).sum()
    }

    pub fn outer(&self) -> DensityMatrix4 {
        DensityMatrix4(Matrix4::from_fn(|i, j| self.0[i] * self.0[j].conj()))
    }
}

/// 4x4 density matrix over the same basis.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DensityMatrix4(pub Matrix4<Complex64>);

impl DensityMatrix4 {
    pub fn pure(alpha: &AmplitudeVector4) -> Self {
        alpha.outer()
    }

    pub fn population(&self, index: usize) -> f64 {
        self.0[(index, index)].re
    }

    pub fn trace(&self) -> f64 {
        self.0.trace().re
    }

    /// Largest |rho_ij - conj(rho_ji)|.
    pub fn hermiticity_error(&self) -> f64 {
        (self.0 - self.0.adjoint())
            .iter()
            .map(|z| z.norm())
            .fold(0.0, f64::max)
    }

    /// Smallest eigenvalue of the Hermitian part.
    pub fn min_eigenvalue(&self) -> f64 {
        let h = (self.0 + self.0.adjoint()) * Complex64::new(0.5, 0.0);
        h.symmetric_eigenvalues()
            .iter()
            .copied()
            .fold(f64::INFINITY, f64::min)
    }

    pub fn max_abs_diff(&self, other: &DensityMatrix4) -> f64 {
        (self.0 - other.0).iter().map(|z| z.norm()).fold(0.0, f64::max)
    }

    fn to_state(self) -> [Complex64; 16] {
        let mut s = [Complex64::new(0.0, 0.0); 16];
        s.copy_from_slice(self.0.as_slice());
        s
    }

    fn from_state(s: &[Complex64; 16]) -> Self {
        DensityMatrix4(Matrix4::from_column_slice(s))
    }
}

/// Dimensionless couplings in units of the frequency scale.
#[derive(Debug, Clone, Copy)]
struct Scaled {
    omega: f64,
    w1: f64,
    w2: f64,
    delta: f64,
    gamma: [f64; 4],
}

impl Scaled {
    /// Interaction matrix divided by hbar * omega at scaled time `tau`.
    fn hamiltonian(&self, tau: f64) -> Matrix4<Complex64> {
        let up = Complex64::from_polar(1.0, self.delta * tau);
        let down = up.conj();
        interaction_entries(Complex64::from(self.w1), Complex64::from(self.w2), up, down)
    }

    fn seconds(&self, err: Error) -> Error {
        match err {
            Error::StepSizeCollapse { time, step } => Error::StepSizeCollapse {
                time: time / self.omega,
                step: step / self.omega,
            },
            other => other,
        }
    }

    fn times(&self, t_grid: &[f64]) -> Result<Vec<f64>> {
        let mut last = 0.0;
        for &t in t_grid {
            if !(t >= last && t.is_finite()) {
                return Err(Error::domain("time", t, "finite, >= 0 and non-decreasing"));
            }
            last = t;
        }
        Ok(t_grid.iter().map(|t| t * self.omega).collect())
    }
}

fn interaction_entries(m1: Complex64, m2: Complex64, up: Complex64, down: Complex64) -> Matrix4<Complex64> {
    let z = Complex64::new(0.0, 0.0);
    #[rustfmt::skip]
    let h = Matrix4::new(
        z,              m2.conj() * up,   m2 * up,          z,
        m2 * down,      z,                z,                m1 * down,
        m2.conj() * down, z,              z,                m1.conj() * down,
        z,              m1.conj() * up,   m1 * up,          z,
    );
    h
}

/// The interaction matrix at time `t` (J), with real couplings m1, m2.
pub fn interaction_matrix(p: &AtomParams, t: f64) -> Matrix4<Complex64> {
    let up = Complex64::from_polar(1.0, p.delta * t);
    interaction_entries(Complex64::from(p.m1), Complex64::from(p.m2), up, up.conj())
}

/// Integrator settings used by [`evolve_density`]. A pure state has three
/// zero eigenvalues, and the accumulated error lands directly on them; one
/// decade below the amplitude tolerance keeps them above -1e-10.
pub fn density_options() -> OdeOptions {
    OdeOptions {
        rel_tol: 1e-11,
        abs_tol: 1e-15,
        ..OdeOptions::default()
    }
}

/// Density matrix at each time of `t_grid` (seconds, from t = 0).
pub fn evolve_density(rho0: &DensityMatrix4, p: &AtomParams, t_grid: &[f64]) -> Result<Vec<DensityMatrix4>> {
    evolve_density_with(rho0, p, t_grid, &density_options())
}

/// [`evolve_density`] with explicit integrator settings; tolerances apply to
/// the dimensionless state.
pub fn evolve_density_with(
    rho0: &DensityMatrix4,
    p: &AtomParams,
    t_grid: &[f64],
    opts: &OdeOptions,
) -> Result<Vec<DensityMatrix4>> {
    if rho0.hermiticity_error() > 1e-12 {
        return Err(Error::domain(
            "initial density matrix hermiticity error",
            rho0.hermiticity_error(),
            "<= 1e-12",
        ));
    }
    let tr = rho0.trace();
    if !(tr > 0.0 && tr <= 1.0 + 1e-12) {
        return Err(Error::domain("initial density matrix trace", tr, "(0, 1]"));
    }
    if rho0.min_eigenvalue() < -1e-10 {
        return Err(Error::domain(
            "initial density matrix eigenvalue",
            rho0.min_eigenvalue(),
            ">= -1e-10",
        ));
    }
    let s = p.scaled();
    let taus = s.times(t_grid)?;
    let g = Matrix4::from_diagonal(&s.gamma.map(|g| Complex64::new(0.5 * g, 0.0)).into());
    let minus_i = Complex64::new(0.0, -1.0);
    let rhs = |tau: f64, y: &[Complex64; 16]| {
        let rho = Matrix4::from_column_slice(y);
        let h = s.hamiltonian(tau);
        let d = (h * rho - rho * h) * minus_i - (g * rho + rho * g);
        let mut out = [Complex64::new(0.0, 0.0); 16];
        out.copy_from_slice(d.as_slice());
        out
    };
    let states = ode::integrate(rhs, 0.0, rho0.to_state(), &taus, opts).map_err(|e| s.seconds(e))?;
    Ok(states.iter().map(DensityMatrix4::from_state).collect())
}

/// Amplitudes at each time of `t_grid` (seconds, from t = 0).
pub fn evolve_amplitudes(
    alpha0: &AmplitudeVector4,
    p: &AtomParams,
    t_grid: &[f64],
) -> Result<Vec<AmplitudeVector4>> {
    evolve_amplitudes_with(alpha0, p, t_grid, &OdeOptions::default())
}

/// [`evolve_amplitudes`] with explicit integrator settings.
pub fn evolve_amplitudes_with(
    alpha0: &AmplitudeVector4,
    p: &AtomParams,
    t_grid: &[f64],
    opts: &OdeOptions,
) -> Result<Vec<AmplitudeVector4>> {
    let s = p.scaled();
    let taus = s.times(t_grid)?;
    let rhs = |tau: f64, a: &[Complex64; 4]| {
        let h = s.hamiltonian(tau);
        let mut out = [Complex64::new(0.0, 0.0); 4];
        for i in 0..4 {
            let mut acc = Complex64::new(0.0, 0.0);
            for j in 0..4 {
                acc += h[(i, j)] * a[j];
            }
            out[i] = Complex64::new(acc.im, -acc.re) - 0.5 * s.gamma[i] * a[i];
        }
        out
    };
    let states = ode::integrate(rhs, 0.0, alpha0.0, &taus, opts).map_err(|e| s.seconds(e))?;
    Ok(states.into_iter().map(AmplitudeVector4).collect())
}

/// Largest entry-wise gap between the evolved density matrix and the outer
/// product of the evolved amplitudes, both at [`density_options`], over
/// `n_checkpoints` equally spaced times in (0, t_max].
pub fn verify_factorization(
    p: &AtomParams,
    alpha0: &AmplitudeVector4,
    t_max: f64,
    n_checkpoints: usize,
) -> Result<f64> {
    if !(t_max > 0.0 && t_max.is_finite()) {
        return Err(Error::domain("t_max", t_max, "finite and > 0"));
    }
    if n_checkpoints == 0 {
        return Err(Error::domain("checkpoint count", 0.0, ">= 1"));
    }
    let grid: Vec<f64> = (1..=n_checkpoints)
        .map(|i| t_max * i as f64 / n_checkpoints as f64)
        .collect();
    let opts = density_options();
    let rho = evolve_density_with(&alpha0.outer(), p, &grid, &opts)?;
    let alpha = evolve_amplitudes_with(alpha0, p, &grid, &opts)?;
    Ok(rho
        .iter()
        .zip(&alpha)
        .map(|(r, a)| r.max_abs_diff(&a.outer()))
        .fold(0.0, f64::max))
}

/// Upper-state probability |alpha_1|^2 of the weak-coupling system, at
/// each time of `t_grid`.
pub fn perturbative_p2_profile(p: &AtomParams, t_grid: &[f64]) -> Result<Vec<f64>> {
    let s = p.scaled();
    let taus = s.times(t_grid)?;
    let (g1, g2) = (s.gamma[1], s.gamma[0]);
    let rhs = |tau: f64, a: &[Complex64; 3]| {
        let up = Complex64::from_polar(1.0, s.delta * tau);
        let down = up.conj();
        let drive1 = s.w2 * up * (a[1] + a[2]);
        let drive2 = s.w1 * down;
        let mi = Complex64::new(0.0, -1.0);
        [
            -0.5 * g2 * a[0] + mi * drive1,
            -0.5 * g1 * a[1] + mi * drive2,
            -0.5 * g1 * a[2] + mi * drive2,
        ]
    };
    let zero = Complex64::new(0.0, 0.0);
    let states =
        ode::integrate(rhs, 0.0, [zero; 3], &taus, &OdeOptions::default()).map_err(|e| s.seconds(e))?;
    Ok(states.iter().map(|a| a[0].norm_sqr()).collect())
}

/// [`perturbative_p2_profile`] at a single time.
pub fn perturbative_p2(p: &AtomParams, t: f64) -> Result<f64> {
    Ok(perturbative_p2_profile(p, &[t])?[0])
}

/// Closed-form weak-coupling upper-state probability (one quarter of the
/// [`perturbative_p2_profile`] value at every time) for
/// a local field with |E|^4 = `field4`.
pub fn analytic_p2(p: &AtomParams, field4: f64, t: f64) -> Result<f64> {
    let (g1, g2, d) = (p.gamma1, p.gamma2, p.delta);
    let degenerate = (g2 - g1).powi(2) + 4.0 * d * d;
    if degenerate.abs() < 1e-6 * g2 * g2 {
        return Err(Error::DegenerateDenominator { value: degenerate });
    }
    let e1 = (-0.5 * g1 * t).exp();
    let e2 = (-0.5 * g2 * t).exp();
    let (sin, cos) = (d * t).sin_cos();
    let first = -2.0 * d * (1.0 - e2) + sin * e1 * g2;
    let second = (g1 - g2) - e2 * g1 + cos * e1 * g2;
    let numerator = 16.0 * p.d1.powi(2) * p.d2.powi(2) * field4 * (first * first + second * second);
    Ok(numerator / (HBAR.powi(4) * (4.0 * d * d + g1 * g1) * g2 * g2 * degenerate))
}

/// Steady-state local two-photon rate (1/s) for |E|^4 = `field4`.
pub fn local_steady_rate(p: &AtomParams, field4: f64) -> f64 {
    steady_rate_prefactor(p) * field4
}

/// Rate per unit |E|^4: 64 d1^2 d2^2 / (hbar^4 (4 delta^2 + gamma1^2) gamma2).
pub fn steady_rate_prefactor(p: &AtomParams) -> f64 {
    64.0 * p.d1.powi(2) * p.d2.powi(2)
        / (HBAR.powi(4) * (4.0 * p.delta * p.delta + p.gamma1 * p.gamma1) * p.gamma2)
}
