// SPDX-License-Identifier: Apache-2.0

//! Electric field of the HE11 mode (one linear polarisation), its energy
//! normalisation, and the mapping from beam power to local field strength.
//!
//! Unit-amplitude convention: E_z = J1(h r) cos(phi) in the core. Inside,
//! with h = U/a,
//!
//! ```text
//! E_r   = -i (beta/2h) [(1-s) J0(hr) - (1+s) J2(hr)] cos(phi)
//! E_phi = +i (beta/2h) [(1-s) J0(hr) + (1+s) J2(hr)] sin(phi)
//! ```
//!
//! and outside, with q = W/a and the matching factor J1(U)/K1(W),
//!
//! ```text
//! E_z   = [J1(U)/K1(W)] K1(q r) cos(phi)
//! E_r   = -i (beta/2q) [J1(U)/K1(W)] [(1-s) K0(qr) + (1+s) K2(qr)] cos(phi)
//! E_phi = +i (beta/2q) [J1(U)/K1(W)] [(1-s) K0(qr) - (1+s) K2(qr)] sin(phi)
//! ```
//!
//! E_z and E_phi are continuous at r = a for any beta (the latter through the
//! definition of s); n1^2 E_r(a-) = n2^2 E_r(a+) holds only at a root of the
//! eigenvalue equation.

use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::mode_solver::ModeSolution;
use crate::quad::{integrate_panels, integrate_tail, GaussLegendre, QuadratureConfig};
use crate::specfun::{j012, k012};
use crate::units::{HBAR, SPEED_OF_LIGHT, VACUUM_PERMITTIVITY};

/// Complex cylindrical field components at one point.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FieldVector {
    pub e_r: Complex64,
    pub e_phi: Complex64,
    pub e_z: Complex64,
    pub magnitude_sq: f64,
}

impl FieldVector {
    fn new(e_r: Complex64, e_phi: Complex64, e_z: Complex64) -> Self {
        FieldVector {
            e_r,
            e_phi,
            e_z,
            magnitude_sq: e_r.norm_sqr() + e_phi.norm_sqr() + e_z.norm_sqr(),
        }
    }
}

/// Real radial amplitudes: E_r = -i radial cos, E_phi = +i azimuthal sin,
/// E_z = axial cos.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RadialParts {
    pub radial: f64,
    pub azimuthal: f64,
    pub axial: f64,
}

impl RadialParts {
    /// |e|^2 at azimuth phi.
    pub fn intensity(&self, phi: f64) -> f64 {
        let (s, c) = phi.sin_cos();
        (self.axial * self.axial + self.radial * self.radial) * c * c
            + self.azimuthal * self.azimuthal * s * s
    }
}

/// Radial amplitudes of the unit-amplitude field. `r == a` takes the
/// exterior branch.
pub fn radial_parts(mode: &ModeSolution, r: f64) -> RadialParts {
    let a = mode.radius;
    let s = mode.s;
    if r < a {
        let h = mode.u / a;
        let [j0, j1, j2] = j012(h * r);
        let pre = mode.beta / (2.0 * h);
        RadialParts {
            radial: pre * ((1.0 - s) * j0 - (1.0 + s) * j2),
            azimuthal: pre * ((1.0 - s) * j0 + (1.0 + s) * j2),
            axial: j1,
        }
    } else {
        let q = mode.w / a;
        let matching = j012(mode.u)[1] / k012(mode.w)[1];
        let [k0, k1, k2] = k012(q * r);
        let pre = mode.beta / (2.0 * q) * matching;
        RadialParts {
            radial: pre * ((1.0 - s) * k0 + (1.0 + s) * k2),
            azimuthal: pre * ((1.0 - s) * k0 - (1.0 + s) * k2),
            axial: matching * k1,
        }
    }
}

/// Unit-amplitude HE11 field at (r, phi).
pub fn field_at(mode: &ModeSolution, r: f64, phi: f64) -> FieldVector {
    let p = radial_parts(mode, r);
    let (sin, cos) = phi.sin_cos();
    FieldVector::new(
        Complex64::new(0.0, -p.radial * cos),
        Complex64::new(0.0, p.azimuthal * sin),
        Complex64::new(p.axial * cos, 0.0),
    )
}

/// Fields just inside and just outside the core boundary, used for the
/// interface conditions.
pub fn boundary_parts(mode: &ModeSolution) -> (RadialParts, RadialParts) {
    let a = mode.radius;
    let inside = radial_parts(mode, a * (1.0 - f64::EPSILON));
    let outside = radial_parts(mode, a);
    (inside, outside)
}

/// Relative mismatches of the three interface conditions at r = a:
/// [E_z jump, E_phi jump, n1^2 E_r(a-) - n2^2 E_r(a+)].
pub fn interface_mismatch(mode: &ModeSolution) -> [f64; 3] {
    let (inner, outer) = boundary_parts(mode);
    let rel = |x: f64, y: f64| (x - y).abs() / x.abs().max(y.abs());
    let n1 = mode.n_core().powi(2);
    let n2 = mode.n_clad().powi(2);
    [
        rel(inner.axial, outer.axial),
        rel(inner.azimuthal, outer.azimuthal),
        rel(n1 * inner.radial, n2 * outer.radial),
    ]
}

/// Cross-section integral of eps |e|^2 split at the core boundary.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct NormIntegral {
    pub core: f64,
    pub exterior: f64,
    /// Radius at which the exterior integration was truncated.
    pub r_max: f64,
}

impl NormIntegral {
    pub fn total(&self) -> f64 {
        self.core + self.exterior
    }

    pub fn evanescent_fraction(&self) -> f64 {
        self.exterior / self.total()
    }
}

/// Azimuthal trapezoid sum of |e(r, phi)|^2 at fixed r.
fn azimuthal_energy(parts: &RadialParts, phis: &[f64], h: f64) -> f64 {
    phis.iter().map(|&p| parts.intensity(p)).sum::<f64>() * h
}

/// Decay length of the exterior |e|^2, 1/(2q).
pub(crate) fn intensity_decay_length(mode: &ModeSolution) -> f64 {
    mode.radius / (2.0 * mode.w)
}

/// integral of eps(r) |e(r, phi)|^2 r dr dphi over the whole cross-section, per
/// unit length (J/m per unit amplitude squared).
pub fn norm_integral_with(mode: &ModeSolution, quad: &QuadratureConfig) -> Result<NormIntegral> {
    let rule = GaussLegendre::new(quad.nodes_per_panel);
    let (phis, h) = quad.azimuth_grid();
    let a = mode.radius;
    let eps_core = VACUUM_PERMITTIVITY * mode.n_core().powi(2);
    let eps_clad = VACUUM_PERMITTIVITY * mode.n_clad().powi(2);

    let mut inner = |r: f64| eps_core * azimuthal_energy(&radial_parts(mode, r), &phis, h) * r;
    let core = integrate_panels(&rule, 0.0, a, quad.core_panels, quad.rel_tol, &mut inner)?;

    let decay = intensity_decay_length(mode);
    let mut outer = |r: f64| eps_clad * azimuthal_energy(&radial_parts(mode, r), &phis, h) * r;
    let width = quad.tail_panel_width;
    let tail = integrate_tail(
        &rule,
        a,
        width * decay.min(a / quad.core_panels as f64),
        width * decay,
        quad.rel_tol,
        quad.tail_tol,
        &mut outer,
    )?;
    if !(core > 0.0 && tail.value > 0.0) {
        return Err(Error::Quadrature {
            lower: 0.0,
            upper: tail.r_max,
            detail: format!(
                "non-positive energy integral (core {core:e}, exterior {:e})",
                tail.value
            ),
        });
    }
    Ok(NormIntegral {
        core,
        exterior: tail.value,
        r_max: tail.r_max,
    })
}

pub fn norm_integral(mode: &ModeSolution) -> Result<NormIntegral> {
    norm_integral_with(mode, &QuadratureConfig::default())
}

/// Fraction of the cross-section field energy outside the fiber.
pub fn evanescent_fraction(mode: &ModeSolution) -> Result<f64> {
    Ok(norm_integral(mode)?.evanescent_fraction())
}

/// Which speed carries the beam's photons along the fiber when converting
/// power to photon line density.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum PowerMapping {
    /// Line density P / (hbar omega c).
    #[default]
    VacuumLight,
    /// Line density P / (hbar omega v_g), v_g of the guided mode.
    GroupVelocity,
}

impl PowerMapping {
    pub fn velocity(&self, mode: &ModeSolution) -> f64 {
        match self {
            PowerMapping::VacuumLight => SPEED_OF_LIGHT,
            PowerMapping::GroupVelocity => mode.group_velocity,
        }
    }
}

/// A solved mode together with its energy integrals.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct NormalizedMode {
    pub mode: ModeSolution,
    /// Overall field constant; 1 until one of the `with_*` scalings is
    /// applied.
    pub amplitude_scale: f64,
    pub norm: NormIntegral,
    pub evanescent_fraction: f64,
}

impl NormalizedMode {
    pub fn new(mode: ModeSolution, quad: &QuadratureConfig) -> Result<Self> {
        let norm = norm_integral_with(&mode, quad)?;
        Ok(NormalizedMode {
            mode,
            amplitude_scale: 1.0,
            norm,
            evanescent_fraction: norm.evanescent_fraction(),
        })
    }

    pub fn norm_integral(&self) -> f64 {
        self.norm.total()
    }

    /// Scaled to one photon in a quantisation length `l_q`.
    pub fn with_single_photon(mut self, l_q: f64) -> Result<Self> {
        self.amplitude_scale = single_photon_amplitude(&self, l_q)?;
        Ok(self)
    }

    /// Scaled to the classical field of a beam of the given power.
    pub fn with_power(mut self, power: f64, mapping: PowerMapping) -> Result<Self> {
        self.amplitude_scale = classical_amplitude_sq(&self, power, mapping)?.sqrt();
        Ok(self)
    }

    /// |E(r, phi)|^2 including the amplitude scale.
    pub fn intensity(&self, r: f64, phi: f64) -> f64 {
        self.amplitude_scale.powi(2) * radial_parts(&self.mode, r).intensity(phi)
    }
}

/// N = sqrt(hbar omega / (L_Q * integral eps |e|^2 dA)): the amplitude that
/// puts one photon's energy in a fiber section of length `l_q`.
pub fn single_photon_amplitude(mode: &NormalizedMode, l_q: f64) -> Result<f64> {
    if !(l_q > 0.0 && l_q.is_finite()) {
        return Err(Error::domain("quantization length", l_q, "> 0"));
    }
    Ok((HBAR * mode.mode.omega() / (l_q * mode.norm_integral())).sqrt())
}

/// Multiplier on |e(r)|^2 giving the classical |E(r)|^2 of a beam of power
/// `power`: P / (v * integral eps |e|^2 dA).
pub fn classical_amplitude_sq(mode: &NormalizedMode, power: f64, mapping: PowerMapping) -> Result<f64> {
    if !(power >= 0.0 && power.is_finite()) {
        return Err(Error::domain("beam power", power, ">= 0"));
    }
    Ok(power / (mapping.velocity(&mode.mode) * mode.norm_integral()))
}

/// Same multiplier assembled from the single-photon amplitude and the number
/// of photons the beam keeps in a length `l_q`; `l_q` cancels.
pub fn classical_amplitude_sq_via_photons(
    mode: &NormalizedMode,
    power: f64,
    mapping: PowerMapping,
    l_q: f64,
) -> Result<f64> {
    if !(power >= 0.0 && power.is_finite()) {
        return Err(Error::domain("beam power", power, ">= 0"));
    }
    let n_beta = single_photon_amplitude(mode, l_q)?;
    let photons = power * l_q / (HBAR * mode.mode.omega() * mapping.velocity(&mode.mode));
    Ok(n_beta * n_beta * photons)
}
