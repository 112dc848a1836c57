// SPDX-License-Identifier: Apache-2.0

//! Physical constants (CODATA 2018) and the handful of unit conversions used
//! throughout the crate. Everything is SI.

use std::f64::consts::PI;

use crate::error::{Error, Result};

/// Speed of light in vacuum (m/s), exact.
pub const SPEED_OF_LIGHT: f64 = 299_792_458.0;
/// Reduced Planck constant (J s), exact.
pub const HBAR: f64 = 1.054_571_817e-34;
/// Elementary charge (C), exact.
pub const ELEMENTARY_CHARGE: f64 = 1.602_176_634e-19;
/// Vacuum permittivity (F/m).
pub const VACUUM_PERMITTIVITY: f64 = 8.854_187_812_8e-12;

/// Rb 5S1/2 -> 5P3/2 (D2) vacuum wavelength.
pub const RB_D2_WAVELENGTH: f64 = 780.24e-9;

/// Bundle of the constants entering the rate formulas.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PhysicalConstants {
    pub c: f64,
    pub hbar: f64,
    pub e_charge: f64,
    pub eps0: f64,
}

impl PhysicalConstants {
    pub const CODATA_2018: PhysicalConstants = PhysicalConstants {
        c: SPEED_OF_LIGHT,
        hbar: HBAR,
        e_charge: ELEMENTARY_CHARGE,
        eps0: VACUUM_PERMITTIVITY,
    };
}

impl Default for PhysicalConstants {
    fn default() -> Self {
        Self::CODATA_2018
    }
}

/// Propagation direction of a beam along the fiber axis.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Direction {
    Forward,
    Backward,
}

/// A monochromatic beam launched into one end of the fiber.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BeamSpec {
    pub wavelength: f64,
    pub power: f64,
    pub direction: Direction,
}

impl BeamSpec {
    pub const MIN_WAVELENGTH: f64 = 400e-9;
    pub const MAX_WAVELENGTH: f64 = 1600e-9;

    pub fn new(wavelength: f64, power: f64, direction: Direction) -> Result<Self> {
        if !(Self::MIN_WAVELENGTH..=Self::MAX_WAVELENGTH).contains(&wavelength) {
            return Err(Error::domain("beam wavelength", wavelength, "[400 nm, 1600 nm]"));
        }
        if !(power >= 0.0 && power.is_finite()) {
            return Err(Error::domain("beam power", power, "finite and >= 0"));
        }
        Ok(BeamSpec {
            wavelength,
            power,
            direction,
        })
    }

    pub fn omega(&self) -> f64 {
        2.0 * PI * SPEED_OF_LIGHT / self.wavelength
    }

    pub fn photon_energy(&self) -> f64 {
        HBAR * self.omega()
    }
}

/// Angular frequency 2 pi c / lambda.
pub fn wavelength_to_omega(lambda: f64) -> Result<f64> {
    if !(lambda > 0.0 && lambda.is_finite()) {
        return Err(Error::domain("wavelength", lambda, "> 0"));
    }
    Ok(2.0 * PI * SPEED_OF_LIGHT / lambda)
}

/// Inverse of [`wavelength_to_omega`].
pub fn omega_to_wavelength(omega: f64) -> Result<f64> {
    if !(omega > 0.0 && omega.is_finite()) {
        return Err(Error::domain("angular frequency", omega, "> 0"));
    }
    Ok(2.0 * PI * SPEED_OF_LIGHT / omega)
}

/// Converts a small wavelength offset around `lambda0` to an angular-frequency
/// offset, 2 pi c dlambda / lambda0^2.
pub fn detuning_wavelength_to_angular(delta_lambda: f64, lambda0: f64) -> Result<f64> {
    if !(lambda0 > 0.0 && lambda0.is_finite()) {
        return Err(Error::domain("reference wavelength", lambda0, "> 0"));
    }
    Ok(2.0 * PI * SPEED_OF_LIGHT * delta_lambda / (lambda0 * lambda0))
}

/// Transition dipole moment d = e r for an effective displacement `r`.
pub fn dipole_from_radius(r: f64) -> Result<f64> {
    if !(r > 0.0 && r.is_finite()) {
        return Err(Error::domain("dipole radius", r, "> 0"));
    }
    Ok(ELEMENTARY_CHARGE * r)
}
