// SPDX-License-Identifier: Apache-2.0

//! Total two-photon absorption rate of vapor around the taper, fractional
//! absorption, and the diameter and detuning sweeps.

use std::f64::consts::PI;

use rayon::prelude::*;

use crate::atom::{steady_rate_prefactor, AtomParams};
use crate::error::{Error, Result};
use crate::mode_field::{
    classical_amplitude_sq, classical_amplitude_sq_via_photons, radial_parts, NormalizedMode, PowerMapping,
};
use crate::mode_solver::{solve_he11, WaveguideGeometry};
use crate::quad::{integrate_tail, GaussLegendre, QuadratureConfig};
use crate::units::{
    dipole_from_radius, omega_to_wavelength, wavelength_to_omega, BeamSpec, Direction, HBAR, RB_D2_WAVELENGTH,
};

/// Degenerate two-photon wavelength of the Rb 5S - 5D5/2 transition.
pub const TWO_PHOTON_WAVELENGTH: f64 = 778.1e-9;

/// Fractional absorption above which the weak-excitation result is flagged.
pub const SATURATION_THRESHOLD: f64 = 0.2;

/// Optional angular factor applied to the rate.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum OrientationAveraging {
    /// Rate used as is.
    #[default]
    None,
    /// Isotropic dipoles: <cos^2> = 1/3 per transition.
    Isotropic,
}

impl OrientationAveraging {
    pub fn factor(&self) -> f64 {
        match self {
            OrientationAveraging::None => 1.0,
            OrientationAveraging::Isotropic => 1.0 / 9.0,
        }
    }
}

/// A complete experiment: taper, vapor, beams and atom.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TpaScenario {
    /// Taper diameter (m).
    pub diameter: f64,
    /// Index of the surrounding medium.
    pub n_clad: f64,
    /// Taper length (m).
    pub taper_length: f64,
    /// Atom number density (1/m^3).
    pub density: f64,
    pub beam_a: BeamSpec,
    pub beam_b: BeamSpec,
    /// Atomic constants; couplings are filled in locally, so m1, m2 are
    /// ignored here.
    pub atom: AtomParams,
    pub orientation: OrientationAveraging,
    pub power_mapping: PowerMapping,
    pub quadrature: QuadratureConfig,
    /// Periodic-boundary length used for the single-photon normalization.
    pub quantization_length: f64,
}

impl TpaScenario {
    /// 350 nm x 5 mm taper in 1e12 cm^-3 Rb vapor, two counter-propagating
    /// 1 mW beams at 778.1 nm, Delta = 6.54e12 rad/s.
    pub fn nominal() -> Self {
        let atom = AtomParams::new(
            dipole_from_radius(0.223e-9).expect("positive radius"),
            dipole_from_radius(0.0492e-9).expect("positive radius"),
            1e9,
            1e9,
            6.54e12,
        )
        .expect("valid atomic constants");
        TpaScenario {
            diameter: 350e-9,
            n_clad: 1.0,
            taper_length: 5e-3,
            density: 1e18,
            beam_a: BeamSpec::new(TWO_PHOTON_WAVELENGTH, 1e-3, Direction::Forward).expect("valid beam"),
            beam_b: BeamSpec::new(TWO_PHOTON_WAVELENGTH, 1e-3, Direction::Backward).expect("valid beam"),
            atom,
            orientation: OrientationAveraging::None,
            power_mapping: PowerMapping::default(),
            quadrature: QuadratureConfig::default(),
            quantization_length: 1.0,
        }
    }

    pub fn validate(&self) -> Result<()> {
        let positive = [
            ("taper diameter", self.diameter),
            ("taper length", self.taper_length),
            ("quantization length", self.quantization_length),
        ];
        for (name, v) in positive {
            if !(v > 0.0 && v.is_finite()) {
                return Err(Error::domain(name, v, "finite and > 0"));
            }
        }
        if !(self.density >= 0.0 && self.density.is_finite()) {
            return Err(Error::domain("atom density", self.density, "finite and >= 0"));
        }
        for beam in [&self.beam_a, &self.beam_b] {
            BeamSpec::new(beam.wavelength, beam.power, beam.direction)?;
        }
        Ok(())
    }

    pub fn with_diameter(&self, diameter: f64) -> Self {
        TpaScenario { diameter, ..*self }
    }

    pub fn with_powers(&self, power_a: f64, power_b: f64) -> Self {
        let mut s = *self;
        s.beam_a.power = power_a;
        s.beam_b.power = power_b;
        s
    }

    pub fn with_detuning(&self, delta: f64) -> Self {
        let mut s = *self;
        s.atom.delta = delta;
        s
    }

    /// Beam a detuned by `delta` above the D2 line, beam b completing the
    /// two-photon resonance, and the atom detuning set to `delta`.
    pub fn two_color(&self, delta: f64) -> Result<Self> {
        let (la, lb) = two_color_wavelengths(delta)?;
        let mut s = self.with_detuning(delta);
        s.beam_a = BeamSpec::new(la, s.beam_a.power, s.beam_a.direction)?;
        s.beam_b = BeamSpec::new(lb, s.beam_b.power, s.beam_b.direction)?;
        Ok(s)
    }

    pub fn is_degenerate(&self) -> bool {
        self.beam_a.wavelength == self.beam_b.wavelength
    }

    pub fn geometry(&self, wavelength: f64) -> Result<WaveguideGeometry> {
        WaveguideGeometry::silica_with_cladding(self.diameter, wavelength, self.n_clad)
    }

    fn context(&self) -> String {
        format!(
            "D = {:.3} nm, lambda_a = {:.4} nm, lambda_b = {:.4} nm",
            self.diameter * 1e9,
            self.beam_a.wavelength * 1e9,
            self.beam_b.wavelength * 1e9
        )
    }
}

/// (lambda_a, lambda_b): D2 line blue-shifted by `delta` (rad/s), and the
/// partner with omega_a + omega_b = 2 omega(778.1 nm).
pub fn two_color_wavelengths(delta: f64) -> Result<(f64, f64)> {
    let omega_a = wavelength_to_omega(RB_D2_WAVELENGTH)? + delta;
    let omega_b = 2.0 * wavelength_to_omega(TWO_PHOTON_WAVELENGTH)? - omega_a;
    Ok((omega_to_wavelength(omega_a)?, omega_to_wavelength(omega_b)?))
}

/// Per-beam mode data reported with a result.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ModeSummary {
    pub wavelength: f64,
    pub power: f64,
    pub n_eff: f64,
    pub u: f64,
    pub w: f64,
    pub v: f64,
    pub group_velocity: f64,
    pub evanescent_fraction: f64,
    pub single_mode: bool,
    /// Classical |E|^2 just outside the surface at phi = 0 (V^2/m^2).
    pub surface_intensity: f64,
}

impl ModeSummary {
    fn of(beam: &BeamSpec, mode: &NormalizedMode) -> Self {
        let m = &mode.mode;
        ModeSummary {
            wavelength: beam.wavelength,
            power: beam.power,
            n_eff: m.n_eff,
            u: m.u,
            w: m.w,
            v: m.v,
            group_velocity: m.group_velocity,
            evanescent_fraction: mode.evanescent_fraction,
            single_mode: m.single_mode,
            surface_intensity: mode.intensity(m.radius, 0.0),
        }
    }
}

/// Outcome of [`total_rate`].
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TpaResult {
    /// Total two-photon absorption rate (1/s).
    pub r2_total: f64,
    pub absorption_fraction: f64,
    /// L times the exterior integral of |E_a|^2 |E_b|^2 (V^4 m^-1).
    pub field4_integral: f64,
    /// Radius where the exterior integration was truncated (m).
    pub r_max: f64,
    pub beam_a: ModeSummary,
    pub beam_b: ModeSummary,
    /// Set when the absorption fraction exceeds [`SATURATION_THRESHOLD`].
    pub saturation_warning: bool,
}

/// Exterior |E_a|^2 |E_b|^2 integral.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Field4Integral {
    pub value: f64,
    pub r_max: f64,
}

/// L * integral over phi and r > `r_min` of |E_a|^2 |E_b|^2 r, with each
/// mode's own amplitude scale.
pub fn field4_integral_beyond(
    mode_a: &NormalizedMode,
    mode_b: &NormalizedMode,
    r_min: f64,
    length: f64,
    quad: &QuadratureConfig,
) -> Result<Field4Integral> {
    let a = mode_a.mode.radius;
    if (mode_b.mode.radius - a).abs() > 1e-12 * a {
        return Err(Error::domain(
            "second beam fiber radius",
            mode_b.mode.radius,
            "equal to the first beam's",
        ));
    }
    if r_min.is_nan() || r_min < a {
        return Err(Error::domain(
            "inner radius of the vapor region",
            r_min,
            ">= fiber radius",
        ));
    }
    let scale = (mode_a.amplitude_scale * mode_b.amplitude_scale).powi(2);
    if scale == 0.0 || length == 0.0 {
        return Ok(Field4Integral {
            value: 0.0,
            r_max: r_min,
        });
    }
    let rule = GaussLegendre::new(quad.nodes_per_panel);
    let (phis, h) = quad.azimuth_grid();
    let q = (mode_a.mode.w + mode_b.mode.w) / a;
    let decay = 1.0 / (2.0 * q);
    let width = quad.tail_panel_width * decay;
    let mut integrand = |r: f64| {
        let pa = radial_parts(&mode_a.mode, r);
        let pb = radial_parts(&mode_b.mode, r);
        phis.iter()
            .map(|&p| pa.intensity(p) * pb.intensity(p))
            .sum::<f64>()
            * h
            * r
    };
    let tail = integrate_tail(
        &rule,
        r_min,
        width,
        width,
        quad.rel_tol,
        quad.tail_tol,
        &mut integrand,
    )?;
    Ok(Field4Integral {
        value: length * scale * tail.value,
        r_max: tail.r_max,
    })
}

/// L * integral over the vapor (r > a) of |E_a,cl|^2 |E_b,cl|^2 for beams of
/// powers `power_a`, `power_b` in the two modes.
pub fn field4_exterior_integral(
    mode_a: &NormalizedMode,
    mode_b: &NormalizedMode,
    power_a: f64,
    power_b: f64,
    length: f64,
    mapping: PowerMapping,
    quad: &QuadratureConfig,
) -> Result<Field4Integral> {
    let mut a = *mode_a;
    let mut b = *mode_b;
    a.amplitude_scale = classical_amplitude_sq(mode_a, power_a, mapping)?.sqrt();
    b.amplitude_scale = classical_amplitude_sq(mode_b, power_b, mapping)?.sqrt();
    field4_integral_beyond(&a, &b, a.mode.radius, length, quad)
}

/// Solved and power-scaled mode of one beam on the scenario's taper.
pub fn beam_mode(s: &TpaScenario, beam: &BeamSpec) -> Result<NormalizedMode> {
    let mode = solve_he11(&s.geometry(beam.wavelength)?)?;
    let mut normalized = NormalizedMode::new(mode, &s.quadrature)?;
    let amp_sq =
        classical_amplitude_sq_via_photons(&normalized, beam.power, s.power_mapping, s.quantization_length)?;
    normalized.amplitude_scale = amp_sq.sqrt();
    Ok(normalized)
}

/// Modes for both beams; the degenerate case is solved once.
pub fn beam_modes(s: &TpaScenario) -> Result<(NormalizedMode, NormalizedMode)> {
    let a = beam_mode(s, &s.beam_a)?;
    let b = if s.is_degenerate() {
        let mut b = a;
        let amp_sq =
            classical_amplitude_sq_via_photons(&b, s.beam_b.power, s.power_mapping, s.quantization_length)?;
        b.amplitude_scale = amp_sq.sqrt();
        b
    } else {
        beam_mode(s, &s.beam_b)?
    };
    Ok((a, b))
}

/// Rate per unit of the |E|^4 integral times density, with the orientation
/// factor.
pub fn rate_coefficient(s: &TpaScenario) -> f64 {
    steady_rate_prefactor(&s.atom) * s.orientation.factor() * s.density
}

/// Total two-photon absorption rate and fractional absorption.
pub fn total_rate(s: &TpaScenario) -> Result<TpaResult> {
    evaluate(s).map_err(|e| e.with_context(s.context()))
}

fn evaluate(s: &TpaScenario) -> Result<TpaResult> {
    s.validate()?;
    let (a, b) = beam_modes(s)?;
    let f4 = field4_integral_beyond(&a, &b, a.mode.radius, s.taper_length, &s.quadrature)?;
    Ok(assemble(s, &a, &b, f4))
}

fn assemble(s: &TpaScenario, a: &NormalizedMode, b: &NormalizedMode, f4: Field4Integral) -> TpaResult {
    let r2 = rate_coefficient(s) * f4.value;
    let absorption = fractional_absorption(r2, s).expect("powers validated and rate finite");
    TpaResult {
        r2_total: r2,
        absorption_fraction: absorption,
        field4_integral: f4.value,
        r_max: f4.r_max,
        beam_a: ModeSummary::of(&s.beam_a, a),
        beam_b: ModeSummary::of(&s.beam_b, b),
        saturation_warning: absorption > SATURATION_THRESHOLD,
    }
}

/// Energy removed per unit time over incident power:
/// (hbar omega_a + hbar omega_b) R2 / (P_a + P_b).
pub fn fractional_absorption(r2: f64, s: &TpaScenario) -> Result<f64> {
    if !(r2 >= 0.0 && r2.is_finite()) {
        return Err(Error::domain("two-photon rate", r2, "finite and >= 0"));
    }
    let power = s.beam_a.power + s.beam_b.power;
    if r2 == 0.0 {
        return Ok(0.0);
    }
    if power <= 0.0 {
        return Err(Error::domain(
            "total beam power",
            power,
            "> 0 when the rate is non-zero",
        ));
    }
    Ok(HBAR * (s.beam_a.omega() + s.beam_b.omega()) * r2 / power)
}

/// One diameter of a sweep.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DiameterRow {
    pub diameter: f64,
    pub r2: f64,
    pub absorption_fraction: f64,
    pub evanescent_fraction: f64,
    pub n_eff: f64,
    pub single_mode: bool,
}

/// Location of the largest rate.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Argmax {
    pub diameter: f64,
    pub r2: f64,
    /// False when the grid maximum sits at an end of the range, in which
    /// case no refinement is done.
    pub interior: bool,
}

#[derive(Debug, Clone, PartialEq)]
pub struct DiameterSweep {
    pub rows: Vec<DiameterRow>,
    /// Diameters without a guided mode, with the reason.
    pub gaps: Vec<(f64, String)>,
    pub argmax: Option<Argmax>,
}

/// Argmax refinement half-width (m).
pub const ARGMAX_TOLERANCE: f64 = 0.5e-9;

/// Evenly spaced grid from `d_min` to `d_max` inclusive.
pub fn diameter_grid(d_min: f64, d_max: f64, step: f64) -> Result<Vec<f64>> {
    if !(d_min > 0.0 && d_min.is_finite()) {
        return Err(Error::domain("minimum diameter", d_min, "finite and > 0"));
    }
    if !(d_max > d_min && d_max.is_finite()) {
        return Err(Error::domain("maximum diameter", d_max, "> minimum diameter"));
    }
    if !(step > 0.0 && step.is_finite()) {
        return Err(Error::domain("diameter step", step, "> 0"));
    }
    let n = ((d_max - d_min) / step * (1.0 + 1e-12)).floor() as usize;
    Ok((0..=n).map(|i| d_min + i as f64 * step).collect())
}

fn diameter_row(s: &TpaScenario, d: f64) -> Result<DiameterRow> {
    let r = total_rate(&s.with_diameter(d))?;
    Ok(DiameterRow {
        diameter: d,
        r2: r.r2_total,
        absorption_fraction: r.absorption_fraction,
        evanescent_fraction: r.beam_a.evanescent_fraction,
        n_eff: r.beam_a.n_eff,
        single_mode: r.beam_a.single_mode && r.beam_b.single_mode,
    })
}

/// Rate over the given diameters, evaluated in parallel and assembled in
/// input order, without argmax refinement.
pub fn sweep_diameter_grid(s: &TpaScenario, diameters: &[f64]) -> Result<DiameterSweep> {
    let results: Vec<Result<DiameterRow>> = diameters.par_iter().map(|&d| diameter_row(s, d)).collect();
    let mut rows = Vec::with_capacity(results.len());
    let mut gaps = Vec::new();
    for (d, r) in diameters.iter().zip(results) {
        match r {
            Ok(row) => rows.push(row),
            Err(e) if matches!(e.root(), Error::NoGuidedRoot { .. }) => gaps.push((*d, e.to_string())),
            Err(e) => return Err(e),
        }
    }
    Ok(DiameterSweep {
        rows,
        gaps,
        argmax: None,
    })
}

/// Rate versus diameter on a uniform grid, with the maximum refined by
/// golden-section search to [`ARGMAX_TOLERANCE`].
pub fn sweep_diameter(s: &TpaScenario, d_min: f64, d_max: f64, step: f64) -> Result<DiameterSweep> {
    let grid = diameter_grid(d_min, d_max, step)?;
    let mut sweep = sweep_diameter_grid(s, &grid)?;
    sweep.argmax = refine_argmax(s, &sweep.rows)?;
    Ok(sweep)
}

fn refine_argmax(s: &TpaScenario, rows: &[DiameterRow]) -> Result<Option<Argmax>> {
    let Some(best) = (0..rows.len()).max_by(|&i, &j| rows[i].r2.total_cmp(&rows[j].r2)) else {
        return Ok(None);
    };
    if best == 0 || best + 1 == rows.len() {
        return Ok(Some(Argmax {
            diameter: rows[best].diameter,
            r2: rows[best].r2,
            interior: false,
        }));
    }
    let rate = |d: f64| total_rate(&s.with_diameter(d)).map(|r| r.r2_total);
    let (d, r2) = golden_section_max(
        rows[best - 1].diameter,
        rows[best + 1].diameter,
        ARGMAX_TOLERANCE,
        rate,
    )?;
    let (d, r2) = if r2 >= rows[best].r2 {
        (d, r2)
    } else {
        (rows[best].diameter, rows[best].r2)
    };
    Ok(Some(Argmax {
        diameter: d,
        r2,
        interior: true,
    }))
}

/// Maximum of a unimodal function on [lo, hi], located to within `tol`.
pub fn golden_section_max<F>(mut lo: f64, mut hi: f64, tol: f64, mut f: F) -> Result<(f64, f64)>
where
    F: FnMut(f64) -> Result<f64>,
{
    let inv_phi = 0.5 * (5f64.sqrt() - 1.0);
    let mut x1 = hi - inv_phi * (hi - lo);
    let mut x2 = lo + inv_phi * (hi - lo);
    let mut f1 = f(x1)?;
    let mut f2 = f(x2)?;
    while 0.5 * (hi - lo) > tol {
        if f1 < f2 {
            lo = x1;
            x1 = x2;
            f1 = f2;
            x2 = lo + inv_phi * (hi - lo);
            f2 = f(x2)?;
        } else {
            hi = x2;
            x2 = x1;
            f2 = f1;
            x1 = hi - inv_phi * (hi - lo);
            f1 = f(x1)?;
        }
    }
    Ok(if f1 >= f2 { (x1, f1) } else { (x2, f2) })
}

/// Spacing of a detuning grid.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Spacing {
    Linear,
    Log,
}

/// How the beams follow the detuning.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum DetuningMode {
    /// Beam wavelengths fixed; only the atom detuning changes.
    Fixed,
    /// Beam a tracks the detuning from the D2 line, beam b closes the
    /// two-photon resonance.
    TwoColor,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DetuningRow {
    /// Detuning (rad/s).
    pub delta: f64,
    pub r2: f64,
    pub absorption_fraction: f64,
    pub wavelength_a: f64,
    pub wavelength_b: f64,
    pub saturation_warning: bool,
}

pub fn detuning_grid(delta_min: f64, delta_max: f64, n_points: usize, spacing: Spacing) -> Result<Vec<f64>> {
    if !(delta_min > 0.0 && delta_min.is_finite()) {
        return Err(Error::domain("minimum detuning", delta_min, "finite and > 0"));
    }
    if !(delta_max > delta_min && delta_max.is_finite()) {
        return Err(Error::domain("maximum detuning", delta_max, "> minimum detuning"));
    }
    if n_points < 2 {
        return Err(Error::domain("detuning point count", n_points as f64, ">= 2"));
    }
    let last = (n_points - 1) as f64;
    Ok((0..n_points)
        .map(|i| {
            let t = i as f64 / last;
            match spacing {
                _ if i == 0 => delta_min,
                _ if i == n_points - 1 => delta_max,
                Spacing::Linear => delta_min + t * (delta_max - delta_min),
                Spacing::Log => delta_min * (delta_max / delta_min).powf(t),
            }
        })
        .collect())
}

/// Rate and fractional absorption versus detuning at fixed powers.
pub fn sweep_detuning(
    s: &TpaScenario,
    delta_min: f64,
    delta_max: f64,
    n_points: usize,
    spacing: Spacing,
    mode: DetuningMode,
) -> Result<Vec<DetuningRow>> {
    let grid = detuning_grid(delta_min, delta_max, n_points, spacing)?;
    match mode {
        DetuningMode::TwoColor => grid
            .par_iter()
            .map(|&delta| {
                let shifted = s.two_color(delta)?;
                let r = total_rate(&shifted)?;
                Ok(detuning_row(&shifted, delta, r.r2_total, r.absorption_fraction))
            })
            .collect(),
        DetuningMode::Fixed => {
            let base = total_rate(s)?;
            grid.iter()
                .map(|&delta| {
                    let shifted = s.with_detuning(delta);
                    let r2 = rate_coefficient(&shifted) * base.field4_integral;
                    let a = fractional_absorption(r2, &shifted)?;
                    Ok(detuning_row(&shifted, delta, r2, a))
                })
                .collect()
        }
    }
}

fn detuning_row(s: &TpaScenario, delta: f64, r2: f64, a: f64) -> DetuningRow {
    DetuningRow {
        delta,
        r2,
        absorption_fraction: a,
        wavelength_a: s.beam_a.wavelength,
        wavelength_b: s.beam_b.wavelength,
        saturation_warning: a > SATURATION_THRESHOLD,
    }
}

/// Detuning value in rad/s from a value given in Hz (`true`) or rad/s.
pub fn angular_detuning(value: f64, in_hz: bool) -> f64 {
    if in_hz {
        2.0 * PI * value
    } else {
        value
    }
}

#[cfg(test)]
mod tests {
    use approx::assert_relative_eq;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    use super::*;

    #[test]
    fn nominal_rate_is_near_the_reference() {
        let r = total_rate(&TpaScenario::nominal()).unwrap();
        assert!(r.r2_total > 0.38e14 && r.r2_total < 3.45e14, "{:e}", r.r2_total);
        assert_relative_eq!(r.r2_total, 1.174e14, max_relative = 0.01);
        assert!(!r.saturation_warning);
        assert_eq!(r.beam_a, r.beam_b);
        let omega = wavelength_to_omega(TWO_PHOTON_WAVELENGTH).unwrap();
        assert_relative_eq!(
            r.absorption_fraction,
            HBAR * omega * r.r2_total / 1e-3,
            max_relative = 1e-12
        );
    }

    #[test]
    fn group_velocity_mapping_is_available() {
        let s = TpaScenario {
            power_mapping: PowerMapping::GroupVelocity,
            ..TpaScenario::nominal()
        };
        let r = total_rate(&s).unwrap();
        assert_relative_eq!(r.r2_total, 2.07e14, max_relative = 0.01);
    }

    #[test]
    fn scaling_laws() {
        let s = TpaScenario::nominal();
        let base = total_rate(&s).unwrap().r2_total;
        let dense = total_rate(&TpaScenario {
            density: 2.0 * s.density,
            ..s
        })
        .unwrap()
        .r2_total;
        assert_relative_eq!(dense / base, 2.0, max_relative = 1e-12);
        let long = total_rate(&TpaScenario {
            taper_length: 3.0 * s.taper_length,
            ..s
        })
        .unwrap()
        .r2_total;
        assert_relative_eq!(long / base, 3.0, max_relative = 1e-12);
        let bright = total_rate(&s.with_powers(2e-3, 2e-3)).unwrap().r2_total;
        assert_relative_eq!(bright / base, 4.0, max_relative = 1e-12);
        let lq = total_rate(&TpaScenario {
            quantization_length: 2.0,
            ..s
        })
        .unwrap()
        .r2_total;
        assert_relative_eq!(lq, base, max_relative = 1e-10);
        let iso = total_rate(&TpaScenario {
            orientation: OrientationAveraging::Isotropic,
            ..s
        })
        .unwrap()
        .r2_total;
        assert_relative_eq!(iso * 9.0, base, max_relative = 1e-12);
    }

    #[test]
    fn zero_power_gives_zero() {
        let s = TpaScenario::nominal();
        let (a, b) = beam_modes(&s).unwrap();
        let q = &s.quadrature;
        let f = field4_exterior_integral(&a, &b, 0.0, 1e-3, 5e-3, s.power_mapping, q).unwrap();
        assert_eq!(f.value, 0.0);
        let f1 = field4_exterior_integral(&a, &b, 1e-3, 1e-3, 5e-3, s.power_mapping, q).unwrap();
        let f2 = field4_exterior_integral(&a, &b, 2e-3, 2e-3, 5e-3, s.power_mapping, q).unwrap();
        assert_relative_eq!(f2.value / f1.value, 4.0, max_relative = 1e-12);
        let r = total_rate(&s.with_powers(0.0, 0.0)).unwrap();
        assert_eq!((r.r2_total, r.absorption_fraction), (0.0, 0.0));
    }

    #[test]
    fn raising_the_inner_radius_lowers_the_integral() {
        let s = TpaScenario::nominal();
        let (a, b) = beam_modes(&s).unwrap();
        let r0 = a.mode.radius;
        let mut last = f64::INFINITY;
        for k in [1.0, 1.05, 1.2, 1.5, 2.0] {
            let v = field4_integral_beyond(&a, &b, k * r0, 1.0, &s.quadrature)
                .unwrap()
                .value;
            assert!(v < last);
            last = v;
        }
        assert!(field4_integral_beyond(&a, &b, 0.5 * r0, 1.0, &s.quadrature).is_err());
    }

    #[test]
    fn resolution_doubling_is_stable() {
        let s = TpaScenario::nominal();
        let fine = TpaScenario {
            quadrature: s.quadrature.doubled(),
            ..s
        };
        let a = total_rate(&s).unwrap().r2_total;
        let b = total_rate(&fine).unwrap().r2_total;
        assert_relative_eq!(a, b, max_relative = 1e-5);
    }

    #[test]
    fn field4_monte_carlo() {
        let s = TpaScenario::nominal();
        let (a, b) = beam_modes(&s).unwrap();
        let f = field4_integral_beyond(&a, &b, a.mode.radius, 1.0, &s.quadrature).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(99);
        let (r0, r1) = (a.mode.radius, f.r_max);
        let strata = 1000;
        let per = 1000;
        let width = (r1 - r0) / strata as f64;
        let mut total = 0.0;
        for k in 0..strata {
            let lo = r0 + k as f64 * width;
            let mut acc = 0.0;
            for _ in 0..per {
                let r = lo + rng.gen::<f64>() * width;
                let phi = rng.gen::<f64>() * 2.0 * PI;
                acc += a.intensity(r, phi) * b.intensity(r, phi) * r;
            }
            total += acc / per as f64 * width * 2.0 * PI;
        }
        assert_relative_eq!(total, f.value, max_relative = 0.01);
    }

    #[test]
    fn absorption_fraction_contract() {
        let s = TpaScenario::nominal();
        let a = fractional_absorption(1.15e14, &s).unwrap();
        assert!((a - 0.029).abs() < 0.0015, "{a}");
        assert_eq!(fractional_absorption(0.0, &s).unwrap(), 0.0);
        let twice = fractional_absorption(2.3e14, &s.with_powers(2e-3, 2e-3)).unwrap();
        assert_relative_eq!(twice, a, max_relative = 1e-14);
        assert!(fractional_absorption(1.0, &s.with_powers(0.0, 0.0)).is_err());
    }

    #[test]
    fn two_color_wavelengths_close_the_resonance() {
        let (la, lb) = two_color_wavelengths(0.0).unwrap();
        assert_relative_eq!(la, RB_D2_WAVELENGTH, max_relative = 1e-14);
        let sum = wavelength_to_omega(la).unwrap() + wavelength_to_omega(lb).unwrap();
        assert_relative_eq!(
            sum,
            2.0 * wavelength_to_omega(TWO_PHOTON_WAVELENGTH).unwrap(),
            max_relative = 1e-14
        );
        let (la2, _) = two_color_wavelengths(1e12).unwrap();
        assert!(la2 < la);
    }

    #[test]
    fn detuning_sweep_shape() {
        let s = TpaScenario::nominal().with_powers(50e-12, 50e-12);
        let rows = sweep_detuning(&s, 1e10, 1e13, 13, Spacing::Log, DetuningMode::TwoColor).unwrap();
        for w in rows.windows(2) {
            assert!(w[1].absorption_fraction < w[0].absorption_fraction);
        }
        let g1 = s.atom.gamma1;
        let law = |d: f64| 1.0 / (4.0 * d * d + g1 * g1);
        for r in &rows {
            let ratio =
                (r.absorption_fraction / rows[0].absorption_fraction) / (law(r.delta) / law(rows[0].delta));
            assert_relative_eq!(ratio, 1.0, max_relative = 0.01);
        }
        let fixed = sweep_detuning(&s, 1e11, 1e12, 2, Spacing::Linear, DetuningMode::Fixed).unwrap();
        assert_relative_eq!(
            fixed[0].r2 / fixed[1].r2,
            law(1e11) / law(1e12),
            max_relative = 1e-12
        );
    }

    #[test]
    fn grids_validate_their_ranges() {
        assert!(diameter_grid(600e-9, 200e-9, 5e-9).is_err());
        assert!(diameter_grid(200e-9, 600e-9, 0.0).is_err());
        assert_eq!(diameter_grid(200e-9, 600e-9, 5e-9).unwrap().len(), 81);
        assert!(detuning_grid(0.0, 1.0, 5, Spacing::Log).is_err());
        let g = detuning_grid(1e10, 1e13, 4, Spacing::Log).unwrap();
        assert_relative_eq!(g[1], 1e11, max_relative = 1e-12);
        assert_relative_eq!(g[3], 1e13, max_relative = 1e-12);
    }

    #[test]
    fn golden_section_finds_parabola_peak() {
        let (x, fx) = golden_section_max(0.0, 3.0, 1e-9, |x| Ok(-(x - 1.234f64).powi(2))).unwrap();
        assert!((x - 1.234).abs() < 1e-9);
        assert!(fx <= 0.0);
    }

    #[test]
    fn small_sweep_has_gaps_and_order() {
        let s = TpaScenario::nominal();
        let grid = [80e-9, 300e-9, 320e-9, 340e-9];
        let fwd = sweep_diameter_grid(&s, &grid).unwrap();
        assert_eq!(fwd.gaps.len(), 1);
        assert_eq!(fwd.gaps[0].0, 80e-9);
        let rev: Vec<f64> = grid.iter().rev().copied().collect();
        let back = sweep_diameter_grid(&s, &rev).unwrap();
        let mut back_rows = back.rows.clone();
        back_rows.reverse();
        assert_eq!(fwd.rows, back_rows);
    }
}
