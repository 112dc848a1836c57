// SPDX-License-Identifier: Apache-2.0

//! Fundamental HE11 mode of a step-index nanofiber: silica dispersion, the
//! exact hybrid-mode eigenvalue equation, its root, and the group velocity.

use std::f64::consts::PI;

use crate::error::{Error, Result};
use crate::specfun::{j012, j1_prime_from, k012};
use crate::units::SPEED_OF_LIGHT;

/// V at which the second mode family (TE01/TM01/HE21) starts to guide.
pub const SINGLE_MODE_V: f64 = 2.405;

/// Number of n_eff samples used to bracket roots.
pub const SCAN_POINTS: usize = 2000;

/// Distance kept from both ends of the guided window during the scan.
pub const SCAN_MARGIN: f64 = 1e-6;

/// Relative frequency step of the group-velocity difference quotient.
pub const GROUP_VELOCITY_STEP: f64 = 1e-4;

const SILICA_MIN_WAVELENGTH: f64 = 210e-9;
const SILICA_MAX_WAVELENGTH: f64 = 3.7e-6;

/// Refractive index of fused silica, three-term Sellmeier fit (Malitson).
pub fn silica_index(lambda: f64) -> Result<f64> {
    if !(SILICA_MIN_WAVELENGTH..=SILICA_MAX_WAVELENGTH).contains(&lambda) {
        return Err(Error::domain("silica wavelength", lambda, "[210 nm, 3.7 um]"));
    }
    let l2 = (lambda * 1e6).powi(2);
    let n2 = 1.0
        + 0.696_166_3 * l2 / (l2 - 0.068_404_3f64.powi(2))
        + 0.407_942_6 * l2 / (l2 - 0.116_241_4f64.powi(2))
        + 0.897_479_4 * l2 / (l2 - 9.896_161f64.powi(2));
    Ok(n2.sqrt())
}

/// Where the core index comes from. Dispersive cores are re-evaluated when
/// the group velocity shifts the wavelength.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum CoreIndex {
    FusedSilica,
    Fixed(f64),
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct WaveguideGeometry {
    pub diameter: f64,
    pub wavelength: f64,
    pub n_core: f64,
    pub n_clad: f64,
    pub core: CoreIndex,
}

impl WaveguideGeometry {
    /// Silica core in vacuum.
    pub fn silica(diameter: f64, wavelength: f64) -> Result<Self> {
        Self::silica_with_cladding(diameter, wavelength, 1.0)
    }

    pub fn silica_with_cladding(diameter: f64, wavelength: f64, n_clad: f64) -> Result<Self> {
        Self::build(diameter, wavelength, CoreIndex::FusedSilica, n_clad)
    }

    /// Non-dispersive core of index `n_core`.
    pub fn new(diameter: f64, wavelength: f64, n_core: f64, n_clad: f64) -> Result<Self> {
        Self::build(diameter, wavelength, CoreIndex::Fixed(n_core), n_clad)
    }

    fn build(diameter: f64, wavelength: f64, core: CoreIndex, n_clad: f64) -> Result<Self> {
        if !(diameter > 0.0 && diameter.is_finite()) {
            return Err(Error::domain("fiber diameter", diameter, "> 0"));
        }
        if !(wavelength > 0.0 && wavelength.is_finite()) {
            return Err(Error::domain("wavelength", wavelength, "> 0"));
        }
        let n_core = match core {
            CoreIndex::FusedSilica => silica_index(wavelength)?,
            CoreIndex::Fixed(n) => n,
        };
        if n_clad.is_nan() || n_clad < 1.0 {
            return Err(Error::domain("cladding index", n_clad, ">= 1"));
        }
        if !(n_core > n_clad && n_core.is_finite()) {
            return Err(Error::domain("core index", n_core, "> cladding index"));
        }
        Ok(WaveguideGeometry {
            diameter,
            wavelength,
            n_core,
            n_clad,
            core,
        })
    }

    pub fn radius(&self) -> f64 {
        0.5 * self.diameter
    }

    pub fn k0(&self) -> f64 {
        2.0 * PI / self.wavelength
    }

    pub fn omega(&self) -> f64 {
        SPEED_OF_LIGHT * self.k0()
    }

    /// Same fiber probed at another wavelength.
    pub fn at_wavelength(&self, wavelength: f64) -> Result<Self> {
        Self::build(self.diameter, wavelength, self.core, self.n_clad)
    }

    pub fn with_diameter(&self, diameter: f64) -> Result<Self> {
        Self::build(diameter, self.wavelength, self.core, self.n_clad)
    }
}

/// V = k0 a sqrt(n1^2 - n2^2).
pub fn waveguide_v(geom: &WaveguideGeometry) -> f64 {
    geom.k0() * geom.radius() * (geom.n_core.powi(2) - geom.n_clad.powi(2)).sqrt()
}

/// Solved fundamental mode.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ModeSolution {
    pub geometry: WaveguideGeometry,
    pub beta: f64,
    pub k0: f64,
    pub radius: f64,
    pub u: f64,
    pub w: f64,
    pub v: f64,
    pub n_eff: f64,
    /// Hybrid-mode parameter, (1/U^2 + 1/W^2) / (J1'/(U J1) + K1'/(W K1)).
    pub s: f64,
    pub group_velocity: f64,
    pub single_mode: bool,
}

impl ModeSolution {
    pub fn n_core(&self) -> f64 {
        self.geometry.n_core
    }

    pub fn n_clad(&self) -> f64 {
        self.geometry.n_clad
    }

    pub fn wavelength(&self) -> f64 {
        self.geometry.wavelength
    }

    pub fn omega(&self) -> f64 {
        self.geometry.omega()
    }
}

/// Both sides of the eigenvalue equation at one beta.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DispersionTerms {
    pub lhs: f64,
    pub rhs: f64,
    pub j1_u: f64,
}

impl DispersionTerms {
    pub fn residual(&self) -> f64 {
        self.lhs - self.rhs
    }

    pub fn scale(&self) -> f64 {
        self.lhs.abs().max(self.rhs.abs())
    }
}

#[derive(Debug, Clone, Copy)]
struct Transverse {
    u: f64,
    w: f64,
    v: f64,
}

fn transverse(beta: f64, geom: &WaveguideGeometry) -> Transverse {
    let k0 = geom.k0();
    let a = geom.radius();
    let core = (k0 * geom.n_core).powi(2);
    let clad = (k0 * geom.n_clad).powi(2);
    let b2 = beta * beta;
    Transverse {
        u: a * (core - b2).sqrt(),
        w: a * (b2 - clad).sqrt(),
        v: waveguide_v(geom),
    }
}

/// [J1'(U)/(U J1(U)), K1'(W)/(W K1(W))] along with J1(U).
fn log_derivative_terms(u: f64, w: f64) -> (f64, f64, f64) {
    let [j0, j1, _] = j012(u);
    let [k0, k1, k2] = k012(w);
    let jp = j1_prime_from(u, j0, j1);
    let kp = -0.5 * (k0 + k2);
    (jp / (u * j1), kp / (w * k1), j1)
}

/// LHS and RHS of the HE11 eigenvalue equation,
/// (A + B)(A + (n2/n1)^2 B) = (beta/(k0 n1))^2 (V/(U W))^4 with
/// A = J1'(U)/(U J1(U)) and B = K1'(W)/(W K1(W)). For n2 = 1 the second
/// factor is A + B/n1^2.
pub fn dispersion_terms(beta: f64, geom: &WaveguideGeometry) -> Result<DispersionTerms> {
    let k0 = geom.k0();
    let lo = k0 * geom.n_clad;
    let hi = k0 * geom.n_core;
    if !(beta > lo && beta < hi) {
        return Err(Error::domain(
            "propagation constant",
            beta,
            "inside (k0 n2, k0 n1)",
        ));
    }
    let t = transverse(beta, geom);
    let (a_term, b_term, j1_u) = log_derivative_terms(t.u, t.w);
    if j1_u == 0.0 {
        return Err(Error::domain(
            "J1(U)",
            j1_u,
            "non-zero (pole of the eigenvalue equation)",
        ));
    }
    let ratio = (geom.n_clad / geom.n_core).powi(2);
    let lhs = (a_term + b_term) * (a_term + ratio * b_term);
    let rhs = (beta / (k0 * geom.n_core)).powi(2) * (t.v / (t.u * t.w)).powi(4);
    Ok(DispersionTerms { lhs, rhs, j1_u })
}

/// LHS - RHS of the eigenvalue equation.
pub fn dispersion_residual(beta: f64, geom: &WaveguideGeometry) -> Result<f64> {
    dispersion_terms(beta, geom).map(|t| t.residual())
}

/// The uniform n_eff grid used to bracket roots.
pub fn scan_grid(geom: &WaveguideGeometry) -> Vec<f64> {
    let lo = geom.n_clad + SCAN_MARGIN;
    let hi = geom.n_core - SCAN_MARGIN;
    let last = (SCAN_POINTS - 1) as f64;
    (0..SCAN_POINTS)
        .map(|i| lo + (hi - lo) * (i as f64 / last))
        .collect()
}

/// Sign-change brackets [n_lo, n_hi] of the residual on the scan grid,
/// excluding intervals that straddle a zero of J1(U) (poles).
pub fn root_brackets(geom: &WaveguideGeometry) -> Vec<(f64, f64)> {
    let k0 = geom.k0();
    let samples: Vec<(f64, Option<DispersionTerms>)> = scan_grid(geom)
        .into_iter()
        .map(|n| (n, dispersion_terms(n * k0, geom).ok()))
        .collect();
    samples
        .windows(2)
        .filter_map(|pair| {
            let (n_lo, lo) = pair[0];
            let (n_hi, hi) = pair[1];
            let (lo, hi) = (lo?, hi?);
            let root = lo.residual().signum() != hi.residual().signum();
            let pole = lo.j1_u.signum() != hi.j1_u.signum();
            (root && !pole).then_some((n_lo, n_hi))
        })
        .collect()
}

/// Bisects the residual in n_eff down to adjacent floating-point values.
fn bisect(geom: &WaveguideGeometry, mut lo: f64, mut hi: f64) -> Result<f64> {
    let k0 = geom.k0();
    let f = |n: f64| dispersion_residual(n * k0, geom);
    let mut f_lo = f(lo)?;
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if mid <= lo || mid >= hi {
            break;
        }
        let f_mid = f(mid)?;
        if f_mid == 0.0 {
            return Ok(mid);
        }
        if f_mid.signum() == f_lo.signum() {
            lo = mid;
            f_lo = f_mid;
        } else {
            hi = mid;
        }
    }
    // both ends are within 1e-12 of each other by now
    let f_hi = f(hi)?;
    Ok(if f_hi.abs() < f_lo.abs() { hi } else { lo })
}

/// Fundamental-mode effective index without the group velocity.
pub fn fundamental_n_eff(geom: &WaveguideGeometry) -> Result<f64> {
    let brackets = root_brackets(geom);
    let &(lo, hi) = brackets.last().ok_or(Error::NoGuidedRoot {
        diameter: geom.diameter,
        wavelength: geom.wavelength,
        v: waveguide_v(geom),
    })?;
    bisect(geom, lo, hi)
}

/// Solves the HE11 eigenvalue equation and fills in the derived quantities.
pub fn solve_he11(geom: &WaveguideGeometry) -> Result<ModeSolution> {
    let n_eff = fundamental_n_eff(geom)?;
    let group_velocity = group_velocity_with_step(geom, GROUP_VELOCITY_STEP)?;
    Ok(assemble(geom, n_eff, group_velocity))
}

fn assemble(geom: &WaveguideGeometry, n_eff: f64, group_velocity: f64) -> ModeSolution {
    let k0 = geom.k0();
    let beta = n_eff * k0;
    let t = transverse(beta, geom);
    let (a_term, b_term, _) = log_derivative_terms(t.u, t.w);
    let s = (1.0 / (t.u * t.u) + 1.0 / (t.w * t.w)) / (a_term + b_term);
    ModeSolution {
        geometry: *geom,
        beta,
        k0,
        radius: geom.radius(),
        u: t.u,
        w: t.w,
        v: t.v,
        n_eff,
        s,
        group_velocity,
        single_mode: t.v < SINGLE_MODE_V,
    }
}

/// Group velocity d omega / d beta from modes re-solved at omega (1 +- step),
/// including the material dispersion of the core.
pub fn group_velocity(geom: &WaveguideGeometry) -> Result<f64> {
    group_velocity_with_step(geom, GROUP_VELOCITY_STEP)
}

pub fn group_velocity_with_step(geom: &WaveguideGeometry, step: f64) -> Result<f64> {
    let omega = geom.omega();
    let beta_at = |scale: f64| -> Result<f64> {
        let shifted = geom.at_wavelength(geom.wavelength / scale)?;
        Ok(fundamental_n_eff(&shifted)? * shifted.k0())
    };
    let beta_up = beta_at(1.0 + step)?;
    let beta_down = beta_at(1.0 - step)?;
    Ok(2.0 * step * omega / (beta_up - beta_down))
}

/// Diameter at which V reaches the single-mode limit, silica core in vacuum.
pub fn single_mode_cutoff_diameter(lambda: f64) -> Result<f64> {
    let n1 = silica_index(lambda)?;
    let k0 = 2.0 * PI / lambda;
    Ok(2.0 * SINGLE_MODE_V / (k0 * (n1 * n1 - 1.0).sqrt()))
}

#[cfg(test)]
mod tests {
    use approx::assert_relative_eq;

    use super::*;

    const LAMBDA: f64 = 778.1e-9;

    /// Fundamental root from an independent double-precision Bessel library
    /// (bracket scan + Brent, xtol 1e-15).
    const N_EFF_350NM: f64 = 1.057_603_451_939_814_3;

    fn nominal() -> WaveguideGeometry {
        WaveguideGeometry::silica(350e-9, LAMBDA).unwrap()
    }

    #[test]
    fn sellmeier_values() {
        assert_relative_eq!(silica_index(778.1e-9).unwrap(), 1.4537, max_relative = 1e-4);
        assert_relative_eq!(silica_index(587.6e-9).unwrap(), 1.4585, max_relative = 1e-4);
        let mut prev = f64::INFINITY;
        for i in 0..=110 {
            let n = silica_index(500e-9 + i as f64 * 10e-9).unwrap();
            assert!(n < prev);
            prev = n;
        }
        assert!(silica_index(200e-9).is_err());
        assert!(silica_index(4e-6).is_err());
    }

    #[test]
    fn v_number() {
        let g = WaveguideGeometry::new(350e-9, LAMBDA, 1.4537, 1.0).unwrap();
        assert_relative_eq!(waveguide_v(&g), 1.491, max_relative = 1e-3);
        let g2 = g.with_diameter(700e-9).unwrap();
        assert_relative_eq!(waveguide_v(&g2), 2.0 * waveguide_v(&g), max_relative = 1e-15);
        let tiny = g.with_diameter(1e-12).unwrap();
        assert!(waveguide_v(&tiny) < 1e-5);
    }

    #[test]
    fn geometry_validation() {
        assert!(WaveguideGeometry::silica(-1e-9, LAMBDA).is_err());
        assert!(WaveguideGeometry::new(350e-9, LAMBDA, 1.2, 1.3).is_err());
        assert!(WaveguideGeometry::silica_with_cladding(350e-9, LAMBDA, 0.9).is_err());
    }

    #[test]
    fn residual_rejects_outside_window() {
        let g = nominal();
        let k0 = g.k0();
        assert!(dispersion_residual(k0 * 0.99, &g).is_err());
        assert!(dispersion_residual(k0 * g.n_core, &g).is_err());
    }

    #[test]
    fn nominal_root_matches_reference() {
        let g = nominal();
        let mode = solve_he11(&g).unwrap();
        assert!(mode.n_eff > 1.0 && mode.n_eff < g.n_core);
        assert!((mode.n_eff - N_EFF_350NM).abs() < 1e-12, "n_eff = {}", mode.n_eff);
        assert!(mode.single_mode);
        let terms = dispersion_terms(mode.beta, &g).unwrap();
        assert!(terms.residual().abs() < 1e-10 * terms.scale());
        assert_relative_eq!(
            mode.u * mode.u + mode.w * mode.w,
            mode.v * mode.v,
            max_relative = 1e-10
        );
        assert!(mode.group_velocity > 0.0 && mode.group_velocity < SPEED_OF_LIGHT);
    }

    #[test]
    fn nominal_scan_has_single_sign_change() {
        let g = nominal();
        let grid = scan_grid(&g);
        assert_eq!(grid.len(), 2000);
        let k0 = g.k0();
        let sign_changes = grid
            .windows(2)
            .filter(|p| {
                let a = dispersion_residual(p[0] * k0, &g).unwrap();
                let b = dispersion_residual(p[1] * k0, &g).unwrap();
                a.signum() != b.signum()
            })
            .count();
        assert_eq!(sign_changes, 1);
        assert_eq!(root_brackets(&g).len(), 1);
    }

    #[test]
    fn unique_root_below_cutoff() {
        for d in [200e-9, 300e-9, 450e-9, 550e-9] {
            let g = WaveguideGeometry::silica(d, LAMBDA).unwrap();
            assert!(waveguide_v(&g) < SINGLE_MODE_V);
            assert_eq!(root_brackets(&g).len(), 1, "D = {d}");
        }
    }

    #[test]
    fn near_cutoff_has_no_resolvable_root() {
        // V ~ 0.26 and ~ 0.43: the root sits at W far below 1e-3
        for d in [60e-9, 100e-9] {
            let g = WaveguideGeometry::silica(d, LAMBDA).unwrap();
            let k0 = g.k0();
            for (lo, hi) in root_brackets(&g) {
                let w = |n: f64| g.radius() * k0 * (n * n - 1.0).sqrt();
                assert!(w(lo) < 1e-3 && w(hi) < 1e-3);
            }
            assert!(matches!(fundamental_n_eff(&g), Err(Error::NoGuidedRoot { .. })));
        }
    }

    #[test]
    fn n_eff_increases_with_diameter() {
        let mut prev = 0.0;
        for i in 0..20 {
            let d = 250e-9 + i as f64 * (350e-9 / 19.0);
            let n = fundamental_n_eff(&WaveguideGeometry::silica(d, LAMBDA).unwrap()).unwrap();
            assert!(n > prev, "n_eff not increasing at D = {d}");
            prev = n;
        }
    }

    #[test]
    fn thick_fiber_limit() {
        let g = WaveguideGeometry::silica(5e-6, LAMBDA).unwrap();
        let mode = solve_he11(&g).unwrap();
        assert!(!mode.single_mode);
        assert!((g.n_core - mode.n_eff).abs() < 1e-2);
        // bulk silica group index from the Sellmeier formula: c / 1.46788
        assert_relative_eq!(mode.group_velocity, 2.0423e8, max_relative = 0.02);
        // several poles and higher-order roots lie below the fundamental
        assert!(root_brackets(&g).len() > 1);
    }

    #[test]
    fn group_velocity_bounds_and_convergence() {
        for i in 0..8 {
            let d = 250e-9 + i as f64 * 50e-9;
            let v = group_velocity(&WaveguideGeometry::silica(d, LAMBDA).unwrap()).unwrap();
            assert!(v > 0.0 && v < SPEED_OF_LIGHT);
        }
        let g = nominal();
        let a = group_velocity_with_step(&g, 1e-4).unwrap();
        let b = group_velocity_with_step(&g, 5e-5).unwrap();
        assert!(((a - b) / a).abs() < 1e-6);
    }

    #[test]
    fn cutoff_diameter() {
        let d = single_mode_cutoff_diameter(LAMBDA).unwrap();
        assert_relative_eq!(d, 565e-9, max_relative = 2e-3);
        let g = WaveguideGeometry::silica(d, LAMBDA).unwrap();
        assert_relative_eq!(waveguide_v(&g), SINGLE_MODE_V, max_relative = 1e-9);
        // linear in lambda at fixed indices
        let n1 = silica_index(LAMBDA).unwrap();
        let fixed = |lam: f64| 2.0 * SINGLE_MODE_V / (2.0 * PI / lam * (n1 * n1 - 1.0).sqrt());
        assert_relative_eq!(fixed(2.0 * LAMBDA), 2.0 * fixed(LAMBDA), max_relative = 1e-15);
    }

    #[test]
    fn deterministic() {
        let a = solve_he11(&nominal()).unwrap();
        let b = solve_he11(&nominal()).unwrap();
        assert_eq!(a, b);
    }
}
