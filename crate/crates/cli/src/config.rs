// SPDX-License-Identifier: Apache-2.0

//! Flat `key = value` scenario files.
//!
//! One assignment per line; `#` starts a comment. Unknown and repeated keys
//! are errors. [`ScenarioConfig::to_text`] writes every key in canonical
//! order, so a file in that form round-trips byte for byte once comments and
//! blank lines are removed.

use std::fmt;

use thiserror::Error;
use tpa_core::atom::AtomParams;
use tpa_core::engine::{OrientationAveraging, TpaScenario};
use tpa_core::mode_field::PowerMapping;
use tpa_core::quad::QuadratureConfig;
use tpa_core::units::{dipole_from_radius, BeamSpec, Direction};

#[derive(Debug, Clone, PartialEq, Error)]
pub enum ConfigError {
    #[error("config is not valid UTF-8: {0}")]
    Encoding(String),
    #[error("line {line}: expected `key = value`, found `{text}`")]
    Syntax { line: usize, text: String },
    #[error("line {line}: unknown key `{key}`")]
    UnknownKey { line: usize, key: String },
    #[error("line {line}: key `{key}` given more than once")]
    Duplicate { line: usize, key: String },
    #[error("line {line}: cannot parse `{value}` for `{key}`: {reason}")]
    Value {
        line: usize,
        key: String,
        value: String,
        reason: String,
    },
    #[error("line {line}: `{key}` = {value} out of range: {expected}")]
    Range {
        line: usize,
        key: String,
        value: String,
        expected: String,
    },
    #[error("missing required keys: {}", .0.join(", "))]
    Missing(Vec<&'static str>),
    #[error("inconsistent scenario: {0}")]
    Scenario(String),
}

/// Units in which the configured detuning is written.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum DetuningUnit {
    Hz,
    Rad,
}

impl DetuningUnit {
    /// Factor taking a value in this unit to rad/s.
    pub fn to_angular(&self) -> f64 {
        match self {
            DetuningUnit::Hz => 2.0 * std::f64::consts::PI,
            DetuningUnit::Rad => 1.0,
        }
    }
}

impl fmt::Display for DetuningUnit {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            DetuningUnit::Hz => "hz",
            DetuningUnit::Rad => "rad",
        })
    }
}

/// Scenario parameters as written in a config file.
#[derive(Debug, Clone, PartialEq)]
pub struct ScenarioConfig {
    pub wavelength_nm: f64,
    pub wavelength_b_nm: Option<f64>,
    pub diameter_nm: f64,
    pub length_mm: f64,
    pub power_w: f64,
    pub power_b_w: Option<f64>,
    pub density_per_cm3: f64,
    pub gamma1_per_s: f64,
    pub gamma2_per_s: f64,
    pub detuning: f64,
    pub detuning_unit: DetuningUnit,
    pub r1_nm: f64,
    pub r2_nm: f64,
    pub n_clad: f64,
    pub orientation_averaging: OrientationAveraging,
    pub quadrature_rel_tol: f64,
    pub power_velocity: PowerMapping,
}

/// Keys in canonical order, with whether each must be present.
pub const KEYS: [(&str, bool); 17] = [
    ("wavelength_nm", true),
    ("wavelength_b_nm", false),
    ("diameter_nm", true),
    ("length_mm", true),
    ("power_w", true),
    ("power_b_w", false),
    ("density_per_cm3", true),
    ("gamma1_per_s", true),
    ("gamma2_per_s", true),
    ("detuning", true),
    ("detuning_unit", true),
    ("r1_nm", true),
    ("r2_nm", true),
    ("n_clad", false),
    ("orientation_averaging", false),
    ("quadrature_rel_tol", false),
    ("power_velocity", false),
];

impl Default for ScenarioConfig {
    /// The nominal tapered-fiber experiment.
    fn default() -> Self {
        ScenarioConfig {
            wavelength_nm: 778.1,
            wavelength_b_nm: None,
            diameter_nm: 350.0,
            length_mm: 5.0,
            power_w: 1e-3,
            power_b_w: None,
            density_per_cm3: 1e12,
            gamma1_per_s: 1e9,
            gamma2_per_s: 1e9,
            detuning: 6.54e12,
            detuning_unit: DetuningUnit::Rad,
            r1_nm: 0.223,
            r2_nm: 0.0492,
            n_clad: 1.0,
            orientation_averaging: OrientationAveraging::None,
            quadrature_rel_tol: 1e-8,
            power_velocity: PowerMapping::VacuumLight,
        }
    }
}

fn format_number(v: f64) -> String {
    let a = v.abs();
    if a == 0.0 || (1e-3..1e6).contains(&a) {
        format!("{v}")
    } else {
        format!("{v:e}")
    }
}

fn orientation_name(o: OrientationAveraging) -> &'static str {
    match o {
        OrientationAveraging::None => "none",
        OrientationAveraging::Isotropic => "isotropic",
    }
}

fn velocity_name(p: PowerMapping) -> &'static str {
    match p {
        PowerMapping::VacuumLight => "vacuum",
        PowerMapping::GroupVelocity => "group",
    }
}

struct Entry<'a> {
    line: usize,
    key: &'a str,
    value: &'a str,
}

impl Entry<'_> {
    fn value_error(&self, reason: impl Into<String>) -> ConfigError {
        ConfigError::Value {
            line: self.line,
            key: self.key.to_string(),
            value: self.value.to_string(),
            reason: reason.into(),
        }
    }

    fn number(&self) -> Result<f64, ConfigError> {
        let v: f64 = self.value.parse().map_err(|e| self.value_error(format!("{e}")))?;
        if !v.is_finite() {
            return Err(self.value_error("not a finite number"));
        }
        Ok(v)
    }

    fn checked(&self, ok: impl Fn(f64) -> bool, expected: &str) -> Result<f64, ConfigError> {
        let v = self.number()?;
        if ok(v) {
            Ok(v)
        } else {
            Err(ConfigError::Range {
                line: self.line,
                key: self.key.to_string(),
                value: self.value.to_string(),
                expected: expected.to_string(),
            })
        }
    }

    fn positive(&self) -> Result<f64, ConfigError> {
        self.checked(|v| v > 0.0, "must be > 0")
    }

    fn non_negative(&self) -> Result<f64, ConfigError> {
        self.checked(|v| v >= 0.0, "must be >= 0")
    }

    fn wavelength(&self) -> Result<f64, ConfigError> {
        self.checked(|v| (400.0..=1600.0).contains(&v), "must lie in [400, 1600] nm")
    }
}

/// Parses and validates a config document.
pub fn parse_config(bytes: &[u8]) -> Result<ScenarioConfig, ConfigError> {
    let text = std::str::from_utf8(bytes).map_err(|e| ConfigError::Encoding(e.to_string()))?;
    let mut entries: Vec<Entry> = Vec::new();
    for (i, raw) in text.lines().enumerate() {
        let line = i + 1;
        let content = raw.split('#').next().unwrap_or("").trim();
        if content.is_empty() {
            continue;
        }
        let Some((key, value)) = content.split_once('=') else {
            return Err(ConfigError::Syntax {
                line,
                text: content.to_string(),
            });
        };
        let (key, value) = (key.trim(), value.trim());
        if key.is_empty() || value.is_empty() {
            return Err(ConfigError::Syntax {
                line,
                text: content.to_string(),
            });
        }
        if !KEYS.iter().any(|(k, _)| *k == key) {
            return Err(ConfigError::UnknownKey {
                line,
                key: key.to_string(),
            });
        }
        if entries.iter().any(|e| e.key == key) {
            return Err(ConfigError::Duplicate {
                line,
                key: key.to_string(),
            });
        }
        entries.push(Entry { line, key, value });
    }

    let missing: Vec<&'static str> = KEYS
        .iter()
        .filter(|(k, required)| *required && !entries.iter().any(|e| e.key == *k))
        .map(|(k, _)| *k)
        .collect();
    if !missing.is_empty() {
        return Err(ConfigError::Missing(missing));
    }

    let mut cfg = ScenarioConfig::default();
    for e in &entries {
        match e.key {
            "wavelength_nm" => cfg.wavelength_nm = e.wavelength()?,
            "wavelength_b_nm" => cfg.wavelength_b_nm = Some(e.wavelength()?),
            "diameter_nm" => cfg.diameter_nm = e.positive()?,
            "length_mm" => cfg.length_mm = e.positive()?,
            "power_w" => cfg.power_w = e.non_negative()?,
            "power_b_w" => cfg.power_b_w = Some(e.non_negative()?),
            "density_per_cm3" => cfg.density_per_cm3 = e.non_negative()?,
            "gamma1_per_s" => cfg.gamma1_per_s = e.positive()?,
            "gamma2_per_s" => cfg.gamma2_per_s = e.positive()?,
            "detuning" => cfg.detuning = e.number()?,
            "detuning_unit" => {
                cfg.detuning_unit = match e.value {
                    "hz" => DetuningUnit::Hz,
                    "rad" => DetuningUnit::Rad,
                    _ => return Err(e.value_error("expected `hz` or `rad`")),
                }
            }
            "r1_nm" => cfg.r1_nm = e.positive()?,
            "r2_nm" => cfg.r2_nm = e.positive()?,
            "n_clad" => cfg.n_clad = e.checked(|v| v >= 1.0, "must be >= 1")?,
            "orientation_averaging" => {
                cfg.orientation_averaging = match e.value {
                    "none" => OrientationAveraging::None,
                    "isotropic" => OrientationAveraging::Isotropic,
                    _ => return Err(e.value_error("expected `none` or `isotropic`")),
                }
            }
            "quadrature_rel_tol" => {
                cfg.quadrature_rel_tol = e.checked(|v| v > 0.0 && v <= 1e-2, "must lie in (0, 1e-2]")?
            }
            "power_velocity" => {
                cfg.power_velocity = match e.value {
                    "vacuum" => PowerMapping::VacuumLight,
                    "group" => PowerMapping::GroupVelocity,
                    _ => return Err(e.value_error("expected `vacuum` or `group`")),
                }
            }
            _ => unreachable!("keys are checked against KEYS"),
        }
    }
    Ok(cfg)
}

impl ScenarioConfig {
    /// Canonical text: every key, one per line, LF endings; optional beam-b
    /// keys only when set.
    pub fn to_text(&self) -> String {
        let mut out = String::new();
        let mut put = |k: &str, v: String| {
            out.push_str(k);
            out.push_str(" = ");
            out.push_str(&v);
            out.push('\n');
        };
        put("wavelength_nm", format_number(self.wavelength_nm));
        if let Some(v) = self.wavelength_b_nm {
            put("wavelength_b_nm", format_number(v));
        }
        put("diameter_nm", format_number(self.diameter_nm));
        put("length_mm", format_number(self.length_mm));
        put("power_w", format_number(self.power_w));
        if let Some(v) = self.power_b_w {
            put("power_b_w", format_number(v));
        }
        put("density_per_cm3", format_number(self.density_per_cm3));
        put("gamma1_per_s", format_number(self.gamma1_per_s));
        put("gamma2_per_s", format_number(self.gamma2_per_s));
        put("detuning", format_number(self.detuning));
        put("detuning_unit", self.detuning_unit.to_string());
        put("r1_nm", format_number(self.r1_nm));
        put("r2_nm", format_number(self.r2_nm));
        put("n_clad", format_number(self.n_clad));
        put(
            "orientation_averaging",
            orientation_name(self.orientation_averaging).to_string(),
        );
        put("quadrature_rel_tol", format_number(self.quadrature_rel_tol));
        put("power_velocity", velocity_name(self.power_velocity).to_string());
        out
    }

    /// Detuning in rad/s.
    pub fn detuning_angular(&self) -> f64 {
        self.detuning * self.detuning_unit.to_angular()
    }

    /// The engine scenario described by this config, in SI units.
    pub fn scenario(&self) -> Result<TpaScenario, ConfigError> {
        let wrap = |e: tpa_core::Error| ConfigError::Scenario(e.to_string());
        let la = self.wavelength_nm / 1e9;
        let lb = self.wavelength_b_nm.unwrap_or(self.wavelength_nm) / 1e9;
        let pa = self.power_w;
        let pb = self.power_b_w.unwrap_or(self.power_w);
        let atom = AtomParams::new(
            dipole_from_radius(self.r1_nm / 1e9).map_err(wrap)?,
            dipole_from_radius(self.r2_nm / 1e9).map_err(wrap)?,
            self.gamma1_per_s,
            self.gamma2_per_s,
            self.detuning_angular(),
        )
        .map_err(wrap)?;
        let s = TpaScenario {
            diameter: self.diameter_nm / 1e9,
            n_clad: self.n_clad,
            taper_length: self.length_mm / 1e3,
            density: self.density_per_cm3 * 1e6,
            beam_a: BeamSpec::new(la, pa, Direction::Forward).map_err(wrap)?,
            beam_b: BeamSpec::new(lb, pb, Direction::Backward).map_err(wrap)?,
            atom,
            orientation: self.orientation_averaging,
            power_mapping: self.power_velocity,
            quadrature: QuadratureConfig {
                rel_tol: self.quadrature_rel_tol,
                ..QuadratureConfig::default()
            },
            quantization_length: 1.0,
        };
        s.validate().map_err(wrap)?;
        Ok(s)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    const NOMINAL: &str = include_str!("../../../configs/nominal.cfg");
    const TWO_COLOR: &str = include_str!("../../../configs/two_color.cfg");

    fn strip_comments(text: &str) -> String {
        text.lines()
            .map(|l| l.split('#').next().unwrap_or("").trim_end())
            .filter(|l| !l.trim().is_empty())
            .map(|l| format!("{l}\n"))
            .collect()
    }

    #[test]
    fn nominal_file_round_trips() {
        let cfg = parse_config(NOMINAL.as_bytes()).unwrap();
        assert_eq!(cfg, ScenarioConfig::default());
        assert_eq!(cfg.to_text(), strip_comments(NOMINAL));
        assert_eq!(parse_config(cfg.to_text().as_bytes()).unwrap(), cfg);
    }

    #[test]
    fn two_color_file_round_trips() {
        let cfg = parse_config(TWO_COLOR.as_bytes()).unwrap();
        assert_eq!(cfg.power_w, 50e-12);
        assert_eq!(cfg.to_text(), strip_comments(TWO_COLOR));
    }

    #[test]
    fn nominal_scenario_matches_engine_default() {
        let s = parse_config(NOMINAL.as_bytes()).unwrap().scenario().unwrap();
        let reference = TpaScenario::nominal();
        assert_eq!(s.diameter, reference.diameter);
        assert_eq!(s.beam_a, reference.beam_a);
        assert_eq!(s.atom.delta, reference.atom.delta);
        assert!((s.density - reference.density).abs() <= 1e-15 * reference.density);
        assert!((s.taper_length - reference.taper_length).abs() <= 1e-15);
    }

    #[test]
    fn empty_file_lists_required_keys() {
        match parse_config(b"# nothing here\n\n") {
            Err(ConfigError::Missing(keys)) => {
                let required: Vec<&str> = KEYS.iter().filter(|k| k.1).map(|k| k.0).collect();
                assert_eq!(keys, required);
            }
            other => panic!("{other:?}"),
        }
    }

    #[test]
    fn negative_diameter_names_the_key() {
        let text = NOMINAL.replace("diameter_nm = 350", "diameter_nm = -5");
        let err = parse_config(text.as_bytes()).unwrap_err();
        assert!(matches!(&err, ConfigError::Range { key, .. } if key == "diameter_nm"));
        assert!(err.to_string().contains("diameter_nm"));
        assert!(err.to_string().starts_with("line "));
    }

    #[test]
    fn typos_and_bad_values_are_rejected() {
        let text = format!("{NOMINAL}\ndiametre_nm = 3\n");
        assert!(matches!(
            parse_config(text.as_bytes()),
            Err(ConfigError::UnknownKey { .. })
        ));
        let text = format!("{NOMINAL}\ndiameter_nm = 3\n");
        assert!(matches!(
            parse_config(text.as_bytes()),
            Err(ConfigError::Duplicate { .. })
        ));
        let text = NOMINAL.replace("detuning_unit = rad", "detuning_unit = ghz");
        assert!(matches!(
            parse_config(text.as_bytes()),
            Err(ConfigError::Value { .. })
        ));
        let text = NOMINAL.replace("length_mm = 5", "length_mm = five");
        assert!(matches!(
            parse_config(text.as_bytes()),
            Err(ConfigError::Value { .. })
        ));
        assert!(matches!(
            parse_config(b"just words\n"),
            Err(ConfigError::Syntax { line: 1, .. })
        ));
        assert!(matches!(
            parse_config(&[0xff, 0xfe]),
            Err(ConfigError::Encoding(_))
        ));
    }

    #[test]
    fn number_formatting() {
        assert_eq!(format_number(778.1), "778.1");
        assert_eq!(format_number(1e12), "1e12");
        assert_eq!(format_number(6.54e12), "6.54e12");
        assert_eq!(format_number(1e-3), "0.001");
        assert_eq!(format_number(5e-11), "5e-11");
        assert_eq!(format_number(0.0), "0");
    }

    #[test]
    fn hz_detuning_is_converted() {
        let cfg = ScenarioConfig {
            detuning: 1e9,
            detuning_unit: DetuningUnit::Hz,
            ..ScenarioConfig::default()
        };
        assert!((cfg.detuning_angular() - 2.0 * std::f64::consts::PI * 1e9).abs() < 1e-3);
    }
}
