// SPDX-License-Identifier: Apache-2.0

//! Command-line parsing and dispatch for `taper-tpa`.

use std::fs;
use std::io::{self, Write};
use std::path::PathBuf;

use clap::{Parser, Subcommand, ValueEnum};
use thiserror::Error;
use tpa_core::atom::{
    analytic_p2, density_options, evolve_amplitudes_with, evolve_density, perturbative_p2_profile,
    AmplitudeVector4,
};
use tpa_core::engine::{
    beam_mode, sweep_detuning, sweep_diameter, total_rate, DetuningMode, Spacing, TpaScenario,
};
use tpa_core::mode_field::{field_at, PowerMapping};
use tpa_core::units::BeamSpec;

use crate::config::{parse_config, ConfigError, DetuningUnit, ScenarioConfig};
use crate::table::{write_csv, ResultTable};
use crate::verify::run_suite;

/// Environment variable that overrides `--threads`.
pub const THREADS_ENV: &str = "TAPER_TPA_THREADS";

#[derive(Debug, Parser)]
#[command(
    name = "taper-tpa",
    version,
    about = "Two-photon absorption of atoms around a tapered optical fiber"
)]
pub struct Cli {
    /// Scenario file; the built-in nominal scenario when absent.
    #[arg(long, global = true)]
    pub config: Option<PathBuf>,
    /// Worker threads for sweeps (0 = one per core).
    #[arg(long, global = true, default_value_t = 0)]
    pub threads: usize,
    /// Overrides the config's power-to-field velocity.
    #[arg(long, global = true, value_enum)]
    pub power_velocity: Option<VelocityArg>,
    /// Overrides the config's beam wavelength (nm).
    #[arg(long, global = true)]
    pub wavelength_nm: Option<f64>,
    /// Overrides the config's taper diameter (nm).
    #[arg(long, global = true)]
    pub diameter_nm: Option<f64>,
    /// Destination file; stdout when absent.
    #[arg(long, short, global = true)]
    pub output: Option<PathBuf>,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum VelocityArg {
    Vacuum,
    Group,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum BeamArg {
    A,
    B,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum UnitArg {
    Hz,
    Rad,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum SpacingArg {
    Linear,
    Log,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum SweepModeArg {
    TwoColor,
    Fixed,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Guided HE11 mode of one beam.
    Mode {
        #[arg(long, value_enum, default_value = "a")]
        beam: BeamArg,
    },
    /// Power-scaled field of one beam on an (r, phi) grid.
    Profile {
        #[arg(long, value_enum, default_value = "a")]
        beam: BeamArg,
        /// Outer radius (nm); three fiber radii when absent.
        #[arg(long)]
        r_max_nm: Option<f64>,
        #[arg(long, default_value_t = 100)]
        n_r: usize,
        #[arg(long, default_value_t = 8)]
        n_phi: usize,
    },
    /// Total two-photon rate for the scenario.
    Rate,
    /// Rate versus taper diameter.
    SweepDiameter {
        #[arg(long, default_value_t = 200.0)]
        dmin_nm: f64,
        #[arg(long, default_value_t = 600.0)]
        dmax_nm: f64,
        #[arg(long, default_value_t = 5.0)]
        step_nm: f64,
    },
    /// Rate versus detuning.
    SweepDetuning {
        #[arg(long, default_value_t = 1e9)]
        delta_min: f64,
        #[arg(long, default_value_t = 1e13)]
        delta_max: f64,
        #[arg(long, default_value_t = 41)]
        points: usize,
        /// Unit of --delta-min and --delta-max.
        #[arg(long, value_enum, default_value = "rad")]
        delta_unit: UnitArg,
        #[arg(long, value_enum, default_value = "log")]
        spacing: SpacingArg,
        /// Whether the beam wavelengths follow the detuning.
        #[arg(long, value_enum, default_value = "two-color")]
        mode: SweepModeArg,
    },
    /// Density-matrix evolution of one atom at the fiber surface.
    Dynamics {
        /// End time (s); ten intermediate-state lifetimes when absent.
        #[arg(long)]
        tmax_s: Option<f64>,
        #[arg(long, default_value_t = 200)]
        samples: usize,
    },
    /// Runs the invariant suite.
    Verify,
}

#[derive(Debug, Error)]
pub enum AppError {
    #[error("{0}")]
    Usage(String),
    #[error("config: {0}")]
    Config(#[from] ConfigError),
    #[error("{0}")]
    Physics(#[from] tpa_core::Error),
    #[error("i/o: {0}")]
    Io(#[from] io::Error),
    #[error("verification failed: {}", .0.join("; "))]
    Verification(Vec<String>),
}

impl AppError {
    pub fn exit_code(&self) -> i32 {
        match self {
            AppError::Usage(_) | AppError::Config(_) => 2,
            _ => 1,
        }
    }
}

fn usage(msg: impl Into<String>) -> AppError {
    AppError::Usage(msg.into())
}

/// Parses `args` (program name first), runs the command and returns the
/// process exit code.
pub fn run<I, T>(args: I, stdout: &mut dyn Write, stderr: &mut dyn Write) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<std::ffi::OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            let text = e.render().to_string();
            return if e.use_stderr() {
                let _ = stderr.write_all(text.as_bytes());
                2
            } else {
                let _ = stdout.write_all(text.as_bytes());
                0
            };
        }
    };
    match execute(&cli, stdout, stderr) {
        Ok(()) => 0,
        Err(e) => {
            let _ = writeln!(stderr, "error: {e}");
            e.exit_code()
        }
    }
}

fn thread_count(flag: usize) -> Result<usize, AppError> {
    match std::env::var(THREADS_ENV) {
        Ok(v) => v
            .trim()
            .parse()
            .map_err(|_| usage(format!("{THREADS_ENV} = `{v}` is not a thread count"))),
        Err(_) => Ok(flag),
    }
}

fn positive_override(flag: &str, value: Option<f64>) -> Result<Option<f64>, AppError> {
    match value {
        Some(v) if !(v > 0.0 && v.is_finite()) => Err(usage(format!("--{flag} must be positive, got {v}"))),
        other => Ok(other),
    }
}

fn load_config(cli: &Cli) -> Result<ScenarioConfig, AppError> {
    let mut cfg = match &cli.config {
        Some(path) => {
            let bytes = fs::read(path).map_err(|e| usage(format!("cannot read {}: {e}", path.display())))?;
            parse_config(&bytes)?
        }
        None => ScenarioConfig::default(),
    };
    if let Some(v) = cli.power_velocity {
        cfg.power_velocity = match v {
            VelocityArg::Vacuum => PowerMapping::VacuumLight,
            VelocityArg::Group => PowerMapping::GroupVelocity,
        };
    }
    if let Some(w) = positive_override("wavelength-nm", cli.wavelength_nm)? {
        cfg.wavelength_nm = w;
    }
    if let Some(d) = positive_override("diameter-nm", cli.diameter_nm)? {
        cfg.diameter_nm = d;
    }
    Ok(cfg)
}

/// Buffered destinations: the primary result and the run log.
struct Sinks {
    primary: Vec<u8>,
    log: Vec<u8>,
}

fn execute(cli: &Cli, stdout: &mut dyn Write, stderr: &mut dyn Write) -> Result<(), AppError> {
    let threads = thread_count(cli.threads)?;
    let cfg = load_config(cli)?;
    let scenario = cfg.scenario()?;
    validate_command(&cli.command)?;
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(threads)
        .build()
        .map_err(|e| usage(format!("cannot start {threads} threads: {e}")))?;
    let mut sinks = Sinks {
        primary: Vec::new(),
        log: Vec::new(),
    };
    let outcome = pool.install(|| dispatch(&cli.command, &cfg, &scenario, &mut sinks));
    match &cli.output {
        Some(path) => {
            if outcome.is_ok() || !sinks.primary.is_empty() {
                fs::write(path, &sinks.primary)
                    .map_err(|e| usage(format!("cannot write {}: {e}", path.display())))?;
            }
            let log: &mut dyn Write = if outcome.is_ok() { stdout } else { stderr };
            log.write_all(&sinks.log)?;
        }
        None => {
            stdout.write_all(&sinks.primary)?;
            stderr.write_all(&sinks.log)?;
        }
    }
    outcome
}

fn validate_command(command: &Command) -> Result<(), AppError> {
    match *command {
        Command::Profile {
            r_max_nm, n_r, n_phi, ..
        } => {
            if n_r < 2 || n_phi < 1 {
                return Err(usage("profile needs --n-r >= 2 and --n-phi >= 1"));
            }
            positive_override("r-max-nm", r_max_nm)?;
        }
        Command::SweepDiameter {
            dmin_nm,
            dmax_nm,
            step_nm,
        } => {
            if !(dmin_nm > 0.0 && dmax_nm > dmin_nm && dmax_nm.is_finite() && step_nm > 0.0) {
                return Err(usage(format!(
                    "need 0 < --dmin-nm < --dmax-nm and --step-nm > 0, got {dmin_nm}, {dmax_nm}, {step_nm}"
                )));
            }
        }
        Command::SweepDetuning {
            delta_min,
            delta_max,
            points,
            ..
        } => {
            if !(delta_min > 0.0 && delta_max > delta_min && delta_max.is_finite() && points >= 2) {
                return Err(usage(format!(
                    "need 0 < --delta-min < --delta-max and --points >= 2, got {delta_min:e}, {delta_max:e}, {points}"
                )));
            }
        }
        Command::Dynamics { tmax_s, samples } => {
            positive_override("tmax-s", tmax_s)?;
            if samples == 0 {
                return Err(usage("--samples must be at least 1"));
            }
        }
        Command::Mode { .. } | Command::Rate | Command::Verify => {}
    }
    Ok(())
}

fn dispatch(
    command: &Command,
    cfg: &ScenarioConfig,
    s: &TpaScenario,
    out: &mut Sinks,
) -> Result<(), AppError> {
    match *command {
        Command::Mode { beam } => mode(s, beam, out),
        Command::Profile {
            beam,
            r_max_nm,
            n_r,
            n_phi,
        } => profile(s, beam, r_max_nm, n_r, n_phi, out),
        Command::Rate => rate(s, out),
        Command::SweepDiameter {
            dmin_nm,
            dmax_nm,
            step_nm,
        } => diameter_sweep(s, dmin_nm, dmax_nm, step_nm, out),
        Command::SweepDetuning {
            delta_min,
            delta_max,
            points,
            delta_unit,
            spacing,
            mode,
        } => {
            let factor = match delta_unit {
                UnitArg::Hz => DetuningUnit::Hz,
                UnitArg::Rad => DetuningUnit::Rad,
            }
            .to_angular();
            let spacing = match spacing {
                SpacingArg::Linear => Spacing::Linear,
                SpacingArg::Log => Spacing::Log,
            };
            let mode = match mode {
                SweepModeArg::TwoColor => DetuningMode::TwoColor,
                SweepModeArg::Fixed => DetuningMode::Fixed,
            };
            detuning_sweep(
                s,
                delta_min * factor,
                delta_max * factor,
                points,
                spacing,
                mode,
                out,
            )
        }
        Command::Dynamics { tmax_s, samples } => {
            dynamics(s, tmax_s.unwrap_or(10.0 / cfg.gamma1_per_s), samples, out)
        }
        Command::Verify => verify(out),
    }
}

fn beam_spec(s: &TpaScenario, beam: BeamArg) -> &BeamSpec {
    match beam {
        BeamArg::A => &s.beam_a,
        BeamArg::B => &s.beam_b,
    }
}

fn mode(s: &TpaScenario, beam: BeamArg, out: &mut Sinks) -> Result<(), AppError> {
    let spec = beam_spec(s, beam);
    let nm = beam_mode(s, spec)?;
    let m = &nm.mode;
    let w = &mut out.primary;
    writeln!(w, "wavelength_nm = {}", spec.wavelength * 1e9)?;
    writeln!(w, "diameter_nm = {}", s.diameter * 1e9)?;
    writeln!(w, "beta_per_m = {:.12e}", m.beta)?;
    writeln!(w, "n_eff = {:.12}", m.n_eff)?;
    writeln!(w, "U = {:.12}", m.u)?;
    writeln!(w, "W = {:.12}", m.w)?;
    writeln!(w, "V = {:.12}", m.v)?;
    writeln!(w, "group_velocity_m_per_s = {:.12e}", m.group_velocity)?;
    writeln!(w, "evanescent_fraction = {:.12}", nm.evanescent_fraction)?;
    writeln!(w, "single_mode = {}", m.single_mode)?;
    Ok(())
}

fn profile(
    s: &TpaScenario,
    beam: BeamArg,
    r_max_nm: Option<f64>,
    n_r: usize,
    n_phi: usize,
    out: &mut Sinks,
) -> Result<(), AppError> {
    let nm = beam_mode(s, beam_spec(s, beam))?;
    let r_max = r_max_nm.map_or(3.0 * nm.mode.radius, |r| r / 1e9);
    let mut table = ResultTable::new([
        "r_nm", "phi_rad", "re_E_r", "im_E_r", "re_E_phi", "im_E_phi", "re_E_z", "im_E_z", "E_sq",
    ]);
    let scale = nm.amplitude_scale;
    for i in 0..n_r {
        let r = r_max * i as f64 / (n_r - 1) as f64;
        for j in 0..n_phi {
            let phi = 2.0 * std::f64::consts::PI * j as f64 / n_phi as f64;
            let f = field_at(&nm.mode, r, phi);
            table.push(vec![
                r * 1e9,
                phi,
                scale * f.e_r.re,
                scale * f.e_r.im,
                scale * f.e_phi.re,
                scale * f.e_phi.im,
                scale * f.e_z.re,
                scale * f.e_z.im,
                scale * scale * f.magnitude_sq,
            ]);
        }
    }
    write_csv(&table, &mut out.primary)?;
    writeln!(
        out.log,
        "fiber radius {:.3} nm; fields in V/m",
        nm.mode.radius * 1e9
    )?;
    Ok(())
}

fn rate(s: &TpaScenario, out: &mut Sinks) -> Result<(), AppError> {
    let r = total_rate(s)?;
    let w = &mut out.primary;
    writeln!(w, "R2_per_s = {:.10e}", r.r2_total)?;
    writeln!(w, "absorption_fraction = {:.10e}", r.absorption_fraction)?;
    writeln!(w, "field4_integral = {:.10e}", r.field4_integral)?;
    writeln!(w, "r_max_nm = {:.6}", r.r_max * 1e9)?;
    writeln!(w, "n_eff_a = {:.12}", r.beam_a.n_eff)?;
    writeln!(w, "n_eff_b = {:.12}", r.beam_b.n_eff)?;
    if r.saturation_warning {
        writeln!(
            out.log,
            "warning: absorption fraction {:.3} is large; the weak-drive rate may not apply",
            r.absorption_fraction
        )?;
    }
    Ok(())
}

fn diameter_sweep(
    s: &TpaScenario,
    dmin_nm: f64,
    dmax_nm: f64,
    step_nm: f64,
    out: &mut Sinks,
) -> Result<(), AppError> {
    let sweep = sweep_diameter(s, dmin_nm / 1e9, dmax_nm / 1e9, step_nm / 1e9)?;
    let mut table = ResultTable::new([
        "diameter_nm",
        "R2_per_s",
        "absorption_fraction",
        "evanescent_fraction",
        "n_eff",
        "single_mode",
    ]);
    for row in &sweep.rows {
        table.push(vec![
            row.diameter * 1e9,
            row.r2,
            row.absorption_fraction,
            row.evanescent_fraction,
            row.n_eff,
            f64::from(u8::from(row.single_mode)),
        ]);
    }
    write_csv(&table, &mut out.primary)?;
    for (d, reason) in &sweep.gaps {
        writeln!(out.log, "skipped {:.3} nm: {reason}", d * 1e9)?;
    }
    if let Some(best) = sweep.argmax {
        let place = if best.interior { "" } else { " (range edge)" };
        writeln!(out.log, "argmax_diameter_nm = {:.3}{place}", best.diameter * 1e9)?;
        writeln!(out.log, "max_R2_per_s = {:.10e}", best.r2)?;
    }
    Ok(())
}

fn detuning_sweep(
    s: &TpaScenario,
    min: f64,
    max: f64,
    points: usize,
    spacing: Spacing,
    mode: DetuningMode,
    out: &mut Sinks,
) -> Result<(), AppError> {
    let rows = sweep_detuning(s, min, max, points, spacing, mode)?;
    let mut table = ResultTable::new([
        "delta_rad_per_s",
        "R2_per_s",
        "absorption_fraction",
        "wavelength_a_nm",
        "wavelength_b_nm",
    ]);
    for row in &rows {
        table.push(vec![
            row.delta,
            row.r2,
            row.absorption_fraction,
            row.wavelength_a * 1e9,
            row.wavelength_b * 1e9,
        ]);
    }
    write_csv(&table, &mut out.primary)?;
    let saturated = rows.iter().filter(|r| r.saturation_warning).count();
    writeln!(out.log, "{} detunings", rows.len())?;
    if saturated > 0 {
        writeln!(
            out.log,
            "warning: {saturated} rows exceed the weak-drive absorption threshold"
        )?;
    }
    Ok(())
}

fn dynamics(s: &TpaScenario, t_max: f64, samples: usize, out: &mut Sinks) -> Result<(), AppError> {
    let r = total_rate(s)?;
    let (ia, ib) = (r.beam_a.surface_intensity, r.beam_b.surface_intensity);
    let atom = s
        .atom
        .with_couplings(s.atom.d1 * ia.sqrt(), s.atom.d2 * ib.sqrt());
    let grid: Vec<f64> = (1..=samples).map(|i| t_max * i as f64 / samples as f64).collect();
    let ground = AmplitudeVector4::ground();
    let rho = evolve_density(&ground.outer(), &atom, &grid)?;
    let amps = evolve_amplitudes_with(&ground, &atom, &grid, &density_options())?;
    let weak = perturbative_p2_profile(&atom, &grid)?;
    let mut table = ResultTable::new([
        "t_s",
        "rho11",
        "rho22",
        "rho33",
        "rho44",
        "trace",
        "p2_analytic",
        "p2_perturbative",
        "factorization_error",
    ]);
    for (k, &t) in grid.iter().enumerate() {
        let m = &rho[k];
        table.push(vec![
            t,
            m.population(0),
            m.population(1),
            m.population(2),
            m.population(3),
            m.trace(),
            analytic_p2(&atom, ia * ib, t).unwrap_or(f64::NAN),
            weak[k],
            m.max_abs_diff(&amps[k].outer()),
        ]);
    }
    write_csv(&table, &mut out.primary)?;
    writeln!(
        out.log,
        "surface |E_a| = {:.6e} V/m, |E_b| = {:.6e} V/m; rho11 is the upper state, rho44 the ground state",
        ia.sqrt(),
        ib.sqrt()
    )?;
    Ok(())
}

fn verify(out: &mut Sinks) -> Result<(), AppError> {
    let report = run_suite();
    out.primary.write_all(report.render().as_bytes())?;
    if report.passed() {
        Ok(())
    } else {
        Err(AppError::Verification(
            report.failures().map(|c| c.name.to_string()).collect(),
        ))
    }
}
