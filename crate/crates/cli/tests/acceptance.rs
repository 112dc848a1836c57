// SPDX-License-Identifier: Apache-2.0

//! Acceptance criteria 1 to 8. Prints one PASS/FAIL line per criterion and
//! exits non-zero if any fails.

use std::f64::consts::PI;
use std::path::{Path, PathBuf};
use std::process::{Command, ExitCode};
use std::time::{Duration, Instant};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use tpa_cli::config::parse_config;
use tpa_core::atom::{
    analytic_p2, local_steady_rate, perturbative_p2, perturbative_p2_profile, verify_factorization,
    AmplitudeVector4, AtomParams,
};
use tpa_core::engine::{
    beam_modes, field4_integral_beyond, fractional_absorption, sweep_detuning, total_rate, DetuningMode,
    Spacing, TpaScenario,
};
use tpa_core::mode_field::{field_at, interface_mismatch, norm_integral};
use tpa_core::mode_solver::{solve_he11, WaveguideGeometry};
use tpa_core::specfun::{bessel_j, bessel_k, BesselOrder};
use tpa_core::units::{wavelength_to_omega, HBAR, VACUUM_PERMITTIVITY};

type Criterion = (&'static str, fn() -> Outcome);

struct Outcome {
    passed: bool,
    detail: String,
}

fn outcome(passed: bool, detail: String) -> Outcome {
    Outcome { passed, detail }
}

fn rel(a: f64, b: f64) -> f64 {
    (a - b).abs() / b.abs()
}

fn configs() -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("../../configs")
}

/// Runs the CLI with the thread override cleared; returns (stdout, elapsed).
fn run_cli(args: &[&str]) -> Result<(String, Duration), String> {
    let start = Instant::now();
    let out = Command::new(env!("CARGO_BIN_EXE_taper-tpa"))
        .args(args)
        .env_remove("TAPER_TPA_THREADS")
        .output()
        .map_err(|e| e.to_string())?;
    let elapsed = start.elapsed();
    if !out.status.success() {
        return Err(format!(
            "exit {:?}: {}",
            out.status.code(),
            String::from_utf8_lossy(&out.stderr)
        ));
    }
    Ok((String::from_utf8_lossy(&out.stdout).into_owned(), elapsed))
}

fn value_of(text: &str, key: &str) -> Option<f64> {
    text.lines()
        .filter_map(|l| l.split_once('='))
        .find(|(k, _)| k.trim() == key)
        .and_then(|(_, v)| v.split_whitespace().next()?.parse().ok())
}

fn criterion_1() -> Outcome {
    let cfg = configs().join("nominal.cfg");
    let args = ["rate", "--config", cfg.to_str().unwrap(), "--threads", "1"];
    match run_cli(&args) {
        Ok((text, elapsed)) => match value_of(&text, "R2_per_s") {
            Some(r2) => outcome(
                (0.38e14..=3.45e14).contains(&r2) && elapsed < Duration::from_secs(10),
                format!(
                    "R2 = {r2:.4e} /s in {:.2} s single-threaded",
                    elapsed.as_secs_f64()
                ),
            ),
            None => outcome(false, format!("no R2_per_s line in `{text}`")),
        },
        Err(e) => outcome(false, e),
    }
}

fn criterion_2() -> Outcome {
    let s = TpaScenario::nominal();
    let r = match total_rate(&s) {
        Ok(r) => r,
        Err(e) => return outcome(false, e.to_string()),
    };
    let photon = HBAR * wavelength_to_omega(778.1e-9).unwrap();
    let own = rel(r.absorption_fraction, photon * r.r2_total / 1e-3);
    let reference = fractional_absorption(1.15e14, &s).unwrap();
    let by_hand = photon * 1.15e14 / 1e-3;
    outcome(
        own < 1e-10 && (reference - 0.029).abs() <= 0.0015 && rel(reference, by_hand) < 1e-12,
        format!(
            "own A = {:.5} (gap {own:.1e}); R2 = 1.15e14 gives A = {:.3}%",
            r.absorption_fraction,
            100.0 * reference
        ),
    )
}

fn criterion_3() -> Outcome {
    let dir = std::env::temp_dir().join(format!("taper-tpa-acceptance-{}", std::process::id()));
    std::fs::create_dir_all(&dir).unwrap();
    let csv = dir.join("sweep.csv");
    let args = [
        "sweep-diameter",
        "--dmin-nm",
        "200",
        "--dmax-nm",
        "600",
        "--step-nm",
        "5",
        "--threads",
        "4",
        "--output",
        csv.to_str().unwrap(),
    ];
    let result = run_cli(&args);
    let rows = std::fs::read_to_string(&csv).map(|t| t.lines().count().saturating_sub(1));
    let _ = std::fs::remove_dir_all(&dir);
    match result {
        Ok((text, elapsed)) => {
            let interior = !text.contains("range edge");
            match value_of(&text, "argmax_diameter_nm") {
                Some(d) => outcome(
                    interior && (300.0..=340.0).contains(&d) && elapsed < Duration::from_secs(300),
                    format!(
                        "argmax {d:.2} nm (interior: {interior}), {} rows in {:.2} s on 4 threads",
                        rows.unwrap_or(0),
                        elapsed.as_secs_f64()
                    ),
                ),
                None => outcome(false, format!("no argmax line in `{text}`")),
            }
        }
        Err(e) => outcome(false, e),
    }
}

fn criterion_4() -> Outcome {
    let text = std::fs::read(configs().join("two_color.cfg")).unwrap();
    let s = parse_config(&text).unwrap().scenario().unwrap();
    let at = |delta: f64| total_rate(&s.two_color(delta)?).map(|r| r.absorption_fraction);
    let (rad, hz) = match (at(1e9), at(2.0 * PI * 1e9)) {
        (Ok(a), Ok(b)) => (a, b),
        (Err(e), _) | (_, Err(e)) => return outcome(false, e.to_string()),
    };
    let decade = |a: f64| (0.01..=1.0).contains(&a);
    let rows = match sweep_detuning(&s, 1e10, 1e13, 31, Spacing::Log, DetuningMode::TwoColor) {
        Ok(rows) => rows,
        Err(e) => return outcome(false, e.to_string()),
    };
    let g1 = s.atom.gamma1;
    let law = |d: f64| 1.0 / (4.0 * d * d + g1 * g1);
    let k = rows[0].absorption_fraction / law(rows[0].delta);
    let worst = rows
        .iter()
        .map(|r| rel(r.absorption_fraction, k * law(r.delta)))
        .fold(0.0, f64::max);
    outcome(
        (decade(rad) || decade(hz)) && worst < 0.01,
        format!(
            "A(1 GHz) = {rad:.4} as 1e9 rad/s, {hz:.3e} as 2 pi 1e9 rad/s; law deviation {:.3}% over 1e10-1e13",
            100.0 * worst
        ),
    )
}

fn surface_atom() -> AtomParams {
    let s = TpaScenario::nominal();
    let r = total_rate(&s).unwrap();
    s.atom.with_field(r.beam_a.surface_intensity.sqrt())
}

fn draws(n: usize) -> Vec<AtomParams> {
    let mut rng = ChaCha8Rng::seed_from_u64(2024);
    let mut log_uniform = |lo: f64, hi: f64| rng.gen_range(f64::ln(lo)..f64::ln(hi)).exp();
    let base = TpaScenario::nominal().atom;
    (0..n)
        .map(|_| {
            let (g1, g2) = (log_uniform(1e8, 1e12), log_uniform(1e8, 1e12));
            let delta = log_uniform(1e9, 1e13);
            let (m1, m2) = (log_uniform(1e7, 1e11) * HBAR, log_uniform(1e7, 1e11) * HBAR);
            AtomParams {
                gamma1: g1,
                gamma2: g2,
                delta,
                ..base
            }
            .with_couplings(m1, m2)
        })
        .collect()
}

fn criterion_5() -> Outcome {
    let start = Instant::now();
    let mut sets = vec![(surface_atom(), 10.0 / 1e9)];
    sets.extend(draws(20).into_iter().map(|p| (p, 10.0 / p.gamma1.max(p.gamma2))));
    let mut worst = 0.0f64;
    for (p, t_max) in &sets {
        match verify_factorization(p, &AmplitudeVector4::ground(), *t_max, 25) {
            Ok(e) => worst = worst.max(e),
            Err(e) => return outcome(false, e.to_string()),
        }
    }
    let elapsed = start.elapsed();
    outcome(
        worst < 1e-7 && elapsed < Duration::from_secs(30),
        format!(
            "worst gap {worst:.2e} over {} parameter sets in {:.2} s",
            sets.len(),
            elapsed.as_secs_f64()
        ),
    )
}

fn criterion_6() -> Outcome {
    let p = surface_atom();
    let field4 = (p.m1 / p.d1).powi(4);
    let steady = perturbative_p2(&p, 50.0 / p.gamma1.min(p.gamma2)).unwrap() * p.gamma2;
    let rate_gap = rel(steady, local_steady_rate(&p, field4));
    let grid: Vec<f64> = (1..=300).map(|i| 10.0 / p.gamma1 * i as f64 / 300.0).collect();
    let ode = perturbative_p2_profile(&p, &grid).unwrap();
    let closed: Vec<f64> = grid
        .iter()
        .map(|&t| analytic_p2(&p, field4, t).unwrap())
        .collect();
    let n = grid.len() as f64;
    let (mo, mc) = (ode.iter().sum::<f64>() / n, closed.iter().sum::<f64>() / n);
    let cov: f64 = ode.iter().zip(&closed).map(|(o, c)| (o - mo) * (c - mc)).sum();
    let vo: f64 = ode.iter().map(|o| (o - mo).powi(2)).sum();
    let vc: f64 = closed.iter().map(|c| (c - mc).powi(2)).sum();
    let corr = cov / (vo * vc).sqrt();
    let constant = ode.iter().zip(&closed).map(|(o, c)| o / c).sum::<f64>() / n;
    outcome(
        rate_gap < 1e-6 && corr > 0.999,
        format!("steady-state gap {rate_gap:.1e}; correlation {corr:.9}; ODE / closed form = {constant:.6}"),
    )
}

fn j_oracle(n: i32, x: f64) -> f64 {
    let m = 1024;
    (0..m)
        .map(|i| {
            let t = 2.0 * PI * i as f64 / m as f64;
            (n as f64 * t - x * t.sin()).cos()
        })
        .sum::<f64>()
        / m as f64
}

fn k_oracle(n: i32, x: f64) -> f64 {
    let h = 0.01;
    let mut sum = 0.5;
    for i in 1.. {
        let t = i as f64 * h;
        let s = (0.5 * t).sinh();
        let term = (-2.0 * x * s * s).exp() * (n as f64 * t).cosh();
        sum += term;
        if term < 1e-20 * sum {
            break;
        }
    }
    sum * h * (-x).exp()
}

fn criterion_7() -> Outcome {
    let orders = [BesselOrder::Zero, BesselOrder::One, BesselOrder::Two];
    let mut table = 0.0f64;
    for i in 0..50 {
        let xj = 0.05 + i as f64 * (50.0 - 0.05) / 49.0 + 0.0137;
        let xk = 1e-6 * (200.0f64 / 1e-6).powf(i as f64 / 49.0);
        for (n, &order) in orders.iter().enumerate() {
            table = table.max(rel(bessel_j(order, xj).unwrap(), j_oracle(n as i32, xj)));
            table = table.max(rel(bessel_k(order, xk).unwrap(), k_oracle(n as i32, xk)));
        }
    }

    let mut interface = 0.0f64;
    let mut uwv = 0.0f64;
    for lambda in [778.1e-9, 780.24e-9, 775.97e-9] {
        for i in 0..41 {
            let d = (200.0 + 10.0 * i as f64) * 1e-9;
            let m = match WaveguideGeometry::silica(d, lambda).and_then(|g| solve_he11(&g)) {
                Ok(m) => m,
                Err(e) => return outcome(false, e.to_string()),
            };
            interface = interface_mismatch(&m).into_iter().fold(interface, f64::max);
            uwv = uwv.max(rel(m.u * m.u + m.w * m.w, m.v * m.v));
        }
    }

    let s = TpaScenario::nominal();
    let (a, b) = beam_modes(&s).unwrap();
    let norm = norm_integral(&a.mode).unwrap();
    let f4 = field4_integral_beyond(&a, &b, a.mode.radius, 1.0, &s.quadrature).unwrap();
    let mut rng = ChaCha8Rng::seed_from_u64(7);
    let radius = a.mode.radius;
    let n1sq = a.mode.n_core().powi(2);
    let mut monte_carlo = |r0: f64, r1: f64, f: &dyn Fn(f64, f64) -> f64| {
        let (strata, per) = (500, 400);
        let width = (r1 - r0) / strata as f64;
        (0..strata)
            .map(|k| {
                let acc: f64 = (0..per)
                    .map(|_| {
                        let r = r0 + (k as f64 + rng.gen::<f64>()) * width;
                        let phi = 2.0 * PI * rng.gen::<f64>();
                        f(r, phi) * r
                    })
                    .sum();
                acc / per as f64 * width * 2.0 * PI
            })
            .sum::<f64>()
    };
    let energy = monte_carlo(0.0, norm.r_max, &|r, phi| {
        let n2 = if r < radius { n1sq } else { 1.0 };
        n2 * VACUUM_PERMITTIVITY * field_at(&a.mode, r, phi).magnitude_sq
    });
    let quartic = monte_carlo(radius, f4.r_max, &|r, phi| {
        a.intensity(r, phi) * b.intensity(r, phi)
    });
    let (mc_energy, mc_quartic) = (rel(energy, norm.total()), rel(quartic, f4.value));

    outcome(
        table < 1e-10 && interface < 1e-6 && uwv < 1e-10 && mc_energy < 0.01 && mc_quartic < 0.01,
        format!(
            "oracle {table:.1e}, interface {interface:.1e}, U^2+W^2-V^2 {uwv:.1e}, \
             Monte Carlo {:.3}% / {:.3}%",
            100.0 * mc_energy,
            100.0 * mc_quartic
        ),
    )
}

fn criterion_8() -> Outcome {
    let s = TpaScenario::nominal();
    let r2 = |x: TpaScenario| total_rate(&x).map(|r| r.r2_total);
    let run = || -> tpa_core::Result<[f64; 4]> {
        let base = r2(s)?;
        Ok([
            r2(TpaScenario {
                quantization_length: 2.0,
                ..s
            })? / base,
            r2(TpaScenario {
                density: 3.0 * s.density,
                ..s
            })? / base,
            r2(TpaScenario {
                taper_length: 0.5 * s.taper_length,
                ..s
            })? / base,
            r2(s.with_powers(3e-3, 3e-3))? / base,
        ])
    };
    match run() {
        Ok(ratios) => {
            let expected = [1.0, 3.0, 0.5, 9.0];
            let worst = ratios
                .iter()
                .zip(expected)
                .map(|(r, e)| rel(*r, e))
                .fold(0.0, f64::max);
            outcome(
                worst < 1e-10,
                format!("L_Q, density, length, power ratios {ratios:.12?}; worst gap {worst:.1e}"),
            )
        }
        Err(e) => outcome(false, e.to_string()),
    }
}

fn main() -> ExitCode {
    let criteria: [Criterion; 8] = [
        ("nominal total rate", criterion_1),
        ("fractional absorption consistency", criterion_2),
        ("optimal diameter", criterion_3),
        ("detuning behavior", criterion_4),
        ("factorization theorem", criterion_5),
        ("perturbative and steady-state chain", criterion_6),
        ("mode solver and field correctness", criterion_7),
        ("cancellation and scaling laws", criterion_8),
    ];
    let mut failed = 0;
    for (i, (name, check)) in criteria.iter().enumerate() {
        let o = check();
        failed += usize::from(!o.passed);
        let tag = if o.passed { "PASS" } else { "FAIL" };
        println!("criterion {} [{tag}] {name}: {}", i + 1, o.detail);
    }
    println!(
        "acceptance: {} of {} criteria passed",
        criteria.len() - failed,
        criteria.len()
    );
    if failed == 0 {
        ExitCode::SUCCESS
    } else {
        ExitCode::FAILURE
    }
}
