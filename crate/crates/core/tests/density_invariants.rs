// SPDX-License-Identifier: Apache-2.0

use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use tpa_core::atom::{evolve_density, AmplitudeVector4, AtomParams, DensityMatrix4};
use tpa_core::units::{dipole_from_radius, HBAR};

fn draw(rng: &mut ChaCha8Rng) -> AtomParams {
    let mut log_uniform = |lo: f64, hi: f64| rng.gen_range(f64::ln(lo)..f64::ln(hi)).exp();
    let gamma1 = log_uniform(1e8, 1e12);
    let gamma2 = log_uniform(1e8, 1e12);
    let delta = log_uniform(1e9, 1e13);
    let (m1, m2) = (log_uniform(1e7, 1e11) * HBAR, log_uniform(1e7, 1e11) * HBAR);
    AtomParams::new(
        dipole_from_radius(0.223e-9).unwrap(),
        dipole_from_radius(0.0492e-9).unwrap(),
        gamma1,
        gamma2,
        delta,
    )
    .unwrap()
    .with_couplings(m1, m2)
}

/// A mixed initial state: ground plus a little intermediate population.
fn mixed_start() -> DensityMatrix4 {
    let g = AmplitudeVector4::ground().outer();
    let i = AmplitudeVector4::basis(1).outer();
    DensityMatrix4(g.0 * Complex64::new(0.9, 0.0) + i.0 * Complex64::new(0.1, 0.0))
}

#[test]
fn hundred_random_draws_keep_a_valid_density_matrix() {
    let mut rng = ChaCha8Rng::seed_from_u64(5150);
    for k in 0..100 {
        let p = draw(&mut rng);
        let t_max = 10.0 / p.gamma1.max(p.gamma2);
        let grid: Vec<f64> = (1..=12).map(|i| t_max * i as f64 / 12.0).collect();
        let start = if k % 2 == 0 {
            AmplitudeVector4::ground().outer()
        } else {
            mixed_start()
        };
        let rho = evolve_density(&start, &p, &grid).unwrap();
        let mut last = start.trace();
        for m in &rho {
            assert!(
                m.hermiticity_error() <= 1e-12,
                "draw {k}: {:e}",
                m.hermiticity_error()
            );
            assert!(m.min_eigenvalue() >= -1e-10, "draw {k}: {:e}", m.min_eigenvalue());
            let tr = m.trace();
            assert!(
                tr > 0.0 && tr <= last + 1e-12,
                "draw {k}: trace {tr} after {last}"
            );
            last = tr;
        }
    }
}
