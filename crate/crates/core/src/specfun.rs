// SPDX-License-Identifier: Apache-2.0

//! Bessel functions J0, J1, J2 and modified Bessel functions K0, K1, K2 of
//! real argument, plus the derivatives J1' and K1'.
//!
//! J uses the power series for x < 1 and Miller's backward recurrence,
//! normalised with J0 + 2 (J2 + J4 + ...) = 1, above that. K uses the
//! logarithmic series for x <= 2 and Steed's continued fraction (the CF2 of
//! Temme's method with order zero) above. Orders 1 and 2 of K follow from the
//! continued fraction's ratio and the three-term recurrence.

use std::f64::consts::PI;

use crate::error::{Error, Result};

const EULER_GAMMA: f64 = 0.577_215_664_901_532_9;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum BesselOrder {
    Zero,
    One,
    Two,
}

impl BesselOrder {
    pub fn index(self) -> usize {
        match self {
            BesselOrder::Zero => 0,
            BesselOrder::One => 1,
            BesselOrder::Two => 2,
        }
    }
}

impl TryFrom<u32> for BesselOrder {
    type Error = Error;

    fn try_from(n: u32) -> Result<Self> {
        match n {
            0 => Ok(BesselOrder::Zero),
            1 => Ok(BesselOrder::One),
            2 => Ok(BesselOrder::Two),
            _ => Err(Error::domain("Bessel order", n as f64, "0, 1 or 2")),
        }
    }
}

/// Bessel function of the first kind, J_n(x), for x >= 0.
pub fn bessel_j(n: BesselOrder, x: f64) -> Result<f64> {
    if !(x >= 0.0 && x.is_finite()) {
        return Err(Error::domain("Bessel J argument", x, ">= 0"));
    }
    Ok(j012(x)[n.index()])
}

/// Modified Bessel function of the second kind, K_n(x), for x > 0.
pub fn bessel_k(n: BesselOrder, x: f64) -> Result<f64> {
    if x.is_nan() || x <= 0.0 {
        return Err(Error::domain("Bessel K argument", x, "> 0"));
    }
    Ok(k012(x)[n.index()])
}

/// J1'(x) = J0(x) - J1(x)/x, with the limit 1/2 at the origin.
pub fn bessel_j1_prime(x: f64) -> Result<f64> {
    if !(x >= 0.0 && x.is_finite()) {
        return Err(Error::domain("Bessel J argument", x, ">= 0"));
    }
    let [j0, j1, _] = j012(x);
    Ok(j1_prime_from(x, j0, j1))
}

/// K1'(x) = -(K0(x) + K2(x))/2.
pub fn bessel_k1_prime(x: f64) -> Result<f64> {
    if x.is_nan() || x <= 0.0 {
        return Err(Error::domain("Bessel K argument", x, "> 0"));
    }
    let [k0, _, k2] = k012(x);
    Ok(-0.5 * (k0 + k2))
}

pub(crate) fn j1_prime_from(x: f64, j0: f64, j1: f64) -> f64 {
    if x == 0.0 {
        0.5
    } else if x < 1e-4 {
        // J1'(x) = 1/2 - 3x^2/16 + ...
        0.5 - 3.0 * x * x / 16.0
    } else {
        j0 - j1 / x
    }
}

/// [J0(x), J1(x), J2(x)] for x >= 0 (unchecked).
pub(crate) fn j012(x: f64) -> [f64; 3] {
    if x == 0.0 {
        [1.0, 0.0, 0.0]
    } else if x < 1.0 {
        [j_series(0, x), j_series(1, x), j_series(2, x)]
    } else {
        j_miller(x)
    }
}

fn j_series(n: u32, x: f64) -> f64 {
    let half = 0.5 * x;
    let mut term = half.powi(n as i32);
    for k in 1..=n {
        term /= k as f64;
    }
    let t = -half * half;
    let mut sum = term;
    for k in 1..60 {
        term *= t / (k as f64 * (k + n) as f64);
        sum += term;
        if term.abs() < 1e-18 * sum.abs() {
            break;
        }
    }
    sum
}

fn j_miller(x: f64) -> [f64; 3] {
    let start = (x + 40.0 + 8.0 * x.sqrt()) as usize;
    let start = start + start % 2;
    let two_over_x = 2.0 / x;
    let mut above = 0.0;
    let mut current = 1e-30;
    let mut norm = 0.0;
    let mut out = [0.0; 3];
    for k in (0..start).rev() {
        // J_k = (2(k+1)/x) J_{k+1} - J_{k+2}
        let next = (k + 1) as f64 * two_over_x * current - above;
        above = current;
        current = next;
        if k % 2 == 0 && k > 0 {
            norm += 2.0 * current;
        }
        if k <= 2 {
            out[k] = current;
        }
        if current.abs() > 1e200 {
            current *= 1e-200;
            above *= 1e-200;
            norm *= 1e-200;
            for v in out.iter_mut() {
                *v *= 1e-200;
            }
        }
    }
    norm += current;
    [out[0] / norm, out[1] / norm, out[2] / norm]
}

/// [K0(x), K1(x), K2(x)] for x > 0 (unchecked). Underflows to zero for
/// x beyond ~700.
pub(crate) fn k012(x: f64) -> [f64; 3] {
    let (k0, k1) = if x <= 2.0 { k01_series(x) } else { k01_steed(x) };
    [k0, k1, k0 + 2.0 * k1 / x]
}

fn k01_series(x: f64) -> (f64, f64) {
    let t = 0.25 * x * x;
    let log_term = (0.5 * x).ln() + EULER_GAMMA;

    // I0 = sum t^k/(k!)^2, K0 harmonic tail sum H_k t^k/(k!)^2
    let mut a = 1.0;
    let mut i0 = 1.0;
    let mut h_sum0 = 0.0;
    // I1/(x/2) = sum t^k/(k!(k+1)!), K1 tail sum (H_k + H_{k+1}) t^k/(k!(k+1)!)
    let mut b = 1.0;
    let mut i1s = 1.0;
    let mut h_sum1 = 1.0;
    let mut harmonic = 0.0;
    for k in 1..60 {
        let kf = k as f64;
        harmonic += 1.0 / kf;
        a *= t / (kf * kf);
        b *= t / (kf * (kf + 1.0));
        i0 += a;
        h_sum0 += harmonic * a;
        i1s += b;
        h_sum1 += (2.0 * harmonic + 1.0 / (kf + 1.0)) * b;
        if a < 1e-18 * i0 && b < 1e-18 * i1s {
            break;
        }
    }
    let i1 = 0.5 * x * i1s;
    let k0 = -log_term * i0 + h_sum0;
    let k1 = 1.0 / x + log_term * i1 - 0.25 * x * h_sum1;
    (k0, k1)
}

fn k01_steed(x: f64) -> (f64, f64) {
    let a1 = 0.25;
    let mut b = 2.0 * (1.0 + x);
    let mut d = 1.0 / b;
    let mut h = d;
    let mut delh = d;
    let mut q1 = 0.0;
    let mut q2 = 1.0;
    let mut q = a1;
    let mut c = a1;
    let mut a = -a1;
    let mut s = 1.0 + q * delh;
    for i in 1..10_000 {
        let fi = i as f64;
        a -= 2.0 * fi;
        c = -a * c / (fi + 1.0);
        let qnew = (q1 - b * q2) / a;
        q1 = q2;
        q2 = qnew;
        q += c * qnew;
        b += 2.0;
        d = 1.0 / (b + a * d);
        delh *= b * d - 1.0;
        h += delh;
        let dels = q * delh;
        s += dels;
        if (dels / s).abs() < 1e-17 {
            break;
        }
    }
    h *= a1;
    let k0 = (PI / (2.0 * x)).sqrt() * (-x).exp() / s;
    let k1 = k0 * (x + 0.5 - h) / x;
    (k0, k1)
}
