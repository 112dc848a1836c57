// SPDX-License-Identifier: Apache-2.0

//! Adaptive 8(5,3) Dormand-Prince integrator (Hairer's DOP853) for
//! fixed-size complex systems.

use num_complex::Complex64;

use crate::error::{Error, Result};

/// Tolerances and limits for [`integrate`].
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct OdeOptions {
    pub rel_tol: f64,
    pub abs_tol: f64,
    /// Accepted plus rejected steps before giving up.
    pub max_steps: usize,
    /// First trial step; chosen automatically when `None`.
    pub initial_step: Option<f64>,
    /// Upper bound on the step size.
    pub max_step: f64,
}

impl Default for OdeOptions {
    fn default() -> Self {
        OdeOptions {
            rel_tol: 1e-10,
            abs_tol: 1e-14,
            max_steps: 50_000_000,
            initial_step: None,
            max_step: f64::INFINITY,
        }
    }
}

type State<const N: usize> = [Complex64; N];

const SAFETY: f64 = 0.9;
const FAC_MIN: f64 = 0.333;
const FAC_MAX: f64 = 6.0;

#[allow(clippy::excessive_precision)]
mod tableau {
    pub const C2: f64 = 0.526001519587677318785587544488e-01;
    pub const C3: f64 = 0.789002279381515978178381316732e-01;
    pub const C4: f64 = 0.118350341907227396726757197510e+00;
    pub const C5: f64 = 0.281649658092772603273242802490e+00;
    pub const C6: f64 = 0.333333333333333333333333333333e+00;
    pub const C7: f64 = 0.25e+00;
    pub const C8: f64 = 0.307692307692307692307692307692e+00;
    pub const C9: f64 = 0.651282051282051282051282051282e+00;
    pub const C10: f64 = 0.6e+00;
    pub const C11: f64 = 0.857142857142857142857142857142e+00;

    pub const B1: f64 = 5.42937341165687622380535766363e-2;
    pub const B6: f64 = 4.45031289275240888144113950566e0;
    pub const B7: f64 = 1.89151789931450038304281599044e0;
    pub const B8: f64 = -5.8012039600105847814672114227e0;
    pub const B9: f64 = 3.1116436695781989440891606237e-1;
    pub const B10: f64 = -1.52160949662516078556178806805e-1;
    pub const B11: f64 = 2.01365400804030348374776537501e-1;
    pub const B12: f64 = 4.47106157277725905176885569043e-2;

    pub const BHH1: f64 = 0.244094488188976377952755905512e+00;
    pub const BHH2: f64 = 0.733846688281611857341361741547e+00;
    pub const BHH3: f64 = 0.220588235294117647058823529412e-01;

    pub const ER1: f64 = 0.1312004499419488073250102996e-01;
    pub const ER6: f64 = -0.1225156446376204440720569753e+01;
    pub const ER7: f64 = -0.4957589496572501915214079952e+00;
    pub const ER8: f64 = 0.1664377182454986536961530415e+01;
    pub const ER9: f64 = -0.3503288487499736816886487290e+00;
    pub const ER10: f64 = 0.3341791187130174790297318841e+00;
    pub const ER11: f64 = 0.8192320648511571246570742613e-01;
    pub const ER12: f64 = -0.2235530786388629525884427845e-01;

    pub const A21: f64 = 5.26001519587677318785587544488e-2;
    pub const A31: f64 = 1.97250569845378994544595329183e-2;
    pub const A32: f64 = 5.91751709536136983633785987549e-2;
    pub const A41: f64 = 2.95875854768068491816892993775e-2;
    pub const A43: f64 = 8.87627564304205475450678981324e-2;
    pub const A51: f64 = 2.41365134159266685502369798665e-1;
    pub const A53: f64 = -8.84549479328286085344864962717e-1;
    pub const A54: f64 = 9.24834003261792003115737966543e-1;
    pub const A61: f64 = 3.7037037037037037037037037037e-2;
    pub const A64: f64 = 1.70828608729473871279604482173e-1;
    pub const A65: f64 = 1.25467687566822425016691814123e-1;
    pub const A71: f64 = 3.7109375e-2;
    pub const A74: f64 = 1.70252211019544039314978060272e-1;
    pub const A75: f64 = 6.02165389804559606850219397283e-2;
    pub const A76: f64 = -1.7578125e-2;
    pub const A81: f64 = 3.70920001185047927108779319836e-2;
    pub const A84: f64 = 1.70383925712239993810214054705e-1;
    pub const A85: f64 = 1.07262030446373284651809199168e-1;
    pub const A86: f64 = -1.53194377486244017527936158236e-2;
    pub const A87: f64 = 8.27378916381402288758473766002e-3;
    pub const A91: f64 = 6.24110958716075717114429577812e-1;
    pub const A94: f64 = -3.36089262944694129406857109825e0;
    pub const A95: f64 = -8.68219346841726006818189891453e-1;
    pub const A96: f64 = 2.75920996994467083049415600797e1;
    pub const A97: f64 = 2.01540675504778934086186788979e1;
    pub const A98: f64 = -4.34898841810699588477366255144e1;
    pub const A101: f64 = 4.77662536438264365890433908527e-1;
    pub const A104: f64 = -2.48811461997166764192642586468e0;
    pub const A105: f64 = -5.90290826836842996371446475743e-1;
    pub const A106: f64 = 2.12300514481811942347288949897e1;
    pub const A107: f64 = 1.52792336328824235832596922938e1;
    pub const A108: f64 = -3.32882109689848629194453265587e1;
    pub const A109: f64 = -2.03312017085086261358222928593e-2;
    pub const A111: f64 = -9.3714243008598732571704021658e-1;
    pub const A114: f64 = 5.18637242884406370830023853209e0;
    pub const A115: f64 = 1.09143734899672957818500254654e0;
    pub const A116: f64 = -8.14978701074692612513997267357e0;
    pub const A117: f64 = -1.85200656599969598641566180701e1;
    pub const A118: f64 = 2.27394870993505042818970056734e1;
    pub const A119: f64 = 2.49360555267965238987089396762e0;
    pub const A1110: f64 = -3.0467644718982195003823669022e0;
    pub const A121: f64 = 2.27331014751653820792359768449e0;
    pub const A124: f64 = -1.05344954667372501984066689879e1;
    pub const A125: f64 = -2.00087205822486249909675718444e0;
    pub const A126: f64 = -1.79589318631187989172765950534e1;
    pub const A127: f64 = 2.79488845294199600508499808837e1;
    pub const A128: f64 = -2.85899827713502369474065508674e0;
    pub const A129: f64 = -8.87285693353062954433549289258e0;
    pub const A1210: f64 = 1.23605671757943030647266201528e1;
    pub const A1211: f64 = 6.43392746015763530355970484046e-1;
}

fn combine<const N: usize>(y: &State<N>, h: f64, terms: &[(f64, &State<N>)]) -> State<N> {
    let mut out = *y;
    for i in 0..N {
        let mut acc = Complex64::new(0.0, 0.0);
        for (c, k) in terms {
            acc += *c * k[i];
        }
        out[i] += h * acc;
    }
    out
}

fn rms_norm<const N: usize>(v: &State<N>, scale: &[f64; N]) -> f64 {
    let s: f64 = v.iter().zip(scale).map(|(x, s)| x.norm_sqr() / (s * s)).sum();
    (s / N.max(1) as f64).sqrt()
}

struct Stepper<F, const N: usize> {
    f: F,
    rtol: f64,
    atol: f64,
}

struct Trial<const N: usize> {
    y: State<N>,
    f_new: State<N>,
    err: f64,
}

impl<F, const N: usize> Stepper<F, N>
where
    F: FnMut(f64, &State<N>) -> State<N>,
{
    fn scale(&self, y: &State<N>) -> [f64; N] {
        let mut s = [0.0; N];
        for i in 0..N {
            s[i] = self.atol + self.rtol * y[i].norm();
        }
        s
    }

    fn initial_step(&mut self, t: f64, y: &State<N>, f0: &State<N>, max_step: f64) -> f64 {
        let sk = self.scale(y);
        let d0 = rms_norm(y, &sk);
        let d1 = rms_norm(f0, &sk);
        let h0 = if d0 < 1e-5 || d1 < 1e-5 {
            1e-6
        } else {
            0.01 * d0 / d1
        };
        let h0 = h0.min(max_step);
        let y1 = combine(y, h0, &[(1.0, f0)]);
        let f1 = (self.f)(t + h0, &y1);
        let mut diff = [Complex64::new(0.0, 0.0); N];
        for i in 0..N {
            diff[i] = f1[i] - f0[i];
        }
        let d2 = rms_norm(&diff, &sk) / h0;
        let dm = d1.max(d2);
        let h1 = if dm <= 1e-15 {
            (h0 * 1e-3).max(1e-6)
        } else {
            (0.01 / dm).powf(1.0 / 8.0)
        };
        (100.0 * h0).min(h1).min(max_step)
    }

    fn step(&mut self, t: f64, y: &State<N>, k1: &State<N>, h: f64) -> Trial<N> {
        use tableau::*;
        let f = &mut self.f;
        let k2 = f(t + C2 * h, &combine(y, h, &[(A21, k1)]));
        let k3 = f(t + C3 * h, &combine(y, h, &[(A31, k1), (A32, &k2)]));
        let k4 = f(t + C4 * h, &combine(y, h, &[(A41, k1), (A43, &k3)]));
        let k5 = f(t + C5 * h, &combine(y, h, &[(A51, k1), (A53, &k3), (A54, &k4)]));
        let k6 = f(t + C6 * h, &combine(y, h, &[(A61, k1), (A64, &k4), (A65, &k5)]));
        let k7 = f(
            t + C7 * h,
            &combine(y, h, &[(A71, k1), (A74, &k4), (A75, &k5), (A76, &k6)]),
        );
        let k8 = f(
            t + C8 * h,
            &combine(y, h, &[(A81, k1), (A84, &k4), (A85, &k5), (A86, &k6), (A87, &k7)]),
        );
        let k9 = f(
            t + C9 * h,
            &combine(
                y,
                h,
                &[
                    (A91, k1),
                    (A94, &k4),
                    (A95, &k5),
                    (A96, &k6),
                    (A97, &k7),
                    (A98, &k8),
                ],
            ),
        );
        let k10 = f(
            t + C10 * h,
            &combine(
                y,
                h,
                &[
                    (A101, k1),
                    (A104, &k4),
                    (A105, &k5),
                    (A106, &k6),
                    (A107, &k7),
                    (A108, &k8),
                    (A109, &k9),
                ],
            ),
        );
        let k11 = f(
            t + C11 * h,
            &combine(
                y,
                h,
                &[
                    (A111, k1),
                    (A114, &k4),
                    (A115, &k5),
                    (A116, &k6),
                    (A117, &k7),
                    (A118, &k8),
                    (A119, &k9),
                    (A1110, &k10),
                ],
            ),
        );
        let k12 = f(
            t + h,
            &combine(
                y,
                h,
                &[
                    (A121, k1),
                    (A124, &k4),
                    (A125, &k5),
                    (A126, &k6),
                    (A127, &k7),
                    (A128, &k8),
                    (A129, &k9),
                    (A1210, &k10),
                    (A1211, &k11),
                ],
            ),
        );
        let y_new = combine(
            y,
            h,
            &[
                (B1, k1),
                (B6, &k6),
                (B7, &k7),
                (B8, &k8),
                (B9, &k9),
                (B10, &k10),
                (B11, &k11),
                (B12, &k12),
            ],
        );

        let mut err5 = 0.0;
        let mut err3 = 0.0;
        for i in 0..N {
            let sk = self.atol + self.rtol * y[i].norm().max(y_new[i].norm());
            let slope = B1 * k1[i]
                + B6 * k6[i]
                + B7 * k7[i]
                + B8 * k8[i]
                + B9 * k9[i]
                + B10 * k10[i]
                + B11 * k11[i]
                + B12 * k12[i];
            let e3 = slope - BHH1 * k1[i] - BHH2 * k9[i] - BHH3 * k12[i];
            let e5 = ER1 * k1[i]
                + ER6 * k6[i]
                + ER7 * k7[i]
                + ER8 * k8[i]
                + ER9 * k9[i]
                + ER10 * k10[i]
                + ER11 * k11[i]
                + ER12 * k12[i];
            err3 += e3.norm_sqr() / (sk * sk);
            err5 += e5.norm_sqr() / (sk * sk);
        }
        let mut deno = err5 + 0.01 * err3;
        if deno <= 0.0 {
            deno = 1.0;
        }
        let err = h.abs() * err5 * (1.0 / (N.max(1) as f64 * deno)).sqrt();
        let f_new = f(t + h, &y_new);
        Trial { y: y_new, f_new, err }
    }
}

/// Integrates `dy/dt = f(t, y)` from `(t0, y0)` and returns the state at every
/// time in `t_out`, which must be non-decreasing and start at or after `t0`.
/// Steps are shortened to land exactly on each output time.
pub fn integrate<const N: usize, F>(
    f: F,
    t0: f64,
    y0: State<N>,
    t_out: &[f64],
    opts: &OdeOptions,
) -> Result<Vec<State<N>>>
where
    F: FnMut(f64, &State<N>) -> State<N>,
{
    if !(opts.rel_tol > 0.0 && opts.abs_tol > 0.0) {
        return Err(Error::domain(
            "integrator tolerance",
            opts.rel_tol.min(opts.abs_tol),
            "> 0",
        ));
    }
    let mut last = t0;
    for &t in t_out {
        if !t.is_finite() || t < last {
            return Err(Error::domain("output time", t, "finite, non-decreasing, >= t0"));
        }
        last = t;
    }

    let mut stepper = Stepper {
        f,
        rtol: opts.rel_tol,
        atol: opts.abs_tol,
    };
    let mut t = t0;
    let mut y = y0;
    let mut k1 = (stepper.f)(t, &y);
    let mut h = match opts.initial_step {
        Some(h) => h.min(opts.max_step),
        None => stepper.initial_step(t, &y, &k1, opts.max_step),
    };
    let mut steps = 0usize;
    let mut out = Vec::with_capacity(t_out.len());

    for &target in t_out {
        while t < target {
            let remaining = target - t;
            if remaining <= 16.0 * f64::EPSILON * target.abs() {
                t = target;
                break;
            }
            let last_step = h >= remaining * (1.0 - 1e-9);
            let h_try = if last_step { remaining } else { h };
            if h_try <= 16.0 * f64::EPSILON * t.abs().max(f64::MIN_POSITIVE) || steps >= opts.max_steps {
                return Err(Error::StepSizeCollapse { time: t, step: h_try });
            }
            steps += 1;
            let trial = stepper.step(t, &y, &k1, h_try);
            let err = trial.err;
            if err.is_finite() && err <= 1.0 {
                let fac = (err.powf(0.125) / SAFETY).clamp(1.0 / FAC_MAX, 1.0 / FAC_MIN);
                t = if last_step { target } else { t + h_try };
                y = trial.y;
                k1 = trial.f_new;
                if !last_step || h_try / fac < h {
                    h = (h_try / fac).min(opts.max_step);
                }
            } else {
                let fac = if err.is_finite() {
                    (err.powf(0.125) / SAFETY).min(1.0 / FAC_MIN)
                } else {
                    10.0
                };
                h = h_try / fac;
            }
        }
        out.push(y);
    }
    Ok(out)
}
