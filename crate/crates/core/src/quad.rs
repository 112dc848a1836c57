// SPDX-License-Identifier: Apache-2.0

//! Gauss-Legendre panel quadrature used for the cross-section integrals.

use std::f64::consts::PI;

use crate::error::{Error, Result};

/// Resolution knobs for the cross-section integrals.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct QuadratureConfig {
    /// Gauss-Legendre nodes per radial panel.
    pub nodes_per_panel: usize,
    /// Number of equal panels covering the core, [0, a].
    pub core_panels: usize,
    /// Exterior panel width in units of the field's decay length.
    pub tail_panel_width: f64,
    /// Uniform trapezoid nodes in phi.
    pub azimuth_nodes: usize,
    /// Per-panel agreement required between one rule and the rule applied
    /// to both halves; panels are bisected until they agree.
    pub rel_tol: f64,
    /// Truncate the exterior once a panel contributes less than this
    /// fraction of the running integral.
    pub tail_tol: f64,
}

impl Default for QuadratureConfig {
    fn default() -> Self {
        QuadratureConfig {
            nodes_per_panel: 16,
            core_panels: 4,
            tail_panel_width: 1.0,
            azimuth_nodes: 64,
            rel_tol: 1e-8,
            tail_tol: 1e-12,
        }
    }
}

impl QuadratureConfig {
    /// Same tolerances, twice the radial and azimuthal resolution.
    pub fn doubled(&self) -> Self {
        QuadratureConfig {
            nodes_per_panel: 2 * self.nodes_per_panel,
            core_panels: 2 * self.core_panels,
            tail_panel_width: 0.5 * self.tail_panel_width,
            azimuth_nodes: 2 * self.azimuth_nodes,
            ..*self
        }
    }

    /// Uniform azimuthal nodes on [0, 2 pi) with the common weight.
    pub(crate) fn azimuth_grid(&self) -> (Vec<f64>, f64) {
        let n = self.azimuth_nodes;
        let h = 2.0 * PI / n as f64;
        ((0..n).map(|i| i as f64 * h).collect(), h)
    }
}

/// Nodes and weights of the n-point Gauss-Legendre rule on [-1, 1].
#[derive(Debug, Clone)]
pub struct GaussLegendre {
    nodes: Vec<f64>,
    weights: Vec<f64>,
}

impl GaussLegendre {
    pub fn new(n: usize) -> Self {
        assert!(n >= 1, "Gauss-Legendre rule needs at least one node");
        let mut nodes = vec![0.0; n];
        let mut weights = vec![0.0; n];
        let m = n.div_ceil(2);
        for i in 0..m {
            // Tricomi's initial guess, then Newton on P_n.
            let mut x = (PI * (i as f64 + 0.75) / (n as f64 + 0.5)).cos();
            let mut dp = 0.0;
            for _ in 0..100 {
                let (p, d) = legendre_with_derivative(n, x);
                dp = d;
                let dx = p / d;
                x -= dx;
                if dx.abs() < 1e-16 {
                    break;
                }
            }
            let (_, d) = legendre_with_derivative(n, x);
            if d != 0.0 {
                dp = d;
            }
            let w = 2.0 / ((1.0 - x * x) * dp * dp);
            nodes[i] = -x;
            nodes[n - 1 - i] = x;
            weights[i] = w;
            weights[n - 1 - i] = w;
        }
        GaussLegendre { nodes, weights }
    }

    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }

    /// Integral of `f` over [a, b].
    pub fn integrate<F: FnMut(f64) -> f64>(&self, a: f64, b: f64, mut f: F) -> f64 {
        let half = 0.5 * (b - a);
        let mid = 0.5 * (a + b);
        self.nodes
            .iter()
            .zip(&self.weights)
            .map(|(x, w)| w * f(mid + half * x))
            .sum::<f64>()
            * half
    }
}

fn legendre_with_derivative(n: usize, x: f64) -> (f64, f64) {
    let mut p0 = 1.0;
    let mut p1 = x;
    for k in 2..=n {
        let kf = k as f64;
        let p2 = ((2.0 * kf - 1.0) * x * p1 - (kf - 1.0) * p0) / kf;
        p0 = p1;
        p1 = p2;
    }
    let p = if n == 0 { 1.0 } else { p1 };
    let d = n as f64 * (x * p1 - p0) / (x * x - 1.0);
    (p, d)
}

const MAX_BISECTION_DEPTH: u32 = 24;

/// Adaptive panel integration: accept when the rule and the rule on the two
/// halves agree to `rel_tol`, relative to the larger of `scale` and the
/// panel's own first estimate.
pub(crate) fn integrate_adaptive<F: FnMut(f64) -> f64>(
    rule: &GaussLegendre,
    a: f64,
    b: f64,
    rel_tol: f64,
    scale: f64,
    f: &mut F,
) -> Result<f64> {
    let whole = rule.integrate(a, b, &mut *f);
    refine(rule, a, b, whole, rel_tol, scale.max(whole.abs()), f, 0)
}

#[allow(clippy::too_many_arguments)]
fn refine<F: FnMut(f64) -> f64>(
    rule: &GaussLegendre,
    a: f64,
    b: f64,
    whole: f64,
    rel_tol: f64,
    scale: f64,
    f: &mut F,
    depth: u32,
) -> Result<f64> {
    let mid = 0.5 * (a + b);
    let left = rule.integrate(a, mid, &mut *f);
    let right = rule.integrate(mid, b, &mut *f);
    let refined = left + right;
    let err = (refined - whole).abs();
    if err <= rel_tol * refined.abs().max(scale) || err == 0.0 {
        return Ok(refined);
    }
    if depth >= MAX_BISECTION_DEPTH {
        return Err(Error::Quadrature {
            lower: a,
            upper: b,
            detail: format!(
                "panel estimate still changing by {err:e} (value {refined:e}) after {depth} bisections"
            ),
        });
    }
    Ok(refine(rule, a, mid, left, rel_tol, scale, f, depth + 1)?
        + refine(rule, mid, b, right, rel_tol, scale, f, depth + 1)?)
}

/// Integral over [a, b] split into `panels` equal pieces, each adaptive.
pub(crate) fn integrate_panels<F: FnMut(f64) -> f64>(
    rule: &GaussLegendre,
    a: f64,
    b: f64,
    panels: usize,
    rel_tol: f64,
    f: &mut F,
) -> Result<f64> {
    let width = (b - a) / panels as f64;
    let mut total = 0.0;
    for i in 0..panels {
        let lo = a + i as f64 * width;
        let hi = if i + 1 == panels { b } else { lo + width };
        total += integrate_adaptive(rule, lo, hi, rel_tol, 0.0, f)?;
    }
    Ok(total)
}

/// Result of a semi-infinite integration.
#[derive(Debug, Clone, Copy)]
pub(crate) struct TailIntegral {
    pub value: f64,
    pub r_max: f64,
}

const MAX_TAIL_PANELS: usize = 100_000;

/// Integral over [start, inf) of a positive, eventually decaying integrand.
/// Panels start at `first_width` and grow by half each step up to
/// `max_width`; integration stops once a panel adds less than `tail_tol` of
/// the running total.
pub(crate) fn integrate_tail<F: FnMut(f64) -> f64>(
    rule: &GaussLegendre,
    start: f64,
    first_width: f64,
    max_width: f64,
    rel_tol: f64,
    tail_tol: f64,
    f: &mut F,
) -> Result<TailIntegral> {
    let mut total = 0.0f64;
    let mut lo = start;
    let mut width = first_width.min(max_width);
    for _ in 0..MAX_TAIL_PANELS {
        let hi = lo + width;
        let piece = integrate_adaptive(rule, lo, hi, rel_tol, total.abs() * 1e-3, f)?;
        total += piece;
        lo = hi;
        if piece.abs() <= tail_tol * total.abs() {
            return Ok(TailIntegral {
                value: total,
                r_max: lo,
            });
        }
        width = (1.5 * width).min(max_width);
    }
    Err(Error::Quadrature {
        lower: start,
        upper: lo,
        detail: format!("exterior integrand not negligible after {MAX_TAIL_PANELS} panels"),
    })
}
