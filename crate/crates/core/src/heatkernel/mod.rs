//! Heat kernel of the sub-Laplacian on H^n.
//!
//! `h(t,(z,u)) = (1/π) ∫₀^∞ (λ / (4π sinh λt))^n exp(−(λ/4)|z|² coth λt) cos λu dλ`.
//! The diffusion it governs has generator `Σ_{i≤2n} Z_i²`, so each horizontal
//! coordinate has variance `2t`.

mod moments;
mod sampler;

use std::f64::consts::PI;

use once_cell::sync::Lazy;
use serde::{Deserialize, Serialize};

pub use moments::{hk_moment, hk_moment_quadrature, MomentEstimate, MomentMethod};
pub use sampler::{heat_semigroup, sample_diffusion, HeatCloud};

use crate::config::QuadratureSpec;
use crate::error::{Error, Result};
use crate::hgroup::Point;
use crate::quadrature::{gauss_legendre, Rule};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum KernelMethod {
    Quadrature,
    MonteCarlo,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct KernelEval {
    pub t: f64,
    pub point: Point,
    pub value: f64,
    pub method: KernelMethod,
    pub error: f64,
}

/// `λ / sinh λ` and `λ coth λ` without cancellation near zero.
#[inline]
fn lambda_ratios(l: f64) -> (f64, f64) {
    if l < 1e-3 {
        let l2 = l * l;
        (1.0 - l2 / 6.0 + 7.0 * l2 * l2 / 360.0, 1.0 + l2 / 3.0 - l2 * l2 / 45.0)
    } else if l > 40.0 {
        // sinh overflow is far away, but e^{-2λ} is already below roundoff
        (2.0 * l * (-l).exp(), l)
    } else {
        let s = l.sinh();
        (l / s, l * l.cosh() / s)
    }
}

/// Upper λ where the integrand envelope drops below `tol` of its value at 0.
fn lambda_cutoff(n: usize, r2: f64, tol: f64) -> f64 {
    let target = tol.ln();
    let mut l: f64 = 0.5;
    loop {
        let (rs, rc) = lambda_ratios(l);
        let log_env = n as f64 * rs.ln() - 0.25 * r2 * (rc - 1.0);
        if log_env < target || l > 400.0 {
            return l;
        }
        l += 0.5;
    }
}

static GL_CACHE: Lazy<parking_lot::Mutex<std::collections::HashMap<usize, std::sync::Arc<Rule>>>> =
    Lazy::new(|| parking_lot::Mutex::new(std::collections::HashMap::new()));

pub(crate) fn gl_rule(n: usize) -> std::sync::Arc<Rule> {
    GL_CACHE
        .lock()
        .entry(n)
        .or_insert_with(|| std::sync::Arc::new(gauss_legendre(n)))
        .clone()
}

fn h1_on_rule(n: usize, r2: f64, u: f64, rule: &Rule, tol: f64) -> f64 {
    let big_l = lambda_cutoff(n, r2, tol);
    let au = u.abs();
    let mut width: f64 = 2.0;
    if au > 0.0 {
        width = width.min(6.0 / au);
    }
    let panels = (big_l / width).ceil().max(1.0) as usize;
    let h = big_l / panels as f64;
    let norm = (4.0 * PI).powi(-(n as i32));
    let mut total = 0.0;
    for p in 0..panels {
        let c = (p as f64 + 0.5) * h;
        let mut acc = 0.0;
        for (x, w) in rule.iter() {
            let l = c + 0.5 * h * x;
            let (rs, rc) = lambda_ratios(l);
            acc += w * rs.powi(n as i32) * (-0.25 * r2 * rc).exp() * (l * u).cos();
        }
        total += 0.5 * h * acc;
    }
    // (λ/(4π sinh λ))^n = (4π)^{-n} (λ/sinh λ)^n, then the 1/π prefactor
    total * norm / PI
}

/// `h(1, (z,u))` from `r2 = |z|²`.
pub fn h1(n: usize, r2: f64, u: f64) -> f64 {
    let spec = QuadratureSpec::default();
    h1_on_rule(n, r2, u, &gl_rule(spec.lambda_nodes), spec.tail_tol)
}

pub fn h1_with(n: usize, r2: f64, u: f64, spec: &QuadratureSpec) -> f64 {
    h1_on_rule(n, r2, u, &gl_rule(spec.lambda_nodes), spec.tail_tol)
}

/// `h(t, ·)` from `|z|²` and `u`, via `h(t,x) = t^{−Q/2} h(1, δ_{1/√t} x)`.
pub fn heat_kernel(n: usize, t: f64, r2: f64, u: f64) -> Result<f64> {
    if !(t > 0.0) || !t.is_finite() {
        return Err(Error::NonPositiveTime(t));
    }
    let q = (2 * n + 2) as f64;
    Ok(t.powf(-0.5 * q) * h1(n, r2 / t, u / t))
}

/// Heat kernel with an error estimate from a lower-order rule on the same
/// panels.
pub fn hk_eval(t: f64, x: &Point) -> Result<KernelEval> {
    hk_eval_with(t, x, &QuadratureSpec::default())
}

pub fn hk_eval_with(t: f64, x: &Point, spec: &QuadratureSpec) -> Result<KernelEval> {
    if !(t > 0.0) || !t.is_finite() {
        return Err(Error::NonPositiveTime(t));
    }
    spec.validate()?;
    let n = x.n();
    let q = (2 * n + 2) as f64;
    let z2 = x.horizontal().iter().map(|v| v * v).sum::<f64>() / t;
    let u = x.center() / t;
    let scale = t.powf(-0.5 * q);
    let fine = h1_on_rule(n, z2, u, &gl_rule(spec.lambda_nodes), spec.tail_tol);
    let coarse = h1_on_rule(n, z2, u, &gl_rule((spec.lambda_nodes * 3 / 4).max(4)), spec.tail_tol);
    let value = scale * fine;
    if !value.is_finite() {
        return Err(Error::NonConvergence(format!("heat kernel at t = {t}")));
    }
    // the envelope bounds the truncated tail
    let env = scale * (4.0 * PI).powi(-(n as i32)) / PI * spec.tail_tol * lambda_cutoff(n, z2, spec.tail_tol);
    Ok(KernelEval {
        t,
        point: x.clone(),
        value: value.max(0.0),
        method: KernelMethod::Quadrature,
        error: scale * (fine - coarse).abs() + env,
    })
}

/// `∂_t h + L h` at `(t, x)` by central differences of step `step`: in `t`,
/// and along the one-parameter subgroups `x·exp(±step e_i)` for the frame.
/// The truncation error is `O(step²)`.
pub fn pde_residual(t: f64, x: &Point, step: f64) -> Result<f64> {
    if !(t > step) {
        return Err(Error::NonPositiveTime(t - step));
    }
    let n = x.n();
    let xc = x.coords();
    let dim = xc.len();
    let h = |t: f64, y: &[f64]| -> Result<f64> {
        let r2 = y[..dim - 1].iter().map(|v| v * v).sum::<f64>();
        heat_kernel(n, t, r2, y[dim - 1])
    };
    let h0 = h(t, xc)?;
    let dt = (h(t + step, xc)? - h(t - step, xc)?) / (2.0 * step);
    let mut lap = 0.0;
    let mut w = vec![0.0; dim];
    let mut e = vec![0.0; dim];
    for i in 0..dim - 1 {
        let mut pair = 0.0;
        for sign in [1.0, -1.0] {
            e.iter_mut().for_each(|v| *v = 0.0);
            e[i] = sign * step;
            crate::hgroup::mul_into(xc, &e, &mut w);
            pair += h(t, &w)?;
        }
        lap -= (pair - 2.0 * h0) / (step * step);
    }
    Ok(dt + lap)
}
