//! Spatial route: the subtracted integral against `P_α` in gauge-polar
//! coordinates centered at `x`.
//!
//! With `G(ρ) = ∫_S [φ(x·δ_ρω) − T(δ_ρω)] P_α(ω) dS(ω)` the value is
//! `∫₀^∞ ρ^{α−1} G(ρ) dρ`. Odd weights cancel on the symmetric sphere rule,
//! so near zero `G = v^{m+1} H(v)` with `v = ρ²` and `H` smooth; that piece
//! uses Gauss–Jacobi in `v`. The polynomial part beyond the inner ball is
//! integrated in closed form.
//!
//! Two ways to handle the rest:
//! * `Polar`: keep polar coordinates out to a radius where the field is
//!   negligible. Good when `φ(x·y)` is well spread around `y = 0`.
//! * `Split`: a smooth radial cutoff `χ` keeps polar coordinates on a
//!   bounded ball, and `∫ φ(w)(1 − χ)P_α(x⁻¹w) dw` is done with a product
//!   rule over the support box of `φ`. Good for far `x`, where the polar
//!   shells would need very fine angular rules (n = 1 only).

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::directions::{dilate_into, Directions};
use super::{taylor_at_extended, PsiResult, Route, StripSelector};
use crate::config::QuadratureSpec;
use crate::error::{Error, Result};
use crate::hgroup::{koranyi_norm_slice, mul_into, Point};
use crate::quadrature::{composite, gauss_legendre, geometric_breaks, power_weighted, uniform_breaks, Rule};
use crate::riesz::{profile, Profile};
use crate::testfn::Field;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum SpatialMode {
    /// `Polar` within `polar_reach` of the identity, else `Split` when it
    /// applies.
    Auto,
    Polar,
    Split,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SpatialOptions {
    pub mode: SpatialMode,
    /// Repeat on a coarser rule and report the difference.
    pub error_estimate: bool,
    /// Horizontal-sphere nodes per angle.
    pub sphere_nodes: usize,
    /// Radius of the Gauss–Jacobi ball.
    pub rho_inner: f64,
    /// Outer radius of the cutoff in `Split` mode.
    pub rho_outer: f64,
    /// Polar truncation radius for fields without a support box.
    pub r_max: f64,
    /// Largest `‖x‖_K` handled in polar form by `Auto`.
    pub polar_reach: f64,
    /// Level defining the support box.
    pub support_tol: f64,
}

impl Default for SpatialOptions {
    fn default() -> Self {
        Self {
            mode: SpatialMode::Auto,
            error_estimate: true,
            sphere_nodes: 48,
            rho_inner: 1.0,
            rho_outer: 3.0,
            r_max: 64.0,
            polar_reach: 3.0,
            support_tol: 1e-13,
        }
    }
}

/// `ψ(x, α)` by the spatial route with default options.
pub fn psi_spatial<F: Field + ?Sized>(field: &F, x: &Point, alpha: f64, spec: &QuadratureSpec) -> Result<PsiResult> {
    psi_spatial_with(field, x, alpha, spec, &SpatialOptions::default())
}

pub fn psi_spatial_with<F: Field + ?Sized>(
    field: &F,
    x: &Point,
    alpha: f64,
    spec: &QuadratureSpec,
    opts: &SpatialOptions,
) -> Result<PsiResult> {
    let n = x.n();
    let strip = StripSelector::new(alpha, n)?;
    if strip.at_pole {
        return Err(Error::Pole(alpha));
    }
    let mode = match opts.mode {
        SpatialMode::Auto
            if n == 1
                && x.koranyi_norm() > opts.polar_reach
                && field.support_box(x.coords().len(), opts.support_tol).is_some() =>
        {
            SpatialMode::Split
        }
        SpatialMode::Auto => SpatialMode::Polar,
        m => m,
    };
    if mode == SpatialMode::Split && n != 1 {
        return Err(Error::Unsupported("the split spatial route is implemented for n = 1".into()));
    }
    let value = evaluate(field, x, &strip, spec, opts, mode)?;
    let error = if opts.error_estimate {
        let coarse_opts = SpatialOptions {
            sphere_nodes: (opts.sphere_nodes * 3 / 4).max(8),
            ..opts.clone()
        };
        (value - evaluate(field, x, &strip, &spec.coarse(), &coarse_opts, mode)?).abs()
    } else {
        0.0
    };
    if !value.is_finite() {
        return Err(Error::NonConvergence(format!("spatial integral at alpha = {alpha}")));
    }
    Ok(PsiResult {
        value,
        error,
        alpha,
        route: Route::Spatial,
        strip: strip.m,
        moments: None,
    })
}

/// Smooth radial cutoff: one below `a`, zero above `b`.
fn cutoff(rho: f64, a: f64, b: f64) -> f64 {
    if rho <= a {
        return 1.0;
    }
    if rho >= b {
        return 0.0;
    }
    let f = |t: f64| if t <= 0.0 { 0.0 } else { (-1.0 / t).exp() };
    let t = (b - rho) / (b - a);
    f(t) / (f(t) + f(1.0 - t))
}

struct Shell<'a, F: ?Sized> {
    field: &'a F,
    x: &'a [f64],
    dirs: &'a Directions,
    /// `P_α(ω_k)` per latitude node.
    pvals: Vec<f64>,
    parts: Vec<f64>,
    stride: usize,
}

impl<F: Field + ?Sized> Shell<'_, F> {
    /// `G(ρ)`.
    fn eval(&self, rho: f64) -> f64 {
        let dim = self.dirs.dim;
        let mut y = vec![0.0; dim];
        let mut w = vec![0.0; dim];
        let mut acc = 0.0;
        let mut pow = vec![1.0; self.stride];
        for k in 1..self.stride {
            pow[k] = pow[k - 1] * rho;
        }
        for d in 0..self.dirs.len() {
            dilate_into(rho, self.dirs.point(d), &mut y);
            mul_into(self.x, &y, &mut w);
            let mut v = self.field.value(&w);
            if self.stride > 0 {
                let t = &self.parts[d * self.stride..(d + 1) * self.stride];
                v -= t.iter().zip(&pow).map(|(a, b)| a * b).sum::<f64>();
            }
            acc += self.dirs.weights[d] * self.pvals[self.dirs.theta[d]] * v;
        }
        acc
    }

    /// `∫_S t_W(ω) P_α(ω) dS` for each weight `W`.
    fn polynomial_shells(&self) -> Vec<f64> {
        let mut a = vec![0.0; self.stride];
        for d in 0..self.dirs.len() {
            let wp = self.dirs.weights[d] * self.pvals[self.dirs.theta[d]];
            for (k, ak) in a.iter_mut().enumerate() {
                *ak += wp * self.parts[d * self.stride + k];
            }
        }
        a
    }
}

fn evaluate<F: Field + ?Sized>(
    field: &F,
    x: &Point,
    strip: &StripSelector,
    spec: &QuadratureSpec,
    opts: &SpatialOptions,
    mode: SpatialMode,
) -> Result<f64> {
    let n = x.n();
    let dim = 2 * n + 1;
    let alpha = strip.alpha;
    let prof = profile(n, alpha, spec)?;
    let inv_gamma = prof.recip_gamma();
    let dirs = Directions::new(prof.table(), opts.sphere_nodes)?;
    let (parts, stride, k) = match strip.taylor_degree() {
        Some(deg) => {
            let t = taylor_at_extended(field, x, deg)?;
            let d = t.degree();
            (dirs.homogeneous_parts(&t), d + 1, (d + 1) / 2)
        }
        None => (Vec::new(), 0, 0),
    };
    let shell = Shell {
        field,
        x: x.coords(),
        dirs: &dirs,
        pvals: prof.radial_values().iter().map(|v| v * inv_gamma).collect(),
        parts,
        stride,
    };
    let a_w = shell.polynomial_shells();

    let ra = opts.rho_inner;
    // ½ ∫₀^{ra²} v^{α/2+m} H(v) dv with H = G(√v)/v^{m+1}
    let jac = power_weighted(spec.jacobi_nodes, alpha / 2.0 + k as f64 - 1.0, ra * ra);
    let inner: Vec<f64> = jac
        .nodes
        .par_iter()
        .map(|&v| shell.eval(v.sqrt()) / v.powi(k as i32))
        .collect();
    let mut total = 0.5 * jac.weights.iter().zip(&inner).map(|(w, h)| w * h).sum::<f64>();

    // every subtracted even weight W carries A_W R^{α+W}/(α+W): the tail past R
    // when α + W < 0, the part of the integral owed back when α + W > 0
    let even_w = (0..stride).step_by(2);
    match mode {
        SpatialMode::Polar => {
            let r_max = polar_radius(field, x, opts);
            let panels = ((r_max / ra).log2().ceil() as usize).max(1);
            let rule = composite(&geometric_breaks(ra, r_max, panels), spec.panel_nodes);
            total += radial_sum(&shell, &rule, alpha, |_| 1.0);
            for wt in even_w {
                let e = alpha + wt as f64;
                total += a_w[wt] * r_max.powf(e) / e;
            }
        }
        SpatialMode::Split | SpatialMode::Auto => {
            let rb = opts.rho_outer;
            let rule = composite(&uniform_breaks(ra, rb, 2), spec.panel_nodes);
            total += radial_sum(&shell, &rule, alpha, |r| cutoff(r, ra, rb));
            for wt in even_w {
                let e = alpha + wt as f64;
                let j: f64 = rule
                    .iter()
                    .map(|(r, w)| w * r.powf(e - 1.0) * (1.0 - cutoff(r, ra, rb)))
                    .sum();
                total -= a_w[wt] * (j - rb.powf(e) / e);
            }
            total += far_box(field, x, &prof, spec, opts, dim)?;
        }
    }
    Ok(total)
}

fn radial_sum<F: Field + ?Sized>(shell: &Shell<'_, F>, rule: &Rule, alpha: f64, chi: impl Fn(f64) -> f64 + Sync) -> f64 {
    let vals: Vec<f64> = rule
        .nodes
        .par_iter()
        .map(|&r| {
            let c = chi(r);
            if c == 0.0 {
                0.0
            } else {
                c * r.powf(alpha - 1.0) * shell.eval(r)
            }
        })
        .collect();
    rule.weights.iter().zip(&vals).map(|(w, v)| w * v).sum()
}

/// Radius past which `φ(x·y)` is negligible, from the support box and the
/// triangle inequality for the Korányi gauge.
fn polar_radius<F: Field + ?Sized>(field: &F, x: &Point, opts: &SpatialOptions) -> f64 {
    let dim = x.coords().len();
    match field.support_box(dim, opts.support_tol) {
        Some((c, h)) => {
            let z2: f64 = (0..dim - 1).map(|i| (c[i].abs() + h[i]).powi(2)).sum();
            let u = c[dim - 1].abs() + h[dim - 1];
            let corner = (z2 * z2 + u * u).sqrt().sqrt();
            (x.koranyi_norm() + corner).max(2.0 * opts.rho_inner)
        }
        None => opts.r_max,
    }
}

/// `∫ φ(w) (1 − χ(‖x⁻¹w‖_K)) P_α(x⁻¹w) dw` on a composite product rule.
fn far_box<F: Field + ?Sized>(
    field: &F,
    x: &Point,
    prof: &Profile,
    spec: &QuadratureSpec,
    opts: &SpatialOptions,
    dim: usize,
) -> Result<f64> {
    let (c, h) = field
        .support_box(dim, opts.support_tol)
        .ok_or_else(|| Error::Unsupported("the split route needs a support box".into()))?;
    let per = 12usize.min(spec.box_nodes);
    let panels = spec.box_nodes.div_ceil(per);
    let base = gauss_legendre(per);
    let rules: Vec<Rule> = (0..dim)
        .map(|i| {
            let b = uniform_breaks(c[i] - h[i], c[i] + h[i], panels);
            Rule::concat(b.windows(2).map(|p| base.mapped(p[0], p[1])))
        })
        .collect();
    let xinv = x.inverse();
    let xi = xinv.coords();
    let (ra, rb) = (opts.rho_inner, opts.rho_outer);
    // dim = 3 here
    let slabs: Vec<f64> = rules[0]
        .nodes
        .par_iter()
        .zip(rules[0].weights.par_iter())
        .map(|(&w0, &q0)| {
            let mut w = [w0, 0.0, 0.0];
            let mut y = [0.0; 3];
            let mut acc = 0.0;
            for (w1, q1) in rules[1].iter() {
                w[1] = w1;
                for (w2, q2) in rules[2].iter() {
                    w[2] = w2;
                    mul_into(xi, &w, &mut y);
                    let rho = koranyi_norm_slice(&y);
                    if rho <= ra {
                        continue;
                    }
                    let f = field.value(&w);
                    if f == 0.0 {
                        continue;
                    }
                    acc += q1 * q2 * f * (1.0 - cutoff(rho, ra, rb)) * prof.eval(&y);
                }
            }
            q0 * acc
        })
        .collect();
    Ok(slabs.iter().sum())
}
