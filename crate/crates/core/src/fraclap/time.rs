//! Time route: `ψ(x, α) = (1/Γ(α/2)) ∫₀^∞ t^{α/2−1} [e^{−tL}φ(x) − Σ_{p≤m} c_p t^p] dt`
//! with `c_p = Σ_{w(γ)=2p} c_γ μ_γ`, the heat evolution of the Z-Taylor
//! polynomial.
//!
//! On `[0, 1]`, `e^{−tL}φ(x) = ∫ φ(x·δ_{√t} w) h(1, w) dw` on the gauge-polar
//! grid of `h(1,·)`, with the polynomial subtracted node by node. On
//! `[1, ∞)`, `s = 1/t` gives `∫₀¹ s^{(Q−α)/2−1} F(s) ds`,
//! `F(s) = ∫ φ(w) h(1, δ_{√s}(x⁻¹w)) dw`, on a product rule over the
//! support of `φ`. The polynomial tail integrates in closed form.

use rayon::prelude::*;

use super::directions::{dilate_into, Directions};
use super::{heat_coefficient, taylor_at, MomentTable, PsiResult, Route, StripSelector};
use crate::config::QuadratureSpec;
use crate::error::{Error, Result};
use crate::heatkernel::h1_with;
use crate::hgroup::{mul_into, Point};
use crate::polar::kernel_table;
use crate::quadrature::{gauss_hermite, gauss_legendre, power_weighted, uniform_breaks, Rule};
use crate::special::recip_gamma;
use crate::testfn::Field;

const SPHERE_NODES: usize = 48;

/// `ψ(x, α)` by subordination to the heat semigroup (n = 1).
pub fn psi_time<F: Field + ?Sized>(
    field: &F,
    x: &Point,
    alpha: f64,
    moments: &MomentTable,
    spec: &QuadratureSpec,
) -> Result<PsiResult> {
    let n = x.n();
    if n != 1 {
        return Err(Error::Unsupported("the time route is implemented for n = 1".into()));
    }
    if moments.n != n {
        return Err(Error::DimensionMismatch {
            expected: 2 * moments.n + 1,
            got: x.coords().len(),
        });
    }
    let strip = StripSelector::new(alpha, n)?;
    if strip.at_pole {
        return Err(Error::Pole(alpha));
    }
    let (value, moment_err) = evaluate(field, x, &strip, moments, spec, SPHERE_NODES)?;
    let (coarse, _) = evaluate(field, x, &strip, moments, &spec.coarse(), SPHERE_NODES * 3 / 4)?;
    if !value.is_finite() {
        return Err(Error::NonConvergence(format!("time integral at alpha = {alpha}")));
    }
    Ok(PsiResult {
        value,
        error: (value - coarse).abs() + moment_err,
        alpha,
        route: Route::Time,
        strip: strip.m,
        moments: Some(moments.source),
    })
}

fn evaluate<F: Field + ?Sized>(
    field: &F,
    x: &Point,
    strip: &StripSelector,
    moments: &MomentTable,
    spec: &QuadratureSpec,
    sphere_nodes: usize,
) -> Result<(f64, f64)> {
    let n = x.n();
    let q = strip.q;
    let alpha = strip.alpha;
    let table = kernel_table(n, spec)?;
    let dirs = Directions::new(&table, sphere_nodes)?;
    let taylor = match strip.taylor_degree() {
        Some(deg) => Some(taylor_at(field, x, deg)?),
        None => None,
    };
    let (parts, stride, k) = match &taylor {
        Some(t) => (dirs.homogeneous_parts(t), t.degree() + 1, (t.degree() + 1) / 2),
        None => (Vec::new(), 0, 0),
    };

    // radial nodes and weights of h(1,·) per latitude node, ρ^{Q−1}dρ = ½ v^{Q/2−1} dv
    let inner = gauss_legendre(spec.panel_nodes).mapped(0.0, spec.v_split);
    let grid: Vec<Vec<(f64, f64)>> = table
        .theta
        .nodes
        .par_iter()
        .enumerate()
        .map(|(kk, node)| {
            let jac = |v: f64| 0.5 * v.powf(0.5 * q - 1.0);
            let mut out: Vec<(f64, f64)> = inner
                .iter()
                .map(|(v, w)| (v, w * jac(v) * h1_with(n, v * node.c, v * node.sn, spec)))
                .collect();
            out.extend(table.outer_nodes(kk).iter().map(|&(v, w, h)| (v, w * jac(v) * h)));
            out.retain(|&(v, w)| w.abs() * v.max(1.0).powi(k as i32 + 1) > 1e-22);
            out
        })
        .collect();

    let xc = x.coords();
    let dim = xc.len();
    // E_t − polynomial, divided by t^{m+1}
    let subtracted = |t: f64| -> f64 {
        let per_theta: Vec<f64> = (0..table.theta.nodes.len())
            .into_par_iter()
            .map(|kk| {
                let mut y = vec![0.0; dim];
                let mut w = vec![0.0; dim];
                let mut pow = vec![1.0; stride];
                let mut acc = 0.0;
                let ds = (kk * dirs.len() / table.theta.nodes.len())..((kk + 1) * dirs.len() / table.theta.nodes.len());
                for &(v, wv) in &grid[kk] {
                    let r = (t * v).sqrt();
                    for j in 1..stride {
                        pow[j] = pow[j - 1] * r;
                    }
                    let mut shell = 0.0;
                    for d in ds.clone() {
                        dilate_into(r, dirs.point(d), &mut y);
                        mul_into(xc, &y, &mut w);
                        let mut f = field.value(&w);
                        if stride > 0 {
                            let tw = &parts[d * stride..(d + 1) * stride];
                            f -= tw.iter().zip(&pow).map(|(a, b)| a * b).sum::<f64>();
                        }
                        shell += dirs.weights[d] * f;
                    }
                    acc += wv * shell;
                }
                acc
            })
            .collect();
        per_theta.iter().sum::<f64>() / t.powi(k as i32)
    };
    let t_rule = power_weighted(spec.jacobi_nodes, alpha / 2.0 + k as f64 - 1.0, 1.0);
    let a_part: f64 = t_rule.iter().map(|(t, w)| w * subtracted(t)).sum();

    let (boxes, shift) = box_rule(field, dim, spec)?;
    let xinv = x.inverse();
    let xi = xinv.coords();
    let far = |s: f64| -> f64 {
        let slabs: Vec<f64> = boxes[0]
            .nodes
            .par_iter()
            .zip(boxes[0].weights.par_iter())
            .map(|(&w0, &q0)| {
                let mut w = [w0 + shift[0], 0.0, 0.0];
                let mut y = [0.0; 3];
                let mut acc = 0.0;
                for (w1, q1) in boxes[1].iter() {
                    w[1] = w1 + shift[1];
                    for (w2, q2) in boxes[2].iter() {
                        w[2] = w2 + shift[2];
                        let f = field.value(&w);
                        if f == 0.0 {
                            continue;
                        }
                        mul_into(xi, &w, &mut y);
                        acc += q1 * q2 * f * h1_with(n, s * (y[0] * y[0] + y[1] * y[1]), s * y[2], spec);
                    }
                }
                q0 * acc
            })
            .collect();
        slabs.iter().sum()
    };
    let s_rule = power_weighted((spec.jacobi_nodes / 2).max(8), 0.5 * (q - alpha) - 1.0, 1.0);
    let b_part: f64 = s_rule.iter().map(|(s, w)| w * far(s)).sum();

    let mut poly = 0.0;
    let mut poly_err = 0.0;
    if let Some(t) = &taylor {
        for p in 0..=strip.m {
            let (c, se) = heat_coefficient(t, p, moments)?;
            let e = alpha / 2.0 + p as f64;
            poly += c / e;
            poly_err += (se / e).abs();
        }
    }
    let g = recip_gamma(alpha / 2.0);
    Ok((g * (a_part + b_part + poly), (g * poly_err).abs()))
}

/// Per-coordinate rules for `∫ φ(w) g(w) dw`, folding an exact Gaussian
/// factor into Gauss–Hermite weights when the field has one. Nodes are
/// offsets from the returned shift.
fn box_rule<F: Field + ?Sized>(field: &F, dim: usize, spec: &QuadratureSpec) -> Result<(Vec<Rule>, Vec<f64>)> {
    if dim != 3 {
        return Err(Error::Unsupported("box rules are built for n = 1".into()));
    }
    if let Some(a) = field.gaussian_weight() {
        let gh = gauss_hermite((spec.box_nodes / 3).max(8));
        let r = a.sqrt();
        let rule = Rule {
            nodes: gh.nodes.iter().map(|x| x / r).collect(),
            weights: gh.nodes.iter().zip(&gh.weights).map(|(x, w)| w * (x * x).exp() / r).collect(),
        };
        return Ok((vec![rule; dim], vec![0.0; dim]));
    }
    let (c, h) = field
        .support_box(dim, 1e-13)
        .ok_or_else(|| Error::Unsupported("the time route needs a support box".into()))?;
    let per = 12;
    let panels = (spec.box_nodes / 2).div_ceil(per);
    let base = gauss_legendre(per);
    let rules = (0..dim)
        .map(|i| {
            let b = uniform_breaks(-h[i], h[i], panels);
            Rule::concat(b.windows(2).map(|p| base.mapped(p[0], p[1])))
        })
        .collect();
    Ok((rules, c))
}
