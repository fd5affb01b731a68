//! Gauge-polar coordinates and the radial heat-kernel integrals.
//!
//! Every nonzero `y ∈ H^n` is `δ_ρ ω` with `ρ = ‖y‖_K` and `ω` on the unit
//! Korányi sphere, parametrized as `ω = (√(cos θ) ξ, sin θ)`,
//! `θ ∈ [−π/2, π/2]`, `ξ ∈ S^{2n−1}`. Lebesgue measure becomes
//! `ρ^{2n+1} cos^{n−1}θ dρ dθ dξ`.
//!
//! The latitude is sampled through `θ = (π/2) sin(πs/2)`, which makes
//! `|z| = √(cos θ)` analytic in `s` up to the poles, with panels in `s`
//! graded toward `s = 0`.
//!
//! The central quantity is
//! `I(α, ω) = ∫₀^∞ t^{α/2−1} h(t, ω) dt = ∫₀^∞ v^{(Q−α)/2−1} h(1, δ_{√v} ω) dv`.

use std::collections::HashMap;
use std::f64::consts::PI;
use std::sync::Arc;

use once_cell::sync::Lazy;
use parking_lot::Mutex;

use crate::ccnorm::cc_norm_zu;
use crate::config::QuadratureSpec;
use crate::error::{Error, Result};
use crate::heatkernel::h1_with;
use crate::quadrature::{gauss_legendre, periodic, power_weighted, Rule};

/// Cubature on the unit sphere `S^{2n−1}` of the horizontal layer.
#[derive(Debug, Clone)]
pub struct HSphere {
    pub n: usize,
    pub points: Vec<Vec<f64>>,
    pub weights: Vec<f64>,
}

/// Trapezoid in the angle for `n = 1`; Hopf coordinates for `n = 2`.
pub fn horizontal_sphere(n: usize, nodes: usize) -> Result<HSphere> {
    match n {
        1 => {
            let r = periodic(nodes);
            Ok(HSphere {
                n,
                points: r.nodes.iter().map(|&b| vec![b.cos(), b.sin()]).collect(),
                weights: r.weights,
            })
        }
        2 => {
            // y = (cos χ cos β₁, sin χ cos β₂, cos χ sin β₁, sin χ sin β₂),
            // dS = cos χ sin χ dχ dβ₁ dβ₂
            let chi = gauss_legendre(nodes / 2 + 4).mapped(0.0, PI / 2.0);
            let beta = periodic(nodes);
            let mut points = Vec::new();
            let mut weights = Vec::new();
            for (x, wx) in chi.iter() {
                let (sx, cx) = x.sin_cos();
                for (b1, w1) in beta.iter() {
                    for (b2, w2) in beta.iter() {
                        points.push(vec![cx * b1.cos(), sx * b2.cos(), cx * b1.sin(), sx * b2.sin()]);
                        weights.push(wx * cx * sx * w1 * w2);
                    }
                }
            }
            Ok(HSphere { n, points, weights })
        }
        _ => Err(Error::Unsupported(format!(
            "deterministic sphere rules exist for n ≤ 2 (got n = {n}); use the Monte-Carlo route"
        ))),
    }
}

#[derive(Debug, Clone, Copy)]
pub struct ThetaNode {
    pub s: f64,
    pub theta: f64,
    /// `cos θ = |z|²` on the unit sphere.
    pub c: f64,
    /// `sin θ = u`.
    pub sn: f64,
    /// Quadrature weight including `dθ/ds` and `cos^{n−1} θ`.
    pub weight: f64,
    /// `‖ω‖_c`.
    pub cc: f64,
}

/// `cos θ` for `θ = (π/2) sin(πs/2)` without cancellation near the poles.
fn cos_theta_of_s(s: f64) -> f64 {
    let q = (PI * (1.0 - s.abs()) / 4.0).sin();
    (PI * q * q).sin()
}

pub fn theta_of_s(s: f64) -> f64 {
    0.5 * PI * (0.5 * PI * s).sin()
}

pub fn s_of_theta(theta: f64) -> f64 {
    (2.0 / PI) * (2.0 * theta / PI).clamp(-1.0, 1.0).asin()
}

/// Breakpoints in `s`, graded geometrically toward the horizontal plane
/// where slowly decaying directions make the latitude profiles peak.
fn latitude_breaks() -> Vec<f64> {
    let mut pos = vec![0.004];
    while *pos.last().unwrap() < 0.5 {
        let next = pos.last().unwrap() * 2.0;
        pos.push(next);
    }
    pos.push(0.75);
    pos.push(1.0);
    let mut breaks: Vec<f64> = pos.iter().rev().map(|v| -v).collect();
    breaks.extend(pos);
    breaks
}

#[derive(Debug, Clone)]
pub struct ThetaRule {
    pub n: usize,
    pub nodes: Vec<ThetaNode>,
    breaks: Vec<f64>,
    per_panel: usize,
    bary: Vec<f64>,
}

impl ThetaRule {
    /// Composite rule with `per_panel` Gauss–Legendre nodes on each panel.
    pub fn new(n: usize, per_panel: usize) -> Result<Self> {
        let breaks = latitude_breaks();
        let gl = gauss_legendre(per_panel);
        let mut nodes = Vec::new();
        let mut bary = Vec::new();
        for win in breaks.windows(2) {
            let panel = gl.mapped(win[0], win[1]);
            for (j, ((s, w), x)) in panel.iter().zip(gl.nodes.iter()).enumerate() {
                let theta = theta_of_s(s);
                let c = cos_theta_of_s(s);
                let sn = theta.sin();
                let dtheta = 0.25 * PI * PI * (0.5 * PI * s).cos();
                let cc = cc_norm_zu(c.sqrt(), sn)?.value;
                nodes.push(ThetaNode {
                    s,
                    theta,
                    c,
                    sn,
                    weight: w * dtheta * c.powi(n as i32 - 1),
                    cc,
                });
                let sign = if j % 2 == 0 { 1.0 } else { -1.0 };
                bary.push(sign * ((1.0 - x * x) * gl.weights[j]).sqrt());
            }
        }
        Ok(Self {
            n,
            nodes,
            breaks,
            per_panel,
            bary,
        })
    }

    /// Piecewise barycentric interpolation in `s` of values given at the nodes.
    pub fn interpolate(&self, values: &[f64], theta: f64) -> f64 {
        self.interpolate_with(theta, |k| values[k])
    }

    /// As [`ThetaRule::interpolate`], reading only the nodes of the panel
    /// containing `theta`.
    pub fn interpolate_with<F: FnMut(usize) -> f64>(&self, theta: f64, mut value: F) -> f64 {
        let s = s_of_theta(theta);
        let panels = self.breaks.len() - 1;
        let p = self.breaks[1..panels].partition_point(|&b| b <= s);
        let lo = p * self.per_panel;
        let mut num = 0.0;
        let mut den = 0.0;
        for k in lo..lo + self.per_panel {
            let d = s - self.nodes[k].s;
            if d == 0.0 {
                return value(k);
            }
            let q = self.bary[k] / d;
            num += q * value(k);
            den += q;
        }
        num / den
    }
}

/// `∫₀^∞ v^p h(1, (|z|² = v c, u = v s)) dv` split at `spec.v_split`.
fn outer_rule(n: usize, c: f64, sn: f64, cc: f64, p_max: f64, spec: &QuadratureSpec) -> Rule {
    let v1 = spec.v_split;
    let a = 0.25 * cc * cc;
    // tail: v^{p_max+n+1} e^{−a v} small against its peak
    let k = p_max + n as f64 + 1.0;
    let g = |v: f64| a * v - k * v.ln();
    let vstar = (k / a).max(v1);
    let gmin = g(vstar);
    let mut big_v = vstar.max(2.0 * v1);
    while g(big_v) - gmin < 45.0 {
        big_v *= 1.25;
    }
    let base = gauss_legendre(spec.panel_nodes);
    let mut parts = Vec::new();
    let mut left = v1;
    while left < big_v {
        let strip = (n as f64 + 0.25 * left * c) / sn.abs().max(1e-3);
        let width = (1.6 * strip).min(1.6 * left).min(16.0).max(0.05);
        let right = (left + width).min(big_v);
        parts.push(base.mapped(left, right));
        left = right;
    }
    Rule::concat(parts)
}

/// `I(α, ω)` for a single direction, without tables.
pub fn radial_integral(n: usize, alpha: f64, c: f64, sn: f64, spec: &QuadratureSpec) -> Result<f64> {
    let q = (2 * n + 2) as f64;
    if !(alpha < q) {
        return Err(Error::AlphaOutOfRange { alpha, q });
    }
    let p = 0.5 * (q - alpha) - 1.0;
    let cc = cc_norm_zu(c.max(0.0).sqrt(), sn)?.value;
    let inner = power_weighted(spec.jacobi_nodes, p, spec.v_split);
    let mut total = inner.integrate(|v| h1_with(n, v * c, v * sn, spec));
    let outer = outer_rule(n, c, sn, cc, p.max(0.0), spec);
    total += outer.integrate(|v| v.powf(p) * h1_with(n, v * c, v * sn, spec));
    Ok(total)
}

/// Heat-kernel values on the outer radial rule of each latitude node,
/// shared by every `α` above `spec.alpha_min`.
pub struct KernelTable {
    pub n: usize,
    pub spec: QuadratureSpec,
    pub theta: ThetaRule,
    outer: Vec<Vec<(f64, f64, f64)>>,
    radial_cache: Mutex<HashMap<u64, Arc<Vec<f64>>>>,
}

static TABLES: Lazy<Mutex<HashMap<(usize, String), Arc<KernelTable>>>> =
    Lazy::new(|| Mutex::new(HashMap::new()));

/// Cached table for `(n, spec)`.
pub fn kernel_table(n: usize, spec: &QuadratureSpec) -> Result<Arc<KernelTable>> {
    let key = (n, spec.key());
    if let Some(t) = TABLES.lock().get(&key) {
        return Ok(t.clone());
    }
    let table = Arc::new(KernelTable::build(n, spec)?);
    TABLES.lock().insert(key, table.clone());
    Ok(table)
}

impl KernelTable {
    fn build(n: usize, spec: &QuadratureSpec) -> Result<Self> {
        use rayon::prelude::*;
        spec.validate()?;
        if n == 0 {
            return Err(Error::InvalidGroup);
        }
        let theta = ThetaRule::new(n, spec.theta_nodes)?;
        let q = (2 * n + 2) as f64;
        let p_max = 0.5 * (q - spec.alpha_min) - 1.0;
        let outer: Vec<Vec<(f64, f64, f64)>> = theta
            .nodes
            .par_iter()
            .map(|node| {
                let rule = outer_rule(n, node.c, node.sn, node.cc, p_max, spec);
                rule.iter()
                    .map(|(v, w)| (v, w, h1_with(n, v * node.c, v * node.sn, spec)))
                    .collect()
            })
            .collect();
        Ok(Self {
            n,
            spec: spec.clone(),
            theta,
            outer,
            radial_cache: Mutex::new(HashMap::new()),
        })
    }

    pub fn q(&self) -> f64 {
        (2 * self.n + 2) as f64
    }

    /// `(v, weight, h(1, δ_{√v} ω_k))` on the outer radial rule of node `k`.
    pub(crate) fn outer_nodes(&self, k: usize) -> &[(f64, f64, f64)] {
        &self.outer[k]
    }

    /// `I(α, ω_k)` at every latitude node.
    pub fn radial(&self, alpha: f64) -> Result<Arc<Vec<f64>>> {
        use rayon::prelude::*;
        let q = self.q();
        if !(alpha < q) {
            return Err(Error::AlphaOutOfRange { alpha, q });
        }
        if alpha < self.spec.alpha_min {
            return Err(Error::InvalidArgument(format!(
                "alpha = {alpha} below the table range {}",
                self.spec.alpha_min
            )));
        }
        let key = alpha.to_bits();
        if let Some(v) = self.radial_cache.lock().get(&key) {
            return Ok(v.clone());
        }
        let p = 0.5 * (q - alpha) - 1.0;
        let inner = power_weighted(self.spec.jacobi_nodes, p, self.spec.v_split);
        let n = self.n;
        let spec = &self.spec;
        let values: Vec<f64> = self
            .theta
            .nodes
            .par_iter()
            .zip(self.outer.par_iter())
            .map(|(node, outer)| {
                let a = inner.integrate(|v| h1_with(n, v * node.c, v * node.sn, spec));
                let b: f64 = outer.iter().map(|&(v, w, h)| w * v.powf(p) * h).sum();
                a + b
            })
            .collect();
        let arc = Arc::new(values);
        self.radial_cache.lock().insert(key, arc.clone());
        Ok(arc)
    }

    /// `∫ ρ^{Q−1} … ` style sums: `Σ_k w_k f(node_k)` over latitude nodes,
    /// with the horizontal sphere measure left to the caller.
    pub fn latitude_sum<F: Fn(&ThetaNode, usize) -> f64>(&self, f: F) -> f64 {
        self.theta
            .nodes
            .iter()
            .enumerate()
            .map(|(k, node)| node.weight * f(node, k))
            .sum()
    }
}

/// Area of `S^{2n−1}`.
pub fn sphere_area(n: usize) -> f64 {
    2.0 * PI.powi(n as i32) / crate::special::factorial(n - 1)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn sphere_rules_integrate_monomials() {
        let s1 = horizontal_sphere(1, 16).unwrap();
        let total: f64 = s1.weights.iter().sum();
        assert!((total - 2.0 * PI).abs() < 1e-13);
        let x4: f64 = s1.points.iter().zip(&s1.weights).map(|(p, w)| w * p[0].powi(4)).sum();
        assert!((x4 - 0.75 * PI).abs() < 1e-13);

        let s2 = horizontal_sphere(2, 16).unwrap();
        let total: f64 = s2.weights.iter().sum();
        assert!((total - 2.0 * PI * PI).abs() < 1e-12);
        // ∫_{S³} y₁² = |S³|/4
        let y2: f64 = s2.points.iter().zip(&s2.weights).map(|(p, w)| w * p[1] * p[1]).sum();
        assert!((y2 - 0.5 * PI * PI).abs() < 1e-12);
        assert!(horizontal_sphere(3, 8).is_err());
        assert!((sphere_area(2) - 2.0 * PI * PI).abs() < 1e-13);
    }

    #[test]
    fn theta_rule_measures_unit_ball() {
        // vol{‖y‖_K ≤ 1} = |S^{2n−1}| ∫ cos^{n−1}θ dθ / (2n+2)
        let r = ThetaRule::new(1, 8).unwrap();
        let s: f64 = r.nodes.iter().map(|nd| nd.weight).sum();
        assert!((s - PI).abs() < 1e-13);
        let r2 = ThetaRule::new(2, 8).unwrap();
        let s: f64 = r2.nodes.iter().map(|nd| nd.weight).sum();
        assert!((s - 2.0).abs() < 1e-13);
    }

    #[test]
    fn interpolation_is_spectral() {
        let r = ThetaRule::new(1, 10).unwrap();
        let f = |t: f64| (t.cos()).sqrt() + t.sin().powi(3);
        let vals: Vec<f64> = r.nodes.iter().map(|nd| f(nd.theta)).collect();
        for &t in &[-1.5, -0.3, 0.0, 0.77, 1.56] {
            assert!((r.interpolate(&vals, t) - f(t)).abs() < 1e-9, "t = {t}");
        }
    }
}
