//! Product rule on the unit gauge sphere: latitude nodes times a rule on the
//! horizontal sphere, with the homogeneous parts of a Z-Taylor polynomial
//! precomputed at every direction.

use crate::error::Result;
use crate::jets::ZTaylor;
use crate::polar::{horizontal_sphere, KernelTable};

pub(crate) struct Directions {
    pub dim: usize,
    /// `dim` coordinates per direction.
    pub points: Vec<f64>,
    pub weights: Vec<f64>,
    /// Latitude node of each direction.
    pub theta: Vec<usize>,
}

impl Directions {
    pub fn new(table: &KernelTable, sphere_nodes: usize) -> Result<Self> {
        let n = table.n;
        let dim = 2 * n + 1;
        let sphere = horizontal_sphere(n, sphere_nodes)?;
        let mut points = Vec::new();
        let mut weights = Vec::new();
        let mut theta = Vec::new();
        for (k, node) in table.theta.nodes.iter().enumerate() {
            let r = node.c.sqrt();
            for (xi, w) in sphere.points.iter().zip(&sphere.weights) {
                points.extend(xi.iter().map(|v| r * v));
                points.push(node.sn);
                weights.push(node.weight * w);
                theta.push(k);
            }
        }
        Ok(Self {
            dim,
            points,
            weights,
            theta,
        })
    }

    pub fn len(&self) -> usize {
        self.weights.len()
    }

    pub fn point(&self, d: usize) -> &[f64] {
        &self.points[d * self.dim..(d + 1) * self.dim]
    }

    /// `t_W(ω_d)` for `W = 0..=deg`, flattened with stride `deg + 1`.
    pub fn homogeneous_parts(&self, taylor: &ZTaylor) -> Vec<f64> {
        let stride = taylor.degree() + 1;
        let mut out = vec![0.0; self.len() * stride];
        for d in 0..self.len() {
            let w = self.point(d);
            for term in taylor.terms() {
                let mono: f64 = term
                    .exponent
                    .iter()
                    .zip(w)
                    .filter(|(&e, _)| e > 0)
                    .map(|(&e, &v)| v.powi(e as i32))
                    .product();
                out[d * stride + term.weight] += term.coeff * mono;
            }
        }
        out
    }
}

/// `δ_ρ ω` written into `out`.
#[inline]
pub(crate) fn dilate_into(rho: f64, omega: &[f64], out: &mut [f64]) {
    let d = omega.len();
    for i in 0..d - 1 {
        out[i] = rho * omega[i];
    }
    out[d - 1] = rho * rho * omega[d - 1];
}
