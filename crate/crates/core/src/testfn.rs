//! Built-in Schwartz-class test functions and the [`Field`] abstraction used
//! by the integral operators.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::hgroup::mul_into;
use crate::jets::Jet;

/// A scalar field on H^n that the fractional operators can integrate.
pub trait Field: Sync {
    fn value(&self, y: &[f64]) -> f64;

    /// Jet at `x`, when the field supports exact differentiation.
    fn jet(&self, x: &[f64], order: usize) -> Option<Result<Jet>>;

    /// Axis-aligned box `(center, half_widths)` outside of which the field is
    /// below `tol` times its scale.
    fn support_box(&self, dim: usize, tol: f64) -> Option<(Vec<f64>, Vec<f64>)>;

    /// Gaussian weight `e^{−a|y|²}` that factors the field exactly, if any.
    fn gaussian_weight(&self) -> Option<f64> {
        None
    }

    /// Invariant under rotations of each symplectic plane.
    fn rotation_invariant(&self) -> bool {
        false
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub enum TestFunction {
    /// `e^{−a|y|²}`
    Gaussian { a: f64 },
    /// `y^γ e^{−a|y|²}`
    PolyGauss { gamma: Vec<u32>, a: f64 },
    /// `e^{−‖y‖_K⁴} = e^{−|z|⁴ − u²}`
    KoranyiGauss,
    /// `y ↦ base(by · y)`
    Translated { base: Box<TestFunction>, by: Vec<f64> },
}

impl TestFunction {
    pub fn gaussian(a: f64) -> Result<Self> {
        if !(a > 0.0 && a.is_finite()) {
            return Err(Error::InvalidArgument(format!("gaussian width a = {a}")));
        }
        Ok(Self::Gaussian { a })
    }

    pub fn poly_gauss(gamma: Vec<u32>, a: f64) -> Result<Self> {
        if !(a > 0.0 && a.is_finite()) {
            return Err(Error::InvalidArgument(format!("gaussian width a = {a}")));
        }
        if gamma.len() < 3 || gamma.len() % 2 == 0 {
            return Err(Error::MultiIndexLength {
                expected: 3,
                got: gamma.len(),
            });
        }
        Ok(Self::PolyGauss { gamma, a })
    }

    pub fn translated(self, by: Vec<f64>) -> Self {
        Self::Translated {
            base: Box::new(self),
            by,
        }
    }

    /// Number of coordinates the function is tied to, if any.
    pub fn fixed_dim(&self) -> Option<usize> {
        match self {
            Self::PolyGauss { gamma, .. } => Some(gamma.len()),
            Self::Translated { base, by } => base.fixed_dim().or(Some(by.len())),
            _ => None,
        }
    }

    pub fn check_dim(&self, dim: usize) -> Result<()> {
        match self.fixed_dim() {
            Some(d) if d != dim => Err(Error::DimensionMismatch {
                expected: d,
                got: dim,
            }),
            _ => Ok(()),
        }
    }

    pub fn eval(&self, y: &[f64]) -> f64 {
        match self {
            Self::Gaussian { a } => (-a * y.iter().map(|v| v * v).sum::<f64>()).exp(),
            Self::PolyGauss { gamma, a } => {
                let mono: f64 = gamma
                    .iter()
                    .zip(y)
                    .filter(|(&g, _)| g > 0)
                    .map(|(&g, &v)| v.powi(g as i32))
                    .product();
                mono * (-a * y.iter().map(|v| v * v).sum::<f64>()).exp()
            }
            Self::KoranyiGauss => {
                let d = y.len();
                let z2: f64 = y[..d - 1].iter().map(|v| v * v).sum();
                (-(z2 * z2) - y[d - 1] * y[d - 1]).exp()
            }
            Self::Translated { base, by } => {
                let mut w = vec![0.0; y.len()];
                mul_into(by, y, &mut w);
                base.eval(&w)
            }
        }
    }

    pub fn jet_at(&self, x: &[f64], order: usize) -> Result<Jet> {
        self.check_dim(x.len())?;
        let d = x.len();
        let sq_sum = |range: std::ops::Range<usize>| {
            let mut s = Jet::zero(x, order);
            for v in range {
                let c = Jet::coordinate(x, order, v);
                s = s.add(&c.mul(&c));
            }
            s
        };
        match self {
            Self::Gaussian { a } => Ok(sq_sum(0..d).scale(-a).exp()),
            Self::PolyGauss { gamma, a } => {
                let mut mono = Jet::constant(x, order, 1.0);
                for (v, &g) in gamma.iter().enumerate() {
                    if g > 0 {
                        mono = mono.mul(&Jet::coordinate(x, order, v).powi(g));
                    }
                }
                Ok(mono.mul(&sq_sum(0..d).scale(-a).exp()))
            }
            Self::KoranyiGauss => {
                let z2 = sq_sum(0..d - 1);
                let u = Jet::coordinate(x, order, d - 1);
                Ok(z2.mul(&z2).add(&u.mul(&u)).scale(-1.0).exp())
            }
            Self::Translated { base, by } => {
                if by.len() != d {
                    return Err(Error::DimensionMismatch {
                        expected: by.len(),
                        got: d,
                    });
                }
                let mut bx = vec![0.0; d];
                mul_into(by, x, &mut bx);
                let inner = base.jet_at(&bx, order)?;
                // by·(x + h) = by·x + (h_H, h_u + ½ω(by, h))
                let n = (d - 1) / 2;
                let mut map = vec![vec![0.0; d]; d];
                for (i, row) in map.iter_mut().enumerate() {
                    row[i] = 1.0;
                }
                for i in 0..n {
                    map[d - 1][i + n] += 0.5 * by[i];
                    map[d - 1][i] -= 0.5 * by[i + n];
                }
                Ok(inner.linear_substitute(x, &map))
            }
        }
    }

    fn base_box(&self, dim: usize, tol: f64) -> (Vec<f64>, Vec<f64>) {
        let l = (1.0 / tol).ln();
        match self {
            Self::Gaussian { a } => (vec![0.0; dim], vec![(l / a).sqrt(); dim]),
            Self::PolyGauss { gamma, a } => {
                let k: u32 = gamma.iter().sum();
                // solve a r² − k ln r = l by fixed point
                let mut r = (l / a).sqrt().max(1.0);
                for _ in 0..50 {
                    r = ((l + k as f64 * r.ln().max(0.0)) / a).sqrt();
                }
                (vec![0.0; dim], vec![r; dim])
            }
            Self::KoranyiGauss => {
                let mut half = vec![l.powf(0.25); dim];
                half[dim - 1] = l.sqrt();
                (vec![0.0; dim], half)
            }
            Self::Translated { base, by } => {
                // y = by⁻¹·w for w in the base box
                let (c, h) = base.base_box(dim, tol);
                let n = (dim - 1) / 2;
                let mut center = vec![0.0; dim];
                let inv: Vec<f64> = by.iter().map(|v| -v).collect();
                mul_into(&inv, &c, &mut center);
                let mut half = h.clone();
                let spread: f64 = (0..n)
                    .map(|i| by[i].abs() * (c[i + n].abs() + h[i + n]) + by[i + n].abs() * (c[i].abs() + h[i]))
                    .sum();
                half[dim - 1] += 0.5 * spread;
                (center, half)
            }
        }
    }
}

impl Field for TestFunction {
    fn value(&self, y: &[f64]) -> f64 {
        self.eval(y)
    }

    fn jet(&self, x: &[f64], order: usize) -> Option<Result<Jet>> {
        Some(self.jet_at(x, order))
    }

    fn support_box(&self, dim: usize, tol: f64) -> Option<(Vec<f64>, Vec<f64>)> {
        Some(self.base_box(dim, tol))
    }

    fn gaussian_weight(&self) -> Option<f64> {
        match self {
            Self::Gaussian { a } | Self::PolyGauss { a, .. } => Some(*a),
            _ => None,
        }
    }

    fn rotation_invariant(&self) -> bool {
        match self {
            Self::Gaussian { .. } | Self::KoranyiGauss => true,
            Self::PolyGauss { gamma, .. } => gamma[..gamma.len() - 1].iter().all(|&g| g == 0),
            Self::Translated { .. } => false,
        }
    }
}
