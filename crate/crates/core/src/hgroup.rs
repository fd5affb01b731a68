//! Arithmetic of the Heisenberg group H^n in exponential coordinates.
//!
//! A point is stored as `(x_1..x_n, x_{n+1}..x_{2n}, x_{2n+1})`; the pairs
//! `(x_i, x_{i+n})` are the symplectic planes and the last coordinate is the
//! center. The product is
//! `(a·b)_{2n+1} = a_{2n+1} + b_{2n+1} + ½ Σ_i (a_i b_{i+n} − a_{i+n} b_i)`.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct GroupConfig {
    n: usize,
}

impl GroupConfig {
    pub fn new(n: usize) -> Result<Self> {
        if n == 0 {
            return Err(Error::InvalidGroup);
        }
        Ok(Self { n })
    }

    pub fn n(&self) -> usize {
        self.n
    }

    /// Topological dimension `2n + 1`.
    pub fn dim(&self) -> usize {
        2 * self.n + 1
    }

    /// Homogeneous dimension `Q = 2n + 2`.
    pub fn homogeneous_dim(&self) -> usize {
        2 * self.n + 2
    }

    pub fn q(&self) -> f64 {
        self.homogeneous_dim() as f64
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Point {
    coords: Vec<f64>,
}

impl Point {
    pub fn new(coords: Vec<f64>) -> Result<Self> {
        if coords.len() < 3 || coords.len() % 2 == 0 {
            return Err(Error::DimensionMismatch {
                expected: 3,
                got: coords.len(),
            });
        }
        if coords.iter().any(|c| !c.is_finite()) {
            return Err(Error::NonFinite);
        }
        Ok(Self { coords })
    }

    /// Builds a point checked against a group configuration.
    pub fn in_group(group: GroupConfig, coords: Vec<f64>) -> Result<Self> {
        if coords.len() != group.dim() {
            return Err(Error::DimensionMismatch {
                expected: group.dim(),
                got: coords.len(),
            });
        }
        Self::new(coords)
    }

    pub fn identity(group: GroupConfig) -> Self {
        Self {
            coords: vec![0.0; group.dim()],
        }
    }

    pub fn group(&self) -> GroupConfig {
        GroupConfig {
            n: (self.coords.len() - 1) / 2,
        }
    }

    pub fn n(&self) -> usize {
        (self.coords.len() - 1) / 2
    }

    pub fn coords(&self) -> &[f64] {
        &self.coords
    }

    pub fn into_coords(self) -> Vec<f64> {
        self.coords
    }

    /// Projection onto the first layer, `π_{H1}(x)`.
    pub fn horizontal(&self) -> &[f64] {
        &self.coords[..self.coords.len() - 1]
    }

    /// Projection onto the center, `π_{H2}(x)`.
    pub fn center(&self) -> f64 {
        self.coords[self.coords.len() - 1]
    }

    pub fn horizontal_norm(&self) -> f64 {
        self.horizontal().iter().map(|v| v * v).sum::<f64>().sqrt()
    }

    pub fn is_identity(&self) -> bool {
        self.coords.iter().all(|&c| c == 0.0)
    }

    pub fn inverse(&self) -> Self {
        Self {
            coords: self.coords.iter().map(|c| -c).collect(),
        }
    }

    pub fn mul(&self, other: &Point) -> Result<Point> {
        group_mul(self, other)
    }

    pub fn dilate(&self, r: f64) -> Result<Point> {
        dilate(r, self)
    }

    pub fn koranyi_norm(&self) -> f64 {
        koranyi_norm(self)
    }
}

/// Symplectic form `ω(a, b) = Σ_i (a_i b_{i+n} − a_{i+n} b_i)` on horizontal parts.
#[inline]
pub fn symplectic(n: usize, a: &[f64], b: &[f64]) -> f64 {
    (0..n).map(|i| a[i] * b[i + n] - a[i + n] * b[i]).sum()
}

/// Slice-level product used by the hot loops; all slices have length `2n + 1`.
#[inline]
pub fn mul_into(a: &[f64], b: &[f64], out: &mut [f64]) {
    let d = a.len();
    let n = (d - 1) / 2;
    for i in 0..d - 1 {
        out[i] = a[i] + b[i];
    }
    out[d - 1] = a[d - 1] + b[d - 1] + 0.5 * symplectic(n, a, b);
}

pub fn group_mul(a: &Point, b: &Point) -> Result<Point> {
    if a.coords.len() != b.coords.len() {
        return Err(Error::DimensionMismatch {
            expected: a.coords.len(),
            got: b.coords.len(),
        });
    }
    let mut out = vec![0.0; a.coords.len()];
    mul_into(&a.coords, &b.coords, &mut out);
    Ok(Point { coords: out })
}

/// `δ_r`: horizontal coordinates scale by `r`, the center by `r²`.
pub fn dilate(r: f64, x: &Point) -> Result<Point> {
    if !(r > 0.0) || !r.is_finite() {
        return Err(Error::NonPositiveDilation(r));
    }
    let d = x.coords.len();
    let mut coords = x.coords.clone();
    for c in &mut coords[..d - 1] {
        *c *= r;
    }
    coords[d - 1] *= r * r;
    Ok(Point { coords })
}

/// Korányi gauge `(|π_{H1}(x)|⁴ + |π_{H2}(x)|²)^{1/4}`.
pub fn koranyi_norm(x: &Point) -> f64 {
    koranyi_norm_slice(&x.coords)
}

#[inline]
pub fn koranyi_norm_slice(x: &[f64]) -> f64 {
    let d = x.len();
    let z2: f64 = x[..d - 1].iter().map(|v| v * v).sum();
    let u = x[d - 1];
    (z2 * z2 + u * u).sqrt().sqrt()
}

/// Rotates each symplectic plane `(x_i, x_{i+n})` by `angles[i]`.
///
/// These rotations preserve `ω` and therefore act as group automorphisms.
pub fn rotate_planes(x: &Point, angles: &[f64]) -> Result<Point> {
    let n = x.n();
    if angles.len() != n {
        return Err(Error::DimensionMismatch {
            expected: n,
            got: angles.len(),
        });
    }
    let mut coords = x.coords.clone();
    for (i, &a) in angles.iter().enumerate() {
        let (s, c) = a.sin_cos();
        let (p, q) = (x.coords[i], x.coords[i + n]);
        coords[i] = c * p - s * q;
        coords[i + n] = s * p + c * q;
    }
    Ok(Point { coords })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn p(c: &[f64]) -> Point {
        Point::new(c.to_vec()).unwrap()
    }

    #[test]
    fn product_examples() {
        let ab = group_mul(&p(&[1.0, 0.0, 0.0]), &p(&[0.0, 1.0, 0.0])).unwrap();
        assert_eq!(ab.coords(), &[1.0, 1.0, 0.5]);
        let ba = group_mul(&p(&[0.0, 1.0, 0.0]), &p(&[1.0, 0.0, 0.0])).unwrap();
        assert_eq!(ba.coords(), &[1.0, 1.0, -0.5]);
    }

    #[test]
    fn inverse_is_negation() {
        let x = p(&[0.3, -1.2, 2.0, 0.7, -0.4]);
        let e = group_mul(&x, &x.inverse()).unwrap();
        assert!(e.is_identity());
    }

    #[test]
    fn dimension_mismatch() {
        let a = p(&[1.0, 0.0, 0.0]);
        let b = p(&[1.0, 0.0, 0.0, 0.0, 0.0]);
        assert!(matches!(
            group_mul(&a, &b),
            Err(Error::DimensionMismatch { .. })
        ));
        assert!(Point::new(vec![1.0, 2.0]).is_err());
        assert!(GroupConfig::new(0).is_err());
    }

    #[test]
    fn dilation_examples() {
        let x = p(&[1.0, 1.0, 1.0]);
        assert_eq!(dilate(2.0, &x).unwrap().coords(), &[2.0, 2.0, 4.0]);
        assert_eq!(dilate(1.0, &x).unwrap(), x);
        assert!(matches!(dilate(0.0, &x), Err(Error::NonPositiveDilation(_))));
        assert!(dilate(-1.0, &x).is_err());
    }

    #[test]
    fn koranyi_examples() {
        assert_eq!(koranyi_norm(&p(&[0.0, 0.0, 4.0])), 2.0);
        assert!((koranyi_norm(&p(&[3.0, 4.0, 0.0])) - 5.0).abs() < 1e-14);
    }

    #[test]
    fn group_config_dims() {
        let g = GroupConfig::new(2).unwrap();
        assert_eq!(g.dim(), 5);
        assert_eq!(g.homogeneous_dim(), 6);
    }
}
