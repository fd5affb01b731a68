//! Moments `∫ x^γ h(t,x) dx`.

use serde::{Deserialize, Serialize};

use super::HeatCloud;
use crate::config::{Estimate, QuadratureSpec};
use crate::error::{Error, Result};
use crate::polar::{horizontal_sphere, kernel_table};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum MomentMethod {
    /// Some exponent is odd; the moment vanishes by the symmetries of `h`.
    Symmetry,
    MonteCarlo,
    Quadrature,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MomentEstimate {
    pub value: f64,
    pub std_err: f64,
    pub method: MomentMethod,
}

/// Homogeneous weight `γ_1 + … + γ_{2n} + 2γ_{2n+1}`.
pub fn weight(gamma: &[u32]) -> u32 {
    let d = gamma.len();
    gamma[..d - 1].iter().sum::<u32>() + 2 * gamma[d - 1]
}

fn check(gamma: &[u32], dim: usize, t: f64) -> Result<()> {
    if gamma.len() != dim {
        return Err(Error::MultiIndexLength {
            expected: dim,
            got: gamma.len(),
        });
    }
    if !(t > 0.0) || !t.is_finite() {
        return Err(Error::NonPositiveTime(t));
    }
    Ok(())
}

/// Monte-Carlo moment from a cloud; odd multi-indices return exact zero.
pub fn hk_moment(gamma: &[u32], t: f64, cloud: &HeatCloud) -> Result<MomentEstimate> {
    check(gamma, cloud.dim(), t)?;
    if gamma.iter().any(|g| g % 2 == 1) {
        return Ok(MomentEstimate {
            value: 0.0,
            std_err: 0.0,
            method: MomentMethod::Symmetry,
        });
    }
    let e: Estimate = cloud.expect(|p| {
        gamma
            .iter()
            .zip(p)
            .filter(|(&g, _)| g > 0)
            .map(|(&g, &v)| v.powi(g as i32))
            .product()
    });
    let scale = (t / cloud.spec().t).powf(0.5 * weight(gamma) as f64);
    Ok(MomentEstimate {
        value: scale * e.value,
        std_err: scale * e.std_err,
        method: MomentMethod::MonteCarlo,
    })
}

/// Deterministic moment on the gauge-polar grid (`n ≤ 2`).
///
/// In polar form `∫ y^γ h(1,y) dy = ½ Σ_ω w_ω ω^γ I(−w(γ), ω)`.
pub fn hk_moment_quadrature(gamma: &[u32], t: f64, n: usize, spec: &QuadratureSpec) -> Result<MomentEstimate> {
    check(gamma, 2 * n + 1, t)?;
    if gamma.iter().any(|g| g % 2 == 1) {
        return Ok(MomentEstimate {
            value: 0.0,
            std_err: 0.0,
            method: MomentMethod::Symmetry,
        });
    }
    let value = quadrature_value(gamma, n, spec)?;
    let coarse = quadrature_value(gamma, n, &spec.coarse())?;
    let w = weight(gamma) as f64;
    let scale = t.powf(0.5 * w);
    Ok(MomentEstimate {
        value: scale * value,
        std_err: scale * (value - coarse).abs(),
        method: MomentMethod::Quadrature,
    })
}

fn quadrature_value(gamma: &[u32], n: usize, spec: &QuadratureSpec) -> Result<f64> {
    let w = weight(gamma) as f64;
    let sphere = horizontal_sphere(n, spec.sphere_nodes)?;
    let table = kernel_table(n, spec)?;
    let radial = table.radial(-w)?;
    let d = 2 * n;
    let hdeg: u32 = gamma[..d].iter().sum();
    let ang: f64 = sphere
        .points
        .iter()
        .zip(&sphere.weights)
        .map(|(xi, wx)| {
            wx * gamma[..d]
                .iter()
                .zip(xi)
                .map(|(&g, &v)| v.powi(g as i32))
                .product::<f64>()
        })
        .sum();
    let lat = table.latitude_sum(|node, k| {
        node.c.powf(0.5 * hdeg as f64) * node.sn.powi(gamma[d] as i32) * radial[k]
    });
    Ok(0.5 * ang * lat)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn odd_moments_short_circuit() {
        let m = hk_moment_quadrature(&[1, 0, 2], 1.0, 1, &QuadratureSpec::default()).unwrap();
        assert_eq!(m.value, 0.0);
        assert_eq!(m.method, MomentMethod::Symmetry);
    }

    #[test]
    fn bad_multi_index() {
        assert!(matches!(
            hk_moment_quadrature(&[2, 0], 1.0, 1, &QuadratureSpec::default()),
            Err(Error::MultiIndexLength { .. })
        ));
    }
}

#[cfg(test)]
mod values {
    use super::*;

    #[test]
    fn low_moments_n1() {
        let spec = QuadratureSpec::default();
        let cases: [(&[u32], f64); 5] = [
            (&[0, 0, 0], 1.0),
            (&[2, 0, 0], 2.0),
            (&[0, 0, 2], 1.0),
            (&[4, 0, 0], 12.0),
            (&[2, 0, 2], 10.0 / 3.0),
        ];
        for (g, want) in cases {
            let m = hk_moment_quadrature(g, 1.0, 1, &spec).unwrap();
            eprintln!("{g:?}: {} (err {})", m.value, m.std_err);
            assert!((m.value - want).abs() < 1e-6 * want, "{g:?}: {}", m.value);
        }
    }
}
