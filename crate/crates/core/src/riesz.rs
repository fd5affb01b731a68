//! Riesz-type kernels `P_α`, the homogeneous norms `‖·‖_α`, and the
//! spectral integrals `σ(α)`, `d(α)` and boundary moments in volume form.
//!
//! With `I(α, x) = ∫₀^∞ t^{α/2−1} h(t, x) dt`:
//! `P_α = I/Γ(α/2)`, `‖x‖_α = I^{1/(α−Q)}`, and
//! `∫_{∂B_c} y^γ ‖y‖_α^{α−Q} = 2 ∫ y^γ h(1,y) ‖y‖_c^{−α−w(γ)} dy`.

use std::f64::consts::PI;
use std::sync::Arc;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::ccnorm::cc_norm_slice;
use crate::config::{Estimate, QuadratureSpec, SamplerSpec};
use crate::error::{Error, Result};
use crate::heatkernel::HeatCloud;
use crate::hgroup::{koranyi_norm_slice, mul_into, Point};
use crate::polar::{horizontal_sphere, kernel_table, radial_integral, KernelTable};
use crate::quadrature::pairwise_sum;
pub use crate::special::{gamma, recip_gamma};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct AlphaDomain {
    pub alpha: f64,
    pub q: f64,
    /// `α ∈ {0, −2, −4, …}`, where `1/Γ(α/2)` vanishes.
    pub at_pole: bool,
}

impl AlphaDomain {
    pub fn new(alpha: f64, n: usize) -> Result<Self> {
        let q = (2 * n + 2) as f64;
        if !alpha.is_finite() || alpha >= q {
            return Err(Error::AlphaOutOfRange { alpha, q });
        }
        let half = -alpha / 2.0;
        Ok(Self {
            alpha,
            q,
            at_pole: half >= 0.0 && half == half.floor(),
        })
    }
}

/// Splits a point into the latitude data of its gauge-polar form.
fn polar_parts(y: &[f64]) -> (f64, f64, f64, f64) {
    let d = y.len();
    let z2: f64 = y[..d - 1].iter().map(|v| v * v).sum();
    let u = y[d - 1];
    let rho = (z2 * z2 + u * u).sqrt().sqrt();
    let r2 = rho * rho;
    (rho, z2 / r2, u / r2, u.atan2(z2))
}

/// `I(α, x)` evaluated directly, `= ρ^{α−Q} I(α, ω)`.
pub fn kernel_integral(alpha: f64, x: &Point, spec: &QuadratureSpec) -> Result<f64> {
    let n = x.n();
    AlphaDomain::new(alpha, n)?;
    if x.is_identity() {
        return Err(Error::AtIdentity);
    }
    let (rho, c, sn, _) = polar_parts(x.coords());
    let q = (2 * n + 2) as f64;
    Ok(rho.powf(alpha - q) * radial_integral(n, alpha, c, sn, spec)?)
}

/// `‖x‖_α = I(α, x)^{1/(α−Q)}`.
pub fn alpha_norm(alpha: f64, x: &Point, spec: &QuadratureSpec) -> Result<f64> {
    let q = x.group().q();
    Ok(kernel_integral(alpha, x, spec)?.powf(1.0 / (alpha - q)))
}

/// `P_α(x) = I(α, x)/Γ(α/2)`; fails at the poles of `Γ(α/2)`.
pub fn p_alpha(alpha: f64, x: &Point, spec: &QuadratureSpec) -> Result<f64> {
    let dom = AlphaDomain::new(alpha, x.n())?;
    if dom.at_pole {
        return Err(Error::Pole(alpha));
    }
    Ok(kernel_integral(alpha, x, spec)? / gamma(alpha / 2.0)?)
}

/// `P_α` (or `I(α,·)`) tabulated on the latitude nodes for fast pointwise
/// evaluation by interpolation.
#[derive(Clone)]
pub struct Profile {
    pub n: usize,
    pub alpha: f64,
    table: Arc<KernelTable>,
    radial: Arc<Vec<f64>>,
    inv_gamma: f64,
}

impl std::fmt::Debug for Profile {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("Profile").field("n", &self.n).field("alpha", &self.alpha).finish()
    }
}

pub fn profile(n: usize, alpha: f64, spec: &QuadratureSpec) -> Result<Profile> {
    let dom = AlphaDomain::new(alpha, n)?;
    let table = kernel_table(n, spec)?;
    let radial = table.radial(alpha)?;
    Ok(Profile {
        n,
        alpha,
        table,
        radial,
        inv_gamma: if dom.at_pole { 0.0 } else { 1.0 / gamma(alpha / 2.0)? },
    })
}

impl Profile {
    pub fn q(&self) -> f64 {
        (2 * self.n + 2) as f64
    }

    pub fn recip_gamma(&self) -> f64 {
        self.inv_gamma
    }

    /// `I(α, ω(θ))` on the unit gauge sphere.
    pub fn unit(&self, theta: f64) -> f64 {
        self.table.theta.interpolate(&self.radial, theta)
    }

    /// `I(α, y)`.
    pub fn kernel(&self, y: &[f64]) -> f64 {
        let (rho, _, _, theta) = polar_parts(y);
        rho.powf(self.alpha - self.q()) * self.unit(theta)
    }

    /// `P_α(y)`.
    pub fn eval(&self, y: &[f64]) -> f64 {
        self.inv_gamma * self.kernel(y)
    }

    pub fn table(&self) -> &KernelTable {
        &self.table
    }

    pub fn radial_values(&self) -> &[f64] {
        &self.radial
    }
}

/// Integration backend for the spectral functions.
#[derive(Debug, Clone, Copy)]
pub enum Backend<'a> {
    Quadrature(&'a QuadratureSpec),
    MonteCarlo(&'a HeatCloud),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum IntegralMethod {
    Symmetry,
    Quadrature,
    MonteCarlo,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SpectralValue {
    pub value: f64,
    pub std_err: f64,
    pub method: IntegralMethod,
}

fn weight(gamma: &[u32]) -> u32 {
    let d = gamma.len();
    gamma[..d - 1].iter().sum::<u32>() + 2 * gamma[d - 1]
}

/// `2 ∫ y^γ h(1,y) ‖y‖_c^{−α−w(γ)} dy`.
pub fn boundary_moment(gamma_idx: &[u32], alpha: f64, n: usize, backend: Backend) -> Result<SpectralValue> {
    let dim = 2 * n + 1;
    if gamma_idx.len() != dim {
        return Err(Error::MultiIndexLength {
            expected: dim,
            got: gamma_idx.len(),
        });
    }
    AlphaDomain::new(alpha, n)?;
    if gamma_idx.iter().any(|g| g % 2 == 1) {
        return Ok(SpectralValue {
            value: 0.0,
            std_err: 0.0,
            method: IntegralMethod::Symmetry,
        });
    }
    let w = weight(gamma_idx) as f64;
    match backend {
        Backend::Quadrature(spec) => {
            let value = boundary_quadrature(gamma_idx, alpha, n, spec)?;
            let coarse = boundary_quadrature(gamma_idx, alpha, n, &spec.coarse())?;
            Ok(SpectralValue {
                value,
                std_err: (value - coarse).abs(),
                method: IntegralMethod::Quadrature,
            })
        }
        Backend::MonteCarlo(cloud) => {
            if cloud.n() != n {
                return Err(Error::DimensionMismatch {
                    expected: dim,
                    got: cloud.dim(),
                });
            }
            let r = (1.0 / cloud.spec().t).sqrt();
            let e = cloud.expect(|p| {
                let mut y = [0.0f64; 65];
                for k in 0..dim - 1 {
                    y[k] = r * p[k];
                }
                y[dim - 1] = r * r * p[dim - 1];
                let y = &y[..dim];
                let mono: f64 = gamma_idx
                    .iter()
                    .zip(y)
                    .filter(|(&g, _)| g > 0)
                    .map(|(&g, &v)| v.powi(g as i32))
                    .product();
                let cc = cc_norm_slice(y).unwrap_or(f64::NAN);
                2.0 * mono * cc.powf(-alpha - w)
            });
            Ok(SpectralValue {
                value: e.value,
                std_err: e.std_err,
                method: IntegralMethod::MonteCarlo,
            })
        }
    }
}

fn boundary_quadrature(gamma_idx: &[u32], alpha: f64, n: usize, spec: &QuadratureSpec) -> Result<f64> {
    let w = weight(gamma_idx) as f64;
    let sphere = horizontal_sphere(n, spec.sphere_nodes)?;
    let table = kernel_table(n, spec)?;
    let radial = table.radial(alpha)?;
    let d = 2 * n;
    let hdeg: u32 = gamma_idx[..d].iter().sum();
    let ang: f64 = sphere
        .points
        .iter()
        .zip(&sphere.weights)
        .map(|(xi, wx)| {
            wx * gamma_idx[..d]
                .iter()
                .zip(xi)
                .map(|(&g, &v)| v.powi(g as i32))
                .product::<f64>()
        })
        .sum();
    let lat = table.latitude_sum(|node, k| {
        node.c.powf(0.5 * hdeg as f64) * node.sn.powi(gamma_idx[d] as i32) * node.cc.powf(-alpha - w) * radial[k]
    });
    Ok(ang * lat)
}

/// `σ(α) = 2 ∫ h(1,y) ‖y‖_c^{−α} dy`.
pub fn sigma(alpha: f64, n: usize, backend: Backend) -> Result<SpectralValue> {
    boundary_moment(&vec![0; 2 * n + 1], alpha, n, backend)
}

/// `d(α) = 2 ∫ y_i² h(1,y) ‖y‖_c^{−α−2} dy` for a horizontal index `i`
/// (1-based).
pub fn d_alpha(alpha: f64, i: usize, n: usize, backend: Backend) -> Result<SpectralValue> {
    if i == 0 || i > 2 * n {
        return Err(Error::FrameIndex { index: i, max: 2 * n });
    }
    let mut g = vec![0; 2 * n + 1];
    g[i - 1] = 2;
    boundary_moment(&g, alpha, n, backend)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ConvolutionCheck {
    /// `P_{α+β}(x)`.
    pub lhs: f64,
    /// Monte-Carlo estimate of `(P_α ⋆ P_β)(x)`.
    pub rhs: f64,
    pub std_err: f64,
    pub gap: f64,
}

/// Importance-sampled `∫ P_α(y) P_β(y⁻¹x) dy` against `P_{α+β}(x)`.
///
/// Proposal: equal mixture of `y = δ_ρ ω` and `y = x·δ_ρ ω` with radial
/// density `2/(1+ρ)³` and uniform latitude and angle, which leaves the
/// integrand-to-density ratio bounded at both singularities and at infinity.
pub fn convolution_check(
    alpha: f64,
    beta: f64,
    x: &Point,
    sampler: &SamplerSpec,
    spec: &QuadratureSpec,
) -> Result<ConvolutionCheck> {
    let n = x.n();
    if n != 1 {
        return Err(Error::Unsupported("convolution check is implemented for n = 1".into()));
    }
    let q = x.group().q();
    if !(alpha > 0.0 && beta > 0.0 && alpha + beta < q) {
        return Err(Error::InvalidArgument(format!(
            "need 0 < alpha, beta and alpha + beta < Q, got ({alpha}, {beta})"
        )));
    }
    if x.is_identity() {
        return Err(Error::AtIdentity);
    }
    let pa = profile(n, alpha, spec)?;
    let pb = profile(n, beta, spec)?;
    let lhs = p_alpha(alpha + beta, x, spec)?;
    let xc = x.coords().to_vec();
    let xinv: Vec<f64> = xc.iter().map(|v| -v).collect();

    // q₁(y) = g(ρ) / (ρ³ · π · 2π) in gauge-polar coordinates (n = 1)
    let q1 = |y: &[f64]| {
        let rho = koranyi_norm_slice(y);
        2.0 / (1.0 + rho).powi(3) / (rho.powi(3) * 2.0 * PI * PI)
    };
    let draw = |rng: &mut ChaCha8Rng| -> [f64; 3] {
        let a: f64 = rng.random();
        let rho = 1.0 / (1.0 - a).sqrt() - 1.0;
        let theta = PI * (rng.random::<f64>() - 0.5);
        let b = 2.0 * PI * rng.random::<f64>();
        let r = rho * theta.cos().max(0.0).sqrt();
        [r * b.cos(), r * b.sin(), rho * rho * theta.sin()]
    };
    const BLOCK: usize = 4096;
    let blocks = sampler.paths.div_ceil(BLOCK);
    let sums: Vec<(f64, f64)> = (0..blocks)
        .into_par_iter()
        .map(|b| {
            let mut rng = ChaCha8Rng::seed_from_u64(sampler.seed);
            rng.set_stream(b as u64);
            let mut s = 0.0;
            let mut s2 = 0.0;
            let count = BLOCK.min(sampler.paths - b * BLOCK);
            for k in 0..count {
                let w = draw(&mut rng);
                let mut y = [0.0; 3];
                if k % 2 == 0 {
                    y = w;
                } else {
                    mul_into(&xc, &w, &mut y);
                }
                let mut yinv_x = [0.0; 3];
                let yi = [-y[0], -y[1], -y[2]];
                mul_into(&yi, &xc, &mut yinv_x);
                let mut xinv_y = [0.0; 3];
                mul_into(&xinv, &y, &mut xinv_y);
                let dens = 0.5 * q1(&y) + 0.5 * q1(&xinv_y);
                let f = pa.eval(&y) * pb.eval(&yinv_x) / dens;
                s += f;
                s2 += f * f;
            }
            (s, s2)
        })
        .collect();
    let m = sampler.paths as f64;
    let mean = pairwise_sum(&sums.iter().map(|v| v.0).collect::<Vec<_>>()) / m;
    let sq = pairwise_sum(&sums.iter().map(|v| v.1).collect::<Vec<_>>()) / m;
    let std_err = ((sq - mean * mean).max(0.0) / m).sqrt();
    Ok(ConvolutionCheck {
        lhs,
        rhs: mean,
        std_err,
        gap: (mean - lhs).abs() / lhs.abs(),
    })
}

/// `Estimate` view of a spectral value.
impl From<SpectralValue> for Estimate {
    fn from(v: SpectralValue) -> Self {
        Estimate {
            value: v.value,
            std_err: v.std_err,
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn domain_flags() {
        assert!(AlphaDomain::new(0.0, 1).unwrap().at_pole);
        assert!(AlphaDomain::new(-4.0, 1).unwrap().at_pole);
        assert!(!AlphaDomain::new(-3.0, 1).unwrap().at_pole);
        assert!(!AlphaDomain::new(2.0, 1).unwrap().at_pole);
        assert!(AlphaDomain::new(4.0, 1).is_err());
    }

    #[test]
    fn sigma_at_zero_is_two() {
        let spec = QuadratureSpec::default();
        let s = sigma(0.0, 1, Backend::Quadrature(&spec)).unwrap();
        assert!((s.value - 2.0).abs() < 1e-8, "{s:?}");
        let d = d_alpha(-2.0, 1, 1, Backend::Quadrature(&spec)).unwrap();
        assert!((d.value - 4.0).abs() < 1e-8, "{d:?}");
    }

    #[test]
    fn profile_matches_direct_evaluation() {
        let spec = QuadratureSpec::default();
        let p = profile(1, 1.0, &spec).unwrap();
        for c in [[0.3, -0.5, 0.2], [1.2, 0.1, -2.0], [0.01, 0.0, 0.4]] {
            let x = Point::new(c.to_vec()).unwrap();
            let direct = p_alpha(1.0, &x, &spec).unwrap();
            let interp = p.eval(&c);
            assert!(((direct - interp) / direct).abs() < 1e-8, "{c:?}: {direct} vs {interp}");
        }
    }
}
