//! Discretized diffusion with generator `Σ_{i≤2n} Z_i²`.
//!
//! Path `k` draws from a ChaCha8 stream selected by `(seed, k)`, so the cloud
//! does not depend on how paths are distributed over threads. Reductions run
//! over fixed blocks and combine block sums pairwise.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};
use rayon::prelude::*;

use crate::config::{Estimate, SamplerSpec};
use crate::error::{Error, Result};
use crate::hgroup::{mul_into, symplectic, GroupConfig, Point};
use crate::quadrature::pairwise_sum;
use crate::testfn::Field;

const BLOCK: usize = 4096;

/// Endpoints of `N` sample paths at time `spec.t`, stored row-major.
#[derive(Debug, Clone)]
pub struct HeatCloud {
    n: usize,
    spec: SamplerSpec,
    data: Vec<f64>,
}

fn sample_path(n: usize, spec: &SamplerSpec, path: usize, out: &mut [f64]) {
    let mut rng = ChaCha8Rng::seed_from_u64(spec.seed);
    rng.set_stream(path as u64);
    let dt = spec.t / spec.steps as f64;
    let sd = (2.0 * dt).sqrt();
    let d = 2 * n;
    let mut x = [0.0f64; 64];
    let mut dx = [0.0f64; 64];
    let mut u = 0.0;
    for _ in 0..spec.steps {
        for v in dx.iter_mut().take(d) {
            let g: f64 = StandardNormal.sample(&mut rng);
            *v = sd * g;
        }
        // ½ ω(x, dx) equals the midpoint area increment ½ ω(x + dx/2, dx)
        u += 0.5 * symplectic(n, &x[..d], &dx[..d]);
        for k in 0..d {
            x[k] += dx[k];
        }
    }
    out[..d].copy_from_slice(&x[..d]);
    out[d] = u;
}

/// Samples `h(spec.t, ·)` by simulating the diffusion from the identity.
pub fn sample_diffusion(group: GroupConfig, spec: &SamplerSpec) -> Result<HeatCloud> {
    spec.validate()?;
    let n = group.n();
    if 2 * n > 64 {
        return Err(Error::Unsupported(format!("sampler limited to n ≤ 32, got {n}")));
    }
    let dim = group.dim();
    let mut data = vec![0.0; spec.paths * dim];
    data.par_chunks_mut(dim)
        .enumerate()
        .for_each(|(k, row)| sample_path(n, spec, k, row));
    Ok(HeatCloud {
        n,
        spec: spec.clone(),
        data,
    })
}

impl HeatCloud {
    pub fn n(&self) -> usize {
        self.n
    }

    pub fn dim(&self) -> usize {
        2 * self.n + 1
    }

    pub fn spec(&self) -> &SamplerSpec {
        &self.spec
    }

    pub fn len(&self) -> usize {
        self.data.len() / self.dim()
    }

    pub fn is_empty(&self) -> bool {
        self.data.is_empty()
    }

    pub fn point(&self, k: usize) -> &[f64] {
        let d = self.dim();
        &self.data[k * d..(k + 1) * d]
    }

    pub fn points(&self) -> impl Iterator<Item = &[f64]> {
        self.data.chunks(self.dim())
    }

    /// Monte-Carlo mean of `f` over the cloud.
    pub fn expect<F>(&self, f: F) -> Estimate
    where
        F: Fn(&[f64]) -> f64 + Sync,
    {
        let d = self.dim();
        let blocks: Vec<(f64, f64)> = self
            .data
            .par_chunks(d * BLOCK)
            .map(|chunk| {
                let mut s = 0.0;
                let mut s2 = 0.0;
                for p in chunk.chunks(d) {
                    let v = f(p);
                    s += v;
                    s2 += v * v;
                }
                (s, s2)
            })
            .collect();
        let sums: Vec<f64> = blocks.iter().map(|b| b.0).collect();
        let sq: Vec<f64> = blocks.iter().map(|b| b.1).collect();
        let m = self.len() as f64;
        let mean = pairwise_sum(&sums) / m;
        let var = (pairwise_sum(&sq) / m - mean * mean).max(0.0) * m / (m - 1.0).max(1.0);
        Estimate {
            value: mean,
            std_err: (var / m).sqrt(),
        }
    }

    /// As [`HeatCloud::expect`] for the law at time `t`, using
    /// `W_t = δ_{√(t/t₀)} W_{t₀}`.
    pub fn expect_at<F>(&self, t: f64, f: F) -> Result<Estimate>
    where
        F: Fn(&[f64]) -> f64 + Sync,
    {
        if !(t > 0.0) {
            return Err(Error::NonPositiveTime(t));
        }
        let r = (t / self.spec.t).sqrt();
        let d = self.dim();
        Ok(self.expect(|p| {
            let mut q = [0.0f64; 65];
            for k in 0..d - 1 {
                q[k] = r * p[k];
            }
            q[d - 1] = r * r * p[d - 1];
            f(&q[..d])
        }))
    }
}

/// `e^{−tL}φ(x) = E[φ(x·W_t)]`.
pub fn heat_semigroup<F: Field + ?Sized>(phi: &F, t: f64, x: &Point, cloud: &HeatCloud) -> Result<Estimate> {
    if x.coords().len() != cloud.dim() {
        return Err(Error::DimensionMismatch {
            expected: cloud.dim(),
            got: x.coords().len(),
        });
    }
    let xc = x.coords();
    cloud.expect_at(t, |w| {
        let mut y = [0.0f64; 65];
        mul_into(xc, w, &mut y[..w.len()]);
        phi.value(&y[..w.len()])
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn deterministic_and_centered() {
        let g = GroupConfig::new(1).unwrap();
        let spec = SamplerSpec::new(4000, 100, 11, 1.0).unwrap();
        let a = sample_diffusion(g, &spec).unwrap();
        let b = sample_diffusion(g, &spec).unwrap();
        assert_eq!(a.data, b.data);
        for k in 0..3 {
            let m = a.expect(|p| p[k]);
            assert!(m.z_score(0.0) < 4.0, "coordinate {k}: {m:?}");
        }
        let x2 = a.expect(|p| p[0] * p[0]);
        assert!(x2.z_score(2.0) < 4.0, "{x2:?}");
    }

    #[test]
    fn constant_field_integrates_to_one() {
        let g = GroupConfig::new(1).unwrap();
        let cloud = sample_diffusion(g, &SamplerSpec::new(100, 10, 1, 1.0).unwrap()).unwrap();
        struct One;
        impl Field for One {
            fn value(&self, _: &[f64]) -> f64 {
                1.0
            }
            fn jet(&self, _: &[f64], _: usize) -> Option<Result<crate::jets::Jet>> {
                None
            }
            fn support_box(&self, _: usize, _: f64) -> Option<(Vec<f64>, Vec<f64>)> {
                None
            }
        }
        let x = Point::new(vec![0.3, 0.1, -0.2]).unwrap();
        let e = heat_semigroup(&One, 0.5, &x, &cloud).unwrap();
        assert_eq!(e.value, 1.0);
    }
}
