//! Composition checks `L^s(L^p φ) = L^{s+p} φ`.
//!
//! The inner power is a field without derivatives unless `p` is a
//! nonnegative integer. Outer powers with `s ∈ (−Q/2, 1)` only need values;
//! `s = 1` uses central differences along the frame. For rotation-invariant
//! `φ` the inner field depends on `(|z|, u)` only, and it is tabulated on a
//! gauge-polar grid before the outer integral touches it.

use std::sync::atomic::{AtomicUsize, Ordering};

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::spatial::{psi_spatial_with, SpatialMode, SpatialOptions};
use super::{frac_power, MomentTable, PsiResult};
use crate::config::QuadratureSpec;
use crate::error::{Error, Result};
use crate::hgroup::{koranyi_norm_slice, mul_into, Point};
use crate::jets::{sublaplacian_power, Jet};
use crate::polar::ThetaRule;
use crate::quadrature::{fejer1, Chebyshev};
use crate::testfn::Field;

/// `L^m φ` with jets obtained from those of `φ`.
pub struct SublaplacianPower<'a, F: ?Sized> {
    pub base: &'a F,
    pub m: usize,
}

impl<F: Field + ?Sized> Field for SublaplacianPower<'_, F> {
    fn value(&self, y: &[f64]) -> f64 {
        match self.jet(y, 0) {
            Some(Ok(j)) => j.value(),
            _ => f64::NAN,
        }
    }

    fn jet(&self, x: &[f64], order: usize) -> Option<Result<Jet>> {
        let base = self.base.jet(x, order + 2 * self.m)?;
        Some(base.and_then(|j| sublaplacian_power(&j, self.m)))
    }

    fn support_box(&self, dim: usize, tol: f64) -> Option<(Vec<f64>, Vec<f64>)> {
        // derivatives carry polynomial factors; widen the level
        self.base.support_box(dim, tol * 1e-4)
    }

    fn rotation_invariant(&self) -> bool {
        self.base.rotation_invariant()
    }
}

/// A rotation-invariant field sampled on latitude nodes times a radial
/// axis: Chebyshev in `ρ = ‖y‖_K` on `[0, R]`, and `F · ρ^{decay}` as a
/// Chebyshev series in `η = R/ρ` beyond.
pub struct TabulatedField {
    theta: ThetaRule,
    core: Vec<Chebyshev>,
    tail: Vec<Chebyshev>,
    radius: f64,
    decay: f64,
    samples: usize,
}

/// Radial layout of a [`TabulatedField`].
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RadialAxis {
    pub core_nodes: usize,
    pub tail_nodes: usize,
    pub radius: f64,
    /// The field decays like `ρ^{−decay}`.
    pub decay: f64,
}

impl TabulatedField {
    pub fn build<G>(n: usize, axis: RadialAxis, theta_per_panel: usize, f: G) -> Result<Self>
    where
        G: Fn(&[f64]) -> Result<f64> + Sync,
    {
        let theta = ThetaRule::new(n, theta_per_panel)?;
        let core_rho = fejer1(axis.core_nodes).mapped(0.0, axis.radius).nodes;
        let eta = fejer1(axis.tail_nodes).mapped(0.0, 1.0).nodes;
        let mut radii: Vec<(f64, f64)> = core_rho.iter().map(|&r| (r, 1.0)).collect();
        radii.extend(eta.iter().map(|&e| {
            let r = axis.radius / e;
            (r, r.powf(axis.decay))
        }));
        let dim = 2 * n + 1;
        let per = radii.len();
        let jobs: Vec<(usize, usize)> = (0..theta.nodes.len())
            .flat_map(|k| (0..per).map(move |i| (k, i)))
            .collect();
        let values: Vec<f64> = jobs
            .par_iter()
            .map(|&(k, i)| {
                let node = &theta.nodes[k];
                let (rho, scale) = radii[i];
                let mut y = vec![0.0; dim];
                y[0] = rho * node.c.sqrt();
                y[dim - 1] = rho * rho * node.sn;
                Ok(f(&y)? * scale)
            })
            .collect::<Result<_>>()?;
        let mut core = Vec::new();
        let mut tail = Vec::new();
        for col in values.chunks(per) {
            core.push(Chebyshev::from_values(0.0, axis.radius, &col[..axis.core_nodes]));
            tail.push(Chebyshev::from_values(0.0, 1.0, &col[axis.core_nodes..]));
        }
        Ok(Self {
            theta,
            core,
            tail,
            radius: axis.radius,
            decay: axis.decay,
            samples: values.len(),
        })
    }

    /// Number of sampled values.
    pub fn len(&self) -> usize {
        self.samples
    }

    pub fn is_empty(&self) -> bool {
        self.samples == 0
    }
}

impl Field for TabulatedField {
    fn value(&self, y: &[f64]) -> f64 {
        let d = y.len();
        let z2: f64 = y[..d - 1].iter().map(|v| v * v).sum();
        let rho = koranyi_norm_slice(y);
        let theta = y[d - 1].atan2(z2);
        if rho <= self.radius {
            self.theta.interpolate_with(theta, |k| self.core[k].eval(rho))
        } else {
            let eta = self.radius / rho;
            self.theta.interpolate_with(theta, |k| self.tail[k].eval(eta)) * rho.powf(-self.decay)
        }
    }

    fn jet(&self, _x: &[f64], _order: usize) -> Option<Result<Jet>> {
        None
    }

    fn support_box(&self, _dim: usize, _tol: f64) -> Option<(Vec<f64>, Vec<f64>)> {
        None
    }

    fn rotation_invariant(&self) -> bool {
        true
    }
}

/// `L f(x)` from second differences along `t ↦ x·exp(tZ_i)`, with one
/// Richardson step between `h` and `h/2`.
pub fn sublaplacian_fd<G: Fn(&[f64]) -> Result<f64>>(f: G, x: &Point, h: f64) -> Result<f64> {
    let xc = x.coords();
    let dim = xc.len();
    let f0 = f(xc)?;
    let mut w = vec![0.0; dim];
    let mut step = vec![0.0; dim];
    let mut second = |h: f64| -> Result<f64> {
        let mut acc = 0.0;
        for i in 0..dim - 1 {
            let mut pair = 0.0;
            for sign in [1.0, -1.0] {
                step.iter_mut().for_each(|v| *v = 0.0);
                step[i] = sign * h;
                mul_into(xc, &step, &mut w);
                pair += f(&w)?;
            }
            acc += (pair - 2.0 * f0) / (h * h);
        }
        Ok(-acc)
    };
    let coarse = second(h)?;
    let fine = second(0.5 * h)?;
    Ok((4.0 * fine - coarse) / 3.0)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SemigroupOptions {
    /// Chebyshev nodes on the core `[0, core_radius]` of the inner table.
    pub core_nodes: usize,
    /// Chebyshev nodes in `core_radius/ρ` beyond the core.
    pub tail_nodes: usize,
    pub core_radius: f64,
    /// Latitude nodes per panel for the tabulated inner field.
    pub theta_per_panel: usize,
    /// Horizontal-sphere nodes per angle for each inner evaluation.
    pub inner_sphere_nodes: usize,
    /// Largest number of inner evaluations allowed.
    pub budget: usize,
    /// Finite-difference step for `s = 1`.
    pub fd_step: f64,
    /// Polar truncation radius of the outer integral.
    pub r_max: f64,
}

impl Default for SemigroupOptions {
    fn default() -> Self {
        Self {
            core_nodes: 24,
            tail_nodes: 10,
            core_radius: 4.0,
            theta_per_panel: 5,
            inner_sphere_nodes: 24,
            budget: 4000,
            fd_step: 0.1,
            r_max: 64.0,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SemigroupCheck {
    pub s: f64,
    pub p: f64,
    /// `L^s(L^p φ)(x)`.
    pub lhs: f64,
    pub lhs_error: f64,
    /// `L^{s+p} φ(x)`.
    pub rhs: f64,
    pub rhs_error: f64,
    pub inner_evaluations: usize,
}

impl SemigroupCheck {
    pub fn relative_gap(&self) -> f64 {
        (self.lhs - self.rhs).abs() / self.rhs.abs()
    }
}

fn is_nonneg_integer(v: f64) -> bool {
    v >= 0.0 && v == v.floor()
}

pub fn semigroup_check<F: Field + ?Sized>(
    phi: &F,
    s: f64,
    p: f64,
    x: &Point,
    spec: &QuadratureSpec,
    moments: &MomentTable,
    opts: &SemigroupOptions,
) -> Result<SemigroupCheck> {
    let n = x.n();
    let q = (2 * n + 2) as f64;
    let rhs = frac_power(phi, s + p, x, spec, moments)?;
    let finish = |lhs: PsiResult, evals: usize| SemigroupCheck {
        s,
        p,
        lhs: lhs.value,
        lhs_error: lhs.error,
        rhs: rhs.value,
        rhs_error: rhs.error,
        inner_evaluations: evals,
    };

    if is_nonneg_integer(p) {
        let inner = SublaplacianPower { base: phi, m: p as usize };
        return Ok(finish(frac_power(&inner, s, x, spec, moments)?, 0));
    }
    if s == 0.0 {
        return Ok(finish(frac_power(phi, p, x, spec, moments)?, 1));
    }

    let inner_spec = spec.coarse();
    let inner_opts = SpatialOptions {
        error_estimate: false,
        sphere_nodes: opts.inner_sphere_nodes,
        ..Default::default()
    };
    let count = AtomicUsize::new(0);
    let inner = |y: &[f64]| -> Result<f64> {
        if count.fetch_add(1, Ordering::Relaxed) >= opts.budget {
            return Err(Error::BudgetExceeded(opts.budget));
        }
        let pt = Point::new(y.to_vec())?;
        Ok(psi_spatial_with(phi, &pt, -2.0 * p, &inner_spec, &inner_opts)?.value)
    };

    if s == 1.0 {
        let v = sublaplacian_fd(inner, x, opts.fd_step)?;
        let lhs = PsiResult {
            value: v,
            error: 0.0,
            alpha: -2.0,
            route: super::Route::Spatial,
            strip: 1,
            moments: None,
        };
        return Ok(finish(lhs, count.load(Ordering::Relaxed)));
    }
    let alpha = -2.0 * s;
    if !(alpha > -2.0 && alpha < q) {
        return Err(Error::Unsupported(format!(
            "outer power s = {s} needs derivatives of a field known only by values"
        )));
    }
    if !phi.rotation_invariant() {
        return Err(Error::Unsupported(
            "value-only inner fields are tabulated for rotation-invariant test functions".into(),
        ));
    }
    let needed = (opts.core_nodes + opts.tail_nodes) * ThetaRule::new(n, opts.theta_per_panel)?.nodes.len();
    if needed > opts.budget {
        return Err(Error::BudgetExceeded(opts.budget));
    }
    // the inner field decays like ρ^{α_p − Q}
    let decay = q + 2.0 * p;
    let axis = RadialAxis {
        core_nodes: opts.core_nodes,
        tail_nodes: opts.tail_nodes,
        radius: opts.core_radius,
        decay,
    };
    let table = TabulatedField::build(n, axis, opts.theta_per_panel, inner)?;
    let outer_opts = SpatialOptions {
        mode: SpatialMode::Polar,
        r_max: opts.r_max,
        ..Default::default()
    };
    let lhs = psi_spatial_with(&table, x, alpha, spec, &outer_opts)?;
    Ok(finish(lhs, count.load(Ordering::Relaxed)))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::testfn::TestFunction;

    #[test]
    fn finite_difference_sublaplacian() {
        let phi = TestFunction::gaussian(1.0).unwrap();
        let x = Point::new(vec![0.3, 0.2, -0.4]).unwrap();
        let want = SublaplacianPower { base: &phi, m: 1 }.value(x.coords());
        let got = sublaplacian_fd(|y: &[f64]| Ok(phi.eval(y)), &x, 0.1).unwrap();
        assert!((got - want).abs() < 1e-5, "{got} vs {want}");
    }

    #[test]
    fn tabulated_field_reproduces_smooth_invariant() {
        let f = |y: &[f64]| -> Result<f64> {
            let z2 = y[0] * y[0] + y[1] * y[1];
            Ok((1.0 + z2 * z2 + y[2] * y[2]).powf(-1.0))
        };
        let axis = RadialAxis {
            core_nodes: 32,
            tail_nodes: 16,
            radius: 3.0,
            decay: 4.0,
        };
        let t = TabulatedField::build(1, axis, 8, f).unwrap();
        for y in [[0.3, 0.1, 0.2], [1.5, -2.0, 3.0], [0.0, 0.0, 7.0]] {
            let want = f(&y).unwrap();
            assert!((t.value(&y) - want).abs() < 1e-6 * want, "{y:?} {} {want}", t.value(&y));
        }
    }

    #[test]
    fn integer_inner_power_uses_jets() {
        let phi = TestFunction::gaussian(1.0).unwrap();
        let x = Point::new(vec![0.2, -0.1, 0.3]).unwrap();
        let table = MomentTable::reference(1, 6).unwrap();
        let r = semigroup_check(
            &phi,
            0.5,
            1.0,
            &x,
            &QuadratureSpec::default(),
            &table,
            &SemigroupOptions::default(),
        )
        .unwrap();
        assert!(r.relative_gap() < 1e-6, "{r:?}");
    }
}
