//! Carnot–Carathéodory norm on H^n.
//!
//! Geodesics from the origin project to circular arcs. For `x = (z, u)` with
//! both parts nonzero the arc half-angle `θ ∈ (0, π)` solves
//! `μ(θ) = (θ − sin θ cos θ)/sin²θ = 4|u|/|z|²` and the length is
//! `θ|z|/sin θ`. Only `|z|` and `|u|` enter, so the result is invariant
//! under horizontal rotations by construction.

use std::f64::consts::PI;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::hgroup::{koranyi_norm, Point};

/// Above this value of `μ` the on-axis asymptotic form is used.
const ASYMPTOTIC_MU: f64 = 1e12;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum CcBranch {
    Origin,
    Horizontal,
    Center,
    Arc,
    Asymptotic,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CcEval {
    pub value: f64,
    /// Arc half-angle; `0` on the horizontal plane and `π` on the center.
    pub theta: f64,
    pub branch: CcBranch,
}

/// `θ − sin θ cos θ`, accurate for small `θ`.
fn area_numerator(theta: f64) -> f64 {
    let x = 2.0 * theta;
    if x < 0.05 {
        let x2 = x * x;
        // (x − sin x)/2
        0.5 * x * x2 * (1.0 / 6.0 - x2 * (1.0 / 120.0 - x2 * (1.0 / 5040.0 - x2 / 362_880.0)))
    } else {
        0.5 * (x - x.sin())
    }
}

fn mu(theta: f64) -> f64 {
    let s = theta.sin();
    area_numerator(theta) / (s * s)
}

/// `μ(π − ε)`.
fn mu_near_pi(eps: f64) -> f64 {
    let (s, c) = eps.sin_cos();
    (PI - eps + s * c) / (s * s)
}

fn bisect<F: Fn(f64) -> f64>(f: F, target: f64, mut lo: f64, mut hi: f64, increasing: bool) -> Result<f64> {
    let (lo0, hi0) = (lo, hi);
    for _ in 0..2000 {
        let mid = 0.5 * (lo + hi);
        if mid <= lo || mid >= hi {
            return Ok(mid);
        }
        let above = f(mid) > target;
        if above == increasing {
            hi = mid;
        } else {
            lo = mid;
        }
    }
    Err(Error::RootBracket { lo: lo0, hi: hi0 })
}

/// CC norm from `|z|` and `|u|`.
pub fn cc_norm_zu(zabs: f64, u: f64) -> Result<CcEval> {
    let u = u.abs();
    if !zabs.is_finite() || !u.is_finite() || zabs < 0.0 {
        return Err(Error::NonFinite);
    }
    if u == 0.0 {
        let branch = if zabs == 0.0 { CcBranch::Origin } else { CcBranch::Horizontal };
        return Ok(CcEval {
            value: zabs,
            theta: 0.0,
            branch,
        });
    }
    if zabs == 0.0 {
        return Ok(CcEval {
            value: 2.0 * (PI * u).sqrt(),
            theta: PI,
            branch: CcBranch::Center,
        });
    }
    let m = 4.0 * u / (zabs * zabs);
    if m > ASYMPTOTIC_MU || !m.is_finite() {
        let eps = (PI / m).sqrt();
        return Ok(CcEval {
            value: 2.0 * (PI * u).sqrt() - zabs,
            theta: PI - eps,
            branch: CcBranch::Asymptotic,
        });
    }
    if m <= PI / 2.0 {
        // μ(θ) ≈ 2θ/3 for small θ
        let theta = bisect(mu, m, 0.0, PI / 2.0, true)?;
        let ratio = if theta < 1e-8 { 1.0 + theta * theta / 6.0 } else { theta / theta.sin() };
        Ok(CcEval {
            value: ratio * zabs,
            theta,
            branch: CcBranch::Arc,
        })
    } else {
        let eps = bisect(mu_near_pi, m, 0.0, PI / 2.0, false)?;
        Ok(CcEval {
            value: (PI - eps) * zabs / eps.sin(),
            theta: PI - eps,
            branch: CcBranch::Arc,
        })
    }
}

pub fn cc_eval(x: &Point) -> Result<CcEval> {
    cc_norm_zu(x.horizontal_norm(), x.center())
}

pub fn cc_norm(x: &Point) -> Result<f64> {
    cc_eval(x).map(|e| e.value)
}

/// CC norm of a raw coordinate slice.
pub fn cc_norm_slice(x: &[f64]) -> Result<f64> {
    let d = x.len();
    let z = x[..d - 1].iter().map(|v| v * v).sum::<f64>().sqrt();
    cc_norm_zu(z, x[d - 1]).map(|e| e.value)
}

/// Empirical bounds of `‖x‖_K / ‖x‖_c` over a sample.
pub fn cc_equivalence_constant(sample: &[Point]) -> Result<(f64, f64)> {
    let mut lo = f64::INFINITY;
    let mut hi: f64 = 0.0;
    for x in sample {
        if x.is_identity() {
            return Err(Error::AtIdentity);
        }
        let r = koranyi_norm(x) / cc_norm(x)?;
        lo = lo.min(r);
        hi = hi.max(r);
    }
    if sample.is_empty() {
        return Err(Error::InvalidArgument("empty sample".into()));
    }
    Ok((lo, hi))
}
