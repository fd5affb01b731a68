//! Integration and sampling configuration, and the estimate record shared by
//! the stochastic routes.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Deterministic integration settings.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct QuadratureSpec {
    /// Gauss–Legendre nodes per λ-panel of the heat-kernel integral.
    pub lambda_nodes: usize,
    /// Relative envelope level at which the λ-integral is truncated.
    pub tail_tol: f64,
    /// Nodes per latitude panel of the gauge sphere.
    pub theta_nodes: usize,
    /// Trapezoid nodes per symplectic-plane angle on the horizontal sphere.
    pub sphere_nodes: usize,
    /// Gauss–Jacobi nodes on the inner radial segment.
    pub jacobi_nodes: usize,
    /// Gauss–Legendre nodes per outer radial panel.
    pub panel_nodes: usize,
    /// Inner/outer split of the radial variable `v = ρ²`.
    pub v_split: f64,
    /// Smallest `α` the cached radial tables must support.
    pub alpha_min: f64,
    /// Box-rule nodes per coordinate for far-field integrals.
    pub box_nodes: usize,
}

impl Default for QuadratureSpec {
    fn default() -> Self {
        Self {
            lambda_nodes: 16,
            tail_tol: 1e-16,
            theta_nodes: 12,
            sphere_nodes: 16,
            jacobi_nodes: 24,
            panel_nodes: 20,
            v_split: 1.0,
            alpha_min: -10.0,
            box_nodes: 72,
        }
    }
}

impl QuadratureSpec {
    /// A cheaper variant used for error estimates and nested evaluations.
    pub fn coarse(&self) -> Self {
        Self {
            lambda_nodes: (self.lambda_nodes * 3 / 4).max(8),
            theta_nodes: (self.theta_nodes * 3 / 4).max(4),
            sphere_nodes: self.sphere_nodes,
            jacobi_nodes: (self.jacobi_nodes * 2 / 3).max(8),
            panel_nodes: (self.panel_nodes * 3 / 4).max(8),
            box_nodes: (self.box_nodes * 3 / 4).max(8),
            ..self.clone()
        }
    }

    pub fn validate(&self) -> Result<()> {
        let counts = [
            self.lambda_nodes,
            self.theta_nodes,
            self.sphere_nodes,
            self.jacobi_nodes,
            self.panel_nodes,
            self.box_nodes,
        ];
        if counts.iter().any(|&c| c == 0) {
            return Err(Error::InvalidArgument("quadrature node counts must be positive".into()));
        }
        if !(self.tail_tol > 0.0 && self.tail_tol < 1.0) || !(self.v_split > 0.0) {
            return Err(Error::InvalidArgument("tail_tol in (0,1) and v_split > 0 required".into()));
        }
        Ok(())
    }

    /// Stable key for caches.
    pub fn key(&self) -> String {
        serde_json::to_string(self).expect("spec serializes")
    }
}

/// Monte-Carlo settings for the diffusion sampler.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SamplerSpec {
    pub paths: usize,
    pub steps: usize,
    pub seed: u64,
    pub t: f64,
}

impl Default for SamplerSpec {
    fn default() -> Self {
        Self {
            paths: 200_000,
            steps: 2000,
            seed: 7,
            t: 1.0,
        }
    }
}

impl SamplerSpec {
    pub fn new(paths: usize, steps: usize, seed: u64, t: f64) -> Result<Self> {
        let s = Self { paths, steps, seed, t };
        s.validate()?;
        Ok(s)
    }

    pub fn validate(&self) -> Result<()> {
        if self.paths == 0 || self.steps == 0 {
            return Err(Error::InvalidArgument("paths and steps must be at least 1".into()));
        }
        if !(self.t > 0.0) || !self.t.is_finite() {
            return Err(Error::NonPositiveTime(self.t));
        }
        Ok(())
    }
}

/// Mean with its standard error.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Estimate {
    pub value: f64,
    pub std_err: f64,
}

impl Estimate {
    pub fn exact(value: f64) -> Self {
        Self { value, std_err: 0.0 }
    }

    /// `|value − target|` measured in standard errors.
    pub fn z_score(&self, target: f64) -> f64 {
        if self.std_err == 0.0 {
            if self.value == target {
                0.0
            } else {
                f64::INFINITY
            }
        } else {
            (self.value - target).abs() / self.std_err
        }
    }
}
