//! Quadrature rules shared by the deterministic backends.
//!
//! Everything here is a fixed rule: nodes and weights are produced once and
//! applied to whatever integrand the caller has. Gauss–Jacobi and
//! Gauss–Hermite use Golub–Welsch; Gauss–Legendre uses Newton on `P_n`.

use std::f64::consts::PI;

use nalgebra::{DMatrix, SymmetricEigen};

use crate::special::gamma;

#[derive(Debug, Clone, PartialEq)]
pub struct Rule {
    pub nodes: Vec<f64>,
    pub weights: Vec<f64>,
}

impl Rule {
    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }

    pub fn integrate<F: FnMut(f64) -> f64>(&self, mut f: F) -> f64 {
        self.nodes
            .iter()
            .zip(&self.weights)
            .map(|(&x, &w)| w * f(x))
            .sum()
    }

    pub fn iter(&self) -> impl Iterator<Item = (f64, f64)> + '_ {
        self.nodes.iter().copied().zip(self.weights.iter().copied())
    }

    /// Affine map of a rule on `[-1, 1]` to `[a, b]`.
    pub fn mapped(&self, a: f64, b: f64) -> Rule {
        let h = 0.5 * (b - a);
        let c = 0.5 * (b + a);
        Rule {
            nodes: self.nodes.iter().map(|x| c + h * x).collect(),
            weights: self.weights.iter().map(|w| w * h).collect(),
        }
    }

    pub fn concat(parts: impl IntoIterator<Item = Rule>) -> Rule {
        let mut out = Rule {
            nodes: Vec::new(),
            weights: Vec::new(),
        };
        for p in parts {
            out.nodes.extend(p.nodes);
            out.weights.extend(p.weights);
        }
        out
    }
}

/// Gauss–Legendre on `[-1, 1]`.
pub fn gauss_legendre(n: usize) -> Rule {
    assert!(n >= 1);
    let mut nodes = vec![0.0; n];
    let mut weights = vec![0.0; n];
    let m = n.div_ceil(2);
    for i in 0..m {
        let mut x = (PI * (i as f64 + 0.75) / (n as f64 + 0.5)).cos();
        let mut dp = 0.0;
        for _ in 0..100 {
            let (mut p0, mut p1) = (1.0, x);
            for k in 2..=n {
                let kf = k as f64;
                let p2 = ((2.0 * kf - 1.0) * x * p1 - (kf - 1.0) * p0) / kf;
                p0 = p1;
                p1 = p2;
            }
            let pn = if n == 1 { x } else { p1 };
            let pm1 = if n == 1 { 1.0 } else { p0 };
            dp = n as f64 * (x * pn - pm1) / (x * x - 1.0);
            let dx = pn / dp;
            x -= dx;
            if dx.abs() < 1e-16 {
                break;
            }
        }
        nodes[i] = -x;
        nodes[n - 1 - i] = x;
        let w = 2.0 / ((1.0 - x * x) * dp * dp);
        weights[i] = w;
        weights[n - 1 - i] = w;
    }
    if n % 2 == 1 {
        nodes[n / 2] = 0.0;
    }
    Rule { nodes, weights }
}

pub fn gauss_legendre_on(a: f64, b: f64, n: usize) -> Rule {
    gauss_legendre(n).mapped(a, b)
}

/// Composite Gauss–Legendre over the given panel breakpoints.
pub fn composite(breaks: &[f64], order: usize) -> Rule {
    let base = gauss_legendre(order);
    Rule::concat(breaks.windows(2).map(|w| base.mapped(w[0], w[1])))
}

pub fn uniform_breaks(a: f64, b: f64, panels: usize) -> Vec<f64> {
    (0..=panels)
        .map(|k| a + (b - a) * k as f64 / panels as f64)
        .collect()
}

/// Breakpoints growing geometrically from `a > 0` to `b`.
pub fn geometric_breaks(a: f64, b: f64, panels: usize) -> Vec<f64> {
    let r = (b / a).ln() / panels as f64;
    (0..=panels).map(|k| a * (r * k as f64).exp()).collect()
}

fn golub_welsch(diag: &[f64], offdiag_sq: &[f64], mu0: f64) -> Rule {
    let n = diag.len();
    let mut j = DMatrix::<f64>::zeros(n, n);
    for i in 0..n {
        j[(i, i)] = diag[i];
        if i + 1 < n {
            let b = offdiag_sq[i].sqrt();
            j[(i, i + 1)] = b;
            j[(i + 1, i)] = b;
        }
    }
    let eig = SymmetricEigen::new(j);
    let mut pairs: Vec<(f64, f64)> = (0..n)
        .map(|k| {
            let v0 = eig.eigenvectors[(0, k)];
            (eig.eigenvalues[k], mu0 * v0 * v0)
        })
        .collect();
    pairs.sort_by(|a, b| a.0.total_cmp(&b.0));
    Rule {
        nodes: pairs.iter().map(|p| p.0).collect(),
        weights: pairs.iter().map(|p| p.1).collect(),
    }
}

/// Gauss–Jacobi for the weight `(1 − x)^a (1 + x)^b` on `[-1, 1]`, `a, b > −1`.
pub fn gauss_jacobi(n: usize, a: f64, b: f64) -> Rule {
    assert!(a > -1.0 && b > -1.0 && n >= 1);
    let ab = a + b;
    let mut diag = vec![0.0; n];
    let mut off = vec![0.0; n.saturating_sub(1)];
    diag[0] = (b - a) / (ab + 2.0);
    for k in 1..n {
        let kf = k as f64;
        let s = 2.0 * kf + ab;
        diag[k] = (b * b - a * a) / (s * (s + 2.0));
    }
    for k in 1..n {
        let kf = k as f64;
        let s = 2.0 * kf + ab;
        off[k - 1] = if k == 1 {
            4.0 * (1.0 + a) * (1.0 + b) / ((2.0 + ab).powi(2) * (3.0 + ab))
        } else {
            4.0 * kf * (kf + a) * (kf + b) * (kf + ab) / (s * s * (s + 1.0) * (s - 1.0))
        };
    }
    let mu0 = 2f64.powf(ab + 1.0) * gamma(a + 1.0).unwrap() * gamma(b + 1.0).unwrap()
        / gamma(ab + 2.0).unwrap();
    golub_welsch(&diag, &off, mu0)
}

/// Rule for `∫_0^L v^p f(v) dv`, `p > −1`: the weight is folded into the weights.
pub fn power_weighted(n: usize, p: f64, length: f64) -> Rule {
    let base = gauss_jacobi(n, 0.0, p);
    let half = 0.5 * length;
    let scale = half.powf(p + 1.0);
    Rule {
        nodes: base.nodes.iter().map(|x| half * (1.0 + x)).collect(),
        weights: base.weights.iter().map(|w| w * scale).collect(),
    }
}

/// Gauss–Hermite for the weight `e^{−x²}` on the real line.
pub fn gauss_hermite(n: usize) -> Rule {
    let diag = vec![0.0; n];
    let off: Vec<f64> = (1..n).map(|k| k as f64 / 2.0).collect();
    golub_welsch(&diag, &off, PI.sqrt())
}

/// Fejér's first rule on `[-1, 1]` (Chebyshev first-kind nodes, ascending).
pub fn fejer1(n: usize) -> Rule {
    let mut nodes = Vec::with_capacity(n);
    let mut weights = Vec::with_capacity(n);
    for k in (0..n).rev() {
        let th = (2 * k + 1) as f64 * PI / (2 * n) as f64;
        let mut s = 0.0;
        for j in 1..=n / 2 {
            let jf = j as f64;
            s += (2.0 * jf * th).cos() / (4.0 * jf * jf - 1.0);
        }
        nodes.push(th.cos());
        weights.push(2.0 / n as f64 * (1.0 - 2.0 * s));
    }
    Rule { nodes, weights }
}

/// Trapezoid rule for a `2π`-periodic integrand.
pub fn periodic(n: usize) -> Rule {
    let w = 2.0 * PI / n as f64;
    Rule {
        nodes: (0..n).map(|k| w * k as f64).collect(),
        weights: vec![w; n],
    }
}

/// Chebyshev interpolant on `[a, b]` built from values at the first-kind
/// nodes, i.e. at `fejer1(n).mapped(a, b).nodes`.
#[derive(Debug, Clone)]
pub struct Chebyshev {
    a: f64,
    b: f64,
    coeffs: Vec<f64>,
}

impl Chebyshev {
    /// `values[k]` must be the function at the `k`-th ascending node.
    pub fn from_values(a: f64, b: f64, values: &[f64]) -> Self {
        let n = values.len();
        let mut coeffs = vec![0.0; n];
        for (j, c) in coeffs.iter_mut().enumerate() {
            let mut s = 0.0;
            for (idx, v) in values.iter().enumerate() {
                // ascending order: idx ↔ k = n − 1 − idx
                let k = n - 1 - idx;
                let th = (2 * k + 1) as f64 * PI / (2 * n) as f64;
                s += v * (j as f64 * th).cos();
            }
            *c = 2.0 * s / n as f64;
        }
        coeffs[0] *= 0.5;
        Self { a, b, coeffs }
    }

    pub fn eval(&self, x: f64) -> f64 {
        let t = (2.0 * x - self.a - self.b) / (self.b - self.a);
        let (mut b1, mut b2) = (0.0, 0.0);
        for &c in self.coeffs.iter().skip(1).rev() {
            let b0 = 2.0 * t * b1 - b2 + c;
            b2 = b1;
            b1 = b0;
        }
        t * b1 - b2 + self.coeffs[0]
    }

    /// Magnitude of the trailing coefficients, a cheap truncation estimate.
    pub fn tail(&self) -> f64 {
        self.coeffs.iter().rev().take(3).map(|c| c.abs()).sum()
    }
}

/// Pairwise summation with a fixed split, independent of how the input was
/// produced.
pub fn pairwise_sum(v: &[f64]) -> f64 {
    if v.len() <= 16 {
        return v.iter().sum();
    }
    let mid = v.len() / 2;
    pairwise_sum(&v[..mid]) + pairwise_sum(&v[mid..])
}
