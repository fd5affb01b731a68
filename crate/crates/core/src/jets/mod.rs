//! Truncated multivariate Taylor arithmetic.
//!
//! A [`Jet`] of order `K` centered at `c` stores the coefficients of
//! `Σ_{|γ| ≤ K} a_γ h^γ`, `h = y − c`, and every operation truncates at the
//! order it can still guarantee. Differentiating lowers the valid order by
//! one, so a word of `k` frame fields needs a jet of order at least `k`.

mod frame;

use std::collections::HashMap;
use std::sync::Arc;

use once_cell::sync::Lazy;
use parking_lot::Mutex;

pub use frame::{
    apply_word, commutator_identity_check, eval_words, frame, monomial_weight, ztaylor_unbounded, ZTerm, sublaplacian, sublaplacian_power, ztaylor,
    ztaylor_words, CommutatorResidual, VfWord, ZTaylor,
};

use crate::error::{Error, Result};

/// Default maximum jet order: `T_7` needs seven, plus one spare.
pub const DEFAULT_MAX_ORDER: usize = 8;

pub type Exponent = Vec<u8>;

#[derive(Debug)]
pub struct MonomialBasis {
    nvars: usize,
    order: usize,
    exps: Vec<Exponent>,
    degrees: Vec<usize>,
    index: HashMap<Exponent, usize>,
    mul: Vec<(u32, u32, u32)>,
    deriv: Vec<Vec<(u32, u32, f64)>>,
    shift: Vec<Vec<(u32, u32)>>,
}

impl MonomialBasis {
    fn build(nvars: usize, order: usize) -> Self {
        let mut exps: Vec<Exponent> = Vec::new();
        for deg in 0..=order {
            let mut cur = vec![0u8; nvars];
            enumerate_degree(nvars, deg, 0, &mut cur, &mut exps);
        }
        let degrees: Vec<usize> = exps
            .iter()
            .map(|e| e.iter().map(|&v| v as usize).sum())
            .collect();
        let index: HashMap<Exponent, usize> =
            exps.iter().enumerate().map(|(i, e)| (e.clone(), i)).collect();

        let mut mul = Vec::new();
        for (i, ei) in exps.iter().enumerate() {
            for (j, ej) in exps.iter().enumerate() {
                if degrees[i] + degrees[j] > order {
                    continue;
                }
                let sum: Exponent = ei.iter().zip(ej).map(|(a, b)| a + b).collect();
                mul.push((i as u32, j as u32, index[&sum] as u32));
            }
        }

        let mut deriv = vec![Vec::new(); nvars];
        let mut shift = vec![Vec::new(); nvars];
        for (i, e) in exps.iter().enumerate() {
            for v in 0..nvars {
                if e[v] > 0 {
                    let mut d = e.clone();
                    d[v] -= 1;
                    deriv[v].push((i as u32, index[&d] as u32, e[v] as f64));
                }
                if degrees[i] < order {
                    let mut s = e.clone();
                    s[v] += 1;
                    shift[v].push((i as u32, index[&s] as u32));
                }
            }
        }
        Self {
            nvars,
            order,
            exps,
            degrees,
            index,
            mul,
            deriv,
            shift,
        }
    }

    pub fn nvars(&self) -> usize {
        self.nvars
    }

    pub fn order(&self) -> usize {
        self.order
    }

    pub fn len(&self) -> usize {
        self.exps.len()
    }

    pub fn is_empty(&self) -> bool {
        self.exps.is_empty()
    }

    pub fn exponent(&self, i: usize) -> &[u8] {
        &self.exps[i]
    }

    pub fn degree(&self, i: usize) -> usize {
        self.degrees[i]
    }

    pub fn index_of(&self, e: &[u8]) -> Option<usize> {
        self.index.get(e).copied()
    }
}

fn enumerate_degree(nvars: usize, left: usize, v: usize, cur: &mut Exponent, out: &mut Vec<Exponent>) {
    if v == nvars - 1 {
        cur[v] = left as u8;
        out.push(cur.clone());
        cur[v] = 0;
        return;
    }
    for k in (0..=left).rev() {
        cur[v] = k as u8;
        enumerate_degree(nvars, left - k, v + 1, cur, out);
    }
    cur[v] = 0;
}

static BASES: Lazy<Mutex<HashMap<(usize, usize), Arc<MonomialBasis>>>> =
    Lazy::new(|| Mutex::new(HashMap::new()));

/// Shared basis for `nvars` variables up to total degree `order`.
pub fn basis(nvars: usize, order: usize) -> Arc<MonomialBasis> {
    let mut map = BASES.lock();
    map.entry((nvars, order))
        .or_insert_with(|| Arc::new(MonomialBasis::build(nvars, order)))
        .clone()
}

#[derive(Debug, Clone)]
pub struct Jet {
    basis: Arc<MonomialBasis>,
    center: Vec<f64>,
    order: usize,
    coeffs: Vec<f64>,
}

impl Jet {
    pub fn zero(center: &[f64], order: usize) -> Self {
        let basis = basis(center.len(), order);
        let len = basis.len();
        Self {
            basis,
            center: center.to_vec(),
            order,
            coeffs: vec![0.0; len],
        }
    }

    pub fn constant(center: &[f64], order: usize, c: f64) -> Self {
        let mut j = Self::zero(center, order);
        j.coeffs[0] = c;
        j
    }

    /// The coordinate function `y ↦ y_v` expanded at the center.
    pub fn coordinate(center: &[f64], order: usize, v: usize) -> Self {
        let mut j = Self::constant(center, order, center[v]);
        if order >= 1 {
            let mut e = vec![0u8; center.len()];
            e[v] = 1;
            let idx = j.basis.index_of(&e).unwrap();
            j.coeffs[idx] = 1.0;
        }
        j
    }

    pub fn center(&self) -> &[f64] {
        &self.center
    }

    pub fn order(&self) -> usize {
        self.order
    }

    pub fn nvars(&self) -> usize {
        self.center.len()
    }

    pub fn basis(&self) -> &MonomialBasis {
        &self.basis
    }

    pub fn coeffs(&self) -> &[f64] {
        &self.coeffs
    }

    pub fn value(&self) -> f64 {
        self.coeffs[0]
    }

    pub fn coeff(&self, e: &[u8]) -> f64 {
        self.basis
            .index_of(e)
            .filter(|&i| self.basis.degree(i) <= self.order)
            .map(|i| self.coeffs[i])
            .unwrap_or(0.0)
    }

    fn like(&self, order: usize) -> Self {
        Self {
            basis: self.basis.clone(),
            center: self.center.clone(),
            order,
            coeffs: vec![0.0; self.coeffs.len()],
        }
    }

    fn truncate(&mut self) {
        for (i, c) in self.coeffs.iter_mut().enumerate() {
            if self.basis.degrees[i] > self.order {
                *c = 0.0;
            }
        }
    }

    fn check_compatible(&self, other: &Jet) {
        assert_eq!(self.center, other.center, "jets expanded at different centers");
        assert!(Arc::ptr_eq(&self.basis, &other.basis), "jets on different bases");
    }

    pub fn add(&self, other: &Jet) -> Jet {
        self.check_compatible(other);
        let mut out = self.like(self.order.min(other.order));
        for (o, (a, b)) in out.coeffs.iter_mut().zip(self.coeffs.iter().zip(&other.coeffs)) {
            *o = a + b;
        }
        out.truncate();
        out
    }

    pub fn sub(&self, other: &Jet) -> Jet {
        self.add(&other.scale(-1.0))
    }

    pub fn scale(&self, s: f64) -> Jet {
        let mut out = self.clone();
        out.coeffs.iter_mut().for_each(|c| *c *= s);
        out
    }

    pub fn add_scalar(&self, s: f64) -> Jet {
        let mut out = self.clone();
        out.coeffs[0] += s;
        out
    }

    pub fn mul(&self, other: &Jet) -> Jet {
        self.check_compatible(other);
        let order = self.order.min(other.order);
        let mut out = self.like(order);
        let degs = &self.basis.degrees;
        for &(i, j, k) in &self.basis.mul {
            let (i, j, k) = (i as usize, j as usize, k as usize);
            if degs[k] <= order {
                out.coeffs[k] += self.coeffs[i] * other.coeffs[j];
            }
        }
        out
    }

    /// `Σ_k f^{(k)}(a₀)/k! (J − a₀)^k` given `derivs[k] = f^{(k)}(a₀)`.
    pub fn compose(&self, derivs: &[f64]) -> Jet {
        let mut nil = self.clone();
        nil.coeffs[0] = 0.0;
        let mut out = Jet::constant(&self.center, self.order, derivs[0]);
        let mut power = Jet::constant(&self.center, self.order, 1.0);
        let mut fact = 1.0;
        for (k, d) in derivs.iter().enumerate().skip(1).take(self.order) {
            power = power.mul(&nil);
            fact *= k as f64;
            out = out.add(&power.scale(d / fact));
        }
        out
    }

    pub fn exp(&self) -> Jet {
        let e = self.coeffs[0].exp();
        self.compose(&vec![e; self.order + 1])
    }

    pub fn powi(&self, k: u32) -> Jet {
        let mut out = Jet::constant(&self.center, self.order, 1.0);
        for _ in 0..k {
            out = out.mul(self);
        }
        out
    }

    /// `∂/∂y_v`, valid to one order less.
    pub fn partial(&self, v: usize) -> Result<Jet> {
        if self.order == 0 {
            return Err(Error::OrderOverflow {
                needed: 1,
                available: 0,
            });
        }
        let mut out = self.like(self.order - 1);
        for &(src, dst, f) in &self.basis.deriv[v] {
            out.coeffs[dst as usize] += f * self.coeffs[src as usize];
        }
        out.truncate();
        Ok(out)
    }

    /// Product with the coordinate function `y_v`; the order is unchanged.
    pub fn mul_coordinate(&self, v: usize) -> Jet {
        let mut out = self.scale(self.center[v]);
        for &(src, dst) in &self.basis.shift[v] {
            out.coeffs[dst as usize] += self.coeffs[src as usize];
        }
        out.truncate();
        out
    }

    /// Re-expands `h ↦ Σ a_γ h^γ` under the linear substitution
    /// `h_v = Σ_w map[v][w] y_w` at a new center.
    pub fn linear_substitute(&self, new_center: &[f64], map: &[Vec<f64>]) -> Jet {
        let d = self.nvars();
        let order = self.order;
        let mut lin: Vec<Jet> = Vec::with_capacity(d);
        for row in map.iter().take(d) {
            let mut l = Jet::zero(new_center, order);
            for (w, &a) in row.iter().enumerate() {
                if a != 0.0 && order >= 1 {
                    let mut e = vec![0u8; d];
                    e[w] = 1;
                    let idx = l.basis.index_of(&e).unwrap();
                    l.coeffs[idx] = a;
                }
            }
            lin.push(l);
        }
        let powers: Vec<Vec<Jet>> = lin
            .iter()
            .map(|l| {
                let mut p = vec![Jet::constant(new_center, order, 1.0)];
                for k in 1..=order {
                    let next = p[k - 1].mul(l);
                    p.push(next);
                }
                p
            })
            .collect();
        let mut out = Jet::zero(new_center, order);
        for (i, e) in self.basis.exps.iter().enumerate() {
            let c = self.coeffs[i];
            if c == 0.0 || self.basis.degrees[i] > order {
                continue;
            }
            let mut term = Jet::constant(new_center, order, c);
            for (v, &k) in e.iter().enumerate() {
                if k > 0 {
                    term = term.mul(&powers[v][k as usize]);
                }
            }
            out = out.add(&term);
        }
        out
    }

    /// Evaluates the truncated polynomial at `y`.
    pub fn eval(&self, y: &[f64]) -> f64 {
        let h: Vec<f64> = y.iter().zip(&self.center).map(|(a, c)| a - c).collect();
        self.basis
            .exps
            .iter()
            .enumerate()
            .filter(|(i, _)| self.basis.degrees[*i] <= self.order)
            .map(|(i, e)| {
                self.coeffs[i]
                    * e.iter()
                        .zip(&h)
                        .map(|(&k, &hv)| hv.powi(k as i32))
                        .product::<f64>()
            })
            .sum()
    }
}
