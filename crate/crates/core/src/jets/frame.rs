//! Left-invariant frame fields acting on jets, sub-Laplacian powers and
//! Z-Taylor polynomials.
//!
//! With 1-based indices, `Z_j = ∂_j − ½ y_{j+n} ∂_u` and
//! `Z_{j+n} = ∂_{j+n} + ½ y_j ∂_u` for `j ≤ n`, and `Z_{2n+1} = T = ∂_u`, so
//! `[Z_j, Z_{j+n}] = T`.

use serde::{Deserialize, Serialize};

use super::Jet;
use crate::error::{Error, Result};
use crate::special::factorial;

/// Degree cap for Z-Taylor polynomials unless explicitly overridden.
pub const MAX_ZTAYLOR_DEGREE: usize = 7;

#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct VfWord {
    n: usize,
    letters: Vec<usize>,
}

impl VfWord {
    pub fn new(n: usize, letters: Vec<usize>) -> Result<Self> {
        let max = 2 * n + 1;
        if let Some(&bad) = letters.iter().find(|&&i| i == 0 || i > max) {
            return Err(Error::FrameIndex { index: bad, max });
        }
        Ok(Self { n, letters })
    }

    pub fn letters(&self) -> &[usize] {
        &self.letters
    }

    pub fn len(&self) -> usize {
        self.letters.len()
    }

    pub fn is_empty(&self) -> bool {
        self.letters.is_empty()
    }

    pub fn weight(&self) -> usize {
        self.letters
            .iter()
            .map(|&i| if i == 2 * self.n + 1 { 2 } else { 1 })
            .sum()
    }
}

fn group_n(jet: &Jet) -> Result<usize> {
    let d = jet.nvars();
    if d < 3 || d % 2 == 0 {
        return Err(Error::DimensionMismatch { expected: 3, got: d });
    }
    Ok((d - 1) / 2)
}

/// Applies the single frame field `Z_i` (1-based).
pub fn frame(jet: &Jet, i: usize) -> Result<Jet> {
    let n = group_n(jet)?;
    let u = 2 * n;
    if i == 0 || i > 2 * n + 1 {
        return Err(Error::FrameIndex {
            index: i,
            max: 2 * n + 1,
        });
    }
    let v = i - 1;
    let d = jet.partial(v)?;
    if v == u {
        return Ok(d);
    }
    let du = jet.partial(u)?;
    let corr = if v < n {
        du.mul_coordinate(v + n).scale(-0.5)
    } else {
        du.mul_coordinate(v - n).scale(0.5)
    };
    Ok(d.add(&corr))
}

/// `Z_{i_1} ⋯ Z_{i_k} f`; the rightmost letter acts first.
pub fn apply_word(jet: &Jet, word: &VfWord) -> Result<Jet> {
    if word.len() > jet.order() {
        return Err(Error::OrderOverflow {
            needed: word.len(),
            available: jet.order(),
        });
    }
    let mut cur = jet.clone();
    for &i in word.letters.iter().rev() {
        cur = frame(&cur, i)?;
    }
    Ok(cur)
}

/// `L f = −Σ_{i ≤ 2n} Z_i² f`.
pub fn sublaplacian(jet: &Jet) -> Result<Jet> {
    let n = group_n(jet)?;
    if jet.order() < 2 {
        return Err(Error::OrderOverflow {
            needed: 2,
            available: jet.order(),
        });
    }
    let mut acc: Option<Jet> = None;
    for i in 1..=2 * n {
        let zz = frame(&frame(jet, i)?, i)?;
        acc = Some(match acc {
            None => zz,
            Some(a) => a.add(&zz),
        });
    }
    Ok(acc.unwrap().scale(-1.0))
}

pub fn sublaplacian_power(jet: &Jet, m: usize) -> Result<Jet> {
    if 2 * m > jet.order() {
        return Err(Error::OrderOverflow {
            needed: 2 * m,
            available: jet.order(),
        });
    }
    let mut cur = jet.clone();
    for _ in 0..m {
        cur = sublaplacian(&cur)?;
    }
    Ok(cur)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ZTerm {
    pub exponent: Vec<u8>,
    pub weight: usize,
    pub coeff: f64,
}

/// `y ↦ T_deg(φ, x)(x·y)` as a polynomial in exponential coordinates `y`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ZTaylor {
    n: usize,
    degree: usize,
    terms: Vec<ZTerm>,
}

impl ZTaylor {
    /// Builds an expansion from explicit terms; weights are recomputed.
    pub fn from_terms(n: usize, degree: usize, terms: Vec<(Vec<u8>, f64)>) -> Self {
        let terms = terms
            .into_iter()
            .map(|(exponent, coeff)| ZTerm {
                weight: monomial_weight(n, &exponent),
                exponent,
                coeff,
            })
            .filter(|t| t.weight <= degree)
            .collect();
        Self { n, degree, terms }
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn degree(&self) -> usize {
        self.degree
    }

    pub fn terms(&self) -> &[ZTerm] {
        &self.terms
    }

    pub fn eval(&self, y: &[f64]) -> f64 {
        self.terms
            .iter()
            .map(|t| {
                t.coeff
                    * t.exponent
                        .iter()
                        .zip(y)
                        .filter(|(&k, _)| k > 0)
                        .map(|(&k, &yv)| yv.powi(k as i32))
                        .product::<f64>()
            })
            .sum()
    }

    /// Terms of homogeneous weight exactly `w`.
    pub fn homogeneous(&self, w: usize) -> impl Iterator<Item = &ZTerm> {
        self.terms.iter().filter(move |t| t.weight == w)
    }

    /// Restricts to weights `≤ deg`.
    pub fn truncated(&self, deg: usize) -> ZTaylor {
        ZTaylor {
            n: self.n,
            degree: deg.min(self.degree),
            terms: self.terms.iter().filter(|t| t.weight <= deg).cloned().collect(),
        }
    }
}

pub fn monomial_weight(n: usize, e: &[u8]) -> usize {
    e[..2 * n].iter().map(|&k| k as usize).sum::<usize>() + 2 * e[2 * n] as usize
}

/// Z-Taylor polynomial of homogeneous degree `deg` from a jet at `x`.
///
/// `φ(x·y)` is re-expanded in `y` through the linear substitution
/// `h_i = y_i`, `h_u = y_u + ½ ω(x, y)`, and monomials of weight `> deg`
/// are dropped. Grouping by weight this equals the word sum
/// `Σ_w Z_wφ(x) y^w / k!` because `y = exp(Σ y_i Z_i)`.
pub fn ztaylor(jet: &Jet, deg: usize) -> Result<ZTaylor> {
    if deg > MAX_ZTAYLOR_DEGREE {
        return Err(Error::Unsupported(format!(
            "Z-Taylor degree {deg} exceeds {MAX_ZTAYLOR_DEGREE}"
        )));
    }
    ztaylor_unbounded(jet, deg)
}

/// As [`ztaylor`] without the degree cap.
pub fn ztaylor_unbounded(jet: &Jet, deg: usize) -> Result<ZTaylor> {
    let n = group_n(jet)?;
    if deg > jet.order() {
        return Err(Error::OrderOverflow {
            needed: deg,
            available: jet.order(),
        });
    }
    let d = 2 * n + 1;
    let x = jet.center();
    let mut map = vec![vec![0.0; d]; d];
    for (i, row) in map.iter_mut().enumerate() {
        row[i] = 1.0;
    }
    for i in 0..n {
        map[2 * n][i + n] += 0.5 * x[i];
        map[2 * n][i] -= 0.5 * x[i + n];
    }
    let sub = jet.linear_substitute(&vec![0.0; d], &map);
    let basis = sub.basis();
    let mut terms = Vec::new();
    for (idx, &c) in sub.coeffs().iter().enumerate() {
        let e = basis.exponent(idx);
        let w = monomial_weight(n, e);
        if w <= deg && c != 0.0 && basis.degree(idx) <= sub.order() {
            terms.push(ZTerm {
                exponent: e.to_vec(),
                weight: w,
                coeff: c,
            });
        }
    }
    Ok(ZTaylor {
        n,
        degree: deg,
        terms,
    })
}

/// Word form: every ordered word of weight `≤ deg` with coefficient
/// `Z_wφ(x)/k!`.
pub fn ztaylor_words(jet: &Jet, deg: usize) -> Result<Vec<(VfWord, f64)>> {
    let n = group_n(jet)?;
    if deg > jet.order() {
        return Err(Error::OrderOverflow {
            needed: deg,
            available: jet.order(),
        });
    }
    let mut out = Vec::new();
    let mut letters = Vec::new();
    words_dfs(n, jet, deg, 0, &mut letters, &mut out)?;
    Ok(out)
}

fn words_dfs(
    n: usize,
    cur: &Jet,
    deg: usize,
    weight: usize,
    letters: &mut Vec<usize>,
    out: &mut Vec<(VfWord, f64)>,
) -> Result<()> {
    let k = letters.len();
    out.push((
        VfWord {
            n,
            letters: letters.clone(),
        },
        cur.value() / factorial(k),
    ));
    for i in 1..=2 * n + 1 {
        let w = if i == 2 * n + 1 { 2 } else { 1 };
        if weight + w > deg {
            continue;
        }
        // prepend: Z_i (Z_rest φ)
        let next = frame(cur, i)?;
        letters.insert(0, i);
        words_dfs(n, &next, deg, weight + w, letters, out)?;
        letters.remove(0);
    }
    Ok(())
}

/// Evaluates a word-form expansion at `y`.
pub fn eval_words(words: &[(VfWord, f64)], y: &[f64]) -> f64 {
    words
        .iter()
        .map(|(w, c)| c * w.letters.iter().map(|&i| y[i - 1]).product::<f64>())
        .sum()
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CommutatorResidual {
    pub permutation_sum: f64,
    pub closed_form: f64,
    pub residual: f64,
    /// Largest absolute value among the individual terms; the natural scale
    /// for a relative residual.
    pub scale: f64,
}

impl CommutatorResidual {
    pub fn relative(&self) -> f64 {
        if self.scale == 0.0 {
            self.residual.abs()
        } else {
            self.residual.abs() / self.scale
        }
    }
}

/// Compares the sum over the 15 orderings of `{i,i,i,i,j,j}` with
/// `5Z_i⁴Z_j² + 5Z_i²Z_j²Z_i² + 5Z_j²Z_i⁴ − 25T²Z_i²` when
/// `[Z_i, Z_j] = ±T`, and with the same expression without the `T²` term
/// when the fields commute.
pub fn commutator_identity_check(jet: &Jet, i: usize, j: usize) -> Result<CommutatorResidual> {
    let n = group_n(jet)?;
    let horizontal = |k: usize| (1..=2 * n).contains(&k);
    if !horizontal(i) || !horizontal(j) || i == j {
        return Err(Error::NotConjugatePair { i, j });
    }
    if jet.order() < 6 {
        return Err(Error::OrderOverflow {
            needed: 6,
            available: jet.order(),
        });
    }
    let conjugate = i.abs_diff(j) == n;
    let word = |l: Vec<usize>| VfWord { n, letters: l };
    let value = |l: Vec<usize>| apply_word(jet, &word(l)).map(|r| r.value());

    let mut sum = 0.0;
    let mut scale: f64 = 0.0;
    for a in 0..6 {
        for b in a + 1..6 {
            let mut l = vec![i; 6];
            l[a] = j;
            l[b] = j;
            let v = value(l)?;
            scale = scale.max(v.abs());
            sum += v;
        }
    }
    let t = 2 * n + 1;
    let mut parts = vec![
        5.0 * value(vec![i, i, i, i, j, j])?,
        5.0 * value(vec![i, i, j, j, i, i])?,
        5.0 * value(vec![j, j, i, i, i, i])?,
    ];
    if conjugate {
        parts.push(-25.0 * value(vec![t, t, i, i])?);
    }
    for p in &parts {
        scale = scale.max(p.abs());
    }
    let closed: f64 = parts.iter().sum();
    Ok(CommutatorResidual {
        permutation_sum: sum,
        closed_form: closed,
        residual: sum - closed,
        scale,
    })
}
