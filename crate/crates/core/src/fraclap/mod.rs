//! Fractional powers of the sub-Laplacian on Schwartz test functions.
//!
//! `ψ(x, α) = ∫ [φ(x·y) − T_{2m+1}(φ, x)(x·y)] P_α(y) dy` for `α` in the
//! strip `(−2m−2, −2m)`, without subtraction for `α ∈ (0, Q)`, and
//! `L^{−α/2} φ = ψ(·, α)`. At `α = −2m` the value is the moment formula
//! `(−1)^m m! Σ_{w(γ)=2m} c_γ μ_γ`, with `c_γ` the Z-Taylor coefficients and
//! `μ_γ` the heat-kernel moments at `t = 1`.

mod directions;
mod semigroup;
mod spatial;
mod time;

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use crate::config::{Estimate, QuadratureSpec};
use crate::error::{Error, Result};
use crate::heatkernel::{hk_moment, hk_moment_quadrature, HeatCloud};
use crate::hgroup::Point;
use crate::jets::{ztaylor, ztaylor_unbounded, ZTaylor};
use crate::special::factorial;
use crate::testfn::Field;

pub use semigroup::{semigroup_check, sublaplacian_fd, SemigroupCheck, SemigroupOptions, RadialAxis, SublaplacianPower, TabulatedField};
pub use spatial::{psi_spatial, psi_spatial_with, SpatialMode, SpatialOptions};
pub use time::psi_time;

/// Strip bookkeeping for `α`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct StripSelector {
    pub alpha: f64,
    /// Smallest nonnegative `m` with `α > −2m − 2`.
    pub m: usize,
    pub at_pole: bool,
    pub q: f64,
}

impl StripSelector {
    pub fn new(alpha: f64, n: usize) -> Result<Self> {
        let q = (2 * n + 2) as f64;
        if !alpha.is_finite() || alpha >= q {
            return Err(Error::AlphaOutOfRange { alpha, q });
        }
        let half = -alpha / 2.0;
        let m = if alpha < 0.0 { half.floor() as usize } else { 0 };
        Ok(Self {
            alpha,
            m,
            at_pole: half >= 0.0 && half == half.floor(),
            q,
        })
    }

    /// Weight of the subtracted Z-Taylor polynomial; `None` for `α > 0`.
    pub fn taylor_degree(&self) -> Option<usize> {
        if self.alpha > 0.0 {
            None
        } else {
            Some(2 * self.m + 1)
        }
    }

    /// Pole index when `α = −2m` exactly.
    pub fn pole(&self) -> Option<usize> {
        self.at_pole.then(|| (-self.alpha / 2.0) as usize)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Route {
    Spatial,
    Time,
    Pole,
    NearPole,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PsiResult {
    pub value: f64,
    /// Quadrature-difference or moment-propagated error estimate.
    pub error: f64,
    pub alpha: f64,
    pub route: Route,
    pub strip: usize,
    pub moments: Option<MomentSource>,
}

impl From<PsiResult> for Estimate {
    fn from(p: PsiResult) -> Self {
        Estimate {
            value: p.value,
            std_err: p.error,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum MomentSource {
    /// Deterministic quadrature of the heat kernel.
    Quadrature,
    /// Sample means of a diffusion cloud.
    MonteCarlo,
    /// Closed forms: horizontal coordinates are `N(0, 2)` at `t = 1`,
    /// `E u² = n`, `E y_i² u² = (2/3)(3n + 2)`.
    Reference,
}

/// Heat-kernel moments `μ_γ` at `t = 1` for every even multi-index up to a
/// homogeneous weight.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MomentTable {
    pub n: usize,
    pub max_weight: u32,
    pub source: MomentSource,
    entries: BTreeMap<Vec<u32>, (f64, f64)>,
}

fn weight_of(gamma: &[u32]) -> u32 {
    let d = gamma.len();
    gamma[..d - 1].iter().sum::<u32>() + 2 * gamma[d - 1]
}

/// Multi-indices with all entries even and weight `≤ max_weight`.
pub fn even_multi_indices(n: usize, max_weight: u32) -> Vec<Vec<u32>> {
    let d = 2 * n + 1;
    let mut out = Vec::new();
    let mut cur = vec![0u32; d];
    fn rec(pos: usize, left: u32, cur: &mut Vec<u32>, out: &mut Vec<Vec<u32>>) {
        let d = cur.len();
        if pos == d {
            out.push(cur.clone());
            return;
        }
        let step = if pos == d - 1 { 4 } else { 2 };
        let mut k = 0;
        while k * step <= left {
            cur[pos] = 2 * k;
            rec(pos + 1, left - k * step, cur, out);
            k += 1;
        }
        cur[pos] = 0;
    }
    rec(0, max_weight, &mut cur, &mut out);
    out.sort_by_key(|g| (weight_of(g), g.clone()));
    out
}

fn double_factorial_odd(k: u32) -> f64 {
    // (2k − 1)!!
    (1..=k).map(|j| (2 * j - 1) as f64).product()
}

impl MomentTable {
    pub fn reference(n: usize, max_weight: u32) -> Result<Self> {
        if max_weight > 6 {
            return Err(Error::Unsupported(format!(
                "closed-form moments are tabulated up to weight 6 (asked {max_weight})"
            )));
        }
        let d = 2 * n + 1;
        let mut entries = BTreeMap::new();
        for g in even_multi_indices(n, max_weight) {
            let horiz: f64 = g[..d - 1]
                .iter()
                .map(|&e| 2f64.powi(e as i32 / 2) * double_factorial_odd(e / 2))
                .product();
            let hw: u32 = g[..d - 1].iter().sum();
            let v = match (g[d - 1], hw) {
                (0, _) => horiz,
                (2, 0) => n as f64,
                (2, 2) => 2.0 * (3 * n + 2) as f64 / 3.0,
                _ => unreachable!("weight bound excludes this index"),
            };
            entries.insert(g, (v, 0.0));
        }
        Ok(Self {
            n,
            max_weight,
            source: MomentSource::Reference,
            entries,
        })
    }

    pub fn quadrature(n: usize, max_weight: u32, spec: &QuadratureSpec) -> Result<Self> {
        let mut entries = BTreeMap::new();
        for g in even_multi_indices(n, max_weight) {
            let m = hk_moment_quadrature(&g, 1.0, n, spec)?;
            entries.insert(g, (m.value, m.std_err));
        }
        Ok(Self {
            n,
            max_weight,
            source: MomentSource::Quadrature,
            entries,
        })
    }

    /// Sample moments; the cloud must be sampled at `t = 1`.
    pub fn monte_carlo(cloud: &HeatCloud, max_weight: u32) -> Result<Self> {
        if cloud.spec().t != 1.0 {
            return Err(Error::InvalidArgument(format!(
                "moment tables use t = 1, cloud has t = {}",
                cloud.spec().t
            )));
        }
        let mut entries = BTreeMap::new();
        for g in even_multi_indices(cloud.n(), max_weight) {
            let m = hk_moment(&g, 1.0, cloud)?;
            entries.insert(g, (m.value, m.std_err));
        }
        Ok(Self {
            n: cloud.n(),
            max_weight,
            source: MomentSource::MonteCarlo,
            entries,
        })
    }

    /// `(μ_γ, standard error)`.
    pub fn get(&self, gamma: &[u32]) -> Result<(f64, f64)> {
        if gamma.len() != 2 * self.n + 1 {
            return Err(Error::MultiIndexLength {
                expected: 2 * self.n + 1,
                got: gamma.len(),
            });
        }
        if gamma.iter().any(|g| g % 2 == 1) {
            return Ok((0.0, 0.0));
        }
        self.entries
            .get(gamma)
            .copied()
            .ok_or_else(|| Error::MissingMoment(gamma.to_vec()))
    }

    pub fn estimate(&self, gamma: &[u32]) -> Result<Estimate> {
        let (value, std_err) = self.get(gamma)?;
        Ok(Estimate { value, std_err })
    }

    pub fn iter(&self) -> impl Iterator<Item = (&Vec<u32>, &(f64, f64))> {
        self.entries.iter()
    }
}

/// Z-Taylor polynomial of weight `deg` at `x`. Fields without derivatives
/// are accepted for `deg ≤ 1`: the odd-weight part integrates to zero
/// against the symmetric rules used here, leaving only the value.
pub(crate) fn taylor_at<F: Field + ?Sized>(field: &F, x: &Point, deg: usize) -> Result<ZTaylor> {
    let n = x.n();
    match field.jet(x.coords(), deg) {
        Some(jet) => ztaylor(&jet?, deg),
        None if deg <= 1 => Ok(ZTaylor::from_terms(
            n,
            deg,
            vec![(vec![0u8; 2 * n + 1], field.value(x.coords()))],
        )),
        None => Err(Error::Unsupported(format!(
            "a Z-Taylor polynomial of weight {deg} needs derivatives the field does not provide"
        ))),
    }
}

/// Z-Taylor polynomial of weight `deg + 2` when the field has jets, else of
/// weight `deg`. Subtracting the extra even weight keeps the radial integrand
/// free of cancellation near the lower edge of the strip; its integral is
/// added back in closed form by the caller.
pub(crate) fn taylor_at_extended<F: Field + ?Sized>(field: &F, x: &Point, deg: usize) -> Result<ZTaylor> {
    match field.jet(x.coords(), deg + 2) {
        Some(jet) => ztaylor_unbounded(&jet?, deg + 2),
        None => taylor_at(field, x, deg),
    }
}

/// `Σ_{w(γ)=2p} c_γ μ_γ` with its propagated standard error.
pub(crate) fn heat_coefficient(taylor: &ZTaylor, p: usize, moments: &MomentTable) -> Result<(f64, f64)> {
    let mut value = 0.0;
    let mut var = 0.0;
    for term in taylor.homogeneous(2 * p) {
        if term.exponent.iter().any(|e| e % 2 == 1) {
            continue;
        }
        let g: Vec<u32> = term.exponent.iter().map(|&e| e as u32).collect();
        let (mu, se) = moments.get(&g)?;
        value += term.coeff * mu;
        var += (term.coeff * se).powi(2);
    }
    Ok((value, var.sqrt()))
}

/// `ψ(x, −2m) = (−1)^m m! Σ_{w(γ)=2m} c_γ μ_γ`.
pub fn psi_pole<F: Field + ?Sized>(field: &F, x: &Point, m: usize, moments: &MomentTable) -> Result<PsiResult> {
    if moments.n != x.n() {
        return Err(Error::DimensionMismatch {
            expected: 2 * moments.n + 1,
            got: x.coords().len(),
        });
    }
    let taylor = taylor_at(field, x, 2 * m)?;
    let (c, se) = heat_coefficient(&taylor, m, moments)?;
    let f = if m % 2 == 0 { 1.0 } else { -1.0 } * factorial(m);
    Ok(PsiResult {
        value: f * c,
        error: f.abs() * se,
        alpha: -2.0 * m as f64,
        route: Route::Pole,
        strip: m,
        moments: Some(moments.source),
    })
}

/// Coefficients in front of the anisotropic and isotropic operators once the
/// word sum at a pole is collapsed with the measured moments.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CollapseCoefficients {
    pub m: usize,
    /// `T²` for `m = 2`, `T² L` for `m = 3`; zero for the true moments.
    pub anisotropic: Estimate,
    /// `L^m`; one for the true moments.
    pub isotropic: Estimate,
}

pub fn collapse_coefficients(moments: &MomentTable, m: usize) -> Result<CollapseCoefficients> {
    let n = moments.n;
    let d = 2 * n + 1;
    let idx = |pairs: &[(usize, u32)]| {
        let mut g = vec![0u32; d];
        for &(i, e) in pairs {
            g[i] = e;
        }
        g
    };
    let nf = n as f64;
    match m {
        2 => {
            let (uu, su) = moments.get(&idx(&[(d - 1, 2)]))?;
            let (y4, s4) = moments.get(&idx(&[(0, 4)]))?;
            let k = 2.0 * nf / factorial(4);
            Ok(CollapseCoefficients {
                m,
                anisotropic: Estimate {
                    value: uu - k * y4,
                    std_err: (su * su + (k * s4).powi(2)).sqrt(),
                },
                isotropic: Estimate {
                    value: 2.0 * y4 / factorial(4),
                    std_err: 2.0 * s4 / factorial(4),
                },
            })
        }
        3 => {
            let (yu, syu) = moments.get(&idx(&[(0, 2), (d - 1, 2)]))?;
            let (y6, s6) = moments.get(&idx(&[(0, 6)]))?;
            let k = (3.0 * nf + 2.0) / factorial(6);
            Ok(CollapseCoefficients {
                m,
                anisotropic: Estimate {
                    value: 6.0 * (0.25 * yu - k * y6),
                    std_err: 6.0 * ((0.25 * syu).powi(2) + (k * s6).powi(2)).sqrt(),
                },
                isotropic: Estimate {
                    value: 6.0 * y6 / factorial(6),
                    std_err: 6.0 * s6 / factorial(6),
                },
            })
        }
        _ => Err(Error::Unsupported(format!("collapse coefficients exist for m ∈ {{2, 3}}, got {m}"))),
    }
}

/// Distance in `α` below which evaluation switches to the pole value plus a
/// first-order correction.
pub const NEAR_POLE: f64 = 1e-6;

/// `L^s φ(x)`, `s > −Q/2`.
pub fn frac_power<F: Field + ?Sized>(
    field: &F,
    s: f64,
    x: &Point,
    spec: &QuadratureSpec,
    moments: &MomentTable,
) -> Result<PsiResult> {
    let alpha = -2.0 * s;
    let strip = StripSelector::new(alpha, x.n())?;
    if let Some(m) = strip.pole() {
        return psi_pole(field, x, m, moments);
    }
    let nearest = (-alpha / 2.0).round();
    if nearest >= 0.0 && (alpha + 2.0 * nearest).abs() < NEAR_POLE {
        let m = nearest as usize;
        let pole = psi_pole(field, x, m, moments)?;
        let h = 0.01;
        let a0 = -2.0 * nearest;
        let plus = psi_spatial(field, x, a0 + h, spec)?;
        let minus = psi_spatial(field, x, a0 - h, spec)?;
        let slope = (plus.value - minus.value) / (2.0 * h);
        return Ok(PsiResult {
            value: pole.value + slope * (alpha - a0),
            error: pole.error + (plus.error + minus.error) * (alpha - a0).abs() / h,
            alpha,
            route: Route::NearPole,
            strip: strip.m,
            moments: Some(moments.source),
        });
    }
    psi_spatial(field, x, alpha, spec)
}

/// Limits of `ψ(x, α)` at `α = −2m` from both sides against the pole value.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StripContinuity {
    pub m: usize,
    pub pole: f64,
    /// Extrapolated from `α = −2m − δ`.
    pub below: f64,
    /// Extrapolated from `α = −2m + δ`.
    pub above: f64,
    pub steps: Vec<f64>,
}

impl StripContinuity {
    /// Largest one-sided gap relative to `|pole|`.
    pub fn relative_gap(&self) -> f64 {
        let d = (self.below - self.pole).abs().max((self.above - self.pole).abs());
        d / self.pole.abs()
    }
}

/// Richardson limit of values at `δ, δ/2, δ/4` under a `c₀ + c₁δ + c₂δ²` model.
pub fn richardson3(v: [f64; 3]) -> f64 {
    (8.0 * v[2] - 6.0 * v[1] + v[0]) / 3.0
}

pub fn strip_continuity_check<F: Field + ?Sized>(
    field: &F,
    x: &Point,
    m: usize,
    spec: &QuadratureSpec,
    moments: &MomentTable,
) -> Result<StripContinuity> {
    let steps = vec![0.05, 0.025, 0.0125];
    let a0 = -2.0 * m as f64;
    let pole = psi_pole(field, x, m, moments)?.value;
    let mut lo = [0.0; 3];
    let mut hi = [0.0; 3];
    for (k, &d) in steps.iter().enumerate() {
        lo[k] = psi_spatial(field, x, a0 - d, spec)?.value;
        hi[k] = psi_spatial(field, x, a0 + d, spec)?.value;
    }
    Ok(StripContinuity {
        m,
        pole,
        below: richardson3(lo),
        above: richardson3(hi),
        steps,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::jets::sublaplacian_power;
    use crate::testfn::TestFunction;

    #[test]
    fn strips() {
        let s = StripSelector::new(-3.0, 1).unwrap();
        assert_eq!((s.m, s.taylor_degree(), s.at_pole), (1, Some(3), false));
        let s = StripSelector::new(-4.0, 1).unwrap();
        assert_eq!((s.m, s.pole()), (2, Some(2)));
        let s = StripSelector::new(1.5, 1).unwrap();
        assert_eq!((s.m, s.taylor_degree()), (0, None));
        assert!(StripSelector::new(4.0, 1).is_err());
    }

    #[test]
    fn reference_table_shape() {
        let t = MomentTable::reference(1, 6).unwrap();
        assert_eq!(t.get(&[4, 0, 0]).unwrap().0, 12.0);
        assert_eq!(t.get(&[2, 2, 0]).unwrap().0, 4.0);
        assert_eq!(t.get(&[6, 0, 0]).unwrap().0, 120.0);
        assert!((t.get(&[2, 0, 2]).unwrap().0 - 10.0 / 3.0).abs() < 1e-15);
        assert_eq!(t.get(&[1, 0, 0]).unwrap().0, 0.0);
        assert!(matches!(t.get(&[0, 0, 4]), Err(Error::MissingMoment(_))));
        assert!(MomentTable::reference(1, 8).is_err());
    }

    #[test]
    fn quadrature_table_matches_reference() {
        let q = MomentTable::quadrature(1, 6, &QuadratureSpec::default()).unwrap();
        let r = MomentTable::reference(1, 6).unwrap();
        for (g, (v, _)) in r.iter() {
            let (w, _) = q.get(g).unwrap();
            assert!((v - w).abs() < 1e-8 * v.abs().max(1.0), "{g:?}: {v} vs {w}");
        }
    }

    #[test]
    fn pole_values_are_sublaplacian_powers() {
        let phi = TestFunction::gaussian(1.0).unwrap();
        let table = MomentTable::reference(1, 6).unwrap();
        let x = Point::new(vec![0.3, -0.2, 0.4]).unwrap();
        let jet = phi.jet_at(x.coords(), 6).unwrap();
        for m in 0..=3 {
            let want = sublaplacian_power(&jet, m).unwrap().value();
            let got = psi_pole(&phi, &x, m, &table).unwrap().value;
            assert!((got - want).abs() < 1e-10 * want.abs().max(1.0), "m = {m}: {got} vs {want}");
        }
    }

    #[test]
    fn collapse_with_exact_moments() {
        for n in [1, 2] {
            let t = MomentTable::reference(n, 6).unwrap();
            for m in [2, 3] {
                let c = collapse_coefficients(&t, m).unwrap();
                assert!(c.anisotropic.value.abs() < 1e-13, "n {n} m {m}: {c:?}");
                assert!((c.isotropic.value - 1.0).abs() < 1e-13);
            }
        }
    }

    #[test]
    fn even_indices() {
        let v = even_multi_indices(1, 4);
        assert_eq!(v.len(), 7);
        assert!(v.contains(&vec![0, 0, 2]));
        assert!(v.contains(&vec![2, 2, 0]));
    }
}
