//! Verification suites. Each check is one result record carrying its target,
//! tolerance and verdict; any failed check makes the run exit with 2.

use serde_json::json;
use subfrac::ccnorm::cc_norm;
use subfrac::fraclap::{
    collapse_coefficients, psi_spatial, psi_spatial_with, psi_time, richardson3, semigroup_check, MomentTable,
    SemigroupOptions, SpatialMode, SpatialOptions,
};
use subfrac::heatkernel::{hk_eval_with, hk_moment, hk_moment_quadrature, pde_residual};
use subfrac::jets::{commutator_identity_check, sublaplacian_power};
use subfrac::riesz::{boundary_moment, convolution_check, d_alpha, sigma, Backend};
use subfrac::{Point, TestFunction};

use crate::cli::Suite;
use crate::commands::{params, Ctx};
use crate::error::CliResult;

/// How a check compares its value to the target.
#[derive(Clone, Copy)]
enum Tol {
    Rel(f64),
    Abs(f64),
    /// `|value − target| ≤ k · error`.
    Sigmas(f64),
}

struct Check<'s> {
    suite: &'s str,
    name: String,
    value: f64,
    error: f64,
    target: f64,
    tol: Tol,
    method: &'s str,
}

fn emit(ctx: &mut Ctx, c: Check, failed: &mut bool) -> CliResult<()> {
    let gap = (c.value - c.target).abs();
    let (pass, tol, kind) = match c.tol {
        Tol::Rel(t) => (gap <= t * c.target.abs(), t, "relative"),
        Tol::Abs(t) => (gap <= t, t, "absolute"),
        Tol::Sigmas(k) => (gap <= k * c.error, k, "sigmas"),
    };
    *failed |= !pass;
    let p = params([("check", json!(c.name)), ("tol_kind", json!(kind))]);
    let mut r = ctx.record(&format!("verify.{}", c.suite), p, c.value, c.error, c.method);
    r.target = Some(c.target);
    r.tol = Some(tol);
    r.pass = Some(pass);
    ctx.emit(r)
}

fn unit(n: usize, i: usize, e: u32) -> Vec<u32> {
    let mut g = vec![0; 2 * n + 1];
    g[i] = e;
    g
}

fn fit_slope(pts: &[(f64, f64)]) -> f64 {
    let k = pts.len() as f64;
    let mx = pts.iter().map(|p| p.0).sum::<f64>() / k;
    let my = pts.iter().map(|p| p.1).sum::<f64>() / k;
    let sxy: f64 = pts.iter().map(|p| (p.0 - mx) * (p.1 - my)).sum();
    let sxx: f64 = pts.iter().map(|p| (p.0 - mx).powi(2)).sum();
    sxy / sxx
}

/// Reproducible sample points with coordinates in `[-0.8, 0.8)`, rounded to
/// three decimals.
fn points(n: usize, count: usize) -> Vec<Vec<f64>> {
    let d = 2 * n + 1;
    let coord = |j: usize| {
        let v = ((j as f64 * 0.618_033_988_75).fract() * 2.0 - 1.0) * 0.8;
        (v * 1000.0).round() / 1000.0
    };
    (0..count).map(|k| (0..d).map(|i| coord(k * d + i)).collect()).collect()
}

pub fn run(ctx: &mut Ctx, suite: Suite) -> CliResult<i32> {
    let mut failed = false;
    let f = &mut failed;
    match suite {
        Suite::Moments => moments(ctx, f)?,
        Suite::Kernel => kernel(ctx, f)?,
        Suite::Spectral => spectral(ctx, f)?,
        Suite::Limits => limits(ctx, f)?,
        Suite::Routes => routes(ctx, f)?,
        Suite::Semigroup => semigroup(ctx, f)?,
        Suite::Decay => decay(ctx, f)?,
        Suite::Conv => conv(ctx, f)?,
        Suite::Commutator => commutator(ctx, f)?,
        Suite::Collapse => collapse(ctx, f)?,
    }
    Ok(if failed { 2 } else { 0 })
}

fn moments(ctx: &mut Ctx, f: &mut bool) -> CliResult<()> {
    let n = ctx.n();
    let d = 2 * n;
    let nf = n as f64;
    let mut x2u2 = unit(n, 0, 2);
    x2u2[d] = 2;
    let cases: Vec<(&str, Vec<Vec<u32>>, f64, f64)> = vec![
        ("sum x_i^2", (0..d).map(|i| unit(n, i, 2)).collect(), 4.0 * nf, 0.01),
        ("x_1^4", vec![unit(n, 0, 4)], 12.0, 0.02),
        ("u^2", vec![unit(n, d, 2)], nf, 0.02),
        ("x_1^6", vec![unit(n, 0, 6)], 120.0, 0.05),
        ("x_1^2 u^2", vec![x2u2], 2.0 / 3.0 * (3.0 * nf + 2.0), 0.05),
    ];
    ctx.cloud()?;
    for (name, gammas, target, tol) in cases {
        let (mut v, mut var) = (0.0, 0.0);
        for g in &gammas {
            let e = hk_moment(g, 1.0, ctx.cloud()?)?;
            v += e.value;
            var += e.std_err * e.std_err;
        }
        let c = Check {
            suite: "moments",
            name: name.into(),
            value: v,
            error: var.sqrt(),
            target,
            tol: Tol::Rel(tol),
            method: "monte-carlo",
        };
        emit(ctx, c, f)?;
    }
    Ok(())
}

fn kernel(ctx: &mut Ctx, f: &mut bool) -> CliResult<()> {
    let n = ctx.n();
    let spec = ctx.cfg.quadrature.clone();
    let mass = hk_moment_quadrature(&vec![0; 2 * n + 1], 1.0, n, &spec)?;
    let c = Check {
        suite: "kernel",
        name: "mass".into(),
        value: mass.value,
        error: mass.std_err,
        target: 1.0,
        tol: Tol::Abs(1e-4),
        method: "quadrature",
    };
    emit(ctx, c, f)?;
    let q = (2 * n + 2) as f64;
    for (k, c) in points(n, 5).into_iter().enumerate() {
        let x = ctx.point(&c)?;
        let s = 0.5 + 0.4 * k as f64;
        let t = 1.3 - 0.2 * k as f64;
        let h = hk_eval_with(t, &x, &spec)?.value;
        let hs = hk_eval_with(s * s * t, &x.dilate(s)?, &spec)?.value;
        let hi = hk_eval_with(t, &x.inverse(), &spec)?.value;
        let c1 = Check {
            suite: "kernel",
            name: format!("homogeneity s={s} t={t} x={c:?}"),
            value: hs,
            error: 0.0,
            target: s.powf(-q) * h,
            tol: Tol::Rel(1e-10),
            method: "quadrature",
        };
        emit(ctx, c1, f)?;
        let c2 = Check {
            suite: "kernel",
            name: format!("symmetry t={t} x={c:?}"),
            value: hi,
            error: 0.0,
            target: h,
            tol: Tol::Rel(1e-10),
            method: "quadrature",
        };
        emit(ctx, c2, f)?;
        let steps: [f64; 3] = [0.08, 0.04, 0.02];
        let mut pts = Vec::new();
        for hstep in steps {
            pts.push((hstep.ln(), pde_residual(t, &x, hstep)?.abs().ln()));
        }
        let c3 = Check {
            suite: "kernel",
            name: format!("PDE residual slope t={t} x={c:?}"),
            value: fit_slope(&pts),
            error: 0.0,
            target: 2.0,
            tol: Tol::Abs(0.3),
            method: "finite-difference",
        };
        emit(ctx, c3, f)?;
    }
    Ok(())
}

fn spectral(ctx: &mut Ctx, f: &mut bool) -> CliResult<()> {
    let n = ctx.n();
    let spec = ctx.cfg.quadrature.clone();
    let s = sigma(0.0, n, Backend::Quadrature(&spec))?;
    emit(
        ctx,
        Check {
            suite: "spectral",
            name: "sigma(0)".into(),
            value: s.value,
            error: s.std_err,
            target: 2.0,
            tol: Tol::Abs(1e-3),
            method: "quadrature",
        },
        f,
    )?;
    let d = d_alpha(-2.0, 1, n, Backend::MonteCarlo(ctx.cloud()?))?;
    emit(
        ctx,
        Check {
            suite: "spectral",
            name: "d(-2)".into(),
            value: d.value,
            error: d.std_err,
            target: 4.0,
            tol: Tol::Rel(0.01),
            method: "monte-carlo",
        },
        f,
    )?;
    let mut g22 = unit(n, 0, 2);
    g22[1] = 2;
    let g4 = unit(n, 0, 4);
    for alpha in [-4.0, 0.0, 2.0] {
        for mc in [false, true] {
            let b = if mc {
                Backend::MonteCarlo(ctx.cloud()?)
            } else {
                Backend::Quadrature(&spec)
            };
            let a = boundary_moment(&g4, alpha, n, b)?;
            let c = boundary_moment(&g22, alpha, n, b)?;
            let ratio = a.value / c.value;
            let err = ratio * ((a.std_err / a.value).powi(2) + (c.std_err / c.value).powi(2)).sqrt();
            let method = if mc { "monte-carlo" } else { "quadrature" };
            emit(
                ctx,
                Check {
                    suite: "spectral",
                    name: format!("fourth-moment ratio alpha={alpha}"),
                    value: ratio,
                    error: err,
                    target: 3.0,
                    tol: Tol::Rel(0.01),
                    method,
                },
                f,
            )?;
        }
    }
    Ok(())
}

fn limits(ctx: &mut Ctx, f: &mut bool) -> CliResult<()> {
    let n = ctx.n();
    let spec = ctx.cfg.quadrature.clone();
    let phi = TestFunction::gaussian(1.0)?;
    let tols = [1e-3, 0.01, 0.02, 0.05];
    for c in points(n, 3) {
        let x = ctx.point(&c)?;
        for (m, tol) in tols.iter().enumerate() {
            let target = sublaplacian_power(&phi.jet_at(&c, 2 * m)?, m)?.value();
            let a0 = -2.0 * m as f64;
            for sign in [-1.0, 1.0] {
                let mut v = [0.0; 3];
                for (k, d) in [0.05, 0.025, 0.0125].into_iter().enumerate() {
                    v[k] = psi_spatial(&phi, &x, a0 + sign * d, &spec)?.value;
                }
                let side = if sign < 0.0 { "below" } else { "above" };
                emit(
                    ctx,
                    Check {
                        suite: "limits",
                        name: format!("alpha -> {a0} from {side} at {c:?}"),
                        value: richardson3(v),
                        error: 0.0,
                        target,
                        tol: Tol::Rel(*tol),
                        method: "richardson",
                    },
                    f,
                )?;
            }
        }
    }
    Ok(())
}

fn routes(ctx: &mut Ctx, f: &mut bool) -> CliResult<()> {
    let n = ctx.n();
    let spec = ctx.cfg.quadrature.clone();
    let phi = TestFunction::gaussian(1.0)?;
    let moments = MomentTable::quadrature(n, 6, &spec)?;
    for alpha in [-1.0, -3.0, 1.0] {
        for c in points(n, 3) {
            let x = ctx.point(&c)?;
            let s = psi_spatial(&phi, &x, alpha, &spec)?;
            let t = psi_time(&phi, &x, alpha, &moments, &spec)?;
            emit(
                ctx,
                Check {
                    suite: "routes",
                    name: format!("time vs spatial alpha={alpha} x={c:?}"),
                    value: t.value,
                    error: s.error + t.error,
                    target: s.value,
                    tol: Tol::Rel(0.02),
                    method: "quadrature",
                },
                f,
            )?;
        }
    }
    Ok(())
}

fn semigroup(ctx: &mut Ctx, f: &mut bool) -> CliResult<()> {
    let n = ctx.n();
    let spec = ctx.cfg.quadrature.clone();
    let phi = TestFunction::gaussian(1.0)?;
    let moments = MomentTable::reference(n, 6)?;
    let opts = SemigroupOptions::default();
    let mut x0 = vec![0.0; 2 * n + 1];
    x0[2 * n] = 0.5;
    let mut x1 = vec![0.1; 2 * n + 1];
    x1[0] = 0.2;
    x1[2 * n] = 0.3;
    for (s, p, c, tol) in [(0.5, 0.5, x0, 0.05), (1.0, -1.0, x1, 0.02)] {
        let x = ctx.point(&c)?;
        let r = semigroup_check(&phi, s, p, &x, &spec, &moments, &opts)?;
        emit(
            ctx,
            Check {
                suite: "semigroup",
                name: format!("L^{s} L^{p} phi at {c:?}"),
                value: r.lhs,
                error: r.lhs_error,
                target: r.rhs,
                tol: Tol::Rel(tol),
                method: "quadrature",
            },
            f,
        )?;
    }
    Ok(())
}

fn decay(ctx: &mut Ctx, f: &mut bool) -> CliResult<()> {
    let n = ctx.n();
    let spec = ctx.cfg.quadrature.clone();
    let phi = TestFunction::gaussian(1.0)?;
    let opts = SpatialOptions {
        mode: SpatialMode::Split,
        error_estimate: false,
        ..Default::default()
    };
    let q = (2 * n + 2) as f64;
    let mut d = vec![0.0; 2 * n + 1];
    d[0] = 1.0;
    let dir = ctx.point(&d)?;
    let unit_cc = cc_norm(&dir)?;
    for alpha in [1.0, -1.0, -3.0] {
        let mut pts = Vec::new();
        for k in 0..8 {
            let target = 5.0 * 8f64.powf(k as f64 / 7.0);
            let x: Point = dir.dilate(target / unit_cc)?;
            let v = psi_spatial_with(&phi, &x, alpha, &spec, &opts)?.value;
            pts.push((cc_norm(&x)?.ln(), v.abs().ln()));
        }
        emit(
            ctx,
            Check {
                suite: "decay",
                name: format!("log-log slope alpha={alpha} over |x|_c in [5, 40]"),
                value: fit_slope(&pts),
                error: 0.0,
                target: alpha - q,
                tol: Tol::Abs(0.2),
                method: "regression",
            },
            f,
        )?;
    }
    Ok(())
}

fn conv(ctx: &mut Ctx, f: &mut bool) -> CliResult<()> {
    let n = ctx.n();
    let mut c = vec![0.0; 2 * n + 1];
    c[0] = 0.7;
    c[1] = -0.4;
    c[2 * n] = 0.5;
    let x = ctx.point(&c)?;
    let r = convolution_check(1.0, 1.0, &x, &ctx.cfg.sampler, &ctx.cfg.quadrature)?;
    emit(
        ctx,
        Check {
            suite: "conv",
            name: format!("P1 * P1 vs P2 at {c:?}"),
            value: r.rhs,
            error: r.std_err,
            target: r.lhs,
            tol: Tol::Rel(0.05),
            method: "monte-carlo",
        },
        f,
    )
}

fn commutator(ctx: &mut Ctx, f: &mut bool) -> CliResult<()> {
    let n = ctx.n();
    let phi = TestFunction::gaussian(1.0)?;
    for c in points(n, 10) {
        let jet = phi.jet_at(&c, 6)?;
        for (i, j) in [(1, n + 1), (n + 1, 1)] {
            let r = commutator_identity_check(&jet, i, j)?;
            emit(
                ctx,
                Check {
                    suite: "commutator",
                    name: format!("pair ({i},{j}) at {c:?}"),
                    value: r.relative(),
                    error: 0.0,
                    target: 0.0,
                    tol: Tol::Abs(1e-8),
                    method: "jets",
                },
                f,
            )?;
        }
    }
    Ok(())
}

fn collapse(ctx: &mut Ctx, f: &mut bool) -> CliResult<()> {
    let table = MomentTable::monte_carlo(ctx.cloud()?, 6)?;
    for m in [2, 3] {
        let c = collapse_coefficients(&table, m)?;
        let name = if m == 2 { "T^2 phi coefficient" } else { "T^2 L phi coefficient" };
        emit(
            ctx,
            Check {
                suite: "collapse",
                name: format!("{name}, m={m}"),
                value: c.anisotropic.value,
                error: c.anisotropic.std_err,
                target: 0.0,
                tol: Tol::Sigmas(3.0),
                method: "monte-carlo",
            },
            f,
        )?;
    }
    Ok(())
}
