//! Acceptance criteria, one PASS/FAIL line each.
//!
//! `cargo test --test acceptance -- 3 7` runs a subset by number.

use std::sync::OnceLock;
use std::time::Instant;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use subfrac::ccnorm::cc_norm;
use subfrac::fraclap::{
    collapse_coefficients, psi_spatial, psi_spatial_with, psi_time, richardson3, semigroup_check, MomentTable,
    SemigroupOptions, SpatialMode, SpatialOptions,
};
use subfrac::heatkernel::{hk_eval, hk_moment, hk_moment_quadrature, pde_residual, sample_diffusion, HeatCloud};
use subfrac::jets::{commutator_identity_check, sublaplacian_power};
use subfrac::riesz::{boundary_moment, convolution_check, d_alpha, sigma, Backend};
use subfrac::{GroupConfig, Point, QuadratureSpec, SamplerSpec, TestFunction};

const PATHS: usize = 2_000_000;
const STEPS: usize = 2000;
const SEED: u64 = 7;

static CLOUDS: [OnceLock<HeatCloud>; 2] = [OnceLock::new(), OnceLock::new()];

fn cloud(n: usize) -> &'static HeatCloud {
    CLOUDS[n - 1].get_or_init(|| {
        let t0 = Instant::now();
        let spec = SamplerSpec::new(PATHS, STEPS, SEED + n as u64, 1.0).unwrap();
        let c = sample_diffusion(GroupConfig::new(n).unwrap(), &spec).unwrap();
        println!("    sampled n = {n}: {PATHS} paths x {STEPS} steps in {:.1?}", t0.elapsed());
        c
    })
}

fn spec() -> QuadratureSpec {
    QuadratureSpec::default()
}

fn pt(c: &[f64]) -> Point {
    Point::new(c.to_vec()).unwrap()
}

fn rel(a: f64, b: f64) -> f64 {
    (a - b).abs() / b.abs()
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

/// Collects sub-check lines; the criterion passes when all of them do.
#[derive(Default)]
struct Outcome {
    ok: bool,
    lines: Vec<String>,
}

impl Outcome {
    fn new() -> Self {
        Self { ok: true, lines: Vec::new() }
    }

    fn check(&mut self, pass: bool, line: String) {
        self.ok &= pass;
        self.lines.push(format!("{} {line}", if pass { "ok  " } else { "BAD " }));
    }

    fn info(&mut self, line: String) {
        self.lines.push(format!("info {line}"));
    }
}

/// Five moments of `h(1,·)` and their targets and relative tolerances.
fn moment_targets(n: usize) -> Vec<(String, Vec<Vec<u32>>, f64, f64)> {
    let d = 2 * n;
    let nf = n as f64;
    vec![
        ("sum x_i^2".into(), (0..d).map(|i| unit(n, i, 2)).collect(), 4.0 * nf, 0.01),
        ("x_1^4".into(), vec![unit(n, 0, 4)], 12.0, 0.02),
        ("u^2".into(), vec![unit(n, d, 2)], nf, 0.02),
        ("x_1^6".into(), vec![unit(n, 0, 6)], 120.0, 0.05),
        ("x_1^2 u^2".into(), vec![{
            let mut g = unit(n, 0, 2);
            g[d] = 2;
            g
        }], 2.0 / 3.0 * (3.0 * nf + 2.0), 0.05),
    ]
}

fn c1() -> Outcome {
    let mut o = Outcome::new();
    for n in [1, 2] {
        let t0 = Instant::now();
        let c = cloud(n);
        for (name, gammas, target, tol) in moment_targets(n) {
            let (mut v, mut var) = (0.0, 0.0);
            for g in &gammas {
                let e = hk_moment(g, 1.0, c).unwrap();
                v += e.value;
                var += e.std_err * e.std_err;
            }
            let r = rel(v, target);
            o.check(r <= tol, format!("n={n} {name}: {v:.5} ± {:.5} vs {target:.5} (rel {r:.2e}, tol {tol})", var.sqrt()));
        }
        let secs = t0.elapsed().as_secs_f64();
        o.check(secs <= 600.0, format!("n={n} runtime {secs:.0} s (limit 600 s)"));
    }
    o
}

fn c2() -> Outcome {
    let mut o = Outcome::new();
    let t0 = Instant::now();
    for (name, gammas, target, _) in moment_targets(1) {
        let v: f64 = gammas.iter().map(|g| hk_moment_quadrature(g, 1.0, 1, &spec()).unwrap().value).sum();
        let r = rel(v, target);
        o.check(r <= 0.005, format!("{name}: {v:.10} vs {target:.10} (rel {r:.2e}, tol 5e-3)"));
    }
    let secs = t0.elapsed().as_secs_f64();
    o.check(secs <= 600.0, format!("runtime {secs:.1} s (limit 600 s)"));
    o
}

fn c3() -> Outcome {
    let mut o = Outcome::new();
    let mass = hk_moment_quadrature(&[0, 0, 0], 1.0, 1, &spec()).unwrap().value;
    o.check((mass - 1.0).abs() <= 1e-4, format!("mass {mass:.12} (tol 1e-4)"));

    let mut rng = ChaCha8Rng::seed_from_u64(3);
    for n in [1, 2] {
        let q = (2 * n + 2) as f64;
        let (mut hom, mut sym) = (0.0f64, 0.0f64);
        for _ in 0..100 {
            let x = Point::new((0..2 * n + 1).map(|_| rng.random_range(-2.0..2.0)).collect()).unwrap();
            let s: f64 = rng.random_range(0.3..3.0);
            let t: f64 = rng.random_range(0.2..3.0);
            let h = hk_eval(t, &x).unwrap().value;
            let hs = hk_eval(s * s * t, &x.dilate(s).unwrap()).unwrap().value;
            hom = hom.max(rel(hs, s.powf(-q) * h));
            sym = sym.max(rel(hk_eval(t, &x.inverse()).unwrap().value, h));
        }
        o.check(hom <= 1e-10, format!("n={n} homogeneity, 100 triples: max rel {hom:.1e} (tol 1e-10)"));
        o.check(sym <= 1e-10, format!("n={n} symmetry, 100 points: max rel {sym:.1e} (tol 1e-10)"));
    }

    let pts = [
        (1.0, [0.3, -0.2, 0.4]),
        (0.7, [1.1, 0.5, -0.3]),
        (1.5, [-0.4, 0.9, 1.2]),
        (2.0, [0.2, 0.1, -0.6]),
        (1.2, [0.8, -1.3, 0.1]),
    ];
    for (t, c) in pts {
        let x = pt(&c);
        let hs = [0.08, 0.04, 0.02];
        let r: Vec<f64> = hs.iter().map(|&h| pde_residual(t, &x, h).unwrap().abs()).collect();
        let slope = fit_slope(&hs.iter().zip(&r).map(|(h, r)| (h.ln(), r.ln())).collect::<Vec<_>>());
        o.check(
            (slope - 2.0).abs() <= 0.3,
            format!("PDE residual at t={t} x={c:?}: {:.1e} -> {:.1e}, slope {slope:.3}", r[0], r[2]),
        );
    }
    o
}

fn c4() -> Outcome {
    let mut o = Outcome::new();
    let s = sigma(0.0, 1, Backend::Quadrature(&spec())).unwrap();
    o.check((s.value - 2.0).abs() <= 1e-3, format!("sigma(0) = {:.10} (tol 1e-3)", s.value));
    let d = d_alpha(-2.0, 1, 1, Backend::MonteCarlo(cloud(1))).unwrap();
    let r = rel(d.value, 4.0);
    o.check(r <= 0.01, format!("d(-2) = {:.5} ± {:.5} by MC (rel {r:.2e}, tol 1e-2)", d.value, d.std_err));
    o
}

fn c5() -> Outcome {
    let mut o = Outcome::new();
    for n in [1, 2] {
        let mut g22 = unit(n, 0, 2);
        g22[1] = 2;
        let g4 = unit(n, 0, 4);
        let q = spec();
        let backends = [("quadrature", Backend::Quadrature(&q)), ("monte-carlo", Backend::MonteCarlo(cloud(n)))];
        for alpha in [-4.0, 0.0, 2.0] {
            for (name, b) in backends {
                let a = boundary_moment(&g4, alpha, n, b).unwrap();
                let c = boundary_moment(&g22, alpha, n, b).unwrap();
                let ratio = a.value / c.value;
                let r = rel(ratio, 3.0);
                o.check(r <= 0.01, format!("n={n} alpha={alpha} {name}: ratio {ratio:.6} (rel {r:.2e}, tol 1e-2)"));
            }
        }
    }
    o
}

fn c6() -> Outcome {
    let mut o = Outcome::new();
    let phi = TestFunction::gaussian(1.0).unwrap();
    let pts = [[0.2, -0.1, 0.3], [0.5, 0.4, -0.2], [-0.3, 0.6, 0.5]];
    let tols = [1e-3, 0.01, 0.02, 0.05];
    for (m, tol) in tols.iter().enumerate() {
        for c in pts {
            let x = pt(&c);
            let target = sublaplacian_power(&phi.jet_at(&c, 2 * m).unwrap(), m).unwrap().value();
            let a0 = -2.0 * m as f64;
            let steps = [0.05, 0.025, 0.0125];
            let side = |sign: f64| {
                let v = steps.map(|d| psi_spatial(&phi, &x, a0 + sign * d, &spec()).unwrap().value);
                richardson3(v)
            };
            let (below, above) = (side(-1.0), side(1.0));
            let r = rel(below, target).max(rel(above, target));
            o.check(
                r <= *tol,
                format!("alpha -> {a0} at {c:?}: below {below:.8}, above {above:.8}, L^{m} phi {target:.8} (rel {r:.1e}, tol {tol})"),
            );
        }
    }
    o
}

fn c7() -> Outcome {
    let mut o = Outcome::new();
    let phi = TestFunction::gaussian(1.0).unwrap();
    let moments = MomentTable::quadrature(1, 6, &spec()).unwrap();
    let pts = [[0.3, -0.2, 0.4], [0.8, 0.5, -0.6], [-1.0, 0.2, 1.1]];
    for alpha in [-1.0, -3.0, 1.0] {
        for c in pts {
            let x = pt(&c);
            let s = psi_spatial(&phi, &x, alpha, &spec()).unwrap();
            let t = psi_time(&phi, &x, alpha, &moments, &spec()).unwrap();
            let gap = (s.value - t.value).abs();
            let allowed = 0.02 * s.value.abs() + s.error + t.error;
            o.check(
                gap <= allowed,
                format!(
                    "alpha={alpha} x={c:?}: spatial {:.10} time {:.10} (rel gap {:.1e}, errors {:.1e}/{:.1e})",
                    s.value,
                    t.value,
                    gap / s.value.abs(),
                    s.error,
                    t.error
                ),
            );
        }
    }
    o
}

fn c8() -> Outcome {
    let mut o = Outcome::new();
    let phi = TestFunction::gaussian(1.0).unwrap();
    let moments = MomentTable::reference(1, 6).unwrap();
    let opts = SemigroupOptions::default();
    let t0 = Instant::now();
    let x = pt(&[0.0, 0.0, 0.5]);
    let half = semigroup_check(&phi, 0.5, 0.5, &x, &spec(), &moments, &opts).unwrap();
    let secs = t0.elapsed().as_secs_f64();
    o.check(
        half.relative_gap() <= 0.05,
        format!(
            "L^1/2 L^1/2 phi at {:?}: {:.8} vs L phi {:.8} (rel {:.1e}, tol 5e-2), {} inner evaluations",
            x.coords(),
            half.lhs,
            half.rhs,
            half.relative_gap(),
            half.inner_evaluations
        ),
    );
    o.check(secs <= 3600.0, format!("semigroup runtime {secs:.0} s (limit 3600 s)"));
    let x = pt(&[0.2, 0.1, 0.3]);
    let inv = semigroup_check(&phi, 1.0, -1.0, &x, &spec(), &moments, &opts).unwrap();
    o.check(
        inv.relative_gap() <= 0.02,
        format!(
            "L psi(.,2) at {:?}: {:.8} vs phi {:.8} (rel {:.1e}, tol 2e-2)",
            x.coords(),
            inv.lhs,
            inv.rhs,
            inv.relative_gap()
        ),
    );
    o
}

fn c9() -> Outcome {
    let mut o = Outcome::new();
    let phi = TestFunction::gaussian(1.0).unwrap();
    let opts = SpatialOptions {
        mode: SpatialMode::Split,
        error_estimate: false,
        ..Default::default()
    };
    let q = 4.0;
    // the horizontal ray decides; rays with a center component reach ‖x‖_c = 5 at a smaller
    // dilation, where the spread of φ still bends the curve, and are shown for reference
    for (d, gating) in [([1.0, 0.0, 0.0], true), ([0.6, 0.3, 0.5], false), ([0.0, 0.0, 1.0], false)] {
        let dir = pt(&d);
        let unit_cc = cc_norm(&dir).unwrap();
        for alpha in [1.0, -1.0, -3.0] {
            let pts: Vec<(f64, f64)> = (0..8)
                .map(|k| {
                    let target = 5.0 * 8f64.powf(k as f64 / 7.0);
                    let x = dir.dilate(target / unit_cc).unwrap();
                    let v = psi_spatial_with(&phi, &x, alpha, &spec(), &opts).unwrap().value;
                    (cc_norm(&x).unwrap().ln(), v.abs().ln())
                })
                .collect();
            let slope = fit_slope(&pts);
            let line = format!("ray {d:?} alpha={alpha}: slope {slope:.4} vs {} over |x|_c in [5, 40]", alpha - q);
            if gating {
                o.check((slope - (alpha - q)).abs() <= 0.2, line);
            } else {
                o.info(line);
            }
        }
    }
    o
}

fn c10() -> Outcome {
    let mut o = Outcome::new();
    let x = pt(&[0.7, -0.4, 0.5]);
    let sampler = SamplerSpec::new(PATHS, 1, SEED, 1.0).unwrap();
    let c = convolution_check(1.0, 1.0, &x, &sampler, &spec()).unwrap();
    o.check(
        c.gap <= 0.05,
        format!("P1*P1 at {:?}: {:.6} ± {:.6} vs P2 {:.6} (rel {:.1e}, tol 5e-2)", x.coords(), c.rhs, c.std_err, c.lhs, c.gap),
    );
    o
}

fn c11() -> Outcome {
    let mut o = Outcome::new();
    let phi = TestFunction::gaussian(1.0).unwrap();
    let mut rng = ChaCha8Rng::seed_from_u64(11);
    let mut worst = 0.0f64;
    for _ in 0..10 {
        let c: Vec<f64> = (0..3).map(|_| rng.random_range(-1.5..1.5)).collect();
        let jet = phi.jet_at(&c, 6).unwrap();
        for (i, j) in [(1, 2), (2, 1)] {
            worst = worst.max(commutator_identity_check(&jet, i, j).unwrap().relative());
        }
    }
    o.check(worst <= 1e-8, format!("15-word sum vs closed form, 10 points: max rel residual {worst:.1e} (tol 1e-8)"));
    o
}

fn c12() -> Outcome {
    let mut o = Outcome::new();
    for n in [1, 2] {
        let table = MomentTable::monte_carlo(cloud(n), 6).unwrap();
        for m in [2, 3] {
            let c = collapse_coefficients(&table, m).unwrap();
            let a = c.anisotropic;
            let z = a.value.abs() / a.std_err;
            let name = if m == 2 { "T^2 phi" } else { "T^2 L phi" };
            o.check(
                z <= 3.0,
                format!(
                    "n={n} m={m}: {name} coefficient {:.5} ± {:.5} ({z:.2} sigma), L^{m} coefficient {:.5} ± {:.5}",
                    a.value, a.std_err, c.isotropic.value, c.isotropic.std_err
                ),
            );
        }
    }
    o
}

fn main() {
    let criteria: [(usize, &str, fn() -> Outcome); 12] = [
        (1, "heat-kernel moments, Monte Carlo", c1),
        (2, "heat-kernel moments, quadrature", c2),
        (3, "kernel invariants", c3),
        (4, "sigma(0) and d(-2)", c4),
        (5, "fourth-moment ratio", c5),
        (6, "psi limits at the poles", c6),
        (7, "spatial and time routes agree", c7),
        (8, "semigroup property", c8),
        (9, "decay rate", c9),
        (10, "convolution identity", c10),
        (11, "commutator identity", c11),
        (12, "moment collapse", c12),
    ];
    let only: Vec<usize> = std::env::args().skip(1).filter_map(|a| a.parse().ok()).collect();
    let mut failed = Vec::new();
    for (k, name, run) in criteria {
        if !only.is_empty() && !only.contains(&k) {
            continue;
        }
        let t0 = Instant::now();
        let out = std::panic::catch_unwind(run).unwrap_or_else(|e| {
            let msg = e
                .downcast_ref::<String>()
                .cloned()
                .or_else(|| e.downcast_ref::<&str>().map(|s| s.to_string()))
                .unwrap_or_default();
            Outcome {
                ok: false,
                lines: vec![format!("BAD  panicked: {msg}")],
            }
        });
        let tag = if out.ok { "PASS" } else { "FAIL" };
        println!("{tag} criterion {k:>2}: {name} ({:.1?})", t0.elapsed());
        for l in &out.lines {
            println!("    {l}");
        }
        if !out.ok {
            failed.push(k);
        }
    }
    if !failed.is_empty() {
        println!("failed criteria: {failed:?}");
        std::process::exit(1);
    }
}
