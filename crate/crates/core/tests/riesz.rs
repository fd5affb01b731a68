use proptest::prelude::*;
use subfrac::fraclap::sublaplacian_fd;
use subfrac::riesz::{alpha_norm, p_alpha, profile};
use subfrac::{Point, QuadratureSpec};

fn point(n: usize) -> impl Strategy<Value = Point> {
    prop::collection::vec(-2.0f64..2.0, 2 * n + 1).prop_map(|c| Point::new(c).unwrap())
}

fn spec() -> QuadratureSpec {
    QuadratureSpec::default()
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(32))]

    #[test]
    fn norm_homogeneous_and_symmetric(x in point(1), r in 0.2f64..5.0, alpha in prop::sample::select(vec![-3.0, -1.0, 1.0, 2.5])) {
        prop_assume!(x.koranyi_norm() > 0.05);
        let a = alpha_norm(alpha, &x, &spec()).unwrap();
        let b = alpha_norm(alpha, &x.dilate(r).unwrap(), &spec()).unwrap();
        let c = alpha_norm(alpha, &x.inverse(), &spec()).unwrap();
        prop_assert!((b - r * a).abs() <= 1e-9 * r * a);
        prop_assert!((c - a).abs() <= 1e-9 * a);
    }

    #[test]
    fn kernels_positive(x in (1usize..3).prop_flat_map(point), alpha in 0.1f64..3.9) {
        prop_assume!(x.koranyi_norm() > 0.05);
        prop_assert!(p_alpha(alpha, &x, &spec()).unwrap() > 0.0);
    }

    #[test]
    fn profile_agrees(x in point(1), alpha in 0.3f64..3.5) {
        prop_assume!(x.koranyi_norm() > 0.05);
        let p = profile(1, alpha, &spec()).unwrap();
        let d = p_alpha(alpha, &x, &spec()).unwrap();
        prop_assert!((p.eval(x.coords()) - d).abs() <= 1e-6 * d);
    }
}

#[test]
fn newtonian_kernel_shape() {
    // P₂ is the fundamental solution of L; on H¹ it is proportional to (|z|⁴ + 16u²)^{−1/2}
    let pts = [[1.0, 0.0, 0.0], [0.3, -0.4, 0.7], [0.0, 0.0, 1.0], [1.5, 0.5, -0.2], [0.1, 0.0, 2.0]];
    let c: Vec<f64> = pts
        .iter()
        .map(|c| {
            let x = Point::new(c.to_vec()).unwrap();
            let z2 = c[0] * c[0] + c[1] * c[1];
            p_alpha(2.0, &x, &spec()).unwrap() * (z2 * z2 + 16.0 * c[2] * c[2]).sqrt()
        })
        .collect();
    for v in &c {
        assert!((v - 0.5 / std::f64::consts::PI).abs() < 1e-8 * c[0], "{c:?}");
    }
    // the closed form is L-harmonic off the origin
    let g = |y: &[f64]| -> subfrac::Result<f64> {
        let z2 = y[0] * y[0] + y[1] * y[1];
        Ok((z2 * z2 + 16.0 * y[2] * y[2]).powf(-0.5))
    };
    let x = Point::new(vec![0.8, -0.3, 0.5]).unwrap();
    let lg = sublaplacian_fd(g, &x, 0.01).unwrap();
    assert!(lg.abs() < 1e-6 * g(x.coords()).unwrap(), "{lg}");
}
