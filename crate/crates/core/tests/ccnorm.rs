use proptest::prelude::*;
use subfrac::ccnorm::cc_norm;
use subfrac::hgroup::rotate_planes;
use subfrac::Point;

fn point(n: usize) -> impl Strategy<Value = Point> {
    prop::collection::vec(-3.0f64..3.0, 2 * n + 1).prop_map(|c| Point::new(c).unwrap())
}

/// Length and endpoint of a polygonal horizontal path from the origin in H¹;
/// the center coordinate is the shoelace area swept from the origin.
fn lift(poly: &[(f64, f64)]) -> (f64, Point) {
    let mut len = 0.0;
    let mut area = 0.0;
    for w in poly.windows(2) {
        let ((x0, y0), (x1, y1)) = (w[0], w[1]);
        len += (x1 - x0).hypot(y1 - y0);
        area += 0.5 * (x0 * y1 - x1 * y0);
    }
    let (x, y) = *poly.last().unwrap();
    (len, Point::new(vec![x, y, area]).unwrap())
}

/// Circular arc of turning angle `phi` over the chord from 0 to (c, 0).
fn arc(c: f64, phi: f64, k: usize) -> Vec<(f64, f64)> {
    let r = 0.5 * c / (0.5 * phi).sin();
    let cy = -r * (0.5 * phi).cos();
    let a0 = std::f64::consts::FRAC_PI_2 + 0.5 * phi;
    (0..=k)
        .map(|i| {
            let a = a0 - phi * i as f64 / k as f64;
            (0.5 * c + r * a.cos(), cy + r * a.sin())
        })
        .collect()
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(96))]

    #[test]
    fn homogeneous(x in (1usize..3).prop_flat_map(point), r in 0.1f64..10.0) {
        prop_assume!(x.koranyi_norm() > 1e-3);
        let a = cc_norm(&x).unwrap();
        let b = cc_norm(&x.dilate(r).unwrap()).unwrap();
        prop_assert!((b - r * a).abs() <= 1e-9 * r * a);
        prop_assert!(a > 0.0);
    }

    #[test]
    fn rotation_and_inverse(x in point(2), t1 in -3.2f64..3.2, t2 in -3.2f64..3.2) {
        prop_assume!(x.koranyi_norm() > 1e-3);
        let a = cc_norm(&x).unwrap();
        prop_assert!((cc_norm(&rotate_planes(&x, &[t1, t2]).unwrap()).unwrap() - a).abs() <= 1e-9 * a);
        prop_assert!((cc_norm(&x.inverse()).unwrap() - a).abs() <= 1e-9 * a);
    }

    #[test]
    fn arcs_are_geodesics(c in 0.2f64..3.0, phi in 0.05f64..6.2) {
        // geodesics project to circular arcs; an inscribed polygon underestimates the length by O(k⁻²)
        let (len, end) = lift(&arc(c, phi, 4000));
        let d = cc_norm(&end).unwrap();
        prop_assert!((d - len).abs() <= 1e-5 * len, "{d} vs {len}");
    }

    #[test]
    fn paths_are_no_shorter(steps in prop::collection::vec((-1.0f64..1.0, -1.0f64..1.0), 1..12)) {
        let mut poly = vec![(0.0, 0.0)];
        for (dx, dy) in steps {
            let (x, y) = *poly.last().unwrap();
            poly.push((x + dx, y + dy));
        }
        let (len, end) = lift(&poly);
        prop_assume!(end.koranyi_norm() > 1e-6);
        prop_assert!(cc_norm(&end).unwrap() <= len * (1.0 + 1e-12));
    }
}

#[test]
fn closed_forms() {
    let h = Point::new(vec![1.5, 0.0, 0.0]).unwrap();
    assert!((cc_norm(&h).unwrap() - 1.5).abs() < 1e-12);
    // the full circle of circumference L encloses L²/(4π)
    let v = Point::new(vec![0.0, 0.0, 1.0]).unwrap();
    assert!((cc_norm(&v).unwrap() - (4.0 * std::f64::consts::PI).sqrt()).abs() < 1e-10);
}
