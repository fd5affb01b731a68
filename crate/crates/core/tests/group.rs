use proptest::prelude::*;
use subfrac::hgroup::{dilate, group_mul, koranyi_norm, rotate_planes};
use subfrac::{GroupConfig, Point};

fn point(n: usize) -> impl Strategy<Value = Point> {
    prop::collection::vec(-3.0f64..3.0, 2 * n + 1).prop_map(|c| Point::new(c).unwrap())
}

fn close(a: &Point, b: &Point, tol: f64) -> bool {
    a.coords().iter().zip(b.coords()).all(|(x, y)| (x - y).abs() <= tol * (1.0 + x.abs()))
}

proptest! {
    #[test]
    fn associative((a, b, c) in (1usize..4).prop_flat_map(|n| (point(n), point(n), point(n)))) {
        let l = group_mul(&group_mul(&a, &b).unwrap(), &c).unwrap();
        let r = group_mul(&a, &group_mul(&b, &c).unwrap()).unwrap();
        prop_assert!(close(&l, &r, 1e-13));
    }

    #[test]
    fn dilations_are_automorphisms((a, b) in (1usize..4).prop_flat_map(|n| (point(n), point(n))), r in 0.05f64..20.0) {
        let l = group_mul(&dilate(r, &a).unwrap(), &dilate(r, &b).unwrap()).unwrap();
        let rr = dilate(r, &group_mul(&a, &b).unwrap()).unwrap();
        prop_assert!(close(&l, &rr, 1e-12));
    }

    #[test]
    fn inverse_and_norm(a in (1usize..4).prop_flat_map(point)) {
        let inv = a.inverse();
        prop_assert!(group_mul(&a, &inv).unwrap().coords().iter().all(|v| v.abs() < 1e-15));
        prop_assert!((koranyi_norm(&inv) - koranyi_norm(&a)).abs() < 1e-14);
    }

    #[test]
    fn norm_is_homogeneous(a in point(2), r in 0.05f64..20.0) {
        let k = koranyi_norm(&a);
        prop_assert!((koranyi_norm(&dilate(r, &a).unwrap()) - r * k).abs() <= 1e-12 * r * k.max(1.0));
    }

    #[test]
    fn rotations_are_automorphisms(a in point(2), b in point(2), t1 in -3.2f64..3.2, t2 in -3.2f64..3.2) {
        let rot = |p: &Point| rotate_planes(p, &[t1, t2]).unwrap();
        let l = group_mul(&rot(&a), &rot(&b)).unwrap();
        let r = rot(&group_mul(&a, &b).unwrap());
        prop_assert!(close(&l, &r, 1e-12));
    }
}

#[test]
fn identity_element() {
    let g = GroupConfig::new(2).unwrap();
    let e = Point::identity(g);
    let a = Point::new(vec![0.3, -1.0, 2.0, 0.5, 1.5]).unwrap();
    assert_eq!(group_mul(&e, &a).unwrap(), a);
    assert_eq!(group_mul(&a, &e).unwrap(), a);
}
