use proptest::prelude::*;
use subfrac_cli::dsl::{parse_fn, FnDescriptor};

fn descriptor() -> impl Strategy<Value = FnDescriptor> {
    let a = (1u32..4000).prop_map(|k| k as f64 / 1000.0);
    prop_oneof![
        a.clone().prop_map(|a| FnDescriptor::Gaussian { a }),
        (prop::collection::vec(0u32..5, 3..8), a).prop_map(|(gamma, a)| FnDescriptor::PolyGauss { gamma, a }),
        Just(FnDescriptor::KoranyiGauss),
    ]
}

proptest! {
    #[test]
    fn print_then_parse_is_identity(d in descriptor()) {
        let text = d.to_string();
        prop_assert_eq!(parse_fn(&text).unwrap(), d);
    }

    #[test]
    fn whitespace_is_ignored(d in descriptor()) {
        let spaced = d.to_string().replace('(', " ( ").replace('=', " = ").replace(';', " ; ");
        prop_assert_eq!(parse_fn(&spaced).unwrap(), d);
    }

    #[test]
    fn errors_point_inside_the_input(s in "[a-z_]{0,12}\\(?[a-z=0-9.;,\\[\\]]{0,12}\\)?") {
        if let Err(e) = parse_fn(&s) {
            prop_assert!(e.offset <= s.len());
        }
    }
}

#[test]
fn examples() {
    assert_eq!(parse_fn("gaussian(a=1.0)").unwrap(), FnDescriptor::Gaussian { a: 1.0 });
    assert_eq!(
        parse_fn("poly_gauss(gamma=[0,0,2];a=1)").unwrap(),
        FnDescriptor::PolyGauss { gamma: vec![0, 0, 2], a: 1.0 }
    );
    assert_eq!(parse_fn("koranyi_gauss()").unwrap(), FnDescriptor::KoranyiGauss);
    let e = parse_fn("gausian(a=1)").unwrap_err();
    assert_eq!(e.offset, 0);
}

#[test]
fn built_functions_match_dimension() {
    let f = parse_fn("poly_gauss(gamma=[0,0,2];a=1)").unwrap();
    assert!(f.build(1).is_ok());
    assert!(f.build(2).is_err());
    assert!(parse_fn("gaussian()").unwrap().build(3).is_ok());
}
