use proptest::prelude::*;
use qrlab::space::sample_chordal_uniform;
use qrlab::{MapDescriptor, MapFamily};

fn catalog() -> Vec<MapDescriptor> {
    vec![
        MapDescriptor::power(2).unwrap(),
        MapDescriptor::power(4).unwrap(),
        MapDescriptor::quadratic(-1.0, 0.0).unwrap(),
        MapDescriptor::quadratic(0.28, 0.01).unwrap(),
        MapDescriptor::stretch_power(3, 2.0).unwrap(),
        MapDescriptor::stretch_power(5, 4.5).unwrap(),
        MapDescriptor::winding(3).unwrap(),
        MapDescriptor::winding3d(3).unwrap(),
    ]
}

#[test]
fn preimages_are_exact_and_complete() {
    for (s, map) in catalog().iter().enumerate() {
        for y in sample_chordal_uniform(map.dim(), 1000, s as u64).unwrap() {
            let pre = map.preimages(&y);
            assert_eq!(pre.multiplicity(), map.degree(), "{} at {y}", map.label());
            for (x, i) in &pre.entries {
                assert!(map.eval(x).chordal_to(&y) <= 1e-9, "{} at {y}", map.label());
                assert_eq!(*i, map.local_index(x));
            }
        }
    }
}

#[test]
fn branch_points_carry_their_index() {
    for map in catalog() {
        for (b, i) in map.branch_set().representatives(map.dim()) {
            assert!(i >= 2);
            assert_eq!(map.local_index(&b), i);
        }
    }
}

proptest! {
    #[test]
    fn stretch_power_needs_degree_above_dilatation(d in 2u32..8, k in 1.0f64..9.0) {
        let m = MapDescriptor::stretch_power(d, k);
        prop_assert_eq!(m.is_ok(), d as f64 > k);
        if let Ok(m) = m {
            prop_assert!(m.degree_exceeds_inner_dilatation());
            prop_assert_eq!(m.inner_dilatation(), k);
        }
    }

    #[test]
    fn descriptors_round_trip_through_json(d in 2u32..6, re in -1.0f64..1.0, im in -1.0f64..1.0) {
        for family in [MapFamily::Power { d }, MapFamily::Quadratic { c: [re, im] }, MapFamily::Winding { k: d, n: 2 }] {
            let text = serde_json::to_string(&family).unwrap();
            let back: MapFamily = serde_json::from_str(&text).unwrap();
            prop_assert_eq!(back, family);
        }
    }
}
