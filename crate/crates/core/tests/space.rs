use proptest::prelude::*;
use qrlab::space::{sample_chordal_uniform, stereographic_lift};
use qrlab::{chordal_distance, ExtendedPoint};

fn point(n: usize) -> impl Strategy<Value = ExtendedPoint> {
    prop_oneof![
        9 => prop::collection::vec(-50.0f64..50.0, n).prop_map(|c| ExtendedPoint::finite(&c).unwrap()),
        1 => Just(ExtendedPoint::infinity(n)),
    ]
}

proptest! {
    #[test]
    fn chordal_is_a_bounded_metric((x, y, z) in (2usize..=3).prop_flat_map(|n| (point(n), point(n), point(n)))) {
        let xy = x.chordal_to(&y);
        prop_assert_eq!(xy, y.chordal_to(&x));
        prop_assert!((0.0..=2.0).contains(&xy));
        prop_assert!(x.chordal_to(&z) <= xy + y.chordal_to(&z) + 1e-12);
        prop_assert_eq!(x.chordal_to(&x), 0.0);
        if x != y {
            prop_assert!(xy > 0.0);
        }
    }

    #[test]
    fn lift_round_trip(c in prop::collection::vec(-1.0f64..1.0, 2..=3), scale in -6.0f64..6.0) {
        let s = 10f64.powf(scale);
        let x = ExtendedPoint::finite(&c.iter().map(|v| v * s).collect::<Vec<_>>()).unwrap();
        let back = stereographic_lift(&x).unlift();
        prop_assert!(back.chordal_to(&x) <= 1e-10);
        prop_assert!(back.euclidean_to(&x) <= 1e-12 * x.norm().max(1.0));
    }
}

#[test]
fn triangle_inequality_on_sampled_triples() {
    for n in [2, 3] {
        let pts = sample_chordal_uniform(n, 30_000, 17).unwrap();
        for t in pts.chunks(3) {
            let (a, b, c) = (&t[0], &t[1], &t[2]);
            assert!(a.chordal_to(c) <= a.chordal_to(b) + b.chordal_to(c) + 1e-12);
            assert_eq!(chordal_distance(a, b).unwrap(), chordal_distance(b, a).unwrap());
        }
    }
}
