use num_rational::Ratio;
use proptest::prelude::*;
use qrlab::dynamics::sample_julia;
use qrlab::fractal::{box_dimension_auto, holder_gauge, holder_exponent, holder_stability, preimage_measure, separated_preimage_audit, GaugeForm, GaugeFunction};
use qrlab::{ExtendedPoint, MapDescriptor};

fn c(re: f64, im: f64) -> ExtendedPoint {
    ExtendedPoint::finite(&[re, im]).unwrap()
}

fn catalog() -> Vec<MapDescriptor> {
    vec![
        MapDescriptor::power(2).unwrap(),
        MapDescriptor::power(3).unwrap(),
        MapDescriptor::quadratic(-1.0, 0.0).unwrap(),
        MapDescriptor::quadratic(-0.12, 0.75).unwrap(),
        MapDescriptor::stretch_power(3, 2.0).unwrap(),
        MapDescriptor::winding(3).unwrap(),
        MapDescriptor::winding3d(2).unwrap(),
    ]
}

fn start(map: &MapDescriptor) -> ExtendedPoint {
    let mut v = vec![0.0; map.dim()];
    v[0] = 2.0;
    ExtendedPoint::finite(&v).unwrap()
}

#[test]
fn preimage_measures_are_probability_measures() {
    for map in catalog() {
        for k in 0..=8 {
            let nu = preimage_measure(&map, &start(&map), k).unwrap();
            assert_eq!(nu.total_mass(), Ratio::from_integer(1), "{} k = {k}", map.label());
        }
    }
}

#[test]
fn pushforward_steps_down_a_level() {
    for map in catalog() {
        for k in 1..=6 {
            let hi = preimage_measure(&map, &start(&map), k).unwrap();
            let lo = preimage_measure(&map, &start(&map), k - 1).unwrap();
            assert!(hi.pushforward(&map).same_as(&lo), "{} k = {k}", map.label());
        }
    }
}

fn increasing(g: &GaugeFunction) -> bool {
    let ts: Vec<f64> = (1..=1000).map(|j| g.eta * j as f64 / 1000.0).collect();
    ts.windows(2).all(|w| g.eval(w[1]) > g.eval(w[0]))
}

proptest! {
    #[test]
    fn gauges_increase(d in 0.05f64..3.0, q in -4.0f64..-0.1, b in 0.2f64..3.0, eta in 0.05f64..0.9) {
        prop_assert!(increasing(&GaugeFunction::power(d).unwrap()));
        let g = GaugeFunction::new(GaugeForm::LogPower { exponent: q, scale: b }, eta);
        if let Ok(g) = g {
            prop_assert!(increasing(&g));
        }
    }

    #[test]
    fn holder_gauges_increase(m in 2u32..6, alpha in 0.05f64..0.95, scale in 0.5f64..4.0) {
        prop_assert!(increasing(&holder_gauge(m, alpha, scale).unwrap()));
    }
}

#[test]
fn circle_audit_matches_its_dimension() {
    let f = MapDescriptor::power(2).unwrap();
    let cloud = sample_julia(&f, &c(2.0, 0.0), 20, 10_000, 6).unwrap();
    let bound = separated_preimage_audit(&f, &cloud, 2).unwrap().dimension_bound.unwrap();
    let dim = box_dimension_auto(&cloud.points).unwrap().value;
    assert!((bound - 1.0).abs() <= 0.05);
    assert!((bound - dim).abs() <= 0.15);
}

#[test]
fn julia_clouds_have_positive_dimension() {
    for map in catalog().into_iter().filter(|m| m.degree_exceeds_inner_dilatation()) {
        let cloud = sample_julia(&map, &start(&map), 16, 10_000, 2).unwrap();
        let dim = box_dimension_auto(&cloud.points).unwrap().value;
        assert!(dim >= 0.2, "{}: {dim}", map.label());
    }
}

#[test]
fn holder_exponent_is_stable_at_branch_points() {
    for map in [MapDescriptor::power(3).unwrap(), MapDescriptor::winding3d(2).unwrap(), MapDescriptor::stretch_power(3, 2.0).unwrap()] {
        for (b, _) in map.branch_set().representatives(map.dim()) {
            let mu = holder_exponent(&map, &b);
            let s = holder_stability(&map, &b, mu, &[0.1, 0.05, 0.025], 2000, 3).unwrap();
            assert!(s.stable(), "{} at {b}: {s:?}", map.label());
        }
    }
    let f = MapDescriptor::power(3).unwrap();
    let wrong = holder_stability(&f, &c(0.0, 0.0), 4.0, &[0.1, 0.05, 0.025], 2000, 3).unwrap();
    assert!((wrong.slope + 1.0).abs() < 0.05);
}
