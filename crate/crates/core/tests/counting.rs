use qrlab::counting::{count_in, count_in_iterate, global_average, global_average_iterate, sphere_average, Region};
use qrlab::space::sample_chordal_uniform;
use qrlab::{ExtendedPoint, MapDescriptor};

fn catalog() -> Vec<MapDescriptor> {
    vec![
        MapDescriptor::power(3).unwrap(),
        MapDescriptor::quadratic(-1.0, 0.0).unwrap(),
        MapDescriptor::stretch_power(3, 2.0).unwrap(),
        MapDescriptor::winding(2).unwrap(),
        MapDescriptor::winding3d(2).unwrap(),
    ]
}

fn e1(dim: usize, x: f64) -> ExtendedPoint {
    let mut c = vec![0.0; dim];
    c[0] = x;
    ExtendedPoint::finite(&c).unwrap()
}

#[test]
fn counts_are_bounded_and_monotone_in_the_region() {
    for map in catalog() {
        let ys = sample_chordal_uniform(map.dim(), 500, 3).unwrap();
        let center = e1(map.dim(), 0.2);
        for y in &ys {
            assert_eq!(count_in(&map, &Region::All, y), map.degree());
            let mut last = 0;
            for r in [0.1, 0.4, 0.8, 1.5, 3.0] {
                let n = count_in(&map, &Region::euclidean_ball(center, r).unwrap(), y);
                assert!(n <= map.degree() && n >= last);
                last = n;
            }
        }
    }
}

#[test]
fn iterate_identity() {
    for map in catalog() {
        for k in 1..=5 {
            let avg = global_average_iterate(&map, k, &Region::All, 100, 1).unwrap();
            assert_eq!(avg.estimate, (map.degree() as f64).powi(k as i32));
            assert_eq!(avg.std_error, 0.0);
        }
        for y in sample_chordal_uniform(map.dim(), 20, 8).unwrap() {
            assert_eq!(count_in_iterate(&map, 3, &Region::All, &y).unwrap(), (map.degree() as u64).pow(3));
        }
    }
}

#[test]
fn ball_average_grows_with_the_radius() {
    for map in catalog() {
        let center = e1(map.dim(), 0.1);
        let mut last = 0.0;
        for j in 1..=20 {
            let r = 0.15 * j as f64;
            let a = global_average(&map, &Region::euclidean_ball(center, r).unwrap(), 2000, 5).unwrap();
            assert!(a.estimate >= last, "{} r = {r}", map.label());
            last = a.estimate;
        }
    }
}

#[test]
fn std_error_scales_like_inverse_root() {
    let map = MapDescriptor::stretch_power(3, 2.0).unwrap();
    let region = Region::euclidean_ball(e1(2, 0.3), 0.8).unwrap();
    let a = global_average(&map, &region, 20_000, 11).unwrap();
    let b = global_average(&map, &region, 40_000, 12).unwrap();
    let ratio = b.std_error / a.std_error;
    assert!((ratio - 0.5f64.sqrt()).abs() <= 0.1 * 0.5f64.sqrt(), "{ratio}");
}

#[test]
fn sphere_average_matches_closed_form_for_power_maps() {
    // n(B̄(0, R), y) = d for |y| ≤ R^d, so the average over S(0, t) is d or 0.
    let f = MapDescriptor::power(2).unwrap();
    let region = Region::euclidean_ball(e1(2, 0.0), 0.9).unwrap();
    let inside = sphere_average(&f, &region, &e1(2, 0.0), 0.5, 500, 2).unwrap();
    let outside = sphere_average(&f, &region, &e1(2, 0.0), 0.9, 500, 2).unwrap();
    assert_eq!((inside.estimate, outside.estimate), (2.0, 0.0));
    // Off-centre spheres go through sampling and agree with a direct count.
    let z = e1(2, 0.2);
    let sampled = sphere_average(&f, &region, &z, 0.3, 4000, 3).unwrap();
    assert!(!sampled.exact);
    assert!(sampled.estimate <= 2.0 && sampled.estimate > 0.0);
}
