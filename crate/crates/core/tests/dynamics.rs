use qrlab::dynamics::{exceptional_candidates, full_preimage_tree, sample_julia, sample_julia_full_tree};
use qrlab::spatial::ChordalIndex;
use qrlab::{ExtendedPoint, MapDescriptor};

fn c(re: f64, im: f64) -> ExtendedPoint {
    ExtendedPoint::finite(&[re, im]).unwrap()
}

#[test]
fn cloud_points_return_to_the_seed() {
    let cases = [
        (MapDescriptor::power(2).unwrap(), c(2.0, 0.0)),
        (MapDescriptor::quadratic(-1.0, 0.0).unwrap(), c(0.5, 0.5)),
        (MapDescriptor::stretch_power(3, 2.0).unwrap(), c(1.0, 0.0)),
        (MapDescriptor::winding3d(2).unwrap(), ExtendedPoint::finite(&[0.6, 0.2, 0.3]).unwrap()),
    ];
    for (map, seed) in cases {
        for k in [1, 4, 8] {
            let cloud = sample_julia(&map, &seed, k, 500, 9).unwrap();
            for p in &cloud.points {
                assert!(map.eval_iterate(p, k).chordal_to(&seed) <= 1e-6, "{} k = {k}", map.label());
            }
        }
    }
}

#[test]
fn circle_cloud_avoids_both_basins() {
    let f = MapDescriptor::power(2).unwrap();
    let cloud = sample_julia(&f, &c(0.3, 1.7), 18, 20_000, 4).unwrap();
    assert!(cloud.points.iter().all(|p| (p.norm() - 1.0).abs() <= 0.02));
}

#[test]
fn full_tree_cloud_is_the_last_level() {
    let q = MapDescriptor::quadratic(-1.0, 0.0).unwrap();
    let cloud = sample_julia_full_tree(&q, &c(0.5, 0.0), 6).unwrap();
    let tree = full_preimage_tree(&q, &c(0.5, 0.0), 6).unwrap();
    assert_eq!(cloud.points.len(), tree.leaves().len());
    assert_eq!(tree.index_sum(6), 64);
}

#[test]
fn exceptional_points_stay_off_the_julia_cloud() {
    for (map, seed) in [
        (MapDescriptor::power(3).unwrap(), c(2.0, 0.0)),
        (MapDescriptor::quadratic(-1.0, 0.0).unwrap(), c(0.0, 0.0)),
        (MapDescriptor::stretch_power(3, 2.0).unwrap(), c(2.0, 0.0)),
    ] {
        let cloud = sample_julia(&map, &seed, 14, 5_000, 1).unwrap();
        let index = ChordalIndex::new(&cloud.points);
        for e in exceptional_candidates(&map) {
            let (_, d) = index.nearest(&e.point).unwrap();
            assert!(d > 0.05, "{} {}", map.label(), e.point);
        }
    }
}
