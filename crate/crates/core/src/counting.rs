//! Counting functions `n(E, y)` and their spherical and global averages.

use rand_distr::{Distribution, StandardNormal};
use rayon::prelude::*;
use serde::Serialize;

use crate::dynamics::{full_preimage_tree, DEFAULT_TREE_BUDGET};
use crate::error::{Error, Result};
use crate::maps::{MapDescriptor, MapFamily};
use crate::space::{derive_seed, rng_from_seed, sample_chordal_uniform, ExtendedPoint};

/// The set `E` over which preimages are counted.
#[derive(Clone, Debug, PartialEq, Serialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Region {
    /// All of `R̄ⁿ`.
    All,
    /// Closed Euclidean ball; never contains `∞`.
    EuclideanBall { center: ExtendedPoint, radius: f64 },
    /// Closed chordal ball.
    ChordalBall { center: ExtendedPoint, radius: f64 },
}

impl Region {
    pub fn euclidean_ball(center: ExtendedPoint, radius: f64) -> Result<Self> {
        if center.is_infinite() || !(radius > 0.0) {
            return Err(Error::InvalidArgument("euclidean ball needs a finite center and positive radius".into()));
        }
        Ok(Region::EuclideanBall { center, radius })
    }

    pub fn chordal_ball(center: ExtendedPoint, radius: f64) -> Result<Self> {
        if !(radius > 0.0 && radius <= 2.0) {
            return Err(Error::InvalidArgument(format!("chordal radius must lie in (0, 2], got {radius}")));
        }
        Ok(Region::ChordalBall { center, radius })
    }

    pub fn contains(&self, x: &ExtendedPoint) -> bool {
        match self {
            Region::All => true,
            Region::EuclideanBall { center, radius } => x.is_finite() && x.euclidean_to(center) <= *radius,
            Region::ChordalBall { center, radius } => x.chordal_to(center) <= *radius,
        }
    }
}

/// `n(E, y)`: preimages of `y` in `E` counted with local index.
pub fn count_in(map: &MapDescriptor, region: &Region, y: &ExtendedPoint) -> u32 {
    map.preimages(y).entries.iter().filter(|(x, _)| region.contains(x)).map(|(_, i)| i).sum()
}

/// `n(E, y)` for the iterate `f^k`, from the exact preimage tree.
pub fn count_in_iterate(map: &MapDescriptor, k: u32, region: &Region, y: &ExtendedPoint) -> Result<u64> {
    let tree = full_preimage_tree(map, y, k)?;
    Ok(tree.leaves().iter().filter(|n| region.contains(&n.point)).map(|n| n.index).sum())
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct AverageResult {
    pub estimate: f64,
    pub std_error: f64,
    pub samples: usize,
    pub exact: bool,
}

impl AverageResult {
    fn exact(value: f64) -> Self {
        Self {
            estimate: value,
            std_error: 0.0,
            samples: 0,
            exact: true,
        }
    }

    fn from_counts(counts: &[f64]) -> Self {
        let n = counts.len() as f64;
        let mean = counts.iter().sum::<f64>() / n;
        let var = counts.iter().map(|c| (c - mean).powi(2)).sum::<f64>() / (n - 1.0).max(1.0);
        Self {
            estimate: mean,
            std_error: (var / n).sqrt(),
            samples: counts.len(),
            exact: false,
        }
    }
}

const MIN_SAMPLES: usize = 100;

fn check_samples(samples: usize) -> Result<()> {
    if samples < MIN_SAMPLES {
        return Err(Error::InvalidArgument(format!("at least {MIN_SAMPLES} samples required, got {samples}")));
    }
    Ok(())
}

/// Uniform samples of the Euclidean sphere `S(z, t)`.
pub fn sample_sphere(z: &ExtendedPoint, t: f64, count: usize, rng_seed: u64) -> Result<Vec<ExtendedPoint>> {
    let Some(center) = z.coords() else {
        return Err(Error::InvalidArgument("sphere center must be finite".into()));
    };
    if !(t > 0.0) {
        return Err(Error::InvalidArgument("sphere radius must be positive".into()));
    }
    let n = center.len();
    (0..count)
        .into_par_iter()
        .map(|i| {
            let mut rng = rng_from_seed(derive_seed(rng_seed, i as u64));
            let g: Vec<f64> = (0..n).map(|_| StandardNormal.sample(&mut rng)).collect();
            let norm = g.iter().map(|v| v * v).sum::<f64>().sqrt();
            let p: Vec<f64> = center.iter().zip(&g).map(|(c, v)| c + t * v / norm).collect();
            ExtendedPoint::finite(&p)
        })
        .collect()
}

/// `ν(E, S(z, t))`, the mean of `n(E, y)` over the sphere `S(z, t)`.
///
/// Exact when `n(E, ·)` is constant on the sphere: `E = R̄ⁿ`, or a power map
/// with `E` a ball about the origin and the sphere centred there too, where
/// `n(B̄(R), y) = d·1{|y| ≤ R^d}`.
pub fn sphere_average(map: &MapDescriptor, region: &Region, z: &ExtendedPoint, t: f64, samples: usize, rng_seed: u64) -> Result<AverageResult> {
    check_samples(samples)?;
    if let Some(v) = constant_profile(map, region, z, t) {
        return Ok(AverageResult::exact(v));
    }
    let ys = sample_sphere(z, t, samples, rng_seed)?;
    let counts: Vec<f64> = ys.par_iter().map(|y| count_in(map, region, y) as f64).collect();
    Ok(AverageResult::from_counts(&counts))
}

fn constant_profile(map: &MapDescriptor, region: &Region, z: &ExtendedPoint, t: f64) -> Option<f64> {
    match (map.family(), region) {
        (_, Region::All) => Some(map.degree() as f64),
        (MapFamily::Power { d }, Region::EuclideanBall { center, radius }) if center.norm() == 0.0 && z.norm() == 0.0 => {
            let profile = radius.powi(d as i32);
            // On the boundary |y| = R^d the count still jumps; fall back to sampling.
            if (t - profile).abs() <= 1e-12 * profile {
                None
            } else {
                Some(if t < profile { d as f64 } else { 0.0 })
            }
        }
        _ => None,
    }
}

/// `A(E)`, the mean of `n(E, y)` over the sphere `Sⁿ(1)` with its normalized measure.
pub fn global_average(map: &MapDescriptor, region: &Region, samples: usize, rng_seed: u64) -> Result<AverageResult> {
    global_average_iterate(map, 1, region, samples, rng_seed)
}

/// `A(E, f^k)`, counting through exact preimage trees.
pub fn global_average_iterate(map: &MapDescriptor, k: u32, region: &Region, samples: usize, rng_seed: u64) -> Result<AverageResult> {
    check_samples(samples)?;
    if k == 0 {
        return Err(Error::InvalidArgument("iterate count must be at least 1".into()));
    }
    let required = (map.degree() as u128).pow(k);
    if required > DEFAULT_TREE_BUDGET as u128 {
        return Err(Error::BudgetExceeded {
            required,
            budget: DEFAULT_TREE_BUDGET,
        });
    }
    if *region == Region::All {
        return Ok(AverageResult::exact(required as f64));
    }
    let ys = sample_chordal_uniform(map.dim(), samples, rng_seed)?;
    let counts: Result<Vec<f64>> = ys.par_iter().map(|y| count_in_iterate(map, k, region, y).map(|c| c as f64)).collect();
    Ok(AverageResult::from_counts(&counts?))
}

/// One line of [`growth_contrast`].
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct GrowthRow {
    pub k: u32,
    pub julia: AverageResult,
    pub fatou: AverageResult,
}

/// `A(B̄_χ(x, δ), f^k)` at a Julia and a Fatou base point.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct GrowthTable {
    pub rows: Vec<GrowthRow>,
    /// Set when `deg^k` exceeded the tree budget and the table was cut short.
    pub truncated: bool,
    pub degree: u32,
    pub inner_dilatation: f64,
}

impl GrowthTable {
    /// Successive ratios `A_{k+1} / A_k` of the Julia column.
    pub fn julia_ratios(&self) -> Vec<f64> {
        self.rows.windows(2).map(|w| w[1].julia.estimate / w[0].julia.estimate).collect()
    }

    /// Least-squares slope of `log A_k` against `k`, exponentiated, over rows from `k_from`.
    pub fn julia_rate(&self, k_from: u32) -> Option<f64> {
        fitted_rate(self.rows.iter().filter(|r| r.k >= k_from).map(|r| (r.k, r.julia.estimate)))
    }

    /// Growth rate fitted on the second half of the table, past the transient
    /// in which the image of the ball is still gaining area.
    pub fn julia_tail_rate(&self) -> Option<f64> {
        let k_max = self.rows.last().map_or(0, |r| r.k);
        self.julia_rate(k_max / 2 + 1)
    }

    pub fn fatou_rate(&self, k_from: u32) -> Option<f64> {
        fitted_rate(self.rows.iter().filter(|r| r.k >= k_from).map(|r| (r.k, r.fatou.estimate)))
    }

    /// Smallest `C` with `A_k ≤ C K_I^k` on the Fatou column.
    pub fn fatou_constant(&self) -> f64 {
        self.rows
            .iter()
            .map(|r| r.fatou.estimate / self.inner_dilatation.powi(r.k as i32))
            .fold(0.0, f64::max)
    }
}

fn fitted_rate(points: impl Iterator<Item = (u32, f64)>) -> Option<f64> {
    let pts: Vec<(f64, f64)> = points.filter(|(_, a)| *a > 0.0).map(|(k, a)| (k as f64, a.ln())).collect();
    if pts.len() < 2 {
        return None;
    }
    let n = pts.len() as f64;
    let mx = pts.iter().map(|p| p.0).sum::<f64>() / n;
    let my = pts.iter().map(|p| p.1).sum::<f64>() / n;
    let sxy: f64 = pts.iter().map(|p| (p.0 - mx) * (p.1 - my)).sum();
    let sxx: f64 = pts.iter().map(|p| (p.0 - mx).powi(2)).sum();
    Some((sxy / sxx).exp())
}

/// Local averages of iterates over small chordal balls at a Julia point and a
/// Fatou point, with common sample points `y` for every `k`.
pub fn growth_contrast(
    map: &MapDescriptor,
    x_julia: &ExtendedPoint,
    x_fatou: &ExtendedPoint,
    delta: f64,
    k_max: u32,
    samples: usize,
    rng_seed: u64,
) -> Result<GrowthTable> {
    check_samples(samples)?;
    let julia_ball = Region::chordal_ball(*x_julia, delta)?;
    let fatou_ball = Region::chordal_ball(*x_fatou, delta)?;
    let deg = map.degree() as u128;
    let mut k_top = k_max;
    while k_top > 0 && deg.pow(k_top) > DEFAULT_TREE_BUDGET as u128 {
        k_top -= 1;
    }
    let ys = sample_chordal_uniform(map.dim(), samples, rng_seed)?;
    let mut rows = Vec::new();
    for k in 1..=k_top {
        let counts: Result<Vec<(f64, f64)>> = ys
            .par_iter()
            .map(|y| {
                let tree = full_preimage_tree(map, y, k)?;
                let (mut a, mut b) = (0u64, 0u64);
                for n in tree.leaves() {
                    if julia_ball.contains(&n.point) {
                        a += n.index;
                    }
                    if fatou_ball.contains(&n.point) {
                        b += n.index;
                    }
                }
                Ok((a as f64, b as f64))
            })
            .collect();
        let (ja, fa): (Vec<f64>, Vec<f64>) = counts?.into_iter().unzip();
        rows.push(GrowthRow {
            k,
            julia: AverageResult::from_counts(&ja),
            fatou: AverageResult::from_counts(&fa),
        });
    }
    Ok(GrowthTable {
        rows,
        truncated: k_top < k_max,
        degree: map.degree(),
        inner_dilatation: map.inner_dilatation(),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use num_complex::Complex64;

    fn c(re: f64, im: f64) -> ExtendedPoint {
        ExtendedPoint::from_complex(Complex64::new(re, im))
    }

    #[test]
    fn count_examples() {
        let f = MapDescriptor::power(3).unwrap();
        let origin = c(0.0, 0.0);
        let big = Region::euclidean_ball(origin, 2.0).unwrap();
        let small = Region::euclidean_ball(origin, 0.5).unwrap();
        assert_eq!(count_in(&f, &big, &c(1.0, 0.0)), 3);
        assert_eq!(count_in(&f, &small, &c(1.0, 0.0)), 0);
        assert_eq!(count_in(&f, &small, &origin), 3);
        assert_eq!(count_in(&f, &Region::All, &ExtendedPoint::infinity(2)), 3);
        assert!(!big.contains(&ExtendedPoint::infinity(2)));
        assert!(Region::chordal_ball(origin, 2.5).is_err());
    }

    #[test]
    fn sphere_average_examples() {
        let f = MapDescriptor::power(2).unwrap();
        let unit = Region::euclidean_ball(c(0.0, 0.0), 1.0).unwrap();
        let inner = sphere_average(&f, &unit, &c(0.0, 0.0), 0.5, 1000, 1).unwrap();
        assert_eq!(inner, AverageResult::exact(2.0));
        let outer = sphere_average(&f, &unit, &c(0.0, 0.0), 2.0, 1000, 1).unwrap();
        assert_eq!(outer.estimate, 0.0);
        assert!(outer.exact);

        // Arc of S(1.5, 1) inside the unit disk: |1.5 + e^{iθ}|² ≤ 1 ⇔ cos θ ≤ −3/4.
        let oracle = 2.0 * (std::f64::consts::PI - (-0.75f64).acos()) / std::f64::consts::PI;
        let r = sphere_average(&f, &unit, &c(1.5, 0.0), 1.0, 40_000, 2).unwrap();
        assert!(!r.exact);
        assert!((r.estimate - oracle).abs() < 3.0 * r.std_error, "{} vs {oracle}", r.estimate);
    }

    #[test]
    fn global_average_examples() {
        for f in [
            MapDescriptor::power(2).unwrap(),
            MapDescriptor::quadratic(-1.0, 0.0).unwrap(),
            MapDescriptor::winding3d(2).unwrap(),
        ] {
            let a = global_average(&f, &Region::All, 100, 0).unwrap();
            assert_eq!(a.estimate, f.degree() as f64);
            assert_eq!(a.std_error, 0.0);
        }
        let f = MapDescriptor::power(2).unwrap();
        assert_eq!(global_average_iterate(&f, 3, &Region::All, 100, 0).unwrap().estimate, 8.0);
        let unit = Region::euclidean_ball(c(0.0, 0.0), 1.0).unwrap();
        let a = global_average(&f, &unit, 20_000, 3).unwrap();
        assert!((a.estimate - 1.0).abs() < 3.0 * a.std_error);
    }

    #[test]
    fn growth_power_map() {
        let f = MapDescriptor::power(2).unwrap();
        let t = growth_contrast(&f, &c(1.0, 0.0), &c(0.0, 0.0), 0.1, 6, 20_000, 5).unwrap();
        assert!(!t.truncated);
        let ratios = t.julia_ratios();
        // The image annulus gains spherical area until about k = 5, then only
        // the angular multiplicity keeps doubling.
        assert!((ratios.last().unwrap() - 2.0).abs() <= 0.2, "{ratios:?}");
        assert!(ratios.windows(2).all(|w| w[1] < w[0]), "{ratios:?}");
        assert!(t.rows.iter().filter(|r| r.k >= 2).all(|r| r.fatou.estimate <= 1e-2));
    }

    #[test]
    fn growth_stretch_power() {
        let f = MapDescriptor::stretch_power(3, 2.0).unwrap();
        let cloud = crate::dynamics::sample_julia(&f, &c(1.0, 0.0), 15, 10, 1).unwrap();
        let t = growth_contrast(&f, &cloud.points[0], &c(0.0, 0.0), 0.1, 5, 10_000, 5).unwrap();
        let rate = t.julia_tail_rate().unwrap();
        assert!((2.5..=3.2).contains(&rate), "{rate}");
        assert!(t.rows.iter().all(|r| r.fatou.estimate <= t.fatou_constant() * t.inner_dilatation.powi(r.k as i32)));
    }
}
