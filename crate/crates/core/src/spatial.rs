//! Neighbour queries on point clouds in the chordal metric.
//!
//! Points are lifted to `Sⁿ(1) ⊂ R^{n+1}`, where the chordal distance is the
//! Euclidean one, and bucketed in a uniform hash grid.

use std::collections::HashMap;

use rayon::prelude::*;

use crate::space::{ExtendedPoint, MAX_DIM};

type Key = [i64; MAX_DIM + 1];
type Lifted = [f64; MAX_DIM + 1];

/// Uniform-grid index over lifted points.
pub struct ChordalIndex {
    cell: f64,
    ambient: usize,
    points: Vec<Lifted>,
    buckets: HashMap<Key, Vec<usize>>,
}

fn lifted(p: &ExtendedPoint) -> Lifted {
    let mut out = [0.0; MAX_DIM + 1];
    let s = p.lift();
    out[..s.coords().len()].copy_from_slice(s.coords());
    out
}

fn dist(a: &Lifted, b: &Lifted, m: usize) -> f64 {
    (0..m).map(|i| (a[i] - b[i]).powi(2)).sum::<f64>().sqrt()
}

impl ChordalIndex {
    /// Builds the index; the cell size adapts to the cloud size.
    pub fn new(points: &[ExtendedPoint]) -> Self {
        let cell = (2.0 / (points.len().max(1) as f64).sqrt()).clamp(1e-4, 0.5);
        Self::with_cell(points, cell)
    }

    pub fn with_cell(points: &[ExtendedPoint], cell: f64) -> Self {
        let ambient = points.first().map_or(3, |p| p.dim() + 1);
        let lifted_pts: Vec<Lifted> = points.iter().map(lifted).collect();
        let mut buckets: HashMap<Key, Vec<usize>> = HashMap::new();
        for (i, p) in lifted_pts.iter().enumerate() {
            buckets.entry(Self::key_of(p, cell, ambient)).or_default().push(i);
        }
        Self {
            cell,
            ambient,
            points: lifted_pts,
            buckets,
        }
    }

    fn key_of(p: &Lifted, cell: f64, ambient: usize) -> Key {
        let mut k = [0i64; MAX_DIM + 1];
        for i in 0..ambient {
            k[i] = (p[i] / cell).floor() as i64;
        }
        k
    }

    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }

    /// Visits every bucket at Chebyshev ring distance exactly `ring` from `center`.
    fn for_ring<F: FnMut(&[usize])>(&self, center: &Key, ring: i64, mut visit: F) {
        let m = self.ambient;
        let side = 2 * ring + 1;
        let total = (side as usize).pow(m as u32);
        for code in 0..total {
            let mut c = code;
            let mut key = *center;
            let mut on_shell = false;
            for k in key.iter_mut().take(m) {
                let off = (c % side as usize) as i64 - ring;
                c /= side as usize;
                on_shell |= off.abs() == ring;
                *k += off;
            }
            if on_shell || ring == 0 {
                if let Some(b) = self.buckets.get(&key) {
                    visit(b);
                }
            }
        }
    }

    fn nearest_lifted(&self, q: &Lifted, skip: Option<usize>) -> Option<(usize, f64)> {
        if self.points.len() <= skip.map_or(0, |_| 1) {
            return None;
        }
        let center = Self::key_of(q, self.cell, self.ambient);
        let mut best: Option<(usize, f64)> = None;
        let max_ring = (2.0 / self.cell).ceil() as i64 + 1;
        for ring in 0..=max_ring {
            if let Some((_, d)) = best {
                if d <= (ring - 1).max(0) as f64 * self.cell {
                    break;
                }
            }
            if ring > 6 && best.is_none() {
                return self.brute_nearest(q, skip);
            }
            self.for_ring(&center, ring, |bucket| {
                for &i in bucket {
                    if Some(i) == skip {
                        continue;
                    }
                    let d = dist(q, &self.points[i], self.ambient);
                    if best.is_none_or(|(_, bd)| d < bd) {
                        best = Some((i, d));
                    }
                }
            });
        }
        best
    }

    fn brute_nearest(&self, q: &Lifted, skip: Option<usize>) -> Option<(usize, f64)> {
        self.points
            .iter()
            .enumerate()
            .filter(|(i, _)| Some(*i) != skip)
            .map(|(i, p)| (i, dist(q, p, self.ambient)))
            .min_by(|a, b| a.1.total_cmp(&b.1))
    }

    /// Nearest indexed point and its chordal distance.
    pub fn nearest(&self, q: &ExtendedPoint) -> Option<(usize, f64)> {
        self.nearest_lifted(&lifted(q), None)
    }

    /// Indices of points within chordal distance `r` of `q`.
    pub fn within(&self, q: &ExtendedPoint, r: f64) -> Vec<usize> {
        let ql = lifted(q);
        let center = Self::key_of(&ql, self.cell, self.ambient);
        let rings = (r / self.cell).ceil() as i64;
        let mut out = Vec::new();
        for ring in 0..=rings {
            self.for_ring(&center, ring, |bucket| {
                out.extend(
                    bucket
                        .iter()
                        .copied()
                        .filter(|&i| dist(&ql, &self.points[i], self.ambient) <= r),
                );
            });
        }
        out.sort_unstable();
        out
    }

    /// Distance from each indexed point to its nearest other indexed point.
    pub fn nearest_neighbor_distances(&self) -> Vec<f64> {
        (0..self.points.len())
            .into_par_iter()
            .map(|i| {
                self.nearest_lifted(&self.points[i], Some(i))
                    .map_or(0.0, |(_, d)| d)
            })
            .collect()
    }
}

/// Directed Hausdorff distance `max_{a∈A} min_{b∈B} χ(a, b)`.
pub fn directed_hausdorff(a: &[ExtendedPoint], b_index: &ChordalIndex) -> f64 {
    a.par_iter()
        .map(|p| b_index.nearest(p).map_or(f64::INFINITY, |(_, d)| d))
        .reduce(|| 0.0, f64::max)
}

/// Symmetric chordal Hausdorff distance between two clouds.
pub fn hausdorff_distance(a: &[ExtendedPoint], b: &[ExtendedPoint]) -> f64 {
    if a.is_empty() || b.is_empty() {
        return if a.is_empty() && b.is_empty() { 0.0 } else { f64::INFINITY };
    }
    let ia = ChordalIndex::new(a);
    let ib = ChordalIndex::new(b);
    directed_hausdorff(a, &ib).max(directed_hausdorff(b, &ia))
}

/// Spacing of a cloud: the largest nearest-neighbour distance, i.e. the
/// radius at which every point sees another one.
pub fn cloud_spacing(points: &[ExtendedPoint]) -> f64 {
    if points.len() < 2 {
        return 0.0;
    }
    ChordalIndex::new(points)
        .nearest_neighbor_distances()
        .into_iter()
        .fold(0.0, f64::max)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::space::sample_chordal_uniform;

    fn brute_hausdorff(a: &[ExtendedPoint], b: &[ExtendedPoint]) -> f64 {
        let dir = |x: &[ExtendedPoint], y: &[ExtendedPoint]| {
            x.iter()
                .map(|p| y.iter().map(|q| p.chordal_to(q)).fold(f64::INFINITY, f64::min))
                .fold(0.0, f64::max)
        };
        dir(a, b).max(dir(b, a))
    }

    #[test]
    fn nearest_matches_brute_force() {
        let pts = sample_chordal_uniform(2, 2000, 1).unwrap();
        let queries = sample_chordal_uniform(2, 200, 2).unwrap();
        let idx = ChordalIndex::new(&pts);
        for q in &queries {
            let (_, d) = idx.nearest(q).unwrap();
            let brute = pts.iter().map(|p| p.chordal_to(q)).fold(f64::INFINITY, f64::min);
            assert!((d - brute).abs() < 1e-12);
        }
    }

    #[test]
    fn hausdorff_matches_brute_force() {
        let a = sample_chordal_uniform(3, 400, 5).unwrap();
        let b = sample_chordal_uniform(3, 300, 6).unwrap();
        assert!((hausdorff_distance(&a, &b) - brute_hausdorff(&a, &b)).abs() < 1e-12);
        assert_eq!(hausdorff_distance(&a, &a), 0.0);
    }

    #[test]
    fn within_matches_brute_force() {
        let pts = sample_chordal_uniform(2, 3000, 8).unwrap();
        let idx = ChordalIndex::new(&pts);
        let q = pts[17];
        let got = idx.within(&q, 0.1);
        let want: Vec<usize> = (0..pts.len()).filter(|&i| pts[i].chordal_to(&q) <= 0.1).collect();
        assert_eq!(got, want);
    }

    #[test]
    fn spacing_of_regular_polygon() {
        use num_complex::Complex64;
        let n = 360;
        let pts: Vec<ExtendedPoint> = (0..n)
            .map(|j| ExtendedPoint::from_complex(Complex64::from_polar(1.0, 2.0 * std::f64::consts::PI * j as f64 / n as f64)))
            .collect();
        // On the unit circle the chordal metric is Euclidean in the plane.
        let chord = 2.0 * (std::f64::consts::PI / n as f64).sin();
        assert!((cloud_spacing(&pts) - chord).abs() < 1e-12);
    }
}
