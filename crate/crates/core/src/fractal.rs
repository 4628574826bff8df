//! Gauge functions, box dimension, the preimage measures `ν_k` and the
//! dimension lower bounds built from them.

use std::collections::HashSet;

use num_rational::Ratio;
use rand::Rng;
use rayon::prelude::*;
use serde::Serialize;

use crate::dynamics::{full_preimage_tree, JuliaCloud};
use crate::error::{Error, Result};
use crate::maps::MapDescriptor;
use crate::space::{derive_seed, rng_from_seed, ExtendedPoint};
use crate::spatial::ChordalIndex;

/// Exact probability weight.
pub type Weight = Ratio<u64>;

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
#[serde(tag = "form", rename_all = "snake_case")]
pub enum GaugeForm {
    /// `h(t) = t^d`.
    Power { d: f64 },
    /// `h(t) = ((1/b) log(1/t))^q` with `q < 0`.
    LogPower { exponent: f64, scale: f64 },
}

/// An increasing function `h` on `(0, η]` with `h(0⁺) = 0`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct GaugeFunction {
    pub form: GaugeForm,
    pub eta: f64,
}

const GAUGE_GRID: usize = 1000;

impl GaugeFunction {
    /// `t^d` on `(0, 2]`, the full range of chordal distances.
    pub fn power(d: f64) -> Result<Self> {
        Self::new(GaugeForm::Power { d }, 2.0)
    }

    /// `((1/b) log(1/t))^q` on `(0, η]`; requires `q < 0`, `b > 0` and `η < 1`.
    pub fn log_power(exponent: f64, scale: f64, eta: f64) -> Result<Self> {
        Self::new(GaugeForm::LogPower { exponent, scale }, eta)
    }

    pub fn new(form: GaugeForm, eta: f64) -> Result<Self> {
        let ok = match form {
            GaugeForm::Power { d } => d > 0.0 && eta > 0.0,
            GaugeForm::LogPower { exponent, scale } => exponent < 0.0 && scale > 0.0 && eta > 0.0 && eta < 1.0,
        };
        if !ok {
            return Err(Error::InvalidArgument(format!("not a gauge on (0, {eta}]: {form:?}")));
        }
        let g = Self { form, eta };
        let values: Vec<f64> = (0..GAUGE_GRID)
            .map(|i| eta * 1e-12f64.powf(1.0 - i as f64 / (GAUGE_GRID - 1) as f64))
            .map(|t| g.eval(t))
            .collect();
        if !values.windows(2).all(|w| w[0] < w[1]) || !values.iter().all(|v| v.is_finite() && *v > 0.0) {
            return Err(Error::InvalidArgument(format!("gauge is not increasing on (0, {eta}]")));
        }
        Ok(g)
    }

    pub fn eval(&self, t: f64) -> f64 {
        match self.form {
            GaugeForm::Power { d } => t.powf(d),
            GaugeForm::LogPower { exponent, scale } => ((1.0 / t).ln() / scale).powf(exponent),
        }
    }
}

/// The logarithmic gauge `(log 1/t)^{log m / log α}` attached to Hölder
/// maps with exponent `α` and `m` separated preimages; `c_scale` is the
/// normalization `b` in `((1/b) log 1/t)^q`.
pub fn holder_gauge(m: u32, alpha: f64, c_scale: f64) -> Result<GaugeFunction> {
    if m < 2 || !(alpha > 0.0 && alpha < 1.0) {
        return Err(Error::InvalidArgument(format!("need m >= 2 and 0 < alpha < 1, got m = {m}, alpha = {alpha}")));
    }
    let eta = (-c_scale).exp().min(0.5);
    GaugeFunction::log_power((m as f64).ln() / alpha.ln(), c_scale, eta)
}

/// `log m / log L`.
pub fn lipschitz_dim_bound(m: u32, lipschitz: f64) -> Result<f64> {
    if m < 2 || !(lipschitz > 1.0) {
        return Err(Error::InvalidArgument(format!("need m >= 2 and L > 1, got m = {m}, L = {lipschitz}")));
    }
    Ok((m as f64).ln() / lipschitz.ln())
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct DimensionEstimate {
    pub value: f64,
    /// `(box size, occupied boxes)` from coarse to fine.
    pub scales_used: Vec<(f64, usize)>,
    pub fit_r2: f64,
}

const BOX_SCALES: usize = 8;

/// Box-counting dimension on a geometric ladder of box sizes, in Euclidean coordinates.
pub fn box_dimension(points: &[ExtendedPoint], scale_min: f64, scale_max: f64) -> Result<DimensionEstimate> {
    let coords: Vec<&[f64]> = points
        .iter()
        .map(|p| p.coords().ok_or_else(|| Error::InvalidArgument("box counting needs finite points".into())))
        .collect::<Result<_>>()?;
    if let Some(first) = coords.first() {
        if coords.iter().all(|c| c == first) {
            return Ok(DimensionEstimate {
                value: 0.0,
                scales_used: Vec::new(),
                fit_r2: 1.0,
            });
        }
    }
    if coords.len() < 1000 {
        return Err(Error::InvalidArgument(format!("box counting needs at least 1000 points, got {}", coords.len())));
    }
    if !(scale_min > 0.0 && scale_min < scale_max) {
        return Err(Error::InvalidArgument("need 0 < scale_min < scale_max".into()));
    }
    let ratio = (scale_max / scale_min).powf(1.0 / (BOX_SCALES - 1) as f64);
    let scales_used: Vec<(f64, usize)> = (0..BOX_SCALES)
        .into_par_iter()
        .map(|j| {
            let s = scale_max / ratio.powi(j as i32);
            let boxes: HashSet<Vec<i64>> = coords.iter().map(|c| c.iter().map(|v| (v / s).floor() as i64).collect()).collect();
            (s, boxes.len())
        })
        .collect();
    let xy: Vec<(f64, f64)> = scales_used.iter().map(|&(s, n)| ((1.0 / s).ln(), (n as f64).ln())).collect();
    let (slope, r2) = least_squares(&xy);
    Ok(DimensionEstimate {
        value: slope.max(0.0),
        scales_used,
        fit_r2: r2,
    })
}

/// Box dimension with scales chosen from the cloud: from a quarter of the
/// diameter down to a few typical point spacings.
pub fn box_dimension_auto(points: &[ExtendedPoint]) -> Result<DimensionEstimate> {
    let coords: Vec<&[f64]> = points.iter().filter_map(|p| p.coords()).collect();
    let Some(first) = coords.first() else {
        return Err(Error::InvalidArgument("box counting needs finite points".into()));
    };
    let extent = (0..first.len())
        .map(|a| {
            let lo = coords.iter().map(|c| c[a]).fold(f64::INFINITY, f64::min);
            let hi = coords.iter().map(|c| c[a]).fold(f64::NEG_INFINITY, f64::max);
            hi - lo
        })
        .fold(0.0, f64::max);
    let scale_max = extent / 4.0;
    let scale_min = (2.0 * extent / (coords.len() as f64).sqrt()).max(scale_max / 64.0);
    box_dimension(points, scale_min, scale_max.max(2.0 * scale_min))
}

fn least_squares(xy: &[(f64, f64)]) -> (f64, f64) {
    let n = xy.len() as f64;
    let mx = xy.iter().map(|p| p.0).sum::<f64>() / n;
    let my = xy.iter().map(|p| p.1).sum::<f64>() / n;
    let sxy: f64 = xy.iter().map(|p| (p.0 - mx) * (p.1 - my)).sum();
    let sxx: f64 = xy.iter().map(|p| (p.0 - mx).powi(2)).sum();
    let syy: f64 = xy.iter().map(|p| (p.1 - my).powi(2)).sum();
    let slope = sxy / sxx;
    let r2 = if syy == 0.0 { 1.0 } else { sxy * sxy / (sxx * syy) };
    (slope, r2)
}

/// Finitely many weighted points with exact rational weights.
#[derive(Clone, Debug, PartialEq)]
pub struct AtomicMeasure {
    pub atoms: Vec<(ExtendedPoint, Weight)>,
}

/// Atoms closer than this (chordally) are identified.
pub const ATOM_MERGE_DISTANCE: f64 = 1e-9;

impl AtomicMeasure {
    /// Equal weights on the given points.
    pub fn uniform(points: &[ExtendedPoint]) -> Result<Self> {
        if points.is_empty() {
            return Err(Error::InvalidArgument("measure needs at least one atom".into()));
        }
        let w = Weight::new(1, points.len() as u64);
        Ok(Self {
            atoms: points.iter().map(|p| (*p, w)).collect(),
        })
    }

    pub fn total_mass(&self) -> Weight {
        self.atoms.iter().map(|(_, w)| *w).sum()
    }

    pub fn points(&self) -> Vec<ExtendedPoint> {
        self.atoms.iter().map(|(p, _)| *p).collect()
    }

    /// `f_*μ`, merging image atoms that coincide.
    pub fn pushforward(&self, map: &MapDescriptor) -> Self {
        let images: Vec<(ExtendedPoint, Weight)> = self.atoms.par_iter().map(|(p, w)| (map.eval(p), *w)).collect();
        Self::merged(images)
    }

    fn merged(atoms: Vec<(ExtendedPoint, Weight)>) -> Self {
        let points: Vec<ExtendedPoint> = atoms.iter().map(|a| a.0).collect();
        let index = ChordalIndex::new(&points);
        let mut owner: Vec<Option<usize>> = vec![None; atoms.len()];
        let mut out: Vec<(ExtendedPoint, Weight)> = Vec::new();
        for i in 0..atoms.len() {
            if owner[i].is_some() {
                continue;
            }
            let slot = out.len();
            let mut w = Weight::new(0, 1);
            for j in index.within(&atoms[i].0, ATOM_MERGE_DISTANCE) {
                if owner[j].is_none() {
                    owner[j] = Some(slot);
                    w += atoms[j].1;
                }
            }
            out.push((atoms[i].0, w));
        }
        Self { atoms: out }
    }

    /// Same atoms (up to [`ATOM_MERGE_DISTANCE`]) with identical weights.
    pub fn same_as(&self, other: &Self) -> bool {
        if self.atoms.len() != other.atoms.len() {
            return false;
        }
        let points = other.points();
        let index = ChordalIndex::new(&points);
        let mut used = vec![false; points.len()];
        for (p, w) in &self.atoms {
            let matched = index
                .within(p, ATOM_MERGE_DISTANCE)
                .into_iter()
                .find(|&j| !used[j] && other.atoms[j].1 == *w);
            match matched {
                Some(j) => used[j] = true,
                None => return false,
            }
        }
        true
    }

    /// Mass of the open Euclidean ball `B(x, r)`; for `x = ∞`, the chordal ball.
    pub fn mass_in_ball(&self, x: &ExtendedPoint, r: f64) -> f64 {
        let inside = |p: &ExtendedPoint| {
            if x.is_infinite() {
                p.chordal_to(x) < r
            } else {
                p.is_finite() && p.euclidean_to(x) < r
            }
        };
        self.atoms
            .iter()
            .filter(|(p, _)| inside(p))
            .map(|(_, w)| *w.numer() as f64 / *w.denom() as f64)
            .sum()
    }

    /// Largest distance between two atoms (Euclidean, finite atoms).
    pub fn diameter(&self) -> f64 {
        let pts: Vec<&ExtendedPoint> = self.atoms.iter().map(|a| &a.0).filter(|p| p.is_finite()).collect();
        pts.par_iter()
            .map(|p| pts.iter().map(|q| p.euclidean_to(q)).fold(0.0, f64::max))
            .reduce(|| 0.0, f64::max)
    }
}

/// `ν_k = deg(f)^{-k} Σ_{x ∈ f^{-k}(y)} i(x, f^k) δ_x` from the exact tree.
pub fn preimage_measure(map: &MapDescriptor, y: &ExtendedPoint, k: u32) -> Result<AtomicMeasure> {
    let tree = full_preimage_tree(map, y, k)?;
    let total = (map.degree() as u64).pow(k);
    Ok(AtomicMeasure {
        atoms: tree.leaves().iter().map(|n| (n.point, Weight::new(n.index, total))).collect(),
    })
}

/// `max μ(B(x, r)) / h(r)` over the given centers and radii.
pub fn mass_distribution_check(measure: &AtomicMeasure, gauge: &GaugeFunction, centers: &[ExtendedPoint], radii: &[f64]) -> Result<f64> {
    if let Some(r) = radii.iter().find(|&&r| !(r > 0.0 && r <= gauge.eta)) {
        return Err(Error::InvalidArgument(format!("radius {r} outside the gauge domain (0, {}]", gauge.eta)));
    }
    Ok(centers
        .par_iter()
        .map(|x| radii.iter().map(|&r| measure.mass_in_ball(x, r) / gauge.eval(r)).fold(0.0, f64::max))
        .reduce(|| 0.0, f64::max))
}

/// Outcome of [`separated_preimage_audit`].
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct PreimageAudit {
    /// Number of separated preimages found near the cloud for every cloud point.
    pub m: u32,
    /// Smallest chordal distance between those preimages.
    pub delta: f64,
    /// Largest chordal difference quotient of `f` over close cloud pairs.
    pub lipschitz: f64,
    /// `m ≥ 2`.
    pub hypothesis_met: bool,
    /// `log m / log L` when defined.
    pub dimension_bound: Option<f64>,
}

/// Cloud pairs closer than this enter the Lipschitz estimate.
pub const LIPSCHITZ_PAIR_DISTANCE: f64 = 0.01;

/// Checks, over every cloud point `y`, how many preimages of `y` lie near the
/// cloud and how far apart they are, and estimates the chordal Lipschitz
/// constant of `f` on the cloud.
pub fn separated_preimage_audit(map: &MapDescriptor, cloud: &JuliaCloud, m_target: u32) -> Result<PreimageAudit> {
    let pts = &cloud.points;
    if pts.is_empty() {
        return Err(Error::InvalidArgument("cloud is empty".into()));
    }
    let index = ChordalIndex::new(pts);
    // A few times the largest nearest-neighbour distance reaches across the
    // widest gaps of the cloud.
    let widest = index.nearest_neighbor_distances().into_iter().fold(0.0, f64::max);
    let tau = (3.0 * widest).max(1e-3);

    let per_point: Vec<(u32, f64)> = pts
        .par_iter()
        .map(|y| {
            let near: Vec<ExtendedPoint> = map
                .preimages(y)
                .points()
                .filter(|x| index.nearest(x).is_some_and(|(_, d)| d <= tau))
                .copied()
                .take(m_target as usize)
                .collect();
            let mut sep = f64::INFINITY;
            for i in 0..near.len() {
                for j in i + 1..near.len() {
                    sep = sep.min(near[i].chordal_to(&near[j]));
                }
            }
            (near.len() as u32, sep)
        })
        .collect();
    let m = per_point.iter().map(|p| p.0).min().unwrap_or(0);
    let delta = if m >= 2 {
        per_point.iter().map(|p| p.1).fold(f64::INFINITY, f64::min)
    } else {
        0.0
    };
    let images: Vec<ExtendedPoint> = pts.par_iter().map(|p| map.eval(p)).collect();
    let lipschitz = (0..pts.len())
        .into_par_iter()
        .map(|i| {
            index
                .within(&pts[i], LIPSCHITZ_PAIR_DISTANCE)
                .into_iter()
                .filter(|&j| j > i)
                .filter_map(|j| {
                    let d = pts[i].chordal_to(&pts[j]);
                    (d > 1e-12).then(|| images[i].chordal_to(&images[j]) / d)
                })
                .fold(0.0, f64::max)
        })
        .reduce(|| 0.0, f64::max);
    let hypothesis_met = m >= 2;
    Ok(PreimageAudit {
        m: m.max(1),
        delta,
        lipschitz,
        hypothesis_met,
        dimension_bound: if hypothesis_met { lipschitz_dim_bound(m, lipschitz).ok() } else { None },
    })
}

/// Outcome of [`capacity_gauge_check`].
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct GaugeCheck {
    pub gauge: GaugeFunction,
    /// `min_s N(s) h(√n s)` over box covers at scales above the atom spacing.
    pub upper_content: f64,
    /// `1 / max_ratio` from the mass distribution principle.
    pub lower_certificate: f64,
    pub max_ratio: f64,
}

/// Default domain of the capacity gauge.
pub const CAPACITY_GAUGE_ETA: f64 = 0.5;
const GAUGE_RADII: usize = 16;

/// Tests the gauge `(log 1/t)^{1−n−ε}` against a measure on a point set: an
/// upper Hausdorff content from box covers and a lower certificate from
/// `μ(B(x, r)) ≤ c h(r)` at the atoms.
pub fn capacity_gauge_check(measure: &AtomicMeasure, n: usize, epsilon: f64) -> Result<GaugeCheck> {
    if !(epsilon > 0.0) {
        return Err(Error::InvalidArgument(format!("epsilon must be positive, got {epsilon}")));
    }
    let gauge = GaugeFunction::log_power(1.0 - n as f64 - epsilon, 1.0, CAPACITY_GAUGE_ETA)?;
    let points = measure.points();
    let diameter = measure.diameter();
    if diameter == 0.0 {
        return Ok(GaugeCheck {
            gauge,
            upper_content: 0.0,
            lower_certificate: 0.0,
            max_ratio: f64::INFINITY,
        });
    }
    let mut nn = ChordalIndex::new(&points).nearest_neighbor_distances();
    nn.sort_by(f64::total_cmp);
    let spacing = nn[nn.len() / 2].max(1e-12);

    let mut upper_content = f64::INFINITY;
    let mut s = (diameter / 2.0).min(gauge.eta / (n as f64).sqrt());
    while s >= 2.0 * spacing {
        let boxes: HashSet<Vec<i64>> = points
            .iter()
            .filter_map(|p| p.coords())
            .map(|c| c.iter().map(|v| (v / s).floor() as i64).collect())
            .collect();
        upper_content = upper_content.min(boxes.len() as f64 * gauge.eval(s * (n as f64).sqrt()));
        s /= 2.0;
    }

    let r_max = gauge.eta;
    let radii: Vec<f64> = (0..GAUGE_RADII).map(|j| r_max * 0.5f64.powi(j as i32)).collect();
    let max_ratio = mass_distribution_check(measure, &gauge, &points, &radii)?;
    Ok(GaugeCheck {
        gauge,
        upper_content,
        lower_certificate: 1.0 / max_ratio,
        max_ratio,
    })
}

/// `ε` with `(1−n) log d / log K_I = 1 − n − ε`, positive when `d > K_I`.
pub fn capacity_gauge_epsilon(n: usize, degree: u32, inner_dilatation: f64) -> Result<f64> {
    if !(inner_dilatation > 1.0) {
        return Err(Error::InvalidArgument("the identity needs K_I > 1".into()));
    }
    Ok((n as f64 - 1.0) * ((degree as f64).ln() / inner_dilatation.ln() - 1.0))
}

/// The exponent `μ = (i / K_I)^{1/(n−1)}` of the Hölder estimate at a branch point.
pub fn holder_exponent(map: &MapDescriptor, x0: &ExtendedPoint) -> f64 {
    let i = map.local_index(x0) as f64;
    (i / map.inner_dilatation()).powf(1.0 / (map.dim() as f64 - 1.0))
}

/// `max |f(y) − f(x₀)| / |y − x₀|^μ` over samples of `B(x₀, r_max)`; at
/// `x₀ = ∞` the chordal metric replaces the Euclidean one.
///
/// Samples are drawn once in the unit ball and scaled by `r_max`, so runs at
/// different radii share their random numbers. Around `∞` a unit vector `w`
/// becomes the point at chordal distance `r_max |w|` in direction `w`.
///
/// The inner part `|w| < HOLDER_INNER_FRACTION` is left out: near `∞` its
/// images overflow to `∞` itself. A halving ladder of radii still reaches it.
pub fn holder_distortion_check(map: &MapDescriptor, x0: &ExtendedPoint, mu: f64, r_max: f64, samples: usize, seed: u64) -> Result<f64> {
    if map.local_index(x0) < 2 {
        return Err(Error::InvalidArgument(format!("{x0} is not a branch point of {}", map.label())));
    }
    if !(r_max > 0.0) || samples == 0 {
        return Err(Error::InvalidArgument("need r_max > 0 and at least one sample".into()));
    }
    let fx0 = map.eval(x0);
    let dim = map.dim();
    let worst = (0..samples)
        .into_par_iter()
        .map(|i| {
            let mut rng = rng_from_seed(derive_seed(seed, i as u64));
            let w: Vec<f64> = loop {
                let v: Vec<f64> = (0..dim).map(|_| rng.random::<f64>() * 2.0 - 1.0).collect();
                let r2: f64 = v.iter().map(|x| x * x).sum();
                if r2 >= HOLDER_INNER_FRACTION * HOLDER_INNER_FRACTION && r2 <= 1.0 {
                    break v;
                }
            };
            let len = w.iter().map(|x| x * x).sum::<f64>().sqrt();
            match x0.coords() {
                Some(c) => {
                    let y: Vec<f64> = c.iter().zip(&w).map(|(a, v)| a + r_max * v).collect();
                    let y = ExtendedPoint::finite(&y).expect("finite sample");
                    map.eval(&y).euclidean_to(&fx0) / y.euclidean_to(x0).powf(mu)
                }
                None => {
                    // χ(y, ∞) = 2 / √(1 + |y|²) = r_max |w|.
                    let chord = (r_max * len).min(2.0);
                    let norm = (4.0 / (chord * chord) - 1.0).max(0.0).sqrt();
                    let y: Vec<f64> = w.iter().map(|v| v / len * norm).collect();
                    let y = ExtendedPoint::finite(&y).expect("finite sample");
                    map.eval(&y).chordal_to(&fx0) / y.chordal_to(x0).powf(mu)
                }
            }
        })
        .reduce(|| 0.0, f64::max);
    Ok(worst)
}

/// `worst_B` over a radius ladder and the log-log slope against `r_max`.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct HolderStability {
    pub radii: Vec<f64>,
    pub worst: Vec<f64>,
    pub slope: f64,
}

/// Samples of the unit ball closer to the centre than this are skipped.
pub const HOLDER_INNER_FRACTION: f64 = 0.05;

/// Slopes below this mean `worst_B` blows up as the radius shrinks.
pub const HOLDER_SLOPE_THRESHOLD: f64 = -0.1;

impl HolderStability {
    pub fn stable(&self) -> bool {
        self.slope >= HOLDER_SLOPE_THRESHOLD
    }
}

pub fn holder_stability(map: &MapDescriptor, x0: &ExtendedPoint, mu: f64, radii: &[f64], samples: usize, seed: u64) -> Result<HolderStability> {
    if radii.len() < 2 {
        return Err(Error::InvalidArgument("need at least two radii".into()));
    }
    let worst: Vec<f64> = radii
        .iter()
        .map(|&r| holder_distortion_check(map, x0, mu, r, samples, seed))
        .collect::<Result<_>>()?;
    let xy: Vec<(f64, f64)> = radii.iter().zip(&worst).map(|(r, w)| (r.ln(), w.ln())).collect();
    Ok(HolderStability {
        radii: radii.to_vec(),
        slope: least_squares(&xy).0,
        worst,
    })
}
