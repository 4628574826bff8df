//! Points of the extended space `R̄ⁿ = Rⁿ ∪ {∞}` and its chordal geometry.
//!
//! `R̄ⁿ` is identified with the unit sphere `Sⁿ(1) ⊂ R^{n+1}` by stereographic
//! projection from the north pole: `0` lifts to the south pole, `∞` to the
//! north pole and the unit sphere of `Rⁿ` to the equator. The chordal metric
//! is the Euclidean distance between lifts,
//!
//! ```text
//! χ(x, y) = 2|x − y| / (√(1 + |x|²) √(1 + |y|²)),   χ(x, ∞) = 2 / √(1 + |x|²).
//! ```
//!
//! Distances are computed from the closed form; the explicit lift is kept for
//! sampling and for the equal-area cell grids used by the expansion test.

use std::f64::consts::PI;
use std::fmt;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use serde::ser::{Serialize, SerializeSeq, Serializer};

use crate::error::{Error, Result};

/// Largest ambient dimension supported by the fixed-size point storage.
pub const MAX_DIM: usize = 4;

/// Finite points whose norm exceeds this are identified with `∞`.
pub const INFINITY_NORM: f64 = 1e12;

/// A point of `R̄ⁿ`: either finite coordinates or the point at infinity.
#[derive(Clone, Copy, PartialEq)]
pub struct ExtendedPoint {
    dim: u8,
    infinite: bool,
    coords: [f64; MAX_DIM],
}

impl ExtendedPoint {
    /// A finite point. Coordinates of norm above [`INFINITY_NORM`] collapse to `∞`.
    pub fn finite(coords: &[f64]) -> Result<Self> {
        let dim = coords.len();
        if !(2..=MAX_DIM).contains(&dim) {
            return Err(Error::UnsupportedDimension(dim));
        }
        if coords.iter().any(|c| !c.is_finite()) {
            return Err(Error::NonFiniteCoordinate);
        }
        let mut buf = [0.0; MAX_DIM];
        buf[..dim].copy_from_slice(coords);
        Ok(Self::from_array(dim, buf))
    }

    pub fn infinity(dim: usize) -> Self {
        assert!((2..=MAX_DIM).contains(&dim), "unsupported dimension {dim}");
        Self {
            dim: dim as u8,
            infinite: true,
            coords: [0.0; MAX_DIM],
        }
    }

    pub fn origin(dim: usize) -> Self {
        assert!((2..=MAX_DIM).contains(&dim), "unsupported dimension {dim}");
        Self {
            dim: dim as u8,
            infinite: false,
            coords: [0.0; MAX_DIM],
        }
    }

    /// A planar point from a complex number.
    pub fn from_complex(z: num_complex::Complex64) -> Self {
        Self::from_array(2, [z.re, z.im, 0.0, 0.0])
    }

    /// Internal constructor: normalises overflow and non-finite values to `∞`.
    pub(crate) fn from_array(dim: usize, coords: [f64; MAX_DIM]) -> Self {
        let norm_sq: f64 = coords[..dim].iter().map(|c| c * c).sum();
        if !norm_sq.is_finite() || norm_sq > INFINITY_NORM * INFINITY_NORM {
            Self::infinity(dim)
        } else {
            Self {
                dim: dim as u8,
                infinite: false,
                coords,
            }
        }
    }

    pub fn dim(&self) -> usize {
        self.dim as usize
    }

    pub fn is_infinite(&self) -> bool {
        self.infinite
    }

    pub fn is_finite(&self) -> bool {
        !self.infinite
    }

    /// Coordinates of a finite point, `None` for `∞`.
    pub fn coords(&self) -> Option<&[f64]> {
        (!self.infinite).then(|| &self.coords[..self.dim()])
    }

    pub(crate) fn raw(&self) -> &[f64; MAX_DIM] {
        &self.coords
    }

    /// Euclidean norm; `f64::INFINITY` for the point at infinity.
    pub fn norm(&self) -> f64 {
        if self.infinite {
            f64::INFINITY
        } else {
            self.norm_sq().sqrt()
        }
    }

    fn norm_sq(&self) -> f64 {
        self.coords[..self.dim()].iter().map(|c| c * c).sum()
    }

    /// The planar point as a complex number (`None` for `∞` or `n ≠ 2`).
    pub fn to_complex(&self) -> Option<num_complex::Complex64> {
        (self.dim == 2 && !self.infinite)
            .then(|| num_complex::Complex64::new(self.coords[0], self.coords[1]))
    }

    /// Euclidean distance between finite points (`∞` if either is infinite).
    pub fn euclidean_to(&self, other: &Self) -> f64 {
        debug_assert_eq!(self.dim, other.dim);
        if self.infinite || other.infinite {
            return if self.infinite && other.infinite {
                0.0
            } else {
                f64::INFINITY
            };
        }
        (0..self.dim())
            .map(|i| (self.coords[i] - other.coords[i]).powi(2))
            .sum::<f64>()
            .sqrt()
    }

    /// Chordal distance to a point of the same dimension.
    pub fn chordal_to(&self, other: &Self) -> f64 {
        debug_assert_eq!(self.dim, other.dim);
        match (self.infinite, other.infinite) {
            (true, true) => 0.0,
            (true, false) => 2.0 / (1.0 + other.norm_sq()).sqrt(),
            (false, true) => 2.0 / (1.0 + self.norm_sq()).sqrt(),
            (false, false) => {
                let diff: f64 = (0..self.dim())
                    .map(|i| (self.coords[i] - other.coords[i]).powi(2))
                    .sum::<f64>()
                    .sqrt();
                let d = 2.0 * diff / ((1.0 + self.norm_sq()).sqrt() * (1.0 + other.norm_sq()).sqrt());
                d.min(2.0)
            }
        }
    }

    pub fn lift(&self) -> SpherePoint {
        stereographic_lift(self)
    }
}

impl fmt::Debug for ExtendedPoint {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        fmt::Display::fmt(self, f)
    }
}

impl fmt::Display for ExtendedPoint {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self.coords() {
            None => write!(f, "∞"),
            Some(c) => {
                write!(f, "(")?;
                for (i, x) in c.iter().enumerate() {
                    if i > 0 {
                        write!(f, ", ")?;
                    }
                    write!(f, "{x}")?;
                }
                write!(f, ")")
            }
        }
    }
}

/// Finite points serialise as coordinate arrays, `∞` as the string `"inf"`.
impl Serialize for ExtendedPoint {
    fn serialize<S: Serializer>(&self, serializer: S) -> std::result::Result<S::Ok, S::Error> {
        match self.coords() {
            None => serializer.serialize_str("inf"),
            Some(c) => {
                let mut seq = serializer.serialize_seq(Some(c.len()))?;
                for x in c {
                    seq.serialize_element(x)?;
                }
                seq.end()
            }
        }
    }
}

/// A point of the unit sphere `Sⁿ(1) ⊂ R^{n+1}`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct SpherePoint {
    dim: u8,
    coords: [f64; MAX_DIM + 1],
}

impl SpherePoint {
    /// Normalises `coords` (length `n + 1`) onto the sphere.
    pub fn from_ambient(coords: &[f64]) -> Result<Self> {
        let len = coords.len();
        if !(3..=MAX_DIM + 1).contains(&len) {
            return Err(Error::UnsupportedDimension(len.saturating_sub(1)));
        }
        let norm = coords.iter().map(|c| c * c).sum::<f64>().sqrt();
        if !norm.is_finite() || norm == 0.0 {
            return Err(Error::NonFiniteCoordinate);
        }
        let mut buf = [0.0; MAX_DIM + 1];
        for (b, c) in buf.iter_mut().zip(coords) {
            *b = c / norm;
        }
        Ok(Self {
            dim: (len - 1) as u8,
            coords: buf,
        })
    }

    pub(crate) fn from_unit_array(dim: usize, coords: [f64; MAX_DIM + 1]) -> Self {
        Self {
            dim: dim as u8,
            coords,
        }
    }

    /// Dimension `n` of the sphere (the ambient space is `R^{n+1}`).
    pub fn dim(&self) -> usize {
        self.dim as usize
    }

    pub fn coords(&self) -> &[f64] {
        &self.coords[..=self.dim()]
    }

    pub fn north_pole(dim: usize) -> Self {
        let mut c = [0.0; MAX_DIM + 1];
        c[dim] = 1.0;
        Self::from_unit_array(dim, c)
    }

    pub fn distance(&self, other: &Self) -> f64 {
        self.coords()
            .iter()
            .zip(other.coords())
            .map(|(a, b)| (a - b).powi(2))
            .sum::<f64>()
            .sqrt()
    }

    /// Inverse stereographic projection back to `R̄ⁿ`.
    pub fn unlift(&self) -> ExtendedPoint {
        let n = self.dim();
        let t = self.coords[n];
        let horiz_sq: f64 = self.coords[..n].iter().map(|c| c * c).sum();
        if horiz_sq == 0.0 && t > 0.0 {
            return ExtendedPoint::infinity(n);
        }
        // x = ξ' / (1 − t); for t > 0 use 1 − t = |ξ'|² / (1 + t) to avoid cancellation.
        let scale = if t > 0.0 {
            (1.0 + t) / horiz_sq
        } else {
            1.0 / (1.0 - t)
        };
        let mut out = [0.0; MAX_DIM];
        for i in 0..n {
            out[i] = self.coords[i] * scale;
        }
        ExtendedPoint::from_array(n, out)
    }
}

/// Chordal distance `χ(x, y) = |π⁻¹(x) − π⁻¹(y)|`, evaluated in closed form.
pub fn chordal_distance(x: &ExtendedPoint, y: &ExtendedPoint) -> Result<f64> {
    if x.dim() != y.dim() {
        return Err(Error::DimensionMismatch {
            left: x.dim(),
            right: y.dim(),
        });
    }
    Ok(x.chordal_to(y))
}

/// Stereographic lift `π⁻¹(x)`; `∞` goes to the north pole.
pub fn stereographic_lift(x: &ExtendedPoint) -> SpherePoint {
    let n = x.dim();
    let mut c = [0.0; MAX_DIM + 1];
    match x.coords() {
        None => c[n] = 1.0,
        Some(xs) => {
            let r2: f64 = xs.iter().map(|v| v * v).sum();
            let denom = 1.0 + r2;
            for i in 0..n {
                c[i] = 2.0 * xs[i] / denom;
            }
            c[n] = (r2 - 1.0) / denom;
        }
    }
    SpherePoint::from_unit_array(n, c)
}

/// Seeded generator used throughout the crate.
pub type LabRng = ChaCha8Rng;

/// SplitMix64 mixing of a base seed with a stream index, so that parallel
/// workers get independent, schedule-independent streams.
pub fn derive_seed(base: u64, stream: u64) -> u64 {
    let mut z = base ^ stream.wrapping_mul(0x9E37_79B9_7F4A_7C15);
    z = z.wrapping_add(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

pub fn rng_from_seed(seed: u64) -> LabRng {
    LabRng::seed_from_u64(seed)
}

/// Uniform point on `Sⁿ(1)` from a normalised standard Gaussian vector.
pub fn random_sphere_point<R: Rng + ?Sized>(n: usize, rng: &mut R) -> SpherePoint {
    loop {
        let mut c = [0.0; MAX_DIM + 1];
        let mut norm_sq: f64 = 0.0;
        for v in c.iter_mut().take(n + 1) {
            *v = rng.sample(StandardNormal);
            norm_sq += *v * *v;
        }
        if norm_sq > 1e-24 {
            let norm = norm_sq.sqrt();
            for v in c.iter_mut().take(n + 1) {
                *v /= norm;
            }
            return SpherePoint::from_unit_array(n, c);
        }
    }
}

/// `count` independent points of `R̄ⁿ` distributed by the normalised
/// `Hⁿ`-measure of `Sⁿ(1)`; deterministic for a fixed seed.
pub fn sample_chordal_uniform(n: usize, count: usize, rng_seed: u64) -> Result<Vec<ExtendedPoint>> {
    if !(2..=MAX_DIM).contains(&n) {
        return Err(Error::UnsupportedDimension(n));
    }
    if count == 0 {
        return Err(Error::InvalidArgument("count must be at least 1".into()));
    }
    let mut rng = rng_from_seed(rng_seed);
    Ok((0..count)
        .map(|_| random_sphere_point(n, &mut rng).unlift())
        .collect())
}

/// A random unit tangent vector of the sphere at `center`.
fn random_tangent<R: Rng + ?Sized>(center: &SpherePoint, rng: &mut R) -> [f64; MAX_DIM + 1] {
    let m = center.dim() + 1;
    loop {
        let mut v = [0.0; MAX_DIM + 1];
        for x in v.iter_mut().take(m) {
            *x = rng.sample(StandardNormal);
        }
        let dot: f64 = (0..m).map(|i| v[i] * center.coords[i]).sum();
        for i in 0..m {
            v[i] -= dot * center.coords[i];
        }
        let norm = (0..m).map(|i| v[i] * v[i]).sum::<f64>().sqrt();
        if norm > 1e-9 {
            for x in v.iter_mut().take(m) {
                *x /= norm;
            }
            return v;
        }
    }
}

/// Point of the sphere at geodesic angle `angle` from `center` along `tangent`.
fn along_geodesic(center: &SpherePoint, tangent: &[f64; MAX_DIM + 1], angle: f64) -> SpherePoint {
    let m = center.dim() + 1;
    let (s, c) = angle.sin_cos();
    let mut out = [0.0; MAX_DIM + 1];
    for i in 0..m {
        out[i] = c * center.coords[i] + s * tangent[i];
    }
    let norm = (0..m).map(|i| out[i] * out[i]).sum::<f64>().sqrt();
    for x in out.iter_mut().take(m) {
        *x /= norm;
    }
    SpherePoint::from_unit_array(center.dim(), out)
}

/// A random point at chordal distance exactly `chord` (< 2) from `center`.
pub fn random_point_at_chord<R: Rng + ?Sized>(center: &ExtendedPoint, chord: f64, rng: &mut R) -> ExtendedPoint {
    let c = center.lift();
    let angle = 2.0 * (chord / 2.0).clamp(0.0, 1.0).asin();
    let t = random_tangent(&c, rng);
    along_geodesic(&c, &t, angle).unlift()
}

/// A point uniformly distributed (for the sphere measure) in the chordal
/// ball `B_χ(center, chord)`.
pub fn random_point_in_chordal_ball<R: Rng + ?Sized>(center: &ExtendedPoint, chord: f64, rng: &mut R) -> ExtendedPoint {
    let c = center.lift();
    let n = c.dim() as i32;
    let max_angle = 2.0 * (chord / 2.0).clamp(0.0, 1.0).asin();
    // Proposal density ∝ θ^{n-1}; accept with (sin θ / θ)^{n-1} to get ∝ sin^{n-1} θ.
    let angle = loop {
        let u: f64 = rng.random();
        let theta = max_angle * u.powf(1.0 / n as f64);
        let accept = if theta < 1e-12 {
            1.0
        } else {
            (theta.sin() / theta).powi(n - 1)
        };
        if rng.random::<f64>() <= accept {
            break theta;
        }
    };
    let t = random_tangent(&c, rng);
    along_geodesic(&c, &t, angle).unlift()
}

/// Equal-area cells on `Sⁿ(1)` for `n ∈ {2, 3}`.
///
/// * `n = 2`: `M` bands uniform in the height coordinate (Archimedes) times
///   `2M` longitude sectors.
/// * `n = 3`: with `ξ = (cos η e^{iφ₁}, sin η e^{iφ₂})`, the volume element is
///   uniform in `(sin²η, φ₁, φ₂)`; `M × 2M × 2M` cells.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct SphereGrid {
    dim: usize,
    resolution: usize,
}

impl SphereGrid {
    pub fn new(dim: usize, resolution: usize) -> Result<Self> {
        if !(2..=3).contains(&dim) {
            return Err(Error::UnsupportedDimension(dim));
        }
        if resolution < 2 {
            return Err(Error::InvalidArgument("sphere grid resolution must be at least 2".into()));
        }
        Ok(Self { dim, resolution })
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn resolution(&self) -> usize {
        self.resolution
    }

    pub fn cell_count(&self) -> usize {
        let m = self.resolution;
        match self.dim {
            2 => 2 * m * m,
            _ => 4 * m * m * m,
        }
    }

    fn bin(value: f64, lo: f64, hi: f64, bins: usize) -> usize {
        let t = ((value - lo) / (hi - lo) * bins as f64).floor();
        (t.max(0.0) as usize).min(bins - 1)
    }

    pub fn cell_of(&self, p: &SpherePoint) -> usize {
        let m = self.resolution;
        let c = p.coords();
        match self.dim {
            2 => {
                let band = Self::bin(c[2], -1.0, 1.0, m);
                let sector = Self::bin(c[1].atan2(c[0]), -PI, PI, 2 * m);
                band * 2 * m + sector
            }
            _ => {
                let s = c[2] * c[2] + c[3] * c[3];
                let a = Self::bin(s, 0.0, 1.0, m);
                let b = Self::bin(c[1].atan2(c[0]), -PI, PI, 2 * m);
                let d = Self::bin(c[3].atan2(c[2]), -PI, PI, 2 * m);
                (a * 2 * m + b) * 2 * m + d
            }
        }
    }

    pub fn cell_of_point(&self, x: &ExtendedPoint) -> usize {
        self.cell_of(&x.lift())
    }

    /// Representative point (parameter midpoint) of a cell.
    pub fn cell_center(&self, idx: usize) -> SpherePoint {
        let m = self.resolution;
        let mid = |i: usize, lo: f64, hi: f64, bins: usize| lo + (hi - lo) * (i as f64 + 0.5) / bins as f64;
        match self.dim {
            2 => {
                let band = idx / (2 * m);
                let sector = idx % (2 * m);
                let h = mid(band, -1.0, 1.0, m);
                let phi = mid(sector, -PI, PI, 2 * m);
                let r = (1.0 - h * h).max(0.0).sqrt();
                SpherePoint::from_unit_array(2, [r * phi.cos(), r * phi.sin(), h, 0.0, 0.0])
            }
            _ => {
                let d = idx % (2 * m);
                let b = (idx / (2 * m)) % (2 * m);
                let a = idx / (4 * m * m);
                let s = mid(a, 0.0, 1.0, m);
                let p1 = mid(b, -PI, PI, 2 * m);
                let p2 = mid(d, -PI, PI, 2 * m);
                let (cs, ss) = ((1.0 - s).sqrt(), s.sqrt());
                SpherePoint::from_unit_array(
                    3,
                    [cs * p1.cos(), cs * p1.sin(), ss * p2.cos(), ss * p2.sin(), 0.0],
                )
            }
        }
    }
}

/// `ω_{n−1} = H^{n−1}(S^{n−1}(1))`, the surface area of the unit sphere in `Rⁿ`.
pub fn unit_sphere_area(n: usize) -> f64 {
    // ω_{n-1} = 2 π^{n/2} / Γ(n/2), via the recursion ω_{n+1} = 2π/(n) ω_{n-1}.
    match n {
        0 => 0.0,
        1 => 2.0,
        2 => 2.0 * PI,
        _ => 2.0 * PI / (n as f64 - 2.0) * unit_sphere_area(n - 2),
    }
}
