//! Catalog of explicit quasiregular self-maps of `R̄ⁿ`.
//!
//! Every family has a closed-form evaluation, exact branch-by-branch
//! preimages with integer local indices, and catalog values for the degree
//! and the inner/outer dilatations. Planar maps act on `C ≅ R²`.
//!
//! | family            | map                                  | deg | `K_I` | `K_O` |
//! |-------------------|--------------------------------------|-----|-------|-------|
//! | `Power(d)`        | `z ↦ z^d`                            | d   | 1     | 1     |
//! | `Quadratic(c)`    | `z ↦ z² + c`                         | 2   | 1     | 1     |
//! | `StretchPower(d,K)` | `z ↦ σ_K(z^d)`, `σ_K(x+iy) = Kx+iy` | d   | K     | K     |
//! | `Winding(k, 2)`   | `(r, θ) ↦ (r, kθ)`                   | k   | k     | k     |
//! | `Winding(k, 3)`   | `(r, θ, x₃) ↦ (r, kθ, x₃)`           | k   | k     | k²    |

use std::f64::consts::PI;

use nalgebra::DMatrix;
use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::space::{ExtendedPoint, MAX_DIM};

/// Default central-difference step for derivative estimates.
pub const DEFAULT_STEP: f64 = 1e-5;

fn default_winding_dim() -> usize {
    2
}

/// The parameters of a catalog family. Deserialises from objects such as
/// `{"family": "stretch_power", "d": 3, "K": 2.0}`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "family", rename_all = "snake_case", deny_unknown_fields)]
pub enum MapFamily {
    #[serde(alias = "power_map")]
    Power { d: u32 },
    /// `z² + c` with `c = [re, im]`.
    Quadratic { c: [f64; 2] },
    StretchPower {
        d: u32,
        #[serde(rename = "K")]
        k: f64,
    },
    Winding {
        k: u32,
        #[serde(default = "default_winding_dim")]
        n: usize,
    },
    #[serde(rename = "winding3d", alias = "winding_3d")]
    Winding3d { k: u32 },
}

/// Where the map fails to be locally injective.
#[derive(Clone, Debug, PartialEq)]
pub enum BranchSet {
    /// Finitely many branch points with their local indices.
    Points(Vec<(ExtendedPoint, u32)>),
    /// The whole `x₃`-axis together with `∞`, every point of index `index`.
    AxisAndInfinity { index: u32 },
}

impl BranchSet {
    /// Local index `i(x, f)` (1 off the branch set).
    pub fn local_index(&self, x: &ExtendedPoint) -> u32 {
        match self {
            BranchSet::Points(pts) => pts
                .iter()
                .find(|(p, _)| p == x)
                .map(|(_, i)| *i)
                .unwrap_or(1),
            BranchSet::AxisAndInfinity { index } => match x.coords() {
                None => *index,
                Some(c) if c[0] == 0.0 && c[1] == 0.0 => *index,
                Some(_) => 1,
            },
        }
    }

    /// Euclidean distance from a finite point to the finite part of the branch set.
    pub fn distance(&self, x: &ExtendedPoint) -> f64 {
        match self {
            BranchSet::Points(pts) => pts
                .iter()
                .filter(|(p, _)| p.is_finite())
                .map(|(p, _)| x.euclidean_to(p))
                .fold(f64::INFINITY, f64::min),
            BranchSet::AxisAndInfinity { .. } => match x.coords() {
                None => 0.0,
                Some(c) => c[0].hypot(c[1]),
            },
        }
    }

    /// Representative branch points: the listed points, or the origin and `∞`
    /// for the axis.
    pub fn representatives(&self, dim: usize) -> Vec<(ExtendedPoint, u32)> {
        match self {
            BranchSet::Points(pts) => pts.clone(),
            BranchSet::AxisAndInfinity { index } => vec![
                (ExtendedPoint::origin(dim), *index),
                (ExtendedPoint::infinity(dim), *index),
            ],
        }
    }
}

/// A validated catalog map with its analytic data.
#[derive(Clone, Debug, PartialEq)]
pub struct MapDescriptor {
    family: MapFamily,
    dim: usize,
    degree: u32,
    inner_dilatation: f64,
    outer_dilatation: f64,
    branch: BranchSet,
    polynomial_type: bool,
}

impl MapDescriptor {
    pub fn new(family: MapFamily) -> Result<Self> {
        let invalid = |msg: String| Err(Error::InvalidMap(msg));
        let inf2 = ExtendedPoint::infinity(2);
        let zero2 = ExtendedPoint::origin(2);
        let (dim, degree, k_i, k_o, branch) = match family {
            MapFamily::Power { d } => {
                if d < 2 {
                    return invalid(format!("power map needs d >= 2, got {d}"));
                }
                (2, d, 1.0, 1.0, BranchSet::Points(vec![(zero2, d), (inf2, d)]))
            }
            MapFamily::Quadratic { c } => {
                if !c.iter().all(|v| v.is_finite()) {
                    return invalid("quadratic parameter must be finite".into());
                }
                (2, 2, 1.0, 1.0, BranchSet::Points(vec![(zero2, 2), (inf2, 2)]))
            }
            MapFamily::StretchPower { d, k } => {
                if !(k.is_finite() && k >= 1.0) {
                    return invalid(format!("stretch factor must be >= 1, got {k}"));
                }
                if d < 2 || (d as f64) <= k {
                    return invalid(format!("stretch power needs d > K (d = {d}, K = {k})"));
                }
                (2, d, k, k, BranchSet::Points(vec![(zero2, d), (inf2, d)]))
            }
            MapFamily::Winding { k, n } => {
                if k < 2 {
                    return invalid(format!("winding map needs k >= 2, got {k}"));
                }
                match n {
                    2 => (2, k, k as f64, k as f64, BranchSet::Points(vec![(zero2, k), (inf2, k)])),
                    3 => (3, k, k as f64, (k * k) as f64, BranchSet::AxisAndInfinity { index: k }),
                    _ => return invalid(format!("winding map supports n = 2 or 3, got {n}")),
                }
            }
            MapFamily::Winding3d { k } => {
                return Self::new(MapFamily::Winding { k, n: 3 }).map(|mut m| {
                    m.family = family;
                    m
                })
            }
        };
        Ok(Self {
            family,
            dim,
            degree,
            inner_dilatation: k_i,
            outer_dilatation: k_o,
            branch,
            polynomial_type: true,
        })
    }

    pub fn power(d: u32) -> Result<Self> {
        Self::new(MapFamily::Power { d })
    }

    pub fn quadratic(re: f64, im: f64) -> Result<Self> {
        Self::new(MapFamily::Quadratic { c: [re, im] })
    }

    pub fn stretch_power(d: u32, k: f64) -> Result<Self> {
        Self::new(MapFamily::StretchPower { d, k })
    }

    pub fn winding(k: u32) -> Result<Self> {
        Self::new(MapFamily::Winding { k, n: 2 })
    }

    pub fn winding3d(k: u32) -> Result<Self> {
        Self::new(MapFamily::Winding3d { k })
    }

    pub fn family(&self) -> MapFamily {
        self.family
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn degree(&self) -> u32 {
        self.degree
    }

    /// Catalog value of `K_I(f)`.
    pub fn inner_dilatation(&self) -> f64 {
        self.inner_dilatation
    }

    /// Catalog value of `K_O(f)`.
    pub fn outer_dilatation(&self) -> f64 {
        self.outer_dilatation
    }

    pub fn branch_set(&self) -> &BranchSet {
        &self.branch
    }

    /// `f(x) → ∞` as `x → ∞` (every catalog map fixes `∞`).
    pub fn polynomial_type(&self) -> bool {
        self.polynomial_type
    }

    /// Whether `deg(f) > K_I(f)`, the standing hypothesis of the theory.
    pub fn degree_exceeds_inner_dilatation(&self) -> bool {
        self.degree as f64 > self.inner_dilatation
    }

    pub fn local_index(&self, x: &ExtendedPoint) -> u32 {
        self.branch.local_index(x)
    }

    /// A short human-readable name, e.g. `StretchPower(3, 2)`.
    pub fn label(&self) -> String {
        match self.family {
            MapFamily::Power { d } => format!("PowerMap({d})"),
            MapFamily::Quadratic { c } => {
                if c[1] == 0.0 {
                    format!("Quadratic({})", c[0])
                } else {
                    format!("Quadratic({}{:+}i)", c[0], c[1])
                }
            }
            MapFamily::StretchPower { d, k } => format!("StretchPower({d}, {k})"),
            MapFamily::Winding { k, n } => format!("Winding({k}, {n})"),
            MapFamily::Winding3d { k } => format!("Winding3D({k})"),
        }
    }

    /// Evaluates `f(x)` in closed form.
    pub fn eval(&self, x: &ExtendedPoint) -> ExtendedPoint {
        debug_assert_eq!(x.dim(), self.dim);
        if x.is_infinite() {
            return *x;
        }
        match self.family {
            MapFamily::Power { d } => ExtendedPoint::from_complex(zpow(complex(x), d)),
            MapFamily::Quadratic { c } => {
                let z = complex(x);
                ExtendedPoint::from_complex(z * z + Complex64::new(c[0], c[1]))
            }
            MapFamily::StretchPower { d, k } => {
                let w = zpow(complex(x), d);
                ExtendedPoint::from_complex(Complex64::new(k * w.re, w.im))
            }
            MapFamily::Winding { k, .. } | MapFamily::Winding3d { k } => {
                let c = x.raw();
                let r = c[0].hypot(c[1]);
                let theta = c[1].atan2(c[0]) * k as f64;
                let mut out = *c;
                out[0] = r * theta.cos();
                out[1] = r * theta.sin();
                ExtendedPoint::from_array(self.dim, out)
            }
        }
    }

    /// `f^k(x)`.
    pub fn eval_iterate(&self, x: &ExtendedPoint, k: u32) -> ExtendedPoint {
        (0..k).fold(*x, |p, _| self.eval(&p))
    }

    /// The full preimage `f⁻¹(y)` with local indices, from exact branch formulas.
    pub fn preimages(&self, y: &ExtendedPoint) -> PreimageSet {
        debug_assert_eq!(y.dim(), self.dim);
        let mut entries = Vec::with_capacity(self.degree as usize);
        if y.is_infinite() {
            entries.push((*y, self.degree));
            return PreimageSet { entries };
        }
        match self.family {
            MapFamily::Power { d } => roots_of(complex(y), d, &mut entries),
            MapFamily::Quadratic { c } => {
                let shift = Complex64::new(c[0], c[1]);
                let mut w = complex(y) - shift;
                // Cancellation leaves a few ulps where the branch value `c` was meant.
                if w.norm() <= 8.0 * f64::EPSILON * (complex(y).norm() + shift.norm()) {
                    w = Complex64::new(0.0, 0.0);
                }
                roots_of(w, 2, &mut entries)
            }
            MapFamily::StretchPower { d, k } => {
                let w = complex(y);
                roots_of(Complex64::new(w.re / k, w.im), d, &mut entries)
            }
            MapFamily::Winding { k, .. } | MapFamily::Winding3d { k } => {
                let c = y.raw();
                let r = c[0].hypot(c[1]);
                if r == 0.0 {
                    entries.push((*y, k));
                } else {
                    let theta = c[1].atan2(c[0]);
                    for j in 0..k {
                        let phi = (theta + 2.0 * PI * j as f64) / k as f64;
                        let mut out = *c;
                        out[0] = r * phi.cos();
                        out[1] = r * phi.sin();
                        entries.push((ExtendedPoint::from_array(self.dim, out), 1));
                    }
                }
            }
        }
        PreimageSet { entries }
    }
}

fn complex(x: &ExtendedPoint) -> Complex64 {
    let c = x.raw();
    Complex64::new(c[0], c[1])
}

fn zpow(z: Complex64, d: u32) -> Complex64 {
    let mut acc = Complex64::new(1.0, 0.0);
    let mut base = z;
    let mut e = d;
    while e > 0 {
        if e & 1 == 1 {
            acc *= base;
        }
        base *= base;
        e >>= 1;
    }
    acc
}

/// Pushes the `d` roots of `u^d = w`; `w = 0` is the branch point of index `d`.
fn roots_of(w: Complex64, d: u32, out: &mut Vec<(ExtendedPoint, u32)>) {
    if w.re == 0.0 && w.im == 0.0 {
        out.push((ExtendedPoint::origin(2), d));
        return;
    }
    let (r, theta) = w.to_polar();
    let rho = r.powf(1.0 / d as f64);
    for j in 0..d {
        let phi = (theta + 2.0 * PI * j as f64) / d as f64;
        let (s, c) = phi.sin_cos();
        // Drop the ulp residue of sin/cos at multiples of π/2.
        let clean = |v: f64| if v.abs() < 4.0 * f64::EPSILON { 0.0 } else { v };
        out.push((ExtendedPoint::from_complex(Complex64::new(rho * clean(c), rho * clean(s))), 1));
    }
}

/// `f⁻¹(y)` counted with local indices.
#[derive(Clone, Debug, PartialEq)]
pub struct PreimageSet {
    pub entries: Vec<(ExtendedPoint, u32)>,
}

impl PreimageSet {
    /// Sum of the local indices; equals `deg(f)` for every `y`.
    pub fn multiplicity(&self) -> u32 {
        self.entries.iter().map(|(_, i)| i).sum()
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    pub fn points(&self) -> impl Iterator<Item = &ExtendedPoint> {
        self.entries.iter().map(|(p, _)| p)
    }
}

/// Finite-difference dilatation estimate at a point.
#[derive(Clone, Debug, PartialEq)]
pub struct DilatationEstimate {
    pub outer: f64,
    pub inner: f64,
    pub jacobian: f64,
    /// Singular values of `Df(x)`, largest first.
    pub singular_values: Vec<f64>,
}

impl DilatationEstimate {
    /// `|Df(x)|`.
    pub fn norm(&self) -> f64 {
        self.singular_values[0]
    }

    /// `ℓ(Df(x))`.
    pub fn min_stretch(&self) -> f64 {
        *self.singular_values.last().unwrap()
    }

    /// `K_O = |Df|ⁿ / J` and `K_I = J / ℓ(Df)ⁿ` from a derivative matrix.
    pub fn from_matrix(m: &DMatrix<f64>) -> Self {
        let n = m.nrows();
        let mut sv: Vec<f64> = m.clone().svd(false, false).singular_values.iter().copied().collect();
        sv.sort_by(|a, b| b.total_cmp(a));
        let jacobian = m.determinant();
        let j = jacobian.abs();
        let outer = sv[0].powi(n as i32) / j;
        let inner = j / sv[n - 1].powi(n as i32);
        Self {
            outer,
            inner,
            jacobian,
            singular_values: sv,
        }
    }
}

/// Central-difference derivative matrix of `g` at the finite point `x`.
pub(crate) fn derivative_matrix<F>(g: F, x: &ExtendedPoint, step: f64) -> Result<DMatrix<f64>>
where
    F: Fn(&ExtendedPoint) -> ExtendedPoint,
{
    let n = x.dim();
    let base = x
        .coords()
        .ok_or_else(|| Error::InvalidArgument("derivative requested at ∞".into()))?;
    let mut m = DMatrix::zeros(n, n);
    for j in 0..n {
        let mut plus = [0.0; MAX_DIM];
        plus[..n].copy_from_slice(base);
        let mut minus = plus;
        plus[j] += step;
        minus[j] -= step;
        let fp = g(&ExtendedPoint::from_array(n, plus));
        let fm = g(&ExtendedPoint::from_array(n, minus));
        let (Some(a), Some(b)) = (fp.coords(), fm.coords()) else {
            return Err(Error::InvalidArgument("difference stencil reaches ∞".into()));
        };
        for i in 0..n {
            m[(i, j)] = (a[i] - b[i]) / (2.0 * step);
        }
    }
    Ok(m)
}

fn check_branch_clearance(map: &MapDescriptor, x: &ExtendedPoint, step: f64) -> Result<()> {
    let dist = map.branch.distance(x);
    let required = 10.0 * step;
    if x.is_infinite() || dist < required {
        return Err(Error::NearBranchSet {
            point: x.to_string(),
            distance: dist,
            required,
        });
    }
    Ok(())
}

/// Dilatation estimate at `x` from the central-difference derivative and its SVD.
pub fn numeric_dilatation(map: &MapDescriptor, x: &ExtendedPoint, step: f64) -> Result<DilatationEstimate> {
    check_branch_clearance(map, x, step)?;
    let m = derivative_matrix(|p| map.eval(p), x, step)?;
    Ok(DilatationEstimate::from_matrix(&m))
}

/// `K_I` estimate of the `k`-th iterate against the composition bound `K_I(f)^k`.
#[derive(Clone, Debug, PartialEq)]
pub struct IterateDilatation {
    pub estimate: DilatationEstimate,
    pub bound: f64,
}

impl IterateDilatation {
    /// The estimate does not exceed the bound by more than `slack` (relative).
    pub fn within(&self, slack: f64) -> bool {
        self.estimate.inner <= self.bound * (1.0 + slack)
    }
}

pub fn iterate_dilatation_check(
    map: &MapDescriptor,
    x: &ExtendedPoint,
    k: u32,
    step: f64,
) -> Result<IterateDilatation> {
    if k == 0 {
        return Err(Error::InvalidArgument("iterate count must be at least 1".into()));
    }
    let mut p = *x;
    for _ in 0..k {
        check_branch_clearance(map, &p, step)?;
        p = map.eval(&p);
    }
    let m = derivative_matrix(|q| map.eval_iterate(q, k), x, step)?;
    Ok(IterateDilatation {
        estimate: DilatationEstimate::from_matrix(&m),
        bound: map.inner_dilatation.powi(k as i32),
    })
}
