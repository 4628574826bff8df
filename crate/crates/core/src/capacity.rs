//! Condenser capacity `cap(G, C) = inf ∫_G |∇u|ⁿ dm` on uniform grids.
//!
//! Potentials are continuous and piecewise linear on the Kuhn triangulation of
//! the grid (each cube split into `n!` simplices along coordinate paths), so
//! the discrete energy is an honest upper bound for the grid sets and, for
//! `n = 2`, coincides with the 5-point Laplacian energy. The minimizer is found
//! by nonlinear conjugate gradients with a Newton line search; for `n = 2` the
//! line search is exact and the method is linear CG.

use rayon::prelude::*;

use crate::dynamics::{expansion_test_with, ExpansionConfig};
use crate::error::{Error, Result};
use crate::maps::MapDescriptor;
use crate::space::{unit_sphere_area, ExtendedPoint};

/// `ω_{n−1} (log s/r)^{1−n}`, the capacity of the ring `B(s) ∖ B̄(r)`.
pub fn ring_capacity_exact(n: usize, r: f64, s: f64) -> Result<f64> {
    if n < 2 {
        return Err(Error::UnsupportedDimension(n));
    }
    if !(r > 0.0 && r < s) {
        return Err(Error::InvalidArgument(format!("ring needs 0 < r < s, got r = {r}, s = {s}")));
    }
    Ok(unit_sphere_area(n) * (s / r).ln().powi(1 - n as i32))
}

/// Nodal masks and potential of a condenser on the cube `[lower, lower + (N−1)h]ⁿ`.
#[derive(Clone, Debug)]
pub struct Condenser {
    dim: usize,
    nodes: usize,
    spacing: f64,
    lower: f64,
    domain: Vec<bool>,
    core: Vec<bool>,
    potential: Vec<f64>,
}

impl Condenser {
    /// Validates masks given per node in axis-0-fastest order.
    pub fn from_masks(dim: usize, nodes: usize, spacing: f64, lower: f64, domain: Vec<bool>, core: Vec<bool>) -> Result<Self> {
        if !(2..=3).contains(&dim) {
            return Err(Error::UnsupportedDimension(dim));
        }
        if nodes < 3 || !(spacing > 0.0) {
            return Err(Error::InvalidArgument("grid needs at least 3 nodes per axis and positive spacing".into()));
        }
        let total = nodes.pow(dim as u32);
        if domain.len() != total || core.len() != total {
            return Err(Error::InvalidArgument(format!("masks must have {total} entries")));
        }
        let potential = core.iter().map(|&c| if c { 1.0 } else { 0.0 }).collect();
        let c = Self {
            dim,
            nodes,
            spacing,
            lower,
            domain,
            core,
            potential,
        };
        c.validate()?;
        Ok(c)
    }

    /// Masks from predicates on node positions in `[-half_width, half_width]ⁿ`.
    pub fn from_predicates<D, C>(dim: usize, nodes: usize, half_width: f64, in_domain: D, in_core: C) -> Result<Self>
    where
        D: Fn(&[f64]) -> bool + Sync,
        C: Fn(&[f64]) -> bool + Sync,
    {
        if !(2..=3).contains(&dim) {
            return Err(Error::UnsupportedDimension(dim));
        }
        if nodes < 3 {
            return Err(Error::InvalidArgument("grid needs at least 3 nodes per axis".into()));
        }
        let spacing = 2.0 * half_width / (nodes - 1) as f64;
        let total = nodes.pow(dim as u32);
        let position = |idx: usize| node_position(dim, nodes, spacing, -half_width, idx);
        let domain: Vec<bool> = (0..total).into_par_iter().map(|i| in_domain(&position(i)[..dim])).collect();
        let core: Vec<bool> = (0..total).into_par_iter().map(|i| in_core(&position(i)[..dim])).collect();
        Self::from_masks(dim, nodes, spacing, -half_width, domain, core)
    }

    /// The ring `B(s) ∖ B̄(r)` on the box `[-s, s]ⁿ`.
    pub fn ring(dim: usize, r: f64, s: f64, nodes: usize) -> Result<Self> {
        if !(r > 0.0 && r < s) {
            return Err(Error::InvalidArgument(format!("ring needs 0 < r < s, got r = {r}, s = {s}")));
        }
        let norm = |x: &[f64]| x.iter().map(|v| v * v).sum::<f64>().sqrt();
        Self::from_predicates(dim, nodes, s, |x| norm(x) < s, |x| norm(x) <= r)
    }

    fn validate(&self) -> Result<()> {
        let total = self.domain.len();
        if self.core.iter().zip(&self.domain).any(|(&c, &d)| c && !d) {
            return Err(Error::DegenerateCondenser("core is not contained in the domain".into()));
        }
        if !self.core.iter().any(|&c| c) {
            return Err(Error::DegenerateCondenser("core is empty on the grid".into()));
        }
        for i in 0..total {
            if self.domain[i] && self.on_box_boundary(i) {
                return Err(Error::DegenerateCondenser("domain reaches the grid boundary".into()));
            }
        }
        let touching = (0..total).into_par_iter().any(|i| {
            self.core[i] && self.neighbours(i).any(|j| !self.domain[j])
        });
        if touching {
            return Err(Error::DegenerateCondenser("core touches the boundary of the domain".into()));
        }
        Ok(())
    }

    fn axis_indices(&self, idx: usize) -> [usize; 3] {
        let mut out = [0; 3];
        let mut rest = idx;
        for a in out.iter_mut().take(self.dim) {
            *a = rest % self.nodes;
            rest /= self.nodes;
        }
        out
    }

    fn on_box_boundary(&self, idx: usize) -> bool {
        self.axis_indices(idx)[..self.dim].iter().any(|&a| a == 0 || a == self.nodes - 1)
    }

    /// Nodes sharing a grid cell with `idx`.
    fn neighbours(&self, idx: usize) -> impl Iterator<Item = usize> + '_ {
        let ai = self.axis_indices(idx);
        let dim = self.dim;
        let n = self.nodes as isize;
        (0..3usize.pow(dim as u32)).filter_map(move |code| {
            let mut c = code;
            let mut j = 0isize;
            let mut stride = 1isize;
            for &a in ai.iter().take(dim) {
                let k = a as isize + (c % 3) as isize - 1;
                c /= 3;
                if k < 0 || k >= n {
                    return None;
                }
                j += k * stride;
                stride *= n;
            }
            (j as usize != idx).then_some(j as usize)
        })
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    /// Nodes per axis.
    pub fn nodes(&self) -> usize {
        self.nodes
    }

    pub fn spacing(&self) -> f64 {
        self.spacing
    }

    pub fn domain_mask(&self) -> &[bool] {
        &self.domain
    }

    pub fn core_mask(&self) -> &[bool] {
        &self.core
    }

    pub fn potential(&self) -> &[f64] {
        &self.potential
    }

    /// Coordinates of node `idx` (first `dim` entries meaningful).
    pub fn node_position(&self, idx: usize) -> [f64; 3] {
        node_position(self.dim, self.nodes, self.spacing, self.lower, idx)
    }

    /// Same geometry on the grid with every other node, when that grid is
    /// still a valid condenser.
    fn coarsened(&self) -> Option<Self> {
        if (self.nodes - 1) % 2 != 0 || (self.nodes - 1) / 2 < 16 {
            return None;
        }
        let cn = (self.nodes - 1) / 2 + 1;
        let total = cn.pow(self.dim as u32);
        let fine_index = |ci: usize| {
            let mut rest = ci;
            let mut fi = 0;
            let mut stride = 1;
            for _ in 0..self.dim {
                fi += 2 * (rest % cn) * stride;
                rest /= cn;
                stride *= self.nodes;
            }
            fi
        };
        let domain = (0..total).map(|i| self.domain[fine_index(i)]).collect();
        let core = (0..total).map(|i| self.core[fine_index(i)]).collect();
        Self::from_masks(self.dim, cn, 2.0 * self.spacing, self.lower, domain, core).ok()
    }

    /// Multilinear interpolation of a coarse potential onto this grid.
    fn prolongate_from(&mut self, coarse: &Condenser) {
        let cn = coarse.nodes;
        let dim = self.dim;
        let nodes = self.nodes;
        let cu = &coarse.potential;
        let (domain, core) = (&self.domain, &self.core);
        self.potential.par_iter_mut().enumerate().for_each(|(i, u)| {
            if core[i] {
                *u = 1.0;
                return;
            }
            if !domain[i] {
                *u = 0.0;
                return;
            }
            let mut rest = i;
            let mut axes = [(0usize, 0usize); 3];
            for ax in axes.iter_mut().take(dim) {
                let k = rest % nodes;
                rest /= nodes;
                *ax = (k / 2, k % 2);
            }
            let mut acc = 0.0;
            for corner in 0..(1usize << dim) {
                let mut w = 1.0;
                let mut ci = 0;
                let mut stride = 1;
                for (a, &(base, odd)) in axes.iter().take(dim).enumerate() {
                    let up = (corner >> a) & 1;
                    if odd == 0 && up == 1 {
                        w = 0.0;
                        break;
                    }
                    if odd == 1 {
                        w *= 0.5;
                    }
                    ci += (base + up) * stride;
                    stride *= cn;
                }
                if w > 0.0 {
                    acc += w * cu[ci];
                }
            }
            *u = acc.clamp(0.0, 1.0);
        });
    }
}

fn node_position(dim: usize, nodes: usize, spacing: f64, lower: f64, idx: usize) -> [f64; 3] {
    let mut out = [0.0; 3];
    let mut rest = idx;
    for x in out.iter_mut().take(dim) {
        *x = lower + (rest % nodes) as f64 * spacing;
        rest /= nodes;
    }
    out
}

/// Iteration controls for [`solve_capacity`]. The exponent is always the dimension.
#[derive(Clone, Debug, PartialEq)]
pub struct SolverConfig {
    pub max_iters: usize,
    /// Relative energy decrease below which an iteration counts as stalled.
    pub tolerance: f64,
    /// Consecutive stalled iterations required to declare convergence.
    pub patience: usize,
    /// Regularization `(|∇u|² + ε²)^{(n−2)/2}` of the degenerate exponent.
    pub epsilon: f64,
    /// Start from the solution on the twice coarser grid when possible.
    pub nested: bool,
}

impl Default for SolverConfig {
    fn default() -> Self {
        Self {
            max_iters: 20_000,
            tolerance: 1e-9,
            patience: 5,
            epsilon: 1e-8,
            nested: true,
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct CapacityResult {
    pub value: f64,
    /// Energy after each accepted iteration on the finest grid.
    pub energy_history: Vec<f64>,
    pub grid_spacing: f64,
    pub converged: bool,
    pub iterations: usize,
}

/// Minimizes the discrete `n`-energy with `u = 1` on the core and `u = 0` off
/// the domain; the potential is left in the condenser.
pub fn solve_capacity(condenser: &mut Condenser, config: &SolverConfig) -> Result<CapacityResult> {
    if config.nested {
        if let Some(mut coarse) = condenser.coarsened() {
            solve_capacity(&mut coarse, config)?;
            condenser.prolongate_from(&coarse);
        }
    }
    Energy::new(condenser, config.epsilon).minimize(&mut condenser.potential, config)
}

/// Discrete energy on the active cells (those with a free corner).
struct Energy {
    dim: usize,
    p: f64,
    eps2: f64,
    inv_h: f64,
    vol: f64,
    free: Vec<bool>,
    /// Linear offsets of the cube corners; bit `a` of the corner number is axis `a`.
    corner_offset: Vec<usize>,
    /// Corner sequences `0 = c₀, c₁, …, c_n` of the Kuhn simplices, with the axis of each step.
    paths: Vec<Vec<(usize, usize)>>,
    /// Active cell base indices grouped by their index along the last axis.
    slabs: Vec<Vec<usize>>,
    layer: usize,
}

#[derive(Clone, Copy, Default)]
struct LineSample {
    value: f64,
    slope: f64,
    curvature: f64,
}

impl Energy {
    fn new(c: &Condenser, epsilon: f64) -> Self {
        let dim = c.dim;
        let n = c.nodes;
        let stride: Vec<usize> = (0..dim).map(|a| n.pow(a as u32)).collect();
        let corner_offset: Vec<usize> = (0..1usize << dim)
            .map(|corner| (0..dim).filter(|a| corner >> a & 1 == 1).map(|a| stride[a]).sum())
            .collect();
        let mut paths = Vec::new();
        for perm in permutations(dim) {
            let mut corner = 0;
            let mut path = vec![(0, usize::MAX)];
            for &a in &perm {
                corner |= 1 << a;
                path.push((corner, a));
            }
            paths.push(path);
        }
        let free: Vec<bool> = c.domain.iter().zip(&c.core).map(|(&d, &k)| d && !k).collect();
        let layer = stride[dim - 1];
        let cells_per_slab = (n - 1).pow(dim as u32 - 1);
        let slabs = (0..n - 1)
            .into_par_iter()
            .map(|s| {
                (0..cells_per_slab)
                    .filter_map(|k| {
                        let mut rest = k;
                        let mut base = s * layer;
                        for st in stride.iter().take(dim - 1) {
                            base += (rest % (n - 1)) * st;
                            rest /= n - 1;
                        }
                        corner_offset.iter().any(|&o| free[base + o]).then_some(base)
                    })
                    .collect()
            })
            .collect();
        let factorial: usize = (1..=dim).product();
        Self {
            dim,
            p: dim as f64,
            eps2: epsilon * epsilon,
            inv_h: 1.0 / c.spacing,
            vol: c.spacing.powi(dim as i32) / factorial as f64,
            free,
            corner_offset,
            paths,
            slabs,
            layer,
        }
    }

    /// Energy density `q^{p/2}` and `q^{p/2−1}` for `q = |g|² (+ ε²)`.
    #[inline]
    fn density(&self, q: f64) -> (f64, f64) {
        if self.dim == 2 {
            (q, 1.0)
        } else {
            let s = (q + self.eps2).sqrt();
            (s * s * s, s)
        }
    }

    /// Energy and its gradient with respect to the free nodal values.
    fn value_and_gradient(&self, u: &[f64], grad: &mut [f64]) -> f64 {
        grad.iter_mut().for_each(|g| *g = 0.0);
        let band = 2 * self.layer;
        let mut energy = 0.0;
        for parity in 0..2 {
            let offset = parity * self.layer;
            let parts: Vec<f64> = grad[offset..]
                .par_chunks_mut(band)
                .enumerate()
                .map(|(k, chunk)| {
                    let s = 2 * k + parity;
                    if s >= self.slabs.len() {
                        return 0.0;
                    }
                    let origin = s * self.layer;
                    self.slab_gradient(u, &self.slabs[s], origin, chunk)
                })
                .collect();
            energy += parts.iter().sum::<f64>();
        }
        for (g, &f) in grad.iter_mut().zip(&self.free) {
            if !f {
                *g = 0.0;
            }
        }
        energy
    }

    fn slab_gradient(&self, u: &[f64], cells: &[usize], origin: usize, out: &mut [f64]) -> f64 {
        let corners = self.corner_offset.len();
        let mut energy = 0.0;
        let mut cu = [0.0; 8];
        for &base in cells {
            let mut cg = [0.0; 8];
            for c in 0..corners {
                cu[c] = u[base + self.corner_offset[c]];
            }
            for path in &self.paths {
                let mut g = [0.0; 3];
                let mut q = 0.0;
                for i in 1..path.len() {
                    let d = (cu[path[i].0] - cu[path[i - 1].0]) * self.inv_h;
                    g[i - 1] = d;
                    q += d * d;
                }
                let (e, w) = self.density(q);
                energy += self.vol * e;
                let scale = self.vol * self.p * w * self.inv_h;
                for i in 1..path.len() {
                    let t = scale * g[i - 1];
                    cg[path[i].0] += t;
                    cg[path[i - 1].0] -= t;
                }
            }
            for c in 0..corners {
                out[base + self.corner_offset[c] - origin] += cg[c];
            }
        }
        energy
    }

    /// `φ(t) = E(u + t d)` with its first two derivatives.
    fn line_sample(&self, u: &[f64], d: &[f64], t: f64) -> LineSample {
        let parts: Vec<LineSample> = self
            .slabs
            .par_iter()
            .map(|cells| {
                let corners = self.corner_offset.len();
                let mut acc = LineSample::default();
                let mut cu = [0.0; 8];
                let mut cd = [0.0; 8];
                for &base in cells {
                    for c in 0..corners {
                        let j = base + self.corner_offset[c];
                        cu[c] = u[j] + t * d[j];
                        cd[c] = d[j];
                    }
                    for path in &self.paths {
                        let (mut q, mut gd, mut dd) = (0.0, 0.0, 0.0);
                        for i in 1..path.len() {
                            let a = (cu[path[i].0] - cu[path[i - 1].0]) * self.inv_h;
                            let b = (cd[path[i].0] - cd[path[i - 1].0]) * self.inv_h;
                            q += a * a;
                            gd += a * b;
                            dd += b * b;
                        }
                        let (e, w) = self.density(q);
                        acc.value += self.vol * e;
                        acc.slope += self.vol * self.p * w * gd;
                        acc.curvature += self.vol * self.p * w * dd;
                        if self.dim == 3 {
                            // (p − 2) q^{p/2−2} (g·d)² with p = 3.
                            acc.curvature += self.vol * self.p * gd * gd / w;
                        }
                    }
                }
                acc
            })
            .collect();
        parts.iter().fold(LineSample::default(), |a, b| LineSample {
            value: a.value + b.value,
            slope: a.slope + b.slope,
            curvature: a.curvature + b.curvature,
        })
    }

    fn minimize(&self, u: &mut [f64], config: &SolverConfig) -> Result<CapacityResult> {
        let total = u.len();
        let mut grad = vec![0.0; total];
        let mut prev_grad = vec![0.0; total];
        let mut dir = vec![0.0; total];
        let mut energy = self.value_and_gradient(u, &mut grad);
        let mut history = vec![energy];
        let mut stalled = 0;
        let mut converged = false;
        let mut iterations = 0;
        let mut restart = true;
        let dot = |a: &[f64], b: &[f64]| -> f64 {
            a.par_chunks(4096).zip(b.par_chunks(4096)).map(|(x, y)| x.iter().zip(y).map(|(p, q)| p * q).sum::<f64>()).collect::<Vec<_>>().iter().sum()
        };
        let mut gg = dot(&grad, &grad);
        while iterations < config.max_iters {
            if gg == 0.0 {
                converged = true;
                break;
            }
            iterations += 1;
            if restart {
                dir.par_iter_mut().zip(&grad).for_each(|(d, g)| *d = -g);
            } else {
                let beta = (gg - dot(&grad, &prev_grad)) / dot(&prev_grad, &prev_grad);
                let beta = beta.max(0.0);
                dir.par_iter_mut().zip(&grad).for_each(|(d, g)| *d = -g + beta * *d);
            }
            let mut slope0 = dot(&grad, &dir);
            if slope0 >= 0.0 {
                dir.par_iter_mut().zip(&grad).for_each(|(d, g)| *d = -g);
                slope0 = -gg;
            }
            let step = self.line_search(u, &dir, energy, slope0);
            let Some((t, new_energy)) = step else {
                if restart {
                    // Steepest descent cannot lower the energy in floating point.
                    converged = true;
                    break;
                }
                restart = true;
                continue;
            };
            u.par_iter_mut().zip(&dir).for_each(|(x, d)| *x += t * d);
            std::mem::swap(&mut grad, &mut prev_grad);
            let recomputed = self.value_and_gradient(u, &mut grad);
            let value = recomputed.min(new_energy);
            let decrease = (energy - value) / energy.abs().max(f64::MIN_POSITIVE);
            energy = value;
            history.push(energy);
            gg = dot(&grad, &grad);
            restart = iterations % total.max(50) == 0;
            if decrease < config.tolerance {
                stalled += 1;
                if stalled >= config.patience {
                    converged = true;
                    break;
                }
            } else {
                stalled = 0;
            }
        }
        self.finish(u, history, converged, iterations)
    }

    /// Newton iteration on the convex function `φ(t)`; returns an energy-decreasing step.
    fn line_search(&self, u: &[f64], d: &[f64], e0: f64, slope0: f64) -> Option<(f64, f64)> {
        let s0 = self.line_sample(u, d, 0.0);
        if !(s0.curvature > 0.0) {
            return None;
        }
        let mut t = -slope0 / s0.curvature;
        let mut best: Option<(f64, f64)> = None;
        for _ in 0..8 {
            let s = self.line_sample(u, d, t);
            if s.value <= e0 && best.is_none_or(|(_, e)| s.value <= e) {
                best = Some((t, s.value));
            }
            if s.slope.abs() <= 1e-3 * slope0.abs() || !(s.curvature > 0.0) {
                break;
            }
            t -= s.slope / s.curvature;
        }
        if best.is_none() {
            let mut t = -slope0 / s0.curvature;
            for _ in 0..30 {
                t *= 0.5;
                let s = self.line_sample(u, d, t);
                if s.value <= e0 {
                    return (s.value < e0).then_some((t, s.value));
                }
            }
        }
        best.filter(|&(_, e)| e < e0)
    }

    fn finish(&self, u: &mut [f64], mut history: Vec<f64>, converged: bool, iterations: usize) -> Result<CapacityResult> {
        let before: Vec<f64> = u.to_vec();
        u.par_iter_mut().for_each(|x| *x = x.clamp(0.0, 1.0));
        let mut scratch = vec![0.0; u.len()];
        let clamped = self.value_and_gradient(u, &mut scratch);
        let last = *history.last().unwrap();
        if clamped <= last {
            history.push(clamped);
        } else {
            u.copy_from_slice(&before);
        }
        Ok(CapacityResult {
            value: *history.last().unwrap(),
            energy_history: history,
            grid_spacing: 1.0 / self.inv_h,
            converged,
            iterations,
        })
    }
}

/// Half-width of the chart box; charts live in `|y| ≤ 1` with domain `|y| < 2`.
const CHART_BOX: f64 = 2.0;
const CHART_DOMAIN: f64 = 2.0;

fn chart_norm(y: &[f64]) -> f64 {
    y.iter().map(|v| v * v).sum::<f64>().sqrt()
}

fn check_chart_grid(dim: usize, grid: usize) -> Result<()> {
    if !(2..=3).contains(&dim) {
        return Err(Error::UnsupportedDimension(dim));
    }
    if grid < 9 || grid % 2 == 0 {
        return Err(Error::InvalidArgument(format!("chart grid needs an odd node count of at least 9, got {grid}")));
    }
    Ok(())
}

/// Capacity of the condenser `(B(0, 2), C)` in a chart, with `C` given on nodes.
fn chart_capacity<F>(dim: usize, grid: usize, in_core: F, config: &SolverConfig) -> Result<f64>
where
    F: Fn(&[f64]) -> bool + Sync,
{
    let mut c = Condenser::from_predicates(dim, grid, CHART_BOX, |y| chart_norm(y) < CHART_DOMAIN, in_core)?;
    Ok(solve_capacity(&mut c, config)?.value)
}

/// Capacity of a single grid node at the chart origin: the smallest positive
/// value the chart grid can express.
pub fn single_cell_baseline(dim: usize, grid: usize) -> Result<f64> {
    check_chart_grid(dim, grid)?;
    let h = 2.0 * CHART_BOX / (grid - 1) as f64;
    chart_capacity(dim, grid, |y| chart_norm(y) < 0.5 * h, &SolverConfig::default())
}

/// Capacity of a closed ball `B̄(center, radius)` inside the chart domain.
pub fn chart_ball_capacity(dim: usize, grid: usize, center: &[f64], radius: f64) -> Result<f64> {
    check_chart_grid(dim, grid)?;
    if center.len() != dim {
        return Err(Error::DimensionMismatch {
            left: dim,
            right: center.len(),
        });
    }
    let inside = |y: &[f64]| chart_norm(&y.iter().zip(center).map(|(a, b)| a - b).collect::<Vec<_>>()) <= radius;
    chart_capacity(dim, grid, inside, &SolverConfig::default())
}

/// Capacity proxy for the part of the sphere missed by the forward orbit of a ball.
#[derive(Clone, Debug, PartialEq)]
pub struct ComplementScore {
    /// Sum of the two chart capacities.
    pub score: f64,
    /// Capacity of the complement in `|y| ≤ 1` and in the inverted chart `y ↦ y/|y|²`.
    pub chart_values: [f64; 2],
    /// Fraction of sphere cells not met by the orbit.
    pub complement_fraction: f64,
    pub sphere_resolution: usize,
    pub grid: usize,
}

/// Sphere resolution paired with a chart grid, so that cells and chart
/// spacing shrink together under refinement.
pub fn sphere_resolution_for(grid: usize) -> usize {
    ((grid - 1) / 4).max(2)
}

/// Pushes `B_χ(x, radius)` forward, takes the unmet sphere cells as the core
/// of a condenser in each hemisphere chart and returns the summed capacity.
pub fn complement_capacity_score(map: &MapDescriptor, x: &ExtendedPoint, radius: f64, iterations: u32, grid: usize) -> Result<ComplementScore> {
    let expansion = ExpansionConfig::new(radius, iterations, sphere_resolution_for(grid));
    complement_capacity_score_with(map, x, &expansion, grid, &SolverConfig::default())
}

pub fn complement_capacity_score_with(
    map: &MapDescriptor,
    x: &ExtendedPoint,
    expansion: &ExpansionConfig,
    grid: usize,
    solver: &SolverConfig,
) -> Result<ComplementScore> {
    let dim = map.dim();
    check_chart_grid(dim, grid)?;
    let report = expansion_test_with(map, x, expansion)?;
    let missed = |z: ExtendedPoint| !report.hit[report.grid.cell_of_point(&z)];
    let mut chart_values = [0.0; 2];
    for (chart, value) in chart_values.iter_mut().enumerate() {
        let in_core = |y: &[f64]| {
            let r2: f64 = y.iter().map(|v| v * v).sum();
            if r2 > 1.0 {
                return false;
            }
            let z = if chart == 0 {
                ExtendedPoint::finite(y)
            } else if r2 == 0.0 {
                Ok(ExtendedPoint::infinity(dim))
            } else {
                ExtendedPoint::finite(&y.iter().map(|v| v / r2).collect::<Vec<_>>())
            };
            z.map(missed).unwrap_or(false)
        };
        *value = match chart_capacity(dim, grid, in_core, solver) {
            Ok(v) => v,
            Err(Error::DegenerateCondenser(msg)) if msg.contains("empty") => 0.0,
            Err(e) => return Err(e),
        };
    }
    Ok(ComplementScore {
        score: chart_values[0] + chart_values[1],
        chart_values,
        complement_fraction: 1.0 - report.covered_fraction,
        sphere_resolution: report.grid.resolution(),
        grid,
    })
}

fn permutations(n: usize) -> Vec<Vec<usize>> {
    if n == 1 {
        return vec![vec![0]];
    }
    let mut out = Vec::new();
    for rest in permutations(n - 1) {
        for pos in 0..n {
            let mut p = rest.clone();
            p.insert(pos, n - 1);
            out.push(p);
        }
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn ring_formula_examples() {
        use std::f64::consts::{E, PI};
        assert!((ring_capacity_exact(2, 1.0, 2.0).unwrap() - 9.0647).abs() < 1e-4);
        assert!((ring_capacity_exact(3, 1.0, 2.0).unwrap() - 26.155).abs() < 1e-3);
        assert!((ring_capacity_exact(2, 1.0, E).unwrap() - 2.0 * PI).abs() < 1e-12);
        assert!(ring_capacity_exact(2, 2.0, 2.0).is_err());
        assert!(ring_capacity_exact(2, 3.0, 2.0).is_err());
    }

    #[test]
    fn kuhn_paths() {
        assert_eq!(permutations(3).len(), 6);
        let e = Energy::new(&Condenser::ring(3, 0.5, 1.0, 9).unwrap(), 1e-8);
        for path in &e.paths {
            assert_eq!(path.last().unwrap().0, 7);
        }
    }

    #[test]
    fn linear_potential_energy() {
        // u = x₀ on the unit cube has |∇u| = 1, energy = volume.
        let c = Condenser::ring(3, 0.5, 1.0, 9).unwrap();
        let e = Energy::new(&c, 0.0);
        let u: Vec<f64> = (0..c.potential.len()).map(|i| c.node_position(i)[0]).collect();
        let all = Energy {
            slabs: (0..8)
                .map(|s| {
                    let mut v = Vec::new();
                    for k in 0..64 {
                        v.push(s * 81 + (k % 8) + 9 * (k / 8));
                    }
                    v
                })
                .collect(),
            ..e
        };
        let mut g = vec![0.0; u.len()];
        let energy = all.value_and_gradient(&u, &mut g);
        assert!((energy - 8.0).abs() < 1e-12);
    }

    #[test]
    fn gradient_matches_finite_differences() {
        for dim in [2, 3] {
            let c = Condenser::ring(dim, 0.5, 1.0, 9).unwrap();
            let e = Energy::new(&c, 1e-8);
            let u: Vec<f64> = (0..c.potential.len())
                .map(|i| {
                    let x = c.node_position(i);
                    if c.core[i] {
                        1.0
                    } else if c.domain[i] {
                        0.5 + 0.3 * (3.0 * x[0]).sin() * x[1]
                    } else {
                        0.0
                    }
                })
                .collect();
            let mut g = vec![0.0; u.len()];
            e.value_and_gradient(&u, &mut g);
            let mut scratch = vec![0.0; u.len()];
            for i in (0..u.len()).filter(|&i| e.free[i]).step_by(7) {
                let mut up = u.clone();
                up[i] += 1e-6;
                let mut dn = u.clone();
                dn[i] -= 1e-6;
                let fd = (e.value_and_gradient(&up, &mut scratch) - e.value_and_gradient(&dn, &mut scratch)) / 2e-6;
                assert!((fd - g[i]).abs() < 1e-6 * (1.0 + g[i].abs()), "dim {dim} node {i}: {fd} vs {}", g[i]);
            }
        }
    }

    #[test]
    fn degenerate_condensers_rejected() {
        let err = Condenser::from_predicates(2, 33, 2.0, |x| x[0].hypot(x[1]) < 1.0, |x| x[0].hypot(x[1]) <= 1.0);
        assert!(matches!(err, Err(Error::DegenerateCondenser(_))));
        let err = Condenser::from_predicates(2, 33, 2.0, |x| x[0].hypot(x[1]) < 1.0, |_| false);
        assert!(matches!(err, Err(Error::DegenerateCondenser(_))));
        let err = Condenser::from_predicates(2, 33, 2.0, |_| true, |x| x[0].hypot(x[1]) <= 0.5);
        assert!(matches!(err, Err(Error::DegenerateCondenser(_))));
    }

    #[test]
    fn single_cell_baseline_shrinks() {
        let values: Vec<f64> = [33, 65, 129].iter().map(|&g| single_cell_baseline(2, g).unwrap()).collect();
        assert!(values.windows(2).all(|w| w[1] < w[0]), "{values:?}");
        // A node behaves like a disk of radius comparable to h.
        for (v, g) in values.iter().zip([33, 65, 129]) {
            let h = 4.0 / (g - 1) as f64;
            let lo = ring_capacity_exact(2, h, 2.0).unwrap();
            let hi = ring_capacity_exact(2, 0.05 * h, 2.0).unwrap();
            assert!(*v < lo && *v > hi, "{v} not in ({hi}, {lo})");
        }
    }

    #[test]
    fn small_rings_close_to_formula() {
        let exact = ring_capacity_exact(2, 1.0, 2.0).unwrap();
        let mut c = Condenser::ring(2, 1.0, 2.0, 129).unwrap();
        let res = solve_capacity(&mut c, &SolverConfig::default()).unwrap();
        assert!(res.converged);
        assert!((res.value - exact).abs() / exact < 0.05, "{}", res.value);
        assert!(res.energy_history.windows(2).all(|w| w[1] <= w[0]));
        assert!(c.potential().iter().all(|&u| (0.0..=1.0).contains(&u)));
    }
}
