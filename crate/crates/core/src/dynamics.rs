//! Forward orbits, backward iteration and the Julia-set instruments built on it.

use rand::Rng;
use rayon::prelude::*;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::maps::{BranchSet, MapDescriptor};
use crate::space::{derive_seed, random_point_at_chord, random_point_in_chordal_ball, rng_from_seed, ExtendedPoint, SphereGrid};

/// Default cap on `deg(f)^k` for exact preimage trees.
pub const DEFAULT_TREE_BUDGET: u64 = 1_000_000;

/// `x, f(x), …` up to the requested length or the first escape.
#[derive(Clone, Debug, PartialEq)]
pub struct OrbitRecord {
    pub points: Vec<ExtendedPoint>,
    /// First `k` with `|f^k(x)| > escape_radius`.
    pub escaped_at: Option<usize>,
}

/// Iterates `f` up to `steps` times, stopping once the norm exceeds `escape_radius`.
pub fn forward_orbit(map: &MapDescriptor, x: &ExtendedPoint, steps: usize, escape_radius: f64) -> Result<OrbitRecord> {
    if steps == 0 {
        return Err(Error::InvalidArgument("orbit length must be at least 1".into()));
    }
    let mut points = Vec::with_capacity(steps + 1);
    let mut p = *x;
    for k in 0..=steps {
        points.push(p);
        if p.norm() > escape_radius {
            return Ok(OrbitRecord {
                points,
                escaped_at: Some(k),
            });
        }
        if k < steps {
            p = map.eval(&p);
        }
    }
    Ok(OrbitRecord { points, escaped_at: None })
}

/// One atom of `f^{-j}(y)`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct TreeNode {
    pub point: ExtendedPoint,
    /// Cumulated local index `i(x, f^j)`.
    pub index: u64,
    /// Position of `f(x)` in the previous level.
    pub parent: usize,
}

/// All iterated preimages of a point down to a fixed depth.
#[derive(Clone, Debug, PartialEq)]
pub struct PreimageTree {
    pub root: ExtendedPoint,
    pub depth: u32,
    /// `levels[j]` holds `f^{-j}(y)`; `levels[0]` is the root alone.
    pub levels: Vec<Vec<TreeNode>>,
}

impl PreimageTree {
    pub fn level(&self, j: usize) -> &[TreeNode] {
        &self.levels[j]
    }

    pub fn leaves(&self) -> &[TreeNode] {
        self.levels.last().expect("tree has a root level")
    }

    /// Sum of cumulated indices on level `j`; equals `deg(f)^j`.
    pub fn index_sum(&self, j: usize) -> u64 {
        self.levels[j].iter().map(|n| n.index).sum()
    }
}

/// Exact preimage tree with the default budget.
pub fn full_preimage_tree(map: &MapDescriptor, y: &ExtendedPoint, k: u32) -> Result<PreimageTree> {
    full_preimage_tree_with_budget(map, y, k, DEFAULT_TREE_BUDGET)
}

pub fn full_preimage_tree_with_budget(map: &MapDescriptor, y: &ExtendedPoint, k: u32, budget: u64) -> Result<PreimageTree> {
    check_dim(map, y)?;
    let required = (map.degree() as u128).checked_pow(k).unwrap_or(u128::MAX);
    if required > budget as u128 {
        return Err(Error::BudgetExceeded { required, budget });
    }
    let mut levels = vec![vec![TreeNode {
        point: *y,
        index: 1,
        parent: 0,
    }]];
    for _ in 0..k {
        let prev = levels.last().unwrap();
        let next: Vec<TreeNode> = prev
            .par_iter()
            .enumerate()
            .flat_map_iter(|(pi, node)| {
                map.preimages(&node.point).entries.into_iter().map(move |(point, i)| TreeNode {
                    point,
                    index: node.index * i as u64,
                    parent: pi,
                })
            })
            .collect();
        levels.push(next);
    }
    Ok(PreimageTree { root: *y, depth: k, levels })
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum SamplingMethod {
    FullTree,
    RandomBranch,
}

/// Backward-orbit sample approximating the Julia set.
#[derive(Clone, Debug, PartialEq)]
pub struct JuliaCloud {
    pub points: Vec<ExtendedPoint>,
    pub depth: u32,
    pub map: MapDescriptor,
    pub seed: ExtendedPoint,
    pub method: SamplingMethod,
}

/// Whether the full backward orbit of `y` is finite, found by exploring
/// distinct preimages until no new points appear.
pub fn backward_orbit_is_finite(map: &MapDescriptor, y: &ExtendedPoint) -> bool {
    const CAP: usize = 64;
    let mut seen = vec![*y];
    let mut frontier = vec![*y];
    while !frontier.is_empty() {
        let mut next = Vec::new();
        for p in &frontier {
            for q in map.preimages(p).points() {
                if !seen.iter().any(|s| s.chordal_to(q) < 1e-9) {
                    seen.push(*q);
                    next.push(*q);
                }
            }
        }
        if seen.len() > CAP {
            return false;
        }
        frontier = next;
    }
    true
}

/// Draws `count` independent backward paths of length `depth`; each step picks a
/// preimage with probability proportional to its local index, so the endpoints
/// follow the preimage measure `ν_depth`.
pub fn sample_julia(map: &MapDescriptor, seed: &ExtendedPoint, depth: u32, count: usize, rng_seed: u64) -> Result<JuliaCloud> {
    check_dim(map, seed)?;
    if depth == 0 || count == 0 {
        return Err(Error::InvalidArgument("depth and count must be at least 1".into()));
    }
    if backward_orbit_is_finite(map, seed) {
        return Err(Error::ExceptionalSeed);
    }
    let points = (0..count)
        .into_par_iter()
        .map(|i| {
            let mut rng = rng_from_seed(derive_seed(rng_seed, i as u64));
            let mut p = *seed;
            for _ in 0..depth {
                p = pick_preimage(map, &p, &mut rng);
            }
            p
        })
        .collect();
    Ok(JuliaCloud {
        points,
        depth,
        map: map.clone(),
        seed: *seed,
        method: SamplingMethod::RandomBranch,
    })
}

fn pick_preimage<R: Rng + ?Sized>(map: &MapDescriptor, y: &ExtendedPoint, rng: &mut R) -> ExtendedPoint {
    let pre = map.preimages(y);
    let mut ticket = rng.random_range(0..map.degree());
    for (p, i) in &pre.entries {
        if ticket < *i {
            return *p;
        }
        ticket -= i;
    }
    unreachable!("preimage indices sum to the degree")
}

/// Cloud made of the distinct atoms of `f^{-depth}(seed)`.
pub fn sample_julia_full_tree(map: &MapDescriptor, seed: &ExtendedPoint, depth: u32) -> Result<JuliaCloud> {
    if depth == 0 {
        return Err(Error::InvalidArgument("depth must be at least 1".into()));
    }
    if backward_orbit_is_finite(map, seed) {
        return Err(Error::ExceptionalSeed);
    }
    let tree = full_preimage_tree(map, seed, depth)?;
    Ok(JuliaCloud {
        points: tree.leaves().iter().map(|n| n.point).collect(),
        depth,
        map: map.clone(),
        seed: *seed,
        method: SamplingMethod::FullTree,
    })
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum PeriodicClass {
    Attracting,
    Repelling,
    Neither,
}

pub const PROBE_RADII: [f64; 3] = [1e-3, 1e-4, 1e-5];
pub const DEFAULT_MARGIN: f64 = 0.05;
const PROBES_PER_RADIUS: usize = 200;
const PROBE_SEED: u64 = 0x7065_7269_6f64;

/// Classifies a `p`-periodic point by the chordal contraction ratio
/// `χ(f^p(z), ξ) / χ(z, ξ)` on probe spheres around `ξ`.
pub fn classify_periodic(map: &MapDescriptor, xi: &ExtendedPoint, p: u32) -> Result<PeriodicClass> {
    classify_periodic_with_margin(map, xi, p, DEFAULT_MARGIN)
}

pub fn classify_periodic_with_margin(map: &MapDescriptor, xi: &ExtendedPoint, p: u32, margin: f64) -> Result<PeriodicClass> {
    check_dim(map, xi)?;
    if p == 0 {
        return Err(Error::InvalidArgument("period must be at least 1".into()));
    }
    let defect = map.eval_iterate(xi, p).chordal_to(xi);
    if defect > 1e-9 {
        return Err(Error::NotPeriodic { defect });
    }
    let mut attracting = true;
    let mut repelling = true;
    for (ri, &r) in PROBE_RADII.iter().enumerate() {
        let mut rng = rng_from_seed(derive_seed(PROBE_SEED, ri as u64));
        let (mut lo, mut hi) = (f64::INFINITY, 0.0f64);
        for _ in 0..PROBES_PER_RADIUS {
            let z = random_point_at_chord(xi, r, &mut rng);
            let ratio = map.eval_iterate(&z, p).chordal_to(xi) / z.chordal_to(xi);
            lo = lo.min(ratio);
            hi = hi.max(ratio);
        }
        attracting &= hi < 1.0 - margin;
        repelling &= lo > 1.0 + margin;
    }
    Ok(if attracting {
        PeriodicClass::Attracting
    } else if repelling {
        PeriodicClass::Repelling
    } else {
        PeriodicClass::Neither
    })
}

/// A periodic point whose full preimage at the period is itself.
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct ExceptionalPoint {
    pub point: ExtendedPoint,
    pub period: u32,
    pub class: PeriodicClass,
}

/// Periodic cycles made of fully branched points (`i(ξ, f) = deg f`), so that
/// `f^{-p}(ξ) = {ξ}`. Only such points can have a finite backward orbit.
///
/// For maps with `deg f > K_I(f)` every returned point is attracting; other
/// maps (the winding maps, say) can produce neutral ones, reported as such.
pub fn exceptional_candidates(map: &MapDescriptor) -> Vec<ExceptionalPoint> {
    let full: Vec<ExtendedPoint> = match map.branch_set() {
        BranchSet::Points(pts) => pts.iter().filter(|(_, i)| *i == map.degree()).map(|(p, _)| *p).collect(),
        BranchSet::AxisAndInfinity { .. } => map
            .branch_set()
            .representatives(map.dim())
            .into_iter()
            .filter(|(_, i)| *i == map.degree())
            .map(|(p, _)| p)
            .collect(),
    };
    let is_full = |q: &ExtendedPoint| full.iter().any(|b| b.chordal_to(q) < 1e-12);
    let mut out = Vec::new();
    for b in &full {
        let mut q = *b;
        for period in 1..=full.len() as u32 {
            q = map.eval(&q);
            if !is_full(&q) {
                break;
            }
            if q.chordal_to(b) < 1e-12 {
                let class = classify_periodic(map, b, period).unwrap_or(PeriodicClass::Neither);
                out.push(ExceptionalPoint { point: *b, period, class });
                break;
            }
        }
    }
    out
}

/// Parameters of the coverage experiment.
#[derive(Clone, Debug, PartialEq)]
pub struct ExpansionConfig {
    /// Chordal radius of the neighbourhood `U`.
    pub radius: f64,
    pub iterations: u32,
    /// Resolution of the equal-area test grid.
    pub resolution: usize,
    /// Points sampled in `U`.
    pub samples: usize,
    pub seed: u64,
}

impl ExpansionConfig {
    pub fn new(radius: f64, iterations: u32, resolution: usize) -> Self {
        Self {
            radius,
            iterations,
            resolution,
            samples: 200_000,
            seed: 0x6578_7061_6e64,
        }
    }
}

/// Outcome of [`expansion_test`].
#[derive(Clone, Debug, PartialEq)]
pub struct ExpansionReport {
    /// Fraction of grid cells met by `U ∪ f(U) ∪ … ∪ f^N(U)`.
    pub covered_fraction: f64,
    /// Covered fraction after each iteration, starting with `U` alone.
    pub coverage_by_iteration: Vec<f64>,
    pub grid: SphereGrid,
    /// Per-cell hit flags.
    pub hit: Vec<bool>,
}

/// Pushes a sample of `B_χ(x, radius)` forward and records which equal-area
/// cells of the sphere the forward orbit of the ball meets.
pub fn expansion_test(map: &MapDescriptor, x: &ExtendedPoint, radius: f64, iterations: u32, resolution: usize) -> Result<ExpansionReport> {
    expansion_test_with(map, x, &ExpansionConfig::new(radius, iterations, resolution))
}

pub fn expansion_test_with(map: &MapDescriptor, x: &ExtendedPoint, config: &ExpansionConfig) -> Result<ExpansionReport> {
    check_dim(map, x)?;
    if !(config.radius > 0.0) || config.samples == 0 {
        return Err(Error::InvalidArgument("radius and sample count must be positive".into()));
    }
    let grid = SphereGrid::new(map.dim(), config.resolution)?;
    let mut points: Vec<ExtendedPoint> = (0..config.samples)
        .into_par_iter()
        .map(|i| {
            let mut rng = rng_from_seed(derive_seed(config.seed, i as u64));
            random_point_in_chordal_ball(x, config.radius.min(2.0), &mut rng)
        })
        .collect();
    let mut hit = vec![false; grid.cell_count()];
    let mut covered = 0usize;
    let mut coverage_by_iteration = Vec::with_capacity(config.iterations as usize + 1);
    for j in 0..=config.iterations {
        let cells: Vec<usize> = points.par_iter().map(|p| grid.cell_of_point(p)).collect();
        for c in cells {
            if !hit[c] {
                hit[c] = true;
                covered += 1;
            }
        }
        coverage_by_iteration.push(covered as f64 / hit.len() as f64);
        if j < config.iterations {
            points.par_iter_mut().for_each(|p| *p = map.eval(p));
        }
    }
    Ok(ExpansionReport {
        covered_fraction: *coverage_by_iteration.last().unwrap(),
        coverage_by_iteration,
        grid,
        hit,
    })
}

fn check_dim(map: &MapDescriptor, x: &ExtendedPoint) -> Result<()> {
    if map.dim() != x.dim() {
        return Err(Error::DimensionMismatch {
            left: map.dim(),
            right: x.dim(),
        });
    }
    Ok(())
}
