//! The acceptance checks, run end to end and collected into a report.
//!
//! Every check draws its random numbers from `derive_seed(seed, id)`, and the
//! report carries no timings, so a run is reproducible byte for byte.

use std::collections::BTreeMap;
use std::time::{Duration, Instant};

use rand::Rng;
use serde::Serialize;

use crate::capacity::{chart_ball_capacity, complement_capacity_score, ring_capacity_exact, single_cell_baseline, solve_capacity, Condenser, SolverConfig};
use crate::counting::{count_in_iterate, global_average_iterate, Region};
use crate::dynamics::{exceptional_candidates, expansion_test, sample_julia, JuliaCloud, PeriodicClass};
use crate::fractal::{
    box_dimension_auto, capacity_gauge_check, capacity_gauge_epsilon, holder_exponent, holder_stability, mass_distribution_check, preimage_measure,
    separated_preimage_audit, GaugeFunction, Weight,
};
use crate::maps::{iterate_dilatation_check, MapDescriptor, MapFamily, DEFAULT_STEP};
use crate::space::{derive_seed, rng_from_seed, sample_chordal_uniform, ExtendedPoint};
use crate::spatial::{cloud_spacing, hausdorff_distance, ChordalIndex};
use crate::{Error, Result};

pub const DEFAULT_SEED: u64 = 20_240_917;
pub const CHECK_IDS: [u32; 12] = [1, 2, 3, 4, 5, 6, 7, 8, 9, 10, 11, 12];

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum CheckStatus {
    Pass,
    Fail,
    /// A sub-computation exceeded its budget.
    Skipped,
    /// The map does not satisfy `deg f > K_I(f)`, so the check does not apply.
    HypothesisNotMet,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct CheckOutcome {
    pub id: u32,
    pub name: &'static str,
    pub anchor: &'static str,
    pub status: CheckStatus,
    /// Whether the maps under test satisfy `deg f > K_I(f)`.
    pub hypothesis_met: bool,
    /// One line per requirement, prefixed `ok:` or `failed:`, plus notes.
    pub detail: Vec<String>,
    pub metrics: BTreeMap<String, f64>,
}

#[derive(Clone, Debug, PartialEq)]
pub struct SuiteConfig {
    pub seed: u64,
    /// Replaces the fixed maps of the map-dependent checks.
    pub map: Option<MapDescriptor>,
    pub checks: Vec<u32>,
}

impl Default for SuiteConfig {
    fn default() -> Self {
        Self {
            seed: DEFAULT_SEED,
            map: None,
            checks: CHECK_IDS.to_vec(),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct SuiteReport {
    pub tool_version: &'static str,
    pub seed: u64,
    pub map: Option<MapFamily>,
    pub checks: Vec<CheckOutcome>,
}

impl SuiteReport {
    pub fn any_failed(&self) -> bool {
        self.checks.iter().any(|c| c.status == CheckStatus::Fail)
    }

    pub fn get(&self, id: u32) -> Option<&CheckOutcome> {
        self.checks.iter().find(|c| c.id == id)
    }
}

/// Name and anchor of a check.
pub fn describe(id: u32) -> Option<(&'static str, &'static str)> {
    Some(match id {
        1 => ("ring capacity", "capacity of a spherical ring"),
        2 => ("capacity monotonicity", "monotonicity of condenser capacity"),
        3 => ("degree identity", "averaged counting function equals the degree"),
        4 => ("Julia oracle", "Julia set as the closure of a backward orbit"),
        5 => ("complete invariance", "complete invariance of the Julia set"),
        6 => ("exceptional set", "exceptional set is finite and attracting"),
        7 => ("expansion dichotomy", "Julia set by capacity of the orbit complement"),
        8 => ("sharpness control", "deg f > K_I cannot be weakened (winding map)"),
        9 => ("measure suite", "preimage measures and the mass distribution principle"),
        10 => ("dimension bounds", "Hausdorff dimension and gauge lower bounds"),
        11 => ("Hölder distortion", "Hölder distortion at branch points"),
        12 => ("dilatation composition", "submultiplicativity of the inner dilatation"),
        _ => return None,
    })
}

pub fn run_suite(config: &SuiteConfig) -> Result<SuiteReport> {
    let checks = config.checks.iter().map(|&id| run_check(id, config)).collect::<Result<Vec<_>>>()?;
    Ok(SuiteReport {
        tool_version: env!("CARGO_PKG_VERSION"),
        seed: config.seed,
        map: config.map.as_ref().map(MapDescriptor::family),
        checks,
    })
}

pub fn run_check(id: u32, config: &SuiteConfig) -> Result<CheckOutcome> {
    let (name, anchor) = describe(id).ok_or_else(|| Error::InvalidArgument(format!("no check with id {id}")))?;
    let ctx = Ctx {
        seed: derive_seed(config.seed, id as u64),
        map: config.map.clone(),
    };
    let mut probe = Probe::default();
    let gated = matches!(id, 5 | 6 | 7 | 10);
    let hypothesis_met = match (&ctx.map, id) {
        (_, 8) => false,
        (Some(m), _) => m.degree_exceeds_inner_dilatation(),
        (None, _) => true,
    };
    let status = if gated && !hypothesis_met {
        let m = ctx.map.as_ref().expect("only user maps can miss the hypothesis");
        probe.note(format!("deg f = {} does not exceed K_I = {}", m.degree(), m.inner_dilatation()));
        CheckStatus::HypothesisNotMet
    } else {
        let run = match id {
            1 => ring_capacity(&mut probe),
            2 => monotonicity(&mut probe, &ctx),
            3 => degree_identity(&mut probe, &ctx),
            4 => julia_oracle(&mut probe, &ctx),
            5 => complete_invariance(&mut probe, &ctx),
            6 => exceptional_set(&mut probe, &ctx),
            7 => expansion_dichotomy(&mut probe, &ctx),
            8 => sharpness(&mut probe),
            9 => measure_suite(&mut probe, &ctx),
            10 => dimension_bounds(&mut probe, &ctx),
            11 => holder_distortion(&mut probe, &ctx),
            _ => dilatation_composition(&mut probe, &ctx),
        };
        match run {
            Ok(()) if probe.failures == 0 => CheckStatus::Pass,
            Ok(()) => CheckStatus::Fail,
            Err(e @ Error::BudgetExceeded { .. }) => {
                probe.note(format!("skipped: {e}"));
                CheckStatus::Skipped
            }
            Err(e) => {
                probe.note(format!("failed: {e}"));
                CheckStatus::Fail
            }
        }
    };
    Ok(CheckOutcome {
        id,
        name,
        anchor,
        status,
        hypothesis_met,
        detail: probe.detail,
        metrics: probe.metrics,
    })
}

struct Ctx {
    seed: u64,
    map: Option<MapDescriptor>,
}

impl Ctx {
    /// The user map if one was given, else the fixed ones.
    fn maps(&self, fixed: Vec<MapDescriptor>) -> Vec<MapDescriptor> {
        match &self.map {
            Some(m) => vec![m.clone()],
            None => fixed,
        }
    }
}

#[derive(Default)]
struct Probe {
    detail: Vec<String>,
    metrics: BTreeMap<String, f64>,
    failures: usize,
}

impl Probe {
    fn metric(&mut self, key: impl Into<String>, value: f64) {
        self.metrics.insert(key.into(), value);
    }

    fn require(&mut self, ok: bool, what: impl AsRef<str>) {
        if ok {
            self.detail.push(format!("ok: {}", what.as_ref()));
        } else {
            self.failures += 1;
            self.detail.push(format!("failed: {}", what.as_ref()));
        }
    }

    fn note(&mut self, what: impl Into<String>) {
        self.detail.push(what.into());
    }

    fn timed<T>(&mut self, limit: Duration, what: &str, f: impl FnOnce() -> Result<T>) -> Result<T> {
        let start = Instant::now();
        let out = f()?;
        self.require(start.elapsed() <= limit, format!("{what} within {} s", limit.as_secs()));
        Ok(out)
    }
}

fn pt(c: &[f64]) -> ExtendedPoint {
    ExtendedPoint::finite(c).expect("finite literal")
}

fn e1(dim: usize, x: f64) -> ExtendedPoint {
    let mut c = vec![0.0; dim];
    c[0] = x;
    pt(&c)
}

fn power(d: u32) -> MapDescriptor {
    MapDescriptor::power(d).expect("catalog map")
}

fn basilica() -> MapDescriptor {
    MapDescriptor::quadratic(-1.0, 0.0).expect("catalog map")
}

fn stretch() -> MapDescriptor {
    MapDescriptor::stretch_power(3, 2.0).expect("catalog map")
}

fn winding(k: u32) -> MapDescriptor {
    MapDescriptor::winding(k).expect("catalog map")
}

fn catalog() -> Vec<MapDescriptor> {
    vec![
        power(2),
        power(3),
        MapDescriptor::quadratic(0.0, 0.0).expect("catalog map"),
        basilica(),
        MapDescriptor::quadratic(-0.12, 0.75).expect("catalog map"),
        stretch(),
        winding(2),
        winding(3),
        MapDescriptor::winding3d(2).expect("catalog map"),
    ]
}

/// A backward-orbit seed for the map, with the cloud it produces.
fn julia_cloud(map: &MapDescriptor, depth: u32, count: usize, seed: u64) -> Result<JuliaCloud> {
    let dim = map.dim();
    let mut tries = vec![e1(dim, 2.0), e1(dim, 1.0), e1(dim, 0.0)];
    let mut c = vec![0.3; dim];
    c[0] = 0.7;
    tries.push(pt(&c));
    let mut last = Error::ExceptionalSeed;
    for x in tries {
        match sample_julia(map, &x, depth, count, seed) {
            Ok(cloud) => return Ok(cloud),
            Err(e) => last = e,
        }
    }
    Err(last)
}

fn ring_capacity(p: &mut Probe) -> Result<()> {
    let config = SolverConfig::default();
    for (n, grid, tol, limit) in [(2usize, 513usize, 0.05, 30u64), (3, 129, 0.10, 300)] {
        let exact = ring_capacity_exact(n, 1.0, 2.0)?;
        let result = p.timed(Duration::from_secs(limit), &format!("n = {n} solve"), || {
            let mut c = Condenser::ring(n, 1.0, 2.0, grid)?;
            solve_capacity(&mut c, &config)
        })?;
        let rel = (result.value - exact) / exact;
        p.metric(format!("n{n}_value"), result.value);
        p.metric(format!("n{n}_exact"), exact);
        p.metric(format!("n{n}_relative_error"), rel);
        p.require(result.converged, format!("n = {n} solver converged"));
        p.require(rel.abs() <= tol, format!("n = {n}, grid {grid}: {:.4} vs {exact:.4} within {:.0}%", result.value, tol * 100.0));
    }
    Ok(())
}

/// Nested condensers `(G, C) ⊂ (G', C')` where one of the two sets grows.
fn monotonicity(p: &mut Probe, ctx: &Ctx) -> Result<()> {
    const SLACK: f64 = 1e-6;
    let config = SolverConfig::default();
    let mut rng = rng_from_seed(ctx.seed);
    let mut worst_margin = f64::INFINITY;
    for pair in 0..10 {
        let (dim, grid) = if pair % 5 == 4 { (3, 33) } else { (2, 65) };
        let h = 4.0 / (grid - 1) as f64;
        let s = rng.random_range(1.2..1.6);
        let r = rng.random_range(0.15..0.35);
        let reach = s - r - 3.0 * h;
        let c: Vec<f64> = (0..dim).map(|_| rng.random_range(-reach..reach) / (dim as f64).sqrt()).collect();
        let c2: Vec<f64> = (0..dim).map(|_| rng.random_range(-reach..reach) / (dim as f64).sqrt()).collect();
        let g2: Vec<f64> = (0..dim).map(|_| rng.random_range(-0.3..0.3)).collect();
        let dist = |y: &[f64], q: &[f64]| y.iter().zip(q).map(|(a, b)| (a - b).powi(2)).sum::<f64>().sqrt();
        let origin = vec![0.0; dim];
        let grow_core = pair % 2 == 0;

        let in_g = |y: &[f64]| dist(y, &origin) < s;
        let in_c = |y: &[f64]| dist(y, &c) <= r;
        let in_g_big = |y: &[f64]| in_g(y) || dist(y, &g2) < 1.85 - 0.3 * (dim as f64).sqrt();
        let in_c_big = |y: &[f64]| in_c(y) || dist(y, &c2) <= 0.5 * r;

        let mut small = Condenser::from_predicates(dim, grid, 2.0, in_g, in_c)?;
        let small = solve_capacity(&mut small, &config)?.value;
        let (big, ok) = if grow_core {
            let mut b = Condenser::from_predicates(dim, grid, 2.0, in_g, in_c_big)?;
            let v = solve_capacity(&mut b, &config)?.value;
            (v, small <= v * (1.0 + SLACK))
        } else {
            let mut b = Condenser::from_predicates(dim, grid, 2.0, in_g_big, in_c)?;
            let v = solve_capacity(&mut b, &config)?.value;
            (v, v <= small * (1.0 + SLACK))
        };
        let margin = if grow_core { (big - small) / big } else { (small - big) / small };
        worst_margin = worst_margin.min(margin);
        let what = if grow_core { "C grows" } else { "G grows" };
        p.require(ok, format!("pair {pair} (n = {dim}, {what}): {small:.5} -> {big:.5}"));
    }
    p.metric("worst_relative_margin", worst_margin);
    Ok(())
}

fn degree_identity(p: &mut Probe, ctx: &Ctx) -> Result<()> {
    for (m_idx, map) in ctx.maps(catalog()).iter().enumerate() {
        let ys = sample_chordal_uniform(map.dim(), 64, derive_seed(ctx.seed, m_idx as u64))?;
        for k in 1..=5u32 {
            let expected = (map.degree() as u64).pow(k);
            let avg = global_average_iterate(map, k, &Region::All, 200, ctx.seed)?;
            let counted: Vec<u64> = ys.iter().map(|y| count_in_iterate(map, k, &Region::All, y)).collect::<Result<_>>()?;
            let all = counted.iter().all(|&c| c == expected);
            p.require(
                avg.estimate == expected as f64 && avg.std_error == 0.0 && all,
                format!("{} k = {k}: A = {} and n(R̄ⁿ, y) = {expected} at 64 points", map.label(), avg.estimate),
            );
        }
    }
    Ok(())
}

fn julia_oracle(p: &mut Probe, ctx: &Ctx) -> Result<()> {
    let f = power(2);
    let cloud = p.timed(Duration::from_secs(60), "sampling and dimension", || {
        let cloud = sample_julia(&f, &pt(&[2.0, 0.0]), 20, 10_000, ctx.seed)?;
        let dim = box_dimension_auto(&cloud.points)?;
        Ok((cloud, dim))
    })?;
    let (cloud, dim) = cloud;
    let off = cloud
        .points
        .iter()
        .map(|x| match x.coords() {
            Some(c) if x.norm() > 0.0 => {
                let n = x.norm();
                x.chordal_to(&pt(&c.iter().map(|v| v / n).collect::<Vec<_>>()))
            }
            _ => f64::INFINITY,
        })
        .fold(0.0, f64::max);
    p.metric("max_distance_to_circle", off);
    p.metric("box_dimension", dim.value);
    p.require(cloud.points.len() == 10_000, "10⁴ points sampled");
    p.require(off <= 0.01, format!("every point within 0.01 of the unit circle (max {off:.2e})"));
    p.require((dim.value - 1.0).abs() <= 0.1, format!("box dimension {:.3} within 0.1 of 1", dim.value));
    Ok(())
}

fn complete_invariance(p: &mut Probe, ctx: &Ctx) -> Result<()> {
    for map in ctx.maps(vec![power(2), basilica(), stretch()]) {
        let hi = julia_cloud(&map, 16, 10_000, derive_seed(ctx.seed, 1))?;
        let lo = sample_julia(&map, &hi.seed, 15, 10_000, derive_seed(ctx.seed, 2))?;
        let image: Vec<ExtendedPoint> = hi.points.iter().map(|x| map.eval(x)).collect();
        let h = hausdorff_distance(&image, &lo.points);
        let spacing = cloud_spacing(&lo.points);
        p.metric(format!("{}_hausdorff", map.label()), h);
        p.metric(format!("{}_spacing", map.label()), spacing);
        p.require(h <= 3.0 * spacing, format!("{}: H(f(cloud), cloud) = {h:.3e} ≤ 3 × {spacing:.3e}", map.label()));
    }
    Ok(())
}

fn exceptional_set(p: &mut Probe, ctx: &Ctx) -> Result<()> {
    let cases: Vec<(MapDescriptor, Option<Vec<ExtendedPoint>>)> = match &ctx.map {
        Some(m) => vec![(m.clone(), None)],
        None => vec![
            (power(2), Some(vec![pt(&[0.0, 0.0]), ExtendedPoint::infinity(2)])),
            (power(3), Some(vec![pt(&[0.0, 0.0]), ExtendedPoint::infinity(2)])),
            (basilica(), Some(vec![ExtendedPoint::infinity(2)])),
        ],
    };
    for (map, expected) in cases {
        let found = exceptional_candidates(&map);
        let points: Vec<ExtendedPoint> = found.iter().map(|e| e.point).collect();
        if let Some(want) = expected {
            let listed: Vec<String> = points.iter().map(|x| x.to_string()).collect();
            p.require(points == want, format!("{} candidates {{{}}}", map.label(), listed.join(", ")));
        }
        p.require(
            found.iter().all(|e| e.class == PeriodicClass::Attracting),
            format!("{}: every candidate attracting", map.label()),
        );
        let cloud = julia_cloud(&map, 16, 10_000, ctx.seed)?;
        let index = ChordalIndex::new(&cloud.points);
        let gap = points.iter().map(|x| index.nearest(x).map_or(f64::INFINITY, |(_, d)| d)).fold(f64::INFINITY, f64::min);
        p.metric(format!("{}_candidate_to_cloud", map.label()), gap);
        p.require(gap > 0.05, format!("{}: candidates at chordal distance {gap:.3} from the cloud", map.label()));
    }
    Ok(())
}

const SCORE_GRIDS: [usize; 3] = [65, 129, 257];

fn expansion_dichotomy(p: &mut Probe, ctx: &Ctx) -> Result<()> {
    let (map, julia_point, fatou_point) = match &ctx.map {
        None => (power(2), pt(&[1.0, 0.0]), Some(pt(&[0.0, 0.0]))),
        Some(m) => {
            let cloud = julia_cloud(m, 16, 1_000, ctx.seed)?;
            let fatou = exceptional_candidates(m).into_iter().find(|e| e.class == PeriodicClass::Attracting).map(|e| e.point);
            (m.clone(), cloud.points[0], fatou)
        }
    };
    let julia = expansion_test(&map, &julia_point, 0.05, 12, 32)?;
    p.metric("julia_covered_fraction", julia.covered_fraction);
    p.require(julia.covered_fraction >= 0.95, format!("covered fraction {:.3} ≥ 0.95 at {julia_point}", julia.covered_fraction));
    if let Some(x) = fatou_point {
        let fatou = expansion_test(&map, &x, 0.05, 12, 32)?;
        p.metric("fatou_covered_fraction", fatou.covered_fraction);
        p.require(fatou.covered_fraction <= 0.1, format!("covered fraction {:.3} ≤ 0.1 at {x}", fatou.covered_fraction));
    }
    if map.dim() != 2 {
        p.note("capacity score computed for n = 2 only");
        return Ok(());
    }
    for grid in SCORE_GRIDS {
        let base = single_cell_baseline(2, grid)?;
        let score = complement_capacity_score(&map, &julia_point, 0.05, 12, grid)?;
        p.metric(format!("grid{grid}_score"), score.score);
        p.metric(format!("grid{grid}_baseline"), base);
        p.require(score.score < 4.0 * base, format!("grid {grid}: score {:.4} < 4 × baseline {base:.4}", score.score));
    }
    Ok(())
}

fn sharpness(p: &mut Probe) -> Result<()> {
    let map = winding(3);
    let x = pt(&[0.0, 1.0]);
    p.note("Winding(3, 2) has deg f = K_I = 3: the hypothesis deg f > K_I is not met");
    let report = expansion_test(&map, &x, 0.05, 12, 32)?;
    let peak = report.coverage_by_iteration.iter().copied().fold(0.0, f64::max);
    p.metric("max_covered_fraction", peak);
    p.require(peak <= 0.5, format!("covered fraction ≤ 0.5 after every iteration (max {peak:.3})"));
    // The orbit of the ball stays near the unit circle, so its complement
    // contains B̄(0, 1/2) in both charts.
    for grid in SCORE_GRIDS {
        let ball = chart_ball_capacity(2, grid, &[0.0, 0.0], 0.5)?;
        let score = complement_capacity_score(&map, &x, 0.05, 12, grid)?;
        p.metric(format!("grid{grid}_score"), score.score);
        p.metric(format!("grid{grid}_ball"), ball);
        p.require(score.score > ball, format!("grid {grid}: score {:.4} > ball baseline {ball:.4}", score.score));
    }
    Ok(())
}

fn measure_suite(p: &mut Probe, ctx: &Ctx) -> Result<()> {
    for map in ctx.maps(vec![power(2), basilica(), stretch()]) {
        let y = e1(map.dim(), 1.0);
        let mut prev = preimage_measure(&map, &y, 0)?;
        let mut ok = prev.total_mass() == Weight::from_integer(1);
        for k in 1..=6 {
            let nu = preimage_measure(&map, &y, k)?;
            ok &= nu.total_mass() == Weight::from_integer(1);
            ok &= nu.pushforward(&map).same_as(&prev);
            prev = nu;
        }
        p.require(ok, format!("{}: ν_k has mass 1 and f_* ν_k = ν_(k-1) for k ≤ 6", map.label()));
    }
    if ctx.map.is_none() {
        let f = power(2);
        let nu6 = preimage_measure(&f, &pt(&[1.0, 0.0]), 6)?;
        let ratio = mass_distribution_check(&nu6, &GaugeFunction::power(1.0)?, &nu6.points(), &[0.2, 0.1, 0.05])?;
        p.metric("power2_max_ratio", ratio);
        p.require(ratio <= 2.0, format!("PowerMap(2) ν_6 against h(t) = t: max ratio {ratio:.4} ≤ 2"));
    }
    Ok(())
}

fn dimension_bounds(p: &mut Probe, ctx: &Ctx) -> Result<()> {
    if ctx.map.is_none() {
        let f = power(2);
        let cloud = sample_julia(&f, &pt(&[2.0, 0.0]), 20, 10_000, ctx.seed)?;
        let audit = separated_preimage_audit(&f, &cloud, 2)?;
        let boxdim = box_dimension_auto(&cloud.points)?.value;
        let bound = audit.dimension_bound.unwrap_or(f64::NAN);
        p.metric("power2_bound", bound);
        p.metric("power2_box_dimension", boxdim);
        p.require((bound - 1.0).abs() <= 0.05, format!("PowerMap(2) bound {bound:.4} within 0.05 of 1"));
        p.require(bound <= boxdim + 0.1, format!("bound {bound:.4} consistent with box dimension {boxdim:.4}"));
    }
    let map = ctx.map.clone().unwrap_or_else(stretch);
    let cloud = julia_cloud(&map, 15, 10_000, derive_seed(ctx.seed, 1))?;
    let audit = separated_preimage_audit(&map, &cloud, map.degree())?;
    let bound = audit.dimension_bound.unwrap_or(0.0);
    p.metric("audit_m", audit.m as f64);
    p.metric("audit_lipschitz", audit.lipschitz);
    p.metric("audit_bound", bound);
    p.require(audit.hypothesis_met && bound > 0.0, format!("{}: dimension bound {bound:.4} > 0 (m = {})", map.label(), audit.m));

    let eps = capacity_gauge_epsilon(map.dim(), map.degree(), map.inner_dilatation());
    let Ok(eps) = eps else {
        p.note("K_I = 1: the logarithmic gauge identity does not apply");
        return Ok(());
    };
    p.metric("gauge_epsilon", eps);
    let y = cloud.seed;
    let mut ratios = Vec::new();
    for k in 6..=8 {
        let nu = preimage_measure(&map, &y, k)?;
        let check = capacity_gauge_check(&nu, map.dim(), eps)?;
        p.metric(format!("gauge_max_ratio_nu{k}"), check.max_ratio);
        ratios.push(check.max_ratio);
    }
    let hi = ratios.iter().copied().fold(0.0, f64::max);
    let lo = ratios.iter().copied().fold(f64::INFINITY, f64::min);
    p.require(hi <= 10.0, format!("gauge max ratio {hi:.4} ≤ 10 for ν_6..ν_8"));
    p.require(hi <= 1.25 * lo, format!("gauge max ratio stable across ν_6..ν_8 ({lo:.4}..{hi:.4})"));
    Ok(())
}

const HOLDER_RADII: [f64; 3] = [0.1, 0.05, 0.025];

fn holder_distortion(p: &mut Probe, ctx: &Ctx) -> Result<()> {
    for map in ctx.maps(catalog()) {
        for (b, _) in map.branch_set().representatives(map.dim()) {
            let mu = holder_exponent(&map, &b);
            let good = holder_stability(&map, &b, mu, &HOLDER_RADII, 4000, ctx.seed)?;
            let bad = holder_stability(&map, &b, mu + 1.0, &HOLDER_RADII, 4000, ctx.seed)?;
            let key = format!("{} at {b}", map.label());
            p.metric(format!("{key}: slope mu"), good.slope);
            p.metric(format!("{key}: slope mu+1"), bad.slope);
            p.require(good.stable(), format!("{key}: stable with μ = {mu:.4} (slope {:.3})", good.slope));
            p.require(!bad.stable(), format!("{key}: unstable with μ + 1 (slope {:.3})", bad.slope));
        }
    }
    Ok(())
}

fn dilatation_composition(p: &mut Probe, ctx: &Ctx) -> Result<()> {
    for map in ctx.maps(vec![stretch(), winding(2)]) {
        let pool = sample_chordal_uniform(map.dim(), 2_000, ctx.seed)?;
        let mut used = 0;
        let mut worst = 0.0f64;
        let mut ok = true;
        for x in pool.iter().filter(|x| (0.3..=1.3).contains(&x.norm())) {
            let checks: Result<Vec<_>> = (1..=3).map(|k| iterate_dilatation_check(&map, x, k, DEFAULT_STEP)).collect();
            let Ok(checks) = checks else { continue };
            for c in &checks {
                worst = worst.max(c.estimate.inner / c.bound);
                ok &= c.within(0.05);
            }
            used += 1;
            if used == 20 {
                break;
            }
        }
        p.metric(format!("{}_worst_ratio", map.label()), worst);
        p.require(used == 20, format!("{}: 20 generic base points", map.label()));
        p.require(ok, format!("{}: K_I(f^k) ≤ 1.05 K_I(f)^k for k ≤ 3 (worst ratio {worst:.4})", map.label()));
    }
    Ok(())
}
