use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde_json::{json, Value};

use qrlab::capacity::{complement_capacity_score, ring_capacity_exact, solve_capacity, Condenser, SolverConfig};
use qrlab::counting::{global_average_iterate, Region};
use qrlab::dynamics::{sample_julia, JuliaCloud};
use qrlab::fractal::{box_dimension_auto, separated_preimage_audit};
use qrlab::spatial::{cloud_spacing, hausdorff_distance};
use qrlab::verify::{describe, run_suite, CheckStatus, SuiteConfig, CHECK_IDS, DEFAULT_SEED};
use qrlab::{Error, ExtendedPoint, MapDescriptor, MapFamily};

mod output;

const SCHEMA_VERSION: u32 = 1;

#[derive(Parser)]
#[command(name = "qrlab", version, about = "Numerical experiments with quasiregular self-maps of the extended space")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Sample the Julia set by backward iteration.
    Julia(JuliaArgs),
    /// Solve a condenser capacity problem.
    Capacity(CapacityArgs),
    /// Average preimage counts of the iterates.
    Counting(CountingArgs),
    /// Box dimension and preimage audit of a Julia cloud.
    Dimension(JuliaArgs),
    /// Run the verification suite.
    Verify(VerifyArgs),
}

#[derive(Args)]
struct Common {
    /// JSON map descriptor, e.g. {"family": "power", "d": 2}.
    #[arg(long)]
    map: Option<PathBuf>,
    /// Output directory.
    #[arg(long)]
    out: PathBuf,
    #[arg(long)]
    seed: Option<u64>,
    /// Worker threads (default: all cores).
    #[arg(long)]
    threads: Option<usize>,
}

#[derive(Args)]
struct JuliaArgs {
    #[command(flatten)]
    common: Common,
    #[arg(long, default_value_t = 16)]
    depth: u32,
    #[arg(long, default_value_t = 10_000)]
    samples: usize,
    /// Starting point of the backward orbit, comma separated.
    #[arg(long, value_delimiter = ',', allow_hyphen_values = true)]
    start: Option<Vec<f64>>,
}

#[derive(Clone, Copy, ValueEnum)]
enum Geometry {
    Ring,
    Complement,
}

#[derive(Args)]
struct CapacityArgs {
    #[command(flatten)]
    common: Common,
    #[arg(long, value_enum, default_value_t = Geometry::Ring)]
    geometry: Geometry,
    /// Nodes per axis, a power of two plus one.
    #[arg(long, default_value_t = 129)]
    grid: usize,
    /// Dimension of the ring.
    #[arg(long, default_value_t = 2)]
    dim: usize,
    #[arg(long, default_value_t = 1.0)]
    inner: f64,
    #[arg(long, default_value_t = 2.0)]
    outer: f64,
    /// Center of the pushed-forward ball, comma separated.
    #[arg(long, value_delimiter = ',', allow_hyphen_values = true)]
    point: Option<Vec<f64>>,
    /// Chordal radius of the pushed-forward ball.
    #[arg(long, default_value_t = 0.05)]
    radius: f64,
    #[arg(long, default_value_t = 12)]
    iterations: u32,
}

#[derive(Args)]
struct CountingArgs {
    #[command(flatten)]
    common: Common,
    /// Highest iterate counted.
    #[arg(long, default_value_t = 3)]
    depth: u32,
    #[arg(long, default_value_t = 2_000)]
    samples: usize,
    /// Center of a closed Euclidean ball `E`; the whole space when absent.
    #[arg(long, value_delimiter = ',', allow_hyphen_values = true)]
    center: Option<Vec<f64>>,
    #[arg(long, default_value_t = 1.0)]
    radius: f64,
}

#[derive(Args)]
struct VerifyArgs {
    #[command(flatten)]
    common: Common,
    /// Subset of check ids, comma separated.
    #[arg(long, value_delimiter = ',')]
    checks: Option<Vec<u32>>,
}

enum Failure {
    Input(String),
    Checks,
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        match e {
            Error::ExceptionalSeed => Failure::Input(format!(
                "{e}; the Julia set is the closure of the backward orbit of a non-exceptional point, pick another --start"
            )),
            e => Failure::Input(e.to_string()),
        }
    }
}

impl From<std::io::Error> for Failure {
    fn from(e: std::io::Error) -> Self {
        Failure::Input(e.to_string())
    }
}

type Outcome = std::result::Result<(), Failure>;

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = match cli.command {
        Command::Julia(a) => setup(&a.common).and_then(|_| julia(&a)),
        Command::Capacity(a) => setup(&a.common).and_then(|_| capacity(&a)),
        Command::Counting(a) => setup(&a.common).and_then(|_| counting(&a)),
        Command::Dimension(a) => setup(&a.common).and_then(|_| dimension(&a)),
        Command::Verify(a) => setup(&a.common).and_then(|_| verify(&a)),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(Failure::Checks) => ExitCode::from(1),
        Err(Failure::Input(msg)) => {
            eprintln!("error: {msg}");
            ExitCode::from(2)
        }
    }
}

fn setup(common: &Common) -> Outcome {
    if let Some(n) = common.threads {
        if n == 0 {
            return Err(Failure::Input("--threads must be at least 1".into()));
        }
        rayon::ThreadPoolBuilder::new()
            .num_threads(n)
            .build_global()
            .map_err(|e| Failure::Input(e.to_string()))?;
    }
    fs::create_dir_all(&common.out)?;
    Ok(())
}

fn load_map(path: &Path) -> std::result::Result<MapDescriptor, Failure> {
    let text = fs::read_to_string(path).map_err(|e| Failure::Input(format!("{}: {e}", path.display())))?;
    let family: MapFamily = serde_json::from_str(&text).map_err(|e| Failure::Input(format!("{}: {e}", path.display())))?;
    Ok(MapDescriptor::new(family)?)
}

fn require_map(common: &Common) -> std::result::Result<MapDescriptor, Failure> {
    match &common.map {
        Some(p) => load_map(p),
        None => Err(Failure::Input("--map is required for this command".into())),
    }
}

fn point(coords: &[f64], dim: usize) -> std::result::Result<ExtendedPoint, Failure> {
    if coords.len() != dim {
        return Err(Error::DimensionMismatch {
            left: dim,
            right: coords.len(),
        }
        .into());
    }
    Ok(ExtendedPoint::finite(coords)?)
}

fn e1(dim: usize, x: f64) -> ExtendedPoint {
    let mut c = vec![0.0; dim];
    c[0] = x;
    ExtendedPoint::finite(&c).expect("finite")
}

fn envelope(command: &str, map: Option<&MapDescriptor>, seed: u64, anchors: &[u32]) -> serde_json::Map<String, Value> {
    let mut m = serde_json::Map::new();
    m.insert("schema".into(), json!(SCHEMA_VERSION));
    m.insert("tool_version".into(), json!(env!("CARGO_PKG_VERSION")));
    m.insert("command".into(), json!(command));
    m.insert("map".into(), json!(map.map(MapDescriptor::family)));
    m.insert("seed".into(), json!(seed));
    let anchors: Vec<&str> = anchors.iter().filter_map(|&id| describe(id).map(|d| d.1)).collect();
    m.insert("anchors".into(), json!(anchors));
    m
}

fn check_depth_samples(depth: u32, samples: usize) -> Outcome {
    if depth == 0 || samples == 0 {
        return Err(Failure::Input("--depth and --samples must be at least 1".into()));
    }
    Ok(())
}

fn cloud_for(map: &MapDescriptor, args: &JuliaArgs, seed: u64) -> std::result::Result<JuliaCloud, Failure> {
    check_depth_samples(args.depth, args.samples)?;
    let start = match &args.start {
        Some(c) => point(c, map.dim())?,
        None => e1(map.dim(), 2.0),
    };
    Ok(sample_julia(map, &start, args.depth, args.samples, seed)?)
}

fn julia(args: &JuliaArgs) -> Outcome {
    let map = require_map(&args.common)?;
    let seed = args.common.seed.unwrap_or(DEFAULT_SEED);
    let cloud = cloud_for(&map, args, seed)?;
    let out = &args.common.out;
    output::write_points(&out.join("points.csv"), &cloud.points, map.dim())?;
    if map.dim() == 2 {
        output::write_png(&out.join("julia.png"), &cloud.points, 512)?;
    }

    let spacing = cloud_spacing(&cloud.points);
    let mut summary = envelope("julia", Some(&map), seed, &[4, 5]);
    summary.insert("start".into(), json!(cloud.seed));
    summary.insert("depth".into(), json!(cloud.depth));
    summary.insert("count".into(), json!(cloud.points.len()));
    summary.insert("spacing".into(), json!(spacing));
    if cloud.depth >= 2 {
        // Compare f(cloud) with an independent cloud one level shallower.
        let shallow = sample_julia(&map, &cloud.seed, cloud.depth - 1, cloud.points.len(), seed.wrapping_add(1))?;
        let image: Vec<ExtendedPoint> = cloud.points.iter().map(|x| map.eval(x)).collect();
        let residual = hausdorff_distance(&image, &shallow.points);
        summary.insert("invariance_residual".into(), json!(residual));
        summary.insert("invariance_ratio".into(), json!(residual / cloud_spacing(&shallow.points)));
    }
    if let MapFamily::Quadratic { .. } = map.family() {
        let mirrored: Vec<ExtendedPoint> = cloud
            .points
            .iter()
            .map(|x| x.coords().map_or(*x, |c| ExtendedPoint::finite(&[-c[0], -c[1]]).expect("finite")))
            .collect();
        summary.insert("symmetry_residual".into(), json!(hausdorff_distance(&cloud.points, &mirrored)));
    }
    output::write_json(&out.join("summary.json"), &Value::Object(summary))?;
    Ok(())
}

fn check_grid(grid: usize) -> Outcome {
    if grid < 9 || !(grid - 1).is_power_of_two() {
        return Err(Failure::Input(format!("--grid must be a power of two plus one, at least 9; got {grid}")));
    }
    Ok(())
}

fn capacity(args: &CapacityArgs) -> Outcome {
    check_grid(args.grid)?;
    let seed = args.common.seed.unwrap_or(DEFAULT_SEED);
    let out = &args.common.out;
    match args.geometry {
        Geometry::Ring => {
            let exact = ring_capacity_exact(args.dim, args.inner, args.outer)?;
            let mut c = Condenser::ring(args.dim, args.inner, args.outer, args.grid)?;
            let result = solve_capacity(&mut c, &SolverConfig::default())?;
            let mut doc = envelope("capacity", None, seed, &[1]);
            doc.insert("geometry".into(), json!("ring"));
            doc.insert("dim".into(), json!(args.dim));
            doc.insert("inner".into(), json!(args.inner));
            doc.insert("outer".into(), json!(args.outer));
            doc.insert("grid".into(), json!(args.grid));
            doc.insert("grid_spacing".into(), json!(result.grid_spacing));
            doc.insert("value".into(), json!(result.value));
            doc.insert("exact".into(), json!(exact));
            doc.insert("relative_error".into(), json!((result.value - exact) / exact));
            doc.insert("converged".into(), json!(result.converged));
            doc.insert("iterations".into(), json!(result.iterations));
            output::write_json(&out.join("capacity.json"), &Value::Object(doc))?;
            output::write_series(&out.join("energy.csv"), "iteration,energy", &result.energy_history)?;
        }
        Geometry::Complement => {
            let map = require_map(&args.common)?;
            let x = match &args.point {
                Some(c) => point(c, map.dim())?,
                None => e1(map.dim(), 1.0),
            };
            let score = complement_capacity_score(&map, &x, args.radius, args.iterations, args.grid)?;
            let mut doc = envelope("capacity", Some(&map), seed, &[7]);
            doc.insert("geometry".into(), json!("complement"));
            doc.insert("point".into(), json!(x));
            doc.insert("radius".into(), json!(args.radius));
            doc.insert("iterations".into(), json!(args.iterations));
            doc.insert("grid".into(), json!(args.grid));
            doc.insert("value".into(), json!(score.score));
            doc.insert("chart_values".into(), json!(score.chart_values));
            doc.insert("complement_fraction".into(), json!(score.complement_fraction));
            doc.insert("sphere_resolution".into(), json!(score.sphere_resolution));
            output::write_json(&out.join("capacity.json"), &Value::Object(doc))?;
        }
    }
    Ok(())
}

fn counting(args: &CountingArgs) -> Outcome {
    let map = require_map(&args.common)?;
    check_depth_samples(args.depth, args.samples)?;
    let seed = args.common.seed.unwrap_or(DEFAULT_SEED);
    let region = match &args.center {
        Some(c) => Region::euclidean_ball(point(c, map.dim())?, args.radius)?,
        None => Region::All,
    };
    let mut rows = Vec::new();
    for k in 1..=args.depth {
        let avg = global_average_iterate(&map, k, &region, args.samples, seed)?;
        rows.push(json!({
            "k": k,
            "estimate": avg.estimate,
            "std_error": avg.std_error,
            "samples": avg.samples,
            "exact": avg.exact,
            "degree_power": (map.degree() as u64).pow(k),
        }));
    }
    let out = &args.common.out;
    output::write_rows(
        &out.join("counting.csv"),
        &["k", "estimate", "std_error", "samples", "exact", "degree_power"],
        &rows,
    )?;
    let mut doc = envelope("counting", Some(&map), seed, &[3]);
    doc.insert("region".into(), json!(match &args.center {
        Some(c) => json!({"center": c, "radius": args.radius}),
        None => json!("all"),
    }));
    doc.insert("rows".into(), Value::Array(rows));
    output::write_json(&out.join("counting.json"), &Value::Object(doc))?;
    Ok(())
}

fn dimension(args: &JuliaArgs) -> Outcome {
    let map = require_map(&args.common)?;
    let seed = args.common.seed.unwrap_or(DEFAULT_SEED);
    let cloud = cloud_for(&map, args, seed)?;
    let estimate = box_dimension_auto(&cloud.points)?;
    let audit = separated_preimage_audit(&map, &cloud, map.degree())?;
    let out = &args.common.out;
    let ladder: Vec<Value> = estimate.scales_used.iter().map(|(s, n)| json!({"scale": s, "boxes": n})).collect();
    output::write_rows(&out.join("scales.csv"), &["scale", "boxes"], &ladder)?;
    let mut doc = envelope("dimension", Some(&map), seed, &[10]);
    doc.insert("start".into(), json!(cloud.seed));
    doc.insert("depth".into(), json!(cloud.depth));
    doc.insert("count".into(), json!(cloud.points.len()));
    doc.insert("box_dimension".into(), json!(estimate.value));
    doc.insert("fit_r2".into(), json!(estimate.fit_r2));
    doc.insert("audit".into(), json!(audit));
    output::write_json(&out.join("dimension.json"), &Value::Object(doc))?;
    Ok(())
}

fn verify(args: &VerifyArgs) -> Outcome {
    let map = args.common.map.as_deref().map(load_map).transpose()?;
    let checks = args.checks.clone().unwrap_or_else(|| CHECK_IDS.to_vec());
    if let Some(bad) = checks.iter().find(|id| describe(**id).is_none()) {
        return Err(Failure::Input(format!("no check with id {bad}")));
    }
    let config = SuiteConfig {
        seed: args.common.seed.unwrap_or(DEFAULT_SEED),
        map,
        checks,
    };
    let report = run_suite(&config)?;
    for c in &report.checks {
        let tag = match c.status {
            CheckStatus::Pass => "PASS",
            CheckStatus::Fail => "FAIL",
            CheckStatus::Skipped => "SKIP",
            CheckStatus::HypothesisNotMet => "N/A ",
        };
        println!("{tag} {:>2} {} [{}]", c.id, c.name, c.anchor);
        if c.status == CheckStatus::Fail {
            for line in c.detail.iter().filter(|l| l.starts_with("failed")) {
                println!("        {line}");
            }
        }
    }
    let value = serde_json::to_value(&report).map_err(|e| Failure::Input(e.to_string()))?;
    output::write_json(&args.common.out.join("report.json"), &value)?;
    if report.any_failed() {
        return Err(Failure::Checks);
    }
    Ok(())
}
