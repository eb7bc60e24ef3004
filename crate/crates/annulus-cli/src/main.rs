//! Command-line runner for the annulus-lab flow scenarios.

use std::collections::BTreeMap;
use std::io::Read;
use std::path::PathBuf;

use anyhow::{bail, Context, Result};
use clap::{Args, Parser, Subcommand};

use annulus_lab::flows::{catalog, FieldSpec, VectorField};
use annulus_lab::geometry::{polar_grid, Point};
use annulus_lab::radial::{eigenpair_mode0, eigenpair_mode1};
use annulus_lab::scenario::{self, Report};
use annulus_lab::stream::stream_on_grid;
use annulus_lab::symmetry::{deficit_sweep, sweep_to_csv};
use annulus_lab::trace::{
    level_polygon, polyline_csv, trace_gradient_curve, trace_streamline, TracerOptions,
};

#[derive(Parser)]
#[command(
    name = "annulus-lab",
    about = "Steady planar flows on annular domains: scenarios, tracing, eigenproblems, moving-planes sweeps",
    version
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// List the compiled-in scenarios and the available checks.
    Scenarios,
    /// Run a scenario (builtin name or JSON config path). Exits nonzero iff
    /// any check records FAIL.
    Run(RunArgs),
    /// Trace a streamline (or gradient curve) and emit a CSV polyline.
    Trace(TraceArgs),
    /// Solve a principal radial Dirichlet eigenproblem and emit CSV samples.
    Eigen(EigenArgs),
    /// Sweep the moving-planes deficit between two traced level curves.
    MovingPlanes(MovingPlanesArgs),
    /// Re-emit a stored report in another format.
    Report(ReportArgs),
}

#[derive(Args)]
struct RunArgs {
    /// Builtin scenario name or path to a JSON config.
    scenario: String,
    #[arg(long, value_parser = ["json", "csv"], default_value = "json")]
    format: String,
    /// Output path (stdout when omitted).
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct TraceArgs {
    /// Catalog flow name or path to a field-definition JSON.
    #[arg(long)]
    field: String,
    /// Catalog parameters as `name=value` (repeatable).
    #[arg(long = "param", value_parser = parse_param)]
    params: Vec<(String, f64)>,
    /// Seed point `x,y`.
    #[arg(long, value_parser = parse_point, allow_hyphen_values = true)]
    seed: Point,
    /// Trace the stream-function gradient instead of the velocity.
    #[arg(long)]
    gradient: bool,
    /// Direction for gradient curves: 1 (ascending) or -1.
    #[arg(long, default_value_t = 1, allow_hyphen_values = true)]
    direction: i8,
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct EigenArgs {
    /// Angular mode of the radial operator: 0 or 1.
    #[arg(long)]
    mode: u8,
    #[arg(long)]
    a: f64,
    #[arg(long)]
    b: f64,
    /// Number of sample radii.
    #[arg(long, default_value_t = 512)]
    n: usize,
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct MovingPlanesArgs {
    /// Catalog flow name or path to a field-definition JSON.
    #[arg(long)]
    field: String,
    #[arg(long = "param", value_parser = parse_param)]
    params: Vec<(String, f64)>,
    /// Stream level of the outer curve.
    #[arg(long, allow_hyphen_values = true)]
    outer_level: f64,
    /// Stream level of the inner curve.
    #[arg(long, allow_hyphen_values = true)]
    inner_level: f64,
    /// Number of sweep directions around the circle.
    #[arg(long, default_value_t = 16)]
    directions: usize,
    /// Comma-separated reflection offsets.
    #[arg(long, value_parser = parse_list, allow_hyphen_values = true)]
    lambdas: std::vec::Vec<f64>,
    /// Audit points per (direction, lambda) cell.
    #[arg(long, default_value_t = 400)]
    audit: usize,
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct ReportArgs {
    #[arg(long, value_parser = ["json", "csv"], default_value = "json")]
    format: String,
    /// Input report JSON (`-` for stdin).
    #[arg(long, default_value = "-")]
    input: String,
    #[arg(long)]
    out: Option<PathBuf>,
}

fn parse_param(s: &str) -> Result<(String, f64), String> {
    let (k, v) = s
        .split_once('=')
        .ok_or_else(|| format!("expected name=value, got `{s}`"))?;
    let v: f64 = v.parse().map_err(|e| format!("bad value in `{s}`: {e}"))?;
    Ok((k.to_string(), v))
}

fn parse_point(s: &str) -> Result<Point, String> {
    let (x, y) = s
        .split_once(',')
        .ok_or_else(|| format!("expected x,y, got `{s}`"))?;
    Ok(Point::new(
        x.trim().parse().map_err(|e| format!("bad x: {e}"))?,
        y.trim().parse().map_err(|e| format!("bad y: {e}"))?,
    ))
}

fn parse_list(s: &str) -> Result<Vec<f64>, String> {
    s.split(',')
        .map(|t| t.trim().parse::<f64>().map_err(|e| format!("bad number `{t}`: {e}")))
        .collect()
}

fn build_field(name_or_path: &str, params: &[(String, f64)]) -> Result<VectorField> {
    let path = std::path::Path::new(name_or_path);
    if path.exists() {
        let text = std::fs::read_to_string(path)
            .with_context(|| format!("reading field definition {name_or_path}"))?;
        let spec: FieldSpec = serde_json::from_str(&text)
            .with_context(|| format!("parsing field definition {name_or_path}"))?;
        return Ok(spec.build()?);
    }
    let map: BTreeMap<String, f64> = params.iter().cloned().collect();
    Ok(catalog::catalog(name_or_path, &map)?)
}

fn emit(out: &Option<PathBuf>, text: &str) -> Result<()> {
    match out {
        Some(path) => {
            std::fs::write(path, text).with_context(|| format!("writing {}", path.display()))?;
            eprintln!("wrote {}", path.display());
        }
        None => print!("{text}"),
    }
    Ok(())
}

fn configure_threads() {
    if let Ok(value) = std::env::var("ANNULUS_LAB_THREADS") {
        if let Ok(n) = value.parse::<usize>() {
            if n >= 1 {
                let _ = rayon::ThreadPoolBuilder::new().num_threads(n).build_global();
            }
        }
    }
}

fn main() {
    configure_threads();
    let cli = Cli::parse();
    match dispatch(cli) {
        Ok(code) => std::process::exit(code),
        Err(err) => {
            eprintln!("error: {err:#}");
            std::process::exit(2);
        }
    }
}

fn dispatch(cli: Cli) -> Result<i32> {
    match cli.command {
        Command::Scenarios => {
            println!("builtin scenarios:");
            for s in scenario::builtin_scenarios() {
                println!("  {:<24} {}", s.name, s.summary);
            }
            println!("\nchecks:");
            for c in scenario::check_registry() {
                println!("  {:<24} {}", c.name, c.summary);
            }
            Ok(0)
        }
        Command::Run(args) => {
            let report = if std::path::Path::new(&args.scenario).exists() {
                let text = std::fs::read_to_string(&args.scenario)
                    .with_context(|| format!("reading {}", args.scenario))?;
                scenario::run_scenario_json(&text)?
            } else {
                let config = scenario::builtin(&args.scenario)?;
                scenario::run_scenario(&config)?
            };
            finish_run(report, &args)
        }
        Command::Trace(args) => {
            let field = build_field(&args.field, &args.params)?;
            let opts = TracerOptions::default();
            let csv = if args.gradient {
                let curve = trace_gradient_curve(&field, args.seed, args.direction, &opts)?;
                eprintln!(
                    "gradient curve: {} vertices, termination {:?}",
                    curve.polyline.len(),
                    curve.termination
                );
                polyline_csv(&field, &curve.times, &curve.polyline)
            } else {
                let orbit = trace_streamline(&field, args.seed, &opts)?;
                eprintln!(
                    "streamline: closed={} period={:?} winding={} r_min={:.6} r_max={:.6}",
                    orbit.closed, orbit.period, orbit.winding, orbit.r_min, orbit.r_max
                );
                polyline_csv(&field, &orbit.times, &orbit.polyline)
            };
            emit(&args.out, &csv)?;
            Ok(0)
        }
        Command::Eigen(args) => {
            let pair = match args.mode {
                0 => eigenpair_mode0(args.a, args.b, args.n)?,
                1 => eigenpair_mode1(args.a, args.b, args.n)?,
                m => bail!("mode must be 0 or 1, got {m}"),
            };
            eprintln!(
                "eigenvalue {:.12} (dense cross-check {:.12}, relative gap {:.2e})",
                pair.eigenvalue,
                pair.fd_eigenvalue,
                ((pair.eigenvalue - pair.fd_eigenvalue) / pair.fd_eigenvalue).abs()
            );
            emit(&args.out, &pair.to_csv())?;
            Ok(0)
        }
        Command::MovingPlanes(args) => {
            let field = build_field(&args.field, &args.params)?;
            let opts = TracerOptions::default();
            let dom = *field.domain();
            let mid = Point::new((dom.trunc_inner * dom.trunc_outer).sqrt(), 0.0);
            let outer = level_polygon(&field, args.outer_level, mid, &opts)?;
            let inner = level_polygon(&field, args.inner_level, mid, &opts)?;
            let grid = polar_grid(&dom, 128, 256)?;
            let base = Point::new(dom.trunc_inner, 0.0);
            let base_value = field.stream_at(base).unwrap_or(0.0);
            let sg = stream_on_grid(&field, &grid, base, base_value)?;
            // the comparator wants the smaller constant on the outer curve
            let sg = if args.outer_level > args.inner_level {
                sg.negated()
            } else {
                sg
            };
            let rows =
                deficit_sweep(&sg, &outer, &inner, args.directions, &args.lambdas, args.audit)?;
            emit(&args.out, &sweep_to_csv(&rows))?;
            Ok(0)
        }
        Command::Report(args) => {
            let text = if args.input == "-" {
                let mut buf = String::new();
                std::io::stdin().read_to_string(&mut buf)?;
                buf
            } else {
                std::fs::read_to_string(&args.input)
                    .with_context(|| format!("reading {}", args.input))?
            };
            let report: Report = serde_json::from_str(&text).context("parsing report JSON")?;
            let rendered = match args.format.as_str() {
                "csv" => report.to_csv(),
                _ => report.to_json(),
            };
            emit(&args.out, &rendered)?;
            Ok(0)
        }
    }
}

fn finish_run(report: Report, args: &RunArgs) -> Result<i32> {
    let rendered = match args.format.as_str() {
        "csv" => report.to_csv(),
        _ => report.to_json(),
    };
    emit(&args.out, &rendered)?;
    for record in &report.records {
        eprintln!(
            "{:<22} {:?}{}",
            record.check,
            record.verdict,
            record
                .message
                .as_deref()
                .map(|m| format!("  ({m})"))
                .unwrap_or_default()
        );
    }
    Ok(if report.any_fail() { 1 } else { 0 })
}
