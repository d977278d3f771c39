//! Command-line front end: measure one mask, generate a corpus, score
//! predictions, render a 17-segment bullseye, or time the pipeline stages.
//!
//! Exit codes: 0 success, 1 domain error (one `error=<Kind> detail=...`
//! line on stderr), 2 usage error.

use std::path::{Path, PathBuf};
use std::process::ExitCode;
use std::time::Instant;

use clap::{Args, Parser, Subcommand, ValueEnum};
use thickmap::io::{
    floats_to_pfm, read_boundary_labels_file, read_mask_file, read_thickness_file,
    sidecar_spacing, write_thickness_file,
};
use thickmap::{
    assemble_17, bullseye_svg, eval_dataset, extract_boundaries, fill_missing, label_regions,
    measure, measure_with_boundaries, read_manifest, segments_to_csv, solve, splat, tangent_field,
    trace, write_eval_report, Assigned, BinaryMask, Error, Measurement, Region, Result,
    RotationSense, ShapeRecipe, SolveDomain, SolverConfig, Streamline, DEFAULT_SPACING_MM,
};

#[derive(Parser)]
#[command(name = "thickmap", version, about = "Wall-thickness maps from binary annular masks")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Measure per-pixel wall thickness of one mask.
    Measure(MeasureArgs),
    /// Generate a synthetic mask + thickness corpus.
    Synth(SynthArgs),
    /// Score predicted thickness maps against references.
    Eval(EvalArgs),
    /// Assemble a 17-segment report and render it as a bullseye SVG.
    Aha(AhaArgs),
    /// Time the pipeline stages on one mask (CSV on stderr).
    Bench(BenchArgs),
    /// Print version and built-in defaults.
    Info,
}

#[derive(Args)]
struct MeasureArgs {
    /// Solver settings as JSON; explicit flags override its fields.
    #[arg(long, value_name = "F")]
    config: Option<PathBuf>,
    /// Pixel spacing in mm; overrides any sidecar value.
    #[arg(long, value_name = "MM", value_parser = parse_positive)]
    spacing: Option<f64>,
    /// Streamline step size in pixels.
    #[arg(long, value_name = "PX", value_parser = parse_positive)]
    ds: Option<f64>,
    /// Relaxation factor for the potential solve, in (0, 2).
    #[arg(long, value_name = "W", value_parser = parse_omega)]
    omega: Option<f64>,
    /// Write the converged potential as PFM (NaN off the wall).
    #[arg(long, value_name = "P")]
    dump_psi: Option<PathBuf>,
    /// Write per-pixel provenance as PGM: 0 none, 128 filled, 255 splatted.
    #[arg(long, value_name = "P")]
    dump_flags: Option<PathBuf>,
    /// Manual surface labels as PGM: 0 none, 128 inner, 255 outer.
    #[arg(long, value_name = "LABELS.pgm")]
    boundaries: Option<PathBuf>,
    /// Input mask, PGM P5 or P2 (any nonzero pixel is wall).
    #[arg(value_name = "IN.pgm")]
    input: PathBuf,
    /// Output thickness map, PFM (32-bit float, mm).
    #[arg(short, value_name = "OUT.pfm")]
    output: PathBuf,
}

#[derive(Args)]
struct SynthArgs {
    /// Number of items to generate.
    #[arg(short = 'n', value_name = "COUNT", value_parser = clap::value_parser!(u64).range(1..))]
    count: u64,
    /// Output directory (masks/, thickness/, manifest.csv, recipe.json).
    #[arg(short, value_name = "DIR")]
    output: PathBuf,
    /// Master seed; item seeds derive from it.
    #[arg(long, value_name = "S")]
    seed: Option<u64>,
    /// Shape recipe as JSON; missing fields keep their defaults.
    #[arg(long, value_name = "F")]
    recipe: Option<PathBuf>,
    /// Worker threads; output bytes do not depend on this.
    #[arg(long, value_name = "N", value_parser = clap::value_parser!(u64).range(1..))]
    jobs: Option<u64>,
}

#[derive(Args)]
struct EvalArgs {
    /// Directory holding predicted maps under the manifest's paths.
    #[arg(long, value_name = "DIR")]
    pred: PathBuf,
    /// Directory holding reference maps under the manifest's paths.
    #[arg(long, value_name = "DIR")]
    gt: PathBuf,
    /// Dataset manifest CSV.
    #[arg(long, value_name = "CSV")]
    manifest: PathBuf,
    /// Write the full report here (plus .csv and .hist.csv siblings).
    #[arg(short, value_name = "REPORT.json")]
    output: Option<PathBuf>,
    /// Average over the whole image instead of reference wall pixels.
    #[arg(long)]
    whole: bool,
}

#[derive(Args)]
struct AhaArgs {
    /// Basal, mid and apical thickness maps, in that order.
    #[arg(long, value_name = "PFM", num_args = 3, required = true)]
    maps: Vec<PathBuf>,
    /// Apex thickness in mm (segment 17).
    #[arg(long, value_name = "MM", value_parser = parse_non_negative)]
    apex: f64,
    /// Angle where sector 0 opens, degrees, y-up from the x axis.
    #[arg(long, value_name = "DEG", default_value_t = 0.0)]
    angle: f64,
    /// Direction segment indices advance.
    #[arg(long, value_enum, default_value_t = Sense::Ccw)]
    sense: Sense,
    /// Output SVG; the segment CSV goes to stdout.
    #[arg(short, value_name = "OUT.svg")]
    output: PathBuf,
}

#[derive(Args)]
struct BenchArgs {
    /// Input mask, PGM.
    #[arg(value_name = "IN.pgm")]
    input: PathBuf,
}

#[derive(Clone, Copy, ValueEnum)]
enum Sense {
    Cw,
    Ccw,
}

impl From<Sense> for RotationSense {
    fn from(s: Sense) -> RotationSense {
        match s {
            Sense::Cw => RotationSense::Clockwise,
            Sense::Ccw => RotationSense::CounterClockwise,
        }
    }
}

fn parse_positive(s: &str) -> std::result::Result<f64, String> {
    let v: f64 = s.parse().map_err(|_| format!("not a number: {s}"))?;
    if v > 0.0 && v.is_finite() {
        Ok(v)
    } else {
        Err(format!("must be positive and finite, got {v}"))
    }
}

fn parse_non_negative(s: &str) -> std::result::Result<f64, String> {
    let v: f64 = s.parse().map_err(|_| format!("not a number: {s}"))?;
    if v >= 0.0 && v.is_finite() {
        Ok(v)
    } else {
        Err(format!("must be non-negative and finite, got {v}"))
    }
}

fn parse_omega(s: &str) -> std::result::Result<f64, String> {
    let v: f64 = s.parse().map_err(|_| format!("not a number: {s}"))?;
    if v > 0.0 && v < 2.0 {
        Ok(v)
    } else {
        Err(format!("omega must lie in (0, 2), got {v}"))
    }
}

/// Print to stdout, exiting quietly if the reader hung up (e.g. `| head`).
fn emit(text: &str) {
    use std::io::Write;
    if std::io::stdout().write_all(text.as_bytes()).is_err() {
        std::process::exit(0);
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli.command) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error={} detail={}", e.kind(), e);
            ExitCode::from(1)
        }
    }
}

fn run(command: Command) -> Result<()> {
    match command {
        Command::Measure(args) => run_measure(args),
        Command::Synth(args) => run_synth(args),
        Command::Eval(args) => run_eval(args),
        Command::Aha(args) => run_aha(args),
        Command::Bench(args) => run_bench(args),
        Command::Info => run_info(),
    }
}

fn read_text(path: &Path) -> Result<String> {
    std::fs::read_to_string(path).map_err(|e| Error::Io { path: path.to_path_buf(), source: e })
}

/// Flag > sidecar JSON > built-in default, then load the mask at that spacing.
fn load_input_mask(path: &Path, spacing_flag: Option<f64>) -> Result<BinaryMask> {
    let spacing = match spacing_flag {
        Some(s) => s,
        None => sidecar_spacing(path)?.unwrap_or(DEFAULT_SPACING_MM),
    };
    read_mask_file(path, Some(spacing))
}

fn resolve_config(args: &MeasureArgs) -> Result<SolverConfig> {
    let mut cfg = match &args.config {
        Some(path) => SolverConfig::from_json(&read_text(path)?)?,
        None => SolverConfig::default(),
    };
    if let Some(ds) = args.ds {
        cfg.step_px = ds;
    }
    if let Some(omega) = args.omega {
        cfg.omega = omega;
    }
    cfg.validate()?;
    Ok(cfg)
}

fn run_measure(args: MeasureArgs) -> Result<()> {
    let cfg = resolve_config(&args)?;
    let mask = load_input_mask(&args.input, args.spacing)?;
    let result = match &args.boundaries {
        Some(path) => {
            let labels = read_boundary_labels_file(path)?;
            measure_with_boundaries(&mask, &labels, &cfg)?
        }
        None => measure(&mask, &cfg)?,
    };
    write_thickness_file(&args.output, &result.thickness)?;
    if let Some(path) = &args.dump_psi {
        let bytes = floats_to_pfm(result.field.geometry, result.field.values());
        std::fs::write(path, bytes).map_err(|e| Error::Io { path: path.clone(), source: e })?;
    }
    if let Some(path) = &args.dump_flags {
        std::fs::write(path, flags_to_pgm(&result))
            .map_err(|e| Error::Io { path: path.clone(), source: e })?;
    }
    emit(&format!(
        "mean_mm={:.3} max_mm={:.3}\n",
        result.thickness.mean_mm(),
        result.thickness.max_mm()
    ));
    Ok(())
}

/// Provenance image: which pixels a streamline touched vs. interpolation.
fn flags_to_pgm(result: &Measurement) -> Vec<u8> {
    let g = result.thickness.geometry;
    let mut out = format!("P5\n{} {}\n255\n", g.width, g.height).into_bytes();
    out.extend(result.thickness.assignments().iter().map(|a| match a {
        Assigned::Zero => 0u8,
        Assigned::Interpolated => 128,
        Assigned::Splatted => 255,
    }));
    out
}

fn run_synth(args: SynthArgs) -> Result<()> {
    let recipe = match &args.recipe {
        Some(path) => ShapeRecipe::from_json(&read_text(path)?)?,
        None => ShapeRecipe::default(),
    };
    let seed = args.seed.unwrap_or(SolverConfig::default().seed);
    let count = args.count as usize;
    let manifest = match args.jobs {
        Some(jobs) => {
            let pool = rayon::ThreadPoolBuilder::new()
                .num_threads(jobs as usize)
                .build()
                .map_err(|e| Error::Config(format!("worker pool: {e}")))?;
            pool.install(|| thickmap::gen_dataset(&args.output, count, seed, &recipe))?
        }
        None => thickmap::gen_dataset(&args.output, count, seed, &recipe)?,
    };
    emit(&format!("items={}\n", manifest.entries.len()));
    Ok(())
}

fn run_eval(args: EvalArgs) -> Result<()> {
    let manifest = read_manifest(&args.manifest)?;
    let region = if args.whole { Region::Whole } else { Region::Mask };
    let report = eval_dataset(&args.pred, &args.gt, &manifest, region)?;
    if let Some(path) = &args.output {
        write_eval_report(path, &report)?;
    }
    emit(&format!(
        "n={} mae_mm={} mse_mm2={}\n",
        report.n_items, report.mae_summary, report.mse_summary
    ));
    Ok(())
}

fn run_aha(args: AhaArgs) -> Result<()> {
    let basal = read_thickness_file(&args.maps[0], None)?;
    let mid = read_thickness_file(&args.maps[1], None)?;
    let apical = read_thickness_file(&args.maps[2], None)?;
    let sense: RotationSense = args.sense.into();
    let segments = assemble_17(&basal, &mid, &apical, args.apex, args.angle, sense)?;
    // Color range pinned to the data so reruns are byte-identical.
    let hi = segments.iter().fold(0.0f64, |a, &b| a.max(b)).max(1.0);
    let svg = bullseye_svg(&segments, (0.0, hi), args.angle, sense)?;
    std::fs::write(&args.output, svg)
        .map_err(|e| Error::Io { path: args.output.clone(), source: e })?;
    emit(&segments_to_csv(&segments));
    Ok(())
}

fn run_bench(args: BenchArgs) -> Result<()> {
    let mask = load_input_mask(&args.input, None)?;
    let cfg = SolverConfig::default();
    let total = Instant::now();

    let regions = label_regions(&mask);
    let bc = extract_boundaries(&regions, cfg.inner_potential)?;
    let domain = SolveDomain::from_regions(&regions, &bc);

    let t = Instant::now();
    let field = solve(&domain, &cfg)?;
    let solve_ms = t.elapsed().as_secs_f64() * 1e3;

    let t = Instant::now();
    let tangents = tangent_field(&field, &domain, &cfg);
    let lines: Vec<Streamline> = domain
        .starts()
        .iter()
        .map(|&s| trace(&tangents, &field, &domain, s, &cfg))
        .collect();
    let trace_ms = t.elapsed().as_secs_f64() * 1e3;

    let t = Instant::now();
    let partial = splat(&lines, &domain)?;
    let splat_ms = t.elapsed().as_secs_f64() * 1e3;

    let t = Instant::now();
    let thickness = fill_missing(partial, &field, &domain, &cfg)?;
    let fill_ms = t.elapsed().as_secs_f64() * 1e3;
    let total_ms = total.elapsed().as_secs_f64() * 1e3;

    eprintln!("stage,milliseconds");
    eprintln!("solve,{solve_ms:.3}");
    eprintln!("trace,{trace_ms:.3}");
    eprintln!("splat,{splat_ms:.3}");
    eprintln!("fill,{fill_ms:.3}");
    eprintln!("total,{total_ms:.3}");
    emit(&format!(
        "mean_mm={:.3} max_mm={:.3} iterations_used={} lines_traced={}\n",
        thickness.mean_mm(),
        thickness.max_mm(),
        field.iterations_used,
        lines.len()
    ));
    Ok(())
}

fn run_info() -> Result<()> {
    let cfg = serde_json::to_string_pretty(&SolverConfig::default())
        .map_err(|e| Error::Config(format!("config serialization: {e}")))?;
    let recipe = serde_json::to_string_pretty(&ShapeRecipe::default())
        .map_err(|e| Error::Config(format!("recipe serialization: {e}")))?;
    emit(&format!("thickmap {}\n", env!("CARGO_PKG_VERSION")));
    emit(&format!("default solver config:\n{cfg}\n"));
    emit(&format!("default shape recipe:\n{recipe}\n"));
    Ok(())
}
