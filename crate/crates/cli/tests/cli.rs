//! End-to-end tests driving the built binary through every subcommand.

use std::fs;
use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use tempfile::TempDir;
use thickmap::io::{load_pfm, read_thickness_file, write_mask_file, write_sidecar_spacing};
use thickmap::{BinaryMask, GridGeometry};

fn bin() -> Command {
    Command::new(env!("CARGO_BIN_EXE_thickmap"))
}

fn run(args: &[&str]) -> Output {
    bin().args(args).output().expect("binary runs")
}

fn stdout(out: &Output) -> String {
    String::from_utf8_lossy(&out.stdout).into_owned()
}

fn stderr(out: &Output) -> String {
    String::from_utf8_lossy(&out.stderr).into_owned()
}

fn code(out: &Output) -> i32 {
    out.status.code().expect("no signal")
}

fn annulus_mask(size: usize, c: f64, r_in: f64, r_out: f64) -> BinaryMask {
    let g = GridGeometry::new(size, size, 1.0).unwrap();
    let mut mask = BinaryMask::filled(g, false);
    for y in 0..size {
        for x in 0..size {
            let d = ((x as f64 - c).powi(2) + (y as f64 - c).powi(2)).sqrt();
            if d >= r_in && d < r_out {
                mask.set_wall(x, y, true);
            }
        }
    }
    mask
}

/// 65 px annulus with a 1 mm sidecar; returns the mask path.
fn annulus_fixture(dir: &Path) -> PathBuf {
    let path = dir.join("ann.pgm");
    write_mask_file(&path, &annulus_mask(65, 32.0, 20.0, 30.0)).unwrap();
    write_sidecar_spacing(&path.with_extension("json"), 1.0).unwrap();
    path
}

fn parse_kv(line: &str, key: &str) -> f64 {
    line.split_whitespace()
        .find_map(|tok| tok.strip_prefix(&format!("{key}=")))
        .unwrap_or_else(|| panic!("{key} missing in {line:?}"))
        .parse()
        .unwrap()
}

#[test]
fn measure_reports_ring_width_and_writes_the_map() {
    let dir = TempDir::new().unwrap();
    let input = annulus_fixture(dir.path());
    let out = dir.path().join("out.pfm");
    let res = run(&["measure", input.to_str().unwrap(), "-o", out.to_str().unwrap()]);
    assert_eq!(code(&res), 0, "stderr: {}", stderr(&res));
    let line = stdout(&res);
    let mean = parse_kv(&line, "mean_mm");
    let max = parse_kv(&line, "max_mm");
    assert!((mean - 10.0).abs() <= 0.2, "mean {mean}");
    assert!(max < 12.0 && max > mean);
    let map = read_thickness_file(&out, Some(1.0)).unwrap();
    assert!((map.mean_mm() - mean).abs() < 1e-3);
    // Same argv, same bytes.
    let again = run(&["measure", input.to_str().unwrap(), "-o", out.to_str().unwrap()]);
    assert_eq!(stdout(&again), line);
}

#[test]
fn spacing_flag_beats_the_sidecar() {
    let dir = TempDir::new().unwrap();
    let input = annulus_fixture(dir.path());
    let out = dir.path().join("out.pfm");
    let res = run(&[
        "measure",
        "--spacing",
        "2.0",
        input.to_str().unwrap(),
        "-o",
        out.to_str().unwrap(),
    ]);
    assert_eq!(code(&res), 0);
    let mean = parse_kv(&stdout(&res), "mean_mm");
    assert!((mean - 20.0).abs() <= 0.4, "mean {mean}");
}

#[test]
fn solid_disk_fails_with_a_parseable_error() {
    let dir = TempDir::new().unwrap();
    let input = dir.path().join("disk.pgm");
    write_mask_file(&input, &annulus_mask(65, 32.0, 0.0, 30.0)).unwrap();
    let out = dir.path().join("out.pfm");
    let res = run(&["measure", input.to_str().unwrap(), "-o", out.to_str().unwrap()]);
    assert_eq!(code(&res), 1);
    let err = stderr(&res);
    assert!(err.starts_with("error=NoInnerBoundary detail="), "stderr: {err}");
    assert_eq!(err.lines().count(), 1);
    assert!(!out.exists());
}

#[test]
fn bad_flags_and_values_are_usage_errors() {
    let dir = TempDir::new().unwrap();
    let input = annulus_fixture(dir.path());
    let out = dir.path().join("out.pfm");
    let o = out.to_str().unwrap();
    let i = input.to_str().unwrap();
    assert_eq!(code(&run(&["measure", "--omega", "3.0", i, "-o", o])), 2);
    assert_eq!(code(&run(&["measure", "--frobnicate", i, "-o", o])), 2);
    assert_eq!(code(&run(&["measure", i])), 2, "missing -o");
    assert_eq!(code(&run(&["synth", "-o", o])), 2, "missing -n");
    assert_eq!(code(&run(&["measure", "--spacing", "nope", i, "-o", o])), 2);
    assert_eq!(code(&run(&["--help"])), 0);
}

#[test]
fn bad_config_file_is_a_domain_error() {
    let dir = TempDir::new().unwrap();
    let input = annulus_fixture(dir.path());
    let cfg = dir.path().join("cfg.json");
    fs::write(&cfg, "{\"omega\": 3.0}\n").unwrap();
    let out = dir.path().join("out.pfm");
    let res = run(&[
        "measure",
        "--config",
        cfg.to_str().unwrap(),
        input.to_str().unwrap(),
        "-o",
        out.to_str().unwrap(),
    ]);
    assert_eq!(code(&res), 1);
    assert!(stderr(&res).starts_with("error=Config"), "stderr: {}", stderr(&res));
}

#[test]
fn measure_dumps_debug_images_when_asked() {
    let dir = TempDir::new().unwrap();
    let input = annulus_fixture(dir.path());
    let out = dir.path().join("out.pfm");
    let psi = dir.path().join("psi.pfm");
    let flags = dir.path().join("flags.pgm");
    let res = run(&[
        "measure",
        "--dump-psi",
        psi.to_str().unwrap(),
        "--dump-flags",
        flags.to_str().unwrap(),
        input.to_str().unwrap(),
        "-o",
        out.to_str().unwrap(),
    ]);
    assert_eq!(code(&res), 0, "stderr: {}", stderr(&res));
    let (g, values) = load_pfm(&fs::read(&psi).unwrap(), Some(1.0)).unwrap();
    assert_eq!((g.width, g.height), (65, 65));
    // Cavity pixels hold no potential; wall pixels hold one in [0, 1].
    assert!(values[g.index(32, 32)].is_nan());
    let mid = values[g.index(32, 7)];
    assert!((0.0..=1.0).contains(&mid), "psi {mid}");
    let flag_bytes = fs::read(&flags).unwrap();
    assert!(flag_bytes.starts_with(b"P5\n65 65\n255\n"));
    assert!(flag_bytes.contains(&255u8));
}

#[test]
fn manual_boundaries_drive_the_slab_pipeline() {
    use thickmap::io::write_boundary_labels_file;
    use thickmap::{BoundaryLabel, BoundaryLabels};
    let dir = TempDir::new().unwrap();
    // A 5-wide wall slab with background margins; the surface pixels get
    // labeled so the background flanking them carries the pinned values.
    let g = GridGeometry::new(7, 5, 1.0).unwrap();
    let mut mask = BinaryMask::filled(g, false);
    for y in 0..5 {
        for x in 1..=5 {
            mask.set_wall(x, y, true);
        }
    }
    let input = dir.path().join("slab.pgm");
    write_mask_file(&input, &mask).unwrap();
    write_sidecar_spacing(&input.with_extension("json"), 1.0).unwrap();
    let mut labels = vec![BoundaryLabel::None; g.len()];
    for y in 0..5 {
        labels[g.index(1, y)] = BoundaryLabel::Inner;
        labels[g.index(5, y)] = BoundaryLabel::Outer;
    }
    let labels_path = dir.path().join("labels.pgm");
    write_boundary_labels_file(&labels_path, &BoundaryLabels::new(g, labels).unwrap()).unwrap();
    let out = dir.path().join("out.pfm");
    let res = run(&[
        "measure",
        "--boundaries",
        labels_path.to_str().unwrap(),
        input.to_str().unwrap(),
        "-o",
        out.to_str().unwrap(),
    ]);
    assert_eq!(code(&res), 0, "stderr: {}", stderr(&res));
    let mean = parse_kv(&stdout(&res), "mean_mm");
    assert!((mean - 5.0).abs() <= 0.25, "mean {mean}");
}

fn small_recipe_file(dir: &Path) -> PathBuf {
    let path = dir.join("recipe.json");
    fs::write(
        &path,
        "{\"image_size\": 96, \"r_inner_range\": [8.0, 20.0], \"wall_width_range\": [3.0, 12.0], \
         \"center_jitter_px\": 4.0, \"elastic_alpha\": 20.0, \"pwa_jitter_px\": 3.0}\n",
    )
    .unwrap();
    path
}

fn tree_bytes(root: &Path) -> Vec<(String, Vec<u8>)> {
    let mut files = Vec::new();
    let mut stack = vec![root.to_path_buf()];
    while let Some(dir) = stack.pop() {
        for entry in fs::read_dir(&dir).unwrap() {
            let path = entry.unwrap().path();
            if path.is_dir() {
                stack.push(path);
            } else {
                let rel = path.strip_prefix(root).unwrap().to_string_lossy().into_owned();
                files.push((rel, fs::read(&path).unwrap()));
            }
        }
    }
    files.sort();
    files
}

#[test]
fn synth_output_is_byte_identical_across_reruns_and_job_counts() {
    let dir = TempDir::new().unwrap();
    let recipe = small_recipe_file(dir.path());
    let r = recipe.to_str().unwrap();
    let a = dir.path().join("a");
    let b = dir.path().join("b");
    let run_a = run(&["synth", "-n", "3", "-o", a.to_str().unwrap(), "--seed", "7", "--recipe", r, "--jobs", "1"]);
    let run_b = run(&["synth", "-n", "3", "-o", b.to_str().unwrap(), "--seed", "7", "--recipe", r, "--jobs", "2"]);
    assert_eq!(code(&run_a), 0, "stderr: {}", stderr(&run_a));
    assert_eq!(code(&run_b), 0, "stderr: {}", stderr(&run_b));
    assert_eq!(stdout(&run_a), "items=3\n");
    assert_eq!(tree_bytes(&a), tree_bytes(&b));
    let names: Vec<String> = tree_bytes(&a).into_iter().map(|(n, _)| n).collect();
    assert!(names.contains(&"manifest.csv".to_string()));
    assert!(names.contains(&"recipe.json".to_string()));
    assert!(names.iter().any(|n| n.starts_with("masks/")));
    assert!(names.iter().any(|n| n.starts_with("thickness/")));
}

#[test]
fn eval_scores_a_dataset_and_writes_the_report_family() {
    let dir = TempDir::new().unwrap();
    let recipe = small_recipe_file(dir.path());
    let ds = dir.path().join("ds");
    let made = run(&[
        "synth", "-n", "3", "-o", ds.to_str().unwrap(), "--seed", "11", "--recipe",
        recipe.to_str().unwrap(),
    ]);
    assert_eq!(code(&made), 0, "stderr: {}", stderr(&made));
    let manifest = ds.join("manifest.csv");
    let report = dir.path().join("report.json");
    let d = ds.to_str().unwrap();
    let res = run(&[
        "eval", "--pred", d, "--gt", d, "--manifest", manifest.to_str().unwrap(), "-o",
        report.to_str().unwrap(),
    ]);
    assert_eq!(code(&res), 0, "stderr: {}", stderr(&res));
    assert_eq!(stdout(&res), "n=3 mae_mm=0.000(0.000) mse_mm2=0.000(0.000)\n");
    let parsed: serde_json::Value =
        serde_json::from_str(&fs::read_to_string(&report).unwrap()).unwrap();
    assert_eq!(parsed["n_items"], 3);
    let csv = fs::read_to_string(report.with_extension("csv")).unwrap();
    assert!(csv.starts_with("id,mae_mm,mse_mm2,max_reference_mm,max_predicted_mm"));
    let hist = fs::read_to_string(report.with_extension("hist.csv")).unwrap();
    assert!(hist.starts_with("bin_lo_mm,bin_hi_mm,reference_count,predicted_count"));
    assert_eq!(hist.lines().count(), 33);
    // Whole-image averaging is still an exact self-match.
    let whole = run(&["eval", "--pred", d, "--gt", d, "--manifest", manifest.to_str().unwrap(), "--whole"]);
    assert_eq!(code(&whole), 0);
    assert_eq!(stdout(&whole), "n=3 mae_mm=0.000(0.000) mse_mm2=0.000(0.000)\n");
}

#[test]
fn aha_renders_the_bullseye_and_prints_the_csv() {
    let dir = TempDir::new().unwrap();
    let input = annulus_fixture(dir.path());
    let map = dir.path().join("slice.pfm");
    let measured = run(&["measure", input.to_str().unwrap(), "-o", map.to_str().unwrap()]);
    assert_eq!(code(&measured), 0);
    let m = map.to_str().unwrap();
    let svg_path = dir.path().join("bull.svg");
    let res = run(&[
        "aha", "--maps", m, m, m, "--apex", "5.0", "--angle", "90", "--sense", "cw", "-o",
        svg_path.to_str().unwrap(),
    ]);
    assert_eq!(code(&res), 0, "stderr: {}", stderr(&res));
    let csv = stdout(&res);
    let lines: Vec<&str> = csv.lines().collect();
    assert_eq!(lines.len(), 18);
    assert_eq!(lines[0], "segment,thickness_mm");
    assert!(lines[17].starts_with("17,5"));
    let svg = fs::read_to_string(&svg_path).unwrap();
    assert!(svg.starts_with("<svg"));
    assert!(svg.contains("</svg>"));
}

#[test]
fn bench_routes_timings_to_stderr_and_summary_to_stdout() {
    let dir = TempDir::new().unwrap();
    let input = annulus_fixture(dir.path());
    let res = run(&["bench", input.to_str().unwrap()]);
    assert_eq!(code(&res), 0, "stderr: {}", stderr(&res));
    let err = stderr(&res);
    let mut lines = err.lines();
    assert_eq!(lines.next(), Some("stage,milliseconds"));
    let stages: Vec<&str> = lines.map(|l| l.split(',').next().unwrap()).collect();
    assert_eq!(stages, ["solve", "trace", "splat", "fill", "total"]);
    let line = stdout(&res);
    assert!((parse_kv(&line, "mean_mm") - 10.0).abs() <= 0.2);
    assert!(parse_kv(&line, "iterations_used") >= 1.0);
    assert!(parse_kv(&line, "lines_traced") >= 1.0);
}

#[test]
fn info_prints_version_and_defaults() {
    let res = run(&["info"]);
    assert_eq!(code(&res), 0);
    let text = stdout(&res);
    assert!(text.starts_with("thickmap "));
    assert!(text.contains("\"tolerance\""));
    assert!(text.contains("\"image_size\""));
}
