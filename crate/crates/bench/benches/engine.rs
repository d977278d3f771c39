//! Stage-by-stage engine benchmarks: potential solve, streamline tracing,
//! splat + fill, the full pipeline, and corpus-generation deformations.

use criterion::{criterion_group, criterion_main, BenchmarkId, Criterion};
use thickmap::{
    elastic_transform, extract_boundaries, fill_missing, label_regions, measure, piecewise_affine,
    solve, splat, tangent_field, trace, BinaryMask, GridGeometry, SolveDomain, SolverConfig,
    Streamline,
};

fn annulus(size: usize, r_in: f64, r_out: f64) -> BinaryMask {
    let g = GridGeometry::new(size, size, 1.0).unwrap();
    let c = (size - 1) as f64 / 2.0;
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

fn domain_for(mask: &BinaryMask, cfg: &SolverConfig) -> SolveDomain {
    let regions = label_regions(mask);
    let bc = extract_boundaries(&regions, cfg.inner_potential).unwrap();
    SolveDomain::from_regions(&regions, &bc)
}

fn bench_solve(c: &mut Criterion) {
    let cfg = SolverConfig::default();
    let mut group = c.benchmark_group("solve");
    for size in [65usize, 129, 193] {
        let mask = annulus(size, size as f64 * 0.3, size as f64 * 0.46);
        let domain = domain_for(&mask, &cfg);
        group.bench_with_input(BenchmarkId::from_parameter(size), &domain, |b, domain| {
            b.iter(|| solve(domain, &cfg).unwrap())
        });
    }
    group.finish();

    let mask = annulus(129, 38.0, 59.0);
    let domain = domain_for(&mask, &cfg);
    let mut group = c.benchmark_group("solve_omega");
    for omega in [1.0f64, 1.5, 1.9] {
        let mut cfg = SolverConfig::default();
        cfg.omega = omega;
        group.bench_with_input(BenchmarkId::from_parameter(omega), &cfg, |b, cfg| {
            b.iter(|| solve(&domain, cfg).unwrap())
        });
    }
    group.finish();
}

fn bench_trace_and_splat(c: &mut Criterion) {
    let cfg = SolverConfig::default();
    let mask = annulus(193, 58.0, 89.0);
    let domain = domain_for(&mask, &cfg);
    let field = solve(&domain, &cfg).unwrap();
    let tangents = tangent_field(&field, &domain, &cfg);

    c.bench_function("trace_193", |b| {
        b.iter(|| {
            domain
                .starts()
                .iter()
                .map(|&s| trace(&tangents, &field, &domain, s, &cfg))
                .collect::<Vec<Streamline>>()
        })
    });

    let lines: Vec<Streamline> = domain
        .starts()
        .iter()
        .map(|&s| trace(&tangents, &field, &domain, s, &cfg))
        .collect();
    c.bench_function("splat_193", |b| b.iter(|| splat(&lines, &domain).unwrap()));

    let partial = splat(&lines, &domain).unwrap();
    c.bench_function("fill_193", |b| {
        b.iter(|| fill_missing(partial.clone(), &field, &domain, &cfg).unwrap())
    });
}

fn bench_pipeline(c: &mut Criterion) {
    let cfg = SolverConfig::default();
    let mask = annulus(129, 38.0, 59.0);
    c.bench_function("measure_129", |b| b.iter(|| measure(&mask, &cfg).unwrap()));
}

fn bench_deformations(c: &mut Criterion) {
    let mask = annulus(193, 58.0, 89.0);
    c.bench_function("elastic_193", |b| b.iter(|| elastic_transform(&mask, 60.0, 8.0, 11)));
    c.bench_function("affine_193", |b| {
        b.iter(|| piecewise_affine(&mask, 4, 6.0, 11).unwrap())
    });
}

criterion_group!(benches, bench_solve, bench_trace_and_splat, bench_pipeline, bench_deformations);
criterion_main!(benches);
