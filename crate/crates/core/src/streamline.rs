//! Streamline tracing through the potential field, arc-length splatting,
//! and inverse-distance fill of wall pixels no line touched.
//!
//! Each inner-boundary pixel launches one polyline: a short leg follows the
//! rising potential to anchor on the inner surface, then the main leg walks
//! the falling potential until it exits through the outer surface. The arc
//! length of the whole polyline is that pixel's wall thickness, deposited
//! onto every wall cell the line passes through.

use crate::config::SolverConfig;
use crate::error::{Error, Result};
use crate::grid::{BinaryMask, BoundaryLabels, GridGeometry};
use crate::laplace::{
    solve, tangent_field, CellKind, PotentialField, SolveDomain, TangentField,
};

/// Relative potential margin for the trace stop thresholds.
const PSI_STOP_EPS: f64 = 1e-6;

/// How a streamline ended.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Termination {
    /// Crossed the outer surface (or fell to the outer potential).
    ReachedOuter,
    /// Exited the wall somewhere that is not the outer surface.
    LeftWall,
    /// Ran out of step budget.
    MaxSteps,
    /// The tangent vanished under the line.
    UndefinedField,
}

/// One traced polyline in pixel coordinates (pixel centers at integers).
#[derive(Debug, Clone)]
pub struct Streamline {
    pub points: Vec<(f64, f64)>,
    pub arc_length_mm: f64,
    pub terminated_by: Termination,
}

impl Streamline {
    /// Lines that left the wall geometrically carry a valid chord length;
    /// budget or field failures do not.
    pub fn is_measurement(&self) -> bool {
        matches!(self.terminated_by, Termination::ReachedOuter | Termination::LeftWall)
    }
}

/// Provenance of a thickness value.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Assigned {
    /// Background, or a wall pixel nothing reached (value 0).
    Zero,
    /// At least one streamline deposited here.
    Splatted,
    /// Filled from nearby splatted pixels.
    Interpolated,
}

/// Dense per-pixel thickness in millimeters; zero off the wall.
#[derive(Debug, Clone, PartialEq)]
pub struct ThicknessMap {
    pub geometry: GridGeometry,
    values: Vec<f64>,
    assigned: Vec<Assigned>,
}

impl ThicknessMap {
    pub fn new(geometry: GridGeometry, values: Vec<f64>, assigned: Vec<Assigned>) -> Result<ThicknessMap> {
        if values.len() != geometry.len() || assigned.len() != geometry.len() {
            return Err(Error::Dimension(format!(
                "thickness buffers hold {} and {} entries for a {}x{} grid",
                values.len(),
                assigned.len(),
                geometry.width,
                geometry.height
            )));
        }
        Ok(ThicknessMap { geometry, values, assigned })
    }

    #[inline]
    pub fn value(&self, x: usize, y: usize) -> f64 {
        self.values[self.geometry.index(x, y)]
    }

    #[inline]
    pub fn assigned(&self, x: usize, y: usize) -> Assigned {
        self.assigned[self.geometry.index(x, y)]
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn assignments(&self) -> &[Assigned] {
        &self.assigned
    }

    /// Pixels carrying a measurement, as (row-major index, value).
    pub fn measured(&self) -> impl Iterator<Item = (usize, f64)> + '_ {
        self.values
            .iter()
            .enumerate()
            .filter(|(i, _)| self.assigned[*i] != Assigned::Zero)
            .map(|(i, v)| (i, *v))
    }

    pub fn count_of(&self, kind: Assigned) -> usize {
        self.assigned.iter().filter(|a| **a == kind).count()
    }

    /// Mean over measured pixels; 0 when nothing is measured.
    pub fn mean_mm(&self) -> f64 {
        let mut sum = 0.0;
        let mut n = 0usize;
        for (_, v) in self.measured() {
            sum += v;
            n += 1;
        }
        if n == 0 {
            0.0
        } else {
            sum / n as f64
        }
    }

    pub fn max_mm(&self) -> f64 {
        self.measured().map(|(_, v)| v).fold(0.0, f64::max)
    }
}

/// Cell containing a continuous point; boundaries belong to the upper cell.
#[inline]
fn cell_of(p: (f64, f64)) -> (i64, i64) {
    ((p.0 + 0.5).floor() as i64, (p.1 + 0.5).floor() as i64)
}

/// Bilinear potential with ghost extension; weights renormalize over the
/// corners that carry a value.
fn sample_psi(field: &PotentialField, domain: &SolveDomain, p: (f64, f64)) -> Option<f64> {
    let x0f = p.0.floor();
    let y0f = p.1.floor();
    let (fx, fy) = (p.0 - x0f, p.1 - y0f);
    let (x0, y0) = (x0f as i64, y0f as i64);
    let mut num = 0.0;
    let mut den = 0.0;
    for (dx, wx) in [(0i64, 1.0 - fx), (1, fx)] {
        for (dy, wy) in [(0i64, 1.0 - fy), (1, fy)] {
            let w = wx * wy;
            if w <= 0.0 {
                continue;
            }
            if let Some(v) = field.read(domain, x0 + dx, y0 + dy) {
                num += w * v;
                den += w;
            }
        }
    }
    if den > 1e-12 {
        Some(num / den)
    } else {
        None
    }
}

/// Result of pushing one step from `p` toward `q`.
enum Advance {
    /// `q` stayed inside wall cells and above/below the stop threshold.
    Inside((f64, f64)),
    /// Crossed into a non-wall cell (`None` = off the image); point clipped
    /// to the crossing.
    Exited((f64, f64), Option<CellKind>),
    /// Interpolated potential crossed the leg's stop threshold; point
    /// clipped to the crossing.
    Threshold((f64, f64)),
}

/// Walk the segment p->q across cell boundaries in order; the first non-wall
/// cell entered clips the step there.
fn cross_scan(domain: &SolveDomain, p: (f64, f64), q: (f64, f64)) -> Option<((f64, f64), Option<CellKind>)> {
    let c0 = cell_of(p);
    let c1 = cell_of(q);
    if c0 == c1 {
        return None;
    }
    // (t, axis, direction); axis 0 = x. Ties resolve x before y.
    let mut events: Vec<(f64, u8, i64)> = Vec::with_capacity(2);
    let dx = q.0 - p.0;
    if c1.0 != c0.0 {
        let step = if c1.0 > c0.0 { 1i64 } else { -1 };
        let mut c = c0.0;
        while c != c1.0 {
            let boundary = c as f64 + 0.5 * step as f64;
            events.push(((boundary - p.0) / dx, 0, step));
            c += step;
        }
    }
    let dy = q.1 - p.1;
    if c1.1 != c0.1 {
        let step = if c1.1 > c0.1 { 1i64 } else { -1 };
        let mut c = c0.1;
        while c != c1.1 {
            let boundary = c as f64 + 0.5 * step as f64;
            events.push(((boundary - p.1) / dy, 1, step));
            c += step;
        }
    }
    events.sort_by(|a, b| a.0.partial_cmp(&b.0).unwrap().then(a.1.cmp(&b.1)));
    let mut cell = c0;
    for (t, axis, step) in events {
        if axis == 0 {
            cell.0 += step;
        } else {
            cell.1 += step;
        }
        match domain.kind_checked(cell.0, cell.1) {
            Some(CellKind::Wall) => continue,
            kind => {
                let t = t.clamp(0.0, 1.0);
                return Some(((p.0 + t * dx, p.1 + t * dy), kind));
            }
        }
    }
    None
}

#[derive(Debug, Clone, Copy, PartialEq)]
enum LegStop {
    /// Clipped on a cell crossing out of the wall.
    Exited(Option<CellKind>),
    /// Clipped on the potential threshold.
    Threshold,
    Budget,
    Undefined,
}

/// Walk one leg. `toward_rising` picks the inner-anchor leg; otherwise the
/// line descends toward the outer surface. Consumes from the shared budget,
/// appending at most one point per step.
fn run_leg(
    tangents: &TangentField,
    field: &PotentialField,
    domain: &SolveDomain,
    start: (f64, f64),
    toward_rising: bool,
    budget: &mut usize,
    cfg: &SolverConfig,
    points: &mut Vec<(f64, f64)>,
) -> LegStop {
    let range = field.potential_range();
    let threshold = if toward_rising {
        field.inner_potential - PSI_STOP_EPS * range
    } else {
        field.outer_potential + PSI_STOP_EPS * range
    };
    let sign = if toward_rising { 1.0 } else { -1.0 };
    let mut p = start;
    loop {
        let cell = cell_of(p);
        let Some((nx, ny)) = tangents.vector_checked(cell.0, cell.1) else {
            return LegStop::Undefined;
        };
        if *budget == 0 {
            return LegStop::Budget;
        }
        *budget -= 1;
        let q = (p.0 + sign * nx * cfg.step_px, p.1 + sign * ny * cfg.step_px);
        let advance = match cross_scan(domain, p, q) {
            Some((clip, kind)) => Advance::Exited(clip, kind),
            None => match sample_psi(field, domain, q) {
                Some(psi_q)
                    if (toward_rising && psi_q >= threshold)
                        || (!toward_rising && psi_q <= threshold) =>
                {
                    // Clip to the linear crossing between the two samples.
                    let clip = match sample_psi(field, domain, p) {
                        Some(psi_p) if (psi_p - psi_q).abs() > 0.0 => {
                            let t = ((psi_p - threshold) / (psi_p - psi_q)).clamp(0.0, 1.0);
                            (p.0 + t * (q.0 - p.0), p.1 + t * (q.1 - p.1))
                        }
                        _ => q,
                    };
                    Advance::Threshold(clip)
                }
                _ => Advance::Inside(q),
            },
        };
        match advance {
            Advance::Inside(q) => {
                points.push(q);
                p = q;
            }
            Advance::Exited(clip, kind) => {
                points.push(clip);
                return LegStop::Exited(kind);
            }
            Advance::Threshold(clip) => {
                points.push(clip);
                return LegStop::Threshold;
            }
        }
    }
}

/// Trace the streamline through the wall for one start pixel (row-major
/// index). Both legs share `cfg.max_steps`, so the polyline never holds more
/// than `max_steps + 1` points.
pub fn trace(
    tangents: &TangentField,
    field: &PotentialField,
    domain: &SolveDomain,
    start: usize,
    cfg: &SolverConfig,
) -> Streamline {
    let g = domain.geometry;
    let spacing = g.spacing_mm;
    let start_pt = ((start % g.width) as f64, (start / g.width) as f64);
    let mut budget = cfg.max_steps;

    let mut inner_pts: Vec<(f64, f64)> = Vec::new();
    let inner_stop = run_leg(tangents, field, domain, start_pt, true, &mut budget, cfg, &mut inner_pts);

    let assemble = |inner_pts: Vec<(f64, f64)>, outer_pts: Vec<(f64, f64)>| {
        let mut pts = Vec::with_capacity(inner_pts.len() + outer_pts.len() + 1);
        pts.extend(inner_pts.into_iter().rev());
        pts.push(start_pt);
        pts.extend(outer_pts);
        let arc: f64 = pts
            .windows(2)
            .map(|w| {
                let (dx, dy) = (w[1].0 - w[0].0, w[1].1 - w[0].1);
                (dx * dx + dy * dy).sqrt()
            })
            .sum();
        (pts, arc * spacing)
    };

    match inner_stop {
        LegStop::Undefined => {
            let (points, arc_length_mm) = assemble(inner_pts, Vec::new());
            return Streamline { points, arc_length_mm, terminated_by: Termination::UndefinedField };
        }
        LegStop::Budget => {
            let (points, arc_length_mm) = assemble(inner_pts, Vec::new());
            return Streamline { points, arc_length_mm, terminated_by: Termination::MaxSteps };
        }
        LegStop::Exited(_) | LegStop::Threshold => {}
    }

    let mut outer_pts: Vec<(f64, f64)> = Vec::new();
    let outer_stop = run_leg(tangents, field, domain, start_pt, false, &mut budget, cfg, &mut outer_pts);
    let terminated_by = match outer_stop {
        LegStop::Exited(Some(CellKind::GhostOuter)) | LegStop::Threshold => Termination::ReachedOuter,
        LegStop::Exited(Some(CellKind::GhostInner)) => Termination::LeftWall,
        LegStop::Exited(_) => {
            if domain.exits_reach_outer() {
                Termination::ReachedOuter
            } else {
                Termination::LeftWall
            }
        }
        LegStop::Budget => Termination::MaxSteps,
        LegStop::Undefined => Termination::UndefinedField,
    };
    let (points, arc_length_mm) = assemble(inner_pts, outer_pts);
    Streamline { points, arc_length_mm, terminated_by }
}

/// Deposit each valid line's arc length once onto every wall pixel it
/// touches: the bilinear footprint of each sample plus every cell the
/// polyline crosses. A pixel's value is the mean over lines that touched it.
/// Accumulation follows streamline index order, so results are reproducible.
pub fn splat(lines: &[Streamline], domain: &SolveDomain) -> Result<ThicknessMap> {
    let g = domain.geometry;
    let mut sums = vec![0.0f64; g.len()];
    let mut counts = vec![0u32; g.len()];
    let mut touched: Vec<usize> = Vec::new();
    for line in lines {
        if !line.is_measurement() {
            continue;
        }
        touched.clear();
        let push = |cell: (i64, i64), touched: &mut Vec<usize>| {
            if g.contains(cell.0, cell.1) {
                let idx = g.index(cell.0 as usize, cell.1 as usize);
                if domain.kind_at(idx) == CellKind::Wall {
                    touched.push(idx);
                }
            }
        };
        // Each sample deposits into its bilinear footprint: the pixels whose
        // centers bracket the sample with positive interpolation weight (one
        // pixel per axis when the coordinate is exactly integral).
        for &pt in &line.points {
            let x0 = pt.0.floor() as i64;
            let y0 = pt.1.floor() as i64;
            let xs = if pt.0 == pt.0.floor() { x0..=x0 } else { x0..=x0 + 1 };
            for cx in xs {
                let ys = if pt.1 == pt.1.floor() { y0..=y0 } else { y0..=y0 + 1 };
                for cy in ys {
                    push((cx, cy), &mut touched);
                }
            }
        }
        // Cells the polyline crosses between samples count as touched too,
        // so coarse step sizes cannot skip over a pixel on the path.
        for pair in line.points.windows(2) {
            let (p, q) = (pair[0], pair[1]);
            let (mut cx, mut cy) = cell_of(p);
            let (tx, ty) = cell_of(q);
            let steps = (tx - cx).unsigned_abs() + (ty - cy).unsigned_abs();
            let sx = (tx - cx).signum();
            let sy = (ty - cy).signum();
            for _ in 0..steps {
                let t_x = if cx != tx {
                    (cx as f64 + 0.5 * sx as f64 - p.0) / (q.0 - p.0)
                } else {
                    f64::INFINITY
                };
                let t_y = if cy != ty {
                    (cy as f64 + 0.5 * sy as f64 - p.1) / (q.1 - p.1)
                } else {
                    f64::INFINITY
                };
                if t_x <= t_y {
                    cx += sx;
                } else {
                    cy += sy;
                }
                push((cx, cy), &mut touched);
            }
        }
        touched.sort_unstable();
        touched.dedup();
        for &idx in &touched {
            sums[idx] += line.arc_length_mm;
            counts[idx] += 1;
        }
    }
    let mut values = vec![0.0f64; g.len()];
    let mut assigned = vec![Assigned::Zero; g.len()];
    for i in 0..g.len() {
        if counts[i] > 0 {
            values[i] = sums[i] / counts[i] as f64;
            assigned[i] = Assigned::Splatted;
        }
    }
    ThicknessMap::new(g, values, assigned)
}

/// Inverse-distance-squared fill of untouched wall pixels from splatted
/// ones, weighted down across potential contrast. Uses the k nearest
/// splatted pixels by integer squared distance, including every pixel tied
/// with the k-th.
pub fn fill_missing(
    partial: ThicknessMap,
    field: &PotentialField,
    domain: &SolveDomain,
    cfg: &SolverConfig,
) -> Result<ThicknessMap> {
    let g = partial.geometry;
    let range = field.potential_range();
    let mut sources: Vec<(i64, i64, f64, f64)> = Vec::new();
    for y in 0..g.height {
        for x in 0..g.width {
            if partial.assigned(x, y) == Assigned::Splatted {
                let psi = field.value(x, y) / range;
                sources.push((x as i64, y as i64, partial.value(x, y), psi));
            }
        }
    }

    let mut missing: Vec<usize> = Vec::new();
    for (i, a) in partial.assigned.iter().enumerate() {
        if *a == Assigned::Zero && domain.kind_at(i) == CellKind::Wall {
            missing.push(i);
        }
    }
    if missing.is_empty() {
        return Ok(partial);
    }
    if sources.is_empty() {
        return Err(Error::InterpolationImpossible);
    }

    let mut values = partial.values;
    let mut assigned = partial.assigned;
    let mut d2_scratch: Vec<u64> = Vec::with_capacity(sources.len());
    for idx in missing {
        let (tx, ty) = ((idx % g.width) as i64, (idx / g.width) as i64);
        let psi_t = field.value_at(idx) / range;
        d2_scratch.clear();
        d2_scratch.extend(sources.iter().map(|&(sx, sy, _, _)| {
            let (dx, dy) = (sx - tx, sy - ty);
            (dx * dx + dy * dy) as u64
        }));
        let cutoff = if d2_scratch.len() <= cfg.fill_k {
            u64::MAX
        } else {
            let (_, kth, _) = d2_scratch.select_nth_unstable(cfg.fill_k - 1);
            *kth
        };
        // Second pass in source (row-major) order keeps the accumulation
        // reproducible and rotation-friendly.
        let mut num = 0.0;
        let mut den = 0.0;
        for &(sx, sy, value, psi_s) in &sources {
            let (dx, dy) = (sx - tx, sy - ty);
            let d2 = (dx * dx + dy * dy) as u64;
            if d2 > cutoff {
                continue;
            }
            let w = 1.0 / (d2 as f64 * (1.0 + cfg.fill_lambda * (psi_s - psi_t).abs()));
            num += w * value;
            den += w;
        }
        values[idx] = num / den;
        assigned[idx] = Assigned::Interpolated;
    }
    ThicknessMap::new(g, values, assigned)
}

/// A thickness map with its solve diagnostics.
#[derive(Debug, Clone)]
pub struct Measurement {
    pub thickness: ThicknessMap,
    pub field: PotentialField,
    pub lines_traced: usize,
    pub lines_splatted: usize,
    /// Fraction of wall pixels a line touched directly.
    pub splat_coverage: f64,
}

fn measure_domain(domain: &SolveDomain, cfg: &SolverConfig) -> Result<Measurement> {
    let field = solve(domain, cfg)?;
    let tangents = tangent_field(&field, domain, cfg);
    let lines: Vec<Streamline> = domain
        .starts()
        .iter()
        .map(|&s| trace(&tangents, &field, domain, s, cfg))
        .collect();
    let lines_splatted = lines.iter().filter(|l| l.is_measurement()).count();
    let partial = splat(&lines, domain)?;
    let wall = domain.wall_count();
    let splat_coverage = if wall == 0 {
        0.0
    } else {
        partial.count_of(Assigned::Splatted) as f64 / wall as f64
    };
    let thickness = fill_missing(partial, &field, domain, cfg)?;
    Ok(Measurement {
        thickness,
        field,
        lines_traced: lines.len(),
        lines_splatted,
        splat_coverage,
    })
}

/// Full pipeline on a bare mask: label regions, impose potentials across the
/// wall, solve, trace, splat, fill.
pub fn measure(mask: &BinaryMask, cfg: &SolverConfig) -> Result<Measurement> {
    cfg.validate()?;
    let regions = crate::grid::label_regions(mask);
    let bc = crate::grid::extract_boundaries(&regions, cfg.inner_potential)?;
    let domain = SolveDomain::from_regions(&regions, &bc);
    measure_domain(&domain, cfg)
}

/// Pipeline for masks whose inner/outer surfaces are hand-labeled instead of
/// inferred from enclosure (open walls, slabs, C-shapes).
pub fn measure_with_boundaries(
    mask: &BinaryMask,
    labels: &BoundaryLabels,
    cfg: &SolverConfig,
) -> Result<Measurement> {
    cfg.validate()?;
    let domain = SolveDomain::from_boundary_labels(mask, labels, cfg.inner_potential)?;
    measure_domain(&domain, cfg)
}
