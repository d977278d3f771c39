//! Dirichlet Laplace solve over the wall region and the unit tangent field
//! derived from it.
//!
//! The wall pixels are the unknowns. Non-wall neighbors contribute fixed
//! ghost values (cavity side reads the inner potential, exterior side the
//! outer), while out-of-image and insulating neighbors drop out of the
//! stencil entirely, shrinking the divisor. Sweeps are red-black successive
//! over-relaxation; two runs over the same input are bit-identical.

use crate::config::SolverConfig;
use crate::error::{Error, Result};
use crate::grid::{
    BinaryMask, BoundaryConditions, BoundaryLabel, BoundaryLabels, GridGeometry, RegionClass,
    RegionLabels,
};

/// Role of a pixel during the solve and the trace.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum CellKind {
    /// Unknown solved by the sweeps.
    Wall,
    /// Fixed at the inner potential (cavity, or flank of an inner label).
    GhostInner,
    /// Fixed at the outer potential (exterior, or flank of an outer label).
    GhostOuter,
    /// Carries no value; stencil and gradient treat it as absent.
    Insulating,
}

/// Pixel classification plus Dirichlet values and trace seed points.
#[derive(Debug, Clone)]
pub struct SolveDomain {
    pub geometry: GridGeometry,
    kinds: Vec<CellKind>,
    /// Row-major indices of the pixels streamlines start from.
    starts: Vec<usize>,
    pub inner_potential: f64,
    pub outer_potential: f64,
    /// With hand-labeled boundaries the unlabeled background is unknown
    /// territory, so an outward trace leaving the wall counts as reaching
    /// the outer surface instead of a failed line.
    any_exit_is_outer: bool,
}

impl SolveDomain {
    /// Automatic mode: cavity and exterior pixels become ghosts, inner
    /// boundary pixels become trace seeds.
    pub fn from_regions(regions: &RegionLabels, bc: &BoundaryConditions) -> SolveDomain {
        let g = regions.geometry;
        let kinds = regions
            .classes()
            .iter()
            .map(|c| match c {
                RegionClass::Wall => CellKind::Wall,
                RegionClass::Cavity => CellKind::GhostInner,
                RegionClass::Exterior => CellKind::GhostOuter,
            })
            .collect();
        let starts = bc.inner.iter().map(|&(x, y)| g.index(x, y)).collect();
        SolveDomain {
            geometry: g,
            kinds,
            starts,
            inner_potential: bc.inner_potential,
            outer_potential: bc.outer_potential,
            any_exit_is_outer: false,
        }
    }

    /// Manual mode: every wall pixel stays an unknown; background pixels
    /// flanking labeled wall pixels become ghosts (inner wins a conflict),
    /// the rest of the background insulates. Labeled inner pixels seed the
    /// traces.
    pub fn from_boundary_labels(
        mask: &BinaryMask,
        labels: &BoundaryLabels,
        inner_potential: f64,
    ) -> Result<SolveDomain> {
        let g = mask.geometry;
        crate::grid::expect_same_shape(&g, &labels.geometry, "mask vs boundary labels")?;
        let mut inner_count = 0usize;
        let mut outer_count = 0usize;
        for y in 0..g.height {
            for x in 0..g.width {
                match labels.label(x, y) {
                    BoundaryLabel::None => continue,
                    BoundaryLabel::Inner => inner_count += 1,
                    BoundaryLabel::Outer => outer_count += 1,
                }
                if !mask.is_wall(x, y) {
                    return Err(Error::BoundarySpec(format!(
                        "labeled pixel ({x}, {y}) is not a wall pixel"
                    )));
                }
            }
        }
        if inner_count == 0 || outer_count == 0 {
            return Err(Error::BoundarySpec(format!(
                "need both boundary kinds, got {inner_count} inner and {outer_count} outer pixels"
            )));
        }

        let mut kinds = vec![CellKind::Insulating; g.len()];
        let mut starts = Vec::new();
        for y in 0..g.height {
            for x in 0..g.width {
                if mask.is_wall(x, y) {
                    kinds[g.index(x, y)] = CellKind::Wall;
                    if labels.label(x, y) == BoundaryLabel::Inner {
                        starts.push(g.index(x, y));
                    }
                }
            }
        }
        // Background pixels flanking labeled wall pixels carry the label's value.
        for y in 0..g.height {
            for x in 0..g.width {
                if mask.is_wall(x, y) {
                    continue;
                }
                let mut kind = CellKind::Insulating;
                for (dx, dy) in [(-1i64, 0i64), (1, 0), (0, -1), (0, 1)] {
                    let (nx, ny) = (x as i64 + dx, y as i64 + dy);
                    if !g.contains(nx, ny) {
                        continue;
                    }
                    let (nx, ny) = (nx as usize, ny as usize);
                    if !mask.is_wall(nx, ny) {
                        continue;
                    }
                    match labels.label(nx, ny) {
                        BoundaryLabel::Inner => {
                            kind = CellKind::GhostInner;
                            break; // inner wins conflicts
                        }
                        BoundaryLabel::Outer => kind = CellKind::GhostOuter,
                        BoundaryLabel::None => {}
                    }
                }
                kinds[g.index(x, y)] = kind;
            }
        }
        Ok(SolveDomain {
            geometry: g,
            kinds,
            starts,
            inner_potential,
            outer_potential: 0.0,
            any_exit_is_outer: true,
        })
    }

    /// Whether an outward trace exiting into unclassified territory should
    /// count as reaching the outer surface.
    pub fn exits_reach_outer(&self) -> bool {
        self.any_exit_is_outer
    }

    #[inline]
    pub fn kind_at(&self, idx: usize) -> CellKind {
        self.kinds[idx]
    }

    #[inline]
    pub fn kind(&self, x: usize, y: usize) -> CellKind {
        self.kinds[self.geometry.index(x, y)]
    }

    /// Cell kind at integer cell coordinates, `None` outside the image.
    #[inline]
    pub fn kind_checked(&self, x: i64, y: i64) -> Option<CellKind> {
        if self.geometry.contains(x, y) {
            Some(self.kinds[self.geometry.index(x as usize, y as usize)])
        } else {
            None
        }
    }

    /// Trace seed pixels in row-major order.
    pub fn starts(&self) -> &[usize] {
        &self.starts
    }

    pub fn wall_count(&self) -> usize {
        self.kinds.iter().filter(|k| **k == CellKind::Wall).count()
    }

    pub fn potential_range(&self) -> f64 {
        self.inner_potential - self.outer_potential
    }

    /// Ghost value a neighbor of the given kind contributes, `None` when it
    /// drops out of the stencil.
    #[inline]
    fn ghost(&self, kind: CellKind, psi: &[f64], idx: usize) -> Option<f64> {
        match kind {
            CellKind::Wall => Some(psi[idx]),
            CellKind::GhostInner => Some(self.inner_potential),
            CellKind::GhostOuter => Some(self.outer_potential),
            CellKind::Insulating => None,
        }
    }
}

/// Converged (or flagged) potential over the wall; NaN off the wall.
#[derive(Debug, Clone)]
pub struct PotentialField {
    pub geometry: GridGeometry,
    values: Vec<f64>,
    pub inner_potential: f64,
    pub outer_potential: f64,
    pub iterations_used: usize,
    pub final_delta: f64,
    pub converged: bool,
}

impl PotentialField {
    /// Potential at a wall pixel; NaN elsewhere.
    #[inline]
    pub fn value(&self, x: usize, y: usize) -> f64 {
        self.values[self.geometry.index(x, y)]
    }

    #[inline]
    pub fn value_at(&self, idx: usize) -> f64 {
        self.values[idx]
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn potential_range(&self) -> f64 {
        self.inner_potential - self.outer_potential
    }

    /// Ghost-extended read used by stencils and interpolation: wall pixels
    /// return the solved value, ghosts their Dirichlet value, insulating and
    /// out-of-image pixels nothing.
    #[inline]
    pub fn read(&self, domain: &SolveDomain, x: i64, y: i64) -> Option<f64> {
        let kind = domain.kind_checked(x, y)?;
        let idx = self.geometry.index(x as usize, y as usize);
        domain.ghost(kind, &self.values, idx)
    }
}

/// Red-black SOR until the max per-sweep change drops to
/// `cfg.tolerance * potential_range`. Exceeding `max_iterations` flags the
/// result instead of failing.
pub fn solve(domain: &SolveDomain, cfg: &SolverConfig) -> Result<PotentialField> {
    cfg.validate()?;
    let g = domain.geometry;
    if domain.wall_count() == 0 {
        return Err(Error::EmptyWall);
    }
    let range = domain.potential_range();
    if !(range > 0.0) {
        return Err(Error::Config(format!(
            "inner potential must exceed outer, got {} vs {}",
            domain.inner_potential, domain.outer_potential
        )));
    }
    let tol = cfg.tolerance * range;

    // Bounding box of the wall keeps sweeps off empty slack.
    let (mut x0, mut y0, mut x1, mut y1) = (g.width, g.height, 0usize, 0usize);
    for y in 0..g.height {
        for x in 0..g.width {
            if domain.kind(x, y) == CellKind::Wall {
                x0 = x0.min(x);
                y0 = y0.min(y);
                x1 = x1.max(x);
                y1 = y1.max(y);
            }
        }
    }

    let mut psi = vec![domain.outer_potential; g.len()];
    let mut iterations = 0usize;
    let mut final_delta = f64::INFINITY;
    let mut converged = false;

    while iterations < cfg.max_iterations {
        iterations += 1;
        let mut delta: f64 = 0.0;
        for color in 0..2usize {
            for y in y0..=y1 {
                for x in x0..=x1 {
                    if (x + y) % 2 != color {
                        continue;
                    }
                    let idx = g.index(x, y);
                    if domain.kinds[idx] != CellKind::Wall {
                        continue;
                    }
                    // Horizontal and vertical neighbor pairs are summed
                    // separately so the arithmetic commutes with quarter
                    // turns bit-for-bit.
                    let mut sum_h = 0.0;
                    let mut sum_v = 0.0;
                    let mut count = 0u32;
                    let (xi, yi) = (x as i64, y as i64);
                    for dx in [-1i64, 1] {
                        if let Some(v) = read_neighbor(domain, &psi, xi + dx, yi) {
                            sum_h += v;
                            count += 1;
                        }
                    }
                    for dy in [-1i64, 1] {
                        if let Some(v) = read_neighbor(domain, &psi, xi, yi + dy) {
                            sum_v += v;
                            count += 1;
                        }
                    }
                    if count == 0 {
                        continue; // fully insulated pixel: unconstrained
                    }
                    let stencil = (sum_h + sum_v) / count as f64;
                    let old = psi[idx];
                    let new = old + cfg.omega * (stencil - old);
                    let d = (new - old).abs();
                    if d > delta {
                        delta = d;
                    }
                    psi[idx] = new;
                }
            }
        }
        final_delta = delta;
        if delta <= tol {
            converged = true;
            break;
        }
    }

    let values = psi
        .iter()
        .enumerate()
        .map(|(i, &v)| if domain.kinds[i] == CellKind::Wall { v } else { f64::NAN })
        .collect();
    Ok(PotentialField {
        geometry: g,
        values,
        inner_potential: domain.inner_potential,
        outer_potential: domain.outer_potential,
        iterations_used: iterations,
        final_delta,
        converged,
    })
}

#[inline]
fn read_neighbor(domain: &SolveDomain, psi: &[f64], x: i64, y: i64) -> Option<f64> {
    let kind = domain.kind_checked(x, y)?;
    match kind {
        CellKind::Wall => Some(psi[domain.geometry.index(x as usize, y as usize)]),
        CellKind::GhostInner => Some(domain.inner_potential),
        CellKind::GhostOuter => Some(domain.outer_potential),
        CellKind::Insulating => None,
    }
}

/// Automatic-mode convenience: build the domain from region labels and solve.
pub fn solve_laplace(
    regions: &RegionLabels,
    bc: &BoundaryConditions,
    cfg: &SolverConfig,
) -> Result<PotentialField> {
    solve(&SolveDomain::from_regions(regions, bc), cfg)
}

/// Max five-point defect |4ψ - Σ neighbors| over wall pixels whose four
/// neighbors are all wall.
pub fn residual(field: &PotentialField, domain: &SolveDomain) -> f64 {
    let g = domain.geometry;
    let mut worst: f64 = 0.0;
    for y in 1..g.height.saturating_sub(1) {
        for x in 1..g.width.saturating_sub(1) {
            if domain.kind(x, y) != CellKind::Wall {
                continue;
            }
            let all_wall = [(x - 1, y), (x + 1, y), (x, y - 1), (x, y + 1)]
                .iter()
                .all(|&(nx, ny)| domain.kind(nx, ny) == CellKind::Wall);
            if !all_wall {
                continue;
            }
            let sum = (field.value(x - 1, y) + field.value(x + 1, y))
                + (field.value(x, y - 1) + field.value(x, y + 1));
            let defect = (4.0 * field.value(x, y) - sum).abs();
            if defect > worst {
                worst = defect;
            }
        }
    }
    worst
}

/// Per-pixel unit vectors pointing toward rising potential; `None` where the
/// gradient is too flat or the pixel is off the wall.
#[derive(Debug, Clone)]
pub struct TangentField {
    pub geometry: GridGeometry,
    vectors: Vec<Option<(f64, f64)>>,
}

impl TangentField {
    #[inline]
    pub fn vector(&self, x: usize, y: usize) -> Option<(f64, f64)> {
        self.vectors[self.geometry.index(x, y)]
    }

    #[inline]
    pub fn vector_checked(&self, x: i64, y: i64) -> Option<(f64, f64)> {
        if self.geometry.contains(x, y) {
            self.vectors[self.geometry.index(x as usize, y as usize)]
        } else {
            None
        }
    }

    pub fn defined_count(&self) -> usize {
        self.vectors.iter().filter(|v| v.is_some()).count()
    }
}

/// Central differences with ghost reads; one-sided where a neighbor is
/// missing (out of image, or insulating). Normalized to unit length.
pub fn tangent_field(field: &PotentialField, domain: &SolveDomain, cfg: &SolverConfig) -> TangentField {
    let g = domain.geometry;
    let eps = cfg.grad_epsilon * field.potential_range();
    let mut vectors = vec![None; g.len()];
    for y in 0..g.height {
        for x in 0..g.width {
            let idx = g.index(x, y);
            if domain.kinds[idx] != CellKind::Wall {
                continue;
            }
            let (xi, yi) = (x as i64, y as i64);
            let center = field.values[idx];
            let gx = axis_difference(
                field.read(domain, xi - 1, yi),
                center,
                field.read(domain, xi + 1, yi),
            );
            let gy = axis_difference(
                field.read(domain, xi, yi - 1),
                center,
                field.read(domain, xi, yi + 1),
            );
            let norm = (gx * gx + gy * gy).sqrt();
            if norm >= eps && norm > 0.0 {
                vectors[idx] = Some((gx / norm, gy / norm));
            }
        }
    }
    TangentField { geometry: g, vectors }
}

#[inline]
fn axis_difference(before: Option<f64>, center: f64, after: Option<f64>) -> f64 {
    match (before, after) {
        (Some(b), Some(a)) => (a - b) / 2.0,
        (None, Some(a)) => a - center,
        (Some(b), None) => center - b,
        (None, None) => 0.0,
    }
}
