//! Pixel-grid primitives: binary wall masks, background region labeling,
//! boundary extraction, and spacing/size normalization.
//!
//! Coordinates are (x, y) with row-major storage (`idx = y * width + x`);
//! pixel centers sit at integer coordinates and a pixel's cell spans the
//! half-open square `[x-0.5, x+0.5) × [y-0.5, y+0.5)`.

use crate::error::{Error, Result};

/// Spacing assumed when none is supplied by flag or sidecar.
pub const DEFAULT_SPACING_MM: f64 = 1.36;

/// Grid dimensions plus isotropic pixel spacing in millimetres.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GridGeometry {
    pub width: usize,
    pub height: usize,
    pub spacing_mm: f64,
}

impl GridGeometry {
    pub fn new(width: usize, height: usize, spacing_mm: f64) -> Result<Self> {
        if width == 0 || height == 0 {
            return Err(Error::Dimension(format!(
                "grid dimensions must be nonzero, got {width}x{height}"
            )));
        }
        if !(spacing_mm > 0.0) || !spacing_mm.is_finite() {
            return Err(Error::Config(format!("spacing must be positive, got {spacing_mm}")));
        }
        Ok(GridGeometry { width, height, spacing_mm })
    }

    #[inline]
    pub fn len(&self) -> usize {
        self.width * self.height
    }

    #[inline]
    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    #[inline]
    pub fn index(&self, x: usize, y: usize) -> usize {
        debug_assert!(x < self.width && y < self.height);
        y * self.width + x
    }

    #[inline]
    pub fn contains(&self, x: i64, y: i64) -> bool {
        x >= 0 && y >= 0 && (x as usize) < self.width && (y as usize) < self.height
    }

    /// Same dimensions, ignoring spacing.
    pub fn same_shape(&self, other: &GridGeometry) -> bool {
        self.width == other.width && self.height == other.height
    }

    fn expect_same_shape(&self, other: &GridGeometry, what: &str) -> Result<()> {
        if self.same_shape(other) {
            Ok(())
        } else {
            Err(Error::Dimension(format!(
                "{what}: {}x{} vs {}x{}",
                self.width, self.height, other.width, other.height
            )))
        }
    }
}

pub(crate) fn expect_same_shape(a: &GridGeometry, b: &GridGeometry, what: &str) -> Result<()> {
    a.expect_same_shape(b, what)
}

/// Binary mask: `true` pixels are wall, everything else background.
#[derive(Debug, Clone, PartialEq)]
pub struct BinaryMask {
    pub geometry: GridGeometry,
    wall: Vec<bool>,
}

impl BinaryMask {
    pub fn new(geometry: GridGeometry, wall: Vec<bool>) -> Result<Self> {
        if wall.len() != geometry.len() {
            return Err(Error::Dimension(format!(
                "mask buffer holds {} pixels, geometry needs {}",
                wall.len(),
                geometry.len()
            )));
        }
        Ok(BinaryMask { geometry, wall })
    }

    pub fn filled(geometry: GridGeometry, value: bool) -> Self {
        let wall = vec![value; geometry.len()];
        BinaryMask { geometry, wall }
    }

    #[inline]
    pub fn is_wall(&self, x: usize, y: usize) -> bool {
        self.wall[self.geometry.index(x, y)]
    }

    #[inline]
    pub fn is_wall_at(&self, idx: usize) -> bool {
        self.wall[idx]
    }

    pub fn set_wall(&mut self, x: usize, y: usize, value: bool) {
        let idx = self.geometry.index(x, y);
        self.wall[idx] = value;
    }

    pub fn wall_count(&self) -> usize {
        self.wall.iter().filter(|&&w| w).count()
    }

    pub fn pixels(&self) -> &[bool] {
        &self.wall
    }

    /// Quarter turn: source (x, y) lands at (y, width-1-x). Spacing is kept.
    pub fn rot90(&self) -> BinaryMask {
        let g = self.geometry;
        let rotated = GridGeometry { width: g.height, height: g.width, spacing_mm: g.spacing_mm };
        let mut wall = vec![false; rotated.len()];
        for y in 0..g.height {
            for x in 0..g.width {
                let (rx, ry) = (y, g.width - 1 - x);
                wall[rotated.index(rx, ry)] = self.wall[g.index(x, y)];
            }
        }
        BinaryMask { geometry: rotated, wall }
    }
}

/// What each pixel is once the background is flood-filled.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum RegionClass {
    /// Background connected to the image border.
    Exterior,
    /// Background fully enclosed by wall.
    Cavity,
    Wall,
}

/// Total, disjoint partition of the grid into exterior / cavities / wall.
#[derive(Debug, Clone)]
pub struct RegionLabels {
    pub geometry: GridGeometry,
    classes: Vec<RegionClass>,
    pub cavity_count: usize,
}

impl RegionLabels {
    #[inline]
    pub fn class(&self, x: usize, y: usize) -> RegionClass {
        self.classes[self.geometry.index(x, y)]
    }

    #[inline]
    pub fn class_at(&self, idx: usize) -> RegionClass {
        self.classes[idx]
    }

    pub fn classes(&self) -> &[RegionClass] {
        &self.classes
    }
}

const NEIGHBORS_4: [(i64, i64); 4] = [(-1, 0), (1, 0), (0, -1), (0, 1)];

/// Flood-fill the background with 4-connectivity. Components touching the
/// image border are exterior; every other background component is a cavity.
pub fn label_regions(mask: &BinaryMask) -> RegionLabels {
    let g = mask.geometry;
    let mut classes = vec![RegionClass::Wall; g.len()];
    let mut seen = vec![false; g.len()];
    let mut cavity_count = 0usize;
    let mut stack: Vec<(usize, usize)> = Vec::new();
    let mut component: Vec<usize> = Vec::new();

    for sy in 0..g.height {
        for sx in 0..g.width {
            let start = g.index(sx, sy);
            if mask.is_wall_at(start) || seen[start] {
                continue;
            }
            // Collect one background component and remember border contact.
            let mut touches_border = false;
            component.clear();
            seen[start] = true;
            stack.push((sx, sy));
            while let Some((x, y)) = stack.pop() {
                component.push(g.index(x, y));
                if x == 0 || y == 0 || x == g.width - 1 || y == g.height - 1 {
                    touches_border = true;
                }
                for (dx, dy) in NEIGHBORS_4 {
                    let (nx, ny) = (x as i64 + dx, y as i64 + dy);
                    if !g.contains(nx, ny) {
                        continue;
                    }
                    let nidx = g.index(nx as usize, ny as usize);
                    if !seen[nidx] && !mask.is_wall_at(nidx) {
                        seen[nidx] = true;
                        stack.push((nx as usize, ny as usize));
                    }
                }
            }
            let class = if touches_border {
                RegionClass::Exterior
            } else {
                cavity_count += 1;
                RegionClass::Cavity
            };
            for &idx in &component {
                classes[idx] = class;
            }
        }
    }

    RegionLabels { geometry: g, classes, cavity_count }
}

/// Dirichlet boundary sets plus the potential values they carry.
#[derive(Debug, Clone)]
pub struct BoundaryConditions {
    /// Wall pixels 4-adjacent to a cavity, row-major order.
    pub inner: Vec<(usize, usize)>,
    /// Wall pixels 4-adjacent to the exterior, row-major order.
    pub outer: Vec<(usize, usize)>,
    pub inner_potential: f64,
    pub outer_potential: f64,
}

/// Boundary pixels straight from region adjacency. Needs at least one
/// cavity; masks without one must go through manual boundary labels.
pub fn extract_boundaries(regions: &RegionLabels, inner_potential: f64) -> Result<BoundaryConditions> {
    if regions.cavity_count == 0 {
        return Err(Error::NoInnerBoundary);
    }
    let g = regions.geometry;
    let mut inner = Vec::new();
    let mut outer = Vec::new();
    for y in 0..g.height {
        for x in 0..g.width {
            if regions.class(x, y) != RegionClass::Wall {
                continue;
            }
            let mut next_to_cavity = false;
            let mut next_to_exterior = false;
            for (dx, dy) in NEIGHBORS_4 {
                let (nx, ny) = (x as i64 + dx, y as i64 + dy);
                if !g.contains(nx, ny) {
                    continue;
                }
                match regions.class(nx as usize, ny as usize) {
                    RegionClass::Cavity => next_to_cavity = true,
                    RegionClass::Exterior => next_to_exterior = true,
                    RegionClass::Wall => {}
                }
            }
            if next_to_cavity {
                inner.push((x, y));
            }
            if next_to_exterior {
                outer.push((x, y));
            }
        }
    }
    if inner.is_empty() {
        return Err(Error::NoInnerBoundary);
    }
    if outer.is_empty() {
        return Err(Error::NoOuterBoundary);
    }
    Ok(BoundaryConditions { inner, outer, inner_potential, outer_potential: 0.0 })
}

/// Nearest-neighbor resample to `target_spacing_mm`, then center-crop or
/// zero-pad to `target_size` squared. Odd crop/pad remainders fall on the
/// right/bottom edge.
pub fn normalize_grid(mask: &BinaryMask, target_spacing_mm: f64, target_size: usize) -> Result<BinaryMask> {
    if !(target_spacing_mm > 0.0) || target_size == 0 {
        return Err(Error::Config(format!(
            "normalization target must be positive, got spacing {target_spacing_mm} size {target_size}"
        )));
    }
    let g = mask.geometry;
    let factor = g.spacing_mm / target_spacing_mm;

    let resampled = if factor == 1.0 {
        mask.clone()
    } else {
        let rw = ((g.width as f64 * factor).round() as usize).max(1);
        let rh = ((g.height as f64 * factor).round() as usize).max(1);
        let rg = GridGeometry { width: rw, height: rh, spacing_mm: target_spacing_mm };
        let mut wall = vec![false; rg.len()];
        for y in 0..rh {
            // Sample at destination pixel centers mapped back to the source.
            let sy = (((y as f64 + 0.5) / factor).floor() as i64).clamp(0, g.height as i64 - 1) as usize;
            for x in 0..rw {
                let sx = (((x as f64 + 0.5) / factor).floor() as i64).clamp(0, g.width as i64 - 1) as usize;
                wall[rg.index(x, y)] = mask.is_wall(sx, sy);
            }
        }
        BinaryMask { geometry: rg, wall }
    };

    let rg = resampled.geometry;
    let out_g = GridGeometry { width: target_size, height: target_size, spacing_mm: target_spacing_mm };
    let mut wall = vec![false; out_g.len()];
    // Per-axis: crop offset into the source, pad offset into the destination.
    let (src_x0, dst_x0) = split_offsets(rg.width, target_size);
    let (src_y0, dst_y0) = split_offsets(rg.height, target_size);
    let copy_w = rg.width.min(target_size);
    let copy_h = rg.height.min(target_size);
    for y in 0..copy_h {
        for x in 0..copy_w {
            wall[out_g.index(dst_x0 + x, dst_y0 + y)] = resampled.is_wall(src_x0 + x, src_y0 + y);
        }
    }
    BinaryMask::new(out_g, wall)
}

/// (source offset, destination offset) for centering `from` into `to`,
/// flooring on the left/top so the extra pixel lands right/bottom.
fn split_offsets(from: usize, to: usize) -> (usize, usize) {
    if from > to {
        ((from - to) / 2, 0)
    } else {
        (0, (to - from) / 2)
    }
}

/// Per-pixel manual boundary marking for masks without an enclosed cavity.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum BoundaryLabel {
    None,
    Inner,
    Outer,
}

/// Grid of manual boundary labels, aligned pixel-for-pixel with a mask.
#[derive(Debug, Clone)]
pub struct BoundaryLabels {
    pub geometry: GridGeometry,
    labels: Vec<BoundaryLabel>,
}

impl BoundaryLabels {
    pub fn new(geometry: GridGeometry, labels: Vec<BoundaryLabel>) -> Result<Self> {
        if labels.len() != geometry.len() {
            return Err(Error::Dimension(format!(
                "label buffer holds {} pixels, geometry needs {}",
                labels.len(),
                geometry.len()
            )));
        }
        Ok(BoundaryLabels { geometry, labels })
    }

    pub fn blank(geometry: GridGeometry) -> Self {
        let labels = vec![BoundaryLabel::None; geometry.len()];
        BoundaryLabels { geometry, labels }
    }

    #[inline]
    pub fn label(&self, x: usize, y: usize) -> BoundaryLabel {
        self.labels[self.geometry.index(x, y)]
    }

    pub fn set_label(&mut self, x: usize, y: usize, label: BoundaryLabel) {
        let idx = self.geometry.index(x, y);
        self.labels[idx] = label;
    }

    pub fn labels(&self) -> &[BoundaryLabel] {
        &self.labels
    }
}
