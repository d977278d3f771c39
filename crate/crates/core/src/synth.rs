//! Synthetic corpus generation: randomized annuli pushed through elastic and
//! piecewise-affine warps, plus a few hand-built shapes with known widths.
//!
//! Everything is driven by explicit seeds. An item's content depends only on
//! the master seed, its index, and its attempt number — never on thread
//! scheduling — so regenerating a corpus reproduces it byte for byte.

use std::fs;
use std::io::Write as _;
use std::path::{Path, PathBuf};

use rand_chacha::ChaCha8Rng;
use rand_core::SeedableRng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::config::SolverConfig;
use crate::error::{Error, Result};
use crate::grid::{label_regions, BinaryMask, BoundaryLabel, BoundaryLabels, GridGeometry};
use crate::io::{write_mask_file, write_sidecar_spacing, write_thickness_file};
use crate::streamline::measure;

pub mod rng {
    //! Seed derivation and the float mapping, pinned so corpora stay stable
    //! across dependency upgrades.

    use rand_core::RngCore;

    /// SplitMix64 step; the standard finalizer constants.
    pub fn splitmix64(state: &mut u64) -> u64 {
        *state = state.wrapping_add(0x9E37_79B9_7F4A_7C15);
        let mut z = *state;
        z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
        z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
        z ^ (z >> 31)
    }

    /// Mix a master seed with a path of indices (item, attempt, stage, ...)
    /// into an independent stream seed.
    pub fn derive_seed(master: u64, path: &[u64]) -> u64 {
        let mut state = master;
        let mut out = splitmix64(&mut state);
        for &part in path {
            state = out ^ part.wrapping_mul(0xD6E8_FEB8_6659_FD93);
            out = splitmix64(&mut state);
        }
        out
    }

    /// Uniform in [0, 1) from the top 53 bits.
    #[inline]
    pub fn unit_f64(rng: &mut impl RngCore) -> f64 {
        (rng.next_u64() >> 11) as f64 * (1.0 / (1u64 << 53) as f64)
    }

    /// Uniform in [lo, hi).
    #[inline]
    pub fn uniform_in(rng: &mut impl RngCore, lo: f64, hi: f64) -> f64 {
        lo + (hi - lo) * unit_f64(rng)
    }

    /// Uniform in [-1, 1).
    #[inline]
    pub fn symmetric_f64(rng: &mut impl RngCore) -> f64 {
        2.0 * unit_f64(rng) - 1.0
    }
}

/// Randomized-annulus recipe plus the deformation strengths applied on top.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ShapeRecipe {
    pub image_size: usize,
    pub spacing_mm: f64,
    /// Inner radius draw range in pixels, inclusive low / exclusive high.
    pub r_inner_range: (f64, f64),
    /// Wall width draw range in pixels.
    pub wall_width_range: (f64, f64),
    /// Center offset from the image midpoint, drawn per axis.
    pub center_jitter_px: f64,
    pub elastic_alpha: f64,
    pub elastic_sigma: f64,
    /// Piecewise-affine lattice cells per axis.
    pub pwa_grid: usize,
    pub pwa_jitter_px: f64,
}

impl Default for ShapeRecipe {
    fn default() -> Self {
        ShapeRecipe {
            image_size: 192,
            spacing_mm: crate::grid::DEFAULT_SPACING_MM,
            r_inner_range: (6.0, 40.0),
            wall_width_range: (2.0, 44.0),
            center_jitter_px: 8.0,
            elastic_alpha: 60.0,
            elastic_sigma: 8.0,
            pwa_grid: 4,
            pwa_jitter_px: 6.0,
        }
    }
}

impl ShapeRecipe {
    pub fn validate(&self) -> Result<()> {
        if self.image_size < 8 {
            return Err(Error::RecipeInfeasible(format!(
                "image size {} is too small",
                self.image_size
            )));
        }
        if !(self.spacing_mm > 0.0) || !self.spacing_mm.is_finite() {
            return Err(Error::RecipeInfeasible(format!(
                "pixel spacing {} mm is not positive",
                self.spacing_mm
            )));
        }
        for (name, (lo, hi)) in [
            ("inner radius", self.r_inner_range),
            ("wall width", self.wall_width_range),
        ] {
            if !(lo > 0.0 && hi >= lo && hi.is_finite()) {
                return Err(Error::RecipeInfeasible(format!(
                    "{name} range ({lo}, {hi}) is not an ordered positive range"
                )));
            }
        }
        if self.center_jitter_px < 0.0 || self.pwa_jitter_px < 0.0 {
            return Err(Error::RecipeInfeasible("jitter must be non-negative".into()));
        }
        if self.elastic_alpha < 0.0 {
            return Err(Error::RecipeInfeasible("elastic strength must be non-negative".into()));
        }
        if self.elastic_alpha > 0.0 && !(self.elastic_sigma > 0.0) {
            return Err(Error::RecipeInfeasible(
                "elastic smoothing sigma must be positive".into(),
            ));
        }
        if self.pwa_grid == 0 {
            return Err(Error::RecipeInfeasible("lattice needs at least one cell".into()));
        }
        let reach = self.r_inner_range.1 + self.wall_width_range.1 + self.center_jitter_px;
        if reach > self.image_size as f64 / 2.0 {
            return Err(Error::RecipeInfeasible(format!(
                "largest annulus reaches {reach} px from center, past half the {} px image",
                self.image_size
            )));
        }
        Ok(())
    }

    pub fn from_json(text: &str) -> Result<ShapeRecipe> {
        let recipe: ShapeRecipe =
            serde_json::from_str(text).map_err(|e| Error::Config(format!("recipe: {e}")))?;
        recipe.validate()?;
        Ok(recipe)
    }
}

fn raster_annulus(g: GridGeometry, cx: f64, cy: f64, r_in: f64, r_out: f64) -> BinaryMask {
    let mut mask = BinaryMask::filled(g, false);
    for y in 0..g.height {
        for x in 0..g.width {
            let d = ((x as f64 - cx).powi(2) + (y as f64 - cy).powi(2)).sqrt();
            if d >= r_in && d < r_out {
                mask.set_wall(x, y, true);
            }
        }
    }
    mask
}

/// Draw one annulus. The draw order (cx, cy, inner radius, width) is part of
/// the format: changing it changes every dataset.
pub fn gen_annulus(recipe: &ShapeRecipe, seed: u64) -> Result<BinaryMask> {
    recipe.validate()?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let c0 = (recipe.image_size - 1) as f64 / 2.0;
    let j = recipe.center_jitter_px;
    let cx = c0 + rng::uniform_in(&mut rng, -j, j);
    let cy = c0 + rng::uniform_in(&mut rng, -j, j);
    let r_in = rng::uniform_in(&mut rng, recipe.r_inner_range.0, recipe.r_inner_range.1);
    let width = rng::uniform_in(&mut rng, recipe.wall_width_range.0, recipe.wall_width_range.1);
    let g = GridGeometry::new(recipe.image_size, recipe.image_size, recipe.spacing_mm)?;
    Ok(raster_annulus(g, cx, cy, r_in, r_in + width))
}

/// Normalized 1-D Gaussian taps truncated at three sigma.
fn gaussian_kernel(sigma: f64) -> Vec<f64> {
    let radius = (3.0 * sigma).ceil() as i64;
    let mut taps: Vec<f64> = (-radius..=radius)
        .map(|i| (-(i as f64).powi(2) / (2.0 * sigma * sigma)).exp())
        .collect();
    let total: f64 = taps.iter().sum();
    for t in &mut taps {
        *t /= total;
    }
    taps
}

/// Separable zero-padded convolution.
fn blur(field: &[f64], width: usize, height: usize, kernel: &[f64]) -> Vec<f64> {
    let radius = (kernel.len() / 2) as i64;
    let mut horizontal = vec![0.0f64; field.len()];
    for y in 0..height {
        for x in 0..width {
            let mut acc = 0.0;
            for (k, &w) in kernel.iter().enumerate() {
                let sx = x as i64 + k as i64 - radius;
                if sx >= 0 && (sx as usize) < width {
                    acc += w * field[y * width + sx as usize];
                }
            }
            horizontal[y * width + x] = acc;
        }
    }
    let mut out = vec![0.0f64; field.len()];
    for y in 0..height {
        for x in 0..width {
            let mut acc = 0.0;
            for (k, &w) in kernel.iter().enumerate() {
                let sy = y as i64 + k as i64 - radius;
                if sy >= 0 && (sy as usize) < height {
                    acc += w * horizontal[sy as usize * width + x];
                }
            }
            out[y * width + x] = acc;
        }
    }
    out
}

/// Smooth random warp: per-pixel displacements drawn in [-1, 1) (the whole
/// x field row-major, then the y field), Gaussian-smoothed, scaled by
/// `alpha`, applied as a backward warp with nearest-neighbor sampling.
/// Zero strength is the exact identity.
pub fn elastic_transform(mask: &BinaryMask, alpha: f64, sigma: f64, seed: u64) -> BinaryMask {
    if alpha == 0.0 {
        return mask.clone();
    }
    let g = mask.geometry;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut dx = vec![0.0f64; g.len()];
    let mut dy = vec![0.0f64; g.len()];
    for v in &mut dx {
        *v = rng::symmetric_f64(&mut rng);
    }
    for v in &mut dy {
        *v = rng::symmetric_f64(&mut rng);
    }
    let kernel = gaussian_kernel(sigma);
    let dx = blur(&dx, g.width, g.height, &kernel);
    let dy = blur(&dy, g.width, g.height, &kernel);

    let mut out = BinaryMask::filled(g, false);
    for y in 0..g.height {
        for x in 0..g.width {
            let i = g.index(x, y);
            let sx = (x as f64 + alpha * dx[i]).round() as i64;
            let sy = (y as f64 + alpha * dy[i]).round() as i64;
            if g.contains(sx, sy) && mask.is_wall(sx as usize, sy as usize) {
                out.set_wall(x, y, true);
            }
        }
    }
    out
}

/// Dest triangles thinner than this (twice the signed area, px^2) count as
/// folded.
const PWA_MIN_AREA: f64 = 1e-9;

struct Lattice {
    nodes_per_axis: usize,
    src: Vec<(f64, f64)>,
    dst: Vec<(f64, f64)>,
}

impl Lattice {
    fn node(&self, i: usize, j: usize) -> usize {
        j * self.nodes_per_axis + i
    }
}

fn cross(o: (f64, f64), a: (f64, f64), b: (f64, f64)) -> f64 {
    (a.0 - o.0) * (b.1 - o.1) - (a.1 - o.1) * (b.0 - o.0)
}

/// One jitter draw over the lattice; `None` when any destination triangle
/// collapses or flips.
fn draw_lattice(g: GridGeometry, grid_n: usize, jitter: f64, rng: &mut ChaCha8Rng) -> Option<Lattice> {
    let n = grid_n;
    let nodes_per_axis = n + 1;
    let mut src = Vec::with_capacity(nodes_per_axis * nodes_per_axis);
    let mut dst = Vec::with_capacity(nodes_per_axis * nodes_per_axis);
    for j in 0..nodes_per_axis {
        for i in 0..nodes_per_axis {
            let x = (g.width - 1) as f64 * i as f64 / n as f64;
            let y = (g.height - 1) as f64 * j as f64 / n as f64;
            let jx = rng::uniform_in(rng, -jitter, jitter);
            let jy = rng::uniform_in(rng, -jitter, jitter);
            src.push((x, y));
            dst.push((x + jx, y + jy));
        }
    }
    let lattice = Lattice { nodes_per_axis, src, dst };
    for j in 0..n {
        for i in 0..n {
            let tl = lattice.node(i, j);
            let tr = lattice.node(i + 1, j);
            let bl = lattice.node(i, j + 1);
            let br = lattice.node(i + 1, j + 1);
            for tri in [[tl, tr, bl], [tr, br, bl]] {
                let area2 = cross(lattice.dst[tri[0]], lattice.dst[tri[1]], lattice.dst[tri[2]]);
                if area2 <= PWA_MIN_AREA {
                    return None;
                }
            }
        }
    }
    Some(lattice)
}

/// Piecewise-affine warp over an (n+1)^2 lattice with per-node jitter.
/// Folded draws are rejected and resampled up to 16 times before giving up.
/// Zero jitter is the exact identity.
pub fn piecewise_affine(mask: &BinaryMask, grid_n: usize, jitter_px: f64, seed: u64) -> Result<BinaryMask> {
    if grid_n == 0 {
        return Err(Error::Config("lattice needs at least one cell".into()));
    }
    let g = mask.geometry;
    const MAX_ATTEMPTS: u32 = 16;
    let mut lattice = None;
    let mut attempts = 0u32;
    while attempts < MAX_ATTEMPTS {
        attempts += 1;
        let mut rng =
            ChaCha8Rng::seed_from_u64(rng::derive_seed(seed, &[attempts as u64 - 1]));
        if let Some(l) = draw_lattice(g, grid_n, jitter_px, &mut rng) {
            lattice = Some(l);
            break;
        }
    }
    let Some(lattice) = lattice else {
        return Err(Error::TransformDegenerate { attempts });
    };

    let mut out = BinaryMask::filled(g, false);
    let mut claimed = vec![false; g.len()];
    let n = grid_n;
    for j in 0..n {
        for i in 0..n {
            let tl = lattice.node(i, j);
            let tr = lattice.node(i + 1, j);
            let bl = lattice.node(i, j + 1);
            let br = lattice.node(i + 1, j + 1);
            for tri in [[tl, tr, bl], [tr, br, bl]] {
                let d0 = lattice.dst[tri[0]];
                let d1 = lattice.dst[tri[1]];
                let d2 = lattice.dst[tri[2]];
                let area2 = cross(d0, d1, d2);
                let min_x = d0.0.min(d1.0).min(d2.0).floor().max(0.0) as usize;
                let max_x = (d0.0.max(d1.0).max(d2.0).ceil() as usize).min(g.width - 1);
                let min_y = d0.1.min(d1.1).min(d2.1).floor().max(0.0) as usize;
                let max_y = (d0.1.max(d1.1).max(d2.1).ceil() as usize).min(g.height - 1);
                for y in min_y..=max_y {
                    for x in min_x..=max_x {
                        let idx = g.index(x, y);
                        if claimed[idx] {
                            continue;
                        }
                        let p = (x as f64, y as f64);
                        let l0 = cross(d1, d2, p) / area2;
                        let l1 = cross(d2, d0, p) / area2;
                        let l2 = cross(d0, d1, p) / area2;
                        if l0 < -1e-12 || l1 < -1e-12 || l2 < -1e-12 {
                            continue;
                        }
                        claimed[idx] = true;
                        let s0 = lattice.src[tri[0]];
                        let s1 = lattice.src[tri[1]];
                        let s2 = lattice.src[tri[2]];
                        let sx = (l0 * s0.0 + l1 * s1.0 + l2 * s2.0).round() as i64;
                        let sy = (l0 * s0.1 + l1 * s1.1 + l2 * s2.1).round() as i64;
                        if g.contains(sx, sy) && mask.is_wall(sx as usize, sy as usize) {
                            out.set_wall(x, y, true);
                        }
                    }
                }
            }
        }
    }
    Ok(out)
}

/// Deterministic reference shapes with known wall widths.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(tag = "shape", rename_all = "snake_case")]
pub enum SpecialShape {
    /// Square ring: outer side `side`, uniform wall `width` on each face.
    SquareAnnulus { side: usize, width: usize },
    /// Circular ring with a wide wall.
    ThickCylinder { r_outer: f64, width: f64 },
    /// Two vertical slabs whose facing surfaces are the inner boundary.
    TwoSegments { slab_width: usize, gap: usize, height: usize },
}

/// A reference shape; open-wall shapes also carry their boundary labels.
#[derive(Debug, Clone)]
pub struct SpecialCase {
    pub mask: BinaryMask,
    pub labels: Option<BoundaryLabels>,
}

pub fn gen_special(shape: &SpecialShape, image_size: usize, spacing_mm: f64) -> Result<SpecialCase> {
    let g = GridGeometry::new(image_size, image_size, spacing_mm)?;
    match *shape {
        SpecialShape::SquareAnnulus { side, width } => {
            if side > image_size || side < 2 * width + 1 || width == 0 {
                return Err(Error::Config(format!(
                    "square ring side {side} / width {width} does not leave a cavity in {image_size} px"
                )));
            }
            let left = (image_size - side) / 2;
            let mut mask = BinaryMask::filled(g, false);
            for y in left..left + side {
                for x in left..left + side {
                    let inside_cavity = x >= left + width
                        && x < left + side - width
                        && y >= left + width
                        && y < left + side - width;
                    if !inside_cavity {
                        mask.set_wall(x, y, true);
                    }
                }
            }
            Ok(SpecialCase { mask, labels: None })
        }
        SpecialShape::ThickCylinder { r_outer, width } => {
            if !(width > 0.0 && r_outer > width) {
                return Err(Error::Config(format!(
                    "cylinder outer radius {r_outer} / width {width} leaves no cavity"
                )));
            }
            if r_outer > image_size as f64 / 2.0 {
                return Err(Error::Config(format!(
                    "cylinder radius {r_outer} px exceeds half the {image_size} px image"
                )));
            }
            let c = (image_size - 1) as f64 / 2.0;
            let mask = raster_annulus(g, c, c, r_outer - width, r_outer);
            Ok(SpecialCase { mask, labels: None })
        }
        SpecialShape::TwoSegments { slab_width, gap, height } => {
            let span = 2 * slab_width + gap;
            if slab_width == 0 || height == 0 || span + 2 > image_size || height + 2 > image_size {
                return Err(Error::Config(format!(
                    "segments {slab_width} px wide with {gap} px gap and height {height} do not fit in {image_size} px"
                )));
            }
            let x_left = (image_size - span) / 2;
            let x_right = x_left + slab_width + gap;
            let y0 = (image_size - height) / 2;
            let mut mask = BinaryMask::filled(g, false);
            let mut labels = BoundaryLabels::blank(g);
            for y in y0..y0 + height {
                for x in x_left..x_left + slab_width {
                    mask.set_wall(x, y, true);
                }
                for x in x_right..x_right + slab_width {
                    mask.set_wall(x, y, true);
                }
                // Facing surfaces are "inner", outward-facing ones "outer".
                labels.set_label(x_left + slab_width - 1, y, BoundaryLabel::Inner);
                labels.set_label(x_right, y, BoundaryLabel::Inner);
                labels.set_label(x_left, y, BoundaryLabel::Outer);
                labels.set_label(x_right + slab_width - 1, y, BoundaryLabel::Outer);
            }
            Ok(SpecialCase { mask, labels: Some(labels) })
        }
    }
}

/// One corpus row; paths are relative to the dataset directory.
#[derive(Debug, Clone, Serialize, Deserialize, PartialEq)]
pub struct ManifestEntry {
    pub id: usize,
    pub mask: String,
    pub thickness: String,
    pub max_thickness_mm: f64,
    pub seed: u64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct DatasetManifest {
    pub entries: Vec<ManifestEntry>,
}

pub fn read_manifest(path: &Path) -> Result<DatasetManifest> {
    let file = fs::File::open(path).map_err(|e| Error::io(path.to_path_buf(), e))?;
    let mut reader = csv::Reader::from_reader(file);
    let mut entries = Vec::new();
    for record in reader.deserialize() {
        let entry: ManifestEntry =
            record.map_err(|e| Error::Config(format!("manifest {}: {e}", path.display())))?;
        entries.push(entry);
    }
    Ok(DatasetManifest { entries })
}

/// Stage tags under an item seed.
const STAGE_ANNULUS: u64 = 0;
const STAGE_ELASTIC: u64 = 1;
const STAGE_PWA: u64 = 2;
const ITEM_ATTEMPTS: u64 = 16;

/// One fully-deterministic generation attempt for item `index`.
fn attempt_item(recipe: &ShapeRecipe, item_seed: u64) -> Result<BinaryMask> {
    let mask = gen_annulus(recipe, rng::derive_seed(item_seed, &[STAGE_ANNULUS]))?;
    let mask = elastic_transform(
        &mask,
        recipe.elastic_alpha,
        recipe.elastic_sigma,
        rng::derive_seed(item_seed, &[STAGE_ELASTIC]),
    );
    let mask = if recipe.pwa_jitter_px > 0.0 {
        piecewise_affine(
            &mask,
            recipe.pwa_grid,
            recipe.pwa_jitter_px,
            rng::derive_seed(item_seed, &[STAGE_PWA]),
        )?
    } else {
        mask
    };
    Ok(mask)
}

struct GeneratedItem {
    entry: ManifestEntry,
    attempts_used: u64,
}

/// Generate `count` mask/thickness pairs under `out_dir`:
/// `masks/{id:05}.pgm`, `thickness/{id:05}.pfm`, `manifest.csv`, and the
/// recipe that produced them as `recipe.json`. Items are built in parallel;
/// output bytes depend only on the seed and recipe.
pub fn gen_dataset(
    out_dir: &Path,
    count: usize,
    master_seed: u64,
    recipe: &ShapeRecipe,
) -> Result<DatasetManifest> {
    recipe.validate()?;
    if count == 0 {
        return Err(Error::Config("dataset needs at least one item".into()));
    }
    let masks_dir = out_dir.join("masks");
    let thickness_dir = out_dir.join("thickness");
    fs::create_dir_all(&masks_dir).map_err(|e| Error::io(masks_dir.clone(), e))?;
    fs::create_dir_all(&thickness_dir).map_err(|e| Error::io(thickness_dir.clone(), e))?;

    let cfg = SolverConfig::default();
    let results: Vec<Result<GeneratedItem>> = (0..count)
        .into_par_iter()
        .map(|index| generate_item(out_dir, index, master_seed, recipe, &cfg))
        .collect();

    let mut entries = Vec::with_capacity(count);
    let mut total_attempts = 0u64;
    for result in results {
        let item = result?;
        total_attempts += item.attempts_used;
        entries.push(item.entry);
    }
    // A recipe that throws away more than half of its draws is treated as
    // infeasible even if it limps to completion.
    let rejected = total_attempts - count as u64;
    if rejected * 2 > total_attempts {
        return Err(Error::RecipeInfeasible(format!(
            "{rejected} of {total_attempts} draws were rejected"
        )));
    }

    let manifest = DatasetManifest { entries };
    write_manifest(&out_dir.join("manifest.csv"), &manifest)?;
    let recipe_path = out_dir.join("recipe.json");
    let mut text = serde_json::to_string_pretty(recipe)
        .map_err(|e| Error::Config(format!("recipe serialization: {e}")))?;
    text.push('\n');
    fs::write(&recipe_path, text).map_err(|e| Error::io(recipe_path, e))?;
    Ok(manifest)
}

fn generate_item(
    out_dir: &Path,
    index: usize,
    master_seed: u64,
    recipe: &ShapeRecipe,
    cfg: &SolverConfig,
) -> Result<GeneratedItem> {
    for attempt in 0..ITEM_ATTEMPTS {
        let item_seed = rng::derive_seed(master_seed, &[index as u64, attempt]);
        let mask = match attempt_item(recipe, item_seed) {
            Ok(mask) => mask,
            Err(Error::TransformDegenerate { .. }) => continue,
            Err(e) => return Err(e),
        };
        // The wall must enclose exactly one cavity and be measurable.
        if label_regions(&mask).cavity_count != 1 {
            continue;
        }
        let Ok(measurement) = measure(&mask, cfg) else {
            continue;
        };

        let mask_rel = format!("masks/{index:05}.pgm");
        let thickness_rel = format!("thickness/{index:05}.pfm");
        let mask_path = out_dir.join(&mask_rel);
        write_mask_file(&mask_path, &mask)?;
        write_sidecar_spacing(&mask_path.with_extension("json"), recipe.spacing_mm)?;
        write_thickness_file(&out_dir.join(&thickness_rel), &measurement.thickness)?;
        return Ok(GeneratedItem {
            entry: ManifestEntry {
                id: index,
                mask: mask_rel,
                thickness: thickness_rel,
                max_thickness_mm: measurement.thickness.max_mm(),
                seed: item_seed,
            },
            attempts_used: attempt + 1,
        });
    }
    Err(Error::RecipeInfeasible(format!(
        "item {index} was rejected {ITEM_ATTEMPTS} times in a row"
    )))
}

fn write_manifest(path: &PathBuf, manifest: &DatasetManifest) -> Result<()> {
    let mut writer = csv::Writer::from_writer(Vec::new());
    for entry in &manifest.entries {
        writer
            .serialize(entry)
            .map_err(|e| Error::Config(format!("manifest row: {e}")))?;
    }
    let bytes = writer
        .into_inner()
        .map_err(|e| Error::Config(format!("manifest flush: {e}")))?;
    let mut file = fs::File::create(path).map_err(|e| Error::io(path.clone(), e))?;
    file.write_all(&bytes).map_err(|e| Error::io(path.clone(), e))?;
    Ok(())
}
