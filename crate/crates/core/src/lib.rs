//! Dense wall-thickness measurement on binary annular masks.
//!
//! The wall is treated as a conductor between two isopotential surfaces: a
//! Laplace solve across the wall pixels yields a potential whose streamlines
//! run from the inner surface to the outer one, and the arc length of the
//! streamline through a pixel is that pixel's thickness. On top of the
//! measurement engine sit a synthetic corpus generator (randomized annuli
//! under elastic and piecewise-affine warps), evaluation metrics with
//! dataset reports, and angular segment summaries with a bullseye rendering.
//!
//! Pipelines are deterministic end to end: the same mask, configuration,
//! and seeds reproduce results bit for bit, regardless of thread count.

pub mod aha;
pub mod config;
pub mod error;
pub mod grid;
pub mod io;
pub mod laplace;
pub mod metrics;
pub mod streamline;
pub mod synth;

pub use aha::{assemble_17, bullseye_svg, segment_slice, segments_to_csv, RotationSense};
pub use config::SolverConfig;
pub use error::{Error, Result};
pub use grid::{
    extract_boundaries, label_regions, normalize_grid, BinaryMask, BoundaryConditions,
    BoundaryLabel, BoundaryLabels, GridGeometry, RegionClass, RegionLabels, DEFAULT_SPACING_MM,
};
pub use laplace::{
    residual, solve, solve_laplace, tangent_field, CellKind, PotentialField, SolveDomain,
    TangentField,
};
pub use metrics::{
    error_stats, eval_dataset, histogram, mae, max_thickness, mse, write_eval_report, ErrorStats,
    EvalReport, Histogram, ItemEval, Region,
};
pub use streamline::{
    fill_missing, measure, measure_with_boundaries, splat, trace, Assigned, Measurement,
    Streamline, Termination, ThicknessMap,
};
pub use synth::{
    elastic_transform, gen_annulus, gen_dataset, gen_special, piecewise_affine, read_manifest,
    DatasetManifest, ManifestEntry, ShapeRecipe, SpecialCase, SpecialShape,
};
