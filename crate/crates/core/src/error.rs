//! Error taxonomy shared by every module. Variants map 1:1 onto the
//! machine-parseable `error=<Kind>` lines the CLI prints.

use std::path::PathBuf;

#[derive(Debug, thiserror::Error)]
pub enum Error {
    /// Malformed PGM/PFM input; `offset` is the byte where parsing gave up.
    #[error("byte {offset}: {msg}")]
    Parse { offset: usize, msg: String },

    /// Two grids that must agree in size (or a shape of the wrong arity).
    #[error("{0}")]
    Dimension(String),

    /// A mask with no wall pixels where the operation needs at least one.
    #[error("mask contains no wall pixels")]
    EmptyWall,

    /// No enclosed cavity: automatic boundary extraction cannot run.
    #[error("mask has no enclosed cavity; supply manual boundary labels")]
    NoInnerBoundary,

    /// The wall never touches the exterior, so no outer boundary exists.
    #[error("wall has no pixel adjacent to the exterior")]
    NoOuterBoundary,

    /// Thickness interpolation has no splatted source pixels to draw from.
    #[error("no splatted pixels available to interpolate from")]
    InterpolationImpossible,

    /// Manual boundary labels that violate their preconditions.
    #[error("{0}")]
    BoundarySpec(String),

    /// A shape recipe whose geometry cannot fit or keeps getting rejected.
    #[error("{0}")]
    RecipeInfeasible(String),

    /// A random deformation stayed degenerate through every retry.
    #[error("deformation degenerate after {attempts} attempts")]
    TransformDegenerate { attempts: u32 },

    /// Configuration field outside its documented domain.
    #[error("{0}")]
    Config(String),

    /// Value-range misuse, e.g. an empty color range.
    #[error("{0}")]
    Range(String),

    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
}

impl Error {
    /// Stable kind token for one-line machine-parseable error output.
    pub fn kind(&self) -> &'static str {
        match self {
            Error::Parse { .. } => "Parse",
            Error::Dimension(_) => "Dimension",
            Error::EmptyWall => "EmptyWall",
            Error::NoInnerBoundary => "NoInnerBoundary",
            Error::NoOuterBoundary => "NoOuterBoundary",
            Error::InterpolationImpossible => "InterpolationImpossible",
            Error::BoundarySpec(_) => "BoundarySpec",
            Error::RecipeInfeasible(_) => "RecipeInfeasible",
            Error::TransformDegenerate { .. } => "TransformDegenerate",
            Error::Config(_) => "Config",
            Error::Range(_) => "Range",
            Error::Io { .. } => "Io",
        }
    }

    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io { path: path.into(), source }
    }
}

pub type Result<T> = std::result::Result<T, Error>;
