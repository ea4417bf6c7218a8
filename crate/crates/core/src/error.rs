use thiserror::Error;

/// Errors raised by the library. Every variant corresponds to a precondition
/// or numerical failure of one of the operations.
#[derive(Debug, Error)]
pub enum Error {
    // point sets
    #[error("point-set generation failed: {0}")]
    GenerationFailed(String),
    #[error("eroded window is empty (window too small relative to R = {relative_density})")]
    EmptyWindow { relative_density: f64 },
    #[error("restriction of a point set to the ball of radius {radius} is empty")]
    EmptyIntersection { radius: f64 },
    #[error("no admissible bijection: maximal matched displacement {displacement} is not below r = {r}")]
    NoBijection { displacement: f64, r: f64 },
    #[error("interpolated sample at t = {t} violates the Delone conditions")]
    DensityViolated { t: f64 },

    // magnetics
    #[error("translation {shift:?} is not an integer multiple of the grid pitch {pitch}")]
    OffGrid { shift: Vec<f64>, pitch: f64 },
    #[error("translation {shift:?} maps only part of the pattern onto itself")]
    NoMatchingSites { shift: Vec<f64> },

    // operators
    #[error("grid pitch {pitch} exceeds r/4 = {limit}")]
    PitchTooCoarse { pitch: f64, limit: f64 },
    #[error("atomic potential has no compact support")]
    PotentialNotCompact,
    #[error("hopping range {range} must be below a quarter of the smallest window edge ({limit})")]
    RangeTooLarge { range: f64, limit: f64 },
    #[error("operators live on different bases or twists")]
    BasisMismatch,
    #[error("resolvent requires Im z != 0")]
    RealShift,

    // spectral
    #[error("operator is not Hermitian (max asymmetry {asymmetry:e})")]
    NotHermitian { asymmetry: f64 },
    #[error("interval endpoint {endpoint} lies within {distance:e} of the spectrum")]
    EndpointInSpectrum { endpoint: f64, distance: f64 },

    // frames
    #[error("projection has rank zero")]
    RankZero,
    #[error("family is not a frame for the range: lower bound {lower:e}, upper bound {upper:e}")]
    NotAFrame { lower: f64, upper: f64 },
    #[error("bump width {width} exceeds r/2 = {limit}")]
    WidthTooLarge { width: f64, limit: f64 },
    #[error("Gram matrix is singular: min eigenvalue {min_eigenvalue:e}, condition number {condition:e}")]
    GramSingular { min_eigenvalue: f64, condition: f64 },
    #[error("spectral gap closed at t = {t}")]
    GapClosed { t: f64 },

    // chern
    #[error("top-degree Chern number requires an even dimension, got {0}")]
    OddDimension(usize),
    #[error("interior sub-window at fraction {fraction} contains no basis elements")]
    EmptyInterior { fraction: f64 },
    #[error("band {band} touches a neighbouring band (minimal gap {gap:e})")]
    GaplessBand { band: usize, gap: f64 },

    // generic
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),
    #[error("parse error at line {line}: {message}")]
    Parse { line: usize, message: String },
    #[error("configuration error at `{key}`: {message}")]
    Config { key: String, message: String },
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

impl Error {
    /// Numerical failures (as opposed to precondition violations) exit with code 3.
    pub fn is_numerical(&self) -> bool {
        matches!(
            self,
            Error::GapClosed { .. }
                | Error::GramSingular { .. }
                | Error::NotAFrame { .. }
                | Error::GaplessBand { .. }
                | Error::GenerationFailed(_)
                | Error::DensityViolated { .. }
        )
    }

    pub fn kind(&self) -> &'static str {
        match self {
            Error::GenerationFailed(_) => "GenerationFailed",
            Error::EmptyWindow { .. } => "EmptyWindow",
            Error::EmptyIntersection { .. } => "EmptyIntersection",
            Error::NoBijection { .. } => "NoBijection",
            Error::DensityViolated { .. } => "DensityViolated",
            Error::OffGrid { .. } => "OffGrid",
            Error::NoMatchingSites { .. } => "NoMatchingSites",
            Error::PitchTooCoarse { .. } => "PitchTooCoarse",
            Error::PotentialNotCompact => "PotentialNotCompact",
            Error::RangeTooLarge { .. } => "RangeTooLarge",
            Error::BasisMismatch => "BasisMismatch",
            Error::RealShift => "RealShift",
            Error::NotHermitian { .. } => "NotHermitian",
            Error::EndpointInSpectrum { .. } => "EndpointInSpectrum",
            Error::RankZero => "RankZero",
            Error::NotAFrame { .. } => "NotAFrame",
            Error::WidthTooLarge { .. } => "WidthTooLarge",
            Error::GramSingular { .. } => "GramSingular",
            Error::GapClosed { .. } => "GapClosed",
            Error::OddDimension(_) => "OddDimension",
            Error::EmptyInterior { .. } => "EmptyInterior",
            Error::GaplessBand { .. } => "GaplessBand",
            Error::InvalidParameter(_) => "InvalidParameter",
            Error::Parse { .. } => "Parse",
            Error::Config { .. } => "Config",
            Error::Io(_) => "Io",
        }
    }
}

pub type Result<T> = std::result::Result<T, Error>;
