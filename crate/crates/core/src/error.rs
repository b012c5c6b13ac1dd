use thiserror::Error;

/// Every failure mode surfaced by the toolkit.
///
/// Display strings are stable; the CLI and the verification report match on them.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum EhmError {
    #[error("rational input")]
    RationalInput,
    #[error("precision exhausted")]
    PrecisionExhausted,
    #[error("insufficient depth")]
    InsufficientDepth,
    #[error("budget exceeded")]
    BudgetExceeded,
    #[error("zero index")]
    ZeroIndex,
    #[error("invalid coupling")]
    InvalidCoupling,
    #[error("complex branch")]
    ComplexBranch,
    #[error("singular cocycle")]
    SingularCocycle,
    #[error("lift failure")]
    LiftFailure,
    #[error("invalid tolerance")]
    InvalidTolerance,
    #[error("resonant energy")]
    ResonantEnergy,
    #[error("unresolved band edge")]
    UnresolvedBandEdge,
    #[error("singular off-diagonal")]
    SingularOffDiagonal,
    #[error("label must be nonzero")]
    LabelMustBeNonzero,
    #[error("label not found")]
    LabelNotFound,
    #[error("rotation inconsistency")]
    RotationInconsistency,
    #[error("ambiguous label")]
    AmbiguousLabel,
    #[error("bad normalization center")]
    BadNormalizationCenter,
    #[error("no state")]
    NoState,
    #[error("insufficient window")]
    InsufficientWindow,
    #[error("degenerate nodes")]
    DegenerateNodes,
    #[error("window not found")]
    WindowNotFound,
    #[error("non-unique section")]
    NonUniqueSection,
    #[error("no section at this (theta,E)")]
    NoSection,
    #[error("small divisor breach at k={0}")]
    SmallDivisorBreach(i64),
    #[error("degree unresolved")]
    DegreeUnresolved,
    #[error("inconsistent normal form")]
    InconsistentNormalForm,
    #[error("mode ill-conditioned ({0})")]
    ModeIllConditioned(i64),
    #[error("certificate out of range")]
    CertificateOutOfRange,
    #[error("insufficient data for fit")]
    InsufficientData,
    #[error("{stage}: {source}")]
    Stage {
        stage: &'static str,
        source: Box<EhmError>,
    },
}

impl EhmError {
    pub fn at(self, stage: &'static str) -> EhmError {
        EhmError::Stage {
            stage,
            source: Box::new(self),
        }
    }

    /// Innermost error with stage tags stripped.
    pub fn root(&self) -> &EhmError {
        match self {
            EhmError::Stage { source, .. } => source.root(),
            e => e,
        }
    }
}

pub type Result<T> = std::result::Result<T, EhmError>;
