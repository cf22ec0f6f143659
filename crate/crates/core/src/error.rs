use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("line {line}: {message}")]
    Parse { line: usize, message: String },

    #[error("invalid {what}: {reason}")]
    Invalid { what: &'static str, reason: String },

    #[error("no resolvable dip: depth {depth:.3e} is not above 3x the noise estimate {noise:.3e}")]
    NoResolvableDip { depth: f64, noise: f64 },

    #[error("resonance is truncated at the edge of the frequency grid")]
    TruncatedResonance,

    #[error("least squares did not converge within {iterations} iterations")]
    NonConvergence { iterations: usize },

    #[error("parameter `{name}` is pinned at its physical bound")]
    PinnedAtBound { name: &'static str },

    #[error("degenerate problem: {0}")]
    Degenerate(String),

    #[error("no Nb3d spectrum available for charge referencing")]
    MissingReferenceLine,

    #[error("no sensitivity factor for line {0}")]
    MissingSensitivity(String),

    #[error("Nb3d area is required for ratios but was not supplied")]
    MissingNiobium,

    #[error("all integrated areas are zero")]
    ZeroAreas,

    #[error("band {index} collapsed: width {width:.3e} eV is below the grid step {step:.3e} eV")]
    BandCollapse { index: usize, width: f64, step: f64 },

    #[error("found {found} resolvable height mode(s), need 3")]
    TooFewModes { found: usize },

    #[error("non-propagating drive: parallel flux is zero")]
    NonPropagating,
}

impl Error {
    pub(crate) fn invalid(what: &'static str, reason: impl Into<String>) -> Self {
        Error::Invalid {
            what,
            reason: reason.into(),
        }
    }

    pub(crate) fn parse(line: usize, message: impl Into<String>) -> Self {
        Error::Parse {
            line,
            message: message.into(),
        }
    }
}
