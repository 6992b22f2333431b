use nzbc_core::error::{EllipticError, RegionError, ScatterError, SimError};
use thiserror::Error;

#[derive(Debug, Error)]
pub enum CliError {
    #[error("configuration: {0}")]
    Config(String),
    #[error(transparent)]
    Core(#[from] nzbc_core::Error),
    #[error("output: {0}")]
    Io(#[from] std::io::Error),
    #[error("{0}")]
    Acceptance(String),
}

impl From<ScatterError> for CliError {
    fn from(e: ScatterError) -> Self {
        CliError::Core(e.into())
    }
}

/// Process exit status.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum ExitStatus {
    Ok = 0,
    Region = 2,
    NonConvergence = 3,
    Acceptance = 4,
}

impl CliError {
    pub fn status(&self) -> ExitStatus {
        use nzbc_core::Error as E;
        match self {
            CliError::Config(_) | CliError::Io(_) => ExitStatus::Region,
            CliError::Acceptance(_) => ExitStatus::Acceptance,
            CliError::Core(e) => match e {
                E::Branch(_) | E::Region(_) => ExitStatus::Region,
                E::Sim(SimError::Config(_) | SimError::TimeStep { .. } | SimError::DomainTooSmall { .. } | SimError::EmptyMask) => ExitStatus::Region,
                E::Scatter(ScatterError::InvalidDatum(_) | ScatterError::ExcludedPoint(_) | ScatterError::OutsideStrip { .. } | ScatterError::Branch(_)) => {
                    ExitStatus::Region
                }
                E::Elliptic(EllipticError::Domain(_) | EllipticError::DegenerateNome(_)) => ExitStatus::Region,
                E::Quad(_) | E::Elliptic(_) | E::Scatter(_) => ExitStatus::NonConvergence,
            },
        }
    }
}

/// Whether `e` is a region-type error rather than a numerical failure.
pub fn is_region_error(e: &nzbc_core::Error) -> bool {
    matches!(e, nzbc_core::Error::Region(RegionError::WrongRegion { .. } | RegionError::Degenerate(_)))
}
