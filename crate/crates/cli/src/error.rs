use thiserror::Error;

#[derive(Debug, Error)]
pub enum CliError {
    #[error("config error at `{path}`: {message}")]
    Config { path: String, message: String },
    #[error(transparent)]
    Solver(#[from] plap_core::Error),
    #[error("i/o error: {0}")]
    Io(#[from] std::io::Error),
}

pub const EXIT_OK: u8 = 0;
pub const EXIT_OTHER: u8 = 1;
pub const EXIT_CONFIG: u8 = 2;
pub const EXIT_NONCONVERGENCE: u8 = 3;
pub const EXIT_BOUND_VIOLATION: u8 = 4;

impl CliError {
    pub fn exit_code(&self) -> u8 {
        use plap_core::Error as E;
        match self {
            CliError::Config { .. } => EXIT_CONFIG,
            CliError::Solver(E::Domain(_) | E::Precondition(_)) => EXIT_CONFIG,
            CliError::Solver(E::NonConvergence(_) | E::Bracket(_)) => EXIT_NONCONVERGENCE,
            CliError::Solver(E::Degenerate(_)) | CliError::Io(_) => EXIT_OTHER,
        }
    }
}
