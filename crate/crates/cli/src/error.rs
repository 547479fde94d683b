use thiserror::Error;

/// Exit status: success.
pub const EXIT_OK: u8 = 0;
/// Exit status: unexpected failure (I/O, numerics).
pub const EXIT_FAILURE: u8 = 1;
/// Exit status: negative scientific verdict.
pub const EXIT_NEGATIVE: u8 = 2;
/// Exit status: the analysis could not decide.
pub const EXIT_UNDETERMINED: u8 = 3;
/// Exit status: invalid command line or document.
pub const EXIT_CONFIG: u8 = 64;

/// Errors surfaced by the command-line front end.
#[derive(Debug, Error)]
pub enum CliError {
    #[error("config error: {0}")]
    Config(String),

    #[error("{context}: {source}")]
    Io {
        context: String,
        #[source]
        source: std::io::Error,
    },

    #[error(transparent)]
    Core(#[from] delaystab::Error),
}

impl CliError {
    pub fn io(context: impl Into<String>, source: std::io::Error) -> Self {
        CliError::Io {
            context: context.into(),
            source,
        }
    }

    pub fn exit_code(&self) -> u8 {
        use delaystab::Error as E;
        match self {
            CliError::Config(_) => EXIT_CONFIG,
            CliError::Io { .. } => EXIT_FAILURE,
            CliError::Core(e) => match e {
                E::DimensionMismatch { .. }
                | E::InvalidParameter { .. }
                | E::NonPositive { .. }
                | E::NegativeState { .. }
                | E::Structure(_)
                | E::Hypothesis(_)
                | E::MissingLimit(_)
                | E::HistoryUnderrun { .. } => EXIT_CONFIG,
                E::InvalidCertificate(_) | E::Diverged { .. } => EXIT_NEGATIVE,
                E::NoFiniteRate(_) => EXIT_UNDETERMINED,
                E::Root(_) | E::Numerical(_) => EXIT_FAILURE,
            },
        }
    }
}
