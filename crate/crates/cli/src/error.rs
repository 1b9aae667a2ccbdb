use thiserror::Error;

#[derive(Debug, Error)]
pub enum CliError {
    #[error("{0}")]
    Usage(String),

    #[error("{phase}: {source}")]
    Phase {
        phase: &'static str,
        #[source]
        source: dgad_core::Error,
    },
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        use dgad_core::Error as E;
        match self {
            CliError::Usage(_) => 1,
            CliError::Phase { source, .. } => match source {
                E::Config(_) => 1,
                E::Numerical(_) => 3,
                _ => 2,
            },
        }
    }
}

/// Attaches a phase label to core errors.
pub trait PhaseExt<T> {
    fn phase(self, phase: &'static str) -> Result<T, CliError>;
}

impl<T> PhaseExt<T> for dgad_core::Result<T> {
    fn phase(self, phase: &'static str) -> Result<T, CliError> {
        self.map_err(|source| CliError::Phase { phase, source })
    }
}
