use std::process::ExitCode;

use qlambda_core::Error;

/// Anything that ends a command early, tagged with the exit status it maps to.
#[derive(Debug, thiserror::Error)]
pub enum CliError {
    #[error("config: {0}")]
    Config(String),
    #[error("{source}{}", context.as_deref().map(|c| format!("\n  at {c}")).unwrap_or_default())]
    Core { source: Error, context: Option<String> },
    #[error("io: {0}")]
    Io(#[from] std::io::Error),
}

impl From<Error> for CliError {
    fn from(source: Error) -> Self {
        CliError::Core { source, context: None }
    }
}

impl CliError {
    pub fn config(msg: impl Into<String>) -> Self {
        CliError::Config(msg.into())
    }

    /// Prefixes a config message with where it came from.
    pub fn located(self, place: impl std::fmt::Display) -> Self {
        match self {
            CliError::Config(msg) => CliError::Config(format!("{place}: {msg}")),
            other => other,
        }
    }

    pub fn exit_code(&self) -> u8 {
        match self {
            CliError::Config(_) => 2,
            CliError::Core { source, .. } => core_exit_code(source),
            CliError::Io(_) => 1,
        }
    }

    pub fn to_exit(&self) -> ExitCode {
        ExitCode::from(self.exit_code())
    }
}

/// 2 for bad input, 3 for an integration guard, 4 for a physics-domain
/// failure, 5 when a quadrature grid has not converged.
pub fn core_exit_code(err: &Error) -> u8 {
    use Error::*;
    match err {
        InvalidConstant { .. }
        | InvalidSystem { .. }
        | InvalidStep { .. }
        | NotNormalized { .. }
        | SuperluminalBoost { .. }
        | CutoffTooSmall { .. } => 2,
        StepTooLarge { .. } => 3,
        GridTooCoarse { .. } => 5,
        SpacelikeVector { .. }
        | NonpositiveEnergy { .. }
        | BelowThreshold { .. }
        | MasslessAtRest
        | MasslessCovariant
        | ZeroWavevector
        | DegenerateLevels { .. }
        | IncommensurateFrequencies
        | PoleEncountered { .. }
        | OffShellInput { .. }
        | ForwardSingularity { .. }
        | RealPairThreshold { .. }
        | CorrectionTooLarge { .. }
        | SignMismatch { .. } => 4,
    }
}
