use modlab_core::Error;

#[derive(Debug, thiserror::Error)]
pub enum CliError {
    #[error("invalid config: {0}")]
    Config(String),
    #[error(transparent)]
    Core(#[from] Error),
    #[error("i/o failure: {0}")]
    Io(#[from] std::io::Error),
    #[error("csv failure: {0}")]
    Csv(#[from] csv::Error),
}

impl CliError {
    /// 2 invalid input, 3 no periodic orbit, 4 degenerate or failed limit,
    /// 5 tolerance failure, 1 anything else.
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Config(_) => 2,
            CliError::Io(_) | CliError::Csv(_) => 1,
            CliError::Core(e) => match e {
                Error::Domain { .. }
                | Error::OrderTooHigh(_)
                | Error::NotSystem
                | Error::InvalidModel(_)
                | Error::GridDegenerate(_)
                | Error::InadmissibleWavenumber { .. }
                | Error::UncoveredClass
                | Error::UnsupportedConjugateFamily(_) => 2,
                Error::NoPeriodicOrbit(_) | Error::NoWellMinimum | Error::MultipleWells => 3,
                Error::DegenerateOrbit { .. }
                | Error::IntegratorFailure(_)
                | Error::StencilLeftBranch(_)
                | Error::SingularThetaHessian(_)
                | Error::SingularJacobian
                | Error::LeftBranch
                | Error::EigenFailure(_)
                | Error::DegenerateWell(_)
                | Error::NoSaddle
                | Error::TailDivergence(_)
                | Error::GroupVelocityResonance
                | Error::SpeedResonance => 4,
                Error::QuadratureNotConverged { .. } | Error::NoConvergence(_) | Error::FitRejected(_) => 5,
            },
        }
    }
}
