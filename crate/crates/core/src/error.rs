use thiserror::Error;

/// Every failure mode the library can report.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("v = {v} lies outside the model domain ({lo}, {hi})")]
    Domain { v: f64, lo: f64, hi: f64 },
    #[error("derivative order {0} exceeds the supported maximum of 4")]
    OrderTooHigh(usize),
    #[error("operation requires an Euler-Korteweg (two-field) model")]
    NotSystem,
    #[error("invalid model: {0}")]
    InvalidModel(String),
    #[error("no periodic orbit: {0}")]
    NoPeriodicOrbit(String),
    #[error("degenerate orbit ({side}): root gap {gap:e}")]
    DegenerateOrbit { side: LimitSide, gap: f64 },
    #[error("several wells admit orbits in the window; narrow it")]
    MultipleWells,
    #[error("quadrature did not converge: error estimate {estimate:e}")]
    QuadratureNotConverged { estimate: f64 },
    #[error("profile integrator failed: {0}")]
    IntegratorFailure(String),
    #[error("finite-difference stencil left the wave branch in direction {0}")]
    StencilLeftBranch(usize),
    #[error("action Hessian is singular (det = {0:e})")]
    SingularThetaHessian(f64),
    #[error("Jacobian is singular")]
    SingularJacobian,
    #[error("Newton iteration did not converge: residual {0:e}")]
    NoConvergence(f64),
    #[error("Newton iterate left the wave branch")]
    LeftBranch,
    #[error("eigen-solve failed: {0}")]
    EigenFailure(String),
    #[error("no well minimum of W in the window")]
    NoWellMinimum,
    #[error("degenerate well: W'' = {0:e}")]
    DegenerateWell(f64),
    #[error("no saddle (local maximum of W) in the window")]
    NoSaddle,
    #[error("homoclinic level set does not close: {0}")]
    TailDivergence(String),
    #[error("group velocity is an eigenvalue of the dispersionless block")]
    GroupVelocityResonance,
    #[error("soliton speed is an eigenvalue of the dispersionless block")]
    SpeedResonance,
    #[error("fit rejected: {0}")]
    FitRejected(String),
    #[error("grid is degenerate: {0}")]
    GridDegenerate(String),
    #[error("wavenumber {k0} below the admissible minimum {kmin}")]
    InadmissibleWavenumber { k0: f64, kmin: f64 },
    #[error("model is outside the classes covered by the sign law")]
    UncoveredClass,
    #[error("conjugate model leaves the supported function families: {0}")]
    UnsupportedConjugateFamily(String),
}

/// Which distinguished limit a degenerate orbit sits at.
#[derive(Debug, Clone, Copy, PartialEq, Eq, serde::Serialize)]
#[serde(rename_all = "snake_case")]
pub enum LimitSide {
    Harmonic,
    Soliton,
}

impl std::fmt::Display for LimitSide {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            LimitSide::Harmonic => write!(f, "harmonic side"),
            LimitSide::Soliton => write!(f, "soliton side"),
        }
    }
}

pub type Result<T> = std::result::Result<T, Error>;
