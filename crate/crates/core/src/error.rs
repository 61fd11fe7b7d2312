use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Clone, Error, PartialEq)]
pub enum Error {
    #[error("domain error: {0}")]
    Domain(String),
    #[error("integrator step size underflow at t = {t} (h = {h:e})")]
    Stiffness { t: f64, h: f64 },
    #[error("orbit is not periodic: {0}")]
    NonPeriodic(String),
    #[error("internal consistency failure: {0}")]
    InternalConsistency(String),
    #[error("empty admissible window: {0}")]
    Window(String),
    #[error("amplitude check failed: {0}")]
    Amplitude(String),
    #[error("reference orbit has A <= 0 at t = {t}")]
    DegenerateOrbit { t: f64 },
    #[error("monodromy eigenvalue deviates from 1 by {deviation:e}")]
    FloquetAnomaly { deviation: f64 },
    #[error("renormalization failed: {0}")]
    Renormalization(String),
    #[error("grid mismatch: {0}")]
    Grid(String),
    #[error("found {found} bound states, {wanted} requested")]
    Spectrum { found: usize, wanted: usize },
    #[error("eigensolver did not converge: {0}")]
    Convergence(String),
    #[error("power drift {drift:e} per step exceeds bound")]
    UnstableStep { drift: f64 },
    #[error("phase of c0 undefined (c0 = 0)")]
    PhaseAmbiguity,
    #[error("shadowing lost: sup error {error:e} exceeds orbit amplitude {amplitude:e}")]
    ShadowLoss { error: f64, amplitude: f64 },
    #[error("normal form obstruction at monomial {0}")]
    NormalFormObstruction(String),
}

impl Error {
    /// True for failures of a numerical method rather than bad input.
    pub fn is_numerical(&self) -> bool {
        matches!(
            self,
            Error::Stiffness { .. }
                | Error::InternalConsistency(_)
                | Error::FloquetAnomaly { .. }
                | Error::Renormalization(_)
                | Error::Convergence(_)
                | Error::UnstableStep { .. }
                | Error::ShadowLoss { .. }
        )
    }
}

pub(crate) fn domain(msg: impl Into<String>) -> Error {
    Error::Domain(msg.into())
}
