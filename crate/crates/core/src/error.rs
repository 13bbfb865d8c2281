use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("singular matrix: pivot {pivot:e} below tolerance at column {column}")]
    SingularMatrix { column: usize, pivot: f64 },

    #[error("matrix is not symmetric (max asymmetry {0:e})")]
    NotSymmetric(f64),

    #[error("dimension mismatch: {0}")]
    Dimension(String),

    #[error("{what} did not converge after {iterations} iterations")]
    NoConvergence { what: &'static str, iterations: usize },

    #[error("non-finite state encountered at t = {t}")]
    NonFiniteState { t: f64 },

    #[error("communication graph is disconnected (lambda2 = {lambda2:e}); a connected undirected graph is required")]
    Disconnected { lambda2: f64 },

    #[error("pseudo-gradient is not strongly monotone (estimated l_F = {0:e})")]
    NotStronglyMonotone(f64),

    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("invalid internal-model spectrum: {0}")]
    InvalidSpectrum(String),

    #[error("stabilizer pair rejected: {0}")]
    InvalidStabilizer(String),

    #[error("Sylvester solution T is singular (min pivot {0:e})")]
    SingularT(f64),

    #[error("gain escalation exhausted after {rounds} rounds")]
    EscalationExhausted { rounds: usize },

    #[error("closed loop diverged at t = {t}")]
    Diverged { t: f64 },

    #[error("{component}: {source}")]
    Synthesis {
        component: String,
        #[source]
        source: Box<Error>,
    },

    #[error("config error: {0}")]
    Config(String),
}

impl Error {
    pub(crate) fn in_component(self, component: impl Into<String>) -> Self {
        Error::Synthesis {
            component: component.into(),
            source: Box::new(self),
        }
    }

    /// Strips `Synthesis` wrappers.
    pub fn root(&self) -> &Error {
        match self {
            Error::Synthesis { source, .. } => source.root(),
            e => e,
        }
    }
}
