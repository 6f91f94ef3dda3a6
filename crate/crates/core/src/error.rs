use alloc::string::String;

pub type Result<T, E = Error> = core::result::Result<T, E>;

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum Error {
    #[error("invalid parameter `{name}`: {reason}")]
    InvalidParameter { name: &'static str, reason: String },

    #[error("matrix is not unitary (max deviation {deviation:e})")]
    NotUnitary { deviation: f64 },

    #[error("matrix is not Hermitian (max deviation {deviation:e})")]
    NotHermitian { deviation: f64 },

    #[error("time {t} lies beyond the trajectory horizon {horizon}")]
    BeyondHorizon { t: f64, horizon: f64 },

    #[error("ensemble of {size} trajectories is too small for a standard error (need at least 2)")]
    EnsembleTooSmall { size: usize },

    #[error("step h = {h} under-resolves the dynamics; need h <= {required}")]
    Underresolved { h: f64, required: f64 },

    #[error("g0*tau0 = {g0tau0} is outside the {expected} regime")]
    RegimeMismatch { expected: &'static str, g0tau0: f64 },

    #[error("transform evaluated at a pole (s = {re} + {im}i)")]
    Pole { re: f64, im: f64 },

    #[error("no initial density matrix was supplied")]
    MissingDensity,
}

impl Error {
    pub(crate) fn invalid(name: &'static str, reason: impl Into<String>) -> Self {
        Error::InvalidParameter {
            name,
            reason: reason.into(),
        }
    }
}
