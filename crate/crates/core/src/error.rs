use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("domain error: {0}")]
    Domain(String),

    /// The max-AoI constraint cannot be met: at most M devices upload per
    /// slot, so every device is refreshed within Γ slots only if K ≤ M·Γ.
    #[error(
        "infeasible configuration: {devices} devices exceed {servers} servers x max AoI {max_aoi} \
         (feasible if and only if K <= M*Gamma)"
    )]
    Infeasible {
        devices: usize,
        servers: usize,
        max_aoi: usize,
    },

    #[error("{due} devices are due in one slot but only {servers} servers exist")]
    TooManyDue { due: usize, servers: usize },

    #[error(
        "device {device} needs {required:.3e} W to reach server {server} within one slot, cap is {cap:.3e} W"
    )]
    PowerCap {
        device: usize,
        server: usize,
        required: f64,
        cap: f64,
    },

    #[error("invalid cost matrix: {0}")]
    InvalidMatrix(String),

    #[error("precondition violated: {0}")]
    Precondition(String),

    #[error("empty input: {0}")]
    Empty(&'static str),
}

impl Error {
    /// True for errors that mean "this configuration cannot be scheduled",
    /// as opposed to malformed input.
    pub fn is_infeasibility(&self) -> bool {
        matches!(
            self,
            Error::Infeasible { .. } | Error::TooManyDue { .. } | Error::PowerCap { .. }
        )
    }
}
