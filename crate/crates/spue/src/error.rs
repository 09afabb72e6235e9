use thiserror::Error;

/// Errors produced by the bottleneck model and its numerical machinery.
#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid parameter `{name}` = {value}: {reason}")]
    InvalidParam {
        name: &'static str,
        value: f64,
        reason: &'static str,
    },

    /// The earliness rate must stay strictly below the value of travel time,
    /// otherwise no departure-time equilibrium exists.
    #[error("earliness rate beta = {beta} must be < alpha = {alpha}")]
    BetaNotBelowAlpha { beta: f64, alpha: f64 },

    #[error("queueing time must be non-negative, got {0}")]
    NegativeQueueTime(f64),

    #[error("payoff x = {x} lies above the right wall {wall}")]
    PayoffAboveWall { x: f64, wall: f64 },

    #[error("density k = {k} outside [0, {kappa}]")]
    DensityOutOfRange { k: f64, kappa: f64 },

    #[error("CFL violation: day step {dr} exceeds the stable limit {limit}")]
    CflViolation { dr: f64, limit: f64 },

    #[error("grid too short: {context} needs {needed}, grid provides {available}")]
    GridTooShort {
        context: &'static str,
        needed: f64,
        available: f64,
    },

    #[error("mass mismatch in {context}: got {got}, expected {expected} (tol {tol})")]
    MassMismatch {
        context: &'static str,
        got: f64,
        expected: f64,
        tol: f64,
    },

    #[error("infeasible {context}: total capacity {capacity} cannot hold {demand} vehicles")]
    Infeasible {
        context: &'static str,
        capacity: f64,
        demand: f64,
    },

    #[error(
        "Lyapunov descent violated on day {day}: phi went {phi_prev} -> {phi_next} \
         (rate {rate}, flux integral {flux_integral})"
    )]
    DescentViolation {
        day: f64,
        phi_prev: f64,
        phi_next: f64,
        rate: f64,
        flux_integral: f64,
    },

    #[error("config error: {0}")]
    Config(String),

    #[error("malformed input: {0}")]
    MalformedInput(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

pub type Result<T> = std::result::Result<T, Error>;
