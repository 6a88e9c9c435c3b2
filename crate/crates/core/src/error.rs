use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum GameError {
    #[error("{name} = {value} is not a probability in [0, 1]")]
    ProbabilityOutOfRange { name: &'static str, value: f64 },
    #[error("payoff entries must be finite")]
    NonFinitePayoff,
    #[error("degenerate chain: 1 - (a1-g1)(a2-g2) = {denominator:e}, stationary state is not unique")]
    DegenerateChain { denominator: f64 },
}

#[derive(Debug, Error, Clone, PartialEq)]
pub enum QreError {
    #[error(transparent)]
    Game(#[from] GameError),
    #[error("rationality must be a finite non-negative number, got {0}")]
    InvalidLambda(f64),
    #[error("no start reached the acceptance tolerance at lambda = {lambda} (best objective {best_objective:e})")]
    NoSolution { lambda: f64, best_objective: f64 },
    #[error("lambda grid must be sorted ascending")]
    UnsortedGrid,
}

#[derive(Debug, Error)]
pub enum DataError {
    #[error("parse error at row {row}, column {column}: {message}")]
    Parse {
        row: usize,
        column: String,
        message: String,
    },
    #[error("sweep does not contain a continuous branch from lambda 0 to {lambda_max}: {reason}")]
    InsufficientSweep { lambda_max: f64, reason: String },
    #[error(transparent)]
    Csv(#[from] csv::Error),
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

#[derive(Debug, Error, Clone, PartialEq)]
pub enum SimError {
    #[error(transparent)]
    Game(#[from] GameError),
    #[error("a simulation needs at least one round")]
    ZeroRounds,
    #[error("estimation needs at least two rounds, got {0}")]
    TooShort(usize),
    #[error("group play needs an even number of at least two players, got {0}")]
    GroupSize(usize),
}
