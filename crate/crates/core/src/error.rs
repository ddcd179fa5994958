use thiserror::Error;

#[derive(Debug, Error)]
pub enum Error {
    #[error("mass matrix is singular or ill-conditioned at q = {q:?} (condition estimate {cond:.3e})")]
    SingularMassMatrix { q: [f64; 4], cond: f64 },

    #[error("equilibrium residual {residual:.3e} too large at v = {v:?}")]
    EquilibriumResidual { v: [f64; 2], residual: f64 },

    #[error("closed-loop matrix is not Hurwitz: {0}")]
    NotHurwitz(String),

    #[error("initial gain does not stabilize the linear model (max real eigenvalue {0:.4e})")]
    NonStabilizingGain(f64),

    #[error("Kleinman iteration did not converge after {iterations} steps (residual {residual:.3e})")]
    RiccatiNotConverged { iterations: usize, residual: f64 },

    #[error("degenerate point set: {0}")]
    DegenerateHull(String),

    #[error("infeasible start: dynamic safety margin {0:.4e} is negative")]
    InfeasibleStart(f64),

    #[error("reference inadmissible: {0}")]
    ReferenceInadmissible(String),

    #[error("constraint `{label}` violated at t = {t:.4} s (value {value:.6e} > bound {bound:.6e})")]
    ConstraintViolation {
        label: String,
        t: f64,
        value: f64,
        bound: f64,
    },

    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("config error: {0}")]
    Config(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

pub type Result<T> = std::result::Result<T, Error>;
