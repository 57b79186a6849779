use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("matrix is not square ({rows}x{cols})")]
    NotSquare { rows: usize, cols: usize },

    #[error("dimension mismatch: {0}")]
    DimensionMismatch(String),

    #[error("matrix is not Hermitian: defect norm ‖h − h†‖ = {defect:.3e}")]
    NotHermitian { defect: f64 },

    #[error("non-finite value encountered in {0}")]
    NonFinite(&'static str),

    #[error("numerically singular system{}: smallest pivot {pivot:.3e} <= {threshold:.3e}",
        context.as_ref().map(|c| format!(" ({c})")).unwrap_or_default())]
    Singular {
        context: Option<String>,
        pivot: f64,
        threshold: f64,
    },

    #[error("eigendecomposition failed: {0}")]
    Eigen(String),

    #[error("ODE propagation failed: {0}")]
    Propagation(String),

    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error(
        "Fock truncation not converged at n_max = {n_max}: low-lying energies shift by {shift:.3e} ω_q \
         when adding {extra} photons; increase n_max"
    )]
    Truncation { n_max: usize, extra: usize, shift: f64 },

    #[error("no interior minimum of E{upper} − E{lower} in g ∈ [{lo}, {hi}] (minimizer at {at})")]
    NoInteriorMinimum {
        lower: usize,
        upper: usize,
        lo: f64,
        hi: f64,
        at: f64,
    },

    #[error("level ordering violated: E{upper} − E{lower} = {gap:.3e} < 0")]
    Ordering { upper: usize, lower: usize, gap: f64 },

    #[error("level {target} cannot be driven from the ground state: {reason}")]
    Undrivable { target: usize, reason: String },

    #[error("steady state is not unique: {count} Liouvillian eigenvalues below {threshold:.1e}")]
    AmbiguousSteadyState { count: usize, threshold: f64 },

    #[error("peak at ω = {position:.6e} is under-resolved: {points} grid points across its width (need {required})")]
    UnderResolved {
        position: f64,
        points: usize,
        required: usize,
    },
}
