use thiserror::Error;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    /// An input lies outside the domain of the operation (non-timelike
    /// momentum, non-SPD metric, invalid parameters).
    #[error("domain error: {0}")]
    Domain(String),

    #[error("degenerate surface: tangent triple contraction {contraction:e} below threshold")]
    DegenerateSurface { contraction: f64 },

    #[error("admissibility violated: {0}")]
    Admissibility(String),

    /// Light-signal root search found no emission/absorption pair.
    #[error("no solution in parameter interval [{s_min}, {s_max}]: {reason}")]
    NoSolution { s_min: f64, s_max: f64, reason: String },

    #[error("chart inversion did not converge after {iterations} iterations (residual {residual:e})")]
    Inversion { iterations: usize, residual: f64 },

    #[error("singular potential: particles {i} and {j} coincide")]
    SingularPotential { i: usize, j: usize },

    /// Integration hit a collision; carries the last good relative state.
    #[error("singularity at tau = {tau}: |rho| = {rho_norm:e}")]
    Singularity {
        tau: f64,
        rho_norm: f64,
        last_rho: [f64; 3],
        last_pi: [f64; 3],
    },

    #[error("implicit substep did not converge in {iterations} iterations (increment {increment:e})")]
    ImplicitStep { iterations: usize, increment: f64 },

    #[error("eigen-solver failed after {iterations} iterations: {detail}")]
    EigenSolver { iterations: usize, detail: String },
}

pub type Result<T> = std::result::Result<T, Error>;
