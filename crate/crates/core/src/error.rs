use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("quadrature did not converge: {what} (estimate {estimate:e}, error {error:e})")]
    NonConvergence {
        what: &'static str,
        estimate: f64,
        error: f64,
    },

    #[error("domain error: {0}")]
    Domain(String),

    #[error("degenerate potential: {0}")]
    DegeneratePotential(String),

    #[error("energy {z} outside edge {edge} range ({lo}, {hi})")]
    OutOfRange { edge: usize, z: f64, lo: f64, hi: f64 },

    #[error("potential has {modes} Fourier modes but the basis only carries {n_fourier}")]
    Truncation { modes: usize, n_fourier: usize },

    #[error(
        "linear solver stalled after {iterations} iterations (relative residual {residual:e}); \
         try n_hermite={suggested_hermite}, n_fourier={suggested_fourier}"
    )]
    SolverStall {
        iterations: usize,
        residual: f64,
        suggested_hermite: usize,
        suggested_fourier: usize,
    },

    #[error("the two diffusivity formulas disagree (relative difference {0:e}); basis is under-resolved")]
    InconsistentFormulas(f64),

    #[error("eigenvalue solver failed: {0}")]
    EigSolverFailure(String),

    #[error("ensemble is not diffusive over the fit window (relative trend {trend:.3})")]
    NotDiffusive { trend: f64 },

    #[error("invalid configuration: {0}")]
    InvalidConfig(String),
}

impl Error {
    /// Errors that come from a numerical method failing rather than bad input.
    pub fn is_numerical(&self) -> bool {
        matches!(
            self,
            Error::NonConvergence { .. }
                | Error::SolverStall { .. }
                | Error::InconsistentFormulas(_)
                | Error::EigSolverFailure(_)
                | Error::NotDiffusive { .. }
        )
    }
}

pub type Result<T> = std::result::Result<T, Error>;
