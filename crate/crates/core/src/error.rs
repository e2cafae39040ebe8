use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("invalid grid: {0}")]
    InvalidGrid(String),
    #[error("fields live on different grids")]
    GridMismatch,
    #[error("rescaled field lost {relative:.3e} of its L2 mass (limit 1e-8)")]
    Truncation { relative: f64 },
    #[error("cannot normalize the zero field")]
    ZeroField,
    #[error("shooting bracket on Q(0) could not be established: {0}")]
    NoBracket(String),
    #[error("radial solution diverged at r = {radius:.4}")]
    Diverged { radius: f64 },
    #[error("relaxation did not converge: relative change {change:.3e} after {iters} iterations")]
    NotConverged { change: f64, iters: usize },
    #[error("well {index} at {center:?} lies outside the box margin")]
    WellOutsideBox { index: usize, center: Vec<f64> },
    #[error("invalid potential: {0}")]
    InvalidPotential(String),
    #[error("potential is not subcritical: inf k + a* = {margin:.3e}")]
    NotSubcritical { margin: f64 },
    #[error("inf k + a* = {margin:.3e} lies inside the critical band")]
    AmbiguousThreshold { margin: f64 },
    #[error("time step fell below 1e-12 (energy {energy:.6e})")]
    StepUnderflow { energy: f64 },
    #[error("cutoff radius {radius} must be below half the box width {limit}")]
    CutoffTooWide { radius: f64, limit: f64 },
    #[error("cutoff optimizer has nonnegative gap {gap:.3e}")]
    GapNotNegative { gap: f64 },
    #[error("no well holds half of the mass (best {best_mass:.4})")]
    NoConcentration { best_mass: f64 },
    #[error("power-law fit needs positive values and at least 4 records: {0}")]
    DegenerateFit(String),
    #[error("invalid solver configuration: {0}")]
    InvalidConfig(String),
    #[error("field format: {0}")]
    Format(String),
}

impl From<std::io::Error> for Error {
    fn from(e: std::io::Error) -> Self {
        Error::Format(e.to_string())
    }
}
