use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("grid resolution: {0}")]
    Grid(String),
    #[error("degenerate geometry: {0}")]
    Degenerate(String),
    #[error("graph outside tubular neighborhood: {0}")]
    Tubular(String),
    #[error("shooting found no torus: {0}")]
    NoTorus(String),
    #[error("newton refinement failed: {0}")]
    Refinement(String),
    #[error("eigensolver: {0}")]
    Eigen(String),
    #[error("spectral gap: {0}")]
    Gap(String),
    #[error("backward propagation of an infinite-dimensional component")]
    IllPosed,
    #[error("step size underflow at t = {0}")]
    Stiffness(f64),
    #[error("fixed-point iteration is not contracting (ratio {0:.3})")]
    Contraction(f64),
    #[error("horizon too short: tail {0:.3e}")]
    Horizon(f64),
    #[error("positivity lost at t = {0}")]
    Positivity(f64),
    #[error("precondition: {0}")]
    Precondition(String),
    #[error("composition: {0}")]
    Composition(String),
    #[error("config: {0}")]
    Config(String),
    #[error("io: {0}")]
    Io(String),
}

impl Error {
    /// Numeric failures map to CLI exit code 3, configuration problems to 2.
    pub fn is_config(&self) -> bool {
        matches!(self, Error::Config(_) | Error::Io(_))
    }
}

impl From<std::io::Error> for Error {
    fn from(e: std::io::Error) -> Self {
        Error::Io(e.to_string())
    }
}

pub type Result<T> = std::result::Result<T, Error>;
