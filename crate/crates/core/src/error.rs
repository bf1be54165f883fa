use thiserror::Error;

use crate::conjugate::ConjugateError;
use crate::geometry::GeometryError;
use crate::network::NetworkError;
use crate::packing::PackingError;
use crate::riemann::RiemannError;
use crate::solver::SolverError;
use crate::uniformize::UniformizeError;

/// Any failure of the pipeline, tagged by stage.
#[derive(Debug, Error)]
pub enum Error {
    #[error("mesh: {0}")]
    Geometry(#[from] GeometryError),
    #[error("V1: vertex {vertex} has {neighbors} neighbors (limit {limit})")]
    TooManyNeighbors { vertex: usize, neighbors: usize, limit: usize },
    #[error("V2: dual segment of edge {edge} misses the edge midpoint by {offset:.3e} of its length")]
    MidpointOffset { edge: usize, offset: f64 },
    #[error("network: {0}")]
    Network(#[from] NetworkError),
    #[error("solve: {0}")]
    Solver(#[from] SolverError),
    #[error("conjugate: {0}")]
    Conjugate(#[from] ConjugateError),
    #[error("uniformize: {0}")]
    Uniformize(#[from] UniformizeError),
    #[error("riemann: {0}")]
    Riemann(#[from] RiemannError),
    #[error("packing: {0}")]
    Packing(#[from] PackingError),
    #[error("input: {0}")]
    Input(String),
    #[error("check: {what} {value:.3e} exceeds {limit:.3e}")]
    CheckFailed { what: &'static str, value: f64, limit: f64 },
    #[error("io: {0}")]
    Io(#[from] std::io::Error),
}

impl Error {
    /// Process exit status; each stage and each mesh condition has its own.
    pub fn exit_code(&self) -> i32 {
        match self {
            Error::Geometry(GeometryError::ObtuseTriangle { .. }) => 10,
            Error::TooManyNeighbors { .. } => 11,
            Error::MidpointOffset { .. } => 12,
            Error::Geometry(GeometryError::Parse { .. }) => 13,
            Error::Geometry(_) => 14,
            Error::Network(_) => 20,
            Error::Solver(SolverError::NoConvergence { .. }) => 31,
            Error::Solver(_) => 30,
            Error::Conjugate(_) => 40,
            Error::Uniformize(_) => 50,
            Error::Riemann(RiemannError::PeriodNotDecreasing { .. }) => 61,
            Error::Riemann(_) => 60,
            Error::Packing(_) => 70,
            Error::Input(_) => 64,
            Error::CheckFailed { .. } => 65,
            Error::Io(_) => 74,
        }
    }
}
