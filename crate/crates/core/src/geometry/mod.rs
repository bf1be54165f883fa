//! Meshes of polygonal annuli and disks, and their circumcentric dual.

mod annulus;
mod generate;
mod io;
mod locate;
mod quality;
mod refine;
mod triangulation;
mod voronoi;

use thiserror::Error;

pub use annulus::{square_loop, PolygonalAnnulus};
pub use generate::{
    generate_annulus_mesh, generate_disk_mesh, generate_lattice_annulus, generate_round_annulus, AnnulusShape,
    LatticeDisk, RingSpacing, RoundAnnulus,
};
pub use io::{read_annulus_spec, read_domain, read_mesh, write_annulus_spec, write_domain, write_mesh};
pub use locate::barycentric;
pub use quality::{validate_mesh, validate_mesh_with, MeshQualityReport, QualityTolerances};
pub use refine::refine;
pub use triangulation::{build_triangulation, from_labeled_parts, BoundaryLabel, Edge, Triangulation};
pub use voronoi::{build_voronoi, DualEdge, VoronoiDiagram};

#[derive(Debug, Error)]
pub enum GeometryError {
    #[error("invalid annulus: {0}")]
    InvalidAnnulus(String),
    #[error("triangle #{triangle} refers to missing vertex {index}")]
    IndexOutOfRange { triangle: usize, index: usize },
    #[error("non-conforming mesh: {0}")]
    NonConformingMesh(String),
    #[error("V0: obtuse triangle #{index} (largest angle {angle_deg:.3} deg)")]
    ObtuseTriangle { index: usize, angle_deg: f64 },
    #[error("boundary vertex {vertex} lies on neither annulus loop")]
    UnlabeledBoundaryVertex { vertex: usize },
    #[error("degenerate annulus at this pitch: {0}")]
    DegenerateAnnulus(String),
    #[error("circumcenter of triangle #{triangle} is numerically degenerate")]
    NumericallyDegenerate { triangle: usize },
    #[error("line {line}: {msg}")]
    Parse { line: usize, msg: String },
    #[error(transparent)]
    Io(#[from] std::io::Error),
}
