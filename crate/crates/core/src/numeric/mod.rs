//! Small dense solvers shared by the geometry and cone modules.

pub mod linalg;
pub mod lp;
pub mod nnls;
pub mod qp;

pub use nnls::{nnls, NnlsSolution};
pub use qp::{project_polyhedron, PolyProjection};
