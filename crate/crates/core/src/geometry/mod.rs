//! Affine element maps, structured meshes with periodic connectivity, the
//! violation-detection lattice and VTK export.

mod lattice;
mod mesh;
pub mod vtk;

pub use lattice::{build_lattice, build_lattice_with_boundary, Lattice};
pub use mesh::{make_structured_mesh, AffineMap, Element, FaceLink, Mesh, MeshLayout};
