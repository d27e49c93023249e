//! Patch-reconstructed discontinuous Galerkin solver for elliptic
//! interface problems on 2D polygonal meshes.
//!
//! The discrete space carries one degree of freedom per element per
//! subdomain side; polynomial shape functions of degree m are recovered
//! by least-squares fits over element patches, and the interface is
//! handled by an unfitted Nitsche formulation on cut cells.

pub mod assembly;
pub mod basis;
pub mod cut;
pub mod error;
pub mod error_analysis;
pub mod geom;
pub mod harness;
pub mod levelset;
pub mod mesh;
pub mod patch;
pub mod quadrature;
pub mod reconstruction;
pub mod solver;

pub use error::{PrdgError, Result};
pub use geom::Point2;
pub use levelset::LevelSet;
pub use mesh::PolygonalMesh;
