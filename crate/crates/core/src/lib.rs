//! Piecewise cubic nonconforming finite elements for the planar biharmonic
//! equation with clamped (Dirichlet) and simply supported (Navier)
//! boundary conditions.

pub mod assembly;
pub mod basis;
pub mod error;
pub mod harness;
pub mod mesh;
pub mod operators;
pub mod poly;
pub mod quadrature;
pub mod solve;
pub mod sparse;
pub mod spaces;

pub use error::{Error, Result};
pub use mesh::{CellGeometry, Pattern, Rect, Triangulation, VertexClass};
pub use spaces::{DofSpace, FeFunction, SpaceKind};
pub use sparse::SparseOperator;
