//! Numerical toolkit for the Calabi invariant of compactly supported
//! Hamiltonian diffeomorphisms of `R^{2n}` with its standard symplectic form.
//!
//! Everything is generic over [`Real`] (`f32` or `f64`); the aliases at the
//! crate root fix `f64`, which is what the tolerance-bound checks use.

pub mod bump;
pub mod calabi;
pub mod chart;
pub mod error;
pub mod fd;
pub mod field;
pub mod flow;
pub mod geometry;
pub mod linalg;
pub mod phase;
pub mod quadrature;
pub mod scalar;
pub mod suite;

pub use error::{LabError, Result};
pub use geometry::{Dim, LiouvilleKind};
pub use scalar::Real;

pub type BoxRegion = geometry::BoxRegion<f64>;
pub type FlowMap = flow::FlowMap<f64>;
pub type SharedField = field::SharedField<f64>;
pub type Matrix = linalg::Matrix<f64>;
pub type PlateauBump = bump::PlateauBump<f64>;
