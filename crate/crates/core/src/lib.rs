//! Vectorial Slepian functions on the ball.
//!
//! Bandlimited vector fields on a ball of radius `beta` are expanded in one
//! of three orthonormal bases (systems I, II, III). Maximising the energy
//! fraction inside a partial cone leads to a symmetric eigenproblem for the
//! localisation matrix, assembled here from closed-form entries.

pub mod basis;
pub mod error;
pub mod io;
pub mod linalg;
pub mod locmat;
pub mod quadrature;
pub mod rotation;
pub mod slepian;
pub mod specfun;

pub use basis::{BallGeometry, BallPoint, Bandlimit, BasisIndex, FieldType, SystemId, Vec3};
pub use error::{Error, Result};
pub use locmat::{assemble, LocalisationMatrix, Region};
pub use quadrature::QuadratureSpec;
pub use rotation::EulerAngles;
pub use slepian::{solve, ShannonReport, SlepianBasis};
