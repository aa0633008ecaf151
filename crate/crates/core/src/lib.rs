//! Escaping, zipping and fast-escaping dynamics of transcendental entire
//! functions: orbits in tower arithmetic, Devaney hairs of the exponential
//! family, and a rectilinear tract whose real hair escapes slowly.

pub mod error;
pub mod escape;
pub mod functions;
pub mod hairs;
pub mod logtransform;
pub mod numerics;
pub mod tractlab;

pub use error::{HairError, Result};

pub type Complex = numerics::ComplexPoint<f64>;
pub type Tower = numerics::TowerReal<f64>;
pub type Bounds = numerics::BoundPair<f64>;
