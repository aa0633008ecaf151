//! Complex points, tower scalars and bound pairs.

mod bounds;
mod scalar;
mod tower;

pub use bounds::BoundPair;
pub use scalar::Scalar;
pub use tower::{AddLog, TowerReal};

/// A point of the complex plane.
pub type ComplexPoint<S> = num_complex::Complex<S>;

pub fn tower_from_real<S: Scalar>(x: S) -> crate::Result<TowerReal<S>> {
    TowerReal::from_real(x)
}

pub fn tower_exp<S: Scalar>(t: &TowerReal<S>) -> TowerReal<S> {
    t.exp()
}

pub fn tower_log<S: Scalar>(t: &TowerReal<S>) -> crate::Result<TowerReal<S>> {
    t.log()
}

pub fn tower_cmp<S: Scalar>(a: &TowerReal<S>, b: &TowerReal<S>) -> std::cmp::Ordering {
    a.cmp_tol(b)
}

pub fn tower_add_log<S: Scalar>(t: &TowerReal<S>, c: S) -> AddLog<S> {
    t.add_log_checked(c)
}
