use std::cmp::Ordering;

use serde::{Deserialize, Serialize};

use super::{Scalar, TowerReal};
use crate::error::{HairError, Result};

/// Enclosure `lo <= value <= hi` in tower arithmetic.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(bound(serialize = "S: Scalar + Serialize", deserialize = "S: Scalar + Deserialize<'de>"))]
pub struct BoundPair<S> {
    pub lo: TowerReal<S>,
    pub hi: TowerReal<S>,
}

impl<S: Scalar> BoundPair<S> {
    pub fn new(lo: TowerReal<S>, hi: TowerReal<S>) -> Result<Self> {
        if lo.cmp_tol(&hi) == Ordering::Greater {
            return Err(HairError::Precondition(format!("bound pair lo {lo} > hi {hi}")));
        }
        Ok(BoundPair { lo, hi })
    }

    pub fn point(t: TowerReal<S>) -> Self {
        BoundPair { lo: t, hi: t }
    }

    pub fn from_real(x: S) -> Result<Self> {
        Ok(Self::point(TowerReal::from_real(x)?))
    }

    /// Every value of `self` is strictly below every value of `other`.
    pub fn certainly_lt(&self, other: &Self) -> bool {
        self.hi.lt(&other.lo)
    }

    pub fn certainly_gt(&self, other: &Self) -> bool {
        other.certainly_lt(self)
    }

    pub fn contains(&self, t: &TowerReal<S>) -> bool {
        self.lo.cmp_tol(t) != Ordering::Greater && self.hi.cmp_tol(t) != Ordering::Less
    }

    pub fn exp(&self) -> Self {
        BoundPair { lo: self.lo.exp(), hi: self.hi.exp() }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn ordering_checks() {
        let a = BoundPair::new(TowerReal::from_real(1.0).unwrap(), TowerReal::from_real(2.0).unwrap()).unwrap();
        let b = BoundPair::from_real(3.0).unwrap();
        assert!(a.certainly_lt(&b));
        assert!(!b.certainly_lt(&a));
        assert!(a.contains(&TowerReal::from_real(1.5).unwrap()));
        assert!(BoundPair::new(b.lo, a.lo).is_err());
    }
}
