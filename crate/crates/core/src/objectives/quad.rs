use super::{Objective, RestrictedConvexity};
use crate::linalg::SymMatrix;

/// `f(X) = ½‖X − T‖²_F`.
#[derive(Debug, Clone)]
pub struct QuadLoss {
    target: SymMatrix,
}

pub fn quad_loss(target: SymMatrix) -> QuadLoss {
    QuadLoss { target }
}

impl QuadLoss {
    pub fn target(&self) -> &SymMatrix {
        &self.target
    }
}

impl Objective for QuadLoss {
    fn dim(&self) -> usize {
        self.target.n()
    }

    fn value(&self, x: &SymMatrix) -> f64 {
        let d = x.sub(&self.target).expect("dimension mismatch");
        0.5 * d.frobenius_norm().powi(2)
    }

    fn gradient(&self, x: &SymMatrix) -> SymMatrix {
        x.sub(&self.target).expect("dimension mismatch")
    }

    fn smoothness(&self) -> f64 {
        1.0
    }

    fn restricted_convexity(&self) -> Option<RestrictedConvexity> {
        Some(RestrictedConvexity { m: 1.0, rank: self.target.n() })
    }
}
