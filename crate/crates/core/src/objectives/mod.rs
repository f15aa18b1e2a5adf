//! Smooth convex objectives over symmetric matrices.
//!
//! Every gradient is returned already symmetrized. The chain rule gives
//! `∂/∂U f(UUᵀ) = 2 ∇f(UUᵀ) U`; the factor 2 is folded into the step size,
//! so [`factored_gradient`] returns `∇f(UUᵀ) U`.

mod quad;
mod sensing;
mod separable;

pub use quad::{quad_loss, QuadLoss};
pub use sensing::{
    gaussian_sensing, hadamard_sensing, make_sensing, rademacher_sensing, sensing_loss, Ensemble, SensingFixture,
    SensingLoss, SensingOperator, SmoothnessEstimate, DENSE_LIMIT,
};
pub use separable::{separable_quad, SeparableQuad};

use crate::error::Result;
use crate::linalg::{gram, Factor, SymMatrix};

/// `(m, r)`-restricted strong convexity: the quadratic lower bound with
/// constant `m` holds between rank-`rank` PSD matrices.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RestrictedConvexity {
    pub m: f64,
    pub rank: usize,
}

pub trait Objective: Send + Sync {
    fn dim(&self) -> usize;

    fn value(&self, x: &SymMatrix) -> f64;

    fn gradient(&self, x: &SymMatrix) -> SymMatrix;

    fn value_and_gradient(&self, x: &SymMatrix) -> (f64, SymMatrix) {
        (self.value(x), self.gradient(x))
    }

    /// Lipschitz constant `M` of the gradient in Frobenius norm.
    fn smoothness(&self) -> f64;

    /// Lipschitz constant over all of `S^n`; differs from [`smoothness`]
    /// when that one is only restricted to low-rank directions.
    ///
    /// [`smoothness`]: Objective::smoothness
    fn global_smoothness(&self) -> f64 {
        self.smoothness()
    }

    fn restricted_convexity(&self) -> Option<RestrictedConvexity> {
        None
    }

    /// `κ = M / m` when a convexity constant is known.
    fn condition_number(&self) -> Option<f64> {
        self.restricted_convexity().map(|c| self.smoothness() / c.m)
    }
}

/// `∇f(UUᵀ) · U`, half of the true gradient of `U ↦ f(UUᵀ)`.
pub fn factored_gradient(obj: &dyn Objective, u: &Factor) -> Result<Factor> {
    let g = obj.gradient(&gram(u));
    g.mul_factor(u)
}
