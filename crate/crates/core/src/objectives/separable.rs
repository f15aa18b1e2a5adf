use super::{Objective, RestrictedConvexity};
use crate::error::{Error, Result};
use crate::linalg::SymMatrix;

/// `f(X) = Σ_ij ½ w_ij (X_ij − T_ij)²` with symmetric weights in `[m, M]`.
#[derive(Debug, Clone)]
pub struct SeparableQuad {
    target: SymMatrix,
    weights: SymMatrix,
    m: f64,
    big_m: f64,
}

/// Fails if `weights` is not symmetric or any weight leaves `[m, big_m]`.
pub fn separable_quad(target: SymMatrix, weights: SymMatrix, m: f64, big_m: f64) -> Result<SeparableQuad> {
    if target.n() != weights.n() {
        return Err(Error::ShapeMismatch(format!("target is {0}x{0}, weights {1}x{1}", target.n(), weights.n())));
    }
    if !(m > 0.0 && m <= big_m && big_m.is_finite()) {
        return Err(Error::InvalidArgument(format!("need 0 < m <= M, got m={m}, M={big_m}")));
    }
    if weights.asymmetry() != 0.0 {
        return Err(Error::InvalidArgument("weights must be symmetric".into()));
    }
    let n = weights.n();
    for i in 0..n {
        for j in 0..n {
            let w = weights.get(i, j);
            if !(m..=big_m).contains(&w) {
                return Err(Error::InvalidArgument(format!("weight ({i},{j}) = {w} outside [{m}, {big_m}]")));
            }
        }
    }
    Ok(SeparableQuad { target, weights, m, big_m })
}

impl SeparableQuad {
    pub fn target(&self) -> &SymMatrix {
        &self.target
    }

    pub fn weights(&self) -> &SymMatrix {
        &self.weights
    }

    pub fn strong_convexity(&self) -> f64 {
        self.m
    }
}

impl Objective for SeparableQuad {
    fn dim(&self) -> usize {
        self.target.n()
    }

    fn value(&self, x: &SymMatrix) -> f64 {
        let d = x.sub(&self.target).expect("dimension mismatch");
        let (d, w) = (d.as_matrix(), self.weights.as_matrix());
        0.5 * d.iter().zip(w.iter()).map(|(d, w)| w * d * d).sum::<f64>()
    }

    fn gradient(&self, x: &SymMatrix) -> SymMatrix {
        let d = x.sub(&self.target).expect("dimension mismatch");
        let n = self.target.n();
        SymMatrix::from_fn(n, |i, j| self.weights.get(i, j) * d.get(i, j))
    }

    fn smoothness(&self) -> f64 {
        self.big_m
    }

    fn restricted_convexity(&self) -> Option<RestrictedConvexity> {
        Some(RestrictedConvexity { m: self.m, rank: self.target.n() })
    }
}
