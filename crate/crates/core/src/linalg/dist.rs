use nalgebra::DMatrix;

use super::{spectral_decomp, Factor, SymMatrix};
use crate::error::{Error, Result};

/// Orthonormal `r x r` matrix aligning one factor with another.
#[derive(Debug, Clone, PartialEq)]
pub struct Rotation(DMatrix<f64>);

impl Rotation {
    pub fn identity(r: usize) -> Self {
        Rotation(DMatrix::identity(r, r))
    }

    /// Wraps `m` without checking orthonormality.
    pub fn from_matrix_unchecked(m: DMatrix<f64>) -> Self {
        Rotation(m)
    }

    pub fn as_matrix(&self) -> &DMatrix<f64> {
        &self.0
    }

    /// `‖RᵀR − I‖_F`.
    pub fn orthogonality_defect(&self) -> f64 {
        let r = self.0.nrows();
        (self.0.tr_mul(&self.0) - DMatrix::<f64>::identity(r, r)).norm()
    }
}

/// Rotation-invariant factor distance `min_R ‖U − V R‖_F` over orthonormal `R`.
///
/// The minimizer is `R = P Qᵀ` where `P Σ Qᵀ` is the SVD of `Vᵀ U`. The SVD
/// is assembled from the eigendecomposition of `MᵀM` (`M = VᵀU`): `Q` holds
/// its eigenvectors and `P = M Q Σ⁻¹` on the nonzero singular values, which
/// pins the signs of `P` to those of `Q`. When `M` is rank-deficient the
/// remaining columns of `P` are an arbitrary orthonormal completion, so `R`
/// is one of several minimizers; the distance itself is unique.
pub fn dist(u: &Factor, v: &Factor) -> Result<(f64, Rotation)> {
    if u.n() != v.n() || u.r() != v.r() {
        return Err(Error::ShapeMismatch(format!(
            "dist needs equal shapes, got {}x{} and {}x{}",
            u.n(),
            u.r(),
            v.n(),
            v.r()
        )));
    }
    let r = u.r();
    let m = v.cross(u)?;
    let mtm = SymMatrix::from_upper(m.tr_mul(&m))?;
    let eig = spectral_decomp(&mtm)?;
    let q = eig.eigenvectors;
    let sigma: Vec<f64> = eig.eigenvalues.iter().map(|l| l.max(0.0).sqrt()).collect();
    let cutoff = sigma[0] * (r as f64) * f64::EPSILON.sqrt();

    let mq = &m * &q;
    let mut p = DMatrix::zeros(r, r);
    let mut filled = 0;
    for (j, &s) in sigma.iter().enumerate() {
        if s > cutoff && s > 0.0 {
            let mut col = mq.column(j) / s;
            // re-orthogonalize against earlier columns for clustered σ
            for k in 0..filled {
                let proj = p.column(k).dot(&col);
                col -= p.column(k) * proj;
            }
            let norm = col.norm();
            if norm > 0.5 {
                p.set_column(j, &(col / norm));
                filled = j + 1;
                continue;
            }
        }
        break;
    }
    complete_orthonormal(&mut p, filled);

    let rot = &p * q.transpose();
    let aligned = v.mul_right(&rot)?;
    let d = u.sub(&aligned)?.frobenius_norm();
    Ok((d, Rotation(rot)))
}

/// Fills columns `filled..` of `p` with an orthonormal completion (Gram-Schmidt
/// over the standard basis).
fn complete_orthonormal(p: &mut DMatrix<f64>, mut filled: usize) {
    let r = p.nrows();
    let mut basis = 0;
    while filled < r && basis < r {
        let mut col = nalgebra::DVector::<f64>::zeros(r);
        col[basis] = 1.0;
        basis += 1;
        for _ in 0..2 {
            for k in 0..filled {
                let proj = p.column(k).dot(&col);
                col -= p.column(k) * proj;
            }
        }
        let norm = col.norm();
        if norm > 1e-8 {
            p.set_column(filled, &(col / norm));
            filled += 1;
        }
    }
}
