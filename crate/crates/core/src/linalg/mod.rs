//! Dense symmetric linear algebra.
//!
//! [`SymMatrix`] holds every `n x n` quantity the solvers touch (iterates
//! `X = U Uᵀ`, gradients, optima) and keeps its two triangles bit-identical.
//! [`Factor`] is the tall `n x r` parametrization `U`.

mod dist;
mod eigen;
pub mod io;

pub use dist::{dist, Rotation};
pub use eigen::{spectral_decomp, SpectralDecomp, JACOBI_MAX_DIM};

use nalgebra::DMatrix;
use rand::Rng;
use rand_distr::{Distribution, StandardNormal};

use crate::error::{Error, Result};

/// Default relative tolerance for [`spectral_norm`].
pub const SPECTRAL_NORM_TOL: f64 = 1e-8;

const POWER_ITER_CAP: usize = 20_000;

/// Dense real symmetric matrix, stored full and column-major.
#[derive(Debug, Clone, PartialEq)]
pub struct SymMatrix(DMatrix<f64>);

impl SymMatrix {
    pub fn zeros(n: usize) -> Self {
        SymMatrix(DMatrix::zeros(n, n))
    }

    pub fn identity(n: usize) -> Self {
        SymMatrix(DMatrix::identity(n, n))
    }

    pub fn from_diagonal(d: &[f64]) -> Self {
        let n = d.len();
        let mut m = DMatrix::zeros(n, n);
        for (i, &v) in d.iter().enumerate() {
            m[(i, i)] = v;
        }
        SymMatrix(m)
    }

    /// Builds the matrix from its upper triangle; `f` is only called for `i <= j`.
    pub fn from_fn(n: usize, mut f: impl FnMut(usize, usize) -> f64) -> Self {
        let mut m = DMatrix::zeros(n, n);
        for j in 0..n {
            for i in 0..=j {
                let v = f(i, j);
                m[(i, j)] = v;
                m[(j, i)] = v;
            }
        }
        SymMatrix(m)
    }

    /// Copies the upper triangle of `m` onto the lower one.
    pub fn from_upper(mut m: DMatrix<f64>) -> Result<Self> {
        if m.nrows() != m.ncols() {
            return Err(Error::ShapeMismatch(format!("expected a square matrix, got {}x{}", m.nrows(), m.ncols())));
        }
        mirror_upper(&mut m);
        Ok(SymMatrix(m))
    }

    /// Returns `(m + mᵀ) / 2`.
    pub fn symmetrize(m: &DMatrix<f64>) -> Result<Self> {
        if m.nrows() != m.ncols() {
            return Err(Error::ShapeMismatch(format!("expected a square matrix, got {}x{}", m.nrows(), m.ncols())));
        }
        let n = m.nrows();
        Ok(Self::from_fn(n, |i, j| 0.5 * (m[(i, j)] + m[(j, i)])))
    }

    /// `Σ_k w_k v_k v_kᵀ` for the given columns of `vectors`.
    pub fn from_eigenpairs(vectors: &DMatrix<f64>, weights: &[f64]) -> Self {
        let n = vectors.nrows();
        let k = weights.len();
        let mut scaled = vectors.columns(0, k).into_owned();
        for (c, &w) in weights.iter().enumerate() {
            scaled.column_mut(c).scale_mut(w);
        }
        let mut m = scaled * vectors.columns(0, k).transpose();
        if n > 0 {
            mirror_upper(&mut m);
        }
        SymMatrix(m)
    }

    pub fn random(n: usize, rng: &mut impl Rng) -> Self {
        Self::from_fn(n, |_, _| StandardNormal.sample(rng))
    }

    pub fn n(&self) -> usize {
        self.0.nrows()
    }

    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.0[(i, j)]
    }

    /// Writes `v` to both `(i, j)` and `(j, i)`.
    pub fn set(&mut self, i: usize, j: usize, v: f64) {
        self.0[(i, j)] = v;
        self.0[(j, i)] = v;
    }

    pub fn as_matrix(&self) -> &DMatrix<f64> {
        &self.0
    }

    pub fn into_matrix(self) -> DMatrix<f64> {
        self.0
    }

    pub fn trace(&self) -> f64 {
        self.0.trace()
    }

    pub fn frobenius_norm(&self) -> f64 {
        self.0.norm()
    }

    /// Trace inner product `⟨A, B⟩ = tr(AᵀB)`.
    pub fn inner(&self, other: &SymMatrix) -> Result<f64> {
        check_same(self.n(), other.n())?;
        Ok(self.0.dot(&other.0))
    }

    pub fn scale(&self, s: f64) -> SymMatrix {
        SymMatrix(&self.0 * s)
    }

    pub fn add(&self, other: &SymMatrix) -> Result<SymMatrix> {
        check_same(self.n(), other.n())?;
        Ok(SymMatrix(&self.0 + &other.0))
    }

    pub fn sub(&self, other: &SymMatrix) -> Result<SymMatrix> {
        check_same(self.n(), other.n())?;
        Ok(SymMatrix(&self.0 - &other.0))
    }

    /// `self + s * other`.
    pub fn axpy(&self, s: f64, other: &SymMatrix) -> Result<SymMatrix> {
        check_same(self.n(), other.n())?;
        Ok(SymMatrix(&self.0 + &other.0 * s))
    }

    /// Matrix product with a factor, `A · U`.
    pub fn mul_factor(&self, u: &Factor) -> Result<Factor> {
        if u.n() != self.n() {
            return Err(Error::ShapeMismatch(format!(
                "cannot multiply {}x{} matrix by {}x{} factor",
                self.n(),
                self.n(),
                u.n(),
                u.r()
            )));
        }
        Ok(Factor(&self.0 * &u.0))
    }

    pub fn matvec(&self, v: &[f64]) -> Vec<f64> {
        let n = self.n();
        let mut out = vec![0.0; n];
        for (j, &vj) in v.iter().enumerate() {
            if vj == 0.0 {
                continue;
            }
            let col = self.0.column(j);
            for (o, &a) in out.iter_mut().zip(col.iter()) {
                *o += a * vj;
            }
        }
        out
    }

    pub fn is_finite(&self) -> bool {
        self.0.iter().all(|v| v.is_finite())
    }

    /// Largest absolute entry of `A - Aᵀ`; zero for every matrix built through this API.
    pub fn asymmetry(&self) -> f64 {
        let n = self.n();
        let mut worst = 0.0_f64;
        for j in 0..n {
            for i in 0..j {
                worst = worst.max((self.0[(i, j)] - self.0[(j, i)]).abs());
            }
        }
        worst
    }
}

/// Dense `n x r` factor `U` of `X = U Uᵀ`.
#[derive(Debug, Clone, PartialEq)]
pub struct Factor(DMatrix<f64>);

impl Factor {
    pub fn new(m: DMatrix<f64>) -> Result<Self> {
        if m.ncols() == 0 || m.nrows() == 0 || m.ncols() > m.nrows() {
            return Err(Error::ShapeMismatch(format!(
                "factor must be n x r with 1 <= r <= n, got {}x{}",
                m.nrows(),
                m.ncols()
            )));
        }
        Ok(Factor(m))
    }

    pub fn zeros(n: usize, r: usize) -> Self {
        Factor(DMatrix::zeros(n, r))
    }

    pub fn from_fn(n: usize, r: usize, f: impl FnMut(usize, usize) -> f64) -> Self {
        Factor(DMatrix::from_fn(n, r, f))
    }

    pub fn from_column_slice(n: usize, r: usize, data: &[f64]) -> Self {
        Factor(DMatrix::from_column_slice(n, r, data))
    }

    pub fn n(&self) -> usize {
        self.0.nrows()
    }

    pub fn r(&self) -> usize {
        self.0.ncols()
    }

    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.0[(i, j)]
    }

    pub fn set(&mut self, i: usize, j: usize, v: f64) {
        self.0[(i, j)] = v;
    }

    pub fn as_matrix(&self) -> &DMatrix<f64> {
        &self.0
    }

    pub fn into_matrix(self) -> DMatrix<f64> {
        self.0
    }

    pub fn frobenius_norm(&self) -> f64 {
        self.0.norm()
    }

    pub fn inner(&self, other: &Factor) -> Result<f64> {
        self.check_shape(other)?;
        Ok(self.0.dot(&other.0))
    }

    pub fn scale(&self, s: f64) -> Factor {
        Factor(&self.0 * s)
    }

    pub fn sub(&self, other: &Factor) -> Result<Factor> {
        self.check_shape(other)?;
        Ok(Factor(&self.0 - &other.0))
    }

    pub fn add(&self, other: &Factor) -> Result<Factor> {
        self.check_shape(other)?;
        Ok(Factor(&self.0 + &other.0))
    }

    /// `self + s * other`.
    pub fn axpy(&self, s: f64, other: &Factor) -> Result<Factor> {
        self.check_shape(other)?;
        Ok(Factor(&self.0 + &other.0 * s))
    }

    /// Right multiplication by an `r x r` matrix (typically a rotation).
    pub fn mul_right(&self, m: &DMatrix<f64>) -> Result<Factor> {
        if m.nrows() != self.r() {
            return Err(Error::ShapeMismatch(format!(
                "cannot multiply {}x{} factor by {}x{}",
                self.n(),
                self.r(),
                m.nrows(),
                m.ncols()
            )));
        }
        Ok(Factor(&self.0 * m))
    }

    /// `selfᵀ · other`, an `r x r'` matrix.
    pub fn cross(&self, other: &Factor) -> Result<DMatrix<f64>> {
        if self.n() != other.n() {
            return Err(Error::ShapeMismatch(format!("factors have {} and {} rows", self.n(), other.n())));
        }
        Ok(self.0.tr_mul(&other.0))
    }

    /// `Uᵀ U`.
    pub fn small_gram(&self) -> SymMatrix {
        let mut g = self.0.tr_mul(&self.0);
        mirror_upper(&mut g);
        SymMatrix(g)
    }

    pub fn is_finite(&self) -> bool {
        self.0.iter().all(|v| v.is_finite())
    }

    /// Singular values, descending, from the eigenvalues of `UᵀU`.
    pub fn singular_values(&self) -> Result<Vec<f64>> {
        let decomp = spectral_decomp(&self.small_gram())?;
        Ok(decomp.eigenvalues.iter().map(|&l| l.max(0.0).sqrt()).collect())
    }

    fn check_shape(&self, other: &Factor) -> Result<()> {
        if self.n() != other.n() || self.r() != other.r() {
            return Err(Error::ShapeMismatch(format!(
                "factor shapes {}x{} and {}x{} differ",
                self.n(),
                self.r(),
                other.n(),
                other.r()
            )));
        }
        Ok(())
    }
}

/// `U Uᵀ`, symmetric by construction.
pub fn gram(u: &Factor) -> SymMatrix {
    let mut m = &u.0 * u.0.transpose();
    mirror_upper(&mut m);
    SymMatrix(m)
}

/// Trace inner product of two symmetric matrices.
pub fn inner(a: &SymMatrix, b: &SymMatrix) -> Result<f64> {
    a.inner(b)
}

pub fn frobenius_norm(a: &SymMatrix) -> f64 {
    a.frobenius_norm()
}

/// Projection onto the PSD cone: keeps the strictly positive part of the spectrum.
pub fn psd_project(a: &SymMatrix) -> Result<SymMatrix> {
    let decomp = spectral_decomp(a)?;
    let k = decomp.eigenvalues.iter().take_while(|&&l| l > 0.0).count();
    Ok(SymMatrix::from_eigenpairs(&decomp.eigenvectors, &decomp.eigenvalues[..k]))
}

/// Best rank-`r` approximation of a PSD matrix together with its factor
/// `U = V_r diag(λ_r)^{1/2}`.
///
/// Fails with [`Error::NotPsd`] if one of the top `r` eigenvalues is below
/// `-1e-12 · ‖A‖₂`; smaller negative values are clipped to zero.
pub fn rank_r_truncate(a: &SymMatrix, r: usize) -> Result<(SymMatrix, Factor)> {
    let n = a.n();
    if r == 0 || r > n {
        return Err(Error::InvalidArgument(format!("rank {r} out of range for dimension {n}")));
    }
    let decomp = spectral_decomp(a)?;
    let scale = decomp.eigenvalues.iter().fold(0.0_f64, |acc, l| acc.max(l.abs()));
    let mut lambdas = Vec::with_capacity(r);
    for &l in &decomp.eigenvalues[..r] {
        if l < -1e-12 * scale {
            return Err(Error::NotPsd { rank: r, eigenvalue: l });
        }
        lambdas.push(l.max(0.0));
    }
    Ok(truncation_from(&decomp.eigenvectors, &lambdas))
}

/// Rank-`r` PSD truncation without the PSD precondition: negative
/// eigenvalues among the top `r` are clipped to zero.
pub fn psd_rank_truncate(a: &SymMatrix, r: usize) -> Result<(SymMatrix, Factor)> {
    let n = a.n();
    if r == 0 || r > n {
        return Err(Error::InvalidArgument(format!("rank {r} out of range for dimension {n}")));
    }
    let decomp = spectral_decomp(a)?;
    let lambdas: Vec<f64> = decomp.eigenvalues[..r].iter().map(|l| l.max(0.0)).collect();
    Ok(truncation_from(&decomp.eigenvectors, &lambdas))
}

fn truncation_from(vectors: &DMatrix<f64>, lambdas: &[f64]) -> (SymMatrix, Factor) {
    let r = lambdas.len();
    let mut u = vectors.columns(0, r).into_owned();
    for (c, &l) in lambdas.iter().enumerate() {
        u.column_mut(c).scale_mut(l.sqrt());
    }
    let u = Factor(u);
    (gram(&u), u)
}

/// Spectral norm `max_i |λ_i(A)|` by power iteration on `A`.
///
/// The iteration starts from the all-ones vector; if that vector is
/// annihilated by `A` it restarts once from the alternating ramp
/// `(1, -2, 3, -4, ...)`. The returned value is within `tol · ‖A‖_F` of the
/// true norm for inputs whose dominant eigenvectors are not orthogonal to the
/// start vector.
pub fn spectral_norm(a: &SymMatrix, tol: f64) -> Result<f64> {
    if !(tol > 0.0) {
        return Err(Error::InvalidArgument(format!("tolerance must be positive, got {tol}")));
    }
    let n = a.n();
    let fro = a.frobenius_norm();
    if fro == 0.0 {
        return Ok(0.0);
    }
    if n == 1 {
        return Ok(a.get(0, 0).abs());
    }
    let starts: [Box<dyn Fn(usize) -> f64>; 2] =
        [Box::new(|_| 1.0), Box::new(|i| if i % 2 == 0 { (i + 1) as f64 } else { -((i + 1) as f64) })];
    for start in &starts {
        let v: Vec<f64> = (0..n).map(start).collect();
        if let Some(est) = power_iterate(a, v, tol * fro)? {
            return Ok(est);
        }
    }
    Ok(0.0)
}

/// Returns `None` if the start vector collapses to zero.
fn power_iterate(a: &SymMatrix, mut v: Vec<f64>, abs_tol: f64) -> Result<Option<f64>> {
    normalize(&mut v);
    let mut prev = f64::NAN;
    for _ in 0..POWER_ITER_CAP {
        let av = a.matvec(&v);
        let est = norm2(&av);
        if est == 0.0 {
            return Ok(None);
        }
        // ‖A v‖ increases monotonically towards ‖A‖₂ under power iteration on A.
        if (est - prev).abs() <= 0.01 * abs_tol {
            return Ok(Some(est));
        }
        prev = est;
        v = av;
        normalize(&mut v);
    }
    Err(Error::NoConvergence { routine: "power iteration", iterations: POWER_ITER_CAP })
}

pub(crate) fn norm2(v: &[f64]) -> f64 {
    v.iter().map(|x| x * x).sum::<f64>().sqrt()
}

fn normalize(v: &mut [f64]) {
    let s = norm2(v);
    if s > 0.0 {
        v.iter_mut().for_each(|x| *x /= s);
    }
}

fn mirror_upper(m: &mut DMatrix<f64>) {
    let n = m.nrows();
    for j in 0..n {
        for i in 0..j {
            m[(j, i)] = m[(i, j)];
        }
    }
}

fn check_same(a: usize, b: usize) -> Result<()> {
    if a != b {
        return Err(Error::ShapeMismatch(format!("dimensions {a} and {b} differ")));
    }
    Ok(())
}
