//! Symmetric eigensolvers.
//!
//! Cyclic Jacobi for `n <= JACOBI_MAX_DIM`, Householder tridiagonalization
//! followed by implicit QL above that. Both return eigenvalues in descending
//! order with the sign of each eigenvector fixed so that its largest-magnitude
//! entry is positive (first such index on exact ties).

use nalgebra::DMatrix;

use super::SymMatrix;
use crate::error::{Error, Result};

pub const JACOBI_MAX_DIM: usize = 64;

const JACOBI_MAX_SWEEPS: usize = 100;
const QL_MAX_ITERS_PER_EIGENVALUE: usize = 60;

#[derive(Debug, Clone)]
pub struct SpectralDecomp {
    /// Sorted descending.
    pub eigenvalues: Vec<f64>,
    /// Orthonormal columns, matching `eigenvalues`.
    pub eigenvectors: DMatrix<f64>,
}

impl SpectralDecomp {
    pub fn reconstruct(&self) -> SymMatrix {
        SymMatrix::from_eigenpairs(&self.eigenvectors, &self.eigenvalues)
    }
}

pub fn spectral_decomp(a: &SymMatrix) -> Result<SpectralDecomp> {
    let n = a.n();
    if n == 0 {
        return Err(Error::InvalidArgument("empty matrix".into()));
    }
    if !a.is_finite() {
        return Err(Error::InvalidArgument("matrix has non-finite entries".into()));
    }
    let (values, vectors) = if n <= JACOBI_MAX_DIM { jacobi(a)? } else { tridiagonal_ql(a)? };
    Ok(sorted(values, vectors, n))
}

/// `vectors` is column-major: column `j` is `vectors[j*n .. (j+1)*n]`.
fn sorted(values: Vec<f64>, vectors: Vec<f64>, n: usize) -> SpectralDecomp {
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&i, &j| values[j].total_cmp(&values[i]));
    let mut out = DMatrix::zeros(n, n);
    let mut eigenvalues = Vec::with_capacity(n);
    for (dst, &src) in order.iter().enumerate() {
        eigenvalues.push(values[src]);
        let col = &vectors[src * n..(src + 1) * n];
        let mut pivot = 0;
        for (k, v) in col.iter().enumerate() {
            if v.abs() > col[pivot].abs() {
                pivot = k;
            }
        }
        let sign = if col[pivot] < 0.0 { -1.0 } else { 1.0 };
        for (k, v) in col.iter().enumerate() {
            out[(k, dst)] = sign * v;
        }
    }
    SpectralDecomp { eigenvalues, eigenvectors: out }
}

fn jacobi(input: &SymMatrix) -> Result<(Vec<f64>, Vec<f64>)> {
    let n = input.n();
    // row-major working copy; symmetric so layout only matters for speed
    let mut a: Vec<f64> = input.as_matrix().iter().copied().collect();
    let mut v = vec![0.0; n * n];
    for i in 0..n {
        v[i * n + i] = 1.0;
    }
    let fro2: f64 = a.iter().map(|x| x * x).sum();
    let threshold = (f64::EPSILON * f64::EPSILON) * fro2;

    for _sweep in 0..JACOBI_MAX_SWEEPS {
        let mut off = 0.0;
        for p in 0..n {
            for q in (p + 1)..n {
                off += a[p * n + q] * a[p * n + q];
            }
        }
        if off <= threshold {
            let values = (0..n).map(|i| a[i * n + i]).collect();
            return Ok((values, v));
        }
        for p in 0..n {
            for q in (p + 1)..n {
                let apq = a[p * n + q];
                if apq == 0.0 {
                    continue;
                }
                let app = a[p * n + p];
                let aqq = a[q * n + q];
                let theta = (aqq - app) / (2.0 * apq);
                let t = theta.signum() / (theta.abs() + theta.hypot(1.0));
                let c = 1.0 / t.hypot(1.0);
                let s = t * c;
                for k in 0..n {
                    let akp = a[k * n + p];
                    let akq = a[k * n + q];
                    a[k * n + p] = c * akp - s * akq;
                    a[k * n + q] = s * akp + c * akq;
                }
                for k in 0..n {
                    let apk = a[p * n + k];
                    let aqk = a[q * n + k];
                    a[p * n + k] = c * apk - s * aqk;
                    a[q * n + k] = s * apk + c * aqk;
                }
                a[p * n + q] = 0.0;
                a[q * n + p] = 0.0;
                // v is column-major: column p at v[p*n..]
                for k in 0..n {
                    let vkp = v[p * n + k];
                    let vkq = v[q * n + k];
                    v[p * n + k] = c * vkp - s * vkq;
                    v[q * n + k] = s * vkp + c * vkq;
                }
            }
        }
    }
    Err(Error::NoConvergence { routine: "cyclic Jacobi", iterations: JACOBI_MAX_SWEEPS })
}

/// Householder reduction to tridiagonal form followed by implicit QL with
/// eigenvector accumulation (the EISPACK tred2/tql2 pair).
fn tridiagonal_ql(input: &SymMatrix) -> Result<(Vec<f64>, Vec<f64>)> {
    let n = input.n();
    // column-major: (row k, col j) at v[j*n + k]
    let mut v: Vec<f64> = input.as_matrix().as_slice().to_vec();
    let mut d = vec![0.0; n];
    let mut e = vec![0.0; n];
    tred2(n, &mut v, &mut d, &mut e);
    tql2(n, &mut v, &mut d, &mut e)?;
    Ok((d, v))
}

#[inline(always)]
fn ix(n: usize, row: usize, col: usize) -> usize {
    col * n + row
}

fn tred2(n: usize, v: &mut [f64], d: &mut [f64], e: &mut [f64]) {
    for j in 0..n {
        d[j] = v[ix(n, n - 1, j)];
    }
    for i in (1..n).rev() {
        let mut scale = 0.0;
        let mut h = 0.0;
        for dk in d.iter().take(i) {
            scale += dk.abs();
        }
        if scale == 0.0 {
            e[i] = d[i - 1];
            for j in 0..i {
                d[j] = v[ix(n, i - 1, j)];
                v[ix(n, i, j)] = 0.0;
                v[ix(n, j, i)] = 0.0;
            }
        } else {
            for dk in d.iter_mut().take(i) {
                *dk /= scale;
                h += *dk * *dk;
            }
            let f = d[i - 1];
            let mut g = h.sqrt();
            if f > 0.0 {
                g = -g;
            }
            e[i] = scale * g;
            h -= f * g;
            d[i - 1] = f - g;
            for ej in e.iter_mut().take(i) {
                *ej = 0.0;
            }
            for j in 0..i {
                let f = d[j];
                v[ix(n, j, i)] = f;
                let mut g = e[j] + v[ix(n, j, j)] * f;
                let col = &v[j * n..(j + 1) * n];
                for k in (j + 1)..i {
                    g += col[k] * d[k];
                    e[k] += col[k] * f;
                }
                e[j] = g;
            }
            let mut f = 0.0;
            for j in 0..i {
                e[j] /= h;
                f += e[j] * d[j];
            }
            let hh = f / (h + h);
            for j in 0..i {
                e[j] -= hh * d[j];
            }
            for j in 0..i {
                let f = d[j];
                let g = e[j];
                let col = &mut v[j * n..(j + 1) * n];
                for k in j..i {
                    col[k] -= f * e[k] + g * d[k];
                }
                d[j] = col[i - 1];
                col[i] = 0.0;
            }
        }
        d[i] = h;
    }

    for i in 0..n - 1 {
        v[ix(n, n - 1, i)] = v[ix(n, i, i)];
        v[ix(n, i, i)] = 1.0;
        let h = d[i + 1];
        if h != 0.0 {
            for k in 0..=i {
                d[k] = v[ix(n, k, i + 1)] / h;
            }
            for j in 0..=i {
                let mut g = 0.0;
                for k in 0..=i {
                    g += v[ix(n, k, i + 1)] * v[ix(n, k, j)];
                }
                let col = &mut v[j * n..(j + 1) * n];
                for k in 0..=i {
                    col[k] -= g * d[k];
                }
            }
        }
        for k in 0..=i {
            v[ix(n, k, i + 1)] = 0.0;
        }
    }
    for j in 0..n {
        d[j] = v[ix(n, n - 1, j)];
        v[ix(n, n - 1, j)] = 0.0;
    }
    v[ix(n, n - 1, n - 1)] = 1.0;
    e[0] = 0.0;
}

fn tql2(n: usize, v: &mut [f64], d: &mut [f64], e: &mut [f64]) -> Result<()> {
    for i in 1..n {
        e[i - 1] = e[i];
    }
    e[n - 1] = 0.0;

    let mut f = 0.0;
    let mut tst1 = 0.0_f64;
    let eps = f64::EPSILON;
    for l in 0..n {
        tst1 = tst1.max(d[l].abs() + e[l].abs());
        let mut m = l;
        while m < n {
            if e[m].abs() <= eps * tst1 {
                break;
            }
            m += 1;
        }
        if m > l {
            let mut iter = 0;
            loop {
                iter += 1;
                if iter > QL_MAX_ITERS_PER_EIGENVALUE {
                    return Err(Error::NoConvergence {
                        routine: "implicit QL",
                        iterations: QL_MAX_ITERS_PER_EIGENVALUE,
                    });
                }
                let g = d[l];
                let mut p = (d[l + 1] - g) / (2.0 * e[l]);
                let mut r = p.hypot(1.0);
                if p < 0.0 {
                    r = -r;
                }
                d[l] = e[l] / (p + r);
                d[l + 1] = e[l] * (p + r);
                let dl1 = d[l + 1];
                let mut h = g - d[l];
                for di in d.iter_mut().take(n).skip(l + 2) {
                    *di -= h;
                }
                f += h;

                p = d[m];
                let mut c = 1.0;
                let mut c2 = c;
                let mut c3 = c;
                let el1 = e[l + 1];
                let mut s = 0.0;
                let mut s2 = 0.0;
                for i in (l..m).rev() {
                    c3 = c2;
                    c2 = c;
                    s2 = s;
                    let g = c * e[i];
                    h = c * p;
                    r = p.hypot(e[i]);
                    e[i + 1] = s * r;
                    s = e[i] / r;
                    c = p / r;
                    p = c * d[i] - s * g;
                    d[i + 1] = h + s * (c * g + s * d[i]);
                    let (left, right) = v.split_at_mut((i + 1) * n);
                    let col_i = &mut left[i * n..];
                    let col_i1 = &mut right[..n];
                    for (a, b) in col_i.iter_mut().zip(col_i1.iter_mut()) {
                        let hk = *b;
                        *b = s * *a + c * hk;
                        *a = c * *a - s * hk;
                    }
                }
                p = -s * s2 * c3 * el1 * e[l] / dl1;
                e[l] = s * p;
                d[l] = c * p;
                if e[l].abs() <= eps * tst1 {
                    break;
                }
            }
        }
        d[l] += f;
        e[l] = 0.0;
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn check_invariants(a: &SymMatrix, d: &SpectralDecomp, tol: f64) {
        let n = a.n();
        let recon = d.reconstruct();
        let scale = a.frobenius_norm().max(1.0);
        assert!(recon.sub(a).unwrap().frobenius_norm() <= tol * scale);
        let vtv = d.eigenvectors.tr_mul(&d.eigenvectors);
        assert!((vtv - DMatrix::<f64>::identity(n, n)).norm() <= tol);
        for w in d.eigenvalues.windows(2) {
            assert!(w[0] >= w[1]);
        }
    }

    #[test]
    fn diagonal_input() {
        let d = spectral_decomp(&SymMatrix::from_diagonal(&[1.0, 3.0])).unwrap();
        assert_eq!(d.eigenvalues, vec![3.0, 1.0]);
        assert_eq!(d.eigenvectors[(1, 0)], 1.0);
        assert_eq!(d.eigenvectors[(0, 1)], 1.0);
    }

    #[test]
    fn classic_two_by_two() {
        let a = SymMatrix::from_fn(2, |i, j| if i == j { 0.0 } else { 1.0 });
        let d = spectral_decomp(&a).unwrap();
        assert!((d.eigenvalues[0] - 1.0).abs() < 1e-15);
        assert!((d.eigenvalues[1] + 1.0).abs() < 1e-15);
        let s = 0.5f64.sqrt();
        assert!((d.eigenvectors[(0, 0)] - s).abs() < 1e-15);
        assert!((d.eigenvectors[(1, 0)] - s).abs() < 1e-15);
        // (1,-1)/sqrt2 with its largest-magnitude entry (first, on the tie) positive
        assert!((d.eigenvectors[(0, 1)] - s).abs() < 1e-15);
        assert!((d.eigenvectors[(1, 1)] + s).abs() < 1e-15);
    }

    #[test]
    fn random_eigen_residuals_both_paths() {
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        for &n in &[1usize, 2, 8, 33, 64, 65, 100, 150] {
            let a = SymMatrix::random(n, &mut rng);
            let d = spectral_decomp(&a).unwrap();
            check_invariants(&a, &d, 1e-10);
            for i in 0..n {
                let vi: Vec<f64> = d.eigenvectors.column(i).iter().copied().collect();
                let av = a.matvec(&vi);
                let res: f64 = av.iter().zip(&vi).map(|(x, y)| (x - d.eigenvalues[i] * y).powi(2)).sum::<f64>().sqrt();
                assert!(res <= 1e-9 * a.frobenius_norm(), "n={n} i={i} res={res}");
            }
        }
    }

    #[test]
    fn eigenvalues_match_independent_solver() {
        let mut rng = ChaCha8Rng::seed_from_u64(12);
        for &n in &[10usize, 90] {
            let a = SymMatrix::random(n, &mut rng);
            let ours = spectral_decomp(&a).unwrap().eigenvalues;
            let mut theirs: Vec<f64> =
                nalgebra::SymmetricEigen::new(a.as_matrix().clone()).eigenvalues.iter().copied().collect();
            theirs.sort_by(|x, y| y.total_cmp(x));
            for (x, y) in ours.iter().zip(&theirs) {
                assert!((x - y).abs() <= 1e-10 * a.frobenius_norm());
            }
        }
    }

    #[test]
    fn degenerate_spectra() {
        for n in [3usize, 70] {
            let d = spectral_decomp(&SymMatrix::identity(n)).unwrap();
            assert!(d.eigenvalues.iter().all(|&l| (l - 1.0).abs() < 1e-14));
            check_invariants(&SymMatrix::identity(n), &d, 1e-12);
            let z = spectral_decomp(&SymMatrix::zeros(n)).unwrap();
            assert!(z.eigenvalues.iter().all(|&l| l == 0.0));
        }
    }

    #[test]
    fn low_rank_large_matrix() {
        let mut rng = ChaCha8Rng::seed_from_u64(13);
        let n = 120;
        let u = crate::linalg::Factor::from_fn(n, 3, |_, _| {
            rand_distr::Distribution::<f64>::sample(&rand_distr::StandardNormal, &mut rng)
        });
        let a = crate::linalg::gram(&u);
        let d = spectral_decomp(&a).unwrap();
        check_invariants(&a, &d, 1e-10);
        assert!(d.eigenvalues[3].abs() <= 1e-10 * d.eigenvalues[0]);
    }

    #[test]
    fn rejects_non_finite() {
        let mut a = SymMatrix::identity(3);
        a.set(0, 1, f64::NAN);
        assert!(spectral_decomp(&a).is_err());
    }
}
