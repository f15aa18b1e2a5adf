//! Linear measurement operators and the least-squares sensing loss.
//!
//! A symmetric `X` is handled in packed isometric coordinates
//! `p(X) = (x_jj, √2·x_jk for j < k)`, so `⟨X, Y⟩ = p(X)·p(Y)` and every
//! measurement is a dot product `⟨A_i, X⟩ = a_i·p(X)`.

use std::fmt;
use std::io::{BufRead, Write};
use std::str::FromStr;

use nalgebra::DMatrix;
use rand::seq::index;
use rand::{Rng, RngExt, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};

use super::{Objective, RestrictedConvexity};
use crate::error::{Error, Result};
use crate::linalg::{spectral_decomp, SymMatrix};

/// Dense operators above this many stored coefficients are refused.
pub const DENSE_LIMIT: usize = 1 << 27;

const POWER_ITERS: usize = 20;
const RSC_PROBES: usize = 20;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Ensemble {
    /// i.i.d. `N(0, 1/m)` in packed isometric coordinates.
    Gaussian,
    /// Matrix entries `±1/√m`, upper triangle mirrored.
    Rademacher,
    /// Subsampled randomized Walsh-Hadamard transform of `p(X)`.
    Hadamard,
}

impl fmt::Display for Ensemble {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Ensemble::Gaussian => "gaussian",
            Ensemble::Rademacher => "rademacher",
            Ensemble::Hadamard => "hadamard",
        })
    }
}

impl FromStr for Ensemble {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "gaussian" => Ok(Ensemble::Gaussian),
            "rademacher" => Ok(Ensemble::Rademacher),
            "hadamard" => Ok(Ensemble::Hadamard),
            other => Err(Error::Parse(format!("unknown ensemble `{other}`"))),
        }
    }
}

#[derive(Clone)]
enum Repr {
    /// `m x d` packed rows, row-major.
    Dense(Vec<f64>),
    Hadamard {
        padded: usize,
        signs: Vec<f64>,
        rows: Vec<usize>,
    },
}

#[derive(Clone)]
pub struct SensingOperator {
    n: usize,
    m: usize,
    seed: u64,
    ensemble: Ensemble,
    repr: Repr,
}

impl fmt::Debug for SensingOperator {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("SensingOperator")
            .field("n", &self.n)
            .field("m", &self.m)
            .field("seed", &self.seed)
            .field("ensemble", &self.ensemble)
            .finish()
    }
}

fn packed_dim(n: usize) -> usize {
    n * (n + 1) / 2
}

fn pack(x: &SymMatrix) -> Vec<f64> {
    let n = x.n();
    let mut p = Vec::with_capacity(packed_dim(n));
    let a = x.as_matrix();
    for j in 0..n {
        p.push(a[(j, j)]);
        for k in j + 1..n {
            p.push(std::f64::consts::SQRT_2 * a[(j, k)]);
        }
    }
    p
}

fn unpack(n: usize, p: &[f64]) -> SymMatrix {
    let mut a = DMatrix::zeros(n, n);
    let mut idx = 0;
    for j in 0..n {
        a[(j, j)] = p[idx];
        idx += 1;
        for k in j + 1..n {
            let v = p[idx] * std::f64::consts::FRAC_1_SQRT_2;
            a[(j, k)] = v;
            a[(k, j)] = v;
            idx += 1;
        }
    }
    SymMatrix::from_upper(a).expect("square by construction")
}

/// In-place unnormalized fast Walsh-Hadamard transform; `buf.len()` must be a
/// power of two.
fn fwht(buf: &mut [f64]) {
    let len = buf.len();
    let mut h = 1;
    while h < len {
        for block in buf.chunks_exact_mut(2 * h) {
            let (lo, hi) = block.split_at_mut(h);
            for (a, b) in lo.iter_mut().zip(hi.iter_mut()) {
                let (x, y) = (*a, *b);
                *a = x + y;
                *b = x - y;
            }
        }
        h *= 2;
    }
}

fn check_sizes(n: usize, m: usize) -> Result<()> {
    if n == 0 || m == 0 {
        return Err(Error::InvalidArgument(format!("need n, m >= 1, got n={n}, m={m}")));
    }
    Ok(())
}

fn dense_rows(
    n: usize,
    m: usize,
    rng: &mut ChaCha8Rng,
    mut draw: impl FnMut(&mut ChaCha8Rng, bool) -> f64,
) -> Result<Vec<f64>> {
    let d = packed_dim(n);
    if m.saturating_mul(d) > DENSE_LIMIT {
        return Err(Error::InvalidArgument(format!(
            "dense operator with {m} x {d} coefficients exceeds the limit; use the hadamard ensemble"
        )));
    }
    let mut rows = Vec::with_capacity(m * d);
    for _ in 0..m {
        for j in 0..n {
            rows.push(draw(rng, true));
            for _ in j + 1..n {
                rows.push(draw(rng, false));
            }
        }
    }
    Ok(rows)
}

pub fn gaussian_sensing(n: usize, m: usize, seed: u64) -> Result<SensingOperator> {
    check_sizes(n, m)?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let sd = 1.0 / (m as f64).sqrt();
    let rows = dense_rows(n, m, &mut rng, |rng, _| {
        let z: f64 = StandardNormal.sample(rng);
        sd * z
    })?;
    Ok(SensingOperator { n, m, seed, ensemble: Ensemble::Gaussian, repr: Repr::Dense(rows) })
}

pub fn rademacher_sensing(n: usize, m: usize, seed: u64) -> Result<SensingOperator> {
    check_sizes(n, m)?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let a = 1.0 / (m as f64).sqrt();
    let rows = dense_rows(n, m, &mut rng, |rng, diag| {
        let s = if rng.random::<bool>() { a } else { -a };
        // an off-diagonal entry appears twice in ⟨A, X⟩
        if diag {
            s
        } else {
            std::f64::consts::SQRT_2 * s
        }
    })?;
    Ok(SensingOperator { n, m, seed, ensemble: Ensemble::Rademacher, repr: Repr::Dense(rows) })
}

/// `m` distinct rows of `H·D` scaled by `1/√m`, acting on `p(X)` zero-padded
/// to the next power of two. Needs `m ≤` padded length.
pub fn hadamard_sensing(n: usize, m: usize, seed: u64) -> Result<SensingOperator> {
    check_sizes(n, m)?;
    let d = packed_dim(n);
    let padded = d.next_power_of_two();
    if m > padded {
        return Err(Error::InvalidArgument(format!(
            "hadamard ensemble has at most {padded} rows for n={n}, asked for {m}"
        )));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let signs: Vec<f64> = (0..d).map(|_| if rng.random::<bool>() { 1.0 } else { -1.0 }).collect();
    let mut rows = index::sample(&mut rng, padded, m).into_vec();
    rows.sort_unstable();
    Ok(SensingOperator { n, m, seed, ensemble: Ensemble::Hadamard, repr: Repr::Hadamard { padded, signs, rows } })
}

pub fn make_sensing(ensemble: Ensemble, n: usize, m: usize, seed: u64) -> Result<SensingOperator> {
    match ensemble {
        Ensemble::Gaussian => gaussian_sensing(n, m, seed),
        Ensemble::Rademacher => rademacher_sensing(n, m, seed),
        Ensemble::Hadamard => hadamard_sensing(n, m, seed),
    }
}

impl SensingOperator {
    pub fn n(&self) -> usize {
        self.n
    }

    pub fn m(&self) -> usize {
        self.m
    }

    pub fn seed(&self) -> u64 {
        self.seed
    }

    pub fn ensemble(&self) -> Ensemble {
        self.ensemble
    }

    /// `(⟨A_i, X⟩)_i`.
    pub fn forward(&self, x: &SymMatrix) -> Vec<f64> {
        assert_eq!(x.n(), self.n, "dimension mismatch");
        let p = pack(x);
        match &self.repr {
            Repr::Dense(rows) => {
                rows.chunks_exact(p.len()).map(|row| row.iter().zip(&p).map(|(a, b)| a * b).sum()).collect()
            }
            Repr::Hadamard { padded, signs, rows } => {
                let mut buf = vec![0.0; *padded];
                for ((b, s), v) in buf.iter_mut().zip(signs).zip(&p) {
                    *b = s * v;
                }
                fwht(&mut buf);
                let scale = 1.0 / (self.m as f64).sqrt();
                rows.iter().map(|&i| scale * buf[i]).collect()
            }
        }
    }

    /// `Σ_i v_i A_i`.
    pub fn adjoint(&self, v: &[f64]) -> SymMatrix {
        assert_eq!(v.len(), self.m, "dimension mismatch");
        let d = packed_dim(self.n);
        let q = match &self.repr {
            Repr::Dense(rows) => {
                let mut q = vec![0.0; d];
                for (row, &vi) in rows.chunks_exact(d).zip(v) {
                    for (qj, a) in q.iter_mut().zip(row) {
                        *qj += vi * a;
                    }
                }
                q
            }
            Repr::Hadamard { padded, signs, rows } => {
                let mut buf = vec![0.0; *padded];
                let scale = 1.0 / (self.m as f64).sqrt();
                for (&i, &vi) in rows.iter().zip(v) {
                    buf[i] = scale * vi;
                }
                fwht(&mut buf);
                buf.truncate(d);
                for (b, s) in buf.iter_mut().zip(signs) {
                    *b *= s;
                }
                buf
            }
        };
        unpack(self.n, &q)
    }

    /// The `i`-th measurement matrix.
    pub fn matrix(&self, i: usize) -> SymMatrix {
        let mut e = vec![0.0; self.m];
        e[i] = 1.0;
        self.adjoint(&e)
    }

    /// `A*A(Z)`.
    pub fn normal(&self, z: &SymMatrix) -> SymMatrix {
        self.adjoint(&self.forward(z))
    }
}

/// How `M` (and, when available, the restricted `m`) of a sensing loss are
/// obtained.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum SmoothnessEstimate {
    /// `λ_max(A*A)` by power iteration from a seeded random start.
    Full,
    /// Power iteration kept on rank-`2·rank` matrices, plus the smallest
    /// ratio `‖A(Z)‖²/‖Z‖²_F` over random differences of rank-`rank` PSD
    /// matrices as the restricted convexity constant.
    Restricted { rank: usize },
    /// Largest and smallest ratio `‖A(Z)‖²/‖Z‖²_F` over random differences
    /// of rank-`rank` PSD matrices.
    Sampled { rank: usize },
    /// Caller-supplied constants.
    Given { big_m: f64, rsc: Option<RestrictedConvexity> },
}

/// `f(X) = ½‖y − A(X)‖²`.
#[derive(Debug, Clone)]
pub struct SensingLoss {
    op: SensingOperator,
    y: Vec<f64>,
    big_m: f64,
    global_m: f64,
    rsc: Option<RestrictedConvexity>,
}

pub fn sensing_loss(op: SensingOperator, y: Vec<f64>) -> Result<SensingLoss> {
    SensingLoss::new(op, y, SmoothnessEstimate::Full)
}

impl SensingLoss {
    pub fn new(op: SensingOperator, y: Vec<f64>, estimate: SmoothnessEstimate) -> Result<Self> {
        if y.len() != op.m() {
            return Err(Error::ShapeMismatch(format!("operator has {} measurements, y has {}", op.m(), y.len())));
        }
        let global_m = full_smoothness(&op);
        let (big_m, rsc) = match estimate {
            SmoothnessEstimate::Full => (global_m, None),
            SmoothnessEstimate::Restricted { rank } | SmoothnessEstimate::Sampled { rank } => {
                if rank == 0 || rank > op.n() {
                    return Err(Error::InvalidArgument(format!("restricted rank {rank}")));
                }
                let power = matches!(estimate, SmoothnessEstimate::Restricted { .. });
                let (big_m, m) = restricted_constants(&op, rank, power);
                (big_m, Some(RestrictedConvexity { m, rank }))
            }
            SmoothnessEstimate::Given { big_m, rsc } => (big_m, rsc),
        };
        if !(big_m > 0.0 && big_m.is_finite()) {
            return Err(Error::DegenerateObjective(format!("smoothness estimate {big_m}")));
        }
        Ok(SensingLoss { op, y, big_m, global_m: global_m.max(big_m), rsc })
    }

    pub fn operator(&self) -> &SensingOperator {
        &self.op
    }

    pub fn measurements(&self) -> &[f64] {
        &self.y
    }

    fn residual(&self, x: &SymMatrix) -> Vec<f64> {
        let ax = self.op.forward(x);
        self.y.iter().zip(&ax).map(|(y, a)| y - a).collect()
    }
}

impl Objective for SensingLoss {
    fn dim(&self) -> usize {
        self.op.n()
    }

    fn value(&self, x: &SymMatrix) -> f64 {
        0.5 * self.residual(x).iter().map(|r| r * r).sum::<f64>()
    }

    fn gradient(&self, x: &SymMatrix) -> SymMatrix {
        self.value_and_gradient(x).1
    }

    fn value_and_gradient(&self, x: &SymMatrix) -> (f64, SymMatrix) {
        let mut r = self.residual(x);
        let value = 0.5 * r.iter().map(|v| v * v).sum::<f64>();
        for v in &mut r {
            *v = -*v;
        }
        (value, self.op.adjoint(&r))
    }

    fn smoothness(&self) -> f64 {
        self.big_m
    }

    fn global_smoothness(&self) -> f64 {
        self.global_m
    }

    fn restricted_convexity(&self) -> Option<RestrictedConvexity> {
        self.rsc
    }
}

fn estimator_rng(op: &SensingOperator) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(op.seed() ^ 0x5eed_5eed_5eed_5eed)
}

fn full_smoothness(op: &SensingOperator) -> f64 {
    let mut rng = estimator_rng(op);
    let mut z = SymMatrix::random(op.n(), &mut rng);
    z = z.scale(1.0 / z.frobenius_norm());
    let mut est: f64 = 0.0;
    for _ in 0..POWER_ITERS {
        let w = op.normal(&z);
        let norm = w.frobenius_norm();
        if norm == 0.0 {
            break;
        }
        est = est.max(z.inner(&w).expect("same dimension"));
        z = w.scale(1.0 / norm);
    }
    est
}

fn random_gaussian(rows: usize, cols: usize, rng: &mut impl Rng) -> DMatrix<f64> {
    DMatrix::from_fn(rows, cols, |_, _| StandardNormal.sample(&mut *rng))
}

fn ratio(op: &SensingOperator, z: &SymMatrix) -> f64 {
    let az = op.forward(z);
    az.iter().map(|v| v * v).sum::<f64>() / z.frobenius_norm().powi(2)
}

/// Best rank-`k` approximation (by eigenvalue magnitude) of a symmetric
/// matrix through a randomized range finder with two power passes.
fn approx_truncate(w: &SymMatrix, k: usize, rng: &mut impl Rng) -> SymMatrix {
    let n = w.n();
    let cols = (k + 5).min(n);
    let wm = w.as_matrix();
    let mut y = wm * random_gaussian(n, cols, rng);
    for _ in 0..2 {
        let q = y.qr().q();
        y = wm * q;
    }
    let q = y.qr().q();
    let b = SymMatrix::symmetrize(&(q.transpose() * wm * &q)).expect("square");
    let eig = spectral_decomp(&b).expect("finite input");
    let mut order: Vec<usize> = (0..eig.eigenvalues.len()).collect();
    order.sort_by(|&a, &b| eig.eigenvalues[b].abs().total_cmp(&eig.eigenvalues[a].abs()));
    let keep = &order[..k.min(order.len())];
    let vecs = &q * eig.eigenvectors.select_columns(keep);
    let vals: Vec<f64> = keep.iter().map(|&i| eig.eigenvalues[i]).collect();
    SymMatrix::from_eigenpairs(&vecs, &vals)
}

fn restricted_constants(op: &SensingOperator, rank: usize, power: bool) -> (f64, f64) {
    let n = op.n();
    let mut rng = estimator_rng(op);
    let psd_difference = |rng: &mut ChaCha8Rng| {
        let u1 = random_gaussian(n, rank, rng);
        let u2 = random_gaussian(n, rank, rng);
        SymMatrix::symmetrize(&(&u1 * u1.transpose() - &u2 * u2.transpose())).expect("square")
    };

    let mut z = psd_difference(&mut rng);
    let mut big_m: f64 = 0.0;
    let k = (2 * rank).min(n);
    for _ in 0..if power { POWER_ITERS } else { 0 } {
        let zn = z.frobenius_norm();
        if zn == 0.0 {
            break;
        }
        z = z.scale(1.0 / zn);
        big_m = big_m.max(ratio(op, &z));
        z = approx_truncate(&op.normal(&z), k, &mut rng);
    }

    let mut m = f64::INFINITY;
    for _ in 0..RSC_PROBES {
        let z = psd_difference(&mut rng);
        let r = ratio(op, &z);
        big_m = big_m.max(r);
        m = m.min(r);
    }
    (big_m, m)
}

/// A sensing instance on disk: the operator is regenerated from its seed.
///
/// ```text
/// <n> <m> <seed> <ensemble>
/// y_1
/// ...
/// ```
#[derive(Debug, Clone, PartialEq)]
pub struct SensingFixture {
    pub n: usize,
    pub seed: u64,
    pub ensemble: Ensemble,
    pub y: Vec<f64>,
}

impl SensingFixture {
    pub fn from_loss(loss: &SensingLoss) -> Self {
        let op = loss.operator();
        SensingFixture { n: op.n(), seed: op.seed(), ensemble: op.ensemble(), y: loss.y.clone() }
    }

    pub fn operator(&self) -> Result<SensingOperator> {
        make_sensing(self.ensemble, self.n, self.y.len(), self.seed)
    }

    pub fn write(&self, w: &mut impl Write) -> Result<()> {
        writeln!(w, "{} {} {} {}", self.n, self.y.len(), self.seed, self.ensemble)?;
        for v in &self.y {
            writeln!(w, "{v:e}")?;
        }
        Ok(())
    }

    pub fn read(r: impl BufRead) -> Result<Self> {
        let mut lines = r.lines();
        let header = lines.next().ok_or_else(|| Error::Parse("empty fixture".into()))??;
        let toks: Vec<&str> = header.split_whitespace().collect();
        let [n, m, seed, ens] = toks[..] else {
            return Err(Error::Parse(format!("bad sensing header `{header}`")));
        };
        let parse_err = |e: std::num::ParseIntError| Error::Parse(format!("header: {e}"));
        let n: usize = n.parse().map_err(parse_err)?;
        let m: usize = m.parse().map_err(parse_err)?;
        let seed: u64 = seed.parse().map_err(parse_err)?;
        let ensemble: Ensemble = ens.parse()?;
        let mut y = Vec::with_capacity(m);
        for line in lines {
            let line = line?;
            let t = line.trim();
            if t.is_empty() {
                continue;
            }
            y.push(t.parse::<f64>().map_err(|e| Error::Parse(format!("y: {e}")))?);
        }
        if y.len() != m {
            return Err(Error::Parse(format!("header says {m} measurements, found {}", y.len())));
        }
        Ok(SensingFixture { n, seed, ensemble, y })
    }
}
