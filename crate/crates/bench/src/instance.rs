//! Ground truths and problem instances.

use nalgebra::{DMatrix, DVector};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};

use fgd_core::linalg::{Factor, SymMatrix};
use fgd_core::objectives::{make_sensing, quad_loss, Ensemble, Objective, SensingLoss, SmoothnessEstimate};
use fgd_core::solver::Reference;
use fgd_core::{Error, Result};

use crate::spec::{Smoothness, Spectrum};

/// Independent seed for stream `stream` of a run seed (SplitMix64 finalizer).
pub fn sub_seed(seed: u64, stream: u64) -> u64 {
    let mut z = seed ^ stream.wrapping_mul(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

const TRUTH_STREAM: u64 = 1;
const OPERATOR_STREAM: u64 = 2;
/// Stream of random starting points.
pub const INIT_STREAM: u64 = 3;

/// `X* = V diag(s) Vᵀ` with a seeded random orthonormal `V` of width
/// `spectrum.len()`, and `U* = V diag(√s)`. With `trace_normalize` the
/// spectrum is scaled to sum to one first.
pub fn make_ground_truth(n: usize, spectrum: &[f64], seed: u64, trace_normalize: bool) -> Result<(SymMatrix, Factor)> {
    let k = spectrum.len();
    if k == 0 || k > n {
        return Err(Error::InvalidArgument(format!("spectrum length {k} for n = {n}")));
    }
    if spectrum.iter().any(|s| !(s.is_finite() && *s >= 0.0)) || spectrum.windows(2).any(|w| w[0] < w[1]) {
        return Err(Error::InvalidArgument("spectrum must be non-negative and descending".into()));
    }
    let total: f64 = spectrum.iter().sum();
    let scale = if trace_normalize {
        if total == 0.0 {
            return Err(Error::InvalidArgument("cannot trace-normalize a zero spectrum".into()));
        }
        1.0 / total
    } else {
        1.0
    };
    let s: Vec<f64> = spectrum.iter().map(|v| v * scale).collect();
    let mut rng = ChaCha8Rng::seed_from_u64(sub_seed(seed, TRUTH_STREAM));
    let g = DMatrix::from_fn(n, k, |_, _| StandardNormal.sample(&mut rng));
    let v = g.qr().q();
    let x = SymMatrix::from_eigenpairs(&v, &s);
    let roots = DVector::from_iterator(k, s.iter().map(|x| x.sqrt()));
    let u = Factor::new(v * DMatrix::from_diagonal(&roots))?;
    Ok((x, u))
}

/// Ground truth for a spectrum description, with the reference for rank `r`.
/// Exact-rank truths keep the factor as the reference so `DIST` is measured
/// against it directly.
pub fn ground_truth(n: usize, r: usize, spectrum: &Spectrum, seed: u64, trace_normalize: bool) -> Result<Reference> {
    match spectrum {
        Spectrum::Gaussian => {
            let mut rng = ChaCha8Rng::seed_from_u64(sub_seed(seed, TRUTH_STREAM));
            let u = Factor::from_fn(n, r, |_, _| StandardNormal.sample(&mut rng));
            let u = if trace_normalize { u.scale(1.0 / u.frobenius_norm()) } else { u };
            Ok(Reference::from_factor(u))
        }
        Spectrum::Flat => ground_truth(n, r, &Spectrum::Values(vec![1.0; r]), seed, trace_normalize),
        Spectrum::Values(v) => {
            let (x, u) = make_ground_truth(n, v, seed, trace_normalize)?;
            if v[r..].iter().all(|&s| s == 0.0) {
                let head = u.as_matrix().columns(0, r).into_owned();
                Ok(Reference::from_factor(Factor::new(head)?))
            } else {
                Reference::new(x, r)
            }
        }
    }
}

/// Noiseless sensing loss `½‖A(X*) − A(X)‖²` with `m` measurements.
pub fn sensing_instance(
    reference: &Reference,
    ensemble: Ensemble,
    m: usize,
    seed: u64,
    smoothness: Smoothness,
) -> Result<SensingLoss> {
    let n = reference.x_star.n();
    let op = make_sensing(ensemble, n, m, sub_seed(seed, OPERATOR_STREAM))?;
    let y = op.forward(&reference.x_star);
    let rank = reference.rank();
    let estimate = match smoothness {
        Smoothness::Sampled => SmoothnessEstimate::Sampled { rank },
        Smoothness::Restricted => SmoothnessEstimate::Restricted { rank },
        Smoothness::Full => SmoothnessEstimate::Full,
    };
    SensingLoss::new(op, y, estimate)
}

/// `½‖X − X*‖²_F`.
pub fn approx_instance(reference: &Reference) -> Box<dyn Objective> {
    Box::new(quad_loss(reference.x_star.clone()))
}
