//! Projected gradient descent in `X`-space with a rank-`r` PSD projection
//! after every step (the SVP-style baseline).

use crate::error::{Error, Result};
use crate::linalg::{psd_rank_truncate, Factor, SymMatrix};
use crate::objectives::Objective;
use crate::solver::{
    gram_distance, Clock, IterRecord, IterationTrace, Reference, RunStatus, TraceLevel, BLOWUP_FACTOR, DEFAULT_TOL,
};

#[derive(Debug, Clone, PartialEq)]
pub struct SvpConfig {
    pub rank: usize,
    pub step: f64,
    pub max_iters: usize,
    pub tol: f64,
    pub trace_level: TraceLevel,
    pub timing: bool,
}

impl SvpConfig {
    /// Step `1/M`.
    pub fn new(obj: &dyn Objective, rank: usize) -> Self {
        SvpConfig {
            rank,
            step: 1.0 / obj.smoothness(),
            max_iters: 1000,
            tol: DEFAULT_TOL,
            trace_level: TraceLevel::Full,
            timing: true,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.rank == 0 {
            return Err(Error::InvalidArgument("rank must be at least 1".into()));
        }
        if !(self.tol > 0.0) || !(self.step > 0.0 && self.step.is_finite()) {
            return Err(Error::InvalidArgument(format!(
                "need tol > 0 and a finite positive step, got tol={} step={}",
                self.tol, self.step
            )));
        }
        Ok(())
    }
}

#[derive(Debug, Clone)]
pub struct SvpOutcome {
    pub x: SymMatrix,
    pub factor: Factor,
    pub trace: IterationTrace,
    pub status: RunStatus,
    pub iterations: usize,
}

impl SvpOutcome {
    pub fn converged(&self) -> bool {
        self.status != RunStatus::MaxIters
    }
}

/// `X⁺ = P_r⁺(X − η ∇f(X))`: keep the top `r` eigenpairs, negative
/// eigenvalues clipped to zero.
pub fn svp_step(obj: &dyn Objective, x: &SymMatrix, cfg: &SvpConfig) -> Result<SymMatrix> {
    let g = obj.gradient(x);
    Ok(psd_rank_truncate(&x.axpy(-cfg.step, &g)?, cfg.rank)?.0)
}

/// Iterates [`svp_step`] from the rank-`r` PSD truncation of `x0` with the
/// same stopping rule and trace schema as [`crate::solver::run`]. The
/// `grad_factor_norm` column holds `‖∇f(X)U‖_F` for `X = UUᵀ`.
pub fn svp_run(
    obj: &dyn Objective,
    x0: &SymMatrix,
    cfg: &SvpConfig,
    reference: Option<&Reference>,
) -> Result<SvpOutcome> {
    cfg.validate()?;
    if x0.n() != obj.dim() {
        return Err(Error::ShapeMismatch(format!("start is {}x{0}, objective has dimension {}", x0.n(), obj.dim())));
    }
    let mut clock = Clock::new(cfg.timing);
    let mut trace = IterationTrace::default();

    clock.resume();
    let (mut x, mut u) = psd_rank_truncate(x0, cfg.rank)?;
    clock.pause();
    let blowup = match u.frobenius_norm() {
        0.0 => f64::INFINITY,
        norm => BLOWUP_FACTOR * norm,
    };
    let mut k = 0;
    let mut converged = false;
    loop {
        clock.resume();
        let (f, g) = obj.value_and_gradient(&x);
        let gu = g.mul_factor(&u)?.frobenius_norm();
        clock.pause();

        let stationary = g.frobenius_norm() == 0.0;
        let done = converged || stationary || k >= cfg.max_iters;
        if cfg.trace_level == TraceLevel::Full || k == 0 || done {
            let (d, e) = match reference {
                Some(r) => (Some(r.dist(&u)?), Some(r.rel_err_matrix(&x)?)),
                None => (None, None),
            };
            trace.push(IterRecord {
                iter: k,
                f,
                grad_factor_norm: gu,
                dist: d,
                rel_err: e,
                eta: cfg.step,
                elapsed_s: clock.seconds(),
            });
        }
        if done {
            let status = if converged {
                RunStatus::Converged
            } else if stationary {
                RunStatus::Stationary
            } else {
                RunStatus::MaxIters
            };
            return Ok(SvpOutcome { x, factor: u, trace, status, iterations: k });
        }

        clock.resume();
        let (next, next_u) = psd_rank_truncate(&x.axpy(-cfg.step, &g)?, cfg.rank)?;
        if !next.is_finite() || next_u.frobenius_norm() > blowup {
            return Err(Error::diverged(k + 1, u, trace));
        }
        let change = gram_distance(&next_u, &u)?;
        converged = change < cfg.tol * next_u.small_gram().frobenius_norm();
        clock.pause();
        x = next;
        u = next_u;
        k += 1;
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linalg::{gram, spectral_decomp};
    use crate::objectives::{gaussian_sensing, quad_loss, SensingLoss, SmoothnessEstimate};
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;
    use rand_distr::{Distribution, StandardNormal};

    fn random_factor(n: usize, r: usize, rng: &mut ChaCha8Rng) -> Factor {
        Factor::from_fn(n, r, |_, _| StandardNormal.sample(rng))
    }

    fn sensing(n: usize, r: usize, seed: u64) -> (SensingLoss, Factor) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let u_star = random_factor(n, r, &mut rng);
        let op = gaussian_sensing(n, 6 * n * r, seed).unwrap();
        let y = op.forward(&gram(&u_star));
        (SensingLoss::new(op, y, SmoothnessEstimate::Sampled { rank: r }).unwrap(), u_star)
    }

    #[test]
    fn fixed_point_at_sensing_optimum() {
        let (loss, u_star) = sensing(16, 2, 1);
        let x_star = gram(&u_star);
        let cfg = SvpConfig::new(&loss, 2);
        let next = svp_step(&loss, &x_star, &cfg).unwrap();
        assert!(next.sub(&x_star).unwrap().frobenius_norm() <= 1e-10 * x_star.frobenius_norm());
        let out = svp_run(&loss, &x_star, &cfg, None).unwrap();
        assert!(out.iterations <= 1);
    }

    #[test]
    fn unit_step_on_quad_loss_truncates_target() {
        let mut rng = ChaCha8Rng::seed_from_u64(2);
        let target = gram(&random_factor(8, 5, &mut rng));
        let obj = quad_loss(target.clone());
        let mut cfg = SvpConfig::new(&obj, 2);
        cfg.step = 1.0;
        let x = SymMatrix::random(8, &mut rng);
        let next = svp_step(&obj, &x, &cfg).unwrap();
        let (expected, _) = psd_rank_truncate(&target, 2).unwrap();
        assert!(next.sub(&expected).unwrap().frobenius_norm() < 1e-10);
    }

    #[test]
    fn output_is_low_rank_psd_and_descends() {
        let (loss, u_star) = sensing(20, 2, 3);
        let cfg = SvpConfig::new(&loss, 2);
        let mut rng = ChaCha8Rng::seed_from_u64(4);
        let mut x = gram(&u_star).axpy(0.3, &SymMatrix::random(20, &mut rng)).unwrap();
        x = psd_rank_truncate(&x, 2).unwrap().0;
        let mut f = loss.value(&x);
        for _ in 0..10 {
            x = svp_step(&loss, &x, &cfg).unwrap();
            let eig = spectral_decomp(&x).unwrap();
            let top = eig.eigenvalues[0];
            assert!(eig.eigenvalues.iter().all(|&l| l >= -1e-12 * top));
            assert!(eig.eigenvalues[2..].iter().all(|l| l.abs() <= 1e-10 * top));
            let f_next = loss.value(&x);
            assert!(f_next <= f * (1.0 + 1e-12));
            f = f_next;
        }
    }

    #[test]
    fn run_reaches_tolerance() {
        let (loss, u_star) = sensing(24, 2, 5);
        let reference = Reference::from_factor(u_star.clone());
        let mut rng = ChaCha8Rng::seed_from_u64(6);
        let x0 = gram(&u_star).axpy(0.5, &SymMatrix::random(24, &mut rng)).unwrap();
        let cfg = SvpConfig::new(&loss, 2);
        let out = svp_run(&loss, &x0, &cfg, Some(&reference)).unwrap();
        assert!(out.converged());
        assert!(out.trace.last().unwrap().rel_err.unwrap() < 1e-4);
    }

    #[test]
    fn oversized_step_reports_divergence() {
        let (loss, u_star) = sensing(12, 2, 7);
        let mut cfg = SvpConfig::new(&loss, 2);
        cfg.step = 50.0 / loss.smoothness();
        let x0 = gram(&u_star).scale(1.5);
        match svp_run(&loss, &x0, &cfg, None) {
            Err(Error::Diverged(d)) => assert!(d.iteration > 0 && d.last_finite.is_finite()),
            other => panic!("expected divergence, got {:?}", other.map(|o| o.status)),
        }
    }
}
