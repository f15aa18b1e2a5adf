//! Factored gradient descent `U⁺ = U − η ∇f(UUᵀ) U`.

mod trace;

pub use trace::{IterRecord, IterationTrace, TRACE_HEADER};

use std::time::{Duration, Instant};

use crate::error::{Error, Result};
use crate::linalg::{
    dist, gram, rank_r_truncate, spectral_decomp, spectral_norm, Factor, SymMatrix, SPECTRAL_NORM_TOL,
};
use crate::objectives::Objective;

pub const DEFAULT_TOL: f64 = 5e-6;

/// `‖U‖_F` above this multiple of `‖U⁰‖_F` counts as divergence.
pub const BLOWUP_FACTOR: f64 = 1e8;

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum StepRule {
    /// Computed once at `X⁰ = U⁰U⁰ᵀ`.
    Fixed,
    /// Recomputed at the current iterate every `refresh` iterations.
    Adaptive {
        refresh: usize,
    },
    Constant(f64),
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Constraint {
    None,
    FrobeniusBall(f64),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum TraceLevel {
    /// Every iterate.
    Full,
    /// First and last iterate only.
    Endpoints,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SolverConfig {
    pub rank: usize,
    pub max_iters: usize,
    pub tol: f64,
    pub step_rule: StepRule,
    pub constraint: Constraint,
    pub trace_level: TraceLevel,
    /// When false every recorded time is zero, which makes traces
    /// reproducible byte for byte.
    pub timing: bool,
}

impl SolverConfig {
    pub fn new(rank: usize) -> Self {
        SolverConfig {
            rank,
            max_iters: 1000,
            tol: DEFAULT_TOL,
            step_rule: StepRule::Fixed,
            constraint: Constraint::None,
            trace_level: TraceLevel::Full,
            timing: true,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.rank == 0 {
            return Err(Error::InvalidArgument("rank must be at least 1".into()));
        }
        if !(self.tol > 0.0) {
            return Err(Error::InvalidArgument(format!("tol must be positive, got {}", self.tol)));
        }
        match self.step_rule {
            StepRule::Adaptive { refresh: 0 } => {
                return Err(Error::InvalidArgument("adaptive refresh must be >= 1".into()))
            }
            StepRule::Constant(c) if !(c > 0.0 && c.is_finite()) => {
                return Err(Error::InvalidArgument(format!("constant step {c}")))
            }
            _ => {}
        }
        if let Constraint::FrobeniusBall(radius) = self.constraint {
            if !(radius > 0.0) {
                return Err(Error::InvalidArgument(format!("ball radius {radius}")));
            }
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum StepProvenance {
    FixedAtX0,
    AdaptiveAtXk,
    UserConstant,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct StepSize {
    pub eta: f64,
    pub provenance: StepProvenance,
}

fn step_from_denominator(big_m: f64, denom: f64, provenance: StepProvenance) -> StepSize {
    // zero denominator: optimum at zero and start at zero
    let denom = if denom > 0.0 { denom } else { big_m };
    StepSize { eta: 1.0 / (16.0 * denom), provenance }
}

/// `η = 1 / (16 (M‖X⁰‖₂ + ‖∇f(X⁰)‖₂))`, or `1/(16M)` if the bracket is zero.
pub fn step_size_fixed(obj: &dyn Objective, x0: &SymMatrix) -> Result<StepSize> {
    let big_m = obj.smoothness();
    let x_norm = spectral_norm(x0, SPECTRAL_NORM_TOL)?;
    let g_norm = spectral_norm(&obj.gradient(x0), SPECTRAL_NORM_TOL)?;
    Ok(step_from_denominator(big_m, big_m * x_norm + g_norm, StepProvenance::FixedAtX0))
}

/// `η̂ = 1 / (16 (M‖X‖₂ + ‖∇f(X) Q_U Q_Uᵀ‖₂))` with `X = UUᵀ`.
pub fn step_size_adaptive(obj: &dyn Objective, u: &Factor) -> Result<StepSize> {
    let g = obj.gradient(&gram(u));
    adaptive_with_gradient(obj.smoothness(), u, &g)
}

/// Both norms come from `r x r` eigenproblems: `‖X‖₂ = λ_max(UᵀU)` and
/// `‖G Q‖₂² = λ_max(QᵀG²Q)` with `Q` an orthonormal basis of `col(U)`.
fn adaptive_with_gradient(big_m: f64, u: &Factor, g: &SymMatrix) -> Result<StepSize> {
    let eig = spectral_decomp(&u.small_gram())?;
    let top = eig.eigenvalues[0].max(0.0);
    let keep: Vec<usize> = (0..u.r()).filter(|&i| eig.eigenvalues[i] > 1e-12 * top).collect();
    let g_norm = if keep.is_empty() {
        0.0
    } else {
        let mut basis = u.as_matrix() * eig.eigenvectors.select_columns(&keep);
        for (c, &i) in keep.iter().enumerate() {
            basis.column_mut(c).scale_mut(1.0 / eig.eigenvalues[i].sqrt());
        }
        let gq = g.as_matrix() * &basis;
        let small = SymMatrix::symmetrize(&gq.tr_mul(&gq))?;
        spectral_decomp(&small)?.eigenvalues[0].max(0.0).sqrt()
    };
    Ok(step_from_denominator(big_m, big_m * top + g_norm, StepProvenance::AdaptiveAtXk))
}

/// One update `U − η ∇f(UUᵀ) U`.
pub fn fgd_step(obj: &dyn Objective, u: &Factor, step: StepSize) -> Result<Factor> {
    let g = obj.gradient(&gram(u)).mul_factor(u)?;
    let next = u.axpy(-step.eta, &g)?;
    if !next.is_finite() {
        return Err(Error::diverged(0, u.clone(), IterationTrace::default()));
    }
    Ok(next)
}

/// Radial projection onto `{‖U‖_F ≤ radius}`.
pub fn project_constraint(u: Factor, c: Constraint) -> Factor {
    match c {
        Constraint::None => u,
        Constraint::FrobeniusBall(radius) => {
            let norm = u.frobenius_norm();
            if norm <= radius {
                u
            } else {
                u.scale(radius / norm)
            }
        }
    }
}

/// `‖UUᵀ − VVᵀ‖_F` from `r x r` blocks:
/// `‖UᵀU‖² + ‖VᵀV‖² − 2‖UᵀV‖²`, clamped at zero.
pub fn gram_distance(u: &Factor, v: &Factor) -> Result<f64> {
    let uu = u.small_gram().frobenius_norm().powi(2);
    let vv = v.small_gram().frobenius_norm().powi(2);
    let uv = u.cross(v)?.norm_squared();
    Ok((uu + vv - 2.0 * uv).max(0.0).sqrt())
}

/// Known optimum used only for tracing and audits.
#[derive(Debug, Clone)]
pub struct Reference {
    pub x_star: SymMatrix,
    pub x_star_r: SymMatrix,
    pub u_star_r: Factor,
    x_star_norm: f64,
    tail_norm: f64,
}

impl Reference {
    /// Truncates a PSD `x_star` to rank `r`.
    pub fn new(x_star: SymMatrix, r: usize) -> Result<Self> {
        let (x_star_r, u_star_r) = rank_r_truncate(&x_star, r)?;
        let tail_norm = x_star.sub(&x_star_r)?.frobenius_norm();
        let x_star_norm = x_star.frobenius_norm();
        Ok(Reference { x_star, x_star_r, u_star_r, x_star_norm, tail_norm })
    }

    /// Exact-rank reference `X* = U*U*ᵀ`.
    pub fn from_factor(u_star: Factor) -> Self {
        let x_star = gram(&u_star);
        let x_star_norm = x_star.frobenius_norm();
        Reference { x_star_r: x_star.clone(), x_star, u_star_r: u_star, x_star_norm, tail_norm: 0.0 }
    }

    pub fn rank(&self) -> usize {
        self.u_star_r.r()
    }

    /// `σ₁(X*)`.
    pub fn sigma_1(&self) -> f64 {
        self.factor_singular_values()[0].powi(2)
    }

    /// `σ_r(X*)`.
    pub fn sigma_r(&self) -> f64 {
        self.factor_singular_values()[self.rank() - 1].powi(2)
    }

    fn factor_singular_values(&self) -> Vec<f64> {
        self.u_star_r.singular_values().expect("finite reference")
    }

    /// `‖X* − X*_r‖_F`.
    pub fn tail_norm(&self) -> f64 {
        self.tail_norm
    }

    pub fn dist(&self, u: &Factor) -> Result<f64> {
        Ok(dist(u, &self.u_star_r)?.0)
    }

    /// `‖UUᵀ − X*‖_F / ‖X*‖_F`.
    pub fn rel_err(&self, u: &Factor) -> Result<f64> {
        let abs = if self.tail_norm == 0.0 {
            gram_distance(u, &self.u_star_r)?
        } else {
            gram(u).sub(&self.x_star)?.frobenius_norm()
        };
        Ok(if self.x_star_norm > 0.0 { abs / self.x_star_norm } else { abs })
    }

    pub fn rel_err_matrix(&self, x: &SymMatrix) -> Result<f64> {
        let abs = x.sub(&self.x_star)?.frobenius_norm();
        Ok(if self.x_star_norm > 0.0 { abs / self.x_star_norm } else { abs })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum RunStatus {
    /// Relative change fell below `tol`.
    Converged,
    /// `∇f(X)U` vanished exactly.
    Stationary,
    MaxIters,
}

#[derive(Debug, Clone)]
pub struct RunOutcome {
    pub factor: Factor,
    pub trace: IterationTrace,
    pub status: RunStatus,
    /// Steps taken.
    pub iterations: usize,
    /// Step used for the first update.
    pub initial_step: StepSize,
}

impl RunOutcome {
    pub fn converged(&self) -> bool {
        self.status != RunStatus::MaxIters
    }
}

/// Accumulates algorithm time, leaving out reference bookkeeping.
pub(crate) struct Clock {
    enabled: bool,
    total: Duration,
    started: Option<Instant>,
}

impl Clock {
    pub(crate) fn new(enabled: bool) -> Self {
        Clock { enabled, total: Duration::ZERO, started: None }
    }

    pub(crate) fn resume(&mut self) {
        if self.enabled {
            self.started = Some(Instant::now());
        }
    }

    pub(crate) fn pause(&mut self) {
        if let Some(t) = self.started.take() {
            self.total += t.elapsed();
        }
    }

    pub(crate) fn seconds(&self) -> f64 {
        self.total.as_secs_f64()
    }
}

/// Runs FGD from `u0`, projected onto the constraint first, until the
/// relative change `‖U⁺U⁺ᵀ − UUᵀ‖_F < tol ‖U⁺U⁺ᵀ‖_F`, an exactly stationary
/// iterate, or `max_iters` steps.
pub fn run(obj: &dyn Objective, u0: Factor, cfg: &SolverConfig, reference: Option<&Reference>) -> Result<RunOutcome> {
    cfg.validate()?;
    if u0.r() != cfg.rank || u0.n() != obj.dim() {
        return Err(Error::ShapeMismatch(format!(
            "start is {}x{}, expected {}x{}",
            u0.n(),
            u0.r(),
            obj.dim(),
            cfg.rank
        )));
    }
    let big_m = obj.smoothness();
    let u0 = project_constraint(u0, cfg.constraint);
    let blowup = match u0.frobenius_norm() {
        0.0 => f64::INFINITY,
        norm => BLOWUP_FACTOR * norm,
    };
    let mut clock = Clock::new(cfg.timing);
    let mut trace = IterationTrace::default();

    clock.resume();
    let mut step = match cfg.step_rule {
        StepRule::Fixed => step_size_fixed(obj, &gram(&u0))?,
        StepRule::Constant(c) => StepSize { eta: c, provenance: StepProvenance::UserConstant },
        StepRule::Adaptive { .. } => StepSize { eta: f64::NAN, provenance: StepProvenance::AdaptiveAtXk },
    };
    clock.pause();

    let mut initial_step = None;
    let mut u = u0;
    let mut k = 0;
    let mut converged = false;
    loop {
        clock.resume();
        let (f, g) = obj.value_and_gradient(&gram(&u));
        let gu = g.mul_factor(&u)?;
        if let StepRule::Adaptive { refresh } = cfg.step_rule {
            if k % refresh == 0 {
                step = adaptive_with_gradient(big_m, &u, &g)?;
            }
        }
        let grad_norm = gu.frobenius_norm();
        clock.pause();
        initial_step.get_or_insert(step);

        let stationary = grad_norm == 0.0;
        let done = converged || stationary || k >= cfg.max_iters;
        if cfg.trace_level == TraceLevel::Full || k == 0 || done {
            let (d, e) = match reference {
                Some(r) => (Some(r.dist(&u)?), Some(r.rel_err(&u)?)),
                None => (None, None),
            };
            trace.push(IterRecord {
                iter: k,
                f,
                grad_factor_norm: grad_norm,
                dist: d,
                rel_err: e,
                eta: step.eta,
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
            return Ok(RunOutcome {
                factor: u,
                trace,
                status,
                iterations: k,
                initial_step: initial_step.expect("set on first pass"),
            });
        }

        clock.resume();
        let next = project_constraint(u.axpy(-step.eta, &gu)?, cfg.constraint);
        let norm = next.frobenius_norm();
        if !next.is_finite() || !norm.is_finite() || norm > blowup {
            return Err(Error::diverged(k + 1, u, trace));
        }
        let change = gram_distance(&next, &u)?;
        let scale = next.small_gram().frobenius_norm();
        converged = change < cfg.tol * scale;
        clock.pause();
        u = next;
        k += 1;
    }
}

/// `U` with `gram(U)` equal to the best rank-`r` approximation of `x`.
pub fn factor_of(x: &SymMatrix, r: usize) -> Result<Factor> {
    Ok(rank_r_truncate(x, r)?.1)
}
