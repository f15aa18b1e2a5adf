//! Starting points for FGD.

use std::io::Write;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};

use crate::error::{Error, Result};
use crate::linalg::{psd_project, rank_r_truncate, spectral_decomp, Factor, SymMatrix};
use crate::objectives::Objective;
use crate::solver::Reference;

/// Constant `c` of the PGD switch criterion.
pub const SWITCH_C: f64 = 0.1;

#[derive(Debug, Clone, PartialEq)]
pub struct PgdSwitch {
    pub iterations: usize,
    /// `‖X⁺ − X‖_F` per projected step.
    pub step_norms: Vec<f64>,
    pub criterion_met: bool,
}

#[derive(Debug, Clone)]
pub struct InitReport {
    pub x0: SymMatrix,
    pub u0: Factor,
    pub dist_to_ref: Option<f64>,
    /// `γ` of the distance bound `DIST(U⁰, U*_r) ≤ γ σ_r(U*_r)`.
    pub gamma_bound: Option<f64>,
    /// Measured `‖∇f(0) − ∇f(e₁e₁ᵀ)‖_F` of the spectral start.
    pub probe_scale: f64,
    pub pgd: Option<PgdSwitch>,
}

impl InitReport {
    fn from_x0(x0: SymMatrix, r: usize, probe_scale: f64) -> Result<Self> {
        let (_, u0) = rank_r_truncate(&x0, r)?;
        Ok(InitReport { x0, u0, dist_to_ref: None, gamma_bound: None, probe_scale, pgd: None })
    }

    /// Fills the reference distance, and `γ` when `kappa` is known.
    pub fn with_reference(mut self, reference: &Reference, kappa: Option<f64>) -> Result<Self> {
        self.dist_to_ref = Some(reference.dist(&self.u0)?);
        self.gamma_bound = kappa.map(|k| gamma(reference, k));
        Ok(self)
    }

    /// `γ · σ_r(U*_r)`, the right-hand side of the distance bound.
    pub fn dist_bound(&self, reference: &Reference) -> Option<f64> {
        self.gamma_bound.map(|g| g * reference.sigma_r().sqrt())
    }

    /// `key value` lines.
    pub fn write(&self, w: &mut impl Write) -> Result<()> {
        let opt = |v: Option<f64>| v.map(|x| format!("{x:e}")).unwrap_or_else(|| "na".into());
        writeln!(w, "n {}", self.u0.n())?;
        writeln!(w, "r {}", self.u0.r())?;
        writeln!(w, "x0_frobenius {:e}", self.x0.frobenius_norm())?;
        writeln!(w, "u0_frobenius {:e}", self.u0.frobenius_norm())?;
        writeln!(w, "dist_to_ref {}", opt(self.dist_to_ref))?;
        writeln!(w, "gamma_bound {}", opt(self.gamma_bound))?;
        writeln!(w, "probe_scale {:e}", self.probe_scale)?;
        if let Some(p) = &self.pgd {
            writeln!(w, "pgd_iterations {}", p.iterations)?;
            writeln!(w, "pgd_criterion_met {}", p.criterion_met)?;
            writeln!(w, "pgd_last_step {}", opt(p.step_norms.last().copied()))?;
        }
        Ok(())
    }
}

/// `γ = 4τ(X*_r)√(2r) (√(κ² − 2/κ + 1)(srank(X*_r)^{1/2} + ρ̃) + ρ̃)` with
/// `ρ̃ = ‖X* − X*_r‖_F / ‖X*_r‖₂`.
pub fn gamma(reference: &Reference, kappa: f64) -> f64 {
    let s1 = reference.sigma_1();
    let sr = reference.sigma_r();
    let r = reference.rank() as f64;
    let tau = s1 / sr;
    let srank = reference.x_star_r.frobenius_norm().powi(2) / (s1 * s1);
    let rho = reference.tail_norm() / s1;
    let root = (kappa * kappa - 2.0 / kappa + 1.0).max(0.0).sqrt();
    4.0 * tau * (2.0 * r).sqrt() * (root * (srank.sqrt() + rho) + rho)
}

/// `X⁰ = P₊(−∇f(0)) / ‖∇f(0) − ∇f(e₁e₁ᵀ)‖_F`, factored at rank `r`.
pub fn init_spectral(obj: &dyn Objective, n: usize, r: usize) -> Result<InitReport> {
    if obj.dim() != n {
        return Err(Error::ShapeMismatch(format!("objective has dimension {}, asked for {n}", obj.dim())));
    }
    let g0 = obj.gradient(&SymMatrix::zeros(n));
    let mut e1 = SymMatrix::zeros(n);
    e1.set(0, 0, 1.0);
    let g1 = obj.gradient(&e1);
    let denom = g0.sub(&g1)?.frobenius_norm();
    if denom == 0.0 {
        return Err(Error::DegenerateObjective("gradient identical at 0 and e1e1ᵀ".into()));
    }
    let x0 = psd_project(&g0.scale(-1.0))?.scale(1.0 / denom);
    InitReport::from_x0(x0, r, denom)
}

/// Projected gradient descent `X⁺ = P₊(X − ∇f(X)/M)` from the spectral
/// start until `‖X⁺ − X‖_F ≤ c σ_r(X⁺) / (κ √r τ(X⁺_r))` or
/// `⌈10 κ ln(1/inner_tol)⌉` steps. Returns the rank-`r` factor of the last
/// `X⁺` either way.
pub fn init_pgd_switch(obj: &dyn Objective, n: usize, r: usize, inner_tol: f64) -> Result<InitReport> {
    let kappa = obj
        .condition_number()
        .ok_or_else(|| Error::InvalidArgument("PGD switch needs a known convexity constant".into()))?;
    if !(inner_tol > 0.0 && inner_tol < 1.0) {
        return Err(Error::InvalidArgument(format!("inner_tol must be in (0, 1), got {inner_tol}")));
    }
    // iterates are not rank-limited, so the step needs the global constant
    let big_m = obj.global_smoothness();
    let cap = (10.0 * kappa * (1.0 / inner_tol).ln()).ceil() as usize;
    let spectral = init_spectral(obj, n, r)?;

    let mut x = spectral.x0;
    let mut step_norms = Vec::new();
    let mut criterion_met = false;
    for _ in 0..cap.max(1) {
        let next = psd_project(&x.axpy(-1.0 / big_m, &obj.gradient(&x))?)?;
        let step = next.sub(&x)?.frobenius_norm();
        step_norms.push(step);
        x = next;
        let eig = spectral_decomp(&x)?;
        let (s1, sr) = (eig.eigenvalues[0], eig.eigenvalues[r - 1]);
        if sr > 0.0 {
            let tau = s1 / sr;
            let threshold = SWITCH_C * sr / (kappa * (r as f64).sqrt() * tau);
            if step <= threshold {
                criterion_met = true;
                break;
            }
        }
    }
    let mut report = InitReport::from_x0(x, r, spectral.probe_scale)?;
    report.pgd = Some(PgdSwitch { iterations: step_norms.len(), step_norms, criterion_met });
    Ok(report)
}

/// i.i.d. `N(0, scale²/n)` entries.
pub fn init_random(n: usize, r: usize, scale: f64, seed: u64) -> Result<Factor> {
    if !(scale >= 0.0 && scale.is_finite()) || n == 0 || r == 0 {
        return Err(Error::InvalidArgument(format!("init_random(n={n}, r={r}, scale={scale})")));
    }
    if scale == 0.0 {
        return Ok(Factor::zeros(n, r));
    }
    let normal = Normal::new(0.0, scale / (n as f64).sqrt()).map_err(|e| Error::InvalidArgument(e.to_string()))?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    Ok(Factor::from_fn(n, r, |_, _| normal.sample(&mut rng)))
}
