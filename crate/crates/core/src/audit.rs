//! Inequality evaluators for the convergence analysis.
//!
//! Every check records `lhs ≤ rhs` as `margin = rhs − lhs`, so a check holds
//! when its margin is non-negative. Checks whose hypotheses fail on the given
//! state are still evaluated but marked `applies = false`.

use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::io::Write;

use nalgebra::{DMatrix, DVector};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};

use crate::error::{Error, Result};
use crate::linalg::{
    dist, gram, rank_r_truncate, spectral_decomp, spectral_norm, Factor, SymMatrix, SPECTRAL_NORM_TOL,
};
use crate::objectives::{factored_gradient, Objective, SeparableQuad};
use crate::solver::{step_size_adaptive, step_size_fixed, IterationTrace, Reference};

/// Largest `n·r` for which the dense Hessian is assembled.
pub const HESSIAN_MAX_DIM: usize = 64;

#[derive(Debug, Clone, PartialEq)]
pub struct Check {
    pub name: String,
    pub lhs: f64,
    pub rhs: f64,
    pub margin: f64,
    /// Magnitude the slack in [`Check::holds`] is relative to.
    pub scale: f64,
    pub context: String,
    /// Whether the hypotheses of the inequality hold at this state.
    pub applies: bool,
}

impl Check {
    pub fn new(name: &str, lhs: f64, rhs: f64, scale: f64, context: String, applies: bool) -> Self {
        Check { name: name.into(), lhs, rhs, margin: rhs - lhs, scale, context, applies }
    }

    pub fn holds(&self, rel_slack: f64) -> bool {
        self.margin >= -rel_slack * self.scale
    }
}

#[derive(Debug, Clone, Default, PartialEq)]
pub struct AuditReport {
    /// Pinned constants and other header lines.
    pub notes: Vec<String>,
    pub checks: Vec<Check>,
}

/// Neighbourhood of the optimum where the smooth or strongly convex bounds apply.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum BallMode {
    /// `ρ = σ_r(X*) / (100 σ₁(X*))`.
    Smooth,
    /// `ρ' = ρ / κ`.
    Strong { kappa: f64 },
}

impl BallMode {
    pub fn rho(self, reference: &Reference) -> f64 {
        let rho = reference.sigma_r() / (100.0 * reference.sigma_1());
        match self {
            BallMode::Smooth => rho,
            BallMode::Strong { kappa } => rho / kappa,
        }
    }

    /// `ρ σ_r(U*_r)`.
    pub fn radius(self, reference: &Reference) -> f64 {
        self.rho(reference) * reference.sigma_r().sqrt()
    }
}

impl AuditReport {
    fn push(&mut self, name: &str, lhs: f64, rhs: f64, scale: f64, context: String, applies: bool) {
        self.checks.push(Check::new(name, lhs, rhs, scale, context, applies));
    }

    /// Prefixes every context with `tag`.
    pub fn tagged(mut self, tag: &str) -> Self {
        for c in &mut self.checks {
            c.context = if c.context.is_empty() { tag.to_string() } else { format!("{tag};{}", c.context) };
        }
        self
    }

    pub fn extend(&mut self, other: AuditReport) {
        for n in other.notes {
            if !self.notes.contains(&n) {
                self.notes.push(n);
            }
        }
        self.checks.extend(other.checks);
    }

    pub fn applicable(&self) -> impl Iterator<Item = &Check> {
        self.checks.iter().filter(|c| c.applies)
    }

    /// Applicable checks that fail by more than `rel_slack · scale`.
    pub fn violations(&self, rel_slack: f64) -> Vec<&Check> {
        self.applicable().filter(|c| !c.holds(rel_slack)).collect()
    }

    /// Failing checks including those whose hypotheses do not hold.
    pub fn raw_violations(&self, rel_slack: f64) -> Vec<&Check> {
        self.checks.iter().filter(|c| !c.holds(rel_slack)).collect()
    }

    pub fn satisfied(&self, rel_slack: f64) -> bool {
        self.violations(rel_slack).is_empty()
    }

    pub fn named<'a>(&'a self, name: &'a str) -> impl Iterator<Item = &'a Check> + 'a {
        self.checks.iter().filter(move |c| c.name == name)
    }

    fn ensure_finite(self) -> Result<Self> {
        match self.checks.iter().find(|c| !(c.lhs.is_finite() && c.rhs.is_finite())) {
            Some(c) => Err(Error::InvalidArgument(format!(
                "non-finite audit value in {} ({}): lhs={} rhs={}",
                c.name, c.context, c.lhs, c.rhs
            ))),
            None => Ok(self),
        }
    }

    /// `check,lhs,rhs,margin,context`; inapplicable rows carry `precondition=false`.
    pub fn write_csv(&self, w: impl Write) -> Result<()> {
        let mut wtr = csv::Writer::from_writer(w);
        wtr.write_record(["check", "lhs", "rhs", "margin", "context"])?;
        for c in &self.checks {
            let context = if c.applies {
                c.context.clone()
            } else if c.context.is_empty() {
                "precondition=false".into()
            } else {
                format!("{};precondition=false", c.context)
            };
            wtr.write_record([
                c.name.clone(),
                format!("{:e}", c.lhs),
                format!("{:e}", c.rhs),
                format!("{:e}", c.margin),
                context,
            ])?;
        }
        wtr.flush()?;
        Ok(())
    }

    /// Notes, then one line per check name: count, applicable count,
    /// violations and the smallest applicable margin.
    pub fn summary(&self, rel_slack: f64) -> String {
        let mut out = String::new();
        for n in &self.notes {
            let _ = writeln!(out, "# {n}");
        }
        let mut by_name: BTreeMap<&str, (usize, usize, usize, f64)> = BTreeMap::new();
        for c in &self.checks {
            let e = by_name.entry(&c.name).or_insert((0, 0, 0, f64::INFINITY));
            e.0 += 1;
            if c.applies {
                e.1 += 1;
                e.3 = e.3.min(c.margin);
                if !c.holds(rel_slack) {
                    e.2 += 1;
                }
            }
        }
        for (name, (total, applicable, bad, min)) in by_name {
            let min = if applicable > 0 { format!("{min:e}") } else { "na".into() };
            let _ = writeln!(out, "{name}: {total} checks, {applicable} applicable, {bad} violated, min margin {min}");
        }
        let _ = writeln!(out, "total violations: {}", self.violations(rel_slack).len());
        out
    }
}

fn kappa_of(obj: &dyn Objective) -> Option<f64> {
    obj.restricted_convexity().map(|rc| obj.smoothness() / rc.m)
}

/// `‖X* − X*_r‖_F ≤ (σ_r/σ₁) σ_r / (200 κ^{3/2})`.
fn tail_condition(reference: &Reference, kappa: f64) -> bool {
    let (s1, sr) = (reference.sigma_1(), reference.sigma_r());
    reference.tail_norm() <= sr / s1 * sr / (200.0 * kappa.powf(1.5))
}

/// `DIST(U, U*_r) ≤ ρ σ_r(U*_r)`.
pub fn audit_ball_membership(u: &Factor, reference: &Reference, mode: BallMode) -> Result<AuditReport> {
    let d = reference.dist(u)?;
    let radius = mode.radius(reference);
    let name = match mode {
        BallMode::Smooth => "ball_smooth",
        BallMode::Strong { .. } => "ball_strong",
    };
    let mut rep = AuditReport::default();
    rep.push(name, d, radius, radius, String::new(), true);
    rep.ensure_finite()
}

/// Upper bound on `‖X − X*_r‖_F`, singular-value bounds on `U` and the lower
/// bounds on `‖X − X*_r‖_F²` in terms of `DIST²`, all under the smooth ball.
pub fn audit_sandwich(u: &Factor, reference: &Reference) -> Result<AuditReport> {
    let d = reference.dist(u)?;
    let rho = BallMode::Smooth.rho(reference);
    let in_ball = d <= BallMode::Smooth.radius(reference);
    let ctx = if in_ball { String::new() } else { "out of ball".to_string() };
    let u_star = &reference.u_star_r;
    let r = reference.rank();
    let sv_star = u_star.singular_values()?;
    let sv = u.singular_values()?;
    let (top_star, low_star) = (sv_star[0], sv_star[r - 1]);
    let sr = reference.sigma_r();
    let err = gram(u).sub(&reference.x_star_r)?.frobenius_norm();
    let xs = reference.sigma_1();

    let mut rep = AuditReport::default();
    rep.push("sandwich_upper_dist", err, (2.0 + rho) * d * top_star, xs, ctx.clone(), in_ball);
    rep.push("sandwich_upper", err, (2.0 + rho) * rho * top_star * low_star, xs, ctx.clone(), in_ball);
    rep.push("sigma_1_lower", 0.99 * top_star, sv[0], top_star, ctx.clone(), in_ball);
    rep.push("sigma_1_upper", sv[0], 1.01 * top_star, top_star, ctx.clone(), in_ball);
    rep.push("sigma_r_lower", 0.99 * low_star, sv[r - 1], top_star, ctx.clone(), in_ball);
    rep.push("sigma_r_upper", sv[r - 1], 1.01 * low_star, top_star, ctx.clone(), in_ball);
    let d2 = d * d;
    let scale = xs * xs;
    rep.push("sandwich_lower", 2.0 * (2f64.sqrt() - 1.0) * sr * d2, err * err, scale, ctx.clone(), in_ball);
    rep.push("sandwich_lower_3_4", 0.75 * sr * d2, err * err, scale, ctx, in_ball);
    rep.ensure_finite()
}

/// Compares `η` (at `X⁰`), `η̂` (at `U`) and `η*` (at `X*`).
///
/// `η̂ ≥ (5/6) η` needs `DIST(U) ≤ DIST(U⁰) ≤ ρ σ_r(U*_r)`; the two-sided bound
/// on `η/η*` additionally needs `‖X* − X*_r‖_F ≤ (σ_r/100)√(σ_r/σ₁)`.
pub fn audit_step_equivalence(
    obj: &dyn Objective,
    u: &Factor,
    x0: &SymMatrix,
    reference: &Reference,
) -> Result<AuditReport> {
    let eta = step_size_fixed(obj, x0)?.eta;
    let eta_hat = step_size_adaptive(obj, u)?.eta;
    let eta_star = step_size_fixed(obj, &reference.x_star)?.eta;
    let (_, u0) = rank_r_truncate(x0, reference.rank())?;
    let d = reference.dist(u)?;
    let d0 = reference.dist(&u0)?;
    let in_ball = d <= d0 && d0 <= BallMode::Smooth.radius(reference);
    let (s1, sr) = (reference.sigma_1(), reference.sigma_r());
    let tail_ok = reference.tail_norm() <= sr / 100.0 * (sr / s1).sqrt();
    let ctx = format!("dist={d:e};dist0={d0:e}");

    let mut rep = AuditReport::default();
    rep.push("eta_hat_lower", 5.0 / 6.0 * eta, eta_hat, eta, ctx.clone(), in_ball);
    rep.push("eta_star_lower", 10.0 / 11.0 * eta_star, eta, eta_star, ctx.clone(), in_ball && tail_ok);
    rep.push("eta_star_upper", eta, 11.0 / 10.0 * eta_star, eta_star, ctx, in_ball && tail_ok);
    rep.ensure_finite()
}

/// Lower bounds on `(1/η)⟨U − U⁺, U − U*_r R⟩ = ⟨∇f(X)U, U − U*_r R⟩`.
///
/// The strong form uses the restricted convexity constant of `obj` and needs
/// the strong ball and the tail condition; without a constant it is skipped. The
/// smooth form needs the smooth ball and `f(X⁺) ≥ f(X*_r)`, which is recorded
/// per call rather than assumed.
pub fn audit_descent(obj: &dyn Objective, u: &Factor, reference: &Reference, eta: f64) -> Result<AuditReport> {
    let (d, rot) = dist(u, &reference.u_star_r)?;
    let aligned = reference.u_star_r.mul_right(rot.as_matrix())?;
    let gu = factored_gradient(obj, u)?;
    let inner = gu.inner(&u.sub(&aligned)?)?;
    let gnorm2 = gu.frobenius_norm().powi(2);
    let f_next = obj.value(&gram(&u.axpy(-eta, &gu)?));
    let f_ref = obj.value(&reference.x_star_r);
    let big_m = obj.smoothness();
    let sr = reference.sigma_r();
    // units of ⟨∇f(X)U, U⟩ at the optimum scale
    let scale = (eta * gnorm2).max(inner.abs()).max(big_m * reference.sigma_1().powi(2));

    let mut rep = AuditReport::default();
    if let (Some(rc), Some(kappa)) = (obj.restricted_convexity(), kappa_of(obj)) {
        let in_ball = d <= BallMode::Strong { kappa }.radius(reference) && tail_condition(reference, kappa);
        let lhs = 2.0 / 3.0 * eta * gnorm2 + 0.15 * rc.m * sr * d * d - big_m / 4.0 * reference.tail_norm().powi(2);
        rep.push("descent_strong", lhs, inner, scale, format!("dist={d:e}"), in_ball);
    } else {
        rep.notes.push("no restricted convexity constant: strong descent form skipped".into());
    }
    let above = f_next >= f_ref;
    let in_ball = d <= BallMode::Smooth.radius(reference);
    rep.push(
        "descent_smooth",
        0.5 * eta * gnorm2,
        inner,
        scale,
        format!("dist={d:e};f_next_above_ref={above}"),
        in_ball && above,
    );
    rep.ensure_finite()
}

/// Applies `V ↦ map(V)` to every basis factor; column `i + n·j` is the image
/// of the unit factor at `(i, j)`.
fn assemble(n: usize, r: usize, mut map: impl FnMut(&Factor) -> Result<Factor>) -> Result<DMatrix<f64>> {
    let mut h = DMatrix::zeros(n * r, n * r);
    for j in 0..r {
        for i in 0..n {
            let mut e = Factor::zeros(n, r);
            e.set(i, j, 1.0);
            let img = map(&e)?;
            h.column_mut(i + n * j).copy_from_slice(img.as_matrix().as_slice());
        }
    }
    Ok(h)
}

/// Central-difference Jacobian of `U ↦ ∇f(UUᵀ)U` at `u`, column-major
/// vectorization, with the step `h = 1e-4 (1 + ‖u‖_F)` it used.
pub fn factored_hessian(obj: &dyn Objective, u: &Factor) -> Result<(DMatrix<f64>, f64)> {
    let (n, r) = (u.n(), u.r());
    if n * r > HESSIAN_MAX_DIM {
        return Err(Error::InvalidArgument(format!("Hessian assembly needs n*r <= {HESSIAN_MAX_DIM}, got {}", n * r)));
    }
    let h = 1e-4 * (1.0 + u.frobenius_norm());
    let fd = assemble(n, r, |e| {
        let plus = factored_gradient(obj, &u.axpy(h, e)?)?;
        let minus = factored_gradient(obj, &u.axpy(-h, e)?)?;
        Ok(plus.sub(&minus)?.scale(0.5 / h))
    })?;
    Ok((fd, h))
}

fn eigen_extremes(m: &DMatrix<f64>) -> Result<(f64, f64, f64)> {
    let s = SymMatrix::symmetrize(m)?;
    let e = spectral_decomp(&s)?;
    let top = e.eigenvalues[0];
    let bottom = *e.eigenvalues.last().unwrap();
    Ok((top.abs().max(bottom.abs()), top, bottom))
}

fn as_vec(v: &Factor) -> DVector<f64> {
    DVector::from_column_slice(v.as_matrix().as_slice())
}

/// Spectrum diagnostic for the Jacobian `H` of `U ↦ ∇f(UUᵀ)U` at `U*`.
///
/// `H` is assembled by central differences with `h = 1e-4 (1 + ‖U*‖_F)` and
/// compared with the split `H = A + B + C`,
/// `A: V ↦ (W∘(VU*ᵀ))U*`, `B: V ↦ (W∘(U*Vᵀ))U*`, `C: V ↦ ∇f(X*)V`.
/// Checked: `σ_max(H) ≤ 2M‖X*‖₂ + ‖∇f(X*)‖₂`, the norms of the three parts,
/// and `yᵀHy ≥ m σ_r(X*)` for unit `y` with `mat(y)ᵀU* = 0`, both as the
/// minimum over that subspace and on `probes` random directions. With equal
/// weights the two tightness directions are also evaluated.
pub fn audit_hessian_separable(sep: &SeparableQuad, u_star: &Factor, probes: usize, seed: u64) -> Result<AuditReport> {
    let (n, r) = (u_star.n(), u_star.r());
    if n * r > HESSIAN_MAX_DIM {
        return Err(Error::InvalidArgument(format!("Hessian audit needs n*r <= {HESSIAN_MAX_DIM}, got {}", n * r)));
    }
    if sep.dim() != n {
        return Err(Error::ShapeMismatch(format!("objective has dimension {}, factor has {n} rows", sep.dim())));
    }
    let big_m = sep.smoothness();
    let m = sep.strong_convexity();
    let x_star = gram(u_star);
    let g_star = sep.gradient(&x_star);
    let x_norm = spectral_norm(&x_star, SPECTRAL_NORM_TOL)?;
    let g_norm = spectral_norm(&g_star, SPECTRAL_NORM_TOL)?;
    let scale = 2.0 * big_m * x_norm + g_norm;
    let gram_eig = spectral_decomp(&u_star.small_gram())?;
    let sr = gram_eig.eigenvalues[r - 1];

    let (fd, h) = factored_hessian(sep, u_star)?;
    let w = sep.weights();
    let hadamard_times = |p: &DMatrix<f64>| -> Result<Factor> {
        let s = DMatrix::from_fn(n, n, |i, j| w.get(i, j) * p[(i, j)]);
        Factor::new(s * u_star.as_matrix())
    };
    let a = assemble(n, r, |v| hadamard_times(&(v.as_matrix() * u_star.as_matrix().transpose())))?;
    let b = assemble(n, r, |v| hadamard_times(&(u_star.as_matrix() * v.as_matrix().transpose())))?;
    let c = assemble(n, r, |v| g_star.mul_factor(v))?;

    let mut rep = AuditReport::default();
    rep.notes.push("sigma_max constant pinned to 2M||X*||_2 + ||grad f(X*)||_2".into());
    rep.notes.push("orthogonal lower bound constant pinned to c = 1".into());
    rep.notes.push(format!("finite-difference step h = {h:e}"));

    let asym = (&fd - fd.transpose()).norm();
    rep.push("hessian_symmetry", asym, 1e-4 * scale, scale, String::new(), true);
    let split_err = (&fd - (&a + &b + &c)).norm();
    rep.push("hessian_split", split_err, 1e-4 * scale, scale, String::new(), true);

    let (h_max, _, _) = eigen_extremes(&fd)?;
    rep.push("hessian_sigma_max", h_max, 2.0 * big_m * x_norm + g_norm, scale, String::new(), true);
    let (a_max, _, a_min) = eigen_extremes(&a)?;
    rep.push("hessian_a_norm", a_max, big_m * x_norm, scale, String::new(), true);
    rep.push("hessian_a_min", m * sr, a_min, scale, String::new(), true);
    let b_norm = b.singular_values().max();
    rep.push("hessian_b_norm", b_norm, big_m * x_norm, scale, String::new(), true);
    let c_norm = c.singular_values().max();
    rep.push("hessian_c_norm", c_norm, g_norm, scale, String::new(), true);
    let g_eig = spectral_decomp(&g_star)?;
    let g_min = *g_eig.eigenvalues.last().unwrap();
    rep.push("kkt_gradient_psd", 0.0, g_min, scale, String::new(), true);

    // basis of vec(Y) with the columns of Y orthogonal to col(U*)
    let x_eig = spectral_decomp(&x_star)?;
    let comp = x_eig.eigenvectors.columns(r, n - r).into_owned();
    if n > r {
        let k = n - r;
        let mut basis = DMatrix::zeros(n * r, k * r);
        for j in 0..r {
            for c_idx in 0..k {
                basis.view_mut((n * j, c_idx + k * j), (n, 1)).copy_from(&comp.column(c_idx));
            }
        }
        let restricted = basis.transpose() * &fd * &basis;
        let (_, _, low) = eigen_extremes(&restricted)?;
        rep.push("hessian_orthogonal_min", m * sr, low, scale, String::new(), true);

        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        for p in 0..probes {
            let coeffs = DVector::from_fn(k * r, |_, _| StandardNormal.sample(&mut rng));
            let y = &basis * coeffs;
            let y = &y / y.norm();
            let quad = y.dot(&(&fd * &y));
            rep.push("hessian_orthogonal_probe", m * sr, quad, scale, format!("probe={p}"), true);
        }

        // tightness directions, in the eigenbasis of U*ᵀU*
        let uniform = m == big_m;
        let q1 = gram_eig.eigenvectors.column(0).into_owned();
        let qr = gram_eig.eigenvectors.column(r - 1).into_owned();
        let s1 = gram_eig.eigenvalues[0];
        let u_hat = u_star.as_matrix() * &q1 / s1.sqrt();
        let s = g_eig.eigenvectors.column(0).into_owned();
        let v1 = Factor::new((u_hat + &s) * q1.transpose() / 2f64.sqrt())?;
        let hv1 = (&fd * as_vec(&v1)).norm();
        let v1_scale = big_m * x_norm + g_norm;
        rep.push("tightness_v1", 0.5 * v1_scale, hv1, scale, format!("ratio={:e}", hv1 / v1_scale), uniform);

        // complement direction least excited by the gradient
        let gc = comp.transpose() * g_star.as_matrix() * &comp;
        let gc2 = SymMatrix::symmetrize(&(gc.transpose() * &gc))?;
        let gc_eig = spectral_decomp(&gc2)?;
        let w_dir = &comp * gc_eig.eigenvectors.column(k - 1);
        let v2 = Factor::new(w_dir * qr.transpose())?;
        let hv2 = (&fd * as_vec(&v2)).norm();
        let target = big_m * sr;
        rep.push(
            "tightness_v2",
            (hv2 - target).abs(),
            0.1 * target,
            scale,
            format!("norm={hv2:e};target={target:e}"),
            uniform && gc_eig.eigenvalues[k - 1] <= 1e-20 * scale * scale,
        );
    }
    rep.ensure_finite()
}

/// `α` and `β` of the one-step contraction with denominator constants
/// `(a, b)`: `α = 1 − mσ_r/(a·D)`, `β = M/(b·D)`, `D = M‖X*‖₂ + ‖∇f(X*)‖₂`.
pub fn contraction_constants(obj: &dyn Objective, reference: &Reference, a: f64, b: f64) -> Result<Option<(f64, f64)>> {
    let Some(rc) = obj.restricted_convexity() else {
        return Ok(None);
    };
    let big_m = obj.smoothness();
    let denom = big_m * spectral_norm(&reference.x_star, SPECTRAL_NORM_TOL)?
        + spectral_norm(&obj.gradient(&reference.x_star), SPECTRAL_NORM_TOL)?;
    Ok(Some((1.0 - rc.m * reference.sigma_r() / (a * denom), big_m / (b * denom))))
}

/// Per-step `DIST²_{k+1}/DIST²_k` against `α + β‖X*−X*_r‖²/DIST²_k` for both
/// constant pairs (64, 28) and (208, 24), and the sublinear envelope
/// `f_k − f(X*_r) ≤ (5/η)D₀² / (k + (5/η)D₀²/(f₀ − f(X*_r)))`.
///
/// Ratios use consecutive records only. The envelope takes `η` from the first
/// record and is skipped when `f₀ ≤ f(X*_r)`.
pub fn audit_contraction_rate(
    trace: &IterationTrace,
    obj: &dyn Objective,
    reference: &Reference,
) -> Result<AuditReport> {
    let mut rep = AuditReport::default();
    if trace.len() < 2 {
        return Ok(rep);
    }
    let tail2 = reference.tail_norm().powi(2);
    let forms = [("contraction_64", 64.0, 28.0), ("contraction_208", 208.0, 24.0)];
    match contraction_constants(obj, reference, 64.0, 28.0)? {
        None => rep.notes.push("no restricted convexity constant: contraction checks skipped".into()),
        Some(_) => {
            for (name, a, b) in forms {
                let (alpha, beta) = contraction_constants(obj, reference, a, b)?.unwrap();
                rep.notes.push(format!("{name}: alpha={alpha:e} beta={beta:e}"));
                for w in trace.records.windows(2) {
                    let (Some(d0), Some(d1)) = (w[0].dist, w[1].dist) else { continue };
                    if w[1].iter != w[0].iter + 1 || d0 == 0.0 {
                        continue;
                    }
                    let ratio = (d1 / d0).powi(2);
                    let rhs = alpha + beta * tail2 / (d0 * d0);
                    rep.push(name, ratio, rhs, 1.0, format!("iter={}", w[0].iter), true);
                }
            }
        }
    }

    let first = &trace.records[0];
    let f_star = obj.value(&reference.x_star_r);
    let gap0 = first.f - f_star;
    match first.dist {
        Some(d0) if gap0 > 0.0 => {
            let c = 5.0 / first.eta * d0 * d0;
            for rec in &trace.records {
                let bound = c / (rec.iter as f64 + c / gap0);
                rep.push("sublinear", rec.f - f_star, bound, gap0, format!("iter={}", rec.iter), true);
            }
        }
        _ => rep.notes.push("sublinear envelope skipped: needs dist and f(X0) > f(X*_r)".into()),
    }
    rep.ensure_finite()
}

/// Replays `steps` fixed-step FGD updates from `u0` with the step of
/// [`step_size_fixed`] at `gram(u0)` and audits every `stride`-th iterate
/// with [`audit_sandwich`], [`audit_descent`] and [`audit_step_equivalence`]
/// (the latter against `X⁰ = gram(u0)`). Contexts carry `iter=k`.
pub fn audit_trajectory(
    obj: &dyn Objective,
    u0: &Factor,
    reference: &Reference,
    steps: usize,
    stride: usize,
) -> Result<AuditReport> {
    let stride = stride.max(1);
    let x0 = gram(u0);
    let step = step_size_fixed(obj, &x0)?;
    let mut rep = AuditReport::default();
    let mut u = u0.clone();
    for k in 0..=steps {
        if k % stride == 0 {
            let tag = format!("iter={k}");
            rep.extend(audit_sandwich(&u, reference)?.tagged(&tag));
            rep.extend(audit_descent(obj, &u, reference, step.eta)?.tagged(&tag));
            rep.extend(audit_step_equivalence(obj, &u, &x0, reference)?.tagged(&tag));
        }
        if k < steps {
            u = crate::solver::fgd_step(obj, &u, step)?;
        }
    }
    Ok(rep)
}

/// Both contraction forms, as `(violations with 64, violations with 208)`.
pub fn contraction_discrepancy(rep: &AuditReport, rel_slack: f64) -> (usize, usize) {
    let count = |name| rep.named(name).filter(|c| !c.holds(rel_slack)).count();
    (count("contraction_64"), count("contraction_208"))
}
