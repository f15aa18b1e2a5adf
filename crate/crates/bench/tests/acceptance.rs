//! Acceptance suite: one PASS/FAIL line per criterion, plus INFO lines for
//! supplementary measurements. Exits nonzero on failure only when
//! `ACCEPTANCE_STRICT=1`.

use std::panic::{catch_unwind, AssertUnwindSafe};
use std::time::{Duration, Instant};

use nalgebra::DMatrix;
use rand::{RngExt, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};

use fgd_bench::experiment::{build_instance, run_experiment, variants, ExperimentResult, Status};
use fgd_bench::instance::ground_truth;
use fgd_bench::spec::{ExperimentSpec, Kind, SolverKind, Spectrum, SvpStep};
use fgd_bench::stats::{log_linear_fit, median};
use fgd_core::audit::{
    audit_contraction_rate, audit_descent, audit_hessian_separable, audit_sandwich, audit_step_equivalence,
    contraction_discrepancy, AuditReport, BallMode,
};
use fgd_core::init::init_spectral;
use fgd_core::linalg::{dist, gram, Factor, SymMatrix};
use fgd_core::objectives::{
    factored_gradient, gaussian_sensing, quad_loss, rademacher_sensing, separable_quad, Objective, SensingLoss,
    SmoothnessEstimate,
};
use fgd_core::solver::{fgd_step, project_constraint, step_size_fixed, Constraint, Reference};

const SLACK: f64 = 1e-9;

struct Verdict {
    pass: bool,
    detail: String,
    info: Vec<String>,
}

impl Verdict {
    fn new(pass: bool, detail: impl Into<String>) -> Self {
        Verdict { pass, detail: detail.into(), info: Vec::new() }
    }
}

// ---------------------------------------------------------------------------
// shared instances

fn sensing_spec() -> ExperimentSpec {
    let mut spec = ExperimentSpec::for_kind(Kind::Sensing);
    spec.n = 64;
    spec.r = 3;
    spec.csam = 6.0;
    spec.seeds = (0..10).collect();
    spec.max_iters = 500;
    spec.tol = 1e-9;
    spec.timing = false;
    spec
}

fn orthonormal(n: usize, r: usize, rng: &mut ChaCha8Rng) -> DMatrix<f64> {
    DMatrix::from_fn(n, r, |_, _| StandardNormal.sample(rng)).qr().q()
}

fn unit_direction(n: usize, r: usize, rng: &mut ChaCha8Rng) -> Factor {
    let e = Factor::from_fn(n, r, |_, _| StandardNormal.sample(rng));
    e.scale(1.0 / e.frobenius_norm())
}

/// Rotated optimum plus a step of at most `frac` smooth-ball radii.
fn ball_sample(reference: &Reference, frac: f64, rng: &mut ChaCha8Rng) -> Factor {
    let u = &reference.u_star_r;
    let rot = orthonormal(u.r(), u.r(), rng);
    let step = frac * BallMode::Smooth.radius(reference) * rng.random_range(0.0..1.0);
    u.mul_right(&rot).unwrap().axpy(step, &unit_direction(u.n(), u.r(), rng)).unwrap()
}

fn exact_separable(
    n: usize,
    r: usize,
    m: f64,
    big_m: f64,
    seed: u64,
) -> (fgd_core::objectives::SeparableQuad, Reference) {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let u_star = Factor::from_fn(n, r, |_, _| StandardNormal.sample(&mut rng));
    let weights = SymMatrix::from_fn(n, |_, _| rng.random_range(m..=big_m));
    let sep = separable_quad(gram(&u_star), weights, m, big_m).unwrap();
    (sep, Reference::from_factor(u_star))
}

fn gaussian_sensing_loss(n: usize, r: usize, seed: u64) -> (SensingLoss, Reference) {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let u_star = Factor::from_fn(n, r, |_, _| StandardNormal.sample(&mut rng));
    let op = gaussian_sensing(n, 6 * n * r, seed).unwrap();
    let y = op.forward(&gram(&u_star));
    let loss = SensingLoss::new(op, y, SmoothnessEstimate::Sampled { rank: r }).unwrap();
    (loss, Reference::from_factor(u_star))
}

fn sci(x: f64) -> String {
    format!("{x:.3e}")
}

// ---------------------------------------------------------------------------
// 1-3

fn criterion_1(res: &ExperimentResult, elapsed: Duration) -> Verdict {
    let finals: Vec<f64> = res.runs.iter().map(|r| r.row.final_rel_err).collect();
    let med = median(&finals);
    let within = res.runs.iter().all(|r| r.row.iterations <= 500);
    let mut worst_r2 = f64::INFINITY;
    let mut worst_slope = f64::NEG_INFINITY;
    for run in &res.runs {
        let iters: Vec<usize> = run.trace.records.iter().map(|r| r.iter).collect();
        let errs = run.trace.rel_errs();
        let fit = log_linear_fit(&iters, &errs).expect("trace has at least two records");
        worst_r2 = worst_r2.min(fit.r_squared);
        worst_slope = worst_slope.max(fit.slope);
    }
    let pass = med <= 1e-4 && within && worst_slope < 0.0 && worst_r2 >= 0.95 && elapsed.as_secs_f64() <= 30.0;
    Verdict::new(
        pass,
        format!(
            "median final rel err {} over {} seeds, max iterations {}, worst slope {}, worst R^2 {:.4}, {:.1}s",
            sci(med),
            res.runs.len(),
            res.runs.iter().map(|r| r.row.iterations).max().unwrap_or(0),
            sci(worst_slope),
            worst_r2,
            elapsed.as_secs_f64()
        ),
    )
}

fn audits_for(spec: &ExperimentSpec, res: &ExperimentResult) -> AuditReport {
    let variant = &variants(spec)[0];
    let mut report = AuditReport::default();
    for run in &res.runs {
        let inst = build_instance(spec, variant, run.row.seed).unwrap();
        let rep = audit_contraction_rate(&run.trace, inst.objective.as_ref(), &inst.reference).unwrap();
        report.extend(rep.tagged(&format!("seed={}", run.row.seed)));
    }
    report
}

fn criterion_2(report: &AuditReport) -> Verdict {
    let (v64, v208) = contraction_discrepancy(report, SLACK);
    let n = report.named("contraction_64").count();
    let worst = report.named("contraction_64").map(|c| c.margin).fold(f64::INFINITY, f64::min);
    let pass = n > 0 && (v64 == 0 || v208 == 0);
    let mut v = Verdict::new(
        pass,
        format!("{n} ratios, 64-form violations {v64}, 208-form violations {v208}, min 64-form margin {}", sci(worst)),
    );
    if v64 > 0 && v208 == 0 {
        v.info.push(format!("64-constant form failed at {v64} iterates; 208-constant form holds"));
    }
    v
}

fn criterion_3(report: &AuditReport) -> Verdict {
    let n = report.named("sublinear").count();
    let bad = report.named("sublinear").filter(|c| !c.holds(SLACK)).count();
    Verdict::new(n > 0 && bad == 0, format!("{n} iterates checked, {bad} above the envelope"))
}

// ---------------------------------------------------------------------------
// 4

fn criterion_4() -> Verdict {
    let start = Instant::now();
    let mut worst = 0.0_f64;
    for (seed, r) in [(0, 1), (1, 3), (2, 5), (3, 10)] {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let u = Factor::from_fn(50, r, |_, _| StandardNormal.sample(&mut rng));
        let x_star = gram(&u);
        let init = init_spectral(&quad_loss(x_star.clone()), 50, r).unwrap();
        let scale = x_star.frobenius_norm();
        worst = worst.max(init.x0.sub(&x_star).unwrap().frobenius_norm() / scale);
        worst = worst.max(gram(&init.u0).sub(&x_star).unwrap().frobenius_norm() / scale);
    }
    let secs = start.elapsed().as_secs_f64();
    Verdict::new(
        worst <= 1e-10 && secs < 1.0,
        format!("worst relative distance {} on 4 instances, {secs:.2}s", sci(worst)),
    )
}

// ---------------------------------------------------------------------------
// 5

fn criterion_5() -> Verdict {
    let start = Instant::now();
    let mut spec = ExperimentSpec::for_kind(Kind::CondnumSweep);
    spec.spectra = [1.0, 10.0, 20.0].iter().map(|s| Spectrum::Values(vec![100.0, 100.0, *s])).collect();
    spec.seeds = (0..5).collect();
    spec.tol = 1e-9;
    spec.max_iters = 200_000;
    spec.timing = false;
    let r3 = run_experiment(&spec).unwrap();
    spec.r = 2;
    let r2 = run_experiment(&spec).unwrap();
    let secs = start.elapsed().as_secs_f64();

    let counts =
        |res: &ExperimentResult| -> Vec<f64> { res.summary.iter().map(|s| s.median_iters_to_target).collect() };
    let c3 = counts(&r3);
    let c2 = counts(&r2);
    let decreasing = c3.windows(2).all(|w| w[1] < w[0]) && c3.iter().all(|c| c.is_finite());
    let spread = c2.iter().cloned().fold(0.0, f64::max) / c2.iter().cloned().fold(f64::INFINITY, f64::min);
    let pass = decreasing && spread <= 1.5 && secs <= 60.0;
    Verdict::new(
        pass,
        format!(
            "median iterations to DIST <= 1e-3 |U*_r|_F for sigma_3 = 1,10,20: r=3 {c3:?}, r=2 {c2:?} (spread {spread:.3}), {secs:.1}s"
        ),
    )
}

// ---------------------------------------------------------------------------
// 6

fn criterion_6() -> Verdict {
    let mut report = AuditReport::default();
    let mut states = 0;
    let mut rng = ChaCha8Rng::seed_from_u64(60);
    for seed in 0..2 {
        let (loss, reference) = gaussian_sensing_loss(20, 2, 61 + seed);
        for _ in 0..10 {
            let u0 = ball_sample(&reference, 1.0, &mut rng);
            let (_, rot) = dist(&u0, &reference.u_star_r).unwrap();
            let aligned = reference.u_star_r.mul_right(rot.as_matrix()).unwrap();
            let u = aligned.axpy(rng.random_range(0.0..1.0), &u0.sub(&aligned).unwrap()).unwrap();
            let rep = audit_step_equivalence(&loss, &u, &gram(&u0), &reference).unwrap();
            states += 1;
            report.extend(rep);
        }
    }
    let applicable = report.applicable().count();
    let bad = report.checks.iter().filter(|c| !c.holds(1e-12)).count();
    Verdict::new(
        applicable == 3 * states && bad == 0,
        format!("{states} states, {applicable} of {} checks applicable, {bad} violations", report.checks.len()),
    )
}

// ---------------------------------------------------------------------------
// 7

fn fd_half_gradient(obj: &dyn Objective, u: &Factor) -> Factor {
    let h = 1e-5 * (1.0 + u.frobenius_norm());
    let mut out = Factor::zeros(u.n(), u.r());
    for i in 0..u.n() {
        for j in 0..u.r() {
            let mut up = u.clone();
            up.set(i, j, u.get(i, j) + h);
            let mut um = u.clone();
            um.set(i, j, u.get(i, j) - h);
            out.set(i, j, 0.25 * (obj.value(&gram(&up)) - obj.value(&gram(&um))) / h);
        }
    }
    out
}

fn criterion_7() -> Verdict {
    let (n, r) = (8, 2);
    let mut rng = ChaCha8Rng::seed_from_u64(70);
    let target = gram(&Factor::from_fn(n, 3, |_, _| StandardNormal.sample(&mut rng)));
    let weights = SymMatrix::from_fn(n, |_, _| rng.random_range(0.5..=2.0));
    let (sensing, _) = gaussian_sensing_loss(n, r, 71);
    let families: Vec<(&str, Box<dyn Objective>)> = vec![
        ("quadratic", Box::new(quad_loss(target.clone()))),
        ("separable", Box::new(separable_quad(target, weights, 0.5, 2.0).unwrap())),
        ("sensing", Box::new(sensing)),
    ];
    let mut parts = Vec::new();
    let mut pass = true;
    for (name, obj) in &families {
        let mut worst = 0.0_f64;
        for _ in 0..10 {
            let u = Factor::from_fn(n, r, |_, _| StandardNormal.sample(&mut rng));
            let g = factored_gradient(obj.as_ref(), &u).unwrap();
            let fd = fd_half_gradient(obj.as_ref(), &u);
            worst = worst.max(g.sub(&fd).unwrap().frobenius_norm() / fd.frobenius_norm());
        }
        pass &= worst <= 1e-5;
        parts.push(format!("{name} {}", sci(worst)));
    }
    Verdict::new(pass, format!("worst relative error over 10 probes: {}", parts.join(", ")))
}

// ---------------------------------------------------------------------------
// 8

fn criterion_8() -> Verdict {
    let mut rng = ChaCha8Rng::seed_from_u64(80);
    let mut worst1 = 0.0_f64;
    let mut worst2 = 0.0_f64;
    let mut below_grid = 0.0_f64;
    let steps = 20_000;
    for _ in 0..50 {
        let u = Factor::from_fn(10, 1, |_, _| StandardNormal.sample(&mut rng));
        let v = Factor::from_fn(10, 1, |_, _| StandardNormal.sample(&mut rng));
        let brute = u.sub(&v).unwrap().frobenius_norm().min(u.add(&v).unwrap().frobenius_norm());
        worst1 = worst1.max((dist(&u, &v).unwrap().0 - brute).abs());

        let u = Factor::from_fn(10, 2, |_, _| StandardNormal.sample(&mut rng));
        let v = Factor::from_fn(10, 2, |_, _| StandardNormal.sample(&mut rng));
        let mut grid = f64::INFINITY;
        for k in 0..steps {
            let t = std::f64::consts::TAU * k as f64 / steps as f64;
            let (c, s) = (t.cos(), t.sin());
            for rot in [DMatrix::from_row_slice(2, 2, &[c, -s, s, c]), DMatrix::from_row_slice(2, 2, &[c, s, s, -c])] {
                grid = grid.min(u.sub(&v.mul_right(&rot).unwrap()).unwrap().frobenius_norm());
            }
        }
        let d = dist(&u, &v).unwrap().0;
        worst2 = worst2.max((d - grid).abs());
        below_grid = below_grid.max(d - grid);
    }
    let pass = worst1 <= 1e-12 && worst2 <= 1e-3 && below_grid <= 1e-12;
    Verdict::new(
        pass,
        format!(
            "r=1 worst gap to sign brute force {}, r=2 worst gap to {steps}-angle grid {}, 50 pairs each",
            sci(worst1),
            sci(worst2)
        ),
    )
}

// ---------------------------------------------------------------------------
// 9

fn criterion_9() -> Verdict {
    let mut rng = ChaCha8Rng::seed_from_u64(90);
    let (sep, reference) = exact_separable(10, 2, 1.0, 1.5, 91);
    let (loss, sref) = gaussian_sensing_loss(12, 2, 92);

    let mut sandwich = AuditReport::default();
    for i in 0..50 {
        let (r, frac) = if i % 2 == 0 { (&reference, 1.0) } else { (&sref, 1.0) };
        sandwich.extend(audit_sandwich(&ball_sample(r, frac, &mut rng), r).unwrap());
    }
    let kappa = 1.5;
    let eta = step_size_fixed(&sep, &reference.x_star).unwrap().eta;
    let mut descent = AuditReport::default();
    for _ in 0..50 {
        let u = ball_sample(&reference, 1.0 / kappa, &mut rng);
        descent.extend(audit_descent(&sep, &u, &reference, eta).unwrap());
    }
    let sensing_eta = step_size_fixed(&loss, &sref.x_star).unwrap().eta;
    for _ in 0..20 {
        let u = ball_sample(&sref, 0.5, &mut rng);
        descent.extend(audit_descent(&loss, &u, &sref, sensing_eta).unwrap().tagged("sensing"));
    }

    // steps of 100 radii back towards the saddle at zero on a rank-one instance
    let (sep1, ref1) = exact_separable(8, 1, 1.0, 1.0, 93);
    let eta1 = step_size_fixed(&sep1, &ref1.x_star).unwrap().eta;
    let radius = BallMode::Smooth.radius(&ref1);
    let toward_zero = ref1.u_star_r.scale(-1.0 / ref1.u_star_r.frobenius_norm());
    let mut control = AuditReport::default();
    for _ in 0..50 {
        let e = toward_zero.axpy(0.2, &unit_direction(8, 1, &mut rng)).unwrap();
        let u = ref1.u_star_r.axpy(100.0 * radius, &e.scale(1.0 / e.frobenius_norm())).unwrap();
        control.extend(audit_descent(&sep1, &u, &ref1, eta1).unwrap());
        control.extend(audit_sandwich(&u, &ref1).unwrap());
    }

    let s_app = sandwich.applicable().count();
    let d_app = descent.applicable().count();
    let s_bad = sandwich.violations(SLACK).len();
    let d_bad = descent.violations(SLACK).len();
    let strong = descent.named("descent_strong").filter(|c| c.applies).count();
    let c_app = control.applicable().count();
    let c_raw = control.raw_violations(SLACK).len();
    let pass = s_app == sandwich.checks.len() && d_bad == 0 && s_bad == 0 && strong >= 50 && c_app == 0 && c_raw > 0;
    Verdict::new(
        pass,
        format!(
            "sandwich {s_app}/{} applicable, {s_bad} violated; descent {d_app}/{} applicable ({strong} strong), {d_bad} violated; negative control {c_raw} raw violations, {c_app} applicable",
            sandwich.checks.len(),
            descent.checks.len()
        ),
    )
}

// ---------------------------------------------------------------------------
// 10

fn criterion_10() -> Verdict {
    let start = Instant::now();
    let (sep, reference) = exact_separable(6, 2, 1.0, 2.0, 100);
    let rep = audit_hessian_separable(&sep, &reference.u_star_r, 20, 101).unwrap();
    let secs = start.elapsed().as_secs_f64();
    let sigma = rep.named("hessian_sigma_max").all(|c| c.holds(1e-4));
    let probes: Vec<_> = rep.named("hessian_orthogonal_probe").collect();
    let probes_ok = probes.len() == 20 && probes.iter().all(|c| c.holds(1e-4));
    let min_probe = probes.iter().map(|c| c.margin).fold(f64::INFINITY, f64::min);
    let all = rep.violations(1e-4).len();
    let mut v = Verdict::new(
        sigma && probes_ok && secs < 10.0,
        format!(
            "sigma_max bound {}, {} orthogonal probes with min margin {}, {:.2}s",
            if sigma { "holds" } else { "fails" },
            probes.len(),
            sci(min_probe),
            secs
        ),
    );
    v.info.push(format!("all Hessian checks: {} total, {all} violated", rep.checks.len()));
    v
}

// ---------------------------------------------------------------------------
// 11

fn criterion_11() -> Verdict {
    let n = 64;
    let mut worst_norm = 0.0_f64;
    let mut reached = Vec::new();
    for seed in 0..5 {
        let reference = ground_truth(n, 1, &Spectrum::Values(vec![1.0]), seed, true).unwrap();
        let op = rademacher_sensing(n, 3 * n, seed + 1000).unwrap();
        let y = op.forward(&reference.x_star);
        let loss = SensingLoss::new(op, y, SmoothnessEstimate::Sampled { rank: 1 }).unwrap();
        let ball = Constraint::FrobeniusBall(1.0);
        let mut u = project_constraint(init_spectral(&loss, n, 1).unwrap().u0, ball);
        let step = step_size_fixed(&loss, &gram(&u)).unwrap();
        worst_norm = worst_norm.max(u.frobenius_norm());
        let mut hit = None;
        for k in 1..=1000 {
            u = project_constraint(fgd_step(&loss, &u, step).unwrap(), ball);
            worst_norm = worst_norm.max(u.frobenius_norm());
            if hit.is_none() && reference.rel_err(&u).unwrap() <= 1e-3 {
                hit = Some(k);
            }
        }
        reached.push(hit);
    }
    let pass = reached.iter().all(Option::is_some) && worst_norm <= 1.0 + 1e-12;
    Verdict::new(
        pass,
        format!("iterations to rel err <= 1e-3 on 5 seeds {reached:?}, max |U|_F - 1 = {}", sci(worst_norm - 1.0)),
    )
}

// ---------------------------------------------------------------------------
// 12-13

fn row(res: &ExperimentResult, solver: SolverKind) -> &fgd_bench::experiment::SummaryRow {
    res.summary.iter().find(|s| s.solver == solver).unwrap()
}

fn criterion_12() -> Verdict {
    let start = Instant::now();
    let mut spec = ExperimentSpec::for_kind(Kind::Sensing);
    spec.n = 512;
    spec.r = 5;
    spec.csam = 6.0;
    spec.ensemble = fgd_core::objectives::Ensemble::Hadamard;
    spec.trace_normalize = true;
    spec.solvers = vec![SolverKind::Fgd, SolverKind::Svp];
    spec.svp_step = SvpStep::Shared;
    spec.seeds = vec![0];
    spec.traces = false;
    let res = run_experiment(&spec).unwrap();
    let secs = start.elapsed().as_secs_f64();
    let (f, s) = (row(&res, SolverKind::Fgd), row(&res, SolverKind::Svp));
    let both = res.runs.iter().all(|r| r.row.status == Status::Converged);
    let enough = res.runs.iter().all(|r| r.row.iterations >= 20);
    let pass = both && enough && f.median_iter_time <= s.median_iter_time && secs <= 300.0;
    let mut v = Verdict::new(
        pass,
        format!(
            "FGD {} iters, err {}, {}s/iter; SVP {} iters, err {}, {}s/iter; {secs:.1}s",
            f.median_iterations,
            sci(f.median_final_rel_err),
            sci(f.median_iter_time),
            s.median_iterations,
            sci(s.median_final_rel_err),
            sci(s.median_iter_time)
        ),
    );
    v.info.push(format!("total time FGD {}s vs SVP {}s", sci(f.median_total_time), sci(s.median_total_time)));
    v
}

fn criterion_13() -> Verdict {
    let start = Instant::now();
    let mut spec = ExperimentSpec::for_kind(Kind::HighRank);
    spec.n = 256;
    spec.r = 64;
    spec.csam = 2.0;
    spec.tol = 1e-7;
    spec.max_iters = 5000;
    spec.seeds = vec![0];
    spec.traces = false;
    let res = run_experiment(&spec).unwrap();
    let secs = start.elapsed().as_secs_f64();
    let (f, s) = (row(&res, SolverKind::Fgd), row(&res, SolverKind::Svp));
    let pass = f.median_final_rel_err <= 1e-3 && f.median_total_time < s.median_total_time;
    Verdict::new(
        pass,
        format!(
            "FGD err {} in {} iters, {}s total; SVP (step 1/M) err {} in {} iters, {}s total; {secs:.1}s",
            sci(f.median_final_rel_err),
            f.median_iterations,
            sci(f.median_total_time),
            sci(s.median_final_rel_err),
            s.median_iterations,
            sci(s.median_total_time)
        ),
    )
}

// ---------------------------------------------------------------------------

fn guarded(f: impl FnOnce() -> Verdict) -> Verdict {
    match catch_unwind(AssertUnwindSafe(f)) {
        Ok(v) => v,
        Err(e) => {
            let msg = e
                .downcast_ref::<String>()
                .cloned()
                .or_else(|| e.downcast_ref::<&str>().map(|s| s.to_string()))
                .unwrap_or_default();
            Verdict::new(false, format!("panicked: {msg}"))
        }
    }
}

fn report(id: usize, name: &str, v: &Verdict) {
    println!("{} {id:>2} {name}: {}", if v.pass { "PASS" } else { "FAIL" }, v.detail);
    for line in &v.info {
        println!("INFO {id:>2} {line}");
    }
}

fn main() {
    let mut verdicts: Vec<(usize, &str, Verdict)> = Vec::new();

    let spec = sensing_spec();
    let start = Instant::now();
    let shared = catch_unwind(AssertUnwindSafe(|| run_experiment(&spec).unwrap()));
    let elapsed = start.elapsed();
    match &shared {
        Ok(res) => {
            verdicts.push((1, "exact recovery at a linear rate", guarded(|| criterion_1(res, elapsed))));
            match catch_unwind(AssertUnwindSafe(|| audits_for(&spec, res))) {
                Ok(rep) => {
                    verdicts.push((2, "contraction factor", guarded(|| criterion_2(&rep))));
                    verdicts.push((3, "sublinear envelope", guarded(|| criterion_3(&rep))));
                }
                Err(_) => {
                    verdicts.push((2, "contraction factor", Verdict::new(false, "audit panicked")));
                    verdicts.push((3, "sublinear envelope", Verdict::new(false, "audit panicked")));
                }
            }
        }
        Err(_) => {
            for (id, name) in
                [(1, "exact recovery at a linear rate"), (2, "contraction factor"), (3, "sublinear envelope")]
            {
                verdicts.push((id, name, Verdict::new(false, "sensing runs panicked")));
            }
        }
    }
    if shared.is_ok() {
        let mut coarse = sensing_spec();
        coarse.tol = fgd_core::solver::DEFAULT_TOL;
        if let Ok(c) = catch_unwind(AssertUnwindSafe(|| run_experiment(&coarse).unwrap())) {
            let errs: Vec<f64> = c.runs.iter().map(|r| r.row.final_rel_err).collect();
            let its: Vec<f64> = c.runs.iter().map(|r| r.row.iterations as f64).collect();
            verdicts[0].2.info.push(format!(
                "with tol {:e}: median final rel err {} after median {} iterations",
                coarse.tol,
                sci(median(&errs)),
                median(&its)
            ));
        }
    }

    verdicts.push((4, "spectral start is exact for the identity quadratic", guarded(criterion_4)));
    verdicts.push((5, "condition-number dependence", guarded(criterion_5)));
    verdicts.push((6, "step-size equivalence", guarded(criterion_6)));
    verdicts.push((7, "factored gradient", guarded(criterion_7)));
    verdicts.push((8, "DIST oracles", guarded(criterion_8)));
    verdicts.push((9, "sandwich and descent margins", guarded(criterion_9)));
    verdicts.push((10, "Hessian diagnostic", guarded(criterion_10)));
    verdicts.push((11, "projected FGD on the unit ball", guarded(criterion_11)));
    verdicts.push((12, "FGD vs SVP per-iteration time", guarded(criterion_12)));
    verdicts.push((13, "high-rank race", guarded(criterion_13)));

    let mut failed = 0;
    for (id, name, v) in &verdicts {
        report(*id, name, v);
        failed += usize::from(!v.pass);
    }
    println!("acceptance: {} passed, {failed} failed", verdicts.len() - failed);
    if failed > 0 && std::env::var("ACCEPTANCE_STRICT").is_ok_and(|v| v == "1") {
        std::process::exit(1);
    }
}
