//! Running experiment specs and writing their outputs.

use std::collections::HashMap;
use std::fmt;
use std::fs::{self, File};
use std::io::{BufWriter, Write};
use std::path::Path;

use rayon::prelude::*;

use fgd_core::audit::{audit_contraction_rate, audit_trajectory, AuditReport};
use fgd_core::baselines::{svp_run, SvpConfig};
use fgd_core::init::{init_pgd_switch, init_random, init_spectral, InitReport};
use fgd_core::linalg::{gram, Factor};
use fgd_core::objectives::Objective;
use fgd_core::solver::{
    run, step_size_fixed, Constraint, IterationTrace, Reference, RunStatus, SolverConfig, StepRule,
};
use fgd_core::{Error, Result};

use crate::instance::{approx_instance, ground_truth, sensing_instance, sub_seed, INIT_STREAM};
use crate::spec::{ExperimentSpec, InitKind, Kind, SolverKind, Spectrum, StepChoice, SvpStep};
use crate::stats::median;

/// Inner tolerance of the PGD switch start.
pub const PGD_INNER_TOL: f64 = 1e-3;

/// Relative slack used when summarizing audits.
pub const AUDIT_SLACK: f64 = 1e-9;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Status {
    Converged,
    Stationary,
    MaxIters,
    Diverged,
}

impl From<RunStatus> for Status {
    fn from(s: RunStatus) -> Self {
        match s {
            RunStatus::Converged => Status::Converged,
            RunStatus::Stationary => Status::Stationary,
            RunStatus::MaxIters => Status::MaxIters,
        }
    }
}

impl fmt::Display for Status {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Status::Converged => "converged",
            Status::Stationary => "stationary",
            Status::MaxIters => "max-iters",
            Status::Diverged => "diverged",
        })
    }
}

/// One solver run on one seeded instance.
#[derive(Debug, Clone, PartialEq)]
pub struct RunRow {
    pub label: String,
    pub solver: SolverKind,
    pub seed: u64,
    pub n: usize,
    pub r: usize,
    /// Number of measurements; 0 for the approximation objective.
    pub m: usize,
    pub init: InitKind,
    pub step: String,
    pub status: Status,
    pub iterations: usize,
    /// First iteration with `DIST(U, U*_r) ≤ target · ‖U*_r‖_F`.
    pub iters_to_target: Option<usize>,
    pub initial_rel_err: f64,
    pub final_rel_err: f64,
    pub final_rel_dist: f64,
    pub eta: f64,
    pub median_iter_time: f64,
    pub total_time: f64,
}

pub const RUNS_HEADER: [&str; 17] = [
    "label",
    "solver",
    "seed",
    "n",
    "r",
    "m",
    "init",
    "step",
    "status",
    "iterations",
    "iters_to_target",
    "initial_rel_err",
    "final_rel_err",
    "final_rel_dist",
    "eta",
    "median_iter_time_s",
    "total_time_s",
];

impl RunRow {
    fn record(&self) -> Vec<String> {
        vec![
            self.label.clone(),
            self.solver.name().into(),
            self.seed.to_string(),
            self.n.to_string(),
            self.r.to_string(),
            self.m.to_string(),
            self.init.name().into(),
            self.step.clone(),
            self.status.to_string(),
            self.iterations.to_string(),
            self.iters_to_target.map(|k| k.to_string()).unwrap_or_default(),
            format!("{:e}", self.initial_rel_err),
            format!("{:e}", self.final_rel_err),
            format!("{:e}", self.final_rel_dist),
            format!("{:e}", self.eta),
            format!("{:e}", self.median_iter_time),
            format!("{:e}", self.total_time),
        ]
    }
}

#[derive(Debug, Clone)]
pub struct RunRecord {
    pub row: RunRow,
    pub trace: IterationTrace,
}

/// Aggregate over the seeds of one `(label, solver)` pair.
#[derive(Debug, Clone, PartialEq)]
pub struct SummaryRow {
    pub label: String,
    pub solver: SolverKind,
    pub runs: usize,
    pub converged: usize,
    pub diverged: usize,
    pub median_final_rel_err: f64,
    pub median_iterations: f64,
    /// Runs that never reach the target count as infinite.
    pub median_iters_to_target: f64,
    pub median_iter_time: f64,
    pub median_total_time: f64,
}

pub const SUMMARY_HEADER: [&str; 10] = [
    "label",
    "solver",
    "runs",
    "converged",
    "diverged",
    "median_final_rel_err",
    "median_iterations",
    "median_iters_to_target",
    "median_iter_time_s",
    "median_total_time_s",
];

impl SummaryRow {
    fn record(&self) -> Vec<String> {
        vec![
            self.label.clone(),
            self.solver.name().into(),
            self.runs.to_string(),
            self.converged.to_string(),
            self.diverged.to_string(),
            format!("{:e}", self.median_final_rel_err),
            format!("{:e}", self.median_iterations),
            format!("{:e}", self.median_iters_to_target),
            format!("{:e}", self.median_iter_time),
            format!("{:e}", self.median_total_time),
        ]
    }
}

/// Groups rows by `(label, solver)` in order of first appearance.
pub fn summarize(rows: &[RunRow]) -> Vec<SummaryRow> {
    let mut keys: Vec<(String, SolverKind)> = Vec::new();
    for r in rows {
        let key = (r.label.clone(), r.solver);
        if !keys.contains(&key) {
            keys.push(key);
        }
    }
    keys.into_iter()
        .map(|(label, solver)| {
            let group: Vec<&RunRow> = rows.iter().filter(|r| r.label == label && r.solver == solver).collect();
            let col = |f: &dyn Fn(&RunRow) -> f64| median(&group.iter().map(|r| f(r)).collect::<Vec<_>>());
            SummaryRow {
                runs: group.len(),
                converged: group.iter().filter(|r| matches!(r.status, Status::Converged | Status::Stationary)).count(),
                diverged: group.iter().filter(|r| r.status == Status::Diverged).count(),
                median_final_rel_err: col(&|r| r.final_rel_err),
                median_iterations: col(&|r| r.iterations as f64),
                median_iters_to_target: col(&|r| r.iters_to_target.map_or(f64::INFINITY, |k| k as f64)),
                median_iter_time: col(&|r| r.median_iter_time),
                median_total_time: col(&|r| r.total_time),
                label,
                solver,
            }
        })
        .collect()
}

/// One configuration of an experiment; every seed runs every variant.
#[derive(Debug, Clone, PartialEq)]
pub struct Variant {
    pub label: String,
    pub spectrum: Spectrum,
    pub csam: f64,
    pub init: InitKind,
    pub step: StepChoice,
    pub solvers: Vec<SolverKind>,
}

pub fn variants(spec: &ExperimentSpec) -> Vec<Variant> {
    let base = Variant {
        label: String::new(),
        spectrum: spec.spectrum.clone(),
        csam: spec.csam,
        init: spec.init,
        step: spec.step,
        solvers: spec.solvers.clone(),
    };
    let m = spec.measurements(spec.csam);
    match spec.kind {
        Kind::Sensing | Kind::QstSurrogate | Kind::HighRank => {
            vec![Variant { label: format!("n={};r={};m={m}", spec.n, spec.r), ..base }]
        }
        Kind::LowrankApprox => {
            vec![Variant { label: format!("n={};r={};spectrum={}", spec.n, spec.r, spec.spectrum), ..base }]
        }
        Kind::CondnumSweep => spec
            .spectra()
            .into_iter()
            .map(|s| Variant { label: format!("r={};spectrum={s}", spec.r), spectrum: s, ..base.clone() })
            .collect(),
        Kind::InitCompare => [InitKind::Spectral, InitKind::PgdSwitch, InitKind::Random]
            .into_iter()
            .map(|init| Variant { label: format!("init={}", init.name()), init, ..base.clone() })
            .collect(),
        Kind::StepsizeSweep => {
            let mut out = Vec::new();
            for &csam in &spec.sweep_csam {
                let steps = std::iter::once(spec.step).chain(spec.sweep_steps.iter().map(|&c| StepChoice::Const(c)));
                for step in steps {
                    out.push(Variant {
                        label: format!("csam={csam};step={step}"),
                        csam,
                        step,
                        solvers: vec![SolverKind::Fgd],
                        ..base.clone()
                    });
                }
            }
            out
        }
    }
}

/// Objective and reference of one seeded variant.
pub struct Instance {
    pub objective: Box<dyn Objective>,
    pub reference: Reference,
    pub m: usize,
}

pub fn build_instance(spec: &ExperimentSpec, variant: &Variant, seed: u64) -> Result<Instance> {
    let reference = ground_truth(spec.n, spec.r, &variant.spectrum, seed, spec.trace_normalize)?;
    match spec.kind {
        Kind::LowrankApprox | Kind::CondnumSweep => {
            Ok(Instance { objective: approx_instance(&reference), reference, m: 0 })
        }
        _ => {
            let m = spec.measurements(variant.csam);
            let loss = sensing_instance(&reference, spec.ensemble, m, seed, spec.smoothness)?;
            Ok(Instance { objective: Box::new(loss), reference, m })
        }
    }
}

/// Starting factor, with the initializer's report for the deterministic starts.
pub fn initial_factor(
    spec: &ExperimentSpec,
    init: InitKind,
    obj: &dyn Objective,
    seed: u64,
) -> Result<(Factor, Option<InitReport>)> {
    let (n, r) = (spec.n, spec.r);
    let report = match init {
        InitKind::Spectral => init_spectral(obj, n, r)?,
        InitKind::PgdSwitch => init_pgd_switch(obj, n, r, PGD_INNER_TOL)?,
        InitKind::Random => return Ok((init_random(n, r, spec.init_scale, sub_seed(seed, INIT_STREAM))?, None)),
    };
    Ok((report.u0.clone(), Some(report)))
}

/// Text form of an initializer report, written as `init_<label>_<seed>.txt`.
#[derive(Debug, Clone, PartialEq)]
pub struct InitRecord {
    pub label: String,
    pub seed: u64,
    pub text: String,
}

fn step_rule(step: StepChoice) -> StepRule {
    match step {
        StepChoice::Fixed => StepRule::Fixed,
        StepChoice::Adaptive => StepRule::Adaptive { refresh: 1 },
        StepChoice::Const(c) => StepRule::Constant(c),
    }
}

fn iters_to_target(trace: &IterationTrace, reference: &Reference, target: f64) -> Option<usize> {
    let scale = reference.u_star_r.frobenius_norm();
    trace.records.iter().find(|r| r.dist.is_some_and(|d| d <= target * scale)).map(|r| r.iter)
}

fn finish_row(row: &mut RunRow, trace: &IterationTrace, reference: &Reference, target: f64) {
    let scale = reference.u_star_r.frobenius_norm();
    if let Some(first) = trace.records.first() {
        row.initial_rel_err = first.rel_err.unwrap_or(f64::NAN);
    }
    if let Some(last) = trace.last() {
        row.final_rel_err = last.rel_err.unwrap_or(f64::NAN);
        row.final_rel_dist = last.dist.map_or(f64::NAN, |d| d / scale);
        row.total_time = last.elapsed_s;
    }
    row.iters_to_target = iters_to_target(trace, reference, target);
    let times = trace.iteration_times();
    row.median_iter_time = if times.is_empty() { 0.0 } else { median(&times) };
}

fn blank_row(spec: &ExperimentSpec, variant: &Variant, solver: SolverKind, seed: u64, m: usize) -> RunRow {
    RunRow {
        label: variant.label.clone(),
        solver,
        seed,
        n: spec.n,
        r: spec.r,
        m,
        init: variant.init,
        step: String::new(),
        status: Status::MaxIters,
        iterations: 0,
        iters_to_target: None,
        initial_rel_err: f64::NAN,
        final_rel_err: f64::NAN,
        final_rel_dist: f64::NAN,
        eta: f64::NAN,
        median_iter_time: 0.0,
        total_time: 0.0,
    }
}

pub fn run_fgd(spec: &ExperimentSpec, variant: &Variant, inst: &Instance, u0: Factor, seed: u64) -> Result<RunRecord> {
    let mut cfg = SolverConfig::new(spec.r);
    cfg.max_iters = spec.max_iters;
    cfg.tol = spec.tol;
    cfg.step_rule = step_rule(variant.step);
    cfg.timing = spec.timing;
    if spec.kind == Kind::QstSurrogate {
        cfg.constraint = Constraint::FrobeniusBall(spec.radius);
    }
    let mut row = blank_row(spec, variant, SolverKind::Fgd, seed, inst.m);
    row.step = variant.step.to_string();
    let trace = match run(inst.objective.as_ref(), u0, &cfg, Some(&inst.reference)) {
        Ok(out) => {
            row.status = out.status.into();
            row.iterations = out.iterations;
            row.eta = out.initial_step.eta;
            out.trace
        }
        Err(Error::Diverged(d)) => {
            row.status = Status::Diverged;
            row.iterations = d.iteration;
            row.eta = d.trace.records.first().map_or(f64::NAN, |r| r.eta);
            d.trace
        }
        Err(e) => return Err(e),
    };
    finish_row(&mut row, &trace, &inst.reference, spec.target);
    Ok(RunRecord { row, trace })
}

pub fn run_svp(spec: &ExperimentSpec, variant: &Variant, inst: &Instance, u0: &Factor, seed: u64) -> Result<RunRecord> {
    let obj = inst.objective.as_ref();
    let x0 = gram(u0);
    let mut cfg = SvpConfig::new(obj, spec.r);
    cfg.step = match spec.svp_step {
        SvpStep::InverseSmoothness => 1.0 / obj.smoothness(),
        SvpStep::Shared => step_size_fixed(obj, &x0)?.eta,
        SvpStep::Const(c) => c,
    };
    cfg.max_iters = spec.max_iters;
    cfg.tol = spec.tol;
    cfg.timing = spec.timing;
    let mut row = blank_row(spec, variant, SolverKind::Svp, seed, inst.m);
    row.step = format!("const:{}", cfg.step);
    row.eta = cfg.step;
    let trace = match svp_run(obj, &x0, &cfg, Some(&inst.reference)) {
        Ok(out) => {
            row.status = out.status.into();
            row.iterations = out.iterations;
            out.trace
        }
        Err(Error::Diverged(d)) => {
            row.status = Status::Diverged;
            row.iterations = d.iteration;
            d.trace
        }
        Err(e) => return Err(e),
    };
    finish_row(&mut row, &trace, &inst.reference, spec.target);
    Ok(RunRecord { row, trace })
}

/// Runs and audits produced by one seed.
struct SeedOutput {
    runs: Vec<RunRecord>,
    inits: Vec<InitRecord>,
    audit: AuditReport,
}

fn run_seed(spec: &ExperimentSpec, seed: u64) -> Result<SeedOutput> {
    let mut instances: HashMap<(String, u64), Instance> = HashMap::new();
    let mut runs = Vec::new();
    let mut inits = Vec::new();
    let mut audit = AuditReport::default();
    for variant in variants(spec) {
        let key = (variant.spectrum.to_string(), variant.csam.to_bits());
        if !instances.contains_key(&key) {
            instances.insert(key.clone(), build_instance(spec, &variant, seed)?);
        }
        let inst = &instances[&key];
        let (u0, report) = initial_factor(spec, variant.init, inst.objective.as_ref(), seed)?;
        if let Some(report) = report {
            let report = report.with_reference(&inst.reference, inst.objective.condition_number())?;
            let mut text = Vec::new();
            report.write(&mut text)?;
            let text = String::from_utf8(text).map_err(|e| Error::Parse(e.to_string()))?;
            inits.push(InitRecord { label: variant.label.clone(), seed, text });
        }
        for &solver in &variant.solvers {
            let rec = match solver {
                SolverKind::Fgd => run_fgd(spec, &variant, inst, u0.clone(), seed)?,
                SolverKind::Svp => run_svp(spec, &variant, inst, &u0, seed)?,
            };
            if spec.audit && solver == SolverKind::Fgd && rec.row.status != Status::Diverged {
                let tag = format!("label={};seed={seed}", variant.label);
                let obj = inst.objective.as_ref();
                audit.extend(audit_contraction_rate(&rec.trace, obj, &inst.reference)?.tagged(&tag));
                if variant.step == StepChoice::Fixed && spec.kind != Kind::QstSurrogate {
                    let steps = rec.row.iterations;
                    let stride = (steps / 50).max(1);
                    audit.extend(audit_trajectory(obj, &u0, &inst.reference, steps, stride)?.tagged(&tag));
                }
            }
            runs.push(rec);
        }
    }
    Ok(SeedOutput { runs, inits, audit })
}

#[derive(Debug, Clone)]
pub struct ExperimentResult {
    pub spec: ExperimentSpec,
    /// Sorted by seed, then in variant order.
    pub runs: Vec<RunRecord>,
    pub inits: Vec<InitRecord>,
    pub summary: Vec<SummaryRow>,
    pub audit: Option<AuditReport>,
}

/// Runs every seed (on `spec.jobs` threads) and aggregates.
pub fn run_experiment(spec: &ExperimentSpec) -> Result<ExperimentResult> {
    spec.validate()?;
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(spec.jobs)
        .build()
        .map_err(|e| Error::InvalidArgument(format!("thread pool: {e}")))?;
    let outputs: Vec<Result<(u64, SeedOutput)>> =
        pool.install(|| spec.seeds.par_iter().map(|&s| run_seed(spec, s).map(|o| (s, o))).collect());
    let mut outputs = outputs.into_iter().collect::<Result<Vec<_>>>()?;
    outputs.sort_by_key(|(s, _)| *s);

    let mut runs = Vec::new();
    let mut inits = Vec::new();
    let mut audit = AuditReport::default();
    for (_, o) in outputs {
        runs.extend(o.runs);
        inits.extend(o.inits);
        audit.extend(o.audit);
    }
    let rows: Vec<RunRow> = runs.iter().map(|r| r.row.clone()).collect();
    Ok(ExperimentResult {
        spec: spec.clone(),
        summary: summarize(&rows),
        runs,
        inits,
        audit: spec.audit.then_some(audit),
    })
}

/// FGD and SVP on identical instances from a shared start.
pub fn compare_solvers(spec: &ExperimentSpec) -> Result<Vec<SummaryRow>> {
    let spec = ExperimentSpec { solvers: vec![SolverKind::Fgd, SolverKind::Svp], ..spec.clone() };
    Ok(run_experiment(&spec)?.summary)
}

fn file_stem(s: &str) -> String {
    s.chars().map(|c| if c.is_ascii_alphanumeric() || c == '.' || c == '-' { c } else { '_' }).collect()
}

fn write_rows(path: &Path, header: &[&str], rows: impl Iterator<Item = Vec<String>>) -> Result<()> {
    let mut wtr = csv::Writer::from_writer(BufWriter::new(File::create(path)?));
    wtr.write_record(header)?;
    for r in rows {
        wtr.write_record(r)?;
    }
    wtr.flush()?;
    Ok(())
}

impl ExperimentResult {
    /// Writes `runs.csv`, `summary.csv`, `summary.txt`, per-run traces under
    /// `traces/` and `init_<label>_<seed>.txt` reports (when traces are
    /// enabled) and `audit.csv` / `audit.txt` (when audited).
    pub fn write(&self, dir: &Path) -> Result<()> {
        fs::create_dir_all(dir)?;
        write_rows(&dir.join("runs.csv"), &RUNS_HEADER, self.runs.iter().map(|r| r.row.record()))?;
        write_rows(&dir.join("summary.csv"), &SUMMARY_HEADER, self.summary.iter().map(SummaryRow::record))?;
        let mut txt = BufWriter::new(File::create(dir.join("summary.txt"))?);
        self.write_summary_text(&mut txt)?;
        txt.flush()?;
        if self.spec.traces {
            let tdir = dir.join("traces");
            fs::create_dir_all(&tdir)?;
            for r in &self.runs {
                let name = format!("{}_{}_seed{}.csv", file_stem(&r.row.label), r.row.solver.name(), r.row.seed);
                r.trace.write_csv(BufWriter::new(File::create(tdir.join(name))?))?;
            }
            for i in &self.inits {
                fs::write(dir.join(format!("init_{}_{}.txt", file_stem(&i.label), i.seed)), &i.text)?;
            }
        }
        if let Some(a) = &self.audit {
            a.write_csv(BufWriter::new(File::create(dir.join("audit.csv"))?))?;
            fs::write(dir.join("audit.txt"), a.summary(AUDIT_SLACK))?;
        }
        Ok(())
    }

    pub fn write_summary_text(&self, w: &mut impl Write) -> Result<()> {
        let s = &self.spec;
        writeln!(w, "# kind {} n {} r {} seeds {}", s.kind, s.n, s.r, s.seeds.len())?;
        writeln!(
            w,
            "# ensemble {} smoothness {} tol {:e} max_iters {}",
            s.ensemble,
            format!("{:?}", s.smoothness).to_lowercase(),
            s.tol,
            s.max_iters
        )?;
        writeln!(w, "# iters_to_target: first iterate with DIST(U, U*_r) <= {:e} |U*_r|_F", s.target)?;
        writeln!(w, "# desk-scale synthetic instances; compare orderings, not absolute values")?;
        for row in &self.summary {
            writeln!(
                w,
                "{} {}: runs {} converged {} diverged {} err {:.3e} iters {} to_target {} iter_time {:.3e}s total {:.3e}s",
                row.label,
                row.solver.name(),
                row.runs,
                row.converged,
                row.diverged,
                row.median_final_rel_err,
                row.median_iterations,
                row.median_iters_to_target,
                row.median_iter_time,
                row.median_total_time
            )?;
        }
        if let Some(a) = &self.audit {
            writeln!(w, "# audit violations: {}", a.violations(AUDIT_SLACK).len())?;
        }
        Ok(())
    }
}
