//! Declarative experiment files.
//!
//! One `key = value` pair per line; `#` starts a comment. Lists are comma
//! separated, seed lists may also be a half-open range `a..b`, and the
//! `spectra` key holds several spectra separated by `;`. Unknown keys are
//! rejected. Every key has a default, so an empty file describes a small
//! Gaussian sensing run.
//!
//! ```text
//! kind = condnum-sweep
//! n = 50
//! r = 3
//! spectra = 100,100,1; 100,100,10; 100,100,20
//! init = random
//! seeds = 0..5
//! ```

use std::fmt;
use std::path::PathBuf;
use std::str::FromStr;

use fgd_core::objectives::Ensemble;
use fgd_core::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Kind {
    Sensing,
    LowrankApprox,
    QstSurrogate,
    HighRank,
    StepsizeSweep,
    InitCompare,
    CondnumSweep,
}

impl Kind {
    pub const ALL: [Kind; 7] = [
        Kind::Sensing,
        Kind::LowrankApprox,
        Kind::QstSurrogate,
        Kind::HighRank,
        Kind::StepsizeSweep,
        Kind::InitCompare,
        Kind::CondnumSweep,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Kind::Sensing => "sensing",
            Kind::LowrankApprox => "lowrank-approx",
            Kind::QstSurrogate => "qst-surrogate",
            Kind::HighRank => "high-rank",
            Kind::StepsizeSweep => "stepsize-sweep",
            Kind::InitCompare => "init-compare",
            Kind::CondnumSweep => "condnum-sweep",
        }
    }
}

impl fmt::Display for Kind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Kind {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        Kind::ALL
            .into_iter()
            .find(|k| k.name() == s)
            .ok_or_else(|| Error::Parse(format!("unknown experiment kind `{s}`")))
    }
}

/// Eigenvalues of the ground truth.
#[derive(Debug, Clone, PartialEq)]
pub enum Spectrum {
    /// `X* = U*U*ᵀ` with i.i.d. standard normal `U*` of width `r`.
    Gaussian,
    /// `r` unit eigenvalues.
    Flat,
    /// Explicit non-negative descending values.
    Values(Vec<f64>),
}

impl fmt::Display for Spectrum {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Spectrum::Gaussian => f.write_str("gaussian"),
            Spectrum::Flat => f.write_str("flat"),
            Spectrum::Values(v) => {
                let parts: Vec<String> = v.iter().map(|x| x.to_string()).collect();
                f.write_str(&parts.join(","))
            }
        }
    }
}

impl FromStr for Spectrum {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s.trim() {
            "gaussian" => Ok(Spectrum::Gaussian),
            "flat" => Ok(Spectrum::Flat),
            other => {
                let v = parse_list::<f64>(other, "spectrum")?;
                if v.is_empty() || v.iter().any(|x| !(x.is_finite() && *x >= 0.0)) {
                    return Err(Error::Parse(format!("spectrum `{other}` needs non-negative values")));
                }
                if v.windows(2).any(|w| w[0] < w[1]) {
                    return Err(Error::Parse(format!("spectrum `{other}` is not descending")));
                }
                Ok(Spectrum::Values(v))
            }
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SolverKind {
    Fgd,
    Svp,
}

impl SolverKind {
    pub fn name(self) -> &'static str {
        match self {
            SolverKind::Fgd => "fgd",
            SolverKind::Svp => "svp",
        }
    }
}

impl FromStr for SolverKind {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "fgd" => Ok(SolverKind::Fgd),
            "svp" => Ok(SolverKind::Svp),
            _ => Err(Error::Parse(format!("unknown solver `{s}`"))),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum InitKind {
    Spectral,
    PgdSwitch,
    Random,
}

impl InitKind {
    pub fn name(self) -> &'static str {
        match self {
            InitKind::Spectral => "spectral",
            InitKind::PgdSwitch => "pgd-switch",
            InitKind::Random => "random",
        }
    }
}

impl FromStr for InitKind {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "spectral" => Ok(InitKind::Spectral),
            "pgd-switch" => Ok(InitKind::PgdSwitch),
            "random" => Ok(InitKind::Random),
            _ => Err(Error::Parse(format!("unknown init `{s}`"))),
        }
    }
}

/// FGD step rule as written on the command line.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum StepChoice {
    Fixed,
    Adaptive,
    Const(f64),
}

impl fmt::Display for StepChoice {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            StepChoice::Fixed => f.write_str("fixed"),
            StepChoice::Adaptive => f.write_str("adaptive"),
            StepChoice::Const(v) => write!(f, "const:{v}"),
        }
    }
}

impl FromStr for StepChoice {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "fixed" => Ok(StepChoice::Fixed),
            "adaptive" => Ok(StepChoice::Adaptive),
            _ => {
                let v = s
                    .strip_prefix("const:")
                    .and_then(|v| v.parse::<f64>().ok())
                    .filter(|v| *v > 0.0 && v.is_finite())
                    .ok_or_else(|| Error::Parse(format!("step `{s}`: expected fixed, adaptive or const:<v>")))?;
                Ok(StepChoice::Const(v))
            }
        }
    }
}

/// Step of the SVP baseline.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum SvpStep {
    /// `1/M`.
    InverseSmoothness,
    /// The FGD run's initial step on the same instance.
    Shared,
    Const(f64),
}

impl FromStr for SvpStep {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "inverse-m" => Ok(SvpStep::InverseSmoothness),
            "shared" => Ok(SvpStep::Shared),
            _ => s
                .parse::<f64>()
                .ok()
                .filter(|v| *v > 0.0 && v.is_finite())
                .map(SvpStep::Const)
                .ok_or_else(|| Error::Parse(format!("svp_step `{s}`: expected inverse-m, shared or a value"))),
        }
    }
}

/// How `M` and `m` of sensing losses are estimated.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Smoothness {
    Sampled,
    Restricted,
    Full,
}

impl FromStr for Smoothness {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "sampled" => Ok(Smoothness::Sampled),
            "restricted" => Ok(Smoothness::Restricted),
            "full" => Ok(Smoothness::Full),
            _ => Err(Error::Parse(format!("unknown smoothness estimate `{s}`"))),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ExperimentSpec {
    pub kind: Kind,
    pub n: usize,
    pub r: usize,
    /// Measurements are `ceil(csam · n · r)`.
    pub csam: f64,
    pub spectrum: Spectrum,
    /// Spectra of a condition-number sweep; empty means `[spectrum]`.
    pub spectra: Vec<Spectrum>,
    pub seeds: Vec<u64>,
    pub solvers: Vec<SolverKind>,
    pub init: InitKind,
    /// Scale of the random start, `U⁰ ~ N(0, scale²/n)`.
    pub init_scale: f64,
    pub step: StepChoice,
    pub svp_step: SvpStep,
    pub tol: f64,
    pub max_iters: usize,
    pub ensemble: Ensemble,
    pub smoothness: Smoothness,
    pub trace_normalize: bool,
    /// Frobenius radius of the projected variant (qst-surrogate).
    pub radius: f64,
    /// Relative error defining iterations-to-target.
    pub target: f64,
    pub sweep_csam: Vec<f64>,
    pub sweep_steps: Vec<f64>,
    pub timing: bool,
    /// Write one trace CSV per run.
    pub traces: bool,
    pub audit: bool,
    pub out: PathBuf,
    pub jobs: usize,
}

impl Default for ExperimentSpec {
    fn default() -> Self {
        ExperimentSpec {
            kind: Kind::Sensing,
            n: 32,
            r: 2,
            csam: 6.0,
            spectrum: Spectrum::Gaussian,
            spectra: Vec::new(),
            seeds: vec![0],
            solvers: vec![SolverKind::Fgd],
            init: InitKind::Spectral,
            init_scale: 1.0,
            step: StepChoice::Fixed,
            svp_step: SvpStep::InverseSmoothness,
            tol: fgd_core::solver::DEFAULT_TOL,
            max_iters: 1000,
            ensemble: Ensemble::Gaussian,
            smoothness: Smoothness::Sampled,
            trace_normalize: false,
            radius: 1.0,
            target: 1e-3,
            sweep_csam: vec![4.0, 6.0, 10.0],
            sweep_steps: vec![1e-4, 1e-3, 1e-2, 3e-2, 1e-1],
            timing: true,
            traces: true,
            audit: false,
            out: PathBuf::from("fgd-out"),
            jobs: 1,
        }
    }
}

fn parse_list<T: FromStr>(s: &str, key: &str) -> Result<Vec<T>> {
    s.split(',')
        .map(str::trim)
        .filter(|p| !p.is_empty())
        .map(|p| p.parse::<T>().map_err(|_| Error::Parse(format!("{key}: cannot parse `{p}`"))))
        .collect()
}

/// `a..b` or a comma list.
pub fn parse_seeds(s: &str) -> Result<Vec<u64>> {
    if let Some((a, b)) = s.split_once("..") {
        let a: u64 = a.trim().parse().map_err(|_| Error::Parse(format!("seeds: bad start `{a}`")))?;
        let b: u64 = b.trim().parse().map_err(|_| Error::Parse(format!("seeds: bad end `{b}`")))?;
        return Ok((a..b).collect());
    }
    parse_list(s, "seeds")
}

fn parse_bool(s: &str, key: &str) -> Result<bool> {
    match s {
        "true" | "yes" | "1" => Ok(true),
        "false" | "no" | "0" => Ok(false),
        _ => Err(Error::Parse(format!("{key}: expected true or false, got `{s}`"))),
    }
}

fn parse_num<T: FromStr>(s: &str, key: &str) -> Result<T> {
    s.parse().map_err(|_| Error::Parse(format!("{key}: cannot parse `{s}`")))
}

impl ExperimentSpec {
    /// Defaults for `kind` before any file or flag is applied.
    pub fn for_kind(kind: Kind) -> Self {
        let base = ExperimentSpec { kind, ..Default::default() };
        match kind {
            Kind::LowrankApprox => ExperimentSpec {
                n: 50,
                r: 3,
                spectrum: Spectrum::Values(vec![100.0, 100.0, 20.0]),
                init: InitKind::Random,
                ..base
            },
            Kind::CondnumSweep => ExperimentSpec {
                n: 50,
                r: 3,
                spectrum: Spectrum::Values(vec![100.0, 100.0, 20.0]),
                spectra: [1.0, 10.0, 20.0].map(|s| Spectrum::Values(vec![100.0, 100.0, s])).to_vec(),
                init: InitKind::Random,
                tol: 1e-9,
                max_iters: 200_000,
                ..base
            },
            Kind::QstSurrogate => {
                ExperimentSpec { n: 64, r: 1, csam: 3.0, ensemble: Ensemble::Rademacher, trace_normalize: true, ..base }
            }
            Kind::HighRank => ExperimentSpec {
                n: 64,
                r: 16,
                csam: 2.0,
                trace_normalize: true,
                ensemble: Ensemble::Hadamard,
                solvers: vec![SolverKind::Fgd, SolverKind::Svp],
                ..base
            },
            _ => base,
        }
    }

    /// Applies one `key = value` assignment.
    pub fn set(&mut self, key: &str, value: &str) -> Result<()> {
        let v = value.trim();
        match key.trim() {
            "kind" => self.kind = v.parse()?,
            "n" => self.n = parse_num(v, "n")?,
            "r" => self.r = parse_num(v, "r")?,
            "csam" => self.csam = parse_num(v, "csam")?,
            "spectrum" => self.spectrum = v.parse()?,
            "spectra" => {
                self.spectra = v.split(';').filter(|p| !p.trim().is_empty()).map(str::parse).collect::<Result<_>>()?
            }
            "seeds" => self.seeds = parse_seeds(v)?,
            "solvers" => self.solvers = parse_list(v, "solvers")?,
            "init" => self.init = v.parse()?,
            "init_scale" => self.init_scale = parse_num(v, "init_scale")?,
            "step" => self.step = v.parse()?,
            "svp_step" => self.svp_step = v.parse()?,
            "tol" => self.tol = parse_num(v, "tol")?,
            "max_iters" => self.max_iters = parse_num(v, "max_iters")?,
            "ensemble" => self.ensemble = v.parse()?,
            "smoothness" => self.smoothness = v.parse()?,
            "trace_normalize" => self.trace_normalize = parse_bool(v, "trace_normalize")?,
            "radius" => self.radius = parse_num(v, "radius")?,
            "target" => self.target = parse_num(v, "target")?,
            "sweep_csam" => self.sweep_csam = parse_list(v, "sweep_csam")?,
            "sweep_steps" => self.sweep_steps = parse_list(v, "sweep_steps")?,
            "timing" => self.timing = parse_bool(v, "timing")?,
            "traces" => self.traces = parse_bool(v, "traces")?,
            "audit" => self.audit = parse_bool(v, "audit")?,
            "out" => self.out = PathBuf::from(v),
            "jobs" => self.jobs = parse_num(v, "jobs")?,
            other => return Err(Error::Parse(format!("unknown key `{other}`"))),
        }
        Ok(())
    }

    /// Parses a spec file on top of the defaults of its `kind` line (or of
    /// `sensing` when there is none).
    pub fn parse(text: &str) -> Result<Self> {
        let mut pairs = Vec::new();
        for (lineno, line) in text.lines().enumerate() {
            let line = line.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let (k, v) = line
                .split_once('=')
                .ok_or_else(|| Error::Parse(format!("line {}: expected key = value", lineno + 1)))?;
            pairs.push((k.trim().to_string(), v.trim().to_string()));
        }
        let kind = match pairs.iter().find(|(k, _)| k == "kind") {
            Some((_, v)) => v.parse()?,
            None => Kind::Sensing,
        };
        let mut spec = ExperimentSpec::for_kind(kind);
        for (k, v) in &pairs {
            spec.set(k, v)?;
        }
        spec.validate()?;
        Ok(spec)
    }

    pub fn measurements(&self, csam: f64) -> usize {
        (csam * (self.n * self.r) as f64).ceil() as usize
    }

    /// The spectra the experiment iterates over.
    pub fn spectra(&self) -> Vec<Spectrum> {
        if self.spectra.is_empty() {
            vec![self.spectrum.clone()]
        } else {
            self.spectra.clone()
        }
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |msg: String| Err(Error::InvalidArgument(msg));
        if self.n == 0 || self.r == 0 || self.r > self.n {
            return bad(format!("need 1 <= r <= n, got n={} r={}", self.n, self.r));
        }
        if !(self.csam > 0.0) || self.sweep_csam.iter().any(|c| !(*c > 0.0)) {
            return bad("csam values must be positive".into());
        }
        if !(self.tol > 0.0) || !(self.target > 0.0) || !(self.radius > 0.0) || !(self.init_scale >= 0.0) {
            return bad("tol, target and radius must be positive, init_scale non-negative".into());
        }
        if self.seeds.is_empty() || self.solvers.is_empty() || self.jobs == 0 {
            return bad("need at least one seed, one solver and one job".into());
        }
        if self.sweep_steps.iter().any(|s| !(*s > 0.0 && s.is_finite())) {
            return bad("sweep steps must be positive".into());
        }
        for s in self.spectra() {
            if let Spectrum::Values(v) = &s {
                if v.len() < self.r || v.len() > self.n {
                    return bad(format!("spectrum of length {} needs r <= len <= n", v.len()));
                }
            }
        }
        Ok(())
    }
}
