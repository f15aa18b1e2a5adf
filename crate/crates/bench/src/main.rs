use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

use fgd_bench::experiment::run_experiment;
use fgd_bench::spec::{ExperimentSpec, Kind};
use fgd_core::Result;

#[derive(Parser)]
#[command(name = "fgd-bench", about = "Factored gradient descent experiments")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Gaussian matrix sensing
    Sensing(Common),
    /// Low-rank approximation of a fixed spectrum
    Lowrank(Common),
    /// Rank-one sensing with a Frobenius ball constraint
    Qst(Common),
    /// Higher-rank sensing with structured measurements
    Highrank(Common),
    /// Fixed step against constant steps over sampling ratios
    SweepStep(Common),
    /// Low-rank approximation over several spectra
    SweepCond(Common),
    /// Spectral, random and PGD-switch starts
    InitCompare(Common),
    /// FGD and SVP on identical instances
    CompareSvp {
        #[arg(long, default_value = "sensing")]
        kind: Kind,
        #[command(flatten)]
        common: Common,
    },
    /// Run with theory checks on every FGD trajectory
    Audit {
        #[arg(long, default_value = "sensing")]
        kind: Kind,
        #[command(flatten)]
        common: Common,
    },
    /// Run a spec file as written
    Run {
        #[arg(long)]
        spec: PathBuf,
        #[command(flatten)]
        common: Common,
    },
}

#[derive(Args, Clone, Default)]
struct Common {
    /// Base spec file; flags below override it
    #[arg(long = "from")]
    from: Option<PathBuf>,
    #[arg(long)]
    n: Option<usize>,
    #[arg(long)]
    r: Option<usize>,
    #[arg(long)]
    csam: Option<f64>,
    /// `a..b` or a comma list
    #[arg(long)]
    seeds: Option<String>,
    #[arg(long)]
    tol: Option<f64>,
    #[arg(long)]
    max_iters: Option<usize>,
    /// fixed, adaptive or const:<eta>
    #[arg(long)]
    step: Option<String>,
    /// spectral, pgd-switch or random
    #[arg(long)]
    init: Option<String>,
    #[arg(long, env = "FGD_OUT")]
    out: Option<PathBuf>,
    #[arg(long)]
    jobs: Option<usize>,
    /// Drop wall-clock columns so outputs are byte-identical across runs
    #[arg(long)]
    no_timing: bool,
    /// Any other spec key, as key=value
    #[arg(long = "set", value_name = "KEY=VALUE")]
    set: Vec<String>,
}

impl Common {
    fn build(&self, kind: Option<Kind>) -> Result<ExperimentSpec> {
        let mut spec = match &self.from {
            Some(path) => ExperimentSpec::parse(&std::fs::read_to_string(path)?)?,
            None => ExperimentSpec::for_kind(kind.unwrap_or(Kind::Sensing)),
        };
        if let Some(k) = kind {
            spec.kind = k;
        }
        let mut pairs: Vec<(String, String)> = Vec::new();
        let mut put = |k: &str, v: Option<String>| {
            if let Some(v) = v {
                pairs.push((k.into(), v));
            }
        };
        put("n", self.n.map(|v| v.to_string()));
        put("r", self.r.map(|v| v.to_string()));
        put("csam", self.csam.map(|v| v.to_string()));
        put("seeds", self.seeds.clone());
        put("tol", self.tol.map(|v| v.to_string()));
        put("max_iters", self.max_iters.map(|v| v.to_string()));
        put("step", self.step.clone());
        put("init", self.init.clone());
        put("out", self.out.as_ref().map(|p| p.display().to_string()));
        put("jobs", self.jobs.map(|v| v.to_string()));
        if self.no_timing {
            put("timing", Some("false".into()));
        }
        for kv in &self.set {
            let (k, v) = kv
                .split_once('=')
                .ok_or_else(|| fgd_core::Error::Parse(format!("--set expects key=value, got `{kv}`")))?;
            pairs.push((k.into(), v.into()));
        }
        for (k, v) in &pairs {
            spec.set(k, v)?;
        }
        spec.validate()?;
        Ok(spec)
    }
}

fn execute(cli: Cli) -> Result<()> {
    let spec = match cli.command {
        Command::Sensing(c) => c.build(Some(Kind::Sensing))?,
        Command::Lowrank(c) => c.build(Some(Kind::LowrankApprox))?,
        Command::Qst(c) => c.build(Some(Kind::QstSurrogate))?,
        Command::Highrank(c) => c.build(Some(Kind::HighRank))?,
        Command::SweepStep(c) => c.build(Some(Kind::StepsizeSweep))?,
        Command::SweepCond(c) => c.build(Some(Kind::CondnumSweep))?,
        Command::InitCompare(c) => c.build(Some(Kind::InitCompare))?,
        Command::CompareSvp { kind, common } => {
            let mut spec = common.build(Some(kind))?;
            spec.set("solvers", "fgd,svp")?;
            spec
        }
        Command::Audit { kind, common } => {
            let mut spec = common.build(Some(kind))?;
            spec.audit = true;
            spec
        }
        Command::Run { spec, common } => Common { from: Some(spec), ..common }.build(None)?,
    };
    let result = run_experiment(&spec)?;
    result.write(&spec.out)?;
    let mut stdout = std::io::stdout().lock();
    result.write_summary_text(&mut stdout)?;
    eprintln!("wrote {}", spec.out.display());
    Ok(())
}

fn main() -> ExitCode {
    match execute(Cli::parse()) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(2)
        }
    }
}
