//! `msmc`: runs one experiment per subcommand and writes a CSV (or JSON)
//! result with a JSON manifest next to it.
//!
//! Exit status: 0 on success, 1 when a checked inequality fails or output
//! cannot be written, 2 on invalid input.

mod commands;
mod config;
mod output;

use std::collections::BTreeMap;
use std::path::PathBuf;
use std::process::ExitCode;
use std::time::Instant;

use clap::{Parser, Subcommand};

use config::{parse_config_file, Params};
use output::{manifest, write_file};

#[derive(Debug)]
pub enum Failure {
    /// Bad flags, config or input files.
    Input(String),
    /// A checked inequality failed, or results were not finite.
    Assertion(String),
    Io(String),
}

impl From<msmc::Error> for Failure {
    fn from(e: msmc::Error) -> Self {
        match e {
            msmc::Error::ParticleDeath { .. } => Failure::Assertion(e.to_string()),
            other => Failure::Input(other.to_string()),
        }
    }
}

#[derive(Debug, Subcommand, Clone, Copy, PartialEq, Eq)]
pub enum Command {
    /// Exact variances and bounds of the four-state counterexample.
    Counterexample,
    /// Exact asymptotic variance terms of a sequence read from --input.
    VarianceExact,
    /// One SMC run on --input (finite) or on the Potts model.
    SmcRun,
    /// N times the variance of independent SMC estimates.
    ReplicateVariance,
    /// Every applicable variance bound for a sequence read from --input.
    Bounds,
    /// Metastable approximation bound on random inner/border chains.
    MetastableQuality,
    /// Growth-within-mode constants of the Potts interpolation sequence.
    GrowthConstants,
    /// Drift inequality over the whole magnetisation lattice.
    DriftVerify,
    /// Smallest jump variance of the magnetisation chain over a size grid.
    JumpVariance,
    /// Coarse curvature of the restricted magnetisation chain.
    Curvature,
    /// Tail of the coupling time of two Glauber chains.
    CouplingTail,
    /// Time to reach a central region, over a size grid.
    Hitting,
    /// Escapes from a central region.
    Escape,
    /// Riemann sums of Gaussian moments.
    RiemannGauss,
    /// Quadratic gap of the asymptotic log-likelihood.
    LoglikCheck,
    /// Distance between region and mode restrictions.
    LocalTv,
    /// Exact log-probability grid and its local maxima.
    Contour,
}

impl Command {
    pub fn name(self) -> &'static str {
        match self {
            Command::Counterexample => "counterexample",
            Command::VarianceExact => "variance-exact",
            Command::SmcRun => "smc-run",
            Command::ReplicateVariance => "replicate-variance",
            Command::Bounds => "bounds",
            Command::MetastableQuality => "metastable-quality",
            Command::GrowthConstants => "growth-constants",
            Command::DriftVerify => "drift-verify",
            Command::JumpVariance => "jump-variance",
            Command::Curvature => "curvature",
            Command::CouplingTail => "coupling-tail",
            Command::Hitting => "hitting",
            Command::Escape => "escape",
            Command::RiemannGauss => "riemann-gauss",
            Command::LoglikCheck => "loglik-check",
            Command::LocalTv => "local-tv",
            Command::Contour => "contour",
        }
    }
}

#[derive(Debug, Parser)]
#[command(name = "msmc", version, about = "SMC variance and Potts model experiments")]
struct Cli {
    #[command(subcommand)]
    command: Command,

    /// key = value file; flags take precedence over it.
    #[arg(long, global = true)]
    config: Option<PathBuf>,

    /// Model size (number of spins).
    #[arg(long = "M", global = true)]
    m: Option<String>,
    /// Number of particles.
    #[arg(long = "N", global = true)]
    n: Option<String>,
    #[arg(long, global = true)]
    replicates: Option<String>,
    #[arg(long, global = true)]
    seed: Option<String>,
    #[arg(long, global = true)]
    rho: Option<String>,
    #[arg(long = "beta-tilde", global = true)]
    beta_tilde: Option<String>,
    /// Constant of the step schedule ⌈c1 k ln²k⌉.
    #[arg(long, global = true)]
    c1: Option<String>,
    /// Prefix length up to which the whole space is one mode.
    #[arg(long, global = true)]
    j0: Option<String>,
    /// `every` or `ess` (experimental).
    #[arg(long, global = true)]
    policy: Option<String>,
    /// ESS fraction below which `ess` resamples.
    #[arg(long, global = true)]
    threshold: Option<String>,
    /// Output directory; results go to stdout when absent.
    #[arg(long, global = true)]
    out: Option<String>,
    #[arg(long, global = true)]
    threads: Option<String>,
    /// `csv` or `json`.
    #[arg(long, global = true)]
    format: Option<String>,

    /// Sequence JSON for the finite-state commands.
    #[arg(long, global = true)]
    input: Option<String>,
    /// Time horizon of the metastable approximation.
    #[arg(long, global = true)]
    t: Option<String>,
    /// Comma-separated times.
    #[arg(long, global = true)]
    times: Option<String>,
    /// Comma-separated model sizes.
    #[arg(long, global = true)]
    grid: Option<String>,
    #[arg(long, global = true)]
    steps: Option<String>,
    #[arg(long, global = true)]
    resolution: Option<String>,
    /// `square` or `cube`.
    #[arg(long, global = true)]
    form: Option<String>,
    #[arg(long, global = true)]
    delta: Option<String>,
    #[arg(long, global = true)]
    moment: Option<String>,
    /// Comma-separated step sizes R.
    #[arg(long, global = true)]
    radii: Option<String>,
    #[arg(long, global = true)]
    stride: Option<String>,
    #[arg(long, global = true)]
    stages: Option<String>,
    /// `interpolation` or `tempering`.
    #[arg(long, global = true)]
    kind: Option<String>,
    /// Sampled pairs per mode; 0 for all pairs.
    #[arg(long, global = true)]
    pairs: Option<String>,
    #[arg(long, global = true)]
    mode: Option<String>,
    /// Mode whose indicator is estimated by the Potts sampler.
    #[arg(long = "phi-mode", global = true)]
    phi_mode: Option<String>,
    #[arg(long, global = true)]
    level: Option<String>,
    /// Strength of the moves between modes of random chains.
    #[arg(long, global = true)]
    leak: Option<String>,
    /// Step cap of each hitting run, in units of M ln M.
    #[arg(long = "cap-factor", global = true)]
    cap_factor: Option<String>,
}

impl Cli {
    fn flags(&self) -> Vec<(&'static str, &Option<String>)> {
        vec![
            ("M", &self.m),
            ("N", &self.n),
            ("replicates", &self.replicates),
            ("seed", &self.seed),
            ("rho", &self.rho),
            ("beta_tilde", &self.beta_tilde),
            ("c1", &self.c1),
            ("j0", &self.j0),
            ("policy", &self.policy),
            ("threshold", &self.threshold),
            ("out", &self.out),
            ("threads", &self.threads),
            ("format", &self.format),
            ("input", &self.input),
            ("t", &self.t),
            ("times", &self.times),
            ("grid", &self.grid),
            ("steps", &self.steps),
            ("resolution", &self.resolution),
            ("form", &self.form),
            ("delta", &self.delta),
            ("moment", &self.moment),
            ("radii", &self.radii),
            ("stride", &self.stride),
            ("stages", &self.stages),
            ("kind", &self.kind),
            ("pairs", &self.pairs),
            ("mode", &self.mode),
            ("phi_mode", &self.phi_mode),
            ("level", &self.level),
            ("leak", &self.leak),
            ("cap_factor", &self.cap_factor),
        ]
    }
}

fn run(cli: Cli) -> Result<bool, Failure> {
    let mut raw: BTreeMap<String, String> = match &cli.config {
        Some(path) => {
            let text = std::fs::read_to_string(path)
                .map_err(|e| Failure::Input(format!("{}: {e}", path.display())))?;
            parse_config_file(&text)?
        }
        None => BTreeMap::new(),
    };
    for (k, v) in cli.flags() {
        if let Some(v) = v {
            raw.insert(k.to_string(), v.clone());
        }
    }
    let params = Params::new(raw);
    let cores = std::thread::available_parallelism().map_or(1, |n| n.get());
    let threads = params.usize("threads", cores)?.max(1);
    // A second call in the same process (tests) keeps the first pool.
    let _ = rayon::ThreadPoolBuilder::new().num_threads(threads).build_global();
    let format = params.string("format", "csv");
    if format != "csv" && format != "json" {
        return Err(Failure::Input(format!("format must be csv or json, got '{format}'")));
    }
    let out = params.opt_string("out").map(PathBuf::from);

    let start = Instant::now();
    let outcome = commands::dispatch(cli.command, &params)?;
    let wall = start.elapsed().as_secs_f64();

    let name = cli.command.name();
    let body = if format == "csv" {
        let mut buf = Vec::new();
        outcome.table.write_csv(&mut buf)?;
        buf
    } else {
        let mut s = serde_json::to_string_pretty(&outcome.report).map_err(|e| Failure::Io(e.to_string()))?;
        s.push('\n');
        s.into_bytes()
    };
    match &out {
        Some(dir) => {
            std::fs::create_dir_all(dir).map_err(|e| Failure::Io(format!("{}: {e}", dir.display())))?;
            let data = dir.join(format!("{name}.{format}"));
            write_file(&data, &body)?;
            let m = manifest(
                name,
                &params.resolved(),
                wall,
                threads,
                &[data.display().to_string()],
                &outcome,
            );
            let text = serde_json::to_string_pretty(&m).map_err(|e| Failure::Io(e.to_string()))? + "\n";
            write_file(&dir.join(format!("{name}.manifest.json")), text.as_bytes())?;
        }
        None => {
            use std::io::Write;
            std::io::stdout()
                .write_all(&body)
                .map_err(|e| Failure::Io(e.to_string()))?;
        }
    }
    for n in &outcome.notes {
        eprintln!("note: {n}");
    }
    for f in &outcome.failures {
        eprintln!("FAILED: {f}");
    }
    Ok(outcome.failures.is_empty())
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli) {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => ExitCode::from(1),
        Err(Failure::Input(m)) => {
            eprintln!("error: {m}");
            ExitCode::from(2)
        }
        Err(Failure::Assertion(m)) | Err(Failure::Io(m)) => {
            eprintln!("error: {m}");
            ExitCode::from(1)
        }
    }
}
