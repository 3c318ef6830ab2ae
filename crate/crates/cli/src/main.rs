//! `enl`: Monte Carlo benchmarking and ENL estimation from the command line.
//!
//! Exit codes: 0 success, 1 usage error, 2 data or domain error,
//! 3 root-solver failure.

use std::fs;
use std::io::{self, Write};
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::Context;
use clap::{Args, Parser, Subcommand, ValueEnum};
use serde::Serialize;

use enl_core::estimators::{estimate_many, EstimateResult, EstimatorId, SolverOptions};
use enl_core::monte_carlo::{
    bias_table, run_experiment, ExperimentConfig, DEFAULT_LOOKS, DEFAULT_REPLICATIONS, DEFAULT_SIZES,
};
use enl_core::polsar_io::{self, CovarianceImage, RegionSpec};
use enl_core::rng::seeded_stream;
use enl_core::wishart::{sigma0, WishartParams, WishartSampler};
use enl_core::{Error, HermitianMatrix};

const EXIT_USAGE: u8 = 1;
const EXIT_DATA: u8 = 2;
const EXIT_SOLVER: u8 = 3;

#[derive(Parser, Debug)]
#[command(name = "enl", version, about = "Equivalent number of looks estimation for complex Wishart data")]
struct Cli {
    /// Print the resolved configuration to stderr
    #[arg(long, global = true)]
    verbose: bool,

    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Run the Monte Carlo benchmark and emit per-cell metrics
    Simulate(SimulateArgs),
    /// Estimate L on a region of a WCOV1 covariance image
    Estimate(EstimateArgs),
    /// Run the Monte Carlo benchmark and emit bias-versus-N curves
    Bias(SimulateArgs),
    /// Write a WCOV1 image of i.i.d. Wishart pixels
    Sample(SampleArgs),
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum, Serialize)]
#[serde(rename_all = "lowercase")]
enum Format {
    Csv,
    Json,
}

#[derive(Args, Debug, Serialize)]
struct SimulateArgs {
    /// Use the reference protocol (Σ₀, L ∈ {4,6,8,12}, N ∈ {9,49,121}, 5500 replications)
    #[arg(long, conflicts_with_all = ["looks", "sizes", "reps", "sigma"])]
    defaults: bool,
    /// Comma-separated list of true L values
    #[arg(long, value_delimiter = ',')]
    looks: Option<Vec<f64>>,
    /// Comma-separated list of sample sizes N
    #[arg(long, value_delimiter = ',')]
    sizes: Option<Vec<usize>>,
    /// Replications per (L, N) cell
    #[arg(long)]
    reps: Option<usize>,
    #[arg(long, default_value_t = 42)]
    seed: u64,
    /// Comma-separated subset of ml,mm1,mm2,iml,bn
    #[arg(long, value_delimiter = ',')]
    estimators: Option<Vec<String>>,
    /// Covariance Σ read from pixel 0 of a WCOV1 file (default: builtin Σ₀)
    #[arg(long)]
    sigma: Option<PathBuf>,
    /// Worker threads (default: all cores)
    #[arg(long, env = "ENL_THREADS")]
    threads: Option<usize>,
    #[arg(long, value_enum, default_value = "csv")]
    format: Format,
    /// Write output to a file instead of stdout
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args, Debug, Serialize)]
struct EstimateArgs {
    /// WCOV1 covariance image
    #[arg(long)]
    input: PathBuf,
    /// Region as x0,y0,w,h (default: whole image)
    #[arg(long)]
    region: Option<String>,
    /// Comma-separated subset of ml,mm1,mm2,iml,bn
    #[arg(long, value_delimiter = ',')]
    estimators: Option<Vec<String>>,
    #[arg(long, value_enum, default_value = "csv")]
    format: Format,
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args, Debug, Serialize)]
struct SampleArgs {
    /// Use the builtin Σ₀
    #[arg(long, conflicts_with = "sigma", required_unless_present = "sigma")]
    builtin_sigma0: bool,
    /// Covariance Σ read from pixel 0 of a WCOV1 file
    #[arg(long)]
    sigma: Option<PathBuf>,
    #[arg(long)]
    looks: f64,
    #[arg(long)]
    width: usize,
    #[arg(long)]
    height: usize,
    #[arg(long, default_value_t = 42)]
    seed: u64,
    /// Destination WCOV1 file
    #[arg(long)]
    out: PathBuf,
}

/// Error carrying the process exit code.
#[derive(Debug)]
struct Failure {
    code: u8,
    error: anyhow::Error,
}

impl Failure {
    fn usage(error: impl Into<anyhow::Error>) -> Self {
        Failure {
            code: EXIT_USAGE,
            error: error.into(),
        }
    }
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        let code = match e {
            Error::SolverFailure { .. } => EXIT_SOLVER,
            Error::Config(_) => EXIT_USAGE,
            _ => EXIT_DATA,
        };
        Failure {
            code,
            error: e.into(),
        }
    }
}

impl From<anyhow::Error> for Failure {
    fn from(error: anyhow::Error) -> Self {
        Failure { code: EXIT_DATA, error }
    }
}

type CliResult<T> = std::result::Result<T, Failure>;

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() {
                ExitCode::from(EXIT_USAGE)
            } else {
                ExitCode::SUCCESS
            };
        }
    };
    let result = match &cli.command {
        Command::Simulate(args) => simulate(args, cli.verbose, false),
        Command::Bias(args) => simulate(args, cli.verbose, true),
        Command::Estimate(args) => estimate(args, cli.verbose),
        Command::Sample(args) => sample(args, cli.verbose),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(f) => {
            eprintln!("error: {:#}", f.error);
            ExitCode::from(f.code)
        }
    }
}

fn parse_estimators(list: &Option<Vec<String>>) -> CliResult<Vec<EstimatorId>> {
    let Some(list) = list else {
        return Ok(EstimatorId::ALL.to_vec());
    };
    let mut ids = Vec::new();
    for s in list {
        let id: EstimatorId = s.parse().map_err(Failure::usage)?;
        if !ids.contains(&id) {
            ids.push(id);
        }
    }
    if ids.is_empty() {
        return Err(Failure::usage(anyhow::anyhow!("no estimators selected")));
    }
    Ok(ids)
}

fn read_sigma(path: &Path) -> CliResult<HermitianMatrix> {
    let img = polsar_io::read_covariance_image(path)?;
    Ok(img.pixels()[0].clone())
}

fn resolve_config(args: &SimulateArgs) -> CliResult<ExperimentConfig> {
    let mut config = ExperimentConfig::reference_defaults(args.seed);
    config.estimators = parse_estimators(&args.estimators)?;
    if !args.defaults {
        config.looks_grid = args.looks.clone().unwrap_or_else(|| DEFAULT_LOOKS.to_vec());
        config.sample_size_grid = args.sizes.clone().unwrap_or_else(|| DEFAULT_SIZES.to_vec());
        config.replications = args.reps.unwrap_or(DEFAULT_REPLICATIONS);
        if let Some(path) = &args.sigma {
            config.sigma = read_sigma(path)?;
        }
    }
    config.validate().map_err(Failure::usage)?;
    Ok(config)
}

fn open_output(out: &Option<PathBuf>) -> CliResult<Box<dyn Write>> {
    Ok(match out {
        Some(path) => Box::new(io::BufWriter::new(
            fs::File::create(path).with_context(|| format!("creating {}", path.display()))?,
        )),
        None => Box::new(io::BufWriter::new(io::stdout().lock())),
    })
}

fn simulate(args: &SimulateArgs, verbose: bool, bias: bool) -> CliResult<()> {
    let config = resolve_config(args)?;
    if verbose {
        eprintln!("{}", serde_json::to_string_pretty(&config).expect("config serializes"));
        eprintln!("threads: {}", args.threads.map_or("all".to_string(), |t| t.to_string()));
    }
    let mut pool = rayon::ThreadPoolBuilder::new();
    if let Some(t) = args.threads {
        if t == 0 {
            return Err(Failure::usage(anyhow::anyhow!("--threads must be positive")));
        }
        pool = pool.num_threads(t);
    }
    let pool = pool.build().context("building thread pool")?;
    let report = pool.install(|| run_experiment(&config))?;

    let mut out = open_output(&args.out)?;
    if bias {
        let table = bias_table(&report);
        match args.format {
            Format::Csv => table.write_csv(&mut out)?,
            Format::Json => serde_json::to_writer_pretty(&mut out, &table).context("writing JSON")?,
        }
    } else {
        match args.format {
            Format::Csv => report.write_csv(&mut out)?,
            Format::Json => report.write_json(&mut out)?,
        }
    }
    if args.format == Format::Json {
        writeln!(out).context("writing output")?;
    }
    out.flush().context("writing output")?;
    Ok(())
}

#[derive(Serialize)]
struct EstimateOutput<'a> {
    input: &'a Path,
    region: RegionSpec,
    sample_size: usize,
    results: Vec<EstimateResult>,
    failures: Vec<EstimateFailure>,
}

#[derive(Serialize)]
struct EstimateFailure {
    estimator: EstimatorId,
    error: String,
}

fn estimate(args: &EstimateArgs, verbose: bool) -> CliResult<()> {
    let ids = parse_estimators(&args.estimators)?;
    let image: CovarianceImage = polsar_io::read_covariance_image(&args.input)
        .with_context(|| format!("reading {}", args.input.display()))?;
    let region = match &args.region {
        Some(r) => r.parse::<RegionSpec>().map_err(Failure::usage)?,
        None => image.full_region(),
    };
    if verbose {
        eprintln!("{}", serde_json::to_string_pretty(args).expect("args serialize"));
        eprintln!("region: {region:?}");
    }
    let sample = polsar_io::extract_region(&image, region)?;
    let opts = SolverOptions::default();

    let mut results = Vec::new();
    let mut failures = Vec::new();
    let mut code = 0u8;
    for (id, r) in estimate_many(&sample, &ids, &opts) {
        match r {
            Ok(r) => results.push(r),
            Err(e) => {
                let f = Failure::from(e);
                eprintln!("error: {id}: {:#}", f.error);
                // Data errors take precedence over solver failures.
                code = match (code, f.code) {
                    (EXIT_DATA, _) | (_, EXIT_DATA) => EXIT_DATA,
                    _ => f.code,
                };
                failures.push(EstimateFailure {
                    estimator: id,
                    error: format!("{:#}", f.error),
                });
            }
        }
    }

    let mut out = open_output(&args.out)?;
    match args.format {
        Format::Csv => {
            writeln!(out, "estimator,value,converged,iterations,bias_applied,residual,N").context("writing output")?;
            for r in &results {
                writeln!(
                    out,
                    "{},{},{},{},{},{},{}",
                    r.estimator,
                    r.value,
                    r.converged,
                    r.iterations,
                    r.bias_applied,
                    r.residual,
                    sample.len()
                )
                .context("writing output")?;
            }
        }
        Format::Json => {
            let doc = EstimateOutput {
                input: &args.input,
                region,
                sample_size: sample.len(),
                results,
                failures,
            };
            serde_json::to_writer_pretty(&mut out, &doc).context("writing JSON")?;
            writeln!(out).context("writing output")?;
        }
    }
    out.flush().context("writing output")?;
    if code != 0 {
        return Err(Failure {
            code,
            error: anyhow::anyhow!("one or more estimators failed"),
        });
    }
    Ok(())
}

fn sample(args: &SampleArgs, verbose: bool) -> CliResult<()> {
    if verbose {
        eprintln!("{}", serde_json::to_string_pretty(args).expect("args serialize"));
    }
    if args.width == 0 || args.height == 0 {
        return Err(Failure::usage(anyhow::anyhow!("--width and --height must be positive")));
    }
    let sigma = match &args.sigma {
        Some(path) => read_sigma(path)?,
        None => sigma0(),
    };
    let m = sigma.dim() as f64;
    if args.looks < m {
        return Err(Error::Domain(format!("--looks {} must be at least m = {m}", args.looks)).into());
    }
    let sampler = WishartSampler::new(WishartParams::new(sigma, args.looks)?)?;
    let pixels = sampler.draw_many(args.width * args.height, &mut seeded_stream(args.seed));
    let image = CovarianceImage::new(args.width, args.height, pixels, Some(args.looks))?;
    polsar_io::write_covariance_image(&image, &args.out)?;
    Ok(())
}
