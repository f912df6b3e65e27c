use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};

mod benchmark;
mod commands;
mod output;
mod parse;

/// Thread count for the benchmark harness.
const THREADS_ENV: &str = "DCSBM_THREADS";

const EXIT_USAGE: u8 = 2;
const EXIT_BELOW_TRANSITION: u8 = 3;
const EXIT_NUMERICAL: u8 = 4;

#[derive(Parser, Debug)]
#[command(
    name = "dcsbm",
    version,
    about = "Spectral community detection for dense degree-corrected block models"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Sample a graph and write its edge list, labels and latent model.
    Generate(GenerateArgs),
    /// Cluster the nodes of an edge list.
    Detect(DetectArgs),
    /// Detectability threshold as a function of alpha, and its minimizer.
    AlphaOpt(AlphaOptArgs),
    /// Eigenvalues of the normalized operator with the bulk edge and spikes.
    Spectrum(SpectrumArgs),
    /// Predicted top eigenvalue over bulk edge against the affinity amplitude.
    Phase(PhaseArgs),
    /// Theoretical correct-classification rate for two classes.
    Theory(TheoryArgs),
    /// Overlap sweep over a preset's grid, methods and seeds.
    Benchmark(BenchmarkArgs),
}

/// Model parameters shared by the commands that sample or predict.
#[derive(Args, Debug, Clone)]
struct ModelArgs {
    /// Named preset supplying every model parameter not given explicitly.
    #[arg(long)]
    preset: Option<String>,
    /// Number of nodes.
    #[arg(long)]
    n: Option<usize>,
    /// Number of classes.
    #[arg(long)]
    k: Option<usize>,
    /// Class proportions: `uniform` or a comma list.
    #[arg(long)]
    c: Option<String>,
    /// Affinity: `delta:30`, `contrast:10` or `matrix:12,-4;-4,12`.
    #[arg(long)]
    m: Option<String>,
    /// Weight law: `0.75@0.1,0.25@0.5`, `point:0.5`, `uniform:0.2:0.8` or `powerlaw:3:0.05:0.3`.
    #[arg(long)]
    mu: Option<String>,
}

#[derive(Args, Debug)]
struct GenerateArgs {
    #[command(flatten)]
    model: ModelArgs,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Output prefix; writes `<prefix>.edges`, `<prefix>.labels` and `<prefix>.json`.
    #[arg(long, short)]
    out: PathBuf,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
enum MethodArg {
    LAlpha,
    BetheHessian,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
enum InitArg {
    Random,
    Theory,
    Oracle,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
enum ClustererArg {
    Em,
    Kmeans,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
enum WeightingArg {
    /// Equal class weights in the decision rule and the error average.
    Balanced,
    /// Class proportions as weights.
    Proportional,
}

#[derive(Args, Debug)]
struct DetectArgs {
    /// Edge list, one `u v` pair per line.
    #[arg(long)]
    graph: PathBuf,
    /// Ground-truth `node label` file, used for the overlap and oracle initialization.
    #[arg(long)]
    labels: Option<PathBuf>,
    #[arg(long)]
    k: usize,
    /// Normalization exponent in [0, 1], or `opt`.
    #[arg(long, default_value = "opt")]
    alpha: String,
    #[arg(long, value_enum, default_value_t = MethodArg::LAlpha)]
    method: MethodArg,
    #[arg(long, value_enum, default_value_t = InitArg::Random)]
    init: InitArg,
    /// Class proportions for theory initialization (default uniform).
    #[arg(long)]
    c: Option<String>,
    /// Effective-affinity eigenvectors for theory initialization with K > 2: `v1;v2` with comma-separated entries.
    #[arg(long)]
    vectors: Option<String>,
    #[arg(long, value_enum, default_value_t = ClustererArg::Em)]
    clusterer: ClustererArg,
    /// Cluster the raw eigenvectors instead of the degree-corrected ones.
    #[arg(long)]
    no_regularize: bool,
    /// Relative margin above the bulk edge for an eigenvalue to count as isolated.
    #[arg(long, default_value_t = dcsbm_spectral::cluster::ISOLATION_MARGIN)]
    kappa: f64,
    /// Eigenvalues with |1 + theta| below this are treated as spurious.
    #[arg(long, default_value_t = dcsbm_spectral::rmt::INFORMATIVE_TOL)]
    informative_tol: f64,
    /// Random EM restarts.
    #[arg(long, default_value_t = 10)]
    restarts: usize,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Predicted `node label` file (labels 1..K); stdout if absent.
    #[arg(long, short)]
    out: Option<PathBuf>,
    /// Diagnostics CSV (`field,value`).
    #[arg(long)]
    diagnostics: Option<PathBuf>,
}

#[derive(Args, Debug)]
struct AlphaOptArgs {
    /// Edge list whose estimated weight measure is used.
    #[arg(long, conflicts_with = "mu")]
    graph: Option<PathBuf>,
    /// Weight law instead of a graph.
    #[arg(long)]
    mu: Option<String>,
    /// Grid step over [0, 1].
    #[arg(long, default_value_t = 0.02)]
    step: f64,
    /// CSV output (`alpha,tau,optimal`); stdout if absent.
    #[arg(long, short)]
    out: Option<PathBuf>,
}

#[derive(Args, Debug)]
struct SpectrumArgs {
    #[arg(long)]
    graph: PathBuf,
    /// Normalization exponent in [0, 1], or `opt`.
    #[arg(long, default_value = "opt")]
    alpha: String,
    /// Weight law for the edge and spikes; estimated from the graph if absent.
    #[arg(long)]
    mu: Option<String>,
    /// Affinity for predicted spikes (needs --c).
    #[arg(long, requires = "c")]
    m: Option<String>,
    /// Class proportions for predicted spikes.
    #[arg(long, requires = "m")]
    c: Option<String>,
    /// Number of classes, needed with `--c uniform`.
    #[arg(long)]
    k: Option<usize>,
    #[arg(long, default_value_t = dcsbm_spectral::cluster::ISOLATION_MARGIN)]
    kappa: f64,
    /// CSV output (`kind,value,isolated,informative`); stdout if absent.
    #[arg(long, short)]
    out: Option<PathBuf>,
}

#[derive(Args, Debug)]
struct PhaseArgs {
    #[command(flatten)]
    model: ModelArgs,
    /// Amplitudes `lo:hi:step` or a comma list.
    #[arg(long, default_value = "10:150:2")]
    deltas: String,
    /// Comma list of exponents, `opt` allowed.
    #[arg(long, default_value = "0,0.25,0.5,0.75,1,opt")]
    alphas: String,
    /// CSV output (`delta,alpha,lambda,rho,edge,ratio`); stdout if absent.
    #[arg(long, short)]
    out: Option<PathBuf>,
}

#[derive(Args, Debug)]
struct TheoryArgs {
    #[command(flatten)]
    model: ModelArgs,
    /// Amplitudes `lo:hi:step` or a comma list.
    #[arg(long, default_value = "0.5:20:0.5")]
    deltas: String,
    /// Comma list of exponents, `opt` allowed.
    #[arg(long, default_value = "0,0.25,0.5,0.75,1,opt")]
    alphas: String,
    #[arg(long, value_enum, default_value_t = WeightingArg::Balanced)]
    weighting: WeightingArg,
    /// CSV output (`delta,alpha,correct_rate,nu1,nu2,sigma1,sigma2`); stdout if absent.
    #[arg(long, short)]
    out: Option<PathBuf>,
}

#[derive(Args, Debug)]
struct BenchmarkArgs {
    /// Preset name: fig1 to fig9.
    #[arg(long)]
    preset: String,
    /// Number of seeds per grid point.
    #[arg(long, default_value_t = 5)]
    seeds: u64,
    /// First seed.
    #[arg(long, default_value_t = 1)]
    seed: u64,
    /// Override the preset grid: `lo:hi:step` or a comma list.
    #[arg(long)]
    grid: Option<String>,
    /// Override the number of nodes.
    #[arg(long)]
    n: Option<usize>,
    /// Comma list of method labels to run (default all).
    #[arg(long)]
    methods: Option<String>,
    /// CSV output (`<x>,method,seed,value`, seed `mean` for averages); stdout if absent.
    #[arg(long, short)]
    out: Option<PathBuf>,
}

/// Exit status for a failed command.
fn failure_code(err: &anyhow::Error) -> u8 {
    use dcsbm_spectral::Error as E;
    for cause in err.chain() {
        if let Some(e) = cause.downcast_ref::<E>() {
            return match e {
                E::NotConverged(_)
                | E::BracketFailure(_)
                | E::RootNotBracketed(_)
                | E::DegenerateMoment(_)
                | E::DegenerateDenominator
                | E::DegenerateVariance
                | E::EmDegenerate(_)
                | E::Eigen(_) => EXIT_NUMERICAL,
                E::Io(_) => 1,
                _ => EXIT_USAGE,
            };
        }
        if cause.downcast_ref::<std::io::Error>().is_some()
            || cause.downcast_ref::<csv::Error>().is_some()
        {
            return 1;
        }
    }
    EXIT_USAGE
}

fn run(cli: Cli) -> anyhow::Result<u8> {
    match cli.command {
        Command::Generate(a) => commands::generate(a),
        Command::Detect(a) => commands::detect(a),
        Command::AlphaOpt(a) => commands::alpha_opt(a),
        Command::Spectrum(a) => commands::spectrum(a),
        Command::Phase(a) => commands::phase(a),
        Command::Theory(a) => commands::theory(a),
        Command::Benchmark(a) => benchmark::run(a),
    }
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let cli = Cli::parse();
    if let Some(threads) = std::env::var(THREADS_ENV)
        .ok()
        .and_then(|v| v.parse::<usize>().ok())
    {
        if let Err(e) = rayon::ThreadPoolBuilder::new()
            .num_threads(threads)
            .build_global()
        {
            log::warn!("ignoring {THREADS_ENV}: {e}");
        }
    }
    match run(cli) {
        Ok(code) => ExitCode::from(code),
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(failure_code(&e))
        }
    }
}
