//! `pqst` - parallelized Bayesian quantum state tomography pipeline.
//!
//! Four subcommands connected by files:
//!
//! ```text
//! pqst simulate  counts.json (+ counts.state.json)
//! pqst sample    counts.json -> run directory (PQST binaries + manifest)
//! pqst estimate  run directory -> pooled-mean state JSON + report JSON
//! pqst diagnose  run directory -> ACF / IACT / error-scaling CSVs
//! ```
//!
//! Experimental count files enter at the same `sample` boundary as
//! simulated ones, as long as they follow the counts schema and its bit
//! convention (qubit 0 = most significant bit of the outcome index).
//!
//! Exit codes: 0 success, 2 flag errors (from the parser), 3 I/O failures,
//! 4 invalid input data, 5 runtime failures.

use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use rand::SeedableRng;
use serde::Serialize;
use sha2::{Digest, Sha256};

use pqst_core::bures::sample_bures;
use pqst_core::diagnostics::{
    acf, error_scaling_report, iact, w_state, write_acf_csv, write_iact_csv, write_scaling_csv,
    IactResult,
};
use pqst_core::measurement::{all_pauli_settings, default_shots, simulate_counts, Dataset};
use pqst_core::pcn::ChainConfig;
use pqst_core::qmatrix::{expectation, fidelity, frobenius_sq_distance, DensityMatrix};
use pqst_core::runner::{run_parallel, PooledSamples, RunConfig};
use pqst_core::{ChainRng, Error as CoreError};

const EXIT_IO: u8 = 3;
const EXIT_INVALID_INPUT: u8 = 4;
const EXIT_RUNTIME: u8 = 5;

#[derive(Parser)]
#[command(
    name = "pqst",
    version,
    about = "Bayesian quantum state tomography with pooled parallel pCN chains"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Simulate Pauli measurement counts for a known state.
    Simulate(SimulateArgs),
    /// Run R independent pCN chains against a counts file.
    Sample(SampleArgs),
    /// Pool persisted chains into a Bayesian mean estimate.
    Estimate(EstimateArgs),
    /// Convergence diagnostics over a persisted run.
    Diagnose(DiagnoseArgs),
}

#[derive(Args)]
struct SimulateArgs {
    /// Number of qubits Q (1-10); all 3^Q Pauli settings are measured.
    #[arg(long)]
    qubits: usize,
    /// Shots per setting; defaults to 25 * 2^Q.
    #[arg(long)]
    shots: Option<u64>,
    /// Ground truth: "bures" (random draw), "w" (ideal W state), or a
    /// density-matrix JSON file.
    #[arg(long, default_value = "bures")]
    ground_truth: String,
    /// Generator seed; identical flags give byte-identical outputs.
    #[arg(long)]
    seed: u64,
    /// Counts file to write; the ground-truth state goes to
    /// `<out stem>.state.json` alongside it.
    #[arg(long)]
    out: PathBuf,
}

#[derive(Args)]
struct SampleArgs {
    /// Counts JSON file (simulated or experimental).
    #[arg(long)]
    counts: PathBuf,
    /// Number of independent chains R.
    #[arg(long, value_parser = clap::value_parser!(u32).range(1..))]
    chains: u32,
    /// Stored samples per chain N.
    #[arg(long, default_value_t = 1024, value_parser = clap::value_parser!(u32).range(1..))]
    samples: u32,
    /// Thinning factor T; each chain runs N*T iterations.
    #[arg(long, default_value_t = 1, value_parser = clap::value_parser!(u32).range(1..))]
    thin: u32,
    /// Step-size adaptation window M_A.
    #[arg(long, default_value_t = 500, value_parser = clap::value_parser!(u32).range(1..))]
    adapt_interval: u32,
    /// Initial pCN step size.
    #[arg(long, default_value_t = 0.1)]
    beta0: f64,
    /// Master seed; chain r uses a stream derived from (seed, r).
    #[arg(long)]
    seed: u64,
    /// Max simultaneous chains; defaults to the available cores. The
    /// QST_WORKERS environment variable overrides this flag.
    #[arg(long)]
    workers: Option<usize>,
    /// Run directory to create.
    #[arg(long)]
    out_dir: PathBuf,
}

#[derive(Args)]
struct EstimateArgs {
    /// Run directory produced by `pqst sample`.
    #[arg(long)]
    samples_dir: PathBuf,
    /// Pooled-mean density-matrix JSON to write; the report goes to
    /// `<out stem>.report.json`.
    #[arg(long)]
    out: PathBuf,
    /// Reference state JSON; adds fidelity and squared Frobenius error
    /// against it to the report.
    #[arg(long)]
    reference: Option<PathBuf>,
    /// Report the overlap with the ideal W state of the run's qubit count.
    #[arg(long)]
    target_w: bool,
    /// Discard the first B stored samples of each chain.
    #[arg(long, default_value_t = 0)]
    burn_in: u32,
}

#[derive(Args)]
struct DiagnoseArgs {
    /// Run directory produced by `pqst sample`.
    #[arg(long)]
    samples_dir: PathBuf,
    /// Maximum ACF lag.
    #[arg(long, default_value_t = 200)]
    max_lag: usize,
    /// Directory for the CSV outputs.
    #[arg(long)]
    out_dir: PathBuf,
    /// Reference state JSON for the error-scaling report.
    #[arg(long, requires = "subsets")]
    reference: Option<PathBuf>,
    /// Comma-separated chain-count subsets, e.g. 1,4,16,64.
    #[arg(long, requires = "reference", value_delimiter = ',')]
    subsets: Option<Vec<u32>>,
}

/// Failure carrying the process exit code.
struct CliError {
    exit: u8,
    message: String,
}

impl CliError {
    fn io(message: impl Into<String>) -> Self {
        Self {
            exit: EXIT_IO,
            message: message.into(),
        }
    }

    fn invalid(message: impl Into<String>) -> Self {
        Self {
            exit: EXIT_INVALID_INPUT,
            message: message.into(),
        }
    }

    fn runtime(message: impl Into<String>) -> Self {
        Self {
            exit: EXIT_RUNTIME,
            message: message.into(),
        }
    }
}

impl From<CoreError> for CliError {
    fn from(e: CoreError) -> Self {
        let exit = match &e {
            CoreError::Io(_) => EXIT_IO,
            CoreError::Json(_)
            | CoreError::NotSquare { .. }
            | CoreError::NonFiniteEntries
            | CoreError::NotHermitian(_)
            | CoreError::NotPsd(_)
            | CoreError::InvalidTrace(_)
            | CoreError::NotNormalized(_)
            | CoreError::InvalidDataset(_)
            | CoreError::CorruptSampleFile(_) => EXIT_INVALID_INPUT,
            _ => EXIT_RUNTIME,
        };
        Self {
            exit,
            message: e.to_string(),
        }
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = match cli.command {
        Command::Simulate(args) => cmd_simulate(args),
        Command::Sample(args) => cmd_sample(args),
        Command::Estimate(args) => cmd_estimate(args),
        Command::Diagnose(args) => cmd_diagnose(args),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {}", e.message);
            ExitCode::from(e.exit)
        }
    }
}

/// `<stem>.<suffix>.json` next to `path`.
fn sibling_json(path: &Path, suffix: &str) -> PathBuf {
    path.with_extension(format!("{suffix}.json"))
}

fn write_text(path: &Path, text: &str) -> Result<(), CliError> {
    std::fs::write(path, text)
        .map_err(|e| CliError::io(format!("cannot write {}: {e}", path.display())))
}

fn cmd_simulate(args: SimulateArgs) -> Result<(), CliError> {
    if !(1..=10).contains(&args.qubits) {
        return Err(CliError::invalid("--qubits must be in 1..=10"));
    }
    let dim = 1usize << args.qubits;
    let shots = args.shots.unwrap_or_else(|| default_shots(args.qubits));
    if shots == 0 {
        return Err(CliError::invalid("--shots must be >= 1"));
    }

    // One generator drives the whole command: ground-truth draw first (when
    // random), then the measurement simulation.
    let mut rng = ChainRng::seed_from_u64(args.seed);
    let truth = match args.ground_truth.as_str() {
        "bures" => sample_bures(dim, &mut rng).map_err(CliError::from)?.1,
        "w" => DensityMatrix::pure(&w_state(args.qubits)),
        path => {
            let state = DensityMatrix::read_json_file(Path::new(path)).map_err(|e| match e {
                CoreError::Io(io) => {
                    CliError::io(format!("cannot read state file {path}: {io}"))
                }
                other => CliError::invalid(format!("invalid state file {path}: {other}")),
            })?;
            if state.dim() != dim {
                return Err(CliError::invalid(format!(
                    "state file dimension {} does not match {} qubits",
                    state.dim(),
                    args.qubits
                )));
            }
            state
        }
    };

    let settings = all_pauli_settings(args.qubits);
    let dataset = simulate_counts(&truth, &settings, shots, &mut rng)?;
    write_text(&args.out, &dataset.to_json_string())?;
    let state_path = sibling_json(&args.out, "state");
    truth
        .write_json_file(&state_path)
        .map_err(|e| CliError::io(format!("cannot write {}: {e}", state_path.display())))?;

    println!(
        "simulated {} settings x {} shots ({} counts) -> {}",
        dataset.num_settings(),
        shots,
        dataset.total_counts(),
        args.out.display()
    );
    println!("ground truth -> {}", state_path.display());
    Ok(())
}

fn effective_workers(flag: Option<usize>) -> Result<usize, CliError> {
    if let Ok(text) = std::env::var("QST_WORKERS") {
        return text
            .parse::<usize>()
            .ok()
            .filter(|&w| w >= 1)
            .ok_or_else(|| CliError::invalid(format!("bad QST_WORKERS value '{text}'")));
    }
    Ok(flag.unwrap_or_else(|| {
        std::thread::available_parallelism().map_or(1, |n| n.get())
    }))
}

fn cmd_sample(args: SampleArgs) -> Result<(), CliError> {
    let bytes = std::fs::read(&args.counts)
        .map_err(|e| CliError::io(format!("cannot read {}: {e}", args.counts.display())))?;
    let text = String::from_utf8(bytes.clone())
        .map_err(|_| CliError::invalid("counts file is not UTF-8"))?;
    let dataset = Dataset::from_json_str(&text)
        .map_err(|e| CliError::invalid(format!("invalid counts file: {e}")))?;

    let chain_cfg = ChainConfig {
        samples_kept: args.samples,
        thinning: args.thin,
        adapt_interval: args.adapt_interval,
        beta_init: args.beta0,
        seed: args.seed,
        ..ChainConfig::default()
    };
    let cfg = RunConfig {
        chains: args.chains,
        chain_cfg,
        master_seed: args.seed,
        output_dir: args.out_dir.clone(),
        worker_limit: effective_workers(args.workers)?,
        dataset_sha256: Some(hex::encode(Sha256::digest(&bytes))),
    };
    let pool = run_parallel(&dataset, &cfg)?;
    println!(
        "sampled {} chains x {} samples (thin {}) -> {}",
        pool.num_chains(),
        pool.samples_per_chain(),
        args.thin,
        args.out_dir.display()
    );
    Ok(())
}

#[derive(Serialize)]
struct EstimateReport {
    format_version: u32,
    tool_version: String,
    chains: usize,
    samples_per_chain: usize,
    burn_in: usize,
    samples_used: usize,
    #[serde(skip_serializing_if = "Option::is_none")]
    fidelity_vs_reference: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    frob_err_sq: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    w_overlap: Option<f64>,
}

fn open_pool(dir: &Path) -> Result<PooledSamples, CliError> {
    let pool = PooledSamples::open(dir)?;
    if !pool.missing_chains().is_empty() {
        eprintln!(
            "warning: {} of {} chains missing ({:?}); estimating over the surviving {}",
            pool.missing_chains().len(),
            pool.manifest().chains,
            pool.missing_chains(),
            pool.num_chains()
        );
    }
    Ok(pool)
}

fn cmd_estimate(args: EstimateArgs) -> Result<(), CliError> {
    let pool = open_pool(&args.samples_dir)?;
    let burn_in = args.burn_in as usize;
    let mean = pool.pooled_mean_with_burn_in(burn_in)?;

    let mut report = EstimateReport {
        format_version: 1,
        tool_version: env!("CARGO_PKG_VERSION").to_string(),
        chains: pool.num_chains(),
        samples_per_chain: pool.samples_per_chain(),
        burn_in,
        samples_used: pool.num_chains() * (pool.samples_per_chain() - burn_in),
        fidelity_vs_reference: None,
        frob_err_sq: None,
        w_overlap: None,
    };

    if let Some(ref_path) = &args.reference {
        let reference = DensityMatrix::read_json_file(ref_path).map_err(|e| match e {
            CoreError::Io(io) => CliError::io(format!("cannot read {}: {io}", ref_path.display())),
            other => CliError::invalid(format!("invalid reference: {other}")),
        })?;
        if reference.dim() != mean.dim() {
            return Err(CliError::invalid(format!(
                "reference dimension {} does not match run dimension {}",
                reference.dim(),
                mean.dim()
            )));
        }
        report.fidelity_vs_reference = Some(fidelity(&mean, &reference)?);
        report.frob_err_sq = Some(frobenius_sq_distance(&mean, &reference)?);
    }
    if args.target_w {
        let target = w_state(pool.manifest().num_qubits);
        report.w_overlap = Some(expectation(&mean, &target)?);
    }

    mean.write_json_file(&args.out)
        .map_err(|e| CliError::io(format!("cannot write {}: {e}", args.out.display())))?;
    let report_path = sibling_json(&args.out, "report");
    let mut report_text =
        serde_json::to_string_pretty(&report).map_err(|e| CliError::runtime(e.to_string()))?;
    report_text.push('\n');
    write_text(&report_path, &report_text)?;

    println!("pooled mean -> {}", args.out.display());
    println!("report -> {}", report_path.display());
    if let Some(f) = report.fidelity_vs_reference {
        println!("fidelity vs reference: {f:.6}");
    }
    if let Some(w) = report.w_overlap {
        println!("W-state overlap: {w:.6}");
    }
    Ok(())
}

fn cmd_diagnose(args: DiagnoseArgs) -> Result<(), CliError> {
    let pool = open_pool(&args.samples_dir)?;
    if pool.samples_per_chain() <= args.max_lag + 1 {
        return Err(CliError::invalid(format!(
            "--max-lag {} needs more than {} samples per chain",
            args.max_lag,
            args.max_lag + 1
        )));
    }
    std::fs::create_dir_all(&args.out_dir)
        .map_err(|e| CliError::io(format!("cannot create {}: {e}", args.out_dir.display())))?;

    let mut acf_rows = Vec::with_capacity(pool.num_chains());
    let mut iact_rows: Vec<(u32, IactResult)> = Vec::with_capacity(pool.num_chains());
    for pos in 0..pool.num_chains() {
        let rhos = pqst_core::diagnostics::chain_density_matrices(&pool, pos)?;
        let acf_result = acf(&rhos, args.max_lag)?;
        let iact_result = iact(&acf_result, pool.samples_per_chain(), 1);
        let chain_index = pool.chain_indices()[pos];
        acf_rows.push((chain_index, acf_result));
        iact_rows.push((chain_index, iact_result));
    }
    let acf_path = args.out_dir.join("acf.csv");
    let iact_path = args.out_dir.join("iact.csv");
    write_acf_csv(&acf_path, &acf_rows)?;
    write_iact_csv(&iact_path, &iact_rows)?;
    println!("ACF -> {}", acf_path.display());
    println!("IACT -> {}", iact_path.display());

    let mut taus: Vec<f64> = iact_rows.iter().map(|(_, r)| r.tau).collect();
    taus.sort_by(f64::total_cmp);
    println!("median tau over {} chains: {:.4}", taus.len(), taus[taus.len() / 2]);

    if let (Some(ref_path), Some(subsets)) = (&args.reference, &args.subsets) {
        let reference = DensityMatrix::read_json_file(ref_path).map_err(|e| match e {
            CoreError::Io(io) => CliError::io(format!("cannot read {}: {io}", ref_path.display())),
            other => CliError::invalid(format!("invalid reference: {other}")),
        })?;
        let rows = error_scaling_report(&pool, &reference, subsets, args.max_lag)?;
        let scaling_path = args.out_dir.join("scaling.csv");
        write_scaling_csv(&scaling_path, &rows)?;
        println!("error scaling -> {}", scaling_path.display());
    }
    Ok(())
}
