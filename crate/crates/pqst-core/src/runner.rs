//! Parallel chain execution, sample persistence, and pooled estimators.
//!
//! Chains are embarrassingly parallel: each derives its own generator from
//! `(master_seed, chain_index)` via [`crate::pcn::chain_seed`], owns all of
//! its mutable state, and writes its own files, so the persisted outputs are
//! a function of configuration alone and identical for any `worker_limit`
//! or physical scheduling.
//!
//! ## Sample file format (`chain_NNNN.pqst`)
//!
//! Little-endian binary: magic `PQST`, format version (u32, = 1), Hilbert
//! dimension D (u32), sample count N (u32), chain index (u32), reserved
//! (u32, = 0), then `N * 4D^2` IEEE-754 f64 parameter values, sample-major.
//! A sidecar `chain_NNNN.json` carries the chain seed, beta trace,
//! acceptance fractions, and wall-clock seconds; `manifest.json` records
//! everything needed to reproduce the run.

use std::fs::File;
use std::io::{BufReader, BufWriter, Read, Write};
use std::path::{Path, PathBuf};
use std::time::Instant;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::bures::{rho_from_params, ParamVector};
use crate::error::{Error, Result};
use crate::measurement::Dataset;
use crate::pcn::{chain_seed, run_chain, ChainConfig, ChainOutput};
use crate::posterior::povms_for;
use crate::qmatrix::{ComplexMatrix, DensityMatrix};

pub const SAMPLE_MAGIC: [u8; 4] = *b"PQST";
pub const SAMPLE_FORMAT_VERSION: u32 = 1;
pub const MANIFEST_FILE: &str = "manifest.json";

/// Configuration of a multi-chain run.
#[derive(Clone, Debug)]
pub struct RunConfig {
    /// Number of independent chains R.
    pub chains: u32,
    /// Per-chain configuration; its `seed` field is overwritten with
    /// `master_seed` at dispatch so there is a single source of truth.
    pub chain_cfg: ChainConfig,
    pub master_seed: u64,
    pub output_dir: PathBuf,
    /// Maximum number of chains executing simultaneously.
    pub worker_limit: usize,
    /// Content hash recorded in the manifest; callers ingesting a counts
    /// file should pass the hash of the file bytes. Defaults to the
    /// dataset's canonical content hash.
    pub dataset_sha256: Option<String>,
}

impl RunConfig {
    pub fn new(chains: u32, chain_cfg: ChainConfig, master_seed: u64, output_dir: PathBuf) -> Self {
        Self {
            chains,
            chain_cfg,
            master_seed,
            output_dir,
            worker_limit: std::thread::available_parallelism().map_or(1, |n| n.get()),
            dataset_sha256: None,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.chains == 0 {
            return Err(Error::InvalidConfig("chains must be >= 1".into()));
        }
        if self.worker_limit == 0 {
            return Err(Error::InvalidConfig("worker_limit must be >= 1".into()));
        }
        self.chain_cfg.validate()
    }
}

/// Run manifest: everything needed to reproduce the run bit-exactly on the
/// same platform.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct RunManifest {
    pub format_version: u32,
    pub tool_version: String,
    pub created_unix_ms: u64,
    pub master_seed: u64,
    pub chains: u32,
    pub num_qubits: usize,
    pub dim_hilbert: usize,
    pub chain_config: ChainConfig,
    pub dataset_sha256: String,
}

impl RunManifest {
    pub fn read_from_dir(dir: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(dir.join(MANIFEST_FILE))?;
        Ok(serde_json::from_str(&text)?)
    }

    fn write_to_dir(&self, dir: &Path) -> Result<()> {
        let mut text = serde_json::to_string_pretty(self)?;
        text.push('\n');
        std::fs::write(dir.join(MANIFEST_FILE), text)?;
        Ok(())
    }
}

/// Per-chain sidecar metadata.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct ChainMeta {
    pub chain_index: u32,
    /// The derived per-chain generator seed.
    pub seed: u64,
    pub beta_trace: Vec<f64>,
    pub acceptance_fractions: Vec<f64>,
    pub final_beta: f64,
    pub wall_clock_seconds: f64,
}

pub fn chain_sample_path(dir: &Path, chain_index: u32) -> PathBuf {
    dir.join(format!("chain_{chain_index:04}.pqst"))
}

pub fn chain_meta_path(dir: &Path, chain_index: u32) -> PathBuf {
    dir.join(format!("chain_{chain_index:04}.json"))
}

/// Writes one chain's samples in the PQST binary layout.
pub fn write_chain_samples(path: &Path, output: &ChainOutput) -> Result<()> {
    let first = output
        .samples
        .first()
        .ok_or(Error::EmptyPool)?;
    let dim = first.dim_hilbert();
    let mut w = BufWriter::new(File::create(path)?);
    w.write_all(&SAMPLE_MAGIC)?;
    w.write_all(&SAMPLE_FORMAT_VERSION.to_le_bytes())?;
    w.write_all(&(dim as u32).to_le_bytes())?;
    w.write_all(&(output.samples.len() as u32).to_le_bytes())?;
    w.write_all(&output.chain_index.to_le_bytes())?;
    w.write_all(&0u32.to_le_bytes())?;
    for sample in &output.samples {
        for &v in sample.values() {
            w.write_all(&v.to_le_bytes())?;
        }
    }
    w.flush()?;
    Ok(())
}

/// Header of a PQST sample file.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct SampleFileHeader {
    pub dim_hilbert: usize,
    pub num_samples: usize,
    pub chain_index: u32,
}

fn read_header(r: &mut impl Read, path: &Path) -> Result<SampleFileHeader> {
    let mut magic = [0u8; 4];
    r.read_exact(&mut magic)?;
    if magic != SAMPLE_MAGIC {
        return Err(Error::CorruptSampleFile(format!(
            "{}: bad magic",
            path.display()
        )));
    }
    let mut word = [0u8; 4];
    r.read_exact(&mut word)?;
    let version = u32::from_le_bytes(word);
    if version != SAMPLE_FORMAT_VERSION {
        return Err(Error::CorruptSampleFile(format!(
            "{}: unsupported format version {version}",
            path.display()
        )));
    }
    r.read_exact(&mut word)?;
    let dim_hilbert = u32::from_le_bytes(word) as usize;
    r.read_exact(&mut word)?;
    let num_samples = u32::from_le_bytes(word) as usize;
    r.read_exact(&mut word)?;
    let chain_index = u32::from_le_bytes(word);
    r.read_exact(&mut word)?; // reserved
    if dim_hilbert == 0 || num_samples == 0 {
        return Err(Error::CorruptSampleFile(format!(
            "{}: empty dimensions",
            path.display()
        )));
    }
    Ok(SampleFileHeader {
        dim_hilbert,
        num_samples,
        chain_index,
    })
}

/// Reads back a full PQST sample file.
pub fn read_chain_samples(path: &Path) -> Result<(SampleFileHeader, Vec<ParamVector>)> {
    let mut r = BufReader::new(File::open(path)?);
    let header = read_header(&mut r, path)?;
    let stride = 4 * header.dim_hilbert * header.dim_hilbert;
    let mut samples = Vec::with_capacity(header.num_samples);
    let mut buf = vec![0u8; stride * 8];
    for i in 0..header.num_samples {
        r.read_exact(&mut buf).map_err(|_| {
            Error::CorruptSampleFile(format!(
                "{}: truncated at sample {i} of {}",
                path.display(),
                header.num_samples
            ))
        })?;
        let values: Vec<f64> = buf
            .chunks_exact(8)
            .map(|c| f64::from_le_bytes(c.try_into().expect("8-byte chunk")))
            .collect();
        samples.push(ParamVector::new(header.dim_hilbert, values).map_err(|e| {
            Error::CorruptSampleFile(format!("{}: {e}", path.display()))
        })?);
    }
    Ok((header, samples))
}

/// Handle to a persisted multi-chain run; samples are streamed from disk one
/// chain at a time, so memory stays at one chain buffer plus accumulators.
#[derive(Clone, Debug)]
pub struct PooledSamples {
    dir: PathBuf,
    manifest: RunManifest,
    /// Chain indices present on disk, ascending.
    chain_indices: Vec<u32>,
    /// Chains named in the manifest but missing or unreadable on disk.
    missing_chains: Vec<u32>,
    samples_per_chain: usize,
    dim_hilbert: usize,
}

impl PooledSamples {
    /// Opens a run directory. Missing chains are tolerated and reported via
    /// [`PooledSamples::missing_chains`]; estimation then proceeds over the
    /// surviving subset with correspondingly reduced R.
    pub fn open(dir: &Path) -> Result<Self> {
        let manifest = RunManifest::read_from_dir(dir)?;
        let mut chain_indices = Vec::new();
        let mut missing = Vec::new();
        let mut samples_per_chain = None;
        for r in 0..manifest.chains {
            let path = chain_sample_path(dir, r);
            if !path.is_file() {
                missing.push(r);
                continue;
            }
            let mut reader = BufReader::new(File::open(&path)?);
            let header = read_header(&mut reader, &path)?;
            if header.dim_hilbert != manifest.dim_hilbert || header.chain_index != r {
                return Err(Error::CorruptSampleFile(format!(
                    "{}: header disagrees with manifest",
                    path.display()
                )));
            }
            match samples_per_chain {
                None => samples_per_chain = Some(header.num_samples),
                Some(n) if n != header.num_samples => {
                    return Err(Error::CorruptSampleFile(format!(
                        "{}: {} samples, other chains have {n}",
                        path.display(),
                        header.num_samples
                    )));
                }
                _ => {}
            }
            chain_indices.push(r);
        }
        if chain_indices.is_empty() {
            return Err(Error::EmptyPool);
        }
        Ok(Self {
            dir: dir.to_path_buf(),
            dim_hilbert: manifest.dim_hilbert,
            manifest,
            chain_indices,
            missing_chains: missing,
            samples_per_chain: samples_per_chain.unwrap_or(0),
        })
    }

    #[inline]
    pub fn num_chains(&self) -> usize {
        self.chain_indices.len()
    }

    #[inline]
    pub fn samples_per_chain(&self) -> usize {
        self.samples_per_chain
    }

    #[inline]
    pub fn dim_hilbert(&self) -> usize {
        self.dim_hilbert
    }

    pub fn total_samples(&self) -> usize {
        self.num_chains() * self.samples_per_chain
    }

    pub fn manifest(&self) -> &RunManifest {
        &self.manifest
    }

    pub fn chain_indices(&self) -> &[u32] {
        &self.chain_indices
    }

    pub fn missing_chains(&self) -> &[u32] {
        &self.missing_chains
    }

    pub fn dir(&self) -> &Path {
        &self.dir
    }

    /// Loads the samples of the `pos`-th available chain (ascending chain
    /// index order).
    pub fn load_chain(&self, pos: usize) -> Result<Vec<ParamVector>> {
        let r = self.chain_indices[pos];
        let (_, samples) = read_chain_samples(&chain_sample_path(&self.dir, r))?;
        Ok(samples)
    }

    pub fn load_chain_meta(&self, pos: usize) -> Result<ChainMeta> {
        let r = self.chain_indices[pos];
        let text = std::fs::read_to_string(chain_meta_path(&self.dir, r))?;
        Ok(serde_json::from_str(&text)?)
    }

    /// Pooled Bayesian mean over all chains and samples.
    pub fn pooled_mean(&self) -> Result<DensityMatrix> {
        self.pooled_mean_detail(self.num_chains(), 0)
    }

    /// Pooled mean discarding the first `burn_in` stored samples per chain.
    pub fn pooled_mean_with_burn_in(&self, burn_in: usize) -> Result<DensityMatrix> {
        self.pooled_mean_detail(self.num_chains(), burn_in)
    }

    /// Pooled mean over the first `num_chains` available chains.
    pub fn pooled_mean_prefix(&self, num_chains: usize) -> Result<DensityMatrix> {
        self.pooled_mean_detail(num_chains, 0)
    }

    /// Pooled mean over a chain prefix with per-chain burn-in. Chains are
    /// accumulated in ascending index order with compensated summation, so
    /// the result is independent of scheduling and reproducible.
    pub fn pooled_mean_detail(&self, num_chains: usize, burn_in: usize) -> Result<DensityMatrix> {
        if num_chains == 0 || num_chains > self.num_chains() {
            return Err(Error::InsufficientChains {
                requested: num_chains as u32,
                available: self.num_chains() as u32,
            });
        }
        if burn_in >= self.samples_per_chain {
            return Err(Error::InvalidConfig(format!(
                "burn-in {burn_in} >= samples per chain {}",
                self.samples_per_chain
            )));
        }
        let d = self.dim_hilbert;
        let mut acc = KahanMatrix::new(d);
        let mut count = 0usize;
        for pos in 0..num_chains {
            let samples = self.load_chain(pos)?;
            for x in &samples[burn_in..] {
                acc.add(rho_from_params(x)?.mat());
                count += 1;
            }
        }
        if count == 0 {
            return Err(Error::EmptyPool);
        }
        let mean = acc.into_matrix().scale(1.0 / count as f64);
        DensityMatrix::new(mean)
    }

    /// Pooled mean of a scalar observable `phi(rho)` over all samples.
    pub fn pooled_observable<F>(&self, phi: F) -> Result<f64>
    where
        F: Fn(&DensityMatrix) -> f64,
    {
        self.pooled_observable_with_burn_in(0, phi)
    }

    pub fn pooled_observable_with_burn_in<F>(&self, burn_in: usize, phi: F) -> Result<f64>
    where
        F: Fn(&DensityMatrix) -> f64,
    {
        if burn_in >= self.samples_per_chain {
            return Err(Error::InvalidConfig(format!(
                "burn-in {burn_in} >= samples per chain {}",
                self.samples_per_chain
            )));
        }
        let mut sum = 0.0f64;
        let mut comp = 0.0f64;
        let mut count = 0usize;
        for pos in 0..self.num_chains() {
            let samples = self.load_chain(pos)?;
            for x in &samples[burn_in..] {
                let value = phi(&rho_from_params(x)?);
                let y = value - comp;
                let t = sum + y;
                comp = (t - sum) - y;
                sum = t;
                count += 1;
            }
        }
        if count == 0 {
            return Err(Error::EmptyPool);
        }
        Ok(sum / count as f64)
    }
}

/// Entrywise Kahan-compensated accumulator for complex matrices.
struct KahanMatrix {
    sum: ComplexMatrix,
    comp: ComplexMatrix,
}

impl KahanMatrix {
    fn new(dim: usize) -> Self {
        Self {
            sum: ComplexMatrix::zeros(dim),
            comp: ComplexMatrix::zeros(dim),
        }
    }

    fn add(&mut self, m: &ComplexMatrix) {
        let n = m.dim();
        for i in 0..n {
            for j in 0..n {
                let y = m[(i, j)] - self.comp[(i, j)];
                let t = self.sum[(i, j)] + y;
                self.comp[(i, j)] = (t - self.sum[(i, j)]) - y;
                self.sum[(i, j)] = t;
            }
        }
    }

    fn into_matrix(self) -> ComplexMatrix {
        self.sum
    }
}

/// Runs `cfg.chains` independent chains, persisting every chain before
/// returning a streaming handle over the results.
///
/// Failed chains never corrupt completed ones: every chain that finishes is
/// persisted, and failures are aggregated into
/// [`Error::ChainFailure`]. Survivors can still be estimated by opening the
/// directory with [`PooledSamples::open`].
pub fn run_parallel(data: &Dataset, cfg: &RunConfig) -> Result<PooledSamples> {
    cfg.validate()?;
    std::fs::create_dir_all(&cfg.output_dir)?;

    let mut chain_cfg = cfg.chain_cfg.clone();
    chain_cfg.seed = cfg.master_seed;

    let manifest = RunManifest {
        format_version: 1,
        tool_version: env!("CARGO_PKG_VERSION").to_string(),
        created_unix_ms: std::time::SystemTime::now()
            .duration_since(std::time::UNIX_EPOCH)
            .map_or(0, |d| d.as_millis() as u64),
        master_seed: cfg.master_seed,
        chains: cfg.chains,
        num_qubits: data.num_qubits(),
        dim_hilbert: data.dim(),
        chain_config: chain_cfg.clone(),
        dataset_sha256: cfg
            .dataset_sha256
            .clone()
            .unwrap_or_else(|| data.content_sha256()),
    };
    manifest.write_to_dir(&cfg.output_dir)?;

    let povms = povms_for(data);
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(cfg.worker_limit)
        .build()
        .map_err(|e| Error::InvalidConfig(format!("thread pool: {e}")))?;

    let results: Vec<(u32, std::result::Result<(), String>)> = pool.install(|| {
        (0..cfg.chains)
            .into_par_iter()
            .map(|r| {
                let started = Instant::now();
                let outcome = run_chain(data, &povms, &chain_cfg, r).and_then(|output| {
                    write_chain_samples(&chain_sample_path(&cfg.output_dir, r), &output)?;
                    let meta = ChainMeta {
                        chain_index: r,
                        seed: chain_seed(chain_cfg.seed, r),
                        beta_trace: output.beta_trace,
                        acceptance_fractions: output.acceptance_fractions,
                        final_beta: output.final_beta,
                        wall_clock_seconds: started.elapsed().as_secs_f64(),
                    };
                    let mut text = serde_json::to_string_pretty(&meta)?;
                    text.push('\n');
                    std::fs::write(chain_meta_path(&cfg.output_dir, r), text)?;
                    Ok(())
                });
                (r, outcome.map_err(|e| e.to_string()))
            })
            .collect()
    });

    let failures: Vec<(u32, String)> = results
        .into_iter()
        .filter_map(|(r, res)| res.err().map(|e| (r, e)))
        .collect();
    if !failures.is_empty() {
        return Err(Error::ChainFailure(failures));
    }
    PooledSamples::open(&cfg.output_dir)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::measurement::{all_pauli_settings, simulate_counts};
    use crate::qmatrix::{expectation, DensityMatrix, StateVector};
    use rand::SeedableRng;

    fn toy_dataset(seed: u64) -> Dataset {
        let mut rng = crate::ChainRng::seed_from_u64(seed);
        let mixed = DensityMatrix::maximally_mixed(2);
        simulate_counts(&mixed, &all_pauli_settings(1), 50, &mut rng).unwrap()
    }

    fn small_cfg(dir: &Path, chains: u32, seed: u64) -> RunConfig {
        RunConfig {
            chains,
            chain_cfg: ChainConfig {
                samples_kept: 16,
                thinning: 2,
                adapt_interval: 8,
                seed,
                ..ChainConfig::default()
            },
            master_seed: seed,
            output_dir: dir.to_path_buf(),
            worker_limit: 2,
            dataset_sha256: None,
        }
    }

    #[test]
    fn single_chain_matches_direct_run() {
        let data = toy_dataset(5);
        let tmp = tempfile::tempdir().unwrap();
        let cfg = small_cfg(tmp.path(), 1, 77);
        let pool = run_parallel(&data, &cfg).unwrap();

        let povms = crate::posterior::povms_for(&data);
        let mut chain_cfg = cfg.chain_cfg.clone();
        chain_cfg.seed = cfg.master_seed;
        let direct = run_chain(&data, &povms, &chain_cfg, 0).unwrap();

        let loaded = pool.load_chain(0).unwrap();
        assert_eq!(loaded, direct.samples);
    }

    #[test]
    fn worker_limit_does_not_change_bytes() {
        let data = toy_dataset(6);
        let mut files: Vec<Vec<Vec<u8>>> = Vec::new();
        for workers in [1usize, 2, 4] {
            let tmp = tempfile::tempdir().unwrap();
            let mut cfg = small_cfg(tmp.path(), 4, 123);
            cfg.worker_limit = workers;
            run_parallel(&data, &cfg).unwrap();
            let bytes: Vec<Vec<u8>> = (0..4)
                .map(|r| std::fs::read(chain_sample_path(tmp.path(), r)).unwrap())
                .collect();
            files.push(bytes);
        }
        assert_eq!(files[0], files[1]);
        assert_eq!(files[0], files[2]);
    }

    #[test]
    fn rerunning_one_chain_reproduces_it() {
        let data = toy_dataset(7);
        let tmp = tempfile::tempdir().unwrap();
        let cfg = small_cfg(tmp.path(), 3, 99);
        let pool = run_parallel(&data, &cfg).unwrap();

        let povms = crate::posterior::povms_for(&data);
        let mut chain_cfg = cfg.chain_cfg.clone();
        chain_cfg.seed = cfg.master_seed;
        let redo = run_chain(&data, &povms, &chain_cfg, 2).unwrap();
        assert_eq!(pool.load_chain(2).unwrap(), redo.samples);
    }

    #[test]
    fn pooled_mean_small_pool_matches_bruteforce() {
        let data = toy_dataset(8);
        let tmp = tempfile::tempdir().unwrap();
        let mut cfg = small_cfg(tmp.path(), 2, 11);
        cfg.chain_cfg.samples_kept = 4;
        let pool = run_parallel(&data, &cfg).unwrap();

        // Brute-force oracle: reconstruct every state independently and
        // average in plain order.
        let mut acc = ComplexMatrix::zeros(2);
        let mut n = 0;
        for pos in 0..pool.num_chains() {
            for x in pool.load_chain(pos).unwrap() {
                acc = acc.add(rho_from_params(&x).unwrap().mat());
                n += 1;
            }
        }
        let oracle = acc.scale(1.0 / n as f64);
        let mean = pool.pooled_mean().unwrap();
        assert_eq!(n, 8);
        assert!(mean.mat().max_abs_diff(&oracle) <= 1e-12);
        mean.validate().unwrap();
    }

    #[test]
    fn pooled_observable_trace_and_linearity() {
        let data = toy_dataset(9);
        let tmp = tempfile::tempdir().unwrap();
        let cfg = small_cfg(tmp.path(), 2, 13);
        let pool = run_parallel(&data, &cfg).unwrap();

        let trace_mean = pool
            .pooled_observable(|rho| rho.mat().trace().re)
            .unwrap();
        assert!((trace_mean - 1.0).abs() <= 1e-10);

        let psi = StateVector::basis(2, 0);
        let via_samples = pool
            .pooled_observable(|rho| expectation(rho, &psi).unwrap())
            .unwrap();
        let via_mean = expectation(&pool.pooled_mean().unwrap(), &psi).unwrap();
        assert!((via_samples - via_mean).abs() <= 1e-9);

        // Purity against a per-sample oracle.
        let purity_mean = pool.pooled_observable(|rho| rho.purity()).unwrap();
        let mut acc = 0.0;
        let mut n = 0;
        for pos in 0..pool.num_chains() {
            for x in pool.load_chain(pos).unwrap() {
                let rho = rho_from_params(&x).unwrap();
                let m = rho.mat();
                let sq = m.mul(m);
                acc += sq.trace().re;
                n += 1;
            }
        }
        assert!((purity_mean - acc / n as f64).abs() <= 1e-10);
    }

    #[test]
    fn sample_file_round_trip() {
        let data = toy_dataset(10);
        let povms = crate::posterior::povms_for(&data);
        let cfg = ChainConfig {
            samples_kept: 5,
            thinning: 3,
            adapt_interval: 4,
            seed: 21,
            ..ChainConfig::default()
        };
        let out = run_chain(&data, &povms, &cfg, 9).unwrap();
        let tmp = tempfile::tempdir().unwrap();
        let path = tmp.path().join("chain_0009.pqst");
        write_chain_samples(&path, &out).unwrap();
        let (header, samples) = read_chain_samples(&path).unwrap();
        assert_eq!(header.chain_index, 9);
        assert_eq!(header.dim_hilbert, 2);
        assert_eq!(samples, out.samples);
    }

    #[test]
    fn failed_chain_is_reported_without_corrupting_others() {
        let data = toy_dataset(17);
        let tmp = tempfile::tempdir().unwrap();
        // A directory squatting on chain 0's sample path makes that chain's
        // persistence fail while chain 1 completes normally.
        std::fs::create_dir_all(chain_sample_path(tmp.path(), 0)).unwrap();
        let cfg = small_cfg(tmp.path(), 2, 81);
        let err = run_parallel(&data, &cfg).unwrap_err();
        match err {
            Error::ChainFailure(failures) => {
                assert_eq!(failures.len(), 1);
                assert_eq!(failures[0].0, 0);
            }
            other => panic!("expected ChainFailure, got {other}"),
        }
        std::fs::remove_dir(chain_sample_path(tmp.path(), 0)).unwrap();

        // The surviving chain is intact and usable.
        let pool = PooledSamples::open(tmp.path()).unwrap();
        assert_eq!(pool.num_chains(), 1);
        assert_eq!(pool.missing_chains(), &[0]);
        pool.pooled_mean().unwrap().validate().unwrap();
    }

    #[test]
    fn missing_chain_is_tolerated_and_reported() {
        let data = toy_dataset(12);
        let tmp = tempfile::tempdir().unwrap();
        let cfg = small_cfg(tmp.path(), 3, 31);
        run_parallel(&data, &cfg).unwrap();
        std::fs::remove_file(chain_sample_path(tmp.path(), 1)).unwrap();

        let pool = PooledSamples::open(tmp.path()).unwrap();
        assert_eq!(pool.num_chains(), 2);
        assert_eq!(pool.missing_chains(), &[1]);
        pool.pooled_mean().unwrap().validate().unwrap();
    }

    #[test]
    fn single_sample_pool_is_that_state() {
        let data = toy_dataset(16);
        let tmp = tempfile::tempdir().unwrap();
        let mut cfg = small_cfg(tmp.path(), 1, 71);
        cfg.chain_cfg.samples_kept = 1;
        cfg.chain_cfg.thinning = 1;
        let pool = run_parallel(&data, &cfg).unwrap();
        let mean = pool.pooled_mean().unwrap();
        let only = rho_from_params(&pool.load_chain(0).unwrap()[0]).unwrap();
        assert_eq!(mean.mat().entries(), only.mat().entries());
    }

    #[test]
    fn pooled_mean_is_permutation_invariant() {
        let data = toy_dataset(14);
        let tmp = tempfile::tempdir().unwrap();
        let cfg = small_cfg(tmp.path(), 4, 51);
        let pool = run_parallel(&data, &cfg).unwrap();
        let mean = pool.pooled_mean().unwrap();

        // Plain accumulation in reverse chain order.
        let mut acc = ComplexMatrix::zeros(2);
        let mut n = 0;
        for pos in (0..pool.num_chains()).rev() {
            for x in pool.load_chain(pos).unwrap() {
                acc = acc.add(rho_from_params(&x).unwrap().mat());
                n += 1;
            }
        }
        let reversed = acc.scale(1.0 / n as f64);
        assert!(mean.mat().max_abs_diff(&reversed) <= 1e-12);
    }

    #[test]
    #[ignore = "timing benchmark; run explicitly"]
    fn parallel_speedup_over_serial() {
        let data = toy_dataset(15);
        let chain_cfg = ChainConfig {
            samples_kept: 256,
            thinning: 16,
            seed: 61,
            ..ChainConfig::default()
        };
        let mut elapsed = Vec::new();
        let cores = std::thread::available_parallelism().map_or(1, |n| n.get());
        for workers in [1usize, cores] {
            let tmp = tempfile::tempdir().unwrap();
            let cfg = RunConfig {
                chains: 64,
                chain_cfg: chain_cfg.clone(),
                master_seed: 61,
                output_dir: tmp.path().to_path_buf(),
                worker_limit: workers,
                dataset_sha256: None,
            };
            let t0 = std::time::Instant::now();
            run_parallel(&data, &cfg).unwrap();
            elapsed.push(t0.elapsed().as_secs_f64());
        }
        let speedup = elapsed[0] / elapsed[1];
        println!("speedup with {cores} workers: {speedup:.2}x");
        assert!(speedup >= 0.5 * cores.min(64) as f64, "speedup {speedup:.2}");
    }

    #[test]
    fn burn_in_bounds_checked() {
        let data = toy_dataset(13);
        let tmp = tempfile::tempdir().unwrap();
        let cfg = small_cfg(tmp.path(), 1, 41);
        let pool = run_parallel(&data, &cfg).unwrap();
        assert!(pool.pooled_mean_with_burn_in(16).is_err());
        assert!(pool.pooled_mean_with_burn_in(15).is_ok());
    }
}
