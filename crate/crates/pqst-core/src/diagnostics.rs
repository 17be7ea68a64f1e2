//! Convergence and accuracy diagnostics: autocorrelation functions,
//! integrated autocorrelation time, effective sample size, error scaling,
//! and target states.
//!
//! The ACF is defined over the density matrices `rho(x)` rather than the
//! parameters `x`, which sidesteps the nonidentifiability of the
//! overparametrized map. The sum upper limit is `N - l_max` for every lag,
//! and the lag-0 value is normalized to exactly 1 with the same limit. The
//! integrated autocorrelation time uses the fixed truncation
//! `tau = 1 + 2 sum_{l=1..l_max} c[l]` - no adaptive windowing - so thinned
//! near-independent chains can legitimately report tau below 1 from
//! negative noise correlations; such values are reported, never clamped.
//! All diagnostics are intrachain: the mean subtracted inside a chain's ACF
//! is that chain's own sample mean, never the pooled one.

use std::fs::File;
use std::io::{BufWriter, Write};
use std::path::Path;

use crate::error::{Error, Result};
use crate::qmatrix::{
    fidelity, frobenius_sq_distance, ComplexMatrix, DensityMatrix, StateVector,
};
use crate::runner::PooledSamples;
use crate::Complex64;

/// Normalized autocorrelation values `c[0..=l_max]` with `c[0] = 1`.
#[derive(Clone, Debug, PartialEq)]
pub struct AcfResult {
    values: Vec<f64>,
    normalization: f64,
}

impl AcfResult {
    #[inline]
    pub fn values(&self) -> &[f64] {
        &self.values
    }

    #[inline]
    pub fn lag_max(&self) -> usize {
        self.values.len() - 1
    }

    /// The unnormalized lag-0 autocovariance used as `C`.
    #[inline]
    pub fn normalization(&self) -> f64 {
        self.normalization
    }
}

/// Integrated autocorrelation time and the effective sample size it implies.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct IactResult {
    pub tau: f64,
    pub n_eff: f64,
}

/// ACF of one chain's density-matrix sequence, trace form.
///
/// `c[l] = (1/C) sum_{n=1}^{N-l_max} Re Tr[(rho_n - mean)^†
/// (rho_{n+l} - mean)]` with `C` the same sum at lag 0 and `mean` the full
/// N-sample chain mean.
pub fn acf(chain_rhos: &[DensityMatrix], l_max: usize) -> Result<AcfResult> {
    let deviations = centered_deviations(chain_rhos, l_max)?;
    let n_terms = chain_rhos.len() - l_max;
    let mut values = Vec::with_capacity(l_max + 1);
    for lag in 0..=l_max {
        let mut acc = 0.0;
        for n in 0..n_terms {
            let (a, b) = (&deviations[n], &deviations[n + lag]);
            let mut dot = 0.0;
            for (za, zb) in a.iter().zip(b) {
                dot += za.re * zb.re + za.im * zb.im;
            }
            acc += dot;
        }
        values.push(acc);
    }
    normalize_acf(values)
}

/// ACF by explicit real/imaginary component sums - the expanded form of the
/// trace expression, kept as an independent route for cross-checking.
pub fn acf_componentwise(chain_rhos: &[DensityMatrix], l_max: usize) -> Result<AcfResult> {
    let n = chain_rhos.len();
    if n <= l_max + 1 {
        return Err(Error::LagTooLarge { l_max, n });
    }
    let dim = chain_rhos[0].dim();
    let mean = chain_mean(chain_rhos);
    let n_terms = n - l_max;
    let mut values = vec![0.0; l_max + 1];
    for i in 0..dim {
        for j in 0..dim {
            let series: Vec<Complex64> = chain_rhos
                .iter()
                .map(|rho| rho.mat()[(i, j)] - mean[(i, j)])
                .collect();
            for (lag, value) in values.iter_mut().enumerate() {
                let mut re_acc = 0.0;
                let mut im_acc = 0.0;
                for t in 0..n_terms {
                    re_acc += series[t].re * series[t + lag].re;
                    im_acc += series[t].im * series[t + lag].im;
                }
                *value += re_acc + im_acc;
            }
        }
    }
    normalize_acf(values)
}

fn centered_deviations(
    chain_rhos: &[DensityMatrix],
    l_max: usize,
) -> Result<Vec<Vec<Complex64>>> {
    let n = chain_rhos.len();
    if n <= l_max + 1 {
        return Err(Error::LagTooLarge { l_max, n });
    }
    let mean = chain_mean(chain_rhos);
    Ok(chain_rhos
        .iter()
        .map(|rho| {
            rho.mat()
                .entries()
                .iter()
                .zip(mean.entries())
                .map(|(a, b)| a - b)
                .collect()
        })
        .collect())
}

fn chain_mean(chain_rhos: &[DensityMatrix]) -> ComplexMatrix {
    let dim = chain_rhos[0].dim();
    let mut acc = ComplexMatrix::zeros(dim);
    for rho in chain_rhos {
        acc = acc.add(rho.mat());
    }
    acc.scale(1.0 / chain_rhos.len() as f64)
}

fn normalize_acf(values: Vec<f64>) -> Result<AcfResult> {
    let c0 = values[0];
    if c0.is_nan() || c0 <= 1e-300 {
        return Err(Error::DegenerateChain);
    }
    let mut normalized: Vec<f64> = values.iter().map(|v| v / c0).collect();
    normalized[0] = 1.0;
    Ok(AcfResult {
        values: normalized,
        normalization: c0,
    })
}

/// Integrated autocorrelation time `tau = 1 + 2 sum_{l=1..l_max} c[l]` and
/// the effective sample size `N R / tau` of a pool with `samples_per_chain`
/// samples in each of `num_chains` chains.
pub fn iact(acf_result: &AcfResult, samples_per_chain: usize, num_chains: usize) -> IactResult {
    let tail: f64 = acf_result.values[1..].iter().sum();
    let tau = 1.0 + 2.0 * tail;
    let n_eff = (samples_per_chain * num_chains) as f64 / tau;
    IactResult { tau, n_eff }
}

/// Squared Frobenius error of an estimate against the best-available
/// reference standing in for the true posterior mean.
pub fn frobenius_error(estimate: &DensityMatrix, reference: &DensityMatrix) -> Result<f64> {
    frobenius_sq_distance(estimate, reference)
}

/// W state on `num_qubits` qubits: uniform amplitude over the basis states
/// with exactly one qubit excited.
pub fn w_state(num_qubits: usize) -> StateVector {
    assert!(num_qubits >= 1, "W state needs at least one qubit");
    let dim = 1usize << num_qubits;
    let amp = Complex64::new(1.0 / (num_qubits as f64).sqrt(), 0.0);
    let mut amplitudes = vec![Complex64::new(0.0, 0.0); dim];
    for qubit in 0..num_qubits {
        // Qubit 0 is the most significant bit.
        amplitudes[1 << (num_qubits - 1 - qubit)] = amp;
    }
    StateVector::new(amplitudes).expect("unit norm by construction")
}

/// One row of the error-scaling report.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct ScalingRow {
    pub chains: u32,
    pub n_eff: f64,
    pub frob_err_sq: f64,
    pub one_minus_fidelity: f64,
}

/// Pooled-error scaling across chain-count subsets.
///
/// For each requested subset size R the pooled mean over the first R
/// available chains is compared against `reference`; the effective sample
/// size uses the median per-chain integrated autocorrelation time over
/// those R chains.
pub fn error_scaling_report(
    pool: &PooledSamples,
    reference: &DensityMatrix,
    subsets: &[u32],
    l_max: usize,
) -> Result<Vec<ScalingRow>> {
    if subsets.is_empty() {
        return Err(Error::InvalidConfig("no subset sizes given".into()));
    }
    let max_subset = *subsets.iter().max().expect("nonempty") as usize;
    if max_subset > pool.num_chains() {
        return Err(Error::InsufficientChains {
            requested: max_subset as u32,
            available: pool.num_chains() as u32,
        });
    }
    if subsets.contains(&0) {
        return Err(Error::InvalidConfig("subset sizes must be >= 1".into()));
    }

    // Per-chain tau for the largest subset, computed once.
    let mut taus = Vec::with_capacity(max_subset);
    for pos in 0..max_subset {
        let rhos = chain_density_matrices(pool, pos)?;
        let acf_result = acf(&rhos, l_max)?;
        taus.push(iact(&acf_result, pool.samples_per_chain(), 1).tau);
    }

    let mut rows = Vec::with_capacity(subsets.len());
    for &r in subsets {
        let mean = pool.pooled_mean_prefix(r as usize)?;
        let frob = frobenius_error(&mean, reference)?;
        let fid = fidelity(&mean, reference)?;
        let tau_median = median(&taus[..r as usize]);
        let n_eff = (pool.samples_per_chain() * r as usize) as f64 / tau_median;
        rows.push(ScalingRow {
            chains: r,
            n_eff,
            frob_err_sq: frob,
            one_minus_fidelity: (1.0 - fid).max(0.0),
        });
    }
    Ok(rows)
}

/// Loads one chain from a pool and maps every sample through the
/// density-matrix parametrization.
pub fn chain_density_matrices(pool: &PooledSamples, pos: usize) -> Result<Vec<DensityMatrix>> {
    pool.load_chain(pos)?
        .iter()
        .map(crate::bures::rho_from_params)
        .collect()
}

fn median(values: &[f64]) -> f64 {
    let mut sorted = values.to_vec();
    sorted.sort_by(f64::total_cmp);
    let mid = sorted.len() / 2;
    if sorted.len() % 2 == 1 {
        sorted[mid]
    } else {
        0.5 * (sorted[mid - 1] + sorted[mid])
    }
}

fn fmt17(x: f64) -> String {
    crate::qmatrix::fmt_f64_17(x)
}

/// Writes per-chain ACF curves as CSV with header `chain,lag,acf`.
pub fn write_acf_csv(path: &Path, per_chain: &[(u32, AcfResult)]) -> Result<()> {
    let mut w = BufWriter::new(File::create(path)?);
    writeln!(w, "chain,lag,acf")?;
    for (chain, acf_result) in per_chain {
        for (lag, value) in acf_result.values().iter().enumerate() {
            writeln!(w, "{chain},{lag},{}", fmt17(*value))?;
        }
    }
    w.flush()?;
    Ok(())
}

/// Writes per-chain IACT rows as CSV with header `chain,tau,n_eff`.
pub fn write_iact_csv(path: &Path, per_chain: &[(u32, IactResult)]) -> Result<()> {
    let mut w = BufWriter::new(File::create(path)?);
    writeln!(w, "chain,tau,n_eff")?;
    for (chain, row) in per_chain {
        writeln!(w, "{chain},{},{}", fmt17(row.tau), fmt17(row.n_eff))?;
    }
    w.flush()?;
    Ok(())
}

/// Writes the error-scaling table as CSV with header
/// `R,n_eff,frob_err_sq,one_minus_fidelity`.
pub fn write_scaling_csv(path: &Path, rows: &[ScalingRow]) -> Result<()> {
    let mut w = BufWriter::new(File::create(path)?);
    writeln!(w, "R,n_eff,frob_err_sq,one_minus_fidelity")?;
    for row in rows {
        writeln!(
            w,
            "{},{},{},{}",
            row.chains,
            fmt17(row.n_eff),
            fmt17(row.frob_err_sq),
            fmt17(row.one_minus_fidelity)
        )?;
    }
    w.flush()?;
    Ok(())
}
