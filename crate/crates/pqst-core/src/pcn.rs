//! One adaptive preconditioned Crank–Nicolson Metropolis–Hastings
//! chain.
//!
//! The proposal `y' = sqrt(1 - beta^2) y + beta eta` with standard-normal
//! `eta` is reversible with respect to the standard-normal prior, so the
//! acceptance ratio reduces to the likelihood ratio alone. The step size
//! `beta` is adapted every `adapt_interval` iterations to keep the window
//! acceptance fraction inside `[accept_low, accept_high]`; adaptation never
//! freezes, and the full `beta` trace is kept so runs can be audited for
//! diminishing adaptation. (Perpetual adaptation technically perturbs
//! stationarity; in practice `beta` changes stop once the band is reached,
//! and the trace makes that auditable.) Every `thinning`-th state is
//! stored.
//!
//! Draw order per chain is fixed and documented for reproducibility: the
//! initial state (one standard-normal vector), then per iteration one
//! standard-normal vector for `eta` followed by one uniform for the
//! acceptance test.

use rand::{Rng, SeedableRng};
use serde::{Deserialize, Serialize};

use crate::bures::{sample_prior_vector, ParamVector};
use crate::error::{Error, Result};
use crate::measurement::{Dataset, Povm};
use crate::posterior::{log_likelihood, LogLikelihood};
use crate::ChainRng;

/// Configuration of a single chain.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ChainConfig {
    /// Number of stored samples N.
    pub samples_kept: u32,
    /// Thinning factor T; the chain runs N*T iterations.
    pub thinning: u32,
    /// Adaptation window length M_A.
    pub adapt_interval: u32,
    /// Initial step size in (0, 1].
    pub beta_init: f64,
    /// Multiplicative step-size adjustment per out-of-band window.
    pub beta_scale: f64,
    /// Lower edge of the target acceptance band.
    pub accept_low: f64,
    /// Upper edge of the target acceptance band.
    pub accept_high: f64,
    /// Master seed; each chain derives its own stream via [`chain_seed`].
    pub seed: u64,
}

impl Default for ChainConfig {
    fn default() -> Self {
        Self {
            samples_kept: 1024,
            thinning: 1,
            adapt_interval: 500,
            beta_init: 0.1,
            beta_scale: 1.1,
            accept_low: 0.2,
            accept_high: 0.6,
            seed: 0,
        }
    }
}

impl ChainConfig {
    pub fn validate(&self) -> Result<()> {
        if self.samples_kept == 0 || self.thinning == 0 {
            return Err(Error::InvalidConfig(
                "samples_kept and thinning must be >= 1".into(),
            ));
        }
        if self.adapt_interval == 0 {
            return Err(Error::InvalidConfig("adapt_interval must be >= 1".into()));
        }
        if self.beta_init.is_nan() || self.beta_init <= 0.0 || self.beta_init > 1.0 {
            return Err(Error::InvalidConfig("beta_init must be in (0, 1]".into()));
        }
        if self.beta_scale.is_nan() || self.beta_scale <= 1.0 {
            return Err(Error::InvalidConfig("beta_scale must be > 1".into()));
        }
        if self.accept_low.is_nan()
            || self.accept_high.is_nan()
            || self.accept_low >= self.accept_high
            || self.accept_low < 0.0
            || self.accept_high > 1.0
        {
            return Err(Error::InvalidConfig(
                "need 0 <= accept_low < accept_high <= 1".into(),
            ));
        }
        Ok(())
    }

    /// Total iteration count N*T.
    pub fn total_iterations(&self) -> u64 {
        self.samples_kept as u64 * self.thinning as u64
    }
}

/// Everything a finished chain hands back.
#[derive(Clone, Debug, PartialEq)]
pub struct ChainOutput {
    pub chain_index: u32,
    /// The N stored (thinned) parameter vectors, in order.
    pub samples: Vec<ParamVector>,
    /// Step size after each adaptation window.
    pub beta_trace: Vec<f64>,
    /// Window acceptance fraction A/M_A per adaptation window.
    pub acceptance_fractions: Vec<f64>,
    pub final_beta: f64,
}

/// Derives the generator seed of chain `chain_index` from the master seed.
///
/// SplitMix64 finalizer over `master_seed XOR golden_gamma * (index + 1)`.
/// A plain `master_seed + index` would hand adjacent chains nearly identical
/// low-entropy seeds; the mix permutation decorrelates them. Any
/// reimplementation that reproduces this function byte-for-byte reproduces
/// every chain stream.
pub fn chain_seed(master_seed: u64, chain_index: u32) -> u64 {
    let mut z = master_seed ^ 0x9E37_79B9_7F4A_7C15u64.wrapping_mul(chain_index as u64 + 1);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// pCN proposal `y' = sqrt(1 - beta^2) y + beta eta`, elementwise.
pub fn propose(y: &ParamVector, beta: f64, eta: &ParamVector) -> ParamVector {
    assert_eq!(y.len(), eta.len(), "proposal length mismatch");
    assert!(beta > 0.0 && beta <= 1.0, "beta must be in (0, 1]");
    let keep = (1.0 - beta * beta).sqrt();
    let values = y
        .values()
        .iter()
        .zip(eta.values())
        .map(|(a, b)| keep * a + beta * b)
        .collect();
    ParamVector::from_values_unchecked(y.dim_hilbert(), values)
}

/// Metropolis acceptance: accept iff `ln(alpha) < log_l_new - log_l_old`.
///
/// The prior does not appear: the pCN proposal preserves it, so the
/// acceptance ratio is the bare likelihood ratio. A `-inf` proposal is
/// always rejected. `log_l_old` must be finite; chains are initialized and
/// evolved only at finite-likelihood states.
pub fn accept_test(log_l_new: LogLikelihood, log_l_old: LogLikelihood, alpha: f64) -> bool {
    debug_assert!(log_l_old.is_finite(), "current state must have finite likelihood");
    if !log_l_new.is_finite() {
        return false;
    }
    alpha.ln() < log_l_new.value() - log_l_old.value()
}

/// Step-size update after one adaptation window, with the default band
/// [0.2, 0.6] and scale 1.1: grow `beta` (capped at 1) above the band,
/// shrink it below, leave it alone inside.
pub fn adapt_beta(beta: f64, accept_count: u64, adapt_interval: u64) -> f64 {
    adapt_beta_with(
        beta,
        accept_count as f64 / adapt_interval as f64,
        1.1,
        0.2,
        0.6,
    )
}

fn adapt_beta_with(beta: f64, fraction: f64, scale: f64, low: f64, high: f64) -> f64 {
    if fraction > high {
        (beta * scale).min(1.0)
    } else if fraction < low {
        beta / scale
    } else {
        beta
    }
}

/// Runs one pCN chain against a measurement dataset.
///
/// `povms` must line up one-to-one with `data.settings()`; build them once
/// per run with [`crate::posterior::povms_for`] and share across chains.
pub fn run_chain(
    data: &Dataset,
    povms: &[Povm],
    cfg: &ChainConfig,
    chain_index: u32,
) -> Result<ChainOutput> {
    let dim = data.dim();
    run_chain_with(
        |x| log_likelihood(x, data, povms),
        dim,
        cfg,
        chain_index,
    )
}

/// Chain driver over an arbitrary log-likelihood function.
///
/// This is the full algorithm behind [`run_chain`]; it is public so targets
/// other than the multinomial posterior (notably constant likelihoods, which
/// turn the chain into a prior sampler) can drive the identical code path.
pub fn run_chain_with<F>(
    mut log_l: F,
    dim_hilbert: usize,
    cfg: &ChainConfig,
    chain_index: u32,
) -> Result<ChainOutput>
where
    F: FnMut(&ParamVector) -> Result<LogLikelihood>,
{
    cfg.validate()?;
    let mut rng = ChainRng::seed_from_u64(chain_seed(cfg.seed, chain_index));

    let mut current = sample_prior_vector(dim_hilbert, &mut rng);
    let mut current_ll = log_l(&current)?;
    // A prior draw with -inf likelihood has probability zero for interior
    // datasets; redraw rather than start an unevolvable chain.
    let mut attempts = 0;
    while !current_ll.is_finite() {
        attempts += 1;
        if attempts > 1000 {
            return Err(Error::InvalidConfig(
                "could not find a finite-likelihood initial state".into(),
            ));
        }
        current = sample_prior_vector(dim_hilbert, &mut rng);
        current_ll = log_l(&current)?;
    }

    let total = cfg.total_iterations();
    let m_a = cfg.adapt_interval as u64;
    let thin = cfg.thinning as u64;
    let mut beta = cfg.beta_init;
    let mut accept_count: u64 = 0;

    let mut samples = Vec::with_capacity(cfg.samples_kept as usize);
    let mut beta_trace = Vec::with_capacity((total / m_a) as usize);
    let mut acceptance_fractions = Vec::with_capacity((total / m_a) as usize);

    for j in 1..=total {
        let eta = sample_prior_vector(dim_hilbert, &mut rng);
        let proposal = propose(&current, beta, &eta);
        // One fresh likelihood evaluation per iteration; the current state's
        // value is carried over unchanged from when it was accepted.
        let proposal_ll = log_l(&proposal)?;
        let alpha: f64 = rng.random();
        if accept_test(proposal_ll, current_ll, alpha) {
            current = proposal;
            current_ll = proposal_ll;
            accept_count += 1;
        }

        if j % m_a == 0 {
            let fraction = accept_count as f64 / m_a as f64;
            beta = adapt_beta_with(
                beta,
                fraction,
                cfg.beta_scale,
                cfg.accept_low,
                cfg.accept_high,
            );
            acceptance_fractions.push(fraction);
            beta_trace.push(beta);
            accept_count = 0;
        }

        if j % thin == 0 {
            if !current.is_finite() {
                return Err(Error::NonFiniteState {
                    chain: chain_index,
                    sample: samples.len(),
                });
            }
            samples.push(current.clone());
        }
    }

    Ok(ChainOutput {
        chain_index,
        samples,
        beta_trace,
        acceptance_fractions,
        final_beta: beta,
    })
}
