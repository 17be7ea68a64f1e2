//! Multinomial log-likelihood of a parameter vector given measurement
//! counts.
//!
//! Everything is computed in the log domain; the raw likelihood product
//! underflows already at a few hundred counts. A proposal that assigns zero
//! probability to an observed outcome gets log-likelihood negative infinity
//! so the acceptance test rejects it outright; interior states of the
//! parametrization have strictly positive outcome probabilities, so chains
//! cannot get stuck there.

use crate::bures::{rho_from_params, ParamVector};
use crate::error::{Error, Result};
use crate::measurement::{outcome_probabilities, pauli_povm, Dataset, Povm};

/// Probabilities at or below this with a nonzero observed count collapse the
/// log-likelihood to negative infinity.
const PROB_FLOOR: f64 = 1e-300;

/// Log-likelihood value: always finite or negative infinity, never NaN or
/// positive infinity.
#[derive(Clone, Copy, Debug, PartialEq, PartialOrd)]
pub struct LogLikelihood(f64);

impl LogLikelihood {
    pub const NEG_INFINITY: LogLikelihood = LogLikelihood(f64::NEG_INFINITY);

    pub fn new(value: f64) -> Self {
        assert!(
            !value.is_nan() && value != f64::INFINITY,
            "log-likelihood must be finite or -inf"
        );
        Self(value)
    }

    #[inline]
    pub fn value(self) -> f64 {
        self.0
    }

    #[inline]
    pub fn is_finite(self) -> bool {
        self.0.is_finite()
    }
}

/// Precomputes the POVM for every setting of a dataset, in setting order.
///
/// POVMs depend only on the settings, never on the sampled parameters, so
/// one shared read-only list serves every chain of a run.
pub fn povms_for(data: &Dataset) -> Vec<Povm> {
    data.settings()
        .iter()
        .map(|sc| pauli_povm(&sc.basis))
        .collect()
}

/// `sum_k sum_l c_kl ln p_kl` with `p_kl` the outcome probabilities of the
/// state encoded by `x`. Zero-count terms contribute zero regardless of
/// `p_kl`.
pub fn log_likelihood(x: &ParamVector, data: &Dataset, povms: &[Povm]) -> Result<LogLikelihood> {
    if povms.len() != data.num_settings() {
        return Err(Error::DimensionMismatch {
            left: povms.len(),
            right: data.num_settings(),
        });
    }
    let rho = rho_from_params(x)?;
    if rho.dim() != data.dim() {
        return Err(Error::DimensionMismatch {
            left: rho.dim(),
            right: data.dim(),
        });
    }
    let mut total = 0.0;
    for (sc, povm) in data.settings().iter().zip(povms) {
        let probs = outcome_probabilities(&rho, povm)?;
        for (&count, &p) in sc.counts.iter().zip(&probs) {
            if count == 0 {
                continue;
            }
            if p <= PROB_FLOOR {
                return Ok(LogLikelihood::NEG_INFINITY);
            }
            total += count as f64 * p.ln();
        }
    }
    Ok(LogLikelihood::new(total))
}
