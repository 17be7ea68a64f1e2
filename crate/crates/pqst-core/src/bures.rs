//! Parameter-vector representation of density matrices and Bures sampling.
//!
//! A state of Hilbert dimension `D` is encoded by a real vector `x` of
//! length `4D^2`. The first `D^2` entries fill the real parts of a matrix
//! `G` row-major, the next `D^2` its imaginary parts; the second half fills
//! a matrix `H` the same way. With `U` the phase-corrected unitary from the
//! QR of `H` and `W = (U + I) G`, the state is `rho = W W^† /
//! Tr(W W^†)`. When `x` is standard normal, `rho` is Bures
//! distributed.
//!
//! The map is deliberately overparametrized: distinct `x` can give the same
//! `rho` (any positive rescaling of `x` does, for one), so nothing here may
//! assume injectivity.

use rand::Rng;
use rand_distr::StandardNormal;

use crate::error::{Error, Result};
use crate::qmatrix::{qr_haar_correct, ComplexMatrix, DensityMatrix};
use crate::Complex64;

/// Real parameter vector of length `4 * D^2` for Hilbert dimension `D`.
#[derive(Clone, Debug, PartialEq)]
pub struct ParamVector {
    dim_hilbert: usize,
    values: Vec<f64>,
}

impl ParamVector {
    pub fn new(dim_hilbert: usize, values: Vec<f64>) -> Result<Self> {
        let expected = 4 * dim_hilbert * dim_hilbert;
        if dim_hilbert == 0 || values.len() != expected {
            return Err(Error::InvalidParamVector(format!(
                "expected {expected} values for D = {dim_hilbert}, got {}",
                values.len()
            )));
        }
        if !values.iter().all(|v| v.is_finite()) {
            return Err(Error::InvalidParamVector("non-finite entry".into()));
        }
        Ok(Self { dim_hilbert, values })
    }

    pub(crate) fn from_values_unchecked(dim_hilbert: usize, values: Vec<f64>) -> Self {
        debug_assert_eq!(values.len(), 4 * dim_hilbert * dim_hilbert);
        Self { dim_hilbert, values }
    }

    #[inline]
    pub fn dim_hilbert(&self) -> usize {
        self.dim_hilbert
    }

    #[inline]
    pub fn len(&self) -> usize {
        self.values.len()
    }

    #[inline]
    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    #[inline]
    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn is_finite(&self) -> bool {
        self.values.iter().all(|v| v.is_finite())
    }
}

/// Builds the density matrix encoded by `x`.
///
/// Deterministic; errors only if `Tr(W W^†)` underflows, which needs
/// an effectively all-zero parameter region.
pub fn rho_from_params(x: &ParamVector) -> Result<DensityMatrix> {
    let d = x.dim_hilbert;
    let d2 = d * d;
    let v = &x.values;

    let g = complex_from_halves(d, &v[0..d2], &v[d2..2 * d2]);
    let h = complex_from_halves(d, &v[2 * d2..3 * d2], &v[3 * d2..4 * d2]);

    let u = qr_haar_correct(&h)?;
    let w = u.add(&ComplexMatrix::identity(d)).mul(&g);
    let gram = w.mul_adjoint_self();
    let trace = gram.trace().re;
    if trace.is_nan() || trace <= 1e-300 {
        return Err(Error::DegenerateState);
    }
    Ok(DensityMatrix::trusted(gram.scale(1.0 / trace)))
}

/// Row-major matrix whose real parts come from `re` and imaginary parts
/// from `im`.
fn complex_from_halves(dim: usize, re: &[f64], im: &[f64]) -> ComplexMatrix {
    let mut entries = Vec::with_capacity(dim * dim);
    for k in 0..dim * dim {
        entries.push(Complex64::new(re[k], im[k]));
    }
    // Finite by ParamVector invariant.
    ComplexMatrix::new(dim, entries).expect("parameter vector entries are finite")
}

/// Draws a standard-normal parameter vector, i.e. a sample from the prior.
pub fn sample_prior_vector(dim_hilbert: usize, rng: &mut impl Rng) -> ParamVector {
    let len = 4 * dim_hilbert * dim_hilbert;
    let values: Vec<f64> = (0..len).map(|_| rng.sample(StandardNormal)).collect();
    ParamVector::from_values_unchecked(dim_hilbert, values)
}

/// Draws a Bures-distributed density matrix of dimension `dim_hilbert`,
/// returning the parameter vector alongside the state.
pub fn sample_bures(
    dim_hilbert: usize,
    rng: &mut impl Rng,
) -> Result<(ParamVector, DensityMatrix)> {
    let x = sample_prior_vector(dim_hilbert, rng);
    let rho = rho_from_params(&x)?;
    Ok((x, rho))
}

/// Log-density of the standard-normal prior:
/// `-(len/2) ln(2π) - |x|^2 / 2`.
pub fn log_prior(x: &ParamVector) -> f64 {
    let len = x.len() as f64;
    let norm_sq: f64 = x.values.iter().map(|v| v * v).sum();
    -0.5 * len * (2.0 * std::f64::consts::PI).ln() - 0.5 * norm_sq
}
