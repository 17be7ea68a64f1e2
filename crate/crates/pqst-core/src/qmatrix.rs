//! Dense complex linear algebra and density-matrix metrics.
//!
//! Everything here operates on small square matrices (dimension 2^Q for a
//! handful of qubits), double precision throughout. The heavy lifting is a
//! Householder QR with Haar phase correction and a cyclic Jacobi
//! eigensolver for Hermitian matrices; both are exact enough at these sizes
//! that no external LAPACK backend is needed.

use std::fmt::Write as _;
use std::ops::{Index, IndexMut};
use std::path::Path;

use num_complex::Complex64;
use serde::Deserialize;

use crate::error::{Error, Result};

/// Max-norm tolerance for the Hermiticity of a density matrix.
pub const HERMITIAN_TOL: f64 = 1e-12;
/// Tolerance on |Tr(rho) - 1|.
pub const TRACE_TOL: f64 = 1e-12;
/// Eigenvalues above this are considered nonnegative for PSD checks.
pub const PSD_TOL: f64 = -1e-10;
/// Max-norm tolerance for Hermiticity of eigensolver input.
pub const EIG_HERMITIAN_TOL: f64 = 1e-10;
/// Tolerance on |norm - 1| for state vectors.
pub const UNIT_NORM_TOL: f64 = 1e-12;
/// Diagonal magnitudes below this flag a degenerate QR factor.
const QR_DEGENERATE_TOL: f64 = 1e-300;

/// Dense square complex matrix, row-major storage.
#[derive(Clone, Debug, PartialEq)]
pub struct ComplexMatrix {
    dim: usize,
    entries: Vec<Complex64>,
}

impl ComplexMatrix {
    /// Builds a matrix from row-major entries, rejecting non-square or
    /// non-finite input.
    pub fn new(dim: usize, entries: Vec<Complex64>) -> Result<Self> {
        if dim == 0 || entries.len() != dim * dim {
            return Err(Error::NotSquare {
                dim,
                count: entries.len(),
            });
        }
        let m = Self { dim, entries };
        if !m.is_finite() {
            return Err(Error::NonFiniteEntries);
        }
        Ok(m)
    }

    pub fn zeros(dim: usize) -> Self {
        Self {
            dim,
            entries: vec![Complex64::new(0.0, 0.0); dim * dim],
        }
    }

    pub fn identity(dim: usize) -> Self {
        let mut m = Self::zeros(dim);
        for i in 0..dim {
            m[(i, i)] = Complex64::new(1.0, 0.0);
        }
        m
    }

    pub fn from_fn(dim: usize, mut f: impl FnMut(usize, usize) -> Complex64) -> Self {
        let mut entries = Vec::with_capacity(dim * dim);
        for i in 0..dim {
            for j in 0..dim {
                entries.push(f(i, j));
            }
        }
        Self { dim, entries }
    }

    /// Diagonal matrix from real values.
    pub fn diagonal(values: &[f64]) -> Self {
        let mut m = Self::zeros(values.len());
        for (i, &v) in values.iter().enumerate() {
            m[(i, i)] = Complex64::new(v, 0.0);
        }
        m
    }

    #[inline]
    pub fn dim(&self) -> usize {
        self.dim
    }

    #[inline]
    pub fn entries(&self) -> &[Complex64] {
        &self.entries
    }

    pub fn is_finite(&self) -> bool {
        self.entries.iter().all(|z| z.re.is_finite() && z.im.is_finite())
    }

    pub fn mul(&self, rhs: &Self) -> Self {
        assert_eq!(self.dim, rhs.dim, "matrix product dimension mismatch");
        let n = self.dim;
        let mut out = Self::zeros(n);
        for i in 0..n {
            for k in 0..n {
                let a = self.entries[i * n + k];
                if a.re == 0.0 && a.im == 0.0 {
                    continue;
                }
                for j in 0..n {
                    out.entries[i * n + j] += a * rhs.entries[k * n + j];
                }
            }
        }
        out
    }

    /// Computes `self * self^†`, Hermitian by construction: the upper
    /// triangle is computed and mirrored so no roundoff asymmetry survives.
    pub fn mul_adjoint_self(&self) -> Self {
        let n = self.dim;
        let mut out = Self::zeros(n);
        for i in 0..n {
            for j in i..n {
                let mut acc = Complex64::new(0.0, 0.0);
                for k in 0..n {
                    acc += self.entries[i * n + k] * self.entries[j * n + k].conj();
                }
                if i == j {
                    out.entries[i * n + i] = Complex64::new(acc.re, 0.0);
                } else {
                    out.entries[i * n + j] = acc;
                    out.entries[j * n + i] = acc.conj();
                }
            }
        }
        out
    }

    pub fn add(&self, rhs: &Self) -> Self {
        assert_eq!(self.dim, rhs.dim, "matrix sum dimension mismatch");
        let entries = self
            .entries
            .iter()
            .zip(&rhs.entries)
            .map(|(a, b)| a + b)
            .collect();
        Self { dim: self.dim, entries }
    }

    pub fn sub(&self, rhs: &Self) -> Self {
        assert_eq!(self.dim, rhs.dim, "matrix difference dimension mismatch");
        let entries = self
            .entries
            .iter()
            .zip(&rhs.entries)
            .map(|(a, b)| a - b)
            .collect();
        Self { dim: self.dim, entries }
    }

    pub fn scale(&self, factor: f64) -> Self {
        let entries = self.entries.iter().map(|z| z * factor).collect();
        Self { dim: self.dim, entries }
    }

    pub fn adjoint(&self) -> Self {
        let n = self.dim;
        Self::from_fn(n, |i, j| self.entries[j * n + i].conj())
    }

    pub fn trace(&self) -> Complex64 {
        (0..self.dim).map(|i| self.entries[i * self.dim + i]).sum()
    }

    /// Largest entry magnitude.
    pub fn max_abs(&self) -> f64 {
        self.entries.iter().map(|z| z.norm()).fold(0.0, f64::max)
    }

    /// Largest magnitude of the entrywise difference.
    pub fn max_abs_diff(&self, rhs: &Self) -> f64 {
        assert_eq!(self.dim, rhs.dim, "matrix comparison dimension mismatch");
        self.entries
            .iter()
            .zip(&rhs.entries)
            .map(|(a, b)| (a - b).norm())
            .fold(0.0, f64::max)
    }

    /// Squared Frobenius norm.
    pub fn frobenius_norm_sq(&self) -> f64 {
        self.entries.iter().map(|z| z.norm_sqr()).sum()
    }

    /// Largest magnitude of `m[i][j] - conj(m[j][i])`.
    pub fn hermitian_violation(&self) -> f64 {
        let n = self.dim;
        let mut worst = 0.0f64;
        for i in 0..n {
            for j in i..n {
                let d = (self.entries[i * n + j] - self.entries[j * n + i].conj()).norm();
                worst = worst.max(d);
            }
        }
        worst
    }

    /// Kronecker (tensor) product.
    pub fn kron(&self, rhs: &Self) -> Self {
        let (a, b) = (self.dim, rhs.dim);
        let n = a * b;
        Self::from_fn(n, |i, j| {
            self.entries[(i / b) * a + (j / b)] * rhs.entries[(i % b) * b + (j % b)]
        })
    }
}

impl Index<(usize, usize)> for ComplexMatrix {
    type Output = Complex64;
    #[inline]
    fn index(&self, (i, j): (usize, usize)) -> &Complex64 {
        &self.entries[i * self.dim + j]
    }
}

impl IndexMut<(usize, usize)> for ComplexMatrix {
    #[inline]
    fn index_mut(&mut self, (i, j): (usize, usize)) -> &mut Complex64 {
        &mut self.entries[i * self.dim + j]
    }
}

/// Unitary from QR with column phases fixed.
///
/// Runs a Householder QR on `h` and returns `U = Q diag(r_11/|r_11|, ...,
/// r_DD/|r_DD|)`. Fixing the phases this way makes `U` independent of the QR
/// sign convention and, for `h` with i.i.d. standard complex Gaussian
/// entries, Haar-distributed.
pub fn qr_haar_correct(h: &ComplexMatrix) -> Result<ComplexMatrix> {
    if !h.is_finite() {
        return Err(Error::NonFiniteEntries);
    }
    let (q, r) = householder_qr(h);
    let n = h.dim();
    let mut u = q;
    for j in 0..n {
        let rjj = r[(j, j)];
        let mag = rjj.norm();
        if mag < QR_DEGENERATE_TOL {
            return Err(Error::DegenerateDecomposition(mag));
        }
        let phase = rjj / mag;
        for i in 0..n {
            u[(i, j)] *= phase;
        }
    }
    Ok(u)
}

/// Householder QR: returns `(Q, R)` with `Q` unitary and `R` upper
/// triangular, `A = QR`. Columns that are already triangular are skipped, so
/// diagonal input passes through with `Q = I`.
fn householder_qr(a: &ComplexMatrix) -> (ComplexMatrix, ComplexMatrix) {
    let n = a.dim();
    let mut r = a.clone();
    let mut q = ComplexMatrix::identity(n);
    let mut v = vec![Complex64::new(0.0, 0.0); n];

    for k in 0..n {
        let below_sq: f64 = (k + 1..n).map(|i| r[(i, k)].norm_sqr()).sum();
        if below_sq == 0.0 {
            continue;
        }
        let rkk = r[(k, k)];
        let col_norm = (rkk.norm_sqr() + below_sq).sqrt();
        // Reflect onto -phase(r_kk) * ||x|| * e_k; the sign choice avoids
        // cancellation in v_k.
        let phase = if rkk.norm() == 0.0 {
            Complex64::new(1.0, 0.0)
        } else {
            rkk / rkk.norm()
        };
        let alpha = -phase * col_norm;
        v[k] = rkk - alpha;
        for i in k + 1..n {
            v[i] = r[(i, k)];
        }
        let v_norm_sq = v[k].norm_sqr() + below_sq;
        if v_norm_sq == 0.0 {
            continue;
        }
        let two_over = 2.0 / v_norm_sq;

        // r <- (I - 2 v v† / |v|²) r
        for j in k..n {
            let mut dot = Complex64::new(0.0, 0.0);
            for i in k..n {
                dot += v[i].conj() * r[(i, j)];
            }
            dot *= two_over;
            for i in k..n {
                let upd = v[i] * dot;
                r[(i, j)] -= upd;
            }
        }
        // q <- q (I - 2 v v† / |v|²)
        for i in 0..n {
            let mut dot = Complex64::new(0.0, 0.0);
            for j in k..n {
                dot += q[(i, j)] * v[j];
            }
            dot *= two_over;
            for j in k..n {
                let upd = dot * v[j].conj();
                q[(i, j)] -= upd;
            }
        }
        // Entries below the diagonal are zero by construction; make it exact.
        r[(k, k)] = alpha;
        for i in k + 1..n {
            r[(i, k)] = Complex64::new(0.0, 0.0);
        }
    }
    (q, r)
}

/// Eigendecomposition of a Hermitian matrix by cyclic Jacobi rotations.
///
/// Returns eigenvalues in ascending order and the matching unitary of
/// eigenvectors (columns), so `V diag(λ) V^†` reconstructs the
/// input. Input must be Hermitian within [`EIG_HERMITIAN_TOL`].
pub fn hermitian_eig(m: &ComplexMatrix) -> Result<(Vec<f64>, ComplexMatrix)> {
    let viol = m.hermitian_violation();
    if !viol.is_finite() || viol > EIG_HERMITIAN_TOL {
        return Err(Error::NotHermitian(viol));
    }
    let n = m.dim();
    // Work on the exact Hermitian average so roundoff asymmetry cannot bias
    // the rotations.
    let mut a = ComplexMatrix::from_fn(n, |i, j| {
        if i == j {
            Complex64::new(m[(i, i)].re, 0.0)
        } else {
            0.5 * (m[(i, j)] + m[(j, i)].conj())
        }
    });
    let mut v = ComplexMatrix::identity(n);
    let scale = a.frobenius_norm_sq().sqrt();

    if scale > 0.0 {
        const MAX_SWEEPS: usize = 64;
        for _ in 0..MAX_SWEEPS {
            let off: f64 = (0..n)
                .flat_map(|p| (p + 1..n).map(move |q| (p, q)))
                .map(|(p, q)| a[(p, q)].norm_sqr())
                .sum::<f64>()
                .sqrt();
            if off <= 1e-15 * scale {
                break;
            }
            for p in 0..n {
                for q in p + 1..n {
                    jacobi_rotate(&mut a, &mut v, p, q);
                }
            }
        }
    }

    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&i, &j| a[(i, i)].re.total_cmp(&a[(j, j)].re));
    let eigenvalues: Vec<f64> = order.iter().map(|&i| a[(i, i)].re).collect();
    let vectors = ComplexMatrix::from_fn(n, |i, j| v[(i, order[j])]);
    Ok((eigenvalues, vectors))
}

/// One Jacobi rotation zeroing the (p, q) entry of Hermitian `a`, with the
/// same rotation accumulated into `v`.
fn jacobi_rotate(a: &mut ComplexMatrix, v: &mut ComplexMatrix, p: usize, q: usize) {
    let apq = a[(p, q)];
    let g = apq.norm();
    if g == 0.0 {
        return;
    }
    let n = a.dim();
    let phase = apq / g;
    let app = a[(p, p)].re;
    let aqq = a[(q, q)].re;
    // Phase-rotate the (p,q) plane to make the pivot real, then apply the
    // classic symmetric Jacobi rotation with cot(2θ) from the real problem.
    let tau = (aqq - app) / (2.0 * g);
    let t = if tau >= 0.0 {
        1.0 / (tau + (1.0 + tau * tau).sqrt())
    } else {
        -1.0 / (-tau + (1.0 + tau * tau).sqrt())
    };
    let c = 1.0 / (1.0 + t * t).sqrt();
    let s = t * c;

    // Rotation combined with the diagonal phase that made the pivot real.
    let vpp = Complex64::new(c, 0.0);
    let vpq = Complex64::new(s, 0.0);
    let vqp = -s * phase.conj();
    let vqq = c * phase.conj();

    // A <- A · V
    for i in 0..n {
        let aip = a[(i, p)];
        let aiq = a[(i, q)];
        a[(i, p)] = aip * vpp + aiq * vqp;
        a[(i, q)] = aip * vpq + aiq * vqq;
    }
    // A <- V† · A
    for j in 0..n {
        let apj = a[(p, j)];
        let aqj = a[(q, j)];
        a[(p, j)] = vpp.conj() * apj + vqp.conj() * aqj;
        a[(q, j)] = vpq.conj() * apj + vqq.conj() * aqj;
    }
    // V_acc <- V_acc · V
    for i in 0..n {
        let vip = v[(i, p)];
        let viq = v[(i, q)];
        v[(i, p)] = vip * vpp + viq * vqp;
        v[(i, q)] = vip * vpq + viq * vqq;
    }
    a[(p, q)] = Complex64::new(0.0, 0.0);
    a[(q, p)] = Complex64::new(0.0, 0.0);
    a[(p, p)] = Complex64::new(a[(p, p)].re, 0.0);
    a[(q, q)] = Complex64::new(a[(q, q)].re, 0.0);
}

/// Principal square root of a Hermitian PSD matrix via eigendecomposition.
///
/// Eigenvalues in `[-1e-10, 0)` are clamped to zero before the square root;
/// anything below that fails with `NotPsd`.
pub fn hermitian_sqrt(m: &ComplexMatrix) -> Result<ComplexMatrix> {
    let (eigenvalues, vectors) = hermitian_eig(m)?;
    let n = m.dim();
    let mut roots = Vec::with_capacity(n);
    for &lambda in &eigenvalues {
        if lambda < PSD_TOL {
            return Err(Error::NotPsd(lambda));
        }
        roots.push(if lambda > 0.0 { lambda.sqrt() } else { 0.0 });
    }
    // S = V diag(sqrt(λ)) V†, assembled exactly Hermitian.
    let mut s = ComplexMatrix::zeros(n);
    for i in 0..n {
        for j in i..n {
            let mut acc = Complex64::new(0.0, 0.0);
            for k in 0..n {
                acc += vectors[(i, k)] * roots[k] * vectors[(j, k)].conj();
            }
            if i == j {
                s[(i, i)] = Complex64::new(acc.re, 0.0);
            } else {
                s[(i, j)] = acc;
                s[(j, i)] = acc.conj();
            }
        }
    }
    Ok(s)
}

/// Density matrix: Hermitian, positive semidefinite, unit trace.
#[derive(Clone, Debug, PartialEq)]
pub struct DensityMatrix {
    mat: ComplexMatrix,
}

impl DensityMatrix {
    /// Validating constructor: checks Hermiticity, trace, and positive
    /// semidefiniteness at the documented tolerances.
    pub fn new(mat: ComplexMatrix) -> Result<Self> {
        if !mat.is_finite() {
            return Err(Error::NonFiniteEntries);
        }
        let viol = mat.hermitian_violation();
        if viol > HERMITIAN_TOL {
            return Err(Error::NotHermitian(viol));
        }
        let tr = mat.trace();
        if (tr.re - 1.0).abs() > TRACE_TOL || tr.im.abs() > TRACE_TOL {
            return Err(Error::InvalidTrace(tr.re));
        }
        let (eigenvalues, _) = hermitian_eig(&mat)?;
        let min = eigenvalues.first().copied().unwrap_or(0.0);
        if min < PSD_TOL {
            return Err(Error::NotPsd(min));
        }
        Ok(Self { mat })
    }

    /// Constructor for matrices that are Hermitian PSD with unit trace by
    /// construction (Gram forms, convex mixtures of valid states). Skips the
    /// eigenvalue check; cheap structural checks remain in debug builds.
    pub(crate) fn trusted(mat: ComplexMatrix) -> Self {
        debug_assert!(mat.hermitian_violation() <= HERMITIAN_TOL);
        debug_assert!((mat.trace().re - 1.0).abs() <= 1e-9);
        Self { mat }
    }

    /// Pure-state density matrix `|psi><psi|`.
    pub fn pure(psi: &StateVector) -> Self {
        let n = psi.dim();
        let amps = psi.amplitudes();
        let mat = ComplexMatrix::from_fn(n, |i, j| amps[i] * amps[j].conj());
        Self::trusted(mat)
    }

    /// Maximally mixed state `I/D`.
    pub fn maximally_mixed(dim: usize) -> Self {
        Self::trusted(ComplexMatrix::identity(dim).scale(1.0 / dim as f64))
    }

    #[inline]
    pub fn dim(&self) -> usize {
        self.mat.dim()
    }

    #[inline]
    pub fn mat(&self) -> &ComplexMatrix {
        &self.mat
    }

    /// Re-runs the full invariant validation.
    pub fn validate(&self) -> Result<()> {
        Self::new(self.mat.clone()).map(|_| ())
    }

    /// Purity `Tr(rho^2)`; 1 for pure states, 1/D for maximally mixed.
    pub fn purity(&self) -> f64 {
        // Tr(ρ²) = Σ_ij ρ_ij ρ_ji = Σ_ij |ρ_ij|² for Hermitian ρ.
        self.mat.frobenius_norm_sq()
    }

    /// Serializes to the density-matrix JSON schema
    /// `{"dim": D, "re": [[...]], "im": [[...]]}` with 17 significant digits.
    pub fn to_json_string(&self) -> String {
        let n = self.dim();
        let mut out = String::new();
        out.push_str("{\n");
        let _ = writeln!(out, "  \"dim\": {n},");
        for (field, pick) in [("re", 0usize), ("im", 1usize)] {
            let _ = writeln!(out, "  \"{field}\": [");
            for i in 0..n {
                out.push_str("    [");
                for j in 0..n {
                    let z = self.mat[(i, j)];
                    let x = if pick == 0 { z.re } else { z.im };
                    let _ = write!(out, "{}", fmt_f64_17(x));
                    if j + 1 < n {
                        out.push_str(", ");
                    }
                }
                out.push(']');
                out.push_str(if i + 1 < n { ",\n" } else { "\n" });
            }
            out.push_str(if field == "re" { "  ],\n" } else { "  ]\n" });
        }
        out.push_str("}\n");
        out
    }

    /// Parses and validates the density-matrix JSON schema.
    pub fn from_json_str(text: &str) -> Result<Self> {
        #[derive(Deserialize)]
        struct Dto {
            dim: usize,
            re: Vec<Vec<f64>>,
            im: Vec<Vec<f64>>,
        }
        let dto: Dto = serde_json::from_str(text)?;
        let n = dto.dim;
        if dto.re.len() != n
            || dto.im.len() != n
            || dto.re.iter().any(|row| row.len() != n)
            || dto.im.iter().any(|row| row.len() != n)
        {
            return Err(Error::NotSquare {
                dim: n,
                count: dto.re.iter().map(Vec::len).sum(),
            });
        }
        let mut entries = Vec::with_capacity(n * n);
        for i in 0..n {
            for j in 0..n {
                entries.push(Complex64::new(dto.re[i][j], dto.im[i][j]));
            }
        }
        Self::new(ComplexMatrix::new(n, entries)?)
    }

    pub fn write_json_file(&self, path: &Path) -> Result<()> {
        std::fs::write(path, self.to_json_string())?;
        Ok(())
    }

    pub fn read_json_file(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path)?;
        Self::from_json_str(&text)
    }
}

/// 17 significant digits; round-trips any f64 exactly.
pub(crate) fn fmt_f64_17(x: f64) -> String {
    format!("{x:.16e}")
}

/// Pure quantum state: unit-norm complex amplitude vector.
#[derive(Clone, Debug, PartialEq)]
pub struct StateVector {
    amplitudes: Vec<Complex64>,
}

impl StateVector {
    pub fn new(amplitudes: Vec<Complex64>) -> Result<Self> {
        if amplitudes.is_empty()
            || amplitudes.iter().any(|z| !z.re.is_finite() || !z.im.is_finite())
        {
            return Err(Error::NonFiniteEntries);
        }
        let norm = amplitudes.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt();
        if (norm - 1.0).abs() > UNIT_NORM_TOL {
            return Err(Error::NotNormalized(norm));
        }
        Ok(Self { amplitudes })
    }

    /// Computational basis state `|index>`.
    pub fn basis(dim: usize, index: usize) -> Self {
        assert!(index < dim, "basis index out of range");
        let mut amplitudes = vec![Complex64::new(0.0, 0.0); dim];
        amplitudes[index] = Complex64::new(1.0, 0.0);
        Self { amplitudes }
    }

    #[inline]
    pub fn dim(&self) -> usize {
        self.amplitudes.len()
    }

    #[inline]
    pub fn amplitudes(&self) -> &[Complex64] {
        &self.amplitudes
    }

    /// Tensor product `|self> ⊗ |other>`.
    pub fn tensor(&self, other: &Self) -> Self {
        let mut amplitudes = Vec::with_capacity(self.dim() * other.dim());
        for a in &self.amplitudes {
            for b in &other.amplitudes {
                amplitudes.push(a * b);
            }
        }
        Self { amplitudes }
    }

    pub(crate) fn from_amplitudes_unchecked(amplitudes: Vec<Complex64>) -> Self {
        Self { amplitudes }
    }
}

/// Uhlmann fidelity `(Tr sqrt(sqrt(a) b sqrt(a)))^2`, clamped to [0, 1].
pub fn fidelity(a: &DensityMatrix, b: &DensityMatrix) -> Result<f64> {
    if a.dim() != b.dim() {
        return Err(Error::DimensionMismatch {
            left: a.dim(),
            right: b.dim(),
        });
    }
    let sqrt_a = hermitian_sqrt(a.mat())?;
    let inner = sqrt_a.mul(b.mat()).mul(&sqrt_a);
    // Exact-Hermitian average; the product is Hermitian PSD up to roundoff.
    let n = inner.dim();
    let herm = ComplexMatrix::from_fn(n, |i, j| 0.5 * (inner[(i, j)] + inner[(j, i)].conj()));
    let (eigenvalues, _) = hermitian_eig(&herm)?;
    let root_sum: f64 = eigenvalues
        .iter()
        .map(|&l| if l > 0.0 { l.sqrt() } else { 0.0 })
        .sum();
    Ok((root_sum * root_sum).clamp(0.0, 1.0))
}

/// Squared Frobenius distance `sum_ij |a_ij - b_ij|^2`.
pub fn frobenius_sq_distance(a: &DensityMatrix, b: &DensityMatrix) -> Result<f64> {
    if a.dim() != b.dim() {
        return Err(Error::DimensionMismatch {
            left: a.dim(),
            right: b.dim(),
        });
    }
    Ok(a.mat().sub(b.mat()).frobenius_norm_sq())
}

/// Expectation `<psi|rho|psi>`, real part clamped to [0, 1].
pub fn expectation(rho: &DensityMatrix, psi: &StateVector) -> Result<f64> {
    if rho.dim() != psi.dim() {
        return Err(Error::DimensionMismatch {
            left: rho.dim(),
            right: psi.dim(),
        });
    }
    Ok(expectation_raw(rho.mat(), psi.amplitudes()).re.clamp(0.0, 1.0))
}

/// `<v|m|v>` without validation; shared with the measurement fast path.
#[inline]
pub(crate) fn expectation_raw(m: &ComplexMatrix, v: &[Complex64]) -> Complex64 {
    let n = m.dim();
    let mut acc = Complex64::new(0.0, 0.0);
    for i in 0..n {
        let mut row = Complex64::new(0.0, 0.0);
        for j in 0..n {
            row += m[(i, j)] * v[j];
        }
        acc += v[i].conj() * row;
    }
    acc
}
