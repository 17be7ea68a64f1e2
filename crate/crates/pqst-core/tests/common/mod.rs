//! Straight-line reference implementations used as independent oracles.
//!
//! Everything here is deliberately written without touching the library's
//! computational paths: plain 2x2 complex arithmetic, classical
//! Gram-Schmidt, explicit trace loops. Agreement between these and the
//! library is the correctness evidence for the fixed-seed test cases.

// Each test target compiles this module separately and uses a subset of it.
#![allow(dead_code)]

use num_complex::Complex64;
use pqst_core::measurement::Dataset;
use pqst_core::qmatrix::ComplexMatrix;

pub type C2 = [[Complex64; 2]; 2];

/// Density matrix from a 16-entry parameter vector at D = 2, evaluated
/// directly: fill G and H row-major, orthonormalize H's columns with
/// classical Gram-Schmidt (whose R diagonal is real positive, so its Q is
/// already the phase-fixed unitary), then W = (U + I) G and normalize
/// W W-dagger by its trace.
pub fn oracle_rho_d2(x: &[f64]) -> C2 {
    assert_eq!(x.len(), 16);
    let g = [
        [Complex64::new(x[0], x[4]), Complex64::new(x[1], x[5])],
        [Complex64::new(x[2], x[6]), Complex64::new(x[3], x[7])],
    ];
    let h = [
        [Complex64::new(x[8], x[12]), Complex64::new(x[9], x[13])],
        [Complex64::new(x[10], x[14]), Complex64::new(x[11], x[15])],
    ];

    // Gram-Schmidt over the columns of h.
    let a0 = h[0][0];
    let a1 = h[1][0];
    let n1 = (a0.norm_sqr() + a1.norm_sqr()).sqrt();
    let q00 = a0 / n1;
    let q10 = a1 / n1;
    let b0 = h[0][1];
    let b1 = h[1][1];
    let proj = q00.conj() * b0 + q10.conj() * b1;
    let w0 = b0 - proj * q00;
    let w1 = b1 - proj * q10;
    let n2 = (w0.norm_sqr() + w1.norm_sqr()).sqrt();
    let u = [[q00, w0 / n2], [q10, w1 / n2]];

    // W = (U + I) G
    let one = Complex64::new(1.0, 0.0);
    let up = [
        [u[0][0] + one, u[0][1]],
        [u[1][0], u[1][1] + one],
    ];
    let mut w = [[Complex64::new(0.0, 0.0); 2]; 2];
    for i in 0..2 {
        for j in 0..2 {
            for (k, g_row) in g.iter().enumerate() {
                w[i][j] += up[i][k] * g_row[j];
            }
        }
    }

    // rho = W W-dagger / trace
    let mut m = [[Complex64::new(0.0, 0.0); 2]; 2];
    for i in 0..2 {
        for j in 0..2 {
            for (a, b) in w[i].iter().zip(&w[j]) {
                m[i][j] += a * b.conj();
            }
        }
    }
    let trace = m[0][0].re + m[1][1].re;
    for row in &mut m {
        for entry in row {
            *entry /= trace;
        }
    }
    m
}

pub fn purity_d2(m: &C2) -> f64 {
    m.iter()
        .flatten()
        .map(|z| z.norm_sqr())
        .sum()
}

pub fn max_abs_diff_d2(a: &C2, b: &ComplexMatrix) -> f64 {
    let mut worst = 0.0f64;
    for i in 0..2 {
        for j in 0..2 {
            worst = worst.max((a[i][j] - b[(i, j)]).norm());
        }
    }
    worst
}

/// Brute-force log-likelihood: enumerate every (setting, outcome) pair,
/// compute the outcome probability by an explicit full matrix trace of
/// effect times state, and sum count * ln(probability).
pub fn oracle_log_likelihood(rho: &ComplexMatrix, data: &Dataset) -> f64 {
    let dim = data.dim();
    let mut total = 0.0;
    for sc in data.settings() {
        let povm = pqst_core::measurement::pauli_povm(&sc.basis);
        for (l, &count) in sc.counts.iter().enumerate() {
            if count == 0 {
                continue;
            }
            let effect = &povm.effects()[l];
            let mut tr = Complex64::new(0.0, 0.0);
            for i in 0..dim {
                for j in 0..dim {
                    tr += effect[(i, j)] * rho[(j, i)];
                }
            }
            total += count as f64 * tr.re.ln();
        }
    }
    total
}
