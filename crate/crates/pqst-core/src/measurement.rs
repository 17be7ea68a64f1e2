//! Pauli measurement model: POVMs, outcome probabilities, and multinomial
//! count simulation.
//!
//! Bit convention used everywhere (including the counts file): qubit 0 maps
//! to the most significant bit of the outcome index, and character `q` of a
//! basis string like `"XZY"` is the axis measured on qubit `q`. Outcome bit
//! 0 means the +1 eigenvector of that axis, bit 1 the -1 eigenvector.
//! Experimental counts recorded under a different ordering must be
//! converted before ingestion.

use std::collections::HashSet;
use std::fmt;
use std::path::Path;
use std::str::FromStr;

use rand::Rng;
use rand_distr::{Binomial, Distribution};
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::error::{Error, Result};
use crate::qmatrix::{expectation_raw, ComplexMatrix, DensityMatrix, StateVector};
use crate::Complex64;

/// Measurement axis for one qubit.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum PauliAxis {
    X,
    Y,
    Z,
}

impl PauliAxis {
    pub const ALL: [PauliAxis; 3] = [PauliAxis::X, PauliAxis::Y, PauliAxis::Z];

    pub fn to_char(self) -> char {
        match self {
            PauliAxis::X => 'X',
            PauliAxis::Y => 'Y',
            PauliAxis::Z => 'Z',
        }
    }

    pub fn from_char(c: char) -> Result<Self> {
        match c {
            'X' => Ok(PauliAxis::X),
            'Y' => Ok(PauliAxis::Y),
            'Z' => Ok(PauliAxis::Z),
            other => Err(Error::InvalidDataset(format!(
                "invalid Pauli axis '{other}'"
            ))),
        }
    }

    /// Single-qubit eigenvector with eigenvalue +1 (`bit == 0`) or -1
    /// (`bit == 1`).
    fn eigenvector(self, bit: u8) -> [Complex64; 2] {
        let h = std::f64::consts::FRAC_1_SQRT_2;
        match (self, bit) {
            (PauliAxis::Z, 0) => [Complex64::new(1.0, 0.0), Complex64::new(0.0, 0.0)],
            (PauliAxis::Z, _) => [Complex64::new(0.0, 0.0), Complex64::new(1.0, 0.0)],
            (PauliAxis::X, 0) => [Complex64::new(h, 0.0), Complex64::new(h, 0.0)],
            (PauliAxis::X, _) => [Complex64::new(h, 0.0), Complex64::new(-h, 0.0)],
            (PauliAxis::Y, 0) => [Complex64::new(h, 0.0), Complex64::new(0.0, h)],
            (PauliAxis::Y, _) => [Complex64::new(h, 0.0), Complex64::new(0.0, -h)],
        }
    }
}

/// One measurement setting: an axis per qubit, e.g. `XZY`.
#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct PauliString {
    axes: Vec<PauliAxis>,
}

impl PauliString {
    pub fn new(axes: Vec<PauliAxis>) -> Result<Self> {
        if axes.is_empty() {
            return Err(Error::InvalidDataset("empty Pauli string".into()));
        }
        Ok(Self { axes })
    }

    #[inline]
    pub fn num_qubits(&self) -> usize {
        self.axes.len()
    }

    #[inline]
    pub fn axes(&self) -> &[PauliAxis] {
        &self.axes
    }

    pub fn dim(&self) -> usize {
        1 << self.axes.len()
    }
}

impl fmt::Display for PauliString {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for axis in &self.axes {
            write!(f, "{}", axis.to_char())?;
        }
        Ok(())
    }
}

impl FromStr for PauliString {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let axes = s.chars().map(PauliAxis::from_char).collect::<Result<_>>()?;
        PauliString::new(axes)
    }
}

/// All `3^Q` Pauli settings in lexicographic order over X < Y < Z.
pub fn all_pauli_settings(num_qubits: usize) -> Vec<PauliString> {
    assert!(
        (1..=10).contains(&num_qubits),
        "qubit count out of supported range"
    );
    let total = 3usize.pow(num_qubits as u32);
    let mut out = Vec::with_capacity(total);
    for mut code in 0..total {
        let mut axes = vec![PauliAxis::X; num_qubits];
        for q in (0..num_qubits).rev() {
            axes[q] = PauliAxis::ALL[code % 3];
            code /= 3;
        }
        out.push(PauliString { axes });
    }
    out
}

/// Projective POVM for one Pauli setting: `D` rank-1 effects summing to the
/// identity.
#[derive(Clone, Debug)]
pub struct Povm {
    dim: usize,
    effects: Vec<ComplexMatrix>,
    // Rank-1 structure kept alongside: effect l is |v_l><v_l|. Probability
    // evaluation uses <v|rho|v> directly, which is the same trace at a
    // quarter of the work.
    eigenvectors: Vec<StateVector>,
}

impl Povm {
    #[inline]
    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn effects(&self) -> &[ComplexMatrix] {
        &self.effects
    }

    pub fn eigenvectors(&self) -> &[StateVector] {
        &self.eigenvectors
    }
}

/// Builds the projective POVM of a Pauli setting.
///
/// Effect `l` projects onto the tensor product over qubits of the single
/// qubit eigenvectors selected by the bits of `l` (qubit 0 = most
/// significant bit).
pub fn pauli_povm(setting: &PauliString) -> Povm {
    let q = setting.num_qubits();
    let dim = 1 << q;
    let mut effects = Vec::with_capacity(dim);
    let mut eigenvectors = Vec::with_capacity(dim);
    for outcome in 0..dim {
        let mut amps = vec![Complex64::new(1.0, 0.0)];
        for (qi, axis) in setting.axes.iter().enumerate() {
            let bit = ((outcome >> (q - 1 - qi)) & 1) as u8;
            let single = axis.eigenvector(bit);
            let mut next = Vec::with_capacity(amps.len() * 2);
            for a in &amps {
                next.push(a * single[0]);
                next.push(a * single[1]);
            }
            amps = next;
        }
        let effect = ComplexMatrix::from_fn(dim, |i, j| amps[i] * amps[j].conj());
        effects.push(effect);
        eigenvectors.push(StateVector::from_amplitudes_unchecked(amps));
    }
    Povm {
        dim,
        effects,
        eigenvectors,
    }
}

/// Outcome probabilities `p_l = Re Tr(Λ_l rho)`, each clamped to
/// [0, 1]; they sum to 1 up to roundoff by POVM completeness.
pub fn outcome_probabilities(rho: &DensityMatrix, povm: &Povm) -> Result<Vec<f64>> {
    if rho.dim() != povm.dim {
        return Err(Error::DimensionMismatch {
            left: rho.dim(),
            right: povm.dim,
        });
    }
    Ok(povm
        .eigenvectors
        .iter()
        .map(|v| expectation_raw(rho.mat(), v.amplitudes()).re.clamp(0.0, 1.0))
        .collect())
}

/// Per-setting outcome counts.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct SettingCounts {
    pub basis: PauliString,
    pub counts: Vec<u64>,
}

/// A full measurement record: `K` distinct Pauli settings, each measured
/// `P` times.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Dataset {
    num_qubits: usize,
    shots_per_setting: u64,
    settings: Vec<SettingCounts>,
}

impl Dataset {
    pub fn new(
        num_qubits: usize,
        shots_per_setting: u64,
        settings: Vec<SettingCounts>,
    ) -> Result<Self> {
        if num_qubits == 0 {
            return Err(Error::InvalidDataset("num_qubits must be >= 1".into()));
        }
        if settings.is_empty() {
            return Err(Error::InvalidDataset("no settings".into()));
        }
        let dim = 1usize << num_qubits;
        let mut seen = HashSet::new();
        for sc in &settings {
            if sc.basis.num_qubits() != num_qubits {
                return Err(Error::InvalidDataset(format!(
                    "basis {} does not match num_qubits {num_qubits}",
                    sc.basis
                )));
            }
            if sc.counts.len() != dim {
                return Err(Error::InvalidDataset(format!(
                    "setting {} has {} outcome counts, expected {dim}",
                    sc.basis,
                    sc.counts.len()
                )));
            }
            let sum: u64 = sc.counts.iter().sum();
            if sum != shots_per_setting {
                return Err(Error::InvalidDataset(format!(
                    "setting {} counts sum to {sum}, expected {shots_per_setting}",
                    sc.basis
                )));
            }
            if !seen.insert(sc.basis.clone()) {
                return Err(Error::InvalidDataset(format!(
                    "duplicate setting {}",
                    sc.basis
                )));
            }
        }
        Ok(Self {
            num_qubits,
            shots_per_setting,
            settings,
        })
    }

    #[inline]
    pub fn num_qubits(&self) -> usize {
        self.num_qubits
    }

    #[inline]
    pub fn dim(&self) -> usize {
        1 << self.num_qubits
    }

    #[inline]
    pub fn shots_per_setting(&self) -> u64 {
        self.shots_per_setting
    }

    #[inline]
    pub fn settings(&self) -> &[SettingCounts] {
        &self.settings
    }

    pub fn num_settings(&self) -> usize {
        self.settings.len()
    }

    pub fn total_counts(&self) -> u64 {
        self.settings.len() as u64 * self.shots_per_setting
    }

    pub fn to_json_string(&self) -> String {
        let dto = CountsFile {
            num_qubits: self.num_qubits,
            shots_per_setting: self.shots_per_setting,
            settings: self
                .settings
                .iter()
                .map(|sc| CountsEntry {
                    basis: sc.basis.to_string(),
                    counts: sc.counts.clone(),
                })
                .collect(),
        };
        let mut text = serde_json::to_string_pretty(&dto).expect("counts serialize");
        text.push('\n');
        text
    }

    pub fn from_json_str(text: &str) -> Result<Self> {
        let dto: CountsFile = serde_json::from_str(text)?;
        let settings = dto
            .settings
            .into_iter()
            .map(|entry| {
                Ok(SettingCounts {
                    basis: entry.basis.parse()?,
                    counts: entry.counts,
                })
            })
            .collect::<Result<Vec<_>>>()?;
        Dataset::new(dto.num_qubits, dto.shots_per_setting, settings)
    }

    pub fn write_json_file(&self, path: &Path) -> Result<()> {
        std::fs::write(path, self.to_json_string())?;
        Ok(())
    }

    pub fn read_json_file(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path)?;
        Self::from_json_str(&text)
    }

    /// SHA-256 of the canonical JSON serialization; identifies the dataset
    /// independent of file formatting.
    pub fn content_sha256(&self) -> String {
        hex::encode(Sha256::digest(self.to_json_string().as_bytes()))
    }
}

#[derive(Serialize, Deserialize)]
struct CountsFile {
    num_qubits: usize,
    shots_per_setting: u64,
    settings: Vec<CountsEntry>,
}

#[derive(Serialize, Deserialize)]
struct CountsEntry {
    basis: String,
    counts: Vec<u64>,
}

/// Simulates measuring `rho` `shots` times in each setting.
///
/// Multinomial sampling is done as `D - 1` sequential binomial draws
/// (conditional method), so results are bit-reproducible for a fixed
/// generator stream: settings in the given order, outcomes in index order.
pub fn simulate_counts(
    rho: &DensityMatrix,
    settings: &[PauliString],
    shots: u64,
    rng: &mut impl Rng,
) -> Result<Dataset> {
    if settings.is_empty() {
        return Err(Error::InvalidDataset("no settings".into()));
    }
    if shots == 0 {
        return Err(Error::InvalidDataset("shots must be >= 1".into()));
    }
    let num_qubits = settings[0].num_qubits();
    let mut out = Vec::with_capacity(settings.len());
    for setting in settings {
        let povm = pauli_povm(setting);
        let probs = outcome_probabilities(rho, &povm)?;
        let counts = multinomial_conditional(&probs, shots, rng);
        out.push(SettingCounts {
            basis: setting.clone(),
            counts,
        });
    }
    Dataset::new(num_qubits, shots, out)
}

fn multinomial_conditional(probs: &[f64], shots: u64, rng: &mut impl Rng) -> Vec<u64> {
    let d = probs.len();
    let mut counts = vec![0u64; d];
    let mut remaining = shots;
    let mut tail: f64 = probs.iter().sum();
    for l in 0..d - 1 {
        if remaining == 0 {
            break;
        }
        let ratio = if tail > 0.0 {
            (probs[l] / tail).clamp(0.0, 1.0)
        } else {
            0.0
        };
        let draw = Binomial::new(remaining, ratio)
            .expect("ratio clamped to [0, 1]")
            .sample(rng);
        counts[l] = draw;
        remaining -= draw;
        tail -= probs[l];
    }
    counts[d - 1] = remaining;
    counts
}

/// Default shot count per setting, `25 * 2^Q`.
pub fn default_shots(num_qubits: usize) -> u64 {
    25 * (1u64 << num_qubits)
}
