//! Joint qubit-field states, reduced field states, measurement conditioning.
//!
//! A pure joint state |Ψ⟩ = c_g|g⟩|φ_g⟩ + c_e|e⟩|φ_e⟩ is stored as one
//! amplitude vector of length 2(n_max+1). Tracing out the qubit gives the
//! unconditional field state ρ = |c_g|²|φ_g⟩⟨φ_g| + |c_e|²|φ_e⟩⟨φ_e|;
//! projecting the qubit onto |g⟩ or |e⟩ gives the pure conditional states
//! ρ_g = |φ_g⟩⟨φ_g| and ρ_e = |φ_e⟩⟨φ_e|.

use nalgebra::DVector;
use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::fock::{CMatrix, CVector, FockBasis, ONE};

/// Norm and Hermiticity checks on constructed states use this tolerance.
pub const STATE_TOLERANCE: f64 = 1e-12;

/// Default ceiling on the population of the top two Fock indices; more tail
/// mass than this means the truncation cannot be trusted.
pub const TAIL_TOLERANCE: f64 = 1e-10;

/// Qubit measurement outcome in the {|g⟩, |e⟩} basis.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum QubitOutcome {
    #[serde(rename = "g")]
    Ground,
    #[serde(rename = "e")]
    Excited,
}

impl QubitOutcome {
    pub fn index(self) -> usize {
        match self {
            QubitOutcome::Ground => 0,
            QubitOutcome::Excited => 1,
        }
    }

    /// σ_z eigenvalue under the σ_z|g⟩ = +|g⟩ convention.
    pub fn sigma_z_sign(self) -> f64 {
        match self {
            QubitOutcome::Ground => 1.0,
            QubitOutcome::Excited => -1.0,
        }
    }
}

/// Which preparation a field density matrix came from.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum FieldKind {
    Unconditional,
    ConditionedG,
    ConditionedE,
}

/// Normalized pure state on qubit ⊗ field.
///
/// `time` is the evolution time that produced the state, in units of 1/ω.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "JointStateDoc", into = "JointStateDoc")]
pub struct JointState {
    basis: FockBasis,
    amplitudes: CVector,
    time: f64,
}

impl JointState {
    /// Wraps an amplitude vector, enforcing ‖amplitudes‖ = 1 within 1e−12.
    pub fn new(basis: FockBasis, amplitudes: CVector, time: f64) -> Result<Self> {
        if amplitudes.len() != basis.joint_dim() {
            return Err(Error::DimensionMismatch {
                expected: basis.joint_dim(),
                actual: amplitudes.len(),
            });
        }
        let deviation = (amplitudes.norm() - 1.0).abs();
        if deviation > STATE_TOLERANCE {
            return Err(Error::NotNormalized { deviation });
        }
        if !(time >= 0.0) {
            return Err(Error::InvalidParams {
                reason: format!("time must be >= 0, got {time}"),
            });
        }
        Ok(Self {
            basis,
            amplitudes,
            time,
        })
    }

    /// Product basis state |q⟩|n⟩ at time 0.
    pub fn basis_state(basis: FockBasis, qubit: QubitOutcome, n: usize) -> Result<Self> {
        if n > basis.n_max() {
            return Err(Error::DimensionMismatch {
                expected: basis.n_max(),
                actual: n,
            });
        }
        let mut amplitudes = CVector::zeros(basis.joint_dim());
        amplitudes[basis.joint_index(qubit.index(), n)] = ONE;
        Self::new(basis, amplitudes, 0.0)
    }

    /// The initial condition of the switching protocol, |g⟩|0⟩.
    pub fn ground(basis: FockBasis) -> Self {
        Self::basis_state(basis, QubitOutcome::Ground, 0).expect("n = 0 always in range")
    }

    pub fn basis(&self) -> FockBasis {
        self.basis
    }

    pub fn amplitudes(&self) -> &CVector {
        &self.amplitudes
    }

    pub fn time(&self) -> f64 {
        self.time
    }

    /// Amplitude of |q⟩|n⟩.
    pub fn amplitude(&self, qubit: QubitOutcome, n: usize) -> Complex64 {
        self.amplitudes[self.basis.joint_index(qubit.index(), n)]
    }

    /// Field-amplitude block c_q·|φ_q⟩ for one qubit level (unnormalized).
    pub fn qubit_block(&self, qubit: QubitOutcome) -> CVector {
        let d = self.basis.field_dim();
        let start = qubit.index() * d;
        CVector::from_iterator(d, (start..start + d).map(|i| self.amplitudes[i]))
    }

    /// Population on the top two Fock indices, summed over both qubit levels.
    ///
    /// This is the truncation-health indicator: it must stay below
    /// [`TAIL_TOLERANCE`] for the cutoff to be trustworthy.
    pub fn tail_mass(&self) -> f64 {
        let n_max = self.basis.n_max();
        let mut mass = 0.0;
        for q in 0..2 {
            for n in [n_max - 1, n_max] {
                mass += self.amplitudes[self.basis.joint_index(q, n)].norm_sqr();
            }
        }
        mass
    }

    /// ⟨Ψ|Π|Ψ⟩ with Π = σ_z(−1)^{a†a}; lies in [−1, 1].
    pub fn parity_expectation(&self) -> f64 {
        let d = self.basis.field_dim();
        let mut expectation = 0.0;
        for q in 0..2 {
            let qubit_sign = if q == 0 { 1.0 } else { -1.0 };
            for n in 0..d {
                let fock_sign = if n % 2 == 0 { 1.0 } else { -1.0 };
                expectation += qubit_sign
                    * fock_sign
                    * self.amplitudes[self.basis.joint_index(q, n)].norm_sqr();
            }
        }
        expectation
    }

    /// Unconditional field state ρ = Tr_q |Ψ⟩⟨Ψ|.
    pub fn partial_trace_qubit(&self) -> FieldState {
        let d = self.basis.field_dim();
        let mut matrix = CMatrix::zeros(d, d);
        for q in 0..2 {
            let offset = q * d;
            for m in 0..d {
                let am = self.amplitudes[offset + m];
                if am.norm_sqr() == 0.0 {
                    continue;
                }
                for n in 0..d {
                    matrix[(m, n)] += am * self.amplitudes[offset + n].conj();
                }
            }
        }
        FieldState {
            basis: self.basis,
            matrix,
            kind: FieldKind::Unconditional,
        }
    }

    /// Projects the qubit onto `outcome` and returns the outcome probability
    /// together with the normalized conditional field state.
    pub fn condition_on_qubit(&self, outcome: QubitOutcome) -> Result<(f64, FieldState)> {
        let block = self.qubit_block(outcome);
        let probability = block.norm_squared();
        if probability < 1e-14 {
            return Err(Error::UndefinedConditional { probability });
        }
        let phi = block / Complex64::new(probability.sqrt(), 0.0);
        let d = self.basis.field_dim();
        let mut matrix = CMatrix::zeros(d, d);
        for m in 0..d {
            for n in 0..d {
                matrix[(m, n)] = phi[m] * phi[n].conj();
            }
        }
        let kind = match outcome {
            QubitOutcome::Ground => FieldKind::ConditionedG,
            QubitOutcome::Excited => FieldKind::ConditionedE,
        };
        Ok((
            probability,
            FieldState {
                basis: self.basis,
                matrix,
                kind,
            },
        ))
    }
}

/// Field density matrix in the Fock basis.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "FieldStateDoc", into = "FieldStateDoc")]
pub struct FieldState {
    basis: FockBasis,
    matrix: CMatrix,
    kind: FieldKind,
}

impl FieldState {
    /// Wraps a density matrix, enforcing Hermiticity and unit trace
    /// within 1e−12.
    pub fn new(basis: FockBasis, matrix: CMatrix, kind: FieldKind) -> Result<Self> {
        let d = basis.field_dim();
        if matrix.nrows() != d || matrix.ncols() != d {
            return Err(Error::DimensionMismatch {
                expected: d,
                actual: matrix.nrows().max(matrix.ncols()),
            });
        }
        let deviation = crate::fock::hermiticity_deviation(&matrix);
        if deviation > STATE_TOLERANCE {
            return Err(Error::NotHermitian { deviation });
        }
        let trace_dev = (matrix.trace() - ONE).norm();
        if trace_dev > STATE_TOLERANCE {
            return Err(Error::NotNormalized {
                deviation: trace_dev,
            });
        }
        Ok(Self {
            basis,
            matrix,
            kind,
        })
    }

    /// Fock state |n⟩⟨n|.
    pub fn fock(basis: FockBasis, n: usize) -> Result<Self> {
        if n > basis.n_max() {
            return Err(Error::DimensionMismatch {
                expected: basis.n_max(),
                actual: n,
            });
        }
        let d = basis.field_dim();
        let mut matrix = CMatrix::zeros(d, d);
        matrix[(n, n)] = ONE;
        Ok(Self {
            basis,
            matrix,
            kind: FieldKind::Unconditional,
        })
    }

    /// The vacuum |0⟩⟨0|.
    pub fn vacuum(basis: FockBasis) -> Self {
        Self::fock(basis, 0).expect("vacuum always in range")
    }

    pub fn basis(&self) -> FockBasis {
        self.basis
    }

    pub fn matrix(&self) -> &CMatrix {
        &self.matrix
    }

    pub fn kind(&self) -> FieldKind {
        self.kind
    }

    /// Diagonal populations p_n = ρ_nn.
    pub fn populations(&self) -> DVector<f64> {
        let d = self.basis.field_dim();
        DVector::from_iterator(d, (0..d).map(|n| self.matrix[(n, n)].re))
    }

    /// Tr ρ², the purity (1 for pure states).
    pub fn purity(&self) -> f64 {
        let d = self.basis.field_dim();
        let mut p = 0.0;
        for m in 0..d {
            for n in 0..d {
                // Tr ρ² = Σ_{mn} ρ_{mn} ρ_{nm} = Σ_{mn} |ρ_{mn}|² for Hermitian ρ.
                p += self.matrix[(m, n)].norm_sqr();
            }
        }
        p
    }
}

// ---------------------------------------------------------------------------
// JSON documents: complex numbers as [re, im] pairs.
// ---------------------------------------------------------------------------

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct JointStateDoc {
    basis: FockBasis,
    amplitudes: Vec<[f64; 2]>,
    time: f64,
}

impl From<JointState> for JointStateDoc {
    fn from(state: JointState) -> Self {
        JointStateDoc {
            basis: state.basis,
            amplitudes: state.amplitudes.iter().map(|z| [z.re, z.im]).collect(),
            time: state.time,
        }
    }
}

impl TryFrom<JointStateDoc> for JointState {
    type Error = String;

    fn try_from(doc: JointStateDoc) -> std::result::Result<Self, String> {
        let amplitudes = CVector::from_iterator(
            doc.amplitudes.len(),
            doc.amplitudes
                .iter()
                .map(|&[re, im]| Complex64::new(re, im)),
        );
        JointState::new(doc.basis, amplitudes, doc.time).map_err(|e| e.to_string())
    }
}

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct FieldStateDoc {
    basis: FockBasis,
    kind: FieldKind,
    matrix: Vec<Vec<[f64; 2]>>,
}

impl From<FieldState> for FieldStateDoc {
    fn from(state: FieldState) -> Self {
        let d = state.basis.field_dim();
        let matrix = (0..d)
            .map(|m| {
                (0..d)
                    .map(|n| {
                        let z = state.matrix[(m, n)];
                        [z.re, z.im]
                    })
                    .collect()
            })
            .collect();
        FieldStateDoc {
            basis: state.basis,
            kind: state.kind,
            matrix,
        }
    }
}

impl TryFrom<FieldStateDoc> for FieldState {
    type Error = String;

    fn try_from(doc: FieldStateDoc) -> std::result::Result<Self, String> {
        let d = doc.basis.field_dim();
        if doc.matrix.len() != d || doc.matrix.iter().any(|row| row.len() != d) {
            return Err(format!("matrix must be {d}x{d}"));
        }
        let matrix = CMatrix::from_fn(d, d, |m, n| {
            let [re, im] = doc.matrix[m][n];
            Complex64::new(re, im)
        });
        FieldState::new(doc.basis, matrix, doc.kind).map_err(|e| e.to_string())
    }
}
