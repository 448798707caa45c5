//! Truncated Fock space and the operator algebra on qubit ⊗ field.
//!
//! The field lives on photon numbers 0..=n_max (dimension d = n_max + 1),
//! the joint space on 2d amplitudes ordered qubit-slow / Fock-fast:
//! index q·d + n holds the amplitude of |q⟩|n⟩ with q = 0 ↦ |g⟩, q = 1 ↦ |e⟩.
//!
//! Sign convention: σ_z|g⟩ = +|g⟩ and σ_z|e⟩ = −|e⟩, so that
//! H_0 = −½ω_a σ_z assigns the qubit ground state the lower energy and
//! σ_+|g⟩ = |e⟩, σ_−|e⟩ = |g⟩ act as ladder operators.

use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

pub type CMatrix = DMatrix<Complex64>;
pub type CVector = DVector<Complex64>;

pub const ONE: Complex64 = Complex64::new(1.0, 0.0);
pub const ZERO: Complex64 = Complex64::new(0.0, 0.0);

/// Truncated Fock basis retaining photon numbers 0..=n_max.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FockBasis {
    n_max: usize,
}

impl FockBasis {
    pub fn new(n_max: usize) -> Result<Self> {
        if n_max < 1 {
            return Err(Error::InvalidParams {
                reason: format!("n_max must be >= 1, got {n_max}"),
            });
        }
        Ok(Self { n_max })
    }

    pub fn n_max(&self) -> usize {
        self.n_max
    }

    /// Field dimension d = n_max + 1.
    pub fn field_dim(&self) -> usize {
        self.n_max + 1
    }

    /// Joint qubit ⊗ field dimension 2d.
    pub fn joint_dim(&self) -> usize {
        2 * self.field_dim()
    }

    /// Basis with twice the photon-number cutoff, for truncation escalation.
    pub fn doubled(&self) -> Self {
        Self {
            n_max: 2 * self.n_max,
        }
    }

    /// Flat joint index of |q⟩|n⟩ (qubit slow, Fock fast).
    pub fn joint_index(&self, qubit: usize, n: usize) -> usize {
        debug_assert!(qubit < 2 && n <= self.n_max);
        qubit * self.field_dim() + n
    }
}

/// Annihilation operator a on the truncated basis: a|n⟩ = √n |n−1⟩.
///
/// Entry (n−1, n) = √n for 1 ≤ n ≤ n_max, everything else zero.
pub fn annihilation(basis: FockBasis) -> CMatrix {
    let d = basis.field_dim();
    let mut a = CMatrix::zeros(d, d);
    for n in 1..d {
        a[(n - 1, n)] = Complex64::new((n as f64).sqrt(), 0.0);
    }
    a
}

/// Creation operator a† = (annihilation)†.
pub fn creation(basis: FockBasis) -> CMatrix {
    annihilation(basis).adjoint()
}

/// Photon number operator a†a = diag(0, 1, ..., n_max).
pub fn number_operator(basis: FockBasis) -> CMatrix {
    let d = basis.field_dim();
    CMatrix::from_fn(d, d, |i, j| {
        if i == j {
            Complex64::new(i as f64, 0.0)
        } else {
            ZERO
        }
    })
}

pub fn field_identity(basis: FockBasis) -> CMatrix {
    CMatrix::identity(basis.field_dim(), basis.field_dim())
}

/// σ_z with the |g⟩-first ordering: diag(+1, −1).
pub fn sigma_z() -> CMatrix {
    CMatrix::from_row_slice(2, 2, &[ONE, ZERO, ZERO, -ONE])
}

/// σ_+ = |e⟩⟨g|.
pub fn sigma_plus() -> CMatrix {
    CMatrix::from_row_slice(2, 2, &[ZERO, ZERO, ONE, ZERO])
}

/// σ_− = |g⟩⟨e|.
pub fn sigma_minus() -> CMatrix {
    CMatrix::from_row_slice(2, 2, &[ZERO, ONE, ZERO, ZERO])
}

pub fn qubit_identity() -> CMatrix {
    CMatrix::identity(2, 2)
}

/// Kronecker product qubit_op ⊗ field_op in the qubit-slow ordering.
pub fn qubit_field_tensor(qubit_op: &CMatrix, field_op: &CMatrix) -> Result<CMatrix> {
    if qubit_op.nrows() != 2 || qubit_op.ncols() != 2 {
        return Err(Error::DimensionMismatch {
            expected: 2,
            actual: qubit_op.nrows().max(qubit_op.ncols()),
        });
    }
    if field_op.nrows() != field_op.ncols() {
        return Err(Error::DimensionMismatch {
            expected: field_op.nrows(),
            actual: field_op.ncols(),
        });
    }
    Ok(qubit_op.kronecker(field_op))
}

/// Max entry-wise deviation from Hermiticity, max |A_{ij} − conj(A_{ji})|.
pub fn hermiticity_deviation(m: &CMatrix) -> f64 {
    let mut dev: f64 = 0.0;
    for i in 0..m.nrows() {
        for j in i..m.ncols() {
            dev = dev.max((m[(i, j)] - m[(j, i)].conj()).norm());
        }
    }
    dev
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;

    #[test]
    fn annihilation_n_max_1() {
        let basis = FockBasis::new(1).unwrap();
        let a = annihilation(basis);
        assert_eq!(a.nrows(), 2);
        assert_eq!(a[(0, 1)], ONE);
        assert_eq!(a[(0, 0)], ZERO);
        assert_eq!(a[(1, 0)], ZERO);
        assert_eq!(a[(1, 1)], ZERO);
    }

    #[test]
    fn annihilation_sqrt_entries() {
        let basis = FockBasis::new(2).unwrap();
        let a = annihilation(basis);
        assert_abs_diff_eq!(a[(1, 2)].re, 2.0_f64.sqrt(), epsilon = 1e-15);
        assert_eq!(a[(1, 2)].im, 0.0);
    }

    #[test]
    fn number_operator_is_adjoint_product() {
        let basis = FockBasis::new(7).unwrap();
        let a = annihilation(basis);
        let n = a.adjoint() * &a;
        for i in 0..basis.field_dim() {
            assert_abs_diff_eq!(n[(i, i)].re, i as f64, epsilon = 1e-14);
        }
        assert_abs_diff_eq!((&n - number_operator(basis)).norm(), 0.0, epsilon = 1e-13);
    }

    #[test]
    fn tensor_of_identities_is_identity() {
        let basis = FockBasis::new(3).unwrap();
        let id = qubit_field_tensor(&qubit_identity(), &field_identity(basis)).unwrap();
        assert_eq!(id, CMatrix::identity(8, 8));
    }

    #[test]
    fn sigma_z_sign_convention() {
        // σ_z ⊗ 1 applied to |g⟩|0⟩ must return +|g⟩|0⟩: the ground state
        // minimizes H_0 = −½ω_a σ_z.
        let basis = FockBasis::new(2).unwrap();
        let op = qubit_field_tensor(&sigma_z(), &field_identity(basis)).unwrap();
        let mut g0 = CVector::zeros(basis.joint_dim());
        g0[basis.joint_index(0, 0)] = ONE;
        let out = &op * &g0;
        assert_eq!(out, g0);
    }

    #[test]
    fn sigma_plus_annihilation_ladder() {
        // (σ_+ ⊗ a) |g⟩|1⟩ = |e⟩|0⟩
        let basis = FockBasis::new(2).unwrap();
        let op = qubit_field_tensor(&sigma_plus(), &annihilation(basis)).unwrap();
        let mut g1 = CVector::zeros(basis.joint_dim());
        g1[basis.joint_index(0, 1)] = ONE;
        let out = &op * &g1;
        let mut e0 = CVector::zeros(basis.joint_dim());
        e0[basis.joint_index(1, 0)] = ONE;
        assert_abs_diff_eq!((out - e0).norm(), 0.0, epsilon = 1e-15);
    }

    #[test]
    fn tensor_rejects_non_square_field_op() {
        let err = qubit_field_tensor(&sigma_z(), &CMatrix::zeros(2, 3)).unwrap_err();
        assert!(matches!(err, Error::DimensionMismatch { .. }));
    }

    #[test]
    fn basis_requires_n_max_at_least_one() {
        assert!(FockBasis::new(0).is_err());
        assert!(FockBasis::new(1).is_ok());
    }
}
