//! Quantum Rabi Hamiltonian with a suddenly switched coupling.
//!
//! H(t) = H₀ + f(t)·H_I with
//!
//!   H₀  = −½ ω_a σ_z + ω(a†a + ½),
//!   H_I = g σ₊(a† + a) + g σ₋(a† + a),
//!
//! under the σ_z|g⟩ = +|g⟩ convention, so the bare energies at resonance
//! (ω = ω_a) are E_{g,n} = nω and E_{e,n} = (n+1)ω. The switching profile
//! f(t) is a unit step on [0, τ]: the coupling is turned on instantaneously,
//! held constant, and turned off again, which is what makes the bare ground
//! state |g,0⟩ evolve at all.
//!
//! Dropping the counter-rotating terms σ₊a† and σ₋a yields the
//! Jaynes-Cummings form, which conserves the bare excitation number and
//! serves as the null model: it produces no photons from |g,0⟩.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::fock::{
    annihilation, creation, field_identity, number_operator, qubit_field_tensor, qubit_identity,
    sigma_minus, sigma_plus, sigma_z, CMatrix, FockBasis, ONE,
};

/// Time profile of the interaction switching.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SwitchingProfile {
    /// f(t) = 1 for 0 ≤ t ≤ τ, 0 otherwise.
    Step,
}

impl SwitchingProfile {
    pub fn amplitude(self, t: f64, tau: f64) -> f64 {
        match self {
            SwitchingProfile::Step => {
                if (0.0..=tau).contains(&t) {
                    1.0
                } else {
                    0.0
                }
            }
        }
    }
}

/// Physical parameters of the model, in units where ħ = 1.
///
/// Frequencies are in units of ω (so the resonant case is ω = ω_a = 1)
/// and the coupling g is in the same units; g ≳ 0.1 is the ultrastrong
/// regime where the RWA breaks down.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, try_from = "ModelParamsDoc")]
pub struct ModelParams {
    omega: f64,
    omega_a: f64,
    g: f64,
}

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct ModelParamsDoc {
    omega: f64,
    omega_a: f64,
    g: f64,
}

impl TryFrom<ModelParamsDoc> for ModelParams {
    type Error = String;

    fn try_from(doc: ModelParamsDoc) -> std::result::Result<Self, String> {
        ModelParams::new(doc.omega, doc.omega_a, doc.g).map_err(|e| e.to_string())
    }
}

impl ModelParams {
    pub fn new(omega: f64, omega_a: f64, g: f64) -> Result<Self> {
        if !(omega > 0.0) || !omega.is_finite() {
            return Err(Error::InvalidParams {
                reason: format!("field frequency must be positive, got {omega}"),
            });
        }
        if !(omega_a > 0.0) || !omega_a.is_finite() {
            return Err(Error::InvalidParams {
                reason: format!("qubit frequency must be positive, got {omega_a}"),
            });
        }
        if !(g >= 0.0) || !g.is_finite() {
            return Err(Error::InvalidParams {
                reason: format!("coupling must be >= 0, got {g}"),
            });
        }
        Ok(Self { omega, omega_a, g })
    }

    /// Resonant parameters ω = ω_a = 1 with coupling `g`.
    pub fn resonant(g: f64) -> Result<Self> {
        Self::new(1.0, 1.0, g)
    }

    pub fn omega(&self) -> f64 {
        self.omega
    }

    pub fn omega_a(&self) -> f64 {
        self.omega_a
    }

    pub fn g(&self) -> f64 {
        self.g
    }

    /// τ = π/2g, the Jaynes-Cummings time to swap |e,0⟩ ↔ |g,1⟩.
    ///
    /// Used as the natural pulse-length unit when comparing couplings.
    pub fn transfer_time(&self) -> Result<f64> {
        if self.g == 0.0 {
            return Err(Error::InvalidParams {
                reason: "transfer time is undefined at g = 0".into(),
            });
        }
        Ok(std::f64::consts::PI / (2.0 * self.g))
    }
}

/// Bare Hamiltonian H₀ = −½ ω_a σ_z ⊗ I + ω I ⊗ (a†a + ½).
pub fn build_h0(params: &ModelParams, basis: FockBasis) -> CMatrix {
    let qubit = sigma_z().map(|z| z * (-0.5 * params.omega_a));
    let number = number_operator(basis);
    let field = (number + field_identity(basis).map(|z| z * 0.5)).map(|z| z * params.omega);
    let h_qubit = qubit_field_tensor(&qubit, &field_identity(basis))
        .expect("sigma_z is 2x2 and identity is square");
    let h_field =
        qubit_field_tensor(&qubit_identity(), &field).expect("identity is 2x2 and field is square");
    h_qubit + h_field
}

/// Interaction Hamiltonian with the coupling at full strength (f = 1).
///
/// With `rwa` the counter-rotating terms σ₊a† and σ₋a are dropped.
pub fn build_interaction(params: &ModelParams, basis: FockBasis, rwa: bool) -> CMatrix {
    let a = annihilation(basis);
    let adag = creation(basis);
    let (raise_field, lower_field) = if rwa {
        // σ₊a + σ₋a†: conserves σ_z/2-excitation plus photon number.
        (a.clone(), adag.clone())
    } else {
        (&a + &adag, &a + &adag)
    };
    let up = qubit_field_tensor(&sigma_plus(), &raise_field).expect("sigma_plus is 2x2");
    let down = qubit_field_tensor(&sigma_minus(), &lower_field).expect("sigma_minus is 2x2");
    (up + down).map(|z| z * params.g)
}

/// Full Hamiltonian H₀ + H_I while the coupling is on.
pub fn build_hamiltonian(params: &ModelParams, basis: FockBasis, rwa: bool) -> CMatrix {
    build_h0(params, basis) + build_interaction(params, basis, rwa)
}

/// Parity Π = σ_z ⊗ (−1)^{a†a}; commutes with H both with and without RWA.
pub fn parity_operator(basis: FockBasis) -> CMatrix {
    let d = basis.field_dim();
    let field_parity = CMatrix::from_fn(d, d, |m, n| {
        if m == n {
            if m % 2 == 0 {
                ONE
            } else {
                -ONE
            }
        } else {
            num_complex::Complex64::new(0.0, 0.0)
        }
    });
    qubit_field_tensor(&sigma_z(), &field_parity).expect("sigma_z is 2x2")
}
