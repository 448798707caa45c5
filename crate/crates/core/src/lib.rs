//! Simulation core for a qubit-field system with suddenly switched
//! ultrastrong coupling.
//!
//! The crate models a two-level atom coupled to a single cavity mode. The
//! coupling is switched on instantaneously, held for a pulse length τ, and
//! switched off. Because the counter-rotating terms do not conserve the bare
//! excitation number, a strong enough pulse converts the bare ground state
//! |g,0⟩ into field states with photons in them, and for long enough pulses
//! into states with negative Wigner regions. The crate provides:
//!
//! * exact propagation of the pulse by spectral decomposition
//!   ([`propagator`]),
//! * Wigner functions and the integrated-negativity measure δ ([`wigner`]),
//! * low-order time-dependent perturbation expansions in g for the same
//!   quantities ([`dyson`]),
//! * parameter-plane sweeps and threshold searches in (g, τ)
//!   ([`explorer`]).
//!
//! With the default `parallel` feature, grid and sweep fills are
//! data-parallel via rayon; results are bit-identical to the sequential
//! fallback because each output slot is filled independently and all
//! reductions run in a fixed sequential order.

// Validation guards use the `!(x > 0.0)` form on purpose: unlike
// `x <= 0.0`, it also rejects NaN.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod dyson;
pub mod error;
pub mod explorer;
pub mod fock;
pub mod model;
pub mod propagator;
pub mod state;
pub mod wigner;

pub use dyson::{DysonExpansion, DysonState, QuasiPoly};
pub use error::{Error, Result};
pub use explorer::{Conditioning, NegativitySurface, SweepSpec, ThresholdOutcome, ThresholdResult};
pub use fock::{CMatrix, CVector, FockBasis};
pub use model::{ModelParams, SwitchingProfile};
pub use propagator::SpectralCache;
pub use state::{FieldKind, FieldState, JointState, QubitOutcome};
pub use wigner::{Extent, NegativityResult, WignerGrid};
