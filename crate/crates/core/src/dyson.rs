//! Low-order time-dependent perturbation theory for the switched pulse,
//! with every time integral done in closed form.
//!
//! In the interaction picture the amplitude recursion is
//!
//!   ψ̃⁽ʲ⁾(t) = −i ∫₀ᵗ H̃_I(s) ψ̃⁽ʲ⁻¹⁾(s) ds,   ψ̃⁽⁰⁾ = |g,0⟩,
//!
//! and at the resonant point ω = ω_a = 1 every matrix element of H̃_I(s)
//! oscillates at an even integer frequency: the co-rotating transitions
//! |g,n⟩ ↔ |e,n∓1⟩ are static (frequency 0) while the counter-rotating
//! ones |g,n⟩ → |e,n+1⟩ and |e,n⟩ → |g,n−1⟩ carry e^{±2it}. Amplitudes
//! therefore stay inside the ring of quasi-polynomials Σ c t^p e^{ift}
//! with integer f, which is closed under ∫₀ᵗ, so the whole expansion is
//! exact up to floating-point roundoff: no quadrature enters.
//!
//! Order j populates only |q, n⟩ with q = e for odd j, q = g for even j,
//! and n ≡ j (mod 2), n ≤ j; everything stays in the +1 parity sector.
//! The truncated series is not normalized (the deficit is the weight the
//! kept orders would feed to higher ones), so states report their norm
//! and are normalized explicitly before any density-matrix work.

use nalgebra::DVector;
use num_complex::Complex64;
use std::collections::BTreeMap;

use crate::error::{Error, Result};
use crate::explorer::{
    bisect_threshold, ThresholdOrder, ThresholdOutcome, ThresholdParameter, TAU_RESOLUTION,
};
use crate::fock::{CVector, FockBasis, ONE, ZERO};
use crate::model::ModelParams;
use crate::state::JointState;
use crate::wigner::{negativity, wigner_function, Extent};

/// Highest expansion order the closed-form tables cover.
pub const MAX_ORDER: usize = 4;

/// A finite sum Σ c · t^p · e^{i f t} with integer frequencies f.
///
/// Exactly the function class the resonant expansion lives in; closed
/// under products with e^{ift}, scaling, addition, and ∫₀ᵗ.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct QuasiPoly {
    /// (frequency, power) → coefficient; BTreeMap keeps iteration and
    /// therefore floating-point summation order deterministic.
    terms: BTreeMap<(i32, u32), Complex64>,
}

impl QuasiPoly {
    pub fn zero() -> Self {
        QuasiPoly::default()
    }

    pub fn one() -> Self {
        let mut p = QuasiPoly::default();
        p.push(0, 0, ONE);
        p
    }

    pub fn is_zero(&self) -> bool {
        self.terms.is_empty()
    }

    fn push(&mut self, freq: i32, power: u32, coeff: Complex64) {
        let entry = self.terms.entry((freq, power)).or_insert(ZERO);
        *entry += coeff;
        if *entry == ZERO {
            self.terms.remove(&(freq, power));
        }
    }

    pub fn scale(mut self, k: Complex64) -> Self {
        if k == ZERO {
            return QuasiPoly::zero();
        }
        for coeff in self.terms.values_mut() {
            *coeff *= k;
        }
        self
    }

    /// Multiply by e^{i·df·t}.
    pub fn mul_exp(self, df: i32) -> Self {
        let mut out = QuasiPoly::default();
        for ((f, p), c) in self.terms {
            out.push(f + df, p, c);
        }
        out
    }

    pub fn add_assign(&mut self, other: &QuasiPoly) {
        for (&(f, p), &c) in &other.terms {
            self.push(f, p, c);
        }
    }

    /// Exact ∫₀ᵗ, term by term.
    ///
    /// For f = 0 the term integrates to c t^{p+1}/(p+1). Otherwise
    /// repeated integration by parts walks the power down,
    ///
    ///   ∫₀ᵗ s^p e^{ifs} ds = t^p e^{ift}/(if) − (p/(if)) ∫₀ᵗ s^{p−1} e^{ifs} ds,
    ///
    /// ending in ∫₀ᵗ e^{ifs} ds = (e^{ift} − 1)/(if), whose −1 is the sole
    /// source of new frequency-0 terms.
    pub fn integrate(&self) -> Self {
        let mut out = QuasiPoly::default();
        for (&(f, p), &c) in &self.terms {
            if f == 0 {
                out.push(0, p + 1, c / (p + 1) as f64);
                continue;
            }
            let i_f = Complex64::new(0.0, f as f64);
            let mut power = p;
            let mut coeff = c;
            loop {
                out.push(f, power, coeff / i_f);
                if power == 0 {
                    out.push(0, 0, -coeff / i_f);
                    break;
                }
                coeff = -coeff * power as f64 / i_f;
                power -= 1;
            }
        }
        out
    }

    pub fn eval(&self, t: f64) -> Complex64 {
        let mut sum = ZERO;
        for (&(f, p), &c) in &self.terms {
            sum += c * t.powi(p as i32) * Complex64::cis(f as f64 * t);
        }
        sum
    }

    pub fn term_count(&self) -> usize {
        self.terms.len()
    }
}

/// The expansion of the pulse propagator applied to |g,0⟩, all orders
/// 0..=k as quasi-polynomials in the pulse length.
///
/// Building the expansion costs a few hundred exact integrals once; each
/// later evaluation at a pulse length τ is a handful of complex
/// exponentials, which is what makes perturbative threshold scans cheap.
#[derive(Debug, Clone)]
pub struct DysonExpansion {
    params: ModelParams,
    order: usize,
    basis: FockBasis,
    /// orders[j][joint index] = interaction-picture amplitude of order j.
    orders: Vec<Vec<QuasiPoly>>,
}

/// Transitions H_I drives out of |q, n⟩ at resonance: (q', n', coupling,
/// interaction-picture frequency E_{q',n'} − E_{q,n}).
fn couplings(q: usize, n: usize, g: f64, n_max: usize) -> Vec<(usize, usize, f64, i32)> {
    let mut out = Vec::with_capacity(2);
    if q == 0 {
        if n >= 1 {
            out.push((1, n - 1, g * (n as f64).sqrt(), 0));
        }
        if n < n_max {
            out.push((1, n + 1, g * ((n + 1) as f64).sqrt(), 2));
        }
    } else {
        if n < n_max {
            out.push((0, n + 1, g * ((n + 1) as f64).sqrt(), 0));
        }
        if n >= 1 {
            out.push((0, n - 1, g * (n as f64).sqrt(), -2));
        }
    }
    out
}

impl DysonExpansion {
    /// Builds orders 0..=`order` for the given coupling.
    ///
    /// The closed-form frequency table assumes the resonant point, so
    /// `params` must have ω = ω_a = 1. Orders above [`MAX_ORDER`] are
    /// refused rather than silently extended.
    pub fn new(params: &ModelParams, order: usize) -> Result<Self> {
        if order > MAX_ORDER {
            return Err(Error::UnsupportedOrder { order });
        }
        if params.omega() != 1.0 || params.omega_a() != 1.0 {
            return Err(Error::InvalidParams {
                reason: format!(
                    "perturbative expansion requires the resonant point omega = omega_a = 1, \
                     got omega = {}, omega_a = {}",
                    params.omega(),
                    params.omega_a()
                ),
            });
        }
        // Order j reaches photon number j at most.
        let basis = FockBasis::new(order.max(1))?;
        let dim = basis.joint_dim();
        let mut orders = vec![vec![QuasiPoly::zero(); dim]; order + 1];
        orders[0][basis.joint_index(0, 0)] = QuasiPoly::one();
        let g = params.g();
        for j in 1..=order {
            let mut next = vec![QuasiPoly::zero(); dim];
            for q in 0..2 {
                for n in 0..=basis.n_max() {
                    let source = &orders[j - 1][basis.joint_index(q, n)];
                    if source.is_zero() {
                        continue;
                    }
                    for (q2, n2, coupling, freq) in couplings(q, n, g, basis.n_max()) {
                        let contribution = source
                            .clone()
                            .mul_exp(freq)
                            .integrate()
                            .scale(Complex64::new(0.0, -coupling));
                        next[basis.joint_index(q2, n2)].add_assign(&contribution);
                    }
                }
            }
            orders[j] = next;
        }
        Ok(DysonExpansion {
            params: *params,
            order,
            basis,
            orders,
        })
    }

    pub fn order(&self) -> usize {
        self.order
    }

    pub fn basis(&self) -> FockBasis {
        self.basis
    }

    pub fn params(&self) -> &ModelParams {
        &self.params
    }

    /// Interaction-picture amplitudes of a single order j at pulse length
    /// `tau`.
    pub fn order_amplitudes(&self, j: usize, tau: f64) -> Result<CVector> {
        let polys = self
            .orders
            .get(j)
            .ok_or(Error::UnsupportedOrder { order: j })?;
        Ok(CVector::from_iterator(
            self.basis.joint_dim(),
            polys.iter().map(|p| p.eval(tau)),
        ))
    }

    /// The truncated series at pulse length `tau`, in the Schrödinger
    /// picture and deliberately unnormalized.
    pub fn state_at(&self, tau: f64) -> Result<DysonState> {
        if !(tau.is_finite() && tau >= 0.0) {
            return Err(Error::InvalidParams {
                reason: format!("pulse length must be finite and >= 0, got {tau}"),
            });
        }
        let dim = self.basis.joint_dim();
        let mut amplitudes = CVector::zeros(dim);
        for polys in &self.orders {
            for (slot, poly) in polys.iter().enumerate() {
                amplitudes[slot] += poly.eval(tau);
            }
        }
        // Undo the interaction picture: |q,n⟩ evolves with E = n + q at
        // resonance (E_{g,n} = n, E_{e,n} = n + 1).
        for q in 0..2 {
            for n in 0..=self.basis.n_max() {
                let energy = n as f64 + q as f64;
                amplitudes[self.basis.joint_index(q, n)] *= Complex64::cis(-energy * tau);
            }
        }
        let norm = amplitudes.norm();
        Ok(DysonState {
            basis: self.basis,
            order: self.order,
            tau,
            amplitudes,
            norm,
        })
    }
}

/// One evaluated truncated series: unnormalized amplitudes plus the norm
/// report. ‖ψ‖ deviates from 1 by the weight the truncation dropped, so
/// the deviation doubles as an error estimate for the order used.
#[derive(Debug, Clone)]
pub struct DysonState {
    basis: FockBasis,
    order: usize,
    tau: f64,
    amplitudes: CVector,
    norm: f64,
}

impl DysonState {
    pub fn basis(&self) -> FockBasis {
        self.basis
    }

    pub fn order(&self) -> usize {
        self.order
    }

    pub fn tau(&self) -> f64 {
        self.tau
    }

    /// Unnormalized Schrödinger-picture amplitudes.
    pub fn amplitudes(&self) -> &CVector {
        &self.amplitudes
    }

    /// ‖ψ‖ of the truncated series; 1 minus the dropped weight.
    pub fn norm(&self) -> f64 {
        self.norm
    }

    /// The series rescaled to a valid unit-norm state.
    pub fn normalized(&self) -> Result<JointState> {
        if self.norm < 1e-14 {
            return Err(Error::NotNormalized {
                deviation: (self.norm - 1.0).abs(),
            });
        }
        let scaled = self.amplitudes.clone() * Complex64::from(1.0 / self.norm);
        JointState::new(self.basis, scaled, self.tau)
    }

    /// JSON document mirroring the JointState layout plus the norm report.
    pub fn to_json(&self) -> serde_json::Value {
        let amplitudes: Vec<[f64; 2]> = self.amplitudes.iter().map(|a| [a.re, a.im]).collect();
        serde_json::json!({
            "basis": { "n_max": self.basis.n_max() },
            "order": self.order,
            "tau": self.tau,
            "norm": self.norm,
            "amplitudes": amplitudes,
        })
    }
}

/// δ of the unconditional field state of the normalized order-k series.
pub fn perturbative_delta(expansion: &DysonExpansion, tau: f64, step: f64) -> Result<f64> {
    let field = expansion.state_at(tau)?.normalized()?.partial_trace_qubit();
    let grid = wigner_function(&field, Extent::Auto, step)?;
    Ok(negativity(&grid).delta)
}

/// Critical pulse length of the order-k δ onset by bisection over
/// `search`, with the same bracket contract as the exact finder.
///
/// Only k ∈ {2, 4} make sense here: odd orders leave the qubit-ground
/// sector of the initial state empty, so the first δ-bearing corrections
/// to the field state appear at even order.
pub fn perturbative_threshold(
    params: &ModelParams,
    order: usize,
    search: (f64, f64),
    epsilon: f64,
    step: f64,
) -> Result<ThresholdOutcome> {
    let order_tag = match order {
        2 => ThresholdOrder::Two,
        4 => ThresholdOrder::Four,
        _ => return Err(Error::UnsupportedOrder { order }),
    };
    let expansion = DysonExpansion::new(params, order)?;
    bisect_threshold(
        ThresholdParameter::Tau,
        order_tag,
        search,
        TAU_RESOLUTION,
        epsilon,
        |tau| perturbative_delta(&expansion, tau, step),
    )
}

/// Photon populations of the normalized unconditional field state, handy
/// for comparing the perturbative and exact pictures.
pub fn perturbative_populations(expansion: &DysonExpansion, tau: f64) -> Result<DVector<f64>> {
    Ok(expansion
        .state_at(tau)?
        .normalized()?
        .partial_trace_qubit()
        .populations())
}
