//! Independent oracles shared by the integration tests.
//!
//! Everything here deliberately avoids the production code paths it checks:
//! the integrator never touches the spectral propagator, the eigensolver is
//! a hand-rolled complex Jacobi iteration, and the Wigner oracle evaluates
//! the displaced-parity expectation with its own matrix exponential.

#![allow(dead_code)]

use nalgebra::DVector;
use num_complex::Complex64;
use rand::Rng;

use dcesim_core::{CMatrix, CVector, FieldKind, FieldState, FockBasis};

const I: Complex64 = Complex64::new(0.0, 1.0);
const ONE: Complex64 = Complex64::new(1.0, 0.0);
const ZERO: Complex64 = Complex64::new(0.0, 0.0);

/// Classic fourth-order Runge-Kutta for dψ/dt = −iHψ with a constant H.
///
/// The step is adjusted to the nearest divisor of `tau` so the integration
/// lands on the endpoint exactly; for the steps used in the tests the
/// adjustment is below 0.002 %.
pub fn rk4_evolve(h: &CMatrix, psi0: &CVector, tau: f64, dt: f64) -> CVector {
    assert!(tau > 0.0 && dt > 0.0);
    let n_steps = (tau / dt).round().max(1.0) as usize;
    let dt = tau / n_steps as f64;
    let f = |psi: &CVector| -> CVector { h * psi * (-I) };
    let half = Complex64::from(0.5 * dt);
    let mut psi = psi0.clone();
    for _ in 0..n_steps {
        let k1 = f(&psi);
        let k2 = f(&(&psi + &k1 * half));
        let k3 = f(&(&psi + &k2 * half));
        let k4 = f(&(&psi + &k3 * Complex64::from(dt)));
        psi += (k1 + k2 * Complex64::from(2.0) + k3 * Complex64::from(2.0) + k4)
            * Complex64::from(dt / 6.0);
    }
    psi
}

/// Cyclic-sweep complex Jacobi diagonalization of a Hermitian matrix.
///
/// Returns eigenvalues (ascending) and the matching unitary of column
/// eigenvectors. Converges quadratically; 30 sweeps is far more than any
/// matrix in the tests needs.
pub fn jacobi_hermitian(h: &CMatrix) -> (DVector<f64>, CMatrix) {
    let n = h.nrows();
    assert_eq!(n, h.ncols());
    let mut a = h.clone();
    let mut v = CMatrix::identity(n, n);
    for _sweep in 0..30 {
        let mut off = 0.0;
        for p in 0..n {
            for q in (p + 1)..n {
                off += a[(p, q)].norm_sqr();
            }
        }
        if off.sqrt() < 1e-14 {
            break;
        }
        for p in 0..n {
            for q in (p + 1)..n {
                let apq = a[(p, q)];
                let m = apq.norm();
                if m < 1e-300 {
                    continue;
                }
                let phase = apq / Complex64::from(m);
                // J is the identity outside the (p,q) plane. In the plane:
                //   J_pp = c, J_pq = −s·e^{iφ}, J_qp = s·e^{−iφ}, J_qq = c
                // kills A'_pq when tan 2θ = 2m / (A_pp − A_qq).
                let theta = 0.5 * (2.0 * m).atan2(a[(p, p)].re - a[(q, q)].re);
                let (s, c) = theta.sin_cos();
                let cs = Complex64::from(c);
                let sp = Complex64::from(s) * phase;
                for k in 0..n {
                    let akp = a[(k, p)];
                    let akq = a[(k, q)];
                    a[(k, p)] = akp * cs + akq * sp.conj();
                    a[(k, q)] = -akp * sp + akq * cs;
                }
                for k in 0..n {
                    let apk = a[(p, k)];
                    let aqk = a[(q, k)];
                    a[(p, k)] = apk * cs + aqk * sp;
                    a[(q, k)] = -apk * sp.conj() + aqk * cs;
                }
                for k in 0..n {
                    let vkp = v[(k, p)];
                    let vkq = v[(k, q)];
                    v[(k, p)] = vkp * cs + vkq * sp.conj();
                    v[(k, q)] = -vkp * sp + vkq * cs;
                }
            }
        }
    }
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&i, &j| a[(i, i)].re.total_cmp(&a[(j, j)].re));
    let eigenvalues = DVector::from_iterator(n, order.iter().map(|&i| a[(i, i)].re));
    let mut sorted = CMatrix::zeros(n, n);
    for (col, &i) in order.iter().enumerate() {
        sorted.set_column(col, &v.column(i));
    }
    (eigenvalues, sorted)
}

/// exp(M) by scaling-and-squaring with a Taylor series on the scaled matrix.
pub fn cmatrix_exp(m: &CMatrix) -> CMatrix {
    let n = m.nrows();
    // 1-norm (max column sum) bounds the spectral radius.
    let norm = (0..n)
        .map(|j| (0..n).map(|i| m[(i, j)].norm()).sum::<f64>())
        .fold(0.0_f64, f64::max);
    let scalings = if norm > 0.5 {
        (norm / 0.5).log2().ceil() as u32
    } else {
        0
    };
    let scaled = m * Complex64::from(0.5_f64.powi(scalings as i32));
    let mut sum = CMatrix::identity(n, n);
    let mut term = CMatrix::identity(n, n);
    for j in 1..=40 {
        term = &term * &scaled * Complex64::from(1.0 / j as f64);
        sum += &term;
        let term_norm = term.iter().map(|c| c.norm()).fold(0.0_f64, f64::max);
        if term_norm < 1e-20 {
            break;
        }
    }
    for _ in 0..scalings {
        sum = &sum * &sum;
    }
    sum
}

/// W(x, p) as the displaced-parity expectation (1/π)·Tr[ρ D(α) Π D(α)†]
/// with α = (x + ip)/√2, evaluated on a padded Fock space so the
/// displacement operator's truncation error is negligible.
///
/// This is the defining formula of the convention used across the crate
/// (vacuum W(0,0) = 1/π) and shares no code with the production kernels.
pub fn displaced_parity_wigner(field: &FieldState, x: f64, p: f64) -> f64 {
    let small = field.basis().field_dim();
    let dim = small + 25;
    let alpha = Complex64::new(x, p) / Complex64::from(std::f64::consts::SQRT_2);
    // a and a† on the padded space.
    let mut gen = CMatrix::zeros(dim, dim);
    for n in 1..dim {
        let root = Complex64::from((n as f64).sqrt());
        gen[(n, n - 1)] += alpha * root; // α a†
        gen[(n - 1, n)] -= alpha.conj() * root; // −ᾱ a
    }
    let d = cmatrix_exp(&gen);
    // Tr[ρ D Π D†] with ρ zero-padded: only the small block of ρ matters.
    let mut trace = ZERO;
    let rho = field.matrix();
    for r in 0..small {
        for c in 0..small {
            if rho[(c, r)] == ZERO {
                continue;
            }
            // (D Π D†)_{rc} = Σ_k D_{rk} (−1)^k conj(D_{ck})
            let mut kernel = ZERO;
            for k in 0..dim {
                let sign = if k % 2 == 0 { 1.0 } else { -1.0 };
                kernel += d[(r, k)] * Complex64::from(sign) * d[(c, k)].conj();
            }
            trace += rho[(c, r)] * kernel;
        }
    }
    trace.re / std::f64::consts::PI
}

/// Random normalized complex vector with geometrically decaying magnitudes,
/// so auto extents stay modest.
pub fn random_decaying_vector<R: Rng>(rng: &mut R, dim: usize) -> CVector {
    let mut v = CVector::zeros(dim);
    for n in 0..dim {
        let scale = 0.6_f64.powi(n as i32);
        v[n] = Complex64::new(
            scale * (2.0 * rng.random::<f64>() - 1.0),
            scale * (2.0 * rng.random::<f64>() - 1.0),
        );
    }
    let norm = v.norm();
    v * Complex64::from(1.0 / norm)
}

/// Random rank-`rank` field density matrix on the given basis.
pub fn random_low_rank_state<R: Rng>(rng: &mut R, basis: FockBasis, rank: usize) -> FieldState {
    let d = basis.field_dim();
    let mut weights: Vec<f64> = (0..rank).map(|_| rng.random::<f64>() + 0.1).collect();
    let total: f64 = weights.iter().sum();
    for w in &mut weights {
        *w /= total;
    }
    let mut rho = CMatrix::zeros(d, d);
    for &w in &weights {
        let v = random_decaying_vector(rng, d);
        rho += &v * v.adjoint() * Complex64::from(w);
    }
    // Symmetrize away the last bits of rounding so the constructor's
    // Hermiticity check cannot trip.
    let rho = (&rho + rho.adjoint()) * Complex64::from(0.5);
    FieldState::new(basis, rho, FieldKind::Unconditional).expect("construction is exact")
}
