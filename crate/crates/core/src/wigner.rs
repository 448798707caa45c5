//! Wigner function on a phase-space grid and the negativity measure δ.
//!
//! Convention (fixed here because published δ values are meaningless without
//! one): ħ = 1, x = (a + a†)/√2, p = (a − a†)/(i√2), so the vacuum has
//! variance ½ in both quadratures and ∬ W dx dp = 1. In the Fock basis
//!
//!   W(x, p) = Σ_{m,n} ρ_{mn} A_{nm}(x, p),
//!
//! with u = x² + p², z = √2(x + ip), and, for n ≥ m,
//!
//!   A_{nm} = (1/π)(−1)^m √(m!/n!) z^{n−m} e^{−u} L_m^{(n−m)}(2u),
//!
//! the remaining half following from A_{mn} = conj(A_{nm}). The diagonal
//! reduces to the closed form A_{nn} = ((−1)ⁿ/π) e^{−u} L_n(2u).
//!
//! Evaluation folds the √(m!/n!) factor and e^{−u} into the recurrence
//! start logarithmically, then walks the normalized three-term Laguerre
//! recurrence upward in m. Every intermediate is a displaced-parity matrix
//! element, bounded by 1 in magnitude, so the recurrence neither overflows
//! nor loses the result at n ≈ 100. Because ρ is Hermitian the k-th
//! off-diagonal band contributes 2·Re(ρ_{m,m+k} e^{ikθ}) R_{m,k}(u) with a
//! real radial factor R, so the computed W is real by construction; the
//! classic complex kernel sum survives only as a test reference.
//!
//! δ = ∬ [|W| − W] dx dp is evaluated by composite Simpson quadrature on
//! the same grid, with subcell resolution of the kink that |W| has on the
//! nodal curve: a 2×2-cell Simpson panel whose node values change sign is
//! integrated as the clipped panel interpolant on a refined subgrid, which
//! removes the O(step²) kink error plain node quadrature would commit.
//! The result depends only on grid values, is deterministic, is exactly
//! twice the integrated negative mass, and is exactly zero when no grid
//! node is negative.

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

#[cfg(feature = "parallel")]
use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::state::FieldState;

/// Matrix entries at or below this magnitude are dropped from the kernel
/// sum; the induced error in W is orders of magnitude below every stated
/// tolerance.
const SUPPORT_CUTOFF: f64 = 1e-18;

/// Grids are considered to capture the state once |W| on the boundary is
/// below this.
pub const BOUNDARY_TOLERANCE: f64 = 1e-8;

/// Default grid spacing.
pub const DEFAULT_STEP: f64 = 0.05;

/// Phase-space extent choice for [`wigner_function`].
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Extent {
    /// Extent from the state's own photon support via [`auto_extent`],
    /// enlarged further if the boundary check fails.
    Auto,
    /// Fixed half-width: the grid spans [−L, L]² (caller's responsibility
    /// if the boundary check fails).
    Fixed(f64),
}

/// W sampled on a uniform, origin-centred grid.
///
/// `values` is row-major with x as the outer (row) index: the node (i, j)
/// is at (x_min + i·step, p_min + j·step). Point counts are odd by
/// construction so that composite Simpson weights apply directly and the
/// origin is always a node.
#[derive(Debug, Clone, PartialEq)]
pub struct WignerGrid {
    x_min: f64,
    x_max: f64,
    p_min: f64,
    p_max: f64,
    step: f64,
    nx: usize,
    np: usize,
    values: Vec<f64>,
}

impl WignerGrid {
    pub fn x_min(&self) -> f64 {
        self.x_min
    }

    pub fn x_max(&self) -> f64 {
        self.x_max
    }

    pub fn p_min(&self) -> f64 {
        self.p_min
    }

    pub fn p_max(&self) -> f64 {
        self.p_max
    }

    pub fn step(&self) -> f64 {
        self.step
    }

    /// Number of x nodes (odd).
    pub fn nx(&self) -> usize {
        self.nx
    }

    /// Number of p nodes (odd).
    pub fn np(&self) -> usize {
        self.np
    }

    pub fn x_at(&self, i: usize) -> f64 {
        self.x_min + i as f64 * self.step
    }

    pub fn p_at(&self, j: usize) -> f64 {
        self.p_min + j as f64 * self.step
    }

    pub fn value(&self, i: usize, j: usize) -> f64 {
        self.values[i * self.np + j]
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    /// ∬ W dx dp by composite Simpson; 1 within 1e−6 for a capturing grid.
    pub fn normalization(&self) -> f64 {
        let wx = simpson_weights(self.nx, self.step);
        let wp = simpson_weights(self.np, self.step);
        let mut total = 0.0;
        for (i, wxi) in wx.iter().enumerate() {
            let mut row = 0.0;
            for (j, wpj) in wp.iter().enumerate() {
                row += wpj * self.value(i, j);
            }
            total += wxi * row;
        }
        total
    }

    /// Largest |W| on the grid boundary; should be below
    /// [`BOUNDARY_TOLERANCE`] or the extent is too small.
    pub fn boundary_max(&self) -> f64 {
        let mut m = 0.0_f64;
        for j in 0..self.np {
            m = m.max(self.value(0, j).abs());
            m = m.max(self.value(self.nx - 1, j).abs());
        }
        for i in 0..self.nx {
            m = m.max(self.value(i, 0).abs());
            m = m.max(self.value(i, self.np - 1).abs());
        }
        m
    }

    /// CSV rows "x,p,w", row-major in x then p, preceded by `comments`
    /// (written as `# `-prefixed lines) and the header line.
    pub fn write_csv<W: std::io::Write>(&self, out: &mut W, comments: &[String]) -> Result<()> {
        for line in comments {
            writeln!(out, "# {line}")?;
        }
        writeln!(out, "x,p,w")?;
        for i in 0..self.nx {
            let x = self.x_at(i);
            for j in 0..self.np {
                writeln!(
                    out,
                    "{},{},{}",
                    fmt17(x),
                    fmt17(self.p_at(j)),
                    fmt17(self.value(i, j))
                )?;
            }
        }
        Ok(())
    }

    /// Gnuplot-ready matrix: one line per x node with the W values across
    /// p separated by spaces, as one blank-line-terminated block. Axis
    /// ranges go into `# `-prefixed comments.
    pub fn write_gnuplot<W: std::io::Write>(&self, out: &mut W, comments: &[String]) -> Result<()> {
        for line in comments {
            writeln!(out, "# {line}")?;
        }
        writeln!(
            out,
            "# x in [{}, {}], p in [{}, {}], step {}",
            fmt17(self.x_min),
            fmt17(self.x_max),
            fmt17(self.p_min),
            fmt17(self.p_max),
            fmt17(self.step)
        )?;
        for i in 0..self.nx {
            let row: Vec<String> = (0..self.np).map(|j| fmt17(self.value(i, j))).collect();
            writeln!(out, "{}", row.join(" "))?;
        }
        writeln!(out)?;
        Ok(())
    }
}

/// Integrated negativity of one grid.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NegativityResult {
    /// δ = ∬ [|W| − W] dx dp ≥ 0.
    pub delta: f64,
    /// ∫_{W<0} |W| = δ/2.
    pub negative_mass: f64,
    /// ∬ W dx dp of the same grid (health indicator, 1 within 1e−6).
    pub normalization: f64,
    /// Grid half-width that produced the value.
    pub extent: f64,
    /// Grid spacing that produced the value.
    pub step: f64,
}

/// Formats with 17 significant digits, enough to round-trip f64 exactly.
pub(crate) fn fmt17(v: f64) -> String {
    format!("{v:.16e}")
}

/// Composite Simpson weights for `n` (odd) uniformly spaced points.
pub fn simpson_weights(n: usize, step: f64) -> Vec<f64> {
    assert!(n >= 3 && n % 2 == 1, "Simpson needs an odd point count");
    let scale = step / 3.0;
    (0..n)
        .map(|i| {
            let w = if i == 0 || i == n - 1 {
                1.0
            } else if i % 2 == 1 {
                4.0
            } else {
                2.0
            };
            w * scale
        })
        .collect()
}

/// Half-width L = √(2·n_eff + 1) + 3 where n_eff is the smallest n with
/// cumulative population ≥ 1 − 1e−8.
///
/// √(2n+1) is the classical turning radius of |n⟩ in these quadratures;
/// three extra units of vacuum width push every populated state's |W|
/// below 1e−8 at the boundary.
pub fn auto_extent(field: &FieldState) -> f64 {
    let populations = field.populations();
    let mut cumulative = 0.0;
    let mut n_eff = populations.len() - 1;
    for (n, &p) in populations.iter().enumerate() {
        cumulative += p;
        if cumulative >= 1.0 - 1e-8 {
            n_eff = n;
            break;
        }
    }
    (2.0 * n_eff as f64 + 1.0).sqrt() + 3.0
}

// ---------------------------------------------------------------------------
// Kernel evaluation
// ---------------------------------------------------------------------------

/// Per-band contents of ρ above the support cutoff.
struct Bands {
    /// Effective dimension: rows ≥ d_eff hold nothing above the cutoff.
    d_eff: usize,
    /// ρ_mm (real by Hermiticity).
    diag: Vec<f64>,
    /// Band k (index k−1): ρ_{m,m+k} for m in 0..d_eff−k, or None when the
    /// whole band is below the cutoff (parity-even states have no odd
    /// bands at all, halving the work).
    off: Vec<Option<Vec<Complex64>>>,
}

impl Bands {
    fn new(field: &FieldState) -> Self {
        let rho = field.matrix();
        let d = rho.nrows();
        let mut d_eff = 1;
        for m in 0..d {
            for n in 0..d {
                if rho[(m, n)].norm() > SUPPORT_CUTOFF {
                    d_eff = d_eff.max(m + 1).max(n + 1);
                }
            }
        }
        let diag = (0..d_eff).map(|m| rho[(m, m)].re).collect();
        let off = (1..d_eff)
            .map(|k| {
                let band: Vec<Complex64> = (0..d_eff - k).map(|m| rho[(m, m + k)]).collect();
                if band.iter().any(|z| z.norm() > SUPPORT_CUTOFF) {
                    Some(band)
                } else {
                    None
                }
            })
            .collect();
        Bands { d_eff, diag, off }
    }
}

/// Recurrence coefficient tables for the normalized radial factors
/// R_{m,k}(u) = √(m!/(m+k)!) (2u)^{k/2} e^{−u} L_m^{(k)}(2u):
///
///   R_{m+1,k} = [(2m+k+1 − 2u) R_{m,k} − √(m(m+k)) R_{m−1,k}]
///               / √((m+1)(m+k+1)).
///
/// Everything u-independent is precomputed once per grid.
struct KernelTables {
    /// lnfact[k] = ln k!.
    lnfact: Vec<f64>,
    /// inv_s[k][m] = 1/√((m+1)(m+k+1)).
    inv_s: Vec<Vec<f64>>,
    /// b[k][m] = √(m(m+k))/√((m+1)(m+k+1)).
    b: Vec<Vec<f64>>,
}

impl KernelTables {
    fn new(d_eff: usize) -> Self {
        let mut lnfact = vec![0.0; d_eff];
        for k in 1..d_eff {
            lnfact[k] = lnfact[k - 1] + (k as f64).ln();
        }
        let mut inv_s = Vec::with_capacity(d_eff);
        let mut b = Vec::with_capacity(d_eff);
        for k in 0..d_eff {
            let len = d_eff - k;
            let mut s_row = Vec::with_capacity(len);
            let mut b_row = Vec::with_capacity(len);
            for m in 0..len {
                let mf = m as f64;
                let kf = k as f64;
                let s = ((mf + 1.0) * (mf + kf + 1.0)).sqrt();
                s_row.push(1.0 / s);
                b_row.push((mf * (mf + kf)).sqrt() / s);
            }
            inv_s.push(s_row);
            b.push(b_row);
        }
        KernelTables { lnfact, inv_s, b }
    }

    /// Σ_m (−1)^m R_{m,k}(u) · weight[m] for one band at radial point u.
    fn band_sum(&self, k: usize, u: f64, weights: impl Iterator<Item = f64>) -> f64 {
        let y = 2.0 * u;
        let r0 = if k == 0 {
            (-u).exp()
        } else if y > 0.0 {
            (0.5 * (k as f64) * y.ln() - u - 0.5 * self.lnfact[k]).exp()
        } else {
            return 0.0;
        };
        let inv_s = &self.inv_s[k];
        let b = &self.b[k];
        let mut r_prev = 0.0;
        let mut r = r0;
        let mut sign = 1.0;
        let mut acc = 0.0;
        for (m, w) in weights.enumerate() {
            acc += sign * r * w;
            let a = (2 * m + k + 1) as f64;
            let r_next = (a - y) * inv_s[m] * r - b[m] * r_prev;
            r_prev = r;
            r = r_next;
            sign = -sign;
        }
        acc
    }
}

/// W at a single phase-space point.
fn eval_point(tables: &KernelTables, bands: &Bands, x: f64, p: f64) -> f64 {
    let u = x * x + p * p;
    let mut total = tables.band_sum(0, u, bands.diag.iter().copied());
    if u > 0.0 {
        let unit = Complex64::new(x, p) / u.sqrt();
        let mut phase = Complex64::new(1.0, 0.0);
        for (k_minus_1, band) in bands.off.iter().enumerate() {
            phase *= unit;
            if let Some(entries) = band {
                let ph = phase;
                total +=
                    tables.band_sum(k_minus_1 + 1, u, entries.iter().map(|z| 2.0 * (z * ph).re));
            }
        }
    }
    total / std::f64::consts::PI
}

/// W at one point (x, p); convenience wrapper for probes at the origin.
pub fn wigner_point(field: &FieldState, x: f64, p: f64) -> f64 {
    let bands = Bands::new(field);
    let tables = KernelTables::new(bands.d_eff);
    eval_point(&tables, &bands, x, p)
}

/// W on a uniform grid of spacing `step` spanning [−L, L]².
///
/// With [`Extent::Auto`] the half-width starts at [`auto_extent`] and grows
/// until the boundary values pass [`BOUNDARY_TOLERANCE`]. The node count
/// per axis is 2·⌈L/step⌉ + 1: odd, symmetric, origin included.
pub fn wigner_function(field: &FieldState, extent: Extent, step: f64) -> Result<WignerGrid> {
    if !(step > 0.0) || !step.is_finite() {
        return Err(Error::InvalidGrid {
            reason: format!("step must be positive, got {step}"),
        });
    }
    let (mut half_width, auto) = match extent {
        Extent::Auto => (auto_extent(field), true),
        Extent::Fixed(l) => (l, false),
    };
    if !(half_width > 0.0) || !half_width.is_finite() {
        return Err(Error::InvalidGrid {
            reason: format!("extent must be positive, got {half_width}"),
        });
    }
    let bands = Bands::new(field);
    let tables = KernelTables::new(bands.d_eff);
    let mut attempts = 0;
    loop {
        let grid = fill_grid(&tables, &bands, half_width, step);
        if !auto || grid.boundary_max() <= BOUNDARY_TOLERANCE || attempts >= 5 {
            return Ok(grid);
        }
        half_width += 1.0;
        attempts += 1;
    }
}

fn fill_grid(tables: &KernelTables, bands: &Bands, half_width: f64, step: f64) -> WignerGrid {
    let half_nodes = (half_width / step).ceil() as usize;
    let n = 2 * half_nodes + 1;
    let lo = -(half_nodes as f64) * step;
    let coord = |idx: usize| lo + idx as f64 * step;
    let mut values = vec![0.0; n * n];

    let fill_row = |(i, row): (usize, &mut [f64])| {
        let x = coord(i);
        for (j, slot) in row.iter_mut().enumerate() {
            *slot = eval_point(tables, bands, x, coord(j));
        }
    };

    #[cfg(feature = "parallel")]
    values.par_chunks_mut(n).enumerate().for_each(fill_row);
    #[cfg(not(feature = "parallel"))]
    values.chunks_mut(n).enumerate().for_each(fill_row);

    WignerGrid {
        x_min: lo,
        x_max: -lo,
        p_min: lo,
        p_max: -lo,
        step,
        nx: n,
        np: n,
        values,
    }
}

/// Sub-intervals per axis when a sign-mixed panel is refined; the clipped
/// interpolant is integrated on a (2·64+1)² sub-Simpson grid. Only panels
/// crossed by the nodal curve pay this, so the cost is a rounding error
/// next to the kernel evaluation.
const KINK_SUBDIVISION: usize = 64;

/// δ and the negative mass of one grid by composite Simpson quadrature.
///
/// The negative mass walks the 2×2-cell Simpson panels (3×3 nodes each).
/// A panel with no negative node contributes nothing, the integrand
/// |W| − W being identically zero there. Every panel touching the negative
/// set integrates the clipped surrogate max(−Q, 0) on a refined subgrid,
/// where Q is the quartic interpolant of the 5×5 node stencil around the
/// panel when one fits (it always does away from the grid edge, and edge
/// panels carry only roundoff-scale mass) and the panel's own biquadratic
/// otherwise. Treating the whole negative set with one rule matters: node
/// quadrature inside it with a different rule at the nodal curve would
/// leave uncancelled O(step⁴) boundary terms. δ = 2·negative mass by
/// construction. Panel order is fixed, so the result is deterministic for
/// identical inputs regardless of how the grid was filled.
pub fn negativity(grid: &WignerGrid) -> NegativityResult {
    let h = grid.step;
    let wx = simpson_weights(grid.nx, h);
    let wp = simpson_weights(grid.np, h);
    let mut normalization = 0.0;
    for (i, wxi) in wx.iter().enumerate() {
        let mut row = 0.0;
        for (j, wpj) in wp.iter().enumerate() {
            row += wpj * grid.value(i, j);
        }
        normalization += wxi * row;
    }

    let sub_n = 2 * KINK_SUBDIVISION + 1;
    let sub_step = 2.0 * h / (sub_n - 1) as f64;
    let sub_w = simpson_weights(sub_n, sub_step);
    // Quadratic Lagrange basis on the panel coordinate s ∈ [0, 2] at the
    // sub-nodes (edge fallback), and quartic basis on the 5×5 stencil
    // centred on the panel (stencil coordinate σ = s + 1 over nodes
    // {0..4}; the sub-nodes stay in the central intervals [1, 3], where
    // quartic interpolation is well conditioned).
    let basis: Vec<[f64; 3]> = (0..sub_n)
        .map(|t| {
            let s = 2.0 * t as f64 / (sub_n - 1) as f64;
            [
                (s - 1.0) * (s - 2.0) / 2.0,
                s * (2.0 - s),
                s * (s - 1.0) / 2.0,
            ]
        })
        .collect();
    let basis5: Vec<[f64; 5]> = (0..sub_n)
        .map(|t| {
            let sigma = 1.0 + 2.0 * t as f64 / (sub_n - 1) as f64;
            let mut l = [0.0; 5];
            for (a, la) in l.iter_mut().enumerate() {
                let mut v = 1.0;
                for b in 0..5 {
                    if b != a {
                        v *= (sigma - b as f64) / (a as f64 - b as f64);
                    }
                }
                *la = v;
            }
            l
        })
        .collect();
    let mut negative_mass = 0.0;
    for ip in (0..grid.nx - 1).step_by(2) {
        for jp in (0..grid.np - 1).step_by(2) {
            let mut vals = [[0.0_f64; 3]; 3];
            let mut any_neg = false;
            for (a, row) in vals.iter_mut().enumerate() {
                for (b, v) in row.iter_mut().enumerate() {
                    *v = grid.value(ip + a, jp + b);
                    if *v < 0.0 {
                        any_neg = true;
                    }
                }
            }
            if !any_neg {
                continue;
            }
            let stencil_fits = ip >= 1 && jp >= 1 && ip + 3 < grid.nx && jp + 3 < grid.np;
            if stencil_fits {
                let mut vals5 = [[0.0_f64; 5]; 5];
                for (a, row) in vals5.iter_mut().enumerate() {
                    for (b, v) in row.iter_mut().enumerate() {
                        *v = grid.value(ip - 1 + a, jp - 1 + b);
                    }
                }
                // G[v][a] = Σ_b vals5[a][b]·ℓ_b(σ_v): p-direction collapsed.
                let g: Vec<[f64; 5]> = (0..sub_n)
                    .map(|v| {
                        let lb = basis5[v];
                        let mut out = [0.0; 5];
                        for (a, o) in out.iter_mut().enumerate() {
                            *o = (0..5).map(|b| vals5[a][b] * lb[b]).sum();
                        }
                        out
                    })
                    .collect();
                for (t, la) in basis5.iter().enumerate() {
                    let mut acc = 0.0;
                    for (v, gv) in g.iter().enumerate() {
                        let q: f64 = (0..5).map(|a| la[a] * gv[a]).sum();
                        if q < 0.0 {
                            acc += sub_w[v] * -q;
                        }
                    }
                    negative_mass += sub_w[t] * acc;
                }
            } else {
                // G[v][a] = Σ_b vals[a][b]·ℓ_b(s_v): p-direction collapsed.
                let g: Vec<[f64; 3]> = (0..sub_n)
                    .map(|v| {
                        let lb = basis[v];
                        [
                            vals[0][0] * lb[0] + vals[0][1] * lb[1] + vals[0][2] * lb[2],
                            vals[1][0] * lb[0] + vals[1][1] * lb[1] + vals[1][2] * lb[2],
                            vals[2][0] * lb[0] + vals[2][1] * lb[1] + vals[2][2] * lb[2],
                        ]
                    })
                    .collect();
                for (t, la) in basis.iter().enumerate() {
                    let mut acc = 0.0;
                    for (v, gv) in g.iter().enumerate() {
                        let q = la[0] * gv[0] + la[1] * gv[1] + la[2] * gv[2];
                        if q < 0.0 {
                            acc += sub_w[v] * -q;
                        }
                    }
                    negative_mass += sub_w[t] * acc;
                }
            }
        }
    }

    NegativityResult {
        delta: 2.0 * negative_mass,
        negative_mass,
        normalization,
        extent: grid.x_max,
        step: grid.step,
    }
}

/// Grid plus δ in one call with the default auto extent.
pub fn negativity_of(field: &FieldState, step: f64) -> Result<NegativityResult> {
    Ok(negativity(&wigner_function(field, Extent::Auto, step)?))
}
