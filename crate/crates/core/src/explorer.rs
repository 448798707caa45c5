//! Parameter-plane exploration: (g, τ) negativity sweeps, transition-point
//! extraction by bisection, and ready-to-plot dataset exports.
//!
//! The workhorse observable is δ of the reduced field state after a pulse
//! of length τ at coupling g, starting from |g,0⟩. Its onset in τ is a
//! sharp transition: below the critical pulse length no grid node of W is
//! negative and δ is exactly zero, above it δ jumps by many orders of
//! magnitude. Bisection on the indicator [δ > ε] therefore locates the
//! transition robustly; ε = 1e−10 keeps quadrature noise out without
//! touching the answer, since the jump dwarfs the window [1e−12, 1e−8].

use std::io::Write as _;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

#[cfg(feature = "parallel")]
use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::fock::FockBasis;
use crate::model::ModelParams;
use crate::propagator::{diagonalize_model, SpectralCache, ESCALATION_FACTOR_CAP};
use crate::state::{FieldState, JointState, QubitOutcome};
use crate::wigner::{fmt17, negativity, wigner_function, Extent, DEFAULT_STEP};

/// Bisection stops once the τ bracket is narrower than this.
pub const TAU_RESOLUTION: f64 = 1e-3 * std::f64::consts::PI;

/// Bisection resolution for thresholds along the g axis.
pub const G_RESOLUTION: f64 = 1e-3;

/// Default δ-threshold indicator level.
pub const DEFAULT_EPSILON: f64 = 1e-10;

/// Which reduced field state a sweep or threshold scores.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Conditioning {
    /// Unconditional ρ = Tr_qubit |Ψ⟩⟨Ψ|.
    None,
    /// ρ_g, the field after projecting the qubit onto |g⟩.
    G,
    /// ρ_e, the field after projecting the qubit onto |e⟩.
    E,
}

impl Conditioning {
    pub fn reduce(self, state: &JointState) -> Result<FieldState> {
        match self {
            Conditioning::None => Ok(state.partial_trace_qubit()),
            Conditioning::G => Ok(state.condition_on_qubit(QubitOutcome::Ground)?.1),
            Conditioning::E => Ok(state.condition_on_qubit(QubitOutcome::Excited)?.1),
        }
    }
}

/// Axes and scoring choices of one (g, τ) sweep.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SweepSpec {
    /// Couplings, strictly increasing, non-empty.
    pub g_values: Vec<f64>,
    /// Pulse lengths, strictly increasing, non-empty.
    pub tau_values: Vec<f64>,
    /// Interpret `tau_values` in units of the transfer time π/2g instead
    /// of absolute time.
    #[serde(default)]
    pub tau_in_transfer_units: bool,
    /// Reduced state to score.
    #[serde(default = "default_conditioning")]
    pub conditioning: Conditioning,
    /// Wigner grid spacing.
    #[serde(default = "default_step")]
    pub step: f64,
    /// Fixed grid half-width; None picks the per-state automatic extent.
    #[serde(default)]
    pub extent: Option<f64>,
    /// Initial Fock cutoff; columns escalate on truncation failures.
    #[serde(default = "default_n_max")]
    pub n_max: usize,
}

fn default_conditioning() -> Conditioning {
    Conditioning::None
}

fn default_step() -> f64 {
    DEFAULT_STEP
}

fn default_n_max() -> usize {
    60
}

impl SweepSpec {
    /// Dense default axes for quick surface scans at `n_max` 60.
    pub fn new(g_values: Vec<f64>, tau_values: Vec<f64>) -> Self {
        SweepSpec {
            g_values,
            tau_values,
            tau_in_transfer_units: false,
            conditioning: Conditioning::None,
            step: DEFAULT_STEP,
            extent: None,
            n_max: 60,
        }
    }

    pub fn validate(&self) -> Result<()> {
        for (name, axis) in [("g", &self.g_values), ("tau", &self.tau_values)] {
            if axis.is_empty() {
                return Err(Error::InvalidSweep {
                    reason: format!("{name} axis is empty"),
                });
            }
            if axis.iter().any(|v| !v.is_finite()) {
                return Err(Error::InvalidSweep {
                    reason: format!("{name} axis contains a non-finite value"),
                });
            }
            if axis.windows(2).any(|w| w[0] >= w[1]) {
                return Err(Error::InvalidSweep {
                    reason: format!("{name} axis must be strictly increasing"),
                });
            }
        }
        if self.g_values[0] < 0.0 {
            return Err(Error::InvalidSweep {
                reason: "couplings must be >= 0".into(),
            });
        }
        if self.tau_values[0] < 0.0 {
            return Err(Error::InvalidSweep {
                reason: "pulse lengths must be >= 0".into(),
            });
        }
        if self.tau_in_transfer_units && self.g_values[0] == 0.0 {
            return Err(Error::InvalidSweep {
                reason: "transfer-unit pulse lengths are undefined at g = 0".into(),
            });
        }
        if !(self.step > 0.0) {
            return Err(Error::InvalidSweep {
                reason: format!("step must be positive, got {}", self.step),
            });
        }
        if self.n_max == 0 {
            return Err(Error::InvalidSweep {
                reason: "n_max must be at least 1".into(),
            });
        }
        Ok(())
    }
}

/// One scored sweep point; `delta` is NaN when the point failed (the
/// failure is listed on the surface).
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SurfacePoint {
    pub g: f64,
    pub tau: f64,
    pub delta: f64,
}

/// A failed sweep point with its reason; the sweep itself carries on.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepFailure {
    pub g: f64,
    pub tau: f64,
    pub message: String,
}

/// δ over the (g, τ) grid, in g-major then τ order.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NegativitySurface {
    pub points: Vec<SurfacePoint>,
    pub failures: Vec<SweepFailure>,
}

impl NegativitySurface {
    /// CSV with header "g,tau,delta"; failed points carry "nan".
    pub fn write_csv<W: std::io::Write>(&self, out: &mut W, comments: &[String]) -> Result<()> {
        for line in comments {
            writeln!(out, "# {line}")?;
        }
        writeln!(out, "g,tau,delta")?;
        for p in &self.points {
            let delta = if p.delta.is_nan() {
                "nan".to_string()
            } else {
                fmt17(p.delta)
            };
            writeln!(out, "{},{},{}", fmt17(p.g), fmt17(p.tau), delta)?;
        }
        Ok(())
    }
}

/// δ of the chosen reduced state of |Ψ(τ)⟩, the full single-point pipeline.
pub fn point_delta(
    params: &ModelParams,
    basis: FockBasis,
    tau: f64,
    conditioning: Conditioning,
    extent: Option<f64>,
    step: f64,
) -> Result<f64> {
    let state = crate::propagator::evolve_ground_auto(params, basis, tau, false)?;
    reduced_delta(&state, conditioning, extent, step)
}

fn reduced_delta(
    state: &JointState,
    conditioning: Conditioning,
    extent: Option<f64>,
    step: f64,
) -> Result<f64> {
    let field = conditioning.reduce(state)?;
    let grid = wigner_function(&field, extent.map_or(Extent::Auto, Extent::Fixed), step)?;
    Ok(negativity(&grid).delta)
}

/// One δ per (g, τ) grid point for the chosen conditioning.
///
/// Each g column shares one spectral decomposition; a truncation failure
/// anywhere in a column doubles that column's cutoff and recomputes it, up
/// to [`ESCALATION_FACTOR_CAP`]× the spec's n_max. Points that still fail
/// are reported as failures without aborting the sweep. Output order is
/// fixed by the axes, so identical inputs give bit-identical tables no
/// matter how the columns were scheduled.
pub fn negativity_surface(spec: &SweepSpec, params: &ModelParams) -> Result<NegativitySurface> {
    spec.validate()?;
    let columns: Vec<Vec<std::result::Result<f64, String>>> = {
        let run = |&g: &f64| sweep_column(params, g, spec);
        #[cfg(feature = "parallel")]
        {
            spec.g_values.par_iter().map(run).collect()
        }
        #[cfg(not(feature = "parallel"))]
        {
            spec.g_values.iter().map(run).collect()
        }
    };

    let mut points = Vec::with_capacity(spec.g_values.len() * spec.tau_values.len());
    let mut failures = Vec::new();
    for (gi, column) in columns.into_iter().enumerate() {
        let g = spec.g_values[gi];
        for (ti, outcome) in column.into_iter().enumerate() {
            let tau = absolute_tau(spec, g, spec.tau_values[ti]);
            match outcome {
                Ok(delta) => points.push(SurfacePoint { g, tau, delta }),
                Err(message) => {
                    points.push(SurfacePoint {
                        g,
                        tau,
                        delta: f64::NAN,
                    });
                    failures.push(SweepFailure { g, tau, message });
                }
            }
        }
    }
    Ok(NegativitySurface { points, failures })
}

fn absolute_tau(spec: &SweepSpec, g: f64, tau: f64) -> f64 {
    if spec.tau_in_transfer_units {
        tau * std::f64::consts::PI / (2.0 * g)
    } else {
        tau
    }
}

fn sweep_column(
    params: &ModelParams,
    g: f64,
    spec: &SweepSpec,
) -> Vec<std::result::Result<f64, String>> {
    let taus: Vec<f64> = spec
        .tau_values
        .iter()
        .map(|&t| absolute_tau(spec, g, t))
        .collect();
    let column_params = match ModelParams::new(params.omega(), params.omega_a(), g) {
        Ok(p) => p,
        Err(e) => return vec![Err(e.to_string()); taus.len()],
    };
    let mut factor = 1;
    loop {
        let basis = match FockBasis::new(spec.n_max * factor) {
            Ok(b) => b,
            Err(e) => return vec![Err(e.to_string()); taus.len()],
        };
        let cache = match diagonalize_model(&column_params, basis, false) {
            Ok(c) => c,
            Err(e) => return vec![Err(e.to_string()); taus.len()],
        };
        let initial = JointState::ground(basis);
        let states: Vec<Result<JointState>> = taus
            .iter()
            .map(|&tau| cache.evolve(&initial, tau))
            .collect();
        let truncated = states
            .iter()
            .any(|r| matches!(r, Err(Error::Truncation { .. })));
        if truncated && factor < ESCALATION_FACTOR_CAP {
            factor *= 2;
            continue;
        }
        return states
            .into_iter()
            .map(|r| {
                r.and_then(|state| reduced_delta(&state, spec.conditioning, spec.extent, spec.step))
                    .map_err(|e| e.to_string())
            })
            .collect();
    }
}

// ---------------------------------------------------------------------------
// Thresholds
// ---------------------------------------------------------------------------

/// Which parameter a threshold search varied.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ThresholdParameter {
    Tau,
    G,
}

/// Which δ evaluation backed a threshold search.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum ThresholdOrder {
    #[serde(rename = "exact")]
    Exact,
    #[serde(rename = "2")]
    Two,
    #[serde(rename = "4")]
    Four,
}

/// A located transition point.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ThresholdResult {
    pub parameter: ThresholdParameter,
    /// Bracket midpoint.
    pub critical_value: f64,
    /// Final bracket [lo, hi] with δ(lo) ≤ ε < δ(hi) and hi − lo within
    /// the axis resolution.
    pub bracket: [f64; 2],
    pub epsilon: f64,
    pub delta_below: f64,
    pub delta_above: f64,
    pub order: ThresholdOrder,
}

/// Threshold search outcome; "no crossing" is a result, not an error.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "status", rename_all = "snake_case")]
pub enum ThresholdOutcome {
    Found {
        #[serde(flatten)]
        result: ThresholdResult,
    },
    /// The search bracket does not straddle the indicator: both endpoint
    /// δ values are reported.
    NoCrossing {
        parameter: ThresholdParameter,
        bracket: [f64; 2],
        epsilon: f64,
        delta_below: f64,
        delta_above: f64,
        order: ThresholdOrder,
    },
}

/// Bisection on the indicator [δ > ε] over `search`, to `resolution`.
///
/// Shared by the exact and the perturbative threshold finders.
pub(crate) fn bisect_threshold(
    parameter: ThresholdParameter,
    order: ThresholdOrder,
    search: (f64, f64),
    resolution: f64,
    epsilon: f64,
    mut delta_at: impl FnMut(f64) -> Result<f64>,
) -> Result<ThresholdOutcome> {
    let (mut lo, mut hi) = search;
    if !(lo.is_finite() && hi.is_finite() && lo < hi) {
        return Err(Error::InvalidParams {
            reason: format!("search interval [{lo}, {hi}] is not an increasing pair"),
        });
    }
    if !(epsilon > 0.0) {
        return Err(Error::InvalidParams {
            reason: format!("epsilon must be positive, got {epsilon}"),
        });
    }
    let mut delta_lo = delta_at(lo)?;
    let mut delta_hi = delta_at(hi)?;
    if !(delta_lo <= epsilon && delta_hi > epsilon) {
        return Ok(ThresholdOutcome::NoCrossing {
            parameter,
            bracket: [lo, hi],
            epsilon,
            delta_below: delta_lo,
            delta_above: delta_hi,
            order,
        });
    }
    while hi - lo > resolution {
        let mid = 0.5 * (lo + hi);
        let delta_mid = delta_at(mid)?;
        if delta_mid > epsilon {
            hi = mid;
            delta_hi = delta_mid;
        } else {
            lo = mid;
            delta_lo = delta_mid;
        }
    }
    Ok(ThresholdOutcome::Found {
        result: ThresholdResult {
            parameter,
            critical_value: 0.5 * (lo + hi),
            bracket: [lo, hi],
            epsilon,
            delta_below: delta_lo,
            delta_above: delta_hi,
            order,
        },
    })
}

/// Search axis for [`exact_threshold`]: vary τ at the params' g, or vary g
/// at a fixed pulse length.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum ThresholdAxis {
    Tau,
    G { tau: f64 },
}

/// Critical point of the exact δ onset by bisection.
///
/// Along τ the pulse Hamiltonian is fixed, so one spectral decomposition
/// (escalated on truncation failures) serves every candidate. Along g each
/// candidate pays its own decomposition.
pub fn exact_threshold(
    params: &ModelParams,
    axis: ThresholdAxis,
    search: (f64, f64),
    epsilon: f64,
    basis: FockBasis,
    conditioning: Conditioning,
    step: f64,
) -> Result<ThresholdOutcome> {
    match axis {
        ThresholdAxis::Tau => {
            let mut factor = 1;
            let mut cache: Option<(usize, SpectralCache, JointState)> = None;
            let delta_at = |tau: f64| -> Result<f64> {
                loop {
                    if cache.as_ref().is_none_or(|(f, _, _)| *f != factor) {
                        let attempt = FockBasis::new(basis.n_max() * factor)?;
                        cache = Some((
                            factor,
                            diagonalize_model(params, attempt, false)?,
                            JointState::ground(attempt),
                        ));
                    }
                    let (_, c, initial) = cache.as_ref().expect("cache just filled");
                    match c.evolve(initial, tau) {
                        Ok(state) => return reduced_delta(&state, conditioning, None, step),
                        Err(Error::Truncation { .. }) if factor < ESCALATION_FACTOR_CAP => {
                            factor *= 2;
                        }
                        Err(e) => return Err(e),
                    }
                }
            };
            bisect_threshold(
                ThresholdParameter::Tau,
                ThresholdOrder::Exact,
                search,
                TAU_RESOLUTION,
                epsilon,
                delta_at,
            )
        }
        ThresholdAxis::G { tau } => {
            let delta_at = |g: f64| -> Result<f64> {
                let p = ModelParams::new(params.omega(), params.omega_a(), g)?;
                point_delta(&p, basis, tau, conditioning, None, step)
            };
            bisect_threshold(
                ThresholdParameter::G,
                ThresholdOrder::Exact,
                search,
                G_RESOLUTION,
                epsilon,
                delta_at,
            )
        }
    }
}

// ---------------------------------------------------------------------------
// Plot-ready datasets
// ---------------------------------------------------------------------------

/// The standard dataset families the CLI can emit.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Figure {
    /// Dataset 1: Wigner grids of ρ, ρ_g, ρ_e at four (g, τ) rows.
    WignerPanels,
    /// Dataset 2: photon-number populations of ρ, ρ_g, ρ_e at g ∈
    /// {0.5, 1.5}, τ = π/2g.
    ParityPopulations,
    /// Dataset 3: the δ surface over (g, τ).
    DeltaSurface,
    /// Dataset 4: δ(τ) at fixed g, linear and log variants.
    DeltaOnset,
}

/// Axis choices for [`figure_dataset`]; the defaults reproduce the
/// standard datasets at publication density.
#[derive(Debug, Clone, PartialEq)]
pub struct FigureOptions {
    pub n_max: usize,
    pub step: f64,
    /// (g, τ in units of π/2g) rows of the Wigner panel set.
    pub panel_rows: Vec<(f64, f64)>,
    pub population_couplings: Vec<f64>,
    pub surface_g: Vec<f64>,
    /// Surface pulse lengths in units of π.
    pub surface_tau_over_pi: Vec<f64>,
    pub onset_g: f64,
    /// Onset line τ/π range as (start, stop, step).
    pub onset_tau_over_pi: (f64, f64, f64),
}

impl Default for FigureOptions {
    fn default() -> Self {
        FigureOptions {
            n_max: 60,
            step: DEFAULT_STEP,
            panel_rows: vec![(0.5, 1.0), (1.5, 1.0), (1.0, 0.75), (1.0, 1.5)],
            population_couplings: vec![0.5, 1.5],
            surface_g: float_range(0.1, 1.5, 0.1),
            surface_tau_over_pi: float_range(0.05, 1.2, 0.05),
            onset_g: 0.4,
            onset_tau_over_pi: (0.0, 1.2, 0.005),
        }
    }
}

/// start..=stop inclusive with the given spacing; each node is computed
/// from its index so no addition error accumulates along the range.
pub fn float_range(start: f64, stop: f64, step: f64) -> Vec<f64> {
    let n = ((stop - start) / step).round() as usize;
    (0..=n).map(|i| start + i as f64 * step).collect()
}

/// Writes the CSV files behind one standard dataset into `out_dir` and
/// returns their paths.
pub fn figure_dataset(
    which: Figure,
    options: &FigureOptions,
    out_dir: &Path,
) -> Result<Vec<PathBuf>> {
    std::fs::create_dir_all(out_dir)?;
    let basis = FockBasis::new(options.n_max)?;
    let mut written = Vec::new();
    match which {
        Figure::WignerPanels => {
            for &(g, tau_units) in &options.panel_rows {
                let params = ModelParams::resonant(g)?;
                let tau = tau_units * params.transfer_time()?;
                let state = crate::propagator::evolve_ground_auto(&params, basis, tau, false)?;
                for conditioning in [Conditioning::None, Conditioning::G, Conditioning::E] {
                    let field = conditioning.reduce(&state)?;
                    let grid = wigner_function(&field, Extent::Auto, options.step)?;
                    let path = out_dir.join(format!(
                        "wigner_g{g}_tau{tau_units}_{}.csv",
                        kind_slug(conditioning)
                    ));
                    let mut file = std::fs::File::create(&path)?;
                    grid.write_csv(
                        &mut file,
                        &[format!(
                            "g = {g}, tau = {tau_units} * pi/2g = {tau}, state = {}",
                            kind_slug(conditioning)
                        )],
                    )?;
                    written.push(path);
                }
            }
        }
        Figure::ParityPopulations => {
            for &g in &options.population_couplings {
                let params = ModelParams::resonant(g)?;
                let tau = params.transfer_time()?;
                let state = crate::propagator::evolve_ground_auto(&params, basis, tau, false)?;
                for conditioning in [Conditioning::None, Conditioning::G, Conditioning::E] {
                    let field = conditioning.reduce(&state)?;
                    let path =
                        out_dir.join(format!("populations_g{g}_{}.csv", kind_slug(conditioning)));
                    let mut file = std::fs::File::create(&path)?;
                    writeln!(
                        file,
                        "# g = {g}, tau = pi/2g = {tau}, state = {}",
                        kind_slug(conditioning)
                    )?;
                    writeln!(file, "n,population")?;
                    for (n, p) in field.populations().iter().enumerate() {
                        writeln!(file, "{n},{}", fmt17(*p))?;
                    }
                    written.push(path);
                }
            }
        }
        Figure::DeltaSurface => {
            let spec = SweepSpec {
                tau_values: options
                    .surface_tau_over_pi
                    .iter()
                    .map(|t| t * std::f64::consts::PI)
                    .collect(),
                n_max: options.n_max,
                step: options.step,
                ..SweepSpec::new(options.surface_g.clone(), vec![0.0])
            };
            let params = ModelParams::resonant(1.0)?;
            let surface = negativity_surface(&spec, &params)?;
            let path = out_dir.join("delta_surface.csv");
            let mut file = std::fs::File::create(&path)?;
            surface.write_csv(
                &mut file,
                &["delta of the unconditional field state over (g, tau)".into()],
            )?;
            written.push(path);
        }
        Figure::DeltaOnset => {
            let params = ModelParams::resonant(options.onset_g)?;
            let (start, stop, by) = options.onset_tau_over_pi;
            let taus_over_pi = float_range(start, stop, by);
            let spec = SweepSpec {
                tau_values: taus_over_pi
                    .iter()
                    .map(|t| t * std::f64::consts::PI)
                    .collect(),
                n_max: options.n_max,
                step: options.step,
                ..SweepSpec::new(vec![options.onset_g], vec![0.0])
            };
            let surface = negativity_surface(&spec, &params)?;

            let linear_path = out_dir.join("delta_onset.csv");
            let mut linear = std::fs::File::create(&linear_path)?;
            writeln!(linear, "# delta(tau) at g = {}", options.onset_g)?;
            writeln!(linear, "tau,tau_over_pi,delta")?;
            let log_path = out_dir.join("delta_onset_log.csv");
            let mut log = std::fs::File::create(&log_path)?;
            writeln!(
                log,
                "# log10 delta(tau) at g = {}; rows with delta <= 0 omitted",
                options.onset_g
            )?;
            writeln!(log, "tau,tau_over_pi,log10_delta")?;
            for (point, tau_over_pi) in surface.points.iter().zip(&taus_over_pi) {
                writeln!(
                    linear,
                    "{},{},{}",
                    fmt17(point.tau),
                    fmt17(*tau_over_pi),
                    fmt17(point.delta)
                )?;
                if point.delta > 0.0 {
                    writeln!(
                        log,
                        "{},{},{}",
                        fmt17(point.tau),
                        fmt17(*tau_over_pi),
                        fmt17(point.delta.log10())
                    )?;
                }
            }
            written.push(linear_path);
            written.push(log_path);
        }
    }
    Ok(written)
}

fn kind_slug(conditioning: Conditioning) -> &'static str {
    match conditioning {
        Conditioning::None => "rho",
        Conditioning::G => "rho_g",
        Conditioning::E => "rho_e",
    }
}
