//! Flag surface, config-file schema, and the flag > config > default
//! resolution every command funnels through.
//!
//! Each resolved field records where its value came from. The record is
//! echoed into every output file as a `provenance` header so a result can
//! be traced back to the exact inputs that produced it.

use std::f64::consts::PI;
use std::path::PathBuf;

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde::{Deserialize, Serialize};
use serde_json::{json, Map, Value};

use dcesim_core::explorer::{Conditioning, Figure};

use crate::error::{usage, CliError};

/// Maps the exotic field states of a qubit-cavity model whose coupling is
/// switched on suddenly and held for a pulse.
#[derive(Debug, Parser)]
#[command(name = "dcesim", version, about)]
pub struct Cli {
    /// JSON file supplying defaults for long flags (explicit flags win)
    #[arg(long, global = true, value_name = "PATH")]
    pub config: Option<PathBuf>,

    /// Directory output files land in; the DCESIM_OUT_DIR environment
    /// variable overrides the config-file value
    #[arg(long, global = true, value_name = "DIR")]
    pub out_dir: Option<PathBuf>,

    /// Threads for sweep columns, 0 = all cores; every other command runs
    /// on a single thread
    #[arg(long, global = true, value_name = "N")]
    pub jobs: Option<usize>,

    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Switch the coupling on for one pulse from |g,0> and save the state
    Evolve(EvolveArgs),
    /// Wigner grid and negativity of a reduced field state
    Wigner(WignerArgs),
    /// Negativity over a (g, tau) grid, written as CSV
    Sweep(SweepArgs),
    /// Locate the onset of Wigner negativity along tau or g
    Threshold(ThresholdArgs),
    /// Weak-coupling series state at one (g, tau)
    Dyson(DysonArgs),
    /// Plot-ready dataset bundles
    Figure(FigureArgs),
}

#[derive(Debug, Args)]
pub struct EvolveArgs {
    /// Coupling strength in units of the cavity frequency
    #[arg(long)]
    pub g: Option<f64>,

    /// Pulse length; a "pi" suffix multiplies by pi ("0.56pi")
    #[arg(long)]
    pub tau: Option<String>,

    /// How --tau is read: absolute time or multiples of pi/2g
    #[arg(long, value_enum)]
    pub tau_units: Option<TauUnits>,

    /// Cavity frequency
    #[arg(long)]
    pub omega: Option<f64>,

    /// Qubit splitting
    #[arg(long)]
    pub omega_a: Option<f64>,

    /// Starting photon cutoff; runs escalate it on truncation pressure
    #[arg(long)]
    pub nmax: Option<usize>,

    /// Keep only the excitation-conserving part of the coupling
    #[arg(long)]
    pub rwa: bool,

    /// Reduced field state to report populations for
    #[arg(long, value_enum)]
    pub condition: Option<ConditionArg>,

    /// Output file name, resolved inside the output directory
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct WignerArgs {
    /// State JSON saved by `evolve`; otherwise evolve inline from the
    /// model flags below
    #[arg(
        long,
        conflicts_with_all = ["g", "tau", "tau_units", "omega", "omega_a", "nmax", "rwa"]
    )]
    pub state: Option<PathBuf>,

    /// Coupling strength in units of the cavity frequency
    #[arg(long)]
    pub g: Option<f64>,

    /// Pulse length; a "pi" suffix multiplies by pi ("0.56pi")
    #[arg(long)]
    pub tau: Option<String>,

    /// How --tau is read: absolute time or multiples of pi/2g
    #[arg(long, value_enum)]
    pub tau_units: Option<TauUnits>,

    /// Cavity frequency
    #[arg(long)]
    pub omega: Option<f64>,

    /// Qubit splitting
    #[arg(long)]
    pub omega_a: Option<f64>,

    /// Starting photon cutoff; runs escalate it on truncation pressure
    #[arg(long)]
    pub nmax: Option<usize>,

    /// Keep only the excitation-conserving part of the coupling
    #[arg(long)]
    pub rwa: bool,

    /// Reduced field state to map
    #[arg(long, value_enum)]
    pub condition: Option<ConditionArg>,

    /// Grid spacing
    #[arg(long)]
    pub step: Option<f64>,

    /// Fixed grid half-width; default sizes it from the photon support
    #[arg(long)]
    pub extent: Option<f64>,

    /// Output CSV name, resolved inside the output directory
    #[arg(long)]
    pub out: Option<PathBuf>,

    /// Also write a gnuplot matrix file with this name
    #[arg(long)]
    pub gnuplot: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct SweepArgs {
    /// Couplings as start:stop:step
    #[arg(long, value_name = "A:B:H", conflicts_with = "g_list")]
    pub g_range: Option<String>,

    /// Explicit comma-separated couplings
    #[arg(long, value_delimiter = ',')]
    pub g_list: Option<Vec<f64>>,

    /// Pulse lengths as start:stop:step; parts may carry a pi suffix in
    /// absolute units
    #[arg(long, value_name = "A:B:H", conflicts_with = "tau_list")]
    pub tau_range: Option<String>,

    /// Explicit comma-separated pulse lengths
    #[arg(long, value_delimiter = ',')]
    pub tau_list: Option<Vec<String>>,

    /// How pulse lengths are read: absolute time or multiples of pi/2g
    #[arg(long, value_enum)]
    pub tau_units: Option<TauUnits>,

    /// Cavity frequency
    #[arg(long)]
    pub omega: Option<f64>,

    /// Qubit splitting
    #[arg(long)]
    pub omega_a: Option<f64>,

    /// Reduced field state to score
    #[arg(long, value_enum)]
    pub condition: Option<ConditionArg>,

    /// Starting photon cutoff; columns escalate it on truncation pressure
    #[arg(long)]
    pub nmax: Option<usize>,

    /// Wigner grid spacing
    #[arg(long)]
    pub step: Option<f64>,

    /// Fixed grid half-width; default sizes it per state
    #[arg(long)]
    pub extent: Option<f64>,

    /// Output CSV name, resolved inside the output directory
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct ThresholdArgs {
    /// Which delta evaluation drives the search
    #[arg(long, value_enum)]
    pub order: Option<OrderArg>,

    /// Search axis; searching g needs a fixed --tau
    #[arg(long, value_enum)]
    pub axis: Option<AxisArg>,

    /// Coupling, fixed while searching along tau
    #[arg(long)]
    pub g: Option<f64>,

    /// Pulse length, fixed while searching along g
    #[arg(long)]
    pub tau: Option<String>,

    /// How --tau is read: absolute time or multiples of pi/2g
    #[arg(long, value_enum)]
    pub tau_units: Option<TauUnits>,

    /// Search bracket as lo:hi; tau bounds may carry a pi suffix
    #[arg(long, value_name = "LO:HI")]
    pub search: Option<String>,

    /// Negativity level that counts as switched on
    #[arg(long)]
    pub epsilon: Option<f64>,

    /// Cavity frequency
    #[arg(long)]
    pub omega: Option<f64>,

    /// Qubit splitting
    #[arg(long)]
    pub omega_a: Option<f64>,

    /// Starting photon cutoff for the exact evaluation
    #[arg(long)]
    pub nmax: Option<usize>,

    /// Wigner grid spacing
    #[arg(long)]
    pub step: Option<f64>,

    /// Reduced field state to score (exact order only)
    #[arg(long, value_enum)]
    pub condition: Option<ConditionArg>,

    /// Also write the outcome JSON to this file
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct DysonArgs {
    /// Coupling strength in units of the cavity frequency
    #[arg(long)]
    pub g: Option<f64>,

    /// Pulse length; a "pi" suffix multiplies by pi ("0.56pi")
    #[arg(long)]
    pub tau: Option<String>,

    /// How --tau is read: absolute time or multiples of pi/2g
    #[arg(long, value_enum)]
    pub tau_units: Option<TauUnits>,

    /// Cavity frequency
    #[arg(long)]
    pub omega: Option<f64>,

    /// Qubit splitting
    #[arg(long)]
    pub omega_a: Option<f64>,

    /// Series order, 0 through 4
    #[arg(long)]
    pub order: Option<usize>,

    /// Output JSON name, resolved inside the output directory
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct FigureArgs {
    /// Which dataset family to produce
    #[arg(long, value_enum)]
    pub which: FigureArg,

    /// Photon cutoff override for the whole family
    #[arg(long)]
    pub nmax: Option<usize>,

    /// Wigner grid spacing override
    #[arg(long)]
    pub step: Option<f64>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum TauUnits {
    /// Plain time in units of the inverse cavity frequency
    Abs,
    /// Multiples of the excitation transfer time pi/2g
    #[value(name = "pi-over-2g")]
    PiOver2g,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum ConditionArg {
    /// Trace the qubit out
    None,
    /// Project the qubit onto its ground state first
    G,
    /// Project the qubit onto its excited state first
    E,
}

impl From<ConditionArg> for Conditioning {
    fn from(c: ConditionArg) -> Self {
        match c {
            ConditionArg::None => Conditioning::None,
            ConditionArg::G => Conditioning::G,
            ConditionArg::E => Conditioning::E,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum OrderArg {
    /// Full numerical evolution
    Exact,
    /// Second-order series state
    #[value(name = "2")]
    Two,
    /// Fourth-order series state
    #[value(name = "4")]
    Four,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum AxisArg {
    Tau,
    G,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum FigureArg {
    WignerPanels,
    ParityPopulations,
    DeltaSurface,
    DeltaOnset,
}

impl From<FigureArg> for Figure {
    fn from(f: FigureArg) -> Self {
        match f {
            FigureArg::WignerPanels => Figure::WignerPanels,
            FigureArg::ParityPopulations => Figure::ParityPopulations,
            FigureArg::DeltaSurface => Figure::DeltaSurface,
            FigureArg::DeltaOnset => Figure::DeltaOnset,
        }
    }
}

/// A time that may be a plain number or a "pi"-suffixed string.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(untagged)]
pub enum TimeSpec {
    Number(f64),
    Text(String),
}

impl TimeSpec {
    pub fn raw(&self) -> String {
        match self {
            TimeSpec::Number(v) => v.to_string(),
            TimeSpec::Text(s) => s.clone(),
        }
    }
}

/// Keys a --config file may supply. Every key backs the flag of the same
/// name; explicit flags win on conflict.
#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FileConfig {
    pub omega: Option<f64>,
    pub omega_a: Option<f64>,
    pub g: Option<f64>,
    pub tau: Option<TimeSpec>,
    pub tau_units: Option<String>,
    pub nmax: Option<usize>,
    pub rwa: Option<bool>,
    pub condition: Option<String>,
    pub step: Option<f64>,
    pub extent: Option<f64>,
    pub epsilon: Option<f64>,
    /// "exact", 2, or 4 for threshold; 0 through 4 for dyson.
    pub order: Option<Value>,
    pub axis: Option<String>,
    pub search: Option<String>,
    pub g_range: Option<String>,
    pub g_list: Option<Vec<f64>>,
    pub tau_range: Option<String>,
    pub tau_list: Option<Vec<TimeSpec>>,
    pub out: Option<PathBuf>,
    pub gnuplot: Option<PathBuf>,
    pub out_dir: Option<PathBuf>,
    pub jobs: Option<usize>,
}

/// Where each resolved input came from, echoed into every output.
#[derive(Debug, Default, Clone)]
pub struct Provenance {
    fields: Map<String, Value>,
}

impl Provenance {
    pub fn note<T: Serialize>(&mut self, key: &str, value: &T, source: &str) {
        let value = serde_json::to_value(value).unwrap_or(Value::Null);
        self.fields
            .insert(key.to_string(), json!({ "value": value, "source": source }));
    }

    /// Single-line form for `# `-prefixed file headers.
    pub fn line(&self) -> String {
        format!("provenance: {}", Value::Object(self.fields.clone()))
    }

    /// Object form for embedding in JSON documents.
    pub fn value(&self) -> Value {
        Value::Object(self.fields.clone())
    }
}

pub fn pick<T: Serialize>(
    prov: &mut Provenance,
    key: &str,
    flag: Option<T>,
    config: Option<T>,
    default: T,
) -> T {
    let (value, source) = match (flag, config) {
        (Some(v), _) => (v, "flag"),
        (None, Some(v)) => (v, "config"),
        (None, None) => (default, "default"),
    };
    prov.note(key, &value, source);
    value
}

pub fn pick_opt<T: Serialize>(
    prov: &mut Provenance,
    key: &str,
    flag: Option<T>,
    config: Option<T>,
) -> Option<T> {
    let (value, source) = match (flag, config) {
        (Some(v), _) => (Some(v), "flag"),
        (None, Some(v)) => (Some(v), "config"),
        (None, None) => (None, "default"),
    };
    prov.note(key, &value, source);
    value
}

pub fn require<T: Serialize>(
    prov: &mut Provenance,
    key: &str,
    flag: Option<T>,
    config: Option<T>,
) -> Result<T, CliError> {
    match (flag, config) {
        (Some(v), _) => {
            prov.note(key, &v, "flag");
            Ok(v)
        }
        (None, Some(v)) => {
            prov.note(key, &v, "config");
            Ok(v)
        }
        (None, None) => Err(usage(format!(
            "{key} is required: pass --{flag} or set it in the config",
            flag = key.replace('_', "-")
        ))),
    }
}

pub fn enum_name<T: ValueEnum>(v: &T) -> String {
    v.to_possible_value()
        .map(|p| p.get_name().to_string())
        .unwrap_or_default()
}

pub fn pick_enum<T: ValueEnum + Clone>(
    prov: &mut Provenance,
    key: &str,
    flag: Option<T>,
    config: Option<&str>,
    default: T,
) -> Result<T, CliError> {
    let (value, source) = match (flag, config) {
        (Some(v), _) => (v, "flag"),
        (None, Some(raw)) => (
            T::from_str(raw, true)
                .map_err(|_| usage(format!("config {key}: unknown value {raw:?}")))?,
            "config",
        ),
        (None, None) => (default, "default"),
    };
    prov.note(key, &enum_name(&value), source);
    Ok(value)
}

/// Time literal; a trailing "pi" multiplies by pi ("0.56pi", "pi").
pub fn parse_time(raw: &str) -> Result<f64, CliError> {
    let s = raw.trim();
    let bad = || usage(format!("bad time literal {raw:?}"));
    if let Some(head) = s.strip_suffix("pi") {
        let head = head.trim();
        if head.is_empty() {
            return Ok(PI);
        }
        return head.parse::<f64>().map(|v| v * PI).map_err(|_| bad());
    }
    s.parse::<f64>().map_err(|_| bad())
}

/// "start:stop:step" into a dense inclusive grid. `pi_ok` allows the pi
/// suffix on each part (absolute times only).
pub fn parse_range(raw: &str, pi_ok: bool) -> Result<Vec<f64>, CliError> {
    let parts: Vec<&str> = raw.split(':').collect();
    if parts.len() != 3 {
        return Err(usage(format!("range {raw:?} must be start:stop:step")));
    }
    let mut v = [0.0_f64; 3];
    for (slot, part) in v.iter_mut().zip(&parts) {
        *slot = if pi_ok {
            parse_time(part)?
        } else {
            part.trim()
                .parse()
                .map_err(|_| usage(format!("bad number {part:?} in range {raw:?}")))?
        };
    }
    if v[1] < v[0] {
        return Err(usage(format!("range {raw:?} runs backwards")));
    }
    if !(v[2] > 0.0) || !v[2].is_finite() {
        return Err(usage(format!("range {raw:?} needs a positive step")));
    }
    Ok(dcesim_core::explorer::float_range(v[0], v[1], v[2]))
}
