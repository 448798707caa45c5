//! Command bodies: resolve inputs, run the core, write outputs.
//!
//! Every command prints one JSON summary line to stdout and puts bulk data
//! into files under the output directory. File outputs start with a
//! provenance header naming each input and whether it came from a flag,
//! the config file, the environment, or a default.

use std::fs;
use std::io::Write as _;
use std::path::{Path, PathBuf};

use serde_json::{json, Value};

use dcesim_core::dyson::{perturbative_populations, perturbative_threshold, DysonExpansion};
use dcesim_core::explorer::{
    self, Conditioning, FigureOptions, SweepSpec, ThresholdAxis, DEFAULT_EPSILON,
};
use dcesim_core::propagator::evolve_ground_auto;
use dcesim_core::wigner::{self, Extent, DEFAULT_STEP};
use dcesim_core::{FockBasis, JointState, ModelParams};

use crate::args::{
    self, AxisArg, Cli, Command, ConditionArg, DysonArgs, EvolveArgs, FigureArgs, FileConfig,
    OrderArg, Provenance, SweepArgs, TauUnits, ThresholdArgs, TimeSpec, WignerArgs,
};
use crate::error::{usage, CliError};

pub fn run(cli: Cli) -> Result<(), CliError> {
    let config = match &cli.config {
        Some(path) => {
            let text = fs::read_to_string(path)
                .map_err(|e| usage(format!("config {}: {e}", path.display())))?;
            serde_json::from_str::<FileConfig>(&text)
                .map_err(|e| usage(format!("config {}: {e}", path.display())))?
        }
        None => FileConfig::default(),
    };

    let mut prov = Provenance::default();
    let out_dir = resolve_out_dir(&mut prov, cli.out_dir, config.out_dir.clone());

    // Sweeps fan out across --jobs threads; every other command pins a
    // one-thread pool so a single run stays single-threaded.
    let threads = match &cli.command {
        Command::Sweep(_) => args::pick(&mut prov, "jobs", cli.jobs, config.jobs, 0),
        _ => 1,
    };
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(threads)
        .build()
        .map_err(|e| usage(format!("thread pool: {e}")))?;

    pool.install(|| match cli.command {
        Command::Evolve(a) => evolve(a, &config, prov, &out_dir),
        Command::Wigner(a) => wigner_cmd(a, &config, prov, &out_dir),
        Command::Sweep(a) => sweep(a, &config, prov, &out_dir),
        Command::Threshold(a) => threshold(a, &config, prov, &out_dir),
        Command::Dyson(a) => dyson(a, &config, prov, &out_dir),
        Command::Figure(a) => figure(a, &config, prov, &out_dir),
    })
}

fn evolve(
    a: EvolveArgs,
    cfg: &FileConfig,
    mut prov: Provenance,
    out_dir: &Path,
) -> Result<(), CliError> {
    let omega = args::pick(&mut prov, "omega", a.omega, cfg.omega, 1.0);
    let omega_a = args::pick(&mut prov, "omega_a", a.omega_a, cfg.omega_a, 1.0);
    let g = args::require(&mut prov, "g", a.g, cfg.g)?;
    let units = args::pick_enum(
        &mut prov,
        "tau_units",
        a.tau_units,
        cfg.tau_units.as_deref(),
        TauUnits::Abs,
    )?;
    let tau = resolve_tau(&mut prov, a.tau.as_deref(), cfg.tau.as_ref(), units, g)?;
    let n_max = args::pick(&mut prov, "nmax", a.nmax, cfg.nmax, 60);
    let rwa = args::pick(&mut prov, "rwa", a.rwa.then_some(true), cfg.rwa, false);
    let condition = args::pick_enum(
        &mut prov,
        "condition",
        a.condition,
        cfg.condition.as_deref(),
        ConditionArg::None,
    )?;
    let out = args::pick(
        &mut prov,
        "out",
        a.out,
        cfg.out.clone(),
        PathBuf::from("state.json"),
    );

    let params = ModelParams::new(omega, omega_a, g)?;
    let state = evolve_ground_auto(&params, FockBasis::new(n_max)?, tau, rwa)?;
    let conditioning = Conditioning::from(condition);
    let field = conditioning.reduce(&state)?;
    let populations: Vec<f64> = field.populations().iter().copied().collect();

    let doc = json!({
        "provenance": prov.value(),
        "model": { "omega": omega, "omega_a": omega_a, "g": g, "rwa": rwa },
        "state": &state,
        "conditioning": conditioning,
        "field_kind": field.kind(),
        "field_populations": populations,
        "tail_mass": state.tail_mass(),
    });

    let path = out_path(out_dir, out);
    write_json(&path, &doc)?;
    println!(
        "{}",
        json!({
            "out": path.display().to_string(),
            "n_max": state.basis().n_max(),
            "tau": tau,
            "tail_mass": state.tail_mass(),
        })
    );
    Ok(())
}

fn wigner_cmd(
    a: WignerArgs,
    cfg: &FileConfig,
    mut prov: Provenance,
    out_dir: &Path,
) -> Result<(), CliError> {
    let condition = args::pick_enum(
        &mut prov,
        "condition",
        a.condition,
        cfg.condition.as_deref(),
        ConditionArg::None,
    )?;
    let step = args::pick(&mut prov, "step", a.step, cfg.step, DEFAULT_STEP);
    let extent = args::pick_opt(&mut prov, "extent", a.extent, cfg.extent);
    let out = args::pick(
        &mut prov,
        "out",
        a.out,
        cfg.out.clone(),
        PathBuf::from("wigner.csv"),
    );

    let state = match &a.state {
        Some(path) => {
            prov.note("state", &path.display().to_string(), "flag");
            load_state(path)?
        }
        None => {
            let omega = args::pick(&mut prov, "omega", a.omega, cfg.omega, 1.0);
            let omega_a = args::pick(&mut prov, "omega_a", a.omega_a, cfg.omega_a, 1.0);
            let g = args::require(&mut prov, "g", a.g, cfg.g)?;
            let units = args::pick_enum(
                &mut prov,
                "tau_units",
                a.tau_units,
                cfg.tau_units.as_deref(),
                TauUnits::Abs,
            )?;
            let tau = resolve_tau(&mut prov, a.tau.as_deref(), cfg.tau.as_ref(), units, g)?;
            let n_max = args::pick(&mut prov, "nmax", a.nmax, cfg.nmax, 60);
            let rwa = args::pick(&mut prov, "rwa", a.rwa.then_some(true), cfg.rwa, false);
            let params = ModelParams::new(omega, omega_a, g)?;
            evolve_ground_auto(&params, FockBasis::new(n_max)?, tau, rwa)?
        }
    };

    let field = Conditioning::from(condition).reduce(&state)?;
    let grid = wigner::wigner_function(&field, extent.map_or(Extent::Auto, Extent::Fixed), step)?;
    let result = wigner::negativity(&grid);

    let path = out_path(out_dir, out);
    let mut file = create(&path)?;
    grid.write_csv(&mut file, &[prov.line()])?;
    if let Some(name) = a.gnuplot.or_else(|| cfg.gnuplot.clone()) {
        let mut f = create(&out_path(out_dir, name))?;
        grid.write_gnuplot(&mut f, &[prov.line()])?;
    }
    println!("{}", serde_json::to_string(&result)?);
    Ok(())
}

fn sweep(
    a: SweepArgs,
    cfg: &FileConfig,
    mut prov: Provenance,
    out_dir: &Path,
) -> Result<(), CliError> {
    let omega = args::pick(&mut prov, "omega", a.omega, cfg.omega, 1.0);
    let omega_a = args::pick(&mut prov, "omega_a", a.omega_a, cfg.omega_a, 1.0);
    let units = args::pick_enum(
        &mut prov,
        "tau_units",
        a.tau_units,
        cfg.tau_units.as_deref(),
        TauUnits::Abs,
    )?;
    let condition = args::pick_enum(
        &mut prov,
        "condition",
        a.condition,
        cfg.condition.as_deref(),
        ConditionArg::None,
    )?;
    let n_max = args::pick(&mut prov, "nmax", a.nmax, cfg.nmax, 60);
    let step = args::pick(&mut prov, "step", a.step, cfg.step, DEFAULT_STEP);
    let extent = args::pick_opt(&mut prov, "extent", a.extent, cfg.extent);
    let g_values = resolve_axis_g(&mut prov, &a, cfg)?;
    let tau_values = resolve_axis_tau(&mut prov, &a, cfg, units)?;
    let out = args::pick(
        &mut prov,
        "out",
        a.out,
        cfg.out.clone(),
        PathBuf::from("sweep.csv"),
    );

    let spec = SweepSpec {
        g_values,
        tau_values,
        tau_in_transfer_units: matches!(units, TauUnits::PiOver2g),
        conditioning: Conditioning::from(condition),
        step,
        extent,
        n_max,
    };
    let params = ModelParams::new(omega, omega_a, 0.0)?;
    let surface = explorer::negativity_surface(&spec, &params)?;

    let path = out_path(out_dir, out);
    let mut file = create(&path)?;
    surface.write_csv(&mut file, &[prov.line()])?;
    println!(
        "{}",
        json!({
            "out": path.display().to_string(),
            "points": surface.points.len(),
            "failures": surface.failures.len(),
        })
    );
    Ok(())
}

fn threshold(
    a: ThresholdArgs,
    cfg: &FileConfig,
    mut prov: Provenance,
    out_dir: &Path,
) -> Result<(), CliError> {
    let order = pick_order(&mut prov, a.order, cfg.order.as_ref())?;
    let axis = args::pick_enum(&mut prov, "axis", a.axis, cfg.axis.as_deref(), AxisArg::Tau)?;
    let omega = args::pick(&mut prov, "omega", a.omega, cfg.omega, 1.0);
    let omega_a = args::pick(&mut prov, "omega_a", a.omega_a, cfg.omega_a, 1.0);
    let condition = args::pick_enum(
        &mut prov,
        "condition",
        a.condition,
        cfg.condition.as_deref(),
        ConditionArg::None,
    )?;
    let epsilon = args::pick(
        &mut prov,
        "epsilon",
        a.epsilon,
        cfg.epsilon,
        DEFAULT_EPSILON,
    );
    let n_max = args::pick(&mut prov, "nmax", a.nmax, cfg.nmax, 60);
    let step = args::pick(&mut prov, "step", a.step, cfg.step, DEFAULT_STEP);

    if !matches!(order, OrderArg::Exact) && !matches!(condition, ConditionArg::None) {
        return Err(usage(
            "series orders score the unconditioned field; drop --condition",
        ));
    }

    let outcome = match axis {
        AxisArg::Tau => {
            let g = args::require(&mut prov, "g", a.g, cfg.g)?;
            let params = ModelParams::new(omega, omega_a, g)?;
            let search = resolve_search(
                &mut prov,
                a.search.as_deref(),
                cfg.search.as_deref(),
                "0:1.2pi",
                true,
            )?;
            match order {
                OrderArg::Exact => explorer::exact_threshold(
                    &params,
                    ThresholdAxis::Tau,
                    search,
                    epsilon,
                    FockBasis::new(n_max)?,
                    Conditioning::from(condition),
                    step,
                )?,
                OrderArg::Two => perturbative_threshold(&params, 2, search, epsilon, step)?,
                OrderArg::Four => perturbative_threshold(&params, 4, search, epsilon, step)?,
            }
        }
        AxisArg::G => {
            if !matches!(order, OrderArg::Exact) {
                return Err(usage("series thresholds search along tau; use --axis tau"));
            }
            let units = args::pick_enum(
                &mut prov,
                "tau_units",
                a.tau_units,
                cfg.tau_units.as_deref(),
                TauUnits::Abs,
            )?;
            if matches!(units, TauUnits::PiOver2g) {
                return Err(usage(
                    "--axis g fixes tau in absolute units; pi/2g would need the g being searched",
                ));
            }
            let tau = resolve_tau(&mut prov, a.tau.as_deref(), cfg.tau.as_ref(), units, 0.0)?;
            let params = ModelParams::new(omega, omega_a, 0.0)?;
            let search = resolve_search(
                &mut prov,
                a.search.as_deref(),
                cfg.search.as_deref(),
                "0:2",
                false,
            )?;
            explorer::exact_threshold(
                &params,
                ThresholdAxis::G { tau },
                search,
                epsilon,
                FockBasis::new(n_max)?,
                Conditioning::from(condition),
                step,
            )?
        }
    };

    println!("{}", serde_json::to_string(&outcome)?);
    if let Some(name) = a.out.or_else(|| cfg.out.clone()) {
        let mut doc = serde_json::to_value(&outcome)?;
        doc.as_object_mut()
            .expect("threshold outcomes serialize as objects")
            .insert("provenance".into(), prov.value());
        write_json(&out_path(out_dir, name), &doc)?;
    }
    Ok(())
}

fn dyson(
    a: DysonArgs,
    cfg: &FileConfig,
    mut prov: Provenance,
    out_dir: &Path,
) -> Result<(), CliError> {
    let omega = args::pick(&mut prov, "omega", a.omega, cfg.omega, 1.0);
    let omega_a = args::pick(&mut prov, "omega_a", a.omega_a, cfg.omega_a, 1.0);
    let g = args::require(&mut prov, "g", a.g, cfg.g)?;
    let units = args::pick_enum(
        &mut prov,
        "tau_units",
        a.tau_units,
        cfg.tau_units.as_deref(),
        TauUnits::Abs,
    )?;
    let tau = resolve_tau(&mut prov, a.tau.as_deref(), cfg.tau.as_ref(), units, g)?;
    let order = pick_dyson_order(&mut prov, a.order, cfg.order.as_ref())?;
    let out = args::pick(
        &mut prov,
        "out",
        a.out,
        cfg.out.clone(),
        PathBuf::from("dyson.json"),
    );

    let params = ModelParams::new(omega, omega_a, g)?;
    let expansion = DysonExpansion::new(&params, order)?;
    let state = expansion.state_at(tau)?;
    let populations: Vec<f64> = perturbative_populations(&expansion, tau)?
        .iter()
        .copied()
        .collect();

    let mut doc = state.to_json();
    let obj = doc
        .as_object_mut()
        .expect("series states serialize as objects");
    obj.insert("provenance".into(), prov.value());
    obj.insert("g".into(), json!(g));
    obj.insert("omega".into(), json!(omega));
    obj.insert("omega_a".into(), json!(omega_a));
    // Probability the truncated series fails to account for; shrinks with
    // the order and with g.
    let norm = state.norm();
    obj.insert("norm_deficit".into(), json!(1.0 - norm * norm));
    obj.insert("normalized_populations".into(), json!(populations));

    let path = out_path(out_dir, out);
    write_json(&path, &doc)?;
    println!(
        "{}",
        json!({
            "out": path.display().to_string(),
            "order": order,
            "tau": tau,
            "norm": norm,
        })
    );
    Ok(())
}

fn figure(
    a: FigureArgs,
    cfg: &FileConfig,
    mut prov: Provenance,
    out_dir: &Path,
) -> Result<(), CliError> {
    prov.note("which", &args::enum_name(&a.which), "flag");
    let mut options = FigureOptions::default();
    options.n_max = args::pick(&mut prov, "nmax", a.nmax, cfg.nmax, options.n_max);
    options.step = args::pick(&mut prov, "step", a.step, cfg.step, options.step);

    let written = explorer::figure_dataset(a.which.into(), &options, out_dir)?;
    // The dataset writer produces its own per-file comments; stack the
    // provenance line on top.
    for path in &written {
        let text = fs::read_to_string(path)?;
        fs::write(path, format!("# {}\n{text}", prov.line()))?;
    }
    let files: Vec<String> = written.iter().map(|p| p.display().to_string()).collect();
    println!("{}", json!({ "files": files.len(), "out": files }));
    Ok(())
}

// ---------------------------------------------------------------------------
// Shared resolution helpers
// ---------------------------------------------------------------------------

fn resolve_out_dir(
    prov: &mut Provenance,
    flag: Option<PathBuf>,
    config: Option<PathBuf>,
) -> PathBuf {
    // The only environment override: where outputs land.
    let env = std::env::var_os("DCESIM_OUT_DIR").map(PathBuf::from);
    let (dir, source) = match (flag, env, config) {
        (Some(d), _, _) => (d, "flag"),
        (None, Some(d), _) => (d, "env"),
        (None, None, Some(d)) => (d, "config"),
        (None, None, None) => (PathBuf::from("."), "default"),
    };
    prov.note("out_dir", &dir.display().to_string(), source);
    dir
}

/// Pulse length from its literal and units. In pi/2g units the value is a
/// plain multiplier, so the pi suffix is rejected there.
fn resolve_tau(
    prov: &mut Provenance,
    flag: Option<&str>,
    config: Option<&TimeSpec>,
    units: TauUnits,
    g: f64,
) -> Result<f64, CliError> {
    let (raw, source) = match (flag, config) {
        (Some(s), _) => (s.to_string(), "flag"),
        (None, Some(t)) => (t.raw(), "config"),
        (None, None) => return Err(usage("tau is required: pass --tau or set it in the config")),
    };
    let tau = match units {
        TauUnits::Abs => args::parse_time(&raw)?,
        TauUnits::PiOver2g => {
            if raw.trim().ends_with("pi") {
                return Err(usage(format!(
                    "--tau {raw:?}: the pi suffix is only for absolute times; \
                     pi/2g values are plain multipliers"
                )));
            }
            let mult: f64 = raw
                .trim()
                .parse()
                .map_err(|_| usage(format!("bad --tau value {raw:?}")))?;
            if !(g > 0.0) {
                return Err(usage("--tau in pi/2g units needs g > 0"));
            }
            mult * std::f64::consts::PI / (2.0 * g)
        }
    };
    if !tau.is_finite() || tau < 0.0 {
        return Err(usage(format!("tau must be a finite time >= 0, got {tau}")));
    }
    prov.note("tau", &json!({ "raw": raw, "absolute": tau }), source);
    Ok(tau)
}

fn resolve_search(
    prov: &mut Provenance,
    flag: Option<&str>,
    config: Option<&str>,
    default: &str,
    pi_ok: bool,
) -> Result<(f64, f64), CliError> {
    let (raw, source) = match (flag, config) {
        (Some(s), _) => (s.to_string(), "flag"),
        (None, Some(s)) => (s.to_string(), "config"),
        (None, None) => (default.to_string(), "default"),
    };
    let parts: Vec<&str> = raw.split(':').collect();
    if parts.len() != 2 {
        return Err(usage(format!("search {raw:?} must be lo:hi")));
    }
    let parse_one = |s: &str| -> Result<f64, CliError> {
        if pi_ok {
            args::parse_time(s)
        } else {
            s.trim()
                .parse()
                .map_err(|_| usage(format!("bad search bound {s:?}")))
        }
    };
    let lo = parse_one(parts[0])?;
    let hi = parse_one(parts[1])?;
    prov.note("search", &json!({ "raw": raw, "bounds": [lo, hi] }), source);
    Ok((lo, hi))
}

fn resolve_axis_g(
    prov: &mut Provenance,
    a: &SweepArgs,
    cfg: &FileConfig,
) -> Result<Vec<f64>, CliError> {
    // A flag list or range beats the config; clap already rejects both
    // flags at once, and a config list wins over a config range.
    let (values, raw, source) = if let Some(list) = &a.g_list {
        (list.clone(), json!(list), "flag")
    } else if let Some(range) = &a.g_range {
        (args::parse_range(range, false)?, json!(range), "flag")
    } else if let Some(list) = &cfg.g_list {
        (list.clone(), json!(list), "config")
    } else if let Some(range) = &cfg.g_range {
        (args::parse_range(range, false)?, json!(range), "config")
    } else {
        return Err(usage("sweep needs --g-range or --g-list"));
    };
    prov.note("g_axis", &raw, source);
    Ok(values)
}

fn resolve_axis_tau(
    prov: &mut Provenance,
    a: &SweepArgs,
    cfg: &FileConfig,
    units: TauUnits,
) -> Result<Vec<f64>, CliError> {
    let pi_ok = matches!(units, TauUnits::Abs);
    let parse_one = |s: &str| -> Result<f64, CliError> {
        if pi_ok {
            args::parse_time(s)
        } else if s.trim().ends_with("pi") {
            Err(usage(format!(
                "tau {s:?}: the pi suffix is only for absolute times"
            )))
        } else {
            s.trim()
                .parse()
                .map_err(|_| usage(format!("bad tau value {s:?}")))
        }
    };
    let (values, raw, source) = if let Some(list) = &a.tau_list {
        let mut v = Vec::with_capacity(list.len());
        for s in list {
            v.push(parse_one(s)?);
        }
        (v, json!(list), "flag")
    } else if let Some(range) = &a.tau_range {
        (args::parse_range(range, pi_ok)?, json!(range), "flag")
    } else if let Some(list) = &cfg.tau_list {
        let mut v = Vec::with_capacity(list.len());
        for t in list {
            match t {
                TimeSpec::Number(x) => v.push(*x),
                TimeSpec::Text(s) => v.push(parse_one(s)?),
            }
        }
        (v, json!(list), "config")
    } else if let Some(range) = &cfg.tau_range {
        (args::parse_range(range, pi_ok)?, json!(range), "config")
    } else {
        return Err(usage("sweep needs --tau-range or --tau-list"));
    };
    prov.note("tau_axis", &raw, source);
    Ok(values)
}

fn pick_order(
    prov: &mut Provenance,
    flag: Option<OrderArg>,
    config: Option<&Value>,
) -> Result<OrderArg, CliError> {
    let (value, source) = match (flag, config) {
        (Some(v), _) => (v, "flag"),
        (None, Some(v)) => (order_from_value(v)?, "config"),
        (None, None) => (OrderArg::Exact, "default"),
    };
    prov.note("order", &args::enum_name(&value), source);
    Ok(value)
}

fn order_from_value(v: &Value) -> Result<OrderArg, CliError> {
    match v {
        Value::String(s) if s == "exact" => Ok(OrderArg::Exact),
        Value::String(s) if s == "2" => Ok(OrderArg::Two),
        Value::String(s) if s == "4" => Ok(OrderArg::Four),
        Value::Number(n) if n.as_u64() == Some(2) => Ok(OrderArg::Two),
        Value::Number(n) if n.as_u64() == Some(4) => Ok(OrderArg::Four),
        other => Err(usage(format!(
            "config order: want \"exact\", 2, or 4, got {other}"
        ))),
    }
}

fn pick_dyson_order(
    prov: &mut Provenance,
    flag: Option<usize>,
    config: Option<&Value>,
) -> Result<usize, CliError> {
    let (value, source) = match (flag, config) {
        (Some(v), _) => (v, "flag"),
        (None, Some(Value::Number(n))) => match n.as_u64() {
            Some(v) => (v as usize, "config"),
            None => return Err(usage(format!("config order: bad value {n}"))),
        },
        (None, Some(Value::String(s))) => (
            s.parse()
                .map_err(|_| usage(format!("config order: bad value {s:?}")))?,
            "config",
        ),
        (None, Some(other)) => return Err(usage(format!("config order: bad value {other}"))),
        (None, None) => (4, "default"),
    };
    prov.note("order", &value, source);
    Ok(value)
}

// ---------------------------------------------------------------------------
// File helpers
// ---------------------------------------------------------------------------

fn out_path(out_dir: &Path, name: PathBuf) -> PathBuf {
    if name.is_absolute() {
        name
    } else {
        out_dir.join(name)
    }
}

fn create(path: &Path) -> Result<fs::File, CliError> {
    if let Some(dir) = path.parent() {
        if !dir.as_os_str().is_empty() {
            fs::create_dir_all(dir)?;
        }
    }
    Ok(fs::File::create(path)?)
}

fn write_json(path: &Path, doc: &Value) -> Result<(), CliError> {
    let mut f = create(path)?;
    serde_json::to_writer_pretty(&mut f, doc)?;
    writeln!(f)?;
    Ok(())
}

/// Rebuild a state saved by `evolve`; shape and norm are re-validated by
/// the core on the way in. Amplitude floats parse back to the exact bits
/// the writer held, so a grid over a reloaded state matches the inline
/// run byte for byte.
fn load_state(path: &Path) -> Result<JointState, CliError> {
    let bad = |e: String| usage(format!("state {}: {e}", path.display()));
    let text = fs::read_to_string(path).map_err(|e| bad(e.to_string()))?;
    let doc: Value = serde_json::from_str(&text).map_err(|e| bad(e.to_string()))?;
    let inner = doc
        .get("state")
        .cloned()
        .ok_or_else(|| bad("no \"state\" object".into()))?;
    serde_json::from_value::<JointState>(inner).map_err(|e| bad(e.to_string()))
}
