//! Run configuration: a TOML file with an ensemble description, simulator
//! settings and a list of experiments.
//!
//! Numeric fields with a physical dimension accept either a bare SI number or
//! a quantity string such as `"64.1 us"`. The `[ensemble]` table starts from
//! a preset (`chip1h` or `chip3h`) and overrides individual fields; `[sim]`
//! starts from the simulator defaults.

use std::path::{Path, PathBuf};

use photon_echo::fit::ModelSpec;
use photon_echo::sim::SimConfig;
use photon_echo::units::{parse_si, Dimension};
use photon_echo::{EnsembleSpec, Validate};
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::error::{CliError, CliResult};

pub const TOOL: &str = "pecho";
pub const VERSION: &str = env!("CARGO_PKG_VERSION");

#[derive(Debug, Clone, PartialEq, Deserialize)]
#[serde(untagged)]
pub enum Quantity {
    Number(f64),
    Text(String),
}

impl Quantity {
    pub fn si(&self, dim: Dimension, what: &str) -> CliResult<f64> {
        match self {
            Quantity::Number(v) => Ok(*v),
            Quantity::Text(t) => {
                parse_si(t, dim).map_err(|e| CliError::invalid(format!("{what}: {e}")))
            }
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Deserialize, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Spacing {
    #[default]
    Linear,
    Log,
}

/// Either explicit values or `points` samples from `start` to `stop`.
#[derive(Debug, Clone, PartialEq, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GridDecl {
    pub variable: Option<String>,
    pub values: Option<Vec<Quantity>>,
    pub start: Option<Quantity>,
    pub stop: Option<Quantity>,
    pub points: Option<usize>,
    #[serde(default)]
    pub spacing: Spacing,
}

impl GridDecl {
    fn resolve(&self, dim: Dimension, what: &str) -> CliResult<Vec<f64>> {
        let range = (&self.start, &self.stop, self.points);
        match (&self.values, range) {
            (Some(vals), (None, None, None)) => vals
                .iter()
                .enumerate()
                .map(|(i, q)| q.si(dim, &format!("{what}.values[{i}]")))
                .collect(),
            (None, (Some(a), Some(b), Some(n))) => {
                let a = a.si(dim, &format!("{what}.start"))?;
                let b = b.si(dim, &format!("{what}.stop"))?;
                if n < 2 {
                    return Err(CliError::invalid(format!("{what}.points must be >= 2")));
                }
                let lerp = |t: f64| match self.spacing {
                    Spacing::Linear => a + (b - a) * t,
                    Spacing::Log => (a.ln() + (b.ln() - a.ln()) * t).exp(),
                };
                if self.spacing == Spacing::Log && !(a > 0.0 && b > 0.0) {
                    return Err(CliError::invalid(format!(
                        "{what}: log spacing needs positive start and stop"
                    )));
                }
                Ok((0..n)
                    .map(|k| if k + 1 == n { b } else { lerp(k as f64 / (n - 1) as f64) })
                    .collect())
            }
            _ => Err(CliError::invalid(format!(
                "{what}: give either `values` or all of `start`, `stop`, `points`"
            ))),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Deserialize, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum ExperimentKind {
    /// Single π/2–τ–π trace over the detection window.
    Trace,
    TwoPulse,
    ThreePulse,
    Stark,
    Recovery,
}

impl ExperimentKind {
    /// Name of the swept variable, if the kind sweeps.
    pub fn sweep_variable(self) -> Option<&'static str> {
        match self {
            ExperimentKind::Trace => None,
            ExperimentKind::TwoPulse | ExperimentKind::ThreePulse => Some("tau"),
            ExperimentKind::Stark => Some("t_pulse"),
            ExperimentKind::Recovery => Some("t_wait"),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentDecl {
    pub name: String,
    pub kind: ExperimentKind,
    pub sweep: Option<GridDecl>,
    pub t_wait: Option<GridDecl>,
    pub field: Option<Quantity>,
    pub tau: Option<Quantity>,
    pub window: Option<Quantity>,
    #[serde(default)]
    pub fit: Vec<String>,
}

#[derive(Debug, Clone, PartialEq, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawConfig {
    seed: Option<u64>,
    out_dir: Option<PathBuf>,
    #[serde(default)]
    ensemble: toml::Table,
    #[serde(default)]
    sim: toml::Table,
    #[serde(default, rename = "experiment")]
    experiments: Vec<ExperimentDecl>,
    #[serde(default)]
    report: Option<toml::Table>,
}

/// Fully resolved experiment, all values SI.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Experiment {
    pub name: String,
    pub kind: ExperimentKind,
    pub grid: Vec<f64>,
    pub t_wait: Vec<f64>,
    pub field: Option<f64>,
    pub tau: Option<f64>,
    pub window: Option<f64>,
    pub fit: Vec<String>,
}

/// Everything that determines the outputs of a run. Its canonical TOML form
/// is what the manifest hash covers.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RunConfig {
    pub tool: String,
    pub version: String,
    pub ensemble: EnsembleSpec,
    pub sim: SimConfig,
    #[serde(rename = "experiment")]
    pub experiments: Vec<Experiment>,
}

pub struct Loaded {
    pub run: RunConfig,
    pub out_dir: Option<PathBuf>,
    pub report: Option<toml::Table>,
}

impl RunConfig {
    pub fn canonical(&self) -> String {
        toml::to_string(self).expect("run config serializes")
    }

    pub fn sha256(&self) -> String {
        sha256_hex(self.canonical().as_bytes())
    }
}

pub fn sha256_hex(bytes: &[u8]) -> String {
    hex::encode(Sha256::digest(bytes))
}

fn ensemble_dimension(path: &str) -> Option<Dimension> {
    use Dimension::*;
    Some(match path {
        "t1_optical" | "t2_optical" | "spin_t1_short" | "spin_t1_long" | "bath.tls_t0" => Time,
        "line.center_frequency" | "line.fwhm" | "bath.flip_rate" | "bath.max_shift"
        | "bath.tls_rate" | "shf_modulation.frequency" => Frequency,
        "stark_k" => StarkCoefficient,
        _ => return None,
    })
}

fn sim_dimension(path: &str) -> Option<Dimension> {
    use Dimension::*;
    Some(match path {
        "time_step" | "detection_bin" | "pulse_duration" | "lead" | "detect_window"
        | "stark_tau" | "recovery.saturation_duration" => Time,
        "pulse_bandwidth" | "recovery.pump_rate" => Frequency,
        _ => return None,
    })
}

const OPTIONAL_TABLES: [&str; 2] = ["bath", "shf_modulation"];

/// Overlays `over` onto `base`, converting quantity strings to SI.
fn overlay(
    base: &mut toml::Table,
    over: &toml::Table,
    prefix: &str,
    section: &str,
    dim: fn(&str) -> Option<Dimension>,
) -> CliResult<()> {
    for (key, value) in over {
        let path = if prefix.is_empty() {
            key.clone()
        } else {
            format!("{prefix}.{key}")
        };
        match value {
            toml::Value::String(s) if s == "none" && OPTIONAL_TABLES.contains(&path.as_str()) => {
                base.remove(key);
            }
            toml::Value::Table(t) => {
                let slot = base
                    .entry(key.clone())
                    .or_insert_with(|| toml::Value::Table(toml::Table::new()));
                match slot {
                    toml::Value::Table(inner) => overlay(inner, t, &path, section, dim)?,
                    _ => {
                        return Err(CliError::invalid(format!(
                            "[{section}] field `{path}` is not a table"
                        )))
                    }
                }
            }
            toml::Value::String(s) => {
                let v = match dim(&path) {
                    Some(d) => toml::Value::Float(
                        parse_si(s, d)
                            .map_err(|e| CliError::invalid(format!("[{section}] {path}: {e}")))?,
                    ),
                    None => value.clone(),
                };
                base.insert(key.clone(), v);
            }
            toml::Value::Integer(i) if dim(&path).is_some() => {
                base.insert(key.clone(), toml::Value::Float(*i as f64));
            }
            _ => {
                base.insert(key.clone(), value.clone());
            }
        }
    }
    Ok(())
}

/// Reports keys of `user` that did not survive a round trip through the
/// target type.
fn unknown_keys(user: &toml::Table, known: &toml::Table, prefix: &str, out: &mut Vec<String>) {
    for (key, value) in user {
        let path = if prefix.is_empty() {
            key.clone()
        } else {
            format!("{prefix}.{key}")
        };
        match (value, known.get(key)) {
            (_, None) => {
                if !(value.as_str() == Some("none") && OPTIONAL_TABLES.contains(&path.as_str())) {
                    out.push(path)
                }
            }
            (toml::Value::Table(u), Some(toml::Value::Table(k))) => unknown_keys(u, k, &path, out),
            _ => {}
        }
    }
}

fn build<T>(base: T, user: &toml::Table, section: &str, dim: fn(&str) -> Option<Dimension>) -> CliResult<T>
where
    T: Serialize + serde::de::DeserializeOwned,
{
    let mut table = toml::Table::try_from(&base).expect("defaults serialize");
    overlay(&mut table, user, "", section, dim)?;
    let value: T = toml::Value::Table(table)
        .try_into()
        .map_err(|e: toml::de::Error| CliError::invalid(format!("[{section}]: {}", e.message())))?;
    let known = toml::Table::try_from(&value).expect("value serializes");
    let mut unknown = vec![];
    unknown_keys(user, &known, "", &mut unknown);
    if !unknown.is_empty() {
        return Err(CliError::invalid(format!(
            "[{section}]: unknown field(s) {}",
            unknown.iter().map(|u| format!("`{u}`")).collect::<Vec<_>>().join(", ")
        )));
    }
    Ok(value)
}

pub fn ensemble_from_table(table: &toml::Table) -> CliResult<EnsembleSpec> {
    let mut user = table.clone();
    let preset = match user.remove("preset") {
        None => "chip3h".to_string(),
        Some(toml::Value::String(s)) => s,
        Some(v) => return Err(CliError::invalid(format!("[ensemble] preset must be a string, got {v}"))),
    };
    let base = preset_spec(&preset)?;
    let spec = build(base, &user, "ensemble", ensemble_dimension)?;
    spec.validate()
        .into_result("ensemble spec")
        .map_err(CliError::from)?;
    Ok(spec)
}

pub fn preset_spec(name: &str) -> CliResult<EnsembleSpec> {
    match name {
        "chip1h" => Ok(EnsembleSpec::chip1h()),
        "chip3h" => Ok(EnsembleSpec::chip3h()),
        other => Err(CliError::invalid(format!(
            "unknown ensemble preset `{other}` (expected chip1h or chip3h)"
        ))),
    }
}

fn resolve_experiment(decl: &ExperimentDecl) -> CliResult<Experiment> {
    let what = format!("experiment `{}`", decl.name);
    let name_ok = !decl.name.is_empty()
        && decl
            .name
            .chars()
            .all(|c| c.is_ascii_alphanumeric() || c == '_' || c == '-');
    if !name_ok {
        return Err(CliError::invalid(format!(
            "{what}: name must be non-empty and use only [A-Za-z0-9_-]"
        )));
    }
    for id in &decl.fit {
        ModelSpec::by_id(id).map_err(|e| CliError::invalid(format!("{what}: {e}")))?;
    }
    let grid = match (decl.kind.sweep_variable(), &decl.sweep) {
        (Some(var), Some(sweep)) => {
            match sweep.variable.as_deref() {
                Some(v) if v == var => {}
                Some(v) => {
                    return Err(CliError::invalid(format!(
                        "{what}: a {:?} experiment sweeps `{var}`, not `{v}`",
                        decl.kind
                    )))
                }
                None => {
                    return Err(CliError::invalid(format!(
                        "{what}: sweep.variable is required (expected `{var}`)"
                    )))
                }
            }
            sweep.resolve(Dimension::Time, &format!("{what} sweep"))?
        }
        (Some(var), None) => {
            return Err(CliError::invalid(format!("{what}: missing sweep over `{var}`")))
        }
        (None, Some(_)) => {
            return Err(CliError::invalid(format!("{what}: a trace takes no sweep")))
        }
        (None, None) => vec![],
    };
    let t_wait = match (&decl.t_wait, decl.kind) {
        (Some(g), ExperimentKind::ThreePulse) => {
            if g.variable.is_some() {
                return Err(CliError::invalid(format!("{what}: t_wait is not a sweep; drop `variable`")));
            }
            g.resolve(Dimension::Time, &format!("{what} t_wait"))?
        }
        (None, ExperimentKind::ThreePulse) => {
            return Err(CliError::invalid(format!("{what}: three_pulse needs a t_wait list")))
        }
        (Some(_), _) => return Err(CliError::invalid(format!("{what}: t_wait only applies to three_pulse"))),
        (None, _) => vec![],
    };
    let field = match (&decl.field, decl.kind) {
        (Some(q), ExperimentKind::Stark) => Some(q.si(Dimension::ElectricField, &format!("{what} field"))?),
        (None, ExperimentKind::Stark) => {
            return Err(CliError::invalid(format!("{what}: stark needs a field")))
        }
        (Some(_), _) => return Err(CliError::invalid(format!("{what}: field only applies to stark"))),
        (None, _) => None,
    };
    let tau = match (&decl.tau, decl.kind) {
        (Some(q), ExperimentKind::Trace) => Some(q.si(Dimension::Time, &format!("{what} tau"))?),
        (None, ExperimentKind::Trace) => {
            return Err(CliError::invalid(format!("{what}: trace needs tau")))
        }
        (Some(_), _) => return Err(CliError::invalid(format!("{what}: tau only applies to trace"))),
        (None, _) => None,
    };
    let window = match (&decl.window, decl.kind) {
        (Some(q), ExperimentKind::Trace) => Some(q.si(Dimension::Time, &format!("{what} window"))?),
        (Some(_), _) => return Err(CliError::invalid(format!("{what}: window only applies to trace"))),
        (None, _) => None,
    };
    if decl.kind == ExperimentKind::Trace && !decl.fit.is_empty() {
        return Err(CliError::invalid(format!("{what}: traces cannot be fitted")));
    }
    Ok(Experiment {
        name: decl.name.clone(),
        kind: decl.kind,
        grid,
        t_wait,
        field,
        tau,
        window,
        fit: decl.fit.clone(),
    })
}

/// Parses and validates config text. `seed` overrides the file's seed.
pub fn parse_config(text: &str, origin: &str, seed: Option<u64>) -> CliResult<Loaded> {
    let raw: RawConfig = toml::from_str(text)
        .map_err(|e| CliError::invalid(format!("{origin}: {}", e.to_string().trim_end())))?;
    let ensemble = ensemble_from_table(&raw.ensemble)?;
    let mut sim = build(SimConfig::default(), &raw.sim, "sim", sim_dimension)?;
    if let Some(s) = seed.or(raw.seed) {
        sim.seed = s;
    }
    sim.validate()
        .into_result("sim config")
        .map_err(CliError::from)?;
    let mut experiments = vec![];
    for decl in &raw.experiments {
        if experiments.iter().any(|e: &Experiment| e.name == decl.name) {
            return Err(CliError::invalid(format!(
                "duplicate experiment name `{}`",
                decl.name
            )));
        }
        experiments.push(resolve_experiment(decl)?);
    }
    Ok(Loaded {
        run: RunConfig {
            tool: TOOL.into(),
            version: VERSION.into(),
            ensemble,
            sim,
            experiments,
        },
        out_dir: raw.out_dir,
        report: raw.report,
    })
}

pub fn load_config(path: &Path, seed: Option<u64>) -> CliResult<Loaded> {
    let text = std::fs::read_to_string(path).map_err(|e| CliError::io(path, e))?;
    parse_config(&text, &path.display().to_string(), seed)
}
