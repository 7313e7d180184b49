//! Fit result files and their human-readable summaries.

use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::path::Path;

use photon_echo::fit::{ModelSpec, ParamRole};
use photon_echo::metrics::format_si;
use photon_echo::units::Unit;
use photon_echo::{FitResult, SweepCurve};
use serde::{Deserialize, Serialize};

use crate::config::{TOOL, VERSION};
use crate::error::{CliError, CliResult};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ParamRecord {
    pub name: String,
    /// SI value.
    pub value: f64,
    /// One-sigma error; absent when infinite or undefined.
    pub stderr: Option<f64>,
    pub unit: String,
    pub fixed: bool,
}

/// On-disk form of a [`FitResult`]. Non-finite covariance entries are stored
/// as `null`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FitRecord {
    pub tool: String,
    pub version: String,
    pub dataset: String,
    pub dataset_sha256: String,
    pub model_id: String,
    pub converged: bool,
    pub params: Vec<ParamRecord>,
    pub covariance: Vec<Vec<Option<f64>>>,
    pub residual_norm: f64,
    pub n_points: usize,
    pub iterations: usize,
    pub diagnostic: Option<String>,
    pub metadata: BTreeMap<String, String>,
    /// Units of the fitted abscissa and ordinate (SI).
    pub abscissa_unit: String,
    pub ordinate_unit: String,
}

fn finite(v: f64) -> Option<f64> {
    v.is_finite().then_some(v)
}

/// SI unit of a fitted parameter given the SI units of the fitted curve.
fn param_unit(model: &ModelSpec, name: &str, x: Unit, y: Unit) -> String {
    let role = model
        .params
        .iter()
        .find(|p| p.name == name)
        .map(|p| p.role)
        .unwrap_or(ParamRole::Shape);
    if role == ParamRole::Amplitude {
        return y.tag().into();
    }
    match (model.id, name) {
        (_, "t2" | "t1_short" | "t1_long") => "s".into(),
        (_, "x") => "1".into(),
        ("lorentzian", "center" | "fwhm") => x.tag().into(),
        ("linear_broadening", "alpha") => format!("{}/{}", y.tag(), x.tag()),
        ("linear_broadening", _) => y.tag().into(),
        (_, "k") => "Hz/(V/m)".into(),
        (id, _) if id.starts_with("sd_") || id == "spectral_diffusion" => "Hz".into(),
        _ => y.tag().into(),
    }
}

impl FitRecord {
    pub fn new(result: &FitResult, curve: &SweepCurve, dataset: &str, dataset_sha256: &str) -> CliResult<Self> {
        let model = ModelSpec::by_id(&result.model_id)?;
        let (xu, yu) = (curve.abscissa.unit.si(), curve.ordinate.unit.si());
        let params = result
            .param_names
            .iter()
            .enumerate()
            .map(|(i, name)| ParamRecord {
                name: name.clone(),
                value: result.params[i],
                stderr: finite(result.covariance[i][i].max(0.0).sqrt()),
                unit: param_unit(&model, name, xu, yu),
                fixed: result.fixed.contains(name),
            })
            .collect();
        Ok(Self {
            tool: TOOL.into(),
            version: VERSION.into(),
            dataset: dataset.into(),
            dataset_sha256: dataset_sha256.into(),
            model_id: result.model_id.clone(),
            converged: result.converged,
            params,
            covariance: result
                .covariance
                .iter()
                .map(|row| row.iter().map(|&v| finite(v)).collect())
                .collect(),
            residual_norm: result.residual_norm,
            n_points: result.n_points,
            iterations: result.iterations,
            diagnostic: result.diagnostic.clone(),
            metadata: result.metadata.clone(),
            abscissa_unit: xu.tag().into(),
            ordinate_unit: yu.tag().into(),
        })
    }

    pub fn get(&self, name: &str) -> Option<f64> {
        self.params.iter().find(|p| p.name == name).map(|p| p.value)
    }

    pub fn values(&self) -> Vec<f64> {
        self.params.iter().map(|p| p.value).collect()
    }

    /// Registry model with the reference time used by the fit.
    pub fn model(&self) -> CliResult<ModelSpec> {
        let mut m = ModelSpec::by_id(&self.model_id)?;
        if let Some(t0) = self.metadata.get("t0") {
            m.t0 = Some(t0.parse().map_err(|_| {
                CliError::invalid(format!("fit record has a malformed t0 `{t0}`"))
            })?);
        }
        Ok(m)
    }

    pub fn to_json(&self) -> String {
        let mut s = serde_json::to_string_pretty(self).expect("fit record serializes");
        s.push('\n');
        s
    }

    pub fn read(path: &Path) -> CliResult<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| CliError::io(path, e))?;
        serde_json::from_str(&text)
            .map_err(|e| CliError::invalid(format!("{}: not a fit record: {e}", path.display())))
    }

    /// Multi-line summary, e.g. `T2 = 64.1 µs ± 1.20 µs`.
    pub fn summary(&self) -> String {
        let mut out = String::new();
        let state = if self.converged { "converged" } else { "NOT CONVERGED" };
        let _ = writeln!(
            out,
            "{} on {} ({} points, {state})",
            self.model_id, self.dataset, self.n_points
        );
        for p in &self.params {
            let label = display_name(&p.name);
            let value = quantity(p.value, &p.unit);
            if p.fixed {
                let _ = writeln!(out, "  {label} = {value} (fixed)");
                continue;
            }
            let err = match p.stderr {
                Some(se) => quantity(se, &p.unit),
                None => "not identifiable".into(),
            };
            let _ = writeln!(out, "  {label} = {value} ± {err}");
        }
        if self.model_id == "echo_decay" {
            if let Some(t2) = self.get("t2") {
                let gamma = 1.0 / (std::f64::consts::PI * t2);
                let se = self
                    .params
                    .iter()
                    .find(|p| p.name == "t2")
                    .and_then(|p| p.stderr)
                    .map(|se| gamma * se / t2);
                let err = se.map_or("not identifiable".into(), |s| format_si(s, "Hz"));
                let _ = writeln!(out, "  γ_h = 1/(πT2) = {} ± {err}", format_si(gamma, "Hz"));
            }
        }
        let _ = writeln!(out, "  residual norm = {:.4e}", self.residual_norm);
        if let Some(d) = &self.diagnostic {
            let _ = writeln!(out, "  note: {d}");
        }
        out
    }
}

fn display_name(name: &str) -> String {
    match name {
        "t2" => "T2".into(),
        "t1_short" => "T1,short".into(),
        "t1_long" => "T1,long".into(),
        other => other.into(),
    }
}

fn quantity(v: f64, unit: &str) -> String {
    match unit {
        "s" | "Hz" | "m" => format_si(v, unit),
        "1" | "arb" | "counts" => format!("{v:.6e}"),
        u => format!("{v:.6e} {u}"),
    }
}
