use std::path::PathBuf;

use photon_echo::analytic::{od_from_efficiency, EfficiencyForm, StarkKernel};
use photon_echo::metrics::{capability_report, CapabilityReport, DeviceGeometry, ReportOptions};
use photon_echo::units::Dimension;
use photon_echo::{DipoleKernel, EnsembleSpec, SuddenJumpBath, Validate};
use serde::{Deserialize, Serialize};

use crate::config::{ensemble_from_table, load_config, preset_spec, Quantity};
use crate::error::{CliError, CliResult};
use crate::fitio::FitRecord;
use crate::output::{file_name, Outputs};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Deserialize, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Form {
    /// (OD/4)²
    #[default]
    Approx,
    /// (2 sinh(OD/2))²
    Exact,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum GeometryName {
    Measured,
    Projected,
}

impl GeometryName {
    fn geometry(self) -> DeviceGeometry {
        match self {
            GeometryName::Measured => DeviceGeometry::measured(),
            GeometryName::Projected => DeviceGeometry::projected(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SemmDecl {
    pub geometry: GeometryName,
    pub kernel: DipoleKernel,
    pub target: f64,
}

/// `[report]` table of a config file; command-line flags take precedence.
#[derive(Debug, Clone, PartialEq, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ReportDecl {
    pub od: Option<f64>,
    pub efficiency: Option<f64>,
    pub efficiency_form: Option<Form>,
    pub purcell_factor: Option<f64>,
    pub spin_t2: Option<Quantity>,
    pub project_od: Option<bool>,
    pub semm: Option<SemmDecl>,
}

#[derive(Debug, Clone, Default)]
pub struct ReportArgs {
    pub config: Option<PathBuf>,
    pub preset: Option<String>,
    pub fits: Vec<PathBuf>,
    pub decl: ReportDecl,
}

#[derive(Serialize)]
struct ReportDoc<'a> {
    optical_depth_source: &'a str,
    inputs: &'a [String],
    report: &'a CapabilityReport,
}

pub struct ReportOutcome {
    pub table: String,
    pub json: String,
    pub outputs: Outputs,
}

fn merge(flags: ReportDecl, file: ReportDecl) -> ReportDecl {
    ReportDecl {
        od: flags.od.or(file.od),
        efficiency: flags.efficiency.or(file.efficiency),
        efficiency_form: flags.efficiency_form.or(file.efficiency_form),
        purcell_factor: flags.purcell_factor.or(file.purcell_factor),
        spin_t2: flags.spin_t2.or(file.spin_t2),
        project_od: flags.project_od.or(file.project_od),
        semm: flags.semm.or(file.semm),
    }
}

/// Folds fitted values into the spec; returns a line per applied fit.
fn apply_fit(spec: &mut EnsembleSpec, record: &FitRecord, origin: &str) -> CliResult<String> {
    let need = |name: &str| {
        record.get(name).ok_or_else(|| {
            CliError::invalid(format!("{origin}: {} fit lacks `{name}`", record.model_id))
        })
    };
    let applied = match record.model_id.as_str() {
        "echo_decay" => {
            spec.t2_optical = need("t2")?;
            "t2_optical"
        }
        "recovery_2exp" => {
            spec.spin_t1_short = need("t1_short")?;
            spec.spin_t1_long = need("t1_long")?;
            let (s, l) = (need("a_short")?.abs(), need("a_long")?.abs());
            if s + l > 0.0 {
                spec.short_fraction = s / (s + l);
            }
            "spin_t1_short, spin_t1_long, short_fraction"
        }
        "stark_sin4" | "stark_cos4" => {
            spec.stark_k = need("k")?;
            spec.dipole_kernel = if record.model_id == "stark_sin4" {
                DipoleKernel::Sin4
            } else {
                DipoleKernel::Cos4
            };
            "stark_k, dipole_kernel"
        }
        "spectral_diffusion" => {
            let t0 = record
                .metadata
                .get("t0")
                .and_then(|t| t.parse().ok())
                .unwrap_or(1e-4);
            spec.bath = Some(SuddenJumpBath {
                flip_rate: need("rate_r")?,
                max_shift: need("gamma_sd")?,
                tls_rate: need("gamma_tls")?,
                tls_t0: t0,
            });
            "bath"
        }
        other => return Ok(format!("{origin}: {other} does not enter the report (ignored)")),
    };
    if !record.converged {
        return Err(CliError::invalid(format!(
            "{origin}: refusing to use a fit that did not converge"
        )));
    }
    Ok(format!("{origin}: {applied} from {}", record.model_id))
}

pub fn cmd_report(args: ReportArgs) -> CliResult<ReportOutcome> {
    let (mut spec, file_decl) = match &args.config {
        Some(path) => {
            let loaded = load_config(path, None)?;
            let decl = match loaded.report {
                Some(t) => toml::Value::Table(t)
                    .try_into()
                    .map_err(|e: toml::de::Error| CliError::invalid(format!("[report]: {}", e.message())))?,
                None => ReportDecl::default(),
            };
            (loaded.run.ensemble, decl)
        }
        None => (ensemble_from_table(&toml::Table::new())?, ReportDecl::default()),
    };
    if let Some(p) = &args.preset {
        if args.config.is_some() {
            return Err(CliError::invalid("give either --config or --preset, not both"));
        }
        spec = preset_spec(p)?;
    }
    let decl = merge(args.decl, file_decl);
    let mut inputs = vec![];
    for path in &args.fits {
        let record = FitRecord::read(path)?;
        inputs.push(apply_fit(&mut spec, &record, &file_name(path))?);
    }
    spec.validate().into_result("ensemble spec")?;

    let (od, source) = match (decl.od, decl.efficiency) {
        (Some(_), Some(_)) => return Err(CliError::invalid("give either od or efficiency, not both")),
        (Some(od), None) => (od, "input".to_string()),
        (None, Some(eta)) => {
            let form = decl.efficiency_form.unwrap_or_default();
            let f = match form {
                Form::Approx => EfficiencyForm::PaperApprox,
                Form::Exact => EfficiencyForm::Exact,
            };
            (od_from_efficiency(eta, f)?, format!("from efficiency {eta:e} ({form:?})").to_lowercase())
        }
        (None, None) => return Err(CliError::invalid("the report needs an optical depth (--od) or an echo efficiency (--efficiency)")),
    };
    let opts = ReportOptions {
        purcell_factor: decl.purcell_factor,
        od_projection: decl
            .project_od
            .unwrap_or(false)
            .then(|| (DeviceGeometry::measured(), DeviceGeometry::projected())),
        semm: decl
            .semm
            .as_ref()
            .map(|s| (s.geometry.geometry(), StarkKernel::new(s.kernel), s.target)),
        spin_t2: decl
            .spin_t2
            .as_ref()
            .map(|q| q.si(Dimension::Time, "spin_t2"))
            .transpose()?,
    };
    let report = capability_report(&spec, od, &opts);
    let mut table = String::new();
    for line in &inputs {
        table.push_str(&format!("input: {line}\n"));
    }
    table.push_str(&format!("optical depth: {source}\n"));
    table.push_str(&report.to_table());
    if !table.ends_with('\n') {
        table.push('\n');
    }
    let doc = ReportDoc {
        optical_depth_source: &source,
        inputs: &inputs,
        report: &report,
    };
    let mut json = serde_json::to_string_pretty(&doc).expect("report serializes");
    json.push('\n');
    let mut outputs = Outputs::default();
    outputs.add("report.txt", table.clone())?;
    outputs.add("report.json", json.clone())?;
    Ok(ReportOutcome {
        table,
        json,
        outputs,
    })
}
