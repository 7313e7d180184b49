use std::fmt::Write as _;
use std::path::Path;

use photon_echo::fit::fit_submodels;
use serde::Serialize;

use crate::config::sha256_hex;
use crate::dataset::parse_dataset;
use crate::error::{CliError, CliResult};
use crate::fitio::FitRecord;
use crate::fitting::{fit_model, FitChoices};
use crate::output::{file_name, file_stem, Outputs};

pub enum FitRequest {
    Model(String),
    Submodels,
}

pub struct FitOutcome {
    pub records: Vec<FitRecord>,
    /// Text summary (or the submodel table).
    pub text: String,
    pub json: String,
    pub outputs: Outputs,
}

impl FitOutcome {
    pub fn converged(&self) -> bool {
        self.records.iter().all(|r| r.converged)
    }
}

#[derive(Serialize)]
struct SubmodelRow<'a> {
    label: &'a str,
    model_id: &'a str,
    residual_norm: f64,
    converged: bool,
}

pub fn cmd_fit(dataset: &Path, request: &FitRequest, choices: &FitChoices) -> CliResult<FitOutcome> {
    let bytes = std::fs::read(dataset).map_err(|e| CliError::io(dataset, e))?;
    let text = String::from_utf8(bytes.clone())
        .map_err(|_| CliError::invalid(format!("{}: not UTF-8", dataset.display())))?;
    let curve = parse_dataset(&text)
        .map_err(|e| CliError::invalid(format!("{}: {e}", dataset.display())))?;
    let name = file_name(dataset);
    let stem = file_stem(dataset);
    let sha = sha256_hex(&bytes);
    let mut outputs = Outputs::default();
    match request {
        FitRequest::Model(id) => {
            let (fitted, result) = fit_model(&curve, id, choices)?;
            let record = FitRecord::new(&result, &fitted, &name, &sha)?;
            let json = record.to_json();
            outputs.add(format!("{stem}.{id}.fit.json"), json.clone())?;
            Ok(FitOutcome {
                text: record.summary(),
                json,
                records: vec![record],
                outputs,
            })
        }
        FitRequest::Submodels => {
            let cmp = fit_submodels(&curve, choices.t0)?;
            let mut records = vec![];
            let mut rows = vec![];
            let mut table = String::new();
            let _ = writeln!(table, "spectral diffusion model comparison on {name}");
            let _ = writeln!(table, "{:<16} {:<20} {:>14}  parameters", "model", "id", "residual norm");
            for e in &cmp.entries {
                let record = FitRecord::new(&e.result, &curve, &name, &sha)?;
                let params = record
                    .params
                    .iter()
                    .map(|p| format!("{} = {:.4e}", p.name, p.value))
                    .collect::<Vec<_>>()
                    .join(", ");
                let _ = writeln!(
                    table,
                    "{:<16} {:<20} {:>14.6e}  {params}{}",
                    e.label,
                    e.result.model_id,
                    e.result.residual_norm,
                    if e.result.converged { "" } else { "  (not converged)" }
                );
                outputs.add(format!("{stem}.{}.fit.json", e.result.model_id), record.to_json())?;
                rows.push(SubmodelRow {
                    label: e.label,
                    model_id: &e.result.model_id,
                    residual_norm: e.result.residual_norm,
                    converged: e.result.converged,
                });
                records.push(record);
            }
            let ranking = cmp.entries.iter().map(|e| e.label).collect::<Vec<_>>().join(" < ");
            let _ = writeln!(table, "ranking by residual norm: {ranking}");
            let mut json = serde_json::to_string_pretty(&rows).expect("rows serialize");
            json.push('\n');
            outputs.add(format!("{stem}.submodels.json"), json.clone())?;
            Ok(FitOutcome {
                records,
                text: table,
                json,
                outputs,
            })
        }
    }
}
