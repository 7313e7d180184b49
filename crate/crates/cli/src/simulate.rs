use std::path::Path;

use photon_echo::sim::{
    saturation_recovery, simulate, stark_gated_echo, three_pulse_sweep, two_pulse_decay,
};
use photon_echo::units::{convert, Unit};
use photon_echo::{Axis, PulseSequence, SweepCurve};
use serde::Serialize;

use crate::config::{load_config, Experiment, ExperimentKind, RunConfig, TOOL, VERSION};
use crate::dataset::{format_dataset, in_unit};
use crate::error::{CliError, CliResult};
use crate::fitio::FitRecord;
use crate::fitting::{fit_model, FitChoices};
use crate::output::{resolve_out_dir, OutputEntry, Outputs};
use crate::config::sha256_hex;

#[derive(Debug, Serialize)]
pub struct Manifest {
    pub tool: String,
    pub version: String,
    pub command: String,
    pub config_sha256: String,
    pub seed: u64,
    pub outputs: Vec<OutputEntry>,
    pub unconverged_fits: Vec<String>,
}

pub const MANIFEST: &str = "manifest.json";
pub const RESOLVED_CONFIG: &str = "config.resolved.toml";

pub struct SimulateSummary {
    pub out_dir: std::path::PathBuf,
    pub lines: Vec<String>,
    pub unconverged: Vec<String>,
}

fn display_unit(name: &str) -> Unit {
    match name {
        "tau" | "t_pulse" => Unit::Microsecond,
        "t_wait" => Unit::Millisecond,
        _ => Unit::Second,
    }
}

fn for_display(curve: &SweepCurve) -> CliResult<SweepCurve> {
    let mut c = curve.clone();
    c.abscissa = in_unit(&curve.abscissa, display_unit(&curve.abscissa.name))?;
    Ok(c)
}

struct Ctx<'a> {
    run: &'a RunConfig,
    hash: String,
    outputs: Outputs,
    lines: Vec<String>,
    unconverged: Vec<String>,
}

impl Ctx<'_> {
    fn comments(&self, exp: &Experiment) -> Vec<(&'static str, String)> {
        vec![
            ("tool", format!("{TOOL} {VERSION}")),
            ("config_sha256", self.hash.clone()),
            ("seed", self.run.sim.seed.to_string()),
            ("experiment", exp.name.clone()),
        ]
    }

    fn dataset(&mut self, exp: &Experiment, file: &str, curve: &SweepCurve) -> CliResult<String> {
        let text = format_dataset(curve, &self.comments(exp));
        let sha = sha256_hex(text.as_bytes());
        self.outputs.add(file, text)?;
        self.lines.push(format!("wrote {file} ({} points)", curve.len()));
        Ok(sha)
    }

    fn fits(&mut self, exp: &Experiment, file: &str, sha: &str, curve: &SweepCurve) -> CliResult<()> {
        let stem = file.trim_end_matches(".csv");
        let choices = FitChoices {
            field: exp.field,
            ..FitChoices::default()
        };
        for id in &exp.fit {
            let (fitted, result) = fit_model(curve, id, &choices)
                .map_err(|e| CliError::invalid(format!("experiment `{}`, {id}: {e}", exp.name)))?;
            let record = FitRecord::new(&result, &fitted, file, sha)?;
            if !record.converged {
                self.unconverged.push(format!("{stem}.{id}"));
            }
            self.lines.push(record.summary().trim_end().to_string());
            self.outputs.add(format!("{stem}.{id}.fit.json"), record.to_json())?;
        }
        Ok(())
    }
}

fn run_experiment(ctx: &mut Ctx, exp: &Experiment) -> CliResult<()> {
    let spec = &ctx.run.ensemble;
    let cfg = &ctx.run.sim;
    let main = format!("{}.csv", exp.name);
    match exp.kind {
        ExperimentKind::Trace => {
            let tau = exp.tau.expect("validated");
            let window = exp.window.unwrap_or(cfg.detect_window);
            let seq = PulseSequence::two_pulse(cfg.lead, tau, cfg.pulse_duration, window);
            let trace = simulate(spec, &seq, cfg)?;
            let times = trace
                .times
                .iter()
                .map(|&t| convert(t, Unit::Second, Unit::Nanosecond))
                .collect::<photon_echo::Result<Vec<_>>>()?;
            let curve = SweepCurve::new(
                Axis::new("time", Unit::Nanosecond, times),
                Axis::new("intensity", Unit::Arbitrary, trace.intensity.clone()),
            )
            .with_label(format!("echo trace, tau = {tau:e} s"));
            let mut comments = ctx.comments(exp);
            for m in &trace.markers {
                comments.push(("marker", format!("{} {:e} s", m.label, m.time)));
            }
            let text = format_dataset(&curve, &comments);
            ctx.outputs.add(main.clone(), text)?;
            ctx.lines.push(format!("wrote {main} ({} bins)", curve.len()));
        }
        ExperimentKind::TwoPulse => {
            let curve = for_display(&two_pulse_decay(spec, cfg, &exp.grid)?)?;
            let sha = ctx.dataset(exp, &main, &curve)?;
            ctx.fits(exp, &main, &sha, &curve)?;
        }
        ExperimentKind::ThreePulse => {
            let points = three_pulse_sweep(spec, cfg, &exp.grid, &exp.t_wait)?;
            let width = points.len().to_string().len().max(2);
            let mut tw = vec![];
            let mut gamma = vec![];
            let mut sigma = vec![];
            for (k, p) in points.iter().enumerate() {
                let file = format!("{}_tw{:0width$}.csv", exp.name, k + 1);
                let mut curve = for_display(&p.curve)?;
                curve.label = p.curve.label.clone();
                let sha = ctx.dataset(exp, &file, &curve)?;
                let record = FitRecord::new(&p.fit, &p.curve, &file, &sha)?;
                if !record.converged {
                    ctx.unconverged.push(format!("{}.echo_decay", file.trim_end_matches(".csv")));
                }
                ctx.outputs.add(
                    format!("{}.echo_decay.fit.json", file.trim_end_matches(".csv")),
                    record.to_json(),
                )?;
                let t2 = p.fit.get("t2").expect("echo_decay has t2");
                let se = p.fit.stderr("t2").unwrap_or(f64::INFINITY);
                tw.push(convert(p.t_wait, Unit::Second, Unit::Millisecond)?);
                gamma.push(convert(p.gamma_eff, Unit::Hertz, Unit::Kilohertz)?);
                let s = p.gamma_eff * se / t2;
                sigma.push((s.is_finite() && s > 0.0).then(|| s * 1e-3));
            }
            let mut curve = SweepCurve::new(
                Axis::new("t_wait", Unit::Millisecond, tw),
                Axis::new("gamma_eff", Unit::Kilohertz, gamma),
            )
            .with_label("effective linewidth vs waiting time");
            // uncertainties only when every point has one
            if let Some(sigma) = sigma.into_iter().collect::<Option<Vec<f64>>>() {
                curve = curve.with_sigma(sigma);
            }
            let sha = ctx.dataset(exp, &main, &curve)?;
            ctx.fits(exp, &main, &sha, &curve)?;
        }
        ExperimentKind::Stark => {
            let field = exp.field.expect("validated");
            let curve = for_display(&stark_gated_echo(spec, cfg, &exp.grid, field)?)?;
            let sha = ctx.dataset(exp, &main, &curve)?;
            ctx.fits(exp, &main, &sha, &curve)?;
        }
        ExperimentKind::Recovery => {
            let curve = for_display(&saturation_recovery(spec, cfg, &exp.grid)?)?;
            let sha = ctx.dataset(exp, &main, &curve)?;
            ctx.fits(exp, &main, &sha, &curve)?;
        }
    }
    Ok(())
}

/// Runs every experiment of a config and writes datasets, fits and a manifest.
pub fn cmd_simulate(config: &Path, seed: Option<u64>, out_dir: Option<&Path>) -> CliResult<SimulateSummary> {
    let loaded = load_config(config, seed)?;
    let dir = resolve_out_dir(out_dir, loaded.out_dir.as_deref());
    let (outputs, lines, unconverged) = run_config(&loaded.run)?;
    outputs.write_all(&dir)?;
    Ok(SimulateSummary {
        out_dir: dir,
        lines,
        unconverged,
    })
}

/// Computes all outputs of a run in memory, manifest last.
pub fn run_config(run: &RunConfig) -> CliResult<(Outputs, Vec<String>, Vec<String>)> {
    if run.experiments.is_empty() {
        return Err(CliError::invalid("config declares no [[experiment]]"));
    }
    let canonical = run.canonical();
    let mut ctx = Ctx {
        run,
        hash: sha256_hex(canonical.as_bytes()),
        outputs: Outputs::default(),
        lines: vec![],
        unconverged: vec![],
    };
    ctx.outputs.add(RESOLVED_CONFIG, canonical)?;
    for exp in &run.experiments {
        run_experiment(&mut ctx, exp)?;
    }
    let manifest = Manifest {
        tool: TOOL.into(),
        version: VERSION.into(),
        command: "simulate".into(),
        config_sha256: ctx.hash.clone(),
        seed: run.sim.seed,
        outputs: ctx.outputs.entries(),
        unconverged_fits: ctx.unconverged.clone(),
    };
    let mut json = serde_json::to_string_pretty(&manifest).expect("manifest serializes");
    json.push('\n');
    ctx.outputs.add(MANIFEST, json)?;
    ctx.lines.push(format!("config sha256 {}", ctx.hash));
    Ok((ctx.outputs, ctx.lines, ctx.unconverged))
}
