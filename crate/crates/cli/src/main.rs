use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};
use pecho::config::Quantity;
use pecho::error::{CliError, CliResult};
use pecho::fitcmd::{cmd_fit, FitRequest};
use pecho::fitting::FitChoices;
use pecho::output::resolve_out_dir;
use pecho::plot::{cmd_plot, PlotArgs};
use pecho::report::{cmd_report, Form, GeometryName, ReportArgs, ReportDecl, SemmDecl};
use pecho::simulate::{cmd_simulate, MANIFEST};
use photon_echo::units::{parse_si, Dimension};
use photon_echo::DipoleKernel;

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
enum Format {
    Text,
    Json,
}

/// Photon-echo simulation, fitting and memory reports.
///
/// Exit codes: 0 success, 2 invalid input, 3 a fit did not converge (results
/// still written), 4 I/O error. The output directory defaults to
/// $PECHO_OUT_DIR, then ./pecho-out.
#[derive(Debug, Parser)]
#[command(name = "pecho", version)]
struct Cli {
    #[arg(long, value_enum, default_value = "text", global = true)]
    format: Format,

    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Run every [[experiment]] of a config; writes datasets, fits and a manifest.
    Simulate {
        #[arg(long)]
        config: PathBuf,
        /// Overrides the seed in the config.
        #[arg(long)]
        seed: Option<u64>,
        #[arg(long)]
        out_dir: Option<PathBuf>,
    },
    /// Fit a registry model to a dataset.
    Fit {
        dataset: PathBuf,
        #[arg(long, required_unless_present = "submodels", conflicts_with = "submodels")]
        model: Option<String>,
        /// Compare the full, spin-bath-only and TLS-only spectral diffusion models.
        #[arg(long)]
        submodels: bool,
        /// Release a parameter that the model holds fixed by default.
        #[arg(long = "free")]
        free: Vec<String>,
        /// Reference time of the logarithmic term, e.g. "0.1 ms".
        #[arg(long)]
        t0: Option<String>,
        /// Stark field for pulse-length datasets, e.g. "40 V/cm".
        #[arg(long)]
        field: Option<String>,
        #[arg(long)]
        out_dir: Option<PathBuf>,
    },
    /// Storage-time, bandwidth and efficiency report.
    Report(ReportCli),
    /// Render datasets (and fits) as SVG.
    Plot {
        #[arg(required = true)]
        datasets: Vec<PathBuf>,
        #[arg(long = "fit")]
        fits: Vec<PathBuf>,
        #[arg(long)]
        log_x: bool,
        /// Draw all datasets on one figure named <OVERLAY>.svg.
        #[arg(long)]
        overlay: Option<String>,
        #[arg(long)]
        out_dir: Option<PathBuf>,
    },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
enum FormArg {
    Approx,
    Exact,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
enum GeometryArg {
    Measured,
    Projected,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
enum KernelArg {
    Sin4,
    Cos4,
    Isotropic,
}

#[derive(Debug, Args)]
struct ReportCli {
    /// Config whose [ensemble] and [report] tables are used.
    #[arg(long, conflicts_with = "preset")]
    config: Option<PathBuf>,
    /// Ensemble preset (chip1h or chip3h) when no config is given.
    #[arg(long)]
    preset: Option<String>,
    /// Fit results folded into the ensemble (T2, spin T1, Stark k, bath).
    #[arg(long = "fit")]
    fits: Vec<PathBuf>,
    #[arg(long, conflicts_with = "efficiency")]
    od: Option<f64>,
    /// Echo efficiency to invert for the optical depth.
    #[arg(long)]
    efficiency: Option<f64>,
    #[arg(long, value_enum)]
    efficiency_form: Option<FormArg>,
    #[arg(long)]
    purcell: Option<f64>,
    /// Spin coherence time for the single-ion storage row, e.g. "1 ms".
    #[arg(long)]
    spin_t2: Option<String>,
    /// Project the optical depth onto the target device geometry.
    #[arg(long)]
    project_od: bool,
    #[arg(long, value_enum, requires_all = ["semm_kernel", "semm_target"])]
    semm_geometry: Option<GeometryArg>,
    #[arg(long, value_enum, requires = "semm_geometry")]
    semm_kernel: Option<KernelArg>,
    #[arg(long, requires = "semm_geometry")]
    semm_target: Option<f64>,
    #[arg(long)]
    out_dir: Option<PathBuf>,
}

fn quantity(text: &Option<String>, dim: Dimension, what: &str) -> CliResult<Option<f64>> {
    text.as_deref()
        .map(|t| parse_si(t, dim).map_err(|e| CliError::invalid(format!("--{what}: {e}"))))
        .transpose()
}

fn run(cli: Cli) -> CliResult<()> {
    let json = cli.format == Format::Json;
    match cli.command {
        Command::Simulate {
            config,
            seed,
            out_dir,
        } => {
            let s = cmd_simulate(&config, seed, out_dir.as_deref())?;
            if json {
                let m = std::fs::read_to_string(s.out_dir.join(MANIFEST))
                    .map_err(|e| CliError::io(&s.out_dir.join(MANIFEST), e))?;
                print!("{m}");
            } else {
                for l in &s.lines {
                    println!("{l}");
                }
                println!("outputs in {}", s.out_dir.display());
            }
            if !s.unconverged.is_empty() {
                return Err(CliError::NotConverged(format!(
                    "fits did not converge: {} (results written and flagged)",
                    s.unconverged.join(", ")
                )));
            }
        }
        Command::Fit {
            dataset,
            model,
            submodels,
            free,
            t0,
            field,
            out_dir,
        } => {
            let choices = FitChoices {
                free,
                t0: quantity(&t0, Dimension::Time, "t0")?,
                field: quantity(&field, Dimension::ElectricField, "field")?,
            };
            let request = match model {
                Some(m) if !submodels => FitRequest::Model(m),
                _ => FitRequest::Submodels,
            };
            let outcome = cmd_fit(&dataset, &request, &choices)?;
            let dir = resolve_out_dir(out_dir.as_deref(), None);
            outcome.outputs.write_all(&dir)?;
            if json {
                print!("{}", outcome.json);
            } else {
                print!("{}", outcome.text);
                for n in outcome.outputs.names() {
                    println!("wrote {}", dir.join(n).display());
                }
            }
            if !outcome.converged() {
                return Err(CliError::NotConverged("fit did not converge (result written and flagged)".into()));
            }
        }
        Command::Report(r) => {
            let semm = match (r.semm_geometry, r.semm_kernel, r.semm_target) {
                (Some(g), Some(k), Some(t)) => Some(SemmDecl {
                    geometry: match g {
                        GeometryArg::Measured => GeometryName::Measured,
                        GeometryArg::Projected => GeometryName::Projected,
                    },
                    kernel: match k {
                        KernelArg::Sin4 => DipoleKernel::Sin4,
                        KernelArg::Cos4 => DipoleKernel::Cos4,
                        KernelArg::Isotropic => DipoleKernel::Isotropic,
                    },
                    target: t,
                }),
                _ => None,
            };
            let args = ReportArgs {
                config: r.config,
                preset: r.preset,
                fits: r.fits,
                decl: ReportDecl {
                    od: r.od,
                    efficiency: r.efficiency,
                    efficiency_form: r.efficiency_form.map(|f| match f {
                        FormArg::Approx => Form::Approx,
                        FormArg::Exact => Form::Exact,
                    }),
                    purcell_factor: r.purcell,
                    spin_t2: r.spin_t2.map(Quantity::Text),
                    project_od: r.project_od.then_some(true),
                    semm,
                },
            };
            let outcome = cmd_report(args)?;
            let dir = resolve_out_dir(r.out_dir.as_deref(), None);
            outcome.outputs.write_all(&dir)?;
            if json {
                print!("{}", outcome.json);
            } else {
                print!("{}", outcome.table);
            }
        }
        Command::Plot {
            datasets,
            fits,
            log_x,
            overlay,
            out_dir,
        } => {
            let outputs = cmd_plot(&PlotArgs {
                datasets,
                fits,
                log_x,
                overlay,
            })?;
            let dir = resolve_out_dir(out_dir.as_deref(), None);
            let written = outputs.write_all(&dir)?;
            if json {
                let paths: Vec<String> = written.iter().map(|p| p.display().to_string()).collect();
                println!("{}", serde_json::to_string_pretty(&paths).expect("paths serialize"));
            } else {
                for p in written {
                    println!("wrote {}", p.display());
                }
            }
        }
    }
    Ok(())
}

fn main() -> ExitCode {
    let cli = Cli::parse_from(std::env::args_os());
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
