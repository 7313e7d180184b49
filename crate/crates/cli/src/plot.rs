//! SVG plots of datasets with optional fit overlays.

use std::path::{Path, PathBuf};

use photon_echo::units::{convert, to_si, Dimension, Unit};
use photon_echo::SweepCurve;
use plotters::prelude::*;

use crate::config::{sha256_hex, TOOL, VERSION};
use crate::dataset::parse_dataset;
use crate::error::{CliError, CliResult};
use crate::fitio::FitRecord;
use crate::output::{file_name, file_stem, Outputs};
use crate::simulate::MANIFEST;

const WIDTH: u32 = 800;
const HEIGHT: u32 = 560;
const FIT_SAMPLES: usize = 240;

#[derive(Debug, Clone, Default)]
pub struct PlotArgs {
    pub datasets: Vec<PathBuf>,
    pub fits: Vec<PathBuf>,
    pub log_x: bool,
    /// Draw every dataset on one figure with this file stem.
    pub overlay: Option<String>,
}

struct Source {
    name: String,
    stem: String,
    curve: SweepCurve,
    provenance: String,
    fit: Option<FitRecord>,
}

fn provenance(path: &Path, bytes: &[u8]) -> String {
    let mut parts = vec![
        format!("{TOOL} {VERSION}"),
        format!("dataset {} sha256 {}", file_name(path), sha256_hex(bytes)),
    ];
    let manifest = path.parent().unwrap_or(Path::new(".")).join(MANIFEST);
    if let Ok(m) = std::fs::read(&manifest) {
        parts.push(format!("manifest sha256 {}", sha256_hex(&m)));
        if let Some(h) = serde_json::from_slice::<serde_json::Value>(&m)
            .ok()
            .and_then(|v| v.get("config_sha256").and_then(|h| h.as_str()).map(String::from))
        {
            parts.push(format!("config sha256 {h}"));
        }
    }
    parts.join(" | ")
}

fn load(args: &PlotArgs) -> CliResult<Vec<Source>> {
    if args.datasets.is_empty() {
        return Err(CliError::invalid("no datasets given"));
    }
    let mut sources = vec![];
    for path in &args.datasets {
        let bytes = std::fs::read(path).map_err(|e| CliError::io(path, e))?;
        let text = String::from_utf8(bytes.clone())
            .map_err(|_| CliError::invalid(format!("{}: not UTF-8", path.display())))?;
        let curve = parse_dataset(&text)
            .map_err(|e| CliError::invalid(format!("{}: {e}", path.display())))?;
        if curve.is_empty() {
            return Err(CliError::invalid(format!("{}: dataset is empty", path.display())));
        }
        sources.push(Source {
            name: file_name(path),
            stem: file_stem(path),
            provenance: provenance(path, &bytes),
            curve,
            fit: None,
        });
    }
    for path in &args.fits {
        let record = FitRecord::read(path)?;
        let target = sources
            .iter_mut()
            .find(|s| s.name == record.dataset)
            .ok_or_else(|| {
                CliError::invalid(format!(
                    "{}: fit belongs to `{}`, which is not among the datasets",
                    path.display(),
                    record.dataset
                ))
            })?;
        if target.fit.is_some() {
            return Err(CliError::invalid(format!("two fits given for `{}`", record.dataset)));
        }
        target.fit = Some(record);
    }
    Ok(sources)
}

/// Fitted curve sampled over `[lo, hi]` in dataset units.
fn fit_line(src: &Source, lo: f64, hi: f64, log_x: bool) -> CliResult<Vec<(f64, f64)>> {
    let Some(record) = &src.fit else {
        return Ok(vec![]);
    };
    let model = record.model()?;
    let params = record.values();
    let xu = src.curve.abscissa.unit;
    let fit_xu: Unit = record.abscissa_unit.parse()?;
    let fit_yu: Unit = record.ordinate_unit.parse()?;
    let field = record.metadata.get("stark_field").and_then(|f| f.parse::<f64>().ok());
    let to_model_x = |x: f64| -> CliResult<f64> {
        let si = to_si(x, xu);
        if fit_xu.dimension() == xu.dimension() {
            Ok(si)
        } else if fit_xu.dimension() == Dimension::PulseArea && xu.dimension() == Dimension::Time {
            field.map(|e| si * e).ok_or_else(|| {
                CliError::invalid(format!("{}: fit over pulse area lacks the Stark field", src.name))
            })
        } else {
            Err(CliError::invalid(format!(
                "{}: fit abscissa `{fit_xu}` does not match dataset unit `{xu}`",
                src.name
            )))
        }
    };
    let mut out = Vec::with_capacity(FIT_SAMPLES);
    for k in 0..FIT_SAMPLES {
        let t = k as f64 / (FIT_SAMPLES - 1) as f64;
        let x = if log_x {
            (lo.ln() + (hi.ln() - lo.ln()) * t).exp()
        } else {
            lo + (hi - lo) * t
        };
        let y = model.evaluate(to_model_x(x)?, &params);
        let y = convert(y, fit_yu, src.curve.ordinate.unit)?;
        if y.is_finite() {
            out.push((x, y));
        }
    }
    Ok(out)
}

fn same_units(sources: &[Source]) -> CliResult<()> {
    let first = &sources[0].curve;
    for s in &sources[1..] {
        for (axis, a, b) in [
            ("x", first.abscissa.unit, s.curve.abscissa.unit),
            ("y", first.ordinate.unit, s.curve.ordinate.unit),
        ] {
            if a != b {
                return Err(CliError::invalid(format!(
                    "mixed units on the {axis} axis: `{a}` ({}) vs `{b}` ({})",
                    sources[0].name, s.name
                )));
            }
        }
    }
    Ok(())
}

fn padded(lo: f64, hi: f64, log: bool) -> (f64, f64) {
    if log {
        let (l, h) = (lo.log10(), hi.log10());
        let pad = ((h - l) * 0.05).max(0.05);
        (10f64.powf(l - pad), 10f64.powf(h + pad))
    } else {
        let span = hi - lo;
        let pad = if span > 0.0 { 0.05 * span } else { 0.5 * lo.abs().max(1.0) };
        (lo - pad, hi + pad)
    }
}

fn render(sources: &[Source], log_x: bool, title: &str) -> CliResult<String> {
    let x_all: Vec<f64> = sources.iter().flat_map(|s| s.curve.x().iter().copied()).collect();
    if log_x {
        if let Some(bad) = x_all.iter().find(|&&x| x <= 0.0) {
            return Err(CliError::invalid(format!("log axis needs positive abscissae, found {bad}")));
        }
    }
    let (xmin, xmax) = x_all
        .iter()
        .fold((f64::INFINITY, f64::NEG_INFINITY), |(a, b), &x| (a.min(x), b.max(x)));
    let mut lines = vec![];
    for s in sources {
        lines.push(fit_line(s, xmin, xmax, log_x)?);
    }
    let mut ymin = f64::INFINITY;
    let mut ymax = f64::NEG_INFINITY;
    for s in sources {
        for (i, &y) in s.curve.y().iter().enumerate() {
            let e = s.curve.sigma.as_ref().map_or(0.0, |sig| sig[i]);
            ymin = ymin.min(y - e);
            ymax = ymax.max(y + e);
        }
    }
    for l in &lines {
        for &(_, y) in l {
            ymin = ymin.min(y);
            ymax = ymax.max(y);
        }
    }
    let (x0, x1) = padded(xmin, xmax, log_x);
    let (y0, y1) = padded(ymin, ymax, false);
    let xdesc = format!("{} ({})", sources[0].curve.abscissa.name, sources[0].curve.abscissa.unit);
    let ydesc = format!("{} ({})", sources[0].curve.ordinate.name, sources[0].curve.ordinate.unit);

    let mut svg = String::new();
    {
        let root = SVGBackend::with_string(&mut svg, (WIDTH, HEIGHT)).into_drawing_area();
        let err = |e: &dyn std::fmt::Display| CliError::invalid(format!("plot rendering failed: {e}"));
        root.fill(&WHITE).map_err(|e| err(&e))?;
        let mut builder = ChartBuilder::on(&root);
        builder
            .caption(title, ("sans-serif", 20))
            .margin(16)
            .x_label_area_size(48)
            .y_label_area_size(72);
        macro_rules! draw {
            ($chart:expr) => {{
                let mut chart = $chart;
                chart
                    .configure_mesh()
                    .x_desc(xdesc.as_str())
                    .y_desc(ydesc.as_str())
                    .x_label_formatter(&|v| format!("{v:.3e}"))
                    .y_label_formatter(&|v| format!("{v:.3e}"))
                    .draw()
                    .map_err(|e| err(&e))?;
                for (k, s) in sources.iter().enumerate() {
                    let color = Palette99::pick(k).to_rgba();
                    let pts: Vec<(f64, f64)> =
                        s.curve.x().iter().copied().zip(s.curve.y().iter().copied()).collect();
                    if let Some(sig) = &s.curve.sigma {
                        chart
                            .draw_series(pts.iter().zip(sig).map(|(&(x, y), &e)| {
                                ErrorBar::new_vertical(x, y - e, y, y + e, color.stroke_width(1), 6)
                            }))
                            .map_err(|e| err(&e))?;
                    }
                    chart
                        .draw_series(pts.iter().map(|&p| Circle::new(p, 3, color.filled())))
                        .map_err(|e| err(&e))?
                        .label(s.curve.label.clone().chars().take(60).collect::<String>())
                        .legend(move |(x, y)| Circle::new((x + 8, y), 3, color.filled()));
                    if !lines[k].is_empty() {
                        let model = s.fit.as_ref().map(|f| f.model_id.clone()).unwrap_or_default();
                        chart
                            .draw_series(LineSeries::new(lines[k].iter().copied(), color.stroke_width(2)))
                            .map_err(|e| err(&e))?
                            .label(format!("fit: {model}"))
                            .legend(move |(x, y)| PathElement::new(vec![(x, y), (x + 16, y)], color.stroke_width(2)));
                    }
                }
                chart
                    .configure_series_labels()
                    .background_style(WHITE.mix(0.8))
                    .border_style(BLACK)
                    .draw()
                    .map_err(|e| err(&e))?;
            }};
        }
        if log_x {
            draw!(builder
                .build_cartesian_2d((x0..x1).log_scale(), y0..y1)
                .map_err(|e| err(&e))?);
        } else {
            draw!(builder.build_cartesian_2d(x0..x1, y0..y1).map_err(|e| err(&e))?);
        }
        root.present().map_err(|e| err(&e))?;
    }
    Ok(svg)
}

fn with_comment(svg: String, comment: &str) -> String {
    let comment = comment.replace("--", "- -");
    match svg.find("<svg").and_then(|i| svg[i..].find('>').map(|j| i + j + 1)) {
        Some(at) => format!("{}\n<!-- {comment} -->{}", &svg[..at], &svg[at..]),
        None => format!("<!-- {comment} -->\n{svg}"),
    }
}

/// Renders every input before anything is written, so a bad input leaves the
/// output directory untouched.
pub fn cmd_plot(args: &PlotArgs) -> CliResult<Outputs> {
    let sources = load(args)?;
    let mut outputs = Outputs::default();
    let auto_log = |s: &Source| s.curve.abscissa.name == "t_wait";
    match &args.overlay {
        Some(name) => {
            same_units(&sources)?;
            let log = args.log_x || sources.iter().all(auto_log);
            let svg = render(&sources, log, name)?;
            let prov = sources.iter().map(|s| s.provenance.as_str()).collect::<Vec<_>>().join(" || ");
            outputs.add(format!("{name}.svg"), with_comment(svg, &prov))?;
        }
        None => {
            for s in &sources {
                let log = args.log_x || auto_log(s);
                let title = if s.curve.label.is_empty() { s.stem.clone() } else { s.curve.label.clone() };
                let svg = render(std::slice::from_ref(s), log, &title)?;
                outputs.add(format!("{}.svg", s.stem), with_comment(svg, &s.provenance))?;
            }
        }
    }
    Ok(outputs)
}
