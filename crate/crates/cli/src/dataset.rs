//! Delimited-text datasets.
//!
//! ```text
//! # comment lines start with '#'
//! tau(us), echo_area(arb), sigma(arb)
//! 1.5e0, 9.1e-1, 2e-3
//! ```
//!
//! The header names two or three columns, each `name(unit)` where the unit is
//! any tag accepted by [`Unit`]. The optional third column must be called
//! `sigma` and share the ordinate's dimension. Values are written with `{:e}`,
//! the shortest representation that parses back to the same `f64`.

use std::fmt::Write as _;
use std::path::Path;

use photon_echo::units::{convert, Unit};
use photon_echo::{Axis, SweepCurve};

use crate::error::{CliError, CliResult};

#[derive(Debug, Clone, PartialEq)]
struct Column {
    name: String,
    unit: Unit,
}

fn parse_column(text: &str) -> Result<Column, String> {
    let text = text.trim();
    let open = text
        .find('(')
        .ok_or_else(|| format!("column `{text}` lacks a `(unit)` tag"))?;
    if !text.ends_with(')') {
        return Err(format!("column `{text}` must end with `)`"));
    }
    let name = text[..open].trim();
    let valid = name
        .chars()
        .next()
        .is_some_and(|c| c.is_ascii_alphabetic() || c == '_')
        && name.chars().all(|c| c.is_ascii_alphanumeric() || c == '_');
    if !valid {
        return Err(format!("column name `{name}` must match [A-Za-z_][A-Za-z0-9_]*"));
    }
    let unit: Unit = text[open + 1..text.len() - 1]
        .parse()
        .map_err(|e: photon_echo::Error| format!("column `{name}`: {e}"))?;
    Ok(Column {
        name: name.to_string(),
        unit,
    })
}

/// Parses dataset text; errors carry the 1-based line number.
pub fn parse_dataset(text: &str) -> Result<SweepCurve, String> {
    let mut header: Option<Vec<Column>> = None;
    let mut label = String::new();
    let mut cols: Vec<Vec<f64>> = vec![];
    for (i, raw) in text.lines().enumerate() {
        let line_no = i + 1;
        let line = raw.trim();
        if line.is_empty() {
            continue;
        }
        if let Some(comment) = line.strip_prefix('#') {
            if let Some(l) = comment.trim().strip_prefix("label:") {
                label = l.trim().to_string();
            }
            continue;
        }
        let fields: Vec<&str> = line.split(',').collect();
        match &header {
            None => {
                let parsed = fields
                    .iter()
                    .map(|f| parse_column(f))
                    .collect::<Result<Vec<_>, _>>()
                    .map_err(|e| format!("line {line_no}: {e}"))?;
                if !(2..=3).contains(&parsed.len()) {
                    return Err(format!(
                        "line {line_no}: expected 2 or 3 columns, found {}",
                        parsed.len()
                    ));
                }
                if let Some(s) = parsed.get(2) {
                    if s.name != "sigma" {
                        return Err(format!(
                            "line {line_no}: third column must be `sigma`, found `{}`",
                            s.name
                        ));
                    }
                    if s.unit.dimension() != parsed[1].unit.dimension() {
                        return Err(format!(
                            "line {line_no}: sigma unit `{}` does not match ordinate unit `{}`",
                            s.unit, parsed[1].unit
                        ));
                    }
                }
                cols = vec![vec![]; parsed.len()];
                header = Some(parsed);
            }
            Some(h) => {
                if fields.len() != h.len() {
                    return Err(format!(
                        "line {line_no}: expected {} fields, found {}",
                        h.len(),
                        fields.len()
                    ));
                }
                for (k, f) in fields.iter().enumerate() {
                    let v: f64 = f.trim().parse().map_err(|_| {
                        format!("line {line_no}, column `{}`: cannot parse `{}`", h[k].name, f.trim())
                    })?;
                    cols[k].push(v);
                }
            }
        }
    }
    let header = header.ok_or("no header line")?;
    let mut curve = SweepCurve::new(
        Axis::new(header[0].name.clone(), header[0].unit, cols[0].clone()),
        Axis::new(header[1].name.clone(), header[1].unit, cols[1].clone()),
    )
    .with_label(label);
    if let Some(s) = header.get(2) {
        let sigma = cols[2]
            .iter()
            .map(|&v| convert(v, s.unit, header[1].unit).expect("dimension checked"))
            .collect();
        curve = curve.with_sigma(sigma);
    }
    Ok(curve)
}

pub fn read_dataset(path: &Path) -> CliResult<SweepCurve> {
    let text = std::fs::read_to_string(path).map_err(|e| CliError::io(path, e))?;
    parse_dataset(&text).map_err(|e| CliError::invalid(format!("{}: {e}", path.display())))
}

/// Serializes a curve; `comments` become `# key: value` lines above the header.
pub fn format_dataset(curve: &SweepCurve, comments: &[(&str, String)]) -> String {
    let mut out = String::new();
    for (k, v) in comments {
        let _ = writeln!(out, "# {k}: {v}");
    }
    if !curve.label.is_empty() {
        let _ = writeln!(out, "# label: {}", curve.label);
    }
    let (x, y) = (&curve.abscissa, &curve.ordinate);
    let _ = write!(out, "{}({}), {}({})", x.name, x.unit, y.name, y.unit);
    if curve.sigma.is_some() {
        let _ = write!(out, ", sigma({})", y.unit);
    }
    out.push('\n');
    for i in 0..curve.len() {
        let _ = write!(out, "{:e}, {:e}", x.values[i], y.values[i]);
        if let Some(s) = &curve.sigma {
            let _ = write!(out, ", {:e}", s[i]);
        }
        out.push('\n');
    }
    out
}

/// Re-expresses an axis in `unit`.
pub fn in_unit(axis: &Axis, unit: Unit) -> CliResult<Axis> {
    let values = axis
        .values
        .iter()
        .map(|&v| convert(v, axis.unit, unit))
        .collect::<photon_echo::Result<Vec<_>>>()?;
    Ok(Axis::new(axis.name.clone(), unit, values))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn round_trip_is_exact() {
        let x = vec![1.5, 2.0 / 3.0, 1e-300, 7.123456789012345e12];
        let y = vec![0.1, -0.2, 1.0 / 7.0, 3.0];
        let curve = SweepCurve::new(
            Axis::new("tau", Unit::Microsecond, x),
            Axis::new("echo_area", Unit::Counts, y),
        )
        .with_sigma(vec![0.01, 0.02, 0.03, 0.04])
        .with_label("demo");
        let text = format_dataset(&curve, &[("source", "unit test".into())]);
        assert!(text.contains("tau(us), echo_area(counts), sigma(counts)"));
        assert_eq!(parse_dataset(&text).unwrap(), curve);
    }

    #[test]
    fn errors_name_the_line() {
        let e = parse_dataset("# c\ntau(us), y(arb)\n1, 2\n3, x\n").unwrap_err();
        assert!(e.starts_with("line 4"), "{e}");
        let e = parse_dataset("tau(us), y(furlongs)\n").unwrap_err();
        assert!(e.contains("furlongs"), "{e}");
        let e = parse_dataset("tau(us), y(arb), err(arb)\n").unwrap_err();
        assert!(e.contains("sigma"), "{e}");
        let e = parse_dataset("tau(us), y(kHz), sigma(us)\n").unwrap_err();
        assert!(e.contains("does not match"), "{e}");
        assert!(parse_dataset("# only comments\n").is_err());
    }

    #[test]
    fn sigma_is_converted_to_ordinate_units() {
        let c = parse_dataset("t(ms), g(kHz), sigma(Hz)\n1, 2, 500\n").unwrap();
        assert_eq!(c.sigma.unwrap(), vec![0.5]);
    }
}
