//! Quantum-memory design figures: optical-depth scaling with device geometry,
//! Stark-echo memory feasibility and a capability summary table.

use std::fmt::Write as _;

use serde::Serialize;

use crate::analytic::{memory_metrics, stark_extinction_time, StarkKernel, DEFAULT_MAX_STARK_AREA};
use crate::error::{Error, Result};
use crate::model::EnsembleSpec;
use crate::validate::{Validate, ValidationReport};

/// Doped waveguide and electrode layout. All lengths in metres.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, serde::Deserialize)]
pub struct DeviceGeometry {
    pub doped_thickness: f64,
    pub er_density_ppm: f64,
    pub waveguide_length: f64,
    pub electrode_gap: f64,
    /// Volts across the electrode gap.
    pub applied_voltage: f64,
}

impl DeviceGeometry {
    /// The measured device: 50 nm film at 50 ppm on a 0.486 cm waveguide,
    /// electrodes 2.5 mm apart driven to 40 V/cm.
    pub fn measured() -> Self {
        Self {
            doped_thickness: 50e-9,
            er_density_ppm: 50.0,
            waveguide_length: 0.486e-2,
            electrode_gap: 2.5e-3,
            applied_voltage: 10.0,
        }
    }

    /// Denser, thicker, longer waveguide with on-chip electrodes 0.2 mm
    /// apart at 500 V/cm.
    pub fn projected() -> Self {
        Self {
            doped_thickness: 120e-9,
            er_density_ppm: 150.0,
            waveguide_length: 5e-2,
            electrode_gap: 0.2e-3,
            applied_voltage: 10.0,
        }
    }

    /// Uniform field between the electrodes (V/m).
    pub fn field(&self) -> f64 {
        self.applied_voltage / self.electrode_gap
    }
}

impl Validate for DeviceGeometry {
    fn validate(&self) -> ValidationReport {
        let mut r = ValidationReport::default();
        r.positive("doped_thickness", self.doped_thickness);
        r.positive("er_density_ppm", self.er_density_ppm);
        r.positive("waveguide_length", self.waveguide_length);
        r.positive("electrode_gap", self.electrode_gap);
        r.positive("applied_voltage", self.applied_voltage);
        for (name, v) in [
            ("doped_thickness", self.doped_thickness),
            ("er_density_ppm", self.er_density_ppm),
            ("waveguide_length", self.waveguide_length),
            ("electrode_gap", self.electrode_gap),
            ("applied_voltage", self.applied_voltage),
        ] {
            r.require(v.is_finite(), || format!("{name} must be finite (got {v})"));
        }
        r
    }
}

/// OD of `target` given `base_od` measured on `base`.
///
/// Linear in density, doped thickness and length. The thickness term assumes
/// mode overlap grows linearly with the doped layer, so it is approximate.
pub fn scale_od(base_od: f64, base: &DeviceGeometry, target: &DeviceGeometry) -> Result<f64> {
    base.validate().into_result("base geometry")?;
    target.validate().into_result("target geometry")?;
    if !(base_od >= 0.0 && base_od.is_finite()) {
        return Err(Error::domain(format!("base optical depth must be >= 0 (got {base_od})")));
    }
    Ok(base_od
        * (target.er_density_ppm / base.er_density_ppm)
        * (target.doped_thickness / base.doped_thickness)
        * (target.waveguide_length / base.waveguide_length))
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct SemmReport {
    /// V/m
    pub field: f64,
    /// Shortest Stark pulse reaching the target extinction (s).
    pub extinction_time: f64,
    /// ⌊T₂ / (2·extinction_time)⌋, a coarse bound on silence/recall cycles.
    pub recalls_within_t2: u64,
    pub target: f64,
}

/// Stark pulse needed to silence the echo with the electrodes of `geom`.
pub fn semm_feasibility(
    spec: &EnsembleSpec,
    geom: &DeviceGeometry,
    kernel: &StarkKernel,
    target: f64,
) -> Result<SemmReport> {
    geom.validate().into_result("device geometry")?;
    let field = geom.field();
    let extinction_time =
        stark_extinction_time(field, spec.stark_k, kernel, target, DEFAULT_MAX_STARK_AREA)?;
    let cycles = spec.t2_optical / (2.0 * extinction_time);
    Ok(SemmReport {
        field,
        extinction_time,
        recalls_within_t2: if cycles.is_nan() { 0 } else { cycles.floor() as u64 },
        target,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Modality {
    SingleIon,
    Ensemble,
}

impl Modality {
    fn label(self) -> &'static str {
        match self {
            Modality::SingleIon => "single ion",
            Modality::Ensemble => "ensemble",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ReportRow {
    pub quantity: String,
    pub modality: Modality,
    pub value: f64,
    /// SI unit symbol, empty for dimensionless values.
    pub unit: String,
    pub basis: String,
}

/// Optional inputs to [`capability_report`].
#[derive(Debug, Clone, Default)]
pub struct ReportOptions {
    pub purcell_factor: Option<f64>,
    /// Measured and target geometry for an OD projection.
    pub od_projection: Option<(DeviceGeometry, DeviceGeometry)>,
    /// Electrode layout, kernel and extinction target for the Stark-echo entry.
    pub semm: Option<(DeviceGeometry, StarkKernel, f64)>,
    /// User-supplied spin T₂ (s), echoed as a labeled projection.
    pub spin_t2: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CapabilityReport {
    pub rows: Vec<ReportRow>,
    pub semm: Option<SemmReport>,
    /// Entries that could not be computed, with the reason.
    pub notes: Vec<String>,
}

fn row(quantity: &str, modality: Modality, value: f64, unit: &str, basis: &str) -> ReportRow {
    ReportRow {
        quantity: quantity.into(),
        modality,
        value,
        unit: unit.into(),
        basis: basis.into(),
    }
}

/// Storage time, bandwidth and efficiency figures for single-ion and
/// ensemble memories. Never fails: entries that cannot be evaluated are
/// replaced by a note.
pub fn capability_report(spec: &EnsembleSpec, od: f64, opts: &ReportOptions) -> CapabilityReport {
    use Modality::*;
    let mut rows = vec![];
    let mut notes = vec![];
    if let Some(t2) = opts.spin_t2 {
        rows.push(row("storage time", SingleIon, t2, "s", "spin T2 (projected)"));
    }
    rows.push(row("storage time", Ensemble, spec.t2_optical, "s", "optical T2"));
    match memory_metrics(spec, od, opts.purcell_factor) {
        Ok(m) => {
            rows.push(row("bandwidth", SingleIon, m.single_ion_bandwidth, "Hz", "1/optical T1"));
            if let Some(b) = m.single_ion_bandwidth_purcell {
                rows.push(row("bandwidth", SingleIon, b, "Hz", "Purcell factor/optical T1"));
            }
            rows.push(row("bandwidth", Ensemble, m.ensemble_bandwidth, "Hz", "inhomogeneous linewidth"));
            rows.push(row("optical depth", Ensemble, od, "", "input"));
            rows.push(row("echo efficiency", Ensemble, m.efficiency.paper_approx, "", "(OD/4)^2"));
            rows.push(row("echo efficiency", Ensemble, m.efficiency.exact, "", "4 sinh^2(OD/2)"));
        }
        Err(e) => notes.push(format!("memory metrics unavailable: {e}")),
    }
    if let Some((base, target)) = &opts.od_projection {
        match scale_od(od, base, target) {
            Ok(p) => rows.push(row(
                "projected optical depth",
                Ensemble,
                p,
                "",
                "linear in density, length and thickness (thickness term approximate)",
            )),
            Err(e) => notes.push(format!("OD projection unavailable: {e}")),
        }
    }
    let mut semm = None;
    if let Some((geom, kernel, target)) = &opts.semm {
        match semm_feasibility(spec, geom, kernel, *target) {
            Ok(s) => {
                rows.push(row("Stark field", Ensemble, s.field, "V/m", "voltage/electrode gap"));
                let basis = format!("{:.0}% echo extinction", 100.0 * s.target);
                rows.push(row("Stark pulse length", Ensemble, s.extinction_time, "s", &basis));
                rows.push(row(
                    "recall cycles",
                    Ensemble,
                    s.recalls_within_t2 as f64,
                    "",
                    "floor(optical T2 / 2 Stark pulses)",
                ));
                semm = Some(s);
            }
            Err(e) => notes.push(format!("Stark echo entry unavailable: {e}")),
        }
    }
    CapabilityReport { rows, semm, notes }
}

const PREFIXES: [(f64, &str); 9] = [
    (1e12, "T"),
    (1e9, "G"),
    (1e6, "M"),
    (1e3, "k"),
    (1.0, ""),
    (1e-3, "m"),
    (1e-6, "µ"),
    (1e-9, "n"),
    (1e-12, "p"),
];

/// Three significant digits with an SI prefix, e.g. `64.1 µs`.
pub fn format_si(value: f64, unit: &str) -> String {
    if unit.is_empty() || unit.contains('/') || value == 0.0 || !value.is_finite() {
        let s = if value == 0.0 || !value.is_finite() || (1e-3..1e4).contains(&value.abs()) {
            format!("{}", Sig3(value))
        } else {
            format!("{value:.3e}")
        };
        return if unit.is_empty() { s } else { format!("{s} {unit}") };
    }
    let a = value.abs();
    let (scale, p) = PREFIXES
        .iter()
        .copied()
        .find(|(s, _)| a >= *s * (1.0 - 5e-4))
        .unwrap_or(PREFIXES[PREFIXES.len() - 1]);
    format!("{} {p}{unit}", Sig3(value / scale))
}

struct Sig3(f64);

impl std::fmt::Display for Sig3 {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        let v = self.0;
        if v == 0.0 || !v.is_finite() {
            return write!(f, "{v}");
        }
        let digits = 2 - v.abs().log10().floor() as i32;
        let s = format!("{:.*}", digits.max(0) as usize, v);
        let s = if s.contains('.') {
            s.trim_end_matches('0').trim_end_matches('.').to_string()
        } else {
            s
        };
        f.write_str(&s)
    }
}

impl CapabilityReport {
    /// Plain-text table, one line per row.
    pub fn to_table(&self) -> String {
        let cells: Vec<[String; 4]> = self
            .rows
            .iter()
            .map(|r| {
                [
                    r.quantity.clone(),
                    r.modality.label().to_string(),
                    format_si(r.value, &r.unit),
                    r.basis.clone(),
                ]
            })
            .collect();
        let header = ["quantity", "memory", "value", "basis"];
        let mut width = header.map(|h| h.chars().count());
        for c in &cells {
            for (w, s) in width.iter_mut().zip(c) {
                *w = (*w).max(s.chars().count());
            }
        }
        let mut out = String::new();
        let line = |out: &mut String, c: [&str; 4]| {
            let mut l = String::new();
            for (k, (s, w)) in c.iter().zip(width).enumerate() {
                if k > 0 {
                    l.push_str(" | ");
                }
                let pad = w - s.chars().count();
                l.push_str(s);
                l.extend(std::iter::repeat_n(' ', pad));
            }
            let _ = writeln!(out, "{}", l.trim_end());
        };
        line(&mut out, header);
        let _ = writeln!(out, "{}", width.map(|w| "-".repeat(w)).join("-+-"));
        for c in &cells {
            line(&mut out, [&c[0], &c[1], &c[2], &c[3]]);
        }
        for n in &self.notes {
            let _ = writeln!(out, "note: {n}");
        }
        out
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn prefixes() {
        assert_eq!(format_si(64.1e-6, "s"), "64.1 µs");
        assert_eq!(format_si(36e9, "Hz"), "36 GHz");
        assert_eq!(format_si(357.142857, "Hz"), "357 Hz");
        assert_eq!(format_si(0.0, "s"), "0 s");
        assert_eq!(format_si(1.5016e-5, ""), "1.502e-5");
        assert_eq!(format_si(5e4, "V/m"), "5.000e4 V/m");
    }

    #[test]
    fn geometry_field() {
        assert!((DeviceGeometry::measured().field() - 4000.0).abs() < 1e-9);
        assert!((DeviceGeometry::projected().field() - 5e4).abs() < 1e-6);
    }
}
