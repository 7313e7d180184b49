//! Seeded Monte Carlo evolution of an emitter ensemble through pulse
//! sequences.
//!
//! Optical pulses are instantaneous rotations about x applied at the pulse
//! center; τ is measured between pulse centers. Between operations every ion
//! precesses at its static detuning plus its spin-bath shift plus k·E·cosθ,
//! with white frequency noise (diffusion constant 2/T₂) on top. The bath is a
//! set of telegraph spins per ion with Cauchy-distributed couplings, which
//! reproduces the saturating spectral diffusion law on average.

mod engine;
mod recovery;
mod sweeps;

use serde::{Deserialize, Serialize};

pub use engine::Bloch;
pub use recovery::{saturation_recovery, RecoveryConfig};
pub use sweeps::{
    apply_shf_modulation, stark_gated_echo, three_pulse_sweep, two_pulse_decay, ShfEnvelope,
    ThreePulsePoint,
};

use crate::error::{Error, Result};
use crate::model::{EnsembleSpec, PulseEvent, PulseSequence};
use crate::validate::{Validate, ValidationReport};
use engine::{reduce_ions, Engine};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct SimConfig {
    pub n_ions: usize,
    pub seed: u64,
    /// Integration step (s); must resolve the optical pulses.
    pub time_step: f64,
    /// Width of the spectral slice addressed by the pulses (Hz).
    pub pulse_bandwidth: f64,
    /// Detection bin width (s).
    pub detection_bin: f64,
    /// Optical pulse duration used by the sweep builders (s).
    pub pulse_duration: f64,
    /// Time before the first pulse (s).
    pub lead: f64,
    /// Detection window centered on the echo (s).
    pub detect_window: f64,
    /// Total field amplitude of a perfectly rephased ensemble.
    pub amplitude_scale: f64,
    /// Telegraph spins per ion in the bath.
    pub bath_spins: usize,
    /// Upper bound on n_ions × segments per ion.
    pub budget: u64,
    /// Sample detunings from the whole line instead of the addressed slice.
    pub sample_full_line: bool,
    /// π/2–π spacing used by Stark-gated sweeps (s).
    pub stark_tau: f64,
    pub recovery: RecoveryConfig,
}

impl Default for SimConfig {
    fn default() -> Self {
        Self {
            n_ions: 10_000,
            seed: 0,
            time_step: 8e-9,
            pulse_bandwidth: 1.0 / 32e-9,
            detection_bin: 4e-9,
            pulse_duration: 32e-9,
            lead: 94e-9,
            detect_window: 64e-9,
            amplitude_scale: 1.0,
            bath_spins: 128,
            budget: 20_000_000_000,
            sample_full_line: false,
            stark_tau: 4e-6,
            recovery: RecoveryConfig::default(),
        }
    }
}

impl Validate for SimConfig {
    fn validate(&self) -> ValidationReport {
        let mut r = ValidationReport::default();
        r.require(self.n_ions >= 100, || {
            format!("n_ions must be >= 100 (got {})", self.n_ions)
        });
        r.positive("time_step", self.time_step);
        r.positive("pulse_bandwidth", self.pulse_bandwidth);
        r.positive("detection_bin", self.detection_bin);
        r.positive("pulse_duration", self.pulse_duration);
        r.non_negative("lead", self.lead);
        r.positive("detect_window", self.detect_window);
        r.require(self.amplitude_scale >= 0.0, || {
            format!("amplitude_scale must be >= 0 (got {})", self.amplitude_scale)
        });
        r.require(self.bath_spins >= 1, || "bath_spins must be >= 1".into());
        r.require(self.time_step <= self.pulse_duration / 4.0, || {
            format!(
                "time_step {} s exceeds pulse_duration/4 = {} s",
                self.time_step,
                self.pulse_duration / 4.0
            )
        });
        r.positive("stark_tau", self.stark_tau);
        r.violations.extend(self.recovery.validate().violations);
        r
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Marker {
    pub label: String,
    pub time: f64,
}

/// Detected intensity per detection bin.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EchoTrace {
    /// Bin centers (s).
    pub times: Vec<f64>,
    pub bin_widths: Vec<f64>,
    pub intensity: Vec<f64>,
    pub markers: Vec<Marker>,
    /// Spacing of the first two optical pulses, if any (s).
    pub tau: Option<f64>,
}

impl EchoTrace {
    /// Σ intensity × bin width.
    pub fn integrated(&self) -> f64 {
        self.intensity
            .iter()
            .zip(&self.bin_widths)
            .map(|(i, w)| i * w)
            .sum()
    }

    /// Time of the brightest bin.
    pub fn peak_time(&self) -> Option<f64> {
        (0..self.times.len())
            .max_by(|&a, &b| self.intensity[a].total_cmp(&self.intensity[b]))
            .map(|k| self.times[k])
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SimDiagnostics {
    /// Largest |Δ(u² + v² + w²)| over all unitary steps of all ions.
    pub max_norm_change: f64,
    /// Ions inside the pulse bandwidth.
    pub active_ions: usize,
    /// Estimated n_ions × segments per ion.
    pub ion_segments: u64,
}

/// Bin centers and widths for every detection window.
pub(crate) fn detection_bins(seq: &PulseSequence, bin: f64) -> (Vec<f64>, Vec<f64>) {
    let mut times = vec![];
    let mut widths = vec![];
    for d in seq.detect_windows() {
        let n = ((d.duration() / bin).round() as usize).max(1);
        let w = d.duration() / n as f64;
        for j in 0..n {
            times.push(d.start() + (j as f64 + 0.5) * w);
            widths.push(w);
        }
    }
    (times, widths)
}

fn markers(seq: &PulseSequence) -> (Vec<Marker>, Option<f64>) {
    let centers: Vec<f64> = seq
        .events
        .iter()
        .filter(|e| {
            matches!(e, PulseEvent::OpticalPulse { area, .. } if area.angle().is_some())
        })
        .map(PulseEvent::center)
        .collect();
    if centers.len() < 2 {
        return (vec![], None);
    }
    let tau = centers[1] - centers[0];
    let mut out = vec![];
    if centers.len() == 2 {
        out.push(Marker {
            label: "primary".into(),
            time: centers[0] + 2.0 * tau,
        });
        out.push(Marker {
            label: "secondary".into(),
            time: centers[0] + 3.0 * tau,
        });
    } else {
        out.push(Marker {
            label: "stimulated".into(),
            time: centers[2] + tau,
        });
    }
    (out, Some(tau))
}

/// Shared checks for anything that runs the engine.
pub(crate) fn check_inputs(spec: &EnsembleSpec, seq: &PulseSequence, cfg: &SimConfig) -> Result<()> {
    spec.validate().into_result("ensemble spec")?;
    seq.validate().into_result("pulse sequence")?;
    let mut rep = cfg.validate();
    for e in seq.optical_pulses() {
        if e.duration() > 0.0 && cfg.time_step > e.duration() / 4.0 {
            rep.violations.push(format!(
                "time_step {} s exceeds a quarter of a {} s pulse",
                cfg.time_step,
                e.duration()
            ));
        }
    }
    rep.into_result("sim config")?;
    if spec.stretch_x != 1.0 {
        return Err(Error::domain(format!(
            "the simulator realizes exponential dephasing only; stretch_x = {} is not supported",
            spec.stretch_x
        )));
    }
    Ok(())
}

pub(crate) fn check_budget(engine: &Engine, cfg: &SimConfig) -> Result<u64> {
    let required = (engine.segments_per_ion() * cfg.n_ions as f64).ceil();
    let required = if required >= u64::MAX as f64 {
        u64::MAX
    } else {
        required as u64
    };
    if required > cfg.budget {
        return Err(Error::BudgetExceeded {
            required,
            allowed: cfg.budget,
        });
    }
    Ok(required)
}

pub fn simulate(spec: &EnsembleSpec, seq: &PulseSequence, cfg: &SimConfig) -> Result<EchoTrace> {
    simulate_with_diagnostics(spec, seq, cfg).map(|(t, _)| t)
}

pub fn simulate_with_diagnostics(
    spec: &EnsembleSpec,
    seq: &PulseSequence,
    cfg: &SimConfig,
) -> Result<(EchoTrace, SimDiagnostics)> {
    check_inputs(spec, seq, cfg)?;
    if seq.detect_windows().next().is_none() {
        return Err(Error::Invalid {
            what: "pulse sequence",
            violations: vec!["at least one detect window is required".into()],
        });
    }
    let (times, bin_widths) = detection_bins(seq, cfg.detection_bin);
    let engine = Engine::new(spec, seq, cfg, &times);
    let ion_segments = check_budget(&engine, cfg)?;
    let weight = cfg.amplitude_scale / cfg.n_ions as f64;
    let nb = times.len();

    struct Acc {
        field: Vec<[f64; 2]>,
        max_dev: f64,
        active: usize,
    }
    let acc = reduce_ions(
        cfg.n_ions,
        || Acc {
            field: vec![[0.0, 0.0]; nb],
            max_dev: 0.0,
            active: 0,
        },
        |acc, scratch, ion| {
            if let Some(dev) = engine.run_ion(ion, scratch) {
                acc.active += 1;
                acc.max_dev = acc.max_dev.max(dev);
                for (f, s) in acc.field.iter_mut().zip(&scratch.samples) {
                    f[0] += s[0];
                    f[1] += s[1];
                }
            }
        },
        |total, part| {
            total.active += part.active;
            total.max_dev = total.max_dev.max(part.max_dev);
            for (f, p) in total.field.iter_mut().zip(&part.field) {
                f[0] += p[0];
                f[1] += p[1];
            }
        },
    );
    let intensity = acc
        .field
        .iter()
        .map(|f| {
            let (re, im) = (weight * f[0], weight * f[1]);
            re * re + im * im
        })
        .collect();
    let (mut marks, tau) = markers(seq);
    let lo = seq.detect_windows().map(|d| d.start()).fold(f64::INFINITY, f64::min);
    let hi = seq.detect_windows().map(|d| d.end()).fold(f64::NEG_INFINITY, f64::max);
    marks.retain(|m| m.time >= lo && m.time <= hi);
    Ok((
        EchoTrace {
            times,
            bin_widths,
            intensity,
            markers: marks,
            tau,
        },
        SimDiagnostics {
            max_norm_change: acc.max_dev,
            active_ions: acc.active,
            ion_segments,
        },
    ))
}
