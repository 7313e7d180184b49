use nalgebra::{Matrix3, Vector3};
use serde::{Deserialize, Serialize};

use super::SimConfig;
use crate::error::{Error, Result};
use crate::model::{Axis, EnsembleSpec, SweepCurve};
use crate::units::Unit;
use crate::validate::{Validate, ValidationReport};

/// Three-level rate model of a shelving pulse followed by an echo probe.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct RecoveryConfig {
    /// Length of the saturating pulse (s).
    pub saturation_duration: f64,
    /// Optical pumping rate between the addressed level and the excited
    /// state at full power (Hz).
    pub pump_rate: f64,
    /// Relative pulse power; 0 leaves the populations untouched.
    pub power_scale: f64,
    /// Fraction of excited-state decay returning to the addressed level.
    pub branching: f64,
    /// Thermal fraction of the ground population in the addressed level.
    pub polarization: f64,
}

impl Default for RecoveryConfig {
    fn default() -> Self {
        Self {
            saturation_duration: 1e-3,
            pump_rate: 1e5,
            power_scale: 1.0,
            branching: 0.5,
            polarization: 0.5,
        }
    }
}

impl Validate for RecoveryConfig {
    fn validate(&self) -> ValidationReport {
        let mut r = ValidationReport::default();
        r.non_negative("recovery.saturation_duration", self.saturation_duration);
        r.non_negative("recovery.pump_rate", self.pump_rate);
        r.non_negative("recovery.power_scale", self.power_scale);
        r.require((0.0..=1.0).contains(&self.branching), || {
            format!("recovery.branching must lie in [0, 1] (got {})", self.branching)
        });
        r.require(self.polarization > 0.0 && self.polarization < 1.0, || {
            format!("recovery.polarization must lie in (0, 1) (got {})", self.polarization)
        });
        r
    }
}

/// Rate matrix for populations (excited, addressed, other).
fn rates(pump: f64, t1_opt: f64, spin_t1: f64, branching: f64, pol: f64) -> Matrix3<f64> {
    let g = 1.0 / t1_opt;
    let up = (1.0 - pol) / spin_t1;
    let down = pol / spin_t1;
    Matrix3::new(
        -pump - g, pump, 0.0,
        pump + branching * g, -pump - up, down,
        (1.0 - branching) * g, up, -down,
    )
}

/// Echo probe amplitude vs waiting time after a saturating pulse.
///
/// Two ion classes relax with the spec's short and long spin T₁ in
/// proportion `short_fraction`; the probe is proportional to the addressed
/// ground-state population.
pub fn saturation_recovery(
    spec: &EnsembleSpec,
    cfg: &SimConfig,
    t_wait_grid: &[f64],
) -> Result<SweepCurve> {
    spec.validate().into_result("ensemble spec")?;
    cfg.recovery.validate().into_result("recovery config")?;
    let mut bad = vec![];
    if t_wait_grid.is_empty() {
        bad.push("t_wait_grid is empty".to_string());
    }
    for (i, &t) in t_wait_grid.iter().enumerate() {
        if !(t >= 0.0 && t.is_finite()) {
            bad.push(format!("t_wait_grid[{i}] = {t} must be >= 0"));
        }
    }
    for (i, w) in t_wait_grid.windows(2).enumerate() {
        if w[1] <= w[0] {
            bad.push(format!("t_wait_grid is not ascending at index {}", i + 1));
        }
    }
    if !bad.is_empty() {
        return Err(Error::Invalid {
            what: "sweep grid",
            violations: bad,
        });
    }
    let rc = &cfg.recovery;
    let pump = rc.pump_rate * rc.power_scale;
    let classes = [
        (spec.short_fraction, spec.spin_t1_short),
        (1.0 - spec.short_fraction, spec.spin_t1_long),
    ];
    let mut probe = vec![0.0; t_wait_grid.len()];
    for &(fraction, spin_t1) in &classes {
        if fraction == 0.0 {
            continue;
        }
        let start = Vector3::new(0.0, rc.polarization, 1.0 - rc.polarization);
        let during = rates(pump, spec.t1_optical, spin_t1, rc.branching, rc.polarization);
        let after_pulse = (during * rc.saturation_duration).exp() * start;
        let free = rates(0.0, spec.t1_optical, spin_t1, rc.branching, rc.polarization);
        for (k, &t) in t_wait_grid.iter().enumerate() {
            let pop = (free * t).exp() * after_pulse;
            probe[k] += fraction * pop[1];
        }
    }
    let values = probe.iter().map(|p| cfg.amplitude_scale * p).collect();
    Ok(SweepCurve::new(
        Axis::new("t_wait", Unit::Second, t_wait_grid.to_vec()),
        Axis::new("echo_amplitude", Unit::Arbitrary, values),
    )
    .with_label("saturation recovery"))
}
