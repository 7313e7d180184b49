//! Invariant checks that report every violation instead of stopping at the
//! first one.

use crate::error::{Error, Result};
use crate::model::{
    DephasingParams, EnsembleSpec, InhomogeneousLine, PulseEvent, PulseSequence, SuddenJumpBath,
};

/// List of violated invariants; empty means well-formed.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct ValidationReport {
    pub violations: Vec<String>,
}

impl ValidationReport {
    pub fn is_ok(&self) -> bool {
        self.violations.is_empty()
    }

    pub(crate) fn require(&mut self, cond: bool, msg: impl FnOnce() -> String) {
        if !cond {
            self.violations.push(msg());
        }
    }

    pub(crate) fn positive(&mut self, name: &str, v: f64) {
        // NaN fails this too
        self.require(v > 0.0, || format!("{name} must be > 0 (got {v})"));
    }

    pub(crate) fn non_negative(&mut self, name: &str, v: f64) {
        self.require(v >= 0.0, || format!("{name} must be >= 0 (got {v})"));
    }

    pub fn into_result(self, what: &'static str) -> Result<()> {
        if self.is_ok() {
            Ok(())
        } else {
            Err(Error::Invalid {
                what,
                violations: self.violations,
            })
        }
    }
}

pub trait Validate {
    fn validate(&self) -> ValidationReport;
}

/// Free-function form of [`Validate::validate`].
pub fn validate<T: Validate + ?Sized>(value: &T) -> ValidationReport {
    value.validate()
}

impl Validate for InhomogeneousLine {
    fn validate(&self) -> ValidationReport {
        let mut r = ValidationReport::default();
        r.positive("line.fwhm", self.fwhm);
        r.require(self.center_frequency.is_finite(), || {
            "line.center_frequency must be finite".into()
        });
        r.positive("line.truncation_fwhm", self.truncation_fwhm);
        r
    }
}

impl Validate for SuddenJumpBath {
    fn validate(&self) -> ValidationReport {
        let mut r = ValidationReport::default();
        r.non_negative("bath.flip_rate", self.flip_rate);
        r.non_negative("bath.max_shift", self.max_shift);
        r.non_negative("bath.tls_rate", self.tls_rate);
        r.positive("bath.tls_t0", self.tls_t0);
        r
    }
}

impl Validate for EnsembleSpec {
    fn validate(&self) -> ValidationReport {
        let mut r = self.line.validate();
        r.positive("t1_optical", self.t1_optical);
        r.positive("t2_optical", self.t2_optical);
        r.positive("spin_t1_short", self.spin_t1_short);
        r.positive("spin_t1_long", self.spin_t1_long);
        r.require(self.stretch_x >= 1.0 && self.stretch_x.is_finite(), || {
            format!("stretch_x must be >= 1 (got {})", self.stretch_x)
        });
        r.require((0.0..=1.0).contains(&self.short_fraction), || {
            format!("short_fraction must lie in [0, 1] (got {})", self.short_fraction)
        });
        r.require(self.stark_k >= 0.0 && self.stark_k.is_finite(), || {
            format!("stark_k must be >= 0 (got {})", self.stark_k)
        });
        if let Some(m) = &self.shf_modulation {
            r.require((0.0..=1.0).contains(&m.depth), || {
                format!("shf_modulation.depth must lie in [0, 1] (got {})", m.depth)
            });
            r.non_negative("shf_modulation.frequency", m.frequency);
        }
        if let Some(b) = &self.bath {
            r.violations.extend(b.validate().violations);
        }
        r
    }
}

impl Validate for DephasingParams {
    fn validate(&self) -> ValidationReport {
        let mut r = ValidationReport::default();
        r.non_negative("gamma0", self.gamma0);
        r.non_negative("gamma_sd", self.gamma_sd);
        r.non_negative("rate_r", self.rate_r);
        r.non_negative("gamma_tls", self.gamma_tls);
        r.positive("t0", self.t0);
        r
    }
}

impl Validate for PulseSequence {
    fn validate(&self) -> ValidationReport {
        let mut r = ValidationReport::default();
        for (i, e) in self.events.iter().enumerate() {
            r.require(e.start().is_finite() && e.start() >= 0.0, || {
                format!("event {i} starts at {} (must be finite and >= 0)", e.start())
            });
            r.require(e.duration().is_finite() && e.duration() >= 0.0, || {
                format!("event {i} has duration {} (must be >= 0)", e.duration())
            });
            if let PulseEvent::OpticalPulse { power_scale, .. } = e {
                r.non_negative(&format!("event {i} power_scale"), *power_scale);
            }
            if let PulseEvent::StarkGate { field, .. } = e {
                r.require(field.is_finite(), || format!("event {i} field must be finite"));
            }
        }
        for (i, w) in self.events.windows(2).enumerate() {
            r.require(w[0].start() <= w[1].start(), || {
                format!("events {i} and {} are not time-sorted", i + 1)
            });
        }
        let optical: Vec<(usize, &PulseEvent)> = self
            .events
            .iter()
            .enumerate()
            .filter(|(_, e)| e.is_optical())
            .collect();
        for (a, (i, p)) in optical.iter().enumerate() {
            for (j, q) in optical.iter().skip(a + 1) {
                r.require(!overlaps(p, q), || {
                    format!("optical pulses {i} and {j} overlap")
                });
            }
        }
        for (i, d) in self
            .events
            .iter()
            .enumerate()
            .filter(|(_, e)| matches!(e, PulseEvent::Detect { .. }))
        {
            for (j, p) in &optical {
                r.require(!overlaps(d, p), || {
                    format!("detection window {i} overlaps optical pulse {j}")
                });
            }
        }
        for (i, g) in self
            .events
            .iter()
            .enumerate()
            .filter(|(_, e)| matches!(e, PulseEvent::StarkGate { .. }))
        {
            for (j, p) in &optical {
                r.require(!overlaps(g, p), || {
                    format!("Stark gate {i} overlaps optical pulse {j}")
                });
            }
        }
        r
    }
}

/// Open-interval overlap, so touching edges are allowed.
fn overlaps(a: &PulseEvent, b: &PulseEvent) -> bool {
    a.start() < b.end() && b.start() < a.end()
}
