use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum PulseArea {
    HalfPi,
    Pi,
    /// Long incoherent pulse that erases coherence and shelves population.
    Saturation,
}

impl PulseArea {
    /// Nominal rotation angle in radians (`None` for saturation).
    pub fn angle(self) -> Option<f64> {
        match self {
            PulseArea::HalfPi => Some(std::f64::consts::FRAC_PI_2),
            PulseArea::Pi => Some(std::f64::consts::PI),
            PulseArea::Saturation => None,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum PulseEvent {
    OpticalPulse {
        start: f64,
        duration: f64,
        area: PulseArea,
        #[serde(default = "unit_power")]
        power_scale: f64,
    },
    StarkGate {
        start: f64,
        duration: f64,
        /// V/m
        field: f64,
    },
    Detect {
        start: f64,
        duration: f64,
    },
}

fn unit_power() -> f64 {
    1.0
}

impl PulseEvent {
    pub fn start(&self) -> f64 {
        match *self {
            PulseEvent::OpticalPulse { start, .. }
            | PulseEvent::StarkGate { start, .. }
            | PulseEvent::Detect { start, .. } => start,
        }
    }

    pub fn duration(&self) -> f64 {
        match *self {
            PulseEvent::OpticalPulse { duration, .. }
            | PulseEvent::StarkGate { duration, .. }
            | PulseEvent::Detect { duration, .. } => duration,
        }
    }

    pub fn end(&self) -> f64 {
        self.start() + self.duration()
    }

    /// Instant at which an optical pulse acts in the impulsive limit.
    pub fn center(&self) -> f64 {
        self.start() + 0.5 * self.duration()
    }

    pub fn is_optical(&self) -> bool {
        matches!(self, PulseEvent::OpticalPulse { .. })
    }
}

/// Time-ordered list of optical pulses, Stark gates and detection windows.
///
/// Optical pulses act as instantaneous rotations at their centers, so the
/// delay τ in the builders below is measured center to center.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct PulseSequence {
    pub events: Vec<PulseEvent>,
}

impl PulseSequence {
    pub fn new(events: Vec<PulseEvent>) -> Self {
        Self { events }
    }

    pub fn optical_pulses(&self) -> impl Iterator<Item = &PulseEvent> {
        self.events.iter().filter(|e| e.is_optical())
    }

    pub fn detect_windows(&self) -> impl Iterator<Item = &PulseEvent> {
        self.events
            .iter()
            .filter(|e| matches!(e, PulseEvent::Detect { .. }))
    }

    pub fn span(&self) -> f64 {
        self.events.iter().map(|e| e.end()).fold(0.0, f64::max)
    }

    /// π/2 – τ – π with a detection window of `window` centered on the echo.
    pub fn two_pulse(lead: f64, tau: f64, pulse_duration: f64, window: f64) -> Self {
        let first = lead + 0.5 * pulse_duration;
        let echo = first + 2.0 * tau;
        Self::new(vec![
            optical(first, pulse_duration, PulseArea::HalfPi),
            optical(first + tau, pulse_duration, PulseArea::Pi),
            PulseEvent::Detect {
                start: echo - 0.5 * window,
                duration: window,
            },
        ])
    }

    /// π/2 – τ – π/2 – T_W – π/2 stimulated echo, detected at T_W + 2τ.
    pub fn three_pulse(
        lead: f64,
        tau: f64,
        t_wait: f64,
        pulse_duration: f64,
        window: f64,
    ) -> Self {
        let first = lead + 0.5 * pulse_duration;
        let echo = first + 2.0 * tau + t_wait;
        Self::new(vec![
            optical(first, pulse_duration, PulseArea::HalfPi),
            optical(first + tau, pulse_duration, PulseArea::HalfPi),
            optical(first + tau + t_wait, pulse_duration, PulseArea::HalfPi),
            PulseEvent::Detect {
                start: echo - 0.5 * window,
                duration: window,
            },
        ])
    }

    /// Two-pulse echo with a Stark gate starting right after the π/2 pulse.
    pub fn stark_gated(
        lead: f64,
        tau: f64,
        pulse_duration: f64,
        gate_length: f64,
        field: f64,
        window: f64,
    ) -> Self {
        let mut seq = Self::two_pulse(lead, tau, pulse_duration, window);
        if gate_length > 0.0 {
            let gate = PulseEvent::StarkGate {
                start: lead + pulse_duration,
                duration: gate_length,
                field,
            };
            seq.events.insert(1, gate);
        }
        seq
    }

    /// Central time of the first optical pulse, if any.
    pub fn first_pulse_center(&self) -> Option<f64> {
        self.optical_pulses().next().map(PulseEvent::center)
    }
}

fn optical(center: f64, duration: f64, area: PulseArea) -> PulseEvent {
    PulseEvent::OpticalPulse {
        start: center - 0.5 * duration,
        duration,
        area,
        power_scale: 1.0,
    }
}
