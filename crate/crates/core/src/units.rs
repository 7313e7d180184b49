//! Unit tags and exact conversions.
//!
//! Everything inside the crate is SI: seconds, hertz (ordinary frequency,
//! FWHM for linewidths), tesla, volts per metre, kelvin. Convenience units
//! such as µs, kHz, mT or V/cm are accepted at the edges and converted once.
//!
//! Every scale factor between two units of the same dimension is a power of
//! ten except for `rad/s`, so conversions are a single multiplication or
//! division by an exactly representable constant.

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Dimension {
    Time,
    Frequency,
    MagneticField,
    ElectricField,
    Temperature,
    /// Frequency shift per unit electric field.
    StarkCoefficient,
    /// Electric field integrated over time.
    PulseArea,
    Length,
    Voltage,
    /// Frequency per kelvin (temperature broadening rate).
    FrequencyPerTemperature,
    Dimensionless,
}

impl fmt::Display for Dimension {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let s = match self {
            Dimension::Time => "time",
            Dimension::Frequency => "frequency",
            Dimension::MagneticField => "magnetic field",
            Dimension::ElectricField => "electric field",
            Dimension::Temperature => "temperature",
            Dimension::StarkCoefficient => "Stark coefficient",
            Dimension::PulseArea => "field pulse area",
            Dimension::Length => "length",
            Dimension::Voltage => "voltage",
            Dimension::FrequencyPerTemperature => "frequency per temperature",
            Dimension::Dimensionless => "dimensionless",
        };
        f.write_str(s)
    }
}

/// Whether a frequency value is ordinary (Hz) or angular (rad/s).
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum FrequencyKind {
    Ordinary,
    Angular,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(try_from = "String", into = "String")]
pub enum Unit {
    Second,
    Millisecond,
    Microsecond,
    Nanosecond,
    Hertz,
    Kilohertz,
    Megahertz,
    Gigahertz,
    Terahertz,
    RadianPerSecond,
    Tesla,
    Millitesla,
    VoltPerMetre,
    VoltPerCentimetre,
    Kelvin,
    Millikelvin,
    HertzPerVoltPerMetre,
    KilohertzPerVoltPerCentimetre,
    VoltSecondPerMetre,
    VoltMicrosecondPerCentimetre,
    Metre,
    Centimetre,
    Millimetre,
    Micrometre,
    Nanometre,
    Volt,
    HertzPerKelvin,
    KilohertzPerKelvin,
    Dimensionless,
    Counts,
    Arbitrary,
}

const POW10: [f64; 23] = [
    1e0, 1e1, 1e2, 1e3, 1e4, 1e5, 1e6, 1e7, 1e8, 1e9, 1e10, 1e11, 1e12, 1e13, 1e14, 1e15, 1e16,
    1e17, 1e18, 1e19, 1e20, 1e21, 1e22,
];

fn scale_pow10(x: f64, exp: i32) -> f64 {
    let k = exp.unsigned_abs() as usize;
    debug_assert!(k < POW10.len());
    if exp >= 0 {
        x * POW10[k]
    } else {
        x / POW10[k]
    }
}

/// rad/s per unit of an ordinary frequency unit.
fn angular_factor(ordinary: Unit) -> f64 {
    scale_pow10(std::f64::consts::TAU, ordinary.pow10())
}

impl Unit {
    pub const ALL: [Unit; 31] = [
        Unit::Second,
        Unit::Millisecond,
        Unit::Microsecond,
        Unit::Nanosecond,
        Unit::Hertz,
        Unit::Kilohertz,
        Unit::Megahertz,
        Unit::Gigahertz,
        Unit::Terahertz,
        Unit::RadianPerSecond,
        Unit::Tesla,
        Unit::Millitesla,
        Unit::VoltPerMetre,
        Unit::VoltPerCentimetre,
        Unit::Kelvin,
        Unit::Millikelvin,
        Unit::HertzPerVoltPerMetre,
        Unit::KilohertzPerVoltPerCentimetre,
        Unit::VoltSecondPerMetre,
        Unit::VoltMicrosecondPerCentimetre,
        Unit::Metre,
        Unit::Centimetre,
        Unit::Millimetre,
        Unit::Micrometre,
        Unit::Nanometre,
        Unit::Volt,
        Unit::HertzPerKelvin,
        Unit::KilohertzPerKelvin,
        Unit::Dimensionless,
        Unit::Counts,
        Unit::Arbitrary,
    ];

    pub fn dimension(self) -> Dimension {
        use Unit::*;
        match self {
            Second | Millisecond | Microsecond | Nanosecond => Dimension::Time,
            Hertz | Kilohertz | Megahertz | Gigahertz | Terahertz | RadianPerSecond => {
                Dimension::Frequency
            }
            Tesla | Millitesla => Dimension::MagneticField,
            VoltPerMetre | VoltPerCentimetre => Dimension::ElectricField,
            Kelvin | Millikelvin => Dimension::Temperature,
            HertzPerVoltPerMetre | KilohertzPerVoltPerCentimetre => Dimension::StarkCoefficient,
            VoltSecondPerMetre | VoltMicrosecondPerCentimetre => Dimension::PulseArea,
            Metre | Centimetre | Millimetre | Micrometre | Nanometre => Dimension::Length,
            Volt => Dimension::Voltage,
            HertzPerKelvin | KilohertzPerKelvin => Dimension::FrequencyPerTemperature,
            Dimensionless | Counts | Arbitrary => Dimension::Dimensionless,
        }
    }

    /// Power of ten taking a value in this unit to the SI unit of its dimension.
    fn pow10(self) -> i32 {
        use Unit::*;
        match self {
            Second | Hertz | RadianPerSecond | Tesla | VoltPerMetre | Kelvin
            | HertzPerVoltPerMetre | VoltSecondPerMetre | Metre | Volt | HertzPerKelvin
            | Dimensionless | Counts | Arbitrary => 0,
            Millisecond | Millitesla | Millikelvin | Millimetre => -3,
            Microsecond | Micrometre => -6,
            Nanosecond | Nanometre => -9,
            Kilohertz | KilohertzPerKelvin => 3,
            Megahertz => 6,
            Gigahertz => 9,
            Terahertz => 12,
            VoltPerCentimetre => 2,
            // 1 kHz / (1 V/cm) = 1e3 Hz / 1e2 V/m
            KilohertzPerVoltPerCentimetre => 1,
            // 1 V·µs/cm = 1e-6 s · 1e2 V/m
            VoltMicrosecondPerCentimetre => -4,
            Centimetre => -2,
        }
    }


    pub fn frequency_kind(self) -> Option<FrequencyKind> {
        match self {
            Unit::RadianPerSecond => Some(FrequencyKind::Angular),
            u if u.dimension() == Dimension::Frequency => Some(FrequencyKind::Ordinary),
            _ => None,
        }
    }

    /// The SI unit of this unit's dimension.
    pub fn si(self) -> Unit {
        use Unit::*;
        match self.dimension() {
            Dimension::Time => Second,
            Dimension::Frequency => Hertz,
            Dimension::MagneticField => Tesla,
            Dimension::ElectricField => VoltPerMetre,
            Dimension::Temperature => Kelvin,
            Dimension::StarkCoefficient => HertzPerVoltPerMetre,
            Dimension::PulseArea => VoltSecondPerMetre,
            Dimension::Length => Metre,
            Dimension::Voltage => Volt,
            Dimension::FrequencyPerTemperature => HertzPerKelvin,
            // counts and arbitrary units stay as they are
            Dimension::Dimensionless => self,
        }
    }

    pub fn tag(self) -> &'static str {
        use Unit::*;
        match self {
            Second => "s",
            Millisecond => "ms",
            Microsecond => "us",
            Nanosecond => "ns",
            Hertz => "Hz",
            Kilohertz => "kHz",
            Megahertz => "MHz",
            Gigahertz => "GHz",
            Terahertz => "THz",
            RadianPerSecond => "rad/s",
            Tesla => "T",
            Millitesla => "mT",
            VoltPerMetre => "V/m",
            VoltPerCentimetre => "V/cm",
            Kelvin => "K",
            Millikelvin => "mK",
            HertzPerVoltPerMetre => "Hz/(V/m)",
            KilohertzPerVoltPerCentimetre => "kHz/(V/cm)",
            VoltSecondPerMetre => "V*s/m",
            VoltMicrosecondPerCentimetre => "V*us/cm",
            Metre => "m",
            Centimetre => "cm",
            Millimetre => "mm",
            Micrometre => "um",
            Nanometre => "nm",
            Volt => "V",
            HertzPerKelvin => "Hz/K",
            KilohertzPerKelvin => "kHz/K",
            Dimensionless => "1",
            Counts => "counts",
            Arbitrary => "arb",
        }
    }
}

impl fmt::Display for Unit {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.tag())
    }
}

impl FromStr for Unit {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let norm: String = s
            .trim()
            .chars()
            .filter(|c| !c.is_whitespace())
            .map(|c| match c {
                'µ' | 'μ' => 'u',
                '·' | '⋅' => '*',
                c => c,
            })
            .collect();
        let norm = norm.as_str();
        let unit = Unit::ALL.iter().copied().find(|u| u.tag() == norm);
        if let Some(u) = unit {
            return Ok(u);
        }
        let alias = match norm {
            "sec" => Unit::Second,
            "Hz/V/m" => Unit::HertzPerVoltPerMetre,
            "kHz/V/cm" => Unit::KilohertzPerVoltPerCentimetre,
            "Vs/m" => Unit::VoltSecondPerMetre,
            "Vus/cm" | "V/(cm*us)" | "V/cm*us" => Unit::VoltMicrosecondPerCentimetre,
            "" | "-" | "dimensionless" => Unit::Dimensionless,
            "a.u." | "au" => Unit::Arbitrary,
            _ => return Err(Error::UnknownUnit(s.to_string())),
        };
        Ok(alias)
    }
}

impl TryFrom<String> for Unit {
    type Error = Error;
    fn try_from(s: String) -> Result<Self> {
        s.parse()
    }
}

impl From<Unit> for String {
    fn from(u: Unit) -> String {
        u.tag().to_string()
    }
}

/// Converts `value` from one unit to another of the same dimension.
pub fn convert(value: f64, from: Unit, to: Unit) -> Result<f64> {
    if from.dimension() != to.dimension() {
        return Err(Error::IncompatibleUnits {
            from: from.tag().into(),
            from_dim: from.dimension().to_string(),
            to: to.tag().into(),
            to_dim: to.dimension().to_string(),
        });
    }
    if from == to {
        return Ok(value);
    }
    // One rounding per direction with a shared constant keeps round trips
    // within one ULP.
    Ok(match (from == Unit::RadianPerSecond, to == Unit::RadianPerSecond) {
        (false, true) => value * angular_factor(from),
        (true, false) => value / angular_factor(to),
        _ => scale_pow10(value, from.pow10() - to.pow10()),
    })
}

/// Converts `value` in `unit` to the SI unit of the same dimension.
pub fn to_si(value: f64, unit: Unit) -> f64 {
    convert(value, unit, unit.si()).expect("same dimension")
}

/// Parses text such as `"64.1 us"`, `"5.8 kHz/(V/cm)"` or `"0.2"`.
///
/// A bare number carries [`Unit::Dimensionless`].
pub fn parse_quantity(text: &str) -> Result<(f64, Unit)> {
    let t = text.trim();
    let split = t
        .char_indices()
        .find(|&(i, c)| {
            !(c.is_ascii_digit()
                || c == '.'
                || c == '+'
                || c == '-'
                || ((c == 'e' || c == 'E')
                    && t[i + 1..]
                        .chars()
                        .next()
                        .is_some_and(|n| n.is_ascii_digit() || n == '-' || n == '+')))
        })
        .map(|(i, _)| i)
        .unwrap_or(t.len());
    let (num, unit) = t.split_at(split);
    let value: f64 = num
        .trim()
        .parse()
        .map_err(|_| Error::BadQuantity(text.to_string()))?;
    let unit = if unit.trim().is_empty() {
        Unit::Dimensionless
    } else {
        unit.parse()?
    };
    Ok((value, unit))
}

/// Parses a quantity and converts it to SI, checking the expected dimension.
pub fn parse_si(text: &str, expected: Dimension) -> Result<f64> {
    let (v, u) = parse_quantity(text)?;
    if u == Unit::Dimensionless && expected != Dimension::Dimensionless {
        // bare numbers are taken as already SI
        return Ok(v);
    }
    if u.dimension() != expected {
        return Err(Error::IncompatibleUnits {
            from: u.tag().into(),
            from_dim: u.dimension().to_string(),
            to: format!("<{expected}>"),
            to_dim: expected.to_string(),
        });
    }
    Ok(to_si(v, u))
}
