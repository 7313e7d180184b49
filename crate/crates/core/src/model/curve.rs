use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::units::{to_si, Unit};

/// One column of a sweep: a quantity name, its unit and its values.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Axis {
    pub name: String,
    pub unit: Unit,
    pub values: Vec<f64>,
}

impl Axis {
    pub fn new(name: impl Into<String>, unit: Unit, values: Vec<f64>) -> Self {
        Self {
            name: name.into(),
            unit,
            values,
        }
    }

    pub fn to_si(&self) -> Axis {
        Axis {
            name: self.name.clone(),
            unit: self.unit.si(),
            values: self.values.iter().map(|&v| to_si(v, self.unit)).collect(),
        }
    }
}

/// A one-dimensional dataset passed between simulator, fitter and CLI.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepCurve {
    pub abscissa: Axis,
    pub ordinate: Axis,
    /// One-sigma uncertainties in ordinate units.
    pub sigma: Option<Vec<f64>>,
    pub label: String,
}

impl SweepCurve {
    pub fn new(abscissa: Axis, ordinate: Axis) -> Self {
        Self {
            abscissa,
            ordinate,
            sigma: None,
            label: String::new(),
        }
    }

    pub fn with_sigma(mut self, sigma: Vec<f64>) -> Self {
        self.sigma = Some(sigma);
        self
    }

    pub fn with_label(mut self, label: impl Into<String>) -> Self {
        self.label = label.into();
        self
    }

    pub fn len(&self) -> usize {
        self.abscissa.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn x(&self) -> &[f64] {
        &self.abscissa.values
    }

    pub fn y(&self) -> &[f64] {
        &self.ordinate.values
    }

    /// Same curve with both axes (and sigma) expressed in SI units.
    pub fn to_si(&self) -> SweepCurve {
        let ordinate = self.ordinate.to_si();
        let sigma = self.sigma.as_ref().map(|s| {
            s.iter()
                .map(|&v| to_si(v, self.ordinate.unit))
                .collect::<Vec<_>>()
        });
        SweepCurve {
            abscissa: self.abscissa.to_si(),
            ordinate,
            sigma,
            label: self.label.clone(),
        }
    }

    /// Multiplies ordinate (and sigma) by `c`.
    pub fn scaled(&self, c: f64) -> SweepCurve {
        let mut out = self.clone();
        out.ordinate.values.iter_mut().for_each(|v| *v *= c);
        if let Some(s) = out.sigma.as_mut() {
            s.iter_mut().for_each(|v| *v *= c.abs());
        }
        out
    }

    /// Structural checks: equal lengths, finite values, positive sigma.
    pub fn check(&self) -> Result<()> {
        let n = self.len();
        if self.ordinate.values.len() != n {
            return Err(Error::FitPrecondition(format!(
                "abscissa has {n} points but ordinate has {}",
                self.ordinate.values.len()
            )));
        }
        for (i, (&x, &y)) in self.x().iter().zip(self.y()).enumerate() {
            if !x.is_finite() {
                return Err(Error::NonFinite {
                    what: "abscissa value",
                    index: i,
                });
            }
            if !y.is_finite() {
                return Err(Error::NonFinite {
                    what: "ordinate value",
                    index: i,
                });
            }
        }
        if let Some(s) = &self.sigma {
            if s.len() != n {
                return Err(Error::FitPrecondition(format!(
                    "sigma has {} entries for {n} points",
                    s.len()
                )));
            }
            if let Some(i) = s.iter().position(|v| !(v.is_finite() && *v > 0.0)) {
                return Err(Error::FitPrecondition(format!(
                    "sigma[{i}] must be finite and > 0"
                )));
            }
        }
        Ok(())
    }
}
