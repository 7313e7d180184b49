use photon_echo::analytic::StarkKernel;
use photon_echo::fit::{
    fit, fit_echo_decay, fit_linear_broadening, fit_lorentzian_peak, fit_recovery,
    fit_spectral_diffusion, fit_stark_modulation, FitOptions, ModelSpec,
};
use photon_echo::units::{to_si, Dimension, Unit};
use photon_echo::{Axis, DipoleKernel, FitResult, SweepCurve};

use crate::error::{CliError, CliResult};

#[derive(Debug, Clone, Default)]
pub struct FitChoices {
    /// Default-fixed parameters to release.
    pub free: Vec<String>,
    /// Reference time for the logarithmic term (s).
    pub t0: Option<f64>,
    /// Stark field (V/m) used to turn a pulse-length axis into pulse area.
    pub field: Option<f64>,
}

/// Pulse-length sweeps become pulse-area sweeps for the Stark models.
pub fn stark_curve(curve: &SweepCurve, field: Option<f64>) -> CliResult<SweepCurve> {
    match curve.abscissa.unit.dimension() {
        Dimension::PulseArea => Ok(curve.clone()),
        Dimension::Time => {
            let e = field.ok_or_else(|| {
                CliError::invalid("a Stark fit over pulse length needs the field (--field)")
            })?;
            let area = curve
                .abscissa
                .values
                .iter()
                .map(|&t| to_si(t, curve.abscissa.unit) * e)
                .collect();
            let mut out = curve.clone();
            out.abscissa = Axis::new("area", Unit::VoltSecondPerMetre, area);
            Ok(out)
        }
        d => Err(CliError::invalid(format!(
            "Stark fits need a pulse-area or pulse-length abscissa, got {d}"
        ))),
    }
}

/// Runs one registry model with the same settings the library helpers use.
/// Returns the curve actually fitted alongside the result.
pub fn fit_model(curve: &SweepCurve, id: &str, choices: &FitChoices) -> CliResult<(SweepCurve, FitResult)> {
    let model = ModelSpec::by_id(id)?;
    for name in &choices.free {
        if model.index_of(name).is_none() {
            return Err(CliError::invalid(format!("model {id} has no parameter `{name}`")));
        }
    }
    let result = match id {
        "echo_decay" => fit_echo_decay(curve, choices.free.iter().any(|f| f == "x"))?,
        "spectral_diffusion" => fit_spectral_diffusion(curve, choices.t0)?,
        "recovery_2exp" => fit_recovery(curve)?,
        "lorentzian" => fit_lorentzian_peak(curve)?,
        "linear_broadening" => fit_linear_broadening(curve)?,
        "stark_sin4" | "stark_cos4" => {
            let kernel = if id == "stark_sin4" {
                DipoleKernel::Sin4
            } else {
                DipoleKernel::Cos4
            };
            let c = stark_curve(curve, choices.field)?;
            let mut r = fit_stark_modulation(&c, &StarkKernel::new(kernel))?;
            if curve.abscissa.unit.dimension() == Dimension::Time {
                if let Some(e) = choices.field {
                    r.metadata.insert("stark_field".into(), format!("{e:e}"));
                }
            }
            return Ok((c, r));
        }
        _ => {
            let mut m = model;
            m.t0 = choices.t0;
            let opts = FitOptions {
                free: choices.free.clone(),
                ..FitOptions::default()
            };
            fit(curve, &m, &opts)?
        }
    };
    Ok((curve.clone(), result))
}
