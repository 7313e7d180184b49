use std::f64::consts::PI;

use super::engine::{reduce_ions, Engine};
use super::{check_budget, check_inputs, simulate, EchoTrace, SimConfig};
use crate::error::{Error, Result};
use crate::fit::fit_echo_decay;
use crate::model::{Axis, EnsembleSpec, FitResult, PulseSequence, SweepCurve};
use crate::units::Unit;

fn check_grid(name: &str, grid: &[f64], min_exclusive: f64) -> Result<()> {
    let mut violations = vec![];
    if grid.is_empty() {
        violations.push(format!("{name} is empty"));
    }
    for (i, &v) in grid.iter().enumerate() {
        if !(v.is_finite() && v > min_exclusive) {
            violations.push(format!("{name}[{i}] = {v} must exceed {min_exclusive}"));
        }
    }
    for (i, w) in grid.windows(2).enumerate() {
        if w[1] <= w[0] {
            violations.push(format!("{name} is not ascending at index {}", i + 1));
        }
    }
    if violations.is_empty() {
        Ok(())
    } else {
        Err(Error::Invalid {
            what: "sweep grid",
            violations,
        })
    }
}

/// Integrated two-pulse echo intensity vs τ.
pub fn two_pulse_decay(spec: &EnsembleSpec, cfg: &SimConfig, tau_grid: &[f64]) -> Result<SweepCurve> {
    check_grid("tau_grid", tau_grid, cfg.pulse_duration)?;
    let areas = tau_grid
        .iter()
        .map(|&tau| {
            let seq = PulseSequence::two_pulse(cfg.lead, tau, cfg.pulse_duration, cfg.detect_window);
            simulate(spec, &seq, cfg).map(|t| t.integrated())
        })
        .collect::<Result<Vec<f64>>>()?;
    Ok(SweepCurve::new(
        Axis::new("tau", Unit::Second, tau_grid.to_vec()),
        Axis::new("echo_area", Unit::Arbitrary, areas),
    )
    .with_label("two-pulse echo decay"))
}

/// One waiting time of a stimulated-echo sweep.
#[derive(Debug, Clone, PartialEq)]
pub struct ThreePulsePoint {
    pub t_wait: f64,
    pub curve: SweepCurve,
    pub fit: FitResult,
    /// 1/(π·T₂,eff) from the fitted decay (Hz).
    pub gamma_eff: f64,
}

/// Stimulated-echo decay vs τ for each waiting time, with the effective
/// linewidth from an exponential fit.
pub fn three_pulse_sweep(
    spec: &EnsembleSpec,
    cfg: &SimConfig,
    tau_grid: &[f64],
    t_wait_list: &[f64],
) -> Result<Vec<ThreePulsePoint>> {
    check_grid("tau_grid", tau_grid, cfg.pulse_duration)?;
    let tau_min = tau_grid[0];
    if let Some(bad) = t_wait_list.iter().find(|&&t| !(t >= tau_min)) {
        return Err(Error::Invalid {
            what: "sweep grid",
            violations: vec![format!("t_wait {bad} s is below the smallest tau {tau_min} s")],
        });
    }
    t_wait_list
        .iter()
        .map(|&t_wait| {
            let areas = tau_grid
                .iter()
                .map(|&tau| {
                    let seq = PulseSequence::three_pulse(
                        cfg.lead,
                        tau,
                        t_wait,
                        cfg.pulse_duration,
                        cfg.detect_window,
                    );
                    simulate(spec, &seq, cfg).map(|t| t.integrated())
                })
                .collect::<Result<Vec<f64>>>()?;
            let curve = SweepCurve::new(
                Axis::new("tau", Unit::Second, tau_grid.to_vec()),
                Axis::new("echo_area", Unit::Arbitrary, areas),
            )
            .with_label(format!("stimulated echo, T_W = {t_wait:e} s"));
            let fit = fit_echo_decay(&curve, false)?;
            let t2 = fit.get("t2").expect("echo_decay has t2");
            Ok(ThreePulsePoint {
                t_wait,
                curve,
                fit,
                gamma_eff: 1.0 / (PI * t2),
            })
        })
        .collect()
}

/// Echo amplitude vs Stark pulse length, normalized to the ungated echo of
/// the same ions.
///
/// The amplitude is the in-phase projection −v at the echo time, so its sign
/// follows the orientation average. Uncertainties are delta-method standard
/// errors of the ratio.
pub fn stark_gated_echo(
    spec: &EnsembleSpec,
    cfg: &SimConfig,
    pulse_lengths: &[f64],
    field: f64,
) -> Result<SweepCurve> {
    if pulse_lengths.is_empty() {
        return Err(Error::Invalid {
            what: "sweep grid",
            violations: vec!["pulse_lengths is empty".into()],
        });
    }
    let build = |len: f64| {
        PulseSequence::stark_gated(cfg.lead, cfg.stark_tau, cfg.pulse_duration, len, field, 0.0)
    };
    let reference = build(0.0);
    check_inputs(spec, &reference, cfg)?;
    let echo_time = reference.first_pulse_center().expect("two pulses") + 2.0 * cfg.stark_tau;
    let engine0 = Engine::new(spec, &reference, cfg, &[echo_time]);
    check_budget(&engine0, cfg)?;
    let mut engines = vec![];
    for &len in pulse_lengths {
        if !(len >= 0.0 && len.is_finite()) {
            return Err(Error::Invalid {
                what: "sweep grid",
                violations: vec![format!("pulse length {len} must be >= 0")],
            });
        }
        let seq = build(len);
        check_inputs(spec, &seq, cfg)?;
        let e = Engine::new(spec, &seq, cfg, &[echo_time]);
        check_budget(&e, cfg)?;
        engines.push(e);
    }
    let m = engines.len();

    #[derive(Clone)]
    struct Moments {
        n: f64,
        s0: f64,
        s00: f64,
        sj: Vec<f64>,
        sjj: Vec<f64>,
        s0j: Vec<f64>,
    }
    let zero = Moments {
        n: 0.0,
        s0: 0.0,
        s00: 0.0,
        sj: vec![0.0; m],
        sjj: vec![0.0; m],
        s0j: vec![0.0; m],
    };
    let mom = reduce_ions(
        cfg.n_ions,
        || zero.clone(),
        |acc, scratch, ion| {
            if engine0.run_ion(ion, scratch).is_none() {
                return;
            }
            let x0 = -scratch.samples[0][1];
            acc.n += 1.0;
            acc.s0 += x0;
            acc.s00 += x0 * x0;
            for (j, e) in engines.iter().enumerate() {
                e.run_ion(ion, scratch);
                let x = -scratch.samples[0][1];
                acc.sj[j] += x;
                acc.sjj[j] += x * x;
                acc.s0j[j] += x0 * x;
            }
        },
        |t, p| {
            t.n += p.n;
            t.s0 += p.s0;
            t.s00 += p.s00;
            for j in 0..m {
                t.sj[j] += p.sj[j];
                t.sjj[j] += p.sjj[j];
                t.s0j[j] += p.s0j[j];
            }
        },
    );
    if mom.n < 2.0 || mom.s0 == 0.0 {
        return Err(Error::domain("no ions contribute to the reference echo"));
    }
    let n = mom.n;
    let mut amp = Vec::with_capacity(m);
    let mut sigma = Vec::with_capacity(m);
    for j in 0..m {
        let a = mom.sj[j] / mom.s0;
        let ss = (mom.sjj[j] - 2.0 * a * mom.s0j[j] + a * a * mom.s00).max(0.0);
        let sd = (ss / (n - 1.0)).sqrt();
        amp.push(a);
        sigma.push((sd / n.sqrt() / (mom.s0 / n)).max(f64::EPSILON));
    }
    Ok(SweepCurve::new(
        Axis::new("t_pulse", Unit::Second, pulse_lengths.to_vec()),
        Axis::new("echo_amplitude", Unit::Dimensionless, amp),
    )
    .with_sigma(sigma)
    .with_label(format!("Stark-gated echo, E = {field:e} V/m")))
}

fn shf_factor(m: f64, f: f64, tau: f64) -> f64 {
    1.0 - m * (PI * f * tau).sin().powi(2)
}

/// Data whose echo amplitude depends on a pulse spacing τ.
pub trait ShfEnvelope: Sized {
    fn with_shf(&self, m: f64, f: f64) -> Self;
}

impl ShfEnvelope for SweepCurve {
    fn with_shf(&self, m: f64, f: f64) -> Self {
        let mut out = self.clone();
        let tau = self.abscissa.to_si().values;
        for (k, t) in tau.iter().enumerate() {
            let c = shf_factor(m, f, *t);
            out.ordinate.values[k] *= c;
            if let Some(s) = out.sigma.as_mut() {
                s[k] *= c.abs().max(f64::MIN_POSITIVE);
            }
        }
        out
    }
}

impl ShfEnvelope for EchoTrace {
    fn with_shf(&self, m: f64, f: f64) -> Self {
        let mut out = self.clone();
        if let Some(tau) = self.tau {
            let c = shf_factor(m, f, tau);
            out.intensity.iter_mut().for_each(|i| *i *= c);
        }
        out
    }
}

/// Multiplies echo-vs-τ data by 1 − m·sin²(π f τ).
pub fn apply_shf_modulation<T: ShfEnvelope>(data: &T, m: f64, f: f64) -> Result<T> {
    if !(0.0..=1.0).contains(&m) {
        return Err(Error::domain(format!("modulation depth must lie in [0, 1] (got {m})")));
    }
    if !(f >= 0.0 && f.is_finite()) {
        return Err(Error::domain(format!("modulation frequency must be >= 0 (got {f})")));
    }
    Ok(data.with_shf(m, f))
}
