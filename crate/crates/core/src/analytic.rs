//! Closed-form models: echo decay, linewidth relations, spectral diffusion,
//! orientation-averaged Stark modulation, recovery curves and the optical
//! depth bookkeeping.

use std::f64::consts::{FRAC_PI_2, PI, TAU};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::model::{DephasingParams, DipoleKernel, EnsembleSpec};
use crate::quadrature::integrate_to_tolerance;

/// Base of the logarithm in the TLS term of the spectral diffusion law.
pub const LOG_CONVENTION: &str = "natural";

/// Absolute tolerance on normalized Stark amplitudes.
pub const STARK_TOLERANCE: f64 = 1e-9;

/// Default search limit for extinction times, in V·s/m (1000 V·µs/cm).
pub const DEFAULT_MAX_STARK_AREA: f64 = 0.1;

/// Grid points per estimated oscillation period when bracketing a crossing.
pub const EXTINCTION_GRID_PER_PERIOD: usize = 256;

/// Relative time tolerance of the extinction-time bisection.
pub const EXTINCTION_REL_TOL: f64 = 1e-3;

/// γ_h = 1/(π T₂), ordinary frequency.
pub fn homogeneous_linewidth(t2: f64) -> Result<f64> {
    if t2.is_nan() || t2 <= 0.0 {
        return Err(Error::domain(format!("t2 must be > 0 (got {t2})")));
    }
    Ok(1.0 / (PI * t2))
}

/// I₀·exp(−(4τ/T₂)^x), the stretch applied to the whole ratio.
pub fn echo_decay(tau: f64, i0: f64, t2: f64, x: f64) -> Result<f64> {
    if t2.is_nan() || t2 <= 0.0 {
        return Err(Error::domain(format!("t2 must be > 0 (got {t2})")));
    }
    if x.is_nan() || x < 1.0 {
        return Err(Error::domain(format!("stretch x must be >= 1 (got {x})")));
    }
    if tau.is_nan() || tau < 0.0 {
        return Err(Error::domain(format!("tau must be >= 0 (got {tau})")));
    }
    Ok(i0 * (-(4.0 * tau / t2).powf(x)).exp())
}

/// γ₀′ + α·T.
pub fn temperature_broadening(temp: f64, gamma0p: f64, alpha: f64) -> Result<f64> {
    if temp.is_nan() || temp < 0.0 {
        return Err(Error::domain(format!("temperature must be >= 0 (got {temp})")));
    }
    if alpha.is_nan() || alpha < 0.0 {
        return Err(Error::domain(format!("alpha must be >= 0 (got {alpha})")));
    }
    Ok(gamma0p + alpha * temp)
}

/// Spin-bath part of the spectral diffusion law: γ_SD/2·(1 − e^{−R·T_W}).
pub fn paramagnetic_broadening(gamma_sd: f64, rate_r: f64, t_wait: f64) -> f64 {
    0.5 * gamma_sd * -(-rate_r * t_wait).exp_m1()
}

/// γ₀ + γ_SD/2, the T_W → ∞ limit without the TLS term.
pub fn paramagnetic_asymptote(params: &DephasingParams) -> f64 {
    params.gamma0 + 0.5 * params.gamma_sd
}

/// Effective linewidth after waiting `t_wait`:
/// γ₀ + γ_SD/2·(1 − e^{−R·T_W}) + γ_TLS·ln(T_W/t₀).
pub fn effective_linewidth(params: &DephasingParams, t_wait: f64) -> Result<f64> {
    if params.t0.is_nan() || params.t0 <= 0.0 {
        return Err(Error::domain(format!("t0 must be > 0 (got {})", params.t0)));
    }
    if t_wait.is_nan() || t_wait < params.t0 {
        return Err(Error::domain(format!(
            "t_wait = {t_wait} s is below t0 = {} s",
            params.t0
        )));
    }
    let tls = if params.gamma_tls == 0.0 {
        0.0
    } else {
        params.gamma_tls * (t_wait / params.t0).ln()
    };
    Ok(params.gamma0 + paramagnetic_broadening(params.gamma_sd, params.rate_r, t_wait) + tls)
}

/// A dipole-orientation kernel together with its normalization
/// ∫₀^{π/2} w(θ) dθ, computed by quadrature.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct StarkKernel {
    pub kernel: DipoleKernel,
    pub normalization: f64,
}

impl StarkKernel {
    pub fn new(kernel: DipoleKernel) -> Self {
        let est =
            integrate_to_tolerance(|t| kernel.weight(t), 0.0, FRAC_PI_2, 1e-15, 16);
        Self {
            kernel,
            normalization: est.value,
        }
    }

    pub fn sin4() -> Self {
        Self::new(DipoleKernel::Sin4)
    }

    pub fn cos4() -> Self {
        Self::new(DipoleKernel::Cos4)
    }
}

fn min_order_for_phase(phase: f64) -> usize {
    // enough nodes per oscillation of cos(phase·cosθ) over [0, π/2]
    16 + (phase.abs() * 0.75) as usize
}

/// Normalized echo amplitude as a function of the Stark phase
/// φ = 2π·k·E·t (radians): (1/N)∫₀^{π/2} cos(φ cosθ) w(θ) dθ.
pub fn stark_amplitude_at_phase(phase: f64, kernel: &StarkKernel) -> f64 {
    if phase == 0.0 {
        return 1.0;
    }
    let w = kernel.kernel;
    let est = integrate_to_tolerance(
        |t| (phase * t.cos()).cos() * w.weight(t),
        0.0,
        FRAC_PI_2,
        0.1 * STARK_TOLERANCE * kernel.normalization,
        min_order_for_phase(phase),
    );
    (est.value / kernel.normalization).clamp(-1.0, 1.0)
}

/// d/dφ of [`stark_amplitude_at_phase`].
pub fn stark_amplitude_slope(phase: f64, kernel: &StarkKernel) -> f64 {
    if phase == 0.0 {
        return 0.0;
    }
    let w = kernel.kernel;
    let est = integrate_to_tolerance(
        |t| {
            let c = t.cos();
            -(phase * c).sin() * c * w.weight(t)
        },
        0.0,
        FRAC_PI_2,
        0.1 * STARK_TOLERANCE * kernel.normalization,
        min_order_for_phase(phase),
    );
    est.value / kernel.normalization
}

/// Orientation-averaged echo amplitude after a Stark pulse of area
/// `pulse_area` (V·s/m) with coefficient `stark_k` (Hz per V/m),
/// normalized so that zero area gives 1.
pub fn stark_echo_amplitude(pulse_area: f64, stark_k: f64, kernel: &StarkKernel) -> Result<f64> {
    if pulse_area.is_nan() || pulse_area < 0.0 {
        return Err(Error::domain(format!(
            "pulse area must be >= 0 (got {pulse_area})"
        )));
    }
    if !stark_k.is_finite() {
        return Err(Error::domain("stark_k must be finite"));
    }
    Ok(stark_amplitude_at_phase(TAU * stark_k * pulse_area, kernel))
}

/// Shortest Stark pulse at field `field` that brings |A| down to
/// `1 − target` (target = 1 means the first zero).
pub fn stark_extinction_time(
    field: f64,
    stark_k: f64,
    kernel: &StarkKernel,
    target: f64,
    max_area: f64,
) -> Result<f64> {
    if field.is_nan() || field <= 0.0 {
        return Err(Error::domain(format!("field must be > 0 (got {field})")));
    }
    if stark_k.is_nan() || stark_k <= 0.0 {
        return Err(Error::domain(format!("stark_k must be > 0 (got {stark_k})")));
    }
    if !(target > 0.0 && target <= 1.0) {
        return Err(Error::domain(format!("target must lie in (0, 1] (got {target})")));
    }
    let threshold = 1.0 - target;
    // A starts at 1 and is continuous, so the first time |A| <= threshold is
    // the first downward crossing of A through the threshold.
    let g = |t: f64| stark_amplitude_at_phase(TAU * stark_k * field * t, kernel) - threshold;
    let period = 1.0 / (stark_k * field);
    let dt = period / EXTINCTION_GRID_PER_PERIOD as f64;
    let t_max = max_area / field;
    let mut t_prev = 0.0;
    let mut g_prev = g(0.0);
    let mut min_abs = 1.0f64;
    let mut i = 1usize;
    loop {
        let t = (i as f64 * dt).min(t_max);
        let gt = g(t);
        min_abs = min_abs.min((gt + threshold).abs());
        if gt <= 0.0 {
            if gt == 0.0 {
                return Ok(t);
            }
            return Ok(bisect(g, t_prev, t, g_prev));
        }
        if t >= t_max {
            return Err(Error::Unreachable {
                target,
                achieved: min_abs,
            });
        }
        t_prev = t;
        g_prev = gt;
        i += 1;
    }
}

fn bisect<F: Fn(f64) -> f64>(g: F, mut lo: f64, mut hi: f64, mut g_lo: f64) -> f64 {
    while hi - lo > EXTINCTION_REL_TOL * 1e-3 * hi {
        let mid = 0.5 * (lo + hi);
        let gm = g(mid);
        if (gm > 0.0) == (g_lo > 0.0) {
            lo = mid;
            g_lo = gm;
        } else {
            hi = mid;
        }
    }
    0.5 * (lo + hi)
}

/// a_∞ − a_s·e^{−T_W/T_s} − a_l·e^{−T_W/T_l}.
pub fn double_exp_recovery(
    t_wait: f64,
    a_inf: f64,
    a_short: f64,
    t1_short: f64,
    a_long: f64,
    t1_long: f64,
) -> Result<f64> {
    if !(t1_short > 0.0 && t1_long > 0.0) {
        return Err(Error::domain(format!(
            "time constants must be > 0 (got {t1_short}, {t1_long})"
        )));
    }
    Ok(a_inf - a_short * (-t_wait / t1_short).exp() - a_long * (-t_wait / t1_long).exp())
}

/// offset + amplitude·(Γ/2)²/((x − x₀)² + (Γ/2)²), Γ the FWHM.
pub fn lorentzian(x: f64, center: f64, fwhm: f64, amplitude: f64, offset: f64) -> Result<f64> {
    if fwhm.is_nan() || fwhm <= 0.0 {
        return Err(Error::domain(format!("fwhm must be > 0 (got {fwhm})")));
    }
    let h2 = 0.25 * fwhm * fwhm;
    let d = x - center;
    Ok(offset + amplitude * h2 / (d * d + h2))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum EfficiencyForm {
    /// (OD/4)², the approximation the published OD estimate relies on.
    PaperApprox,
    /// (e^{OD/2} − e^{−OD/2})² = (2 sinh(OD/2))².
    Exact,
}

/// Both efficiency forms for one optical depth.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EchoEfficiency {
    pub paper_approx: f64,
    pub exact: f64,
}

impl EchoEfficiency {
    pub fn get(&self, form: EfficiencyForm) -> f64 {
        match form {
            EfficiencyForm::PaperApprox => self.paper_approx,
            EfficiencyForm::Exact => self.exact,
        }
    }
}

pub fn echo_efficiency_from_od(od: f64) -> Result<EchoEfficiency> {
    if od.is_nan() || od < 0.0 {
        return Err(Error::domain(format!("optical depth must be >= 0 (got {od})")));
    }
    let s = 2.0 * (0.5 * od).sinh();
    Ok(EchoEfficiency {
        paper_approx: (0.25 * od).powi(2),
        exact: s * s,
    })
}

pub fn od_from_efficiency(eta: f64, form: EfficiencyForm) -> Result<f64> {
    if eta.is_nan() || !(0.0..1.0).contains(&eta) {
        return Err(Error::domain(format!("efficiency must lie in [0, 1) (got {eta})")));
    }
    Ok(match form {
        EfficiencyForm::PaperApprox => 4.0 * eta.sqrt(),
        EfficiencyForm::Exact => 2.0 * (0.5 * eta.sqrt()).asinh(),
    })
}

/// Scalar memory figures derived from an ensemble description.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MemoryMetrics {
    /// Ensemble storage bound, the optical T₂ (s).
    pub storage_time: f64,
    /// 1/T₁,opt (Hz), without any cavity enhancement.
    pub single_ion_bandwidth: f64,
    /// F_P/T₁,opt (Hz) when a Purcell factor is supplied.
    pub single_ion_bandwidth_purcell: Option<f64>,
    /// Γ_inh (Hz).
    pub ensemble_bandwidth: f64,
    pub optical_depth: f64,
    pub efficiency: EchoEfficiency,
}

pub fn memory_metrics(
    spec: &EnsembleSpec,
    od: f64,
    purcell_factor: Option<f64>,
) -> Result<MemoryMetrics> {
    let raw = if spec.t1_optical > 0.0 {
        1.0 / spec.t1_optical
    } else {
        0.0
    };
    Ok(MemoryMetrics {
        storage_time: spec.t2_optical,
        single_ion_bandwidth: raw,
        single_ion_bandwidth_purcell: purcell_factor.map(|f| f * raw),
        ensemble_bandwidth: spec.line.fwhm,
        optical_depth: od,
        efficiency: echo_efficiency_from_od(od)?,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn close(a: f64, b: f64, rel: f64) -> bool {
        (a - b).abs() <= rel * b.abs().max(f64::MIN_POSITIVE)
    }

    #[test]
    fn linewidth_table_pairs() {
        let g = homogeneous_linewidth(9.7e-6).unwrap();
        assert!((g - 32.8e3).abs() < 0.5e3, "{g}");
        let g = homogeneous_linewidth(64.1e-6).unwrap();
        assert!((g - 5.0e3).abs() < 0.1e3, "{g}");
        assert_eq!(homogeneous_linewidth(f64::INFINITY).unwrap(), 0.0);
        assert!(homogeneous_linewidth(0.0).is_err());
        assert!(homogeneous_linewidth(-1.0).is_err());
    }

    #[test]
    fn decay_special_points() {
        assert_eq!(echo_decay(0.0, 3.0, 1e-5, 1.0).unwrap(), 3.0);
        let t2 = 9.7e-6;
        for x in [1.0, 2.0, 3.5] {
            let v = echo_decay(t2 / 4.0, 1.0, t2, x).unwrap();
            assert!(close(v, (-1.0f64).exp(), 1e-14), "x = {x}");
        }
        assert!(echo_decay(1e-6, 1.0, 1e-5, 0.5).is_err());
        assert!(echo_decay(-1e-6, 1.0, 1e-5, 1.0).is_err());
    }

    #[test]
    fn temperature_law() {
        assert_eq!(temperature_broadening(0.0, 33e3, 111e3).unwrap(), 33e3);
        assert_eq!(temperature_broadening(1.0, 33e3, 111e3).unwrap(), 144e3);
        let a = temperature_broadening(0.3, 0.0, 111e3).unwrap();
        let b = temperature_broadening(0.6, 0.0, 111e3).unwrap();
        assert_eq!(2.0 * a, b);
        assert!(temperature_broadening(-0.1, 0.0, 1.0).is_err());
    }

    #[test]
    fn spectral_diffusion_law() {
        let p = DephasingParams::chip1h(1e-4);
        let g = effective_linewidth(&p, 1e-3).unwrap();
        // 26.3 + 673.5·(1 − e^{−0.27}) + 15.8·ln 10 (kHz)
        let want = 26.3e3 + 673.5e3 * (1.0 - (-0.27f64).exp()) + 15.8e3 * 10f64.ln();
        assert!(close(g, want, 1e-12));
        assert!((g / 215e3 - 1.0).abs() < 0.15, "{g}");

        let mut p3 = DephasingParams::chip3h(1e-4);
        p3.gamma_tls = 0.0;
        assert_eq!(paramagnetic_asymptote(&p3), 27.6e3);
        assert_eq!(effective_linewidth(&p3, f64::INFINITY).unwrap(), 27.6e3);

        let at_t0 = effective_linewidth(&p, p.t0).unwrap();
        let want = p.gamma0 + 0.5 * p.gamma_sd * (1.0 - (-p.rate_r * p.t0).exp());
        assert!(close(at_t0, want, 1e-12));

        let err = effective_linewidth(&p, 1e-5).unwrap_err();
        assert!(err.to_string().contains("t0"));
    }

    #[test]
    fn kernel_normalization_is_three_pi_over_sixteen() {
        for k in [StarkKernel::sin4(), StarkKernel::cos4()] {
            assert!(close(k.normalization, 3.0 * PI / 16.0, 1e-12));
        }
        let iso = StarkKernel::new(DipoleKernel::Isotropic);
        assert!(close(iso.normalization, 1.0, 1e-12));
    }

    #[test]
    fn stark_amplitude_basic_properties() {
        let k = StarkKernel::sin4();
        assert_eq!(stark_echo_amplitude(0.0, 58.0, &k).unwrap(), 1.0);
        assert!(stark_echo_amplitude(-1.0, 58.0, &k).is_err());
        for phase in [0.3, 2.0, 7.5, 40.0] {
            let a = stark_amplitude_at_phase(phase, &k);
            assert_eq!(a, stark_amplitude_at_phase(-phase, &k));
            assert!(a.abs() <= 1.0);
        }
    }

    #[test]
    fn isotropic_kernel_gives_sinc() {
        // ∫₀^{π/2} cos(φ cosθ) sinθ dθ = sin φ / φ
        let k = StarkKernel::new(DipoleKernel::Isotropic);
        for phase in [0.5, 3.0, 12.0, 100.0] {
            let a = stark_amplitude_at_phase(phase, &k);
            assert!((a - phase.sin() / phase).abs() < 1e-10, "{phase}");
        }
    }

    #[test]
    fn slope_matches_central_difference() {
        let k = StarkKernel::cos4();
        for phase in [0.7, 4.0, 15.0] {
            let h = 1e-5;
            let fd = (stark_amplitude_at_phase(phase + h, &k)
                - stark_amplitude_at_phase(phase - h, &k))
                / (2.0 * h);
            assert!((stark_amplitude_slope(phase, &k) - fd).abs() < 1e-7);
        }
    }

    #[test]
    fn extinction_time_scales_inversely_with_field() {
        let k = StarkKernel::sin4();
        let t1 = stark_extinction_time(4e3, 58.0, &k, 0.9, DEFAULT_MAX_STARK_AREA).unwrap();
        let t2 = stark_extinction_time(8e3, 58.0, &k, 0.9, DEFAULT_MAX_STARK_AREA).unwrap();
        assert!(close(t1, 2.0 * t2, 1e-3));
        assert!((t1 / 3e-6 - 1.0).abs() < 0.2, "{t1}");
    }

    #[test]
    fn unreachable_target_reports_minimum() {
        let k = StarkKernel::sin4();
        match stark_extinction_time(4e3, 58.0, &k, 1.0, 1e-3) {
            Err(Error::Unreachable { achieved, .. }) => assert!(achieved > 0.5),
            other => panic!("{other:?}"),
        }
    }

    #[test]
    fn recovery_limits() {
        let (ai, as_, ts, al, tl) = (1.0, 0.3, 9.4e-3, 0.5, 0.53);
        assert!(close(double_exp_recovery(1e6, ai, as_, ts, al, tl).unwrap(), ai, 1e-15));
        assert!(close(
            double_exp_recovery(0.0, ai, as_, ts, al, tl).unwrap(),
            ai - as_ - al,
            1e-15
        ));
        let v = double_exp_recovery(ts, ai, as_, ts, 0.0, tl).unwrap();
        assert!(close(ai - v, as_ / std::f64::consts::E, 1e-14));
        assert!(double_exp_recovery(1.0, 1.0, 1.0, 0.0, 1.0, 1.0).is_err());
    }

    #[test]
    fn lorentzian_half_points() {
        assert_eq!(lorentzian(2.0, 2.0, 0.5, 3.0, 1.0).unwrap(), 4.0);
        assert!(close(lorentzian(2.25, 2.0, 0.5, 3.0, 1.0).unwrap(), 2.5, 1e-15));
        let v = lorentzian(1532.94, 1532.8, 0.28, 1.0, 0.0).unwrap();
        assert!((v - 0.5).abs() < 1e-9);
        assert!(lorentzian(0.0, 0.0, 0.0, 1.0, 0.0).is_err());
    }

    #[test]
    fn optical_depth_bookkeeping() {
        let e = echo_efficiency_from_od(0.0).unwrap();
        assert_eq!((e.paper_approx, e.exact), (0.0, 0.0));
        let e = echo_efficiency_from_od(0.0155).unwrap();
        assert!((e.paper_approx - 1.5e-5).abs() < 0.01e-5);
        assert!((e.exact - 2.4e-4).abs() < 0.01e-4);
        let od = od_from_efficiency(1.5e-5, EfficiencyForm::PaperApprox).unwrap();
        assert!((od - 0.0155).abs() < 1e-3);
        assert_eq!(od_from_efficiency(0.0, EfficiencyForm::Exact).unwrap(), 0.0);
        assert!(od_from_efficiency(1.0, EfficiencyForm::Exact).is_err());
        for od in [1e-6, 1e-4, 1e-2] {
            let e = echo_efficiency_from_od(od).unwrap();
            assert!((e.exact / e.paper_approx - 16.0).abs() < 16.0 * od);
        }
    }

    #[test]
    fn metrics_for_chip3h() {
        let m = memory_metrics(&EnsembleSpec::chip3h(), 0.0, None).unwrap();
        assert_eq!(m.storage_time, 64.1e-6);
        assert_eq!(m.ensemble_bandwidth, 36e9);
        assert!(m.single_ion_bandwidth > 1e2 && m.single_ion_bandwidth < 1e4);
        assert_eq!(m.efficiency.paper_approx, 0.0);
        let m = memory_metrics(&EnsembleSpec::chip3h(), 0.0155, Some(32.0)).unwrap();
        assert!(close(m.single_ion_bandwidth_purcell.unwrap(), 32.0 / 2.8e-3, 1e-15));
    }
}
