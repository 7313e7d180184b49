use std::f64::consts::{FRAC_PI_2, PI};

use rand::Rng;
use serde::{Deserialize, Serialize};
use statrs::function::erf::{erf, erf_inv};

/// Default Lorentzian truncation, in units of the FWHM on each side.
pub const DEFAULT_TRUNCATION_FWHM: f64 = 50.0;

/// 1532.8 nm expressed as an optical frequency.
pub const ER_TIO2_LINE_CENTER_HZ: f64 = 299_792_458.0 / 1532.8e-9;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum LineShape {
    Lorentzian,
    Gaussian,
}

/// Static (inhomogeneous) distribution of transition frequencies.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct InhomogeneousLine {
    /// Hz
    pub center_frequency: f64,
    /// Hz, FWHM
    pub fwhm: f64,
    pub shape: LineShape,
    /// Lorentzian samples are confined to center ± truncation_fwhm·fwhm.
    #[serde(default = "default_truncation")]
    pub truncation_fwhm: f64,
}

fn default_truncation() -> f64 {
    DEFAULT_TRUNCATION_FWHM
}

impl InhomogeneousLine {
    pub fn lorentzian(center_frequency: f64, fwhm: f64) -> Self {
        Self {
            center_frequency,
            fwhm,
            shape: LineShape::Lorentzian,
            truncation_fwhm: DEFAULT_TRUNCATION_FWHM,
        }
    }

    pub fn gaussian(center_frequency: f64, fwhm: f64) -> Self {
        Self {
            shape: LineShape::Gaussian,
            ..Self::lorentzian(center_frequency, fwhm)
        }
    }

    fn gaussian_sigma(&self) -> f64 {
        self.fwhm / (2.0 * (2.0 * std::f64::consts::LN_2).sqrt())
    }

    /// Cumulative distribution of the detuning from center (untruncated).
    fn cdf(&self, detuning: f64) -> f64 {
        match self.shape {
            LineShape::Lorentzian => 0.5 + (detuning / (0.5 * self.fwhm)).atan() / PI,
            LineShape::Gaussian => {
                0.5 * (1.0 + erf(detuning / (self.gaussian_sigma() * std::f64::consts::SQRT_2)))
            }
        }
    }

    fn quantile(&self, p: f64) -> f64 {
        match self.shape {
            LineShape::Lorentzian => 0.5 * self.fwhm * (PI * (p - 0.5)).tan(),
            LineShape::Gaussian => {
                self.gaussian_sigma() * std::f64::consts::SQRT_2 * erf_inv(2.0 * p - 1.0)
            }
        }
    }

    /// Draws a detuning from line center (Hz) from the whole line.
    pub fn sample_detuning<R: Rng + ?Sized>(&self, rng: &mut R) -> f64 {
        let lim = match self.shape {
            LineShape::Lorentzian => self.truncation_fwhm * self.fwhm,
            LineShape::Gaussian => f64::INFINITY,
        };
        self.sample_detuning_within(rng, -lim, lim)
    }

    /// Draws a detuning conditioned on lying in `[lo, hi]` (inverse CDF).
    pub fn sample_detuning_within<R: Rng + ?Sized>(&self, rng: &mut R, lo: f64, hi: f64) -> f64 {
        let (plo, phi) = (self.cdf(lo), self.cdf(hi));
        let u: f64 = rng.random();
        let x = self.quantile(plo + u * (phi - plo));
        x.clamp(lo, hi)
    }
}

/// Orientation weighting of the dipole angle θ on [0, π/2].
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum DipoleKernel {
    /// Field perpendicular to the light polarization plane.
    Sin4,
    /// In-plane field, as for on-chip electrodes.
    Cos4,
    /// Uniform dipole orientation, weight sin θ.
    Isotropic,
}

impl DipoleKernel {
    pub fn weight(self, theta: f64) -> f64 {
        match self {
            DipoleKernel::Sin4 => theta.sin().powi(4),
            DipoleKernel::Cos4 => theta.cos().powi(4),
            DipoleKernel::Isotropic => theta.sin(),
        }
    }

    /// Closed-form ∫₀^{π/2} weight(θ) dθ.
    pub fn analytic_normalization(self) -> f64 {
        match self {
            DipoleKernel::Sin4 | DipoleKernel::Cos4 => 3.0 * PI / 16.0,
            DipoleKernel::Isotropic => 1.0,
        }
    }

    /// Samples θ ∈ [0, π/2] with density ∝ weight(θ).
    pub fn sample_theta<R: Rng + ?Sized>(self, rng: &mut R) -> f64 {
        match self {
            DipoleKernel::Isotropic => {
                let u: f64 = rng.random();
                u.acos()
            }
            _ => loop {
                // weight ≤ 1 on [0, π/2]; acceptance 3/8
                let theta = FRAC_PI_2 * rng.random::<f64>();
                if rng.random::<f64>() < self.weight(theta) {
                    break theta;
                }
            },
        }
    }
}

/// Superhyperfine echo-envelope modulation, 1 − m·sin²(π f τ).
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ShfModulation {
    pub depth: f64,
    /// Hz
    pub frequency: f64,
}

/// Paramagnetic bath acting through sudden frequency jumps, plus the TLS
/// logarithmic term used only by the closed-form linewidth.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SuddenJumpBath {
    /// R, Hz
    pub flip_rate: f64,
    /// γ_SD, Hz (FWHM of the Lorentzian spread of bath shifts)
    pub max_shift: f64,
    /// γ_TLS, Hz
    pub tls_rate: f64,
    /// t₀, s
    pub tls_t0: f64,
}

/// Everything the simulator and the closed-form models need to know about an
/// emitter ensemble. All fields are SI.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EnsembleSpec {
    pub line: InhomogeneousLine,
    pub t1_optical: f64,
    /// Two-pulse echo coherence time; `f64::INFINITY` disables homogeneous dephasing.
    pub t2_optical: f64,
    #[serde(default = "one")]
    pub stretch_x: f64,
    pub spin_t1_short: f64,
    pub spin_t1_long: f64,
    pub short_fraction: f64,
    /// Hz per V/m
    pub stark_k: f64,
    pub dipole_kernel: DipoleKernel,
    #[serde(default)]
    pub shf_modulation: Option<ShfModulation>,
    #[serde(default)]
    pub bath: Option<SuddenJumpBath>,
}

fn one() -> f64 {
    1.0
}

impl EnsembleSpec {
    /// One-hour annealed film at 200 mT.
    pub fn chip1h() -> Self {
        Self {
            line: InhomogeneousLine::lorentzian(ER_TIO2_LINE_CENTER_HZ, 36e9),
            t1_optical: 2.8e-3,
            t2_optical: 9.7e-6,
            stretch_x: 1.0,
            spin_t1_short: 9.4e-3,
            spin_t1_long: 0.53,
            short_fraction: 0.4,
            stark_k: 58.0,
            dipole_kernel: DipoleKernel::Sin4,
            shf_modulation: None,
            bath: Some(SuddenJumpBath {
                flip_rate: 270.0,
                max_shift: 1347e3,
                tls_rate: 15.8e3,
                tls_t0: 1e-4,
            }),
        }
    }

    /// Three-hour annealed film at 433 mT.
    pub fn chip3h() -> Self {
        Self {
            t2_optical: 64.1e-6,
            spin_t1_long: 1.63,
            bath: Some(SuddenJumpBath {
                flip_rate: 300.0,
                max_shift: 42.8e3,
                tls_rate: 1.4e3,
                tls_t0: 1e-4,
            }),
            ..Self::chip1h()
        }
    }

    /// Homogeneous linewidth implied by `t2_optical` (Hz).
    pub fn homogeneous_linewidth(&self) -> f64 {
        1.0 / (PI * self.t2_optical)
    }

    /// Linewidth parameters for the closed-form spectral diffusion law, taking
    /// γ₀ from the coherence time and the rest from the bath (zero if absent).
    pub fn dephasing_params(&self) -> DephasingParams {
        let bath = self.bath.unwrap_or(SuddenJumpBath {
            flip_rate: 0.0,
            max_shift: 0.0,
            tls_rate: 0.0,
            tls_t0: 1.0,
        });
        DephasingParams {
            gamma0: if self.t2_optical.is_finite() {
                self.homogeneous_linewidth()
            } else {
                0.0
            },
            gamma_sd: bath.max_shift,
            rate_r: bath.flip_rate,
            gamma_tls: bath.tls_rate,
            t0: bath.tls_t0,
        }
    }
}

/// Parameters of γ(T_W) = γ₀ + γ_SD/2·(1 − e^{−R·T_W}) + γ_TLS·ln(T_W/t₀).
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DephasingParams {
    pub gamma0: f64,
    pub gamma_sd: f64,
    pub rate_r: f64,
    pub gamma_tls: f64,
    pub t0: f64,
}

impl DephasingParams {
    pub fn chip1h(t0: f64) -> Self {
        Self {
            gamma0: 26.3e3,
            gamma_sd: 1347e3,
            rate_r: 270.0,
            gamma_tls: 15.8e3,
            t0,
        }
    }

    pub fn chip3h(t0: f64) -> Self {
        Self {
            gamma0: 6.2e3,
            gamma_sd: 42.8e3,
            rate_r: 300.0,
            gamma_tls: 1.4e3,
            t0,
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn lorentzian_sampling_has_expected_half_width() {
        let line = InhomogeneousLine::lorentzian(0.0, 36e9);
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        let mut xs: Vec<f64> = (0..1_000_000).map(|_| line.sample_detuning(&mut rng)).collect();
        xs.sort_by(f64::total_cmp);
        // for a Cauchy law the half interquartile range equals the HWHM
        let q1 = xs[xs.len() / 4];
        let q3 = xs[3 * xs.len() / 4];
        let hwhm = 0.5 * (q3 - q1);
        assert!((hwhm / 18e9 - 1.0).abs() < 0.02, "hwhm = {hwhm}");
        let median = xs[xs.len() / 2];
        assert!(median.abs() < 0.01 * 36e9);
        assert!(xs[0] >= -50.0 * 36e9 && xs[xs.len() - 1] <= 50.0 * 36e9);
    }

    #[test]
    fn gaussian_sampling_recovers_fwhm() {
        let line = InhomogeneousLine::gaussian(5.0, 2.0);
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let n = 200_000;
        let xs: Vec<f64> = (0..n).map(|_| line.sample_detuning(&mut rng)).collect();
        let mean = xs.iter().sum::<f64>() / n as f64;
        let var = xs.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / n as f64;
        let fwhm = var.sqrt() * 2.0 * (2.0 * std::f64::consts::LN_2).sqrt();
        assert!(mean.abs() < 0.01);
        assert!((fwhm / 2.0 - 1.0).abs() < 0.01, "fwhm {fwhm}");
    }

    #[test]
    fn window_sampling_stays_inside() {
        let line = InhomogeneousLine::lorentzian(0.0, 36e9);
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        for _ in 0..10_000 {
            let x = line.sample_detuning_within(&mut rng, -15e6, 15e6);
            assert!((-15e6..=15e6).contains(&x));
        }
    }

    #[test]
    fn kernel_sampling_matches_moments() {
        let mut rng = ChaCha8Rng::seed_from_u64(9);
        // E[cos²θ] under sin⁴θ: ∫cos²sin⁴ / ∫sin⁴ = (π/32)/(3π/16) = 1/6
        let n = 200_000;
        let m: f64 = (0..n)
            .map(|_| DipoleKernel::Sin4.sample_theta(&mut rng).cos().powi(2))
            .sum::<f64>()
            / n as f64;
        assert!((m - 1.0 / 6.0).abs() < 3e-3, "{m}");
        // under cos⁴θ: ∫cos⁶ / ∫cos⁴ = (5π/32)/(3π/16) = 5/6
        let m: f64 = (0..n)
            .map(|_| DipoleKernel::Cos4.sample_theta(&mut rng).cos().powi(2))
            .sum::<f64>()
            / n as f64;
        assert!((m - 5.0 / 6.0).abs() < 3e-3, "{m}");
    }

    #[test]
    fn dephasing_params_from_spec() {
        let p = EnsembleSpec::chip3h().dephasing_params();
        assert!((p.gamma0 - 1.0 / (PI * 64.1e-6)).abs() < 1e-9);
        assert_eq!(p.gamma_sd, 42.8e3);
        let mut spec = EnsembleSpec::chip3h();
        spec.t2_optical = f64::INFINITY;
        spec.bath = None;
        let p = spec.dephasing_params();
        assert_eq!((p.gamma0, p.gamma_sd, p.rate_r), (0.0, 0.0, 0.0));
    }
}
