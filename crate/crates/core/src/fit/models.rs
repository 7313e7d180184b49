//! Registry of fit models: formulas, analytic Jacobians, bounds and starting
//! points.

use std::f64::consts::TAU;

use nalgebra::{DMatrix, DVector};

use super::lm::Bound;
use crate::analytic::{stark_amplitude_at_phase, stark_amplitude_slope, StarkKernel};
use crate::error::{Error, Result};
use crate::model::DipoleKernel;

/// Every registered model id.
pub const MODEL_IDS: [&str; 9] = [
    "echo_decay",
    "spectral_diffusion",
    "sd_tls_only",
    "sd_bath_only",
    "recovery_2exp",
    "lorentzian",
    "linear_broadening",
    "stark_sin4",
    "stark_cos4",
];

/// How a parameter responds when the ordinate is multiplied by c > 0.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ParamRole {
    /// Unchanged.
    Shape,
    /// Multiplied by c.
    Amplitude,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ParamSpec {
    pub name: &'static str,
    pub bound: Bound,
    pub role: ParamRole,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub(crate) enum Kind {
    EchoDecay,
    SpectralDiffusion,
    SdTlsOnly,
    SdBathOnly,
    Recovery2Exp,
    Lorentzian,
    LinearBroadening,
    Stark(StarkKernel),
}

/// A named model with parameter metadata.
#[derive(Debug, Clone, PartialEq)]
pub struct ModelSpec {
    pub id: &'static str,
    pub params: Vec<ParamSpec>,
    /// Parameters held fixed unless the caller frees them.
    pub default_fixed: Vec<(&'static str, f64)>,
    /// Reference time of the logarithmic term (spectral diffusion models);
    /// `None` means the smallest abscissa of the fitted curve.
    pub t0: Option<f64>,
    pub(crate) kind: Kind,
}

const R_MAX: f64 = 1e6;

fn free() -> Bound {
    Bound {
        lower: f64::NEG_INFINITY,
        upper: f64::INFINITY,
        open_lower: false,
    }
}

fn non_negative() -> Bound {
    Bound {
        lower: 0.0,
        upper: f64::INFINITY,
        open_lower: false,
    }
}

fn positive() -> Bound {
    Bound {
        lower: 0.0,
        upper: f64::INFINITY,
        open_lower: true,
    }
}

fn p(name: &'static str, bound: Bound, role: ParamRole) -> ParamSpec {
    ParamSpec { name, bound, role }
}

use ParamRole::{Amplitude, Shape};

impl ModelSpec {
    /// Looks a model up by id.
    pub fn by_id(id: &str) -> Result<Self> {
        let rate = Bound {
            lower: 0.0,
            upper: R_MAX,
            open_lower: false,
        };
        let sd = |id, kind, names: &[&'static str]| {
            let params = names
                .iter()
                .map(|&n| match n {
                    "rate_r" => p(n, rate, Shape),
                    _ => p(n, non_negative(), Amplitude),
                })
                .collect();
            Self {
                id,
                params,
                default_fixed: vec![],
                t0: None,
                kind,
            }
        };
        let spec = match id {
            "echo_decay" => Self {
                id: "echo_decay",
                params: vec![
                    p("i0", free(), Amplitude),
                    p("t2", positive(), Shape),
                    p(
                        "x",
                        Bound {
                            lower: 1.0,
                            upper: 10.0,
                            open_lower: false,
                        },
                        Shape,
                    ),
                ],
                default_fixed: vec![("x", 1.0)],
                t0: None,
                kind: Kind::EchoDecay,
            },
            "spectral_diffusion" => sd(
                "spectral_diffusion",
                Kind::SpectralDiffusion,
                &["gamma0", "gamma_sd", "rate_r", "gamma_tls"],
            ),
            "sd_tls_only" => sd("sd_tls_only", Kind::SdTlsOnly, &["gamma0", "gamma_tls"]),
            "sd_bath_only" => sd(
                "sd_bath_only",
                Kind::SdBathOnly,
                &["gamma0", "gamma_sd", "rate_r"],
            ),
            "recovery_2exp" => Self {
                id: "recovery_2exp",
                params: vec![
                    p("a_inf", free(), Amplitude),
                    p("a_short", free(), Amplitude),
                    p("t1_short", positive(), Shape),
                    p("a_long", free(), Amplitude),
                    p("t1_long", positive(), Shape),
                ],
                default_fixed: vec![],
                t0: None,
                kind: Kind::Recovery2Exp,
            },
            "lorentzian" => Self {
                id: "lorentzian",
                params: vec![
                    p("center", free(), Shape),
                    p("fwhm", positive(), Shape),
                    p("amplitude", free(), Amplitude),
                    p("offset", free(), Amplitude),
                ],
                default_fixed: vec![],
                t0: None,
                kind: Kind::Lorentzian,
            },
            "linear_broadening" => Self {
                id: "linear_broadening",
                params: vec![
                    p("gamma0p", non_negative(), Amplitude),
                    p("alpha", non_negative(), Amplitude),
                ],
                default_fixed: vec![],
                t0: None,
                kind: Kind::LinearBroadening,
            },
            "stark_sin4" | "stark_cos4" => {
                let kernel = if id == "stark_sin4" {
                    StarkKernel::sin4()
                } else {
                    StarkKernel::cos4()
                };
                Self::stark(kernel)
            }
            other => return Err(Error::UnknownModel(other.to_string())),
        };
        Ok(spec)
    }

    /// Stark modulation model for an arbitrary kernel.
    pub fn stark(kernel: StarkKernel) -> Self {
        let id = match kernel.kernel {
            DipoleKernel::Sin4 => "stark_sin4",
            DipoleKernel::Cos4 => "stark_cos4",
            DipoleKernel::Isotropic => "stark_isotropic",
        };
        Self {
            id,
            params: vec![p("k", non_negative(), Shape), p("a0", free(), Amplitude)],
            default_fixed: vec![],
            t0: None,
            kind: Kind::Stark(kernel),
        }
    }

    pub fn with_t0(mut self, t0: f64) -> Self {
        self.t0 = Some(t0);
        self
    }

    pub fn n_params(&self) -> usize {
        self.params.len()
    }

    pub fn param_names(&self) -> Vec<&'static str> {
        self.params.iter().map(|p| p.name).collect()
    }

    pub fn index_of(&self, name: &str) -> Option<usize> {
        self.params.iter().position(|p| p.name == name)
    }

    pub(crate) fn uses_t0(&self) -> bool {
        matches!(
            self.kind,
            Kind::SpectralDiffusion | Kind::SdTlsOnly | Kind::SdBathOnly
        )
    }

    /// Model value at `x` (SI units).
    pub fn evaluate(&self, x: f64, params: &[f64]) -> f64 {
        self.eval_inner(x, params, None)
    }

    /// Model value and ∂f/∂p at `x`.
    pub fn evaluate_with_gradient(&self, x: f64, params: &[f64], grad: &mut [f64]) -> f64 {
        self.eval_inner(x, params, Some(grad))
    }

    pub fn evaluate_many(&self, xs: &[f64], params: &[f64]) -> Vec<f64> {
        xs.iter().map(|&x| self.evaluate(x, params)).collect()
    }

    fn eval_inner(&self, x: f64, q: &[f64], grad: Option<&mut [f64]>) -> f64 {
        let t0 = self.t0.unwrap_or(f64::NAN);
        match self.kind {
            Kind::EchoDecay => {
                let (i0, t2, s) = (q[0], q[1], q[2]);
                let r = 4.0 * x / t2;
                let pw = r.powf(s);
                let e = (-pw).exp();
                if let Some(g) = grad {
                    g[0] = e;
                    g[1] = i0 * e * s * pw / t2;
                    g[2] = if r > 0.0 { -i0 * e * pw * r.ln() } else { 0.0 };
                }
                i0 * e
            }
            Kind::SpectralDiffusion => {
                let (g0, gsd, rate, gtls) = (q[0], q[1], q[2], q[3]);
                let e = (-rate * x).exp();
                let l = (x / t0).ln();
                if let Some(g) = grad {
                    g[0] = 1.0;
                    g[1] = 0.5 * (1.0 - e);
                    g[2] = 0.5 * gsd * x * e;
                    g[3] = l;
                }
                g0 + 0.5 * gsd * (1.0 - e) + gtls * l
            }
            Kind::SdTlsOnly => {
                let l = (x / t0).ln();
                if let Some(g) = grad {
                    g[0] = 1.0;
                    g[1] = l;
                }
                q[0] + q[1] * l
            }
            Kind::SdBathOnly => {
                let (g0, gsd, rate) = (q[0], q[1], q[2]);
                let e = (-rate * x).exp();
                if let Some(g) = grad {
                    g[0] = 1.0;
                    g[1] = 0.5 * (1.0 - e);
                    g[2] = 0.5 * gsd * x * e;
                }
                g0 + 0.5 * gsd * (1.0 - e)
            }
            Kind::Recovery2Exp => {
                let (ai, a_s, ts, al, tl) = (q[0], q[1], q[2], q[3], q[4]);
                let es = (-x / ts).exp();
                let el = (-x / tl).exp();
                if let Some(g) = grad {
                    g[0] = 1.0;
                    g[1] = -es;
                    g[2] = -a_s * es * x / (ts * ts);
                    g[3] = -el;
                    g[4] = -al * el * x / (tl * tl);
                }
                ai - a_s * es - al * el
            }
            Kind::Lorentzian => {
                let (c, fwhm, amp, off) = (q[0], q[1], q[2], q[3]);
                let h = 0.5 * fwhm;
                let d = x - c;
                let den = d * d + h * h;
                let shape = h * h / den;
                if let Some(g) = grad {
                    g[0] = amp * h * h * 2.0 * d / (den * den);
                    g[1] = amp * h * d * d / (den * den);
                    g[2] = shape;
                    g[3] = 1.0;
                }
                off + amp * shape
            }
            Kind::LinearBroadening => {
                if let Some(g) = grad {
                    g[0] = 1.0;
                    g[1] = x;
                }
                q[0] + q[1] * x
            }
            Kind::Stark(kernel) => {
                let (k, a0) = (q[0], q[1]);
                let phase = TAU * k * x;
                let a = stark_amplitude_at_phase(phase, &kernel);
                if let Some(g) = grad {
                    g[0] = a0 * stark_amplitude_slope(phase, &kernel) * TAU * x;
                    g[1] = a;
                }
                a0 * a
            }
        }
    }

    /// Candidate starting points derived from the data, best guess first.
    pub(crate) fn starts(&self, x: &[f64], y: &[f64]) -> Vec<Vec<f64>> {
        let starts = match self.kind {
            Kind::EchoDecay => vec![init_echo_decay(x, y)],
            Kind::SpectralDiffusion | Kind::SdTlsOnly | Kind::SdBathOnly => {
                self.init_spectral_diffusion(x, y)
            }
            Kind::Recovery2Exp => init_recovery(x, y),
            Kind::Lorentzian => vec![init_lorentzian(x, y)],
            Kind::LinearBroadening => vec![init_line(x, y)],
            Kind::Stark(kernel) => init_stark(&kernel, x, y),
        };
        starts
            .into_iter()
            .map(|s| {
                s.iter()
                    .zip(&self.params)
                    .map(|(&v, p)| {
                        let b = p.bound;
                        let v = if v.is_finite() { v } else { 1.0 };
                        if b.open_lower && v <= b.lower {
                            b.lower + 1e-3 * (1.0 + b.lower.abs())
                        } else {
                            v.clamp(b.lower, b.upper)
                        }
                    })
                    .collect()
            })
            .collect()
    }

    fn init_spectral_diffusion(&self, x: &[f64], y: &[f64]) -> Vec<Vec<f64>> {
        let i_min = argmin(x);
        let g0 = y[i_min].max(0.0);
        let (lo, hi) = min_max(y);
        let range = hi - lo;
        let gsd = 2.0 * range;
        let (xmin, xmax) = min_max(x);
        let t0 = self.t0.unwrap_or(xmin);
        let span = (xmax / t0).ln().max(1e-12);
        let gtls = 0.1 * range / span;
        let rates: Vec<f64> = [0.3, 1.0, 3.0, 10.0, 30.0]
            .iter()
            .map(|f| (f / (xmin * xmax).sqrt()).min(R_MAX))
            .collect();
        match self.kind {
            Kind::SdTlsOnly => vec![vec![g0, range / span]],
            Kind::SdBathOnly => rates.iter().map(|&r| vec![g0, gsd, r]).collect(),
            _ => rates.iter().map(|&r| vec![g0, gsd, r, gtls]).collect(),
        }
    }
}

fn argmin(v: &[f64]) -> usize {
    (0..v.len()).min_by(|&a, &b| v[a].total_cmp(&v[b])).unwrap_or(0)
}

fn argmax(v: &[f64]) -> usize {
    (0..v.len()).max_by(|&a, &b| v[a].total_cmp(&v[b])).unwrap_or(0)
}

fn min_max(v: &[f64]) -> (f64, f64) {
    v.iter()
        .fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), &x| {
            (lo.min(x), hi.max(x))
        })
}

/// Points sorted by abscissa.
fn sorted(x: &[f64], y: &[f64]) -> (Vec<f64>, Vec<f64>) {
    let mut idx: Vec<usize> = (0..x.len()).collect();
    idx.sort_by(|&a, &b| x[a].total_cmp(&x[b]));
    (idx.iter().map(|&i| x[i]).collect(), idx.iter().map(|&i| y[i]).collect())
}

fn init_echo_decay(x: &[f64], y: &[f64]) -> Vec<f64> {
    let (xs, ys) = sorted(x, y);
    let i0 = ys[0];
    let target = i0 / std::f64::consts::E;
    let mut t2 = f64::NAN;
    for k in 1..xs.len() {
        let (ya, yb) = (ys[k - 1], ys[k]);
        if (ya - target) * (yb - target) <= 0.0 && ya != yb {
            let f = (ya - target) / (ya - yb);
            let tau_e = xs[k - 1] + f * (xs[k] - xs[k - 1]);
            // i0 was read at the first point rather than at τ = 0
            t2 = 4.0 * (tau_e - xs[0]).max(0.25 * tau_e);
            break;
        }
    }
    if !t2.is_finite() || t2 <= 0.0 {
        // log-linear slope through the positive points
        let pts: Vec<(f64, f64)> = xs
            .iter()
            .zip(&ys)
            .filter(|(_, &v)| v > 0.0 && i0 > 0.0)
            .map(|(&a, &b)| (a, (b / i0).ln()))
            .collect();
        let slope = line_fit(&pts).1;
        t2 = if slope < 0.0 {
            -4.0 / slope
        } else {
            4.0 * xs[xs.len() - 1].max(f64::MIN_POSITIVE)
        };
    }
    let i0 = i0 * (4.0 * xs[0] / t2).exp();
    vec![i0, t2, 1.0]
}

/// Least-squares line (intercept, slope).
fn line_fit(pts: &[(f64, f64)]) -> (f64, f64) {
    let n = pts.len() as f64;
    if pts.is_empty() {
        return (0.0, 0.0);
    }
    let mx = pts.iter().map(|p| p.0).sum::<f64>() / n;
    let my = pts.iter().map(|p| p.1).sum::<f64>() / n;
    let sxx: f64 = pts.iter().map(|p| (p.0 - mx).powi(2)).sum();
    let sxy: f64 = pts.iter().map(|p| (p.0 - mx) * (p.1 - my)).sum();
    let slope = if sxx > 0.0 { sxy / sxx } else { 0.0 };
    (my - slope * mx, slope)
}

fn init_line(x: &[f64], y: &[f64]) -> Vec<f64> {
    let pts: Vec<(f64, f64)> = x.iter().copied().zip(y.iter().copied()).collect();
    let (a, b) = line_fit(&pts);
    vec![a, b]
}

fn init_lorentzian(x: &[f64], y: &[f64]) -> Vec<f64> {
    let (xs, ys) = sorted(x, y);
    let n = xs.len();
    let offset = 0.5 * (ys[0] + ys[n - 1]);
    let dev: Vec<f64> = ys.iter().map(|v| (v - offset).abs()).collect();
    let k = argmax(&dev);
    let amp = ys[k] - offset;
    let half = offset + 0.5 * amp;
    let crosses = |range: &mut dyn Iterator<Item = usize>| -> Option<f64> {
        let mut prev = k;
        for j in range {
            if (ys[j] - half) * (ys[prev] - half) <= 0.0 && ys[j] != ys[prev] {
                let f = (ys[prev] - half) / (ys[prev] - ys[j]);
                return Some(xs[prev] + f * (xs[j] - xs[prev]));
            }
            prev = j;
        }
        None
    };
    let left = crosses(&mut (0..k).rev());
    let right = crosses(&mut (k + 1..n));
    let span = xs[n - 1] - xs[0];
    let fwhm = match (left, right) {
        (Some(l), Some(r)) => r - l,
        (Some(l), None) => 2.0 * (xs[k] - l),
        (None, Some(r)) => 2.0 * (r - xs[k]),
        (None, None) => 0.1 * span,
    };
    let fwhm = if fwhm > 0.0 { fwhm } else { 0.1 * span };
    vec![xs[k], fwhm, amp, offset]
}

/// Amplitudes (a_inf, a_short, a_long) by linear least squares at fixed
/// time constants, with the residual sum of squares.
fn recovery_amplitudes(x: &[f64], y: &[f64], ts: f64, tl: f64) -> Option<(Vec<f64>, f64)> {
    let n = x.len();
    let a = DMatrix::from_fn(n, 3, |i, j| match j {
        0 => 1.0,
        1 => -(-x[i] / ts).exp(),
        _ => -(-x[i] / tl).exp(),
    });
    let b = DVector::from_column_slice(y);
    let svd = a.clone().svd(true, true);
    let sol = svd.solve(&b, 1e-12).ok()?;
    let rss = (&a * &sol - &b).norm_squared();
    Some((sol.iter().copied().collect(), rss))
}

fn init_recovery(x: &[f64], y: &[f64]) -> Vec<Vec<f64>> {
    let positive: Vec<f64> = x.iter().copied().filter(|&v| v > 0.0).collect();
    let (lo, hi) = min_max(&positive);
    let (lo, hi) = if lo.is_finite() && hi > lo {
        (0.3 * lo, 3.0 * hi)
    } else {
        (1e-3, 1.0)
    };
    let grid: Vec<f64> = (0..16)
        .map(|i| lo * (hi / lo).powf(i as f64 / 15.0))
        .collect();
    let mut cands: Vec<(f64, Vec<f64>)> = vec![];
    for (i, &ts) in grid.iter().enumerate() {
        for &tl in &grid[i + 1..] {
            if let Some((amp, rss)) = recovery_amplitudes(x, y, ts, tl) {
                cands.push((rss, vec![amp[0], amp[1], ts, amp[2], tl]));
            }
        }
    }
    cands.sort_by(|a, b| a.0.total_cmp(&b.0));
    let mut out: Vec<Vec<f64>> = cands.into_iter().take(3).map(|c| c.1).collect();
    if out.is_empty() {
        let (ylo, yhi) = min_max(y);
        out.push(vec![yhi, 0.5 * (yhi - ylo), lo, 0.5 * (yhi - ylo), hi]);
    }
    out
}

/// Mean of cos²θ under the kernel, the curvature of A at zero phase.
fn cos2_mean(kernel: DipoleKernel) -> f64 {
    match kernel {
        DipoleKernel::Sin4 => 1.0 / 6.0,
        DipoleKernel::Cos4 => 5.0 / 6.0,
        DipoleKernel::Isotropic => 1.0 / 3.0,
    }
}

fn init_stark(kernel: &StarkKernel, x: &[f64], y: &[f64]) -> Vec<Vec<f64>> {
    let (xs, ys) = sorted(x, y);
    let a0 = ys[0];
    let xmax = xs[xs.len() - 1];
    if a0 == 0.0 || xmax <= 0.0 {
        return vec![vec![0.0, a0]];
    }
    // phase scale from the deepest relative drop
    let mut k_guess = 0.0;
    let drop = ys
        .iter()
        .zip(&xs)
        .map(|(v, &xv)| (1.0 - v / a0, xv))
        .fold((0.0f64, 0.0f64), |acc, d| if d.0 > acc.0 { d } else { acc });
    if drop.0 > 0.0 && drop.1 > 0.0 {
        let phase = if drop.0 < 0.5 {
            (2.0 * drop.0 / cos2_mean(kernel.kernel)).sqrt()
        } else {
            2.0
        };
        k_guess = phase / (TAU * drop.1);
    }
    if k_guess <= 0.0 {
        return vec![vec![0.0, a0]];
    }
    // scan k with a0 projected out, keep the best few
    let mut scored: Vec<(f64, f64, f64)> = (0..48)
        .map(|i| {
            let k = k_guess * 16f64.powf(i as f64 / 47.0 * 2.0 - 1.0);
            let basis: Vec<f64> = xs
                .iter()
                .map(|&xv| stark_amplitude_at_phase(TAU * k * xv, kernel))
                .collect();
            let sbb: f64 = basis.iter().map(|b| b * b).sum();
            let sby: f64 = basis.iter().zip(&ys).map(|(b, v)| b * v).sum();
            let amp = if sbb > 0.0 { sby / sbb } else { a0 };
            let rss: f64 = basis
                .iter()
                .zip(&ys)
                .map(|(b, v)| (v - amp * b).powi(2))
                .sum();
            (rss, k, amp)
        })
        .collect();
    scored.sort_by(|a, b| a.0.total_cmp(&b.0));
    let mut out: Vec<Vec<f64>> = scored.iter().take(3).map(|s| vec![s.1, s.2]).collect();
    out.push(vec![0.0, a0]);
    out
}
