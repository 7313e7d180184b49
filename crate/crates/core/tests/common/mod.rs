#![allow(dead_code)]

use photon_echo::fit::ModelSpec;
use photon_echo::units::Unit;
use photon_echo::{Axis, SweepCurve};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};

pub fn curve(xu: Unit, x: Vec<f64>, yu: Unit, y: Vec<f64>) -> SweepCurve {
    SweepCurve::new(Axis::new("x", xu, x), Axis::new("y", yu, y))
}

pub fn linspace(a: f64, b: f64, n: usize) -> Vec<f64> {
    (0..n).map(|k| a + (b - a) * k as f64 / (n - 1) as f64).collect()
}

pub fn logspace(a: f64, b: f64, n: usize) -> Vec<f64> {
    linspace(a.ln(), b.ln(), n).into_iter().map(f64::exp).collect()
}

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

/// y·(1 + rel·z)
pub fn multiplicative(y: &[f64], rel: f64, rng: &mut ChaCha8Rng) -> Vec<f64> {
    y.iter()
        .map(|v| {
            let z: f64 = StandardNormal.sample(rng);
            v * (1.0 + rel * z)
        })
        .collect()
}

/// y + sd·z
pub fn additive(y: &[f64], sd: f64, rng: &mut ChaCha8Rng) -> Vec<f64> {
    y.iter()
        .map(|v| {
            let z: f64 = StandardNormal.sample(rng);
            v + sd * z
        })
        .collect()
}

pub fn rel_err(a: f64, b: f64) -> f64 {
    (a - b).abs() / b.abs()
}

/// Representative parameters, abscissa grid and units for a registry model.
pub struct Case {
    pub model: ModelSpec,
    pub params: Vec<f64>,
    pub x: Vec<f64>,
    pub xu: Unit,
}

pub fn cases() -> Vec<Case> {
    let sd_grid = logspace(1e-4, 1.0, 16);
    vec![
        Case {
            model: ModelSpec::by_id("echo_decay").unwrap(),
            params: vec![2.0, 9.7e-6, 1.0],
            x: linspace(0.2e-6, 8e-6, 20),
            xu: Unit::Second,
        },
        Case {
            model: ModelSpec::by_id("spectral_diffusion").unwrap().with_t0(1e-4),
            params: vec![6.2e3, 42.8e3, 300.0, 1.4e3],
            x: sd_grid.clone(),
            xu: Unit::Second,
        },
        Case {
            model: ModelSpec::by_id("sd_tls_only").unwrap().with_t0(1e-4),
            params: vec![6.2e3, 1.4e3],
            x: sd_grid.clone(),
            xu: Unit::Second,
        },
        Case {
            model: ModelSpec::by_id("sd_bath_only").unwrap().with_t0(1e-4),
            params: vec![6.2e3, 42.8e3, 300.0],
            x: sd_grid,
            xu: Unit::Second,
        },
        Case {
            model: ModelSpec::by_id("recovery_2exp").unwrap(),
            params: vec![1.0, -0.4, 9.4e-3, -0.5, 0.53],
            x: logspace(1e-3, 4.0, 30),
            xu: Unit::Second,
        },
        Case {
            model: ModelSpec::by_id("lorentzian").unwrap(),
            params: vec![1532.8e-9, 0.28e-9, 1.0, 0.05],
            x: linspace(1531.8e-9, 1533.8e-9, 41),
            xu: Unit::Metre,
        },
        Case {
            model: ModelSpec::by_id("linear_broadening").unwrap(),
            params: vec![33e3, 111e3],
            x: linspace(0.1, 1.0, 10),
            xu: Unit::Kelvin,
        },
        Case {
            model: ModelSpec::by_id("stark_sin4").unwrap(),
            params: vec![58.0, 1.0],
            x: linspace(0.0, 0.03, 25),
            xu: Unit::VoltSecondPerMetre,
        },
        Case {
            model: ModelSpec::by_id("stark_cos4").unwrap(),
            params: vec![58.0, 1.0],
            x: linspace(0.0, 0.03, 25),
            xu: Unit::VoltSecondPerMetre,
        },
    ]
}
