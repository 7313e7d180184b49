//! Acceptance suite: one PASS/FAIL line per criterion, non-zero exit on any failure.

use std::collections::BTreeMap;
use std::path::Path;
use std::process::{Command, ExitCode};
use std::time::{Duration, Instant};

use photon_echo::analytic::{
    double_exp_recovery, effective_linewidth, homogeneous_linewidth, lorentzian, od_from_efficiency,
    paramagnetic_asymptote, stark_echo_amplitude, stark_extinction_time, EfficiencyForm, StarkKernel,
};
use photon_echo::fit::{
    fit, fit_echo_decay, fit_linear_broadening, fit_lorentzian_peak, fit_recovery, fit_spectral_diffusion,
    fit_stark_modulation, fit_submodels, FitOptions, ModelSpec, MODEL_IDS,
};
use photon_echo::metrics::{scale_od, DeviceGeometry};
use photon_echo::sim::{
    simulate_with_diagnostics, stark_gated_echo, three_pulse_sweep, two_pulse_decay, SimConfig,
};
use photon_echo::units::Unit;
use photon_echo::{Axis, DephasingParams, DipoleKernel, EnsembleSpec, PulseSequence, SweepCurve};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};

type Check = Result<Vec<String>, String>;

fn ensure(cond: bool, msg: impl FnOnce() -> String) -> Result<(), String> {
    if cond {
        Ok(())
    } else {
        Err(msg())
    }
}

fn rel_err(a: f64, b: f64) -> f64 {
    (a - b).abs() / b.abs()
}

fn linspace(a: f64, b: f64, n: usize) -> Vec<f64> {
    (0..n).map(|k| a + (b - a) * k as f64 / (n - 1) as f64).collect()
}

fn logspace(a: f64, b: f64, n: usize) -> Vec<f64> {
    linspace(a.ln(), b.ln(), n).into_iter().map(f64::exp).collect()
}

fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

fn multiplicative(y: &[f64], rel: f64, r: &mut ChaCha8Rng) -> Vec<f64> {
    y.iter()
        .map(|v| {
            let z: f64 = StandardNormal.sample(r);
            v * (1.0 + rel * z)
        })
        .collect()
}

fn additive(y: &[f64], sd: f64, r: &mut ChaCha8Rng) -> Vec<f64> {
    y.iter()
        .map(|v| {
            let z: f64 = StandardNormal.sample(r);
            v + sd * z
        })
        .collect()
}

fn curve(xu: Unit, x: Vec<f64>, yu: Unit, y: Vec<f64>) -> SweepCurve {
    SweepCurve::new(Axis::new("x", xu, x), Axis::new("y", yu, y))
}

fn e<T: std::fmt::Display>(err: T) -> String {
    err.to_string()
}

fn criterion_1() -> Check {
    let mut out = vec![];
    for (t2, want, tol) in [(9.7e-6, 32.8e3, 0.5e3), (64.1e-6, 5.0e3, 0.1e3)] {
        let g = homogeneous_linewidth(t2).map_err(e)?;
        ensure((g - want).abs() <= tol, || format!("T2 {t2:e} s gives {g:.1} Hz, want {want} ± {tol}"))?;
        out.push(format!("T2 = {:.1} µs -> {:.2} kHz", t2 * 1e6, g / 1e3));
    }
    Ok(out)
}

fn criterion_2() -> Check {
    let g = effective_linewidth(&DephasingParams::chip1h(1e-4), 1e-3).map_err(e)?;
    ensure(rel_err(g, 215e3) <= 0.15, || format!("chip1h at 1 ms: {g:.0} Hz, want 215 kHz ± 15%"))?;
    let p = DephasingParams::chip3h(1e-4);
    let asym = paramagnetic_asymptote(&p);
    let exact = p.gamma0 + p.gamma_sd / 2.0;
    ensure(asym == exact, || format!("asymptote {asym} != γ0 + γSD/2 = {exact}"))?;
    ensure((asym - 27.6e3).abs() < 1e-6, || format!("chip3h asymptote {asym} Hz, want 27.6 kHz"))?;
    Ok(vec![
        format!("chip1h Γ_eff(1 ms) = {:.1} kHz", g / 1e3),
        format!("chip3h asymptote = {:.3} kHz", asym / 1e3),
    ])
}

fn criterion_3() -> Check {
    // 120 V·µs/cm = 1.2e-2 V·s/m, k = 58 Hz/(V/m)
    let a = stark_echo_amplitude(1.2e-2, 58.0, &StarkKernel::sin4()).map_err(e)?;
    ensure((0.05..=0.15).contains(&a), || format!("Sin4 amplitude {a:.4} outside [0.05, 0.15]"))?;
    let t = stark_extinction_time(5e4, 58.0, &StarkKernel::cos4(), 1.0, 1.0).map_err(e)?;
    ensure(rel_err(t, 95e-9) <= 0.2, || format!("Cos4 first zero at {t:e} s, want 95 ns ± 20%"))?;
    Ok(vec![
        format!("Sin4 amplitude at 120 V·µs/cm = {a:.4}"),
        format!("Cos4 first zero at 500 V/cm = {:.1} ns", t * 1e9),
    ])
}

fn criterion_4() -> Check {
    let od = od_from_efficiency(1.5e-5, EfficiencyForm::PaperApprox).map_err(e)?;
    ensure((od - 0.0155).abs() <= 0.001, || format!("OD {od:.5}, want 0.0155 ± 0.001"))?;
    let target = scale_od(od, &DeviceGeometry::measured(), &DeviceGeometry::projected()).map_err(e)?;
    ensure(target >= 1.0, || format!("projected OD {target:.3} < 1"))?;
    Ok(vec![format!("OD = {od:.5}, projected OD = {target:.3}")])
}

fn sim_cfg(n: usize, seed: u64) -> SimConfig {
    SimConfig {
        n_ions: n,
        seed,
        ..SimConfig::default()
    }
}

fn timed(label: &str, limit: Duration, f: impl FnOnce() -> Result<String, String>) -> Result<String, String> {
    let start = Instant::now();
    let detail = f()?;
    let took = start.elapsed();
    ensure(took <= limit, || format!("{label}: took {:.1} s, limit {} s", took.as_secs_f64(), limit.as_secs()))?;
    Ok(format!("{label}: {detail} ({:.1} s)", took.as_secs_f64()))
}

fn criterion_5() -> Check {
    let limit = Duration::from_secs(60);
    let a = timed("5a", limit, || {
        let mut spec = EnsembleSpec::chip1h();
        spec.bath = None;
        let taus = linspace(0.5e-6, 10e-6, 20);
        let data = two_pulse_decay(&spec, &sim_cfg(100_000, 51), &taus).map_err(e)?;
        let t2 = fit_echo_decay(&data, false).map_err(e)?.get("t2").ok_or("no t2")?;
        ensure(rel_err(t2, spec.t2_optical) < 0.05, || format!("refit T2 {t2:e}, want {:e} ± 5%", spec.t2_optical))?;
        Ok(format!("refit T2 = {:.3} µs vs {:.3} µs", t2 * 1e6, spec.t2_optical * 1e6))
    })?;
    let b = timed("5b", limit, || {
        let spec = EnsembleSpec::chip3h();
        let mut params = spec.dephasing_params();
        // the simulator has no TLS term, so compare with the paramagnetic part
        params.gamma_tls = 0.0;
        let r = params.rate_r;
        let tws: Vec<f64> = [0.1, 0.3, 1.0, 3.0, 10.0].iter().map(|m| m / r).collect();
        let taus = linspace(1.5e-6, 18e-6, 12);
        let pts = three_pulse_sweep(&spec, &sim_cfg(20_000, 52), &taus, &tws).map_err(e)?;
        let mut worst = 0.0f64;
        for p in &pts {
            let want = effective_linewidth(&params, p.t_wait).map_err(e)?;
            let d = rel_err(p.gamma_eff, want);
            worst = worst.max(d);
            ensure(d < 0.1, || {
                format!("T_W = {:e} s: Γ_eff {:.0} Hz vs analytic {want:.0} Hz", p.t_wait, p.gamma_eff)
            })?;
        }
        Ok(format!("5 waiting times over 0.1/R..10/R, worst deviation {:.1}%", worst * 100.0))
    })?;
    let c = timed("5c", limit, || {
        let spec = EnsembleSpec::chip3h();
        let lens = linspace(0.0, 3e-6, 20);
        let field = 4e3;
        let data = stark_gated_echo(&spec, &sim_cfg(20_000, 53), &lens, field).map_err(e)?;
        let sigma = data.sigma.clone().ok_or("no standard errors")?;
        let kernel = StarkKernel::new(spec.dipole_kernel);
        let mut worst = 0.0f64;
        for (k, &len) in lens.iter().enumerate() {
            let want = stark_echo_amplitude(field * len, spec.stark_k, &kernel).map_err(e)?;
            let dev = (data.y()[k] - want).abs();
            if sigma[k] > 0.0 {
                worst = worst.max(dev / sigma[k]);
            }
            ensure(dev <= 3.0 * sigma[k] + 1e-12, || {
                format!("t = {len:e} s: {} vs {want} (σ {})", data.y()[k], sigma[k])
            })?;
        }
        Ok(format!("20 pulse lengths, worst deviation {worst:.2} σ"))
    })?;
    Ok(vec![a, b, c])
}

/// Representative parameters and grid for each registry model.
fn cases() -> Vec<(ModelSpec, Vec<f64>, Vec<f64>, Unit)> {
    let sd = logspace(1e-4, 1.0, 16);
    let m = |id: &str| ModelSpec::by_id(id).expect("registry id");
    vec![
        (m("echo_decay"), vec![2.0, 9.7e-6, 1.0], linspace(0.2e-6, 8e-6, 20), Unit::Second),
        (m("spectral_diffusion").with_t0(1e-4), vec![6.2e3, 42.8e3, 300.0, 1.4e3], sd.clone(), Unit::Second),
        (m("sd_tls_only").with_t0(1e-4), vec![6.2e3, 1.4e3], sd.clone(), Unit::Second),
        (m("sd_bath_only").with_t0(1e-4), vec![6.2e3, 42.8e3, 300.0], sd, Unit::Second),
        (m("recovery_2exp"), vec![1.0, -0.4, 9.4e-3, -0.5, 0.53], logspace(1e-3, 4.0, 30), Unit::Second),
        (m("lorentzian"), vec![1532.8e-9, 0.28e-9, 1.0, 0.05], linspace(1531.8e-9, 1533.8e-9, 41), Unit::Metre),
        (m("linear_broadening"), vec![33e3, 111e3], linspace(0.1, 1.0, 10), Unit::Kelvin),
        (m("stark_sin4"), vec![58.0, 1.0], linspace(0.0, 0.03, 25), Unit::VoltSecondPerMetre),
        (m("stark_cos4"), vec![58.0, 1.0], linspace(0.0, 0.03, 25), Unit::VoltSecondPerMetre),
    ]
}

fn criterion_6() -> Check {
    let mut out = vec![];
    let all = cases();
    let ids: Vec<&str> = all.iter().map(|c| c.0.id).collect();
    ensure(ids == MODEL_IDS.to_vec(), || format!("cases {ids:?} do not cover the registry"))?;
    let mut worst = 0.0f64;
    for (model, p, x, xu) in &all {
        let data = curve(*xu, x.clone(), Unit::Arbitrary, model.evaluate_many(x, p));
        let res = fit(&data, model, &FitOptions::default()).map_err(e)?;
        ensure(res.converged, || format!("{}: not converged ({:?})", model.id, res.diagnostic))?;
        for (j, (&got, &want)) in res.params.iter().zip(p).enumerate() {
            let d = rel_err(got, want);
            worst = worst.max(d);
            ensure(d < 1e-6, || format!("{} {}: {got:e} vs {want:e}", model.id, model.params[j].name))?;
        }
    }
    out.push(format!("zero noise: {} models, worst relative error {worst:.1e}", all.len()));

    // two-pulse decay: 874 ns, 9.7 µs and 64.1 µs within 5%
    for (seed, t2) in [(1, 874e-9), (2, 9.7e-6), (3, 64.1e-6)] {
        let tau = linspace(0.02 * t2, 0.75 * t2, 20);
        let clean: Vec<f64> = tau.iter().map(|t| (-4.0 * t / t2).exp()).collect();
        let y = multiplicative(&clean, 0.05, &mut rng(seed));
        let got = fit_echo_decay(&curve(Unit::Second, tau, Unit::Arbitrary, y), false)
            .map_err(e)?
            .get("t2")
            .ok_or("no t2")?;
        ensure(rel_err(got, t2) < 0.05, || format!("echo_decay T2 {t2:e}: got {got:e}"))?;
    }
    out.push("5% noise echo_decay: 874 ns, 9.7 µs, 64.1 µs within 5%".into());

    // spectral diffusion: within 20% or the 95% interval in >= 85% of draws
    for (label, truth) in [("chip1h", DephasingParams::chip1h(1e-4)), ("chip3h", DephasingParams::chip3h(1e-4))] {
        let tw = logspace(1e-4, 0.1, 10);
        let clean: Vec<f64> = tw.iter().map(|&t| effective_linewidth(&truth, t).unwrap()).collect();
        let want = [
            ("gamma0", truth.gamma0),
            ("gamma_sd", truth.gamma_sd),
            ("rate_r", truth.rate_r),
            ("gamma_tls", truth.gamma_tls),
        ];
        let trials = 100;
        let mut pass = [0usize; 4];
        for seed in 0..trials {
            let y = multiplicative(&clean, 0.05, &mut rng(100 + seed));
            let sigma = clean.iter().map(|v| 0.05 * v).collect();
            let data = curve(Unit::Second, tw.clone(), Unit::Hertz, y).with_sigma(sigma);
            let res = fit_spectral_diffusion(&data, Some(1e-4)).map_err(e)?;
            for (k, (name, v)) in want.iter().enumerate() {
                let got = res.get(name).ok_or("missing parameter")?;
                let se = res.stderr(name).unwrap_or(f64::INFINITY);
                if rel_err(got, *v) < 0.2 || (got - v).abs() <= 1.96 * se {
                    pass[k] += 1;
                }
            }
        }
        for (k, (name, _)) in want.iter().enumerate() {
            ensure(pass[k] * 100 >= 85 * trials as usize, || {
                format!("spectral_diffusion {label} {name}: {}/{trials} draws", pass[k])
            })?;
        }
        out.push(format!("5% noise spectral_diffusion {label}: per-parameter pass {pass:?}/{trials}"));
    }

    // recovery: 9.4 ms and 0.53 s within 10%
    let tw = logspace(1e-3, 4.0, 1000);
    let clean: Vec<f64> = tw
        .iter()
        .map(|&t| double_exp_recovery(t, 1.0, 0.4, 9.4e-3, 0.5, 0.53).unwrap())
        .collect();
    for seed in 0..3 {
        let y = multiplicative(&clean, 0.05, &mut rng(30 + seed));
        let res = fit_recovery(&curve(Unit::Second, tw.clone(), Unit::Arbitrary, y)).map_err(e)?;
        let (s, l) = (res.get("t1_short").unwrap(), res.get("t1_long").unwrap());
        ensure(rel_err(s, 9.4e-3) < 0.1 && rel_err(l, 0.53) < 0.1, || {
            format!("recovery seed {seed}: {s:e} / {l:e}")
        })?;
    }
    out.push("5% noise recovery_2exp: 9.4 ms / 0.53 s within 10%".into());

    // Lorentzian: 1532.8 nm / 0.28 nm within 2%
    let x = linspace(1531.8, 1533.8, 2001);
    let clean: Vec<f64> = x.iter().map(|&v| lorentzian(v, 1532.8, 0.28, 1.0, 0.05).unwrap()).collect();
    for seed in 0..3 {
        let y = multiplicative(&clean, 0.05, &mut rng(50 + seed));
        let res = fit_lorentzian_peak(&curve(Unit::Nanometre, x.clone(), Unit::Arbitrary, y)).map_err(e)?;
        let (c, w) = (res.get("center").unwrap(), res.get("fwhm").unwrap());
        ensure(rel_err(c, 1532.8e-9) < 0.02 && rel_err(w, 0.28e-9) < 0.02, || {
            format!("lorentzian seed {seed}: {c:e} / {w:e}")
        })?;
    }
    out.push("5% noise lorentzian: center and FWHM within 2%".into());

    // linear broadening: α = 111 kHz/K within 5%
    let t = linspace(0.1, 1.0, 10);
    let clean: Vec<f64> = t.iter().map(|v| 33e3 + 111e3 * v).collect();
    for seed in 0..3 {
        let y = multiplicative(&clean, 0.05, &mut rng(60 + seed));
        let a = fit_linear_broadening(&curve(Unit::Kelvin, t.clone(), Unit::Hertz, y))
            .map_err(e)?
            .get("alpha")
            .unwrap();
        ensure(rel_err(a, 111e3) < 0.05, || format!("linear_broadening seed {seed}: α = {a:e}"))?;
    }
    out.push("5% noise linear_broadening: α within 5%".into());

    // Stark: k = 58 Hz/(V/m) within 5 (±0.5 kHz/(V/cm))
    let areas = linspace(0.0, 0.015, 20);
    for kernel in [StarkKernel::sin4(), StarkKernel::cos4()] {
        let clean: Vec<f64> = areas.iter().map(|&a| stark_echo_amplitude(a, 58.0, &kernel).unwrap()).collect();
        for seed in 0..5 {
            let y = additive(&clean, 0.05, &mut rng(70 + seed));
            let k = fit_stark_modulation(&curve(Unit::VoltSecondPerMetre, areas.clone(), Unit::Dimensionless, y), &kernel)
                .map_err(e)?
                .get("k")
                .unwrap();
            ensure((k - 58.0).abs() < 5.0, || format!("stark {:?} seed {seed}: k = {k}", kernel.kernel))?;
        }
    }
    out.push("5% noise stark_sin4/stark_cos4: k within ±5 Hz/(V/m)".into());
    Ok(out)
}

fn criterion_7() -> Check {
    let full = DephasingParams::chip3h(1e-4);
    let tw = logspace(1e-4, 0.1, 12);
    let clean: Vec<f64> = tw.iter().map(|&t| effective_linewidth(&full, t).unwrap()).collect();
    let mut out = vec![];
    for seed in [21, 22, 23] {
        let y = multiplicative(&clean, 0.01, &mut rng(seed));
        let cmp = fit_submodels(&curve(Unit::Second, tw.clone(), Unit::Hertz, y), Some(1e-4)).map_err(e)?;
        let ranking = cmp.ranking();
        ensure(ranking == ["spectral_diffusion", "sd_bath_only", "sd_tls_only"], || {
            format!("seed {seed}: ranking {ranking:?}")
        })?;
        let norms: Vec<String> = cmp.entries.iter().map(|e| format!("{:.3e}", e.result.residual_norm)).collect();
        out.push(format!("seed {seed}: {} (residual norms {})", ranking.join(" < "), norms.join(", ")));
    }
    Ok(out)
}

fn read_tree(dir: &Path) -> BTreeMap<String, Vec<u8>> {
    let mut files = BTreeMap::new();
    for entry in std::fs::read_dir(dir).expect("output dir") {
        let p = entry.expect("dir entry").path();
        files.insert(p.file_name().unwrap().to_string_lossy().into_owned(), std::fs::read(&p).expect("read output"));
    }
    files
}

const SMALL_CONFIG: &str = r#"
seed = 7

[ensemble]
preset = "chip3h"

[sim]
n_ions = 2000

[[experiment]]
name = "decay"
kind = "two_pulse"
sweep = { variable = "tau", start = "2 us", stop = "40 us", points = 8 }
fit = ["echo_decay"]

[[experiment]]
name = "stark"
kind = "stark"
field = "40 V/cm"
sweep = { variable = "t_pulse", start = "0 us", stop = "3 us", points = 10 }
fit = ["stark_sin4"]
"#;

fn cli_reruns() -> Result<String, String> {
    let tmp = tempfile::tempdir().map_err(e)?;
    let config = tmp.path().join("small.toml");
    std::fs::write(&config, SMALL_CONFIG).map_err(e)?;
    let run = |name: &str| -> Result<BTreeMap<String, Vec<u8>>, String> {
        let out = tmp.path().join(name);
        let status = Command::new(env!("CARGO_BIN_EXE_pecho"))
            .arg("simulate")
            .arg("--config")
            .arg(&config)
            .arg("--out-dir")
            .arg(&out)
            .output()
            .map_err(e)?;
        ensure(status.status.success(), || {
            format!("pecho simulate failed: {}", String::from_utf8_lossy(&status.stderr))
        })?;
        Ok(read_tree(&out))
    };
    let a = run("a")?;
    let b = run("b")?;
    ensure(a.len() >= 5, || format!("only {} outputs", a.len()))?;
    ensure(a == b, || "re-run outputs differ".to_string())?;
    Ok(format!("two `pecho simulate` runs wrote {} byte-identical files", a.len()))
}

fn jacobians() -> Result<String, String> {
    let mut checked = 0;
    for (model, p0, xs, _) in cases() {
        let mut variants = vec![p0.clone()];
        if model.id == "echo_decay" {
            variants.push(vec![2.0, 9.7e-6, 1.7]);
        }
        for p in variants {
            let n = p.len();
            let mut g = vec![0.0; n];
            for &x in &xs {
                let f = model.evaluate_with_gradient(x, &p, &mut g);
                for j in 0..n {
                    let central = |h: f64| {
                        let mut up = p.clone();
                        let mut dn = p.clone();
                        up[j] += h;
                        dn[j] -= h;
                        (model.evaluate(x, &up) - model.evaluate(x, &dn)) / (2.0 * h)
                    };
                    let h = 1e-6 * p[j].abs().max(1e-12);
                    let fd = (4.0 * central(0.5 * h) - central(h)) / 3.0;
                    let scale = g[j].abs().max(f.abs() / p[j].abs().max(1e-12));
                    ensure((g[j] - fd).abs() <= 1e-6 * scale, || {
                        format!("{} d/d{} at {x:e}: {} vs {fd}", model.id, model.params[j].name, g[j])
                    })?;
                    checked += 1;
                }
            }
        }
    }
    Ok(format!("{checked} Jacobian entries within 1e-6 of finite differences"))
}

fn echo_positions() -> Result<String, String> {
    let mut r = rng(2024);
    let mut worst_norm = 0.0f64;
    for case in 0..50 {
        let mut spec = match r.random_range(0..3) {
            0 => EnsembleSpec::chip1h(),
            1 => EnsembleSpec::chip3h(),
            _ => {
                let mut s = EnsembleSpec::chip3h();
                s.bath = None;
                s
            }
        };
        let tau = r.random_range(150e-9..3e-6);
        spec.t2_optical = tau * r.random_range(2.0..50.0);
        if r.random_bool(0.5) {
            spec.dipole_kernel = DipoleKernel::Cos4;
        }
        let mut c = sim_cfg(r.random_range(1000..3000), r.random());
        c.lead = r.random_range(0.0..500e-9);
        c.pulse_duration = [16e-9, 32e-9, 48e-9][r.random_range(0..3)];
        c.time_step = c.pulse_duration / 4.0;
        c.pulse_bandwidth = 1.0 / c.pulse_duration;
        let seq = PulseSequence::two_pulse(c.lead, tau, c.pulse_duration, 4.0 * c.pulse_duration);
        let (trace, diag) = simulate_with_diagnostics(&spec, &seq, &c).map_err(e)?;
        let expected = seq.first_pulse_center().ok_or("no pulses")? + 2.0 * tau;
        let peak = trace.peak_time().ok_or("empty trace")?;
        ensure((peak - expected).abs() <= c.detection_bin + 1e-15, || {
            format!("case {case}: peak {peak:e} s, expected {expected:e} s")
        })?;
        worst_norm = worst_norm.max(diag.max_norm_change);
        ensure(diag.max_norm_change < 1e-9, || format!("case {case}: norm change {:e}", diag.max_norm_change))?;
    }
    Ok(format!("50 random configurations: echo at 2τ ± 1 bin, max Bloch norm change {worst_norm:.1e}"))
}

fn criterion_8() -> Check {
    Ok(vec![cli_reruns()?, echo_positions()?, jacobians()?])
}

fn main() -> ExitCode {
    let criteria: [(&str, fn() -> Check); 8] = [
        ("linewidth relation", criterion_1),
        ("effective linewidth", criterion_2),
        ("Stark oracle", criterion_3),
        ("optical depth bookkeeping", criterion_4),
        ("Monte Carlo vs analytic", criterion_5),
        ("fit round trips", criterion_6),
        ("model comparison", criterion_7),
        ("determinism and invariants", criterion_8),
    ];
    let mut failed = 0;
    for (k, (name, run)) in criteria.iter().enumerate() {
        let start = Instant::now();
        let outcome = std::panic::catch_unwind(run).unwrap_or_else(|p| {
            let msg = p
                .downcast_ref::<String>()
                .cloned()
                .or_else(|| p.downcast_ref::<&str>().map(|s| s.to_string()))
                .unwrap_or_else(|| "panic".into());
            Err(format!("panicked: {msg}"))
        });
        let secs = start.elapsed().as_secs_f64();
        match outcome {
            Ok(details) => {
                println!("criterion {}: PASS {name} ({secs:.1} s)", k + 1);
                for d in details {
                    println!("    {d}");
                }
            }
            Err(why) => {
                failed += 1;
                println!("criterion {}: FAIL {name} ({secs:.1} s): {why}", k + 1);
            }
        }
    }
    if failed == 0 {
        println!("acceptance: all 8 criteria passed");
        ExitCode::SUCCESS
    } else {
        println!("acceptance: {failed} of 8 criteria failed");
        ExitCode::FAILURE
    }
}
