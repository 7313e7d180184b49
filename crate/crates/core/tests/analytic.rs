use std::f64::consts::{FRAC_PI_2, PI, TAU};

use photon_echo::analytic::*;
use photon_echo::quadrature::GaussLegendre;
use photon_echo::{DephasingParams, DipoleKernel};
use proptest::prelude::*;

fn kernel() -> impl Strategy<Value = StarkKernel> {
    prop_oneof![Just(StarkKernel::sin4()), Just(StarkKernel::cos4())]
}

/// Fixed-order rule, independent of the library's adaptive escalation.
fn fixed_order_amplitude(phase: f64, k: &StarkKernel, order: usize) -> f64 {
    let w = k.kernel;
    GaussLegendre::new(order).integrate(0.0, FRAC_PI_2, |t| (phase * t.cos()).cos() * w.weight(t))
        / w.analytic_normalization()
}

#[test]
fn stark_amplitude_is_one_at_zero_area() {
    for k in [StarkKernel::sin4(), StarkKernel::cos4()] {
        assert_eq!(stark_echo_amplitude(0.0, 58.0, &k).unwrap(), 1.0);
        assert_eq!(stark_amplitude_at_phase(0.0, &k), 1.0);
    }
    assert!(stark_echo_amplitude(-1e-3, 58.0, &StarkKernel::sin4()).is_err());
}

#[test]
fn kernel_normalizations_match_closed_forms() {
    for k in [DipoleKernel::Sin4, DipoleKernel::Cos4, DipoleKernel::Isotropic] {
        let sk = StarkKernel::new(k);
        assert!((sk.normalization - k.analytic_normalization()).abs() < 1e-14);
    }
    assert!((DipoleKernel::Sin4.analytic_normalization() - 3.0 * PI / 16.0).abs() < 1e-15);
}

#[test]
fn quadrature_converges_up_to_a_thousand_radians() {
    for k in [StarkKernel::sin4(), StarkKernel::cos4()] {
        for phase in [0.3, 7.0, 55.5, 240.0, 999.0] {
            let lib = stark_amplitude_at_phase(phase, &k);
            let n = 64 + 2 * phase as usize;
            let a = fixed_order_amplitude(phase, &k, n);
            let b = fixed_order_amplitude(phase, &k, 2 * n);
            assert!((a - b).abs() < 1e-9, "order doubling moved {phase}: {a} vs {b}");
            assert!((lib - b).abs() < 1e-9, "phase {phase}: {lib} vs {b}");
        }
    }
}

proptest! {
    #[test]
    fn stark_amplitude_even_and_bounded(phase in 0.0f64..1000.0, k in kernel()) {
        let a = stark_amplitude_at_phase(phase, &k);
        prop_assert!(a.abs() <= 1.0);
        prop_assert_eq!(a, stark_amplitude_at_phase(-phase, &k));
    }

    #[test]
    fn stark_amplitude_is_lipschitz(phase in 0.0f64..200.0, k in kernel()) {
        // |dA/dφ| ≤ max cosθ = 1
        let d = 1e-6;
        let a = stark_amplitude_at_phase(phase, &k);
        let b = stark_amplitude_at_phase(phase + d, &k);
        prop_assert!((a - b).abs() <= d + 2e-9);
    }

    #[test]
    fn stark_depends_on_k_times_area(area in 0.0f64..0.05, k in 1.0f64..200.0, c in 0.1f64..10.0) {
        let kern = StarkKernel::sin4();
        let a = stark_echo_amplitude(area, k, &kern).unwrap();
        let b = stark_echo_amplitude(area * c, k / c, &kern).unwrap();
        prop_assert!((a - b).abs() < 1e-9);
    }

    #[test]
    fn linewidth_times_pi_t2_is_one(log_t2 in (1e-9f64).ln()..0.0) {
        let t2 = log_t2.exp();
        let g = homogeneous_linewidth(t2).unwrap();
        prop_assert!((g * PI * t2 - 1.0).abs() < 1e-12);
    }

    #[test]
    fn exponential_decay_factorizes(t1 in 0.0f64..2e-5, t2 in 0.0f64..2e-5, i0 in 0.1f64..10.0) {
        let t = 9.7e-6;
        let lhs = echo_decay(t1 + t2, i0, t, 1.0).unwrap() * i0;
        let rhs = echo_decay(t1, i0, t, 1.0).unwrap() * echo_decay(t2, i0, t, 1.0).unwrap();
        prop_assert!((lhs - rhs).abs() <= 1e-12 * lhs.abs());
    }

    #[test]
    fn effective_linewidth_monotone(
        g0 in 0.0f64..1e5,
        gsd in 0.0f64..1e6,
        r in 0.0f64..1e4,
        gtls in 0.0f64..1e5,
        a in 0.0f64..10.0,
        b in 0.0f64..10.0,
    ) {
        let t0 = 1e-4;
        let p = DephasingParams { gamma0: g0, gamma_sd: gsd, rate_r: r, gamma_tls: gtls, t0 };
        let (lo, hi) = if a < b { (a, b) } else { (b, a) };
        let (lo, hi) = (t0 * (1.0 + lo).powi(3), t0 * (1.0 + hi).powi(3));
        prop_assert!(effective_linewidth(&p, lo).unwrap() <= effective_linewidth(&p, hi).unwrap());
    }

    #[test]
    fn paramagnetic_term_saturates(g0 in 0.0f64..1e5, gsd in 0.0f64..1e6, r in 1.0f64..1e4) {
        let p = DephasingParams { gamma0: g0, gamma_sd: gsd, rate_r: r, gamma_tls: 0.0, t0: 1e-4 };
        let far = effective_linewidth(&p, 1e3 / r).unwrap();
        prop_assert!((far - (g0 + gsd / 2.0)).abs() <= 1e-12 * far.max(1.0));
        prop_assert_eq!(paramagnetic_asymptote(&p), g0 + gsd / 2.0);
    }
}

#[test]
fn chip1h_effective_linewidth_at_one_millisecond() {
    let g = effective_linewidth(&DephasingParams::chip1h(1e-4), 1e-3).unwrap();
    // γ₀ + γ_SD/2·(1 − e^{−0.27}) + γ_TLS·ln 10
    let oracle = 26.3e3 + 0.5 * 1347e3 * (1.0 - (-0.27f64).exp()) + 15.8e3 * 10f64.ln();
    assert!((g - oracle).abs() < 1e-6 * oracle);
    assert!((g / 215e3 - 1.0).abs() < 0.15, "{g}");
    assert!(effective_linewidth(&DephasingParams::chip1h(1e-4), 5e-5).is_err());
}

#[test]
fn efficiency_forms() {
    let e = echo_efficiency_from_od(0.0155).unwrap();
    assert!((e.paper_approx - 1.5016e-5).abs() < 1e-8);
    assert!((e.exact / 2.4025e-4 - 1.0).abs() < 1e-3);
    assert_eq!(e.get(EfficiencyForm::PaperApprox), e.paper_approx);
    for od in [1e-2, 1e-4, 1e-6] {
        let e = echo_efficiency_from_od(od).unwrap();
        let ratio = e.exact / e.paper_approx;
        assert!((ratio - 16.0).abs() < 16.0 * od, "od {od}: ratio {ratio}");
    }
    let od = od_from_efficiency(1.5e-5, EfficiencyForm::PaperApprox).unwrap();
    assert!((od - 0.0155).abs() < 1e-3);
    for od in [1e-3, 0.5, 3.0] {
        let eta = echo_efficiency_from_od(od).unwrap().exact;
        if eta < 1.0 {
            let back = od_from_efficiency(eta, EfficiencyForm::Exact).unwrap();
            assert!((back - od).abs() < 1e-12 * od.max(1.0));
        }
    }
    assert!(echo_efficiency_from_od(-0.1).is_err());
    assert!(od_from_efficiency(1.0, EfficiencyForm::Exact).is_err());
}

#[test]
fn extinction_examples() {
    // 40 V/cm with the Sin4 kernel: 90% extinction near 3 µs
    let t = stark_extinction_time(4e3, 58.0, &StarkKernel::sin4(), 0.9, DEFAULT_MAX_STARK_AREA).unwrap();
    assert!((t / 3e-6 - 1.0).abs() < 0.2, "{t}");
    let a = stark_echo_amplitude(t * 4e3, 58.0, &StarkKernel::sin4()).unwrap();
    assert!((a.abs() - 0.1).abs() < 1e-6);
    // 500 V/cm, Cos4, first zero
    let t = stark_extinction_time(5e4, 58.0, &StarkKernel::cos4(), 1.0, DEFAULT_MAX_STARK_AREA).unwrap();
    assert!((t / 95e-9 - 1.0).abs() < 0.2, "{t}");
    let phase = TAU * 58.0 * 5e4 * t;
    assert!(stark_amplitude_at_phase(phase, &StarkKernel::cos4()).abs() < 1e-6);
}
