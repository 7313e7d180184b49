//! Gauss–Legendre quadrature with order doubling.

use std::sync::OnceLock;

/// Nodes and weights on [-1, 1].
#[derive(Debug, Clone)]
pub struct GaussLegendre {
    nodes: Vec<f64>,
    weights: Vec<f64>,
}

impl GaussLegendre {
    /// Computes an `n`-point rule by Newton iteration on P_n.
    pub fn new(n: usize) -> Self {
        assert!(n >= 1, "quadrature order must be positive");
        let mut nodes = vec![0.0; n];
        let mut weights = vec![0.0; n];
        let m = n.div_ceil(2);
        for i in 0..m {
            let mut x = (std::f64::consts::PI * (i as f64 + 0.75) / (n as f64 + 0.5)).cos();
            let mut dp = 0.0;
            for _ in 0..100 {
                let (p, d) = legendre(n, x);
                dp = d;
                let dx = p / d;
                x -= dx;
                if dx.abs() <= 1e-16 * x.abs().max(1.0) {
                    break;
                }
            }
            let (_, d) = legendre(n, x);
            if d != 0.0 {
                dp = d;
            }
            let w = 2.0 / ((1.0 - x * x) * dp * dp);
            nodes[i] = -x;
            nodes[n - 1 - i] = x;
            weights[i] = w;
            weights[n - 1 - i] = w;
        }
        if n % 2 == 1 {
            nodes[n / 2] = 0.0;
        }
        Self { nodes, weights }
    }

    pub fn order(&self) -> usize {
        self.nodes.len()
    }

    pub fn nodes(&self) -> &[f64] {
        &self.nodes
    }

    pub fn weights(&self) -> &[f64] {
        &self.weights
    }

    /// ∫_a^b f(x) dx.
    pub fn integrate<F: FnMut(f64) -> f64>(&self, a: f64, b: f64, mut f: F) -> f64 {
        let half = 0.5 * (b - a);
        let mid = 0.5 * (a + b);
        let mut acc = 0.0;
        for (x, w) in self.nodes.iter().zip(&self.weights) {
            acc += w * f(mid + half * x);
        }
        acc * half
    }
}

/// (P_n(x), P_n'(x)) by the three-term recurrence.
fn legendre(n: usize, x: f64) -> (f64, f64) {
    let mut p0 = 1.0;
    let mut p1 = x;
    for k in 2..=n {
        let kf = k as f64;
        let p2 = ((2.0 * kf - 1.0) * x * p1 - (kf - 1.0) * p0) / kf;
        p0 = p1;
        p1 = p2;
    }
    if n == 0 {
        return (1.0, 0.0);
    }
    let d = n as f64 * (x * p1 - p0) / (x * x - 1.0);
    (p1, d)
}

/// Smallest cached order; cached orders are `BASE_ORDER · 2^k`.
pub const BASE_ORDER: usize = 16;
/// Number of cached doublings (16 … 8192 points).
pub const LEVELS: usize = 10;

static RULES: [OnceLock<GaussLegendre>; LEVELS] = [const { OnceLock::new() }; LEVELS];

/// Rule with `BASE_ORDER << level` points, computed once per process.
pub fn rule(level: usize) -> &'static GaussLegendre {
    RULES[level].get_or_init(|| GaussLegendre::new(BASE_ORDER << level))
}

/// Result of an order-escalating integration.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Estimate {
    pub value: f64,
    /// |I(2n) − I(n)| at acceptance.
    pub error: f64,
    pub order: usize,
}

/// Integrates `f` over [a, b], doubling the order from the first cached level
/// whose order is at least `min_order` until two successive orders agree to
/// `tol`. Returns the best estimate if the cache is exhausted.
pub fn integrate_to_tolerance<F: Fn(f64) -> f64>(
    f: F,
    a: f64,
    b: f64,
    tol: f64,
    min_order: usize,
) -> Estimate {
    let mut level = 0;
    while level + 1 < LEVELS && (BASE_ORDER << level) < min_order {
        level += 1;
    }
    let mut prev = rule(level).integrate(a, b, &f);
    loop {
        if level + 1 >= LEVELS {
            return Estimate {
                value: prev,
                error: f64::INFINITY,
                order: BASE_ORDER << level,
            };
        }
        level += 1;
        let next = rule(level).integrate(a, b, &f);
        let err = (next - prev).abs();
        if err <= tol {
            return Estimate {
                value: next,
                error: err,
                order: BASE_ORDER << level,
            };
        }
        prev = next;
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn weights_sum_to_two() {
        for n in [1, 2, 5, 16, 63, 256] {
            let r = GaussLegendre::new(n);
            let s: f64 = r.weights().iter().sum();
            assert!((s - 2.0).abs() < 1e-13, "n = {n}: {s}");
        }
    }

    #[test]
    fn exact_for_polynomials_up_to_degree_2n_minus_1() {
        let r = GaussLegendre::new(6);
        for deg in 0..12 {
            let got = r.integrate(0.0, 1.0, |x| x.powi(deg));
            let want = 1.0 / (deg as f64 + 1.0);
            assert!((got - want).abs() < 1e-14, "deg {deg}");
        }
    }

    #[test]
    fn three_point_rule_matches_table() {
        let r = GaussLegendre::new(3);
        assert!((r.nodes()[2] - (0.6f64).sqrt()).abs() < 1e-15);
        assert!((r.weights()[1] - 8.0 / 9.0).abs() < 1e-15);
        assert!((r.weights()[0] - 5.0 / 9.0).abs() < 1e-15);
    }

    #[test]
    fn oscillatory_integral_converges() {
        // ∫_0^π cos(a x) dx = sin(aπ)/a
        let a = 300.5;
        let est = integrate_to_tolerance(|x| (a * x).cos(), 0.0, std::f64::consts::PI, 1e-12, 16);
        assert!((est.value - (a * std::f64::consts::PI).sin() / a).abs() < 1e-11);
        assert!(est.order >= 256);
    }
}
