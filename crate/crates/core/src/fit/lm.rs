//! Bounded Levenberg–Marquardt with Marquardt diagonal scaling.

use nalgebra::{DMatrix, DVector};

/// Thresholds that define convergence.
pub const XTOL: f64 = 1e-8;
pub const FTOL: f64 = 1e-8;

/// Tighter thresholds used to keep polishing after convergence is reached.
const POLISH_XTOL: f64 = 1e-13;
const POLISH_FTOL: f64 = 1e-14;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Bound {
    pub lower: f64,
    pub upper: f64,
    /// The lower bound itself is excluded (strictly positive parameters).
    pub open_lower: bool,
}

impl Bound {
    fn project(&self, old: f64, proposed: f64) -> f64 {
        let mut p = proposed;
        if p < self.lower || (self.open_lower && p <= self.lower) {
            p = if self.open_lower {
                self.lower + 0.1 * (old - self.lower)
            } else {
                self.lower
            };
        }
        if p > self.upper {
            p = self.upper;
        }
        p
    }
}

/// Weighted residuals r = w·(f − y) and their Jacobian in the free parameters.
pub trait Residuals {
    fn n_points(&self) -> usize;
    fn n_params(&self) -> usize;
    fn residuals(&self, p: &[f64], r: &mut [f64]);
    fn jacobian(&self, p: &[f64], r: &mut [f64], jac: &mut DMatrix<f64>);
}

#[derive(Debug, Clone)]
pub struct LmOutcome {
    pub params: Vec<f64>,
    /// ½‖r‖²
    pub cost: f64,
    pub iterations: usize,
    pub converged: bool,
}

pub fn minimize<P: Residuals>(
    problem: &P,
    start: &[f64],
    bounds: &[Bound],
    max_iter: usize,
) -> LmOutcome {
    let n = problem.n_points();
    let m = problem.n_params();
    let mut p: Vec<f64> = start
        .iter()
        .zip(bounds)
        .map(|(&v, b)| b.project(v, v.clamp(b.lower, b.upper)))
        .collect();
    let reference: Vec<f64> = p.iter().map(|v| 1e-3 * v.abs()).collect();
    let mut r = vec![0.0; n];
    let mut jac = DMatrix::zeros(n, m);
    problem.jacobian(&p, &mut r, &mut jac);
    let mut cost = half_sq(&r);
    if !cost.is_finite() {
        return LmOutcome {
            params: p,
            cost,
            iterations: 0,
            converged: false,
        };
    }
    let cost_floor = 1e-30 * cost.max(f64::MIN_POSITIVE);
    let mut diag = vec![0.0f64; m];
    let mut lambda = 1e-3;
    let mut converged = false;
    let mut r_try = vec![0.0; n];
    let mut iterations = 0;

    while iterations < max_iter {
        iterations += 1;
        if cost <= cost_floor {
            converged = true;
            break;
        }
        let jt = jac.transpose();
        let a = &jt * &jac;
        let g = &jt * DVector::from_column_slice(&r);
        for j in 0..m {
            diag[j] = diag[j].max(a[(j, j)]);
            if diag[j] == 0.0 {
                diag[j] = 1.0;
            }
        }
        // parameters on a closed bound whose descent direction points outward
        let blocked: Vec<bool> = (0..m)
            .map(|j| {
                let b = bounds[j];
                (!b.open_lower && p[j] == b.lower && g[j] >= 0.0)
                    || (p[j] == b.upper && g[j] <= 0.0)
            })
            .collect();
        let mut g = g;
        let mut stop = false;
        loop {
            let mut damped = a.clone();
            for j in 0..m {
                damped[(j, j)] += lambda * diag[j];
                if blocked[j] {
                    for k in 0..m {
                        damped[(j, k)] = 0.0;
                        damped[(k, j)] = 0.0;
                    }
                    damped[(j, j)] = 1.0;
                    g[j] = 0.0;
                }
            }
            let Some(chol) = damped.cholesky() else {
                lambda *= 10.0;
                if lambda > 1e30 {
                    stop = true;
                    break;
                }
                continue;
            };
            let delta = chol.solve(&(-&g));
            let p_try: Vec<f64> = (0..m)
                .map(|j| bounds[j].project(p[j], p[j] + delta[j]))
                .collect();
            let rel_step = (0..m)
                .map(|j| {
                    let scale = p[j].abs().max(reference[j]).max(f64::MIN_POSITIVE);
                    (p_try[j] - p[j]).abs() / scale
                })
                .fold(0.0, f64::max);
            problem.residuals(&p_try, &mut r_try);
            let cost_try = half_sq(&r_try);
            if cost_try.is_finite() && cost_try < cost {
                let rel_dec = (cost - cost_try) / cost;
                p = p_try;
                problem.jacobian(&p, &mut r, &mut jac);
                cost = half_sq(&r);
                lambda = (lambda / 3.0).max(1e-15);
                if rel_step < XTOL && rel_dec < FTOL {
                    converged = true;
                }
                if (rel_step < POLISH_XTOL && rel_dec < POLISH_FTOL) || cost <= cost_floor {
                    if cost <= cost_floor {
                        converged = true;
                    }
                    stop = true;
                }
                break;
            }
            // no decrease: a vanishing trial step means we sit at the minimum
            if rel_step < XTOL {
                converged = true;
            }
            if rel_step < POLISH_XTOL || lambda > 1e30 {
                stop = true;
                break;
            }
            lambda *= 4.0;
        }
        if stop {
            break;
        }
    }
    LmOutcome {
        params: p,
        cost,
        iterations,
        converged,
    }
}

fn half_sq(r: &[f64]) -> f64 {
    0.5 * r.iter().map(|x| x * x).sum::<f64>()
}
