//! Nonlinear least squares over the model registry.
//!
//! Fits run on the SI form of a curve, so parameters come back in SI units
//! (seconds, hertz, hertz per V/m). Residuals are `(f − y)/σ` when the curve
//! carries uncertainties and `f − y` otherwise; the covariance is always
//! scaled by the residual variance at the solution.

pub mod lm;
mod models;

use std::collections::BTreeMap;

use nalgebra::DMatrix;
use rand_distr::{Distribution, StandardNormal};

pub use models::{ModelSpec, ParamRole, ParamSpec, MODEL_IDS};

use crate::analytic::{StarkKernel, LOG_CONVENTION};
use crate::error::{Error, Result};
use crate::model::{FitResult, SweepCurve};
use crate::rng::{CounterRng, Purpose};
use lm::{minimize, Residuals};

/// Column-normalized singular value ratio below which the Jacobian counts
/// as singular.
pub const SINGULAR_RCOND: f64 = 1e-10;

/// Relative gap below which the two recovery time constants are one.
const MERGE_RTOL: f64 = 1e-6;

#[derive(Debug, Clone, PartialEq)]
pub struct FitOptions {
    /// Starting values that replace the data-driven guesses.
    pub initial: BTreeMap<String, f64>,
    /// Parameters held at the given value (in addition to the model's defaults).
    pub fixed: BTreeMap<String, f64>,
    /// Default-fixed parameters to release.
    pub free: Vec<String>,
    /// Extra randomized starts around the best data-driven guess.
    pub restarts: usize,
    /// Additional explicit starting points (full parameter vectors).
    pub extra_starts: Vec<Vec<f64>>,
    pub max_iter: usize,
}

impl Default for FitOptions {
    fn default() -> Self {
        Self {
            initial: BTreeMap::new(),
            fixed: BTreeMap::new(),
            free: vec![],
            restarts: 0,
            extra_starts: vec![],
            max_iter: 500,
        }
    }
}

struct Problem<'a> {
    model: &'a ModelSpec,
    x: &'a [f64],
    y: &'a [f64],
    w: Vec<f64>,
    template: Vec<f64>,
    free: Vec<usize>,
}

impl Problem<'_> {
    fn expand(&self, q: &[f64]) -> Vec<f64> {
        let mut full = self.template.clone();
        for (k, &j) in self.free.iter().enumerate() {
            full[j] = q[k];
        }
        full
    }
}

impl Residuals for Problem<'_> {
    fn n_points(&self) -> usize {
        self.x.len()
    }

    fn n_params(&self) -> usize {
        self.free.len()
    }

    fn residuals(&self, q: &[f64], r: &mut [f64]) {
        let full = self.expand(q);
        for i in 0..self.x.len() {
            r[i] = self.w[i] * (self.model.evaluate(self.x[i], &full) - self.y[i]);
        }
    }

    fn jacobian(&self, q: &[f64], r: &mut [f64], jac: &mut DMatrix<f64>) {
        let full = self.expand(q);
        let mut g = vec![0.0; full.len()];
        for i in 0..self.x.len() {
            let f = self.model.evaluate_with_gradient(self.x[i], &full, &mut g);
            r[i] = self.w[i] * (f - self.y[i]);
            for (k, &j) in self.free.iter().enumerate() {
                jac[(i, k)] = self.w[i] * g[j];
            }
        }
    }
}

/// Fits `model` to `curve`.
pub fn fit(curve: &SweepCurve, model: &ModelSpec, options: &FitOptions) -> Result<FitResult> {
    curve.check()?;
    let si = curve.to_si();
    let x = si.abscissa.values.as_slice();
    let y = si.ordinate.values.as_slice();
    let mut model = model.clone();
    if model.uses_t0() && model.t0.is_none() {
        model.t0 = Some(x.iter().copied().fold(f64::INFINITY, f64::min));
    }
    let names = model.param_names();
    for key in options
        .initial
        .keys()
        .chain(options.fixed.keys())
        .chain(options.free.iter())
    {
        if model.index_of(key).is_none() {
            return Err(Error::FitPrecondition(format!(
                "model `{}` has no parameter `{key}`",
                model.id
            )));
        }
    }
    let mut fixed: BTreeMap<usize, f64> = BTreeMap::new();
    for (name, v) in &model.default_fixed {
        if !options.free.iter().any(|f| f == name) {
            fixed.insert(model.index_of(name).expect("registry name"), *v);
        }
    }
    for (name, v) in &options.fixed {
        fixed.insert(model.index_of(name).expect("checked"), *v);
    }
    let free: Vec<usize> = (0..model.n_params()).filter(|j| !fixed.contains_key(j)).collect();
    if x.len() < free.len() + 1 {
        return Err(Error::FitPrecondition(format!(
            "model `{}` has {} free parameters and needs at least {} points, got {}",
            model.id,
            free.len(),
            free.len() + 1,
            x.len()
        )));
    }
    let w: Vec<f64> = match &si.sigma {
        Some(s) => s.iter().map(|v| 1.0 / v).collect(),
        None => vec![1.0; x.len()],
    };

    let mut starts = model.starts(x, y);
    for s in &options.extra_starts {
        if s.len() != model.n_params() {
            return Err(Error::FitPrecondition(format!(
                "extra start has {} values, model `{}` has {} parameters",
                s.len(),
                model.id,
                model.n_params()
            )));
        }
        starts.push(s.clone());
    }
    for s in starts.iter_mut() {
        for (name, v) in &options.initial {
            s[model.index_of(name).expect("checked")] = *v;
        }
        for (&j, &v) in &fixed {
            s[j] = v;
        }
    }
    if options.restarts > 0 {
        let base = starts[0].clone();
        for k in 0..options.restarts {
            let mut rng = CounterRng::new(0, k as u64, Purpose::Restart);
            let mut s = base.clone();
            for &j in &free {
                let z: f64 = StandardNormal.sample(&mut rng);
                let b = model.params[j].bound;
                let v = if model.params[j].role == ParamRole::Shape && s[j] != 0.0 {
                    s[j] * (0.5 * z).exp()
                } else {
                    s[j] * (1.0 + 0.2 * z)
                };
                s[j] = if b.open_lower && v <= b.lower {
                    s[j]
                } else {
                    v.clamp(b.lower, b.upper)
                };
            }
            starts.push(s);
        }
    }

    let template = starts[0].clone();
    let problem = Problem {
        model: &model,
        x,
        y,
        w,
        template,
        free: free.clone(),
    };
    let bounds: Vec<lm::Bound> = free.iter().map(|&j| model.params[j].bound).collect();
    let mut best: Option<lm::LmOutcome> = None;
    for s in &starts {
        let q0: Vec<f64> = free.iter().map(|&j| s[j]).collect();
        let out = minimize(&problem, &q0, &bounds, options.max_iter);
        let better = match &best {
            None => out.cost.is_finite(),
            Some(b) => out.cost.is_finite() && out.cost < b.cost,
        };
        if better || best.is_none() {
            best = Some(out);
        }
    }
    let best = best.expect("at least one start");
    let mut params = problem.expand(&best.params);
    let mut merged = vec![];
    if model.id == "recovery_2exp" {
        if params[2] > params[4] {
            params.swap(1, 3);
            params.swap(2, 4);
        }
        // equal time constants: one component carries all the amplitude
        let all_free = [1, 2, 3, 4].iter().all(|j| free.contains(j));
        if all_free && (params[4] - params[2]).abs() <= MERGE_RTOL * params[4].abs() {
            params[3] += params[1];
            params[1] = 0.0;
            merged = vec![1, 2];
        }
    }

    let q_final: Vec<f64> = free.iter().map(|&j| params[j]).collect();
    let n = x.len();
    let mut r = vec![0.0; n];
    let mut jac = DMatrix::zeros(n, free.len());
    problem.jacobian(&q_final, &mut r, &mut jac);
    let rss: f64 = r.iter().map(|v| v * v).sum();
    let dof = (n - free.len()) as f64;
    let (cov_free, diagnostic) = covariance(&model, &free, &merged, &q_final, &jac, rss / dof);
    let mut covariance = vec![vec![0.0; model.n_params()]; model.n_params()];
    for (a, &ja) in free.iter().enumerate() {
        for (b, &jb) in free.iter().enumerate() {
            covariance[ja][jb] = cov_free[(a, b)];
        }
    }
    let singular = diagnostic
        .as_deref()
        .is_some_and(|d| d.starts_with("singular"));

    let mut metadata = BTreeMap::new();
    metadata.insert(
        "abscissa".into(),
        format!("{} ({})", si.abscissa.name, si.abscissa.unit),
    );
    metadata.insert(
        "ordinate".into(),
        format!("{} ({})", si.ordinate.name, si.ordinate.unit),
    );
    metadata.insert(
        "weighting".into(),
        if si.sigma.is_some() { "sigma" } else { "unit" }.into(),
    );
    metadata.insert("starts".into(), starts.len().to_string());
    if let Some(t0) = model.t0.filter(|_| model.uses_t0()) {
        metadata.insert("t0".into(), format!("{t0:e}"));
        metadata.insert("log".into(), LOG_CONVENTION.into());
    }

    Ok(FitResult {
        model_id: model.id.to_string(),
        param_names: names.iter().map(|s| s.to_string()).collect(),
        params,
        covariance,
        residual_norm: rss.sqrt(),
        n_points: n,
        converged: best.converged && !singular,
        iterations: best.iterations,
        fixed: fixed.keys().map(|&j| names[j].to_string()).collect(),
        diagnostic,
        metadata,
    })
}

/// (JᵀJ)⁻¹·s² over the free parameters. Parameters sitting on a closed bound
/// and parameters with no influence on the model get zero and infinite
/// variance respectively; the rest must be jointly identifiable.
fn covariance(
    model: &ModelSpec,
    free: &[usize],
    merged: &[usize],
    q: &[f64],
    jac: &DMatrix<f64>,
    s2: f64,
) -> (DMatrix<f64>, Option<String>) {
    let m = free.len();
    let mut cov = DMatrix::zeros(m, m);
    let mut notes = vec![];
    let mut active = vec![];
    for (k, &j) in free.iter().enumerate() {
        let b = model.params[j].bound;
        let pinned = (!b.open_lower && q[k] == b.lower) || q[k] == b.upper;
        let norm = jac.column(k).norm();
        if merged.contains(&j) {
            cov[(k, k)] = f64::INFINITY;
            notes.push(format!("{} not identifiable (single component)", model.params[j].name));
        } else if pinned {
            notes.push(format!("{} at bound", model.params[j].name));
        } else if norm == 0.0 || !norm.is_finite() {
            cov[(k, k)] = f64::INFINITY;
            notes.push(format!("{} not identifiable", model.params[j].name));
        } else {
            active.push((k, norm));
        }
    }
    let mut singular = None;
    if !active.is_empty() {
        let n = jac.nrows();
        let js = DMatrix::from_fn(n, active.len(), |i, a| {
            jac[(i, active[a].0)] / active[a].1
        });
        let svd = js.svd(false, true);
        let sv = &svd.singular_values;
        let smax = sv.max();
        let smin = sv.min();
        if !(smin > SINGULAR_RCOND * smax) {
            singular = Some(format!(
                "singular Jacobian (condition {:.3e})",
                smax / smin
            ));
            for &(k, _) in &active {
                cov[(k, k)] = f64::INFINITY;
            }
        } else {
            let vt = svd.v_t.expect("requested");
            for a in 0..active.len() {
                for b in 0..active.len() {
                    let mut acc = 0.0;
                    for s in 0..sv.len() {
                        acc += vt[(s, a)] * vt[(s, b)] / (sv[s] * sv[s]);
                    }
                    cov[(active[a].0, active[b].0)] = acc * s2 / (active[a].1 * active[b].1);
                }
            }
        }
    }
    let diagnostic = match (singular, notes.is_empty()) {
        (Some(s), true) => Some(s),
        (Some(s), false) => Some(format!("{s}; {}", notes.join(", "))),
        (None, false) => Some(notes.join(", ")),
        (None, true) => None,
    };
    (cov, diagnostic)
}

fn fit_id(curve: &SweepCurve, id: &str) -> Result<FitResult> {
    fit(curve, &ModelSpec::by_id(id)?, &FitOptions::default())
}

/// I₀·exp(−(4τ/T₂)ˣ) with x held at 1 unless `free_stretch`.
pub fn fit_echo_decay(curve: &SweepCurve, free_stretch: bool) -> Result<FitResult> {
    let mut opts = FitOptions::default();
    if free_stretch {
        opts.free.push("x".into());
    }
    fit(curve, &ModelSpec::by_id("echo_decay")?, &opts)
}

fn check_sd_curve(curve: &SweepCurve, t0: Option<f64>) -> Result<()> {
    curve.check()?;
    if curve.len() < 5 {
        return Err(Error::FitPrecondition(format!(
            "spectral diffusion fits need at least 5 points, got {}",
            curve.len()
        )));
    }
    if let Some(t0) = t0 {
        let si = curve.abscissa.to_si();
        if let Some(bad) = si.values.iter().find(|&&v| v < t0) {
            return Err(Error::FitPrecondition(format!(
                "waiting time {bad:e} s is below t0 = {t0:e} s"
            )));
        }
    }
    Ok(())
}

/// Full spectral diffusion law; `t0` defaults to the smallest waiting time.
pub fn fit_spectral_diffusion(curve: &SweepCurve, t0: Option<f64>) -> Result<FitResult> {
    check_sd_curve(curve, t0)?;
    let mut m = ModelSpec::by_id("spectral_diffusion")?;
    m.t0 = t0;
    let opts = FitOptions {
        restarts: 4,
        ..FitOptions::default()
    };
    fit(curve, &m, &opts)
}

#[derive(Debug, Clone, PartialEq)]
pub struct SubmodelEntry {
    pub label: &'static str,
    pub result: FitResult,
}

/// The three spectral diffusion models, best residual norm first.
#[derive(Debug, Clone, PartialEq)]
pub struct SubmodelComparison {
    pub entries: Vec<SubmodelEntry>,
}

impl SubmodelComparison {
    pub fn ranking(&self) -> Vec<&str> {
        self.entries.iter().map(|e| e.result.model_id.as_str()).collect()
    }
}

pub fn fit_submodels(curve: &SweepCurve, t0: Option<f64>) -> Result<SubmodelComparison> {
    check_sd_curve(curve, t0)?;
    let with_t0 = |id| -> Result<ModelSpec> {
        let mut m = ModelSpec::by_id(id)?;
        m.t0 = t0;
        Ok(m)
    };
    let tls = fit(curve, &with_t0("sd_tls_only")?, &FitOptions::default())?;
    let bath = fit(curve, &with_t0("sd_bath_only")?, &FitOptions::default())?;
    // the full model nests both; start it from each nested optimum as well
    let opts = FitOptions {
        extra_starts: vec![
            vec![tls.params[0], 0.0, bath.params[2], tls.params[1]],
            vec![bath.params[0], bath.params[1], bath.params[2], 0.0],
        ],
        restarts: 4,
        ..FitOptions::default()
    };
    let full = fit(curve, &with_t0("spectral_diffusion")?, &opts)?;
    let mut entries = vec![
        SubmodelEntry {
            label: "full",
            result: full,
        },
        SubmodelEntry {
            label: "spin-bath only",
            result: bath,
        },
        SubmodelEntry {
            label: "TLS only",
            result: tls,
        },
    ];
    entries.sort_by(|a, b| a.result.residual_norm.total_cmp(&b.result.residual_norm));
    Ok(SubmodelComparison { entries })
}

pub fn fit_recovery(curve: &SweepCurve) -> Result<FitResult> {
    fit_id(curve, "recovery_2exp")
}

pub fn fit_lorentzian_peak(curve: &SweepCurve) -> Result<FitResult> {
    fit_id(curve, "lorentzian")
}

/// γ₀′ + α·T. Two points are interpolated exactly (no residual degrees of
/// freedom, so the covariance is reported as infinite).
pub fn fit_linear_broadening(curve: &SweepCurve) -> Result<FitResult> {
    if curve.len() != 2 {
        return fit_id(curve, "linear_broadening");
    }
    curve.check()?;
    let si = curve.to_si();
    let (x, y) = (&si.abscissa.values, &si.ordinate.values);
    if x[0] == x[1] {
        return Err(Error::FitPrecondition(
            "two points at the same temperature do not define a line".into(),
        ));
    }
    let alpha = (y[1] - y[0]) / (x[1] - x[0]);
    let gamma0p = y[0] - alpha * x[0];
    if alpha < 0.0 || gamma0p < 0.0 {
        return Err(Error::FitPrecondition(format!(
            "the line through two points (gamma0p = {gamma0p:e}, alpha = {alpha:e}) violates the non-negativity bounds"
        )));
    }
    let mut metadata = BTreeMap::new();
    metadata.insert("method".into(), "two-point interpolation".into());
    Ok(FitResult {
        model_id: "linear_broadening".into(),
        param_names: vec!["gamma0p".into(), "alpha".into()],
        params: vec![gamma0p, alpha],
        covariance: vec![vec![f64::INFINITY, 0.0], vec![0.0, f64::INFINITY]],
        residual_norm: 0.0,
        n_points: 2,
        converged: true,
        iterations: 0,
        fixed: vec![],
        diagnostic: Some("no residual degrees of freedom".into()),
        metadata,
    })
}

/// Amplitude vs pulse area (V·s/m) against the orientation-averaged model.
pub fn fit_stark_modulation(curve: &SweepCurve, kernel: &StarkKernel) -> Result<FitResult> {
    curve.check()?;
    if curve.len() < 5 {
        return Err(Error::FitPrecondition(format!(
            "Stark fits need at least 5 pulse areas, got {}",
            curve.len()
        )));
    }
    fit(curve, &ModelSpec::stark(*kernel), &FitOptions::default())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::Axis;
    use crate::units::Unit;

    fn curve(x: Vec<f64>, y: Vec<f64>) -> SweepCurve {
        SweepCurve::new(
            Axis::new("x", Unit::Dimensionless, x),
            Axis::new("y", Unit::Dimensionless, y),
        )
    }

    #[test]
    fn too_few_points_is_a_precondition_error() {
        let c = curve(vec![1.0, 2.0, 3.0], vec![1.0, 2.0, 3.0]);
        let m = ModelSpec::by_id("lorentzian").unwrap();
        assert!(matches!(
            fit(&c, &m, &FitOptions::default()),
            Err(Error::FitPrecondition(_))
        ));
    }

    #[test]
    fn nan_is_rejected_with_index() {
        let c = curve(vec![1.0, 2.0, 3.0, 4.0], vec![1.0, f64::NAN, 3.0, 4.0]);
        let err = fit_linear_broadening(&c).unwrap_err();
        assert!(err.to_string().contains("index 1"), "{err}");
    }

    #[test]
    fn exact_line_is_recovered() {
        let c = curve(vec![0.1, 1.0], vec![33e3 + 11.1e3, 33e3 + 111e3]);
        let r = fit_linear_broadening(&c).unwrap();
        assert!((r.params[1] / 111e3 - 1.0).abs() < 1e-12);
        assert!((r.params[0] / 33e3 - 1.0).abs() < 1e-12);
        assert!(r.converged);
    }

    #[test]
    fn duplicated_column_is_singular() {
        // i0 and t2 cannot both be determined from a single abscissa value
        let c = curve(vec![1.0, 1.0, 1.0], vec![0.5, 0.5, 0.5]);
        let r = fit_echo_decay(&c, false).unwrap();
        assert!(!r.converged);
        assert!(r.diagnostic.unwrap().contains("singular"));
    }

    #[test]
    fn unknown_option_names_are_rejected() {
        let c = curve(vec![1.0, 2.0, 3.0, 4.0], vec![1.0, 2.0, 3.0, 4.0]);
        let mut o = FitOptions::default();
        o.fixed.insert("beta".into(), 1.0);
        let m = ModelSpec::by_id("linear_broadening").unwrap();
        assert!(fit(&c, &m, &o).is_err());
    }
}
