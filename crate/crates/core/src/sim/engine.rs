use std::f64::consts::TAU;

use rand::Rng;
use rand_distr::{Cauchy, Distribution, Exp, StandardNormal};
use rayon::prelude::*;

use super::SimConfig;
use crate::model::{EnsembleSpec, PulseArea, PulseEvent, PulseSequence};
use crate::rng::{CounterRng, Purpose};

/// Ions per work unit. Partial sums are formed per chunk in ion order and
/// merged in chunk order, so results do not depend on the thread count.
pub(crate) const CHUNK: usize = 1024;

#[derive(Debug, Clone, Copy, PartialEq)]
pub(crate) enum Op {
    Rotate(f64),
    Saturate(f64),
    Field(f64),
    Sample(usize),
}

/// Bloch vector of one ion.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Bloch {
    pub u: f64,
    pub v: f64,
    pub w: f64,
}

impl Bloch {
    pub const GROUND: Bloch = Bloch {
        u: 0.0,
        v: 0.0,
        w: -1.0,
    };

    pub fn norm_sq(&self) -> f64 {
        self.u * self.u + self.v * self.v + self.w * self.w
    }

    /// Rotation by `angle` about x.
    pub fn rotate_x(&mut self, angle: f64) {
        let (s, c) = angle.sin_cos();
        let v = self.v * c - self.w * s;
        let w = self.v * s + self.w * c;
        self.v = v;
        self.w = w;
    }

    /// Free precession: u + iv → (u + iv)·e^{iφ}.
    pub fn precess(&mut self, phase: f64) {
        let (s, c) = phase.sin_cos();
        let u = self.u * c - self.v * s;
        let v = self.u * s + self.v * c;
        self.u = u;
        self.v = v;
    }
}

#[derive(Debug, Clone, Copy)]
struct BathParams {
    spins: usize,
    /// Cauchy half width of a single coupling (Hz).
    coupling: f64,
    /// Merged flip rate of all spins of one ion (Hz).
    total_rate: f64,
}

/// A sequence compiled into time-ordered operations.
#[derive(Debug, Clone)]
pub(crate) struct Engine {
    ops: Vec<(f64, Op)>,
    pub n_samples: usize,
    half_bw: f64,
    full_line: bool,
    seed: u64,
    /// Phase diffusion constant (rad²/s).
    noise: f64,
    bath: Option<BathParams>,
    spec: EnsembleSpec,
}

/// Per-ion scratch space.
#[derive(Debug, Clone, Default)]
pub(crate) struct Scratch {
    couplings: Vec<f64>,
    pub samples: Vec<[f64; 2]>,
}

impl Engine {
    /// `samples` lists sample times; they become `Op::Sample(k)` in order.
    pub fn new(spec: &EnsembleSpec, seq: &PulseSequence, cfg: &SimConfig, samples: &[f64]) -> Self {
        let mut ops: Vec<(f64, Op)> = vec![];
        for e in &seq.events {
            match *e {
                PulseEvent::OpticalPulse {
                    area, power_scale, ..
                } => match area.angle() {
                    Some(angle) => ops.push((e.center(), Op::Rotate(angle * power_scale.sqrt()))),
                    None => {
                        debug_assert_eq!(area, PulseArea::Saturation);
                        ops.push((e.end(), Op::Saturate(1.0 - power_scale.min(1.0))));
                    }
                },
                PulseEvent::StarkGate {
                    start,
                    duration,
                    field,
                } => {
                    if duration > 0.0 {
                        ops.push((start, Op::Field(field)));
                        ops.push((start + duration, Op::Field(0.0)));
                    }
                }
                PulseEvent::Detect { .. } => {}
            }
        }
        for (k, &t) in samples.iter().enumerate() {
            ops.push((t, Op::Sample(k)));
        }
        ops.sort_by(|a, b| a.0.total_cmp(&b.0));
        let noise = if spec.t2_optical.is_finite() {
            2.0 / spec.t2_optical
        } else {
            0.0
        };
        let bath = spec.bath.and_then(|b| {
            (b.flip_rate > 0.0 && b.max_shift > 0.0).then(|| {
                let spins = cfg.bath_spins.max(1);
                BathParams {
                    spins,
                    coupling: b.max_shift / (2.0 * spins as f64),
                    total_rate: 0.5 * b.flip_rate * spins as f64,
                }
            })
        });
        Self {
            ops,
            n_samples: samples.len(),
            half_bw: 0.5 * cfg.pulse_bandwidth,
            full_line: cfg.sample_full_line,
            seed: cfg.seed,
            noise,
            bath,
            spec: spec.clone(),
        }
    }

    /// Expected piecewise-constant segments per ion.
    pub fn segments_per_ion(&self) -> f64 {
        let span = self.ops.last().map_or(0.0, |o| o.0);
        let flips = self.bath.map_or(0.0, |b| b.total_rate * span);
        self.ops.len() as f64 + 1.0 + flips
    }

    /// Evolves ion `ion`, writing its (u, v) at every sample time into
    /// `scratch.samples`. Returns the largest change of |B|² caused by a
    /// unitary step, or `None` if the ion lies outside the pulse bandwidth.
    pub fn run_ion(&self, ion: u64, scratch: &mut Scratch) -> Option<f64> {
        scratch.samples.clear();
        scratch.samples.resize(self.n_samples, [0.0, 0.0]);
        let line = &self.spec.line;
        let mut rng_d = CounterRng::new(self.seed, ion, Purpose::Detuning);
        let detuning = if self.full_line {
            line.sample_detuning(&mut rng_d)
        } else {
            line.sample_detuning_within(&mut rng_d, -self.half_bw, self.half_bw)
        };
        if detuning.abs() > self.half_bw {
            return None;
        }
        let mut rng_o = CounterRng::new(self.seed, ion, Purpose::Orientation);
        let theta = self.spec.dipole_kernel.sample_theta(&mut rng_o);
        let sign = if rng_o.random::<bool>() { 1.0 } else { -1.0 };
        let stark = self.spec.stark_k * sign * theta.cos();

        let mut rng_b = CounterRng::new(self.seed, ion, Purpose::Bath);
        let mut bath_shift = 0.0;
        let mut next_flip = f64::INFINITY;
        let mut flip_dist = None;
        if let Some(b) = self.bath {
            let cauchy = Cauchy::new(0.0, b.coupling).expect("positive width");
            scratch.couplings.clear();
            for _ in 0..b.spins {
                let c: f64 = cauchy.sample(&mut rng_b);
                let c = if rng_b.random::<bool>() { c } else { -c };
                bath_shift += c;
                scratch.couplings.push(c);
            }
            let exp = Exp::new(b.total_rate).expect("positive rate");
            next_flip = exp.sample(&mut rng_b);
            flip_dist = Some(exp);
        }
        let mut rng_n = CounterRng::new(self.seed, ion, Purpose::PhaseNoise);

        let mut state = Bloch::GROUND;
        let mut field = 0.0;
        let mut t = 0.0;
        let mut max_dev = 0.0f64;
        for &(t_op, op) in &self.ops {
            if t_op > t {
                // ∫ bath shift over [t, t_op], exact across flips
                let mut bath_phase = 0.0;
                let mut tb = t;
                while next_flip < t_op {
                    bath_phase += bath_shift * (next_flip - tb);
                    tb = next_flip;
                    let k = rng_b.random_range(0..scratch.couplings.len());
                    let c = scratch.couplings[k];
                    bath_shift -= 2.0 * c;
                    scratch.couplings[k] = -c;
                    next_flip += flip_dist.as_ref().expect("bath").sample(&mut rng_b);
                }
                bath_phase += bath_shift * (t_op - tb);
                let dt = t_op - t;
                let mut phase = TAU * ((detuning + stark * field) * dt + bath_phase);
                if self.noise > 0.0 {
                    let z: f64 = StandardNormal.sample(&mut rng_n);
                    phase += (self.noise * dt).sqrt() * z;
                }
                let before = state.norm_sq();
                state.precess(phase);
                max_dev = max_dev.max((state.norm_sq() - before).abs());
                t = t_op;
            }
            match op {
                Op::Rotate(angle) => {
                    let before = state.norm_sq();
                    state.rotate_x(angle);
                    max_dev = max_dev.max((state.norm_sq() - before).abs());
                }
                Op::Saturate(keep) => {
                    state.u = 0.0;
                    state.v = 0.0;
                    state.w *= keep;
                }
                Op::Field(e) => field = e,
                Op::Sample(k) => scratch.samples[k] = [state.u, state.v],
            }
        }
        Some(max_dev)
    }
}

/// Deterministic chunked map-reduce over `0..n`.
pub(crate) fn reduce_ions<A, I, F, M>(n: usize, init: I, fold: F, merge: M) -> A
where
    A: Send,
    I: Fn() -> A + Sync,
    F: Fn(&mut A, &mut Scratch, u64) + Sync,
    M: Fn(&mut A, A),
{
    let n_chunks = n.div_ceil(CHUNK);
    let partials: Vec<A> = (0..n_chunks)
        .into_par_iter()
        .map(|c| {
            let mut acc = init();
            let mut scratch = Scratch::default();
            for i in c * CHUNK..((c + 1) * CHUNK).min(n) {
                fold(&mut acc, &mut scratch, i as u64);
            }
            acc
        })
        .collect();
    let mut total = init();
    for p in partials {
        merge(&mut total, p);
    }
    total
}
