//! Deterministic fixed-step closed-loop simulation.
//!
//! Each step measures the state (with optional Gaussian noise), optionally
//! replaces the measured velocity by a filtered finite difference, computes
//! one control per node, pushes it through the input-delay buffer, and
//! advances the true state with RK4. The control is held constant across
//! the four RK4 stages; the matched disturbance `d(t)` is evaluated at each
//! stage time.

use std::collections::VecDeque;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};
use serde::{Deserialize, Serialize};

use crate::controllers::Controller;
use crate::error::{Error, Result};
use crate::plants::{Plant, SecondOrderPlant};
use crate::scenarios::Scenario;

/// Any state entry beyond this magnitude aborts the run.
pub const DIVERGENCE_LIMIT: f64 = 1e6;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SimConfig {
    pub dt: f64,
    pub t_final: f64,
    pub seed: u64,
    #[serde(default = "default_stride")]
    pub record_stride: usize,
}

fn default_stride() -> usize {
    1
}

impl Default for SimConfig {
    fn default() -> Self {
        Self { dt: 1e-3, t_final: 10.0, seed: 42, record_stride: 1 }
    }
}

impl SimConfig {
    pub const MIN_DT: f64 = 1e-6;
    pub const MAX_DT: f64 = 1e-1;
    pub const MAX_STEPS: f64 = 1e8;

    /// Number of integration steps, `round(t_final / dt)`.
    pub fn steps(&self) -> usize {
        (self.t_final / self.dt).round() as usize
    }

    pub fn violations(&self) -> Vec<String> {
        let mut out = Vec::new();
        if !(self.dt.is_finite() && self.dt > 0.0) {
            out.push(format!("dt must be positive, got {}", self.dt));
        } else if !(Self::MIN_DT..=Self::MAX_DT).contains(&self.dt) {
            out.push(format!("dt must lie in [1e-6, 1e-1], got {}", self.dt));
        }
        if !(self.t_final.is_finite() && self.t_final > 0.0) {
            out.push(format!("t_final must be positive, got {}", self.t_final));
        } else if self.dt > 0.0 && self.dt.is_finite() {
            let ratio = self.t_final / self.dt;
            if ratio.round() < 1.0 {
                out.push(format!("t_final ({}) must be at least dt ({})", self.t_final, self.dt));
            } else if ratio > Self::MAX_STEPS {
                out.push(format!("t_final / dt = {ratio:e} exceeds 1e8 steps"));
            } else if (ratio - ratio.round()).abs() > 1e-6 * ratio.max(1.0) {
                out.push(format!("t_final ({}) must be a whole number of steps of dt ({})", self.t_final, self.dt));
            }
        }
        if self.record_stride == 0 {
            out.push("record_stride must be at least 1".into());
        }
        out
    }
}

/// Gaussian measurement noise on the controller's view of the state.
#[derive(Debug, Clone, Copy, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct NoiseConfig {
    pub std_x: f64,
    pub std_v: f64,
}

impl NoiseConfig {
    pub fn is_zero(&self) -> bool {
        self.std_x == 0.0 && self.std_v == 0.0
    }
}

/// Matched disturbance added to the acceleration channel of every node.
#[derive(Debug, Clone, Copy, Default, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "lowercase", deny_unknown_fields)]
pub enum DisturbanceSpec {
    #[default]
    None,
    Sinusoid { amplitude: f64, omega: f64 },
}

impl DisturbanceSpec {
    pub fn sinusoid(amplitude: f64, omega: f64) -> Self {
        DisturbanceSpec::Sinusoid { amplitude, omega }
    }
}

pub fn eval_disturbance(spec: &DisturbanceSpec, t: f64) -> f64 {
    match *spec {
        DisturbanceSpec::None => 0.0,
        DisturbanceSpec::Sinusoid { amplitude, omega } => amplitude * (omega * t).sin(),
    }
}

/// Input delay implemented as a FIFO of `ceil(tau / dt)` past controls.
#[derive(Debug, Clone, Copy, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DelaySpec {
    pub tau: f64,
}

impl DelaySpec {
    pub fn steps(&self, dt: f64) -> usize {
        if self.tau <= 0.0 {
            0
        } else {
            // Tolerate representation error in tau / dt (0.01 / 0.001 > 10).
            (self.tau / dt - 1e-9).ceil().max(0.0) as usize
        }
    }
}

struct DelayLine {
    buf: VecDeque<f64>,
}

impl DelayLine {
    fn new(steps: usize) -> Self {
        Self { buf: std::iter::repeat_n(0.0, steps).collect() }
    }

    /// Pushes the newest command and returns the one applied now.
    fn push(&mut self, u: f64) -> f64 {
        if self.buf.is_empty() {
            return u;
        }
        self.buf.push_back(u);
        self.buf.pop_front().unwrap_or(0.0)
    }
}

/// Per-channel Gaussian streams derived from one seed. Node `i` uses
/// sub-stream `2i` for position and `2i + 1` for velocity, so adding nodes
/// leaves existing streams unchanged.
#[derive(Debug, Clone)]
pub struct NoiseSource {
    streams: Vec<ChaCha8Rng>,
}

impl NoiseSource {
    pub fn new(seed: u64, nodes: usize) -> Self {
        let streams = (0..2 * nodes as u64)
            .map(|k| {
                let mut rng = ChaCha8Rng::seed_from_u64(seed);
                rng.set_stream(k);
                rng
            })
            .collect();
        Self { streams }
    }

    fn draw(&mut self, channel: usize) -> f64 {
        StandardNormal.sample(&mut self.streams[channel])
    }
}

/// Returns `state` plus independent Gaussian draws. Channels with zero
/// standard deviation are copied exactly and consume no randomness.
pub fn apply_noise(state: &[f64], cfg: &NoiseConfig, rng: &mut NoiseSource) -> Vec<f64> {
    let mut out = state.to_vec();
    apply_noise_into(state, cfg, rng, &mut out);
    out
}

fn apply_noise_into(state: &[f64], cfg: &NoiseConfig, rng: &mut NoiseSource, out: &mut [f64]) {
    for (k, (o, &s)) in out.iter_mut().zip(state).enumerate() {
        let std = if k % 2 == 0 { cfg.std_x } else { cfg.std_v };
        *o = if std == 0.0 { s } else { s + std * rng.draw(k) };
    }
}

/// Backward difference followed by a first-order low-pass filter,
/// `y += a (dx/dt - y)` with `a = dt / (tau + dt)`, `tau = 1 / (2 pi fc)`.
/// The filter output starts at zero.
#[derive(Debug, Clone)]
pub struct DerivativeEstimator {
    dt: f64,
    gain: f64,
    prev: Option<f64>,
    y: f64,
}

impl DerivativeEstimator {
    pub fn new(dt: f64, cutoff_hz: f64) -> Result<Self> {
        if !(dt.is_finite() && dt > 0.0) {
            return Err(Error::invalid_input(format!("dt must be positive, got {dt}")));
        }
        if !(cutoff_hz.is_finite() && cutoff_hz > 0.0) {
            return Err(Error::invalid_input(format!("cutoff must be positive, got {cutoff_hz}")));
        }
        let tau = 1.0 / (2.0 * std::f64::consts::PI * cutoff_hz);
        Ok(Self { dt, gain: dt / (tau + dt), prev: None, y: 0.0 })
    }

    pub fn update(&mut self, x: f64) -> f64 {
        if let Some(p) = self.prev {
            let raw = (x - p) / self.dt;
            self.y += self.gain * (raw - self.y);
        }
        self.prev = Some(x);
        self.y
    }
}

/// Runs a fresh [`DerivativeEstimator`] over `x_history` and returns the
/// final estimate.
pub fn estimate_derivative(x_history: &[f64], dt: f64, cutoff_hz: f64) -> Result<f64> {
    if x_history.len() < 2 {
        return Err(Error::InsufficientHistory(x_history.len()));
    }
    let mut est = DerivativeEstimator::new(dt, cutoff_hz)?;
    Ok(x_history.iter().map(|&x| est.update(x)).last().unwrap_or(0.0))
}

/// Scratch buffers for classical fourth-order Runge-Kutta.
#[derive(Debug, Clone)]
pub struct Rk4 {
    k1: Vec<f64>,
    k2: Vec<f64>,
    k3: Vec<f64>,
    k4: Vec<f64>,
    tmp: Vec<f64>,
}

impl Rk4 {
    pub fn new(dim: usize) -> Self {
        let z = vec![0.0; dim];
        Self { k1: z.clone(), k2: z.clone(), k3: z.clone(), k4: z.clone(), tmp: z }
    }

    /// Advances `state` in place by one step of size `dt`.
    pub fn step<F>(&mut self, mut deriv: F, state: &mut [f64], t: f64, dt: f64) -> Result<()>
    where
        F: FnMut(&[f64], f64, &mut [f64]),
    {
        let half = 0.5 * dt;
        let n = state.len();

        deriv(state, t, &mut self.k1);
        for i in 0..n {
            self.tmp[i] = state[i] + half * self.k1[i];
        }
        deriv(&self.tmp, t + half, &mut self.k2);
        for i in 0..n {
            self.tmp[i] = state[i] + half * self.k2[i];
        }
        deriv(&self.tmp, t + half, &mut self.k3);
        for i in 0..n {
            self.tmp[i] = state[i] + dt * self.k3[i];
        }
        deriv(&self.tmp, t + dt, &mut self.k4);

        let sixth = dt / 6.0;
        for i in 0..n {
            let inc = self.k1[i] + 2.0 * self.k2[i] + 2.0 * self.k3[i] + self.k4[i];
            if !inc.is_finite() {
                return Err(Error::NonFinite { t });
            }
            state[i] += sixth * inc;
        }
        Ok(())
    }
}

/// One RK4 step of `x' = deriv(x, t)` from `(state, t)`.
pub fn rk4_step<F>(deriv: F, state: &[f64], t: f64, dt: f64) -> Result<Vec<f64>>
where
    F: FnMut(&[f64], f64, &mut [f64]),
{
    if !(dt.is_finite() && dt > 0.0) {
        return Err(Error::invalid_input(format!("dt must be positive, got {dt}")));
    }
    let mut out = state.to_vec();
    Rk4::new(state.len()).step(deriv, &mut out, t, dt)?;
    Ok(out)
}

/// Recorded columns for one node.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct NodeSeries {
    pub x: Vec<f64>,
    pub v: Vec<f64>,
    /// Control applied to the plant (after the delay line).
    pub u: Vec<f64>,
    pub alpha: Vec<f64>,
    pub beta: Vec<f64>,
    pub s: Vec<f64>,
    /// Lyapunov candidate `s^2 / 2`.
    pub lyap: Vec<f64>,
}

/// Uniformly sampled closed-loop record.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct TimeSeries {
    pub t: Vec<f64>,
    pub nodes: Vec<NodeSeries>,
    pub d: Vec<f64>,
    /// Set when the run aborted; the series then holds the samples recorded
    /// up to that point.
    pub diverged_at: Option<f64>,
}

impl TimeSeries {
    pub fn with_nodes(nodes: usize) -> Self {
        Self { nodes: vec![NodeSeries::default(); nodes], ..Self::default() }
    }

    pub fn len(&self) -> usize {
        self.t.len()
    }

    pub fn is_empty(&self) -> bool {
        self.t.is_empty()
    }

    pub fn node(&self, i: usize) -> &NodeSeries {
        &self.nodes[i]
    }

    /// Sampling interval, `None` with fewer than two samples.
    pub fn sample_dt(&self) -> Option<f64> {
        (self.t.len() >= 2).then(|| self.t[1] - self.t[0])
    }

    /// Mean node position per sample.
    pub fn mean_x(&self) -> Vec<f64> {
        let n = self.nodes.len() as f64;
        (0..self.len()).map(|k| self.nodes.iter().map(|nd| nd.x[k]).sum::<f64>() / n).collect()
    }

    /// Largest `|x_i|` across nodes per sample.
    pub fn max_abs_x(&self) -> Vec<f64> {
        (0..self.len())
            .map(|k| self.nodes.iter().map(|nd| nd.x[k].abs()).fold(0.0, f64::max))
            .collect()
    }

    /// Sum over nodes of `V_i`.
    pub fn total_lyap(&self) -> Vec<f64> {
        (0..self.len()).map(|k| self.nodes.iter().map(|nd| nd.lyap[k]).sum()).collect()
    }

    /// Column names in file order: `t`, per-node blocks, then `d`.
    /// Single-node runs use bare names, networks suffix a 1-based index.
    pub fn column_names(&self) -> Vec<String> {
        const FIELDS: [&str; 7] = ["x", "v", "u", "alpha", "beta", "s", "V"];
        let mut names = vec!["t".to_string()];
        let multi = self.nodes.len() > 1;
        for i in 0..self.nodes.len() {
            for f in FIELDS {
                names.push(if multi { format!("{f}_{}", i + 1) } else { f.to_string() });
            }
        }
        names.push("d".into());
        names
    }

    /// Columns in the same order as [`TimeSeries::column_names`].
    pub fn columns(&self) -> Vec<&[f64]> {
        let mut cols: Vec<&[f64]> = vec![&self.t];
        for nd in &self.nodes {
            cols.extend([&nd.x[..], &nd.v, &nd.u, &nd.alpha, &nd.beta, &nd.s, &nd.lyap]);
        }
        cols.push(&self.d);
        cols
    }
}

/// Simulates a scenario. Divergence returns [`Error::Diverged`] carrying the
/// partial series.
pub fn simulate_run(scenario: &Scenario) -> Result<TimeSeries> {
    scenario.check()?;
    let plant = Plant::new(scenario.plant)?;
    let nodes = plant.nodes();
    let cfg = scenario.sim;
    let dt = cfg.dt;
    let steps = cfg.steps();

    let mut controllers: Vec<Controller> =
        scenario.controllers.iter().map(|c| c.instantiate()).collect::<Result<_>>()?;
    let mut noise = NoiseSource::new(cfg.seed, nodes);
    let mut estimators = if scenario.estimate_velocity {
        Some(
            (0..nodes)
                .map(|_| DerivativeEstimator::new(dt, scenario.velocity_cutoff_hz))
                .collect::<Result<Vec<_>>>()?,
        )
    } else {
        None
    };
    let delay_steps = scenario.delay.steps(dt);
    let mut delays: Vec<DelayLine> = (0..nodes).map(|_| DelayLine::new(delay_steps)).collect();

    let mut state = scenario.initial_state.clone();
    let mut measured = state.clone();
    let mut applied = vec![0.0; nodes];
    let mut rk4 = Rk4::new(state.len());
    let mut series = TimeSeries::with_nodes(nodes);
    let disturbance = scenario.disturbance;

    for k in 0..=steps {
        let t = k as f64 * dt;
        apply_noise_into(&state, &scenario.noise, &mut noise, &mut measured);
        if let Some(est) = estimators.as_mut() {
            for (i, e) in est.iter_mut().enumerate() {
                measured[2 * i + 1] = e.update(measured[2 * i]);
            }
        }

        let record = k % cfg.record_stride == 0;
        if record {
            series.t.push(t);
            series.d.push(eval_disturbance(&disturbance, t));
        }
        for i in 0..nodes {
            let g = plant.input_gain(&measured, i);
            let out = controllers[i].control(measured[2 * i], measured[2 * i + 1], g, dt)?;
            applied[i] = delays[i].push(out.u);
            if record {
                let nd = &mut series.nodes[i];
                nd.x.push(state[2 * i]);
                nd.v.push(state[2 * i + 1]);
                nd.u.push(applied[i]);
                nd.alpha.push(out.alpha);
                nd.beta.push(out.beta);
                nd.s.push(out.s);
                nd.lyap.push(out.v);
            }
        }
        if k == steps {
            break;
        }

        let step = rk4.step(
            |x, tt, dx| plant.derivative(x, tt, &applied, eval_disturbance(&disturbance, tt), dx),
            &mut state,
            t,
            dt,
        );
        let t_next = (k + 1) as f64 * dt;
        let escaped = state.iter().any(|s| !s.is_finite() || s.abs() > DIVERGENCE_LIMIT);
        if step.is_err() || escaped {
            series.diverged_at = Some(t_next);
            return Err(Error::Diverged { t: t_next, partial: Box::new(series) });
        }
    }
    Ok(series)
}
