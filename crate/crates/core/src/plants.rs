//! Benchmark plants of the form `x'' = f(x, x', t) + g(x) u`.
//!
//! Every plant is second order per node. State vectors use the flat layout
//! `[x_1, v_1, ..., x_N, v_N]`.

use serde::{Deserialize, Serialize};

use crate::error::{ensure_finite, Error, Result};

/// Smallest admissible `|g(x)|`.
pub const MIN_INPUT_GAIN: f64 = 1e-9;

/// Normalized pendulum `x'' = a sin(x) - c v + b u`. With `a > 0` the
/// upright position `x = 0` is an unstable equilibrium.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PendulumParams {
    pub a: f64,
    pub c: f64,
    pub b: f64,
}

impl Default for PendulumParams {
    fn default() -> Self {
        Self { a: 1.0, c: 0.1, b: 1.0 }
    }
}

/// Van der Pol oscillator `x'' = mu (1 - x^2) v - x + b u`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct VdpParams {
    pub mu: f64,
    pub b: f64,
}

impl Default for VdpParams {
    fn default() -> Self {
        Self { mu: 1.0, b: 1.0 }
    }
}

/// Unforced Duffing oscillator `x'' = lin x + cub x^3 - delta v + b u`.
/// The defaults give a double well with equilibria at `x in {0, -1, 1}`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DuffingParams {
    pub delta: f64,
    pub lin: f64,
    pub cub: f64,
    pub b: f64,
}

impl Default for DuffingParams {
    fn default() -> Self {
        Self { delta: 0.2, lin: 1.0, cub: -1.0, b: 1.0 }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Topology {
    Ring,
    Chain,
}

/// Identical pendulums with diffusive position coupling
/// `kappa * sum_{j in N(i)} (x_j - x_i)` on the acceleration channel.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct NetworkParams {
    pub n: usize,
    pub kappa: f64,
    pub topology: Topology,
    pub node: PendulumParams,
}

impl Default for NetworkParams {
    fn default() -> Self {
        Self { n: 5, kappa: 0.5, topology: Topology::Ring, node: PendulumParams::default() }
    }
}

impl NetworkParams {
    /// Neighbor indices of `i`. A two-node ring has the same single edge as
    /// a two-node chain.
    pub fn neighbors(&self, i: usize) -> impl Iterator<Item = usize> {
        let n = self.n;
        let (left, right) = match self.topology {
            Topology::Ring => (Some((i + n - 1) % n), Some((i + 1) % n)),
            Topology::Chain => (i.checked_sub(1), (i + 1 < n).then_some(i + 1)),
        };
        let right = if right == left { None } else { right };
        left.into_iter().chain(right).filter(move |&j| j != i)
    }

    /// Coupling acceleration on node `i` given the flat state.
    pub fn coupling(&self, state: &[f64], i: usize) -> f64 {
        let xi = state[2 * i];
        self.kappa * self.neighbors(i).map(|j| state[2 * j] - xi).sum::<f64>()
    }
}

fn check_state(state: &[f64]) -> Result<()> {
    for (k, &s) in state.iter().enumerate() {
        ensure_finite(&format!("state[{k}]"), s)?;
    }
    Ok(())
}

pub fn pendulum_dynamics(state: [f64; 2], u: f64, p: &PendulumParams) -> Result<[f64; 2]> {
    check_state(&state)?;
    ensure_finite("u", u)?;
    let [x, v] = state;
    Ok([v, p.a * x.sin() - p.c * v + p.b * u])
}

pub fn vdp_dynamics(state: [f64; 2], u: f64, p: &VdpParams) -> Result<[f64; 2]> {
    check_state(&state)?;
    ensure_finite("u", u)?;
    let [x, v] = state;
    Ok([v, p.mu * (1.0 - x * x) * v - x + p.b * u])
}

pub fn duffing_dynamics(state: [f64; 2], u: f64, p: &DuffingParams) -> Result<[f64; 2]> {
    check_state(&state)?;
    ensure_finite("u", u)?;
    let [x, v] = state;
    Ok([v, p.lin * x + p.cub * x * x * x - p.delta * v + p.b * u])
}

pub fn network_dynamics(state: &[f64], u: &[f64], p: &NetworkParams) -> Result<Vec<f64>> {
    if state.len() != 2 * p.n || u.len() != p.n {
        return Err(Error::invalid_input(format!(
            "network of {} nodes needs a state of length {} and {} controls, got {} and {}",
            p.n,
            2 * p.n,
            p.n,
            state.len(),
            u.len()
        )));
    }
    check_state(state)?;
    let mut out = vec![0.0; state.len()];
    for i in 0..p.n {
        ensure_finite("u", u[i])?;
        let [dx, dv] = pendulum_dynamics([state[2 * i], state[2 * i + 1]], u[i], &p.node)?;
        out[2 * i] = dx;
        out[2 * i + 1] = dv + p.coupling(state, i);
    }
    Ok(out)
}

/// Serializable plant selector as it appears in scenario files.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "lowercase", deny_unknown_fields)]
pub enum PlantSpec {
    Pendulum(PendulumParams),
    Vdp(VdpParams),
    Duffing(DuffingParams),
    #[serde(rename = "network5", alias = "network")]
    Network(NetworkParams),
}

impl PlantSpec {
    pub fn pendulum() -> Self {
        PlantSpec::Pendulum(PendulumParams::default())
    }

    pub fn vdp() -> Self {
        PlantSpec::Vdp(VdpParams::default())
    }

    pub fn duffing() -> Self {
        PlantSpec::Duffing(DuffingParams::default())
    }

    pub fn network5() -> Self {
        PlantSpec::Network(NetworkParams::default())
    }

    /// Parameter violations, empty when the plant is well formed.
    pub fn violations(&self) -> Vec<String> {
        let mut out = Vec::new();
        let mut gain = |b: f64| {
            if !b.is_finite() || b.abs() < MIN_INPUT_GAIN {
                out.push(format!("plant input gain b must be finite and non-zero, got {b}"));
            }
        };
        match self {
            PlantSpec::Pendulum(p) => gain(p.b),
            PlantSpec::Vdp(p) => gain(p.b),
            PlantSpec::Duffing(p) => gain(p.b),
            PlantSpec::Network(p) => gain(p.node.b),
        }
        let mut nonneg = |name: &str, value: f64| {
            if !(value.is_finite() && value >= 0.0) {
                out.push(format!("plant parameter {name} must be finite and >= 0, got {value}"));
            }
        };
        match self {
            PlantSpec::Pendulum(p) => {
                nonneg("a", p.a);
                nonneg("c", p.c);
            }
            PlantSpec::Vdp(p) => nonneg("mu", p.mu),
            PlantSpec::Duffing(p) => {
                nonneg("delta", p.delta);
                if !(p.lin.is_finite() && p.cub.is_finite()) {
                    out.push("duffing stiffness coefficients must be finite".into());
                }
            }
            PlantSpec::Network(p) => {
                nonneg("a", p.node.a);
                nonneg("c", p.node.c);
                nonneg("kappa", p.kappa);
                if p.n < 2 {
                    out.push(format!("network needs at least 2 nodes, got {}", p.n));
                }
            }
        }
        out
    }
}

/// Second-order plant evaluated node by node.
///
/// `drift` is `f` and `input_gain` is `g` for node `i`; the closed loop
/// acceleration is `drift + input_gain * u + d`.
pub trait SecondOrderPlant {
    fn name(&self) -> &'static str;
    fn nodes(&self) -> usize;
    fn drift(&self, state: &[f64], node: usize, t: f64) -> f64;
    fn input_gain(&self, state: &[f64], node: usize) -> f64;

    /// Writes `[v_i, f_i + g_i u_i + d]` for every node into `out`.
    fn derivative(&self, state: &[f64], t: f64, u: &[f64], d: f64, out: &mut [f64]) {
        for i in 0..self.nodes() {
            out[2 * i] = state[2 * i + 1];
            out[2 * i + 1] =
                self.drift(state, i, t) + self.input_gain(state, i) * u[i] + d;
        }
    }
}

/// A validated plant ready for simulation.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Plant(PlantSpec);

impl Plant {
    pub fn new(spec: PlantSpec) -> Result<Self> {
        let v = spec.violations();
        if v.is_empty() {
            Ok(Plant(spec))
        } else {
            Err(Error::Validation(v))
        }
    }

    pub fn spec(&self) -> &PlantSpec {
        &self.0
    }
}

impl SecondOrderPlant for Plant {
    fn name(&self) -> &'static str {
        match self.0 {
            PlantSpec::Pendulum(_) => "pendulum",
            PlantSpec::Vdp(_) => "vdp",
            PlantSpec::Duffing(_) => "duffing",
            PlantSpec::Network(_) => "network5",
        }
    }

    fn nodes(&self) -> usize {
        match self.0 {
            PlantSpec::Network(p) => p.n,
            _ => 1,
        }
    }

    fn drift(&self, state: &[f64], node: usize, _t: f64) -> f64 {
        let x = state[2 * node];
        let v = state[2 * node + 1];
        match &self.0 {
            PlantSpec::Pendulum(p) => p.a * x.sin() - p.c * v,
            PlantSpec::Vdp(p) => p.mu * (1.0 - x * x) * v - x,
            PlantSpec::Duffing(p) => p.lin * x + p.cub * x * x * x - p.delta * v,
            PlantSpec::Network(p) => p.node.a * x.sin() - p.node.c * v + p.coupling(state, node),
        }
    }

    fn input_gain(&self, _state: &[f64], _node: usize) -> f64 {
        match &self.0 {
            PlantSpec::Pendulum(p) => p.b,
            PlantSpec::Vdp(p) => p.b,
            PlantSpec::Duffing(p) => p.b,
            PlantSpec::Network(p) => p.node.b,
        }
    }
}

#[cfg(test)]
mod tests {
    use std::f64::consts::FRAC_PI_2;

    use super::*;

    fn pend(a: f64, c: f64, b: f64) -> PendulumParams {
        PendulumParams { a, c, b }
    }

    #[test]
    fn pendulum_examples() {
        let p = pend(1.0, 0.0, 1.0);
        assert_eq!(pendulum_dynamics([0.0, 0.0], 0.0, &p).unwrap(), [0.0, 0.0]);
        assert_eq!(pendulum_dynamics([FRAC_PI_2, 0.0], 0.0, &p).unwrap(), [0.0, 1.0]);
        assert_eq!(pendulum_dynamics([0.0, 0.0], 2.0, &p).unwrap(), [0.0, 2.0]);
    }

    #[test]
    fn vdp_examples() {
        let p = |mu| VdpParams { mu, b: 1.0 };
        assert_eq!(vdp_dynamics([0.0, 0.0], 0.0, &p(1.0)).unwrap(), [0.0, 0.0]);
        assert_eq!(vdp_dynamics([1.0, 1.0], 0.0, &p(1.0)).unwrap(), [1.0, -1.0]);
        assert_eq!(vdp_dynamics([0.0, 1.0], 0.0, &p(2.0)).unwrap(), [1.0, 2.0]);
    }

    #[test]
    fn duffing_examples() {
        let p = DuffingParams::default();
        assert_eq!(duffing_dynamics([1.0, 0.0], 0.0, &p).unwrap(), [0.0, 0.0]);
        assert_eq!(duffing_dynamics([-1.0, 0.0], 0.0, &p).unwrap(), [0.0, 0.0]);
        assert_eq!(duffing_dynamics([0.0, 0.0], 0.0, &p).unwrap(), [0.0, 0.0]);
        assert_eq!(duffing_dynamics([2.0, 0.0], 0.0, &p).unwrap(), [0.0, -6.0]);
    }

    #[test]
    fn non_finite_inputs_are_rejected() {
        let p = PendulumParams::default();
        assert!(matches!(
            pendulum_dynamics([f64::NAN, 0.0], 0.0, &p),
            Err(Error::InvalidInput(_))
        ));
        assert!(vdp_dynamics([0.0, 0.0], f64::INFINITY, &VdpParams::default()).is_err());
        assert!(duffing_dynamics([0.0, f64::NEG_INFINITY], 0.0, &DuffingParams::default()).is_err());
    }

    #[test]
    fn network_examples() {
        let p = NetworkParams::default();
        let d = network_dynamics(&[0.0; 10], &[0.0; 5], &p).unwrap();
        assert!(d.iter().all(|&v| v == 0.0));

        let chain = NetworkParams {
            n: 2,
            kappa: 0.5,
            topology: Topology::Chain,
            node: pend(0.0, 0.1, 1.0),
        };
        let d = network_dynamics(&[0.0, 0.0, 1.0, 0.0], &[0.0, 0.0], &chain).unwrap();
        assert_eq!(d, vec![0.0, 0.5, 0.0, -0.5]);

        let ring = NetworkParams { kappa: 3.7, ..NetworkParams::default() };
        let state: Vec<f64> = (0..5).flat_map(|_| [0.3, -0.2]).collect();
        for i in 0..5 {
            assert_eq!(ring.coupling(&state, i), 0.0);
        }
    }

    #[test]
    fn network_dimension_mismatch() {
        let p = NetworkParams::default();
        assert!(network_dynamics(&[0.0; 10], &[0.0; 4], &p).is_err());
        assert!(network_dynamics(&[0.0; 8], &[0.0; 5], &p).is_err());
    }

    #[test]
    fn neighbor_sets() {
        let ring = NetworkParams::default();
        assert_eq!(ring.neighbors(0).collect::<Vec<_>>(), vec![4, 1]);
        let chain = NetworkParams { topology: Topology::Chain, ..ring };
        assert_eq!(chain.neighbors(0).collect::<Vec<_>>(), vec![1]);
        assert_eq!(chain.neighbors(4).collect::<Vec<_>>(), vec![3]);
        let ring2 = NetworkParams { n: 2, ..ring };
        assert_eq!(ring2.neighbors(0).collect::<Vec<_>>(), vec![1]);
    }

    #[test]
    fn plant_trait_matches_free_functions() {
        let plant = Plant::new(PlantSpec::duffing()).unwrap();
        let mut out = [0.0; 2];
        plant.derivative(&[1.5, -0.3], 0.0, &[0.7], 0.0, &mut out);
        assert_eq!(out, duffing_dynamics([1.5, -0.3], 0.7, &DuffingParams::default()).unwrap());
    }

    #[test]
    fn zero_gain_plant_is_rejected() {
        let spec = PlantSpec::Pendulum(pend(1.0, 0.1, 0.0));
        assert!(matches!(Plant::new(spec), Err(Error::Validation(_))));
        let spec = PlantSpec::Network(NetworkParams { n: 1, ..NetworkParams::default() });
        assert!(Plant::new(spec).is_err());
    }

    mod props {
        use proptest::prelude::*;

        use super::*;

        fn states(n: usize) -> impl Strategy<Value = Vec<f64>> {
            prop::collection::vec(-3.0f64..3.0, 2 * n)
        }

        proptest! {
            #[test]
            fn uncoupled_network_is_independent_pendulums(
                state in states(5),
                u in prop::collection::vec(-5.0f64..5.0, 5),
            ) {
                let p = NetworkParams { kappa: 0.0, ..NetworkParams::default() };
                let d = network_dynamics(&state, &u, &p).unwrap();
                for i in 0..5 {
                    let single = pendulum_dynamics([state[2 * i], state[2 * i + 1]], u[i], &p.node).unwrap();
                    prop_assert_eq!(d[2 * i], single[0]);
                    prop_assert_eq!(d[2 * i + 1], single[1]);
                }
            }

            #[test]
            fn ring_coupling_sums_to_zero(state in states(5), kappa in 0.0f64..5.0) {
                let p = NetworkParams { kappa, ..NetworkParams::default() };
                let total: f64 = (0..5).map(|i| p.coupling(&state, i)).sum();
                prop_assert!(total.abs() <= 1e-12 * (1.0 + kappa));
            }

            #[test]
            fn dynamics_are_pure(state in states(1), u in -5.0f64..5.0) {
                let p = DuffingParams::default();
                let a = duffing_dynamics([state[0], state[1]], u, &p).unwrap();
                let b = duffing_dynamics([state[0], state[1]], u, &p).unwrap();
                prop_assert_eq!(a[1].to_bits(), b[1].to_bits());
            }
        }
    }
}
