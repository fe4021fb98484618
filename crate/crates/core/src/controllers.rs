//! Sliding mode controllers.
//!
//! All controllers return a [`ControlOutput`] carrying the control value and
//! the structural diagnostics `(alpha, beta, s, V)` so every run records the
//! same columns. Baselines have no `beta` term and record `beta = 0`,
//! `alpha = s`.

use serde::{Deserialize, Serialize};

use crate::error::{ensure_finite, Error, Result};
use crate::plants::MIN_INPUT_GAIN;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ControlOutput {
    pub u: f64,
    pub alpha: f64,
    pub beta: f64,
    pub s: f64,
    /// Lyapunov candidate `s^2 / 2`.
    pub v: f64,
}

impl ControlOutput {
    fn new(u: f64, alpha: f64, beta: f64, s: f64) -> Self {
        Self { u, alpha, beta, s, v: 0.5 * s * s }
    }

    pub const ZERO: ControlOutput = ControlOutput { u: 0.0, alpha: 0.0, beta: 0.0, s: 0.0, v: 0.0 };
}

/// `sign` with `sign(0) = 0`.
pub fn sign(x: f64) -> f64 {
    if x > 0.0 {
        1.0
    } else if x < 0.0 {
        -1.0
    } else {
        0.0
    }
}

fn check_inputs(x: f64, v: f64) -> Result<()> {
    ensure_finite("x", x)?;
    ensure_finite("v", v)
}

fn check_dt(dt: f64) -> Result<()> {
    if dt.is_finite() && dt > 0.0 {
        Ok(())
    } else {
        Err(Error::invalid_input(format!("dt must be positive, got {dt}")))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ObserverFreeParams {
    pub k1: f64,
    pub lambda: f64,
    /// Replace `tanh` by a piecewise-linear table of this many points.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub tanh_table: Option<usize>,
}

impl ObserverFreeParams {
    pub fn new(k1: f64, lambda: f64) -> Self {
        Self { k1, lambda, tanh_table: None }
    }
}

/// Observer-free law: `alpha = v + k1 x`, `u = -lambda tanh(alpha)`,
/// `beta = u / g`, `s = alpha - beta`.
pub fn observer_free_control(x: f64, v: f64, g_val: f64, p: &ObserverFreeParams) -> Result<ControlOutput> {
    observer_free_with(x, v, g_val, p, f64::tanh)
}

fn observer_free_with(
    x: f64,
    v: f64,
    g_val: f64,
    p: &ObserverFreeParams,
    tanh: impl Fn(f64) -> f64,
) -> Result<ControlOutput> {
    check_inputs(x, v)?;
    ensure_finite("g", g_val)?;
    if g_val.abs() < MIN_INPUT_GAIN {
        return Err(Error::SingularGain(g_val.abs()));
    }
    let alpha = v + p.k1 * x;
    let u = -p.lambda * tanh(alpha);
    let beta = u / g_val;
    Ok(ControlOutput::new(u, alpha, beta, alpha - beta))
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ClassicalParams {
    pub lam_s: f64,
    pub k: f64,
}

/// Classical first-order SMC: `s = v + lam_s x`, `u = -k sign(s)`.
pub fn classical_smc_control(x: f64, v: f64, p: &ClassicalParams) -> Result<ControlOutput> {
    check_inputs(x, v)?;
    let s = v + p.lam_s * x;
    Ok(ControlOutput::new(-p.k * sign(s), s, 0.0, s))
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SuperTwistingParams {
    pub lam_s: f64,
    pub k1st: f64,
    pub k2st: f64,
}

impl SuperTwistingParams {
    /// Gains `1.5 sqrt(L)` and `1.1 L` for a presumed disturbance bound `L`.
    pub fn for_bound(lam_s: f64, bound: f64) -> Self {
        Self { lam_s, k1st: 1.5 * bound.sqrt(), k2st: 1.1 * bound }
    }
}

/// Super-twisting controller with its integrator state.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SuperTwisting {
    pub params: SuperTwistingParams,
    /// Integral term, starts at 0.
    pub v: f64,
}

impl SuperTwisting {
    pub fn new(params: SuperTwistingParams) -> Self {
        Self { params, v: 0.0 }
    }
}

/// `u = -k1st sqrt|s| sign(s) + v`, then `v <- v - k2st sign(s) dt`.
pub fn super_twisting_control(x: f64, v: f64, dt: f64, st: &mut SuperTwisting) -> Result<ControlOutput> {
    check_inputs(x, v)?;
    check_dt(dt)?;
    let p = st.params;
    let s = v + p.lam_s * x;
    let sg = sign(s);
    let u = -p.k1st * s.abs().sqrt() * sg + st.v;
    st.v -= p.k2st * sg * dt;
    Ok(ControlOutput::new(u, s, 0.0, s))
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct AdaptiveParams {
    pub lam_s: f64,
    pub gamma: f64,
    pub phi: f64,
    pub k0: f64,
    pub kmax: f64,
}

/// Boundary-layer SMC whose gain grows as `k' = gamma |s|`, capped at `kmax`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Adaptive {
    pub params: AdaptiveParams,
    pub k: f64,
}

impl Adaptive {
    pub fn new(params: AdaptiveParams) -> Self {
        Self { params, k: params.k0 }
    }
}

/// `u = -k sat(s / phi)`, then `k <- min(kmax, k + gamma |s| dt)`.
pub fn adaptive_smc_control(x: f64, v: f64, dt: f64, ad: &mut Adaptive) -> Result<ControlOutput> {
    check_inputs(x, v)?;
    check_dt(dt)?;
    let p = ad.params;
    if !(0.0..=p.kmax).contains(&ad.k) {
        return Err(Error::invalid_input(format!(
            "adaptive gain {} outside [0, {}]",
            ad.k, p.kmax
        )));
    }
    let s = v + p.lam_s * x;
    let u = -ad.k * (s / p.phi).clamp(-1.0, 1.0);
    ad.k = (ad.k + p.gamma * s.abs() * dt).min(p.kmax);
    Ok(ControlOutput::new(u, s, 0.0, s))
}

/// Half-width of the tabulated range of [`TanhTable`].
pub const TANH_TABLE_RANGE: f64 = 6.0;

/// Piecewise-linear `tanh` lookup on `[-6, 6]`, clamped to `+-tanh(6)`
/// outside. The table samples `[0, 6]` and uses odd symmetry, so
/// `eval(0) == 0` and `eval(-a) == -eval(a)` hold exactly.
#[derive(Debug, Clone, PartialEq)]
pub struct TanhTable {
    values: Vec<f64>,
    inv_step: f64,
}

impl TanhTable {
    pub const MIN_SIZE: usize = 64;

    pub fn new(table_size: usize) -> Result<Self> {
        if table_size < Self::MIN_SIZE {
            return Err(Error::invalid_config(format!(
                "tanh table needs at least {} points, got {table_size}",
                Self::MIN_SIZE
            )));
        }
        let intervals = (table_size - 1) as f64;
        let values = (0..table_size)
            .map(|i| (TANH_TABLE_RANGE * i as f64 / intervals).tanh())
            .collect();
        Ok(Self { values, inv_step: intervals / TANH_TABLE_RANGE })
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    pub fn eval(&self, alpha: f64) -> f64 {
        let a = alpha.abs();
        let pos = a * self.inv_step;
        let last = self.values.len() - 1;
        let y = if pos >= last as f64 {
            self.values[last]
        } else {
            let i = pos as usize;
            let frac = pos - i as f64;
            self.values[i] + frac * (self.values[i + 1] - self.values[i])
        };
        if alpha < 0.0 {
            -y
        } else {
            y
        }
    }
}

/// One-shot table lookup. Builds the table on every call; hold a
/// [`TanhTable`] for repeated use.
pub fn tanh_fast(alpha: f64, table_size: usize) -> Result<f64> {
    Ok(TanhTable::new(table_size)?.eval(alpha))
}

/// Controller selector as it appears in scenario files.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case", deny_unknown_fields)]
pub enum ControllerSpec {
    ObserverFree(ObserverFreeParams),
    Classical(ClassicalParams),
    SuperTwisting(SuperTwistingParams),
    Adaptive(AdaptiveParams),
    /// Open loop, `u = 0`.
    None,
}

impl ControllerSpec {
    pub fn name(&self) -> &'static str {
        match self {
            ControllerSpec::ObserverFree(_) => "observer-free",
            ControllerSpec::Classical(_) => "classical",
            ControllerSpec::SuperTwisting(_) => "super-twisting",
            ControllerSpec::Adaptive(_) => "adaptive",
            ControllerSpec::None => "none",
        }
    }

    /// Static attribute: the law uses only the measured state, no observer
    /// or integrator reconstructing unmeasured signals.
    pub fn is_observer_free(&self) -> bool {
        matches!(self, ControllerSpec::ObserverFree(_) | ControllerSpec::Classical(_))
    }

    /// A-priori bound on `|u|`, if the law has one.
    pub fn declared_bound(&self) -> Option<f64> {
        match self {
            ControllerSpec::ObserverFree(p) => Some(p.lambda),
            ControllerSpec::Classical(p) => Some(p.k),
            ControllerSpec::Adaptive(p) => Some(p.kmax),
            ControllerSpec::SuperTwisting(_) => None,
            ControllerSpec::None => Some(0.0),
        }
    }

    pub fn violations(&self) -> Vec<String> {
        let mut out = Vec::new();
        let mut positive = |name: &str, value: f64| {
            if !(value.is_finite() && value > 0.0) {
                out.push(format!("controller.{name} must be positive, got {value}"));
            }
        };
        match self {
            ControllerSpec::ObserverFree(p) => {
                positive("k1", p.k1);
                positive("lambda", p.lambda);
            }
            ControllerSpec::Classical(p) => {
                positive("lam_s", p.lam_s);
                positive("k", p.k);
            }
            ControllerSpec::SuperTwisting(p) => {
                positive("lam_s", p.lam_s);
                positive("k1st", p.k1st);
                positive("k2st", p.k2st);
            }
            ControllerSpec::Adaptive(p) => {
                positive("lam_s", p.lam_s);
                positive("gamma", p.gamma);
                positive("phi", p.phi);
                positive("kmax", p.kmax);
            }
            ControllerSpec::None => {}
        }
        match self {
            ControllerSpec::ObserverFree(ObserverFreeParams { tanh_table: Some(n), .. })
                if *n < TanhTable::MIN_SIZE =>
            {
                out.push(format!(
                    "controller.tanh_table must be at least {}, got {n}",
                    TanhTable::MIN_SIZE
                ));
            }
            ControllerSpec::Adaptive(p) if !(p.k0 >= 0.0 && p.k0 <= p.kmax) => {
                out.push(format!("controller.k0 must lie in [0, kmax], got {}", p.k0));
            }
            _ => {}
        }
        out
    }

    /// Fresh controller instance with zeroed internal state.
    pub fn instantiate(&self) -> Result<Controller> {
        let v = self.violations();
        if !v.is_empty() {
            return Err(Error::Validation(v));
        }
        Ok(match *self {
            ControllerSpec::ObserverFree(p) => Controller::ObserverFree {
                params: p,
                table: p.tanh_table.map(TanhTable::new).transpose()?,
            },
            ControllerSpec::Classical(p) => Controller::Classical(p),
            ControllerSpec::SuperTwisting(p) => Controller::SuperTwisting(SuperTwisting::new(p)),
            ControllerSpec::Adaptive(p) => Controller::Adaptive(Adaptive::new(p)),
            ControllerSpec::None => Controller::None,
        })
    }
}

/// A running controller. Stateful variants own their state; one instance
/// per node per run.
#[derive(Debug, Clone)]
pub enum Controller {
    ObserverFree { params: ObserverFreeParams, table: Option<TanhTable> },
    Classical(ClassicalParams),
    SuperTwisting(SuperTwisting),
    Adaptive(Adaptive),
    None,
}

impl Controller {
    pub fn control(&mut self, x: f64, v: f64, g_val: f64, dt: f64) -> Result<ControlOutput> {
        match self {
            Controller::ObserverFree { params, table: None } => observer_free_control(x, v, g_val, params),
            Controller::ObserverFree { params, table: Some(t) } => {
                observer_free_with(x, v, g_val, params, |a| t.eval(a))
            }
            Controller::Classical(p) => classical_smc_control(x, v, p),
            Controller::SuperTwisting(st) => super_twisting_control(x, v, dt, st),
            Controller::Adaptive(ad) => adaptive_smc_control(x, v, dt, ad),
            Controller::None => {
                check_inputs(x, v)?;
                Ok(ControlOutput::ZERO)
            }
        }
    }
}
