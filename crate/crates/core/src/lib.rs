//! Sliding mode control laboratory.
//!
//! The crate houses an observer-free sliding mode controller built on the
//! decomposition `s = alpha - beta` with `alpha = v + k1 x`, `beta = u / g(x)`
//! and the smooth law `u = -lambda tanh(alpha)`, together with three baseline
//! controllers (classical sign-based SMC, super-twisting and an adaptive
//! boundary-layer SMC), four benchmark plants, a deterministic fixed-step
//! closed-loop simulator and the metrics used to compare them.
//!
//! ```
//! use smc_lab::scenarios::builtin_suite;
//! use smc_lab::sim::simulate_run;
//!
//! let suite = builtin_suite();
//! let fig1 = suite.iter().find(|s| s.name == "fig1_pendulum_observer_free").unwrap();
//! let series = simulate_run(fig1).unwrap();
//! assert!(series.node(0).x.last().unwrap().abs() < 0.02);
//! ```

pub mod controllers;
pub mod error;
pub mod io;
pub mod metrics;
pub mod plants;
pub mod scenarios;
pub mod sim;

pub use controllers::{ControlOutput, Controller, ControllerSpec};
pub use error::{Error, Result};
pub use metrics::{ComparisonMatrix, MetricsReport, Thresholds};
pub use plants::{Plant, PlantSpec};
pub use scenarios::Scenario;
pub use sim::{SimConfig, TimeSeries};
