//! Fixtures shared by the criterion benches.

use smc_lab::scenarios::{builtin_suite, Scenario};

/// Built-in scenario by name, horizon shortened to `t_final` seconds.
pub fn scenario(name: &str, t_final: f64) -> Scenario {
    let mut sc = builtin_suite()
        .into_iter()
        .find(|s| s.name == name)
        .unwrap_or_else(|| panic!("no built-in scenario named {name}"));
    sc.sim.t_final = t_final;
    sc
}
