//! Performance metrics and the controller comparison matrix.
//!
//! Definitions (samples `k = 0..n`, uniform spacing `dt`):
//!
//! | metric | formula |
//! |---|---|
//! | settling time | smallest `t_k` with `|x_j| <= band` for all `j >= k` |
//! | overshoot | `max(0, max_k sign(x0 - r) (r - x_k)) / |x0 - r|` |
//! | chattering index | `sum_k |u_{k+1} - u_k|` (total variation) |
//! | control effort | `sum_k u_k^2 dt` |
//! | max slew | `max_k |u_{k+1} - u_k| / dt` |
//! | Lyapunov violations | `#{k : V_{k+1} - V_k > 1e-9}` |
//! | epsilon hat | `min_{k : s_k^2 > 1e-6} (V_k - V_{k+1}) / (s_k^2 dt)` |
//! | sync error | per-sample population std of node positions |
//! | steady-state error | mean `|x_k|` over the last 10% of samples |
//!
//! Networks use `max_i |x_i|` for settling and steady-state error, the mean
//! angle for overshoot, the largest per-node value for chattering and slew,
//! and summed `V` / `s^2` for the Lyapunov statistics.

use std::collections::BTreeMap;
use std::fmt::Write as _;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::sim::TimeSeries;

/// Threshold on `V_{k+1} - V_k` counted as a Lyapunov increase.
pub const LYAP_INCREASE_TOL: f64 = 1e-9;
/// Samples with `s^2` at or below this are excluded from epsilon hat.
pub const LYAP_MIN_S2: f64 = 1e-6;

pub fn settling_time(x: &[f64], band: f64, dt: f64) -> Result<Option<f64>> {
    if x.is_empty() {
        return Err(Error::invalid_input("settling_time of an empty series"));
    }
    if !(band > 0.0) {
        return Err(Error::invalid_input(format!("band must be positive, got {band}")));
    }
    let outside = x.iter().rposition(|v| !(v.abs() <= band));
    Ok(match outside {
        None => Some(0.0),
        Some(k) if k + 1 == x.len() => None,
        Some(k) => Some((k + 1) as f64 * dt),
    })
}

pub fn chattering_index(u: &[f64]) -> Result<f64> {
    if u.len() < 2 {
        return Err(Error::invalid_input(format!(
            "chattering index needs at least 2 samples, got {}",
            u.len()
        )));
    }
    Ok(u.windows(2).map(|w| (w[1] - w[0]).abs()).sum())
}

pub fn overshoot(x: &[f64], target: f64, x0: f64) -> Result<f64> {
    let span = x0 - target;
    if span == 0.0 {
        return Err(Error::UndefinedNormalization);
    }
    let dir = span.signum();
    let worst = x.iter().map(|&xk| dir * (target - xk)).fold(0.0, f64::max);
    Ok(worst / span.abs())
}

pub fn control_effort(u: &[f64], dt: f64) -> f64 {
    u.iter().map(|v| v * v).sum::<f64>() * dt
}

pub fn max_slew(u: &[f64], dt: f64) -> f64 {
    u.windows(2).map(|w| (w[1] - w[0]).abs()).fold(0.0, f64::max) / dt
}

/// Increase count and empirical decay rate of `V`. `epsilon_hat` is `None`
/// when no sample has `s^2 > 1e-6`.
pub fn lyapunov_stats(v: &[f64], s: &[f64], dt: f64) -> (usize, Option<f64>) {
    let mut violations = 0;
    let mut eps: Option<f64> = None;
    for k in 0..v.len().saturating_sub(1) {
        let dv = v[k + 1] - v[k];
        if dv > LYAP_INCREASE_TOL {
            violations += 1;
        }
        let s2 = s[k] * s[k];
        if s2 > LYAP_MIN_S2 {
            let rate = -dv / (s2 * dt);
            eps = Some(eps.map_or(rate, |e| e.min(rate)));
        }
    }
    (violations, eps)
}

/// Per-sample standard deviation of node positions and its final value.
pub fn sync_error(series: &TimeSeries) -> Result<(Vec<f64>, f64)> {
    let n = series.nodes.len();
    if n < 2 {
        return Err(Error::invalid_input(format!("sync error needs at least 2 nodes, got {n}")));
    }
    let errs: Vec<f64> = (0..series.len())
        .map(|k| {
            let mean = series.nodes.iter().map(|nd| nd.x[k]).sum::<f64>() / n as f64;
            let var = series.nodes.iter().map(|nd| (nd.x[k] - mean).powi(2)).sum::<f64>() / n as f64;
            var.sqrt()
        })
        .collect();
    let last = errs.last().copied().unwrap_or(0.0);
    Ok((errs, last))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MetricsReport {
    pub settling_time: Option<f64>,
    pub overshoot: Option<f64>,
    pub chattering_index: f64,
    pub control_effort: f64,
    pub max_abs_u: f64,
    pub max_slew: f64,
    pub lyap_violation_count: usize,
    pub lyap_violation_fraction: f64,
    pub lyap_epsilon_hat: Option<f64>,
    pub sync_error_final: Option<f64>,
    pub steady_state_error: f64,
    pub t_final: f64,
}

impl MetricsReport {
    pub fn compute(series: &TimeSeries, band: f64) -> Result<Self> {
        let dt = series
            .sample_dt()
            .ok_or_else(|| Error::invalid_input("metrics need at least 2 samples"))?;
        let nodes = &series.nodes;
        let envelope = series.max_abs_x();
        let mean = series.mean_x();
        let x0 = mean[0];
        let overshoot = match overshoot(&mean, 0.0, x0) {
            Ok(v) => Some(v),
            Err(Error::UndefinedNormalization) => None,
            Err(e) => return Err(e),
        };
        let mut chattering = 0.0f64;
        let mut effort = 0.0;
        let mut max_u = 0.0f64;
        let mut slew = 0.0f64;
        for nd in nodes {
            chattering = chattering.max(chattering_index(&nd.u)?);
            effort += control_effort(&nd.u, dt);
            max_u = nd.u.iter().fold(max_u, |m, u| m.max(u.abs()));
            slew = slew.max(max_slew(&nd.u, dt));
        }
        let lyap = series.total_lyap();
        let s_norm: Vec<f64> = (0..series.len())
            .map(|k| nodes.iter().map(|nd| nd.s[k] * nd.s[k]).sum::<f64>().sqrt())
            .collect();
        let (violations, eps) = lyapunov_stats(&lyap, &s_norm, dt);
        let sync = if nodes.len() > 1 { Some(sync_error(series)?.1) } else { None };
        let tail = (envelope.len() / 10).max(1);
        let sse = envelope[envelope.len() - tail..].iter().sum::<f64>() / tail as f64;
        Ok(Self {
            settling_time: settling_time(&envelope, band, dt)?,
            overshoot,
            chattering_index: chattering,
            control_effort: effort,
            max_abs_u: max_u,
            max_slew: slew,
            lyap_violation_count: violations,
            lyap_violation_fraction: violations as f64 / (series.len() - 1) as f64,
            lyap_epsilon_hat: eps,
            sync_error_final: sync,
            steady_state_error: sse,
            t_final: *series.t.last().unwrap_or(&0.0),
        })
    }

    /// Ordered `(key, value)` pairs; absent values render as `none`.
    pub fn fields(&self) -> Vec<(&'static str, String)> {
        let opt = |v: Option<f64>| v.map_or_else(|| "none".to_string(), |x| format!("{x:?}"));
        vec![
            ("settling_time", opt(self.settling_time)),
            ("overshoot", opt(self.overshoot)),
            ("chattering_index", format!("{:?}", self.chattering_index)),
            ("control_effort", format!("{:?}", self.control_effort)),
            ("max_abs_u", format!("{:?}", self.max_abs_u)),
            ("max_slew", format!("{:?}", self.max_slew)),
            ("lyap_violation_count", self.lyap_violation_count.to_string()),
            ("lyap_violation_fraction", format!("{:?}", self.lyap_violation_fraction)),
            ("lyap_epsilon_hat", opt(self.lyap_epsilon_hat)),
            ("sync_error_final", opt(self.sync_error_final)),
            ("steady_state_error", format!("{:?}", self.steady_state_error)),
            ("t_final", format!("{:?}", self.t_final)),
        ]
    }

    /// Flat `key = value` record preceded by `#` lines with the formulas.
    pub fn to_text(&self, name: &str, band: f64) -> String {
        let mut out = String::new();
        let _ = writeln!(out, "# smc-lab metrics v1: {name}");
        for line in [
            format!("settling_time: first t after which |x| <= {band:?} holds to the end"),
            "overshoot: max(0, max_t sign(x0)(-x(t))) / |x0| on the (mean) angle".into(),
            "chattering_index: sum_k |u[k+1] - u[k]|".into(),
            "control_effort: sum_k u[k]^2 dt".into(),
            "max_slew: max_k |u[k+1] - u[k]| / dt".into(),
            "lyap_violation_count: #{k : V[k+1] - V[k] > 1e-9}, V = s^2/2".into(),
            "lyap_epsilon_hat: min over s[k]^2 > 1e-6 of (V[k] - V[k+1]) / (s[k]^2 dt)".into(),
            "sync_error_final: std across node angles at the last sample".into(),
            "steady_state_error: mean |x| over the last 10% of samples".into(),
        ] {
            let _ = writeln!(out, "# {line}");
        }
        for (k, v) in self.fields() {
            let _ = writeln!(out, "{k} = {v}");
        }
        out
    }

    pub fn csv_header() -> String {
        let names: Vec<&str> = Self::placeholder().fields().into_iter().map(|(k, _)| k).collect();
        names.join(",")
    }

    pub fn csv_row(&self) -> String {
        self.fields().into_iter().map(|(_, v)| v).collect::<Vec<_>>().join(",")
    }

    fn placeholder() -> Self {
        Self {
            settling_time: None,
            overshoot: None,
            chattering_index: 0.0,
            control_effort: 0.0,
            max_abs_u: 0.0,
            max_slew: 0.0,
            lyap_violation_count: 0,
            lyap_violation_fraction: 0.0,
            lyap_epsilon_hat: None,
            sync_error_final: None,
            steady_state_error: 0.0,
            t_final: 0.0,
        }
    }
}

/// Versioned comparison thresholds.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Thresholds {
    pub version: u32,
    pub settling_band: f64,
    pub chattering: f64,
    pub chattering_scale: f64,
    pub slew: f64,
    pub delay_tau: f64,
}

const DEFAULT_THRESHOLDS: &str = include_str!("thresholds.json");

impl Default for Thresholds {
    fn default() -> Self {
        serde_json::from_str(DEFAULT_THRESHOLDS).expect("bundled thresholds.json is valid")
    }
}

/// One controller's evidence for the comparison matrix.
#[derive(Debug, Clone, PartialEq)]
pub struct ComparisonEntry {
    /// Identifies the shared scenario; all entries must agree.
    pub scenario_key: String,
    pub report: MetricsReport,
    pub declared_bound: Option<f64>,
    pub observer_free: bool,
    /// Settling time of the delayed rerun (`None` inside: never settled),
    /// `None` outside when no delayed rerun is available.
    pub delayed_settling: Option<Option<f64>>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Serialize, Deserialize)]
pub enum Property {
    NoChattering,
    ObserverFree,
    BoundedInput,
    DelayTolerant,
    Smoothness,
}

impl Property {
    pub const ALL: [Property; 5] = [
        Property::NoChattering,
        Property::ObserverFree,
        Property::BoundedInput,
        Property::DelayTolerant,
        Property::Smoothness,
    ];

    pub fn label(&self) -> &'static str {
        match self {
            Property::NoChattering => "No Chattering",
            Property::ObserverFree => "Observer-Free",
            Property::BoundedInput => "Bounded Input",
            Property::DelayTolerant => "Delay-Tolerant",
            Property::Smoothness => "Smoothness",
        }
    }

    /// Rows reported for information only; the measured value is not
    /// a faithful test of the property.
    pub fn is_informational(&self) -> bool {
        matches!(self, Property::BoundedInput)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Cell {
    pub pass: bool,
    /// Measured quantity behind the verdict, if any.
    pub measured: Option<f64>,
    pub threshold: Option<f64>,
}

/// Property x controller verdicts, columns in key order of the input map.
#[derive(Debug, Clone, PartialEq)]
pub struct ComparisonMatrix {
    pub controllers: Vec<String>,
    pub rows: BTreeMap<Property, Vec<Cell>>,
}

impl ComparisonMatrix {
    pub fn cell(&self, property: Property, controller: &str) -> Option<&Cell> {
        let col = self.controllers.iter().position(|c| c == controller)?;
        self.rows.get(&property).map(|r| &r[col])
    }

    pub fn passes(&self, property: Property, controller: &str) -> Option<bool> {
        self.cell(property, controller).map(|c| c.pass)
    }

    /// Long-format CSV: one line per (property, controller).
    pub fn to_csv(&self) -> String {
        let mut out = String::from("property,controller,pass,measured,threshold,informational\n");
        for p in Property::ALL {
            for (c, cell) in self.controllers.iter().zip(&self.rows[&p]) {
                let opt = |v: Option<f64>| v.map_or(String::new(), |x| format!("{x:?}"));
                let _ = writeln!(
                    out,
                    "{},{},{},{},{},{}",
                    p.label(),
                    c,
                    cell.pass,
                    opt(cell.measured),
                    opt(cell.threshold),
                    p.is_informational()
                );
            }
        }
        out
    }

    /// Table laid out with properties as rows and controllers as columns,
    /// `+` / `--` followed by the measured value.
    pub fn to_table(&self) -> String {
        let mut out = String::new();
        let _ = write!(out, "{:<16}", "Property");
        for c in &self.controllers {
            let _ = write!(out, " {c:>22}");
        }
        out.push('\n');
        for p in Property::ALL {
            let label = if p.is_informational() { format!("{}*", p.label()) } else { p.label().to_string() };
            let _ = write!(out, "{label:<16}");
            for cell in &self.rows[&p] {
                let mark = if cell.pass { "+" } else { "--" };
                let text = match cell.measured {
                    Some(m) => format!("{mark} ({m:.3e})"),
                    None => mark.to_string(),
                };
                let _ = write!(out, " {text:>22}");
            }
            out.push('\n');
        }
        out
    }
}

pub fn comparison_matrix(
    entries: &BTreeMap<String, ComparisonEntry>,
    thresholds: &Thresholds,
) -> Result<ComparisonMatrix> {
    if entries.len() < 2 {
        return Err(Error::InvalidComparison(format!(
            "need at least 2 controllers, got {}",
            entries.len()
        )));
    }
    let mut keys = entries.values().map(|e| &e.scenario_key);
    let first = keys.next().cloned().unwrap_or_default();
    if keys.any(|k| *k != first) {
        return Err(Error::InvalidComparison("entries come from different scenarios".into()));
    }

    let chat_limit = thresholds.chattering * thresholds.chattering_scale;
    let mut rows: BTreeMap<Property, Vec<Cell>> = BTreeMap::new();
    for e in entries.values() {
        let r = &e.report;
        let cells = [
            (
                Property::NoChattering,
                Cell { pass: r.chattering_index < chat_limit, measured: Some(r.chattering_index), threshold: Some(chat_limit) },
            ),
            (Property::ObserverFree, Cell { pass: e.observer_free, measured: None, threshold: None }),
            (
                Property::BoundedInput,
                Cell {
                    pass: e.declared_bound.is_some_and(|b| r.max_abs_u <= b + 1e-12),
                    measured: Some(r.max_abs_u),
                    threshold: e.declared_bound,
                },
            ),
            (
                Property::DelayTolerant,
                Cell {
                    pass: matches!(e.delayed_settling, Some(Some(_))),
                    measured: e.delayed_settling.flatten(),
                    threshold: Some(thresholds.delay_tau),
                },
            ),
            (
                Property::Smoothness,
                Cell { pass: r.max_slew < thresholds.slew, measured: Some(r.max_slew), threshold: Some(thresholds.slew) },
            ),
        ];
        for (p, c) in cells {
            rows.entry(p).or_default().push(c);
        }
    }
    let mut order: Vec<usize> = (0..entries.len()).collect();
    let names: Vec<&String> = entries.keys().collect();
    order.sort_by_key(|&i| (column_rank(names[i]), names[i].clone()));
    let rows = rows
        .into_iter()
        .map(|(p, cells)| (p, order.iter().map(|&i| cells[i].clone()).collect()))
        .collect();
    Ok(ComparisonMatrix { controllers: order.iter().map(|&i| names[i].clone()).collect(), rows })
}

/// Baselines first, the observer-free law last; unknown names after.
fn column_rank(controller: &str) -> usize {
    match controller {
        "classical" => 0,
        "super-twisting" => 1,
        "adaptive" => 2,
        "observer-free" => 3,
        _ => 4,
    }
}

#[cfg(test)]
mod tests {
    use approx::assert_abs_diff_eq;

    use super::*;
    use crate::sim::NodeSeries;

    #[test]
    fn settling_examples() {
        assert_eq!(settling_time(&[0.0; 100], 0.02, 1e-3).unwrap(), Some(0.0));

        // Brute-force oracle: scan every candidate start index.
        let x: Vec<f64> = (0..10_000).map(|k| if k < 3200 { 0.5 } else { 0.01 }).collect();
        let oracle = (0..x.len()).find(|&k| x[k..].iter().all(|v| v.abs() <= 0.02)).unwrap();
        assert_eq!(oracle, 3200);
        assert_abs_diff_eq!(settling_time(&x, 0.02, 1e-3).unwrap().unwrap(), 3.2, epsilon = 1e-12);

        assert_eq!(settling_time(&[0.0, 0.0, 1.0], 0.02, 1e-3).unwrap(), None);
        assert!(settling_time(&[], 0.02, 1e-3).is_err());
        assert!(settling_time(&[0.0], 0.0, 1e-3).is_err());
    }

    #[test]
    fn chattering_examples() {
        assert_eq!(chattering_index(&[1.5; 10]).unwrap(), 0.0);
        let alt: Vec<f64> = (0..11).map(|k| if k % 2 == 0 { 2.0 } else { -2.0 }).collect();
        assert_eq!(chattering_index(&alt).unwrap(), 40.0);
        assert!(chattering_index(&[1.0]).is_err());

        // Total variation of a monotone signal equals its range, 2 tanh(5).
        const TWO_TANH_5: f64 = 1.999_818_408_525_190_3;
        let u: Vec<f64> = (0..=10_000).map(|k| (k as f64 * 1e-3 - 5.0).tanh()).collect();
        assert_abs_diff_eq!(chattering_index(&u).unwrap(), TWO_TANH_5, epsilon = 1e-12);
    }

    #[test]
    fn overshoot_examples() {
        let decay: Vec<f64> = (0..100).map(|k| 0.5 * (-0.1 * k as f64).exp()).collect();
        assert_eq!(overshoot(&decay, 0.0, 0.5).unwrap(), 0.0);
        assert_abs_diff_eq!(overshoot(&[0.5, 0.1, -0.05, 0.0], 0.0, 0.5).unwrap(), 0.1, epsilon = 1e-15);
        assert_abs_diff_eq!(overshoot(&[-0.5, 0.1, 0.0], 0.0, -0.5).unwrap(), 0.2, epsilon = 1e-15);
        assert!(matches!(overshoot(&[0.0], 0.0, 0.0), Err(Error::UndefinedNormalization)));
    }

    #[test]
    fn lyapunov_examples() {
        let v: Vec<f64> = (0..50).map(|k| 1.0 / (1.0 + k as f64)).collect();
        let s: Vec<f64> = v.iter().map(|v| (2.0 * v).sqrt()).collect();
        let (count, eps) = lyapunov_stats(&v, &s, 1e-3);
        assert_eq!(count, 0);
        assert!(eps.unwrap() > 0.0);

        let (count, eps) = lyapunov_stats(&[0.0; 10], &[0.0; 10], 1e-3);
        assert_eq!(count, 0);
        assert_eq!(eps, None);

        let (count, _) = lyapunov_stats(&[1.0, 0.5, 0.7, 0.1], &[1.0; 4], 1e-3);
        assert_eq!(count, 1);
    }

    fn two_node(a: Vec<f64>, b: Vec<f64>) -> TimeSeries {
        let n = a.len();
        let node = |x: Vec<f64>| NodeSeries { x, ..NodeSeries::default() };
        TimeSeries {
            t: (0..n).map(|k| k as f64).collect(),
            nodes: vec![node(a), node(b)],
            d: vec![0.0; n],
            diverged_at: None,
        }
    }

    #[test]
    fn sync_error_examples() {
        let same = two_node(vec![0.1, 0.2, 0.3], vec![0.1, 0.2, 0.3]);
        let (errs, last) = sync_error(&same).unwrap();
        assert!(errs.iter().all(|&e| e == 0.0));
        assert_eq!(last, 0.0);

        let apart = two_node(vec![0.0; 4], vec![1.0; 4]);
        let (errs, last) = sync_error(&apart).unwrap();
        assert!(errs.iter().all(|&e| e == 0.5));
        assert_eq!(last, 0.5);

        let mut single = apart.clone();
        single.nodes.pop();
        assert!(sync_error(&single).is_err());
    }

    #[test]
    fn default_thresholds() {
        let t = Thresholds::default();
        assert_eq!(t.version, 1);
        assert_eq!(t.settling_band, 0.02);
        assert_eq!(t.chattering, 10.0);
        assert_eq!(t.slew, 1e3);
        assert_eq!(t.delay_tau, 0.01);
    }

    fn entry(key: &str, chattering: f64, slew: f64) -> ComparisonEntry {
        let mut report = MetricsReport::placeholder();
        report.chattering_index = chattering;
        report.max_slew = slew;
        report.max_abs_u = 1.0;
        ComparisonEntry {
            scenario_key: key.into(),
            report,
            declared_bound: Some(1.0),
            observer_free: true,
            delayed_settling: Some(Some(2.0)),
        }
    }

    #[test]
    fn matrix_verdicts() {
        let mut m = BTreeMap::new();
        m.insert("smooth".to_string(), entry("k", 3.0, 10.0));
        m.insert("rough".to_string(), entry("k", 3e4, 1e4));
        let out = comparison_matrix(&m, &Thresholds::default()).unwrap();
        assert_eq!(out.passes(Property::NoChattering, "smooth"), Some(true));
        assert_eq!(out.passes(Property::NoChattering, "rough"), Some(false));
        assert_eq!(out.passes(Property::Smoothness, "rough"), Some(false));
        assert_eq!(out.passes(Property::DelayTolerant, "rough"), Some(true));
        assert_eq!(out, comparison_matrix(&m, &Thresholds::default()).unwrap());
        assert!(out.to_csv().lines().count() == 11);
    }

    #[test]
    fn matrix_preconditions() {
        let mut m = BTreeMap::new();
        m.insert("a".to_string(), entry("k", 1.0, 1.0));
        assert!(matches!(comparison_matrix(&m, &Thresholds::default()), Err(Error::InvalidComparison(_))));
        m.insert("b".to_string(), entry("other", 1.0, 1.0));
        assert!(matches!(comparison_matrix(&m, &Thresholds::default()), Err(Error::InvalidComparison(_))));
    }

    mod props {
        use proptest::prelude::*;

        use super::*;

        proptest! {
            #[test]
            fn chattering_invariances(u in prop::collection::vec(-10f64..10.0, 2..200), c in -5f64..5.0) {
                let base = chattering_index(&u).unwrap();
                let flipped: Vec<f64> = u.iter().map(|v| -v).collect();
                prop_assert_eq!(chattering_index(&flipped).unwrap(), base);
                let shifted: Vec<f64> = u.iter().map(|v| v + c).collect();
                prop_assert!((chattering_index(&shifted).unwrap() - base).abs() <= 1e-9 * (1.0 + base));
            }

            #[test]
            fn monotone_chattering_is_range(mut u in prop::collection::vec(-10f64..10.0, 2..200)) {
                u.sort_by(f64::total_cmp);
                let tv = chattering_index(&u).unwrap();
                let range = u[u.len() - 1] - u[0];
                prop_assert!((tv - range).abs() <= 1e-12 * (1.0 + range));
            }

            #[test]
            fn settling_monotone_in_band(x in prop::collection::vec(-1f64..1.0, 1..300), b1 in 0.01f64..1.0, b2 in 0.01f64..1.0) {
                let (lo, hi) = if b1 <= b2 { (b1, b2) } else { (b2, b1) };
                let t_lo = settling_time(&x, lo, 1e-3).unwrap();
                let t_hi = settling_time(&x, hi, 1e-3).unwrap();
                match (t_lo, t_hi) {
                    (Some(a), Some(b)) => prop_assert!(b <= a),
                    (Some(_), None) => prop_assert!(false, "wider band never settled"),
                    _ => {}
                }
            }

            #[test]
            fn sync_zero_iff_identical(a in prop::collection::vec(-1f64..1.0, 1..50), bump in prop::option::of(0usize..50)) {
                let mut b = a.clone();
                if let Some(i) = bump {
                    let i = i % b.len();
                    b[i] += 0.5;
                }
                let ts = two_node(a.clone(), b.clone());
                let (errs, _) = sync_error(&ts).unwrap();
                prop_assert_eq!(errs.iter().all(|&e| e == 0.0), a == b);
            }
        }
    }
}
