//! Scenario definitions, validation, the built-in suite and the batch driver.

use std::collections::BTreeMap;
use std::path::Path;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use serde_json::Value;

use crate::controllers::{
    AdaptiveParams, ClassicalParams, ControllerSpec, ObserverFreeParams, SuperTwistingParams,
};
use crate::error::{Error, Result};
use crate::io;
use crate::metrics::{comparison_matrix, ComparisonEntry, ComparisonMatrix, MetricsReport, Thresholds};
use crate::plants::{NetworkParams, PlantSpec};
use crate::sim::{simulate_run, DelaySpec, DisturbanceSpec, NoiseConfig, SimConfig, TimeSeries};

pub const SCHEMA: &str = "smc-lab/scenario/v1";

const PLANT_KINDS: [&str; 4] = ["pendulum", "vdp", "duffing", "network5"];
const CONTROLLER_KINDS: [&str; 5] = ["observer-free", "classical", "super-twisting", "adaptive", "none"];

fn schema_default() -> String {
    SCHEMA.to_string()
}

fn cutoff_default() -> f64 {
    20.0
}

fn is_false(b: &bool) -> bool {
    !*b
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Scenario {
    #[serde(default = "schema_default")]
    pub schema: String,
    pub name: String,
    /// Scenarios sharing a group are compared against each other.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub group: Option<String>,
    pub plant: PlantSpec,
    /// One controller per node.
    pub controllers: Vec<ControllerSpec>,
    /// Flat `[x_1, v_1, ..., x_N, v_N]`.
    pub initial_state: Vec<f64>,
    #[serde(default)]
    pub sim: SimConfig,
    #[serde(default)]
    pub noise: NoiseConfig,
    #[serde(default)]
    pub disturbance: DisturbanceSpec,
    #[serde(default)]
    pub delay: DelaySpec,
    #[serde(default, skip_serializing_if = "is_false")]
    pub estimate_velocity: bool,
    #[serde(default = "cutoff_default")]
    pub velocity_cutoff_hz: f64,
}

impl Scenario {
    /// Noise-free, undisturbed scenario with default simulation settings.
    pub fn new(name: impl Into<String>, plant: PlantSpec, controllers: Vec<ControllerSpec>, initial_state: Vec<f64>) -> Self {
        Self {
            schema: SCHEMA.into(),
            name: name.into(),
            group: None,
            plant,
            controllers,
            initial_state,
            sim: SimConfig::default(),
            noise: NoiseConfig::default(),
            disturbance: DisturbanceSpec::None,
            delay: DelaySpec::default(),
            estimate_velocity: false,
            velocity_cutoff_hz: cutoff_default(),
        }
    }

    pub fn nodes(&self) -> usize {
        match self.plant {
            PlantSpec::Network(p) => p.n,
            _ => 1,
        }
    }

    /// Name of the first controller, the scenario's controller family.
    pub fn controller_name(&self) -> &'static str {
        self.controllers.first().map_or("none", |c| c.name())
    }

    pub fn plant_name(&self) -> &'static str {
        match self.plant {
            PlantSpec::Pendulum(_) => "pendulum",
            PlantSpec::Vdp(_) => "vdp",
            PlantSpec::Duffing(_) => "duffing",
            PlantSpec::Network(_) => "network5",
        }
    }

    /// Every semantic violation, not just the first.
    pub fn violations(&self) -> Vec<String> {
        let mut out = Vec::new();
        if self.schema != SCHEMA {
            out.push(format!("unsupported schema {:?}, expected {SCHEMA:?}", self.schema));
        }
        if self.name.is_empty()
            || !self.name.chars().all(|c| c.is_ascii_alphanumeric() || matches!(c, '_' | '-' | '.'))
            || self.name.starts_with('.')
        {
            out.push(format!("name {:?} must be non-empty and use only [A-Za-z0-9_.-]", self.name));
        }
        out.extend(self.plant.violations());
        let n = self.nodes();
        if self.controllers.len() != n {
            out.push(format!(
                "dimension mismatch: plant has {n} node(s) but {} controller(s) given",
                self.controllers.len()
            ));
        }
        for c in &self.controllers {
            out.extend(c.violations());
        }
        if self.initial_state.len() != 2 * n {
            out.push(format!(
                "dimension mismatch: initial_state has length {}, expected {}",
                self.initial_state.len(),
                2 * n
            ));
        }
        if self.initial_state.iter().any(|v| !v.is_finite()) {
            out.push("initial_state must be finite".into());
        }
        out.extend(self.sim.violations());
        if !(self.noise.std_x >= 0.0 && self.noise.std_v >= 0.0)
            || !(self.noise.std_x.is_finite() && self.noise.std_v.is_finite())
        {
            out.push("noise standard deviations must be finite and >= 0".into());
        }
        if let DisturbanceSpec::Sinusoid { amplitude, omega } = self.disturbance {
            if !(amplitude >= 0.0 && omega >= 0.0 && amplitude.is_finite() && omega.is_finite()) {
                out.push("disturbance amplitude and omega must be finite and >= 0".into());
            }
        }
        if !(self.delay.tau >= 0.0 && self.delay.tau.is_finite()) {
            out.push(format!("delay.tau must be >= 0, got {}", self.delay.tau));
        }
        if !(self.velocity_cutoff_hz > 0.0 && self.velocity_cutoff_hz.is_finite()) {
            out.push(format!("velocity_cutoff_hz must be positive, got {}", self.velocity_cutoff_hz));
        }
        out
    }

    pub fn check(&self) -> Result<()> {
        let v = self.violations();
        if v.is_empty() {
            Ok(())
        } else {
            Err(Error::Validation(v))
        }
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("scenario serializes")
    }

    pub fn from_json(text: &str) -> Result<Self> {
        let raw: Value = serde_json::from_str(text)?;
        validate(&raw)
    }

    pub fn load(path: &Path) -> Result<Self> {
        Self::from_json(&std::fs::read_to_string(path)?)
    }

    /// Key identifying everything but the controller, for comparisons.
    pub fn comparison_key(&self) -> String {
        let mut probe = self.clone();
        probe.name.clear();
        probe.group = None;
        probe.controllers.clear();
        serde_json::to_string(&probe).expect("scenario serializes")
    }
}

/// Turns a parsed JSON document into a scenario, collecting every problem.
pub fn validate(raw: &Value) -> Result<Scenario> {
    let mut errs = Vec::new();
    match raw.get("plant").and_then(|p| p.get("kind")).and_then(Value::as_str) {
        Some(k) if PLANT_KINDS.contains(&k) || k == "network" => {}
        Some(k) => errs.push(format!("unknown plant {k:?}, expected one of {PLANT_KINDS:?}")),
        None => errs.push("plant.kind is missing".into()),
    }
    match raw.get("controllers").and_then(Value::as_array) {
        Some(list) => {
            for (i, c) in list.iter().enumerate() {
                match c.get("kind").and_then(Value::as_str) {
                    Some(k) if CONTROLLER_KINDS.contains(&k) => {}
                    Some(k) => errs.push(format!(
                        "unknown controller {k:?} at controllers[{i}], expected one of {CONTROLLER_KINDS:?}"
                    )),
                    None => errs.push(format!("controllers[{i}].kind is missing")),
                }
            }
        }
        None => errs.push("controllers must be an array".into()),
    }
    if !errs.is_empty() {
        return Err(Error::Validation(errs));
    }
    let scenario: Scenario =
        serde_json::from_value(raw.clone()).map_err(|e| Error::Validation(vec![e.to_string()]))?;
    scenario.check()?;
    Ok(scenario)
}

/// Applies `path=value` to a JSON document. `path` is dotted; numeric
/// segments index arrays. `controller.<field>` sets the field on every
/// entry of `controllers`. The value is parsed as JSON, falling back to a
/// plain string.
pub fn apply_override(doc: &mut Value, assignment: &str) -> Result<()> {
    let (path, raw) = assignment
        .split_once('=')
        .ok_or_else(|| Error::invalid_config(format!("override {assignment:?} is not of the form path=value")))?;
    let value: Value = serde_json::from_str(raw).unwrap_or_else(|_| Value::String(raw.to_string()));
    let segs: Vec<&str> = path.split('.').collect();
    if segs.first() == Some(&"controller") {
        let list = doc
            .get_mut("controllers")
            .and_then(Value::as_array_mut)
            .ok_or_else(|| Error::invalid_config("scenario has no controllers array"))?;
        for c in list {
            set_path(c, &segs[1..], value.clone(), path)?;
        }
        return Ok(());
    }
    set_path(doc, &segs, value, path)
}

fn set_path(node: &mut Value, segs: &[&str], value: Value, full: &str) -> Result<()> {
    let Some((head, rest)) = segs.split_first() else {
        *node = value;
        return Ok(());
    };
    let child = match node {
        Value::Array(items) => head.parse::<usize>().ok().and_then(|i| items.get_mut(i)),
        Value::Object(map) => {
            if rest.is_empty() {
                map.insert(head.to_string(), value);
                return Ok(());
            }
            Some(map.entry(head.to_string()).or_insert_with(|| Value::Object(Default::default())))
        }
        _ => None,
    };
    match child {
        Some(c) => set_path(c, rest, value, full),
        None => Err(Error::invalid_config(format!("override path {full:?} does not resolve"))),
    }
}

/// Default observer-free amplitude per plant.
fn plant_lambda(plant: &PlantSpec) -> f64 {
    match plant {
        PlantSpec::Pendulum(_) | PlantSpec::Network(_) => 5.0,
        PlantSpec::Vdp(_) | PlantSpec::Duffing(_) => 3.0,
    }
}

/// The four controller families with their default parameters for `plant`.
pub fn default_controllers(plant: &PlantSpec) -> [ControllerSpec; 4] {
    let lambda = plant_lambda(plant);
    [
        ControllerSpec::ObserverFree(ObserverFreeParams::new(1.0, lambda)),
        ControllerSpec::Classical(ClassicalParams { lam_s: 1.0, k: lambda }),
        ControllerSpec::SuperTwisting(SuperTwistingParams::for_bound(1.0, 5.0)),
        ControllerSpec::Adaptive(AdaptiveParams { lam_s: 1.0, gamma: 5.0, phi: 0.05, k0: 1.0, kmax: 50.0 }),
    ]
}

/// Node angles drawn uniformly in `[-0.3, 0.3]` from seed 42, at rest.
pub fn network_initial_state(n: usize) -> Vec<f64> {
    let mut rng = ChaCha8Rng::seed_from_u64(42);
    (0..n).flat_map(|_| [rng.random_range(-0.3..=0.3), 0.0]).collect()
}

pub fn default_initial_state(plant: &PlantSpec) -> Vec<f64> {
    match plant {
        PlantSpec::Pendulum(_) => vec![0.5, 0.0],
        PlantSpec::Vdp(_) => vec![2.0, 0.0],
        PlantSpec::Duffing(_) => vec![1.5, 0.0],
        PlantSpec::Network(p) => network_initial_state(p.n),
    }
}

fn slug(controller: &ControllerSpec) -> String {
    controller.name().replace('-', "_")
}

/// Comparison scenario for one plant and controller family.
pub fn comparison_scenario(figure: &str, plant: PlantSpec, controller: ControllerSpec) -> Scenario {
    let nodes = match plant {
        PlantSpec::Network(p) => p.n,
        _ => 1,
    };
    let mut sc = Scenario::new(
        format!("{figure}_{}_{}", plant_slug(&plant), slug(&controller)),
        plant,
        vec![controller; nodes],
        default_initial_state(&plant),
    );
    sc.group = Some(format!("{figure}_{}", plant_slug(&plant)));
    sc
}

fn plant_slug(plant: &PlantSpec) -> &'static str {
    match plant {
        PlantSpec::Pendulum(_) => "pendulum",
        PlantSpec::Vdp(_) => "vdp",
        PlantSpec::Duffing(_) => "duffing",
        PlantSpec::Network(_) => "network5",
    }
}

/// Noise level used by the robustness scenarios.
pub const ROBUSTNESS_NOISE: NoiseConfig = NoiseConfig { std_x: 0.01, std_v: 0.01 };

/// Comparison runs for every plant and controller, the three Van der Pol
/// robustness runs (nominal, noise, perturbation) and one input-delay probe.
pub fn builtin_suite() -> Vec<Scenario> {
    let mut suite = Vec::new();
    let plants = [
        ("fig1", PlantSpec::pendulum()),
        ("fig2", PlantSpec::vdp()),
        ("fig3", PlantSpec::duffing()),
        ("fig4", PlantSpec::Network(NetworkParams::default())),
    ];
    for (fig, plant) in plants {
        for c in default_controllers(&plant) {
            suite.push(comparison_scenario(fig, plant, c));
        }
    }

    let vdp = PlantSpec::vdp();
    let of = default_controllers(&vdp)[0];
    let base = |name: &str| {
        let mut sc = Scenario::new(name, vdp, vec![of], default_initial_state(&vdp));
        sc.group = Some("robustness_vdp".into());
        sc
    };
    suite.push(base("fig5_vdp_nominal"));
    let mut noisy = base("fig6_vdp_noise");
    noisy.noise = ROBUSTNESS_NOISE;
    suite.push(noisy);
    let mut perturbed = base("fig7_vdp_perturbation");
    perturbed.disturbance = DisturbanceSpec::sinusoid(0.2, 5.0);
    suite.push(perturbed);

    let pend = PlantSpec::pendulum();
    let mut delayed = Scenario::new(
        "delay_pendulum_observer_free_tau10ms",
        pend,
        vec![default_controllers(&pend)[0]],
        default_initial_state(&pend),
    );
    delayed.delay = DelaySpec { tau: 0.01 };
    suite.push(delayed);
    suite
}

/// A plotted view of a suite run: figure id, scenario and column.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct FigureView {
    pub id: &'static str,
    pub scenario: &'static str,
    pub column: &'static str,
}

/// State and control-signal views of the robustness runs.
pub const ROBUSTNESS_VIEWS: [FigureView; 6] = [
    FigureView { id: "fig5_state_nominal", scenario: "fig5_vdp_nominal", column: "x" },
    FigureView { id: "fig6_state_noise", scenario: "fig6_vdp_noise", column: "x" },
    FigureView { id: "fig7_state_perturbation", scenario: "fig7_vdp_perturbation", column: "x" },
    FigureView { id: "fig8_u_nominal", scenario: "fig5_vdp_nominal", column: "u" },
    FigureView { id: "fig9_u_noise", scenario: "fig6_vdp_noise", column: "u" },
    FigureView { id: "fig10_u_perturbation", scenario: "fig7_vdp_perturbation", column: "u" },
];

#[derive(Debug, Clone)]
pub struct RunResult {
    pub scenario: Scenario,
    pub series: TimeSeries,
    pub report: MetricsReport,
}

#[derive(Debug, Clone, Default)]
pub struct SuiteOutcome {
    pub runs: BTreeMap<String, RunResult>,
    pub failures: BTreeMap<String, String>,
    /// Comparison matrix per group of at least two controller families.
    pub matrices: BTreeMap<String, ComparisonMatrix>,
}

/// Simulates and scores one scenario.
pub fn run_one(scenario: &Scenario, thresholds: &Thresholds) -> Result<RunResult> {
    let series = simulate_run(scenario)?;
    let report = MetricsReport::compute(&series, thresholds.settling_band)?;
    Ok(RunResult { scenario: scenario.clone(), series, report })
}

fn pool(parallelism: usize) -> Result<rayon::ThreadPool> {
    if parallelism == 0 {
        return Err(Error::invalid_config("parallelism must be at least 1"));
    }
    rayon::ThreadPoolBuilder::new()
        .num_threads(parallelism)
        .build()
        .map_err(|e| Error::invalid_config(e.to_string()))
}

/// Runs every scenario on `parallelism` workers. Failures are collected
/// per scenario; the result does not depend on `parallelism`.
pub fn run_suite(suite: &[Scenario], parallelism: usize) -> Result<SuiteOutcome> {
    run_suite_with(suite, parallelism, &Thresholds::default())
}

pub fn run_suite_with(suite: &[Scenario], parallelism: usize, thresholds: &Thresholds) -> Result<SuiteOutcome> {
    let mut seen = std::collections::BTreeSet::new();
    for sc in suite {
        if !seen.insert(sc.name.as_str()) {
            return Err(Error::invalid_config(format!("duplicate scenario name {:?}", sc.name)));
        }
    }

    // Comparison groups need one delayed rerun per member.
    let groups = comparison_groups(suite);
    let delayed: Vec<Scenario> = groups
        .values()
        .flatten()
        .map(|sc| {
            let mut d = (*sc).clone();
            d.delay = DelaySpec { tau: thresholds.delay_tau };
            d
        })
        .collect();

    let pool = pool(parallelism)?;
    let (main, reruns): (Vec<_>, Vec<_>) = pool.install(|| {
        let main = suite.par_iter().map(|sc| (sc.name.clone(), run_one(sc, thresholds))).collect();
        let reruns: Vec<_> = delayed
            .par_iter()
            .map(|sc| (sc.name.clone(), simulate_run(sc).ok().map(|ts| MetricsReport::compute(&ts, thresholds.settling_band))))
            .collect();
        (main, reruns)
    });

    let mut out = SuiteOutcome::default();
    for (name, res) in main {
        match res {
            Ok(r) => {
                out.runs.insert(name, r);
            }
            Err(e) => {
                out.failures.insert(name, e.to_string());
            }
        }
    }
    let delayed_settling: BTreeMap<String, Option<f64>> = reruns
        .into_iter()
        .map(|(name, rep)| (name, rep.and_then(|r| r.ok()).and_then(|r| r.settling_time)))
        .collect();

    for (group, members) in groups {
        let mut entries = BTreeMap::new();
        for sc in members {
            let Some(run) = out.runs.get(&sc.name) else { continue };
            entries.insert(
                sc.controller_name().to_string(),
                ComparisonEntry {
                    scenario_key: sc.comparison_key(),
                    report: run.report.clone(),
                    declared_bound: sc.controllers[0].declared_bound(),
                    observer_free: sc.controllers[0].is_observer_free(),
                    delayed_settling: delayed_settling.get(&sc.name).copied(),
                },
            );
        }
        match comparison_matrix(&entries, thresholds) {
            Ok(m) => {
                out.matrices.insert(group, m);
            }
            Err(e) => {
                out.failures.insert(format!("matrix:{group}"), e.to_string());
            }
        }
    }
    Ok(out)
}

/// Groups whose members use at least two distinct controller families.
fn comparison_groups(suite: &[Scenario]) -> BTreeMap<String, Vec<&Scenario>> {
    let mut groups: BTreeMap<String, Vec<&Scenario>> = BTreeMap::new();
    for sc in suite {
        if let Some(g) = &sc.group {
            groups.entry(g.clone()).or_default().push(sc);
        }
    }
    groups.retain(|_, members| {
        let kinds: std::collections::BTreeSet<_> = members.iter().map(|s| s.controller_name()).collect();
        kinds.len() >= 2
    });
    groups
}

impl SuiteOutcome {
    /// Writes `<name>.csv` and `<name>.metrics.txt` per run, `summary.csv`,
    /// `matrix_<group>.csv` per comparison group and `failures.txt` when
    /// anything failed. File names depend only on scenario names.
    pub fn write(&self, out_dir: &Path, thresholds: &Thresholds) -> Result<()> {
        std::fs::create_dir_all(out_dir)?;
        for (name, run) in &self.runs {
            io::write_timeseries_csv(&out_dir.join(format!("{name}.csv")), &run.series)?;
            std::fs::write(
                out_dir.join(format!("{name}.metrics.txt")),
                run.report.to_text(name, thresholds.settling_band),
            )?;
        }
        std::fs::write(out_dir.join("summary.csv"), self.summary_csv())?;
        for (group, m) in &self.matrices {
            std::fs::write(out_dir.join(format!("matrix_{group}.csv")), m.to_csv())?;
        }
        let failures = out_dir.join("failures.txt");
        if self.failures.is_empty() {
            if failures.exists() {
                std::fs::remove_file(failures)?;
            }
        } else {
            let text: String = self.failures.iter().map(|(k, v)| format!("{k}: {v}\n")).collect();
            std::fs::write(failures, text)?;
        }
        Ok(())
    }

    pub fn summary_csv(&self) -> String {
        let mut out = format!("name,plant,controller,{}\n", MetricsReport::csv_header());
        for (name, run) in &self.runs {
            out.push_str(&format!(
                "{name},{},{},{}\n",
                run.scenario.plant_name(),
                run.scenario.controller_name(),
                run.report.csv_row()
            ));
        }
        out
    }
}
