use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::{anyhow, Context};
use clap::{Parser, Subcommand};
use serde_json::Value;
use smc_lab::io::{read_csv, write_timeseries_csv, CsvTable};
use smc_lab::metrics::{MetricsReport, Thresholds};
use smc_lab::scenarios::{
    apply_override, builtin_suite, run_suite_with, validate, Scenario, SuiteOutcome, ROBUSTNESS_VIEWS,
};
use smc_lab::sim::{simulate_run, TimeSeries};
use smc_lab::Error;

mod svg;

use svg::{axis_label, LineChart, Trace};

const DEFAULT_OUT: &str = "smc-lab-out";

const EXAMPLES: &str = "\
Examples:
  smc-lab run scenarios/fig1_pendulum_observer_free.json --set controller.lambda=3
  smc-lab suite --out results --parallelism 4
  smc-lab plot results/fig5_vdp_nominal.csv results/fig6_vdp_noise.csv --columns u --out u.svg

Exit codes: 0 ok, 1 I/O error, 2 configuration error, 3 divergence, 4 partial suite failure.
The SMC_LAB_OUT environment variable sets the default output directory.";

#[derive(Parser)]
#[command(name = "smc-lab", version, about = "Sliding mode control simulation laboratory", after_help = EXAMPLES)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Validate and simulate one scenario; write <name>.csv, <name>.metrics.txt and <name>.svg.
    #[command(after_help = "Example:\n  smc-lab run scenarios/fig1_pendulum_observer_free.json --dt 0.0005 --out out\n\n\
        SCENARIO is a JSON file or builtin:<name> for a built-in scenario.")]
    Run {
        scenario: String,
        /// Dotted-path override applied before validation, e.g. controller.lambda=5.
        #[arg(long = "set", value_name = "PATH=VALUE")]
        set: Vec<String>,
        /// Shorthand for --set sim.dt=<DT>.
        #[arg(long)]
        dt: Option<f64>,
        /// Output directory.
        #[arg(long, env = "SMC_LAB_OUT", default_value = DEFAULT_OUT)]
        out: PathBuf,
        /// Skip the SVG plot.
        #[arg(long)]
        no_plot: bool,
    },
    /// Run the built-in benchmark suite, write every artifact and print the comparison tables.
    #[command(after_help = "Example:\n  smc-lab suite --out results --parallelism 4")]
    Suite {
        /// Output directory.
        #[arg(long, env = "SMC_LAB_OUT", default_value = DEFAULT_OUT)]
        out: PathBuf,
        /// Number of worker threads.
        #[arg(long, short = 'j', default_value_t = 1)]
        parallelism: usize,
    },
    /// Render columns of one or more run CSVs as an SVG line chart against t.
    #[command(after_help = "Example:\n  smc-lab plot out/fig1_pendulum_observer_free.csv --columns x,u --out fig1.svg")]
    Plot {
        #[arg(required = true)]
        csv: Vec<PathBuf>,
        /// Comma-separated column names.
        #[arg(long, value_delimiter = ',', default_value = "x")]
        columns: Vec<String>,
        /// Output SVG path.
        #[arg(long)]
        out: PathBuf,
    },
}

/// Failure with its process exit code.
#[derive(Debug)]
enum Failure {
    Io(anyhow::Error),
    Config(anyhow::Error),
    Divergence(anyhow::Error),
    Partial(anyhow::Error),
}

impl Failure {
    fn code(&self) -> u8 {
        match self {
            Failure::Io(_) => 1,
            Failure::Config(_) => 2,
            Failure::Divergence(_) => 3,
            Failure::Partial(_) => 4,
        }
    }

    fn error(&self) -> &anyhow::Error {
        match self {
            Failure::Io(e) | Failure::Config(e) | Failure::Divergence(e) | Failure::Partial(e) => e,
        }
    }
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        match e {
            Error::Io(_) => Failure::Io(e.into()),
            Error::Diverged { .. } | Error::NonFinite { .. } => Failure::Divergence(e.into()),
            other => Failure::Config(other.into()),
        }
    }
}

fn io_err(e: impl Into<anyhow::Error>) -> Failure {
    Failure::Io(e.into())
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = match cli.command {
        Command::Run { scenario, set, dt, out, no_plot } => cmd_run(&scenario, &set, dt, &out, !no_plot),
        Command::Suite { out, parallelism } => cmd_suite(&out, parallelism),
        Command::Plot { csv, columns, out } => cmd_plot(&csv, &columns, &out),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(f) => {
            eprintln!("error: {:#}", f.error());
            ExitCode::from(f.code())
        }
    }
}

fn load_document(source: &str) -> Result<Value, Failure> {
    if let Some(name) = source.strip_prefix("builtin:") {
        let sc = builtin_suite()
            .into_iter()
            .find(|s| s.name == name)
            .ok_or_else(|| Failure::Config(anyhow!("no built-in scenario named {name:?}")))?;
        return serde_json::to_value(&sc).map_err(|e| Failure::Config(e.into()));
    }
    let text = std::fs::read_to_string(source)
        .with_context(|| format!("cannot read scenario {source}"))
        .map_err(Failure::Io)?;
    serde_json::from_str(&text)
        .with_context(|| format!("{source} is not valid JSON"))
        .map_err(Failure::Config)
}

fn cmd_run(source: &str, overrides: &[String], dt: Option<f64>, out: &Path, plot: bool) -> Result<(), Failure> {
    let mut doc = load_document(source)?;
    for o in overrides {
        apply_override(&mut doc, o)?;
    }
    if let Some(dt) = dt {
        apply_override(&mut doc, &format!("sim.dt={dt:?}"))?;
    }
    let scenario = validate(&doc)?;
    let thresholds = Thresholds::default();
    std::fs::create_dir_all(out).map_err(io_err)?;
    let name = scenario.name.clone();

    let (series, diverged) = match simulate_run(&scenario) {
        Ok(ts) => (ts, None),
        Err(Error::Diverged { t, partial }) => (*partial, Some(t)),
        Err(e) => return Err(e.into()),
    };
    write_timeseries_csv(&out.join(format!("{name}.csv")), &series)?;
    let metrics_path = out.join(format!("{name}.metrics.txt"));
    match MetricsReport::compute(&series, thresholds.settling_band) {
        Ok(report) => {
            let text = report.to_text(&name, thresholds.settling_band);
            std::fs::write(&metrics_path, &text).map_err(io_err)?;
            print!("{}", text.lines().filter(|l| !l.starts_with('#')).map(|l| format!("{l}\n")).collect::<String>());
        }
        Err(_) => {
            std::fs::write(&metrics_path, format!("# smc-lab metrics v1: {name}\ndiverged = true\n")).map_err(io_err)?;
        }
    }
    if plot {
        let svg = state_chart(&name, &series).render();
        std::fs::write(out.join(format!("{name}.svg")), svg).map_err(io_err)?;
    }
    match diverged {
        Some(t) => Err(Failure::Divergence(anyhow!("{name} diverged at t = {t}; partial CSV written"))),
        None => Ok(()),
    }
}

/// Positions of every node against time.
fn state_chart(name: &str, series: &TimeSeries) -> LineChart {
    let names = series.column_names();
    let cols = series.columns();
    let traces = names
        .iter()
        .zip(&cols)
        .filter(|(n, _)| *n == "x" || n.starts_with("x_"))
        .map(|(n, c)| Trace { label: n.clone(), xs: series.t.clone(), ys: c.to_vec() })
        .collect();
    LineChart { title: name.to_string(), x_label: axis_label("t"), y_label: axis_label("x"), traces }
}

fn cmd_suite(out: &Path, parallelism: usize) -> Result<(), Failure> {
    let suite = builtin_suite();
    let thresholds = Thresholds::default();
    let outcome = run_suite_with(&suite, parallelism, &thresholds)?;
    outcome.write(out, &thresholds)?;
    for sc in &suite {
        std::fs::write(out.join(format!("{}.scenario.json", sc.name)), sc.to_json() + "\n").map_err(io_err)?;
    }
    write_figures(&outcome, out)?;
    print!("{}", summary_table(&outcome));
    for (group, m) in &outcome.matrices {
        println!("\nComparative summary: {group}");
        print!("{}", m.to_table());
    }
    println!("\n* Bounded Input is informational: measured max|u| against the declared a-priori bound.");

    if outcome.failures.is_empty() {
        Ok(())
    } else {
        let list: Vec<String> = outcome.failures.iter().map(|(k, v)| format!("{k}: {v}")).collect();
        Err(Failure::Partial(anyhow!("{} failure(s):\n  {}", list.len(), list.join("\n  "))))
    }
}

fn summary_table(outcome: &SuiteOutcome) -> String {
    let opt = |v: Option<f64>| v.map_or_else(|| "none".to_string(), |x| format!("{x:.3}"));
    let mut s = format!(
        "{:<40} {:>9} {:>9} {:>12} {:>9} {:>10} {:>10}\n",
        "scenario", "settle[s]", "overshoot", "chattering", "max|u|", "lyap_viol", "sync_err"
    );
    for (name, run) in &outcome.runs {
        let r = &run.report;
        s.push_str(&format!(
            "{name:<40} {:>9} {:>9} {:>12.4} {:>9.4} {:>10} {:>10}\n",
            opt(r.settling_time),
            opt(r.overshoot),
            r.chattering_index,
            r.max_abs_u,
            r.lyap_violation_count,
            r.sync_error_final.map_or_else(|| "-".to_string(), |v| format!("{v:.2e}")),
        ));
    }
    for (name, err) in &outcome.failures {
        s.push_str(&format!("{name:<40} FAILED: {err}\n"));
    }
    s
}

/// Comparison overlays per plant plus the robustness state and control views.
fn write_figures(outcome: &SuiteOutcome, out: &Path) -> Result<(), Failure> {
    let mut groups: std::collections::BTreeMap<&str, Vec<&Scenario>> = Default::default();
    for run in outcome.runs.values() {
        if let Some(g) = &run.scenario.group {
            if outcome.matrices.contains_key(g) {
                groups.entry(g.as_str()).or_default().push(&run.scenario);
            }
        }
    }
    for (group, members) in groups {
        let traces = members
            .iter()
            .map(|sc| {
                let ts = &outcome.runs[&sc.name].series;
                Trace { label: sc.controller_name().to_string(), xs: ts.t.clone(), ys: ts.mean_x() }
            })
            .collect();
        let y = if members[0].nodes() > 1 { "mean x".to_string() } else { axis_label("x") };
        let chart = LineChart { title: group.to_string(), x_label: axis_label("t"), y_label: y, traces };
        std::fs::write(out.join(format!("{group}.svg")), chart.render()).map_err(io_err)?;
    }
    for view in ROBUSTNESS_VIEWS {
        let Some(run) = outcome.runs.get(view.scenario) else { continue };
        let ts = &run.series;
        let idx = ts.column_names().iter().position(|c| c == view.column).expect("known column");
        let chart = LineChart {
            title: format!("{} ({})", view.id, view.scenario),
            x_label: axis_label("t"),
            y_label: axis_label(view.column),
            traces: vec![Trace { label: view.column.to_string(), xs: ts.t.clone(), ys: ts.columns()[idx].to_vec() }],
        };
        std::fs::write(out.join(format!("{}.svg", view.id)), chart.render()).map_err(io_err)?;
    }
    Ok(())
}

fn cmd_plot(csvs: &[PathBuf], columns: &[String], out: &Path) -> Result<(), Failure> {
    let tables: Vec<(String, CsvTable)> = csvs
        .iter()
        .map(|p| {
            let stem = p.file_stem().map_or_else(|| p.display().to_string(), |s| s.to_string_lossy().into_owned());
            read_csv(p).map(|t| (stem, t)).map_err(|e| match e {
                Error::Io(io) => Failure::Io(anyhow!("{}: {io}", p.display())),
                other => Failure::Config(anyhow!("{}: {other}", p.display())),
            })
        })
        .collect::<Result<_, _>>()?;

    let mut traces = Vec::new();
    for (stem, table) in &tables {
        let t = table
            .column("t")
            .ok_or_else(|| Failure::Config(anyhow!("{stem}: no t column")))?;
        for col in columns {
            let ys = table.column(col).ok_or_else(|| {
                Failure::Config(anyhow!(
                    "unknown column {col:?} in {stem}; available: {}",
                    table.headers.join(", ")
                ))
            })?;
            let label = if tables.len() > 1 { format!("{stem}:{col}") } else { col.clone() };
            traces.push(Trace { label, xs: t.to_vec(), ys: ys.to_vec() });
        }
    }
    let title = tables.iter().map(|(s, _)| s.as_str()).collect::<Vec<_>>().join(", ");
    let y_label = if columns.len() == 1 { axis_label(&columns[0]) } else { columns.join(", ") };
    let chart = LineChart { title, x_label: axis_label("t"), y_label, traces };
    if let Some(parent) = out.parent().filter(|p| !p.as_os_str().is_empty()) {
        std::fs::create_dir_all(parent).map_err(io_err)?;
    }
    std::fs::write(out, chart.render()).map_err(io_err)?;
    Ok(())
}
