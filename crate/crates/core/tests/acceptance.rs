//! Acceptance suite: one PASS/FAIL line per criterion, all must pass.

use std::time::Instant;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use smc_lab::controllers::{observer_free_control, sign, tanh_fast, ObserverFreeParams};
use smc_lab::io::timeseries_csv;
use smc_lab::metrics::{Property, Thresholds};
use smc_lab::scenarios::{builtin_suite, run_suite, ROBUSTNESS_NOISE};
use smc_lab::sim::{rk4_step, simulate_run, DisturbanceSpec, NoiseConfig};
use smc_lab::{ControllerSpec, MetricsReport, PlantSpec, Scenario, TimeSeries};

type Outcome = Result<String, String>;
type Criterion = (&'static str, fn() -> Outcome);

fn builtin(name: &str) -> Scenario {
    builtin_suite().into_iter().find(|s| s.name == name).expect(name)
}

fn max_abs_x_in(series: &TimeSeries, from: f64, to: f64) -> f64 {
    series
        .t
        .iter()
        .zip(&series.nodes[0].x)
        .filter(|(t, _)| **t >= from - 1e-9 && **t <= to + 1e-9)
        .map(|(_, x)| x.abs())
        .fold(0.0, f64::max)
}

fn check(ok: bool, detail: String) -> Outcome {
    if ok {
        Ok(detail)
    } else {
        Err(detail)
    }
}

fn stabilization() -> Outcome {
    let sc = builtin("fig1_pendulum_observer_free");
    let start = Instant::now();
    let series = simulate_run(&sc).map_err(|e| e.to_string())?;
    let elapsed = start.elapsed().as_secs_f64();
    let worst = max_abs_x_in(&series, 8.0, 10.0);
    check(worst < 0.02 && elapsed < 1.0, format!("max|x| on [8,10] = {worst:.3e}, runtime {elapsed:.3} s"))
}

fn bounded_input() -> Outcome {
    let outcome = run_suite(&builtin_suite(), 4).map_err(|e| e.to_string())?;
    let mut checked = 0;
    let mut violations = Vec::new();
    for run in outcome.runs.values() {
        for (node, spec) in run.series.nodes.iter().zip(&run.scenario.controllers) {
            if let ControllerSpec::ObserverFree(p) = spec {
                checked += 1;
                let peak = node.u.iter().fold(0.0f64, |m, u| m.max(u.abs()));
                if peak > p.lambda + 1e-12 {
                    violations.push(format!("{} peak {peak}", run.scenario.name));
                }
            }
        }
    }
    check(
        violations.is_empty() && checked > 0 && outcome.failures.is_empty(),
        format!("{checked} observer-free channels, violations {violations:?}"),
    )
}

fn chattering_ratio() -> Outcome {
    let of = simulate_run(&builtin("fig1_pendulum_observer_free")).map_err(|e| e.to_string())?;
    let cl = simulate_run(&builtin("fig1_pendulum_classical")).map_err(|e| e.to_string())?;
    let of = MetricsReport::compute(&of, 0.02).map_err(|e| e.to_string())?;
    let cl = MetricsReport::compute(&cl, 0.02).map_err(|e| e.to_string())?;
    let ratio = of.chattering_index / cl.chattering_index;
    check(ratio < 0.05, format!("ratio {ratio:.3e} ({:.4} / {:.1})", of.chattering_index, cl.chattering_index))
}

fn ulps_apart(a: f64, b: f64) -> u64 {
    if a == b {
        return 0;
    }
    let key = |x: f64| {
        let bits = x.to_bits() as i64;
        if bits < 0 {
            i64::MIN - bits
        } else {
            bits
        }
    };
    key(a).abs_diff(key(b))
}

fn surface_identity() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(7);
    let p = ObserverFreeParams::new(1.0, 5.0);
    let mut worst = 0;
    let mut sign_mismatch = 0;
    for _ in 0..100_000 {
        let x = rng.random_range(-10.0..10.0);
        let v = rng.random_range(-10.0..10.0);
        let out = observer_free_control(x, v, 1.0, &p).map_err(|e| e.to_string())?;
        let alpha = v + p.k1 * x;
        let expected = alpha + p.lambda * alpha.tanh();
        worst = worst.max(ulps_apart(out.s, expected));
        if sign(out.s) != sign(alpha) {
            sign_mismatch += 1;
        }
    }
    check(worst <= 2 && sign_mismatch == 0, format!("max ulps {worst}, sign mismatches {sign_mismatch}"))
}

fn lyapunov_descent() -> Outcome {
    let series = simulate_run(&builtin("fig1_pendulum_observer_free")).map_err(|e| e.to_string())?;
    let report = MetricsReport::compute(&series, 0.02).map_err(|e| e.to_string())?;
    let v_final = *series.nodes[0].lyap.last().ok_or("empty series")?;
    check(
        v_final < 1e-6 && report.lyap_violation_fraction < 0.01,
        format!("V(10) = {v_final:.3e}, violation fraction {:.4}", report.lyap_violation_fraction),
    )
}

fn noise_robustness() -> Outcome {
    let vdp = builtin("fig6_vdp_noise");
    let mut pend = builtin("fig1_pendulum_observer_free");
    pend.noise = ROBUSTNESS_NOISE;
    let mut details = Vec::new();
    let mut ok = true;
    for sc in [vdp, pend] {
        assert_eq!(sc.noise, NoiseConfig { std_x: 0.01, std_v: 0.01 });
        assert_eq!(sc.sim.seed, 42);
        let series = simulate_run(&sc).map_err(|e| format!("{}: {e}", sc.name))?;
        let worst = max_abs_x_in(&series, 8.0, 10.0);
        ok &= worst < 0.05;
        details.push(format!("{} max|x| = {worst:.3e}", sc.plant_name()));
    }
    check(ok, details.join(", "))
}

fn disturbance_rejection() -> Outcome {
    let pend_nominal = builtin("fig1_pendulum_observer_free");
    let mut pend_perturbed = pend_nominal.clone();
    pend_perturbed.disturbance = DisturbanceSpec::sinusoid(0.2, 5.0);
    let pairs = [
        (builtin("fig5_vdp_nominal"), builtin("fig7_vdp_perturbation")),
        (pend_nominal, pend_perturbed),
    ];
    let mut details = Vec::new();
    let mut ok = true;
    for (nominal, perturbed) in pairs {
        let a = simulate_run(&nominal).map_err(|e| e.to_string())?;
        let b = simulate_run(&perturbed).map_err(|e| e.to_string())?;
        let gap = a.nodes[0].x.iter().zip(&b.nodes[0].x).map(|(p, q)| (p - q).abs()).fold(0.0, f64::max);
        ok &= gap < 0.1 && a.len() == b.len();
        details.push(format!("{} sup gap = {gap:.3e}", nominal.plant_name()));
    }
    check(ok, details.join(", "))
}

fn network_sync() -> Outcome {
    let series = simulate_run(&builtin("fig4_network5_observer_free")).map_err(|e| e.to_string())?;
    let report = MetricsReport::compute(&series, 0.02).map_err(|e| e.to_string())?;
    let mean = *series.mean_x().last().ok_or("empty series")?;
    let sync = report.sync_error_final.ok_or("no sync error")?;
    check(mean.abs() < 0.02 && sync < 0.02, format!("|mean x(10)| = {:.3e}, sync error {sync:.3e}", mean.abs()))
}

fn integrator_order() -> Outcome {
    let global_error = |dt: f64| -> Result<f64, String> {
        let n = (1.0 / dt).round() as usize;
        let mut x = vec![1.0];
        for k in 0..n {
            x = rk4_step(|s: &[f64], _, dx: &mut [f64]| dx[0] = -s[0], &x, k as f64 * dt, dt)
                .map_err(|e| e.to_string())?;
        }
        Ok((x[0] - (-1.0f64).exp()).abs())
    };
    let ratio = global_error(1e-2)? / global_error(5e-3)?;
    check((12.0..=20.0).contains(&ratio), format!("error ratio {ratio:.3}"))
}

fn determinism() -> Outcome {
    for name in ["fig6_vdp_noise", "fig4_network5_observer_free"] {
        let sc = builtin(name);
        let a = timeseries_csv(&simulate_run(&sc).map_err(|e| e.to_string())?);
        let b = timeseries_csv(&simulate_run(&sc).map_err(|e| e.to_string())?);
        if a != b {
            return Err(format!("{name}: repeated runs differ"));
        }
    }
    let thresholds = Thresholds::default();
    let dirs = [tempfile::tempdir().unwrap(), tempfile::tempdir().unwrap()];
    for (dir, jobs) in dirs.iter().zip([1, 4]) {
        run_suite(&builtin_suite(), jobs)
            .and_then(|o| o.write(dir.path(), &thresholds))
            .map_err(|e| e.to_string())?;
    }
    let listing = |d: &std::path::Path| {
        let mut names: Vec<_> = std::fs::read_dir(d).unwrap().map(|e| e.unwrap().file_name()).collect();
        names.sort();
        names
    };
    let files = listing(dirs[0].path());
    if files != listing(dirs[1].path()) {
        return Err("suite file sets differ".into());
    }
    for f in &files {
        let a = std::fs::read(dirs[0].path().join(f)).unwrap();
        let b = std::fs::read(dirs[1].path().join(f)).unwrap();
        if a != b {
            return Err(format!("{f:?} differs between parallelism 1 and 4"));
        }
    }
    Ok(format!("repeat runs identical, {} suite files identical for -j1/-j4", files.len()))
}

fn comparison_matrix() -> Outcome {
    let outcome = run_suite(&builtin_suite(), 4).map_err(|e| e.to_string())?;
    let m = outcome.matrices.get("fig1_pendulum").ok_or("no pendulum matrix")?;
    let expect_pass = [
        Property::NoChattering,
        Property::Smoothness,
        Property::BoundedInput,
        Property::ObserverFree,
        Property::DelayTolerant,
    ];
    let mut bad = Vec::new();
    for p in expect_pass {
        if m.passes(p, "observer-free") != Some(true) {
            bad.push(format!("observer-free {}", p.label()));
        }
    }
    if m.passes(Property::NoChattering, "classical") != Some(false) {
        bad.push("classical NoChattering should fail".into());
    }
    check(bad.is_empty(), if bad.is_empty() { "pendulum matrix as expected".into() } else { bad.join("; ") })
}

fn tanh_table() -> Outcome {
    let mut worst = 0.0f64;
    for k in 0..=120_000 {
        let a = -6.0 + 12.0 * k as f64 / 120_000.0;
        worst = worst.max((tanh_fast(a, 1024).map_err(|e| e.to_string())? - a.tanh()).abs());
    }
    let exact = builtin("fig1_pendulum_observer_free");
    let mut tabled = exact.clone();
    for c in &mut tabled.controllers {
        if let ControllerSpec::ObserverFree(p) = c {
            p.tanh_table = Some(1024);
        }
    }
    let settle = |sc: &Scenario| -> Result<f64, String> {
        let series = simulate_run(sc).map_err(|e| e.to_string())?;
        let report = MetricsReport::compute(&series, 0.02).map_err(|e| e.to_string())?;
        report.settling_time.ok_or_else(|| "did not settle".to_string())
    };
    let (a, b) = (settle(&exact)?, settle(&tabled)?);
    let change = (a - b).abs() / a;
    check(
        worst <= 1e-3 && change < 0.01,
        format!("max error {worst:.3e}, settling {a:.4} s vs {b:.4} s ({:.3}%)", change * 100.0),
    )
}

#[test]
fn acceptance() {
    let criteria: [Criterion; 12] = [
        ("1 stabilization", stabilization),
        ("2 bounded input", bounded_input),
        ("3 chattering elimination", chattering_ratio),
        ("4 surface identity", surface_identity),
        ("5 lyapunov descent", lyapunov_descent),
        ("6 noise robustness", noise_robustness),
        ("7 disturbance rejection", disturbance_rejection),
        ("8 network synchronization", network_sync),
        ("9 integrator order", integrator_order),
        ("10 determinism", determinism),
        ("11 comparison matrix", comparison_matrix),
        ("12 tanh table accuracy", tanh_table),
    ];
    let mut failed = Vec::new();
    for (name, run) in criteria {
        match run() {
            Ok(detail) => println!("PASS {name}: {detail}"),
            Err(detail) => {
                println!("FAIL {name}: {detail}");
                failed.push(name);
            }
        }
    }
    assert!(failed.is_empty(), "failed criteria: {failed:?}");
}

#[test]
fn plant_spec_used_by_stabilization_matches_defaults() {
    let sc = builtin("fig1_pendulum_observer_free");
    assert_eq!(sc.plant, PlantSpec::pendulum());
    assert_eq!(sc.initial_state, vec![0.5, 0.0]);
    assert_eq!(sc.sim.dt, 1e-3);
    assert_eq!(sc.controllers, vec![ControllerSpec::ObserverFree(ObserverFreeParams::new(1.0, 5.0))]);
}
