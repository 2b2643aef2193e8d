use thrust_filter::harness::metrics::RunMetrics;
use thrust_filter::harness::scenario::{self, Scenario};
use thrust_filter::harness::trace::{read_trace, to_csv_string, write_trace};
use thrust_filter::harness::{run, run_with, RunOptions};
use thrust_filter::presets;

fn short_spiral() -> Scenario {
    Scenario {
        duration: 5.0,
        ..scenario::spiral_transient()
    }
}

#[test]
fn identical_inputs_give_identical_csv() {
    let cfg = presets::parameter_run(2);
    let a = run(&cfg, &short_spiral()).unwrap();
    let b = run(&cfg, &short_spiral()).unwrap();
    assert_eq!(to_csv_string(&a.trace), to_csv_string(&b.trace));
}

#[test]
fn metrics_from_csv_match_in_memory() {
    let cfg = presets::parameter_run(1);
    let out = run_with(&cfg, &short_spiral(), &RunOptions { decimate: 3, ..RunOptions::default() }).unwrap();
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("trace.csv");
    write_trace(&out.trace, &path).unwrap();
    let back = read_trace(&path).unwrap();
    assert_eq!(back, out.trace);
    let f_max: Vec<f64> = cfg.thrusters.iter().map(|t| t.f_max).collect();
    assert_eq!(RunMetrics::from_trace(&back, &f_max), out.metrics);
}

#[test]
fn cse1_trace_layout() {
    let out = run(&presets::cse1(), &Scenario { duration: 0.01, ..scenario::ramp_oscillate() }).unwrap();
    let csv = to_csv_string(&out.trace);
    let header = csv.lines().next().unwrap();
    assert_eq!(header.split(',').filter(|h| h.starts_with("xi_")).count(), 5);
    assert_eq!(header.split(',').filter(|h| h.starts_with("theta_")).count(), 2);
    assert_eq!(header.split(',').count(), 7 + 5 + 5 + 2 + 3 * 3 + 2);
}

#[test]
fn shipped_configs_match_presets() {
    let dir = std::path::Path::new(env!("CARGO_MANIFEST_DIR")).join("../../configs");
    let load = |name: &str| thrust_filter::parse_config(&std::fs::read_to_string(dir.join(name)).unwrap()).unwrap();
    assert_eq!(load("cse1.toml").to_toml(), presets::cse1().to_toml());
    assert_eq!(load("ramp_min_norm.toml").to_toml(), presets::ramp_comparison("min_squared_norm", 0.0).to_toml());
    assert_eq!(load("ramp_azimuth.toml").to_toml(), presets::ramp_comparison("azimuth_penalty", 0.9).to_toml());
    for r in 1..=3 {
        assert_eq!(load(&format!("run{r}.toml")).to_toml(), presets::parameter_run(r).to_toml());
    }
}
