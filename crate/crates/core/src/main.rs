use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Parser, Subcommand};

use thrust_filter::harness::metrics::RunMetrics;
use thrust_filter::harness::scenario::{self, parse_scenario, Scenario};
use thrust_filter::harness::trace::{read_trace, write_trace};
use thrust_filter::harness::{plot, run_with, HarnessError, RunOptions};
use thrust_filter::{parse_config, AllocationGeometry, VesselConfig};

#[derive(Parser)]
#[command(name = "thrust-filter", version, about = "Dynamic thrust allocation reference filter")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run a scenario and report metrics, optionally writing the trace.
    Simulate {
        #[arg(long)]
        config: PathBuf,
        /// Built-in scenario name or path to a scenario TOML file.
        #[arg(long)]
        scenario: String,
        /// Override the scenario duration, s.
        #[arg(long)]
        duration: Option<f64>,
        /// Override the integrator step, s.
        #[arg(long)]
        dt: Option<f64>,
        #[arg(long)]
        out: Option<PathBuf>,
        /// Keep every k-th step in the trace.
        #[arg(long, default_value_t = 1)]
        decimate: usize,
    },
    /// Parse and validate a vessel configuration.
    CheckConfig {
        #[arg(long)]
        config: PathBuf,
    },
    /// Recompute metrics from a trace CSV.
    Metrics {
        #[arg(long)]
        trace: PathBuf,
        /// Vessel configuration for the saturation limits; without it every
        /// limit is taken as 1 N.
        #[arg(long)]
        config: Option<PathBuf>,
    },
    /// Write plot tables derived from a trace CSV.
    PlotData {
        #[arg(long)]
        trace: PathBuf,
        #[arg(long)]
        out_dir: PathBuf,
    },
}

fn read(path: &Path) -> Result<String, HarnessError> {
    fs::read_to_string(path).map_err(|e| HarnessError::io(path, e))
}

fn load_config(path: &Path) -> Result<VesselConfig, HarnessError> {
    Ok(parse_config(&read(path)?)?)
}

fn load_scenario(arg: &str) -> Result<Scenario, HarnessError> {
    let reg = scenario::registry();
    if reg.contains(arg) {
        return Ok(reg.get(arg).expect("checked")());
    }
    let path = Path::new(arg);
    if path.exists() {
        return parse_scenario(&read(path)?);
    }
    let known: Vec<_> = reg.names().collect();
    Err(HarnessError::Scenario(format!(
        "`{arg}` is neither a built-in scenario ({}) nor a file",
        known.join(", ")
    )))
}

fn execute(cmd: Command) -> Result<(), HarnessError> {
    match cmd {
        Command::Simulate {
            config,
            scenario,
            duration,
            dt,
            out,
            decimate,
        } => {
            let cfg = load_config(&config)?;
            let scn = load_scenario(&scenario)?;
            let opts = RunOptions { duration, dt, decimate };
            let result = run_with(&cfg, &scn, &opts)?;
            if let Some(path) = out {
                write_trace(&result.trace, &path)?;
            }
            print!("{}", result.metrics.report());
        }
        Command::CheckConfig { config } => {
            let cfg = load_config(&config)?;
            let geom = AllocationGeometry::from_config(&cfg).map_err(|e| HarnessError::Filter(e.into()))?;
            let dims = geom.dims();
            let sv = geom.b().singular_values();
            println!(
                "ok: {} thrusters ({} azimuth, {} fixed)\nn = {}, p = {}, q = {}\nsingular values of B: min {:.6e}, max {:.6e}, condition {:.3}",
                cfg.m(),
                cfg.m1(),
                cfg.m2(),
                dims.n,
                dims.p,
                dims.q,
                sv.min(),
                sv.max(),
                sv.max() / sv.min()
            );
        }
        Command::Metrics { trace, config } => {
            let tr = read_trace(&trace)?;
            let f_max = match config {
                Some(path) => {
                    let cfg = load_config(&path)?;
                    if cfg.m() != tr.dims.m || cfg.p() != tr.dims.p {
                        return Err(HarnessError::Scenario(format!(
                            "configuration has {} thrusters / p = {}, trace has {} / {}",
                            cfg.m(),
                            cfg.p(),
                            tr.dims.m,
                            tr.dims.p
                        )));
                    }
                    cfg.thrusters.iter().map(|t| t.f_max).collect()
                }
                None => vec![1.0; tr.dims.m],
            };
            print!("{}", RunMetrics::from_trace(&tr, &f_max).report());
        }
        Command::PlotData { trace, out_dir } => {
            let tr = read_trace(&trace)?;
            for path in plot::emit_plot_data(&tr, &out_dir)? {
                println!("{}", path.display());
            }
        }
    }
    Ok(())
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let usage = e.use_stderr();
            let _ = e.print();
            // malformed invocations count as configuration errors
            return if usage { ExitCode::from(1) } else { ExitCode::SUCCESS };
        }
    };
    match execute(cli.command) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
