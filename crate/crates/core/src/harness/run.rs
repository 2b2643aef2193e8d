//! Drives a reference filter through a scenario and records the trace.

use nalgebra::DVector;

use super::derivative::DerivativeMode;
use super::metrics::RunMetrics;
use super::scenario::{generate_command, Scenario};
use super::trace::{Trace, TraceDims, TraceSample};
use super::HarnessError;
use crate::config::VesselConfig;
use crate::filter::{output_map, Evaluation, FilterState, ReferenceFilter};

#[derive(Debug, Clone, PartialEq)]
pub struct RunOptions {
    pub duration: Option<f64>,
    pub dt: Option<f64>,
    /// Keep every `decimate`-th integrator step.
    pub decimate: usize,
}

impl Default for RunOptions {
    fn default() -> Self {
        Self {
            duration: None,
            dt: None,
            decimate: 1,
        }
    }
}

#[derive(Debug, Clone)]
pub struct RunOutput {
    pub trace: Trace,
    pub metrics: RunMetrics,
}

pub fn run(cfg: &VesselConfig, scn: &Scenario) -> Result<RunOutput, HarnessError> {
    run_with(cfg, scn, &RunOptions::default())
}

pub fn run_with(cfg: &VesselConfig, scn: &Scenario, opts: &RunOptions) -> Result<RunOutput, HarnessError> {
    let mut filter = ReferenceFilter::from_config(cfg)?;
    let mut scn = scn.clone();
    if let Some(d) = opts.duration {
        scn.duration = d;
    }
    let dt = opts.dt.unwrap_or(cfg.integrator.dt);
    run_filter(&mut filter, &scn, dt, opts.decimate)
}

fn record(filter: &ReferenceFilter, state: &FilterState, tau_cmd: &DVector<f64>, ev: &Evaluation) -> TraceSample {
    let geom = filter.geometry();
    let tau = geom.load(&state.xi);
    let setpoints = output_map(filter.thrusters(), geom, &state.xi);
    TraceSample {
        t: state.t,
        tau_cmd: [tau_cmd[0], tau_cmd[1], tau_cmd[2]],
        tau: [tau[0], tau[1], tau[2]],
        xi: state.xi.as_slice().to_vec(),
        xi_d: ev.xi_d.as_slice().to_vec(),
        theta: state.theta.as_slice().to_vec(),
        force: setpoints.iter().map(|s| s.force).collect(),
        alpha: setpoints.iter().map(|s| s.alpha).collect(),
        cbf_active: ev.diagnostics.thrusters.iter().map(|f| f.cbf_active).collect(),
        v: ev.diagnostics.v,
        j: ev.diagnostics.j,
    }
}

/// Runs `filter` from the scenario's initial state (or its current state
/// when the scenario has none) for `scn.duration` seconds.
pub fn run_filter(filter: &mut ReferenceFilter, scn: &Scenario, dt: f64, decimate: usize) -> Result<RunOutput, HarnessError> {
    scn.validate()?;
    if !(dt.is_finite() && dt > 0.0) {
        return Err(HarnessError::Scenario(format!("dt must be > 0, got {dt}")));
    }
    if decimate == 0 {
        return Err(HarnessError::Scenario("decimate must be >= 1".into()));
    }
    let dims = filter.geometry().dims();
    if let Some(init) = &scn.initial_state {
        if init.xi.len() != dims.p || init.theta.len() != dims.q {
            return Err(HarnessError::Scenario(format!(
                "initial state has {} xi / {} theta entries, geometry needs {} / {}",
                init.xi.len(),
                init.theta.len(),
                dims.p,
                dims.q
            )));
        }
        filter.set_state(FilterState {
            xi: DVector::from_column_slice(&init.xi),
            theta: DVector::from_column_slice(&init.theta),
            t: 0.0,
        })?;
    } else {
        filter.set_state(FilterState::zeros(dims.p, dims.q))?;
    }

    let steps = ((scn.duration / dt).round() as usize).max(1);
    let mode = scn.derivative_mode();
    let mut estimator = mode.build();
    let signal = &scn.signal;
    let command = |s: f64| {
        let d = signal.derivative(s).expect("analytic mode requires a smooth signal");
        (DVector::from_row_slice(&signal.value(s)), DVector::from_row_slice(&d))
    };

    let mut samples = Vec::with_capacity(steps / decimate + 1);
    for k in 0..=steps {
        let state = filter.state().clone();
        let cmd = generate_command(scn, state.t)?;
        let tau_dot = estimator.update(state.t, &cmd.tau, cmd.tau_dot.as_ref())?;
        if k == steps {
            if k % decimate == 0 {
                let ev = filter.evaluate(&state.xi, &state.theta, &cmd.tau, &tau_dot)?;
                samples.push(record(filter, &state, &cmd.tau, &ev));
            }
            break;
        }
        let out = if mode == DerivativeMode::Analytic {
            filter.step_with(&command, dt)?
        } else {
            filter.step(&cmd.tau, &tau_dot, dt)?
        };
        if k % decimate == 0 {
            samples.push(record(filter, &state, &cmd.tau, &out.evaluation));
        }
    }

    let trace = Trace {
        dims: TraceDims {
            p: dims.p,
            q: dims.q,
            m: filter.thrusters().len(),
        },
        samples,
    };
    let f_max: Vec<f64> = filter.thrusters().iter().map(|t| t.f_max).collect();
    let metrics = RunMetrics::from_trace(&trace, &f_max);
    Ok(RunOutput { trace, metrics })
}
