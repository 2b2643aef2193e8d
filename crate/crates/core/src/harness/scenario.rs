//! Commanded-load scenarios.

use std::f64::consts::PI;
use std::sync::LazyLock;

use nalgebra::DVector;
use serde::{Deserialize, Serialize};

use super::derivative::DerivativeMode;
use super::HarnessError;
use crate::registry::Registry;

/// Time-parameterized `τ_cmd` generator.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum Signal {
    /// `[fx_rate·t, 0, A sin(2πt/T)]`.
    RampOscillate {
        fx_rate: f64,
        mz_amplitude: f64,
        mz_period: f64,
    },
    /// `[r t cos ωt, r t sin ωt, mz]`.
    Spiral {
        radius_rate: f64,
        angular_rate: f64,
        #[serde(default)]
        mz: f64,
    },
    Constant { tau: [f64; 3] },
    /// Zero-order hold through `[t, X, Y, N]` rows, sorted by time.
    PiecewiseTable { samples: Vec<[f64; 4]> },
}

impl Signal {
    pub fn value(&self, t: f64) -> [f64; 3] {
        match *self {
            Signal::RampOscillate {
                fx_rate,
                mz_amplitude,
                mz_period,
            } => [fx_rate * t, 0.0, mz_amplitude * (2.0 * PI * t / mz_period).sin()],
            Signal::Spiral {
                radius_rate,
                angular_rate,
                mz,
            } => {
                let (s, c) = (angular_rate * t).sin_cos();
                [radius_rate * t * c, radius_rate * t * s, mz]
            }
            Signal::Constant { tau } => tau,
            Signal::PiecewiseTable { ref samples } => {
                let idx = samples.partition_point(|row| row[0] <= t);
                match idx {
                    0 => samples.first().map_or([0.0; 3], |r| [r[1], r[2], r[3]]),
                    i => {
                        let r = samples[i - 1];
                        [r[1], r[2], r[3]]
                    }
                }
            }
        }
    }

    /// Exact derivative for the smooth generators; `None` for tables.
    pub fn derivative(&self, t: f64) -> Option<[f64; 3]> {
        match *self {
            Signal::RampOscillate {
                fx_rate,
                mz_amplitude,
                mz_period,
            } => {
                let w = 2.0 * PI / mz_period;
                Some([fx_rate, 0.0, mz_amplitude * w * (w * t).cos()])
            }
            Signal::Spiral {
                radius_rate,
                angular_rate,
                ..
            } => {
                let (s, c) = (angular_rate * t).sin_cos();
                let r = radius_rate;
                let rw = radius_rate * t * angular_rate;
                Some([r * c - rw * s, r * s + rw * c, 0.0])
            }
            Signal::Constant { .. } => Some([0.0; 3]),
            Signal::PiecewiseTable { .. } => None,
        }
    }

    pub fn is_smooth(&self) -> bool {
        !matches!(self, Signal::PiecewiseTable { .. })
    }

    fn validate(&self) -> Result<(), String> {
        match self {
            Signal::RampOscillate { mz_period, .. } if !(*mz_period > 0.0) => {
                Err(format!("mz_period must be > 0, got {mz_period}"))
            }
            Signal::PiecewiseTable { samples } => {
                if samples.is_empty() {
                    return Err("table needs at least one sample".into());
                }
                if samples.windows(2).any(|w| !(w[0][0] < w[1][0])) {
                    return Err("table times must be strictly increasing".into());
                }
                Ok(())
            }
            _ => Ok(()),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct InitialState {
    pub xi: Vec<f64>,
    pub theta: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Scenario {
    pub name: String,
    pub duration: f64,
    pub signal: Signal,
    /// How `τ̇_cmd` is obtained; defaults to analytic for smooth signals and
    /// backward differences for tables.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub derivative: Option<DerivativeMode>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub initial_state: Option<InitialState>,
}

/// One command sample.
#[derive(Debug, Clone, PartialEq)]
pub struct Command {
    pub tau: DVector<f64>,
    /// Present when the generator has an analytic derivative.
    pub tau_dot: Option<DVector<f64>>,
}

impl Scenario {
    pub fn new(name: &str, duration: f64, signal: Signal) -> Self {
        Self {
            name: name.to_string(),
            duration,
            signal,
            derivative: None,
            initial_state: None,
        }
    }

    pub fn with_initial_state(mut self, xi: Vec<f64>, theta: Vec<f64>) -> Self {
        self.initial_state = Some(InitialState { xi, theta });
        self
    }

    pub fn with_derivative(mut self, mode: DerivativeMode) -> Self {
        self.derivative = Some(mode);
        self
    }

    pub fn derivative_mode(&self) -> DerivativeMode {
        self.derivative.clone().unwrap_or(if self.signal.is_smooth() {
            DerivativeMode::Analytic
        } else {
            DerivativeMode::BackwardDifference
        })
    }

    pub fn validate(&self) -> Result<(), HarnessError> {
        if !(self.duration.is_finite() && self.duration > 0.0) {
            return Err(HarnessError::Scenario(format!("duration must be > 0, got {}", self.duration)));
        }
        self.signal.validate().map_err(HarnessError::Scenario)?;
        if self.derivative_mode() == DerivativeMode::Analytic && !self.signal.is_smooth() {
            return Err(HarnessError::Scenario("tables have no analytic derivative".into()));
        }
        if let Some(DerivativeMode::Lowpass { time_constant }) = self.derivative {
            if !(time_constant > 0.0) {
                return Err(HarnessError::Scenario(format!("lowpass time_constant must be > 0, got {time_constant}")));
            }
        }
        Ok(())
    }

    pub fn to_toml(&self) -> String {
        toml::to_string(self).expect("scenario always serializes")
    }
}

/// Samples the scenario at `t ∈ [0, duration]`.
pub fn generate_command(scn: &Scenario, t: f64) -> Result<Command, HarnessError> {
    // slack for accumulated step rounding at the final sample
    let slack = 1e-9 * scn.duration.max(1.0);
    if !(t >= 0.0 && t <= scn.duration + slack) {
        return Err(HarnessError::TimeOutOfRange { t, duration: scn.duration });
    }
    Ok(Command {
        tau: DVector::from_row_slice(&scn.signal.value(t)),
        tau_dot: scn.signal.derivative(t).map(|d| DVector::from_row_slice(&d)),
    })
}

pub fn parse_scenario(text: &str) -> Result<Scenario, HarnessError> {
    let scn: Scenario = toml::from_str(text).map_err(|e| HarnessError::Scenario(e.to_string()))?;
    scn.validate()?;
    Ok(scn)
}

pub type ScenarioFactory = fn() -> Scenario;

/// Transient start shared by the spiral runs.
fn transient(scn: Scenario) -> Scenario {
    let s = crate::presets::transient_initial_state();
    scn.with_initial_state(s.xi.as_slice().to_vec(), s.theta.as_slice().to_vec())
}

pub fn zero() -> Scenario {
    Scenario::new("zero", 10.0, Signal::Constant { tau: [0.0; 3] })
}

pub fn constant() -> Scenario {
    Scenario::new("constant", 30.0, Signal::Constant { tau: [0.5, 0.2, 0.05] })
}

/// Surge ramp with an oscillating yaw moment between ±0.2 N·m.
pub fn ramp_oscillate() -> Scenario {
    Scenario::new(
        "ramp_oscillate",
        150.0,
        Signal::RampOscillate {
            fx_rate: 0.01,
            mz_amplitude: 0.2,
            mz_period: 20.0,
        },
    )
}

/// Spiral whose magnitude outgrows the total thrust capability.
pub fn spiral() -> Scenario {
    Scenario::new(
        "spiral",
        400.0,
        Signal::Spiral {
            radius_rate: 0.02,
            angular_rate: 0.1,
            mz: 0.0,
        },
    )
}

pub fn spiral_transient() -> Scenario {
    Scenario {
        name: "spiral_transient".into(),
        ..transient(spiral())
    }
}

static REGISTRY: LazyLock<Registry<ScenarioFactory>> = LazyLock::new(|| {
    Registry::new("scenario")
        .with("zero", zero as ScenarioFactory)
        .with("constant", constant)
        .with("ramp_oscillate", ramp_oscillate)
        .with("spiral", spiral)
        .with("spiral_transient", spiral_transient)
});

/// Built-in scenarios.
pub fn registry() -> &'static Registry<ScenarioFactory> {
    &REGISTRY
}
