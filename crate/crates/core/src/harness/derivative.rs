//! Sources of `τ̇_cmd` when the command is only available as samples.

use nalgebra::DVector;
use serde::{Deserialize, Serialize};

use super::HarnessError;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "mode", rename_all = "snake_case", deny_unknown_fields)]
pub enum DerivativeMode {
    /// Use the generator's exact derivative.
    Analytic,
    /// First-order filter `ṡ = (τ - s)/T_f`, output `(τ - s)/T_f`.
    Lowpass { time_constant: f64 },
    BackwardDifference,
    Zero,
}

impl DerivativeMode {
    pub fn build(&self) -> Box<dyn DerivativeEstimator> {
        match *self {
            DerivativeMode::Analytic => Box::new(Analytic),
            DerivativeMode::Lowpass { time_constant } => Box::new(Lowpass::new(time_constant)),
            DerivativeMode::BackwardDifference => Box::new(BackwardDifference::default()),
            DerivativeMode::Zero => Box::new(ZeroDerivative),
        }
    }
}

/// Streaming derivative estimate, fed one sample per filter step.
pub trait DerivativeEstimator: Send + std::fmt::Debug {
    fn name(&self) -> &'static str;

    fn update(&mut self, t: f64, tau: &DVector<f64>, analytic: Option<&DVector<f64>>) -> Result<DVector<f64>, HarnessError>;
}

#[derive(Debug, Clone, Copy, Default)]
pub struct Analytic;

impl DerivativeEstimator for Analytic {
    fn name(&self) -> &'static str {
        "analytic"
    }

    fn update(&mut self, _t: f64, _tau: &DVector<f64>, analytic: Option<&DVector<f64>>) -> Result<DVector<f64>, HarnessError> {
        analytic
            .cloned()
            .ok_or_else(|| HarnessError::Scenario("signal has no analytic derivative".into()))
    }
}

#[derive(Debug, Clone, Copy, Default)]
pub struct ZeroDerivative;

impl DerivativeEstimator for ZeroDerivative {
    fn name(&self) -> &'static str {
        "zero"
    }

    fn update(&mut self, _t: f64, tau: &DVector<f64>, _: Option<&DVector<f64>>) -> Result<DVector<f64>, HarnessError> {
        Ok(DVector::zeros(tau.len()))
    }
}

/// `(τ_k - τ_{k-1})/(t_k - t_{k-1})`; zero on the first sample.
#[derive(Debug, Clone, Default)]
pub struct BackwardDifference {
    last: Option<(f64, DVector<f64>)>,
}

impl DerivativeEstimator for BackwardDifference {
    fn name(&self) -> &'static str {
        "backward_difference"
    }

    fn update(&mut self, t: f64, tau: &DVector<f64>, _: Option<&DVector<f64>>) -> Result<DVector<f64>, HarnessError> {
        let out = match &self.last {
            Some((t0, tau0)) if t > *t0 => (tau - tau0) / (t - t0),
            _ => DVector::zeros(tau.len()),
        };
        self.last = Some((t, tau.clone()));
        Ok(out)
    }
}

/// First-order filter, discretized exactly for a linearly interpolated input.
#[derive(Debug, Clone)]
pub struct Lowpass {
    time_constant: f64,
    last: Option<(f64, DVector<f64>)>,
    state: Option<DVector<f64>>,
}

impl Lowpass {
    pub fn new(time_constant: f64) -> Self {
        Self {
            time_constant,
            last: None,
            state: None,
        }
    }
}

impl DerivativeEstimator for Lowpass {
    fn name(&self) -> &'static str {
        "lowpass"
    }

    fn update(&mut self, t: f64, tau: &DVector<f64>, _: Option<&DVector<f64>>) -> Result<DVector<f64>, HarnessError> {
        let tf = self.time_constant;
        let s = match (&self.last, &self.state) {
            (Some((t0, tau0)), Some(s0)) if t > *t0 => {
                let dt = t - t0;
                let slope = (tau - tau0) / dt;
                let decay = (-dt / tf).exp();
                // s → τ - T_f·slope exponentially for a ramp input
                tau - &slope * tf + (s0 - tau0 + &slope * tf) * decay
            }
            (_, Some(s0)) => s0.clone(),
            _ => tau.clone(),
        };
        let out = (tau - &s) / tf;
        self.state = Some(s);
        self.last = Some((t, tau.clone()));
        Ok(out)
    }
}

/// Derivative estimate at the newest sample of `history`.
pub fn differentiate_command(history: &[(f64, DVector<f64>)], mode: &DerivativeMode) -> Result<DVector<f64>, HarnessError> {
    let need = match mode {
        DerivativeMode::BackwardDifference => 2,
        DerivativeMode::Analytic => {
            return Err(HarnessError::Scenario("analytic derivative is not estimated from samples".into()))
        }
        _ => 1,
    };
    if history.len() < need {
        return Err(HarnessError::InsufficientHistory {
            need,
            got: history.len(),
        });
    }
    let mut est = mode.build();
    let mut out = DVector::zeros(history[0].1.len());
    for (t, tau) in history {
        out = est.update(*t, tau, None)?;
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn ramp(rate: f64, dt: f64, n: usize) -> Vec<(f64, DVector<f64>)> {
        (0..n)
            .map(|k| {
                let t = k as f64 * dt;
                (t, DVector::from_vec(vec![rate * t, -2.0 * rate * t, 0.3]))
            })
            .collect()
    }

    #[test]
    fn constant_input_gives_zero_in_every_mode() {
        let hist: Vec<_> = (0..50).map(|k| (k as f64 * 0.1, DVector::from_element(3, 0.7))).collect();
        for mode in [
            DerivativeMode::Zero,
            DerivativeMode::BackwardDifference,
            DerivativeMode::Lowpass { time_constant: 0.5 },
        ] {
            assert!(differentiate_command(&hist, &mode).unwrap().amax() < 1e-15, "{mode:?}");
        }
    }

    #[test]
    fn backward_difference_is_exact_on_ramps() {
        let d = differentiate_command(&ramp(0.25, 0.01, 10), &DerivativeMode::BackwardDifference).unwrap();
        assert!((d[0] - 0.25).abs() < 1e-12 && (d[1] + 0.5).abs() < 1e-12 && d[2] == 0.0);
    }

    #[test]
    fn lowpass_matches_step_response() {
        // first-order filter on a ramp: error decays as r·e^{-t/T_f}
        let (r, tf, dt) = (0.25, 0.5, 0.001);
        let hist = ramp(r, dt, (5.0 * tf / dt) as usize + 1);
        let d = differentiate_command(&hist, &DerivativeMode::Lowpass { time_constant: tf }).unwrap();
        let rel = (d[0] - r).abs() / r;
        let oracle = (-5.0f64).exp();
        assert!(rel < 0.01, "rel {rel}");
        assert!((rel - oracle).abs() < 1e-3, "rel {rel} vs {oracle}");
    }

    #[test]
    fn insufficient_history() {
        let one = ramp(1.0, 0.1, 1);
        assert!(matches!(
            differentiate_command(&one, &DerivativeMode::BackwardDifference),
            Err(HarnessError::InsufficientHistory { need: 2, got: 1 })
        ));
        assert!(differentiate_command(&[], &DerivativeMode::Zero).is_err());
    }
}
