//! Scalar summaries of a run, computed from the trace alone so that the
//! CLI can recompute them from an emitted CSV.

use super::trace::Trace;
use std::f64::consts::PI;

/// Fraction of the run, at its end, over which the steady residual is taken.
pub const STEADY_FRACTION: f64 = 0.2;
/// `θ` counts as settled once `|θ| ≤ SETTLE_FRACTION·|θ(0)|`.
pub const SETTLE_FRACTION: f64 = 0.05;

#[derive(Debug, Clone, PartialEq)]
pub struct RunMetrics {
    /// `max |τ - τ_cmd|` over the final 20% of the run, N.
    pub steady_state_residual: f64,
    /// `max_{i,t} |ξ_i| / F_{i,max}`.
    pub max_force_ratio: f64,
    /// First `t` with `|θ(t)| ≤ 0.05 |θ(0)|`; `None` if it never happens or
    /// `θ(0) = 0`.
    pub theta_settle_time: Option<f64>,
    /// `Σ |Δα_i|` per thruster, wrapped to (-π, π] per step.
    pub azimuth_total_variation: Vec<f64>,
}

/// `a - b` wrapped to [-π, π).
pub fn angle_difference(a: f64, b: f64) -> f64 {
    (a - b + PI).rem_euclid(2.0 * PI) - PI
}

fn norm(v: &[f64]) -> f64 {
    v.iter().map(|x| x * x).sum::<f64>().sqrt()
}

pub fn theta_settle_time(trace: &Trace) -> Option<f64> {
    let first = trace.samples.first()?;
    let threshold = SETTLE_FRACTION * norm(&first.theta);
    if threshold == 0.0 {
        return None;
    }
    trace.samples.iter().find(|s| norm(&s.theta) <= threshold).map(|s| s.t)
}

/// `max |τ - τ_cmd|` over samples with `t ≥ t_end - fraction·(t_end - t_0)`.
pub fn tail_residual(trace: &Trace, fraction: f64) -> f64 {
    let (Some(first), Some(last)) = (trace.samples.first(), trace.samples.last()) else {
        return 0.0;
    };
    let start = last.t - fraction * (last.t - first.t);
    trace
        .samples
        .iter()
        .filter(|s| s.t >= start)
        .map(|s| s.residual())
        .fold(0.0, f64::max)
}

impl RunMetrics {
    /// `f_max` lists the saturation of each thruster in trace order.
    pub fn from_trace(trace: &Trace, f_max: &[f64]) -> Self {
        let dims = trace.dims;
        let mut max_force_ratio: f64 = 0.0;
        let mut tv = vec![0.0; dims.m];
        for (k, s) in trace.samples.iter().enumerate() {
            for i in 0..dims.m {
                let off = dims.offset(i);
                let mag = norm(&s.xi[off..off + dims.width(i)]);
                max_force_ratio = max_force_ratio.max(mag / f_max[i]);
                if k > 0 {
                    tv[i] += angle_difference(s.alpha[i], trace.samples[k - 1].alpha[i]).abs();
                }
            }
        }
        Self {
            steady_state_residual: tail_residual(trace, STEADY_FRACTION),
            max_force_ratio,
            theta_settle_time: theta_settle_time(trace),
            azimuth_total_variation: tv,
        }
    }

    pub fn report(&self) -> String {
        let settle = self.theta_settle_time.map_or_else(|| "never".to_string(), |t| format!("{t:.6} s"));
        let tv = self
            .azimuth_total_variation
            .iter()
            .map(|x| format!("{x:.6}"))
            .collect::<Vec<_>>()
            .join(", ");
        format!(
            "steady_state_residual: {:.6e} N\nmax_force_ratio: {:.6}\ntheta_settle_time: {settle}\nazimuth_total_variation: [{tv}] rad\n",
            self.steady_state_residual, self.max_force_ratio
        )
    }
}
