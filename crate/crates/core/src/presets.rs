//! Ready-made configurations for the C/S Enterprise 1 model vessel: two
//! Voith Schneider units at the stern and a bow tunnel thruster.
//!
//! Lever arms: the tunnel sits 0.3875 m ahead of the origin on the
//! centerline; the stern units sit 0.4574 m aft and 0.055 m to either side.

use crate::config::{Gains, IntegratorConfig, ThrusterSpec, VesselConfig};
use crate::filter::FilterState;

pub const TUNNEL_X: f64 = 0.3875;
pub const VSP_X: f64 = -0.4574;
pub const VSP_Y: f64 = 0.055;

pub fn cse1_thrusters() -> Vec<ThrusterSpec> {
    vec![
        ThrusterSpec::azimuth("vsp_port", [VSP_X, -VSP_Y], 1.0, 1.0),
        ThrusterSpec::azimuth("vsp_stbd", [VSP_X, VSP_Y], 1.0, 1.0),
        ThrusterSpec::fixed("tunnel", [TUNNEL_X, 0.0], std::f64::consts::FRAC_PI_2, 1.0, 1.0),
    ]
}

/// Minimum squared norm allocation with the quadratic barrier.
pub fn cse1() -> VesselConfig {
    cse1_with_task("min_squared_norm")
}

pub fn cse1_with_task(task: &str) -> VesselConfig {
    VesselConfig::new(cse1_thrusters(), Gains::default(), "quadratic", task, IntegratorConfig::default())
        .expect("preset is valid")
}

/// Ramp/oscillate comparison setup: μ = γ = 0.1, ρ = 0.1, Ω̄ = 1, azimuth
/// references ±45°, and `lambda` on both stern units.
pub fn ramp_comparison(task: &str, lambda: f64) -> VesselConfig {
    let mut thrusters = cse1_thrusters();
    for (t, az) in thrusters.iter_mut().zip([45.0f64, -45.0]) {
        t.lambda = lambda;
        t.azimuth_ref = az.to_radians();
    }
    for t in &mut thrusters {
        t.rho = 0.1;
        t.rate_limit = 1.0;
    }
    let gains = Gains {
        mu: 0.1,
        gamma: 0.1,
        ..Gains::default()
    };
    VesselConfig::new(thrusters, gains, "quadratic", task, IntegratorConfig::default()).expect("preset is valid")
}

/// The three parameter runs compared on the saturating spiral (1-based),
/// azimuth penalty with the norm barrier.
pub fn parameter_run(run: usize) -> VesselConfig {
    let (gamma, mu, rho, zeta) = match run {
        1 => (0.05, 0.01, 5.0, 0.1),
        2 => (0.1, 0.5, 0.1, 0.01),
        3 => (0.2, 10.0, 0.1, 0.01),
        _ => panic!("parameter runs are numbered 1..=3, got {run}"),
    };
    let mut thrusters = cse1_thrusters();
    for t in &mut thrusters {
        t.rho = rho;
        t.zeta = zeta;
        t.lambda = 0.99;
        t.rate_limit = 0.5;
    }
    thrusters[0].azimuth_ref = 45f64.to_radians();
    thrusters[1].azimuth_ref = (-45f64).to_radians();
    let gains = Gains {
        mu,
        gamma,
        ..Gains::default()
    };
    VesselConfig::new(thrusters, gains, "norm", "azimuth_penalty", IntegratorConfig::default()).expect("preset is valid")
}

/// Off-manifold start used to expose the transient:
/// `ξ₁ = ξ₂ = [0.5, 0]`, `ξ₃ = 0.5`, `θ = [0.5, 0.5]`.
pub fn transient_initial_state() -> FilterState {
    FilterState {
        xi: nalgebra::DVector::from_vec(vec![0.5, 0.0, 0.5, 0.0, 0.5]),
        theta: nalgebra::DVector::from_vec(vec![0.5, 0.5]),
        t: 0.0,
    }
}
