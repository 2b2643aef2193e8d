//! The dynamic thrust-allocation reference filter.
//!
//! The virtual force state `ξ` follows `ξ̇_i = φ_i`, where `φ_i` is the
//! nominal rate-limited tracking law `κ_i` passed through the barrier
//! projection, and the nullspace parameter follows
//! `θ̇ = υ + μ Σ c_i Q_iᵀ ξ̃_i` with `c_i = w_i`.

use std::sync::Arc;

use nalgebra::{DVector, DVectorView};

use crate::barrier::{self, safe_control, BarrierError, BarrierFunction, HalfSpace};
use crate::config::{ConfigError, ThrusterKind, ThrusterSpec, VesselConfig, DOF};
use crate::geometry::{AllocationGeometry, GeometryError};
use crate::integrator::{self, Integrator};
use crate::task::{self, DynamicTask, TaskParams};

#[derive(Debug, thiserror::Error)]
pub enum FilterError {
    #[error("non-finite {0}")]
    NonFinite(&'static str),
    #[error("{what} has dimension {got}, expected {expected}")]
    Dimension {
        what: &'static str,
        expected: usize,
        got: usize,
    },
    #[error("time step must be finite and > 0, got {0}")]
    BadStep(f64),
    #[error(transparent)]
    Barrier(#[from] BarrierError),
    #[error(transparent)]
    Geometry(#[from] GeometryError),
    #[error(transparent)]
    Config(#[from] ConfigError),
}

#[derive(Debug, Clone, PartialEq)]
pub struct FilterState {
    pub xi: DVector<f64>,
    pub theta: DVector<f64>,
    pub t: f64,
}

impl FilterState {
    pub fn zeros(p: usize, q: usize) -> Self {
        Self {
            xi: DVector::zeros(p),
            theta: DVector::zeros(q),
            t: 0.0,
        }
    }

    fn is_finite(&self) -> bool {
        self.t.is_finite() && self.xi.iter().chain(self.theta.iter()).all(|x| x.is_finite())
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ThrusterSetpoint {
    pub id: String,
    /// Magnitude `|ξ_i|` (azimuth) or signed force `ξ_i` (fixed), N.
    pub force: f64,
    /// `∠ξ_i` in (-π, π] (azimuth) or the constant mounting angle (fixed).
    pub alpha: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub struct ThrusterFlags {
    pub cbf_active: bool,
    pub nominal_in_safe_set: bool,
}

#[derive(Debug, Clone, PartialEq)]
pub struct StepDiagnostics {
    pub thrusters: Vec<ThrusterFlags>,
    /// CLF `V = Σ c_i/2 |ξ̃_i|²`.
    pub v: f64,
    /// Secondary cost at `ξ_d`.
    pub j: f64,
    /// `|Bξ - τ_cmd|`, N.
    pub residual: f64,
}

/// Everything the filter computes at one point `(t, ξ, θ, τ_cmd, τ̇_cmd)`.
#[derive(Debug, Clone)]
pub struct Evaluation {
    pub xi_p: DVector<f64>,
    pub xi_p_dot: DVector<f64>,
    pub xi_d: DVector<f64>,
    pub upsilon: DVector<f64>,
    /// Stacked nominal controls `κ_i`.
    pub kappa: DVector<f64>,
    /// Stacked safe controls `φ_i`.
    pub phi: DVector<f64>,
    pub constraints: Vec<HalfSpace>,
    pub theta_dot: DVector<f64>,
    pub diagnostics: StepDiagnostics,
}

#[derive(Debug, Clone)]
pub struct StepOutput {
    /// Setpoints of the advanced state.
    pub setpoints: Vec<ThrusterSetpoint>,
    /// Diagnostics at the start of the step, where the inputs were applied.
    pub diagnostics: StepDiagnostics,
    /// Full field evaluation at the start of the step.
    pub evaluation: Evaluation,
}

/// `κ_i = -Ω̄ ξ̃_i/(|ξ̃_i| + ζ) + ξ̇_{p,i} + Q_iυ`.
pub fn nominal_control(
    rate_limit: f64,
    zeta: f64,
    xi_tilde: DVectorView<'_, f64>,
    xi_p_dot: DVectorView<'_, f64>,
    q_upsilon: DVectorView<'_, f64>,
) -> DVector<f64> {
    let gain = -rate_limit / (xi_tilde.norm() + zeta);
    xi_tilde * gain + xi_p_dot + q_upsilon
}

/// `V = Σ c_i/2 |ξ_i - ξ_{d,i}|²` with `c_i = w_i`.
pub fn clf_value(geom: &AllocationGeometry, xi: &DVector<f64>, xi_d: &DVector<f64>) -> f64 {
    let e = xi - xi_d;
    0.5 * e.iter().zip(geom.weights().iter()).map(|(x, w)| w * x * x).sum::<f64>()
}

/// `[∂V/∂θ]ᵀ = -Σ c_i Q_iᵀ ξ̃_i`.
pub fn clf_gradient_theta(geom: &AllocationGeometry, xi: &DVector<f64>, xi_d: &DVector<f64>) -> DVector<f64> {
    -geom.q().tr_mul(&(xi - xi_d).component_mul(geom.weights()))
}

/// `θ̇ = υ - μ[∂V/∂θ]ᵀ`.
pub fn theta_dot(
    geom: &AllocationGeometry,
    mu: f64,
    xi: &DVector<f64>,
    xi_d: &DVector<f64>,
    upsilon: &DVector<f64>,
) -> DVector<f64> {
    upsilon - clf_gradient_theta(geom, xi, xi_d) * mu
}

/// Maps a stacked `ξ` to thruster setpoints.
pub fn output_map(thrusters: &[ThrusterSpec], geom: &AllocationGeometry, xi: &DVector<f64>) -> Vec<ThrusterSetpoint> {
    thrusters
        .iter()
        .zip(geom.slices())
        .map(|(spec, r)| match spec.kind {
            ThrusterKind::VaryingAzimuth => {
                let (x, y) = (xi[r.start], xi[r.start + 1]);
                ThrusterSetpoint {
                    id: spec.id.clone(),
                    force: x.hypot(y),
                    alpha: wrap_angle(y.atan2(x)),
                }
            }
            ThrusterKind::FixedDirection => ThrusterSetpoint {
                id: spec.id.clone(),
                force: xi[r.start],
                alpha: spec.fixed_angle,
            },
        })
        .collect()
}

/// Folds `-π` (from `atan2(-0, x<0)`) onto `π` so angles lie in (-π, π].
pub fn wrap_angle(a: f64) -> f64 {
    if a <= -std::f64::consts::PI {
        a + 2.0 * std::f64::consts::PI
    } else {
        a
    }
}

pub struct ReferenceFilter {
    geom: Arc<AllocationGeometry>,
    task: Arc<dyn DynamicTask>,
    barrier: Arc<dyn BarrierFunction>,
    integrator: Arc<dyn Integrator>,
    thrusters: Vec<ThrusterSpec>,
    mu: f64,
    projection_weights: Option<Vec<DVector<f64>>>,
    state: FilterState,
}

impl std::fmt::Debug for ReferenceFilter {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("ReferenceFilter")
            .field("task", &self.task.name())
            .field("barrier", &self.barrier.name())
            .field("integrator", &self.integrator.name())
            .field("mu", &self.mu)
            .field("state", &self.state)
            .finish()
    }
}

impl ReferenceFilter {
    /// Builds a filter from a config, resolving strategies by name through
    /// the default registries.
    pub fn from_config(cfg: &VesselConfig) -> Result<Self, FilterError> {
        cfg.validate()?;
        let geom = Arc::new(AllocationGeometry::from_config(cfg)?);
        let task: Arc<dyn DynamicTask> =
            task::registry().get(&cfg.task).map_err(ConfigError::from)?(&TaskParams::from_config(cfg)).into();
        let barrier: Arc<dyn BarrierFunction> = barrier::registry().get(&cfg.cbf).map_err(ConfigError::from)?().into();
        let integrator: Arc<dyn Integrator> =
            integrator::registry().get(&cfg.integrator.method).map_err(ConfigError::from)?().into();
        Ok(Self::from_parts(geom, task, barrier, integrator, cfg.thrusters.clone(), cfg.gains.mu))
    }

    /// Assembles a filter from explicit strategy objects; geometry and
    /// strategies may be shared by several filters.
    pub fn from_parts(
        geom: Arc<AllocationGeometry>,
        task: Arc<dyn DynamicTask>,
        barrier: Arc<dyn BarrierFunction>,
        integrator: Arc<dyn Integrator>,
        thrusters: Vec<ThrusterSpec>,
        mu: f64,
    ) -> Self {
        let dims = geom.dims();
        Self {
            geom,
            task,
            barrier,
            integrator,
            thrusters,
            mu,
            projection_weights: None,
            state: FilterState::zeros(dims.p, dims.q),
        }
    }

    /// Per-thruster diagonal `Γ` of the barrier projection (default identity).
    pub fn set_projection_weights(&mut self, weights: Option<Vec<DVector<f64>>>) {
        self.projection_weights = weights;
    }

    pub fn geometry(&self) -> &Arc<AllocationGeometry> {
        &self.geom
    }

    pub fn task(&self) -> &Arc<dyn DynamicTask> {
        &self.task
    }

    pub fn thrusters(&self) -> &[ThrusterSpec] {
        &self.thrusters
    }

    pub fn mu(&self) -> f64 {
        self.mu
    }

    pub fn state(&self) -> &FilterState {
        &self.state
    }

    pub fn set_state(&mut self, state: FilterState) -> Result<(), FilterError> {
        let dims = self.geom.dims();
        check_dim("xi", dims.p, state.xi.len())?;
        check_dim("theta", dims.q, state.theta.len())?;
        if !state.is_finite() {
            return Err(FilterError::NonFinite("state"));
        }
        self.state = state;
        Ok(())
    }

    pub fn setpoints(&self) -> Vec<ThrusterSetpoint> {
        output_map(&self.thrusters, &self.geom, &self.state.xi)
    }

    /// Evaluates the filter field at an arbitrary point.
    pub fn evaluate(
        &self,
        xi: &DVector<f64>,
        theta: &DVector<f64>,
        tau_cmd: &DVector<f64>,
        tau_cmd_dot: &DVector<f64>,
    ) -> Result<Evaluation, FilterError> {
        let geom = &*self.geom;
        let xi_p = geom.particular_solution(tau_cmd);
        let xi_p_dot = geom.particular_solution(tau_cmd_dot);
        let xi_d = geom.desired_state(&xi_p, theta);
        let upsilon = self.task.upsilon(geom, &xi_d);
        let q_upsilon = geom.q() * &upsilon;
        let xi_tilde = xi - &xi_d;

        let mut kappa = DVector::zeros(xi.len());
        let mut phi = DVector::zeros(xi.len());
        let mut constraints = Vec::with_capacity(self.thrusters.len());
        let mut flags = Vec::with_capacity(self.thrusters.len());
        for (i, (spec, r)) in self.thrusters.iter().zip(geom.slices()).enumerate() {
            let (s, k) = (r.start, r.len());
            let kappa_i = nominal_control(
                spec.rate_limit,
                spec.zeta,
                xi_tilde.rows(s, k),
                xi_p_dot.rows(s, k),
                q_upsilon.rows(s, k),
            );
            let set = self.barrier.constraint(spec.f_max, spec.rho, xi.rows(s, k));
            let gamma = self.projection_weights.as_ref().map(|w| &w[i]);
            let (phi_i, active) = safe_control(&kappa_i, &set, gamma)?;
            kappa.rows_mut(s, k).copy_from(&kappa_i);
            phi.rows_mut(s, k).copy_from(&phi_i);
            flags.push(ThrusterFlags {
                cbf_active: active,
                nominal_in_safe_set: !active,
            });
            constraints.push(set);
        }
        let theta_dot = theta_dot(geom, self.mu, xi, &xi_d, &upsilon);
        let diagnostics = StepDiagnostics {
            thrusters: flags,
            v: clf_value(geom, xi, &xi_d),
            j: self.task.cost(geom, &xi_d),
            residual: (geom.load(xi) - tau_cmd).norm(),
        };
        Ok(Evaluation {
            xi_p,
            xi_p_dot,
            xi_d,
            upsilon,
            kappa,
            phi,
            constraints,
            theta_dot,
            diagnostics,
        })
    }

    /// Advances the filter by `dt` with the command extrapolated to first
    /// order, `τ_cmd(t + s) = τ_cmd + s τ̇_cmd`, across the step.
    pub fn step(&mut self, tau_cmd: &DVector<f64>, tau_cmd_dot: &DVector<f64>, dt: f64) -> Result<StepOutput, FilterError> {
        check_dim("tau_cmd", DOF, tau_cmd.len())?;
        check_dim("tau_cmd_dot", DOF, tau_cmd_dot.len())?;
        if !tau_cmd.iter().chain(tau_cmd_dot.iter()).all(|x| x.is_finite()) {
            return Err(FilterError::NonFinite("command"));
        }
        let t0 = self.state.t;
        self.step_with(&|t| (tau_cmd + tau_cmd_dot * (t - t0), tau_cmd_dot.clone()), dt)
    }

    /// Advances the filter by `dt`, sampling the command at every
    /// integrator stage.
    pub fn step_with(
        &mut self,
        command: &dyn Fn(f64) -> (DVector<f64>, DVector<f64>),
        dt: f64,
    ) -> Result<StepOutput, FilterError> {
        if !(dt.is_finite() && dt > 0.0) {
            return Err(FilterError::BadStep(dt));
        }
        let dims = self.geom.dims();
        let (p, q) = (dims.p, dims.q);
        let (tau0, tau_dot0) = command(self.state.t);
        if !tau0.iter().chain(tau_dot0.iter()).all(|x| x.is_finite()) {
            return Err(FilterError::NonFinite("command"));
        }
        let first = self.evaluate(&self.state.xi, &self.state.theta, &tau0, &tau_dot0)?;

        let mut x = DVector::zeros(p + q);
        x.rows_mut(0, p).copy_from(&self.state.xi);
        x.rows_mut(p, q).copy_from(&self.state.theta);
        let t0 = self.state.t;
        let evaluation = first.clone();
        let mut cached = Some(first);
        let x0 = x.clone();
        let mut field = |t: f64, x: &DVector<f64>| -> Result<DVector<f64>, BarrierError> {
            let ev = match cached.take() {
                Some(ev) if t == t0 && *x == x0 => ev,
                _ => {
                    let xi = x.rows(0, p).clone_owned();
                    let theta = x.rows(p, q).clone_owned();
                    let (tau, tau_dot) = command(t);
                    match self.evaluate(&xi, &theta, &tau, &tau_dot) {
                        Ok(ev) => ev,
                        Err(FilterError::Barrier(e)) => return Err(e),
                        Err(_) => unreachable!("dimensions checked before integration"),
                    }
                }
            };
            let mut dx = DVector::zeros(p + q);
            dx.rows_mut(0, p).copy_from(&ev.phi);
            dx.rows_mut(p, q).copy_from(&ev.theta_dot);
            Ok(dx)
        };
        let next = self.integrator.step(&mut field, t0, &x, dt)?;
        if !next.iter().all(|v| v.is_finite()) {
            return Err(FilterError::NonFinite("state after step"));
        }
        self.state = FilterState {
            xi: next.rows(0, p).clone_owned(),
            theta: next.rows(p, q).clone_owned(),
            t: t0 + dt,
        };
        Ok(StepOutput {
            setpoints: self.setpoints(),
            diagnostics: evaluation.diagnostics.clone(),
            evaluation,
        })
    }
}

fn check_dim(what: &'static str, expected: usize, got: usize) -> Result<(), FilterError> {
    if expected == got {
        Ok(())
    } else {
        Err(FilterError::Dimension { what, expected, got })
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::presets;

    fn v(x: &[f64]) -> DVector<f64> {
        DVector::from_column_slice(x)
    }

    #[test]
    fn nominal_is_pure_feedforward_on_manifold() {
        let k = nominal_control(1.0, 0.1, v(&[0.0, 0.0]).as_view(), v(&[0.2, 0.1]).as_view(), v(&[-0.05, 0.3]).as_view());
        assert!((k - v(&[0.15, 0.4])).amax() < 1e-15);
    }

    #[test]
    fn nominal_feedback_example() {
        let z = v(&[0.0, 0.0]);
        let k = nominal_control(1.0, 0.1, v(&[0.3, 0.4]).as_view(), z.as_view(), z.as_view());
        assert!((k - v(&[-0.5, -2.0 / 3.0])).amax() < 1e-15);
    }

    #[test]
    fn nominal_feedback_saturates_below_rate_limit() {
        let z = v(&[0.0, 0.0]);
        let k = nominal_control(2.0, 0.01, v(&[300.0, -400.0]).as_view(), z.as_view(), z.as_view());
        assert!(k.norm() < 2.0 && k.norm() > 1.9999);
    }

    #[test]
    fn theta_dot_reduces_to_upsilon() {
        let g = AllocationGeometry::from_config(&presets::cse1()).unwrap();
        let xi_d = v(&[0.1, 0.2, 0.3, -0.1, 0.05]);
        let ups = v(&[0.4, -0.3]);
        assert!((theta_dot(&g, 2.0, &xi_d, &xi_d, &ups) - &ups).amax() < 1e-15);
        let xi = v(&[0.5, 0.0, 0.5, 0.0, 0.5]);
        assert!((theta_dot(&g, 0.0, &xi, &xi_d, &ups) - &ups).amax() < 1e-15);
    }

    #[test]
    fn angle_range() {
        assert_eq!(wrap_angle((-0.0f64).atan2(-1.0)), std::f64::consts::PI);
        assert_eq!(wrap_angle(0.5), 0.5);
    }

    #[test]
    fn equilibrium_at_origin() {
        let mut f = ReferenceFilter::from_config(&presets::cse1()).unwrap();
        let zero = DVector::zeros(3);
        for _ in 0..100 {
            let out = f.step(&zero, &zero, 0.01).unwrap();
            assert!(out.setpoints.iter().all(|s| s.force == 0.0));
        }
        assert_eq!(f.state().xi, DVector::zeros(5));
        assert_eq!(f.state().theta, DVector::zeros(2));
        assert!((f.state().t - 1.0).abs() < 1e-12);
    }

    #[test]
    fn non_finite_input_leaves_state_unchanged() {
        let mut f = ReferenceFilter::from_config(&presets::cse1()).unwrap();
        let before = f.state().clone();
        let bad = v(&[f64::NAN, 0.0, 0.0]);
        assert!(matches!(f.step(&bad, &DVector::zeros(3), 0.01), Err(FilterError::NonFinite(_))));
        assert!(matches!(f.step(&DVector::zeros(3), &DVector::zeros(3), 0.0), Err(FilterError::BadStep(_))));
        assert_eq!(f.state(), &before);
    }

    #[test]
    fn output_map_reconstructs_azimuth_forces() {
        let cfg = presets::cse1();
        let g = AllocationGeometry::from_config(&cfg).unwrap();
        let xi = v(&[-0.3, -0.0, 0.2, -0.7, -0.4]);
        let sp = output_map(&cfg.thrusters, &g, &xi);
        for (i, s) in sp.iter().take(2).enumerate() {
            let r = g.slice(i);
            assert!((s.force * s.alpha.cos() - xi[r.start]).abs() < 1e-12);
            assert!((s.force * s.alpha.sin() - xi[r.start + 1]).abs() < 1e-12);
            assert!(s.alpha > -std::f64::consts::PI && s.alpha <= std::f64::consts::PI);
        }
        assert_eq!(sp[2].force, -0.4);
    }
}
