//! Fixed-step explicit integrators for the filter state.

use std::sync::LazyLock;

use nalgebra::DVector;

use crate::barrier::BarrierError;
use crate::registry::Registry;

/// `ẋ = f(t, x)`; the only fallible part of the filter field is the
/// barrier projection.
pub type VectorField<'a> = dyn FnMut(f64, &DVector<f64>) -> Result<DVector<f64>, BarrierError> + 'a;

pub trait Integrator: Send + Sync + std::fmt::Debug {
    fn name(&self) -> &'static str;

    /// Advances `x` from `t` to `t + dt`.
    fn step(&self, f: &mut VectorField<'_>, t: f64, x: &DVector<f64>, dt: f64) -> Result<DVector<f64>, BarrierError>;
}

#[derive(Debug, Clone, Copy, Default)]
pub struct Euler;

impl Integrator for Euler {
    fn name(&self) -> &'static str {
        "euler"
    }

    fn step(&self, f: &mut VectorField<'_>, t: f64, x: &DVector<f64>, dt: f64) -> Result<DVector<f64>, BarrierError> {
        Ok(x + f(t, x)? * dt)
    }
}

/// Classical fourth-order Runge-Kutta.
#[derive(Debug, Clone, Copy, Default)]
pub struct Rk4;

impl Integrator for Rk4 {
    fn name(&self) -> &'static str {
        "rk4"
    }

    fn step(&self, f: &mut VectorField<'_>, t: f64, x: &DVector<f64>, dt: f64) -> Result<DVector<f64>, BarrierError> {
        let h2 = 0.5 * dt;
        let k1 = f(t, x)?;
        let k2 = f(t + h2, &(x + &k1 * h2))?;
        let k3 = f(t + h2, &(x + &k2 * h2))?;
        let k4 = f(t + dt, &(x + &k3 * dt))?;
        Ok(x + (k1 + (k2 + k3) * 2.0 + k4) * (dt / 6.0))
    }
}

pub type IntegratorFactory = fn() -> Box<dyn Integrator>;

fn euler() -> Box<dyn Integrator> {
    Box::new(Euler)
}

fn rk4() -> Box<dyn Integrator> {
    Box::new(Rk4)
}

static REGISTRY: LazyLock<Registry<IntegratorFactory>> = LazyLock::new(|| {
    Registry::new("integrator")
        .with("euler", euler as IntegratorFactory)
        .with("rk4", rk4 as IntegratorFactory)
});

pub fn registry() -> &'static Registry<IntegratorFactory> {
    &REGISTRY
}
