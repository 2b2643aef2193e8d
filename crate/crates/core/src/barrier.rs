//! Per-thruster saturation barriers and the closed-form half-space
//! projection that turns a nominal control into a safe one.
//!
//! A barrier `C_i(ξ_i) ≤ 0` with time constant `ρ_i` yields the admissible
//! control set `U_i = {φ : a + bᵀφ ≤ 0}`; [`safe_control`] returns the
//! `Γ`-weighted closest point of `U_i` to the nominal control.

use std::sync::LazyLock;

use nalgebra::{DVector, DVectorView};

use crate::registry::Registry;

/// Regularization of `|ξ_i|` in the norm barrier, N.
pub const NORM_CBF_EPSILON: f64 = 1e-9;

/// `{u : a + bᵀu ≤ 0}`.
#[derive(Debug, Clone, PartialEq)]
pub struct HalfSpace {
    pub a: f64,
    pub b: DVector<f64>,
}

impl HalfSpace {
    pub fn margin(&self, u: &DVector<f64>) -> f64 {
        self.a + self.b.dot(u)
    }

    pub fn contains(&self, u: &DVector<f64>) -> bool {
        self.margin(u) <= 0.0
    }
}

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum BarrierError {
    #[error("nominal control violates the barrier (a + bᵀκ = {margin:e}) but b = 0")]
    Infeasible { margin: f64 },
    #[error("projection weight must be positive, got {0}")]
    BadWeight(f64),
}

pub trait BarrierFunction: Send + Sync + std::fmt::Debug {
    fn name(&self) -> &'static str;

    /// Barrier value `C_i(ξ_i)`.
    fn value(&self, f_max: f64, xi: DVectorView<'_, f64>) -> f64;

    /// Safe control set at `ξ_i` for saturation `f_max` and time constant `rho`.
    fn constraint(&self, f_max: f64, rho: f64, xi: DVectorView<'_, f64>) -> HalfSpace;
}

/// `C = ξᵀξ - F²_max`, so `a = C`, `b = 2ρξ`.
#[derive(Debug, Clone, Copy, Default)]
pub struct QuadraticBarrier;

impl BarrierFunction for QuadraticBarrier {
    fn name(&self) -> &'static str {
        "quadratic"
    }

    fn value(&self, f_max: f64, xi: DVectorView<'_, f64>) -> f64 {
        xi.norm_squared() - f_max * f_max
    }

    fn constraint(&self, f_max: f64, rho: f64, xi: DVectorView<'_, f64>) -> HalfSpace {
        HalfSpace {
            a: self.value(f_max, xi),
            b: xi.clone_owned() * (2.0 * rho),
        }
    }
}

/// `C = |ξ| - F_max`, so `a = C`, `b = ρξ/(|ξ| + ε)`.
#[derive(Debug, Clone, Copy)]
pub struct NormBarrier {
    pub epsilon: f64,
}

impl Default for NormBarrier {
    fn default() -> Self {
        Self {
            epsilon: NORM_CBF_EPSILON,
        }
    }
}

impl BarrierFunction for NormBarrier {
    fn name(&self) -> &'static str {
        "norm"
    }

    fn value(&self, f_max: f64, xi: DVectorView<'_, f64>) -> f64 {
        xi.norm() - f_max
    }

    fn constraint(&self, f_max: f64, rho: f64, xi: DVectorView<'_, f64>) -> HalfSpace {
        let norm = xi.norm();
        HalfSpace {
            a: norm - f_max,
            b: xi.clone_owned() * (rho / (norm + self.epsilon)),
        }
    }
}

/// Closest point of `{u : a + bᵀu ≤ 0}` to `kappa` in the metric of the
/// diagonal weight `gamma` (`None` means `Γ = I`).
///
/// Returns the safe control and whether the projection was applied.
pub fn safe_control(
    kappa: &DVector<f64>,
    set: &HalfSpace,
    gamma: Option<&DVector<f64>>,
) -> Result<(DVector<f64>, bool), BarrierError> {
    let margin = set.margin(kappa);
    if margin <= 0.0 {
        return Ok((kappa.clone(), false));
    }
    let g_inv_b = match gamma {
        None => set.b.clone(),
        Some(g) => {
            if let Some(&bad) = g.iter().find(|v| !(**v > 0.0)) {
                return Err(BarrierError::BadWeight(bad));
            }
            set.b.component_div(g)
        }
    };
    let denom = set.b.dot(&g_inv_b);
    if !(denom > 0.0) {
        return Err(BarrierError::Infeasible { margin });
    }
    Ok((kappa - g_inv_b * (margin / denom), true))
}

pub type BarrierFactory = fn() -> Box<dyn BarrierFunction>;

fn quadratic() -> Box<dyn BarrierFunction> {
    Box::new(QuadraticBarrier)
}

fn norm() -> Box<dyn BarrierFunction> {
    Box::new(NormBarrier::default())
}

static REGISTRY: LazyLock<Registry<BarrierFactory>> = LazyLock::new(|| {
    Registry::new("cbf")
        .with("quadratic", quadratic as BarrierFactory)
        .with("norm", norm as BarrierFactory)
});

/// Built-in barrier functions.
pub fn registry() -> &'static Registry<BarrierFactory> {
    &REGISTRY
}
