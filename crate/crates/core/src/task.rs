//! Convex secondary costs `J(t, θ) = Σ J_i(ξ_{d,i})` and their gradient
//! flows `υ = -γ ∇_θJᵀ` over the nullspace parameter.
//!
//! Each cost family implements [`DynamicTask`] and is registered by name in
//! [`registry`].

use std::sync::LazyLock;

use nalgebra::DVector;

use crate::config::{ThrusterKind, VesselConfig};
use crate::geometry::AllocationGeometry;
use crate::registry::Registry;

/// Per-thruster cost parameters.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ThrusterCost {
    pub weight: f64,
    pub lambda: f64,
    /// Unit reference direction (azimuth thrusters) or `[σ_ref, 0]` (fixed).
    pub reference: [f64; 2],
}

#[derive(Debug, Clone, PartialEq)]
pub struct TaskParams {
    pub gamma: f64,
    pub epsilon: f64,
    pub thrusters: Vec<ThrusterCost>,
}

impl TaskParams {
    pub fn from_config(cfg: &VesselConfig) -> Self {
        let thrusters = cfg
            .thrusters
            .iter()
            .map(|t| ThrusterCost {
                weight: t.weight,
                lambda: t.lambda,
                reference: match t.kind {
                    ThrusterKind::VaryingAzimuth => t.azimuth_ref_vector(),
                    ThrusterKind::FixedDirection => [t.force_sign_ref, 0.0],
                },
            })
            .collect();
        Self {
            gamma: cfg.gains.gamma,
            epsilon: cfg.gains.epsilon,
            thrusters,
        }
    }
}

/// Normalizes an azimuth reference vector onto the unit circle.
pub fn unit_reference(a: [f64; 2]) -> [f64; 2] {
    let n = a[0].hypot(a[1]);
    [a[0] / n, a[1] / n]
}

/// A secondary objective over the solution manifold.
///
/// All methods take the desired state `ξ_d = ξ_p + Qθ` already evaluated.
pub trait DynamicTask: Send + Sync + std::fmt::Debug {
    fn name(&self) -> &'static str;

    fn gamma(&self) -> f64;

    /// `J` at `ξ_d`.
    fn cost(&self, geom: &AllocationGeometry, xi_d: &DVector<f64>) -> f64;

    /// `∇_θJᵀ` as a q-vector, in the form the flow uses.
    fn gradient_theta(&self, geom: &AllocationGeometry, xi_d: &DVector<f64>) -> DVector<f64>;

    /// Dynamic assignment `υ = -γ ∇_θJᵀ`.
    fn upsilon(&self, geom: &AllocationGeometry, xi_d: &DVector<f64>) -> DVector<f64> {
        -self.gamma() * self.gradient_theta(geom, xi_d)
    }

    /// The potential whose exact gradient is [`DynamicTask::gradient_theta`].
    /// Equals [`DynamicTask::cost`] unless the family regularizes its gradient.
    fn flow_potential(&self, geom: &AllocationGeometry, xi_d: &DVector<f64>) -> f64 {
        self.cost(geom, xi_d)
    }
}

/// `K(z) = ½ zᵀWz`.
#[derive(Debug, Clone)]
pub struct MinSquaredNorm {
    pub gamma: f64,
}

impl DynamicTask for MinSquaredNorm {
    fn name(&self) -> &'static str {
        "min_squared_norm"
    }

    fn gamma(&self) -> f64 {
        self.gamma
    }

    fn cost(&self, geom: &AllocationGeometry, xi_d: &DVector<f64>) -> f64 {
        0.5 * xi_d.iter().zip(geom.weights().iter()).map(|(x, w)| w * x * x).sum::<f64>()
    }

    /// `QᵀWξ_d`, which equals `QᵀWQθ` because `QᵀWB†_W = 0`.
    fn gradient_theta(&self, geom: &AllocationGeometry, xi_d: &DVector<f64>) -> DVector<f64> {
        geom.q().tr_mul(&xi_d.component_mul(geom.weights()))
    }
}

/// Sum of `P_i(z) = w_i(|z| - λ_i a_refᵀz)` over azimuth thrusters and
/// `L_i(z) = w_i(|z| - λ_i σ_ref z)` over fixed ones.
#[derive(Debug, Clone)]
pub struct AzimuthPenalty {
    pub gamma: f64,
    pub epsilon: f64,
    pub thrusters: Vec<ThrusterCost>,
}

impl AzimuthPenalty {
    pub fn new(params: &TaskParams) -> Self {
        let thrusters = params
            .thrusters
            .iter()
            .map(|c| ThrusterCost {
                reference: unit_reference(c.reference),
                ..*c
            })
            .collect();
        Self {
            gamma: params.gamma,
            epsilon: params.epsilon,
            thrusters,
        }
    }

    fn per_thruster<F: FnMut(&ThrusterCost, nalgebra::DVectorView<'_, f64>, usize, std::ops::Range<usize>)>(
        &self,
        geom: &AllocationGeometry,
        xi_d: &DVector<f64>,
        mut f: F,
    ) {
        for (i, (cost, range)) in self.thrusters.iter().zip(geom.slices()).enumerate() {
            f(cost, xi_d.rows(range.start, range.len()), i, range.clone());
        }
    }

    fn reference(cost: &ThrusterCost, width: usize) -> &[f64] {
        &cost.reference[..width]
    }
}

/// `w(|z| - λ aᵀz)` for a reference vector `a` of matching dimension.
pub fn penalty(z: &[f64], weight: f64, lambda: f64, reference: &[f64]) -> f64 {
    let norm = z.iter().map(|x| x * x).sum::<f64>().sqrt();
    let align: f64 = z.iter().zip(reference).map(|(x, a)| x * a).sum();
    weight * (norm - lambda * align)
}

impl DynamicTask for AzimuthPenalty {
    fn name(&self) -> &'static str {
        "azimuth_penalty"
    }

    fn gamma(&self) -> f64 {
        self.gamma
    }

    fn cost(&self, geom: &AllocationGeometry, xi_d: &DVector<f64>) -> f64 {
        let mut j = 0.0;
        self.per_thruster(geom, xi_d, |c, z, _, r| {
            j += penalty(z.as_slice(), c.weight, c.lambda, Self::reference(c, r.len()));
        });
        j
    }

    /// `Σ w_i Q_iᵀ(ξ_{d,i}/(|ξ_{d,i}| + ε) - λ_i a_{ref,i})`.
    fn gradient_theta(&self, geom: &AllocationGeometry, xi_d: &DVector<f64>) -> DVector<f64> {
        let q = geom.q();
        let mut grad = DVector::zeros(q.ncols());
        self.per_thruster(geom, xi_d, |c, z, _, r| {
            let norm = z.norm() + self.epsilon;
            let denom = if norm > 0.0 { norm } else { 1.0 };
            let a = Self::reference(c, r.len());
            for (k, row) in r.clone().enumerate() {
                let g = c.weight * (z[k] / denom - c.lambda * a[k]);
                grad.axpy(g, &q.row(row).transpose(), 1.0);
            }
        });
        grad
    }

    /// Replaces `|z|` by `|z| - ε ln(1 + |z|/ε)`, whose gradient is
    /// `z/(|z| + ε)`.
    fn flow_potential(&self, geom: &AllocationGeometry, xi_d: &DVector<f64>) -> f64 {
        let eps = self.epsilon;
        let mut j = 0.0;
        self.per_thruster(geom, xi_d, |c, z, _, r| {
            let n = z.norm();
            let smooth = if eps > 0.0 { n - eps * (n / eps).ln_1p() } else { n };
            let align: f64 = z.iter().zip(Self::reference(c, r.len())).map(|(x, a)| x * a).sum();
            j += c.weight * (smooth - c.lambda * align);
        });
        j
    }
}

pub type TaskFactory = fn(&TaskParams) -> Box<dyn DynamicTask>;

fn min_squared_norm(p: &TaskParams) -> Box<dyn DynamicTask> {
    Box::new(MinSquaredNorm { gamma: p.gamma })
}

fn azimuth_penalty(p: &TaskParams) -> Box<dyn DynamicTask> {
    Box::new(AzimuthPenalty::new(p))
}

static REGISTRY: LazyLock<Registry<TaskFactory>> = LazyLock::new(|| {
    Registry::new("task")
        .with("min_squared_norm", min_squared_norm as TaskFactory)
        .with("azimuth_penalty", azimuth_penalty as TaskFactory)
});

/// Built-in cost families.
pub fn registry() -> &'static Registry<TaskFactory> {
    &REGISTRY
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::presets;
    use nalgebra::DMatrix;

    fn scalar_geom() -> AllocationGeometry {
        let b = DMatrix::from_row_slice(1, 2, &[1.0, 2.0]);
        AllocationGeometry::from_matrix(b, DVector::from_element(2, 1.0), &[1, 1]).unwrap()
    }

    #[test]
    fn squared_norm_value() {
        let g = scalar_geom();
        let task = MinSquaredNorm { gamma: 1.0 };
        assert_eq!(task.cost(&g, &DVector::from_vec(vec![3.0, 4.0])), 12.5);
    }

    #[test]
    fn aligned_full_penalty_is_zero() {
        let a = unit_reference([1.0, 1.0]);
        let z = [a[0] * 2.0, a[1] * 2.0];
        assert!(penalty(&z, 1.0, 1.0, &a).abs() < 1e-15);
    }

    #[test]
    fn unnormalized_reference_value() {
        // reference of norm 2 used as given
        let s2 = 2f64.sqrt();
        let j = penalty(&[1.0, 0.0], 1.0, 0.9, &[s2, -s2]);
        assert!((j - (1.0 - 0.9 * s2)).abs() < 1e-15);
        assert!((j + 0.272792206135786).abs() < 1e-12);
    }

    #[test]
    fn reference_is_normalized_on_construction() {
        let s2 = 2f64.sqrt();
        let params = TaskParams {
            gamma: 1.0,
            epsilon: 1e-6,
            thrusters: vec![ThrusterCost {
                weight: 1.0,
                lambda: 0.9,
                reference: [s2, -s2],
            }],
        };
        let t = AzimuthPenalty::new(&params);
        let r = t.thrusters[0].reference;
        assert!((r[0].hypot(r[1]) - 1.0).abs() < 1e-15);
    }

    #[test]
    fn squared_norm_flow_is_minus_gamma_theta_with_unit_weights() {
        let g = AllocationGeometry::from_config(&presets::cse1()).unwrap();
        let task = MinSquaredNorm { gamma: 0.3 };
        let xi_p = g.particular_solution(&DVector::from_vec(vec![0.4, -0.2, 0.1]));
        let theta = DVector::from_vec(vec![0.7, -1.1]);
        let ups = task.upsilon(&g, &g.desired_state(&xi_p, &theta));
        assert!((ups - theta * -0.3).amax() < 1e-14);
        let zero = task.upsilon(&g, &g.desired_state(&xi_p, &DVector::zeros(2)));
        assert!(zero.amax() < 1e-15);
    }

    #[test]
    fn lambda_zero_is_pure_norm_flow() {
        let cfg = presets::cse1_with_task("azimuth_penalty");
        let g = AllocationGeometry::from_config(&cfg).unwrap();
        let params = TaskParams::from_config(&cfg);
        let task = AzimuthPenalty::new(&params);
        let xi_d = DVector::from_vec(vec![0.3, -0.1, 0.2, 0.4, -0.5]);
        let mut expected = DVector::zeros(2);
        for r in g.slices() {
            let z = xi_d.rows(r.start, r.len());
            let qi = g.q().rows(r.start, r.len());
            expected += qi.tr_mul(&z) / (z.norm() + params.epsilon);
        }
        expected *= -params.gamma;
        assert!((task.upsilon(&g, &xi_d) - expected).amax() < 1e-15);
    }

    #[test]
    fn aligned_gradient_component_vanishes() {
        // one azimuth thruster plus one fixed, aligned with λ = 1
        let b = DMatrix::from_row_slice(1, 3, &[1.0, 0.0, 1.0]);
        let g = AllocationGeometry::from_matrix(b, DVector::from_element(3, 1.0), &[2, 1]).unwrap();
        let a = unit_reference([1.0, 1.0]);
        let params = TaskParams {
            gamma: 1.0,
            epsilon: 1e-6,
            thrusters: vec![
                ThrusterCost { weight: 1.0, lambda: 1.0, reference: a },
                ThrusterCost { weight: 1.0, lambda: 0.0, reference: [1.0, 0.0] },
            ],
        };
        let task = AzimuthPenalty::new(&params);
        let z = 3.0;
        let xi_d = DVector::from_vec(vec![z * a[0], z * a[1], 0.0]);
        let grad_z = z / (z + params.epsilon) - 1.0;
        assert!(grad_z.abs() < 1e-6);
        // the λ=1 thruster contributes Q_iᵀ a (|ξ|/(|ξ|+ε) − 1)
        let q = g.q();
        let contributions = task.gradient_theta(&g, &xi_d);
        let expected_az = q.rows(0, 2).tr_mul(&DVector::from_vec(a.to_vec())) * grad_z;
        // the fixed thruster sits at zero so its regularized term vanishes
        assert!((contributions - expected_az).amax() < 1e-12);
    }

    #[test]
    fn registry_builds_both_families() {
        let params = TaskParams::from_config(&presets::cse1());
        for name in ["min_squared_norm", "azimuth_penalty"] {
            let task = registry().get(name).unwrap()(&params);
            assert_eq!(task.name(), name);
        }
    }
}
