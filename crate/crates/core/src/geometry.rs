//! Effector model and the affine solution manifold `ξ_d = ξ_p + Qθ`.
//!
//! `B` is constant because azimuth thrusters are represented by their
//! rectangular force components, so the weighted pseudoinverse and the
//! nullspace basis are computed once at construction.

use std::ops::Range;

use nalgebra::{DMatrix, DVector};

use crate::config::{ThrusterKind, VesselConfig, DOF};

/// Relative singular-value threshold below which `B` is rank deficient.
pub const RANK_TOL: f64 = 1e-9;

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum GeometryError {
    #[error("configuration matrix is rank deficient: sigma_min / sigma_max = {sigma_min:e} / {sigma_max:e}")]
    RankDeficient { sigma_min: f64, sigma_max: f64 },
    #[error("configuration matrix has no overactuation: p = {p}, n = {n}")]
    NoNullspace { n: usize, p: usize },
    #[error("weight matrix must be positive definite (entry {index} = {value})")]
    NonPositiveWeight { index: usize, value: f64 },
    #[error("dimension mismatch: expected {expected}, got {got}")]
    Dimension { expected: usize, got: usize },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Dims {
    pub n: usize,
    pub p: usize,
    pub q: usize,
}

/// Stacks the per-thruster effector columns into `B` (n × p).
///
/// An azimuth thruster contributes `[I₂; lᵀSᵀ]`, whose yaw row is
/// `(-l_y, l_x)`. A fixed thruster contributes `[a; lᵀSᵀa]` with
/// `a = (cos α, sin α)`.
pub fn build_configuration_matrix(cfg: &VesselConfig) -> DMatrix<f64> {
    let mut b = DMatrix::zeros(DOF, cfg.p());
    let mut col = 0;
    for t in &cfg.thrusters {
        let [lx, ly] = t.lever_arm;
        match t.kind {
            ThrusterKind::VaryingAzimuth => {
                b[(0, col)] = 1.0;
                b[(2, col)] = -ly;
                b[(1, col + 1)] = 1.0;
                b[(2, col + 1)] = lx;
                col += 2;
            }
            ThrusterKind::FixedDirection => {
                let [ax, ay] = t.direction();
                b[(0, col)] = ax;
                b[(1, col)] = ay;
                b[(2, col)] = lx * ay - ly * ax;
                col += 1;
            }
        }
    }
    b
}

/// Checks `rank(B) = n` from the singular values and returns the dimensions.
pub fn validate_geometry(b: &DMatrix<f64>) -> Result<Dims, GeometryError> {
    let (n, p) = b.shape();
    if n == 0 || p < n {
        return Err(GeometryError::RankDeficient {
            sigma_min: 0.0,
            sigma_max: 0.0,
        });
    }
    let sv = b.singular_values();
    let sigma_max = sv.max();
    let sigma_min = sv.min();
    if !(sigma_max > 0.0) || sigma_min <= RANK_TOL * sigma_max {
        return Err(GeometryError::RankDeficient { sigma_min, sigma_max });
    }
    Ok(Dims { n, p, q: p - n })
}

/// `W⁻¹Bᵀ[BW⁻¹Bᵀ]⁻¹` for diagonal `W` given by its diagonal entries.
pub fn weighted_pseudoinverse(b: &DMatrix<f64>, w: &DVector<f64>) -> Result<DMatrix<f64>, GeometryError> {
    let (_, p) = b.shape();
    if w.len() != p {
        return Err(GeometryError::Dimension {
            expected: p,
            got: w.len(),
        });
    }
    if let Some((index, &value)) = w.iter().enumerate().find(|(_, v)| !(**v > 0.0 && v.is_finite())) {
        return Err(GeometryError::NonPositiveWeight { index, value });
    }
    let w_inv_bt = DMatrix::from_fn(p, b.nrows(), |r, c| b[(c, r)] / w[r]);
    let gram = b * &w_inv_bt;
    let chol = gram.clone().cholesky().ok_or_else(|| {
        let sv = gram.singular_values();
        GeometryError::RankDeficient {
            sigma_min: sv.min(),
            sigma_max: sv.max(),
        }
    })?;
    // X = W⁻¹Bᵀ G⁻¹  ⇔  G Xᵀ = (W⁻¹Bᵀ)ᵀ since G is symmetric
    Ok(chol.solve(&w_inv_bt.transpose()).transpose())
}

/// Orthonormal basis of `𝒩(B)` (p × q).
///
/// Taken from the right singular vectors of `B` padded with zero rows to a
/// square matrix, so that the full set of right singular vectors is
/// available. Each column is signed so its largest-magnitude entry is
/// positive; callers should still rely only on the span.
pub fn nullspace_basis(b: &DMatrix<f64>) -> Result<DMatrix<f64>, GeometryError> {
    let dims = validate_geometry(b)?;
    if dims.q == 0 {
        return Err(GeometryError::NoNullspace { n: dims.n, p: dims.p });
    }
    let mut padded = DMatrix::zeros(dims.p, dims.p);
    padded.view_mut((0, 0), (dims.n, dims.p)).copy_from(b);
    let svd = padded.svd(false, true);
    let v_t = svd.v_t.expect("requested right singular vectors");
    let mut order: Vec<usize> = (0..dims.p).collect();
    order.sort_by(|&i, &j| svd.singular_values[i].total_cmp(&svd.singular_values[j]));
    let mut q = DMatrix::zeros(dims.p, dims.q);
    for (col, &k) in order.iter().take(dims.q).enumerate() {
        let mut v = v_t.row(k).transpose();
        let pivot = v.iter().copied().fold(0.0_f64, |acc, x| if x.abs() > acc.abs() { x } else { acc });
        if pivot < 0.0 {
            v.neg_mut();
        }
        q.set_column(col, &v);
    }
    Ok(q)
}

/// Immutable allocation geometry shared by the filter and its tasks.
#[derive(Debug, Clone)]
pub struct AllocationGeometry {
    b: DMatrix<f64>,
    weights: DVector<f64>,
    pinv: DMatrix<f64>,
    q: DMatrix<f64>,
    dims: Dims,
    m1: usize,
    m2: usize,
    slices: Vec<Range<usize>>,
}

impl AllocationGeometry {
    pub fn from_config(cfg: &VesselConfig) -> Result<Self, GeometryError> {
        let b = build_configuration_matrix(cfg);
        let mut weights = DVector::zeros(cfg.p());
        let mut slices = Vec::with_capacity(cfg.m());
        let mut row = 0;
        for t in &cfg.thrusters {
            let width = t.kind.width();
            weights.rows_mut(row, width).fill(t.weight);
            slices.push(row..row + width);
            row += width;
        }
        Self::assemble(b, weights, slices, cfg.m1(), cfg.m2())
    }

    /// Geometry from an arbitrary `B` whose columns are grouped by `widths`
    /// (2 for an azimuth thruster, 1 for a fixed one, azimuth groups first).
    pub fn from_matrix(b: DMatrix<f64>, weights: DVector<f64>, widths: &[usize]) -> Result<Self, GeometryError> {
        let total: usize = widths.iter().sum();
        if total != b.ncols() {
            return Err(GeometryError::Dimension {
                expected: b.ncols(),
                got: total,
            });
        }
        let mut slices = Vec::with_capacity(widths.len());
        let mut row = 0;
        for &w in widths {
            slices.push(row..row + w);
            row += w;
        }
        let m1 = widths.iter().filter(|&&w| w == 2).count();
        Self::assemble(b, weights, slices, m1, widths.len() - m1)
    }

    fn assemble(
        b: DMatrix<f64>,
        weights: DVector<f64>,
        slices: Vec<Range<usize>>,
        m1: usize,
        m2: usize,
    ) -> Result<Self, GeometryError> {
        let dims = validate_geometry(&b)?;
        let pinv = weighted_pseudoinverse(&b, &weights)?;
        let q = nullspace_basis(&b)?;
        Ok(Self {
            b,
            weights,
            pinv,
            q,
            dims,
            m1,
            m2,
            slices,
        })
    }

    pub fn b(&self) -> &DMatrix<f64> {
        &self.b
    }

    /// Diagonal of `W`.
    pub fn weights(&self) -> &DVector<f64> {
        &self.weights
    }

    pub fn weight_matrix(&self) -> DMatrix<f64> {
        DMatrix::from_diagonal(&self.weights)
    }

    pub fn pinv(&self) -> &DMatrix<f64> {
        &self.pinv
    }

    pub fn q(&self) -> &DMatrix<f64> {
        &self.q
    }

    pub fn dims(&self) -> Dims {
        self.dims
    }

    pub fn m1(&self) -> usize {
        self.m1
    }

    pub fn m2(&self) -> usize {
        self.m2
    }

    pub fn thruster_count(&self) -> usize {
        self.slices.len()
    }

    /// Rows of `ξ` (and of `Q`) belonging to thruster `i`.
    pub fn slice(&self, i: usize) -> Range<usize> {
        self.slices[i].clone()
    }

    pub fn slices(&self) -> &[Range<usize>] {
        &self.slices
    }

    /// `ξ_p = B†_W τ_cmd`.
    pub fn particular_solution(&self, tau_cmd: &DVector<f64>) -> DVector<f64> {
        &self.pinv * tau_cmd
    }

    /// `ξ_d = ξ_p + Qθ`.
    pub fn desired_state(&self, xi_p: &DVector<f64>, theta: &DVector<f64>) -> DVector<f64> {
        xi_p + &self.q * theta
    }

    /// `τ = Bξ`.
    pub fn load(&self, xi: &DVector<f64>) -> DVector<f64> {
        &self.b * xi
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::presets;

    fn max_abs(m: &DMatrix<f64>) -> f64 {
        m.iter().fold(0.0, |a, x| a.max(x.abs()))
    }

    #[test]
    fn cse1_configuration_matrix() {
        let b = build_configuration_matrix(&presets::cse1());
        // hand-expanded columns: [1;0;-l_y], [0;1;l_x] per VSP, [cos α; sin α; l_x sin α - l_y cos α] for the tunnel
        let expected = DMatrix::from_row_slice(
            3,
            5,
            &[
                1.0, 0.0, 1.0, 0.0, 0.0, //
                0.0, 1.0, 0.0, 1.0, 1.0, //
                0.055, -0.4574, -0.055, -0.4574, 0.3875,
            ],
        );
        assert!(max_abs(&(b - expected)) < 1e-15);
    }

    #[test]
    fn zero_lever_arm_has_no_moment() {
        let mut cfg = presets::cse1();
        cfg.thrusters[0].lever_arm = [0.0, 0.0];
        let b = build_configuration_matrix(&cfg);
        assert_eq!(b.column(0).as_slice(), &[1.0, 0.0, 0.0]);
        assert_eq!(b.column(1).as_slice(), &[0.0, 1.0, 0.0]);
    }

    #[test]
    fn fixed_thruster_forward_offset_sideways() {
        let mut cfg = presets::cse1();
        let d = 0.7;
        cfg.thrusters[2].fixed_angle = 0.0;
        cfg.thrusters[2].lever_arm = [0.0, -d];
        let b = build_configuration_matrix(&cfg);
        let col = b.column(4);
        assert!((col[0] - 1.0).abs() < 1e-15 && col[1].abs() < 1e-15 && (col[2] - d).abs() < 1e-15);
    }

    #[test]
    fn dims_of_cse1_and_scalar_example() {
        let b = build_configuration_matrix(&presets::cse1());
        assert_eq!(validate_geometry(&b).unwrap(), Dims { n: 3, p: 5, q: 2 });
        let b = DMatrix::from_row_slice(1, 2, &[1.0, 2.0]);
        assert_eq!(validate_geometry(&b).unwrap(), Dims { n: 1, p: 2, q: 1 });
    }

    #[test]
    fn duplicate_fixed_thrusters_are_rank_deficient() {
        let col = [0.0, 1.0, 0.3875];
        let b = DMatrix::from_column_slice(3, 2, &[col, col].concat());
        assert!(matches!(validate_geometry(&b), Err(GeometryError::RankDeficient { .. })));
    }

    #[test]
    fn scalar_pseudoinverse() {
        let b = DMatrix::from_row_slice(1, 2, &[1.0, 2.0]);
        let x = weighted_pseudoinverse(&b, &DVector::from_element(2, 1.0)).unwrap();
        assert!((x[(0, 0)] - 0.2).abs() < 1e-15);
        assert!((x[(1, 0)] - 0.4).abs() < 1e-15);
    }

    #[test]
    fn square_identity_pseudoinverse() {
        let b = DMatrix::<f64>::identity(3, 3);
        let x = weighted_pseudoinverse(&b, &DVector::from_element(3, 1.0)).unwrap();
        assert!(max_abs(&(x - DMatrix::identity(3, 3))) < 1e-15);
    }

    #[test]
    fn cse1_right_inverse() {
        let b = build_configuration_matrix(&presets::cse1());
        let x = weighted_pseudoinverse(&b, &DVector::from_element(5, 1.0)).unwrap();
        assert!(max_abs(&(&b * x - DMatrix::identity(3, 3))) < 1e-12);
    }

    #[test]
    fn nonpositive_weight_rejected() {
        let b = DMatrix::from_row_slice(1, 2, &[1.0, 2.0]);
        let err = weighted_pseudoinverse(&b, &DVector::from_vec(vec![1.0, 0.0])).unwrap_err();
        assert_eq!(err, GeometryError::NonPositiveWeight { index: 1, value: 0.0 });
    }

    #[test]
    fn scalar_nullspace() {
        let b = DMatrix::from_row_slice(1, 2, &[1.0, 2.0]);
        let q = nullspace_basis(&b).unwrap();
        let s = 5f64.sqrt();
        // unique up to sign; the pivot convention picks the positive leading entry
        assert!((q[(0, 0)] - 2.0 / s).abs() < 1e-15);
        assert!((q[(1, 0)] + 1.0 / s).abs() < 1e-15);
    }

    #[test]
    fn coordinate_nullspace() {
        let b = DMatrix::from_row_slice(2, 3, &[1.0, 0.0, 0.0, 0.0, 1.0, 0.0]);
        let q = nullspace_basis(&b).unwrap();
        assert!((q[(2, 0)].abs() - 1.0).abs() < 1e-15);
        assert!(q[(0, 0)].abs() < 1e-15 && q[(1, 0)].abs() < 1e-15);
    }

    #[test]
    fn weighted_particular_solution_is_orthogonal_to_nullspace_for_any_w() {
        let mut cfg = presets::cse1();
        cfg.thrusters[0].weight = 3.0;
        cfg.thrusters[2].weight = 0.25;
        let g = AllocationGeometry::from_config(&cfg).unwrap();
        let prod = g.q().transpose() * g.weight_matrix() * g.pinv();
        assert!(max_abs(&prod) < 1e-12);
    }

    #[test]
    fn scalar_manifold_examples() {
        let b = DMatrix::from_row_slice(1, 2, &[1.0, 2.0]);
        let g = AllocationGeometry::from_matrix(b, DVector::from_element(2, 1.0), &[1, 1]).unwrap();
        let xi_p = g.particular_solution(&DVector::from_element(1, -6.0));
        assert!((xi_p[0] + 1.2).abs() < 1e-14 && (xi_p[1] + 2.4).abs() < 1e-14);
        assert!((g.q().column(0).dot(&xi_p)).abs() < 1e-14);
        let xi_d = g.desired_state(&xi_p, &DVector::from_element(1, 5f64.sqrt()));
        let shift = &xi_d - &xi_p;
        assert!((shift[0].abs() - 2.0).abs() < 1e-14 && (shift[1].abs() - 1.0).abs() < 1e-14);
        assert!(shift[0] * shift[1] < 0.0);
    }

    #[test]
    fn cse1_surge_splits_evenly() {
        let g = AllocationGeometry::from_config(&presets::cse1()).unwrap();
        let xi_p = g.particular_solution(&DVector::from_vec(vec![1.0, 0.0, 0.0]));
        assert!((xi_p[0] - xi_p[2]).abs() < 1e-14);
        assert!(xi_p[4].abs() < 1e-14);
        assert!((xi_p[0] - 0.5).abs() < 1e-14);
    }
}
