//! Vessel and thruster description: parsing, validation, serialization.
//!
//! The on-disk format is TOML. Angles are written in degrees and held in
//! radians once parsed. Thrusters are reordered on parse so that every
//! varying-azimuth unit precedes the fixed-direction ones, which fixes the
//! layout of the stacked force vector `ξ`.

use serde::{Deserialize, Serialize};

use crate::barrier;
use crate::integrator;
use crate::task;

/// Degrees of freedom of the planar workspace (surge, sway, yaw).
pub const DOF: usize = 3;

pub const DEFAULT_ZETA: f64 = 0.01;
pub const DEFAULT_RHO: f64 = 0.1;
pub const DEFAULT_WEIGHT: f64 = 1.0;
pub const DEFAULT_LAMBDA: f64 = 0.0;
pub const DEFAULT_EPSILON: f64 = 1e-6;
pub const DEFAULT_DT: f64 = 1e-3;

#[derive(Debug, thiserror::Error)]
pub enum ConfigError {
    #[error("syntax error at line {line}, column {column}: {message}")]
    Syntax {
        line: usize,
        column: usize,
        message: String,
    },
    #[error("{}: field `{field}` {message}", .thruster.as_deref().map(|t| format!("thruster `{t}`")).unwrap_or_else(|| "config".to_string()))]
    Schema {
        thruster: Option<String>,
        field: String,
        message: String,
    },
    #[error("not overactuated: p = {p} must exceed n = {n} (ordering requires at least 2 thrusters)")]
    Underactuated { p: usize, n: usize },
    #[error(transparent)]
    UnknownStrategy(#[from] crate::registry::UnknownStrategy),
}

impl ConfigError {
    fn schema(thruster: Option<&str>, field: &str, message: impl Into<String>) -> Self {
        ConfigError::Schema {
            thruster: thruster.map(str::to_string),
            field: field.to_string(),
            message: message.into(),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ThrusterKind {
    VaryingAzimuth,
    FixedDirection,
}

impl ThrusterKind {
    /// Number of entries this thruster occupies in `ξ`.
    pub fn width(self) -> usize {
        match self {
            ThrusterKind::VaryingAzimuth => 2,
            ThrusterKind::FixedDirection => 1,
        }
    }
}

/// One thruster, angles in radians.
#[derive(Debug, Clone, PartialEq)]
pub struct ThrusterSpec {
    pub id: String,
    pub kind: ThrusterKind,
    /// Body-frame displacement from the coordinate origin, meters.
    pub lever_arm: [f64; 2],
    /// Constant direction of a fixed-direction thruster.
    pub fixed_angle: f64,
    /// Force-magnitude saturation, N.
    pub f_max: f64,
    /// Rate limit bounding the feedback term of the nominal law, N/s.
    pub rate_limit: f64,
    /// Slope shaping of the nominal feedback at the origin, N.
    pub zeta: f64,
    /// Barrier time constant, s.
    pub rho: f64,
    pub weight: f64,
    pub lambda: f64,
    /// Reference azimuth of a varying-azimuth thruster.
    pub azimuth_ref: f64,
    /// Preferred force sign of a fixed-direction thruster, ±1.
    pub force_sign_ref: f64,
}

impl ThrusterSpec {
    pub fn azimuth(id: &str, lever_arm: [f64; 2], f_max: f64, rate_limit: f64) -> Self {
        Self {
            id: id.to_string(),
            kind: ThrusterKind::VaryingAzimuth,
            lever_arm,
            fixed_angle: 0.0,
            f_max,
            rate_limit,
            zeta: DEFAULT_ZETA,
            rho: DEFAULT_RHO,
            weight: DEFAULT_WEIGHT,
            lambda: DEFAULT_LAMBDA,
            azimuth_ref: 0.0,
            force_sign_ref: 1.0,
        }
    }

    pub fn fixed(id: &str, lever_arm: [f64; 2], angle: f64, f_max: f64, rate_limit: f64) -> Self {
        Self {
            kind: ThrusterKind::FixedDirection,
            fixed_angle: angle,
            ..Self::azimuth(id, lever_arm, f_max, rate_limit)
        }
    }

    /// Unit reference direction `[cos α_ref, sin α_ref]`.
    pub fn azimuth_ref_vector(&self) -> [f64; 2] {
        [self.azimuth_ref.cos(), self.azimuth_ref.sin()]
    }

    pub fn direction(&self) -> [f64; 2] {
        [self.fixed_angle.cos(), self.fixed_angle.sin()]
    }

    pub fn validate(&self) -> Result<(), ConfigError> {
        let id = Some(self.id.as_str());
        let positive = [
            ("f_max", self.f_max),
            ("rate_limit", self.rate_limit),
            ("zeta", self.zeta),
            ("rho", self.rho),
            ("weight", self.weight),
        ];
        for (field, value) in positive {
            if !(value.is_finite() && value > 0.0) {
                return Err(ConfigError::schema(id, field, format!("must be finite and > 0, got {value}")));
            }
        }
        if !(0.0..=1.0).contains(&self.lambda) {
            return Err(ConfigError::schema(id, "lambda", format!("must lie in [0, 1], got {}", self.lambda)));
        }
        if self.force_sign_ref != 1.0 && self.force_sign_ref != -1.0 {
            return Err(ConfigError::schema(
                id,
                "force_sign_ref",
                format!("must be +1 or -1, got {}", self.force_sign_ref),
            ));
        }
        for (field, value) in [
            ("lever_arm", self.lever_arm[0]),
            ("lever_arm", self.lever_arm[1]),
            ("fixed_angle", self.fixed_angle),
            ("azimuth_ref", self.azimuth_ref),
        ] {
            if !value.is_finite() {
                return Err(ConfigError::schema(id, field, "must be finite"));
            }
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Gains {
    /// Maneuvering gradient gain, ≥ 0.
    #[serde(default = "default_mu")]
    pub mu: f64,
    /// Descent gain of the dynamic task, > 0.
    #[serde(default = "default_gamma")]
    pub gamma: f64,
    /// Regularization of `|ξ_{d,i}|` in the azimuth-penalty flow, N.
    #[serde(default = "default_epsilon")]
    pub epsilon: f64,
}

fn default_mu() -> f64 {
    0.1
}
fn default_gamma() -> f64 {
    0.1
}
fn default_epsilon() -> f64 {
    DEFAULT_EPSILON
}

impl Default for Gains {
    fn default() -> Self {
        Self {
            mu: default_mu(),
            gamma: default_gamma(),
            epsilon: default_epsilon(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct IntegratorConfig {
    #[serde(default = "default_dt")]
    pub dt: f64,
    #[serde(default = "default_method")]
    pub method: String,
}

fn default_dt() -> f64 {
    DEFAULT_DT
}
fn default_method() -> String {
    "rk4".to_string()
}

impl Default for IntegratorConfig {
    fn default() -> Self {
        Self {
            dt: default_dt(),
            method: default_method(),
        }
    }
}

/// A validated vessel description.
#[derive(Debug, Clone, PartialEq)]
pub struct VesselConfig {
    /// Azimuth thrusters first, then fixed-direction thrusters.
    pub thrusters: Vec<ThrusterSpec>,
    pub gains: Gains,
    /// Barrier function name, resolved through [`barrier::registry`].
    pub cbf: String,
    /// Cost family name, resolved through [`task::registry`].
    pub task: String,
    pub integrator: IntegratorConfig,
}

impl VesselConfig {
    /// Builds a config from parts, normalizing thruster order, and validates it.
    pub fn new(
        thrusters: Vec<ThrusterSpec>,
        gains: Gains,
        cbf: &str,
        task: &str,
        integrator: IntegratorConfig,
    ) -> Result<Self, ConfigError> {
        let mut cfg = Self {
            thrusters,
            gains,
            cbf: cbf.to_string(),
            task: task.to_string(),
            integrator,
        };
        cfg.normalize_order();
        cfg.validate()?;
        Ok(cfg)
    }

    fn normalize_order(&mut self) {
        // stable: keeps relative order within each kind
        self.thrusters.sort_by_key(|t| t.kind == ThrusterKind::FixedDirection);
    }

    pub fn m1(&self) -> usize {
        self.thrusters.iter().filter(|t| t.kind == ThrusterKind::VaryingAzimuth).count()
    }

    pub fn m2(&self) -> usize {
        self.thrusters.len() - self.m1()
    }

    pub fn m(&self) -> usize {
        self.thrusters.len()
    }

    pub fn p(&self) -> usize {
        2 * self.m1() + self.m2()
    }

    pub fn n(&self) -> usize {
        DOF
    }

    pub fn validate(&self) -> Result<(), ConfigError> {
        let mut seen = std::collections::HashSet::new();
        for t in &self.thrusters {
            if t.id.is_empty() {
                return Err(ConfigError::schema(None, "id", "must not be empty"));
            }
            if !seen.insert(t.id.as_str()) {
                return Err(ConfigError::schema(Some(&t.id), "id", "is duplicated"));
            }
            t.validate()?;
        }
        let ordered = self
            .thrusters
            .windows(2)
            .all(|w| !(w[0].kind == ThrusterKind::FixedDirection && w[1].kind == ThrusterKind::VaryingAzimuth));
        if !ordered {
            return Err(ConfigError::schema(None, "thrusters", "azimuth thrusters must precede fixed ones"));
        }
        if self.m() < 2 || self.p() <= DOF {
            return Err(ConfigError::Underactuated { p: self.p(), n: DOF });
        }
        let g = &self.gains;
        if !(g.mu.is_finite() && g.mu >= 0.0) {
            return Err(ConfigError::schema(None, "gains.mu", format!("must be finite and >= 0, got {}", g.mu)));
        }
        if !(g.gamma.is_finite() && g.gamma > 0.0) {
            return Err(ConfigError::schema(None, "gains.gamma", format!("must be finite and > 0, got {}", g.gamma)));
        }
        if !(g.epsilon.is_finite() && g.epsilon > 0.0) {
            return Err(ConfigError::schema(
                None,
                "gains.epsilon",
                format!("must be finite and > 0, got {}", g.epsilon),
            ));
        }
        let dt = self.integrator.dt;
        if !(dt.is_finite() && dt > 0.0) {
            return Err(ConfigError::schema(None, "integrator.dt", format!("must be finite and > 0, got {dt}")));
        }
        barrier::registry().get(&self.cbf)?;
        task::registry().get(&self.task)?;
        integrator::registry().get(&self.integrator.method)?;
        Ok(())
    }

    /// Renders the config back into the on-disk format.
    pub fn to_toml(&self) -> String {
        let doc = ConfigDoc {
            thrusters: self.thrusters.iter().map(ThrusterDoc::from).collect(),
            gains: Some(self.gains),
            cbf: Some(self.cbf.clone()),
            task: Some(self.task.clone()),
            integrator: Some(self.integrator.clone()),
        };
        toml::to_string(&doc).expect("config document always serializes")
    }
}

impl std::str::FromStr for VesselConfig {
    type Err = ConfigError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        parse_config(s)
    }
}

/// Parses and validates a TOML vessel description.
pub fn parse_config(text: &str) -> Result<VesselConfig, ConfigError> {
    let doc: ConfigDoc = toml::from_str(text).map_err(|e| {
        let (line, column) = e.span().map(|s| line_col(text, s.start)).unwrap_or((0, 0));
        ConfigError::Syntax {
            line,
            column,
            message: e.message().to_string(),
        }
    })?;
    let thrusters = doc
        .thrusters
        .into_iter()
        .enumerate()
        .map(|(i, t)| t.into_spec(i))
        .collect::<Result<Vec<_>, _>>()?;
    VesselConfig::new(
        thrusters,
        doc.gains.unwrap_or_default(),
        doc.cbf.as_deref().unwrap_or("quadratic"),
        doc.task.as_deref().unwrap_or("min_squared_norm"),
        doc.integrator.unwrap_or_default(),
    )
}

fn line_col(text: &str, offset: usize) -> (usize, usize) {
    let before = &text[..offset.min(text.len())];
    let line = before.matches('\n').count() + 1;
    let column = before.rsplit('\n').next().map_or(0, |l| l.chars().count()) + 1;
    (line, column)
}

#[derive(Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct ConfigDoc {
    #[serde(skip_serializing_if = "Option::is_none")]
    cbf: Option<String>,
    #[serde(skip_serializing_if = "Option::is_none")]
    task: Option<String>,
    #[serde(skip_serializing_if = "Option::is_none")]
    gains: Option<Gains>,
    #[serde(skip_serializing_if = "Option::is_none")]
    integrator: Option<IntegratorConfig>,
    #[serde(default)]
    thrusters: Vec<ThrusterDoc>,
}

/// File form of a thruster: degrees, optional fields.
#[derive(Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct ThrusterDoc {
    id: Option<String>,
    kind: Option<ThrusterKind>,
    lever_arm: Option<[f64; 2]>,
    #[serde(skip_serializing_if = "Option::is_none")]
    fixed_angle: Option<f64>,
    f_max: Option<f64>,
    rate_limit: Option<f64>,
    zeta: Option<f64>,
    rho: Option<f64>,
    weight: Option<f64>,
    lambda: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    azimuth_ref: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    force_sign_ref: Option<f64>,
}

impl ThrusterDoc {
    fn into_spec(self, index: usize) -> Result<ThrusterSpec, ConfigError> {
        let id = self.id.ok_or_else(|| {
            ConfigError::schema(Some(&format!("#{}", index + 1)), "id", "is required")
        })?;
        let missing = |field: &str| ConfigError::schema(Some(&id), field, "is required");
        let kind = self.kind.ok_or_else(|| missing("kind"))?;
        let lever_arm = self.lever_arm.ok_or_else(|| missing("lever_arm"))?;
        let f_max = self.f_max.ok_or_else(|| missing("f_max"))?;
        let rate_limit = self.rate_limit.ok_or_else(|| missing("rate_limit"))?;
        let fixed_angle = match kind {
            ThrusterKind::FixedDirection => self.fixed_angle.ok_or_else(|| missing("fixed_angle"))?,
            ThrusterKind::VaryingAzimuth => {
                if self.fixed_angle.is_some() {
                    return Err(ConfigError::schema(Some(&id), "fixed_angle", "only applies to fixed_direction thrusters"));
                }
                0.0
            }
        };
        if kind == ThrusterKind::FixedDirection && self.azimuth_ref.is_some() {
            return Err(ConfigError::schema(Some(&id), "azimuth_ref", "only applies to varying_azimuth thrusters"));
        }
        if kind == ThrusterKind::VaryingAzimuth && self.force_sign_ref.is_some() {
            return Err(ConfigError::schema(Some(&id), "force_sign_ref", "only applies to fixed_direction thrusters"));
        }
        Ok(ThrusterSpec {
            id,
            kind,
            lever_arm,
            fixed_angle: fixed_angle.to_radians(),
            f_max,
            rate_limit,
            zeta: self.zeta.unwrap_or(DEFAULT_ZETA),
            rho: self.rho.unwrap_or(DEFAULT_RHO),
            weight: self.weight.unwrap_or(DEFAULT_WEIGHT),
            lambda: self.lambda.unwrap_or(DEFAULT_LAMBDA),
            azimuth_ref: self.azimuth_ref.unwrap_or(0.0).to_radians(),
            force_sign_ref: self.force_sign_ref.unwrap_or(1.0),
        })
    }
}

impl From<&ThrusterSpec> for ThrusterDoc {
    fn from(t: &ThrusterSpec) -> Self {
        let azimuth = t.kind == ThrusterKind::VaryingAzimuth;
        Self {
            id: Some(t.id.clone()),
            kind: Some(t.kind),
            lever_arm: Some(t.lever_arm),
            fixed_angle: (!azimuth).then(|| t.fixed_angle.to_degrees()),
            f_max: Some(t.f_max),
            rate_limit: Some(t.rate_limit),
            zeta: Some(t.zeta),
            rho: Some(t.rho),
            weight: Some(t.weight),
            lambda: Some(t.lambda),
            azimuth_ref: azimuth.then(|| t.azimuth_ref.to_degrees()),
            force_sign_ref: (!azimuth).then_some(t.force_sign_ref),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    const CSE1: &str = r#"
cbf = "norm"
task = "azimuth_penalty"

[gains]
mu = 0.1
gamma = 0.1

[[thrusters]]
id = "tunnel"
kind = "fixed_direction"
lever_arm = [0.3875, 0.0]
fixed_angle = 90.0
f_max = 1.0
rate_limit = 1.0

[[thrusters]]
id = "vsp_port"
kind = "varying_azimuth"
lever_arm = [-0.4574, -0.055]
f_max = 1.0
rate_limit = 1.0
azimuth_ref = 45.0

[[thrusters]]
id = "vsp_stbd"
kind = "varying_azimuth"
lever_arm = [-0.4574, 0.055]
f_max = 1.0
rate_limit = 1.0
"#;

    #[test]
    fn parses_cse1_and_reorders() {
        let cfg = parse_config(CSE1).unwrap();
        assert_eq!((cfg.m1(), cfg.m2(), cfg.p()), (2, 1, 5));
        let ids: Vec<_> = cfg.thrusters.iter().map(|t| t.id.as_str()).collect();
        assert_eq!(ids, ["vsp_port", "vsp_stbd", "tunnel"]);
        let tunnel = &cfg.thrusters[2];
        assert!((tunnel.fixed_angle - std::f64::consts::FRAC_PI_2).abs() < 1e-15);
        assert!((cfg.thrusters[0].azimuth_ref - std::f64::consts::FRAC_PI_4).abs() < 1e-15);
        // defaults
        assert_eq!(tunnel.zeta, 0.01);
        assert_eq!(tunnel.rho, 0.1);
        assert_eq!(tunnel.weight, 1.0);
        assert_eq!(tunnel.lambda, 0.0);
        assert_eq!(cfg.gains.epsilon, 1e-6);
        assert_eq!(cfg.integrator.method, "rk4");
    }

    #[test]
    fn single_thruster_is_underactuated() {
        let text = r#"
[[thrusters]]
id = "solo"
kind = "varying_azimuth"
lever_arm = [0.0, 0.0]
f_max = 1.0
rate_limit = 1.0
"#;
        assert!(matches!(parse_config(text), Err(ConfigError::Underactuated { p: 2, n: 3 })));
    }

    #[test]
    fn lambda_out_of_range_names_field_and_thruster() {
        let text = CSE1.replace("azimuth_ref = 45.0", "azimuth_ref = 45.0\nlambda = 1.5");
        let err = parse_config(&text).unwrap_err();
        match &err {
            ConfigError::Schema { thruster, field, .. } => {
                assert_eq!(thruster.as_deref(), Some("vsp_port"));
                assert_eq!(field, "lambda");
            }
            other => panic!("unexpected {other:?}"),
        }
        assert!(err.to_string().contains("lambda"));
    }

    #[test]
    fn syntax_error_has_position() {
        let err = parse_config("cbf = \"norm\"\n[gains\nmu = 1").unwrap_err();
        match err {
            ConfigError::Syntax { line, .. } => assert_eq!(line, 2),
            other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn missing_required_field() {
        let text = CSE1.replace("fixed_angle = 90.0\n", "");
        let err = parse_config(&text).unwrap_err();
        assert!(matches!(err, ConfigError::Schema { ref field, .. } if field == "fixed_angle"), "{err}");
    }

    #[test]
    fn unknown_strategy_rejected() {
        let text = CSE1.replace("cbf = \"norm\"", "cbf = \"cubic\"");
        assert!(matches!(parse_config(&text), Err(ConfigError::UnknownStrategy(_))));
    }

    #[test]
    fn bad_sign_rejected() {
        let text = CSE1.replace("fixed_angle = 90.0", "fixed_angle = 90.0\nforce_sign_ref = 0.5");
        let err = parse_config(&text).unwrap_err();
        assert!(matches!(err, ConfigError::Schema { ref field, .. } if field == "force_sign_ref"));
    }

    #[test]
    fn serialize_round_trip() {
        let cfg = parse_config(CSE1).unwrap();
        let again = parse_config(&cfg.to_toml()).unwrap();
        assert_eq!(cfg.thrusters.len(), again.thrusters.len());
        for (a, b) in cfg.thrusters.iter().zip(&again.thrusters) {
            assert_eq!(a.id, b.id);
            assert!((a.azimuth_ref - b.azimuth_ref).abs() < 1e-15);
            assert!((a.fixed_angle - b.fixed_angle).abs() < 1e-15);
        }
        assert_eq!(cfg.gains, again.gains);
        assert_eq!(cfg.cbf, again.cbf);
    }
}
