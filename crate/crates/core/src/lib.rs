//! Dynamic thrust allocation for overactuated planar vessels.
//!
//! A reference filter turns a commanded generalized load `τ_cmd`
//! (surge force, sway force, yaw moment) into per-thruster force and azimuth
//! setpoints. The virtual thruster forces track an affine manifold of exact
//! allocations, a gradient flow over the manifold's nullspace coordinate
//! minimizes a secondary cost, the tracking law is rate limited, and
//! per-thruster barrier functions keep every force inside its saturation
//! disc.
//!
//! Interchangeable pieces are trait objects selected by name:
//!
//! - [`task::DynamicTask`]: secondary cost (`min_squared_norm`, `azimuth_penalty`)
//! - [`barrier::BarrierFunction`]: saturation barrier (`quadratic`, `norm`)
//! - [`integrator::Integrator`]: fixed-step integrator (`euler`, `rk4`)
//! - [`harness::derivative::DerivativeEstimator`]: command derivative source
//!
//! ## Modules
//!
//! - [`config`]: vessel description, TOML parsing and validation
//! - [`geometry`]: configuration matrix, weighted pseudoinverse, nullspace basis
//! - [`filter`]: the reference filter itself
//! - [`harness`]: scenarios, traces, metrics and plot data for the CLI

pub mod barrier;
pub mod config;
pub mod filter;
pub mod geometry;
pub mod harness;
pub mod integrator;
pub mod presets;
pub mod registry;
pub mod task;

pub use config::{parse_config, ConfigError, ThrusterKind, ThrusterSpec, VesselConfig};
pub use filter::{FilterError, FilterState, ReferenceFilter, StepDiagnostics, ThrusterSetpoint};
pub use geometry::AllocationGeometry;
