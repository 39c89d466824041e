//! Design and analysis tools for origami bellows springs and the
//! tendon-driven platform built from them.
//!
//! - [`origami`]: crease-pattern generation and SVG export.
//! - [`stiffness`]: cone-angle stiffness law, layer stacking, trace analysis.
//! - [`kinematics`]: forward/inverse maps between motor, tendon and plate space.
//! - [`workspace`]: reachable-volume estimates and baseline calibration.
//! - [`juggle`]: hybrid flight/hit dynamics and the apex return map.

#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod fixtures;
pub mod hull;
pub mod juggle;
pub mod kinematics;
pub mod numeric;
pub mod origami;
pub mod stiffness;
pub mod workspace;

pub use juggle::{BallSpec, HitMethod, HitOutcome, JuggleError, JuggleTrace, JugglerSpec};
pub use kinematics::{KinematicsError, RigConfig, Spherical};
pub use origami::{CreasePattern, FoldGeometry, OrigamiError, ReboParams};
pub use stiffness::{ForceDisplacementTrace, StiffnessError, StiffnessModel};
pub use workspace::{VolumeMethod, VolumeResult, WorkspaceError, WorkspaceSpec};
