//! Measured reference data shipped with the crate.
//!
//! The raw files live in `fixtures/` next to the crate manifest and are
//! embedded at compile time so every consumer sees the same numbers.

use serde::Deserialize;

use crate::juggle::{BallSpec, JugglerSpec};
use crate::kinematics::RigConfig;
use crate::stiffness::StiffnessModel;

pub const STIFFNESS_MEANS_CSV: &str = include_str!("../fixtures/stiffness_means.csv");
pub const DOUBLE_LAYER_CSV: &str = include_str!("../fixtures/double_layer.csv");
pub const STIFFNESS_LAW_JSON: &str = include_str!("../fixtures/stiffness_law.json");
pub const RIG_DEFAULT_JSON: &str = include_str!("../fixtures/rig_default.json");
pub const JUGGLE_POINTS_JSON: &str = include_str!("../fixtures/juggle_operating_points.json");

#[derive(Debug, Clone, PartialEq, Deserialize)]
pub struct StiffnessMean {
    pub beta_deg: f64,
    pub k_npm: f64,
    pub source: String,
}

#[derive(Debug, Clone, PartialEq, Deserialize)]
pub struct DoubleLayerRow {
    pub row: u32,
    pub inner_beta_deg: f64,
    pub inner_k_npm: f64,
    pub outer_beta_deg: f64,
    pub outer_k_npm: f64,
    pub measured_k_npm: f64,
}

#[derive(Debug, Clone, PartialEq, Deserialize)]
struct StiffnessLaw {
    slope_npm_per_deg: f64,
    intercept_npm: f64,
    r_squared: f64,
    valid_band_deg: (f64, f64),
}

#[derive(Debug, Clone, PartialEq, Deserialize)]
struct RigDefault {
    d_mm: f64,
    l_max_mm: f64,
    l_min_mm: f64,
    r_p_mm: f64,
    tau_c_nm: f64,
    k_single_npm: f64,
}

#[derive(Debug, Clone, PartialEq, Deserialize)]
pub struct JuggleOperatingPoints {
    pub k_es_npm: f64,
    pub shot_mass_kg: f64,
    pub heavy_shot_mass_kg: f64,
    pub medicine_ball_masses_kg: Vec<f64>,
    pub steady_precompression_mm: f64,
    pub steady_apex_mm: f64,
    pub preload_precompression_mm: f64,
    pub preload_apex_mm: f64,
    pub typical_hit_duration_s: f64,
    pub reported_power_w: f64,
    pub transient_initial_apex_mm: Vec<f64>,
}

fn read_csv<T: for<'de> Deserialize<'de>>(text: &str) -> Vec<T> {
    csv::Reader::from_reader(text.as_bytes())
        .deserialize()
        .collect::<Result<Vec<T>, _>>()
        .expect("embedded fixture is well formed")
}

pub fn stiffness_means() -> Vec<StiffnessMean> {
    read_csv(STIFFNESS_MEANS_CSV)
}

pub fn double_layer_rows() -> Vec<DoubleLayerRow> {
    read_csv(DOUBLE_LAYER_CSV)
}

/// The published affine cone-angle law.
pub fn reference_stiffness_model() -> StiffnessModel {
    let law: StiffnessLaw =
        serde_json::from_str(STIFFNESS_LAW_JSON).expect("embedded fixture is well formed");
    StiffnessModel {
        slope: law.slope_npm_per_deg,
        intercept: law.intercept_npm,
        r_squared: law.r_squared,
        valid_band: law.valid_band_deg,
    }
}

/// Default rig with the calibrated plate radius.
pub fn default_rig() -> RigConfig {
    let rig: RigDefault =
        serde_json::from_str(RIG_DEFAULT_JSON).expect("embedded fixture is well formed");
    RigConfig {
        d_mm: rig.d_mm,
        l_max_mm: rig.l_max_mm,
        l_min_mm: rig.l_min_mm,
        r_p_mm: rig.r_p_mm,
        tau_c_nm: Some(rig.tau_c_nm),
        k_single_npm: rig.k_single_npm,
    }
}

pub fn juggle_operating_points() -> JuggleOperatingPoints {
    serde_json::from_str(JUGGLE_POINTS_JSON).expect("embedded fixture is well formed")
}

/// The 1 kg shot on the three-spring juggler at the steady pre-compression,
/// with no losses configured yet.
pub fn shot_operating_point() -> (BallSpec, JugglerSpec) {
    let ops = juggle_operating_points();
    let ball = BallSpec::new(ops.shot_mass_kg, 1.0, "1 kg shot");
    let spec = JugglerSpec {
        k_es: ops.k_es_npm,
        b_s: 0.0,
        p_com: ops.steady_precompression_mm * 1e-3,
        z_rest: 0.088,
    };
    (ball, spec)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn fixtures_parse() {
        assert_eq!(stiffness_means().len(), 6);
        assert_eq!(double_layer_rows().len(), 3);
        assert!(default_rig().validate().is_ok());
        assert_eq!(juggle_operating_points().transient_initial_apex_mm.len(), 5);
        let m = reference_stiffness_model();
        assert_eq!(m.slope, 16.0571);
    }
}
