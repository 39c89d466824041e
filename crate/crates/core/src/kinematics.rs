//! Kinematics of the three-tendon top plate.
//!
//! Four charts describe the plate:
//!
//! * motor angles `q_m` (rad, zero at rest, negative compresses),
//! * actuator lengths `q_la = (l1, l2, l3)` (mm),
//! * spherical `q_tt = (r, theta, phi)` where `theta`/`phi` are the angles of
//!   the plate centre vector to the x/y axes,
//! * Cartesian plate centre `p_c` (mm).
//!
//! Forward maps go motor -> lengths -> spherical -> Cartesian; the inverse
//! goes back the same way in closed form.

use nalgebra::{Matrix3, Vector3};
use serde::{Deserialize, Serialize};
use thiserror::Error;

/// Arccos arguments and radicands this close to the chart edge are treated
/// as rounding noise and clamped.
pub const CHART_FUZZ: f64 = 1e-12;
const LENGTH_TOL_MM: f64 = 1e-9;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum KinematicsError {
    #[error("invalid rig configuration: {0}")]
    InvalidConfig(String),
    #[error("pose outside spherical chart: {which} argument {value:.12} not in [-1, 1]")]
    OutsideChart { which: &'static str, value: f64 },
    #[error("pose outside spherical chart: cos^2(theta) + cos^2(phi) = {sum:.12} exceeds 1")]
    NegativeRadicand { sum: f64 },
    #[error("origin singular: plate centre at the base origin has no direction")]
    OriginSingular,
    #[error("unreachable pose: z = {z:.6} mm is below the base plane")]
    BelowBase { z: f64 },
    #[error("unreachable pose: actuator {index} length {length_mm:.6} mm violates {bound} = {bound_mm:.6} mm")]
    LengthOutOfRange {
        index: usize,
        length_mm: f64,
        bound: &'static str,
        bound_mm: f64,
    },
    #[error("tracking error needs two equal-length, non-empty sequences ({actual} vs {reference})")]
    BadSequences { actual: usize, reference: usize },
    #[error("reference path has zero characteristic radius")]
    DegenerateReference,
}

/// Tendon rig constants. Lengths mm, torque N*m, stiffness N/m.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RigConfig {
    /// Circumradius of both plates.
    pub d_mm: f64,
    /// Rest length of a spring; also the motor chart origin.
    pub l_max_mm: f64,
    pub l_min_mm: f64,
    /// Pulley radius.
    pub r_p_mm: f64,
    /// Continuous motor torque, when known.
    pub tau_c_nm: Option<f64>,
    /// Stiffness of one spring.
    pub k_single_npm: f64,
}

impl RigConfig {
    pub fn validate(&self) -> Result<(), KinematicsError> {
        let bad = |m: String| Err(KinematicsError::InvalidConfig(m));
        if !(self.d_mm > 0.0 && self.d_mm.is_finite()) {
            return bad(format!("d = {} mm must be positive", self.d_mm));
        }
        if !(self.l_min_mm > 0.0 && self.l_min_mm < self.l_max_mm && self.l_max_mm.is_finite()) {
            return bad(format!(
                "need 0 < l_min < l_max, got l_min = {}, l_max = {}",
                self.l_min_mm, self.l_max_mm
            ));
        }
        if !(self.r_p_mm > 0.0) {
            return bad(format!("pulley radius {} mm must be positive", self.r_p_mm));
        }
        if !(self.k_single_npm > 0.0) {
            return bad(format!("stiffness {} N/m must be positive", self.k_single_npm));
        }
        if let Some(tau) = self.tau_c_nm {
            if !(tau >= 0.0) {
                return bad(format!("continuous torque {tau} N*m must be non-negative"));
            }
            let floor = self.l_max_mm - self.max_compression_mm().unwrap_or(0.0);
            if self.l_min_mm + LENGTH_TOL_MM < floor {
                return bad(format!(
                    "l_min = {} mm is below the torque-limited length {floor:.6} mm",
                    self.l_min_mm
                ));
            }
        }
        Ok(())
    }

    /// Compression the continuous torque can hold against one spring (mm).
    pub fn max_compression_mm(&self) -> Option<f64> {
        self.tau_c_nm.map(|tau| {
            let force_n = tau / (self.r_p_mm * 1e-3);
            force_n / self.k_single_npm * 1e3
        })
    }

    pub fn with_bounds(&self, l_min_mm: f64, l_max_mm: f64) -> Self {
        Self {
            l_min_mm,
            l_max_mm,
            ..*self
        }
    }

    pub fn with_d(&self, d_mm: f64) -> Self {
        Self { d_mm, ..*self }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Spherical {
    pub r_mm: f64,
    pub theta: f64,
    pub phi: f64,
}

impl Spherical {
    pub fn cos_theta(&self) -> f64 {
        self.theta.cos()
    }

    pub fn cos_phi(&self) -> f64 {
        self.phi.cos()
    }
}

/// Plate configuration in one of the four charts.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "chart", content = "values", rename_all = "snake_case")]
pub enum PlatePose {
    Motor([f64; 3]),
    Actuator([f64; 3]),
    Spherical(Spherical),
    Cartesian([f64; 3]),
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ActuatorLengths {
    pub lengths_mm: [f64; 3],
    /// Set when a commanded length fell outside `[l_min, l_max]` and was
    /// clamped.
    pub clamped: bool,
}

/// `l_i = l_max + r_p * theta_i`, clamped to the actuator range.
pub fn motor_to_lengths(q_m: [f64; 3], cfg: &RigConfig) -> ActuatorLengths {
    let mut clamped = false;
    let lengths_mm = q_m.map(|theta| {
        let l = cfg.l_max_mm + cfg.r_p_mm * theta;
        let c = l.clamp(cfg.l_min_mm, cfg.l_max_mm);
        if c != l {
            clamped = true;
        }
        c
    });
    if clamped {
        log::warn!("motor command {q_m:?} clamped to actuator range");
    }
    ActuatorLengths { lengths_mm, clamped }
}

pub fn lengths_to_motor(q_la: [f64; 3], cfg: &RigConfig) -> [f64; 3] {
    q_la.map(|l| (l - cfg.l_max_mm) / cfg.r_p_mm)
}

fn chart_acos(which: &'static str, arg: f64) -> Result<f64, KinematicsError> {
    if arg.abs() <= 1.0 {
        Ok(arg.acos())
    } else if arg.abs() <= 1.0 + CHART_FUZZ {
        Ok(arg.clamp(-1.0, 1.0).acos())
    } else {
        Err(KinematicsError::OutsideChart { which, value: arg })
    }
}

/// Direction cosines `(cos theta, cos phi)` of the plate centre for the given
/// actuator lengths. Linear in the lengths.
pub fn direction_cosines(q_la: [f64; 3], d_mm: f64) -> (f64, f64) {
    let [l1, l2, l3] = q_la;
    let c_theta = (-2.0 * l1 + l2 + l3) / (6.0 * d_mm);
    let c_phi = (-l2 + l3) / (2.0 * 3f64.sqrt() * d_mm);
    (c_theta, c_phi)
}

pub fn lengths_to_spherical(q_la: [f64; 3], cfg: &RigConfig) -> Result<Spherical, KinematicsError> {
    let r_mm = (q_la[0] + q_la[1] + q_la[2]) / 3.0;
    let (c_theta, c_phi) = direction_cosines(q_la, cfg.d_mm);
    Ok(Spherical {
        r_mm,
        theta: chart_acos("theta", c_theta)?,
        phi: chart_acos("phi", c_phi)?,
    })
}

fn cartesian_from_cosines(r: f64, c_theta: f64, c_phi: f64) -> Result<Vector3<f64>, KinematicsError> {
    let sum = c_theta * c_theta + c_phi * c_phi;
    let radicand = 1.0 - sum;
    let w = if radicand >= 0.0 {
        radicand.sqrt()
    } else if radicand >= -CHART_FUZZ {
        0.0
    } else {
        return Err(KinematicsError::NegativeRadicand { sum });
    };
    Ok(Vector3::new(r * c_theta, r * c_phi, r * w))
}

/// Takes the non-negative root, so the plate is always above the base.
pub fn spherical_to_cartesian(q_tt: &Spherical) -> Result<Vector3<f64>, KinematicsError> {
    // Angles at exactly pi/2 should give exactly zero cosines.
    let cos_exact = |a: f64| {
        if a == std::f64::consts::FRAC_PI_2 {
            0.0
        } else {
            a.cos()
        }
    };
    cartesian_from_cosines(q_tt.r_mm, cos_exact(q_tt.theta), cos_exact(q_tt.phi))
}

/// Forward map from actuator lengths straight to the plate centre. Skips the
/// arccos round trip so the result is exact up to one square root.
pub fn lengths_to_cartesian(q_la: [f64; 3], cfg: &RigConfig) -> Result<Vector3<f64>, KinematicsError> {
    let r = (q_la[0] + q_la[1] + q_la[2]) / 3.0;
    let (c_theta, c_phi) = direction_cosines(q_la, cfg.d_mm);
    for (which, value) in [("theta", c_theta), ("phi", c_phi)] {
        if value.abs() > 1.0 + CHART_FUZZ {
            return Err(KinematicsError::OutsideChart { which, value });
        }
    }
    cartesian_from_cosines(r, c_theta, c_phi)
}

pub fn motor_to_cartesian(q_m: [f64; 3], cfg: &RigConfig) -> Result<Vector3<f64>, KinematicsError> {
    lengths_to_cartesian(motor_to_lengths(q_m, cfg).lengths_mm, cfg)
}

/// Inverse of the Cartesian chart: `r = |p|`, direction cosines `p / r`.
pub fn cartesian_to_spherical(p: &Vector3<f64>) -> Result<Spherical, KinematicsError> {
    let r_mm = p.norm();
    if r_mm == 0.0 {
        return Err(KinematicsError::OriginSingular);
    }
    if p.z < 0.0 {
        return Err(KinematicsError::BelowBase { z: p.z });
    }
    Ok(Spherical {
        r_mm,
        theta: chart_acos("theta", p.x / r_mm)?,
        phi: chart_acos("phi", p.y / r_mm)?,
    })
}

/// Solves the linear length relations for `(l1, l2, l3)` given `r` and the
/// two direction cosines. No range check.
pub fn spherical_cosines_to_lengths(r: f64, c_theta: f64, c_phi: f64, d_mm: f64) -> [f64; 3] {
    let a = d_mm * c_theta;
    let b = 3f64.sqrt() * d_mm * c_phi;
    [r - 2.0 * a, r + a - b, r + a + b]
}

/// Actuator lengths that place the plate centre at `p`.
pub fn cartesian_to_lengths(p: &Vector3<f64>, cfg: &RigConfig) -> Result<[f64; 3], KinematicsError> {
    let r = p.norm();
    if r == 0.0 {
        return Err(KinematicsError::OriginSingular);
    }
    if p.z < 0.0 {
        return Err(KinematicsError::BelowBase { z: p.z });
    }
    let lengths = spherical_cosines_to_lengths(r, p.x / r, p.y / r, cfg.d_mm);
    for (index, &length_mm) in lengths.iter().enumerate() {
        if length_mm < cfg.l_min_mm - LENGTH_TOL_MM {
            return Err(KinematicsError::LengthOutOfRange {
                index: index + 1,
                length_mm,
                bound: "l_min",
                bound_mm: cfg.l_min_mm,
            });
        }
        if length_mm > cfg.l_max_mm + LENGTH_TOL_MM {
            return Err(KinematicsError::LengthOutOfRange {
                index: index + 1,
                length_mm,
                bound: "l_max",
                bound_mm: cfg.l_max_mm,
            });
        }
    }
    Ok(lengths)
}

pub fn cartesian_to_motor(p: &Vector3<f64>, cfg: &RigConfig) -> Result<[f64; 3], KinematicsError> {
    Ok(lengths_to_motor(cartesian_to_lengths(p, cfg)?, cfg))
}

/// Jacobian of `lengths -> Cartesian` at `q_la`, analytically.
pub fn jacobian(q_la: [f64; 3], d_mm: f64) -> Option<Matrix3<f64>> {
    let r = (q_la[0] + q_la[1] + q_la[2]) / 3.0;
    let (a, b) = direction_cosines(q_la, d_mm);
    let w2 = 1.0 - a * a - b * b;
    if !(w2 > 0.0) {
        return None;
    }
    let w = w2.sqrt();
    // d(x, y, z) / d(r, a, b)
    let dp = Matrix3::new(a, r, 0.0, b, 0.0, r, w, -r * a / w, -r * b / w);
    let s3 = 3f64.sqrt();
    // d(r, a, b) / d(l1, l2, l3)
    let ds = Matrix3::new(
        1.0 / 3.0,
        1.0 / 3.0,
        1.0 / 3.0,
        -2.0 / (6.0 * d_mm),
        1.0 / (6.0 * d_mm),
        1.0 / (6.0 * d_mm),
        0.0,
        -1.0 / (2.0 * s3 * d_mm),
        1.0 / (2.0 * s3 * d_mm),
    );
    Some(dp * ds)
}

/// `|det J| = r^2 / (w * 6 sqrt(3) d^2)` with `w = z / r`. `None` on the
/// chart edge where `w` vanishes.
pub fn jacobian_determinant(q_la: [f64; 3], d_mm: f64) -> Option<f64> {
    let r = (q_la[0] + q_la[1] + q_la[2]) / 3.0;
    let (a, b) = direction_cosines(q_la, d_mm);
    let w2 = 1.0 - a * a - b * b;
    if !(w2 > 0.0) {
        return None;
    }
    Some(r * r / (w2.sqrt() * 6.0 * 3f64.sqrt() * d_mm * d_mm))
}

/// RMS of pointwise distance between the two paths, as a fraction of the
/// reference path's characteristic radius (RMS distance of the reference
/// from its centroid; the radius for a circle).
pub fn tracking_error(actual: &[Vector3<f64>], reference: &[Vector3<f64>]) -> Result<f64, KinematicsError> {
    if actual.is_empty() || actual.len() != reference.len() {
        return Err(KinematicsError::BadSequences {
            actual: actual.len(),
            reference: reference.len(),
        });
    }
    let n = reference.len() as f64;
    let centroid = reference.iter().sum::<Vector3<f64>>() / n;
    let radius = (reference.iter().map(|p| (p - centroid).norm_squared()).sum::<f64>() / n).sqrt();
    if !(radius > 0.0) {
        return Err(KinematicsError::DegenerateReference);
    }
    let mse = actual
        .iter()
        .zip(reference)
        .map(|(a, r)| (a - r).norm_squared())
        .sum::<f64>()
        / n;
    Ok(mse.sqrt() / radius)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum CirclePlane {
    /// Circle in a plane parallel to the base.
    Horizontal,
    /// Circle in the x-z plane.
    Vertical,
}

pub fn circle_path(center: Vector3<f64>, radius_mm: f64, plane: CirclePlane, n: usize) -> Vec<Vector3<f64>> {
    (0..n)
        .map(|i| {
            let t = std::f64::consts::TAU * i as f64 / n as f64;
            let (s, c) = t.sin_cos();
            match plane {
                CirclePlane::Horizontal => center + Vector3::new(radius_mm * c, radius_mm * s, 0.0),
                CirclePlane::Vertical => center + Vector3::new(radius_mm * c, 0.0, radius_mm * s),
            }
        })
        .collect()
}

/// Commands each reference point through the inverse kinematics and maps the
/// motor command forward again.
pub fn ideal_tracking(reference: &[Vector3<f64>], cfg: &RigConfig) -> Result<Vec<Vector3<f64>>, KinematicsError> {
    reference
        .iter()
        .map(|p| motor_to_cartesian(cartesian_to_motor(p, cfg)?, cfg))
        .collect()
}
