//! Reachable workspace of the top plate.
//!
//! The workspace is the image of the actuator cube `[l_min, l_max]^3` under
//! the lengths-to-Cartesian map. Its volume is computed two independent
//! ways: a midpoint quadrature of the Jacobian determinant over the cube, and
//! the convex hull of mapped random samples.

use nalgebra::Vector3;
use rand::distributions::{Distribution, Uniform};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::hull::{ConvexHull, HullError};
use crate::kinematics::{direction_cosines, jacobian_determinant, lengths_to_cartesian, KinematicsError, RigConfig};
use crate::numeric::{bisect, compensated_sum, KahanSum};

pub const DEFAULT_GRID: usize = 64;
pub const DEFAULT_HULL_SAMPLES: usize = 100_000;
pub const DEFAULT_EDGE_DENSITY: usize = 50;
pub const CALIBRATION_BRACKET_MM: (f64, f64) = (5.0, 200.0);
pub const CALIBRATION_TOL_MM3: f64 = 0.1;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum WorkspaceError {
    #[error(transparent)]
    Kinematics(#[from] KinematicsError),
    #[error(transparent)]
    Hull(#[from] HullError),
    #[error("singular jacobian at lengths {lengths_mm:?} (plate reaches the base plane); use the hull method")]
    SingularJacobian { lengths_mm: [f64; 3] },
    #[error("boundary edge {edge} leaves the spherical chart: {source}")]
    EdgeOutsideChart { edge: usize, source: KinematicsError },
    #[error("no sign change in bracket d in [{lo_mm:.3}, {hi_mm:.3}] mm: volumes {lo_volume:.3}..{hi_volume:.3} mm^3 do not straddle target {target:.3} mm^3")]
    NoBracket {
        lo_mm: f64,
        hi_mm: f64,
        lo_volume: f64,
        hi_volume: f64,
        target: f64,
    },
    #[error("volume is not strictly decreasing in d over the bracket")]
    NotMonotone,
    #[error("torque model invalid: l_min = {l_min_mm:.6} mm")]
    TorqueModelInvalid { l_min_mm: f64 },
    #[error("invalid workspace request: {0}")]
    InvalidRequest(String),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum VolumeMethod {
    Jacobian,
    Hull,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct WorkspaceSpec {
    pub cfg: RigConfig,
    pub grid_density: usize,
    pub seed: u64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct VolumeResult {
    pub volume_mm3: f64,
    pub method: VolumeMethod,
    pub samples: usize,
    /// Sampling uncertainty, hull method only: the change in hull volume
    /// between the first half of the samples and all of them.
    pub stderr_mm3: Option<f64>,
}

/// Image of one edge of the actuator cube.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BoundaryEdge {
    pub id: usize,
    /// Actuator whose length varies along the edge (0-based).
    pub moving: usize,
    /// Lengths held by the other two actuators, in actuator order.
    pub held_mm: [f64; 2],
    pub points: Vec<[f64; 3]>,
}

fn check_bounds(cfg: &RigConfig) -> Result<(), WorkspaceError> {
    if !(cfg.d_mm > 0.0) {
        return Err(WorkspaceError::InvalidRequest(format!("d = {} mm", cfg.d_mm)));
    }
    if !(cfg.l_min_mm > 0.0 && cfg.l_min_mm <= cfg.l_max_mm) {
        return Err(WorkspaceError::InvalidRequest(format!(
            "need 0 < l_min <= l_max, got [{}, {}]",
            cfg.l_min_mm, cfg.l_max_mm
        )));
    }
    Ok(())
}

/// The 12 cube edges: two actuators held at an extreme, the third swept
/// from `l_min` to `l_max`.
pub fn boundary_trajectories(cfg: &RigConfig, density: usize) -> Result<Vec<BoundaryEdge>, WorkspaceError> {
    check_bounds(cfg)?;
    if density < 2 {
        return Err(WorkspaceError::InvalidRequest(format!("density {density} < 2")));
    }
    let extremes = [cfg.l_min_mm, cfg.l_max_mm];
    let mut edges = Vec::with_capacity(12);
    for moving in 0..3 {
        for &a in &extremes {
            for &b in &extremes {
                let id = edges.len();
                let points = (0..density)
                    .map(|i| {
                        let t = i as f64 / (density - 1) as f64;
                        let l = cfg.l_min_mm + t * (cfg.l_max_mm - cfg.l_min_mm);
                        let (i1, i2) = match moving {
                            0 => (1, 2),
                            1 => (0, 2),
                            _ => (0, 1),
                        };
                        let mut q = [l; 3];
                        q[i1] = a;
                        q[i2] = b;
                        lengths_to_cartesian(q, cfg)
                            .map(|p| [p.x, p.y, p.z])
                            .map_err(|source| WorkspaceError::EdgeOutsideChart { edge: id, source })
                    })
                    .collect::<Result<Vec<_>, _>>()?;
                edges.push(BoundaryEdge {
                    id,
                    moving,
                    held_mm: [a, b],
                    points,
                });
            }
        }
    }
    Ok(edges)
}

/// Images of a `density x density` grid on each of the six cube faces.
/// Their hull approaches the exact convex hull of the workspace from inside.
pub fn boundary_surface(cfg: &RigConfig, density: usize) -> Result<Vec<Vector3<f64>>, WorkspaceError> {
    check_bounds(cfg)?;
    if density < 2 {
        return Err(WorkspaceError::InvalidRequest(format!("density {density} < 2")));
    }
    let span = cfg.l_max_mm - cfg.l_min_mm;
    let at = |i: usize| cfg.l_min_mm + span * i as f64 / (density - 1) as f64;
    let mut out = Vec::with_capacity(6 * density * density);
    for fixed in 0..3 {
        for held in [cfg.l_min_mm, cfg.l_max_mm] {
            for i in 0..density {
                for j in 0..density {
                    let mut q = [held; 3];
                    q[(fixed + 1) % 3] = at(i);
                    q[(fixed + 2) % 3] = at(j);
                    out.push(lengths_to_cartesian(q, cfg)?);
                }
            }
        }
    }
    Ok(out)
}

/// Smallest plate radius for which every length triple in the cube stays
/// inside the spherical chart. `cos^2 theta + cos^2 phi` is convex in the
/// lengths, so the cube corners decide.
pub fn chart_limit_d(cfg: &RigConfig) -> f64 {
    let extremes = [cfg.l_min_mm, cfg.l_max_mm];
    let mut worst: f64 = 0.0;
    for &l1 in &extremes {
        for &l2 in &extremes {
            for &l3 in &extremes {
                let (a, b) = direction_cosines([l1, l2, l3], 1.0);
                worst = worst.max((a * a + b * b).sqrt());
            }
        }
    }
    worst
}

/// Midpoint tensor-grid quadrature of `|det J|` over the actuator cube.
///
/// Midpoints keep every evaluation off the cube corners, where the plate can
/// touch the base plane and the determinant blows up. Slices are summed in
/// parallel with compensated accumulators and combined in index order, so
/// the result does not depend on thread scheduling.
pub fn volume_jacobian(cfg: &RigConfig, grid: usize) -> Result<VolumeResult, WorkspaceError> {
    check_bounds(cfg)?;
    if grid < 1 {
        return Err(WorkspaceError::InvalidRequest("grid density must be positive".into()));
    }
    let span = cfg.l_max_mm - cfg.l_min_mm;
    if span == 0.0 {
        return Ok(VolumeResult {
            volume_mm3: 0.0,
            method: VolumeMethod::Jacobian,
            samples: 0,
            stderr_mm3: None,
        });
    }
    let step = span / grid as f64;
    let node = |i: usize| cfg.l_min_mm + (i as f64 + 0.5) * step;
    let d = cfg.d_mm;
    let slices: Vec<Result<f64, WorkspaceError>> = (0..grid)
        .into_par_iter()
        .map(|i| {
            let mut acc = KahanSum::new();
            for j in 0..grid {
                for k in 0..grid {
                    let q = [node(i), node(j), node(k)];
                    match jacobian_determinant(q, d) {
                        Some(det) if det.is_finite() => acc.add(det),
                        _ => return Err(WorkspaceError::SingularJacobian { lengths_mm: q }),
                    }
                }
            }
            Ok(acc.total())
        })
        .collect();
    let slices = slices.into_iter().collect::<Result<Vec<_>, _>>()?;
    Ok(VolumeResult {
        volume_mm3: compensated_sum(slices) * step.powi(3),
        method: VolumeMethod::Jacobian,
        samples: grid * grid * grid,
        stderr_mm3: None,
    })
}

/// Uniform samples of the actuator cube, mapped to the plate centre.
pub fn sample_workspace(cfg: &RigConfig, n_samples: usize, seed: u64) -> Result<Vec<Vector3<f64>>, WorkspaceError> {
    check_bounds(cfg)?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    if cfg.l_min_mm == cfg.l_max_mm {
        let p = lengths_to_cartesian([cfg.l_min_mm; 3], cfg)?;
        return Ok(vec![p; n_samples]);
    }
    let dist = Uniform::new_inclusive(cfg.l_min_mm, cfg.l_max_mm);
    (0..n_samples)
        .map(|_| {
            let q = [dist.sample(&mut rng), dist.sample(&mut rng), dist.sample(&mut rng)];
            lengths_to_cartesian(q, cfg).map_err(WorkspaceError::from)
        })
        .collect()
}

pub fn hull_volume_of_points(points: &[Vector3<f64>]) -> Result<VolumeResult, WorkspaceError> {
    let hull = ConvexHull::new(points)?;
    Ok(VolumeResult {
        volume_mm3: hull.volume(),
        method: VolumeMethod::Hull,
        samples: points.len(),
        stderr_mm3: None,
    })
}

/// Mapped cube samples plus the 12 boundary edges.
pub fn workspace_cloud(cfg: &RigConfig, n_samples: usize, seed: u64) -> Result<Vec<Vector3<f64>>, WorkspaceError> {
    let mut cloud = sample_workspace(cfg, n_samples, seed)?;
    for edge in boundary_trajectories(cfg, DEFAULT_EDGE_DENSITY)? {
        cloud.extend(edge.points.iter().map(|p| Vector3::new(p[0], p[1], p[2])));
    }
    Ok(cloud)
}

/// Convex-hull volume of the workspace. Deterministic for a given seed.
pub fn volume_hull(cfg: &RigConfig, n_samples: usize, seed: u64) -> Result<VolumeResult, WorkspaceError> {
    if n_samples < 4 {
        return Err(WorkspaceError::Hull(HullError::TooFewPoints(n_samples)));
    }
    let samples = sample_workspace(cfg, n_samples, seed)?;
    let edges: Vec<Vector3<f64>> = boundary_trajectories(cfg, DEFAULT_EDGE_DENSITY)?
        .iter()
        .flat_map(|e| e.points.iter().map(|p| Vector3::new(p[0], p[1], p[2])))
        .collect();
    let full: Vec<_> = samples.iter().chain(edges.iter()).copied().collect();
    let half: Vec<_> = samples[..n_samples / 2].iter().chain(edges.iter()).copied().collect();
    let full_volume = ConvexHull::new(&full)?.volume();
    let half_volume = ConvexHull::new(&half)?.volume();
    Ok(VolumeResult {
        volume_mm3: full_volume,
        method: VolumeMethod::Hull,
        samples: full.len(),
        stderr_mm3: Some((full_volume - half_volume).abs()),
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Calibration {
    pub d_mm: f64,
    pub volume_mm3: f64,
    pub target_mm3: f64,
    pub grid: usize,
}

/// Bisection on the plate radius so that [`volume_jacobian`] hits the target.
///
/// The lower end of the bracket is raised to the chart limit when needed,
/// since smaller radii push cube corners out of the spherical chart.
pub fn calibrate_d(target_mm3: f64, cfg: &RigConfig, grid: usize) -> Result<Calibration, WorkspaceError> {
    if !(target_mm3 > 0.0 && target_mm3.is_finite()) {
        return Err(WorkspaceError::InvalidRequest(format!(
            "target volume {target_mm3} mm^3 must be positive"
        )));
    }
    let (mut lo, hi) = CALIBRATION_BRACKET_MM;
    lo = lo.max(chart_limit_d(cfg) * (1.0 + 1e-9));
    let volume_at = |d: f64| volume_jacobian(&cfg.with_d(d), grid).map(|v| v.volume_mm3);
    let lo_volume = volume_at(lo)?;
    let hi_volume = volume_at(hi)?;
    if !(lo_volume > hi_volume) {
        return Err(WorkspaceError::NotMonotone);
    }
    if !(lo_volume >= target_mm3 && hi_volume <= target_mm3) {
        return Err(WorkspaceError::NoBracket {
            lo_mm: lo,
            hi_mm: hi,
            lo_volume,
            hi_volume,
            target: target_mm3,
        });
    }
    let mut failure = None;
    let d_mm = bisect(
        |d| match volume_at(d) {
            Ok(v) => v - target_mm3,
            Err(e) => {
                failure.get_or_insert(e);
                f64::NAN
            }
        },
        lo,
        hi,
        1e-12,
        CALIBRATION_TOL_MM3 * 0.5,
    );
    if let Some(e) = failure {
        return Err(e);
    }
    let d_mm = d_mm.ok_or(WorkspaceError::NotMonotone)?;
    Ok(Calibration {
        d_mm,
        volume_mm3: volume_at(d_mm)?,
        target_mm3,
        grid,
    })
}

/// Shortest length the continuous motor torque can hold against one spring.
pub fn l_min_from_torque(cfg: &RigConfig) -> Result<f64, WorkspaceError> {
    let travel = cfg.max_compression_mm().ok_or_else(|| {
        WorkspaceError::InvalidRequest("continuous torque is not configured".into())
    })?;
    let l_min_mm = cfg.l_max_mm - travel;
    if !(l_min_mm > 0.0) {
        return Err(WorkspaceError::TorqueModelInvalid { l_min_mm });
    }
    Ok(l_min_mm)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn rig(d: f64) -> RigConfig {
        RigConfig {
            d_mm: d,
            l_max_mm: 88.0,
            l_min_mm: 66.0,
            r_p_mm: 10.0,
            tau_c_nm: Some(0.2277),
            k_single_npm: 1035.0,
        }
    }

    #[test]
    fn symmetric_corner_image() {
        let edges = boundary_trajectories(&rig(35.0), 20).unwrap();
        assert_eq!(edges.len(), 12);
        let e = edges
            .iter()
            .find(|e| e.moving == 0 && e.held_mm == [88.0, 88.0])
            .unwrap();
        assert_eq!(*e.points.last().unwrap(), [0.0, 0.0, 88.0]);
    }

    #[test]
    fn eight_corner_images() {
        let edges = boundary_trajectories(&rig(35.0), 5).unwrap();
        let mut ends: Vec<[u64; 3]> = edges
            .iter()
            .flat_map(|e| [e.points[0], *e.points.last().unwrap()])
            .map(|p| p.map(|c| (c * 1e9).round() as i64 as u64))
            .collect();
        ends.sort_unstable();
        ends.dedup();
        assert_eq!(ends.len(), 8);
    }

    #[test]
    fn edges_out_of_chart() {
        let err = boundary_trajectories(&rig(3.0), 5).unwrap_err();
        assert!(matches!(err, WorkspaceError::EdgeOutsideChart { .. }));
    }

    #[test]
    fn point_cube_has_no_volume() {
        let v = volume_jacobian(&rig(35.0).with_bounds(77.0, 77.0), 16).unwrap();
        assert_eq!(v.volume_mm3, 0.0);
    }

    #[test]
    fn singular_grid_is_reported() {
        // Corners leave the chart at this radius; the midpoint nearest a
        // corner does too for a coarse grid.
        let cfg = rig(chart_limit_d(&rig(1.0)) * 0.8);
        assert!(matches!(
            volume_jacobian(&cfg, 8),
            Err(WorkspaceError::SingularJacobian { .. })
        ));
    }

    #[test]
    fn torque_limit() {
        let l = l_min_from_torque(&rig(35.0)).unwrap();
        assert!((l - 66.0).abs() < 1e-9);
        let mut idle = rig(35.0);
        idle.tau_c_nm = Some(0.0);
        assert_eq!(l_min_from_torque(&idle).unwrap(), 88.0);
        let mut strong = rig(35.0);
        strong.tau_c_nm = Some(1.0);
        assert!(matches!(
            l_min_from_torque(&strong),
            Err(WorkspaceError::TorqueModelInvalid { .. })
        ));
    }

    #[test]
    fn unattainable_target() {
        assert!(matches!(
            calibrate_d(1e9, &rig(35.0), 16),
            Err(WorkspaceError::NoBracket { .. })
        ));
        assert!(calibrate_d(-1.0, &rig(35.0), 16).is_err());
    }

    #[test]
    fn calibration_inverts_forward() {
        let target = volume_jacobian(&rig(50.0), 24).unwrap().volume_mm3;
        let cal = calibrate_d(target, &rig(0.0), 24).unwrap();
        assert!((cal.d_mm - 50.0).abs() < 0.01);
        assert!((cal.volume_mm3 - target).abs() < CALIBRATION_TOL_MM3);
    }

    #[test]
    fn hull_is_seed_deterministic() {
        let a = volume_hull(&rig(35.0), 5000, 3).unwrap();
        let b = volume_hull(&rig(35.0), 5000, 3).unwrap();
        assert_eq!(a.volume_mm3.to_bits(), b.volume_mm3.to_bits());
        let c = volume_hull(&rig(35.0), 5000, 4).unwrap();
        assert_ne!(a.volume_mm3.to_bits(), c.volume_mm3.to_bits());
    }
}
