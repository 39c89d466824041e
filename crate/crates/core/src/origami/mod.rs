//! Bellows crease-pattern geometry.
//!
//! A pattern is described by [`ReboParams`]. [`fold_geometry`] turns the cone
//! angle into the trapezoid rotation, crease angle and flat unit height;
//! [`generate_pattern`] lays the creases out on a flat sheet and
//! [`svg::export_svg`] writes them out.
//!
//! Lengths are millimetres. Angles are degrees at the API boundary and
//! radians inside [`FoldGeometry`].

pub mod svg;

use std::f64::consts::PI;

use serde::{Deserialize, Serialize};
use thiserror::Error;

pub use svg::{export_svg, write_svg, StyleConfig};

/// Cone angles inside this band (degrees) have been characterized by
/// compression testing; anything else is an extrapolation.
pub const CHARACTERIZED_BETA_DEG: (f64, f64) = (15.0, 45.0);

/// 8 mil polyester-coated paper.
pub const DEFAULT_THICKNESS_MM: f64 = 0.2032;

const CONTAINMENT_TOL_MM: f64 = 1e-9;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum OrigamiError {
    #[error("invalid pattern parameters: {0}")]
    InvalidParams(String),
    #[error("degenerate flat fold: cone angle {beta_deg} deg must be in (0, 90]")]
    DegenerateFlatFold { beta_deg: f64 },
    #[error("inner layer degenerate: a_o = {a_o_mm:.4} mm is not larger than b_o = {b_o_mm:.4} mm")]
    InnerLayerDegenerate { a_o_mm: f64, b_o_mm: f64 },
    #[error("i/o error writing {path}: {message}")]
    Io { path: String, message: String },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Provenance {
    Designed,
    DerivedInner,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum BetaBand {
    EmpiricallyCharacterized,
    Extrapolated,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Material {
    pub label: String,
    pub thickness_mm: f64,
}

impl Default for Material {
    fn default() -> Self {
        Self {
            label: "8 mil polyester-coated paper".to_string(),
            thickness_mm: DEFAULT_THICKNESS_MM,
        }
    }
}

/// Crease-pattern design parameters.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ReboParams {
    /// Major half-dimension of the outer trapezoid, also the circumradius of
    /// the folded polygon.
    pub a_o_mm: f64,
    pub b_o_mm: f64,
    /// Folded height of one layer.
    pub delta_z_mm: f64,
    /// Columns, i.e. polygon sides.
    pub n_r: u32,
    /// Rows, i.e. layers.
    pub n_l: u32,
    pub beta_deg: f64,
    pub material: Material,
    pub provenance: Provenance,
}

impl ReboParams {
    pub fn new(
        a_o_mm: f64,
        b_o_mm: f64,
        delta_z_mm: f64,
        n_r: u32,
        n_l: u32,
        beta_deg: f64,
    ) -> Result<Self, OrigamiError> {
        let params = Self {
            a_o_mm,
            b_o_mm,
            delta_z_mm,
            n_r,
            n_l,
            beta_deg,
            material: Material::default(),
            provenance: Provenance::Designed,
        };
        params.validate()?;
        Ok(params)
    }

    /// The specimen set used for the cone-angle stiffness study.
    pub fn specimen(beta_deg: f64) -> Result<Self, OrigamiError> {
        Self::new(20.0, 6.0, 10.0, 6, 8, beta_deg)
    }

    pub fn with_beta(&self, beta_deg: f64) -> Result<Self, OrigamiError> {
        let mut p = self.clone();
        p.beta_deg = beta_deg;
        p.validate()?;
        Ok(p)
    }

    pub fn validate(&self) -> Result<(), OrigamiError> {
        let bad = |msg: String| Err(OrigamiError::InvalidParams(msg));
        if !(self.beta_deg > 0.0 && self.beta_deg < 90.0) {
            return bad(format!("beta = {} deg outside (0, 90)", self.beta_deg));
        }
        if self.n_r < 3 {
            return bad(format!("n_r = {} < 3", self.n_r));
        }
        if self.n_l < 1 {
            return bad("n_l must be at least 1".to_string());
        }
        if !(self.b_o_mm >= 0.0 && self.a_o_mm > self.b_o_mm && self.a_o_mm.is_finite()) {
            return bad(format!(
                "need a_o > b_o >= 0, got a_o = {}, b_o = {}",
                self.a_o_mm, self.b_o_mm
            ));
        }
        if !(self.delta_z_mm > 0.0 && self.delta_z_mm.is_finite()) {
            return bad(format!("delta_z = {} must be positive", self.delta_z_mm));
        }
        if !(self.material.thickness_mm >= 0.0) {
            return bad("material thickness must be non-negative".to_string());
        }
        Ok(())
    }

    pub fn beta_band(&self) -> BetaBand {
        beta_band(self.beta_deg)
    }

    /// Circumradius of the folded polygon's outer rim.
    pub fn envelope_radius_mm(&self) -> f64 {
        self.a_o_mm
    }
}

pub fn beta_band(beta_deg: f64) -> BetaBand {
    let (lo, hi) = CHARACTERIZED_BETA_DEG;
    if (lo..=hi).contains(&beta_deg) {
        BetaBand::EmpiricallyCharacterized
    } else {
        BetaBand::Extrapolated
    }
}

/// Folded-state quantities derived from the cone angle.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FoldGeometry {
    /// Rotation of each trapezoid about the axis (rad).
    pub theta: f64,
    /// Angle of the unit mid-crease from horizontal (rad).
    pub alpha: f64,
    /// Height of one flat half-layer unit (mm).
    pub h_mm: f64,
    /// Nominal rest length `n_l * delta_z` (mm).
    pub rest_length_mm: f64,
}

impl FoldGeometry {
    /// Evaluates the fold relations for a cone angle in `(0, 90]` degrees.
    pub fn from_cone_angle(
        beta_deg: f64,
        n_r: u32,
        delta_z_mm: f64,
        n_l: u32,
    ) -> Result<Self, OrigamiError> {
        if !(beta_deg > 0.0 && beta_deg <= 90.0) {
            return Err(OrigamiError::DegenerateFlatFold { beta_deg });
        }
        if n_r == 0 {
            return Err(OrigamiError::InvalidParams("n_r must be positive".into()));
        }
        let beta = beta_deg.to_radians();
        // cos(pi/2) is ~6e-17 in floating point; pin the right angle exactly.
        let cos_beta = if beta_deg == 90.0 { 0.0 } else { beta.cos() };
        let theta = 2.0 * PI * cos_beta / f64::from(n_r);
        let alpha = (PI - theta) / 2.0;
        let h_mm = delta_z_mm / beta.sin();
        Ok(Self {
            theta,
            alpha,
            h_mm,
            rest_length_mm: f64::from(n_l) * delta_z_mm,
        })
    }
}

pub fn fold_geometry(params: &ReboParams) -> Result<FoldGeometry, OrigamiError> {
    if params.beta_deg <= 0.0 {
        return Err(OrigamiError::DegenerateFlatFold {
            beta_deg: params.beta_deg,
        });
    }
    params.validate()?;
    if params.beta_band() == BetaBand::Extrapolated {
        log::warn!(
            "cone angle {} deg is outside the characterized band {:?}",
            params.beta_deg,
            CHARACTERIZED_BETA_DEG
        );
    }
    FoldGeometry::from_cone_angle(params.beta_deg, params.n_r, params.delta_z_mm, params.n_l)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum CreaseKind {
    Mountain,
    Valley,
    Boundary,
}

impl CreaseKind {
    pub fn as_str(self) -> &'static str {
        match self {
            CreaseKind::Mountain => "mountain",
            CreaseKind::Valley => "valley",
            CreaseKind::Boundary => "boundary",
        }
    }

    fn flipped(self, invert: bool) -> Self {
        match (self, invert) {
            (CreaseKind::Mountain, true) => CreaseKind::Valley,
            (CreaseKind::Valley, true) => CreaseKind::Mountain,
            (k, _) => k,
        }
    }
}

/// What a crease segment is for inside the tessellation.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum CreaseRole {
    Diagonal,
    RowBoundary,
    ColumnBoundary,
    SheetEdge,
}

/// A straight crease on the flat sheet. Coordinates are in mm with the
/// origin at the top-left corner and y pointing down the sheet.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Crease {
    pub start: [f64; 2],
    pub end: [f64; 2],
    pub kind: CreaseKind,
    pub role: CreaseRole,
}

impl Crease {
    pub fn angle_from_horizontal(&self) -> f64 {
        let dx = self.end[0] - self.start[0];
        let dy = self.end[1] - self.start[1];
        dy.abs().atan2(dx.abs())
    }
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct PatternOptions {
    /// Swap every mountain for a valley and vice versa.
    pub invert_mountain_valley: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PatternMetadata {
    pub params: ReboParams,
    pub geometry: FoldGeometry,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CreasePattern {
    pub sheet_width_mm: f64,
    pub sheet_height_mm: f64,
    pub unit_width_mm: f64,
    pub columns: u32,
    pub half_rows: u32,
    pub creases: Vec<Crease>,
    pub metadata: PatternMetadata,
}

impl CreasePattern {
    pub fn count_role(&self, role: CreaseRole) -> usize {
        self.creases.iter().filter(|c| c.role == role).count()
    }

    pub fn count_kind(&self, kind: CreaseKind) -> usize {
        self.creases.iter().filter(|c| c.kind == kind).count()
    }

    /// True when every crease endpoint lies inside the sheet rectangle.
    pub fn creases_within_sheet(&self) -> bool {
        let inside = |p: [f64; 2]| {
            p[0] >= -CONTAINMENT_TOL_MM
                && p[0] <= self.sheet_width_mm + CONTAINMENT_TOL_MM
                && p[1] >= -CONTAINMENT_TOL_MM
                && p[1] <= self.sheet_height_mm + CONTAINMENT_TOL_MM
        };
        self.creases.iter().all(|c| inside(c.start) && inside(c.end))
    }
}

pub fn generate_pattern(params: &ReboParams) -> Result<CreasePattern, OrigamiError> {
    generate_pattern_with(params, PatternOptions::default())
}

/// Lays out `n_r` columns by `2 n_l` half-layer rows of `a_o x h` units.
///
/// Each unit gets one mid-crease through its centre at `alpha` from
/// horizontal, mirrored on alternate half-rows so neighbouring rows meet in a
/// chevron. Row boundaries alternate mountain/valley down the sheet, interior
/// column boundaries are valleys and diagonals are mountains.
pub fn generate_pattern_with(
    params: &ReboParams,
    options: PatternOptions,
) -> Result<CreasePattern, OrigamiError> {
    let geometry = fold_geometry(params)?;
    let unit_w = params.a_o_mm;
    let unit_h = geometry.h_mm;
    let columns = params.n_r;
    let half_rows = 2 * params.n_l;
    let width = f64::from(columns) * unit_w;
    let height = f64::from(half_rows) * unit_h;
    let invert = options.invert_mountain_valley;

    let mut creases = Vec::with_capacity((columns * half_rows + columns + half_rows + 4) as usize);

    let (sin_a, cos_a) = geometry.alpha.sin_cos();
    let reach_x = if cos_a > 0.0 {
        unit_w / (2.0 * cos_a)
    } else {
        f64::INFINITY
    };
    let reach = (unit_h / (2.0 * sin_a)).min(reach_x);
    for row in 0..half_rows {
        // Even rows rise left to right on the page; odd rows are mirrored.
        let dy = if row % 2 == 0 { -sin_a } else { sin_a };
        let cy = (f64::from(row) + 0.5) * unit_h;
        for col in 0..columns {
            let cx = (f64::from(col) + 0.5) * unit_w;
            let start = clamp_to_sheet([cx - reach * cos_a, cy - reach * dy], width, height);
            let end = clamp_to_sheet([cx + reach * cos_a, cy + reach * dy], width, height);
            creases.push(Crease {
                start,
                end,
                kind: CreaseKind::Mountain.flipped(invert),
                role: CreaseRole::Diagonal,
            });
        }
    }

    for row in 1..half_rows {
        let y = f64::from(row) * unit_h;
        let kind = if row % 2 == 1 {
            CreaseKind::Mountain
        } else {
            CreaseKind::Valley
        };
        creases.push(Crease {
            start: [0.0, y],
            end: [width, y],
            kind: kind.flipped(invert),
            role: CreaseRole::RowBoundary,
        });
    }

    for col in 1..columns {
        let x = f64::from(col) * unit_w;
        creases.push(Crease {
            start: [x, 0.0],
            end: [x, height],
            kind: CreaseKind::Valley.flipped(invert),
            role: CreaseRole::ColumnBoundary,
        });
    }

    let corners = [[0.0, 0.0], [width, 0.0], [width, height], [0.0, height]];
    for i in 0..4 {
        creases.push(Crease {
            start: corners[i],
            end: corners[(i + 1) % 4],
            kind: CreaseKind::Boundary,
            role: CreaseRole::SheetEdge,
        });
    }

    Ok(CreasePattern {
        sheet_width_mm: width,
        sheet_height_mm: height,
        unit_width_mm: unit_w,
        columns,
        half_rows,
        creases,
        metadata: PatternMetadata {
            params: params.clone(),
            geometry,
        },
    })
}

fn clamp_to_sheet(p: [f64; 2], width: f64, height: f64) -> [f64; 2] {
    [p[0].clamp(0.0, width), p[1].clamp(0.0, height)]
}

/// Whether `inner` fits inside `outer` with at least `clearance_mm` of radial
/// gap left over after the sheet thickness.
///
/// Both folded polygons share the axis and the side count, so their vertices
/// line up and the comparison is circumradius against circumradius.
pub fn nests_within(inner: &ReboParams, outer: &ReboParams, clearance_mm: f64) -> bool {
    if inner.n_r != outer.n_r {
        return false;
    }
    let gap = outer.envelope_radius_mm() - inner.envelope_radius_mm();
    gap > 0.0 && gap + 1e-12 >= clearance_mm + outer.material.thickness_mm
}

/// Parameters for a concentric inner layer that nests inside `outer`.
///
/// Keeps `delta_z`, `n_r`, `n_l`, `b_o`, the cone angle and the material, and
/// shrinks `a_o` by the clearance plus one sheet thickness.
pub fn inner_layer_params(outer: &ReboParams, clearance_mm: f64) -> Result<ReboParams, OrigamiError> {
    outer.validate()?;
    if !(clearance_mm >= 0.0 && clearance_mm.is_finite()) {
        return Err(OrigamiError::InvalidParams(format!(
            "clearance {clearance_mm} mm must be non-negative"
        )));
    }
    let a_o_mm = outer.a_o_mm - clearance_mm - outer.material.thickness_mm;
    if a_o_mm <= outer.b_o_mm {
        return Err(OrigamiError::InnerLayerDegenerate {
            a_o_mm,
            b_o_mm: outer.b_o_mm,
        });
    }
    let inner = ReboParams {
        a_o_mm,
        provenance: Provenance::DerivedInner,
        ..outer.clone()
    };
    inner.validate()?;
    Ok(inner)
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn juggler_outer() -> ReboParams {
        ReboParams::new(20.0, 5.0, 10.0, 6, 8, 45.0).unwrap()
    }

    fn juggler_inner() -> ReboParams {
        ReboParams::new(19.0, 0.0, 10.0, 6, 8, 25.0).unwrap()
    }

    #[test]
    fn right_angle_cone() {
        let g = FoldGeometry::from_cone_angle(90.0, 6, 10.0, 8).unwrap();
        assert_eq!(g.theta, 0.0);
        assert!((g.alpha - PI / 2.0).abs() < 1e-15);
        assert!((g.h_mm - 10.0).abs() < 1e-12);
    }

    #[test]
    fn rejects_flat_fold() {
        assert!(matches!(
            FoldGeometry::from_cone_angle(0.0, 6, 10.0, 8),
            Err(OrigamiError::DegenerateFlatFold { .. })
        ));
        assert!(ReboParams::new(20.0, 6.0, 10.0, 6, 8, 0.0).is_err());
        assert!(ReboParams::new(20.0, 6.0, 10.0, 6, 8, -5.0).is_err());
    }

    #[test]
    fn parameter_validation() {
        assert!(ReboParams::new(20.0, 6.0, 10.0, 2, 8, 30.0).is_err());
        assert!(ReboParams::new(20.0, 6.0, 10.0, 6, 0, 30.0).is_err());
        assert!(ReboParams::new(6.0, 6.0, 10.0, 6, 8, 30.0).is_err());
        assert!(ReboParams::new(20.0, -1.0, 10.0, 6, 8, 30.0).is_err());
        assert!(ReboParams::new(20.0, 6.0, 0.0, 6, 8, 30.0).is_err());
        assert!(ReboParams::new(20.0, 6.0, 10.0, 6, 8, 90.0).is_err());
    }

    #[test]
    fn band_flags() {
        assert_eq!(beta_band(15.0), BetaBand::EmpiricallyCharacterized);
        assert_eq!(beta_band(45.0), BetaBand::EmpiricallyCharacterized);
        assert_eq!(beta_band(50.0), BetaBand::Extrapolated);
        assert_eq!(beta_band(10.0), BetaBand::Extrapolated);
        // extrapolated angles still produce a geometry
        let p = ReboParams::specimen(60.0).unwrap();
        assert!(fold_geometry(&p).is_ok());
    }

    #[test]
    fn minimal_pattern() {
        let p = ReboParams::new(20.0, 6.0, 10.0, 3, 1, 30.0).unwrap();
        let pat = generate_pattern(&p).unwrap();
        assert_eq!(pat.half_rows, 2);
        assert_eq!(pat.count_role(CreaseRole::Diagonal), 6);
        for row in 0..2 {
            let per_row = pat
                .creases
                .iter()
                .filter(|c| c.role == CreaseRole::Diagonal)
                .skip(row * 3)
                .take(3)
                .count();
            assert_eq!(per_row, 3);
        }
    }

    #[test]
    fn diagonals_sit_at_alpha() {
        let p = ReboParams::specimen(35.0).unwrap();
        let pat = generate_pattern(&p).unwrap();
        let alpha = pat.metadata.geometry.alpha;
        for c in pat.creases.iter().filter(|c| c.role == CreaseRole::Diagonal) {
            assert!((c.angle_from_horizontal() - alpha).abs() < 1e-12);
        }
    }

    #[test]
    fn row_boundaries_alternate() {
        let p = ReboParams::specimen(35.0).unwrap();
        let pat = generate_pattern(&p).unwrap();
        let rows: Vec<_> = pat
            .creases
            .iter()
            .filter(|c| c.role == CreaseRole::RowBoundary)
            .map(|c| c.kind)
            .collect();
        assert_eq!(rows.len(), 15);
        for pair in rows.windows(2) {
            assert_ne!(pair[0], pair[1]);
        }
        let inverted = generate_pattern_with(
            &p,
            PatternOptions {
                invert_mountain_valley: true,
            },
        )
        .unwrap();
        assert_eq!(
            inverted.count_kind(CreaseKind::Mountain),
            pat.count_kind(CreaseKind::Valley)
        );
        assert_eq!(
            inverted.count_kind(CreaseKind::Boundary),
            pat.count_kind(CreaseKind::Boundary)
        );
    }

    #[test]
    fn juggler_pair_nests() {
        assert!(nests_within(&juggler_inner(), &juggler_outer(), 0.0));
        assert!(nests_within(&juggler_inner(), &juggler_outer(), 0.5));
    }

    #[test]
    fn self_nesting_fails() {
        let outer = juggler_outer();
        assert!(!nests_within(&outer, &outer, 0.0));
    }

    #[test]
    fn derived_inner_layer() {
        let outer = juggler_outer();
        let inner = inner_layer_params(&outer, 0.5).unwrap();
        assert_eq!(inner.provenance, Provenance::DerivedInner);
        assert_eq!(inner.n_r, outer.n_r);
        assert_eq!(inner.n_l, outer.n_l);
        assert_eq!(inner.delta_z_mm, outer.delta_z_mm);
        assert!(nests_within(&inner, &outer, 0.5));
        assert!(!nests_within(&inner, &outer, 0.6));
    }

    #[test]
    fn huge_clearance_degenerates() {
        let outer = juggler_outer();
        assert!(matches!(
            inner_layer_params(&outer, 30.0),
            Err(OrigamiError::InnerLayerDegenerate { .. })
        ));
        assert!(inner_layer_params(&outer, -1.0).is_err());
    }

    proptest! {
        #[test]
        fn fold_relations_hold(beta in 0.5f64..89.5, n_r in 3u32..24, dz in 1.0f64..40.0, n_l in 1u32..20) {
            let g = FoldGeometry::from_cone_angle(beta, n_r, dz, n_l).unwrap();
            let b = beta.to_radians();
            let lhs = g.theta * f64::from(n_r);
            let rhs = 2.0 * PI * b.cos();
            prop_assert!((lhs - rhs).abs() <= 1e-12 * rhs.abs().max(1e-300));
            prop_assert!((g.h_mm * b.sin() - dz).abs() <= 1e-12 * dz);
            prop_assert!(g.alpha > 0.0 && g.alpha < PI / 2.0);
            prop_assert!((g.rest_length_mm - f64::from(n_l) * dz).abs() < 1e-12 * g.rest_length_mm);
        }

        #[test]
        fn alpha_increases_with_beta(b1 in 1.0f64..88.0, db in 0.01f64..1.0, n_r in 3u32..24) {
            let g1 = FoldGeometry::from_cone_angle(b1, n_r, 10.0, 1).unwrap();
            let g2 = FoldGeometry::from_cone_angle(b1 + db, n_r, 10.0, 1).unwrap();
            prop_assert!(g2.alpha > g1.alpha);
        }

        #[test]
        fn pattern_shape(beta in 5.0f64..85.0, n_r in 3u32..12, n_l in 1u32..10, a_o in 8.0f64..40.0) {
            let p = ReboParams::new(a_o, 2.0, 10.0, n_r, n_l, beta).unwrap();
            let pat = generate_pattern(&p).unwrap();
            prop_assert_eq!(pat.count_role(CreaseRole::Diagonal), (n_r * 2 * n_l) as usize);
            prop_assert!(pat.creases_within_sheet());
            let h = pat.metadata.geometry.h_mm;
            prop_assert!((pat.sheet_height_mm - f64::from(2 * n_l) * h).abs() < 1e-9);
            prop_assert!((pat.sheet_width_mm - f64::from(n_r) * a_o).abs() < 1e-9);
        }

        #[test]
        fn larger_clearance_nests_deeper(c2 in 0.0f64..5.0, dc in 0.001f64..5.0) {
            let outer = juggler_outer();
            let loose = inner_layer_params(&outer, c2).unwrap();
            let tight = inner_layer_params(&outer, c2 + dc).unwrap();
            prop_assert!(tight.a_o_mm < loose.a_o_mm);
            prop_assert!(tight.envelope_radius_mm() < loose.envelope_radius_mm());
        }
    }
}
