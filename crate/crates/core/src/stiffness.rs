//! Stiffness models and reduction of compression-test data.
//!
//! Traces are recorded in mm and N; stiffness is reported in N/m, stress in
//! Pa and energy in J.

use std::collections::BTreeMap;
use std::io::Read;
use std::path::Path;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::numeric::{compensated_sum, fit_line, LineFit};
use crate::origami::ReboParams;

pub const DEFAULT_LINEAR_FRACTION: f64 = 2.0 / 3.0;
const MIN_TRACE_SAMPLES: usize = 10;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum StiffnessError {
    #[error("model invalid at this angle: predicted {k_npm:.4} N/m at beta = {beta_deg} deg")]
    NonPositivePrediction { beta_deg: f64, k_npm: f64 },
    #[error("degenerate fit: need at least two distinct abscissae")]
    DegenerateFit,
    #[error("cannot stack an empty set of layers")]
    EmptyStack,
    #[error("layer stiffness must be positive, got {0}")]
    NonPositiveLayer(f64),
    #[error("non-spring-like trace: fitted slope {slope_npm:.4} N/m")]
    NonSpringLike { slope_npm: f64 },
    #[error("trace too short: {got} samples, need at least {need}")]
    TooFewSamples { got: usize, need: usize },
    #[error("linear fraction {0} outside (0, 1]")]
    BadFraction(f64),
    #[error("invalid trace: {0}")]
    InvalidTrace(String),
    #[error("invalid geometry: {0}")]
    InvalidGeometry(String),
    #[error("csv error: {0}")]
    Csv(String),
}

/// Affine cone-angle law `k = slope * beta + intercept` (N/m, beta in degrees).
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct StiffnessModel {
    pub slope: f64,
    pub intercept: f64,
    pub r_squared: f64,
    pub valid_band: (f64, f64),
}

impl StiffnessModel {
    /// Angle at which the law predicts zero stiffness.
    pub fn zero_crossing_deg(&self) -> f64 {
        -self.intercept / self.slope
    }

    pub fn in_band(&self, beta_deg: f64) -> bool {
        beta_deg >= self.valid_band.0 && beta_deg <= self.valid_band.1
    }
}

pub fn predict_stiffness(beta_deg: f64, model: &StiffnessModel) -> Result<f64, StiffnessError> {
    if !model.in_band(beta_deg) {
        log::warn!(
            "beta = {beta_deg} deg is outside the fitted band {:?}",
            model.valid_band
        );
    }
    let k_npm = model.slope * beta_deg + model.intercept;
    if !(k_npm > 0.0) {
        return Err(StiffnessError::NonPositivePrediction { beta_deg, k_npm });
    }
    Ok(k_npm)
}

/// Least-squares affine law through `(beta_deg, k_npm)` points.
pub fn fit_affine(points: &[(f64, f64)]) -> Result<StiffnessModel, StiffnessError> {
    let fit = fit_line(points).ok_or(StiffnessError::DegenerateFit)?;
    let lo = points.iter().map(|p| p.0).fold(f64::INFINITY, f64::min);
    let hi = points.iter().map(|p| p.0).fold(f64::NEG_INFINITY, f64::max);
    Ok(StiffnessModel {
        slope: fit.slope,
        intercept: fit.intercept,
        r_squared: fit.r_squared,
        valid_band: (lo, hi),
    })
}

/// Concentric layers act as parallel springs.
pub fn stack_stiffness(layers: &[f64]) -> Result<f64, StiffnessError> {
    if layers.is_empty() {
        return Err(StiffnessError::EmptyStack);
    }
    if let Some(&bad) = layers.iter().find(|&&k| !(k > 0.0)) {
        return Err(StiffnessError::NonPositiveLayer(bad));
    }
    Ok(compensated_sum(layers.iter().copied()))
}

/// Signed relative deviation `(predicted - measured) / measured`.
pub fn relative_deviation(predicted: f64, measured: f64) -> f64 {
    (predicted - measured) / measured
}

/// One force-displacement sweep. Displacement in mm, force in N.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ForceDisplacementTrace {
    pub samples: Vec<(f64, f64)>,
    /// Measured natural length of the specimen (mm).
    pub rest_length_mm: Option<f64>,
    pub trial_id: String,
}

impl ForceDisplacementTrace {
    pub fn new(samples: Vec<(f64, f64)>, trial_id: impl Into<String>) -> Result<Self, StiffnessError> {
        let trace = Self {
            samples,
            rest_length_mm: None,
            trial_id: trial_id.into(),
        };
        trace.validate_values()?;
        Ok(trace)
    }

    pub fn with_rest_length(mut self, rest_length_mm: f64) -> Self {
        self.rest_length_mm = Some(rest_length_mm);
        self
    }

    fn validate_values(&self) -> Result<(), StiffnessError> {
        for (i, &(x, f)) in self.samples.iter().enumerate() {
            if !x.is_finite() || !f.is_finite() {
                return Err(StiffnessError::InvalidTrace(format!(
                    "sample {i} of trial '{}' is not finite",
                    self.trial_id
                )));
            }
            if x < 0.0 {
                return Err(StiffnessError::InvalidTrace(format!(
                    "sample {i} of trial '{}' has negative displacement {x}",
                    self.trial_id
                )));
            }
        }
        Ok(())
    }

    /// A compression sweep has non-decreasing displacement.
    pub fn is_compression_sweep(&self) -> bool {
        self.samples.windows(2).all(|w| w[1].0 >= w[0].0)
    }

    pub fn max_displacement_mm(&self) -> f64 {
        self.samples.iter().map(|s| s.0).fold(0.0, f64::max)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct StiffnessEstimate {
    pub k_npm: f64,
    pub fit_range_mm: (f64, f64),
    pub r_squared: f64,
    /// Standard error of `k_npm` from the regression.
    pub k_stderr_npm: f64,
    pub samples_used: usize,
}

fn hookean_samples(
    trace: &ForceDisplacementTrace,
    linear_fraction: f64,
) -> Result<(Vec<(f64, f64)>, f64), StiffnessError> {
    if trace.samples.len() < MIN_TRACE_SAMPLES {
        return Err(StiffnessError::TooFewSamples {
            got: trace.samples.len(),
            need: MIN_TRACE_SAMPLES,
        });
    }
    if !(linear_fraction > 0.0 && linear_fraction <= 1.0) {
        return Err(StiffnessError::BadFraction(linear_fraction));
    }
    trace.validate_values()?;
    if !trace.is_compression_sweep() {
        return Err(StiffnessError::InvalidTrace(format!(
            "trial '{}' is not a compression sweep (displacement decreases)",
            trace.trial_id
        )));
    }
    let cutoff = linear_fraction * trace.max_displacement_mm();
    let pts: Vec<_> = trace
        .samples
        .iter()
        .copied()
        .filter(|s| s.0 <= cutoff * (1.0 + 1e-12))
        .collect();
    Ok((pts, cutoff))
}

/// Fits force against displacement over the first `linear_fraction` of the
/// travel; the stiffening tail where layers stack flat is excluded.
pub fn estimate_stiffness(
    trace: &ForceDisplacementTrace,
    linear_fraction: f64,
) -> Result<StiffnessEstimate, StiffnessError> {
    let (pts, cutoff) = hookean_samples(trace, linear_fraction)?;
    let fit = fit_line(&pts).ok_or(StiffnessError::DegenerateFit)?;
    let k_npm = fit.slope * 1e3;
    if !(k_npm > 0.0) {
        return Err(StiffnessError::NonSpringLike { slope_npm: k_npm });
    }
    let lo = pts.iter().map(|p| p.0).fold(f64::INFINITY, f64::min);
    Ok(StiffnessEstimate {
        k_npm,
        fit_range_mm: (lo, cutoff),
        r_squared: fit.r_squared,
        k_stderr_npm: fit.slope_stderr * 1e3,
        samples_used: fit.n,
    })
}

/// Effective hexagonal area `3 sqrt(3) (a_o - b_o)^2` in mm^2.
pub fn effective_area_mm2(params: &ReboParams) -> f64 {
    3.0 * 3f64.sqrt() * (params.a_o_mm - params.b_o_mm).powi(2)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StressStrain {
    /// `(strain, stress in Pa)` pairs in trace order.
    pub curve: Vec<(f64, f64)>,
    pub youngs_modulus_pa: f64,
    pub area_mm2: f64,
    pub fit: Option<(f64, f64)>,
}

/// Converts a trace to engineering stress and strain and fits the modulus
/// over the Hookean region.
pub fn stress_strain(
    trace: &ForceDisplacementTrace,
    params: &ReboParams,
    linear_fraction: f64,
) -> Result<StressStrain, StiffnessError> {
    let rest = trace
        .rest_length_mm
        .ok_or_else(|| StiffnessError::InvalidGeometry("trace has no rest length".into()))?;
    if !(rest > 0.0) {
        return Err(StiffnessError::InvalidGeometry(format!(
            "rest length {rest} mm must be positive"
        )));
    }
    let area_mm2 = effective_area_mm2(params);
    if !(area_mm2 > 0.0) {
        return Err(StiffnessError::InvalidGeometry(
            "effective area is zero (a_o = b_o)".into(),
        ));
    }
    let area_m2 = area_mm2 * 1e-6;
    let convert = |(x, f): (f64, f64)| (x / rest, f / area_m2);
    let curve: Vec<_> = trace.samples.iter().copied().map(convert).collect();
    let (pts, cutoff) = hookean_samples(trace, linear_fraction)?;
    let pts: Vec<_> = pts.into_iter().map(convert).collect();
    let LineFit { slope, .. } = fit_line(&pts).ok_or(StiffnessError::DegenerateFit)?;
    if !(slope > 0.0) {
        return Err(StiffnessError::NonSpringLike {
            slope_npm: slope * area_m2 / (rest * 1e-3),
        });
    }
    Ok(StressStrain {
        curve,
        youngs_modulus_pa: slope,
        area_mm2,
        fit: Some((0.0, cutoff / rest)),
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct HysteresisLoss {
    pub energy_j: f64,
    /// Set when unloading carried more force than loading, which is not
    /// physical and usually means the branches were swapped.
    pub negative: bool,
    pub span_mm: (f64, f64),
}

fn sorted_branch(trace: &ForceDisplacementTrace) -> Result<Vec<(f64, f64)>, StiffnessError> {
    trace.validate_values()?;
    if trace.samples.len() < 2 {
        return Err(StiffnessError::TooFewSamples {
            got: trace.samples.len(),
            need: 2,
        });
    }
    let mut pts = trace.samples.clone();
    pts.sort_by(|a, b| a.0.total_cmp(&b.0));
    Ok(pts)
}

fn interpolate(branch: &[(f64, f64)], x: f64) -> f64 {
    let i = branch.partition_point(|p| p.0 < x);
    if i == 0 {
        return branch[0].1;
    }
    if i >= branch.len() {
        return branch[branch.len() - 1].1;
    }
    let (x0, y0) = branch[i - 1];
    let (x1, y1) = branch[i];
    if x1 == x0 {
        return y1;
    }
    y0 + (y1 - y0) * (x - x0) / (x1 - x0)
}

/// Area between the loading and unloading branches (J).
///
/// Both branches are treated as piecewise linear and evaluated on the union of
/// their displacement knots over the common span, so the trapezoid rule is
/// exact for the interpolants.
pub fn hysteresis_loss(
    loading: &ForceDisplacementTrace,
    unloading: &ForceDisplacementTrace,
) -> Result<HysteresisLoss, StiffnessError> {
    let up = sorted_branch(loading)?;
    let down = sorted_branch(unloading)?;
    let lo = up[0].0.max(down[0].0);
    let hi = up[up.len() - 1].0.min(down[down.len() - 1].0);
    if !(hi > lo) {
        return Err(StiffnessError::InvalidTrace(
            "loading and unloading branches do not overlap".into(),
        ));
    }
    let mut grid: Vec<f64> = up
        .iter()
        .chain(down.iter())
        .map(|p| p.0)
        .filter(|&x| x > lo && x < hi)
        .collect();
    grid.push(lo);
    grid.push(hi);
    grid.sort_by(f64::total_cmp);
    grid.dedup();
    let gap = |x: f64| interpolate(&up, x) - interpolate(&down, x);
    let area_nmm = compensated_sum(
        grid.windows(2)
            .map(|w| 0.5 * (w[1] - w[0]) * (gap(w[0]) + gap(w[1]))),
    );
    let energy_j = area_nmm * 1e-3;
    let negative = energy_j < 0.0;
    if negative {
        log::warn!("negative hysteresis loss {energy_j} J; are the branches swapped?");
    }
    Ok(HysteresisLoss {
        energy_j,
        negative,
        span_mm: (lo, hi),
    })
}

#[derive(Debug, Deserialize)]
struct TraceRow {
    displacement_mm: f64,
    force_n: f64,
    #[serde(default)]
    trial: Option<String>,
}

/// Reads `displacement_mm,force_n[,trial]` rows. Rows are grouped by the
/// `trial` column when present; otherwise the whole file is one trace named
/// after `default_trial`.
pub fn read_traces<R: Read>(reader: R, default_trial: &str) -> Result<Vec<ForceDisplacementTrace>, StiffnessError> {
    let mut rdr = csv::ReaderBuilder::new().trim(csv::Trim::All).from_reader(reader);
    let mut groups: BTreeMap<String, Vec<(f64, f64)>> = BTreeMap::new();
    let mut order: Vec<String> = Vec::new();
    for row in rdr.deserialize::<TraceRow>() {
        let row = row.map_err(|e| StiffnessError::Csv(e.to_string()))?;
        let key = row
            .trial
            .filter(|t| !t.is_empty())
            .unwrap_or_else(|| default_trial.to_string());
        if !groups.contains_key(&key) {
            order.push(key.clone());
        }
        groups
            .entry(key)
            .or_default()
            .push((row.displacement_mm, row.force_n));
    }
    order
        .into_iter()
        .map(|k| {
            let samples = groups.remove(&k).unwrap_or_default();
            ForceDisplacementTrace::new(samples, k)
        })
        .collect()
}

pub fn read_traces_file(path: &Path) -> Result<Vec<ForceDisplacementTrace>, StiffnessError> {
    let file = std::fs::File::open(path)
        .map_err(|e| StiffnessError::Csv(format!("{}: {e}", path.display())))?;
    let stem = path
        .file_stem()
        .map(|s| s.to_string_lossy().into_owned())
        .unwrap_or_else(|| "trace".into());
    read_traces(file, &stem)
}

#[derive(Debug, Deserialize)]
struct AnglePointRow {
    beta_deg: f64,
    k_npm: f64,
}

/// Reads `beta_deg,k_npm[,...]` rows for [`fit_affine`].
pub fn read_angle_points<R: Read>(reader: R) -> Result<Vec<(f64, f64)>, StiffnessError> {
    let mut rdr = csv::ReaderBuilder::new()
        .trim(csv::Trim::All)
        .flexible(true)
        .from_reader(reader);
    rdr.deserialize::<AnglePointRow>()
        .map(|r| {
            r.map(|r| (r.beta_deg, r.k_npm))
                .map_err(|e| StiffnessError::Csv(e.to_string()))
        })
        .collect()
}
