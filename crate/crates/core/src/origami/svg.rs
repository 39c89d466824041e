use std::fmt::Write as _;
use std::path::Path;

use serde::{Deserialize, Serialize};

use super::{CreaseKind, CreasePattern, OrigamiError};

/// Stroke styling for the exported sheet. Widths are in mm.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StyleConfig {
    pub mountain_color: String,
    pub valley_color: String,
    pub boundary_color: String,
    pub crease_width_mm: f64,
    pub boundary_width_mm: f64,
    pub valley_dash_mm: (f64, f64),
}

impl Default for StyleConfig {
    fn default() -> Self {
        Self {
            mountain_color: "#d62728".to_string(),
            valley_color: "#1f77b4".to_string(),
            boundary_color: "#000000".to_string(),
            crease_width_mm: 0.2,
            boundary_width_mm: 0.5,
            valley_dash_mm: (2.0, 1.0),
        }
    }
}

/// Renders the pattern as an SVG document in millimetre user units.
///
/// Output is a pure function of the inputs: numbers are printed with a fixed
/// precision and creases are written in pattern order.
pub fn export_svg(pattern: &CreasePattern, style: &StyleConfig) -> Result<Vec<u8>, OrigamiError> {
    let meta = serde_json::to_string(&pattern.metadata)
        .map_err(|e| OrigamiError::InvalidParams(e.to_string()))?;
    let w = pattern.sheet_width_mm;
    let h = pattern.sheet_height_mm;

    let mut out = String::with_capacity(128 * pattern.creases.len() + 1024);
    // Writing into a String cannot fail.
    let _ = writeln!(out, r#"<?xml version="1.0" encoding="UTF-8"?>"#);
    let _ = writeln!(
        out,
        r#"<svg xmlns="http://www.w3.org/2000/svg" width="{w:.6}mm" height="{h:.6}mm" viewBox="0 0 {w:.6} {h:.6}">"#
    );
    let _ = writeln!(out, "<!-- rebo-params: {} -->", meta.replace("--", "- -"));
    let _ = writeln!(out, "<style>");
    let _ = writeln!(
        out,
        "  line.mountain {{ stroke: {}; stroke-width: {:.4}; fill: none; }}",
        style.mountain_color, style.crease_width_mm
    );
    let _ = writeln!(
        out,
        "  line.valley {{ stroke: {}; stroke-width: {:.4}; stroke-dasharray: {:.4} {:.4}; fill: none; }}",
        style.valley_color, style.crease_width_mm, style.valley_dash_mm.0, style.valley_dash_mm.1
    );
    let _ = writeln!(
        out,
        "  line.boundary {{ stroke: {}; stroke-width: {:.4}; fill: none; }}",
        style.boundary_color, style.boundary_width_mm
    );
    let _ = writeln!(out, "</style>");
    for kind in [CreaseKind::Boundary, CreaseKind::Valley, CreaseKind::Mountain] {
        let _ = writeln!(out, r#"<g id="{}">"#, kind.as_str());
        for c in pattern.creases.iter().filter(|c| c.kind == kind) {
            let _ = writeln!(
                out,
                r#"  <line class="{}" x1="{:.6}" y1="{:.6}" x2="{:.6}" y2="{:.6}"/>"#,
                kind.as_str(),
                c.start[0],
                c.start[1],
                c.end[0],
                c.end[1]
            );
        }
        let _ = writeln!(out, "</g>");
    }
    let _ = writeln!(out, "</svg>");
    Ok(out.into_bytes())
}

pub fn write_svg(
    pattern: &CreasePattern,
    style: &StyleConfig,
    path: &Path,
) -> Result<(), OrigamiError> {
    let bytes = export_svg(pattern, style)?;
    std::fs::write(path, bytes).map_err(|e| OrigamiError::Io {
        path: path.display().to_string(),
        message: e.to_string(),
    })
}
