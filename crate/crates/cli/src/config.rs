//! Flat key-value configuration with unit-suffixed keys.

use std::path::{Path, PathBuf};

use anyhow::{bail, Context, Result};
use rebo_core::fixtures;
use rebo_core::{BallSpec, JugglerSpec, RigConfig};
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::plot::PlotStyle;

pub const OUT_DIR_ENV: &str = "REBO_OUT_DIR";

/// On-disk form. Every key is optional; missing keys fall back to the
/// shipped defaults.
#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FileConfig {
    pub d_mm: Option<f64>,
    pub l_max_mm: Option<f64>,
    pub l_min_mm: Option<f64>,
    pub r_p_mm: Option<f64>,
    pub tau_c_nm: Option<f64>,
    pub k_single_npm: Option<f64>,
    pub k_es_npm: Option<f64>,
    pub b_s_nspm: Option<f64>,
    pub p_com_mm: Option<f64>,
    pub z_rest_mm: Option<f64>,
    pub mass_kg: Option<f64>,
    pub restitution: Option<f64>,
    pub output_dir: Option<PathBuf>,
    pub plot_width_px: Option<u32>,
    pub plot_height_px: Option<u32>,
}

#[derive(Debug, Clone, Serialize)]
pub struct ToolConfig {
    pub rig: RigConfig,
    pub juggler: JugglerSpec,
    pub ball: BallSpec,
    pub output_dir: PathBuf,
    pub plot_style: PlotStyle,
}

impl ToolConfig {
    pub fn load(path: Option<&Path>) -> Result<Self> {
        let file = match path {
            Some(p) => {
                let text = std::fs::read_to_string(p).with_context(|| format!("reading config {}", p.display()))?;
                toml::from_str::<FileConfig>(&text).with_context(|| format!("parsing config {}", p.display()))?
            }
            None => FileConfig::default(),
        };
        let env_dir = std::env::var_os(OUT_DIR_ENV).map(PathBuf::from);
        Self::resolve(file, env_dir)
    }

    pub fn resolve(file: FileConfig, env_out_dir: Option<PathBuf>) -> Result<Self> {
        let base = fixtures::default_rig();
        let rig = RigConfig {
            d_mm: file.d_mm.unwrap_or(base.d_mm),
            l_max_mm: file.l_max_mm.unwrap_or(base.l_max_mm),
            l_min_mm: file.l_min_mm.unwrap_or(base.l_min_mm),
            r_p_mm: file.r_p_mm.unwrap_or(base.r_p_mm),
            tau_c_nm: file.tau_c_nm.or(base.tau_c_nm),
            k_single_npm: file.k_single_npm.unwrap_or(base.k_single_npm),
        };
        rig.validate()?;

        let (shot, spec) = fixtures::shot_operating_point();
        let juggler = JugglerSpec {
            k_es: file.k_es_npm.unwrap_or(spec.k_es),
            b_s: file.b_s_nspm.unwrap_or(spec.b_s),
            p_com: file.p_com_mm.map_or(spec.p_com, |p| p * 1e-3),
            z_rest: file.z_rest_mm.map_or(spec.z_rest, |z| z * 1e-3),
        };
        juggler.validate()?;
        let ball = BallSpec::new(
            file.mass_kg.unwrap_or(shot.mass),
            file.restitution.unwrap_or(DEFAULT_RESTITUTION),
            "ball",
        );
        ball.validate()?;

        let output_dir = env_out_dir
            .or(file.output_dir)
            .unwrap_or_else(|| PathBuf::from("."));
        let mut plot_style = PlotStyle::default();
        if let Some(w) = file.plot_width_px {
            plot_style.width_px = w;
        }
        if let Some(h) = file.plot_height_px {
            plot_style.height_px = h;
        }
        if plot_style.width_px < 100 || plot_style.height_px < 100 {
            bail!("plot size must be at least 100 x 100 px");
        }
        Ok(Self {
            rig,
            juggler,
            ball,
            output_dir,
            plot_style,
        })
    }

    /// SHA-256 over the resolved configuration.
    pub fn hash(&self) -> String {
        let json = serde_json::to_vec(self).expect("config serializes");
        hex::encode(Sha256::digest(json))
    }

    /// Resolves an output path under the output directory, creating parent
    /// directories. Absolute paths must already lie inside it.
    pub fn output_path(&self, requested: &Path) -> Result<PathBuf> {
        let path = if requested.is_absolute() {
            let root = absolute(&self.output_dir)?;
            if !requested.starts_with(&root) {
                bail!(
                    "output {} is outside the output directory {}",
                    requested.display(),
                    root.display()
                );
            }
            requested.to_path_buf()
        } else {
            if requested.components().any(|c| matches!(c, std::path::Component::ParentDir)) {
                bail!("output {} escapes the output directory", requested.display());
            }
            self.output_dir.join(requested)
        };
        if let Some(parent) = path.parent() {
            std::fs::create_dir_all(parent).with_context(|| format!("creating {}", parent.display()))?;
        }
        Ok(path)
    }
}

/// Restitution that puts the 1 kg shot's steady apex at 40 mm.
pub const DEFAULT_RESTITUTION: f64 = 0.727_322_1;

fn absolute(p: &Path) -> Result<PathBuf> {
    if p.is_absolute() {
        Ok(p.to_path_buf())
    } else {
        Ok(std::env::current_dir()?.join(p))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn defaults_resolve() {
        let cfg = ToolConfig::resolve(FileConfig::default(), None).unwrap();
        assert_eq!(cfg.rig, fixtures::default_rig());
        assert_eq!(cfg.juggler.p_com, 0.0125);
        assert_eq!(cfg.output_dir, PathBuf::from("."));
    }

    #[test]
    fn unknown_keys_are_rejected() {
        let err = toml::from_str::<FileConfig>("d = 35.0\n").unwrap_err();
        assert!(err.to_string().contains("unknown field"));
    }

    #[test]
    fn env_dir_wins() {
        let file: FileConfig = toml::from_str("output_dir = \"from-file\"\nd_mm = 40.0\n").unwrap();
        let cfg = ToolConfig::resolve(file, Some(PathBuf::from("from-env"))).unwrap();
        assert_eq!(cfg.output_dir, PathBuf::from("from-env"));
        assert_eq!(cfg.rig.d_mm, 40.0);
    }

    #[test]
    fn invalid_values_fail_on_load() {
        let file: FileConfig = toml::from_str("l_min_mm = 90.0\n").unwrap();
        assert!(ToolConfig::resolve(file, None).is_err());
    }

    #[test]
    fn hash_tracks_content() {
        let a = ToolConfig::resolve(FileConfig::default(), None).unwrap();
        let b = ToolConfig::resolve(toml::from_str("d_mm = 40.0\n").unwrap(), None).unwrap();
        assert_eq!(a.hash(), a.hash());
        assert_ne!(a.hash(), b.hash());
        assert_eq!(a.hash().len(), 64);
    }

    #[test]
    fn outputs_stay_under_the_directory() {
        let dir = tempfile::tempdir().unwrap();
        let cfg = ToolConfig::resolve(FileConfig::default(), Some(dir.path().to_path_buf())).unwrap();
        let p = cfg.output_path(Path::new("sub/x.csv")).unwrap();
        assert!(p.starts_with(dir.path()));
        assert!(cfg.output_path(Path::new("../x.csv")).is_err());
        assert!(cfg.output_path(Path::new("/elsewhere/x.csv")).is_err());
    }
}
