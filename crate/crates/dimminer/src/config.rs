use std::path::{Path, PathBuf};

use clap::Args;
use dimminer_core::cluster::DEFAULT_RUNS;
use dimminer_core::corpus::{Representation, DEFAULT_DF_PRUNE_FRACTION};
use dimminer_core::dimension::{ProfileParams, DEFAULT_F, DEFAULT_UNAMBIGUOUS_FRACTION};
use dimminer_core::margin::DEFAULT_C;
use dimminer_core::spectral::{LaplacianKind, DEFAULT_M};
use serde::{Deserialize, Serialize};

use crate::error::{AppError, AppResult};

pub const DATA_DIR_ENV: &str = "DIMMINER_DATA_DIR";
pub const DEFAULT_DATA_DIR: &str = ".dimminer";

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct PipelineConfig {
    pub mode: Representation,
    pub df_prune_fraction: f64,
    pub m: usize,
    pub unambiguous_fraction: f64,
    pub f_count: usize,
    pub c_param: f64,
    pub kmeans_runs: usize,
    pub base_seed: u64,
    pub laplacian_kind: LaplacianKind,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub irm_k: Option<usize>,
}

impl Default for PipelineConfig {
    fn default() -> Self {
        PipelineConfig {
            mode: Representation::Bow,
            df_prune_fraction: DEFAULT_DF_PRUNE_FRACTION,
            m: DEFAULT_M,
            unambiguous_fraction: DEFAULT_UNAMBIGUOUS_FRACTION,
            f_count: DEFAULT_F,
            c_param: DEFAULT_C,
            kmeans_runs: DEFAULT_RUNS,
            base_seed: 0,
            laplacian_kind: LaplacianKind::Normalized,
            irm_k: None,
        }
    }
}

impl PipelineConfig {
    /// Reads a TOML or JSON file, chosen by extension.
    pub fn from_file(path: &Path) -> AppResult<Self> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| AppError::io(format!("reading {}", path.display()), e))?;
        let ctx = || format!("config {}", path.display());
        let config: PipelineConfig = match path.extension().and_then(|e| e.to_str()) {
            Some("json") => serde_json::from_str(&text).map_err(|e| AppError::parse(ctx(), e))?,
            _ => toml::from_str(&text).map_err(|e| AppError::parse(ctx(), e))?,
        };
        config.validate()?;
        Ok(config)
    }

    pub fn validate(&self) -> AppResult<()> {
        let bad = |msg: String| Err(AppError::Invalid(msg));
        if !(0.0..1.0).contains(&self.df_prune_fraction) {
            return bad(format!("df_prune_fraction must lie in [0, 1), got {}", self.df_prune_fraction));
        }
        if self.m < 2 {
            return bad(format!("m must be at least 2, got {}", self.m));
        }
        if !(self.unambiguous_fraction > 0.0 && self.unambiguous_fraction <= 1.0) {
            return bad(format!(
                "unambiguous_fraction must lie in (0, 1], got {}",
                self.unambiguous_fraction
            ));
        }
        if self.f_count == 0 {
            return bad("f_count must be positive".to_string());
        }
        if !(self.c_param > 0.0 && self.c_param.is_finite()) {
            return bad(format!("c_param must be positive, got {}", self.c_param));
        }
        if self.kmeans_runs == 0 {
            return bad("kmeans_runs must be positive".to_string());
        }
        if self.laplacian_kind == LaplacianKind::Irm && self.irm_k.map_or(true, |k| k == 0) {
            return bad("the irm Laplacian needs a positive irm_k".to_string());
        }
        Ok(())
    }

    pub fn profile_params(&self) -> ProfileParams {
        ProfileParams {
            f_count: self.f_count,
            c_param: self.c_param,
            unambiguous_fraction: self.unambiguous_fraction,
        }
    }
}

/// Command-line overrides; flag names mirror the config fields.
#[derive(Debug, Clone, Default, Args)]
pub struct ConfigArgs {
    /// TOML or JSON file with pipeline settings.
    #[arg(long, global = true)]
    pub config: Option<PathBuf>,
    #[arg(long, global = true)]
    pub mode: Option<Representation>,
    #[arg(long, global = true)]
    pub df_prune_fraction: Option<f64>,
    #[arg(long, global = true)]
    pub m: Option<usize>,
    #[arg(long, global = true)]
    pub unambiguous_fraction: Option<f64>,
    #[arg(long, visible_alias = "f", global = true)]
    pub f_count: Option<usize>,
    #[arg(long, global = true)]
    pub c_param: Option<f64>,
    #[arg(long, global = true)]
    pub kmeans_runs: Option<usize>,
    #[arg(long, global = true)]
    pub base_seed: Option<u64>,
    #[arg(long, global = true)]
    pub laplacian_kind: Option<LaplacianKind>,
    #[arg(long, global = true)]
    pub irm_k: Option<usize>,
}

impl ConfigArgs {
    /// Flags win over `base`.
    pub fn apply(&self, mut base: PipelineConfig) -> AppResult<PipelineConfig> {
        if let Some(v) = self.mode {
            base.mode = v;
        }
        if let Some(v) = self.df_prune_fraction {
            base.df_prune_fraction = v;
        }
        if let Some(v) = self.m {
            base.m = v;
        }
        if let Some(v) = self.unambiguous_fraction {
            base.unambiguous_fraction = v;
        }
        if let Some(v) = self.f_count {
            base.f_count = v;
        }
        if let Some(v) = self.c_param {
            base.c_param = v;
        }
        if let Some(v) = self.kmeans_runs {
            base.kmeans_runs = v;
        }
        if let Some(v) = self.base_seed {
            base.base_seed = v;
        }
        if let Some(v) = self.laplacian_kind {
            base.laplacian_kind = v;
        }
        if let Some(v) = self.irm_k {
            base.irm_k = Some(v);
        }
        base.validate()?;
        Ok(base)
    }

    /// The config file (if any) with flags applied on top.
    pub fn resolve(&self, fallback: PipelineConfig) -> AppResult<PipelineConfig> {
        let base = match &self.config {
            Some(path) => PipelineConfig::from_file(path)?,
            None => fallback,
        };
        self.apply(base)
    }
}

/// `explicit`, else `$DIMMINER_DATA_DIR`, else `./.dimminer`.
pub fn data_dir(explicit: Option<&Path>) -> PathBuf {
    if let Some(p) = explicit {
        return p.to_path_buf();
    }
    match std::env::var_os(DATA_DIR_ENV) {
        Some(v) if !v.is_empty() => PathBuf::from(v),
        _ => PathBuf::from(DEFAULT_DATA_DIR),
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn defaults() {
        let c = PipelineConfig::default();
        assert_eq!(c.df_prune_fraction, 0.015);
        assert_eq!(c.m, 5);
        assert_eq!(c.unambiguous_fraction, 0.25);
        assert_eq!(c.f_count, 100);
        assert_eq!(c.c_param, 1.0);
        assert_eq!(c.kmeans_runs, 10);
        assert_eq!(c.base_seed, 0);
        assert_eq!(c.laplacian_kind, LaplacianKind::Normalized);
        assert!(c.validate().is_ok());
    }

    #[test]
    fn partial_toml_keeps_defaults() {
        let c: PipelineConfig = toml::from_str("m = 7\nmode = \"boaw\"\n").unwrap();
        assert_eq!(c.m, 7);
        assert_eq!(c.mode, Representation::Boaw);
        assert_eq!(c.f_count, 100);
        assert!(toml::from_str::<PipelineConfig>("bogus = 1").is_err());
    }

    #[test]
    fn irm_needs_k() {
        let c = PipelineConfig {
            laplacian_kind: LaplacianKind::Irm,
            ..Default::default()
        };
        assert!(c.validate().is_err());
        let args = ConfigArgs {
            irm_k: Some(10),
            ..Default::default()
        };
        assert_eq!(args.apply(c).unwrap().irm_k, Some(10));
    }
}
