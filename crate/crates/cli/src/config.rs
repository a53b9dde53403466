use std::path::Path;

use serde::Deserialize;
use tamed_geometry::immersion::{builtin, BuiltinParams, ChartSpec, ImmersionChart};

/// Which chart to analyse: a catalog entry or an inline chart.
#[derive(Debug, Clone, Deserialize)]
#[serde(untagged)]
pub enum ImmersionConfig {
    Builtin {
        builtin: String,
        #[serde(default)]
        params: BuiltinParams,
    },
    Inline {
        chart: ChartSpec,
    },
}

#[derive(Debug, Clone, Default, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct AnalysisConfig {
    pub radii: Option<Vec<f64>>,
    pub c: Option<f64>,
    #[serde(rename = "R")]
    pub big_r: Option<f64>,
    pub l: Option<usize>,
    pub mu: Option<f64>,
    /// Flow step.
    pub step: Option<f64>,
    pub t_max: Option<f64>,
    /// Number of level-set seeds to integrate.
    pub seeds: Option<usize>,
    /// `rho_N` radii for the end count.
    pub end_radii: Option<Vec<f64>>,
    /// Relative bisection width of the radial solver.
    pub tol: Option<f64>,
}

#[derive(Debug, Clone, Default, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct OutputConfig {
    pub dir: Option<String>,
    pub format: Option<String>,
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    pub immersion: ImmersionConfig,
    #[serde(default)]
    pub resolution: Option<Vec<usize>>,
    #[serde(default)]
    pub analysis: AnalysisConfig,
    #[serde(default)]
    pub output: OutputConfig,
}

pub const DEFAULT_RESOLUTION: [usize; 2] = [128, 64];

impl RunConfig {
    pub fn load(path: &Path) -> Result<Self, String> {
        let text = std::fs::read_to_string(path).map_err(|e| format!("cannot read {}: {e}", path.display()))?;
        let cfg: RunConfig =
            serde_json::from_str(&text).map_err(|e| format!("invalid config {}: {e}", path.display()))?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn validate(&self) -> Result<(), String> {
        if let Some(c) = self.analysis.c {
            if !(c > 0.0 && c < 1.0) {
                return Err(format!("analysis.c must lie in (0, 1), got {c}"));
            }
        }
        if let Some(res) = &self.resolution {
            if res.is_empty() || res.iter().any(|n| *n < 2) {
                return Err(format!("resolution entries must be >= 2, got {res:?}"));
            }
        }
        if let Some(f) = &self.output.format {
            if f != "json" && f != "csv" {
                return Err(format!("output.format must be json or csv, got {f}"));
            }
        }
        Ok(())
    }

    pub fn chart(&self) -> Result<ImmersionChart, tamed_geometry::Error> {
        match &self.immersion {
            ImmersionConfig::Builtin { builtin: name, params } => builtin(name, params),
            ImmersionConfig::Inline { chart } => ImmersionChart::from_spec(chart),
        }
    }
}

/// Parses `NxM` (or a single `N`).
pub fn parse_resolution(s: &str) -> Result<Vec<usize>, String> {
    let parts: Result<Vec<usize>, _> = s.split(['x', 'X']).map(|p| p.trim().parse::<usize>()).collect();
    match parts {
        Ok(v) if !v.is_empty() && v.iter().all(|n| *n >= 2) => Ok(v),
        _ => Err(format!("resolution must look like 128x64, got `{s}`")),
    }
}

pub fn parse_list(s: &str) -> Result<Vec<f64>, String> {
    s.split(',')
        .map(|p| p.trim().parse::<f64>().map_err(|_| format!("`{p}` is not a number")))
        .collect()
}
