use btrengine::btr::BtrConfig;
use btrengine::curve::SolverConfig;
use btrengine::model::ModelSpec;
use btrengine::sampler::ChainConfig;
use serde::{Deserialize, Serialize};
use std::path::Path;

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum WickMode {
    /// Dressed for multi-trace models, perturbative for plain ones.
    #[default]
    Auto,
    Dressed,
    Perturbative,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct WickSection {
    /// Total coupling order K.
    pub order: u32,
    /// Largest total number of matrix insertions.
    pub budget: u32,
    pub mode: WickMode,
    /// Trace insertions `[ℓ₁, …]` whose connected correlators are expanded.
    pub insertions: Vec<Vec<u32>>,
}

impl Default for WickSection {
    fn default() -> Self {
        WickSection { order: 2, budget: 18, mode: WickMode::Auto, insertions: vec![vec![2], vec![4], vec![1, 1], vec![2, 2]] }
    }
}

/// Every tolerance used to turn a residual into pass/fail.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct Checks {
    pub action_trials: usize,
    pub action_tol: f64,
    pub quadratic_tol: f64,
    pub functional_tol: f64,
    pub sde_tol: f64,
    pub t_tol: f64,
    pub ks_tol: f64,
    /// Probe tuples per residual check.
    pub probes: usize,
    /// Q-table rows for perimeters up to this value.
    pub max_perimeter: u32,
    pub density_points: usize,
    pub histogram_bins: usize,
}

impl Default for Checks {
    fn default() -> Self {
        Checks {
            action_trials: 100,
            action_tol: 1e-9,
            quadratic_tol: 1e-9,
            functional_tol: 1e-10,
            sde_tol: 1e-8,
            t_tol: 1e-8,
            ks_tol: 0.05,
            probes: 10,
            max_perimeter: 6,
            density_points: 201,
            histogram_bins: 40,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    pub model: ModelSpec,
    #[serde(default)]
    pub solver: SolverConfig,
    #[serde(default)]
    pub btr: BtrConfig,
    #[serde(default)]
    pub wick: WickSection,
    #[serde(default)]
    pub sample: ChainConfig,
    #[serde(default)]
    pub checks: Checks,
    /// Output directory; `--out` takes precedence.
    #[serde(default)]
    pub output: Option<String>,
}

impl RunConfig {
    pub fn parse(text: &str, origin: &str) -> Result<Self, String> {
        let cfg: RunConfig = serde_json::from_str(text).map_err(|e| format!("{origin}: {e}"))?;
        cfg.model.validate().map_err(|e| format!("{origin}: model: {e}"))?;
        if cfg.sample.sweeps <= cfg.sample.burn_in {
            return Err(format!("{origin}: sample: sweeps must exceed burn_in"));
        }
        Ok(cfg)
    }

    pub fn load(path: &Path) -> Result<Self, String> {
        let text = std::fs::read_to_string(path).map_err(|e| format!("{}: {e}", path.display()))?;
        Self::parse(&text, &path.display().to_string())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn minimal_config_gets_defaults() {
        let c = RunConfig::parse(r#"{"model": {"t": 1.0, "d": 2, "plain_1mm": true}}"#, "x").unwrap();
        assert_eq!(c.checks, Checks::default());
        assert_eq!(c.btr, BtrConfig::default());
    }

    #[test]
    fn unknown_key_names_field_and_line() {
        let e = RunConfig::parse("{\n \"model\": {\"t\": 1.0, \"d\": 2},\n \"btr\": {\"gmx\": 1}\n}", "cfg.json").unwrap_err();
        assert!(e.contains("gmx") && e.contains("line 3"), "{e}");
    }
}
