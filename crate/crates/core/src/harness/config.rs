use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::dp::StrategyKind;
use crate::error::{GmwbError, Result};
use crate::fair_fee::CalibrationSettings;
use crate::grid::GridConfig;
use crate::mc::MCSettings;
use crate::model::{build_contract, ContractSpec, MarketParams};

/// One row of the fee tables.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Scenario {
    pub r: f64,
    pub sigma: f64,
    pub beta: f64,
    /// Years.
    pub maturity: f64,
}

impl Scenario {
    pub fn new(r: f64, sigma: f64, beta: f64, maturity: f64) -> Self {
        Self {
            r,
            sigma,
            beta,
            maturity,
        }
    }

    pub fn market(&self) -> Result<MarketParams> {
        MarketParams::new(self.r, self.sigma)
    }

    pub fn contract(&self, config: &ExperimentConfig) -> Result<ContractSpec> {
        build_contract(
            self.maturity,
            config.events_per_year,
            self.beta,
            config.initial_wealth,
            config.initial_wealth,
        )
    }

    /// Short tag like `r1_sigma30_beta10_T5`.
    pub fn tag(&self) -> String {
        format!(
            "r{}_sigma{}_beta{}_T{}",
            pct(self.r),
            pct(self.sigma),
            pct(self.beta),
            self.maturity
        )
    }
}

fn pct(x: f64) -> String {
    let p = x * 100.0;
    if (p - p.round()).abs() < 1e-9 {
        format!("{}", p.round() as i64)
    } else {
        format!("{p}")
    }
}

/// The 24 table rows: `r` outermost, then `sigma`, `beta` and `T`.
pub fn default_scenarios() -> Vec<Scenario> {
    let mut out = Vec::with_capacity(24);
    for r in [0.01, 0.05] {
        for sigma in [0.10, 0.30] {
            for beta in [0.10, 0.20] {
                for maturity in [5.0, 10.0, 20.0] {
                    out.push(Scenario::new(r, sigma, beta, maturity));
                }
            }
        }
    }
    out
}

/// `0, 0.2%, ..., 2%`.
pub fn default_alpha_m() -> Vec<f64> {
    (0..=10).map(|i| f64::from(i) * 0.002).collect()
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct MCValidation {
    pub enabled: bool,
    #[serde(flatten)]
    pub settings: MCSettings,
}

impl Default for MCValidation {
    fn default() -> Self {
        Self {
            enabled: true,
            settings: MCSettings::default(),
        }
    }
}

/// Everything a batch run needs. Every field has a default, so `{}` is a
/// valid config that reproduces the full table set.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ExperimentConfig {
    pub scenarios: Vec<Scenario>,
    pub alpha_m: Vec<f64>,
    pub strategies: Vec<StrategyKind>,
    pub grid: GridConfig,
    pub calibration: CalibrationSettings,
    pub mc_validation: MCValidation,
    pub output_dir: PathBuf,
    /// Worker threads; 0 uses every available core.
    pub workers: usize,
    pub events_per_year: u32,
    pub initial_wealth: f64,
}

impl Default for ExperimentConfig {
    fn default() -> Self {
        Self {
            scenarios: default_scenarios(),
            alpha_m: default_alpha_m(),
            strategies: vec![StrategyKind::LiabilityMax, StrategyKind::ValueMax],
            grid: GridConfig::default(),
            calibration: CalibrationSettings::default(),
            mc_validation: MCValidation::default(),
            output_dir: PathBuf::from("output"),
            workers: 0,
            events_per_year: 1,
            initial_wealth: 1.0,
        }
    }
}

impl ExperimentConfig {
    pub fn from_json(text: &str) -> Result<Self> {
        let config: Self = serde_json::from_str(text)?;
        config.validate()?;
        Ok(config)
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| GmwbError::Config(format!("cannot read {}: {e}", path.display())))?;
        Self::from_json(&text)
    }

    pub fn validate(&self) -> Result<()> {
        if self.scenarios.is_empty() {
            return Err(GmwbError::Config("scenario list is empty".into()));
        }
        for s in &self.scenarios {
            s.market()?;
            s.contract(self)?;
        }
        if let Some(a) = self.alpha_m.iter().find(|a| !(0.0..=0.05).contains(*a)) {
            return Err(GmwbError::Config(format!("alpha_m {a} outside [0, 0.05]")));
        }
        if self.strategies.is_empty() {
            return Err(GmwbError::Config("strategy list is empty".into()));
        }
        self.grid.validate()?;
        self.calibration.validate()?;
        Ok(())
    }

    /// Creates the output directory and checks that it accepts files.
    pub fn prepare_output_dir(&self) -> Result<&Path> {
        let dir = self.output_dir.as_path();
        std::fs::create_dir_all(dir)
            .map_err(|e| GmwbError::Config(format!("cannot create {}: {e}", dir.display())))?;
        let probe = dir.join(".write_probe");
        std::fs::write(&probe, b"")
            .map_err(|e| GmwbError::Config(format!("{} is not writable: {e}", dir.display())))?;
        std::fs::remove_file(probe)?;
        Ok(dir)
    }

    pub fn thread_pool(&self) -> Result<rayon::ThreadPool> {
        rayon::ThreadPoolBuilder::new()
            .num_threads(self.workers)
            .build()
            .map_err(|e| GmwbError::Config(format!("cannot start worker pool: {e}")))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn empty_json_gives_full_sweep() {
        let c = ExperimentConfig::from_json("{}").unwrap();
        assert_eq!(c.scenarios.len(), 24);
        assert_eq!(c.alpha_m.len(), 11);
        assert!((c.alpha_m[10] - 0.02).abs() < 1e-15);
        assert_eq!(c.scenarios[0], Scenario::new(0.01, 0.10, 0.10, 5.0));
        assert_eq!(c.scenarios[1].maturity, 10.0);
        assert_eq!(c.scenarios[3].beta, 0.20);
        assert_eq!(c.scenarios[6].sigma, 0.30);
        assert_eq!(c.scenarios[12].r, 0.05);
        assert_eq!(c.grid.num_wealth_nodes, 401);
    }

    #[test]
    fn rejects_bad_configs() {
        assert!(ExperimentConfig::from_json(r#"{"scenarios": []}"#).is_err());
        assert!(ExperimentConfig::from_json(r#"{"alpha_m": [0.06]}"#).is_err());
        assert!(ExperimentConfig::from_json(r#"{"grdi": {}}"#).is_err());
        assert!(ExperimentConfig::from_json("not json").is_err());
    }

    #[test]
    fn partial_sections_keep_defaults() {
        let c = ExperimentConfig::from_json(
            r#"{"grid": {"num_wealth_nodes": 161}, "mc_validation": {"num_paths": 1000}}"#,
        )
        .unwrap();
        assert_eq!(c.grid.num_wealth_nodes, 161);
        assert_eq!(c.grid.steps_per_year, 100);
        assert_eq!(c.mc_validation.settings.num_paths, 1000);
        assert!(c.mc_validation.enabled);
    }

    #[test]
    fn tags_are_readable() {
        assert_eq!(Scenario::new(0.01, 0.3, 0.1, 5.0).tag(), "r1_sigma30_beta10_T5");
    }
}
