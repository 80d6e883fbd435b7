//! Instance files in TOML or JSON.

use std::path::Path;

use serde::Deserialize;

use crate::error::{Error, Result};
use crate::hhl::HhlConfig;
use crate::mdp::{build_inventory_mdp, DemandDistribution, InventoryParams, MdpInstance};
use crate::policy_iteration::VqlsEvaluator;
use crate::qsim::NoiseModel;
use crate::vqls::{GradientMethod, VqlsConfig};

/// Seed used when neither the file nor the environment provides one.
pub const DEFAULT_SEED: u64 = 20_240_601;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ConfigFormat {
    Toml,
    Json,
}

impl ConfigFormat {
    /// `.json` files are JSON; everything else is read as TOML.
    pub fn from_path(path: &Path) -> Self {
        match path.extension().and_then(|e| e.to_str()) {
            Some(ext) if ext.eq_ignore_ascii_case("json") => ConfigFormat::Json,
            _ => ConfigFormat::Toml,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct InstanceConfig {
    pub holding_cost: f64,
    pub lost_sales_cost: f64,
    #[serde(default)]
    pub unit_order_cost: f64,
    pub gamma: f64,
    pub max_inventory: usize,
    pub max_order: usize,
    pub demand_pmf: Vec<f64>,
    #[serde(default)]
    pub seed: Option<u64>,
    #[serde(default)]
    pub hhl: Option<HhlConfig>,
    #[serde(default)]
    pub vqls: Option<VqlsSection>,
}

/// Variational solver options as written in an instance file.
#[derive(Debug, Clone, PartialEq, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct VqlsSection {
    pub layers: usize,
    pub terms: Option<usize>,
    pub learning_rate: f64,
    pub max_iters: usize,
    pub target_cost: f64,
    /// `parameter_shift` or `finite_difference`.
    pub gradient: String,
    pub fd_step: f64,
    /// Depolarizing probability per gate; noiseless when zero.
    pub noise: f64,
    pub trajectories: usize,
}

impl Default for VqlsSection {
    fn default() -> Self {
        let cfg = VqlsConfig::default();
        Self {
            layers: 2,
            terms: None,
            learning_rate: cfg.learning_rate,
            max_iters: cfg.max_iters,
            target_cost: cfg.target_cost,
            gradient: "parameter_shift".into(),
            fd_step: 1e-4,
            noise: 0.0,
            trajectories: cfg.trajectories,
        }
    }
}

impl VqlsSection {
    pub fn to_config(&self, seed: u64) -> Result<VqlsConfig> {
        let gradient = match self.gradient.as_str() {
            "parameter_shift" => GradientMethod::ParameterShift,
            "finite_difference" => GradientMethod::FiniteDifference(self.fd_step),
            other => {
                return Err(Error::Config(format!(
                    "vqls.gradient: expected `parameter_shift` or `finite_difference`, got `{other}`"
                )))
            }
        };
        let noise = if self.noise > 0.0 {
            Some(NoiseModel::depolarizing(self.noise, seed)?)
        } else {
            None
        };
        let cfg = VqlsConfig {
            learning_rate: self.learning_rate,
            max_iters: self.max_iters,
            gradient,
            target_cost: self.target_cost,
            seed,
            noise,
            trajectories: self.trajectories,
            ..VqlsConfig::default()
        };
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn to_evaluator(&self, seed: u64) -> Result<VqlsEvaluator> {
        Ok(VqlsEvaluator {
            n_layers: self.layers,
            terms: self.terms,
            config: self.to_config(seed)?,
        })
    }
}

impl InstanceConfig {
    pub fn parse(text: &str, format: ConfigFormat) -> Result<Self> {
        match format {
            ConfigFormat::Toml => toml::from_str(text).map_err(|e| Error::Config(e.to_string().trim_end().to_string())),
            ConfigFormat::Json => serde_json::from_str(text).map_err(|e| Error::Config(e.to_string())),
        }
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| Error::Config(format!("cannot read {}: {e}", path.display())))?;
        Self::parse(&text, ConfigFormat::from_path(path))
            .map_err(|e| Error::Config(format!("{}: {}", path.display(), strip_prefix(e))))
    }

    pub fn params(&self) -> InventoryParams {
        InventoryParams {
            holding_cost: self.holding_cost,
            lost_sales_cost: self.lost_sales_cost,
            unit_order_cost: self.unit_order_cost,
            gamma: self.gamma,
            max_inventory: self.max_inventory,
            max_order: self.max_order,
        }
    }

    pub fn build(&self) -> Result<MdpInstance> {
        let demand = DemandDistribution::new(self.demand_pmf.clone())?;
        build_inventory_mdp(self.params(), demand)
    }

    /// Seed from `QPI_SEED` if set, then the file, then [`DEFAULT_SEED`].
    pub fn resolved_seed(&self) -> Result<u64> {
        resolve_seed(self.seed)
    }
}

fn strip_prefix(e: Error) -> String {
    match e {
        Error::Config(msg) => msg,
        other => other.to_string(),
    }
}

/// `QPI_SEED` overrides `file_seed`.
pub fn resolve_seed(file_seed: Option<u64>) -> Result<u64> {
    match std::env::var("QPI_SEED") {
        Ok(text) => text
            .trim()
            .parse()
            .map_err(|_| Error::Config(format!("QPI_SEED: expected an unsigned integer, got `{text}`"))),
        Err(_) => Ok(file_seed.unwrap_or(DEFAULT_SEED)),
    }
}
