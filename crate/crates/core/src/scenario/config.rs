use std::collections::BTreeSet;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::attack::{AttackGoal, FeasibleRegion, SaConfig};
use crate::decision::{AdPlacementProblem, Decision, DecisionProblem, InventoryProblem};
use crate::error::{Error, Result};
use crate::model::{ForecastSamples, ModelSpec};
use crate::monitor::MonitorConfig;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ScenarioName {
    AdCompany,
    Inventory,
    Custom,
}

/// Conditions a simulated series must meet; failing seeds are replaced by
/// derived ones until `attempts` is exhausted.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct SeedSearch {
    pub attempts: u32,
    /// No clean alarm inside the attack window.
    pub quiet_window: bool,
    /// The clean decision must lie outside the attack goal.
    pub goal_unmet: bool,
    /// Band for the clean predictive mean at the ad target step, as fractions
    /// of the break-even mean `C/R`.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub target_mean_band: Option<[f64; 2]>,
}

impl Default for SeedSearch {
    fn default() -> Self {
        Self {
            attempts: 50,
            quiet_window: true,
            goal_unmet: true,
            target_mean_band: None,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "source", rename_all = "snake_case")]
pub enum SeriesSource {
    Simulate {
        /// Number of observations, indexed from 0.
        length: usize,
        /// Explicit simulation seed; derived from the master seed when absent.
        #[serde(default, skip_serializing_if = "Option::is_none")]
        seed: Option<u64>,
        /// Data-generating model when it differs from the defender's.
        #[serde(default, skip_serializing_if = "Option::is_none")]
        truth: Option<ModelSpec<f64>>,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        search: Option<SeedSearch>,
    },
    Csv {
        path: PathBuf,
    },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum DecisionConfig {
    /// Place an ad for `cost`; each viewer at time `beta` is worth `reward`.
    Ad { cost: f64, reward: f64, beta: i64 },
    /// Stock for the summed demand at forecast steps `weekend_steps` after alpha.
    Inventory {
        price: f64,
        unit_cost: f64,
        resale: f64,
        weekend_steps: Vec<usize>,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        d_max: Option<u64>,
    },
}

impl DecisionConfig {
    /// Break-even predictive mean `C/R` for ad placement.
    pub fn threshold(&self) -> Option<f64> {
        match self {
            DecisionConfig::Ad { cost, reward, .. } => Some(cost / reward),
            DecisionConfig::Inventory { .. } => None,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum GoalConfig {
    Decision {
        target: Decision,
    },
    Set {
        targets: BTreeSet<Decision>,
    },
    /// Any inventory at most `fraction` of the clean optimum (rounded down).
    FractionOfClean {
        fraction: f64,
    },
}

impl GoalConfig {
    pub fn resolve(&self, clean: Decision) -> Result<AttackGoal> {
        match self {
            GoalConfig::Decision { target } => Ok(AttackGoal::equals(*target)),
            GoalConfig::Set { targets } => Ok(AttackGoal::DecisionInSet {
                targets: targets.clone(),
            }),
            GoalConfig::FractionOfClean { fraction } => match clean {
                Decision::Stock(d) => Ok(AttackGoal::stock_at_most(
                    (fraction * d as f64).floor() as u64
                )),
                other => Err(Error::config(format!(
                    "fraction_of_clean goal needs an inventory decision, got {other}"
                ))),
            },
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AttackConfig {
    /// Window length; the window covers `alpha − h ..= alpha`.
    pub h: usize,
    pub region: FeasibleRegion,
    pub goal: GoalConfig,
    /// Annealing schedule. The seed field is replaced by one derived from the
    /// master seed.
    #[serde(default)]
    pub sa: SaConfig<f64>,
    /// Schedule for the norm attack when it should differ from `sa`.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub norm_sa: Option<SaConfig<f64>>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScenarioConfig {
    pub name: ScenarioName,
    #[serde(default)]
    pub master_seed: u64,
    pub n_particles: usize,
    pub n_forecast_paths: usize,
    pub model: ModelSpec<f64>,
    pub series: SeriesSource,
    pub alpha: i64,
    pub decision: DecisionConfig,
    pub attack: AttackConfig,
    #[serde(default)]
    pub monitor: MonitorConfig<f64>,
}

impl ScenarioConfig {
    /// Reads a config from JSON (`.json`) or TOML (anything else).
    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        let is_json = path
            .extension()
            .is_some_and(|e| e.eq_ignore_ascii_case("json"));
        let mut cfg: Self = if is_json {
            serde_json::from_str(&text)?
        } else {
            toml::from_str(&text)?
        };
        if let SeriesSource::Csv { path: csv } = &mut cfg.series {
            if csv.is_relative() {
                if let Some(dir) = path.parent() {
                    *csv = dir.join(&*csv);
                }
            }
        }
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn to_toml(&self) -> Result<String> {
        toml::to_string_pretty(self)
            .map_err(|e| Error::config(format!("cannot encode config: {e}")))
    }

    pub fn validate(&self) -> Result<()> {
        self.model.validate()?;
        self.monitor.validate()?;
        self.attack.sa.validate()?;
        if let Some(sa) = &self.attack.norm_sa {
            sa.validate()?;
        }
        if self.n_particles == 0 || self.n_forecast_paths == 0 {
            return Err(Error::config(
                "n_particles and n_forecast_paths must be >= 1",
            ));
        }
        if self.attack.h as i64 > self.alpha {
            return Err(Error::config("attack window starts before t = 0"));
        }
        if let DecisionConfig::Ad { beta, .. } = self.decision {
            if beta <= self.alpha {
                return Err(Error::config("beta must be after alpha"));
            }
        }
        if let GoalConfig::FractionOfClean { fraction } = self.attack.goal {
            if !(0.0..1.0).contains(&fraction) {
                return Err(Error::config("goal fraction must be in [0, 1)"));
            }
        }
        self.problem().validate()
    }

    pub fn problem(&self) -> DecisionProblem<f64> {
        match &self.decision {
            DecisionConfig::Ad { cost, reward, beta } => DecisionProblem::Ad(AdPlacementProblem {
                cost: *cost,
                reward: *reward,
                target_step: (beta - self.alpha).max(0) as usize,
            }),
            DecisionConfig::Inventory {
                price,
                unit_cost,
                resale,
                weekend_steps,
                d_max,
            } => DecisionProblem::Inventory(InventoryProblem {
                price: *price,
                unit_cost: *unit_cost,
                resale: *resale,
                weekend_steps: weekend_steps.clone(),
                d_max: *d_max,
            }),
        }
    }

    /// Predictive mean at the ad target step.
    pub fn target_mean(&self, fs: &ForecastSamples) -> Option<f64> {
        match self.problem() {
            DecisionProblem::Ad(p) => fs.predictive_mean(p.target_step).ok(),
            DecisionProblem::Inventory(_) => None,
        }
    }

    pub fn with_master_seed(mut self, seed: u64) -> Self {
        self.master_seed = seed;
        self
    }
}
