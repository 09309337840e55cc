use crate::attack::{FeasibleRegion, SaConfig};
use crate::decision::Decision;
use crate::model::ModelSpec;
use crate::monitor::MonitorConfig;

use super::{
    AttackConfig, DecisionConfig, GoalConfig, ScenarioConfig, ScenarioName, SeedSearch,
    SeriesSource,
};

impl ScenarioConfig {
    /// Web-traffic ad placement: local linear growth, 501 daily counts, decide
    /// at t = 500 whether an ad at t = 550 (cost 100, 0.95 per viewer) pays off.
    /// The attacker may only add connections over t = 480..=500 and wants the ad
    /// placed.
    pub fn ad_company() -> Self {
        let model = ModelSpec::new(
            2,
            None,
            vec![3e-3, 1e-8],
            vec![40f64.ln(), 0.0012],
            vec![0.05, 1e-7],
        )
        .expect("valid preset model");
        Self {
            name: ScenarioName::AdCompany,
            master_seed: 0,
            n_particles: 2000,
            n_forecast_paths: 2000,
            model,
            series: SeriesSource::Simulate {
                length: 501,
                seed: None,
                truth: None,
                search: Some(SeedSearch {
                    attempts: 100,
                    quiet_window: true,
                    goal_unmet: true,
                    target_mean_band: Some([0.8, 0.95]),
                }),
            },
            alpha: 500,
            decision: DecisionConfig::Ad {
                cost: 100.0,
                reward: 0.95,
                beta: 550,
            },
            attack: AttackConfig {
                h: 20,
                region: FeasibleRegion::additive(),
                goal: GoalConfig::Decision {
                    target: Decision::Place,
                },
                sa: SaConfig::default(),
                norm_sa: None,
            },
            monitor: MonitorConfig::default(),
        }
    }

    /// Supermarket stocking: local linear growth plus weekly seasonality over
    /// 71 days, stock chosen at t = 70 for the demand summed over days 75–77
    /// (price 10, cost 5, resale 1). The attacker may rewrite days 50–70 freely
    /// and wants the stock cut to at most 80% of the clean optimum.
    pub fn inventory() -> Self {
        let weekday = 0.3;
        let weekend = -0.225;
        let model = ModelSpec::new(
            2,
            Some(7),
            vec![5e-4, 1e-7, 1e-4],
            vec![
                400f64.ln(),
                0.0,
                weekday,
                weekday,
                weekend,
                weekend,
                weekend,
                weekend,
            ],
            vec![0.02, 1e-6, 0.01, 0.01, 0.01, 0.01, 0.01, 0.01],
        )
        .expect("valid preset model");
        Self {
            name: ScenarioName::Inventory,
            master_seed: 0,
            n_particles: 2000,
            n_forecast_paths: 2000,
            model,
            series: SeriesSource::Simulate {
                length: 71,
                seed: Some(4),
                truth: None,
                search: None,
            },
            alpha: 70,
            decision: DecisionConfig::Inventory {
                price: 10.0,
                unit_cost: 5.0,
                resale: 1.0,
                weekend_steps: vec![5, 6, 7],
                d_max: None,
            },
            attack: AttackConfig {
                h: 20,
                region: FeasibleRegion::free(),
                goal: GoalConfig::FractionOfClean { fraction: 0.8 },
                sa: SaConfig::default(),
                norm_sa: Some(SaConfig {
                    iters_per_temperature: 100,
                    proposal_step_mean: 4.0,
                    ..SaConfig::default()
                }),
            },
            monitor: MonitorConfig::default(),
        }
    }

    pub fn preset(name: &str) -> Option<Self> {
        match name {
            "ad_company" | "ad-company" | "ad" => Some(Self::ad_company()),
            "inventory" => Some(Self::inventory()),
            _ => None,
        }
    }
}
