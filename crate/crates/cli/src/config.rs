//! Experiment configuration: one TOML file with nested sections mirroring
//! the library's parameter types. Unknown keys are hard errors so typos
//! cannot silently fall back to defaults.

use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use serpent_core::baseline::{GridSpec, SerpenoidParams};
use serpent_core::cost::CostSpec;
use serpent_core::dynamics::Integrator;
use serpent_core::env::EnvironmentModel;
use serpent_core::ilqr::IlqrConfig;
use serpent_core::mpc::{Bootstrap, MpcConfig};
use serpent_core::types::{SnakeParams, SnakeState};

use crate::CliError;

fn default_ramp_up() -> f64 {
    2.0
}

fn default_output_dir() -> PathBuf {
    PathBuf::from("out")
}

fn default_heading() -> f64 {
    -std::f64::consts::FRAC_PI_2
}

fn one() -> usize {
    1
}

fn default_eval_integrator() -> Integrator {
    Integrator::Rk4
}

/// Receding-horizon settings without the step count, which the CLI derives
/// from `duration` and the control period.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct MpcSection {
    #[serde(default)]
    pub ilqr: IlqrConfig<f64>,
    #[serde(default = "one")]
    pub apply_steps: usize,
    #[serde(default = "default_eval_integrator")]
    pub eval_integrator: Integrator,
    #[serde(default = "one")]
    pub plan_substeps: usize,
    #[serde(default = "one")]
    pub eval_substeps: usize,
    #[serde(default)]
    pub bootstrap: Bootstrap<f64>,
}

impl Default for MpcSection {
    fn default() -> Self {
        Self {
            ilqr: IlqrConfig::default(),
            apply_steps: 1,
            eval_integrator: Integrator::Rk4,
            plan_substeps: 1,
            eval_substeps: 1,
            bootstrap: Bootstrap::Zero,
        }
    }
}

impl MpcSection {
    pub fn to_config(&self, total_steps: usize) -> MpcConfig<f64> {
        MpcConfig {
            ilqr: self.ilqr.clone(),
            apply_steps: self.apply_steps,
            total_steps,
            eval_integrator: self.eval_integrator,
            plan_substeps: self.plan_substeps,
            eval_substeps: self.eval_substeps,
            bootstrap: self.bootstrap.clone(),
        }
    }
}

/// Full experiment description loaded from `--config`.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    /// Simulated duration \[s\].
    pub duration: f64,
    /// Start-pose transient excluded from speed/power measurement \[s\].
    #[serde(default = "default_ramp_up")]
    pub ramp_up: f64,
    #[serde(default = "default_output_dir")]
    pub output_dir: PathBuf,
    /// World orientation of link 0 at the start; the default points the body
    /// along `+x` with the head facing `-x`.
    #[serde(default = "default_heading")]
    pub initial_heading: f64,
    /// Alternating joint-angle magnitude of the start pose \[rad\]; a small
    /// S-bend breaks the straight pose's symmetry.
    #[serde(default)]
    pub initial_bend: f64,
    pub snake: SnakeParams<f64>,
    pub environment: EnvironmentModel<f64>,
    /// Environment used to execute MPC actions when it should differ from
    /// the planner's model (robustness studies); defaults to `environment`.
    #[serde(default)]
    pub eval_environment: Option<EnvironmentModel<f64>>,
    pub cost: CostSpec<f64>,
    #[serde(default)]
    pub mpc: MpcSection,
    /// Serpenoid gait for `simulate`; without it `simulate` rolls out zero
    /// torque.
    #[serde(default)]
    pub serpenoid: Option<SerpenoidParams<f64>>,
    /// Sweep description for `gridsearch`.
    #[serde(default)]
    pub grid: Option<GridSpec<f64>>,
}

impl ExperimentConfig {
    pub fn load(path: &Path) -> Result<Self, CliError> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| CliError::Config(format!("cannot read {}: {e}", path.display())))?;
        let config: ExperimentConfig = toml::from_str(&text)
            .map_err(|e| CliError::Config(format!("{}: {e}", path.display())))?;
        config.validate()?;
        Ok(config)
    }

    pub fn validate(&self) -> Result<(), CliError> {
        let config_err = |e: serpent_core::SimError| CliError::Config(e.to_string());
        self.snake.validate().map_err(config_err)?;
        self.environment.validate().map_err(config_err)?;
        if let Some(env) = &self.eval_environment {
            env.validate().map_err(config_err)?;
        }
        self.cost.validate().map_err(config_err)?;
        self.mpc.ilqr.validate().map_err(config_err)?;
        if let Some(serpenoid) = &self.serpenoid {
            serpenoid.validate().map_err(config_err)?;
        }
        if let Some(grid) = &self.grid {
            grid.validate().map_err(config_err)?;
        }
        if !self.duration.is_finite() || self.duration <= 0.0 {
            return Err(CliError::Config("duration must be positive".into()));
        }
        if self.ramp_up < 0.0 || self.ramp_up >= self.duration {
            return Err(CliError::Config(
                "ramp_up must lie in [0, duration)".into(),
            ));
        }
        Ok(())
    }

    /// Number of control steps covered by `duration`.
    pub fn total_steps(&self) -> usize {
        (self.duration / self.snake.dt).round() as usize
    }

    /// Start state: straight chain at `initial_heading` with an alternating
    /// S-bend of `initial_bend` radians on the joints.
    pub fn initial_state(&self) -> SnakeState<f64> {
        SnakeState::s_pose(self.snake.n_links, self.initial_heading, self.initial_bend)
    }

    /// Unit vector from the start head position toward the goal, used as the
    /// speed measurement direction.
    pub fn goal_direction(&self) -> nalgebra::Vector2<f64> {
        let start = self.initial_state().head_pos;
        let d = self.cost.goal - start;
        let n = d.norm();
        if n > 0.0 {
            d / n
        } else {
            nalgebra::Vector2::new(-1.0, 0.0)
        }
    }

    /// Environment the MPC actions are executed on.
    pub fn eval_environment(&self) -> EnvironmentModel<f64> {
        self.eval_environment
            .clone()
            .unwrap_or_else(|| self.environment.clone())
    }

    /// Resolved-config TOML used as the provenance header of every output
    /// file.
    pub fn provenance(&self) -> String {
        toml::to_string_pretty(self).unwrap_or_else(|e| format!("serialization error: {e}"))
    }

    /// Apply the `--env` preset override.
    pub fn override_environment(&mut self, kind: &str) -> Result<(), CliError> {
        self.environment = match kind {
            "box" => EnvironmentModel::preset_box_dry(),
            "dry" => EnvironmentModel::preset_smooth_dry(),
            "viscous" => EnvironmentModel::preset_viscous(),
            "fluid" => EnvironmentModel::preset_fluid(),
            other => {
                return Err(CliError::Config(format!(
                    "unknown environment '{other}' (expected box|dry|viscous|fluid)"
                )))
            }
        };
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    const MINIMAL: &str = r#"
duration = 6.0

[snake]
n_links = 5
link_length = 0.2
link_mass = 0.2
cross_height = 0.15
cross_width = 0.05
torque_limit = 1.0
gravity = 9.81
dt = 0.01

[environment]
type = "viscous"
c_long = 10.0
c_trans = 1.0

[cost]
goal = [-20.0, 0.0]
alpha = 1.0
beta = 0.01
"#;

    #[test]
    fn minimal_config_parses_with_defaults() {
        let config: ExperimentConfig = toml::from_str(MINIMAL).unwrap();
        config.validate().unwrap();
        assert_eq!(config.total_steps(), 600);
        assert_eq!(config.ramp_up, 2.0);
        assert_eq!(config.mpc.ilqr.horizon, 25);
        assert!(config.serpenoid.is_none());
        let dir = config.goal_direction();
        assert!((dir - nalgebra::Vector2::new(-1.0, 0.0)).norm() < 1e-12);
    }

    #[test]
    fn unknown_keys_are_rejected() {
        let bad = format!("{MINIMAL}\nbogus_key = 1\n");
        assert!(toml::from_str::<ExperimentConfig>(&bad).is_err());
        let bad_nested = MINIMAL.replace("[cost]", "[cost]\nbogus = 2.0");
        assert!(toml::from_str::<ExperimentConfig>(&bad_nested).is_err());
    }

    #[test]
    fn provenance_round_trips() {
        let config: ExperimentConfig = toml::from_str(MINIMAL).unwrap();
        let dumped = config.provenance();
        let reparsed: ExperimentConfig = toml::from_str(&dumped).unwrap();
        assert_eq!(reparsed.total_steps(), config.total_steps());
        assert_eq!(reparsed.provenance(), dumped);
    }

    #[test]
    fn env_override_by_name() {
        let mut config: ExperimentConfig = toml::from_str(MINIMAL).unwrap();
        config.override_environment("dry").unwrap();
        assert_eq!(config.environment.label(), "smooth_dry");
        config.override_environment("box").unwrap();
        assert_eq!(config.environment.label(), "box_dry");
        assert!(config.override_environment("lava").is_err());
    }
}
