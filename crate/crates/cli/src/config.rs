//! TOML experiment configuration.

use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use tfe_core::entropy::{BruteForceLimits, ConstructionParams, EstimateBudget};
use tfe_core::geometry::{AxisBox, Grid};
use tfe_core::plant::{fixtures, InputSequence, PlantModel};
use tfe_core::reach::{SteeringOptions, DEFAULT_DELTA_K};

/// Environment variable that overrides `output_dir`.
pub const OUTPUT_DIR_ENV: &str = "TFE_OUTPUT_DIR";

#[derive(Debug, thiserror::Error)]
pub enum ConfigError {
    #[error("cannot read {path}: {source}")]
    Read {
        path: PathBuf,
        source: std::io::Error,
    },
    #[error("malformed config: {0}")]
    Parse(#[from] toml::de::Error),
    #[error("invalid `{field}`: {reason}")]
    Invalid { field: String, reason: String },
}

fn invalid(field: impl Into<String>, reason: impl Into<String>) -> ConfigError {
    ConfigError::Invalid {
        field: field.into(),
        reason: reason.into(),
    }
}

/// Scalar input set `lo, lo + step, …, hi`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct InputGridSpec {
    pub lo: f64,
    pub hi: f64,
    pub step: f64,
}

/// A named fixture, or a full inline model.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PlantSpec {
    pub fixture: Option<String>,
    /// Jump height for the `plant_c` fixture.
    pub jump: Option<f64>,
    pub model: Option<PlantModel>,
    /// Replaces the plant's input set.
    pub inputs: Option<InputGridSpec>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct BudgetConfig {
    /// Longest observation prefix tried.
    pub s_max: usize,
    /// Input values prefixes are drawn from.
    pub prefix_inputs: Vec<f64>,
    /// Horizons tried; defaults to `1..=tau_max`.
    pub taus: Option<Vec<usize>>,
    pub tau_max: usize,
}

impl Default for BudgetConfig {
    fn default() -> Self {
        BudgetConfig {
            s_max: 0,
            prefix_inputs: vec![0.0],
            taus: None,
            tau_max: 3,
        }
    }
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct GridConfig {
    /// Cells per axis of the cover target.
    pub target: Option<usize>,
    /// Seed vertices per axis for tuple construction.
    pub seeds: Option<usize>,
    /// Cells per axis of the invariance sweep.
    pub sweep: Option<usize>,
    /// Cells per axis of the refinement grid over X.
    pub refinement: Option<usize>,
    /// Cells per axis for cover extraction.
    pub extraction: Option<usize>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct SteeringConfig {
    pub exhaustive_budget: usize,
    pub steer_box: Option<AxisBox>,
    pub guide_resolution: Option<usize>,
}

impl Default for SteeringConfig {
    fn default() -> Self {
        let d = SteeringOptions::default();
        SteeringConfig {
            exhaustive_budget: d.exhaustive_budget,
            steer_box: d.steer_box,
            guide_resolution: d.guide_resolution,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct BruteForceConfig {
    pub tau: usize,
    /// Alphabet sizes `1..=m_max` are tried in order.
    pub m_max: usize,
    pub breakpoint_step: f64,
    pub max_evaluations: u64,
}

impl Default for BruteForceConfig {
    fn default() -> Self {
        let l = BruteForceLimits::default();
        BruteForceConfig {
            tau: 1,
            m_max: l.max_m,
            breakpoint_step: 0.01,
            max_evaluations: l.max_evaluations,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct DiagnoseConfig {
    pub j_max: usize,
}

impl Default for DiagnoseConfig {
    fn default() -> Self {
        DiagnoseConfig { j_max: 4 }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    #[serde(default)]
    pub name: Option<String>,
    pub plant: PlantSpec,
    #[serde(default)]
    pub budget: BudgetConfig,
    #[serde(default)]
    pub grids: GridConfig,
    #[serde(default)]
    pub steering: SteeringConfig,
    /// Robustness radius; positive selects the robust estimate.
    #[serde(default)]
    pub radius: f64,
    #[serde(default = "default_delta_k")]
    pub delta_k: f64,
    #[serde(default)]
    pub bruteforce: BruteForceConfig,
    #[serde(default)]
    pub diagnose: DiagnoseConfig,
    #[serde(default)]
    pub output_dir: Option<PathBuf>,
    /// Recorded for reproducibility; every search is deterministic.
    #[serde(default)]
    pub seed: u64,
    /// Command-line directory, ahead of the environment and the file.
    #[serde(skip)]
    pub output_override: Option<PathBuf>,
}

fn default_delta_k() -> f64 {
    DEFAULT_DELTA_K
}

impl ExperimentConfig {
    pub fn from_toml(text: &str) -> Result<Self, ConfigError> {
        let cfg: ExperimentConfig = toml::from_str(text)?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn load(path: &Path) -> Result<Self, ConfigError> {
        let text = std::fs::read_to_string(path).map_err(|source| ConfigError::Read {
            path: path.to_path_buf(),
            source,
        })?;
        Self::from_toml(&text)
    }

    pub fn validate(&self) -> Result<(), ConfigError> {
        let plant = self.plant()?;
        if self.budget.tau_max == 0 {
            return Err(invalid("budget.tau_max", "must be positive"));
        }
        if let Some(t) = &self.budget.taus {
            if t.is_empty() || t.contains(&0) {
                return Err(invalid("budget.taus", "need positive horizons"));
            }
        }
        if self.budget.s_max > 0 && self.budget.prefix_inputs.is_empty() {
            return Err(invalid("budget.prefix_inputs", "empty while s_max > 0"));
        }
        for (i, u) in self.budget.prefix_inputs.iter().enumerate() {
            if plant.input_index(&[*u]).is_none() {
                return Err(invalid(format!("budget.prefix_inputs[{i}]"), format!("{u} is not in U")));
            }
        }
        if !(self.delta_k > 0.0) {
            return Err(invalid("delta_k", "must be positive"));
        }
        if !(self.radius >= 0.0) {
            return Err(invalid("radius", "must be >= 0"));
        }
        let g = &self.grids;
        for (field, v) in [
            ("grids.target", g.target),
            ("grids.seeds", g.seeds),
            ("grids.sweep", g.sweep),
            ("grids.refinement", g.refinement),
            ("grids.extraction", g.extraction),
        ] {
            if v.is_some_and(|v| v < 2) {
                return Err(invalid(field, "needs at least 2 per axis"));
            }
        }
        let b = &self.bruteforce;
        if b.tau == 0 || b.m_max == 0 || !(b.breakpoint_step > 0.0) || b.max_evaluations == 0 {
            return Err(invalid("bruteforce", "tau, m_max, breakpoint_step and max_evaluations must be positive"));
        }
        if self.diagnose.j_max == 0 {
            return Err(invalid("diagnose.j_max", "must be positive"));
        }
        Ok(())
    }

    /// The plant with any input override applied, validated.
    pub fn plant(&self) -> Result<PlantModel, ConfigError> {
        let spec = &self.plant;
        let mut plant = match (&spec.fixture, &spec.model) {
            (Some(name), None) => match (name.as_str(), spec.jump) {
                ("plant_c", Some(j)) => fixtures::plant_c_with_jump(j),
                (_, Some(_)) => return Err(invalid("plant.jump", "only applies to plant_c")),
                (n, None) => fixtures::by_name(n).ok_or_else(|| invalid("plant.fixture", format!("unknown fixture `{n}`")))?,
            },
            (None, Some(model)) => model.clone(),
            _ => return Err(invalid("plant", "set exactly one of `fixture` and `model`")),
        };
        if let Some(g) = &spec.inputs {
            plant.inputs =
                fixtures::input_grid(g.lo, g.hi, g.step).map_err(|e| invalid("plant.inputs", e.to_string()))?;
        }
        plant.validate().map_err(|e| match e {
            tfe_core::Error::Config { field, reason } => invalid(format!("plant.{field}"), reason),
            other => invalid("plant", other.to_string()),
        })?;
        Ok(plant)
    }

    pub fn taus(&self) -> Vec<usize> {
        self.budget.taus.clone().unwrap_or_else(|| (1..=self.budget.tau_max).collect())
    }

    /// Every prefix over `prefix_inputs` of length up to `s_max`.
    pub fn prefixes(&self, plant: &PlantModel) -> Vec<InputSequence> {
        let alphabet: Vec<usize> = self
            .budget
            .prefix_inputs
            .iter()
            .filter_map(|u| plant.input_index(&[*u]))
            .collect();
        let mut all = vec![InputSequence::empty()];
        let mut layer = vec![InputSequence::empty()];
        for _ in 0..self.budget.s_max {
            layer = layer
                .iter()
                .flat_map(|p| alphabet.iter().map(move |&u| p.concat(&InputSequence(vec![u]))))
                .collect();
            all.extend(layer.iter().cloned());
        }
        all
    }

    pub fn steering(&self) -> SteeringOptions {
        SteeringOptions {
            delta_k: self.delta_k,
            exhaustive_budget: self.steering.exhaustive_budget,
            steer_box: self.steering.steer_box.clone(),
            guide_resolution: self.steering.guide_resolution,
        }
    }

    pub fn construction(&self) -> ConstructionParams {
        ConstructionParams {
            robust_radius: self.radius,
            delta_k: self.delta_k,
            seeds_per_axis: self.grids.seeds,
            target_resolution: self.grids.target,
            steering: self.steering(),
            ..ConstructionParams::default()
        }
    }

    pub fn budget(&self, plant: &PlantModel) -> EstimateBudget {
        EstimateBudget {
            prefixes: self.prefixes(plant),
            taus: self.taus(),
            params: self.construction(),
        }
    }

    pub fn brute_limits(&self) -> BruteForceLimits {
        BruteForceLimits {
            max_tau: BruteForceLimits::default().max_tau.max(self.bruteforce.tau),
            max_m: self.bruteforce.m_max,
            max_evaluations: self.bruteforce.max_evaluations,
        }
    }

    /// Initial-state sweep grid over X.
    pub fn sweep_grid(&self, plant: &PlantModel) -> Grid {
        let n = self.grids.sweep.unwrap_or(if plant.state_dim == 1 { 2000 } else { 100 });
        Grid::uniform(plant.x.as_closed(), n).expect("validated resolution")
    }

    pub fn refinement_resolution(&self, plant: &PlantModel) -> Vec<usize> {
        let n = self.grids.refinement.unwrap_or(if plant.state_dim == 1 { 8192 } else { 64 });
        vec![n; plant.state_dim]
    }

    /// The command-line override, else `TFE_OUTPUT_DIR`, else `output_dir`,
    /// else `out`.
    pub fn output_dir(&self) -> PathBuf {
        self.output_override
            .clone()
            .or_else(|| std::env::var_os(OUTPUT_DIR_ENV).map(PathBuf::from))
            .or_else(|| self.output_dir.clone())
            .unwrap_or_else(|| PathBuf::from("out"))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn fixture_config_parses() {
        let cfg = ExperimentConfig::from_toml("[plant]\nfixture = \"plant_a\"\n[budget]\ntau_max = 2\n").unwrap();
        assert_eq!(cfg.taus(), vec![1, 2]);
        assert_eq!(cfg.plant().unwrap().name, "plant_a");
    }

    #[test]
    fn k_outside_x_names_the_field() {
        let text = r#"
[plant.model]
name = "bad"
state_dim = 1
inputs = [[0.0]]
output = { kind = "identity" }
x = { lo = [-1.0], hi = [1.0], open = false }
k = { lo = [-0.5], hi = [1.5], open = false }
dynamics = { kind = "linear", a = [[2.0]], b = [[1.0]], c = [0.0] }
"#;
        match ExperimentConfig::from_toml(text) {
            Err(ConfigError::Invalid { field, .. }) => assert_eq!(field, "plant.k"),
            other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn syntax_errors_carry_a_line() {
        let err = ExperimentConfig::from_toml("[plant]\nfixture = \n").unwrap_err();
        assert!(err.to_string().contains("line 2"), "{err}");
    }

    #[test]
    fn prefixes_enumerate_up_to_s_max() {
        let cfg = ExperimentConfig::from_toml(
            "[plant]\nfixture = \"plant_b\"\n[budget]\ns_max = 2\nprefix_inputs = [0.0, 1.0]\n",
        )
        .unwrap();
        let plant = cfg.plant().unwrap();
        assert_eq!(cfg.prefixes(&plant).len(), 1 + 2 + 4);
    }
}
