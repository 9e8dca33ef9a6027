//! Declarative run configuration (TOML).
//!
//! A run file selects a mode, a target, and the adaptive/training settings;
//! anything omitted takes the documented default. Unknown keys are
//! rejected so typos surface as errors naming the offending key.

use std::collections::BTreeMap;
use std::path::{Path, PathBuf};

use anyhow::{bail, Context, Result};
use serde::Deserialize;

use ane_core::driver::{
    AmrConfig, AmrMarking, AneConfig, Enhancement, GlobalInit, OutputInit,
};
use ane_core::optimize::TrainConfig;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Mode {
    /// Grow the network on a fixed quadrature mesh.
    AneFixed,
    /// Train once, then adapt the quadrature mesh for the fixed network.
    AmrOnly,
    /// Combined loop: network growth plus quadrature adaptation.
    AneFull,
    /// Train a fixed-size uniformly initialized network once.
    FixedNetwork,
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TargetSection {
    pub name: String,
    #[serde(default)]
    pub kellogg_standard: bool,
    #[serde(default)]
    pub params: BTreeMap<String, f64>,
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct EnhancementSection {
    #[serde(default = "default_strategy")]
    pub strategy: String,
    #[serde(default = "default_gamma1")]
    pub gamma1: f64,
    #[serde(default = "default_alpha2")]
    pub alpha2: f64,
    #[serde(default = "default_init")]
    pub init: String,
    #[serde(default = "default_output_weights")]
    pub output_weights: String,
}

impl Default for EnhancementSection {
    fn default() -> Self {
        Self {
            strategy: default_strategy(),
            gamma1: default_gamma1(),
            alpha2: default_alpha2(),
            init: default_init(),
            output_weights: default_output_weights(),
        }
    }
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct AmrSection {
    #[serde(default = "default_gamma2")]
    pub gamma2: f64,
    #[serde(default = "default_marking")]
    pub marking: String,
    #[serde(default = "default_gamma1")]
    pub gamma1: f64,
    #[serde(default = "default_max_cells")]
    pub max_cells: usize,
}

impl Default for AmrSection {
    fn default() -> Self {
        Self {
            gamma2: default_gamma2(),
            marking: default_marking(),
            gamma1: default_gamma1(),
            max_cells: default_max_cells(),
        }
    }
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TrainSection {
    #[serde(default = "default_learning_rate")]
    pub learning_rate: f64,
    #[serde(default = "default_beta1")]
    pub beta1: f64,
    #[serde(default = "default_beta2")]
    pub beta2: f64,
    #[serde(default = "default_eps_adam")]
    pub eps_adam: f64,
    #[serde(default = "default_plateau_window")]
    pub plateau_window: usize,
    #[serde(default = "default_plateau_rel")]
    pub plateau_rel: f64,
    #[serde(default = "default_max_iters")]
    pub max_iters: usize,
}

impl Default for TrainSection {
    fn default() -> Self {
        Self {
            learning_rate: default_learning_rate(),
            beta1: default_beta1(),
            beta2: default_beta2(),
            eps_adam: default_eps_adam(),
            plateau_window: default_plateau_window(),
            plateau_rel: default_plateau_rel(),
            max_iters: default_max_iters(),
        }
    }
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct EvalSection {
    pub mesh: Option<Vec<usize>>,
}

/// Top-level run file.
#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    pub mode: Mode,
    pub epsilon: f64,
    #[serde(default)]
    pub seed: u64,
    pub out_dir: Option<PathBuf>,
    pub target: TargetSection,
    #[serde(default = "default_initial_m0")]
    pub initial_m0: usize,
    /// Per-axis cell counts of the initial quadrature mesh; defaults to
    /// 1000 cells in one dimension and 400×400 in two.
    pub initial_mesh: Option<Vec<usize>>,
    #[serde(default = "default_max_outer_iters")]
    pub max_outer_iters: usize,
    pub max_neurons: Option<usize>,
    /// Network size for `fixed-network` mode.
    pub neurons: Option<usize>,
    #[serde(default)]
    pub enhancement: EnhancementSection,
    #[serde(default)]
    pub amr: AmrSection,
    #[serde(default)]
    pub train: TrainSection,
    #[serde(default)]
    pub eval: Option<EvalSection>,
}

fn default_strategy() -> String {
    "local-average".into()
}
fn default_gamma1() -> f64 {
    0.7
}
fn default_alpha2() -> f64 {
    1.0
}
fn default_init() -> String {
    "uniform".into()
}
fn default_output_weights() -> String {
    "resolve".into()
}
fn default_gamma2() -> f64 {
    0.9
}
fn default_marking() -> String {
    "average".into()
}
fn default_max_cells() -> usize {
    4_000_000
}
fn default_learning_rate() -> f64 {
    1e-3
}
fn default_beta1() -> f64 {
    0.9
}
fn default_beta2() -> f64 {
    0.999
}
fn default_eps_adam() -> f64 {
    1e-8
}
fn default_plateau_window() -> usize {
    2000
}
fn default_plateau_rel() -> f64 {
    1e-3
}
fn default_max_iters() -> usize {
    200_000
}
fn default_initial_m0() -> usize {
    9
}
fn default_max_outer_iters() -> usize {
    50
}

impl RunConfig {
    pub fn from_path(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path)
            .with_context(|| format!("cannot read config file {}", path.display()))?;
        let cfg: RunConfig = toml::from_str(&text)
            .with_context(|| format!("invalid config file {}", path.display()))?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.epsilon > 0.0) {
            bail!("config key `epsilon` must be positive");
        }
        if self.mode == Mode::FixedNetwork && self.neurons.is_none() {
            bail!("mode `fixed-network` requires config key `neurons`");
        }
        self.enhancement()?;
        self.amr_config()?;
        Ok(())
    }

    pub fn enhancement(&self) -> Result<Enhancement> {
        match self.enhancement.strategy.as_str() {
            "local-average" => Ok(Enhancement::LocalAverage),
            "local-bulk" => Ok(Enhancement::LocalBulk { gamma1: self.enhancement.gamma1 }),
            "global" => {
                let init = match self.enhancement.init.as_str() {
                    "uniform" => GlobalInit::Uniform,
                    "random" => GlobalInit::Random,
                    other => bail!(
                        "config key `enhancement.init` has unknown value '{other}' \
                         (expected uniform | random)"
                    ),
                };
                Ok(Enhancement::Global { alpha2: self.enhancement.alpha2, init })
            }
            other => bail!(
                "config key `enhancement.strategy` has unknown value '{other}' \
                 (expected local-average | local-bulk | global)"
            ),
        }
    }

    pub fn output_init(&self) -> Result<OutputInit> {
        match self.enhancement.output_weights.as_str() {
            "resolve" => Ok(OutputInit::Resolve),
            "zero" => Ok(OutputInit::Zero),
            other => bail!(
                "config key `enhancement.output_weights` has unknown value '{other}' \
                 (expected resolve | zero)"
            ),
        }
    }

    pub fn amr_config(&self) -> Result<AmrConfig> {
        let marking = match self.amr.marking.as_str() {
            "average" => AmrMarking::Average,
            "bulk" => AmrMarking::Bulk { gamma1: self.amr.gamma1 },
            other => bail!(
                "config key `amr.marking` has unknown value '{other}' (expected average | bulk)"
            ),
        };
        Ok(AmrConfig { gamma2: self.amr.gamma2, marking, max_cells: self.amr.max_cells })
    }

    pub fn train_config(&self) -> TrainConfig {
        TrainConfig {
            learning_rate: self.train.learning_rate,
            beta1: self.train.beta1,
            beta2: self.train.beta2,
            eps_adam: self.train.eps_adam,
            plateau_window: self.train.plateau_window,
            plateau_rel: self.train.plateau_rel,
            max_iters: self.train.max_iters,
            seed: self.seed,
        }
    }

    pub fn initial_mesh_counts(&self, dim: usize) -> Vec<usize> {
        match &self.initial_mesh {
            Some(counts) => counts.clone(),
            None => match dim {
                1 => vec![1000],
                _ => vec![400; dim],
            },
        }
    }

    pub fn eval_mesh_counts(&self, dim: usize) -> Vec<usize> {
        if let Some(EvalSection { mesh: Some(counts) }) = &self.eval {
            return counts.clone();
        }
        match dim {
            1 => vec![10_000],
            _ => vec![1000; dim],
        }
    }

    pub fn ane_config(&self, dim: usize) -> Result<AneConfig> {
        Ok(AneConfig {
            epsilon: self.epsilon,
            enhancement: self.enhancement()?,
            output_init: self.output_init()?,
            initial_m0: self.initial_m0,
            initial_mesh_counts: self.initial_mesh_counts(dim),
            amr: self.amr_config()?,
            train: self.train_config(),
            max_outer_iters: self.max_outer_iters,
            max_neurons: self.max_neurons,
        })
    }

    /// Target parameter map with the `kellogg_standard` flag folded in.
    pub fn target_params(&self) -> BTreeMap<String, f64> {
        let mut params = self.target.params.clone();
        if self.target.kellogg_standard {
            params.insert("kellogg_standard".into(), 1.0);
        }
        params
    }
}
