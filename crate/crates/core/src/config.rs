//! Run configuration file (TOML).
//!
//! ```toml
//! [world]
//! seed = 7
//! kb_rows = 1000
//!
//! [env]
//! max_turns = 40
//!
//! [train]
//! episodes = 2000
//! seeds = [1, 2, 3, 4, 5]
//!
//! [demos]
//! count = 50
//! ```
//!
//! Every key is optional. The discount factor lives in `[env]` and is copied
//! into the learner's configuration.

use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::domain::goal::parse_goals;
use crate::domain::{generate_world, GoalProfile, KnowledgeBase, Ontology, World};
use crate::env::{DialogueEnv, RewardConfig};
use crate::error::{Error, Result};
use crate::simulator::SimulatorConfig;
use crate::trainer::TrainConfig;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct WorldConfig {
    pub seed: u64,
    pub kb_rows: usize,
    /// Ontology file; the bundled movie ontology when absent.
    pub ontology: Option<PathBuf>,
    /// Require exactly 29 slots when loading `ontology`.
    pub strict: bool,
    /// Directory written by `gen-world`; overrides generation when set.
    pub dir: Option<PathBuf>,
    pub goals: GoalProfile,
}

impl Default for WorldConfig {
    fn default() -> Self {
        WorldConfig {
            seed: 7,
            kb_rows: 1000,
            ontology: None,
            strict: true,
            dir: None,
            goals: GoalProfile::default(),
        }
    }
}

/// Where the expert demonstrations come from.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum DemoSource {
    /// The actor after imitation of the rule agent.
    RulePretrained,
    /// A plain A2C agent trained for `source_episodes` on `source_seed`.
    A2c,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct DemoConfig {
    pub count: usize,
    /// Episode budget for collection; `100 × count` when absent.
    pub max_attempts: Option<usize>,
    pub source: DemoSource,
    pub source_seed: u64,
    pub source_episodes: usize,
}

impl Default for DemoConfig {
    fn default() -> Self {
        DemoConfig {
            count: 50,
            max_attempts: None,
            source: DemoSource::A2c,
            source_seed: 1000,
            source_episodes: 10000,
        }
    }
}

impl DemoConfig {
    pub fn attempts(&self) -> usize {
        self.max_attempts.unwrap_or(100 * self.count)
    }
}

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RunConfig {
    pub world: WorldConfig,
    pub env: RewardConfig,
    pub simulator: SimulatorConfig,
    pub train: TrainConfig,
    pub demos: DemoConfig,
}

impl RunConfig {
    pub fn parse(text: &str) -> Result<Self> {
        let cfg: RunConfig = toml::from_str(text).map_err(|e| Error::Config(e.to_string()))?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let text =
            std::fs::read_to_string(path).map_err(|e| Error::Config(format!("cannot read {}: {e}", path.display())))?;
        Self::parse(&text)
    }

    pub fn to_toml(&self) -> String {
        toml::to_string(self).expect("configuration serializes")
    }

    pub fn validate(&self) -> Result<()> {
        self.env.validate()?;
        self.train.validate()?;
        if self.world.kb_rows == 0 {
            return Err(Error::Config("world.kb_rows must be positive".into()));
        }
        if self.world.goals.n_goals == 0 {
            return Err(Error::Config("world.goals.n_goals must be positive".into()));
        }
        if self.demos.count == 0 {
            return Err(Error::Config("demos.count must be positive".into()));
        }
        if !(0.0..=1.0).contains(&self.simulator.noise) {
            return Err(Error::Config("simulator.noise must lie in [0, 1]".into()));
        }
        Ok(())
    }

    /// Training configuration with the environment's discount factor.
    pub fn train_config(&self) -> TrainConfig {
        let mut t = self.train.clone();
        t.a2c.gamma = self.env.gamma;
        t
    }

    pub fn ontology(&self) -> Result<Ontology> {
        match (&self.world.dir, &self.world.ontology) {
            (Some(dir), _) => Ontology::load(dir.join(ONTOLOGY_FILE), self.world.strict),
            (None, Some(path)) => Ontology::load(path, self.world.strict),
            (None, None) => Ok(Ontology::movie_default()),
        }
    }

    pub fn build_world(&self) -> Result<World> {
        let ont = self.ontology()?;
        let (kb, goals) = match &self.world.dir {
            Some(dir) => {
                let kb = KnowledgeBase::load(dir.join(KB_FILE), &ont)?;
                let goals = parse_goals(&std::fs::read_to_string(dir.join(GOALS_FILE))?, &ont)?;
                (kb, goals)
            }
            None => generate_world(&ont, self.world.seed, self.world.kb_rows, &self.world.goals)?,
        };
        World::new(ont, kb, goals)
    }

    pub fn build_env(&self) -> Result<DialogueEnv> {
        self.env_for(self.build_world()?)
    }

    pub fn env_for(&self, world: World) -> Result<DialogueEnv> {
        DialogueEnv::new(world, self.env, self.simulator)
    }
}

pub const ONTOLOGY_FILE: &str = "ontology.txt";
pub const KB_FILE: &str = "kb.txt";
pub const GOALS_FILE: &str = "goals.txt";
