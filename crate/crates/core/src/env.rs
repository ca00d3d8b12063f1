//! Episode engine: tracker + simulator + extrinsic reward behind reset/step.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::domain::{featurize, DialogueTracker, SemanticFrame, StateLayout, StateVector, World};
use crate::error::{Error, Result};
use crate::log::{EpisodeLog, LogEntry};
use crate::simulator::{sample_goal, Outcome, SimulatorConfig, SimulatorState};

/// Random generator used everywhere in the crate.
pub type SimRng = ChaCha8Rng;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RewardConfig {
    pub gamma: f64,
    pub per_turn: f64,
    pub success_bonus: f64,
    pub failure_penalty: f64,
    pub max_turns: usize,
}

impl RewardConfig {
    /// `-1` per turn, `+2L` on success and `-L` on failure with `L = max_turns`.
    pub fn with_max_turns(max_turns: usize) -> Self {
        RewardConfig {
            gamma: 0.9,
            per_turn: -1.0,
            success_bonus: 2.0 * max_turns as f64,
            failure_penalty: -(max_turns as f64),
            max_turns,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.gamma > 0.0 && self.gamma <= 1.0) {
            return Err(Error::Config(format!("gamma must be in (0, 1], got {}", self.gamma)));
        }
        if self.max_turns == 0 {
            return Err(Error::Config("max_turns must be at least 1".into()));
        }
        Ok(())
    }
}

impl Default for RewardConfig {
    fn default() -> Self {
        Self::with_max_turns(40)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Transition {
    pub s: StateVector,
    pub a: usize,
    pub r: f64,
    pub s_next: StateVector,
    pub terminal: bool,
}

#[derive(Debug, Clone, PartialEq)]
pub struct EpisodeRecord {
    pub transitions: Vec<Transition>,
    pub outcome: Outcome,
    pub total_reward: f64,
    pub turns: usize,
    pub goal_index: usize,
    pub episode_seed: u64,
    pub log: Option<EpisodeLog>,
}

impl EpisodeRecord {
    pub fn success(&self) -> bool {
        self.outcome == Outcome::Success
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct StepResult {
    pub s_next: StateVector,
    pub r: f64,
    pub terminal: bool,
    pub outcome: Outcome,
}

#[derive(Debug, Clone)]
struct Episode {
    goal_index: usize,
    seed: u64,
    rng: SimRng,
    sim: SimulatorState,
    tracker: DialogueTracker,
    /// Index of the next agent turn, starting at 1.
    turn: usize,
    state: StateVector,
    buffer: Vec<Transition>,
    outcome: Outcome,
    log: Option<Vec<LogEntry>>,
}

/// A movie-booking dialogue environment.
#[derive(Debug, Clone)]
pub struct DialogueEnv {
    world: World,
    reward: RewardConfig,
    sim_config: SimulatorConfig,
    layout: StateLayout,
    logging: bool,
    episode: Option<Episode>,
}

impl DialogueEnv {
    pub fn new(world: World, reward: RewardConfig, sim_config: SimulatorConfig) -> Result<Self> {
        reward.validate()?;
        let layout = StateLayout::new(world.ontology.len());
        Ok(DialogueEnv {
            world,
            reward,
            sim_config,
            layout,
            logging: false,
            episode: None,
        })
    }

    /// Keep a frame-level log of each episode (off by default).
    pub fn set_logging(&mut self, on: bool) {
        self.logging = on;
    }

    pub fn world(&self) -> &World {
        &self.world
    }

    pub fn reward_config(&self) -> &RewardConfig {
        &self.reward
    }

    pub fn state_dim(&self) -> usize {
        self.layout.dim()
    }

    pub fn num_actions(&self) -> usize {
        self.world.actions.len()
    }

    pub fn max_turns(&self) -> usize {
        self.reward.max_turns
    }

    pub fn tracker(&self) -> Option<&DialogueTracker> {
        self.episode.as_ref().map(|e| &e.tracker)
    }

    pub fn simulator(&self) -> Option<&SimulatorState> {
        self.episode.as_ref().map(|e| &e.sim)
    }

    pub fn state(&self) -> Option<&StateVector> {
        self.episode.as_ref().map(|e| &e.state)
    }

    pub fn buffer(&self) -> &[Transition] {
        self.episode.as_ref().map_or(&[], |e| &e.buffer)
    }

    pub fn is_done(&self) -> bool {
        self.episode.as_ref().is_none_or(|e| e.outcome.is_terminal())
    }

    /// Samples a goal and an episode seed from `rng`, then starts the episode.
    pub fn reset<R: Rng + ?Sized>(&mut self, rng: &mut R) -> Result<StateVector> {
        let goal_index = sample_goal(&self.world.goals, rng)?;
        let seed = rng.next_u64();
        self.reset_with(goal_index, seed)
    }

    /// Starts an episode for a specific goal; fully determined by the arguments.
    pub fn reset_with(&mut self, goal_index: usize, seed: u64) -> Result<StateVector> {
        let goal = self
            .world
            .goals
            .get(goal_index)
            .ok_or_else(|| Error::InvalidArgument(format!("no goal {goal_index}")))?
            .clone();
        let mut rng = SimRng::seed_from_u64(seed);
        let mut sim = SimulatorState::new(goal, self.world.ticket, self.world.taskcomplete, self.sim_config);
        let mut tracker = DialogueTracker::new(&self.world.kb);
        let opening = sim.initial_user_frame(&self.world.ontology, &mut rng);
        tracker.update_user(&opening, &self.world.kb)?;
        let log = self.logging.then(|| {
            vec![LogEntry {
                turn: 0,
                frame: opening,
                reward: 0.0,
            }]
        });
        let state = featurize(self.layout, &tracker, tracker.matches().len(), 1, self.reward.max_turns);
        self.episode = Some(Episode {
            goal_index,
            seed,
            rng,
            sim,
            tracker,
            turn: 1,
            state: state.clone(),
            buffer: Vec::new(),
            outcome: Outcome::Ongoing,
            log,
        });
        Ok(state)
    }

    /// Executes agent action `a`.
    pub fn step(&mut self, a: usize) -> Result<StepResult> {
        self.step_inner(a, None::<fn(&SemanticFrame) -> SemanticFrame>)
    }

    /// Like [`step`](Self::step), but the user's non-terminal reply comes from
    /// `user` instead of the simulator. The simulator still judges success.
    pub fn step_with_user(
        &mut self,
        a: usize,
        user: impl FnOnce(&SemanticFrame) -> SemanticFrame,
    ) -> Result<StepResult> {
        self.step_inner(a, Some(user))
    }

    /// Agent frame the tracker would emit for `a` in the current state.
    pub fn preview(&self, a: usize) -> Result<SemanticFrame> {
        let ep = self.episode.as_ref().ok_or(Error::NoEpisode)?;
        let action = self.world.actions.get(a).ok_or(Error::ActionOutOfRange {
            index: a,
            size: self.world.actions.len(),
        })?;
        Ok(ep.tracker.instantiate(action, &self.world))
    }

    fn step_inner<F>(&mut self, a: usize, user: Option<F>) -> Result<StepResult>
    where
        F: FnOnce(&SemanticFrame) -> SemanticFrame,
    {
        let ep = self.episode.as_mut().ok_or(Error::NoEpisode)?;
        if ep.outcome.is_terminal() {
            return Err(Error::EpisodeTerminated);
        }
        let action = *self.world.actions.get(a).ok_or(Error::ActionOutOfRange {
            index: a,
            size: self.world.actions.len(),
        })?;
        let max_turns = self.reward.max_turns;
        let turn = ep.turn;

        let agent_frame = ep.tracker.instantiate(&action, &self.world);
        ep.tracker.update_agent(&action, &agent_frame, &self.world);
        let ended = ep.sim.observe_agent(&agent_frame, turn, max_turns)?;
        let (user_frame, terminal) = match ended {
            Some(f) => (f, true),
            None => {
                let f = match user {
                    Some(u) => u(&agent_frame),
                    None => ep.sim.respond(&agent_frame, &self.world.ontology, &mut ep.rng),
                };
                (f, false)
            }
        };
        ep.tracker.update_user(&user_frame, &self.world.kb)?;
        ep.outcome = ep.sim.outcome;

        let mut r = self.reward.per_turn;
        match ep.outcome {
            Outcome::Success => r += self.reward.success_bonus,
            Outcome::Failure => r += self.reward.failure_penalty,
            Outcome::Ongoing => {}
        }
        ep.turn += 1;
        let s_next = featurize(
            self.layout,
            &ep.tracker,
            ep.tracker.matches().len(),
            ep.turn.min(max_turns),
            max_turns,
        );
        if let Some(log) = ep.log.as_mut() {
            log.push(LogEntry {
                turn,
                frame: agent_frame,
                reward: r,
            });
            log.push(LogEntry {
                turn,
                frame: user_frame,
                reward: 0.0,
            });
        }
        let s = std::mem::replace(&mut ep.state, s_next.clone());
        ep.buffer.push(Transition {
            s,
            a,
            r,
            s_next: s_next.clone(),
            terminal,
        });
        Ok(StepResult {
            s_next,
            r,
            terminal,
            outcome: ep.outcome,
        })
    }

    /// Moves the finished (or abandoned) episode's buffer into a record.
    pub fn take_record(&mut self) -> Result<EpisodeRecord> {
        let ep = self.episode.take().ok_or(Error::NoEpisode)?;
        let total_reward = ep.buffer.iter().map(|t| t.r).sum();
        let log = ep.log.map(|entries| EpisodeLog {
            goal_index: ep.goal_index,
            seed: ep.seed,
            entries,
        });
        Ok(EpisodeRecord {
            turns: ep.buffer.len(),
            transitions: ep.buffer,
            outcome: ep.outcome,
            total_reward,
            goal_index: ep.goal_index,
            episode_seed: ep.seed,
            log,
        })
    }
}

/// Anything that picks an action from the current state.
pub trait Policy {
    fn act(&mut self, s: &StateVector, tracker: &DialogueTracker, rng: &mut SimRng) -> Result<usize>;
}

impl<F> Policy for F
where
    F: FnMut(&StateVector, &DialogueTracker, &mut SimRng) -> usize,
{
    fn act(&mut self, s: &StateVector, tracker: &DialogueTracker, rng: &mut SimRng) -> Result<usize> {
        Ok(self(s, tracker, rng))
    }
}

/// Rolls out one full episode with `policy`.
pub fn run_episode<P: Policy + ?Sized>(
    env: &mut DialogueEnv,
    policy: &mut P,
    rng: &mut SimRng,
) -> Result<EpisodeRecord> {
    env.reset(rng)?;
    drive(env, policy, rng)
}

/// Rolls out an episode for a fixed goal and simulator seed.
pub fn replay_episode<P: Policy + ?Sized>(
    env: &mut DialogueEnv,
    policy: &mut P,
    goal_index: usize,
    seed: u64,
    rng: &mut SimRng,
) -> Result<EpisodeRecord> {
    env.reset_with(goal_index, seed)?;
    drive(env, policy, rng)
}

fn drive<P: Policy + ?Sized>(env: &mut DialogueEnv, policy: &mut P, rng: &mut SimRng) -> Result<EpisodeRecord> {
    while !env.is_done() {
        let ep = env.episode.as_ref().ok_or(Error::NoEpisode)?;
        let a = policy.act(&ep.state, &ep.tracker, rng)?;
        env.step(a)?;
    }
    env.take_record()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::domain::{generate_world, DialogueActType, GoalProfile, Ontology};

    pub(crate) fn small_env() -> DialogueEnv {
        let ont = Ontology::movie_default();
        let (kb, goals) = generate_world(&ont, 7, 100, &GoalProfile::default()).unwrap();
        let world = World::new(ont, kb, goals).unwrap();
        DialogueEnv::new(world, RewardConfig::default(), SimulatorConfig::default()).unwrap()
    }

    #[test]
    fn reset_is_deterministic_and_starts_at_turn_one() {
        let mut env = small_env();
        let mut r1 = SimRng::seed_from_u64(5);
        let mut r2 = SimRng::seed_from_u64(5);
        let s1 = env.reset(&mut r1).unwrap();
        let s2 = env.reset(&mut r2).unwrap();
        assert_eq!(s1, s2);
        let layout = StateLayout::new(29);
        assert!(s1[layout.agent_act()..layout.agent_act() + 11]
            .iter()
            .all(|&x| x == 0.0));
        assert_eq!(s1[layout.turn()], 1.0 / 40.0);
        assert_eq!(s1[layout.user_act() + DialogueActType::Request.index()], 1.0);
    }

    #[test]
    fn greeting_forever_times_out() {
        let mut env = small_env();
        let greet = env.world().actions.special(DialogueActType::Greeting).unwrap();
        let mut rng = SimRng::seed_from_u64(1);
        let mut policy = |_: &StateVector, _: &DialogueTracker, _: &mut SimRng| greet;
        let rec = run_episode(&mut env, &mut policy, &mut rng).unwrap();
        assert_eq!(rec.outcome, Outcome::Failure);
        assert_eq!(rec.turns, 40);
        assert!(rec.transitions[..39].iter().all(|t| t.r == -1.0 && !t.terminal));
        assert_eq!(rec.transitions[39].r, -41.0);
        assert_eq!(rec.total_reward, -80.0);
    }

    #[test]
    fn step_errors() {
        let mut env = small_env();
        assert!(matches!(env.step(0), Err(Error::NoEpisode)));
        let mut rng = SimRng::seed_from_u64(1);
        env.reset(&mut rng).unwrap();
        assert!(matches!(env.step(64), Err(Error::ActionOutOfRange { .. })));
        let close = env.world().actions.special(DialogueActType::Closing).unwrap();
        let r = env.step(close).unwrap();
        assert!(r.terminal);
        assert_eq!(r.r, -41.0);
        assert!(matches!(env.step(close), Err(Error::EpisodeTerminated)));
    }

    #[test]
    fn bad_reward_config() {
        let mut cfg = RewardConfig {
            gamma: 0.0,
            ..RewardConfig::default()
        };
        assert!(cfg.validate().is_err());
        cfg.gamma = 1.0;
        cfg.max_turns = 0;
        assert!(cfg.validate().is_err());
    }
}
