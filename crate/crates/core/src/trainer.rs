//! Training orchestration: the rule agent, imitation pretraining, plain A2C
//! and the adversarial loop.

use rand::seq::SliceRandom;
use rand::SeedableRng;
use serde::{Deserialize, Serialize};

use crate::a2c::{episode_gradients, extrinsic_rewards, A2cConfig, Actor, Critic};
use crate::adversarial::{adversarial_update_traced, DemoBuffer, Discriminator, DiscriminatorMode, GanCritic};
use crate::domain::{DialogueTracker, StateVector, World};
use crate::env::{run_episode, DialogueEnv, Policy, SimRng};
use crate::error::{Error, Result};
use crate::nn::{CrossEntropyHead, LossHead, RmsProp, RmsPropConfig};

/// Steps of one training iteration, in execution order.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum UpdatePhase {
    Rollout,
    ActorExtrinsic,
    CriticExtrinsic,
    SampleDemos,
    ActorIntrinsic,
    GanCritic,
    Discriminator,
}

/// Independent random streams derived from one run seed.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Stream {
    Init = 1,
    Pretrain = 2,
    Rollout = 3,
    DemoSample = 4,
    Eval = 5,
    Final = 6,
    Demos = 7,
}

pub fn stream_rng(seed: u64, stream: Stream) -> SimRng {
    let mut rng = SimRng::seed_from_u64(seed);
    rng.set_stream(stream as u64);
    rng
}

/// Hand-written policy: answer the user's pending question, otherwise ask
/// for the first missing priority slot, then book, then close the task.
pub fn rule_policy(tracker: &DialogueTracker, world: &World) -> Result<usize> {
    let actions = &world.actions;
    let missing = |what: &str| Error::InvalidArgument(format!("action space has no {what}"));
    if let Some(&slot) = tracker
        .pending_requests
        .iter()
        .find(|&&s| s != world.ticket && s != world.taskcomplete)
    {
        return actions
            .inform(slot)
            .ok_or_else(|| missing("inform for a requested slot"));
    }
    if let Some(&slot) = world.priority.iter().find(|s| !tracker.constraints.contains_key(s)) {
        return actions
            .request(slot)
            .ok_or_else(|| missing("request for a priority slot"));
    }
    let target = if tracker.booked.is_none() {
        world.ticket
    } else {
        world.taskcomplete
    };
    actions.inform(target).ok_or_else(|| missing("booking action"))
}

/// [`rule_policy`] as a [`Policy`].
#[derive(Debug, Clone)]
pub struct RuleAgent {
    pub world: World,
}

impl Policy for RuleAgent {
    fn act(&mut self, _s: &StateVector, tracker: &DialogueTracker, _rng: &mut SimRng) -> Result<usize> {
        rule_policy(tracker, &self.world)
    }
}

/// Argmax over the actor's distribution.
#[derive(Debug, Clone, Copy)]
pub struct GreedyPolicy<'a>(pub &'a Actor);

impl Policy for GreedyPolicy<'_> {
    fn act(&mut self, s: &StateVector, _tracker: &DialogueTracker, _rng: &mut SimRng) -> Result<usize> {
        self.0.greedy(s)
    }
}

/// Samples from the actor's distribution.
#[derive(Debug, Clone, Copy)]
pub struct SamplingPolicy<'a>(pub &'a Actor);

impl Policy for SamplingPolicy<'_> {
    fn act(&mut self, s: &StateVector, _tracker: &DialogueTracker, rng: &mut SimRng) -> Result<usize> {
        Ok(self.0.select_action(s, rng)?.0)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct PretrainConfig {
    /// Rule-agent state-action pairs to collect.
    pub examples: usize,
    pub max_steps: usize,
    pub batch_size: usize,
    pub target_accuracy: f64,
    pub holdout_fraction: f64,
    pub lr: f64,
}

impl Default for PretrainConfig {
    fn default() -> Self {
        PretrainConfig {
            examples: 3000,
            max_steps: 1500,
            batch_size: 64,
            target_accuracy: 0.85,
            holdout_fraction: 0.2,
            lr: 0.005,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PretrainReport {
    pub accuracy: f64,
    pub steps: usize,
    pub examples: usize,
    /// Step cap reached below 50% held-out accuracy.
    pub weak: bool,
}

/// Imitation of the rule agent by cross-entropy; returns held-out accuracy.
/// The actor's own optimizer state is left untouched.
pub fn pretrain_actor(
    actor: &mut Actor,
    env: &mut DialogueEnv,
    cfg: &PretrainConfig,
    rng: &mut SimRng,
) -> Result<PretrainReport> {
    if cfg.examples == 0 {
        return Err(Error::InvalidArgument("pretraining needs at least one example".into()));
    }
    let mut rule = RuleAgent {
        world: env.world().clone(),
    };
    let mut pairs: Vec<(StateVector, usize)> = Vec::with_capacity(cfg.examples);
    while pairs.len() < cfg.examples {
        let record = run_episode(env, &mut rule, rng)?;
        pairs.extend(record.transitions.into_iter().map(|t| (t.s, t.a)));
    }
    pairs.truncate(cfg.examples);
    pairs.shuffle(rng);
    let n_hold = ((pairs.len() as f64 * cfg.holdout_fraction).round() as usize).min(pairs.len().saturating_sub(1));
    let (held, train) = pairs.split_at(n_hold);
    let held = if held.is_empty() { train } else { held };

    let accuracy = |actor: &Actor| -> Result<f64> {
        let mut hit = 0usize;
        for (s, a) in held {
            hit += (actor.greedy(s)? == *a) as usize;
        }
        Ok(hit as f64 / held.len() as f64)
    };

    let mut opt = RmsProp::new(RmsPropConfig::new(cfg.lr), actor.net.shape().num_params());
    let batch = cfg.batch_size.clamp(1, train.len());
    let mut order: Vec<usize> = (0..train.len()).collect();
    let mut cursor = order.len();
    let mut acc = accuracy(actor)?;
    let mut steps = 0;
    let mut grads = vec![0.0; actor.net.shape().num_params()];
    while steps < cfg.max_steps && acc < cfg.target_accuracy {
        grads.iter_mut().for_each(|g| *g = 0.0);
        for _ in 0..batch {
            if cursor == order.len() {
                order.shuffle(rng);
                cursor = 0;
            }
            let (s, a) = &train[order[cursor]];
            cursor += 1;
            let (out, cache) = actor.net.forward(s)?;
            let g: Vec<f64> = CrossEntropyHead { target: *a }
                .grad(&out)
                .into_iter()
                .map(|g| g / batch as f64)
                .collect();
            actor.net.backward_into(&cache, &g, &mut grads)?;
        }
        opt.step(actor.net.params_mut(), &grads)?;
        steps += 1;
        if steps % 25 == 0 || steps == cfg.max_steps {
            acc = accuracy(actor)?;
        }
    }
    Ok(PretrainReport {
        accuracy: acc,
        steps,
        examples: pairs.len(),
        weak: acc < 0.5,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct EvalMetrics {
    /// Percent of successful dialogues.
    pub success_rate: f64,
    pub avg_reward: f64,
    pub avg_turns: f64,
}

/// Plays `n` dialogues with `policy` and averages the outcome.
pub fn evaluate<P: Policy + ?Sized>(
    policy: &mut P,
    env: &mut DialogueEnv,
    n: usize,
    rng: &mut SimRng,
) -> Result<EvalMetrics> {
    if n == 0 {
        return Err(Error::InvalidArgument("evaluation needs at least one episode".into()));
    }
    let (mut wins, mut reward, mut turns) = (0usize, 0.0, 0usize);
    for _ in 0..n {
        let record = run_episode(env, policy, rng)?;
        wins += record.success() as usize;
        reward += record.total_reward;
        turns += record.turns;
    }
    let n = n as f64;
    Ok(EvalMetrics {
        success_rate: 100.0 * wins as f64 / n,
        avg_reward: reward / n,
        avg_turns: turns as f64 / n,
    })
}

/// Which agent a run trains.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum AgentKind {
    #[serde(rename = "rule")]
    Rule,
    #[serde(rename = "a2c")]
    A2c,
    #[serde(rename = "adv-a2c")]
    AdvA2c,
}

impl AgentKind {
    pub const ALL: [AgentKind; 3] = [AgentKind::Rule, AgentKind::A2c, AgentKind::AdvA2c];

    pub fn label(self) -> &'static str {
        match self {
            AgentKind::Rule => "rule",
            AgentKind::A2c => "a2c",
            AgentKind::AdvA2c => "adv-a2c",
        }
    }
}

impl std::fmt::Display for AgentKind {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.label())
    }
}

impl std::str::FromStr for AgentKind {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        AgentKind::ALL
            .into_iter()
            .find(|k| k.label() == s)
            .ok_or_else(|| Error::InvalidArgument(format!("unknown agent `{s}` (expected rule, a2c or adv-a2c)")))
    }
}

/// When the extrinsic and adversarial updates run relative to each other.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Alternation {
    /// Both updates every episode, extrinsic first.
    #[default]
    PerEpisode,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct TrainConfig {
    pub episodes: usize,
    pub eval_every: usize,
    pub eval_episodes: usize,
    pub final_eval_episodes: usize,
    pub seeds: Vec<u64>,
    pub alternation: Alternation,
    pub hidden: usize,
    pub actor_lr: f64,
    pub critic_lr: f64,
    pub disc_lr: f64,
    pub rms_decay: f64,
    pub rms_eps: f64,
    pub disc_clamp: f64,
    pub a2c: A2cConfig,
    pub pretrain: PretrainConfig,
}

impl Default for TrainConfig {
    fn default() -> Self {
        TrainConfig {
            episodes: 2000,
            eval_every: 100,
            eval_episodes: 500,
            final_eval_episodes: 1000,
            seeds: vec![1, 2, 3, 4, 5],
            alternation: Alternation::PerEpisode,
            hidden: 80,
            actor_lr: 0.0005,
            critic_lr: 0.005,
            disc_lr: 0.001,
            rms_decay: 0.9,
            rms_eps: 1e-8,
            disc_clamp: crate::adversarial::DEFAULT_CLAMP,
            a2c: A2cConfig::default(),
            pretrain: PretrainConfig::default(),
        }
    }
}

impl TrainConfig {
    pub fn validate(&self) -> Result<()> {
        let bad = |m: &str| Err(Error::Config(m.to_string()));
        if self.eval_every == 0 {
            return bad("eval_every must be positive");
        }
        if self.episodes > 0 && self.eval_every > self.episodes {
            return bad("eval_every exceeds the episode budget");
        }
        if self.seeds.is_empty() {
            return bad("at least one seed is required");
        }
        if self.eval_episodes == 0 || self.final_eval_episodes == 0 {
            return bad("evaluation sizes must be positive");
        }
        if self.hidden == 0 {
            return bad("hidden must be positive");
        }
        if !(self.disc_clamp > 0.0 && self.disc_clamp < 0.5) {
            return bad("disc_clamp must lie in (0, 0.5)");
        }
        if !(self.a2c.gamma >= 0.0 && self.a2c.gamma <= 1.0) {
            return bad("gamma must lie in [0, 1]");
        }
        for lr in [self.actor_lr, self.critic_lr, self.disc_lr] {
            self.rms(lr).validate()?;
        }
        Ok(())
    }

    pub fn rms(&self, lr: f64) -> RmsPropConfig {
        RmsPropConfig {
            lr,
            decay: self.rms_decay,
            eps: self.rms_eps,
        }
    }
}

/// One learning-curve snapshot.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CurvePoint {
    pub episode: usize,
    pub metrics: EvalMetrics,
}

/// Trapezoidal area under the success-rate curve, normalised by its span
/// (so it is the curve's mean success rate).
pub fn curve_auc(curve: &[CurvePoint]) -> f64 {
    match curve {
        [] => 0.0,
        [p] => p.metrics.success_rate,
        _ => {
            let span = (curve[curve.len() - 1].episode - curve[0].episode) as f64;
            let area: f64 = curve
                .windows(2)
                .map(|w| {
                    (w[1].episode - w[0].episode) as f64 * (w[0].metrics.success_rate + w[1].metrics.success_rate) / 2.0
                })
                .sum();
            if span > 0.0 {
                area / span
            } else {
                curve[0].metrics.success_rate
            }
        }
    }
}

/// All learnable state of a run.
#[derive(Debug, Clone, PartialEq)]
pub struct Learner {
    pub actor: Actor,
    pub critic: Critic,
    pub gan_critic: GanCritic,
    pub disc: Discriminator,
}

impl Learner {
    /// Actor, critic, intrinsic critic and discriminator, initialised in that
    /// order from the run's init stream.
    pub fn new(env: &DialogueEnv, cfg: &TrainConfig, seed: u64) -> Self {
        let mut rng = stream_rng(seed, Stream::Init);
        let (d, k, h) = (env.state_dim(), env.num_actions(), cfg.hidden);
        let actor = Actor::new(d, k, h, cfg.rms(cfg.actor_lr), &mut rng);
        let critic = Critic::new(d, h, cfg.rms(cfg.critic_lr), &mut rng);
        let gan_critic = GanCritic::new(Critic::new(d, h, cfg.rms(cfg.critic_lr), &mut rng));
        let disc = Discriminator::new(d, k, h, cfg.rms(cfg.disc_lr), cfg.disc_clamp, &mut rng);
        Learner {
            actor,
            critic,
            gan_critic,
            disc,
        }
    }
}

/// What the adversarial half of each iteration does.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum AdversarialMode {
    /// Plain A2C: no adversarial steps.
    Off,
    Active(DiscriminatorMode),
    /// Adversarial loop with every adversarial step skipped.
    Ablated,
}

#[derive(Debug, Clone)]
pub struct TrainOutcome {
    pub learner: Learner,
    pub pretrain: PretrainReport,
    pub curve: Vec<CurvePoint>,
}

/// Greedy evaluation of the actor on the run's fixed evaluation episodes.
pub fn snapshot(actor: &Actor, env: &mut DialogueEnv, n: usize, seed: u64) -> Result<EvalMetrics> {
    evaluate(&mut GreedyPolicy(actor), env, n, &mut stream_rng(seed, Stream::Eval))
}

/// Initialises and pretrains a learner for `seed`.
pub fn pretrained_learner(env: &mut DialogueEnv, cfg: &TrainConfig, seed: u64) -> Result<(Learner, PretrainReport)> {
    let mut learner = Learner::new(env, cfg, seed);
    let report = pretrain_actor(
        &mut learner.actor,
        env,
        &cfg.pretrain,
        &mut stream_rng(seed, Stream::Pretrain),
    )?;
    Ok((learner, report))
}

/// Plain A2C: per episode, one rollout then one extrinsic update.
pub fn train_a2c(env: &mut DialogueEnv, cfg: &TrainConfig, seed: u64) -> Result<TrainOutcome> {
    train_loop(env, cfg, seed, None, AdversarialMode::Off, &mut |_| {})
}

/// The adversarial loop with a learned discriminator.
pub fn train_adversarial_a2c(
    env: &mut DialogueEnv,
    cfg: &TrainConfig,
    seed: u64,
    demos: &DemoBuffer,
) -> Result<TrainOutcome> {
    train_loop(
        env,
        cfg,
        seed,
        Some(demos),
        AdversarialMode::Active(DiscriminatorMode::Learned),
        &mut |_| {},
    )
}

/// Shared training loop; `trace` sees every phase of every iteration.
pub fn train_loop(
    env: &mut DialogueEnv,
    cfg: &TrainConfig,
    seed: u64,
    demos: Option<&DemoBuffer>,
    mode: AdversarialMode,
    trace: &mut dyn FnMut(UpdatePhase),
) -> Result<TrainOutcome> {
    cfg.validate()?;
    if matches!(mode, AdversarialMode::Active(_)) && demos.is_none_or(DemoBuffer::is_empty) {
        return Err(Error::EmptyDemoBuffer);
    }
    let (mut learner, pretrain) = pretrained_learner(env, cfg, seed)?;
    let mut rollout_rng = stream_rng(seed, Stream::Rollout);
    let mut demo_rng = stream_rng(seed, Stream::DemoSample);
    let mut curve = vec![CurvePoint {
        episode: 0,
        metrics: snapshot(&learner.actor, env, cfg.eval_episodes, seed)?,
    }];
    for episode in 1..=cfg.episodes {
        let record = run_episode(env, &mut SamplingPolicy(&learner.actor), &mut rollout_rng)?;
        trace(UpdatePhase::Rollout);
        let transitions = &record.transitions;
        let g = episode_gradients(
            &learner.actor,
            &learner.critic,
            transitions,
            &extrinsic_rewards(transitions),
            &cfg.a2c,
        )?;
        g.apply_actor(&mut learner.actor)?;
        trace(UpdatePhase::ActorExtrinsic);
        g.apply_critic(&mut learner.critic)?;
        trace(UpdatePhase::CriticExtrinsic);

        if let (AdversarialMode::Active(dm), Some(demos)) = (mode, demos) {
            adversarial_update_traced(
                &mut learner.actor,
                &mut learner.gan_critic,
                &mut learner.disc,
                transitions,
                demos,
                &cfg.a2c,
                dm,
                &mut demo_rng,
                trace,
            )?;
        }
        if episode % cfg.eval_every == 0 {
            curve.push(CurvePoint {
                episode,
                metrics: snapshot(&learner.actor, env, cfg.eval_episodes, seed)?,
            });
        }
    }
    if !learner.actor.net.is_finite() {
        return Err(Error::InvalidArgument("actor parameters diverged".into()));
    }
    Ok(TrainOutcome {
        learner,
        pretrain,
        curve,
    })
}
