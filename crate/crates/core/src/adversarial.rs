//! The discriminator critic.
//!
//! `D(s, a)` is the probability that a state-action pair came from an expert
//! demonstration; the actor receives `−ln(1 − D(s, a))` as an intrinsic
//! reward, scored by its own value function ([`GanCritic`]).

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::a2c::{episode_gradients, td_error, A2cConfig, Actor, Critic, UpdateStats};
use crate::domain::StateVector;
use crate::env::{run_episode, DialogueEnv, Policy, SimRng, Transition};
use crate::error::{Error, Result};
use crate::nn::{BceHead, DenseNet, LossHead, NetShape, RmsProp, RmsPropConfig};
use crate::trainer::UpdatePhase;

/// Default probability clamp; bounds the intrinsic reward by `−ln 1e-6 ≈ 13.8155`.
pub const DEFAULT_CLAMP: f64 = 1e-6;

/// Binary classifier over `state ⊕ one-hot(action)`.
#[derive(Debug, Clone, PartialEq)]
pub struct Discriminator {
    pub net: DenseNet,
    pub opt: RmsProp,
    pub clamp: f64,
    state_dim: usize,
    n_actions: usize,
}

impl Discriminator {
    pub fn new<R: Rng + ?Sized>(
        state_dim: usize,
        n_actions: usize,
        hidden: usize,
        opt: RmsPropConfig,
        clamp: f64,
        rng: &mut R,
    ) -> Self {
        let net = DenseNet::init(NetShape::new(state_dim + n_actions, hidden, 1), rng);
        Self::from_net(net, n_actions, opt, clamp)
    }

    pub fn from_net(net: DenseNet, n_actions: usize, opt: RmsPropConfig, clamp: f64) -> Self {
        let shape = net.shape();
        let n = shape.num_params();
        Discriminator {
            state_dim: shape.input.saturating_sub(n_actions),
            n_actions,
            net,
            opt: RmsProp::new(opt, n),
            clamp,
        }
    }

    pub fn n_actions(&self) -> usize {
        self.n_actions
    }

    pub fn input(&self, s: &[f64], a: usize) -> Result<Vec<f64>> {
        if s.len() != self.state_dim {
            return Err(Error::Dimension {
                expected: self.state_dim,
                got: s.len(),
            });
        }
        if a >= self.n_actions {
            return Err(Error::ActionOutOfRange {
                index: a,
                size: self.n_actions,
            });
        }
        let mut x = Vec::with_capacity(self.state_dim + self.n_actions);
        x.extend_from_slice(s);
        x.resize(self.state_dim + self.n_actions, 0.0);
        x[self.state_dim + a] = 1.0;
        Ok(x)
    }

    pub fn logit(&self, s: &[f64], a: usize) -> Result<f64> {
        Ok(self.net.output(&self.input(s, a)?)?[0])
    }

    /// Clamped probability that `(s, a)` is expert.
    pub fn prob(&self, s: &[f64], a: usize) -> Result<f64> {
        Ok(self.head(1.0).prob(self.logit(s, a)?))
    }

    pub fn intrinsic_reward(&self, s: &[f64], a: usize) -> Result<f64> {
        Ok(intrinsic_reward(self.prob(s, a)?))
    }

    fn head(&self, label: f64) -> BceHead {
        BceHead {
            label,
            clamp: self.clamp,
        }
    }

    /// Fraction of pairs classified correctly at threshold 0.5.
    pub fn accuracy(&self, sim: &[(&[f64], usize)], demo: &[(&[f64], usize)]) -> Result<f64> {
        let mut correct = 0usize;
        for &(s, a) in sim {
            correct += (self.prob(s, a)? < 0.5) as usize;
        }
        for &(s, a) in demo {
            correct += (self.prob(s, a)? > 0.5) as usize;
        }
        Ok(correct as f64 / (sim.len() + demo.len()).max(1) as f64)
    }

    /// Mean binary cross-entropy, demo labelled 1 and simulation 0.
    pub fn loss(&self, sim: &[(&[f64], usize)], demo: &[(&[f64], usize)]) -> Result<f64> {
        let mut total = 0.0;
        for (batch, label) in [(sim, 0.0), (demo, 1.0)] {
            let head = self.head(label);
            for &(s, a) in batch {
                total += head.loss(&[self.logit(s, a)?]);
            }
        }
        Ok(total / (sim.len() + demo.len()).max(1) as f64)
    }
}

/// `−ln(1 − p)`.
pub fn intrinsic_reward(p: f64) -> f64 {
    -(1.0 - p).ln()
}

/// TD error of the intrinsic value function; same arithmetic as the extrinsic one.
pub fn gan_td_error(r_gan: f64, v_s: f64, v_next: f64, gamma: f64, terminal: bool) -> f64 {
    td_error(r_gan, v_s, v_next, gamma, terminal)
}

/// One RMSProp step on the mean cross-entropy of both batches; returns the
/// loss before the step.
pub fn disc_update(disc: &mut Discriminator, sim: &[(&[f64], usize)], demo: &[(&[f64], usize)]) -> Result<f64> {
    if sim.is_empty() {
        return Err(Error::EmptyBatch("simulation batch"));
    }
    if demo.is_empty() {
        return Err(Error::EmptyBatch("demonstration batch"));
    }
    let n = (sim.len() + demo.len()) as f64;
    let mut grads = vec![0.0; disc.net.shape().num_params()];
    let mut total = 0.0;
    for (batch, label) in [(sim, 0.0), (demo, 1.0)] {
        let head = disc.head(label);
        for &(s, a) in batch {
            let (out, cache) = disc.net.forward(&disc.input(s, a)?)?;
            total += head.loss(&out);
            let g: Vec<f64> = head.grad(&out).into_iter().map(|g| g / n).collect();
            disc.net.backward_into(&cache, &g, &mut grads)?;
        }
    }
    disc.opt.step(disc.net.params_mut(), &grads)?;
    Ok(total / n)
}

/// Value function of the intrinsic reward stream. Distinct from the
/// extrinsic [`Critic`] so the two can never share parameters.
#[derive(Debug, Clone, PartialEq)]
pub struct GanCritic {
    pub inner: Critic,
}

impl GanCritic {
    pub fn new(inner: Critic) -> Self {
        GanCritic { inner }
    }

    pub fn value(&self, s: &[f64]) -> Result<f64> {
        self.inner.value(s)
    }
}

/// Successful dialogue kept as a demonstration, with the goal and simulator
/// seed needed to replay it.
#[derive(Debug, Clone, PartialEq)]
pub struct DemoEpisode {
    pub goal_index: usize,
    pub seed: u64,
    pub pairs: Vec<(StateVector, usize)>,
}

#[derive(Debug, Clone, PartialEq, Default)]
pub struct DemoBuffer {
    episodes: Vec<DemoEpisode>,
    index: Vec<(usize, usize)>,
}

impl DemoBuffer {
    pub fn new(episodes: Vec<DemoEpisode>) -> Self {
        let index = episodes
            .iter()
            .enumerate()
            .flat_map(|(e, ep)| (0..ep.pairs.len()).map(move |p| (e, p)))
            .collect();
        DemoBuffer { episodes, index }
    }

    pub fn episodes(&self) -> &[DemoEpisode] {
        &self.episodes
    }

    /// Number of stored state-action pairs.
    pub fn len(&self) -> usize {
        self.index.len()
    }

    pub fn is_empty(&self) -> bool {
        self.index.is_empty()
    }

    pub fn pair(&self, i: usize) -> (&StateVector, usize) {
        let (e, p) = self.index[i];
        let (s, a) = &self.episodes[e].pairs[p];
        (s, *a)
    }

    pub fn pairs(&self) -> impl Iterator<Item = (&StateVector, usize)> {
        self.episodes.iter().flat_map(|e| e.pairs.iter().map(|(s, a)| (s, *a)))
    }

    /// Uniform draw of `n` pairs with replacement.
    pub fn sample<R: Rng + ?Sized>(&self, n: usize, rng: &mut R) -> Result<Vec<(&StateVector, usize)>> {
        if self.is_empty() {
            return Err(Error::EmptyDemoBuffer);
        }
        Ok((0..n).map(|_| self.pair(rng.gen_range(0..self.len()))).collect())
    }
}

/// How the discriminator behaves during adversarial updates.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub enum DiscriminatorMode {
    /// Trained every episode.
    Learned,
    /// Reports this probability for every pair and is never trained.
    Frozen(f64),
}

#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct AdversarialStats {
    pub actor: UpdateStats,
    pub mean_intrinsic_reward: f64,
    /// Discriminator loss before its step; `None` when frozen.
    pub disc_loss: Option<f64>,
}

/// Intrinsic rewards for an episode under `mode`.
pub fn relabel(disc: &Discriminator, transitions: &[Transition], mode: DiscriminatorMode) -> Result<Vec<f64>> {
    transitions
        .iter()
        .map(|t| match mode {
            DiscriminatorMode::Learned => disc.intrinsic_reward(&t.s, t.a),
            DiscriminatorMode::Frozen(p) => Ok(intrinsic_reward(p.clamp(disc.clamp, 1.0 - disc.clamp))),
        })
        .collect()
}

/// Adversarial half of a training iteration: sample demonstrations, relabel
/// the episode with intrinsic rewards, step the actor with the intrinsic TD
/// error, step the intrinsic critic, then step the discriminator on the
/// episode's pairs against an equal-sized demo sample.
#[allow(clippy::too_many_arguments)]
pub fn adversarial_update(
    actor: &mut Actor,
    gan_critic: &mut GanCritic,
    disc: &mut Discriminator,
    transitions: &[Transition],
    demos: &DemoBuffer,
    cfg: &A2cConfig,
    mode: DiscriminatorMode,
    rng: &mut SimRng,
) -> Result<AdversarialStats> {
    adversarial_update_traced(actor, gan_critic, disc, transitions, demos, cfg, mode, rng, &mut |_| {})
}

#[allow(clippy::too_many_arguments)]
pub fn adversarial_update_traced(
    actor: &mut Actor,
    gan_critic: &mut GanCritic,
    disc: &mut Discriminator,
    transitions: &[Transition],
    demos: &DemoBuffer,
    cfg: &A2cConfig,
    mode: DiscriminatorMode,
    rng: &mut SimRng,
    trace: &mut dyn FnMut(UpdatePhase),
) -> Result<AdversarialStats> {
    if demos.is_empty() {
        return Err(Error::EmptyDemoBuffer);
    }
    if transitions.is_empty() {
        return Err(Error::EmptyBatch("episode has no transitions"));
    }
    let demo_batch = demos.sample(transitions.len(), rng)?;
    trace(UpdatePhase::SampleDemos);

    let rewards = relabel(disc, transitions, mode)?;
    let g = episode_gradients(actor, &gan_critic.inner, transitions, &rewards, cfg)?;
    g.apply_actor(actor)?;
    trace(UpdatePhase::ActorIntrinsic);
    g.apply_critic(&mut gan_critic.inner)?;
    trace(UpdatePhase::GanCritic);

    let disc_loss = match mode {
        DiscriminatorMode::Learned => {
            let sim: Vec<(&[f64], usize)> = transitions.iter().map(|t| (t.s.as_slice(), t.a)).collect();
            let demo: Vec<(&[f64], usize)> = demo_batch.iter().map(|(s, a)| (s.as_slice(), *a)).collect();
            let loss = disc_update(disc, &sim, &demo)?;
            trace(UpdatePhase::Discriminator);
            Some(loss)
        }
        DiscriminatorMode::Frozen(_) => None,
    };
    Ok(AdversarialStats {
        actor: g.stats,
        mean_intrinsic_reward: rewards.iter().sum::<f64>() / rewards.len() as f64,
        disc_loss,
    })
}

/// Runs `policy` until `n` successful dialogues are stored or `max_attempts`
/// episodes have been played. Returns the buffer and the attempts used.
pub fn collect_demonstrations<P: Policy + ?Sized>(
    policy: &mut P,
    env: &mut DialogueEnv,
    n: usize,
    max_attempts: usize,
    rng: &mut SimRng,
) -> Result<(DemoBuffer, usize)> {
    if n == 0 {
        return Err(Error::InvalidArgument("need at least one demonstration".into()));
    }
    let mut kept = Vec::with_capacity(n);
    let mut attempts = 0;
    while kept.len() < n {
        if attempts >= max_attempts {
            return Err(Error::DemoBudgetExhausted {
                wanted: n,
                successes: kept.len(),
                attempts,
            });
        }
        attempts += 1;
        let record = run_episode(env, policy, rng)?;
        if record.success() {
            kept.push(DemoEpisode {
                goal_index: record.goal_index,
                seed: record.episode_seed,
                pairs: record.transitions.into_iter().map(|t| (t.s, t.a)).collect(),
            });
        }
    }
    Ok((DemoBuffer::new(kept), attempts))
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;

    fn zero_disc(state_dim: usize, n_actions: usize) -> Discriminator {
        Discriminator::from_net(
            DenseNet::zeros(NetShape::new(state_dim + n_actions, 4, 1)),
            n_actions,
            RmsPropConfig::new(0.001),
            DEFAULT_CLAMP,
        )
    }

    #[test]
    fn zero_discriminator_is_half() {
        let d = zero_disc(3, 2);
        assert_eq!(d.prob(&[0.1, 0.2, 0.3], 1).unwrap(), 0.5);
        assert!((d.intrinsic_reward(&[0.0; 3], 0).unwrap() - 2f64.ln()).abs() < 1e-15);
        assert!(d.prob(&[0.0; 2], 0).is_err());
        assert!(d.prob(&[0.0; 3], 2).is_err());
    }

    #[test]
    fn forced_logits() {
        let mut d = zero_disc(1, 1);
        let b2 = d.net.params().len() - 1;
        d.net.params_mut()[b2] = 1e6;
        assert_eq!(d.prob(&[0.0], 0).unwrap(), 1.0 - DEFAULT_CLAMP);
        d.net.params_mut()[b2] = -1e6;
        assert_eq!(d.prob(&[0.0], 0).unwrap(), DEFAULT_CLAMP);
        d.net.params_mut()[b2] = 3f64.ln();
        assert!((d.prob(&[0.0], 0).unwrap() - 0.75).abs() < 1e-15);
    }

    #[test]
    #[allow(clippy::approx_constant)] // ln 2 spelled out as an independent oracle
    fn intrinsic_reward_examples() {
        assert!((intrinsic_reward(0.5) - 0.693_147_180_559_945_3).abs() < 1e-15);
        assert!((intrinsic_reward(DEFAULT_CLAMP) - 1e-6).abs() < 1e-12);
        assert!((intrinsic_reward(1.0 - (-2f64).exp()) - 2.0).abs() < 1e-12);
    }

    #[test]
    fn gan_td_examples() {
        let v = 2f64.ln() / (1.0 - 0.9);
        assert!(gan_td_error(2f64.ln(), v, v, 0.9, false).abs() < 1e-12);
        assert_eq!(gan_td_error(0.3, 0.3, 9.0, 0.9, true), 0.0);
        assert_eq!(gan_td_error(1.0, 0.0, 0.0, 0.9, false), 1.0);
    }

    #[test]
    fn indistinguishable_batches_have_loss_at_least_ln2() {
        let mut rng = SimRng::seed_from_u64(1);
        let mut d = Discriminator::new(3, 2, 6, RmsPropConfig::new(0.001), DEFAULT_CLAMP, &mut rng);
        let states: Vec<Vec<f64>> = (0..8)
            .map(|_| (0..3).map(|_| rng.gen_range(0.0..1.0)).collect())
            .collect();
        let batch: Vec<(&[f64], usize)> = states.iter().enumerate().map(|(i, s)| (s.as_slice(), i % 2)).collect();
        let loss = disc_update(&mut d, &batch, &batch).unwrap();
        assert!(loss >= 2f64.ln());
    }

    #[test]
    fn confident_correct_classifier_loss_is_tiny() {
        // Action 1 is expert, action 0 is simulation; the weights make the
        // logit huge and of the right sign.
        let shape = NetShape::new(3, 1, 1);
        // inputs: [s, onehot0, onehot1]; hidden = tanh(−50·a0 + 50·a1)
        let params = vec![0.0, -50.0, 50.0, 0.0, 1e3, 0.0];
        let d = Discriminator::from_net(
            DenseNet::from_params(shape, params).unwrap(),
            2,
            RmsPropConfig::new(0.001),
            DEFAULT_CLAMP,
        );
        let s = [0.5];
        let loss = d.loss(&[(&s, 0)], &[(&s, 1)]).unwrap();
        assert!(loss <= -(1.0 - DEFAULT_CLAMP).ln() + 1e-15, "{loss}");
    }

    #[test]
    fn empty_batches_and_buffers_are_errors() {
        let mut d = zero_disc(1, 1);
        let s = [0.0];
        assert!(disc_update(&mut d, &[], &[(&s, 0)]).is_err());
        assert!(disc_update(&mut d, &[(&s, 0)], &[]).is_err());
        let mut rng = SimRng::seed_from_u64(0);
        assert!(DemoBuffer::default().sample(3, &mut rng).is_err());
    }
}
