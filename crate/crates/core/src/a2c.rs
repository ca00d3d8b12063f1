//! Advantage actor-critic with a one-step TD-error advantage.
//!
//! Gradients are summed over an episode and applied once through RMSProp.
//! The action-value `Q(s, a)` is never stored; the TD error
//! `r + γ·V(s') − V(s)` stands in for the advantage.

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::domain::StateVector;
use crate::env::Transition;
use crate::error::{Error, Result};
use crate::nn::{
    clip_grad_norm, entropy, log_softmax, softmax, DenseNet, LossHead, NetShape, PolicyHead, RmsProp, RmsPropConfig,
    SquaredTdHead,
};

/// Stochastic softmax policy `π_θ(a | s)`.
#[derive(Debug, Clone, PartialEq)]
pub struct Actor {
    pub net: DenseNet,
    pub opt: RmsProp,
}

impl Actor {
    pub fn new<R: Rng + ?Sized>(
        state_dim: usize,
        n_actions: usize,
        hidden: usize,
        opt: RmsPropConfig,
        rng: &mut R,
    ) -> Self {
        let net = DenseNet::init(NetShape::new(state_dim, hidden, n_actions), rng);
        Self::from_net(net, opt)
    }

    pub fn from_net(net: DenseNet, opt: RmsPropConfig) -> Self {
        let n = net.shape().num_params();
        Actor {
            net,
            opt: RmsProp::new(opt, n),
        }
    }

    pub fn n_actions(&self) -> usize {
        self.net.shape().output
    }

    pub fn action_distribution(&self, s: &[f64]) -> Result<Vec<f64>> {
        Ok(softmax(&self.net.output(s)?))
    }

    /// Samples an action; returns it with its log-probability.
    pub fn select_action<R: Rng + ?Sized>(&self, s: &[f64], rng: &mut R) -> Result<(usize, f64)> {
        let logits = self.net.output(s)?;
        let probs = softmax(&logits);
        let a = sample_index(&probs, rng);
        Ok((a, log_softmax(&logits)[a]))
    }

    /// Argmax action, lowest index on ties.
    pub fn greedy(&self, s: &[f64]) -> Result<usize> {
        let logits = self.net.output(s)?;
        Ok(argmax(&logits))
    }
}

pub fn argmax(xs: &[f64]) -> usize {
    let mut best = 0;
    for (i, &x) in xs.iter().enumerate() {
        if x > xs[best] {
            best = i;
        }
    }
    best
}

/// Inverse-CDF draw from a probability vector.
pub fn sample_index<R: Rng + ?Sized>(probs: &[f64], rng: &mut R) -> usize {
    let u: f64 = rng.gen();
    let mut cum = 0.0;
    for (i, &p) in probs.iter().enumerate() {
        cum += p;
        if u < cum {
            return i;
        }
    }
    // Rounding left `cum` just under 1; fall back to the last positive entry.
    probs.iter().rposition(|&p| p > 0.0).unwrap_or(probs.len() - 1)
}

/// State-value function `V(s)`.
#[derive(Debug, Clone, PartialEq)]
pub struct Critic {
    pub net: DenseNet,
    pub opt: RmsProp,
}

impl Critic {
    pub fn new<R: Rng + ?Sized>(state_dim: usize, hidden: usize, opt: RmsPropConfig, rng: &mut R) -> Self {
        let net = DenseNet::init(NetShape::new(state_dim, hidden, 1), rng);
        Self::from_net(net, opt)
    }

    pub fn from_net(net: DenseNet, opt: RmsPropConfig) -> Self {
        let n = net.shape().num_params();
        Critic {
            net,
            opt: RmsProp::new(opt, n),
        }
    }

    pub fn value(&self, s: &[f64]) -> Result<f64> {
        Ok(self.net.output(s)?[0])
    }
}

/// `δ = r + γ·V(s')·[not terminal] − V(s)`.
pub fn td_error(r: f64, v_s: f64, v_next: f64, gamma: f64, terminal: bool) -> f64 {
    let bootstrap = if terminal { 0.0 } else { gamma * v_next };
    r + bootstrap - v_s
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct A2cConfig {
    pub gamma: f64,
    /// Weight of the policy-entropy bonus (0 disables it).
    pub entropy_coef: f64,
    /// Max L2 norm of each network's episode gradient (∞ disables clipping).
    pub max_grad_norm: f64,
}

impl Default for A2cConfig {
    fn default() -> Self {
        A2cConfig {
            gamma: 0.9,
            entropy_coef: 0.0,
            max_grad_norm: f64::INFINITY,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct UpdateStats {
    pub mean_abs_td: f64,
    pub mean_entropy: f64,
}

/// Episode-summed gradients for one actor/critic pair, before application.
#[derive(Debug, Clone)]
pub struct EpisodeGradients {
    pub actor: Vec<f64>,
    pub critic: Vec<f64>,
    pub deltas: Vec<f64>,
    pub stats: UpdateStats,
}

/// Rewards stored in the transitions themselves.
pub fn extrinsic_rewards(transitions: &[Transition]) -> Vec<f64> {
    transitions.iter().map(|t| t.r).collect()
}

/// Accumulates `−δ·∇log π(a|s)` (plus the entropy term) for the actor and
/// the semi-gradient of `½δ²` for the critic, with every δ computed from the
/// critic as it stands before the update. `rewards[t]` replaces the reward
/// of transition `t`.
pub fn episode_gradients(
    actor: &Actor,
    critic: &Critic,
    transitions: &[Transition],
    rewards: &[f64],
    cfg: &A2cConfig,
) -> Result<EpisodeGradients> {
    if transitions.is_empty() {
        return Err(Error::EmptyBatch("episode has no transitions"));
    }
    if rewards.len() != transitions.len() {
        return Err(Error::Dimension {
            expected: transitions.len(),
            got: rewards.len(),
        });
    }
    let mut g_actor = vec![0.0; actor.net.shape().num_params()];
    let mut g_critic = vec![0.0; critic.net.shape().num_params()];
    let mut deltas = Vec::with_capacity(transitions.len());
    let mut abs_td = 0.0;
    let mut ent = 0.0;
    for (t, &r) in transitions.iter().zip(rewards) {
        let (v_out, v_cache) = critic.net.forward(&t.s)?;
        let v_next = if t.terminal { 0.0 } else { critic.value(&t.s_next)? };
        let delta = td_error(r, v_out[0], v_next, cfg.gamma, t.terminal);

        let (logits, a_cache) = actor.net.forward(&t.s)?;
        if t.a >= logits.len() {
            return Err(Error::ActionOutOfRange {
                index: t.a,
                size: logits.len(),
            });
        }
        let head = PolicyHead {
            action: t.a,
            advantage: delta,
            entropy_coef: cfg.entropy_coef,
        };
        actor.net.backward_into(&a_cache, &head.grad(&logits), &mut g_actor)?;

        let target = SquaredTdHead {
            target: v_out[0] + delta,
        };
        critic
            .net
            .backward_into(&v_cache, &target.grad(&v_out), &mut g_critic)?;

        deltas.push(delta);
        abs_td += delta.abs();
        ent += entropy(&softmax(&logits));
    }
    clip_grad_norm(&mut g_actor, cfg.max_grad_norm);
    clip_grad_norm(&mut g_critic, cfg.max_grad_norm);
    let n = transitions.len() as f64;
    Ok(EpisodeGradients {
        actor: g_actor,
        critic: g_critic,
        deltas,
        stats: UpdateStats {
            mean_abs_td: abs_td / n,
            mean_entropy: ent / n,
        },
    })
}

impl EpisodeGradients {
    pub fn apply_actor(&self, actor: &mut Actor) -> Result<()> {
        actor.opt.step(actor.net.params_mut(), &self.actor)
    }

    pub fn apply_critic(&self, critic: &mut Critic) -> Result<()> {
        critic.opt.step(critic.net.params_mut(), &self.critic)
    }
}

/// One per-episode A2C update: actor step, then critic step.
pub fn a2c_update(
    actor: &mut Actor,
    critic: &mut Critic,
    transitions: &[Transition],
    rewards: &[f64],
    cfg: &A2cConfig,
) -> Result<UpdateStats> {
    let g = episode_gradients(actor, critic, transitions, rewards, cfg)?;
    g.apply_actor(actor)?;
    g.apply_critic(critic)?;
    Ok(g.stats)
}

/// Critic-only TD(0) update (used for policy evaluation).
pub fn critic_update(critic: &mut Critic, transitions: &[Transition], rewards: &[f64], gamma: f64) -> Result<f64> {
    if transitions.is_empty() {
        return Err(Error::EmptyBatch("episode has no transitions"));
    }
    let mut g = vec![0.0; critic.net.shape().num_params()];
    let mut abs_td = 0.0;
    for (t, &r) in transitions.iter().zip(rewards) {
        let (v, cache) = critic.net.forward(&t.s)?;
        let v_next = if t.terminal { 0.0 } else { critic.value(&t.s_next)? };
        let delta = td_error(r, v[0], v_next, gamma, t.terminal);
        critic.net.backward_into(&cache, &[-delta], &mut g)?;
        abs_td += delta.abs();
    }
    critic.opt.step(critic.net.params_mut(), &g)?;
    Ok(abs_td / transitions.len() as f64)
}

/// Convenience for callers holding a [`StateVector`].
pub fn greedy_action(actor: &Actor, s: &StateVector) -> Result<usize> {
    actor.greedy(s)
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn sv(v: &[f64]) -> StateVector {
        StateVector(v.to_vec())
    }

    #[test]
    fn td_error_examples() {
        assert!((td_error(1.0, 1.0, 2.0, 0.9, false) - 1.8).abs() < 1e-12);
        assert_eq!(td_error(3.0, 3.0, 100.0, 0.9, true), 0.0);
        assert_eq!(td_error(-1.0, 0.0, 0.0, 0.9, false), -1.0);
    }

    #[test]
    fn zero_actor_is_uniform() {
        let actor = Actor::from_net(DenseNet::zeros(NetShape::new(145, 80, 64)), RmsPropConfig::new(0.005));
        let p = actor.action_distribution(&[0.0; 145]).unwrap();
        assert!(p.iter().all(|&x| (x - 1.0 / 64.0).abs() < 1e-15));
        let mut rng = ChaCha8Rng::seed_from_u64(0);
        let (_, logp) = actor.select_action(&[0.0; 145], &mut rng).unwrap();
        assert!((logp + 64f64.ln()).abs() < 1e-12);
        assert!((logp + 4.1589).abs() < 1e-4);
    }

    #[test]
    fn forced_distribution_always_samples_first() {
        let mut rng = ChaCha8Rng::seed_from_u64(9);
        for _ in 0..1000 {
            assert_eq!(sample_index(&[1.0, 0.0, 0.0], &mut rng), 0);
        }
        let mut params = vec![0.0; NetShape::new(1, 1, 3).num_params()];
        // b2 = [800, 0, 0]: softmax saturates to exactly [1, 0, 0].
        params[5] = 800.0;
        let actor = Actor::from_net(
            DenseNet::from_params(NetShape::new(1, 1, 3), params).unwrap(),
            RmsPropConfig::new(0.01),
        );
        let (a, logp) = actor.select_action(&[0.0], &mut rng).unwrap();
        assert_eq!((a, logp), (0, 0.0));
    }

    #[test]
    fn zero_td_leaves_parameters_unchanged() {
        let mut rng = ChaCha8Rng::seed_from_u64(2);
        let mut actor = Actor::new(3, 4, 2, RmsPropConfig::new(0.01), &mut rng);
        let mut critic = Critic::from_net(DenseNet::zeros(NetShape::new(3, 4, 1)), RmsPropConfig::new(0.01));
        let t = Transition {
            s: sv(&[1.0, 0.0, 0.5]),
            a: 1,
            r: 0.0,
            s_next: sv(&[0.0, 1.0, 0.0]),
            terminal: false,
        };
        let (a0, c0) = (actor.clone(), critic.clone());
        a2c_update(
            &mut actor,
            &mut critic,
            &[t.clone(), t],
            &[0.0, 0.0],
            &A2cConfig::default(),
        )
        .unwrap();
        assert_eq!(actor.net, a0.net);
        assert_eq!(critic.net, c0.net);
    }

    #[test]
    fn empty_episode_is_an_error() {
        let mut rng = ChaCha8Rng::seed_from_u64(2);
        let mut actor = Actor::new(2, 3, 2, RmsPropConfig::new(0.01), &mut rng);
        let mut critic = Critic::new(2, 3, RmsPropConfig::new(0.01), &mut rng);
        assert!(a2c_update(&mut actor, &mut critic, &[], &[], &A2cConfig::default()).is_err());
    }

    #[test]
    fn single_transition_moves_along_delta_grad_log_pi() {
        // The applied actor gradient must equal −δ·∇log π(a|s), checked by
        // central differences of log π.
        let mut rng = ChaCha8Rng::seed_from_u64(4);
        let actor = Actor::new(3, 5, 4, RmsPropConfig::new(0.01), &mut rng);
        let critic = Critic::from_net(DenseNet::zeros(NetShape::new(3, 4, 1)), RmsPropConfig::new(0.01));
        let t = Transition {
            s: sv(&[0.2, -0.4, 1.0]),
            a: 2,
            r: 1.7,
            s_next: sv(&[0.0; 3]),
            terminal: true,
        };
        let g = episode_gradients(&actor, &critic, std::slice::from_ref(&t), &[1.7], &A2cConfig::default()).unwrap();
        assert!((g.deltas[0] - 1.7).abs() < 1e-15);
        let mut probe = actor.net.clone();
        for i in 0..probe.params().len() {
            let orig = probe.params()[i];
            probe.params_mut()[i] = orig + 1e-6;
            let up = log_softmax(&probe.output(&t.s).unwrap())[2];
            probe.params_mut()[i] = orig - 1e-6;
            let down = log_softmax(&probe.output(&t.s).unwrap())[2];
            probe.params_mut()[i] = orig;
            let fd = (up - down) / 2e-6;
            assert!((g.actor[i] + 1.7 * fd).abs() < 1e-7, "param {i}");
        }
    }

    #[test]
    fn two_armed_bandit_prefers_rewarding_arm() {
        let mut rng = ChaCha8Rng::seed_from_u64(17);
        let mut actor = Actor::new(1, 2, 8, RmsPropConfig::new(0.005), &mut rng);
        let mut critic = Critic::new(1, 8, RmsPropConfig::new(0.005), &mut rng);
        let s = sv(&[1.0]);
        for _ in 0..2000 {
            let (a, _) = actor.select_action(&s, &mut rng).unwrap();
            let r = if a == 0 { 1.0 } else { 0.0 };
            let t = Transition {
                s: s.clone(),
                a,
                r,
                s_next: sv(&[0.0]),
                terminal: true,
            };
            a2c_update(&mut actor, &mut critic, &[t], &[r], &A2cConfig::default()).unwrap();
        }
        let p = actor.action_distribution(&s).unwrap();
        assert!(p[0] > 0.9, "P(arm 0) = {}", p[0]);
    }
}
