//! Shared fixtures: a two-state, two-action, horizon-2 MDP whose exact
//! objective and state values are computed by enumeration.
#![allow(dead_code)]

use advdialog::a2c::{episode_gradients, A2cConfig, Actor, Critic};
use advdialog::domain::StateVector;
use advdialog::env::Transition;
use advdialog::nn::{DenseNet, NetShape, RmsPropConfig};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

/// Environment states.
pub const A: usize = 0;
pub const B: usize = 1;

/// Rewards at t = 0 (always in A) and at t = 1 (in A or B).
pub const R0: [f64; 2] = [1.0, 0.0];
pub const R1: [[f64; 2]; 2] = [[0.0, 2.0], [3.0, -1.0]];
/// P(next = A | A, action) at t = 0.
pub const P_NEXT_A: [f64; 2] = [0.7, 0.2];

/// One-hot over the three reachable (state, step) pairs: (A,0), (A,1), (B,1).
pub fn features(state: usize, t: usize) -> StateVector {
    let idx = match (state, t) {
        (A, 0) => 0,
        (A, 1) => 1,
        (B, 1) => 2,
        _ => panic!("unreachable (state, step)"),
    };
    let mut v = vec![0.0; 3];
    v[idx] = 1.0;
    StateVector(v)
}

pub fn oracle_config() -> A2cConfig {
    A2cConfig {
        gamma: 1.0,
        entropy_coef: 0.0,
        max_grad_norm: f64::INFINITY,
    }
}

/// Fixed actor used by the oracle tests.
pub fn oracle_actor() -> Actor {
    let mut rng = ChaCha8Rng::seed_from_u64(11);
    let params: Vec<f64> = (0..NetShape::new(3, 3, 2).num_params())
        .map(|_| rng.gen_range(-1.0..1.0))
        .collect();
    Actor::from_net(
        DenseNet::from_params(NetShape::new(3, 3, 2), params).unwrap(),
        RmsPropConfig::new(0.01),
    )
}

fn pi(actor: &Actor, state: usize, t: usize) -> Vec<f64> {
    actor.action_distribution(&features(state, t)).unwrap()
}

/// Exact expected return by enumerating all trajectories.
pub fn exact_return(actor: &Actor) -> f64 {
    let p0 = pi(actor, A, 0);
    let mut j = 0.0;
    for a0 in 0..2 {
        let mut future = 0.0;
        for (s1, p_s1) in [(A, P_NEXT_A[a0]), (B, 1.0 - P_NEXT_A[a0])] {
            let p1 = pi(actor, s1, 1);
            future += p_s1 * (0..2).map(|a1| p1[a1] * R1[s1][a1]).sum::<f64>();
        }
        j += p0[a0] * (R0[a0] + future);
    }
    j
}

/// Exact gradient of the expected return: central differences of the
/// enumerated objective.
pub fn exact_gradient(actor: &Actor) -> Vec<f64> {
    let h = 1e-6;
    let mut probe = actor.clone();
    (0..actor.net.params().len())
        .map(|i| {
            let orig = probe.net.params()[i];
            probe.net.params_mut()[i] = orig + h;
            let plus = exact_return(&probe);
            probe.net.params_mut()[i] = orig - h;
            let minus = exact_return(&probe);
            probe.net.params_mut()[i] = orig;
            (plus - minus) / (2.0 * h)
        })
        .collect()
}

/// True state values `[V(A,0), V(A,1), V(B,1)]` under the actor.
pub fn true_values(actor: &Actor) -> [f64; 3] {
    let v_a1: f64 = (0..2).map(|a| pi(actor, A, 1)[a] * R1[A][a]).sum();
    let v_b1: f64 = (0..2).map(|a| pi(actor, B, 1)[a] * R1[B][a]).sum();
    let p0 = pi(actor, A, 0);
    let v_a0 = (0..2)
        .map(|a| p0[a] * (R0[a] + P_NEXT_A[a] * v_a1 + (1.0 - P_NEXT_A[a]) * v_b1))
        .sum();
    [v_a0, v_a1, v_b1]
}

/// A critic whose output on each one-hot feature is exactly `values[i] + offset`.
pub fn exact_critic(values: [f64; 3], offset: f64) -> Critic {
    let shape = NetShape::new(3, 3, 1);
    let mut p = vec![0.0; shape.num_params()];
    for i in 0..3 {
        p[i * 3 + i] = 1.0;
    }
    let w2 = 3 * 3 + 3;
    let t = 1f64.tanh();
    for i in 0..3 {
        p[w2 + i] = values[i] / t;
    }
    p[w2 + 3] = offset;
    Critic::from_net(DenseNet::from_params(shape, p).unwrap(), RmsPropConfig::new(0.01))
}

/// Samples one episode of the oracle MDP under `actor`.
pub fn sample_episode<R: Rng>(actor: &Actor, rng: &mut R) -> Vec<Transition> {
    let s0 = features(A, 0);
    let (a0, _) = actor.select_action(&s0, rng).unwrap();
    let s1_state = if rng.gen::<f64>() < P_NEXT_A[a0] { A } else { B };
    let s1 = features(s1_state, 1);
    let (a1, _) = actor.select_action(&s1, rng).unwrap();
    vec![
        Transition {
            s: s0,
            a: a0,
            r: R0[a0],
            s_next: s1.clone(),
            terminal: false,
        },
        Transition {
            s: s1,
            a: a1,
            r: R1[s1_state][a1],
            s_next: StateVector::zeros(3),
            terminal: true,
        },
    ]
}

/// Sampled ascent direction `Σ_t δ_t ∇log π(a_t|s_t)` for one episode
/// (the crate returns the descent gradient, hence the sign flip).
pub fn sampled_gradient(actor: &Actor, critic: &Critic, episode: &[Transition]) -> Vec<f64> {
    let rewards: Vec<f64> = episode.iter().map(|t| t.r).collect();
    let g = episode_gradients(actor, critic, episode, &rewards, &oracle_config()).unwrap();
    g.actor.iter().map(|x| -x).collect()
}
