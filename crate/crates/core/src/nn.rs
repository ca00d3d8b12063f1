//! Single-hidden-layer networks with analytic backprop and RMSProp.
//!
//! Parameters live in one flat buffer laid out as `[W1 | b1 | W2 | b2]`,
//! row-major, so optimizers, gradient checks and checkpoints all work on a
//! plain `&[f64]`.

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Floor on the denominator of [`relative_error`].
pub const GRAD_CHECK_FLOOR: f64 = 1e-6;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct NetShape {
    pub input: usize,
    pub hidden: usize,
    pub output: usize,
}

impl NetShape {
    pub fn new(input: usize, hidden: usize, output: usize) -> Self {
        NetShape { input, hidden, output }
    }

    pub fn num_params(&self) -> usize {
        self.hidden * self.input + self.hidden + self.output * self.hidden + self.output
    }

    fn w1_len(&self) -> usize {
        self.hidden * self.input
    }
    fn b1_at(&self) -> usize {
        self.w1_len()
    }
    fn w2_at(&self) -> usize {
        self.b1_at() + self.hidden
    }
    fn b2_at(&self) -> usize {
        self.w2_at() + self.output * self.hidden
    }
}

/// `output = W2 · tanh(W1 · x + b1) + b2`.
#[derive(Debug, Clone, PartialEq)]
pub struct DenseNet {
    shape: NetShape,
    params: Vec<f64>,
}

/// Activations kept from a forward pass for backprop.
#[derive(Debug, Clone, PartialEq)]
pub struct ForwardCache {
    input_dim: usize,
    /// Non-zero input coordinates; the state features are mostly zero.
    active: Vec<(usize, f64)>,
    hidden: Vec<f64>,
}

impl ForwardCache {
    pub fn hidden(&self) -> &[f64] {
        &self.hidden
    }
}

impl DenseNet {
    pub fn zeros(shape: NetShape) -> Self {
        DenseNet {
            shape,
            params: vec![0.0; shape.num_params()],
        }
    }

    /// Uniform weights in `±sqrt(6 / (fan_in + fan_out))`, zero biases.
    pub fn init<R: Rng + ?Sized>(shape: NetShape, rng: &mut R) -> Self {
        let mut net = Self::zeros(shape);
        let l1 = glorot_limit(shape.input, shape.hidden);
        let l2 = glorot_limit(shape.hidden, shape.output);
        let w2_at = shape.w2_at();
        let b2_at = shape.b2_at();
        for w in &mut net.params[..shape.w1_len()] {
            *w = if l1 > 0.0 { rng.gen_range(-l1..l1) } else { 0.0 };
        }
        for w in &mut net.params[w2_at..b2_at] {
            *w = if l2 > 0.0 { rng.gen_range(-l2..l2) } else { 0.0 };
        }
        net
    }

    pub fn from_params(shape: NetShape, params: Vec<f64>) -> Result<Self> {
        if params.len() != shape.num_params() {
            return Err(Error::Dimension {
                expected: shape.num_params(),
                got: params.len(),
            });
        }
        Ok(DenseNet { shape, params })
    }

    pub fn shape(&self) -> NetShape {
        self.shape
    }

    pub fn params(&self) -> &[f64] {
        &self.params
    }

    pub fn params_mut(&mut self) -> &mut [f64] {
        &mut self.params
    }

    pub fn w1(&self) -> &[f64] {
        &self.params[..self.shape.w1_len()]
    }
    pub fn b1(&self) -> &[f64] {
        &self.params[self.shape.b1_at()..self.shape.w2_at()]
    }
    pub fn w2(&self) -> &[f64] {
        &self.params[self.shape.w2_at()..self.shape.b2_at()]
    }
    pub fn b2(&self) -> &[f64] {
        &self.params[self.shape.b2_at()..]
    }

    pub fn is_finite(&self) -> bool {
        self.params.iter().all(|p| p.is_finite())
    }

    pub fn forward(&self, x: &[f64]) -> Result<(Vec<f64>, ForwardCache)> {
        let NetShape { input, hidden, output } = self.shape;
        if x.len() != input {
            return Err(Error::Dimension {
                expected: input,
                got: x.len(),
            });
        }
        let active: Vec<(usize, f64)> = x
            .iter()
            .enumerate()
            .filter(|(_, &v)| v != 0.0)
            .map(|(i, &v)| (i, v))
            .collect();
        let w1 = self.w1();
        let b1 = self.b1();
        let mut h = Vec::with_capacity(hidden);
        for j in 0..hidden {
            let row = &w1[j * input..(j + 1) * input];
            let mut z = b1[j];
            for &(i, v) in &active {
                z += row[i] * v;
            }
            h.push(z.tanh());
        }
        let w2 = self.w2();
        let b2 = self.b2();
        let out = (0..output)
            .map(|k| {
                let row = &w2[k * hidden..(k + 1) * hidden];
                b2[k] + row.iter().zip(&h).map(|(w, a)| w * a).sum::<f64>()
            })
            .collect();
        Ok((
            out,
            ForwardCache {
                input_dim: input,
                active,
                hidden: h,
            },
        ))
    }

    pub fn output(&self, x: &[f64]) -> Result<Vec<f64>> {
        Ok(self.forward(x)?.0)
    }

    /// Adds the gradient of `output · output_grad` with respect to every
    /// parameter into `grads`.
    pub fn backward_into(&self, cache: &ForwardCache, output_grad: &[f64], grads: &mut [f64]) -> Result<()> {
        let s = self.shape;
        if cache.input_dim != s.input || cache.hidden.len() != s.hidden {
            return Err(Error::Dimension {
                expected: s.hidden,
                got: cache.hidden.len(),
            });
        }
        if output_grad.len() != s.output {
            return Err(Error::Dimension {
                expected: s.output,
                got: output_grad.len(),
            });
        }
        if grads.len() != s.num_params() {
            return Err(Error::Dimension {
                expected: s.num_params(),
                got: grads.len(),
            });
        }
        let w2 = self.w2();
        let (g_w1, rest) = grads.split_at_mut(s.b1_at());
        let (g_b1, rest) = rest.split_at_mut(s.hidden);
        let (g_w2, g_b2) = rest.split_at_mut(s.output * s.hidden);

        let mut dh = vec![0.0; s.hidden];
        for (k, &g) in output_grad.iter().enumerate() {
            if g == 0.0 {
                continue;
            }
            g_b2[k] += g;
            let row = &w2[k * s.hidden..(k + 1) * s.hidden];
            let g_row = &mut g_w2[k * s.hidden..(k + 1) * s.hidden];
            for j in 0..s.hidden {
                g_row[j] += g * cache.hidden[j];
                dh[j] += g * row[j];
            }
        }
        for j in 0..s.hidden {
            let a = cache.hidden[j];
            let dz = dh[j] * (1.0 - a * a);
            if dz == 0.0 {
                continue;
            }
            g_b1[j] += dz;
            let g_row = &mut g_w1[j * s.input..(j + 1) * s.input];
            for &(i, v) in &cache.active {
                g_row[i] += dz * v;
            }
        }
        Ok(())
    }

    pub fn backward(&self, cache: &ForwardCache, output_grad: &[f64]) -> Result<Vec<f64>> {
        let mut g = vec![0.0; self.shape.num_params()];
        self.backward_into(cache, output_grad, &mut g)?;
        Ok(g)
    }
}

fn glorot_limit(fan_in: usize, fan_out: usize) -> f64 {
    if fan_in + fan_out == 0 {
        0.0
    } else {
        (6.0 / (fan_in + fan_out) as f64).sqrt()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RmsPropConfig {
    pub lr: f64,
    pub decay: f64,
    pub eps: f64,
}

impl RmsPropConfig {
    pub fn new(lr: f64) -> Self {
        RmsPropConfig {
            lr,
            decay: 0.9,
            eps: 1e-8,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.decay > 0.0 && self.decay < 1.0) {
            return Err(Error::Config(format!(
                "rmsprop decay must be in (0, 1), got {}",
                self.decay
            )));
        }
        if !(self.eps > 0.0 && self.lr >= 0.0) {
            return Err(Error::Config("rmsprop eps must be > 0 and lr >= 0".into()));
        }
        Ok(())
    }
}

/// RMSProp optimizer state: one mean-square accumulator per parameter.
#[derive(Debug, Clone, PartialEq)]
pub struct RmsProp {
    pub config: RmsPropConfig,
    acc: Vec<f64>,
}

impl RmsProp {
    pub fn new(config: RmsPropConfig, num_params: usize) -> Self {
        RmsProp {
            config,
            acc: vec![0.0; num_params],
        }
    }

    pub fn from_accumulators(config: RmsPropConfig, acc: Vec<f64>) -> Self {
        RmsProp { config, acc }
    }

    pub fn accumulators(&self) -> &[f64] {
        &self.acc
    }

    /// `acc ← ρ·acc + (1−ρ)·g²;  p ← p − η·g / sqrt(acc + ε)`.
    pub fn step(&mut self, params: &mut [f64], grads: &[f64]) -> Result<()> {
        rmsprop_step(params, grads, self)
    }
}

pub fn rmsprop_step(params: &mut [f64], grads: &[f64], state: &mut RmsProp) -> Result<()> {
    if params.len() != grads.len() || state.acc.len() != params.len() {
        return Err(Error::Dimension {
            expected: params.len(),
            got: if grads.len() != params.len() {
                grads.len()
            } else {
                state.acc.len()
            },
        });
    }
    let RmsPropConfig { lr, decay, eps } = state.config;
    for ((p, &g), acc) in params.iter_mut().zip(grads).zip(state.acc.iter_mut()) {
        *acc = decay * *acc + (1.0 - decay) * g * g;
        *p -= lr * g / (*acc + eps).sqrt();
    }
    Ok(())
}

/// Rescales `grads` in place so its L2 norm is at most `max_norm`.
pub fn clip_grad_norm(grads: &mut [f64], max_norm: f64) -> f64 {
    let norm = grads.iter().map(|g| g * g).sum::<f64>().sqrt();
    if max_norm.is_finite() && norm > max_norm && norm > 0.0 {
        let scale = max_norm / norm;
        grads.iter_mut().for_each(|g| *g *= scale);
    }
    norm
}

/// Numerically stable softmax (max-subtracted).
pub fn softmax(logits: &[f64]) -> Vec<f64> {
    let max = logits.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let exps: Vec<f64> = logits.iter().map(|&z| (z - max).exp()).collect();
    let sum: f64 = exps.iter().sum();
    exps.into_iter().map(|e| e / sum).collect()
}

pub fn log_softmax(logits: &[f64]) -> Vec<f64> {
    let max = logits.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let lse = max + logits.iter().map(|&z| (z - max).exp()).sum::<f64>().ln();
    logits.iter().map(|&z| z - lse).collect()
}

pub fn logistic(z: f64) -> f64 {
    if z >= 0.0 {
        1.0 / (1.0 + (-z).exp())
    } else {
        let e = z.exp();
        e / (1.0 + e)
    }
}

pub fn entropy(probs: &[f64]) -> f64 {
    -probs.iter().filter(|&&p| p > 0.0).map(|&p| p * p.ln()).sum::<f64>()
}

/// A differentiable scalar loss on a network's output vector.
pub trait LossHead {
    fn loss(&self, output: &[f64]) -> f64;
    fn grad(&self, output: &[f64]) -> Vec<f64>;
}

/// Actor surrogate: `−advantage · log π(action) − β · H(π)` over softmax logits.
#[derive(Debug, Clone, Copy)]
pub struct PolicyHead {
    pub action: usize,
    pub advantage: f64,
    pub entropy_coef: f64,
}

impl LossHead for PolicyHead {
    fn loss(&self, logits: &[f64]) -> f64 {
        let logp = log_softmax(logits);
        let p = softmax(logits);
        -self.advantage * logp[self.action] - self.entropy_coef * entropy(&p)
    }

    fn grad(&self, logits: &[f64]) -> Vec<f64> {
        let p = softmax(logits);
        let h = entropy(&p);
        p.iter()
            .enumerate()
            .map(|(k, &pk)| {
                let onehot = if k == self.action { 1.0 } else { 0.0 };
                let pg = -self.advantage * (onehot - pk);
                let ent = if pk > 0.0 {
                    self.entropy_coef * pk * (pk.ln() + h)
                } else {
                    0.0
                };
                pg + ent
            })
            .collect()
    }
}

/// Semi-gradient TD head: `½ (target − v)²` with the target held fixed.
#[derive(Debug, Clone, Copy)]
pub struct SquaredTdHead {
    pub target: f64,
}

impl LossHead for SquaredTdHead {
    fn loss(&self, out: &[f64]) -> f64 {
        0.5 * (self.target - out[0]).powi(2)
    }

    fn grad(&self, out: &[f64]) -> Vec<f64> {
        vec![out[0] - self.target]
    }
}

/// Binary cross-entropy on a logit whose probability is clamped to
/// `[clamp, 1 − clamp]`.
#[derive(Debug, Clone, Copy)]
pub struct BceHead {
    pub label: f64,
    pub clamp: f64,
}

impl BceHead {
    pub fn prob(&self, logit: f64) -> f64 {
        logistic(logit).clamp(self.clamp, 1.0 - self.clamp)
    }
}

impl LossHead for BceHead {
    fn loss(&self, out: &[f64]) -> f64 {
        let p = self.prob(out[0]);
        -(self.label * p.ln() + (1.0 - self.label) * (1.0 - p).ln())
    }

    fn grad(&self, out: &[f64]) -> Vec<f64> {
        let raw = logistic(out[0]);
        if raw < self.clamp || raw > 1.0 - self.clamp {
            vec![0.0]
        } else {
            vec![raw - self.label]
        }
    }
}

/// Cross-entropy against a target class (imitation pretraining).
#[derive(Debug, Clone, Copy)]
pub struct CrossEntropyHead {
    pub target: usize,
}

impl LossHead for CrossEntropyHead {
    fn loss(&self, logits: &[f64]) -> f64 {
        -log_softmax(logits)[self.target]
    }

    fn grad(&self, logits: &[f64]) -> Vec<f64> {
        let mut p = softmax(logits);
        p[self.target] -= 1.0;
        p
    }
}

pub fn relative_error(analytic: f64, numeric: f64) -> f64 {
    let denom = analytic.abs().max(numeric.abs()).max(GRAD_CHECK_FLOOR);
    (analytic - numeric).abs() / denom
}

/// Compares the analytic gradient of `head ∘ net` at `x` against central
/// finite differences over every parameter; returns the max relative error.
pub fn grad_check(net: &DenseNet, x: &[f64], head: &dyn LossHead, eps: f64) -> Result<f64> {
    let (out, cache) = net.forward(x)?;
    let analytic = net.backward(&cache, &head.grad(&out))?;
    let mut probe = net.clone();
    let mut worst: f64 = 0.0;
    for (i, &exact) in analytic.iter().enumerate() {
        let orig = probe.params[i];
        probe.params[i] = orig + eps;
        let plus = head.loss(&probe.output(x)?);
        probe.params[i] = orig - eps;
        let minus = head.loss(&probe.output(x)?);
        probe.params[i] = orig;
        let numeric = (plus - minus) / (2.0 * eps);
        worst = worst.max(relative_error(exact, numeric));
    }
    Ok(worst)
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    /// Plain nested-loop evaluation used as an independent oracle.
    fn reference_forward(net: &DenseNet, x: &[f64]) -> Vec<f64> {
        let s = net.shape();
        let p = net.params();
        let mut h = vec![0.0; s.hidden];
        for j in 0..s.hidden {
            let mut z = p[s.hidden * s.input + j];
            for i in 0..s.input {
                z += p[j * s.input + i] * x[i];
            }
            h[j] = z.tanh();
        }
        let w2 = s.hidden * s.input + s.hidden;
        let b2 = w2 + s.output * s.hidden;
        (0..s.output)
            .map(|k| p[b2 + k] + (0..s.hidden).map(|j| p[w2 + k * s.hidden + j] * h[j]).sum::<f64>())
            .collect()
    }

    struct SumHead;
    impl LossHead for SumHead {
        fn loss(&self, out: &[f64]) -> f64 {
            out.iter().sum()
        }
        fn grad(&self, out: &[f64]) -> Vec<f64> {
            vec![1.0; out.len()]
        }
    }

    struct SkewedHead(BceHead);
    impl LossHead for SkewedHead {
        fn loss(&self, out: &[f64]) -> f64 {
            self.0.loss(out)
        }
        fn grad(&self, out: &[f64]) -> Vec<f64> {
            self.0.grad(out).into_iter().map(|g| g * 1.1).collect()
        }
    }

    #[test]
    fn zero_net_outputs_zero() {
        let net = DenseNet::zeros(NetShape::new(3, 4, 2));
        assert_eq!(net.output(&[1.0, -2.0, 0.5]).unwrap(), vec![0.0, 0.0]);
    }

    #[test]
    fn identity_like_net() {
        let net = DenseNet::from_params(NetShape::new(1, 1, 1), vec![1.0, 0.0, 1.0, 0.0]).unwrap();
        assert_eq!(net.output(&[0.0]).unwrap(), vec![0.0]);
        assert!((net.output(&[0.5]).unwrap()[0] - 0.5f64.tanh()).abs() < 1e-15);
    }

    #[test]
    fn forward_matches_reference() {
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        for _ in 0..20 {
            let net = DenseNet::init(NetShape::new(7, 5, 3), &mut rng);
            let x: Vec<f64> = (0..7)
                .map(|i| if i % 3 == 0 { 0.0 } else { rng.gen_range(-1.0..1.0) })
                .collect();
            let got = net.output(&x).unwrap();
            let want = reference_forward(&net, &x);
            for (g, w) in got.iter().zip(&want) {
                assert!((g - w).abs() < 1e-12);
            }
        }
    }

    #[test]
    fn dimension_mismatch() {
        let net = DenseNet::zeros(NetShape::new(3, 2, 1));
        assert!(matches!(
            net.forward(&[1.0]),
            Err(Error::Dimension { expected: 3, got: 1 })
        ));
        let other = DenseNet::zeros(NetShape::new(4, 2, 1));
        let (_, cache) = other.forward(&[0.0; 4]).unwrap();
        assert!(net.backward(&cache, &[1.0]).is_err());
    }

    #[test]
    fn zero_output_grad_gives_zero_gradients() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let net = DenseNet::init(NetShape::new(4, 3, 2), &mut rng);
        let (_, cache) = net.forward(&[0.1, 0.2, 0.3, 0.4]).unwrap();
        assert!(net.backward(&cache, &[0.0, 0.0]).unwrap().iter().all(|&g| g == 0.0));
    }

    #[test]
    fn w2_gradient_is_hidden_outer_output_grad() {
        // 2-2-1 net: dL/dW2[0][j] = h_j · g, dL/db2 = g.
        let net = DenseNet::from_params(
            NetShape::new(2, 2, 1),
            vec![0.01, 0.02, -0.03, 0.01, 0.0, 0.0, 0.5, -0.5, 0.0],
        )
        .unwrap();
        let x = [0.3, -0.2];
        let (_, cache) = net.forward(&x).unwrap();
        let g = net.backward(&cache, &[2.0]).unwrap();
        let h0 = (0.01f64 * 0.3 - 0.02 * 0.2).tanh();
        let h1 = (-0.03f64 * 0.3 - 0.01 * 0.2).tanh();
        assert!((g[6] - 2.0 * h0).abs() < 1e-15);
        assert!((g[7] - 2.0 * h1).abs() < 1e-15);
        assert_eq!(g[8], 2.0);
    }

    #[test]
    fn softmax_examples() {
        assert_eq!(softmax(&[0.0; 4]), vec![0.25; 4]);
        let big = softmax(&[1000.0, 0.0]);
        assert!((big[0] - 1.0).abs() < 1e-15 && big[1] >= 0.0 && big[1] < 1e-300);
        let p = softmax(&[2f64.ln(), 0.0]);
        assert!((p[0] - 2.0 / 3.0).abs() < 1e-15 && (p[1] - 1.0 / 3.0).abs() < 1e-15);
    }

    #[test]
    fn rmsprop_examples() {
        let mut st = RmsProp::new(RmsPropConfig::new(0.01), 1);
        let mut p = [0.0];
        st.step(&mut p, &[0.0]).unwrap();
        assert_eq!(p, [0.0]);

        let mut st = RmsProp::new(
            RmsPropConfig {
                lr: 0.01,
                decay: 0.9,
                eps: 1e-8,
            },
            1,
        );
        let mut p = [0.0];
        st.step(&mut p, &[1.0]).unwrap();
        assert!((st.accumulators()[0] - 0.1).abs() < 1e-15);
        assert!((p[0] - (-0.01 / (0.1f64 + 1e-8).sqrt())).abs() < 1e-15);
        assert!((p[0] + 0.031623).abs() < 1e-6);
        let before = p[0];
        st.step(&mut p, &[1.0]).unwrap();
        let second = (p[0] - before).abs();
        assert!(second < before.abs());

        assert!(st.step(&mut [0.0, 1.0], &[1.0]).is_err());
    }

    #[test]
    fn clip_grad_norm_rescales() {
        let mut g = [3.0, 4.0];
        assert_eq!(clip_grad_norm(&mut g, 1.0), 5.0);
        assert!((g[0] - 0.6).abs() < 1e-15 && (g[1] - 0.8).abs() < 1e-15);
        let mut g = [3.0, 4.0];
        clip_grad_norm(&mut g, f64::INFINITY);
        assert_eq!(g, [3.0, 4.0]);
    }

    #[test]
    fn grad_check_detects_wrong_gradients() {
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let net = DenseNet::init(NetShape::new(10, 6, 1), &mut rng);
        let x: Vec<f64> = (0..10).map(|_| rng.gen_range(-1.0..1.0)).collect();
        let head = BceHead {
            label: 1.0,
            clamp: 1e-6,
        };
        assert!(grad_check(&net, &x, &head, 1e-5).unwrap() < 1e-4);
        assert!(grad_check(&net, &x, &SkewedHead(head), 1e-5).unwrap() > 1e-2);
    }

    #[test]
    fn grad_check_degenerate_net() {
        let net = DenseNet::zeros(NetShape::new(0, 0, 0));
        assert_eq!(grad_check(&net, &[], &SumHead, 1e-5).unwrap(), 0.0);
    }

    #[test]
    fn clamped_bce_has_zero_gradient() {
        let head = BceHead {
            label: 1.0,
            clamp: 1e-6,
        };
        assert_eq!(head.grad(&[50.0]), vec![0.0]);
        assert!((head.prob(50.0) - (1.0 - 1e-6)).abs() < 1e-15);
    }
}
