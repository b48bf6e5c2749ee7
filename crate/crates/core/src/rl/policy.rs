//! Two-layer softmax policy with hand-written backpropagation.

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::control::NUM_ACTIONS;

pub const OBS_DIM: usize = 7;
pub const HIDDEN: usize = 32;

const W1: usize = 0;
const B1: usize = W1 + HIDDEN * OBS_DIM;
const W2: usize = B1 + HIDDEN;
const B2: usize = W2 + NUM_ACTIONS * HIDDEN;
pub const NUM_PARAMS: usize = B2 + NUM_ACTIONS;

/// `obs → tanh(W₁ obs + b₁) → W₂ h + b₂ → softmax`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Policy {
    params: Vec<f64>,
}

struct Forward {
    hidden: [f64; HIDDEN],
    probs: [f64; NUM_ACTIONS],
}

impl Policy {
    /// Glorot-uniform first layer; the output layer starts small so the
    /// initial policy is close to uniform.
    pub fn random(rng: &mut impl Rng) -> Self {
        let mut params = vec![0.0; NUM_PARAMS];
        let a1 = (6.0 / (OBS_DIM + HIDDEN) as f64).sqrt();
        for p in &mut params[W1..B1] {
            *p = rng.random_range(-a1..a1);
        }
        let a2 = 0.1 * (6.0 / (HIDDEN + NUM_ACTIONS) as f64).sqrt();
        for p in &mut params[W2..B2] {
            *p = rng.random_range(-a2..a2);
        }
        Self { params }
    }

    pub fn from_params(params: Vec<f64>) -> Self {
        assert_eq!(params.len(), NUM_PARAMS);
        Self { params }
    }

    pub fn params(&self) -> &[f64] {
        &self.params
    }

    pub fn params_mut(&mut self) -> &mut [f64] {
        &mut self.params
    }

    fn forward(&self, obs: &[f64; OBS_DIM]) -> Forward {
        let p = &self.params;
        let mut hidden = [0.0; HIDDEN];
        for (i, h) in hidden.iter_mut().enumerate() {
            let row = &p[W1 + i * OBS_DIM..W1 + (i + 1) * OBS_DIM];
            let pre: f64 = row.iter().zip(obs).map(|(w, x)| w * x).sum::<f64>() + p[B1 + i];
            *h = pre.tanh();
        }
        let mut logits = [0.0; NUM_ACTIONS];
        for (j, z) in logits.iter_mut().enumerate() {
            let row = &p[W2 + j * HIDDEN..W2 + (j + 1) * HIDDEN];
            *z = row.iter().zip(&hidden).map(|(w, h)| w * h).sum::<f64>() + p[B2 + j];
        }
        Forward {
            hidden,
            probs: softmax(&logits),
        }
    }

    pub fn probabilities(&self, obs: &[f64; OBS_DIM]) -> [f64; NUM_ACTIONS] {
        self.forward(obs).probs
    }

    pub fn log_prob(&self, obs: &[f64; OBS_DIM], action: usize) -> f64 {
        self.forward(obs).probs[action].ln()
    }

    /// Inverse-CDF draw from `π(·|obs)` with one uniform variate.
    pub fn sample(&self, obs: &[f64; OBS_DIM], rng: &mut impl Rng) -> usize {
        let probs = self.probabilities(obs);
        let u: f64 = rng.random();
        let mut acc = 0.0;
        for (a, p) in probs.iter().enumerate() {
            acc += p;
            if u < acc {
                return a;
            }
        }
        NUM_ACTIONS - 1
    }

    pub fn greedy(&self, obs: &[f64; OBS_DIM]) -> usize {
        let probs = self.probabilities(obs);
        (0..NUM_ACTIONS)
            .max_by(|&a, &b| probs[a].total_cmp(&probs[b]).then(b.cmp(&a)))
            .unwrap()
    }

    /// `grad += weight · ∇θ log π(action | obs)`.
    pub fn accumulate_log_prob_grad(
        &self,
        obs: &[f64; OBS_DIM],
        action: usize,
        weight: f64,
        grad: &mut [f64],
    ) {
        let p = &self.params;
        let fwd = self.forward(obs);
        let mut dlogit = [0.0; NUM_ACTIONS];
        for (j, d) in dlogit.iter_mut().enumerate() {
            let onehot = if j == action { 1.0 } else { 0.0 };
            *d = weight * (onehot - fwd.probs[j]);
        }
        let mut dhidden = [0.0; HIDDEN];
        for (j, &d) in dlogit.iter().enumerate() {
            grad[B2 + j] += d;
            for i in 0..HIDDEN {
                grad[W2 + j * HIDDEN + i] += d * fwd.hidden[i];
                dhidden[i] += d * p[W2 + j * HIDDEN + i];
            }
        }
        for i in 0..HIDDEN {
            let dpre = dhidden[i] * (1.0 - fwd.hidden[i] * fwd.hidden[i]);
            grad[B1 + i] += dpre;
            for (k, x) in obs.iter().enumerate() {
                grad[W1 + i * OBS_DIM + k] += dpre * x;
            }
        }
    }
}

fn softmax(logits: &[f64; NUM_ACTIONS]) -> [f64; NUM_ACTIONS] {
    let m = logits.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let mut out = logits.map(|z| (z - m).exp());
    let s: f64 = out.iter().sum();
    out.iter_mut().for_each(|x| *x /= s);
    out
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "snake_case")]
pub enum OptimizerKind {
    Sgd,
    #[default]
    Adam,
}

/// Gradient-ascent step rule.
#[derive(Debug, Clone)]
pub struct Optimizer {
    kind: OptimizerKind,
    lr: f64,
    m: Vec<f64>,
    v: Vec<f64>,
    t: i32,
}

impl Optimizer {
    pub fn new(kind: OptimizerKind, lr: f64, n: usize) -> Self {
        Self {
            kind,
            lr,
            m: vec![0.0; n],
            v: vec![0.0; n],
            t: 0,
        }
    }

    /// Moves `params` along `grad` (ascent).
    pub fn step(&mut self, params: &mut [f64], grad: &[f64]) {
        match self.kind {
            OptimizerKind::Sgd => {
                for (p, g) in params.iter_mut().zip(grad) {
                    *p += self.lr * g;
                }
            }
            OptimizerKind::Adam => {
                const B1: f64 = 0.9;
                const B2: f64 = 0.999;
                const EPS: f64 = 1e-8;
                self.t += 1;
                let c1 = 1.0 - B1.powi(self.t);
                let c2 = 1.0 - B2.powi(self.t);
                for i in 0..params.len() {
                    self.m[i] = B1 * self.m[i] + (1.0 - B1) * grad[i];
                    self.v[i] = B2 * self.v[i] + (1.0 - B2) * grad[i] * grad[i];
                    let mh = self.m[i] / c1;
                    let vh = self.v[i] / c2;
                    params[i] += self.lr * mh / (vh.sqrt() + EPS);
                }
            }
        }
    }
}
