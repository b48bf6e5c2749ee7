//! Policy-gradient search for gate programs that prepare a target ground
//! state from the field-aligned product state.

mod env;
mod policy;

pub use env::{
    compute_return, exhaustive_search, featurize, step_env, Observation, SearchResult, Transition,
    MAX_EXHAUSTIVE_DEPTH,
};
pub use policy::{Optimizer, OptimizerKind, Policy, HIDDEN, NUM_PARAMS, OBS_DIM};

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::control::{initial_state, GateAction, GateSequence};
use crate::error::{validation, Result};
use crate::spin_model::{ground_state, ModelSpec};
use crate::statevector::{fidelity, QuantumState};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "snake_case")]
pub enum Baseline {
    None,
    #[default]
    MovingAverage,
}

/// Which episode supplies the returned program.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "snake_case")]
pub enum Selection {
    /// Highest fidelity reached, cut at that step.
    Fidelity,
    /// Highest discounted return, i.e. the objective being optimized.
    #[default]
    Return,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct TrainConfig {
    /// Discount factor η.
    pub eta: f64,
    /// Episode horizon T.
    #[serde(alias = "max_steps_T")]
    pub max_steps: usize,
    /// Fidelity threshold F*.
    pub f_star: f64,
    pub episodes: usize,
    pub learning_rate: f64,
    pub baseline: Baseline,
    /// Weight of the newest batch in the moving-average baseline.
    pub baseline_rate: f64,
    pub optimizer: OptimizerKind,
    /// Episodes rolled out with frozen parameters between updates.
    pub batch_size: usize,
    pub seed: u64,
    pub tau_g: f64,
    #[serde(alias = "L_train")]
    pub l_train: usize,
    /// Stop at the first episode that reaches `f_star`.
    pub stop_on_success: bool,
    pub selection: Selection,
}

impl Default for TrainConfig {
    fn default() -> Self {
        Self {
            eta: 0.95,
            max_steps: 60,
            f_star: 0.85,
            episodes: 5000,
            learning_rate: 1e-2,
            baseline: Baseline::MovingAverage,
            baseline_rate: 0.1,
            optimizer: OptimizerKind::Adam,
            batch_size: 8,
            seed: 0,
            tau_g: 0.1,
            l_train: 10,
            stop_on_success: false,
            selection: Selection::Return,
        }
    }
}

impl TrainConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.eta > 0.0 && self.eta <= 1.0) {
            return Err(validation(format!(
                "eta must lie in (0, 1], got {}",
                self.eta
            )));
        }
        if !(self.f_star > 0.0 && self.f_star <= 1.0) {
            return Err(validation(format!(
                "f_star must lie in (0, 1], got {}",
                self.f_star
            )));
        }
        if self.max_steps == 0 {
            return Err(validation("max_steps must be at least 1"));
        }
        if self.episodes == 0 || self.batch_size == 0 {
            return Err(validation("episodes and batch_size must be positive"));
        }
        if !(self.learning_rate > 0.0 && self.learning_rate.is_finite()) {
            return Err(validation("learning_rate must be positive"));
        }
        if !(self.tau_g > 0.0 && self.tau_g.is_finite()) {
            return Err(validation("tau_g must be positive"));
        }
        if !(self.baseline_rate > 0.0 && self.baseline_rate <= 1.0) {
            return Err(validation("baseline_rate must lie in (0, 1]"));
        }
        if self.l_train < 2 {
            return Err(validation("l_train must be at least 2"));
        }
        Ok(())
    }
}

/// One row of the training history.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EpisodeRecord {
    pub episode: usize,
    #[serde(rename = "return")]
    pub ret: f64,
    pub final_fidelity: f64,
    pub depth_used: usize,
}

#[derive(Debug, Clone)]
pub struct TrainOutcome {
    pub sequence: GateSequence,
    /// Fidelity of `sequence` at the training size.
    pub fidelity: f64,
    pub success: bool,
    /// First episode (1-based) whose final fidelity reached `f_star`.
    pub first_success: Option<usize>,
    pub history: Vec<EpisodeRecord>,
    pub policy: Policy,
}

/// A scored step of a finished episode, held fixed while differentiating.
#[derive(Debug, Clone, Copy)]
pub struct FrozenStep {
    pub obs: [f64; OBS_DIM],
    pub action: usize,
    pub advantage: f64,
}

/// `(1/n) Σ A·log π(a|s)`; its gradient is the REINFORCE estimator.
pub fn surrogate_objective(policy: &Policy, steps: &[FrozenStep]) -> f64 {
    if steps.is_empty() {
        return 0.0;
    }
    let s: f64 = steps
        .iter()
        .map(|st| st.advantage * policy.log_prob(&st.obs, st.action))
        .sum();
    s / steps.len() as f64
}

pub fn surrogate_gradient(policy: &Policy, steps: &[FrozenStep]) -> Vec<f64> {
    let mut g = vec![0.0; NUM_PARAMS];
    if steps.is_empty() {
        return g;
    }
    let w = 1.0 / steps.len() as f64;
    for st in steps {
        policy.accumulate_log_prob_grad(&st.obs, st.action, w * st.advantage, &mut g);
    }
    g
}

#[derive(Debug, Clone)]
struct Rollout {
    obs: Vec<[f64; OBS_DIM]>,
    actions: Vec<usize>,
    /// Per-step rewards, padded to the horizon with the terminal reward when
    /// the episode stops early (the prepared state is absorbing).
    rewards: Vec<f64>,
    final_fidelity: f64,
    best_len: usize,
    best_fidelity: f64,
}

fn rollout(
    policy: &Policy,
    initial: &QuantumState,
    target: &QuantumState,
    cfg: &TrainConfig,
    rng: &mut ChaCha8Rng,
) -> Result<Rollout> {
    let horizon = cfg.max_steps;
    let f0 = fidelity(initial, target)?;
    let mut out = Rollout {
        obs: Vec::new(),
        actions: Vec::new(),
        rewards: Vec::new(),
        final_fidelity: f0,
        best_len: 0,
        best_fidelity: f0,
    };
    let mut last_reward = f0 * f0;
    if f0 < cfg.f_star {
        let mut state = initial.clone();
        for k in 0..horizon {
            let obs = featurize(&state, k, horizon).features;
            let a = policy.sample(&obs, rng);
            let tr = step_env(
                &state,
                GateAction::from_index(a),
                target,
                cfg.tau_g,
                cfg.f_star,
            )?;
            out.obs.push(obs);
            out.actions.push(a);
            out.rewards.push(tr.reward);
            last_reward = tr.reward;
            let f = tr.reward.sqrt();
            if f > out.best_fidelity {
                out.best_fidelity = f;
                out.best_len = k + 1;
            }
            state = tr.state;
            if tr.done {
                break;
            }
        }
        out.final_fidelity = last_reward.sqrt();
    }
    out.rewards.resize(horizon, last_reward);
    Ok(out)
}

fn episode_rng(seed: u64, stream: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(stream);
    rng
}

/// Trains at `spec.with_l(config.l_train)`; `spec` should sit at the
/// critical field.
///
/// Episodes end at the first threshold crossing, so a returned program is
/// cut there. Running out of budget is not an error: `success` is false and
/// the best program so far is returned.
pub fn train(config: &TrainConfig, spec: &ModelSpec) -> Result<TrainOutcome> {
    config.validate()?;
    let spec = spec.with_l(config.l_train);
    let target = ground_state(&spec)?.state;
    let initial = initial_state(&spec)?;
    train_toward(config, &spec, &initial, &target)
}

/// As [`train`], with explicit start and target states.
pub fn train_toward(
    config: &TrainConfig,
    spec: &ModelSpec,
    initial: &QuantumState,
    target: &QuantumState,
) -> Result<TrainOutcome> {
    config.validate()?;
    if initial.l() != target.l() {
        return Err(validation("initial and target states differ in size"));
    }
    let horizon = config.max_steps;
    let mut policy = Policy::random(&mut episode_rng(config.seed, 0));
    let mut opt = Optimizer::new(config.optimizer, config.learning_rate, NUM_PARAMS);
    let mut baseline: Option<Vec<f64>> = None;
    let mut history = Vec::with_capacity(config.episodes);
    let f0 = fidelity(initial, target)?;
    let mut best_actions: Vec<usize> = Vec::new();
    let mut best_fidelity = f0;
    let mut best_key = match config.selection {
        Selection::Fidelity => f0,
        Selection::Return => compute_return(&vec![f0 * f0; horizon], config.eta),
    };

    let mut first_success = None;
    let mut start = 0;
    'outer: while start < config.episodes {
        let end = (start + config.batch_size).min(config.episodes);
        let batch: Vec<Rollout> = (start..end)
            .into_par_iter()
            .map(|e| {
                rollout(
                    &policy,
                    initial,
                    target,
                    config,
                    &mut episode_rng(config.seed, e as u64 + 1),
                )
            })
            .collect::<Result<_>>()?;

        let mut stop = false;
        let mut used = 0;
        for (offset, r) in batch.iter().enumerate() {
            let ret = compute_return(&r.rewards, config.eta);
            history.push(EpisodeRecord {
                episode: start + offset + 1,
                ret,
                final_fidelity: r.final_fidelity,
                depth_used: r.actions.len(),
            });
            let (key, len, f) = match config.selection {
                Selection::Fidelity => (r.best_fidelity, r.best_len, r.best_fidelity),
                Selection::Return => (ret, r.actions.len(), r.final_fidelity),
            };
            if key > best_key {
                best_key = key;
                best_fidelity = f;
                best_actions = r.actions[..len].to_vec();
            }
            used += 1;
            if r.final_fidelity >= config.f_star {
                first_success.get_or_insert(start + offset + 1);
                if config.stop_on_success {
                    stop = true;
                    break;
                }
            }
        }
        if stop {
            break 'outer;
        }

        let batch = &batch[..used];
        let rtg: Vec<Vec<f64>> = batch
            .iter()
            .map(|r| rewards_to_go(&r.rewards, config.eta))
            .collect();
        let mean: Vec<f64> = (0..horizon)
            .map(|t| rtg.iter().map(|g| g[t]).sum::<f64>() / rtg.len() as f64)
            .collect();
        let base = match config.baseline {
            Baseline::None => vec![0.0; horizon],
            Baseline::MovingAverage => baseline.clone().unwrap_or_else(|| mean.clone()),
        };
        let mut steps = Vec::new();
        for (r, g) in batch.iter().zip(&rtg) {
            for (t, (&obs, &action)) in r.obs.iter().zip(&r.actions).enumerate() {
                steps.push(FrozenStep {
                    obs,
                    action,
                    advantage: g[t] - base[t],
                });
            }
        }
        let grad = surrogate_gradient(&policy, &steps);
        opt.step(policy.params_mut(), &grad);
        if config.baseline == Baseline::MovingAverage {
            let rate = config.baseline_rate;
            baseline = Some(
                base.iter()
                    .zip(&mean)
                    .map(|(b, m)| (1.0 - rate) * b + rate * m)
                    .collect(),
            );
        }
        start = end;
    }

    let actions: Vec<GateAction> = best_actions
        .iter()
        .map(|&a| GateAction::from_index(a))
        .collect();
    let sequence = GateSequence::new(actions, config.tau_g, spec);
    Ok(TrainOutcome {
        sequence,
        fidelity: best_fidelity,
        success: best_fidelity >= config.f_star,
        first_success,
        history,
        policy,
    })
}

/// `G_t = Σ_{s≥t} η^{s−t} r_s`.
fn rewards_to_go(rewards: &[f64], eta: f64) -> Vec<f64> {
    let mut out = vec![0.0; rewards.len()];
    let mut acc = 0.0;
    for (t, r) in rewards.iter().enumerate().rev() {
        acc = r + eta * acc;
        out[t] = acc;
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::control::prepare;
    use rand::Rng;

    fn small_config(seed: u64) -> TrainConfig {
        TrainConfig {
            l_train: 4,
            episodes: 200,
            max_steps: 20,
            seed,
            ..Default::default()
        }
    }

    #[test]
    fn config_validation() {
        assert!(TrainConfig::default().validate().is_ok());
        for bad in [
            TrainConfig {
                eta: 0.0,
                ..Default::default()
            },
            TrainConfig {
                eta: 1.1,
                ..Default::default()
            },
            TrainConfig {
                f_star: 0.0,
                ..Default::default()
            },
            TrainConfig {
                max_steps: 0,
                ..Default::default()
            },
            TrainConfig {
                learning_rate: -1.0,
                ..Default::default()
            },
        ] {
            assert!(bad.validate().is_err());
        }
        let c: TrainConfig = serde_json::from_str(r#"{"max_steps_T": 7, "L_train": 6}"#).unwrap();
        assert_eq!((c.max_steps, c.l_train), (7, 6));
    }

    #[test]
    fn rewards_to_go_sum() {
        let g = rewards_to_go(&[1.0, 1.0, 1.0], 0.5);
        assert_eq!(g, vec![1.75, 1.5, 1.0]);
        // η·G_0 is the return
        assert!((0.5 * g[0] - compute_return(&[1.0, 1.0, 1.0], 0.5)).abs() < 1e-15);
    }

    #[test]
    fn already_solved_environment_succeeds_immediately() {
        let spec = ModelSpec::ising(4, 1.0);
        let init = initial_state(&spec).unwrap();
        let out = train_toward(&small_config(1), &spec, &init, &init).unwrap();
        assert!(out.success);
        assert_eq!(out.first_success, Some(1));
        assert!(out.sequence.actions.is_empty());
        assert_eq!(out.history[0].depth_used, 0);
    }

    #[test]
    fn large_field_target_is_the_product_state() {
        let cfg = TrainConfig {
            stop_on_success: true,
            ..small_config(2)
        };
        let out = train(&cfg, &ModelSpec::ising(4, 60.0)).unwrap();
        assert!(out.success);
        assert_eq!(out.history.len(), 1);
        assert!(out.sequence.actions.is_empty());
    }

    #[test]
    fn seeded_runs_are_identical() {
        let spec = ModelSpec::ising(6, 1.0);
        let cfg = TrainConfig {
            l_train: 6,
            episodes: 40,
            max_steps: 15,
            f_star: 0.99,
            ..Default::default()
        };
        let a = train(&cfg, &spec).unwrap();
        let b = train(&cfg, &spec).unwrap();
        assert_eq!(a.history, b.history);
        assert_eq!(a.sequence, b.sequence);
        assert_eq!(a.policy, b.policy);
        let c = train(&TrainConfig { seed: 9, ..cfg }, &spec).unwrap();
        assert_ne!(a.history, c.history);
    }

    #[test]
    fn reported_fidelity_matches_replay() {
        let spec = ModelSpec::ising(6, 1.0);
        for selection in [Selection::Fidelity, Selection::Return] {
            let cfg = TrainConfig {
                l_train: 6,
                episodes: 64,
                max_steps: 20,
                f_star: 0.99,
                selection,
                ..Default::default()
            };
            let out = train(&cfg, &spec).unwrap();
            let target = ground_state(&spec).unwrap().state;
            let f = fidelity(&prepare(&out.sequence, &spec).unwrap().state, &target).unwrap();
            assert!((f - out.fidelity).abs() < 1e-12);
            assert!(!out.success);
            assert_eq!(out.history.len(), 64);
            let f0 = fidelity(&initial_state(&spec).unwrap(), &target).unwrap();
            if selection == Selection::Fidelity {
                assert!(out.fidelity >= f0);
            }
        }
    }

    #[test]
    fn stopping_on_success_truncates_history() {
        let spec = ModelSpec::ising(8, 1.0);
        let cfg = TrainConfig {
            l_train: 8,
            episodes: 400,
            seed: 2,
            stop_on_success: true,
            ..Default::default()
        };
        let out = train(&cfg, &spec).unwrap();
        assert!(out.success);
        assert_eq!(Some(out.history.len()), out.first_success);
        assert!(out.history.last().unwrap().final_fidelity >= 0.85);
    }

    #[test]
    fn best_so_far_is_monotone() {
        let spec = ModelSpec::ising(5, 1.0);
        let cfg = TrainConfig {
            l_train: 5,
            episodes: 48,
            max_steps: 12,
            f_star: 0.99,
            selection: Selection::Fidelity,
            ..Default::default()
        };
        let out = train(&cfg, &spec).unwrap();
        let mut best = 0.0f64;
        for rec in &out.history {
            let next = best.max(rec.final_fidelity);
            assert!(next >= best);
            best = next;
        }
        assert!(out.fidelity >= best - 1e-15);
    }

    #[test]
    fn surrogate_gradient_matches_finite_differences() {
        let mut rng = episode_rng(77, 3);
        let policy = Policy::random(&mut rng);
        let steps: Vec<FrozenStep> = (0..40)
            .map(|_| FrozenStep {
                obs: std::array::from_fn(|_| rng.random_range(-1.0..1.0)),
                action: rng.random_range(0..12),
                advantage: rng.random_range(-1.0..1.0),
            })
            .collect();
        let g = surrogate_gradient(&policy, &steps);
        let h = 1e-5;
        for _ in 0..10 {
            let i = rng.random_range(0..NUM_PARAMS);
            let mut p = policy.clone();
            p.params_mut()[i] += h;
            let up = surrogate_objective(&p, &steps);
            p.params_mut()[i] -= 2.0 * h;
            let down = surrogate_objective(&p, &steps);
            let fd = (up - down) / (2.0 * h);
            let scale = g[i].abs().max(1e-3);
            assert!(
                (fd - g[i]).abs() <= 1e-4 * scale,
                "param {i}: fd {fd} vs analytic {}",
                g[i]
            );
        }
    }
}
