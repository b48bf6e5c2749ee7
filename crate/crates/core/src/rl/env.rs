//! The preparation environment: observations, transitions and returns.

use serde::{Deserialize, Serialize};

use crate::control::{GateAction, NUM_ACTIONS};
use crate::error::{validation, Result};
use crate::rl::policy::OBS_DIM;
use crate::statevector::{fidelity, generator_expectations, QuantumState};

/// Size-independent view of a state: `⟨G⟩/L` for the six generators and the
/// elapsed fraction of the horizon.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Observation {
    pub features: [f64; OBS_DIM],
}

pub fn featurize(state: &QuantumState, step: usize, horizon: usize) -> Observation {
    let l = state.l() as f64;
    let ev = generator_expectations(state);
    let mut features = [0.0; OBS_DIM];
    for (f, e) in features.iter_mut().zip(ev) {
        *f = e / l;
    }
    features[6] = if horizon == 0 {
        0.0
    } else {
        step as f64 / horizon as f64
    };
    Observation { features }
}

#[derive(Debug, Clone)]
pub struct Transition {
    pub state: QuantumState,
    /// `|⟨next|target⟩|²`.
    pub reward: f64,
    pub done: bool,
}

/// Applies one gate and scores the result; `done` once the overlap modulus
/// reaches `f_star`. Horizon handling is left to the caller.
pub fn step_env(
    state: &QuantumState,
    action: GateAction,
    target: &QuantumState,
    tau_g: f64,
    f_star: f64,
) -> Result<Transition> {
    if state.l() != target.l() {
        return Err(validation(format!(
            "state has L = {} but target has L = {}",
            state.l(),
            target.l()
        )));
    }
    let mut next = state.clone();
    action.apply_in_place(&mut next, tau_g);
    let f = fidelity(&next, target)?;
    let reward = f * f;
    Ok(Transition {
        state: next,
        reward,
        done: reward >= f_star * f_star,
    })
}

/// `Σ_{i≥1} ηⁱ rᵢ`.
pub fn compute_return(rewards: &[f64], eta: f64) -> f64 {
    let mut w = 1.0;
    let mut acc = 0.0;
    for r in rewards {
        w *= eta;
        acc += w * r;
    }
    acc
}

/// Largest depth accepted by [`exhaustive_search`].
pub const MAX_EXHAUSTIVE_DEPTH: usize = 5;

/// Best program found by enumerating every action string up to `max_depth`.
#[derive(Debug, Clone, PartialEq)]
pub struct SearchResult {
    pub actions: Vec<GateAction>,
    pub fidelity: f64,
    /// Number of length-`max_depth` strings visited, `12^max_depth`.
    pub leaves: usize,
}

/// Depth-first enumeration of all `12^D` programs. Prefixes are scored too,
/// and ties keep the shorter, lexicographically first program.
pub fn exhaustive_search(
    initial: &QuantumState,
    target: &QuantumState,
    tau_g: f64,
    max_depth: usize,
) -> Result<SearchResult> {
    if max_depth > MAX_EXHAUSTIVE_DEPTH {
        return Err(validation(format!(
            "exhaustive search is limited to depth {MAX_EXHAUSTIVE_DEPTH}, got {max_depth}"
        )));
    }
    let mut best = SearchResult {
        actions: Vec::new(),
        fidelity: fidelity(initial, target)?,
        leaves: 0,
    };
    let mut path = Vec::with_capacity(max_depth);
    let mut stack = vec![initial.clone()];
    dfs(&mut stack, &mut path, target, tau_g, max_depth, &mut best)?;
    Ok(best)
}

fn dfs(
    stack: &mut Vec<QuantumState>,
    path: &mut Vec<GateAction>,
    target: &QuantumState,
    tau_g: f64,
    max_depth: usize,
    best: &mut SearchResult,
) -> Result<()> {
    if path.len() == max_depth {
        best.leaves += 1;
        return Ok(());
    }
    for a in 0..NUM_ACTIONS {
        let action = GateAction::from_index(a);
        let mut next = stack.last().expect("non-empty stack").clone();
        action.apply_in_place(&mut next, tau_g);
        let f = fidelity(&next, target)?;
        path.push(action);
        if f > best.fidelity + 1e-14 {
            best.fidelity = f;
            best.actions = path.clone();
        }
        stack.push(next);
        dfs(stack, path, target, tau_g, max_depth, best)?;
        stack.pop();
        path.pop();
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::control::{initial_state, Sign};
    use crate::spin_model::{ground_state, ModelSpec};
    use crate::statevector::{expectation, PauliGenerator};
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn all_up_features() {
        let l = 5;
        let o = featurize(&QuantumState::all_up(l), 0, 60).features;
        assert!((o[2] - 1.0).abs() < 1e-15);
        assert!(o[0].abs() < 1e-15 && o[1].abs() < 1e-15);
        assert!((o[5] - 0.8).abs() < 1e-15);
        assert_eq!(o[6], 0.0);
    }

    #[test]
    fn x_product_features() {
        let s = initial_state(&ModelSpec::ising(6, 1.0)).unwrap();
        let o = featurize(&s, 30, 60).features;
        assert!((o[0] + 1.0).abs() < 1e-14);
        assert!(o[2].abs() < 1e-14);
        assert_eq!(o[6], 0.5);
    }

    #[test]
    fn random_state_features_match_expectations() {
        let mut rng = ChaCha8Rng::seed_from_u64(12);
        let s = crate::statevector::tests::random_state(4, &mut rng);
        let o = featurize(&s, 3, 10).features;
        for g in PauliGenerator::ALL {
            let e = expectation(&s, &g.operator(4)).unwrap() / 4.0;
            assert!((o[g.index()] - e).abs() < 1e-10);
        }
        assert!(o[..3].iter().all(|x| x.abs() <= 1.0 + 1e-12));
        assert!(o[3..6].iter().all(|x| x.abs() <= 0.75 + 1e-12));
    }

    #[test]
    fn zero_duration_on_target_pays_one() {
        let s = initial_state(&ModelSpec::ising(3, 1.0)).unwrap();
        let t = step_env(&s, GateAction::from_index(6), &s, 0.0, 0.85).unwrap();
        assert!((t.reward - 1.0).abs() < 1e-14);
        assert!(t.done);
    }

    #[test]
    fn phase_gate_keeps_orthogonal_target_orthogonal() {
        let s = QuantumState::all_up(3);
        let target = QuantumState::basis(3, 5);
        let a = GateAction::new(PauliGenerator::SumZz, Sign::Plus);
        let t = step_env(&s, a, &target, 0.1, 0.85).unwrap();
        assert_eq!(t.reward, 0.0);
        assert!(!t.done);
    }

    #[test]
    fn mismatched_sizes_rejected() {
        let r = step_env(
            &QuantumState::all_up(3),
            GateAction::from_index(0),
            &QuantumState::all_up(4),
            0.1,
            0.85,
        );
        assert!(r.is_err());
    }

    #[test]
    fn best_single_action_at_l2_matches_enumeration() {
        let spec = ModelSpec::ising(2, 1.0);
        let init = initial_state(&spec).unwrap();
        let target = ground_state(&spec).unwrap().state;
        let brute = (0..NUM_ACTIONS)
            .map(|a| {
                step_env(&init, GateAction::from_index(a), &target, 0.1, 0.85)
                    .unwrap()
                    .reward
            })
            .fold(f64::NEG_INFINITY, f64::max);
        let found = exhaustive_search(&init, &target, 0.1, 1).unwrap();
        assert_eq!(found.leaves, 12);
        assert!(
            (found.fidelity.powi(2) - brute.max(fidelity(&init, &target).unwrap().powi(2))).abs()
                < 1e-14
        );
    }

    #[test]
    fn returns() {
        assert_eq!(compute_return(&[0.0; 7], 0.9), 0.0);
        assert!((compute_return(&[0.1, 0.2], 1.0) - 0.3).abs() < 1e-12);
        assert!((compute_return(&[1.0, 1.0, 1.0], 0.5) - 0.875).abs() < 1e-12);
        assert_eq!(compute_return(&[], 0.5), 0.0);
    }

    #[test]
    fn enumeration_size_and_cap() {
        let s = QuantumState::all_up(2);
        assert_eq!(
            exhaustive_search(&s, &s, 0.1, 3).unwrap().leaves,
            12usize.pow(3)
        );
        assert!(exhaustive_search(&s, &s, 0.1, 6).is_err());
    }
}
