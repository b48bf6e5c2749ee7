//! Coherent gate errors: Gaussian duration jitter and always-on ZZ cross-talk.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::control::{initial_state, GateAction, GateSequence};
use crate::error::{validation, Result};
use crate::spin_model::{ground_state, ModelSpec};
use crate::statevector::{evolve_in_place, fidelity, PauliGenerator, QuantumState};

/// Jitter draws are clamped to this many standard deviations.
pub const JITTER_CAP_SIGMAS: f64 = 5.0;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct NoiseConfig {
    /// Standard deviation of the additive duration error.
    pub duration_sigma: f64,
    /// Strength of the parasitic `ΣZZ` term present during every gate.
    pub crosstalk_lambda: f64,
    pub trotter_steps: usize,
    pub seed: u64,
}

impl Default for NoiseConfig {
    fn default() -> Self {
        Self {
            duration_sigma: 0.1,
            crosstalk_lambda: 0.01,
            trotter_steps: 16,
            seed: 0,
        }
    }
}

impl NoiseConfig {
    pub fn noiseless() -> Self {
        Self {
            duration_sigma: 0.0,
            crosstalk_lambda: 0.0,
            ..Self::default()
        }
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.duration_sigma >= 0.0 && self.duration_sigma.is_finite()) {
            return Err(validation(format!(
                "duration_sigma must be >= 0, got {}",
                self.duration_sigma
            )));
        }
        if !(self.crosstalk_lambda >= 0.0 && self.crosstalk_lambda.is_finite()) {
            return Err(validation(format!(
                "crosstalk_lambda must be >= 0, got {}",
                self.crosstalk_lambda
            )));
        }
        if self.trotter_steps == 0 {
            return Err(validation("trotter_steps must be at least 1"));
        }
        Ok(())
    }
}

/// One jitter draw.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Jitter {
    pub value: f64,
    /// The raw draw exceeded the cap and was clamped.
    pub capped: bool,
}

/// `ε ~ Normal(0, σ²)`, clamped to `±5σ`.
pub fn sample_jitter(config: &NoiseConfig, rng: &mut impl Rng) -> Jitter {
    let sigma = config.duration_sigma;
    if sigma == 0.0 {
        return Jitter {
            value: 0.0,
            capped: false,
        };
    }
    let raw = Normal::new(0.0, sigma).expect("finite sigma").sample(rng);
    let cap = JITTER_CAP_SIGMAS * sigma;
    Jitter {
        value: raw.clamp(-cap, cap),
        capped: raw.abs() > cap,
    }
}

/// `exp(−i t (G + λ ΣZZ))` in place, with `t = sign·τ_g + ε`.
///
/// Exact when `G` commutes with `ΣZZ`, otherwise a symmetric split
/// `(e^{−iλZZ dt/2} e^{−iG dt} e^{−iλZZ dt/2})^n`.
pub fn evolve_with_crosstalk(
    state: &mut QuantumState,
    gen: PauliGenerator,
    t: f64,
    lambda: f64,
    trotter_steps: usize,
) {
    let l = state.l();
    let amps = state.amplitudes_mut();
    if lambda == 0.0 {
        evolve_in_place(amps, l, gen, t);
    } else if gen == PauliGenerator::SumZz {
        evolve_in_place(amps, l, gen, (1.0 + lambda) * t);
    } else if gen.commutes_with_zz() {
        evolve_in_place(amps, l, gen, t);
        evolve_in_place(amps, l, PauliGenerator::SumZz, lambda * t);
    } else {
        let dt = t / trotter_steps as f64;
        evolve_in_place(amps, l, PauliGenerator::SumZz, 0.5 * lambda * dt);
        for k in 0..trotter_steps {
            evolve_in_place(amps, l, gen, dt);
            // adjacent half-steps merge into one full step
            let zz = if k + 1 == trotter_steps { 0.5 } else { 1.0 };
            evolve_in_place(amps, l, PauliGenerator::SumZz, zz * lambda * dt);
        }
    }
}

/// One gate with a fresh jitter draw. Returns whether the draw was capped.
pub fn apply_noisy_gate(
    state: &mut QuantumState,
    action: GateAction,
    tau_g: f64,
    config: &NoiseConfig,
    rng: &mut impl Rng,
) -> bool {
    let eps = sample_jitter(config, rng);
    evolve_with_crosstalk(
        state,
        action.generator,
        action.duration(tau_g) + eps.value,
        config.crosstalk_lambda,
        config.trotter_steps,
    );
    eps.capped
}

fn shot_rng(seed: u64, shot: usize) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(shot as u64);
    rng
}

/// Replays `seq` from the initial state of `spec` with noise stream `shot`.
pub fn noisy_prepare(
    seq: &GateSequence,
    spec: &ModelSpec,
    config: &NoiseConfig,
    shot: usize,
) -> Result<(QuantumState, usize)> {
    config.validate()?;
    seq.validate()?;
    let mut rng = shot_rng(config.seed, shot);
    let mut state = initial_state(spec)?;
    let mut capped = 0;
    for &a in &seq.actions {
        capped += usize::from(apply_noisy_gate(&mut state, a, seq.tau_g, config, &mut rng));
    }
    Ok((state, capped))
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct NoisyFidelity {
    pub mean: f64,
    /// Sample standard deviation (zero for a single shot).
    pub std: f64,
    pub shots: usize,
    /// Jitter draws clamped at the cap, over all shots.
    pub capped_draws: usize,
}

/// Fidelity to the ground state of `spec` over independent noisy replays.
pub fn noisy_preparation_fidelity(
    seq: &GateSequence,
    spec: &ModelSpec,
    config: &NoiseConfig,
    shots: usize,
) -> Result<NoisyFidelity> {
    if shots == 0 {
        return Err(validation("shots must be at least 1"));
    }
    let target = ground_state(spec)?.state;
    let per_shot: Vec<(f64, usize)> = (0..shots)
        .into_par_iter()
        .map(|shot| {
            let (state, capped) = noisy_prepare(seq, spec, config, shot)?;
            Ok((fidelity(&state, &target)?, capped))
        })
        .collect::<Result<_>>()?;
    let n = shots as f64;
    let mean = per_shot.iter().map(|p| p.0).sum::<f64>() / n;
    let std = if shots > 1 {
        (per_shot.iter().map(|p| (p.0 - mean).powi(2)).sum::<f64>() / (n - 1.0)).sqrt()
    } else {
        0.0
    };
    Ok(NoisyFidelity {
        mean,
        std,
        shots,
        capped_draws: per_shot.iter().map(|p| p.1).sum(),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::control::{prepare, Sign};
    use crate::linalg::dense_expm_times;
    use crate::statevector::tests::random_state;

    fn cfg(sigma: f64, lambda: f64) -> NoiseConfig {
        NoiseConfig {
            duration_sigma: sigma,
            crosstalk_lambda: lambda,
            ..Default::default()
        }
    }

    #[test]
    fn zero_sigma_never_jitters() {
        let mut rng = shot_rng(1, 0);
        for _ in 0..100 {
            assert_eq!(sample_jitter(&cfg(0.0, 0.0), &mut rng).value, 0.0);
        }
    }

    #[test]
    fn jitter_moments() {
        let c = cfg(0.1, 0.0);
        let mut rng = shot_rng(2024, 0);
        let draws: Vec<f64> = (0..100_000)
            .map(|_| sample_jitter(&c, &mut rng).value)
            .collect();
        let n = draws.len() as f64;
        let mean = draws.iter().sum::<f64>() / n;
        let sd = (draws.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / (n - 1.0)).sqrt();
        assert!(mean.abs() < 0.002, "mean {mean}");
        assert!((0.098..=0.102).contains(&sd), "std {sd}");
        assert!(draws.iter().all(|x| x.abs() <= 0.5));
    }

    #[test]
    fn jitter_streams_are_seeded() {
        let c = cfg(0.1, 0.0);
        let mut r = shot_rng(5, 3);
        let a: Vec<f64> = (0..10).map(|_| sample_jitter(&c, &mut r).value).collect();
        let mut r = shot_rng(5, 3);
        let b: Vec<f64> = (0..10).map(|_| sample_jitter(&c, &mut r).value).collect();
        assert_eq!(a, b);
    }

    #[test]
    fn noiseless_gate_is_clean_gate() {
        let mut rng = shot_rng(0, 0);
        let mut r2 = shot_rng(9, 9);
        let st = random_state(4, &mut r2);
        for a in GateAction::all() {
            let mut noisy = st.clone();
            apply_noisy_gate(&mut noisy, a, 0.1, &cfg(0.0, 0.0), &mut rng);
            let mut clean = st.clone();
            a.apply_in_place(&mut clean, 0.1);
            for (x, y) in noisy.amplitudes().iter().zip(clean.amplitudes()) {
                assert!((x - y).norm() < 1e-12);
            }
        }
    }

    #[test]
    fn zz_gate_absorbs_crosstalk() {
        let mut r2 = shot_rng(9, 1);
        let st = random_state(5, &mut r2);
        let mut noisy = st.clone();
        let a = GateAction::new(PauliGenerator::SumZz, Sign::Minus);
        apply_noisy_gate(&mut noisy, a, 0.1, &cfg(0.0, 0.01), &mut shot_rng(0, 0));
        let mut clean = st.clone();
        evolve_in_place(
            clean.amplitudes_mut(),
            5,
            PauliGenerator::SumZz,
            -0.1 * 1.01,
        );
        assert_eq!(noisy, clean);
    }

    fn dense_reference(
        st: &QuantumState,
        gen: PauliGenerator,
        t: f64,
        lambda: f64,
    ) -> Vec<num_complex::Complex64> {
        let l = st.l();
        let h = gen.operator(l).to_dense()
            + PauliGenerator::SumZz.operator(l).to_dense()
                * num_complex::Complex64::new(lambda, 0.0);
        dense_expm_times(&h, t, st.amplitudes())
    }

    fn deviation(a: &QuantumState, b: &[num_complex::Complex64]) -> f64 {
        a.amplitudes()
            .iter()
            .zip(b)
            .map(|(x, y)| (x - y).norm_sqr())
            .sum::<f64>()
            .sqrt()
    }

    #[test]
    fn split_step_matches_dense_exponential() {
        let mut r2 = shot_rng(11, 0);
        let st = random_state(3, &mut r2);
        let t = 0.1 + 0.037;
        let mut s = st.clone();
        evolve_with_crosstalk(&mut s, PauliGenerator::SumX, t, 0.01, 16);
        assert!(deviation(&s, &dense_reference(&st, PauliGenerator::SumX, t, 0.01)) < 1e-6);
        assert!((s.norm() - 1.0).abs() < 1e-9);

        let mut z = st.clone();
        evolve_with_crosstalk(&mut z, PauliGenerator::SumZ, t, 0.3, 1);
        assert!(deviation(&z, &dense_reference(&st, PauliGenerator::SumZ, t, 0.3)) < 1e-12);
    }

    #[test]
    fn split_step_is_second_order() {
        let mut r2 = shot_rng(12, 0);
        for l in [2, 3, 4, 5] {
            let st = random_state(l, &mut r2);
            for gen in [
                PauliGenerator::SumX,
                PauliGenerator::SumY,
                PauliGenerator::SumXx,
                PauliGenerator::SumYy,
            ] {
                // a single bond's XX and YY commute with its ZZ
                if l == 2 && gen.is_two_site() {
                    continue;
                }
                // large enough λ·t that the splitting error dominates round-off
                let (t, lambda) = (0.6, 0.5);
                let reference = dense_reference(&st, gen, t, lambda);
                let err = |n| {
                    let mut s = st.clone();
                    evolve_with_crosstalk(&mut s, gen, t, lambda, n);
                    deviation(&s, &reference)
                };
                let (e4, e8) = (err(4), err(8));
                assert!(e4 / e8 >= 3.0, "L={l} {}: {e4} -> {e8}", gen.name());
            }
        }
    }

    fn test_sequence(spec: &ModelSpec) -> GateSequence {
        let actions = [10, 7, 9, 0, 0]
            .iter()
            .map(|&i| GateAction::from_index(i))
            .collect();
        GateSequence::new(actions, 0.1, spec)
    }

    #[test]
    fn noiseless_replay_matches_clean() {
        let spec = ModelSpec::ising(6, 1.0);
        let seq = test_sequence(&spec);
        let out = noisy_preparation_fidelity(&seq, &spec, &NoiseConfig::noiseless(), 5).unwrap();
        let target = ground_state(&spec).unwrap().state;
        let clean = fidelity(&prepare(&seq, &spec).unwrap().state, &target).unwrap();
        assert!((out.mean - clean).abs() < 1e-12);
        assert!(out.std < 1e-12);
    }

    #[test]
    fn noise_lowers_mean_fidelity_monotonically_in_lambda() {
        let spec = ModelSpec::ising(6, 1.0);
        let seq = test_sequence(&spec);
        let clean = noisy_preparation_fidelity(&seq, &spec, &NoiseConfig::noiseless(), 1)
            .unwrap()
            .mean;
        let mut prev = f64::INFINITY;
        for lambda in [0.0, 0.005, 0.01, 0.02] {
            let m = noisy_preparation_fidelity(&seq, &spec, &cfg(0.1, lambda), 50)
                .unwrap()
                .mean;
            assert!(m <= clean + 1e-9);
            assert!(m <= prev + 1e-12, "lambda {lambda}: {m} > {prev}");
            prev = m;
        }
    }

    #[test]
    fn invalid_configs() {
        assert!(cfg(-0.1, 0.0).validate().is_err());
        assert!(cfg(0.1, -1.0).validate().is_err());
        assert!(NoiseConfig {
            trotter_steps: 0,
            ..Default::default()
        }
        .validate()
        .is_err());
        let spec = ModelSpec::ising(4, 1.0);
        assert!(
            noisy_preparation_fidelity(&test_sequence(&spec), &spec, &cfg(0.1, 0.0), 0).is_err()
        );
    }
}
