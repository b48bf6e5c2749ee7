//! Probe-level quantities shared by the pipelines and the acceptance suite.

use qrlcs_core::control::prepare;
use qrlcs_core::freefermion::qfi_scan_exact;
use qrlcs_core::metrology::{global_uncertainty, probe_cfi, Granularity, PriorSpec};
use qrlcs_core::spin_model::ground_state;
use qrlcs_core::statevector::{fidelity, Basis};
use qrlcs_core::{GateSequence, ModelSpec, Result};

/// Exact ground-state QFI at `spec.field` from the free-fermion overlap on
/// `[g, g + δ]`.
pub fn exact_qfi(spec: &ModelSpec, delta: f64) -> Result<f64> {
    let rec = qfi_scan_exact(spec, &[spec.l], spec.field, delta)?;
    Ok(rec[0].value)
}

/// CFI of single-site measurements on exact ground states at `g ± δ/2`.
pub fn exact_cfi(
    spec: &ModelSpec,
    delta: f64,
    basis: Basis,
    granularity: Granularity,
) -> Result<f64> {
    probe_cfi(
        |g| Ok(ground_state(&spec.with_field(g))?.state),
        spec.field,
        delta,
        basis,
        granularity,
    )
}

/// Preparation fidelity and time of a probe. Without a sequence the probe is
/// the exact ground state, with `F = 1` and no preparation cost.
pub fn probe_quality(seq: Option<&GateSequence>, spec: &ModelSpec) -> Result<(f64, f64)> {
    match seq {
        None => Ok((1.0, 0.0)),
        Some(seq) => {
            let prepared = prepare(seq, spec)?;
            let target = ground_state(spec)?.state;
            Ok((fidelity(&prepared.state, &target)?, prepared.t_p))
        }
    }
}

/// `𝒦` of a probe biased at `offset`: the prior average of
/// `1 / (F · F_Q(offset + h))`.
pub fn global_k(
    spec: &ModelSpec,
    offset: f64,
    prior: &PriorSpec,
    prep_fidelity: f64,
    delta: f64,
) -> Result<f64> {
    global_uncertainty(
        |h| Ok(prep_fidelity * exact_qfi(&spec.with_field(offset + h), delta)?),
        prior,
    )
}

#[cfg(test)]
mod tests {
    use super::*;
    use qrlcs_core::metrology::qfi_centered;

    #[test]
    fn exact_qfi_matches_dense_ground_states() {
        let spec = ModelSpec::ising(6, 1.0);
        let ff = exact_qfi(&spec, 1e-3).unwrap();
        let dense = qfi_centered(
            |g| Ok(ground_state(&spec.with_field(g))?.state),
            1.0 + 5e-4,
            1e-3,
        )
        .unwrap();
        assert!((ff - dense).abs() < 1e-4 * dense, "{ff} vs {dense}");
    }

    #[test]
    fn cfi_is_bounded_by_qfi() {
        let spec = ModelSpec::ising(6, 1.0);
        let cfi = exact_cfi(&spec, 1e-3, Basis::X, Granularity::Bitstring).unwrap();
        let qfi = qfi_centered(|g| Ok(ground_state(&spec.with_field(g))?.state), 1.0, 1e-3)
            .unwrap();
        assert!(cfi <= qfi * (1.0 + 1e-6));
        assert!(cfi > 0.5 * qfi);
    }

    #[test]
    fn exact_probe_has_unit_quality() {
        assert_eq!(probe_quality(None, &ModelSpec::ising(4, 1.0)).unwrap(), (1.0, 0.0));
    }

    #[test]
    fn k_scales_inversely_with_fidelity() {
        let spec = ModelSpec::ising(6, 1.0);
        let prior = PriorSpec::uniform(0.0, 0.1);
        let a = global_k(&spec, 0.95, &prior, 1.0, 1e-3).unwrap();
        let b = global_k(&spec, 0.95, &prior, 0.5, 1e-3).unwrap();
        assert!((b - 2.0 * a).abs() < 1e-12 * b);
    }
}
