//! Fisher-information estimators, measurement budgets, prior-averaged
//! uncertainty and power-law fits.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use crate::error::{numerical, validation, Error, Result};
use crate::statevector::{fidelity, measurement_distribution, Basis, QuantumState};

/// Default finite-difference step in the sensed field.
pub const DEFAULT_DELTA: f64 = 1e-3;
/// Outcomes rarer than this are dropped from CFI sums.
pub const PROBABILITY_FLOOR: f64 = 1e-12;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum FisherKind {
    Qfi,
    EffectiveQfi,
    Cfi,
}

impl FisherKind {
    pub fn name(self) -> &'static str {
        match self {
            FisherKind::Qfi => "qfi",
            FisherKind::EffectiveQfi => "effective_qfi",
            FisherKind::Cfi => "cfi",
        }
    }
}

/// Outcome resolution used for classical Fisher information.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize, Default)]
#[serde(rename_all = "snake_case")]
pub enum Granularity {
    /// Full single-site bitstring statistics.
    #[default]
    Bitstring,
    /// Total magnetization only.
    Magnetization,
}

impl Granularity {
    pub fn name(self) -> &'static str {
        match self {
            Granularity::Bitstring => "bitstring",
            Granularity::Magnetization => "magnetization",
        }
    }
}

/// One point of a scaling scan.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FisherRecord {
    pub l: usize,
    pub h: f64,
    pub value: f64,
    pub kind: FisherKind,
    pub t_p: f64,
    pub time_factorized: Option<f64>,
}

impl FisherRecord {
    pub fn new(l: usize, h: f64, value: f64, kind: FisherKind, t_p: Option<f64>) -> Self {
        let t_p = t_p.unwrap_or(0.0);
        let time_factorized = (t_p > 0.0).then(|| value / t_p);
        Self {
            l,
            h,
            value,
            kind,
            t_p,
            time_factorized,
        }
    }

    pub fn with_t_p(mut self, t_p: f64) -> Self {
        self.t_p = t_p;
        self.time_factorized = (t_p > 0.0).then(|| self.value / t_p);
        self
    }
}

/// Uniform prior on `[h_min, h_max]`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PriorSpec {
    pub h_min: f64,
    pub h_max: f64,
    #[serde(default = "default_grid_points")]
    pub grid_points: usize,
}

fn default_grid_points() -> usize {
    21
}

impl PriorSpec {
    pub fn uniform(h_min: f64, h_max: f64) -> Self {
        Self {
            h_min,
            h_max,
            grid_points: default_grid_points(),
        }
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.h_min < self.h_max) {
            return Err(validation(format!(
                "prior interval [{}, {}] is empty",
                self.h_min, self.h_max
            )));
        }
        if self.grid_points < 3 {
            return Err(validation("prior grid needs at least 3 nodes"));
        }
        Ok(())
    }

    pub fn density(&self) -> f64 {
        1.0 / (self.h_max - self.h_min)
    }

    pub fn nodes(&self) -> Vec<f64> {
        let n = self.grid_points;
        let w = self.h_max - self.h_min;
        (0..n)
            .map(|i| self.h_min + w * i as f64 / (n - 1) as f64)
            .collect()
    }

    pub fn center(&self) -> f64 {
        0.5 * (self.h_min + self.h_max)
    }
}

/// Time budget split between preparation and interrogation.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MeasurementBudget {
    pub total_time: f64,
    pub t_p: f64,
    pub tau_m: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScalingFit {
    pub exponent: f64,
    pub log_prefactor: f64,
    pub r_squared: f64,
    pub points: Vec<(usize, f64)>,
    pub reference_exponents: BTreeMap<String, f64>,
}

impl ScalingFit {
    pub fn prefactor(&self) -> f64 {
        self.log_prefactor.exp()
    }
}

/// Critical exponents of the one-dimensional transverse-field Ising class.
pub fn ising_reference_exponents() -> BTreeMap<String, f64> {
    [("d", 1.0), ("mu", 1.0), ("nu", 1.0), ("heisenberg", 2.0)]
        .into_iter()
        .map(|(k, v)| (k.to_string(), v))
        .collect()
}

/// `8(1 − f)/δ²` with `f = |⟨ψ(h)|ψ(h+δ)⟩|`.
pub fn qfi_fidelity_susceptibility<F>(state_fn: F, h: f64, delta: f64) -> Result<f64>
where
    F: Fn(f64) -> Result<QuantumState>,
{
    if !(delta > 0.0) {
        return Err(validation(format!(
            "finite-difference step {delta} must be positive"
        )));
    }
    let f = fidelity(&state_fn(h)?, &state_fn(h + delta)?)?;
    qfi_from_overlap(f, delta)
}

/// QFI on the stencil `[h − δ/2, h + δ/2]`, the same points used by
/// [`probe_cfi`].
///
/// On a shared stencil the central-difference CFI can never exceed this
/// value: the chi-square sum is bounded by the Hellinger distance, and the
/// Bhattacharyya coefficient of any measurement dominates the state overlap.
pub fn qfi_centered<F>(state_fn: F, h: f64, delta: f64) -> Result<f64>
where
    F: Fn(f64) -> Result<QuantumState>,
{
    qfi_fidelity_susceptibility(state_fn, h - 0.5 * delta, delta)
}

/// `8(1 − f)/δ²` for a known overlap.
pub fn qfi_from_overlap(f: f64, delta: f64) -> Result<f64> {
    if !(delta > 0.0) {
        return Err(validation(format!(
            "finite-difference step {delta} must be positive"
        )));
    }
    if f > 1.0 + 1e-9 {
        return Err(numerical(format!("overlap {f} exceeds 1")));
    }
    Ok(8.0 * (1.0 - f.min(1.0)) / (delta * delta))
}

/// QFI of an imperfect probe with preparation fidelity `prep_fidelity`:
/// `8 F (1 − f)/δ²`.
pub fn effective_qfi(prep_fidelity: f64, f: f64, delta: f64) -> Result<f64> {
    if !(0.0..=1.0).contains(&prep_fidelity) {
        return Err(validation(format!(
            "preparation fidelity {prep_fidelity} outside [0, 1]"
        )));
    }
    if !(0.0..=1.0).contains(&f) {
        return Err(validation(format!("overlap {f} outside [0, 1]")));
    }
    Ok(prep_fidelity * qfi_from_overlap(f, delta)?)
}

/// Detailed CFI result.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CfiEstimate {
    pub value: f64,
    pub skipped_outcomes: usize,
    /// Total midpoint probability of the outcomes dropped by the floor.
    pub skipped_mass: f64,
}

/// Central-difference classical Fisher information of two outcome
/// distributions taken at `h − δ/2` and `h + δ/2`.
pub fn cfi_from_distributions(p_minus: &[f64], p_plus: &[f64], delta: f64) -> Result<f64> {
    Ok(cfi_detailed(p_minus, p_plus, delta)?.value)
}

pub fn cfi_detailed(p_minus: &[f64], p_plus: &[f64], delta: f64) -> Result<CfiEstimate> {
    if p_minus.len() != p_plus.len() {
        return Err(validation(format!(
            "distribution lengths differ: {} vs {}",
            p_minus.len(),
            p_plus.len()
        )));
    }
    if !(delta > 0.0) {
        return Err(validation("finite-difference step must be positive"));
    }
    for p in [p_minus, p_plus] {
        if p.iter().any(|&x| x < 0.0 || !x.is_finite()) {
            return Err(validation("probabilities must be finite and non-negative"));
        }
        let total: f64 = p.iter().sum();
        if (total - 1.0).abs() > 1e-9 {
            return Err(validation(format!("probabilities sum to {total}, not 1")));
        }
    }
    let mut value = 0.0;
    let mut skipped_outcomes = 0;
    let mut skipped_mass = 0.0;
    for (&a, &b) in p_minus.iter().zip(p_plus) {
        let mid = 0.5 * (a + b);
        if mid < PROBABILITY_FLOOR {
            skipped_outcomes += 1;
            skipped_mass += mid;
            continue;
        }
        let dp = (b - a) / delta;
        value += dp * dp / mid;
    }
    Ok(CfiEstimate {
        value,
        skipped_outcomes,
        skipped_mass,
    })
}

/// CFI of single-site Pauli measurements on a parameterized probe.
pub fn probe_cfi<F>(
    state_fn: F,
    h: f64,
    delta: f64,
    basis: Basis,
    granularity: Granularity,
) -> Result<f64>
where
    F: Fn(f64) -> Result<QuantumState>,
{
    let lo = measurement_distribution(&state_fn(h - 0.5 * delta)?, basis);
    let hi = measurement_distribution(&state_fn(h + 0.5 * delta)?, basis);
    match granularity {
        Granularity::Bitstring => cfi_from_distributions(&lo.bitstrings, &hi.bitstrings, delta),
        Granularity::Magnetization => {
            cfi_from_distributions(&lo.magnetization, &hi.magnetization, delta)
        }
    }
}

/// Number of repetitions `M = 𝒯 / (t_p + τ_m)`.
pub fn measurement_count(budget: &MeasurementBudget) -> Result<f64> {
    if !(budget.total_time > 0.0) {
        return Err(validation("total time must be positive"));
    }
    if !(budget.tau_m > 0.0) {
        return Err(validation("interrogation time must be positive"));
    }
    if budget.t_p < 0.0 {
        return Err(validation("preparation time must be non-negative"));
    }
    Ok(budget.total_time / (budget.t_p + budget.tau_m))
}

/// Fisher information per unit preparation time.
pub fn time_factorized(value: f64, t_p: f64) -> Result<f64> {
    if !(t_p > 0.0) {
        return Err(validation(format!(
            "preparation time {t_p} must be positive"
        )));
    }
    Ok(value / t_p)
}

/// Control field that centers the prior on the critical point.
pub fn control_offset(prior: &PriorSpec, b_crit: f64) -> Result<f64> {
    prior.validate()?;
    Ok(b_crit - prior.center())
}

/// Prior-averaged inverse Fisher information `∫ f(h) / ℱ(h) dh`, composite
/// trapezoid on the prior grid.
pub fn global_uncertainty<F>(fisher_fn: F, prior: &PriorSpec) -> Result<f64>
where
    F: Fn(f64) -> Result<f64>,
{
    prior.validate()?;
    let nodes = prior.nodes();
    let step = (prior.h_max - prior.h_min) / (nodes.len() - 1) as f64;
    let density = prior.density();
    let mut acc = 0.0;
    for (i, &h) in nodes.iter().enumerate() {
        let value = fisher_fn(h)?;
        if !(value > 0.0) || !value.is_finite() {
            return Err(Error::Numerical(format!(
                "singular integrand: Fisher information {value} at h = {h}"
            )));
        }
        let w = if i == 0 || i == nodes.len() - 1 {
            0.5
        } else {
            1.0
        };
        acc += w * density / value;
    }
    Ok(acc * step)
}

/// Least-squares power law `value ≈ e^c · L^a` in log-log coordinates.
pub fn fit_scaling(points: &[(usize, f64)]) -> Result<ScalingFit> {
    if points.len() < 3 {
        return Err(validation(format!(
            "scaling fit needs at least 3 points, got {}",
            points.len()
        )));
    }
    if let Some(&(l, v)) = points.iter().find(|(l, v)| !(*v > 0.0) || *l == 0) {
        return Err(validation(format!(
            "non-positive point (L = {l}, value = {v})"
        )));
    }
    let mut ls: Vec<usize> = points.iter().map(|p| p.0).collect();
    ls.sort_unstable();
    if ls.windows(2).any(|w| w[0] == w[1]) {
        return Err(validation("scaling fit needs distinct L values"));
    }
    let xs: Vec<f64> = points.iter().map(|p| (p.0 as f64).ln()).collect();
    let ys: Vec<f64> = points.iter().map(|p| p.1.ln()).collect();
    let n = xs.len() as f64;
    let mx = xs.iter().sum::<f64>() / n;
    let my = ys.iter().sum::<f64>() / n;
    let sxx: f64 = xs.iter().map(|x| (x - mx).powi(2)).sum();
    let sxy: f64 = xs.iter().zip(&ys).map(|(x, y)| (x - mx) * (y - my)).sum();
    let slope = sxy / sxx;
    let intercept = my - slope * mx;
    let ss_tot: f64 = ys.iter().map(|y| (y - my).powi(2)).sum();
    let ss_res: f64 = xs
        .iter()
        .zip(&ys)
        .map(|(x, y)| (y - intercept - slope * x).powi(2))
        .sum();
    let r_squared = if ss_tot <= f64::EPSILON * n {
        1.0
    } else {
        (1.0 - ss_res / ss_tot).clamp(0.0, 1.0)
    };
    Ok(ScalingFit {
        exponent: slope,
        log_prefactor: intercept,
        r_squared,
        points: points.to_vec(),
        reference_exponents: ising_reference_exponents(),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::spin_model::{ground_state, ModelSpec};

    #[test]
    fn qfi_of_insensitive_probe_is_zero() {
        let s = QuantumState::all_up(3);
        let q = qfi_fidelity_susceptibility(|_| Ok(s.clone()), 0.3, 1e-3).unwrap();
        assert_eq!(q, 0.0);
        assert!(qfi_fidelity_susceptibility(|_| Ok(s.clone()), 0.3, 0.0).is_err());
    }

    #[test]
    fn qfi_formula_arithmetic() {
        assert!((qfi_from_overlap(0.99995, 0.01).unwrap() - 4.0).abs() < 1e-9);
        assert!(qfi_from_overlap(1.0 + 1e-6, 0.01).is_err());
    }

    #[test]
    fn effective_qfi_examples() {
        assert!((effective_qfi(0.85, 0.99995, 0.01).unwrap() - 3.4).abs() < 1e-9);
        assert_eq!(effective_qfi(0.0, 0.3, 0.01).unwrap(), 0.0);
        assert_eq!(
            effective_qfi(1.0, 0.999, 0.01).unwrap(),
            qfi_from_overlap(0.999, 0.01).unwrap()
        );
        assert!(effective_qfi(1.2, 0.5, 0.01).is_err());
        assert!(effective_qfi(0.5, -0.1, 0.01).is_err());
    }

    #[test]
    fn cfi_examples() {
        let p = [0.2, 0.3, 0.5];
        assert_eq!(cfi_from_distributions(&p, &p, 1e-3).unwrap(), 0.0);

        let h = 0.5;
        let d = 1e-4;
        let lo = [h - d / 2.0, 1.0 - (h - d / 2.0)];
        let hi = [h + d / 2.0, 1.0 - (h + d / 2.0)];
        let cfi = cfi_from_distributions(&lo, &hi, d).unwrap();
        assert!((cfi - 4.0).abs() < 1e-4);

        assert!(cfi_from_distributions(&[1.0], &[0.5, 0.5], 1e-3).is_err());
        assert!(cfi_from_distributions(&[1.5, -0.5], &[0.5, 0.5], 1e-3).is_err());
    }

    #[test]
    fn cfi_floor_skips_dark_outcomes() {
        let est = cfi_detailed(&[1.0, 0.0], &[1.0, 0.0], 1e-3).unwrap();
        assert_eq!(est.skipped_outcomes, 1);
        assert_eq!(est.value, 0.0);
    }

    #[test]
    fn budget_examples() {
        let b = |t_p| MeasurementBudget {
            total_time: 100.0,
            t_p,
            tau_m: 1.0,
        };
        assert_eq!(measurement_count(&b(0.0)).unwrap(), 100.0);
        assert_eq!(measurement_count(&b(9.0)).unwrap(), 10.0);
        let m1 = measurement_count(&MeasurementBudget {
            total_time: 100.0,
            t_p: 3.0,
            tau_m: 1.0,
        })
        .unwrap();
        let m2 = measurement_count(&MeasurementBudget {
            total_time: 100.0,
            t_p: 7.0,
            tau_m: 1.0,
        })
        .unwrap();
        assert_eq!(m1, 2.0 * m2);
        assert!(measurement_count(&MeasurementBudget {
            total_time: 100.0,
            t_p: 0.0,
            tau_m: 0.0
        })
        .is_err());
        assert!(measurement_count(&MeasurementBudget {
            total_time: -1.0,
            t_p: 0.0,
            tau_m: 1.0
        })
        .is_err());
    }

    #[test]
    fn time_factorization() {
        assert_eq!(time_factorized(8.0, 2.0).unwrap(), 4.0);
        assert!(time_factorized(8.0, 0.0).is_err());
    }

    #[test]
    fn control_offsets() {
        assert!((control_offset(&PriorSpec::uniform(0.0, 0.1), 1.0).unwrap() - 0.95).abs() < 1e-15);
        assert_eq!(
            control_offset(&PriorSpec::uniform(-0.3, 0.3), 0.7).unwrap(),
            0.7
        );
        assert!(control_offset(&PriorSpec::uniform(0.2, 0.2), 1.0).is_err());
    }

    #[test]
    fn global_uncertainty_examples() {
        let k = global_uncertainty(|_| Ok(4.0), &PriorSpec::uniform(-1.0, 3.0)).unwrap();
        assert!((k - 0.25).abs() < 1e-12);
        let k = global_uncertainty(|h| Ok(1.0 / h), &PriorSpec::uniform(1.0, 2.0)).unwrap();
        assert!((k - 1.5).abs() < 1e-12);
        let err = global_uncertainty(Ok, &PriorSpec::uniform(0.0, 1.0)).unwrap_err();
        assert!(err.to_string().contains("h = 0"));
    }

    #[test]
    fn trapezoid_refinement_is_stable() {
        let f = |h: f64| Ok(1.0 + h * h);
        let coarse = global_uncertainty(f, &PriorSpec::uniform(0.0, 1.0)).unwrap();
        let fine = global_uncertainty(
            f,
            &PriorSpec {
                grid_points: 41,
                ..PriorSpec::uniform(0.0, 1.0)
            },
        )
        .unwrap();
        assert!(((coarse - fine) / fine).abs() < 5e-3);
    }

    #[test]
    fn fit_examples() {
        let sq: Vec<_> = (2..8).map(|l| (l, (l * l) as f64)).collect();
        let fit = fit_scaling(&sq).unwrap();
        assert!((fit.exponent - 2.0).abs() < 1e-12);
        assert!((fit.r_squared - 1.0).abs() < 1e-12);

        let pts: Vec<_> = (3..9).map(|l| (l, 7.0 * (l as f64).powf(1.5))).collect();
        let fit = fit_scaling(&pts).unwrap();
        assert!((fit.exponent - 1.5).abs() < 1e-12);
        assert!((fit.log_prefactor - 7f64.ln()).abs() < 1e-12);

        assert!(fit_scaling(&[(2, 1.0), (3, 2.0)]).is_err());
        assert!(fit_scaling(&[(2, 1.0), (3, 0.0), (4, 1.0)]).is_err());
        assert!(fit_scaling(&[(2, 1.0), (2, 2.0), (4, 1.0)]).is_err());
    }

    #[test]
    fn cfi_bounded_by_qfi_at_criticality() {
        let l = 6;
        let state = |g: f64| ground_state(&ModelSpec::ising(l, g)).map(|gs| gs.state);
        let qfi = qfi_centered(state, 1.0, 1e-3).unwrap();
        let cfi = probe_cfi(state, 1.0, 1e-3, Basis::X, Granularity::Bitstring).unwrap();
        assert!(cfi > 0.0);
        assert!(cfi <= qfi * (1.0 + 1e-6), "cfi {cfi} qfi {qfi}");
    }

    #[test]
    fn qfi_step_halving_is_stable() {
        for l in [4, 6, 8] {
            let state = |g: f64| ground_state(&ModelSpec::ising(l, g)).map(|gs| gs.state);
            let a = qfi_fidelity_susceptibility(state, 1.0, 1e-3).unwrap();
            let b = qfi_fidelity_susceptibility(state, 1.0, 5e-4).unwrap();
            assert!(((a - b) / b).abs() < 0.01, "L={l}: {a} vs {b}");
        }
    }
}
