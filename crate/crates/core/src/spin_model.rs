//! Open-boundary Ising, XY and modular-XY spin chains.
//!
//! ```text
//! Ising: H = Σ_{i<L} Z_i Z_{i+1} + g Σ_i X_i
//! XY:    H = Σ_{i<L} [(1+γ)/2 X_i X_{i+1} + (1−γ)/2 Y_i Y_{i+1}] + g Σ_i Z_i
//! MXY:   XY with bond couplings alternating j_intra, j_inter (modules of 2 sites)
//! ```

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{numerical, validation, Error, Result};
use crate::linalg::{lanczos_lowest, symmetric_eigen_sorted, LanczosOptions};
use crate::operator::{HamiltonianOperator, Pauli, PauliString};
use crate::statevector::QuantumState;

/// Default MXY critical field.
pub const MXY_CRITICAL_FIELD: f64 = 0.7;
/// Inter-module coupling placing the dimerized chain's transition near
/// `g = sqrt(j_intra · j_inter) = 0.7`.
pub const MXY_DEFAULT_J_INTER: f64 = 0.49;

/// Largest chain handled by the dense statevector backend by default.
pub const DEFAULT_MAX_L: usize = 16;
/// Gaps below this are treated as exact degeneracies.
pub const DEGENERACY_TOL: f64 = 1e-10;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ModelKind {
    Ising,
    Xy,
    Mxy,
}

fn default_gamma() -> f64 {
    1.0
}
fn default_j_intra() -> f64 {
    1.0
}
fn default_j_inter() -> f64 {
    MXY_DEFAULT_J_INTER
}
fn default_module_len() -> usize {
    2
}

/// A spin chain and the total field `g = B + h` acting on it.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ModelSpec {
    pub kind: ModelKind,
    pub l: usize,
    #[serde(default = "default_gamma")]
    pub gamma: f64,
    pub field: f64,
    #[serde(default = "default_j_intra")]
    pub j_intra: f64,
    #[serde(default = "default_j_inter")]
    pub j_inter: f64,
    #[serde(default = "default_module_len")]
    pub module_len: usize,
    /// Overrides the MXY critical field; ignored for the other kinds.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub critical_field: Option<f64>,
}

impl ModelSpec {
    pub fn ising(l: usize, field: f64) -> Self {
        Self {
            kind: ModelKind::Ising,
            l,
            gamma: 1.0,
            field,
            j_intra: 1.0,
            j_inter: MXY_DEFAULT_J_INTER,
            module_len: 2,
            critical_field: None,
        }
    }

    pub fn xy(l: usize, gamma: f64, field: f64) -> Self {
        Self {
            kind: ModelKind::Xy,
            gamma,
            ..Self::ising(l, field)
        }
    }

    pub fn mxy(l: usize, gamma: f64, field: f64, j_intra: f64, j_inter: f64) -> Self {
        Self {
            kind: ModelKind::Mxy,
            gamma,
            j_intra,
            j_inter,
            ..Self::ising(l, field)
        }
    }

    pub fn with_l(&self, l: usize) -> Self {
        Self { l, ..self.clone() }
    }

    pub fn with_field(&self, field: f64) -> Self {
        Self {
            field,
            ..self.clone()
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.l < 2 {
            return Err(validation(format!(
                "chain length L = {} must be at least 2",
                self.l
            )));
        }
        if !self.field.is_finite() {
            return Err(validation("field must be finite"));
        }
        if self.kind != ModelKind::Ising && !(0.0..=1.0).contains(&self.gamma) {
            return Err(validation(format!(
                "anisotropy γ = {} outside [0, 1]",
                self.gamma
            )));
        }
        if self.kind == ModelKind::Mxy {
            if self.module_len != 2 {
                return Err(validation("MXY chains use modules of exactly 2 sites"));
            }
            if self.l % 2 != 0 {
                return Err(validation(format!(
                    "MXY chain length L = {} must be even",
                    self.l
                )));
            }
            if !(self.j_intra.is_finite() && self.j_inter.is_finite()) {
                return Err(validation("MXY couplings must be finite"));
            }
        }
        Ok(())
    }

    /// Coupling multiplier for bond `(b, b+1)`, zero-based.
    pub fn bond_coupling(&self, b: usize) -> f64 {
        match self.kind {
            ModelKind::Mxy => {
                if b % self.module_len == self.module_len - 1 {
                    self.j_inter
                } else {
                    self.j_intra
                }
            }
            _ => 1.0,
        }
    }
}

/// Term list of the chain Hamiltonian. Zero-weight terms are omitted.
pub fn build_hamiltonian(spec: &ModelSpec) -> Result<HamiltonianOperator> {
    spec.validate()?;
    let l = spec.l;
    let mut h = HamiltonianOperator::new(l);
    let mut push = |c: f64, s: PauliString| {
        if c != 0.0 {
            h.push(c, s);
        }
    };
    match spec.kind {
        ModelKind::Ising => {
            for i in 0..l - 1 {
                push(
                    1.0,
                    PauliString::from_sites(l, &[(i, Pauli::Z), (i + 1, Pauli::Z)]),
                );
            }
            for i in 0..l {
                push(spec.field, PauliString::from_sites(l, &[(i, Pauli::X)]));
            }
        }
        ModelKind::Xy | ModelKind::Mxy => {
            let cx = (1.0 + spec.gamma) / 2.0;
            let cy = (1.0 - spec.gamma) / 2.0;
            for i in 0..l - 1 {
                let j = spec.bond_coupling(i);
                push(
                    j * cx,
                    PauliString::from_sites(l, &[(i, Pauli::X), (i + 1, Pauli::X)]),
                );
                push(
                    j * cy,
                    PauliString::from_sites(l, &[(i, Pauli::Y), (i + 1, Pauli::Y)]),
                );
            }
            for i in 0..l {
                push(spec.field, PauliString::from_sites(l, &[(i, Pauli::Z)]));
            }
        }
    }
    Ok(h)
}

/// Field value at which the chain is critical.
pub fn critical_field(spec: &ModelSpec) -> f64 {
    match spec.kind {
        ModelKind::Ising | ModelKind::Xy => 1.0,
        ModelKind::Mxy => spec.critical_field.unwrap_or(MXY_CRITICAL_FIELD),
    }
}

#[derive(Debug, Clone)]
pub struct GroundState {
    pub energy: f64,
    pub state: QuantumState,
    /// Dimension of the lowest eigenspace (1 when non-degenerate).
    pub degeneracy: usize,
}

impl GroundState {
    pub fn is_degenerate(&self) -> bool {
        self.degeneracy > 1
    }
}

#[derive(Debug, Clone)]
pub struct GroundStateOptions {
    pub max_l: usize,
    /// Chains up to this length use full dense diagonalization.
    pub dense_max_l: usize,
    pub lanczos: LanczosOptions,
}

impl Default for GroundStateOptions {
    fn default() -> Self {
        Self {
            max_l: DEFAULT_MAX_L,
            dense_max_l: 8,
            lanczos: LanczosOptions::default(),
        }
    }
}

pub fn ground_state(spec: &ModelSpec) -> Result<GroundState> {
    ground_state_with(spec, &GroundStateOptions::default())
}

/// Lowest eigenpair of the chain.
///
/// Within a degenerate ground space the returned vector is the normalized
/// projection of `|00…0⟩` (falling back to the first basis vector of the
/// space when that projection vanishes). The largest-magnitude amplitude is
/// made real and positive.
pub fn ground_state_with(spec: &ModelSpec, opts: &GroundStateOptions) -> Result<GroundState> {
    let h = build_hamiltonian(spec)?;
    if spec.l > opts.max_l {
        return Err(Error::SizeCap {
            l: spec.l,
            cap: opts.max_l,
        });
    }
    let dim = h.dim();
    let (energy, space) = if spec.l <= opts.dense_max_l {
        let (vals, vecs) = symmetric_eigen_sorted(h.to_dense_real()?);
        let e0 = vals[0];
        let k = vals
            .iter()
            .take_while(|&&v| v - e0 < DEGENERACY_TOL)
            .count();
        let space: Vec<Vec<f64>> = (0..k)
            .map(|c| vecs.column(c).iter().copied().collect())
            .collect();
        (e0, space)
    } else {
        let mv = |x: &[f64], y: &mut [f64]| h.apply_real(x, y);
        let (e0, v0) = lanczos_lowest(dim, mv, &[], &opts.lanczos)?;
        let mut space = vec![v0];
        loop {
            if space.len() == dim {
                break;
            }
            let (e, v) = lanczos_lowest(dim, mv, &space, &opts.lanczos)?;
            if e - e0 < DEGENERACY_TOL {
                space.push(v);
            } else {
                break;
            }
        }
        (e0, space)
    };

    let degeneracy = space.len();
    let mut v = if degeneracy == 1 {
        space.into_iter().next().unwrap()
    } else {
        // projection of |00…0⟩ onto the eigenspace
        let mut p = vec![0.0; dim];
        for u in &space {
            let c = u[0];
            p.iter_mut().zip(u).for_each(|(pi, ui)| *pi += c * ui);
        }
        let n = p.iter().map(|x| x * x).sum::<f64>().sqrt();
        if n > 1e-8 {
            p.iter_mut().for_each(|x| *x /= n);
            p
        } else {
            space.into_iter().next().unwrap()
        }
    };
    fix_phase(&mut v);
    if v.iter().any(|x| !x.is_finite()) {
        return Err(numerical("eigensolver returned non-finite amplitudes"));
    }
    let amps = v.into_iter().map(|x| Complex64::new(x, 0.0)).collect();
    Ok(GroundState {
        energy,
        state: QuantumState::normalized(spec.l, amps)?,
        degeneracy,
    })
}

fn fix_phase(v: &mut [f64]) {
    let max = v.iter().fold(0.0f64, |m, x| m.max(x.abs()));
    if let Some(pivot) = v.iter().position(|x| x.abs() >= max * (1.0 - 1e-9)) {
        if v[pivot] < 0.0 {
            v.iter_mut().for_each(|x| *x = -*x);
        }
    }
}
