//! Gate programs built from signed, fixed-duration generator exponentials.
//!
//! A [`GateSequence`] holds no size-dependent data, so one program can be
//! replayed on chains of any length and its preparation time `D·τ_g` does
//! not depend on `L`.

use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{validation, Result};
use crate::spin_model::{ground_state, ModelKind, ModelSpec};
use crate::statevector::{evolve_in_place, fidelity, PauliGenerator, QuantumState};

pub const SEQUENCE_FORMAT_VERSION: u32 = 1;
pub const DEFAULT_TAU_G: f64 = 0.1;

/// Direction of time for one gate.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(try_from = "i8", into = "i8")]
pub enum Sign {
    Plus,
    Minus,
}

impl Sign {
    pub fn value(self) -> f64 {
        match self {
            Sign::Plus => 1.0,
            Sign::Minus => -1.0,
        }
    }
}

impl TryFrom<i8> for Sign {
    type Error = String;

    fn try_from(v: i8) -> std::result::Result<Self, String> {
        match v {
            1 => Ok(Sign::Plus),
            -1 => Ok(Sign::Minus),
            other => Err(format!("sign must be +1 or -1, got {other}")),
        }
    }
}

impl From<Sign> for i8 {
    fn from(s: Sign) -> i8 {
        match s {
            Sign::Plus => 1,
            Sign::Minus => -1,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct GateAction {
    pub generator: PauliGenerator,
    pub sign: Sign,
}

/// Number of distinct signed actions.
pub const NUM_ACTIONS: usize = 12;

impl GateAction {
    pub fn new(generator: PauliGenerator, sign: Sign) -> Self {
        Self { generator, sign }
    }

    /// Enumeration order: generator-major, `+` before `−`.
    pub fn from_index(i: usize) -> Self {
        assert!(i < NUM_ACTIONS, "action index {i} out of range");
        let sign = if i % 2 == 0 { Sign::Plus } else { Sign::Minus };
        Self {
            generator: PauliGenerator::ALL[i / 2],
            sign,
        }
    }

    pub fn index(self) -> usize {
        2 * self.generator.index() + usize::from(self.sign == Sign::Minus)
    }

    pub fn all() -> impl Iterator<Item = GateAction> {
        (0..NUM_ACTIONS).map(GateAction::from_index)
    }

    pub fn duration(self, tau_g: f64) -> f64 {
        self.sign.value() * tau_g
    }

    /// Applies `exp(−i·sign·τ_g·G)` in place.
    pub fn apply_in_place(self, state: &mut QuantumState, tau_g: f64) {
        let l = state.l();
        evolve_in_place(
            state.amplitudes_mut(),
            l,
            self.generator,
            self.duration(tau_g),
        );
    }
}

/// The target chain of a sequence, without a length.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ModelTemplate {
    pub kind: ModelKind,
    pub gamma: f64,
    pub field: f64,
    pub j_intra: f64,
    pub j_inter: f64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub critical_field: Option<f64>,
}

impl ModelTemplate {
    pub fn at(&self, l: usize) -> ModelSpec {
        ModelSpec {
            kind: self.kind,
            l,
            gamma: self.gamma,
            field: self.field,
            j_intra: self.j_intra,
            j_inter: self.j_inter,
            module_len: 2,
            critical_field: self.critical_field,
        }
    }
}

impl From<&ModelSpec> for ModelTemplate {
    fn from(s: &ModelSpec) -> Self {
        Self {
            kind: s.kind,
            gamma: s.gamma,
            field: s.field,
            j_intra: s.j_intra,
            j_inter: s.j_inter,
            critical_field: s.critical_field,
        }
    }
}

/// A learned preparation program.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GateSequence {
    pub version: u32,
    pub tau_g: f64,
    pub trained_at_l: usize,
    pub model: ModelTemplate,
    pub actions: Vec<GateAction>,
}

impl GateSequence {
    pub fn new(actions: Vec<GateAction>, tau_g: f64, trained_on: &ModelSpec) -> Self {
        Self {
            version: SEQUENCE_FORMAT_VERSION,
            tau_g,
            trained_at_l: trained_on.l,
            model: ModelTemplate::from(trained_on),
            actions,
        }
    }

    pub fn depth(&self) -> usize {
        self.actions.len()
    }

    /// `t_p = D·τ_g`.
    pub fn preparation_time(&self) -> f64 {
        self.depth() as f64 * self.tau_g
    }

    pub fn validate(&self) -> Result<()> {
        if self.version != SEQUENCE_FORMAT_VERSION {
            return Err(validation(format!(
                "unsupported sequence version {}",
                self.version
            )));
        }
        if !(self.tau_g > 0.0 && self.tau_g.is_finite()) {
            return Err(validation(format!(
                "gate duration {} must be positive",
                self.tau_g
            )));
        }
        Ok(())
    }

    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(self)?)
    }

    pub fn from_json(s: &str) -> Result<Self> {
        let seq: Self = serde_json::from_str(s)?;
        seq.validate()?;
        Ok(seq)
    }

    pub fn save(&self, path: impl AsRef<Path>) -> Result<()> {
        let mut text = self.to_json()?;
        text.push('\n');
        std::fs::write(path, text)?;
        Ok(())
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        Self::from_json(&std::fs::read_to_string(path)?)
    }
}

/// Field-aligned product state: `⊗|−⟩ₓ` for Ising, `⊗|↓⟩_z` for XY/MXY.
pub fn initial_state(spec: &ModelSpec) -> Result<QuantumState> {
    spec.validate()?;
    let l = spec.l;
    match spec.kind {
        ModelKind::Ising => {
            let h = std::f64::consts::FRAC_1_SQRT_2;
            QuantumState::product(
                l,
                [
                    num_complex::Complex64::new(h, 0.0),
                    num_complex::Complex64::new(-h, 0.0),
                ],
            )
        }
        ModelKind::Xy | ModelKind::Mxy => Ok(QuantumState::basis(l, (1usize << l) - 1)),
    }
}

/// Result of replaying a sequence.
#[derive(Debug, Clone)]
pub struct Prepared {
    pub state: QuantumState,
    pub t_p: f64,
}

/// Runs the program from the initial product state of `spec`'s chain.
pub fn prepare(seq: &GateSequence, spec: &ModelSpec) -> Result<Prepared> {
    seq.validate()?;
    let mut state = initial_state(spec)?;
    for a in &seq.actions {
        a.apply_in_place(&mut state, seq.tau_g);
    }
    Ok(Prepared {
        state,
        t_p: seq.preparation_time(),
    })
}

/// Fidelity to the ground state of `spec` after each prefix of the program,
/// starting with the empty prefix.
pub fn sequence_fidelity_profile(
    seq: &GateSequence,
    spec: &ModelSpec,
) -> Result<Vec<(usize, f64)>> {
    seq.validate()?;
    let target = ground_state(spec)?.state;
    let mut state = initial_state(spec)?;
    let mut out = Vec::with_capacity(seq.depth() + 1);
    out.push((0, fidelity(&state, &target)?));
    for (k, a) in seq.actions.iter().enumerate() {
        a.apply_in_place(&mut state, seq.tau_g);
        out.push((k + 1, fidelity(&state, &target)?));
    }
    Ok(out)
}
