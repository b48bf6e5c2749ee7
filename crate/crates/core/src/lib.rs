//! Simulation core: spin-chain models, an exact statevector engine,
//! learned gate-sequence preparation and Fisher-information metrology.

pub mod control;
pub mod error;
pub mod freefermion;
pub mod linalg;
pub mod metrology;
pub mod noise;
pub mod operator;
pub mod rl;
pub mod spin_model;
pub mod statevector;

pub use error::{Error, Result};
pub use operator::{HamiltonianOperator, Pauli, PauliString};
pub use spin_model::{ModelKind, ModelSpec};
pub use statevector::{PauliGenerator, QuantumState};
pub use control::{GateAction, GateSequence, ModelTemplate, Sign};
pub use metrology::{FisherKind, FisherRecord, PriorSpec, ScalingFit};
pub use noise::NoiseConfig;
pub use rl::TrainConfig;
