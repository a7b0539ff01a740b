//! Counter-diabatic edge-state transfer in odd-site SSH chains.
//!
//! * [`chain`]: geometry, hopping schedules, zero mode, perturbations.
//! * [`gauge`]: nested-commutator gauge potentials and CD operators.
//! * [`dynamics`]: time evolution and transfer fidelity.
//! * [`pauli`]: qubit padding, Pauli decompositions, Trotter emulation.
//! * [`variational`]: SPSA optimization of NNN driving schedules.
//! * [`robustness`]: detuning and disorder sweeps.
//! * [`cli`]: the `edgecd` command line.

pub mod chain;
pub mod cli;
pub mod dynamics;
pub mod error;
pub mod export;
pub mod gauge;
pub mod operator;
pub mod pauli;
pub mod robustness;
pub mod seeds;
pub mod variational;

pub use error::{Error, Result};
