//! Dense state-vector simulation of teleportation through cross-Bell
//! channels.
//!
//! An `n`-qubit client state is sent over `n` Bell pairs whose qubits are
//! interleaved with the cross product `∇`. Alice measures `n` Bell pairs,
//! sends `2n` classical bits, and Bob undoes one Pauli-type unitary per
//! slot. The [`oracle`] module re-derives every correction from first
//! principles and audits a set of printed reference tables.
//!
//! Bell naming follows the source tables, not the common textbook
//! convention: `Ψ±` are built from `|00⟩ ± |11⟩` and `Φ±` from
//! `|01⟩ ± |10⟩`.

pub mod bell;
pub mod error;
pub mod measure;
pub mod oracle;
pub mod statevec;
pub mod teleport;

/// Numerical tolerances.
pub mod tol {
    /// Checks whose inputs are exactly representable (norms, Gram entries).
    pub const EXACT: f64 = 1e-12;
    /// Results of chained floating-point pipelines over `3n` qubits.
    pub const CHAINED: f64 = 1e-9;
}

pub use bell::{BellKind, BellOutcome, ChannelSpec, QubitPair};
pub use error::{Error, Result};
pub use statevec::{Amplitude, PureState, QubitId, Unitary2};
pub use teleport::{Mode, ProtocolLayout, TeleportReport};
