//! Reachable-set propagation, geometric averaging, contraction certificates
//! and funnel control for phase-indexed differential inclusions
//! `x' ∈ ε X(φ, x)`, `φ' ∈ Ω(x)`.

pub mod contraction;
pub mod error;
pub mod hybrid;
pub mod inclusion;
pub mod reach;
pub mod rng;
pub mod scaling;
pub mod sets;

pub use error::{Error, Result};
pub use inclusion::{PhaseVelocity, SetValuedField, VertexSample};
pub use sets::{CompactSet, DirectionGrid};
