//! Entanglement fidelity of two-photon heralded Bell states between atomic
//! memories, limited by photon recoil and emission-time randomness.
//!
//! The crate is organised bottom-up: [`phase_space`] holds the coherent-state
//! algebra, [`atoms`] the species and mode parameters, [`temporal`] the
//! wavepacket and window functions, [`herald`] the beamsplitter/heralding
//! engine with its quadrature and Monte-Carlo paths, [`error_budget`] the
//! closed-form error estimates and the recoil table, and [`rewind`] the
//! state-dependent displacements that undo the recoil entanglement.

pub mod atoms;
pub mod config;
pub mod error;
pub mod error_budget;
pub mod herald;
pub mod phase_space;
pub mod quadrature;
pub mod report;
pub mod rewind;
pub mod temporal;

pub use error::{Error, Result};
