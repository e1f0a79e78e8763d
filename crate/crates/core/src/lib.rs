//! Exact verification engine for the integral transform `I(α)`, the
//! Macdonald-type difference operator `D`, their eigenfunctions, the
//! quasi-eigenfunction `F(α)` and the Fock-space operators `H_r`.

pub mod error;
pub mod par;
pub mod scalar;

pub use error::{EngineError, Result, ScalarError};
pub mod params;
pub mod series;
pub mod check;
pub mod qhyper;
pub mod operators;
pub mod spectral;
pub mod quasi;
pub mod fock;
pub mod golden;
pub mod cache;
pub mod registry;
