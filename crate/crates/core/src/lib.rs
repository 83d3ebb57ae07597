//! Analytic S-matrix of a three-level engine that shuttles quanta between a
//! cold and a warm harmonic oscillator, together with a brute-force
//! evolution oracle that every closed form is checked against.
//!
//! The Hilbert space is `cold ⊗ C³ ⊗ warm` with the engine levels ordered
//! `g, e, f`. Basis index of `|m, level, k⟩` is `(m·3 + level)·warm_dim + k`.
//! Oscillators are truncated at a Fock cutoff equal to the quanta bound, which
//! makes every computation exact on the states carrying at most that many
//! quanta (the *retained* space).

// `!(deviation <= tolerance)` is deliberate: NaN must fail a check.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod cli;
pub mod energy;
pub mod error;
pub mod fock;
pub mod linalg;
pub mod oracle;
pub mod params;
pub mod pulse;
pub mod sectors;
pub mod simulate;

pub use error::{Error, Result};
pub use fock::{EngineLevel, Factor, FockCutoff, Operator, ProductSpace};
pub use params::{CycleParams, PulseMode};

/// Complex scalar used throughout.
pub type C64 = nalgebra::Complex<f64>;
/// Dense complex matrix.
pub type CMatrix = nalgebra::DMatrix<C64>;
/// Dense complex column vector.
pub type CVector = nalgebra::DVector<C64>;

pub(crate) const I: C64 = C64::new(0.0, 1.0);

#[inline]
pub(crate) fn re(x: f64) -> C64 {
    C64::new(x, 0.0)
}

/// `e^{iφ}`
#[inline]
pub(crate) fn cis(phi: f64) -> C64 {
    C64::new(phi.cos(), phi.sin())
}
