//! Resonance states attached to higher-order poles of the scattering
//! matrix, realized in a finite-dimensional Jordan-chain model.
//!
//! The crate covers four pieces:
//!
//! - [`types`] and [`semigroup`]: the chain basis attached to a complex pole
//!   `z = E_R - i Gamma/2`, the non-diagonalizable restricted Hamiltonian,
//!   and its closed-form semigroup evolution for t >= 0, cross-checked by an
//!   independent matrix exponential.
//! - [`density`]: the binomial anti-diagonal density operators, their purely
//!   exponential decay `W(t) = exp(-Gamma t) W(0)`, and a brute-force scan
//!   proving those operators exhaust the exponentially decaying ones.
//! - [`lineshape`]: Breit-Wigner shapes, their energy derivatives, and
//!   weighted combinations for higher-order resonance distributions.
//! - [`fitting`]: Levenberg-Marquardt fitting of multi-pole rational
//!   amplitudes to intensity data, with residual-plateau order selection.
//!
//! The grid sweeps and candidate scans run on rayon when the default
//! `parallel` feature is enabled; `*_seq` twins keep the single-threaded
//! path available for comparison.

pub mod density;
pub mod error;
pub mod fitting;
pub mod lineshape;
mod par;
pub mod semigroup;
pub mod types;

pub use error::{GamowError, Result};
pub use types::{binomial, pole_position, ComplexPole, GamowOperator, GamowState, TimeGrid};
