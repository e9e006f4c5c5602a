//! Sliced coherent-state path integrals on a truncated bosonic Fock space.
//!
//! The crate models `M` bosonic modes with total occupation at most `D`,
//! implements the Wick/Berezin symbol calculus on that space, Gaussian
//! phase-space quadrature, and time-sliced propagators whose matrix elements
//! between coherent states converge to the exact ones as the slice count grows.

pub mod error;
pub mod experiment;
pub mod fock;
pub mod presets;
pub mod propagator;
pub mod quadrature;
pub mod symbols;
pub mod util;

pub type C64 = num_complex::Complex64;

pub use error::{Error, Result};
pub use fock::{FockIndex, FockOperator, FockVector, ModeSpace};
pub use quadrature::{GaussianMomentTable, PhaseSpaceQuadrature};
pub use symbols::{PolySymbol, SymbolFn};
