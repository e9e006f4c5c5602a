//! Polynomial symbol calculus: Wick and Berezin symbols, both quantization
//! maps, conversions between them, the Berezin product expansion and numeric
//! ellipticity diagnostics.
//!
//! Pairing convention: a monomial `conj(psi)^a psi^b` is Wick-quantized to
//! `C^a A^b`. With coherent states `e^psi` satisfying `A e^psi = psi e^psi`
//! this is the only pairing for which the Wick symbol of `wick_quantize(p)`
//! is `p` itself.

mod calculus;
mod estimates;
mod io;
mod poly;
mod quantize;

use std::fmt;
use std::sync::Arc;

use rand::Rng;

use crate::C64;

pub use calculus::{
    berezin_from_wick, berezin_from_wick_with, compose_expansion, phi_polynomial, wick_from_berezin,
    wick_from_berezin_with,
};
pub use estimates::{
    ellipticity_estimate, hypoellipticity_estimate, EllipticityReport, HypoellipticityReport,
    ShellReport, ELLIPTIC_THRESHOLD,
};
pub use io::{format_symbol, parse_symbol, read_symbol_file, write_symbol_file};
pub use poly::{Monomial, PolySymbol};
pub use quantize::{
    berezin_symbol_of, berezin_symbol_on_interior, monomials_up_to, toeplitz_quantize_fn,
    toeplitz_quantize_fn_single, toeplitz_quantize_poly, toeplitz_quantize_poly_with, wick_quantize,
    wick_symbol_of, BerezinFit, ToeplitzApprox,
};

/// Black-box symbol `C^M -> C`, e.g. a resolvent of a polynomial symbol.
#[derive(Clone)]
pub struct SymbolFn(Arc<dyn Fn(&[C64]) -> C64 + Send + Sync>);

impl SymbolFn {
    pub fn new(f: impl Fn(&[C64]) -> C64 + Send + Sync + 'static) -> Self {
        Self(Arc::new(f))
    }

    pub fn from_poly(p: PolySymbol) -> Self {
        Self::new(move |psi| p.eval(psi))
    }

    pub fn eval(&self, psi: &[C64]) -> C64 {
        (self.0)(psi)
    }
}

impl fmt::Debug for SymbolFn {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str("SymbolFn(..)")
    }
}

/// Every monomial of degree `<= degree` with a coefficient drawn uniformly
/// from the square `[-1, 1] x [-1, 1] i`.
pub fn random_symbol<R: Rng + ?Sized>(rng: &mut R, modes: usize, degree: u32) -> PolySymbol {
    let terms = monomials_up_to(modes, degree).into_iter().map(|m| {
        let c = C64::new(rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0));
        (m, c)
    });
    PolySymbol::from_terms(modes, terms).expect("monomials match the mode count")
}

/// Real-valued random symbol: the real part of [`random_symbol`].
pub fn random_real_symbol<R: Rng + ?Sized>(rng: &mut R, modes: usize, degree: u32) -> PolySymbol {
    random_symbol(rng, modes, degree).real_part()
}
