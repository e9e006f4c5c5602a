//! Named experiment presets.
//!
//! All presets share one-mode boundary data `psi' = 0.6`, `psi'' = 0.4`,
//! `t = 0.5` on `D = 24`, where coherent tails are far below `1e-15`.

use crate::symbols::{phi_polynomial, PolySymbol};
use crate::C64;

pub const PRESET_NAMES: [&str; 4] = ["free", "harmonic", "kerr", "phi4"];

pub const KERR_COUPLING: f64 = 0.2;
/// `lambda / 4!` with `lambda = 1`.
pub const PHI4_COUPLING: f64 = 1.0 / 24.0;

/// Wick symbol of a preset for `modes` modes, with an optional coupling override.
///
/// - `free`: `0` (the evolution is the free Hamiltonian alone)
/// - `harmonic`: `|psi|^2`
/// - `kerr`: `|psi|^2 + g |psi|^4` summed over modes, `g = 0.2`
/// - `phi4`: `g sum_k phi_k^4 + (1/2) sum_k lambda_k^{-2 rho} |psi_k|^2`, `g = 1/24`
pub fn preset_symbol(
    name: &str,
    modes: usize,
    coupling: Option<f64>,
    scale_weights: &[f64],
    rho: f64,
) -> Option<PolySymbol> {
    let c = |x: f64| C64::new(x, 0.0);
    match name {
        "free" => Some(PolySymbol::zero(modes)),
        "harmonic" => Some(PolySymbol::number(modes)),
        "kerr" => {
            let g = coupling.unwrap_or(KERR_COUPLING);
            let mut p = PolySymbol::number(modes);
            for k in 0..modes {
                let mut e = vec![0; modes];
                e[k] = 2;
                p = &p + &PolySymbol::monomial(modes, &e, &e, c(g)).ok()?;
            }
            Some(p)
        }
        "phi4" => {
            let g = coupling.unwrap_or(PHI4_COUPLING);
            let weights: Vec<f64> = scale_weights.iter().map(|l| 0.5 * l.powf(-2.0 * rho)).collect();
            Some(&phi_polynomial(&[0.0, 0.0, 0.0, 0.0, g], modes) + &PolySymbol::weighted_number(&weights))
        }
        _ => None,
    }
}

/// Default construction for a preset.
pub fn preset_construction(name: &str) -> Option<&'static str> {
    match name {
        "free" | "phi4" => Some("theorem2"),
        "harmonic" | "kerr" => Some("theorem1"),
        _ => None,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::symbols::berezin_from_wick;

    #[test]
    fn preset_symbols() {
        assert!(preset_symbol("free", 1, None, &[1.0], 0.0).unwrap().is_zero());
        assert!(preset_symbol("nope", 1, None, &[1.0], 0.0).is_none());
        let kerr = preset_symbol("kerr", 1, None, &[1.0], 0.0).unwrap();
        let z = [C64::new(0.3, -0.4)];
        assert!((kerr.eval(&z).re - (0.25 + 0.2 * 0.0625)).abs() < 1e-15);
        // Berezin symbol 0.2 u^2 + 0.2 u - 0.6 with u = |psi|^2.
        let b = berezin_from_wick(&kerr).unwrap();
        assert!((b.eval(&z).re - (0.2 * 0.0625 + 0.2 * 0.25 - 0.6)).abs() < 1e-14);

        let phi = preset_symbol("phi4", 1, Some(1.0), &[1.0], 0.0).unwrap();
        let x: f64 = 0.3;
        assert!((phi.eval(&z).re - (x.powi(4) + 0.5 * 0.25)).abs() < 1e-15);
        assert!(phi.is_real(0.0));
        for name in PRESET_NAMES {
            assert!(preset_construction(name).is_some());
        }
    }
}
