//! Conversions between Wick and Berezin symbols and the Berezin product expansion.

use super::{Monomial, PolySymbol};
use crate::error::Result;
use crate::quadrature::GaussianMomentTable;
use crate::util::{binomial, factorial};
use crate::C64;

/// Berezin symbol of the operator whose Wick symbol is `p`:
///
/// `P^b(psi) = sum_j (-1)^j / (2j)! int D[eta] e^{-|eta|^2} (d^{2j} P^w)(psi; eta)`
///
/// with `d^{2j}` the real Frechet differential in direction `eta`. Since
/// `d^{2j} P(psi; eta) / (2j)!` is the `s^{2j}` coefficient of `P(psi + s eta)`, the
/// sum expands each monomial in `eta` and integrates the even-degree parts with
/// the moment table.
pub fn berezin_from_wick(p: &PolySymbol) -> Result<PolySymbol> {
    berezin_from_wick_with(p, GaussianMomentTable::shared())
}

pub fn berezin_from_wick_with(p: &PolySymbol, table: &GaussianMomentTable) -> Result<PolySymbol> {
    shifted_gaussian_average(p, table, true)
}

/// Wick symbol of the Toeplitz operator with Berezin symbol `p`: the Gaussian
/// smoothing `psi -> int D[eta] e^{-|eta|^2} p(psi + eta)`.
pub fn wick_from_berezin(p: &PolySymbol) -> Result<PolySymbol> {
    wick_from_berezin_with(p, GaussianMomentTable::shared())
}

pub fn wick_from_berezin_with(p: &PolySymbol, table: &GaussianMomentTable) -> Result<PolySymbol> {
    shifted_gaussian_average(p, table, false)
}

// One mode's share of the expansion of conj(psi + eta)^a (psi + eta)^b:
// (remaining exponents, eta exponents, binomial factor).
fn mode_splits(a: u32, b: u32) -> Vec<((u32, u32), (u32, u32), f64)> {
    let mut out = Vec::new();
    for ea in 0..=a {
        for eb in 0..=b {
            out.push(((a - ea, b - eb), (ea, eb), binomial(a, ea) * binomial(b, eb)));
        }
    }
    out
}

// alternating = true: keep only even eta-degree 2j with sign (-1)^j (Wick -> Berezin).
// alternating = false: keep every eta-degree with sign +1 (Berezin -> Wick).
fn shifted_gaussian_average(
    p: &PolySymbol,
    table: &GaussianMomentTable,
    alternating: bool,
) -> Result<PolySymbol> {
    let modes = p.modes();
    let mut out = PolySymbol::zero(modes);
    for (mono, c) in p.terms() {
        let splits: Vec<_> = (0..modes)
            .map(|k| mode_splits(mono.creation[k], mono.annihilation[k]))
            .collect();
        let mut choice = vec![0usize; modes];
        loop {
            let mut rest = Monomial::constant(modes);
            let mut eta_conj = vec![0u32; modes];
            let mut eta_lin = vec![0u32; modes];
            let mut factor = 1.0;
            for k in 0..modes {
                let ((ra, rb), (ea, eb), f) = splits[k][choice[k]];
                rest.creation[k] = ra;
                rest.annihilation[k] = rb;
                eta_conj[k] = ea;
                eta_lin[k] = eb;
                factor *= f;
            }
            let eta_degree: u32 = eta_conj.iter().chain(&eta_lin).sum();
            let keep = !alternating || eta_degree.is_multiple_of(2);
            if keep {
                // int eta^b conj(eta)^a
                let moment = table.moment_multi(&eta_lin, &eta_conj)?;
                if moment != 0.0 {
                    let sign = if alternating && (eta_degree / 2) % 2 == 1 { -1.0 } else { 1.0 };
                    out.add_term(rest, c * (sign * factor * moment));
                }
            }

            if !advance(&mut choice, &splits) {
                break;
            }
        }
    }
    Ok(out)
}

// Odometer over per-mode choices; false once every combination was visited.
fn advance<T>(choice: &mut [usize], options: &[Vec<T>]) -> bool {
    for (c, opts) in choice.iter_mut().zip(options) {
        *c += 1;
        if *c < opts.len() {
            return true;
        }
        *c = 0;
    }
    false
}

/// Partial sum of the Berezin product expansion
///
/// `(Q2 Q1)^b = sum_n (-1)^n / n! sum_{k_1..k_n} (d_conj^n Q2^b)(d_psi^n Q1^b)`
///
/// through `n = order`. For polynomials the series terminates at
/// `n = min(deg q2, deg q1)` and is then exact. Grouping the ordered mode tuples
/// into multi-indices `alpha` gives weights `(-1)^|alpha| / alpha!`.
pub fn compose_expansion(q2: &PolySymbol, q1: &PolySymbol, order: u32) -> PolySymbol {
    let modes = q2.modes();
    let top = order.min(q2.degree()).min(q1.degree());
    let mut out = PolySymbol::zero(modes);
    let mut alpha = vec![0u32; modes];
    add_terms(q2, q1, &mut alpha, 0, top, &mut out);
    out
}

fn add_terms(
    left: &PolySymbol,
    right: &PolySymbol,
    alpha: &mut Vec<u32>,
    mode: usize,
    budget: u32,
    out: &mut PolySymbol,
) {
    if mode == alpha.len() {
        let total: u32 = alpha.iter().sum();
        let weight: f64 = alpha.iter().map(|&a| 1.0 / factorial(a)).product::<f64>()
            * if total % 2 == 1 { -1.0 } else { 1.0 };
        let term = left * right;
        *out = &*out + &term.scale(C64::new(weight, 0.0));
        return;
    }
    let mut l = left.clone();
    let mut r = right.clone();
    for a in 0..=budget {
        alpha[mode] = a;
        if l.is_zero() || r.is_zero() {
            break;
        }
        add_terms(&l, &r, alpha, mode + 1, budget - a, out);
        l = l.d_conj(mode);
        r = r.d_psi(mode);
    }
    alpha[mode] = 0;
}

/// `coeffs[0] + sum_k sum_{m >= 1} coeffs[m] phi_k^m` with `phi_k = (psi_k + conj psi_k) / 2`,
/// expanded binomially into monomials.
pub fn phi_polynomial(coeffs: &[f64], modes: usize) -> PolySymbol {
    let mut out = PolySymbol::zero(modes);
    for (m, &c) in coeffs.iter().enumerate() {
        if c == 0.0 {
            continue;
        }
        if m == 0 {
            out.add_term(Monomial::constant(modes), C64::new(c, 0.0));
            continue;
        }
        let m = m as u32;
        let scale = c / 2f64.powi(m as i32);
        for k in 0..modes {
            for j in 0..=m {
                let mut mono = Monomial::constant(modes);
                mono.annihilation[k] = j;
                mono.creation[k] = m - j;
                out.add_term(mono, C64::new(scale * binomial(m, j), 0.0));
            }
        }
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::symbols::random_symbol;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn c(re: f64) -> C64 {
        C64::new(re, 0.0)
    }

    fn number_minus_one() -> PolySymbol {
        &PolySymbol::number(1) - &PolySymbol::constant(1, c(1.0))
    }

    // exp(-+Laplacian) applied term by term, with Laplacian = sum_k d_psi_k d_conj_k.
    fn heat_flow(p: &PolySymbol, sign: f64) -> PolySymbol {
        let mut out = p.clone();
        let mut term = p.clone();
        let mut j = 1.0;
        loop {
            let mut lap = PolySymbol::zero(p.modes());
            for k in 0..p.modes() {
                lap = &lap + &term.d_psi(k).d_conj(k);
            }
            if lap.is_zero() {
                break;
            }
            term = lap.scale(c(sign / j));
            out = &out + &term;
            j += 1.0;
        }
        out
    }

    #[test]
    fn constants_pass_through() {
        let k = PolySymbol::constant(2, C64::new(3.0, -1.0));
        assert_eq!(berezin_from_wick(&k).unwrap(), k);
        assert_eq!(wick_from_berezin(&k).unwrap(), k);
    }

    #[test]
    fn number_symbol_shift() {
        let b = berezin_from_wick(&PolySymbol::number(1)).unwrap();
        assert!(b.max_coeff_diff(&number_minus_one()) < 1e-15);
        let w = wick_from_berezin(&number_minus_one()).unwrap();
        assert!(w.max_coeff_diff(&PolySymbol::number(1)) < 1e-15);
    }

    #[test]
    fn conversions_agree_with_heat_flow() {
        let mut rng = ChaCha8Rng::seed_from_u64(21);
        for modes in 1..=2 {
            let p = random_symbol(&mut rng, modes, 5);
            let b = berezin_from_wick(&p).unwrap();
            assert!(b.max_coeff_diff(&heat_flow(&p, -1.0)) < 1e-12);
            let w = wick_from_berezin(&p).unwrap();
            assert!(w.max_coeff_diff(&heat_flow(&p, 1.0)) < 1e-12);
            assert!(b.principal_part().max_coeff_diff(&p.principal_part()) < 1e-14);
            let back = wick_from_berezin(&b).unwrap();
            assert!(back.max_coeff_diff(&p) < 1e-12);
        }
    }

    #[test]
    fn compose_expansion_basics() {
        let mut rng = ChaCha8Rng::seed_from_u64(2);
        let q2 = random_symbol(&mut rng, 2, 3);
        let k = PolySymbol::constant(2, C64::new(0.5, 2.0));
        for order in 0..4 {
            let r = compose_expansion(&q2, &k, order);
            assert!(r.max_coeff_diff(&q2.scale(C64::new(0.5, 2.0))) < 1e-14);
        }
        let q1 = random_symbol(&mut rng, 2, 3);
        assert!(compose_expansion(&q2, &q1, 0).max_coeff_diff(&(&q2 * &q1)) < 1e-14);

        // (|psi|^2 - 1)^2 - |psi|^2
        let n = number_minus_one();
        let full = compose_expansion(&n, &n, 4);
        let expected = &(&n * &n) - &PolySymbol::number(1);
        assert!(full.max_coeff_diff(&expected) < 1e-14);
    }

    #[test]
    fn phi_expansion() {
        let p = phi_polynomial(&[0.0, 0.0, 1.0], 1);
        assert_eq!(p.coeff(&Monomial::new(vec![2], vec![0])), c(0.25));
        assert_eq!(p.coeff(&Monomial::new(vec![0], vec![2])), c(0.25));
        assert_eq!(p.coeff(&Monomial::new(vec![1], vec![1])), c(0.5));
        assert!(p.is_real(0.0));
        let mut rng = ChaCha8Rng::seed_from_u64(9);
        for _ in 0..10 {
            let z = C64::new(rng.random::<f64>() * 2.0 - 1.0, rng.random::<f64>() * 2.0 - 1.0);
            assert!((p.eval(&[z]) - c(z.re * z.re)).norm() < 1e-14);
        }
        assert_eq!(phi_polynomial(&[2.5], 3), PolySymbol::constant(3, c(2.5)));
        let q = phi_polynomial(&[0.0, 1.0, 0.0, -0.3, 0.2], 2);
        assert!(q.is_real(1e-15));
    }
}
