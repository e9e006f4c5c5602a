use std::collections::BTreeMap;
use std::sync::Arc;

use nalgebra::{DMatrix, DVector};
use rayon::prelude::*;

use super::{Monomial, PolySymbol, SymbolFn};
use crate::error::{Error, Result};
use crate::fock::{coherent_vector, max_abs, FockOperator, ModeSpace};
use crate::quadrature::{GaussianMomentTable, PhaseSpaceQuadrature};
use crate::util::{ln_factorial, sqrt_factorial_ratio};
use crate::C64;

fn check_modes(p: &PolySymbol, space: &ModeSpace) -> Result<()> {
    if p.modes() != space.num_modes() {
        return Err(Error::ShapeMismatch(format!(
            "symbol has {} modes, space has {}",
            p.modes(),
            space.num_modes()
        )));
    }
    Ok(())
}

/// Normal-ordered quantization: each monomial `conj(psi)^a psi^b` becomes `C^a A^b`.
///
/// Matrix elements are computed directly from the ladder action, which agrees
/// with multiplying the truncated ladder matrices.
pub fn wick_quantize(p: &PolySymbol, space: &Arc<ModeSpace>) -> Result<FockOperator> {
    check_modes(p, space)?;
    let d = space.dim();
    let mut m = DMatrix::<C64>::zeros(d, d);
    let mut target = vec![0u32; space.num_modes()];
    for (col, n) in space.basis().iter().enumerate() {
        'term: for (mono, c) in p.terms() {
            let mut amp = 1.0;
            for k in 0..space.num_modes() {
                let nk = n.0[k];
                let b = mono.annihilation[k];
                if b > nk {
                    continue 'term;
                }
                let lowered = nk - b;
                let raised = lowered + mono.creation[k];
                amp *= sqrt_factorial_ratio(nk, lowered) * sqrt_factorial_ratio(raised, lowered);
                target[k] = raised;
            }
            if let Some(row) = space.index_of(&target) {
                m[(row, col)] += c * amp;
            }
        }
    }
    Ok(FockOperator::from_matrix_unchecked(space.clone(), m))
}

/// Wick symbol `psi -> e^{-|psi|^2} <e^psi|Q|e^psi>` of a truncated operator.
/// Accurate up to the coherent-state truncation tail.
pub fn wick_symbol_of(q: &FockOperator) -> SymbolFn {
    let q = q.clone();
    SymbolFn::new(move |psi: &[C64]| {
        let v = match coherent_vector(q.space(), psi) {
            Ok(v) => v,
            Err(_) => return C64::new(f64::NAN, 0.0),
        };
        let norm: f64 = psi.iter().map(|z| z.norm_sqr()).sum();
        q.matrix_element(&v, &v) * (-norm).exp()
    })
}

/// Toeplitz (anti-Wick) quantization of a polynomial, with every Gaussian
/// integral taken from the shared moment table.
pub fn toeplitz_quantize_poly(p: &PolySymbol, space: &Arc<ModeSpace>) -> Result<FockOperator> {
    toeplitz_quantize_poly_with(p, space, GaussianMomentTable::shared())
}

/// `<m|Q|n> = int D[psi] e^{-|psi|^2} p(psi) psi^m conj(psi)^n / sqrt(m! n!)`.
pub fn toeplitz_quantize_poly_with(
    p: &PolySymbol,
    space: &Arc<ModeSpace>,
    table: &GaussianMomentTable,
) -> Result<FockOperator> {
    check_modes(p, space)?;
    let d = space.dim();
    let modes = space.num_modes();
    let mut out = DMatrix::<C64>::zeros(d, d);
    let mut row_index = vec![0u32; modes];
    let mut psi_pow = vec![0u32; modes];
    let mut conj_pow = vec![0u32; modes];
    for (col, n) in space.basis().iter().enumerate() {
        for (mono, c) in p.terms() {
            // Only the row with m = n + a - b can be nonzero; anything else
            // integrates to zero through the angular part.
            let mut ok = true;
            for k in 0..modes {
                let m = n.0[k] as i64 + mono.creation[k] as i64 - mono.annihilation[k] as i64;
                if m < 0 {
                    ok = false;
                    break;
                }
                row_index[k] = m as u32;
            }
            if !ok {
                continue;
            }
            let Some(row) = space.index_of(&row_index) else {
                continue;
            };
            let mut norm = 0.0;
            for k in 0..modes {
                psi_pow[k] = mono.annihilation[k] + row_index[k];
                conj_pow[k] = mono.creation[k] + n.0[k];
                norm += 0.5 * (ln_factorial(row_index[k] as u64) + ln_factorial(n.0[k] as u64));
            }
            let moment = table.moment_multi(&psi_pow, &conj_pow)?;
            out[(row, col)] += c * (moment * (-norm).exp());
        }
    }
    Ok(FockOperator::from_matrix_unchecked(space.clone(), out))
}

/// Result of a quadrature-based Toeplitz quantization.
#[derive(Debug, Clone)]
pub struct ToeplitzApprox {
    /// Operator computed with the refined rule.
    pub operator: FockOperator,
    /// Largest matrix-entry change between the base and the refined rule.
    pub refinement_change: f64,
}

const NODE_CHUNK: usize = 2048;

/// Toeplitz quantization of an arbitrary symbol on a single rule, without the
/// refinement check. Deterministic: node chunks are reduced in a fixed order.
pub fn toeplitz_quantize_fn_single(
    f: &SymbolFn,
    space: &Arc<ModeSpace>,
    quad: &PhaseSpaceQuadrature,
) -> Result<FockOperator> {
    if quad.modes() != space.num_modes() {
        return Err(Error::ShapeMismatch(format!(
            "quadrature has {} modes, space has {}",
            quad.modes(),
            space.num_modes()
        )));
    }
    let d = space.dim();
    let chunks: Vec<(usize, usize)> = (0..quad.len())
        .step_by(NODE_CHUNK)
        .map(|s| (s, (s + NODE_CHUNK).min(quad.len())))
        .collect();
    let partials: Vec<Result<DMatrix<C64>>> = chunks
        .par_iter()
        .map(|&(start, end)| {
            let width = end - start;
            let mut rows = DMatrix::<C64>::zeros(d, width);
            let mut weighted = DMatrix::<C64>::zeros(d, width);
            for (j, i) in (start..end).enumerate() {
                let psi = quad.node(i);
                let value = f.eval(psi);
                if !(value.re.is_finite() && value.im.is_finite()) {
                    return Err(Error::NonFinite {
                        node: format!("{psi:?}"),
                    });
                }
                let s = scaled_coherent(space, psi, quad.log_weight(i));
                rows.set_column(j, &s);
                weighted.set_column(j, &(s * value));
            }
            Ok(weighted * rows.adjoint())
        })
        .collect();
    let mut total = DMatrix::<C64>::zeros(d, d);
    for p in partials {
        total += p?;
    }
    Ok(FockOperator::from_matrix_unchecked(space.clone(), total))
}

// sqrt(w) * coherent_vector(psi), built in log space so large nodes with tiny
// weights stay finite.
fn scaled_coherent(space: &ModeSpace, psi: &[C64], log_weight: f64) -> DVector<C64> {
    let cutoff = space.cutoff() as usize;
    let per_mode: Vec<Vec<(f64, f64)>> = psi
        .iter()
        .map(|z| {
            let (r, arg) = (z.norm(), z.arg());
            (0..=cutoff)
                .map(|n| {
                    let ln_mag = if n == 0 { 0.0 } else { n as f64 * r.ln() };
                    (ln_mag - 0.5 * ln_factorial(n as u64), n as f64 * arg)
                })
                .collect()
        })
        .collect();
    DVector::from_iterator(
        space.dim(),
        space.basis().iter().map(|n| {
            let mut ln_mag = 0.5 * log_weight;
            let mut phase = 0.0;
            for (k, &nk) in n.0.iter().enumerate() {
                let (lm, ph) = per_mode[k][nk as usize];
                ln_mag += lm;
                phase += ph;
            }
            C64::from_polar(ln_mag.exp(), phase)
        }),
    )
}

/// Toeplitz quantization of an arbitrary bounded symbol by quadrature.
///
/// The rule is compared against its refinement (both orders doubled); the
/// refined operator is returned together with the change. When `tolerance` is
/// given, a larger change is reported as non-convergence.
pub fn toeplitz_quantize_fn(
    f: &SymbolFn,
    space: &Arc<ModeSpace>,
    quad: &PhaseSpaceQuadrature,
    tolerance: Option<f64>,
) -> Result<ToeplitzApprox> {
    let coarse = toeplitz_quantize_fn_single(f, space, quad)?;
    let fine_rule = quad.refined()?;
    let fine = toeplitz_quantize_fn_single(f, space, &fine_rule)?;
    let change = coarse.max_abs_diff(&fine);
    if let Some(tol) = tolerance {
        if !(change <= tol) {
            return Err(Error::QuadratureNotConverged {
                change,
                tolerance: tol,
            });
        }
    }
    Ok(ToeplitzApprox {
        operator: fine,
        refinement_change: change,
    })
}

/// Polynomial Berezin symbol recovered from an operator.
#[derive(Debug, Clone)]
pub struct BerezinFit {
    pub symbol: PolySymbol,
    /// Largest entry of `toeplitz(symbol) - Q` on the fitted block.
    pub residual: f64,
}

/// Fit a Berezin symbol of total degree `<= degree` to the full matrix.
/// Tolerance is `1e-10 * max(1, max |Q_mn|)`.
pub fn berezin_symbol_of(q: &FockOperator, degree: u32) -> Result<BerezinFit> {
    let tol = 1e-10 * max_abs(&q.matrix).max(1.0);
    berezin_symbol_on_interior(q, degree, 0, tol)
}

/// Solve `toeplitz(p) = Q` on the interior block `{ |n| <= D - margin }` by
/// least squares over all monomials of degree `<= degree`.
///
/// The system splits by the shift `m - n = a - b` of each monomial, so each
/// shift class is solved separately.
pub fn berezin_symbol_on_interior(
    q: &FockOperator,
    degree: u32,
    margin: u32,
    tolerance: f64,
) -> Result<BerezinFit> {
    let space = q.space().clone();
    let modes = space.num_modes();
    let inner = space.interior_dim(margin)?;
    let basis = &space.basis()[..inner];

    let mut classes: BTreeMap<Vec<i64>, Vec<Monomial>> = BTreeMap::new();
    for mono in monomials_up_to(modes, degree) {
        let shift: Vec<i64> = mono
            .creation
            .iter()
            .zip(&mono.annihilation)
            .map(|(&a, &b)| a as i64 - b as i64)
            .collect();
        classes.entry(shift).or_default().push(mono);
    }

    let ln_fact: Vec<Vec<f64>> = basis
        .iter()
        .map(|n| n.0.iter().map(|&v| ln_factorial(v as u64)).collect())
        .collect();

    let mut symbol = PolySymbol::zero(modes);
    for (shift, monos) in &classes {
        // Equations: pairs (m, n) in the block with m - n = shift.
        let mut pairs = Vec::new();
        for (col, n) in basis.iter().enumerate() {
            let target: Option<Vec<u32>> = n
                .0
                .iter()
                .zip(shift)
                .map(|(&nk, &s)| u32::try_from(nk as i64 + s).ok())
                .collect();
            if let Some(t) = target {
                if let Some(row) = space.index_of(&t) {
                    if row < inner {
                        pairs.push((row, col));
                    }
                }
            }
        }
        if pairs.is_empty() {
            continue;
        }
        let mut a = DMatrix::<C64>::zeros(pairs.len(), monos.len());
        let mut rhs = DVector::<C64>::zeros(pairs.len());
        for (e, &(row, col)) in pairs.iter().enumerate() {
            rhs[e] = q.matrix[(row, col)];
            let m = &basis[row].0;
            for (j, mono) in monos.iter().enumerate() {
                // moment(b + m, a + n) / sqrt(m! n!), with b + m = a + n here.
                let mut ln_val = 0.0;
                for k in 0..modes {
                    let top = (mono.annihilation[k] + m[k]) as u64;
                    ln_val += ln_factorial(top) - 0.5 * (ln_fact[row][k] + ln_fact[col][k]);
                }
                a[(e, j)] = C64::new(ln_val.exp(), 0.0);
            }
        }
        // Column equilibration before the SVD solve.
        let scales: Vec<f64> = (0..monos.len())
            .map(|j| a.column(j).norm().max(f64::MIN_POSITIVE))
            .collect();
        for (j, s) in scales.iter().enumerate() {
            a.column_mut(j).unscale_mut(*s);
        }
        let svd = a.svd(true, true);
        let x = svd
            .solve(&rhs, 1e-14)
            .map_err(|_| Error::Singular("berezin_symbol_of"))?;
        for (j, mono) in monos.iter().enumerate() {
            symbol.add_term(mono.clone(), x[j] / scales[j]);
        }
    }
    let symbol = symbol.pruned(1e-13 * max_abs(&q.matrix).max(1.0));

    let recon = toeplitz_quantize_poly(&symbol, &space)?;
    let diff = &recon.matrix - &q.matrix;
    let residual = max_abs(&diff.view((0, 0), (inner, inner)).into_owned());
    if !(residual <= tolerance) {
        return Err(Error::NoPolynomialSymbol {
            degree,
            residual,
            tolerance,
        });
    }
    Ok(BerezinFit { symbol, residual })
}

/// All monomials over `modes` modes with total degree `<= degree`.
pub fn monomials_up_to(modes: usize, degree: u32) -> Vec<Monomial> {
    let mut out = Vec::new();
    let mut exps = vec![0u32; 2 * modes];
    fn rec(pos: usize, left: u32, exps: &mut Vec<u32>, modes: usize, out: &mut Vec<Monomial>) {
        if pos == exps.len() {
            out.push(Monomial::new(exps[..modes].to_vec(), exps[modes..].to_vec()));
            return;
        }
        for e in 0..=left {
            exps[pos] = e;
            rec(pos + 1, left - e, exps, modes, out);
        }
        exps[pos] = 0;
    }
    rec(0, degree, &mut exps, modes, &mut out);
    out
}
