//! Time-sliced propagators between coherent states.
//!
//! Every sliced construction is realized as an operator product on the
//! truncated Fock space: `<e^{psi''}| F_N^N |e^{psi'}>` with one slice factor
//! `F_N` per time step. The chained phase-space integral that the product
//! stands for is evaluated independently by [`direct_contraction_check`].

use std::sync::Arc;
use std::time::Instant;

use nalgebra::{DMatrix, SymmetricEigen};
use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::fock::{coherent_vector, free_energies, free_hamiltonian, tail_bound, FockOperator, FockVector, ModeSpace};
use crate::quadrature::PhaseSpaceQuadrature;
use crate::symbols::{berezin_from_wick, toeplitz_quantize_fn, wick_quantize, PolySymbol, SymbolFn};
use crate::C64;

/// Boundary amplitudes must have `tail_bound` below this on the working space.
pub const TAIL_TOLERANCE: f64 = 1e-12;

/// Relative Hermiticity tolerance accepted by the exact and resolvent routes.
pub const HERMITIAN_TOLERANCE: f64 = 1e-10;

/// Refinement change above which a Toeplitz factor counts as unconverged.
pub const QUADRATURE_TOLERANCE: f64 = 1e-9;

#[derive(Debug, Clone)]
pub struct SliceConfig {
    pub t: f64,
    pub slices: usize,
    pub quad: Arc<PhaseSpaceQuadrature>,
    pub psi_in: Vec<C64>,
    pub psi_out: Vec<C64>,
}

impl SliceConfig {
    pub fn new(
        t: f64,
        slices: usize,
        quad: Arc<PhaseSpaceQuadrature>,
        psi_in: Vec<C64>,
        psi_out: Vec<C64>,
    ) -> Self {
        Self {
            t,
            slices,
            quad,
            psi_in,
            psi_out,
        }
    }

    pub fn with_slices(&self, slices: usize) -> Self {
        Self {
            slices,
            ..self.clone()
        }
    }

    pub fn validate(&self, space: &ModeSpace) -> Result<()> {
        if self.slices == 0 {
            return Err(Error::InvalidArgument("slice count must be at least 1".into()));
        }
        if !self.t.is_finite() {
            return Err(Error::InvalidArgument(format!("time {} is not finite", self.t)));
        }
        if self.quad.modes() != space.num_modes() {
            return Err(Error::ShapeMismatch(format!(
                "quadrature has {} modes, space has {}",
                self.quad.modes(),
                space.num_modes()
            )));
        }
        for (name, psi) in [("psi_in", &self.psi_in), ("psi_out", &self.psi_out)] {
            if psi.len() != space.num_modes() {
                return Err(Error::ShapeMismatch(format!(
                    "{name} has {} entries, space has {} modes",
                    psi.len(),
                    space.num_modes()
                )));
            }
            let tb = tail_bound(space, psi);
            if !(tb < TAIL_TOLERANCE) {
                return Err(Error::InvalidArgument(format!(
                    "{name} tail bound {tb:e} exceeds {TAIL_TOLERANCE:e}"
                )));
            }
        }
        Ok(())
    }
}

fn check_hermitian(h: &FockOperator) -> Result<()> {
    let scale = crate::fock::max_abs(&h.matrix).max(1.0);
    let deviation = h.hermitian_deviation();
    if deviation > HERMITIAN_TOLERANCE * scale {
        return Err(Error::NotHermitian { deviation });
    }
    Ok(())
}

fn check_real(p: &PolySymbol) -> Result<()> {
    if !p.is_real(1e-14 * p.max_coeff().max(1.0)) {
        return Err(Error::InvalidArgument("slice constructions need a real symbol".into()));
    }
    Ok(())
}

/// `e^{-iHt}` from the eigendecomposition of the Hermitian part of `h`.
pub fn exact_propagator(h: &FockOperator, t: f64) -> Result<FockOperator> {
    check_hermitian(h)?;
    let sym = (&h.matrix + h.matrix.adjoint()) * C64::new(0.5, 0.0);
    let eig = SymmetricEigen::new(sym);
    let phases = eig.eigenvalues.map(|e| C64::from_polar(1.0, -e * t));
    let v = &eig.eigenvectors;
    let mut scaled = v.clone();
    for (j, ph) in phases.iter().enumerate() {
        scaled.column_mut(j).iter_mut().for_each(|x| *x *= ph);
    }
    Ok(FockOperator::from_matrix_unchecked(
        h.space().clone(),
        scaled * v.adjoint(),
    ))
}

/// `(1 + iHt/N)^{-N}` by one LU factorization and `N` solves.
pub fn resolvent_power(h: &FockOperator, t: f64, slices: usize) -> Result<FockOperator> {
    check_hermitian(h)?;
    if slices == 0 {
        return Err(Error::InvalidArgument("slice count must be at least 1".into()));
    }
    let d = h.dim();
    let step = C64::new(0.0, t / slices as f64);
    let a = DMatrix::<C64>::identity(d, d) + &h.matrix * step;
    let lu = a.lu();
    let mut x = DMatrix::<C64>::identity(d, d);
    for _ in 0..slices {
        x = lu.solve(&x).ok_or(Error::Singular("1 + iHt/N"))?;
    }
    Ok(FockOperator::from_matrix_unchecked(h.space().clone(), x))
}

/// Toeplitz quantization of `psi -> 1 / (1 + i P^b(psi) t / N)`.
///
/// The symbol has modulus at most one for real `p_berezin`, so the operator is
/// a contraction up to quadrature error.
pub fn qn_operator(
    p_berezin: &PolySymbol,
    t: f64,
    slices: usize,
    space: &Arc<ModeSpace>,
    quad: &PhaseSpaceQuadrature,
) -> Result<FockOperator> {
    check_real(p_berezin)?;
    if slices == 0 {
        return Err(Error::InvalidArgument("slice count must be at least 1".into()));
    }
    let tau = t / slices as f64;
    let pb = p_berezin.real_part();
    let f = SymbolFn::new(move |psi| C64::new(1.0, 0.0) / C64::new(1.0, pb.eval(psi).re * tau));
    Ok(toeplitz_quantize_fn(&f, space, quad, Some(QUADRATURE_TOLERANCE))?.operator)
}

/// Spectral norm of `(1 + i W(P) t / N) Q_N - 1` on the whole truncated space,
/// with `W(P)` the Wick quantization of `p` and `Q_N` built from its Berezin symbol.
pub fn single_step_defect(
    p: &PolySymbol,
    t: f64,
    slices: usize,
    space: &Arc<ModeSpace>,
    quad: &PhaseSpaceQuadrature,
) -> Result<f64> {
    check_real(p)?;
    let q = qn_operator(&berezin_from_wick(p)?, t, slices, space, quad)?;
    let w = wick_quantize(p, space)?;
    let id = FockOperator::identity(space.clone());
    let step = id.add(&w.scale(C64::new(0.0, t / slices as f64)));
    Ok(step.compose(&q).sub(&id).operator_norm())
}

fn chain_element(
    space: &Arc<ModeSpace>,
    cfg: &SliceConfig,
    mut step: impl FnMut(FockVector) -> FockVector,
) -> Result<C64> {
    let out = coherent_vector(space, &cfg.psi_out)?;
    let mut v = coherent_vector(space, &cfg.psi_in)?;
    for _ in 0..cfg.slices {
        v = step(v);
    }
    Ok(out.inner(&v))
}

/// `<e^{psi''}| Q_N^N |e^{psi'}>` with `Q_N` the Toeplitz operator of
/// `1 / (1 + i P^b t / N)` and `P^b` the Berezin symbol of the Wick symbol `p`.
pub fn theorem1_element(p: &PolySymbol, cfg: &SliceConfig, space: &Arc<ModeSpace>) -> Result<C64> {
    cfg.validate(space)?;
    check_real(p)?;
    let pb = berezin_from_wick(p)?;
    let q = qn_operator(&pb, cfg.t, cfg.slices, space, &cfg.quad)?;
    chain_element(space, cfg, |v| q.apply(&v))
}

/// `<e^{psi''}| (e^{-i H_0 t / N} Q_N)^N |e^{psi'}>` with the free factor applied
/// as exact diagonal phases.
pub fn theorem2_element(p: &PolySymbol, cfg: &SliceConfig, space: &Arc<ModeSpace>) -> Result<C64> {
    cfg.validate(space)?;
    check_real(p)?;
    let pb = berezin_from_wick(p)?;
    let q = qn_operator(&pb, cfg.t, cfg.slices, space, &cfg.quad)?;
    let phases = free_phases(space, cfg.t / cfg.slices as f64);
    chain_element(space, cfg, |v| apply_phases(&phases, q.apply(&v)))
}

/// Trotter product with the exact interaction step `e^{-i W(P) t / N}` in place
/// of `Q_N`; a sanity route for the sliced free-plus-interaction structure.
pub fn trotter_exact_element(p: &PolySymbol, cfg: &SliceConfig, space: &Arc<ModeSpace>) -> Result<C64> {
    cfg.validate(space)?;
    check_real(p)?;
    let u = exact_propagator(&wick_quantize(p, space)?, cfg.t / cfg.slices as f64)?;
    let phases = free_phases(space, cfg.t / cfg.slices as f64);
    chain_element(space, cfg, |v| apply_phases(&phases, u.apply(&v)))
}

/// `<e^{psi''}| (1 + i W(P) t / N)^{-N} |e^{psi'}>`.
pub fn resolvent_element(p: &PolySymbol, cfg: &SliceConfig, space: &Arc<ModeSpace>) -> Result<C64> {
    cfg.validate(space)?;
    let r = resolvent_power(&wick_quantize(p, space)?, cfg.t, cfg.slices)?;
    Ok(r.matrix_element(
        &coherent_vector(space, &cfg.psi_out)?,
        &coherent_vector(space, &cfg.psi_in)?,
    ))
}

fn free_phases(space: &ModeSpace, tau: f64) -> Vec<C64> {
    free_energies(space)
        .into_iter()
        .map(|e| C64::from_polar(1.0, -e * tau))
        .collect()
}

fn apply_phases(phases: &[C64], mut v: FockVector) -> FockVector {
    v.amplitudes.iter_mut().zip(phases).for_each(|(x, p)| *x *= p);
    v
}

/// The chained phase-space integral behind `<e^{psi''}| Q_N^N |e^{psi'}>`,
/// evaluated by quadrature over the `N` intermediate points for one mode:
///
/// `int prod_j D[psi_j] e^{-|psi_j|^2} f(psi_j) prod_{j=0}^{N} e^{<psi_{j+1}|psi_j>}`
///
/// with `psi_0 = psi'`, `psi_{N+1} = psi''` and `f = 1 / (1 + i P^b t / N)`.
/// Each Gaussian factor is split evenly between the two adjacent links, so every
/// link factor `exp(<a|b> - |a|^2/2 - |b|^2/2)` has modulus at most one.
pub fn direct_contraction_check(p: &PolySymbol, cfg: &SliceConfig, space: &Arc<ModeSpace>) -> Result<C64> {
    cfg.validate(space)?;
    check_real(p)?;
    if space.num_modes() != 1 {
        return Err(Error::InvalidArgument("direct contraction is implemented for one mode".into()));
    }
    if !(1..=3).contains(&cfg.slices) {
        return Err(Error::InvalidArgument("direct contraction needs 1 <= N <= 3".into()));
    }
    let pb = berezin_from_wick(p)?;
    let tau = cfg.t / cfg.slices as f64;
    let quad = &cfg.quad;
    let n = quad.len();
    let nodes: Vec<C64> = (0..n).map(|i| quad.node(i)[0]).collect();
    // Laguerre-stripped weights times the slice symbol.
    let factors: Vec<C64> = (0..n)
        .map(|i| {
            let z = nodes[i];
            let w = (quad.log_weight(i) + z.norm_sqr()).exp();
            w / C64::new(1.0, pb.eval(&[z]).re * tau)
        })
        .collect();
    let link = |a: C64, b: C64| (a.conj() * b - 0.5 * (a.norm_sqr() + b.norm_sqr())).exp();
    let (psi_in, psi_out) = (cfg.psi_in[0], cfg.psi_out[0]);
    let boundary = |outer: C64, z: C64, conj_outer: bool| {
        if conj_outer {
            (outer.conj() * z - 0.5 * z.norm_sqr()).exp()
        } else {
            (z.conj() * outer - 0.5 * z.norm_sqr()).exp()
        }
    };

    let mut v: Vec<C64> = (0..n)
        .map(|i| factors[i] * boundary(psi_in, nodes[i], false))
        .collect();
    for _ in 1..cfg.slices {
        v = (0..n)
            .into_par_iter()
            .map(|k| {
                let zk = nodes[k];
                let s: C64 = (0..n).map(|i| link(zk, nodes[i]) * v[i]).sum();
                factors[k] * s
            })
            .collect();
    }
    let value: C64 = (0..n).map(|i| boundary(psi_out, nodes[i], true) * v[i]).sum();
    if !(value.re.is_finite() && value.im.is_finite()) {
        return Err(Error::NonFinite {
            node: "direct contraction".into(),
        });
    }
    Ok(value)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, serde::Serialize, serde::Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Construction {
    Theorem1,
    Theorem2,
    Resolvent,
    /// Trotter product with exact interaction steps.
    TrotterExact,
}

impl Construction {
    pub fn name(self) -> &'static str {
        match self {
            Construction::Theorem1 => "theorem1",
            Construction::Theorem2 => "theorem2",
            Construction::Resolvent => "resolvent",
            Construction::TrotterExact => "trotter_exact",
        }
    }

    pub fn parse(s: &str) -> Option<Self> {
        [
            Construction::Theorem1,
            Construction::Theorem2,
            Construction::Resolvent,
            Construction::TrotterExact,
        ]
        .into_iter()
        .find(|c| c.name() == s)
    }

    /// Whether the free Hamiltonian is part of the evolution.
    pub fn includes_free(self) -> bool {
        matches!(self, Construction::Theorem2 | Construction::TrotterExact)
    }

    pub fn element(self, p: &PolySymbol, cfg: &SliceConfig, space: &Arc<ModeSpace>) -> Result<C64> {
        match self {
            Construction::Theorem1 => theorem1_element(p, cfg, space),
            Construction::Theorem2 => theorem2_element(p, cfg, space),
            Construction::Resolvent => resolvent_element(p, cfg, space),
            Construction::TrotterExact => trotter_exact_element(p, cfg, space),
        }
    }
}

/// Coherent element of the exact evolution the construction approximates:
/// `e^{-i W(P) t}`, plus `H_0` when the construction includes the free part.
pub fn oracle_element(
    p: &PolySymbol,
    construction: Construction,
    cfg: &SliceConfig,
    space: &Arc<ModeSpace>,
) -> Result<C64> {
    let mut h = wick_quantize(p, space)?;
    if construction.includes_free() {
        h = h.add(&free_hamiltonian(space));
    }
    let u = exact_propagator(&h, cfg.t)?;
    Ok(u.matrix_element(
        &coherent_vector(space, &cfg.psi_out)?,
        &coherent_vector(space, &cfg.psi_in)?,
    ))
}

#[derive(Debug, Clone, PartialEq)]
pub struct ConvergencePoint {
    pub slices: usize,
    pub element: C64,
    pub abs_error: f64,
    pub runtime_ms: f64,
}

#[derive(Debug, Clone)]
pub struct ConvergenceReport {
    pub construction: Construction,
    pub points: Vec<ConvergencePoint>,
    pub oracle: C64,
    /// Least-squares slope of `-ln(error)` against `ln N`. `None` when some
    /// error is exactly zero, where a logarithmic fit is meaningless.
    pub fitted_order: Option<f64>,
}

impl ConvergenceReport {
    pub fn final_error(&self) -> f64 {
        self.points.last().map_or(f64::NAN, |p| p.abs_error)
    }

    pub fn strictly_decreasing(&self) -> bool {
        self.points.windows(2).all(|w| w[1].abs_error < w[0].abs_error)
    }
}

/// Runs `construction` for every slice count in `slice_counts` (concurrently)
/// and compares against the exact oracle.
pub fn convergence_study(
    p: &PolySymbol,
    construction: Construction,
    base: &SliceConfig,
    slice_counts: &[usize],
    space: &Arc<ModeSpace>,
) -> Result<ConvergenceReport> {
    let oracle = oracle_element(p, construction, base, space)?;
    convergence_study_against(p, construction, base, slice_counts, space, oracle)
}

/// [`convergence_study`] with a caller-supplied oracle value, e.g. a closed form.
pub fn convergence_study_against(
    p: &PolySymbol,
    construction: Construction,
    base: &SliceConfig,
    slice_counts: &[usize],
    space: &Arc<ModeSpace>,
    oracle: C64,
) -> Result<ConvergenceReport> {
    if slice_counts.len() < 4 {
        return Err(Error::InvalidArgument("a convergence study needs at least 4 slice counts".into()));
    }
    if slice_counts.windows(2).any(|w| w[1] <= w[0]) {
        return Err(Error::InvalidArgument("slice counts must be strictly increasing".into()));
    }
    base.with_slices(slice_counts[0]).validate(space)?;
    let points = slice_counts
        .par_iter()
        .map(|&n| {
            let start = Instant::now();
            let element = construction.element(p, &base.with_slices(n), space)?;
            Ok(ConvergencePoint {
                slices: n,
                element,
                abs_error: (element - oracle).norm(),
                runtime_ms: start.elapsed().as_secs_f64() * 1e3,
            })
        })
        .collect::<Result<Vec<_>>>()?;
    let fitted_order = fit_order(&points);
    Ok(ConvergenceReport {
        construction,
        points,
        oracle,
        fitted_order,
    })
}

fn fit_order(points: &[ConvergencePoint]) -> Option<f64> {
    if points.iter().any(|p| !(p.abs_error > 0.0)) {
        return None;
    }
    let xs: Vec<f64> = points.iter().map(|p| (p.slices as f64).ln()).collect();
    let ys: Vec<f64> = points.iter().map(|p| p.abs_error.ln()).collect();
    let n = xs.len() as f64;
    let mx = xs.iter().sum::<f64>() / n;
    let my = ys.iter().sum::<f64>() / n;
    let sxy: f64 = xs.iter().zip(&ys).map(|(x, y)| (x - mx) * (y - my)).sum();
    let sxx: f64 = xs.iter().map(|x| (x - mx).powi(2)).sum();
    Some(-sxy / sxx)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fock::coherent_overlap;
    use crate::quadrature::build_rule;
    use crate::symbols::phi_polynomial;
    use std::sync::OnceLock;

    fn c(re: f64) -> C64 {
        C64::new(re, 0.0)
    }

    fn space(m: usize, d: u32) -> Arc<ModeSpace> {
        Arc::new(ModeSpace::new(m, d).unwrap())
    }

    fn quad() -> Arc<PhaseSpaceQuadrature> {
        static Q: OnceLock<Arc<PhaseSpaceQuadrature>> = OnceLock::new();
        Q.get_or_init(|| Arc::new(build_rule(1, 60, 48).unwrap())).clone()
    }

    fn cfg(t: f64, n: usize) -> SliceConfig {
        SliceConfig::new(t, n, quad(), vec![c(0.6)], vec![c(0.4)])
    }

    fn kerr() -> PolySymbol {
        let n = PolySymbol::number(1);
        &n + &(&n * &n).scale(c(0.2))
    }

    #[test]
    fn exact_propagator_properties() {
        let s = space(2, 5);
        let h = wick_quantize(&phi_polynomial(&[0.0, 0.3, 0.5, 0.0, 0.1], 2), &s)
            .unwrap()
            .add(&free_hamiltonian(&s));
        let id = FockOperator::identity(s.clone());
        assert!(exact_propagator(&h, 0.0).unwrap().max_abs_diff(&id) < 1e-13);
        let u = exact_propagator(&h, 0.7).unwrap();
        assert!(u.adjoint().compose(&u).max_abs_diff(&id) < 1e-12);
        let u12 = exact_propagator(&h, 0.3).unwrap().compose(&exact_propagator(&h, 0.4).unwrap());
        assert!(u12.max_abs_diff(&u) < 1e-10);

        let bad = FockOperator::from_matrix(s.clone(), {
            let mut m = DMatrix::<C64>::zeros(s.dim(), s.dim());
            m[(0, 1)] = c(1.0);
            m
        })
        .unwrap();
        assert!(matches!(exact_propagator(&bad, 1.0), Err(Error::NotHermitian { .. })));
    }

    #[test]
    fn free_evolution_matches_closed_form() {
        let s = space(1, 24);
        let u = exact_propagator(&free_hamiltonian(&s), 0.5).unwrap();
        let el = u.matrix_element(
            &coherent_vector(&s, &[c(0.4)]).unwrap(),
            &coherent_vector(&s, &[c(0.6)]).unwrap(),
        );
        let expected = (C64::from_polar(1.0, -0.5) * 0.24).exp();
        assert!((el - expected).norm() < 1e-14);
    }

    #[test]
    fn resolvent_power_examples() {
        let s = space(1, 6);
        let id = FockOperator::identity(s.clone());
        let h = wick_quantize(&kerr(), &s).unwrap();
        assert!(resolvent_power(&h, 0.0, 5).unwrap().max_abs_diff(&id) < 1e-15);
        let r = resolvent_power(&h, 0.8, 7).unwrap();
        for i in 0..s.dim() {
            let d = h.matrix[(i, i)];
            let expected = (c(1.0) + C64::i() * d * (0.8 / 7.0)).powi(-7);
            assert!((r.matrix[(i, i)] - expected).norm() < 1e-14);
        }
        let exact = exact_propagator(&h, 0.5).unwrap();
        let errs: Vec<f64> = [4, 8, 16, 32]
            .iter()
            .map(|&n| resolvent_power(&h, 0.5, n).unwrap().max_abs_diff(&exact))
            .collect();
        assert!(errs.windows(2).all(|w| w[1] < w[0]), "{errs:?}");
    }

    #[test]
    fn qn_operator_is_identity_at_zero_time_and_contractive() {
        let s = space(1, 24);
        let pb = berezin_from_wick(&kerr()).unwrap();
        let q0 = qn_operator(&pb, 0.0, 4, &s, &quad()).unwrap();
        assert!(q0.max_abs_diff(&FockOperator::identity(s.clone())) < 1e-10);
        let q = qn_operator(&pb, 0.5, 16, &s, &quad()).unwrap();
        assert!(q.operator_norm() <= 1.0 + 1e-8);
        let complex = PolySymbol::monomial(1, &[1], &[0], c(1.0)).unwrap();
        assert!(qn_operator(&complex, 0.5, 4, &s, &quad()).is_err());
    }

    #[test]
    fn zero_time_elements_are_overlaps() {
        let s = space(1, 24);
        let expected = coherent_overlap(&[c(0.4)], &[c(0.6)]);
        for n in [1, 3] {
            assert!((theorem1_element(&kerr(), &cfg(0.0, n), &s).unwrap() - expected).norm() < 1e-10);
            assert!((theorem2_element(&kerr(), &cfg(0.0, n), &s).unwrap() - expected).norm() < 1e-10);
        }
    }

    #[test]
    fn harmonic_theorem1_approaches_free_kernel() {
        let s = space(1, 24);
        let limit = (C64::from_polar(1.0, -0.5) * 0.24).exp();
        let p = PolySymbol::number(1);
        let e: Vec<f64> = [8, 32]
            .iter()
            .map(|&n| (theorem1_element(&p, &cfg(0.5, n), &s).unwrap() - limit).norm())
            .collect();
        assert!(e[1] < e[0] / 3.0, "{e:?}");
    }

    #[test]
    fn config_validation() {
        let s = space(1, 4);
        let bad = SliceConfig::new(0.5, 2, quad(), vec![c(0.8)], vec![c(0.4)]);
        assert!(bad.validate(&s).is_err());
        assert!(cfg(0.5, 0).validate(&space(1, 24)).is_err());
        let two = SliceConfig::new(0.5, 2, quad(), vec![c(0.1), c(0.1)], vec![c(0.1), c(0.1)]);
        assert!(two.validate(&space(2, 24)).is_err());
    }

    #[test]
    fn direct_contraction_with_zero_symbol_is_overlap() {
        let s = space(1, 24);
        let expected = coherent_overlap(&[c(0.4)], &[c(0.6)]);
        for n in 1..=2 {
            let v = direct_contraction_check(&PolySymbol::zero(1), &cfg(0.5, n), &s).unwrap();
            assert!((v - expected).norm() < 1e-8 * expected.norm(), "{n}: {v} vs {expected}");
        }
        assert!(direct_contraction_check(&PolySymbol::zero(1), &cfg(0.5, 4), &s).is_err());
    }

    #[test]
    fn convergence_study_zero_time_skips_fit() {
        let s = space(1, 12);
        let r = convergence_study(&kerr(), Construction::Resolvent, &cfg(0.0, 1), &[1, 2, 3, 4], &s).unwrap();
        assert!(r.points.iter().all(|p| p.abs_error < 1e-15));
        assert!(r.fitted_order.is_none());
        assert!(convergence_study(&kerr(), Construction::Resolvent, &cfg(0.5, 1), &[1, 2, 2, 4], &s).is_err());
        assert!(convergence_study(&kerr(), Construction::Resolvent, &cfg(0.5, 1), &[1, 2, 4], &s).is_err());
    }

    #[test]
    fn resolvent_study_matches_scalar_formula() {
        // Diagonal H: every coherent component evolves by the scalar formula.
        let s = space(1, 24);
        let p = PolySymbol::number(1);
        let base = cfg(0.5, 1);
        let r = convergence_study(&p, Construction::Resolvent, &base, &[2, 4, 8, 16], &s).unwrap();
        for pt in &r.points {
            let n = pt.slices as i32;
            let expected: C64 = (0..=24u32)
                .map(|k| {
                    let amp = 0.24f64.powi(k as i32) / crate::util::factorial(k);
                    let d = k as f64;
                    amp * ((c(1.0) + C64::i() * d * (0.5 / n as f64)).powi(-n) - C64::from_polar(1.0, -d * 0.5))
                })
                .sum();
            assert!((pt.abs_error - expected.norm()).abs() < 1e-13);
        }
        assert!(r.fitted_order.unwrap() > 0.9);
    }
}
