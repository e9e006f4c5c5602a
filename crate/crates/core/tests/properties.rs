//! Property tests for the algebraic and propagator invariants.

use std::sync::{Arc, OnceLock};

use proptest::prelude::*;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use fockslice::fock::{
    coherent_overlap, coherent_vector, free_hamiltonian, h_rho_operator, ladder_operators, tail_bound,
};
use fockslice::presets::preset_symbol;
use fockslice::propagator::{
    convergence_study, exact_propagator, single_step_defect, trotter_exact_element, Construction,
    SliceConfig,
};
use fockslice::quadrature::{build_rule, PhaseSpaceQuadrature};
use fockslice::symbols::{
    berezin_from_wick, berezin_symbol_of, hypoellipticity_estimate, phi_polynomial, random_real_symbol, random_symbol, toeplitz_quantize_fn_single, toeplitz_quantize_poly, wick_quantize,
    wick_symbol_of,
};
use fockslice::{FockOperator, ModeSpace, PolySymbol, SymbolFn, C64};

fn c(x: f64) -> C64 {
    C64::new(x, 0.0)
}

fn space(m: usize, d: u32) -> Arc<ModeSpace> {
    Arc::new(ModeSpace::new(m, d).unwrap())
}

fn quad() -> Arc<PhaseSpaceQuadrature> {
    static Q: OnceLock<Arc<PhaseSpaceQuadrature>> = OnceLock::new();
    Q.get_or_init(|| Arc::new(build_rule(1, 100, 64).unwrap())).clone()
}

fn symbol(seed: u64, modes: usize, degree: u32, real: bool) -> PolySymbol {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    if real {
        random_real_symbol(&mut rng, modes, degree)
    } else {
        random_symbol(&mut rng, modes, degree)
    }
}

fn amplitude() -> impl Strategy<Value = C64> {
    (0.0f64..0.7, 0.0f64..6.3).prop_map(|(r, a)| C64::from_polar(r, a))
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(24))]

    #[test]
    fn wick_round_trip(seed in any::<u64>(), modes in 1usize..=2, degree in 0u32..=6, z in amplitude(), w in amplitude()) {
        let s = space(modes, if modes == 1 { 40 } else { 24 });
        let p = symbol(seed, modes, degree, false);
        let psi = if modes == 1 { vec![z] } else { vec![z, w] };
        let back = wick_symbol_of(&wick_quantize(&p, &s).unwrap()).eval(&psi);
        let tol = 1e-10 * p.max_coeff().max(1.0) + 1e4 * tail_bound(&s, &psi).sqrt();
        prop_assert!((back - p.eval(&psi)).norm() < tol);
    }

    #[test]
    fn berezin_round_trip(seed in any::<u64>(), modes in 1usize..=2, degree in 0u32..=6) {
        let s = space(modes, if modes == 1 { 16 } else { 10 });
        let p = symbol(seed, modes, degree, false);
        let fit = berezin_symbol_of(&toeplitz_quantize_poly(&p, &s).unwrap(), degree).unwrap();
        prop_assert!(fit.symbol.max_coeff_diff(&p) < 1e-9, "{}", fit.symbol.max_coeff_diff(&p));
    }

    #[test]
    fn conversion_consistency_on_interior(seed in any::<u64>(), modes in 1usize..=2, degree in 0u32..=6) {
        let s = space(modes, if modes == 1 { 20 } else { 12 });
        let p = symbol(seed, modes, degree, false);
        let t = toeplitz_quantize_poly(&berezin_from_wick(&p).unwrap(), &s).unwrap();
        let w = wick_quantize(&p, &s).unwrap();
        let inner = s.interior_dim(degree).unwrap();
        let diff = (&t.matrix - &w.matrix).view((0, 0), (inner, inner)).iter().map(|z| z.norm()).fold(0.0, f64::max);
        let scale = w.matrix.iter().map(|z| z.norm()).fold(1.0, f64::max);
        prop_assert!(diff < 1e-12 * scale, "{diff}");
    }

    #[test]
    fn principal_part_is_preserved(seed in any::<u64>(), modes in 1usize..=3, degree in 0u32..=6) {
        let p = symbol(seed, modes, degree, false);
        let b = berezin_from_wick(&p).unwrap();
        prop_assert!(b.principal_part().max_coeff_diff(&p.principal_part()) < 1e-13);
    }

    #[test]
    fn self_adjoint_iff_real(seed in any::<u64>(), modes in 1usize..=2, degree in 1u32..=4, real in any::<bool>()) {
        let s = space(modes, 8);
        let p = symbol(seed, modes, degree, real);
        let w = wick_quantize(&p, &s).unwrap();
        let t = toeplitz_quantize_poly(&p, &s).unwrap();
        prop_assert_eq!(w.hermitian_deviation() < 1e-12, p.is_real(1e-14));
        prop_assert_eq!(t.hermitian_deviation() < 1e-10, p.is_real(1e-14));
    }

    #[test]
    fn overlap_law_within_tail_bound(a in amplitude(), b in amplitude(), d in 2u32..12) {
        let s = space(1, d);
        let (p1, p2) = ([a * 2.0], [b * 2.0]);
        let exact = coherent_overlap(&p2, &p1);
        let trunc = coherent_vector(&s, &p2).unwrap().inner(&coherent_vector(&s, &p1).unwrap());
        let bound = (tail_bound(&s, &p1) * tail_bound(&s, &p2)).sqrt();
        prop_assert!((trunc - exact).norm() <= bound + 1e-15 * exact.norm());
    }

    #[test]
    fn exact_propagator_is_unitary(seed in any::<u64>(), t in -2.0f64..2.0) {
        let s = space(2, 6);
        let h = wick_quantize(&symbol(seed, 2, 4, true), &s).unwrap().add(&free_hamiltonian(&s));
        let u = exact_propagator(&h, t).unwrap();
        prop_assert!(u.adjoint().compose(&u).max_abs_diff(&FockOperator::identity(s.clone())) < 1e-12);
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(6))]

    #[test]
    fn sliced_products_are_contractions(seed in any::<u64>(), n in 1usize..16) {
        let s = space(1, 16);
        // |1 / (1 + i P t / N)| <= 1 and the rule has positive weights, so the
        // discretized Toeplitz operator is a contraction on any fixed rule.
        let pb = berezin_from_wick(&symbol(seed, 1, 2, true)).unwrap().real_part();
        let tau = 0.5 / n as f64;
        let f = SymbolFn::new(move |psi| C64::new(1.0, 0.0) / C64::new(1.0, pb.eval(psi).re * tau));
        let q = toeplitz_quantize_fn_single(&f, &s, &quad()).unwrap();
        let mut power = FockOperator::identity(s.clone());
        for _ in 0..n {
            power = power.compose(&q);
        }
        prop_assert!(q.operator_norm() <= 1.0 + 1e-8);
        prop_assert!(power.operator_norm() <= 1.0 + 1e-8);
    }
}

#[test]
fn ladder_operators_are_adjoint_and_hamiltonians_nonnegative() {
    let s = Arc::new(ModeSpace::with_parameters(2, 7, vec![0.5, 1.5], vec![1.0, 3.0]).unwrap());
    let (a, cr) = ladder_operators(&s);
    for k in 0..2 {
        assert_eq!(a[k].adjoint().matrix, cr[k].matrix);
    }
    for h in [free_hamiltonian(&s), h_rho_operator(&s, 0.7).unwrap()] {
        assert!(h.matrix.diagonal().iter().all(|z| z.re >= 0.0 && z.im == 0.0));
        assert!(h.hermitian_deviation() == 0.0);
    }
}

#[test]
fn trotter_with_exact_steps_converges() {
    let s = space(1, 24);
    let p = preset_symbol("kerr", 1, None, &[1.0], 0.0).unwrap();
    let base = SliceConfig::new(0.5, 1, quad(), vec![c(0.6)], vec![c(0.4)]);
    let exact = exact_propagator(&wick_quantize(&p, &s).unwrap().add(&free_hamiltonian(&s)), 0.5).unwrap();
    let oracle = exact.matrix_element(
        &coherent_vector(&s, &[c(0.4)]).unwrap(),
        &coherent_vector(&s, &[c(0.6)]).unwrap(),
    );
    // H_0 and a function of the number operator commute: every N is exact.
    for n in [1, 4, 16] {
        let v = trotter_exact_element(&p, &base.with_slices(n), &s).unwrap();
        assert!((v - oracle).norm() < 1e-12);
    }
    // A non-commuting interaction converges at first order.
    let phi = preset_symbol("phi4", 1, Some(0.2), &[1.0], 0.0).unwrap();
    let r = convergence_study(&phi, Construction::TrotterExact, &base, &[4, 8, 16, 32, 64], &s).unwrap();
    assert!(r.strictly_decreasing());
    let order = r.fitted_order.unwrap();
    assert!((0.8..=1.5).contains(&order), "{order}");
}

#[test]
fn sliced_constructions_are_first_order_across_presets() {
    let s = space(1, 24);
    let base = SliceConfig::new(0.5, 1, quad(), vec![c(0.6)], vec![c(0.4)]);
    for (name, construction) in [
        ("harmonic", Construction::Theorem1),
        ("kerr", Construction::Theorem1),
        ("kerr", Construction::Theorem2),
        ("phi4", Construction::Theorem2),
        ("phi4", Construction::Theorem1),
    ] {
        let p = preset_symbol(name, 1, None, &[1.0], 0.0).unwrap();
        let r = convergence_study(&p, construction, &base, &[8, 16, 32, 64, 128], &s).unwrap();
        let order = r.fitted_order.unwrap();
        assert!((0.8..=1.5).contains(&order), "{name} {}: {order}", construction.name());
        assert!(r.final_error() < 1e-2, "{name}: {}", r.final_error());
    }
}

#[test]
fn single_step_defect_is_second_order_on_small_spaces() {
    // With few occupation levels t/N quickly becomes small against 1/P and the
    // defect halving ratio approaches 4.
    let s = space(1, 4);
    let p = preset_symbol("kerr", 1, None, &[1.0], 0.0).unwrap();
    let d: Vec<f64> = [64, 128, 256]
        .iter()
        .map(|&n| single_step_defect(&p, 0.5, n, &s, &quad()).unwrap())
        .collect();
    for w in d.windows(2) {
        let ratio = w[0] / w[1];
        assert!((3.5..=4.5).contains(&ratio), "{d:?}");
    }
}

#[test]
fn quartic_field_symbol_is_not_hypoelliptic() {
    // Along the imaginary axis phi vanishes and p = |psi|^2 / 2, while the
    // derivatives keep the quartic growth: the ratios grow like r^{m/2}.
    let p = &PolySymbol::number(1).scale(c(0.5)) + &phi_polynomial(&[0.0, 0.0, 0.0, 0.0, 1.0], 1);
    let r = hypoellipticity_estimate(&p, &[1.0], 0.0, 2, 8, 64, 3).unwrap();
    assert!(!r.bounded);
    assert!((r.growth_exponents[0] - 0.5).abs() < 0.15, "{:?}", r.growth_exponents);
    assert!((r.growth_exponents[1] - 1.0).abs() < 0.15, "{:?}", r.growth_exponents);
}
