//! Invariant suite run against a configuration's space, symbol and quadrature.

use std::fmt;
use std::sync::Arc;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use super::{ExperimentConfig, ExperimentError};
use crate::fock::{coherent_overlap, coherent_vector, interior_projector, ladder_operators, tail_bound, FockOperator, ModeSpace};
use crate::propagator::{direct_contraction_check, theorem1_element, SliceConfig};
use crate::quadrature::{build_rule, build_rule_checked, GaussianMomentTable};
use crate::symbols::{
    berezin_from_wick_with, berezin_symbol_of, berezin_symbol_on_interior, compose_expansion, random_real_symbol,
    random_symbol, toeplitz_quantize_fn_single, toeplitz_quantize_poly, toeplitz_quantize_poly_with, wick_quantize,
    wick_symbol_of, SymbolFn,
};
use crate::C64;

#[derive(Debug, Clone, PartialEq)]
pub struct CheckResult {
    pub name: &'static str,
    pub passed: bool,
    pub measured: f64,
    pub tolerance: f64,
    pub detail: String,
}

#[derive(Debug, Clone, PartialEq)]
pub struct VerifyReport {
    pub checks: Vec<CheckResult>,
}

impl VerifyReport {
    pub fn all_passed(&self) -> bool {
        self.checks.iter().all(|c| c.passed)
    }

    pub fn check(&self, name: &str) -> Option<&CheckResult> {
        self.checks.iter().find(|c| c.name == name)
    }
}

impl fmt::Display for VerifyReport {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for c in &self.checks {
            writeln!(
                f,
                "{} {:<24} measured {:<11.3e} tolerance {:<9.1e} {}",
                if c.passed { "PASS" } else { "FAIL" },
                c.name,
                c.measured,
                c.tolerance,
                c.detail
            )?;
        }
        Ok(())
    }
}

// Keeps the dense fits affordable while staying well above every symbol degree used.
const CHECK_CUTOFF: u32 = 10;
const SYMBOL_TOLERANCE: f64 = 1e-10;

fn result(name: &'static str, measured: f64, tolerance: f64, detail: String) -> CheckResult {
    CheckResult {
        name,
        passed: measured <= tolerance,
        measured,
        tolerance,
        detail,
    }
}

fn failed(name: &'static str, tolerance: f64, detail: String) -> CheckResult {
    CheckResult {
        name,
        passed: false,
        measured: f64::INFINITY,
        tolerance,
        detail,
    }
}

pub fn verify(cfg: &ExperimentConfig) -> Result<VerifyReport, ExperimentError> {
    verify_with_table(cfg, GaussianMomentTable::shared())
}

/// Runs the suite with an explicit moment table, so a corrupted table can be
/// injected to exercise the exactness checks.
pub fn verify_with_table(cfg: &ExperimentConfig, table: &GaussianMomentTable) -> Result<VerifyReport, ExperimentError> {
    let prep = cfg.prepare(false)?;
    let space = &prep.space;
    let small = Arc::new(
        space
            .with_cutoff(space.cutoff().min(CHECK_CUTOFF))
            .map_err(|e| ExperimentError::Config(e.to_string()))?,
    );
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    let quad = Arc::new(build_rule(cfg.modes, cfg.radial_order, cfg.angular_order)?);
    let checks = vec![
        ccr_interior(space),
        overlap_law(space, &prep.psi_in, &prep.psi_out),
        symbol_round_trips(&small, &mut rng),
        reality_symmetry(&small, &mut rng),
        quadrature_exactness(cfg, table),
        conversion_consistency(&small, table, &mut rng),
        compose_oracle(&small, &mut rng),
        norm_majorization(&small, &quad, &prep.symbol, cfg.t),
        route_agreement(cfg, space, &prep, quad.clone()),
    ];
    Ok(VerifyReport { checks })
}

fn ccr_interior(space: &Arc<ModeSpace>) -> CheckResult {
    let (a, c) = ladder_operators(space);
    let proj = match interior_projector(space, 1) {
        Ok(p) => p,
        Err(e) => return failed("ccr_interior", 1e-12, e.to_string()),
    };
    let mut worst = 0.0f64;
    for k in 0..space.num_modes() {
        for l in 0..space.num_modes() {
            let mut comm = a[k].compose(&c[l]).sub(&c[l].compose(&a[k]));
            if k == l {
                comm = comm.sub(&FockOperator::identity(space.clone()));
            }
            worst = worst.max(proj.compose(&comm).compose(&proj).matrix.iter().map(|z| z.norm()).fold(0.0, f64::max));
        }
    }
    result("ccr_interior", worst, 1e-12, "[A_k, C_l] - delta_kl on |n| <= D - 1".into())
}

fn overlap_law(space: &Arc<ModeSpace>, psi_in: &[C64], psi_out: &[C64]) -> CheckResult {
    let tb = (tail_bound(space, psi_in) * tail_bound(space, psi_out)).sqrt();
    let exact = coherent_overlap(psi_out, psi_in);
    let err = match (coherent_vector(space, psi_out), coherent_vector(space, psi_in)) {
        (Ok(o), Ok(i)) => (o.inner(&i) - exact).norm(),
        (Err(e), _) | (_, Err(e)) => return failed("overlap_law", 1e-12, e.to_string()),
    };
    result("overlap_law", err, 1e-12, format!("tail bound {tb:.3e}"))
}

fn symbol_round_trips(space: &Arc<ModeSpace>, rng: &mut ChaCha8Rng) -> CheckResult {
    let mut worst = 0.0f64;
    for _ in 0..3 {
        let p = random_symbol(rng, space.num_modes(), 4);
        let t = match toeplitz_quantize_poly(&p, space).and_then(|q| berezin_symbol_of(&q, 4)) {
            Ok(fit) => fit.symbol.max_coeff_diff(&p),
            Err(e) => return failed("symbol_round_trips", SYMBOL_TOLERANCE, e.to_string()),
        };
        let w = match wick_quantize(&p, space) {
            Ok(q) => {
                let f = wick_symbol_of(&q);
                let z: Vec<C64> = (0..space.num_modes()).map(|k| C64::new(0.1 * (k as f64 + 1.0), -0.05)).collect();
                (f.eval(&z) - p.eval(&z)).norm()
            }
            Err(e) => return failed("symbol_round_trips", SYMBOL_TOLERANCE, e.to_string()),
        };
        worst = worst.max(t).max(w);
    }
    result("symbol_round_trips", worst, SYMBOL_TOLERANCE, "Berezin and Wick, 3 random degree-4 symbols".into())
}

fn reality_symmetry(space: &Arc<ModeSpace>, rng: &mut ChaCha8Rng) -> CheckResult {
    let mut worst_real = 0.0f64;
    let mut best_complex = f64::INFINITY;
    for _ in 0..3 {
        let real = random_real_symbol(rng, space.num_modes(), 3);
        let complex = random_symbol(rng, space.num_modes(), 3);
        match (wick_quantize(&real, space), wick_quantize(&complex, space)) {
            (Ok(r), Ok(c)) => {
                worst_real = worst_real.max(r.hermitian_deviation());
                best_complex = best_complex.min(c.hermitian_deviation());
            }
            (Err(e), _) | (_, Err(e)) => return failed("self_adjoint_iff_real", 1e-12, e.to_string()),
        }
    }
    let mut r = result(
        "self_adjoint_iff_real",
        worst_real,
        1e-12,
        format!("smallest deviation for complex symbols {best_complex:.3e}"),
    );
    r.passed &= best_complex > 1e-6;
    r
}

fn quadrature_exactness(cfg: &ExperimentConfig, table: &GaussianMomentTable) -> CheckResult {
    match build_rule_checked(cfg.modes, cfg.radial_order, cfg.angular_order, table) {
        Ok(rule) => match rule.validate(table) {
            Ok(err) => result("quadrature_exactness", err, 1e-12, format!("monomials up to degree {}", rule.guaranteed_degree().min(60))),
            Err(e) => failed("quadrature_exactness", 1e-12, e.to_string()),
        },
        Err(e) => failed("quadrature_exactness", 1e-12, e.to_string()),
    }
}

fn conversion_consistency(space: &Arc<ModeSpace>, table: &GaussianMomentTable, rng: &mut ChaCha8Rng) -> CheckResult {
    let mut worst = 0.0f64;
    let degree = 4;
    for _ in 0..3 {
        let p = random_symbol(rng, space.num_modes(), degree);
        let lhs = berezin_from_wick_with(&p, table).and_then(|b| toeplitz_quantize_poly_with(&b, space, table));
        let rhs = wick_quantize(&p, space);
        let inner = space.interior_dim(degree).unwrap_or(0);
        match (lhs, rhs) {
            (Ok(l), Ok(r)) => {
                let d = (&l.matrix - &r.matrix).view((0, 0), (inner, inner)).iter().map(|z| z.norm()).fold(0.0, f64::max);
                worst = worst.max(d);
            }
            (Err(e), _) | (_, Err(e)) => return failed("conversion_consistency", SYMBOL_TOLERANCE, e.to_string()),
        }
    }
    result(
        "conversion_consistency",
        worst,
        SYMBOL_TOLERANCE,
        format!("toeplitz(berezin(p)) = wick(p) on |n| <= D - {degree}"),
    )
}

fn compose_oracle(space: &Arc<ModeSpace>, rng: &mut ChaCha8Rng) -> CheckResult {
    let mut worst = 0.0f64;
    for _ in 0..3 {
        let q2 = random_symbol(rng, space.num_modes(), 2);
        let q1 = random_symbol(rng, space.num_modes(), 2);
        let exact = toeplitz_quantize_poly(&q2, space)
            .and_then(|a| Ok(a.compose(&toeplitz_quantize_poly(&q1, space)?)))
            .and_then(|prod| berezin_symbol_on_interior(&prod, 4, 4, SYMBOL_TOLERANCE));
        match exact {
            Ok(fit) => worst = worst.max(fit.symbol.max_coeff_diff(&compose_expansion(&q2, &q1, 4))),
            Err(e) => return failed("compose_oracle", SYMBOL_TOLERANCE, e.to_string()),
        }
    }
    result("compose_oracle", worst, SYMBOL_TOLERANCE, "full expansion vs symbol of the product".into())
}

fn norm_majorization(
    space: &Arc<ModeSpace>,
    quad: &crate::quadrature::PhaseSpaceQuadrature,
    symbol: &crate::PolySymbol,
    t: f64,
) -> CheckResult {
    let p = symbol.clone();
    let tau = t / 8.0;
    let symbols = [
        SymbolFn::new(move |z| C64::new(1.0, 0.0) / C64::new(1.0, p.eval(z).re * tau)),
        SymbolFn::new(|z| C64::new(z.iter().map(|x| x.norm_sqr()).sum::<f64>().cos(), 0.0)),
        SymbolFn::new(|z| z[0] * (-z[0].norm_sqr()).exp()),
    ];
    let mut worst = f64::NEG_INFINITY;
    for f in &symbols {
        let sup = (0..quad.len()).map(|i| f.eval(quad.node(i)).norm()).fold(0.0, f64::max);
        match toeplitz_quantize_fn_single(f, space, quad) {
            Ok(q) => worst = worst.max(q.operator_norm() - sup),
            Err(e) => return failed("norm_majorization", 1e-8, e.to_string()),
        }
    }
    result("norm_majorization", worst, 1e-8, "max over 3 bounded symbols of ||Q|| - sup|f|".into())
}

fn route_agreement(
    cfg: &ExperimentConfig,
    space: &Arc<ModeSpace>,
    prep: &super::Prepared,
    quad: Arc<crate::quadrature::PhaseSpaceQuadrature>,
) -> CheckResult {
    if cfg.modes != 1 {
        return CheckResult {
            name: "route_agreement",
            passed: true,
            measured: 0.0,
            tolerance: 1e-6,
            detail: "skipped: direct contraction is implemented for one mode".into(),
        };
    }
    let mut worst = 0.0f64;
    for n in 1..=2 {
        let slice = SliceConfig::new(cfg.t, n, quad.clone(), prep.psi_in.clone(), prep.psi_out.clone());
        match (theorem1_element(&prep.symbol, &slice, space), direct_contraction_check(&prep.symbol, &slice, space)) {
            (Ok(a), Ok(b)) => worst = worst.max((a - b).norm() / a.norm()),
            (Err(e), _) | (_, Err(e)) => return failed("route_agreement", 1e-6, e.to_string()),
        }
    }
    result("route_agreement", worst, 1e-6, "relative, N = 1, 2".into())
}
