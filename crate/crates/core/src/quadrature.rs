//! Gaussian integration over phase space `C^M`.
//!
//! The measure is `D[psi] exp(-|psi|^2)` normalized to unit mass, so the single
//! mode moments are `<psi^a conj(psi)^b> = a! delta_ab` and multi-mode moments
//! factor across modes. Polynomial integrals go through [`GaussianMomentTable`];
//! everything else through a polar product rule: Gauss-Laguerre in `u = |psi|^2`
//! times equispaced angles, tensored over modes.

use std::collections::HashMap;
use std::f64::consts::PI;
use std::sync::{Arc, OnceLock};

use nalgebra::DMatrix;

use crate::error::{Error, Result};
use crate::symbols::SymbolFn;
use crate::util::{factorial, ln_factorial};
use crate::C64;

/// Largest degree whose factorial is finite in `f64`.
pub const MAX_MOMENT_DEGREE: u32 = 170;

/// Single-mode Gaussian moments `a! delta_ab`.
#[derive(Debug, Clone)]
pub struct GaussianMomentTable {
    max_degree: u32,
    diagonal: Vec<f64>,
    overrides: HashMap<(u32, u32), f64>,
}

impl GaussianMomentTable {
    pub fn new(max_degree: u32) -> Self {
        let max_degree = max_degree.min(MAX_MOMENT_DEGREE);
        let diagonal = (0..=max_degree).map(factorial).collect();
        Self {
            max_degree,
            diagonal,
            overrides: HashMap::new(),
        }
    }

    /// Table shared by the default code paths.
    pub fn shared() -> &'static GaussianMomentTable {
        static TABLE: OnceLock<GaussianMomentTable> = OnceLock::new();
        TABLE.get_or_init(|| GaussianMomentTable::new(MAX_MOMENT_DEGREE))
    }

    /// Fault-injection hook: replace one entry with a wrong value.
    pub fn corrupted(mut self, a: u32, b: u32, value: f64) -> Self {
        self.overrides.insert((a, b), value);
        self
    }

    pub fn max_degree(&self) -> u32 {
        self.max_degree
    }

    /// `int D[psi] e^{-|psi|^2} psi^a conj(psi)^b` for one mode.
    pub fn moment(&self, a: u32, b: u32) -> Result<f64> {
        let top = a.max(b);
        if top > self.max_degree {
            return Err(Error::MomentOverflow {
                degree: top,
                max: self.max_degree,
            });
        }
        if let Some(v) = self.overrides.get(&(a, b)) {
            return Ok(*v);
        }
        Ok(if a == b { self.diagonal[a as usize] } else { 0.0 })
    }

    /// Product of single-mode moments.
    pub fn moment_multi(&self, a: &[u32], b: &[u32]) -> Result<f64> {
        if a.len() != b.len() {
            return Err(Error::ShapeMismatch(format!(
                "multi-degrees of lengths {} and {}",
                a.len(),
                b.len()
            )));
        }
        let mut acc = 1.0;
        for (&ak, &bk) in a.iter().zip(b) {
            acc *= self.moment(ak, bk)?;
            if acc == 0.0 {
                break;
            }
        }
        Ok(acc)
    }
}

/// `prod_k a_k! delta(a_k, b_k)` from the shared table.
pub fn gaussian_moment(a: &[u32], b: &[u32]) -> Result<f64> {
    GaussianMomentTable::shared().moment_multi(a, b)
}

/// Polar product rule for `D[psi] e^{-|psi|^2}` on `C^M`.
#[derive(Debug, Clone)]
pub struct PhaseSpaceQuadrature {
    modes: usize,
    radial_order: usize,
    angular_order: usize,
    nodes: Vec<C64>,
    weights: Vec<f64>,
    log_weights: Vec<f64>,
    refined: OnceLock<Arc<PhaseSpaceQuadrature>>,
}

/// Rules with more nodes than this are refused.
pub const MAX_RULE_NODES: usize = 20_000_000;

impl PhaseSpaceQuadrature {
    pub fn modes(&self) -> usize {
        self.modes
    }

    pub fn radial_order(&self) -> usize {
        self.radial_order
    }

    pub fn angular_order(&self) -> usize {
        self.angular_order
    }

    pub fn len(&self) -> usize {
        self.weights.len()
    }

    pub fn is_empty(&self) -> bool {
        self.weights.is_empty()
    }

    pub fn node(&self, i: usize) -> &[C64] {
        &self.nodes[i * self.modes..(i + 1) * self.modes]
    }

    pub fn weight(&self, i: usize) -> f64 {
        self.weights[i]
    }

    pub fn log_weight(&self, i: usize) -> f64 {
        self.log_weights[i]
    }

    pub fn nodes(&self) -> impl Iterator<Item = (&[C64], f64)> + '_ {
        self.nodes.chunks(self.modes).zip(self.weights.iter().copied())
    }

    /// Total degree below which monomials are integrated exactly.
    pub fn guaranteed_degree(&self) -> u32 {
        (2 * self.radial_order - 1).min(self.angular_order - 1) as u32
    }

    /// Same construction with both orders doubled; built once and cached.
    pub fn refined(&self) -> Result<Arc<Self>> {
        if let Some(r) = self.refined.get() {
            return Ok(r.clone());
        }
        let r = Arc::new(build_rule(self.modes, 2 * self.radial_order, 2 * self.angular_order)?);
        Ok(self.refined.get_or_init(|| r).clone())
    }

    /// Largest scaled error over the single-mode monomials the rule claims to
    /// integrate exactly, measured against `table`.
    pub fn validate(&self, table: &GaussianMomentTable) -> Result<f64> {
        let one = single_mode(self.radial_order, self.angular_order);
        let top = self.guaranteed_degree().min(60);
        let mut worst = 0.0f64;
        for total in 0..=top {
            for a in 0..=total {
                let b = total - a;
                let approx: C64 = one
                    .iter()
                    .map(|(z, w, _)| C64::new(*w, 0.0) * z.powu(a) * z.conj().powu(b))
                    .sum();
                let exact = table.moment(a, b)?;
                // Size of the terms being summed: Gamma(total/2 + 1).
                let scale = (ln_gamma_half(total)).exp().max(1.0);
                let err = (approx - C64::new(exact, 0.0)).norm() / scale;
                if err > 1e-12 {
                    return Err(Error::RuleValidation { a, b, error: err });
                }
                worst = worst.max(err);
            }
        }
        let mass: f64 = self.weights.iter().sum();
        let err = (mass - table.moment_multi(&vec![0; self.modes], &vec![0; self.modes])?).abs();
        if err > 1e-12 {
            return Err(Error::RuleValidation { a: 0, b: 0, error: err });
        }
        Ok(worst.max(err))
    }
}

// ln Gamma(n/2 + 1)
fn ln_gamma_half(n: u32) -> f64 {
    if n.is_multiple_of(2) {
        ln_factorial(n as u64 / 2)
    } else {
        // Gamma(k + 3/2) = (2k+2)! sqrt(pi) / (4^(k+1) (k+1)!)
        let k = (n as u64 - 1) / 2;
        ln_factorial(2 * k + 2) + 0.5 * PI.ln() - (k + 1) as f64 * 4f64.ln() - ln_factorial(k + 1)
    }
}

/// Nodes `x_i` and `ln w_i` of the `n`-point Gauss-Laguerre rule for `e^{-x} dx`.
pub fn gauss_laguerre(n: usize) -> Vec<(f64, f64)> {
    assert!(n >= 1);
    // Golub-Welsch for starting values.
    let mut jacobi = DMatrix::<f64>::zeros(n, n);
    for i in 0..n {
        jacobi[(i, i)] = (2 * i + 1) as f64;
        if i + 1 < n {
            jacobi[(i, i + 1)] = (i + 1) as f64;
            jacobi[(i + 1, i)] = (i + 1) as f64;
        }
    }
    let mut starts: Vec<f64> = jacobi.symmetric_eigenvalues().iter().copied().collect();
    starts.sort_by(|a, b| a.partial_cmp(b).unwrap());

    starts
        .into_iter()
        .map(|mut x| {
            for _ in 0..4 {
                let (p, dp, _) = laguerre_scaled(n, x);
                let step = p / dp;
                x -= step;
                if step.abs() <= 1e-16 * x {
                    break;
                }
            }
            let (_, dp, log_scale) = laguerre_scaled(n, x);
            let log_w = -x.ln() - 2.0 * (dp.abs().ln() + log_scale);
            (x, log_w)
        })
        .collect()
}

// Returns (L_n(x), L_n'(x)) divided by exp(log_scale), and log_scale.
fn laguerre_scaled(n: usize, x: f64) -> (f64, f64, f64) {
    let mut prev = 1.0f64;
    let mut cur = 1.0 - x;
    let mut log_scale = 0.0;
    if n == 0 {
        return (1.0, 0.0, 0.0);
    }
    for j in 1..n {
        let next = ((2 * j + 1) as f64 - x) * cur / (j + 1) as f64 - j as f64 * prev / (j + 1) as f64;
        prev = cur;
        cur = next;
        if cur.abs() > 1e150 {
            prev *= 1e-150;
            cur *= 1e-150;
            log_scale += 150.0 * 10f64.ln();
        }
    }
    let deriv = n as f64 * (cur - prev) / x;
    (cur, deriv, log_scale)
}

// (node, weight, log weight) for one mode.
fn single_mode(radial: usize, angular: usize) -> Vec<(C64, f64, f64)> {
    let radial_rule = gauss_laguerre(radial);
    let ln_k = (angular as f64).ln();
    let mut out = Vec::with_capacity(radial * angular);
    for (u, log_w) in radial_rule {
        let r = u.sqrt();
        for j in 0..angular {
            let theta = 2.0 * PI * j as f64 / angular as f64;
            let lw = log_w - ln_k;
            out.push((C64::from_polar(r, theta), lw.exp(), lw));
        }
    }
    out
}

/// Polar product rule with `radial_order` Laguerre nodes and `angular_order`
/// angles per mode, validated against the shared moment table.
pub fn build_rule(modes: usize, radial_order: usize, angular_order: usize) -> Result<PhaseSpaceQuadrature> {
    build_rule_checked(modes, radial_order, angular_order, GaussianMomentTable::shared())
}

pub fn build_rule_checked(
    modes: usize,
    radial_order: usize,
    angular_order: usize,
    table: &GaussianMomentTable,
) -> Result<PhaseSpaceQuadrature> {
    if modes == 0 || radial_order == 0 || angular_order == 0 {
        return Err(Error::InvalidArgument(
            "quadrature needs at least one mode and orders >= 1".into(),
        ));
    }
    let per_mode = radial_order * angular_order;
    let total = (0..modes).try_fold(1usize, |acc, _| acc.checked_mul(per_mode));
    match total {
        Some(t) if t <= MAX_RULE_NODES => {}
        _ => {
            return Err(Error::InvalidArgument(format!(
                "rule with {per_mode}^{modes} nodes is too large"
            )))
        }
    }

    let one = single_mode(radial_order, angular_order);
    let mut nodes: Vec<C64> = Vec::new();
    let mut log_weights: Vec<f64> = vec![0.0];
    for mode in 0..modes {
        let mut next_nodes = Vec::with_capacity(nodes.len() * one.len() + one.len());
        let mut next_lw = Vec::with_capacity(log_weights.len() * one.len());
        for (i, lw) in log_weights.iter().enumerate() {
            for (z, _, lw1) in &one {
                next_nodes.extend_from_slice(&nodes[i * mode..(i + 1) * mode]);
                next_nodes.push(*z);
                next_lw.push(lw + lw1);
            }
        }
        nodes = next_nodes;
        log_weights = next_lw;
    }
    let weights = log_weights.iter().map(|lw| lw.exp()).collect();

    let rule = PhaseSpaceQuadrature {
        modes,
        radial_order,
        angular_order,
        nodes,
        weights,
        log_weights,
        refined: OnceLock::new(),
    };
    rule.validate(table)?;
    Ok(rule)
}

/// `sum_i w_i f(psi_i)`, summed in node order.
pub fn integrate(f: &SymbolFn, quad: &PhaseSpaceQuadrature) -> Result<C64> {
    let mut acc = C64::new(0.0, 0.0);
    for (psi, w) in quad.nodes() {
        let v = f.eval(psi);
        if !(v.re.is_finite() && v.im.is_finite()) {
            return Err(Error::NonFinite {
                node: format!("{psi:?}"),
            });
        }
        acc += v * w;
    }
    Ok(acc)
}

/// Shared handle type used by configs and presets.
pub type SharedQuadrature = Arc<PhaseSpaceQuadrature>;
