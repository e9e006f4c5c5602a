//! Sampling estimators for ellipticity and hypoellipticity.
//!
//! Both are heuristics: random points plus a shrinking-step local search. They
//! give upper bounds on infima (resp. lower bounds on suprema), never proofs.
//!
//! The weighted norm is `||psi||_{-rho}^2 = sum_k lambda_k^{-rho} |psi_k|^2`.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;

use super::PolySymbol;
use crate::error::{Error, Result};
use crate::C64;

/// `is_elliptic` is `constant > ELLIPTIC_THRESHOLD`.
pub const ELLIPTIC_THRESHOLD: f64 = 1e-6;

// (starts, steps) of the local search for sphere points and for directions.
const POINT_SEARCH: (usize, usize) = (8, 200);
const DIRECTION_SEARCH: (usize, usize) = (3, 60);

#[derive(Debug, Clone)]
pub struct EllipticityReport {
    /// Observed minimum of `|P_0(psi)| / ||psi||^n`.
    pub constant: f64,
    pub is_elliptic: bool,
    /// Degree `n` of the principal part.
    pub degree: u32,
    /// Unit-norm point attaining `constant`.
    pub minimizer: Vec<C64>,
}

#[derive(Debug, Clone)]
pub struct ShellReport {
    pub radius: f64,
    /// `max_ratio[m - 1]`: largest observed `|||d^m p||| (1 + r)^m / |p|` on the shell.
    pub max_ratio: Vec<f64>,
    pub min_abs_symbol: f64,
    /// `|p|` fell below the singularity tolerance somewhere on the shell.
    pub singular: bool,
}

#[derive(Debug, Clone)]
pub struct HypoellipticityReport {
    pub shells: Vec<ShellReport>,
    /// Least-squares slope of `ln max_ratio` against `ln(1 + r)` over the outer
    /// half of the shells, one per `m`.
    pub growth_exponents: Vec<f64>,
    /// No singular shell, all ratios finite, every growth exponent `<= BOUNDED_GROWTH`.
    pub bounded: bool,
}

impl HypoellipticityReport {
    pub const BOUNDED_GROWTH: f64 = 0.25;

    pub fn singular_shells(&self) -> usize {
        self.shells.iter().filter(|s| s.singular).count()
    }
}

fn norm_weights(p: &PolySymbol, scale_weights: &[f64], rho: f64) -> Result<Vec<f64>> {
    if scale_weights.len() != p.modes() {
        return Err(Error::ShapeMismatch(format!(
            "{} scale weights for a {}-mode symbol",
            scale_weights.len(),
            p.modes()
        )));
    }
    if !(rho >= 0.0) {
        return Err(Error::NegativeRho(rho));
    }
    Ok(scale_weights.iter().map(|l| l.powf(-rho)).collect())
}

fn weighted_norm(psi: &[C64], mu: &[f64]) -> f64 {
    psi.iter().zip(mu).map(|(z, m)| m * z.norm_sqr()).sum::<f64>().sqrt()
}

fn normalized(mut psi: Vec<C64>, mu: &[f64], radius: f64) -> Vec<C64> {
    let n = weighted_norm(&psi, mu);
    if n > 0.0 {
        psi.iter_mut().for_each(|z| *z *= radius / n);
    }
    psi
}

fn gaussian_vector<R: Rng>(rng: &mut R, mu: &[f64]) -> Vec<C64> {
    mu.iter()
        .map(|m| {
            let z = C64::new(rng.sample(StandardNormal), rng.sample(StandardNormal));
            z / m.sqrt()
        })
        .collect()
}

fn perturbed<R: Rng>(rng: &mut R, psi: &[C64], mu: &[f64], step: f64, radius: f64) -> Vec<C64> {
    let kick = normalized(gaussian_vector(rng, mu), mu, step * radius);
    let moved = psi.iter().zip(&kick).map(|(a, b)| a + b).collect();
    normalized(moved, mu, radius)
}

// Minimizes `objective` on the sphere of the given radius, starting from the
// best random samples and shrinking the step on rejection.
fn sphere_search<R: Rng>(
    rng: &mut R,
    mu: &[f64],
    radius: f64,
    samples: usize,
    (starts, steps): (usize, usize),
    mut objective: impl FnMut(&[C64]) -> f64,
) -> (f64, Vec<C64>) {
    let mut pool: Vec<(f64, Vec<C64>)> = (0..samples.max(1))
        .map(|_| {
            let psi = normalized(gaussian_vector(rng, mu), mu, radius);
            (objective(&psi), psi)
        })
        .collect();
    pool.sort_by(|a, b| a.0.total_cmp(&b.0));
    pool.truncate(starts.max(1));
    let mut best = pool[0].clone();
    for (mut value, mut psi) in pool {
        let mut step = 0.3;
        for _ in 0..steps {
            let trial = perturbed(rng, &psi, mu, step, radius);
            let v = objective(&trial);
            if v < value {
                value = v;
                psi = trial;
                step = (step * 1.5).min(1.0);
            } else {
                step *= 0.8;
                if step < 1e-9 {
                    break;
                }
            }
        }
        if value < best.0 {
            best = (value, psi);
        }
    }
    best
}

/// Estimates `inf |P_0(psi)| / ||psi||_{-rho}^n` over the unit sphere, with `P_0`
/// the principal (top-degree) part of `p`.
pub fn ellipticity_estimate(
    p: &PolySymbol,
    scale_weights: &[f64],
    rho: f64,
    samples: usize,
    seed: u64,
) -> Result<EllipticityReport> {
    let mu = norm_weights(p, scale_weights, rho)?;
    let principal = p.principal_part();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let (constant, minimizer) =
        sphere_search(&mut rng, &mu, 1.0, samples, POINT_SEARCH, |psi| principal.eval(psi).norm());
    Ok(EllipticityReport {
        constant,
        is_elliptic: constant > ELLIPTIC_THRESHOLD,
        degree: p.degree(),
        minimizer,
    })
}

// Coefficients of s -> p(psi + s eta) for real s, lowest degree first.
fn line_taylor(p: &PolySymbol, psi: &[C64], eta: &[C64]) -> Vec<C64> {
    let mut out = vec![C64::new(0.0, 0.0); p.degree() as usize + 1];
    for (mono, c) in p.terms() {
        let mut poly = vec![*c];
        for k in 0..psi.len() {
            let lin = [psi[k], eta[k]];
            let conj = [psi[k].conj(), eta[k].conj()];
            for _ in 0..mono.creation[k] {
                poly = poly_mul(&poly, &conj);
            }
            for _ in 0..mono.annihilation[k] {
                poly = poly_mul(&poly, &lin);
            }
        }
        for (o, v) in out.iter_mut().zip(poly) {
            *o += v;
        }
    }
    out
}

fn poly_mul(a: &[C64], b: &[C64]) -> Vec<C64> {
    let mut out = vec![C64::new(0.0, 0.0); a.len() + b.len() - 1];
    for (i, x) in a.iter().enumerate() {
        for (j, y) in b.iter().enumerate() {
            out[i + j] += x * y;
        }
    }
    out
}

// Diagonal norms |d^m p(psi; eta, .., eta)| maximized over unit directions eta,
// for m = 1..=m_max.
fn differential_norms<R: Rng>(
    rng: &mut R,
    p: &PolySymbol,
    psi: &[C64],
    mu: &[f64],
    m_max: usize,
    directions: usize,
) -> Vec<f64> {
    let mut factorials = vec![1.0; m_max + 1];
    for m in 1..=m_max {
        factorials[m] = factorials[m - 1] * m as f64;
    }
    let mut best = vec![0.0; m_max];
    for m in 1..=m_max {
        let objective = |eta: &[C64]| {
            let t = line_taylor(p, psi, eta);
            -(t.get(m).map_or(0.0, |c| c.norm()) * factorials[m])
        };
        let (v, _) = sphere_search(rng, mu, 1.0, directions, DIRECTION_SEARCH, objective);
        best[m - 1] = -v;
    }
    best
}

/// Sweeps shells `||psi||_{-rho} = 0.5 * 2^i`, `i < shells`, and records the
/// largest observed `|||d^m p(psi)||| (1 + ||psi||)^m / |p(psi)|` per shell for
/// `1 <= m <= m_max`. Points with `|p|` below `1e-9 * max(1, max |p| on the
/// shell)` mark the shell singular instead of producing a ratio.
pub fn hypoellipticity_estimate(
    p: &PolySymbol,
    scale_weights: &[f64],
    rho: f64,
    m_max: usize,
    shells: usize,
    samples: usize,
    seed: u64,
) -> Result<HypoellipticityReport> {
    if m_max == 0 {
        return Err(Error::InvalidArgument("m_max must be at least 1".into()));
    }
    if shells < 2 {
        return Err(Error::InvalidArgument("at least two shells are needed".into()));
    }
    let mu = norm_weights(p, scale_weights, rho)?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let directions = 16;
    let mut reports = Vec::with_capacity(shells);
    for i in 0..shells {
        let radius = 0.5 * 2f64.powi(i as i32);
        let points: Vec<Vec<C64>> = (0..samples.max(1))
            .map(|_| normalized(gaussian_vector(&mut rng, &mu), &mu, radius))
            .collect();
        let values: Vec<f64> = points.iter().map(|z| p.eval(z).norm()).collect();
        let scale = values.iter().cloned().fold(1.0, f64::max);
        let tol = 1e-9 * scale;
        let (min_abs, _) = sphere_search(&mut rng, &mu, radius, samples, POINT_SEARCH, |z| p.eval(z).norm());
        let singular = min_abs < tol;

        let mut max_ratio = vec![0.0f64; m_max];
        // The ratio is largest where |p| is small relative to its differentials;
        // rank points by first-order ratio and refine the leaders.
        let ratio_at = |rng: &mut ChaCha8Rng, z: &[C64]| -> Vec<f64> {
            let v = p.eval(z).norm();
            let d = differential_norms(rng, p, z, &mu, m_max, directions);
            d.iter()
                .enumerate()
                .map(|(m, dm)| {
                    if v < tol {
                        f64::INFINITY
                    } else {
                        dm * (1.0 + radius).powi(m as i32 + 1) / v
                    }
                })
                .collect()
        };
        for z in &points {
            for (slot, r) in max_ratio.iter_mut().zip(ratio_at(&mut rng, z)) {
                *slot = slot.max(r);
            }
        }
        for m in 0..m_max {
            // Cheap proxy objective: the exact ratio along the best of a few directions.
            let mut local = ChaCha8Rng::seed_from_u64(seed ^ ((i as u64) << 8) ^ m as u64);
            let (neg, _) = sphere_search(&mut rng, &mu, radius, samples.min(32), (2, 80), |z| {
                let v = p.eval(z).norm();
                if v < tol {
                    return f64::NEG_INFINITY;
                }
                let d = differential_norms(&mut local, p, z, &mu, m + 1, 4);
                -(d[m] * (1.0 + radius).powi(m as i32 + 1) / v)
            });
            max_ratio[m] = max_ratio[m].max(-neg);
        }
        reports.push(ShellReport {
            radius,
            max_ratio,
            min_abs_symbol: min_abs,
            singular,
        });
    }

    let outer = &reports[reports.len() / 2..];
    let growth_exponents: Vec<f64> = (0..m_max)
        .map(|m| {
            let pts: Vec<(f64, f64)> = outer
                .iter()
                .map(|s| ((1.0 + s.radius).ln(), s.max_ratio[m].max(f64::MIN_POSITIVE).ln()))
                .collect();
            slope(&pts)
        })
        .collect();
    let bounded = reports.iter().all(|s| !s.singular && s.max_ratio.iter().all(|r| r.is_finite()))
        && growth_exponents
            .iter()
            .all(|g| g.is_finite() && *g <= HypoellipticityReport::BOUNDED_GROWTH);
    Ok(HypoellipticityReport {
        shells: reports,
        growth_exponents,
        bounded,
    })
}

fn slope(pts: &[(f64, f64)]) -> f64 {
    let n = pts.len() as f64;
    let mx = pts.iter().map(|p| p.0).sum::<f64>() / n;
    let my = pts.iter().map(|p| p.1).sum::<f64>() / n;
    let sxy: f64 = pts.iter().map(|p| (p.0 - mx) * (p.1 - my)).sum();
    let sxx: f64 = pts.iter().map(|p| (p.0 - mx).powi(2)).sum();
    if !my.is_finite() {
        return f64::INFINITY;
    }
    sxy / sxx
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::symbols::phi_polynomial;

    fn c(re: f64) -> C64 {
        C64::new(re, 0.0)
    }

    #[test]
    fn quartic_number_has_unit_constant() {
        let n = PolySymbol::number(1);
        let p = &(&n * &n) + &n;
        let r = ellipticity_estimate(&p, &[1.0], 0.0, 64, 1).unwrap();
        assert!((r.constant - 1.0).abs() < 1e-12);
        assert!(r.is_elliptic);
        assert_eq!(r.degree, 4);
    }

    #[test]
    fn phi_squared_is_not_elliptic() {
        let p = phi_polynomial(&[0.0, 0.0, 1.0], 1);
        let r = ellipticity_estimate(&p, &[1.0], 0.0, 64, 2).unwrap();
        assert!(!r.is_elliptic, "constant {}", r.constant);
        // The minimizer lies on the imaginary axis.
        assert!(r.minimizer[0].re.abs() < 1e-3);
    }

    #[test]
    fn h_rho_symbol_constant_is_smallest_weight_ratio() {
        let lambda = [1.0, 2.0, 3.0];
        let rho = 0.5;
        let weights: Vec<f64> = lambda.iter().map(|l: &f64| l.powf(-2.0 * rho)).collect();
        let p = PolySymbol::weighted_number(&weights);
        let r = ellipticity_estimate(&p, &lambda, rho, 256, 3).unwrap();
        // ratio sum l^{-2 rho}|z|^2 / sum l^{-rho}|z|^2 is minimized on the largest lambda
        let expected = 3f64.powf(-rho);
        assert!(r.constant >= expected - 1e-12);
        assert!(r.constant - expected < 1e-3, "{} vs {expected}", r.constant);
    }

    #[test]
    fn shifted_number_ratios_are_bounded() {
        let p = &PolySymbol::constant(1, c(1.0)) + &PolySymbol::number(1);
        let r = hypoellipticity_estimate(&p, &[1.0], 0.0, 2, 8, 32, 4).unwrap();
        assert!(r.bounded, "{r:?}");
        for s in &r.shells {
            // |dp| = 2r, |d^2 p| = 2: ratios at most 2(1+r)^m / (1+r^2) <= 4.
            assert!(s.max_ratio[0] <= 4.0 + 1e-9 && s.max_ratio[1] <= 4.0 + 1e-9);
        }
    }

    #[test]
    fn phi_squared_hits_singular_shells() {
        let p = phi_polynomial(&[0.0, 0.0, 1.0], 1);
        let r = hypoellipticity_estimate(&p, &[1.0], 0.0, 1, 4, 32, 5).unwrap();
        assert!(!r.bounded);
        assert_eq!(r.singular_shells(), 4);
    }

    #[test]
    fn rejects_bad_arguments() {
        let p = PolySymbol::number(1);
        assert!(hypoellipticity_estimate(&p, &[1.0], 0.0, 0, 4, 8, 0).is_err());
        assert!(ellipticity_estimate(&p, &[1.0, 1.0], 0.0, 8, 0).is_err());
        assert!(ellipticity_estimate(&p, &[1.0], -1.0, 8, 0).is_err());
    }

    #[test]
    fn line_taylor_matches_evaluation() {
        let p = phi_polynomial(&[0.3, -1.0, 0.5, 0.0, 0.2], 2);
        let psi = [C64::new(0.4, -0.2), C64::new(-0.1, 0.7)];
        let eta = [C64::new(0.3, 0.5), C64::new(0.2, -0.6)];
        let t = line_taylor(&p, &psi, &eta);
        for s in [-0.7, 0.1, 1.3] {
            let direct = p.eval(&[psi[0] + eta[0] * s, psi[1] + eta[1] * s]);
            let series: C64 = t.iter().rev().fold(c(0.0), |acc, x| acc * s + x);
            assert!((direct - series).norm() < 1e-12);
        }
    }
}
