//! Truncated multi-mode Fock space.
//!
//! The basis is the set of occupation multi-indices `n` with total occupation
//! `n_1 + ... + n_M <= D`, ordered by total occupation and, within a shell,
//! lexicographically descending (`|10>` before `|01>`). Because the ordering is
//! graded, the interior subspace `{ |n| <= D - margin }` is always a leading
//! block of the basis.

use std::collections::HashMap;
use std::fmt;
use std::sync::Arc;

use nalgebra::{DMatrix, DVector};

use crate::error::{Error, Result};
use crate::util::{ln_factorial, sqrt_factorial_ratio};
use crate::C64;

/// Occupation multi-index of a basis state.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct FockIndex(pub Vec<u32>);

impl FockIndex {
    pub fn total(&self) -> u32 {
        self.0.iter().sum()
    }
}

impl fmt::Display for FockIndex {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let parts: Vec<String> = self.0.iter().map(|n| n.to_string()).collect();
        write!(f, "|{}>", parts.join(","))
    }
}

/// Finite phase-space model: `M` modes, total-occupation cutoff `D`,
/// mode frequencies `omega_k` and scale weights `lambda_k >= 1`.
#[derive(Debug, Clone)]
pub struct ModeSpace {
    num_modes: usize,
    cutoff: u32,
    frequencies: Vec<f64>,
    scale_weights: Vec<f64>,
    basis: Vec<FockIndex>,
    lookup: HashMap<Vec<u32>, usize>,
    /// `shell_end[s]` is one past the last basis position with total occupation `s`.
    shell_end: Vec<usize>,
}

impl PartialEq for ModeSpace {
    fn eq(&self, other: &Self) -> bool {
        self.num_modes == other.num_modes
            && self.cutoff == other.cutoff
            && self.frequencies == other.frequencies
            && self.scale_weights == other.scale_weights
    }
}

impl ModeSpace {
    /// `M` modes with unit frequencies and unit scale weights.
    pub fn new(num_modes: usize, cutoff: u32) -> Result<Self> {
        Self::with_parameters(num_modes, cutoff, vec![1.0; num_modes], vec![1.0; num_modes])
    }

    pub fn with_parameters(
        num_modes: usize,
        cutoff: u32,
        frequencies: Vec<f64>,
        scale_weights: Vec<f64>,
    ) -> Result<Self> {
        if num_modes == 0 {
            return Err(Error::InvalidSpace("at least one mode is required".into()));
        }
        if cutoff == 0 {
            return Err(Error::InvalidSpace("cutoff must be positive".into()));
        }
        if frequencies.len() != num_modes || scale_weights.len() != num_modes {
            return Err(Error::InvalidSpace(format!(
                "expected {num_modes} frequencies and scale weights, got {} and {}",
                frequencies.len(),
                scale_weights.len()
            )));
        }
        if let Some(w) = frequencies.iter().find(|w| !(w.is_finite() && **w > 0.0)) {
            return Err(Error::InvalidSpace(format!("frequency {w} is not positive")));
        }
        if let Some(l) = scale_weights.iter().find(|l| !(l.is_finite() && **l >= 1.0)) {
            return Err(Error::InvalidSpace(format!("scale weight {l} is below 1")));
        }

        let mut basis = Vec::new();
        let mut shell_end = Vec::with_capacity(cutoff as usize + 1);
        for total in 0..=cutoff {
            let mut current = vec![0u32; num_modes];
            push_compositions(total, 0, &mut current, &mut basis);
            shell_end.push(basis.len());
        }
        let lookup = basis
            .iter()
            .enumerate()
            .map(|(i, n)| (n.0.clone(), i))
            .collect();

        Ok(Self {
            num_modes,
            cutoff,
            frequencies,
            scale_weights,
            basis,
            lookup,
            shell_end,
        })
    }

    pub fn num_modes(&self) -> usize {
        self.num_modes
    }

    pub fn cutoff(&self) -> u32 {
        self.cutoff
    }

    pub fn frequencies(&self) -> &[f64] {
        &self.frequencies
    }

    pub fn scale_weights(&self) -> &[f64] {
        &self.scale_weights
    }

    pub fn dim(&self) -> usize {
        self.basis.len()
    }

    pub fn basis(&self) -> &[FockIndex] {
        &self.basis
    }

    pub fn index_of(&self, occupations: &[u32]) -> Option<usize> {
        self.lookup.get(occupations).copied()
    }

    /// Number of basis states with total occupation at most `level`.
    pub fn count_up_to(&self, level: u32) -> usize {
        self.shell_end[level.min(self.cutoff) as usize]
    }

    /// Dimension of the interior block `{ |n| <= D - margin }`.
    pub fn interior_dim(&self, margin: u32) -> Result<usize> {
        if margin > self.cutoff {
            return Err(Error::MarginTooLarge {
                margin,
                cutoff: self.cutoff,
            });
        }
        Ok(self.count_up_to(self.cutoff - margin))
    }

    /// Same modes, frequencies and weights with a different cutoff.
    pub fn with_cutoff(&self, cutoff: u32) -> Result<Self> {
        Self::with_parameters(
            self.num_modes,
            cutoff,
            self.frequencies.clone(),
            self.scale_weights.clone(),
        )
    }

    fn check_amplitude(&self, psi: &[C64]) -> Result<()> {
        if psi.len() != self.num_modes {
            return Err(Error::ShapeMismatch(format!(
                "amplitude has {} components, space has {} modes",
                psi.len(),
                self.num_modes
            )));
        }
        Ok(())
    }
}

// Compositions of `remaining` into the modes `k..`, first mode largest first.
fn push_compositions(remaining: u32, k: usize, current: &mut Vec<u32>, out: &mut Vec<FockIndex>) {
    let m = current.len();
    if k == m - 1 {
        current[k] = remaining;
        out.push(FockIndex(current.clone()));
        return;
    }
    for n in (0..=remaining).rev() {
        current[k] = n;
        push_compositions(remaining - n, k + 1, current, out);
    }
    current[k] = 0;
}

/// State vector in the truncated basis.
#[derive(Debug, Clone, PartialEq)]
pub struct FockVector {
    pub amplitudes: DVector<C64>,
}

impl FockVector {
    pub fn new(amplitudes: DVector<C64>) -> Self {
        Self { amplitudes }
    }

    /// `<self|other>`, antilinear in `self`.
    pub fn inner(&self, other: &FockVector) -> C64 {
        self.amplitudes.dotc(&other.amplitudes)
    }

    pub fn norm_sqr(&self) -> f64 {
        self.amplitudes.norm_squared()
    }

    pub fn len(&self) -> usize {
        self.amplitudes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.amplitudes.is_empty()
    }
}

/// Dense operator on a truncated Fock space.
#[derive(Debug, Clone)]
pub struct FockOperator {
    pub matrix: DMatrix<C64>,
    space: Arc<ModeSpace>,
}

impl FockOperator {
    pub fn from_matrix(space: Arc<ModeSpace>, matrix: DMatrix<C64>) -> Result<Self> {
        let d = space.dim();
        if matrix.nrows() != d || matrix.ncols() != d {
            return Err(Error::ShapeMismatch(format!(
                "matrix is {}x{}, space dimension is {d}",
                matrix.nrows(),
                matrix.ncols()
            )));
        }
        Ok(Self { matrix, space })
    }

    pub(crate) fn from_matrix_unchecked(space: Arc<ModeSpace>, matrix: DMatrix<C64>) -> Self {
        debug_assert_eq!(matrix.nrows(), space.dim());
        Self { matrix, space }
    }

    pub fn zeros(space: Arc<ModeSpace>) -> Self {
        let d = space.dim();
        Self::from_matrix_unchecked(space, DMatrix::zeros(d, d))
    }

    pub fn identity(space: Arc<ModeSpace>) -> Self {
        let d = space.dim();
        Self::from_matrix_unchecked(space, DMatrix::identity(d, d))
    }

    pub fn diagonal(space: Arc<ModeSpace>, diag: impl IntoIterator<Item = C64>) -> Self {
        let v: Vec<C64> = diag.into_iter().collect();
        let m = DMatrix::from_diagonal(&DVector::from_vec(v));
        Self::from_matrix_unchecked(space, m)
    }

    pub fn space(&self) -> &Arc<ModeSpace> {
        &self.space
    }

    pub fn dim(&self) -> usize {
        self.matrix.nrows()
    }

    pub fn adjoint(&self) -> Self {
        Self::from_matrix_unchecked(self.space.clone(), self.matrix.adjoint())
    }

    /// Operator product `self * rhs`.
    pub fn compose(&self, rhs: &FockOperator) -> Self {
        Self::from_matrix_unchecked(self.space.clone(), &self.matrix * &rhs.matrix)
    }

    pub fn add(&self, rhs: &FockOperator) -> Self {
        Self::from_matrix_unchecked(self.space.clone(), &self.matrix + &rhs.matrix)
    }

    pub fn sub(&self, rhs: &FockOperator) -> Self {
        Self::from_matrix_unchecked(self.space.clone(), &self.matrix - &rhs.matrix)
    }

    pub fn scale(&self, factor: C64) -> Self {
        Self::from_matrix_unchecked(self.space.clone(), &self.matrix * factor)
    }

    pub fn apply(&self, v: &FockVector) -> FockVector {
        FockVector::new(&self.matrix * &v.amplitudes)
    }

    /// `<left| self |right>`.
    pub fn matrix_element(&self, left: &FockVector, right: &FockVector) -> C64 {
        left.amplitudes.dotc(&(&self.matrix * &right.amplitudes))
    }

    /// Largest entry of `|self - self^dagger|`.
    pub fn hermitian_deviation(&self) -> f64 {
        max_abs(&(&self.matrix - self.matrix.adjoint()))
    }

    pub fn max_abs_diff(&self, other: &FockOperator) -> f64 {
        max_abs(&(&self.matrix - &other.matrix))
    }

    /// Leading `{ |n| <= D - margin }` block.
    pub fn interior_block(&self, margin: u32) -> Result<DMatrix<C64>> {
        let d = self.space.interior_dim(margin)?;
        Ok(self.matrix.view((0, 0), (d, d)).into_owned())
    }

    /// Spectral norm (largest singular value).
    pub fn operator_norm(&self) -> f64 {
        spectral_norm(&self.matrix)
    }
}

pub(crate) fn max_abs(m: &DMatrix<C64>) -> f64 {
    m.iter().fold(0.0f64, |acc, z| acc.max(z.norm()))
}

pub(crate) fn spectral_norm(m: &DMatrix<C64>) -> f64 {
    if m.is_empty() {
        return 0.0;
    }
    m.clone()
        .svd(false, false)
        .singular_values
        .iter()
        .fold(0.0f64, |a, &s| a.max(s))
}

/// Annihilation operators `A_k` and creation operators `C_k`, one per mode.
/// Raising past the cutoff maps to zero.
pub fn ladder_operators(space: &Arc<ModeSpace>) -> (Vec<FockOperator>, Vec<FockOperator>) {
    let d = space.dim();
    let mut annihilation = Vec::with_capacity(space.num_modes());
    let mut creation = Vec::with_capacity(space.num_modes());
    for k in 0..space.num_modes() {
        let mut a = DMatrix::<C64>::zeros(d, d);
        for (col, n) in space.basis().iter().enumerate() {
            if n.0[k] == 0 {
                continue;
            }
            let mut lowered = n.0.clone();
            lowered[k] -= 1;
            let row = space.index_of(&lowered).expect("lowered state is in the basis");
            a[(row, col)] = C64::new((n.0[k] as f64).sqrt(), 0.0);
        }
        let c = a.adjoint();
        annihilation.push(FockOperator::from_matrix_unchecked(space.clone(), a));
        creation.push(FockOperator::from_matrix_unchecked(space.clone(), c));
    }
    (annihilation, creation)
}

fn number_weighted_diagonal(space: &Arc<ModeSpace>, weights: &[f64]) -> FockOperator {
    let diag = space.basis().iter().map(|n| {
        let e: f64 = n.0.iter().zip(weights).map(|(&nk, w)| w * nk as f64).sum();
        C64::new(e, 0.0)
    });
    FockOperator::diagonal(space.clone(), diag)
}

/// `H_0 = sum_k omega_k C_k A_k`.
pub fn free_hamiltonian(space: &Arc<ModeSpace>) -> FockOperator {
    number_weighted_diagonal(space, space.frequencies())
}

/// Diagonal energies `sum_k omega_k n_k` of the free Hamiltonian, in basis order.
pub fn free_energies(space: &ModeSpace) -> Vec<f64> {
    space
        .basis()
        .iter()
        .map(|n| n.0.iter().zip(space.frequencies()).map(|(&nk, w)| w * nk as f64).sum())
        .collect()
}

/// `H_rho = sum_k lambda_k^(-2 rho) C_k A_k`.
pub fn h_rho_operator(space: &Arc<ModeSpace>, rho: f64) -> Result<FockOperator> {
    if !(rho >= 0.0) {
        return Err(Error::NegativeRho(rho));
    }
    let weights: Vec<f64> = space
        .scale_weights()
        .iter()
        .map(|l| l.powf(-2.0 * rho))
        .collect();
    Ok(number_weighted_diagonal(space, &weights))
}

/// Unnormalized coherent state with components `prod_k psi_k^n_k / sqrt(n_k!)`.
pub fn coherent_vector(space: &ModeSpace, psi: &[C64]) -> Result<FockVector> {
    space.check_amplitude(psi)?;
    let amps = space.basis().iter().map(|n| {
        n.0.iter().zip(psi).fold(C64::new(1.0, 0.0), |acc, (&nk, &z)| {
            acc * z.powu(nk) / sqrt_factorial_ratio(nk, 0)
        })
    });
    Ok(FockVector::new(DVector::from_iterator(space.dim(), amps)))
}

/// `exp(<psi2|psi1>)`, the untruncated coherent-state overlap.
pub fn coherent_overlap(psi2: &[C64], psi1: &[C64]) -> C64 {
    let s: C64 = psi2.iter().zip(psi1).map(|(a, b)| a.conj() * b).sum();
    s.exp()
}

/// Squared norm of the coherent-state components discarded by the cutoff,
/// `sum_{s > D} |psi|^(2s) / s!`. Summed directly, so it is exact up to rounding.
pub fn tail_bound(space: &ModeSpace, psi: &[C64]) -> f64 {
    let x: f64 = psi.iter().map(|z| z.norm_sqr()).sum();
    if x == 0.0 {
        return 0.0;
    }
    let start = space.cutoff() as u64 + 1;
    let mut term = (start as f64 * x.ln() - ln_factorial(start)).exp();
    let mut sum = 0.0;
    let mut s = start;
    loop {
        sum += term;
        s += 1;
        term *= x / s as f64;
        if (s as f64) > x && term <= sum * 1e-17 {
            break;
        }
        if term == 0.0 {
            break;
        }
    }
    sum
}

/// Orthogonal projector onto `{ |n| : |n| <= D - margin }`.
pub fn interior_projector(space: &Arc<ModeSpace>, margin: u32) -> Result<FockOperator> {
    let inner = space.interior_dim(margin)?;
    let diag = (0..space.dim()).map(|i| C64::new(if i < inner { 1.0 } else { 0.0 }, 0.0));
    Ok(FockOperator::diagonal(space.clone(), diag))
}
