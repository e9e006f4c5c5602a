use std::collections::btree_map::Entry;
use std::collections::BTreeMap;
use std::fmt;
use std::ops::{Add, Mul, Neg, Sub};

use crate::error::{Error, Result};
use crate::util::multinomial;
use crate::C64;

/// Exponents of one monomial `prod_k conj(psi_k)^creation_k psi_k^annihilation_k`.
///
/// Under Wick quantization this monomial becomes `prod C_k^creation_k prod A_k^annihilation_k`,
/// so `creation` counts the antiholomorphic factors.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Monomial {
    pub creation: Vec<u32>,
    pub annihilation: Vec<u32>,
}

impl Monomial {
    pub fn new(creation: Vec<u32>, annihilation: Vec<u32>) -> Self {
        debug_assert_eq!(creation.len(), annihilation.len());
        Self {
            creation,
            annihilation,
        }
    }

    pub fn constant(modes: usize) -> Self {
        Self::new(vec![0; modes], vec![0; modes])
    }

    /// `(k, l)`: number of creation and annihilation factors.
    pub fn bidegree(&self) -> (u32, u32) {
        (self.creation.iter().sum(), self.annihilation.iter().sum())
    }

    pub fn degree(&self) -> u32 {
        let (k, l) = self.bidegree();
        k + l
    }

    pub fn conj(&self) -> Self {
        Self::new(self.annihilation.clone(), self.creation.clone())
    }

    pub fn eval(&self, psi: &[C64]) -> C64 {
        self.creation
            .iter()
            .zip(&self.annihilation)
            .zip(psi)
            .fold(C64::new(1.0, 0.0), |acc, ((&a, &b), z)| {
                acc * z.conj().powu(a) * z.powu(b)
            })
    }

    fn times(&self, other: &Monomial) -> Monomial {
        Monomial::new(
            self.creation.iter().zip(&other.creation).map(|(a, b)| a + b).collect(),
            self.annihilation.iter().zip(&other.annihilation).map(|(a, b)| a + b).collect(),
        )
    }
}

/// Polynomial phase-space symbol in `(conj(psi), psi)` over `M` modes.
///
/// Stored sparsely as monomial coefficients. The symmetric coefficient tensors
/// `c_kl` are available through [`PolySymbol::coefficient_tensor`].
#[derive(Debug, Clone, PartialEq)]
pub struct PolySymbol {
    modes: usize,
    terms: BTreeMap<Monomial, C64>,
}

impl PolySymbol {
    pub fn zero(modes: usize) -> Self {
        Self {
            modes,
            terms: BTreeMap::new(),
        }
    }

    pub fn constant(modes: usize, c: C64) -> Self {
        let mut p = Self::zero(modes);
        p.add_term(Monomial::constant(modes), c);
        p
    }

    pub fn monomial(modes: usize, creation: &[u32], annihilation: &[u32], c: C64) -> Result<Self> {
        if creation.len() != modes || annihilation.len() != modes {
            return Err(Error::ShapeMismatch(format!(
                "monomial exponents must have {modes} entries"
            )));
        }
        let mut p = Self::zero(modes);
        p.add_term(Monomial::new(creation.to_vec(), annihilation.to_vec()), c);
        Ok(p)
    }

    /// `sum_k w_k |psi_k|^2`.
    pub fn weighted_number(weights: &[f64]) -> Self {
        let modes = weights.len();
        let mut p = Self::zero(modes);
        for (k, &w) in weights.iter().enumerate() {
            let mut e = vec![0; modes];
            e[k] = 1;
            p.add_term(Monomial::new(e.clone(), e), C64::new(w, 0.0));
        }
        p
    }

    /// `|psi|^2`, the Wick symbol of the number operator.
    pub fn number(modes: usize) -> Self {
        Self::weighted_number(&vec![1.0; modes])
    }

    pub fn from_terms(modes: usize, terms: impl IntoIterator<Item = (Monomial, C64)>) -> Result<Self> {
        let mut p = Self::zero(modes);
        for (m, c) in terms {
            if m.creation.len() != modes || m.annihilation.len() != modes {
                return Err(Error::ShapeMismatch(format!(
                    "monomial exponents must have {modes} entries"
                )));
            }
            p.add_term(m, c);
        }
        Ok(p)
    }

    pub fn modes(&self) -> usize {
        self.modes
    }

    pub fn terms(&self) -> impl Iterator<Item = (&Monomial, &C64)> {
        self.terms.iter()
    }

    pub fn num_terms(&self) -> usize {
        self.terms.len()
    }

    pub fn coeff(&self, m: &Monomial) -> C64 {
        self.terms.get(m).copied().unwrap_or_default()
    }

    pub fn is_zero(&self) -> bool {
        self.terms.is_empty()
    }

    pub fn degree(&self) -> u32 {
        self.terms.keys().map(Monomial::degree).max().unwrap_or(0)
    }

    pub(crate) fn add_term(&mut self, m: Monomial, c: C64) {
        if c == C64::new(0.0, 0.0) {
            return;
        }
        match self.terms.entry(m) {
            Entry::Occupied(mut e) => {
                *e.get_mut() += c;
                if *e.get() == C64::new(0.0, 0.0) {
                    e.remove();
                }
            }
            Entry::Vacant(e) => {
                e.insert(c);
            }
        }
    }

    /// Drop coefficients with modulus at most `tol`.
    pub fn pruned(mut self, tol: f64) -> Self {
        self.terms.retain(|_, c| c.norm() > tol);
        self
    }

    pub fn eval(&self, psi: &[C64]) -> C64 {
        self.terms.iter().map(|(m, c)| c * m.eval(psi)).sum()
    }

    pub fn scale(&self, s: C64) -> Self {
        let mut out = Self::zero(self.modes);
        for (m, c) in &self.terms {
            out.add_term(m.clone(), c * s);
        }
        out
    }

    /// Complex conjugate symbol.
    pub fn conj(&self) -> Self {
        let mut out = Self::zero(self.modes);
        for (m, c) in &self.terms {
            out.add_term(m.conj(), c.conj());
        }
        out
    }

    /// Holomorphic derivative `d/d psi_k`.
    pub fn d_psi(&self, k: usize) -> Self {
        let mut out = Self::zero(self.modes);
        for (m, c) in &self.terms {
            let b = m.annihilation[k];
            if b > 0 {
                let mut d = m.clone();
                d.annihilation[k] -= 1;
                out.add_term(d, c * b as f64);
            }
        }
        out
    }

    /// Antiholomorphic derivative `d/d conj(psi_k)`.
    pub fn d_conj(&self, k: usize) -> Self {
        let mut out = Self::zero(self.modes);
        for (m, c) in &self.terms {
            let a = m.creation[k];
            if a > 0 {
                let mut d = m.clone();
                d.creation[k] -= 1;
                out.add_term(d, c * a as f64);
            }
        }
        out
    }

    /// Top-degree homogeneous part.
    pub fn principal_part(&self) -> Self {
        self.homogeneous_part(self.degree())
    }

    pub fn homogeneous_part(&self, degree: u32) -> Self {
        let mut out = Self::zero(self.modes);
        for (m, c) in &self.terms {
            if m.degree() == degree {
                out.add_term(m.clone(), *c);
            }
        }
        out
    }

    /// Reality predicate: `c(conj m) = conj(c(m))` for every monomial.
    pub fn is_real(&self, tol: f64) -> bool {
        self.terms
            .iter()
            .all(|(m, c)| (self.coeff(&m.conj()) - c.conj()).norm() <= tol)
    }

    /// Real part `(p + conj p) / 2`.
    pub fn real_part(&self) -> Self {
        (self + &self.conj()).scale(C64::new(0.5, 0.0))
    }

    /// Largest coefficient difference.
    pub fn max_coeff_diff(&self, other: &PolySymbol) -> f64 {
        let mut worst = 0.0f64;
        for (m, c) in &self.terms {
            worst = worst.max((c - other.coeff(m)).norm());
        }
        for (m, c) in &other.terms {
            if !self.terms.contains_key(m) {
                worst = worst.max(c.norm());
            }
        }
        worst
    }

    pub fn max_coeff(&self) -> f64 {
        self.terms.values().fold(0.0, |a, c| a.max(c.norm()))
    }

    /// Symmetric coefficient tensor `c_kl`, flattened row-major over
    /// `k` creation indices followed by `l` annihilation indices.
    pub fn coefficient_tensor(&self, k: u32, l: u32) -> Vec<C64> {
        let rank = (k + l) as usize;
        let len = self.modes.pow(rank as u32);
        let mut out = vec![C64::default(); len];
        let mut tuple = vec![0usize; rank];
        for (flat, slot) in out.iter_mut().enumerate() {
            let mut rest = flat;
            for t in tuple.iter_mut().rev() {
                *t = rest % self.modes;
                rest /= self.modes;
            }
            let m = monomial_of_tuple(self.modes, &tuple[..k as usize], &tuple[k as usize..]);
            let c = self.coeff(&m);
            if c != C64::default() {
                *slot = c / (multinomial(&m.creation) * multinomial(&m.annihilation));
            }
        }
        out
    }

    /// Inverse of [`coefficient_tensor`](Self::coefficient_tensor): contracts each
    /// tensor with `conj(psi)^k psi^l`. Non-symmetric input is symmetrized implicitly.
    pub fn from_tensors(modes: usize, tensors: &[((u32, u32), Vec<C64>)]) -> Result<Self> {
        let mut p = Self::zero(modes);
        for ((k, l), data) in tensors {
            let rank = (k + l) as usize;
            if data.len() != modes.pow(rank as u32) {
                return Err(Error::ShapeMismatch(format!(
                    "tensor c_{k}{l} has {} entries, expected {}",
                    data.len(),
                    modes.pow(rank as u32)
                )));
            }
            let mut tuple = vec![0usize; rank];
            for (flat, c) in data.iter().enumerate() {
                let mut rest = flat;
                for t in tuple.iter_mut().rev() {
                    *t = rest % modes;
                    rest /= modes;
                }
                p.add_term(
                    monomial_of_tuple(modes, &tuple[..*k as usize], &tuple[*k as usize..]),
                    *c,
                );
            }
        }
        Ok(p)
    }

    /// Bidegrees `(k, l)` present in the symbol.
    pub fn bidegrees(&self) -> Vec<(u32, u32)> {
        let mut v: Vec<_> = self.terms.keys().map(Monomial::bidegree).collect();
        v.sort();
        v.dedup();
        v
    }

    fn check_modes(&self, other: &PolySymbol) {
        assert_eq!(
            self.modes, other.modes,
            "symbols over different mode counts cannot be combined"
        );
    }
}

pub(crate) fn monomial_of_tuple(modes: usize, creation: &[usize], annihilation: &[usize]) -> Monomial {
    let mut a = vec![0u32; modes];
    let mut b = vec![0u32; modes];
    for &i in creation {
        a[i] += 1;
    }
    for &j in annihilation {
        b[j] += 1;
    }
    Monomial::new(a, b)
}

impl Add for &PolySymbol {
    type Output = PolySymbol;
    fn add(self, rhs: &PolySymbol) -> PolySymbol {
        self.check_modes(rhs);
        let mut out = self.clone();
        for (m, c) in &rhs.terms {
            out.add_term(m.clone(), *c);
        }
        out
    }
}

impl Sub for &PolySymbol {
    type Output = PolySymbol;
    fn sub(self, rhs: &PolySymbol) -> PolySymbol {
        self + &(-rhs)
    }
}

impl Neg for &PolySymbol {
    type Output = PolySymbol;
    fn neg(self) -> PolySymbol {
        self.scale(C64::new(-1.0, 0.0))
    }
}

impl Mul for &PolySymbol {
    type Output = PolySymbol;
    fn mul(self, rhs: &PolySymbol) -> PolySymbol {
        self.check_modes(rhs);
        let mut out = PolySymbol::zero(self.modes);
        for (m1, c1) in &self.terms {
            for (m2, c2) in &rhs.terms {
                out.add_term(m1.times(m2), c1 * c2);
            }
        }
        out
    }
}

impl fmt::Display for PolySymbol {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.terms.is_empty() {
            return write!(f, "0");
        }
        let mut first = true;
        for (m, c) in &self.terms {
            if !first {
                write!(f, " + ")?;
            }
            first = false;
            write!(f, "({:.6}{:+.6}i)", c.re, c.im)?;
            for (k, (&a, &b)) in m.creation.iter().zip(&m.annihilation).enumerate() {
                if a > 0 {
                    write!(f, " cpsi{k}^{a}")?;
                }
                if b > 0 {
                    write!(f, " psi{k}^{b}")?;
                }
            }
        }
        Ok(())
    }
}
