//! Pauli strings and real-weighted sums of them.
//!
//! Amplitude layout used throughout the crate: bit `i` of a basis index holds
//! site `i` in the Z eigenbasis, with bit value 0 meaning σᶻ = +1.

use std::fmt;

use nalgebra::DMatrix;
use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{validation, Result};

/// Single-site Pauli operator.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Pauli {
    I,
    X,
    Y,
    Z,
}

impl Pauli {
    pub fn letter(self) -> char {
        match self {
            Pauli::I => 'I',
            Pauli::X => 'X',
            Pauli::Y => 'Y',
            Pauli::Z => 'Z',
        }
    }
}

/// A tensor product of single-site Paulis over a chain of `L` sites.
#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct PauliString {
    sites: Vec<Pauli>,
}

/// Bit-mask form of a Pauli string, used by the statevector kernels.
///
/// `P|k⟩ = i^y_count · (−1)^popcount(k & z_mask) · |k ^ x_mask⟩`.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct PauliMasks {
    pub x_mask: usize,
    pub z_mask: usize,
    pub y_count: u32,
}

impl PauliMasks {
    /// Phase picked up by basis state `k` (before the bit flip).
    #[inline]
    pub fn phase(&self, k: usize) -> Complex64 {
        let sign = if (k & self.z_mask).count_ones() % 2 == 0 {
            1.0
        } else {
            -1.0
        };
        match self.y_count % 4 {
            0 => Complex64::new(sign, 0.0),
            1 => Complex64::new(0.0, sign),
            2 => Complex64::new(-sign, 0.0),
            _ => Complex64::new(0.0, -sign),
        }
    }
}

impl PauliString {
    pub fn identity(l: usize) -> Self {
        Self {
            sites: vec![Pauli::I; l],
        }
    }

    /// Build a string on `l` sites with the listed non-identity factors.
    ///
    /// Panics if a site index is out of range.
    pub fn from_sites(l: usize, factors: &[(usize, Pauli)]) -> Self {
        let mut sites = vec![Pauli::I; l];
        for &(i, p) in factors {
            assert!(i < l, "site {i} out of range for L = {l}");
            sites[i] = p;
        }
        Self { sites }
    }

    pub fn len(&self) -> usize {
        self.sites.len()
    }

    pub fn is_empty(&self) -> bool {
        self.sites.is_empty()
    }

    pub fn sites(&self) -> &[Pauli] {
        &self.sites
    }

    /// Indices of the non-identity factors.
    pub fn support(&self) -> Vec<usize> {
        self.sites
            .iter()
            .enumerate()
            .filter(|(_, p)| **p != Pauli::I)
            .map(|(i, _)| i)
            .collect()
    }

    /// True when the matrix of this string has only real entries.
    pub fn is_real(&self) -> bool {
        self.sites.iter().filter(|p| **p == Pauli::Y).count() % 2 == 0
    }

    pub fn masks(&self) -> PauliMasks {
        let mut x_mask = 0usize;
        let mut z_mask = 0usize;
        let mut y_count = 0u32;
        for (i, p) in self.sites.iter().enumerate() {
            match p {
                Pauli::I => {}
                Pauli::X => x_mask |= 1 << i,
                Pauli::Z => z_mask |= 1 << i,
                Pauli::Y => {
                    x_mask |= 1 << i;
                    z_mask |= 1 << i;
                    y_count += 1;
                }
            }
        }
        PauliMasks {
            x_mask,
            z_mask,
            y_count,
        }
    }
}

impl fmt::Display for PauliString {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for p in &self.sites {
            write!(f, "{}", p.letter())?;
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Term {
    pub coefficient: f64,
    pub string: PauliString,
}

/// A Hermitian operator `Σ_k c_k P_k` with real coefficients.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct HamiltonianOperator {
    l: usize,
    terms: Vec<Term>,
}

impl HamiltonianOperator {
    pub fn new(l: usize) -> Self {
        Self {
            l,
            terms: Vec::new(),
        }
    }

    pub fn from_terms(l: usize, terms: Vec<Term>) -> Result<Self> {
        let op = Self { l, terms };
        op.validate()?;
        Ok(op)
    }

    pub fn push(&mut self, coefficient: f64, string: PauliString) {
        assert_eq!(string.len(), self.l, "Pauli string length must match L");
        self.terms.push(Term {
            coefficient,
            string,
        });
    }

    pub fn l(&self) -> usize {
        self.l
    }

    pub fn terms(&self) -> &[Term] {
        &self.terms
    }

    pub fn dim(&self) -> usize {
        1usize << self.l
    }

    /// Checks the term list describes a Hermitian operator on `L` sites.
    pub fn validate(&self) -> Result<()> {
        for t in &self.terms {
            if t.string.len() != self.l {
                return Err(validation(format!(
                    "term {} acts on {} sites, operator has L = {}",
                    t.string,
                    t.string.len(),
                    self.l
                )));
            }
            if !t.coefficient.is_finite() {
                return Err(validation(format!(
                    "term {} has non-finite coefficient {}",
                    t.string, t.coefficient
                )));
            }
        }
        Ok(())
    }

    pub fn is_real(&self) -> bool {
        self.terms.iter().all(|t| t.string.is_real())
    }

    /// `out = H · input`, matrix free.
    pub fn apply(&self, input: &[Complex64], out: &mut [Complex64]) {
        debug_assert_eq!(input.len(), self.dim());
        debug_assert_eq!(out.len(), self.dim());
        out.iter_mut().for_each(|x| *x = Complex64::new(0.0, 0.0));
        for t in &self.terms {
            let m = t.string.masks();
            for (k, &amp) in input.iter().enumerate() {
                out[k ^ m.x_mask] += t.coefficient * m.phase(k) * amp;
            }
        }
    }

    /// Real matrix-free product; only valid when [`Self::is_real`] holds.
    pub fn apply_real(&self, input: &[f64], out: &mut [f64]) {
        debug_assert!(self.is_real());
        out.iter_mut().for_each(|x| *x = 0.0);
        for t in &self.terms {
            let m = t.string.masks();
            for (k, &amp) in input.iter().enumerate() {
                out[k ^ m.x_mask] += t.coefficient * m.phase(k).re * amp;
            }
        }
    }

    pub fn to_dense(&self) -> DMatrix<Complex64> {
        let dim = self.dim();
        let mut h = DMatrix::<Complex64>::zeros(dim, dim);
        for t in &self.terms {
            let m = t.string.masks();
            for k in 0..dim {
                h[(k ^ m.x_mask, k)] += t.coefficient * m.phase(k);
            }
        }
        h
    }

    /// Dense real symmetric realization. Fails if any string is imaginary.
    pub fn to_dense_real(&self) -> Result<DMatrix<f64>> {
        if !self.is_real() {
            return Err(validation("operator has imaginary matrix elements"));
        }
        let dim = self.dim();
        let mut h = DMatrix::<f64>::zeros(dim, dim);
        for t in &self.terms {
            let m = t.string.masks();
            for k in 0..dim {
                h[(k ^ m.x_mask, k)] += t.coefficient * m.phase(k).re;
            }
        }
        Ok(h)
    }
}
