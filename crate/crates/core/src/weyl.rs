//! Symbolic calculus on the span of Weyl elements `E[h] = e^{iW(h)}`.
//!
//! `L^∞(Ω)` is commutative and `E[h]E[g] = E[h+g]`, so a finite linear
//! combination of Weyl elements is closed under products and adjoints.
//! Expectations are Gaussian characteristic-function values,
//! `𝔼 E[h] = e^{−‖h‖²/2}`, and the conditional expectation onto the
//! σ-algebra of the path up to time `u` is the second quantization of the
//! restriction `h ↦ h·1_{[0,u]}`: the part of `h` after `u` is independent of
//! the past and integrates out.
//!
//! Nothing here samples the process. See [`crate::mc`] for the concrete
//! Gaussian realization.

use std::fmt;

use nalgebra::DMatrix;
use num_complex::Complex64;
use serde::ser::{Serialize, SerializeSeq, Serializer};

use crate::cocycle::orthogonality_defect;
use crate::error::{Error, Result};
use crate::step::{StepVector, Time};

/// Componentwise tolerance under which two exponents are merged into one
/// term.
pub const MERGE_TOL: f64 = 1e-12;

/// Orthogonality tolerance accepted by [`WeylPolynomial::second_quantize`].
pub const ORTHOGONAL_TOL: f64 = 1e-10;

#[derive(Clone, Debug, PartialEq)]
pub struct WeylTerm {
    pub coeff: Complex64,
    pub exponent: StepVector,
}

/// `Σ_k c_k E[h_k]` with pairwise distinct exponents and nonzero
/// coefficients.
#[derive(Clone, Debug, PartialEq)]
pub struct WeylPolynomial {
    dim: usize,
    terms: Vec<WeylTerm>,
}

impl WeylPolynomial {
    pub fn zero(dim: usize) -> Self {
        Self {
            dim,
            terms: Vec::new(),
        }
    }

    /// The constant function 1.
    pub fn one(dim: usize) -> Self {
        Self::exp_i(StepVector::zero(dim))
    }

    /// `E[h] = e^{iW(h)}`.
    pub fn exp_i(h: StepVector) -> Self {
        Self {
            dim: h.dim(),
            terms: vec![WeylTerm {
                coeff: Complex64::new(1.0, 0.0),
                exponent: h,
            }],
        }
    }

    pub fn from_terms<I>(dim: usize, terms: I) -> Result<Self>
    where
        I: IntoIterator<Item = (Complex64, StepVector)>,
    {
        let mut out = Self::zero(dim);
        for (coeff, exponent) in terms {
            if exponent.dim() != dim {
                return Err(Error::DimMismatch {
                    left: dim,
                    right: exponent.dim(),
                });
            }
            out.push(coeff, exponent);
        }
        out.prune();
        Ok(out)
    }

    /// Adds a term, merging with a structurally equal exponent if present.
    fn push(&mut self, coeff: Complex64, exponent: StepVector) {
        if let Some(t) = self
            .terms
            .iter_mut()
            .find(|t| t.exponent.approx_eq(&exponent, MERGE_TOL))
        {
            t.coeff += coeff;
        } else {
            self.terms.push(WeylTerm { coeff, exponent });
        }
    }

    fn prune(&mut self) {
        self.terms.retain(|t| t.coeff != Complex64::new(0.0, 0.0));
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn terms(&self) -> &[WeylTerm] {
        &self.terms
    }

    pub fn len(&self) -> usize {
        self.terms.len()
    }

    pub fn is_empty(&self) -> bool {
        self.terms.is_empty()
    }

    /// Latest breakpoint over all exponents.
    pub fn support_end(&self) -> Time {
        self.terms
            .iter()
            .map(|t| t.exponent.support_end())
            .max()
            .unwrap_or_default()
    }

    fn check_dim(&self, other: &Self) -> Result<()> {
        if self.dim == other.dim {
            Ok(())
        } else {
            Err(Error::DimMismatch {
                left: self.dim,
                right: other.dim,
            })
        }
    }

    pub fn add(&self, other: &Self) -> Result<Self> {
        self.check_dim(other)?;
        let mut out = self.clone();
        for t in &other.terms {
            out.push(t.coeff, t.exponent.clone());
        }
        out.prune();
        Ok(out)
    }

    pub fn sub(&self, other: &Self) -> Result<Self> {
        self.add(&other.scale(Complex64::new(-1.0, 0.0)))
    }

    pub fn scale(&self, c: Complex64) -> Self {
        let mut out = Self {
            dim: self.dim,
            terms: self
                .terms
                .iter()
                .map(|t| WeylTerm {
                    coeff: t.coeff * c,
                    exponent: t.exponent.clone(),
                })
                .collect(),
        };
        out.prune();
        out
    }

    /// Product: exponents add.
    pub fn mul(&self, other: &Self) -> Result<Self> {
        self.check_dim(other)?;
        let mut out = Self::zero(self.dim);
        for a in &self.terms {
            for b in &other.terms {
                out.push(a.coeff * b.coeff, a.exponent.add(&b.exponent)?);
            }
        }
        out.prune();
        Ok(out)
    }

    /// `(c E[h])* = conj(c) E[−h]`.
    pub fn adjoint(&self) -> Self {
        Self {
            dim: self.dim,
            terms: self
                .terms
                .iter()
                .map(|t| WeylTerm {
                    coeff: t.coeff.conj(),
                    exponent: t.exponent.neg(),
                })
                .collect(),
        }
    }

    /// `Σ c_k e^{−‖h_k‖²/2}`.
    pub fn expectation(&self) -> Complex64 {
        self.terms
            .iter()
            .map(|t| t.coeff * (-0.5 * t.exponent.norm_sq()).exp())
            .sum()
    }

    /// Conditional expectation onto the past up to time `u`. Each term
    /// `c E[h]` becomes `c e^{−‖h·1_{(u,∞)}‖²/2} E[h·1_{[0,u]}]`.
    pub fn conditional_expectation(&self, u: Time) -> Result<Self> {
        let mut out = Self::zero(self.dim);
        for t in &self.terms {
            let (past, future) = t.exponent.split_at(u)?;
            out.push(t.coeff * (-0.5 * future.norm_sq()).exp(), past);
        }
        out.prune();
        Ok(out)
    }

    /// Conditional expectation onto the future from time `u` on: the mirror
    /// image of [`Self::conditional_expectation`], used by the reversed
    /// dilation.
    pub fn conditional_expectation_after(&self, u: Time) -> Result<Self> {
        let mut out = Self::zero(self.dim);
        for t in &self.terms {
            let (past, future) = t.exponent.split_at(u)?;
            out.push(t.coeff * (-0.5 * past.norm_sq()).exp(), future);
        }
        out.prune();
        Ok(out)
    }

    /// `Γ(Id ⊗ O)`: applies the orthogonal matrix `O` to every exponent.
    pub fn second_quantize(&self, o: &DMatrix<f64>) -> Result<Self> {
        if o.nrows() != self.dim || o.ncols() != self.dim {
            return Err(Error::DimMismatch {
                left: self.dim,
                right: o.nrows(),
            });
        }
        let defect = orthogonality_defect(o);
        if defect > ORTHOGONAL_TOL {
            return Err(Error::NotOrthogonal(defect));
        }
        Ok(self.map_exponents(o))
    }

    /// Applies `m` to every exponent without checking orthogonality.
    pub(crate) fn map_exponents(&self, m: &DMatrix<f64>) -> Self {
        let mut out = Self::zero(self.dim);
        for t in &self.terms {
            out.push(t.coeff, t.exponent.map_matrix(m));
        }
        out.prune();
        out
    }

    /// `‖x‖_{L²(Ω)}`, from the Gram identity
    /// `⟨E[h], E[g]⟩ = e^{−‖g−h‖²/2}`.
    ///
    /// Written as `|Σ a_k|² − 2 Σ_{j<k} Re(conj(a_j) a_k)(1 − e^{−‖h_j−h_k‖²/2})`
    /// so nearly coincident exponents do not lose precision.
    pub fn l2_norm(&self) -> f64 {
        let sum: Complex64 = self.terms.iter().map(|t| t.coeff).sum();
        let mut acc = sum.norm_sqr();
        for (j, a) in self.terms.iter().enumerate() {
            for b in &self.terms[j + 1..] {
                let d2 = a
                    .exponent
                    .sub(&b.exponent)
                    .expect("terms share a dimension")
                    .norm_sq();
                let gap = -(-0.5 * d2).exp_m1();
                acc -= 2.0 * (a.coeff.conj() * b.coeff).re * gap;
            }
        }
        acc.max(0.0).sqrt()
    }

    pub fn l2_distance(&self, other: &Self) -> Result<f64> {
        Ok(self.sub(other)?.l2_norm())
    }

    /// Every exponent is supported in `[0, u]`.
    pub fn is_measurable_before(&self, u: Time) -> bool {
        self.terms.iter().all(|t| t.exponent.support_end() <= u)
    }

    /// Every exponent is supported in `[u, ∞)`.
    pub fn is_measurable_after(&self, u: Time) -> bool {
        self.terms.iter().all(|t| t.exponent.support_start() >= u)
    }
}

impl fmt::Display for WeylPolynomial {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.terms.is_empty() {
            return write!(f, "0");
        }
        for (i, t) in self.terms.iter().enumerate() {
            if i > 0 {
                write!(f, "\n  + ")?;
            }
            write!(f, "({:.10}{:+.10}i)·", t.coeff.re, t.coeff.im)?;
            if t.exponent.is_zero() {
                write!(f, "1")?;
            } else {
                write!(f, "exp(iW({}))", t.exponent)?;
            }
        }
        Ok(())
    }
}

#[derive(serde::Serialize)]
struct TermRecord<'a> {
    coeff: [f64; 2],
    breakpoints: Vec<String>,
    pieces: &'a [Vec<f64>],
}

impl Serialize for WeylPolynomial {
    fn serialize<S: Serializer>(&self, serializer: S) -> std::result::Result<S::Ok, S::Error> {
        let mut seq = serializer.serialize_seq(Some(self.terms.len()))?;
        for t in &self.terms {
            let breakpoints = std::iter::once("0".to_string())
                .chain(t.exponent.ends().iter().map(ToString::to_string))
                .collect();
            seq.serialize_element(&TermRecord {
                coeff: [t.coeff.re, t.coeff.im],
                breakpoints,
                pieces: t.exponent.pieces(),
            })?;
        }
        seq.end()
    }
}
