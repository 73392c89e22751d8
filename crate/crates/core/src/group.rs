//! Finite groups given by multiplication tables, and the complex group
//! algebra spanned by the left translations `λ_s`.
//!
//! Elements are plain indices `0..order`. Everything built on top of a
//! [`FiniteGroup`] only ever consults the tables, so the higher layers do not
//! care which concrete family a group came from.

use std::collections::BTreeMap;
use std::fmt;
use std::sync::Arc;

use num_complex::Complex64;

use crate::error::{Error, Result};

/// Largest `k` accepted by [`FiniteGroup::symmetric`].
pub const MAX_SYMMETRIC_DEGREE: usize = 5;

/// Which constructor produced a group. Only used by ψ builders that depend
/// on the concrete labelling (e.g. the Hamming weight on `ℤ_2^k`).
#[derive(Clone, Debug, PartialEq, Eq)]
pub enum GroupKind {
    Cyclic(usize),
    Dihedral(usize),
    Hypercube(usize),
    Symmetric(usize),
    Table,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct FiniteGroup {
    name: String,
    kind: GroupKind,
    mult: Vec<Vec<usize>>,
    identity: usize,
    inv: Vec<usize>,
}

impl FiniteGroup {
    /// `ℤ_n` with addition mod `n`.
    pub fn cyclic(n: usize) -> Result<Self> {
        if n == 0 {
            return Err(Error::InvalidGroup("cyclic group needs n >= 1".into()));
        }
        let mult = (0..n)
            .map(|a| (0..n).map(|b| (a + b) % n).collect())
            .collect();
        Ok(Self::from_parts(
            format!("Z{n}"),
            GroupKind::Cyclic(n),
            mult,
        ))
    }

    /// Dihedral group of order `2n`. Element `k + n*j` stands for `r^k s^j`.
    pub fn dihedral(n: usize) -> Result<Self> {
        if n == 0 {
            return Err(Error::InvalidGroup("dihedral group needs n >= 1".into()));
        }
        let order = 2 * n;
        let mult = (0..order)
            .map(|x| {
                let (a, b) = (x % n, x / n);
                (0..order)
                    .map(|y| {
                        let (c, d) = (y % n, y / n);
                        // r^a s^b r^c s^d = r^(a + (-1)^b c) s^(b + d)
                        let rot = if b == 0 { (a + c) % n } else { (a + n - c) % n };
                        rot + n * ((b + d) % 2)
                    })
                    .collect()
            })
            .collect();
        Ok(Self::from_parts(
            format!("D{n}"),
            GroupKind::Dihedral(n),
            mult,
        ))
    }

    /// `ℤ_2^k`, elements encoded as bitmasks, product is xor.
    pub fn hypercube(k: usize) -> Result<Self> {
        if k == 0 || k > 16 {
            return Err(Error::InvalidGroup(format!(
                "hypercube dimension must be in 1..=16, got {k}"
            )));
        }
        let order = 1usize << k;
        let mult = (0..order)
            .map(|a| (0..order).map(|b| a ^ b).collect())
            .collect();
        Ok(Self::from_parts(
            format!("Z2^{k}"),
            GroupKind::Hypercube(k),
            mult,
        ))
    }

    /// Symmetric group `S_k` for `1 <= k <= 5`. Permutations are listed in
    /// lexicographic order (identity first); the product is composition,
    /// `(σ τ)(i) = σ(τ(i))`.
    pub fn symmetric(k: usize) -> Result<Self> {
        if k == 0 || k > MAX_SYMMETRIC_DEGREE {
            return Err(Error::InvalidGroup(format!(
                "symmetric group degree must be in 1..={MAX_SYMMETRIC_DEGREE}, got {k}"
            )));
        }
        let perms = permutations(k);
        let index: BTreeMap<&[usize], usize> = perms
            .iter()
            .enumerate()
            .map(|(i, p)| (p.as_slice(), i))
            .collect();
        let mult = perms
            .iter()
            .map(|sigma| {
                perms
                    .iter()
                    .map(|tau| {
                        let composed: Vec<usize> = tau.iter().map(|&i| sigma[i]).collect();
                        index[composed.as_slice()]
                    })
                    .collect()
            })
            .collect();
        Ok(Self::from_parts(
            format!("S{k}"),
            GroupKind::Symmetric(k),
            mult,
        ))
    }

    /// Validates an arbitrary multiplication table. Associativity is checked
    /// by brute force over all triples.
    pub fn from_table(mult: Vec<Vec<usize>>) -> Result<Self> {
        let n = mult.len();
        if n == 0 {
            return Err(Error::InvalidGroup("table is empty".into()));
        }
        for (a, row) in mult.iter().enumerate() {
            if row.len() != n {
                return Err(Error::InvalidGroup(format!(
                    "closure: row {a} has length {} (expected {n})",
                    row.len()
                )));
            }
            if let Some((b, &v)) = row.iter().enumerate().find(|(_, &v)| v >= n) {
                return Err(Error::InvalidGroup(format!(
                    "closure: mult({a},{b}) = {v} is outside 0..{n}"
                )));
            }
        }
        let identity = (0..n)
            .find(|&e| (0..n).all(|s| mult[e][s] == s && mult[s][e] == s))
            .ok_or_else(|| Error::InvalidGroup("identity: no two-sided identity element".into()))?;
        for (s, row) in mult.iter().enumerate() {
            if !(0..n).any(|r| row[r] == identity && mult[r][s] == identity) {
                return Err(Error::InvalidGroup(format!(
                    "inverse: element {s} has no two-sided inverse"
                )));
            }
        }
        for a in 0..n {
            for b in 0..n {
                for c in 0..n {
                    if mult[mult[a][b]][c] != mult[a][mult[b][c]] {
                        return Err(Error::InvalidGroup(format!(
                            "associativity: ({a}*{b})*{c} != {a}*({b}*{c})"
                        )));
                    }
                }
            }
        }
        Ok(Self::from_parts(
            format!("table{n}"),
            GroupKind::Table,
            mult,
        ))
    }

    fn from_parts(name: String, kind: GroupKind, mult: Vec<Vec<usize>>) -> Self {
        let n = mult.len();
        let identity = (0..n)
            .find(|&e| (0..n).all(|s| mult[e][s] == s))
            .expect("constructed table has an identity");
        let inv = (0..n)
            .map(|s| {
                (0..n)
                    .find(|&r| mult[s][r] == identity)
                    .expect("constructed table has inverses")
            })
            .collect();
        Self {
            name,
            kind,
            mult,
            identity,
            inv,
        }
    }

    pub fn order(&self) -> usize {
        self.mult.len()
    }

    pub fn name(&self) -> &str {
        &self.name
    }

    pub fn kind(&self) -> &GroupKind {
        &self.kind
    }

    pub fn identity(&self) -> usize {
        self.identity
    }

    #[inline]
    pub fn mul(&self, s: usize, r: usize) -> usize {
        self.mult[s][r]
    }

    #[inline]
    pub fn inv(&self, s: usize) -> usize {
        self.inv[s]
    }

    pub fn table(&self) -> &[Vec<usize>] {
        &self.mult
    }

    pub fn elements(&self) -> std::ops::Range<usize> {
        0..self.order()
    }

    pub fn is_abelian(&self) -> bool {
        self.elements()
            .all(|s| self.elements().all(|r| self.mul(s, r) == self.mul(r, s)))
    }
}

fn permutations(k: usize) -> Vec<Vec<usize>> {
    fn extend(prefix: &mut Vec<usize>, used: &mut [bool], out: &mut Vec<Vec<usize>>) {
        if prefix.len() == used.len() {
            out.push(prefix.clone());
            return;
        }
        for i in 0..used.len() {
            if !used[i] {
                used[i] = true;
                prefix.push(i);
                extend(prefix, used, out);
                prefix.pop();
                used[i] = false;
            }
        }
    }
    let mut out = Vec::new();
    extend(&mut Vec::with_capacity(k), &mut vec![false; k], &mut out);
    out
}

/// A finite sum `Σ c_s λ_s` in the group algebra. Zero coefficients are never
/// stored.
#[derive(Clone, Debug)]
pub struct GroupAlgebraElement {
    group: Arc<FiniteGroup>,
    coeffs: BTreeMap<usize, Complex64>,
}

impl GroupAlgebraElement {
    pub fn zero(group: &Arc<FiniteGroup>) -> Self {
        Self {
            group: Arc::clone(group),
            coeffs: BTreeMap::new(),
        }
    }

    /// The translation `λ_s`.
    pub fn basis(group: &Arc<FiniteGroup>, s: usize) -> Self {
        assert!(s < group.order(), "element {s} out of range");
        Self::from_coeffs(group, [(s, Complex64::new(1.0, 0.0))])
    }

    pub fn unit(group: &Arc<FiniteGroup>) -> Self {
        Self::basis(group, group.identity())
    }

    /// Builds an element from `(s, c_s)` pairs; repeated indices accumulate.
    pub fn from_coeffs<I>(group: &Arc<FiniteGroup>, coeffs: I) -> Self
    where
        I: IntoIterator<Item = (usize, Complex64)>,
    {
        let mut out = Self::zero(group);
        for (s, c) in coeffs {
            assert!(s < group.order(), "element {s} out of range");
            *out.coeffs.entry(s).or_default() += c;
        }
        out.prune();
        out
    }

    fn prune(&mut self) {
        self.coeffs.retain(|_, c| *c != Complex64::new(0.0, 0.0));
    }

    pub fn group(&self) -> &Arc<FiniteGroup> {
        &self.group
    }

    pub fn coeff(&self, s: usize) -> Complex64 {
        self.coeffs.get(&s).copied().unwrap_or_default()
    }

    pub fn iter(&self) -> impl Iterator<Item = (usize, Complex64)> + '_ {
        self.coeffs.iter().map(|(&s, &c)| (s, c))
    }

    pub fn support_len(&self) -> usize {
        self.coeffs.len()
    }

    pub fn is_zero(&self) -> bool {
        self.coeffs.is_empty()
    }

    fn check_group(&self, other: &Self) -> Result<()> {
        if Arc::ptr_eq(&self.group, &other.group) || self.group == other.group {
            Ok(())
        } else {
            Err(Error::GroupMismatch)
        }
    }

    /// Convolution product, `λ_s λ_r = λ_{sr}` extended bilinearly.
    pub fn mul(&self, other: &Self) -> Result<Self> {
        self.check_group(other)?;
        let g = &self.group;
        let mut coeffs: BTreeMap<usize, Complex64> = BTreeMap::new();
        for (&s, &a) in &self.coeffs {
            for (&r, &b) in &other.coeffs {
                *coeffs.entry(g.mul(s, r)).or_default() += a * b;
            }
        }
        let mut out = Self {
            group: Arc::clone(g),
            coeffs,
        };
        out.prune();
        Ok(out)
    }

    pub fn add(&self, other: &Self) -> Result<Self> {
        self.check_group(other)?;
        Ok(Self::from_coeffs(
            &self.group,
            self.iter().chain(other.iter()),
        ))
    }

    pub fn sub(&self, other: &Self) -> Result<Self> {
        self.add(&other.scale(Complex64::new(-1.0, 0.0)))
    }

    pub fn scale(&self, c: Complex64) -> Self {
        Self::from_coeffs(&self.group, self.iter().map(|(s, a)| (s, a * c)))
    }

    /// `c_s λ_s ↦ conj(c_s) λ_{s⁻¹}`.
    pub fn adjoint(&self) -> Self {
        Self::from_coeffs(
            &self.group,
            self.iter().map(|(s, c)| (self.group.inv(s), c.conj())),
        )
    }

    /// Plancherel trace: the coefficient of `λ_e`.
    pub fn trace(&self) -> Complex64 {
        self.coeff(self.group.identity())
    }

    /// Applies a Fourier multiplier `λ_s ↦ φ(s) λ_s`.
    pub fn multiplier<F: Fn(usize) -> Complex64>(&self, symbol: F) -> Self {
        Self::from_coeffs(&self.group, self.iter().map(|(s, c)| (s, symbol(s) * c)))
    }

    /// Largest coefficient modulus of `self - other`.
    pub fn max_abs_diff(&self, other: &Self) -> f64 {
        self.group
            .elements()
            .map(|s| (self.coeff(s) - other.coeff(s)).norm())
            .fold(0.0, f64::max)
    }
}

impl fmt::Display for GroupAlgebraElement {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.coeffs.is_empty() {
            return write!(f, "0");
        }
        for (i, (s, c)) in self.iter().enumerate() {
            if i > 0 {
                write!(f, " + ")?;
            }
            write!(f, "({:.6}{:+.6}i)·λ_{s}", c.re, c.im)?;
        }
        Ok(())
    }
}
