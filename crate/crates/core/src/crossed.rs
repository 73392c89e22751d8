//! Finitely supported elements `Σ_s f_s ⋊ λ_s` of the crossed product
//! `L^∞(Ω) ⋊_α G`, where `α_s` is the second quantization of `Id ⊗ π_s`.
//!
//! For a finite group the Haar measure is counting measure, so every integral
//! over `G` is a finite sum, the modular function is trivial and the canonical
//! weight is the finite trace `x ↦ 𝔼(f_e)`.

use std::collections::BTreeMap;
use std::fmt;
use std::sync::Arc;

use num_complex::Complex64;
use num_traits::Zero;
use serde::Serialize;

use crate::cocycle::{CndFunction, Cocycle, DEFAULT_RANK_TOL};
use crate::error::{Error, Result};
use crate::group::{FiniteGroup, GroupAlgebraElement};
use crate::step::{StepVector, Time};
use crate::weyl::WeylPolynomial;

/// Default tolerance for equality of represented elements.
pub const DEFAULT_TOLERANCE: f64 = 1e-9;

const GRAM_TOL: f64 = 1e-8;

/// The data `(G, ψ, ℝ^d, π, b)` a dilation is built from.
#[derive(Clone, Debug)]
pub struct DilationContext {
    group: Arc<FiniteGroup>,
    psi: CndFunction,
    cocycle: Cocycle,
    tolerance: f64,
    horizon: Option<Time>,
}

impl DilationContext {
    /// Builds the cocycle of `psi` and wraps everything up.
    pub fn new(psi: CndFunction, tolerance: f64, horizon: Option<Time>) -> Result<Arc<Self>> {
        let cocycle = psi.build_cocycle(DEFAULT_RANK_TOL)?;
        Self::from_parts(psi, cocycle, tolerance, horizon)
    }

    /// Accepts an externally built cocycle after spot-checking it against ψ.
    pub fn from_parts(
        psi: CndFunction,
        cocycle: Cocycle,
        tolerance: f64,
        horizon: Option<Time>,
    ) -> Result<Arc<Self>> {
        if cocycle.order() != psi.group().order() {
            return Err(Error::Construction(format!(
                "cocycle is defined on {} elements, group has {}",
                cocycle.order(),
                psi.group().order()
            )));
        }
        let scale = psi.values().iter().fold(1.0f64, |m, v| m.max(v.abs()));
        let gram = cocycle.gram_residual(&psi);
        if gram > GRAM_TOL * scale {
            return Err(Error::Construction(format!(
                "cocycle Gram matrix deviates from the Gromov kernel by {gram:e}"
            )));
        }
        Self::from_parts_unchecked(psi, cocycle, tolerance, horizon)
    }

    /// No consistency check between ψ and the cocycle. Used by negative
    /// controls.
    #[doc(hidden)]
    pub fn from_parts_unchecked(
        psi: CndFunction,
        cocycle: Cocycle,
        tolerance: f64,
        horizon: Option<Time>,
    ) -> Result<Arc<Self>> {
        if tolerance.is_nan() || tolerance <= 0.0 {
            return Err(Error::InvalidArgument(format!(
                "tolerance must be positive, got {tolerance}"
            )));
        }
        if let Some(h) = horizon {
            if h <= Time::zero() {
                return Err(Error::InvalidArgument(format!(
                    "horizon must be positive, got {h}"
                )));
            }
        }
        Ok(Arc::new(Self {
            group: Arc::clone(psi.group()),
            psi,
            cocycle,
            tolerance,
            horizon,
        }))
    }

    /// Same context with entry `(i, j)` of `π_s` shifted by `delta`.
    #[doc(hidden)]
    pub fn with_perturbed_pi(&self, s: usize, i: usize, j: usize, delta: f64) -> Result<Arc<Self>> {
        let mut cocycle = self.cocycle.clone();
        cocycle.perturb_pi(s, i, j, delta)?;
        Self::from_parts_unchecked(self.psi.clone(), cocycle, self.tolerance, self.horizon)
    }

    /// Same context with `ψ(s)` shifted by `delta` and the cocycle left alone.
    #[doc(hidden)]
    pub fn with_perturbed_psi(&self, s: usize, delta: f64) -> Result<Arc<Self>> {
        if s >= self.group.order() {
            return Err(Error::InvalidArgument(format!("element {s} out of range")));
        }
        let mut values = self.psi.values().to_vec();
        values[s] += delta;
        let psi = CndFunction::new_unchecked(&self.group, values);
        Self::from_parts_unchecked(psi, self.cocycle.clone(), self.tolerance, self.horizon)
    }

    pub fn group(&self) -> &Arc<FiniteGroup> {
        &self.group
    }

    pub fn psi(&self) -> &CndFunction {
        &self.psi
    }

    pub fn cocycle(&self) -> &Cocycle {
        &self.cocycle
    }

    pub fn dim(&self) -> usize {
        self.cocycle.dim()
    }

    pub fn tolerance(&self) -> f64 {
        self.tolerance
    }

    pub fn horizon(&self) -> Option<Time> {
        self.horizon
    }

    /// `α_s(x) = Γ(Id ⊗ π_s)(x)`.
    pub fn alpha(&self, s: usize, x: &WeylPolynomial) -> WeylPolynomial {
        if s == self.group.identity() {
            return x.clone();
        }
        x.map_exponents(self.cocycle.pi(s))
    }

    /// `e^{√2 i W(1_{(a,b]} ⊗ b(s))}`.
    pub fn cocycle_weyl(&self, s: usize, a: Time, b: Time) -> Result<WeylPolynomial> {
        let v: Vec<f64> = self
            .cocycle
            .b(s)
            .iter()
            .map(|x| std::f64::consts::SQRT_2 * x)
            .collect();
        Ok(WeylPolynomial::exp_i(StepVector::indicator(a, b, &v)?))
    }

    /// `T_t(λ_s) = e^{−tψ(s)} λ_s`.
    pub fn semigroup(&self, t: f64, a: &GroupAlgebraElement) -> Result<GroupAlgebraElement> {
        if t.is_nan() || t < 0.0 {
            return Err(Error::InvalidArgument(format!(
                "semigroup time must be nonnegative, got {t}"
            )));
        }
        Ok(a.multiplier(|s| Complex64::new((-t * self.psi.value(s)).exp(), 0.0)))
    }

    fn check_group(&self, a: &GroupAlgebraElement) -> Result<()> {
        if Arc::ptr_eq(a.group(), &self.group) || **a.group() == *self.group {
            Ok(())
        } else {
            Err(Error::GroupMismatch)
        }
    }

    /// `J(Σ c_s λ_s) = Σ c_s 1 ⋊ λ_s`.
    pub fn embed(self: &Arc<Self>, a: &GroupAlgebraElement) -> Result<CrossedElement> {
        self.check_group(a)?;
        let d = self.dim();
        Ok(CrossedElement::from_fibers(
            self,
            a.iter().map(|(s, c)| (s, WeylPolynomial::one(d).scale(c))),
        ))
    }

    /// `π_t = U_t J`.
    pub fn pi_t(self: &Arc<Self>, t: Time, a: &GroupAlgebraElement) -> Result<CrossedElement> {
        self.embed(a)?.takesaki_u(t)
    }

    /// Reversed dilation embedding: fiber `s` of `J(a)` is multiplied by
    /// `e^{√2 i W(1_{(t,C]} ⊗ b(s))}` for the horizon `C`.
    pub fn pi_t_reversed(
        self: &Arc<Self>,
        t: Time,
        a: &GroupAlgebraElement,
    ) -> Result<CrossedElement> {
        let horizon = self.horizon.ok_or(Error::MissingHorizon)?;
        if t < Time::zero() {
            return Err(Error::NegativeTime(t));
        }
        if t > horizon {
            return Err(Error::BeyondHorizon { time: t, horizon });
        }
        self.embed(a)?.multiply_by_cocycle(t, horizon)
    }
}

/// `Σ_s f_s ⋊ λ_s`, keyed by group element. Absent keys are zero fibers.
#[derive(Clone, Debug)]
pub struct CrossedElement {
    ctx: Arc<DilationContext>,
    comps: BTreeMap<usize, WeylPolynomial>,
}

impl CrossedElement {
    pub fn zero(ctx: &Arc<DilationContext>) -> Self {
        Self {
            ctx: Arc::clone(ctx),
            comps: BTreeMap::new(),
        }
    }

    /// `1 ⋊ λ_e`.
    pub fn unit(ctx: &Arc<DilationContext>) -> Self {
        Self::from_fibers(
            ctx,
            [(ctx.group.identity(), WeylPolynomial::one(ctx.dim()))],
        )
    }

    /// Fibers with the same key accumulate.
    pub fn from_fibers<I>(ctx: &Arc<DilationContext>, fibers: I) -> Self
    where
        I: IntoIterator<Item = (usize, WeylPolynomial)>,
    {
        let mut out = Self::zero(ctx);
        for (s, f) in fibers {
            assert!(s < ctx.group.order(), "element {s} out of range");
            assert_eq!(f.dim(), ctx.dim(), "fiber dimension");
            out.accumulate(s, f);
        }
        out
    }

    fn accumulate(&mut self, s: usize, f: WeylPolynomial) {
        if f.is_empty() {
            return;
        }
        match self.comps.remove(&s) {
            Some(g) => {
                let sum = g.add(&f).expect("fibers share a dimension");
                if !sum.is_empty() {
                    self.comps.insert(s, sum);
                }
            }
            None => {
                self.comps.insert(s, f);
            }
        }
    }

    pub fn context(&self) -> &Arc<DilationContext> {
        &self.ctx
    }

    pub fn fiber(&self, s: usize) -> WeylPolynomial {
        self.comps
            .get(&s)
            .cloned()
            .unwrap_or_else(|| WeylPolynomial::zero(self.ctx.dim()))
    }

    pub fn fibers(&self) -> impl Iterator<Item = (usize, &WeylPolynomial)> {
        self.comps.iter().map(|(&s, f)| (s, f))
    }

    pub fn is_zero(&self) -> bool {
        self.comps.is_empty()
    }

    fn check_ctx(&self, other: &Self) -> Result<()> {
        if Arc::ptr_eq(&self.ctx, &other.ctx) {
            Ok(())
        } else {
            Err(Error::ContextMismatch)
        }
    }

    fn map_fibers<F>(&self, mut f: F) -> Result<Self>
    where
        F: FnMut(usize, &WeylPolynomial) -> Result<WeylPolynomial>,
    {
        let mut out = Self::zero(&self.ctx);
        for (&s, x) in &self.comps {
            out.accumulate(s, f(s, x)?);
        }
        Ok(out)
    }

    pub fn add(&self, other: &Self) -> Result<Self> {
        self.check_ctx(other)?;
        let mut out = self.clone();
        for (&s, f) in &other.comps {
            out.accumulate(s, f.clone());
        }
        Ok(out)
    }

    pub fn sub(&self, other: &Self) -> Result<Self> {
        self.add(&other.scale(Complex64::new(-1.0, 0.0)))
    }

    pub fn scale(&self, c: Complex64) -> Self {
        self.map_fibers(|_, f| Ok(f.scale(c)))
            .expect("scaling cannot fail")
    }

    /// `(f ⋊ λ_s)(g ⋊ λ_r) = f α_s(g) ⋊ λ_{sr}`.
    pub fn mul(&self, other: &Self) -> Result<Self> {
        self.check_ctx(other)?;
        let g = &self.ctx.group;
        let mut out = Self::zero(&self.ctx);
        for (&s, f) in &self.comps {
            for (&r, h) in &other.comps {
                out.accumulate(g.mul(s, r), f.mul(&self.ctx.alpha(s, h))?);
            }
        }
        Ok(out)
    }

    /// `(f ⋊ λ_s)* = α_{s⁻¹}(f*) ⋊ λ_{s⁻¹}`.
    pub fn adjoint(&self) -> Self {
        let g = &self.ctx.group;
        let mut out = Self::zero(&self.ctx);
        for (&s, f) in &self.comps {
            let si = g.inv(s);
            out.accumulate(si, self.ctx.alpha(si, &f.adjoint()));
        }
        out
    }

    /// Canonical trace `𝔼(f_e)`.
    pub fn trace(&self) -> Complex64 {
        self.comps
            .get(&self.ctx.group.identity())
            .map(WeylPolynomial::expectation)
            .unwrap_or_default()
    }

    /// `Σ_s 𝔼(f_s* g_s)`: the Plancherel pairing of `self` and `other`,
    /// computed fiberwise without forming the product.
    pub fn plancherel(&self, other: &Self) -> Result<Complex64> {
        self.check_ctx(other)?;
        let mut acc = Complex64::zero();
        for (s, f) in &self.comps {
            if let Some(g) = other.comps.get(s) {
                acc += f.adjoint().mul(g)?.expectation();
            }
        }
        Ok(acc)
    }

    /// `E_t = E_{𝓕_t} ⋊ Id`, fiberwise.
    pub fn conditional_expectation(&self, t: Time) -> Result<Self> {
        self.map_fibers(|_, f| f.conditional_expectation(t))
    }

    /// Fiberwise conditional expectation onto the future from `u` on
    /// (the decreasing filtration of the reversed dilation).
    pub fn conditional_expectation_after(&self, u: Time) -> Result<Self> {
        self.map_fibers(|_, f| f.conditional_expectation_after(u))
    }

    /// `U_t(Σ f_s ⋊ λ_s) = Σ e^{√2 i W_t(b(s))} f_s ⋊ λ_s`.
    pub fn takesaki_u(&self, t: Time) -> Result<Self> {
        if t < Time::zero() {
            return Err(Error::NegativeTime(t));
        }
        self.multiply_by_cocycle(Time::zero(), t)
    }

    /// Multiplies fiber `s` by `e^{√2 i W(1_{(a,b]} ⊗ b(s))}`.
    pub fn multiply_by_cocycle(&self, a: Time, b: Time) -> Result<Self> {
        self.map_fibers(|s, f| f.mul(&self.ctx.cocycle_weyl(s, a, b)?))
    }

    /// Largest fiberwise L² distance.
    pub fn distance(&self, other: &Self) -> Result<f64> {
        self.check_ctx(other)?;
        let diff = self.sub(other)?;
        Ok(diff
            .comps
            .values()
            .map(WeylPolynomial::l2_norm)
            .fold(0.0, f64::max))
    }

    /// Every fiber is measurable with respect to the past up to `t`.
    pub fn is_measurable_before(&self, t: Time) -> bool {
        self.comps.values().all(|f| f.is_measurable_before(t))
    }
}

impl fmt::Display for CrossedElement {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.comps.is_empty() {
            return write!(f, "0");
        }
        for (i, (s, x)) in self.comps.iter().enumerate() {
            if i > 0 {
                writeln!(f)?;
            }
            write!(f, "[λ_{s}] {x}")?;
        }
        Ok(())
    }
}

impl Serialize for CrossedElement {
    fn serialize<S: serde::Serializer>(
        &self,
        serializer: S,
    ) -> std::result::Result<S::Ok, S::Error> {
        let fibers: BTreeMap<String, &WeylPolynomial> =
            self.comps.iter().map(|(s, f)| (s.to_string(), f)).collect();
        fibers.serialize(serializer)
    }
}
