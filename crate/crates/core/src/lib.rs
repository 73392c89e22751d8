//! Markov dilations of Fourier-multiplier semigroups on finite groups.
//!
//! Given a finite group `G` and a conditionally negative definite function
//! `ψ`, the semigroup `T_t(λ_s) = e^{−tψ(s)} λ_s` on the group algebra is
//! dilated into the crossed product `L^∞(Ω) ⋊_α G` built from a Gaussian
//! process indexed by `L²(ℝ⁺, ℝ^d)`. Everything is represented symbolically so
//! the dilation identity `E_u π_t = π_u T_{t−u}` can be checked exactly, and
//! [`mc`] provides an independent Monte Carlo cross-check of the Gaussian
//! calculus.

pub mod cli;
pub mod cocycle;
pub mod crossed;
pub mod descriptor;
pub mod dilation;
pub mod error;
pub mod group;
pub mod mc;
pub mod random;
pub mod step;
pub mod weyl;

pub use cocycle::{CndCertificate, CndFunction, Cocycle};
pub use crossed::{CrossedElement, DilationContext};
pub use error::{Error, Result};
pub use group::{FiniteGroup, GroupAlgebraElement};
pub use step::{StepVector, Time};
pub use weyl::WeylPolynomial;
