//! Conditionally negative definite functions and their 1-cocycles.
//!
//! A real function ψ on a finite group with ψ(e) = 0 and ψ(s⁻¹) = ψ(s) is
//! conditionally negative definite exactly when the Gromov kernel
//! `K(s, r) = ½(ψ(s) + ψ(r) − ψ(s⁻¹r))` is positive semidefinite. Factoring
//! `K = B Bᵀ` gives vectors `b(s)` (rows of `B`) with `‖b(s)‖² = ψ(s)`, and
//! the orthogonal representation is forced by the cocycle law
//! `b(sr) = b(s) + π_s b(r)`.

use std::sync::Arc;

use nalgebra::{DMatrix, DVector, SymmetricEigen};
use serde::Serialize;

use crate::error::{Error, Result};
use crate::group::{FiniteGroup, GroupKind};

/// Default relative cutoff separating numerical zeros of the Gromov kernel
/// from genuine directions.
pub const DEFAULT_RANK_TOL: f64 = 1e-10;

/// Default absolute tolerance for the cnd test.
pub const DEFAULT_CND_TOL: f64 = 1e-9;

/// Times at which the Schoenberg certificate is evaluated by default.
pub const SCHOENBERG_TIMES: [f64; 5] = [0.1, 0.5, 1.0, 2.0, 5.0];

const ISOMETRY_TOL: f64 = 1e-6;

#[derive(Clone, Debug)]
pub struct CndFunction {
    group: Arc<FiniteGroup>,
    values: Vec<f64>,
}

/// Outcome of [`is_cnd`]. `min_eigenvalue` is the smallest eigenvalue of the
/// Gromov kernel (NaN when the structural checks fail before it is computed).
#[derive(Clone, Debug, Serialize)]
pub struct CndCertificate {
    pub is_cnd: bool,
    pub reason: Option<String>,
    pub min_eigenvalue: f64,
    pub eigenvalues: Vec<f64>,
}

/// Tests whether `values` is a conditionally negative definite function on `group`.
pub fn is_cnd(values: &[f64], group: &FiniteGroup, tol: f64) -> CndCertificate {
    let fail = |reason: String| CndCertificate {
        is_cnd: false,
        reason: Some(reason),
        min_eigenvalue: f64::NAN,
        eigenvalues: Vec::new(),
    };
    let n = group.order();
    if values.len() != n {
        return fail(format!(
            "psi has {} values, group has order {n}",
            values.len()
        ));
    }
    if let Some(s) = values.iter().position(|v| !v.is_finite()) {
        return fail(format!("psi({s}) is not finite"));
    }
    if values[group.identity()].abs() > tol {
        return fail("psi(identity) must be 0".into());
    }
    for s in group.elements() {
        let si = group.inv(s);
        if (values[s] - values[si]).abs() > tol {
            return fail(format!(
                "psi must be symmetric under inversion: psi({s}) = {} but psi({si}) = {}",
                values[s], values[si]
            ));
        }
    }
    let eig = SymmetricEigen::new(gromov_kernel(values, group));
    let mut eigenvalues: Vec<f64> = eig.eigenvalues.iter().copied().collect();
    eigenvalues.sort_by(f64::total_cmp);
    let min_eigenvalue = eigenvalues.first().copied().unwrap_or(0.0);
    let is_cnd = min_eigenvalue >= -tol;
    CndCertificate {
        is_cnd,
        reason: (!is_cnd)
            .then(|| format!("Gromov kernel has negative eigenvalue {min_eigenvalue:e}")),
        min_eigenvalue,
        eigenvalues,
    }
}

/// `K(s, r) = ½(ψ(s) + ψ(r) − ψ(s⁻¹r))`, symmetrized in `(s, r)` so it is
/// bitwise symmetric when ψ is symmetric only up to rounding.
pub fn gromov_kernel(values: &[f64], group: &FiniteGroup) -> DMatrix<f64> {
    let n = group.order();
    DMatrix::from_fn(n, n, |s, r| {
        0.5 * (values[s] + values[r])
            - 0.25 * (values[quotient(group, s, r)] + values[quotient(group, r, s)])
    })
}

fn quotient(group: &FiniteGroup, s: usize, r: usize) -> usize {
    group.mul(group.inv(s), r)
}

/// Smallest eigenvalue of the positive-definite-function matrix
/// `[e^{−tψ(s⁻¹r)}]`.
pub fn schoenberg_min_eigenvalue(values: &[f64], group: &FiniteGroup, t: f64) -> f64 {
    let n = group.order();
    let m = DMatrix::from_fn(n, n, |s, r| {
        0.5 * ((-t * values[quotient(group, s, r)]).exp()
            + (-t * values[quotient(group, r, s)]).exp())
    });
    SymmetricEigen::new(m)
        .eigenvalues
        .iter()
        .copied()
        .fold(f64::INFINITY, f64::min)
}

impl CndFunction {
    /// Wraps a table of values after certifying it with [`is_cnd`].
    pub fn new(group: &Arc<FiniteGroup>, values: Vec<f64>, tol: f64) -> Result<Self> {
        let cert = is_cnd(&values, group, tol);
        if !cert.is_cnd {
            return Err(Error::InvalidPsi(cert.reason.unwrap_or_default()));
        }
        Ok(Self {
            group: Arc::clone(group),
            values,
        })
    }

    /// ψ = c(1 − δ_e).
    pub fn delta(group: &Arc<FiniteGroup>, scale: f64) -> Result<Self> {
        if !(scale > 0.0 && scale.is_finite()) {
            return Err(Error::InvalidPsi(format!(
                "delta scale must be positive, got {scale}"
            )));
        }
        let e = group.identity();
        let values = group
            .elements()
            .map(|s| if s == e { 0.0 } else { scale })
            .collect();
        Self::new(group, values, DEFAULT_CND_TOL)
    }

    /// Hamming weight on `ℤ_2^k`.
    pub fn hamming(group: &Arc<FiniteGroup>) -> Result<Self> {
        if !matches!(group.kind(), GroupKind::Hypercube(_)) {
            return Err(Error::InvalidPsi(format!(
                "hamming psi needs a hypercube group, got {}",
                group.name()
            )));
        }
        let values = group.elements().map(|s| s.count_ones() as f64).collect();
        Self::new(group, values, DEFAULT_CND_TOL)
    }

    /// ψ ≡ 0.
    pub fn zero(group: &Arc<FiniteGroup>) -> Self {
        Self {
            group: Arc::clone(group),
            values: vec![0.0; group.order()],
        }
    }

    /// Skips certification. Only meant for negative controls that need a
    /// deliberately inconsistent ψ.
    #[doc(hidden)]
    pub fn new_unchecked(group: &Arc<FiniteGroup>, values: Vec<f64>) -> Self {
        Self {
            group: Arc::clone(group),
            values,
        }
    }

    pub fn group(&self) -> &Arc<FiniteGroup> {
        &self.group
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    #[inline]
    pub fn value(&self, s: usize) -> f64 {
        self.values[s]
    }

    pub fn gromov_kernel(&self) -> DMatrix<f64> {
        gromov_kernel(&self.values, &self.group)
    }

    pub fn certificate(&self, tol: f64) -> CndCertificate {
        is_cnd(&self.values, &self.group, tol)
    }

    pub fn schoenberg_min_eigenvalue(&self, t: f64) -> f64 {
        schoenberg_min_eigenvalue(&self.values, &self.group, t)
    }

    /// `Σ_{i,j} conj(c_i) c_j ψ(s_i⁻¹ s_j)` for a coefficient vector indexed by
    /// group elements.
    pub fn quadratic_form(&self, c: &[num_complex::Complex64]) -> num_complex::Complex64 {
        let g = &self.group;
        let mut acc = num_complex::Complex64::new(0.0, 0.0);
        for (i, ci) in c.iter().enumerate() {
            for (j, cj) in c.iter().enumerate() {
                acc += ci.conj() * cj * self.values[g.mul(g.inv(i), j)];
            }
        }
        acc
    }

    pub fn build_cocycle(&self, rank_tol: f64) -> Result<Cocycle> {
        Cocycle::build(self, rank_tol)
    }
}

/// The triple `(ℝ^d, π, b)` attached to ψ.
#[derive(Clone, Debug)]
pub struct Cocycle {
    dim: usize,
    /// Row `s` is `b(s)`.
    b: DMatrix<f64>,
    pi: Vec<DMatrix<f64>>,
}

impl Cocycle {
    pub fn build(psi: &CndFunction, rank_tol: f64) -> Result<Self> {
        let group = psi.group();
        let n = group.order();
        let e = group.identity();
        let kernel = psi.gromov_kernel();
        let eig = SymmetricEigen::new(kernel.clone());
        let lambda_max = eig.eigenvalues.iter().copied().fold(0.0, f64::max);
        let eig_residual = max_abs(
            &(&kernel * &eig.eigenvectors
                - &eig.eigenvectors * DMatrix::from_diagonal(&eig.eigenvalues)),
        );
        if eig_residual.is_nan() || eig_residual > ISOMETRY_TOL * lambda_max.max(1.0) {
            return Err(Error::Construction(format!(
                "eigendecomposition of the Gromov kernel is inaccurate (residual {eig_residual:e})"
            )));
        }

        let mut kept: Vec<usize> = (0..n)
            .filter(|&k| lambda_max > 0.0 && eig.eigenvalues[k] > rank_tol * lambda_max)
            .collect();
        kept.sort_by(|&a, &b| eig.eigenvalues[b].total_cmp(&eig.eigenvalues[a]));
        let dim = kept.len();

        let mut b = DMatrix::<f64>::zeros(n, dim);
        for (col, &k) in kept.iter().enumerate() {
            let scale = eig.eigenvalues[k].sqrt();
            for s in 0..n {
                b[(s, col)] = eig.eigenvectors[(s, k)] * scale;
            }
        }
        b.row_mut(e).fill(0.0);

        if dim == 0 {
            return Ok(Self {
                dim,
                b,
                pi: vec![DMatrix::zeros(0, 0); n],
            });
        }

        // The rows of b span ℝ^d, so π_s is pinned down by
        // B π_sᵀ = B'_s with B'_s(r) = b(sr) − b(s).
        let gram = b.transpose() * &b;
        let chol = gram.clone().cholesky().ok_or_else(|| {
            Error::Construction("cocycle Gram matrix is not positive definite".into())
        })?;
        let scale = lambda_max.sqrt().max(1.0);
        let mut pi = Vec::with_capacity(n);
        for s in 0..n {
            if s == e {
                pi.push(DMatrix::identity(dim, dim));
                continue;
            }
            let shifted = DMatrix::from_fn(n, dim, |r, k| b[(group.mul(s, r), k)] - b[(s, k)]);
            let pi_t = chol.solve(&(b.transpose() * &shifted));
            let raw = pi_t.transpose();

            let iso = max_abs(&(raw.transpose() * &raw - DMatrix::identity(dim, dim)));
            if iso > ISOMETRY_TOL {
                return Err(Error::Construction(format!(
                    "partial map b(r) -> b({s}r) - b({s}) is not isometric \
                     (residual {iso:e}); psi may not be cnd or rank_tol is too loose"
                )));
            }
            let fit = max_abs(&(&b * raw.transpose() - &shifted)) / scale;
            if fit > ISOMETRY_TOL {
                return Err(Error::Construction(format!(
                    "cocycle law cannot be met for s = {s} (residual {fit:e})"
                )));
            }
            pi.push(nearest_orthogonal(raw));
        }
        Ok(Self { dim, b, pi })
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn order(&self) -> usize {
        self.b.nrows()
    }

    /// `b(s)` as a plain vector.
    pub fn b(&self, s: usize) -> Vec<f64> {
        self.b.row(s).iter().copied().collect()
    }

    pub fn b_matrix(&self) -> &DMatrix<f64> {
        &self.b
    }

    pub fn pi(&self, s: usize) -> &DMatrix<f64> {
        &self.pi[s]
    }

    /// Adds `delta` to entry `(i, j)` of `π_s`. Negative-control hook: the
    /// result is no longer a cocycle.
    #[doc(hidden)]
    pub fn perturb_pi(&mut self, s: usize, i: usize, j: usize, delta: f64) -> Result<()> {
        if s >= self.pi.len() || i >= self.dim || j >= self.dim {
            return Err(Error::InvalidArgument(format!(
                "pi entry ({s}; {i}, {j}) does not exist (dim {})",
                self.dim
            )));
        }
        self.pi[s][(i, j)] += delta;
        Ok(())
    }

    /// `max_{s,r} ‖b(sr) − b(s) − π_s b(r)‖_∞`.
    pub fn cocycle_law_residual(&self, group: &FiniteGroup) -> f64 {
        let mut worst: f64 = 0.0;
        for s in group.elements() {
            let moved = &self.b * self.pi[s].transpose();
            for r in group.elements() {
                let sr = group.mul(s, r);
                for k in 0..self.dim {
                    let res = self.b[(sr, k)] - self.b[(s, k)] - moved[(r, k)];
                    worst = worst.max(res.abs());
                }
            }
        }
        worst
    }

    /// `max_s |‖b(s)‖² − ψ(s)|`.
    pub fn norm_residual(&self, psi: &CndFunction) -> f64 {
        (0..self.order())
            .map(|s| (self.b.row(s).norm_squared() - psi.value(s)).abs())
            .fold(0.0, f64::max)
    }

    /// `max_s ‖π_sᵀ π_s − I‖_max`.
    pub fn orthogonality_residual(&self) -> f64 {
        let id = DMatrix::<f64>::identity(self.dim, self.dim);
        self.pi
            .iter()
            .map(|p| max_abs(&(p.transpose() * p - &id)))
            .fold(0.0, f64::max)
    }

    /// `max_{s,r} ‖π_s π_r − π_{sr}‖_max`.
    pub fn homomorphism_residual(&self, group: &FiniteGroup) -> f64 {
        let mut worst: f64 = 0.0;
        for s in group.elements() {
            for r in group.elements() {
                let d = &self.pi[s] * &self.pi[r] - &self.pi[group.mul(s, r)];
                worst = worst.max(max_abs(&d));
            }
        }
        worst
    }

    /// `max_{s,r} |⟨b(s), b(r)⟩ − K(s, r)|`.
    pub fn gram_residual(&self, psi: &CndFunction) -> f64 {
        max_abs(&(&self.b * self.b.transpose() - psi.gromov_kernel()))
    }

    /// `π_s v`.
    pub fn apply_pi(&self, s: usize, v: &[f64]) -> Vec<f64> {
        let out = &self.pi[s] * DVector::from_column_slice(v);
        out.iter().copied().collect()
    }
}

fn max_abs(m: &DMatrix<f64>) -> f64 {
    m.iter().fold(0.0, |acc, x| acc.max(x.abs()))
}

/// Orthogonal polar factor `U Vᵀ` of `m = U Σ Vᵀ`.
fn nearest_orthogonal(m: DMatrix<f64>) -> DMatrix<f64> {
    let svd = m.svd(true, true);
    let u = svd.u.expect("requested U");
    let v_t = svd.v_t.expect("requested Vᵀ");
    u * v_t
}

/// Largest deviation of `m` from orthogonality, `‖mᵀm − I‖_max`.
pub fn orthogonality_defect(m: &DMatrix<f64>) -> f64 {
    if m.nrows() != m.ncols() {
        return f64::INFINITY;
    }
    max_abs(&(m.transpose() * m - DMatrix::identity(m.nrows(), m.ncols())))
}
