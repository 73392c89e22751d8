//! Step functions `ℝ⁺ → ℝ^d` with exact rational breakpoints.
//!
//! A [`StepVector`] is a finite sum of terms `1_{(a,b]} ⊗ v`. These are the
//! arguments `h` of the isonormal process `W(h)`; `W_t(v)` is
//! `W(1_{[0,t]} ⊗ v)`. Endpoints are measure zero so open versus closed
//! interval ends never matter.

use std::fmt;

use nalgebra::DMatrix;
use num_rational::Rational64;
use num_traits::{ToPrimitive, Zero};

use crate::error::{Error, Result};

pub type Time = Rational64;

/// Piecewise-constant vector function. Piece `k` is the value on
/// `(t_{k−1}, t_k]` with `t_0 = 0`; the function vanishes after the last
/// breakpoint.
#[derive(Clone, Debug, PartialEq)]
pub struct StepVector {
    dim: usize,
    ends: Vec<Time>,
    pieces: Vec<Vec<f64>>,
}

pub(crate) fn time_to_f64(t: Time) -> f64 {
    t.to_f64().expect("rational times are finite")
}

fn check_time(t: Time) -> Result<()> {
    if t < Time::zero() {
        Err(Error::NegativeTime(t))
    } else {
        Ok(())
    }
}

impl StepVector {
    pub fn zero(dim: usize) -> Self {
        Self {
            dim,
            ends: Vec::new(),
            pieces: Vec::new(),
        }
    }

    /// `1_{(a,b]} ⊗ v`.
    pub fn indicator(a: Time, b: Time, v: &[f64]) -> Result<Self> {
        check_time(a)?;
        check_time(b)?;
        if a > b {
            return Err(Error::InvalidTimes(a, b));
        }
        let dim = v.len();
        let mut ends = Vec::with_capacity(2);
        let mut pieces = Vec::with_capacity(2);
        if a > Time::zero() {
            ends.push(a);
            pieces.push(vec![0.0; dim]);
        }
        ends.push(b);
        pieces.push(v.to_vec());
        let mut out = Self { dim, ends, pieces };
        if a == b {
            out = Self::zero(dim);
        }
        out.canonicalize();
        Ok(out)
    }

    /// Builds from explicit breakpoints `t_1 < … < t_m` (the implicit
    /// `t_0 = 0` is not listed) and one vector per interval.
    pub fn from_pieces(dim: usize, ends: Vec<Time>, pieces: Vec<Vec<f64>>) -> Result<Self> {
        if ends.len() != pieces.len() {
            return Err(Error::InvalidArgument(format!(
                "{} breakpoints but {} pieces",
                ends.len(),
                pieces.len()
            )));
        }
        let mut prev = Time::zero();
        for &t in &ends {
            if t <= prev {
                return Err(Error::InvalidArgument(
                    "breakpoints must be strictly increasing and positive".into(),
                ));
            }
            prev = t;
        }
        if let Some(p) = pieces.iter().find(|p| p.len() != dim) {
            return Err(Error::DimMismatch {
                left: dim,
                right: p.len(),
            });
        }
        let mut out = Self { dim, ends, pieces };
        out.canonicalize();
        Ok(out)
    }

    fn canonicalize(&mut self) {
        let mut ends: Vec<Time> = Vec::with_capacity(self.ends.len());
        let mut pieces: Vec<Vec<f64>> = Vec::with_capacity(self.pieces.len());
        for (t, v) in self.ends.drain(..).zip(self.pieces.drain(..)) {
            match pieces.last() {
                Some(last) if *last == v => *ends.last_mut().unwrap() = t,
                _ => {
                    ends.push(t);
                    pieces.push(v);
                }
            }
        }
        while pieces.last().is_some_and(|v| v.iter().all(|&x| x == 0.0)) {
            pieces.pop();
            ends.pop();
        }
        self.ends = ends;
        self.pieces = pieces;
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn is_zero(&self) -> bool {
        self.pieces.is_empty()
    }

    /// Breakpoints `t_1 < … < t_m` (without the leading 0).
    pub fn ends(&self) -> &[Time] {
        &self.ends
    }

    pub fn pieces(&self) -> &[Vec<f64>] {
        &self.pieces
    }

    /// Right end of the support, 0 for the zero function.
    pub fn support_end(&self) -> Time {
        self.ends.last().copied().unwrap_or_else(Time::zero)
    }

    /// First time at which the function is nonzero; the support lies in
    /// `[support_start, support_end]`.
    pub fn support_start(&self) -> Time {
        let mut start = Time::zero();
        for (t, v) in self.ends.iter().zip(&self.pieces) {
            if v.iter().any(|&x| x != 0.0) {
                return start;
            }
            start = *t;
        }
        start
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

    /// Value on the interval ending at `t_k`, zero past the support.
    fn value_on(&self, idx: usize) -> Option<&[f64]> {
        self.pieces.get(idx).map(Vec::as_slice)
    }

    /// Merges both breakpoint lists and calls `f(len, left, right)` on every
    /// interval of the common refinement (`None` means the zero vector).
    fn for_each_common<F>(&self, other: &Self, mut f: F)
    where
        F: FnMut(Time, Time, Option<&[f64]>, Option<&[f64]>),
    {
        let (mut i, mut j) = (0, 0);
        let mut prev = Time::zero();
        while i < self.ends.len() || j < other.ends.len() {
            let next = match (self.ends.get(i), other.ends.get(j)) {
                (Some(&a), Some(&b)) => a.min(b),
                (Some(&a), None) => a,
                (None, Some(&b)) => b,
                (None, None) => unreachable!(),
            };
            f(prev, next, self.value_on(i), other.value_on(j));
            if self.ends.get(i) == Some(&next) {
                i += 1;
            }
            if other.ends.get(j) == Some(&next) {
                j += 1;
            }
            prev = next;
        }
    }

    fn combine<F: Fn(f64, f64) -> f64>(&self, other: &Self, op: F) -> Result<Self> {
        self.check_dim(other)?;
        let dim = self.dim;
        let mut ends = Vec::new();
        let mut pieces = Vec::new();
        self.for_each_common(other, |_, end, a, b| {
            let v = (0..dim)
                .map(|k| op(a.map_or(0.0, |a| a[k]), b.map_or(0.0, |b| b[k])))
                .collect();
            ends.push(end);
            pieces.push(v);
        });
        let mut out = Self { dim, ends, pieces };
        out.canonicalize();
        Ok(out)
    }

    pub fn add(&self, other: &Self) -> Result<Self> {
        self.combine(other, |a, b| a + b)
    }

    pub fn sub(&self, other: &Self) -> Result<Self> {
        self.combine(other, |a, b| a - b)
    }

    pub fn neg(&self) -> Self {
        self.scale(-1.0)
    }

    pub fn scale(&self, c: f64) -> Self {
        let mut out = Self {
            dim: self.dim,
            ends: self.ends.clone(),
            pieces: self
                .pieces
                .iter()
                .map(|v| v.iter().map(|x| c * x).collect())
                .collect(),
        };
        out.canonicalize();
        out
    }

    /// `⟨h₁, h₂⟩ = Σ (interval length) · ⟨v₁, v₂⟩`.
    pub fn inner(&self, other: &Self) -> Result<f64> {
        self.check_dim(other)?;
        let mut acc = 0.0;
        self.for_each_common(other, |start, end, a, b| {
            if let (Some(a), Some(b)) = (a, b) {
                let dot: f64 = a.iter().zip(b).map(|(x, y)| x * y).sum();
                acc += time_to_f64(end - start) * dot;
            }
        });
        Ok(acc)
    }

    pub fn norm_sq(&self) -> f64 {
        let mut acc = 0.0;
        let mut prev = Time::zero();
        for (t, v) in self.ends.iter().zip(&self.pieces) {
            acc += time_to_f64(*t - prev) * v.iter().map(|x| x * x).sum::<f64>();
            prev = *t;
        }
        acc
    }

    /// Splits at `u` into `(h·1_{[0,u]}, h·1_{(u,∞)})`. Exact: `u` is inserted
    /// as a breakpoint when needed.
    pub fn split_at(&self, u: Time) -> Result<(Self, Self)> {
        check_time(u)?;
        let mut before = Self::zero(self.dim);
        let mut after = Self::zero(self.dim);
        let mut prev = Time::zero();
        for (&t, v) in self.ends.iter().zip(&self.pieces) {
            if t <= u {
                before.ends.push(t);
                before.pieces.push(v.clone());
            } else {
                if prev < u {
                    before.ends.push(u);
                    before.pieces.push(v.clone());
                    after.ends.push(u);
                    after.pieces.push(vec![0.0; self.dim]);
                } else if after.ends.is_empty() && prev > Time::zero() {
                    after.ends.push(prev);
                    after.pieces.push(vec![0.0; self.dim]);
                }
                after.ends.push(t);
                after.pieces.push(v.clone());
            }
            prev = t;
        }
        before.canonicalize();
        after.canonicalize();
        Ok((before, after))
    }

    /// Applies a `d×d` matrix to every piece.
    pub fn map_matrix(&self, m: &DMatrix<f64>) -> Self {
        let mut out = Self {
            dim: m.nrows(),
            ends: self.ends.clone(),
            pieces: self
                .pieces
                .iter()
                .map(|v| {
                    (0..m.nrows())
                        .map(|i| (0..m.ncols()).map(|j| m[(i, j)] * v[j]).sum())
                        .collect()
                })
                .collect(),
        };
        out.canonicalize();
        out
    }

    /// Structural equality: on the common refinement every component agrees
    /// within `tol`.
    pub fn approx_eq(&self, other: &Self, tol: f64) -> bool {
        if self.dim != other.dim {
            return false;
        }
        let mut ok = true;
        self.for_each_common(other, |_, _, a, b| {
            if !ok {
                return;
            }
            ok = (0..self.dim)
                .all(|k| (a.map_or(0.0, |a| a[k]) - b.map_or(0.0, |b| b[k])).abs() <= tol);
        });
        ok
    }

    /// Pieces resampled on `grid` (strictly increasing, positive, and
    /// containing every breakpoint of `self`). Entry `k` is the value on
    /// `(grid[k−1], grid[k]]`.
    pub fn on_grid(&self, grid: &[Time]) -> Result<Vec<Vec<f64>>> {
        let mut out = Vec::with_capacity(grid.len());
        let mut idx = 0;
        for &g in grid {
            let v = self
                .pieces
                .get(idx)
                .cloned()
                .unwrap_or_else(|| vec![0.0; self.dim]);
            out.push(v);
            if self.ends.get(idx) == Some(&g) {
                idx += 1;
            } else if let Some(&end) = self.ends.get(idx) {
                if end < g {
                    return Err(Error::GridMismatch(end));
                }
            }
        }
        if let Some(&end) = self.ends.get(idx) {
            return Err(Error::GridMismatch(end));
        }
        Ok(out)
    }
}

impl fmt::Display for StepVector {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.is_zero() {
            return write!(f, "0");
        }
        let mut prev = Time::zero();
        let mut first = true;
        for (t, v) in self.ends.iter().zip(&self.pieces) {
            if v.iter().any(|&x| x != 0.0) {
                if !first {
                    write!(f, " + ")?;
                }
                first = false;
                write!(f, "1_({prev},{t}]⊗[")?;
                for (k, x) in v.iter().enumerate() {
                    if k > 0 {
                        write!(f, ", ")?;
                    }
                    write!(f, "{x:.6}")?;
                }
                write!(f, "]")?;
            }
            prev = *t;
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn r(n: i64, d: i64) -> Time {
        Time::new(n, d)
    }

    #[test]
    fn increment_inner_product() {
        let v = [1.5, -2.0];
        let (u, t) = (r(1, 4), r(3, 2));
        let h = StepVector::indicator(u, t, &v).unwrap();
        let expected = (1.5 - 0.25) * (1.5f64 * 1.5 + 4.0);
        assert!((h.inner(&h).unwrap() - expected).abs() < 1e-14);
        assert_eq!(h.inner(&StepVector::zero(2)).unwrap(), 0.0);
    }

    #[test]
    fn orthogonal_directions() {
        let a = StepVector::indicator(r(0, 1), r(1, 1), &[1.0, 0.0]).unwrap();
        let b = StepVector::indicator(r(0, 1), r(2, 1), &[0.0, 1.0]).unwrap();
        assert_eq!(a.inner(&b).unwrap(), 0.0);
        assert!(a.inner(&StepVector::zero(3)).is_err());
    }

    #[test]
    fn canonical_form_merges_and_trims() {
        let h = StepVector::from_pieces(
            1,
            vec![r(1, 2), r(1, 1), r(2, 1), r(3, 1)],
            vec![vec![1.0], vec![1.0], vec![0.0], vec![0.0]],
        )
        .unwrap();
        assert_eq!(h.ends(), &[r(1, 1)]);
        let z = h.sub(&h).unwrap();
        assert!(z.is_zero());
        assert!(StepVector::indicator(r(1, 1), r(1, 1), &[2.0])
            .unwrap()
            .is_zero());
    }

    #[test]
    fn split_is_exact() {
        let h = StepVector::indicator(r(0, 1), r(1, 1), &[2.0]).unwrap();
        let (a, b) = h.split_at(r(1, 3)).unwrap();
        assert_eq!(a, StepVector::indicator(r(0, 1), r(1, 3), &[2.0]).unwrap());
        assert_eq!(b, StepVector::indicator(r(1, 3), r(1, 1), &[2.0]).unwrap());
        assert_eq!(a.add(&b).unwrap(), h);

        let (a, b) = h.split_at(r(5, 1)).unwrap();
        assert_eq!(a, h);
        assert!(b.is_zero());

        let (a, b) = h.split_at(r(0, 1)).unwrap();
        assert!(a.is_zero());
        assert_eq!(b, h);
        assert!(h.split_at(r(-1, 2)).is_err());
    }

    #[test]
    fn split_keeps_leading_gap() {
        let h = StepVector::indicator(r(1, 2), r(2, 1), &[1.0]).unwrap();
        let (a, b) = h.split_at(r(1, 1)).unwrap();
        assert_eq!(a, StepVector::indicator(r(1, 2), r(1, 1), &[1.0]).unwrap());
        assert_eq!(b, StepVector::indicator(r(1, 1), r(2, 1), &[1.0]).unwrap());
        let (a, b) = h.split_at(r(1, 4)).unwrap();
        assert!(a.is_zero());
        assert_eq!(b, h);
    }

    #[test]
    fn support_bounds() {
        let h = StepVector::indicator(r(1, 2), r(2, 1), &[1.0]).unwrap();
        assert_eq!(h.support_start(), r(1, 2));
        assert_eq!(h.support_end(), r(2, 1));
    }

    #[test]
    fn grid_resampling() {
        let h = StepVector::indicator(r(1, 2), r(1, 1), &[3.0]).unwrap();
        let grid = [r(1, 4), r(1, 2), r(3, 4), r(1, 1), r(2, 1)];
        let vals = h.on_grid(&grid).unwrap();
        assert_eq!(
            vals,
            vec![vec![0.0], vec![0.0], vec![3.0], vec![3.0], vec![0.0]]
        );
        assert!(h.on_grid(&[r(1, 4), r(1, 1)]).is_err());
        assert!(h.on_grid(&[r(1, 2)]).is_err());
    }

    #[test]
    fn approx_eq_uses_refinement() {
        let a = StepVector::from_pieces(
            1,
            vec![r(1, 2), r(1, 1)],
            vec![vec![1.0], vec![1.0 + 1e-15]],
        )
        .unwrap();
        let b = StepVector::indicator(r(0, 1), r(1, 1), &[1.0]).unwrap();
        assert_ne!(a, b);
        assert!(a.approx_eq(&b, 1e-12));
        assert!(!a.approx_eq(&b.scale(2.0), 1e-12));
    }
}
