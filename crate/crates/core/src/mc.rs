//! Monte Carlo realization of the isonormal process.
//!
//! On a finite grid `0 < g_1 < … < g_m` a step function `h` with pieces
//! `v_k` has `W(h) = Σ_k ⟨v_k, ΔW_k⟩` where the increments `ΔW_k` are
//! independent `N(0, (g_k − g_{k−1}) I_d)` vectors. Path `i` draws its
//! increments from its own ChaCha8 stream (stream id `i` under the run seed),
//! so results do not depend on how paths are split across threads. Normals
//! come from the Box–Muller transform, which consumes exactly two uniforms
//! per pair and never rejects. Paths are processed in fixed-size chunks whose
//! statistics are merged by a pairwise tree in chunk order, making every
//! estimate bit-for-bit reproducible from the seed.

use std::collections::BTreeSet;

use num_complex::Complex64;
use rand::{RngCore, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::step::{time_to_f64, StepVector, Time};
use crate::weyl::WeylPolynomial;

/// Paths per reduction chunk.
const CHUNK: usize = 2048;

/// Smallest sample count accepted by the cross-validation entry points.
pub const MIN_SAMPLES: usize = 1_000;

/// z-scores above this are flagged.
pub const Z_THRESHOLD: f64 = 5.0;

/// Sampling grid plus the seed and number of paths.
#[derive(Clone, Debug)]
pub struct PathSample {
    dim: usize,
    grid: Vec<Time>,
    sqrt_len: Vec<f64>,
    count: usize,
    seed: u64,
}

impl PathSample {
    /// `grid` is sorted and deduplicated; zero is dropped.
    pub fn new(dim: usize, grid: impl IntoIterator<Item = Time>, count: usize, seed: u64) -> Self {
        let set: BTreeSet<Time> = grid.into_iter().filter(|t| *t > Time::default()).collect();
        let grid: Vec<Time> = set.into_iter().collect();
        let mut prev = Time::default();
        let sqrt_len = grid
            .iter()
            .map(|&t| {
                let len = time_to_f64(t - prev).sqrt();
                prev = t;
                len
            })
            .collect();
        Self {
            dim,
            grid,
            sqrt_len,
            count,
            seed,
        }
    }

    /// Grid made of every breakpoint appearing in `polys`.
    pub fn covering<'a, I>(dim: usize, polys: I, count: usize, seed: u64) -> Self
    where
        I: IntoIterator<Item = &'a WeylPolynomial>,
    {
        let grid: Vec<Time> = polys
            .into_iter()
            .flat_map(|p| p.terms().iter().flat_map(|t| t.exponent.ends().to_vec()))
            .collect();
        Self::new(dim, grid, count, seed)
    }

    pub fn grid(&self) -> &[Time] {
        &self.grid
    }

    pub fn count(&self) -> usize {
        self.count
    }

    pub fn seed(&self) -> u64 {
        self.seed
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    /// Fills `out` (length `grid.len() * dim`, interval-major) with the
    /// increments of path `path`.
    pub fn increments(&self, path: usize, out: &mut [f64]) {
        debug_assert_eq!(out.len(), self.grid.len() * self.dim);
        let mut rng = ChaCha8Rng::seed_from_u64(self.seed);
        rng.set_stream(path as u64);
        let mut spare: Option<f64> = None;
        for (k, chunk) in out.chunks_mut(self.dim.max(1)).enumerate() {
            for x in chunk.iter_mut() {
                let z = match spare.take() {
                    Some(z) => z,
                    None => {
                        let (a, b) = box_muller(&mut rng);
                        spare = Some(b);
                        a
                    }
                };
                *x = z * self.sqrt_len[k];
            }
        }
    }

    fn compile(&self, x: &WeylPolynomial) -> Result<Compiled> {
        if x.dim() != self.dim {
            return Err(Error::DimMismatch {
                left: self.dim,
                right: x.dim(),
            });
        }
        let terms = x
            .terms()
            .iter()
            .map(|t| {
                Ok(CompiledTerm {
                    coeff: t.coeff,
                    pieces: self.compile_step(&t.exponent)?,
                })
            })
            .collect::<Result<_>>()?;
        Ok(Compiled { terms })
    }

    fn compile_step(&self, h: &StepVector) -> Result<Vec<(usize, Vec<f64>)>> {
        Ok(h.on_grid(&self.grid)?
            .into_iter()
            .enumerate()
            .filter(|(_, v)| v.iter().any(|&x| x != 0.0))
            .collect())
    }

    /// Runs `f` on every path and reduces `k` complex statistics.
    fn reduce<F>(&self, k: usize, f: F) -> Vec<ComplexStats>
    where
        F: Fn(&[f64], &mut [Complex64]) + Sync,
    {
        let width = self.grid.len() * self.dim;
        let chunks = self.count.div_ceil(CHUNK);
        let partial: Vec<Vec<ComplexStats>> = (0..chunks)
            .into_par_iter()
            .map(|c| {
                let mut stats = vec![ComplexStats::default(); k];
                let mut incr = vec![0.0; width];
                let mut vals = vec![Complex64::default(); k];
                for path in c * CHUNK..((c + 1) * CHUNK).min(self.count) {
                    self.increments(path, &mut incr);
                    f(&incr, &mut vals);
                    for (s, v) in stats.iter_mut().zip(&vals) {
                        s.push(*v);
                    }
                }
                stats
            })
            .collect();
        tree_reduce(partial).unwrap_or_else(|| vec![ComplexStats::default(); k])
    }

    /// Sample statistics of each polynomial over all paths.
    pub fn estimate(&self, xs: &[&WeylPolynomial]) -> Result<Vec<ComplexStats>> {
        let compiled: Vec<Compiled> = xs.iter().map(|x| self.compile(x)).collect::<Result<_>>()?;
        let dim = self.dim;
        Ok(self.reduce(compiled.len(), |incr, out| {
            for (c, o) in compiled.iter().zip(out.iter_mut()) {
                *o = c.eval(incr, dim);
            }
        }))
    }

    /// Sample statistics of `W(h)²`, stored in the real part.
    pub fn estimate_w_squared(&self, h: &StepVector) -> Result<ComplexStats> {
        let pieces = self.compile_step(h)?;
        let dim = self.dim;
        Ok(self
            .reduce(1, |incr, out| {
                let w = eval_w(&pieces, incr, dim);
                out[0] = Complex64::new(w * w, 0.0);
            })
            .remove(0))
    }

    /// For each interval and coordinate, the sample mean of
    /// `increment² / length`, which should be close to 1.
    pub fn increment_check(&self) -> IncrementCheck {
        let m = self.grid.len() * self.dim;
        let sqrt_len = &self.sqrt_len;
        let dim = self.dim.max(1);
        let stats = self.reduce(m, |incr, out| {
            for (i, (o, x)) in out.iter_mut().zip(incr).enumerate() {
                let s = sqrt_len[i / dim];
                *o = Complex64::new((x / s) * (x / s), 0.0);
            }
        });
        let max_z = stats
            .iter()
            .map(|s| z_score(s.mean.re, 1.0, s.stderr_re()))
            .fold(0.0, f64::max);
        IncrementCheck {
            means: stats.iter().map(|s| s.mean.re).collect(),
            max_z,
            pass: max_z <= Z_THRESHOLD,
        }
    }
}

/// Two independent standard normals from two uniforms.
fn box_muller<R: RngCore>(rng: &mut R) -> (f64, f64) {
    const SCALE: f64 = 1.0 / (1u64 << 53) as f64;
    let u1 = 1.0 - (rng.next_u64() >> 11) as f64 * SCALE;
    let u2 = (rng.next_u64() >> 11) as f64 * SCALE;
    let r = (-2.0 * u1.ln()).sqrt();
    let theta = std::f64::consts::TAU * u2;
    (r * theta.cos(), r * theta.sin())
}

struct CompiledTerm {
    coeff: Complex64,
    pieces: Vec<(usize, Vec<f64>)>,
}

struct Compiled {
    terms: Vec<CompiledTerm>,
}

fn eval_w(pieces: &[(usize, Vec<f64>)], incr: &[f64], dim: usize) -> f64 {
    pieces
        .iter()
        .map(|(k, v)| {
            let dw = &incr[k * dim..(k + 1) * dim];
            v.iter().zip(dw).map(|(a, b)| a * b).sum::<f64>()
        })
        .sum()
}

impl Compiled {
    fn eval(&self, incr: &[f64], dim: usize) -> Complex64 {
        self.terms
            .iter()
            .map(|t| t.coeff * Complex64::from_polar(1.0, eval_w(&t.pieces, incr, dim)))
            .sum()
    }
}

/// Per-path values of `x` on every path of `p`.
pub fn evaluate(x: &WeylPolynomial, p: &PathSample) -> Result<Vec<Complex64>> {
    let compiled = p.compile(x)?;
    let mut incr = vec![0.0; p.grid.len() * p.dim];
    Ok((0..p.count)
        .map(|path| {
            p.increments(path, &mut incr);
            compiled.eval(&incr, p.dim)
        })
        .collect())
}

/// Per-path values of `W(h)`.
pub fn evaluate_w(h: &StepVector, p: &PathSample) -> Result<Vec<f64>> {
    let pieces = p.compile_step(h)?;
    let mut incr = vec![0.0; p.grid.len() * p.dim];
    Ok((0..p.count)
        .map(|path| {
            p.increments(path, &mut incr);
            eval_w(&pieces, &incr, p.dim)
        })
        .collect())
}

/// Running mean and variance of the real and imaginary parts (Welford, with
/// Chan's merge).
#[derive(Clone, Copy, Debug, Default, PartialEq)]
pub struct ComplexStats {
    pub n: usize,
    pub mean: Complex64,
    m2_re: f64,
    m2_im: f64,
}

impl ComplexStats {
    fn push(&mut self, x: Complex64) {
        self.n += 1;
        let n = self.n as f64;
        let d = x - self.mean;
        self.mean += d / n;
        let d2 = x - self.mean;
        self.m2_re += d.re * d2.re;
        self.m2_im += d.im * d2.im;
    }

    fn merge(&self, other: &Self) -> Self {
        if self.n == 0 {
            return *other;
        }
        if other.n == 0 {
            return *self;
        }
        let n = self.n + other.n;
        let (na, nb, nn) = (self.n as f64, other.n as f64, n as f64);
        let d = other.mean - self.mean;
        Self {
            n,
            mean: self.mean + d * (nb / nn),
            m2_re: self.m2_re + other.m2_re + d.re * d.re * na * nb / nn,
            m2_im: self.m2_im + other.m2_im + d.im * d.im * na * nb / nn,
        }
    }

    fn variance(m2: f64, n: usize) -> f64 {
        if n < 2 {
            0.0
        } else {
            m2 / (n - 1) as f64
        }
    }

    pub fn stderr_re(&self) -> f64 {
        (Self::variance(self.m2_re, self.n) / self.n.max(1) as f64).sqrt()
    }

    pub fn stderr_im(&self) -> f64 {
        (Self::variance(self.m2_im, self.n) / self.n.max(1) as f64).sqrt()
    }
}

fn tree_reduce(mut level: Vec<Vec<ComplexStats>>) -> Option<Vec<ComplexStats>> {
    while level.len() > 1 {
        level = level
            .chunks(2)
            .map(|pair| match pair {
                [a, b] => a.iter().zip(b).map(|(x, y)| x.merge(y)).collect(),
                [a] => a.clone(),
                _ => unreachable!(),
            })
            .collect();
    }
    level.pop()
}

/// `|estimate − exact| / stderr`; a zero standard error gives 0 for an exact
/// match and infinity otherwise.
pub fn z_score(estimate: f64, exact: f64, stderr: f64) -> f64 {
    let diff = (estimate - exact).abs();
    if stderr > 0.0 {
        diff / stderr
    } else if diff <= 1e-12 {
        0.0
    } else {
        f64::INFINITY
    }
}

#[derive(Clone, Debug, Serialize)]
pub struct IncrementCheck {
    pub means: Vec<f64>,
    pub max_z: f64,
    pub pass: bool,
}

/// Symbolic value versus Monte Carlo estimate of one statistic.
#[derive(Clone, Debug, Serialize)]
pub struct Comparison {
    pub symbolic: [f64; 2],
    pub estimate: [f64; 2],
    pub stderr: [f64; 2],
    pub z: [f64; 2],
    pub flagged: bool,
}

impl Comparison {
    fn new(symbolic: Complex64, stats: &ComplexStats) -> Self {
        let z = [
            z_score(stats.mean.re, symbolic.re, stats.stderr_re()),
            z_score(stats.mean.im, symbolic.im, stats.stderr_im()),
        ];
        Self {
            symbolic: [symbolic.re, symbolic.im],
            estimate: [stats.mean.re, stats.mean.im],
            stderr: [stats.stderr_re(), stats.stderr_im()],
            z,
            flagged: z.iter().any(|&z| z > Z_THRESHOLD),
        }
    }

    pub fn max_z(&self) -> f64 {
        self.z[0].max(self.z[1])
    }
}

fn check_samples(n: usize) -> Result<()> {
    if n < MIN_SAMPLES {
        Err(Error::InvalidArgument(format!(
            "at least {MIN_SAMPLES} samples are required, got {n}"
        )))
    } else {
        Ok(())
    }
}

/// Compares `𝔼 x` computed symbolically with its Monte Carlo estimate.
pub fn cross_validate_expectation(x: &WeylPolynomial, n: usize, seed: u64) -> Result<Comparison> {
    check_samples(n)?;
    let sample = PathSample::covering(x.dim(), [x], n, seed);
    let stats = sample.estimate(&[x])?;
    Ok(Comparison::new(x.expectation(), &stats[0]))
}

/// One probe of [`cross_validate_conditional`].
#[derive(Clone, Debug, Serialize)]
pub struct ProbeCheck {
    /// Monte Carlo estimate of `𝔼[x E[g]]` against the symbolic value of
    /// `𝔼[E_u(x) E[g]]`.
    pub pairing: Comparison,
    /// Symbolic `𝔼[x E[g]]`, which must agree with `pairing.symbolic`.
    pub symbolic_direct: [f64; 2],
}

#[derive(Clone, Debug, Serialize)]
pub struct ConditionalReport {
    pub u: String,
    pub probes: Vec<ProbeCheck>,
    pub max_z: f64,
    pub flagged: usize,
}

/// Checks the defining property of the conditional expectation: for every
/// probe `g` supported in `[0, u]`, `𝔼[x E[g]] = 𝔼[E_u(x) E[g]]`. The left
/// side is estimated by Monte Carlo, the right side is symbolic.
pub fn cross_validate_conditional(
    x: &WeylPolynomial,
    u: Time,
    probes: &[StepVector],
    n: usize,
    seed: u64,
) -> Result<ConditionalReport> {
    check_samples(n)?;
    if probes.iter().any(|p| p.support_end() > u) {
        return Err(Error::ProbeSupport(u));
    }
    let projected = x.conditional_expectation(u)?;
    let lefts: Vec<WeylPolynomial> = probes
        .iter()
        .map(|g| x.mul(&WeylPolynomial::exp_i(g.clone())))
        .collect::<Result<_>>()?;
    let sample = PathSample::covering(x.dim(), lefts.iter(), n, seed);
    let stats = sample.estimate(&lefts.iter().collect::<Vec<_>>())?;
    let mut checks = Vec::with_capacity(probes.len());
    for ((g, left), st) in probes.iter().zip(&lefts).zip(&stats) {
        let right = projected
            .mul(&WeylPolynomial::exp_i(g.clone()))?
            .expectation();
        let direct = left.expectation();
        checks.push(ProbeCheck {
            pairing: Comparison::new(right, st),
            symbolic_direct: [direct.re, direct.im],
        });
    }
    let max_z = checks.iter().map(|c| c.pairing.max_z()).fold(0.0, f64::max);
    let flagged = checks.iter().filter(|c| c.pairing.flagged).count();
    Ok(ConditionalReport {
        u: u.to_string(),
        probes: checks,
        max_z,
        flagged,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn r(n: i64, d: i64) -> Time {
        Time::new(n, d)
    }

    #[test]
    fn constant_one() {
        let one = WeylPolynomial::one(2);
        let p = PathSample::new(2, [r(1, 1)], 100, 3);
        assert!(evaluate(&one, &p)
            .unwrap()
            .iter()
            .all(|v| *v == Complex64::new(1.0, 0.0)));
        let c = cross_validate_expectation(&one, 1000, 1).unwrap();
        assert_eq!(c.z, [0.0, 0.0]);
        assert!(!c.flagged);
    }

    #[test]
    fn too_few_samples() {
        assert!(cross_validate_expectation(&WeylPolynomial::one(1), 10, 1).is_err());
    }

    #[test]
    fn grid_must_refine() {
        let x = WeylPolynomial::exp_i(StepVector::indicator(r(0, 1), r(1, 2), &[1.0]).unwrap());
        let p = PathSample::new(1, [r(1, 1)], 10, 0);
        assert!(matches!(evaluate(&x, &p), Err(Error::GridMismatch(_))));
    }

    #[test]
    fn deterministic_and_thread_independent() {
        let x =
            WeylPolynomial::exp_i(StepVector::indicator(r(0, 1), r(1, 1), &[0.5, 0.5]).unwrap());
        let p = PathSample::covering(2, [&x], 5000, 42);
        let a = p.estimate(&[&x]).unwrap();
        let b = p.estimate(&[&x]).unwrap();
        assert_eq!(a, b);
        let serial: Complex64 = evaluate(&x, &p).unwrap().iter().sum::<Complex64>() / 5000.0;
        assert!((serial - a[0].mean).norm() < 1e-12);
        let pool = rayon::ThreadPoolBuilder::new()
            .num_threads(1)
            .build()
            .unwrap();
        let c = pool.install(|| p.estimate(&[&x]).unwrap());
        assert_eq!(a, c);
    }

    #[test]
    fn probe_support_is_enforced() {
        let x = WeylPolynomial::one(1);
        let g = StepVector::indicator(r(0, 1), r(1, 1), &[1.0]).unwrap();
        assert!(matches!(
            cross_validate_conditional(&x, r(1, 2), &[g], 1000, 0),
            Err(Error::ProbeSupport(_))
        ));
    }

    #[test]
    fn stats_merge_matches_single_pass() {
        let xs: Vec<Complex64> = (0..100)
            .map(|i| Complex64::new((i as f64).sin(), (i as f64 * 0.3).cos()))
            .collect();
        let mut whole = ComplexStats::default();
        xs.iter().for_each(|x| whole.push(*x));
        let (mut a, mut b) = (ComplexStats::default(), ComplexStats::default());
        xs[..37].iter().for_each(|x| a.push(*x));
        xs[37..].iter().for_each(|x| b.push(*x));
        let merged = a.merge(&b);
        assert!((merged.mean - whole.mean).norm() < 1e-14);
        assert!((merged.stderr_re() - whole.stderr_re()).abs() < 1e-14);
        assert!((merged.stderr_im() - whole.stderr_im()).abs() < 1e-14);
    }
}
