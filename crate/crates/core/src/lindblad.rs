//! Lindblad equation on the truncated Fock space.
//!
//! With `H = a*a`, the reduced density matrix evolves as
//!
//! ```text
//! dR/dt = -i [H, R]
//!       + sigma (a* R a - 1/2 a a* R - 1/2 R a a*)
//!       + rho   (a R a* - 1/2 a* a R - 1/2 R a* a)
//! ```
//!
//! and its diagonal `p_m = <m|R|m>` obeys exactly the Pauli master equations.
//! The truncated ladder operators drop `|N + 1>`, so identities involving
//! row or column `N` only hold approximately; checks quantify rows
//! `0..N - 1` and report row `N` separately.

use alloc::format;
use alloc::vec;
use alloc::vec::Vec;
use core::ops::{Add, Mul, Sub};

use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};
use crate::generator::build_generator;
use crate::model::{gibbs_distribution, ModelParams};

/// Tolerance on Hermiticity of a density matrix.
pub const HERMITIAN_TOL: f64 = 1e-14;

const ZERO: Complex64 = Complex64::new(0.0, 0.0);

/// Dense square complex matrix, row-major.
#[derive(Debug, Clone, PartialEq)]
pub struct CMatrix {
    dim: usize,
    data: Vec<Complex64>,
}

impl CMatrix {
    pub fn zeros(dim: usize) -> Self {
        Self {
            dim,
            data: vec![ZERO; dim * dim],
        }
    }

    pub fn identity(dim: usize) -> Self {
        let mut out = Self::zeros(dim);
        for i in 0..dim {
            out[(i, i)] = Complex64::new(1.0, 0.0);
        }
        out
    }

    pub fn from_diagonal(diag: &[f64]) -> Self {
        let mut out = Self::zeros(diag.len());
        for (i, &d) in diag.iter().enumerate() {
            out[(i, i)] = Complex64::new(d, 0.0);
        }
        out
    }

    pub fn from_rows(dim: usize, data: Vec<Complex64>) -> Result<Self> {
        if data.len() != dim * dim {
            return Err(Error::ShapeMismatch {
                expected: dim * dim,
                found: data.len(),
            });
        }
        Ok(Self { dim, data })
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn adjoint(&self) -> Self {
        let n = self.dim;
        let mut out = Self::zeros(n);
        for i in 0..n {
            for j in 0..n {
                out[(j, i)] = self[(i, j)].conj();
            }
        }
        out
    }

    pub fn scale(&self, c: Complex64) -> Self {
        Self {
            dim: self.dim,
            data: self.data.iter().map(|x| x * c).collect(),
        }
    }

    pub fn trace(&self) -> Complex64 {
        (0..self.dim).map(|i| self[(i, i)]).sum()
    }

    pub fn diagonal(&self) -> Vec<Complex64> {
        (0..self.dim).map(|i| self[(i, i)]).collect()
    }

    /// `max |A - A*|`.
    pub fn hermiticity_defect(&self) -> f64 {
        let n = self.dim;
        let mut worst = 0.0_f64;
        for i in 0..n {
            for j in i..n {
                worst = worst.max((self[(i, j)] - self[(j, i)].conj()).norm());
            }
        }
        worst
    }

    pub fn max_off_diagonal(&self) -> f64 {
        let n = self.dim;
        let mut worst = 0.0_f64;
        for i in 0..n {
            for j in 0..n {
                if i != j {
                    worst = worst.max(self[(i, j)].norm());
                }
            }
        }
        worst
    }

    pub fn max_abs(&self) -> f64 {
        self.data.iter().fold(0.0, |a, x| a.max(x.norm()))
    }
}

impl core::ops::Index<(usize, usize)> for CMatrix {
    type Output = Complex64;

    fn index(&self, (i, j): (usize, usize)) -> &Complex64 {
        &self.data[i * self.dim + j]
    }
}

impl core::ops::IndexMut<(usize, usize)> for CMatrix {
    fn index_mut(&mut self, (i, j): (usize, usize)) -> &mut Complex64 {
        &mut self.data[i * self.dim + j]
    }
}

impl Mul for &CMatrix {
    type Output = CMatrix;

    fn mul(self, rhs: &CMatrix) -> CMatrix {
        assert_eq!(self.dim, rhs.dim, "dimension mismatch");
        let n = self.dim;
        let mut out = CMatrix::zeros(n);
        for i in 0..n {
            for k in 0..n {
                let a = self[(i, k)];
                if a == ZERO {
                    continue;
                }
                let row = &rhs.data[k * n..(k + 1) * n];
                let dst = &mut out.data[i * n..(i + 1) * n];
                for (d, b) in dst.iter_mut().zip(row) {
                    *d += a * b;
                }
            }
        }
        out
    }
}

impl Add for &CMatrix {
    type Output = CMatrix;

    fn add(self, rhs: &CMatrix) -> CMatrix {
        assert_eq!(self.dim, rhs.dim, "dimension mismatch");
        CMatrix {
            dim: self.dim,
            data: self.data.iter().zip(&rhs.data).map(|(a, b)| a + b).collect(),
        }
    }
}

impl Sub for &CMatrix {
    type Output = CMatrix;

    fn sub(self, rhs: &CMatrix) -> CMatrix {
        assert_eq!(self.dim, rhs.dim, "dimension mismatch");
        CMatrix {
            dim: self.dim,
            data: self.data.iter().zip(&rhs.data).map(|(a, b)| a - b).collect(),
        }
    }
}

/// Annihilation and creation operators on `|0>..|N>`.
#[derive(Debug, Clone, PartialEq)]
pub struct LadderPair {
    /// `lower[m - 1, m] = sqrt(m)`.
    pub lower: CMatrix,
    /// Conjugate transpose of `lower`.
    pub raise: CMatrix,
}

pub fn build_ladder(truncation_n: usize) -> Result<LadderPair> {
    if truncation_n < 2 {
        return Err(Error::InvalidParameter {
            name: "truncation_n",
            reason: format!("must be at least 2, got {truncation_n}"),
        });
    }
    let dim = truncation_n + 1;
    let mut lower = CMatrix::zeros(dim);
    for m in 1..dim {
        lower[(m - 1, m)] = Complex64::new(libm::sqrt(m as f64), 0.0);
    }
    let raise = lower.adjoint();
    Ok(LadderPair { lower, raise })
}

impl LadderPair {
    /// `a* a`, diagonal with entries `0..N`.
    pub fn number(&self) -> CMatrix {
        &self.raise * &self.lower
    }

    /// `[a, a*]`: the identity except for `-N` in the last entry.
    pub fn commutator(&self) -> CMatrix {
        &(&self.lower * &self.raise) - &(&self.raise * &self.lower)
    }
}

/// A Hermitian matrix on the truncated Fock space.
#[derive(Debug, Clone, PartialEq)]
pub struct DensityMatrix {
    entries: CMatrix,
}

impl DensityMatrix {
    pub fn new(entries: CMatrix) -> Result<Self> {
        let defect = entries.hermiticity_defect();
        if defect > HERMITIAN_TOL {
            return Err(Error::Domain(format!("matrix is not Hermitian (defect {defect:e})")));
        }
        Ok(Self { entries })
    }

    /// Diagonal density matrix with the given populations.
    pub fn from_populations(p: &[f64]) -> Self {
        Self {
            entries: CMatrix::from_diagonal(p),
        }
    }

    pub fn entries(&self) -> &CMatrix {
        &self.entries
    }

    pub fn populations(&self) -> Vec<f64> {
        self.entries.diagonal().iter().map(|z| z.re).collect()
    }

    /// Trace in `[1 - tail_tol, 1]` and populations `>= -1e-12`.
    pub fn check_physical(&self, tail_tol: f64) -> Result<()> {
        let tr = self.entries.trace().re;
        if !(tr >= 1.0 - tail_tol && tr <= 1.0 + 1e-12) {
            return Err(Error::Domain(format!("trace {tr} outside [1 - {tail_tol:e}, 1]")));
        }
        if let Some((m, p)) = self
            .populations()
            .into_iter()
            .enumerate()
            .find(|(_, p)| *p < -1e-12)
        {
            return Err(Error::Domain(format!("negative population {p:e} at level {m}")));
        }
        Ok(())
    }
}

/// Precomputed operators for repeated right-hand-side evaluations.
#[derive(Debug, Clone)]
pub struct LindbladOperator {
    params: ModelParams,
    ladder: LadderPair,
    /// `a* a`.
    number: CMatrix,
    /// `a a*`.
    anti_number: CMatrix,
}

impl LindbladOperator {
    pub fn new(params: &ModelParams) -> Result<Self> {
        let ladder = build_ladder(params.truncation_n())?;
        let number = ladder.number();
        let anti_number = &ladder.lower * &ladder.raise;
        Ok(Self {
            params: *params,
            ladder,
            number,
            anti_number,
        })
    }

    pub fn ladder(&self) -> &LadderPair {
        &self.ladder
    }

    /// Full right-hand side, unitary commutator included.
    ///
    /// Evaluated entrywise from the band structure of the ladder operators:
    /// `a* R a` and `a R a*` shift `R` along its diagonal, while `a* a` and
    /// `a a*` are diagonal. Entries `(i, j)` and `(j, i)` go through mirrored
    /// operations, so Hermitian input gives exactly Hermitian output.
    pub fn rhs(&self, r: &CMatrix) -> Result<CMatrix> {
        let dim = self.params.levels();
        if r.dim() != dim {
            return Err(Error::ShapeMismatch {
                expected: dim,
                found: r.dim(),
            });
        }
        let n = dim - 1;
        let (sigma, rho) = (self.params.sigma(), self.params.rho());
        // Diagonals of a* a and a a*; the latter loses |N + 1>.
        let count = |m: usize| m as f64;
        let anti = |m: usize| if m < n { m as f64 + 1.0 } else { 0.0 };
        let root = |i: usize, j: usize| libm::sqrt((i * j) as f64);
        let mut out = CMatrix::zeros(dim);
        for i in 0..dim {
            for j in 0..dim {
                let x = r[(i, j)];
                let unitary = x * Complex64::new(0.0, -(count(i) - count(j)));
                let mut up = -x * (0.5 * (anti(i) + anti(j)));
                if i > 0 && j > 0 {
                    up += r[(i - 1, j - 1)] * root(i, j);
                }
                let mut down = -x * (0.5 * (count(i) + count(j)));
                if i < n && j < n {
                    down += r[(i + 1, j + 1)] * root(i + 1, j + 1);
                }
                out[(i, j)] = unitary + up * sigma + down * rho;
            }
        }
        Ok(out)
    }

    /// The same right-hand side through dense products of the ladder
    /// matrices. Slower, kept as a cross-check of [`LindbladOperator::rhs`].
    pub fn rhs_dense(&self, r: &CMatrix) -> Result<CMatrix> {
        let dim = self.params.levels();
        if r.dim() != dim {
            return Err(Error::ShapeMismatch {
                expected: dim,
                found: r.dim(),
            });
        }
        let (a, ad) = (&self.ladder.lower, &self.ladder.raise);
        let half = Complex64::new(0.5, 0.0);

        let unitary = (&(&self.number * r) - &(r * &self.number)).scale(Complex64::new(0.0, -1.0));

        let gain_up = &(ad * r) * a;
        let loss_up = &(&self.anti_number * r) + &(r * &self.anti_number);
        let up = (&gain_up - &loss_up.scale(half)).scale(Complex64::new(self.params.sigma(), 0.0));

        let gain_down = &(a * r) * ad;
        let loss_down = &(&self.number * r) + &(r * &self.number);
        let down = (&gain_down - &loss_down.scale(half)).scale(Complex64::new(self.params.rho(), 0.0));

        Ok(&(&unitary + &up) + &down)
    }
}

/// One-shot evaluation of the Lindblad right-hand side.
pub fn lindblad_rhs(rho: &DensityMatrix, params: &ModelParams) -> Result<CMatrix> {
    LindbladOperator::new(params)?.rhs(rho.entries())
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DiagonalCheckReport {
    /// Max `|diag(L(diag p)) - A p|` over rows `0..N - 1` and all cases.
    pub max_deviation: f64,
    /// Same quantity on row `N`, where the truncations differ.
    pub row_n_deviation: f64,
    /// Largest off-diagonal entry produced from a diagonal input.
    pub max_off_diagonal: f64,
    pub cases: usize,
}

/// Compares the diagonal Lindblad dynamics with the generator on the Gibbs
/// law, every basis vector, and `trials` random probability vectors.
pub fn diagonal_dynamics_check(params: &ModelParams, trials: usize, seed: u64) -> Result<DiagonalCheckReport> {
    let op = LindbladOperator::new(params)?;
    let gen = build_generator(params);
    let dim = params.levels();
    let n = params.truncation_n();

    let mut cases: Vec<Vec<f64>> = Vec::with_capacity(trials + dim + 1);
    cases.push(gibbs_distribution(params).into_values());
    for m in 0..dim {
        let mut e = vec![0.0; dim];
        e[m] = 1.0;
        cases.push(e);
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    for _ in 0..trials {
        let mut p: Vec<f64> = (0..dim).map(|_| rng.random::<f64>()).collect();
        let total: f64 = p.iter().sum();
        p.iter_mut().for_each(|x| *x /= total);
        cases.push(p);
    }

    let mut report = DiagonalCheckReport {
        max_deviation: 0.0,
        row_n_deviation: 0.0,
        max_off_diagonal: 0.0,
        cases: cases.len(),
    };
    for p in &cases {
        let out = op.rhs(&CMatrix::from_diagonal(p))?;
        let ap = gen.apply(p)?;
        for (m, (z, a)) in out.diagonal().iter().zip(&ap).enumerate() {
            let dev = (z - Complex64::new(*a, 0.0)).norm();
            if m < n {
                report.max_deviation = report.max_deviation.max(dev);
            } else {
                report.row_n_deviation = report.row_n_deviation.max(dev);
            }
        }
        report.max_off_diagonal = report.max_off_diagonal.max(out.max_off_diagonal());
    }
    Ok(report)
}

/// Trace and Hermiticity of the right-hand side on random density matrices.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PreservationReport {
    /// Max `|A - A*|` of the output.
    pub hermiticity_defect: f64,
    /// Max of `|trace| - sigma (N + 1) R_NN`, the trace change beyond the
    /// truncation leak of the master equations.
    pub trace_excess: f64,
    pub cases: usize,
}

/// Applies the right-hand side to `trials` random density matrices
/// `B B* / trace(B B*)` with uniformly distributed complex `B`.
pub fn preservation_check(params: &ModelParams, trials: usize, seed: u64) -> Result<PreservationReport> {
    let op = LindbladOperator::new(params)?;
    let dim = params.levels();
    let n = params.truncation_n();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut report = PreservationReport {
        hermiticity_defect: 0.0,
        trace_excess: f64::NEG_INFINITY,
        cases: trials,
    };
    for _ in 0..trials {
        let data = (0..dim * dim)
            .map(|_| Complex64::new(rng.random::<f64>() - 0.5, rng.random::<f64>() - 0.5))
            .collect();
        let b = CMatrix::from_rows(dim, data)?;
        let r = &b * &b.adjoint();
        let r = r.scale(Complex64::new(1.0 / r.trace().re, 0.0));
        let out = op.rhs(&r)?;
        report.hermiticity_defect = report.hermiticity_defect.max(out.hermiticity_defect());
        let leak = self_leak(params, n, &r);
        report.trace_excess = report.trace_excess.max(out.trace().norm() - leak);
    }
    Ok(report)
}

fn self_leak(params: &ModelParams, n: usize, r: &CMatrix) -> f64 {
    (params.sigma() * (n as f64 + 1.0) * r[(n, n)].re).abs()
}
