//! Eigendecomposition of the symmetrized generator.
//!
//! Eigenvectors are computed for the symmetric matrix `M` and mapped back to
//! p-coordinates through `W^(-1/2)`, which makes them orthonormal in the
//! weighted inner product. Entries that underflow in p-coordinates are
//! flushed to zero.

use alloc::format;
use alloc::vec::Vec;

use crate::error::{Error, Result};
use crate::generator::{build_generator, SymmetrizedGenerator};
use crate::model::ModelParams;
use crate::sum::NeumaierSum;
use crate::tridiag::{symmetric_eigen, symmetric_eigenvalues};
use crate::weighted::{from_symmetric, to_symmetric};

/// Ordered eigenpairs of the truncated generator.
#[derive(Debug, Clone)]
pub struct SpectralDecomposition {
    params: ModelParams,
    eigenvalues: Vec<f64>,
    /// Column-major, symmetric coordinates.
    sym_vectors: Vec<f64>,
    /// Column-major, p-coordinates.
    vectors: Vec<f64>,
    d: Vec<f64>,
    e: Vec<f64>,
    dim: usize,
}

pub fn eigendecompose(sym: &SymmetrizedGenerator) -> Result<SpectralDecomposition> {
    let eig = symmetric_eigen(sym.diagonal(), sym.off_diagonal())?;
    let dim = eig.dim;
    let beta = sym.params().beta();
    let mut sym_vectors = eig.vectors;
    let mut vectors = Vec::with_capacity(dim * dim);
    for k in 0..dim {
        let col = &mut sym_vectors[k * dim..(k + 1) * dim];
        if col[0] < 0.0 {
            col.iter_mut().for_each(|x| *x = -*x);
        }
        let norm = libm::sqrt(col.iter().map(|x| x * x).collect::<NeumaierSum>().value());
        col.iter_mut().for_each(|x| *x /= norm);
        vectors.extend(col.iter().enumerate().map(|(m, &y)| from_symmetric(y, beta, m)));
    }
    Ok(SpectralDecomposition {
        params: *sym.params(),
        eigenvalues: eig.values,
        sym_vectors,
        vectors,
        d: sym.diagonal().to_vec(),
        e: sym.off_diagonal().to_vec(),
        dim,
    })
}

/// Builds, symmetrizes and diagonalizes the generator for `params`.
pub fn decompose(params: &ModelParams) -> Result<SpectralDecomposition> {
    eigendecompose(&build_generator(params).symmetrize()?)
}

impl SpectralDecomposition {
    pub fn params(&self) -> &ModelParams {
        &self.params
    }

    pub fn len(&self) -> usize {
        self.dim
    }

    pub fn is_empty(&self) -> bool {
        self.dim == 0
    }

    /// Eigenvalues `nu_0 >= nu_1 >= ...`.
    pub fn eigenvalues(&self) -> &[f64] {
        &self.eigenvalues
    }

    pub fn eigenvalue(&self, k: usize) -> f64 {
        self.eigenvalues[k]
    }

    /// Eigenvector `k` in p-coordinates, unit norm in the weighted space.
    pub fn vector(&self, k: usize) -> &[f64] {
        &self.vectors[k * self.dim..(k + 1) * self.dim]
    }

    /// Eigenvector `k` of the symmetric matrix, unit Euclidean norm.
    pub fn sym_vector(&self, k: usize) -> &[f64] {
        &self.sym_vectors[k * self.dim..(k + 1) * self.dim]
    }

    /// Number of eigenpairs treated as converged in the truncation, `N / 10`.
    pub fn trusted_modes(&self) -> usize {
        (self.params.truncation_n() / 10).clamp(2, self.dim)
    }

    /// Infinity norm of the symmetric matrix, the scale for tolerances.
    pub fn matrix_norm(&self) -> f64 {
        let n = self.dim;
        (0..n)
            .map(|i| {
                let mut s = self.d[i].abs();
                if i + 1 < n {
                    s += self.e[i].abs();
                }
                if i > 0 {
                    s += self.e[i - 1].abs();
                }
                s
            })
            .fold(0.0, f64::max)
    }

    /// Weighted inner products `<p, p_k>` for every mode `k`.
    pub fn coefficients(&self, p: &[f64]) -> Result<Vec<f64>> {
        if p.len() != self.dim {
            return Err(Error::ShapeMismatch {
                expected: self.dim,
                found: p.len(),
            });
        }
        let beta = self.params.beta();
        let scaled: Vec<f64> = p
            .iter()
            .enumerate()
            .map(|(m, &x)| to_symmetric(x, beta, m))
            .collect();
        Ok((0..self.dim)
            .map(|k| {
                self.sym_vector(k)
                    .iter()
                    .zip(&scaled)
                    .map(|(a, b)| a * b)
                    .collect::<NeumaierSum>()
                    .value()
            })
            .collect())
    }

    /// Weighted residual `|A p_k - nu_k p_k|` of eigenpair `k`.
    pub fn residual(&self, k: usize) -> f64 {
        let y = self.sym_vector(k);
        let nu = self.eigenvalues[k];
        let n = self.dim;
        let s = (0..n)
            .map(|i| {
                let mut r = (self.d[i] - nu) * y[i];
                if i + 1 < n {
                    r += self.e[i] * y[i + 1];
                }
                if i > 0 {
                    r += self.e[i - 1] * y[i - 1];
                }
                r * r
            })
            .collect::<NeumaierSum>()
            .value();
        libm::sqrt(s)
    }

    /// `max |G - I|` for the weighted Gram matrix of the first `modes` vectors.
    pub fn orthonormality_defect(&self, modes: usize) -> f64 {
        let modes = modes.min(self.dim);
        let mut worst = 0.0_f64;
        for j in 0..modes {
            for k in j..modes {
                let g = self
                    .sym_vector(j)
                    .iter()
                    .zip(self.sym_vector(k))
                    .map(|(a, b)| a * b)
                    .collect::<NeumaierSum>()
                    .value();
                let target = if j == k { 1.0 } else { 0.0 };
                worst = worst.max((g - target).abs());
            }
        }
        worst
    }
}

/// The spectral gap `|nu_1|`.
///
/// Fails when `nu_1` is indistinguishable from `nu_0`, which signals a
/// truncation too small to resolve the spectrum.
pub fn spectral_gap(dec: &SpectralDecomposition) -> Result<f64> {
    let tol = 1e-10 * dec.matrix_norm().max(1.0);
    let gap = dec.eigenvalues[0] - dec.eigenvalues[1];
    if !(gap > tol) {
        return Err(Error::DegenerateGap { gap });
    }
    Ok(dec.eigenvalues[1].abs())
}

/// Agreement between a solver eigenvector and the three-term recurrence.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RecurrenceCheck {
    /// `max |rebuilt_m - p_{k,m}| / max_m |p_{k,m}|` over compared entries.
    pub max_residual: f64,
    pub compared: usize,
}

/// Rebuilds eigenvector `k` from the row equations
/// `p_{m+1} = [(m + nu/rho + e^{-beta}(m + 1)) p_m - e^{-beta} m p_{m-1}] / (m + 1)`,
/// seeded with the solver's `p_{k,0}`, and compares entries of magnitude
/// above `1e-10` among the first `window` levels.
///
/// The recurrence is forward-unstable at large `m`; the deviation is
/// measured relative to the largest entry of the eigenvector.
pub fn eigenvector_recurrence_check(
    dec: &SpectralDecomposition,
    k: usize,
    window: usize,
) -> Result<RecurrenceCheck> {
    if k >= dec.dim {
        return Err(Error::IndexOutOfRange {
            index: k,
            max: dec.dim - 1,
        });
    }
    let params = &dec.params;
    let v = dec.vector(k);
    let scale = v.iter().fold(0.0_f64, |a, x| a.max(x.abs()));
    if v[0].abs() <= 1e-14 * scale {
        return Err(Error::CannotSeed { k, value: v[0] });
    }
    let nu_rho = dec.eigenvalues[k] / params.rho();
    let ratio = params.sigma() / params.rho();
    let window = window.min(dec.dim);

    let mut rebuilt = Vec::with_capacity(window);
    rebuilt.push(v[0]);
    for m in 0..window.saturating_sub(1) {
        let mf = m as f64;
        let prev = if m == 0 { 0.0 } else { rebuilt[m - 1] };
        let next = ((mf + nu_rho + ratio * (mf + 1.0)) * rebuilt[m] - ratio * mf * prev) / (mf + 1.0);
        rebuilt.push(next);
    }

    let mut max_residual = 0.0_f64;
    let mut compared = 0;
    for (r, s) in rebuilt.iter().zip(v) {
        if s.abs() > 1e-10 {
            max_residual = max_residual.max((r - s).abs() / scale);
            compared += 1;
        }
    }
    Ok(RecurrenceCheck {
        max_residual,
        compared,
    })
}

/// Leading eigenvalues for a sequence of truncation sizes.
#[derive(Debug, Clone, PartialEq)]
pub struct ConvergenceTable {
    pub sizes: Vec<usize>,
    /// `values[i][k]` is `nu_k` at truncation `sizes[i]`.
    pub values: Vec<Vec<f64>>,
}

impl ConvergenceTable {
    pub fn modes(&self) -> usize {
        self.values.first().map_or(0, Vec::len)
    }

    /// `|nu_k(sizes[i]) - nu_k(N_max)|`.
    pub fn drift(&self, i: usize, k: usize) -> f64 {
        let last = self.values.last().expect("non-empty table");
        (self.values[i][k] - last[k]).abs()
    }

    /// `max_i |nu_k(sizes[i]) - nu_k(N_max)|`.
    pub fn max_drift(&self, k: usize) -> f64 {
        (0..self.values.len()).map(|i| self.drift(i, k)).fold(0.0, f64::max)
    }

    /// Whether `nu_k(N)` is monotone along the size sequence.
    pub fn is_monotone(&self, k: usize) -> bool {
        let seq: Vec<f64> = self.values.iter().map(|row| row[k]).collect();
        seq.windows(2).all(|w| w[1] <= w[0]) || seq.windows(2).all(|w| w[1] >= w[0])
    }
}

/// The first `modes` eigenvalues at every truncation in `sizes`.
pub fn truncation_convergence(
    base: &ModelParams,
    sizes: &[usize],
    modes: usize,
) -> Result<ConvergenceTable> {
    if sizes.is_empty() || sizes.windows(2).any(|w| w[1] <= w[0]) {
        return Err(Error::InvalidParameter {
            name: "sizes",
            reason: format!("expected a non-empty increasing list, got {sizes:?}"),
        });
    }
    if modes == 0 || modes > sizes[0] + 1 {
        return Err(Error::InvalidParameter {
            name: "modes",
            reason: format!("need 1 <= modes <= {}, got {modes}", sizes[0] + 1),
        });
    }
    let mut values = Vec::with_capacity(sizes.len());
    for &n in sizes {
        let params = base.with_truncation(n)?;
        let sym = build_generator(&params).symmetrize()?;
        let mut nu = symmetric_eigenvalues(sym.diagonal(), sym.off_diagonal())?;
        nu.truncate(modes);
        values.push(nu);
    }
    Ok(ConvergenceTable {
        sizes: sizes.to_vec(),
        values,
    })
}
