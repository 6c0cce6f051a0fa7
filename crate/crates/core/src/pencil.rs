//! The linear pencil `L(nu) = U - nu V`.
//!
//! `U` is the generator with row `m` divided by `m^2 + 1` and `V` is the
//! diagonal `1 / (m^2 + 1)`, so that `A = V^(-1) U`. Because `V` is diagonal
//! and positive, the generalized problem `U x = nu V x` reduces exactly to a
//! standard problem for `V^(-1) U`. Here that tridiagonal matrix is
//! symmetrized by the diagonal similarity built from its own off-diagonals,
//! independently of the analytic symmetrization in [`crate::generator`], and
//! handed to the same QL solver.
//!
//! At finite truncation `V` is invertible, so the pencil's resolvent set is
//! never empty. [`range_growth`] instead tracks how fast the preimage of a
//! fixed sequence under `V` grows in the `h1` norm as `N` increases.

use alloc::format;
use alloc::vec::Vec;

use crate::error::{Error, Result};
use crate::generator::build_generator;
use crate::model::ModelParams;
use crate::tridiag::{symmetric_eigen, Tridiagonal};
use crate::weighted::{h1_norm, scale_exp, weighted_norm};

#[derive(Debug, Clone, PartialEq)]
pub struct PencilPair {
    params: ModelParams,
    u: Tridiagonal,
    v: Vec<f64>,
}

fn row_scale(m: usize) -> f64 {
    let m = m as f64;
    1.0 / (m * m + 1.0)
}

/// Builds `U` row by row from the rates and `V = diag(1 / (m^2 + 1))`.
pub fn build_pencil(params: &ModelParams) -> PencilPair {
    let n = params.truncation_n();
    let (rho, sigma) = (params.rho(), params.sigma());
    let v: Vec<f64> = (0..=n).map(row_scale).collect();
    let diag = (0..=n)
        .map(|m| {
            let mf = m as f64;
            -(rho * mf + sigma * (mf + 1.0)) * v[m]
        })
        .collect();
    let sup = (0..n).map(|m| rho * (m as f64 + 1.0) * v[m]).collect();
    // Row m + 1 couples to q_m with coefficient sigma (m + 1).
    let sub = (0..n).map(|m| sigma * (m as f64 + 1.0) * v[m + 1]).collect();
    PencilPair {
        params: *params,
        u: Tridiagonal { sub, diag, sup },
        v,
    }
}

/// Eigenpairs of the pencil, eigenvalues descending.
#[derive(Debug, Clone)]
pub struct PencilEigen {
    pub values: Vec<f64>,
    /// Column-major eigenvectors in p-coordinates, unit weighted norm.
    pub vectors: Vec<f64>,
    pub dim: usize,
}

impl PencilEigen {
    pub fn vector(&self, k: usize) -> &[f64] {
        &self.vectors[k * self.dim..(k + 1) * self.dim]
    }
}

impl PencilPair {
    pub fn params(&self) -> &ModelParams {
        &self.params
    }

    pub fn u(&self) -> &Tridiagonal {
        &self.u
    }

    pub fn v(&self) -> &[f64] {
        &self.v
    }

    pub fn dim(&self) -> usize {
        self.v.len()
    }

    pub fn apply_u(&self, x: &[f64]) -> Result<Vec<f64>> {
        self.u.apply(x)
    }

    pub fn apply_v(&self, x: &[f64]) -> Result<Vec<f64>> {
        self.check_len(x.len())?;
        Ok(x.iter().zip(&self.v).map(|(a, b)| a * b).collect())
    }

    /// Solves `V x = p`.
    pub fn solve_v(&self, p: &[f64]) -> Result<Vec<f64>> {
        self.check_len(p.len())?;
        Ok(p.iter().zip(&self.v).map(|(a, b)| a / b).collect())
    }

    /// `V^(-1) U`, which reproduces the generator.
    pub fn representation(&self) -> Tridiagonal {
        let v = &self.v;
        Tridiagonal {
            sub: self.u.sub.iter().enumerate().map(|(i, x)| x / v[i + 1]).collect(),
            diag: self.u.diag.iter().zip(v).map(|(x, w)| x / w).collect(),
            sup: self.u.sup.iter().zip(v).map(|(x, w)| x / w).collect(),
        }
    }

    fn check_len(&self, found: usize) -> Result<()> {
        if found == self.dim() {
            Ok(())
        } else {
            Err(Error::ShapeMismatch {
                expected: self.dim(),
                found,
            })
        }
    }
}

/// Solves `U x = nu V x`.
pub fn pencil_eigen(pencil: &PencilPair) -> Result<PencilEigen> {
    let b = pencil.representation();
    let n = b.dim();
    // D B D^(-1) is symmetric for D = diag(delta) with
    // (delta_{m+1} / delta_m)^2 = B[m, m+1] / B[m+1, m].
    let mut log_delta = Vec::with_capacity(n);
    log_delta.push(0.0);
    let mut e = Vec::with_capacity(n - 1);
    for m in 0..n - 1 {
        let (up, down) = (b.sup[m], b.sub[m]);
        if !(up * down > 0.0) {
            return Err(Error::Consistency {
                index: m,
                asymmetry: f64::INFINITY,
            });
        }
        log_delta.push(log_delta[m] + 0.5 * crate::math::log(up / down));
        e.push(libm::sqrt(up * down));
    }
    let eig = symmetric_eigen(&b.diag, &e)?;
    let beta = pencil.params.beta();
    let mut vectors = Vec::with_capacity(n * n);
    for k in 0..n {
        let mut x: Vec<f64> = eig
            .vector(k)
            .iter()
            .zip(&log_delta)
            .map(|(y, ld)| scale_exp(*y, -ld))
            .collect();
        let norm = weighted_norm(&x, beta);
        let sign = if x[0] < 0.0 { -1.0 } else { 1.0 };
        x.iter_mut().for_each(|v| *v *= sign / norm);
        vectors.extend(x);
    }
    Ok(PencilEigen {
        values: eig.values,
        vectors,
        dim: n,
    })
}

/// `|(U - nu V) x| / |x|` in the weighted norm.
pub fn pencil_residual(pencil: &PencilPair, nu: f64, x: &[f64]) -> Result<f64> {
    let beta = pencil.params.beta();
    let norm = weighted_norm(x, beta);
    if norm == 0.0 {
        return Err(Error::Domain("zero vector".into()));
    }
    let ux = pencil.apply_u(x)?;
    let vx = pencil.apply_v(x)?;
    let r: Vec<f64> = ux.iter().zip(&vx).map(|(a, b)| a - nu * b).collect();
    Ok(weighted_norm(&r, beta) / norm)
}

/// Largest entrywise gap between `V^(-1) U` and the generator.
pub fn representation_defect(pencil: &PencilPair) -> f64 {
    let rep = pencil.representation();
    let gen = build_generator(&pencil.params);
    let a = gen.matrix();
    let pairs = rep
        .sub
        .iter()
        .zip(&a.sub)
        .chain(rep.diag.iter().zip(&a.diag))
        .chain(rep.sup.iter().zip(&a.sup));
    pairs.fold(0.0_f64, |acc, (x, y)| acc.max((x - y).abs()))
}

/// `h1` norm of `x = V^(-1) p` for `p_m = exp(-beta m / 2) / (m^2 + 1)`,
/// whose solution is `x_m = exp(-beta m / 2)`, at each truncation size.
pub fn range_growth(base: &ModelParams, sizes: &[usize]) -> Result<Vec<(usize, f64)>> {
    if sizes.windows(2).any(|w| w[1] <= w[0]) {
        return Err(Error::InvalidParameter {
            name: "sizes",
            reason: format!("expected increasing sizes, got {sizes:?}"),
        });
    }
    let beta = base.beta();
    sizes
        .iter()
        .map(|&n| {
            let params = base.with_truncation(n)?;
            let pencil = build_pencil(&params);
            let p: Vec<f64> = (0..=n)
                .map(|m| crate::math::exp(-0.5 * beta * m as f64) * row_scale(m))
                .collect();
            let x = pencil.solve_v(&p)?;
            Ok((n, h1_norm(&x, beta)))
        })
        .collect()
}
