//! The truncated master-equation generator and its symmetrized form.
//!
//! In p-coordinates row `m` of the generator reads
//! `rho (m + 1) q_{m+1} + sigma m q_{m-1} - (rho m + sigma (m + 1)) q_m`.
//! Row `N` drops the coupling to `q_{N+1}`, so probability leaks out of the
//! truncated space at rate `sigma (N + 1) p_N`. Conjugating by
//! `W^(1/2) = diag(exp(beta m / 2))` turns the matrix into a symmetric one
//! whenever `sigma = rho exp(-beta)`.

use alloc::format;
use alloc::vec::Vec;

use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::model::ModelParams;
use crate::tridiag::Tridiagonal;
use crate::weighted::{weighted_dot, weighted_inner_product, weighted_norm_complex};

/// Relative tolerance for the two analytic off-diagonal expressions.
pub const SYMMETRY_TOL: f64 = 1e-12;

/// Truncated generator in p-coordinates.
#[derive(Debug, Clone, PartialEq)]
pub struct GeneratorMatrix {
    params: ModelParams,
    matrix: Tridiagonal,
}

/// Builds the `(N + 1) x (N + 1)` generator from the model rates.
pub fn build_generator(params: &ModelParams) -> GeneratorMatrix {
    let n = params.truncation_n();
    let (rho, sigma) = (params.rho(), params.sigma());
    // sub[i]: coefficient of q_i in row i + 1.
    let sub = (0..n).map(|i| sigma * (i as f64 + 1.0)).collect();
    let diag = (0..=n)
        .map(|m| {
            let m = m as f64;
            -(rho * m + sigma * (m + 1.0))
        })
        .collect();
    // sup[i]: coefficient of q_{i+1} in row i.
    let sup = (0..n).map(|i| rho * (i as f64 + 1.0)).collect();
    GeneratorMatrix {
        params: *params,
        matrix: Tridiagonal { sub, diag, sup },
    }
}

impl GeneratorMatrix {
    pub fn params(&self) -> &ModelParams {
        &self.params
    }

    pub fn matrix(&self) -> &Tridiagonal {
        &self.matrix
    }

    pub fn truncation_n(&self) -> usize {
        self.params.truncation_n()
    }

    pub fn dim(&self) -> usize {
        self.matrix.dim()
    }

    /// Entry `i` is the coefficient of `q_i` in row `i + 1`.
    pub fn sub(&self) -> &[f64] {
        &self.matrix.sub
    }

    pub fn diag(&self) -> &[f64] {
        &self.matrix.diag
    }

    /// Entry `i` is the coefficient of `q_{i+1}` in row `i`.
    pub fn sup(&self) -> &[f64] {
        &self.matrix.sup
    }

    pub fn apply(&self, q: &[f64]) -> Result<Vec<f64>> {
        self.matrix.apply(q)
    }

    pub fn apply_complex(&self, q: &[Complex64]) -> Result<Vec<Complex64>> {
        self.matrix.apply(q)
    }

    pub fn to_dense(&self) -> Vec<f64> {
        self.matrix.to_dense()
    }

    /// Column sums; zero on interior columns, `-sigma (N + 1)` on column `N`.
    pub fn column_sums(&self) -> Vec<f64> {
        let n = self.dim();
        (0..n)
            .map(|col| {
                let mut s = self.matrix.diag[col];
                if col > 0 {
                    s += self.matrix.sup[col - 1];
                }
                if col + 1 < n {
                    s += self.matrix.sub[col];
                }
                s
            })
            .collect()
    }

    /// Instantaneous probability outflow `sigma (N + 1) p_N` through the cut.
    pub fn leak_rate(&self, p: &[f64]) -> f64 {
        let n = self.truncation_n();
        self.params.sigma() * (n as f64 + 1.0) * p[n]
    }

    pub fn symmetrize(&self) -> Result<SymmetrizedGenerator> {
        symmetrize(self)
    }
}

/// The generator conjugated by `W^(1/2)`: `M = W^(1/2) A W^(-1/2)`.
#[derive(Debug, Clone, PartialEq)]
pub struct SymmetrizedGenerator {
    params: ModelParams,
    d: Vec<f64>,
    e: Vec<f64>,
}

impl SymmetrizedGenerator {
    pub fn params(&self) -> &ModelParams {
        &self.params
    }

    pub fn diagonal(&self) -> &[f64] {
        &self.d
    }

    pub fn off_diagonal(&self) -> &[f64] {
        &self.e
    }

    pub fn dim(&self) -> usize {
        self.d.len()
    }

    pub fn as_tridiagonal(&self) -> Tridiagonal {
        Tridiagonal {
            sub: self.e.clone(),
            diag: self.d.clone(),
            sup: self.e.clone(),
        }
    }
}

/// Symmetrizes the generator analytically.
///
/// The off-diagonal `M[m, m+1] = rho (m + 1) exp(-beta / 2)` is computed from
/// the super-diagonal and compared with `M[m+1, m] = sigma (m + 1) exp(beta / 2)`
/// from the sub-diagonal. They agree exactly when the rates satisfy detailed
/// balance; a relative mismatch above [`SYMMETRY_TOL`] is an error.
pub fn symmetrize(gen: &GeneratorMatrix) -> Result<SymmetrizedGenerator> {
    let beta = gen.params.beta();
    let down = crate::math::exp(-0.5 * beta);
    let up = crate::math::exp(0.5 * beta);
    let mut e = Vec::with_capacity(gen.sup().len());
    for (m, (&sup, &sub)) in gen.sup().iter().zip(gen.sub()).enumerate() {
        let from_sup = sup * down;
        let from_sub = sub * up;
        let asymmetry = (from_sup - from_sub).abs() / from_sup.abs().max(from_sub.abs());
        if asymmetry > SYMMETRY_TOL {
            return Err(Error::Consistency {
                index: m,
                asymmetry,
            });
        }
        e.push(from_sup);
    }
    Ok(SymmetrizedGenerator {
        params: gen.params,
        d: gen.diag().to_vec(),
        e,
    })
}

/// `Re <A q, q>` in the weighted space; non-positive for detailed-balanced
/// rates and zero exactly along the Gibbs direction.
pub fn quadratic_form(gen: &GeneratorMatrix, q: &[Complex64]) -> Result<f64> {
    let aq = gen.apply_complex(q)?;
    Ok(weighted_inner_product(&aq, q, gen.params.beta())?.re)
}

/// Real-vector convenience for [`quadratic_form`].
pub fn quadratic_form_real(gen: &GeneratorMatrix, q: &[f64]) -> Result<f64> {
    let aq = gen.apply(q)?;
    weighted_dot(&aq, q, gen.params.beta())
}

/// Diagonal part `S` and off-diagonal part `T` of the generator.
#[derive(Debug, Clone, PartialEq)]
pub struct SplitST {
    pub s: Vec<f64>,
    /// Sub-diagonal of `T` (same layout as [`GeneratorMatrix::sub`]).
    pub t_sub: Vec<f64>,
    /// Super-diagonal of `T`.
    pub t_sup: Vec<f64>,
}

pub fn split_st(gen: &GeneratorMatrix) -> SplitST {
    SplitST {
        s: gen.diag().to_vec(),
        t_sub: gen.sub().to_vec(),
        t_sup: gen.sup().to_vec(),
    }
}

impl SplitST {
    /// `S + T` as a tridiagonal matrix.
    pub fn reassemble(&self) -> Tridiagonal {
        Tridiagonal {
            sub: self.t_sub.clone(),
            diag: self.s.clone(),
            sup: self.t_sup.clone(),
        }
    }

    /// `T (S - nu)^(-1) q` for real `nu > 0`.
    pub fn t_s_nu_inverse(&self, nu: f64, q: &[Complex64]) -> Result<Vec<Complex64>> {
        if !(nu > 0.0) {
            return Err(Error::Domain(format!("nu must be > 0, got {nu}")));
        }
        if q.len() != self.s.len() {
            return Err(Error::ShapeMismatch {
                expected: self.s.len(),
                found: q.len(),
            });
        }
        let x: Vec<Complex64> = q.iter().zip(&self.s).map(|(q, s)| q / (s - nu)).collect();
        let t = Tridiagonal {
            sub: self.t_sub.clone(),
            diag: alloc::vec![0.0; self.s.len()],
            sup: self.t_sup.clone(),
        };
        t.apply(&x)
    }
}

/// Both sides of `|(A - nu) q| >= |nu| |q|` in the weighted norm, for
/// `Re nu > 0`.
pub fn resolvent_lower_bound(gen: &GeneratorMatrix, nu: Complex64, q: &[Complex64]) -> Result<(f64, f64)> {
    if !(nu.re > 0.0) {
        return Err(Error::Domain(format!("Re nu must be > 0, got {}", nu.re)));
    }
    let beta = gen.params.beta();
    let aq = gen.apply_complex(q)?;
    let shifted: Vec<Complex64> = aq.iter().zip(q).map(|(a, x)| a - nu * x).collect();
    let lhs = weighted_norm_complex(&shifted, beta);
    let rhs = nu.norm() * weighted_norm_complex(q, beta);
    Ok((lhs, rhs))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::gibbs_distribution;
    use alloc::vec;
    use core::f64::consts::LN_2;

    fn ln2(n: usize) -> ModelParams {
        ModelParams::new(LN_2, 1.0, n).unwrap()
    }

    fn close(a: f64, b: f64, tol: f64) -> bool {
        (a - b).abs() <= tol
    }

    #[test]
    fn three_level_rows() {
        let g = build_generator(&ln2(2));
        let dense = g.to_dense();
        let expected = [-0.5, 1.0, 0.0, 0.5, -2.0, 2.0, 0.0, 1.0, -3.5];
        for (a, b) in dense.iter().zip(expected) {
            assert!(close(*a, b, 1e-15), "{dense:?}");
        }
    }

    #[test]
    fn gibbs_is_annihilated_away_from_the_cut() {
        for (beta, rho) in [(LN_2, 1.0), (1.0, 2.0), (3.0, 1.0)] {
            let p = ModelParams::new(beta, rho, 120).unwrap();
            let g = build_generator(&p);
            let r = g.apply(gibbs_distribution(&p).values()).unwrap();
            let sup = r[..120].iter().fold(0.0_f64, |a, x| a.max(x.abs()));
            assert!(sup <= 1e-13, "beta={beta}: {sup}");
        }
    }

    #[test]
    fn first_column() {
        let g = build_generator(&ln2(5));
        let mut e0 = vec![0.0; 6];
        e0[0] = 1.0;
        let col = g.apply(&e0).unwrap();
        assert!(close(col[0], -0.5, 1e-15) && close(col[1], 0.5, 1e-15));
        assert!(col[2..].iter().all(|x| *x == 0.0));
    }

    #[test]
    fn column_sums_and_leak() {
        let p = ModelParams::new(0.9, 1.7, 25).unwrap();
        let g = build_generator(&p);
        let sums = g.column_sums();
        assert!(sums[..25].iter().all(|s| s.abs() < 1e-12));
        assert!(close(sums[25], -p.sigma() * 26.0, 1e-12));
    }

    #[test]
    fn symmetrized_three_level() {
        let s = build_generator(&ln2(2)).symmetrize().unwrap();
        let r2 = core::f64::consts::SQRT_2;
        assert_eq!(s.diagonal(), &[-0.5, -2.0, -3.5]);
        assert!(close(s.off_diagonal()[0], 1.0 / r2, 1e-15));
        assert!(close(s.off_diagonal()[1], 2.0 / r2, 1e-15));
    }

    #[test]
    fn free_sigma_breaks_symmetrization() {
        let p = ModelParams::with_free_sigma(1.0, 1.0, 1.0, 10).unwrap();
        let err = build_generator(&p).symmetrize().unwrap_err();
        assert!(matches!(err, Error::Consistency { index: 0, .. }));
    }

    #[test]
    fn symmetrized_entries_are_weighted_matrix_elements() {
        // <A f_m, f_n>_w with f_m = w_m^(-1/2) e_m equals M[n, m].
        let p = ModelParams::new(0.8, 1.3, 12).unwrap();
        let g = build_generator(&p);
        let m_sym = g.symmetrize().unwrap().as_tridiagonal();
        let n = g.dim();
        for m in 0..n - 1 {
            let mut fm = vec![0.0; n];
            fm[m] = crate::math::exp(-0.4 * m as f64);
            let afm = g.apply(&fm).unwrap();
            for k in 0..n - 1 {
                let mut fk = vec![0.0; n];
                fk[k] = crate::math::exp(-0.4 * k as f64);
                let ip = weighted_dot(&afm, &fk, 0.8).unwrap();
                assert!(close(ip, m_sym.get(k, m), 1e-12), "({k},{m})");
            }
        }
    }

    #[test]
    fn split_reassembles_exactly() {
        let g = build_generator(&ln2(30));
        let st = split_st(&g);
        assert!(close(st.s[0], -0.5, 1e-15));
        assert_eq!(&st.reassemble(), g.matrix());
    }

    #[test]
    fn quadratic_form_vanishes_on_gibbs() {
        let p = ModelParams::new(1.0, 1.0, 100).unwrap();
        let g = build_generator(&p);
        let gibbs: Vec<Complex64> = gibbs_distribution(&p)
            .values()
            .iter()
            .map(|&x| Complex64::new(x, 0.0))
            .collect();
        let norm2 = weighted_norm_complex(&gibbs, 1.0).powi(2);
        assert!(quadratic_form(&g, &gibbs).unwrap().abs() <= 1e-12 * norm2);
        let rotated: Vec<Complex64> = gibbs.iter().map(|x| x * Complex64::i()).collect();
        assert!(quadratic_form(&g, &rotated).unwrap().abs() <= 1e-12 * norm2);
    }

    #[test]
    fn quadratic_form_strictly_negative_off_gibbs() {
        // e0 with its Gibbs component removed.
        let p = ln2(60);
        let g = build_generator(&p);
        let gibbs = gibbs_distribution(&p);
        let gv = gibbs.values();
        let mut q = vec![0.0; 61];
        q[0] = 1.0;
        let coef = weighted_dot(&q, gv, LN_2).unwrap() / weighted_dot(gv, gv, LN_2).unwrap();
        q.iter_mut().zip(gv).for_each(|(x, g)| *x -= coef * g);
        assert!(quadratic_form_real(&g, &q).unwrap() < -1e-3);
    }

    #[test]
    fn resolvent_bound_on_gibbs() {
        let p = ModelParams::new(1.0, 1.0, 80).unwrap();
        let g = build_generator(&p);
        let q: Vec<Complex64> = gibbs_distribution(&p)
            .values()
            .iter()
            .map(|&x| Complex64::new(x, 0.0))
            .collect();
        let (lhs, rhs) = resolvent_lower_bound(&g, Complex64::new(1.0, 0.0), &q).unwrap();
        assert!(lhs >= rhs - 1e-12);
        assert!(close(lhs, rhs, 1e-12));
        assert!(resolvent_lower_bound(&g, Complex64::new(0.0, 1.0), &q).is_err());
    }

    #[test]
    fn t_s_inverse_rejects_nonpositive_shift() {
        let st = split_st(&build_generator(&ln2(5)));
        let q = vec![Complex64::new(1.0, 0.0); 6];
        assert!(st.t_s_nu_inverse(0.0, &q).is_err());
        assert!(st.t_s_nu_inverse(1.0, &q[..3]).is_err());
    }
}
