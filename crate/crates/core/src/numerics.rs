//! Dense complex linear algebra used throughout the crate.
//!
//! Matrices are plain `nalgebra` dynamic matrices over `Complex<f64>`. The
//! functions here add the conventions the design code relies on: singular
//! values sorted in descending order, a unit-lower-triangular LDLᴴ
//! factorization, and positive-definite solves that never form an explicit
//! inverse.

use nalgebra::{Complex, DMatrix, DVector};

use crate::error::{Error, Result};

pub type C64 = Complex<f64>;
pub type CMatrix = DMatrix<C64>;
pub type CVector = DVector<C64>;

/// Relative eigenvalue floor below which a Hermitian matrix is treated as
/// not positive definite.
pub const PD_RELATIVE_THRESHOLD: f64 = 1e-12;

/// Relative asymmetry tolerated when a matrix is expected to be Hermitian.
pub const HERMITIAN_TOLERANCE: f64 = 1e-12;

#[inline]
pub fn c64(re: f64, im: f64) -> C64 {
    C64::new(re, im)
}

/// Thin singular value decomposition `A = U · diag(sigma) · Vᴴ`.
#[derive(Debug, Clone)]
pub struct SvdFactors {
    /// `rows × k` with orthonormal columns, `k = min(rows, cols)`.
    pub u: CMatrix,
    /// Singular values, descending.
    pub sigma: Vec<f64>,
    /// `cols × k` with orthonormal columns.
    pub v: CMatrix,
}

impl SvdFactors {
    pub fn reconstruct(&self) -> CMatrix {
        let mut us = self.u.clone();
        for (j, s) in self.sigma.iter().enumerate() {
            us.column_mut(j).scale_mut(*s);
        }
        us * self.v.adjoint()
    }
}

pub fn ensure_finite(a: &CMatrix, what: &'static str) -> Result<()> {
    if a.iter().all(|z| z.re.is_finite() && z.im.is_finite()) {
        Ok(())
    } else {
        Err(Error::NonFinite(what))
    }
}

/// SVD with singular values in descending order.
///
/// Ties between equal singular values are left in whatever order the
/// underlying routine produced; only the reconstruction is guaranteed.
pub fn svd_ordered(a: &CMatrix) -> Result<SvdFactors> {
    ensure_finite(a, "svd input")?;
    let (m, n) = a.shape();
    let k = m.min(n);
    if k == 0 {
        return Ok(SvdFactors {
            u: CMatrix::zeros(m, 0),
            sigma: Vec::new(),
            v: CMatrix::zeros(n, 0),
        });
    }
    let svd = a.clone().svd(true, true);
    let u_raw = svd.u.expect("u requested");
    let v_t_raw = svd.v_t.expect("v_t requested");
    let s_raw = svd.singular_values;

    let mut order: Vec<usize> = (0..k).collect();
    // Stable sort keeps the original index order on exact ties.
    order.sort_by(|&i, &j| s_raw[j].partial_cmp(&s_raw[i]).unwrap_or(std::cmp::Ordering::Equal));

    let mut u = CMatrix::zeros(m, k);
    let mut v = CMatrix::zeros(n, k);
    let mut sigma = Vec::with_capacity(k);
    for (dst, &src) in order.iter().enumerate() {
        u.set_column(dst, &u_raw.column(src));
        v.set_column(dst, &v_t_raw.row(src).adjoint());
        sigma.push(s_raw[src].max(0.0));
    }
    Ok(SvdFactors { u, sigma, v })
}

/// Frobenius norm squared, `‖A‖²`.
pub fn frob2(a: &CMatrix) -> f64 {
    a.iter().map(|z| z.norm_sqr()).sum()
}

/// Real part of the trace.
pub fn trace_re(a: &CMatrix) -> f64 {
    a.diagonal().iter().map(|z| z.re).sum()
}

/// Largest entrywise distance from Hermitian symmetry, relative to `‖A‖`.
pub fn hermitian_defect(a: &CMatrix) -> f64 {
    let scale = frob2(a).sqrt().max(f64::MIN_POSITIVE);
    let n = a.nrows();
    let mut worst = 0.0_f64;
    for i in 0..n {
        for j in 0..=i {
            worst = worst.max((a[(i, j)] - a[(j, i)].conj()).norm());
        }
    }
    worst / scale
}

fn check_square(a: &CMatrix, context: &'static str) -> Result<()> {
    if a.nrows() != a.ncols() {
        return Err(Error::DimensionMismatch {
            context,
            expected: "square matrix".into(),
            found: format!("{}x{}", a.nrows(), a.ncols()),
        });
    }
    Ok(())
}

/// Smallest eigenvalue of a Hermitian matrix.
pub fn min_eigenvalue_hermitian(a: &CMatrix) -> f64 {
    if a.nrows() == 0 {
        return f64::INFINITY;
    }
    let h = (a + a.adjoint()).scale(0.5);
    h.symmetric_eigenvalues().iter().copied().fold(f64::INFINITY, f64::min)
}

/// Checks that `a` is Hermitian and its smallest eigenvalue exceeds
/// `PD_RELATIVE_THRESHOLD · ‖a‖`.
pub fn ensure_hermitian_pd(a: &CMatrix) -> Result<()> {
    check_square(a, "positive-definite check")?;
    ensure_finite(a, "hermitian matrix")?;
    let defect = hermitian_defect(a);
    if defect > HERMITIAN_TOLERANCE {
        return Err(Error::NotHermitian(defect));
    }
    let threshold = PD_RELATIVE_THRESHOLD * frob2(a).sqrt();
    let min_eig = min_eigenvalue_hermitian(a);
    if min_eig <= threshold {
        return Err(Error::NotPositiveDefinite {
            min_eigenvalue: min_eig,
            threshold,
        });
    }
    Ok(())
}

/// Factorizes a Hermitian positive-definite `J = L · diag(delta) · Lᴴ` with
/// `L` unit lower triangular.
pub fn ldl_unit_lower(j: &CMatrix) -> Result<(CMatrix, Vec<f64>)> {
    ensure_hermitian_pd(j)?;
    let n = j.nrows();
    let mut l = CMatrix::identity(n, n);
    let mut delta = vec![0.0; n];
    for c in 0..n {
        let mut d = j[(c, c)].re;
        for k in 0..c {
            d -= l[(c, k)].norm_sqr() * delta[k];
        }
        if d <= 0.0 {
            return Err(Error::NotPositiveDefinite {
                min_eigenvalue: min_eigenvalue_hermitian(j),
                threshold: PD_RELATIVE_THRESHOLD * frob2(j).sqrt(),
            });
        }
        delta[c] = d;
        for r in (c + 1)..n {
            let mut acc = j[(r, c)];
            for k in 0..c {
                acc -= l[(r, k)] * l[(c, k)].conj() * delta[k];
            }
            l[(r, c)] = acc / d;
        }
    }
    Ok((l, delta))
}

/// Solves `A · X = B` for Hermitian positive-definite `A` by Cholesky.
pub fn hermitian_solve(a: &CMatrix, b: &CMatrix) -> Result<CMatrix> {
    check_square(a, "hermitian_solve")?;
    if a.nrows() != b.nrows() {
        return Err(Error::DimensionMismatch {
            context: "hermitian_solve",
            expected: format!("{} rows", a.nrows()),
            found: format!("{} rows", b.nrows()),
        });
    }
    ensure_finite(a, "hermitian_solve lhs")?;
    ensure_finite(b, "hermitian_solve rhs")?;
    let sym = (a + a.adjoint()).scale(0.5);
    match sym.clone().cholesky() {
        Some(ch) => Ok(ch.solve(b)),
        None => Err(Error::NotPositiveDefinite {
            min_eigenvalue: min_eigenvalue_hermitian(&sym),
            threshold: PD_RELATIVE_THRESHOLD * frob2(&sym).sqrt(),
        }),
    }
}

/// Inverse of a Hermitian positive-definite matrix via [`hermitian_solve`].
pub fn hermitian_inverse(a: &CMatrix) -> Result<CMatrix> {
    hermitian_solve(a, &CMatrix::identity(a.nrows(), a.nrows()))
}

/// Determinant of a Hermitian positive-definite matrix (real, positive).
pub fn det_hpd(a: &CMatrix) -> Result<f64> {
    Ok(log_det_hpd(a)?.exp())
}

pub fn log_det_hpd(a: &CMatrix) -> Result<f64> {
    check_square(a, "log_det_hpd")?;
    let sym = (a + a.adjoint()).scale(0.5);
    let ch = sym.clone().cholesky().ok_or_else(|| Error::NotPositiveDefinite {
        min_eigenvalue: min_eigenvalue_hermitian(&sym),
        threshold: PD_RELATIVE_THRESHOLD * frob2(&sym).sqrt(),
    })?;
    Ok(ch.l().diagonal().iter().map(|z| 2.0 * z.re.ln()).sum())
}

/// Inverse of a unit lower-triangular matrix by forward substitution.
pub fn unit_lower_inverse(l: &CMatrix) -> CMatrix {
    let n = l.nrows();
    let mut inv = CMatrix::identity(n, n);
    for c in 0..n {
        for r in (c + 1)..n {
            let mut acc = C64::new(0.0, 0.0);
            for k in c..r {
                acc += l[(r, k)] * inv[(k, c)];
            }
            inv[(r, c)] = -acc;
        }
    }
    inv
}

/// `|a − b| / |b|`.
pub fn rel_diff(a: f64, b: f64) -> f64 {
    (a - b).abs() / b.abs().max(f64::MIN_POSITIVE)
}

/// `diag(values)` as a complex matrix.
pub fn real_diag(values: &[f64]) -> CMatrix {
    let n = values.len();
    let mut d = CMatrix::zeros(n, n);
    for (k, v) in values.iter().enumerate() {
        d[(k, k)] = c64(*v, 0.0);
    }
    d
}
