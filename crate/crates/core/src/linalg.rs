//! Small complex linear-algebra helpers on top of nalgebra.

use nalgebra::{DMatrix, SymmetricEigen};
use num_complex::Complex64;

use crate::error::{Error, Result};

pub type CMatrix = DMatrix<Complex64>;

/// Tolerance on Hermitian symmetry and on negative eigenvalues of covariances.
pub const PSD_TOL: f64 = 1e-10;

pub fn c(re: f64, im: f64) -> Complex64 {
    Complex64::new(re, im)
}

pub fn identity(n: usize) -> CMatrix {
    CMatrix::identity(n, n)
}

/// 1x1 matrix.
pub fn scalar(v: Complex64) -> CMatrix {
    CMatrix::from_element(1, 1, v)
}

pub fn real_scalar(v: f64) -> CMatrix {
    scalar(c(v, 0.0))
}

pub fn column(entries: &[Complex64]) -> CMatrix {
    CMatrix::from_column_slice(entries.len(), 1, entries)
}

pub fn row(entries: &[Complex64]) -> CMatrix {
    CMatrix::from_row_slice(1, entries.len(), entries)
}

pub fn diag(entries: &[Complex64]) -> CMatrix {
    let n = entries.len();
    let mut m = CMatrix::zeros(n, n);
    for (i, e) in entries.iter().enumerate() {
        m[(i, i)] = *e;
    }
    m
}

pub fn max_abs(m: &CMatrix) -> f64 {
    m.iter().map(|z| z.norm()).fold(0.0, f64::max)
}

pub fn is_hermitian(m: &CMatrix, tol: f64) -> bool {
    m.is_square() && max_abs(&(m - m.adjoint())) <= tol * max_abs(m).max(1.0)
}

/// Symmetrized copy, removes rounding asymmetry before eigen-decomposition.
pub fn hermitian_part(m: &CMatrix) -> CMatrix {
    (m + m.adjoint()).scale(0.5)
}

/// Real eigenvalues of the Hermitian part of `m`, ascending.
pub fn hermitian_eigenvalues(m: &CMatrix) -> Vec<f64> {
    if m.nrows() == 0 {
        return Vec::new();
    }
    let eig = SymmetricEigen::new(hermitian_part(m));
    let mut vals: Vec<f64> = eig.eigenvalues.iter().copied().collect();
    vals.sort_by(f64::total_cmp);
    vals
}

pub fn min_eigenvalue(m: &CMatrix) -> f64 {
    hermitian_eigenvalues(m).first().copied().unwrap_or(0.0)
}

/// Errors unless `m` is Hermitian with eigenvalues at or above `-PSD_TOL`.
pub fn ensure_psd(m: &CMatrix, what: &str) -> Result<()> {
    if !m.is_square() {
        return Err(Error::Dimension(format!(
            "{what} is {}x{}, expected square",
            m.nrows(),
            m.ncols()
        )));
    }
    if !is_hermitian(m, PSD_TOL) {
        return Err(Error::NotPsd(format!("{what} is not Hermitian")));
    }
    let lo = min_eigenvalue(m);
    if lo < -PSD_TOL * max_abs(m).max(1.0) {
        return Err(Error::NotPsd(format!("{what} has eigenvalue {lo:e}")));
    }
    Ok(())
}

/// log2 det of a Hermitian positive-definite matrix.
pub fn log2_det_hpd(m: &CMatrix) -> Result<f64> {
    if m.nrows() == 0 {
        return Ok(0.0);
    }
    let h = hermitian_part(m);
    if let Some(chol) = h.clone().cholesky() {
        let l = chol.l();
        let ln: f64 = (0..l.nrows()).map(|i| l[(i, i)].re.ln()).sum();
        return Ok(2.0 * ln / std::f64::consts::LN_2);
    }
    let vals = hermitian_eigenvalues(&h);
    if vals.iter().any(|&v| v <= 0.0) {
        return Err(Error::Singular(format!(
            "log-det of a matrix with eigenvalue {:e}",
            vals[0]
        )));
    }
    Ok(vals.iter().map(|v| v.log2()).sum())
}

pub fn pinv(m: &CMatrix) -> Result<CMatrix> {
    let eps = 1e-12 * max_abs(m).max(1.0);
    m.clone()
        .pseudo_inverse(eps)
        .map_err(|e| Error::Singular(e.to_string()))
}

/// Euclidean projection of `v` onto `{x >= 0, sum x <= cap}`.
pub fn project_capped_simplex(v: &[f64], cap: f64) -> Vec<f64> {
    let clipped: Vec<f64> = v.iter().map(|x| x.max(0.0)).collect();
    if clipped.iter().sum::<f64>() <= cap {
        return clipped;
    }
    project_simplex(v, cap)
}

/// Euclidean projection of `v` onto `{x >= 0, sum x = total}`.
pub fn project_simplex(v: &[f64], total: f64) -> Vec<f64> {
    let mut sorted = v.to_vec();
    sorted.sort_by(|a, b| b.total_cmp(a));
    let mut cumsum = 0.0;
    let mut theta = 0.0;
    for (j, &u) in sorted.iter().enumerate() {
        cumsum += u;
        let t = (cumsum - total) / (j as f64 + 1.0);
        if u - t > 0.0 {
            theta = t;
        }
    }
    v.iter().map(|x| (x - theta).max(0.0)).collect()
}

/// Projection of a Hermitian matrix onto `{G ⪰ 0, tr G <= cap}` (Frobenius norm).
pub fn project_psd_trace(m: &CMatrix, cap: f64) -> CMatrix {
    let eig = SymmetricEigen::new(hermitian_part(m));
    let vals: Vec<f64> = eig.eigenvalues.iter().copied().collect();
    let proj = project_capped_simplex(&vals, cap);
    rebuild(&eig.eigenvectors, &proj)
}

/// `V diag(vals) V†`.
pub fn rebuild(vectors: &CMatrix, vals: &[f64]) -> CMatrix {
    let d = diag(&vals.iter().map(|&v| c(v, 0.0)).collect::<Vec<_>>());
    hermitian_part(&(vectors * d * vectors.adjoint()))
}

/// Real trace of a Hermitian matrix.
pub fn trace_re(m: &CMatrix) -> f64 {
    m.trace().re
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn log_det_of_diagonal() {
        let m = diag(&[c(2.0, 0.0), c(4.0, 0.0)]);
        assert!((log2_det_hpd(&m).unwrap() - 3.0).abs() < 1e-12);
    }

    #[test]
    fn simplex_projection_sums_to_total() {
        let p = project_simplex(&[0.9, 0.8, -0.3], 1.0);
        assert!((p.iter().sum::<f64>() - 1.0).abs() < 1e-12);
        assert!(p.iter().all(|&x| x >= 0.0));
        assert_eq!(project_capped_simplex(&[0.2, -1.0], 1.0), vec![0.2, 0.0]);
    }

    #[test]
    fn psd_projection_caps_trace() {
        let m = diag(&[c(3.0, 0.0), c(-1.0, 0.0)]);
        let p = project_psd_trace(&m, 2.0);
        assert!((trace_re(&p) - 2.0).abs() < 1e-12);
        assert!(min_eigenvalue(&p) > -1e-12);
    }

    #[test]
    fn rejects_non_hermitian() {
        let m = CMatrix::from_row_slice(2, 2, &[c(1.0, 0.0), c(1.0, 0.0), c(0.0, 0.0), c(1.0, 0.0)]);
        assert!(matches!(ensure_psd(&m, "m"), Err(Error::NotPsd(_))));
    }
}
