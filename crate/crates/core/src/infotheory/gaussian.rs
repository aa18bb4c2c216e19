//! Circularly symmetric complex Gaussian closed forms. Differential entropies
//! only ever appear in differences here, so every quantity is a log-det ratio.

use nalgebra::DVector;
use num_complex::Complex64;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::linalg::{self, CMatrix};

/// `N(mean, covariance)` over complex vectors.
#[derive(Debug, Clone, PartialEq)]
pub struct GaussianLaw {
    pub mean: DVector<Complex64>,
    pub covariance: CMatrix,
}

impl GaussianLaw {
    pub fn new(mean: DVector<Complex64>, covariance: CMatrix) -> Result<Self> {
        if covariance.nrows() != mean.len() {
            return Err(Error::Dimension(format!(
                "mean has length {}, covariance is {}x{}",
                mean.len(),
                covariance.nrows(),
                covariance.ncols()
            )));
        }
        linalg::ensure_psd(&covariance, "covariance")?;
        Ok(Self { mean, covariance })
    }

    pub fn zero_mean(covariance: CMatrix) -> Result<Self> {
        Self::new(DVector::zeros(covariance.nrows()), covariance)
    }

    pub fn dim(&self) -> usize {
        self.mean.len()
    }
}

/// `links[rx][tx]` holds `H_{rx,tx}`; `None` means no link.
pub type LinkTable = Vec<Vec<Option<CMatrix>>>;

#[derive(Debug, Clone, Serialize)]
pub struct SumRate {
    pub total: f64,
    pub per_user: Vec<f64>,
}

/// Treat-interference-as-noise sum rate with Gaussian inputs of covariances
/// `covs`, unit-covariance noise at each receiver:
/// `Σ_i log2 det(I + Σ_k H_ik Γ_k H_ik†) − log2 det(I + Σ_{k≠i} H_ik Γ_k H_ik†)`.
pub fn gaussian_sum_rate(links: &LinkTable, covs: &[CMatrix]) -> Result<SumRate> {
    let k = links.len();
    if covs.len() != k {
        return Err(Error::Dimension(format!(
            "{} covariances for {k} users",
            covs.len()
        )));
    }
    for (i, g) in covs.iter().enumerate() {
        linalg::ensure_psd(g, &format!("input covariance of user {i}"))?;
    }
    let mut per_user = Vec::with_capacity(k);
    for (i, row) in links.iter().enumerate() {
        if row.len() != k {
            return Err(Error::Dimension(format!(
                "receiver {i} lists {} links for {k} users",
                row.len()
            )));
        }
        let n = row
            .iter()
            .flatten()
            .map(|h| h.nrows())
            .next()
            .ok_or_else(|| Error::Dimension(format!("receiver {i} has no incoming link")))?;
        let mut full = linalg::identity(n);
        let mut interference = linalg::identity(n);
        for (tx, h) in row.iter().enumerate() {
            let Some(h) = h else { continue };
            if h.nrows() != n || h.ncols() != covs[tx].nrows() {
                return Err(Error::Dimension(format!(
                    "H[{i}][{tx}] is {}x{}, expected {n}x{}",
                    h.nrows(),
                    h.ncols(),
                    covs[tx].nrows()
                )));
            }
            let term = h * &covs[tx] * h.adjoint();
            full += &term;
            if tx != i {
                interference += term;
            }
        }
        let rate = linalg::log2_det_hpd(&full)? - linalg::log2_det_hpd(&interference)?;
        per_user.push(rate.max(0.0));
    }
    Ok(SumRate {
        total: per_user.iter().sum(),
        per_user,
    })
}

/// Gaussian-input value of `h(B) − h(C)` for `B = A + Z1`, `C = B + Z2`,
/// `A ~ N(0, Γ)`, up to the dimension-only constant that cancels:
/// `log2 det(Γ + Λ1) − log2 det(Γ + Λ1 + Λ2)`.
pub fn gaussian_extremal_optimum(gamma: &CMatrix, noise1: &CMatrix, noise2: &CMatrix) -> Result<f64> {
    let n = gamma.nrows();
    for (m, what) in [(gamma, "input covariance"), (noise1, "first noise"), (noise2, "second noise")] {
        if m.nrows() != n || m.ncols() != n {
            return Err(Error::Dimension(format!("{what} is {}x{}, expected {n}x{n}", m.nrows(), m.ncols())));
        }
        linalg::ensure_psd(m, what)?;
    }
    let lo = linalg::min_eigenvalue(noise1);
    if lo <= 1e-12 * linalg::max_abs(noise1).max(1.0) {
        return Err(Error::Singular(format!(
            "first noise covariance has eigenvalue {lo:e}"
        )));
    }
    let b = gamma + noise1;
    let c = &b + noise2;
    Ok(linalg::log2_det_hpd(&b)? - linalg::log2_det_hpd(&c)?)
}

fn sub_log2_det(cov: &CMatrix, idx: &[usize]) -> Result<f64> {
    if idx.is_empty() {
        return Ok(0.0);
    }
    let sub = CMatrix::from_fn(idx.len(), idx.len(), |r, c| cov[(idx[r], idx[c])]);
    linalg::log2_det_hpd(&sub)
}

/// `I(A; B | C)` for jointly Gaussian coordinates of a covariance matrix.
pub fn gaussian_conditional_mi(cov: &CMatrix, a: &[usize], b: &[usize], given: &[usize]) -> Result<f64> {
    linalg::ensure_psd(cov, "joint covariance")?;
    let cat = |x: &[usize], y: &[usize]| -> Vec<usize> { x.iter().chain(y).copied().collect() };
    let ac = cat(a, given);
    let bc = cat(b, given);
    let abc = cat(&ac, b);
    let mi = sub_log2_det(cov, &ac)? + sub_log2_det(cov, &bc)? - sub_log2_det(cov, &abc)? - sub_log2_det(cov, given)?;
    Ok(mi.max(0.0))
}
