use crate::error::{Error, Result};
use crate::infotheory::{Constellation, GaussianLaw, LinkTable};
use crate::linalg::{self, CMatrix};

use super::{IssueKind, ValidationReport};

/// MIMO Gaussian many-to-one channel with identity noise covariance:
/// `Y_0 = H_00 X_0 + Σ_i H_0i X_i + Z_0`, `Y_i = H_ii X_i + Z_i`.
#[derive(Debug, Clone, PartialEq)]
pub struct GaussianMto {
    direct: Vec<CMatrix>,
    cross: Vec<CMatrix>,
    powers: Vec<f64>,
    constellations: Option<Vec<Constellation>>,
}

impl GaussianMto {
    /// `cross[j]` is the link from interferer `j + 1` into receiver 0.
    pub fn new(direct: Vec<CMatrix>, cross: Vec<CMatrix>, powers: Vec<f64>) -> Result<Self> {
        let k = direct.len();
        if k < 2 {
            return Err(Error::Dimension(format!("need at least two users, got {k}")));
        }
        if cross.len() != k - 1 || powers.len() != k {
            return Err(Error::Dimension(format!(
                "{k} direct links need {} cross links and {k} powers, got {} and {}",
                k - 1,
                cross.len(),
                powers.len()
            )));
        }
        let n1 = direct[0].nrows();
        for (j, h) in cross.iter().enumerate() {
            let m = direct[j + 1].ncols();
            if h.nrows() != n1 || h.ncols() != m {
                return Err(Error::Dimension(format!(
                    "cross link of user {} is {}x{}, expected {n1}x{m}",
                    j + 2,
                    h.nrows(),
                    h.ncols()
                )));
            }
        }
        if let Some((i, p)) = powers.iter().enumerate().find(|(_, p)| !p.is_finite() || **p < 0.0) {
            return Err(Error::InvalidGain(format!("power of user {} is {p}", i + 1)));
        }
        Ok(Self {
            direct,
            cross,
            powers,
            constellations: None,
        })
    }

    /// Scalar channel from real or complex gains.
    pub fn scalar(direct: &[num_complex::Complex64], cross: &[num_complex::Complex64], powers: Vec<f64>) -> Result<Self> {
        Self::new(
            direct.iter().map(|&h| linalg::scalar(h)).collect(),
            cross.iter().map(|&h| linalg::scalar(h)).collect(),
            powers,
        )
    }

    /// Restricts every user to a finite constellation (scalar inputs only).
    pub fn with_constellations(mut self, constellations: Vec<Constellation>) -> Result<Self> {
        if constellations.len() != self.num_users() {
            return Err(Error::Dimension(format!(
                "{} constellations for {} users",
                constellations.len(),
                self.num_users()
            )));
        }
        if !self.is_scalar() {
            return Err(Error::Dimension("constellation inputs need a scalar channel".into()));
        }
        self.constellations = Some(constellations);
        Ok(self)
    }

    pub fn num_users(&self) -> usize {
        self.direct.len()
    }

    pub fn direct(&self, user: usize) -> &CMatrix {
        &self.direct[user]
    }

    /// Link from interferer `user ≥ 1` into receiver 0.
    pub fn cross(&self, user: usize) -> &CMatrix {
        &self.cross[user - 1]
    }

    pub fn powers(&self) -> &[f64] {
        &self.powers
    }

    pub fn constellations(&self) -> Option<&[Constellation]> {
        self.constellations.as_deref()
    }

    pub fn input_dim(&self, user: usize) -> usize {
        self.direct[user].ncols()
    }

    pub fn is_scalar(&self) -> bool {
        self.direct.iter().chain(&self.cross).all(|h| h.nrows() == 1 && h.ncols() == 1)
    }

    pub fn with_powers(&self, powers: Vec<f64>) -> Result<Self> {
        let mut out = Self::new(self.direct.clone(), self.cross.clone(), powers)?;
        out.constellations = self.constellations.clone();
        Ok(out)
    }

    pub fn link_table(&self) -> LinkTable {
        let k = self.num_users();
        (0..k)
            .map(|rx| {
                (0..k)
                    .map(|tx| match (rx, tx) {
                        (0, 0) => Some(self.direct[0].clone()),
                        (0, t) => Some(self.cross[t - 1].clone()),
                        (r, t) if r == t => Some(self.direct[r].clone()),
                        _ => None,
                    })
                    .collect()
            })
            .collect()
    }

    pub fn validate(&self) -> ValidationReport {
        let mut report = ValidationReport::default();
        for (i, h) in self.direct.iter().chain(&self.cross).enumerate() {
            if h.iter().any(|z| !z.re.is_finite() || !z.im.is_finite()) {
                report.push(IssueKind::Dimension, format!("link matrix {i} has a non-finite entry"));
            }
        }
        for (i, h) in self.direct.iter().enumerate().skip(1) {
            if linalg::max_abs(h) == 0.0 {
                report.push(IssueKind::NonPositive, format!("direct link of user {} is zero", i + 1));
            }
        }
        report
    }

    /// `N(0, I + Σ_i H_0i Γ_i H_0i†)`.
    pub fn interference_law(&self, covs: &[CMatrix]) -> Result<GaussianLaw> {
        if covs.len() != self.num_users() {
            return Err(Error::Dimension(format!("{} covariances for {} users", covs.len(), self.num_users())));
        }
        let n1 = self.direct[0].nrows();
        let mut cov = linalg::identity(n1);
        for (j, h) in self.cross.iter().enumerate() {
            let g = &covs[j + 1];
            if g.nrows() != h.ncols() || g.ncols() != h.ncols() {
                return Err(Error::Dimension(format!(
                    "covariance of user {} is {}x{}, expected {m}x{m}",
                    j + 2,
                    g.nrows(),
                    g.ncols(),
                    m = h.ncols()
                )));
            }
            linalg::ensure_psd(g, &format!("input covariance of user {}", j + 2))?;
            cov += h * g * h.adjoint();
        }
        GaussianLaw::zero_mean(linalg::hermitian_part(&cov))
    }
}

/// Rayleigh-fading statistics: link `H_ij ~ CN(0, σ_ij²)` for `i = 0` or `i = j`.
#[derive(Debug, Clone, PartialEq)]
pub struct FadingMto {
    sigma_direct: Vec<f64>,
    sigma_cross: Vec<f64>,
    powers: Vec<f64>,
}

impl FadingMto {
    pub fn new(sigma_direct: Vec<f64>, sigma_cross: Vec<f64>, powers: Vec<f64>) -> Result<Self> {
        let k = sigma_direct.len();
        if k < 2 || sigma_cross.len() != k - 1 || powers.len() != k {
            return Err(Error::Dimension(format!(
                "{k} direct deviations need {} cross deviations and {k} powers, got {} and {}",
                k.saturating_sub(1),
                sigma_cross.len(),
                powers.len()
            )));
        }
        Ok(Self {
            sigma_direct,
            sigma_cross,
            powers,
        })
    }

    pub fn num_users(&self) -> usize {
        self.sigma_direct.len()
    }

    pub fn sigma_direct(&self) -> &[f64] {
        &self.sigma_direct
    }

    /// `σ_0i` for interferers `i = 1..K`, in that order.
    pub fn sigma_cross(&self) -> &[f64] {
        &self.sigma_cross
    }

    pub fn powers(&self) -> &[f64] {
        &self.powers
    }

    pub fn validate(&self) -> ValidationReport {
        let mut report = ValidationReport::default();
        for (i, &s) in self.sigma_direct.iter().enumerate() {
            if !(s > 0.0 && s.is_finite()) {
                report.push(IssueKind::NonPositive, format!("direct deviation of user {} is {s}", i + 1));
            }
        }
        // A zero cross deviation is a missing link.
        for (j, &s) in self.sigma_cross.iter().enumerate() {
            if !(s >= 0.0 && s.is_finite()) {
                report.push(IssueKind::NonPositive, format!("cross deviation of user {} is {s}", j + 2));
            }
        }
        for (i, &p) in self.powers.iter().enumerate() {
            if !(p >= 0.0 && p.is_finite()) {
                report.push(IssueKind::NonPositive, format!("power of user {} is {p}", i + 1));
            }
        }
        report
    }
}
