//! Membership tests for the noisy-interference regime.
//!
//! The discrete test searches for a degrading map `q(v | y_2..y_K)` by linear
//! programming. The Gaussian tests are closed-form ratio checks plus a
//! pseudo-inverse test of degradedness for linear Gaussian links, which is
//! sufficient but not exhaustive.

use num_complex::Complex64;
use serde::Serialize;

use crate::channels::{DiscreteMto, FadingMto, GaussianMto};
use crate::error::{Error, Result};
use crate::infotheory::discrete::unflatten;
use crate::infotheory::gaussian_conditional_mi;
use crate::linalg::{self, CMatrix};
use crate::lp::{Cmp, LinearProgram, LpOutcome};

/// Tolerance on residuals and PSD-order comparisons.
pub const REGIME_TOL: f64 = 1e-9;

/// Largest `|Y_2 × .. × Y_K|` accepted by the degradedness LP.
pub const MAX_LP_OUTPUTS: usize = 4096;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Method {
    DegradedLp,
    Eq1Siso,
    Simo,
    MimoDiagonal,
    Fading,
    Corollary1,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Witness {
    /// `map[y][v] = q(v | y)` with `y` row-major over the interferers' outputs.
    DegradingMap { map: Vec<Vec<f64>>, residual: f64 },
    ConditionalMi { user: usize, bits: f64 },
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RegimeReport {
    pub verdict: bool,
    /// Slack of the binding inequality; negative when violated.
    pub margin: f64,
    pub method: Method,
    /// Within tolerance of the boundary.
    pub boundary: bool,
    pub witness: Option<Witness>,
    pub notes: Vec<String>,
}

impl RegimeReport {
    fn from_margin(margin: f64, method: Method) -> Self {
        Self {
            verdict: margin >= -REGIME_TOL,
            margin,
            method,
            boundary: margin.abs() <= REGIME_TOL,
            witness: None,
            notes: Vec::new(),
        }
    }
}

/// Is `p(V | X)` a degraded form of `Π p(Y_i | X_i)`? Minimizes the largest
/// residual `|Σ_y q(v|y) Π p(y_i|x_i) − p(v|x)|` over stochastic `q`.
pub fn degraded_lp(ch: &DiscreteMto) -> Result<RegimeReport> {
    ch.ensure_valid()?;
    let k1 = ch.num_users() - 1;
    let y_sizes: Vec<usize> = (1..=k1).map(|i| ch.output_size(i)).collect();
    let x_sizes = ch.interferer_sizes();
    let ny: usize = y_sizes.iter().product();
    let nx: usize = x_sizes.iter().product();
    let nv = ch.v_size();
    if ny > MAX_LP_OUTPUTS {
        return Err(Error::TooLarge(format!("{ny} joint interferer outputs, at most {MAX_LP_OUTPUTS}")));
    }
    // p(y | x) for the product channel, dense [x][y]
    let mut pyx = vec![0.0; nx * ny];
    let (mut xi, mut yi) = (vec![0; k1], vec![0; k1]);
    for x in 0..nx {
        unflatten(x, x_sizes, &mut xi);
        for y in 0..ny {
            unflatten(y, &y_sizes, &mut yi);
            pyx[x * ny + y] = (0..k1).map(|j| ch.direct(j + 1).get(xi[j], yi[j])).product();
        }
    }
    let q = |y: usize, v: usize| y * nv + v;
    let t = ny * nv;
    let mut lp = LinearProgram::new(t + 1);
    for var in 0..t {
        lp.bound(var, 0.0, 1.0);
    }
    lp.bound(t, 0.0, f64::INFINITY);
    for y in 0..ny {
        lp.constraint((0..nv).map(|v| (q(y, v), 1.0)).collect(), Cmp::Eq, 1.0);
    }
    for x in 0..nx {
        for v in 0..nv {
            let mut terms: Vec<(usize, f64)> = (0..ny)
                .filter(|&y| pyx[x * ny + y] != 0.0)
                .map(|y| (q(y, v), pyx[x * ny + y]))
                .collect();
            let target = ch.interference().get(x, v);
            terms.push((t, -1.0));
            lp.constraint(terms.clone(), Cmp::Le, target);
            terms.last_mut().expect("pushed above").1 = 1.0;
            lp.constraint(terms, Cmp::Ge, target);
        }
    }
    let mut objective = vec![0.0; t + 1];
    objective[t] = 1.0;
    let x = match lp.minimize(&objective)? {
        LpOutcome::Optimal { x, .. } => x,
        other => return Err(Error::Lp(format!("degradedness program ended as {other:?}"))),
    };
    let map: Vec<Vec<f64>> = (0..ny).map(|y| (0..nv).map(|v| x[q(y, v)].clamp(0.0, 1.0)).collect()).collect();
    // Recompute the residual from the returned map rather than trusting the solver's t.
    let mut residual: f64 = 0.0;
    for xr in 0..nx {
        for v in 0..nv {
            let got: f64 = (0..ny).map(|y| pyx[xr * ny + y] * map[y][v]).sum();
            residual = residual.max((got - ch.interference().get(xr, v)).abs());
        }
    }
    for row in &map {
        residual = residual.max((row.iter().sum::<f64>() - 1.0).abs());
    }
    let verdict = residual <= REGIME_TOL;
    Ok(RegimeReport {
        verdict,
        margin: -residual,
        method: Method::DegradedLp,
        boundary: false,
        witness: verdict.then_some(Witness::DegradingMap { map, residual }),
        notes: if verdict {
            Vec::new()
        } else {
            vec![format!("smallest achievable residual {residual:e}")]
        },
    })
}

fn ratio_sum(cross: &[Complex64], direct: &[Complex64]) -> Result<f64> {
    if cross.len() != direct.len() {
        return Err(Error::Dimension(format!("{} cross gains for {} direct gains", cross.len(), direct.len())));
    }
    let mut s = 0.0;
    for (j, (c, d)) in cross.iter().zip(direct).enumerate() {
        if d.norm_sqr() == 0.0 || !d.norm_sqr().is_finite() {
            return Err(Error::InvalidGain(format!("direct gain of user {} is {d}", j + 2)));
        }
        s += c.norm_sqr() / d.norm_sqr();
    }
    Ok(s)
}

/// Scalar condition `Σ_j |H_1j|² / |H_jj|² ≤ 1` over the interferers.
pub fn check_eq1_siso(cross: &[Complex64], direct: &[Complex64]) -> Result<RegimeReport> {
    Ok(RegimeReport::from_margin(1.0 - ratio_sum(cross, direct)?, Method::Eq1Siso))
}

/// SIMO condition `Σ_i ‖H_1i‖² / ‖H_ii‖² ≤ 1` for column-vector links.
pub fn check_simo(cross: &[CMatrix], direct: &[CMatrix]) -> Result<RegimeReport> {
    if cross.len() != direct.len() {
        return Err(Error::Dimension(format!("{} cross links for {} direct links", cross.len(), direct.len())));
    }
    let mut s = 0.0;
    for (j, (c, d)) in cross.iter().zip(direct).enumerate() {
        if c.ncols() != 1 || d.ncols() != 1 {
            return Err(Error::Dimension(format!("links of user {} must be column vectors", j + 2)));
        }
        let nd = d.norm_squared();
        if nd == 0.0 {
            return Err(Error::InvalidGain(format!("direct vector of user {} is zero", j + 2)));
        }
        s += c.norm_squared() / nd;
    }
    Ok(RegimeReport::from_margin(1.0 - s, Method::Simo))
}

/// Diagonalized MIMO with a single-antenna receiver 1:
/// `Σ_i Σ_k |H_1i^(k)|² / |H_ii^(k)|² ≤ 1`. Both arguments are `[user][k]`.
pub fn check_mimo_diag(direct_diag: &[Vec<Complex64>], cross: &[Vec<Complex64>]) -> Result<RegimeReport> {
    if cross.len() != direct_diag.len() {
        return Err(Error::Dimension(format!("{} cross vectors for {} direct diagonals", cross.len(), direct_diag.len())));
    }
    let mut s = 0.0;
    for (j, (c, d)) in cross.iter().zip(direct_diag).enumerate() {
        if c.len() != d.len() {
            return Err(Error::Dimension(format!("user {} has {} cross entries for {} diagonal entries", j + 2, c.len(), d.len())));
        }
        for (k, (ck, dk)) in c.iter().zip(d).enumerate() {
            if dk.norm_sqr() == 0.0 {
                return Err(Error::InvalidGain(format!("diagonal entry {k} of user {} is zero", j + 2)));
            }
            s += ck.norm_sqr() / dk.norm_sqr();
        }
    }
    Ok(RegimeReport::from_margin(1.0 - s, Method::MimoDiagonal))
}

/// Rayleigh-fading condition `Σ_{i≥2} σ_1i / σ_ii ≤ 1` on fade deviations.
pub fn check_fading(sigma_cross: &[f64], sigma_direct: &[f64]) -> Result<RegimeReport> {
    if sigma_cross.len() != sigma_direct.len() {
        return Err(Error::Dimension(format!("{} cross deviations for {} direct deviations", sigma_cross.len(), sigma_direct.len())));
    }
    let mut s = 0.0;
    for (j, (&c, &d)) in sigma_cross.iter().zip(sigma_direct).enumerate() {
        if !(d > 0.0 && d.is_finite()) {
            return Err(Error::InvalidGain(format!("direct deviation of user {} is {d}", j + 2)));
        }
        if !(c >= 0.0 && c.is_finite()) {
            return Err(Error::InvalidGain(format!("cross deviation of user {} is {c}", j + 2)));
        }
        s += c / d;
    }
    let mut report = RegimeReport::from_margin(1.0 - s, Method::Fading);
    report
        .notes
        .push("condition uses ratios of fade standard deviations; variance ratios would square each term".into());
    Ok(report)
}

pub fn check_fading_channel(ch: &FadingMto) -> Result<RegimeReport> {
    check_fading(ch.sigma_cross(), &ch.sigma_direct()[1..])
}

/// General Gaussian test: `Σ Λ_i ⪯ I` and, for each interferer, `H_1i = D_i H_ii`
/// with `D_i = H_1i H_ii⁺` and `Λ_i ⪰ D_i D_i†`.
pub fn check_corollary1(ch: &GaussianMto, lambdas: &[CMatrix]) -> Result<RegimeReport> {
    let k1 = ch.num_users() - 1;
    if lambdas.len() != k1 {
        return Err(Error::Dimension(format!("{} noise covariances for {k1} interferers", lambdas.len())));
    }
    let n1 = ch.direct(0).nrows();
    let mut sum = CMatrix::zeros(n1, n1);
    for (j, l) in lambdas.iter().enumerate() {
        if l.nrows() != n1 || l.ncols() != n1 {
            return Err(Error::Dimension(format!(
                "noise covariance of user {} is {}x{}, expected {n1}x{n1}",
                j + 2,
                l.nrows(),
                l.ncols()
            )));
        }
        if !linalg::is_hermitian(l, linalg::PSD_TOL) {
            return Err(Error::NotPsd(format!("noise covariance of user {} is not Hermitian", j + 2)));
        }
        sum += l;
    }
    let mut margin = linalg::min_eigenvalue(&(linalg::identity(n1) - sum));
    let mut notes = Vec::new();
    let mut row_space_ok = true;
    for j in 0..k1 {
        let h1 = ch.cross(j + 1);
        let hii = ch.direct(j + 1);
        let d = h1 * linalg::pinv(hii)?;
        let residual = linalg::max_abs(&(h1 - &d * hii));
        if residual > REGIME_TOL * linalg::max_abs(h1).max(1.0) {
            row_space_ok = false;
            notes.push(format!("cross link of user {} leaves the row space of its direct link (residual {residual:e})", j + 2));
            margin = margin.min(-residual);
            continue;
        }
        let slack = linalg::min_eigenvalue(&(&lambdas[j] - &d * d.adjoint()));
        margin = margin.min(slack);
    }
    let mut report = RegimeReport::from_margin(margin, Method::Corollary1);
    report.verdict &= row_space_ok;
    report.boundary &= row_space_ok;
    if report.boundary {
        notes.push("on the boundary; the strict and non-strict forms of the condition disagree here".into());
    }
    report.notes = notes;
    Ok(report)
}

/// Smallest admissible choice `Λ_i = D_i D_i†`; exact for this family of degrading maps.
pub fn minimal_lambdas(ch: &GaussianMto) -> Result<Vec<CMatrix>> {
    (1..ch.num_users())
        .map(|i| {
            let d = ch.cross(i) * linalg::pinv(ch.direct(i))?;
            Ok(linalg::hermitian_part(&(&d * d.adjoint())))
        })
        .collect()
}

/// With `Λ_i = D_i D_i†` the second condition is tight by construction, so the
/// margin reported is that of `Σ Λ_i ⪯ I` alone.
pub fn check_corollary1_auto(ch: &GaussianMto) -> Result<RegimeReport> {
    let lambdas = minimal_lambdas(ch)?;
    let report = check_corollary1(ch, &lambdas)?;
    if !report.notes.iter().any(|n| n.contains("row space")) {
        let n1 = ch.direct(0).nrows();
        let sum = lambdas.iter().fold(CMatrix::zeros(n1, n1), |acc, l| acc + l);
        let mut auto = RegimeReport::from_margin(linalg::min_eigenvalue(&(linalg::identity(n1) - sum)), Method::Corollary1);
        if auto.boundary {
            auto.notes.push("on the boundary; the strict and non-strict forms of the condition disagree here".into());
        }
        return Ok(auto);
    }
    Ok(report)
}

/// Scalar gains of a SISO channel as `(cross, direct)` over the interferers.
pub fn siso_gains(ch: &GaussianMto) -> Result<(Vec<Complex64>, Vec<Complex64>)> {
    if !ch.is_scalar() {
        return Err(Error::Dimension("channel is not scalar".into()));
    }
    Ok((1..ch.num_users())
        .map(|i| (ch.cross(i)[(0, 0)], ch.direct(i)[(0, 0)]))
        .unzip())
}

/// Correlated-noise witness that a channel violating the scalar condition is
/// outside the degraded regime. With `E[Z_1 Z_i*] = ρ_i`, picks a user with
/// `|H_1i| / |H_ii| > |ρ_i|`, drives it with unit-variance Gaussian input and
/// returns `I(X_i; H_1i X_i + Z_1 | H_ii X_i + Z_i)`.
pub fn nondegraded_witness(cross: &[Complex64], direct: &[Complex64], rho: &[f64]) -> Result<Witness> {
    let s = ratio_sum(cross, direct)?;
    if s <= 1.0 + REGIME_TOL {
        return Err(Error::RegimeNotViolated(format!("ratio sum {s} does not exceed 1")));
    }
    if rho.len() != cross.len() {
        return Err(Error::Dimension(format!("{} correlations for {} interferers", rho.len(), cross.len())));
    }
    let r2: f64 = rho.iter().map(|r| r * r).sum();
    if r2 > 1.0 + REGIME_TOL {
        return Err(Error::RegimeNotViolated(format!(
            "noise correlations with Σρ² = {r2} exceed 1 and are not a valid covariance"
        )));
    }
    let (j, gap) = cross
        .iter()
        .zip(direct)
        .zip(rho)
        .map(|((c, d), r)| c.norm() / d.norm() - r.abs())
        .enumerate()
        .max_by(|a, b| a.1.total_cmp(&b.1))
        .expect("at least one interferer");
    if gap <= 0.0 {
        return Err(Error::RegimeNotViolated("no user has a cross ratio above its correlation".into()));
    }
    Ok(Witness::ConditionalMi {
        user: j + 2,
        bits: witness_mi(cross[j], direct[j], rho[j])?,
    })
}

/// `I(X; h1 X + Z_1 | h X + Z_i)` for `X ~ CN(0, 1)` and `E[Z_1 Z_i*] = ρ`.
/// With `|ρ| = 1` the noises coincide up to sign and `X` is recovered
/// exactly unless `h1 = ρ h`, so the value is infinite.
pub fn witness_mi(h1: Complex64, h: Complex64, rho: f64) -> Result<f64> {
    if rho.abs() > 1.0 + REGIME_TOL {
        return Err(Error::NotPsd(format!("noise correlation {rho} exceeds 1 in magnitude")));
    }
    if 1.0 - rho.abs() <= REGIME_TOL {
        let same = (h1 - h * rho.signum()).norm() <= REGIME_TOL * h1.norm().max(1.0);
        return Ok(if same { 0.0 } else { f64::INFINITY });
    }
    let one = Complex64::new(1.0, 0.0);
    // coordinates (X, A, B) with C[a][b] = E[s_a s_b*]
    let cov = CMatrix::from_row_slice(
        3,
        3,
        &[
            one,
            h1.conj(),
            h.conj(),
            h1,
            one * (h1.norm_sqr() + 1.0),
            h1 * h.conj() + rho,
            h,
            h * h1.conj() + rho,
            one * (h.norm_sqr() + 1.0),
        ],
    );
    gaussian_conditional_mi(&cov, &[0], &[1], &[2])
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::channels::catalog;
    use crate::infotheory::Kernel;
    use crate::linalg::{c, real_scalar};

    fn gains(v: &[f64]) -> Vec<Complex64> {
        v.iter().map(|&x| c(x, 0.0)).collect()
    }

    #[test]
    fn deterministic_v_is_degraded() {
        let r = degraded_lp(&catalog::xor()).unwrap();
        assert!(r.verdict);
        let Some(Witness::DegradingMap { map, .. }) = r.witness else { panic!() };
        for row in map {
            assert!(row.iter().all(|&p| p.abs() < 1e-9 || (p - 1.0).abs() < 1e-9));
        }
    }

    #[test]
    fn bsc_cascade_is_degraded() {
        let r = degraded_lp(&catalog::bsc_interference(3, 0.1, 0.26)).unwrap();
        assert!(r.verdict, "{r:?}");
        let Some(Witness::DegradingMap { map, residual }) = r.witness else { panic!() };
        assert!(residual <= REGIME_TOL);
        // the map applied to Y_2 alone must act like BSC(0.2)
        let through = Kernel::bsc(0.1)
            .then(&Kernel::new(vec![vec![map[0][0], map[0][1]], vec![map[2][0], map[2][1]]]).unwrap())
            .unwrap();
        assert!((through.get(0, 1) - 0.26).abs() < 1e-6);
    }

    #[test]
    fn reversed_order_is_not_degraded() {
        let r = degraded_lp(&catalog::bsc_interference(2, 0.3, 0.05)).unwrap();
        assert!(!r.verdict);
        assert!(r.margin < -1e-3);
    }

    #[test]
    fn siso_examples() {
        let r = check_eq1_siso(&gains(&[0.0, 0.0]), &gains(&[1.0, 1.0])).unwrap();
        assert!(r.verdict && r.margin == 1.0);
        let r = check_eq1_siso(&gains(&[0.7, 0.7]), &gains(&[1.0, 1.0])).unwrap();
        assert!(r.verdict && (r.margin - 0.02).abs() < 1e-12);
        let r = check_eq1_siso(&gains(&[0.8, 0.8]), &gains(&[1.0, 1.0])).unwrap();
        assert!(!r.verdict && (r.margin + 0.28).abs() < 1e-12);
        assert!(matches!(check_eq1_siso(&gains(&[0.5]), &gains(&[0.0])), Err(Error::InvalidGain(_))));
    }

    #[test]
    fn simo_examples() {
        let v = |x: &[f64]| linalg::column(&gains(x));
        let r = check_simo(&[v(&[0.6, 0.8])], &[v(&[1.0, 0.0])]).unwrap();
        assert!(r.verdict && r.boundary);
        let r = check_simo(&[v(&[0.0, 0.0]), v(&[0.0, 0.0])], &[v(&[1.0, 0.0]), v(&[0.0, 1.0])]).unwrap();
        assert!(r.verdict);
        let a = 0.6f64.sqrt();
        let r = check_simo(&[v(&[a, 0.0]), v(&[0.0, a])], &[v(&[1.0, 0.0]), v(&[0.0, 1.0])]).unwrap();
        assert!(!r.verdict && (r.margin + 0.2).abs() < 1e-12);
        assert!(check_simo(&[v(&[1.0])], &[v(&[0.0])]).is_err());
    }

    #[test]
    fn mimo_diag_examples() {
        let d = vec![gains(&[1.0, 2.0])];
        assert!(check_mimo_diag(&d, &[gains(&[0.0, 0.0])]).unwrap().verdict);
        let r = check_mimo_diag(&d, &[gains(&[0.7, 2.0 * 0.7])]).unwrap();
        assert!(r.verdict && (r.margin - 0.02).abs() < 1e-12);
        let x = (0.51f64).sqrt();
        let r = check_mimo_diag(&d, &[gains(&[x, 2.0 * x])]).unwrap();
        assert!(!r.verdict && (r.margin + 0.02).abs() < 1e-12);
        assert!(check_mimo_diag(&[gains(&[0.0])], &[gains(&[0.1])]).is_err());
    }

    #[test]
    fn fading_examples() {
        assert!(check_fading(&[0.0, 0.0], &[1.0, 1.0]).unwrap().verdict);
        let r = check_fading(&[0.5, 1.0], &[1.0, 2.0]).unwrap();
        assert!(r.verdict && r.boundary);
        assert!(!check_fading(&[1.0, 1.0], &[1.0, 2.0]).unwrap().verdict);
        assert!(check_fading(&[0.5], &[0.0]).is_err());
    }

    #[test]
    fn corollary1_matches_siso() {
        for h in [0.7, 0.8, 1.0 / 2f64.sqrt()] {
            let ch = GaussianMto::scalar(&gains(&[1.0, 1.0, 1.0]), &gains(&[h, h]), vec![1.0; 3]).unwrap();
            let eq1 = check_eq1_siso(&gains(&[h, h]), &gains(&[1.0, 1.0])).unwrap();
            let lambdas = vec![real_scalar(h * h); 2];
            assert_eq!(check_corollary1(&ch, &lambdas).unwrap().verdict, eq1.verdict);
        }
    }

    #[test]
    fn corollary1_zero_links() {
        let ch = GaussianMto::scalar(&gains(&[1.0, 1.0]), &gains(&[0.0]), vec![1.0; 2]).unwrap();
        assert!(check_corollary1(&ch, &[real_scalar(0.0)]).unwrap().verdict);
    }

    #[test]
    fn corollary1_row_space_failure() {
        // H_22 only sees the first input coordinate, H_12 sees the second.
        let h22 = CMatrix::from_row_slice(1, 2, &[c(1.0, 0.0), c(0.0, 0.0)]);
        let h12 = CMatrix::from_row_slice(1, 2, &[c(0.0, 0.0), c(0.1, 0.0)]);
        let ch = GaussianMto::new(vec![real_scalar(1.0), h22], vec![h12], vec![1.0, 1.0]).unwrap();
        let r = check_corollary1(&ch, &[real_scalar(0.5)]).unwrap();
        assert!(!r.verdict);
        assert!(!check_corollary1_auto(&ch).unwrap().verdict);
    }

    #[test]
    fn witness_examples() {
        let w = nondegraded_witness(&gains(&[1.2]), &gains(&[1.0]), &[0.0]).unwrap();
        let Witness::ConditionalMi { bits, user } = w else { panic!() };
        assert_eq!(user, 2);
        assert!((bits - (1.0f64 + 1.44 / 2.0).log2()).abs() < 1e-12);
        assert!(witness_mi(c(0.6, 0.0), c(1.0, 0.0), 0.6).unwrap().abs() < 1e-12);
        assert!(matches!(
            nondegraded_witness(&gains(&[0.5]), &gains(&[1.0]), &[0.0]),
            Err(Error::RegimeNotViolated(_))
        ));
        assert!(matches!(
            nondegraded_witness(&gains(&[1.2]), &gains(&[1.0]), &[1.2]),
            Err(Error::RegimeNotViolated(_))
        ));
    }
}
