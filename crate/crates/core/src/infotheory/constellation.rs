//! Mutual information of finite constellations over complex AWGN with
//! finite-constellation interference treated as noise.

use nalgebra::{DMatrix, SymmetricEigen};
use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use rayon::prelude::*;
use serde::Serialize;

use super::discrete::Pmf;
use crate::error::{Error, Result};

#[derive(Debug, Clone, PartialEq)]
pub struct Constellation {
    points: Vec<Complex64>,
}

impl Constellation {
    pub fn new(points: Vec<Complex64>) -> Result<Self> {
        if points.is_empty() {
            return Err(Error::EmptyConstellation);
        }
        Ok(Self { points })
    }

    pub fn single(point: Complex64) -> Self {
        Self { points: vec![point] }
    }

    pub fn bpsk() -> Self {
        Self::psk(2)
    }

    /// Unit-energy QPSK at the diagonal points.
    pub fn qpsk() -> Self {
        let a = std::f64::consts::FRAC_1_SQRT_2;
        Self {
            points: vec![
                Complex64::new(a, a),
                Complex64::new(-a, a),
                Complex64::new(-a, -a),
                Complex64::new(a, -a),
            ],
        }
    }

    /// Unit-energy M-PSK starting at angle 0.
    pub fn psk(m: usize) -> Self {
        assert!(m > 0);
        Self {
            points: (0..m)
                .map(|k| Complex64::from_polar(1.0, 2.0 * std::f64::consts::PI * k as f64 / m as f64))
                .collect(),
        }
    }

    pub fn points(&self) -> &[Complex64] {
        &self.points
    }

    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }
}

/// One interfering user seen through `gain`.
#[derive(Debug, Clone)]
pub struct InterferenceTerm {
    pub gain: Complex64,
    pub constellation: Constellation,
    pub weights: Pmf,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum MiMethod {
    /// Tensorized Gauss–Hermite over the real and imaginary noise axes.
    Quadrature { nodes: usize },
    MonteCarlo { samples: usize, seed: u64 },
}

impl Default for MiMethod {
    fn default() -> Self {
        MiMethod::Quadrature { nodes: 32 }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct MiEstimate {
    pub bits: f64,
    /// Present for sample-based estimates.
    pub std_error: Option<f64>,
}

/// Gauss–Hermite nodes and weights for `∫ e^{-t²} f(t) dt` (Golub–Welsch).
pub fn gauss_hermite(n: usize) -> (Vec<f64>, Vec<f64>) {
    assert!(n > 0);
    let mut jacobi = DMatrix::<f64>::zeros(n, n);
    for k in 1..n {
        let b = (k as f64 / 2.0).sqrt();
        jacobi[(k, k - 1)] = b;
        jacobi[(k - 1, k)] = b;
    }
    let eig = SymmetricEigen::new(jacobi);
    let mut pairs: Vec<(f64, f64)> = (0..n)
        .map(|i| {
            let v0 = eig.eigenvectors[(0, i)];
            (eig.eigenvalues[i], std::f64::consts::PI.sqrt() * v0 * v0)
        })
        .collect();
    pairs.sort_by(|a, b| a.0.total_cmp(&b.0));
    pairs.into_iter().unzip()
}

struct MixtureModel {
    /// `means[x][c]` received mean for input `x` and interference combination `c`.
    means: Vec<Vec<Complex64>>,
    ln_wx: Vec<f64>,
    ln_wc: Vec<f64>,
    wx: Vec<f64>,
    wc: Vec<f64>,
    noise_var: f64,
}

impl MixtureModel {
    fn build(
        constellation: &Constellation,
        weights: &Pmf,
        direct_gain: Complex64,
        interference: &[InterferenceTerm],
        noise_var: f64,
    ) -> Result<Self> {
        if constellation.is_empty() {
            return Err(Error::EmptyConstellation);
        }
        if !(noise_var > 0.0) {
            return Err(Error::NonPositiveNoise(noise_var));
        }
        if weights.len() != constellation.len() {
            return Err(Error::Dimension(format!(
                "{} weights for {} constellation points",
                weights.len(),
                constellation.len()
            )));
        }
        let mut combos: Vec<(Complex64, f64)> = vec![(Complex64::new(0.0, 0.0), 1.0)];
        for term in interference {
            if term.constellation.is_empty() {
                return Err(Error::EmptyConstellation);
            }
            if term.weights.len() != term.constellation.len() {
                return Err(Error::Dimension("interferer weights do not match its constellation".into()));
            }
            let mut next = Vec::with_capacity(combos.len() * term.constellation.len());
            for &(s, w) in &combos {
                for (p, &q) in term.constellation.points().iter().zip(term.weights.probs()) {
                    if q > 0.0 {
                        next.push((s + term.gain * p, w * q));
                    }
                }
            }
            combos = next;
        }
        let active: Vec<usize> = (0..constellation.len()).filter(|&i| weights.probs()[i] > 0.0).collect();
        let means = active
            .iter()
            .map(|&i| combos.iter().map(|(s, _)| direct_gain * constellation.points()[i] + s).collect())
            .collect();
        let wx: Vec<f64> = active.iter().map(|&i| weights.probs()[i]).collect();
        let wc: Vec<f64> = combos.iter().map(|c| c.1).collect();
        Ok(Self {
            means,
            ln_wx: wx.iter().map(|w| w.ln()).collect(),
            ln_wc: wc.iter().map(|w| w.ln()).collect(),
            wx,
            wc,
            noise_var,
        })
    }

    /// `log2 p(y|x) − log2 p(y)` with the Gaussian normalizer cancelled.
    fn information_density(&self, x: usize, y: Complex64, scratch: &mut Vec<f64>) -> f64 {
        scratch.clear();
        for means_x in &self.means {
            let terms = means_x
                .iter()
                .zip(&self.ln_wc)
                .map(|(m, lw)| lw - (y - m).norm_sqr() / self.noise_var);
            scratch.push(log_sum_exp(terms));
        }
        let ln_py = log_sum_exp(scratch.iter().zip(&self.ln_wx).map(|(a, b)| a + b));
        (scratch[x] - ln_py) / std::f64::consts::LN_2
    }
}

fn log_sum_exp(it: impl Iterator<Item = f64> + Clone) -> f64 {
    let m = it.clone().fold(f64::NEG_INFINITY, f64::max);
    if m == f64::NEG_INFINITY {
        return m;
    }
    m + it.map(|v| (v - m).exp()).sum::<f64>().ln()
}

/// `I(X; h X + Σ g_j X_j + Z)` with `Z ~ CN(0, noise_var)`, in bits.
pub fn constellation_mi(
    constellation: &Constellation,
    weights: &Pmf,
    direct_gain: Complex64,
    interference: &[InterferenceTerm],
    noise_var: f64,
    method: MiMethod,
) -> Result<MiEstimate> {
    let model = MixtureModel::build(constellation, weights, direct_gain, interference, noise_var)?;
    let support = model.wx.len();
    if support <= 1 {
        return Ok(MiEstimate {
            bits: 0.0,
            std_error: matches!(method, MiMethod::MonteCarlo { .. }).then_some(0.0),
        });
    }
    let cap = (support as f64).log2();
    match method {
        MiMethod::Quadrature { nodes } => {
            if nodes == 0 {
                return Err(Error::Config("quadrature needs at least one node".into()));
            }
            let (t, w) = gauss_hermite(nodes);
            let sigma = noise_var.sqrt();
            let mut scratch = Vec::new();
            let mut total = 0.0;
            for (x, means_x) in model.means.iter().enumerate() {
                for (ci, m) in means_x.iter().enumerate() {
                    let weight = model.wx[x] * model.wc[ci];
                    let mut acc = 0.0;
                    for (ta, wa) in t.iter().zip(&w) {
                        for (tb, wb) in t.iter().zip(&w) {
                            let y = m + Complex64::new(sigma * ta, sigma * tb);
                            acc += wa * wb * model.information_density(x, y, &mut scratch);
                        }
                    }
                    total += weight * acc / std::f64::consts::PI;
                }
            }
            Ok(MiEstimate {
                bits: total.clamp(0.0, cap),
                std_error: None,
            })
        }
        MiMethod::MonteCarlo { samples, seed } => {
            if samples < 2 {
                return Err(Error::Config("Monte-Carlo needs at least two samples".into()));
            }
            let (mean, se) = monte_carlo_mean(samples, seed, |rng, scratch| {
                let x = sample_index(&model.wx, rng.random());
                let ci = sample_index(&model.wc, rng.random());
                let z = complex_normal(rng, noise_var);
                model.information_density(x, model.means[x][ci] + z, scratch)
            });
            Ok(MiEstimate {
                bits: mean.clamp(0.0, cap),
                std_error: Some(se),
            })
        }
    }
}

/// `CN(0, var)` sample.
pub fn complex_normal<R: Rng>(rng: &mut R, var: f64) -> Complex64 {
    let s = (var / 2.0).sqrt();
    let re: f64 = rng.sample(StandardNormal);
    let im: f64 = rng.sample(StandardNormal);
    Complex64::new(s * re, s * im)
}

/// Index drawn from `weights` (unit mass) with uniform `u` in [0, 1).
pub fn sample_index(weights: &[f64], u: f64) -> usize {
    let mut acc = 0.0;
    for (i, w) in weights.iter().enumerate() {
        acc += w;
        if u < acc {
            return i;
        }
    }
    weights.iter().rposition(|&w| w > 0.0).unwrap_or(0)
}

const MC_CHUNK: usize = 1 << 14;

/// Mean and standard error of `f` over `samples` draws. Chunks run in parallel
/// on their own ChaCha stream, so the result does not depend on thread count.
pub fn monte_carlo_mean<F>(samples: usize, seed: u64, f: F) -> (f64, f64)
where
    F: Fn(&mut ChaCha8Rng, &mut Vec<f64>) -> f64 + Sync,
{
    let chunks = samples.div_ceil(MC_CHUNK);
    let sums: Vec<(f64, f64, usize)> = (0..chunks)
        .into_par_iter()
        .map(|chunk| {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            rng.set_stream(chunk as u64);
            let n = MC_CHUNK.min(samples - chunk * MC_CHUNK);
            let mut scratch = Vec::new();
            let (mut s, mut s2) = (0.0, 0.0);
            for _ in 0..n {
                let v = f(&mut rng, &mut scratch);
                s += v;
                s2 += v * v;
            }
            (s, s2, n)
        })
        .collect();
    let (s, s2, n) = sums
        .into_iter()
        .fold((0.0, 0.0, 0usize), |a, b| (a.0 + b.0, a.1 + b.1, a.2 + b.2));
    let n = n as f64;
    let mean = s / n;
    let var = ((s2 / n - mean * mean) * n / (n - 1.0)).max(0.0);
    (mean, (var / n).sqrt())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn hermite_rule_integrates_moments() {
        let (t, w) = gauss_hermite(32);
        let m0: f64 = w.iter().sum();
        let m2: f64 = t.iter().zip(&w).map(|(t, w)| w * t * t).sum();
        let m4: f64 = t.iter().zip(&w).map(|(t, w)| w * t.powi(4)).sum();
        let sp = std::f64::consts::PI.sqrt();
        assert!((m0 - sp).abs() < 1e-12);
        assert!((m2 - sp / 2.0).abs() < 1e-12);
        assert!((m4 - 0.75 * sp).abs() < 1e-11);
    }

    #[test]
    fn single_point_carries_nothing() {
        let c = Constellation::single(Complex64::new(1.0, 0.0));
        let r = constellation_mi(&c, &Pmf::uniform(1), Complex64::new(1.0, 0.0), &[], 1.0, MiMethod::default()).unwrap();
        assert_eq!(r.bits, 0.0);
    }

    #[test]
    fn rejects_bad_inputs() {
        let bpsk = Constellation::bpsk();
        let one = Complex64::new(1.0, 0.0);
        assert!(matches!(
            constellation_mi(&bpsk, &Pmf::uniform(2), one, &[], 0.0, MiMethod::default()),
            Err(Error::NonPositiveNoise(_))
        ));
        assert!(matches!(Constellation::new(vec![]), Err(Error::EmptyConstellation)));
    }

    #[test]
    fn high_snr_approaches_log_size() {
        let r = constellation_mi(
            &Constellation::qpsk(),
            &Pmf::uniform(4),
            Complex64::new(10.0, 0.0),
            &[],
            1.0,
            MiMethod::default(),
        )
        .unwrap();
        assert!((r.bits - 2.0).abs() < 1e-6);
    }
}
