//! Projected-gradient ascent of Gaussian treat-interference-as-noise sum
//! rates over PSD covariances with trace budgets.

use nalgebra::SymmetricEigen;
use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

use crate::error::Result;
use crate::infotheory::LinkTable;
use crate::linalg::{self, CMatrix};

/// Sum of the TIN rates of several channels (carriers) whose covariances are
/// tied together by per-group trace budgets.
pub(crate) struct PsdProblem {
    pub carriers: Vec<LinkTable>,
    /// `dims[c][k]` input dimension of user `k` on carrier `c`.
    pub dims: Vec<Vec<usize>>,
    /// Each group is a set of `(carrier, user)` sharing one trace budget.
    pub groups: Vec<(Vec<(usize, usize)>, f64)>,
}

pub(crate) type Covs = Vec<Vec<CMatrix>>;

fn inverse(m: &CMatrix) -> CMatrix {
    linalg::hermitian_part(m)
        .cholesky()
        .map(|c| c.inverse())
        .unwrap_or_else(|| linalg::pinv(m).expect("pseudo-inverse of a Hermitian matrix"))
}

impl PsdProblem {
    fn receiver_mats(links: &LinkTable, covs: &[CMatrix], rx: usize) -> (CMatrix, CMatrix) {
        let n = links[rx].iter().flatten().next().map(|h| h.nrows()).unwrap_or(0);
        let mut full = linalg::identity(n);
        let mut interf = linalg::identity(n);
        for (tx, h) in links[rx].iter().enumerate() {
            let Some(h) = h else { continue };
            let term = h * &covs[tx] * h.adjoint();
            full += &term;
            if tx != rx {
                interf += term;
            }
        }
        (full, interf)
    }

    pub fn per_user(&self, covs: &Covs) -> Vec<Vec<f64>> {
        self.carriers
            .iter()
            .zip(covs)
            .map(|(links, g)| {
                (0..links.len())
                    .map(|rx| {
                        let (a, b) = Self::receiver_mats(links, g, rx);
                        let r = linalg::log2_det_hpd(&a).unwrap_or(f64::NEG_INFINITY)
                            - linalg::log2_det_hpd(&b).unwrap_or(f64::NEG_INFINITY);
                        r.max(0.0)
                    })
                    .collect()
            })
            .collect()
    }

    pub fn value(&self, covs: &Covs) -> f64 {
        self.per_user(covs).iter().flatten().sum()
    }

    fn gradient(&self, covs: &Covs) -> Covs {
        self.carriers
            .iter()
            .zip(covs)
            .map(|(links, g)| {
                let k = links.len();
                let mut grad: Vec<CMatrix> = g.iter().map(|m| CMatrix::zeros(m.nrows(), m.ncols())).collect();
                for rx in 0..k {
                    let (a, b) = Self::receiver_mats(links, g, rx);
                    let (ai, bi) = (inverse(&a), inverse(&b));
                    for (tx, h) in links[rx].iter().enumerate() {
                        let Some(h) = h else { continue };
                        grad[tx] += h.adjoint() * &ai * h;
                        if tx != rx {
                            grad[tx] -= h.adjoint() * &bi * h;
                        }
                    }
                }
                grad.iter()
                    .map(|m| linalg::hermitian_part(m).scale(1.0 / std::f64::consts::LN_2))
                    .collect()
            })
            .collect()
    }

    /// Joint Euclidean projection onto `{Γ ⪰ 0, Σ_group tr Γ ≤ cap}`.
    fn project(&self, covs: &Covs) -> Covs {
        let mut out = covs.clone();
        for (members, cap) in &self.groups {
            let eigs: Vec<SymmetricEigen<Complex64, nalgebra::Dyn>> = members
                .iter()
                .map(|&(c, k)| SymmetricEigen::new(linalg::hermitian_part(&covs[c][k])))
                .collect();
            let all: Vec<f64> = eigs.iter().flat_map(|e| e.eigenvalues.iter().copied()).collect();
            let proj = linalg::project_capped_simplex(&all, *cap);
            let mut offset = 0;
            for (e, &(c, k)) in eigs.iter().zip(members) {
                let n = e.eigenvalues.len();
                out[c][k] = linalg::rebuild(&e.eigenvectors, &proj[offset..offset + n]);
                offset += n;
            }
        }
        out
    }

    fn inner(a: &Covs, b: &Covs) -> f64 {
        a.iter()
            .flatten()
            .zip(b.iter().flatten())
            .map(|(x, y)| x.iter().zip(y.iter()).map(|(u, v)| (u.conj() * v).re).sum::<f64>())
            .sum()
    }

    fn ascend(&self, start: Covs, max_iter: usize, tol: f64) -> (f64, Covs) {
        let mut x = self.project(&start);
        let mut f = self.value(&x);
        let mut step = 1.0;
        let mut stalls = 0;
        for _ in 0..max_iter {
            let g = self.gradient(&x);
            let mut improved = false;
            while step > 1e-14 {
                let moved: Covs = x
                    .iter()
                    .zip(&g)
                    .map(|(xc, gc)| xc.iter().zip(gc).map(|(a, b)| a + b.scale(step)).collect())
                    .collect();
                let cand = self.project(&moved);
                let diff: Covs = cand
                    .iter()
                    .zip(&x)
                    .map(|(cc, xc)| cc.iter().zip(xc).map(|(a, b)| a - b).collect())
                    .collect();
                let fc = self.value(&cand);
                if fc >= f && fc >= f + 1e-4 * Self::inner(&g, &diff) {
                    let gain = fc - f;
                    x = cand;
                    f = fc;
                    improved = true;
                    step *= 2.0;
                    stalls = if gain < tol { stalls + 1 } else { 0 };
                    break;
                }
                step *= 0.5;
            }
            if !improved || stalls >= 3 {
                break;
            }
        }
        (f, x)
    }

    fn full_power_start(&self) -> Covs {
        let mut covs: Covs = self.dims.iter().map(|d| d.iter().map(|&n| CMatrix::zeros(n, n)).collect()).collect();
        for (members, cap) in &self.groups {
            let total: usize = members.iter().map(|&(c, k)| self.dims[c][k]).sum();
            for &(c, k) in members {
                let n = self.dims[c][k];
                covs[c][k] = linalg::identity(n).scale(cap / total as f64);
            }
        }
        covs
    }

    fn random_start(&self, rng: &mut ChaCha8Rng) -> Covs {
        let mut covs: Covs = self
            .dims
            .iter()
            .map(|d| {
                d.iter()
                    .map(|&n| {
                        let a = CMatrix::from_fn(n, n, |_, _| Complex64::new(rng.random::<f64>() - 0.5, rng.random::<f64>() - 0.5));
                        &a * a.adjoint()
                    })
                    .collect()
            })
            .collect();
        for (members, cap) in &self.groups {
            let tr: f64 = members.iter().map(|&(c, k)| linalg::trace_re(&covs[c][k])).sum();
            let target = cap * rng.random::<f64>();
            for &(c, k) in members {
                covs[c][k] = covs[c][k].scale(if tr > 0.0 { target / tr } else { 0.0 });
            }
        }
        covs
    }

    /// Best of the full-power start and `restarts` random starts, plus the spread.
    pub fn maximize(&self, restarts: usize, seed: u64, max_iter: usize, tol: f64) -> (f64, Covs, Vec<f64>) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut starts = vec![self.full_power_start()];
        for _ in 0..restarts {
            starts.push(self.random_start(&mut rng));
        }
        let results: Vec<(f64, Covs)> = starts.into_par_iter().map(|s| self.ascend(s, max_iter, tol)).collect();
        let values: Vec<f64> = results.iter().map(|r| r.0).collect();
        let best = values
            .iter()
            .enumerate()
            .fold(0, |b, (i, &v)| if v > values[b] { i } else { b });
        let (v, covs) = results[best].clone();
        (v, covs, values)
    }
}

/// Dense grid over `[0, P_k]` for scalar channels; returns value and powers.
pub(crate) fn scalar_power_grid(links: &LinkTable, powers: &[f64], points: usize) -> Result<(f64, Vec<f64>)> {
    let k = powers.len();
    let total = points.pow(k as u32);
    let best = (0..total)
        .into_par_iter()
        .map(|flat| {
            let mut idx = vec![0; k];
            crate::infotheory::discrete::unflatten(flat, &vec![points; k], &mut idx);
            let p: Vec<f64> = idx
                .iter()
                .zip(powers)
                .map(|(&i, &cap)| cap * i as f64 / (points - 1).max(1) as f64)
                .collect();
            let covs: Vec<CMatrix> = p.iter().map(|&v| linalg::real_scalar(v)).collect();
            let v = crate::infotheory::gaussian_sum_rate(links, &covs).map(|r| r.total).unwrap_or(f64::NEG_INFINITY);
            (v, flat, p)
        })
        .reduce_with(|a, b| if b.0 > a.0 || (b.0 == a.0 && b.1 < a.1) { b } else { a })
        .expect("grid is non-empty");
    Ok((best.0, best.2))
}
