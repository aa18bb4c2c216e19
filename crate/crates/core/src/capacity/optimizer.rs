//! Multi-start projected-gradient ascent over products of probability
//! simplices, with an optional exhaustive grid used both as a certificate and
//! as an extra starting point.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Exp1};
use rayon::prelude::*;
use serde::Serialize;

use crate::linalg::project_simplex;

pub type Point = Vec<Vec<f64>>;

/// Objective on a product of simplices.
pub trait SimplexObjective: Sync {
    fn value(&self, p: &[Vec<f64>]) -> f64;

    /// Any vector whose inner product with a feasible direction is the
    /// directional derivative. The default uses second-order one-sided
    /// differences toward each vertex, which never leave the simplex.
    fn gradient(&self, p: &[Vec<f64>]) -> Point {
        const H: f64 = 1e-6;
        let f0 = self.value(p);
        let mut q = p.to_vec();
        p.iter()
            .enumerate()
            .map(|(i, pi)| {
                (0..pi.len())
                    .map(|x| {
                        let mut at = |t: f64| {
                            q[i] = pi.iter().enumerate().map(|(y, &v)| v + t * ((y == x) as u8 as f64 - v)).collect();
                            self.value(&q)
                        };
                        let (f1, f2) = (at(H), at(2.0 * H));
                        q[i] = pi.clone();
                        (-3.0 * f0 + 4.0 * f1 - f2) / (2.0 * H)
                    })
                    .collect()
            })
            .collect()
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct OptimizerOptions {
    /// Random starts in addition to the uniform start.
    pub restarts: usize,
    pub max_iter: usize,
    /// Stop once an iteration gains less than this.
    pub tol: f64,
    pub seed: u64,
    /// Grid resolution per simplex (points are multiples of `1/grid`); 0 disables.
    pub grid: usize,
    pub max_grid_points: usize,
}

impl Default for OptimizerOptions {
    fn default() -> Self {
        Self {
            restarts: 8,
            max_iter: 4000,
            tol: 1e-13,
            seed: 0,
            grid: 20,
            max_grid_points: 200_000,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Diagnostics {
    /// Final value of every start, in start order.
    pub restart_values: Vec<f64>,
    /// Best minus worst restart value.
    pub spread: f64,
    pub grid_certified: bool,
    pub grid_resolution: Option<usize>,
    pub grid_value: Option<f64>,
    /// Best value minus best grid value; nonnegative when the grid start was refined.
    pub grid_gap: Option<f64>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct OptimizerResult {
    pub value: f64,
    pub argmax: Point,
    pub diagnostics: Diagnostics,
}

fn dot(a: &[Vec<f64>], b: &[Vec<f64>]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x.iter().zip(y).map(|(u, v)| u * v).sum::<f64>()).sum()
}

/// Projected-gradient ascent with Armijo backtracking from `start`.
pub fn ascend<O: SimplexObjective + ?Sized>(obj: &O, start: Point, max_iter: usize, tol: f64) -> (f64, Point) {
    let mut p = start;
    let mut f = obj.value(&p);
    let mut step = 1.0;
    let mut stalls = 0;
    for _ in 0..max_iter {
        let g = obj.gradient(&p);
        let mut improved = false;
        while step > 1e-14 {
            let cand: Point = p
                .iter()
                .zip(&g)
                .map(|(pi, gi)| project_simplex(&pi.iter().zip(gi).map(|(a, b)| a + step * b).collect::<Vec<_>>(), 1.0))
                .collect();
            let diff: Point = cand.iter().zip(&p).map(|(c, q)| c.iter().zip(q).map(|(a, b)| a - b).collect()).collect();
            let fc = obj.value(&cand);
            if fc >= f + 1e-4 * dot(&g, &diff) && fc >= f {
                let gain = fc - f;
                p = cand;
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
    (f, p)
}

fn dirichlet_start(sizes: &[usize], rng: &mut ChaCha8Rng) -> Point {
    sizes
        .iter()
        .map(|&n| {
            let e: Vec<f64> = (0..n).map(|_| Exp1.sample(rng)).collect();
            let s: f64 = e.iter().sum();
            e.into_iter().map(|v| v / s).collect()
        })
        .collect()
}

fn binom(n: usize, k: usize) -> usize {
    (0..k).fold(1usize, |acc, i| acc.saturating_mul(n - i) / (i + 1))
}

/// Number of simplex grid points of resolution `r` in dimension `n`.
pub fn simplex_grid_size(n: usize, r: usize) -> usize {
    binom(r + n - 1, n - 1)
}

/// All points of `Δ(n)` whose coordinates are multiples of `1/r`.
pub fn simplex_grid(n: usize, r: usize) -> Vec<Vec<f64>> {
    fn rec(n: usize, left: usize, cur: &mut Vec<usize>, out: &mut Vec<Vec<usize>>) {
        if n == 1 {
            cur.push(left);
            out.push(cur.clone());
            cur.pop();
            return;
        }
        for a in 0..=left {
            cur.push(a);
            rec(n - 1, left - a, cur, out);
            cur.pop();
        }
    }
    let mut out = Vec::new();
    rec(n, r, &mut Vec::new(), &mut out);
    out.into_iter().map(|v| v.into_iter().map(|a| a as f64 / r as f64).collect()).collect()
}

/// Largest resolution `≤ max_r` whose product grid has at most `cap` points.
pub fn grid_resolution(sizes: &[usize], max_r: usize, cap: usize) -> Option<usize> {
    (1..=max_r).rev().find(|&r| {
        sizes
            .iter()
            .try_fold(1usize, |acc, &n| acc.checked_mul(simplex_grid_size(n, r)).filter(|&t| t <= cap))
            .is_some()
    })
}

/// Best point of the product grid.
pub fn grid_search<O: SimplexObjective + ?Sized>(obj: &O, sizes: &[usize], r: usize) -> (f64, Point) {
    let axes: Vec<Vec<Vec<f64>>> = sizes.iter().map(|&n| simplex_grid(n, r)).collect();
    let counts: Vec<usize> = axes.iter().map(Vec::len).collect();
    let total: usize = counts.iter().product();
    (0..total)
        .into_par_iter()
        .map(|flat| {
            let mut idx = vec![0; counts.len()];
            crate::infotheory::discrete::unflatten(flat, &counts, &mut idx);
            let p: Point = idx.iter().zip(&axes).map(|(&i, a)| a[i].clone()).collect();
            (obj.value(&p), flat, p)
        })
        .reduce_with(|a, b| if b.0 > a.0 || (b.0 == a.0 && b.1 < a.1) { b } else { a })
        .map(|(v, _, p)| (v, p))
        .expect("grid is non-empty")
}

/// Maximizes `obj` over the product of simplices of the given sizes.
pub fn maximize<O: SimplexObjective + ?Sized>(obj: &O, sizes: &[usize], opts: &OptimizerOptions) -> OptimizerResult {
    let mut starts: Vec<Point> = vec![sizes.iter().map(|&n| vec![1.0 / n as f64; n]).collect()];
    let mut rng = ChaCha8Rng::seed_from_u64(opts.seed);
    for _ in 0..opts.restarts {
        starts.push(dirichlet_start(sizes, &mut rng));
    }
    let resolution = (opts.grid > 0)
        .then(|| grid_resolution(sizes, opts.grid, opts.max_grid_points))
        .flatten();
    let grid = resolution.map(|r| grid_search(obj, sizes, r));
    if let Some((_, p)) = &grid {
        starts.push(p.clone());
    }
    let results: Vec<(f64, Point)> = starts
        .into_par_iter()
        .map(|s| ascend(obj, s, opts.max_iter, opts.tol))
        .collect();
    let values: Vec<f64> = results.iter().map(|r| r.0).collect();
    let (best_idx, _) = values
        .iter()
        .enumerate()
        .fold((0, f64::NEG_INFINITY), |acc, (i, &v)| if v > acc.1 { (i, v) } else { acc });
    let (value, argmax) = results[best_idx].clone();
    let worst = values.iter().copied().fold(f64::INFINITY, f64::min);
    OptimizerResult {
        value,
        argmax,
        diagnostics: Diagnostics {
            spread: value - worst,
            restart_values: values,
            grid_certified: grid.is_some(),
            grid_resolution: resolution,
            grid_value: grid.as_ref().map(|g| g.0),
            grid_gap: grid.as_ref().map(|g| value - g.0),
        },
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    struct Quadratic;
    impl SimplexObjective for Quadratic {
        fn value(&self, p: &[Vec<f64>]) -> f64 {
            -(p[0][0] - 0.3).powi(2) - (p[1][2] - 0.5).powi(2)
        }
    }

    #[test]
    fn finds_interior_optimum() {
        let r = maximize(&Quadratic, &[2, 3], &OptimizerOptions::default());
        assert!(r.value > -1e-10, "{r:?}");
        assert!((r.argmax[0][0] - 0.3).abs() < 1e-4);
        assert!(r.diagnostics.grid_certified);
        assert!(r.diagnostics.grid_gap.unwrap() >= 0.0);
    }

    #[test]
    fn grid_sizes() {
        assert_eq!(simplex_grid(3, 2).len(), 6);
        assert_eq!(simplex_grid_size(3, 2), 6);
        assert_eq!(simplex_grid_size(4, 5), 56);
        assert_eq!(grid_resolution(&[4, 4, 4], 20, 200_000), Some(5));
    }

    #[test]
    fn numeric_gradient_is_directional() {
        let p = vec![vec![0.5, 0.5], vec![0.2, 0.3, 0.5]];
        let g = Quadratic.gradient(&p);
        // d/dt f(p + t (e_0 - p)) for user 0 at t = 0: -2(0.5 - 0.3) * 0.5
        let expected = -2.0 * 0.2 * 0.5;
        let along = g[0][0] - (0.5 * g[0][0] + 0.5 * g[0][1]);
        assert!((along - expected).abs() < 1e-6);
    }
}
