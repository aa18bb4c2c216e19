//! Rate regions of deterministic many-to-one channels for a fixed product
//! input law and auxiliary maps `U_i = g_i(X_i)`.
//!
//! Users are numbered as in the rest of the crate: user 0 is the receiver that
//! hears interference and users `1..K` are the interferers. Rate variables are
//! labeled `R_1..R_K` and a set `S` of interferers is printed with those
//! labels, so code user `j` appears as `R_{j+1}`.

mod polytope;

use std::collections::HashMap;

use rayon::prelude::*;
use serde::Serialize;

use crate::capacity::optimizer::simplex_grid;
use crate::channels::{AuxSpec, DiscreteMto};
use crate::error::{Error, Result};
use crate::infotheory::discrete::unflatten;
use crate::infotheory::Pmf;

pub use polytope::{Inequality, Polytope, DUP_TOL, MAX_LP_REDUCE_VARS};

/// Subsets of interferers are enumerated exhaustively, so `K` is capped.
pub const MAX_USERS: usize = 10;
/// Tolerance for containment and equality of regions, in bits.
pub const REGION_TOL: f64 = 1e-9;

#[derive(Clone, Copy)]
enum Var {
    Y1,
    V,
    Y(usize),
    U(usize),
}

/// Outcome of one input tuple with its probability.
struct Outcome {
    prob: f64,
    y1: usize,
    v: usize,
    y: Vec<usize>,
    u: Vec<usize>,
}

/// Exact entropies of functions of the inputs under a product law.
struct Evaluator {
    k: usize,
    outcomes: Vec<Outcome>,
}

impl Evaluator {
    fn new(ch: &DiscreteMto, dist: &[Pmf], aux: &AuxSpec) -> Result<Self> {
        let k = ch.num_users();
        if k > MAX_USERS {
            return Err(Error::TooLarge(format!("{k} users, at most {MAX_USERS} supported")));
        }
        if !ch.is_deterministic() {
            return Err(Error::NotDeterministic("regions are defined for deterministic channels".into()));
        }
        ch.ensure_valid()?;
        ch.check_dist(dist)?;
        aux.check(ch)?;
        let v_map = ch.interference().as_function().expect("deterministic");
        let y_maps: Vec<Vec<usize>> = (1..k).map(|i| ch.direct(i).as_function().expect("deterministic")).collect();
        let xs = ch.interferer_sizes();
        let mut idx = vec![0; xs.len()];
        let mut outcomes = Vec::new();
        for (r, &v) in v_map.iter().enumerate() {
            unflatten(r, xs, &mut idx);
            let pr: f64 = idx.iter().zip(&dist[1..]).map(|(&x, p)| p.probs()[x]).product();
            if pr == 0.0 {
                continue;
            }
            let y: Vec<usize> = idx.iter().zip(&y_maps).map(|(&x, m)| m[x]).collect();
            let u: Vec<usize> = idx.iter().zip(aux.maps()).map(|(&x, m)| m[x]).collect();
            for (x1, &p1) in dist[0].probs().iter().enumerate() {
                if p1 > 0.0 {
                    outcomes.push(Outcome { prob: pr * p1, y1: ch.f1()[x1][v], v, y: y.clone(), u: u.clone() });
                }
            }
        }
        Ok(Self { k, outcomes })
    }

    fn entropy(&self, vars: &[Var]) -> f64 {
        let mut mass: HashMap<Vec<usize>, f64> = HashMap::new();
        for o in &self.outcomes {
            let key = vars
                .iter()
                .map(|v| match *v {
                    Var::Y1 => o.y1,
                    Var::V => o.v,
                    Var::Y(j) => o.y[j - 1],
                    Var::U(j) => o.u[j - 1],
                })
                .collect();
            *mass.entry(key).or_insert(0.0) += o.prob;
        }
        -mass.values().filter(|&&p| p > 0.0).map(|p| p * p.log2()).sum::<f64>()
    }

    fn cond(&self, target: &[Var], given: &[Var]) -> f64 {
        let joint: Vec<Var> = target.iter().chain(given).copied().collect();
        (self.entropy(&joint) - self.entropy(given)).max(0.0)
    }

    fn members(&self, mask: usize) -> Vec<usize> {
        (1..self.k).filter(|&j| mask >> (j - 1) & 1 == 1).collect()
    }

    fn complement(&self, mask: usize) -> Vec<usize> {
        (1..self.k).filter(|&j| mask >> (j - 1) & 1 == 0).collect()
    }

    fn us(set: &[usize]) -> Vec<Var> {
        set.iter().map(|&j| Var::U(j)).collect()
    }

    fn ys(set: &[usize]) -> Vec<Var> {
        set.iter().map(|&j| Var::Y(j)).collect()
    }
}

fn rate_labels(k: usize) -> Vec<String> {
    (1..=k).map(|i| format!("R_{i}")).collect()
}

fn set_tag(set: &[usize]) -> String {
    let names: Vec<String> = set.iter().map(|j| (j + 1).to_string()).collect();
    format!("S={{{}}}", names.join(","))
}

fn nonnegative(p: &mut Polytope, k: usize) -> Result<()> {
    let labels = rate_labels(k);
    p.push_nonnegative(&labels.iter().map(String::as_str).collect::<Vec<_>>())
}

/// Builds `R_1 ≤ H(Y_1|V)`, `R_i ≤ H(Y_i)` and one sum bound per nonempty `S`,
/// with `extra(S)` added to `H(Y_1|U_{S^c})`.
fn region(e: &Evaluator, extra: impl Fn(&Evaluator, &[usize], &[usize]) -> f64) -> Result<Polytope> {
    let k = e.k;
    let mut p = Polytope::new(rate_labels(k));
    let mut c = vec![0.0; k];
    c[0] = 1.0;
    p.push(c, e.cond(&[Var::Y1], &[Var::V]), "R_1")?;
    for j in 1..k {
        let mut c = vec![0.0; k];
        c[j] = 1.0;
        p.push(c, e.entropy(&[Var::Y(j)]), format!("R_{}", j + 1))?;
    }
    for mask in 1..(1usize << (k - 1)) {
        let (s, sc) = (e.members(mask), e.complement(mask));
        let mut c = vec![0.0; k];
        c[0] = 1.0;
        for &j in &s {
            c[j] = 1.0;
        }
        let bound = e.cond(&[Var::Y1], &Evaluator::us(&sc)) + extra(e, &s, &sc);
        p.push(c, bound, set_tag(&s))?;
    }
    nonnegative(&mut p, k)?;
    Ok(p)
}

/// Outer bound: `R_1 + Σ_S R_i ≤ H(Y_1|U_{S^c}) + H(Y_S|V,U_{S^c})`.
pub fn outer_region(ch: &DiscreteMto, dist: &[Pmf], aux: &AuxSpec) -> Result<Polytope> {
    let e = Evaluator::new(ch, dist, aux)?;
    region(&e, |e, s, sc| {
        let mut given = vec![Var::V];
        given.extend(Evaluator::us(sc));
        e.cond(&Evaluator::ys(s), &given)
    })
}

/// Achievable region: `R_1 + Σ_S R_i ≤ H(Y_1|U_{S^c}) + Σ_S H(Y_i|U_i)`.
pub fn inner_region(ch: &DiscreteMto, dist: &[Pmf], aux: &AuxSpec) -> Result<Polytope> {
    let e = Evaluator::new(ch, dist, aux)?;
    region(&e, |e, s, _| s.iter().map(|&j| e.cond(&[Var::Y(j)], &[Var::U(j)])).sum())
}

/// The achievable region stated with one auxiliary rate `Omega_i` per
/// interferer, before any variables are eliminated.
pub fn parametric_lift(ch: &DiscreteMto, dist: &[Pmf], aux: &AuxSpec) -> Result<Polytope> {
    let e = Evaluator::new(ch, dist, aux)?;
    let k = e.k;
    let mut labels = rate_labels(k);
    labels.extend((2..=k).map(|i| format!("Omega_{i}")));
    let n = labels.len();
    let omega = |j: usize| k + j - 1;
    let mut p = Polytope::new(labels);
    for j in 1..k {
        let mut c = vec![0.0; n];
        c[j] = 1.0;
        p.push(c.clone(), e.entropy(&[Var::Y(j)]), format!("R_{}", j + 1))?;
        c[omega(j)] = -1.0;
        p.push(c, e.cond(&[Var::Y(j)], &[Var::U(j)]), format!("R_{0} - Omega_{0}", j + 1))?;
        let mut c = vec![0.0; n];
        c[omega(j)] = -1.0;
        p.push(c, 0.0, format!("Omega_{} >= 0", j + 1))?;
    }
    for mask in 0..(1usize << (k - 1)) {
        let (s, sc) = (e.members(mask), e.complement(mask));
        let mut c = vec![0.0; n];
        c[0] = 1.0;
        for &j in &s {
            c[omega(j)] = 1.0;
        }
        p.push(c, e.cond(&[Var::Y1], &Evaluator::us(&sc)), set_tag(&s))?;
    }
    nonnegative(&mut p, k)?;
    Ok(p)
}

/// [`parametric_lift`] with every `Omega_i` eliminated by Fourier–Motzkin and
/// redundant rows removed.
pub fn inner_region_parametric(ch: &DiscreteMto, dist: &[Pmf], aux: &AuxSpec) -> Result<Polytope> {
    let lifted = parametric_lift(ch, dist, aux)?;
    let omegas: Vec<String> = lifted.labels()[ch.num_users()..].to_vec();
    let names: Vec<&str> = omegas.iter().map(String::as_str).collect();
    lifted.eliminate(&names)?.reduce(REGION_TOL)
}

/// `Δ_S = H(Y_S|V,U_{S^c}) − H(Y_S|U_S)` for a set of interferers (code
/// indices `1..K`). Zero for the empty set.
pub fn alignment_gain(ch: &DiscreteMto, dist: &[Pmf], aux: &AuxSpec, set: &[usize]) -> Result<f64> {
    let e = Evaluator::new(ch, dist, aux)?;
    let mut mask = 0usize;
    for &j in set {
        if j == 0 || j >= e.k {
            return Err(Error::Config(format!("user {} is not an interferer", j + 1)));
        }
        mask |= 1 << (j - 1);
    }
    if mask == 0 {
        return Ok(0.0);
    }
    let (s, sc) = (e.members(mask), e.complement(mask));
    let mut given = vec![Var::V];
    given.extend(Evaluator::us(&sc));
    Ok((e.cond(&Evaluator::ys(&s), &given) - e.cond(&Evaluator::ys(&s), &Evaluator::us(&s))).max(0.0))
}

/// Product laws whose per-user entries are multiples of `1/(points − 1)`;
/// binary users get exactly `points` laws each.
pub fn distribution_grid(inputs: &[usize], points: usize) -> Result<Vec<Vec<Pmf>>> {
    let r = points.saturating_sub(1).max(1);
    let axes: Vec<Vec<Vec<f64>>> = inputs.iter().map(|&n| simplex_grid(n, r)).collect();
    let counts: Vec<usize> = axes.iter().map(Vec::len).collect();
    let total = counts
        .iter()
        .try_fold(1usize, |a, &c| a.checked_mul(c))
        .filter(|&t| t <= 1_000_000)
        .ok_or_else(|| Error::TooLarge(format!("distribution grid with {counts:?} points per user")))?;
    let mut idx = vec![0; counts.len()];
    (0..total)
        .map(|flat| {
            unflatten(flat, &counts, &mut idx);
            idx.iter().zip(&axes).map(|(&i, a)| Pmf::from_probs(a[i].clone())).collect()
        })
        .collect()
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ResolvablePoint {
    pub dist: Vec<Vec<f64>>,
    pub region: Polytope,
}

/// Capacity region pieces when `U_{K1}` is a function of `V`: the inner region
/// at each law, checked equal to the outer region there.
pub fn resolvable_capacity(ch: &DiscreteMto, dists: &[Vec<Pmf>], aux: &AuxSpec) -> Result<Vec<ResolvablePoint>> {
    aux.check(ch)?;
    let v_map = ch
        .interference()
        .as_function()
        .ok_or_else(|| Error::NotDeterministic("interference kernel is not a function".into()))?;
    let xs = ch.interferer_sizes();
    let mut u_of_v: HashMap<usize, (usize, usize)> = HashMap::new();
    for (r, &v) in v_map.iter().enumerate() {
        let u = aux.u_index(xs, r);
        match u_of_v.get(&v) {
            Some(&(r0, u0)) if u0 != u => {
                return Err(Error::NotResolvable(format!(
                    "interferer inputs {r0} and {r} give the same V = {v} but different U"
                )))
            }
            Some(_) => {}
            None => {
                u_of_v.insert(v, (r, u));
            }
        }
    }
    dists
        .par_iter()
        .map(|dist| {
            let e = Evaluator::new(ch, dist, aux)?;
            let all: Vec<usize> = (1..e.k).collect();
            let h = e.cond(&Evaluator::us(&all), &[Var::V]);
            let law: Vec<Vec<f64>> = dist.iter().map(|p| p.probs().to_vec()).collect();
            if h > REGION_TOL {
                return Err(Error::NotResolvable(format!("H(U|V) = {h} at input law {law:?}")));
            }
            let inner = inner_region(ch, dist, aux)?;
            let outer = outer_region(ch, dist, aux)?;
            if !inner.equivalent(&outer, REGION_TOL)? {
                return Err(Error::NotResolvable(format!("inner and outer regions differ at input law {law:?}")));
            }
            Ok(ResolvablePoint { dist: law, region: inner })
        })
        .collect()
}
