//! Sum-capacity evaluation in the noisy-interference regime, where the sum
//! capacity is the best single-letter treat-interference-as-noise sum rate
//! over independent inputs. The maximization is a plain maximum over product
//! laws with no time sharing.
//!
//! The receiver-1 term couples the users, so the objective is not concave in
//! general: every optimizer is multi-start and reports the spread across
//! starts, and small discrete instances are additionally certified by an
//! exhaustive grid.

mod gaussian;
pub mod optimizer;

use num_complex::Complex64;
use serde::Serialize;

use crate::channels::spec::MatrixSpec;
use crate::channels::{lift_parallel, Carrier, DiscreteMto, GaussianMto, ParallelMto};
use crate::error::{Error, Result};
use crate::infotheory::discrete::{entropy_unchecked, unflatten};
use crate::infotheory::{constellation_mi, InterferenceTerm, MiMethod, Pmf};
use crate::linalg::{self, CMatrix};
use crate::regimes::{self, RegimeReport};

pub use optimizer::{Diagnostics, OptimizerOptions, SimplexObjective};

use gaussian::PsdProblem;

#[derive(Debug, Clone, Default, PartialEq)]
pub struct CapacityOptions {
    pub optimizer: OptimizerOptions,
    /// Report a TIN lower bound instead of failing outside the noisy regime.
    pub lower_bound: bool,
    /// Power-grid points per user for the scalar Gaussian certificate; 0 disables.
    pub power_grid: usize,
    pub mi_method: MiMethod,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum ArgMax {
    Pmfs(Vec<Vec<f64>>),
    Covariances(Vec<MatrixSpec>),
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CapacityReport {
    pub bits: f64,
    pub per_user: Vec<f64>,
    pub argmax: ArgMax,
    /// The regime test failed, so `bits` is only an achievable TIN rate.
    pub lower_bound: bool,
    pub regime: Option<RegimeReport>,
    pub diagnostics: Diagnostics,
    #[serde(skip_serializing_if = "Vec::is_empty")]
    pub notes: Vec<String>,
}

fn gate(regime: &RegimeReport, opts: &CapacityOptions) -> Result<bool> {
    if regime.verdict {
        return Ok(false);
    }
    if opts.lower_bound {
        return Ok(true);
    }
    Err(Error::RegimeViolated(format!(
        "{:?} test failed with margin {:e}",
        regime.method, regime.margin
    )))
}

const LOG_FLOOR: f64 = 1e-300;

fn log2c(p: f64) -> f64 {
    p.max(LOG_FLOOR).log2()
}

/// `scale · Σ_i I(X_i; Y_i)` of a discrete channel with its analytic gradient.
pub struct TinObjective<'a> {
    pub ch: &'a DiscreteMto,
    pub scale: f64,
}

impl TinObjective<'_> {
    fn interferer_joint(&self, p: &[Vec<f64>]) -> Vec<f64> {
        let mut joint = vec![1.0];
        for pi in &p[1..] {
            joint = joint.iter().flat_map(|a| pi.iter().map(move |b| a * b)).collect();
        }
        joint
    }
}

impl SimplexObjective for TinObjective<'_> {
    fn value(&self, p: &[Vec<f64>]) -> f64 {
        let pv = self.ch.interference().push(&self.interferer_joint(p));
        let refs: Vec<&[f64]> = p.iter().map(Vec::as_slice).collect();
        self.scale * self.ch.tin_rates_raw(&refs, &pv).iter().sum::<f64>()
    }

    fn gradient(&self, p: &[Vec<f64>]) -> Vec<Vec<f64>> {
        let ch = self.ch;
        let pv = ch.interference().push(&self.interferer_joint(p));
        let py1 = ch.y1_law(&p[0], &pv);
        let ly: Vec<f64> = py1.iter().map(|&q| log2c(q)).collect();
        let f1 = ch.f1();
        let g0: Vec<f64> = (0..p[0].len())
            .map(|x| -(0..pv.len()).map(|v| pv[v] * ly[f1[x][v]]).sum::<f64>())
            .collect();
        // d(H(Y_1) − H(V)) / d p_V(v), constants dropped
        let gv: Vec<f64> = (0..pv.len())
            .map(|v| -(0..p[0].len()).map(|x| p[0][x] * ly[f1[x][v]]).sum::<f64>() + log2c(pv[v]))
            .collect();
        let sizes = ch.interferer_sizes();
        let k1 = sizes.len();
        let mut grads: Vec<Vec<f64>> = std::iter::once(g0).chain(sizes.iter().map(|&n| vec![0.0; n])).collect();
        let mut idx = vec![0; k1];
        for r in 0..ch.interference().rows() {
            unflatten(r, sizes, &mut idx);
            let coupling: f64 = ch.interference().row(r).iter().zip(&gv).map(|(w, g)| w * g).sum();
            for j in 0..k1 {
                let others: f64 = (0..k1).filter(|&m| m != j).map(|m| p[m + 1][idx[m]]).product();
                grads[j + 1][idx[j]] += others * coupling;
            }
        }
        for j in 0..k1 {
            let kernel = ch.direct(j + 1);
            let q = kernel.push(&p[j + 1]);
            for (a, g) in grads[j + 1].iter_mut().enumerate() {
                *g += kernel
                    .row(a)
                    .iter()
                    .zip(&q)
                    .filter(|(w, _)| **w > 0.0)
                    .map(|(w, qy)| w * (w.log2() - log2c(*qy)))
                    .sum::<f64>();
            }
        }
        for g in &mut grads {
            for v in g.iter_mut() {
                *v *= self.scale;
            }
        }
        grads
    }
}

fn pmfs_of(point: &[Vec<f64>]) -> Result<Vec<Pmf>> {
    point.iter().map(|p| Pmf::normalized(p)).collect()
}

fn discrete_report(ch: &DiscreteMto, res: optimizer::OptimizerResult, regime: Option<RegimeReport>, lower_bound: bool) -> Result<CapacityReport> {
    let per_user = ch.tin_rates(&pmfs_of(&res.argmax)?)?;
    Ok(CapacityReport {
        bits: res.value,
        per_user,
        argmax: ArgMax::Pmfs(res.argmax),
        lower_bound,
        regime,
        diagnostics: res.diagnostics,
        notes: Vec::new(),
    })
}

/// Maximizes `Σ_i I(X_i; Y_i)` over product input pmfs. Outside the degraded
/// regime the value is an achievable TIN rate, reported as a lower bound when
/// `opts.lower_bound` is set and an error otherwise.
pub fn sum_capacity_discrete(ch: &DiscreteMto, opts: &CapacityOptions) -> Result<CapacityReport> {
    let regime = regimes::degraded_lp(ch)?;
    let lower_bound = gate(&regime, opts)?;
    let res = optimizer::maximize(&TinObjective { ch, scale: 1.0 }, ch.inputs(), &opts.optimizer);
    discrete_report(ch, res, Some(regime), lower_bound)
}

/// For a deterministic channel, the map `q` with `V = q(Y_2, .., Y_K)` over the
/// row-major output product, if one exists. Unreachable output tuples map to 0.
pub fn deterministic_q(ch: &DiscreteMto) -> Result<Option<Vec<usize>>> {
    let v_map = ch
        .interference()
        .as_function()
        .ok_or_else(|| Error::NotDeterministic("interference kernel is not a function".into()))?;
    let y_maps: Vec<Vec<usize>> = (1..ch.num_users())
        .map(|i| {
            ch.direct(i)
                .as_function()
                .ok_or_else(|| Error::NotDeterministic(format!("direct kernel of user {} is not a function", i + 1)))
        })
        .collect::<Result<_>>()?;
    let y_sizes: Vec<usize> = (1..ch.num_users()).map(|i| ch.output_size(i)).collect();
    let ny: usize = y_sizes.iter().product();
    let mut q: Vec<Option<usize>> = vec![None; ny];
    let sizes = ch.interferer_sizes();
    let mut idx = vec![0; sizes.len()];
    for (r, &v) in v_map.iter().enumerate() {
        unflatten(r, sizes, &mut idx);
        let y = idx.iter().zip(&y_maps).zip(&y_sizes).fold(0, |acc, ((&x, m), &n)| acc * n + m[x]);
        match q[y] {
            None => q[y] = Some(v),
            Some(w) if w != v => return Ok(None),
            _ => {}
        }
    }
    Ok(Some(q.into_iter().map(|v| v.unwrap_or(0)).collect()))
}

/// `H(Y_1) + H(Y_2..Y_K | V)` evaluated through the outputs and `q`, without
/// touching the interference kernel.
struct DeterministicObjective<'a> {
    ch: &'a DiscreteMto,
    y_maps: Vec<Vec<usize>>,
    y_sizes: Vec<usize>,
    q: Vec<usize>,
}

impl SimplexObjective for DeterministicObjective<'_> {
    fn value(&self, p: &[Vec<f64>]) -> f64 {
        let py: Vec<Vec<f64>> = self
            .y_maps
            .iter()
            .zip(&self.y_sizes)
            .zip(&p[1..])
            .map(|((m, &n), pi)| {
                let mut out = vec![0.0; n];
                for (x, &y) in m.iter().enumerate() {
                    out[y] += pi[x];
                }
                out
            })
            .collect();
        let mut pv = vec![0.0; self.ch.v_size()];
        let mut idx = vec![0; self.y_sizes.len()];
        for (y, &v) in self.q.iter().enumerate() {
            unflatten(y, &self.y_sizes, &mut idx);
            pv[v] += idx.iter().zip(&py).map(|(&i, d)| d[i]).product::<f64>();
        }
        let h_y1 = entropy_unchecked(&self.ch.y1_law(&p[0], &pv));
        let h_outputs: f64 = py.iter().map(|d| entropy_unchecked(d)).sum();
        // V is a function of the outputs, so H(Y|V) = H(Y) − H(V).
        h_y1 + h_outputs - entropy_unchecked(&pv)
    }
}

/// Deterministic channels: maximizes `H(Y_1) + H(Y_2..Y_K | V)`.
pub fn sum_capacity_deterministic(ch: &DiscreteMto, opts: &CapacityOptions) -> Result<CapacityReport> {
    ch.ensure_valid()?;
    if !ch.is_deterministic() {
        return Err(Error::NotDeterministic("some kernel is not a function".into()));
    }
    let q = deterministic_q(ch)?
        .ok_or_else(|| Error::RegimeViolated("V is not a function of the interferers' outputs".into()))?;
    let obj = DeterministicObjective {
        ch,
        y_maps: (1..ch.num_users()).map(|i| ch.direct(i).as_function().expect("checked")).collect(),
        y_sizes: (1..ch.num_users()).map(|i| ch.output_size(i)).collect(),
        q,
    };
    let res = optimizer::maximize(&obj, ch.inputs(), &opts.optimizer);
    discrete_report(ch, res, None, false)
}

fn covs_to_spec(covs: &[CMatrix]) -> Vec<MatrixSpec> {
    covs.iter().map(MatrixSpec::from_matrix).collect()
}

fn single_problem(ch: &GaussianMto) -> PsdProblem {
    let k = ch.num_users();
    PsdProblem {
        carriers: vec![ch.link_table()],
        dims: vec![(0..k).map(|i| ch.input_dim(i)).collect()],
        groups: (0..k).map(|i| (vec![(0, i)], ch.powers()[i])).collect(),
    }
}

/// Maximizes the log-det TIN sum rate over `Γ_i ⪰ 0`, `tr Γ_i ≤ P_i`.
pub fn sum_capacity_gaussian(ch: &GaussianMto, opts: &CapacityOptions) -> Result<CapacityReport> {
    let regime = regimes::check_corollary1_auto(ch)?;
    let lower_bound = gate(&regime, opts)?;
    let problem = single_problem(ch);
    let o = &opts.optimizer;
    let (value, covs, values) = problem.maximize(o.restarts, o.seed, o.max_iter, o.tol);
    let covs = covs.into_iter().next().expect("one carrier");
    let mut diagnostics = Diagnostics {
        spread: value - values.iter().copied().fold(f64::INFINITY, f64::min),
        restart_values: values,
        grid_certified: false,
        grid_resolution: None,
        grid_value: None,
        grid_gap: None,
    };
    let mut notes = Vec::new();
    if ch.is_scalar() && opts.power_grid > 1 && opts.power_grid.checked_pow(ch.num_users() as u32).is_some_and(|n| n <= 4_000_000) {
        let (gv, _) = gaussian::scalar_power_grid(&ch.link_table(), ch.powers(), opts.power_grid)?;
        diagnostics.grid_certified = true;
        diagnostics.grid_resolution = Some(opts.power_grid);
        diagnostics.grid_value = Some(gv);
        diagnostics.grid_gap = Some(value - gv);
    }
    let full: Vec<bool> = covs
        .iter()
        .zip(ch.powers())
        .map(|(g, &p)| (linalg::trace_re(g) - p).abs() <= 1e-6 * p.max(1.0))
        .collect();
    if full.iter().all(|&b| b) {
        notes.push("every user transmits at full power".into());
    }
    let per_user = crate::infotheory::gaussian_sum_rate(&ch.link_table(), &covs)?.per_user;
    Ok(CapacityReport {
        bits: value,
        per_user,
        argmax: ArgMax::Covariances(covs_to_spec(&covs)),
        lower_bound,
        regime: Some(regime),
        diagnostics,
        notes,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ParallelReport {
    pub bits: f64,
    pub per_carrier: Vec<f64>,
    /// Per-carrier reports when carriers are optimized independently.
    #[serde(skip_serializing_if = "Vec::is_empty")]
    pub carriers: Vec<CapacityReport>,
    /// `power[k][c]` trace given to user `k` on carrier `c` under a shared budget.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub power_split: Option<Vec<Vec<f64>>>,
}

fn carrier_regime(c: &Carrier) -> Result<RegimeReport> {
    match c {
        Carrier::Discrete(d) => regimes::degraded_lp(d),
        Carrier::Gaussian(g) => regimes::check_corollary1_auto(g),
    }
}

/// Separate coding per carrier: the sum of per-carrier optima, with the power
/// allocation across Gaussian carriers optimized jointly under a shared budget.
pub fn sum_capacity_parallel(p: &ParallelMto, opts: &CapacityOptions) -> Result<ParallelReport> {
    for (f, c) in p.carriers().iter().enumerate() {
        let r = carrier_regime(c)?;
        if !r.verdict {
            return Err(Error::CarrierRegime {
                carrier: f,
                reason: format!("{:?} test failed with margin {:e}", r.method, r.margin),
            });
        }
    }
    let shared = p.shared_power();
    let gaussian_idx: Vec<usize> = p
        .carriers()
        .iter()
        .enumerate()
        .filter(|(_, c)| matches!(c, Carrier::Gaussian(_)))
        .map(|(i, _)| i)
        .collect();
    let mut per_carrier = vec![0.0; p.carriers().len()];
    let mut carriers = Vec::new();
    let mut power_split = None;
    if let (Some(budget), false) = (shared, gaussian_idx.is_empty()) {
        let gs: Vec<&GaussianMto> = gaussian_idx
            .iter()
            .map(|&i| match &p.carriers()[i] {
                Carrier::Gaussian(g) => g,
                Carrier::Discrete(_) => unreachable!(),
            })
            .collect();
        let k = p.num_users();
        let problem = PsdProblem {
            carriers: gs.iter().map(|g| g.link_table()).collect(),
            dims: gs.iter().map(|g| (0..k).map(|i| g.input_dim(i)).collect()).collect(),
            groups: (0..k).map(|u| ((0..gs.len()).map(|c| (c, u)).collect(), budget[u])).collect(),
        };
        let o = &opts.optimizer;
        let (_, covs, _) = problem.maximize(o.restarts, o.seed, o.max_iter, o.tol);
        for (slot, rates) in gaussian_idx.iter().zip(problem.per_user(&covs)) {
            per_carrier[*slot] = rates.iter().sum();
        }
        power_split = Some((0..k).map(|u| covs.iter().map(|c| linalg::trace_re(&c[u])).collect()).collect());
    }
    for (f, c) in p.carriers().iter().enumerate() {
        let report = match c {
            Carrier::Discrete(d) => sum_capacity_discrete(d, opts)?,
            Carrier::Gaussian(g) if shared.is_none() => sum_capacity_gaussian(g, opts)?,
            Carrier::Gaussian(_) => continue,
        };
        per_carrier[f] = report.bits;
        carriers.push(report);
    }
    Ok(ParallelReport {
        bits: per_carrier.iter().sum(),
        per_carrier,
        carriers,
        power_split,
    })
}

struct ConstellationObjective<'a> {
    ch: &'a GaussianMto,
    method: MiMethod,
}

impl ConstellationObjective<'_> {
    fn gain(&self, h: &CMatrix, user: usize) -> Complex64 {
        h[(0, 0)] * self.ch.powers()[user].sqrt()
    }

    fn rates(&self, p: &[Vec<f64>]) -> Result<Vec<f64>> {
        let cs = self.ch.constellations().expect("checked by caller");
        let w: Vec<Pmf> = pmfs_of(p)?;
        let interference: Vec<InterferenceTerm> = (1..self.ch.num_users())
            .map(|i| InterferenceTerm {
                gain: self.gain(self.ch.cross(i), i),
                constellation: cs[i].clone(),
                weights: w[i].clone(),
            })
            .collect();
        let mut out = vec![constellation_mi(&cs[0], &w[0], self.gain(self.ch.direct(0), 0), &interference, 1.0, self.method)?.bits];
        for i in 1..self.ch.num_users() {
            out.push(constellation_mi(&cs[i], &w[i], self.gain(self.ch.direct(i), i), &[], 1.0, self.method)?.bits);
        }
        Ok(out)
    }
}

impl SimplexObjective for ConstellationObjective<'_> {
    fn value(&self, p: &[Vec<f64>]) -> f64 {
        self.rates(p).map(|r| r.iter().sum()).unwrap_or(f64::NEG_INFINITY)
    }
}

/// Tolerance on a weight entry before the optimized law counts as non-uniform.
pub const UNIFORM_TOL: f64 = 1e-3;

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ConstellationReport {
    #[serde(flatten)]
    pub capacity: CapacityReport,
    pub uniform_value: f64,
    pub deviates_from_uniform: bool,
}

/// Maximizes `Σ I(X_i; Y_i)` over constellation weights. Each user's points
/// are scaled by `sqrt(P_i)`; the weights are free, so the average power equals
/// `P_i` only for constant-modulus constellations.
pub fn sum_capacity_constellation(ch: &GaussianMto, opts: &CapacityOptions) -> Result<ConstellationReport> {
    let cs = ch
        .constellations()
        .ok_or_else(|| Error::Config("channel has no constellation restriction".into()))?;
    let regime = regimes::check_corollary1_auto(ch)?;
    let lower_bound = gate(&regime, opts)?;
    let obj = ConstellationObjective { ch, method: opts.mi_method };
    let sizes: Vec<usize> = cs.iter().map(|c| c.len()).collect();
    let mut o = opts.optimizer.clone();
    // Each evaluation is a quadrature; keep the grid small.
    o.max_grid_points = o.max_grid_points.min(2_000);
    let res = optimizer::maximize(&obj, &sizes, &o);
    let uniform: Vec<Vec<f64>> = sizes.iter().map(|&n| vec![1.0 / n as f64; n]).collect();
    let uniform_value = obj.value(&uniform);
    let deviates = res
        .argmax
        .iter()
        .flatten()
        .zip(uniform.iter().flatten())
        .any(|(a, b)| (a - b).abs() > UNIFORM_TOL);
    let per_user = obj.rates(&res.argmax)?;
    Ok(ConstellationReport {
        capacity: CapacityReport {
            bits: res.value,
            per_user,
            argmax: ArgMax::Pmfs(res.argmax),
            lower_bound,
            regime: Some(regime),
            diagnostics: res.diagnostics,
            notes: Vec::new(),
        },
        uniform_value,
        deviates_from_uniform: deviates,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct TwoLetterReport {
    pub single_letter: f64,
    /// Best per-letter rate over arbitrary two-letter laws, users independent.
    pub two_letter: f64,
    pub gap: f64,
    pub diagnostics: Diagnostics,
}

/// Best `(1/2) Σ_i I(X_i¹X_i²; Y_i¹Y_i²)` over per-user two-letter laws
/// compared with the single-letter optimum `c1`.
pub fn two_letter_consistency(ch: &DiscreteMto, c1: f64, opts: &OptimizerOptions) -> Result<TwoLetterReport> {
    ch.ensure_valid()?;
    let doubled = ParallelMto::new(vec![Carrier::Discrete(ch.clone()), Carrier::Discrete(ch.clone())], None)?;
    let Carrier::Discrete(lifted) = lift_parallel(&doubled)? else {
        unreachable!("discrete carriers lift to a discrete channel")
    };
    let res = optimizer::maximize(&TinObjective { ch: &lifted, scale: 0.5 }, lifted.inputs(), opts);
    Ok(TwoLetterReport {
        single_letter: c1,
        two_letter: res.value,
        gap: res.value - c1,
        diagnostics: res.diagnostics,
    })
}
