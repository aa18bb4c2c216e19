//! Built-in consistency checks run by `mto verify`.

use mto_core::capacity::{self, CapacityOptions};
use mto_core::channels::{catalog, AuxSpec, Channel, GaussianMto};
use mto_core::infotheory::{extremal_gap_check, JointPmf, Kernel};
use mto_core::linalg::real_scalar;
use mto_core::regimes;
use mto_core::regions::{self, REGION_TOL};
use mto_core::Result;
use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::Serialize;

pub struct Suite {
    pub seed: u64,
    pub lemma1_trials: usize,
    pub equivalence_trials: usize,
    pub channel: Option<Channel>,
}

#[derive(Serialize)]
pub struct Check {
    pub name: &'static str,
    pub passed: bool,
    pub detail: String,
}

#[derive(Serialize)]
pub struct Report {
    pub passed: bool,
    pub checks: Vec<Check>,
}

fn binary_kernel(rng: &mut ChaCha8Rng) -> Result<Kernel> {
    let (a, b) = (rng.random_range(0.0..1.0), rng.random_range(0.0..1.0));
    Kernel::new(vec![vec![a, 1.0 - a], vec![b, 1.0 - b]])
}

fn extremal(rng: &mut ChaCha8Rng, trials: usize) -> Result<Check> {
    let mut holds = 0;
    let mut min_slack = f64::INFINITY;
    for _ in 0..trials {
        let (ba, cb) = (binary_kernel(rng)?, binary_kernel(rng)?);
        let w: Vec<f64> = (0..4).map(|_| rng.random_range(1e-3..1.0)).collect();
        let s: f64 = w.iter().sum();
        let law = JointPmf::new(vec!["A0".into(), "A1".into()], vec![2, 2], w.iter().map(|v| v / s).collect())?;
        let g = extremal_gap_check(&law, &ba, &cb, 2)?;
        min_slack = min_slack.min(g.slack());
        if g.holds() {
            holds += 1;
        }
    }
    Ok(Check {
        name: "extremal inequality",
        passed: holds == trials,
        detail: format!("{holds}/{trials} hold, min slack {min_slack:.3e}"),
    })
}

fn fourier_motzkin() -> Result<Check> {
    let cases = [("xor", catalog::xor()), ("concat3", catalog::concat(3)), ("interference_free3", catalog::interference_free(3))];
    let mut failed = Vec::new();
    for (name, ch) in &cases {
        let dist: Vec<_> = ch.inputs().iter().map(|&n| mto_core::infotheory::Pmf::uniform(n)).collect();
        let aux = AuxSpec::trivial(ch);
        let a = regions::inner_region(ch, &dist, &aux)?;
        let b = regions::inner_region_parametric(ch, &dist, &aux)?;
        if !a.equivalent(&b, REGION_TOL)? {
            failed.push(*name);
        }
    }
    Ok(Check {
        name: "projected inner region",
        passed: failed.is_empty(),
        detail: if failed.is_empty() {
            format!("{} channels match", cases.len())
        } else {
            format!("mismatch on {}", failed.join(", "))
        },
    })
}

fn gain(rng: &mut ChaCha8Rng, lo: f64, hi: f64) -> Complex64 {
    Complex64::from_polar(rng.random_range(lo..hi), rng.random_range(0.0..std::f64::consts::TAU))
}

fn equivalence(rng: &mut ChaCha8Rng, trials: usize) -> Result<Check> {
    let mut agree = 0;
    for _ in 0..trials {
        let k = rng.random_range(2..=4);
        let direct: Vec<Complex64> = (1..k).map(|_| gain(rng, 0.3, 2.0)).collect();
        let cross: Vec<Complex64> = (1..k).map(|_| gain(rng, 0.0, 1.6)).collect();
        let scalar = regimes::check_eq1_siso(&cross, &direct)?;
        let mut d = vec![Complex64::new(1.0, 0.0)];
        d.extend(&direct);
        let ch = GaussianMto::scalar(&d, &cross, vec![1.0; k])?;
        let lambdas: Vec<_> = cross.iter().zip(&direct).map(|(a, b)| real_scalar(a.norm_sqr() / b.norm_sqr())).collect();
        if regimes::check_corollary1(&ch, &lambdas)?.verdict == scalar.verdict {
            agree += 1;
        }
    }
    Ok(Check {
        name: "scalar and matrix regime tests agree",
        passed: agree == trials,
        detail: format!("{agree}/{trials} agree"),
    })
}

fn two_letter() -> Result<Check> {
    let ch = catalog::xor();
    let opts = CapacityOptions::default();
    let c1 = capacity::sum_capacity_discrete(&ch, &opts)?;
    let r = capacity::two_letter_consistency(&ch, c1.bits, &opts.optimizer)?;
    Ok(Check {
        name: "two-letter consistency",
        passed: r.gap.abs() <= 1e-6,
        detail: format!("single letter {:.9}, two letter per use {:.9}", r.single_letter, r.two_letter),
    })
}

pub fn run(suite: &Suite) -> Result<Report> {
    let mut rng = ChaCha8Rng::seed_from_u64(suite.seed);
    let mut checks = Vec::new();
    if let Some(ch) = &suite.channel {
        checks.push(Check {
            name: "channel file",
            passed: true,
            detail: format!("valid {} channel with {} users", ch.family(), ch.num_users()),
        });
    }
    if suite.lemma1_trials > 0 {
        checks.push(extremal(&mut rng, suite.lemma1_trials)?);
    }
    checks.push(fourier_motzkin()?);
    if suite.equivalence_trials > 0 {
        checks.push(equivalence(&mut rng, suite.equivalence_trials)?);
    }
    checks.push(two_letter()?);
    Ok(Report { passed: checks.iter().all(|c| c.passed), checks })
}
