//! Monte-Carlo random coding over a discrete channel: i.i.d. codebooks,
//! treating-interference-as-noise typicality decoding at receiver 1 and
//! per-user typicality decoding at the other receivers.
//!
//! Codewords are drawn on the fly while decoding, so a trial stops as soon as
//! its outcome is known: the true codeword being atypical, or a second typical
//! codeword (a tie, counted as an error).

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::Serialize;

use crate::channels::DiscreteMto;
use crate::error::{Error, Result};
use crate::infotheory::{Kernel, Pmf};

pub const DEFAULT_EPSILON: f64 = 0.5;
pub const DEFAULT_MAX_CODEWORDS: usize = 1 << 16;
const WILSON_Z: f64 = 1.959_963_984_540_054;

/// Number of codewords at rate `rate` and blocklength `t`: `⌊2^{tR}⌋`, at least 1.
pub fn codebook_size(rate: f64, t: usize) -> f64 {
    (rate * t as f64).exp2().floor().max(1.0)
}

fn cdf(p: &[f64]) -> Vec<f64> {
    let mut acc = 0.0;
    let mut out: Vec<f64> = p
        .iter()
        .map(|v| {
            acc += v;
            acc
        })
        .collect();
    if let Some(last) = out.last_mut() {
        *last = f64::INFINITY;
    }
    out
}

fn draw(cdf: &[f64], rng: &mut ChaCha8Rng) -> usize {
    let u: f64 = rng.random();
    cdf.iter().position(|&c| u < c).unwrap_or(cdf.len() - 1)
}

fn draw_word(cdf: &[f64], t: usize, rng: &mut ChaCha8Rng) -> Vec<usize> {
    (0..t).map(|_| draw(cdf, rng)).collect()
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Codebook {
    pub user: usize,
    pub rate: f64,
    pub blocklength: usize,
    pub seed: u64,
    pub codewords: Vec<Vec<usize>>,
}

impl Codebook {
    /// `⌊2^{T R}⌋` i.i.d. codewords drawn from `law`, reproducible from `seed`.
    pub fn generate(user: usize, rate: f64, blocklength: usize, law: &Pmf, seed: u64, max_codewords: usize) -> Result<Self> {
        let m = codebook_size(rate, blocklength);
        if m > max_codewords as f64 {
            return Err(Error::Config(format!(
                "user {} needs {m} codewords at rate {rate} and blocklength {blocklength}, cap is {max_codewords}",
                user + 1
            )));
        }
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        rng.set_stream(user as u64);
        let c = cdf(law.probs());
        Ok(Self {
            user,
            rate,
            blocklength,
            seed,
            codewords: (0..m as usize).map(|_| draw_word(&c, blocklength, &mut rng)).collect(),
        })
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct TrialConfig {
    pub rates: Vec<f64>,
    pub blocklengths: Vec<usize>,
    pub trials: usize,
    pub epsilon: f64,
    pub seed: u64,
    /// Codeword law per user; uniform when absent.
    pub dist: Option<Vec<Pmf>>,
    pub max_codewords: usize,
}

impl TrialConfig {
    pub fn new(rates: Vec<f64>, blocklengths: Vec<usize>, trials: usize) -> Self {
        Self {
            rates,
            blocklengths,
            trials,
            epsilon: DEFAULT_EPSILON,
            seed: 0,
            dist: None,
            max_codewords: DEFAULT_MAX_CODEWORDS,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CurvePoint {
    pub blocklength: usize,
    pub rates: Vec<f64>,
    pub trials: usize,
    pub errors: usize,
    pub p_hat: f64,
    pub ci_lo: f64,
    pub ci_hi: f64,
}

/// 95% Wilson score interval.
pub fn wilson_interval(errors: usize, trials: usize) -> (f64, f64) {
    let n = trials as f64;
    let p = errors as f64 / n;
    let z2 = WILSON_Z * WILSON_Z;
    let center = (p + z2 / (2.0 * n)) / (1.0 + z2 / n);
    let half = WILSON_Z * (p * (1.0 - p) / n + z2 / (4.0 * n * n)).sqrt() / (1.0 + z2 / n);
    ((center - half).max(0.0), (center + half).min(1.0))
}

/// Joint law of a codeword symbol and the decoder's output, flattened as `[x][y]`.
struct Decoder {
    joint: Vec<f64>,
    ny: usize,
    size: f64,
    cdf: Vec<f64>,
}

impl Decoder {
    fn typical(&self, x: &[usize], y: &[usize], eps: f64, counts: &mut [usize]) -> bool {
        counts.iter_mut().for_each(|c| *c = 0);
        for (&a, &b) in x.iter().zip(y) {
            let cell = a * self.ny + b;
            if self.joint[cell] == 0.0 {
                return false;
            }
            counts[cell] += 1;
        }
        let t = x.len() as f64;
        let slack = eps / self.joint.len() as f64;
        self.joint
            .iter()
            .zip(counts.iter())
            .all(|(&p, &n)| (n as f64 / t - p).abs() <= eps * p + slack)
    }

    /// True when decoding fails: the sent word is atypical or another
    /// codeword is typical too.
    fn fails(&self, sent: &[usize], y: &[usize], eps: f64, rng: &mut ChaCha8Rng) -> bool {
        if self.size <= 1.0 {
            return false;
        }
        let mut counts = vec![0; self.joint.len()];
        if !self.typical(sent, y, eps, &mut counts) {
            return true;
        }
        let mut candidate = vec![0; sent.len()];
        for _ in 1..self.size as usize {
            for s in candidate.iter_mut() {
                *s = draw(&self.cdf, rng);
            }
            if self.typical(&candidate, y, eps, &mut counts) {
                return true;
            }
        }
        false
    }
}

fn pass_through(kernel: &Kernel, x: usize, rng: &mut ChaCha8Rng, cdfs: &[Vec<f64>]) -> usize {
    let row = kernel.row(x);
    if row.len() == 1 {
        return 0;
    }
    draw(&cdfs[x], rng)
}

fn check(ch: &DiscreteMto, cfg: &TrialConfig) -> Result<Vec<Pmf>> {
    ch.ensure_valid()?;
    let k = ch.num_users();
    if cfg.rates.len() != k {
        return Err(Error::Config(format!("{} rates for {k} users", cfg.rates.len())));
    }
    if cfg.rates.iter().any(|r| !(r.is_finite() && *r >= 0.0)) {
        return Err(Error::Config("rates must be finite and nonnegative".into()));
    }
    if cfg.trials == 0 {
        return Err(Error::Config("at least one trial per point".into()));
    }
    if !(cfg.epsilon > 0.0) {
        return Err(Error::Config("typicality epsilon must be positive".into()));
    }
    if cfg.blocklengths.contains(&0) {
        return Err(Error::Config("blocklengths must be positive".into()));
    }
    let dist = match &cfg.dist {
        Some(d) => d.clone(),
        None => ch.inputs().iter().map(|&n| Pmf::uniform(n)).collect(),
    };
    ch.check_dist(&dist)?;
    for &t in &cfg.blocklengths {
        for (i, &r) in cfg.rates.iter().enumerate() {
            let m = codebook_size(r, t);
            if m > cfg.max_codewords as f64 {
                return Err(Error::Config(format!(
                    "user {} needs {m} codewords at rate {r} and blocklength {t}, cap is {}",
                    i + 1,
                    cfg.max_codewords
                )));
            }
        }
    }
    Ok(dist)
}

/// Block error rate at one blocklength: an error is any user decoding wrongly.
pub fn run_tin_trial(ch: &DiscreteMto, cfg: &TrialConfig, blocklength: usize) -> Result<CurvePoint> {
    let dist = check(ch, cfg)?;
    let k = ch.num_users();
    let t = blocklength;
    let pv = ch.interference().push(&ch.interferer_joint(&dist));
    let mut decoders = Vec::with_capacity(k);
    {
        let ny = ch.y1_size();
        let mut joint = vec![0.0; ch.inputs()[0] * ny];
        for (x, row) in ch.f1().iter().enumerate() {
            for (v, &y) in row.iter().enumerate() {
                joint[x * ny + y] += dist[0].probs()[x] * pv[v];
            }
        }
        decoders.push(Decoder { joint, ny, size: codebook_size(cfg.rates[0], t), cdf: cdf(dist[0].probs()) });
    }
    for i in 1..k {
        let w = ch.direct(i);
        let ny = w.cols();
        let joint = (0..w.rows())
            .flat_map(|x| (0..ny).map(move |y| (x, y)))
            .map(|(x, y)| dist[i].probs()[x] * w.get(x, y))
            .collect();
        decoders.push(Decoder { joint, ny, size: codebook_size(cfg.rates[i], t), cdf: cdf(dist[i].probs()) });
    }
    let input_cdfs: Vec<Vec<f64>> = dist.iter().map(|p| cdf(p.probs())).collect();
    let direct_cdfs: Vec<Vec<Vec<f64>>> = (1..k)
        .map(|i| (0..ch.direct(i).rows()).map(|x| cdf(ch.direct(i).row(x))).collect())
        .collect();
    let v_cdfs: Vec<Vec<f64>> = (0..ch.interference().rows()).map(|r| cdf(ch.interference().row(r))).collect();
    let sizes = ch.interferer_sizes();

    let errors: usize = (0..cfg.trials)
        .into_par_iter()
        .map(|trial| {
            let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
            rng.set_stream(((t as u64) << 40) | trial as u64);
            let sent: Vec<Vec<usize>> = input_cdfs.iter().map(|c| draw_word(c, t, &mut rng)).collect();
            let mut outputs: Vec<Vec<usize>> = vec![Vec::with_capacity(t); k];
            for s in 0..t {
                let row = sizes.iter().enumerate().fold(0, |acc, (j, &n)| acc * n + sent[j + 1][s]);
                let v = pass_through(ch.interference(), row, &mut rng, &v_cdfs);
                outputs[0].push(ch.f1()[sent[0][s]][v]);
                for i in 1..k {
                    let y = pass_through(ch.direct(i), sent[i][s], &mut rng, &direct_cdfs[i - 1]);
                    outputs[i].push(y);
                }
            }
            let failed = decoders
                .iter()
                .enumerate()
                .any(|(i, d)| d.fails(&sent[i], &outputs[i], cfg.epsilon, &mut rng));
            usize::from(failed)
        })
        .sum();
    let (ci_lo, ci_hi) = wilson_interval(errors, cfg.trials);
    Ok(CurvePoint {
        blocklength: t,
        rates: cfg.rates.clone(),
        trials: cfg.trials,
        errors,
        p_hat: errors as f64 / cfg.trials as f64,
        ci_lo,
        ci_hi,
    })
}

/// One [`CurvePoint`] per blocklength in `cfg`.
pub fn sweep_blocklength(ch: &DiscreteMto, cfg: &TrialConfig) -> Result<Vec<CurvePoint>> {
    check(ch, cfg)?;
    cfg.blocklengths.iter().map(|&t| run_tin_trial(ch, cfg, t)).collect()
}

/// `T,R_1..R_K,trials,errors,p_hat,ci_lo,ci_hi` with a header row.
pub fn to_csv(points: &[CurvePoint], num_users: usize) -> String {
    let mut s = String::from("T");
    for i in 1..=num_users {
        s.push_str(&format!(",R_{i}"));
    }
    s.push_str(",trials,errors,p_hat,ci_lo,ci_hi\n");
    for p in points {
        s.push_str(&p.blocklength.to_string());
        for r in &p.rates {
            s.push_str(&format!(",{r}"));
        }
        s.push_str(&format!(",{},{},{},{},{}\n", p.trials, p.errors, p.p_hat, p.ci_lo, p.ci_hi));
    }
    s
}
