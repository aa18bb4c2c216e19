//! H-representation polytopes `{x : a·x ≤ b}` over labeled variables.

use std::fmt::Write as _;

use nalgebra::{DMatrix, DVector};
use serde::Serialize;

use crate::error::{Error, Result};
use crate::lp::{Cmp, LinearProgram, LpOutcome};

/// Coefficients within this of each other (after normalization) are equal.
pub const DUP_TOL: f64 = 1e-12;
/// LP pruning only runs up to this many variables.
pub const MAX_LP_REDUCE_VARS: usize = 12;

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Inequality {
    pub coeffs: Vec<f64>,
    pub bound: f64,
    #[serde(skip_serializing_if = "String::is_empty")]
    pub tag: String,
}

impl Inequality {
    fn normalized(&self) -> Inequality {
        let scale = self.coeffs.iter().fold(0.0f64, |m, c| m.max(c.abs()));
        if scale == 0.0 {
            return self.clone();
        }
        Inequality {
            coeffs: self.coeffs.iter().map(|c| c / scale).collect(),
            bound: self.bound / scale,
            tag: self.tag.clone(),
        }
    }

    fn is_trivial(&self) -> bool {
        self.coeffs.iter().all(|c| c.abs() <= DUP_TOL) && self.bound >= -DUP_TOL
    }

    fn value(&self, x: &[f64]) -> f64 {
        self.coeffs.iter().zip(x).map(|(a, b)| a * b).sum()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Polytope {
    labels: Vec<String>,
    rows: Vec<Inequality>,
}

impl Polytope {
    pub fn new(labels: Vec<String>) -> Self {
        Self { labels, rows: Vec::new() }
    }

    pub fn labels(&self) -> &[String] {
        &self.labels
    }

    pub fn rows(&self) -> &[Inequality] {
        &self.rows
    }

    pub fn dim(&self) -> usize {
        self.labels.len()
    }

    pub fn var_index(&self, label: &str) -> Option<usize> {
        self.labels.iter().position(|l| l == label)
    }

    pub fn push(&mut self, coeffs: Vec<f64>, bound: f64, tag: impl Into<String>) -> Result<()> {
        if coeffs.len() != self.dim() {
            return Err(Error::Dimension(format!("{} coefficients for {} variables", coeffs.len(), self.dim())));
        }
        if coeffs.iter().any(|c| c.is_nan()) || bound.is_nan() {
            return Err(Error::Dimension("inequality has a NaN entry".into()));
        }
        self.rows.push(Inequality { coeffs, bound, tag: tag.into() });
        Ok(())
    }

    /// Adds `x_i ≥ 0` for the named variables.
    pub fn push_nonnegative(&mut self, labels: &[&str]) -> Result<()> {
        for l in labels {
            let j = self.var_index(l).ok_or_else(|| Error::UnknownAxis(l.to_string()))?;
            let mut c = vec![0.0; self.dim()];
            c[j] = -1.0;
            self.push(c, 0.0, format!("{l} >= 0"))?;
        }
        Ok(())
    }

    /// Rows with only nonnegative coefficients, at least one positive.
    pub fn upper_bounds(&self) -> impl Iterator<Item = &Inequality> {
        self.rows
            .iter()
            .filter(|r| r.coeffs.iter().all(|&c| c >= 0.0) && r.coeffs.iter().any(|&c| c > 0.0))
    }

    pub fn contains_point(&self, x: &[f64], tol: f64) -> bool {
        self.rows.iter().all(|r| r.value(x) <= r.bound + tol)
    }

    fn lp(&self) -> LinearProgram {
        let mut lp = LinearProgram::new(self.dim());
        for r in &self.rows {
            lp.dense_constraint(&r.coeffs, Cmp::Le, r.bound);
        }
        lp
    }

    /// `max c·x`: `None` when empty, `+∞` when unbounded.
    pub fn max_linear(&self, c: &[f64]) -> Result<Option<f64>> {
        Ok(match self.lp().maximize(c)? {
            LpOutcome::Optimal { objective, .. } => Some(objective),
            LpOutcome::Unbounded => Some(f64::INFINITY),
            LpOutcome::Infeasible => None,
        })
    }

    fn same_labels(&self, other: &Polytope) -> Result<()> {
        if self.labels != other.labels {
            return Err(Error::Dimension(format!("variables {:?} vs {:?}", self.labels, other.labels)));
        }
        Ok(())
    }

    /// `self ⊆ other`, checked by maximizing each row of `other` over `self`.
    pub fn is_subset_of(&self, other: &Polytope, tol: f64) -> Result<bool> {
        self.same_labels(other)?;
        for r in &other.rows {
            match self.max_linear(&r.coeffs)? {
                None => return Ok(true),
                Some(m) if m > r.bound + tol => return Ok(false),
                _ => {}
            }
        }
        Ok(true)
    }

    pub fn equivalent(&self, other: &Polytope, tol: f64) -> Result<bool> {
        Ok(self.is_subset_of(other, tol)? && other.is_subset_of(self, tol)?)
    }

    /// Normalizes rows, drops trivial ones and keeps the tightest of each
    /// group of parallel rows.
    pub fn dedupe(&self) -> Polytope {
        let mut kept: Vec<Inequality> = Vec::new();
        for r in self.rows.iter().map(Inequality::normalized) {
            if r.is_trivial() {
                continue;
            }
            match kept
                .iter_mut()
                .find(|k| k.coeffs.iter().zip(&r.coeffs).all(|(a, b)| (a - b).abs() <= DUP_TOL))
            {
                Some(k) if r.bound < k.bound => *k = r,
                Some(_) => {}
                None => kept.push(r),
            }
        }
        Polytope { labels: self.labels.clone(), rows: kept }
    }

    /// Removes redundant rows: duplicates and dominated rows first, then,
    /// for up to [`MAX_LP_REDUCE_VARS`] variables, every row implied by the rest.
    pub fn reduce(&self, tol: f64) -> Result<Polytope> {
        let mut p = self.dedupe();
        if p.dim() > MAX_LP_REDUCE_VARS {
            return Ok(p);
        }
        let mut i = 0;
        while i < p.rows.len() {
            let row = p.rows.remove(i);
            let implied = match p.max_linear(&row.coeffs)? {
                Some(m) => m <= row.bound + tol,
                None => false,
            };
            if !implied {
                p.rows.insert(i, row);
                i += 1;
            }
        }
        Ok(p)
    }

    /// Exact projection eliminating `var`: keeps rows free of it and adds a
    /// positive combination of every (positive, negative) coefficient pair.
    pub fn fourier_motzkin(&self, var: &str) -> Result<Polytope> {
        let j = self.var_index(var).ok_or_else(|| Error::UnknownAxis(var.to_string()))?;
        let drop = |c: &[f64]| -> Vec<f64> { c.iter().enumerate().filter(|(i, _)| *i != j).map(|(_, v)| *v).collect() };
        let labels: Vec<String> = self.labels.iter().enumerate().filter(|(i, _)| *i != j).map(|(_, l)| l.clone()).collect();
        let mut out = Polytope::new(labels);
        let (mut pos, mut neg) = (Vec::new(), Vec::new());
        for r in &self.rows {
            let a = r.coeffs[j];
            if a > DUP_TOL {
                pos.push(r);
            } else if a < -DUP_TOL {
                neg.push(r);
            } else {
                out.rows.push(Inequality { coeffs: drop(&r.coeffs), bound: r.bound, tag: r.tag.clone() });
            }
        }
        for p in &pos {
            for n in &neg {
                let (sp, sn) = (-n.coeffs[j], p.coeffs[j]);
                let coeffs: Vec<f64> = p.coeffs.iter().zip(&n.coeffs).map(|(a, b)| sp * a + sn * b).collect();
                out.rows.push(Inequality {
                    coeffs: drop(&coeffs),
                    bound: sp * p.bound + sn * n.bound,
                    tag: String::new(),
                });
            }
        }
        Ok(out.dedupe())
    }

    pub fn eliminate(&self, vars: &[&str]) -> Result<Polytope> {
        vars.iter().try_fold(self.clone(), |p, v| p.fourier_motzkin(v))
    }

    /// Vertices by brute force over every `dim`-subset of rows.
    pub fn vertices(&self, tol: f64) -> Vec<Vec<f64>> {
        let n = self.dim();
        let rows = self.dedupe().rows;
        let m = rows.len();
        let mut out: Vec<Vec<f64>> = Vec::new();
        if n == 0 || m < n {
            return out;
        }
        let mut pick: Vec<usize> = (0..n).collect();
        loop {
            let a = DMatrix::from_fn(n, n, |r, c| rows[pick[r]].coeffs[c]);
            let b = DVector::from_fn(n, |r, _| rows[pick[r]].bound);
            if let Some(x) = a.lu().solve(&b) {
                let x: Vec<f64> = x.iter().copied().collect();
                if x.iter().all(|v| v.is_finite())
                    && rows.iter().all(|r| r.value(&x) <= r.bound + tol)
                    && !out.iter().any(|v| v.iter().zip(&x).all(|(p, q)| (p - q).abs() <= tol))
                {
                    out.push(x);
                }
            }
            // next combination
            let mut i = n;
            while i > 0 && pick[i - 1] == m - n + i - 1 {
                i -= 1;
            }
            if i == 0 {
                break;
            }
            pick[i - 1] += 1;
            for t in i..n {
                pick[t] = pick[t - 1] + 1;
            }
        }
        out.sort_by(|a, b| a.partial_cmp(b).expect("finite vertices"));
        out
    }

    /// One labeled inequality per line.
    pub fn to_text(&self) -> String {
        let mut s = format!("variables: {}\n", self.labels.join(", "));
        for r in &self.rows {
            let mut lhs = String::new();
            for (c, l) in r.coeffs.iter().zip(&self.labels) {
                if *c == 0.0 {
                    continue;
                }
                let sign = if *c < 0.0 { "-" } else if lhs.is_empty() { "" } else { "+" };
                let mag = c.abs();
                let term = if mag == 1.0 { l.clone() } else { format!("{mag} {l}") };
                if lhs.is_empty() {
                    lhs = format!("{sign}{term}");
                } else {
                    let _ = write!(lhs, " {sign} {term}");
                }
            }
            if lhs.is_empty() {
                lhs.push('0');
            }
            let _ = write!(s, "{lhs} <= {}", r.bound);
            if !r.tag.is_empty() {
                let _ = write!(s, "    # {}", r.tag);
            }
            s.push('\n');
        }
        s
    }

    pub fn vertices_csv(&self, tol: f64) -> String {
        let mut s = self.labels.join(",");
        s.push('\n');
        for v in self.vertices(tol) {
            let line: Vec<String> = v.iter().map(|x| format!("{}", if x.abs() < tol { 0.0 } else { *x })).collect();
            s.push_str(&line.join(","));
            s.push('\n');
        }
        s
    }
}
