//! Finite distributions, stochastic kernels and exact entropy kernels.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Probabilities below this are treated as exactly zero inside entropy sums.
pub const ZERO_CLAMP: f64 = 1e-15;

/// Total-mass tolerance of a valid distribution.
pub const MASS_TOL: f64 = 1e-12;

fn mass_tolerance(n: usize) -> f64 {
    // Summing many entries accumulates rounding on top of the nominal tolerance.
    MASS_TOL + n as f64 * 4.0 * f64::EPSILON
}

fn check_mass(probs: &[f64]) -> Result<()> {
    if let Some((i, p)) = probs
        .iter()
        .enumerate()
        .find(|(_, p)| !p.is_finite() || **p < 0.0)
    {
        return Err(Error::InvalidDistribution(format!(
            "entry {i} has mass {p}"
        )));
    }
    let total: f64 = probs.iter().sum();
    if (total - 1.0).abs() > mass_tolerance(probs.len()) {
        return Err(Error::InvalidDistribution(format!(
            "total mass {total} differs from 1"
        )));
    }
    Ok(())
}

/// `-Σ p log2 p` over already-validated probabilities.
pub(crate) fn entropy_unchecked(probs: &[f64]) -> f64 {
    let h: f64 = probs
        .iter()
        .filter(|&&p| p > ZERO_CLAMP)
        .map(|&p| -p * p.log2())
        .sum();
    h.max(0.0)
}

/// Shannon entropy in bits of a probability vector.
pub fn entropy(probs: &[f64]) -> Result<f64> {
    check_mass(probs)?;
    Ok(entropy_unchecked(probs))
}

/// Binary entropy function in bits.
pub fn binary_entropy(p: f64) -> f64 {
    entropy_unchecked(&[p, 1.0 - p])
}

/// A probability mass function over a labeled finite alphabet.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Pmf {
    labels: Vec<String>,
    probs: Vec<f64>,
}

impl Pmf {
    pub fn new(labels: Vec<String>, probs: Vec<f64>) -> Result<Self> {
        if labels.len() != probs.len() {
            return Err(Error::Dimension(format!(
                "{} labels for {} probabilities",
                labels.len(),
                probs.len()
            )));
        }
        if probs.is_empty() {
            return Err(Error::InvalidDistribution("empty alphabet".into()));
        }
        for (i, l) in labels.iter().enumerate() {
            if labels[..i].contains(l) {
                return Err(Error::InvalidDistribution(format!("duplicate label `{l}`")));
            }
        }
        check_mass(&probs)?;
        Ok(Self { labels, probs })
    }

    /// Labels default to `0..n`.
    pub fn from_probs(probs: Vec<f64>) -> Result<Self> {
        Self::new(default_labels(probs.len()), probs)
    }

    /// Scales nonnegative weights to unit mass.
    pub fn normalized(weights: &[f64]) -> Result<Self> {
        let total: f64 = weights.iter().sum();
        if weights.iter().any(|w| !w.is_finite() || *w < 0.0) || total <= 0.0 {
            return Err(Error::InvalidDistribution(
                "weights must be nonnegative with positive sum".into(),
            ));
        }
        Self::from_probs(weights.iter().map(|w| w / total).collect())
    }

    pub fn uniform(n: usize) -> Self {
        assert!(n > 0, "uniform pmf over an empty alphabet");
        Self {
            labels: default_labels(n),
            probs: vec![1.0 / n as f64; n],
        }
    }

    pub fn point_mass(n: usize, at: usize) -> Self {
        assert!(at < n, "point mass outside the alphabet");
        let mut probs = vec![0.0; n];
        probs[at] = 1.0;
        Self {
            labels: default_labels(n),
            probs,
        }
    }

    pub fn with_labels(mut self, labels: Vec<String>) -> Result<Self> {
        let probs = std::mem::take(&mut self.probs);
        Self::new(labels, probs)
    }

    pub fn probs(&self) -> &[f64] {
        &self.probs
    }

    pub fn labels(&self) -> &[String] {
        &self.labels
    }

    pub fn len(&self) -> usize {
        self.probs.len()
    }

    pub fn is_empty(&self) -> bool {
        self.probs.is_empty()
    }

    pub fn entropy(&self) -> f64 {
        entropy_unchecked(&self.probs)
    }

    pub fn max_abs_diff(&self, other: &Pmf) -> f64 {
        self.probs
            .iter()
            .zip(&other.probs)
            .map(|(a, b)| (a - b).abs())
            .fold(0.0, f64::max)
    }
}

pub(crate) fn default_labels(n: usize) -> Vec<String> {
    (0..n).map(|i| i.to_string()).collect()
}

/// A row-stochastic matrix `p(out | in)`; rows are inputs.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "Vec<Vec<f64>>", into = "Vec<Vec<f64>>")]
pub struct Kernel {
    rows: usize,
    cols: usize,
    data: Vec<f64>,
}

impl TryFrom<Vec<Vec<f64>>> for Kernel {
    type Error = Error;
    fn try_from(rows: Vec<Vec<f64>>) -> Result<Self> {
        Kernel::new(rows)
    }
}

impl From<Kernel> for Vec<Vec<f64>> {
    fn from(k: Kernel) -> Self {
        (0..k.rows).map(|i| k.row(i).to_vec()).collect()
    }
}

impl Kernel {
    /// Shape is checked here; stochasticity is checked by [`Kernel::check_stochastic`].
    pub fn new(rows: Vec<Vec<f64>>) -> Result<Self> {
        let n = rows.len();
        let m = rows.first().map_or(0, Vec::len);
        if n == 0 || m == 0 {
            return Err(Error::Dimension("kernel needs at least one row and column".into()));
        }
        if let Some(i) = rows.iter().position(|r| r.len() != m) {
            return Err(Error::Dimension(format!(
                "kernel row {i} has {} entries, expected {m}",
                rows[i].len()
            )));
        }
        Ok(Self {
            rows: n,
            cols: m,
            data: rows.into_iter().flatten().collect(),
        })
    }

    pub fn from_flat(rows: usize, cols: usize, data: Vec<f64>) -> Result<Self> {
        if rows * cols != data.len() || rows == 0 || cols == 0 {
            return Err(Error::Dimension(format!(
                "{} entries for a {rows}x{cols} kernel",
                data.len()
            )));
        }
        Ok(Self { rows, cols, data })
    }

    pub fn identity(n: usize) -> Self {
        Self::deterministic(&(0..n).collect::<Vec<_>>(), n)
    }

    /// Kernel of the map `i -> map[i]`.
    pub fn deterministic(map: &[usize], cols: usize) -> Self {
        let mut data = vec![0.0; map.len() * cols];
        for (i, &j) in map.iter().enumerate() {
            data[i * cols + j] = 1.0;
        }
        Self {
            rows: map.len(),
            cols,
            data,
        }
    }

    /// Binary symmetric channel with crossover `p`.
    pub fn bsc(p: f64) -> Self {
        Self {
            rows: 2,
            cols: 2,
            data: vec![1.0 - p, p, p, 1.0 - p],
        }
    }

    /// Binary erasure channel; outputs are `{0, 1, erasure}`.
    pub fn bec(q: f64) -> Self {
        Self {
            rows: 2,
            cols: 3,
            data: vec![1.0 - q, 0.0, q, 0.0, 1.0 - q, q],
        }
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn row(&self, i: usize) -> &[f64] {
        &self.data[i * self.cols..(i + 1) * self.cols]
    }

    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.data[i * self.cols + j]
    }

    /// First row that has a negative entry or does not sum to one.
    pub fn check_stochastic(&self, tol: f64) -> Option<(usize, f64)> {
        (0..self.rows).find_map(|i| {
            let r = self.row(i);
            let s: f64 = r.iter().sum();
            let neg = r.iter().any(|&p| !p.is_finite() || p < 0.0);
            (neg || (s - 1.0).abs() > tol).then_some((i, s))
        })
    }

    pub fn ensure_stochastic(&self, name: &str) -> Result<()> {
        match self.check_stochastic(MASS_TOL) {
            Some((row, sum)) => Err(Error::NonStochastic {
                kernel: name.to_string(),
                row,
                sum,
            }),
            None => Ok(()),
        }
    }

    /// Output index of each row when every row is a point mass.
    pub fn as_function(&self) -> Option<Vec<usize>> {
        (0..self.rows)
            .map(|i| {
                let r = self.row(i);
                let j = r.iter().position(|&p| p > 0.5)?;
                r.iter()
                    .enumerate()
                    .all(|(k, &p)| if k == j { (p - 1.0).abs() <= MASS_TOL } else { p.abs() <= MASS_TOL })
                    .then_some(j)
            })
            .collect()
    }

    /// Cascade `self` then `next`: `p(z|x) = Σ_y p(y|x) q(z|y)`.
    pub fn then(&self, next: &Kernel) -> Result<Kernel> {
        if self.cols != next.rows {
            return Err(Error::Dimension(format!(
                "cannot cascade a {}-output kernel into a {}-input kernel",
                self.cols, next.rows
            )));
        }
        let mut data = vec![0.0; self.rows * next.cols];
        for i in 0..self.rows {
            for k in 0..self.cols {
                let a = self.get(i, k);
                if a == 0.0 {
                    continue;
                }
                for j in 0..next.cols {
                    data[i * next.cols + j] += a * next.get(k, j);
                }
            }
        }
        Kernel::from_flat(self.rows, next.cols, data)
    }

    /// Output distribution for input distribution `p`.
    pub fn push(&self, p: &[f64]) -> Vec<f64> {
        let mut out = vec![0.0; self.cols];
        for (i, &pi) in p.iter().enumerate() {
            if pi == 0.0 {
                continue;
            }
            for (o, &w) in out.iter_mut().zip(self.row(i)) {
                *o += pi * w;
            }
        }
        out
    }

    /// Tensor product kernel; row `(i1, i2)` maps to `i1 * other.rows + i2`.
    pub fn kron(&self, other: &Kernel) -> Kernel {
        let rows = self.rows * other.rows;
        let cols = self.cols * other.cols;
        let mut data = vec![0.0; rows * cols];
        for i1 in 0..self.rows {
            for i2 in 0..other.rows {
                let r = i1 * other.rows + i2;
                for j1 in 0..self.cols {
                    for j2 in 0..other.cols {
                        data[r * cols + j1 * other.cols + j2] = self.get(i1, j1) * other.get(i2, j2);
                    }
                }
            }
        }
        Kernel { rows, cols, data }
    }
}

/// Mutual information `I(X;Y)` for input `p` through `kernel`, in bits.
pub fn channel_mutual_information(p: &[f64], kernel: &Kernel) -> f64 {
    let q = kernel.push(p);
    let cond: f64 = p
        .iter()
        .enumerate()
        .map(|(i, &pi)| pi * entropy_unchecked(kernel.row(i)))
        .sum();
    (entropy_unchecked(&q) - cond).max(0.0)
}

/// A dense joint distribution over named axes, row-major (last axis fastest).
#[derive(Debug, Clone, PartialEq)]
pub struct JointPmf {
    axes: Vec<String>,
    shape: Vec<usize>,
    probs: Vec<f64>,
}

impl JointPmf {
    pub fn new(axes: Vec<String>, shape: Vec<usize>, probs: Vec<f64>) -> Result<Self> {
        if axes.len() != shape.len() {
            return Err(Error::Dimension(format!(
                "{} axis names for {} axis sizes",
                axes.len(),
                shape.len()
            )));
        }
        for (i, a) in axes.iter().enumerate() {
            if axes[..i].contains(a) {
                return Err(Error::OverlappingAxes(a.clone()));
            }
        }
        let size: usize = shape.iter().product();
        if size != probs.len() || shape.contains(&0) {
            return Err(Error::Dimension(format!(
                "shape {shape:?} does not match {} entries",
                probs.len()
            )));
        }
        check_mass(&probs)?;
        Ok(Self { axes, shape, probs })
    }

    /// Builds the table by evaluating `f` at every multi-index.
    pub fn from_fn(axes: &[&str], shape: &[usize], mut f: impl FnMut(&[usize]) -> f64) -> Result<Self> {
        let size: usize = shape.iter().product();
        let mut idx = vec![0usize; shape.len()];
        let mut probs = Vec::with_capacity(size);
        for flat in 0..size {
            unflatten(flat, shape, &mut idx);
            probs.push(f(&idx));
        }
        Self::new(axes.iter().map(|s| s.to_string()).collect(), shape.to_vec(), probs)
    }

    /// Independent product of the given marginals.
    pub fn product(factors: &[(&str, &Pmf)]) -> Result<Self> {
        let axes: Vec<&str> = factors.iter().map(|(a, _)| *a).collect();
        let shape: Vec<usize> = factors.iter().map(|(_, p)| p.len()).collect();
        Self::from_fn(&axes, &shape, |idx| {
            idx.iter().zip(factors).map(|(&i, (_, p))| p.probs()[i]).product()
        })
    }

    pub fn axes(&self) -> &[String] {
        &self.axes
    }

    pub fn shape(&self) -> &[usize] {
        &self.shape
    }

    pub fn probs(&self) -> &[f64] {
        &self.probs
    }

    pub fn axis_index(&self, name: &str) -> Result<usize> {
        self.axes
            .iter()
            .position(|a| a == name)
            .ok_or_else(|| Error::UnknownAxis(name.to_string()))
    }

    fn indices(&self, names: &[&str]) -> Result<Vec<usize>> {
        let idx: Vec<usize> = names.iter().map(|n| self.axis_index(n)).collect::<Result<_>>()?;
        for (i, a) in idx.iter().enumerate() {
            if idx[..i].contains(a) {
                return Err(Error::OverlappingAxes(self.axes[*a].clone()));
            }
        }
        Ok(idx)
    }

    /// Marginal over `keep`, with axes in the order given.
    pub fn marginal(&self, keep: &[&str]) -> Result<JointPmf> {
        let kept = self.indices(keep)?;
        let shape: Vec<usize> = kept.iter().map(|&i| self.shape[i]).collect();
        let mut out = vec![0.0; shape.iter().product()];
        let mut idx = vec![0usize; self.shape.len()];
        for (flat, &p) in self.probs.iter().enumerate() {
            if p == 0.0 {
                continue;
            }
            unflatten(flat, &self.shape, &mut idx);
            let mut o = 0;
            for (&a, &s) in kept.iter().zip(&shape) {
                o = o * s + idx[a];
            }
            out[o] += p;
        }
        Ok(JointPmf {
            axes: kept.iter().map(|&i| self.axes[i].clone()).collect(),
            shape,
            probs: out,
        })
    }

    pub fn entropy(&self) -> f64 {
        entropy_unchecked(&self.probs)
    }

    /// Joint entropy of a subset of axes.
    pub fn entropy_of(&self, axes: &[&str]) -> Result<f64> {
        if axes.is_empty() {
            return Ok(0.0);
        }
        Ok(self.marginal(axes)?.entropy())
    }

    /// `H(target | given)` in bits.
    pub fn conditional_entropy(&self, target: &[&str], given: &[&str]) -> Result<f64> {
        disjoint(target, given)?;
        let both: Vec<&str> = target.iter().chain(given).copied().collect();
        let h = self.entropy_of(&both)? - self.entropy_of(given)?;
        Ok(h.max(0.0))
    }

    /// `I(a; b)` in bits.
    pub fn mutual_information(&self, a: &[&str], b: &[&str]) -> Result<f64> {
        disjoint(a, b)?;
        let both: Vec<&str> = a.iter().chain(b).copied().collect();
        let i = self.entropy_of(a)? + self.entropy_of(b)? - self.entropy_of(&both)?;
        Ok(i.max(0.0))
    }

    /// `I(a; b | c)` in bits.
    pub fn conditional_mutual_information(&self, a: &[&str], b: &[&str], c: &[&str]) -> Result<f64> {
        disjoint(a, b)?;
        disjoint(a, c)?;
        disjoint(b, c)?;
        let ac: Vec<&str> = a.iter().chain(c).copied().collect();
        let bc: Vec<&str> = b.iter().chain(c).copied().collect();
        let abc: Vec<&str> = a.iter().chain(b).chain(c).copied().collect();
        let i = self.entropy_of(&ac)? + self.entropy_of(&bc)? - self.entropy_of(&abc)? - self.entropy_of(c)?;
        Ok(i.max(0.0))
    }

    /// Replaces axis `axis` by the output of `kernel` applied to it, renamed `renamed`.
    pub fn apply_kernel(&self, axis: &str, kernel: &Kernel, renamed: &str) -> Result<JointPmf> {
        let a = self.axis_index(axis)?;
        if kernel.rows() != self.shape[a] {
            return Err(Error::Dimension(format!(
                "axis `{axis}` has {} symbols, kernel has {} rows",
                self.shape[a],
                kernel.rows()
            )));
        }
        if renamed != axis && self.axes.iter().any(|x| x == renamed) {
            return Err(Error::OverlappingAxes(renamed.to_string()));
        }
        let mut shape = self.shape.clone();
        shape[a] = kernel.cols();
        let mut out = vec![0.0; shape.iter().product()];
        let mut idx = vec![0usize; self.shape.len()];
        let strides = strides(&shape);
        for (flat, &p) in self.probs.iter().enumerate() {
            if p == 0.0 {
                continue;
            }
            unflatten(flat, &self.shape, &mut idx);
            let x = idx[a];
            idx[a] = 0;
            let base: usize = idx.iter().zip(&strides).map(|(i, s)| i * s).sum();
            for (y, &w) in kernel.row(x).iter().enumerate() {
                if w != 0.0 {
                    out[base + y * strides[a]] += p * w;
                }
            }
        }
        let mut axes = self.axes.clone();
        axes[a] = renamed.to_string();
        Ok(JointPmf { axes, shape, probs: out })
    }
}

fn disjoint(a: &[&str], b: &[&str]) -> Result<()> {
    match a.iter().find(|x| b.contains(x)) {
        Some(x) => Err(Error::OverlappingAxes(x.to_string())),
        None => Ok(()),
    }
}

pub(crate) fn strides(shape: &[usize]) -> Vec<usize> {
    let mut s = vec![1usize; shape.len()];
    for i in (0..shape.len().saturating_sub(1)).rev() {
        s[i] = s[i + 1] * shape[i + 1];
    }
    s
}

pub(crate) fn unflatten(mut flat: usize, shape: &[usize], idx: &mut [usize]) {
    for i in (0..shape.len()).rev() {
        idx[i] = flat % shape[i];
        flat /= shape[i];
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn close(a: f64, b: f64, tol: f64) -> bool {
        (a - b).abs() <= tol
    }

    #[test]
    fn entropy_examples() {
        assert!(close(entropy(&[0.25; 4]).unwrap(), 2.0, 1e-15));
        assert_eq!(entropy(&[0.0, 1.0, 0.0]).unwrap(), 0.0);
        let oracle = -(0.26f64 * 0.26f64.log2()) - 0.74 * 0.74f64.log2();
        assert!(close(entropy(&[0.26, 0.74]).unwrap(), oracle, 1e-12));
    }

    #[test]
    fn entropy_rejects_bad_mass() {
        assert!(matches!(entropy(&[0.5, 0.4]), Err(Error::InvalidDistribution(_))));
        assert!(matches!(entropy(&[1.2, -0.2]), Err(Error::InvalidDistribution(_))));
    }

    #[test]
    fn pmf_rejects_duplicate_labels() {
        let r = Pmf::new(vec!["a".into(), "a".into()], vec![0.5, 0.5]);
        assert!(r.is_err());
    }

    fn xor_triple() -> JointPmf {
        JointPmf::from_fn(&["A", "B", "C"], &[2, 2, 2], |i| {
            if i[2] == i[0] ^ i[1] { 0.25 } else { 0.0 }
        })
        .unwrap()
    }

    #[test]
    fn conditional_entropy_examples() {
        let j = xor_triple();
        assert!(close(j.conditional_entropy(&["C"], &["A", "B"]).unwrap(), 0.0, 1e-15));
        assert!(close(j.conditional_entropy(&["A"], &["B"]).unwrap(), 1.0, 1e-12));
        // H(X|X) through a copy of the axis.
        let px = [0.3, 0.7];
        let xx = JointPmf::from_fn(&["X", "X'"], &[2, 2], |i| if i[0] == i[1] { px[i[0]] } else { 0.0 }).unwrap();
        assert!(close(xx.conditional_entropy(&["X"], &["X'"]).unwrap(), 0.0, 1e-15));
    }

    #[test]
    fn unknown_and_overlapping_axes() {
        let j = xor_triple();
        assert!(matches!(j.conditional_entropy(&["Z"], &["A"]), Err(Error::UnknownAxis(_))));
        assert!(matches!(j.mutual_information(&["A"], &["A"]), Err(Error::OverlappingAxes(_))));
    }

    #[test]
    fn mutual_information_examples() {
        let u = Pmf::uniform(2);
        let ind = JointPmf::product(&[("A", &u), ("B", &u)]).unwrap();
        assert!(close(ind.mutual_information(&["A"], &["B"]).unwrap(), 0.0, 1e-15));

        let x = JointPmf::product(&[("X", &u)]).unwrap();
        let noiseless = JointPmf::from_fn(&["X", "Y"], &[2, 2], |i| if i[0] == i[1] { 0.5 } else { 0.0 }).unwrap();
        assert!(close(noiseless.mutual_information(&["X"], &["Y"]).unwrap(), 1.0, 1e-12));

        let bsc = JointPmf::from_fn(&["X", "Y"], &[2, 2], |i| 0.5 * Kernel::bsc(0.1).get(i[0], i[1])).unwrap();
        let oracle = 1.0 + 0.1 * 0.1f64.log2() + 0.9 * 0.9f64.log2();
        assert!(close(bsc.mutual_information(&["X"], &["Y"]).unwrap(), oracle, 1e-10));
        assert!(close(channel_mutual_information(x.probs(), &Kernel::bsc(0.1)), oracle, 1e-10));
    }

    #[test]
    fn kernel_cascade_of_bscs() {
        let k = Kernel::bsc(0.1).then(&Kernel::bsc(0.2)).unwrap();
        assert!(close(k.get(0, 1), 0.1 * 0.8 + 0.9 * 0.2, 1e-15));
    }

    #[test]
    fn kernel_reports_non_stochastic_row() {
        let k = Kernel::new(vec![vec![0.5, 0.5], vec![0.6, 0.3]]).unwrap();
        let (row, sum) = k.check_stochastic(1e-12).unwrap();
        assert_eq!(row, 1);
        assert!(close(sum, 0.9, 1e-12));
    }

    #[test]
    fn kernel_serde_roundtrip_shape() {
        let k: Kernel = serde_json::from_str("[[1.0, 0.0], [0.25, 0.75]]").unwrap();
        assert_eq!((k.rows(), k.cols()), (2, 2));
        assert!(serde_json::from_str::<Kernel>("[[1.0], [0.5, 0.5]]").is_err());
    }
}
