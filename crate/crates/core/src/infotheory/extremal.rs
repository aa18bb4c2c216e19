//! Exact evaluation of both sides of the degraded-broadcast entropy-gap
//! inequality `H(B^T) − H(C^T) ≤ Σ_τ H(B(τ)) − H(C(τ))` for arbitrary,
//! possibly correlated, input sequence laws.

use serde::Serialize;

use super::discrete::{JointPmf, Kernel};
use crate::error::{Error, Result};

/// Largest number of sequence positions the exhaustive oracle accepts.
pub const MAX_AXES: usize = 4;
/// Largest per-letter alphabet the exhaustive oracle accepts.
pub const MAX_ALPHABET: usize = 4;

/// Slack allowed on the inequality before it is reported as failing.
pub const GAP_TOL: f64 = 1e-9;

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct ExtremalGap {
    pub multi_letter: f64,
    pub single_letter_sum: f64,
}

impl ExtremalGap {
    pub fn slack(&self) -> f64 {
        self.single_letter_sum - self.multi_letter
    }

    pub fn holds(&self) -> bool {
        self.slack() >= -GAP_TOL
    }
}

/// Gap for a length-`t` input sequence law over axes `A0..A{t-1}` (any names,
/// in time order) through the memoryless chain `A → B → C`.
pub fn extremal_gap_check(p_a: &JointPmf, kernel_ba: &Kernel, kernel_cb: &Kernel, t: usize) -> Result<ExtremalGap> {
    if p_a.axes().len() != t {
        return Err(Error::Dimension(format!(
            "input law has {} axes for block length {t}",
            p_a.axes().len()
        )));
    }
    let chain = vec![(kernel_ba, kernel_cb); t];
    gap_per_axis(p_a, &chain)
}

/// Parallel version: `kernels[k]` drives carrier `k`; the input law's axes are
/// carrier-major, axis `k·t + τ` being carrier `k` at time `τ`.
pub fn extremal_gap_check_parallel(p_a: &JointPmf, kernels: &[(Kernel, Kernel)], t: usize) -> Result<ExtremalGap> {
    let f = kernels.len();
    if f == 0 {
        return Err(Error::Dimension("no carriers".into()));
    }
    if p_a.axes().len() != f * t {
        return Err(Error::Dimension(format!(
            "input law has {} axes for {f} carriers of length {t}",
            p_a.axes().len()
        )));
    }
    let chain: Vec<(&Kernel, &Kernel)> = kernels
        .iter()
        .flat_map(|(ba, cb)| std::iter::repeat_n((ba, cb), t))
        .collect();
    gap_per_axis(p_a, &chain)
}

fn gap_per_axis(p_a: &JointPmf, chain: &[(&Kernel, &Kernel)]) -> Result<ExtremalGap> {
    let n = chain.len();
    if n == 0 {
        return Err(Error::Dimension("empty input sequence".into()));
    }
    if n > MAX_AXES {
        return Err(Error::TooLarge(format!("{n} sequence positions, at most {MAX_AXES}")));
    }
    for (j, (ba, cb)) in chain.iter().enumerate() {
        ba.ensure_stochastic(&format!("p(B|A) at position {j}"))?;
        cb.ensure_stochastic(&format!("p(C|B) at position {j}"))?;
        if ba.cols() != cb.rows() {
            return Err(Error::Dimension(format!(
                "p(B|A) has {} outputs but p(C|B) has {} inputs at position {j}",
                ba.cols(),
                cb.rows()
            )));
        }
        if p_a.shape()[j] != ba.rows() {
            return Err(Error::Dimension(format!(
                "input axis {j} has {} symbols, kernel expects {}",
                p_a.shape()[j],
                ba.rows()
            )));
        }
        if [ba.rows(), ba.cols(), cb.cols()].iter().any(|&s| s > MAX_ALPHABET) {
            return Err(Error::TooLarge(format!("alphabet above {MAX_ALPHABET} at position {j}")));
        }
    }
    let axes: Vec<String> = p_a.axes().to_vec();
    let mut b = p_a.clone();
    for (j, (ba, _)) in chain.iter().enumerate() {
        b = b.apply_kernel(&axes[j], ba, &format!("__B{j}"))?;
    }
    let mut c = b.clone();
    for (j, (_, cb)) in chain.iter().enumerate() {
        c = c.apply_kernel(&format!("__B{j}"), cb, &format!("__C{j}"))?;
    }
    let mut single = 0.0;
    for j in 0..n {
        single += b.entropy_of(&[&format!("__B{j}")])? - c.entropy_of(&[&format!("__C{j}")])?;
    }
    Ok(ExtremalGap {
        multi_letter: b.entropy() - c.entropy(),
        single_letter_sum: single,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::infotheory::discrete::Pmf;

    #[test]
    fn iid_input_is_tight() {
        let p = Pmf::from_probs(vec![0.3, 0.7]).unwrap();
        let joint = JointPmf::product(&[("A0", &p), ("A1", &p)]).unwrap();
        let g = extremal_gap_check(&joint, &Kernel::bsc(0.1), &Kernel::bsc(0.2), 2).unwrap();
        assert!(g.slack().abs() < 1e-10);
    }

    #[test]
    fn repeated_symbol_has_positive_slack() {
        let joint = JointPmf::from_fn(&["A0", "A1"], &[2, 2], |i| if i[0] == i[1] { 0.5 } else { 0.0 }).unwrap();
        let g = extremal_gap_check(&joint, &Kernel::bsc(0.1), &Kernel::bsc(0.2), 2).unwrap();
        assert!(g.holds());
        assert!(g.slack() > 1e-6);
    }

    #[test]
    fn identity_second_stage_gives_zero() {
        let joint = JointPmf::from_fn(&["A0", "A1"], &[2, 2], |i| [0.1, 0.4, 0.2, 0.3][i[0] * 2 + i[1]]).unwrap();
        let g = extremal_gap_check(&joint, &Kernel::bsc(0.1), &Kernel::identity(2), 2).unwrap();
        assert!(g.multi_letter.abs() < 1e-12);
        assert!(g.single_letter_sum.abs() < 1e-12);
    }

    #[test]
    fn parallel_single_carrier_matches() {
        let joint = JointPmf::from_fn(&["A0", "A1"], &[2, 2], |i| [0.1, 0.4, 0.2, 0.3][i[0] * 2 + i[1]]).unwrap();
        let a = extremal_gap_check(&joint, &Kernel::bsc(0.1), &Kernel::bsc(0.3), 2).unwrap();
        let b = extremal_gap_check_parallel(&joint, &[(Kernel::bsc(0.1), Kernel::bsc(0.3))], 2).unwrap();
        assert_eq!(a, b);
    }

    #[test]
    fn rejects_bad_kernels_and_size() {
        let p = Pmf::uniform(2);
        let joint = JointPmf::product(&[("A0", &p)]).unwrap();
        let bad = Kernel::new(vec![vec![0.5, 0.4], vec![0.5, 0.5]]).unwrap();
        assert!(matches!(
            extremal_gap_check(&joint, &bad, &Kernel::bsc(0.1), 1),
            Err(Error::NonStochastic { .. })
        ));
        let five = JointPmf::product(&[("a", &p), ("b", &p), ("c", &p), ("d", &p), ("e", &p)]).unwrap();
        assert!(matches!(
            extremal_gap_check(&five, &Kernel::bsc(0.1), &Kernel::bsc(0.1), 5),
            Err(Error::TooLarge(_))
        ));
    }
}
