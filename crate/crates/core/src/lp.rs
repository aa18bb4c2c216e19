//! Thin wrapper over `microlp` used by the degradedness test, polytope
//! reduction and containment checks.

use microlp::{ComparisonOp, OptimizationDirection, Problem, SolveOutcome};

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Cmp {
    Le,
    Ge,
    Eq,
}

#[derive(Debug, Clone)]
pub enum LpOutcome {
    Optimal { objective: f64, x: Vec<f64> },
    Infeasible,
    Unbounded,
}

impl LpOutcome {
    pub fn objective(&self) -> Option<f64> {
        match self {
            LpOutcome::Optimal { objective, .. } => Some(*objective),
            _ => None,
        }
    }
}

/// A linear program over `n` real variables, free unless bounded.
#[derive(Debug, Clone)]
pub struct LinearProgram {
    lower: Vec<f64>,
    upper: Vec<f64>,
    rows: Vec<(Vec<(usize, f64)>, Cmp, f64)>,
}

impl LinearProgram {
    pub fn new(n: usize) -> Self {
        Self {
            lower: vec![f64::NEG_INFINITY; n],
            upper: vec![f64::INFINITY; n],
            rows: Vec::new(),
        }
    }

    pub fn num_vars(&self) -> usize {
        self.lower.len()
    }

    pub fn bound(&mut self, var: usize, lo: f64, hi: f64) -> &mut Self {
        self.lower[var] = lo;
        self.upper[var] = hi;
        self
    }

    pub fn constraint(&mut self, terms: Vec<(usize, f64)>, cmp: Cmp, rhs: f64) -> &mut Self {
        self.rows.push((terms, cmp, rhs));
        self
    }

    /// Dense-row convenience for `coeffs · x (cmp) rhs`.
    pub fn dense_constraint(&mut self, coeffs: &[f64], cmp: Cmp, rhs: f64) -> &mut Self {
        let terms = coeffs
            .iter()
            .enumerate()
            .filter(|(_, c)| **c != 0.0)
            .map(|(i, c)| (i, *c))
            .collect();
        self.constraint(terms, cmp, rhs)
    }

    pub fn maximize(&self, objective: &[f64]) -> Result<LpOutcome> {
        self.solve(objective, OptimizationDirection::Maximize)
    }

    pub fn minimize(&self, objective: &[f64]) -> Result<LpOutcome> {
        self.solve(objective, OptimizationDirection::Minimize)
    }

    /// Feasibility only.
    pub fn feasible_point(&self) -> Result<Option<Vec<f64>>> {
        match self.minimize(&vec![0.0; self.num_vars()])? {
            LpOutcome::Optimal { x, .. } => Ok(Some(x)),
            _ => Ok(None),
        }
    }

    fn solve(&self, objective: &[f64], direction: OptimizationDirection) -> Result<LpOutcome> {
        if objective.len() != self.num_vars() {
            return Err(Error::Dimension(format!(
                "objective has {} coefficients for {} variables",
                objective.len(),
                self.num_vars()
            )));
        }
        let mut problem = Problem::new(direction);
        let vars: Vec<_> = objective
            .iter()
            .zip(self.lower.iter().zip(&self.upper))
            .map(|(&c, (&lo, &hi))| problem.add_var(c, (lo, hi)))
            .collect();
        for (terms, cmp, rhs) in &self.rows {
            let op = match cmp {
                Cmp::Le => ComparisonOp::Le,
                Cmp::Ge => ComparisonOp::Ge,
                Cmp::Eq => ComparisonOp::Eq,
            };
            let expr: Vec<_> = terms.iter().map(|&(i, c)| (vars[i], c)).collect();
            problem.add_constraint(expr, op, *rhs);
        }
        match problem.solve() {
            Ok(SolveOutcome::Solution(sol)) => Ok(LpOutcome::Optimal {
                objective: sol.objective(),
                x: vars.iter().map(|&v| sol.var_value_raw(v)).collect(),
            }),
            Ok(SolveOutcome::Interrupted(_)) => Err(Error::Lp("solver interrupted".into())),
            Err(microlp::Error::Infeasible) => Ok(LpOutcome::Infeasible),
            Err(microlp::Error::Unbounded) => Ok(LpOutcome::Unbounded),
            Err(e) => Err(Error::Lp(e.to_string())),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn small_maximization() {
        // max x + y s.t. x + 2y <= 4, 3x + y <= 6, x,y >= 0 -> (1.6, 1.2)
        let mut lp = LinearProgram::new(2);
        lp.bound(0, 0.0, f64::INFINITY).bound(1, 0.0, f64::INFINITY);
        lp.dense_constraint(&[1.0, 2.0], Cmp::Le, 4.0);
        lp.dense_constraint(&[3.0, 1.0], Cmp::Le, 6.0);
        let out = lp.maximize(&[1.0, 1.0]).unwrap();
        assert!((out.objective().unwrap() - 2.8).abs() < 1e-9);
    }

    #[test]
    fn detects_unbounded_and_infeasible() {
        let mut lp = LinearProgram::new(1);
        lp.dense_constraint(&[1.0], Cmp::Ge, 0.0);
        assert!(matches!(lp.maximize(&[1.0]).unwrap(), LpOutcome::Unbounded));
        lp.dense_constraint(&[1.0], Cmp::Le, -1.0);
        assert!(matches!(lp.maximize(&[1.0]).unwrap(), LpOutcome::Infeasible));
    }
}
