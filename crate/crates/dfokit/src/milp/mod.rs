//! Desk-scale linear and mixed-integer linear solvers.
//!
//! The engine is deliberately small: a dense bounded-variable two-phase
//! simplex plus a best-first branch-and-bound layer on top of it. Everything
//! is deterministic — identical inputs produce identical pivots, identical
//! objective values and identical argmin indices.

mod batch;
mod branch;
pub mod mps;
mod simplex;

pub use batch::{solve_batch, BatchError, BatchOutcome};
pub use branch::solve_milp;
pub use simplex::solve_lp;

use serde::{Deserialize, Serialize};
use thiserror::Error;

/// Row sense of a linear constraint.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Sense {
    Le,
    Eq,
    Ge,
}

impl Sense {
    pub fn symbol(self) -> &'static str {
        match self {
            Sense::Le => "<=",
            Sense::Eq => "=",
            Sense::Ge => ">=",
        }
    }
}

/// A single constraint row with sparse coefficients.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct Row {
    pub name: String,
    pub coeffs: Vec<(usize, f64)>,
    pub sense: Sense,
    pub rhs: f64,
}

/// A normalized minimization program. The integrality mask is all-false for
/// a pure LP; `solve_milp` accepts any mask.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct LinearProgram {
    pub name: String,
    pub objective: Vec<f64>,
    /// Constant added to the reported objective value.
    pub obj_offset: f64,
    pub rows: Vec<Row>,
    pub lower: Vec<f64>,
    pub upper: Vec<f64>,
    pub integer: Vec<bool>,
    pub var_names: Vec<String>,
}

impl LinearProgram {
    pub fn new(name: impl Into<String>) -> Self {
        LinearProgram {
            name: name.into(),
            objective: Vec::new(),
            obj_offset: 0.0,
            rows: Vec::new(),
            lower: Vec::new(),
            upper: Vec::new(),
            integer: Vec::new(),
            var_names: Vec::new(),
        }
    }

    pub fn num_vars(&self) -> usize {
        self.objective.len()
    }

    pub fn add_var(
        &mut self,
        name: impl Into<String>,
        lower: f64,
        upper: f64,
        obj: f64,
        integer: bool,
    ) -> usize {
        let id = self.objective.len();
        self.objective.push(obj);
        self.lower.push(lower);
        self.upper.push(upper);
        self.integer.push(integer);
        self.var_names.push(name.into());
        id
    }

    pub fn add_row(
        &mut self,
        name: impl Into<String>,
        coeffs: Vec<(usize, f64)>,
        sense: Sense,
        rhs: f64,
    ) -> usize {
        let id = self.rows.len();
        self.rows.push(Row { name: name.into(), coeffs, sense, rhs });
        id
    }

    pub fn has_integers(&self) -> bool {
        self.integer.iter().any(|&b| b)
    }

    /// Objective value of a point, including the offset.
    pub fn objective_value(&self, x: &[f64]) -> f64 {
        self.obj_offset
            + self
                .objective
                .iter()
                .zip(x.iter())
                .map(|(c, v)| c * v)
                .sum::<f64>()
    }

    /// Largest violation of rows and bounds at a point.
    pub fn feasibility_residual(&self, x: &[f64]) -> f64 {
        let mut worst = 0.0f64;
        for (j, &v) in x.iter().enumerate() {
            worst = worst.max(self.lower[j] - v).max(v - self.upper[j]);
        }
        for row in &self.rows {
            let lhs: f64 = row.coeffs.iter().map(|&(j, c)| c * x[j]).sum();
            let viol = match row.sense {
                Sense::Le => lhs - row.rhs,
                Sense::Ge => row.rhs - lhs,
                Sense::Eq => (lhs - row.rhs).abs(),
            };
            worst = worst.max(viol);
        }
        worst
    }

    /// Sanity checks shared by both solvers.
    pub fn validate(&self) -> Result<(), SolveError> {
        let n = self.num_vars();
        if self.lower.len() != n
            || self.upper.len() != n
            || self.integer.len() != n
            || self.var_names.len() != n
        {
            return Err(SolveError::InvalidModel("inconsistent variable arrays".into()));
        }
        for (j, (&lo, &hi)) in self.lower.iter().zip(self.upper.iter()).enumerate() {
            if lo.is_nan() || hi.is_nan() {
                return Err(SolveError::InvalidModel(format!("NaN bound on var {j}")));
            }
            if self.integer[j] && !(lo.is_finite() && hi.is_finite()) {
                return Err(SolveError::InvalidModel(format!(
                    "integer var {} needs finite bounds",
                    self.var_names[j]
                )));
            }
        }
        for row in &self.rows {
            for &(j, c) in &row.coeffs {
                if j >= n {
                    return Err(SolveError::InvalidModel(format!(
                        "row {} references unknown var {j}",
                        row.name
                    )));
                }
                if !c.is_finite() {
                    return Err(SolveError::InvalidModel(format!("non-finite coeff in {}", row.name)));
                }
            }
            if !row.rhs.is_finite() {
                return Err(SolveError::InvalidModel(format!("non-finite rhs in {}", row.name)));
            }
        }
        Ok(())
    }
}

/// Termination status of a solve.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Status {
    Optimal,
    Infeasible,
    Unbounded,
    NodeLimit,
    TimeLimit,
}

/// Result of a solve. For MILPs `bound` is the best proven lower bound on
/// the minimum; for LPs it is the dual objective at the final basis.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct Solution {
    pub status: Status,
    pub x: Vec<f64>,
    pub objective: f64,
    pub bound: f64,
    /// Row duals of the final LP basis (empty for MILP solves).
    pub duals: Vec<f64>,
}

impl Solution {
    pub fn infeasible(n: usize) -> Self {
        Solution {
            status: Status::Infeasible,
            x: vec![0.0; n],
            objective: f64::INFINITY,
            bound: f64::INFINITY,
            duals: Vec::new(),
        }
    }
}

/// Solver configuration, shared by LP, MILP and batch solves.
#[derive(Debug, Clone)]
pub struct SolverConfig {
    /// Primal feasibility tolerance.
    pub tol: f64,
    /// Integer feasibility tolerance.
    pub int_tol: f64,
    /// Relative optimality gap accepted by branch-and-bound.
    pub gap_tol: f64,
    pub node_limit: usize,
    pub time_limit_s: Option<f64>,
    /// Worker threads for batch solves (1 = sequential).
    pub workers: usize,
}

impl Default for SolverConfig {
    fn default() -> Self {
        SolverConfig {
            tol: 1e-7,
            int_tol: 1e-6,
            gap_tol: 1e-6,
            node_limit: 400_000,
            time_limit_s: None,
            workers: 1,
        }
    }
}

/// Hard solver failures. Status-level outcomes (infeasible, unbounded,
/// limits) travel inside [`Solution`]; these are structural or numerical
/// errors that must never be reported as a wrong `Optimal`.
#[derive(Debug, Clone, Error)]
pub enum SolveError {
    #[error("invalid model: {0}")]
    InvalidModel(String),
    #[error("numerical failure: {0}")]
    Numerical(String),
}

#[cfg(test)]
mod tests {
    use super::*;

    fn simple_lp() -> LinearProgram {
        // max x s.t. x <= 1, posed as min -x
        let mut lp = LinearProgram::new("t");
        let x = lp.add_var("x", 0.0, f64::INFINITY, -1.0, false);
        lp.add_row("r0", vec![(x, 1.0)], Sense::Le, 1.0);
        lp
    }

    #[test]
    fn max_x_until_one() {
        let sol = solve_lp(&simple_lp(), &SolverConfig::default()).unwrap();
        assert_eq!(sol.status, Status::Optimal);
        assert!((sol.objective + 1.0).abs() < 1e-9);
        assert!((sol.x[0] - 1.0).abs() < 1e-9);
    }

    #[test]
    fn infeasible_bounds_detected() {
        // min 0 s.t. x >= 1, x <= 0
        let mut lp = LinearProgram::new("t");
        let x = lp.add_var("x", f64::NEG_INFINITY, f64::INFINITY, 0.0, false);
        lp.add_row("lo", vec![(x, 1.0)], Sense::Ge, 1.0);
        lp.add_row("hi", vec![(x, 1.0)], Sense::Le, 0.0);
        let sol = solve_lp(&lp, &SolverConfig::default()).unwrap();
        assert_eq!(sol.status, Status::Infeasible);
    }

    #[test]
    fn simplex_vertex_objective() {
        // min -x1 - x2 s.t. x1 + x2 <= 1, x >= 0 -> obj -1
        let mut lp = LinearProgram::new("t");
        let a = lp.add_var("a", 0.0, f64::INFINITY, -1.0, false);
        let b = lp.add_var("b", 0.0, f64::INFINITY, -1.0, false);
        lp.add_row("cap", vec![(a, 1.0), (b, 1.0)], Sense::Le, 1.0);
        let sol = solve_lp(&lp, &SolverConfig::default()).unwrap();
        assert_eq!(sol.status, Status::Optimal);
        assert!((sol.objective + 1.0).abs() < 1e-9);
        assert!((sol.x[0] + sol.x[1] - 1.0).abs() < 1e-9);
    }
}
