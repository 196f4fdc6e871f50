//! Min-combining batch solves.
//!
//! A batch is a family of independent programs whose overall value is the
//! minimum member value. Members run on a worker pool when requested and the
//! reduction is a deterministic lowest-index argmin. Infeasible members count
//! as +inf and are flagged, so a malformed member cannot silently win.

use rayon::prelude::*;
use thiserror::Error;

use super::{solve_milp, LinearProgram, Solution, SolveError, SolverConfig, Status};

#[derive(Debug, Clone, Error)]
pub enum BatchError {
    #[error("empty batch")]
    Empty,
    #[error("all {0} batch members failed or were infeasible")]
    AllMembersFailed(usize),
    #[error("batch member {index}: {source}")]
    Member {
        index: usize,
        #[source]
        source: SolveError,
    },
}

/// Outcome of a batch solve: the winning member's solution plus bookkeeping.
#[derive(Debug, Clone)]
pub struct BatchOutcome {
    pub best: Solution,
    pub argmin: usize,
    /// Indices of members excluded as infeasible/unbounded-infeasible.
    pub excluded: Vec<usize>,
    pub member_values: Vec<f64>,
}

pub fn solve_batch(
    batch: &[LinearProgram],
    config: &SolverConfig,
) -> Result<BatchOutcome, BatchError> {
    if batch.is_empty() {
        return Err(BatchError::Empty);
    }

    let solve_all = |programs: &[LinearProgram]| -> Vec<Result<Solution, SolveError>> {
        if config.workers > 1 {
            let pool = rayon::ThreadPoolBuilder::new()
                .num_threads(config.workers)
                .build();
            match pool {
                Ok(pool) => pool.install(|| {
                    programs.par_iter().map(|p| solve_milp(p, config)).collect()
                }),
                Err(_) => programs.iter().map(|p| solve_milp(p, config)).collect(),
            }
        } else {
            programs.iter().map(|p| solve_milp(p, config)).collect()
        }
    };

    let results = solve_all(batch);

    let mut best: Option<(usize, Solution)> = None;
    let mut excluded = Vec::new();
    let mut member_values = vec![f64::INFINITY; batch.len()];
    for (idx, res) in results.into_iter().enumerate() {
        match res {
            Err(source) => return Err(BatchError::Member { index: idx, source }),
            Ok(sol) => match sol.status {
                Status::Optimal => {
                    member_values[idx] = sol.objective;
                    let replace = match &best {
                        None => true,
                        // Strict: ties keep the lowest index.
                        Some((_, b)) => sol.objective < b.objective - 1e-12,
                    };
                    if replace {
                        best = Some((idx, sol));
                    }
                }
                Status::Infeasible => excluded.push(idx),
                Status::Unbounded => {
                    member_values[idx] = f64::NEG_INFINITY;
                    if best.as_ref().map_or(true, |(_, b)| b.objective > f64::NEG_INFINITY) {
                        best = Some((idx, sol));
                    }
                }
                Status::NodeLimit | Status::TimeLimit => {
                    return Err(BatchError::Member {
                        index: idx,
                        source: SolveError::Numerical(format!(
                            "member stopped at {:?} before proving optimality",
                            sol.status
                        )),
                    })
                }
            },
        }
    }

    match best {
        Some((argmin, best)) => Ok(BatchOutcome { best, argmin, excluded, member_values }),
        None => Err(BatchError::AllMembersFailed(batch.len())),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::milp::Sense;

    fn min_x_over(lo: f64, hi: f64) -> LinearProgram {
        let mut lp = LinearProgram::new("m");
        lp.add_var("x", lo, hi, 1.0, false);
        lp
    }

    #[test]
    fn singleton_batch_passes_through() {
        let out = solve_batch(&[min_x_over(2.0, 5.0)], &SolverConfig::default()).unwrap();
        assert_eq!(out.argmin, 0);
        assert!((out.best.objective - 2.0).abs() < 1e-9);
    }

    #[test]
    fn infeasible_member_is_flagged_not_fatal() {
        let mut bad = LinearProgram::new("bad");
        let x = bad.add_var("x", 0.0, 1.0, 0.0, false);
        bad.add_row("r", vec![(x, 1.0)], Sense::Ge, 2.0);
        let mut good = min_x_over(5.0, 9.0);
        good.name = "good".into();
        let out = solve_batch(&[bad, good], &SolverConfig::default()).unwrap();
        assert_eq!(out.argmin, 1);
        assert_eq!(out.excluded, vec![0]);
        assert!((out.best.objective - 5.0).abs() < 1e-9);
    }

    #[test]
    fn lowest_index_tie_break() {
        let out = solve_batch(
            &[min_x_over(3.0, 4.0), min_x_over(3.0, 9.0)],
            &SolverConfig::default(),
        )
        .unwrap();
        assert_eq!(out.argmin, 0);
    }

    #[test]
    fn all_infeasible_is_an_error() {
        let mut bad = LinearProgram::new("bad");
        let x = bad.add_var("x", 0.0, 1.0, 0.0, false);
        bad.add_row("r", vec![(x, 1.0)], Sense::Ge, 2.0);
        let err = solve_batch(&[bad.clone(), bad], &SolverConfig::default()).unwrap_err();
        assert!(matches!(err, BatchError::AllMembersFailed(2)));
    }
}
