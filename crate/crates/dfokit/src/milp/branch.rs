//! Best-first branch-and-bound over the simplex relaxation.

use std::cmp::Ordering;
use std::collections::BinaryHeap;
use std::time::Instant;

use super::{solve_lp, LinearProgram, Solution, SolveError, SolverConfig, Status};

struct Node {
    bound: f64,
    seq: u64,
    lower: Vec<f64>,
    upper: Vec<f64>,
}

// Min-heap on (bound, seq): best bound first, FIFO among ties.
impl PartialEq for Node {
    fn eq(&self, other: &Self) -> bool {
        self.bound == other.bound && self.seq == other.seq
    }
}
impl Eq for Node {}
impl PartialOrd for Node {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}
impl Ord for Node {
    fn cmp(&self, other: &Self) -> Ordering {
        other
            .bound
            .total_cmp(&self.bound)
            .then_with(|| other.seq.cmp(&self.seq))
    }
}

fn most_fractional(x: &[f64], integer: &[bool], int_tol: f64) -> Option<usize> {
    let mut best: Option<(usize, f64)> = None;
    for (j, &is_int) in integer.iter().enumerate() {
        if !is_int {
            continue;
        }
        let frac = (x[j] - x[j].round()).abs();
        if frac <= int_tol {
            continue;
        }
        let score = frac.min(1.0 - frac);
        match best {
            None => best = Some((j, score)),
            Some((_, s)) if score > s + 1e-15 => best = Some((j, score)),
            _ => {}
        }
    }
    best.map(|(j, _)| j)
}

/// Solve a mixed-integer program by best-first branch-and-bound, branching
/// on the most fractional integer variable (ties to the lowest index).
pub fn solve_milp(milp: &LinearProgram, config: &SolverConfig) -> Result<Solution, SolveError> {
    milp.validate()?;
    if !milp.has_integers() {
        return solve_lp(milp, config);
    }
    let start = Instant::now();
    let n = milp.num_vars();

    let root = solve_lp(milp, config)?;
    match root.status {
        Status::Infeasible => return Ok(Solution::infeasible(n)),
        Status::Unbounded => return Ok(root),
        _ => {}
    }

    let mut heap = BinaryHeap::new();
    let mut seq = 0u64;
    heap.push(Node {
        bound: root.objective,
        seq,
        lower: milp.lower.clone(),
        upper: milp.upper.clone(),
    });

    let mut incumbent: Option<Solution> = None;
    let mut nodes = 0usize;
    let mut best_open_bound = root.objective;
    // Lower bound proven at termination; None until the search finishes.
    let mut final_bound: Option<f64> = None;

    while let Some(node) = heap.pop() {
        best_open_bound = node.bound;
        if let Some(inc) = &incumbent {
            let cutoff = inc.objective - config.gap_tol * inc.objective.abs().max(1.0);
            if node.bound >= cutoff - 1e-12 {
                // Best-first order: every remaining node is at least as bad.
                final_bound = Some(node.bound);
                heap.clear();
                break;
            }
        }
        nodes += 1;
        if nodes > config.node_limit {
            let bound = best_open_bound;
            return Ok(finish_limited(Status::NodeLimit, incumbent, bound, n));
        }
        if let Some(limit) = config.time_limit_s {
            if start.elapsed().as_secs_f64() > limit {
                let bound = best_open_bound;
                return Ok(finish_limited(Status::TimeLimit, incumbent, bound, n));
            }
        }

        let mut relaxed = milp.clone();
        relaxed.lower = node.lower.clone();
        relaxed.upper = node.upper.clone();
        let sol = solve_lp(&relaxed, config)?;
        match sol.status {
            Status::Infeasible => continue,
            Status::Unbounded => {
                // Bounded integer vars cannot cause this once the root is
                // bounded, but surface it rather than mislabel.
                return Ok(sol);
            }
            _ => {}
        }
        if let Some(inc) = &incumbent {
            if sol.objective >= inc.objective - 1e-12 {
                continue;
            }
        }

        match most_fractional(&sol.x, &milp.integer, config.int_tol) {
            None => {
                let mut cand = sol.clone();
                // Snap integers for reporting; residual stays within int_tol.
                for j in 0..n {
                    if milp.integer[j] {
                        cand.x[j] = cand.x[j].round();
                    }
                }
                cand.objective = milp.objective_value(&cand.x);
                if milp.feasibility_residual(&cand.x) > 1e-6 {
                    // Rounding broke a row; keep the LP point instead.
                    cand = sol.clone();
                }
                let better = incumbent
                    .as_ref()
                    .map_or(true, |inc| cand.objective < inc.objective - 1e-12);
                if better {
                    incumbent = Some(cand);
                }
            }
            Some(j) => {
                let down = sol.x[j].floor();
                let mut lo = node.lower.clone();
                let mut hi = node.upper.clone();
                hi[j] = down;
                seq += 1;
                heap.push(Node { bound: sol.objective, seq, lower: lo.clone(), upper: hi });
                lo[j] = down + 1.0;
                let mut hi2 = node.upper.clone();
                hi2[j] = node.upper[j];
                seq += 1;
                heap.push(Node { bound: sol.objective, seq, lower: lo, upper: hi2 });
            }
        }
    }

    match incumbent {
        Some(mut inc) => {
            inc.status = Status::Optimal;
            // Exhausting the heap proves the incumbent exactly.
            inc.bound = final_bound.unwrap_or(inc.objective).min(inc.objective);
            inc.duals = Vec::new();
            Ok(inc)
        }
        None => Ok(Solution::infeasible(n)),
    }
}

fn finish_limited(status: Status, incumbent: Option<Solution>, bound: f64, n: usize) -> Solution {
    match incumbent {
        Some(mut inc) => {
            inc.status = status;
            inc.bound = bound.min(inc.objective);
            inc
        }
        None => Solution {
            status,
            x: vec![0.0; n],
            objective: f64::INFINITY,
            bound,
            duals: Vec::new(),
        },
    }
}
