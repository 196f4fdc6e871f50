//! Dense two-phase simplex with variable bounds.
//!
//! Rows are converted to equalities with one slack each, infeasible starts
//! get artificial variables, and the full tableau `B^-1 [A | b]` is kept
//! explicitly. Pivoting is Dantzig's rule with lowest-index tie-breaks;
//! after 1000 degenerate pivots in a row the code switches to Bland's rule
//! so termination is guaranteed.

use super::{LinearProgram, Sense, Solution, SolveError, SolverConfig, Status};

const PIVOT_EPS: f64 = 1e-9;
const DEGENERATE_SWITCH: usize = 1000;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum VarState {
    Basic(usize), // row index
    AtLower,
    AtUpper,
    /// Free variable resting at zero.
    FreeZero,
}

struct Tableau {
    m: usize,
    /// Total columns: structural + slack + artificial.
    n_total: usize,
    n_struct: usize,
    /// Row-major `B^-1 A`, m x n_total.
    t: Vec<f64>,
    /// `B^-1 b`.
    beta: Vec<f64>,
    lower: Vec<f64>,
    upper: Vec<f64>,
    state: Vec<VarState>,
    basis: Vec<usize>,
    /// Current value of every variable.
    value: Vec<f64>,
    artificial_from: usize,
}

impl Tableau {
    fn at(&self, i: usize, j: usize) -> f64 {
        self.t[i * self.n_total + j]
    }

    fn nonbasic_resting_value(&self, j: usize) -> f64 {
        match self.state[j] {
            VarState::AtLower => self.lower[j],
            VarState::AtUpper => self.upper[j],
            VarState::FreeZero => 0.0,
            VarState::Basic(_) => unreachable!("basic var has no resting value"),
        }
    }

    fn pivot(&mut self, row: usize, col: usize) {
        let n = self.n_total;
        let piv = self.t[row * n + col];
        let inv = 1.0 / piv;
        for j in 0..n {
            self.t[row * n + j] *= inv;
        }
        self.beta[row] *= inv;
        for i in 0..self.m {
            if i == row {
                continue;
            }
            let factor = self.t[i * n + col];
            if factor.abs() <= 1e-13 {
                continue;
            }
            for j in 0..n {
                self.t[i * n + j] -= factor * self.t[row * n + j];
            }
            self.beta[i] -= factor * self.beta[row];
        }
    }

    /// Basic variable values given the nonbasic resting values:
    /// x_B = beta - sum_{j nonbasic} T[.,j] * x_j.
    fn refresh_values(&mut self) {
        let n = self.n_total;
        let mut xb = self.beta.clone();
        for j in 0..n {
            if matches!(self.state[j], VarState::Basic(_)) {
                continue;
            }
            let v = self.nonbasic_resting_value(j);
            self.value[j] = v;
            if v != 0.0 {
                for i in 0..self.m {
                    xb[i] -= self.t[i * n + j] * v;
                }
            }
        }
        for i in 0..self.m {
            self.value[self.basis[i]] = xb[i];
        }
    }
}

struct SimplexRun {
    tab: Tableau,
    degenerate_streak: usize,
    iterations: usize,
    iter_cap: usize,
}

enum StepOutcome {
    Optimal,
    Unbounded,
    Moved,
}

impl SimplexRun {
    /// One pricing + ratio-test + pivot step for objective `cost`.
    fn step(&mut self, cost: &[f64]) -> Result<StepOutcome, SolveError> {
        let tab = &mut self.tab;
        let n = tab.n_total;
        let m = tab.m;

        // Reduced costs d_j = c_j - c_B^T T[., j].
        let mut cb = vec![0.0; m];
        for i in 0..m {
            cb[i] = cost[tab.basis[i]];
        }
        let bland = self.degenerate_streak >= DEGENERATE_SWITCH;

        // dir = +1 raises the entering variable, -1 lowers it.
        let mut entering: Option<(usize, f64, f64)> = None; // (var, |d|, dir)
        for j in 0..n {
            let st = tab.state[j];
            if matches!(st, VarState::Basic(_)) {
                continue;
            }
            if tab.lower[j] == tab.upper[j] && !matches!(st, VarState::FreeZero) {
                continue; // fixed variable never enters
            }
            let mut d = cost[j];
            for i in 0..m {
                if cb[i] != 0.0 {
                    d -= cb[i] * tab.at(i, j);
                }
            }
            let candidate = match st {
                VarState::AtLower => {
                    if d < -PIVOT_EPS {
                        Some((j, -d, 1.0))
                    } else {
                        None
                    }
                }
                VarState::AtUpper => {
                    if d > PIVOT_EPS {
                        Some((j, d, -1.0))
                    } else {
                        None
                    }
                }
                VarState::FreeZero => {
                    if d < -PIVOT_EPS {
                        Some((j, -d, 1.0))
                    } else if d > PIVOT_EPS {
                        Some((j, d, -1.0))
                    } else {
                        None
                    }
                }
                VarState::Basic(_) => None,
            };
            if let Some(c) = candidate {
                if bland {
                    entering = Some(c);
                    break;
                }
                match &entering {
                    None => entering = Some(c),
                    Some(best) if c.1 > best.1 + 1e-15 => entering = Some(c),
                    _ => {}
                }
            }
        }

        let (q, _, dir) = match entering {
            None => return Ok(StepOutcome::Optimal),
            Some(e) => e,
        };

        // Ratio test: how far can x_q move in direction `dir`.
        let own_range = tab.upper[q] - tab.lower[q]; // may be inf
        let mut best_t = if own_range.is_finite() { own_range } else { f64::INFINITY };
        let mut leaving: Option<(usize, f64)> = None; // (row, |pivot|)
        for i in 0..m {
            let a = tab.at(i, q);
            if a.abs() <= PIVOT_EPS {
                continue;
            }
            let b_var = tab.basis[i];
            let xb = tab.value[b_var];
            // x_b moves by -dir * t * a.
            let rate = -dir * a;
            let limit = if rate < 0.0 {
                // decreasing toward lower bound
                if tab.lower[b_var].is_finite() {
                    (xb - tab.lower[b_var]) / -rate
                } else {
                    f64::INFINITY
                }
            } else {
                // increasing toward upper bound
                if tab.upper[b_var].is_finite() {
                    (tab.upper[b_var] - xb) / rate
                } else {
                    f64::INFINITY
                }
            };
            let limit = limit.max(0.0);
            let better = if bland {
                limit < best_t - 1e-12
                    || (limit < best_t + 1e-12
                        && leaving.map_or(true, |(r, _)| tab.basis[i] < tab.basis[r]))
            } else {
                limit < best_t - 1e-12
                    || (limit < best_t + 1e-12
                        && leaving.map_or(true, |(_, p)| a.abs() > p + 1e-15))
            };
            if better {
                best_t = limit.min(best_t);
                leaving = Some((i, a.abs()));
            }
        }

        if best_t.is_infinite() {
            return Ok(StepOutcome::Unbounded);
        }

        if best_t <= 1e-11 {
            self.degenerate_streak += 1;
        } else {
            self.degenerate_streak = 0;
        }

        match leaving {
            Some((r, _)) if best_t < own_range - 1e-12 || !own_range.is_finite() => {
                // Basis exchange: q enters, basis[r] leaves to the bound it hit.
                let out = tab.basis[r];
                let a = tab.at(r, q);
                let rate = -dir * a;
                let leave_state = if rate < 0.0 { VarState::AtLower } else { VarState::AtUpper };
                let enter_from = tab.value[q];
                tab.pivot(r, q);
                tab.state[out] = if tab.lower[out] == tab.upper[out] {
                    VarState::AtLower
                } else {
                    leave_state
                };
                tab.state[q] = VarState::Basic(r);
                tab.basis[r] = q;
                tab.value[q] = enter_from + dir * best_t;
                tab.refresh_values();
            }
            _ => {
                // Bound flip: q travels across its own range.
                tab.state[q] = if dir > 0.0 { VarState::AtUpper } else { VarState::AtLower };
                tab.refresh_values();
            }
        }

        self.iterations += 1;
        if self.iterations > self.iter_cap {
            return Err(SolveError::Numerical(format!(
                "simplex exceeded {} iterations",
                self.iter_cap
            )));
        }
        Ok(StepOutcome::Moved)
    }

    fn run(&mut self, cost: &[f64]) -> Result<StepOutcome, SolveError> {
        loop {
            match self.step(cost)? {
                StepOutcome::Moved => continue,
                other => return Ok(other),
            }
        }
    }
}

/// Solve a pure LP (integrality mask ignored) to optimality.
pub fn solve_lp(lp: &LinearProgram, config: &SolverConfig) -> Result<Solution, SolveError> {
    lp.validate()?;
    let n = lp.num_vars();
    let m = lp.rows.len();

    for j in 0..n {
        if lp.lower[j] > lp.upper[j] + config.tol {
            return Ok(Solution::infeasible(n));
        }
    }
    // Constant rows (no coefficients) are checked directly.
    for row in &lp.rows {
        if row.coeffs.iter().all(|&(_, c)| c == 0.0) {
            let ok = match row.sense {
                Sense::Le => 0.0 <= row.rhs + config.tol,
                Sense::Ge => 0.0 >= row.rhs - config.tol,
                Sense::Eq => row.rhs.abs() <= config.tol,
            };
            if !ok {
                return Ok(Solution::infeasible(n));
            }
        }
    }

    // Layout: structural | slack per row | artificials as needed.
    let n_slack = m;
    let mut lower = lp.lower.clone();
    let mut upper = lp.upper.clone();
    for row in &lp.rows {
        let (lo, hi) = match row.sense {
            Sense::Le => (0.0, f64::INFINITY),
            Sense::Ge => (f64::NEG_INFINITY, 0.0),
            Sense::Eq => (0.0, 0.0),
        };
        lower.push(lo);
        upper.push(hi);
    }

    // Initial nonbasic resting values for structural vars.
    let mut state: Vec<VarState> = (0..n)
        .map(|j| {
            if lower[j].is_finite() {
                VarState::AtLower
            } else if upper[j].is_finite() {
                VarState::AtUpper
            } else {
                VarState::FreeZero
            }
        })
        .collect();

    // Residual each row must absorb through its slack.
    let mut resid = vec![0.0; m];
    for (i, row) in lp.rows.iter().enumerate() {
        let mut lhs = 0.0;
        for &(j, c) in &row.coeffs {
            let v = match state[j] {
                VarState::AtLower => lower[j],
                VarState::AtUpper => upper[j],
                _ => 0.0,
            };
            lhs += c * v;
        }
        resid[i] = row.rhs - lhs;
    }

    let mut basis = Vec::with_capacity(m);
    let mut art_cols: Vec<(usize, f64)> = Vec::new(); // (row, sign)
    let mut slack_state = Vec::with_capacity(m);
    for i in 0..m {
        let s_lo = lower[n + i];
        let s_hi = upper[n + i];
        if resid[i] >= s_lo - 1e-12 && resid[i] <= s_hi + 1e-12 {
            // Slack absorbs the residual and starts basic.
            slack_state.push(VarState::Basic(i));
            basis.push(n + i);
        } else {
            // Slack rests at the bound nearest the residual; an artificial
            // with matching sign carries the rest.
            let rest = if resid[i] > s_hi { s_hi } else { s_lo };
            let rest_state = if rest == s_hi && s_hi.is_finite() {
                VarState::AtUpper
            } else {
                VarState::AtLower
            };
            slack_state.push(rest_state);
            let leftover = resid[i] - rest;
            art_cols.push((i, leftover.signum()));
            basis.push(usize::MAX); // patched below
        }
    }

    let n_art = art_cols.len();
    let n_total = n + n_slack + n_art;
    let mut t = vec![0.0; m * n_total];
    for (i, row) in lp.rows.iter().enumerate() {
        for &(j, c) in &row.coeffs {
            t[i * n_total + j] += c;
        }
        t[i * n_total + n + i] = 1.0;
    }
    let mut beta: Vec<f64> = lp.rows.iter().map(|r| r.rhs).collect();
    state.extend(slack_state);
    for (k, &(i, sign)) in art_cols.iter().enumerate() {
        let col = n + n_slack + k;
        // Keep the starting basis matrix equal to the identity: rows whose
        // artificial would need a -1 coefficient are negated instead.
        if sign < 0.0 {
            for j in 0..n_total {
                t[i * n_total + j] = -t[i * n_total + j];
            }
            beta[i] = -beta[i];
        }
        t[i * n_total + col] = 1.0;
        lower.push(0.0);
        upper.push(f64::INFINITY);
        state.push(VarState::Basic(i));
        basis[i] = col;
    }
    let mut tab = Tableau {
        m,
        n_total,
        n_struct: n,
        t,
        beta,
        lower,
        upper,
        state,
        basis,
        value: vec![0.0; n_total],
        artificial_from: n + n_slack,
    };

    // Rows whose slack starts basic may still violate the slack bounds
    // (e.g. Ge rows with positive residual); those also need phase 1 via
    // bound relaxation. Simplest uniform treatment: if any basic value is
    // out of bounds, give that row an artificial too. The construction
    // above already guarantees in-bounds starts, so just refresh.
    tab.refresh_values();

    let mut run = SimplexRun {
        tab,
        degenerate_streak: 0,
        iterations: 0,
        iter_cap: 20_000 + 200 * (m + n_total),
    };

    if n_art > 0 {
        let mut phase1_cost = vec![0.0; n_total];
        for c in run.tab.artificial_from..n_total {
            phase1_cost[c] = 1.0;
        }
        match run.run(&phase1_cost)? {
            StepOutcome::Unbounded => {
                return Err(SolveError::Numerical("phase 1 unbounded".into()))
            }
            _ => {}
        }
        let infeas: f64 = (run.tab.artificial_from..n_total)
            .map(|j| run.tab.value[j].max(0.0))
            .sum();
        if infeas > config.tol.max(1e-8) {
            return Ok(Solution::infeasible(n));
        }
        // Freeze artificials at zero for phase 2.
        for j in run.tab.artificial_from..n_total {
            run.tab.lower[j] = 0.0;
            run.tab.upper[j] = 0.0;
        }
        run.degenerate_streak = 0;
    }

    let mut cost = vec![0.0; n_total];
    cost[..n].copy_from_slice(&lp.objective);
    let outcome = run.run(&cost)?;

    let tab = &run.tab;
    let x: Vec<f64> = tab.value[..n].to_vec();

    if matches!(outcome, StepOutcome::Unbounded) {
        return Ok(Solution {
            status: Status::Unbounded,
            x,
            objective: f64::NEG_INFINITY,
            bound: f64::NEG_INFINITY,
            duals: Vec::new(),
        });
    }

    // Verify against the original data; surfacing numerical trouble beats
    // returning a wrong Optimal.
    let resid = lp.feasibility_residual(&x);
    let scale = 1.0 + x.iter().fold(0.0f64, |a, v| a.max(v.abs()));
    if resid > config.tol.max(1e-7) * scale.max(1.0) * 10.0 {
        return Err(SolveError::Numerical(format!(
            "final residual {resid:.3e} exceeds tolerance"
        )));
    }

    // Duals from slack reduced costs: d_slack_i = -y_i.
    let mut cb = vec![0.0; m];
    for i in 0..m {
        cb[i] = cost[tab.basis[i]];
    }
    let mut duals = vec![0.0; m];
    for i in 0..m {
        let col = n + i;
        let mut d = 0.0;
        for r in 0..m {
            if cb[r] != 0.0 {
                d += cb[r] * tab.at(r, col);
            }
        }
        duals[i] = d; // c_slack = 0, so y_i = c_B^T T[., slack_i]
    }

    // Dual objective: y^T b + sum over nonbasic of d_j x_j.
    let mut dual_obj: f64 = lp.rows.iter().enumerate().map(|(i, r)| duals[i] * r.rhs).sum();
    for j in 0..n {
        if matches!(tab.state[j], VarState::Basic(_)) {
            continue;
        }
        let mut d = cost[j];
        for i in 0..m {
            if cb[i] != 0.0 {
                d -= cb[i] * tab.at(i, j);
            }
        }
        dual_obj += d * tab.value[j];
    }

    let objective = lp.objective_value(&x);
    Ok(Solution {
        status: Status::Optimal,
        x,
        objective,
        bound: dual_obj + lp.obj_offset,
        duals,
    })
}
