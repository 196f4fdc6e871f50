//! Compiler for interval weight perturbations around a nominal
//! distribution: one selection MILP per anchor scenario (and per reachable
//! perturbation level in the general case).

use crate::milp::Sense;
use crate::model::{AmbiguitySet, DfoProblem};

use super::finite::{add_value_epigraph, scenario_value_bounds};
use super::mccormick::{build_mccormick, McBounds};
use super::{citations, CompiledMember, CompiledProgram, LinExpr, ProgramBuilder, ReformError};

pub(crate) struct IntervalParts<'a> {
    pub scenarios: &'a [Vec<f64>],
    pub p0: &'a [f64],
    pub lbar: &'a [i64],
    pub ubar: &'a [i64],
    pub q: u64,
}

pub(crate) fn interval_parts(problem: &DfoProblem) -> Result<IntervalParts<'_>, ReformError> {
    match &problem.ambiguity {
        AmbiguitySet::IntervalPolyhedral { scenarios, p0, lbar, ubar, q } => Ok(IntervalParts {
            scenarios,
            p0,
            lbar,
            ubar,
            q: *q,
        }),
        _ => Err(ReformError::InvalidProblem("expected interval weight perturbations".into())),
    }
}

/// `kappa = N / (uN + 1)` for the uniform special case, computed in exact
/// integer arithmetic from `u = ubar/q`: returns (kappa, floor(kappa),
/// residual weight `1 - floor(kappa)/kappa`).
pub fn interval_kappa(n: usize, ubar: i64, q: u64) -> (f64, u64, f64) {
    // kappa = N q / (ubar N + q).
    let num = (n as i128) * (q as i128);
    let den = (ubar as i128) * (n as i128) + q as i128;
    debug_assert!(den > 0);
    let floor = (num / den) as u64;
    let kappa = num as f64 / den as f64;
    let residual = 1.0 - (floor as i128 * den) as f64 / num as f64;
    (kappa, floor, residual)
}

/// The uniform special case applies when the nominal weights are `e/N`, the
/// lower perturbations are exactly `-1/N`, and the upper perturbations are a
/// common positive constant.
fn uniform_case(parts: &IntervalParts<'_>) -> Option<(i64, u64)> {
    let n = parts.scenarios.len();
    let uniform = 1.0 / n as f64;
    if parts.p0.iter().any(|&p| (p - uniform).abs() > 1e-12) {
        return None;
    }
    // lbar/q == -1/N exactly.
    if parts.lbar.iter().any(|&l| (l as i128) * (n as i128) != -(parts.q as i128)) {
        return None;
    }
    let u0 = parts.ubar[0];
    if u0 <= 0 || parts.ubar.iter().any(|&u| u != u0) {
        return None;
    }
    Some((u0, parts.q))
}

/// Anchor members shared by the pure compiler and the optimism blend:
/// builders with the scaled selection objective already in place, plus the
/// scenario epigraph variables.
pub(crate) fn interval_members(
    problem: &DfoProblem,
    obj_scale: f64,
) -> Result<Vec<(ProgramBuilder, Vec<usize>, String)>, ReformError> {
    let parts = interval_parts(problem)?;
    let n_s = parts.scenarios.len();
    let bounds = scenario_value_bounds(problem, parts.scenarios)?;
    let qf = parts.q as f64;
    let mut out = Vec::new();

    if let Some((u0, q)) = uniform_case(&parts) {
        let (kappa, floor, residual) = interval_kappa(n_s, u0, q);
        let cap_weight = u0 as f64 / qf + 1.0 / n_s as f64; // u + 1/N = 1/kappa
        for j in 0..n_s {
            let mut b = ProgramBuilder::new(format!("B{j}_anchor"));
            let x_vars = b.add_decisions(&problem.decisions, citations::COR_4_7);
            let v_vars = add_value_epigraph(
                &mut b,
                problem,
                parts.scenarios,
                &x_vars,
                &bounds,
                true,
                citations::COR_4_7,
                "",
            )?;
            let mut card = LinExpr::constant(0.0);
            for i in 0..n_s {
                if i == j {
                    continue;
                }
                let z = b.add_var(format!("zsel{i}"), 0.0, 1.0, 0.0, true);
                card = card.push(z, 1.0);
                let eta = b.add_var(
                    format!("eta{i}"),
                    bounds[i].0.min(0.0),
                    bounds[i].1.max(0.0),
                    obj_scale * cap_weight,
                    false,
                );
                build_mccormick(
                    &mut b,
                    citations::DEF_2_3,
                    &format!("sel{i}"),
                    &LinExpr::var(eta),
                    &LinExpr::var(z),
                    &LinExpr::var(v_vars[i]),
                    McBounds::binary(bounds[i].0, bounds[i].1),
                )?;
            }
            b.add_row(citations::COR_4_7, "card", card, Sense::Eq, floor as f64);
            b.lp.objective[v_vars[j]] += obj_scale * residual;
            out.push((b, v_vars, format!("B{j}_kappa{kappa:.6}")));
        }
        return Ok(out);
    }

    // General anchor-and-level grid.
    for j in 0..n_s {
        for tau in parts.lbar[j]..=parts.ubar[j] {
            // Anchor weight must stay a probability.
            if parts.p0[j] + tau as f64 / qf < -1e-12 {
                continue;
            }
            let mut b = ProgramBuilder::new(format!("B{j}_t{tau}"));
            let x_vars = b.add_decisions(&problem.decisions, citations::COR_4_6);
            let v_vars = add_value_epigraph(
                &mut b,
                problem,
                parts.scenarios,
                &x_vars,
                &bounds,
                true,
                citations::COR_4_6,
                "",
            )?;
            let mut card = LinExpr::constant(0.0);
            let mut lbar_sum: i64 = 0;
            for i in 0..n_s {
                if i == j {
                    continue;
                }
                lbar_sum += parts.lbar[i];
                let span = parts.ubar[i] - parts.lbar[i];
                let floor_weight = parts.p0[i] + parts.lbar[i] as f64 / qf;
                b.lp.objective[v_vars[i]] += obj_scale * floor_weight;
                if span == 0 {
                    continue;
                }
                let z = b.add_var(format!("zsel{i}"), 0.0, 1.0, 0.0, true);
                card = card.push(z, span as f64);
                let eta = b.add_var(
                    format!("eta{i}"),
                    bounds[i].0.min(0.0),
                    bounds[i].1.max(0.0),
                    obj_scale * span as f64 / qf,
                    false,
                );
                build_mccormick(
                    &mut b,
                    citations::DEF_2_3,
                    &format!("sel{i}"),
                    &LinExpr::var(eta),
                    &LinExpr::var(z),
                    &LinExpr::var(v_vars[i]),
                    McBounds::binary(bounds[i].0, bounds[i].1),
                )?;
            }
            // -sum_{i != j} (lbar_i + (ubar_i - lbar_i) z_i) = tau.
            b.add_row(
                citations::COR_4_6,
                "card",
                card,
                Sense::Eq,
                (-tau - lbar_sum) as f64,
            );
            b.lp.objective[v_vars[j]] += obj_scale * (parts.p0[j] + tau as f64 / qf);
            out.push((b, v_vars, format!("B{j}_tau{tau}")));
        }
    }
    Ok(out)
}

/// Batch over anchors (uniform case) or over the full anchor-and-level grid.
pub fn compile_interval_polyhedral(problem: &DfoProblem) -> Result<CompiledProgram, ReformError> {
    let parts = interval_parts(problem)?;
    let uniform = uniform_case(&parts).is_some();
    let members: Vec<CompiledMember> = interval_members(problem, 1.0)?
        .into_iter()
        .map(|(b, _, label)| b.finish(label))
        .collect();
    if members.is_empty() {
        return Err(ReformError::InvalidProblem("no feasible anchor members".into()));
    }
    Ok(CompiledProgram::Batch {
        members,
        n_decision: problem.decisions.dim(),
        citation: if uniform { citations::COR_4_7.into() } else { citations::COR_4_6.into() },
    })
}
