//! Optimism-blend compiler: a convex combination of the favorable inner
//! value (selection/complementarity machinery) and the robust inner value
//! (plain LP duality of the weight supremum), sharing the decision vector
//! and the scenario epigraph variables.

use crate::milp::Sense;
use crate::model::{AmbiguitySet, DfoProblem};

use super::finite::{add_kkt_block, add_value_epigraph, scenario_value_bounds, KktBigM};
use super::interval::interval_members;
use super::{
    citations, compile_finite_kkt, compile_interval_polyhedral, CompiledMember, CompiledProgram,
    LinExpr, ProgramBuilder, ReformError,
};

/// Dual rows of `sup { v' p : p in weight set }` added onto existing
/// epigraph variables; returns the expression whose minimum equals the
/// supremum.
fn add_dro_dual(
    b: &mut ProgramBuilder,
    ambiguity: &AmbiguitySet,
    v_vars: &[usize],
    tag: &str,
) -> Result<LinExpr, ReformError> {
    let cite = citations::EQ_28;
    match ambiguity {
        AmbiguitySet::FinitePolyhedral { d_matrix, d_rhs, .. } => {
            let n_s = v_vars.len();
            let ys: Vec<usize> = (0..d_matrix.len())
                .map(|j| b.add_var(format!("ydro{tag}{j}"), 0.0, f64::INFINITY, 0.0, false))
                .collect();
            let beta =
                b.add_var(format!("bdro{tag}"), f64::NEG_INFINITY, f64::INFINITY, 0.0, false);
            for i in 0..n_s {
                // v_i <= sum_j D_ji y_j + beta.
                let mut expr = LinExpr::var(v_vars[i]).push(beta, -1.0);
                for (j, &y) in ys.iter().enumerate() {
                    expr = expr.push(y, -d_matrix[j][i]);
                }
                b.add_row(cite, format!("dro{tag}{i}"), expr, Sense::Le, 0.0);
            }
            let mut obj = LinExpr::var(beta);
            for (j, &y) in ys.iter().enumerate() {
                obj = obj.push(y, d_rhs[j]);
            }
            Ok(obj)
        }
        AmbiguitySet::IntervalPolyhedral { scenarios, p0, lbar, ubar, q } => {
            let n_s = scenarios.len();
            let qf = *q as f64;
            let beta =
                b.add_var(format!("bdro{tag}"), f64::NEG_INFINITY, f64::INFINITY, 0.0, false);
            let mut obj = LinExpr::var(beta);
            for i in 0..n_s {
                let wp = b.add_var(format!("wp{tag}{i}"), 0.0, f64::INFINITY, 0.0, false);
                let wn = b.add_var(format!("wn{tag}{i}"), 0.0, f64::INFINITY, 0.0, false);
                let expr = LinExpr::var(v_vars[i]).push(wp, -1.0).push(wn, 1.0).push(beta, -1.0);
                b.add_row(cite, format!("dro{tag}{i}"), expr, Sense::Le, 0.0);
                obj = obj
                    .push(wp, p0[i] + ubar[i] as f64 / qf)
                    .push(wn, -(p0[i] + lbar[i] as f64 / qf));
            }
            Ok(obj)
        }
        _ => Err(ReformError::InvalidProblem(
            "robust dual needs a finite or interval weight set".into(),
        )),
    }
}

/// Pure robust counterpart: minimize the worst-case expected recourse.
pub fn build_dro_program(problem: &DfoProblem) -> Result<CompiledProgram, ReformError> {
    let scenarios = match &problem.ambiguity {
        AmbiguitySet::FinitePolyhedral { scenarios, .. }
        | AmbiguitySet::IntervalPolyhedral { scenarios, .. } => scenarios.clone(),
        _ => {
            return Err(ReformError::InvalidProblem(
                "robust compiler needs a finite or interval weight set".into(),
            ))
        }
    };
    let bounds = scenario_value_bounds(problem, &scenarios)?;
    let mut b = ProgramBuilder::new("dro");
    let x_vars = b.add_decisions(&problem.decisions, citations::EQ_28);
    let v_vars = add_value_epigraph(
        &mut b,
        problem,
        &scenarios,
        &x_vars,
        &bounds,
        false,
        citations::EQ_28,
        "",
    )?;
    let obj = add_dro_dual(&mut b, &problem.ambiguity, &v_vars, "")?;
    b.add_objective(&obj, 1.0);
    Ok(CompiledProgram::Single {
        member: Box::new(b.finish("dro_dual")),
        n_decision: problem.decisions.dim(),
        citation: citations::EQ_28.into(),
    })
}

/// Sample-average program at fixed weights.
pub fn build_saa_program(
    problem: &DfoProblem,
    scenarios: &[Vec<f64>],
    weights: &[f64],
) -> Result<CompiledProgram, ReformError> {
    let bounds = scenario_value_bounds(problem, scenarios)?;
    let mut b = ProgramBuilder::new("saa");
    let x_vars = b.add_decisions(&problem.decisions, citations::THM_4_3);
    let v_vars = add_value_epigraph(
        &mut b,
        problem,
        scenarios,
        &x_vars,
        &bounds,
        true,
        citations::THM_4_3,
        "",
    )?;
    for (i, &v) in v_vars.iter().enumerate() {
        b.lp.objective[v] += weights[i];
    }
    Ok(CompiledProgram::Single {
        member: Box::new(b.finish("saa")),
        n_decision: problem.decisions.dim(),
        citation: citations::THM_4_3.into(),
    })
}

/// Blend of the favorable and robust objectives at the given optimism
/// level. Collapses to the pure programs at the endpoints.
pub fn compile_hurwicz(problem: &DfoProblem) -> Result<CompiledProgram, ReformError> {
    let lambda = problem.hurwicz_lambda.ok_or(ReformError::MissingLambda)?;
    if !(0.0..=1.0).contains(&lambda) {
        return Err(ReformError::InvalidProblem(format!("optimism level {lambda} outside [0,1]")));
    }
    match &problem.ambiguity {
        AmbiguitySet::FinitePolyhedral { scenarios, d_matrix, d_rhs } => {
            if lambda == 0.0 {
                return build_dro_program(problem);
            }
            if lambda == 1.0 {
                return compile_finite_kkt(problem);
            }
            let bounds = scenario_value_bounds(problem, scenarios)?;
            let mut b = ProgramBuilder::new("hurwicz");
            let x_vars = b.add_decisions(&problem.decisions, citations::THM_4_4);
            let (t_var, v_vars) = add_kkt_block(
                &mut b,
                problem,
                scenarios,
                d_matrix,
                d_rhs,
                &bounds,
                &x_vars,
                &KktBigM::default(),
                "",
            )?;
            b.lp.objective[t_var] += lambda;
            let dro_obj = add_dro_dual(&mut b, &problem.ambiguity, &v_vars, "")?;
            b.add_objective(&dro_obj, 1.0 - lambda);
            Ok(CompiledProgram::Single {
                member: Box::new(b.finish("hurwicz_kkt")),
                n_decision: problem.decisions.dim(),
                citation: citations::THM_4_4.into(),
            })
        }
        AmbiguitySet::IntervalPolyhedral { .. } => {
            if lambda == 0.0 {
                return build_dro_program(problem);
            }
            if lambda == 1.0 {
                return compile_interval_polyhedral(problem);
            }
            let members: Vec<CompiledMember> = interval_members(problem, lambda)?
                .into_iter()
                .map(|(mut b, v_vars, label)| -> Result<CompiledMember, ReformError> {
                    let dro_obj = add_dro_dual(&mut b, &problem.ambiguity, &v_vars, "h")?;
                    b.add_objective(&dro_obj, 1.0 - lambda);
                    Ok(b.finish(label))
                })
                .collect::<Result<_, _>>()?;
            Ok(CompiledProgram::Batch {
                members,
                n_decision: problem.decisions.dim(),
                citation: citations::COR_4_6.into(),
            })
        }
        _ => Err(ReformError::InvalidProblem(
            "optimism blend needs a finite or interval weight set".into(),
        )),
    }
}
