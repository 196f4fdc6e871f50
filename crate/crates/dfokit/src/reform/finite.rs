//! Compilers for polytope-of-weights ambiguity over a finite scenario set:
//! the extreme-point batch and the complementarity (big-M) MILP.

use crate::linalg::dot;
use crate::milp::{solve_lp, Sense, SolverConfig, Status};
use crate::model::{AmbiguitySet, DfoProblem, LpRecourse, Recourse, RecourseMode};
use crate::oracle::{decision_vertices, Polyhedron};

use super::{citations, CompiledMember, CompiledProgram, LinExpr, ProgramBuilder, ReformError};

pub(crate) const DEFAULT_VERTEX_CAP: usize = 10_000;

fn finite_parts(problem: &DfoProblem) -> Result<(&[Vec<f64>], &[Vec<f64>], &[f64]), ReformError> {
    match &problem.ambiguity {
        AmbiguitySet::FinitePolyhedral { scenarios, d_matrix, d_rhs } => {
            Ok((scenarios, d_matrix, d_rhs))
        }
        _ => Err(ReformError::InvalidProblem("expected a finite weight polytope".into())),
    }
}

/// Componentwise value bounds `[L_i, U_i]` of the recourse over the decision
/// set, one pair per scenario. Minima come from LPs; maxima of LP-valued or
/// piecewise-convex recourse come from enumerated decision vertices.
pub fn scenario_value_bounds(
    problem: &DfoProblem,
    scenarios: &[Vec<f64>],
) -> Result<Vec<(f64, f64)>, ReformError> {
    let ds = &problem.decisions;
    let cfg = SolverConfig::default();
    let mut out = Vec::with_capacity(scenarios.len());
    match &problem.recourse {
        Recourse::Piecewise(pw) => {
            for xi in scenarios {
                let mut lo = f64::INFINITY;
                let mut hi = f64::NEG_INFINITY;
                match pw.mode {
                    RecourseMode::ConcaveMin => {
                        // L = min_k min_x affine_k; U = max_x min_k affine_k.
                        for piece in &pw.pieces {
                            let (coeffs, constant) = piece.combined(xi);
                            lo = lo.min(affine_extreme(ds, &coeffs, constant, false, &cfg)?);
                        }
                        hi = concave_max(ds, pw, xi, &cfg)?;
                    }
                    RecourseMode::ConvexMax => {
                        // L = min_x max_k affine_k; U = max_k max_x affine_k.
                        for piece in &pw.pieces {
                            let (coeffs, constant) = piece.combined(xi);
                            hi = hi.max(affine_extreme(ds, &coeffs, constant, true, &cfg)?);
                        }
                        lo = convex_min(ds, pw, xi, &cfg)?;
                    }
                }
                out.push((lo, hi));
            }
        }
        Recourse::Lp(lp) => {
            // Convex value function: minimum by one joint LP, maximum over
            // enumerated decision vertices.
            let vertices = decision_vertices(ds).map_err(ReformError::Oracle)?;
            if vertices.is_empty() {
                return Err(ReformError::InvalidProblem("decision set has no vertices".into()));
            }
            for xi in scenarios {
                let lo = lp_joint_min(ds, lp, xi, &cfg)?;
                let mut hi = f64::NEG_INFINITY;
                for v in &vertices {
                    let q = lp.evaluate(v, xi).map_err(|e| {
                        ReformError::MissingBounds(format!("recourse failed at a vertex: {e}"))
                    })?;
                    hi = hi.max(q);
                }
                out.push((lo, hi));
            }
        }
    }
    Ok(out)
}

fn decision_lp(ds: &crate::model::DecisionSet) -> (crate::milp::LinearProgram, Vec<usize>) {
    let mut lp = crate::milp::LinearProgram::new("bounds");
    let vars: Vec<usize> =
        (0..ds.dim()).map(|j| lp.add_var(format!("x{j}"), ds.lower[j], ds.upper[j], 0.0, false)).collect();
    for (i, (row, &rhs)) in ds.ineq_matrix.iter().zip(&ds.ineq_rhs).enumerate() {
        let coeffs: Vec<(usize, f64)> = row
            .iter()
            .enumerate()
            .filter(|&(_, &c)| c != 0.0)
            .map(|(j, &c)| (vars[j], c))
            .collect();
        lp.add_row(format!("d{i}"), coeffs, Sense::Le, rhs);
    }
    (lp, vars)
}

fn affine_extreme(
    ds: &crate::model::DecisionSet,
    coeffs: &[f64],
    constant: f64,
    maximize: bool,
    cfg: &SolverConfig,
) -> Result<f64, ReformError> {
    let (mut lp, vars) = decision_lp(ds);
    for (j, &c) in coeffs.iter().enumerate() {
        lp.objective[vars[j]] = if maximize { -c } else { c };
    }
    let sol = solve_lp(&lp, cfg).map_err(ReformError::Solver)?;
    match sol.status {
        Status::Optimal => {
            Ok(if maximize { -sol.objective + constant } else { sol.objective + constant })
        }
        other => Err(ReformError::SolveFailed(format!("bound LP: {other:?}"))),
    }
}

/// `max_x min_k` of affine pieces: epigraph LP from below.
fn concave_max(
    ds: &crate::model::DecisionSet,
    pw: &crate::model::PiecewiseAffineRecourse,
    xi: &[f64],
    cfg: &SolverConfig,
) -> Result<f64, ReformError> {
    let (mut lp, vars) = decision_lp(ds);
    let t = lp.add_var("t", f64::NEG_INFINITY, f64::INFINITY, -1.0, false);
    for (k, piece) in pw.pieces.iter().enumerate() {
        let (coeffs, constant) = piece.combined(xi);
        let mut row: Vec<(usize, f64)> = coeffs
            .iter()
            .enumerate()
            .filter(|&(_, &c)| c != 0.0)
            .map(|(j, &c)| (vars[j], -c))
            .collect();
        row.push((t, 1.0));
        lp.add_row(format!("t{k}"), row, Sense::Le, constant);
    }
    let sol = solve_lp(&lp, cfg).map_err(ReformError::Solver)?;
    match sol.status {
        Status::Optimal => Ok(-sol.objective),
        other => Err(ReformError::SolveFailed(format!("bound LP: {other:?}"))),
    }
}

/// `min_x max_k` of affine pieces: epigraph LP from above.
fn convex_min(
    ds: &crate::model::DecisionSet,
    pw: &crate::model::PiecewiseAffineRecourse,
    xi: &[f64],
    cfg: &SolverConfig,
) -> Result<f64, ReformError> {
    let (mut lp, vars) = decision_lp(ds);
    let t = lp.add_var("t", f64::NEG_INFINITY, f64::INFINITY, 1.0, false);
    for (k, piece) in pw.pieces.iter().enumerate() {
        let (coeffs, constant) = piece.combined(xi);
        let mut row: Vec<(usize, f64)> = coeffs
            .iter()
            .enumerate()
            .filter(|&(_, &c)| c != 0.0)
            .map(|(j, &c)| (vars[j], c))
            .collect();
        row.push((t, -1.0));
        lp.add_row(format!("t{k}"), row, Sense::Le, -constant);
    }
    let sol = solve_lp(&lp, cfg).map_err(ReformError::Solver)?;
    match sol.status {
        Status::Optimal => Ok(sol.objective),
        other => Err(ReformError::SolveFailed(format!("bound LP: {other:?}"))),
    }
}

fn lp_joint_min(
    ds: &crate::model::DecisionSet,
    lp_rec: &LpRecourse,
    xi: &[f64],
    cfg: &SolverConfig,
) -> Result<f64, ReformError> {
    let (mut lp, vars) = decision_lp(ds);
    lp_rec.inline_into(&mut lp, &vars, xi, 1.0, "b");
    let sol = solve_lp(&lp, cfg).map_err(ReformError::Solver)?;
    match sol.status {
        Status::Optimal => Ok(sol.objective),
        other => Err(ReformError::SolveFailed(format!("joint recourse LP: {other:?}"))),
    }
}

/// Epigraph variables `v_i >= Q(x, xi_i)` for the listed scenarios.
/// Concave-minimum recourse gets exact selection blocks with recorded
/// big-M constants; convex recourse and LP recourse use plain rows.
pub(crate) fn add_value_epigraph(
    b: &mut ProgramBuilder,
    problem: &DfoProblem,
    scenarios: &[Vec<f64>],
    x_vars: &[usize],
    bounds: &[(f64, f64)],
    cap_above: bool,
    citation: &str,
    tag: &str,
) -> Result<Vec<usize>, ReformError> {
    let ds = &problem.decisions;
    let mut v_vars = Vec::with_capacity(scenarios.len());
    for (i, _) in scenarios.iter().enumerate() {
        let (lo, hi) = bounds[i];
        let upper = if cap_above { hi } else { f64::INFINITY };
        let v = b.add_var(format!("v{tag}{i}"), lo, upper, 0.0, false);
        v_vars.push(v);
    }
    match &problem.recourse {
        Recourse::Piecewise(pw) if pw.mode == RecourseMode::ConvexMax => {
            for (i, xi) in scenarios.iter().enumerate() {
                for (k, piece) in pw.pieces.iter().enumerate() {
                    let (coeffs, constant) = piece.combined(xi);
                    let expr =
                        LinExpr::affine(x_vars, &coeffs, constant).push(v_vars[i], -1.0);
                    b.add_row(citation, format!("q{tag}{i}_{k}"), expr, Sense::Le, 0.0);
                }
            }
        }
        Recourse::Piecewise(pw) => {
            // v_i >= min_k: pick the active piece with binaries, relax the
            // others by the recorded big-M.
            for (i, xi) in scenarios.iter().enumerate() {
                let ranges: Vec<(f64, f64)> = pw
                    .pieces
                    .iter()
                    .map(|piece| piece.value_range(xi, &ds.lower, &ds.upper))
                    .collect();
                let floor = ranges.iter().map(|r| r.0).fold(f64::INFINITY, f64::min);
                let mut mass = LinExpr::constant(0.0);
                for (k, piece) in pw.pieces.iter().enumerate() {
                    let lam = b.add_var(format!("pk{tag}{i}_{k}"), 0.0, 1.0, 0.0, true);
                    mass = mass.push(lam, 1.0);
                    let big_m = (ranges[k].1 - floor).max(0.0);
                    b.record_big_m(
                        format!("Msel{tag}{i}_{k}"),
                        big_m,
                        "piece value ceiling minus the smallest piece floor over the box",
                        citation,
                    );
                    let (coeffs, constant) = piece.combined(xi);
                    let expr = LinExpr::affine(x_vars, &coeffs, constant)
                        .push(v_vars[i], -1.0)
                        .push(lam, big_m);
                    b.add_row(citation, format!("q{tag}{i}_{k}"), expr, Sense::Le, big_m);
                }
                b.add_row(citation, format!("pick{tag}{i}"), mass, Sense::Eq, 1.0);
            }
        }
        Recourse::Lp(lp_rec) => {
            for (i, xi) in scenarios.iter().enumerate() {
                let ys = lp_recourse_rows(b, lp_rec, x_vars, xi, citation, &format!("{tag}{i}"));
                let mut expr = LinExpr::term(v_vars[i], -1.0);
                for (j, &c) in lp_rec.obj.iter().enumerate() {
                    expr = expr.push(ys[j], c);
                }
                b.add_row(citation, format!("q{tag}{i}"), expr, Sense::Le, 0.0);
            }
        }
    }
    Ok(v_vars)
}

/// Second-stage variables and rows of an LP recourse at a fixed scenario.
pub(crate) fn lp_recourse_rows(
    b: &mut ProgramBuilder,
    lp_rec: &LpRecourse,
    x_vars: &[usize],
    xi: &[f64],
    citation: &str,
    tag: &str,
) -> Vec<usize> {
    let ys: Vec<usize> = (0..lp_rec.num_y())
        .map(|j| b.add_var(format!("y{tag}_{j}"), lp_rec.y_lower[j], f64::INFINITY, 0.0, false))
        .collect();
    for r in 0..lp_rec.num_rows() {
        let rhs = lp_rec.rhs_const[r] + dot(&lp_rec.tech_xi[r], xi);
        let mut expr = LinExpr::constant(0.0);
        for (j, &w) in lp_rec.recourse_matrix[r].iter().enumerate() {
            expr = expr.push(ys[j], w);
        }
        for (j, &t) in lp_rec.tech_x[r].iter().enumerate() {
            expr = expr.push(x_vars[j], -t);
        }
        b.add_row(citation, format!("rc{tag}_{r}"), expr, lp_rec.senses[r], rhs);
    }
    ys
}

/// One batch member per extreme point of the weight polytope: minimize the
/// weighted scenario values over the decision set.
pub fn compile_finite_enumeration(problem: &DfoProblem) -> Result<CompiledProgram, ReformError> {
    let (scenarios, d_matrix, d_rhs) = finite_parts(problem)?;
    let n_s = scenarios.len();
    let mut poly = Polyhedron {
        rows: Vec::new(),
        lower: vec![0.0; n_s],
        upper: vec![1.0; n_s],
        label: "weight polytope".into(),
    };
    for (row, &rhs) in d_matrix.iter().zip(d_rhs) {
        poly.add_le(row.clone(), rhs);
    }
    poly.add_eq(vec![1.0; n_s], 1.0);
    let vertices = poly.enumerate(DEFAULT_VERTEX_CAP).map_err(|e| match e {
        crate::oracle::OracleError::CapExceeded(_) => {
            ReformError::VertexCapExceeded(DEFAULT_VERTEX_CAP)
        }
        other => ReformError::Oracle(other),
    })?;
    if vertices.vertices.is_empty() {
        return Err(ReformError::InvalidProblem("weight polytope is empty".into()));
    }

    let bounds = scenario_value_bounds(problem, scenarios)?;
    let members: Vec<CompiledMember> = vertices
        .vertices
        .iter()
        .enumerate()
        .map(|(v_idx, gamma)| -> Result<CompiledMember, ReformError> {
            let mut b = ProgramBuilder::new(format!("B{v_idx}_vertex"));
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
                b.lp.objective[v] = gamma[i];
            }
            Ok(b.finish(format!("B{v_idx}_weights")))
        })
        .collect::<Result<_, _>>()?;

    Ok(CompiledProgram::Batch {
        members,
        n_decision: problem.decisions.dim(),
        citation: citations::THM_4_3.into(),
    })
}

/// User-supplied big-M overrides for the complementarity route.
#[derive(Debug, Clone, Default)]
pub struct KktBigM {
    pub m1: Option<Vec<f64>>,
    pub m2: Option<Vec<f64>>,
    pub mbar: Option<Vec<f64>>,
}

/// Encoding length of a row of rationals: 1 + ceil(log2(|num|+1)) +
/// ceil(log2(den+1)) per entry, summed.
fn row_encoding_length(row: &[f64]) -> u32 {
    row.iter()
        .map(|&v| {
            let (num, den) = rationalize(v);
            1 + ceil_log2(num.unsigned_abs() + 1) + ceil_log2(den + 1)
        })
        .sum()
}

fn ceil_log2(v: u64) -> u32 {
    if v <= 1 {
        0
    } else {
        64 - (v - 1).leading_zeros()
    }
}

/// Nearest rational with denominator up to 1e6, by continued fractions.
fn rationalize(v: f64) -> (i64, u64) {
    let neg = v < 0.0;
    let mut x = v.abs();
    let (mut p0, mut q0, mut p1, mut q1) = (0i64, 1u64, 1i64, 0u64);
    for _ in 0..40 {
        let a = x.floor();
        let p2 = a as i64 * p1 + p0;
        let q2 = a as u64 * q1 + q0;
        if q2 > 1_000_000 {
            break;
        }
        p0 = p1;
        q0 = q1;
        p1 = p2;
        q1 = q2;
        let frac = x - a;
        if frac.abs() < 1e-12 || (p1 as f64 / q1 as f64 - v.abs()).abs() < 1e-12 {
            break;
        }
        x = 1.0 / frac;
    }
    (if neg { -p1 } else { p1 }, q1.max(1))
}

fn is_integer_matrix(d: &[Vec<f64>]) -> bool {
    d.iter().flatten().all(|&v| (v - v.round()).abs() < 1e-9)
}

/// Single complementarity MILP: the inner weight LP is replaced by its
/// optimality system with big-M-bounded dual variables and binary
/// activity indicators. Both big-M recipes are evaluated where their
/// hypotheses hold and the smaller valid constant wins per coefficient.
pub fn compile_finite_kkt(problem: &DfoProblem) -> Result<CompiledProgram, ReformError> {
    compile_finite_kkt_with(problem, &KktBigM::default())
}

pub fn compile_finite_kkt_with(
    problem: &DfoProblem,
    overrides: &KktBigM,
) -> Result<CompiledProgram, ReformError> {
    let (scenarios, d_matrix, d_rhs) = finite_parts(problem)?;
    let bounds = scenario_value_bounds(problem, scenarios)?;
    let mut b = ProgramBuilder::new("kkt");
    let x_vars = b.add_decisions(&problem.decisions, citations::THM_4_4);
    let (t_var, _) = add_kkt_block(
        &mut b,
        problem,
        scenarios,
        d_matrix,
        d_rhs,
        &bounds,
        &x_vars,
        overrides,
        "",
    )?;
    b.lp.objective[t_var] = 1.0;
    Ok(CompiledProgram::Single {
        member: Box::new(b.finish("kkt_milp")),
        n_decision: problem.decisions.dim(),
        citation: citations::THM_4_4.into(),
    })
}

/// The complementarity block: returns the inner-value variable `t` and the
/// scenario epigraph variables. Shared between the pure compiler and the
/// optimism-blend compiler.
#[allow(clippy::too_many_arguments)]
pub(crate) fn add_kkt_block(
    b: &mut ProgramBuilder,
    problem: &DfoProblem,
    scenarios: &[Vec<f64>],
    d_matrix: &[Vec<f64>],
    d_rhs: &[f64],
    bounds: &[(f64, f64)],
    x_vars: &[usize],
    overrides: &KktBigM,
    tag: &str,
) -> Result<(usize, Vec<usize>), ReformError> {
    let n_s = scenarios.len();
    let ell = d_matrix.len();

    let u_max = bounds.iter().map(|b| b.1).fold(f64::NEG_INFINITY, f64::max);
    let l_min = bounds.iter().map(|b| b.0).fold(f64::INFINITY, f64::min);
    let mag = bounds
        .iter()
        .map(|b| b.0.abs().max(b.1.abs()))
        .fold(1.0f64, f64::max);

    let integer_route = ell == 0 || is_integer_matrix(d_matrix);
    let sign_route =
        ell == 0 || (d_matrix.iter().flatten().all(|&v| v >= 0.0) && d_rhs.iter().all(|&v| v > 0.0));
    if !integer_route && !sign_route && overrides.m1.is_none() {
        return Err(ReformError::MissingBounds(
            "no valid big-M recipe: the weight matrix is neither integer nor \
             nonnegative-with-positive-rhs, and no user bounds were supplied"
                .into(),
        ));
    }

    // Largest row encoding length of the stacked dual matrix.
    let l_bar: u32 = if integer_route && ell > 0 {
        let mut rows: Vec<Vec<f64>> = Vec::with_capacity(n_s + 1);
        let mut top: Vec<f64> = d_rhs.to_vec();
        top.push(1.0);
        rows.push(top);
        for i in 0..n_s {
            let mut row: Vec<f64> = (0..ell).map(|j| d_matrix[j][i]).collect();
            row.push(1.0);
            rows.push(row);
        }
        rows.iter().map(|r| row_encoding_length(r)).max().unwrap_or(0)
    } else {
        0
    };
    // 2^L_bar with a float guard; desk-scale rows keep this small.
    let two_l = (l_bar.min(120)) as i32;
    let scale_44 = (ell as f64 + 1.0) * (2.0f64).powi(two_l);

    let mut m1 = vec![0.0; ell];
    let mut m2 = vec![0.0; ell];
    let mut mbar = vec![0.0; n_s];
    for j in 0..ell {
        let mut candidates: Vec<(f64, &str)> = Vec::new();
        if integer_route {
            candidates.push((mag * scale_44, "max|Q-bound| * (l+1) * 2^Lbar"));
        }
        if sign_route && ell > 0 {
            candidates.push(((u_max - l_min) / d_rhs[j], "(max U - min L) / d_j"));
        }
        if let Some(user) = &overrides.m1 {
            candidates.push((user[j], "user override"));
        }
        let (value, formula) = candidates
            .into_iter()
            .filter(|c| c.0.is_finite() && c.0 >= 0.0)
            .min_by(|a, b| a.0.total_cmp(&b.0))
            .ok_or_else(|| ReformError::MissingBounds(format!("no valid M_{j},1")))?;
        m1[j] = value;
        b.record_big_m(format!("M{tag}_{j}_1"), value, formula, pick_citation(formula));

        let mut candidates: Vec<(f64, &str)> = Vec::new();
        if integer_route {
            let abs_sum: f64 = (0..n_s).map(|i| d_matrix[j][i].abs()).sum();
            candidates.push((d_rhs[j] + abs_sum, "d_j + sum_i |D_ji|"));
        }
        if sign_route {
            candidates.push((d_rhs[j], "d_j"));
        }
        if let Some(user) = &overrides.m2 {
            candidates.push((user[j], "user override"));
        }
        let (value, formula) = candidates
            .into_iter()
            .filter(|c| c.0.is_finite() && c.0 >= 0.0)
            .min_by(|a, b| a.0.total_cmp(&b.0))
            .ok_or_else(|| ReformError::MissingBounds(format!("no valid M_{j},2")))?;
        m2[j] = value;
        b.record_big_m(format!("M{tag}_{j}_2"), value, formula, pick_citation(formula));
    }
    for i in 0..n_s {
        let mut candidates: Vec<(f64, &str)> = Vec::new();
        if integer_route {
            let col_sum: f64 = (0..ell).map(|j| d_matrix[j][i].abs()).sum();
            candidates.push((
                mag * (col_sum + 1.0) * scale_44 + mag * scale_44,
                "max|Q-bound| (sum_j |D_ji| + 1)(l+1) 2^Lbar + max|Q-bound| (l+1) 2^Lbar",
            ));
        }
        if sign_route {
            candidates.push((bounds[i].1 - l_min, "U_i - min_i L_i"));
        }
        if let Some(user) = &overrides.mbar {
            candidates.push((user[i], "user override"));
        }
        let (value, formula) = candidates
            .into_iter()
            .filter(|c| c.0.is_finite() && c.0 >= 0.0)
            .min_by(|a, b| a.0.total_cmp(&b.0))
            .ok_or_else(|| ReformError::MissingBounds(format!("no valid Mbar_{i}")))?;
        mbar[i] = value;
        b.record_big_m(format!("Mbar{tag}_{i}"), value, formula, pick_citation(formula));
    }

    // Variables of the optimality system.
    let t_var = b.add_var(format!("t{tag}"), f64::NEG_INFINITY, f64::INFINITY, 0.0, false);
    let beta = b.add_var(format!("beta{tag}"), f64::NEG_INFINITY, f64::INFINITY, 0.0, false);
    let alphas: Vec<usize> =
        (0..ell).map(|j| b.add_var(format!("alpha{tag}{j}"), 0.0, m1[j], 0.0, false)).collect();
    let ps: Vec<usize> =
        (0..n_s).map(|i| b.add_var(format!("p{tag}{i}"), 0.0, 1.0, 0.0, false)).collect();
    let zs: Vec<usize> =
        (0..ell).map(|j| b.add_var(format!("zc{tag}{j}"), 0.0, 1.0, 0.0, true)).collect();
    let zbars: Vec<usize> =
        (0..n_s).map(|i| b.add_var(format!("zp{tag}{i}"), 0.0, 1.0, 0.0, true)).collect();
    let v_vars = add_value_epigraph(
        b,
        problem,
        scenarios,
        x_vars,
        bounds,
        false,
        citations::THM_4_4,
        tag,
    )?;

    let cite = citations::THM_4_4;
    // Strong duality: the reported value dominates the dual objective.
    let mut strong = LinExpr::var(beta).push(t_var, -1.0);
    for (j, &a) in alphas.iter().enumerate() {
        strong = strong.push(a, -d_rhs[j]);
    }
    b.add_row(cite, format!("dualobj{tag}"), strong, Sense::Le, 0.0);
    // Dual feasibility per scenario.
    for i in 0..n_s {
        let mut expr = LinExpr::var(beta).push(v_vars[i], -1.0);
        for (j, &a) in alphas.iter().enumerate() {
            expr = expr.push(a, -d_matrix[j][i]);
        }
        b.add_row(cite, format!("dualf{tag}{i}"), expr, Sense::Le, 0.0);
    }
    for j in 0..ell {
        // Complementarity on the polytope rows.
        let act = LinExpr::var(alphas[j]).push(zs[j], -m1[j]);
        b.add_row(cite, format!("act{tag}{j}"), act, Sense::Le, 0.0);
        let mut primal = LinExpr::constant(0.0);
        for (i, &p) in ps.iter().enumerate() {
            primal = primal.push(p, d_matrix[j][i]);
        }
        b.add_row(cite, format!("prim{tag}{j}"), primal.clone(), Sense::Le, d_rhs[j]);
        let slack = primal.scaled(-1.0).push(zs[j], m2[j]);
        b.add_row(cite, format!("slack{tag}{j}"), slack, Sense::Le, m2[j] - d_rhs[j]);
    }
    // Complementarity on the weights.
    for i in 0..n_s {
        let link = LinExpr::var(ps[i]).push(zbars[i], -1.0);
        b.add_row(cite, format!("supp{tag}{i}"), link, Sense::Le, 0.0);
        let mut dual_slack = LinExpr::var(v_vars[i]).push(beta, -1.0).push(zbars[i], mbar[i]);
        for (j, &a) in alphas.iter().enumerate() {
            dual_slack = dual_slack.push(a, d_matrix[j][i]);
        }
        b.add_row(cite, format!("dslack{tag}{i}"), dual_slack, Sense::Le, mbar[i]);
    }
    let mass = ps.iter().fold(LinExpr::constant(0.0), |e, &p| e.push(p, 1.0));
    b.add_row(cite, format!("mass{tag}"), mass, Sense::Eq, 1.0);

    Ok((t_var, v_vars))
}

fn pick_citation(formula: &str) -> &'static str {
    if formula.contains("Lbar") {
        citations::THM_4_4
    } else if formula.contains("user") {
        citations::THM_4_4
    } else {
        citations::COR_4_5
    }
}
