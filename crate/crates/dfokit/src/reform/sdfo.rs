//! Compilers for support-only ambiguity over norm balls.

use crate::linalg::dot;
use crate::milp::{solve_lp, Sense, SolverConfig, Status};
use crate::model::{
    propagate_bounds, AmbiguitySet, DfoProblem, NormP, Piece, PiecewiseAffineRecourse, Recourse,
    RecourseMode,
};

use super::mccormick::sign_product;
use super::{
    block_constant_norms_pw, citations, classify, effective_norm, generate_witness, CompiledMember,
    CompiledProgram, LinExpr, ProgramBuilder, ReformError, Verdict, VerdictStatus,
};

/// `center' a_k(x) + b_k(x)` as an expression over registered x variables.
pub(crate) fn piece_expr(piece: &Piece, center: &[f64], x_vars: &[usize]) -> LinExpr {
    let n = piece.a.in_dim();
    let mut coeffs = vec![0.0; n];
    let mut constant = piece.b.offset[0];
    for (j, &c) in piece.b.matrix[0].iter().enumerate() {
        coeffs[j] += c;
    }
    for (i, (row, off)) in piece.a.matrix.iter().zip(&piece.a.offset).enumerate() {
        let z = center[i];
        if z == 0.0 {
            continue;
        }
        constant += z * off;
        for (j, &c) in row.iter().enumerate() {
            coeffs[j] += z * c;
        }
    }
    LinExpr::affine(x_vars, &coeffs, constant)
}

fn destructure_ball(
    problem: &DfoProblem,
) -> Result<(&PiecewiseAffineRecourse, &[f64], f64, NormP), ReformError> {
    let pw = match &problem.recourse {
        Recourse::Piecewise(pw) => pw,
        Recourse::Lp(_) => {
            return Err(ReformError::InvalidProblem(
                "ball compilers need a piecewise recourse".into(),
            ))
        }
    };
    match &problem.ambiguity {
        AmbiguitySet::SupportBall { center, radius, norm_p } => {
            Ok((pw, center, *radius, *norm_p))
        }
        _ => Err(ReformError::InvalidProblem("expected a support ball ambiguity set".into())),
    }
}

fn refuse(problem: &DfoProblem, verdict: Verdict) -> ReformError {
    match generate_witness(problem, &verdict) {
        Some(witness) => ReformError::NotRepresentable { verdict, witness },
        None => ReformError::Unsupported {
            citation: verdict.citation,
            detail: verdict.detail,
        },
    }
}

/// Minimum of piecewise affine functions over the ball: one program per
/// piece (per sign branch when the dual norm must be expanded), combined by
/// the batch minimum.
pub fn compile_concave_sdfo(problem: &DfoProblem) -> Result<CompiledProgram, ReformError> {
    let (pw, center, radius, norm_p) = destructure_ball(problem)?;
    if pw.mode != RecourseMode::ConcaveMin {
        return Err(ReformError::InvalidProblem("expected the piecewise minimum mode".into()));
    }
    let ds = &problem.decisions;
    let m = pw.xi_dim();
    let p = effective_norm(norm_p, m);

    // Constant dual-norm route works for every norm index.
    if radius == 0.0 || pw.constant_a() {
        let members = pw
            .pieces
            .iter()
            .enumerate()
            .map(|(k, piece)| {
                let mut b = ProgramBuilder::new(format!("B{k}_piece"));
                let x_vars = b.add_decisions(ds, citations::THM_3_1_I);
                let ck = norm_p.dual_norm(&piece.a.apply(&vec![0.0; ds.dim()]));
                let base = piece_expr(piece, center, &x_vars);
                b.add_objective(&base, 1.0);
                b.lp.obj_offset -= radius * ck;
                b.finish(format!("B{k}_const_norm"))
            })
            .collect();
        return Ok(CompiledProgram::Batch {
            members,
            n_decision: ds.dim(),
            citation: citations::THM_3_1_I.into(),
        });
    }

    match p {
        NormP::One => {
            // Dual norm is the sup norm: 2mK sign branches.
            let mut members = Vec::with_capacity(2 * m * pw.num_pieces());
            for (k, piece) in pw.pieces.iter().enumerate() {
                for i in 0..m {
                    for (ell, sign) in [(1usize, 1.0f64), (2, -1.0)] {
                        let mut b =
                            ProgramBuilder::new(format!("B{}_k{k}i{i}l{ell}", members.len()));
                        let x_vars = b.add_decisions(ds, citations::THM_3_1_II);
                        let base = piece_expr(piece, center, &x_vars);
                        b.add_objective(&base, 1.0);
                        let (row, off) = piece.a.row(i);
                        let branch = LinExpr::affine(&x_vars, row, off);
                        b.add_objective(&branch, sign * radius);
                        members.push(b.finish(format!("B{}_k{k}_i{i}_l{ell}", members.len())));
                    }
                }
            }
            Ok(CompiledProgram::Batch {
                members,
                n_decision: ds.dim(),
                citation: citations::THM_3_1_II.into(),
            })
        }
        NormP::Inf => {
            // Dual norm is the L1 norm: per-piece MILP with exact sign
            // blocks; maximizing the recovered norm is objective-consistent.
            let members = pw
                .pieces
                .iter()
                .enumerate()
                .map(|(k, piece)| -> Result<CompiledMember, ReformError> {
                    let mut b = ProgramBuilder::new(format!("B{k}_signs"));
                    let x_vars = b.add_decisions(ds, citations::COR_THM_3_3);
                    let base = piece_expr(piece, center, &x_vars);
                    b.add_objective(&base, 1.0);
                    let (lhat, uhat) = propagate_bounds(&piece.a, &ds.lower, &ds.upper);
                    for i in 0..m {
                        let (row, off) = piece.a.row(i);
                        let gamma = LinExpr::affine(&x_vars, row, off);
                        let s = sign_product(
                            &mut b,
                            citations::DEF_2_3,
                            &format!("{k}_{i}"),
                            &gamma,
                            lhat[i],
                            uhat[i],
                        )?;
                        b.lp.objective[s] = -radius;
                    }
                    Ok(b.finish(format!("B{k}_sup_ball")))
                })
                .collect::<Result<Vec<_>, _>>()?;
            Ok(CompiledProgram::Batch {
                members,
                n_decision: ds.dim(),
                citation: citations::COR_THM_3_3.into(),
            })
        }
        NormP::Real(_) => Err(refuse(
            problem,
            Verdict::new(
                VerdictStatus::NotMicpr,
                citations::THM_3_3_CASE_2,
                format!(
                    "strictly convex dual norm (p = {}) with a decision-dependent a-map",
                    norm_p.label()
                ),
            ),
        )),
    }
}

/// Maximum of piecewise affine functions over the ball. Shared-map and
/// block-structured cases compile; everything else is refused with the
/// matching citation.
pub fn compile_convex_sdfo(problem: &DfoProblem) -> Result<CompiledProgram, ReformError> {
    let (pw, center, radius, norm_p) = destructure_ball(problem)?;
    if pw.mode != RecourseMode::ConvexMax {
        return Err(ReformError::InvalidProblem("expected the piecewise maximum mode".into()));
    }
    compile_convex_over_centers(
        problem,
        pw,
        std::slice::from_ref(&center.to_vec()),
        radius,
        norm_p,
    )
}

/// Shared implementation for one ball (support-only) or many balls (one per
/// empirical sample, averaged). The dual-norm machinery is identical; only
/// the number of epigraph blocks differs.
pub(crate) fn compile_convex_over_centers(
    problem: &DfoProblem,
    pw: &PiecewiseAffineRecourse,
    centers: &[Vec<f64>],
    radius: f64,
    norm_p: NormP,
) -> Result<CompiledProgram, ReformError> {
    let ds = &problem.decisions;
    let m = pw.xi_dim();
    let p = effective_norm(norm_p, m);
    let n_c = centers.len();
    let weight = 1.0 / n_c as f64;
    let multi = n_c > 1;
    let route_citation = |single: &'static str| if multi { citations::EQ_19 } else { single };

    // Zero radius: every ball is its center.
    if radius == 0.0 {
        let mut b = ProgramBuilder::new("epigraph");
        let x_vars = b.add_decisions(ds, citations::THM_3_4_I);
        for (i, c) in centers.iter().enumerate() {
            let eta = b.add_var(format!("eta{i}"), f64::NEG_INFINITY, f64::INFINITY, weight, false);
            for (k, piece) in pw.pieces.iter().enumerate() {
                let expr = piece_expr(piece, c, &x_vars).push(eta, -1.0);
                b.add_row(citations::THM_3_4_I, format!("epi{i}_{k}"), expr, Sense::Le, 0.0);
            }
        }
        return Ok(CompiledProgram::Single {
            member: Box::new(b.finish("center_epigraph")),
            n_decision: ds.dim(),
            citation: route_citation(citations::THM_3_4_I).into(),
        });
    }

    // Block structure with constant per-block sup norms: dual LP.
    if matches!(p, NormP::One) {
        if let Some(consts) = block_constant_norms_pw(pw) {
            let mut b = ProgramBuilder::new("block_dual");
            let x_vars = b.add_decisions(ds, citations::THM_3_4_III);
            for (i, c) in centers.iter().enumerate() {
                let beta =
                    b.add_var(format!("beta{i}"), f64::NEG_INFINITY, f64::INFINITY, weight, false);
                let gammas: Vec<usize> = (0..pw.num_pieces())
                    .map(|k| b.add_var(format!("gam{i}_{k}"), 0.0, f64::INFINITY, 0.0, false))
                    .collect();
                let mass = gammas.iter().fold(LinExpr::constant(0.0), |e, &g| e.push(g, 1.0));
                b.add_row(citations::THM_3_4_III, format!("mass{i}"), mass, Sense::Eq, radius);
                for (k, piece) in pw.pieces.iter().enumerate() {
                    let expr = piece_expr(piece, c, &x_vars)
                        .push(gammas[k], -consts[k])
                        .push(beta, -1.0);
                    b.add_row(citations::THM_3_4_III, format!("cut{i}_{k}"), expr, Sense::Le, 0.0);
                }
            }
            return Ok(CompiledProgram::Single {
                member: Box::new(b.finish("block_dual_lp")),
                n_decision: ds.dim(),
                citation: route_citation(citations::THM_3_4_III).into(),
            });
        }
    }

    // Constant maps: explicit uncertainty variables inside a polyhedral ball.
    if pw.constant_a() {
        if !p.is_polyhedral() {
            return Err(ReformError::UnsupportedNorm(format!(
                "constant a-maps keep the instance tractable ({}), but a p = {} ball is not \
                 polyhedral, and only linear models are emitted",
                citations::THM_3_4_I,
                norm_p.label()
            )));
        }
        let mut b = ProgramBuilder::new("explicit_ball");
        let x_vars = b.add_decisions(ds, citations::THM_3_4_I);
        for (i, c) in centers.iter().enumerate() {
            let xi_vars: Vec<usize> = (0..m)
                .map(|j| b.add_var(format!("xi{i}_{j}"), c[j] - radius, c[j] + radius, 0.0, false))
                .collect();
            if matches!(p, NormP::One) {
                let t_vars: Vec<usize> = (0..m)
                    .map(|j| b.add_var(format!("dev{i}_{j}"), 0.0, radius, 0.0, false))
                    .collect();
                for j in 0..m {
                    let up = LinExpr::var(xi_vars[j]).push(t_vars[j], -1.0);
                    b.add_row(citations::THM_3_4_I, format!("dev{i}_{j}p"), up, Sense::Le, c[j]);
                    let dn = LinExpr::term(xi_vars[j], -1.0).push(t_vars[j], -1.0);
                    b.add_row(citations::THM_3_4_I, format!("dev{i}_{j}n"), dn, Sense::Le, -c[j]);
                }
                let mass = t_vars.iter().fold(LinExpr::constant(0.0), |e, &t| e.push(t, 1.0));
                b.add_row(citations::THM_3_4_I, format!("ball{i}"), mass, Sense::Le, radius);
            }
            let eta = b.add_var(format!("eta{i}"), f64::NEG_INFINITY, f64::INFINITY, weight, false);
            for (k, piece) in pw.pieces.iter().enumerate() {
                let mut expr = LinExpr::affine(&x_vars, &piece.b.matrix[0], piece.b.offset[0]);
                for (j, &a) in piece.a.offset.iter().enumerate() {
                    expr = expr.push(xi_vars[j], a);
                }
                expr = expr.push(eta, -1.0);
                b.add_row(citations::THM_3_4_I, format!("epi{i}_{k}"), expr, Sense::Le, 0.0);
            }
        }
        return Ok(CompiledProgram::Single {
            member: Box::new(b.finish("explicit_ball_lp")),
            n_decision: ds.dim(),
            citation: route_citation(citations::THM_3_4_I).into(),
        });
    }

    match p {
        NormP::One if pw.shared_a() => {
            // 2m sign branches of the shared sup dual norm.
            let shared = &pw.pieces[0].a;
            let mut members = Vec::with_capacity(2 * m);
            for i in 0..m {
                for (ell, sign) in [(1usize, -1.0f64), (2, 1.0)] {
                    let mut b = ProgramBuilder::new(format!("B{}_i{i}l{ell}", members.len()));
                    let x_vars = b.add_decisions(ds, citations::THM_3_4_II);
                    let (row, off) = shared.row(i);
                    let branch = LinExpr::affine(&x_vars, row, off).scaled(sign * radius);
                    for (ci, c) in centers.iter().enumerate() {
                        let eta = b.add_var(
                            format!("eta{ci}"),
                            f64::NEG_INFINITY,
                            f64::INFINITY,
                            weight,
                            false,
                        );
                        for (k, piece) in pw.pieces.iter().enumerate() {
                            let expr = piece_expr(piece, c, &x_vars)
                                .add(&branch)
                                .push(eta, -1.0);
                            b.add_row(
                                citations::THM_3_4_II,
                                format!("epi{ci}_{k}"),
                                expr,
                                Sense::Le,
                                0.0,
                            );
                        }
                    }
                    members.push(b.finish(format!("B{}_i{i}_l{ell}", members.len())));
                }
            }
            Ok(CompiledProgram::Batch {
                members,
                n_decision: ds.dim(),
                citation: route_citation(citations::THM_3_4_II).into(),
            })
        }
        NormP::One => Err(ReformError::Unsupported {
            citation: citations::PROP_3_4.into(),
            detail: "NP-hard without shared or block structure; no compiler offered".into(),
        }),
        NormP::Inf if pw.shared_a() => {
            // One MILP: shared sign blocks recover the L1 dual norm.
            let shared = &pw.pieces[0].a;
            let mut b = ProgramBuilder::new("shared_sup");
            let x_vars = b.add_decisions(ds, citations::COR_3_6_I);
            let (lhat, uhat) = propagate_bounds(shared, &ds.lower, &ds.upper);
            let mut norm_expr = LinExpr::constant(0.0);
            for i in 0..m {
                let (row, off) = shared.row(i);
                let gamma = LinExpr::affine(&x_vars, row, off);
                let s = sign_product(
                    &mut b,
                    citations::DEF_2_3,
                    &format!("n{i}"),
                    &gamma,
                    lhat[i],
                    uhat[i],
                )?;
                norm_expr = norm_expr.push(s, 1.0);
            }
            for (ci, c) in centers.iter().enumerate() {
                let eta =
                    b.add_var(format!("eta{ci}"), f64::NEG_INFINITY, f64::INFINITY, weight, false);
                for (k, piece) in pw.pieces.iter().enumerate() {
                    let expr = piece_expr(piece, c, &x_vars)
                        .add(&norm_expr.scaled(-radius))
                        .push(eta, -1.0);
                    b.add_row(citations::COR_3_6_I, format!("epi{ci}_{k}"), expr, Sense::Le, 0.0);
                }
            }
            Ok(CompiledProgram::Single {
                member: Box::new(b.finish("shared_sup_milp")),
                n_decision: ds.dim(),
                citation: route_citation(citations::COR_3_6_I).into(),
            })
        }
        NormP::Inf if pw.block_structure.is_some() => {
            let groups = pw.block_structure.as_ref().unwrap();
            let mut b = ProgramBuilder::new("block_sup");
            let x_vars = b.add_decisions(ds, citations::COR_3_6_II);
            // Per-piece L1 norms over their own blocks.
            let mut norms: Vec<LinExpr> = Vec::with_capacity(pw.num_pieces());
            for (k, (piece, group)) in pw.pieces.iter().zip(groups).enumerate() {
                let (lhat, uhat) = propagate_bounds(&piece.a, &ds.lower, &ds.upper);
                let mut norm_expr = LinExpr::constant(0.0);
                for &i in group {
                    let (row, off) = piece.a.row(i);
                    let gamma = LinExpr::affine(&x_vars, row, off);
                    let s = sign_product(
                        &mut b,
                        citations::DEF_2_3,
                        &format!("n{k}_{i}"),
                        &gamma,
                        lhat[i],
                        uhat[i],
                    )?;
                    norm_expr = norm_expr.push(s, 1.0);
                }
                norms.push(norm_expr);
            }
            for (ci, c) in centers.iter().enumerate() {
                let eta =
                    b.add_var(format!("eta{ci}"), f64::NEG_INFINITY, f64::INFINITY, weight, false);
                for (k, piece) in pw.pieces.iter().enumerate() {
                    let expr = piece_expr(piece, c, &x_vars)
                        .add(&norms[k].scaled(-radius))
                        .push(eta, -1.0);
                    b.add_row(citations::COR_3_6_II, format!("epi{ci}_{k}"), expr, Sense::Le, 0.0);
                }
            }
            Ok(CompiledProgram::Single {
                member: Box::new(b.finish("block_sup_milp")),
                n_decision: ds.dim(),
                citation: route_citation(citations::COR_3_6_II).into(),
            })
        }
        NormP::Inf => Err(ReformError::Unsupported {
            citation: citations::PROP_3_4.into(),
            detail: "no recognized structure for the sup-norm ball".into(),
        }),
        NormP::Real(_) => {
            let verdict = classify(problem);
            Err(refuse(problem, verdict))
        }
    }
}

/// Value of the inner favorable problem for the convex recourse at a fixed
/// decision, through the simplex-weight dual: maximize over piece weights
/// the weighted value minus the dual norm of the weighted a-map, as one LP.
pub fn dual_inner_value_convex(problem: &DfoProblem, x: &[f64]) -> Result<f64, ReformError> {
    let (pw, center, radius, norm_p) = destructure_ball(problem)?;
    if pw.mode != RecourseMode::ConvexMax {
        return Err(ReformError::InvalidProblem("expected the piecewise maximum mode".into()));
    }
    let m = pw.xi_dim();
    let p = effective_norm(norm_p, m);
    if !p.is_polyhedral() {
        return Err(ReformError::UnsupportedNorm(format!(
            "dual value is an LP only for polyhedral balls, got p = {}",
            norm_p.label()
        )));
    }
    if !problem.decisions.contains(x, 1e-7) {
        return Err(ReformError::InvalidProblem("x outside the decision set".into()));
    }

    let k_count = pw.num_pieces();
    let vals: Vec<f64> = pw
        .pieces
        .iter()
        .map(|piece| dot(center, &piece.a.apply(x)) + piece.b.apply(x)[0])
        .collect();
    let a_at_x: Vec<Vec<f64>> = pw.pieces.iter().map(|piece| piece.a.apply(x)).collect();

    // Maximize sum_k lam_k vals_k - radius * dual_norm(sum_k lam_k a_k(x))
    // over the simplex, posed as a minimization LP.
    let mut b = ProgramBuilder::new("dual_inner");
    let lams: Vec<usize> =
        (0..k_count).map(|k| b.add_var(format!("lam{k}"), 0.0, 1.0, -vals[k], false)).collect();
    let mass = lams.iter().fold(LinExpr::constant(0.0), |e, &l| e.push(l, 1.0));
    b.add_row(citations::LEMMA_3_2, "simplex", mass, Sense::Eq, 1.0);
    match p {
        NormP::One => {
            // Dual norm is sup: one epigraph variable over +-combinations.
            let t = b.add_var("t", 0.0, f64::INFINITY, radius, false);
            for i in 0..m {
                for sign in [1.0, -1.0] {
                    let mut expr = LinExpr::term(t, -1.0);
                    for (k, a) in a_at_x.iter().enumerate() {
                        expr = expr.push(lams[k], sign * a[i]);
                    }
                    b.add_row(citations::LEMMA_3_2, format!("t{i}"), expr, Sense::Le, 0.0);
                }
            }
        }
        NormP::Inf => {
            // Dual norm is L1: one epigraph variable per coordinate.
            for i in 0..m {
                let t = b.add_var(format!("t{i}"), 0.0, f64::INFINITY, radius, false);
                for sign in [1.0, -1.0] {
                    let mut expr = LinExpr::term(t, -1.0);
                    for (k, a) in a_at_x.iter().enumerate() {
                        expr = expr.push(lams[k], sign * a[i]);
                    }
                    b.add_row(citations::LEMMA_3_2, format!("t{i}s"), expr, Sense::Le, 0.0);
                }
            }
        }
        NormP::Real(_) => unreachable!(),
    }
    let member = b.finish("dual_inner");
    let sol = solve_lp(&member.program, &SolverConfig::default()).map_err(ReformError::Solver)?;
    match sol.status {
        Status::Optimal => Ok(-sol.objective),
        other => Err(ReformError::SolveFailed(format!("dual inner LP: {other:?}"))),
    }
}
