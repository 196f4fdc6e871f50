//! Generators for the reduction instances behind the hardness results.
//!
//! Each generator emits a complete problem whose optimal value answers the
//! encoded decision problem at a known threshold.

use crate::milp::{solve_lp, LinearProgram, Sense, SolverConfig, Status};
use crate::model::{
    AffineMap, AmbiguitySet, DecisionSet, DfoProblem, NormP, Piece, PiecewiseAffineRecourse,
    Recourse, RecourseMode,
};

use super::OracleError;

#[derive(Debug, Clone)]
pub enum HardnessKind {
    /// Partition nonnegative integer weights into two equal-sum halves.
    SetPartition { weights: Vec<u64> },
    /// Maximize the dual norm over `{x : D x <= d}` (bounded).
    NormMax { d_matrix: Vec<Vec<f64>>, d_rhs: Vec<f64>, norm_p: NormP },
    /// Feasibility of `{x in {-1,1}^n : D x <= d}`.
    BinaryFeasibility { d_matrix: Vec<Vec<f64>>, d_rhs: Vec<f64>, n: usize },
}

#[derive(Debug, Clone)]
pub struct HardnessInstance {
    pub problem: DfoProblem,
    /// Decision threshold: the yes-instances are exactly those whose optimal
    /// value reaches it.
    pub threshold: Option<f64>,
    pub description: String,
}

/// Identity-map single piece over `dim` coordinates with zero offset.
fn identity_piece(dim: usize) -> Piece {
    Piece {
        a: AffineMap::identity(dim),
        b: AffineMap { matrix: vec![vec![0.0; dim]], offset: vec![0.0] },
    }
}

pub fn gen_hardness_instance(kind: HardnessKind) -> Result<HardnessInstance, OracleError> {
    match kind {
        HardnessKind::SetPartition { weights } => {
            let n = weights.len();
            if n == 0 {
                return Err(OracleError::Unsupported("empty weight vector".into()));
            }
            // Decisions y in [-1,1]^n with w'y = 0; favorable value is
            // -||y||_1, which reaches -n exactly when a partition exists.
            let w_row: Vec<f64> = weights.iter().map(|&w| w as f64).collect();
            let neg_row: Vec<f64> = w_row.iter().map(|w| -w).collect();
            let decisions = DecisionSet {
                ineq_matrix: vec![w_row, neg_row],
                ineq_rhs: vec![0.0, 0.0],
                lower: vec![-1.0; n],
                upper: vec![1.0; n],
            };
            let problem = DfoProblem {
                decisions,
                recourse: Recourse::Piecewise(PiecewiseAffineRecourse {
                    pieces: vec![identity_piece(n)],
                    mode: RecourseMode::ConcaveMin,
                    block_structure: None,
                }),
                ambiguity: AmbiguitySet::SupportBall {
                    center: vec![0.0; n],
                    radius: 1.0,
                    norm_p: NormP::Inf,
                },
                hurwicz_lambda: None,
            };
            Ok(HardnessInstance {
                problem,
                threshold: Some(-(n as f64)),
                description: format!("set partition over weights {weights:?}"),
            })
        }
        HardnessKind::NormMax { d_matrix, d_rhs, norm_p } => {
            let n = d_matrix.first().map_or(0, |r| r.len());
            if n == 0 {
                return Err(OracleError::Unsupported("empty polytope description".into()));
            }
            let (lower, upper) = polytope_box(&d_matrix, &d_rhs, n)?;
            let decisions =
                DecisionSet { ineq_matrix: d_matrix.clone(), ineq_rhs: d_rhs.clone(), lower, upper };
            let problem = DfoProblem {
                decisions,
                recourse: Recourse::Piecewise(PiecewiseAffineRecourse {
                    pieces: vec![identity_piece(n)],
                    mode: RecourseMode::ConcaveMin,
                    block_structure: None,
                }),
                ambiguity: AmbiguitySet::SupportBall {
                    center: vec![0.0; n],
                    radius: 1.0,
                    norm_p,
                },
                hurwicz_lambda: None,
            };
            Ok(HardnessInstance {
                problem,
                threshold: None,
                description: format!("norm maximization over a {n}-dim polytope"),
            })
        }
        HardnessKind::BinaryFeasibility { d_matrix, d_rhs, n } => {
            if n == 0 {
                return Err(OracleError::Unsupported("need at least one variable".into()));
            }
            // 2n pieces +-x_k e_k with unit offsets; empirical samples e_i
            // at radius zero make the averaged inner minimum
            // (1/n) sum_i (1 - |x_i|), which hits 0 iff x is a feasible
            // sign vector.
            let mut pieces = Vec::with_capacity(2 * n);
            for sign in [1.0, -1.0] {
                for k in 0..n {
                    let mut matrix = vec![vec![0.0; n]; n];
                    matrix[k][k] = sign;
                    pieces.push(Piece {
                        a: AffineMap { matrix, offset: vec![0.0; n] },
                        b: AffineMap { matrix: vec![vec![0.0; n]], offset: vec![1.0] },
                    });
                }
            }
            let samples: Vec<Vec<f64>> = (0..n)
                .map(|i| (0..n).map(|j| if i == j { 1.0 } else { 0.0 }).collect())
                .collect();
            let decisions = DecisionSet {
                ineq_matrix: d_matrix.clone(),
                ineq_rhs: d_rhs.clone(),
                lower: vec![-1.0; n],
                upper: vec![1.0; n],
            };
            let problem = DfoProblem {
                decisions,
                recourse: Recourse::Piecewise(PiecewiseAffineRecourse {
                    pieces,
                    mode: RecourseMode::ConcaveMin,
                    block_structure: None,
                }),
                ambiguity: AmbiguitySet::WassersteinInf {
                    samples,
                    radius: 0.0,
                    norm_p: NormP::Inf,
                },
                hurwicz_lambda: None,
            };
            Ok(HardnessInstance {
                problem,
                threshold: Some(0.0),
                description: format!("binary feasibility over {n} signs"),
            })
        }
    }
}

/// Componentwise value range of a polytope, via 2n small LPs. Errors when
/// the polytope is unbounded in some direction.
fn polytope_box(
    d_matrix: &[Vec<f64>],
    d_rhs: &[f64],
    n: usize,
) -> Result<(Vec<f64>, Vec<f64>), OracleError> {
    let mut lower = vec![0.0; n];
    let mut upper = vec![0.0; n];
    for j in 0..n {
        for (sign, slot) in [(1.0, false), (-1.0, true)] {
            let mut lp = LinearProgram::new("box");
            let vars: Vec<usize> = (0..n)
                .map(|k| {
                    lp.add_var(
                        format!("x{k}"),
                        f64::NEG_INFINITY,
                        f64::INFINITY,
                        if k == j { sign } else { 0.0 },
                        false,
                    )
                })
                .collect();
            for (row, &rhs) in d_matrix.iter().zip(d_rhs) {
                let coeffs: Vec<(usize, f64)> = row
                    .iter()
                    .enumerate()
                    .filter(|&(_, &c)| c != 0.0)
                    .map(|(k, &c)| (vars[k], c))
                    .collect();
                lp.add_row("r", coeffs, Sense::Le, rhs);
            }
            let sol = solve_lp(&lp, &SolverConfig::default())
                .map_err(|e| OracleError::Numerical(e.to_string()))?;
            match sol.status {
                Status::Optimal => {
                    if slot {
                        upper[j] = -sol.objective;
                    } else {
                        lower[j] = sol.objective;
                    }
                }
                Status::Unbounded => {
                    return Err(OracleError::Unsupported(format!(
                        "polytope unbounded along coordinate {j}"
                    )))
                }
                _ => return Err(OracleError::Infeasible("empty polytope".into())),
            }
        }
    }
    Ok((lower, upper))
}
