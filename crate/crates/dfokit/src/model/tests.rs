use proptest::prelude::*;

use super::*;

pub fn ball_problem(
    pieces: Vec<Piece>,
    mode: RecourseMode,
    center: Vec<f64>,
    radius: f64,
    norm_p: NormP,
    lower: Vec<f64>,
    upper: Vec<f64>,
) -> DfoProblem {
    DfoProblem {
        decisions: DecisionSet::box_only(lower, upper),
        recourse: Recourse::Piecewise(PiecewiseAffineRecourse {
            pieces,
            mode,
            block_structure: None,
        }),
        ambiguity: AmbiguitySet::SupportBall { center, radius, norm_p },
        hurwicz_lambda: None,
    }
}

/// xi * x piece in one decision and one uncertainty dimension, offset `b`.
fn scalar_piece(b: f64) -> Piece {
    Piece {
        a: AffineMap::identity(1),
        b: AffineMap { matrix: vec![vec![0.0]], offset: vec![b] },
    }
}

#[test]
fn validate_accepts_simplex_decision_set() {
    let problem = DfoProblem {
        decisions: DecisionSet {
            ineq_matrix: vec![vec![1.0, 1.0]],
            ineq_rhs: vec![1.0],
            lower: vec![0.0, 0.0],
            upper: vec![1.0, 1.0],
        },
        recourse: Recourse::Piecewise(PiecewiseAffineRecourse {
            pieces: vec![Piece {
                a: AffineMap::identity(2),
                b: AffineMap { matrix: vec![vec![0.0, 0.0]], offset: vec![0.0] },
            }],
            mode: RecourseMode::ConcaveMin,
            block_structure: None,
        }),
        ambiguity: AmbiguitySet::SupportBall {
            center: vec![0.0, 0.0],
            radius: 1.0,
            norm_p: NormP::One,
        },
        hurwicz_lambda: None,
    };
    let report = validate(&problem);
    assert!(report.is_ok(), "unexpected violations: {report}");
}

#[test]
fn validate_flags_inverted_bounds() {
    let problem = ball_problem(
        vec![scalar_piece(0.0)],
        RecourseMode::ConcaveMin,
        vec![0.0],
        1.0,
        NormP::One,
        vec![1.0],
        vec![0.0],
    );
    let report = validate(&problem);
    assert!(report.violations.iter().any(|v| v.contains("l <= u fails")));
}

#[test]
fn validate_flags_empty_weight_polytope() {
    // e'p = 1 contradicts p1 + p2 + p3 <= 0.5.
    let problem = DfoProblem {
        decisions: DecisionSet::box_only(vec![0.0], vec![1.0]),
        recourse: Recourse::Piecewise(PiecewiseAffineRecourse {
            pieces: vec![scalar_piece(0.0)],
            mode: RecourseMode::ConvexMax,
            block_structure: None,
        }),
        ambiguity: AmbiguitySet::FinitePolyhedral {
            scenarios: vec![vec![0.0], vec![1.0], vec![2.0]],
            d_matrix: vec![vec![1.0, 1.0, 1.0]],
            d_rhs: vec![0.5],
        },
        hurwicz_lambda: None,
    };
    let report = validate(&problem);
    assert!(
        report.violations.iter().any(|v| v.contains("ambiguity polytope empty")),
        "got: {report}"
    );
}

#[test]
fn recourse_min_and_max_of_two_pieces() {
    let problem = ball_problem(
        vec![scalar_piece(0.0), scalar_piece(1.0)],
        RecourseMode::ConcaveMin,
        vec![0.0],
        1.0,
        NormP::One,
        vec![0.0],
        vec![2.0],
    );
    assert_eq!(evaluate_recourse(&problem, &[1.0], &[2.0]).unwrap(), 2.0);

    let mut max_problem = problem;
    if let Recourse::Piecewise(pw) = &mut max_problem.recourse {
        pw.mode = RecourseMode::ConvexMax;
    }
    assert_eq!(evaluate_recourse(&max_problem, &[1.0], &[2.0]).unwrap(), 3.0);
}

/// 1-facility, 1-customer transportation recourse: ship what demand asks,
/// hold the rest.
#[test]
fn lp_recourse_ships_then_holds() {
    // y: shipped, u: outsourced, v: held.
    let lp = LpRecourse {
        obj: vec![1.0, 10.0, 1.0],
        recourse_matrix: vec![vec![1.0, 0.0, 1.0], vec![1.0, 1.0, 0.0]],
        tech_x: vec![vec![1.0], vec![0.0]],
        tech_xi: vec![vec![0.0], vec![1.0]],
        rhs_const: vec![0.0, 0.0],
        senses: vec![Sense::Eq, Sense::Ge],
        y_lower: vec![0.0, 0.0, 0.0],
    };
    let cost = lp.evaluate(&[5.0], &[3.0]).unwrap();
    assert!((cost - 5.0).abs() < 1e-8, "expected 3*1 + 2*1 = 5, got {cost}");
}

#[test]
fn propagate_bounds_matches_hand_values() {
    let map = AffineMap { matrix: vec![vec![1.0, -1.0]], offset: vec![0.0] };
    let (l, u) = propagate_bounds(&map, &[0.0, 0.0], &[1.0, 1.0]);
    assert_eq!((l[0], u[0]), (-1.0, 1.0));

    let map = AffineMap { matrix: vec![vec![2.0]], offset: vec![3.0] };
    let (l, u) = propagate_bounds(&map, &[0.0], &[1.0]);
    assert_eq!((l[0], u[0]), (3.0, 5.0));

    let map = AffineMap {
        matrix: vec![vec![1.0, 1.0], vec![-1.0, 1.0]],
        offset: vec![0.0, 1.0],
    };
    // Second row is -x1 + x2 + 1 over [-1,1] x [0,2]: range [0, 4], with 0
    // attained at (1, 0) and 4 at (-1, 2).
    let (l, u) = propagate_bounds(&map, &[-1.0, 0.0], &[1.0, 2.0]);
    assert_eq!(l, vec![-1.0, 0.0]);
    assert_eq!(u, vec![3.0, 4.0]);
}

#[test]
fn propagate_bounds_tight_on_box_vertices() {
    let map = AffineMap {
        matrix: vec![vec![1.5, -2.0, 0.25], vec![0.0, 3.0, -1.0]],
        offset: vec![0.5, -2.0],
    };
    let l = vec![-1.0, 0.5, -2.0];
    let u = vec![2.0, 1.5, 0.0];
    let (lhat, uhat) = propagate_bounds(&map, &l, &u);
    let mut seen_lo = vec![false; 2];
    let mut seen_hi = vec![false; 2];
    for mask in 0..8 {
        let x: Vec<f64> =
            (0..3).map(|j| if (mask >> j) & 1 == 1 { u[j] } else { l[j] }).collect();
        let y = map.apply(&x);
        for i in 0..2 {
            if (y[i] - lhat[i]).abs() < 1e-12 {
                seen_lo[i] = true;
            }
            if (y[i] - uhat[i]).abs() < 1e-12 {
                seen_hi[i] = true;
            }
        }
    }
    assert!(seen_lo.iter().all(|&b| b) && seen_hi.iter().all(|&b| b));
}

proptest! {
    #[test]
    fn propagate_bounds_sound(
        entries in proptest::collection::vec(-5.0f64..5.0, 6),
        offs in proptest::collection::vec(-2.0f64..2.0, 2),
        lo in proptest::collection::vec(-3.0f64..0.0, 3),
        width in proptest::collection::vec(0.0f64..4.0, 3),
        frac in proptest::collection::vec(0.0f64..1.0, 3),
    ) {
        let map = AffineMap {
            matrix: vec![entries[..3].to_vec(), entries[3..].to_vec()],
            offset: offs.clone(),
        };
        let hi: Vec<f64> = lo.iter().zip(&width).map(|(l, w)| l + w).collect();
        let x: Vec<f64> = (0..3).map(|j| lo[j] + frac[j] * (hi[j] - lo[j])).collect();
        let (lhat, uhat) = propagate_bounds(&map, &lo, &hi);
        let y = map.apply(&x);
        for i in 0..2 {
            prop_assert!(y[i] >= lhat[i] - 1e-9 && y[i] <= uhat[i] + 1e-9);
        }
    }

    #[test]
    fn concave_value_never_exceeds_convex_value(
        coeffs in proptest::collection::vec(-3.0f64..3.0, 4),
        x in -2.0f64..2.0,
        xi in -2.0f64..2.0,
    ) {
        let pieces: Vec<Piece> = (0..2)
            .map(|k| Piece {
                a: AffineMap { matrix: vec![vec![coeffs[2 * k]]], offset: vec![0.0] },
                b: AffineMap { matrix: vec![vec![0.0]], offset: vec![coeffs[2 * k + 1]] },
            })
            .collect();
        let mk = |mode| PiecewiseAffineRecourse { pieces: pieces.clone(), mode, block_structure: None };
        let lo = mk(RecourseMode::ConcaveMin).evaluate(&[x], &[xi]);
        let hi = mk(RecourseMode::ConvexMax).evaluate(&[x], &[xi]);
        prop_assert!(lo <= hi + 1e-12);

        let single = PiecewiseAffineRecourse {
            pieces: pieces[..1].to_vec(),
            mode: RecourseMode::ConcaveMin,
            block_structure: None,
        };
        let single_max = PiecewiseAffineRecourse {
            pieces: pieces[..1].to_vec(),
            mode: RecourseMode::ConvexMax,
            block_structure: None,
        };
        prop_assert_eq!(single.evaluate(&[x], &[xi]), single_max.evaluate(&[x], &[xi]));
    }
}
