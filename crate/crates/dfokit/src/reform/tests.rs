use super::*;
use crate::milp::SolverConfig;
use crate::model::{
    AffineMap, DecisionSet, Piece, PiecewiseAffineRecourse, RecourseMode,
};
use crate::oracle::{check_midpoint_certificate, oracle_value};

fn cfg() -> SolverConfig {
    SolverConfig::default()
}

fn piece(a_matrix: Vec<Vec<f64>>, a_offset: Vec<f64>, b_coeffs: Vec<f64>, b_off: f64) -> Piece {
    Piece {
        a: AffineMap { matrix: a_matrix, offset: a_offset },
        b: AffineMap { matrix: vec![b_coeffs], offset: vec![b_off] },
    }
}

fn ball_problem(
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

fn solve_value(compiled: &CompiledProgram) -> f64 {
    solve_compiled(compiled, &cfg()).unwrap().value
}

#[test]
fn classify_concave_l1_is_tractable() {
    let problem = ball_problem(
        vec![piece(vec![vec![1.0]], vec![0.0], vec![0.0], 0.0)],
        RecourseMode::ConcaveMin,
        vec![0.0],
        1.0,
        NormP::One,
        vec![0.0],
        vec![1.0],
    );
    let v = classify(&problem);
    assert_eq!(v.status, VerdictStatus::Tractable);
    assert_eq!(v.citation, citations::THM_3_1_II);
}

#[test]
fn classify_concave_l2_nonconstant_refused() {
    let problem = ball_problem(
        vec![piece(
            vec![vec![1.0, 0.0], vec![0.0, 1.0]],
            vec![0.0, 0.0],
            vec![0.0, 0.0],
            0.0,
        )],
        RecourseMode::ConcaveMin,
        vec![0.0, 0.0],
        1.0,
        NormP::Real(2.0),
        vec![0.0, 0.0],
        vec![1.0, 1.0],
    );
    let v = classify(&problem);
    assert_eq!(v.status, VerdictStatus::NotMicpr);
    assert_eq!(v.citation, citations::THM_3_3_CASE_2);

    // The compiler refuses with the same citation and a checkable witness.
    match compile_concave_sdfo(&problem).unwrap_err() {
        ReformError::NotRepresentable { verdict, witness } => {
            assert_eq!(verdict.citation, citations::THM_3_3_CASE_2);
            assert!(check_midpoint_certificate(witness.membership(), &witness.points));
        }
        other => panic!("expected a refusal, got {other:?}"),
    }
}

#[test]
fn classify_l2_weight_ball_small_radius() {
    let problem = DfoProblem {
        decisions: DecisionSet::box_only(vec![0.0], vec![1.0]),
        recourse: Recourse::Lp(crate::model::LpRecourse {
            obj: vec![1.0],
            recourse_matrix: vec![vec![1.0]],
            tech_x: vec![vec![0.0]],
            tech_xi: vec![vec![1.0]],
            rhs_const: vec![0.0],
            senses: vec![Sense::Ge],
            y_lower: vec![0.0],
        }),
        ambiguity: AmbiguitySet::L2Ball {
            scenarios: vec![vec![1.0], vec![2.0], vec![3.0], vec![4.0]],
            p0: vec![0.25; 4],
            radius: 0.2,
        },
        hurwicz_lambda: None,
    };
    // 0.2 <= sqrt(1/12) ~ 0.2887.
    let v = classify(&problem);
    assert_eq!(v.status, VerdictStatus::NotMicpr);
    assert_eq!(v.citation, citations::PROP_4_8);

    match refuse_l2(&problem).unwrap_err() {
        ReformError::NotRepresentable { witness, .. } => {
            assert!(check_midpoint_certificate(witness.membership(), &witness.points));
        }
        other => panic!("expected refusal, got {other:?}"),
    }
}

#[test]
fn concave_sdfo_l1_single_piece() {
    // K=1, m=1, X=[0,1], a(x)=x, b=0, center 0, radius 1, p=1 -> -1 at x=1.
    let problem = ball_problem(
        vec![piece(vec![vec![1.0]], vec![0.0], vec![0.0], 0.0)],
        RecourseMode::ConcaveMin,
        vec![0.0],
        1.0,
        NormP::One,
        vec![0.0],
        vec![1.0],
    );
    let compiled = compile_concave_sdfo(&problem).unwrap();
    assert_eq!(compiled.member_count(), 2); // 2mK = 2
    let out = solve_compiled(&compiled, &cfg()).unwrap();
    assert!((out.value + 1.0).abs() < 1e-8);
    // The winning branch is the one subtracting the a-coordinate.
    assert_eq!(out.argmin, 1);
}

#[test]
fn concave_sdfo_radius_zero() {
    // center 1, radius 0, a(x)=x, X=[0,1]: min x*1 = 0.
    let problem = ball_problem(
        vec![piece(vec![vec![1.0]], vec![0.0], vec![0.0], 0.0)],
        RecourseMode::ConcaveMin,
        vec![1.0],
        0.0,
        NormP::Real(3.0),
        vec![0.0],
        vec![1.0],
    );
    let compiled = compile_concave_sdfo(&problem).unwrap();
    assert!((solve_value(&compiled) - 0.0).abs() < 1e-9);
}

#[test]
fn concave_sdfo_sup_ball_two_dims() {
    // K=1, m=2, a(x)=x, center 0, radius 1, p=inf, X=[0,1]^2 -> -2.
    let problem = ball_problem(
        vec![piece(
            vec![vec![1.0, 0.0], vec![0.0, 1.0]],
            vec![0.0, 0.0],
            vec![0.0, 0.0],
            0.0,
        )],
        RecourseMode::ConcaveMin,
        vec![0.0, 0.0],
        1.0,
        NormP::Inf,
        vec![0.0, 0.0],
        vec![1.0, 1.0],
    );
    let compiled = compile_concave_sdfo(&problem).unwrap();
    let value = solve_value(&compiled);
    assert!((value + 2.0).abs() < 1e-8, "value {value}");
}

#[test]
fn convex_sdfo_constant_maps() {
    // K=2 constant maps +-1, b=0, center 0, radius 1 -> 0.
    let problem = ball_problem(
        vec![
            piece(vec![vec![0.0]], vec![1.0], vec![0.0], 0.0),
            piece(vec![vec![0.0]], vec![-1.0], vec![0.0], 0.0),
        ],
        RecourseMode::ConvexMax,
        vec![0.0],
        1.0,
        NormP::One,
        vec![-1.0],
        vec![1.0],
    );
    let compiled = compile_convex_sdfo(&problem).unwrap();
    assert_eq!(compiled.citation(), citations::THM_3_4_I);
    assert!(solve_value(&compiled).abs() < 1e-8);
}

#[test]
fn convex_sdfo_shared_maps_l1() {
    // Shared a(x)=x (m=1), b1=0, b2(x)=x, center 0, radius 1, p=1,
    // X=[0,1]: overall 0 (x=0 kills both the values and the norm reach).
    let problem = ball_problem(
        vec![
            piece(vec![vec![1.0]], vec![0.0], vec![0.0], 0.0),
            piece(vec![vec![1.0]], vec![0.0], vec![1.0], 0.0),
        ],
        RecourseMode::ConvexMax,
        vec![0.0],
        1.0,
        NormP::One,
        vec![0.0],
        vec![1.0],
    );
    let compiled = compile_convex_sdfo(&problem).unwrap();
    assert_eq!(compiled.citation(), citations::THM_3_4_II);
    assert_eq!(compiled.member_count(), 2);
    let value = solve_value(&compiled);
    let reference = oracle_value(&problem).unwrap();
    assert!(reference.exact);
    assert!((value - reference.value).abs() < 1e-7, "{value} vs {}", reference.value);
}

#[test]
fn convex_sdfo_blocks_sup_ball() {
    // Two 1-dim blocks abar_k(x) = x_k, b=0, center 0, radius 1, p=inf,
    // X=[0,1]^2 -> -1.
    let p1 = piece(vec![vec![1.0, 0.0], vec![0.0, 0.0]], vec![0.0, 0.0], vec![0.0, 0.0], 0.0);
    let p2 = piece(vec![vec![0.0, 0.0], vec![0.0, 1.0]], vec![0.0, 0.0], vec![0.0, 0.0], 0.0);
    let mut problem = ball_problem(
        vec![p1, p2],
        RecourseMode::ConvexMax,
        vec![0.0, 0.0],
        1.0,
        NormP::Inf,
        vec![0.0, 0.0],
        vec![1.0, 1.0],
    );
    if let Recourse::Piecewise(pw) = &mut problem.recourse {
        pw.block_structure = Some(vec![vec![0], vec![1]]);
    }
    let compiled = compile_convex_sdfo(&problem).unwrap();
    assert_eq!(compiled.citation(), citations::COR_3_6_II);
    let value = solve_value(&compiled);
    assert!((value + 1.0).abs() < 1e-8, "value {value}");
}

#[test]
fn convex_sdfo_block_dual_lp() {
    // Constant block maps: abar_1 = (1), abar_2 = (-1) over disjoint
    // coordinates, b_k(x) = x_k, p=1, radius 0.5.
    let p1 = piece(
        vec![vec![0.0, 0.0], vec![0.0, 0.0]],
        vec![1.0, 0.0],
        vec![1.0, 0.0],
        0.0,
    );
    let p2 = piece(
        vec![vec![0.0, 0.0], vec![0.0, 0.0]],
        vec![0.0, -1.0],
        vec![0.0, 1.0],
        0.0,
    );
    let mut problem = ball_problem(
        vec![p1, p2],
        RecourseMode::ConvexMax,
        vec![0.5, -0.25],
        0.5,
        NormP::One,
        vec![0.0, 0.0],
        vec![1.0, 1.0],
    );
    if let Recourse::Piecewise(pw) = &mut problem.recourse {
        pw.block_structure = Some(vec![vec![0], vec![1]]);
    }
    let compiled = compile_convex_sdfo(&problem).unwrap();
    assert_eq!(compiled.citation(), citations::THM_3_4_III);
    let value = solve_value(&compiled);
    let reference = oracle_value(&problem).unwrap();
    assert!(reference.exact);
    assert!((value - reference.value).abs() < 1e-7, "{value} vs {}", reference.value);
}

#[test]
fn convex_sdfo_unstructured_l1_unsupported() {
    let problem = ball_problem(
        vec![
            piece(vec![vec![1.0, 0.0], vec![0.0, 1.0]], vec![0.0, 0.0], vec![0.0, 0.0], 0.0),
            piece(vec![vec![0.0, 1.0], vec![1.0, 0.0]], vec![0.0, 0.0], vec![0.0, 0.0], 1.0),
        ],
        RecourseMode::ConvexMax,
        vec![0.0, 0.0],
        1.0,
        NormP::One,
        vec![0.0, 0.0],
        vec![1.0, 1.0],
    );
    match compile_convex_sdfo(&problem).unwrap_err() {
        ReformError::Unsupported { citation, .. } => {
            assert_eq!(citation, citations::PROP_3_4);
        }
        other => panic!("expected Unsupported, got {other:?}"),
    }
}

#[test]
fn dual_inner_value_examples() {
    // Single piece: value is center'a + b - radius * dualnorm(a).
    let problem = ball_problem(
        vec![piece(
            vec![vec![1.0, 0.0], vec![0.0, 1.0]],
            vec![0.0, 0.0],
            vec![0.0, 0.0],
            0.0,
        )],
        RecourseMode::ConvexMax,
        vec![0.0, 0.0],
        1.0,
        NormP::One,
        vec![-1.0, -1.0],
        vec![1.0, 1.0],
    );
    let v = dual_inner_value_convex(&problem, &[1.0, 0.0]).unwrap();
    assert!((v + 1.0).abs() < 1e-8, "value {v}");

    // K=2 constant +-1: the balanced weights kill the norm term.
    let problem2 = ball_problem(
        vec![
            piece(vec![vec![0.0]], vec![1.0], vec![0.0], 0.0),
            piece(vec![vec![0.0]], vec![-1.0], vec![0.0], 0.0),
        ],
        RecourseMode::ConvexMax,
        vec![0.0],
        1.0,
        NormP::One,
        vec![-1.0],
        vec![1.0],
    );
    let v = dual_inner_value_convex(&problem2, &[0.5]).unwrap();
    assert!(v.abs() < 1e-8, "value {v}");

    // Radius 0: plain maximum of the piece values.
    let mut problem3 = problem2.clone();
    if let AmbiguitySet::SupportBall { radius, .. } = &mut problem3.ambiguity {
        *radius = 0.0;
    }
    let v = dual_inner_value_convex(&problem3, &[0.5]).unwrap();
    assert!(v.abs() < 1e-9);
}

fn scenario_reader_problem(values: &[f64], ambiguity: AmbiguitySet) -> DfoProblem {
    let _ = values;
    DfoProblem {
        decisions: DecisionSet::box_only(vec![0.0], vec![1.0]),
        recourse: Recourse::Piecewise(PiecewiseAffineRecourse {
            pieces: vec![piece(vec![vec![0.0]], vec![1.0], vec![0.0], 0.0)],
            mode: RecourseMode::ConvexMax,
            block_structure: None,
        }),
        ambiguity,
        hurwicz_lambda: None,
    }
}

#[test]
fn finite_enumeration_capped_mass() {
    let problem = scenario_reader_problem(
        &[1.0, 2.0, 3.0],
        AmbiguitySet::FinitePolyhedral {
            scenarios: vec![vec![1.0], vec![2.0], vec![3.0]],
            d_matrix: vec![vec![1.0, 1.0, 0.0]],
            d_rhs: vec![0.8],
        },
    );
    let compiled = compile_finite_enumeration(&problem).unwrap();
    assert_eq!(compiled.member_count(), 3);
    let value = solve_value(&compiled);
    assert!((value - 1.4).abs() < 1e-8, "value {value}");
}

#[test]
fn finite_kkt_matches_enumeration() {
    let problem = scenario_reader_problem(
        &[1.0, 2.0, 3.0],
        AmbiguitySet::FinitePolyhedral {
            scenarios: vec![vec![1.0], vec![2.0], vec![3.0]],
            d_matrix: vec![vec![1.0, 1.0, 0.0]],
            d_rhs: vec![0.8],
        },
    );
    let kkt = compile_finite_kkt(&problem).unwrap();
    let value = solve_value(&kkt);
    assert!((value - 1.4).abs() < 1e-7, "value {value}");
    // Ledger carries the d_j bound for the sign-restricted recipe.
    let ledger = kkt.ledger();
    let m12 = ledger.entries.iter().find(|e| e.name == "M_0_2").unwrap();
    assert!((m12.value - 0.8).abs() < 1e-12);
    assert_eq!(m12.citation, citations::COR_4_5);
}

#[test]
fn finite_kkt_simplex_only_picks_min() {
    let problem = scenario_reader_problem(
        &[1.0, 2.0, 3.0],
        AmbiguitySet::FinitePolyhedral {
            scenarios: vec![vec![1.0], vec![2.0], vec![3.0]],
            d_matrix: vec![],
            d_rhs: vec![],
        },
    );
    let kkt = compile_finite_kkt(&problem).unwrap();
    let value = solve_value(&kkt);
    assert!((value - 1.0).abs() < 1e-7, "value {value}");
}

fn uniform_interval(values: &[f64], ubar: i64, q: u64) -> DfoProblem {
    let n = values.len();
    scenario_reader_problem(
        values,
        AmbiguitySet::IntervalPolyhedral {
            scenarios: values.iter().map(|&v| vec![v]).collect(),
            p0: vec![1.0 / n as f64; n],
            lbar: vec![-((q / n as u64) as i64); n],
            ubar: vec![ubar; n],
            q,
        },
    )
}

#[test]
fn interval_kappa_matches_hand_value() {
    // N=4, u=0.05: kappa = 4/1.2 = 10/3.
    let (kappa, floor, residual) = interval_kappa(4, 1, 20);
    assert!((kappa - 10.0 / 3.0).abs() < 1e-12);
    assert_eq!(floor, 3);
    assert!((residual - 0.1).abs() < 1e-12);
}

#[test]
fn interval_uniform_route_matches_greedy() {
    // N=4, u=0.05 (ubar=1, q=20), values (1,2,3,4) -> 2.2.
    let problem = uniform_interval(&[1.0, 2.0, 3.0, 4.0], 1, 20);
    let compiled = compile_interval_polyhedral(&problem).unwrap();
    assert_eq!(compiled.citation(), citations::COR_4_7);
    assert_eq!(compiled.member_count(), 4);
    let value = solve_value(&compiled);
    assert!((value - 2.2).abs() < 1e-8, "value {value}");
}

#[test]
fn interval_degenerate_is_saa() {
    // lbar = ubar = 0: the singleton nominal weights.
    let n = 3;
    let problem = scenario_reader_problem(
        &[1.0, 2.0, 3.0],
        AmbiguitySet::IntervalPolyhedral {
            scenarios: vec![vec![1.0], vec![2.0], vec![3.0]],
            p0: vec![1.0 / n as f64; n],
            lbar: vec![0; n],
            ubar: vec![0; n],
            q: 3,
        },
    );
    let compiled = compile_interval_polyhedral(&problem).unwrap();
    assert_eq!(compiled.citation(), citations::COR_4_6);
    let value = solve_value(&compiled);
    assert!((value - 2.0).abs() < 1e-8, "value {value}");
}

#[test]
fn hurwicz_collapses_and_blends() {
    let ambiguity = AmbiguitySet::FinitePolyhedral {
        scenarios: vec![vec![1.0], vec![2.0], vec![3.0]],
        d_matrix: vec![],
        d_rhs: vec![],
    };
    let mut problem = scenario_reader_problem(&[1.0, 2.0, 3.0], ambiguity);

    problem.hurwicz_lambda = Some(1.0);
    let dfo_val = solve_value(&compile_hurwicz(&problem).unwrap());
    assert!((dfo_val - 1.0).abs() < 1e-7);

    problem.hurwicz_lambda = Some(0.0);
    let dro_val = solve_value(&compile_hurwicz(&problem).unwrap());
    assert!((dro_val - 3.0).abs() < 1e-7);

    problem.hurwicz_lambda = Some(0.5);
    let mid = solve_value(&compile_hurwicz(&problem).unwrap());
    assert!((mid - 2.0).abs() < 1e-7, "mid {mid}");
}

#[test]
fn wasserstein_concave_radius_zero() {
    // Constant pieces xi and -xi, samples +-1, radius 0 -> -1.
    let problem = DfoProblem {
        decisions: DecisionSet::box_only(vec![0.0], vec![1.0]),
        recourse: Recourse::Piecewise(PiecewiseAffineRecourse {
            pieces: vec![
                piece(vec![vec![0.0]], vec![1.0], vec![0.0], 0.0),
                piece(vec![vec![0.0]], vec![-1.0], vec![0.0], 0.0),
            ],
            mode: RecourseMode::ConcaveMin,
            block_structure: None,
        }),
        ambiguity: AmbiguitySet::WassersteinInf {
            samples: vec![vec![1.0], vec![-1.0]],
            radius: 0.0,
            norm_p: NormP::One,
        },
        hurwicz_lambda: None,
    };
    let compiled = compile_wasserstein(&problem).unwrap();
    let value = solve_value(&compiled);
    assert!((value + 1.0).abs() < 1e-8, "value {value}");
}

#[test]
fn wasserstein_single_sample_collapses_to_ball() {
    let pieces = vec![
        piece(vec![vec![1.0]], vec![0.0], vec![0.0], 0.0),
        piece(vec![vec![0.5]], vec![0.25], vec![-1.0], 0.5),
    ];
    let ball = ball_problem(
        pieces.clone(),
        RecourseMode::ConcaveMin,
        vec![0.5],
        0.75,
        NormP::Inf,
        vec![0.0],
        vec![1.0],
    );
    let transport = DfoProblem {
        decisions: ball.decisions.clone(),
        recourse: ball.recourse.clone(),
        ambiguity: AmbiguitySet::WassersteinInf {
            samples: vec![vec![0.5]],
            radius: 0.75,
            norm_p: NormP::Inf,
        },
        hurwicz_lambda: None,
    };
    let v_ball = solve_value(&compile_concave_sdfo(&ball).unwrap());
    let v_transport = solve_value(&compile_wasserstein(&transport).unwrap());
    assert!((v_ball - v_transport).abs() < 1e-8, "{v_ball} vs {v_transport}");
}

#[test]
fn wasserstein_binary_feasibility_fixture() {
    // Radius 0, pieces +-x_k e_k with unit offsets, samples e_i, free box:
    // the value is 0 exactly when a feasible sign vector exists.
    let inst = crate::oracle::gen_hardness_instance(crate::oracle::HardnessKind::BinaryFeasibility {
        d_matrix: vec![],
        d_rhs: vec![],
        n: 2,
    })
    .unwrap();
    let compiled = compile_wasserstein(&inst.problem).unwrap();
    let value = solve_value(&compiled);
    assert!(value.abs() < 1e-8, "value {value}");
}

#[test]
fn wasserstein_concave_sup_ball_against_oracle() {
    let problem = DfoProblem {
        decisions: DecisionSet::box_only(vec![0.0, -0.5], vec![1.0, 0.5]),
        recourse: Recourse::Piecewise(PiecewiseAffineRecourse {
            pieces: vec![
                piece(
                    vec![vec![1.0, 0.0], vec![0.5, -1.0]],
                    vec![0.0, 0.25],
                    vec![0.5, 0.0],
                    0.0,
                ),
                piece(
                    vec![vec![0.0, 1.0], vec![-0.5, 0.0]],
                    vec![0.5, 0.0],
                    vec![0.0, -0.5],
                    0.25,
                ),
            ],
            mode: RecourseMode::ConcaveMin,
            block_structure: None,
        }),
        ambiguity: AmbiguitySet::WassersteinInf {
            samples: vec![vec![1.0, 0.0], vec![0.0, -1.0], vec![0.5, 0.5]],
            radius: 0.6,
            norm_p: NormP::Inf,
        },
        hurwicz_lambda: None,
    };
    let compiled = compile_wasserstein(&problem).unwrap();
    let value = solve_value(&compiled);
    let reference = oracle_value(&problem).unwrap();
    assert!(reference.exact);
    assert!(
        (value - reference.value).abs() < 1e-6,
        "compiled {value} vs oracle {}",
        reference.value
    );
}

#[test]
fn wasserstein_concave_l1_ball_against_oracle() {
    let problem = DfoProblem {
        decisions: DecisionSet::box_only(vec![-1.0], vec![1.0]),
        recourse: Recourse::Piecewise(PiecewiseAffineRecourse {
            pieces: vec![
                piece(vec![vec![1.0], vec![-0.5]], vec![0.0, 0.5], vec![0.25], 0.0),
                piece(vec![vec![-1.0], vec![0.0]], vec![0.25, 1.0], vec![0.0], 0.5),
            ],
            mode: RecourseMode::ConcaveMin,
            block_structure: None,
        }),
        ambiguity: AmbiguitySet::WassersteinInf {
            samples: vec![vec![1.0, -1.0], vec![0.0, 0.5]],
            radius: 0.4,
            norm_p: NormP::One,
        },
        hurwicz_lambda: None,
    };
    let compiled = compile_wasserstein(&problem).unwrap();
    let value = solve_value(&compiled);
    let reference = oracle_value(&problem).unwrap();
    assert!(reference.exact);
    assert!(
        (value - reference.value).abs() < 1e-6,
        "compiled {value} vs oracle {}",
        reference.value
    );
}

#[test]
fn provenance_covers_every_row() {
    let problem = uniform_interval(&[1.0, 2.0, 3.0, 4.0], 1, 20);
    let compiled = compile_interval_polyhedral(&problem).unwrap();
    for member in compiled.members() {
        let rows = member.program.rows.len();
        let covered: usize =
            member.provenance.iter().map(|e| e.last_row - e.first_row + 1).sum();
        assert_eq!(covered, rows, "member {}", member.label);
    }
}
