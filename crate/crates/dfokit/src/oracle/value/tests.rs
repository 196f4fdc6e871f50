use super::*;
use crate::model::{AffineMap, DecisionSet};
use crate::oracle::{check_midpoint_certificate, gen_hardness_instance, HardnessKind};

fn piece(a_matrix: Vec<Vec<f64>>, a_offset: Vec<f64>, b_coeffs: Vec<f64>, b_off: f64) -> Piece {
    Piece {
        a: AffineMap { matrix: a_matrix, offset: a_offset },
        b: AffineMap { matrix: vec![b_coeffs], offset: vec![b_off] },
    }
}

fn pw(pieces: Vec<Piece>, mode: RecourseMode) -> Recourse {
    Recourse::Piecewise(PiecewiseAffineRecourse { pieces, mode, block_structure: None })
}

/// Scenario value is read straight off a one-dimensional xi.
fn scenario_reader(n: usize) -> Recourse {
    pw(
        vec![piece(vec![vec![0.0; n]], vec![1.0], vec![0.0; n], 0.0)],
        RecourseMode::ConvexMax,
    )
}

#[test]
fn finite_polyhedral_capped_mass() {
    let problem = DfoProblem {
        decisions: DecisionSet::box_only(vec![0.0], vec![1.0]),
        recourse: scenario_reader(1),
        ambiguity: AmbiguitySet::FinitePolyhedral {
            scenarios: vec![vec![1.0], vec![2.0], vec![3.0]],
            d_matrix: vec![vec![1.0, 1.0, 0.0]],
            d_rhs: vec![0.8],
        },
        hurwicz_lambda: None,
    };
    let ov = oracle_value(&problem).unwrap();
    assert!(ov.exact);
    assert!((ov.value - 1.4).abs() < 1e-9, "value {}", ov.value);
}

#[test]
fn finite_polyhedral_full_simplex_picks_minimum() {
    let problem = DfoProblem {
        decisions: DecisionSet::box_only(vec![0.0], vec![1.0]),
        recourse: scenario_reader(1),
        ambiguity: AmbiguitySet::FinitePolyhedral {
            scenarios: vec![vec![1.0], vec![2.0], vec![3.0]],
            d_matrix: vec![],
            d_rhs: vec![],
        },
        hurwicz_lambda: None,
    };
    let ov = oracle_value(&problem).unwrap();
    assert!((ov.value - 1.0).abs() < 1e-9);
}

#[test]
fn sdfo_l1_ball_identity_map() {
    // K=1, m=1, a(x)=x, b=0, center 0, radius 1, p=1, X=[0,1]: value -1.
    let problem = DfoProblem {
        decisions: DecisionSet::box_only(vec![0.0], vec![1.0]),
        recourse: pw(
            vec![piece(vec![vec![1.0]], vec![0.0], vec![0.0], 0.0)],
            RecourseMode::ConcaveMin,
        ),
        ambiguity: AmbiguitySet::SupportBall {
            center: vec![0.0],
            radius: 1.0,
            norm_p: NormP::One,
        },
        hurwicz_lambda: None,
    };
    let ov = oracle_value(&problem).unwrap();
    assert!((ov.value + 1.0).abs() < 1e-9, "value {}", ov.value);
}

#[test]
fn interval_polyhedral_greedy_weights() {
    let problem = DfoProblem {
        decisions: DecisionSet::box_only(vec![0.0], vec![1.0]),
        recourse: scenario_reader(1),
        ambiguity: AmbiguitySet::IntervalPolyhedral {
            scenarios: vec![vec![1.0], vec![2.0], vec![3.0], vec![4.0]],
            p0: vec![0.25; 4],
            lbar: vec![-5; 4],
            ubar: vec![1; 4],
            q: 20,
        },
        hurwicz_lambda: None,
    };
    // l = -1/4, u = 0.05: greedy fill gives 0.3, 0.3, 0.3, 0.1 -> 2.2.
    let ov = oracle_value(&problem).unwrap();
    assert!((ov.value - 2.2).abs() < 1e-9, "value {}", ov.value);
}

#[test]
fn set_partition_yes_and_no_instances() {
    let yes = gen_hardness_instance(HardnessKind::SetPartition { weights: vec![1, 1] }).unwrap();
    let v = oracle_value(&yes.problem).unwrap();
    assert!((v.value - yes.threshold.unwrap()).abs() < 1e-9, "value {}", v.value);

    let no = gen_hardness_instance(HardnessKind::SetPartition { weights: vec![1, 3] }).unwrap();
    let v = oracle_value(&no.problem).unwrap();
    assert!((v.value + 4.0 / 3.0).abs() < 1e-9, "value {}", v.value);
    assert!(v.value > no.threshold.unwrap() + 0.5);
}

#[test]
fn binary_feasibility_unconstrained_hits_zero() {
    let inst = gen_hardness_instance(HardnessKind::BinaryFeasibility {
        d_matrix: vec![],
        d_rhs: vec![],
        n: 2,
    })
    .unwrap();
    let v = oracle_value(&inst.problem).unwrap();
    assert!(v.value.abs() < 1e-9, "value {}", v.value);
}

#[test]
fn wasserstein_radius_zero_averages_minima() {
    // K=2 constant pieces xi and -xi (m=1), samples 1 and -1, radius 0:
    // each sample contributes min(zeta, -zeta) = -1 -> value -1.
    let pieces = vec![
        piece(vec![vec![0.0]], vec![1.0], vec![0.0], 0.0),
        piece(vec![vec![0.0]], vec![-1.0], vec![0.0], 0.0),
    ];
    let problem = DfoProblem {
        decisions: DecisionSet::box_only(vec![0.0], vec![1.0]),
        recourse: pw(pieces, RecourseMode::ConcaveMin),
        ambiguity: AmbiguitySet::WassersteinInf {
            samples: vec![vec![1.0], vec![-1.0]],
            radius: 0.0,
            norm_p: NormP::One,
        },
        hurwicz_lambda: None,
    };
    let ov = oracle_value(&problem).unwrap();
    assert!((ov.value + 1.0).abs() < 1e-9, "value {}", ov.value);
}

#[test]
fn convex_constant_maps_cancel_at_ball_center() {
    // max(xi, -xi) minimized over |xi| <= 1 is 0 at xi = 0.
    let pieces = vec![
        piece(vec![vec![0.0]], vec![1.0], vec![0.0], 0.0),
        piece(vec![vec![0.0]], vec![-1.0], vec![0.0], 0.0),
    ];
    let problem = DfoProblem {
        decisions: DecisionSet::box_only(vec![-1.0], vec![1.0]),
        recourse: pw(pieces, RecourseMode::ConvexMax),
        ambiguity: AmbiguitySet::SupportBall {
            center: vec![0.0],
            radius: 1.0,
            norm_p: NormP::One,
        },
        hurwicz_lambda: None,
    };
    let ov = oracle_value(&problem).unwrap();
    assert!(ov.exact);
    assert!(ov.value.abs() < 1e-9, "value {}", ov.value);
}

#[test]
fn convex_block_structure_sup_ball() {
    // Two 1-dim blocks, abar_k(x) = x_k, b = 0, center 0, radius 1,
    // sup-norm ball: value = min_x max_k(-|x_k|) = -1 on [0,1]^2.
    let p1 = piece(vec![vec![1.0, 0.0], vec![0.0, 0.0]], vec![0.0, 0.0], vec![0.0, 0.0], 0.0);
    let p2 = piece(vec![vec![0.0, 0.0], vec![0.0, 1.0]], vec![0.0, 0.0], vec![0.0, 0.0], 0.0);
    let problem = DfoProblem {
        decisions: DecisionSet::box_only(vec![0.0, 0.0], vec![1.0, 1.0]),
        recourse: Recourse::Piecewise(PiecewiseAffineRecourse {
            pieces: vec![p1, p2],
            mode: RecourseMode::ConvexMax,
            block_structure: Some(vec![vec![0], vec![1]]),
        }),
        ambiguity: AmbiguitySet::SupportBall {
            center: vec![0.0, 0.0],
            radius: 1.0,
            norm_p: NormP::Inf,
        },
        hurwicz_lambda: None,
    };
    let ov = oracle_value(&problem).unwrap();
    assert!(ov.exact);
    assert!((ov.value + 1.0).abs() < 1e-9, "value {}", ov.value);
}

#[test]
fn direct_inner_inf_matches_hand_values() {
    // K=2, constant maps 1 and -1, b=0, center 0, radius 1, p=1: inner
    // infimum of max(xi, -xi) over [-1,1] is 0.
    let pw = PiecewiseAffineRecourse {
        pieces: vec![
            piece(vec![vec![0.0]], vec![1.0], vec![0.0], 0.0),
            piece(vec![vec![0.0]], vec![-1.0], vec![0.0], 0.0),
        ],
        mode: RecourseMode::ConvexMax,
        block_structure: None,
    };
    let v = direct_inner_inf_convex(&pw, &[0.0], 1.0, NormP::One, &[0.5]).unwrap();
    assert!(v.abs() < 1e-9, "value {v}");
}

#[test]
fn l2_ball_small_radius_concave_route() {
    let problem = DfoProblem {
        decisions: DecisionSet::box_only(vec![0.0], vec![1.0]),
        recourse: pw(
            vec![piece(vec![vec![0.0]], vec![1.0], vec![1.0], 0.0)],
            RecourseMode::ConcaveMin,
        ),
        ambiguity: AmbiguitySet::L2Ball {
            scenarios: vec![vec![0.0], vec![1.0], vec![2.0]],
            p0: vec![1.0 / 3.0; 3],
            radius: 0.2,
        },
        hurwicz_lambda: None,
    };
    // Values at x: (x, 1 + x, 2 + x); mean 1 + x, deviation sqrt(2);
    // value(x) = 1 + x - 0.2 sqrt(2), minimized at x = 0.
    let ov = oracle_value(&problem).unwrap();
    assert!(ov.exact);
    assert!((ov.value - (1.0 - 0.2 * 2.0f64.sqrt())).abs() < 1e-9, "value {}", ov.value);
}

#[test]
fn hardness_witness_feeds_certificate() {
    // Points on the euclidean unit circle, lifted to the reverse-norm
    // epigraph boundary, certify midpoint escape.
    let member = |p: &[f64]| {
        let (x, t) = (&p[..2], p[2]);
        -crate::linalg::norm_p(x, 2.0) <= t + 1e-9
    };
    let points: Vec<Vec<f64>> = (0..6)
        .map(|k| {
            let phi = 0.3 + std::f64::consts::TAU * k as f64 / 6.0;
            vec![0.5 * phi.cos(), 0.5 * phi.sin(), -0.5]
        })
        .collect();
    assert!(check_midpoint_certificate(member, &points));
}
