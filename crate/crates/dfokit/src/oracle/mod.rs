//! Independent brute-force ground truth: vertex enumeration, greedy
//! inner-infimum solvers, non-representability certificates, and
//! hardness-reduction instance generators.
//!
//! Nothing in this module calls the reformulation compilers; values computed
//! here are the reference side of every compiler cross-check.

mod hardness;
mod value;
mod vertices;

pub use hardness::{gen_hardness_instance, HardnessInstance, HardnessKind};
pub use value::{decision_polyhedron, decision_vertices, direct_inner_inf_convex, oracle_value, OracleValue};
pub use vertices::{enumerate_vertices, Polyhedron, VertexSet, VERTEX_TOL};

use thiserror::Error;

#[derive(Debug, Clone, Error)]
pub enum OracleError {
    #[error("cap exceeded: {0}")]
    CapExceeded(String),
    #[error("infeasible: {0}")]
    Infeasible(String),
    #[error("infeasible weights: {0}")]
    InfeasibleWeights(String),
    #[error("unsupported oracle route: {0}")]
    Unsupported(String),
    #[error("numerical failure: {0}")]
    Numerical(String),
}

/// Exact inner infimum of `sum_i p_i v_i` over interval weight perturbations
/// `{p = p0 + psi : l <= psi <= u, e'psi = 0, p >= 0}` for fixed values.
///
/// Sorts values ascending and fills each weight to its cap until the unit
/// mass runs out; the rest stay at their floors.
pub fn greedy_interval_inf(
    values: &[f64],
    p0: &[f64],
    l: &[f64],
    u: &[f64],
) -> Result<(f64, Vec<f64>), OracleError> {
    let n = values.len();
    if p0.len() != n || l.len() != n || u.len() != n {
        return Err(OracleError::InfeasibleWeights("length mismatch".into()));
    }
    let floors: Vec<f64> = (0..n).map(|i| p0[i] + l[i]).collect();
    let caps: Vec<f64> = (0..n).map(|i| p0[i] + u[i]).collect();
    if floors.iter().any(|&f| f < -1e-9) {
        return Err(OracleError::InfeasibleWeights("p0 + l must be nonnegative".into()));
    }
    if (0..n).any(|i| caps[i] < floors[i] - 1e-12) {
        return Err(OracleError::InfeasibleWeights("l > u".into()));
    }
    let total: f64 = p0.iter().sum();
    if (total - 1.0).abs() > 1e-7 {
        return Err(OracleError::InfeasibleWeights(format!("p0 sums to {total}")));
    }
    let floor_sum: f64 = floors.iter().sum();
    let cap_sum: f64 = caps.iter().sum();
    if floor_sum > 1.0 + 1e-9 || cap_sum < 1.0 - 1e-9 {
        return Err(OracleError::InfeasibleWeights(format!(
            "mass 1 outside [{floor_sum}, {cap_sum}]"
        )));
    }

    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&a, &b| values[a].total_cmp(&values[b]).then(a.cmp(&b)));
    let mut weights = floors.clone();
    let mut remaining = 1.0 - floor_sum;
    for &i in &order {
        if remaining <= 0.0 {
            break;
        }
        let add = (caps[i] - floors[i]).min(remaining);
        weights[i] += add;
        remaining -= add;
    }
    let value = weights.iter().zip(values).map(|(w, v)| w * v).sum();
    Ok((value, weights))
}

/// Finite surrogate for the midpoint non-representability certificate:
/// true iff the supplied points are pairwise distinct members whose pairwise
/// midpoints all fall outside the set. Evidence, not proof — the underlying
/// lemma quantifies over an infinite sequence.
pub fn check_midpoint_certificate<F>(membership: F, points: &[Vec<f64>]) -> bool
where
    F: Fn(&[f64]) -> bool,
{
    if points.len() < 3 {
        return false;
    }
    for p in points {
        if !membership(p) {
            return false;
        }
    }
    for i in 0..points.len() {
        for j in (i + 1)..points.len() {
            let a = &points[i];
            let b = &points[j];
            if a.len() != b.len() {
                return false;
            }
            let distinct = a.iter().zip(b).any(|(x, y)| (x - y).abs() > 1e-12);
            if !distinct {
                return false;
            }
            let mid: Vec<f64> = a.iter().zip(b).map(|(x, y)| 0.5 * (x + y)).collect();
            if membership(&mid) {
                return false;
            }
        }
    }
    true
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn greedy_caps_ascending_values() {
        let p0 = vec![0.25; 4];
        let l = vec![-0.25; 4];
        let u = vec![0.05; 4];
        let (value, weights) = greedy_interval_inf(&[1.0, 2.0, 3.0, 4.0], &p0, &l, &u).unwrap();
        assert!((value - 2.2).abs() < 1e-12, "value {value}");
        let expect = [0.3, 0.3, 0.3, 0.1];
        for (w, e) in weights.iter().zip(expect) {
            assert!((w - e).abs() < 1e-12);
        }
    }

    #[test]
    fn greedy_degenerate_interval_is_saa() {
        let p0 = vec![0.5, 0.3, 0.2];
        let zero = vec![0.0; 3];
        let (value, weights) = greedy_interval_inf(&[3.0, -1.0, 2.0], &p0, &zero, &zero).unwrap();
        assert!((value - (0.5 * 3.0 - 0.3 + 0.2 * 2.0)).abs() < 1e-12);
        assert_eq!(weights, p0);
    }

    #[test]
    fn greedy_constant_values() {
        let p0 = vec![1.0 / 3.0; 3];
        let l = vec![-0.2; 3];
        let u = vec![0.3; 3];
        let (value, _) = greedy_interval_inf(&[5.0, 5.0, 5.0], &p0, &l, &u).unwrap();
        assert!((value - 5.0).abs() < 1e-9);
    }

    #[test]
    fn greedy_matches_weight_lp() {
        use crate::milp::{solve_lp, LinearProgram, Sense, SolverConfig};
        use rand::prelude::*;
        use rand_chacha::ChaCha8Rng;

        let mut rng = ChaCha8Rng::seed_from_u64(11);
        for trial in 0..500 {
            let n = 2 + trial % 5;
            let p0 = vec![1.0 / n as f64; n];
            let l: Vec<f64> = (0..n).map(|_| -rng.random_range(0.0..1.0 / n as f64)).collect();
            let u: Vec<f64> = (0..n).map(|_| rng.random_range(0.0..0.5)).collect();
            let values: Vec<f64> = (0..n).map(|_| rng.random_range(-5.0..5.0)).collect();
            let (greedy, _) = greedy_interval_inf(&values, &p0, &l, &u).unwrap();

            let mut lp = LinearProgram::new("w");
            let vars: Vec<usize> = (0..n)
                .map(|i| lp.add_var(format!("p{i}"), p0[i] + l[i], p0[i] + u[i], values[i], false))
                .collect();
            lp.add_row("mass", vars.iter().map(|&v| (v, 1.0)).collect(), Sense::Eq, 1.0);
            let sol = solve_lp(&lp, &SolverConfig::default()).unwrap();
            assert!(
                (greedy - sol.objective).abs() < 1e-8,
                "trial {trial}: greedy {greedy} vs lp {}",
                sol.objective
            );
        }
    }

    #[test]
    fn certificate_accepts_circle_on_l2_sphere() {
        let member = |p: &[f64]| -> bool {
            let (x, t) = (&p[..2], p[2]);
            -(x[0] * x[0] + x[1] * x[1]).sqrt() <= t + 1e-9
        };
        let points: Vec<Vec<f64>> = (0..8)
            .map(|k| {
                let phi = std::f64::consts::TAU * k as f64 / 8.0;
                vec![phi.cos(), phi.sin(), -1.0]
            })
            .collect();
        assert!(check_midpoint_certificate(member, &points));
    }

    #[test]
    fn certificate_rejects_collinear_points_in_segment() {
        let member = |p: &[f64]| p[0] >= 0.0 && p[0] <= 1.0;
        let points = vec![vec![0.0], vec![0.5], vec![1.0]];
        assert!(!check_midpoint_certificate(member, &points));
    }
}
