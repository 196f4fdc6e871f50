//! Basic-feasible-solution enumeration for small polyhedra.

use crate::linalg::{dot, solve_dense};

use super::OracleError;

/// Feasibility and dedup tolerance; matches the LP feasibility tolerance so
/// degenerate bases do not spawn phantom vertices.
pub const VERTEX_TOL: f64 = 1e-7;

/// Desk-scale limits for the public enumeration entry point.
pub const MAX_DIM: usize = 20;
pub const MAX_ROWS: usize = 40;
const MAX_COMBINATIONS: u128 = 6_000_000;

/// Enumerated extreme points together with their source description.
#[derive(Debug, Clone)]
pub struct VertexSet {
    pub vertices: Vec<Vec<f64>>,
    pub source: String,
}

/// A polyhedron `{x : rows_i . x <= rhs_i, lower <= x <= upper}` prepared
/// for enumeration. Equalities are expressed as paired rows. Infinite bound
/// entries simply contribute no candidate hyperplane.
#[derive(Debug, Clone, Default)]
pub struct Polyhedron {
    pub rows: Vec<(Vec<f64>, f64)>,
    pub lower: Vec<f64>,
    pub upper: Vec<f64>,
    pub label: String,
}

impl Polyhedron {
    pub fn dim(&self) -> usize {
        self.lower.len()
    }

    pub fn add_le(&mut self, coeffs: Vec<f64>, rhs: f64) {
        self.rows.push((coeffs, rhs));
    }

    pub fn add_eq(&mut self, coeffs: Vec<f64>, rhs: f64) {
        let neg: Vec<f64> = coeffs.iter().map(|c| -c).collect();
        self.rows.push((coeffs, rhs));
        self.rows.push((neg, -rhs));
    }

    pub fn contains(&self, x: &[f64], tol: f64) -> bool {
        for (j, &v) in x.iter().enumerate() {
            if v < self.lower[j] - tol || v > self.upper[j] + tol {
                return false;
            }
        }
        self.rows.iter().all(|(row, rhs)| dot(row, x) <= rhs + tol)
    }

    /// All basic feasible solutions. Complete whenever every vertex has at
    /// least `dim` active candidate hyperplanes, which holds by definition
    /// of a vertex.
    pub fn enumerate(&self, vertex_cap: usize) -> Result<VertexSet, OracleError> {
        let n = self.dim();
        // Candidate hyperplanes: every row plus each finite bound.
        enum Cand {
            Row(usize),
            Lower(usize),
            Upper(usize),
        }
        let mut cands: Vec<Cand> = Vec::new();
        for i in 0..self.rows.len() {
            cands.push(Cand::Row(i));
        }
        for j in 0..n {
            if self.lower[j].is_finite() {
                cands.push(Cand::Lower(j));
            }
            if self.upper[j].is_finite() && self.upper[j] != self.lower[j] {
                cands.push(Cand::Upper(j));
            }
        }
        let c = cands.len();
        if c < n {
            return Ok(VertexSet { vertices: Vec::new(), source: self.label.clone() });
        }
        if binomial(c, n) > MAX_COMBINATIONS {
            return Err(OracleError::CapExceeded(format!(
                "{} choose {} candidate bases exceeds the enumeration budget",
                c, n
            )));
        }

        let mut vertices: Vec<Vec<f64>> = Vec::new();
        let mut pick: Vec<usize> = (0..n).collect();
        loop {
            // Assemble and solve the active system.
            let mut a = Vec::with_capacity(n);
            let mut b = Vec::with_capacity(n);
            for &idx in &pick {
                match cands[idx] {
                    Cand::Row(i) => {
                        a.push(self.rows[i].0.clone());
                        b.push(self.rows[i].1);
                    }
                    Cand::Lower(j) => {
                        let mut row = vec![0.0; n];
                        row[j] = 1.0;
                        a.push(row);
                        b.push(self.lower[j]);
                    }
                    Cand::Upper(j) => {
                        let mut row = vec![0.0; n];
                        row[j] = 1.0;
                        a.push(row);
                        b.push(self.upper[j]);
                    }
                }
            }
            if let Some(x) = solve_dense(&a, &b) {
                if self.contains(&x, VERTEX_TOL)
                    && !vertices.iter().any(|v| max_abs_diff(v, &x) <= VERTEX_TOL)
                {
                    vertices.push(x);
                    if vertices.len() > vertex_cap {
                        return Err(OracleError::CapExceeded(format!(
                            "more than {vertex_cap} vertices"
                        )));
                    }
                }
            }

            // Next lexicographic combination.
            let mut i = n;
            loop {
                if i == 0 {
                    return Ok(VertexSet { vertices, source: self.label.clone() });
                }
                i -= 1;
                if pick[i] != i + c - n {
                    break;
                }
            }
            if pick[i] == i + c - n {
                return Ok(VertexSet { vertices, source: self.label.clone() });
            }
            pick[i] += 1;
            for k in (i + 1)..n {
                pick[k] = pick[k - 1] + 1;
            }
        }
    }

    /// Minimize a linear objective over the polyhedron by vertex scan.
    /// The minimum must be attained (pointed polyhedron, finite optimum).
    pub fn minimize(&self, cost: &[f64], vertex_cap: usize) -> Result<(f64, Vec<f64>), OracleError> {
        let vs = self.enumerate(vertex_cap)?;
        vs.vertices
            .iter()
            .map(|v| (dot(cost, v), v.clone()))
            .min_by(|a, b| a.0.total_cmp(&b.0).then_with(|| cmp_lex(&a.1, &b.1)))
            .ok_or_else(|| OracleError::Infeasible(self.label.clone()))
    }
}

fn cmp_lex(a: &[f64], b: &[f64]) -> std::cmp::Ordering {
    for (x, y) in a.iter().zip(b) {
        let o = x.total_cmp(y);
        if o != std::cmp::Ordering::Equal {
            return o;
        }
    }
    std::cmp::Ordering::Equal
}

fn max_abs_diff(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).fold(0.0f64, |m, (x, y)| m.max((x - y).abs()))
}

fn binomial(n: usize, k: usize) -> u128 {
    let k = k.min(n - k);
    let mut acc: u128 = 1;
    for i in 0..k {
        acc = acc.saturating_mul((n - i) as u128) / (i as u128 + 1);
        if acc > MAX_COMBINATIONS * 2 {
            return u128::MAX;
        }
    }
    acc
}

/// Spec-facing entry point: all extreme points of
/// `{x : D x <= d, lower <= x <= upper}` at desk scale.
pub fn enumerate_vertices(
    d_matrix: &[Vec<f64>],
    d_rhs: &[f64],
    lower: &[f64],
    upper: &[f64],
) -> Result<VertexSet, OracleError> {
    let n = lower.len();
    if n > MAX_DIM {
        return Err(OracleError::CapExceeded(format!("dimension {n} exceeds {MAX_DIM}")));
    }
    if d_matrix.len() > MAX_ROWS {
        return Err(OracleError::CapExceeded(format!(
            "{} constraint rows exceed {MAX_ROWS}",
            d_matrix.len()
        )));
    }
    if lower.iter().chain(upper.iter()).any(|v| !v.is_finite()) {
        return Err(OracleError::CapExceeded("bounds must be finite".into()));
    }
    let mut poly = Polyhedron {
        rows: d_matrix.iter().cloned().zip(d_rhs.iter().copied()).collect(),
        lower: lower.to_vec(),
        upper: upper.to_vec(),
        label: format!("{} rows in dim {n}", d_matrix.len()),
    };
    poly.label = format!("polytope: {} rows, dim {n}", poly.rows.len());
    poly.enumerate(100_000)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn unit_box_has_four_vertices() {
        let vs = enumerate_vertices(&[], &[], &[0.0, 0.0], &[1.0, 1.0]).unwrap();
        assert_eq!(vs.vertices.len(), 4);
    }

    #[test]
    fn probability_simplex_vertices_are_unit_vectors() {
        let mut poly = Polyhedron {
            rows: Vec::new(),
            lower: vec![0.0; 3],
            upper: vec![1.0; 3],
            label: "simplex".into(),
        };
        poly.add_eq(vec![1.0, 1.0, 1.0], 1.0);
        let vs = poly.enumerate(100).unwrap();
        assert_eq!(vs.vertices.len(), 3);
        for v in &vs.vertices {
            assert!((v.iter().sum::<f64>() - 1.0).abs() < 1e-9);
            assert!(v.iter().any(|&x| (x - 1.0).abs() < 1e-9));
        }
    }

    #[test]
    fn capped_simplex_matches_hand_enumeration() {
        // {p >= 0, sum p = 1, p1 + p2 <= 0.8}
        let mut poly = Polyhedron {
            rows: Vec::new(),
            lower: vec![0.0; 3],
            upper: vec![1.0; 3],
            label: "capped".into(),
        };
        poly.add_eq(vec![1.0, 1.0, 1.0], 1.0);
        poly.add_le(vec![1.0, 1.0, 0.0], 0.8);
        let vs = poly.enumerate(100).unwrap();
        let expect = [
            vec![0.8, 0.0, 0.2],
            vec![0.0, 0.8, 0.2],
            vec![0.0, 0.0, 1.0],
        ];
        assert_eq!(vs.vertices.len(), 3);
        for e in &expect {
            assert!(
                vs.vertices.iter().any(|v| max_abs_diff(v, e) < 1e-9),
                "missing vertex {e:?} in {:?}",
                vs.vertices
            );
        }
    }

    #[test]
    fn vertex_minimization_matches_lp() {
        use crate::milp::{solve_lp, LinearProgram, Sense, SolverConfig};
        use rand::prelude::*;
        use rand_chacha::ChaCha8Rng;

        let mut rng = ChaCha8Rng::seed_from_u64(7);
        for trial in 0..50 {
            let n = 2 + (trial % 3);
            let rows = 1 + (trial % 3);
            let mut poly = Polyhedron {
                rows: Vec::new(),
                lower: vec![-1.0; n],
                upper: vec![1.0; n],
                label: "rand".into(),
            };
            let mut lp = LinearProgram::new("rand");
            let vars: Vec<usize> =
                (0..n).map(|j| lp.add_var(format!("x{j}"), -1.0, 1.0, 0.0, false)).collect();
            for _ in 0..rows {
                let coeffs: Vec<f64> = (0..n).map(|_| rng.random_range(-1.0..1.0)).collect();
                let rhs = rng.random_range(0.2..1.5);
                poly.add_le(coeffs.clone(), rhs);
                lp.add_row(
                    "r",
                    coeffs.iter().enumerate().map(|(j, &c)| (vars[j], c)).collect(),
                    Sense::Le,
                    rhs,
                );
            }
            let cost: Vec<f64> = (0..n).map(|_| rng.random_range(-1.0..1.0)).collect();
            let (vmin, _) = poly.minimize(&cost, 10_000).unwrap();
            for (j, &c) in cost.iter().enumerate() {
                lp.objective[vars[j]] = c;
            }
            let sol = solve_lp(&lp, &SolverConfig::default()).unwrap();
            assert!(
                (vmin - sol.objective).abs() < 1e-6,
                "trial {trial}: vertex {vmin} vs lp {}",
                sol.objective
            );
        }
    }
}
