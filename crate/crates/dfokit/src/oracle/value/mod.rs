//! Reference values by brute force.
//!
//! Routes:
//! * concave piecewise recourse over norm balls: the inner value is concave
//!   in the decision, so scanning decision-polytope vertices is exact for
//!   every norm index;
//! * convex piecewise recourse over polyhedral balls: the dual-norm term is
//!   expanded into finitely many sign branches and each branch becomes a
//!   linear objective over a lifted polytope, minimized by vertex scan;
//! * scenario-based ambiguity: weight-polytope vertices crossed with an
//!   exact inner minimization over the decision;
//! * anything else: a coarse grid, explicitly labeled approximate.

use crate::linalg::dot;
use crate::model::{
    propagate_bounds, AmbiguitySet, DecisionSet, DfoProblem, NormP, Piece,
    PiecewiseAffineRecourse, Recourse, RecourseMode,
};

use super::vertices::Polyhedron;
use super::OracleError;

/// Cap on enumerated weight-polytope vertices.
const WEIGHT_VERTEX_CAP: usize = 10_000;
const LIFTED_VERTEX_CAP: usize = 200_000;
/// Sign-branch expansion cap (2^m branches for an m-dimensional L1 term).
const MAX_SIGN_DIM: usize = 16;

#[derive(Debug, Clone)]
pub struct OracleValue {
    pub value: f64,
    pub exact: bool,
    pub route: String,
}

impl OracleValue {
    fn exact(value: f64, route: impl Into<String>) -> Self {
        OracleValue { value, exact: true, route: route.into() }
    }
}

/// Decision polytope as an enumeration-ready polyhedron.
pub fn decision_polyhedron(ds: &DecisionSet) -> Polyhedron {
    let mut poly = Polyhedron {
        rows: Vec::new(),
        lower: ds.lower.clone(),
        upper: ds.upper.clone(),
        label: "decision set".into(),
    };
    for (row, &rhs) in ds.ineq_matrix.iter().zip(&ds.ineq_rhs) {
        poly.add_le(row.clone(), rhs);
    }
    poly
}

/// All vertices of the decision polytope.
pub fn decision_vertices(ds: &DecisionSet) -> Result<Vec<Vec<f64>>, OracleError> {
    Ok(decision_polyhedron(ds).enumerate(WEIGHT_VERTEX_CAP)?.vertices)
}

/// `zeta' a_k(x) + b_k(x)` as (x-coefficients, constant).
fn piece_affine(piece: &Piece, zeta: &[f64]) -> (Vec<f64>, f64) {
    let n = piece.a.in_dim();
    let mut coeffs = vec![0.0; n];
    let mut constant = piece.b.offset[0];
    for (j, &c) in piece.b.matrix[0].iter().enumerate() {
        coeffs[j] += c;
    }
    for (i, (row, off)) in piece.a.matrix.iter().zip(&piece.a.offset).enumerate() {
        let z = zeta[i];
        if z == 0.0 {
            continue;
        }
        constant += z * off;
        for (j, &c) in row.iter().enumerate() {
            coeffs[j] += z * c;
        }
    }
    (coeffs, constant)
}

/// Range of `zeta' a_k(x) + b_k(x)` over the decision box.
fn piece_value_range(piece: &Piece, zeta: &[f64], ds: &DecisionSet) -> (f64, f64) {
    let (coeffs, constant) = piece_affine(piece, zeta);
    let map = crate::model::AffineMap { matrix: vec![coeffs], offset: vec![constant] };
    let (l, u) = propagate_bounds(&map, &ds.lower, &ds.upper);
    (l[0], u[0])
}

/// Inner favorable value of the concave recourse at a fixed decision:
/// `min_k [center' a_k(x) + b_k(x) - radius * dualnorm(a_k(x))]`.
fn concave_inner(
    pw: &PiecewiseAffineRecourse,
    center: &[f64],
    radius: f64,
    norm_p: NormP,
    x: &[f64],
) -> f64 {
    pw.pieces
        .iter()
        .map(|p| {
            let a = p.a.apply(x);
            dot(center, &a) + p.b.apply(x)[0] - radius * norm_p.dual_norm(&a)
        })
        .fold(f64::INFINITY, f64::min)
}

/// Exact route for concave piecewise recourse over one or many ball centers:
/// the averaged inner value is concave in x, so some decision vertex is
/// optimal — for every norm index p.
fn ball_concave_route(
    ds: &DecisionSet,
    pw: &PiecewiseAffineRecourse,
    centers: &[Vec<f64>],
    radius: f64,
    norm_p: NormP,
) -> Result<OracleValue, OracleError> {
    let vertices = decision_vertices(ds)?;
    if vertices.is_empty() {
        return Err(OracleError::Infeasible("decision set has no vertices".into()));
    }
    let n_c = centers.len() as f64;
    let value = vertices
        .iter()
        .map(|x| {
            centers
                .iter()
                .map(|c| concave_inner(pw, c, radius, norm_p, x))
                .sum::<f64>()
                / n_c
        })
        .fold(f64::INFINITY, f64::min);
    Ok(OracleValue::exact(value, "decision-vertex scan (concave inner value)"))
}

/// All sign vectors over the given coordinate count.
fn sign_vectors(dim: usize) -> Result<Vec<Vec<f64>>, OracleError> {
    if dim > MAX_SIGN_DIM {
        return Err(OracleError::CapExceeded(format!(
            "sign expansion over {dim} coordinates exceeds {MAX_SIGN_DIM}"
        )));
    }
    Ok((0..(1usize << dim))
        .map(|mask| {
            (0..dim).map(|j| if (mask >> j) & 1 == 1 { 1.0 } else { -1.0 }).collect()
        })
        .collect())
}

/// Branch terms that expand `-radius * dualnorm(a(x))` into affine pieces
/// whose pointwise minimum equals it. Each branch is (x-coeffs, constant).
fn dual_norm_branches(
    piece: &Piece,
    norm_p: NormP,
    radius: f64,
    coords: &[usize],
) -> Result<Vec<(Vec<f64>, f64)>, OracleError> {
    let n = piece.a.in_dim();
    let mut branches = Vec::new();
    match norm_p {
        NormP::One => {
            // dual is L-inf: max over coordinates and signs.
            for &i in coords {
                for sign in [1.0, -1.0] {
                    let (row, off) = piece.a.row(i);
                    let coeffs: Vec<f64> = row.iter().map(|&c| -radius * sign * c).collect();
                    branches.push((coeffs, -radius * sign * off));
                }
            }
        }
        NormP::Inf => {
            // dual is L1: max over sign vectors.
            for w in sign_vectors(coords.len())? {
                let mut coeffs = vec![0.0; n];
                let mut constant = 0.0;
                for (slot, &i) in coords.iter().enumerate() {
                    let (row, off) = piece.a.row(i);
                    for (j, &c) in row.iter().enumerate() {
                        coeffs[j] -= radius * w[slot] * c;
                    }
                    constant -= radius * w[slot] * off;
                }
                branches.push((coeffs, constant));
            }
        }
        NormP::Real(_) => {
            return Err(OracleError::Unsupported(
                "no affine branch expansion for non-polyhedral norms".into(),
            ));
        }
    }
    Ok(branches)
}

struct Lifted {
    poly: Polyhedron,
    cost: Vec<f64>,
    offset: f64,
}

impl Lifted {
    /// Decision variables first, then one epigraph variable per sample.
    fn new(ds: &DecisionSet, eta_bounds: &[(f64, f64)], eta_weight: &[f64]) -> Self {
        let mut poly = decision_polyhedron(ds);
        let n = ds.dim();
        for &(lo, hi) in eta_bounds {
            poly.lower.push(lo - 1.0);
            poly.upper.push(hi + 1.0);
            for row in &mut poly.rows {
                row.0.push(0.0);
            }
        }
        let mut cost = vec![0.0; n];
        cost.extend_from_slice(eta_weight);
        Lifted { poly, cost, offset: 0.0 }
    }

    /// `eta_slot >= coeffs . x + constant`.
    fn add_epigraph_row(&mut self, eta_slot: usize, coeffs: &[f64], constant: f64) {
        let n_x = coeffs.len();
        let mut row = vec![0.0; self.poly.dim()];
        row[..n_x].copy_from_slice(coeffs);
        row[n_x + eta_slot] = -1.0;
        self.poly.add_le(row, -constant);
    }

    fn minimize(&self) -> Result<f64, OracleError> {
        let (v, _) = self.poly.minimize(&self.cost, LIFTED_VERTEX_CAP)?;
        Ok(v + self.offset)
    }
}

/// Exact routes for convex piecewise recourse over polyhedral balls around
/// one or many centers; errors out when no recognized structure applies.
fn ball_convex_route(
    ds: &DecisionSet,
    pw: &PiecewiseAffineRecourse,
    centers: &[Vec<f64>],
    radius: f64,
    norm_p: NormP,
) -> Result<OracleValue, OracleError> {
    let n_c = centers.len();
    let weight = vec![1.0 / n_c as f64; n_c];
    let eta_bounds: Vec<(f64, f64)> = centers
        .iter()
        .map(|c| {
            let mut lo = f64::INFINITY;
            let mut hi = f64::NEG_INFINITY;
            for p in &pw.pieces {
                let (l, u) = piece_value_range(p, c, ds);
                lo = lo.min(l - radius * 1e3 - 1.0);
                hi = hi.max(u + radius * 1e3 + 1.0);
            }
            (lo, hi)
        })
        .collect();

    if radius == 0.0 {
        let mut lifted = Lifted::new(ds, &eta_bounds, &weight);
        for (i, c) in centers.iter().enumerate() {
            for piece in &pw.pieces {
                let (coeffs, constant) = piece_affine(piece, c);
                lifted.add_epigraph_row(i, &coeffs, constant);
            }
        }
        return Ok(OracleValue::exact(lifted.minimize()?, "lifted vertex scan (radius 0)"));
    }

    if pw.constant_a() && norm_p.is_polyhedral() {
        return const_a_convex(ds, pw, centers, radius, norm_p, &eta_bounds, &weight);
    }

    // Branch sets per piece for the dual-norm term; shared a-maps collapse
    // to one branch set applied to every piece row.
    let branch_sets: Vec<Vec<(Vec<f64>, f64)>> = if pw.shared_a() {
        let all: Vec<usize> = (0..pw.xi_dim()).collect();
        let branches = dual_norm_branches(&pw.pieces[0], norm_p, radius, &all)?;
        vec![branches]
    } else if let Some(groups) = &pw.block_structure {
        if !matches!(norm_p, NormP::Inf) {
            return Err(OracleError::Unsupported(
                "block-structured convex route needs the sup-norm ball".into(),
            ));
        }
        let total: usize = groups.iter().map(|g| g.len()).sum();
        if total > MAX_SIGN_DIM {
            return Err(OracleError::CapExceeded("block sign expansion too large".into()));
        }
        pw.pieces
            .iter()
            .zip(groups)
            .map(|(p, g)| dual_norm_branches(p, norm_p, radius, g))
            .collect::<Result<_, _>>()?
    } else {
        return Err(OracleError::Unsupported(
            "convex ball route needs constant, shared, or block-structured a-maps".into(),
        ));
    };

    // Cartesian product over per-piece branch choices.
    let combo_count: usize = branch_sets.iter().map(|b| b.len()).product();
    if combo_count > 1 << MAX_SIGN_DIM {
        return Err(OracleError::CapExceeded("branch product too large".into()));
    }
    let shared = branch_sets.len() == 1;
    let mut best = f64::INFINITY;
    let mut combo = vec![0usize; branch_sets.len()];
    loop {
        let mut lifted = Lifted::new(ds, &eta_bounds, &weight);
        for (i, c) in centers.iter().enumerate() {
            for (k, piece) in pw.pieces.iter().enumerate() {
                let (mut coeffs, mut constant) = piece_affine(piece, c);
                let branch = if shared {
                    &branch_sets[0][combo[0]]
                } else {
                    &branch_sets[k][combo[k]]
                };
                for (j, &b) in branch.0.iter().enumerate() {
                    coeffs[j] += b;
                }
                constant += branch.1;
                lifted.add_epigraph_row(i, &coeffs, constant);
            }
        }
        best = best.min(lifted.minimize()?);

        // Advance the mixed-radix combo counter.
        let mut slot = 0;
        loop {
            if slot == combo.len() {
                return Ok(OracleValue::exact(
                    best,
                    format!("lifted vertex scan over {combo_count} dual-norm branches"),
                ));
            }
            combo[slot] += 1;
            if combo[slot] < branch_sets[slot].len() {
                break;
            }
            combo[slot] = 0;
            slot += 1;
        }
    }
}

/// Constant a-maps: the joint program over (x, xi_1..xi_N, eta_1..eta_N) is
/// linear, so its basic feasible solutions carry the optimum.
fn const_a_convex(
    ds: &DecisionSet,
    pw: &PiecewiseAffineRecourse,
    centers: &[Vec<f64>],
    radius: f64,
    norm_p: NormP,
    eta_bounds: &[(f64, f64)],
    weight: &[f64],
) -> Result<OracleValue, OracleError> {
    let n = ds.dim();
    let m = pw.xi_dim();
    let n_c = centers.len();
    let mut poly = decision_polyhedron(ds);
    // Layout: x | per sample: xi (m) [+ t (m) for the L1 ball] | eta block.
    let per_sample = if matches!(norm_p, NormP::One) { 2 * m } else { m };
    for c in centers {
        for j in 0..m {
            poly.lower.push(c[j] - radius);
            poly.upper.push(c[j] + radius);
        }
        if matches!(norm_p, NormP::One) {
            for _ in 0..m {
                poly.lower.push(0.0);
                poly.upper.push(radius);
            }
        }
    }
    for &(lo, hi) in eta_bounds {
        poly.lower.push(lo - 1.0);
        poly.upper.push(hi + 1.0);
    }
    let dim = n + n_c * per_sample + n_c;
    for row in &mut poly.rows {
        row.0.resize(dim, 0.0);
    }
    let xi_base = |i: usize| n + i * per_sample;
    let eta_base = n + n_c * per_sample;

    for (i, c) in centers.iter().enumerate() {
        if matches!(norm_p, NormP::One) {
            // t_j >= |xi_j - c_j| and sum t <= radius.
            let t_base = xi_base(i) + m;
            let mut sum_row = vec![0.0; dim];
            for j in 0..m {
                let mut r1 = vec![0.0; dim];
                r1[xi_base(i) + j] = 1.0;
                r1[t_base + j] = -1.0;
                poly.add_le(r1, c[j]);
                let mut r2 = vec![0.0; dim];
                r2[xi_base(i) + j] = -1.0;
                r2[t_base + j] = -1.0;
                poly.add_le(r2, -c[j]);
                sum_row[t_base + j] = 1.0;
            }
            poly.add_le(sum_row, radius);
        }
        for piece in &pw.pieces {
            // eta_i >= abar_k' xi_i + b_k(x).
            let mut row = vec![0.0; dim];
            for (j, &a) in piece.a.offset.iter().enumerate() {
                row[xi_base(i) + j] = a;
            }
            for (j, &c) in piece.b.matrix[0].iter().enumerate() {
                row[j] += c;
            }
            row[eta_base + i] = -1.0;
            poly.add_le(row, -piece.b.offset[0]);
        }
    }
    let mut cost = vec![0.0; dim];
    for i in 0..n_c {
        cost[eta_base + i] = weight[i];
    }
    let (value, _) = poly.minimize(&cost, LIFTED_VERTEX_CAP)?;
    Ok(OracleValue::exact(value, "joint lifted vertex scan (constant a-maps)"))
}

/// Weight polytope of a scenario-based ambiguity set.
fn weight_polyhedron(ambiguity: &AmbiguitySet) -> Option<Polyhedron> {
    match ambiguity {
        AmbiguitySet::FinitePolyhedral { scenarios, d_matrix, d_rhs } => {
            let n = scenarios.len();
            let mut poly = Polyhedron {
                rows: Vec::new(),
                lower: vec![0.0; n],
                upper: vec![1.0; n],
                label: "weight polytope".into(),
            };
            for (row, &rhs) in d_matrix.iter().zip(d_rhs) {
                poly.add_le(row.clone(), rhs);
            }
            poly.add_eq(vec![1.0; n], 1.0);
            Some(poly)
        }
        AmbiguitySet::IntervalPolyhedral { scenarios, p0, lbar, ubar, q } => {
            let n = scenarios.len();
            let qf = *q as f64;
            let mut poly = Polyhedron {
                rows: Vec::new(),
                lower: (0..n).map(|i| (p0[i] + lbar[i] as f64 / qf).max(0.0)).collect(),
                upper: (0..n).map(|i| p0[i] + ubar[i] as f64 / qf).collect(),
                label: "interval weight polytope".into(),
            };
            poly.add_eq(vec![1.0; n], 1.0);
            Some(poly)
        }
        _ => None,
    }
}

/// `min_x sum_i gamma_i Q(x, xi_i)` for a fixed weight vector.
fn inner_scenario_min(
    problem: &DfoProblem,
    scenarios: &[Vec<f64>],
    gamma: &[f64],
) -> Result<f64, OracleError> {
    let ds = &problem.decisions;
    match &problem.recourse {
        Recourse::Piecewise(pw) if pw.mode == RecourseMode::ConcaveMin => {
            let vertices = decision_vertices(ds)?;
            vertices
                .iter()
                .map(|x| {
                    gamma
                        .iter()
                        .zip(scenarios)
                        .map(|(&g, xi)| if g == 0.0 { 0.0 } else { g * pw.evaluate(x, xi) })
                        .sum::<f64>()
                })
                .min_by(f64::total_cmp)
                .ok_or_else(|| OracleError::Infeasible("decision set has no vertices".into()))
        }
        Recourse::Piecewise(pw) => {
            let eta_bounds: Vec<(f64, f64)> = scenarios
                .iter()
                .map(|xi| {
                    let mut lo = f64::INFINITY;
                    let mut hi = f64::NEG_INFINITY;
                    for p in &pw.pieces {
                        let (l, u) = piece_value_range(p, xi, ds);
                        lo = lo.min(l);
                        hi = hi.max(u);
                    }
                    (lo, hi)
                })
                .collect();
            let mut lifted = Lifted::new(ds, &eta_bounds, gamma);
            for (i, xi) in scenarios.iter().enumerate() {
                for piece in &pw.pieces {
                    let (coeffs, constant) = piece_affine(piece, xi);
                    lifted.add_epigraph_row(i, &coeffs, constant);
                }
            }
            lifted.minimize()
        }
        Recourse::Lp(lp) => {
            // Joint basic-feasible-solution scan over (x, y_1.., y_N).
            let n = ds.dim();
            let p = lp.num_y();
            let dim = n + scenarios.len() * p;
            let mut poly = decision_polyhedron(ds);
            for _ in 0..scenarios.len() {
                for j in 0..p {
                    poly.lower.push(lp.y_lower[j]);
                    poly.upper.push(f64::INFINITY);
                }
            }
            for row in &mut poly.rows {
                row.0.resize(dim, 0.0);
            }
            let mut cost = vec![0.0; dim];
            for (i, xi) in scenarios.iter().enumerate() {
                let y_base = n + i * p;
                for r in 0..lp.num_rows() {
                    let mut row = vec![0.0; dim];
                    for (j, &w) in lp.recourse_matrix[r].iter().enumerate() {
                        row[y_base + j] = w;
                    }
                    for (j, &t) in lp.tech_x[r].iter().enumerate() {
                        row[j] -= t;
                    }
                    let rhs = lp.rhs_const[r] + dot(&lp.tech_xi[r], xi);
                    match lp.senses[r] {
                        crate::milp::Sense::Le => poly.add_le(row, rhs),
                        crate::milp::Sense::Ge => {
                            poly.add_le(row.iter().map(|c| -c).collect(), -rhs)
                        }
                        crate::milp::Sense::Eq => poly.add_eq(row, rhs),
                    }
                }
                for j in 0..p {
                    cost[y_base + j] = gamma[i] * lp.obj[j];
                }
            }
            let (v, _) = poly.minimize(&cost, LIFTED_VERTEX_CAP)?;
            Ok(v)
        }
    }
}

fn scenario_route(
    problem: &DfoProblem,
    scenarios: &[Vec<f64>],
) -> Result<OracleValue, OracleError> {
    let poly = weight_polyhedron(&problem.ambiguity)
        .ok_or_else(|| OracleError::Unsupported("not a scenario polytope".into()))?;
    let weights = poly.enumerate(WEIGHT_VERTEX_CAP)?;
    if weights.vertices.is_empty() {
        return Err(OracleError::Infeasible("weight polytope has no vertices".into()));
    }
    let mut best = f64::INFINITY;
    for gamma in &weights.vertices {
        best = best.min(inner_scenario_min(problem, scenarios, gamma)?);
    }
    Ok(OracleValue::exact(
        best,
        format!("{} weight vertices x exact decision minimization", weights.vertices.len()),
    ))
}

fn l2_route(
    problem: &DfoProblem,
    scenarios: &[Vec<f64>],
    p0: &[f64],
    radius: f64,
) -> Result<OracleValue, OracleError> {
    if radius == 0.0 {
        let value = inner_scenario_min(problem, scenarios, p0)?;
        return Ok(OracleValue::exact(value, "singleton weight ball (SAA)"));
    }
    let n = scenarios.len() as f64;
    let qualifies = radius <= (1.0 / (n * (n - 1.0))).sqrt() + 1e-12;
    let concave = matches!(
        &problem.recourse,
        Recourse::Piecewise(pw) if pw.mode == RecourseMode::ConcaveMin
    );
    if !(qualifies && concave) {
        return Err(OracleError::Unsupported(
            "euclidean weight ball route needs a small radius and concave recourse".into(),
        ));
    }
    // Small radius keeps the minimizing weights nonnegative, so the inner
    // infimum has the closed form mean(v) - radius * ||v - mean(v) e||_2,
    // which is concave in x for concave piecewise values.
    let pw = match &problem.recourse {
        Recourse::Piecewise(pw) => pw,
        _ => unreachable!(),
    };
    let vertices = decision_vertices(&problem.decisions)?;
    let value = vertices
        .iter()
        .map(|x| {
            let v: Vec<f64> = scenarios.iter().map(|xi| pw.evaluate(x, xi)).collect();
            let mean = v.iter().sum::<f64>() / n;
            let dev = v.iter().map(|vi| (vi - mean).powi(2)).sum::<f64>().sqrt();
            mean - radius * dev
        })
        .min_by(f64::total_cmp)
        .ok_or_else(|| OracleError::Infeasible("decision set has no vertices".into()))?;
    Ok(OracleValue::exact(value, "decision-vertex scan (euclidean weight ball)"))
}

/// Coarse approximation: decision-box grid with exact inner values where
/// available. Only used for routes with no exact expansion.
fn grid_route(
    problem: &DfoProblem,
    centers: &[Vec<f64>],
    radius: f64,
    norm_p: NormP,
    points_per_dim: usize,
) -> Result<OracleValue, OracleError> {
    let ds = &problem.decisions;
    let pw = match &problem.recourse {
        Recourse::Piecewise(pw) => pw,
        _ => return Err(OracleError::Unsupported("grid route needs piecewise recourse".into())),
    };
    let n = ds.dim();
    if points_per_dim.pow(n as u32) > 2_000_000 {
        return Err(OracleError::CapExceeded("grid too large".into()));
    }
    let m = pw.xi_dim();
    let dirs = unit_directions(m, 64, norm_p);
    let mut best = f64::INFINITY;
    let mut idx = vec![0usize; n];
    loop {
        let x: Vec<f64> = (0..n)
            .map(|j| {
                let t = idx[j] as f64 / (points_per_dim - 1).max(1) as f64;
                ds.lower[j] + t * (ds.upper[j] - ds.lower[j])
            })
            .collect();
        if ds.contains(&x, 1e-9) {
            let mut total = 0.0;
            for c in centers {
                let mut inner = f64::INFINITY;
                for d in &dirs {
                    let xi: Vec<f64> = c.iter().zip(d).map(|(ci, di)| ci + radius * di).collect();
                    inner = inner.min(pw.evaluate(&x, &xi));
                }
                inner = inner.min(pw.evaluate(&x, c));
                total += inner;
            }
            best = best.min(total / centers.len() as f64);
        }
        let mut j = 0;
        loop {
            if j == n {
                return Ok(OracleValue {
                    value: best,
                    exact: false,
                    route: format!(
                        "grid approximation ({points_per_dim} points/dim, {} ball directions)",
                        dirs.len()
                    ),
                });
            }
            idx[j] += 1;
            if idx[j] < points_per_dim {
                break;
            }
            idx[j] = 0;
            j += 1;
        }
    }
}

fn unit_directions(m: usize, count: usize, norm_p: NormP) -> Vec<Vec<f64>> {
    use rand::prelude::*;
    use rand_chacha::ChaCha8Rng;
    let mut rng = ChaCha8Rng::seed_from_u64(2024);
    let mut dirs = Vec::with_capacity(count);
    for _ in 0..count {
        let raw: Vec<f64> = (0..m).map(|_| rng.random_range(-1.0..1.0f64)).collect();
        let norm = norm_p.norm(&raw);
        if norm > 1e-9 {
            dirs.push(raw.iter().map(|v| v / norm).collect());
        }
    }
    dirs
}

/// Direct inner infimum of a convex piecewise recourse over one ball at a
/// fixed decision, by vertex scan of the lifted `(xi, eta)` polytope.
/// The reference side of the dual-reformulation cross-check.
pub fn direct_inner_inf_convex(
    pw: &PiecewiseAffineRecourse,
    center: &[f64],
    radius: f64,
    norm_p: NormP,
    x: &[f64],
) -> Result<f64, OracleError> {
    if !norm_p.is_polyhedral() {
        return Err(OracleError::Unsupported("polyhedral balls only".into()));
    }
    let m = pw.xi_dim();
    // Layout: xi (m) [+ t (m) for L1] | eta.
    let with_t = matches!(norm_p, NormP::One);
    let dim = if with_t { 2 * m + 1 } else { m + 1 };
    let mut lo = f64::INFINITY;
    let mut hi = f64::NEG_INFINITY;
    let a_vals: Vec<(Vec<f64>, f64)> = pw
        .pieces
        .iter()
        .map(|p| (p.a.apply(x), p.b.apply(x)[0]))
        .collect();
    for (a, b) in &a_vals {
        let span: f64 = a.iter().map(|ai| ai.abs()).sum::<f64>() * radius;
        let base = dot(center, a) + b;
        lo = lo.min(base - span);
        hi = hi.max(base + span);
    }
    let mut poly = Polyhedron {
        rows: Vec::new(),
        lower: center.iter().map(|c| c - radius).collect(),
        upper: center.iter().map(|c| c + radius).collect(),
        label: "inner ball".into(),
    };
    if with_t {
        for _ in 0..m {
            poly.lower.push(0.0);
            poly.upper.push(radius);
        }
    }
    poly.lower.push(lo - 1.0);
    poly.upper.push(hi + 1.0);

    if with_t {
        let mut sum_row = vec![0.0; dim];
        for j in 0..m {
            let mut r1 = vec![0.0; dim];
            r1[j] = 1.0;
            r1[m + j] = -1.0;
            poly.add_le(r1, center[j]);
            let mut r2 = vec![0.0; dim];
            r2[j] = -1.0;
            r2[m + j] = -1.0;
            poly.add_le(r2, -center[j]);
            sum_row[m + j] = 1.0;
        }
        poly.add_le(sum_row, radius);
    }
    for (a, b) in &a_vals {
        let mut row = vec![0.0; dim];
        row[..m].copy_from_slice(a);
        row[dim - 1] = -1.0;
        poly.add_le(row, -b);
    }
    let mut cost = vec![0.0; dim];
    cost[dim - 1] = 1.0;
    let (v, _) = poly.minimize(&cost, LIFTED_VERTEX_CAP)?;
    Ok(v)
}

/// Optimism-blend reference value over scenario ambiguity with a convex
/// piecewise recourse: for each favorable weight vertex, the blend of the
/// weighted value and the robust envelope is linear over a lifted polytope
/// whose vertices carry the optimum.
fn hurwicz_route(
    problem: &DfoProblem,
    scenarios: &[Vec<f64>],
    lambda: f64,
) -> Result<OracleValue, OracleError> {
    let pw = match &problem.recourse {
        Recourse::Piecewise(pw) if pw.mode == RecourseMode::ConvexMax => pw,
        _ => {
            return Err(OracleError::Unsupported(
                "blend route needs a convex piecewise recourse".into(),
            ))
        }
    };
    let ds = &problem.decisions;
    let n = ds.dim();
    let n_s = scenarios.len();
    let weights = weight_polyhedron(&problem.ambiguity)
        .ok_or_else(|| OracleError::Unsupported("not a scenario polytope".into()))?
        .enumerate(WEIGHT_VERTEX_CAP)?;
    if weights.vertices.is_empty() {
        return Err(OracleError::Infeasible("weight polytope has no vertices".into()));
    }

    let nu_bounds: Vec<(f64, f64)> = scenarios
        .iter()
        .map(|xi| {
            let mut lo = f64::INFINITY;
            let mut hi = f64::NEG_INFINITY;
            for p in &pw.pieces {
                let (l, u) = piece_value_range(p, xi, ds);
                lo = lo.min(l);
                hi = hi.max(u);
            }
            (lo, hi)
        })
        .collect();
    let eta_lo = nu_bounds.iter().map(|b| b.0).fold(f64::INFINITY, f64::min);
    let eta_hi = nu_bounds.iter().map(|b| b.1).fold(f64::NEG_INFINITY, f64::max);

    let mut best = f64::INFINITY;
    for gamma in &weights.vertices {
        // Layout: x | nu (N) | eta.
        let mut poly = decision_polyhedron(ds);
        for &(lo, hi) in &nu_bounds {
            poly.lower.push(lo - 1.0);
            poly.upper.push(hi + 1.0);
        }
        poly.lower.push(eta_lo - 1.0);
        poly.upper.push(eta_hi + 1.0);
        let dim = n + n_s + 1;
        for row in &mut poly.rows {
            row.0.resize(dim, 0.0);
        }
        for (i, xi) in scenarios.iter().enumerate() {
            for piece in &pw.pieces {
                let (coeffs, constant) = piece_affine(piece, xi);
                let mut row = vec![0.0; dim];
                row[..n].copy_from_slice(&coeffs);
                row[n + i] = -1.0;
                poly.add_le(row, -constant);
            }
        }
        // Robust envelope: eta dominates every weight vertex's value.
        for gp in &weights.vertices {
            let mut row = vec![0.0; dim];
            for (i, &g) in gp.iter().enumerate() {
                row[n + i] = g;
            }
            row[dim - 1] = -1.0;
            poly.add_le(row, 0.0);
        }
        let mut cost = vec![0.0; dim];
        for (i, &g) in gamma.iter().enumerate() {
            cost[n + i] = lambda * g;
        }
        cost[dim - 1] = 1.0 - lambda;
        let (v, _) = poly.minimize(&cost, LIFTED_VERTEX_CAP)?;
        best = best.min(v);
    }
    Ok(OracleValue::exact(
        best,
        format!("{} weight vertices x lifted blend scan", weights.vertices.len()),
    ))
}

/// Ground-truth optimal value of a problem, by the strongest route its
/// structure admits. `exact` is false only for the grid fallback.
pub fn oracle_value(problem: &DfoProblem) -> Result<OracleValue, OracleError> {
    if let Some(lambda) = problem.hurwicz_lambda {
        if let AmbiguitySet::FinitePolyhedral { scenarios, .. }
        | AmbiguitySet::IntervalPolyhedral { scenarios, .. } = &problem.ambiguity
        {
            return hurwicz_route(problem, scenarios, lambda);
        }
    }
    match &problem.ambiguity {
        AmbiguitySet::SupportBall { center, radius, norm_p } => match &problem.recourse {
            Recourse::Piecewise(pw) => match pw.mode {
                RecourseMode::ConcaveMin => ball_concave_route(
                    &problem.decisions,
                    pw,
                    std::slice::from_ref(center),
                    *radius,
                    *norm_p,
                ),
                RecourseMode::ConvexMax => {
                    if pw.num_pieces() == 1 {
                        return ball_concave_route(
                            &problem.decisions,
                            pw,
                            std::slice::from_ref(center),
                            *radius,
                            *norm_p,
                        );
                    }
                    ball_convex_route(
                        &problem.decisions,
                        pw,
                        std::slice::from_ref(center),
                        *radius,
                        *norm_p,
                    )
                    .or_else(|e| match e {
                        OracleError::Unsupported(_) => {
                            grid_route(problem, std::slice::from_ref(center), *radius, *norm_p, 21)
                        }
                        other => Err(other),
                    })
                }
            },
            Recourse::Lp(_) => Err(OracleError::Unsupported(
                "LP recourse requires a scenario-based ambiguity set".into(),
            )),
        },
        AmbiguitySet::WassersteinInf { samples, radius, norm_p } => match &problem.recourse {
            Recourse::Piecewise(pw) => match pw.mode {
                RecourseMode::ConcaveMin => {
                    ball_concave_route(&problem.decisions, pw, samples, *radius, *norm_p)
                }
                RecourseMode::ConvexMax => {
                    if pw.num_pieces() == 1 {
                        return ball_concave_route(
                            &problem.decisions,
                            pw,
                            samples,
                            *radius,
                            *norm_p,
                        );
                    }
                    ball_convex_route(&problem.decisions, pw, samples, *radius, *norm_p).or_else(
                        |e| match e {
                            OracleError::Unsupported(_) => {
                                grid_route(problem, samples, *radius, *norm_p, 21)
                            }
                            other => Err(other),
                        },
                    )
                }
            },
            Recourse::Lp(_) => Err(OracleError::Unsupported(
                "LP recourse requires a scenario-based ambiguity set".into(),
            )),
        },
        AmbiguitySet::FinitePolyhedral { scenarios, .. }
        | AmbiguitySet::IntervalPolyhedral { scenarios, .. } => scenario_route(problem, scenarios),
        AmbiguitySet::L2Ball { scenarios, p0, radius } => {
            l2_route(problem, scenarios, p0, *radius)
        }
    }
}

#[cfg(test)]
mod tests;
