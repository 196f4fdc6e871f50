//! Domain types for favorable-optimization instances, validation of the
//! standing assumptions, and recourse evaluation.
//!
//! Everything here is immutable after construction and safe to share across
//! workers; all operations are pure.

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::linalg::{dot, norm_inf, norm_p};
use crate::milp::{solve_lp, LinearProgram, Sense, Solution, SolverConfig, Status};

/// Absolute/relative comparison tolerance used throughout: values are
/// "equal" within `1e-6` absolute or `1e-9` relative, whichever is looser.
pub const VALUE_ABS_TOL: f64 = 1e-6;
pub const VALUE_REL_TOL: f64 = 1e-9;

/// Slack applied to inequality rows when checking that a polytope has an
/// (approximate) relative interior.
pub const INTERIOR_SLACK: f64 = 1e-7;

pub fn values_close(a: f64, b: f64) -> bool {
    let diff = (a - b).abs();
    diff <= VALUE_ABS_TOL.max(VALUE_REL_TOL * a.abs().max(b.abs()))
}

/// A matrix-plus-offset map `x -> M x + c`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AffineMap {
    /// Row-major; rows = output dimension, cols = decision dimension.
    pub matrix: Vec<Vec<f64>>,
    pub offset: Vec<f64>,
}

impl AffineMap {
    pub fn new(matrix: Vec<Vec<f64>>, offset: Vec<f64>) -> Self {
        AffineMap { matrix, offset }
    }

    /// The constant map `x -> c`.
    pub fn constant(offset: Vec<f64>, in_dim: usize) -> Self {
        let matrix = vec![vec![0.0; in_dim]; offset.len()];
        AffineMap { matrix, offset }
    }

    pub fn identity(dim: usize) -> Self {
        let mut matrix = vec![vec![0.0; dim]; dim];
        for (i, row) in matrix.iter_mut().enumerate() {
            row[i] = 1.0;
        }
        AffineMap { matrix, offset: vec![0.0; dim] }
    }

    pub fn out_dim(&self) -> usize {
        self.offset.len()
    }

    pub fn in_dim(&self) -> usize {
        self.matrix.first().map_or(0, |r| r.len())
    }

    pub fn apply(&self, x: &[f64]) -> Vec<f64> {
        self.matrix
            .iter()
            .zip(&self.offset)
            .map(|(row, c)| dot(row, x) + c)
            .collect()
    }

    /// Row `i` as (coefficients, offset).
    pub fn row(&self, i: usize) -> (&[f64], f64) {
        (&self.matrix[i], self.offset[i])
    }

    /// True when no row depends on the input (the map is a constant vector).
    pub fn is_constant(&self) -> bool {
        self.matrix.iter().all(|row| row.iter().all(|&v| v == 0.0))
    }

    pub fn check(&self, what: &str, report: &mut ValidationReport) {
        if self.matrix.len() != self.offset.len() {
            report.push(format!(
                "{what}: matrix has {} rows but offset has {} entries",
                self.matrix.len(),
                self.offset.len()
            ));
        }
        let cols = self.in_dim();
        for (i, row) in self.matrix.iter().enumerate() {
            if row.len() != cols {
                report.push(format!("{what}: row {i} has ragged width"));
            }
            if row.iter().any(|v| !v.is_finite()) {
                report.push(format!("{what}: row {i} has non-finite entries"));
            }
        }
        if self.offset.iter().any(|v| !v.is_finite()) {
            report.push(format!("{what}: offset has non-finite entries"));
        }
    }
}

/// Componentwise image bounds of an affine map over a box: for every
/// `x` in `[l, u]`, `map(x)` lies in `[lhat, uhat]`, and each bound is
/// attained at some box vertex.
pub fn propagate_bounds(map: &AffineMap, l: &[f64], u: &[f64]) -> (Vec<f64>, Vec<f64>) {
    let mut lhat = Vec::with_capacity(map.out_dim());
    let mut uhat = Vec::with_capacity(map.out_dim());
    for (row, &c) in map.matrix.iter().zip(&map.offset) {
        let mut lo = c;
        let mut hi = c;
        for (j, &a) in row.iter().enumerate() {
            lo += (a * l[j]).min(a * u[j]);
            hi += (a * l[j]).max(a * u[j]);
        }
        lhat.push(lo);
        uhat.push(hi);
    }
    (lhat, uhat)
}

/// The decision polytope `{x : D x <= d, l <= x <= u}`. The box is
/// mandatory, so compactness holds by construction.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DecisionSet {
    pub ineq_matrix: Vec<Vec<f64>>,
    pub ineq_rhs: Vec<f64>,
    pub lower: Vec<f64>,
    pub upper: Vec<f64>,
}

impl DecisionSet {
    pub fn box_only(lower: Vec<f64>, upper: Vec<f64>) -> Self {
        DecisionSet { ineq_matrix: Vec::new(), ineq_rhs: Vec::new(), lower, upper }
    }

    pub fn dim(&self) -> usize {
        self.lower.len()
    }

    pub fn contains(&self, x: &[f64], tol: f64) -> bool {
        if x.len() != self.dim() {
            return false;
        }
        for (j, &v) in x.iter().enumerate() {
            if v < self.lower[j] - tol || v > self.upper[j] + tol {
                return false;
            }
        }
        self.ineq_matrix
            .iter()
            .zip(&self.ineq_rhs)
            .all(|(row, &rhs)| dot(row, x) <= rhs + tol)
    }

    /// Add the membership rows for pre-registered decision variables (which
    /// must already carry the box bounds) to a program under construction.
    pub fn add_rows(&self, lp: &mut LinearProgram, vars: &[usize]) {
        for (i, (row, &rhs)) in self.ineq_matrix.iter().zip(&self.ineq_rhs).enumerate() {
            let coeffs: Vec<(usize, f64)> = row
                .iter()
                .enumerate()
                .filter(|&(_, &c)| c != 0.0)
                .map(|(j, &c)| (vars[j], c))
                .collect();
            lp.add_row(format!("xdom{i}"), coeffs, Sense::Le, rhs);
        }
    }

    /// LP feasibility of the polytope with `slack` subtracted from every
    /// inequality row (an operational stand-in for a relative interior).
    pub fn feasible_with_slack(&self, slack: f64) -> bool {
        let n = self.dim();
        let mut lp = LinearProgram::new("decision-feas");
        let vars: Vec<usize> = (0..n)
            .map(|j| lp.add_var(format!("x{j}"), self.lower[j], self.upper[j], 0.0, false))
            .collect();
        for (row, &rhs) in self.ineq_matrix.iter().zip(&self.ineq_rhs) {
            let coeffs: Vec<(usize, f64)> = row
                .iter()
                .enumerate()
                .filter(|&(_, &c)| c != 0.0)
                .map(|(j, &c)| (vars[j], c))
                .collect();
            lp.add_row("r", coeffs, Sense::Le, rhs - slack);
        }
        matches!(
            solve_lp(&lp, &SolverConfig::default()).map(|s| s.status),
            Ok(Status::Optimal)
        )
    }
}

/// Piece selection mode of a piecewise affine recourse.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum RecourseMode {
    /// `Q(x, xi) = min_k [xi' a_k(x) + b_k(x)]`.
    ConcaveMin,
    /// `Q(x, xi) = max_k [xi' a_k(x) + b_k(x)]`.
    ConvexMax,
}

/// One piece of a piecewise affine recourse: `xi' a(x) + b(x)` with
/// `a : R^n -> R^m` and scalar-valued `b`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Piece {
    pub a: AffineMap,
    pub b: AffineMap,
}

impl Piece {
    /// `xi' a(x) + b(x)` at a fixed `xi`, as (x-coefficients, constant).
    pub fn combined(&self, xi: &[f64]) -> (Vec<f64>, f64) {
        let n = self.a.in_dim();
        let mut coeffs = vec![0.0; n];
        let mut constant = self.b.offset[0];
        for (j, &c) in self.b.matrix[0].iter().enumerate() {
            coeffs[j] += c;
        }
        for (i, (row, off)) in self.a.matrix.iter().zip(&self.a.offset).enumerate() {
            let z = xi[i];
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

    /// Value range of `xi' a(x) + b(x)` over a box.
    pub fn value_range(&self, xi: &[f64], lower: &[f64], upper: &[f64]) -> (f64, f64) {
        let (coeffs, constant) = self.combined(xi);
        let map = AffineMap { matrix: vec![coeffs], offset: vec![constant] };
        let (l, u) = propagate_bounds(&map, lower, upper);
        (l[0], u[0])
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PiecewiseAffineRecourse {
    pub pieces: Vec<Piece>,
    pub mode: RecourseMode,
    /// Optional partition of the xi indices into one group per piece, for
    /// the block-structured compilers. Piece k's a-map must have zero rows
    /// outside group k. Empty groups are allowed.
    pub block_structure: Option<Vec<Vec<usize>>>,
}

impl PiecewiseAffineRecourse {
    pub fn num_pieces(&self) -> usize {
        self.pieces.len()
    }

    pub fn xi_dim(&self) -> usize {
        self.pieces.first().map_or(0, |p| p.a.out_dim())
    }

    pub fn evaluate(&self, x: &[f64], xi: &[f64]) -> f64 {
        let vals = self.pieces.iter().map(|p| {
            let a = p.a.apply(x);
            dot(xi, &a) + p.b.apply(x)[0]
        });
        match self.mode {
            RecourseMode::ConcaveMin => vals.fold(f64::INFINITY, f64::min),
            RecourseMode::ConvexMax => vals.fold(f64::NEG_INFINITY, f64::max),
        }
    }

    /// All pieces share one a-map.
    pub fn shared_a(&self) -> bool {
        let first = &self.pieces[0].a;
        self.pieces.iter().all(|p| p.a == *first)
    }

    /// Every a-map is a constant vector.
    pub fn constant_a(&self) -> bool {
        self.pieces.iter().all(|p| p.a.is_constant())
    }
}

/// Row sense for the second-stage constraints of an LP recourse.
pub type LpSense = Sense;

/// A second-stage linear program: given `(x, xi)`,
/// `Q(x, xi) = min_y { obj' y : W y  (sense)  rhs_const + T_x x + T_xi xi,
/// y >= y_lower }`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LpRecourse {
    pub obj: Vec<f64>,
    pub recourse_matrix: Vec<Vec<f64>>,
    pub tech_x: Vec<Vec<f64>>,
    pub tech_xi: Vec<Vec<f64>>,
    pub rhs_const: Vec<f64>,
    pub senses: Vec<LpSense>,
    pub y_lower: Vec<f64>,
}

impl LpRecourse {
    pub fn num_rows(&self) -> usize {
        self.rhs_const.len()
    }

    pub fn num_y(&self) -> usize {
        self.obj.len()
    }

    pub fn xi_dim(&self) -> usize {
        self.tech_xi.first().map_or(0, |r| r.len())
    }

    pub fn x_dim(&self) -> usize {
        self.tech_x.first().map_or(0, |r| r.len())
    }

    fn build_lp(&self, x: &[f64], xi: &[f64]) -> LinearProgram {
        let mut lp = LinearProgram::new("recourse");
        let ys: Vec<usize> = (0..self.num_y())
            .map(|j| lp.add_var(format!("y{j}"), self.y_lower[j], f64::INFINITY, self.obj[j], false))
            .collect();
        for i in 0..self.num_rows() {
            let rhs = self.rhs_const[i] + dot(&self.tech_x[i], x) + dot(&self.tech_xi[i], xi);
            let coeffs: Vec<(usize, f64)> = self.recourse_matrix[i]
                .iter()
                .enumerate()
                .filter(|&(_, &c)| c != 0.0)
                .map(|(j, &c)| (ys[j], c))
                .collect();
            lp.add_row(format!("rc{i}"), coeffs, self.senses[i], rhs);
        }
        lp
    }

    pub fn evaluate(&self, x: &[f64], xi: &[f64]) -> Result<f64, RecourseError> {
        let lp = self.build_lp(x, xi);
        let sol: Solution = solve_lp(&lp, &SolverConfig::default())
            .map_err(|e| RecourseError::Numerical(e.to_string()))?;
        match sol.status {
            Status::Optimal => Ok(sol.objective),
            Status::Infeasible => Err(RecourseError::InfeasibleRecourse),
            Status::Unbounded => Err(RecourseError::UnboundedRecourse),
            other => Err(RecourseError::Numerical(format!("recourse LP stopped at {other:?}"))),
        }
    }

    /// Register the second-stage block inside a larger program: adds the `y`
    /// variables (objective-weighted by `obj_scale`) and the constraint rows
    /// at a fixed scenario `xi`, linking to existing decision variables.
    pub fn inline_into(
        &self,
        lp: &mut LinearProgram,
        x_vars: &[usize],
        xi: &[f64],
        obj_scale: f64,
        tag: &str,
    ) -> Vec<usize> {
        let ys: Vec<usize> = (0..self.num_y())
            .map(|j| {
                lp.add_var(
                    format!("y{tag}_{j}"),
                    self.y_lower[j],
                    f64::INFINITY,
                    self.obj[j] * obj_scale,
                    false,
                )
            })
            .collect();
        for i in 0..self.num_rows() {
            let rhs = self.rhs_const[i] + dot(&self.tech_xi[i], xi);
            let mut coeffs: Vec<(usize, f64)> = self.recourse_matrix[i]
                .iter()
                .enumerate()
                .filter(|&(_, &c)| c != 0.0)
                .map(|(j, &c)| (ys[j], c))
                .collect();
            for (j, &c) in self.tech_x[i].iter().enumerate() {
                if c != 0.0 {
                    coeffs.push((x_vars[j], -c));
                }
            }
            lp.add_row(format!("rc{tag}_{i}"), coeffs, self.senses[i], rhs);
        }
        ys
    }
}

/// The recourse function `Q`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub enum Recourse {
    Piecewise(PiecewiseAffineRecourse),
    Lp(LpRecourse),
}

impl Recourse {
    pub fn xi_dim(&self) -> usize {
        match self {
            Recourse::Piecewise(p) => p.xi_dim(),
            Recourse::Lp(l) => l.xi_dim(),
        }
    }
}

/// Norm index `p` of a ball; `One` and `Inf` are the polyhedral cases.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub enum NormP {
    One,
    Real(f64),
    Inf,
}

impl NormP {
    /// Dual-norm value of a fixed vector.
    pub fn dual_norm(&self, v: &[f64]) -> f64 {
        match self {
            NormP::One => norm_inf(v),
            NormP::Inf => norm_p(v, 1.0),
            NormP::Real(p) => norm_p(v, p / (p - 1.0)),
        }
    }

    pub fn norm(&self, v: &[f64]) -> f64 {
        match self {
            NormP::One => norm_p(v, 1.0),
            NormP::Inf => norm_inf(v),
            NormP::Real(p) => norm_p(v, *p),
        }
    }

    pub fn is_polyhedral(&self) -> bool {
        matches!(self, NormP::One | NormP::Inf)
    }

    pub fn label(&self) -> String {
        match self {
            NormP::One => "1".into(),
            NormP::Inf => "inf".into(),
            NormP::Real(p) => format!("{p}"),
        }
    }
}

/// The ambiguity set over distributions of the uncertainty.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub enum AmbiguitySet {
    /// All distributions supported on the norm ball around `center`.
    SupportBall { center: Vec<f64>, radius: f64, norm_p: NormP },
    /// Essential-supremum transport ball of radius `radius` around the
    /// empirical distribution of `samples`.
    WassersteinInf { samples: Vec<Vec<f64>>, radius: f64, norm_p: NormP },
    /// Weights on fixed scenarios restricted to `{p >= 0, D p <= d, e'p = 1}`.
    FinitePolyhedral { scenarios: Vec<Vec<f64>>, d_matrix: Vec<Vec<f64>>, d_rhs: Vec<f64> },
    /// Weights `p0 + psi` with integer-rational perturbation bounds
    /// `lbar/q <= psi <= ubar/q` summing to zero.
    IntervalPolyhedral {
        scenarios: Vec<Vec<f64>>,
        p0: Vec<f64>,
        lbar: Vec<i64>,
        ubar: Vec<i64>,
        q: u64,
    },
    /// Weights within Euclidean distance `radius` of the uniform vector.
    L2Ball { scenarios: Vec<Vec<f64>>, p0: Vec<f64>, radius: f64 },
}

impl AmbiguitySet {
    /// Dimension of the uncertainty support.
    pub fn xi_dim(&self) -> usize {
        match self {
            AmbiguitySet::SupportBall { center, .. } => center.len(),
            AmbiguitySet::WassersteinInf { samples, .. } => {
                samples.first().map_or(0, |s| s.len())
            }
            AmbiguitySet::FinitePolyhedral { scenarios, .. }
            | AmbiguitySet::IntervalPolyhedral { scenarios, .. }
            | AmbiguitySet::L2Ball { scenarios, .. } => scenarios.first().map_or(0, |s| s.len()),
        }
    }

    pub fn scenario_count(&self) -> Option<usize> {
        match self {
            AmbiguitySet::FinitePolyhedral { scenarios, .. }
            | AmbiguitySet::IntervalPolyhedral { scenarios, .. }
            | AmbiguitySet::L2Ball { scenarios, .. } => Some(scenarios.len()),
            _ => None,
        }
    }

    pub fn is_scenario_based(&self) -> bool {
        self.scenario_count().is_some()
    }

    pub fn kind_name(&self) -> &'static str {
        match self {
            AmbiguitySet::SupportBall { .. } => "support_ball",
            AmbiguitySet::WassersteinInf { .. } => "wasserstein_inf",
            AmbiguitySet::FinitePolyhedral { .. } => "finite_polyhedral",
            AmbiguitySet::IntervalPolyhedral { .. } => "interval_polyhedral",
            AmbiguitySet::L2Ball { .. } => "l2_ball",
        }
    }
}

/// A full problem instance.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DfoProblem {
    pub decisions: DecisionSet,
    pub recourse: Recourse,
    pub ambiguity: AmbiguitySet,
    pub hurwicz_lambda: Option<f64>,
}

#[derive(Debug, Clone, Error)]
pub enum RecourseError {
    #[error("recourse LP infeasible at the given (x, xi)")]
    InfeasibleRecourse,
    #[error("recourse LP unbounded at the given (x, xi)")]
    UnboundedRecourse,
    #[error("dimension mismatch: {0}")]
    Dimension(String),
    #[error("numerical failure: {0}")]
    Numerical(String),
}

/// Outcome of `validate`: the list of violated invariants, empty when the
/// instance satisfies every check.
#[derive(Debug, Clone, Default, Serialize, Deserialize)]
pub struct ValidationReport {
    pub violations: Vec<String>,
}

impl ValidationReport {
    pub fn push(&mut self, v: String) {
        self.violations.push(v);
    }

    pub fn is_ok(&self) -> bool {
        self.violations.is_empty()
    }
}

impl std::fmt::Display for ValidationReport {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        if self.violations.is_empty() {
            write!(f, "ok")
        } else {
            for v in &self.violations {
                writeln!(f, "- {v}")?;
            }
            Ok(())
        }
    }
}

/// Check every type invariant of a problem, including the LP-backed
/// nonemptiness checks. Reporting only: never fails.
pub fn validate(problem: &DfoProblem) -> ValidationReport {
    let mut report = ValidationReport::default();
    let ds = &problem.decisions;
    let n = ds.dim();

    if ds.upper.len() != n {
        report.push("decision bounds have mismatched lengths".into());
        return report;
    }
    let mut bounds_ok = true;
    for j in 0..n {
        if !(ds.lower[j].is_finite() && ds.upper[j].is_finite()) {
            report.push(format!("decision bounds for x{j} must be finite"));
            bounds_ok = false;
        }
        if ds.lower[j] > ds.upper[j] {
            report.push(format!("l <= u fails at x{j}"));
            bounds_ok = false;
        }
    }
    if ds.ineq_matrix.len() != ds.ineq_rhs.len() {
        report.push("decision inequality matrix/rhs length mismatch".into());
        bounds_ok = false;
    }
    for (i, row) in ds.ineq_matrix.iter().enumerate() {
        if row.len() != n {
            report.push(format!("decision inequality row {i} has width {} != {n}", row.len()));
            bounds_ok = false;
        }
    }
    if bounds_ok && !ds.feasible_with_slack(INTERIOR_SLACK) {
        report.push("decision polytope empty (no interior point found)".into());
    }

    let m_ambig = problem.ambiguity.xi_dim();
    match &problem.recourse {
        Recourse::Piecewise(pw) => {
            if pw.pieces.is_empty() {
                report.push("piecewise recourse needs at least one piece".into());
            }
            let m = pw.xi_dim();
            for (k, piece) in pw.pieces.iter().enumerate() {
                piece.a.check(&format!("piece {k} a-map"), &mut report);
                piece.b.check(&format!("piece {k} b-map"), &mut report);
                if piece.a.out_dim() != m {
                    report.push(format!("piece {k} a-map output dim {} != {m}", piece.a.out_dim()));
                }
                if piece.b.out_dim() != 1 {
                    report.push(format!("piece {k} b-map must be scalar-valued"));
                }
                if piece.a.in_dim() != n || piece.b.in_dim() != n {
                    report.push(format!("piece {k} maps must take {n} decision vars"));
                }
            }
            if let Some(groups) = &pw.block_structure {
                if groups.len() != pw.pieces.len() {
                    report.push("block structure must have one group per piece".into());
                }
                let mut seen = vec![false; m];
                let mut total = 0usize;
                for (k, group) in groups.iter().enumerate() {
                    for &idx in group {
                        if idx >= m {
                            report.push(format!("block {k} references xi index {idx} >= {m}"));
                        } else if seen[idx] {
                            report.push(format!("xi index {idx} appears in more than one block"));
                        } else {
                            seen[idx] = true;
                        }
                        total += 1;
                    }
                }
                if total != m || !seen.iter().all(|&s| s) {
                    report.push(format!("blocks must partition all {m} xi indices"));
                }
                for (k, piece) in pw.pieces.iter().enumerate() {
                    if k >= groups.len() {
                        break;
                    }
                    for i in 0..piece.a.out_dim().min(m) {
                        let in_group = groups[k].contains(&i);
                        let (row, off) = piece.a.row(i);
                        let zero = row.iter().all(|&v| v == 0.0) && off == 0.0;
                        if !in_group && !zero {
                            report.push(format!(
                                "piece {k} a-map row {i} nonzero outside its block"
                            ));
                        }
                    }
                }
            }
            if m != m_ambig {
                report.push(format!(
                    "recourse xi dimension {m} != ambiguity support dimension {m_ambig}"
                ));
            }
        }
        Recourse::Lp(lp) => {
            let rows = lp.num_rows();
            if lp.recourse_matrix.len() != rows
                || lp.tech_x.len() != rows
                || lp.tech_xi.len() != rows
                || lp.senses.len() != rows
            {
                report.push("LP recourse row arrays have mismatched lengths".into());
            } else {
                if lp.x_dim() != n && rows > 0 {
                    report.push(format!("LP recourse tech_x width {} != {n}", lp.x_dim()));
                }
                if lp.xi_dim() != m_ambig && rows > 0 {
                    report.push(format!(
                        "LP recourse tech_xi width {} != ambiguity dimension {m_ambig}",
                        lp.xi_dim()
                    ));
                }
                if lp.y_lower.len() != lp.num_y() {
                    report.push("LP recourse y_lower length mismatch".into());
                }
            }
            if !problem.ambiguity.is_scenario_based() {
                report.push(
                    "LP recourse is only permitted with scenario-based ambiguity sets".into(),
                );
            } else if report.is_ok() {
                spot_check_lp_recourse(problem, lp, &mut report);
            }
        }
    }

    validate_ambiguity(&problem.ambiguity, &mut report);

    if let Some(lambda) = problem.hurwicz_lambda {
        if !(0.0..=1.0).contains(&lambda) || !lambda.is_finite() {
            report.push(format!("hurwicz lambda {lambda} outside [0, 1]"));
        }
    }

    report
}

fn validate_ambiguity(ambiguity: &AmbiguitySet, report: &mut ValidationReport) {
    match ambiguity {
        AmbiguitySet::SupportBall { center, radius, .. } => {
            if *radius < 0.0 || !radius.is_finite() {
                report.push(format!("ball radius {radius} must be nonnegative"));
            }
            if center.iter().any(|v| !v.is_finite()) {
                report.push("ball center has non-finite entries".into());
            }
        }
        AmbiguitySet::WassersteinInf { samples, radius, .. } => {
            if samples.is_empty() {
                report.push("empirical sample set is empty".into());
            }
            if *radius < 0.0 || !radius.is_finite() {
                report.push(format!("transport radius {radius} must be nonnegative"));
            }
            let m = samples.first().map_or(0, |s| s.len());
            if samples.iter().any(|s| s.len() != m) {
                report.push("samples have ragged dimensions".into());
            }
        }
        AmbiguitySet::FinitePolyhedral { scenarios, d_matrix, d_rhs } => {
            let n_s = scenarios.len();
            if n_s == 0 {
                report.push("scenario list is empty".into());
            }
            if d_matrix.len() != d_rhs.len() {
                report.push("weight polytope matrix/rhs mismatch".into());
                return;
            }
            for (i, row) in d_matrix.iter().enumerate() {
                if row.len() != n_s {
                    report.push(format!("weight row {i} has width {} != {n_s}", row.len()));
                    return;
                }
            }
            if n_s > 0 && !weight_polytope_feasible(d_matrix, d_rhs, n_s) {
                report.push("ambiguity polytope empty".into());
            }
        }
        AmbiguitySet::IntervalPolyhedral { scenarios, p0, lbar, ubar, q } => {
            let n_s = scenarios.len();
            if p0.len() != n_s || lbar.len() != n_s || ubar.len() != n_s {
                report.push("interval ambiguity arrays must match the scenario count".into());
                return;
            }
            if *q == 0 {
                report.push("denominator q must be positive".into());
                return;
            }
            let qf = *q as f64;
            if p0.iter().any(|&v| v < 0.0) {
                report.push("nominal weights must be nonnegative".into());
            }
            let total: f64 = p0.iter().sum();
            if (total - 1.0).abs() > 1e-9 {
                report.push(format!("nominal weights sum to {total}, not 1"));
            }
            for i in 0..n_s {
                if (lbar[i] as f64) / qf < -p0[i] - 1e-12 {
                    report.push(format!("lower perturbation at {i} dips below -p0"));
                }
                if lbar[i] > ubar[i] {
                    report.push(format!("lbar > ubar at {i}"));
                }
            }
            let sum_l: i64 = lbar.iter().sum();
            let sum_u: i64 = ubar.iter().sum();
            if sum_l > 0 || sum_u < 0 {
                report.push("interval perturbations cannot sum to zero".into());
            }
        }
        AmbiguitySet::L2Ball { scenarios, p0, radius } => {
            let n_s = scenarios.len();
            if p0.len() != n_s {
                report.push("nominal weight length must match the scenario count".into());
            }
            if *radius < 0.0 || !radius.is_finite() {
                report.push(format!("ball radius {radius} must be nonnegative"));
            }
            if n_s > 0 {
                let uniform = 1.0 / n_s as f64;
                if p0.iter().any(|&v| (v - uniform).abs() > 1e-9) {
                    report.push("nominal weights must be uniform (e/N)".into());
                }
            }
        }
    }
}

fn weight_polytope_feasible(d_matrix: &[Vec<f64>], d_rhs: &[f64], n: usize) -> bool {
    let mut lp = LinearProgram::new("weights-feas");
    let vars: Vec<usize> =
        (0..n).map(|j| lp.add_var(format!("p{j}"), 0.0, 1.0, 0.0, false)).collect();
    for (row, &rhs) in d_matrix.iter().zip(d_rhs) {
        let coeffs: Vec<(usize, f64)> = row
            .iter()
            .enumerate()
            .filter(|&(_, &c)| c != 0.0)
            .map(|(j, &c)| (vars[j], c))
            .collect();
        lp.add_row("d", coeffs, Sense::Le, rhs);
    }
    lp.add_row("mass", vars.iter().map(|&v| (v, 1.0)).collect(), Sense::Eq, 1.0);
    matches!(
        solve_lp(&lp, &SolverConfig::default()).map(|s| s.status),
        Ok(Status::Optimal)
    )
}

/// Spot-check recourse feasibility and boundedness on all scenarios crossed
/// with up to 64 decision-box vertices. Not a proof for every x.
fn spot_check_lp_recourse(problem: &DfoProblem, lp: &LpRecourse, report: &mut ValidationReport) {
    let ds = &problem.decisions;
    let n = ds.dim();
    let scenarios: Vec<Vec<f64>> = match &problem.ambiguity {
        AmbiguitySet::FinitePolyhedral { scenarios, .. }
        | AmbiguitySet::IntervalPolyhedral { scenarios, .. }
        | AmbiguitySet::L2Ball { scenarios, .. } => scenarios.clone(),
        _ => return,
    };
    let vertex_count = 1usize << n.min(6);
    let mut tested = 0;
    for mask in 0..vertex_count {
        if tested >= 64 {
            break;
        }
        let x: Vec<f64> = (0..n)
            .map(|j| if j < 6 && (mask >> j) & 1 == 1 { ds.upper[j] } else { ds.lower[j] })
            .collect();
        if !ds.contains(&x, 1e-9) {
            continue;
        }
        tested += 1;
        for (i, xi) in scenarios.iter().enumerate() {
            match lp.evaluate(&x, xi) {
                Ok(_) => {}
                Err(RecourseError::InfeasibleRecourse) => {
                    report.push(format!("recourse LP infeasible at box vertex {mask}, scenario {i}"));
                    return;
                }
                Err(RecourseError::UnboundedRecourse) => {
                    report.push(format!("recourse LP unbounded at box vertex {mask}, scenario {i}"));
                    return;
                }
                Err(e) => {
                    report.push(format!("recourse LP failed at scenario {i}: {e}"));
                    return;
                }
            }
        }
    }
}

/// Evaluate `Q(x, xi)`: exact for piecewise recourse, LP-solve for the LP
/// recourse.
pub fn evaluate_recourse(problem: &DfoProblem, x: &[f64], xi: &[f64]) -> Result<f64, RecourseError> {
    if x.len() != problem.decisions.dim() {
        return Err(RecourseError::Dimension(format!(
            "x has length {}, expected {}",
            x.len(),
            problem.decisions.dim()
        )));
    }
    if xi.len() != problem.recourse.xi_dim() {
        return Err(RecourseError::Dimension(format!(
            "xi has length {}, expected {}",
            xi.len(),
            problem.recourse.xi_dim()
        )));
    }
    match &problem.recourse {
        Recourse::Piecewise(pw) => Ok(pw.evaluate(x, xi)),
        Recourse::Lp(lp) => lp.evaluate(x, xi),
    }
}

#[cfg(test)]
mod tests;
