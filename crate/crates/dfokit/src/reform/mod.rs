//! Theorem-indexed compilers: classify an instance, then turn it into a
//! batch of LPs or a single MILP with per-block provenance.
//!
//! Every emitted constraint block is tagged with the identifier of the
//! result that produced it, refusals carry the citation of the matching
//! non-representability result plus a midpoint witness, and all big-M
//! constants are recorded in a ledger with their defining formulas.

mod finite;
mod hurwicz;
mod interval;
mod mccormick;
mod sdfo;
mod wasserstein;
mod witness;

pub use finite::{compile_finite_enumeration, compile_finite_kkt, scenario_value_bounds};
pub use hurwicz::{build_dro_program, build_saa_program, compile_hurwicz};
pub use interval::{compile_interval_polyhedral, interval_kappa};
pub use mccormick::{build_mccormick, build_reverse_norm_epigraph, McBounds};
pub use sdfo::{compile_concave_sdfo, compile_convex_sdfo, dual_inner_value_convex};
pub use wasserstein::compile_wasserstein;
pub use witness::{generate_witness, MidpointWitness, WitnessSet};

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::milp::{
    solve_batch, solve_milp, BatchError, LinearProgram, Sense, Solution, SolveError, SolverConfig,
    Status,
};
use crate::model::{AmbiguitySet, DecisionSet, DfoProblem, NormP, Recourse, RecourseMode};
use crate::oracle::OracleError;

/// Result identifiers used in verdicts, provenance and refusal messages.
pub mod citations {
    pub const THM_3_1_I: &str = "Thm 3.1(i)";
    pub const THM_3_1_II: &str = "Thm 3.1(ii)";
    pub const THM_3_3_CASE_2: &str = "Thm 3.3 case 2";
    pub const COR_THM_3_3: &str = "Cor of Thm 3.3";
    pub const LEMMA_2_2: &str = "Lemma 2.2";
    pub const DEF_2_3: &str = "Def 2.3";
    pub const LEMMA_3_2: &str = "Lemma 3.2";
    pub const THM_3_4_I: &str = "Thm 3.4(i)";
    pub const THM_3_4_II: &str = "Thm 3.4(ii)";
    pub const THM_3_4_III: &str = "Thm 3.4(iii)";
    pub const PROP_3_4: &str = "Prop 3.4";
    pub const PROP_3_5: &str = "Prop 3.5";
    pub const COR_3_6_I: &str = "Cor 3.6(i)";
    pub const COR_3_6_II: &str = "Cor 3.6(ii)";
    pub const THM_4_2: &str = "Thm 4.2";
    pub const COR_4_3: &str = "Cor 4.3";
    pub const THM_4_3: &str = "Thm 4.3";
    pub const THM_4_4: &str = "Thm 4.4";
    pub const COR_4_5: &str = "Cor 4.5";
    pub const COR_4_6: &str = "Cor 4.6";
    pub const COR_4_7: &str = "Cor 4.7";
    pub const PROP_4_8: &str = "Prop 4.8";
    pub const EQ_7: &str = "Eq (7)";
    pub const EQ_19: &str = "Eq (19)";
    pub const EQ_28: &str = "Eq (28)";
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum VerdictStatus {
    Tractable,
    Micpr,
    NotMicpr,
    Unknown,
}

impl std::fmt::Display for VerdictStatus {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            VerdictStatus::Tractable => write!(f, "Tractable"),
            VerdictStatus::Micpr => write!(f, "MICPR"),
            VerdictStatus::NotMicpr => write!(f, "NotMICPR"),
            VerdictStatus::Unknown => write!(f, "Unknown"),
        }
    }
}

/// Classification record: the strongest applicable label with its citation.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct Verdict {
    pub status: VerdictStatus,
    pub citation: String,
    pub detail: String,
}

impl Verdict {
    fn new(status: VerdictStatus, citation: &str, detail: impl Into<String>) -> Self {
        Verdict { status, citation: citation.into(), detail: detail.into() }
    }
}

impl std::fmt::Display for Verdict {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "{} ({}): {}", self.status, self.citation, self.detail)
    }
}

/// One recorded big-M constant.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct BigMEntry {
    pub name: String,
    pub value: f64,
    pub formula: String,
    pub citation: String,
}

#[derive(Debug, Clone, Default, Serialize, Deserialize)]
pub struct BigMLedger {
    pub entries: Vec<BigMEntry>,
}

impl BigMLedger {
    pub fn push(&mut self, name: impl Into<String>, value: f64, formula: impl Into<String>, citation: &str) {
        self.entries.push(BigMEntry {
            name: name.into(),
            value,
            formula: formula.into(),
            citation: citation.into(),
        });
    }
}

/// Contiguous rows produced by one result.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ProvEntry {
    pub first_row: usize,
    pub last_row: usize,
    pub citation: String,
}

/// A solver-ready program plus its paper trail.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct CompiledMember {
    pub label: String,
    pub program: LinearProgram,
    pub provenance: Vec<ProvEntry>,
    pub ledger: BigMLedger,
}

/// Output of a compiler: either a min-combined batch of continuous LPs or
/// MILPs, or one program. The first `n_decision` variables of every member
/// are the decision vector.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub enum CompiledProgram {
    Batch { members: Vec<CompiledMember>, n_decision: usize, citation: String },
    Single { member: Box<CompiledMember>, n_decision: usize, citation: String },
}

impl CompiledProgram {
    pub fn citation(&self) -> &str {
        match self {
            CompiledProgram::Batch { citation, .. } => citation,
            CompiledProgram::Single { citation, .. } => citation,
        }
    }

    pub fn n_decision(&self) -> usize {
        match self {
            CompiledProgram::Batch { n_decision, .. } => *n_decision,
            CompiledProgram::Single { n_decision, .. } => *n_decision,
        }
    }

    pub fn members(&self) -> Vec<&CompiledMember> {
        match self {
            CompiledProgram::Batch { members, .. } => members.iter().collect(),
            CompiledProgram::Single { member, .. } => vec![member.as_ref()],
        }
    }

    pub fn member_count(&self) -> usize {
        match self {
            CompiledProgram::Batch { members, .. } => members.len(),
            CompiledProgram::Single { .. } => 1,
        }
    }

    /// Union of the members' big-M ledgers.
    pub fn ledger(&self) -> BigMLedger {
        let mut ledger = BigMLedger::default();
        for m in self.members() {
            ledger.entries.extend(m.ledger.entries.iter().cloned());
        }
        ledger
    }
}

/// Solved compiled program: overall value, winning member, decision vector.
#[derive(Debug, Clone)]
pub struct CompiledSolution {
    pub value: f64,
    pub argmin: usize,
    pub x: Vec<f64>,
    pub excluded_members: Vec<usize>,
    pub solution: Solution,
}

/// Solve a compiled program with the embedded engine.
pub fn solve_compiled(
    compiled: &CompiledProgram,
    config: &SolverConfig,
) -> Result<CompiledSolution, ReformError> {
    let n = compiled.n_decision();
    match compiled {
        CompiledProgram::Single { member, .. } => {
            let sol = solve_milp(&member.program, config).map_err(ReformError::Solver)?;
            match sol.status {
                Status::Optimal => Ok(CompiledSolution {
                    value: sol.objective,
                    argmin: 0,
                    x: sol.x[..n].to_vec(),
                    excluded_members: Vec::new(),
                    solution: sol,
                }),
                other => Err(ReformError::SolveFailed(format!("status {other:?}"))),
            }
        }
        CompiledProgram::Batch { members, .. } => {
            let programs: Vec<LinearProgram> =
                members.iter().map(|m| m.program.clone()).collect();
            let out = solve_batch(&programs, config).map_err(ReformError::Batch)?;
            Ok(CompiledSolution {
                value: out.best.objective,
                argmin: out.argmin,
                x: out.best.x[..n].to_vec(),
                excluded_members: out.excluded,
                solution: out.best,
            })
        }
    }
}

#[derive(Debug, Error)]
pub enum ReformError {
    #[error("not representable, {}: {}", .verdict.citation, .verdict.detail)]
    NotRepresentable { verdict: Verdict, witness: MidpointWitness },
    #[error("unsupported ({citation}): {detail}")]
    Unsupported { citation: String, detail: String },
    #[error("unsupported norm: {0}")]
    UnsupportedNorm(String),
    #[error("missing scenario value bounds: {0}")]
    MissingBounds(String),
    #[error("hurwicz optimism level missing")]
    MissingLambda,
    #[error("vertex cap exceeded: found {0} vertices")]
    VertexCapExceeded(usize),
    #[error("degenerate bounds: gamma range [{gamma_lo}, {gamma_hi}] is empty")]
    DegenerateBounds { gamma_lo: f64, gamma_hi: f64 },
    #[error("invalid problem: {0}")]
    InvalidProblem(String),
    #[error(transparent)]
    Oracle(#[from] OracleError),
    #[error(transparent)]
    Solver(SolveError),
    #[error("solve failed: {0}")]
    SolveFailed(String),
    #[error(transparent)]
    Batch(BatchError),
}

impl ReformError {
    /// The refusal verdict, when this error is a representability refusal.
    pub fn refusal(&self) -> Option<&Verdict> {
        match self {
            ReformError::NotRepresentable { verdict, .. } => Some(verdict),
            _ => None,
        }
    }
}

/// A linear expression over program variables plus a constant.
#[derive(Debug, Clone, Default)]
pub struct LinExpr {
    pub terms: Vec<(usize, f64)>,
    pub constant: f64,
}

impl LinExpr {
    pub fn var(id: usize) -> Self {
        LinExpr { terms: vec![(id, 1.0)], constant: 0.0 }
    }

    pub fn constant(c: f64) -> Self {
        LinExpr { terms: Vec::new(), constant: c }
    }

    pub fn term(id: usize, coeff: f64) -> Self {
        LinExpr { terms: vec![(id, coeff)], constant: 0.0 }
    }

    pub fn push(mut self, id: usize, coeff: f64) -> Self {
        if coeff != 0.0 {
            self.terms.push((id, coeff));
        }
        self
    }

    pub fn add(mut self, other: &LinExpr) -> Self {
        self.terms.extend(other.terms.iter().copied());
        self.constant += other.constant;
        self
    }

    pub fn scaled(&self, f: f64) -> Self {
        LinExpr {
            terms: self.terms.iter().map(|&(i, c)| (i, c * f)).collect(),
            constant: self.constant * f,
        }
    }

    /// Affine row over registered variable ids: `coeffs . vars + constant`.
    pub fn affine(vars: &[usize], coeffs: &[f64], constant: f64) -> Self {
        LinExpr {
            terms: vars
                .iter()
                .zip(coeffs)
                .filter(|&(_, &c)| c != 0.0)
                .map(|(&v, &c)| (v, c))
                .collect(),
            constant,
        }
    }

    fn merged(&self) -> Vec<(usize, f64)> {
        let mut terms = self.terms.clone();
        terms.sort_by_key(|&(i, _)| i);
        let mut out: Vec<(usize, f64)> = Vec::with_capacity(terms.len());
        for (i, c) in terms {
            match out.last_mut() {
                Some((j, acc)) if *j == i => *acc += c,
                _ => out.push((i, c)),
            }
        }
        out.retain(|&(_, c)| c != 0.0);
        out
    }
}

/// Incremental program assembly with provenance tracking.
pub struct ProgramBuilder {
    pub lp: LinearProgram,
    row_citations: Vec<String>,
    pub ledger: BigMLedger,
}

impl ProgramBuilder {
    pub fn new(name: impl Into<String>) -> Self {
        ProgramBuilder {
            lp: LinearProgram::new(name),
            row_citations: Vec::new(),
            ledger: BigMLedger::default(),
        }
    }

    pub fn add_var(
        &mut self,
        name: impl Into<String>,
        lower: f64,
        upper: f64,
        obj: f64,
        integer: bool,
    ) -> usize {
        self.lp.add_var(name, lower, upper, obj, integer)
    }

    /// Register the decision variables (always first) and the polytope rows.
    pub fn add_decisions(&mut self, ds: &DecisionSet, citation: &str) -> Vec<usize> {
        let vars: Vec<usize> = (0..ds.dim())
            .map(|j| self.add_var(format!("x{j}"), ds.lower[j], ds.upper[j], 0.0, false))
            .collect();
        for (i, (row, &rhs)) in ds.ineq_matrix.iter().zip(&ds.ineq_rhs).enumerate() {
            self.add_row(
                citation,
                format!("xdom{i}"),
                LinExpr::affine(&vars, row, 0.0),
                Sense::Le,
                rhs,
            );
        }
        vars
    }

    /// `expr (sense) rhs`, with the expression constant folded into the rhs.
    pub fn add_row(
        &mut self,
        citation: &str,
        name: impl Into<String>,
        expr: LinExpr,
        sense: Sense,
        rhs: f64,
    ) -> usize {
        let id = self.lp.add_row(name, expr.merged(), sense, rhs - expr.constant);
        self.row_citations.push(citation.to_string());
        id
    }

    /// Add `scale * expr` to the objective.
    pub fn add_objective(&mut self, expr: &LinExpr, scale: f64) {
        for &(i, c) in &expr.terms {
            self.lp.objective[i] += scale * c;
        }
        self.lp.obj_offset += scale * expr.constant;
    }

    pub fn record_big_m(
        &mut self,
        name: impl Into<String>,
        value: f64,
        formula: impl Into<String>,
        citation: &str,
    ) {
        self.ledger.push(name, value, formula, citation);
    }

    pub fn finish(self, label: impl Into<String>) -> CompiledMember {
        let mut provenance: Vec<ProvEntry> = Vec::new();
        for (row, cite) in self.row_citations.iter().enumerate() {
            match provenance.last_mut() {
                Some(entry) if entry.citation == *cite && entry.last_row + 1 == row => {
                    entry.last_row = row;
                }
                _ => provenance.push(ProvEntry {
                    first_row: row,
                    last_row: row,
                    citation: cite.clone(),
                }),
            }
        }
        CompiledMember { label: label.into(), program: self.lp, provenance, ledger: self.ledger }
    }
}

/// Norm handling: on a one-dimensional support every p-norm is the absolute
/// value, so the polyhedral machinery applies verbatim.
pub(crate) fn effective_norm(norm_p: NormP, xi_dim: usize) -> NormP {
    match norm_p {
        NormP::Real(_) if xi_dim <= 1 => NormP::Inf,
        other => other,
    }
}

/// Classify an instance: the strongest applicable label among tractable,
/// MICP-representable, provably-not-representable, and unknown.
pub fn classify(problem: &DfoProblem) -> Verdict {
    use VerdictStatus::*;
    let m = problem.ambiguity.xi_dim();
    match (&problem.recourse, &problem.ambiguity) {
        (Recourse::Piecewise(pw), AmbiguitySet::SupportBall { radius, norm_p, .. }) => {
            let p = effective_norm(*norm_p, m);
            match pw.mode {
                RecourseMode::ConcaveMin => {
                    if *radius == 0.0 || pw.constant_a() {
                        Verdict::new(
                            Tractable,
                            citations::THM_3_1_I,
                            "constant dual-norm term: one convex program per piece",
                        )
                    } else if matches!(p, NormP::One) {
                        Verdict::new(
                            Tractable,
                            citations::THM_3_1_II,
                            "sup dual norm splits into 2mK sign branches",
                        )
                    } else if matches!(p, NormP::Inf) {
                        Verdict::new(
                            Micpr,
                            citations::COR_THM_3_3,
                            "per-piece MILP with exact bilinear sign blocks",
                        )
                    } else {
                        Verdict::new(
                            NotMicpr,
                            citations::THM_3_3_CASE_2,
                            format!(
                                "strictly convex dual norm (p = {}) with a decision-dependent \
                                 a-map admits a midpoint witness",
                                norm_p.label()
                            ),
                        )
                    }
                }
                RecourseMode::ConvexMax => classify_convex_ball(pw, *radius, p, norm_p),
            }
        }
        (Recourse::Piecewise(pw), AmbiguitySet::WassersteinInf { radius, norm_p, .. }) => {
            let p = effective_norm(*norm_p, m);
            match pw.mode {
                RecourseMode::ConcaveMin => {
                    if p.is_polyhedral() {
                        Verdict::new(
                            Micpr,
                            citations::THM_4_2,
                            "per-sample piece selection with exact bilinear blocks",
                        )
                    } else if pw.constant_a() || *radius == 0.0 {
                        Verdict::new(
                            Tractable,
                            citations::THM_3_1_I,
                            "constant dual-norm term in every per-sample inner problem",
                        )
                    } else {
                        Verdict::new(
                            NotMicpr,
                            citations::COR_4_3,
                            format!(
                                "strictly convex dual norm (p = {}) inherited by the \
                                 per-sample inner problems",
                                norm_p.label()
                            ),
                        )
                    }
                }
                RecourseMode::ConvexMax => classify_convex_ball(pw, *radius, p, norm_p),
            }
        }
        (_, AmbiguitySet::FinitePolyhedral { .. }) => Verdict::new(
            Micpr,
            citations::THM_4_3,
            "polytope of weights: extreme-point batch or complementarity MILP",
        ),
        (_, AmbiguitySet::IntervalPolyhedral { .. }) => Verdict::new(
            Micpr,
            citations::COR_4_6,
            "interval weight perturbations: per-anchor selection MILPs",
        ),
        (_, AmbiguitySet::L2Ball { scenarios, radius, .. }) => {
            let n = scenarios.len() as f64;
            if *radius == 0.0 {
                Verdict::new(
                    Tractable,
                    citations::THM_4_3,
                    "zero-radius weight ball is the singleton nominal distribution",
                )
            } else if *radius <= (1.0 / (n * (n - 1.0))).sqrt() + 1e-15 {
                Verdict::new(
                    NotMicpr,
                    citations::PROP_4_8,
                    format!(
                        "euclidean weight ball with radius {radius} <= sqrt(1/(N(N-1))) \
                         admits a midpoint witness"
                    ),
                )
            } else {
                Verdict::new(
                    Unknown,
                    citations::PROP_4_8,
                    "euclidean weight ball outside the certified radius range",
                )
            }
        }
        (Recourse::Lp(_), _) => Verdict::new(
            Unknown,
            citations::THM_4_3,
            "LP recourse requires a scenario-based ambiguity set",
        ),
    }
}

fn classify_convex_ball(
    pw: &crate::model::PiecewiseAffineRecourse,
    radius: f64,
    p: NormP,
    declared: &NormP,
) -> Verdict {
    use VerdictStatus::*;
    if radius == 0.0 {
        return Verdict::new(
            Tractable,
            citations::THM_3_4_I,
            "zero-radius ball: single epigraph LP at the center",
        );
    }
    if matches!(p, NormP::One) {
        if block_constant_norms_pw(pw).is_some() {
            return Verdict::new(
                Tractable,
                citations::THM_3_4_III,
                "disjoint blocks with constant sup-norms: one dual LP",
            );
        }
    }
    if pw.constant_a() {
        return Verdict::new(
            Tractable,
            citations::THM_3_4_I,
            "constant a-maps: single LP with explicit uncertainty variables",
        );
    }
    match p {
        NormP::One => {
            if pw.shared_a() {
                Verdict::new(
                    Tractable,
                    citations::THM_3_4_II,
                    "shared a-map: 2m sign-branch LPs",
                )
            } else {
                Verdict::new(
                    Unknown,
                    citations::PROP_3_4,
                    "NP-hard without shared or block structure; no compiler offered",
                )
            }
        }
        NormP::Inf => {
            if pw.shared_a() {
                Verdict::new(Micpr, citations::COR_3_6_I, "shared a-map: one MILP with sign blocks")
            } else if pw.block_structure.is_some() {
                Verdict::new(
                    Micpr,
                    citations::COR_3_6_II,
                    "disjoint blocks: one MILP with per-block sign blocks",
                )
            } else {
                Verdict::new(
                    Unknown,
                    citations::PROP_3_4,
                    "no recognized structure for the sup-norm ball",
                )
            }
        }
        NormP::Real(_) => Verdict::new(
            NotMicpr,
            citations::PROP_3_5,
            format!(
                "strictly convex dual norm (p = {}) with a decision-dependent a-map \
                 admits a midpoint witness",
                declared.label()
            ),
        ),
    }
}

/// Block structure usable by the dual-LP block compiler: present, valid,
/// and with every piece's a-map constant on its own block, so the per-block
/// sup-norm is the constant returned here.
pub(crate) fn block_constant_norms_pw(
    pw: &crate::model::PiecewiseAffineRecourse,
) -> Option<Vec<f64>> {
    let groups = pw.block_structure.as_ref()?;
    let mut consts = Vec::with_capacity(pw.pieces.len());
    for (piece, group) in pw.pieces.iter().zip(groups) {
        let mut c = 0.0f64;
        for &i in group {
            let (row, off) = piece.a.row(i);
            if row.iter().any(|&v| v != 0.0) {
                return None;
            }
            c = c.max(off.abs());
        }
        consts.push(c);
    }
    Some(consts)
}

/// Compile with the route chosen from the verdict, preferring continuous
/// batch routes over integer programs when both apply.
pub fn compile_auto(problem: &DfoProblem) -> Result<CompiledProgram, ReformError> {
    if problem.hurwicz_lambda.is_some()
        && matches!(
            problem.ambiguity,
            AmbiguitySet::FinitePolyhedral { .. } | AmbiguitySet::IntervalPolyhedral { .. }
        )
    {
        return compile_hurwicz(problem);
    }
    match (&problem.recourse, &problem.ambiguity) {
        (Recourse::Piecewise(pw), AmbiguitySet::SupportBall { .. }) => match pw.mode {
            RecourseMode::ConcaveMin => compile_concave_sdfo(problem),
            RecourseMode::ConvexMax => compile_convex_sdfo(problem),
        },
        (Recourse::Lp(_), AmbiguitySet::SupportBall { .. }) => Err(ReformError::InvalidProblem(
            "LP recourse requires a scenario-based ambiguity set".into(),
        )),
        (_, AmbiguitySet::WassersteinInf { .. }) => compile_wasserstein(problem),
        (_, AmbiguitySet::FinitePolyhedral { .. }) => {
            // Tractable preference: the enumeration route emits continuous
            // LPs (for convex recourse) while the KKT route always needs
            // binaries. Fall back to KKT when the vertex cap trips.
            match compile_finite_enumeration(problem) {
                Err(ReformError::VertexCapExceeded(_)) => compile_finite_kkt(problem),
                other => other,
            }
        }
        (_, AmbiguitySet::IntervalPolyhedral { .. }) => compile_interval_polyhedral(problem),
        (_, AmbiguitySet::L2Ball { .. }) => refuse_l2(problem),
    }
}

/// Refusal (or SAA collapse) for the euclidean weight ball.
pub fn refuse_l2(problem: &DfoProblem) -> Result<CompiledProgram, ReformError> {
    let (scenarios, p0, radius) = match &problem.ambiguity {
        AmbiguitySet::L2Ball { scenarios, p0, radius } => (scenarios, p0, *radius),
        _ => return Err(ReformError::InvalidProblem("expected a euclidean weight ball".into())),
    };
    if radius == 0.0 {
        // Singleton: plain SAA program at the nominal weights.
        return build_saa_program(problem, scenarios, p0);
    }
    let verdict = classify(problem);
    match verdict.status {
        VerdictStatus::NotMicpr => {
            let witness = generate_witness(problem, &verdict)
                .ok_or_else(|| ReformError::InvalidProblem("witness construction failed".into()))?;
            Err(ReformError::NotRepresentable { verdict, witness })
        }
        _ => Err(ReformError::Unsupported {
            citation: verdict.citation,
            detail: verdict.detail,
        }),
    }
}

#[cfg(test)]
mod tests;
