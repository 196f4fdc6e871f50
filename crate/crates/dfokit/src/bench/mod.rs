//! Desk-scale two-stage resource allocation study: seeded instance
//! generation, favorable/robust/blended solves, and out-of-sample quantile
//! evaluation with CSV reports.

use rand::prelude::*;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::milp::{Sense, SolverConfig};
use crate::model::{
    evaluate_recourse, AmbiguitySet, DecisionSet, DfoProblem, LpRecourse, Recourse,
};
use crate::reform::{
    build_dro_program, build_saa_program, compile_hurwicz, compile_interval_polyhedral,
    solve_compiled, ReformError,
};

#[derive(Debug, Error)]
pub enum BenchError {
    #[error("invalid config: {0}")]
    Config(String),
    #[error("{method} solve failed on trial {trial}: {source}")]
    Solve {
        method: String,
        trial: usize,
        #[source]
        source: ReformError,
    },
}

/// Configuration of one study. All randomness is pinned by `seed`.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct TraConfig {
    /// Facilities.
    pub n: usize,
    /// Customer sites.
    pub n1: usize,
    /// Unit outsourcing penalty.
    pub rho: f64,
    /// Unit holding cost.
    pub h: f64,
    /// Total mean demand.
    pub dbar: f64,
    /// Training sample count.
    pub n_samples: usize,
    /// Contamination level driving the upper perturbation mu.
    pub eps: f64,
    /// Probability that a training sample comes from the outlier model.
    pub outlier_rate: f64,
    pub seed: u64,
    pub test_count: usize,
    pub lambda_grid: Vec<f64>,
    pub trials: usize,
    /// Interpret the demand/cost dispersion numbers as standard deviations
    /// instead of variances.
    pub variance_as_stddev: bool,
    /// Scale the demand variance by the per-site mean instead of the total.
    pub variance_per_component: bool,
    /// Dispersion factor of the test demand (0.005 reproduces the training
    /// model; 0.01 shifts the test distribution).
    pub test_dispersion: f64,
}

impl Default for TraConfig {
    fn default() -> Self {
        TraConfig {
            n: 2,
            n1: 3,
            rho: 10.0,
            h: 1.0,
            dbar: 1000.0,
            n_samples: 8,
            eps: 0.16,
            outlier_rate: 0.05,
            seed: 7,
            test_count: 100,
            lambda_grid: vec![0.2, 0.4, 0.6, 0.8],
            trials: 3,
            variance_as_stddev: false,
            variance_per_component: false,
            test_dispersion: 0.005,
        }
    }
}

/// Nearest rational `a/b` with `b <= 10_000`, for exact interval bounds.
fn rationalize_eps(eps: f64) -> Result<(u64, u64), BenchError> {
    if !(0.0..1.0).contains(&eps) || eps == 0.0 {
        return Err(BenchError::Config(format!("eps {eps} outside (0, 1)")));
    }
    let mut best = (1u64, 2u64);
    let mut err = f64::INFINITY;
    for den in 1..=10_000u64 {
        let num = (eps * den as f64).round().max(1.0) as u64;
        if num >= den {
            continue;
        }
        let e = (num as f64 / den as f64 - eps).abs();
        if e < err - 1e-15 {
            best = (num, den);
            err = e;
            if e < 1e-12 {
                break;
            }
        }
    }
    Ok(best)
}

fn sigma(dispersion: f64, as_stddev: bool) -> f64 {
    if as_stddev {
        dispersion
    } else {
        dispersion.sqrt()
    }
}

/// Nonnegative Gaussian draw by rejection at zero.
fn trunc_gauss(rng: &mut ChaCha8Rng, mean: f64, sd: f64) -> f64 {
    loop {
        let u1: f64 = rng.random_range(f64::EPSILON..1.0);
        let u2: f64 = rng.random_range(0.0..std::f64::consts::TAU);
        let z = (-2.0 * u1.ln()).sqrt() * u2.cos();
        let v = mean + sd * z;
        if v >= 0.0 {
            return v;
        }
    }
}

fn demand_sd(config: &TraConfig, dispersion: f64) -> f64 {
    let scale = if config.variance_per_component { config.dbar / config.n1 as f64 } else { config.dbar };
    sigma(dispersion * scale, config.variance_as_stddev)
}

fn draw_demand(rng: &mut ChaCha8Rng, config: &TraConfig, dispersion: f64) -> Vec<f64> {
    let mean = config.dbar / config.n1 as f64;
    let sd = demand_sd(config, dispersion);
    (0..config.n1).map(|_| trunc_gauss(rng, mean, sd)).collect()
}

/// Build the seeded instance: transportation recourse, interval weight
/// perturbations with `mu = 1/(N - N eps) - 1/N`, and the test demands.
pub fn generate_tra(config: &TraConfig) -> Result<(DfoProblem, Vec<Vec<f64>>), BenchError> {
    if config.n == 0 || config.n1 == 0 || config.n_samples < 2 {
        return Err(BenchError::Config("need n >= 1, n1 >= 1, N >= 2".into()));
    }
    if !(config.rho > config.h && config.h > 0.0) {
        return Err(BenchError::Config("need rho > h > 0".into()));
    }
    let (a, b) = rationalize_eps(config.eps)?;
    let n_samp = config.n_samples as u64;
    if (n_samp * a) % b == 0 {
        return Err(BenchError::Config(format!(
            "N * eps = {} * {a}/{b} is an integer; the uniform interval case needs it fractional",
            config.n_samples
        )));
    }
    // mu = 1/(N - N eps) - 1/N = a / (N (b - a)); q = N (b - a).
    let q = n_samp * (b - a);
    let lbar = -((b - a) as i64);
    let ubar = a as i64;

    let mut rng = ChaCha8Rng::seed_from_u64(config.seed);

    // Transportation costs.
    let q_sd = sigma(0.2, config.variance_as_stddev);
    let ship_cost: Vec<Vec<f64>> = (0..config.n)
        .map(|_| (0..config.n1).map(|_| trunc_gauss(&mut rng, 1.0, q_sd)).collect())
        .collect();

    // Training demands with occasional outlier samples.
    let scenarios: Vec<Vec<f64>> = (0..config.n_samples)
        .map(|_| {
            let outlier = rng.random_bool(config.outlier_rate);
            draw_demand(&mut rng, config, if outlier { 0.01 } else { 0.005 })
        })
        .collect();

    // Test demands, drawn after the training block for a stable stream.
    let tests: Vec<Vec<f64>> =
        (0..config.test_count).map(|_| draw_demand(&mut rng, config, config.test_dispersion)).collect();

    // Second-stage variables: y (n*n1 shipments), u (n1 shortfalls),
    // v (n holdovers).
    let n_y = config.n * config.n1;
    let total_y = n_y + config.n1 + config.n;
    let mut obj = Vec::with_capacity(total_y);
    for s in 0..config.n {
        for j in 0..config.n1 {
            obj.push(ship_cost[s][j]);
        }
    }
    obj.extend(std::iter::repeat(config.rho).take(config.n1));
    obj.extend(std::iter::repeat(config.h).take(config.n));

    let rows = config.n + config.n1;
    let mut recourse_matrix = vec![vec![0.0; total_y]; rows];
    let mut tech_x = vec![vec![0.0; config.n]; rows];
    let mut tech_xi = vec![vec![0.0; config.n1]; rows];
    let mut senses = Vec::with_capacity(rows);
    // Flow balance per facility: shipments plus holdover equal the supply.
    for s in 0..config.n {
        for j in 0..config.n1 {
            recourse_matrix[s][s * config.n1 + j] = 1.0;
        }
        recourse_matrix[s][n_y + config.n1 + s] = 1.0;
        tech_x[s][s] = 1.0;
        senses.push(Sense::Eq);
    }
    // Demand cover per site: shipments plus shortfall meet the demand.
    for j in 0..config.n1 {
        let r = config.n + j;
        for s in 0..config.n {
            recourse_matrix[r][s * config.n1 + j] = 1.0;
        }
        recourse_matrix[r][n_y + j] = 1.0;
        tech_xi[r][j] = 1.0;
        senses.push(Sense::Ge);
    }

    let problem = DfoProblem {
        decisions: DecisionSet::box_only(vec![0.0; config.n], vec![2.0 * config.dbar; config.n]),
        recourse: Recourse::Lp(LpRecourse {
            obj,
            recourse_matrix,
            tech_x,
            tech_xi,
            rhs_const: vec![0.0; rows],
            senses,
            y_lower: vec![0.0; total_y],
        }),
        ambiguity: AmbiguitySet::IntervalPolyhedral {
            scenarios,
            p0: vec![1.0 / config.n_samples as f64; config.n_samples],
            lbar: vec![lbar; config.n_samples],
            ubar: vec![ubar; config.n_samples],
            q,
        },
        hurwicz_lambda: None,
    };
    Ok((problem, tests))
}

/// One solved method within a trial.
#[derive(Debug, Clone, Serialize)]
pub struct MethodRun {
    pub method: String,
    pub lambda: Option<f64>,
    pub training_value: f64,
    pub x: Vec<f64>,
    /// Out-of-sample second-stage costs, one per test scenario.
    pub costs: Vec<f64>,
    /// Nearest-rank quantiles of `costs` at 50/60/70/80/90 percent.
    pub quantiles: Vec<(u32, f64)>,
}

#[derive(Debug, Clone, Serialize)]
pub struct TrialReport {
    pub trial: usize,
    pub runs: Vec<MethodRun>,
    pub dfo_value: f64,
    pub saa_value: f64,
    pub dro_value: f64,
    pub sandwich_ok: bool,
    pub hurwicz_monotone: bool,
}

#[derive(Debug, Clone, Serialize)]
pub struct ReportRow {
    pub method: String,
    pub lambda: Option<f64>,
    pub quantile: u32,
    pub mean: f64,
    pub ci_lo: f64,
    pub ci_hi: f64,
}

#[derive(Debug, Clone, Serialize)]
pub struct ExperimentReport {
    pub config: TraConfig,
    pub trials: Vec<TrialReport>,
    pub rows: Vec<ReportRow>,
}

pub const QUANTILES: [u32; 5] = [50, 60, 70, 80, 90];

fn nearest_rank(costs: &[f64], q: u32) -> f64 {
    let mut sorted = costs.to_vec();
    sorted.sort_by(f64::total_cmp);
    let t = sorted.len();
    let rank = ((q as usize * t).div_ceil(100)).max(1);
    sorted[rank - 1]
}

fn out_of_sample(problem: &DfoProblem, x: &[f64], tests: &[Vec<f64>]) -> Vec<f64> {
    tests
        .iter()
        .map(|xi| evaluate_recourse(problem, x, xi).expect("validated recourse must evaluate"))
        .collect()
}

/// Run the full study: favorable, robust and blended solves per trial, plus
/// the out-of-sample quantile table.
pub fn run_experiment(config: &TraConfig) -> Result<ExperimentReport, BenchError> {
    let solver = SolverConfig::default();
    let mut trials = Vec::with_capacity(config.trials);
    for trial in 0..config.trials {
        let mut cfg = config.clone();
        cfg.seed = config.seed.wrapping_add(1_000_003 * trial as u64);
        let (problem, tests) = generate_tra(&cfg)?;
        let scenarios = match &problem.ambiguity {
            AmbiguitySet::IntervalPolyhedral { scenarios, .. } => scenarios.clone(),
            _ => unreachable!(),
        };
        let p0 = vec![1.0 / cfg.n_samples as f64; cfg.n_samples];

        let fail = |method: &str, source: ReformError| BenchError::Solve {
            method: method.into(),
            trial,
            source,
        };

        let dfo = compile_interval_polyhedral(&problem).map_err(|e| fail("DFO", e))?;
        let dfo_sol = solve_compiled(&dfo, &solver).map_err(|e| fail("DFO", e))?;

        let saa = build_saa_program(&problem, &scenarios, &p0).map_err(|e| fail("SAA", e))?;
        let saa_sol = solve_compiled(&saa, &solver).map_err(|e| fail("SAA", e))?;

        let dro = build_dro_program(&problem).map_err(|e| fail("DRO", e))?;
        let dro_sol = solve_compiled(&dro, &solver).map_err(|e| fail("DRO", e))?;

        let mut runs = Vec::new();
        let mut push_run = |method: &str, lambda: Option<f64>, value: f64, x: Vec<f64>| {
            let costs = out_of_sample(&problem, &x, &tests);
            let quantiles = QUANTILES.iter().map(|&q| (q, nearest_rank(&costs, q))).collect();
            runs.push(MethodRun {
                method: method.into(),
                lambda,
                training_value: value,
                x,
                costs,
                quantiles,
            });
        };
        push_run("DFO", None, dfo_sol.value, dfo_sol.x.clone());
        push_run("SAA", None, saa_sol.value, saa_sol.x.clone());
        push_run("DRO", None, dro_sol.value, dro_sol.x.clone());

        let mut hurwicz_values = Vec::new();
        for &lambda in &cfg.lambda_grid {
            let mut blended = problem.clone();
            blended.hurwicz_lambda = Some(lambda);
            let compiled = compile_hurwicz(&blended).map_err(|e| fail("Hurwicz", e))?;
            let sol = solve_compiled(&compiled, &solver).map_err(|e| fail("Hurwicz", e))?;
            hurwicz_values.push((lambda, sol.value));
            push_run("Hurwicz", Some(lambda), sol.value, sol.x.clone());
        }

        let tol = 1e-6 * dro_sol.value.abs().max(1.0);
        let sandwich_ok =
            dfo_sol.value <= saa_sol.value + tol && saa_sol.value <= dro_sol.value + tol;
        let mut sorted = hurwicz_values.clone();
        sorted.sort_by(|a, b| a.0.total_cmp(&b.0));
        let hurwicz_monotone = sorted.windows(2).all(|w| w[1].1 <= w[0].1 + tol);

        trials.push(TrialReport {
            trial,
            runs,
            dfo_value: dfo_sol.value,
            saa_value: saa_sol.value,
            dro_value: dro_sol.value,
            sandwich_ok,
            hurwicz_monotone,
        });
    }

    // Aggregate quantiles across trials: mean with a normal-approximation
    // 95 percent half-width.
    let mut rows = Vec::new();
    let first = &trials[0];
    for (run_idx, run) in first.runs.iter().enumerate() {
        for (q_idx, &(q, _)) in run.quantiles.iter().enumerate() {
            let samples: Vec<f64> =
                trials.iter().map(|t| t.runs[run_idx].quantiles[q_idx].1).collect();
            let mean = samples.iter().sum::<f64>() / samples.len() as f64;
            let half = if samples.len() > 1 {
                let var = samples.iter().map(|v| (v - mean).powi(2)).sum::<f64>()
                    / (samples.len() - 1) as f64;
                1.96 * (var / samples.len() as f64).sqrt()
            } else {
                0.0
            };
            rows.push(ReportRow {
                method: run.method.clone(),
                lambda: run.lambda,
                quantile: q,
                mean,
                ci_lo: mean - half,
                ci_hi: mean + half,
            });
        }
    }

    Ok(ExperimentReport { config: config.clone(), trials, rows })
}

fn fmt_lambda(lambda: Option<f64>) -> String {
    match lambda {
        Some(l) => format!("{l:.4}"),
        None => String::new(),
    }
}

impl ExperimentReport {
    /// `report.csv`: method, lambda, quantile, mean, ci_lo, ci_hi.
    pub fn report_csv(&self) -> String {
        let mut out = String::from("method,lambda,quantile,mean,ci_lo,ci_hi\n");
        for r in &self.rows {
            out.push_str(&format!(
                "{},{},{},{:.6},{:.6},{:.6}\n",
                r.method,
                fmt_lambda(r.lambda),
                r.quantile,
                r.mean,
                r.ci_lo,
                r.ci_hi
            ));
        }
        out
    }

    /// `raw.csv`: trial, method, lambda, scenario, cost.
    pub fn raw_csv(&self) -> String {
        let mut out = String::from("trial,method,lambda,scenario,cost\n");
        for t in &self.trials {
            for run in &t.runs {
                for (s, c) in run.costs.iter().enumerate() {
                    out.push_str(&format!(
                        "{},{},{},{},{:.6}\n",
                        t.trial,
                        run.method,
                        fmt_lambda(run.lambda),
                        s,
                        c
                    ));
                }
            }
        }
        out
    }

    /// Gnuplot-friendly block: one line per method with the five quantile
    /// means as columns.
    pub fn quantiles_dat(&self) -> String {
        let mut out = String::from("# method lambda q50 q60 q70 q80 q90\n");
        let mut seen: Vec<(String, Option<f64>)> = Vec::new();
        for r in &self.rows {
            let key = (r.method.clone(), r.lambda);
            if !seen.contains(&key) {
                seen.push(key);
            }
        }
        for (method, lambda) in seen {
            let mut line = format!(
                "{}{}",
                method,
                match lambda {
                    Some(l) => format!("_{l:.2}"),
                    None => String::new(),
                }
            );
            line.push_str(&format!(" {}", fmt_lambda(lambda.or(Some(f64::NAN))).replace("NaN", "-")));
            for q in QUANTILES {
                let row = self
                    .rows
                    .iter()
                    .find(|r| r.method == method && r.lambda == lambda && r.quantile == q)
                    .expect("aggregated row exists");
                line.push_str(&format!(" {:.6}", row.mean));
            }
            out.push_str(&line);
            out.push('\n');
        }
        out
    }

    pub fn all_sandwich_ok(&self) -> bool {
        self.trials.iter().all(|t| t.sandwich_ok)
    }

    pub fn all_monotone(&self) -> bool {
        self.trials.iter().all(|t| t.hurwicz_monotone)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn mu_formula_matches_hand_value() {
        // N=8, eps=0.16 = 4/25: mu = 4/(8*21) = 1/42 = 0.0238095...
        let cfg = TraConfig { n: 1, n1: 1, n_samples: 8, eps: 0.16, ..TraConfig::default() };
        let (problem, _) = generate_tra(&cfg).unwrap();
        match &problem.ambiguity {
            AmbiguitySet::IntervalPolyhedral { lbar, ubar, q, .. } => {
                assert_eq!(*q, 8 * 21);
                assert_eq!(lbar[0], -21);
                assert_eq!(ubar[0], 4);
                let mu = ubar[0] as f64 / *q as f64;
                assert!((mu - (1.0 / 6.72 - 0.125)).abs() < 1e-12, "mu {mu}");
            }
            _ => unreachable!(),
        }
    }

    #[test]
    fn generation_is_deterministic() {
        let cfg = TraConfig { n: 2, n1: 3, n_samples: 8, eps: 0.16, seed: 7, ..TraConfig::default() };
        let a = generate_tra(&cfg).unwrap();
        let b = generate_tra(&cfg).unwrap();
        assert_eq!(a.0, b.0);
        assert_eq!(a.1, b.1);
    }

    #[test]
    fn integer_n_eps_rejected() {
        let cfg = TraConfig { n_samples: 4, eps: 0.25, ..TraConfig::default() };
        assert!(matches!(generate_tra(&cfg), Err(BenchError::Config(_))));
    }

    #[test]
    fn nearest_rank_is_order_statistic() {
        let costs = vec![5.0, 1.0, 3.0, 2.0, 4.0];
        assert_eq!(nearest_rank(&costs, 50), 3.0);
        assert_eq!(nearest_rank(&costs, 90), 5.0);
        assert_eq!(nearest_rank(&costs, 60), 3.0);
    }

    #[test]
    fn small_experiment_holds_invariants() {
        let cfg = TraConfig {
            n: 1,
            n1: 2,
            n_samples: 4,
            eps: 0.3,
            dbar: 100.0,
            test_count: 20,
            lambda_grid: vec![0.0, 0.5, 1.0],
            trials: 1,
            seed: 11,
            ..TraConfig::default()
        };
        let report = run_experiment(&cfg).unwrap();
        assert!(report.all_sandwich_ok(), "sandwich violated");
        assert!(report.all_monotone(), "optimism monotonicity violated");
        // Endpoint collapses.
        let t = &report.trials[0];
        let h0 = t.runs.iter().find(|r| r.lambda == Some(0.0)).unwrap();
        let h1 = t.runs.iter().find(|r| r.lambda == Some(1.0)).unwrap();
        assert!((h0.training_value - t.dro_value).abs() < 1e-6);
        assert!((h1.training_value - t.dfo_value).abs() < 1e-6);
        // Deterministic report bytes.
        let again = run_experiment(&cfg).unwrap();
        assert_eq!(report.report_csv(), again.report_csv());
        assert_eq!(report.raw_csv(), again.raw_csv());
    }
}
