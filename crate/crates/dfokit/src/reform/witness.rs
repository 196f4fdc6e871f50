//! Midpoint witnesses accompanying every non-representability refusal.
//!
//! A witness is a finite family of set members whose pairwise midpoints all
//! escape the set; strict convexity of the relevant norm makes the escape
//! strict, so the family certifies (as evidence, not proof) that no exact
//! mixed-integer convex description exists.

use serde::{Deserialize, Serialize};

use crate::linalg::{norm_p, dot};
use crate::model::{AmbiguitySet, DfoProblem, NormP, Recourse};

use super::{citations, Verdict};

/// The canonical set a witness lives in, with an evaluable membership test.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub enum WitnessSet {
    /// `{(a, t) : -||a||_{p*} <= t, |a_i| <= halfwidth}` in `R^{m+1}`.
    ReverseNormEpigraph { p_star: f64, dim: usize, halfwidth: f64 },
    /// Epigraph of the centered-spread value of the euclidean weight ball:
    /// `{(x, t) : mean(x) - 1 - (theta/n) ||n x - (sum x) e||_2 <= t,
    ///   |x_i| <= 1}` in `R^{n+1}`.
    CenteredSpreadEpigraph { theta: f64, dim: usize },
}

impl WitnessSet {
    pub fn contains(&self, point: &[f64]) -> bool {
        match self {
            WitnessSet::ReverseNormEpigraph { p_star, dim, halfwidth } => {
                if point.len() != dim + 1 {
                    return false;
                }
                let (a, t) = (&point[..*dim], point[*dim]);
                if a.iter().any(|v| v.abs() > halfwidth + 1e-9) {
                    return false;
                }
                -norm_p(a, *p_star) <= t + 1e-9
            }
            WitnessSet::CenteredSpreadEpigraph { theta, dim } => {
                if point.len() != dim + 1 {
                    return false;
                }
                let (x, t) = (&point[..*dim], point[*dim]);
                if x.iter().any(|v| v.abs() > 1.0 + 1e-9) {
                    return false;
                }
                let n = *dim as f64;
                let sum: f64 = x.iter().sum();
                let spread: f64 =
                    x.iter().map(|v| (n * v - sum).powi(2)).sum::<f64>().sqrt();
                let value = (sum - n) / n - theta / n * spread;
                value <= t + 1e-9
            }
        }
    }
}

/// Witness points plus the set they certify against.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct MidpointWitness {
    pub points: Vec<Vec<f64>>,
    pub set: WitnessSet,
    pub description: String,
}

impl MidpointWitness {
    /// Closure form of the membership test, for the certificate checker.
    pub fn membership(&self) -> impl Fn(&[f64]) -> bool + '_ {
        move |p: &[f64]| self.set.contains(p)
    }
}

const WITNESS_POINTS: usize = 8;

/// Points on the `p`-sphere of the given radius in the first two of `dim`
/// coordinates. Distinct directions, so no pair is positively collinear.
fn sphere_points(p: f64, radius: f64, dim: usize) -> Vec<Vec<f64>> {
    (0..WITNESS_POINTS)
        .map(|k| {
            let phi = 0.37 + std::f64::consts::TAU * k as f64 / WITNESS_POINTS as f64;
            let raw = [phi.cos(), phi.sin()];
            let scale = radius / norm_p(&raw, p);
            let mut v = vec![0.0; dim];
            v[0] = scale * raw[0];
            v[1] = scale * raw[1];
            v
        })
        .collect()
}

/// Construct the refusal witness for a non-representability verdict.
/// Returns None when the verdict is not a refusal or the geometry is too
/// small to host one (a one-dimensional norm is piecewise linear).
pub fn generate_witness(problem: &DfoProblem, verdict: &Verdict) -> Option<MidpointWitness> {
    match verdict.citation.as_str() {
        c if c == citations::THM_3_3_CASE_2
            || c == citations::PROP_3_5
            || c == citations::COR_4_3 =>
        {
            let norm = match &problem.ambiguity {
                AmbiguitySet::SupportBall { norm_p, .. }
                | AmbiguitySet::WassersteinInf { norm_p, .. } => *norm_p,
                _ => return None,
            };
            let p = match norm {
                NormP::Real(p) => p,
                _ => return None,
            };
            let m = match &problem.recourse {
                Recourse::Piecewise(pw) => pw.xi_dim(),
                _ => return None,
            };
            if m < 2 {
                return None;
            }
            let p_star = p / (p - 1.0);
            let radius = 0.5;
            let mut points = sphere_points(p_star, radius, m);
            for pt in &mut points {
                pt.push(-radius);
            }
            Some(MidpointWitness {
                points,
                set: WitnessSet::ReverseNormEpigraph { p_star, dim: m, halfwidth: 1.0 },
                description: format!(
                    "boundary points of the reverse {p_star}-norm epigraph at level {radius}; \
                     strict convexity pushes every midpoint strictly inside"
                ),
            })
        }
        c if c == citations::PROP_4_8 => {
            let (n, theta) = match &problem.ambiguity {
                AmbiguitySet::L2Ball { scenarios, radius, .. } => (scenarios.len(), *radius),
                _ => return None,
            };
            if n < 3 {
                return None;
            }
            // Circle of radius r inside the zero-sum hyperplane, spanned by
            // two orthonormal zero-sum directions.
            let mut v1 = vec![0.0; n];
            v1[0] = 1.0 / 2.0f64.sqrt();
            v1[1] = -1.0 / 2.0f64.sqrt();
            let mut v2 = vec![1.0 / (6.0f64).sqrt(); 2];
            v2.push(-2.0 / (6.0f64).sqrt());
            v2.resize(n, 0.0);
            debug_assert!(dot(&v1, &v2).abs() < 1e-12);
            let r = 0.5;
            let nf = n as f64;
            let level = -1.0 - theta * r * nf / nf; // mean term -1, spread n*r
            let points: Vec<Vec<f64>> = (0..WITNESS_POINTS)
                .map(|k| {
                    let phi = 0.29 + std::f64::consts::TAU * k as f64 / WITNESS_POINTS as f64;
                    let mut x: Vec<f64> = (0..n)
                        .map(|j| r * (phi.cos() * v1[j] + phi.sin() * v2[j]))
                        .collect();
                    x.push(level);
                    x
                })
                .collect();
            Some(MidpointWitness {
                points,
                set: WitnessSet::CenteredSpreadEpigraph { theta, dim: n },
                description: format!(
                    "zero-sum circle of radius {r} lifted to the centered-spread epigraph \
                     boundary; the euclidean spread term is strictly convex there"
                ),
            })
        }
        _ => None,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::oracle::check_midpoint_certificate;

    #[test]
    fn reverse_norm_witness_certifies() {
        let set = WitnessSet::ReverseNormEpigraph { p_star: 2.0, dim: 3, halfwidth: 1.0 };
        let mut points = sphere_points(2.0, 0.5, 3);
        for p in &mut points {
            p.push(-0.5);
        }
        let w = MidpointWitness { points, set, description: String::new() };
        assert!(check_midpoint_certificate(w.membership(), &w.points));
    }

    #[test]
    fn centered_spread_witness_certifies() {
        let theta = 0.25;
        let n = 4;
        let set = WitnessSet::CenteredSpreadEpigraph { theta, dim: n };
        let mut v1 = vec![1.0 / 2.0f64.sqrt(), -1.0 / 2.0f64.sqrt(), 0.0, 0.0];
        let v2 = vec![
            1.0 / 6.0f64.sqrt(),
            1.0 / 6.0f64.sqrt(),
            -2.0 / 6.0f64.sqrt(),
            0.0,
        ];
        v1.resize(n, 0.0);
        let r = 0.5;
        let level = -1.0 - theta * r;
        let points: Vec<Vec<f64>> = (0..8)
            .map(|k| {
                let phi = 0.29 + std::f64::consts::TAU * k as f64 / 8.0;
                let mut x: Vec<f64> = (0..n)
                    .map(|j| r * (phi.cos() * v1[j] + phi.sin() * v2[j]))
                    .collect();
                x.push(level);
                x
            })
            .collect();
        let w = MidpointWitness { points, set, description: String::new() };
        assert!(check_midpoint_certificate(w.membership(), &w.points));
    }
}
