//! Fitting `F(s) = A0·p^s + B0` to sequence fidelities.
//!
//! `B0` starts at the plateau (mean of the two longest lengths), `p` and
//! `A0` from a log-linear regression of `mean - B0`, then all three are
//! refined by bounded damped Gauss-Newton (Levenberg-Marquardt) steps.
//! Bounds: `0 <= p <= 1`, `0 <= B0 <= 1`, `|A0| <= 1`.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::engine::{mean_and_stderr, FidelityPoint, RBDataset, SequenceRecord};
use crate::error::{invalid, Error, Result};
use crate::rng::stream;

const MAX_ITERATIONS: usize = 500;
const REL_TOL: f64 = 1e-12;
/// Slot used to derive bootstrap streams, kept apart from simulation slots.
const BOOTSTRAP_SLOT: u64 = u64::MAX - 1;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct DecayFit {
    pub a0: f64,
    pub b0: f64,
    pub p: f64,
    /// `(1 + p) / 2`.
    pub avg_fidelity: f64,
    /// Square root of the weighted residual sum of squares.
    pub residual_norm: f64,
    pub ci_p: Option<(f64, f64)>,
    /// All means identical; `p` is undefined and reported as 1 with `A0 = 0`.
    pub degenerate: bool,
    /// `p` finished on one of its bounds.
    pub p_at_bound: bool,
    pub iterations: usize,
}

/// `(1 + p) / 2`.
pub fn fidelity_from_p(p: f64) -> Result<f64> {
    if !(0.0..=1.0).contains(&p) {
        return Err(invalid(format!("decay parameter must lie in [0, 1], got {p}")));
    }
    Ok((1.0 + p) / 2.0)
}

fn model(theta: &[f64; 3], s: f64) -> f64 {
    theta[0] * theta[2].powf(s) + theta[1]
}

fn project(theta: [f64; 3]) -> [f64; 3] {
    [theta[0].clamp(-1.0, 1.0), theta[1].clamp(0.0, 1.0), theta[2].clamp(0.0, 1.0)]
}

struct Problem {
    s: Vec<f64>,
    y: Vec<f64>,
    w: Vec<f64>,
}

impl Problem {
    fn cost(&self, theta: &[f64; 3]) -> f64 {
        self.s.iter().zip(&self.y).zip(&self.w).map(|((&s, &y), &w)| w * (y - model(theta, s)).powi(2)).sum()
    }

    /// Normal equations `JᵀWJ` and gradient `JᵀW r`.
    fn normal_equations(&self, theta: &[f64; 3]) -> ([[f64; 3]; 3], [f64; 3]) {
        let mut jtj = [[0.0; 3]; 3];
        let mut jtr = [0.0; 3];
        for ((&s, &y), &w) in self.s.iter().zip(&self.y).zip(&self.w) {
            let ps = theta[2].powf(s);
            let dp = if s == 0.0 { 0.0 } else { theta[0] * s * theta[2].powf(s - 1.0) };
            let j = [ps, 1.0, dp];
            let r = y - model(theta, s);
            for a in 0..3 {
                jtr[a] += w * j[a] * r;
                for b in 0..3 {
                    jtj[a][b] += w * j[a] * j[b];
                }
            }
        }
        (jtj, jtr)
    }
}

fn solve3(m: [[f64; 3]; 3], b: [f64; 3]) -> Option<[f64; 3]> {
    let a = nalgebra::Matrix3::from_fn(|i, j| m[i][j]);
    let v = nalgebra::Vector3::from_column_slice(&b);
    a.lu().solve(&v).map(|x| [x[0], x[1], x[2]])
}

fn initial_guess(points: &[FidelityPoint]) -> [f64; 3] {
    let mut sorted: Vec<&FidelityPoint> = points.iter().collect();
    sorted.sort_by_key(|p| p.length);
    let tail = &sorted[sorted.len() - 2..];
    let b0 = (tail[0].mean + tail[1].mean) / 2.0;
    let usable: Vec<(f64, f64)> = sorted[..sorted.len() - 2]
        .iter()
        .filter(|p| p.mean - b0 > 1e-12)
        .map(|p| (p.length as f64, (p.mean - b0).ln()))
        .collect();
    let (mut a0, mut p) = (sorted[0].mean - b0, 0.9);
    if usable.len() >= 2 {
        let n = usable.len() as f64;
        let sx: f64 = usable.iter().map(|u| u.0).sum();
        let sy: f64 = usable.iter().map(|u| u.1).sum();
        let sxx: f64 = usable.iter().map(|u| u.0 * u.0).sum();
        let sxy: f64 = usable.iter().map(|u| u.0 * u.1).sum();
        let denom = n * sxx - sx * sx;
        if denom.abs() > 1e-300 {
            let slope = (n * sxy - sx * sy) / denom;
            let intercept = (sy - slope * sx) / n;
            p = slope.exp();
            a0 = intercept.exp();
        }
    }
    project([a0, b0, p.clamp(1e-3, 1.0 - 1e-9)])
}

/// Weighted fit of the zeroth-order decay. Points with positive `stderr`
/// are weighted by `1/stderr²`; if any point lacks one, all get unit weight.
pub fn fit_decay(points: &[FidelityPoint]) -> Result<DecayFit> {
    let mut lengths: Vec<usize> = points.iter().map(|p| p.length).collect();
    lengths.sort_unstable();
    lengths.dedup();
    if lengths.len() < 3 {
        return Err(Error::InsufficientData(format!(
            "need at least 3 distinct sequence lengths, got {}",
            lengths.len()
        )));
    }
    if let Some(bad) = points.iter().find(|p| !(0.0..=1.0).contains(&p.mean)) {
        return Err(invalid(format!("mean {} at length {} outside [0, 1]", bad.mean, bad.length)));
    }
    let first = points[0].mean;
    if points.iter().all(|p| (p.mean - first).abs() <= 1e-15) {
        return Ok(DecayFit {
            a0: 0.0,
            b0: first,
            p: 1.0,
            avg_fidelity: 1.0,
            residual_norm: 0.0,
            ci_p: None,
            degenerate: true,
            p_at_bound: true,
            iterations: 0,
        });
    }

    let weighted = points.iter().all(|p| p.stderr > 0.0 && p.stderr.is_finite());
    let problem = Problem {
        s: points.iter().map(|p| p.length as f64).collect(),
        y: points.iter().map(|p| p.mean).collect(),
        w: points.iter().map(|p| if weighted { p.stderr.powi(-2) } else { 1.0 }).collect(),
    };

    let mut theta = initial_guess(points);
    let mut cost = problem.cost(&theta);
    let mut lambda = 1e-3;
    let mut iterations = 0;
    while iterations < MAX_ITERATIONS {
        iterations += 1;
        let (jtj, jtr) = problem.normal_equations(&theta);
        let mut improved = false;
        while lambda < 1e16 {
            let mut damped = jtj;
            for (a, row) in damped.iter_mut().enumerate() {
                row[a] += lambda * jtj[a][a].max(1e-12);
            }
            let Some(delta) = solve3(damped, jtr) else {
                lambda *= 4.0;
                continue;
            };
            let trial = project([theta[0] + delta[0], theta[1] + delta[1], theta[2] + delta[2]]);
            let trial_cost = problem.cost(&trial);
            if trial_cost <= cost {
                let step = (0..3).map(|k| (trial[k] - theta[k]).abs()).fold(0.0, f64::max);
                let scale = theta.iter().map(|v| v.abs()).fold(0.0, f64::max).max(1e-12);
                let cost_change = cost - trial_cost;
                theta = trial;
                cost = trial_cost;
                lambda = (lambda / 3.0).max(1e-15);
                improved = step > REL_TOL * scale && cost_change > REL_TOL * REL_TOL * cost.max(1e-300);
                break;
            }
            lambda *= 4.0;
        }
        if !improved {
            break;
        }
    }

    let [a0, b0, p] = theta;
    Ok(DecayFit {
        a0,
        b0,
        p,
        avg_fidelity: (1.0 + p) / 2.0,
        residual_norm: cost.sqrt(),
        ci_p: None,
        degenerate: false,
        p_at_bound: p <= 0.0 || p >= 1.0,
        iterations,
    })
}

fn percentile(sorted: &[f64], q: f64) -> f64 {
    let pos = q * (sorted.len() - 1) as f64;
    let lo = pos.floor() as usize;
    let hi = pos.ceil() as usize;
    sorted[lo] + (sorted[hi] - sorted[lo]) * (pos - lo as f64)
}

/// 95% percentile interval for `p`, resampling sequences with replacement
/// within each length. Each resample draws from its own stream of `seed`.
pub fn bootstrap_ci(dataset: &RBDataset, resamples: usize, seed: u64) -> Result<(f64, f64)> {
    use rand::Rng;
    if resamples < 100 {
        return Err(invalid(format!("bootstrap needs at least 100 resamples, got {resamples}")));
    }
    let groups: Vec<(usize, Vec<&SequenceRecord>)> =
        dataset.lengths().into_iter().map(|s| (s, dataset.records_at(s).collect())).collect();
    let mut ps: Vec<f64> = (0..resamples)
        .into_par_iter()
        .map(|r| {
            let mut rng = stream(seed, r as u64, 0, BOOTSTRAP_SLOT);
            let points: Vec<FidelityPoint> = groups
                .iter()
                .map(|(s, recs)| {
                    let fractions: Vec<f64> =
                        (0..recs.len()).map(|_| recs[rng.gen_range(0..recs.len())].survival_fraction()).collect();
                    let (mean, stderr) = mean_and_stderr(&fractions).expect("nonempty group");
                    FidelityPoint { length: *s, mean, stderr }
                })
                .collect();
            fit_decay(&points).map(|f| f.p)
        })
        .collect::<Result<Vec<f64>>>()?;
    ps.sort_by(f64::total_cmp);
    Ok((percentile(&ps, 0.025), percentile(&ps, 0.975)))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn exact_points(a0: f64, b0: f64, p: f64, lengths: impl Iterator<Item = usize>) -> Vec<FidelityPoint> {
        lengths.map(|s| FidelityPoint { length: s, mean: a0 * p.powi(s as i32) + b0, stderr: 0.0 }).collect()
    }

    #[test]
    fn recovers_exact_model() {
        let f = fit_decay(&exact_points(0.5, 0.5, 0.98, 1..=20)).unwrap();
        assert!((f.a0 - 0.5).abs() < 1e-9, "{f:?}");
        assert!((f.b0 - 0.5).abs() < 1e-9, "{f:?}");
        assert!((f.p - 0.98).abs() < 1e-9, "{f:?}");
        assert!((f.avg_fidelity - 0.99).abs() < 1e-9);
        assert!(!f.degenerate);
    }

    #[test]
    fn parameter_grid() {
        for p in [0.5, 0.9, 0.99] {
            for a0 in [0.3, 0.5] {
                for b0 in [0.4, 0.5] {
                    let f = fit_decay(&exact_points(a0, b0, p, 1..=20)).unwrap();
                    assert!((f.p - p).abs() < 1e-9, "p={p} a0={a0} b0={b0}: {f:?}");
                    assert!((f.a0 - a0).abs() < 1e-9, "p={p} a0={a0} b0={b0}: {f:?}");
                    assert!((f.b0 - b0).abs() < 1e-9, "p={p} a0={a0} b0={b0}: {f:?}");
                    assert!((f.p - (2.0 * f.avg_fidelity - 1.0)).abs() <= f64::EPSILON);
                }
            }
        }
    }

    #[test]
    fn degenerate_and_insufficient() {
        let flat: Vec<FidelityPoint> = (1..=5).map(|s| FidelityPoint { length: s, mean: 0.5, stderr: 0.01 }).collect();
        let f = fit_decay(&flat).unwrap();
        assert!(f.degenerate);
        assert_eq!((f.p, f.a0, f.b0), (1.0, 0.0, 0.5));
        let two: Vec<FidelityPoint> = flat[..2].to_vec();
        assert!(matches!(fit_decay(&two), Err(Error::InsufficientData(_))));
        let mut bad = flat.clone();
        bad[0].mean = 1.2;
        assert!(fit_decay(&bad).is_err());
    }

    #[test]
    fn fidelity_conversion() {
        assert_eq!(fidelity_from_p(1.0).unwrap(), 1.0);
        assert_eq!(fidelity_from_p(0.0).unwrap(), 0.5);
        assert!((fidelity_from_p(0.96).unwrap() - 0.98).abs() < 1e-15);
        assert!(fidelity_from_p(1.01).is_err());
        assert!(fidelity_from_p(-0.1).is_err());
    }

    #[test]
    fn deterministic() {
        let pts: Vec<FidelityPoint> = exact_points(0.45, 0.52, 0.93, 1..=12)
            .into_iter()
            .enumerate()
            .map(|(k, mut p)| {
                p.mean += if k % 2 == 0 { 0.004 } else { -0.003 };
                p.stderr = 0.01;
                p
            })
            .collect();
        assert_eq!(fit_decay(&pts).unwrap(), fit_decay(&pts).unwrap());
    }
}
