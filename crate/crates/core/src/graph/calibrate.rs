use serde::{Deserialize, Serialize};

use super::{EdgeModel, GraphError, PairWeights};

/// Relative accuracy the Newton iteration aims for; the contract is `1e-6`.
const SOLVER_TOL: f64 = 1e-10;
const MAX_ITERS: usize = 500;

/// `1 / (exp(K (theta - x)) + 1)`; a step function with value 1/2 at `theta`
/// when `K` is infinite.
pub fn sigmoid(x: f64, k: f64, theta: f64) -> f64 {
    if x == theta {
        return 0.5;
    }
    if k.is_infinite() {
        return if x > theta { 1.0 } else { 0.0 };
    }
    let z = k * (x - theta);
    if z >= 0.0 {
        1.0 / (1.0 + (-z).exp())
    } else {
        let e = z.exp();
        e / (1.0 + e)
    }
}

/// Multiset of pair weights as `(value, multiplicity)` runs in ascending
/// order of value.
#[derive(Debug, Clone, PartialEq)]
pub struct WeightDistribution {
    runs: Vec<(f64, u64)>,
    total: u64,
}

impl WeightDistribution {
    /// Sorts and merges the given runs; zero multiplicities are dropped.
    pub fn new(mut runs: Vec<(f64, u64)>) -> Self {
        runs.retain(|r| r.1 > 0);
        runs.sort_by(|a, b| a.0.total_cmp(&b.0));
        let mut merged: Vec<(f64, u64)> = Vec::with_capacity(runs.len());
        for (w, c) in runs {
            match merged.last_mut() {
                Some(last) if last.0 == w => last.1 += c,
                _ => merged.push((w, c)),
            }
        }
        let total = merged.iter().map(|r| r.1).sum();
        Self { runs: merged, total }
    }

    pub fn from_values(values: &[f64]) -> Self {
        Self::new(values.iter().map(|&w| (w, 1)).collect())
    }

    pub fn runs(&self) -> &[(f64, u64)] {
        &self.runs
    }

    /// Number of pairs.
    pub fn total(&self) -> u64 {
        self.total
    }
}

/// `sum Phi(w)` over the multiset.
pub fn expected_edges(dist: &WeightDistribution, k: f64, theta: f64) -> f64 {
    dist.runs.iter().map(|&(w, c)| c as f64 * sigmoid(w, k, theta)).sum()
}

/// Outcome of a threshold calibration.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Calibration {
    pub theta: f64,
    pub target: f64,
    /// `sum Phi(w)` at `theta`.
    pub expected: f64,
    pub iterations: usize,
}

impl Calibration {
    pub fn relative_error(&self) -> f64 {
        if self.target == 0.0 {
            self.expected.abs()
        } else {
            (self.expected - self.target).abs() / self.target
        }
    }
}

/// Finds `theta` with `sum Phi(w) = target`.
///
/// A target of 0 gives `theta = +inf` and a target equal to the number of
/// pairs gives `-inf`. For the step function the expected count only takes
/// finitely many values; `theta` is then placed midway between two
/// consecutive distinct weights (or one unit outside the range) so that the
/// count is as close to the target as possible, preferring fewer edges on
/// ties.
pub fn calibrate_theta(dist: &WeightDistribution, k: f64, target: f64) -> Result<Calibration, GraphError> {
    if !(k > 0.0) {
        return Err(GraphError::InvalidSteepness(k));
    }
    if !(target.is_finite() && target >= 0.0) {
        return Err(GraphError::InvalidTarget(target));
    }
    let pairs = dist.total();
    if target > pairs as f64 {
        return Err(GraphError::TargetTooLarge { target, pairs });
    }
    let boundary = |theta: f64| Calibration {
        theta,
        target,
        expected: expected_edges(dist, k, theta),
        iterations: 0,
    };
    if target == 0.0 {
        log::warn!("target edge count 0: threshold set to +inf");
        return Ok(boundary(f64::INFINITY));
    }
    if target == pairs as f64 {
        log::warn!("target edge count equals all {pairs} pairs: threshold set to -inf");
        return Ok(boundary(f64::NEG_INFINITY));
    }
    if k.is_infinite() {
        return Ok(step_threshold(dist, target));
    }
    newton(dist, k, target)
}

fn step_threshold(dist: &WeightDistribution, target: f64) -> Calibration {
    let runs = dist.runs();
    // Candidate i keeps the runs i.. as edges.
    let mut best = (f64::INFINITY, 0.0, f64::INFINITY);
    let mut above = 0u64;
    for i in (0..=runs.len()).rev() {
        let theta = if i == runs.len() {
            runs[i - 1].0 + 1.0
        } else if i == 0 {
            runs[0].0 - 1.0
        } else {
            0.5 * (runs[i - 1].0 + runs[i].0)
        };
        if i < runs.len() {
            above += runs[i].1;
        }
        let err = (above as f64 - target).abs();
        if err < best.0 {
            best = (err, above as f64, theta);
        }
    }
    Calibration {
        theta: best.2,
        target,
        expected: best.1,
        iterations: 0,
    }
}

fn newton(dist: &WeightDistribution, k: f64, target: f64) -> Result<Calibration, GraphError> {
    let runs = dist.runs();
    let f = |theta: f64| -> (f64, f64) {
        let (mut e, mut d) = (0.0, 0.0);
        for &(w, c) in runs {
            let p = sigmoid(w, k, theta);
            e += c as f64 * p;
            d += c as f64 * p * (1.0 - p);
        }
        (e - target, -k * d)
    };
    let (w_min, w_max) = (runs[0].0, runs[runs.len() - 1].0);
    // f is strictly decreasing; widen until the root is bracketed.
    let mut step = 1.0 / k + 1.0;
    let mut lo = w_min - step;
    while f(lo).0 <= 0.0 {
        step *= 2.0;
        lo = w_min - step;
        if !lo.is_finite() {
            return Err(GraphError::Calibration("lower bracket diverged".into()));
        }
    }
    let mut step = 1.0 / k + 1.0;
    let mut hi = w_max + step;
    while f(hi).0 >= 0.0 {
        step *= 2.0;
        hi = w_max + step;
        if !hi.is_finite() {
            return Err(GraphError::Calibration("upper bracket diverged".into()));
        }
    }

    let mut theta = 0.5 * (lo + hi);
    for iter in 1..=MAX_ITERS {
        let (g, dg) = f(theta);
        if g.abs() <= SOLVER_TOL * target {
            return Ok(Calibration {
                theta,
                target,
                expected: g + target,
                iterations: iter,
            });
        }
        if g > 0.0 {
            lo = theta;
        } else {
            hi = theta;
        }
        let mut next = if dg < 0.0 { theta - g / dg } else { f64::NAN };
        if !(next > lo && next < hi) {
            next = 0.5 * (lo + hi);
        }
        if next == theta || hi - lo <= f64::EPSILON * theta.abs().max(1.0) {
            break;
        }
        theta = next;
    }
    let (g, _) = f(theta);
    let cal = Calibration {
        theta,
        target,
        expected: g + target,
        iterations: MAX_ITERS,
    };
    if cal.relative_error() <= 1e-6 {
        Ok(cal)
    } else {
        Err(GraphError::Calibration(format!(
            "relative error {:.3e} at theta = {theta}",
            cal.relative_error()
        )))
    }
}

/// Calibrates `model.theta` so the feature term accounts for its share of
/// `target_m` expected edges, and stores the result in the model.
pub fn calibrate_model(weights: &PairWeights, model: &mut EdgeModel, target_m: f64) -> Result<Calibration, GraphError> {
    model.validate()?;
    if !(target_m.is_finite() && target_m >= 0.0) {
        return Err(GraphError::InvalidTarget(target_m));
    }
    let pairs = weights.total_pairs();
    if target_m > pairs as f64 {
        return Err(GraphError::TargetTooLarge { target: target_m, pairs });
    }
    let cal = calibrate_theta(&weights.distribution(), model.k, target_m * model.feature_share())?;
    model.theta = cal.theta;
    Ok(cal)
}
