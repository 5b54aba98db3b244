//! Regression estimators for `beta` and `alpha`, and the centered growth
//! statistic used to check the central limit behaviour of `L_n`.

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::model::{AttributeMatrix, ModelParams};

/// Below this `beta` the logarithmic growth regime is assumed when
/// estimating `alpha`.
pub const LOG_BRANCH_THRESHOLD: f64 = 0.05;

/// Smallest number of usable points accepted by the regressions.
pub const MIN_POINTS: usize = 10;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum EstimationError {
    #[error("growth curve is empty")]
    EmptyCurve,
    #[error("growth curve decreases at node {0}")]
    NotMonotone(usize),
    #[error("growth curve value at node {0} is negative or not finite")]
    InvalidValue(usize),
    #[error("fit range {start}..={end} is invalid for a curve of {n} nodes")]
    InvalidRange { start: usize, end: usize, n: usize },
    #[error("fit range holds {got} usable points, at least {MIN_POINTS} needed")]
    TooFewPoints { got: usize },
    #[error("regression abscissae are all equal")]
    Degenerate,
    #[error("beta = {0} is outside [0, 1]")]
    BetaOutOfRange(f64),
    #[error("mean fitness must be positive and finite, got {0}")]
    InvalidMean(f64),
}

/// The sequence `L_1, ..., L_n`.
#[derive(Debug, Clone, PartialEq)]
pub struct GrowthCurve {
    totals: Vec<f64>,
}

impl GrowthCurve {
    /// Accepts real-valued curves so that noiseless limit curves can be fed
    /// to the estimators.
    pub fn new(totals: Vec<f64>) -> Result<Self, EstimationError> {
        if totals.is_empty() {
            return Err(EstimationError::EmptyCurve);
        }
        if let Some(i) = totals.iter().position(|v| !(v.is_finite() && *v >= 0.0)) {
            return Err(EstimationError::InvalidValue(i + 1));
        }
        if let Some(i) = totals.windows(2).position(|w| w[1] < w[0]) {
            return Err(EstimationError::NotMonotone(i + 2));
        }
        Ok(Self { totals })
    }

    pub fn from_counts(totals: &[usize]) -> Result<Self, EstimationError> {
        Self::new(totals.iter().map(|&v| v as f64).collect())
    }

    pub fn from_matrix(matrix: &AttributeMatrix) -> Self {
        Self {
            totals: matrix.prefix_totals().iter().map(|&v| v as f64).collect(),
        }
    }

    pub fn n(&self) -> usize {
        self.totals.len()
    }

    /// `L_i` for the 1-based node index `i`.
    pub fn at(&self, i: usize) -> f64 {
        self.totals[i - 1]
    }

    pub fn last(&self) -> f64 {
        self.totals[self.totals.len() - 1]
    }

    pub fn totals(&self) -> &[f64] {
        &self.totals
    }
}

/// Inclusive range of 1-based node indices used by the regressions.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct FitRange {
    pub start: usize,
    pub end: usize,
}

impl FitRange {
    pub fn full(n: usize) -> Self {
        Self { start: 1, end: n }
    }

    /// Drops the first `max(10, n / 10)` nodes, unless fewer than
    /// [`MIN_POINTS`] would remain.
    pub fn default_for(n: usize) -> Self {
        let skip = (n / 10).max(10);
        if n >= skip + MIN_POINTS {
            Self { start: skip + 1, end: n }
        } else {
            Self::full(n)
        }
    }

    fn check(&self, n: usize) -> Result<(), EstimationError> {
        if self.start == 0 || self.start > self.end || self.end > n {
            return Err(EstimationError::InvalidRange {
                start: self.start,
                end: self.end,
                n,
            });
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LineFit {
    pub slope: f64,
    pub intercept: f64,
    pub r2: f64,
}

/// Ordinary least squares of `y` on `x` with an intercept.
pub fn ols(x: &[f64], y: &[f64]) -> Result<LineFit, EstimationError> {
    assert_eq!(x.len(), y.len());
    let n = x.len() as f64;
    let mx = x.iter().sum::<f64>() / n;
    let my = y.iter().sum::<f64>() / n;
    let (mut sxx, mut sxy, mut syy) = (0.0, 0.0, 0.0);
    for (&a, &b) in x.iter().zip(y) {
        let (dx, dy) = (a - mx, b - my);
        sxx += dx * dx;
        sxy += dx * dy;
        syy += dy * dy;
    }
    if sxx == 0.0 || !sxx.is_finite() {
        return Err(EstimationError::Degenerate);
    }
    let slope = sxy / sxx;
    let r2 = if syy == 0.0 { 1.0 } else { sxy * sxy / (sxx * syy) };
    Ok(LineFit {
        slope,
        intercept: my - slope * mx,
        r2,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BetaFit {
    pub beta_hat: f64,
    pub r2: f64,
    /// Set when the slope falls outside `[0, 1]`; the value is not clamped.
    pub out_of_range: bool,
    pub points: usize,
}

/// Slope of `ln L_i` against `ln i` over `range`, skipping nodes with `L_i = 0`.
pub fn estimate_beta(curve: &GrowthCurve, range: FitRange) -> Result<BetaFit, EstimationError> {
    range.check(curve.n())?;
    let (x, y): (Vec<f64>, Vec<f64>) = (range.start..=range.end)
        .filter(|&i| curve.at(i) > 0.0)
        .map(|i| ((i as f64).ln(), curve.at(i).ln()))
        .unzip();
    if x.len() < MIN_POINTS {
        return Err(EstimationError::TooFewPoints { got: x.len() });
    }
    let fit = ols(&x, &y)?;
    Ok(BetaFit {
        beta_hat: fit.slope,
        r2: fit.r2,
        out_of_range: !(0.0..=1.0).contains(&fit.slope),
        points: x.len(),
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct AlphaFit {
    /// Regression slope of `L_i` against `ln i` or `i^beta`.
    pub gamma_hat: f64,
    pub alpha_prime_hat: f64,
    /// Present only when the mean fitness was supplied.
    pub alpha_hat: Option<f64>,
    pub log_branch: bool,
    pub r2: f64,
}

/// Estimates `alpha'` (and `alpha` when `mean_fitness` is known) for a given
/// `beta` in `[0, 1]`.
pub fn estimate_alpha(
    curve: &GrowthCurve,
    beta: f64,
    mean_fitness: Option<f64>,
    range: FitRange,
) -> Result<AlphaFit, EstimationError> {
    if !(0.0..=1.0).contains(&beta) {
        return Err(EstimationError::BetaOutOfRange(beta));
    }
    if let Some(m) = mean_fitness {
        if !(m.is_finite() && m > 0.0) {
            return Err(EstimationError::InvalidMean(m));
        }
    }
    range.check(curve.n())?;
    let log_branch = beta < LOG_BRANCH_THRESHOLD;
    let (x, y): (Vec<f64>, Vec<f64>) = (range.start..=range.end)
        .map(|i| {
            let i_f = i as f64;
            let xi = if log_branch { i_f.ln() } else { i_f.powf(beta) };
            (xi, curve.at(i))
        })
        .unzip();
    if x.len() < MIN_POINTS {
        return Err(EstimationError::TooFewPoints { got: x.len() });
    }
    let fit = ols(&x, &y)?;
    let gamma = fit.slope;
    let (alpha_prime_hat, alpha_hat) = if log_branch {
        (gamma, mean_fitness.map(|m| m * gamma))
    } else {
        (beta * gamma, mean_fitness.map(|m| beta * m.powf(1.0 - beta) * gamma))
    };
    Ok(AlphaFit {
        gamma_hat: gamma,
        alpha_prime_hat,
        alpha_hat,
        log_branch,
        r2: fit.r2,
    })
}

/// Combined estimation output.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EstimationResult {
    pub beta_hat: f64,
    pub beta_out_of_range: bool,
    pub alpha_prime_hat: f64,
    pub alpha_hat: Option<f64>,
    pub fit_range: FitRange,
    pub r2: f64,
}

/// Estimates `beta`, then `alpha'` (and `alpha`) at the estimated `beta`
/// clamped to `[0, 1]`.
pub fn estimate(
    curve: &GrowthCurve,
    mean_fitness: Option<f64>,
    range: Option<FitRange>,
) -> Result<EstimationResult, EstimationError> {
    let range = range.unwrap_or_else(|| FitRange::default_for(curve.n()));
    let beta = estimate_beta(curve, range)?;
    let alpha = estimate_alpha(curve, beta.beta_hat.clamp(0.0, 1.0), mean_fitness, range)?;
    Ok(EstimationResult {
        beta_hat: beta.beta_hat,
        beta_out_of_range: beta.out_of_range,
        alpha_prime_hat: alpha.alpha_prime_hat,
        alpha_hat: alpha.alpha_hat,
        fit_range: range,
        r2: beta.r2,
    })
}

/// `sqrt(a_n) (L_n / a_n - lambda)` for the last point of the curve.
pub fn clt_statistic(
    curve: &GrowthCurve,
    params: &ModelParams,
    mean_fitness: f64,
) -> Result<f64, EstimationError> {
    clt_statistic_at(curve.last(), curve.n(), params, mean_fitness)
}

/// [`clt_statistic`] from `L_n` and `n` directly.
pub fn clt_statistic_at(
    l_n: f64,
    n: usize,
    params: &ModelParams,
    mean_fitness: f64,
) -> Result<f64, EstimationError> {
    if !(mean_fitness.is_finite() && mean_fitness > 0.0) {
        return Err(EstimationError::InvalidMean(mean_fitness));
    }
    let (Some(lambda), Some(a_n)) = (params.growth_limit(mean_fitness), params.growth_scale(n)) else {
        return Err(EstimationError::BetaOutOfRange(params.beta()));
    };
    Ok(a_n.sqrt() * (l_n / a_n - lambda))
}
