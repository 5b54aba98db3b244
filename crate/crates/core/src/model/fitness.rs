use std::fmt;
use std::str::FromStr;

use rand::Rng;
use serde::{Deserialize, Serialize};

use super::ModelError;
use crate::rng::{self, Stream};

/// Distribution of the i.i.d. fitness values `R_i`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case")]
pub enum FitnessSpec {
    /// Uniform on `[lo, hi]`.
    Uniform { lo: f64, hi: f64 },
    /// `v1` with probability `p`, `v2` otherwise.
    TwoPoint { v1: f64, v2: f64, p: f64 },
    /// Value `k` in `1..=num_values` with probability proportional to
    /// `k^-exponent`. When `normalized`, values are divided by their mean so
    /// that `m_R = 1`.
    Zipf {
        exponent: f64,
        num_values: u32,
        normalized: bool,
    },
}

impl FitnessSpec {
    pub fn uniform(lo: f64, hi: f64) -> Result<Self, ModelError> {
        let spec = Self::Uniform { lo, hi };
        spec.validate()?;
        Ok(spec)
    }

    pub fn two_point(v1: f64, v2: f64, p: f64) -> Result<Self, ModelError> {
        let spec = Self::TwoPoint { v1, v2, p };
        spec.validate()?;
        Ok(spec)
    }

    pub fn zipf(exponent: f64, num_values: u32, normalized: bool) -> Result<Self, ModelError> {
        let spec = Self::Zipf {
            exponent,
            num_values,
            normalized,
        };
        spec.validate()?;
        Ok(spec)
    }

    /// Constant fitness (degenerate uniform interval).
    pub fn constant(value: f64) -> Result<Self, ModelError> {
        Self::uniform(value, value)
    }

    pub fn validate(&self) -> Result<(), ModelError> {
        let bad = |msg: String| Err(ModelError::InvalidFitness(msg));
        match *self {
            Self::Uniform { lo, hi } => {
                if !(lo.is_finite() && hi.is_finite()) || lo <= 0.0 || hi < lo {
                    return bad(format!("uniform interval [{lo}, {hi}] must satisfy 0 < lo <= hi"));
                }
            }
            Self::TwoPoint { v1, v2, p } => {
                if !(v1.is_finite() && v2.is_finite()) || v1 <= 0.0 || v2 <= 0.0 {
                    return bad(format!("two-point values {v1}, {v2} must be positive"));
                }
                if !(0.0..=1.0).contains(&p) {
                    return bad(format!("two-point probability {p} outside [0, 1]"));
                }
            }
            Self::Zipf {
                exponent,
                num_values,
                ..
            } => {
                if !exponent.is_finite() {
                    return bad(format!("zipf exponent {exponent} is not finite"));
                }
                if num_values == 0 {
                    return bad("zipf needs at least one value".into());
                }
            }
        }
        Ok(())
    }

    /// `m_R`.
    pub fn mean(&self) -> f64 {
        match *self {
            Self::Uniform { lo, hi } => 0.5 * (lo + hi),
            Self::TwoPoint { v1, v2, p } => p * v1 + (1.0 - p) * v2,
            Self::Zipf { normalized: true, .. } => 1.0,
            Self::Zipf {
                exponent,
                num_values,
                ..
            } => zipf_raw_moment(exponent, num_values, 1),
        }
    }

    /// `E[R^2]`.
    pub fn second_moment(&self) -> f64 {
        match *self {
            Self::Uniform { lo, hi } => (lo * lo + lo * hi + hi * hi) / 3.0,
            Self::TwoPoint { v1, v2, p } => p * v1 * v1 + (1.0 - p) * v2 * v2,
            Self::Zipf {
                exponent,
                num_values,
                normalized,
            } => {
                let m2 = zipf_raw_moment(exponent, num_values, 2);
                if normalized {
                    let m1 = zipf_raw_moment(exponent, num_values, 1);
                    m2 / (m1 * m1)
                } else {
                    m2
                }
            }
        }
    }

    /// Smallest value in the support.
    pub fn lower_bound(&self) -> f64 {
        match *self {
            Self::Uniform { lo, .. } => lo,
            Self::TwoPoint { v1, v2, p } => {
                if p == 1.0 {
                    v1
                } else if p == 0.0 {
                    v2
                } else {
                    v1.min(v2)
                }
            }
            Self::Zipf {
                exponent,
                num_values,
                normalized,
            } => {
                if normalized {
                    1.0 / zipf_raw_moment(exponent, num_values, 1)
                } else {
                    1.0
                }
            }
        }
    }

    /// Draws `n` values from the fitness sub-stream of `seed`.
    pub fn sample(&self, n: usize, seed: u64) -> FitnessVector {
        let mut rng = rng::stream(seed, Stream::Fitness);
        let values = match *self {
            Self::Uniform { lo, hi } => (0..n)
                .map(|_| if lo == hi { lo } else { lo + (hi - lo) * rng.random::<f64>() })
                .collect(),
            Self::TwoPoint { v1, v2, p } => (0..n)
                .map(|_| if rng.random::<f64>() < p { v1 } else { v2 })
                .collect(),
            Self::Zipf {
                exponent,
                num_values,
                normalized,
            } => {
                let weights: Vec<f64> = (1..=num_values).map(|k| (k as f64).powf(-exponent)).collect();
                let total: f64 = weights.iter().sum();
                let mut cdf = Vec::with_capacity(weights.len());
                let mut acc = 0.0;
                for w in &weights {
                    acc += w / total;
                    cdf.push(acc);
                }
                let scale = if normalized {
                    1.0 / zipf_raw_moment(exponent, num_values, 1)
                } else {
                    1.0
                };
                (0..n)
                    .map(|_| {
                        let u: f64 = rng.random();
                        let k = cdf.partition_point(|&c| c <= u).min(cdf.len() - 1);
                        (k + 1) as f64 * scale
                    })
                    .collect()
            }
        };
        FitnessVector { values }
    }
}

fn zipf_raw_moment(exponent: f64, num_values: u32, order: i32) -> f64 {
    let mut num = 0.0;
    let mut den = 0.0;
    for k in 1..=num_values {
        let k = k as f64;
        let w = k.powf(-exponent);
        num += w * k.powi(order);
        den += w;
    }
    num / den
}

impl fmt::Display for FitnessSpec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match *self {
            Self::Uniform { lo, hi } => write!(f, "uniform:{lo}:{hi}"),
            Self::TwoPoint { v1, v2, p } => write!(f, "two-point:{v1}:{v2}:{p}"),
            Self::Zipf {
                exponent,
                num_values,
                normalized,
            } => {
                write!(f, "zipf:{exponent}:{num_values}")?;
                if !normalized {
                    write!(f, ":raw")?;
                }
                Ok(())
            }
        }
    }
}

/// Parses `uniform:LO:HI`, `two-point:V1:V2[:P]`, `zipf:S:K[:raw]` and
/// `constant:V`.
impl FromStr for FitnessSpec {
    type Err = ModelError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let parts: Vec<&str> = s.trim().split(':').collect();
        let bad = || ModelError::InvalidFitness(format!("cannot parse fitness spec {s:?}"));
        let num = |i: usize| -> Result<f64, ModelError> {
            parts.get(i).ok_or_else(bad)?.trim().parse::<f64>().map_err(|_| bad())
        };
        match parts[0].trim() {
            "uniform" if parts.len() == 3 => Self::uniform(num(1)?, num(2)?),
            "constant" if parts.len() == 2 => Self::constant(num(1)?),
            "two-point" if parts.len() == 3 => Self::two_point(num(1)?, num(2)?, 0.5),
            "two-point" if parts.len() == 4 => Self::two_point(num(1)?, num(2)?, num(3)?),
            "zipf" if parts.len() == 3 || parts.len() == 4 => {
                let k: u32 = parts[2].trim().parse().map_err(|_| bad())?;
                let normalized = match parts.get(3).map(|p| p.trim()) {
                    None | Some("normalized") => true,
                    Some("raw") => false,
                    Some(_) => return Err(bad()),
                };
                Self::zipf(num(1)?, k, normalized)
            }
            _ => Err(bad()),
        }
    }
}

/// Realized fitness values, one per node.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FitnessVector {
    values: Vec<f64>,
}

impl FitnessVector {
    pub fn new(values: Vec<f64>) -> Result<Self, ModelError> {
        if let Some((index, &value)) = values
            .iter()
            .enumerate()
            .find(|(_, v)| !(v.is_finite() && **v > 0.0))
        {
            return Err(ModelError::NonPositiveFitness { index, value });
        }
        Ok(Self { values })
    }

    pub fn constant(value: f64, n: usize) -> Result<Self, ModelError> {
        Self::new(vec![value; n])
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn into_values(self) -> Vec<f64> {
        self.values
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    pub fn mean(&self) -> f64 {
        self.values.iter().sum::<f64>() / self.values.len() as f64
    }

    /// Divides every value by `m`.
    pub fn scaled(&self, m: f64) -> Self {
        Self {
            values: self.values.iter().map(|v| v / m).collect(),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn degenerate_interval_is_constant() {
        let spec = FitnessSpec::uniform(1.0, 1.0).unwrap();
        assert_eq!(spec.sample(5, 3).values(), &[1.0; 5]);
    }

    #[test]
    fn rejects_nonpositive_support() {
        assert!(FitnessSpec::uniform(0.0, 1.0).is_err());
        assert!(FitnessSpec::uniform(2.0, 1.0).is_err());
        assert!(FitnessSpec::two_point(-1.0, 1.0, 0.5).is_err());
        assert!(FitnessSpec::two_point(1.0, 1.0, 1.5).is_err());
        assert!(FitnessSpec::zipf(2.0, 0, true).is_err());
        assert!(FitnessVector::new(vec![1.0, 0.0]).is_err());
    }

    #[test]
    fn parse_round_trip() {
        for text in ["uniform:0.25:1.75", "two-point:0.25:1.75:0.5", "zipf:2:10", "zipf:2:10:raw"] {
            let spec: FitnessSpec = text.parse().unwrap();
            assert_eq!(spec.to_string(), text);
            assert_eq!(spec.to_string().parse::<FitnessSpec>().unwrap(), spec);
        }
        assert_eq!(
            "two-point:0.25:1.75".parse::<FitnessSpec>().unwrap(),
            FitnessSpec::two_point(0.25, 1.75, 0.5).unwrap()
        );
        assert!("gamma:1:2".parse::<FitnessSpec>().is_err());
        assert!("uniform:a:2".parse::<FitnessSpec>().is_err());
    }

    #[test]
    fn two_point_empirical_mean() {
        let spec = FitnessSpec::two_point(0.25, 1.75, 0.5).unwrap();
        assert_eq!(spec.mean(), 1.0);
        let r = spec.sample(200_000, 11);
        assert!((r.mean() - 1.0).abs() < 0.01);
        assert!(r.values().iter().all(|&v| v == 0.25 || v == 1.75));
    }

    #[test]
    fn zipf_moments_match_direct_summation() {
        // Oracle: explicit pmf table for exponent 2 over 1..=10.
        let pmf: Vec<f64> = (1..=10).map(|k| 1.0 / (k * k) as f64).collect();
        let z: f64 = pmf.iter().sum();
        let raw_mean: f64 = pmf.iter().enumerate().map(|(i, p)| (i + 1) as f64 * p / z).sum();
        let raw = FitnessSpec::zipf(2.0, 10, false).unwrap();
        assert!((raw.mean() - raw_mean).abs() < 1e-12);
        assert!((raw_mean - 1.889_93).abs() < 1e-4);

        let spec = FitnessSpec::zipf(2.0, 10, true).unwrap();
        assert_eq!(spec.mean(), 1.0);
        assert!((spec.lower_bound() - 1.0 / raw_mean).abs() < 1e-12);
        let n = 100_000;
        let r = spec.sample(n, 5);
        let sd = (spec.second_moment() - 1.0).sqrt();
        assert!((r.mean() - 1.0).abs() < 3.0 * sd / (n as f64).sqrt());
        assert!(r.values().iter().all(|&v| v >= spec.lower_bound() - 1e-15));
    }

    #[test]
    fn uniform_moments() {
        let spec = FitnessSpec::uniform(0.25, 1.75).unwrap();
        assert_eq!(spec.mean(), 1.0);
        let r = spec.sample(50_000, 2);
        let m2 = r.values().iter().map(|v| v * v).sum::<f64>() / r.len() as f64;
        assert!((m2 - spec.second_moment()).abs() < 0.02);
        assert!(r.values().iter().all(|&v| (0.25..=1.75).contains(&v)));
    }

    #[test]
    fn sampling_is_deterministic() {
        let spec = FitnessSpec::uniform(0.5, 1.5).unwrap();
        assert_eq!(spec.sample(10, 9), spec.sample(10, 9));
        assert_ne!(spec.sample(10, 9), spec.sample(10, 10));
    }
}
