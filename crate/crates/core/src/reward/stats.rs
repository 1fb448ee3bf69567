//! Score normalization and linear scalarization.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Per-dimension mean and standard deviation measured on the validation
/// split, used to z-score raw reward outputs before aggregation.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ScoreStats {
    pub mean: [f64; 3],
    pub std: [f64; 3],
}

impl ScoreStats {
    /// Population statistics over per-dimension score rows.
    pub fn measure(scores: &[[f64; 3]]) -> Result<Self> {
        if scores.is_empty() {
            return Err(Error::Input("cannot measure stats of zero scores".into()));
        }
        let n = scores.len() as f64;
        let mut mean = [0.0; 3];
        for row in scores {
            for d in 0..3 {
                mean[d] += row[d] / n;
            }
        }
        let mut var = [0.0; 3];
        for row in scores {
            for d in 0..3 {
                let e = row[d] - mean[d];
                var[d] += e * e / n;
            }
        }
        let std = [var[0].sqrt(), var[1].sqrt(), var[2].sqrt()];
        let stats = ScoreStats { mean, std };
        stats.validate()?;
        Ok(stats)
    }

    pub fn validate(&self) -> Result<()> {
        if self.std.iter().any(|&s| !(s > 0.0)) {
            return Err(Error::Config(format!(
                "score stats need positive std, got {:?}",
                self.std
            )));
        }
        Ok(())
    }
}

/// Convex weights over (vq, mq, ta) for linear scalarization.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RewardWeights {
    pub w_vq: f64,
    pub w_mq: f64,
    pub w_ta: f64,
}

impl RewardWeights {
    pub fn new(w_vq: f64, w_mq: f64, w_ta: f64) -> Result<Self> {
        let w = RewardWeights { w_vq, w_mq, w_ta };
        w.validate()?;
        Ok(w)
    }

    pub fn equal() -> Self {
        RewardWeights {
            w_vq: 1.0 / 3.0,
            w_mq: 1.0 / 3.0,
            w_ta: 1.0 / 3.0,
        }
    }

    pub fn validate(&self) -> Result<()> {
        let arr = self.as_array();
        if arr.iter().any(|&w| w < 0.0) {
            return Err(Error::Config(format!("weights must be >= 0, got {arr:?}")));
        }
        let sum: f64 = arr.iter().sum();
        if (sum - 1.0).abs() > 1e-9 {
            return Err(Error::Config(format!(
                "weights must sum to 1 (simplex), got {arr:?} with sum {sum}"
            )));
        }
        Ok(())
    }

    pub fn as_array(&self) -> [f64; 3] {
        [self.w_vq, self.w_mq, self.w_ta]
    }

    /// Parses `"vq:mq:ta"` (e.g. `"0:0:1"`), validating simplex membership.
    pub fn parse(s: &str) -> Result<Self> {
        let parts: Vec<&str> = s.split(':').collect();
        if parts.len() != 3 {
            return Err(Error::Config(format!(
                "weights must be vq:mq:ta, got '{s}'"
            )));
        }
        let mut vals = [0.0; 3];
        for (slot, p) in vals.iter_mut().zip(parts.iter()) {
            *slot = p
                .trim()
                .parse::<f64>()
                .map_err(|_| Error::Config(format!("bad weight component '{p}'")))?;
        }
        RewardWeights::new(vals[0], vals[1], vals[2])
    }
}

impl std::fmt::Display for RewardWeights {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "{}:{}:{}", self.w_vq, self.w_mq, self.w_ta)
    }
}

/// Z-scores the raw per-dimension scores and scalarizes with `weights`.
///
/// Returns the normalized vector and the weighted overall score.
pub fn normalize_scores(
    raw: &[f64; 3],
    stats: &ScoreStats,
    weights: &RewardWeights,
) -> Result<([f64; 3], f64)> {
    stats.validate()?;
    weights.validate()?;
    let mut z = [0.0; 3];
    for d in 0..3 {
        z[d] = (raw[d] - stats.mean[d]) / stats.std[d];
    }
    let w = weights.as_array();
    let overall = z.iter().zip(w.iter()).map(|(zi, wi)| zi * wi).sum();
    Ok((z, overall))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn stats() -> ScoreStats {
        ScoreStats {
            mean: [-0.5, -0.4, -1.0],
            std: [0.2, 0.1, 0.5],
        }
    }

    #[test]
    fn mean_vector_normalizes_to_zero() {
        let (z, overall) =
            normalize_scores(&[-0.5, -0.4, -1.0], &stats(), &RewardWeights::equal()).unwrap();
        assert_eq!(z, [0.0, 0.0, 0.0]);
        assert_eq!(overall, 0.0);
    }

    #[test]
    fn one_std_above_mean_gives_unit_overall() {
        let raw = [-0.3, -0.3, -0.5];
        let (z, overall) =
            normalize_scores(&raw, &stats(), &RewardWeights::equal()).unwrap();
        for zi in z {
            assert!((zi - 1.0).abs() < 1e-12);
        }
        assert!((overall - 1.0).abs() < 1e-12);
    }

    #[test]
    fn degenerate_weights_pick_one_dimension() {
        let raw = [-0.1, -0.2, -0.25];
        let w = RewardWeights::new(0.0, 0.0, 1.0).unwrap();
        let (z, overall) = normalize_scores(&raw, &stats(), &w).unwrap();
        assert_eq!(overall, z[2]);
    }

    #[test]
    fn zero_std_is_a_config_error() {
        let bad = ScoreStats {
            mean: [0.0; 3],
            std: [1.0, 0.0, 1.0],
        };
        assert!(normalize_scores(&[0.0; 3], &bad, &RewardWeights::equal()).is_err());
    }

    #[test]
    fn weights_off_the_simplex_are_rejected() {
        assert!(RewardWeights::new(0.5, 0.5, 0.5).is_err());
        assert!(RewardWeights::new(-0.5, 0.5, 1.0).is_err());
        assert!(RewardWeights::parse("0.5:0.5:0.5").is_err());
        assert!(RewardWeights::parse("0:0:1").is_ok());
    }

    #[test]
    fn measure_recovers_population_moments() {
        let rows = vec![[0.0, 2.0, -1.0], [2.0, 4.0, 1.0]];
        let s = ScoreStats::measure(&rows).unwrap();
        assert_eq!(s.mean, [1.0, 3.0, 0.0]);
        assert_eq!(s.std, [1.0, 1.0, 1.0]);
    }
}
