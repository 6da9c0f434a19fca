//! Dense hashed weight vector with an averaging accumulator.

use alloc::vec;
use alloc::vec::Vec;

use crate::error::{Error, Result};
use crate::features::FeatureConfig;

/// Weights plus the bookkeeping for the running average of every
/// intermediate weight vector.
///
/// `update_count` counts training steps, including steps without an update.
/// An update of `delta` at step `t` adds `(t - 1) * delta` to the accumulator,
/// so after `T` steps the average is `weights - accumulator / T`.
#[derive(Debug, Clone, PartialEq)]
pub struct WeightModel {
    config: FeatureConfig,
    weights: Vec<f64>,
    accumulator: Vec<f64>,
    update_count: u64,
}

impl WeightModel {
    pub fn new(config: FeatureConfig) -> Self {
        let d = config.dimension();
        WeightModel {
            config,
            weights: vec![0.0; d],
            accumulator: vec![0.0; d],
            update_count: 0,
        }
    }

    pub fn from_parts(config: FeatureConfig, weights: Vec<f64>, accumulator: Vec<f64>, update_count: u64) -> Result<Self> {
        let d = config.dimension();
        for len in [weights.len(), accumulator.len()] {
            if len != d {
                return Err(Error::DimensionMismatch { expected: d, found: len });
            }
        }
        Ok(WeightModel {
            config,
            weights,
            accumulator,
            update_count,
        })
    }

    /// A model whose average is `weights` itself.
    pub fn from_weights(config: FeatureConfig, weights: Vec<f64>) -> Result<Self> {
        let d = config.dimension();
        Self::from_parts(config, weights, vec![0.0; d], 0)
    }

    pub fn config(&self) -> &FeatureConfig {
        &self.config
    }

    pub fn dimension(&self) -> usize {
        self.weights.len()
    }

    pub fn weights(&self) -> &[f64] {
        &self.weights
    }

    pub fn accumulator(&self) -> &[f64] {
        &self.accumulator
    }

    pub fn update_count(&self) -> u64 {
        self.update_count
    }

    /// Starts a new training step.
    pub fn tick(&mut self) {
        self.update_count += 1;
    }

    /// Adds `delta` to weight `index` within the current step.
    #[inline]
    pub fn update(&mut self, index: u32, delta: f64) {
        let i = index as usize;
        self.weights[i] += delta;
        self.accumulator[i] += self.update_count.saturating_sub(1) as f64 * delta;
    }

    /// Adds `scale` once per occurrence of each index.
    pub fn update_all(&mut self, indices: &[u32], scale: f64) {
        for &i in indices {
            self.update(i, scale);
        }
    }

    /// Running average of the weight vectors after every step so far.
    pub fn averaged(&self) -> Vec<f64> {
        if self.update_count == 0 {
            return self.weights.clone();
        }
        let t = self.update_count as f64;
        self.weights
            .iter()
            .zip(&self.accumulator)
            .map(|(w, u)| w - u / t)
            .collect()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn average_equals_mean_of_snapshots() {
        let config = FeatureConfig::new(16).unwrap();
        let mut m = WeightModel::new(config);
        let steps: [&[(u32, f64)]; 4] = [&[(0, 1.0), (3, -2.0)], &[], &[(3, 4.0)], &[(0, -1.0), (7, 0.5)]];
        let mut snapshots: Vec<Vec<f64>> = Vec::new();
        for step in steps {
            m.tick();
            for &(i, d) in step {
                m.update(i, d);
            }
            snapshots.push(m.weights().to_vec());
        }
        let avg = m.averaged();
        for i in [0usize, 3, 7, 9] {
            let mean = snapshots.iter().map(|s| s[i]).sum::<f64>() / snapshots.len() as f64;
            assert_eq!(avg[i], mean, "index {i}");
        }
    }

    #[test]
    fn untrained_average_is_the_weights() {
        let config = FeatureConfig::new(16).unwrap();
        let mut w = vec![0.0; config.dimension()];
        w[5] = 2.5;
        let m = WeightModel::from_weights(config.clone(), w.clone()).unwrap();
        assert_eq!(m.averaged(), w);
        assert!(WeightModel::from_weights(config, vec![0.0; 3]).is_err());
    }
}
