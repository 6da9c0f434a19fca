//! Forest-likelihood SGD for the log-linear graph parser.

use alloc::vec;
use alloc::vec::Vec;

use super::{skip_message, Item, Learner, TrainConfig, TrainingInstance};
use crate::error::Result;
use crate::features::{FeatureExtractor, Prepared};
use crate::graph::{for_each_factor, inside_outside, ConstraintMask, FactorScores, InsideOutsideResult};
use crate::model::WeightModel;

/// Feature indices of every factor of one sentence.
pub(crate) struct FactorFeatures {
    n: usize,
    arc: Vec<(u32, u32)>,
    sib: Vec<(u32, u32)>,
    indices: Vec<u32>,
}

impl FactorFeatures {
    pub fn new(extractor: &FeatureExtractor, p: &Prepared) -> Self {
        let n = p.len();
        let w = n + 1;
        let mut arc = vec![(0, 0); w * w];
        let mut sib = vec![(0, 0); w * w * w];
        let mut indices = Vec::new();
        for_each_factor(n, |h, m, s| {
            if s.is_none() {
                let start = indices.len() as u32;
                extractor.arc_into(p, h, m, &mut indices);
                arc[h * w + m] = (start, indices.len() as u32);
            }
            let start = indices.len() as u32;
            extractor.sibling_into(p, h, m, s, &mut indices);
            sib[crate::graph::factor_index(n, h, m, s)] = (start, indices.len() as u32);
        });
        FactorFeatures { n, arc, sib, indices }
    }

    fn slice(&self, r: (u32, u32)) -> &[u32] {
        &self.indices[r.0 as usize..r.1 as usize]
    }

    pub fn scores(&self, weight: impl Fn(u32) -> f64) -> FactorScores {
        let mut out = FactorScores::zeros(self.n);
        let w = self.n + 1;
        for_each_factor(self.n, |h, m, s| {
            let dot = |r| self.slice(r).iter().map(|&i| weight(i)).sum::<f64>();
            if s.is_none() {
                out.set_arc(h, m, dot(self.arc[h * w + m]));
            }
            out.set_sib(h, m, s, dot(self.sib[crate::graph::factor_index(self.n, h, m, s)]));
        });
        out
    }

    /// Adds `E_full[f] - E_constrained[f]` to `acc`.
    fn accumulate(&self, full: &InsideOutsideResult, constrained: &InsideOutsideResult, acc: &mut Accumulator) {
        let w = self.n + 1;
        for_each_factor(self.n, |h, m, s| {
            if s.is_none() {
                let d = full.arc_marginal(h, m) - constrained.arc_marginal(h, m);
                if d != 0.0 {
                    acc.add_all(self.slice(self.arc[h * w + m]), d);
                }
            }
            let d = full.factor_marginal(h, m, s) - constrained.factor_marginal(h, m, s);
            if d != 0.0 {
                acc.add_all(self.slice(self.sib[crate::graph::factor_index(self.n, h, m, s)]), d);
            }
        });
    }
}

/// Dense scratch vector that remembers which coordinates were touched.
pub(crate) struct Accumulator {
    values: Vec<f64>,
    seen: Vec<bool>,
    touched: Vec<u32>,
}

impl Accumulator {
    pub fn new(dimension: usize) -> Self {
        Accumulator {
            values: vec![0.0; dimension],
            seen: vec![false; dimension],
            touched: Vec::new(),
        }
    }

    fn add_all(&mut self, indices: &[u32], v: f64) {
        for &i in indices {
            let k = i as usize;
            if !self.seen[k] {
                self.seen[k] = true;
                self.touched.push(i);
            }
            self.values[k] += v;
        }
    }

    /// Drains touched coordinates in ascending index order.
    fn drain(&mut self) -> Vec<(u32, f64)> {
        self.touched.sort_unstable();
        let out = self.touched.iter().map(|&i| (i, self.values[i as usize])).collect();
        for &i in &self.touched {
            self.values[i as usize] = 0.0;
            self.seen[i as usize] = false;
        }
        self.touched.clear();
        out
    }
}

/// Negative forest log-likelihood of one instance; adds its data gradient to `acc`.
fn instance_loss(
    extractor: &FeatureExtractor,
    item: &Item,
    weight: impl Fn(u32) -> f64,
    acc: &mut Accumulator,
) -> Result<f64> {
    let n = item.prepared.len();
    let ff = FactorFeatures::new(extractor, &item.prepared);
    let scores = ff.scores(weight);
    let mask = ConstraintMask::from_partial(&item.constraint)?;
    let full = inside_outside(&scores, &ConstraintMask::trivial(n))?;
    let constrained = inside_outside(&scores, &mask)?;
    ff.accumulate(&full, &constrained, acc);
    Ok(full.log_partition - constrained.log_partition)
}

/// Gradient of the regularized objective: a sparse data part plus `w / sigma^2`.
#[derive(Debug, Clone, PartialEq)]
pub struct Gradient {
    /// `sum(E_all[f] - E_forest[f])`, ascending by index.
    pub data: Vec<(u32, f64)>,
    pub l2_sigma2: f64,
}

impl Gradient {
    /// Full gradient coordinate `i` at `weights`.
    pub fn at(&self, i: u32, weights: &[f64]) -> f64 {
        let data = match self.data.binary_search_by_key(&i, |&(k, _)| k) {
            Ok(pos) => self.data[pos].1,
            Err(_) => 0.0,
        };
        data + weights[i as usize] / self.l2_sigma2
    }
}

/// Loss `-sum log p(partial | x) + |w|^2 / (2 sigma^2)` over `batch` and its gradient.
pub fn llgpar_objective_and_gradient(
    extractor: &FeatureExtractor,
    batch: &[TrainingInstance],
    weights: &[f64],
    l2_sigma2: f64,
) -> Result<(f64, Gradient)> {
    let mut acc = Accumulator::new(weights.len());
    let mut loss = 0.0;
    for inst in batch {
        loss += instance_loss(extractor, &Item::new(inst), |i| weights[i as usize], &mut acc)?;
    }
    loss += weights.iter().map(|w| w * w).sum::<f64>() / (2.0 * l2_sigma2);
    Ok((
        loss,
        Gradient {
            data: acc.drain(),
            l2_sigma2,
        },
    ))
}

/// Mini-batch SGD with a lazily applied L2 shrinkage: weights are `scale * v`.
pub(crate) struct Sgd<'a> {
    extractor: &'a FeatureExtractor,
    v: Vec<f64>,
    scale: f64,
    batches: u64,
    step: f64,
    decay: f64,
    sigma2: f64,
    batch_size: usize,
    acc: Accumulator,
}

impl<'a> Sgd<'a> {
    pub fn new(extractor: &'a FeatureExtractor, config: &TrainConfig) -> Self {
        let d = extractor.dimension();
        Sgd {
            extractor,
            v: vec![0.0; d],
            scale: 1.0,
            batches: 0,
            step: config.sgd_step,
            decay: config.sgd_decay,
            sigma2: config.l2_sigma2,
            batch_size: config.batch_size,
            acc: Accumulator::new(d),
        }
    }

    fn weights(&self) -> Vec<f64> {
        self.v.iter().map(|x| x * self.scale).collect()
    }
}

impl Learner for Sgd<'_> {
    fn pass(&mut self, items: &[&Item]) -> usize {
        let total = items.len() as f64;
        let mut skipped = 0;
        for batch in items.chunks(self.batch_size) {
            let (v, scale) = (&self.v, self.scale);
            for item in batch {
                if let Err(e) = instance_loss(self.extractor, item, |i| v[i as usize] * scale, &mut self.acc) {
                    log::warn!("{}", skip_message(&e));
                    skipped += 1;
                }
            }
            let eta = self.step / (1.0 + self.batches as f64 / self.decay);
            self.batches += 1;
            let shrink = (eta * batch.len() as f64 / (total * self.sigma2)).min(0.5);
            self.scale *= 1.0 - shrink;
            for (i, g) in self.acc.drain() {
                self.v[i as usize] -= eta * g / self.scale;
            }
            if self.scale < 1e-6 {
                let s = self.scale;
                self.v.iter_mut().for_each(|x| *x *= s);
                self.scale = 1.0;
            }
        }
        skipped
    }

    fn evaluation_weights(&self) -> Vec<f64> {
        self.weights()
    }

    fn snapshot(&self) -> WeightModel {
        WeightModel::from_weights(self.extractor.config().clone(), self.weights()).expect("dimension matches extractor")
    }
}
