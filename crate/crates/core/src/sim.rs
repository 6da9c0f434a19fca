//! Partial annotation simulated from fully annotated trees.
//!
//! Every setting keeps a subset of gold heads and never selects punctuation.

use alloc::vec::Vec;
use core::fmt;
use core::str::FromStr;

use rand::seq::index;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::corpus::{DepTree, PartialTree, Sentence};
use crate::error::{Error, Result};
use crate::features::{FeatureExtractor, Prepared};
use crate::graph::{inside_outside, ConstraintMask, FactorScores};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Setting {
    Random,
    Uncertain,
    Divergence,
}

impl Setting {
    pub const ALL: [Setting; 3] = [Setting::Random, Setting::Uncertain, Setting::Divergence];

    pub fn name(self) -> &'static str {
        match self {
            Setting::Random => "random",
            Setting::Uncertain => "uncertain",
            Setting::Divergence => "divergence",
        }
    }
}

impl fmt::Display for Setting {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Setting {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Setting::ALL
            .into_iter()
            .find(|k| k.name().eq_ignore_ascii_case(s))
            .ok_or_else(|| Error::TrainConfig(alloc::format!("unknown simulation setting `{s}`")))
    }
}

/// Number of heads kept out of `k` candidates: `ceil(alpha% * k)`.
///
/// A relative tolerance keeps products such as `30% * 10` from rounding up to 4.
pub fn keep_count(alpha: f64, k: usize) -> usize {
    if alpha <= 0.0 || k == 0 {
        return 0;
    }
    let exact = alpha * k as f64 / 100.0;
    (libm::ceil(exact * (1.0 - 1e-12)) as usize).min(k)
}

fn check_alpha(alpha: f64) -> Result<()> {
    if alpha > 0.0 && alpha <= 100.0 {
        Ok(())
    } else {
        Err(Error::TrainConfig(alloc::format!("alpha must lie in (0, 100], got {alpha}")))
    }
}

/// Per-sentence generator, independent of processing order.
fn sentence_rng(seed: u64, index: usize) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(index as u64);
    rng
}

/// Keeps the gold heads of a uniformly drawn `alpha%` of non-punctuation tokens.
pub fn simulate_random(treebank: &[(Sentence, DepTree)], alpha: f64, seed: u64) -> Result<Vec<PartialTree>> {
    check_alpha(alpha)?;
    Ok(treebank
        .iter()
        .enumerate()
        .map(|(i, (sentence, gold))| {
            let candidates: Vec<usize> = sentence.scored_positions().collect();
            let keep = keep_count(alpha, candidates.len());
            let mut rng = sentence_rng(seed, i);
            let picked = index::sample(&mut rng, candidates.len(), keep);
            PartialTree::from_selection(gold, picked.iter().map(|j| candidates[j]))
        })
        .collect())
}

/// Gap between the two largest head marginals of every token (index `m - 1`).
pub fn uncertainty_gaps(extractor: &FeatureExtractor, sentence: &Sentence, weights: &[f64]) -> Result<Vec<f64>> {
    if weights.len() != extractor.dimension() {
        return Err(Error::DimensionMismatch {
            expected: extractor.dimension(),
            found: weights.len(),
        });
    }
    let n = sentence.len();
    let scores = FactorScores::from_model(extractor, &Prepared::new(sentence), weights);
    let io = inside_outside(&scores, &ConstraintMask::trivial(n))?;
    Ok((1..=n)
        .map(|m| {
            let (mut first, mut second) = (0.0f64, 0.0f64);
            for p in io.head_distribution(m) {
                if p > first {
                    second = first;
                    first = p;
                } else if p > second {
                    second = p;
                }
            }
            first - second
        })
        .collect())
}

/// Keeps the gold heads of the `alpha%` non-punctuation tokens whose head
/// marginals are least peaked under the log-linear model `weights`.
pub fn simulate_uncertain(
    treebank: &[(Sentence, DepTree)],
    alpha: f64,
    extractor: &FeatureExtractor,
    weights: &[f64],
) -> Result<Vec<PartialTree>> {
    check_alpha(alpha)?;
    treebank
        .iter()
        .map(|(sentence, gold)| {
            let gaps = uncertainty_gaps(extractor, sentence, weights)?;
            let mut ranked: Vec<usize> = sentence.scored_positions().collect();
            let keep = keep_count(alpha, ranked.len());
            ranked.sort_by(|&a, &b| gaps[a - 1].total_cmp(&gaps[b - 1]).then(a.cmp(&b)));
            Ok(PartialTree::from_selection(gold, ranked.into_iter().take(keep)))
        })
        .collect()
}

/// Keeps the gold head of every non-punctuation token on which the three
/// parsers' predictions do not all agree.
pub fn simulate_divergence(treebank: &[(Sentence, DepTree)], predictions: [&[DepTree]; 3]) -> Result<Vec<PartialTree>> {
    for p in predictions {
        if p.len() != treebank.len() {
            return Err(Error::LengthMismatch {
                expected: treebank.len(),
                found: p.len(),
            });
        }
    }
    treebank
        .iter()
        .enumerate()
        .map(|(i, (sentence, gold))| {
            let [a, b, c] = predictions.map(|p| &p[i]);
            for t in [a, b, c] {
                if t.len() != gold.len() {
                    return Err(Error::LengthMismatch {
                        expected: gold.len(),
                        found: t.len(),
                    });
                }
            }
            let keep = sentence
                .scored_positions()
                .filter(|&m| !(a.head(m) == b.head(m) && b.head(m) == c.head(m)));
            Ok(PartialTree::from_selection(gold, keep))
        })
        .collect()
}
