//! Training regimes for the three parser families and the shared schedule.
//!
//! Every outer iteration draws a fresh subset of the partially annotated pool
//! (without replacement), merges it with all fully annotated sentences,
//! shuffles, and makes one pass. Dev accuracy is measured after each
//! iteration; training stops after `patience` iterations without improvement
//! (or at `max_iterations`) and returns the weights of the best iteration.

mod llgpar;
mod perceptron;

use alloc::string::String;
use alloc::vec::Vec;
use core::fmt;
use core::str::FromStr;

use rand::seq::{index, SliceRandom};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::corpus::{evaluate_uas, DepTree, EvalResult, PartialTree, Sentence};
use crate::error::{Error, Result};
use crate::features::{FeatureExtractor, Prepared};
use crate::graph::{self, ConstraintMask, FactorScores};
use crate::model::WeightModel;
use crate::transition::{beam_decode, ActionScorer};

pub use llgpar::{llgpar_objective_and_gradient, Gradient};
pub use perceptron::{lgpar_update, ltpar_update};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum ParserKind {
    /// Log-linear graph parser trained on the forest likelihood.
    LLGPar,
    /// Linear graph parser trained with the constrained-decoding perceptron.
    LGPar,
    /// Linear arc-eager parser trained with the constrained-decoding perceptron.
    LTPar,
}

impl ParserKind {
    pub const ALL: [ParserKind; 3] = [ParserKind::LLGPar, ParserKind::LGPar, ParserKind::LTPar];

    pub fn name(self) -> &'static str {
        match self {
            ParserKind::LLGPar => "llgpar",
            ParserKind::LGPar => "lgpar",
            ParserKind::LTPar => "ltpar",
        }
    }

    pub fn is_graph(self) -> bool {
        self != ParserKind::LTPar
    }
}

impl fmt::Display for ParserKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for ParserKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        ParserKind::ALL
            .into_iter()
            .find(|k| k.name().eq_ignore_ascii_case(s))
            .ok_or_else(|| Error::TrainConfig(alloc::format!("unknown parser kind `{s}`")))
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct TrainConfig {
    pub beam_size: usize,
    /// Initial SGD step size.
    pub sgd_step: f64,
    /// Number of mini-batches after which the step size has halved.
    pub sgd_decay: f64,
    pub l2_sigma2: f64,
    pub batch_size: usize,
    pub patience: usize,
    pub per_iter_pa_subset: usize,
    /// Hard cap on outer iterations.
    pub max_iterations: usize,
    pub rng_seed: u64,
}

impl Default for TrainConfig {
    fn default() -> Self {
        TrainConfig {
            beam_size: 64,
            sgd_step: 0.1,
            sgd_decay: 1000.0,
            l2_sigma2: 1.0,
            batch_size: 8,
            patience: 30,
            per_iter_pa_subset: 10_000,
            max_iterations: 1000,
            rng_seed: 1,
        }
    }
}

impl TrainConfig {
    pub fn validate(&self) -> Result<()> {
        let bad = |what: &str| Err(Error::TrainConfig(alloc::format!("{what} must be positive")));
        if self.beam_size == 0 {
            return bad("beam_size");
        }
        if !(self.sgd_step > 0.0 && self.sgd_step.is_finite()) {
            return bad("sgd_step");
        }
        if !(self.sgd_decay > 0.0) {
            return bad("sgd_decay");
        }
        if !(self.l2_sigma2 > 0.0) {
            return bad("l2_sigma2");
        }
        if self.batch_size == 0 {
            return bad("batch_size");
        }
        if self.patience == 0 {
            return bad("patience");
        }
        if self.max_iterations == 0 {
            return bad("max_iterations");
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Annotation {
    Full(DepTree),
    Partial(PartialTree),
}

impl Annotation {
    pub fn len(&self) -> usize {
        match self {
            Annotation::Full(t) => t.len(),
            Annotation::Partial(p) => p.len(),
        }
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    /// The annotation as arc constraints.
    pub fn constraint(&self) -> PartialTree {
        match self {
            Annotation::Full(t) => PartialTree::from(t),
            Annotation::Partial(p) => p.clone(),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Origin {
    Fa,
    Pa,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct TrainingInstance {
    pub sentence: Sentence,
    pub annotation: Annotation,
    pub origin: Origin,
}

impl TrainingInstance {
    pub fn new(sentence: Sentence, annotation: Annotation, origin: Origin) -> Result<Self> {
        if sentence.len() != annotation.len() {
            return Err(Error::LengthMismatch {
                expected: sentence.len(),
                found: annotation.len(),
            });
        }
        Ok(TrainingInstance {
            sentence,
            annotation,
            origin,
        })
    }

    pub fn full(sentence: Sentence, tree: DepTree) -> Result<Self> {
        Self::new(sentence, Annotation::Full(tree), Origin::Fa)
    }

    pub fn partial(sentence: Sentence, partial: PartialTree) -> Result<Self> {
        Self::new(sentence, Annotation::Partial(partial), Origin::Pa)
    }
}

/// Per-sentence data the learners reuse across iterations.
pub(crate) struct Item {
    pub prepared: Prepared,
    pub constraint: PartialTree,
}

impl Item {
    fn new(inst: &TrainingInstance) -> Self {
        Item {
            prepared: Prepared::new(&inst.sentence),
            constraint: inst.annotation.constraint(),
        }
    }
}

/// One training regime: visits instances in order and exposes its weights.
pub(crate) trait Learner {
    /// Processes the instances in order; returns how many were skipped.
    fn pass(&mut self, items: &[&Item]) -> usize;
    /// Weights used for evaluation.
    fn evaluation_weights(&self) -> Vec<f64>;
    fn snapshot(&self) -> WeightModel;
}

#[derive(Debug, Clone, PartialEq)]
pub struct TrainOutcome {
    pub model: WeightModel,
    /// Dev UAS after each iteration.
    pub dev_curve: Vec<f64>,
    /// 1-based iteration whose weights were returned.
    pub best_iteration: usize,
    pub skipped: usize,
}

fn run_schedule(
    kind: ParserKind,
    extractor: &FeatureExtractor,
    fa: &[TrainingInstance],
    pa: &[TrainingInstance],
    dev: &[(Sentence, DepTree)],
    config: &TrainConfig,
    learner: &mut dyn Learner,
) -> Result<TrainOutcome> {
    config.validate()?;
    if fa.is_empty() && pa.is_empty() {
        return Err(Error::EmptyTrainingSet);
    }
    let fa_items: Vec<Item> = fa.iter().map(Item::new).collect();
    let pa_items: Vec<Item> = pa.iter().map(Item::new).collect();
    let dev_prepared: Vec<Prepared> = dev.iter().map(|(s, _)| Prepared::new(s)).collect();
    let mut rng = ChaCha8Rng::seed_from_u64(config.rng_seed);

    let mut best: Option<(f64, usize, WeightModel)> = None;
    let mut curve = Vec::new();
    let mut skipped = 0;
    let mut since_best = 0;
    for iteration in 1..=config.max_iterations {
        let take = config.per_iter_pa_subset.min(pa_items.len());
        let mut order: Vec<&Item> = fa_items.iter().collect();
        order.extend(index::sample(&mut rng, pa_items.len(), take).iter().map(|i| &pa_items[i]));
        order.shuffle(&mut rng);
        skipped += learner.pass(&order);

        if dev.is_empty() {
            continue;
        }
        let weights = learner.evaluation_weights();
        let parser = Parser::from_weights(kind, extractor, &weights, config.beam_size);
        let mut total = EvalResult::default();
        for ((sentence, gold), p) in dev.iter().zip(&dev_prepared) {
            let pred = parser.parse_prepared(p, None)?;
            total += evaluate_uas(&pred, gold, sentence)?;
        }
        let uas = total.uas();
        curve.push(uas);
        log::info!("{kind} iteration {iteration}: dev UAS {:.4}", uas);
        if best.as_ref().is_none_or(|(b, _, _)| uas > *b) {
            best = Some((uas, iteration, learner.snapshot()));
            since_best = 0;
        } else {
            since_best += 1;
            if since_best >= config.patience {
                break;
            }
        }
    }
    let (model, best_iteration) = match best {
        Some((_, it, m)) => (m, it),
        None => (learner.snapshot(), config.max_iterations),
    };
    Ok(TrainOutcome {
        model,
        dev_curve: curve,
        best_iteration,
        skipped,
    })
}

/// Trains `kind` on fully and partially annotated data.
pub fn train(
    kind: ParserKind,
    extractor: &FeatureExtractor,
    fa: &[TrainingInstance],
    pa: &[TrainingInstance],
    dev: &[(Sentence, DepTree)],
    config: &TrainConfig,
) -> Result<TrainOutcome> {
    match kind {
        ParserKind::LLGPar => {
            let mut l = llgpar::Sgd::new(extractor, config);
            run_schedule(kind, extractor, fa, pa, dev, config, &mut l)
        }
        ParserKind::LGPar => {
            let mut l = perceptron::Graph::new(extractor);
            run_schedule(kind, extractor, fa, pa, dev, config, &mut l)
        }
        ParserKind::LTPar => {
            let mut l = perceptron::Transition::new(extractor, config.beam_size);
            run_schedule(kind, extractor, fa, pa, dev, config, &mut l)
        }
    }
}

pub fn train_llgpar(
    extractor: &FeatureExtractor,
    fa: &[TrainingInstance],
    pa: &[TrainingInstance],
    dev: &[(Sentence, DepTree)],
    config: &TrainConfig,
) -> Result<TrainOutcome> {
    train(ParserKind::LLGPar, extractor, fa, pa, dev, config)
}

pub fn train_lgpar(
    extractor: &FeatureExtractor,
    fa: &[TrainingInstance],
    pa: &[TrainingInstance],
    dev: &[(Sentence, DepTree)],
    config: &TrainConfig,
) -> Result<TrainOutcome> {
    train(ParserKind::LGPar, extractor, fa, pa, dev, config)
}

pub fn train_ltpar(
    extractor: &FeatureExtractor,
    fa: &[TrainingInstance],
    pa: &[TrainingInstance],
    dev: &[(Sentence, DepTree)],
    config: &TrainConfig,
) -> Result<TrainOutcome> {
    train(ParserKind::LTPar, extractor, fa, pa, dev, config)
}

/// A trained model ready for parsing, with averaged weights materialized.
#[derive(Debug, Clone)]
pub struct Parser<'a> {
    kind: ParserKind,
    extractor: &'a FeatureExtractor,
    weights: WeightsRef<'a>,
    beam_size: usize,
}

#[derive(Debug, Clone)]
enum WeightsRef<'a> {
    Owned(Vec<f64>),
    Borrowed(&'a [f64]),
}

impl<'a> Parser<'a> {
    pub fn new(kind: ParserKind, extractor: &'a FeatureExtractor, model: &WeightModel, beam_size: usize) -> Result<Self> {
        if model.dimension() != extractor.dimension() {
            return Err(Error::DimensionMismatch {
                expected: extractor.dimension(),
                found: model.dimension(),
            });
        }
        Ok(Parser {
            kind,
            extractor,
            weights: WeightsRef::Owned(model.averaged()),
            beam_size: beam_size.max(1),
        })
    }

    pub(crate) fn from_weights(kind: ParserKind, extractor: &'a FeatureExtractor, weights: &'a [f64], beam_size: usize) -> Self {
        Parser {
            kind,
            extractor,
            weights: WeightsRef::Borrowed(weights),
            beam_size: beam_size.max(1),
        }
    }

    pub fn kind(&self) -> ParserKind {
        self.kind
    }

    pub fn weights(&self) -> &[f64] {
        match &self.weights {
            WeightsRef::Owned(w) => w,
            WeightsRef::Borrowed(w) => w,
        }
    }

    /// Best tree, restricted to trees containing `partial` when given.
    pub fn parse(&self, sentence: &Sentence, partial: Option<&PartialTree>) -> Result<DepTree> {
        self.parse_prepared(&Prepared::new(sentence), partial)
    }

    pub fn parse_prepared(&self, p: &Prepared, partial: Option<&PartialTree>) -> Result<DepTree> {
        let n = p.len();
        if let Some(part) = partial {
            if part.len() != n {
                return Err(Error::LengthMismatch {
                    expected: n,
                    found: part.len(),
                });
            }
        }
        if self.kind.is_graph() {
            let scores = FactorScores::from_model(self.extractor, p, self.weights());
            let mask = match partial {
                Some(part) => ConstraintMask::from_partial(part)?,
                None => ConstraintMask::trivial(n),
            };
            graph::decode(&scores, &mask)
        } else {
            let scorer = ActionScorer::new(self.extractor, self.weights())?;
            let item = beam_decode(p, &scorer, self.beam_size, partial)?;
            item.tree().ok_or(Error::Unsatisfiable)
        }
    }

    /// Graph factor scores under this parser's weights.
    pub fn factor_scores(&self, p: &Prepared) -> FactorScores {
        FactorScores::from_model(self.extractor, p, self.weights())
    }
}

/// Parses with the averaged weights of `model`.
pub fn predict(
    model: &WeightModel,
    extractor: &FeatureExtractor,
    kind: ParserKind,
    sentence: &Sentence,
    partial: Option<&PartialTree>,
    beam_size: usize,
) -> Result<DepTree> {
    Parser::new(kind, extractor, model, beam_size)?.parse(sentence, partial)
}

/// Corpus UAS of `parser` on gold trees.
pub fn evaluate(parser: &Parser<'_>, data: &[(Sentence, DepTree)]) -> Result<EvalResult> {
    let mut total = EvalResult::default();
    for (s, gold) in data {
        total += evaluate_uas(&parser.parse(s, None)?, gold, s)?;
    }
    Ok(total)
}

/// Human-readable summary of a skipped instance.
pub(crate) fn skip_message(err: &Error) -> String {
    alloc::format!("skipping training instance: {err}")
}

#[cfg(test)]
mod tests;
