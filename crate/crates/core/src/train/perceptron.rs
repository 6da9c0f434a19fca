//! Constrained-decoding perceptrons: the reference is the best structure that
//! contains the annotation, the prediction the best structure overall.

use alloc::vec::Vec;

use super::{skip_message, Item, Learner};
use crate::corpus::PartialTree;
use crate::error::Result;
use crate::features::{FeatureExtractor, Prepared};
use crate::graph::{decode, ConstraintMask, FactorScores};
use crate::model::WeightModel;
use crate::transition::{beam_decode, beam_decode_with_reference, sequence_features, ActionScorer};

/// One graph-perceptron step on `(p, constraint)`. Returns whether weights changed.
pub fn lgpar_update(
    model: &mut WeightModel,
    extractor: &FeatureExtractor,
    p: &Prepared,
    constraint: &PartialTree,
) -> Result<bool> {
    let n = p.len();
    let scores = FactorScores::from_model(extractor, p, model.weights());
    let predicted = decode(&scores, &ConstraintMask::trivial(n))?;
    let reference = match constraint.to_complete() {
        Some(tree) => tree,
        None => decode(&scores, &ConstraintMask::from_partial(constraint)?)?,
    };
    model.tick();
    if reference == predicted {
        return Ok(false);
    }
    let mut plus = Vec::new();
    let mut minus = Vec::new();
    extractor.tree_into(p, &reference, &mut plus);
    extractor.tree_into(p, &predicted, &mut minus);
    model.update_all(&plus, 1.0);
    model.update_all(&minus, -1.0);
    Ok(true)
}

/// One transition-perceptron step with early update. Returns whether weights changed.
pub fn ltpar_update(
    model: &mut WeightModel,
    extractor: &FeatureExtractor,
    p: &Prepared,
    constraint: &PartialTree,
    beam_size: usize,
) -> Result<bool> {
    let (plus, minus) = {
        let scorer = ActionScorer::new(extractor, model.weights())?;
        let reference = beam_decode(p, &scorer, beam_size, Some(constraint))?.history;
        let (item, stop) = beam_decode_with_reference(p, &scorer, beam_size, &reference)?;
        let upto = match stop {
            Some(t) => t.min(reference.len()),
            None if item.history == reference => {
                model.tick();
                return Ok(false);
            }
            None => reference.len(),
        };
        (
            sequence_features(extractor, p, &reference[..upto])?,
            sequence_features(extractor, p, &item.history)?,
        )
    };
    model.tick();
    model.update_all(&plus, 1.0);
    model.update_all(&minus, -1.0);
    Ok(true)
}

fn visit(model: &mut WeightModel, items: &[&Item], mut step: impl FnMut(&mut WeightModel, &Item) -> Result<bool>) -> usize {
    let mut skipped = 0;
    for item in items {
        if let Err(e) = step(model, item) {
            log::warn!("{}", skip_message(&e));
            skipped += 1;
        }
    }
    skipped
}

pub(crate) struct Graph<'a> {
    extractor: &'a FeatureExtractor,
    model: WeightModel,
}

impl<'a> Graph<'a> {
    pub fn new(extractor: &'a FeatureExtractor) -> Self {
        Graph {
            extractor,
            model: WeightModel::new(extractor.config().clone()),
        }
    }
}

impl Learner for Graph<'_> {
    fn pass(&mut self, items: &[&Item]) -> usize {
        let ex = self.extractor;
        visit(&mut self.model, items, |m, it| lgpar_update(m, ex, &it.prepared, &it.constraint))
    }

    fn evaluation_weights(&self) -> Vec<f64> {
        self.model.averaged()
    }

    fn snapshot(&self) -> WeightModel {
        self.model.clone()
    }
}

pub(crate) struct Transition<'a> {
    extractor: &'a FeatureExtractor,
    model: WeightModel,
    beam_size: usize,
}

impl<'a> Transition<'a> {
    pub fn new(extractor: &'a FeatureExtractor, beam_size: usize) -> Self {
        Transition {
            extractor,
            model: WeightModel::new(extractor.config().clone()),
            beam_size,
        }
    }
}

impl Learner for Transition<'_> {
    fn pass(&mut self, items: &[&Item]) -> usize {
        let (ex, beam) = (self.extractor, self.beam_size);
        visit(&mut self.model, items, |m, it| ltpar_update(m, ex, &it.prepared, &it.constraint, beam))
    }

    fn evaluation_weights(&self) -> Vec<f64> {
        self.model.averaged()
    }

    fn snapshot(&self) -> WeightModel {
        self.model.clone()
    }
}
