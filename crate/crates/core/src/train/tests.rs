use super::*;
use crate::corpus::PunctSet;
use crate::features::FeatureConfig;
use crate::graph::{decode, score_tree};
use crate::testutil::{enumerate_trees, random_partial, random_tree, sentence};
use alloc::vec;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn extractor() -> FeatureExtractor {
    FeatureExtractor::new(FeatureConfig::new(16).unwrap())
}

/// Four sentence shapes with disjoint tags and words; the tags alone decide every head.
fn separable() -> Vec<(Sentence, DepTree)> {
    let shapes: [(&[&str], &[usize]); 4] = [
        (&["DT", "NN", "VBD"], &[2, 3, 0]),
        (&["VB", "PRP", "IN", "NNS"], &[0, 1, 1, 3]),
        (&["JJ", "NNP", "VBZ", "RB"], &[2, 3, 0, 3]),
        (&["MD", "CD", "UH", "WDT", "FW"], &[0, 1, 2, 1, 4]),
    ];
    let punct = PunctSet::ptb();
    (0..12)
        .map(|i| {
            let (tags, heads) = shapes[i % 4];
            let words: Vec<alloc::string::String> = tags.iter().map(|t| alloc::format!("{t}{i}")).collect();
            let s = Sentence::from_pairs(words.iter().map(String::as_str).zip(tags.iter().copied()), &punct);
            (s, DepTree::new(heads.to_vec()).unwrap())
        })
        .collect()
}

fn full_instances(data: &[(Sentence, DepTree)]) -> Vec<TrainingInstance> {
    data.iter()
        .map(|(s, t)| TrainingInstance::full(s.clone(), t.clone()).unwrap())
        .collect()
}

fn small_config() -> TrainConfig {
    TrainConfig {
        beam_size: 8,
        patience: 5,
        max_iterations: 50,
        batch_size: 4,
        sgd_step: 0.5,
        ..TrainConfig::default()
    }
}

#[test]
fn gradient_matches_finite_differences() {
    let ex = extractor();
    let mut rng = ChaCha8Rng::seed_from_u64(21);
    let mut checked = 0;
    for _ in 0..20 {
        let n = rng.random_range(1..=5);
        let gold = random_tree(&mut rng, n);
        let partial = random_partial(&mut rng, &gold, 0.5);
        let inst = TrainingInstance::partial(sentence(n), partial).unwrap();
        let batch = [inst];
        let mut w: Vec<f64> = (0..ex.dimension()).map(|_| rng.random_range(-0.3..0.3)).collect();
        let (_, grad) = llgpar_objective_and_gradient(&ex, &batch, &w, 2.0).unwrap();
        let mut coords: Vec<u32> = grad.data.iter().map(|&(i, _)| i).take(40).collect();
        coords.push(rng.random_range(0..ex.dimension() as u32));
        let h = 1e-4;
        for i in coords {
            let orig = w[i as usize];
            w[i as usize] = orig + h;
            let up = llgpar_objective_and_gradient(&ex, &batch, &w, 2.0).unwrap().0;
            w[i as usize] = orig - h;
            let down = llgpar_objective_and_gradient(&ex, &batch, &w, 2.0).unwrap().0;
            w[i as usize] = orig;
            let fd = (up - down) / (2.0 * h);
            let g = grad.at(i, &w);
            let rel = (fd - g).abs() / fd.abs().max(g.abs()).max(1e-6);
            assert!(rel <= 1e-4, "coord {i}: analytic {g} vs numeric {fd}");
            checked += 1;
        }
    }
    assert!(checked > 100);
}

#[test]
fn empty_partial_has_no_data_gradient() {
    let ex = extractor();
    let mut rng = ChaCha8Rng::seed_from_u64(22);
    let w: Vec<f64> = (0..ex.dimension()).map(|_| rng.random_range(-0.3..0.3)).collect();
    let inst = TrainingInstance::partial(sentence(5), PartialTree::empty(5)).unwrap();
    let (loss, grad) = llgpar_objective_and_gradient(&ex, &[inst], &w, 1.0).unwrap();
    assert!(grad.data.iter().all(|&(_, g)| g.abs() < 1e-12));
    let reg = w.iter().map(|x| x * x).sum::<f64>() / 2.0;
    assert!((loss - reg).abs() < 1e-9);
}

#[test]
fn complete_tree_gives_crf_gradient() {
    let ex = extractor();
    let mut rng = ChaCha8Rng::seed_from_u64(23);
    let w: Vec<f64> = (0..ex.dimension()).map(|_| rng.random_range(-0.3..0.3)).collect();
    let s = sentence(4);
    let gold = DepTree::new(vec![2, 0, 2, 3]).unwrap();
    let inst = TrainingInstance::full(s.clone(), gold.clone()).unwrap();
    let (loss, grad) = llgpar_objective_and_gradient(&ex, &[inst], &w, 1.0).unwrap();
    // loss = log Z - score(gold) + reg, by enumeration
    let p = Prepared::new(&s);
    let score = |t: &DepTree| {
        let mut f = Vec::new();
        ex.tree_into(&p, t, &mut f);
        f.iter().map(|&i| w[i as usize]).sum::<f64>()
    };
    let trees = enumerate_trees(4);
    let log_z = libm::log(trees.iter().map(|t| libm::exp(score(t))).sum::<f64>());
    let reg = w.iter().map(|x| x * x).sum::<f64>() / 2.0;
    assert!((loss - (log_z - score(&gold) + reg)).abs() < 1e-9);
    // gradient = E[f] - f(gold)
    let mut expect = vec![0.0; ex.dimension()];
    for t in &trees {
        let pr = libm::exp(score(t) - log_z);
        let mut f = Vec::new();
        ex.tree_into(&p, t, &mut f);
        for i in f {
            expect[i as usize] += pr;
        }
    }
    let mut f = Vec::new();
    ex.tree_into(&p, &gold, &mut f);
    for i in f {
        expect[i as usize] -= 1.0;
    }
    for &(i, g) in &grad.data {
        assert!((g - expect[i as usize]).abs() < 1e-9);
    }
}

#[test]
fn fa_lgpar_is_the_standard_perceptron() {
    let ex = extractor();
    let mut rng = ChaCha8Rng::seed_from_u64(24);
    let data: Vec<(Prepared, DepTree)> = (0..30)
        .map(|_| {
            let n = rng.random_range(2..=7);
            (Prepared::new(&sentence(n)), random_tree(&mut rng, n))
        })
        .collect();
    let mut model = WeightModel::new(ex.config().clone());
    let mut reference = vec![0.0; ex.dimension()];
    let mut snapshot_sum = vec![0.0; ex.dimension()];
    let mut steps = 0.0;
    for _ in 0..3 {
        for (p, gold) in &data {
            // classic perceptron: unconstrained argmax against the gold tree
            let scores = FactorScores::from_model(&ex, p, &reference);
            let pred = decode(&scores, &ConstraintMask::trivial(p.len())).unwrap();
            if &pred != gold {
                let mut f = Vec::new();
                ex.tree_into(p, gold, &mut f);
                f.iter().for_each(|&i| reference[i as usize] += 1.0);
                f.clear();
                ex.tree_into(p, &pred, &mut f);
                f.iter().for_each(|&i| reference[i as usize] -= 1.0);
            }
            let changed = lgpar_update(&mut model, &ex, p, &PartialTree::from(gold)).unwrap();
            assert_eq!(changed, &pred != gold);
            assert_eq!(model.weights(), &reference[..]);
            snapshot_sum.iter_mut().zip(&reference).for_each(|(s, w)| *s += w);
            steps += 1.0;
        }
    }
    let avg = model.averaged();
    for (a, s) in avg.iter().zip(&snapshot_sum) {
        assert!((a - s / steps).abs() < 1e-9);
    }
}

fn train_uas(kind: ParserKind, ex: &FeatureExtractor, outcome: &TrainOutcome, data: &[(Sentence, DepTree)]) -> f64 {
    let parser = Parser::new(kind, ex, &outcome.model, 8).unwrap();
    evaluate(&parser, data).unwrap().uas()
}

#[test]
fn separable_data_is_learned() {
    let ex = extractor();
    let data = separable();
    let fa = full_instances(&data);
    for kind in ParserKind::ALL {
        let config = TrainConfig {
            max_iterations: if kind == ParserKind::LTPar { 100 } else { 50 },
            ..small_config()
        };
        let out = train(kind, &ex, &fa, &[], &data, &config).unwrap();
        let uas = train_uas(kind, &ex, &out, &data);
        let need = if kind == ParserKind::LTPar { 0.95 } else { 1.0 };
        assert!(uas >= need, "{kind}: {uas}");
        assert_eq!(out.skipped, 0);
    }
}

#[test]
fn partial_annotation_is_usable() {
    let ex = extractor();
    let data = separable();
    let mut rng = ChaCha8Rng::seed_from_u64(25);
    let fa = full_instances(&data[..4]);
    let pa: Vec<TrainingInstance> = data[4..]
        .iter()
        .map(|(s, t)| TrainingInstance::partial(s.clone(), random_partial(&mut rng, t, 0.5)).unwrap())
        .collect();
    for kind in ParserKind::ALL {
        let out = train(kind, &ex, &fa, &pa, &data, &small_config()).unwrap();
        assert!(!out.dev_curve.is_empty());
        assert!(out.best_iteration >= 1);
        let best = out.dev_curve.iter().cloned().fold(0.0, f64::max);
        assert_eq!(out.dev_curve[out.best_iteration - 1], best);
    }
}

#[test]
fn training_is_deterministic() {
    let ex = extractor();
    let data = separable();
    let mut rng = ChaCha8Rng::seed_from_u64(26);
    let fa = full_instances(&data[..3]);
    let pa: Vec<TrainingInstance> = data[3..]
        .iter()
        .map(|(s, t)| TrainingInstance::partial(s.clone(), random_partial(&mut rng, t, 0.4)).unwrap())
        .collect();
    let config = TrainConfig {
        per_iter_pa_subset: 5,
        max_iterations: 6,
        ..small_config()
    };
    for kind in ParserKind::ALL {
        let a = train(kind, &ex, &fa, &pa, &data, &config).unwrap();
        let b = train(kind, &ex, &fa, &pa, &data, &config).unwrap();
        assert_eq!(a, b);
    }
}

#[test]
fn bad_inputs_are_rejected() {
    let ex = extractor();
    assert!(matches!(
        train(ParserKind::LGPar, &ex, &[], &[], &[], &TrainConfig::default()),
        Err(Error::EmptyTrainingSet)
    ));
    let fa = full_instances(&separable()[..1]);
    let bad = TrainConfig {
        patience: 0,
        ..TrainConfig::default()
    };
    assert!(train(ParserKind::LGPar, &ex, &fa, &[], &[], &bad).is_err());
    assert!(TrainingInstance::full(sentence(3), DepTree::new(vec![0, 1]).unwrap()).is_err());
    assert_eq!("LTPar".parse::<ParserKind>().unwrap(), ParserKind::LTPar);
    assert!("mst".parse::<ParserKind>().is_err());
}

#[test]
fn prediction_respects_partial_and_matches_enumeration() {
    let ex = extractor();
    let mut rng = ChaCha8Rng::seed_from_u64(27);
    let config = ex.config().clone();
    for _ in 0..10 {
        let n = rng.random_range(1..=6);
        let s = sentence(n);
        let w: Vec<f64> = (0..ex.dimension()).map(|_| rng.random_range(-1.0..1.0)).collect();
        let model = WeightModel::from_weights(config.clone(), w).unwrap();
        let gold = random_tree(&mut rng, n);
        for kind in ParserKind::ALL {
            let full = PartialTree::from(&gold);
            assert_eq!(predict(&model, &ex, kind, &s, Some(&full), 4).unwrap(), gold);
        }
        let parser = Parser::new(ParserKind::LGPar, &ex, &model, 1).unwrap();
        let scores = parser.factor_scores(&Prepared::new(&s));
        let best = enumerate_trees(n)
            .into_iter()
            .max_by(|a, b| score_tree(&scores, a).partial_cmp(&score_tree(&scores, b)).unwrap())
            .unwrap();
        assert_eq!(predict(&model, &ex, ParserKind::LLGPar, &s, None, 1).unwrap(), best);
    }
}
