extern crate std;

use super::*;
use crate::features::FeatureConfig;
use crate::testutil::{random_partial, random_tree};
use alloc::string::ToString;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use std::collections::HashMap;

fn sentence(n: usize) -> Prepared {
    Prepared::new(&crate::testutil::sentence(n))
}

fn extractor() -> FeatureExtractor {
    FeatureExtractor::new(FeatureConfig::new(16).unwrap())
}

fn random_weights(rng: &mut ChaCha8Rng, dim: usize) -> Vec<f64> {
    (0..dim).map(|_| rng.random_range(-1.0..1.0)).collect()
}

/// Whether some legal continuation of `c` ends in a tree containing `partial`.
fn can_complete(c: &Configuration, partial: &PartialTree, memo: &mut HashMap<Configuration, bool>) -> bool {
    if let Some(&v) = memo.get(c) {
        return v;
    }
    let ok = if c.is_terminal() {
        c.to_tree().is_some_and(|t| t.contains(partial))
    } else {
        legal_actions(c).iter().any(|a| {
            let mut next = c.clone();
            next.apply(a).unwrap();
            can_complete(&next, partial, memo)
        })
    };
    memo.insert(c.clone(), ok);
    ok
}

/// Every complete action sequence from the initial configuration.
fn all_sequences(n: usize) -> Vec<Vec<Action>> {
    fn go(c: &Configuration, hist: &mut Vec<Action>, out: &mut Vec<Vec<Action>>) {
        if c.is_terminal() {
            out.push(hist.clone());
            return;
        }
        for a in legal_actions(c).iter() {
            let mut next = c.clone();
            next.apply(a).unwrap();
            hist.push(a);
            go(&next, hist, out);
            hist.pop();
        }
    }
    let mut out = Vec::new();
    go(&Configuration::initial(n), &mut Vec::new(), &mut out);
    out
}

#[test]
fn precondition_table() {
    let c = Configuration::initial(3);
    let legal = legal_actions(&c);
    assert_eq!(legal.iter().collect::<Vec<_>>(), vec![Action::Shift, Action::RightArc]);

    // stack [0, 1], buffer [2, 3]: headless top may take a left arc
    let c = replay(3, &[Action::Shift]).unwrap();
    assert!(legal_actions(&c).contains(Action::LeftArc));
    assert!(!legal_actions(&c).contains(Action::Reduce));

    let done = replay(1, &[Action::RightArc]).unwrap();
    assert!(done.is_terminal());
    assert!(legal_actions(&done).is_empty());
    assert_eq!(done.to_tree().unwrap().heads(), &[0]);

    assert!(replay(2, &[Action::LeftArc]).is_err());
    assert_eq!(Action::RightArc.to_string(), "RIGHT_ARC");
}

#[test]
fn every_terminal_is_a_tree() {
    for n in 1..=6 {
        let seqs = all_sequences(n);
        let mut trees: Vec<DepTree> = seqs
            .iter()
            .map(|s| replay(n, s).unwrap().to_tree().expect("terminal config is a tree"))
            .collect();
        for s in &seqs {
            assert!(s.len() <= 2 * n);
        }
        trees.sort_by(|a, b| a.heads().cmp(b.heads()));
        trees.dedup();
        // every projective single-root tree is reachable
        let expected = [1, 2, 7, 30, 143, 728][n - 1];
        assert_eq!(trees.len(), expected, "n={n}");
    }
}

#[test]
fn oracle_round_trip() {
    let mut rng = ChaCha8Rng::seed_from_u64(1);
    for _ in 0..500 {
        let n = rng.random_range(1..=12);
        let t = random_tree(&mut rng, n);
        let seq = static_oracle(&t).unwrap();
        assert_eq!(replay(n, &seq).unwrap().to_tree().unwrap(), t);
    }
    let single = DepTree::new(vec![0]).unwrap();
    assert_eq!(static_oracle(&single).unwrap(), vec![Action::RightArc]);
    let chain = DepTree::new(vec![0, 1, 2]).unwrap();
    assert_eq!(static_oracle(&chain).unwrap(), vec![Action::RightArc; 3]);
}

#[test]
fn constrained_filter_is_exact() {
    let mut rng = ChaCha8Rng::seed_from_u64(2);
    for _ in 0..150 {
        let n = rng.random_range(1..=6);
        let gold = random_tree(&mut rng, n);
        let partial = random_partial(&mut rng, &gold, 0.4);
        let mut memo = HashMap::new();
        // walk every configuration the filter admits
        let mut todo = vec![Configuration::initial(n)];
        let mut seen = std::collections::HashSet::new();
        while let Some(c) = todo.pop() {
            if !seen.insert(c.clone()) || c.is_terminal() {
                if c.is_terminal() {
                    assert!(c.to_tree().unwrap().contains(&partial));
                }
                continue;
            }
            let got = constrained_legal_actions(&c, &partial);
            let want: ActionSet = legal_actions(&c)
                .iter()
                .filter(|&a| {
                    let mut next = c.clone();
                    next.apply(a).unwrap();
                    can_complete(&next, &partial, &mut memo)
                })
                .collect();
            assert_eq!(got, want, "partial={:?} stack={:?} next={}", partial.heads(), c.stack(), c.buffer_front());
            assert!(!got.is_empty(), "deadlock");
            for a in got.iter() {
                let mut next = c.clone();
                next.apply(a).unwrap();
                todo.push(next);
            }
        }
    }
}

#[test]
fn complete_partial_keeps_oracle_action() {
    let mut rng = ChaCha8Rng::seed_from_u64(3);
    for _ in 0..200 {
        let n = rng.random_range(1..=10);
        let gold = random_tree(&mut rng, n);
        let partial = PartialTree::from(&gold);
        let mut c = Configuration::initial(n);
        for a in static_oracle(&gold).unwrap() {
            assert!(constrained_legal_actions(&c, &partial).contains(a));
            c.apply(a).unwrap();
        }
        assert!(constrained_legal_actions(&Configuration::initial(n), &PartialTree::empty(n))
            == legal_actions(&Configuration::initial(n)));
    }
}

#[test]
fn beam_matches_exhaustive_search() {
    let mut rng = ChaCha8Rng::seed_from_u64(4);
    let ex = extractor();
    for n in 1..=4 {
        let seqs = all_sequences(n);
        let p = sentence(n);
        for _ in 0..10 {
            let w = random_weights(&mut rng, ex.dimension());
            let scorer = ActionScorer::new(&ex, &w).unwrap();
            let best = seqs
                .iter()
                .map(|s| {
                    let total: f64 = sequence_features(&ex, &p, s).unwrap().iter().map(|&i| w[i as usize]).sum();
                    (total, s)
                })
                .max_by(|a, b| a.0.partial_cmp(&b.0).unwrap())
                .unwrap();
            let got = beam_decode(&p, &scorer, seqs.len() * 4, None).unwrap();
            assert!((got.score - best.0).abs() < 1e-9);
            assert_eq!(&got.history, best.1);
        }
    }
}

#[test]
fn constrained_beam_contains_partial() {
    let mut rng = ChaCha8Rng::seed_from_u64(5);
    let ex = extractor();
    for _ in 0..100 {
        let n = rng.random_range(1..=12);
        let p = sentence(n);
        let gold = random_tree(&mut rng, n);
        let partial = random_partial(&mut rng, &gold, 0.3);
        let w = random_weights(&mut rng, ex.dimension());
        let scorer = ActionScorer::new(&ex, &w).unwrap();
        for beam in [1, 2, 8] {
            let item = beam_decode(&p, &scorer, beam, Some(&partial)).unwrap();
            assert!(item.tree().unwrap().contains(&partial));
        }
        let full = PartialTree::from(&gold);
        assert_eq!(beam_decode(&p, &scorer, 4, Some(&full)).unwrap().tree().unwrap(), gold);
    }
}

#[test]
fn greedy_path_builds_telescope_arcs() {
    // I saw Sarah with a telescope: saw -> root, with -> saw
    let partial = PartialTree::new(vec![None, Some(0), None, Some(2), None, None]).unwrap();
    let mut rng = ChaCha8Rng::seed_from_u64(6);
    let ex = extractor();
    let p = sentence(6);
    for _ in 0..20 {
        let w = random_weights(&mut rng, ex.dimension());
        let scorer = ActionScorer::new(&ex, &w).unwrap();
        let t = beam_decode(&p, &scorer, 1, Some(&partial)).unwrap().tree().unwrap();
        assert_eq!((t.head(2), t.head(4)), (0, 2));
    }
}

#[test]
fn score_is_additive_and_deterministic() {
    let mut rng = ChaCha8Rng::seed_from_u64(7);
    let ex = extractor();
    let p = sentence(9);
    let w = random_weights(&mut rng, ex.dimension());
    let scorer = ActionScorer::new(&ex, &w).unwrap();
    let item = beam_decode(&p, &scorer, 8, None).unwrap();
    assert_eq!(item.score, scorer.score_sequence(&p, &item.history).unwrap());

    let zeros = vec![0.0; ex.dimension()];
    let zero = ActionScorer::new(&ex, &zeros).unwrap();
    let a = beam_decode(&p, &zero, 8, None).unwrap();
    let b = beam_decode(&p, &zero, 8, None).unwrap();
    assert_eq!(a, b);
    assert!(ActionScorer::new(&ex, &zeros[1..]).is_err());
}

#[test]
fn early_update_detection() {
    let ex = extractor();
    let p = sentence(3);
    // reference starts with RIGHT_ARC; make SHIFT win the first step
    let gold = DepTree::new(vec![0, 1, 2]).unwrap();
    let reference = static_oracle(&gold).unwrap();
    let mut w = vec![0.0; ex.dimension()];
    let mut ctx = Vec::new();
    ex.context_into(&p, &Configuration::initial(3), &mut ctx);
    for &f in &ctx {
        w[ex.action_index(f, Action::Shift) as usize] = 1.0;
    }
    let scorer = ActionScorer::new(&ex, &w).unwrap();
    let (item, stop) = beam_decode_with_reference(&p, &scorer, 1, &reference).unwrap();
    assert_eq!(stop, Some(1));
    assert_eq!(item.history, vec![Action::Shift]);

    // the model's own best path never falls out
    let own = beam_decode(&p, &scorer, 1, None).unwrap().history;
    let (item, stop) = beam_decode_with_reference(&p, &scorer, 1, &own).unwrap();
    assert_eq!((stop, item.history), (None, own));

    // a beam wider than the number of sequences keeps every prefix
    let (_, stop) = beam_decode_with_reference(&p, &scorer, 64, &reference).unwrap();
    assert_eq!(stop, None);
}
