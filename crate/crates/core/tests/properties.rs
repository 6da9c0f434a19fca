//! Property tests over the public API.

use pardep_core::corpus::{DepTree, PartialTree, PunctSet, Sentence};
use pardep_core::features::{FeatureConfig, FeatureExtractor, Prepared};
use pardep_core::graph::{decode, score_tree, ConstraintMask, FactorScores};
use pardep_core::sim::{keep_count, simulate_random};
use pardep_core::transition::{replay, static_oracle};
use proptest::prelude::*;

/// Projective single-root trees from a recursive split description.
fn tree_strategy() -> impl Strategy<Value = DepTree> {
    (1usize..=10).prop_flat_map(|n| {
        proptest::collection::vec(any::<u32>(), 4 * n).prop_map(move |choices| {
            let mut heads = vec![0usize; n];
            let mut it = choices.into_iter();
            let mut pick = |lo: usize, hi: usize| lo + (it.next().unwrap_or(0) as usize) % (hi - lo + 1);
            let r = pick(1, n);
            let mut todo = vec![(1usize, r as isize - 1, r), (r + 1, n as isize, r)];
            while let Some((lo, hi, head)) = todo.pop() {
                if lo as isize > hi {
                    continue;
                }
                let hi = hi as usize;
                let c = pick(lo, hi);
                heads[c - 1] = head;
                // the rest of the span hangs below c
                if head < lo {
                    todo.push((lo, c as isize - 1, c));
                    todo.push((c + 1, hi as isize, c));
                } else {
                    todo.push((c + 1, hi as isize, c));
                    todo.push((lo, c as isize - 1, c));
                }
            }
            DepTree::new(heads).expect("nested spans are projective")
        })
    })
}

fn sentence(n: usize) -> Sentence {
    let words: Vec<String> = (0..n).map(|i| format!("x{i}")).collect();
    let tags = ["NN", "VB", ",", "DT"];
    Sentence::from_pairs(
        words.iter().enumerate().map(|(i, w)| (w.as_str(), tags[i % 4])),
        &PunctSet::ptb(),
    )
}

proptest! {
    #[test]
    fn oracle_replays_any_tree(tree in tree_strategy()) {
        let actions = static_oracle(&tree).unwrap();
        prop_assert!(actions.len() <= 2 * tree.len());
        prop_assert_eq!(replay(tree.len(), &actions).unwrap().to_tree().unwrap(), tree);
    }

    #[test]
    fn forced_decode_returns_the_tree(tree in tree_strategy(), seed in any::<u64>()) {
        let ex = FeatureExtractor::new(FeatureConfig::new(16).unwrap());
        let weights: Vec<f64> = (0..ex.dimension()).map(|i| ((i as u64 ^ seed) % 7) as f64 - 3.0).collect();
        let p = Prepared::new(&sentence(tree.len()));
        let scores = FactorScores::from_model(&ex, &p, &weights);
        let mask = ConstraintMask::from_partial(&PartialTree::from(&tree)).unwrap();
        prop_assert_eq!(decode(&scores, &mask).unwrap(), tree.clone());
        let best = decode(&scores, &ConstraintMask::trivial(tree.len())).unwrap();
        prop_assert!(score_tree(&scores, &best) >= score_tree(&scores, &tree));
    }

    #[test]
    fn simulation_keeps_gold_subsets(tree in tree_strategy(), alpha in 1u32..=100, seed in any::<u64>()) {
        let s = sentence(tree.len());
        let k = s.scored_positions().count();
        let out = simulate_random(&[(s, tree.clone())], alpha as f64, seed).unwrap();
        prop_assert!(tree.contains(&out[0]));
        prop_assert_eq!(out[0].annotated(), keep_count(alpha as f64, k));
        prop_assert!(PartialTree::new(out[0].heads().to_vec()).is_ok());
    }
}
