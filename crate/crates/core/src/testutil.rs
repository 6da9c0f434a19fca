//! Helpers shared by unit tests.

use alloc::vec;
use alloc::vec::Vec;
use rand::Rng;

use crate::corpus::{DepTree, PartialTree};

/// Uniform-ish random projective single-root tree on `n` tokens.
pub fn random_tree(rng: &mut impl Rng, n: usize) -> DepTree {
    let mut heads = vec![0usize; n];
    let r = rng.random_range(1..=n);
    heads[r - 1] = 0;
    fill(rng, &mut heads, 1, r as isize - 1, r);
    fill(rng, &mut heads, r + 1, n as isize, r);
    DepTree::new(heads).expect("generator builds projective trees")
}

/// Attaches tokens `lo..=hi` under `head`, which lies outside the span.
fn fill(rng: &mut impl Rng, heads: &mut [usize], lo: usize, hi: isize, head: usize) {
    if (lo as isize) > hi {
        return;
    }
    let hi = hi as usize;
    let c = rng.random_range(lo..=hi);
    heads[c - 1] = head;
    if head < lo {
        // between head and c: a prefix stays with head, the rest goes under c
        let k = rng.random_range(lo..=c);
        fill(rng, heads, lo, k as isize - 1, head);
        fill(rng, heads, k, c as isize - 1, c);
        let k = rng.random_range(c..=hi);
        fill(rng, heads, c + 1, k as isize, c);
        fill(rng, heads, k + 1, hi as isize, head);
    } else {
        let k = rng.random_range(c..=hi);
        fill(rng, heads, c + 1, k as isize, c);
        fill(rng, heads, k + 1, hi as isize, head);
        let k = rng.random_range(lo..=c);
        fill(rng, heads, lo, k as isize - 1, head);
        fill(rng, heads, k, c as isize - 1, c);
    }
}

/// Keeps each head independently with probability `p`.
pub fn random_partial(rng: &mut impl Rng, t: &DepTree, p: f64) -> PartialTree {
    let keep: Vec<usize> = (1..=t.len()).filter(|_| rng.random_bool(p)).collect();
    PartialTree::from_selection(t, keep)
}

/// Every projective single-root tree on `n` tokens, by filtering all head arrays.
pub fn enumerate_trees(n: usize) -> Vec<DepTree> {
    let mut out = Vec::new();
    let mut heads = vec![0usize; n];
    loop {
        if let Ok(t) = DepTree::new(heads.clone()) {
            out.push(t);
        }
        let mut i = 0;
        loop {
            if i == n {
                return out;
            }
            heads[i] += 1;
            if heads[i] <= n {
                break;
            }
            heads[i] = 0;
            i += 1;
        }
    }
}

/// Sentence of `n` tokens cycling through a few tags.
pub fn sentence(n: usize) -> crate::corpus::Sentence {
    let words: Vec<(alloc::string::String, &str)> = (1..=n)
        .map(|i| (alloc::format!("w{i}"), ["NN", "VB", "IN", "DT", "JJ"][i % 5]))
        .collect();
    crate::corpus::Sentence::from_pairs(
        words.iter().map(|(w, p)| (w.as_str(), *p)),
        &crate::corpus::PunctSet::ptb(),
    )
}
