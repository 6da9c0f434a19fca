//! Sentences, complete and partial dependency trees, and attachment scoring.
//!
//! Token positions are 1-based; position 0 is the artificial root and is never
//! stored as a [`Token`]. Head arrays are indexed by `modifier - 1`.

use alloc::collections::BTreeSet;
use alloc::string::{String, ToString};
use alloc::vec::Vec;
use core::ops::{Add, AddAssign};

use crate::error::{Error, Result};
use crate::graph;

/// POS tags whose tokens count as punctuation.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct PunctSet {
    tags: BTreeSet<String>,
}

impl PunctSet {
    pub fn new<I, S>(tags: I) -> Self
    where
        I: IntoIterator<Item = S>,
        S: Into<String>,
    {
        PunctSet {
            tags: tags.into_iter().map(Into::into).collect(),
        }
    }

    /// Penn Treebank punctuation and symbol tags, plus the UD `PUNCT`/`SYM` tags.
    pub fn ptb() -> Self {
        PunctSet::new([
            "``", "''", ",", ":", ".", "-LRB-", "-RRB-", "#", "$", "PUNCT", "SYM",
        ])
    }

    pub fn contains(&self, pos: &str) -> bool {
        self.tags.contains(pos)
    }

    pub fn tags(&self) -> impl Iterator<Item = &str> {
        self.tags.iter().map(String::as_str)
    }
}

impl Default for PunctSet {
    fn default() -> Self {
        PunctSet::ptb()
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Token {
    pub index: usize,
    pub form: String,
    pub pos: String,
    pub is_punct: bool,
}

impl Token {
    pub fn new(index: usize, form: impl Into<String>, pos: impl Into<String>, punct: &PunctSet) -> Self {
        let pos = pos.into();
        Token {
            index,
            form: form.into(),
            is_punct: punct.contains(&pos),
            pos,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Sentence {
    tokens: Vec<Token>,
}

impl Sentence {
    /// Builds a sentence, checking that token indices run 1..=n and forms are non-empty.
    pub fn new(tokens: Vec<Token>) -> Result<Self> {
        for (i, tok) in tokens.iter().enumerate() {
            if tok.index != i + 1 {
                return Err(Error::IndexOutOfRange {
                    index: tok.index,
                    len: tokens.len(),
                });
            }
            if tok.form.is_empty() {
                return Err(Error::EmptyForm(tok.index));
            }
        }
        Ok(Sentence { tokens })
    }

    /// Convenience constructor from `(form, pos)` pairs.
    pub fn from_pairs<'a, I>(pairs: I, punct: &PunctSet) -> Self
    where
        I: IntoIterator<Item = (&'a str, &'a str)>,
    {
        let tokens = pairs
            .into_iter()
            .enumerate()
            .map(|(i, (form, pos))| Token::new(i + 1, form, pos, punct))
            .collect();
        Sentence { tokens }
    }

    pub fn len(&self) -> usize {
        self.tokens.len()
    }

    pub fn is_empty(&self) -> bool {
        self.tokens.is_empty()
    }

    pub fn tokens(&self) -> &[Token] {
        &self.tokens
    }

    /// Token at 1-based position `index`.
    pub fn token(&self, index: usize) -> &Token {
        &self.tokens[index - 1]
    }

    pub fn is_punct(&self, index: usize) -> bool {
        self.tokens[index - 1].is_punct
    }

    /// Positions of non-punctuation tokens, ascending.
    pub fn scored_positions(&self) -> impl Iterator<Item = usize> + '_ {
        self.tokens.iter().filter(|t| !t.is_punct).map(|t| t.index)
    }
}

/// A complete, projective, single-root dependency tree.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct DepTree {
    heads: Vec<usize>,
}

impl DepTree {
    /// `heads[i]` is the head of token `i + 1`.
    pub fn new(heads: Vec<usize>) -> Result<Self> {
        let partial: Vec<Option<usize>> = heads.iter().copied().map(Some).collect();
        check_structure(&partial)?;
        if !heads.contains(&0) {
            return Err(Error::NoRoot);
        }
        Ok(DepTree { heads })
    }

    pub fn len(&self) -> usize {
        self.heads.len()
    }

    pub fn is_empty(&self) -> bool {
        self.heads.is_empty()
    }

    pub fn heads(&self) -> &[usize] {
        &self.heads
    }

    /// Head of the 1-based token `modifier`.
    pub fn head(&self, modifier: usize) -> usize {
        self.heads[modifier - 1]
    }

    /// The token attached to the artificial root.
    pub fn root(&self) -> usize {
        self.heads.iter().position(|&h| h == 0).map(|i| i + 1).unwrap_or(0)
    }

    /// `(head, modifier)` pairs in modifier order.
    pub fn arcs(&self) -> impl Iterator<Item = (usize, usize)> + '_ {
        self.heads.iter().enumerate().map(|(i, &h)| (h, i + 1))
    }

    /// Dependents of `head` on one side, ordered from nearest to farthest.
    pub fn children(&self, head: usize, right: bool) -> Vec<usize> {
        let mut out: Vec<usize> = self
            .arcs()
            .filter(|&(h, m)| h == head && (m > head) == right)
            .map(|(_, m)| m)
            .collect();
        if !right {
            out.reverse();
        }
        out
    }

    /// Whether every arc of `partial` is in this tree.
    pub fn contains(&self, partial: &PartialTree) -> bool {
        partial.len() == self.len()
            && partial
                .heads()
                .iter()
                .zip(&self.heads)
                .all(|(p, &h)| p.is_none_or(|p| p == h))
    }
}

/// A set of arcs that can be completed into at least one [`DepTree`].
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct PartialTree {
    heads: Vec<Option<usize>>,
}

impl PartialTree {
    /// Validates structure (range, acyclicity, crossing, root count) and
    /// satisfiability against projective single-root trees.
    pub fn new(heads: Vec<Option<usize>>) -> Result<Self> {
        check_structure(&heads)?;
        let tree = PartialTree { heads };
        if !graph::is_satisfiable(&tree) {
            return Err(Error::Unsatisfiable);
        }
        Ok(tree)
    }

    /// No annotated arcs.
    pub fn empty(len: usize) -> Self {
        PartialTree {
            heads: alloc::vec![None; len],
        }
    }

    pub fn len(&self) -> usize {
        self.heads.len()
    }

    pub fn is_empty(&self) -> bool {
        self.heads.is_empty()
    }

    pub fn heads(&self) -> &[Option<usize>] {
        &self.heads
    }

    pub fn head(&self, modifier: usize) -> Option<usize> {
        self.heads[modifier - 1]
    }

    pub fn annotated(&self) -> usize {
        self.heads.iter().filter(|h| h.is_some()).count()
    }

    pub fn is_complete(&self) -> bool {
        self.heads.iter().all(Option::is_some)
    }

    /// Returns the complete tree when every head is given.
    pub fn to_complete(&self) -> Option<DepTree> {
        let heads: Option<Vec<usize>> = self.heads.iter().copied().collect();
        heads.map(|heads| DepTree { heads })
    }

    /// The root attachment, if annotated.
    pub fn root(&self) -> Option<usize> {
        self.heads.iter().position(|&h| h == Some(0)).map(|i| i + 1)
    }

    /// Keeps only the heads of the selected 1-based modifiers of `tree`.
    pub fn from_selection(tree: &DepTree, keep: impl IntoIterator<Item = usize>) -> Self {
        let mut heads = alloc::vec![None; tree.len()];
        for m in keep {
            heads[m - 1] = Some(tree.head(m));
        }
        PartialTree { heads }
    }
}

impl From<&DepTree> for PartialTree {
    fn from(tree: &DepTree) -> Self {
        PartialTree {
            heads: tree.heads.iter().copied().map(Some).collect(),
        }
    }
}

/// Range, self-loop, cycle, root-count and crossing checks over a head map.
fn check_structure(heads: &[Option<usize>]) -> Result<()> {
    let n = heads.len();
    for (i, h) in heads.iter().enumerate() {
        if let Some(h) = *h {
            if h > n {
                return Err(Error::HeadOutOfRange {
                    token: i + 1,
                    head: h,
                    len: n,
                });
            }
            if h == i + 1 {
                return Err(Error::SelfLoop(h));
            }
        }
    }

    // 0 = unvisited, 1 = on the current chain, 2 = known to reach the root or a gap
    let mut state = alloc::vec![0u8; n + 1];
    for start in 1..=n {
        let mut chain = Vec::new();
        let mut cur = start;
        loop {
            if cur == 0 || state[cur] == 2 {
                break;
            }
            if state[cur] == 1 {
                return Err(Error::Cycle(cur));
            }
            state[cur] = 1;
            chain.push(cur);
            match heads[cur - 1] {
                Some(h) => cur = h,
                None => break,
            }
        }
        for c in chain {
            state[c] = 2;
        }
    }

    let mut root = None;
    for (i, h) in heads.iter().enumerate() {
        if *h == Some(0) {
            if let Some(r) = root {
                return Err(Error::MultipleRoots(r, i + 1));
            }
            root = Some(i + 1);
        }
    }

    let spans: Vec<(usize, usize)> = heads
        .iter()
        .enumerate()
        .filter_map(|(i, h)| h.map(|h| (h, i + 1)))
        .collect();
    for (a, &(h1, m1)) in spans.iter().enumerate() {
        let (l1, r1) = (h1.min(m1), h1.max(m1));
        for &(h2, m2) in &spans[a + 1..] {
            let (l2, r2) = (h2.min(m2), h2.max(m2));
            if (l1 < l2 && l2 < r1 && r1 < r2) || (l2 < l1 && l1 < r2 && r2 < r1) {
                return Err(Error::Crossing((h1, m1), (h2, m2)));
            }
        }
    }
    Ok(())
}

/// Attachment counts; aggregate over a corpus by summing, never by averaging ratios.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct EvalResult {
    pub correct_heads: usize,
    pub scored_tokens: usize,
}

impl EvalResult {
    pub fn uas(&self) -> f64 {
        if self.scored_tokens == 0 {
            0.0
        } else {
            self.correct_heads as f64 / self.scored_tokens as f64
        }
    }
}

impl Add for EvalResult {
    type Output = EvalResult;

    fn add(self, rhs: EvalResult) -> EvalResult {
        EvalResult {
            correct_heads: self.correct_heads + rhs.correct_heads,
            scored_tokens: self.scored_tokens + rhs.scored_tokens,
        }
    }
}

impl AddAssign for EvalResult {
    fn add_assign(&mut self, rhs: EvalResult) {
        *self = *self + rhs;
    }
}

impl core::iter::Sum for EvalResult {
    fn sum<I: Iterator<Item = EvalResult>>(iter: I) -> Self {
        iter.fold(EvalResult::default(), Add::add)
    }
}

/// Unlabeled attachment counts over the non-punctuation tokens of `sentence`.
pub fn evaluate_uas(pred: &DepTree, gold: &DepTree, sentence: &Sentence) -> Result<EvalResult> {
    for len in [pred.len(), gold.len()] {
        if len != sentence.len() {
            return Err(Error::LengthMismatch {
                expected: sentence.len(),
                found: len,
            });
        }
    }
    let mut res = EvalResult::default();
    for m in sentence.scored_positions() {
        res.scored_tokens += 1;
        if pred.head(m) == gold.head(m) {
            res.correct_heads += 1;
        }
    }
    Ok(res)
}

/// For every token, the heads it can take in some projective single-root tree
/// that contains all of `partial`. Annotated tokens get exactly their head.
pub fn candidate_heads(sentence: &Sentence, partial: &PartialTree) -> Result<Vec<Vec<usize>>> {
    if sentence.len() != partial.len() {
        return Err(Error::LengthMismatch {
            expected: sentence.len(),
            found: partial.len(),
        });
    }
    graph::reachable_heads(partial)
}

/// Human-readable diagnostic for the first structural problem in a head map, if any.
pub fn diagnose(heads: &[Option<usize>]) -> Option<String> {
    check_structure(heads).err().map(|e| e.to_string())
}

#[cfg(test)]
mod tests {
    use super::*;
    use alloc::vec;

    fn sentence(words: &[(&'static str, &'static str)]) -> Sentence {
        Sentence::from_pairs(words.iter().copied(), &PunctSet::ptb())
    }

    fn telescope() -> Sentence {
        sentence(&[
            ("I", "PRP"),
            ("saw", "VBD"),
            ("Sarah", "NNP"),
            ("with", "IN"),
            ("a", "DT"),
            ("telescope", "NN"),
        ])
    }

    #[test]
    fn smallest_complete_tree() {
        let t = DepTree::new(vec![2, 0, 2]).unwrap();
        assert_eq!(t.root(), 2);
        assert_eq!(t.children(2, true), vec![3]);
        assert_eq!(t.children(2, false), vec![1]);
    }

    #[test]
    fn rejects_cycle() {
        // 1 -> 2, 2 -> 3, 3 -> 2
        assert_eq!(DepTree::new(vec![2, 3, 2]), Err(Error::Cycle(2)));
    }

    #[test]
    fn rejects_bad_structures() {
        assert!(matches!(DepTree::new(vec![0, 0]), Err(Error::MultipleRoots(1, 2))));
        assert!(matches!(DepTree::new(vec![4, 0, 2]), Err(Error::HeadOutOfRange { .. })));
        assert!(matches!(DepTree::new(vec![1]), Err(Error::SelfLoop(1))));
        // 0 -> 2, 2 -> 4, 4 -> 1, 1 -> 3 : arcs (1,3) and (2,4) cross
        assert!(matches!(DepTree::new(vec![4, 0, 1, 2]), Err(Error::Crossing(..))));
        assert!(matches!(
            PartialTree::new(vec![None, Some(0), Some(0)]),
            Err(Error::MultipleRoots(2, 3))
        ));
    }

    #[test]
    fn partial_marker_round_trip() {
        let p = PartialTree::new(vec![None, Some(0), None]).unwrap();
        assert_eq!(p.annotated(), 1);
        assert_eq!(p.root(), Some(2));
        let t = DepTree::new(vec![2, 0, 2]).unwrap();
        assert!(t.contains(&p));
    }

    #[test]
    fn crossing_partial_is_rejected() {
        // root attaches 2, so an arc from 1 to 3 would cross it
        assert!(matches!(
            PartialTree::new(vec![None, Some(0), Some(1)]),
            Err(Error::Crossing(..))
        ));
    }

    #[test]
    fn uas_counts() {
        let s = sentence(&[("a", "DT"), ("b", "NN"), ("c", "VB"), ("d", "RB"), (".", ".")]);
        let gold = DepTree::new(vec![2, 3, 0, 3, 3]).unwrap();
        let same = evaluate_uas(&gold, &gold, &s).unwrap();
        assert_eq!(same.scored_tokens, 4);
        assert_eq!(same.uas(), 1.0);

        let pred = DepTree::new(vec![3, 3, 0, 3, 3]).unwrap();
        let r = evaluate_uas(&pred, &gold, &s).unwrap();
        assert_eq!((r.correct_heads, r.scored_tokens), (3, 4));
        assert_eq!(r.uas(), 0.75);

        // punctuation head errors are not counted
        let pred = DepTree::new(vec![2, 3, 0, 3, 4]).unwrap();
        assert_eq!(evaluate_uas(&pred, &gold, &s).unwrap().uas(), 1.0);
    }

    #[test]
    fn all_punct_sentence_scores_nothing() {
        let s = sentence(&[(",", ","), (".", ".")]);
        let gold = DepTree::new(vec![2, 0]).unwrap();
        let r = evaluate_uas(&gold, &gold, &s).unwrap();
        assert_eq!(r.scored_tokens, 0);
        let total: EvalResult = [r, EvalResult { correct_heads: 3, scored_tokens: 4 }].into_iter().sum();
        assert_eq!(total.uas(), 0.75);
    }

    #[test]
    fn uas_length_mismatch() {
        let s = sentence(&[("a", "DT"), ("b", "NN")]);
        let gold = DepTree::new(vec![2, 0]).unwrap();
        let short = DepTree::new(vec![0]).unwrap();
        assert!(matches!(evaluate_uas(&short, &gold, &s), Err(Error::LengthMismatch { .. })));
    }

    #[test]
    fn telescope_candidates() {
        let s = telescope();
        let partial = PartialTree::new(vec![None, Some(0), None, Some(2), None, None]).unwrap();
        let cands = candidate_heads(&s, &partial).unwrap();
        assert_eq!(cands[0], vec![2], "I can only modify saw");
        assert_eq!(cands[2], vec![2, 4], "Sarah modifies saw or with");
        assert_eq!(cands[1], vec![0]);
        assert_eq!(cands[3], vec![2]);
    }

    #[test]
    fn complete_partial_gives_singletons() {
        let s = telescope();
        let gold = DepTree::new(vec![2, 0, 2, 2, 6, 4]).unwrap();
        let cands = candidate_heads(&s, &PartialTree::from(&gold)).unwrap();
        for (i, c) in cands.iter().enumerate() {
            assert_eq!(c, &vec![gold.heads()[i]]);
        }
    }
}
