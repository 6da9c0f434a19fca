//! Arc-eager transition system, static oracle and beam search.
//!
//! The root sits at the bottom of the stack and takes exactly one dependent.
//! Beyond the textbook preconditions, actions that can only lead to an
//! incomplete tree are barred: shifting the last token, attaching the last
//! token while a stack token is still headless, and reducing the root's
//! dependent. Every terminal configuration is therefore a complete tree.
//!
//! Constrained decoding keeps only actions after which some complete tree
//! containing the partial annotation is still reachable. A cheap rule check
//! rejects most violating actions; the rest are caught by an exact test on the
//! remaining frontier (stack and buffer), since arc-eager reachability of a
//! tree reduces to reachability of each of its arcs.

use alloc::vec;
use alloc::vec::Vec;
use core::fmt;

use crate::corpus::{DepTree, PartialTree};
use crate::error::{Error, Result};
use crate::features::{FeatureExtractor, Prepared};
use crate::graph::projective;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Action {
    Shift = 0,
    LeftArc = 1,
    RightArc = 2,
    Reduce = 3,
}

impl Action {
    /// Fixed expansion order.
    pub const ALL: [Action; 4] = [Action::Shift, Action::LeftArc, Action::RightArc, Action::Reduce];

    pub fn name(self) -> &'static str {
        match self {
            Action::Shift => "SHIFT",
            Action::LeftArc => "LEFT_ARC",
            Action::RightArc => "RIGHT_ARC",
            Action::Reduce => "REDUCE",
        }
    }
}

impl fmt::Display for Action {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

/// A subset of the four actions.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct ActionSet(u8);

impl ActionSet {
    pub fn empty() -> Self {
        ActionSet(0)
    }

    pub fn insert(&mut self, a: Action) {
        self.0 |= 1 << a as u8;
    }

    pub fn remove(&mut self, a: Action) {
        self.0 &= !(1 << a as u8);
    }

    pub fn contains(&self, a: Action) -> bool {
        self.0 & (1 << a as u8) != 0
    }

    pub fn is_empty(&self) -> bool {
        self.0 == 0
    }

    pub fn len(&self) -> usize {
        self.0.count_ones() as usize
    }

    pub fn iter(self) -> impl Iterator<Item = Action> {
        Action::ALL.into_iter().filter(move |&a| self.contains(a))
    }
}

impl FromIterator<Action> for ActionSet {
    fn from_iter<I: IntoIterator<Item = Action>>(iter: I) -> Self {
        let mut s = ActionSet::empty();
        for a in iter {
            s.insert(a);
        }
        s
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct Configuration {
    n: usize,
    stack: Vec<usize>,
    next: usize,
    heads: Vec<Option<usize>>,
    leftmost: Vec<Option<usize>>,
    rightmost: Vec<Option<usize>>,
    left_valency: Vec<u8>,
    right_valency: Vec<u8>,
    root_child: Option<usize>,
}

impl Configuration {
    pub fn initial(n: usize) -> Self {
        Configuration {
            n,
            stack: vec![0],
            next: 1,
            heads: vec![None; n + 1],
            leftmost: vec![None; n + 1],
            rightmost: vec![None; n + 1],
            left_valency: vec![0; n + 1],
            right_valency: vec![0; n + 1],
            root_child: None,
        }
    }

    pub fn len(&self) -> usize {
        self.n
    }

    pub fn is_empty(&self) -> bool {
        self.n == 0
    }

    pub fn is_terminal(&self) -> bool {
        self.next > self.n
    }

    pub fn stack(&self) -> &[usize] {
        &self.stack
    }

    pub fn stack_top(&self) -> Option<usize> {
        self.stack.last().copied()
    }

    pub fn stack_below_top(&self) -> Option<usize> {
        self.stack.len().checked_sub(2).map(|i| self.stack[i])
    }

    /// First buffer position, `n + 1` once the buffer is empty.
    pub fn buffer_front(&self) -> usize {
        self.next
    }

    pub fn buffer_at(&self, k: usize) -> Option<usize> {
        let i = self.next + k;
        (i <= self.n).then_some(i)
    }

    pub fn head_of(&self, token: usize) -> Option<usize> {
        self.heads[token]
    }

    pub fn leftmost_child(&self, token: usize) -> Option<usize> {
        self.leftmost[token]
    }

    pub fn rightmost_child(&self, token: usize) -> Option<usize> {
        self.rightmost[token]
    }

    pub fn left_valency(&self, token: usize) -> u8 {
        self.left_valency[token]
    }

    pub fn right_valency(&self, token: usize) -> u8 {
        self.right_valency[token]
    }

    pub fn root_child(&self) -> Option<usize> {
        self.root_child
    }

    /// Arcs built so far, as a head map over tokens `1..=n`.
    pub fn arcs(&self) -> &[Option<usize>] {
        &self.heads[1..]
    }

    /// The complete tree, if every token has a head.
    pub fn to_tree(&self) -> Option<DepTree> {
        let heads: Option<Vec<usize>> = self.heads[1..].iter().copied().collect();
        heads.and_then(|h| DepTree::new(h).ok())
    }

    fn add_arc(&mut self, h: usize, m: usize) {
        self.heads[m] = Some(h);
        if m < h {
            self.leftmost[h] = Some(self.leftmost[h].map_or(m, |x| x.min(m)));
            self.left_valency[h] = self.left_valency[h].saturating_add(1);
        } else {
            self.rightmost[h] = Some(self.rightmost[h].map_or(m, |x| x.max(m)));
            self.right_valency[h] = self.right_valency[h].saturating_add(1);
        }
        if h == 0 {
            self.root_child = Some(m);
        }
    }

    /// Applies `action` if it is legal.
    pub fn apply(&mut self, action: Action) -> Result<()> {
        if !legal_actions(self).contains(action) {
            return Err(Error::IllegalAction(action.name()));
        }
        self.apply_unchecked(action);
        Ok(())
    }

    fn apply_unchecked(&mut self, action: Action) {
        let b = self.next;
        match action {
            Action::Shift => {
                self.stack.push(b);
                self.next += 1;
            }
            Action::LeftArc => {
                let s = self.stack.pop().expect("non-empty stack");
                self.add_arc(b, s);
            }
            Action::RightArc => {
                let s = *self.stack.last().expect("non-empty stack");
                self.add_arc(s, b);
                self.stack.push(b);
                self.next += 1;
            }
            Action::Reduce => {
                self.stack.pop();
            }
        }
    }
}

/// Arc-eager preconditions, restricted to actions that keep a complete
/// single-root tree reachable.
pub fn legal_actions(c: &Configuration) -> ActionSet {
    let mut set = ActionSet::empty();
    if c.is_terminal() {
        return set;
    }
    let s = *c.stack.last().expect("root never leaves the stack");
    let last = c.next == c.n;
    if !last {
        set.insert(Action::Shift);
    }
    if s != 0 && c.heads[s].is_none() {
        set.insert(Action::LeftArc);
    }
    let right_ok = if s == 0 {
        c.root_child.is_none()
    } else {
        !last || c.stack[1..].iter().all(|&k| c.heads[k].is_some())
    };
    if right_ok {
        set.insert(Action::RightArc);
    }
    if s != 0 && c.heads[s].is_some_and(|h| h != 0) {
        set.insert(Action::Reduce);
    }
    set
}

/// Quick necessary conditions for keeping `partial` reachable.
fn passes_rules(c: &Configuration, partial: &PartialTree, action: Action) -> bool {
    let s = *c.stack.last().expect("non-empty stack");
    let b = c.next;
    let want = |m: usize| partial.head(m);
    let stack_has_dep_of = |x: usize| c.stack.iter().any(|&k| k != 0 && want(k) == Some(x));
    let buffer_has_dep_of = |x: usize| (b..=c.n).any(|k| want(k) == Some(x));
    match action {
        Action::LeftArc => want(s).is_none_or(|h| h == b) && !buffer_has_dep_of(s),
        Action::RightArc => {
            want(b).is_none_or(|h| h == s)
                && !stack_has_dep_of(b)
                && (s != 0 || partial.root().is_none_or(|r| r == b))
        }
        Action::Reduce => !buffer_has_dep_of(s),
        Action::Shift => {
            want(b).is_none_or(|h| !c.stack.contains(&h)) && !stack_has_dep_of(b)
        }
    }
}

/// Whether some complete tree containing `partial` is reachable from `c`.
///
/// Popped tokens are finished; the remaining problem is a projective tree over
/// the stack tokens and the buffer where headless stack tokens take heads from
/// the buffer and no new arc joins two stack tokens.
pub fn is_completable(c: &Configuration, partial: &PartialTree) -> bool {
    // built arcs must agree with the annotation
    for m in 1..=c.n {
        if let (Some(h), Some(p)) = (c.heads[m], partial.head(m)) {
            if h != p {
                return false;
            }
        }
    }
    if c.is_terminal() {
        return c.heads[1..].iter().all(Option::is_some) && c.root_child.is_some();
    }
    let b = c.next;
    let frontier: Vec<usize> = c.stack[1..].iter().copied().chain(b..=c.n).collect();
    let stack_len = c.stack.len() - 1;
    let in_stack = |x: usize| x < b;
    projective::satisfiable(frontier.len(), |hi, mi| {
        let m = frontier[mi - 1];
        let h = if hi == 0 { 0 } else { frontier[hi - 1] };
        if let Some(built) = c.heads[m] {
            return built == h;
        }
        if partial.head(m).is_some_and(|p| p != h) {
            return false;
        }
        if mi <= stack_len {
            // headless stack token: head must come from the buffer
            h != 0 && !in_stack(h)
        } else if h == 0 {
            c.root_child.is_none()
        } else {
            true
        }
    })
}

/// The legal actions that keep a tree containing `partial` reachable.
pub fn constrained_legal_actions(c: &Configuration, partial: &PartialTree) -> ActionSet {
    let legal = legal_actions(c);
    if partial.annotated() == 0 {
        return legal;
    }
    legal
        .iter()
        .filter(|&a| {
            if !passes_rules(c, partial, a) {
                return false;
            }
            let mut next = c.clone();
            next.apply_unchecked(a);
            is_completable(&next, partial)
        })
        .collect()
}

/// Canonical action sequence that rebuilds `gold`.
pub fn static_oracle(gold: &DepTree) -> Result<Vec<Action>> {
    let n = gold.len();
    let mut c = Configuration::initial(n);
    let mut out = Vec::with_capacity(2 * n);
    while !c.is_terminal() {
        let s = *c.stack.last().unwrap();
        let b = c.next;
        let action = if s != 0 && gold.head(s) == b {
            Action::LeftArc
        } else if gold.head(b) == s {
            Action::RightArc
        } else if c.heads[s].is_some()
            && c.stack[..c.stack.len() - 1]
                .iter()
                .any(|&k| gold.head(b) == k || (k != 0 && gold.head(k) == b))
        {
            Action::Reduce
        } else {
            Action::Shift
        };
        c.apply(action)?;
        out.push(action);
    }
    if c.to_tree().as_ref() != Some(gold) {
        return Err(Error::IllegalAction("static oracle did not rebuild the tree"));
    }
    Ok(out)
}

/// Replays `actions` from the initial configuration.
pub fn replay(n: usize, actions: &[Action]) -> Result<Configuration> {
    let mut c = Configuration::initial(n);
    for &a in actions {
        c.apply(a)?;
    }
    Ok(c)
}

/// Linear action scorer over hashed context features.
#[derive(Clone, Copy)]
pub struct ActionScorer<'a> {
    extractor: &'a FeatureExtractor,
    weights: &'a [f64],
}

impl<'a> ActionScorer<'a> {
    pub fn new(extractor: &'a FeatureExtractor, weights: &'a [f64]) -> Result<Self> {
        if weights.len() != extractor.dimension() {
            return Err(Error::DimensionMismatch {
                expected: extractor.dimension(),
                found: weights.len(),
            });
        }
        Ok(ActionScorer { extractor, weights })
    }

    pub fn extractor(&self) -> &FeatureExtractor {
        self.extractor
    }

    #[inline]
    fn score(&self, ctx: &[u32], action: Action) -> f64 {
        let mut total = 0.0;
        for &f in ctx {
            total += self.weights[self.extractor.action_index(f, action) as usize];
        }
        total
    }

    /// Sum of per-step action scores of `actions`, accumulated in order.
    pub fn score_sequence(&self, sentence: &Prepared, actions: &[Action]) -> Result<f64> {
        let mut c = Configuration::initial(sentence.len());
        let mut ctx = Vec::new();
        let mut total = 0.0;
        for &a in actions {
            ctx.clear();
            self.extractor.context_into(sentence, &c, &mut ctx);
            total += self.score(&ctx, a);
            c.apply(a)?;
        }
        Ok(total)
    }
}

/// Weight indices fired by an action sequence (with repetition).
pub fn sequence_features(extractor: &FeatureExtractor, sentence: &Prepared, actions: &[Action]) -> Result<Vec<u32>> {
    let mut c = Configuration::initial(sentence.len());
    let mut ctx = Vec::new();
    let mut out = Vec::new();
    for &a in actions {
        ctx.clear();
        extractor.context_into(sentence, &c, &mut ctx);
        out.extend(ctx.iter().map(|&f| extractor.action_index(f, a)));
        c.apply(a)?;
    }
    Ok(out)
}

#[derive(Debug, Clone, PartialEq)]
pub struct BeamItem {
    pub configuration: Configuration,
    pub history: Vec<Action>,
    pub score: f64,
}

impl BeamItem {
    fn initial(n: usize) -> Self {
        BeamItem {
            configuration: Configuration::initial(n),
            history: Vec::new(),
            score: 0.0,
        }
    }

    pub fn tree(&self) -> Option<DepTree> {
        self.configuration.to_tree()
    }
}

struct Candidate {
    parent: usize,
    action: Option<Action>,
    score: f64,
}

/// One beam step: expands every item, keeps the `beam_size` best candidates
/// ordered by score with ties kept in insertion order. Terminal items carry over.
fn step(
    beam: &[BeamItem],
    scorer: &ActionScorer<'_>,
    sentence: &Prepared,
    beam_size: usize,
    partial: Option<&PartialTree>,
    ctx: &mut Vec<u32>,
) -> Vec<Candidate> {
    let mut cands = Vec::with_capacity(beam.len() * 3);
    for (i, item) in beam.iter().enumerate() {
        let c = &item.configuration;
        if c.is_terminal() {
            cands.push(Candidate {
                parent: i,
                action: None,
                score: item.score,
            });
            continue;
        }
        let actions = match partial {
            Some(p) => constrained_legal_actions(c, p),
            None => legal_actions(c),
        };
        if actions.is_empty() {
            continue;
        }
        ctx.clear();
        scorer.extractor.context_into(sentence, c, ctx);
        for a in actions.iter() {
            cands.push(Candidate {
                parent: i,
                action: Some(a),
                score: item.score + scorer.score(ctx, a),
            });
        }
    }
    // stable: equal scores keep insertion order
    cands.sort_by(|a, b| b.score.partial_cmp(&a.score).unwrap_or(core::cmp::Ordering::Equal));
    cands.truncate(beam_size);
    cands
}

fn materialize(beam: &[BeamItem], cands: &[Candidate]) -> Vec<BeamItem> {
    cands
        .iter()
        .map(|cand| {
            let parent = &beam[cand.parent];
            let mut item = parent.clone();
            if let Some(a) = cand.action {
                item.configuration.apply_unchecked(a);
                item.history.push(a);
                item.score = cand.score;
            }
            item
        })
        .collect()
}

/// Beam search over action sequences. With `partial`, only actions that keep
/// the annotation reachable are expanded, so the result contains it.
pub fn beam_decode(
    sentence: &Prepared,
    scorer: &ActionScorer<'_>,
    beam_size: usize,
    partial: Option<&PartialTree>,
) -> Result<BeamItem> {
    let n = sentence.len();
    if beam_size == 0 {
        return Err(Error::TrainConfig("beam size must be at least 1".into()));
    }
    if let Some(p) = partial {
        if p.len() != n {
            return Err(Error::LengthMismatch {
                expected: n,
                found: p.len(),
            });
        }
        if !is_completable(&Configuration::initial(n), p) {
            return Err(Error::Unsatisfiable);
        }
    }
    if n == 0 {
        return Err(Error::Unsatisfiable);
    }
    let mut beam = vec![BeamItem::initial(n)];
    let mut ctx = Vec::new();
    while beam.iter().any(|it| !it.configuration.is_terminal()) {
        let cands = step(&beam, scorer, sentence, beam_size, partial, &mut ctx);
        if cands.is_empty() {
            return Err(Error::Unsatisfiable);
        }
        beam = materialize(&beam, &cands);
    }
    Ok(beam.swap_remove(0))
}

/// Unconstrained beam search that tracks `reference`. If the reference prefix
/// drops out of the beam after step `t`, stops and returns the best item of
/// that step together with `Some(t)`.
pub fn beam_decode_with_reference(
    sentence: &Prepared,
    scorer: &ActionScorer<'_>,
    beam_size: usize,
    reference: &[Action],
) -> Result<(BeamItem, Option<usize>)> {
    let n = sentence.len();
    if beam_size == 0 {
        return Err(Error::TrainConfig("beam size must be at least 1".into()));
    }
    let mut beam = vec![BeamItem::initial(n)];
    let mut on_ref = vec![true];
    let mut ctx = Vec::new();
    let mut t = 0;
    while beam.iter().any(|it| !it.configuration.is_terminal()) {
        t += 1;
        let cands = step(&beam, scorer, sentence, beam_size, None, &mut ctx);
        if cands.is_empty() {
            return Err(Error::Unsatisfiable);
        }
        let next_on_ref: Vec<bool> = cands
            .iter()
            .map(|c| {
                on_ref[c.parent]
                    && match c.action {
                        Some(a) => reference.get(beam[c.parent].history.len()) == Some(&a),
                        None => beam[c.parent].history.len() == reference.len(),
                    }
            })
            .collect();
        beam = materialize(&beam, &cands);
        if !next_on_ref.iter().any(|&x| x) {
            return Ok((beam.swap_remove(0), Some(t)));
        }
        on_ref = next_on_ref;
    }
    Ok((beam.swap_remove(0), None))
}

#[cfg(test)]
mod tests;
