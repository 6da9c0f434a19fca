//! Exact second-order projective decoding and inside-outside over the same chart.
//!
//! Trees are single-rooted: the artificial root takes exactly one dependent.
//! Constraints are arc masks; a partial tree becomes a mask that only allows
//! the annotated head for each annotated token.

mod chart;
pub(crate) mod projective;

use alloc::vec;
use alloc::vec::Vec;

use crate::corpus::{DepTree, PartialTree};
use crate::error::{Error, Result};
use crate::features::{FeatureExtractor, Prepared};
use crate::math::{self, is_dead, NEG_SENTINEL};

pub(crate) use chart::{decode_factor, factor_index};
use chart::{Hypergraph, NO_FACTOR};

/// Scores of single arcs and adjacent-sibling pairs for one sentence.
#[derive(Debug, Clone, PartialEq)]
pub struct FactorScores {
    n: usize,
    arc: Vec<f64>,
    sib: Vec<f64>,
}

impl FactorScores {
    pub fn zeros(n: usize) -> Self {
        let w = n + 1;
        FactorScores {
            n,
            arc: vec![0.0; w * w],
            sib: vec![0.0; w * w * w],
        }
    }

    /// Scores every factor with `weights` under the graph templates.
    pub fn from_model(extractor: &FeatureExtractor, sentence: &Prepared, weights: &[f64]) -> Self {
        let n = sentence.len();
        let mut scores = FactorScores::zeros(n);
        let mut buf = Vec::with_capacity(128);
        let dot = |buf: &[u32]| buf.iter().map(|&i| weights[i as usize]).sum::<f64>();
        for_each_factor(n, |h, m, sib| {
            buf.clear();
            match sib {
                None => {
                    extractor.arc_into(sentence, h, m, &mut buf);
                    scores.set_arc(h, m, dot(&buf));
                    buf.clear();
                    extractor.sibling_into(sentence, h, m, None, &mut buf);
                }
                Some(_) => extractor.sibling_into(sentence, h, m, sib, &mut buf),
            }
            scores.set_sib(h, m, sib, dot(&buf));
        });
        scores
    }

    pub fn len(&self) -> usize {
        self.n
    }

    pub fn is_empty(&self) -> bool {
        self.n == 0
    }

    pub fn arc(&self, h: usize, m: usize) -> f64 {
        self.arc[h * (self.n + 1) + m]
    }

    pub fn set_arc(&mut self, h: usize, m: usize, v: f64) {
        self.arc[h * (self.n + 1) + m] = v;
    }

    /// Score of `h -> m` with closer sibling `sib` (`None`: first child on that side).
    pub fn sib(&self, h: usize, m: usize, sib: Option<usize>) -> f64 {
        self.sib[factor_index(self.n, h, m, sib)]
    }

    pub fn set_sib(&mut self, h: usize, m: usize, sib: Option<usize>, v: f64) {
        self.sib[factor_index(self.n, h, m, sib)] = v;
    }

    /// Copy with every disallowed arc set to the dead sentinel.
    pub fn masked(&self, mask: &ConstraintMask) -> Self {
        let mut out = self.clone();
        for h in 0..=self.n {
            for m in 1..=self.n {
                if !mask.allows(h, m) {
                    out.set_arc(h, m, NEG_SENTINEL);
                }
            }
        }
        out
    }

    fn edge_weights(&self, g: &Hypergraph, mask: &ConstraintMask) -> Vec<f64> {
        g.edges
            .iter()
            .map(|e| {
                if e.factor == NO_FACTOR {
                    return 0.0;
                }
                let (h, m, _) = decode_factor(self.n, e.factor as usize);
                let a = self.arc(h, m);
                if !mask.allows(h, m) || is_dead(a) {
                    NEG_SENTINEL
                } else {
                    a + self.sib[e.factor as usize]
                }
            })
            .collect()
    }
}

/// Visits every `(h, m, sib)` factor the chart can use: root arcs only with
/// the first-child sentinel, other arcs with every sibling strictly between
/// head and modifier.
pub fn for_each_factor(n: usize, mut f: impl FnMut(usize, usize, Option<usize>)) {
    for m in 1..=n {
        f(0, m, None);
    }
    for h in 1..=n {
        for m in 1..=n {
            if h == m {
                continue;
            }
            f(h, m, None);
            let (lo, hi) = (h.min(m), h.max(m));
            for s in lo + 1..hi {
                f(h, m, Some(s));
            }
        }
    }
}

/// Which arcs a tree may use.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ConstraintMask {
    n: usize,
    allowed: Vec<bool>,
}

impl ConstraintMask {
    /// Every arc allowed.
    pub fn trivial(n: usize) -> Self {
        let w = n + 1;
        let allowed = (0..w * w).map(|i| (i % w) != 0 && (i % w) != i / w).collect();
        ConstraintMask { n, allowed }
    }

    /// Annotated tokens may only take their annotated head.
    pub fn from_partial(partial: &PartialTree) -> Result<Self> {
        let mask = Self::from_partial_unchecked(partial);
        if !mask.is_satisfiable() {
            return Err(Error::Unsatisfiable);
        }
        Ok(mask)
    }

    pub(crate) fn from_partial_unchecked(partial: &PartialTree) -> Self {
        let n = partial.len();
        let mut mask = Self::trivial(n);
        for (i, h) in partial.heads().iter().enumerate() {
            if let Some(h) = *h {
                let m = i + 1;
                for x in 0..=n {
                    mask.allowed[x * (n + 1) + m] = x == h;
                }
            }
        }
        mask
    }

    /// Builds a mask from an arbitrary predicate; fails when no tree survives.
    pub fn from_fn(n: usize, allow: impl Fn(usize, usize) -> bool) -> Result<Self> {
        let mut mask = Self::trivial(n);
        for h in 0..=n {
            for m in 1..=n {
                if h != m {
                    mask.allowed[h * (n + 1) + m] = allow(h, m);
                }
            }
        }
        if !mask.is_satisfiable() {
            return Err(Error::Unsatisfiable);
        }
        Ok(mask)
    }

    pub fn len(&self) -> usize {
        self.n
    }

    pub fn is_empty(&self) -> bool {
        self.n == 0
    }

    pub fn allows(&self, h: usize, m: usize) -> bool {
        self.allowed[h * (self.n + 1) + m]
    }

    /// Whether every arc allowed here is allowed by `other`.
    pub fn is_subset_of(&self, other: &ConstraintMask) -> bool {
        self.n == other.n && self.allowed.iter().zip(&other.allowed).all(|(&a, &b)| !a || b)
    }

    pub fn is_satisfiable(&self) -> bool {
        projective::satisfiable(self.n, |h, m| self.allows(h, m))
    }
}

pub(crate) fn is_satisfiable(partial: &PartialTree) -> bool {
    ConstraintMask::from_partial_unchecked(partial).is_satisfiable()
}

/// Heads each token can take in some tree consistent with `partial`, ascending.
pub(crate) fn reachable_heads(partial: &PartialTree) -> Result<Vec<Vec<usize>>> {
    let n = partial.len();
    let mask = ConstraintMask::from_partial(partial)?;
    let g = Hypergraph::new(n);
    let weights = FactorScores::zeros(n).edge_weights(&g, &mask);
    let inside = g.inside(&weights);
    let mut live = vec![false; (n + 1) * (n + 1)];
    g.outside(&weights, &inside, |ei, _| {
        let f = g.edges[ei].factor;
        if f != NO_FACTOR {
            let (h, m, _) = decode_factor(n, f as usize);
            live[h * (n + 1) + m] = true;
        }
    });
    let out = (1..=n)
        .map(|m| (0..=n).filter(|&h| live[h * (n + 1) + m]).collect::<Vec<_>>())
        .collect::<Vec<_>>();
    if out.iter().any(Vec::is_empty) {
        return Err(Error::Unsatisfiable);
    }
    Ok(out)
}

/// Sum of arc and adjacent-sibling scores of `tree`; minus infinity if it uses a masked arc.
pub fn score_tree(factors: &FactorScores, tree: &DepTree) -> f64 {
    let mut total = 0.0;
    for (h, m) in tree.arcs() {
        let a = factors.arc(h, m);
        if is_dead(a) {
            return f64::NEG_INFINITY;
        }
        total += a;
    }
    for h in 0..=tree.len() {
        for right in [false, true] {
            let mut prev = None;
            for m in tree.children(h, right) {
                total += factors.sib(h, m, prev);
                prev = Some(m);
            }
        }
    }
    total
}

/// Highest-scoring projective single-root tree allowed by `mask`.
pub fn decode(factors: &FactorScores, mask: &ConstraintMask) -> Result<DepTree> {
    let n = factors.len();
    if mask.len() != n {
        return Err(Error::LengthMismatch {
            expected: n,
            found: mask.len(),
        });
    }
    if n == 0 {
        return Err(Error::Unsatisfiable);
    }
    let g = Hypergraph::new(n);
    let weights = factors.edge_weights(&g, mask);
    let (inside, back) = g.viterbi(&weights);
    if is_dead(inside[g.root as usize]) {
        return Err(Error::Unsatisfiable);
    }
    let mut used = Vec::with_capacity(2 * n);
    g.backtrace(&back, g.root, &mut used);
    let mut heads = vec![0usize; n];
    for f in used {
        let (h, m, _) = decode_factor(n, f as usize);
        heads[m - 1] = h;
    }
    Ok(DepTree::new(heads).expect("chart derivations are projective single-root trees"))
}

/// Log-partition and marginals over the trees allowed by a mask.
#[derive(Debug, Clone)]
pub struct InsideOutsideResult {
    n: usize,
    pub log_partition: f64,
    arc_marginal: Vec<f64>,
    factor_marginal: Vec<f64>,
}

impl InsideOutsideResult {
    pub fn len(&self) -> usize {
        self.n
    }

    pub fn is_empty(&self) -> bool {
        self.n == 0
    }

    /// Probability that `h -> m` is in the tree.
    pub fn arc_marginal(&self, h: usize, m: usize) -> f64 {
        self.arc_marginal[h * (self.n + 1) + m]
    }

    /// Probability that the sibling factor `(h, m, sib)` is used.
    pub fn factor_marginal(&self, h: usize, m: usize, sib: Option<usize>) -> f64 {
        self.factor_marginal[factor_index(self.n, h, m, sib)]
    }

    /// Distribution over heads of token `m`, indexed by head.
    pub fn head_distribution(&self, m: usize) -> Vec<f64> {
        (0..=self.n).map(|h| self.arc_marginal(h, m)).collect()
    }

    /// Visits every factor with non-zero marginal.
    pub fn for_each_factor(&self, mut f: impl FnMut(usize, usize, Option<usize>, f64)) {
        for (i, &p) in self.factor_marginal.iter().enumerate() {
            if p != 0.0 {
                let (h, m, s) = decode_factor(self.n, i);
                f(h, m, s, p);
            }
        }
    }
}

pub fn inside_outside(factors: &FactorScores, mask: &ConstraintMask) -> Result<InsideOutsideResult> {
    let n = factors.len();
    if mask.len() != n {
        return Err(Error::LengthMismatch {
            expected: n,
            found: mask.len(),
        });
    }
    if n == 0 {
        return Err(Error::Unsatisfiable);
    }
    let g = Hypergraph::new(n);
    let weights = factors.edge_weights(&g, mask);
    let inside = g.inside(&weights);
    let log_z = inside[g.root as usize];
    if is_dead(log_z) {
        return Err(Error::Unsatisfiable);
    }
    let w = n + 1;
    let mut arc_marginal = vec![0.0; w * w];
    let mut factor_marginal = vec![0.0; w * w * w];
    g.outside(&weights, &inside, |ei, log_v| {
        let f = g.edges[ei].factor;
        if f != NO_FACTOR {
            let p = math::exp(log_v - log_z);
            factor_marginal[f as usize] += p;
            let (h, m, _) = decode_factor(n, f as usize);
            arc_marginal[h * w + m] += p;
        }
    });
    Ok(InsideOutsideResult {
        n,
        log_partition: log_z,
        arc_marginal,
        factor_marginal,
    })
}

/// `log p(partial | x)`: log-partition under `mask` minus log-partition under `full_mask`.
pub fn forest_log_prob(factors: &FactorScores, mask: &ConstraintMask, full_mask: &ConstraintMask) -> Result<f64> {
    let n = factors.len();
    if n == 0 {
        return Err(Error::Unsatisfiable);
    }
    let g = Hypergraph::new(n);
    let num = g.inside(&factors.edge_weights(&g, mask))[g.root as usize];
    let den = g.inside(&factors.edge_weights(&g, full_mask))[g.root as usize];
    if is_dead(num) || is_dead(den) {
        return Err(Error::Unsatisfiable);
    }
    Ok(num - den)
}
