//! Hashed sparse features for graph factors and arc-eager configurations.
//!
//! Every feature is a template id combined with a handful of atoms (word or
//! POS hashes, direction, binned distance, valency). Atoms come from FNV-1a
//! over the UTF-8 bytes; templates are folded with a fixed 64-bit mixer and
//! masked into `2^dimension_log2` buckets. Collisions are not resolved. The
//! template list is documented in `docs/templates.md`.

use alloc::string::{String, ToString};
use alloc::vec::Vec;
use core::hash::Hasher;

use fnv::FnvHasher;

use crate::corpus::{DepTree, Sentence};
use crate::error::{Error, Result};
use crate::transition::{Action, Configuration};

pub const TEMPLATE_SET_VERSION: &str = "pardep-templates-1";
pub const DEFAULT_DIMENSION_LOG2: u32 = 23;

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct FeatureConfig {
    pub dimension_log2: u32,
    pub template_set_version: String,
}

impl FeatureConfig {
    pub fn new(dimension_log2: u32) -> Result<Self> {
        if !(16..=30).contains(&dimension_log2) {
            return Err(Error::FeatureConfig(alloc::format!(
                "dimension_log2 must be in 16..=30, got {dimension_log2}"
            )));
        }
        Ok(FeatureConfig {
            dimension_log2,
            template_set_version: TEMPLATE_SET_VERSION.to_string(),
        })
    }

    pub fn dimension(&self) -> usize {
        1usize << self.dimension_log2
    }
}

impl Default for FeatureConfig {
    fn default() -> Self {
        FeatureConfig::new(DEFAULT_DIMENSION_LOG2).unwrap()
    }
}

/// Sparse feature counts, sorted by index.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct FeatureVector {
    entries: Vec<(u32, u32)>,
}

impl FeatureVector {
    pub fn from_indices(mut indices: Vec<u32>) -> Self {
        indices.sort_unstable();
        let mut entries: Vec<(u32, u32)> = Vec::with_capacity(indices.len());
        for i in indices {
            match entries.last_mut() {
                Some((last, count)) if *last == i => *count += 1,
                _ => entries.push((i, 1)),
            }
        }
        FeatureVector { entries }
    }

    pub fn entries(&self) -> &[(u32, u32)] {
        &self.entries
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    /// Total count, i.e. the size of the underlying index multiset.
    pub fn total(&self) -> u64 {
        self.entries.iter().map(|&(_, c)| c as u64).sum()
    }

    pub fn dot(&self, weights: &[f64]) -> f64 {
        self.entries
            .iter()
            .map(|&(i, c)| weights[i as usize] * c as f64)
            .sum()
    }

    /// Multiset union.
    pub fn merge(&self, other: &FeatureVector) -> FeatureVector {
        let mut idx: Vec<u32> = Vec::with_capacity((self.total() + other.total()) as usize);
        for v in [self, other] {
            for &(i, c) in &v.entries {
                idx.extend(core::iter::repeat_n(i, c as usize));
            }
        }
        FeatureVector::from_indices(idx)
    }
}

const K1: u64 = 0x9E37_79B9_7F4A_7C15;

#[inline]
fn mix(h: u64, v: u64) -> u64 {
    let mut z = h.rotate_left(5) ^ v.wrapping_mul(K1);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

fn atom(prefix: u8, text: &str) -> u64 {
    let mut h = FnvHasher::default();
    h.write(&[prefix]);
    h.write(text.as_bytes());
    h.finish()
}

const ROOT_FORM: u64 = 0x526f_6f74_466f_726d;
const ROOT_POS: u64 = 0x526f_6f74_506f_7300;
const BOS: u64 = 0x424f_5300_0000_0001;
const EOS: u64 = 0x454f_5300_0000_0002;
const NONE: u64 = 0x4e6f_6e65_0000_0003;

/// |h - m| binned as 1, 2, 3, 4, 5, 6-10, >10.
pub fn distance_bin(a: usize, b: usize) -> u64 {
    match a.abs_diff(b) {
        0 => 0,
        d @ 1..=5 => d as u64,
        6..=10 => 6,
        _ => 7,
    }
}

/// Atom hashes for one sentence: position 0 is the root, `n + 1` is end-of-sentence.
#[derive(Debug, Clone)]
pub struct Prepared {
    form: Vec<u64>,
    pos: Vec<u64>,
}

impl Prepared {
    pub fn new(sentence: &Sentence) -> Self {
        let n = sentence.len();
        let mut form = Vec::with_capacity(n + 2);
        let mut pos = Vec::with_capacity(n + 2);
        form.push(ROOT_FORM);
        pos.push(ROOT_POS);
        for tok in sentence.tokens() {
            form.push(atom(b'w', &tok.form));
            pos.push(atom(b'p', &tok.pos));
        }
        form.push(EOS);
        pos.push(EOS);
        Prepared { form, pos }
    }

    pub fn len(&self) -> usize {
        self.form.len() - 2
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    #[inline]
    fn w(&self, i: isize) -> u64 {
        if i < 0 {
            BOS
        } else {
            self.form.get(i as usize).copied().unwrap_or(EOS)
        }
    }

    #[inline]
    fn p(&self, i: isize) -> u64 {
        if i < 0 {
            BOS
        } else {
            self.pos.get(i as usize).copied().unwrap_or(EOS)
        }
    }
}

/// Stateless after construction.
#[derive(Debug, Clone)]
pub struct FeatureExtractor {
    config: FeatureConfig,
    mask: u64,
}

struct Sink<'a> {
    out: &'a mut Vec<u32>,
    mask: u64,
}

impl Sink<'_> {
    #[inline]
    fn push(&mut self, template: u64, atoms: &[u64]) {
        let mut h = mix(0x7465_6d70_6c61_7465, template);
        for &a in atoms {
            h = mix(h, a);
        }
        self.out.push((h & self.mask) as u32);
    }

    /// Plain template plus a copy conjoined with `extra`.
    #[inline]
    fn push_pair(&mut self, template: u64, atoms: &[u64], extra: u64) {
        self.push(template, atoms);
        let mut h = mix(0x636f_6e6a_756e_6374, template);
        for &a in atoms {
            h = mix(h, a);
        }
        h = mix(h, extra);
        self.out.push((h & self.mask) as u32);
    }
}

impl FeatureExtractor {
    pub fn new(config: FeatureConfig) -> Self {
        let mask = (1u64 << config.dimension_log2) - 1;
        FeatureExtractor { config, mask }
    }

    pub fn config(&self) -> &FeatureConfig {
        &self.config
    }

    pub fn dimension(&self) -> usize {
        self.config.dimension()
    }

    fn sink<'a>(&self, out: &'a mut Vec<u32>) -> Sink<'a> {
        Sink {
            out,
            mask: self.mask,
        }
    }

    /// First-order templates for `h -> m`, appended to `out`.
    pub fn arc_into(&self, p: &Prepared, h: usize, m: usize, out: &mut Vec<u32>) {
        let mut s = self.sink(out);
        let (hi, mi) = (h as isize, m as isize);
        let dir = (h < m) as u64;
        let dd = mix(dir + 1, distance_bin(h, m));
        let (hw, hp, mw, mp) = (p.w(hi), p.p(hi), p.w(mi), p.p(mi));
        let (hp_r, hp_l, mp_r, mp_l) = (p.p(hi + 1), p.p(hi - 1), p.p(mi + 1), p.p(mi - 1));

        s.push_pair(0, &[], dd);
        s.push_pair(1, &[hw, hp], dd);
        s.push_pair(2, &[hw], dd);
        s.push_pair(3, &[hp], dd);
        s.push_pair(4, &[mw, mp], dd);
        s.push_pair(5, &[mw], dd);
        s.push_pair(6, &[mp], dd);
        s.push_pair(7, &[hw, hp, mw, mp], dd);
        s.push_pair(8, &[hp, mw, mp], dd);
        s.push_pair(9, &[hw, mw, mp], dd);
        s.push_pair(10, &[hw, hp, mp], dd);
        s.push_pair(11, &[hw, hp, mw], dd);
        s.push_pair(12, &[hw, mw], dd);
        s.push_pair(13, &[hp, mp], dd);
        s.push_pair(14, &[hp, hp_r, mp_l, mp], dd);
        s.push_pair(15, &[hp_l, hp, mp_l, mp], dd);
        s.push_pair(16, &[hp, hp_r, mp, mp_r], dd);
        s.push_pair(17, &[hp_l, hp, mp, mp_r], dd);
        let (lo, hi_) = (h.min(m), h.max(m));
        for b in lo + 1..hi_ {
            s.push_pair(18, &[hp, p.p(b as isize), mp], dd);
        }
    }

    /// Adjacent-sibling templates for `h -> m` whose closer sibling is `sib`
    /// (`None` for the first child on that side). Arguments are not checked.
    pub fn sibling_into(&self, p: &Prepared, h: usize, m: usize, sib: Option<usize>, out: &mut Vec<u32>) {
        let mut s = self.sink(out);
        let dir = (h < m) as u64 + 1;
        let (hw, hp, mw, mp) = (p.w(h as isize), p.p(h as isize), p.w(m as isize), p.p(m as isize));
        let (sw, sp, sd) = match sib {
            Some(x) => (p.w(x as isize), p.p(x as isize), distance_bin(m, x)),
            None => (NONE, NONE, 0),
        };
        s.push_pair(30, &[hp, mp, sp], dir);
        s.push_pair(31, &[mp, sp], dir);
        s.push_pair(32, &[mw, sp], dir);
        s.push_pair(33, &[mp, sw], dir);
        s.push_pair(34, &[mw, sw], dir);
        s.push_pair(35, &[hw, mp, sp], dir);
        s.push_pair(36, &[hp, mw, sp], dir);
        s.push_pair(37, &[hp, mp, sp, sd], dir);
    }

    /// Context templates of an arc-eager configuration. Actions are conjoined
    /// later by [`FeatureExtractor::action_index`].
    pub fn context_into(&self, p: &Prepared, c: &Configuration, out: &mut Vec<u32>) {
        let mut s = self.sink(out);
        let w = |i: Option<usize>| i.map_or(NONE, |i| p.w(i as isize));
        let t = |i: Option<usize>| i.map_or(NONE, |i| p.p(i as isize));

        let s0 = c.stack_top();
        let s1 = c.stack_below_top();
        let n0 = c.buffer_at(0);
        let n1 = c.buffer_at(1);
        let n2 = c.buffer_at(2);
        let s0h = s0.and_then(|x| c.head_of(x));
        let s0l = s0.and_then(|x| c.leftmost_child(x));
        let s0r = s0.and_then(|x| c.rightmost_child(x));
        let n0l = n0.and_then(|x| c.leftmost_child(x));

        let (s0w, s0p, n0w, n0p) = (w(s0), t(s0), w(n0), t(n0));
        let (n1w, n1p, n2w, n2p) = (w(n1), t(n1), w(n2), t(n2));
        let d = match (s0, n0) {
            (Some(a), Some(b)) => distance_bin(a, b),
            _ => 0,
        };
        let (vl0, vr0) = s0.map_or((0, 0), |x| (c.left_valency(x) as u64, c.right_valency(x) as u64));
        let nvl = n0.map_or(0, |x| c.left_valency(x) as u64);
        let rooted = c.root_child().is_some() as u64;

        s.push(100, &[rooted]);
        s.push(101, &[s0w]);
        s.push(102, &[s0p]);
        s.push(103, &[s0w, s0p]);
        s.push(104, &[n0w]);
        s.push(105, &[n0p]);
        s.push(106, &[n0w, n0p]);
        s.push(107, &[n1w]);
        s.push(108, &[n1p]);
        s.push(109, &[n1w, n1p]);
        s.push(110, &[n2w]);
        s.push(111, &[n2p]);
        s.push(112, &[n2w, n2p]);

        s.push(120, &[s0w, s0p, n0w, n0p]);
        s.push(121, &[s0w, s0p, n0w]);
        s.push(122, &[s0w, n0w, n0p]);
        s.push(123, &[s0w, s0p, n0p]);
        s.push(124, &[s0p, n0w, n0p]);
        s.push(125, &[s0w, n0w]);
        s.push(126, &[s0p, n0p]);
        s.push(127, &[n0p, n1p]);

        s.push(130, &[n0p, n1p, n2p]);
        s.push(131, &[s0p, n0p, n1p]);
        s.push(132, &[t(s0h), s0p, n0p]);
        s.push(133, &[s0p, t(s0l), n0p]);
        s.push(134, &[s0p, t(s0r), n0p]);
        s.push(135, &[s0p, n0p, t(n0l)]);
        s.push(136, &[t(s1), s0p, n0p]);

        s.push(140, &[s0w, d]);
        s.push(141, &[s0p, d]);
        s.push(142, &[n0w, d]);
        s.push(143, &[n0p, d]);
        s.push(144, &[s0w, n0w, d]);
        s.push(145, &[s0p, n0p, d]);

        s.push(150, &[s0w, vr0]);
        s.push(151, &[s0p, vr0]);
        s.push(152, &[s0w, vl0]);
        s.push(153, &[s0p, vl0]);
        s.push(154, &[n0w, nvl]);
        s.push(155, &[n0p, nvl]);

        s.push(160, &[w(s0h)]);
        s.push(161, &[t(s0h)]);
        s.push(162, &[w(s0l)]);
        s.push(163, &[t(s0l)]);
        s.push(164, &[w(s0r)]);
        s.push(165, &[t(s0r)]);
        s.push(166, &[w(n0l)]);
        s.push(167, &[t(n0l)]);
    }

    /// Weight index of context feature `ctx` conjoined with `action`.
    #[inline]
    pub fn action_index(&self, ctx: u32, action: Action) -> u32 {
        (mix(ctx as u64 ^ 0x6163_7469_6f6e_0000, action as u64 + 1) & self.mask) as u32
    }

    fn check_arc(n: usize, h: usize, m: usize) -> Result<()> {
        if h > n {
            return Err(Error::IndexOutOfRange { index: h, len: n });
        }
        if m == 0 || m > n || h == m {
            return Err(Error::IndexOutOfRange { index: m, len: n });
        }
        Ok(())
    }

    pub fn arc_features(&self, sentence: &Sentence, h: usize, m: usize) -> Result<FeatureVector> {
        Self::check_arc(sentence.len(), h, m)?;
        let mut out = Vec::new();
        self.arc_into(&Prepared::new(sentence), h, m, &mut out);
        Ok(FeatureVector::from_indices(out))
    }

    /// `sib` must lie strictly between `h` and `m`; `None` is the first-child sentinel.
    pub fn sibling_features(
        &self,
        sentence: &Sentence,
        h: usize,
        m: usize,
        sib: Option<usize>,
    ) -> Result<FeatureVector> {
        Self::check_arc(sentence.len(), h, m)?;
        if let Some(x) = sib {
            let between = (h < x && x < m) || (m < x && x < h);
            if !between {
                return Err(Error::SiblingSide {
                    head: h,
                    modifier: m,
                    sibling: x,
                });
            }
        }
        let mut out = Vec::new();
        self.sibling_into(&Prepared::new(sentence), h, m, sib, &mut out);
        Ok(FeatureVector::from_indices(out))
    }

    pub fn action_features(&self, config: &Configuration, sentence: &Sentence) -> FeatureVector {
        let mut out = Vec::new();
        self.context_into(&Prepared::new(sentence), config, &mut out);
        FeatureVector::from_indices(out)
    }

    /// Raw index multiset of every arc and adjacent-sibling factor of `tree`.
    pub fn tree_into(&self, p: &Prepared, tree: &DepTree, out: &mut Vec<u32>) {
        for (h, m) in tree.arcs() {
            self.arc_into(p, h, m, out);
        }
        for h in 0..=tree.len() {
            for right in [false, true] {
                let mut prev = None;
                for m in tree.children(h, right) {
                    self.sibling_into(p, h, m, prev, out);
                    prev = Some(m);
                }
            }
        }
    }

    pub fn tree_features(&self, sentence: &Sentence, tree: &DepTree) -> Result<FeatureVector> {
        if tree.len() != sentence.len() {
            return Err(Error::LengthMismatch {
                expected: sentence.len(),
                found: tree.len(),
            });
        }
        let mut out = Vec::new();
        self.tree_into(&Prepared::new(sentence), tree, &mut out);
        Ok(FeatureVector::from_indices(out))
    }
}
