//! Deterministic synthetic treebanks with PTB-style tags.
//!
//! [`trend_treebank`] samples clauses from a small head-outward grammar:
//! subject and object noun phrases, prepositional phrases that attach to
//! the site with the best lexical affinity for their preposition, adverbs,
//! relative clauses, clause coordination and punctuation. Words are drawn
//! from Zipf-distributed pseudo-word vocabularies, so lexical statistics
//! matter and more annotated sentences keep helping.
//!
//! [`separable_treebank`] gives each sentence shape its own tags and words,
//! so a linear model can fit it perfectly.

use pardep_core::corpus::{DepTree, PunctSet, Sentence};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

/// A word with its dependents in surface order.
struct Node {
    form: String,
    pos: &'static str,
    /// Identity of the word within the lexicon.
    key: usize,
    left: Vec<Node>,
    right: Vec<Node>,
}

impl Node {
    fn leaf(form: String, pos: &'static str) -> Self {
        Node {
            form,
            pos,
            key: 0,
            left: Vec::new(),
            right: Vec::new(),
        }
    }

    /// Appends the subtree's tokens, attaching this node to `head`.
    fn linearize(&self, head: usize, out: &mut Vec<(String, &'static str, usize)>) {
        // indices are 1-based; our own position is known once the left side is out
        let me = out.len() + 1 + self.left.iter().map(Node::size).sum::<usize>();
        for l in &self.left {
            l.linearize(me, out);
        }
        out.push((self.form.clone(), self.pos, head));
        for r in &self.right {
            r.linearize(me, out);
        }
    }

    fn size(&self) -> usize {
        1 + self.left.iter().map(Node::size).sum::<usize>() + self.right.iter().map(Node::size).sum::<usize>()
    }
}

struct Lexicon {
    words: Vec<(&'static str, Vec<String>)>,
}

const SYLLABLES: [&str; 24] = [
    "ba", "ko", "ri", "tu", "me", "sa", "lo", "vi", "ne", "da", "pu", "go", "fe", "zi", "ha", "mo", "ty", "ra", "ki",
    "su", "le", "po", "ga", "ni",
];

impl Lexicon {
    fn new() -> Self {
        let sizes: [(&'static str, usize); 14] = [
            ("NN", 960),
            ("NNS", 480),
            ("NNP", 80),
            ("VBD", 280),
            ("VBZ", 240),
            ("VB", 200),
            ("JJ", 110),
            ("RB", 36),
            ("IN", 14),
            ("CD", 20),
            ("MD", 5),
            ("PRP", 8),
            ("CC", 3),
            ("WDT", 2),
        ];
        let mut words = Vec::new();
        for (t, (tag, size)) in sizes.into_iter().enumerate() {
            let list = (0..size)
                .map(|i| {
                    // two or three syllables, made unique per tag by the index
                    let a = SYLLABLES[(i * 7 + t * 5) % SYLLABLES.len()];
                    let b = SYLLABLES[(i / SYLLABLES.len() + t * 3 + i) % SYLLABLES.len()];
                    let mut w = format!("{a}{b}{}", SYLLABLES[t]);
                    if i >= SYLLABLES.len() {
                        w.push_str(&i.to_string());
                    }
                    match tag {
                        "NNS" => w.push('s'),
                        "VBD" => w.push_str("ed"),
                        "VBZ" => w.push_str("es"),
                        "NNP" => w = capitalize(&w),
                        _ => {}
                    }
                    w
                })
                .collect();
            words.push((tag, list));
        }
        words.push(("DT", ["the", "a", "this", "that", "every", "some"].map(String::from).to_vec()));
        Lexicon { words }
    }

    fn list(&self, tag: &str) -> &[String] {
        &self.words.iter().find(|(t, _)| *t == tag).expect("known tag").1
    }

    /// Zipf-distributed word index for `tag`.
    fn pick(&self, rng: &mut ChaCha8Rng, tag: &'static str) -> (usize, Node) {
        let list = self.list(tag);
        let total: f64 = (1..=list.len()).map(|r| 1.0 / r as f64).sum();
        let mut x = rng.random::<f64>() * total;
        let mut idx = list.len() - 1;
        for r in 0..list.len() {
            x -= 1.0 / (r + 1) as f64;
            if x <= 0.0 {
                idx = r;
                break;
            }
        }
        let mut node = Node::leaf(list[idx].clone(), tag);
        node.key = self.words.iter().position(|(t, _)| *t == tag).expect("known tag") * 10_000 + idx;
        (idx, node)
    }
}

/// Affinity in `[0, 1)` of the word `key` for PP dependents headed by `prep`.
///
/// A fixed pseudo-random relation, so attachment is only learnable lexically.
fn affinity(key: usize, prep: usize) -> f64 {
    let h = (key as u64).wrapping_mul(0x9E37_79B9_7F4A_7C15) ^ (prep as u64).wrapping_mul(0xC2B2_AE3D_27D4_EB4F);
    let h = (h ^ (h >> 29)).wrapping_mul(0x1656_67B1_9E37_79F9);
    (h >> 11) as f64 / (1u64 << 53) as f64
}

fn capitalize(w: &str) -> String {
    let mut c = w.chars();
    match c.next() {
        Some(f) => f.to_uppercase().chain(c).collect(),
        None => String::new(),
    }
}

struct Grammar<'a> {
    lex: &'a Lexicon,
    rng: ChaCha8Rng,
}

impl Grammar<'_> {
    fn chance(&mut self, p: f64) -> bool {
        self.rng.random_bool(p)
    }

    /// Noun phrase headed by a noun (or a pronoun when `pronoun_ok`).
    fn noun_phrase(&mut self, pronoun_ok: bool, depth: usize) -> (usize, Node) {
        if pronoun_ok && self.chance(0.2) {
            return self.lex.pick(&mut self.rng, "PRP");
        }
        let tag = match self.rng.random_range(0..10) {
            0..=5 => "NN",
            6..=7 => "NNS",
            _ => "NNP",
        };
        let (id, mut head) = self.lex.pick(&mut self.rng, tag);
        if tag != "NNP" {
            if self.chance(0.8) {
                head.left.push(self.lex.pick(&mut self.rng, "DT").1);
            }
            if self.chance(0.1) {
                head.left.push(self.lex.pick(&mut self.rng, "CD").1);
            }
            while head.left.len() < 4 && self.chance(0.35) {
                head.left.push(self.lex.pick(&mut self.rng, "JJ").1);
            }
        }
        if depth < 2 && self.chance(0.12) {
            // relative clause: that/which + verb + object
            let (_, mut verb) = self.lex.pick(&mut self.rng, "VBZ");
            verb.left.push(self.lex.pick(&mut self.rng, "WDT").1);
            verb.right.push(self.noun_phrase(false, depth + 1).1);
            head.right.push(verb);
        }
        (id, head)
    }

    fn prep_phrase(&mut self, depth: usize) -> (usize, Node) {
        let (id, mut prep) = self.lex.pick(&mut self.rng, "IN");
        prep.right.push(self.noun_phrase(false, depth + 1).1);
        (id, prep)
    }

    fn clause(&mut self, depth: usize) -> Node {
        let tag = if self.chance(0.5) { "VBD" } else { "VBZ" };
        let (verb_id, mut verb) = self.lex.pick(&mut self.rng, tag);
        if tag == "VBZ" && self.chance(0.15) {
            verb = self.lex.pick(&mut self.rng, "VB").1;
            verb.left.push(self.lex.pick(&mut self.rng, "MD").1);
        }
        verb.left.insert(0, self.noun_phrase(true, depth).1);
        if self.chance(0.15) {
            let adv = self.lex.pick(&mut self.rng, "RB").1;
            verb.left.push(adv);
        }
        // transitivity is a property of the verb
        let mut object = None;
        if verb_id % 4 != 0 && self.chance(0.85) {
            object = Some(self.noun_phrase(false, depth).1);
        }
        let count = match self.rng.random_range(0..20) {
            0..=3 => 0,
            4..=10 => 1,
            11..=16 => 2,
            _ => 3,
        };
        // Each PP attaches to the word on the right frontier (verb, object,
        // nouns of earlier PPs) with the best lexical affinity for its
        // preposition, with a mild preference for nearby sites. Attaching
        // higher closes the sites below, which keeps the tree projective.
        const VERB: usize = usize::MAX;
        const OBJECT: usize = usize::MAX - 1;
        let mut frontier = vec![VERB];
        if object.is_some() {
            frontier.push(OBJECT);
        }
        let mut pps: Vec<Option<Node>> = Vec::new();
        let mut targets = Vec::new();
        for i in 0..count {
            let (prep_id, pp) = self.prep_phrase(depth);
            let key = |site: usize| match site {
                VERB => verb.key,
                OBJECT => object.as_ref().map_or(0, |o| o.key),
                j => pps[j].as_ref().map_or(0, |p: &Node| p.right[0].key),
            };
            let mut at = 0;
            let mut best = f64::NEG_INFINITY;
            for f in 0..frontier.len() {
                let recency = 0.4 * (f + 1) as f64 / frontier.len() as f64;
                let score = 3.0 * affinity(key(frontier[f]), prep_id) + recency + self.rng.random_range(-0.3..0.3);
                if score > best {
                    best = score;
                    at = f;
                }
            }
            frontier.truncate(at + 1);
            targets.push(frontier[at]);
            frontier.push(i);
            pps.push(Some(pp));
        }
        let mut obj_children = Vec::new();
        let mut verb_children = Vec::new();
        for i in 0..count {
            match targets[i] {
                VERB => verb_children.push(i),
                OBJECT => obj_children.push(i),
                _ => {}
            }
        }
        if let Some(obj) = object.as_mut() {
            for i in obj_children {
                obj.right.push(assemble(i, &mut pps, &targets));
            }
        }
        let verb_pps: Vec<Node> = verb_children.into_iter().map(|i| assemble(i, &mut pps, &targets)).collect();
        if let Some(obj) = object {
            verb.right.push(obj);
        }
        verb.right.extend(verb_pps);
        if self.chance(0.12) {
            verb.right.push(self.lex.pick(&mut self.rng, "RB").1);
        }
        if depth == 0 && self.chance(0.15) {
            verb.right.push(Node::leaf(",".into(), ","));
            verb.right.push(self.lex.pick(&mut self.rng, "CC").1);
            verb.right.push(self.clause(depth + 1));
        }
        verb
    }
}

/// PP `i` with the PPs attached to its noun, in surface order.
fn assemble(i: usize, pps: &mut [Option<Node>], targets: &[usize]) -> Node {
    let mut node = pps[i].take().expect("each PP is placed once");
    for j in i + 1..targets.len() {
        if targets[j] == i {
            let child = assemble(j, pps, targets);
            node.right[0].right.push(child);
        }
    }
    node
}

/// `count` sentences from the clause grammar, fully determined by `seed`.
pub fn trend_treebank(count: usize, seed: u64) -> Vec<(Sentence, DepTree)> {
    let lex = Lexicon::new();
    let mut g = Grammar {
        lex: &lex,
        rng: ChaCha8Rng::seed_from_u64(seed),
    };
    let punct = PunctSet::ptb();
    (0..count)
        .map(|_| {
            let mut root = g.clause(0);
            root.right.push(Node::leaf(".".into(), "."));
            build(&root, &punct)
        })
        .collect()
}

fn build(root: &Node, punct: &PunctSet) -> (Sentence, DepTree) {
    let mut toks = Vec::new();
    root.linearize(0, &mut toks);
    let sentence = Sentence::from_pairs(toks.iter().map(|(f, p, _)| (f.as_str(), *p)), punct);
    let tree = DepTree::new(toks.iter().map(|t| t.2).collect()).expect("grammar yields projective trees");
    (sentence, tree)
}

/// Sentence shapes with disjoint tags and vocabularies; each shape fixes its tree.
pub fn separable_treebank(per_shape: usize) -> Vec<(Sentence, DepTree)> {
    let shapes: [(&[&str], &[usize]); 4] = [
        (&["DT", "NN", "VBD", "."], &[2, 3, 0, 3]),
        (&["PRP", "VBZ", "JJ", "NNS"], &[2, 0, 4, 2]),
        (&["NNP", "MD", "VB", "IN", "CD"], &[3, 3, 0, 3, 4]),
        (&["WDT", "RB", "VBN", "CC", "UH", "FW"], &[3, 3, 0, 5, 3, 5]),
    ];
    let punct = PunctSet::ptb();
    let mut out = Vec::new();
    for i in 0..per_shape {
        for (s, (tags, heads)) in shapes.iter().enumerate() {
            let words: Vec<String> = tags
                .iter()
                .map(|t| if *t == "." { ".".to_owned() } else { format!("{}{}{}", t.to_lowercase(), s, i) })
                .collect();
            let sentence = Sentence::from_pairs(words.iter().map(String::as_str).zip(tags.iter().copied()), &punct);
            out.push((sentence, DepTree::new(heads.to_vec()).expect("valid shape")));
        }
    }
    out
}
