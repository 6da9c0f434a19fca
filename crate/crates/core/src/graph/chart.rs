//! Second-order projective chart as an explicit hypergraph.
//!
//! Items over tokens `1..=n` (the root is handled by a final set of edges):
//!
//! * `CR[s][t]` / `CL[s][t]`: complete span headed at `s` / `t`,
//! * `IR[s][t]` / `IL[s][t]`: incomplete span for the arc `s -> t` / `t -> s`,
//! * `SB[s][t]`: `s` and `t` are adjacent siblings of a head outside the span.
//!
//! Each tree has exactly one derivation, so the same edge list serves Viterbi,
//! inside and outside passes. Edges are stored grouped by head item, heads in
//! topological order.

use alloc::vec;
use alloc::vec::Vec;

use crate::math::{is_dead, log_add, NEG_SENTINEL};

const CR: usize = 0;
const CL: usize = 1;
const IR: usize = 2;
const IL: usize = 3;
const SB: usize = 4;

pub(crate) const NO_TAIL: u32 = u32::MAX;
pub(crate) const NO_FACTOR: u32 = u32::MAX;

#[derive(Debug, Clone, Copy)]
pub(crate) struct Edge {
    pub tails: [u32; 2],
    /// Index into the `(h, m, s)` factor table, or `NO_FACTOR`.
    pub factor: u32,
}

#[derive(Debug, Clone)]
pub(crate) struct Hypergraph {
    n: usize,
    pub edges: Vec<Edge>,
    /// `(head item, first edge, end edge)` in topological order.
    pub groups: Vec<(u32, u32, u32)>,
    pub root: u32,
    pub items: usize,
}

/// Index of the `(h, m, s)` factor; the first-child sentinel is stored as `s = h`.
#[inline]
pub(crate) fn factor_index(n: usize, h: usize, m: usize, sib: Option<usize>) -> usize {
    let w = n + 1;
    (h * w + m) * w + sib.unwrap_or(h)
}

#[inline]
pub(crate) fn decode_factor(n: usize, f: usize) -> (usize, usize, Option<usize>) {
    let w = n + 1;
    let s = f % w;
    let m = (f / w) % w;
    let h = f / (w * w);
    (h, m, if s == h { None } else { Some(s) })
}

impl Hypergraph {
    pub fn new(n: usize) -> Self {
        assert!(n >= 1);
        let w = n + 1;
        let id = |kind: usize, s: usize, t: usize| (kind * w * w + s * w + t) as u32;
        let f = |h: usize, m: usize, s: Option<usize>| factor_index(n, h, m, s) as u32;
        let mut edges = Vec::new();
        let mut groups = Vec::new();

        let mut group = |edges: &mut Vec<Edge>, head: u32, new: &mut dyn FnMut(&mut Vec<Edge>)| {
            let start = edges.len() as u32;
            new(edges);
            groups.push((head, start, edges.len() as u32));
        };

        for len in 1..n {
            for s in 1..=n - len {
                let t = s + len;
                group(&mut edges, id(SB, s, t), &mut |e| {
                    for u in s..t {
                        e.push(Edge {
                            tails: [id(CR, s, u), id(CL, u + 1, t)],
                            factor: NO_FACTOR,
                        });
                    }
                });
                group(&mut edges, id(IR, s, t), &mut |e| {
                    e.push(Edge {
                        tails: [id(CL, s + 1, t), NO_TAIL],
                        factor: f(s, t, None),
                    });
                    for r in s + 1..t {
                        e.push(Edge {
                            tails: [id(IR, s, r), id(SB, r, t)],
                            factor: f(s, t, Some(r)),
                        });
                    }
                });
                group(&mut edges, id(IL, s, t), &mut |e| {
                    e.push(Edge {
                        tails: [id(CR, s, t - 1), NO_TAIL],
                        factor: f(t, s, None),
                    });
                    for r in s + 1..t {
                        e.push(Edge {
                            tails: [id(SB, s, r), id(IL, r, t)],
                            factor: f(t, s, Some(r)),
                        });
                    }
                });
                group(&mut edges, id(CR, s, t), &mut |e| {
                    for r in s + 1..=t {
                        e.push(Edge {
                            tails: [id(IR, s, r), id(CR, r, t)],
                            factor: NO_FACTOR,
                        });
                    }
                });
                group(&mut edges, id(CL, s, t), &mut |e| {
                    for r in s..t {
                        e.push(Edge {
                            tails: [id(CL, s, r), id(IL, r, t)],
                            factor: NO_FACTOR,
                        });
                    }
                });
            }
        }
        let root = (5 * w * w) as u32;
        group(&mut edges, root, &mut |e| {
            for r in 1..=n {
                e.push(Edge {
                    tails: [id(CL, 1, r), id(CR, r, n)],
                    factor: f(0, r, None),
                });
            }
        });

        Hypergraph {
            n,
            edges,
            groups,
            root,
            items: 5 * w * w + 1,
        }
    }

    /// Inside values with every complete single-token span at log-one.
    fn base(&self) -> Vec<f64> {
        let w = self.n + 1;
        let mut v = vec![NEG_SENTINEL; self.items];
        for s in 1..=self.n {
            v[CR * w * w + s * w + s] = 0.0;
            v[CL * w * w + s * w + s] = 0.0;
        }
        v
    }

    #[inline]
    fn edge_value(inside: &[f64], e: &Edge, weight: f64) -> f64 {
        if is_dead(weight) {
            return NEG_SENTINEL;
        }
        let mut v = weight;
        for &t in &e.tails {
            if t != NO_TAIL {
                let x = inside[t as usize];
                if is_dead(x) {
                    return NEG_SENTINEL;
                }
                v += x;
            }
        }
        v
    }

    /// Viterbi pass. Returns inside maxima and the chosen edge per item;
    /// ties keep the earliest edge.
    pub fn viterbi(&self, weights: &[f64]) -> (Vec<f64>, Vec<u32>) {
        let mut inside = self.base();
        let mut back = vec![u32::MAX; self.items];
        for &(head, start, end) in &self.groups {
            let mut best = NEG_SENTINEL;
            let mut arg = u32::MAX;
            for ei in start..end {
                let v = Self::edge_value(&inside, &self.edges[ei as usize], weights[ei as usize]);
                if !is_dead(v) && (arg == u32::MAX || v > best) {
                    best = v;
                    arg = ei;
                }
            }
            inside[head as usize] = best;
            back[head as usize] = arg;
        }
        (inside, back)
    }

    /// Factors used by the best derivation below `item`.
    pub fn backtrace(&self, back: &[u32], item: u32, factors: &mut Vec<u32>) {
        let mut stack = vec![item];
        while let Some(it) = stack.pop() {
            let ei = back[it as usize];
            if ei == u32::MAX {
                continue;
            }
            let e = &self.edges[ei as usize];
            if e.factor != NO_FACTOR {
                factors.push(e.factor);
            }
            for &t in &e.tails {
                if t != NO_TAIL {
                    stack.push(t);
                }
            }
        }
    }

    /// Log-space inside pass.
    pub fn inside(&self, weights: &[f64]) -> Vec<f64> {
        let mut inside = self.base();
        for &(head, start, end) in &self.groups {
            let mut acc = NEG_SENTINEL;
            for ei in start..end {
                let v = Self::edge_value(&inside, &self.edges[ei as usize], weights[ei as usize]);
                acc = log_add(acc, v);
            }
            inside[head as usize] = acc;
        }
        inside
    }

    /// Log-space outside pass. Calls `on_edge(edge, log_value)` for every live
    /// edge, where `log_value` is the log of the total weight of derivations
    /// of the root that use the edge.
    pub fn outside(&self, weights: &[f64], inside: &[f64], mut on_edge: impl FnMut(usize, f64)) -> Vec<f64> {
        let mut outside = vec![NEG_SENTINEL; self.items];
        outside[self.root as usize] = 0.0;
        for &(head, start, end) in self.groups.iter().rev() {
            let out_head = outside[head as usize];
            if is_dead(out_head) {
                continue;
            }
            for ei in start..end {
                let e = &self.edges[ei as usize];
                let v = Self::edge_value(inside, e, weights[ei as usize]);
                if is_dead(v) {
                    continue;
                }
                on_edge(ei as usize, out_head + v);
                for (k, &t) in e.tails.iter().enumerate() {
                    if t == NO_TAIL {
                        continue;
                    }
                    let other = e.tails[1 - k];
                    let mut contrib = out_head + weights[ei as usize];
                    if other != NO_TAIL {
                        contrib += inside[other as usize];
                    }
                    outside[t as usize] = log_add(outside[t as usize], contrib);
                }
            }
        }
        outside
    }
}
