//! Boolean first-order check: does some projective single-root tree use only allowed arcs?

use alloc::vec;

/// `allowed(h, m)` with `h` in `0..=n` (0 is the root) and `m` in `1..=n`.
pub(crate) fn satisfiable(n: usize, allowed: impl Fn(usize, usize) -> bool) -> bool {
    if n == 0 {
        return false;
    }
    let w = n + 1;
    let at = |s: usize, t: usize| s * w + t;
    // complete spans headed left (cr) / right (cl), incomplete spans (ir: s -> t, il: t -> s)
    let mut cr = vec![false; w * w];
    let mut cl = vec![false; w * w];
    let mut ir = vec![false; w * w];
    let mut il = vec![false; w * w];
    for s in 1..=n {
        cr[at(s, s)] = true;
        cl[at(s, s)] = true;
    }
    for len in 1..n {
        for s in 1..=n - len {
            let t = s + len;
            let right = allowed(s, t);
            let left = allowed(t, s);
            if right || left {
                let joinable = (s..t).any(|r| cr[at(s, r)] && cl[at(r + 1, t)]);
                ir[at(s, t)] = right && joinable;
                il[at(s, t)] = left && joinable;
            }
            cr[at(s, t)] = (s + 1..=t).any(|r| ir[at(s, r)] && cr[at(r, t)]);
            cl[at(s, t)] = (s..t).any(|r| cl[at(s, r)] && il[at(r, t)]);
        }
    }
    (1..=n).any(|r| allowed(0, r) && cl[at(1, r)] && cr[at(r, n)])
}
