//! Independent oracles shared by the integration and acceptance suites.
//!
//! Everything here recomputes expected values through a different route
//! than the library: plain Levenshtein, breadth-first search over all legal
//! shift sequences, bag-of-words counting, quadrature for the normal CDF.
//! None of it calls into the scoring paths it checks.

#![allow(dead_code)]

use std::collections::HashMap;

/// Unit-cost Levenshtein distance over small symbol sequences.
pub fn lev(a: &[u8], b: &[u8]) -> u64 {
    let n = b.len();
    let mut prev: Vec<u64> = (0..=n as u64).collect();
    let mut cur = vec![0u64; n + 1];
    for (i, &x) in a.iter().enumerate() {
        cur[0] = i as u64 + 1;
        for (j, &y) in b.iter().enumerate() {
            cur[j + 1] = (prev[j] + u64::from(x != y))
                .min(prev[j + 1] + 1)
                .min(cur[j] + 1);
        }
        std::mem::swap(&mut prev, &mut cur);
    }
    prev[n]
}

/// Exact minimum of `shifts * shift_cost + levenshtein(leaf)` over every
/// sequence of legal block shifts, by breadth-first search over reachable
/// token orders. A shift may move any contiguous hypothesis block that
/// appears contiguously in the reference, to any position. States are
/// pruned once one more shift could not beat the best total seen.
pub fn oracle_ter(hyp: &[u8], ref_: &[u8], shift_cost: u64) -> u64 {
    let mut best = lev(hyp, ref_);
    if hyp.is_empty() || best == 0 {
        return best;
    }
    let mut visited: HashMap<Vec<u8>, u64> = HashMap::new();
    visited.insert(hyp.to_vec(), 0);
    let mut frontier = vec![hyp.to_vec()];
    let mut depth = 0u64;
    while !frontier.is_empty() {
        depth += 1;
        if shift_cost > 0 && depth * shift_cost >= best {
            break;
        }
        let mut next = Vec::new();
        for state in &frontier {
            let m = state.len();
            for i in 0..m {
                for len in 1..=(m - i) {
                    let block = &state[i..i + len];
                    if !appears_contiguously(block, ref_) {
                        break;
                    }
                    for p in 0..=(m - len) {
                        if p == i {
                            continue;
                        }
                        let mut t: Vec<u8> = Vec::with_capacity(m);
                        t.extend_from_slice(&state[..i]);
                        t.extend_from_slice(&state[i + len..]);
                        for (k, &b) in block.iter().enumerate() {
                            t.insert(p + k, b);
                        }
                        if visited.contains_key(&t) {
                            continue;
                        }
                        let total = depth * shift_cost + lev(&t, ref_);
                        best = best.min(total);
                        visited.insert(t.clone(), depth);
                        next.push(t);
                    }
                }
            }
        }
        // free shifts explore the whole reachable space, so stop once no
        // new orders appear; costed shifts are cut off by the bound above
        if shift_cost == 0 && next.is_empty() {
            break;
        }
        frontier = next;
    }
    best
}

fn appears_contiguously(block: &[u8], ref_: &[u8]) -> bool {
    if block.len() > ref_.len() {
        return false;
    }
    ref_.windows(block.len()).any(|w| w == block)
}

/// Bag-of-words edit count: `max(|hyp|, |ref|) − |multiset intersection|`.
pub fn per_edits(hyp: &[u8], ref_: &[u8]) -> u64 {
    let mut counts: HashMap<u8, i64> = HashMap::new();
    for &h in hyp {
        *counts.entry(h).or_insert(0) += 1;
    }
    let mut common = 0u64;
    for &r in ref_ {
        let c = counts.entry(r).or_insert(0);
        if *c > 0 {
            *c -= 1;
            common += 1;
        }
    }
    hyp.len().max(ref_.len()) as u64 - common
}

/// Standard normal upper-tail probability by Simpson quadrature on the
/// density, integrated away from the tail point to control cancellation.
pub fn normal_upper_tail(z: f64) -> f64 {
    if z < 0.0 {
        return 1.0 - normal_upper_tail(-z);
    }
    let pdf = |x: f64| (-0.5 * x * x).exp() / (2.0 * std::f64::consts::PI).sqrt();
    let hi = z + 40.0;
    let steps = 400_000usize;
    let h = (hi - z) / steps as f64;
    let mut acc = pdf(z) + pdf(hi);
    for k in 1..steps {
        let x = z + k as f64 * h;
        acc += pdf(x) * if k % 2 == 1 { 4.0 } else { 2.0 };
    }
    acc * h / 3.0
}
