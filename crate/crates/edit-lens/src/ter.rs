//! Translation edit rate between a hypothesis and one reference.
//!
//! The aligner finds a low-cost sequence of block shifts plus a final
//! Levenshtein alignment (unit-cost substitutions, insertions and
//! deletions; exact matches free). A shift moves a contiguous hypothesis
//! block that exactly matches a contiguous reference span and counts as
//! one edit.
//!
//! Two search strategies back the same interface:
//!
//! * `shift_cost = 1` (standard): greedy loop — recompute the DP, try every
//!   candidate shift, apply the one with the greatest strict reduction in
//!   `DP cost + shift_cost`, repeat until no shift helps.
//! * `shift_cost = 0` (free-reorder variant): shifts cost nothing, so the
//!   optimum is the bag-of-words bound `max(|hyp|,|ref|) − |multiset ∩|`.
//!   Greedy gets stuck in local minima here (e.g. full reversals), so this
//!   mode places paired tokens directly and emits the realizing moves.
//!
//! Both produce a full [`EditTrace`]: replaying the recorded shifts and then
//! the non-shift ops turns the normalized hypothesis into the reference.

use std::collections::HashMap;

use serde::Serialize;

use crate::config::{CompareOn, TerConfig};
use crate::corpus::{is_punct_str, Segment};
use crate::error::{Error, Result};

/// One edit operation. Indices refer to the final (post-shift) hypothesis
/// and the normalized reference, except for `Shift` whose `hyp_start` is in
/// the hypothesis as it stood when the shift was applied.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum EditOp {
    Match {
        hyp: usize,
        ref_pos: usize,
    },
    Substitute {
        hyp: usize,
        ref_pos: usize,
    },
    Insert {
        ref_pos: usize,
    },
    Delete {
        hyp: usize,
    },
    Shift {
        hyp_start: usize,
        len: usize,
        ref_start: usize,
        distance: isize,
    },
}

/// A shift with enough context to replay it: `hyp_start` indexes the
/// hypothesis `before` the move; `distance` is the signed offset of the
/// insertion point once the block is removed.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct ShiftRecord {
    pub hyp_start: usize,
    pub len: usize,
    /// Reference span the block landed on (start, len == block len).
    pub ref_start: usize,
    pub distance: isize,
    pub block: Vec<String>,
    pub before: Vec<String>,
    pub after: Vec<String>,
}

impl ShiftRecord {
    pub fn op(&self) -> EditOp {
        EditOp::Shift {
            hyp_start: self.hyp_start,
            len: self.len,
            ref_start: self.ref_start,
            distance: self.distance,
        }
    }

    pub fn ref_span(&self) -> (usize, usize) {
        (self.ref_start, self.len)
    }
}

/// Full record of one hypothesis/reference alignment.
#[derive(Debug, Clone, Serialize)]
pub struct EditTrace {
    /// Shifts in application order, then the final non-shift ops in
    /// left-to-right order.
    pub ops: Vec<EditOp>,
    pub shifts: Vec<ShiftRecord>,
    /// Final-hypothesis index → reference index for matches and
    /// substitutions.
    pub final_alignment: Vec<(usize, usize)>,
    /// Normalized token counts.
    pub hyp_len: usize,
    pub ref_len: usize,
}

impl EditTrace {
    /// Substitutions + insertions + deletions + one per shift block.
    pub fn edit_count(&self) -> u64 {
        self.ops
            .iter()
            .filter(|op| !matches!(op, EditOp::Match { .. }))
            .count() as u64
    }

    pub fn non_shift_edits(&self) -> u64 {
        self.ops
            .iter()
            .filter(|op| {
                matches!(
                    op,
                    EditOp::Substitute { .. } | EditOp::Insert { .. } | EditOp::Delete { .. }
                )
            })
            .count() as u64
    }

    pub fn shift_count(&self) -> u64 {
        self.shifts.len() as u64
    }
}

/// Result of [`ter_align`].
#[derive(Debug, Clone)]
pub struct TerAlignment {
    pub trace: EditTrace,
    pub edits: u64,
    pub ref_len: u64,
}

impl TerAlignment {
    pub fn score(&self) -> f64 {
        self.edits as f64 / self.ref_len as f64
    }
}

/// Shifted blocks with the reference span each one landed on.
pub fn shift_blocks(trace: &EditTrace) -> Vec<(Vec<String>, (usize, usize))> {
    trace
        .shifts
        .iter()
        .map(|s| (s.block.clone(), s.ref_span()))
        .collect()
}

/// `edits / ref_len`, not clipped at 1.0.
pub fn ter_score(edits: u64, ref_len: u64) -> Result<f64> {
    if ref_len == 0 {
        return Err(Error::Precondition(
            "ter_score: reference length is 0".into(),
        ));
    }
    Ok(edits as f64 / ref_len as f64)
}

/// Project a segment onto the token sequence TER compares: optional lemma
/// projection, optional lowercasing, optional punctuation removal.
pub fn normalize_tokens(segment: &Segment, cfg: &TerConfig) -> Vec<String> {
    segment
        .tokens
        .iter()
        .filter(|t| !(cfg.strip_punct && is_punct_str(&t.surface, &cfg.extra_punct_chars)))
        .map(|t| {
            let base = match cfg.compare_on {
                CompareOn::Surface => t.surface.as_str(),
                CompareOn::Lemma => t.lemma_or_surface(),
            };
            if cfg.lowercase {
                base.to_lowercase()
            } else {
                base.to_string()
            }
        })
        .collect()
}

/// Align `hyp` to `ref_` under `cfg`. The reference must be non-empty after
/// normalization; an empty hypothesis is legal (all insertions).
pub fn ter_align(hyp: &Segment, ref_: &Segment, cfg: &TerConfig) -> Result<TerAlignment> {
    cfg.validate()?;
    let hyp_norm = normalize_tokens(hyp, cfg);
    let ref_norm = normalize_tokens(ref_, cfg);
    ter_align_tokens(&hyp_norm, &ref_norm, cfg)
}

/// Same as [`ter_align`] on already-normalized token sequences.
pub fn ter_align_tokens(hyp: &[String], ref_: &[String], cfg: &TerConfig) -> Result<TerAlignment> {
    if ref_.is_empty() {
        return Err(Error::Precondition("empty reference".into()));
    }
    let mut interner = Interner::default();
    let hyp_ids: Vec<u32> = hyp.iter().map(|t| interner.intern(t)).collect();
    let ref_ids: Vec<u32> = ref_.iter().map(|t| interner.intern(t)).collect();

    let (final_ids, raw_shifts) = if cfg.shift_cost == 0 {
        free_reorder(&hyp_ids, &ref_ids, cfg)
    } else {
        greedy_shifts(&hyp_ids, &ref_ids, cfg)
    };

    let (dp_cost, final_ops) = lev_trace(&final_ids, &ref_ids);
    let final_alignment: Vec<(usize, usize)> = final_ops
        .iter()
        .filter_map(|op| match op {
            EditOp::Match { hyp, ref_pos } | EditOp::Substitute { hyp, ref_pos } => {
                Some((*hyp, *ref_pos))
            }
            _ => None,
        })
        .collect();

    let shifts: Vec<ShiftRecord> = raw_shifts
        .iter()
        .map(|s| ShiftRecord {
            hyp_start: s.start,
            len: s.len,
            ref_start: s.ref_start,
            distance: s.distance,
            block: s.before[s.start..s.start + s.len]
                .iter()
                .map(|&id| interner.name(id).to_string())
                .collect(),
            before: s
                .before
                .iter()
                .map(|&id| interner.name(id).to_string())
                .collect(),
            after: s
                .after
                .iter()
                .map(|&id| interner.name(id).to_string())
                .collect(),
        })
        .collect();

    let mut ops: Vec<EditOp> = shifts.iter().map(|s| s.op()).collect();
    ops.extend(final_ops);

    let edits = dp_cost + cfg.shift_cost as u64 * shifts.len() as u64;
    Ok(TerAlignment {
        trace: EditTrace {
            ops,
            shifts,
            final_alignment,
            hyp_len: hyp_ids.len(),
            ref_len: ref_ids.len(),
        },
        edits,
        ref_len: ref_ids.len() as u64,
    })
}

#[derive(Default)]
struct Interner {
    map: HashMap<String, u32>,
    names: Vec<String>,
}

impl Interner {
    fn intern(&mut self, s: &str) -> u32 {
        if let Some(&id) = self.map.get(s) {
            return id;
        }
        let id = self.names.len() as u32;
        self.map.insert(s.to_string(), id);
        self.names.push(s.to_string());
        id
    }

    fn name(&self, id: u32) -> &str {
        &self.names[id as usize]
    }
}

struct RawShift {
    start: usize,
    len: usize,
    ref_start: usize,
    distance: isize,
    before: Vec<u32>,
    after: Vec<u32>,
}

/// Two-row Levenshtein cost.
fn lev_cost(hyp: &[u32], ref_: &[u32]) -> u64 {
    let n = ref_.len();
    let mut prev: Vec<u64> = (0..=n as u64).collect();
    let mut cur = vec![0u64; n + 1];
    for (i, &h) in hyp.iter().enumerate() {
        cur[0] = i as u64 + 1;
        for (j, &r) in ref_.iter().enumerate() {
            let sub = prev[j] + u64::from(h != r);
            let del = prev[j + 1] + 1;
            let ins = cur[j] + 1;
            cur[j + 1] = sub.min(del).min(ins);
        }
        std::mem::swap(&mut prev, &mut cur);
    }
    prev[n]
}

/// Full Levenshtein with deterministic traceback. Tie preference at each
/// cell: match, substitution, deletion, insertion.
fn lev_trace(hyp: &[u32], ref_: &[u32]) -> (u64, Vec<EditOp>) {
    let m = hyp.len();
    let n = ref_.len();
    let mut dp = vec![0u64; (m + 1) * (n + 1)];
    let idx = |i: usize, j: usize| i * (n + 1) + j;
    for i in 0..=m {
        dp[idx(i, 0)] = i as u64;
    }
    for j in 0..=n {
        dp[idx(0, j)] = j as u64;
    }
    for i in 1..=m {
        for j in 1..=n {
            let sub = dp[idx(i - 1, j - 1)] + u64::from(hyp[i - 1] != ref_[j - 1]);
            let del = dp[idx(i - 1, j)] + 1;
            let ins = dp[idx(i, j - 1)] + 1;
            dp[idx(i, j)] = sub.min(del).min(ins);
        }
    }
    let cost = dp[idx(m, n)];

    let mut ops = Vec::with_capacity(m.max(n));
    let (mut i, mut j) = (m, n);
    while i > 0 || j > 0 {
        let here = dp[idx(i, j)];
        if i > 0 && j > 0 && hyp[i - 1] == ref_[j - 1] && dp[idx(i - 1, j - 1)] == here {
            ops.push(EditOp::Match {
                hyp: i - 1,
                ref_pos: j - 1,
            });
            i -= 1;
            j -= 1;
        } else if i > 0 && j > 0 && dp[idx(i - 1, j - 1)] + 1 == here {
            ops.push(EditOp::Substitute {
                hyp: i - 1,
                ref_pos: j - 1,
            });
            i -= 1;
            j -= 1;
        } else if i > 0 && dp[idx(i - 1, j)] + 1 == here {
            ops.push(EditOp::Delete { hyp: i - 1 });
            i -= 1;
        } else {
            ops.push(EditOp::Insert { ref_pos: j - 1 });
            j -= 1;
        }
    }
    ops.reverse();
    (cost, ops)
}

/// Hypothesis index → reference index for exact-match alignments of the
/// current DP traceback.
fn match_alignment(hyp: &[u32], ref_: &[u32]) -> (u64, Vec<Option<usize>>) {
    let (cost, ops) = lev_trace(hyp, ref_);
    let mut matches = vec![None; hyp.len()];
    for op in &ops {
        if let EditOp::Match { hyp: h, ref_pos: r } = op {
            matches[*h] = Some(*r);
        }
    }
    (cost, matches)
}

fn shift_seq(seq: &[u32], start: usize, len: usize, insert_at: usize, out: &mut Vec<u32>) {
    out.clear();
    out.extend_from_slice(&seq[..start]);
    out.extend_from_slice(&seq[start + len..]);
    let block = &seq[start..start + len];
    for (k, &b) in block.iter().enumerate() {
        out.insert(insert_at + k, b);
    }
}

/// Greedy shift search for unit shift cost.
fn greedy_shifts(hyp: &[u32], ref_: &[u32], cfg: &TerConfig) -> (Vec<u32>, Vec<RawShift>) {
    let mut cur = hyp.to_vec();
    let mut shifts = Vec::new();
    if cur.is_empty() {
        return (cur, shifts);
    }

    // ref occurrence index, fixed across iterations
    let mut occ: HashMap<u32, Vec<usize>> = HashMap::new();
    for (j, &r) in ref_.iter().enumerate() {
        occ.entry(r).or_default().push(j);
    }

    let max_dist = cfg.max_shift_distance as isize;
    let mut scratch = Vec::with_capacity(cur.len());

    loop {
        let (cost, hyp_match) = match_alignment(&cur, ref_);
        if cost == 0 {
            break; // a shift could only add cost
        }
        let m = cur.len();

        // best = (reduction, len, |dist|, i, p); maximize reduction, then
        // longer block, smaller distance, leftmost start, leftmost target.
        let mut best: Option<(i64, usize, usize, usize, usize)> = None;
        for i in 0..m {
            let Some(js0) = occ.get(&cur[i]) else {
                continue;
            };
            let mut js = js0.clone();
            let max_len = cfg.max_shift_block.min(m - i);
            for len in 1..=max_len {
                if len > 1 {
                    js.retain(|&j| j + len <= ref_.len() && ref_[j + len - 1] == cur[i + len - 1]);
                }
                if js.is_empty() {
                    break;
                }
                // a block already matched in place at every candidate span
                // has no reason to move
                let movable = js
                    .iter()
                    .any(|&j| (0..len).any(|t| hyp_match[i + t] != Some(j + t)));
                if !movable {
                    continue;
                }
                for p in 0..=(m - len) {
                    if p == i {
                        continue;
                    }
                    let dist = p as isize - i as isize;
                    if dist.abs() > max_dist {
                        continue;
                    }
                    shift_seq(&cur, i, len, p, &mut scratch);
                    let new_cost = lev_cost(&scratch, ref_);
                    let reduction = cost as i64 - (new_cost as i64 + cfg.shift_cost as i64);
                    if reduction <= 0 {
                        continue;
                    }
                    let key = (reduction, len, dist.unsigned_abs(), i, p);
                    let better = match best {
                        None => true,
                        Some((br, bl, bd, bi, bp)) => {
                            (key.0, key.1) > (br, bl)
                                || ((key.0, key.1) == (br, bl)
                                    && (key.2, key.3, key.4) < (bd, bi, bp))
                        }
                    };
                    if better {
                        best = Some(key);
                    }
                }
            }
        }

        let Some((_, len, _, i, p)) = best else { break };

        // landing span: among movable match positions for the winning block,
        // the one closest to the insertion point
        let js: Vec<usize> = occ
            .get(&cur[i])
            .map(|js0| {
                js0.iter()
                    .copied()
                    .filter(|&j| {
                        j + len <= ref_.len()
                            && (0..len).all(|t| ref_[j + t] == cur[i + t])
                            && (0..len).any(|t| hyp_match[i + t] != Some(j + t))
                    })
                    .collect()
            })
            .unwrap_or_default();
        let ref_start = js
            .iter()
            .copied()
            .min_by_key(|&j| ((j as isize - p as isize).unsigned_abs(), j))
            .expect("winning shift has a movable match span");

        shift_seq(&cur, i, len, p, &mut scratch);
        shifts.push(RawShift {
            start: i,
            len,
            ref_start,
            distance: p as isize - i as isize,
            before: cur.clone(),
            after: scratch.clone(),
        });
        cur = scratch.clone();
    }
    (cur, shifts)
}

/// Exact solver for free shifts. Pairs hypothesis and reference occurrences
/// of each token in order, arranges paired tokens in reference order with
/// unpaired tokens distributed to keep leftover spans aligned, and emits the
/// single-token moves realizing that arrangement. The final DP then costs
/// `max(|hyp|,|ref|) − |multiset ∩|`, the bag-of-words optimum.
fn free_reorder(hyp: &[u32], ref_: &[u32], cfg: &TerConfig) -> (Vec<u32>, Vec<RawShift>) {
    let m = hyp.len();
    if m == 0 {
        return (Vec::new(), Vec::new());
    }

    let mut ref_occ: HashMap<u32, Vec<usize>> = HashMap::new();
    for (j, &r) in ref_.iter().enumerate() {
        ref_occ.entry(r).or_default().push(j);
    }

    // pair the k-th hypothesis occurrence of a token with its k-th
    // reference occurrence
    let mut seen: HashMap<u32, usize> = HashMap::new();
    let mut partner: Vec<Option<usize>> = vec![None; m]; // hyp pos -> ref pos
    for (h, &w) in hyp.iter().enumerate() {
        let k = seen.entry(w).or_insert(0);
        if let Some(rs) = ref_occ.get(&w) {
            if *k < rs.len() {
                partner[h] = Some(rs[*k]);
            }
        }
        *k += 1;
    }

    let mut commons: Vec<(usize, usize)> = partner
        .iter()
        .enumerate()
        .filter_map(|(h, r)| r.map(|r| (h, r)))
        .collect();
    commons.sort_by_key(|&(_, r)| r);
    let extras: Vec<usize> = (0..m).filter(|&h| partner[h].is_none()).collect();

    if commons.is_empty() {
        return (hyp.to_vec(), Vec::new());
    }

    // unpaired reference counts around each paired reference position
    let paired_ref: Vec<usize> = commons.iter().map(|&(_, r)| r).collect();
    let c = paired_ref.len();
    let mut gaps = vec![0usize; c + 1];
    {
        let mut g = 0usize;
        for j in 0..ref_.len() {
            if g < c && j == paired_ref[g] {
                g += 1;
            } else {
                gaps[g] += 1;
            }
        }
    }

    // distribute extras over gaps: fill within reference leftovers first,
    // overflow goes to the last gap
    let total_gap: usize = gaps.iter().sum();
    let mut take = vec![0usize; c + 1];
    let mut remaining = extras.len();
    if remaining <= total_gap {
        for g in 0..=c {
            take[g] = gaps[g].min(remaining);
            remaining -= take[g];
        }
    } else {
        take.copy_from_slice(&gaps);
        take[c] += remaining - total_gap;
    }

    // target order of hypothesis instances
    let mut target: Vec<usize> = Vec::with_capacity(m);
    let mut extra_iter = extras.iter().copied();
    for g in 0..=c {
        for _ in 0..take[g] {
            target.push(extra_iter.next().expect("extras accounted for"));
        }
        if g < c {
            target.push(commons[g].0);
        }
    }
    debug_assert_eq!(target.len(), m);

    // realize the target order by moving paired tokens one at a time
    let max_dist = cfg.max_shift_distance as isize;
    let mut cur: Vec<usize> = (0..m).collect();
    let mut shifts: Vec<RawShift> = Vec::new();
    let mut capped = false;
    let target_slot: HashMap<usize, usize> = target
        .iter()
        .enumerate()
        .map(|(slot, &inst)| (inst, slot))
        .collect();

    for &(inst, ref_pos) in &commons {
        let q = cur
            .iter()
            .position(|&e| e == inst)
            .expect("instance present");
        let slot = target_slot[&inst];
        // insertion point = just after the last element that must precede
        // this one, in block-removed coordinates
        let mut p = 0usize;
        for &pred in &target[..slot] {
            let pos = cur
                .iter()
                .position(|&e| e == pred)
                .expect("instance present");
            let pos = if pos > q { pos - 1 } else { pos };
            p = p.max(pos + 1);
        }
        if p == q {
            continue;
        }
        let dist = p as isize - q as isize;
        if dist.abs() > max_dist {
            capped = true;
            continue;
        }
        let before: Vec<u32> = cur.iter().map(|&e| hyp[e]).collect();
        let moved = cur.remove(q);
        cur.insert(p, moved);
        let after: Vec<u32> = cur.iter().map(|&e| hyp[e]).collect();
        shifts.push(RawShift {
            start: q,
            len: 1,
            ref_start: ref_pos,
            distance: dist,
            before,
            after,
        });
    }

    let rearranged: Vec<u32> = cur.iter().map(|&e| hyp[e]).collect();
    if capped && lev_cost(&rearranged, ref_) >= lev_cost(hyp, ref_) {
        // distance cap blocked the layout and it did not pay off
        return (hyp.to_vec(), Vec::new());
    }
    (rearranged, shifts)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::corpus::Token;

    fn seg(text: &str) -> Segment {
        Segment::from_tokens(0, text.split_whitespace().map(Token::new).collect())
    }

    fn toks(text: &str) -> Vec<String> {
        text.split_whitespace().map(str::to_string).collect()
    }

    fn align(hyp: &str, ref_: &str, cfg: &TerConfig) -> TerAlignment {
        ter_align(&seg(hyp), &seg(ref_), cfg).unwrap()
    }

    #[test]
    fn identity_scores_zero() {
        let a = align("a b c", "a b c", &TerConfig::default());
        assert_eq!(a.edits, 0);
        assert_eq!(a.score(), 0.0);
        assert!(a.trace.shifts.is_empty());
    }

    #[test]
    fn single_shift_example() {
        let a = align("a c b d", "a b c d", &TerConfig::default());
        assert_eq!(a.edits, 1);
        assert_eq!(a.score(), 0.25);
        assert_eq!(a.trace.shifts.len(), 1);
        let block = &a.trace.shifts[0].block;
        assert!(block == &toks("c") || block == &toks("b"), "{block:?}");
    }

    #[test]
    fn empty_hypothesis_all_inserts() {
        let a = align("", "a b", &TerConfig::default());
        assert_eq!(a.edits, 2);
        assert_eq!(a.score(), 1.0);
        assert_eq!(a.trace.non_shift_edits(), 2);
    }

    #[test]
    fn empty_reference_is_error() {
        let err = ter_align(&seg("a"), &seg(""), &TerConfig::default()).unwrap_err();
        assert!(err.to_string().contains("empty reference"));
    }

    #[test]
    fn free_shift_swap_is_zero() {
        let cfg = TerConfig {
            shift_cost: 0,
            ..TerConfig::default()
        };
        let a = align("b a", "a b", &cfg);
        assert_eq!(a.edits, 0);
        assert_eq!(a.score(), 0.0);
    }

    #[test]
    fn free_shift_full_reversal_is_zero() {
        // greedy stalls on this one; the exact free-shift path must not
        let cfg = TerConfig {
            shift_cost: 0,
            ..TerConfig::default()
        };
        for perm in ["d c b a", "c b a d", "d b c a", "b a d c"] {
            let a = align(perm, "a b c d", &cfg);
            assert_eq!(a.edits, 0, "perm {perm:?}");
        }
    }

    #[test]
    fn free_shift_matches_bag_of_words_bound() {
        let cfg = TerConfig {
            shift_cost: 0,
            ..TerConfig::default()
        };
        // hyp {a,x,b} vs ref {b,y,a}: two common tokens -> 1 edit
        let a = align("a x b", "b y a", &cfg);
        assert_eq!(a.edits, 1);
        // duplicates: hyp {a,a} vs ref {a,b} -> 1 edit
        let a = align("a a", "a b", &cfg);
        assert_eq!(a.edits, 1);
    }

    #[test]
    fn two_shifts_applied_in_order() {
        // expected blocks fixed by the exhaustive oracle (see acceptance
        // suite): two single-token moves reach the reference exactly
        let a = align("b c d a e g h f", "a b c d e f g h", &TerConfig::default());
        assert_eq!(a.trace.shifts.len(), 2);
        assert_eq!(a.edits, 2);
        assert_eq!(a.trace.shifts[0].block, toks("f"));
        assert_eq!(a.trace.shifts[1].block, toks("a"));
        let blocks = shift_blocks(&a.trace);
        assert_eq!(blocks.len(), 2);
        assert_eq!(blocks[0].1, (5, 1));
        assert_eq!(blocks[1].1, (0, 1));
    }

    #[test]
    fn no_shift_trace_has_empty_blocks() {
        let a = align("a b", "a b", &TerConfig::default());
        assert!(shift_blocks(&a.trace).is_empty());
    }

    #[test]
    fn edits_never_exceed_levenshtein() {
        let cases = [
            ("a c b d", "a b c d"),
            ("x y z", "a b c"),
            ("a b c d e", "e d c b a"),
            ("der hund bellt", "bellt der hund"),
        ];
        for (h, r) in cases {
            let a = align(h, r, &TerConfig::default());
            let mut interner = Interner::default();
            let hi: Vec<u32> = toks(h).iter().map(|t| interner.intern(t)).collect();
            let ri: Vec<u32> = toks(r).iter().map(|t| interner.intern(t)).collect();
            assert!(a.edits <= lev_cost(&hi, &ri), "{h} vs {r}");
        }
    }

    #[test]
    fn replay_reproduces_reference() {
        let cases = [
            ("a c b d", "a b c d"),
            ("b c d a e g h f", "a b c d e f g h"),
            ("x a b", "a b y z"),
            ("", "a b"),
            ("a b c", "c"),
        ];
        for (h, r) in cases {
            for shift_cost in [1u8, 0] {
                let cfg = TerConfig {
                    shift_cost,
                    ..TerConfig::default()
                };
                let a = align(h, r, &cfg);
                // replay shifts over the normalized hypothesis
                let mut cur = toks(h);
                for s in &a.trace.shifts {
                    assert_eq!(cur, s.before, "before snapshot mismatch");
                    let block: Vec<String> = cur.drain(s.hyp_start..s.hyp_start + s.len).collect();
                    assert_eq!(block, s.block);
                    let at = (s.hyp_start as isize + s.distance) as usize;
                    for (k, b) in block.into_iter().enumerate() {
                        cur.insert(at + k, b);
                    }
                    assert_eq!(cur, s.after, "after snapshot mismatch");
                }
                // then the non-shift ops
                let rt = toks(r);
                let mut result: Vec<String> = Vec::new();
                for op in &a.trace.ops {
                    match op {
                        EditOp::Match { hyp, .. } => result.push(cur[*hyp].clone()),
                        EditOp::Substitute { ref_pos, .. } | EditOp::Insert { ref_pos } => {
                            result.push(rt[*ref_pos].clone())
                        }
                        EditOp::Delete { .. } | EditOp::Shift { .. } => {}
                    }
                }
                assert_eq!(result, rt, "replay failed for {h:?} vs {r:?}");
            }
        }
    }

    #[test]
    fn punctuation_stripping() {
        let cfg = TerConfig {
            shift_cost: 0,
            strip_punct: true,
            ..TerConfig::default()
        };
        let a = align("b a .", "a b !", &cfg);
        assert_eq!(a.edits, 0);
        assert_eq!(a.ref_len, 2);
    }

    #[test]
    fn lemma_projection_with_fallback() {
        let mut hyp = seg("Hunde bellen");
        hyp.tokens[0].lemma = Some("Hund".into());
        let mut ref_ = seg("Hund bellen");
        ref_.tokens[0].lemma = Some("Hund".into());
        let word = ter_align(&hyp, &ref_, &TerConfig::default()).unwrap();
        assert_eq!(word.edits, 1);
        let cfg = TerConfig {
            compare_on: CompareOn::Lemma,
            ..TerConfig::default()
        };
        let lemma = ter_align(&hyp, &ref_, &cfg).unwrap();
        assert_eq!(lemma.edits, 0);
    }

    #[test]
    fn lowercase_option() {
        let cfg = TerConfig {
            lowercase: true,
            ..TerConfig::default()
        };
        assert_eq!(align("Der Hund", "der hund", &cfg).edits, 0);
        assert_eq!(
            align("Der Hund", "der hund", &TerConfig::default()).edits,
            2
        );
    }

    #[test]
    fn max_shift_block_cap_respected() {
        let hyp = "f a b c d e";
        let rf = "a b c d e f";
        let small = TerConfig {
            max_shift_block: 1,
            ..TerConfig::default()
        };
        let a = align(hyp, rf, &small);
        assert!(a.trace.shifts.iter().all(|s| s.len <= 1));
        let b = align(hyp, rf, &TerConfig::default());
        assert!(b.edits <= a.edits);
    }

    #[test]
    fn max_shift_distance_cap_respected() {
        let cfg = TerConfig {
            max_shift_distance: 1,
            ..TerConfig::default()
        };
        let a = align("e a b c d", "a b c d e", &cfg);
        assert!(a
            .trace
            .shifts
            .iter()
            .all(|s| s.distance.unsigned_abs() <= 1));
    }

    #[test]
    fn score_helper() {
        assert_eq!(ter_score(1, 4).unwrap(), 0.25);
        assert_eq!(ter_score(0, 9).unwrap(), 0.0);
        assert_eq!(ter_score(5, 4).unwrap(), 1.25);
        assert!(ter_score(1, 0).is_err());
    }

    #[test]
    fn shift_counted_once_per_block() {
        let a = align("c d a b", "a b c d", &TerConfig::default());
        // one block of two tokens moves: 1 shift, 0 other edits
        assert_eq!(a.edits, 1);
        assert_eq!(a.trace.shifts.len(), 1);
        assert_eq!(a.trace.shifts[0].len, 2);
        assert_eq!(a.trace.edit_count(), 1);
    }
}
