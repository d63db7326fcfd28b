//! Corpus-level metrics: HTER, mTER, the no-shift variants, BLEU, PER and
//! the Kendall reordering score.
//!
//! TER-family corpus values are ratio-of-sums over per-segment edit counts,
//! reported on a 0–100 scale. Per-segment numerator/denominator pairs are
//! kept on every score so aggregates can be re-derived from serialized
//! reports.

use std::collections::HashMap;

use serde::Serialize;

use crate::config::{AlignCollapse, CompareOn, MterDenominator, TerConfig};
use crate::corpus::{AlignmentSet, Segment};
use crate::error::{Error, Result};
use crate::exec;
use crate::ter::{normalize_tokens, ter_align_tokens, EditTrace};

/// Per-segment numerator/denominator of a ratio metric.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct SegmentStat {
    pub num: f64,
    pub den: f64,
}

/// A named corpus score with its per-segment components.
#[derive(Debug, Clone, Serialize)]
pub struct MetricScore {
    pub name: String,
    pub system: String,
    /// 0–100 scale for TER-family and BLEU.
    pub corpus_value: f64,
    pub per_segment: Vec<SegmentStat>,
}

impl MetricScore {
    fn from_stats(name: &str, system: &str, per_segment: Vec<SegmentStat>) -> MetricScore {
        let num: f64 = per_segment.iter().map(|s| s.num).sum();
        let den: f64 = per_segment.iter().map(|s| s.den).sum();
        MetricScore {
            name: name.to_string(),
            system: system.to_string(),
            corpus_value: 100.0 * num / den,
            per_segment,
        }
    }

    pub fn total_num(&self) -> f64 {
        self.per_segment.iter().map(|s| s.num).sum()
    }

    pub fn total_den(&self) -> f64 {
        self.per_segment.iter().map(|s| s.den).sum()
    }
}

fn check_same_len(what: &str, a: usize, b: usize) -> Result<()> {
    if a != b {
        return Err(Error::Precondition(format!(
            "{what}: segment counts differ ({a} vs {b})"
        )));
    }
    Ok(())
}

/// TER against the targeted post-edit of each segment. Returns the score
/// and the per-segment traces (shift statistics feed the error profiles).
pub fn hter_with_traces(
    system_name: &str,
    outputs: &[Segment],
    targeted: &[Segment],
    cfg: &TerConfig,
) -> Result<(MetricScore, Vec<EditTrace>)> {
    check_same_len("hter", outputs.len(), targeted.len())?;
    if outputs.is_empty() {
        return Err(Error::Precondition("hter: empty corpus".into()));
    }
    let aligned = exec::map_indexed(outputs, |i, hyp| {
        let hyp_norm = normalize_tokens(hyp, cfg);
        let ref_norm = normalize_tokens(&targeted[i], cfg);
        ter_align_tokens(&hyp_norm, &ref_norm, cfg)
            .map_err(|e| Error::Precondition(format!("segment {i}: {e}")))
    });
    let mut stats = Vec::with_capacity(outputs.len());
    let mut traces = Vec::with_capacity(outputs.len());
    for res in aligned {
        let a = res?;
        stats.push(SegmentStat {
            num: a.edits as f64,
            den: a.ref_len as f64,
        });
        traces.push(a.trace);
    }
    Ok((MetricScore::from_stats("hter", system_name, stats), traces))
}

pub fn hter(
    system_name: &str,
    outputs: &[Segment],
    targeted: &[Segment],
    cfg: &TerConfig,
) -> Result<MetricScore> {
    hter_with_traces(system_name, outputs, targeted, cfg).map(|(s, _)| s)
}

/// HTER with free shifts and punctuation removed, on surfaces or lemmas.
/// Edits count substitutions, insertions and deletions only.
pub fn hter_noshift(
    system_name: &str,
    outputs: &[Segment],
    targeted: &[Segment],
    compare_on: CompareOn,
    base: &TerConfig,
) -> Result<MetricScore> {
    let cfg = base.noshift(compare_on);
    let (mut score, _) = hter_with_traces(system_name, outputs, targeted, &cfg)?;
    score.name = match compare_on {
        CompareOn::Surface => "hter_noshift_word".to_string(),
        CompareOn::Lemma => "hter_noshift_lemma".to_string(),
    };
    Ok(score)
}

/// TER against the closest of all available post-edits per segment.
/// `refs[i]` lists every reference for segment `i` and must contain the
/// targeted one; `targeted` drives the `TargetedLen` denominator rule.
pub fn mter(
    system_name: &str,
    outputs: &[Segment],
    targeted: &[Segment],
    refs: &[Vec<&Segment>],
    cfg: &TerConfig,
    denominator: MterDenominator,
) -> Result<MetricScore> {
    check_same_len("mter", outputs.len(), refs.len())?;
    check_same_len("mter", outputs.len(), targeted.len())?;
    if outputs.is_empty() {
        return Err(Error::Precondition("mter: empty corpus".into()));
    }
    let stats = exec::map_indexed(outputs, |i, hyp| -> Result<SegmentStat> {
        if refs[i].is_empty() {
            return Err(Error::Precondition(format!("segment {i}: no references")));
        }
        let hyp_norm = normalize_tokens(hyp, cfg);
        let mut best: Option<(u64, u64)> = None; // (edits, ref_len)
        let mut len_sum = 0u64;
        for r in &refs[i] {
            let ref_norm = normalize_tokens(r, cfg);
            let a = ter_align_tokens(&hyp_norm, &ref_norm, cfg)
                .map_err(|e| Error::Precondition(format!("segment {i}: {e}")))?;
            len_sum += a.ref_len;
            if best.is_none_or(|(e, _)| a.edits < e) {
                best = Some((a.edits, a.ref_len));
            }
        }
        let (edits, best_len) = best.expect("non-empty refs");
        let den = match denominator {
            MterDenominator::MeanRefLen => len_sum as f64 / refs[i].len() as f64,
            MterDenominator::TargetedLen => normalize_tokens(&targeted[i], cfg).len() as f64,
            MterDenominator::BestRefLen => best_len as f64,
        };
        if den == 0.0 {
            return Err(Error::Precondition(format!("segment {i}: empty reference")));
        }
        Ok(SegmentStat {
            num: edits as f64,
            den,
        })
    });
    let stats: Vec<SegmentStat> = stats.into_iter().collect::<Result<_>>()?;
    Ok(MetricScore::from_stats("mter", system_name, stats))
}

/// Per-segment BLEU components: clipped and total n-gram counts for each
/// order, plus token lengths.
#[derive(Debug, Clone, Serialize)]
pub struct BleuSegment {
    pub hyp_len: u64,
    pub ref_len: u64,
    pub matched: Vec<u64>,
    pub total: Vec<u64>,
}

#[derive(Debug, Clone, Serialize)]
pub struct BleuStats {
    pub system: String,
    pub value: f64,
    pub hyp_len: u64,
    pub ref_len: u64,
    pub per_segment: Vec<BleuSegment>,
}

/// Corpus BLEU against a single reference: geometric mean of modified
/// n-gram precisions times the brevity penalty, on a 0–100 scale. Zero
/// match counts are replaced by `epsilon`.
pub fn corpus_bleu(
    outputs: &[Segment],
    reference: &[Segment],
    max_n: usize,
    epsilon: f64,
    lowercase: bool,
) -> Result<f64> {
    corpus_bleu_stats("", outputs, reference, max_n, epsilon, lowercase).map(|s| s.value)
}

/// [`corpus_bleu`] keeping the per-segment n-gram counts the corpus value
/// derives from.
pub fn corpus_bleu_stats(
    system_name: &str,
    outputs: &[Segment],
    reference: &[Segment],
    max_n: usize,
    epsilon: f64,
    lowercase: bool,
) -> Result<BleuStats> {
    check_same_len("bleu", outputs.len(), reference.len())?;
    if outputs.is_empty() {
        return Err(Error::Precondition("bleu: empty corpus".into()));
    }
    let project = |seg: &Segment| -> Vec<String> {
        seg.tokens
            .iter()
            .map(|t| {
                if lowercase {
                    t.surface.to_lowercase()
                } else {
                    t.surface.clone()
                }
            })
            .collect()
    };
    let per_segment: Vec<BleuSegment> = exec::map_indexed(outputs, |i, hyp| {
        let h = project(hyp);
        let r = project(&reference[i]);
        let mut seg = BleuSegment {
            hyp_len: h.len() as u64,
            ref_len: r.len() as u64,
            matched: vec![0; max_n],
            total: vec![0; max_n],
        };
        for n in 1..=max_n {
            if h.len() < n {
                continue;
            }
            let mut ref_counts: HashMap<&[String], u64> = HashMap::new();
            if r.len() >= n {
                for w in r.windows(n) {
                    *ref_counts.entry(w).or_insert(0) += 1;
                }
            }
            let mut hyp_counts: HashMap<&[String], u64> = HashMap::new();
            for w in h.windows(n) {
                *hyp_counts.entry(w).or_insert(0) += 1;
            }
            for (w, c) in hyp_counts {
                seg.matched[n - 1] += c.min(ref_counts.get(w).copied().unwrap_or(0));
                seg.total[n - 1] += c;
            }
        }
        seg
    });
    let hyp_len: u64 = per_segment.iter().map(|s| s.hyp_len).sum();
    let ref_len: u64 = per_segment.iter().map(|s| s.ref_len).sum();
    let value = bleu_from_counts(&per_segment, max_n, epsilon);
    Ok(BleuStats {
        system: system_name.to_string(),
        value,
        hyp_len,
        ref_len,
        per_segment,
    })
}

/// Recombine per-segment BLEU components into the corpus value.
pub fn bleu_from_counts(per_segment: &[BleuSegment], max_n: usize, epsilon: f64) -> f64 {
    let hyp_len: u64 = per_segment.iter().map(|s| s.hyp_len).sum();
    let ref_len: u64 = per_segment.iter().map(|s| s.ref_len).sum();
    if hyp_len == 0 {
        return 0.0;
    }
    let mut log_sum = 0.0;
    for n in 0..max_n {
        let matched: u64 = per_segment.iter().map(|s| s.matched[n]).sum();
        let total: u64 = per_segment.iter().map(|s| s.total[n]).sum();
        if total == 0 {
            // hypotheses shorter than n+1 everywhere: treat as epsilon precision
            log_sum += epsilon.ln();
            continue;
        }
        let num = if matched == 0 {
            epsilon
        } else {
            matched as f64
        };
        log_sum += (num / total as f64).ln();
    }
    let precision = (log_sum / max_n as f64).exp();
    let bp = if hyp_len >= ref_len {
        1.0
    } else {
        (1.0 - ref_len as f64 / hyp_len as f64).exp()
    };
    100.0 * bp * precision
}

/// Position-independent error rate on raw token sequences:
/// `(max(|hyp|,|ref|) − |multiset intersection|) / |ref|`.
pub fn per_tokens(hyp: &[String], ref_: &[String]) -> Result<f64> {
    if ref_.is_empty() {
        return Err(Error::Precondition("per: empty reference".into()));
    }
    Ok(per_edits(hyp, ref_) as f64 / ref_.len() as f64)
}

/// Bag-of-words edit count used by [`per_tokens`].
pub fn per_edits(hyp: &[String], ref_: &[String]) -> u64 {
    let mut counts: HashMap<&str, i64> = HashMap::new();
    for t in hyp {
        *counts.entry(t.as_str()).or_insert(0) += 1;
    }
    let mut common = 0u64;
    for t in ref_ {
        if let Some(c) = counts.get_mut(t.as_str()) {
            if *c > 0 {
                *c -= 1;
                common += 1;
            }
        }
    }
    hyp.len().max(ref_.len()) as u64 - common
}

pub fn per(hyp: &Segment, ref_: &Segment) -> Result<f64> {
    let h: Vec<String> = hyp.tokens.iter().map(|t| t.surface.clone()).collect();
    let r: Vec<String> = ref_.tokens.iter().map(|t| t.surface.clone()).collect();
    per_tokens(&h, &r)
}

/// Kendall reordering similarity of one aligned segment pair, in `[0, 1]`.
///
/// Target tokens are listed in order and each aligned one maps to its
/// collapsed source position; `d` discordant pairs out of `k(k−1)/2`
/// give similarity `1 − sqrt(d/dmax)`, scaled by the coverage brevity
/// penalty `min(1, exp(1 − |target|/k))`. Returns `None` (segment skipped)
/// when no target token is aligned.
pub fn krs(
    source: &Segment,
    target: &Segment,
    alignment: &AlignmentSet,
    collapse: AlignCollapse,
) -> Result<Option<f64>> {
    alignment.validate(source.len(), target.len())?;
    let mut positions: Vec<f64> = Vec::new();
    for t in 0..target.len() {
        if let Some(pos) = collapse_source(alignment, t, collapse) {
            positions.push(pos);
        }
    }
    Ok(krs_from_positions(&positions, target.len()))
}

fn collapse_source(alignment: &AlignmentSet, t: usize, collapse: AlignCollapse) -> Option<f64> {
    let mut sum = 0.0;
    let mut min = f64::INFINITY;
    let mut n = 0u32;
    for &(s, tt) in &alignment.links {
        if tt == t {
            sum += s as f64;
            min = min.min(s as f64);
            n += 1;
        }
    }
    if n == 0 {
        return None;
    }
    Some(match collapse {
        AlignCollapse::Min => min,
        AlignCollapse::Mean => sum / n as f64,
    })
}

fn krs_from_positions(positions: &[f64], target_len: usize) -> Option<f64> {
    let k = positions.len();
    if k == 0 {
        return None;
    }
    let similarity = if k <= 1 {
        1.0
    } else {
        let mut d = 0u64;
        for u in 0..k {
            for v in u + 1..k {
                if positions[u] > positions[v] {
                    d += 1;
                }
            }
        }
        let dmax = (k * (k - 1) / 2) as f64;
        1.0 - (d as f64 / dmax).sqrt()
    };
    let bp = (1.0 - target_len as f64 / k as f64).exp().min(1.0);
    Some(bp * similarity)
}

/// Reordering agreement between an MT output and a post-edit of the same
/// source: source positions aligned in both induce an MT-position sequence
/// ordered by post-edit position, scored with the same similarity formula.
/// Returns `None` when the two alignments share no source position.
pub fn krs_pair(
    mt: &Segment,
    align_src_mt: &AlignmentSet,
    align_src_pe: &AlignmentSet,
    collapse: AlignCollapse,
) -> Option<f64> {
    let mt_pos = collapse_by_source(align_src_mt, collapse);
    let pe_pos = collapse_by_source(align_src_pe, collapse);
    // shared source positions, ordered by post-edit position (source index
    // breaks ties)
    let mut shared: Vec<(f64, usize, f64)> = Vec::new(); // (pe_pos, s, mt_pos)
    for (s, &m) in &mt_pos {
        if let Some(&p) = pe_pos.get(s) {
            shared.push((p, *s, m));
        }
    }
    shared.sort_by(|a, b| a.0.partial_cmp(&b.0).unwrap().then(a.1.cmp(&b.1)));
    let positions: Vec<f64> = shared.iter().map(|&(_, _, m)| m).collect();
    krs_from_positions(&positions, mt.len())
}

fn collapse_by_source(alignment: &AlignmentSet, collapse: AlignCollapse) -> HashMap<usize, f64> {
    let mut acc: HashMap<usize, (f64, f64, u32)> = HashMap::new(); // (sum, min, n)
    for &(s, t) in &alignment.links {
        let e = acc.entry(s).or_insert((0.0, f64::INFINITY, 0));
        e.0 += t as f64;
        e.1 = e.1.min(t as f64);
        e.2 += 1;
    }
    acc.into_iter()
        .map(|(s, (sum, min, n))| {
            let v = match collapse {
                AlignCollapse::Min => min,
                AlignCollapse::Mean => sum / n as f64,
            };
            (s, v)
        })
        .collect()
}

/// Corpus KRS over segment pairs. Unweighted mean of scored segments on a
/// 0–100 scale; unaligned segments are counted in `skipped`.
#[derive(Debug, Clone, Serialize)]
pub struct KrsResult {
    pub system: String,
    pub corpus_value: f64,
    pub per_segment: Vec<Option<f64>>,
    pub scored: usize,
    pub skipped: usize,
}

pub fn corpus_krs(
    system_name: &str,
    outputs: &[Segment],
    align_src_mt: &[AlignmentSet],
    align_src_pe: &[AlignmentSet],
    collapse: AlignCollapse,
) -> Result<KrsResult> {
    check_same_len("krs", outputs.len(), align_src_mt.len())?;
    check_same_len("krs", outputs.len(), align_src_pe.len())?;
    let per_segment: Vec<Option<f64>> = exec::map_indexed(outputs, |i, mt| {
        krs_pair(mt, &align_src_mt[i], &align_src_pe[i], collapse)
    });
    let scored = per_segment.iter().flatten().count();
    let skipped = per_segment.len() - scored;
    let corpus_value = if scored == 0 {
        0.0
    } else {
        100.0 * per_segment.iter().flatten().sum::<f64>() / scored as f64
    };
    Ok(KrsResult {
        system: system_name.to_string(),
        corpus_value,
        per_segment,
        scored,
        skipped,
    })
}
