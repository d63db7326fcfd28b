//! Error decomposition and corpus breakdowns: morphology vs lexical vs
//! word-order error indicators, shift classification by POS and dependency
//! label, length-binned scores, per-document scores and type-token ratios.

use std::collections::BTreeMap;

use serde::Serialize;

use crate::config::{CompareOn, RunConfig};
use crate::corpus::{is_punct_str, Segment};
use crate::error::{Error, Result};
use crate::manifest::{DocSpan, LoadedRun, LoadedSystem};
use crate::metrics::{self, MetricScore};
use crate::stats;
use crate::ter::EditTrace;

/// Morphology / lexical / word-order indicators for one system.
#[derive(Debug, Clone, Serialize)]
pub struct ErrorProfile {
    pub system: String,
    /// Free-shift HTER on surfaces, punctuation removed (percent).
    pub word_noshift: f64,
    /// Same on lemmas (percent).
    pub lemma_noshift: f64,
    /// `100 × (lemma − word) / word`; the morphology-error indicator.
    pub morph_delta_pct: f64,
    /// Shift blocks in the standard HTER alignment.
    pub shift_count: u64,
    /// Tokens generated by the system.
    pub word_count: u64,
    /// `100 × shift_count / word_count`.
    pub shift_pct: f64,
    /// Corpus KRS (percent), when alignments are declared.
    pub krs: Option<f64>,
}

/// `100 × (lemma − word) / word`, the percentage change between the two
/// no-shift scores.
pub fn pct_delta(word_score: f64, lemma_score: f64) -> f64 {
    100.0 * (lemma_score - word_score) / word_score
}

fn lemma_annotated(segments: &[Segment]) -> bool {
    segments
        .iter()
        .any(|s| s.tokens.iter().any(|t| t.lemma.is_some()))
}

fn profile_one(system: &LoadedSystem, cfg: &RunConfig) -> Result<ErrorProfile> {
    if !lemma_annotated(&system.postedit) {
        return Err(Error::Precondition(format!(
            "system {} has no lemma annotations on its post-edit",
            system.name
        )));
    }
    let word = metrics::hter_noshift(
        &system.name,
        &system.output,
        &system.postedit,
        CompareOn::Surface,
        &cfg.ter,
    )?;
    let lemma = metrics::hter_noshift(
        &system.name,
        &system.output,
        &system.postedit,
        CompareOn::Lemma,
        &cfg.ter,
    )?;
    let (_, traces) =
        metrics::hter_with_traces(&system.name, &system.output, &system.postedit, &cfg.ter)?;
    let shift_count: u64 = traces.iter().map(|t| t.shift_count()).sum();
    let word_count = system.word_count();
    let krs = match (&system.align_src_mt, &system.align_src_pe) {
        (Some(mt), Some(pe)) => Some(
            metrics::corpus_krs(&system.name, &system.output, mt, pe, cfg.align_collapse)?
                .corpus_value,
        ),
        _ => None,
    };
    let word_score = word.corpus_value;
    let lemma_score = lemma.corpus_value;
    Ok(ErrorProfile {
        system: system.name.clone(),
        word_noshift: word_score,
        lemma_noshift: lemma_score,
        morph_delta_pct: if word_score == 0.0 {
            0.0
        } else {
            pct_delta(word_score, lemma_score)
        },
        shift_count,
        word_count,
        shift_pct: if word_count == 0 {
            0.0
        } else {
            100.0 * shift_count as f64 / word_count as f64
        },
        krs,
    })
}

/// Error profiles for every system of a run.
pub fn profile_errors(run: &LoadedRun, cfg: &RunConfig) -> Result<Vec<ErrorProfile>> {
    run.systems.iter().map(|s| profile_one(s, cfg)).collect()
}

/// Shifted-token tallies for one system: POS keys (lowercase) and
/// `deplabel:POS` keys (label lowercase, tag uppercase). Tokens whose
/// landed post-edit position lacks annotation count under `UNK`.
#[derive(Debug, Clone, Default, Serialize)]
pub struct ShiftCounts {
    pub pos: BTreeMap<String, u64>,
    pub dep: BTreeMap<String, u64>,
    pub total: u64,
    pub unannotated: u64,
}

/// Classify every token of every shifted block by the annotation of the
/// post-edit token at the position the block landed on. Traces must come
/// from standard-config HTER against these post-edits. With `skip_punct`,
/// punctuation tokens are left out entirely.
pub fn classify_shifts(
    traces: &[EditTrace],
    postedits: &[Segment],
    skip_punct: bool,
    extra_punct: &str,
) -> Result<ShiftCounts> {
    if traces.len() != postedits.len() {
        return Err(Error::Precondition(format!(
            "classify_shifts: {} traces vs {} post-edit segments",
            traces.len(),
            postedits.len()
        )));
    }
    let mut counts = ShiftCounts::default();
    for (trace, pe) in traces.iter().zip(postedits) {
        for shift in &trace.shifts {
            let (start, len) = shift.ref_span();
            for t in start..start + len {
                let token = pe.tokens.get(t).ok_or_else(|| {
                    Error::Precondition(format!(
                        "segment {}: shift landed outside post-edit (position {t})",
                        pe.id
                    ))
                })?;
                if skip_punct && is_punct_str(&token.surface, extra_punct) {
                    continue;
                }
                counts.total += 1;
                match &token.pos {
                    Some(pos) => {
                        *counts.pos.entry(pos.to_lowercase()).or_insert(0) += 1;
                        match &token.dep_label {
                            Some(dep) => {
                                let key = format!("{}:{}", dep.to_lowercase(), pos.to_uppercase());
                                *counts.dep.entry(key).or_insert(0) += 1;
                            }
                            None => *counts.dep.entry("UNK".into()).or_insert(0) += 1,
                        }
                    }
                    None => {
                        counts.unannotated += 1;
                        *counts.pos.entry("UNK".into()).or_insert(0) += 1;
                        *counts.dep.entry("UNK".into()).or_insert(0) += 1;
                    }
                }
            }
        }
    }
    Ok(counts)
}

/// Per-system shifted-token counts keyed by POS and by `deplabel:POS`.
#[derive(Debug, Clone, Serialize)]
pub struct ShiftClassTable {
    pub systems: Vec<String>,
    pub pos: BTreeMap<String, Vec<u64>>,
    pub dep: BTreeMap<String, Vec<u64>>,
    pub totals: Vec<u64>,
    pub unannotated: Vec<u64>,
}

impl ShiftClassTable {
    pub fn from_counts(per_system: Vec<(String, ShiftCounts)>) -> ShiftClassTable {
        let systems: Vec<String> = per_system.iter().map(|(n, _)| n.clone()).collect();
        let k = systems.len();
        let mut pos: BTreeMap<String, Vec<u64>> = BTreeMap::new();
        let mut dep: BTreeMap<String, Vec<u64>> = BTreeMap::new();
        for (i, (_, counts)) in per_system.iter().enumerate() {
            for (key, &c) in &counts.pos {
                pos.entry(key.clone()).or_insert_with(|| vec![0; k])[i] = c;
            }
            for (key, &c) in &counts.dep {
                dep.entry(key.clone()).or_insert_with(|| vec![0; k])[i] = c;
            }
        }
        ShiftClassTable {
            systems,
            pos,
            dep,
            totals: per_system.iter().map(|(_, c)| c.total).collect(),
            unannotated: per_system.iter().map(|(_, c)| c.unannotated).collect(),
        }
    }

    fn index_of(&self, system: &str) -> Result<usize> {
        self.systems
            .iter()
            .position(|s| s == system)
            .ok_or_else(|| Error::Manifest(format!("system {system:?} not present in shift table")))
    }
}

/// One row of a reduction table: counts per system plus the focal-vs-baseline
/// change. `None` when the baseline count is zero.
#[derive(Debug, Clone, Serialize)]
pub struct ReductionRow {
    pub key: String,
    pub counts: Vec<u64>,
    pub reduction_pct: Option<i64>,
}

#[derive(Debug, Clone, Serialize)]
pub struct ReductionTable {
    pub focal: String,
    pub baseline: String,
    pub threshold: u64,
    pub systems: Vec<String>,
    pub pos_rows: Vec<ReductionRow>,
    pub dep_rows: Vec<ReductionRow>,
    pub all_row: ReductionRow,
}

/// Focal-vs-baseline reduction per word class, keeping only keys shifted at
/// least `threshold` times in some system. Rows sort by reduction ascending
/// (biggest improvement first), undefined reductions last.
pub fn reduction_table(
    table: &ShiftClassTable,
    focal: &str,
    baseline: &str,
    threshold: u64,
) -> Result<ReductionTable> {
    let fi = table.index_of(focal)?;
    let bi = table.index_of(baseline)?;
    let reduce = |f: u64, b: u64| -> Option<i64> {
        if b == 0 {
            return None;
        }
        Some((100.0 * (f as f64 - b as f64) / b as f64).round() as i64)
    };
    let build = |rows: &BTreeMap<String, Vec<u64>>| -> Vec<ReductionRow> {
        let mut out: Vec<ReductionRow> = rows
            .iter()
            .filter(|(_, counts)| counts.iter().any(|&c| c >= threshold))
            .map(|(key, counts)| ReductionRow {
                key: key.clone(),
                counts: counts.clone(),
                reduction_pct: reduce(counts[fi], counts[bi]),
            })
            .collect();
        out.sort_by(|a, b| match (a.reduction_pct, b.reduction_pct) {
            (Some(x), Some(y)) => x.cmp(&y).then_with(|| a.key.cmp(&b.key)),
            (Some(_), None) => std::cmp::Ordering::Less,
            (None, Some(_)) => std::cmp::Ordering::Greater,
            (None, None) => a.key.cmp(&b.key),
        });
        out
    };
    Ok(ReductionTable {
        focal: focal.to_string(),
        baseline: baseline.to_string(),
        threshold,
        systems: table.systems.clone(),
        pos_rows: build(&table.pos),
        dep_rows: build(&table.dep),
        all_row: ReductionRow {
            key: "all".into(),
            counts: table.totals.clone(),
            reduction_pct: reduce(table.totals[fi], table.totals[bi]),
        },
    })
}

/// One length bin: closed `lo..=hi` on source length, open-ended when `hi`
/// is `None`. `pct_delta` compares this bin's mean to the preceding one,
/// negative meaning the score rose (quality dropped).
#[derive(Debug, Clone, Serialize)]
pub struct BinRow {
    pub lo: usize,
    pub hi: Option<usize>,
    pub n: usize,
    pub mean: Option<f64>,
    pub pct_delta: Option<f64>,
}

#[derive(Debug, Clone, Serialize)]
pub struct BinnedScores {
    pub rows: Vec<BinRow>,
}

/// Mean per-segment score per source-length bin. `edges` are the upper
/// bounds of the closed bins; one open bin follows the last edge.
pub fn bin_by_length(scores: &[f64], lengths: &[usize], edges: &[usize]) -> Result<BinnedScores> {
    if scores.len() != lengths.len() {
        return Err(Error::Precondition("bin_by_length: length mismatch".into()));
    }
    if !edges.windows(2).all(|w| w[0] < w[1]) || edges.is_empty() {
        return Err(Error::Precondition(
            "bin edges must be non-empty and strictly increasing".into(),
        ));
    }
    let nbins = edges.len() + 1;
    let mut sums = vec![0.0; nbins];
    let mut counts = vec![0usize; nbins];
    for (&score, &len) in scores.iter().zip(lengths) {
        let bin = edges.iter().position(|&e| len <= e).unwrap_or(edges.len());
        sums[bin] += score;
        counts[bin] += 1;
    }
    let mut rows = Vec::with_capacity(nbins);
    let mut prev_mean: Option<f64> = None;
    for b in 0..nbins {
        let lo = if b == 0 { 1 } else { edges[b - 1] + 1 };
        let hi = edges.get(b).copied();
        let mean = (counts[b] > 0).then(|| sums[b] / counts[b] as f64);
        let pct_delta = match (prev_mean, mean) {
            (Some(p), Some(m)) if p != 0.0 => Some(-100.0 * (m - p) / p),
            _ => None,
        };
        rows.push(BinRow {
            lo,
            hi,
            n: counts[b],
            mean,
            pct_delta,
        });
        if mean.is_some() {
            prev_mean = mean;
        }
    }
    Ok(BinnedScores { rows })
}

/// Type-token ratio of the given segments: distinct token count over total
/// token count, optionally lowercased and with punctuation excluded.
pub fn ttr(
    segments: &[Segment],
    lowercase: bool,
    exclude_punct: bool,
    extra_punct: &str,
) -> Result<f64> {
    let mut types = std::collections::BTreeSet::new();
    let mut tokens = 0u64;
    for seg in segments {
        for tok in &seg.tokens {
            if exclude_punct && is_punct_str(&tok.surface, extra_punct) {
                continue;
            }
            tokens += 1;
            types.insert(if lowercase {
                tok.surface.to_lowercase()
            } else {
                tok.surface.clone()
            });
        }
    }
    if tokens == 0 {
        return Err(Error::Precondition("ttr: no tokens".into()));
    }
    Ok(types.len() as f64 / tokens as f64)
}

/// One document row: per-system mTER, source TTR, and the focal system's
/// gain over its closest competitor (in score points).
#[derive(Debug, Clone, Serialize)]
pub struct DocRow {
    pub doc_id: String,
    pub n_segments: usize,
    pub ttr: f64,
    /// Percent mTER per system, in table order.
    pub mter: Vec<f64>,
    pub closest_competitor: f64,
    pub gain: f64,
}

#[derive(Debug, Clone, Serialize)]
pub struct DocScores {
    pub focal: String,
    pub systems: Vec<String>,
    pub docs: Vec<DocRow>,
    /// Pearson r between TTR and gain, when defined.
    pub pearson_r: Option<f64>,
}

/// Per-document mTER with TTR and focal gains. The per-system per-segment
/// mTER stats are passed in so callers can reuse them for binning.
pub fn doc_breakdown(
    run: &LoadedRun,
    per_system_mter: &[MetricScore],
    focal: &str,
    cfg: &RunConfig,
) -> Result<DocScores> {
    let systems: Vec<String> = run.system_names().iter().map(|s| s.to_string()).collect();
    let fi = systems
        .iter()
        .position(|s| s == focal)
        .ok_or_else(|| Error::Manifest(format!("unknown focal system {focal:?}")))?;
    if systems.len() < 2 {
        return Err(Error::Precondition(
            "doc breakdown needs at least two systems".into(),
        ));
    }
    let mut docs = Vec::with_capacity(run.docs.len());
    for doc in &run.docs {
        let mter: Vec<f64> = per_system_mter
            .iter()
            .map(|score| doc_ratio(score, doc))
            .collect();
        let closest = mter
            .iter()
            .enumerate()
            .filter(|(i, _)| *i != fi)
            .map(|(_, &v)| v)
            .fold(f64::INFINITY, f64::min);
        let ttr_v = ttr(
            run.doc_source(doc),
            cfg.ttr_lowercase,
            cfg.ttr_exclude_punct,
            &cfg.ter.extra_punct_chars,
        )?;
        docs.push(DocRow {
            doc_id: doc.id.clone(),
            n_segments: doc.segment_count(),
            ttr: ttr_v,
            gain: closest - mter[fi],
            closest_competitor: closest,
            mter,
        });
    }
    let xs: Vec<f64> = docs.iter().map(|d| d.ttr).collect();
    let ys: Vec<f64> = docs.iter().map(|d| d.gain).collect();
    let pearson_r = stats::pearson(&xs, &ys).ok();
    Ok(DocScores {
        focal: focal.to_string(),
        systems,
        docs,
        pearson_r,
    })
}

fn doc_ratio(score: &MetricScore, doc: &DocSpan) -> f64 {
    let mut num = 0.0;
    let mut den = 0.0;
    for stat in &score.per_segment[doc.first..=doc.last] {
        num += stat.num;
        den += stat.den;
    }
    100.0 * num / den
}
