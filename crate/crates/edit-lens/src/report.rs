//! Run orchestration and report emission.
//!
//! Each CLI command maps to one function here that computes a typed report.
//! Reports serialize to JSON (schema 1) carrying the full configuration,
//! seed and per-segment components, so every aggregate can be re-derived
//! from the file alone, and to TSV with the same numbers rounded for
//! display (scores to one decimal, reductions to whole percent). Given the
//! same manifest, config and seed, emission is byte-identical run to run.

use std::collections::BTreeMap;
use std::fmt::Write as _;

use serde::Serialize;

use crate::config::RunConfig;
use crate::error::{Error, Result};
use crate::manifest::LoadedRun;
use crate::metrics::{self, BleuSegment, BleuStats, KrsResult, MetricScore, SegmentStat};
use crate::profile::{
    self, BinnedScores, DocScores, ErrorProfile, ReductionTable, ShiftClassTable,
};
use crate::stats::{self, SignificanceResult};

pub const SCHEMA_VERSION: u32 = 1;

#[derive(Debug, Clone, Serialize)]
pub struct ReportMeta {
    pub schema: u32,
    pub command: String,
    pub manifest: String,
    pub seed: u64,
    pub config: RunConfig,
}

impl ReportMeta {
    fn new(run: &LoadedRun, command: &str) -> ReportMeta {
        ReportMeta {
            schema: SCHEMA_VERSION,
            command: command.to_string(),
            manifest: run.manifest_path.display().to_string(),
            seed: run.config.seed,
            config: run.config.clone(),
        }
    }
}

/// Round for display the way the TSV emitters do.
fn fmt1(v: f64) -> String {
    format!("{v:.1}")
}

fn fmt4(v: f64) -> String {
    format!("{v:.4}")
}

fn opt1(v: Option<f64>) -> String {
    v.map(fmt1).unwrap_or_else(|| "n/a".into())
}

// ---------------------------------------------------------------------------
// score
// ---------------------------------------------------------------------------

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum MetricKind {
    Hter,
    Mter,
    Bleu,
    Krs,
}

impl std::str::FromStr for MetricKind {
    type Err = Error;
    fn from_str(s: &str) -> Result<MetricKind> {
        match s {
            "hter" => Ok(MetricKind::Hter),
            "mter" => Ok(MetricKind::Mter),
            "bleu" => Ok(MetricKind::Bleu),
            "krs" => Ok(MetricKind::Krs),
            other => Err(Error::Manifest(format!(
                "unknown metric {other:?} (expected hter|mter|bleu|krs)"
            ))),
        }
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct RatioRow {
    pub system: String,
    /// Percent scale.
    pub value: f64,
    pub num: f64,
    pub den: f64,
    pub per_segment: Vec<SegmentStat>,
}

impl From<MetricScore> for RatioRow {
    fn from(s: MetricScore) -> RatioRow {
        RatioRow {
            system: s.system.clone(),
            value: s.corpus_value,
            num: s.total_num(),
            den: s.total_den(),
            per_segment: s.per_segment,
        }
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct ScoreReport {
    pub meta: ReportMeta,
    pub metric: MetricKind,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub ratio: Option<Vec<RatioRow>>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub bleu: Option<Vec<BleuStats>>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub krs: Option<Vec<KrsResult>>,
}

fn bleu_all(run: &LoadedRun) -> Result<Vec<BleuStats>> {
    let reference = run.reference.as_ref().ok_or_else(|| {
        Error::Precondition("BLEU requires a `reference` entry in the manifest".into())
    })?;
    run.systems
        .iter()
        .map(|s| {
            metrics::corpus_bleu_stats(
                &s.name,
                &s.output,
                reference,
                run.config.bleu_max_n,
                run.config.bleu_epsilon,
                run.config.ter.lowercase,
            )
        })
        .collect()
}

fn hter_all(run: &LoadedRun) -> Result<Vec<MetricScore>> {
    run.systems
        .iter()
        .map(|s| metrics::hter(&s.name, &s.output, &s.postedit, &run.config.ter))
        .collect()
}

fn mter_all(run: &LoadedRun) -> Result<Vec<MetricScore>> {
    run.systems
        .iter()
        .map(|s| {
            let refs = run.all_refs(&s.name);
            metrics::mter(
                &s.name,
                &s.output,
                &s.postedit,
                &refs,
                &run.config.ter,
                run.config.mter_denominator,
            )
        })
        .collect()
}

fn krs_all(run: &LoadedRun) -> Result<Vec<KrsResult>> {
    run.systems
        .iter()
        .map(|s| {
            let (mt, pe) = match (&s.align_src_mt, &s.align_src_pe) {
                (Some(mt), Some(pe)) => (mt, pe),
                _ => {
                    return Err(Error::Precondition(format!(
                        "system {}: KRS requires align_src_mt and align_src_pe in the manifest",
                        s.name
                    )))
                }
            };
            metrics::corpus_krs(&s.name, &s.output, mt, pe, run.config.align_collapse)
        })
        .collect()
}

pub fn cmd_score(run: &LoadedRun, metric: MetricKind) -> Result<ScoreReport> {
    let meta = ReportMeta::new(run, "score");
    let mut report = ScoreReport {
        meta,
        metric,
        ratio: None,
        bleu: None,
        krs: None,
    };
    match metric {
        MetricKind::Hter => {
            report.ratio = Some(hter_all(run)?.into_iter().map(RatioRow::from).collect());
        }
        MetricKind::Mter => {
            report.ratio = Some(mter_all(run)?.into_iter().map(RatioRow::from).collect());
        }
        MetricKind::Bleu => {
            report.bleu = Some(bleu_all(run)?);
        }
        MetricKind::Krs => {
            report.krs = Some(krs_all(run)?);
        }
    }
    Ok(report)
}

impl ScoreReport {
    pub fn to_tsv(&self) -> String {
        let mut out = String::new();
        match self.metric {
            MetricKind::Hter | MetricKind::Mter => {
                out.push_str("system\tmetric\tvalue\tedits\tref_len\n");
                for r in self.ratio.as_deref().unwrap_or_default() {
                    let _ = writeln!(
                        out,
                        "{}\t{:?}\t{}\t{}\t{}",
                        r.system,
                        self.metric,
                        fmt1(r.value),
                        r.num,
                        r.den
                    );
                }
            }
            MetricKind::Bleu => {
                out.push_str("system\tmetric\tvalue\n");
                for r in self.bleu.as_deref().unwrap_or_default() {
                    let _ = writeln!(out, "{}\tBleu\t{}", r.system, fmt1(r.value));
                }
            }
            MetricKind::Krs => {
                out.push_str("system\tmetric\tvalue\tscored\tskipped\n");
                for r in self.krs.as_deref().unwrap_or_default() {
                    let _ = writeln!(
                        out,
                        "{}\tKrs\t{}\t{}\t{}",
                        r.system,
                        fmt1(r.corpus_value),
                        r.scored,
                        r.skipped
                    );
                }
            }
        }
        out
    }
}

// ---------------------------------------------------------------------------
// errors
// ---------------------------------------------------------------------------

/// Recomputation check embedded in the JSON: derived columns recomputed
/// from their components must agree bit-for-bit at output precision.
#[derive(Debug, Clone, Serialize)]
pub struct SelfCheck {
    pub morph_delta_max_abs_diff: f64,
    pub shift_pct_max_abs_diff: f64,
}

#[derive(Debug, Clone, Serialize)]
pub struct ErrorsReport {
    pub meta: ReportMeta,
    pub profiles: Vec<ErrorProfile>,
    pub self_check: SelfCheck,
}

pub fn cmd_errors(run: &LoadedRun) -> Result<ErrorsReport> {
    let profiles = profile::profile_errors(run, &run.config)?;
    let mut morph = 0.0f64;
    let mut shift = 0.0f64;
    for p in &profiles {
        if p.word_noshift != 0.0 {
            morph = morph.max(
                (profile::pct_delta(p.word_noshift, p.lemma_noshift) - p.morph_delta_pct).abs(),
            );
        }
        if p.word_count != 0 {
            shift =
                shift.max((100.0 * p.shift_count as f64 / p.word_count as f64 - p.shift_pct).abs());
        }
    }
    Ok(ErrorsReport {
        meta: ReportMeta::new(run, "errors"),
        profiles,
        self_check: SelfCheck {
            morph_delta_max_abs_diff: morph,
            shift_pct_max_abs_diff: shift,
        },
    })
}

impl ErrorsReport {
    pub fn to_tsv(&self) -> String {
        let mut out = String::from(
            "system\tword_noshift\tlemma_noshift\tmorph_delta_pct\tshifts\twords\tshift_pct\tkrs\n",
        );
        for p in &self.profiles {
            let _ = writeln!(
                out,
                "{}\t{}\t{}\t{}\t{}\t{}\t{}\t{}",
                p.system,
                fmt1(p.word_noshift),
                fmt1(p.lemma_noshift),
                fmt1(p.morph_delta_pct),
                p.shift_count,
                p.word_count,
                fmt1(p.shift_pct),
                opt1(p.krs),
            );
        }
        out
    }
}

// ---------------------------------------------------------------------------
// shifts
// ---------------------------------------------------------------------------

/// One shifted block, kept per system for re-verification.
#[derive(Debug, Clone, Serialize)]
pub struct BlockRecord {
    pub segment: usize,
    pub tokens: Vec<String>,
    pub ref_start: usize,
}

#[derive(Debug, Clone, Serialize)]
pub struct ShiftsReport {
    pub meta: ReportMeta,
    pub table: ReductionTable,
    pub unannotated: Vec<u64>,
    pub blocks: BTreeMap<String, Vec<BlockRecord>>,
}

fn shift_table(run: &LoadedRun) -> Result<(ShiftClassTable, BTreeMap<String, Vec<BlockRecord>>)> {
    let mut per_system = Vec::new();
    let mut blocks = BTreeMap::new();
    for s in &run.systems {
        if !s
            .postedit
            .iter()
            .any(|seg| seg.tokens.iter().any(|t| t.pos.is_some()))
        {
            return Err(Error::Precondition(format!(
                "system {} has no POS annotations on its post-edit",
                s.name
            )));
        }
        let (_, traces) =
            metrics::hter_with_traces(&s.name, &s.output, &s.postedit, &run.config.ter)?;
        let counts = profile::classify_shifts(
            &traces,
            &s.postedit,
            run.config.classify_skip_punct,
            &run.config.ter.extra_punct_chars,
        )?;
        per_system.push((s.name.clone(), counts));
        let mut recs = Vec::new();
        for (i, trace) in traces.iter().enumerate() {
            for shift in &trace.shifts {
                recs.push(BlockRecord {
                    segment: i,
                    tokens: shift.block.clone(),
                    ref_start: shift.ref_start,
                });
            }
        }
        blocks.insert(s.name.clone(), recs);
    }
    Ok((ShiftClassTable::from_counts(per_system), blocks))
}

pub fn cmd_shifts(
    run: &LoadedRun,
    focal: &str,
    baseline: &str,
    threshold: u64,
) -> Result<ShiftsReport> {
    run.system(focal)?;
    run.system(baseline)?;
    let (table, blocks) = shift_table(run)?;
    let reduction = profile::reduction_table(&table, focal, baseline, threshold)?;
    Ok(ShiftsReport {
        meta: ReportMeta::new(run, "shifts"),
        table: reduction,
        unannotated: table.unannotated,
        blocks,
    })
}

impl ShiftsReport {
    pub fn to_tsv(&self) -> String {
        let mut out = String::from("section\tkey\treduction_pct");
        for s in &self.table.systems {
            let _ = write!(out, "\t{s}");
        }
        out.push('\n');
        let mut row = |section: &str, r: &profile::ReductionRow| {
            let red = r
                .reduction_pct
                .map(|v| v.to_string())
                .unwrap_or_else(|| "n/a".into());
            let _ = write!(out, "{section}\t{}\t{red}", r.key);
            for c in &r.counts {
                let _ = write!(out, "\t{c}");
            }
            out.push('\n');
        };
        for r in &self.table.pos_rows {
            row("pos", r);
        }
        for r in &self.table.dep_rows {
            row("dep", r);
        }
        row("all", &self.table.all_row);
        out
    }
}

// ---------------------------------------------------------------------------
// breakdown
// ---------------------------------------------------------------------------

#[derive(Debug, Clone, Serialize)]
pub struct SystemBins {
    pub system: String,
    pub bins: BinnedScores,
}

#[derive(Debug, Clone, Serialize)]
pub struct Correlation {
    pub r: f64,
    pub n: usize,
}

#[derive(Debug, Clone, Serialize)]
pub struct BreakdownReport {
    pub meta: ReportMeta,
    pub focal: String,
    pub bins: Vec<SystemBins>,
    pub docs: DocScores,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub correlation: Option<Correlation>,
    /// Populated when the correlation is omitted.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub warning: Option<String>,
}

pub fn cmd_breakdown(run: &LoadedRun, focal: &str) -> Result<BreakdownReport> {
    run.system(focal)?;
    let mters = mter_all(run)?;
    let lengths: Vec<usize> = run.source.iter().map(|s| s.len()).collect();
    let mut bins = Vec::new();
    for score in &mters {
        let per_segment: Vec<f64> = score
            .per_segment
            .iter()
            .map(|s| 100.0 * s.num / s.den)
            .collect();
        bins.push(SystemBins {
            system: score.system.clone(),
            bins: profile::bin_by_length(&per_segment, &lengths, &run.config.bins)?,
        });
    }
    let mut docs = profile::doc_breakdown(run, &mters, focal, &run.config)?;
    let fi = docs
        .systems
        .iter()
        .position(|s| s == focal)
        .expect("focal checked");
    docs.docs.sort_by(|a, b| {
        a.mter[fi]
            .partial_cmp(&b.mter[fi])
            .unwrap()
            .then_with(|| a.doc_id.cmp(&b.doc_id))
    });
    let n = docs.docs.len();
    let (correlation, warning) = match docs.pearson_r {
        Some(r) => (Some(Correlation { r, n }), None),
        None => (
            None,
            Some(format!(
                "TTR/gain correlation undefined ({n} docs; needs >= 3 and non-constant values)"
            )),
        ),
    };
    Ok(BreakdownReport {
        meta: ReportMeta::new(run, "breakdown"),
        focal: focal.to_string(),
        bins,
        docs,
        correlation,
        warning,
    })
}

impl BreakdownReport {
    /// Figure data: one row per (system, non-empty bin).
    pub fn bins_csv(&self) -> String {
        let mut out = String::from("bin_lo,bin_hi,n,system,mter\n");
        for sb in &self.bins {
            for row in &sb.bins.rows {
                if row.n == 0 {
                    continue;
                }
                let hi = row
                    .hi
                    .map(|h| h.to_string())
                    .unwrap_or_else(|| "inf".into());
                let _ = writeln!(
                    out,
                    "{},{},{},{},{}",
                    row.lo,
                    hi,
                    row.n,
                    sb.system,
                    fmt1(row.mean.expect("non-empty bin has a mean"))
                );
            }
        }
        out
    }

    /// Figure data: per-document scores, docs sorted ascending by the focal
    /// system's score.
    pub fn docs_csv(&self) -> String {
        let mut out = String::from("doc_id,n,ttr,system,mter\n");
        for doc in &self.docs.docs {
            for (k, system) in self.docs.systems.iter().enumerate() {
                let _ = writeln!(
                    out,
                    "{},{},{},{},{}",
                    doc.doc_id,
                    doc.n_segments,
                    fmt4(doc.ttr),
                    system,
                    fmt1(doc.mter[k])
                );
            }
        }
        out
    }

    pub fn to_tsv(&self) -> String {
        let mut out = String::from("doc_id\tn\tttr\tfocal_mter\tclosest_competitor\tgain\n");
        let fi = self
            .docs
            .systems
            .iter()
            .position(|s| *s == self.focal)
            .expect("focal present");
        for doc in &self.docs.docs {
            let _ = writeln!(
                out,
                "{}\t{}\t{}\t{}\t{}\t{}",
                doc.doc_id,
                doc.n_segments,
                fmt4(doc.ttr),
                fmt1(doc.mter[fi]),
                fmt1(doc.closest_competitor),
                fmt1(doc.gain)
            );
        }
        if let Some(c) = &self.correlation {
            let _ = writeln!(out, "# pearson_r\t{}\tn\t{}", fmt4(c.r), c.n);
        }
        out
    }
}

// ---------------------------------------------------------------------------
// sigtest
// ---------------------------------------------------------------------------

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum SigTestKind {
    Bootstrap,
    Ztest,
    Ar,
}

impl std::str::FromStr for SigTestKind {
    type Err = Error;
    fn from_str(s: &str) -> Result<SigTestKind> {
        match s {
            "bootstrap" => Ok(SigTestKind::Bootstrap),
            "ztest" => Ok(SigTestKind::Ztest),
            "ar" => Ok(SigTestKind::Ar),
            other => Err(Error::Manifest(format!(
                "unknown test {other:?} (expected bootstrap|ztest|ar)"
            ))),
        }
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct SigtestReport {
    pub meta: ReportMeta,
    pub test: SigTestKind,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub metric: Option<MetricKind>,
    pub system_a: String,
    pub system_b: String,
    pub n_segments: usize,
    pub result: SignificanceResult,
}

fn ratio_stats(score: &MetricScore) -> Vec<(f64, f64)> {
    score.per_segment.iter().map(|s| (s.num, s.den)).collect()
}

pub fn cmd_sigtest(
    run: &LoadedRun,
    test: SigTestKind,
    system_a: &str,
    system_b: &str,
    metric: MetricKind,
    alpha: f64,
) -> Result<SigtestReport> {
    run.system(system_a)?;
    run.system(system_b)?;
    let cfg = &run.config;
    let (result, metric_echo, n) = match test {
        SigTestKind::Bootstrap => {
            let scores = match metric {
                MetricKind::Hter => hter_all(run)?,
                MetricKind::Mter => mter_all(run)?,
                other => {
                    return Err(Error::Precondition(format!(
                        "bootstrap runs on hter or mter, not {other:?}"
                    )))
                }
            };
            let a = scores
                .iter()
                .find(|s| s.system == system_a)
                .expect("system checked");
            let b = scores
                .iter()
                .find(|s| s.system == system_b)
                .expect("system checked");
            let r = stats::paired_bootstrap(
                &ratio_stats(a),
                &ratio_stats(b),
                cfg.bootstrap_iterations,
                cfg.seed,
            )?;
            (r, Some(metric), a.per_segment.len())
        }
        SigTestKind::Ztest => {
            // shift-error proportions: shifts over generated words
            let mut counts = BTreeMap::new();
            for name in [system_a, system_b] {
                let s = run.system(name)?;
                let (_, traces) =
                    metrics::hter_with_traces(&s.name, &s.output, &s.postedit, &cfg.ter)?;
                let shifts: u64 = traces.iter().map(|t| t.shift_count()).sum();
                counts.insert(name.to_string(), (shifts, s.word_count()));
            }
            let (ca, na) = counts[system_a];
            let (cb, nb) = counts[system_b];
            let r = stats::ztest_proportions(ca, na, cb, nb)?;
            (r, None, run.segment_count())
        }
        SigTestKind::Ar => {
            let results = krs_all(run)?;
            let a = &results
                .iter()
                .find(|r| r.system == system_a)
                .expect("system checked");
            let b = &results
                .iter()
                .find(|r| r.system == system_b)
                .expect("system checked");
            // keep segments scored on both sides, paired
            let mut xs = Vec::new();
            let mut ys = Vec::new();
            for (va, vb) in a.per_segment.iter().zip(&b.per_segment) {
                if let (Some(x), Some(y)) = (va, vb) {
                    xs.push(*x);
                    ys.push(*y);
                }
            }
            let r = stats::approx_randomization(&xs, &ys, cfg.randomization_iterations, cfg.seed)?;
            (r, Some(MetricKind::Krs), xs.len())
        }
    };
    Ok(SigtestReport {
        meta: ReportMeta::new(run, "sigtest"),
        test,
        metric: metric_echo,
        system_a: system_a.to_string(),
        system_b: system_b.to_string(),
        n_segments: n,
        result: result.with_level(alpha),
    })
}

impl SigtestReport {
    pub fn to_tsv(&self) -> String {
        let mut out = String::from(
            "test\tmetric\tsystem_a\tsystem_b\tstatistic\tp_value\titerations\tseed\tsignificant\n",
        );
        let _ = writeln!(
            out,
            "{:?}\t{}\t{}\t{}\t{:.6}\t{:.6e}\t{}\t{}\t{}",
            self.test,
            self.metric
                .map(|m| format!("{m:?}"))
                .unwrap_or_else(|| "shift_pct".into()),
            self.system_a,
            self.system_b,
            self.result.statistic,
            self.result.p_value,
            self.result
                .iterations
                .map(|i| i.to_string())
                .unwrap_or_else(|| "-".into()),
            self.result
                .seed
                .map(|s| s.to_string())
                .unwrap_or_else(|| "-".into()),
            self.result
                .is_significant()
                .map(|b| b.to_string())
                .unwrap_or_else(|| "-".into()),
        );
        out
    }
}

// ---------------------------------------------------------------------------
// report (full pipeline)
// ---------------------------------------------------------------------------

#[derive(Debug, Clone, Serialize)]
pub struct OverallRow {
    pub system: String,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub bleu: Option<f64>,
    pub hter: f64,
    pub mter: f64,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub krs: Option<f64>,
}

#[derive(Debug, Clone, Serialize)]
pub struct SigMatrixEntry {
    pub metric: String,
    pub system_a: String,
    pub system_b: String,
    pub statistic: f64,
    pub p_value: f64,
    pub significant: bool,
}

/// Every component the report's aggregates derive from, keyed by system:
/// enough to recompute each corpus number from the JSON alone.
#[derive(Debug, Clone, Serialize)]
pub struct PerSegmentData {
    pub source_lengths: Vec<usize>,
    pub hter: BTreeMap<String, Vec<SegmentStat>>,
    pub mter: BTreeMap<String, Vec<SegmentStat>>,
    pub noshift_word: BTreeMap<String, Vec<SegmentStat>>,
    pub noshift_lemma: BTreeMap<String, Vec<SegmentStat>>,
    pub krs: BTreeMap<String, Vec<Option<f64>>>,
    pub bleu: BTreeMap<String, Vec<BleuSegment>>,
    pub shift_blocks: BTreeMap<String, Vec<BlockRecord>>,
}

#[derive(Debug, Clone, Serialize)]
pub struct RunReport {
    pub meta: ReportMeta,
    pub focal: String,
    pub baseline: String,
    pub doc_spans: Vec<crate::manifest::DocSpan>,
    pub overall: Vec<OverallRow>,
    pub errors: Vec<ErrorProfile>,
    pub shift_classes: ReductionTable,
    pub bins: Vec<SystemBins>,
    pub docs: DocScores,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub correlation: Option<Correlation>,
    pub significance: Vec<SigMatrixEntry>,
    pub per_segment: PerSegmentData,
}

/// Full pipeline over one manifest. When focal/baseline are not given, the
/// lowest-HTER system is focal and the best of the rest is baseline.
pub fn cmd_report(
    run: &LoadedRun,
    focal: Option<&str>,
    baseline: Option<&str>,
    alpha: f64,
) -> Result<RunReport> {
    if run.systems.len() < 2 {
        return Err(Error::Precondition(
            "full report needs at least two systems".into(),
        ));
    }
    let cfg = &run.config;
    let hters = hter_all(run)?;
    let mters = mter_all(run)?;
    let have_align = run.systems.iter().all(|s| s.has_alignments());
    let krs = if have_align {
        Some(krs_all(run)?)
    } else {
        None
    };
    let bleu = match &run.reference {
        Some(_) => Some(bleu_all(run)?),
        None => None,
    };

    let pick_min = |scores: &[MetricScore], skip: Option<&str>| -> String {
        scores
            .iter()
            .filter(|s| Some(s.system.as_str()) != skip)
            .min_by(|a, b| a.corpus_value.partial_cmp(&b.corpus_value).unwrap())
            .expect("at least two systems")
            .system
            .clone()
    };
    let focal = match focal {
        Some(f) => {
            run.system(f)?;
            f.to_string()
        }
        None => pick_min(&hters, None),
    };
    let baseline = match baseline {
        Some(b) => {
            run.system(b)?;
            b.to_string()
        }
        None => pick_min(&hters, Some(&focal)),
    };

    let overall: Vec<OverallRow> = run
        .systems
        .iter()
        .enumerate()
        .map(|(i, s)| OverallRow {
            system: s.name.clone(),
            bleu: bleu.as_ref().map(|v| v[i].value),
            hter: hters[i].corpus_value,
            mter: mters[i].corpus_value,
            krs: krs.as_ref().map(|v| v[i].corpus_value),
        })
        .collect();

    let errors = profile::profile_errors(run, cfg)?;
    let (table, blocks) = shift_table(run)?;
    let shift_classes = profile::reduction_table(&table, &focal, &baseline, 10)?;
    let noshift = |compare_on| -> Result<Vec<MetricScore>> {
        run.systems
            .iter()
            .map(|s| metrics::hter_noshift(&s.name, &s.output, &s.postedit, compare_on, &cfg.ter))
            .collect()
    };
    let noshift_word = noshift(crate::config::CompareOn::Surface)?;
    let noshift_lemma = noshift(crate::config::CompareOn::Lemma)?;

    let lengths: Vec<usize> = run.source.iter().map(|s| s.len()).collect();
    let mut bins = Vec::new();
    for score in &mters {
        let per_segment: Vec<f64> = score
            .per_segment
            .iter()
            .map(|s| 100.0 * s.num / s.den)
            .collect();
        bins.push(SystemBins {
            system: score.system.clone(),
            bins: profile::bin_by_length(&per_segment, &lengths, &cfg.bins)?,
        });
    }

    let mut docs = profile::doc_breakdown(run, &mters, &focal, cfg)?;
    let fi = docs
        .systems
        .iter()
        .position(|s| *s == focal)
        .expect("focal checked");
    docs.docs.sort_by(|a, b| {
        a.mter[fi]
            .partial_cmp(&b.mter[fi])
            .unwrap()
            .then_with(|| a.doc_id.cmp(&b.doc_id))
    });
    let correlation = docs.pearson_r.map(|r| Correlation {
        r,
        n: docs.docs.len(),
    });

    // pairwise one-sided tests: every ordered system pair
    let mut significance = Vec::new();
    let names = run.system_names();
    for &a in &names {
        for &b in &names {
            if a == b {
                continue;
            }
            let find = |scores: &[MetricScore], name: &str| -> Vec<(f64, f64)> {
                ratio_stats(scores.iter().find(|s| s.system == name).expect("present"))
            };
            for (metric, scores) in [("hter", &hters), ("mter", &mters)] {
                let r = stats::paired_bootstrap(
                    &find(scores, a),
                    &find(scores, b),
                    cfg.bootstrap_iterations,
                    cfg.seed,
                )?;
                significance.push(SigMatrixEntry {
                    metric: metric.into(),
                    system_a: a.into(),
                    system_b: b.into(),
                    statistic: r.statistic,
                    p_value: r.p_value,
                    significant: r.p_value < alpha,
                });
            }
            if let Some(krs) = &krs {
                let ka = krs.iter().find(|r| r.system == a).expect("present");
                let kb = krs.iter().find(|r| r.system == b).expect("present");
                let mut xs = Vec::new();
                let mut ys = Vec::new();
                for (va, vb) in ka.per_segment.iter().zip(&kb.per_segment) {
                    if let (Some(x), Some(y)) = (va, vb) {
                        xs.push(*x);
                        ys.push(*y);
                    }
                }
                let r =
                    stats::approx_randomization(&xs, &ys, cfg.randomization_iterations, cfg.seed)?;
                significance.push(SigMatrixEntry {
                    metric: "krs".into(),
                    system_a: a.into(),
                    system_b: b.into(),
                    statistic: r.statistic,
                    p_value: r.p_value,
                    significant: r.p_value < alpha,
                });
            }
        }
    }

    let by_system = |scores: Vec<MetricScore>| -> BTreeMap<String, Vec<SegmentStat>> {
        scores
            .into_iter()
            .map(|s| (s.system, s.per_segment))
            .collect()
    };
    let per_segment = PerSegmentData {
        source_lengths: run.source.iter().map(|s| s.len()).collect(),
        hter: hters
            .iter()
            .map(|s| (s.system.clone(), s.per_segment.clone()))
            .collect(),
        mter: mters
            .iter()
            .map(|s| (s.system.clone(), s.per_segment.clone()))
            .collect(),
        noshift_word: by_system(noshift_word),
        noshift_lemma: by_system(noshift_lemma),
        krs: krs
            .map(|v| v.into_iter().map(|r| (r.system, r.per_segment)).collect())
            .unwrap_or_default(),
        bleu: bleu
            .map(|v| v.into_iter().map(|b| (b.system, b.per_segment)).collect())
            .unwrap_or_default(),
        shift_blocks: blocks,
    };

    Ok(RunReport {
        meta: ReportMeta::new(run, "report"),
        focal,
        baseline,
        doc_spans: run.docs.clone(),
        overall,
        errors,
        shift_classes,
        bins,
        docs,
        correlation,
        significance,
        per_segment,
    })
}

impl RunReport {
    pub fn to_tsv(&self) -> String {
        let mut out = String::from("system\tbleu\thter\tmter\tkrs\n");
        for r in &self.overall {
            let _ = writeln!(
                out,
                "{}\t{}\t{}\t{}\t{}",
                r.system,
                opt1(r.bleu),
                fmt1(r.hter),
                fmt1(r.mter),
                opt1(r.krs),
            );
        }
        out
    }
}

/// Serialize any report to its canonical JSON form (pretty, stable field
/// order, trailing newline).
pub fn to_json<T: Serialize>(report: &T) -> String {
    let mut s = serde_json::to_string_pretty(report).expect("reports always serialize");
    s.push('\n');
    s
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::manifest::load_manifest;
    use crate::synth::{write_toy_corpus, ToySpec};

    fn toy_run() -> (tempfile::TempDir, LoadedRun) {
        let dir = tempfile::tempdir().unwrap();
        let spec = ToySpec {
            segments: 16,
            docs: 4,
            ..ToySpec::default()
        };
        let mp = write_toy_corpus(dir.path(), &spec).unwrap();
        let run = load_manifest(&mp).unwrap();
        (dir, run)
    }

    #[test]
    fn score_hter_and_mter_dominance() {
        let (_d, run) = toy_run();
        let h = cmd_score(&run, MetricKind::Hter).unwrap();
        let m = cmd_score(&run, MetricKind::Mter).unwrap();
        let hr = h.ratio.unwrap();
        let mr = m.ratio.unwrap();
        for (a, b) in hr.iter().zip(&mr) {
            assert_eq!(a.system, b.system);
            // min over a superset of references can't have more edits
            assert!(b.num <= a.num, "{}: {} > {}", a.system, b.num, a.num);
        }
    }

    #[test]
    fn score_bleu_and_krs() {
        let (_d, run) = toy_run();
        let b = cmd_score(&run, MetricKind::Bleu).unwrap();
        for row in b.bleu.unwrap() {
            assert!(row.value > 0.0 && row.value <= 100.0);
        }
        let k = cmd_score(&run, MetricKind::Krs).unwrap();
        for row in k.krs.unwrap() {
            assert!(row.corpus_value >= 0.0 && row.corpus_value <= 100.0);
        }
    }

    #[test]
    fn errors_self_check_is_exact() {
        let (_d, run) = toy_run();
        let e = cmd_errors(&run).unwrap();
        assert!(e.self_check.morph_delta_max_abs_diff < 1e-12);
        assert!(e.self_check.shift_pct_max_abs_diff < 1e-12);
        assert_eq!(e.profiles.len(), 4);
    }

    #[test]
    fn shifts_report_has_all_row() {
        let (_d, run) = toy_run();
        let s = cmd_shifts(&run, "delta", "alpha", 1).unwrap();
        assert_eq!(s.table.all_row.key, "all");
        let tsv = s.to_tsv();
        assert!(tsv.lines().last().unwrap().starts_with("all\t"));
        // a threshold above every count leaves only the all row
        let s = cmd_shifts(&run, "delta", "alpha", 1_000_000).unwrap();
        assert!(s.table.pos_rows.is_empty());
        assert!(s.table.dep_rows.is_empty());
        assert_eq!(s.to_tsv().lines().count(), 2);
    }

    #[test]
    fn shifts_unknown_system_is_input_error() {
        let (_d, run) = toy_run();
        let err = cmd_shifts(&run, "nope", "alpha", 10).unwrap_err();
        assert_eq!(err.exit_code(), 2);
    }

    #[test]
    fn breakdown_sorted_by_focal() {
        let (_d, run) = toy_run();
        let b = cmd_breakdown(&run, "delta").unwrap();
        let fi = b.docs.systems.iter().position(|s| s == "delta").unwrap();
        let focal_scores: Vec<f64> = b.docs.docs.iter().map(|d| d.mter[fi]).collect();
        assert!(focal_scores.windows(2).all(|w| w[0] <= w[1]));
        let csv = b.bins_csv();
        assert!(csv.starts_with("bin_lo,bin_hi,n,system,mter\n"));
    }

    #[test]
    fn sigtest_same_system_is_one() {
        let (_d, run) = toy_run();
        let r = cmd_sigtest(
            &run,
            SigTestKind::Bootstrap,
            "alpha",
            "alpha",
            MetricKind::Hter,
            0.01,
        )
        .unwrap();
        assert_eq!(r.result.p_value, 1.0);
    }

    #[test]
    fn report_is_deterministic() {
        let (_d, run) = toy_run();
        let r1 = cmd_report(&run, None, None, 0.01).unwrap();
        let r2 = cmd_report(&run, None, None, 0.01).unwrap();
        assert_eq!(to_json(&r1), to_json(&r2));
        // delta is the cleanest system; it should come out focal
        assert_eq!(r1.focal, "delta");
        assert!(!r1.significance.is_empty());
    }

    #[test]
    fn report_aggregates_recompute_from_per_segment_data() {
        let (_d, run) = toy_run();
        let r = cmd_report(&run, None, None, 0.01).unwrap();
        for row in &r.overall {
            let ratio = |stats: &Vec<SegmentStat>| -> f64 {
                let num: f64 = stats.iter().map(|s| s.num).sum();
                let den: f64 = stats.iter().map(|s| s.den).sum();
                100.0 * num / den
            };
            assert!((ratio(&r.per_segment.hter[&row.system]) - row.hter).abs() < 1e-9);
            assert!((ratio(&r.per_segment.mter[&row.system]) - row.mter).abs() < 1e-9);
            if let Some(bleu) = row.bleu {
                let recomputed = metrics::bleu_from_counts(
                    &r.per_segment.bleu[&row.system],
                    run.config.bleu_max_n,
                    run.config.bleu_epsilon,
                );
                assert!((recomputed - bleu).abs() < 1e-9);
            }
            if let Some(krs) = row.krs {
                let vals: Vec<f64> = r.per_segment.krs[&row.system]
                    .iter()
                    .flatten()
                    .copied()
                    .collect();
                let mean = 100.0 * vals.iter().sum::<f64>() / vals.len() as f64;
                assert!((mean - krs).abs() < 1e-9);
            }
        }
        // error profiles recompute from the embedded no-shift stats and blocks
        for p in &r.errors {
            let ratio = |stats: &Vec<SegmentStat>| -> f64 {
                let num: f64 = stats.iter().map(|s| s.num).sum();
                let den: f64 = stats.iter().map(|s| s.den).sum();
                100.0 * num / den
            };
            assert!((ratio(&r.per_segment.noshift_word[&p.system]) - p.word_noshift).abs() < 1e-9);
            assert!(
                (ratio(&r.per_segment.noshift_lemma[&p.system]) - p.lemma_noshift).abs() < 1e-9
            );
            let blocks = &r.per_segment.shift_blocks[&p.system];
            assert_eq!(blocks.len() as u64, p.shift_count);
        }
        // bins recompute from per-segment mter and source lengths
        for sb in &r.bins {
            let scores: Vec<f64> = r.per_segment.mter[&sb.system]
                .iter()
                .map(|s| 100.0 * s.num / s.den)
                .collect();
            let again =
                profile::bin_by_length(&scores, &r.per_segment.source_lengths, &run.config.bins)
                    .unwrap();
            assert_eq!(to_json(&again), to_json(&sb.bins));
        }
    }
}
