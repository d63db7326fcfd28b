//! Property tests over the parsing and scoring invariants.

mod common;

use std::path::Path;

use edit_lens::config::{CompareOn, TerConfig};
use edit_lens::corpus::{parse_segments, to_plain, Segment, SegmentFormat, Token};
use edit_lens::metrics;
use edit_lens::ter::{ter_align_tokens, EditOp};
use proptest::prelude::*;

fn token_strat() -> impl Strategy<Value = String> {
    // small vocabulary plus punctuation so strip/shift paths get exercised
    prop_oneof![
        4 => prop::sample::select(vec!["der", "hund", "katze", "sieht", "heute", "haus", "und"]),
        1 => prop::sample::select(vec![".", ",", "!"]),
    ]
    .prop_map(str::to_string)
}

fn seq_strat(max_len: usize) -> impl Strategy<Value = Vec<String>> {
    prop::collection::vec(token_strat(), 0..=max_len)
}

fn to_segment(tokens: &[String]) -> Segment {
    Segment::from_tokens(0, tokens.iter().map(|t| Token::new(t.as_str())).collect())
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(128))]

    #[test]
    fn plain_round_trip(lines in prop::collection::vec(seq_strat(8), 1..6)) {
        // at least one token somewhere so the file is not empty
        prop_assume!(lines.iter().any(|l| !l.is_empty()));
        let segments: Vec<Segment> = lines
            .iter()
            .enumerate()
            .map(|(i, l)| Segment { id: i, ..to_segment(l) })
            .collect();
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("corpus.txt");
        std::fs::write(&path, to_plain(&segments)).unwrap();
        let reparsed = parse_segments(Path::new(&path), SegmentFormat::Plain).unwrap();
        prop_assert_eq!(reparsed.len(), segments.len());
        for (a, b) in reparsed.iter().zip(&segments) {
            prop_assert_eq!(a.surfaces(), b.surfaces());
        }
    }

    #[test]
    fn ter_self_alignment_is_zero(tokens in seq_strat(10)) {
        prop_assume!(!tokens.is_empty());
        let a = ter_align_tokens(&tokens, &tokens, &TerConfig::default()).unwrap();
        prop_assert_eq!(a.edits, 0);
        prop_assert!(a.trace.shifts.is_empty());
    }

    #[test]
    fn ter_bounded_by_levenshtein(hyp in seq_strat(9), rf in seq_strat(9)) {
        prop_assume!(!rf.is_empty());
        // injective token -> byte encoding for the reference Levenshtein
        let vocab = ["der", "hund", "katze", "sieht", "heute", "haus", "und", ".", ",", "!"];
        let code = |t: &String| vocab.iter().position(|v| v == t).unwrap() as u8;
        let hb: Vec<u8> = hyp.iter().map(code).collect();
        let rb: Vec<u8> = rf.iter().map(code).collect();
        let lev = common::lev(&hb, &rb);
        for shift_cost in [1u8, 0] {
            let cfg = TerConfig { shift_cost, ..TerConfig::default() };
            let a = ter_align_tokens(&hyp, &rf, &cfg).unwrap();
            prop_assert!(a.edits <= lev, "edits {} > lev {}", a.edits, lev);
        }
    }

    #[test]
    fn ter_replay_reaches_reference(hyp in seq_strat(9), rf in seq_strat(9)) {
        prop_assume!(!rf.is_empty());
        for shift_cost in [1u8, 0] {
            let cfg = TerConfig { shift_cost, ..TerConfig::default() };
            let a = ter_align_tokens(&hyp, &rf, &cfg).unwrap();
            let mut cur = hyp.clone();
            for s in &a.trace.shifts {
                prop_assert_eq!(&cur, &s.before);
                let block: Vec<String> = cur.drain(s.hyp_start..s.hyp_start + s.len).collect();
                let at = (s.hyp_start as isize + s.distance) as usize;
                for (k, b) in block.into_iter().enumerate() {
                    cur.insert(at + k, b);
                }
            }
            let mut rebuilt = Vec::new();
            for op in &a.trace.ops {
                match op {
                    EditOp::Match { hyp, .. } => rebuilt.push(cur[*hyp].clone()),
                    EditOp::Substitute { ref_pos, .. } | EditOp::Insert { ref_pos } => {
                        rebuilt.push(rf[*ref_pos].clone())
                    }
                    EditOp::Delete { .. } | EditOp::Shift { .. } => {}
                }
            }
            prop_assert_eq!(rebuilt, rf.clone());
        }
    }

    #[test]
    fn noshift_word_never_below_lemma(
        surfaces in prop::collection::vec(prop::sample::select(vec!["hund", "hunde", "katze", "katzen", "sieht", "sehen"]), 1..8),
        ref_surfaces in prop::collection::vec(prop::sample::select(vec!["hund", "hunde", "katze", "katzen", "sieht", "sehen"]), 1..8),
    ) {
        // lemma projection merges inflected variants
        let lemma_of = |s: &str| match s {
            "hund" | "hunde" => "hund",
            "katze" | "katzen" => "katze",
            _ => "sehen",
        };
        let annotate = |words: &[&str]| -> Segment {
            let tokens = words
                .iter()
                .map(|w| {
                    let mut t = Token::new(*w);
                    t.lemma = Some(lemma_of(w).to_string());
                    t
                })
                .collect();
            Segment::from_tokens(0, tokens)
        };
        let out = [annotate(&surfaces)];
        let pe = [annotate(&ref_surfaces)];
        let word = metrics::hter_noshift("s", &out, &pe, CompareOn::Surface, &TerConfig::default()).unwrap();
        let lemma = metrics::hter_noshift("s", &out, &pe, CompareOn::Lemma, &TerConfig::default()).unwrap();
        prop_assert!(lemma.total_num() <= word.total_num(),
            "lemma edits {} > word edits {}", lemma.total_num(), word.total_num());
    }

    #[test]
    fn metrics_permutation_invariant_over_segment_order(
        pairs in prop::collection::vec((seq_strat(6), seq_strat(6)), 2..8),
    ) {
        let pairs: Vec<(Vec<String>, Vec<String>)> = pairs
            .into_iter()
            .filter(|(_, r)| !r.is_empty())
            .collect();
        prop_assume!(pairs.len() >= 2);
        let outs: Vec<Segment> = pairs.iter().map(|(h, _)| to_segment(h)).collect();
        let pes: Vec<Segment> = pairs.iter().map(|(_, r)| to_segment(r)).collect();
        let cfg = TerConfig::default();
        let fwd = metrics::hter("s", &outs, &pes, &cfg).unwrap();
        let mut outs_rev = outs.clone();
        let mut pes_rev = pes.clone();
        outs_rev.reverse();
        pes_rev.reverse();
        let rev = metrics::hter("s", &outs_rev, &pes_rev, &cfg).unwrap();
        prop_assert_eq!(fwd.corpus_value.to_bits(), rev.corpus_value.to_bits());

        if outs.iter().all(|s| !s.is_empty()) {
            let b1 = metrics::corpus_bleu(&outs, &pes, 4, 1e-9, false).unwrap();
            let b2 = metrics::corpus_bleu(&outs_rev, &pes_rev, 4, 1e-9, false).unwrap();
            prop_assert!((b1 - b2).abs() < 1e-9);
        }
    }

    #[test]
    fn strip_punct_never_hurts_punct_only_differences(
        words in prop::collection::vec(prop::sample::select(vec!["der", "hund", "sieht"]), 1..6),
        punct_positions in prop::collection::vec(0usize..6, 0..3),
    ) {
        // hyp and ref share words, differ only in sprinkled punctuation
        let mut hyp: Vec<String> = words.iter().map(|s| s.to_string()).collect();
        let rf = hyp.clone();
        for (k, p) in punct_positions.iter().enumerate() {
            let at = (*p).min(hyp.len());
            hyp.insert(at, if k % 2 == 0 { ".".into() } else { ",".into() });
        }
        let strip = TerConfig { strip_punct: true, ..TerConfig::default() };
        let keep = TerConfig::default();
        // normalization lives on the segment-level entry point
        let hyp_seg = to_segment(&hyp);
        let rf_seg = to_segment(&rf);
        let stripped = edit_lens::ter::ter_align(&hyp_seg, &rf_seg, &strip).unwrap().edits;
        let kept = edit_lens::ter::ter_align(&hyp_seg, &rf_seg, &keep).unwrap().edits;
        prop_assert_eq!(stripped, 0);
        prop_assert!(stripped <= kept);
    }
}
