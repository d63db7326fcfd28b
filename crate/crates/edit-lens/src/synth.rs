//! Deterministic synthetic corpus generator.
//!
//! Produces a small evaluation run — source, annotated MT outputs and
//! post-edits, word alignments, an independent reference and a manifest —
//! with per-system error rates, so the whole pipeline can be exercised
//! end to end without real data. Output is a pure function of
//! [`ToySpec`]: same spec, byte-identical files.

use std::fmt::Write as _;
use std::path::{Path, PathBuf};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

struct LexEntry {
    lemma: &'static str,
    pos: &'static str,
    deps: &'static [&'static str],
    forms: &'static [&'static str],
    gloss: &'static str,
}

const LEXICON: &[LexEntry] = &[
    LexEntry {
        lemma: "hund",
        pos: "N",
        deps: &["subj", "obja", "pn"],
        forms: &["hund", "hunde", "hundes"],
        gloss: "dog",
    },
    LexEntry {
        lemma: "katze",
        pos: "N",
        deps: &["subj", "obja", "pn"],
        forms: &["katze", "katzen"],
        gloss: "cat",
    },
    LexEntry {
        lemma: "haus",
        pos: "N",
        deps: &["subj", "obja", "pn"],
        forms: &["haus", "hauses", "hausern"],
        gloss: "house",
    },
    LexEntry {
        lemma: "kind",
        pos: "N",
        deps: &["subj", "obja", "pn"],
        forms: &["kind", "kinder", "kindes"],
        gloss: "child",
    },
    LexEntry {
        lemma: "stadt",
        pos: "N",
        deps: &["subj", "obja", "pn"],
        forms: &["stadt", "stadte"],
        gloss: "city",
    },
    LexEntry {
        lemma: "jahr",
        pos: "N",
        deps: &["subj", "obja", "pn"],
        forms: &["jahr", "jahre", "jahren"],
        gloss: "year",
    },
    LexEntry {
        lemma: "zeit",
        pos: "N",
        deps: &["subj", "obja", "pn"],
        forms: &["zeit", "zeiten"],
        gloss: "time",
    },
    LexEntry {
        lemma: "sehen",
        pos: "V",
        deps: &["root", "aux", "neb", "objc", "cj"],
        forms: &["sehen", "sieht", "sah", "gesehen"],
        gloss: "see",
    },
    LexEntry {
        lemma: "gehen",
        pos: "V",
        deps: &["root", "aux", "neb", "objc", "cj"],
        forms: &["gehen", "geht", "ging", "gegangen"],
        gloss: "go",
    },
    LexEntry {
        lemma: "spielen",
        pos: "V",
        deps: &["root", "aux", "neb", "cj"],
        forms: &["spielen", "spielt", "spielte", "gespielt"],
        gloss: "play",
    },
    LexEntry {
        lemma: "machen",
        pos: "V",
        deps: &["root", "aux", "neb", "cj"],
        forms: &["machen", "macht", "machte", "gemacht"],
        gloss: "make",
    },
    LexEntry {
        lemma: "wissen",
        pos: "V",
        deps: &["root", "neb", "objc"],
        forms: &["wissen", "weiss", "wusste", "gewusst"],
        gloss: "know",
    },
    LexEntry {
        lemma: "kommen",
        pos: "V",
        deps: &["root", "aux", "neb", "cj"],
        forms: &["kommen", "kommt", "kam", "gekommen"],
        gloss: "come",
    },
    LexEntry {
        lemma: "der",
        pos: "ART",
        deps: &["det"],
        forms: &["der", "die", "das", "den", "dem"],
        gloss: "the",
    },
    LexEntry {
        lemma: "ein",
        pos: "ART",
        deps: &["det"],
        forms: &["ein", "eine", "einen", "einem"],
        gloss: "a",
    },
    LexEntry {
        lemma: "er",
        pos: "PRO",
        deps: &["subj", "obja"],
        forms: &["er", "sie", "es", "ihn"],
        gloss: "he",
    },
    LexEntry {
        lemma: "wir",
        pos: "PRO",
        deps: &["subj", "obja"],
        forms: &["wir", "uns"],
        gloss: "we",
    },
    LexEntry {
        lemma: "schnell",
        pos: "ADV",
        deps: &["adv"],
        forms: &["schnell", "schneller"],
        gloss: "quickly",
    },
    LexEntry {
        lemma: "oft",
        pos: "ADV",
        deps: &["adv"],
        forms: &["oft"],
        gloss: "often",
    },
    LexEntry {
        lemma: "heute",
        pos: "ADV",
        deps: &["adv"],
        forms: &["heute"],
        gloss: "today",
    },
    LexEntry {
        lemma: "hier",
        pos: "ADV",
        deps: &["adv"],
        forms: &["hier"],
        gloss: "here",
    },
    LexEntry {
        lemma: "in",
        pos: "PREP",
        deps: &["pp"],
        forms: &["in", "im"],
        gloss: "in",
    },
    LexEntry {
        lemma: "auf",
        pos: "PREP",
        deps: &["pp"],
        forms: &["auf"],
        gloss: "on",
    },
    LexEntry {
        lemma: "mit",
        pos: "PREP",
        deps: &["pp"],
        forms: &["mit"],
        gloss: "with",
    },
    LexEntry {
        lemma: "und",
        pos: "KON",
        deps: &["kon"],
        forms: &["und"],
        gloss: "and",
    },
    LexEntry {
        lemma: "aber",
        pos: "KON",
        deps: &["kon"],
        forms: &["aber"],
        gloss: "but",
    },
    LexEntry {
        lemma: "nicht",
        pos: "PTKNEG",
        deps: &["adv"],
        forms: &["nicht"],
        gloss: "not",
    },
    LexEntry {
        lemma: "zu",
        pos: "PTKZU",
        deps: &["part"],
        forms: &["zu"],
        gloss: "to",
    },
];

const PUNCT_FORMS: &[&str] = &[".", ",", "!", "?"];

/// Per-system perturbation rates.
#[derive(Debug, Clone, Copy)]
pub struct NoiseProfile {
    pub substitute: f64,
    pub inflect: f64,
    pub shift: f64,
    pub delete: f64,
    pub insert: f64,
}

/// Shape of the generated corpus.
#[derive(Debug, Clone)]
pub struct ToySpec {
    pub segments: usize,
    pub docs: usize,
    pub seed: u64,
    /// (system name, noise rates); later entries are cleaner by default.
    pub systems: Vec<(String, NoiseProfile)>,
}

impl Default for ToySpec {
    fn default() -> ToySpec {
        ToySpec {
            segments: 50,
            docs: 5,
            seed: 7,
            systems: vec![
                (
                    "alpha".into(),
                    NoiseProfile {
                        substitute: 0.11,
                        inflect: 0.09,
                        shift: 0.050,
                        delete: 0.03,
                        insert: 0.03,
                    },
                ),
                (
                    "beta".into(),
                    NoiseProfile {
                        substitute: 0.13,
                        inflect: 0.10,
                        shift: 0.060,
                        delete: 0.03,
                        insert: 0.03,
                    },
                ),
                (
                    "gamma".into(),
                    NoiseProfile {
                        substitute: 0.12,
                        inflect: 0.09,
                        shift: 0.055,
                        delete: 0.03,
                        insert: 0.03,
                    },
                ),
                (
                    "delta".into(),
                    NoiseProfile {
                        substitute: 0.06,
                        inflect: 0.04,
                        shift: 0.015,
                        delete: 0.02,
                        insert: 0.02,
                    },
                ),
            ],
        }
    }
}

#[derive(Clone)]
struct TargetToken {
    entry: usize, // usize::MAX for punctuation
    form: String,
    dep: &'static str,
}

#[derive(Clone)]
struct MtToken {
    entry: usize,
    form: String,
    dep: &'static str,
    target_pos: Option<usize>,
}

struct SegmentData {
    target: Vec<TargetToken>,
    source: Vec<String>,
    /// (source index, target index)
    src_tgt: Vec<(usize, usize)>,
}

fn pick_entry(rng: &mut ChaCha8Rng) -> usize {
    rng.gen_range(0..LEXICON.len())
}

fn pick_form(rng: &mut ChaCha8Rng, entry: usize) -> String {
    let forms = LEXICON[entry].forms;
    forms[rng.gen_range(0..forms.len())].to_string()
}

fn pick_dep(rng: &mut ChaCha8Rng, entry: usize) -> &'static str {
    let deps = LEXICON[entry].deps;
    deps[rng.gen_range(0..deps.len())]
}

fn gen_segment(rng: &mut ChaCha8Rng) -> SegmentData {
    // length blend fills all four default bins
    let len = match rng.gen_range(0..10) {
        0..=3 => rng.gen_range(3..=15),
        4..=6 => rng.gen_range(16..=25),
        7..=8 => rng.gen_range(26..=35),
        _ => rng.gen_range(36..=45),
    };
    let mut target = Vec::with_capacity(len);
    for k in 0..len {
        if k + 1 == len {
            target.push(TargetToken {
                entry: usize::MAX,
                form: ".".into(),
                dep: "punct",
            });
        } else if k > 0 && rng.gen_bool(0.05) {
            let form = PUNCT_FORMS[rng.gen_range(0..PUNCT_FORMS.len())].to_string();
            target.push(TargetToken {
                entry: usize::MAX,
                form,
                dep: "punct",
            });
        } else {
            let entry = pick_entry(rng);
            target.push(TargetToken {
                entry,
                form: pick_form(rng, entry),
                dep: pick_dep(rng, entry),
            });
        }
    }

    // source mirrors the target with a few local block swaps
    let mut order: Vec<usize> = (0..target.len()).collect();
    let swaps = target.len() / 6;
    for _ in 0..swaps {
        if target.len() < 4 {
            break;
        }
        let a = rng.gen_range(0..target.len() - 2);
        let w = rng.gen_range(1..=2.min(target.len() - a - 1));
        let b = (a + w + rng.gen_range(0..3)).min(target.len() - 1);
        let block: Vec<usize> = order.drain(a..a + w).collect();
        let at = b.min(order.len());
        for (k, x) in block.into_iter().enumerate() {
            order.insert((at + k).min(order.len()), x);
        }
    }
    let mut source = Vec::with_capacity(order.len());
    let mut src_tgt = Vec::new();
    for (s, &t) in order.iter().enumerate() {
        let tok = &target[t];
        let word = if tok.entry == usize::MAX {
            tok.form.clone()
        } else {
            LEXICON[tok.entry].gloss.to_string()
        };
        source.push(word);
        if !rng.gen_bool(0.05) {
            src_tgt.push((s, t));
        }
    }
    src_tgt.sort_unstable();
    SegmentData {
        target,
        source,
        src_tgt,
    }
}

fn perturb(rng: &mut ChaCha8Rng, seg: &SegmentData, noise: &NoiseProfile) -> Vec<MtToken> {
    let mut out: Vec<MtToken> = seg
        .target
        .iter()
        .enumerate()
        .map(|(t, tok)| MtToken {
            entry: tok.entry,
            form: tok.form.clone(),
            dep: tok.dep,
            target_pos: Some(t),
        })
        .collect();

    for tok in out.iter_mut() {
        if tok.entry == usize::MAX {
            continue;
        }
        if rng.gen_bool(noise.substitute) {
            let entry = pick_entry(rng);
            tok.entry = entry;
            tok.form = pick_form(rng, entry);
            tok.dep = pick_dep(rng, entry);
        } else if rng.gen_bool(noise.inflect) {
            tok.form = pick_form(rng, tok.entry);
        }
    }
    // deletions, back to front so indices stay valid
    for i in (0..out.len()).rev() {
        if out.len() > 2 && rng.gen_bool(noise.delete) {
            out.remove(i);
        }
    }
    // insertions
    let inserts = (out.len() as f64 * noise.insert).round() as usize;
    for _ in 0..inserts {
        let entry = pick_entry(rng);
        let at = rng.gen_range(0..=out.len());
        out.insert(
            at,
            MtToken {
                entry,
                form: pick_form(rng, entry),
                dep: pick_dep(rng, entry),
                target_pos: None,
            },
        );
    }
    // block moves
    let moves = (out.len() as f64 * noise.shift).round() as usize;
    for _ in 0..moves {
        if out.len() < 3 {
            break;
        }
        let len = rng.gen_range(1..=3.min(out.len() - 1));
        let start = rng.gen_range(0..=out.len() - len);
        let block: Vec<MtToken> = out.drain(start..start + len).collect();
        let at = rng.gen_range(0..=out.len());
        for (k, tok) in block.into_iter().enumerate() {
            out.insert(at + k, tok);
        }
    }
    out
}

fn conllu_block(out: &mut String, tokens: &[(String, Option<usize>, &str)]) {
    // (form, entry, dep)
    for (i, (form, entry, dep)) in tokens.iter().enumerate() {
        let (lemma, pos) = match entry {
            Some(e) => (LEXICON[*e].lemma, LEXICON[*e].pos),
            None => ("_", "PUNCT"),
        };
        let dep = if entry.is_none() { "punct" } else { dep };
        let _ = writeln!(
            out,
            "{}\t{}\t{}\t{}\t_\t_\t_\t{}",
            i + 1,
            form,
            lemma,
            pos,
            dep
        );
    }
    out.push('\n');
}

/// Write the corpus under `dir` and return the manifest path.
pub fn write_toy_corpus(dir: &Path, spec: &ToySpec) -> std::io::Result<PathBuf> {
    std::fs::create_dir_all(dir)?;
    let mut rng = ChaCha8Rng::seed_from_u64(spec.seed);
    let segments: Vec<SegmentData> = (0..spec.segments).map(|_| gen_segment(&mut rng)).collect();

    // source and independent reference
    let mut source_txt = String::new();
    let mut reference_txt = String::new();
    for seg in &segments {
        source_txt.push_str(&seg.source.join(" "));
        source_txt.push('\n');
        let light = NoiseProfile {
            substitute: 0.05,
            inflect: 0.05,
            shift: 0.01,
            delete: 0.0,
            insert: 0.0,
        };
        let ref_tokens = perturb(&mut rng, seg, &light);
        let words: Vec<&str> = ref_tokens.iter().map(|t| t.form.as_str()).collect();
        reference_txt.push_str(&words.join(" "));
        reference_txt.push('\n');
    }
    std::fs::write(dir.join("source.txt"), source_txt)?;
    std::fs::write(dir.join("reference.txt"), reference_txt)?;

    for (name, noise) in &spec.systems {
        let mut out_conllu = String::new();
        let mut pe_conllu = String::new();
        let mut sm_align = String::new();
        let mut sp_align = String::new();
        for seg in &segments {
            let mt = perturb(&mut rng, seg, noise);
            let rows: Vec<(String, Option<usize>, &str)> = mt
                .iter()
                .map(|t| {
                    (
                        t.form.clone(),
                        (t.entry != usize::MAX).then_some(t.entry),
                        t.dep,
                    )
                })
                .collect();
            conllu_block(&mut out_conllu, &rows);
            let rows: Vec<(String, Option<usize>, &str)> = seg
                .target
                .iter()
                .map(|t| {
                    (
                        t.form.clone(),
                        (t.entry != usize::MAX).then_some(t.entry),
                        t.dep,
                    )
                })
                .collect();
            conllu_block(&mut pe_conllu, &rows);

            // src-pe: the generated links; src-mt: links composed through
            // surviving MT tokens
            let links: Vec<String> = seg
                .src_tgt
                .iter()
                .map(|(s, t)| format!("{s}-{t}"))
                .collect();
            sp_align.push_str(&links.join(" "));
            sp_align.push('\n');
            let mut mt_links: Vec<(usize, usize)> = Vec::new();
            for (m, tok) in mt.iter().enumerate() {
                if let Some(t) = tok.target_pos {
                    for &(s, tt) in &seg.src_tgt {
                        if tt == t {
                            mt_links.push((s, m));
                        }
                    }
                }
            }
            mt_links.sort_unstable();
            let links: Vec<String> = mt_links.iter().map(|(s, m)| format!("{s}-{m}")).collect();
            sm_align.push_str(&links.join(" "));
            sm_align.push('\n');
        }
        std::fs::write(dir.join(format!("{name}.out.conllu")), out_conllu)?;
        std::fs::write(dir.join(format!("{name}.pe.conllu")), pe_conllu)?;
        std::fs::write(dir.join(format!("{name}.src-mt.align")), sm_align)?;
        std::fs::write(dir.join(format!("{name}.src-pe.align")), sp_align)?;
    }

    // docs: near-equal contiguous chunks
    let mut manifest = String::new();
    manifest.push_str("schema = 1\nsource = \"source.txt\"\nreference = \"reference.txt\"\n");
    let docs = spec.docs.max(1).min(spec.segments);
    let base = spec.segments / docs;
    let extra = spec.segments % docs;
    let mut first = 0usize;
    for d in 0..docs {
        let len = base + usize::from(d < extra);
        let last = first + len - 1;
        let _ = write!(
            manifest,
            "\n[[docs]]\nid = \"talk-{:02}\"\nfirst = {}\nlast = {}\n",
            d + 1,
            first,
            last
        );
        first = last + 1;
    }
    for (name, _) in &spec.systems {
        let _ = write!(
            manifest,
            "\n[[systems]]\nname = \"{name}\"\noutput = \"{name}.out.conllu\"\npostedit = \"{name}.pe.conllu\"\nalign_src_mt = \"{name}.src-mt.align\"\nalign_src_pe = \"{name}.src-pe.align\"\n"
        );
    }
    let manifest_path = dir.join("eval.toml");
    std::fs::write(&manifest_path, manifest)?;
    Ok(manifest_path)
}
