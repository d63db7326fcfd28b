//! Corpus data model and input-format parsers.
//!
//! Everything downstream operates on pre-tokenized [`Segment`]s; this tool
//! never tokenizes raw text. Three file formats are read here:
//!
//! * plain — one segment per line, tokens separated by whitespace;
//! * CoNLL-subset — blank-line separated blocks of tab-separated rows
//!   `ID FORM LEMMA UPOS XPOS FEATS HEAD DEPREL ...`, of which FORM,
//!   LEMMA, UPOS and DEPREL are consumed;
//! * Pharaoh alignments — one line per segment of 0-based `i-j` links.
//!
//! Parsed structures are immutable afterwards and safe to share across
//! threads.

use std::collections::BTreeSet;
use std::fmt::Write as _;
use std::path::Path;

use serde::Serialize;
use unicode_properties::{GeneralCategoryGroup, UnicodeGeneralCategory};

use crate::error::{Error, Result};

/// One token with optional annotation.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct Token {
    pub surface: String,
    pub lemma: Option<String>,
    pub pos: Option<String>,
    pub dep_label: Option<String>,
    pub is_punct: bool,
}

impl Token {
    pub fn new(surface: impl Into<String>) -> Token {
        let surface = surface.into();
        let is_punct = is_punct_str(&surface, "");
        Token {
            surface,
            lemma: None,
            pos: None,
            dep_label: None,
            is_punct,
        }
    }

    /// Lemma with surface fallback, so unannotated tokens still compare.
    pub fn lemma_or_surface(&self) -> &str {
        self.lemma.as_deref().unwrap_or(&self.surface)
    }
}

/// One tokenized sentence. `id` is the 0-based position in its file.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct Segment {
    pub id: usize,
    pub doc_id: String,
    pub tokens: Vec<Token>,
}

impl Segment {
    pub fn from_tokens(id: usize, tokens: Vec<Token>) -> Segment {
        Segment {
            id,
            doc_id: String::new(),
            tokens,
        }
    }

    pub fn surfaces(&self) -> Vec<&str> {
        self.tokens.iter().map(|t| t.surface.as_str()).collect()
    }

    pub fn len(&self) -> usize {
        self.tokens.len()
    }

    pub fn is_empty(&self) -> bool {
        self.tokens.is_empty()
    }
}

/// Named MT system output.
#[derive(Debug, Clone, Serialize)]
pub struct SystemOutput {
    pub name: String,
    pub segments: Vec<Segment>,
}

/// Word-alignment links for one segment pair, 0-based, duplicates collapsed.
#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize)]
pub struct AlignmentSet {
    pub links: BTreeSet<(usize, usize)>,
}

impl AlignmentSet {
    pub fn from_links(links: impl IntoIterator<Item = (usize, usize)>) -> AlignmentSet {
        AlignmentSet {
            links: links.into_iter().collect(),
        }
    }

    pub fn is_empty(&self) -> bool {
        self.links.is_empty()
    }

    /// Check all indices fall within the given segment lengths. Kept separate
    /// from parsing so alignment files can be read standalone.
    pub fn validate(&self, source_len: usize, target_len: usize) -> Result<()> {
        for &(s, t) in &self.links {
            if s >= source_len || t >= target_len {
                return Err(Error::Precondition(format!(
                    "alignment link {s}-{t} out of range for lengths {source_len}/{target_len}"
                )));
            }
        }
        Ok(())
    }
}

/// True iff every char of `surface` is punctuation: Unicode general
/// categories `P*` plus any configured extra characters.
pub fn is_punct_str(surface: &str, extra: &str) -> bool {
    !surface.is_empty()
        && surface.chars().all(|c| {
            c.general_category_group() == GeneralCategoryGroup::Punctuation || extra.contains(c)
        })
}

/// Input format of a segment file.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SegmentFormat {
    Plain,
    ConlluSubset,
}

impl SegmentFormat {
    /// `.conllu` (or `.conll`) means annotated, anything else plain.
    pub fn from_path(path: &Path) -> SegmentFormat {
        match path.extension().and_then(|e| e.to_str()) {
            Some("conllu") | Some("conll") => SegmentFormat::ConlluSubset,
            _ => SegmentFormat::Plain,
        }
    }
}

/// Parse a segment file in the given format. Segments come back in file
/// order with ids `0..n`.
pub fn parse_segments(path: &Path, format: SegmentFormat) -> Result<Vec<Segment>> {
    let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    match format {
        SegmentFormat::Plain => parse_plain_str(&text, path),
        SegmentFormat::ConlluSubset => parse_conllu_str(&text, path),
    }
}

fn parse_plain_str(text: &str, path: &Path) -> Result<Vec<Segment>> {
    if text.is_empty() {
        return Err(Error::parse(path, 1, "empty file"));
    }
    let mut segments = Vec::new();
    for (id, line) in text.lines().enumerate() {
        let tokens = line.split_whitespace().map(Token::new).collect();
        segments.push(Segment::from_tokens(id, tokens));
    }
    Ok(segments)
}

fn parse_conllu_str(text: &str, path: &Path) -> Result<Vec<Segment>> {
    let mut segments: Vec<Segment> = Vec::new();
    let mut tokens: Vec<Token> = Vec::new();
    let mut expected_id = 1usize;
    let mut in_block = false;

    let flush = |tokens: &mut Vec<Token>, segments: &mut Vec<Segment>| {
        let id = segments.len();
        segments.push(Segment::from_tokens(id, std::mem::take(tokens)));
    };

    for (lineno, line) in text.lines().enumerate() {
        let lineno = lineno + 1;
        if line.trim().is_empty() {
            if in_block {
                flush(&mut tokens, &mut segments);
                in_block = false;
                expected_id = 1;
            }
            continue;
        }
        if line.starts_with('#') {
            continue;
        }
        let cols: Vec<&str> = line.split('\t').collect();
        if cols.len() < 8 {
            return Err(Error::parse(
                path,
                lineno,
                format!("expected ≥8 columns, found {}", cols.len()),
            ));
        }
        let id: usize = cols[0].parse().map_err(|_| {
            Error::parse(path, lineno, format!("non-integer token ID {:?}", cols[0]))
        })?;
        if id != expected_id {
            return Err(Error::parse(
                path,
                lineno,
                format!("token ID gap: expected {expected_id}, found {id}"),
            ));
        }
        expected_id += 1;
        in_block = true;

        let surface = cols[1];
        if surface.is_empty() || surface.chars().any(char::is_whitespace) {
            return Err(Error::parse(
                path,
                lineno,
                "FORM must be non-empty without whitespace",
            ));
        }
        let opt = |s: &str| {
            if s == "_" || s.is_empty() {
                None
            } else {
                Some(s.to_string())
            }
        };
        let lemma = opt(cols[2]);
        let pos = opt(cols[3]);
        let dep_label = opt(cols[7]);
        if dep_label.is_some() && pos.is_none() {
            return Err(Error::parse(
                path,
                lineno,
                "DEPREL present but UPOS missing",
            ));
        }
        tokens.push(Token {
            is_punct: is_punct_str(surface, ""),
            surface: surface.to_string(),
            lemma,
            pos,
            dep_label,
        });
    }
    if in_block {
        flush(&mut tokens, &mut segments);
    }
    if segments.is_empty() {
        return Err(Error::parse(path, 1, "empty file"));
    }
    Ok(segments)
}

/// Parse a Pharaoh alignment file: one segment per line, `i-j` pairs
/// separated by spaces. Empty line → empty set.
pub fn parse_alignments(path: &Path) -> Result<Vec<AlignmentSet>> {
    let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    parse_alignments_str(&text, path)
}

fn parse_alignments_str(text: &str, path: &Path) -> Result<Vec<AlignmentSet>> {
    let mut sets = Vec::new();
    for (lineno, line) in text.lines().enumerate() {
        let lineno = lineno + 1;
        let mut links = BTreeSet::new();
        for pair in line.split_whitespace() {
            let (s, t) = pair
                .split_once('-')
                .ok_or_else(|| Error::parse(path, lineno, format!("missing dash in {pair:?}")))?;
            let s: usize = s.parse().map_err(|_| {
                Error::parse(path, lineno, format!("non-numeric index in {pair:?}"))
            })?;
            let t: usize = t.parse().map_err(|_| {
                Error::parse(path, lineno, format!("non-numeric index in {pair:?}"))
            })?;
            links.insert((s, t));
        }
        sets.push(AlignmentSet { links });
    }
    Ok(sets)
}

/// Render segments back to plain format (one line per segment, tokens
/// space-joined). Re-parsing the result yields token-identical surfaces.
pub fn to_plain(segments: &[Segment]) -> String {
    let mut out = String::new();
    for seg in segments {
        let mut first = true;
        for tok in &seg.tokens {
            if !first {
                out.push(' ');
            }
            let _ = write!(out, "{}", tok.surface);
            first = false;
        }
        out.push('\n');
    }
    out
}
