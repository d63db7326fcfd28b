//! Evaluation manifest: one TOML file declaring the corpus for a run.
//!
//! ```toml
//! source = "source.txt"            # plain; one tokenized segment per line
//! reference = "reference.txt"      # optional; original reference for BLEU
//!
//! [config]                         # optional RunConfig overrides
//! seed = 7
//!
//! [[docs]]                         # optional; talk/document spans,
//! id = "talk-1"                    # inclusive segment ranges that must
//! first = 0                        # partition the corpus in order
//! last = 24
//!
//! [[systems]]
//! name = "alpha"
//! output = "alpha.out.conllu"      # .conllu/.conll parsed as annotated,
//! postedit = "alpha.pe.conllu"     # anything else as plain (override with
//! align_src_mt = "alpha.sm.align"  # output_format/postedit_format)
//! align_src_pe = "alpha.sp.align"  # alignments optional; needed for KRS
//!
//! [[extra_references]]             # optional additional post-edits
//! name = "spare"
//! path = "spare.txt"
//! ```
//!
//! All paths are relative to the manifest location. Every referenced file
//! is parsed at load time and all cross-file invariants are checked here,
//! so downstream scoring never discovers a broken corpus.

use std::path::{Path, PathBuf};

use serde::Deserialize;

use crate::config::RunConfig;
use crate::corpus::{parse_alignments, parse_segments, AlignmentSet, Segment, SegmentFormat};
use crate::error::{Error, Result};

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct ManifestFile {
    #[serde(default)]
    schema: Option<u32>,
    source: PathBuf,
    reference: Option<PathBuf>,
    #[serde(default)]
    config: Option<toml::Value>,
    #[serde(default)]
    docs: Vec<DocEntry>,
    systems: Vec<SystemEntry>,
    #[serde(default)]
    extra_references: Vec<ExtraRefEntry>,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct DocEntry {
    id: String,
    first: usize,
    last: usize,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct SystemEntry {
    name: String,
    output: PathBuf,
    postedit: PathBuf,
    output_format: Option<String>,
    postedit_format: Option<String>,
    align_src_mt: Option<PathBuf>,
    align_src_pe: Option<PathBuf>,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct ExtraRefEntry {
    name: String,
    path: PathBuf,
    format: Option<String>,
}

/// One document (talk) span; `first..=last` segment indices.
#[derive(Debug, Clone, serde::Serialize)]
pub struct DocSpan {
    pub id: String,
    pub first: usize,
    pub last: usize,
}

impl DocSpan {
    /// Inclusive spans are never empty.
    pub fn segment_count(&self) -> usize {
        self.last - self.first + 1
    }

    pub fn range(&self) -> std::ops::RangeInclusive<usize> {
        self.first..=self.last
    }
}

/// One system with its output, targeted post-edit and optional alignments.
#[derive(Debug, Clone)]
pub struct LoadedSystem {
    pub name: String,
    pub output: Vec<Segment>,
    pub postedit: Vec<Segment>,
    pub align_src_mt: Option<Vec<AlignmentSet>>,
    pub align_src_pe: Option<Vec<AlignmentSet>>,
}

impl LoadedSystem {
    pub fn has_alignments(&self) -> bool {
        self.align_src_mt.is_some() && self.align_src_pe.is_some()
    }

    /// Total tokens generated by the system (raw, before normalization).
    pub fn word_count(&self) -> u64 {
        self.output.iter().map(|s| s.len() as u64).sum()
    }
}

/// A fully loaded, validated evaluation run.
#[derive(Debug, Clone)]
pub struct LoadedRun {
    pub manifest_path: PathBuf,
    pub source: Vec<Segment>,
    pub reference: Option<Vec<Segment>>,
    pub systems: Vec<LoadedSystem>,
    pub extra_references: Vec<(String, Vec<Segment>)>,
    pub docs: Vec<DocSpan>,
    pub config: RunConfig,
}

impl LoadedRun {
    pub fn segment_count(&self) -> usize {
        self.source.len()
    }

    pub fn system(&self, name: &str) -> Result<&LoadedSystem> {
        self.systems.iter().find(|s| s.name == name).ok_or_else(|| {
            Error::Manifest(format!(
                "unknown system {name:?}; manifest declares: {}",
                self.systems
                    .iter()
                    .map(|s| s.name.as_str())
                    .collect::<Vec<_>>()
                    .join(", ")
            ))
        })
    }

    pub fn system_names(&self) -> Vec<&str> {
        self.systems.iter().map(|s| s.name.as_str()).collect()
    }

    /// Every reference available for segment `idx` as seen from `system`:
    /// its targeted post-edit first, then the other systems' post-edits,
    /// then extra references.
    pub fn refs_for(&self, system: &str, idx: usize) -> Vec<&Segment> {
        let mut refs = Vec::new();
        if let Ok(sys) = self.system(system) {
            refs.push(&sys.postedit[idx]);
        }
        for other in &self.systems {
            if other.name != system {
                refs.push(&other.postedit[idx]);
            }
        }
        for (_, segs) in &self.extra_references {
            refs.push(&segs[idx]);
        }
        refs
    }

    /// Reference sets for all segments of one system.
    pub fn all_refs(&self, system: &str) -> Vec<Vec<&Segment>> {
        (0..self.segment_count())
            .map(|i| self.refs_for(system, i))
            .collect()
    }

    /// Source segments of one document.
    pub fn doc_source(&self, doc: &DocSpan) -> &[Segment] {
        &self.source[doc.first..=doc.last]
    }
}

fn parse_format(spec: Option<&str>, path: &Path) -> Result<SegmentFormat> {
    match spec {
        None => Ok(SegmentFormat::from_path(path)),
        Some("plain") => Ok(SegmentFormat::Plain),
        Some("conllu") => Ok(SegmentFormat::ConlluSubset),
        Some(other) => Err(Error::Manifest(format!(
            "unknown format {other:?} (expected \"plain\" or \"conllu\")"
        ))),
    }
}

fn load_side(base: &Path, rel: &Path, format: Option<&str>) -> Result<Vec<Segment>> {
    let path = base.join(rel);
    if !path.is_file() {
        return Err(Error::Manifest(format!("missing file: {}", path.display())));
    }
    parse_segments(&path, parse_format(format, &path)?)
}

fn check_count(name: &str, got: usize, expected: usize) -> Result<()> {
    if got != expected {
        return Err(Error::Manifest(format!(
            "{name}: {got} segments, expected {expected}"
        )));
    }
    Ok(())
}

/// Load and validate a manifest and every file it references.
pub fn load_manifest(path: &Path) -> Result<LoadedRun> {
    let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    let mf: ManifestFile =
        toml::from_str(&text).map_err(|e| Error::Manifest(format!("{}: {e}", path.display())))?;
    if let Some(schema) = mf.schema {
        if schema != 1 {
            return Err(Error::Manifest(format!(
                "unsupported manifest schema {schema}"
            )));
        }
    }
    if mf.systems.is_empty() {
        return Err(Error::Manifest("manifest declares no systems".into()));
    }
    let base = path
        .parent()
        .unwrap_or_else(|| Path::new("."))
        .to_path_buf();

    let mut config = RunConfig::default();
    if let Some(patch) = &mf.config {
        let patch_text =
            toml::to_string(patch).map_err(|e| Error::Manifest(format!("config block: {e}")))?;
        config = config.overlay_toml(&patch_text)?;
    }

    let mut source = load_side(&base, &mf.source, None)?;
    let n = source.len();

    let reference = match &mf.reference {
        Some(p) => {
            let segs = load_side(&base, p, None)?;
            check_count("reference", segs.len(), n)?;
            Some(segs)
        }
        None => None,
    };

    let mut seen = std::collections::BTreeSet::new();
    let mut systems = Vec::with_capacity(mf.systems.len());
    for entry in &mf.systems {
        if !seen.insert(entry.name.clone()) {
            return Err(Error::Manifest(format!(
                "duplicate system name {:?}",
                entry.name
            )));
        }
        let output = load_side(&base, &entry.output, entry.output_format.as_deref())?;
        check_count(&format!("system {}", entry.name), output.len(), n)?;
        let postedit = load_side(&base, &entry.postedit, entry.postedit_format.as_deref())?;
        check_count(
            &format!("system {} postedit", entry.name),
            postedit.len(),
            n,
        )?;

        let load_align = |rel: &PathBuf,
                          target: &[Segment],
                          side: &str|
         -> Result<Vec<AlignmentSet>> {
            let p = base.join(rel);
            if !p.is_file() {
                return Err(Error::Manifest(format!(
                    "missing alignment file: {}",
                    p.display()
                )));
            }
            let sets = parse_alignments(&p)?;
            check_count(
                &format!("system {} {side} alignments", entry.name),
                sets.len(),
                n,
            )?;
            for (i, set) in sets.iter().enumerate() {
                set.validate(source[i].len(), target[i].len())
                    .map_err(|e| Error::Manifest(format!("{}: segment {i}: {e}", p.display())))?;
            }
            Ok(sets)
        };
        let align_src_mt = match &entry.align_src_mt {
            Some(rel) => Some(load_align(rel, &output, "src-mt")?),
            None => None,
        };
        let align_src_pe = match &entry.align_src_pe {
            Some(rel) => Some(load_align(rel, &postedit, "src-pe")?),
            None => None,
        };

        systems.push(LoadedSystem {
            name: entry.name.clone(),
            output,
            postedit,
            align_src_mt,
            align_src_pe,
        });
    }

    let mut extra_references = Vec::new();
    for entry in &mf.extra_references {
        let segs = load_side(&base, &entry.path, entry.format.as_deref())?;
        check_count(&format!("extra reference {}", entry.name), segs.len(), n)?;
        extra_references.push((entry.name.clone(), segs));
    }

    let docs = validate_docs(&mf.docs, n)?;
    for doc in &docs {
        for seg in &mut source[doc.first..=doc.last] {
            seg.doc_id = doc.id.clone();
        }
        for sys in &mut systems {
            for seg in &mut sys.output[doc.first..=doc.last] {
                seg.doc_id = doc.id.clone();
            }
            for seg in &mut sys.postedit[doc.first..=doc.last] {
                seg.doc_id = doc.id.clone();
            }
        }
    }

    Ok(LoadedRun {
        manifest_path: path.to_path_buf(),
        source,
        reference,
        systems,
        extra_references,
        docs,
        config,
    })
}

/// Validate doc spans: ordered, inclusive, exactly covering `0..n`.
/// An empty list becomes one span covering the whole corpus.
fn validate_docs(entries: &[DocEntry], n: usize) -> Result<Vec<DocSpan>> {
    if n == 0 {
        return Err(Error::Manifest("corpus has no segments".into()));
    }
    if entries.is_empty() {
        return Ok(vec![DocSpan {
            id: "all".into(),
            first: 0,
            last: n - 1,
        }]);
    }
    let mut next = 0usize;
    let mut docs = Vec::with_capacity(entries.len());
    for e in entries {
        if e.first > e.last {
            return Err(Error::Manifest(format!(
                "doc {:?}: first {} exceeds last {}",
                e.id, e.first, e.last
            )));
        }
        if e.first < next {
            return Err(Error::Manifest(format!(
                "segment {} claimed twice",
                e.first
            )));
        }
        if e.first > next {
            return Err(Error::Manifest(format!(
                "segment {next} not covered by any doc"
            )));
        }
        if e.last >= n {
            return Err(Error::Manifest(format!(
                "doc {:?}: last segment {} out of range (corpus has {n})",
                e.id, e.last
            )));
        }
        docs.push(DocSpan {
            id: e.id.clone(),
            first: e.first,
            last: e.last,
        });
        next = e.last + 1;
    }
    if next != n {
        return Err(Error::Manifest(format!(
            "segment {next} not covered by any doc"
        )));
    }
    Ok(docs)
}
