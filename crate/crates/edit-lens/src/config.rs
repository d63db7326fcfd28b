//! Run configuration: TER knobs, metric variants, test parameters.
//!
//! Every default the pipeline relies on lives here so that a config file
//! (TOML, see `--config`) or a manifest `[config]` block can override it.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Default RNG seed for resampling tests; overridable via config file,
/// `EDIT_LENS_SEED` or `--seed`.
pub const DEFAULT_SEED: u64 = 42;

/// Name of the RNG discipline recorded in significance outputs: each
/// resampling iteration seeds its own ChaCha8 stream from
/// `splitmix64(seed ^ iteration)`, so results do not depend on thread count.
pub const RNG_NAME: &str = "chacha8-per-iteration-splitmix64";

/// Which token projection TER comparison runs on.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "snake_case")]
pub enum CompareOn {
    #[default]
    Surface,
    /// Lemma when annotated, surface fallback otherwise.
    Lemma,
}

/// Denominator rule for multi-reference TER.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "snake_case")]
pub enum MterDenominator {
    /// Mean length over all available references for the segment.
    #[default]
    MeanRefLen,
    /// Length of the targeted (system-specific) reference.
    TargetedLen,
    /// Length of the reference that yielded the minimum edits.
    BestRefLen,
}

/// How many-to-many alignment links collapse to one position per target token.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "snake_case")]
pub enum AlignCollapse {
    /// Minimum aligned source position (default).
    #[default]
    Min,
    /// Mean of aligned source positions.
    Mean,
}

/// TER engine configuration.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct TerConfig {
    /// Cost of one block shift: 1 for standard TER, 0 for the free-reorder
    /// variant used by the morphology/lexical analysis.
    pub shift_cost: u8,
    /// Drop punctuation-only tokens before comparison.
    pub strip_punct: bool,
    /// Lowercase tokens before comparison.
    pub lowercase: bool,
    pub compare_on: CompareOn,
    /// Longest block a single shift may move.
    pub max_shift_block: usize,
    /// Farthest a block may move, in token positions.
    pub max_shift_distance: usize,
    /// Extra characters treated as punctuation on top of Unicode `P*`.
    pub extra_punct_chars: String,
}

impl Default for TerConfig {
    fn default() -> Self {
        TerConfig {
            shift_cost: 1,
            strip_punct: false,
            lowercase: false,
            compare_on: CompareOn::Surface,
            max_shift_block: 10,
            max_shift_distance: 50,
            extra_punct_chars: String::new(),
        }
    }
}

impl TerConfig {
    /// The variant used for morphology/lexical analysis: free shifts,
    /// punctuation removed, configurable projection.
    pub fn noshift(&self, compare_on: CompareOn) -> TerConfig {
        TerConfig {
            shift_cost: 0,
            strip_punct: true,
            compare_on,
            ..self.clone()
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.shift_cost > 1 {
            return Err(Error::Precondition(format!(
                "shift_cost must be 0 or 1, got {}",
                self.shift_cost
            )));
        }
        if self.max_shift_block < 1 || self.max_shift_distance < 1 {
            return Err(Error::Precondition(
                "max_shift_block and max_shift_distance must be >= 1".into(),
            ));
        }
        Ok(())
    }
}

/// Full pipeline configuration. Serialized into every report for
/// reproducibility.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RunConfig {
    pub ter: TerConfig,
    pub mter_denominator: MterDenominator,
    pub align_collapse: AlignCollapse,
    /// Highest n-gram order for BLEU.
    pub bleu_max_n: usize,
    /// Numerator substituted for zero n-gram match counts.
    pub bleu_epsilon: f64,
    /// Upper edges of the closed length bins; one open bin follows.
    pub bins: Vec<usize>,
    pub ttr_lowercase: bool,
    pub ttr_exclude_punct: bool,
    /// Skip punctuation tokens when classifying shifted blocks.
    pub classify_skip_punct: bool,
    pub bootstrap_iterations: u64,
    pub randomization_iterations: u64,
    pub seed: u64,
}

impl Default for RunConfig {
    fn default() -> Self {
        RunConfig {
            ter: TerConfig::default(),
            mter_denominator: MterDenominator::default(),
            align_collapse: AlignCollapse::default(),
            bleu_max_n: 4,
            bleu_epsilon: 1e-9,
            bins: vec![15, 25, 35],
            ttr_lowercase: true,
            ttr_exclude_punct: true,
            classify_skip_punct: true,
            bootstrap_iterations: 1000,
            randomization_iterations: 10_000,
            seed: DEFAULT_SEED,
        }
    }
}

impl RunConfig {
    pub fn validate(&self) -> Result<()> {
        self.ter.validate()?;
        if self.bleu_max_n < 1 {
            return Err(Error::Precondition("bleu_max_n must be >= 1".into()));
        }
        if !self.bins.windows(2).all(|w| w[0] < w[1]) {
            return Err(Error::Precondition(
                "bin edges must be strictly increasing".into(),
            ));
        }
        Ok(())
    }

    /// Parse a TOML fragment and overlay it on `self`. Unknown keys are
    /// rejected so typos in config files surface immediately.
    pub fn overlay_toml(&self, text: &str) -> Result<RunConfig> {
        // Round-trip through a TOML table so partial files work: keys not
        // present keep the current value.
        let mut base = toml::Value::try_from(self)
            .map_err(|e| Error::Manifest(format!("config serialization failed: {e}")))?;
        let patch: toml::Value = text
            .parse()
            .map_err(|e| Error::Manifest(format!("config parse error: {e}")))?;
        merge_toml(&mut base, &patch);
        let merged: RunConfig = base
            .try_into()
            .map_err(|e| Error::Manifest(format!("config error: {e}")))?;
        merged.validate()?;
        Ok(merged)
    }
}

fn merge_toml(base: &mut toml::Value, patch: &toml::Value) {
    match (base, patch) {
        (toml::Value::Table(b), toml::Value::Table(p)) => {
            for (k, v) in p {
                match b.get_mut(k) {
                    Some(slot) => merge_toml(slot, v),
                    None => {
                        b.insert(k.clone(), v.clone());
                    }
                }
            }
        }
        (slot, v) => *slot = v.clone(),
    }
}
