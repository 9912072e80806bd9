use std::path::{Path, PathBuf};

use anyhow::{bail, Context, Result};
use serde::{Deserialize, Serialize};
use xref_core::candidates::{Metric, Selection};
use xref_core::corpus::{CorpusFormat, Stemmer, Stoplist, TokenizerConfig, VocabularyConfig};
use xref_core::inference::InferenceConfig;
use xref_core::topics::SolverConfig;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, clap::ValueEnum)]
#[serde(rename_all = "kebab-case")]
pub enum AnchorMethod {
    GramSchmidt,
    Tandem,
    /// Gram-Schmidt anchors at the coarse topic count.
    CoarseProxy,
}

/// Every experiment knob. Loaded from TOML, overridden by flags, and
/// written back out as `config.resolved.toml` on every run.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct PipelineConfig {
    pub corpus: Option<PathBuf>,
    pub format: CorpusFormat,
    pub out: PathBuf,
    pub seed: u64,
    pub tokenizer: TokenizerSection,
    pub vocab: VocabSection,
    pub anchors: AnchorSection,
    pub solver: SolverConfig,
    pub inference: InferenceSection,
    pub candidates: CandidateSection,
    pub annotation: AnnotationSection,
}

impl Default for PipelineConfig {
    fn default() -> Self {
        Self {
            corpus: None,
            format: CorpusFormat::Tsv,
            out: PathBuf::from("xref-out"),
            seed: 42,
            tokenizer: TokenizerSection::default(),
            vocab: VocabSection::default(),
            anchors: AnchorSection::default(),
            solver: SolverConfig::default(),
            inference: InferenceSection::default(),
            candidates: CandidateSection::default(),
            annotation: AnnotationSection::default(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct TokenizerSection {
    pub lowercase: bool,
    pub stemmer: Stemmer,
    /// `builtin`, `none`, or a path to a file with one stopword per line.
    pub stoplist: String,
}

impl Default for TokenizerSection {
    fn default() -> Self {
        Self { lowercase: true, stemmer: Stemmer::Porter, stoplist: "builtin".into() }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct VocabSection {
    pub min_doc_freq: u32,
    pub max_size: usize,
}

impl Default for VocabSection {
    fn default() -> Self {
        let v = VocabularyConfig::default();
        Self { min_doc_freq: v.min_doc_freq, max_size: v.max_size }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct AnchorSection {
    pub method: AnchorMethod,
    /// Number of topics; unset picks 3000 for Bible-scale corpora
    /// (≥ 30,000 passages), ⌈D/10⌉ otherwise, and 100 for coarse-proxy.
    pub k: Option<usize>,
    pub candidate_min_df: u32,
    pub min_tokens: usize,
}

impl Default for AnchorSection {
    fn default() -> Self {
        Self { method: AnchorMethod::Tandem, k: None, candidate_min_df: 10, min_tokens: 2 }
    }
}

impl AnchorSection {
    pub fn resolved_k(&self, num_passages: usize) -> usize {
        match (self.k, self.method) {
            (Some(k), _) => k,
            (None, AnchorMethod::CoarseProxy) => 100,
            (None, _) if num_passages >= 30_000 => 3000,
            (None, _) => num_passages.div_ceil(10).max(1),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct InferenceSection {
    pub alpha: f64,
    pub max_iters: usize,
    pub tol: f64,
    /// Components kept per passage for the all-pairs pass.
    pub sparsify: usize,
}

impl Default for InferenceSection {
    fn default() -> Self {
        let c = InferenceConfig::default();
        Self { alpha: c.alpha, max_iters: c.max_iters, tol: c.tol, sparsify: 50 }
    }
}

impl InferenceSection {
    pub fn core(&self) -> InferenceConfig {
        InferenceConfig { alpha: self.alpha, max_iters: self.max_iters, tol: self.tol }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct CandidateSection {
    pub metric: Metric,
    /// Mutually exclusive with `threshold`.
    pub top_n: Option<u64>,
    pub threshold: Option<f64>,
    pub block_rows: usize,
}

impl Default for CandidateSection {
    fn default() -> Self {
        Self { metric: Metric::Cosine, top_n: None, threshold: None, block_rows: 64 }
    }
}

impl CandidateSection {
    pub const DEFAULT_TOP_N: u64 = 150_000;

    pub fn selection(&self) -> Result<Selection> {
        match (self.top_n, self.threshold) {
            (Some(_), Some(_)) => bail!("candidates: set either top_n or threshold, not both"),
            (None, Some(t)) => Ok(Selection::Threshold(t)),
            (n, None) => Ok(Selection::TopN(n.unwrap_or(Self::DEFAULT_TOP_N))),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct AnnotationSection {
    /// Token-set Jaccard at or above which a pair is flagged as duplicate text.
    pub duplicate_threshold: f64,
}

impl Default for AnnotationSection {
    fn default() -> Self {
        Self { duplicate_threshold: 0.9 }
    }
}

impl PipelineConfig {
    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).with_context(|| format!("reading config {}", path.display()))?;
        let mut cfg: Self = toml::from_str(&text).with_context(|| format!("parsing config {}", path.display()))?;
        // Relative paths in a config file are relative to the file.
        let base = path.parent().unwrap_or(Path::new(""));
        if let Some(c) = cfg.corpus.as_mut() {
            *c = std::path::absolute(base.join(&*c))?;
        }
        if !matches!(cfg.tokenizer.stoplist.as_str(), "builtin" | "none") {
            let p = std::path::absolute(base.join(&cfg.tokenizer.stoplist))?;
            cfg.tokenizer.stoplist = p.display().to_string();
        }
        Ok(cfg)
    }

    pub fn to_toml(&self) -> Result<String> {
        Ok(toml::to_string_pretty(self)?)
    }

    pub fn tokenizer(&self) -> Result<TokenizerConfig> {
        let stoplist = match self.tokenizer.stoplist.as_str() {
            "builtin" => Stoplist::Builtin,
            "none" => Stoplist::None,
            path => {
                let text = std::fs::read_to_string(path).with_context(|| format!("reading stoplist {path}"))?;
                Stoplist::Custom(text.lines().map(str::trim).filter(|l| !l.is_empty()).map(str::to_owned).collect())
            }
        };
        Ok(TokenizerConfig { lowercase: self.tokenizer.lowercase, stoplist, stemmer: self.tokenizer.stemmer })
    }

    pub fn vocabulary(&self) -> Result<VocabularyConfig> {
        Ok(VocabularyConfig {
            tokenizer: self.tokenizer()?,
            min_doc_freq: self.vocab.min_doc_freq,
            max_size: self.vocab.max_size,
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn resolved_toml_roundtrips() {
        let mut cfg = PipelineConfig::default();
        cfg.anchors.k = Some(7);
        cfg.candidates.top_n = Some(10);
        let text = cfg.to_toml().unwrap();
        let back: PipelineConfig = toml::from_str(&text).unwrap();
        assert_eq!(back, cfg);
    }

    #[test]
    fn partial_file_uses_defaults() {
        let cfg: PipelineConfig = toml::from_str("seed = 7\n[anchors]\nmethod = \"gram-schmidt\"\n").unwrap();
        assert_eq!(cfg.seed, 7);
        assert_eq!(cfg.anchors.method, AnchorMethod::GramSchmidt);
        assert_eq!(cfg.inference, InferenceSection::default());
        assert!(toml::from_str::<PipelineConfig>("sed = 7\n").is_err());
    }

    #[test]
    fn k_defaults() {
        let mut a = AnchorSection::default();
        assert_eq!(a.resolved_k(31_102), 3000);
        assert_eq!(a.resolved_k(95), 10);
        a.method = AnchorMethod::CoarseProxy;
        assert_eq!(a.resolved_k(31_102), 100);
        a.k = Some(5);
        assert_eq!(a.resolved_k(31_102), 5);
    }

    #[test]
    fn selection_is_exclusive() {
        let mut c = CandidateSection::default();
        assert_eq!(c.selection().unwrap(), Selection::TopN(150_000));
        c.threshold = Some(0.1);
        assert_eq!(c.selection().unwrap(), Selection::Threshold(0.1));
        c.top_n = Some(3);
        assert!(c.selection().is_err());
    }
}
