use std::collections::{BTreeMap, HashMap};

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::{Corpus, Tokenizer, TokenizerConfig};
use crate::artifact::{Artifact, ArtifactWriter};
use crate::{Error, Result};

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct VocabularyConfig {
    pub tokenizer: TokenizerConfig,
    /// Terms must occur in at least this many passages.
    pub min_doc_freq: u32,
    /// Keep at most this many terms (highest corpus frequency first).
    pub max_size: usize,
}

impl Default for VocabularyConfig {
    fn default() -> Self {
        Self { tokenizer: TokenizerConfig::default(), min_doc_freq: 2, max_size: 15_000 }
    }
}

/// Term ↔ index bijection over `[0, V)` with frequency statistics.
///
/// Indices are assigned by descending corpus frequency, ties broken by the
/// lexicographically smaller term.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Vocabulary {
    config: VocabularyConfig,
    terms: Vec<String>,
    doc_freq: Vec<u32>,
    corpus_freq: Vec<u64>,
    #[serde(skip)]
    index: HashMap<String, u32>,
}

impl Vocabulary {
    fn new(config: VocabularyConfig, terms: Vec<String>, doc_freq: Vec<u32>, corpus_freq: Vec<u64>) -> Self {
        let index = terms.iter().enumerate().map(|(i, t)| (t.clone(), i as u32)).collect();
        Self { config, terms, doc_freq, corpus_freq, index }
    }

    /// Restores the lookup index after deserialization.
    pub fn reindex(&mut self) {
        self.index = self.terms.iter().enumerate().map(|(i, t)| (t.clone(), i as u32)).collect();
    }

    pub fn config(&self) -> &VocabularyConfig {
        &self.config
    }

    pub fn len(&self) -> usize {
        self.terms.len()
    }

    pub fn is_empty(&self) -> bool {
        self.terms.is_empty()
    }

    pub fn term(&self, index: usize) -> &str {
        &self.terms[index]
    }

    pub fn terms(&self) -> &[String] {
        &self.terms
    }

    pub fn index_of(&self, term: &str) -> Option<u32> {
        self.index.get(term).copied()
    }

    pub fn doc_freq(&self) -> &[u32] {
        &self.doc_freq
    }

    pub fn corpus_freq(&self) -> &[u64] {
        &self.corpus_freq
    }
}

/// Sparse D×V count matrix, one sorted row of `(term, count)` per passage.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct DocTermCounts {
    vocab_size: usize,
    rows: Vec<Vec<(u32, u32)>>,
    lengths: Vec<u32>,
}

impl DocTermCounts {
    /// Builds counts from per-passage token index lists.
    pub fn from_token_lists(vocab_size: usize, docs: &[Vec<u32>]) -> Result<Self> {
        let mut rows = Vec::with_capacity(docs.len());
        let mut lengths = Vec::with_capacity(docs.len());
        for doc in docs {
            let mut row: BTreeMap<u32, u32> = BTreeMap::new();
            for &t in doc {
                if t as usize >= vocab_size {
                    return Err(Error::DimensionMismatch { left: t as usize, right: vocab_size });
                }
                *row.entry(t).or_default() += 1;
            }
            lengths.push(doc.len() as u32);
            rows.push(row.into_iter().collect());
        }
        Ok(Self { vocab_size, rows, lengths })
    }

    pub fn num_docs(&self) -> usize {
        self.rows.len()
    }

    pub fn vocab_size(&self) -> usize {
        self.vocab_size
    }

    /// Sorted `(term, count)` entries of passage `d`.
    pub fn row(&self, d: usize) -> &[(u32, u32)] {
        &self.rows[d]
    }

    pub fn rows(&self) -> &[Vec<(u32, u32)>] {
        &self.rows
    }

    /// Token count n_d of passage `d`.
    pub fn doc_len(&self, d: usize) -> u32 {
        self.lengths[d]
    }

    pub fn nnz(&self) -> usize {
        self.rows.iter().map(Vec::len).sum()
    }

    /// Number of passages containing each term.
    pub fn column_doc_freq(&self) -> Vec<u32> {
        let mut df = vec![0u32; self.vocab_size];
        for row in &self.rows {
            for &(t, _) in row {
                df[t as usize] += 1;
            }
        }
        df
    }
}

fn tokenize_corpus(corpus: &Corpus, tokenizer: &Tokenizer) -> Vec<Vec<String>> {
    corpus.passages().par_iter().map(|p| tokenizer.tokenize(&p.text)).collect()
}

fn vocabulary_from_tokens(tokens: &[Vec<String>], config: VocabularyConfig) -> Result<Vocabulary> {
    if config.min_doc_freq == 0 {
        return Err(Error::InvalidArgument("min_doc_freq must be at least 1".into()));
    }
    let mut stats: HashMap<&str, (u32, u64)> = HashMap::new();
    for doc in tokens {
        let mut seen: Vec<&str> = doc.iter().map(String::as_str).collect();
        for t in &seen {
            stats.entry(t).or_default().1 += 1;
        }
        seen.sort_unstable();
        seen.dedup();
        for t in seen {
            stats.entry(t).or_default().0 += 1;
        }
    }
    let mut kept: Vec<(&str, u32, u64)> = stats
        .into_iter()
        .filter(|&(_, (df, _))| df >= config.min_doc_freq)
        .map(|(t, (df, cf))| (t, df, cf))
        .collect();
    kept.sort_by(|a, b| b.2.cmp(&a.2).then_with(|| a.0.cmp(b.0)));
    kept.truncate(config.max_size);
    if kept.is_empty() {
        return Err(Error::EmptyVocabulary);
    }
    let terms = kept.iter().map(|k| k.0.to_owned()).collect();
    let doc_freq = kept.iter().map(|k| k.1).collect();
    let corpus_freq = kept.iter().map(|k| k.2).collect();
    Ok(Vocabulary::new(config, terms, doc_freq, corpus_freq))
}

fn counts_from_tokens(tokens: &[Vec<String>], vocab: &Vocabulary) -> DocTermCounts {
    let docs: Vec<Vec<u32>> = tokens
        .iter()
        .map(|doc| doc.iter().filter_map(|t| vocab.index_of(t)).collect())
        .collect();
    DocTermCounts::from_token_lists(vocab.len(), &docs).expect("indices come from the vocabulary")
}

pub fn build_vocabulary(corpus: &Corpus, config: &VocabularyConfig) -> Result<Vocabulary> {
    let tokenizer = Tokenizer::new(config.tokenizer.clone());
    vocabulary_from_tokens(&tokenize_corpus(corpus, &tokenizer), config.clone())
}

/// Counts in-vocabulary tokens per passage; out-of-vocabulary tokens are
/// dropped and do not contribute to n_d.
pub fn build_doc_term(corpus: &Corpus, vocab: &Vocabulary) -> DocTermCounts {
    let tokenizer = Tokenizer::new(vocab.config().tokenizer.clone());
    counts_from_tokens(&tokenize_corpus(corpus, &tokenizer), vocab)
}

impl Vocabulary {
    /// Builds the vocabulary and the count matrix with a single tokenization pass.
    pub fn build_with_counts(corpus: &Corpus, config: &VocabularyConfig) -> Result<(Self, DocTermCounts)> {
        let tokenizer = Tokenizer::new(config.tokenizer.clone());
        let tokens = tokenize_corpus(corpus, &tokenizer);
        let vocab = vocabulary_from_tokens(&tokens, config.clone())?;
        let counts = counts_from_tokens(&tokens, &vocab);
        Ok((vocab, counts))
    }
}

pub const INDEX_ARTIFACT_KIND: &str = "corpus-index";

/// Vocabulary (header) plus counts in CSR form.
pub fn index_to_artifact(vocab: &Vocabulary, counts: &DocTermCounts, writer: ArtifactWriter) -> Result<Vec<u8>> {
    if vocab.len() != counts.vocab_size {
        return Err(Error::DimensionMismatch { left: vocab.len(), right: counts.vocab_size });
    }
    let mut row_ptr = Vec::with_capacity(counts.num_docs() + 1);
    let mut terms = Vec::with_capacity(counts.nnz());
    let mut values = Vec::with_capacity(counts.nnz());
    row_ptr.push(0u64);
    for row in &counts.rows {
        terms.extend(row.iter().map(|e| e.0));
        values.extend(row.iter().map(|e| e.1));
        row_ptr.push(terms.len() as u64);
    }
    writer
        .meta("vocabulary", vocab)?
        .meta("docs", counts.num_docs())?
        .u64s("row_ptr", &row_ptr)
        .u32s("terms", &terms)
        .u32s("counts", &values)
        .u32s("lengths", &counts.lengths)
        .finish()
}

pub fn index_from_artifact(a: &Artifact) -> Result<(Vocabulary, DocTermCounts)> {
    a.expect_kind(INDEX_ARTIFACT_KIND)?;
    let mut vocab: Vocabulary = a.meta("vocabulary")?;
    vocab.reindex();
    let d: usize = a.meta("docs")?;
    let row_ptr = a.u64s("row_ptr")?;
    let terms = a.u32s("terms")?;
    let values = a.u32s("counts")?;
    let lengths = a.u32s("lengths")?;
    let bad = |m: &str| Error::Artifact(format!("corpus index: {m}"));
    if row_ptr.len() != d + 1 || lengths.len() != d || terms.len() != values.len() {
        return Err(bad("section lengths disagree"));
    }
    let mut rows = Vec::with_capacity(d);
    for w in row_ptr.windows(2) {
        let (lo, hi) = (w[0] as usize, w[1] as usize);
        if lo > hi || hi > terms.len() {
            return Err(bad("row pointers out of range"));
        }
        let row: Vec<(u32, u32)> = terms[lo..hi].iter().copied().zip(values[lo..hi].iter().copied()).collect();
        if row.iter().any(|e| e.0 as usize >= vocab.len()) || row.windows(2).any(|p| p[0].0 >= p[1].0) {
            return Err(bad("malformed row"));
        }
        rows.push(row);
    }
    Ok((vocab.clone(), DocTermCounts { vocab_size: vocab.len(), rows, lengths }))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::corpus::{CorpusFormat, Stemmer, Stoplist};

    fn plain() -> VocabularyConfig {
        VocabularyConfig {
            tokenizer: TokenizerConfig { lowercase: true, stoplist: Stoplist::None, stemmer: Stemmer::None },
            min_doc_freq: 1,
            max_size: 100,
        }
    }

    fn corpus(lines: &[&str]) -> Corpus {
        let text: String = lines.iter().enumerate().map(|(i, l)| format!("p{i}\t{l}\n")).collect();
        Corpus::parse(text.as_bytes(), CorpusFormat::Tsv).unwrap()
    }

    #[test]
    fn min_doc_freq_threshold() {
        let c = corpus(&["death comes", "death again", "death rare"]);
        let v = build_vocabulary(&c, &VocabularyConfig { min_doc_freq: 2, ..plain() }).unwrap();
        assert_eq!(v.terms(), ["death"]);
        assert_eq!(v.doc_freq(), [3]);
        assert!(v.index_of("rare").is_none());
    }

    #[test]
    fn frequency_then_lexicographic_order() {
        let c = corpus(&["b a c c", "a b"]);
        let v = build_vocabulary(&c, &plain()).unwrap();
        // a:2, b:2, c:2 corpus frequency; ties broken lexicographically.
        assert_eq!(v.terms(), ["a", "b", "c"]);
        let c = corpus(&["z z z y", "y"]);
        let v = build_vocabulary(&c, &plain()).unwrap();
        assert_eq!(v.terms(), ["z", "y"]);
        assert_eq!(v.corpus_freq(), [3, 2]);
    }

    #[test]
    fn empty_vocabulary_is_an_error() {
        let c = corpus(&["alpha", "beta"]);
        let err = build_vocabulary(&c, &VocabularyConfig { min_doc_freq: 2, ..plain() }).unwrap_err();
        assert_eq!(err.to_string(), "vocabulary empty after pruning");
        assert!(build_vocabulary(&c, &VocabularyConfig { min_doc_freq: 0, ..plain() }).is_err());
    }

    #[test]
    fn cap_keeps_most_frequent() {
        let c = corpus(&["a a a b b c", "c d"]);
        let v = build_vocabulary(&c, &VocabularyConfig { max_size: 2, ..plain() }).unwrap();
        assert_eq!(v.terms(), ["a", "b"]);
    }

    #[test]
    fn doc_term_counts() {
        let c = corpus(&["a a b", "zzz", "b c"]);
        let vocab = build_vocabulary(&corpus(&["a b c"]), &plain()).unwrap();
        let counts = build_doc_term(&c, &vocab);
        let a = vocab.index_of("a").unwrap();
        let b = vocab.index_of("b").unwrap();
        assert_eq!(counts.row(0), [(a, 2), (b, 1)]);
        assert_eq!(counts.doc_len(0), 3);
        assert_eq!(counts.row(1), []);
        assert_eq!(counts.doc_len(1), 0);
    }

    #[test]
    fn disjoint_docs_nnz() {
        let c = corpus(&["a b", "c d e", "f"]);
        let (_, counts) = Vocabulary::build_with_counts(&c, &plain()).unwrap();
        assert_eq!(counts.nnz(), 6);
    }

    #[test]
    fn invariants_hold() {
        let c = corpus(&["in the beginning god created the heaven and the earth", "and the earth was without form", "and god said let there be light", "god saw the light"]);
        let (v, counts) = Vocabulary::build_with_counts(&c, &plain()).unwrap();
        for d in 0..counts.num_docs() {
            let s: u32 = counts.row(d).iter().map(|e| e.1).sum();
            assert_eq!(s, counts.doc_len(d));
        }
        assert_eq!(counts.column_doc_freq(), v.doc_freq());
        assert!(v.doc_freq().iter().all(|&df| df as usize <= c.len()));
        for (i, t) in v.terms().iter().enumerate() {
            assert_eq!(v.index_of(t), Some(i as u32));
        }
        assert_eq!(counts, build_doc_term(&c, &v));
    }

    #[test]
    fn index_artifact_roundtrip() {
        let c = corpus(&["alpha beta beta", "beta gamma", "", "alpha"]);
        let (v, counts) = Vocabulary::build_with_counts(&c, &plain()).unwrap();
        let bytes = index_to_artifact(&v, &counts, ArtifactWriter::new(INDEX_ARTIFACT_KIND)).unwrap();
        let (v2, c2) = index_from_artifact(&Artifact::decode(bytes).unwrap()).unwrap();
        assert_eq!(v2, v);
        assert_eq!(v2.index_of("gamma"), v.index_of("gamma"));
        assert_eq!(c2, counts);
    }
}
