//! Passage-segmented corpora: parsing, tokenization, vocabulary and
//! document-term counts.

mod books;
mod id;
mod tokenize;
mod vocab;

use std::collections::HashMap;
use std::io::BufRead;

use serde::{Deserialize, Serialize};

pub use books::{book_index, osis, BOOKS};
pub use id::{PassageId, VerseRef};
pub use tokenize::{tokenize, Stemmer, Stoplist, Tokenizer, TokenizerConfig};
pub use vocab::{
    build_doc_term, build_vocabulary, index_from_artifact, index_to_artifact, DocTermCounts, Vocabulary, VocabularyConfig,
    INDEX_ARTIFACT_KIND,
};

use crate::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum CorpusFormat {
    /// `<id> <text>`, split at the first run of whitespace.
    VersePerLine,
    /// `<id>\t<text>`.
    Tsv,
    /// `{"id": ..., "text": ...}` per line.
    Jsonl,
}

impl std::str::FromStr for CorpusFormat {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "verse-per-line" => Ok(Self::VersePerLine),
            "tsv" => Ok(Self::Tsv),
            "jsonl" => Ok(Self::Jsonl),
            other => Err(Error::InvalidArgument(format!("unknown corpus format `{other}`"))),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Passage {
    pub id: PassageId,
    pub text: String,
}

/// Passages in file order with an id lookup table.
#[derive(Debug, Clone, Default)]
pub struct Corpus {
    passages: Vec<Passage>,
    by_key: HashMap<String, usize>,
}

#[derive(Deserialize)]
struct JsonRecord {
    id: String,
    text: String,
}

impl Corpus {
    /// Builds a corpus, rejecting duplicate ids. Errors report 1-based
    /// positions in `passages`.
    pub fn from_passages(passages: Vec<Passage>) -> Result<Self> {
        let mut corpus = Self::default();
        for (i, p) in passages.into_iter().enumerate() {
            corpus.push(p, i + 1)?;
        }
        Ok(corpus)
    }

    fn push(&mut self, passage: Passage, line: usize) -> Result<()> {
        let key = passage.id.canonical_key();
        if self.by_key.contains_key(&key) {
            return Err(Error::DuplicateId { line, id: passage.id.to_string() });
        }
        self.by_key.insert(key, self.passages.len());
        self.passages.push(passage);
        Ok(())
    }

    /// Parses a corpus stream. Blank lines are skipped.
    pub fn parse<R: BufRead>(mut reader: R, format: CorpusFormat) -> Result<Self> {
        let mut corpus = Self::default();
        let mut buf = Vec::new();
        let mut line_no = 0;
        loop {
            buf.clear();
            if reader.read_until(b'\n', &mut buf)? == 0 {
                break;
            }
            line_no += 1;
            let line = std::str::from_utf8(&buf)
                .map_err(|e| Error::Parse { line: line_no, message: format!("invalid UTF-8: {e}") })?;
            let line = line.trim_end_matches(['\n', '\r']);
            if line.trim().is_empty() {
                continue;
            }
            let malformed = |message: &str| Error::Parse { line: line_no, message: message.to_owned() };
            let (id, text) = match format {
                CorpusFormat::Tsv => line
                    .split_once('\t')
                    .map(|(a, b)| (a.to_owned(), b.to_owned()))
                    .ok_or_else(|| malformed("expected `<id>\\t<text>`"))?,
                CorpusFormat::VersePerLine => line
                    .split_once(char::is_whitespace)
                    .map(|(a, b)| (a.to_owned(), b.trim_start().to_owned()))
                    .ok_or_else(|| malformed("expected `<id> <text>`"))?,
                CorpusFormat::Jsonl => {
                    let r: JsonRecord = serde_json::from_str(line)
                        .map_err(|e| malformed(&format!("bad JSON record: {e}")))?;
                    (r.id, r.text)
                }
            };
            let id: PassageId = id
                .trim()
                .parse()
                .map_err(|_| malformed(&format!("invalid passage id {id:?}")))?;
            corpus.push(Passage { id, text }, line_no)?;
        }
        Ok(corpus)
    }

    pub fn len(&self) -> usize {
        self.passages.len()
    }

    pub fn is_empty(&self) -> bool {
        self.passages.is_empty()
    }

    pub fn passages(&self) -> &[Passage] {
        &self.passages
    }

    pub fn passage(&self, index: usize) -> &Passage {
        &self.passages[index]
    }

    pub fn id(&self, index: usize) -> &PassageId {
        &self.passages[index].id
    }

    /// Position of `id` in corpus order.
    pub fn position(&self, id: &PassageId) -> Option<usize> {
        self.by_key.get(&id.canonical_key()).copied()
    }

    /// Writes one `{"id": ..., "text": ...}` object per line.
    pub fn write_jsonl<W: std::io::Write>(&self, mut out: W) -> Result<()> {
        for p in &self.passages {
            let record = serde_json::json!({ "id": p.id.to_string(), "text": p.text });
            serde_json::to_writer(&mut out, &record)?;
            out.write_all(b"\n")?;
        }
        out.flush()?;
        Ok(())
    }

    /// Rank of each passage under canonical id order, indexed by position.
    pub fn id_ranks(&self) -> Vec<u32> {
        let mut order: Vec<usize> = (0..self.len()).collect();
        order.sort_by(|&a, &b| self.id(a).cmp(self.id(b)).then(a.cmp(&b)));
        let mut ranks = vec![0u32; self.len()];
        for (r, &i) in order.iter().enumerate() {
            ranks[i] = r as u32;
        }
        ranks
    }

    /// Resolves a textual reference (book aliases folded) to a position.
    pub fn resolve(&self, reference: &str) -> Option<usize> {
        reference.trim().parse::<PassageId>().ok().and_then(|id| self.position(&id))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn parses_tsv_line() {
        let c = Corpus::parse("Isaiah.25.8\tHe will swallow up death forever\n".as_bytes(), CorpusFormat::Tsv)
            .unwrap();
        assert_eq!(c.len(), 1);
        assert_eq!(c.id(0), &PassageId::verse("Isaiah", 25, 8));
        assert_eq!(c.passage(0).text, "He will swallow up death forever");
        assert_eq!(c.resolve("Isa.25.8"), Some(0));
        assert_eq!(c.resolve("Isaiah.25.9"), None);
        let mut out = Vec::new();
        c.write_jsonl(&mut out).unwrap();
        let back = Corpus::parse(out.as_slice(), CorpusFormat::Jsonl).unwrap();
        assert_eq!(back.passages(), c.passages());
    }

    #[test]
    fn empty_input() {
        let c = Corpus::parse("".as_bytes(), CorpusFormat::Tsv).unwrap();
        assert!(c.is_empty());
    }

    #[test]
    fn duplicate_id_reports_second_line() {
        let input = "Gen.1.1\ta\nGen.1.2\tb\n\nGen.1.1\tc\n";
        match Corpus::parse(input.as_bytes(), CorpusFormat::Tsv) {
            Err(Error::DuplicateId { line, id }) => {
                assert_eq!(line, 4);
                assert_eq!(id, "Gen.1.1");
            }
            other => panic!("unexpected {other:?}"),
        }
        // Aliased book names collide too.
        assert!(Corpus::parse("Gen.1.1\ta\nGenesis.1.1\tb\n".as_bytes(), CorpusFormat::Tsv).is_err());
    }

    #[test]
    fn malformed_lines() {
        let err = Corpus::parse("Gen.1.1\ta\nno-tab-here\n".as_bytes(), CorpusFormat::Tsv).unwrap_err();
        assert!(matches!(err, Error::Parse { line: 2, .. }));
        let err = Corpus::parse("{\"id\": \"x\"}\n".as_bytes(), CorpusFormat::Jsonl).unwrap_err();
        assert!(matches!(err, Error::Parse { line: 1, .. }));
        let err = Corpus::parse(&b"Gen.1.1\t\xff\n"[..], CorpusFormat::Tsv).unwrap_err();
        assert!(matches!(err, Error::Parse { line: 1, .. }));
    }

    #[test]
    fn other_formats() {
        let c = Corpus::parse("Gen.1.1 In the beginning\r\nGen.1.2  And the earth\n".as_bytes(), CorpusFormat::VersePerLine)
            .unwrap();
        assert_eq!(c.passage(1).text, "And the earth");
        let c = Corpus::parse(
            "{\"id\": \"emma-4-12\", \"text\": \"I wish you may not get into a scrape\"}\n".as_bytes(),
            CorpusFormat::Jsonl,
        )
        .unwrap();
        assert_eq!(c.id(0), &PassageId::Opaque("emma-4-12".into()));
    }
}
