use std::collections::{BTreeMap, HashMap};
use std::fs::{File, OpenOptions};
use std::io::Write;
use std::path::{Path, PathBuf};
use std::time::{SystemTime, UNIX_EPOCH};

use serde::{Deserialize, Serialize};
use xref_core::candidates::{duplicate_pair_report, CandidateSet};
use xref_core::corpus::{Corpus, TokenizerConfig};
use xref_core::evaluation::write_pairs_tsv;
use xref_core::Scalar;

#[derive(Debug, thiserror::Error)]
pub enum StoreError {
    #[error("unknown candidate {from} -> {to}")]
    UnknownCandidate { from: String, to: String },
    #[error("vote must be +1 or -1, got {0}")]
    InvalidVote(i64),
    #[error("invalid annotator id `{0}`")]
    InvalidAnnotator(String),
    #[error("limit must be at least 1")]
    InvalidLimit,
    #[error("vote log {path}, line {line}: {message}")]
    CorruptLog { path: PathBuf, line: usize, message: String },
    #[error("I/O error: {0}")]
    Io(#[from] std::io::Error),
    #[error(transparent)]
    Core(#[from] xref_core::Error),
}

pub type StoreResult<T> = Result<T, StoreError>;

/// One line of the vote log.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct VoteEvent {
    /// Milliseconds since the Unix epoch.
    pub ts: u64,
    pub from: String,
    pub to: String,
    pub annotator: String,
    pub vote: i64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Candidate {
    pub rank: usize,
    pub from: String,
    pub to: String,
    pub method: String,
    pub score: f64,
    pub from_text: String,
    pub to_text: String,
    pub duplicate: bool,
}

#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct Tally {
    /// annotator → (vote, timestamp)
    pub votes: BTreeMap<String, (i64, u64)>,
}

impl Tally {
    pub fn net(&self) -> i64 {
        self.votes.values().map(|v| v.0).sum()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BatchItem {
    #[serde(flatten)]
    pub candidate: Candidate,
    pub net: i64,
    pub votes: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Batch {
    pub items: Vec<BatchItem>,
    pub next_cursor: usize,
    pub done: bool,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct VoteOutcome {
    pub from: String,
    pub to: String,
    pub net: i64,
    pub votes: usize,
    /// False when the vote repeated the annotator's current vote.
    pub recorded: bool,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Progress {
    pub candidates: usize,
    pub voted_candidates: usize,
    pub total_votes: usize,
    pub helpful: usize,
    pub not_helpful: usize,
    pub annotators: BTreeMap<String, usize>,
}

/// Candidates plus an append-only vote log and the tallies it implies.
#[derive(Debug)]
pub struct AnnotationStore {
    candidates: Vec<Candidate>,
    index: HashMap<(u32, u32), usize>,
    corpus: Corpus,
    pairs: Vec<(u32, u32)>,
    tallies: Vec<Tally>,
    log_path: PathBuf,
    log: File,
}

impl AnnotationStore {
    /// Opens (or creates) the log at `log_path` and replays it.
    /// Candidates whose token sets have Jaccard ≥ `duplicate_threshold`
    /// are flagged.
    pub fn open<T: Scalar>(
        set: &CandidateSet<T>,
        corpus: Corpus,
        tokenizer: &TokenizerConfig,
        duplicate_threshold: f64,
        log_path: impl AsRef<Path>,
    ) -> StoreResult<Self> {
        let flagged: std::collections::HashSet<usize> = duplicate_pair_report(set, &corpus, tokenizer, duplicate_threshold)?
            .into_iter()
            .map(|f| f.index)
            .collect();
        let mut candidates = Vec::with_capacity(set.len());
        let mut index = HashMap::with_capacity(set.len());
        let mut pairs = Vec::with_capacity(set.len());
        for (i, p) in set.pairs().iter().enumerate() {
            index.insert((p.from, p.to), i);
            pairs.push((p.from, p.to));
            candidates.push(Candidate {
                rank: i + 1,
                from: corpus.id(p.from as usize).to_string(),
                to: corpus.id(p.to as usize).to_string(),
                method: set.method().to_string(),
                score: p.score.as_f64(),
                from_text: corpus.passage(p.from as usize).text.clone(),
                to_text: corpus.passage(p.to as usize).text.clone(),
                duplicate: flagged.contains(&i),
            });
        }
        let log_path = log_path.as_ref().to_path_buf();
        let log = OpenOptions::new().create(true).append(true).read(true).open(&log_path)?;
        let mut store = Self {
            tallies: vec![Tally::default(); candidates.len()],
            candidates,
            index,
            corpus,
            pairs,
            log_path,
            log,
        };
        store.replay()?;
        Ok(store)
    }

    fn replay(&mut self) -> StoreResult<()> {
        let bytes = std::fs::read(&self.log_path)?;
        let complete = bytes.iter().rposition(|&b| b == b'\n').map_or(0, |i| i + 1);
        if complete < bytes.len() {
            // A record without its newline was never acknowledged.
            log::warn!("dropping incomplete final record in {}", self.log_path.display());
            self.log.set_len(complete as u64)?;
        }
        for (n, line) in bytes[..complete].split(|&b| b == b'\n').enumerate() {
            if line.iter().all(u8::is_ascii_whitespace) {
                continue;
            }
            let corrupt = |message: String| StoreError::CorruptLog { path: self.log_path.clone(), line: n + 1, message };
            let event: VoteEvent = serde_json::from_slice(line).map_err(|e| corrupt(e.to_string()))?;
            let i = self.lookup(&event.from, &event.to).map_err(|e| corrupt(e.to_string()))?;
            validate_vote(event.vote).map_err(|e| corrupt(e.to_string()))?;
            self.tallies[i].votes.insert(event.annotator, (event.vote, event.ts));
        }
        Ok(())
    }

    fn lookup(&self, from: &str, to: &str) -> StoreResult<usize> {
        let unknown = || StoreError::UnknownCandidate { from: from.to_owned(), to: to.to_owned() };
        let a = self.corpus.resolve(from).ok_or_else(unknown)?;
        let b = self.corpus.resolve(to).ok_or_else(unknown)?;
        self.index.get(&(a as u32, b as u32)).copied().ok_or_else(unknown)
    }

    pub fn len(&self) -> usize {
        self.candidates.len()
    }

    pub fn is_empty(&self) -> bool {
        self.candidates.is_empty()
    }

    pub fn candidates(&self) -> &[Candidate] {
        &self.candidates
    }

    pub fn tally(&self, rank_index: usize) -> &Tally {
        &self.tallies[rank_index]
    }

    pub fn log_path(&self) -> &Path {
        &self.log_path
    }

    /// Up to `limit` candidates at or after `cursor` (a zero-based rank
    /// position) that `annotator` has not voted on, in rank order.
    pub fn next_batch(&self, cursor: usize, limit: usize, annotator: &str) -> StoreResult<Batch> {
        if limit == 0 {
            return Err(StoreError::InvalidLimit);
        }
        validate_annotator(annotator)?;
        let mut items = Vec::new();
        let mut pos = cursor.min(self.len());
        while pos < self.len() && items.len() < limit {
            let t = &self.tallies[pos];
            if !t.votes.contains_key(annotator) {
                items.push(BatchItem { candidate: self.candidates[pos].clone(), net: t.net(), votes: t.votes.len() });
            }
            pos += 1;
        }
        let done = !(pos..self.len()).any(|i| !self.tallies[i].votes.contains_key(annotator));
        let next_cursor = if done { self.len() } else { pos };
        Ok(Batch { items, next_cursor, done })
    }

    /// Appends and syncs the vote before updating the tally. Repeating the
    /// annotator's current vote writes nothing.
    pub fn record_vote(&mut self, from: &str, to: &str, annotator: &str, vote: i64) -> StoreResult<VoteOutcome> {
        validate_vote(vote)?;
        validate_annotator(annotator)?;
        let i = self.lookup(from, to)?;
        let c = &self.candidates[i];
        let (from, to) = (c.from.clone(), c.to.clone());
        let unchanged = self.tallies[i].votes.get(annotator).is_some_and(|v| v.0 == vote);
        if !unchanged {
            let ts = SystemTime::now().duration_since(UNIX_EPOCH).map_or(0, |d| d.as_millis() as u64);
            let event = VoteEvent { ts, from: from.clone(), to: to.clone(), annotator: annotator.to_owned(), vote };
            let mut line = serde_json::to_vec(&event).map_err(xref_core::Error::from)?;
            line.push(b'\n');
            self.log.write_all(&line)?;
            self.log.sync_data()?;
            self.tallies[i].votes.insert(annotator.to_owned(), (vote, ts));
        }
        let t = &self.tallies[i];
        Ok(VoteOutcome { from, to, net: t.net(), votes: t.votes.len(), recorded: !unchanged })
    }

    pub fn progress(&self) -> Progress {
        let mut p = Progress {
            candidates: self.len(),
            voted_candidates: 0,
            total_votes: 0,
            helpful: 0,
            not_helpful: 0,
            annotators: BTreeMap::new(),
        };
        for t in &self.tallies {
            if !t.votes.is_empty() {
                p.voted_candidates += 1;
            }
            for (who, &(v, _)) in &t.votes {
                p.total_votes += 1;
                if v > 0 {
                    p.helpful += 1;
                } else {
                    p.not_helpful += 1;
                }
                *p.annotators.entry(who.clone()).or_default() += 1;
            }
        }
        p
    }

    /// Voted candidates with net ≥ `min_net`, in rank order.
    pub fn curated_pairs(&self, min_net: i64) -> Vec<(u32, u32)> {
        self.tallies
            .iter()
            .zip(&self.pairs)
            .filter(|(t, _)| !t.votes.is_empty() && t.net() >= min_net)
            .map(|(_, &p)| p)
            .collect()
    }

    /// The curated pairs as `from\tto` lines.
    pub fn export_curated<W: Write>(&self, min_net: i64, out: W) -> StoreResult<()> {
        write_pairs_tsv(self.curated_pairs(min_net), &self.corpus, out)?;
        Ok(())
    }
}

fn validate_vote(vote: i64) -> StoreResult<()> {
    if vote == 1 || vote == -1 {
        Ok(())
    } else {
        Err(StoreError::InvalidVote(vote))
    }
}

fn validate_annotator(id: &str) -> StoreResult<()> {
    if id.is_empty() || id.len() > 128 || id.chars().any(char::is_control) {
        Err(StoreError::InvalidAnnotator(id.to_owned()))
    } else {
        Ok(())
    }
}
