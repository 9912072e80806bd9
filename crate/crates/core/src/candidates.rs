//! Ranked candidate pairs from topic-vector distances, and the concordance
//! baselines.
//!
//! Pairs are ordered (directed) and refer to passages by corpus position.
//! Ties are broken by a [`PassageOrder`], normally canonical id order.

use std::cmp::Ordering;
use std::collections::BinaryHeap;
use std::io::{Read, Write};

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::corpus::{tokenize, Corpus, DocTermCounts, TokenizerConfig};
use crate::inference::SparseTopicVector;
use crate::{Error, Result, Scalar};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Metric {
    Cosine,
    Euclidean,
    Cityblock,
    Chebyshev,
}

impl Metric {
    pub const ALL: [Metric; 4] = [Metric::Cosine, Metric::Euclidean, Metric::Cityblock, Metric::Chebyshev];

    pub fn method(self) -> Method {
        match self {
            Metric::Cosine => Method::Cosine,
            Metric::Euclidean => Method::Euclidean,
            Metric::Cityblock => Method::Cityblock,
            Metric::Chebyshev => Method::Chebyshev,
        }
    }
}

impl std::str::FromStr for Metric {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.parse::<Method>()?.metric() {
            Some(m) => Ok(m),
            None => Err(Error::InvalidArgument(format!("`{s}` is not a distance metric"))),
        }
    }
}

impl std::fmt::Display for Metric {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        self.method().fmt(f)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Method {
    Cosine,
    Euclidean,
    Cityblock,
    Chebyshev,
    WordMatch,
    TopicMatch,
    TopicWordMatch,
}

impl Method {
    pub fn name(self) -> &'static str {
        match self {
            Method::Cosine => "cosine",
            Method::Euclidean => "euclidean",
            Method::Cityblock => "cityblock",
            Method::Chebyshev => "chebyshev",
            Method::WordMatch => "word-match",
            Method::TopicMatch => "topic-match",
            Method::TopicWordMatch => "topic-word-match",
        }
    }

    pub fn metric(self) -> Option<Metric> {
        match self {
            Method::Cosine => Some(Metric::Cosine),
            Method::Euclidean => Some(Metric::Euclidean),
            Method::Cityblock => Some(Metric::Cityblock),
            Method::Chebyshev => Some(Metric::Chebyshev),
            _ => None,
        }
    }
}

impl std::fmt::Display for Method {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.name())
    }
}

impl std::str::FromStr for Method {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let all = [
            Method::Cosine,
            Method::Euclidean,
            Method::Cityblock,
            Method::Chebyshev,
            Method::WordMatch,
            Method::TopicMatch,
            Method::TopicWordMatch,
        ];
        all.into_iter()
            .find(|m| m.name() == s)
            .ok_or_else(|| Error::InvalidArgument(format!("unknown method `{s}`")))
    }
}

/// Distance between two dense vectors.
pub fn pair_distance<T: Scalar>(a: &[T], b: &[T], metric: Metric) -> Result<T> {
    if a.len() != b.len() {
        return Err(Error::DimensionMismatch { left: a.len(), right: b.len() });
    }
    let mut acc = Accumulator::new(metric);
    for (&x, &y) in a.iter().zip(b) {
        acc.push(x, y);
    }
    Ok(acc.finish())
}

/// Distance between two sparse vectors. Components are visited in topic
/// order and zeros contribute exactly nothing, so the result is
/// bit-identical to [`pair_distance`] on the dense forms.
pub fn sparse_distance<T: Scalar>(a: &SparseTopicVector<T>, b: &SparseTopicVector<T>, metric: Metric) -> T {
    let (a, b) = (a.entries(), b.entries());
    let mut acc = Accumulator::new(metric);
    let (mut i, mut j) = (0, 0);
    while i < a.len() || j < b.len() {
        let ka = a.get(i).map_or(u32::MAX, |e| e.0);
        let kb = b.get(j).map_or(u32::MAX, |e| e.0);
        match ka.cmp(&kb) {
            Ordering::Less => {
                acc.push(a[i].1, T::zero());
                i += 1;
            }
            Ordering::Greater => {
                acc.push(T::zero(), b[j].1);
                j += 1;
            }
            Ordering::Equal => {
                acc.push(a[i].1, b[j].1);
                i += 1;
                j += 1;
            }
        }
    }
    acc.finish()
}

struct Accumulator<T> {
    metric: Metric,
    a: T,
    b: T,
    c: T,
}

impl<T: Scalar> Accumulator<T> {
    fn new(metric: Metric) -> Self {
        Self { metric, a: T::zero(), b: T::zero(), c: T::zero() }
    }

    #[inline]
    fn push(&mut self, x: T, y: T) {
        match self.metric {
            Metric::Cosine => {
                self.a += x * y;
                self.b += x * x;
                self.c += y * y;
            }
            Metric::Euclidean => self.a += (x - y) * (x - y),
            Metric::Cityblock => self.a += (x - y).abs(),
            Metric::Chebyshev => self.a = self.a.max((x - y).abs()),
        }
    }

    fn finish(self) -> T {
        match self.metric {
            Metric::Cosine => {
                if self.b == T::zero() || self.c == T::zero() {
                    T::one()
                } else {
                    T::one() - self.a / (self.b.sqrt() * self.c.sqrt())
                }
            }
            Metric::Euclidean => self.a.sqrt(),
            Metric::Cityblock | Metric::Chebyshev => self.a,
        }
    }
}

/// Tie-break keys: passage `i` sorts before `j` when `key[i] < key[j]`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct PassageOrder {
    key: Vec<u32>,
}

impl PassageOrder {
    pub fn identity(n: usize) -> Self {
        Self { key: (0..n as u32).collect() }
    }

    /// Canonical id order.
    pub fn from_corpus(corpus: &Corpus) -> Self {
        Self { key: corpus.id_ranks() }
    }

    /// `key` must be a permutation of `0..key.len()`.
    pub fn from_keys(key: Vec<u32>) -> Result<Self> {
        let mut seen = vec![false; key.len()];
        for &k in &key {
            match seen.get_mut(k as usize) {
                Some(s) if !*s => *s = true,
                _ => return Err(Error::InvalidArgument("passage order is not a permutation".into())),
            }
        }
        Ok(Self { key })
    }

    pub fn len(&self) -> usize {
        self.key.len()
    }

    pub fn is_empty(&self) -> bool {
        self.key.is_empty()
    }

    pub fn key(&self, i: usize) -> u32 {
        self.key[i]
    }

    /// Positions sorted by key.
    pub fn positions(&self) -> Vec<u32> {
        let mut out = vec![0u32; self.key.len()];
        for (i, &k) in self.key.iter().enumerate() {
            out[k as usize] = i as u32;
        }
        out
    }

    fn sort(&self, v: &mut [u32]) {
        v.sort_unstable_by_key(|&i| self.key[i as usize]);
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Selection {
    /// The N lowest-distance ordered pairs.
    TopN(u64),
    /// Every ordered pair with distance ≤ the threshold.
    Threshold(f64),
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CandidateConfig {
    pub metric: Metric,
    pub selection: Selection,
    /// Minimum rows per parallel task; each task holds at most one bounded heap.
    pub block_rows: usize,
}

impl Default for CandidateConfig {
    fn default() -> Self {
        Self { metric: Metric::Cosine, selection: Selection::TopN(150_000), block_rows: 64 }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CandidatePair<T> {
    pub from: u32,
    pub to: u32,
    pub score: T,
}

/// Ranked ordered pairs; rank is position + 1.
#[derive(Debug, Clone, PartialEq)]
pub struct CandidateSet<T> {
    method: Method,
    num_passages: usize,
    pairs: Vec<CandidatePair<T>>,
}

impl<T: Scalar> CandidateSet<T> {
    /// Validates self-pairs, bounds and duplicates.
    pub fn new(method: Method, num_passages: usize, pairs: Vec<CandidatePair<T>>) -> Result<Self> {
        let mut seen = std::collections::HashSet::with_capacity(pairs.len());
        for p in &pairs {
            if p.from == p.to || p.from as usize >= num_passages || p.to as usize >= num_passages {
                return Err(Error::InvalidArgument(format!("invalid pair ({}, {})", p.from, p.to)));
            }
            if !seen.insert((p.from, p.to)) {
                return Err(Error::InvalidArgument(format!("duplicate pair ({}, {})", p.from, p.to)));
            }
        }
        Ok(Self { method, num_passages, pairs })
    }

    pub fn method(&self) -> Method {
        self.method
    }

    pub fn num_passages(&self) -> usize {
        self.num_passages
    }

    /// Ordered-pair universe D(D−1).
    pub fn universe(&self) -> u64 {
        ordered_pairs(self.num_passages)
    }

    pub fn pairs(&self) -> &[CandidatePair<T>] {
        &self.pairs
    }

    pub fn len(&self) -> usize {
        self.pairs.len()
    }

    pub fn is_empty(&self) -> bool {
        self.pairs.is_empty()
    }

    /// Writes `rank,from,to,score,method` with a header row.
    pub fn write_csv<W: Write>(&self, corpus: &Corpus, out: W) -> Result<()> {
        if corpus.len() != self.num_passages {
            return Err(Error::DimensionMismatch { left: corpus.len(), right: self.num_passages });
        }
        let mut w = CandidateCsvWriter::new(out)?;
        for p in &self.pairs {
            w.write(corpus, p.from, p.to, p.score, self.method)?;
        }
        w.finish()
    }

    /// Reads a candidate CSV, resolving ids against `corpus`.
    pub fn read_csv<R: Read>(corpus: &Corpus, input: R) -> Result<Self> {
        let mut reader = csv::ReaderBuilder::new().has_headers(true).from_reader(input);
        let header = reader.headers().map_err(csv_error)?.clone();
        if header.iter().collect::<Vec<_>>() != ["rank", "from", "to", "score", "method"] {
            return Err(Error::Parse { line: 1, message: "expected header rank,from,to,score,method".into() });
        }
        let mut method = None;
        let mut pairs = Vec::new();
        for (i, record) in reader.records().enumerate() {
            let line = i + 2;
            let record = record.map_err(csv_error)?;
            let bad = |message: String| Error::Parse { line, message };
            if record.len() != 5 {
                return Err(bad(format!("expected 5 fields, found {}", record.len())));
            }
            let rank: usize = record[0].parse().map_err(|_| bad("bad rank".into()))?;
            if rank != i + 1 {
                return Err(bad(format!("rank {rank} out of sequence")));
            }
            let from = corpus.resolve(&record[1]).ok_or_else(|| bad(format!("unknown passage `{}`", &record[1])))?;
            let to = corpus.resolve(&record[2]).ok_or_else(|| bad(format!("unknown passage `{}`", &record[2])))?;
            let score: f64 = record[3].parse().map_err(|_| bad("bad score".into()))?;
            let m: Method = record[4].parse().map_err(|e: Error| bad(e.to_string()))?;
            if *method.get_or_insert(m) != m {
                return Err(bad("mixed methods in one file".into()));
            }
            pairs.push(CandidatePair { from: from as u32, to: to as u32, score: T::lit(score) });
        }
        Self::new(method.unwrap_or(Method::Cosine), corpus.len(), pairs)
    }
}

fn csv_error(e: csv::Error) -> Error {
    let line = e.position().map_or(0, |p| p.line() as usize);
    Error::Parse { line, message: e.to_string() }
}

/// Streaming writer for the candidate CSV, for sets too large to hold.
pub struct CandidateCsvWriter<W: Write> {
    inner: csv::Writer<W>,
    rank: u64,
}

impl<W: Write> CandidateCsvWriter<W> {
    pub fn new(out: W) -> Result<Self> {
        let mut inner = csv::WriterBuilder::new().terminator(csv::Terminator::Any(b'\n')).from_writer(out);
        inner.write_record(["rank", "from", "to", "score", "method"]).map_err(csv_error)?;
        Ok(Self { inner, rank: 0 })
    }

    pub fn write<T: Scalar>(&mut self, corpus: &Corpus, from: u32, to: u32, score: T, method: Method) -> Result<()> {
        self.rank += 1;
        let rank = self.rank.to_string();
        let from = corpus.id(from as usize).to_string();
        let to = corpus.id(to as usize).to_string();
        let score = score.to_string();
        self.inner
            .write_record([rank.as_str(), &from, &to, &score, method.name()])
            .map_err(csv_error)
    }

    pub fn rows(&self) -> u64 {
        self.rank
    }

    pub fn finish(mut self) -> Result<()> {
        self.inner.flush()?;
        Ok(())
    }
}

pub fn ordered_pairs(d: usize) -> u64 {
    let d = d as u64;
    d * d.saturating_sub(1)
}

#[derive(Clone, Copy)]
struct Entry<T> {
    score: T,
    kf: u32,
    kt: u32,
    from: u32,
    to: u32,
}

impl<T: Scalar> Entry<T> {
    fn cmp_key(&self, other: &Self) -> Ordering {
        self.score
            .partial_cmp(&other.score)
            .unwrap_or(Ordering::Equal)
            .then(self.kf.cmp(&other.kf))
            .then(self.kt.cmp(&other.kt))
    }
}

impl<T: Scalar> PartialEq for Entry<T> {
    fn eq(&self, other: &Self) -> bool {
        self.cmp_key(other) == Ordering::Equal
    }
}

impl<T: Scalar> Eq for Entry<T> {}

impl<T: Scalar> PartialOrd for Entry<T> {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

impl<T: Scalar> Ord for Entry<T> {
    fn cmp(&self, other: &Self) -> Ordering {
        self.cmp_key(other)
    }
}

/// Max-heap holding the `cap` smallest entries seen.
struct Bounded<T> {
    cap: usize,
    heap: BinaryHeap<Entry<T>>,
}

impl<T: Scalar> Bounded<T> {
    fn new(cap: usize) -> Self {
        Self { cap, heap: BinaryHeap::new() }
    }

    #[inline]
    fn offer(&mut self, e: Entry<T>) {
        if self.heap.len() < self.cap {
            self.heap.push(e);
        } else if let Some(mut worst) = self.heap.peek_mut() {
            if e < *worst {
                *worst = e;
            }
        }
    }

    fn merge(mut self, other: Self) -> Self {
        let (mut big, small) = if self.heap.len() >= other.heap.len() { (self, other) } else { (other, self) };
        for e in small.heap {
            big.offer(e);
        }
        self = big;
        self
    }
}

enum Acc<T> {
    Top(Bounded<T>),
    All(Vec<Entry<T>>),
}

/// Scores every ordered pair and keeps the selected ones, ranked by
/// ascending distance with ties broken by `(order[from], order[to])`.
pub fn generate_candidates<T: Scalar>(
    thetas: &[SparseTopicVector<T>],
    cfg: &CandidateConfig,
    order: &PassageOrder,
) -> Result<CandidateSet<T>> {
    let d = thetas.len();
    if d < 2 {
        return Err(Error::InvalidArgument(format!("need at least 2 passages, got {d}")));
    }
    if order.len() != d {
        return Err(Error::DimensionMismatch { left: order.len(), right: d });
    }
    let universe = ordered_pairs(d);
    let (cap, threshold) = match cfg.selection {
        Selection::TopN(n) => {
            let n = if n > universe {
                log::warn!("top_n {n} exceeds the {universe} ordered pairs; clamped");
                universe
            } else {
                n
            };
            (Some(usize::try_from(n).map_err(|_| Error::InvalidArgument("top_n too large".into()))?), T::infinity())
        }
        Selection::Threshold(t) => (None, T::lit(t)),
    };
    let fresh = || match cap {
        Some(c) => Acc::Top(Bounded::new(c)),
        None => Acc::All(Vec::new()),
    };
    let metric = cfg.metric;

    let acc = (0..d)
        .into_par_iter()
        .with_min_len(cfg.block_rows.max(1))
        .try_fold(fresh, |mut acc, i| -> Result<Acc<T>> {
            for j in i + 1..d {
                let s = sparse_distance(&thetas[i], &thetas[j], metric);
                if !s.is_finite() {
                    return Err(Error::NonFinite { context: format!("distance between passages {i} and {j}") });
                }
                if s > threshold {
                    continue;
                }
                let (ki, kj) = (order.key(i), order.key(j));
                let fwd = Entry { score: s, kf: ki, kt: kj, from: i as u32, to: j as u32 };
                let back = Entry { score: s, kf: kj, kt: ki, from: j as u32, to: i as u32 };
                match &mut acc {
                    Acc::Top(h) => {
                        h.offer(fwd);
                        h.offer(back);
                    }
                    Acc::All(v) => {
                        v.push(fwd);
                        v.push(back);
                    }
                }
            }
            Ok(acc)
        })
        .try_reduce(fresh, |a, b| {
            Ok(match (a, b) {
                (Acc::Top(a), Acc::Top(b)) => Acc::Top(a.merge(b)),
                (Acc::All(mut a), Acc::All(b)) => {
                    a.extend(b);
                    Acc::All(a)
                }
                _ => unreachable!("accumulators share one selection mode"),
            })
        })?;

    let mut entries = match acc {
        Acc::Top(h) => h.heap.into_vec(),
        Acc::All(v) => v,
    };
    entries.par_sort_unstable();
    let pairs = entries.into_iter().map(|e| CandidatePair { from: e.from, to: e.to, score: e.score }).collect();
    Ok(CandidateSet { method: metric.method(), num_passages: d, pairs })
}

/// Term → passages posting lists over document-term counts.
#[derive(Debug, Clone)]
pub struct InvertedIndex {
    postings: Vec<Vec<u32>>,
    docs: Vec<Vec<u32>>,
}

impl InvertedIndex {
    pub fn new(counts: &DocTermCounts) -> Self {
        let mut postings = vec![Vec::new(); counts.vocab_size()];
        let mut docs = Vec::with_capacity(counts.num_docs());
        for d in 0..counts.num_docs() {
            let terms: Vec<u32> = counts.row(d).iter().filter(|e| e.1 > 0).map(|e| e.0).collect();
            for &t in &terms {
                postings[t as usize].push(d as u32);
            }
            docs.push(terms);
        }
        Self { postings, docs }
    }

    pub fn num_docs(&self) -> usize {
        self.docs.len()
    }

    /// Passages other than `from` sharing at least one term with it,
    /// in increasing position.
    pub fn targets(&self, from: usize, mark: &mut Vec<bool>) -> Vec<u32> {
        mark.clear();
        mark.resize(self.docs.len(), false);
        let mut out = Vec::new();
        for &t in &self.docs[from] {
            for &d in &self.postings[t as usize] {
                if d as usize != from && !mark[d as usize] {
                    mark[d as usize] = true;
                    out.push(d);
                }
            }
        }
        out.sort_unstable();
        out
    }
}

/// Which concordance baseline to enumerate.
#[derive(Debug, Clone, Copy)]
pub enum Baseline<'a> {
    WordMatch(&'a InvertedIndex),
    TopicMatch(&'a [usize]),
    TopicWordMatch(&'a InvertedIndex, &'a [usize]),
}

impl Baseline<'_> {
    pub fn method(&self) -> Method {
        match self {
            Baseline::WordMatch(_) => Method::WordMatch,
            Baseline::TopicMatch(_) => Method::TopicMatch,
            Baseline::TopicWordMatch(..) => Method::TopicWordMatch,
        }
    }

    fn num_docs(&self) -> usize {
        match self {
            Baseline::WordMatch(ix) | Baseline::TopicWordMatch(ix, _) => ix.num_docs(),
            Baseline::TopicMatch(a) => a.len(),
        }
    }

    /// Linked passages of `from`, sorted by `order`.
    pub fn targets(&self, from: usize, order: &PassageOrder, scratch: &mut Vec<bool>, groups: &TopicGroups) -> Vec<u32> {
        let mut out = match self {
            Baseline::WordMatch(ix) => ix.targets(from, scratch),
            Baseline::TopicMatch(a) => groups.members(a[from]).iter().copied().filter(|&j| j as usize != from).collect(),
            Baseline::TopicWordMatch(ix, a) => {
                let mut t = ix.targets(from, scratch);
                t.retain(|&j| a[j as usize] == a[from]);
                t
            }
        };
        order.sort(&mut out);
        out
    }

    /// Visits `(from, targets)` rows in `order`, in parallel chunks but
    /// delivered sequentially.
    pub fn for_each_row<F>(&self, order: &PassageOrder, mut f: F) -> Result<()>
    where
        F: FnMut(u32, &[u32]) -> Result<()>,
    {
        let d = self.num_docs();
        if order.len() != d {
            return Err(Error::DimensionMismatch { left: order.len(), right: d });
        }
        if let Baseline::TopicWordMatch(_, a) = self {
            if a.len() != d {
                return Err(Error::DimensionMismatch { left: a.len(), right: d });
            }
        }
        let groups = match self {
            Baseline::TopicMatch(a) => TopicGroups::new(a),
            _ => TopicGroups::default(),
        };
        let positions = order.positions();
        for chunk in positions.chunks(1024) {
            let rows: Vec<Vec<u32>> = chunk
                .par_iter()
                .map_init(Vec::new, |scratch, &from| self.targets(from as usize, order, scratch, &groups))
                .collect();
            for (&from, row) in chunk.iter().zip(&rows) {
                f(from, row)?;
            }
        }
        Ok(())
    }

    /// Materializes the baseline as a set with score 0, ranked by
    /// `(order[from], order[to])`.
    pub fn collect<T: Scalar>(&self, order: &PassageOrder) -> Result<CandidateSet<T>> {
        let mut pairs = Vec::new();
        self.for_each_row(order, |from, row| {
            pairs.extend(row.iter().map(|&to| CandidatePair { from, to, score: T::zero() }));
            Ok(())
        })?;
        Ok(CandidateSet { method: self.method(), num_passages: self.num_docs(), pairs })
    }

    /// Number of pairs without materializing them.
    pub fn count(&self, order: &PassageOrder) -> Result<u64> {
        let mut n = 0u64;
        self.for_each_row(order, |_, row| {
            n += row.len() as u64;
            Ok(())
        })?;
        Ok(n)
    }
}

/// Passages grouped by assigned topic.
#[derive(Debug, Clone, Default)]
pub struct TopicGroups {
    groups: std::collections::HashMap<usize, Vec<u32>>,
}

impl TopicGroups {
    pub fn new(assignments: &[usize]) -> Self {
        let mut groups: std::collections::HashMap<usize, Vec<u32>> = Default::default();
        for (d, &k) in assignments.iter().enumerate() {
            groups.entry(k).or_default().push(d as u32);
        }
        Self { groups }
    }

    pub fn members(&self, topic: usize) -> &[u32] {
        self.groups.get(&topic).map_or(&[], Vec::as_slice)
    }
}

/// All ordered pairs of distinct passages sharing a vocabulary term.
pub fn word_match_pairs<T: Scalar>(counts: &DocTermCounts, order: &PassageOrder) -> Result<CandidateSet<T>> {
    Baseline::WordMatch(&InvertedIndex::new(counts)).collect(order)
}

/// All ordered pairs of distinct passages with the same assigned topic.
pub fn topic_match_pairs<T: Scalar>(assignments: &[usize], order: &PassageOrder) -> Result<CandidateSet<T>> {
    Baseline::TopicMatch(assignments).collect(order)
}

/// Pairs sharing both a term and an assigned topic.
pub fn topic_word_match_pairs<T: Scalar>(
    assignments: &[usize],
    counts: &DocTermCounts,
    order: &PassageOrder,
) -> Result<CandidateSet<T>> {
    if assignments.len() != counts.num_docs() {
        return Err(Error::DimensionMismatch { left: assignments.len(), right: counts.num_docs() });
    }
    Baseline::TopicWordMatch(&InvertedIndex::new(counts), assignments).collect(order)
}

/// Jaccard similarity of two token sets; two empty sets are identical.
pub fn jaccard<S: AsRef<str>>(a: &[S], b: &[S]) -> f64 {
    let a: std::collections::BTreeSet<&str> = a.iter().map(AsRef::as_ref).collect();
    let b: std::collections::BTreeSet<&str> = b.iter().map(AsRef::as_ref).collect();
    let union = a.union(&b).count();
    if union == 0 {
        return 1.0;
    }
    a.intersection(&b).count() as f64 / union as f64
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DuplicateFlag {
    /// Zero-based position in the candidate list.
    pub index: usize,
    pub jaccard: f64,
}

/// Candidates whose passages' token sets have Jaccard similarity ≥ `threshold`.
pub fn duplicate_pair_report<T: Scalar>(
    set: &CandidateSet<T>,
    corpus: &Corpus,
    tokenizer: &TokenizerConfig,
    threshold: f64,
) -> Result<Vec<DuplicateFlag>> {
    if !(0.0..=1.0).contains(&threshold) {
        return Err(Error::InvalidArgument(format!("jaccard threshold {threshold} outside [0, 1]")));
    }
    if corpus.len() != set.num_passages {
        return Err(Error::DimensionMismatch { left: corpus.len(), right: set.num_passages });
    }
    let tokens = |i: u32| tokenize(&corpus.passage(i as usize).text, tokenizer);
    Ok(set
        .pairs
        .par_iter()
        .enumerate()
        .filter_map(|(index, p)| {
            let j = jaccard(&tokens(p.from), &tokens(p.to));
            (j >= threshold).then_some(DuplicateFlag { index, jaccard: j })
        })
        .collect())
}
