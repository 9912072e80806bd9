//! Ground-truth cross-references and ranking evaluation: confusion counts
//! per cutoff, ROC and precision-recall areas, annotation cost.

use std::collections::HashMap;
use std::io::{BufRead, Write};

use serde::{Deserialize, Serialize};

use crate::candidates::{ordered_pairs, CandidateSet};
use crate::corpus::Corpus;
use crate::{Error, Result, Scalar};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum GroundTruthFormat {
    /// `from\tto`
    PairsTsv,
    /// `from\tto\tvotes`, endpoints may be ranges `A-B`.
    OpenbibleVotes,
}

impl std::str::FromStr for GroundTruthFormat {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "pairs-tsv" => Ok(Self::PairsTsv),
            "openbible-votes" => Ok(Self::OpenbibleVotes),
            other => Err(Error::InvalidArgument(format!("unknown ground-truth format `{other}`"))),
        }
    }
}

/// Counts gathered while loading, for reporting.
#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct LoadStats {
    pub records: usize,
    pub kept: usize,
    pub below_min_votes: usize,
    pub unresolved: usize,
    pub collapsed_ranges: usize,
    pub self_pairs: usize,
    pub duplicates: usize,
}

#[derive(Debug, Clone, PartialEq)]
pub struct GroundTruth {
    source: String,
    num_passages: usize,
    min_votes: Option<i64>,
    votes: HashMap<(u32, u32), Option<i64>>,
    stats: LoadStats,
}

impl GroundTruth {
    /// From already-resolved pairs; duplicates and self-pairs are dropped.
    pub fn from_pairs(source: &str, num_passages: usize, pairs: impl IntoIterator<Item = (u32, u32)>) -> Result<Self> {
        let mut votes = HashMap::new();
        let mut stats = LoadStats::default();
        for (a, b) in pairs {
            stats.records += 1;
            if a as usize >= num_passages || b as usize >= num_passages {
                return Err(Error::InvalidArgument(format!("pair ({a}, {b}) outside {num_passages} passages")));
            }
            if a == b {
                stats.self_pairs += 1;
            } else if votes.insert((a, b), None).is_some() {
                stats.duplicates += 1;
            }
        }
        stats.kept = votes.len();
        if votes.is_empty() {
            return Err(Error::EmptyGroundTruth);
        }
        Ok(Self { source: source.to_owned(), num_passages, min_votes: None, votes, stats })
    }

    pub fn source(&self) -> &str {
        &self.source
    }

    pub fn min_votes(&self) -> Option<i64> {
        self.min_votes
    }

    pub fn num_passages(&self) -> usize {
        self.num_passages
    }

    /// P, the number of positive ordered pairs.
    pub fn len(&self) -> usize {
        self.votes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.votes.is_empty()
    }

    pub fn contains(&self, from: u32, to: u32) -> bool {
        self.votes.contains_key(&(from, to))
    }

    pub fn votes(&self, from: u32, to: u32) -> Option<i64> {
        self.votes.get(&(from, to)).copied().flatten()
    }

    pub fn stats(&self) -> &LoadStats {
        &self.stats
    }

    /// Pairs in increasing `(from, to)` position.
    pub fn sorted_pairs(&self) -> Vec<(u32, u32)> {
        let mut v: Vec<_> = self.votes.keys().copied().collect();
        v.sort_unstable();
        v
    }
}

/// Loads a ground-truth file against `corpus`.
///
/// Blank lines and `#` comments are skipped, as is a first line whose
/// first field starts with `from` (any case). Range endpoints collapse to
/// the range's first verse. Duplicate pairs keep their largest vote total.
pub fn load_ground_truth<R: BufRead>(
    reader: R,
    format: GroundTruthFormat,
    min_votes: Option<i64>,
    corpus: &Corpus,
    source: &str,
) -> Result<GroundTruth> {
    if min_votes.is_some() && format != GroundTruthFormat::OpenbibleVotes {
        return Err(Error::InvalidArgument("min_votes needs a vote-bearing format".into()));
    }
    let mut stats = LoadStats::default();
    let mut votes: HashMap<(u32, u32), Option<i64>> = HashMap::new();
    let resolve = |field: &str, stats: &mut LoadStats| -> Option<u32> {
        if let Some(i) = corpus.resolve(field) {
            return Some(i as u32);
        }
        let (first, _) = field.split_once('-')?;
        let i = corpus.resolve(first)?;
        stats.collapsed_ranges += 1;
        Some(i as u32)
    };

    for (n, line) in reader.lines().enumerate() {
        let line_no = n + 1;
        let line = line?;
        let line = line.trim_end_matches('\r');
        if line.trim().is_empty() || line.starts_with('#') {
            continue;
        }
        let fields: Vec<&str> = line.split('\t').map(str::trim).collect();
        if stats.records == 0 && fields[0].to_ascii_lowercase().starts_with("from") {
            continue;
        }
        let expected = match format {
            GroundTruthFormat::PairsTsv => 2,
            GroundTruthFormat::OpenbibleVotes => 3,
        };
        if fields.len() != expected {
            return Err(Error::Parse {
                line: line_no,
                message: format!("expected {expected} tab-separated fields, found {}", fields.len()),
            });
        }
        let v = match format {
            GroundTruthFormat::PairsTsv => None,
            GroundTruthFormat::OpenbibleVotes => Some(fields[2].parse::<i64>().map_err(|_| Error::Parse {
                line: line_no,
                message: format!("vote total `{}` is not an integer", fields[2]),
            })?),
        };
        stats.records += 1;
        if let (Some(min), Some(v)) = (min_votes, v) {
            if v < min {
                stats.below_min_votes += 1;
                continue;
            }
        }
        let (Some(a), Some(b)) = (resolve(fields[0], &mut stats), resolve(fields[1], &mut stats)) else {
            stats.unresolved += 1;
            continue;
        };
        if a == b {
            stats.self_pairs += 1;
            continue;
        }
        match votes.entry((a, b)) {
            std::collections::hash_map::Entry::Occupied(mut e) => {
                stats.duplicates += 1;
                if v > *e.get() {
                    e.insert(v);
                }
            }
            std::collections::hash_map::Entry::Vacant(e) => {
                e.insert(v);
            }
        }
    }

    if stats.unresolved * 10 > stats.records {
        return Err(Error::TooManyUnresolved { unresolved: stats.unresolved, total: stats.records });
    }
    if votes.is_empty() {
        return Err(Error::EmptyGroundTruth);
    }
    stats.kept = votes.len();
    log::info!("ground truth `{source}`: {stats:?}");
    Ok(GroundTruth { source: source.to_owned(), num_passages: corpus.len(), min_votes, votes, stats })
}

/// Writes `from\tto` lines.
pub fn write_pairs_tsv<W: Write>(pairs: impl IntoIterator<Item = (u32, u32)>, corpus: &Corpus, mut out: W) -> Result<()> {
    for (a, b) in pairs {
        writeln!(out, "{}\t{}", corpus.id(a as usize), corpus.id(b as usize))?;
    }
    out.flush()?;
    Ok(())
}

/// One cutoff of a ranking.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CurvePoint {
    pub k: u64,
    pub tp: u64,
    pub fp: u64,
    #[serde(rename = "fn")]
    pub fn_: u64,
    pub tn: u64,
    pub precision: f64,
    pub recall: f64,
    pub fpr: f64,
}

/// Cumulative true positives at successive cutoffs of a ranking.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EvalCurve {
    universe: u64,
    positives: u64,
    /// `(k, tp)` with k strictly increasing.
    counts: Vec<(u64, u64)>,
}

impl EvalCurve {
    /// Validates the counts against the confusion-matrix invariants.
    pub fn from_counts(universe: u64, positives: u64, counts: Vec<(u64, u64)>) -> Result<Self> {
        if positives == 0 {
            return Err(Error::EmptyGroundTruth);
        }
        if positives > universe {
            return Err(Error::InvalidArgument(format!("{positives} positives exceed the {universe}-pair universe")));
        }
        let mut prev = (0u64, 0u64);
        for (i, &(k, tp)) in counts.iter().enumerate() {
            let fp = k.checked_sub(tp);
            let ok = (i == 0 || k > prev.0)
                && tp >= prev.1
                && tp <= positives
                && fp.is_some_and(|fp| fp >= prev.0 - prev.1 && fp <= universe - positives);
            if !ok {
                return Err(Error::InvalidArgument(format!("inconsistent curve point k={k} tp={tp}")));
            }
            prev = (k, tp);
        }
        Ok(Self { universe, positives, counts })
    }

    pub fn universe(&self) -> u64 {
        self.universe
    }

    pub fn positives(&self) -> u64 {
        self.positives
    }

    pub fn len(&self) -> usize {
        self.counts.len()
    }

    pub fn is_empty(&self) -> bool {
        self.counts.is_empty()
    }

    pub fn point(&self, i: usize) -> CurvePoint {
        let (k, tp) = self.counts[i];
        let fp = k - tp;
        let negatives = self.universe - self.positives;
        CurvePoint {
            k,
            tp,
            fp,
            fn_: self.positives - tp,
            tn: negatives - fp,
            precision: if k == 0 { 1.0 } else { tp as f64 / k as f64 },
            recall: tp as f64 / self.positives as f64,
            fpr: if negatives == 0 { 0.0 } else { fp as f64 / negatives as f64 },
        }
    }

    pub fn points(&self) -> impl Iterator<Item = CurvePoint> + '_ {
        (0..self.len()).map(|i| self.point(i))
    }

    pub fn last(&self) -> Option<CurvePoint> {
        self.len().checked_sub(1).map(|i| self.point(i))
    }

    /// True positives among the first `k` predictions, when `k` is a point.
    pub fn tp_at(&self, k: u64) -> Option<u64> {
        self.counts.binary_search_by_key(&k, |c| c.0).ok().map(|i| self.counts[i].1)
    }

    /// Writes `k,tp,fp,fn,tn,precision,recall,fpr`, every `stride`-th
    /// point plus both endpoints.
    pub fn write_csv<W: Write>(&self, stride: usize, mut out: W) -> Result<()> {
        let stride = stride.max(1);
        writeln!(out, "k,tp,fp,fn,tn,precision,recall,fpr")?;
        let n = self.len();
        for i in 0..n {
            if i % stride != 0 && i + 1 != n {
                continue;
            }
            let p = self.point(i);
            writeln!(out, "{},{},{},{},{},{},{},{}", p.k, p.tp, p.fp, p.fn_, p.tn, p.precision, p.recall, p.fpr)?;
        }
        out.flush()?;
        Ok(())
    }
}

/// Accumulates a ranking one prediction at a time.
#[derive(Debug)]
pub struct CurveBuilder<'a> {
    gt: &'a GroundTruth,
    k: u64,
    tp: u64,
    counts: Vec<(u64, u64)>,
    every_rank: bool,
}

impl<'a> CurveBuilder<'a> {
    /// Records a point per prediction.
    pub fn ranked(gt: &'a GroundTruth) -> Self {
        Self { gt, k: 0, tp: 0, counts: Vec::new(), every_rank: true }
    }

    /// Records only the final point, for unranked sets.
    pub fn unranked(gt: &'a GroundTruth) -> Self {
        Self { every_rank: false, ..Self::ranked(gt) }
    }

    pub fn push(&mut self, from: u32, to: u32) {
        self.k += 1;
        if self.gt.contains(from, to) {
            self.tp += 1;
        }
        if self.every_rank {
            self.counts.push((self.k, self.tp));
        }
    }

    pub fn finish(mut self) -> Result<EvalCurve> {
        if !self.every_rank {
            self.counts.push((self.k, self.tp));
        }
        EvalCurve::from_counts(ordered_pairs(self.gt.num_passages), self.gt.len() as u64, self.counts)
    }
}

/// One point per rank of `ranked`.
pub fn curve<T: Scalar>(ranked: &CandidateSet<T>, gt: &GroundTruth) -> Result<EvalCurve> {
    check_universe(ranked, gt)?;
    let mut b = CurveBuilder::ranked(gt);
    for p in ranked.pairs() {
        b.push(p.from, p.to);
    }
    b.finish()
}

/// The single endpoint of an unranked set.
pub fn set_endpoint<T: Scalar>(set: &CandidateSet<T>, gt: &GroundTruth) -> Result<EvalCurve> {
    check_universe(set, gt)?;
    let mut b = CurveBuilder::unranked(gt);
    for p in set.pairs() {
        b.push(p.from, p.to);
    }
    b.finish()
}

fn check_universe<T: Scalar>(set: &CandidateSet<T>, gt: &GroundTruth) -> Result<()> {
    if set.num_passages() != gt.num_passages {
        return Err(Error::DimensionMismatch { left: set.num_passages(), right: gt.num_passages });
    }
    Ok(())
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum AucKind {
    Roc,
    Prc,
}

/// Trapezoidal area under the curve.
///
/// ROC runs over (FPR, recall) from (0, 0) through every point to (1, 1).
/// PRC runs over (recall, precision) from recall 0 at the first point's
/// precision, and stops at the last point without extrapolation.
pub fn auc(curve: &EvalCurve, kind: AucKind) -> f64 {
    let pts = curve.points().map(|p| match kind {
        AucKind::Roc => (p.fpr, p.recall),
        AucKind::Prc => (p.recall, p.precision),
    });
    let (start, end) = match kind {
        AucKind::Roc => (Some((0.0, 0.0)), Some((1.0, 1.0))),
        AucKind::Prc => (curve.points().next().map(|p| (0.0, p.precision)), None),
    };
    let mut area = 0.0;
    let mut prev: Option<(f64, f64)> = None;
    for (x, y) in start.into_iter().chain(pts).chain(end) {
        if let Some((px, py)) = prev {
            area += (x - px) * (y + py) / 2.0;
        }
        prev = Some((x, y));
    }
    area
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CostEstimate {
    pub k_needed: u64,
    pub dollars: f64,
}

/// Smallest cutoff whose true positives reach `target_tp`, priced per
/// annotated candidate.
pub fn cost_estimate(curve: &EvalCurve, target_tp: u64, price_per_annotation: f64) -> Result<CostEstimate> {
    if target_tp > curve.positives {
        return Err(Error::InvalidArgument(format!(
            "target {target_tp} exceeds the {} ground-truth positives",
            curve.positives
        )));
    }
    if target_tp == 0 {
        return Ok(CostEstimate { k_needed: 0, dollars: 0.0 });
    }
    let i = curve.counts.partition_point(|c| c.1 < target_tp);
    match curve.counts.get(i) {
        Some(&(k, _)) => Ok(CostEstimate { k_needed: k, dollars: k as f64 * price_per_annotation }),
        None => Err(Error::TargetUnreachable {
            target: target_tp as usize,
            max_tp: curve.counts.last().map_or(0, |c| c.1) as usize,
        }),
    }
}

/// `|fpr·(D(D−1) − P) − reported| / reported`.
pub fn consistency_check(positives: u64, num_passages: u64, fpr: f64, reported_fp: f64) -> Result<f64> {
    if num_passages == 0 || !(reported_fp > 0.0) || !(fpr >= 0.0) {
        return Err(Error::InvalidArgument("D and the reported count must be positive, fpr non-negative".into()));
    }
    let negatives = (num_passages * (num_passages - 1)) as f64 - positives as f64;
    Ok((fpr * negatives - reported_fp).abs() / reported_fp)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::candidates::{CandidatePair, Method};
    use crate::corpus::{Passage, PassageId};
    use approx::assert_abs_diff_eq;
    use rand::seq::SliceRandom;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn corpus(n: u32) -> Corpus {
        Corpus::from_passages((1..=n).map(|v| Passage { id: PassageId::verse("Gen", 1, v), text: String::new() }).collect())
            .unwrap()
    }

    fn ranking(d: usize, pairs: &[(u32, u32)]) -> CandidateSet<f64> {
        let pairs = pairs.iter().enumerate().map(|(i, &(from, to))| CandidatePair { from, to, score: i as f64 }).collect();
        CandidateSet::new(Method::Cosine, d, pairs).unwrap()
    }

    /// Explicit confusion matrix over every ordered pair at cutoff k.
    fn confusion(d: u32, ranked: &[(u32, u32)], gt: &[(u32, u32)], k: usize) -> (u64, u64, u64, u64) {
        let predicted = &ranked[..k];
        let (mut tp, mut fp, mut fn_, mut tn) = (0, 0, 0, 0);
        for a in 0..d {
            for b in 0..d {
                if a == b {
                    continue;
                }
                match (predicted.contains(&(a, b)), gt.contains(&(a, b))) {
                    (true, true) => tp += 1,
                    (true, false) => fp += 1,
                    (false, true) => fn_ += 1,
                    (false, false) => tn += 1,
                }
            }
        }
        (tp, fp, fn_, tn)
    }

    fn check_against_oracle(d: u32, ranked: &[(u32, u32)], gt_pairs: &[(u32, u32)]) {
        let gt = GroundTruth::from_pairs("toy", d as usize, gt_pairs.iter().copied()).unwrap();
        let c = curve(&ranking(d as usize, ranked), &gt).unwrap();
        assert_eq!(c.len(), ranked.len());
        for (i, p) in c.points().enumerate() {
            let (tp, fp, fn_, tn) = confusion(d, ranked, gt_pairs, i + 1);
            assert_eq!((p.tp, p.fp, p.fn_, p.tn), (tp, fp, fn_, tn));
            assert_eq!(p.precision, tp as f64 / (i + 1) as f64);
            assert_eq!(p.recall, tp as f64 / gt_pairs.len() as f64);
            assert_eq!(p.fpr, fp as f64 / (fp + tn) as f64);
        }
    }

    #[test]
    fn four_passage_toy() {
        // Passages 1..4 of the example are positions 0..3.
        let gt = [(0, 1), (1, 0), (2, 3)];
        let ranked = [(0, 1), (0, 2), (2, 3), (1, 0)];
        let g = GroundTruth::from_pairs("toy", 4, gt).unwrap();
        let c = curve(&ranking(4, &ranked), &g).unwrap();
        assert_eq!(c.universe(), 12);
        assert_eq!(c.points().map(|p| p.tp).collect::<Vec<_>>(), [1, 1, 2, 3]);
        let prec: Vec<f64> = c.points().map(|p| p.precision).collect();
        let rec: Vec<f64> = c.points().map(|p| p.recall).collect();
        for (a, b) in prec.iter().zip([1.0, 0.5, 2.0 / 3.0, 0.75]) {
            assert_abs_diff_eq!(*a, b, epsilon = 1e-15);
        }
        for (a, b) in rec.iter().zip([1.0 / 3.0, 1.0 / 3.0, 2.0 / 3.0, 1.0]) {
            assert_abs_diff_eq!(*a, b, epsilon = 1e-15);
        }
        check_against_oracle(4, &ranked, &gt);
        let cost = cost_estimate(&c, 2, 1.0).unwrap();
        assert_eq!(cost.k_needed, 3);
    }

    #[test]
    fn random_toys_match_oracle() {
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        for _ in 0..20 {
            let d = rng.gen_range(2..=10u32);
            let mut all: Vec<(u32, u32)> = (0..d).flat_map(|a| (0..d).filter(move |&b| b != a).map(move |b| (a, b))).collect();
            all.shuffle(&mut rng);
            let gt: Vec<_> = all.iter().copied().filter(|_| rng.gen_bool(0.3)).collect();
            let gt = if gt.is_empty() { vec![all[0]] } else { gt };
            all.shuffle(&mut rng);
            let k = rng.gen_range(1..=all.len());
            check_against_oracle(d, &all[..k], &gt);
        }
    }

    #[test]
    fn perfect_disjoint_and_inverted() {
        let d = 6u32;
        let all: Vec<(u32, u32)> = (0..d).flat_map(|a| (0..d).filter(move |&b| b != a).map(move |b| (a, b))).collect();
        let gt: Vec<_> = all.iter().copied().filter(|p| (p.0 + p.1) % 3 == 0).collect();
        let neg: Vec<_> = all.iter().copied().filter(|p| !gt.contains(p)).collect();
        let g = GroundTruth::from_pairs("toy", d as usize, gt.iter().copied()).unwrap();
        let p = gt.len() as f64;

        let perfect = curve(&ranking(d as usize, &gt), &g).unwrap();
        assert!(perfect.points().all(|x| x.precision == 1.0));
        assert_eq!(perfect.last().unwrap().recall, 1.0);
        assert!(auc(&perfect, AucKind::Roc) >= 1.0 - 1.0 / p);
        assert_abs_diff_eq!(auc(&perfect, AucKind::Prc), 1.0, epsilon = 1e-12);

        let disjoint = curve(&ranking(d as usize, &neg[..5]), &g).unwrap();
        assert!(disjoint.points().all(|x| x.tp == 0 && x.precision == 0.0));

        let inverted: Vec<_> = neg.iter().chain(&gt).copied().collect();
        let inv = curve(&ranking(d as usize, &inverted), &g).unwrap();
        assert!(auc(&inv, AucKind::Roc) <= 1.0 / p);
    }

    #[test]
    fn random_ranking_has_chance_auc() {
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        let d = 60u32;
        let mut all: Vec<(u32, u32)> = (0..d).flat_map(|a| (0..d).filter(move |&b| b != a).map(move |b| (a, b))).collect();
        let gt: Vec<_> = all.iter().copied().filter(|_| rng.gen_bool(0.1)).collect();
        all.shuffle(&mut rng);
        let g = GroundTruth::from_pairs("toy", d as usize, gt).unwrap();
        let c = curve(&ranking(d as usize, &all), &g).unwrap();
        let a = auc(&c, AucKind::Roc);
        assert!((a - 0.5).abs() <= 0.05, "{a}");
    }

    #[test]
    fn auc_depends_only_on_order() {
        let mut rng = ChaCha8Rng::seed_from_u64(2);
        let d = 8usize;
        let mut pairs: Vec<(u32, u32, f64)> = Vec::new();
        for a in 0..d as u32 {
            for b in 0..d as u32 {
                if a != b {
                    pairs.push((a, b, rng.gen::<f64>()));
                }
            }
        }
        let gt: Vec<_> = pairs.iter().filter(|p| p.2 < 0.3).map(|p| (p.0, p.1)).collect();
        let g = GroundTruth::from_pairs("toy", d, gt).unwrap();
        let build = |f: &dyn Fn(f64) -> f64| {
            let mut v: Vec<_> = pairs.iter().map(|p| (p.0, p.1, f(p.2 + rng_noise(p.0, p.1)))).collect();
            v.sort_by(|a, b| a.2.partial_cmp(&b.2).unwrap());
            let set = CandidateSet::new(
                Method::Cosine,
                d,
                v.iter().map(|p| CandidatePair { from: p.0, to: p.1, score: p.2 }).collect(),
            )
            .unwrap();
            let c = curve(&set, &g).unwrap();
            (auc(&c, AucKind::Roc), auc(&c, AucKind::Prc))
        };
        assert_eq!(build(&|x| x), build(&|x| x.exp() * 3.0 + 1.0));
    }

    fn rng_noise(a: u32, b: u32) -> f64 {
        ((a * 31 + b) % 7) as f64 * 0.05
    }

    #[test]
    fn unranked_endpoint() {
        let g = GroundTruth::from_pairs("toy", 4, [(0, 1), (1, 0), (2, 3)]).unwrap();
        let set = ranking(4, &[(0, 1), (3, 2), (2, 3)]);
        let c = set_endpoint(&set, &g).unwrap();
        assert_eq!(c.len(), 1);
        let p = c.last().unwrap();
        assert_eq!((p.k, p.tp, p.fp), (3, 2, 1));
    }

    #[test]
    fn cost_examples() {
        let c = EvalCurve::from_counts(1_000_000_000, 670_796, vec![(100_000, 9_000), (150_000, 12_000), (200_000, 13_000)])
            .unwrap();
        let e = cost_estimate(&c, 12_000, 0.05).unwrap();
        assert_eq!(e.k_needed, 150_000);
        assert_abs_diff_eq!(e.dollars, 7_500.0, epsilon = 1e-9);
        assert_eq!(cost_estimate(&c, 0, 0.05).unwrap(), CostEstimate { k_needed: 0, dollars: 0.0 });
        assert!(matches!(cost_estimate(&c, 20_000, 0.05), Err(Error::TargetUnreachable { max_tp: 13_000, .. })));
        assert!(cost_estimate(&c, 700_000, 0.05).is_err());
    }

    #[test]
    fn consistency_examples() {
        let e = consistency_check(670_796, 31_085, 0.196, 188_974_806.0).unwrap();
        let oracle = (0.196 * (31_085.0 * 31_084.0 - 670_796.0) - 188_974_806.0f64).abs() / 188_974_806.0;
        assert_eq!(e, oracle);
        assert!(e < 0.005);
        assert_eq!(consistency_check(10, 100, 0.0, 5.0).unwrap(), 1.0);
        let exact = 0.25 * (100.0 * 99.0 - 10.0);
        assert_eq!(consistency_check(10, 100, 0.25, exact).unwrap(), 0.0);
        assert!(consistency_check(10, 100, 0.25, 0.0).is_err());
    }

    #[test]
    fn curve_invariants_enforced() {
        assert!(EvalCurve::from_counts(12, 3, vec![(1, 1), (2, 0)]).is_err());
        assert!(EvalCurve::from_counts(12, 3, vec![(1, 2)]).is_err());
        assert!(EvalCurve::from_counts(12, 0, vec![]).is_err());
        assert!(EvalCurve::from_counts(12, 3, vec![(2, 1), (2, 1)]).is_err());
    }

    #[test]
    fn csv_stride_keeps_endpoints() {
        let c = EvalCurve::from_counts(12, 3, vec![(1, 1), (2, 1), (3, 2), (4, 3), (5, 3)]).unwrap();
        let mut out = Vec::new();
        c.write_csv(2, &mut out).unwrap();
        let text = String::from_utf8(out).unwrap();
        let ks: Vec<&str> = text.lines().skip(1).map(|l| l.split(',').next().unwrap()).collect();
        assert_eq!(ks, ["1", "3", "5"]);
        assert!(text.starts_with("k,tp,fp,fn,tn,precision,recall,fpr\n1,1,0,2,9,1,0.3333333333333333,0\n"));
        let mut out = Vec::new();
        c.write_csv(3, &mut out).unwrap();
        assert_eq!(String::from_utf8(out).unwrap().lines().count(), 4);
    }

    #[test]
    fn loads_vote_file() {
        let c = corpus(5);
        let text = "From Verse\tTo Verse\tVotes\n\
                    Gen.1.1\tGen.1.2\t7\n\
                    Gen.1.1\tGen.1.3-Gen.1.5\t2\n\
                    Gen.1.2\tGen.1.1\t-3\n\
                    # comment\n\
                    Gen.1.1\tGen.1.2\t9\n\
                    Gen.1.4\tGen.1.4\t1\n";
        let g = load_ground_truth(text.as_bytes(), GroundTruthFormat::OpenbibleVotes, Some(0), &c, "ob").unwrap();
        assert_eq!(g.sorted_pairs(), [(0, 1), (0, 2)]);
        assert_eq!(g.votes(0, 1), Some(9));
        assert_eq!(g.stats().collapsed_ranges, 1);
        assert_eq!(g.stats().below_min_votes, 1);
        assert_eq!(g.stats().self_pairs, 1);
        assert_eq!(g.stats().duplicates, 1);
        let g5 = load_ground_truth(text.as_bytes(), GroundTruthFormat::OpenbibleVotes, Some(5), &c, "ob").unwrap();
        assert_eq!(g5.sorted_pairs(), [(0, 1)]);
        let all = load_ground_truth(text.as_bytes(), GroundTruthFormat::OpenbibleVotes, None, &c, "ob").unwrap();
        assert!(all.contains(1, 0));
    }

    #[test]
    fn loader_errors() {
        let c = corpus(3);
        let bad = "Gen.1.1\tGen.1.2\tmany\n";
        assert!(matches!(
            load_ground_truth(bad.as_bytes(), GroundTruthFormat::OpenbibleVotes, None, &c, "x"),
            Err(Error::Parse { line: 1, .. })
        ));
        assert!(load_ground_truth("Gen.1.1\tGen.1.2\n".as_bytes(), GroundTruthFormat::PairsTsv, Some(1), &c, "x").is_err());
        let mostly_unknown = "Gen.1.1\tGen.1.2\nExod.1.1\tExod.1.2\n";
        assert!(matches!(
            load_ground_truth(mostly_unknown.as_bytes(), GroundTruthFormat::PairsTsv, None, &c, "x"),
            Err(Error::TooManyUnresolved { unresolved: 1, total: 2 })
        ));
        assert!(matches!(
            load_ground_truth("".as_bytes(), GroundTruthFormat::PairsTsv, None, &c, "x"),
            Err(Error::EmptyGroundTruth)
        ));
    }

    #[test]
    fn pairs_tsv_roundtrip() {
        let c = corpus(4);
        let g = GroundTruth::from_pairs("toy", 4, [(3, 0), (0, 1), (2, 1)]).unwrap();
        let mut out = Vec::new();
        write_pairs_tsv(g.sorted_pairs(), &c, &mut out).unwrap();
        assert_eq!(String::from_utf8(out.clone()).unwrap(), "Gen.1.1\tGen.1.2\nGen.1.3\tGen.1.2\nGen.1.4\tGen.1.1\n");
        let back = load_ground_truth(out.as_slice(), GroundTruthFormat::PairsTsv, None, &c, "toy").unwrap();
        assert_eq!(back.sorted_pairs(), g.sorted_pairs());
    }
}
