//! Pipeline stages. Each stage has a content key derived from its resolved
//! configuration and the keys of the stages it reads; a stage whose key and
//! outputs are unchanged is skipped.

use std::cell::RefCell;
use std::collections::{BTreeMap, HashMap, HashSet};
use std::fs::File;
use std::io::{BufReader, Write};
use std::path::{Path, PathBuf};

use anyhow::{anyhow, bail, Context, Result};
use serde::Serialize;
use serde_json::{json, Value};
use xref_core::anchors::{gram_schmidt_anchors, tandem_anchors};
use xref_core::artifact::{Artifact, ArtifactWriter};
use xref_core::candidates::{
    generate_candidates, Baseline, CandidateConfig, CandidateCsvWriter, InvertedIndex, Method, Metric,
    PassageOrder,
};
use xref_core::cooccurrence::build_cooccurrence;
use xref_core::corpus::{
    index_from_artifact, index_to_artifact, Corpus, CorpusFormat, DocTermCounts, Vocabulary, INDEX_ARTIFACT_KIND,
};
use xref_core::evaluation::{auc, load_ground_truth, AucKind, CurveBuilder, EvalCurve, GroundTruth, GroundTruthFormat};
use xref_core::inference::{argmax_topic, infer_all, sparsify, theta_from_artifact, theta_to_artifact, THETA_ARTIFACT_KIND};
use xref_core::topics::recover_topics;
use xref_core::{AnchorSet, CandidateSet, Cooccurrence, DocTopicVector, TopicModel};

use crate::config::{AnchorMethod, PipelineConfig};
use crate::workspace::{hash_file, stage_key, Manifest, Workspace};

pub const CORPUS_FILE: &str = "corpus.jsonl";
pub const INDEX_FILE: &str = "index.art";
pub const COOC_FILE: &str = "cooc.art";
pub const ANCHORS_FILE: &str = "anchors.art";
pub const TOPICS_FILE: &str = "topics.art";
pub const THETA_FILE: &str = "theta.art";
pub const RESOLVED_CONFIG: &str = "config.resolved.toml";

pub fn candidates_file(metric: Metric) -> String {
    format!("candidates-{metric}.csv")
}

pub fn baseline_file(method: Method) -> String {
    format!("baseline-{}.csv", method.name())
}

/// Pipeline state for one invocation.
pub struct Pipeline {
    pub cfg: PipelineConfig,
    pub ws: Workspace,
    pub force: bool,
    keys: RefCell<HashMap<String, String>>,
    verified: RefCell<HashSet<String>>,
}

impl Pipeline {
    pub fn new(cfg: PipelineConfig, force: bool) -> Result<Self> {
        let ws = Workspace::open(&cfg.out)?;
        Ok(Self { cfg, ws, force, keys: RefCell::default(), verified: RefCell::default() })
    }

    pub fn write_resolved_config(&self) -> Result<()> {
        crate::workspace::write_atomic(&self.ws.path(RESOLVED_CONFIG), self.cfg.to_toml()?.as_bytes())
    }

    fn upstream(stage: &str) -> &'static [&'static str] {
        match stage {
            "ingest" => &[],
            "cooc" => &["ingest"],
            "anchors" => &["ingest", "cooc"],
            "topics" => &["cooc", "anchors"],
            "infer" => &["ingest", "topics"],
            "baseline-word-match" => &["ingest"],
            s if s.starts_with("candidates-") || s.starts_with("baseline-") => &["ingest", "infer"],
            _ => &[],
        }
    }

    fn num_passages(&self) -> Result<usize> {
        let m = self.ws.require("ingest", &self.key("ingest")?)?;
        m.info["passages"].as_u64().map(|n| n as usize).ok_or_else(|| anyhow!("ingest manifest lacks a passage count"))
    }

    /// Resolved settings that determine a stage's outputs.
    fn stage_config(&self, stage: &str) -> Result<Value> {
        let c = &self.cfg;
        Ok(match stage {
            "ingest" => json!({
                "format": c.format,
                "vocabulary": c.vocabulary()?,
            }),
            "cooc" => json!({}),
            "anchors" => {
                let k = c.anchors.resolved_k(self.num_passages()?);
                match c.anchors.method {
                    AnchorMethod::Tandem => json!({
                        "method": c.anchors.method, "k": k, "min_tokens": c.anchors.min_tokens, "seed": c.seed,
                    }),
                    _ => json!({ "method": c.anchors.method, "k": k, "candidate_min_df": c.anchors.candidate_min_df }),
                }
            }
            "topics" => serde_json::to_value(c.solver)?,
            "infer" => serde_json::to_value(c.inference.core())?,
            s if s.starts_with("candidates-") => json!({
                "metric": &s["candidates-".len()..],
                "selection": c.candidates.selection()?,
                "sparsify": c.inference.sparsify,
            }),
            s if s.starts_with("baseline-") => json!({ "method": &s["baseline-".len()..] }),
            other => bail!("unknown stage `{other}`"),
        })
    }

    fn stage_inputs(&self, stage: &str) -> Result<BTreeMap<String, String>> {
        let mut inputs = BTreeMap::new();
        if stage == "ingest" {
            let path = self.corpus_path()?;
            inputs.insert("corpus-file".to_owned(), hash_file(path)?);
        }
        for up in Self::upstream(stage) {
            inputs.insert((*up).to_owned(), self.key(up)?);
        }
        Ok(inputs)
    }

    /// The key `stage` would have if run now.
    pub fn key(&self, stage: &str) -> Result<String> {
        if let Some(k) = self.keys.borrow().get(stage) {
            return Ok(k.clone());
        }
        let k = stage_key(stage, &self.stage_config(stage)?, &self.stage_inputs(stage)?);
        self.keys.borrow_mut().insert(stage.to_owned(), k.clone());
        Ok(k)
    }

    fn corpus_path(&self) -> Result<&Path> {
        self.cfg.corpus.as_deref().ok_or_else(|| anyhow!("no corpus given: pass --corpus or set `corpus` in the config"))
    }

    /// Requires every upstream stage to be current. Returns `None` when
    /// the stage itself is current and need not run.
    fn prepare(&self, stage: &str) -> Result<Option<(String, BTreeMap<String, String>)>> {
        self.require_upstream(stage)?;
        let key = self.key(stage)?;
        if !self.force && self.ws.is_fresh(stage, &key)? {
            log::info!("{stage}: up to date");
            eprintln!("{stage}: up to date");
            return Ok(None);
        }
        Ok(Some((key, self.stage_inputs(stage)?)))
    }

    /// Checks the whole upstream chain, sources first, so an error names
    /// the earliest missing or stale stage.
    fn require_upstream(&self, stage: &str) -> Result<()> {
        for up in Self::upstream(stage) {
            self.require(up)?;
        }
        Ok(())
    }

    /// Requires `stage` and everything it reads to be current.
    pub fn require(&self, stage: &str) -> Result<()> {
        if self.verified.borrow().contains(stage) {
            return Ok(());
        }
        self.require_upstream(stage)?;
        self.ws.require(stage, &self.key(stage)?)?;
        self.verified.borrow_mut().insert(stage.to_owned());
        Ok(())
    }

    fn commit(&self, staging: crate::workspace::Staging<'_>, stage: &str, key: &str, inputs: BTreeMap<String, String>, info: Value) -> Result<Manifest> {
        let m = staging.commit(key, self.stage_config(stage)?, inputs, info)?;
        eprintln!("{stage}: wrote {}", m.outputs.keys().cloned().collect::<Vec<_>>().join(", "));
        Ok(m)
    }

    // Loaders for upstream artifacts.

    pub fn load_corpus(&self) -> Result<Corpus> {
        let f = File::open(self.ws.path(CORPUS_FILE)).context("opening corpus.jsonl")?;
        Ok(Corpus::parse(BufReader::new(f), CorpusFormat::Jsonl)?)
    }

    fn artifact(&self, name: &str) -> Result<Artifact> {
        let bytes = std::fs::read(self.ws.path(name)).with_context(|| format!("reading {name}"))?;
        Artifact::decode(bytes).with_context(|| format!("decoding {name}"))
    }

    pub fn load_index(&self) -> Result<(Vocabulary, DocTermCounts)> {
        Ok(index_from_artifact(&self.artifact(INDEX_FILE)?)?)
    }

    pub fn load_topics(&self) -> Result<TopicModel> {
        Ok(TopicModel::from_artifact(&self.artifact(TOPICS_FILE)?)?)
    }

    pub fn load_theta(&self) -> Result<Vec<DocTopicVector>> {
        Ok(theta_from_artifact(&self.artifact(THETA_FILE)?)?)
    }

    // Stages.

    pub fn ingest(&self) -> Result<()> {
        let Some((key, inputs)) = self.prepare("ingest")? else { return Ok(()) };
        let path = self.corpus_path()?;
        let f = File::open(path).with_context(|| format!("opening corpus {}", path.display()))?;
        let corpus = Corpus::parse(BufReader::new(f), self.cfg.format)?;
        let (vocab, counts) = Vocabulary::build_with_counts(&corpus, &self.cfg.vocabulary()?)?;
        let empty = (0..counts.num_docs()).filter(|&d| counts.row(d).is_empty()).count();
        let mut s = self.ws.begin("ingest");
        s.writer(CORPUS_FILE, |w| Ok(corpus.write_jsonl(w)?))?;
        s.bytes(INDEX_FILE, &index_to_artifact(&vocab, &counts, ArtifactWriter::new(INDEX_ARTIFACT_KIND))?)?;
        let info = json!({
            "passages": corpus.len(),
            "vocabulary": vocab.len(),
            "tokens": (0..counts.num_docs()).map(|d| u64::from(counts.doc_len(d))).sum::<u64>(),
            "empty_passages": empty,
        });
        self.commit(s, "ingest", &key, inputs, info)?;
        Ok(())
    }

    pub fn cooc(&self) -> Result<()> {
        let Some((key, inputs)) = self.prepare("cooc")? else { return Ok(()) };
        let (_, counts) = self.load_index()?;
        let q: Cooccurrence = build_cooccurrence(&counts)?;
        let info = json!({ "docs_used": q.docs_used(), "excluded_words": q.excluded().len() });
        let mut s = self.ws.begin("cooc");
        s.bytes(COOC_FILE, &q.to_artifact(ArtifactWriter::new(Cooccurrence::ARTIFACT_KIND))?)?;
        self.commit(s, "cooc", &key, inputs, info)?;
        Ok(())
    }

    pub fn anchors(&self) -> Result<()> {
        let Some((key, inputs)) = self.prepare("anchors")? else { return Ok(()) };
        let q = Cooccurrence::from_artifact(&self.artifact(COOC_FILE)?)?;
        let (_, counts) = self.load_index()?;
        let a = &self.cfg.anchors;
        let k = a.resolved_k(counts.num_docs());
        let set: AnchorSet = match a.method {
            AnchorMethod::Tandem => tandem_anchors(&q, &counts, k, self.cfg.seed, a.min_tokens)?,
            AnchorMethod::GramSchmidt | AnchorMethod::CoarseProxy => {
                gram_schmidt_anchors(&q, k, a.candidate_min_df, &counts.column_doc_freq())?
            }
        };
        let mut s = self.ws.begin("anchors");
        s.bytes(ANCHORS_FILE, &set.to_artifact(ArtifactWriter::new(AnchorSet::ARTIFACT_KIND))?)?;
        self.commit(s, "anchors", &key, inputs, json!({ "k": set.k() }))?;
        Ok(())
    }

    pub fn topics(&self) -> Result<()> {
        let Some((key, inputs)) = self.prepare("topics")? else { return Ok(()) };
        let q = Cooccurrence::from_artifact(&self.artifact(COOC_FILE)?)?;
        let anchors = AnchorSet::from_artifact(&self.artifact(ANCHORS_FILE)?)?;
        let model = recover_topics(&q, &anchors, &self.cfg.solver)?;
        let info = json!({ "k": model.k(), "flagged_words": model.flagged().len() });
        if !model.flagged().is_empty() {
            log::warn!("{} words did not reach the solver tolerance", model.flagged().len());
        }
        let mut s = self.ws.begin("topics");
        s.bytes(TOPICS_FILE, &model.to_artifact(ArtifactWriter::new(TopicModel::ARTIFACT_KIND))?)?;
        self.commit(s, "topics", &key, inputs, info)?;
        Ok(())
    }

    /// Top words of one topic, for inspection.
    pub fn show_topic(&self, topic: usize, top: usize) -> Result<Vec<(String, f64)>> {
        self.require("topics")?;
        let model = self.load_topics()?;
        if topic >= model.k() {
            bail!("topic {topic} out of range: the model has {} topics", model.k());
        }
        let (vocab, _) = self.load_index()?;
        Ok(model.top_words(topic, top).into_iter().map(|(w, p)| (vocab.term(w).to_owned(), p)).collect())
    }

    pub fn infer(&self) -> Result<()> {
        let Some((key, inputs)) = self.prepare("infer")? else { return Ok(()) };
        let (_, counts) = self.load_index()?;
        let model = self.load_topics()?;
        let docs = infer_all(&counts, &model, &self.cfg.inference.core())?;
        let info = json!({
            "passages": docs.len(),
            "not_converged": docs.iter().filter(|d| !d.converged).count(),
            "degenerate": docs.iter().filter(|d| d.degenerate).count(),
        });
        let mut s = self.ws.begin("infer");
        s.bytes(THETA_FILE, &theta_to_artifact(&docs, model.k(), ArtifactWriter::new(THETA_ARTIFACT_KIND))?)?;
        self.commit(s, "infer", &key, inputs, info)?;
        Ok(())
    }

    pub fn candidates(&self, metric: Metric) -> Result<()> {
        let stage = format!("candidates-{metric}");
        let Some((key, inputs)) = self.prepare(&stage)? else { return Ok(()) };
        let corpus = self.load_corpus()?;
        let thetas = self
            .load_theta()?
            .iter()
            .map(|d| sparsify(&d.theta, self.cfg.inference.sparsify))
            .collect::<xref_core::Result<Vec<_>>>()?;
        let cfg = CandidateConfig {
            metric,
            selection: self.cfg.candidates.selection()?,
            block_rows: self.cfg.candidates.block_rows,
        };
        let set = generate_candidates(&thetas, &cfg, &PassageOrder::from_corpus(&corpus))?;
        let mut s = self.ws.begin(&stage);
        s.writer(&candidates_file(metric), |w| Ok(set.write_csv(&corpus, w)?))?;
        self.commit(s, &stage, &key, inputs, json!({ "rows": set.len() }))?;
        Ok(())
    }

    fn topic_assignments(&self) -> Result<Vec<usize>> {
        Ok(self.load_theta()?.iter().map(|d| argmax_topic(&d.theta)).collect())
    }

    /// Streams a baseline's pairs to `f` in canonical order.
    fn for_each_baseline_row<F>(&self, method: Method, f: F) -> Result<()>
    where
        F: FnMut(u32, &[u32]) -> xref_core::Result<()>,
    {
        let corpus = self.load_corpus()?;
        let order = PassageOrder::from_corpus(&corpus);
        let (_, counts) = self.load_index()?;
        match method {
            Method::WordMatch => Baseline::WordMatch(&InvertedIndex::new(&counts)).for_each_row(&order, f)?,
            Method::TopicMatch => Baseline::TopicMatch(&self.topic_assignments()?).for_each_row(&order, f)?,
            Method::TopicWordMatch => {
                let a = self.topic_assignments()?;
                Baseline::TopicWordMatch(&InvertedIndex::new(&counts), &a).for_each_row(&order, f)?
            }
            other => bail!("`{}` is not a baseline", other.name()),
        }
        Ok(())
    }

    pub fn baseline(&self, method: Method) -> Result<()> {
        if method.metric().is_some() {
            bail!("`{}` is not a baseline method", method.name());
        }
        let stage = format!("baseline-{}", method.name());
        let Some((key, inputs)) = self.prepare(&stage)? else { return Ok(()) };
        let corpus = self.load_corpus()?;
        let mut rows = 0u64;
        let mut s = self.ws.begin(&stage);
        s.writer(&baseline_file(method), |w| {
            let mut csv = CandidateCsvWriter::new(w)?;
            self.for_each_baseline_row(method, |from, targets| {
                for &to in targets {
                    csv.write(&corpus, from, to, 0.0f64, method)?;
                }
                Ok(())
            })?;
            rows = csv.rows();
            Ok(csv.finish()?)
        })?;
        self.commit(s, &stage, &key, inputs, json!({ "rows": rows }))?;
        Ok(())
    }

    /// Evaluates a method's output against ground truth. Ranked methods get
    /// one curve point per rank; baselines a single endpoint.
    pub fn eval(&self, req: &EvalRequest) -> Result<EvalReport> {
        self.require("ingest")?;
        let corpus = self.load_corpus()?;
        let f = File::open(&req.gt).with_context(|| format!("opening ground truth {}", req.gt.display()))?;
        let source = req.gt.display().to_string();
        let gt = load_ground_truth(BufReader::new(f), req.gt_format, req.min_votes, &corpus, &source)?;
        eprintln!("ground truth: {} positives from {}", gt.len(), source);
        let (method, ranked, curve) = match (&req.candidates, req.method) {
            (Some(path), _) => {
                let f = File::open(path).with_context(|| format!("opening {}", path.display()))?;
                let set: CandidateSet = CandidateSet::read_csv(&corpus, BufReader::new(f))?;
                let ranked = set.method().metric().is_some();
                let curve = if ranked { xref_core::evaluation::curve(&set, &gt)? } else { xref_core::evaluation::set_endpoint(&set, &gt)? };
                (set.method(), ranked, curve)
            }
            (None, Some(m)) if m.metric().is_some() => {
                let metric = m.metric().expect("ranked method");
                let stage = format!("candidates-{metric}");
                self.require(&stage)?;
                let f = File::open(self.ws.path(&candidates_file(metric)))?;
                let set: CandidateSet = CandidateSet::read_csv(&corpus, BufReader::new(f))?;
                (m, true, xref_core::evaluation::curve(&set, &gt)?)
            }
            (None, Some(m)) => {
                self.require_upstream(&format!("baseline-{}", m.name()))?;
                let mut b = CurveBuilder::unranked(&gt);
                self.for_each_baseline_row(m, |from, targets| {
                    for &to in targets {
                        b.push(from, to);
                    }
                    Ok(())
                })?;
                (m, false, b.finish()?)
            }
            (None, None) => bail!("eval needs --method or --candidates"),
        };
        let report = EvalReport::new(method, ranked, &gt, &curve, req)?;
        let name = req.name.clone().unwrap_or_else(|| method.name().to_owned());
        let mut s = self.ws.begin(&format!("eval-{name}"));
        s.writer(&format!("curve-{name}.csv"), |w| Ok(curve.write_csv(req.stride, w)?))?;
        s.bytes(&format!("eval-{name}.json"), (serde_json::to_string_pretty(&report)? + "\n").as_bytes())?;
        let config = json!({
            "ground_truth": hash_file(&req.gt)?,
            "format": req.gt_format,
            "min_votes": req.min_votes,
            "stride": req.stride,
        });
        let mut inputs = BTreeMap::new();
        match &req.candidates {
            Some(path) => inputs.insert("candidates-file".to_owned(), hash_file(path)?),
            None => inputs.insert("ingest".to_owned(), self.key("ingest")?),
        };
        let key = stage_key(&format!("eval-{name}"), &config, &inputs);
        let m = s.commit(&key, config, inputs, Value::Null)?;
        eprintln!("eval: wrote {}", m.outputs.keys().cloned().collect::<Vec<_>>().join(", "));
        Ok(report)
    }
}

#[derive(Debug, Clone)]
pub struct EvalRequest {
    pub gt: PathBuf,
    pub gt_format: GroundTruthFormat,
    pub min_votes: Option<i64>,
    pub method: Option<Method>,
    pub candidates: Option<PathBuf>,
    pub stride: usize,
    pub name: Option<String>,
}

#[derive(Debug, Clone, Serialize)]
pub struct EvalReport {
    pub method: String,
    pub ranked: bool,
    pub ground_truth: String,
    pub ground_truth_format: GroundTruthFormat,
    pub min_votes: Option<i64>,
    pub load_stats: xref_core::evaluation::LoadStats,
    pub positives: u64,
    pub universe: u64,
    pub predictions: u64,
    pub tp: u64,
    pub precision: f64,
    pub recall: f64,
    pub fpr: f64,
    pub roc_auc: f64,
    /// Absent for single-point curves.
    pub pr_auc: Option<f64>,
}

impl EvalReport {
    fn new(method: Method, ranked: bool, gt: &GroundTruth, curve: &EvalCurve, req: &EvalRequest) -> Result<Self> {
        let last = curve.last().ok_or_else(|| anyhow!("empty curve"))?;
        Ok(Self {
            method: method.name().to_owned(),
            ranked,
            ground_truth: gt.source().to_owned(),
            ground_truth_format: req.gt_format,
            min_votes: req.min_votes,
            load_stats: gt.stats().clone(),
            positives: curve.positives(),
            universe: curve.universe(),
            predictions: last.k,
            tp: last.tp,
            precision: last.precision,
            recall: last.recall,
            fpr: last.fpr,
            roc_auc: auc(curve, AucKind::Roc),
            pr_auc: ranked.then(|| auc(curve, AucKind::Prc)),
        })
    }
}

/// Reads a curve CSV written by `eval` back into a curve.
pub fn read_curve_csv(path: &Path) -> Result<EvalCurve> {
    let text = std::fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
    let mut lines = text.lines();
    let header = lines.next().unwrap_or_default();
    if header != "k,tp,fp,fn,tn,precision,recall,fpr" {
        bail!("{}: not a curve CSV", path.display());
    }
    let mut counts = Vec::new();
    let (mut universe, mut positives) = (0u64, 0u64);
    for (i, line) in lines.enumerate() {
        let f: Vec<&str> = line.split(',').collect();
        let num = |j: usize| -> Result<u64> {
            f.get(j)
                .and_then(|s| s.parse().ok())
                .ok_or_else(|| anyhow!("{}: bad field {} on line {}", path.display(), j + 1, i + 2))
        };
        let (k, tp, fp, fn_, tn) = (num(0)?, num(1)?, num(2)?, num(3)?, num(4)?);
        universe = tp + fp + fn_ + tn;
        positives = tp + fn_;
        counts.push((k, tp));
    }
    Ok(EvalCurve::from_counts(universe, positives, counts)?)
}

/// Writes `text` to stdout followed by a newline.
pub fn print(text: &str) -> Result<()> {
    let mut out = std::io::stdout().lock();
    writeln!(out, "{text}")?;
    Ok(())
}
