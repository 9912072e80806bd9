//! Per-passage topic proportions with the topic-word matrix held fixed.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::artifact::{Artifact, ArtifactWriter};
use crate::corpus::DocTermCounts;
use crate::scalar::digamma;
use crate::topics::TopicModel;
use crate::{Error, Matrix, Result, Scalar};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct InferenceConfig {
    /// Symmetric Dirichlet concentration.
    pub alpha: f64,
    pub max_iters: usize,
    /// Convergence threshold on mean |Δγ| per topic.
    pub tol: f64,
}

impl Default for InferenceConfig {
    fn default() -> Self {
        Self { alpha: 0.01, max_iters: 100, tol: 1e-5 }
    }
}

impl InferenceConfig {
    fn validate(&self) -> Result<()> {
        if !(self.alpha > 0.0) || !(self.tol > 0.0) {
            return Err(Error::InvalidArgument("alpha and tol must be positive".into()));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct DocTopicVector<T> {
    pub passage: usize,
    /// Expected topic proportions, on the K-simplex.
    pub theta: Vec<T>,
    pub iterations: usize,
    pub converged: bool,
    /// No in-model evidence: theta is uniform.
    pub degenerate: bool,
}

/// Mean-field variational update for one passage.
///
/// Alternates `φ_ik ∝ A_ik exp(ψ(γ_k))` and `γ_k = α + Σ_i w_i φ_ik` from
/// `γ = α + n/K` until the mean absolute change of γ drops below `tol`.
/// θ is the normalized expected assignment count `γ − α`. Words whose row
/// of A is entirely zero carry no evidence and are skipped.
pub fn infer_doc_topics<T: Scalar>(
    passage: usize,
    row: &[(u32, u32)],
    model: &TopicModel<T>,
    cfg: &InferenceConfig,
) -> Result<DocTopicVector<T>> {
    cfg.validate()?;
    let k = model.k();
    let a = model.topic_word();
    let uniform = || DocTopicVector {
        passage,
        theta: vec![T::one() / T::lit(k as f64); k],
        iterations: 0,
        converged: true,
        degenerate: true,
    };

    let words: Vec<(usize, T)> = row
        .iter()
        .filter(|&&(w, c)| c > 0 && (w as usize) < model.vocab_size())
        .filter(|&&(w, _)| a.row(w as usize).iter().any(|&x| x > T::zero()))
        .map(|&(w, c)| (w as usize, T::lit(c as f64)))
        .collect();
    if row.iter().any(|&(w, _)| w as usize >= model.vocab_size()) {
        return Err(Error::DimensionMismatch { left: model.vocab_size(), right: row.len() });
    }
    let n: T = words.iter().map(|w| w.1).sum();
    if words.is_empty() || !(n > T::zero()) {
        return Ok(uniform());
    }

    let alpha = T::lit(cfg.alpha);
    let tol = T::lit(cfg.tol);
    let mut gamma = vec![alpha + n / T::lit(k as f64); k];
    let mut expected = vec![T::zero(); k];
    let mut log_phi = vec![T::zero(); k];
    let mut elog = vec![T::zero(); k];
    let mut iterations = 0;
    let mut converged = false;

    while iterations < cfg.max_iters {
        for (e, &g) in elog.iter_mut().zip(&gamma) {
            *e = digamma(g);
        }
        expected.iter_mut().for_each(|x| *x = T::zero());
        for &(w, count) in &words {
            let arow = a.row(w);
            let mut max = T::neg_infinity();
            for ((lp, &aw), &e) in log_phi.iter_mut().zip(arow).zip(&elog) {
                *lp = if aw > T::zero() { aw.ln() + e } else { T::neg_infinity() };
                max = max.max(*lp);
            }
            let mut total = T::zero();
            for lp in log_phi.iter_mut() {
                *lp = (*lp - max).exp();
                total += *lp;
            }
            for (x, &p) in expected.iter_mut().zip(&log_phi) {
                *x += count * p / total;
            }
        }
        let mut delta = T::zero();
        for (g, &x) in gamma.iter_mut().zip(&expected) {
            let next = alpha + x;
            delta += (next - *g).abs();
            *g = next;
        }
        iterations += 1;
        if !delta.is_finite() {
            return Err(Error::NonFinite { context: format!("passage {passage}") });
        }
        if delta / T::lit(k as f64) < tol {
            converged = true;
            break;
        }
    }

    let total: T = expected.iter().copied().sum();
    if !(total > T::zero()) || !total.is_finite() {
        return Err(Error::NonFinite { context: format!("passage {passage}") });
    }
    let theta = expected.into_iter().map(|x| x / total).collect();
    Ok(DocTopicVector { passage, theta, iterations, converged, degenerate: false })
}

/// Infers every passage in parallel.
pub fn infer_all<T: Scalar>(
    counts: &DocTermCounts,
    model: &TopicModel<T>,
    cfg: &InferenceConfig,
) -> Result<Vec<DocTopicVector<T>>> {
    (0..counts.num_docs())
        .into_par_iter()
        .map(|d| infer_doc_topics(d, counts.row(d), model, cfg))
        .collect()
}

/// Top-S truncation of a topic vector, stored as sorted `(topic, weight)`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SparseTopicVector<T> {
    entries: Vec<(u32, T)>,
}

impl<T: Scalar> SparseTopicVector<T> {
    /// Keeps every non-zero component; no renormalization.
    pub fn from_dense(theta: &[T]) -> Self {
        Self {
            entries: theta
                .iter()
                .enumerate()
                .filter(|(_, &x)| x != T::zero())
                .map(|(k, &x)| (k as u32, x))
                .collect(),
        }
    }

    /// Entries sorted by topic index.
    pub fn entries(&self) -> &[(u32, T)] {
        &self.entries
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    /// Topic of largest weight, ties to the lower index.
    pub fn argmax(&self) -> Option<usize> {
        self.entries
            .iter()
            .fold(None::<(u32, T)>, |best, &(k, x)| match best {
                Some((_, bx)) if bx >= x => best,
                _ => Some((k, x)),
            })
            .map(|(k, _)| k as usize)
    }

    pub fn to_dense(&self, k: usize) -> Vec<T> {
        let mut out = vec![T::zero(); k];
        for &(i, x) in &self.entries {
            out[i as usize] = x;
        }
        out
    }
}

/// Keeps the `s` largest components (ties by lower topic index) and
/// renormalizes. Vectors whose support already fits are kept exactly.
pub fn sparsify<T: Scalar>(theta: &[T], s: usize) -> Result<SparseTopicVector<T>> {
    if s == 0 {
        return Err(Error::InvalidArgument("sparsification size must be at least 1".into()));
    }
    let full = SparseTopicVector::from_dense(theta);
    if full.len() <= s {
        return Ok(full);
    }
    let mut order: Vec<(u32, T)> = full.entries;
    order.sort_by(|a, b| b.1.partial_cmp(&a.1).unwrap_or(std::cmp::Ordering::Equal).then(a.0.cmp(&b.0)));
    order.truncate(s);
    order.sort_by_key(|e| e.0);
    let total: T = order.iter().map(|e| e.1).sum();
    for e in &mut order {
        e.1 /= total;
    }
    Ok(SparseTopicVector { entries: order })
}

/// Argmax topic of a dense vector, ties to the lower index.
pub fn argmax_topic<T: Scalar>(theta: &[T]) -> usize {
    let mut best = 0;
    for (k, &x) in theta.iter().enumerate() {
        if x > theta[best] {
            best = k;
        }
    }
    best
}

pub const THETA_ARTIFACT_KIND: &str = "theta";

/// Writes dense θ (D×K) plus per-passage diagnostics.
pub fn theta_to_artifact<T: Scalar>(docs: &[DocTopicVector<T>], k: usize, writer: ArtifactWriter) -> Result<Vec<u8>> {
    let mut data = Vec::with_capacity(docs.len() * k);
    for d in docs {
        if d.theta.len() != k {
            return Err(Error::DimensionMismatch { left: d.theta.len(), right: k });
        }
        data.extend_from_slice(&d.theta);
    }
    let iterations: Vec<u32> = docs.iter().map(|d| d.iterations as u32).collect();
    let flags: Vec<u32> = docs
        .iter()
        .map(|d| u32::from(d.converged) | (u32::from(d.degenerate) << 1))
        .collect();
    writer
        .meta("docs", docs.len())?
        .meta("k", k)?
        .scalars("theta", &data)
        .u32s("iterations", &iterations)
        .u32s("flags", &flags)
        .finish()
}

pub fn theta_from_artifact<T: Scalar>(a: &Artifact) -> Result<Vec<DocTopicVector<T>>> {
    a.expect_kind(THETA_ARTIFACT_KIND)?;
    let d: usize = a.meta("docs")?;
    let k: usize = a.meta("k")?;
    let theta = Matrix::from_vec(d, k, a.scalars("theta")?)
        .ok_or_else(|| Error::Artifact("theta has wrong length".into()))?;
    let iterations = a.u32s("iterations")?;
    let flags = a.u32s("flags")?;
    if iterations.len() != d || flags.len() != d {
        return Err(Error::Artifact("theta diagnostics have wrong length".into()));
    }
    Ok((0..d)
        .map(|i| DocTopicVector {
            passage: i,
            theta: theta.row(i).to_vec(),
            iterations: iterations[i] as usize,
            converged: flags[i] & 1 != 0,
            degenerate: flags[i] & 2 != 0,
        })
        .collect())
}
