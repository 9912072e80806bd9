//! Topic recovery from anchors.
//!
//! Each word's Q̄ row is written as a convex combination of the anchor
//! vectors, `C_i = argmin_{c ∈ Δ_K} ‖Q̄_i − c S‖²`, solved by exponentiated
//! gradient. Bayes' rule then turns p(topic | word) into the topic-word
//! matrix: `A_ik ∝ C_ik p_w_i`, columns normalized.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::anchors::{AnchorProvenance, AnchorSet};
use crate::artifact::{Artifact, ArtifactWriter};
use crate::cooccurrence::CooccurrenceMatrix;
use crate::scalar::dot;
use crate::{Error, Matrix, Result, Scalar};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SolverConfig {
    /// Initial exponentiated-gradient step. The step doubles after every
    /// accepted update and halves on every rejected trial.
    pub step_size: f64,
    /// Stop once the simplex duality gap `c·g − min_k g_k` falls below this.
    pub tolerance: f64,
    pub max_iters: usize,
}

impl Default for SolverConfig {
    fn default() -> Self {
        Self { step_size: 50.0, tolerance: 1e-7, max_iters: 500 }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SimplexFit<T> {
    pub weights: Vec<T>,
    /// Final value of ‖q − c S‖².
    pub objective: T,
    pub iterations: usize,
    pub converged: bool,
}

/// Minimizes `f(c) = ‖q‖² − 2 c·b + cᵀ G c` over the probability simplex,
/// where `G = S Sᵀ` (symmetric) and `b = S q`.
///
/// Starts from the uniform point. Each multiplicative update is accepted only
/// if it does not increase `f`; otherwise the step is halved. The accepted
/// objective sequence is therefore non-increasing. When `trace` is given, the
/// objective after every accepted iteration (preceded by the initial value)
/// is appended to it.
pub fn solve_simplex_least_squares<T: Scalar>(
    gram: &Matrix<T>,
    b: &[T],
    qq: T,
    cfg: &SolverConfig,
    mut trace: Option<&mut Vec<T>>,
) -> Result<SimplexFit<T>> {
    let k = b.len();
    if gram.rows() != k || gram.cols() != k {
        return Err(Error::DimensionMismatch { left: gram.rows(), right: k });
    }
    if k == 0 {
        return Err(Error::InvalidArgument("empty anchor set".into()));
    }
    let two = T::lit(2.0);
    let first_step = T::lit(cfg.step_size);
    let max_step = T::lit(1e12);
    let tol = T::lit(cfg.tolerance);
    let min_step = T::lit(1e-30);

    // G is symmetric, so G c accumulates the rows of G at non-zero weights.
    let gram_times = |c: &[T], out: &mut [T]| {
        out.iter_mut().for_each(|o| *o = T::zero());
        for (&cj, row) in c.iter().zip(gram.iter_rows()) {
            if cj != T::zero() {
                for (o, &g) in out.iter_mut().zip(row) {
                    *o += cj * g;
                }
            }
        }
    };
    let objective = |c: &[T], gc: &[T]| qq - two * dot(c, b) + dot(c, gc);

    let mut c = vec![T::one() / T::lit(k as f64); k];
    let mut gc = vec![T::zero(); k];
    gram_times(&c, &mut gc);
    let mut f = objective(&c, &gc);
    if let Some(t) = trace.as_deref_mut() {
        t.push(f);
    }

    let mut grad = vec![T::zero(); k];
    let mut trial = vec![T::zero(); k];
    let mut trial_gc = vec![T::zero(); k];
    let mut step = first_step;
    let mut iterations = 0;
    let mut converged = false;

    while iterations < cfg.max_iters {
        for ((g, &x), &y) in grad.iter_mut().zip(&gc).zip(b) {
            *g = two * (x - y);
        }
        let gmin = grad.iter().copied().fold(T::infinity(), T::min);
        let gap = dot(&c, &grad) - gmin;
        if !gap.is_finite() {
            return Err(Error::NonFinite { context: "simplex solve".into() });
        }
        if gap <= tol {
            converged = true;
            break;
        }

        let accepted = loop {
            let mut total = T::zero();
            for ((t, &ci), &g) in trial.iter_mut().zip(&c).zip(&grad) {
                *t = ci * (-(step * (g - gmin))).exp();
                total += *t;
            }
            if total > T::zero() && total.is_finite() {
                trial.iter_mut().for_each(|t| *t /= total);
                gram_times(&trial, &mut trial_gc);
                let f_new = objective(&trial, &trial_gc);
                if f_new <= f {
                    f = f_new;
                    break true;
                }
            }
            step = step / two;
            if step < min_step {
                break false;
            }
        };
        if !accepted {
            // No representable step decreases f: stationary to working precision.
            converged = true;
            break;
        }
        std::mem::swap(&mut c, &mut trial);
        std::mem::swap(&mut gc, &mut trial_gc);
        step = (step * two).min(max_step);
        iterations += 1;
        if let Some(t) = trace.as_deref_mut() {
            t.push(f);
        }
    }
    Ok(SimplexFit { weights: c, objective: f, iterations, converged })
}

/// Recovered topic model.
#[derive(Debug, Clone, PartialEq)]
pub struct TopicModel<T> {
    /// V×K, column k is p(word | topic k).
    a: Matrix<T>,
    /// V×K, row i is p(topic | word i).
    c: Matrix<T>,
    topic_weights: Vec<T>,
    provenance: Vec<AnchorProvenance>,
    residuals: Vec<T>,
    iterations: Vec<u32>,
    /// Words without co-occurrence mass; their C row is uniform.
    flagged: Vec<usize>,
}

/// Column-normalizes `C_ik · p_i` into A and the topic marginals.
fn bayes_columns<T: Scalar>(c: &Matrix<T>, p_w: &[T]) -> (Matrix<T>, Vec<T>) {
    let (v, k) = (c.rows(), c.cols());
    let mut a = Matrix::zeros(v, k);
    let mut mass = vec![T::zero(); k];
    for i in 0..v {
        for j in 0..k {
            let x = c[(i, j)] * p_w[i];
            a[(i, j)] = x;
            mass[j] += x;
        }
    }
    for j in 0..k {
        if mass[j] > T::zero() {
            for i in 0..v {
                a[(i, j)] /= mass[j];
            }
        } else {
            // A topic no word loads on: spread it uniformly so the column is a distribution.
            for i in 0..v {
                a[(i, j)] = T::one() / T::lit(v as f64);
            }
        }
    }
    let total: T = mass.iter().copied().sum();
    let weights = if total > T::zero() {
        mass.iter().map(|&m| m / total).collect()
    } else {
        vec![T::one() / T::lit(k as f64); k]
    };
    (a, weights)
}

pub fn recover_topics<T: Scalar>(
    cooc: &CooccurrenceMatrix<T>,
    anchors: &AnchorSet<T>,
    solver: &SolverConfig,
) -> Result<TopicModel<T>> {
    let s = anchors.vectors();
    let (k, v) = (s.rows(), s.cols());
    if v != cooc.vocab_size() {
        return Err(Error::DimensionMismatch { left: v, right: cooc.vocab_size() });
    }
    for (j, row) in s.iter_rows().enumerate() {
        if !row.iter().any(|&x| x > T::zero()) {
            return Err(Error::ZeroAnchor { anchor: j });
        }
    }

    let mut gram = Matrix::zeros(k, k);
    gram.as_mut_slice().par_chunks_mut(k).enumerate().for_each(|(i, out)| {
        for (j, o) in out.iter_mut().enumerate() {
            *o = dot(s.row(i), s.row(j));
        }
    });

    let st = s.transpose();
    let qbar = cooc.qbar();
    let p_w = cooc.p_w();
    let uniform = T::one() / T::lit(k as f64);
    let fits: Vec<Result<(Vec<T>, T, u32, bool)>> = (0..v)
        .into_par_iter()
        .map(|i| {
            if cooc.is_excluded(i) || !(p_w[i] > T::zero()) {
                return Ok((vec![uniform; k], T::zero(), 0, true));
            }
            let q = qbar.row(i);
            let mut b = vec![T::zero(); k];
            for (w, &qw) in q.iter().enumerate() {
                if qw != T::zero() {
                    for (bj, &x) in b.iter_mut().zip(st.row(w)) {
                        *bj += qw * x;
                    }
                }
            }
            let fit = solve_simplex_least_squares(&gram, &b, dot(q, q), solver, None)
                .map_err(|_| Error::NonFinite { context: format!("word {i}") })?;
            if fit.weights.iter().any(|x| !x.is_finite()) || !fit.objective.is_finite() {
                return Err(Error::NonFinite { context: format!("word {i}") });
            }
            Ok((fit.weights, fit.objective.max(T::zero()).sqrt(), fit.iterations as u32, false))
        })
        .collect();

    let mut c = Matrix::zeros(v, k);
    let mut residuals = Vec::with_capacity(v);
    let mut iterations = Vec::with_capacity(v);
    let mut flagged = Vec::new();
    for (i, fit) in fits.into_iter().enumerate() {
        let (w, r, it, flag) = fit?;
        c.row_mut(i).copy_from_slice(&w);
        residuals.push(r);
        iterations.push(it);
        if flag {
            flagged.push(i);
        }
    }
    let (a, topic_weights) = bayes_columns(&c, p_w);
    Ok(TopicModel {
        a,
        c,
        topic_weights,
        provenance: anchors.provenance().to_vec(),
        residuals,
        iterations,
        flagged,
    })
}

/// `‖Q̄_i − C_i S‖₂` for every word, computed directly.
pub fn per_word_residual<T: Scalar>(
    model: &TopicModel<T>,
    anchors: &AnchorSet<T>,
    cooc: &CooccurrenceMatrix<T>,
) -> Result<Vec<T>> {
    let s = anchors.vectors();
    if s.rows() != model.k() || s.cols() != model.vocab_size() || cooc.vocab_size() != model.vocab_size() {
        return Err(Error::DimensionMismatch { left: s.cols(), right: model.vocab_size() });
    }
    Ok((0..model.vocab_size())
        .into_par_iter()
        .map(|i| {
            let mut r = cooc.qbar().row(i).to_vec();
            for (j, &cij) in model.c.row(i).iter().enumerate() {
                r.iter_mut().zip(s.row(j)).for_each(|(x, &y)| *x -= cij * y);
            }
            dot(&r, &r).sqrt()
        })
        .collect())
}

impl<T: Scalar> TopicModel<T> {
    /// Builds a model from a known topic-word matrix and topic marginals,
    /// deriving C by Bayes' rule.
    pub fn from_topic_word(a: Matrix<T>, topic_weights: Vec<T>) -> Result<Self> {
        let (v, k) = (a.rows(), a.cols());
        if topic_weights.len() != k {
            return Err(Error::DimensionMismatch { left: topic_weights.len(), right: k });
        }
        let mut c = Matrix::zeros(v, k);
        let mut flagged = Vec::new();
        for i in 0..v {
            let joint: Vec<T> = (0..k).map(|j| a[(i, j)] * topic_weights[j]).collect();
            let p: T = joint.iter().copied().sum();
            if p > T::zero() {
                c.row_mut(i).iter_mut().zip(&joint).for_each(|(x, &y)| *x = y / p);
            } else {
                c.row_mut(i).iter_mut().for_each(|x| *x = T::one() / T::lit(k as f64));
                flagged.push(i);
            }
        }
        Ok(Self {
            a,
            c,
            topic_weights,
            provenance: Vec::new(),
            residuals: vec![T::zero(); v],
            iterations: vec![0; v],
            flagged,
        })
    }

    pub fn k(&self) -> usize {
        self.a.cols()
    }

    pub fn vocab_size(&self) -> usize {
        self.a.rows()
    }

    pub fn topic_word(&self) -> &Matrix<T> {
        &self.a
    }

    pub fn word_topic(&self) -> &Matrix<T> {
        &self.c
    }

    pub fn topic_weights(&self) -> &[T] {
        &self.topic_weights
    }

    pub fn provenance(&self) -> &[AnchorProvenance] {
        &self.provenance
    }

    pub fn residuals(&self) -> &[T] {
        &self.residuals
    }

    pub fn iterations(&self) -> &[u32] {
        &self.iterations
    }

    pub fn flagged(&self) -> &[usize] {
        &self.flagged
    }

    /// The `n` most probable words of topic `k`, ties by lower word index.
    pub fn top_words(&self, topic: usize, n: usize) -> Vec<(usize, T)> {
        let mut col: Vec<(usize, T)> = (0..self.vocab_size()).map(|i| (i, self.a[(i, topic)])).collect();
        col.sort_by(|x, y| y.1.partial_cmp(&x.1).unwrap_or(std::cmp::Ordering::Equal).then(x.0.cmp(&y.0)));
        col.truncate(n);
        col
    }

    pub const ARTIFACT_KIND: &'static str = "topics";

    pub fn to_artifact(&self, writer: ArtifactWriter) -> Result<Vec<u8>> {
        let flagged: Vec<u32> = self.flagged.iter().map(|&i| i as u32).collect();
        writer
            .meta("k", self.k())?
            .meta("vocab_size", self.vocab_size())?
            .meta("provenance", &self.provenance)?
            .scalars("topic_word", self.a.as_slice())
            .scalars("word_topic", self.c.as_slice())
            .scalars("topic_weights", &self.topic_weights)
            .scalars("residuals", &self.residuals)
            .u32s("iterations", &self.iterations)
            .u32s("flagged", &flagged)
            .finish()
    }

    pub fn from_artifact(art: &Artifact) -> Result<Self> {
        art.expect_kind(Self::ARTIFACT_KIND)?;
        let k: usize = art.meta("k")?;
        let v: usize = art.meta("vocab_size")?;
        let bad = || Error::Artifact("topic model has wrong shape".into());
        Ok(Self {
            a: Matrix::from_vec(v, k, art.scalars("topic_word")?).ok_or_else(bad)?,
            c: Matrix::from_vec(v, k, art.scalars("word_topic")?).ok_or_else(bad)?,
            topic_weights: art.scalars("topic_weights")?,
            provenance: art.meta("provenance")?,
            residuals: art.scalars("residuals")?,
            iterations: art.u32s("iterations")?,
            flagged: art.u32s("flagged")?.into_iter().map(|i| i as usize).collect(),
        })
    }
}
