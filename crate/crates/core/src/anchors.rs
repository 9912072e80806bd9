//! Anchor selection.
//!
//! Two strategies produce the K anchor vectors that span the topic space:
//!
//! * [`gram_schmidt_anchors`] greedily picks word rows of Q̄ that are
//!   farthest from the span of the rows already chosen.
//! * [`tandem_anchors`] seeds each anchor from a randomly drawn passage,
//!   combining the Q̄ rows of its words with an element-wise harmonic mean.

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::artifact::{Artifact, ArtifactWriter};
use crate::cooccurrence::CooccurrenceMatrix;
use crate::corpus::DocTermCounts;
use crate::scalar::dot;
use crate::{Error, Matrix, Result, Scalar};

/// Zero guard used by the harmonic mean.
pub const HARMONIC_EPS: f64 = 1e-10;

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case")]
pub enum AnchorProvenance {
    /// A single anchor word.
    Word { word: usize },
    /// A tandem anchor built from the listed words of one passage.
    Passage { passage: usize, words: Vec<usize> },
}

#[derive(Debug, Clone, PartialEq)]
pub struct AnchorSet<T> {
    vectors: Matrix<T>,
    provenance: Vec<AnchorProvenance>,
    candidate_min_df: Option<u32>,
    /// Residual norm of each Gram-Schmidt pick (empty for tandem anchors).
    residual_norms: Vec<T>,
}

impl<T: Scalar> AnchorSet<T> {
    /// Validates and assembles an anchor set.
    pub fn new(vectors: Matrix<T>, provenance: Vec<AnchorProvenance>, candidate_min_df: Option<u32>) -> Result<Self> {
        if vectors.rows() != provenance.len() {
            return Err(Error::DimensionMismatch { left: vectors.rows(), right: provenance.len() });
        }
        for (k, row) in vectors.iter_rows().enumerate() {
            if !row.iter().any(|&x| x > T::zero()) {
                return Err(Error::ZeroAnchor { anchor: k });
            }
        }
        let mut words: Vec<usize> = Vec::new();
        let mut passages: Vec<usize> = Vec::new();
        for p in &provenance {
            match p {
                AnchorProvenance::Word { word } => words.push(*word),
                AnchorProvenance::Passage { passage, .. } => passages.push(*passage),
            }
        }
        for list in [&mut words, &mut passages] {
            let n = list.len();
            list.sort_unstable();
            list.dedup();
            if list.len() != n {
                return Err(Error::InvalidArgument("anchor provenance is not distinct".into()));
            }
        }
        Ok(Self { vectors, provenance, candidate_min_df, residual_norms: Vec::new() })
    }

    pub fn k(&self) -> usize {
        self.vectors.rows()
    }

    /// K×V matrix whose rows are the anchor vectors.
    pub fn vectors(&self) -> &Matrix<T> {
        &self.vectors
    }

    pub fn provenance(&self) -> &[AnchorProvenance] {
        &self.provenance
    }

    pub fn candidate_min_df(&self) -> Option<u32> {
        self.candidate_min_df
    }

    pub fn residual_norms(&self) -> &[T] {
        &self.residual_norms
    }

    /// Anchor word indices when every anchor is a single word.
    pub fn anchor_words(&self) -> Option<Vec<usize>> {
        self.provenance
            .iter()
            .map(|p| match p {
                AnchorProvenance::Word { word } => Some(*word),
                AnchorProvenance::Passage { .. } => None,
            })
            .collect()
    }

    pub const ARTIFACT_KIND: &'static str = "anchors";

    pub fn to_artifact(&self, writer: ArtifactWriter) -> Result<Vec<u8>> {
        writer
            .meta("k", self.k())?
            .meta("vocab_size", self.vectors.cols())?
            .meta("provenance", &self.provenance)?
            .meta("candidate_min_df", self.candidate_min_df)?
            .scalars("vectors", self.vectors.as_slice())
            .scalars("residual_norms", &self.residual_norms)
            .finish()
    }

    pub fn from_artifact(a: &Artifact) -> Result<Self> {
        a.expect_kind(Self::ARTIFACT_KIND)?;
        let k: usize = a.meta("k")?;
        let v: usize = a.meta("vocab_size")?;
        let vectors = Matrix::from_vec(k, v, a.scalars("vectors")?)
            .ok_or_else(|| Error::Artifact("anchor matrix has wrong length".into()))?;
        let mut set = Self::new(vectors, a.meta("provenance")?, a.meta("candidate_min_df")?)?;
        set.residual_norms = a.scalars("residual_norms")?;
        Ok(set)
    }
}

/// Pivoted Gram-Schmidt anchor selection on the rows of Q̄.
///
/// Candidates are words with document frequency ≥ `candidate_min_df` and a
/// non-zero Q row. At each step the candidate whose residual (component
/// orthogonal to the chosen rows) has the largest norm is selected, ties going
/// to the lower word index. The new basis direction is re-orthogonalized
/// against all previous directions before the residuals are updated.
pub fn gram_schmidt_anchors<T: Scalar>(
    cooc: &CooccurrenceMatrix<T>,
    k: usize,
    candidate_min_df: u32,
    doc_freqs: &[u32],
) -> Result<AnchorSet<T>> {
    let v = cooc.vocab_size();
    if doc_freqs.len() != v {
        return Err(Error::DimensionMismatch { left: doc_freqs.len(), right: v });
    }
    if k == 0 {
        return Err(Error::InvalidArgument("number of anchors must be at least 1".into()));
    }
    let candidates: Vec<usize> = (0..v)
        .filter(|&w| doc_freqs[w] >= candidate_min_df && !cooc.is_excluded(w))
        .collect();
    if candidates.len() < k {
        return Err(Error::InsufficientCandidates { needed: k, available: candidates.len() });
    }

    let qbar = cooc.qbar();
    let mut residual = Matrix::<T>::zeros(candidates.len(), v);
    for (r, &w) in candidates.iter().enumerate() {
        residual.row_mut(r).copy_from_slice(qbar.row(w));
    }
    let mut norms: Vec<T> = residual.iter_rows().map(|r| dot(r, r)).collect();
    let mut taken = vec![false; candidates.len()];
    let mut basis: Vec<Vec<T>> = Vec::with_capacity(k);
    let mut picks = Vec::with_capacity(k);
    let mut picked_norms = Vec::with_capacity(k);

    for _ in 0..k {
        let mut best: Option<usize> = None;
        for (r, &n) in norms.iter().enumerate() {
            if !taken[r] && best.map_or(true, |b| n > norms[b]) {
                best = Some(r);
            }
        }
        let sel = best.expect("at least k candidates");
        taken[sel] = true;
        picks.push(candidates[sel]);
        picked_norms.push(norms[sel].sqrt());

        let mut dir = residual.row(sel).to_vec();
        for u in &basis {
            let c = dot(&dir, u);
            dir.iter_mut().zip(u).for_each(|(d, &x)| *d -= c * x);
        }
        let len = dot(&dir, &dir).sqrt();
        if !(len > T::zero()) || !len.is_finite() {
            // The remaining candidates all lie in the current span; later
            // picks fall back to the index tie rule.
            continue;
        }
        dir.iter_mut().for_each(|d| *d /= len);

        residual
            .as_mut_slice()
            .par_chunks_mut(v)
            .zip(norms.par_iter_mut())
            .zip(taken.par_iter())
            .for_each(|((row, norm), &done)| {
                if done {
                    return;
                }
                let c = dot(row, &dir);
                row.iter_mut().zip(&dir).for_each(|(x, &d)| *x -= c * d);
                *norm = dot(row, row);
            });
        basis.push(dir);
    }

    let mut vectors = Matrix::zeros(k, v);
    for (i, &w) in picks.iter().enumerate() {
        vectors.row_mut(i).copy_from_slice(qbar.row(w));
    }
    let provenance = picks.iter().map(|&word| AnchorProvenance::Word { word }).collect();
    let mut set = AnchorSet::new(vectors, provenance, Some(candidate_min_df))?;
    set.residual_norms = picked_norms;
    Ok(set)
}

/// Element-wise harmonic mean `m / Σ_i 1/max(x_ij, eps)` of `m` rows.
pub fn harmonic_mean<T: Scalar>(rows: &[&[T]], eps: T) -> Vec<T> {
    let Some(first) = rows.first() else {
        return Vec::new();
    };
    let m = T::lit(rows.len() as f64);
    let mut acc = vec![T::zero(); first.len()];
    for row in rows {
        for (a, &x) in acc.iter_mut().zip(row.iter()) {
            *a += T::one() / x.max(eps);
        }
    }
    acc.into_iter().map(|s| m / s).collect()
}

/// Tandem anchors seeded from randomly drawn passages.
///
/// Passages are visited in a seeded uniform random order (sampling without
/// replacement); a passage is eligible when it has at least `min_tokens`
/// distinct in-vocabulary words with non-zero co-occurrence mass. The first
/// `k` eligible passages each yield one anchor: the harmonic mean of their
/// words' Q̄ rows.
pub fn tandem_anchors<T: Scalar>(
    cooc: &CooccurrenceMatrix<T>,
    counts: &DocTermCounts,
    k: usize,
    seed: u64,
    min_tokens: usize,
) -> Result<AnchorSet<T>> {
    if k == 0 {
        return Err(Error::InvalidArgument("number of anchors must be at least 1".into()));
    }
    if counts.vocab_size() != cooc.vocab_size() {
        return Err(Error::DimensionMismatch { left: counts.vocab_size(), right: cooc.vocab_size() });
    }
    let words_of = |d: usize| -> Vec<usize> {
        counts
            .row(d)
            .iter()
            .map(|&(w, _)| w as usize)
            .filter(|&w| !cooc.is_excluded(w))
            .collect()
    };
    let eligible = |d: usize| words_of(d).len() >= min_tokens.max(1);

    let mut order: Vec<usize> = (0..counts.num_docs()).collect();
    order.shuffle(&mut ChaCha8Rng::seed_from_u64(seed));
    let chosen: Vec<usize> = order.into_iter().filter(|&d| eligible(d)).take(k).collect();
    if chosen.len() < k {
        return Err(Error::InsufficientPassages { needed: k, available: chosen.len() });
    }

    let qbar = cooc.qbar();
    let eps = T::lit(HARMONIC_EPS);
    let built: Vec<(Vec<T>, AnchorProvenance)> = chosen
        .par_iter()
        .map(|&d| {
            let words = words_of(d);
            let rows: Vec<&[T]> = words.iter().map(|&w| qbar.row(w)).collect();
            (harmonic_mean(&rows, eps), AnchorProvenance::Passage { passage: d, words })
        })
        .collect();
    let v = cooc.vocab_size();
    let mut vectors = Matrix::zeros(k, v);
    let mut provenance = Vec::with_capacity(k);
    for (i, (vec, prov)) in built.into_iter().enumerate() {
        vectors.row_mut(i).copy_from_slice(&vec);
        provenance.push(prov);
    }
    AnchorSet::new(vectors, provenance, None)
}
