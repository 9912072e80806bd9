//! Word co-occurrence statistics.
//!
//! For every passage with n_d ≥ 2 tokens, each ordered pair of distinct token
//! positions contributes `1 / (n_d (n_d − 1))`; passage contributions are then
//! averaged uniformly. In matrix form
//!
//! ```text
//! Q = (1/D') Σ_d (w_d w_dᵀ − diag(w_d)) / (n_d (n_d − 1))
//! ```
//!
//! so Q is symmetric, non-negative and sums to one.

use rayon::prelude::*;

use crate::artifact::{Artifact, ArtifactWriter};
use crate::corpus::DocTermCounts;
use crate::{Error, Matrix, Result, Scalar};

/// Joint co-occurrence matrix Q with its row-normalized form.
#[derive(Debug, Clone)]
pub struct CooccurrenceMatrix<T> {
    q: Matrix<T>,
    qbar: Matrix<T>,
    p_w: Vec<T>,
    excluded: Vec<usize>,
    docs_used: usize,
}

const ROW_BLOCK: usize = 32;

pub fn build_cooccurrence<T: Scalar>(counts: &DocTermCounts) -> Result<CooccurrenceMatrix<T>> {
    let v = counts.vocab_size();
    let docs: Vec<(usize, T)> = (0..counts.num_docs())
        .filter(|&d| counts.doc_len(d) >= 2)
        .map(|d| {
            let n = counts.doc_len(d) as f64;
            (d, n * (n - 1.0))
        })
        .map(|(d, pairs)| (d, T::lit(pairs)))
        .collect();
    if docs.is_empty() {
        return Err(Error::NoCooccurrenceEvidence);
    }
    let used = T::lit(docs.len() as f64);

    // Each worker owns a block of rows and scans every passage in order, so
    // the summation order (and therefore every bit of Q) is independent of
    // the thread count.
    let mut q = Matrix::<T>::zeros(v, v);
    if v > 0 {
        q.as_mut_slice()
            .par_chunks_mut(ROW_BLOCK * v)
            .enumerate()
            .for_each(|(block, chunk)| {
                let lo = (block * ROW_BLOCK) as u32;
                let hi = lo + (chunk.len() / v) as u32;
                for &(d, pairs) in &docs {
                    let row = counts.row(d);
                    for &(i, wi) in row.iter().filter(|e| e.0 >= lo && e.0 < hi) {
                        let out = &mut chunk[(i - lo) as usize * v..(i - lo + 1) as usize * v];
                        let wi = T::lit(wi as f64);
                        for &(j, wj) in row {
                            let wj = T::lit(wj as f64);
                            let joint = if i == j { wi * wj - wi } else { wi * wj };
                            out[j as usize] += joint / pairs;
                        }
                    }
                }
                for x in chunk.iter_mut() {
                    *x /= used;
                }
            });
    }
    Ok(CooccurrenceMatrix::from_q(q, docs.len()))
}

/// Row-normalizes Q. Rows with zero mass are left at zero and reported in
/// the excluded set.
pub fn row_normalize<T: Scalar>(q: &Matrix<T>) -> (Matrix<T>, Vec<T>, Vec<usize>) {
    let v = q.rows();
    let p_w: Vec<T> = q.iter_rows().map(crate::scalar::sum).collect();
    let mut qbar = q.clone();
    let mut excluded = Vec::new();
    for (i, &p) in p_w.iter().enumerate() {
        if p > T::zero() {
            for x in qbar.row_mut(i) {
                *x /= p;
            }
        } else {
            excluded.push(i);
        }
    }
    debug_assert_eq!(qbar.rows(), v);
    (qbar, p_w, excluded)
}

impl<T: Scalar> CooccurrenceMatrix<T> {
    pub fn from_q(q: Matrix<T>, docs_used: usize) -> Self {
        let (qbar, p_w, excluded) = row_normalize(&q);
        Self { q, qbar, p_w, excluded, docs_used }
    }

    pub fn vocab_size(&self) -> usize {
        self.q.rows()
    }

    pub fn q(&self) -> &Matrix<T> {
        &self.q
    }

    pub fn qbar(&self) -> &Matrix<T> {
        &self.qbar
    }

    /// Marginal word probabilities p_w (row sums of Q).
    pub fn p_w(&self) -> &[T] {
        &self.p_w
    }

    /// Word indices whose Q row is all zero.
    pub fn excluded(&self) -> &[usize] {
        &self.excluded
    }

    pub fn is_excluded(&self, word: usize) -> bool {
        self.excluded.binary_search(&word).is_ok()
    }

    /// Number of passages that contributed (n_d ≥ 2).
    pub fn docs_used(&self) -> usize {
        self.docs_used
    }

    pub const ARTIFACT_KIND: &'static str = "cooccurrence";

    pub fn to_artifact(&self, writer: ArtifactWriter) -> Result<Vec<u8>> {
        let excluded: Vec<u32> = self.excluded.iter().map(|&i| i as u32).collect();
        writer
            .meta("vocab_size", self.vocab_size())?
            .meta("docs_used", self.docs_used)?
            .u32s("excluded", &excluded)
            .scalars("q", self.q.as_slice())
            .finish()
    }

    pub fn from_artifact(a: &Artifact) -> Result<Self> {
        a.expect_kind(Self::ARTIFACT_KIND)?;
        let v: usize = a.meta("vocab_size")?;
        let q = Matrix::from_vec(v, v, a.scalars("q")?)
            .ok_or_else(|| Error::Artifact("Q has wrong length".into()))?;
        let m = Self::from_q(q, a.meta("docs_used")?);
        let stored: Vec<usize> = a.u32s("excluded")?.into_iter().map(|i| i as usize).collect();
        if stored != m.excluded {
            return Err(Error::Artifact("excluded-word set does not match Q".into()));
        }
        Ok(m)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;

    fn counts(v: usize, docs: &[&[u32]]) -> DocTermCounts {
        let docs: Vec<Vec<u32>> = docs.iter().map(|d| d.to_vec()).collect();
        DocTermCounts::from_token_lists(v, &docs).unwrap()
    }

    #[test]
    fn single_document() {
        // tokens [a, a, b]: ordered distinct-position pairs aa×2, ab×2, ba×2 over 6.
        let m = build_cooccurrence::<f64>(&counts(2, &[&[0, 0, 1]])).unwrap();
        let expected = Matrix::from_rows(&[vec![1.0 / 3.0, 1.0 / 3.0], vec![1.0 / 3.0, 0.0]]).unwrap();
        assert!(m.q().max_abs_diff(&expected).unwrap() < 1e-15);
        assert_abs_diff_eq!(m.p_w()[0], 2.0 / 3.0, epsilon = 1e-15);
    }

    #[test]
    fn short_documents_are_skipped() {
        assert!(matches!(
            build_cooccurrence::<f64>(&counts(2, &[&[0]])),
            Err(Error::NoCooccurrenceEvidence)
        ));
        let with = build_cooccurrence::<f64>(&counts(3, &[&[0, 1], &[2], &[]])).unwrap();
        assert_eq!(with.docs_used(), 1);
        assert_eq!(with.excluded(), [2]);
        assert!(with.is_excluded(2));
    }

    #[test]
    fn identical_documents_average() {
        let one = build_cooccurrence::<f64>(&counts(3, &[&[0, 1, 1, 2]])).unwrap();
        let two = build_cooccurrence::<f64>(&counts(3, &[&[0, 1, 1, 2], &[2, 1, 0, 1]])).unwrap();
        assert!(one.q().max_abs_diff(two.q()).unwrap() < 1e-15);
    }

    #[test]
    fn row_normalization() {
        let q = Matrix::from_rows(&[vec![0.2, 0.2, 0.0], vec![0.2, 0.4, 0.0], vec![0.0; 3]]).unwrap();
        let (qbar, p_w, excluded) = row_normalize(&q);
        assert_abs_diff_eq!(qbar[(0, 0)], 0.5);
        assert_abs_diff_eq!(qbar[(0, 1)], 0.5);
        assert_abs_diff_eq!(p_w[1], 0.6000000000000001);
        assert_eq!(excluded, [2]);
        assert_eq!(qbar.row(2), [0.0; 3]);
    }

    #[test]
    fn invariants_on_a_mixed_corpus() {
        let c = counts(5, &[&[0, 1, 2, 2, 3], &[3, 3, 3], &[4, 0], &[1], &[0, 1, 2, 3, 4, 4, 4]]);
        let m = build_cooccurrence::<f64>(&c).unwrap();
        let q = m.q();
        assert_eq!(q.max_abs_diff(&q.transpose()).unwrap(), 0.0);
        let total: f64 = q.as_slice().iter().sum();
        assert_abs_diff_eq!(total, 1.0, epsilon = 1e-12);
        assert!(q.as_slice().iter().all(|&x| x >= 0.0));
        for i in 0..5 {
            let s: f64 = m.qbar().row(i).iter().sum();
            assert_abs_diff_eq!(s, 1.0, epsilon = 1e-12);
        }
    }

    #[test]
    fn single_precision() {
        let m = build_cooccurrence::<f32>(&counts(2, &[&[0, 0, 1]])).unwrap();
        assert_abs_diff_eq!(m.q()[(0, 1)], 1.0 / 3.0, epsilon = 1e-6);
    }

    #[test]
    fn artifact_roundtrip() {
        let c = counts(4, &[&[0, 1, 2], &[1, 1], &[3]]);
        let m = build_cooccurrence::<f64>(&c).unwrap();
        let bytes = m.to_artifact(ArtifactWriter::new(CooccurrenceMatrix::<f64>::ARTIFACT_KIND)).unwrap();
        let back = CooccurrenceMatrix::<f64>::from_artifact(&Artifact::decode(bytes).unwrap()).unwrap();
        assert_eq!(back.q(), m.q());
        assert_eq!(back.excluded(), [3]);
        assert_eq!(back.docs_used(), 2);
    }
}
