//! Seeded corpora drawn from a known topic model with planted anchor words.

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Gamma, WeightedAliasIndex};
use serde::{Deserialize, Serialize};

use crate::corpus::{Corpus, DocTermCounts, Passage, PassageId};
use crate::{Error, Matrix, Result};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PlantedConfig {
    pub topics: usize,
    pub vocab: usize,
    pub docs: usize,
    /// p(anchor_k | topic k); the anchor has zero mass elsewhere.
    pub anchor_mass: f64,
    /// Dirichlet concentration for each topic's non-anchor words.
    pub word_concentration: f64,
    /// Symmetric Dirichlet concentration for document proportions.
    pub doc_concentration: f64,
    /// Inclusive token-count range per document.
    pub min_len: usize,
    pub max_len: usize,
    pub seed: u64,
}

impl Default for PlantedConfig {
    fn default() -> Self {
        Self {
            topics: 10,
            vocab: 200,
            docs: 500,
            anchor_mass: 0.3,
            word_concentration: 0.5,
            doc_concentration: 0.05,
            min_len: 300,
            max_len: 500,
            seed: 42,
        }
    }
}

#[derive(Debug, Clone)]
pub struct PlantedCorpus {
    /// V×K, columns are p(word | topic).
    pub topic_word: Matrix<f64>,
    /// Anchor word of each topic.
    pub anchors: Vec<usize>,
    /// Document proportions that generated each document.
    pub theta: Vec<Vec<f64>>,
    /// Token ids per document.
    pub docs: Vec<Vec<u32>>,
    /// Surface form of each word id.
    pub words: Vec<String>,
}

/// A word that passes the default tokenizer unchanged: lowercase,
/// consonants only, never ending in `s`, not a stopword.
pub fn synthetic_word(i: usize) -> String {
    const LETTERS: &[u8] = b"bcdfghjklmnpqrtvwxz";
    let mut s = String::from("x");
    let mut n = i;
    loop {
        s.push(LETTERS[n % LETTERS.len()] as char);
        n /= LETTERS.len();
        if n == 0 {
            break;
        }
    }
    s.push('k');
    s
}

fn dirichlet(rng: &mut ChaCha8Rng, alpha: f64, n: usize) -> Vec<f64> {
    let g = Gamma::new(alpha, 1.0).expect("positive concentration");
    loop {
        let v: Vec<f64> = (0..n).map(|_| g.sample(rng)).collect();
        let s: f64 = v.iter().sum();
        if s > 0.0 {
            return v.into_iter().map(|x| x / s).collect();
        }
    }
}

pub fn planted_corpus(cfg: &PlantedConfig) -> Result<PlantedCorpus> {
    let (k, v) = (cfg.topics, cfg.vocab);
    if k == 0 || v <= k || cfg.docs == 0 || cfg.min_len == 0 || cfg.min_len > cfg.max_len {
        return Err(Error::InvalidArgument("planted corpus needs K ≥ 1, V > K, D ≥ 1, 1 ≤ min_len ≤ max_len".into()));
    }
    if !(cfg.anchor_mass > 0.0 && cfg.anchor_mass <= 1.0) || !(cfg.word_concentration > 0.0) || !(cfg.doc_concentration > 0.0)
    {
        return Err(Error::InvalidArgument("masses and concentrations must be positive".into()));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    let mut ids: Vec<usize> = (0..v).collect();
    ids.shuffle(&mut rng);
    let anchors = ids[..k].to_vec();
    let others = &ids[k..];

    let mut a = Matrix::zeros(v, k);
    for (t, &anchor) in anchors.iter().enumerate() {
        a[(anchor, t)] = cfg.anchor_mass;
        let rest = dirichlet(&mut rng, cfg.word_concentration, others.len());
        for (&w, p) in others.iter().zip(rest) {
            a[(w, t)] = (1.0 - cfg.anchor_mass) * p;
        }
    }
    let samplers: Vec<WeightedAliasIndex<f64>> = (0..k)
        .map(|t| WeightedAliasIndex::new((0..v).map(|w| a[(w, t)]).collect()).expect("valid topic column"))
        .collect();

    let mut theta = Vec::with_capacity(cfg.docs);
    let mut docs = Vec::with_capacity(cfg.docs);
    for _ in 0..cfg.docs {
        let th = dirichlet(&mut rng, cfg.doc_concentration, k);
        let pick = WeightedAliasIndex::new(th.clone()).expect("valid proportions");
        let n = rng.gen_range(cfg.min_len..=cfg.max_len);
        let tokens = (0..n).map(|_| samplers[pick.sample(&mut rng)].sample(&mut rng) as u32).collect();
        theta.push(th);
        docs.push(tokens);
    }
    Ok(PlantedCorpus { topic_word: a, anchors, theta, docs, words: (0..v).map(synthetic_word).collect() })
}

impl PlantedCorpus {
    /// Counts over the generator's own word ids.
    pub fn counts(&self) -> DocTermCounts {
        DocTermCounts::from_token_lists(self.words.len(), &self.docs).expect("token ids within vocabulary")
    }

    /// Text rendering with verse-style ids, 50 verses per chapter.
    pub fn corpus(&self) -> Corpus {
        let passages = self
            .docs
            .iter()
            .enumerate()
            .map(|(d, toks)| Passage {
                id: PassageId::verse("Gen", (d / 50 + 1) as u32, (d % 50 + 1) as u32),
                text: toks.iter().map(|&t| self.words[t as usize].as_str()).collect::<Vec<_>>().join(" "),
            })
            .collect();
        Corpus::from_passages(passages).expect("generated ids are unique")
    }
}

/// Minimum-cost assignment of rows to columns of a square cost matrix,
/// by dynamic programming over column subsets. Returns `col[row]`.
pub fn optimal_matching(cost: &Matrix<f64>) -> Result<Vec<usize>> {
    let n = cost.rows();
    if cost.cols() != n || n > 20 {
        return Err(Error::InvalidArgument("matching needs a square matrix with at most 20 rows".into()));
    }
    let full = 1usize << n;
    let mut best = vec![f64::INFINITY; full];
    let mut choice = vec![usize::MAX; full];
    best[0] = 0.0;
    for mask in 0..full {
        let row = mask.count_ones() as usize;
        if row >= n || !best[mask].is_finite() {
            continue;
        }
        for col in 0..n {
            if mask & (1 << col) == 0 {
                let next = mask | (1 << col);
                let c = best[mask] + cost[(row, col)];
                if c < best[next] {
                    best[next] = c;
                    choice[next] = col;
                }
            }
        }
    }
    let mut out = vec![0; n];
    let mut mask = full - 1;
    for row in (0..n).rev() {
        let col = choice[mask];
        out[row] = col;
        mask &= !(1 << col);
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::corpus::{tokenize, TokenizerConfig};

    #[test]
    fn words_survive_tokenizer() {
        let cfg = TokenizerConfig::default();
        for i in 0..2000 {
            let w = synthetic_word(i);
            assert_eq!(tokenize(&w, &cfg), [w.clone()]);
        }
        let set: std::collections::HashSet<_> = (0..2000).map(synthetic_word).collect();
        assert_eq!(set.len(), 2000);
    }

    #[test]
    fn generator_shape_and_determinism() {
        let cfg = PlantedConfig { docs: 50, ..Default::default() };
        let a = planted_corpus(&cfg).unwrap();
        let b = planted_corpus(&cfg).unwrap();
        assert_eq!(a.docs, b.docs);
        assert_eq!(a.topic_word, b.topic_word);
        for t in 0..cfg.topics {
            let col: f64 = (0..cfg.vocab).map(|w| a.topic_word[(w, t)]).sum();
            assert!((col - 1.0).abs() < 1e-12);
            for (s, &anchor) in a.anchors.iter().enumerate() {
                let expect = if s == t { cfg.anchor_mass } else { 0.0 };
                assert_eq!(a.topic_word[(anchor, t)], expect);
            }
        }
        assert!(a.docs.iter().all(|d| (cfg.min_len..=cfg.max_len).contains(&d.len())));
        let other = planted_corpus(&PlantedConfig { seed: 1, ..cfg }).unwrap();
        assert_ne!(other.docs, a.docs);
        assert_eq!(a.corpus().len(), 50);
    }

    #[test]
    fn matching_finds_optimum() {
        let cost = Matrix::from_rows(&[vec![4.0, 1.0, 3.0], vec![2.0, 0.0, 5.0], vec![3.0, 2.0, 2.0]]).unwrap();
        let m = optimal_matching(&cost).unwrap();
        assert_eq!(m, [1, 0, 2]);
        // Exhaustive check over all permutations.
        let perms = [[0, 1, 2], [0, 2, 1], [1, 0, 2], [1, 2, 0], [2, 0, 1], [2, 1, 0]];
        let total = |p: &[usize]| p.iter().enumerate().map(|(r, &c)| cost[(r, c)]).sum::<f64>();
        let min = perms.iter().map(|p| total(p)).fold(f64::INFINITY, f64::min);
        assert_eq!(total(&m), min);
    }
}
