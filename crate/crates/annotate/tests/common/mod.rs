use xref_core::candidates::{CandidatePair, CandidateSet, Method};
use xref_core::corpus::{Corpus, Passage, PassageId};

pub fn corpus() -> Corpus {
    let texts = [
        "He will swallow up death in victory",
        "Death is swallowed up in victory over the grave",
        "In the beginning God created the heaven and the earth",
        "In the beginning God created the heaven and the earth",
        "The Lord is my shepherd",
    ];
    Corpus::from_passages(
        texts
            .iter()
            .enumerate()
            .map(|(i, t)| Passage { id: PassageId::verse("Ps", 23, i as u32 + 1), text: (*t).into() })
            .collect(),
    )
    .unwrap()
}

pub fn candidates() -> CandidateSet<f64> {
    let pairs = [(0, 1, 0.1), (2, 3, 0.2), (1, 0, 0.3), (4, 0, 0.4)];
    CandidateSet::new(Method::Cosine, 5, pairs.iter().map(|&(from, to, score)| CandidatePair { from, to, score }).collect())
        .unwrap()
}
